//! Experiment configuration: TOML with a strict schema.

use crate::discretization::SlipCoefficient;
use crate::error::{Error, Result};
use crate::evolution::{Convection, SchemeConfig};
use crate::geometry::DomainSpec;
use crate::limits::GapTarget;
use crate::local_estimates::ProbeStudy;
use serde::{Deserialize, Serialize};

/// Experiment kinds, one per subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Mesh,
    Steady,
    ResolventScan,
    Evolve,
    Ns,
    Eigen,
    AlphaLimit,
    LocalEst,
    FullAcceptance,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Mesh => "mesh",
            ExperimentKind::Steady => "steady",
            ExperimentKind::ResolventScan => "resolvent-scan",
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::Ns => "ns",
            ExperimentKind::Eigen => "eigen",
            ExperimentKind::AlphaLimit => "alpha-limit",
            ExperimentKind::LocalEst => "local-est",
            ExperimentKind::FullAcceptance => "full-acceptance",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Directory name under the output root.
    pub name: Option<String>,
    /// Must match the subcommand when given.
    pub kind: Option<ExperimentKind>,
    #[serde(default)]
    pub seed: u64,
    pub domain: Option<DomainSpec>,
    pub slip: Option<SlipCoefficient>,
    #[serde(default)]
    pub mesh: MeshSection,
    pub data: Option<DataSection>,
    pub scheme: Option<SchemeSection>,
    pub scan: Option<ScanSection>,
    pub eigen: Option<EigenSection>,
    pub sweep: Option<SweepSection>,
    pub probes: Option<ProbeStudy>,
    pub acceptance: Option<AcceptanceSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// Edge length at level 0.
    pub h: f64,
    /// Each level halves `h`; `--level` overrides.
    #[serde(default)]
    pub level: u32,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection { h: 0.1, level: 0 }
    }
}

/// Gaussian vortex `psi = amplitude exp(-|x - center|^2 / sigma^2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub center: [f64; 2],
    pub sigma: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Multiply by a bump vanishing on the boundary with this width.
    pub vanishing_width: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    #[serde(default = "half")]
    pub theta: f64,
    pub dt: f64,
    pub t_final: f64,
}

fn half() -> f64 {
    0.5
}

impl SchemeSection {
    pub fn config(&self, convection: Convection) -> SchemeConfig {
        SchemeConfig { theta: self.theta, dt: self.dt, t_final: self.t_final, convection }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    /// Ray arguments in radians, each in `[0, pi/2]`.
    pub rays: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub points: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EigenSection {
    pub count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepModel {
    Steady,
    Resolvent,
    Stokes,
    Ns,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub model: SweepModel,
    pub alpha_min: f64,
    pub alpha_max: f64,
    #[serde(default = "two")]
    pub per_decade: usize,
    #[serde(default = "boundary")]
    pub target: GapTarget,
    #[serde(default = "two_f")]
    pub decades: f64,
    #[serde(default)]
    pub floor: f64,
    /// Spectral parameter of the resolvent model.
    #[serde(default)]
    pub lambda: [f64; 2],
}

fn two() -> usize {
    2
}

fn two_f() -> f64 {
    2.0
}

fn boundary() -> GapTarget {
    GapTarget::Boundary
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptanceSection {
    /// Criteria to run; all of 1 to 14 when absent.
    pub criteria: Option<Vec<u8>>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    /// Empty configuration; only `full-acceptance` runs without sections.
    pub fn empty() -> ExperimentConfig {
        ExperimentConfig::parse("").expect("empty config parses")
    }

    /// Check every section `kind` will read, before any solve.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(k) = self.kind {
            if k != kind {
                return Err(Error::Config(format!("config kind {} does not match subcommand {}", k.name(), kind.name())));
            }
        }
        if let Some(n) = &self.name {
            if n.is_empty() || n.contains(['/', '\\']) || n.starts_with('.') {
                return Err(Error::Config(format!("name {n:?} is not a plain directory name")));
            }
        }
        if !(self.mesh.h > 0.0) || !self.mesh.h.is_finite() {
            return Err(Error::Config(format!("mesh.h = {} must be positive", self.mesh.h)));
        }
        let need = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(Error::Config(format!("{} needs a [{section}] section", kind.name())))
            }
        };
        use ExperimentKind::*;
        if kind != FullAcceptance {
            need(self.domain.is_some(), "domain")?;
            self.domain.unwrap().validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if matches!(kind, Steady | ResolventScan | Evolve | Ns | Eigen | LocalEst) {
            need(self.slip.is_some(), "slip")?;
            self.slip.as_ref().unwrap().validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if matches!(kind, Steady | ResolventScan | Evolve | Ns | AlphaLimit) {
            need(self.data.is_some(), "data")?;
            let d = self.data.as_ref().unwrap();
            if !(d.sigma > 0.0) || !d.amplitude.is_finite() || d.vanishing_width.is_some_and(|w| !(w > 0.0)) {
                return Err(Error::Config("data.sigma and data.vanishing_width must be positive".into()));
            }
        }
        if matches!(kind, Evolve | Ns) {
            need(self.scheme.is_some(), "scheme")?;
            self.scheme.unwrap().config(Convection::None).validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if kind == ResolventScan {
            need(self.scan.is_some(), "scan")?;
            let s = self.scan.as_ref().unwrap();
            if s.rays.is_empty() || s.rays.iter().any(|a| !(0.0..=std::f64::consts::FRAC_PI_2).contains(a)) {
                return Err(Error::Config("scan.rays must be nonempty and within [0, pi/2]".into()));
            }
            if !(s.lambda_min > 0.0) || s.lambda_max < 1e3 * s.lambda_min || s.points < 2 {
                return Err(Error::Config("scan needs 0 < lambda_min, three decades and two points".into()));
            }
        }
        if kind == Eigen {
            need(self.eigen.is_some(), "eigen")?;
            let c = self.eigen.unwrap().count;
            if c == 0 || c > 50 {
                return Err(Error::Config(format!("eigen.count = {c} outside 1..=50")));
            }
        }
        if kind == AlphaLimit {
            need(self.sweep.is_some(), "sweep")?;
            let s = self.sweep.as_ref().unwrap();
            if !(s.alpha_min > 0.0) || s.alpha_max <= s.alpha_min || s.per_decade == 0 {
                return Err(Error::Config("sweep needs 0 < alpha_min < alpha_max and per_decade > 0".into()));
            }
            if matches!(s.model, SweepModel::Stokes | SweepModel::Ns) {
                need(self.scheme.is_some(), "scheme")?;
                self.scheme.unwrap().config(Convection::None).validate().map_err(|e| Error::Config(e.to_string()))?;
            }
            if s.model == SweepModel::Resolvent && s.lambda[0] < 0.0 {
                return Err(Error::Config("sweep.lambda needs a nonnegative real part".into()));
            }
        }
        if let Some(a) = &self.acceptance {
            if let Some(ids) = &a.criteria {
                if let Some(bad) = ids.iter().find(|i| !(1..=14).contains(*i)) {
                    return Err(Error::Config(format!("acceptance.criteria: {bad} outside 1..=14")));
                }
            }
        }
        Ok(())
    }
}
