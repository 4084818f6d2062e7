use crate::error::{Error, Result};
use crate::geometry::{BoundaryFrame, FramePoint, Mesh};
use serde::{Deserialize, Serialize};

/// One arc `[s_start, s_end)` of a chart carrying a constant slip value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlipArc {
    pub chart: String,
    pub s_start: f64,
    pub s_end: f64,
    pub value: f64,
}

/// Nonnegative slip coefficient on the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum SlipCoefficient {
    Constant { value: f64 },
    /// Arcs not covered by the table get `default`.
    Piecewise { arcs: Vec<SlipArc>, default: f64 },
    /// One value per boundary frame point.
    Sampled { values: Vec<f64> },
}

impl SlipCoefficient {
    pub fn constant(value: f64) -> SlipCoefficient {
        SlipCoefficient::Constant { value }
    }

    /// Check `alpha >= 0` on every stored value.
    pub fn validate(&self) -> Result<()> {
        let check = |v: f64, loc: String| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::NegativeSlip { value: v, location: loc })
            }
        };
        match self {
            SlipCoefficient::Constant { value } => check(*value, "constant".into()),
            SlipCoefficient::Piecewise { arcs, default } => {
                check(*default, "default".into())?;
                for a in arcs {
                    check(a.value, format!("arc {} [{}, {})", a.chart, a.s_start, a.s_end))?;
                }
                Ok(())
            }
            SlipCoefficient::Sampled { values } => {
                for (i, v) in values.iter().enumerate() {
                    check(*v, format!("sample {i}"))?;
                }
                Ok(())
            }
        }
    }

    /// Value at frame point `index`; evaluated pointwise, with no smoothing.
    pub fn at(&self, mesh: &Mesh, index: usize, p: &FramePoint) -> f64 {
        match self {
            SlipCoefficient::Constant { value } => *value,
            SlipCoefficient::Piecewise { arcs, default } => {
                let label = &mesh.chart_labels[p.chart];
                let l = mesh.charts[p.chart].length();
                let s = p.s.rem_euclid(l);
                arcs.iter()
                    .find(|a| &a.chart == label && s >= a.s_start && s < a.s_end)
                    .map_or(*default, |a| a.value)
            }
            SlipCoefficient::Sampled { values } => values[index],
        }
    }

    /// Values at all frame points.
    pub fn sample(&self, mesh: &Mesh, frame: &BoundaryFrame) -> Result<Vec<f64>> {
        self.validate()?;
        if let SlipCoefficient::Sampled { values } = self {
            if values.len() != frame.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} slip samples for {} frame points",
                    values.len(),
                    frame.len()
                )));
            }
        }
        Ok(frame.points.iter().enumerate().map(|(i, p)| self.at(mesh, i, p)).collect())
    }

    /// Arclength of the region `Gamma_0` where `alpha > 0`.
    pub fn positive_length(&self, mesh: &Mesh, frame: &BoundaryFrame) -> Result<f64> {
        let vals = self.sample(mesh, frame)?;
        Ok(frame.points.iter().zip(&vals).filter(|(_, v)| **v > 0.0).map(|(p, _)| p.weight).sum())
    }

    pub fn min_max(&self, mesh: &Mesh, frame: &BoundaryFrame) -> Result<(f64, f64)> {
        let vals = self.sample(mesh, frame)?;
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Ok((lo, hi))
    }

    pub fn scaled(&self, s: f64) -> SlipCoefficient {
        match self {
            SlipCoefficient::Constant { value } => SlipCoefficient::Constant { value: value * s },
            SlipCoefficient::Piecewise { arcs, default } => SlipCoefficient::Piecewise {
                arcs: arcs.iter().map(|a| SlipArc { value: a.value * s, ..a.clone() }).collect(),
                default: default * s,
            },
            SlipCoefficient::Sampled { values } => {
                SlipCoefficient::Sampled { values: values.iter().map(|v| v * s).collect() }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{boundary_frame, build_mesh, DomainSpec};

    #[test]
    fn negative_values_rejected() {
        assert!(matches!(SlipCoefficient::constant(-1.0).validate(), Err(Error::NegativeSlip { .. })));
        let s = SlipCoefficient::Sampled { values: vec![1.0, -0.5] };
        assert!(s.validate().is_err());
    }

    #[test]
    fn piecewise_gamma0_length() {
        let mesh = build_mesh(&DomainSpec::Channel { length: 2.0, height: 1.0 }, 0.25).unwrap();
        let frame = boundary_frame(&mesh, 3);
        let a = SlipCoefficient::Piecewise {
            arcs: vec![SlipArc { chart: "bottom".into(), s_start: 0.0, s_end: 1.0, value: 5.0 }],
            default: 0.0,
        };
        assert!((a.positive_length(&mesh, &frame).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(a.min_max(&mesh, &frame).unwrap(), (0.0, 5.0));
    }
}
