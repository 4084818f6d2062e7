use super::config::{DataSection, ExperimentConfig, ExperimentKind, SweepModel};
use crate::acceptance::{run_all, AcceptanceOptions, AcceptanceReport};
use crate::discretization::{BoundaryMode, OperatorSet, SlipCoefficient};
use crate::error::{Error, Result};
use crate::evolution::{Convection, Integrator, TRACE_COLUMNS};
use crate::fit::geometric_grid;
use crate::geometry::{build_mesh, Mesh, SmoothField};
use crate::jet::Jet;
use crate::limits::{alpha_grid, alpha_sweep, boundary_vanishing, SweepKind, SweepOptions};
use crate::local_estimates::{run_probe_study, ProbeStudy, StudyConstants, RECORD_COLUMNS};
use crate::report::{plot_svg, to_json, write_table, PlotSpec, Table};
use crate::spectral::{eigensolve, halfpower_equivalence, random_span_samples};
use crate::stokes::{resolvent_scan, solve_steady, KernelPolicy, SCAN_COLUMNS};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Written into the run directory when a stage fails.
pub const FAILED_MARKER: &str = "FAILED";

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub kind: ExperimentKind,
    /// Output root; artifacts go to `<out>/<name>/`.
    pub out: PathBuf,
    pub threads: usize,
    /// Overrides `mesh.level`.
    pub level: Option<u32>,
}

/// Finished run.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub dir: PathBuf,
    /// False when an acceptance criterion failed.
    pub passed: bool,
    /// Lines for the terminal.
    pub lines: Vec<String>,
}

#[derive(Debug)]
pub enum RunError {
    /// Bad configuration; nothing was solved.
    Config(String),
    /// A stage failed; partial artifacts and the marker are in `dir`.
    Stage { stage: String, error: Error, dir: PathBuf },
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Stage { stage, error, dir } => {
                write!(f, "stage '{stage}' failed: {error} (partial artifacts in {})", dir.display())
            }
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Stage { .. } => 3,
        }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    name: &'a str,
    kind: &'a str,
    seed: u64,
    level: u32,
    h: f64,
    tables: Vec<String>,
    results: T,
}

/// Collects artifacts of one run.
struct Artifacts {
    dir: PathBuf,
    tables: Vec<String>,
}

impl Artifacts {
    fn table(&mut self, t: &Table) -> Result<()> {
        write_table(&self.dir, t)?;
        self.tables.push(format!("{}.csv", t.name));
        Ok(())
    }

    fn plot(&self, t: &Table, spec: PlotSpec) -> Result<()> {
        let svg = plot_svg(t, &spec)?;
        std::fs::write(self.dir.join(format!("{}.svg", t.name)), svg)?;
        Ok(())
    }
}

/// Validate, run and write `<out>/<name>/`.
pub fn run(config_text: Option<&str>, opt: &RunOptions) -> std::result::Result<Outcome, RunError> {
    let cfg = match config_text {
        Some(t) => ExperimentConfig::parse(t).map_err(|e| RunError::Config(strip(e)))?,
        None if opt.kind == ExperimentKind::FullAcceptance => ExperimentConfig::empty(),
        None => return Err(RunError::Config(format!("{} needs --config", opt.kind.name()))),
    };
    cfg.validate(opt.kind).map_err(|e| RunError::Config(strip(e)))?;
    if opt.threads == 0 {
        return Err(RunError::Config("--threads must be at least 1".into()));
    }
    let name = cfg.name.clone().unwrap_or_else(|| opt.kind.name().to_string());
    let dir = opt.out.join(&name);
    let level = opt.level.unwrap_or(cfg.mesh.level);
    let stage_err = |stage: &str, error: Error| RunError::Stage { stage: stage.into(), error, dir: dir.clone() };
    std::fs::create_dir_all(&dir).map_err(|e| stage_err("output", e.into()))?;
    let _ = std::fs::remove_file(dir.join(FAILED_MARKER));
    let echo = toml::to_string_pretty(&cfg).map_err(|e| stage_err("output", Error::Config(e.to_string())))?;
    std::fs::write(dir.join("config.toml"), echo).map_err(|e| stage_err("output", e.into()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opt.threads)
        .build()
        .map_err(|e| stage_err("thread pool", Error::InvalidArgument(e.to_string())))?;
    let mut art = Artifacts { dir: dir.clone(), tables: Vec::new() };
    let mut stage = String::from("setup");
    let h = cfg.mesh.h / 2f64.powi(level as i32);
    let result = pool.install(|| execute(&cfg, opt.kind, h, level, &mut art, &mut stage));
    match result {
        Ok((json, passed, lines)) => {
            let report = Report {
                name: &name,
                kind: opt.kind.name(),
                seed: cfg.seed,
                level,
                h,
                tables: art.tables.clone(),
                results: json,
            };
            let text = to_json(&report).map_err(|e| stage_err("report", e))?;
            std::fs::write(dir.join("report.json"), text).map_err(|e| stage_err("report", e.into()))?;
            Ok(Outcome { dir, passed, lines })
        }
        Err(error) => {
            let _ = std::fs::write(dir.join(FAILED_MARKER), format!("stage: {stage}\nerror: {error}\n"));
            Err(RunError::Stage { stage, error, dir })
        }
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::Config(m) => m,
        other => other.to_string(),
    }
}

type Executed = (serde_json::Value, bool, Vec<String>);

fn value<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| Error::Config(e.to_string()))
}

/// One-row table of named scalars; report numbers all come from tables.
fn summary(name: &str, items: &[(&str, f64)]) -> Table {
    let cols: Vec<&str> = items.iter().map(|(n, _)| *n).collect();
    let mut t = Table::new(name, &cols);
    t.push(items.iter().map(|(_, v)| *v).collect());
    t
}

fn summary_json(t: &Table) -> serde_json::Value {
    let mut m = serde_json::Map::new();
    for (c, v) in t.columns.iter().zip(&t.rows[0]) {
        m.insert(c.clone(), serde_json::json!(*v));
    }
    serde_json::Value::Object(m)
}

fn data_field(d: &DataSection) -> SmoothField {
    let (c, s2, a) = (d.center, d.sigma * d.sigma, d.amplitude);
    SmoothField::from_stream("vortex", move |x: Jet, y: Jet| {
        let dx = x - c[0];
        let dy = y - c[1];
        (-(dx * dx + dy * dy) / s2).exp() * a
    })
}

fn data_closure(ops: &OperatorSet, d: &DataSection) -> Box<dyn Fn([f64; 2]) -> [f64; 2] + Sync> {
    let field = data_field(d);
    let f = move |x: [f64; 2]| field.value_grad(x).0;
    match d.vanishing_width {
        Some(w) => Box::new(boundary_vanishing(ops, w, f)),
        None => Box::new(f),
    }
}

fn execute(
    cfg: &ExperimentConfig,
    kind: ExperimentKind,
    h: f64,
    level: u32,
    art: &mut Artifacts,
    stage: &mut String,
) -> Result<Executed> {
    let set = |stage: &mut String, s: &str| *stage = s.to_string();
    let slip = || cfg.slip.clone().unwrap_or(SlipCoefficient::constant(1.0));
    let build = |stage: &mut String, mode: BoundaryMode, alpha: &SlipCoefficient| {
        set(stage, "assembly");
        OperatorSet::build(cfg.domain.as_ref().expect("validated"), h, alpha, mode)
    };
    match kind {
        ExperimentKind::Mesh => {
            set(stage, "meshing");
            let mesh = build_mesh(cfg.domain.as_ref().expect("validated"), h)?;
            set(stage, "output");
            std::fs::write(art.dir.join("mesh.txt"), mesh_text(&mesh))?;
            let t = summary(
                "summary",
                &[
                    ("h_target", h),
                    ("h_max", mesh.h),
                    ("vertices", mesh.vertices.len() as f64),
                    ("cells", mesh.cells.len() as f64),
                    ("boundary_edges", mesh.boundary_edges.len() as f64),
                    ("min_angle_deg", min_angle(&mesh)),
                ],
            );
            art.table(&t)?;
            Ok((summary_json(&t), true, vec![format!("{} cells", mesh.cells.len())]))
        }
        ExperimentKind::Steady => {
            let ops = build(stage, BoundaryMode::Slip, &slip())?;
            let f = ops.space.interpolate_field(&data_field(cfg.data.as_ref().unwrap()));
            set(stage, "steady solve");
            let s = solve_steady(&ops, &ops.mass.matvec(&f), None, KernelPolicy::Filter)?;
            let t = summary(
                "summary",
                &[
                    ("norm_f", ops.l2_norm(&f)),
                    ("norm_u", ops.l2_norm(&s.u)),
                    ("norm_Du", ops.strain_norm(&s.u)),
                    ("norm_pi", ops.pressure_norm(&s.p)),
                    ("friction", ops.friction(&s.u)),
                    ("residual", s.residual),
                    ("divergence", s.divergence),
                    ("kernel_projection", s.kernel_projection),
                ],
            );
            art.table(&t)?;
            Ok((summary_json(&t), true, vec![format!("residual {:.3e}", s.residual)]))
        }
        ExperimentKind::ResolventScan => {
            let ops = build(stage, BoundaryMode::Slip, &slip())?;
            let f = ops.space.interpolate_field(&data_field(cfg.data.as_ref().unwrap()));
            let sc = cfg.scan.as_ref().unwrap();
            set(stage, "resolvent scan");
            let res = resolvent_scan(&ops, &sc.rays, &geometric_grid(sc.lambda_min, sc.lambda_max, sc.points), &f)?;
            set(stage, "output");
            let mut t = Table::new("scan", &SCAN_COLUMNS);
            res.rows.iter().for_each(|r| t.push(r.values()));
            art.table(&t)?;
            let mut rays = Table::new("rays", &["ray_arg", "slope_u", "slope_Du", "fit_residual_u", "fit_residual_Du"]);
            for r in &res.rays {
                rays.push(vec![r.ray_arg, r.slope_u, r.slope_du, r.fit_residual_u, r.fit_residual_du]);
            }
            art.table(&rays)?;
            let s = summary("summary", &[("constant", res.constant)]);
            art.table(&s)?;
            art.plot(
                &t,
                PlotSpec {
                    title: "resolvent scan".into(),
                    x: "lambda_abs".into(),
                    y: vec!["norm_u".into(), "norm_Du".into()],
                    log_x: true,
                    log_y: true,
                    guides: vec![-1.0, -0.5],
                },
            )?;
            let lines = res.rays.iter().map(|r| format!("arg {:.4}: slope_u {:.4}", r.ray_arg, r.slope_u)).collect();
            Ok((serde_json::json!({ "constant": res.constant, "rays": value(&rays.rows)? }), true, lines))
        }
        ExperimentKind::Evolve | ExperimentKind::Ns => {
            let ops = build(stage, BoundaryMode::Slip, &slip())?;
            let u0 = ops.space.interpolate_field(&data_field(cfg.data.as_ref().unwrap()));
            let conv = if kind == ExperimentKind::Ns { Convection::Skew } else { Convection::None };
            set(stage, "time stepping");
            let mut it = Integrator::new(&ops, &u0, cfg.scheme.unwrap().config(conv))?;
            it.run(None)?;
            let tr = it.trace();
            set(stage, "output");
            let mut t = Table::new("trace", &TRACE_COLUMNS);
            tr.rows.iter().for_each(|r| t.push(r.values()));
            art.table(&t)?;
            let s = summary(
                "summary",
                &[
                    ("initial_kinetic", tr.initial_kinetic()),
                    ("final_kinetic", tr.final_row().kinetic),
                    ("max_relative_residual", tr.max_relative_residual()),
                    ("initial_projection", tr.initial_projection),
                ],
            );
            art.table(&s)?;
            art.plot(
                &t,
                PlotSpec {
                    title: "energy".into(),
                    x: "time".into(),
                    y: vec!["kinetic".into(), "cum_dissipation".into(), "cum_friction".into()],
                    log_x: false,
                    log_y: false,
                    guides: vec![],
                },
            )?;
            Ok((summary_json(&s), true, vec![format!("energy residual {:.3e}", tr.max_relative_residual())]))
        }
        ExperimentKind::Eigen => {
            let ops = build(stage, BoundaryMode::Slip, &slip())?;
            set(stage, "eigensolve");
            let eig = eigensolve(&ops, cfg.eigen.unwrap().count)?;
            set(stage, "half-power check");
            let samples = random_span_samples(&eig, 50, cfg.seed);
            let eq = halfpower_equivalence(&eig, &ops, &samples)?;
            set(stage, "output");
            let mut t = Table::new("eigenvalues", &["index", "mu", "residual"]);
            for (i, (m, r)) in eig.values.iter().zip(&eig.residuals).enumerate() {
                t.push(vec![i as f64, *m, *r]);
            }
            art.table(&t)?;
            let s = summary("summary", &[("c1", eq.c1), ("c2", eq.c2), ("parseval_error", eq.parseval_error)]);
            art.table(&s)?;
            Ok((serde_json::json!({ "mu": eig.values, "halfpower": summary_json(&s) }), true, vec![format!("mu_1 = {:.6}", eig.values[0])]))
        }
        ExperimentKind::AlphaLimit => {
            let s = build(stage, BoundaryMode::Slip, &SlipCoefficient::constant(1.0))?;
            let d = build(stage, BoundaryMode::NoSlip, &SlipCoefficient::constant(0.0))?;
            let sw = cfg.sweep.as_ref().unwrap();
            let data = data_closure(&s, cfg.data.as_ref().unwrap());
            let mut options = SweepOptions { target: sw.target, decades: sw.decades, floor: sw.floor, ..SweepOptions::default() };
            if let Some(sc) = cfg.scheme {
                options.scheme = sc.config(Convection::None);
            }
            let kind = match sw.model {
                SweepModel::Steady => SweepKind::Steady,
                SweepModel::Resolvent => SweepKind::Resolvent { lambda_re: sw.lambda[0], lambda_im: sw.lambda[1] },
                SweepModel::Stokes => SweepKind::StokesEvolution,
                SweepModel::Ns => SweepKind::NsEvolution,
            };
            set(stage, "alpha sweep");
            let r = alpha_sweep(kind, &s, &d, &*data, &alpha_grid(sw.alpha_min, sw.alpha_max, sw.per_decade), &options)?;
            set(stage, "output");
            let mut t = Table::new("sweep", &["alpha", "boundary_gap", "energy_gap", "h1_gap", "sup_l2_gap"]);
            for i in 0..r.alpha.len() {
                t.push(vec![r.alpha[i], r.boundary_gap[i], r.energy_gap[i], r.h1_gap[i], r.sup_l2_gap[i]]);
            }
            art.table(&t)?;
            let sm = summary(
                "summary",
                &[
                    ("slope", r.slope),
                    ("constant", r.constant),
                    ("residual", r.residual),
                    ("trace_ratio", r.trace_ratio),
                    ("initial_projection", r.initial_projection),
                ],
            );
            art.table(&sm)?;
            art.plot(
                &t,
                PlotSpec {
                    title: format!("{} gaps", r.kind),
                    x: "alpha".into(),
                    y: vec!["boundary_gap".into(), "energy_gap".into(), "sup_l2_gap".into()],
                    log_x: true,
                    log_y: true,
                    guides: vec![-1.0],
                },
            )?;
            Ok((summary_json(&sm), true, vec![format!("{:?} slope {:.4}", r.target, r.slope)]))
        }
        ExperimentKind::LocalEst => {
            let ops = build(stage, BoundaryMode::Slip, &slip())?;
            let study = cfg.probes.clone().unwrap_or_else(ProbeStudy::unit_disk);
            set(stage, "local estimates");
            let field = |x: [f64; 2]| [1.0 + x[1], 0.5 - x[0]];
            let recs = run_probe_study(&ops, &study, &field)?;
            set(stage, "output");
            let mut t = Table::new("records", &RECORD_COLUMNS);
            recs.iter().for_each(|r| t.push(r.values()));
            art.table(&t)?;
            let c = StudyConstants::of(&ops, &recs);
            let s = summary(
                "summary",
                &[
                    ("caccioppoli_interior", c.caccioppoli_interior),
                    ("caccioppoli_boundary", c.caccioppoli_boundary),
                    ("reverse_holder_interior", c.reverse_holder_interior),
                    ("reverse_holder_boundary", c.reverse_holder_boundary),
                ],
            );
            art.table(&s)?;
            Ok((summary_json(&s), true, vec![format!("{} records", recs.len())]))
        }
        ExperimentKind::FullAcceptance => {
            let ids: Vec<u8> = cfg.acceptance.as_ref().and_then(|a| a.criteria.clone()).unwrap_or((1..=14).collect());
            let mut lines = Vec::new();
            let report: AcceptanceReport = run_all(&ids, &AcceptanceOptions { level }, |o| {
                lines.push(o.summary_line());
            });
            set(stage, "output");
            let mut verdicts = Table::new("acceptance", &["criterion", "passed", "metrics"]);
            for c in &report.criteria {
                verdicts.push(vec![c.id as f64, c.passed as u8 as f64, c.metrics.len() as f64]);
                art.table(&c.metric_table())?;
                for t in &c.tables {
                    art.table(t)?;
                }
            }
            art.table(&verdicts)?;
            if let Some(c) = report.criteria.iter().find(|c| c.id == 2) {
                if let Some(t) = c.tables.first() {
                    art.plot(
                        t,
                        PlotSpec {
                            title: "resolvent decay".into(),
                            x: "lambda_abs".into(),
                            y: vec!["norm_u".into(), "norm_Du".into()],
                            log_x: true,
                            log_y: true,
                            guides: vec![-1.0, -0.5],
                        },
                    )?;
                }
            }
            let passed = report.passed == report.total;
            Ok((value(&report)?, passed, lines))
        }
    }
}

fn mesh_text(m: &Mesh) -> String {
    let mut s = format!("vertices {}\n", m.vertices.len());
    for v in &m.vertices {
        let _ = writeln!(s, "{:.16e} {:.16e}", v[0], v[1]);
    }
    let _ = writeln!(s, "cells {}", m.cells.len());
    for c in &m.cells {
        let _ = writeln!(s, "{} {} {}", c[0], c[1], c[2]);
    }
    s
}

fn min_angle(m: &Mesh) -> f64 {
    let mut best = 180.0f64;
    for c in &m.cells {
        for k in 0..3 {
            let p = m.vertices[c[k]];
            let a = m.vertices[c[(k + 1) % 3]];
            let b = m.vertices[c[(k + 2) % 3]];
            let (u, v) = ([a[0] - p[0], a[1] - p[1]], [b[0] - p[0], b[1] - p[1]]);
            let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
            best = best.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn opts(kind: ExperimentKind, out: &Path) -> RunOptions {
        RunOptions { kind, out: out.to_path_buf(), threads: 1, level: None }
    }

    #[test]
    fn misspelled_key_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let text = "[domain]\nkind = \"disk\"\nradius = 1.0\n[slip]\nkind = \"constant\"\nalpa = 1.0\n";
        let e = run(Some(text), &opts(ExperimentKind::Steady, dir.path())).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("alpa"), "{e}");
    }

    #[test]
    fn mesh_run_writes_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let text = "name = \"m\"\n[domain]\nkind = \"disk\"\nradius = 1.0\n[mesh]\nh = 0.2\n";
        let o = run(Some(text), &opts(ExperimentKind::Mesh, dir.path())).unwrap();
        for f in ["config.toml", "report.json", "summary.csv", "mesh.txt"] {
            assert!(o.dir.join(f).exists(), "{f}");
        }
        let s = Table::from_csv("summary", &std::fs::read_to_string(o.dir.join("summary.csv")).unwrap()).unwrap();
        assert!(s.column("cells").unwrap()[0] > 50.0);
    }

    #[test]
    fn solver_failure_names_the_stage_and_leaves_a_marker() {
        let dir = tempfile::tempdir().unwrap();
        // h above the smallest feature of the annulus
        let text = "name = \"bad\"\n[domain]\nkind = \"annulus\"\ninner = 0.9\nouter = 1.0\n[mesh]\nh = 0.3\n";
        let e = run(Some(text), &opts(ExperimentKind::Mesh, dir.path())).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(e.to_string().contains("meshing"));
        assert!(dir.path().join("bad").join(FAILED_MARKER).exists());
    }

    #[test]
    fn evolve_is_deterministic_across_thread_counts() {
        let dir = tempfile::tempdir().unwrap();
        let text = "[domain]\nkind = \"disk\"\nradius = 1.0\n[slip]\nkind = \"constant\"\nvalue = 2.0\n\
                    [mesh]\nh = 0.2\n[data]\ncenter = [0.1, 0.0]\nsigma = 0.4\n[scheme]\ndt = 0.01\nt_final = 0.1\n";
        let mut reports = Vec::new();
        for threads in [1, 3] {
            let o = run(Some(text), &RunOptions { threads, ..opts(ExperimentKind::Evolve, dir.path()) }).unwrap();
            reports.push(std::fs::read(o.dir.join("report.json")).unwrap());
            assert!(o.dir.join("trace.svg").exists());
        }
        assert_eq!(reports[0], reports[1]);
    }

    #[test]
    fn kind_mismatch_and_missing_sections_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let e = run(Some("kind = \"eigen\"\n"), &opts(ExperimentKind::Mesh, dir.path())).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let e = run(Some("[domain]\nkind = \"disk\"\nradius = 1.0\n"), &opts(ExperimentKind::Eigen, dir.path())).unwrap_err();
        assert!(e.to_string().contains("[slip]"), "{e}");
    }
}
