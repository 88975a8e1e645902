//! Command-line orchestration: scene presets and config files in, SARM
//! matrices, CSV reports and a JSON manifest out.

pub mod config;
pub mod presets;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{alpha, Target};
use crate::imaging::{Backprojector, ImageMode, SarImage};
use crate::motionest::{estimate_velocity, trajectory_error, VelocityEstimate};
use crate::rank::{
    covariance_empirical, rank_from_eigenvalues, symbol_1target, symbol_2target, symmetric_eigenvalues, szego_rank_fraction,
    szego_rank_fraction_quadrature, ModelGrid, Symbol,
};
use crate::rpca::{pcp_windowed, WindowedRpca};
use crate::signal::{synthesize_traces, Scene};
use crate::tracematrix::TraceMatrix;

pub use config::{SceneConfig, TrackedTarget};
pub use presets::Preset;

#[derive(Debug, Parser)]
#[command(name = "sarpca", version, about = "Separate moving from stationary targets in SAR traces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Synthesize the trace matrix of the scene.
    Simulate,
    /// Split the traces into low-rank and sparse parts.
    Rpca,
    /// Covariance eigenvalues, symbol samples and essential rank.
    Rank,
    /// Backprojection image of the traces.
    Image,
    /// Velocity estimate of the tracked target and its trajectory error.
    Motion,
    /// Everything above, chained.
    Pipeline,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Rpca => "rpca",
            Command::Rank => "rank",
            Command::Image => "image",
            Command::Motion => "motion",
            Command::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML scene file; overlays the preset when both are given.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Paper-size slow-time sampling for the simulation presets.
    #[arg(long, global = true)]
    pub full_size: bool,
    /// Use this SARM trace file instead of synthesizing the scene.
    #[arg(long, global = true)]
    pub traces: Option<PathBuf>,
}

/// Exit status for an error: 1 for bad input, 2 for numerical failure.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::SvdNonConvergence { .. }
        | Error::NotSymmetric(_)
        | Error::DeltaSymbol
        | Error::NoMovingEnergy { .. }
        | Error::ShiftOutOfSpan { .. }
        | Error::Shape(_) => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Artifact {
    pub name: String,
    pub path: PathBuf,
    pub format: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shape: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: &'static str,
    pub preset: Option<String>,
    pub seed: u64,
    pub full_size: bool,
    pub config: SceneConfig,
    pub artifacts: Vec<Artifact>,
    pub reports: serde_json::Map<String, Value>,
}

/// Loads the effective configuration from the preset, file and flags.
pub fn resolve_config(args: &CommonArgs) -> Result<SceneConfig> {
    let base = args.preset.map(|p| p.config(args.full_size));
    let mut cfg = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            SceneConfig::parse(&text, base.as_ref())?
        }
        None => base.unwrap_or_default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.full_size && args.preset.is_none() {
        cfg.sampling.slow_time_intervals = presets::FULL_INTERVALS;
    }
    cfg.validate()?;
    Ok(cfg)
}

struct Run {
    out: PathBuf,
    cfg: SceneConfig,
    scene: Scene,
    traces_path: Option<PathBuf>,
    artifacts: Vec<Artifact>,
    reports: serde_json::Map<String, Value>,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn save_matrix(&mut self, name: &str, tm: &TraceMatrix) -> Result<()> {
        let path = self.path(name);
        tm.save(&path)?;
        self.artifacts.push(Artifact { name: name.into(), path, format: "sarm", shape: Some([tm.rows(), tm.cols()]) });
        Ok(())
    }

    fn save_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).expect("reports serialize");
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(Artifact { name: name.into(), path, format: "json", shape: None });
        Ok(())
    }

    fn save_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        let path = self.path(name);
        let io = |e| Error::io(&path, e);
        let mut w = BufWriter::new(fs::File::create(&path).map_err(io)?);
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        for row in rows {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(w, "{}", line.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)?;
        self.artifacts.push(Artifact { name: name.into(), path, format: "csv", shape: Some([rows.len(), header.len()]) });
        Ok(())
    }

    fn traces(&mut self) -> Result<TraceMatrix> {
        match &self.traces_path {
            Some(p) => TraceMatrix::load(p),
            None => synthesize_traces(&self.scene),
        }
    }

    fn simulate(&mut self) -> Result<TraceMatrix> {
        let tm = synthesize_traces(&self.scene)?;
        self.save_matrix("M.sarm", &tm)?;
        Ok(tm)
    }

    fn rpca(&mut self, tm: &TraceMatrix) -> Result<WindowedRpca> {
        let plan = self.cfg.window_plan(tm.cols())?;
        let res = pcp_windowed(tm, &plan, &self.cfg.pcp_params())?;
        if !res.converged() {
            log::warn!("some PCP windows stopped at the iteration limit");
        }
        self.save_matrix("L.sarm", &res.low_rank)?;
        self.save_matrix("S.sarm", &res.sparse)?;
        self.save_json("rpca_diagnostics.json", &json!({ "plan": { "width": plan.width, "overlap": plan.overlap, "count": plan.count }, "windows": res.windows }))?;
        self.reports.insert("rpca_converged".into(), json!(res.converged()));
        Ok(res)
    }

    /// Symbol of the covariance model of a one- or two-target scene.
    fn model_symbol(&self, targets: &[Target]) -> Result<Option<(Symbol, Option<f64>)>> {
        let sc = &self.scene;
        let grid = ModelGrid::new(&sc.grid, &sc.radar);
        let a: Vec<f64> = targets.iter().take(2).map(|t| alpha(&sc.frame, &sc.trajectory, t, sc.radar.c)).collect();
        if a.is_empty() || targets.len() > 2 || a.contains(&0.0) {
            return Ok(None);
        }
        let b = sc.radar.bandwidth;
        if a.len() == 1 {
            Ok(Some((symbol_1target(grid.xi(a[0]), grid.gamma(a[0]), b, grid.delta_t)?, Some(szego_rank_fraction(a[0], b, grid.delta_s, self.cfg.rank.epsilon)?))))
        } else {
            Ok(Some((symbol_2target(grid.xi(a[0]), grid.gamma(a[0]), grid.xi(a[1]), grid.gamma(a[1]), b, grid.delta_t)?, None)))
        }
    }

    fn rank(&mut self, tm: &TraceMatrix) -> Result<()> {
        let eps = self.cfg.rank.epsilon;
        let cov = covariance_empirical(tm);
        let c = cov.riemann();
        let s = tm.s_axis.clone();
        self.save_matrix("covariance.sarm", &TraceMatrix::new(c.clone(), s.clone(), s, 1.0)?)?;
        let ev = symmetric_eigenvalues(&c)?;
        let top = ev.first().copied().unwrap_or(0.0);
        let rows: Vec<Vec<f64>> = ev.iter().enumerate().map(|(i, &v)| vec![i as f64, v, if top > 0.0 { v / top } else { 0.0 }]).collect();
        self.save_csv("eigenvalues.csv", &["index", "eigenvalue", "normalized"], &rows)?;
        let rank = rank_from_eigenvalues(&ev, eps)?;
        let mut report = json!({ "epsilon": eps, "essential_rank": rank, "normalized": rank as f64 / ev.len() as f64 });
        let targets = self.scene.targets.clone();
        if let Some((symbol, closed)) = self.model_symbol(&targets)? {
            let k = self.cfg.rank.symbol_samples.max(2);
            let pi = std::f64::consts::PI;
            let rows: Vec<Vec<f64>> = (0..k)
                .map(|i| {
                    let t = -pi + 2.0 * pi * i as f64 / (k - 1) as f64;
                    vec![t, symbol.eval(t)]
                })
                .collect();
            self.save_csv("symbol.csv", &["theta", "symbol"], &rows)?;
            report["asymptotic_quadrature"] = json!(szego_rank_fraction_quadrature(&symbol, eps));
            if let Some(v) = closed {
                report["asymptotic"] = json!(v);
            }
        }
        if let Some(sweep) = self.cfg.sweep.clone() {
            let mut rows = Vec::with_capacity(sweep.count);
            for i in 0..sweep.count {
                let v = sweep.start + (sweep.stop - sweep.start) * i as f64 / (sweep.count - 1) as f64;
                let mut ts = targets.clone();
                let t = &mut ts[sweep.target];
                match sweep.parameter {
                    config::SweepParameter::RangeM => t.rho0[0] = v,
                    config::SweepParameter::CrossM => t.rho0[1] = v,
                    config::SweepParameter::URangeMps => t.velocity[0] = v,
                    config::SweepParameter::UCrossMps => t.velocity[1] = v,
                }
                let scene = self.cfg.scene_with(ts.clone())?;
                let tm = synthesize_traces(&scene)?;
                let ev = symmetric_eigenvalues(&covariance_empirical(&tm).riemann())?;
                let r = rank_from_eigenvalues(&ev, eps)?;
                let asym = if ts.len() == 1 {
                    szego_rank_fraction(alpha(&scene.frame, &scene.trajectory, &ts[0], scene.radar.c), scene.radar.bandwidth, scene.grid.delta_s, eps)?
                } else {
                    f64::NAN
                };
                rows.push(vec![v, r as f64, r as f64 / ev.len() as f64, asym]);
            }
            self.save_csv("rank_curve.csv", &["value", "essential_rank", "normalized", "asymptotic"], &rows)?;
        }
        self.save_json("rank_report.json", &report)?;
        self.reports.insert("rank".into(), report);
        Ok(())
    }

    fn image(&mut self, bp: &Backprojector, name: &str, motion: Option<(f64, f64)>) -> Result<SarImage> {
        let grid = self.cfg.image_grid(&self.scene)?;
        let img = bp.image(&grid, motion, ImageMode::Envelope);
        self.save_matrix(&format!("image_{name}.sarm"), &img.to_tracematrix()?)?;
        self.reports.insert(format!("image_{name}"), json!({ "max_abs": img.max_abs, "flagged": img.flagged, "peak_m": img.peak_position() }));
        Ok(img)
    }

    fn backprojector(&self, tm: &TraceMatrix) -> Result<Backprojector> {
        Backprojector::new(tm, &self.scene.trajectory, &self.scene.frame, &self.scene.radar)
    }

    fn tracked(&self) -> Result<TrackedTarget> {
        self.cfg
            .tracked_target()
            .ok_or_else(|| Error::Config { key: "motion.anchor_m".into(), reason: "no moving target configured and no anchor given".into() })
    }

    fn motion(&mut self, tm: &TraceMatrix, name: &str) -> Result<(VelocityEstimate, Option<Vec<f64>>)> {
        let (anchor, truth) = self.tracked()?;
        let sc = &self.scene;
        let est = estimate_velocity(tm, &sc.trajectory, &sc.frame, &sc.radar, anchor, &self.cfg.motion_params())?;
        let err = truth.map(|u| trajectory_error(est.u_hat, u, &tm.s_axis));
        self.save_json(&format!("motion_{name}.json"), &json!({ "anchor_m": anchor, "true_mps": truth, "estimate": est }))?;
        self.reports.insert(
            format!("motion_{name}"),
            json!({ "u_hat_mps": est.u_hat, "max_error_m": err.as_ref().map(|e| e.iter().fold(0.0f64, |m, v| m.max(*v))) }),
        );
        Ok((est, err))
    }
}

/// Runs one subcommand and writes its manifest.
pub fn run(command: Command, args: &CommonArgs) -> Result<Manifest> {
    let cfg = resolve_config(args)?;
    if let Some(n) = args.threads {
        if rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::warn!("thread pool already initialized; --threads ignored");
        }
    }
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let scene = cfg.scene()?;
    let mut r = Run { out: args.out.clone(), cfg, scene, traces_path: args.traces.clone(), artifacts: Vec::new(), reports: Default::default() };
    let resolved = r.path("config.toml");
    fs::write(&resolved, r.cfg.to_toml()).map_err(|e| Error::io(&resolved, e))?;

    match command {
        Command::Simulate => {
            r.simulate()?;
        }
        Command::Rpca => {
            let tm = r.traces()?;
            r.rpca(&tm)?;
        }
        Command::Rank => {
            let tm = r.traces()?;
            r.rank(&tm)?;
        }
        Command::Image => {
            let tm = r.traces()?;
            let bp = r.backprojector(&tm)?;
            let motion = r.cfg.image.motion_mps.map(|[a, b]| (a, b));
            r.image(&bp, "M", motion)?;
        }
        Command::Motion => {
            let tm = r.traces()?;
            let (_, err) = r.motion(&tm, "M")?;
            if let Some(err) = err {
                let rows: Vec<Vec<f64>> = tm.s_axis.iter().zip(&err).map(|(&s, &e)| vec![s, e]).collect();
                r.save_csv("trajectory_error.csv", &["s", "error_m"], &rows)?;
            }
        }
        Command::Pipeline => {
            let tm = match r.traces_path {
                Some(_) => r.traces()?,
                None => r.simulate()?,
            };
            let sep = r.rpca(&tm)?;
            r.rank(&tm)?;
            let bp_m = r.backprojector(&tm)?;
            r.image(&bp_m, "M", None)?;
            r.image(&r.backprojector(&sep.low_rank)?, "L", None)?;
            if r.cfg.tracked_target().is_some() {
                let (est_s, err_s) = r.motion(&sep.sparse, "S")?;
                let (_, err_m) = r.motion(&tm, "M")?;
                r.image(&r.backprojector(&sep.sparse)?, "S", Some(est_s.u_hat))?;
                if let (Some(es), Some(em)) = (err_s, err_m) {
                    let rows: Vec<Vec<f64>> = (0..tm.rows()).map(|j| vec![tm.s_axis[j], es[j], em[j]]).collect();
                    r.save_csv("trajectory_error.csv", &["s", "error_sparse_m", "error_raw_m"], &rows)?;
                }
            } else {
                r.image(&r.backprojector(&sep.sparse)?, "S", None)?;
            }
        }
    }

    let manifest = Manifest {
        command: command.name(),
        preset: args.preset.map(|p| p.name().to_string()),
        seed: r.cfg.seed,
        full_size: args.full_size,
        config: r.cfg.clone(),
        artifacts: r.artifacts,
        reports: r.reports,
    };
    let path = r.out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

/// Entry point of the binary.
pub fn main_with(cli: Cli) -> ExitCode {
    match run(cli.command, &cli.common) {
        Ok(m) => {
            println!("{} artifacts written to {}", m.artifacts.len(), cli.common.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Reads a manifest back, for tools that only need the artifact list.
pub fn read_manifest(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Config { key: "manifest".into(), reason: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config { key: "x".into(), reason: "y".into() }), 1);
        assert_eq!(exit_code(&Error::NoMovingEnergy { variation: 0.0 }), 2);
        assert_eq!(exit_code(&Error::DeltaSymbol), 2);
    }

    #[test]
    fn flags_parse_after_subcommand() {
        let cli = Cli::try_parse_from(["sarpca", "rank", "--preset", "fig5", "--seed", "4", "--out", "/tmp/x"]).unwrap();
        assert_eq!(cli.command, Command::Rank);
        assert_eq!(cli.common.preset, Some(Preset::Fig5));
        assert_eq!(cli.common.seed, Some(4));
    }
}
