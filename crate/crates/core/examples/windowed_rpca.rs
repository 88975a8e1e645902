//! Windowed versus whole-matrix principal component pursuit on the `sim1` scene.
//!
//! `cargo run --release --example windowed_rpca [-- --full-size]`

use std::time::Instant;

use sarpca::cli::Preset;
use sarpca::rpca::{energy_split, pcp_windowed, MaskRule};
use sarpca::signal::{synthesize_subset, synthesize_traces, TraceKind};
use sarpca::tracematrix::WindowPlan;

fn main() -> sarpca::Result<()> {
    let full = std::env::args().any(|a| a == "--full-size");
    let cfg = Preset::Sim1.config(full);
    let scene = cfg.scene()?;
    let m = synthesize_traces(&scene)?;
    let (stat, mov) = scene.populations();
    let env_mov = synthesize_subset(&scene, &mov, TraceKind::Envelope)?;
    let env_stat = synthesize_subset(&scene, &stat, TraceKind::Envelope)?;
    println!("traces: {} x {}", m.rows(), m.cols());

    for (label, plan) in [("windowed", cfg.window_plan(m.cols())?), ("whole", WindowPlan::single(m.cols()))] {
        let t0 = Instant::now();
        let res = pcp_windowed(&m, &plan, &cfg.pcp_params())?;
        let split = energy_split(&m.data, &res.sparse.data, &env_mov.data, &env_stat.data, MaskRule::Exclusive)?;
        let iters: Vec<usize> = res.windows.iter().map(|w| w.iterations).collect();
        println!(
            "{label:>8}: {} windows, converged {}, max iterations {}, capture {:.4}, leakage {:.4}, {:.1} s",
            plan.count,
            res.converged(),
            iters.iter().max().unwrap(),
            split.capture,
            split.leakage,
            t0.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
