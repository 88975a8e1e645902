//! Velocity of the `sim1` mover from raw traces and from the sparse part.
//!
//! `cargo run --release --example motion_estimation`

use sarpca::cli::Preset;
use sarpca::motionest::{estimate_velocity, trajectory_error};
use sarpca::rpca::pcp_windowed;
use sarpca::signal::synthesize_traces;

fn main() -> sarpca::Result<()> {
    let cfg = Preset::Sim1.config(false);
    let scene = cfg.scene()?;
    let m = synthesize_traces(&scene)?;
    let split = pcp_windowed(&m, &cfg.window_plan(m.cols())?, &cfg.pcp_params())?;
    let mover = scene.targets.iter().find(|t| t.is_moving()).unwrap();
    let truth = (mover.velocity[0], mover.velocity[1]);
    println!("true velocity ({:.3}, {:.3}) m/s", truth.0, truth.1);
    for (label, tm) in [("raw", &m), ("sparse", &split.sparse)] {
        let est = estimate_velocity(tm, &scene.trajectory, &scene.frame, &scene.radar, (0.0, 0.0), &cfg.motion_params())?;
        let err = trajectory_error(est.u_hat, truth, &m.s_axis);
        println!(
            "{label:>6}: u_hat ({:.3}, {:.3}), max trajectory error {:.3} m",
            est.u_hat.0,
            est.u_hat.1,
            err.iter().cloned().fold(0.0, f64::max)
        );
        for stage in &est.stages {
            println!("        {} step {:?}: best {:?}, {} evaluations", stage.name, stage.step, stage.best, stage.evaluations);
        }
    }
    Ok(())
}
