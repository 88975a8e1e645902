//! Raw chirp echoes through pulse and range compression, compared with the
//! directly synthesized traces.
//!
//! `cargo run --release --example chain_validation`

use sarpca::geometry::{RadarConstants, Target, Trajectory, Vec3};
use sarpca::signal::{pulse_compress, range_compress, simulate_raw, synthesize_traces, GaussianChirp, SamplingGrid, Scene};

fn main() -> sarpca::Result<()> {
    let radar = RadarConstants::gotcha();
    let grid = SamplingGrid::for_scene(16, 0.015, 6.0, &radar)?;
    let traj = Trajectory::straight_track(1.0e4, 7300.0, 70.0)?;
    for targets in [vec![Target::stationary(0.0, 0.0)], vec![Target::stationary(2.0, 3.0), Target::moving(-1.0, 0.0, 5.0, 0.0)]] {
        let scene = Scene::new(radar, traj.clone(), Vec3::zeros(), grid, targets)?;
        let chirp = GaussianChirp::design(&radar, 4.0)?;
        let raw = simulate_raw(&scene, &chirp)?;
        let dp = pulse_compress(&raw, &chirp)?;
        let dr = range_compress(&dp, &scene.trajectory, &scene.frame.rho_o, radar.c, &scene.grid)?;
        let direct = synthesize_traces(&scene)?;
        let err = (&dr.data - &direct.data).norm() / direct.data.norm();
        println!(
            "{} target(s): raw {} x {}, chirp support {:.2e} s, compressed vs direct relative error {err:.2e}",
            scene.targets.len(),
            raw.rows(),
            raw.cols(),
            chirp.support()
        );
    }
    Ok(())
}
