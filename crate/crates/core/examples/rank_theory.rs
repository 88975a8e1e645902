//! Covariance rank against the Toeplitz symbol predictions.
//!
//! `cargo run --release --example rank_theory`

use sarpca::cli::Preset;
use sarpca::geometry::{alpha, Target};
use sarpca::rank::{
    covariance_empirical, covariance_model_1target, diagonal_variation, essential_rank, scene_rank, szego_rank_fraction,
    szego_rank_fraction_quadrature, ModelGrid,
};
use sarpca::signal::synthesize_traces;

const EPS: f64 = 0.01;

fn main() -> sarpca::Result<()> {
    let cfg = Preset::Fig5.config(false);
    let scene = cfg.scene()?;
    let tm = synthesize_traces(&scene)?;
    let emp = covariance_empirical(&tm).gram;
    let a = alpha(&scene.frame, &scene.trajectory, &scene.targets[0], scene.radar.c);
    let grid = ModelGrid::new(&scene.grid, &scene.radar);
    let model = covariance_model_1target(&grid, a)?;
    println!("one target at cross-range 15 m: alpha {a:.3e}");
    println!("  diagonal variation {:.4}", diagonal_variation(&emp, emp.nrows() - 1));
    println!("  model misfit {:.4}", (&emp - &model.matrix).norm() / emp.norm());
    println!(
        "  rank {} of {}, closed form fraction {:.4}, quadrature {:.4}",
        essential_rank(&emp, EPS)?,
        emp.nrows(),
        szego_rank_fraction(a, scene.radar.bandwidth, scene.grid.delta_s, EPS)?,
        szego_rank_fraction_quadrature(&model.symbol, EPS)
    );

    let cfg = Preset::Fig7.config(false);
    let ranks: Vec<usize> = (0..=30)
        .step_by(3)
        .map(|y| scene_rank(&cfg.scene_with(vec![Target::stationary(0.0, y as f64)])?, EPS))
        .collect::<sarpca::Result<_>>()?;
    println!("rank vs cross-range 0..30 m (step 3): {ranks:?}");

    let cfg = Preset::Fig10.config(false);
    let ranks: Vec<usize> = (0..=10)
        .map(|y| {
            let targets = vec![Target::stationary(5.0, 5.0), Target::stationary(-5.0, (y as f64).max(0.01))];
            scene_rank(&cfg.scene_with(targets)?, EPS)
        })
        .collect::<sarpca::Result<_>>()?;
    println!("two targets, rank vs second cross-range 0..10 m: {ranks:?}");
    Ok(())
}
