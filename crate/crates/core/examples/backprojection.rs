//! Backprojection of a stationary scene and of a mover with and without its velocity.
//!
//! `cargo run --release --example backprojection`

use sarpca::cli::Preset;
use sarpca::imaging::{fwhm, resolution, Backprojector, ImageGrid, ImageMode};
use sarpca::signal::synthesize_traces;

fn main() -> sarpca::Result<()> {
    let cfg = Preset::Sim1.config(false);
    let scene = cfg.scene()?;
    let tm = synthesize_traces(&scene)?;
    let (dr, dc) = resolution(&scene.radar, scene.frame.range, scene.aperture());
    println!("resolution {dr:.3} m x {dc:.3} m over a {:.1} m aperture", scene.aperture());

    let bp = Backprojector::new(&tm, &scene.trajectory, &scene.frame, &scene.radar)?;
    let grid = cfg.image_grid(&scene)?;
    let img = bp.image(&grid, None, ImageMode::Envelope);
    let (x, y) = img.peak_position();
    println!("scene image {:?}: peak at ({x:.2}, {y:.2}) m, {} pixels outside the record", grid.shape(), img.flagged);

    let mover = scene.targets.iter().find(|t| t.is_moving()).unwrap();
    let u = (mover.velocity[0], mover.velocity[1]);
    let zoom = ImageGrid::new((0.0, 0.0), 4.0, 16.0, dr / 20.0, dc / 20.0)?;
    for (label, motion) in [("uncompensated", None), ("compensated", Some(u))] {
        let z = bp.image(&zoom, motion, ImageMode::Envelope);
        let (i, k) = z.argmax();
        println!(
            "{label:>14}: peak {:.3e} at ({:.2}, {:.2}) m, range FWHM {:?}, cross FWHM {:?}",
            z.max_abs,
            zoom.range_axis[i],
            zoom.cross_axis[k],
            fwhm(&zoom.range_axis, &z.range_profile(k)),
            fwhm(&zoom.cross_axis, &z.cross_profile(i))
        );
    }
    Ok(())
}
