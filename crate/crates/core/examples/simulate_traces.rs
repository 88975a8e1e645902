//! Trace matrix of a preset scene, saved as SARM and CSV.
//!
//! `cargo run --release --example simulate_traces [-- sim2 out_dir]`

use std::path::PathBuf;

use sarpca::cli::Preset;
use sarpca::signal::synthesize_traces;

fn main() -> sarpca::Result<()> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().as_deref().unwrap_or("sim1").parse()?;
    let out = PathBuf::from(args.next().unwrap_or_else(|| "out_traces".into()));
    std::fs::create_dir_all(&out).map_err(|e| sarpca::Error::io(&out, e))?;

    let scene = preset.config(false).scene()?;
    let (stat, mov) = scene.populations();
    let tm = synthesize_traces(&scene)?;
    println!(
        "{preset}: {} stationary, {} moving, aperture {:.1} m, traces {} x {} (dt {:.3e} s)",
        stat.len(),
        mov.len(),
        scene.aperture(),
        tm.rows(),
        tm.cols(),
        tm.dt()
    );
    tm.save(out.join("M.sarm"))?;
    tm.write_csv(out.join("M.csv"))?;
    println!("wrote {}", out.display());
    Ok(())
}
