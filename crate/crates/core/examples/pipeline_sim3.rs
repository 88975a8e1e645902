//! The full pipeline on `sim3`, writing every artifact the plotting scripts read.
//!
//! `cargo run --release --example pipeline_sim3 [-- out_dir]`

use std::path::PathBuf;

use sarpca::cli::{run, Command, CommonArgs, Preset};

fn main() -> sarpca::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "out_sim3".into()));
    let args = CommonArgs {
        config: None,
        out: out.clone(),
        preset: Some(Preset::Sim3),
        seed: None,
        threads: None,
        full_size: false,
        traces: None,
    };
    let manifest = run(Command::Pipeline, &args)?;
    for a in &manifest.artifacts {
        println!("{:<28} {:<5} {:?}", a.name, a.format, a.shape);
    }
    println!("{}", serde_json::to_string_pretty(&manifest.reports).unwrap());
    println!("manifest at {}", out.join("manifest.json").display());
    Ok(())
}
