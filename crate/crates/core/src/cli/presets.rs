//! Named scenes.
//!
//! Desk-scale presets keep the GOTCHA radar and flight geometry but fly a
//! shorter aperture (`n = 128`); `full_size` restores `n = 296`.

use std::fmt;
use std::str::FromStr;

use super::config::{SceneConfig, SweepParameter, SweepSection, TargetSection};
use crate::error::Error;

pub const DESK_INTERVALS: usize = 128;
pub const FULL_INTERVALS: usize = 296;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    /// 30 random stationary targets and one mover through the reference point.
    Sim1,
    /// 20 random stationary targets and two movers.
    Sim2,
    /// `sim1` with a mover ten times brighter.
    Sim3,
    /// One stationary target 15 m off in cross-range over a 310 m aperture.
    Fig5,
    /// Rank of one stationary target swept 0..30 m in cross-range.
    Fig7,
    /// Rank of two stationary targets, second swept in cross-range.
    Fig10,
}

impl Preset {
    pub const ALL: [Preset; 6] = [Preset::Sim1, Preset::Sim2, Preset::Sim3, Preset::Fig5, Preset::Fig7, Preset::Fig10];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Sim1 => "sim1",
            Preset::Sim2 => "sim2",
            Preset::Sim3 => "sim3",
            Preset::Fig5 => "fig5",
            Preset::Fig7 => "fig7",
            Preset::Fig10 => "fig10",
        }
    }

    pub fn config(self, full_size: bool) -> SceneConfig {
        let mut cfg = SceneConfig { seed: 1, ..SceneConfig::default() };
        let intervals = if full_size { FULL_INTERVALS } else { DESK_INTERVALS };
        let u = 28.0 / 2f64.sqrt();
        let mover = TargetSection { u_range_mps: u, u_cross_mps: u, ..TargetSection::default() };
        match self {
            Preset::Sim1 | Preset::Sim3 => {
                cfg.sampling.slow_time_intervals = intervals;
                let sigma = if self == Preset::Sim3 { 10.0 } else { 1.0 };
                cfg.targets.push(TargetSection { sigma, ..mover });
                cfg.random_targets.count = 30;
            }
            Preset::Sim2 => {
                cfg.sampling.slow_time_intervals = intervals;
                let v = 14.0 / 3f64.sqrt();
                cfg.targets.push(mover);
                cfg.targets.push(TargetSection {
                    range_m: -5.0,
                    cross_m: 5.0,
                    u_range_mps: -v,
                    u_cross_mps: v * 2f64.sqrt(),
                    ..TargetSection::default()
                });
                cfg.random_targets.count = 20;
            }
            Preset::Fig5 | Preset::Fig7 | Preset::Fig10 => {
                // the rank figures use the full 310 m aperture at either scale
                cfg.sampling.slow_time_intervals = FULL_INTERVALS;
                cfg.sampling.imaging_radius_m = 16.0;
                cfg.windows.width_samples = 0;
                cfg.image.width_m = 32.0;
                cfg.image.height_m = 32.0;
                match self {
                    Preset::Fig5 => cfg.targets.push(TargetSection { cross_m: 15.0, ..TargetSection::default() }),
                    Preset::Fig7 => {
                        cfg.targets.push(TargetSection::default());
                        cfg.sweep = Some(SweepSection { target: 0, parameter: SweepParameter::CrossM, start: 0.0, stop: 30.0, count: 31 });
                    }
                    _ => {
                        cfg.targets.push(TargetSection { range_m: 5.0, cross_m: 5.0, ..TargetSection::default() });
                        cfg.targets.push(TargetSection { range_m: -5.0, cross_m: 0.0, ..TargetSection::default() });
                        cfg.sweep = Some(SweepSection { target: 1, parameter: SweepParameter::CrossM, start: 0.0, stop: 10.0, count: 21 });
                    }
                }
            }
        }
        cfg
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config { key: "preset".into(), reason: format!("unknown preset `{s}`") })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_build_scenes() {
        for p in Preset::ALL {
            let cfg = p.config(false);
            cfg.validate().unwrap();
            let scene = cfg.scene().unwrap_or_else(|e| panic!("{p}: {e}"));
            assert!(!scene.targets.is_empty());
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }

    #[test]
    fn scene_populations() {
        let (stat, mov) = Preset::Sim1.config(false).scene().unwrap().populations();
        assert_eq!((stat.len(), mov.len()), (30, 1));
        let (stat, mov) = Preset::Sim2.config(false).scene().unwrap().populations();
        assert_eq!((stat.len(), mov.len()), (20, 2));
        let sim3 = Preset::Sim3.config(false).scene().unwrap();
        assert_eq!(sim3.targets[0].sigma, 10.0);
        assert_eq!(Preset::Sim1.config(true).sampling.slow_time_intervals, FULL_INTERVALS);
    }
}
