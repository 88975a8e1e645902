//! Platform trajectories, target kinematics, travel times and the scalar
//! parameters (`alpha`, `beta`) that control the rank of the trace matrix.
//!
//! World coordinates are plain Cartesian metres. Targets are described in
//! *scene* coordinates `(range, cross-range, elevation)` with origin at the
//! reference point `rho_o`:
//!
//! * range points from the aperture centre `r(0)` towards `rho_o`, i.e. along
//!   `-m_o` where `m_o = (r(0) - rho_o) / L`;
//! * cross-range is the flight tangent `t` made orthogonal to `m_o`;
//! * elevation completes the right-handed triad.
//!
//! With this convention `alpha` is the slope `d(delta tau)/ds` at `s = 0`,
//! so a stationary target at positive cross-range (along `t`) has negative
//! `alpha`, and a target moving away from the platform has positive `alpha`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// Radar constants: wave speed, carrier frequency and bandwidth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadarConstants {
    /// Wave speed (m/s).
    pub c: f64,
    /// Carrier frequency (Hz).
    pub nu_o: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
}

impl RadarConstants {
    pub fn new(c: f64, nu_o: f64, bandwidth: f64) -> Result<Self> {
        for (name, v) in [("c", c), ("nu_o", nu_o), ("bandwidth", bandwidth)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be positive and finite, got {v}")));
            }
        }
        if bandwidth >= nu_o {
            return Err(Error::param("bandwidth", "must be smaller than the carrier frequency"));
        }
        Ok(Self { c, nu_o, bandwidth })
    }

    /// X-band airborne regime: 9.6 GHz carrier, 622 MHz bandwidth, c = 3e8 m/s.
    pub fn gotcha() -> Self {
        Self { c: 3.0e8, nu_o: 9.6e9, bandwidth: 622.0e6 }
    }

    /// Constants with a prescribed carrier wavelength (same `c` and bandwidth).
    pub fn with_wavelength(self, lambda_o: f64) -> Result<Self> {
        Self::new(self.c, self.c / lambda_o, self.bandwidth)
    }

    pub fn omega_o(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.nu_o
    }

    pub fn lambda_o(&self) -> f64 {
        self.c / self.nu_o
    }
}

/// Platform flight path parametrized by slow time `s` (arc length `V s`).
#[derive(Debug, Clone, PartialEq)]
pub enum Trajectory {
    Linear {
        /// Position at `s = 0`.
        center: Vec3,
        /// Unit tangent.
        tangent: Vec3,
        speed: f64,
    },
    /// Horizontal circle of radius `radius` around `axis` (a point at height `H`).
    Circular {
        axis: Vec3,
        radius: f64,
        speed: f64,
        /// Angle of `r(0)` measured from the x axis.
        phase: f64,
    },
}

impl Trajectory {
    pub fn linear(center: Vec3, tangent: Vec3, speed: f64) -> Result<Self> {
        let norm = tangent.norm();
        if !(norm > 0.0) {
            return Err(Error::param("tangent", "must be non-zero"));
        }
        if speed < 0.0 {
            return Err(Error::param("speed", "must be non-negative"));
        }
        Ok(Trajectory::Linear { center, tangent: tangent / norm, speed })
    }

    pub fn circular(axis: Vec3, radius: f64, speed: f64, phase: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::param("radius", "must be positive"));
        }
        if speed < 0.0 {
            return Err(Error::param("speed", "must be non-negative"));
        }
        Ok(Trajectory::Circular { axis, radius, speed, phase })
    }

    /// Straight track at height `height`, ground offset chosen so that the
    /// slant range to the origin is `range`; flies along +y at `speed`.
    pub fn straight_track(range: f64, height: f64, speed: f64) -> Result<Self> {
        if !(range > height && height >= 0.0) {
            return Err(Error::param("range", "must exceed the platform height"));
        }
        let ground = (range * range - height * height).sqrt();
        Self::linear(Vec3::new(-ground, 0.0, height), Vec3::y(), speed)
    }

    pub fn position(&self, s: f64) -> Vec3 {
        match *self {
            Trajectory::Linear { center, tangent, speed } => center + tangent * (speed * s),
            Trajectory::Circular { axis, radius, speed, phase } => {
                let phi = phase + speed * s / radius;
                axis + Vec3::new(radius * phi.cos(), radius * phi.sin(), 0.0)
            }
        }
    }

    pub fn tangent(&self, s: f64) -> Vec3 {
        match *self {
            Trajectory::Linear { tangent, .. } => tangent,
            Trajectory::Circular { radius, speed, phase, .. } => {
                let phi = phase + speed * s / radius;
                Vec3::new(-phi.sin(), phi.cos(), 0.0)
            }
        }
    }

    pub fn speed(&self) -> f64 {
        match *self {
            Trajectory::Linear { speed, .. } | Trajectory::Circular { speed, .. } => speed,
        }
    }

    /// Rigid translation of the whole path.
    pub fn translated(&self, shift: Vec3) -> Self {
        let mut out = self.clone();
        match &mut out {
            Trajectory::Linear { center, .. } => *center += shift,
            Trajectory::Circular { axis, .. } => *axis += shift,
        }
        out
    }
}

/// Reference point and the range/cross-range axes derived from `r(0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneFrame {
    pub rho_o: Vec3,
    /// Unit vector from `rho_o` towards `r(0)`.
    pub m_o: Vec3,
    /// Orthogonal projector `I - m_o m_o^T`.
    pub projector: Matrix3<f64>,
    /// Range `|r(0) - rho_o|`.
    pub range: f64,
    pub e_range: Vec3,
    pub e_cross: Vec3,
    pub e_elev: Vec3,
}

impl SceneFrame {
    pub fn new(rho_o: Vec3, trajectory: &Trajectory) -> Result<Self> {
        let offset = trajectory.position(0.0) - rho_o;
        let range = offset.norm();
        if !(range > 0.0) {
            return Err(Error::param("rho_o", "coincides with the aperture centre"));
        }
        let m_o = offset / range;
        let projector = Matrix3::identity() - m_o * m_o.transpose();
        let t = trajectory.tangent(0.0);
        let e_range = -m_o;
        let cross = t - m_o * t.dot(&m_o);
        let e_cross = if cross.norm() > 1e-12 {
            cross.normalize()
        } else {
            // flying straight at the scene: any horizontal normal will do
            let fallback = Vec3::z().cross(&m_o);
            if fallback.norm() > 1e-12 { fallback.normalize() } else { Vec3::x() }
        };
        let e_elev = e_range.cross(&e_cross);
        Ok(Self { rho_o, m_o, projector, range, e_range, e_cross, e_elev })
    }

    /// Scene coordinates (range, cross-range, elevation) to a world point.
    pub fn to_world(&self, scene: &Vec3) -> Vec3 {
        self.rho_o + self.direction_to_world(scene)
    }

    /// Scene-frame vector (e.g. a velocity) to world components.
    pub fn direction_to_world(&self, scene: &Vec3) -> Vec3 {
        self.e_range * scene.x + self.e_cross * scene.y + self.e_elev * scene.z
    }

    pub fn to_scene(&self, world: &Vec3) -> Vec3 {
        let d = world - self.rho_o;
        Vec3::new(d.dot(&self.e_range), d.dot(&self.e_cross), d.dot(&self.e_elev))
    }

    pub fn translated(&self, shift: Vec3) -> Self {
        Self { rho_o: self.rho_o + shift, ..self.clone() }
    }
}

/// Point target in uniform motion `rho(s) = rho0 + s u` (scene coordinates).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub rho0: Vec3,
    pub velocity: Vec3,
    pub sigma: f64,
}

impl Target {
    pub fn stationary(range: f64, cross: f64) -> Self {
        Self { rho0: Vec3::new(range, cross, 0.0), velocity: Vec3::zeros(), sigma: 1.0 }
    }

    pub fn moving(range: f64, cross: f64, u_range: f64, u_cross: f64) -> Self {
        Self {
            rho0: Vec3::new(range, cross, 0.0),
            velocity: Vec3::new(u_range, u_cross, 0.0),
            sigma: 1.0,
        }
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn is_moving(&self) -> bool {
        self.velocity.norm() > 0.0
    }

    pub fn validate(&self, platform_speed: Option<f64>) -> Result<()> {
        if self.rho0.z != 0.0 || self.velocity.z != 0.0 {
            return Err(Error::param("target", "targets lie in the imaging plane (elevation 0)"));
        }
        if let Some(v) = platform_speed {
            if self.velocity.norm() >= v {
                return Err(Error::param("target.velocity", "target speed must be below the platform speed"));
            }
        }
        Ok(())
    }

    /// World position at slow time `s`.
    pub fn position(&self, frame: &SceneFrame, s: f64) -> Vec3 {
        frame.to_world(&(self.rho0 + self.velocity * s))
    }
}

/// Round-trip travel time `2 |r(s) - rho| / c`.
pub fn travel_time(trajectory: &Trajectory, s: f64, rho: &Vec3, c: f64) -> f64 {
    2.0 * (trajectory.position(s) - rho).norm() / c
}

/// Delay relative to the reference point, `tau(s, rho(s)) - tau(s, rho_o)`.
pub fn delta_tau(trajectory: &Trajectory, s: f64, rho_s: &Vec3, rho_o: &Vec3, c: f64) -> f64 {
    let r = trajectory.position(s);
    2.0 * ((r - rho_s).norm() - (r - rho_o).norm()) / c
}

/// The slope `alpha` of the relative delay, linear in the velocity and in
/// the cross-range offset.
pub fn alpha(frame: &SceneFrame, trajectory: &Trajectory, target: &Target, c: f64) -> f64 {
    let u = frame.direction_to_world(&target.velocity);
    let offset = frame.direction_to_world(&target.rho0);
    alpha_terms(frame, trajectory, &u, &offset, c).iter().sum()
}

/// The three contributions to `alpha` (velocity, cross-range offset, coupling).
pub fn alpha_terms(frame: &SceneFrame, trajectory: &Trajectory, u: &Vec3, offset: &Vec3, c: f64) -> [f64; 3] {
    let v = trajectory.speed();
    let t = trajectory.tangent(0.0);
    let p_offset = frame.projector * offset;
    let l = frame.range;
    [
        -2.0 * u.dot(&frame.m_o) / c,
        -2.0 * v * t.dot(&p_offset) / (c * l),
        2.0 * u.dot(&p_offset) / (c * l),
    ]
}

/// Parameters of the two stationary target model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoTargetParams {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Offset from the closed-form expression with the squared range term.
    pub beta: f64,
    /// Exact `delta tau_1(0) - delta tau_2(0)`.
    pub beta_exact: f64,
}

/// `alpha_j` for two stationary targets (scene coordinates) and their offset `beta`.
pub fn alpha_j_beta(frame: &SceneFrame, trajectory: &Trajectory, rho1: &Vec3, rho2: &Vec3, c: f64) -> TwoTargetParams {
    let zero = Vec3::zeros();
    let d1 = frame.direction_to_world(rho1);
    let d2 = frame.direction_to_world(rho2);
    let a1 = alpha_terms(frame, trajectory, &zero, &d1, c)[1];
    let a2 = alpha_terms(frame, trajectory, &zero, &d2, c)[1];
    let l = frame.range;
    let term = |d: &Vec3| {
        let r = frame.m_o.dot(d);
        r + r * r / (2.0 * l)
    };
    let beta = 2.0 / c * (-term(&d1) + term(&d2));
    let w1 = frame.to_world(rho1);
    let w2 = frame.to_world(rho2);
    let beta_exact = delta_tau(trajectory, 0.0, &w1, &frame.rho_o, c) - delta_tau(trajectory, 0.0, &w2, &frame.rho_o, c);
    TwoTargetParams { alpha1: a1, alpha2: a2, beta, beta_exact }
}

/// Outcome of the small-aperture (Fresnel number) check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FresnelCheck {
    /// `a^2 / (lambda_o L)`.
    pub ratio: f64,
    /// `min(L / R^I, V / |u|)` times the safety factor.
    pub bound: f64,
    pub ok: bool,
    /// Ratio above half the bound.
    pub marginal: bool,
}

pub fn fresnel_number(aperture: f64, lambda_o: f64, range: f64) -> f64 {
    aperture * aperture / (lambda_o * range)
}

/// Checks `a^2/(lambda_o L) <= safety * min(L/R^I, V/|u|)`.
pub fn fresnel_check(
    aperture: f64,
    radar: &RadarConstants,
    frame: &SceneFrame,
    platform_speed: f64,
    target: &Target,
    imaging_radius: f64,
    safety: f64,
) -> Result<FresnelCheck> {
    if !(aperture >= 0.0) {
        return Err(Error::param("aperture", "must be non-negative"));
    }
    let ratio = fresnel_number(aperture, radar.lambda_o(), frame.range);
    let speed = target.velocity.norm();
    let velocity_bound = if speed > 0.0 { platform_speed / speed } else { f64::INFINITY };
    let bound = safety * (frame.range / imaging_radius).min(velocity_bound);
    let ok = ratio <= bound;
    let marginal = ratio > 0.5 * bound;
    if marginal {
        log::warn!("Fresnel number {ratio:.1} is above half of the bound {bound:.1}");
    }
    Ok(FresnelCheck { ratio, bound, ok, marginal })
}
