//! The N-ball, the rescaled instanton and reduction of ball integrals of
//! point-radial functions to one dimension.
//!
//! For a point `P` at distance `ρ` from the centre of `B_R`, the sphere of
//! radius `r` about `P` meets the ball in a spherical cap. Its area is
//!
//! ```text
//! μ(r) = r^{N-1} σ_{N-2} ∫_0^{φ_max(r)} sin^{N-2} φ dφ,
//! cos φ_max(r) = clamp((ρ² + r² - R²) / (2ρr), -1, 1),
//! ```
//!
//! where `σ_{N-2}` is the area of the unit sphere in `R^{N-1}`. Then
//! `∫_Ω g(|x - P|) dx = ∫_0^{R+ρ} g(r) μ(r) dr`.

use serde::Serialize;

use crate::constants::unit_sphere_area;
use crate::error::{Error, Result};
use crate::numerics::{gamma_fn, integrate_many, Integral, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallDomain {
    #[serde(rename = "N")]
    n: usize,
    #[serde(rename = "R")]
    radius: f64,
    #[serde(skip)]
    omega_n: f64,
    #[serde(skip)]
    sigma_lower: f64,
}

impl BallDomain {
    pub fn new(n: usize, radius: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Domain(format!("ball dimension must be at least 2, got {n}")));
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Domain(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { n, radius, omega_n: unit_sphere_area(n)?, sigma_lower: unit_sphere_area(n - 1)? })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Area of the unit sphere in `R^N`.
    pub fn omega_n(&self) -> f64 {
        self.omega_n
    }

    pub fn volume(&self) -> f64 {
        let nf = self.n as f64;
        std::f64::consts::PI.powf(nf / 2.0) * self.radius.powf(nf)
            / gamma_fn(nf / 2.0 + 1.0).expect("positive argument")
    }

    /// Mean curvature of the boundary sphere w.r.t. the outward normal.
    pub fn mean_curvature(&self) -> f64 {
        1.0 / self.radius
    }

    /// The ball `B_{R/κ}`.
    pub fn shrunk(&self, kappa: f64) -> Result<Self> {
        Self::new(self.n, self.radius / kappa)
    }
}

/// `U_{ε,P}` for a centre `P` at distance `center_dist` from the ball centre.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Instanton {
    #[serde(rename = "N")]
    pub n: usize,
    pub eps: f64,
    #[serde(rename = "rho_P")]
    pub center_dist: f64,
}

impl Instanton {
    pub fn new(n: usize, eps: f64, center_dist: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Domain(format!("instanton width must be positive, got {eps}")));
        }
        if !(center_dist >= 0.0) {
            return Err(Error::Domain(format!("centre distance must be nonnegative, got {center_dist}")));
        }
        Ok(Self { n, eps, center_dist })
    }

    /// Centred on the boundary of `dom`.
    pub fn on_boundary(dom: &BallDomain, eps: f64) -> Result<Self> {
        Self::new(dom.dim(), eps, dom.radius())
    }

    /// Value and radial derivative at distance `r` from the centre.
    pub fn profile(&self, r: f64) -> (f64, f64) {
        instanton_profile(self, r)
    }

    /// Abscissae where the profile changes character.
    fn split_points(&self, upper: f64) -> Vec<f64> {
        let mut pts = Vec::new();
        let mut x = self.eps;
        while x < upper {
            pts.push(x);
            x *= 4.0;
        }
        pts
    }
}

/// `ε^{-(N-2)/2} (N(N-2) / (N(N-2) + (r/ε)²))^{(N-2)/2}` and its `r`-derivative.
pub fn instanton_profile(inst: &Instanton, r: f64) -> (f64, f64) {
    let nf = inst.n as f64;
    let k = nf * (nf - 2.0);
    let ke2 = k * inst.eps * inst.eps;
    let denom = ke2 + r * r;
    let value = inst.eps.powf(-(nf - 2.0) / 2.0) * (ke2 / denom).powf((nf - 2.0) / 2.0);
    let derivative = -(nf - 2.0) * r / denom * value;
    (value, derivative)
}

fn sin_power_integral(power: i32, upper: f64) -> f64 {
    let spec = QuadratureSpec { abs_tol: 1e-16, rel_tol: 1e-14, max_subdivisions: 200, tail_cutoff: 1.0 };
    if upper <= 0.0 {
        return 0.0;
    }
    match integrate_many(|phi| [phi.sin().powi(power)], 0.0, upper, &[], &spec) {
        Ok([v]) => v.value,
        Err(Error::Convergence { estimate, .. }) => estimate,
        Err(_) => f64::NAN,
    }
}

/// Area of `{x : |x - P| = r} ∩ B_R` for `|P| = rho_p`.
pub fn cap_density(dom: &BallDomain, rho_p: f64, r: f64) -> f64 {
    let big_r = dom.radius();
    if r <= 0.0 {
        return 0.0;
    }
    if r + rho_p <= big_r {
        return dom.omega_n() * r.powi(dom.dim() as i32 - 1);
    }
    if r >= big_r + rho_p || rho_p == 0.0 {
        return 0.0;
    }
    let cos_max = ((rho_p * rho_p + r * r - big_r * big_r) / (2.0 * rho_p * r)).clamp(-1.0, 1.0);
    let phi_max = cos_max.acos();
    r.powi(dom.dim() as i32 - 1) * dom.sigma_lower * sin_power_integral(dom.dim() as i32 - 2, phi_max)
}

fn check_center(dom: &BallDomain, rho_p: f64) -> Result<()> {
    if !(rho_p >= 0.0) || rho_p > dom.radius() * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("centre distance {rho_p} is outside [0, {}]", dom.radius())));
    }
    Ok(())
}

/// `∫_0^{R+ρ} g(r) μ(r) dr` for several radial integrands at once.
pub fn ball_radial_integral_many<const K: usize>(
    dom: &BallDomain,
    rho_p: f64,
    g: impl Fn(f64) -> [f64; K],
    splits: &[f64],
    spec: &QuadratureSpec,
) -> Result<[Integral; K]> {
    check_center(dom, rho_p)?;
    let rho_p = rho_p.min(dom.radius());
    let upper = dom.radius() + rho_p;
    let mut cuts = splits.to_vec();
    if rho_p > 0.0 && rho_p < dom.radius() {
        cuts.push(dom.radius() - rho_p);
    }
    integrate_many(
        |r| {
            let m = cap_density(dom, rho_p, r);
            let mut v = g(r);
            for x in v.iter_mut() {
                *x = if m == 0.0 { 0.0 } else { *x * m };
            }
            v
        },
        0.0,
        upper,
        &cuts,
        spec,
    )
}

/// `∫_Ω g(|x - P|) dx` reduced to one dimension.
pub fn ball_radial_integral(
    dom: &BallDomain,
    rho_p: f64,
    g: impl Fn(f64) -> f64,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    let [out] = ball_radial_integral_many(dom, rho_p, |r| [g(r)], &[], spec)?;
    Ok(out)
}

/// Norms of `U_{ε,P}` restricted to the ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstantonNorms {
    /// `|U|_q^q`
    pub q_norm_q: f64,
    /// `|U|_{2*}`
    pub crit_norm: f64,
    /// `|U|_2²`
    pub l2_sq: f64,
    /// `|∇U|_2²`
    pub grad_sq: f64,
}

pub fn instanton_norms(dom: &BallDomain, inst: &Instanton, q: f64, spec: &QuadratureSpec) -> Result<InstantonNorms> {
    if inst.n != dom.dim() {
        return Err(Error::InvalidParameter("instanton and domain dimensions differ".into()));
    }
    let two_star = 2.0 * inst.n as f64 / (inst.n as f64 - 2.0);
    let upper = dom.radius() + inst.center_dist;
    let [qn, crit, l2, grad] = ball_radial_integral_many(
        dom,
        inst.center_dist,
        |r| {
            let (u, du) = inst.profile(r);
            [u.powf(q), u.powf(two_star), u * u, du * du]
        },
        &inst.split_points(upper),
        spec,
    )?;
    Ok(InstantonNorms {
        q_norm_q: qn.value,
        crit_norm: crit.value.powf(1.0 / two_star),
        l2_sq: l2.value,
        grad_sq: grad.value,
    })
}

/// Split points suited to a profile concentrated at scale `eps`.
pub fn concentration_splits(dom: &BallDomain, rho_p: f64, eps: f64) -> Vec<f64> {
    Instanton { n: dom.dim(), eps, center_dist: rho_p }.split_points(dom.radius() + rho_p)
}
