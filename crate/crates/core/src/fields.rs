//! Trial fields on the ball and the functionals evaluated on them.
//!
//! With `‖u‖² = |∇u|_2² + a|u|_2²`,
//!
//! ```text
//! β(u) = ‖u‖² / |u|_{2*}²
//! δ(u) = ‖u‖^{s-2} |u|_q^{qt} / |u|_{2*}^{2* s/2}
//! Ψ_α(u) = β(u) (1 + α δ(u))
//! Φ_α(u) = (‖u‖²/2 - |u|_{2*}^{2*}/2*) (1 + α δ(u))^{N/2}
//! τ(u) = (‖u‖² / |u|_{2*}^{2*})^{(N-2)/4}
//! ```
//!
//! All of `β`, `δ`, `Ψ_α` are homogeneous of degree zero and `τ(u) u` lies on
//! the Nehari manifold `‖u‖² = |u|_{2*}^{2*}`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::constants::{closed_form_constants, Exponents};
use crate::error::{Error, Result};
use crate::geometry::{ball_radial_integral_many, concentration_splits, BallDomain, Instanton};
use crate::numerics::QuadratureSpec;

/// `c U_{ε,P} + d` restricted to the ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileField {
    pub dom: BallDomain,
    pub c: f64,
    pub inst: Instanton,
    pub d: f64,
    pub exponents: Exponents,
    pub a: f64,
}

impl ProfileField {
    pub fn new(dom: BallDomain, c: f64, inst: Instanton, d: f64, exponents: Exponents, a: f64) -> Result<Self> {
        if !(c >= 0.0 && d >= 0.0) || !c.is_finite() || !d.is_finite() {
            return Err(Error::InvalidParameter(format!("profile amplitudes must be finite and nonnegative, got c = {c}, d = {d}")));
        }
        if c == 0.0 && d == 0.0 {
            return Err(Error::DegenerateField("c = d = 0".into()));
        }
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
        }
        if inst.n != dom.dim() || exponents.n != dom.dim() {
            return Err(Error::InvalidParameter("field components disagree on the dimension".into()));
        }
        if inst.center_dist > dom.radius() * (1.0 + 1e-12) {
            return Err(Error::Domain(format!("instanton centre {} lies outside the ball", inst.center_dist)));
        }
        Ok(Self { dom, c, inst, d, exponents, a })
    }

    /// `U_{ε,P} + d` with `P` on the boundary.
    pub fn boundary(dom: BallDomain, eps: f64, d: f64, exponents: Exponents, a: f64) -> Result<Self> {
        Self::new(dom, 1.0, Instanton::on_boundary(&dom, eps)?, d, exponents, a)
    }

    /// The constant field `d`.
    pub fn constant(dom: BallDomain, d: f64, exponents: Exponents, a: f64) -> Result<Self> {
        Self::new(dom, 0.0, Instanton::on_boundary(&dom, dom.radius())?, d, exponents, a)
    }

    /// `λ u`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(self.dom, self.c * lambda, self.inst, self.d * lambda, self.exponents, self.a)
    }

    /// `v(x) = κ^{(N-2)/2} u(κx)` on `Ω/κ` with weight `aκ²`.
    pub fn rescaled(&self, kappa: f64) -> Result<Self> {
        let nf = self.dom.dim() as f64;
        let inst = Instanton::new(self.inst.n, self.inst.eps / kappa, self.inst.center_dist / kappa)?;
        Self::new(
            self.dom.shrunk(kappa)?,
            self.c,
            inst,
            self.d * kappa.powf((nf - 2.0) / 2.0),
            self.exponents,
            self.a * kappa * kappa,
        )
    }

    pub fn value(&self, r: f64) -> f64 {
        self.c * self.inst.profile(r).0 + self.d
    }

    /// `(|u|_q^q, |u|_{2*}^{2*}, |u|_2², |∇u|_2²)`.
    fn power_integrals(&self, q: f64, spec: &QuadratureSpec) -> Result<[f64; 4]> {
        let two_star = self.exponents.two_star;
        if self.c == 0.0 {
            let vol = self.dom.volume();
            return Ok([self.d.powf(q) * vol, self.d.powf(two_star) * vol, self.d * self.d * vol, 0.0]);
        }
        let splits = concentration_splits(&self.dom, self.inst.center_dist, self.inst.eps);
        let [lq, crit, l2, grad] = ball_radial_integral_many(
            &self.dom,
            self.inst.center_dist,
            |r| {
                let (u, du) = self.inst.profile(r);
                let v = self.c * u + self.d;
                let dv = self.c * du;
                [v.powf(q), v.powf(two_star), v * v, dv * dv]
            },
            &splits,
            spec,
        )?;
        Ok([lq.value, crit.value, l2.value, grad.value])
    }

    fn lq_power(&self, q: f64, spec: &QuadratureSpec) -> Result<f64> {
        if self.c == 0.0 {
            return Ok(self.d.powf(q) * self.dom.volume());
        }
        let splits = concentration_splits(&self.dom, self.inst.center_dist, self.inst.eps);
        let [lq] = ball_radial_integral_many(
            &self.dom,
            self.inst.center_dist,
            |r| [(self.c * self.inst.profile(r).0 + self.d).powf(q)],
            &splits,
            spec,
        )?;
        Ok(lq.value)
    }
}

/// A radial function sampled on `0 = r_0 < … < r_M = R`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGridField {
    pub dom: BallDomain,
    pub nodes: Vec<f64>,
    pub values: Vec<f64>,
    /// May be zero so that residuals of `-Δu = f(u)` can be checked.
    pub a: f64,
}

impl RadialGridField {
    pub const MIN_INTERVALS: usize = 16;

    pub fn new(dom: BallDomain, nodes: Vec<f64>, values: Vec<f64>, a: f64) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidParameter("nodes and values differ in length".into()));
        }
        if nodes.len() < Self::MIN_INTERVALS + 1 {
            return Err(Error::InvalidParameter(format!("need at least {} grid intervals", Self::MIN_INTERVALS)));
        }
        let last = *nodes.last().expect("nonempty");
        if nodes[0] != 0.0 || (last - dom.radius()).abs() > 1e-12 * dom.radius() {
            return Err(Error::InvalidParameter("grid must run from 0 to R".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("grid nodes must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("grid values must be finite".into()));
        }
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("a must be nonnegative, got {a}")));
        }
        Ok(Self { dom, nodes, values, a })
    }

    /// `f` sampled on `M` equal intervals.
    pub fn uniform(dom: BallDomain, m: usize, f: impl Fn(f64) -> f64, a: f64) -> Result<Self> {
        let h = dom.radius() / m as f64;
        let nodes: Vec<f64> = (0..=m).map(|i| if i == m { dom.radius() } else { i as f64 * h }).collect();
        let values = nodes.iter().map(|&r| f(r)).collect();
        Self::new(dom, nodes, values, a)
    }

    /// First derivative: centred differences inside, zero at the centre,
    /// second-order one-sided at `R`.
    fn derivative(&self) -> Vec<f64> {
        let (x, u) = (&self.nodes, &self.values);
        let m = x.len() - 1;
        let mut du = vec![0.0; m + 1];
        for i in 1..m {
            let (hm, hp) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            du[i] = (hm * hm * u[i + 1] - hp * hp * u[i - 1] + (hp * hp - hm * hm) * u[i]) / (hm * hp * (hm + hp));
        }
        let (h1, h2) = (x[m] - x[m - 1], x[m - 1] - x[m - 2]);
        let w = h1 + h2;
        du[m] = u[m] * (2.0 * h1 + h2) / (h1 * w) - u[m - 1] * w / (h1 * h2) + u[m - 2] * h1 / (h2 * w);
        du
    }

    /// Trapezoid rule for `∫_Ω g(u, u') dx` with weight `ω_N r^{N-1}`.
    fn radial_trapezoid(&self, g: impl Fn(f64, f64) -> f64) -> f64 {
        let du = self.derivative();
        let n = self.dom.dim() as i32;
        let w: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.values)
            .zip(&du)
            .map(|((&r, &u), &d)| g(u, d) * r.powi(n - 1))
            .collect();
        let sum: f64 = self.nodes.windows(2).zip(w.windows(2)).map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1])).sum();
        self.dom.omega_n() * sum
    }
}

/// A field whose norms can be computed on its ball.
pub trait Field {
    fn domain(&self) -> &BallDomain;
    /// The weight `a` in `‖u‖²`.
    fn weight(&self) -> f64;
    /// `(|u|_q^q, |u|_{2*}^{2*}, |u|_2², |∇u|_2²)`.
    fn power_integrals(&self, q: f64, two_star: f64, spec: &QuadratureSpec) -> Result<[f64; 4]>;
    /// `|u|_p^p`.
    fn lp_power(&self, p: f64, spec: &QuadratureSpec) -> Result<f64>;
}

impl Field for ProfileField {
    fn domain(&self) -> &BallDomain {
        &self.dom
    }

    fn weight(&self) -> f64 {
        self.a
    }

    fn power_integrals(&self, q: f64, two_star: f64, spec: &QuadratureSpec) -> Result<[f64; 4]> {
        debug_assert!((two_star - self.exponents.two_star).abs() < 1e-12);
        ProfileField::power_integrals(self, q, spec)
    }

    fn lp_power(&self, p: f64, spec: &QuadratureSpec) -> Result<f64> {
        self.lq_power(p, spec)
    }
}

impl Field for RadialGridField {
    fn domain(&self) -> &BallDomain {
        &self.dom
    }

    fn weight(&self) -> f64 {
        self.a
    }

    fn power_integrals(&self, q: f64, two_star: f64, _spec: &QuadratureSpec) -> Result<[f64; 4]> {
        Ok([
            self.radial_trapezoid(|u, _| u.abs().powf(q)),
            self.radial_trapezoid(|u, _| u.abs().powf(two_star)),
            self.radial_trapezoid(|u, _| u * u),
            self.radial_trapezoid(|_, d| d * d),
        ])
    }

    fn lp_power(&self, p: f64, _spec: &QuadratureSpec) -> Result<f64> {
        Ok(self.radial_trapezoid(|u, _| u.abs().powf(p)))
    }
}

/// The norms every functional is built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Norms {
    /// `‖u‖²`
    pub norm_h1_sq: f64,
    /// `|u|_q^q` at the exponent's `q`
    pub q_power: f64,
    /// `|u|_{2*}`
    pub crit: f64,
    pub l2_sq: f64,
    pub grad_sq: f64,
}

pub fn field_norms(field: &impl Field, exp: &Exponents, spec: &QuadratureSpec) -> Result<Norms> {
    let [q_power, crit_power, l2_sq, grad_sq] = field.power_integrals(exp.q, exp.two_star, spec)?;
    let norm_h1_sq = grad_sq + field.weight() * l2_sq;
    if !(crit_power > 0.0) || !(norm_h1_sq > 0.0) {
        return Err(Error::DegenerateField("field vanishes on the domain".into()));
    }
    Ok(Norms { norm_h1_sq, q_power, crit: crit_power.powf(1.0 / exp.two_star), l2_sq, grad_sq })
}

/// Norms together with `|u|_p` for each requested `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    #[serde(flatten)]
    pub norms: Norms,
    /// `p ↦ |u|_p`
    pub lp: BTreeMap<String, f64>,
}

pub fn norms(field: &impl Field, exp: &Exponents, q_list: &[f64], spec: &QuadratureSpec) -> Result<NormReport> {
    let base = field_norms(field, exp, spec)?;
    let mut lp = BTreeMap::new();
    for &p in q_list {
        if !(p > 0.0) {
            return Err(Error::InvalidParameter(format!("Lebesgue exponent must be positive, got {p}")));
        }
        let power = if p == exp.q { base.q_power } else { field.lp_power(p, spec)? };
        lp.insert(format!("{p}"), power.powf(1.0 / p));
    }
    Ok(NormReport { norms: base, lp })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalReport {
    pub alpha: f64,
    pub norm_h1_sq: f64,
    pub lp: BTreeMap<String, f64>,
    pub crit: f64,
    pub beta: f64,
    pub delta: f64,
    pub psi: f64,
    pub phi: f64,
    pub tau: f64,
    pub crit_alpha: Option<f64>,
    /// Set when `δ = 0` and `β` is below the threshold.
    pub crit_alpha_unbounded: bool,
}

/// `β`, `δ`, `Ψ_α`, `Φ_α`, `τ` from the norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Functionals {
    pub beta: f64,
    pub delta: f64,
    pub psi: f64,
    pub phi: f64,
    pub tau: f64,
}

impl Functionals {
    pub fn from_norms(nm: &Norms, exp: &Exponents, alpha: f64) -> Self {
        let (h, c) = (nm.norm_h1_sq, nm.crit);
        let crit_power = c.powf(exp.two_star);
        let beta = h / (c * c);
        let delta = h.powf((exp.s - 2.0) / 2.0) * nm.q_power.powf(exp.t) / c.powf(exp.two_star * exp.s / 2.0);
        let factor = 1.0 + alpha * delta;
        Self {
            beta,
            delta,
            psi: beta * factor,
            phi: (0.5 * h - crit_power / exp.two_star) * factor.powf(exp.dim() / 2.0),
            tau: (h / crit_power).powf((exp.dim() - 2.0) / 4.0),
        }
    }
}

/// `(threshold - β)/(βδ)` when `β ≤ threshold`, absent above it.
pub fn critical_alpha_from(beta: f64, delta: f64, threshold: f64) -> Result<Option<f64>> {
    if beta > threshold {
        return Ok(None);
    }
    if beta == threshold {
        return Ok(Some(0.0));
    }
    if !(delta > 0.0) {
        return Err(Error::UnboundedAlpha);
    }
    Ok(Some((threshold - beta) / (beta * delta)))
}

pub fn functionals(field: &impl Field, exp: &Exponents, alpha: f64, spec: &QuadratureSpec) -> Result<FunctionalReport> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(format!("alpha must be nonnegative, got {alpha}")));
    }
    let report = norms(field, exp, &[exp.q, 2.0, exp.two_star], spec)?;
    let f = Functionals::from_norms(&report.norms, exp, alpha);
    let threshold = closed_form_constants(exp)?.threshold;
    let (crit_alpha, unbounded) = match critical_alpha_from(f.beta, f.delta, threshold) {
        Ok(v) => (v, false),
        Err(Error::UnboundedAlpha) => (None, true),
        Err(e) => return Err(e),
    };
    Ok(FunctionalReport {
        alpha,
        norm_h1_sq: report.norms.norm_h1_sq,
        lp: report.lp,
        crit: report.norms.crit,
        beta: f.beta,
        delta: f.delta,
        psi: f.psi,
        phi: f.phi,
        tau: f.tau,
        crit_alpha,
        crit_alpha_unbounded: unbounded,
    })
}

pub fn critical_alpha(field: &impl Field, exp: &Exponents, spec: &QuadratureSpec) -> Result<Option<f64>> {
    let nm = field_norms(field, exp, spec)?;
    let f = Functionals::from_norms(&nm, exp, 0.0);
    critical_alpha_from(f.beta, f.delta, closed_form_constants(exp)?.threshold)
}

/// Residual of the integrated Euler equation written in `γ = ‖u‖/|u|_{2*}^{2*/2}`:
/// `c₁γ² + c₂γ^{2-s} - (1 + (1 + s 2*/4) αδ)`, with `c₁ = 1 + (s/2)αδ`,
/// `c₂ = (qt/2)αδ`. Also returns `γ`.
pub fn gamma_identity_residual(nm: &Norms, exp: &Exponents, alpha: f64) -> (f64, f64) {
    let delta = Functionals::from_norms(nm, exp, alpha).delta;
    let gamma = nm.norm_h1_sq.sqrt() / nm.crit.powf(exp.two_star / 2.0);
    let c1 = 1.0 + exp.s / 2.0 * alpha * delta;
    let c2 = exp.q * exp.t / 2.0 * alpha * delta;
    let rhs = 1.0 + (1.0 + exp.s * exp.two_star / 4.0) * alpha * delta;
    (c1 * gamma * gamma + c2 * gamma.powf(2.0 - exp.s) - rhs, gamma)
}

/// Relative residual of the Euler system at the constant field `c`.
///
/// The three terms of
/// `(1 + (s/2)αδ) a c + (qt/2) α |c|_q^{q(t-1)} c^{q-1} - (1 + (1 + s2*/4)αδ) c^{2*-1}`
/// are summed and divided by the sum of their magnitudes, keeping the sign.
pub fn euler_residual_constant(c: f64, alpha: f64, exp: &Exponents, a: f64, dom: &BallDomain) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("constant must be positive, got {c}")));
    }
    if !(a > 0.0) {
        return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
    }
    let vol = dom.volume();
    let (q, s, t, ts) = (exp.q, exp.s, exp.t, exp.two_star);
    // δ is degree-zero, so the constant field has δ(c) = δ(1).
    let delta = a.powf((s - 2.0) / 2.0) * vol.powf(t - 1.0);
    let terms = [
        (1.0 + s / 2.0 * alpha * delta) * a * c,
        q * t / 2.0 * alpha * (c.powf(q) * vol).powf(t - 1.0) * c.powf(q - 1.0),
        -(1.0 + (1.0 + s * ts / 4.0) * alpha * delta) * c.powf(ts - 1.0),
    ];
    let scale: f64 = terms.iter().map(|x| x.abs()).sum();
    Ok(terms.iter().sum::<f64>() / scale)
}

/// Pointwise residual of the Euler system for a positive radial grid field,
/// with the Neumann condition imposed through reflected ghost nodes.
pub fn euler_residual_radial(field: &RadialGridField, alpha: f64, exp: &Exponents) -> Result<Vec<f64>> {
    if field.values.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::Domain("Euler residual needs a positive field".into()));
    }
    let (q, s, t, ts) = (exp.q, exp.s, exp.t, exp.two_star);
    let (delta, lq_factor) = if alpha == 0.0 {
        (0.0, 0.0)
    } else {
        let nm = field_norms(field, exp, &QuadratureSpec::default())?;
        let f = Functionals::from_norms(&nm, exp, alpha);
        (f.delta, nm.q_power.powf(t - 1.0))
    };
    let c1 = 1.0 + s / 2.0 * alpha * delta;
    let c3 = 1.0 + (1.0 + s * ts / 4.0) * alpha * delta;
    let nf = exp.dim();
    let (x, u) = (&field.nodes, &field.values);
    let m = x.len() - 1;
    let laplacian = |i: usize| -> f64 {
        if i == 0 {
            let h = x[1];
            nf * 2.0 * (u[1] - u[0]) / (h * h)
        } else if i == m {
            let h = x[m] - x[m - 1];
            2.0 * (u[m - 1] - u[m]) / (h * h)
        } else {
            let (hm, hp) = (x[i] - x[i - 1], x[i + 1] - x[i]);
            let denom = hm * hp * (hm + hp);
            let d2 = 2.0 * (hm * u[i + 1] - (hm + hp) * u[i] + hp * u[i - 1]) / denom;
            let d1 = (hm * hm * u[i + 1] - hp * hp * u[i - 1] + (hp * hp - hm * hm) * u[i]) / denom;
            d2 + (nf - 1.0) * d1 / x[i]
        }
    };
    Ok((0..=m)
        .map(|i| {
            c1 * (-laplacian(i) + field.a * u[i]) + q * t / 2.0 * alpha * lq_factor * u[i].powf(q - 1.0)
                - c3 * u[i].powf(ts - 1.0)
        })
        .collect())
}
