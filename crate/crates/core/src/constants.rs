//! Exponent algebra for `(N, q)` and the closed-form constants built on it.
//!
//! Notation: `2* = 2N/(N-2)` is the critical Sobolev exponent, `2# = 2N/(N-1)`
//! and `2b = 2(N-1)/(N-2)` bound the admissible `q`, and
//!
//! ```text
//! s = 2 - N + q/(2* - q)        t = (2/(N-2)) / (2* - q)
//! ```
//!
//! satisfy `q t = 2s/(N-2) + 2`, with `(s, t) = (0, 2/2#)` at `q = 2#` and
//! `(1, 1)` at `q = 2b`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gamma_fn, integrate_with, Integral, PowerTail, QuadratureSpec};

/// Slack allowed when checking `q` against the admissible interval, so that
/// endpoints typed as decimals are accepted.
const Q_RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Exponents {
    #[serde(rename = "N")]
    pub n: usize,
    pub q: f64,
    pub two_star: f64,
    pub two_sharp: f64,
    pub two_flat: f64,
    pub s: f64,
    pub t: f64,
    /// Set when `N < 5`, outside the range the theory covers.
    pub theory_out_of_range: bool,
}

/// How `q` is chosen: an endpoint keyword, the midpoint, or a value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QChoice {
    TwoSharp,
    TwoFlat,
    Midpoint,
    Value(f64),
}

impl QChoice {
    pub fn resolve(self, n: usize) -> f64 {
        let nf = n as f64;
        let sharp = 2.0 * nf / (nf - 1.0);
        let flat = 2.0 * (nf - 1.0) / (nf - 2.0);
        match self {
            QChoice::TwoSharp => sharp,
            QChoice::TwoFlat => flat,
            QChoice::Midpoint => 0.5 * (sharp + flat),
            QChoice::Value(q) => q,
        }
    }
}

impl std::str::FromStr for QChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_sharp" => Ok(QChoice::TwoSharp),
            "two_flat" => Ok(QChoice::TwoFlat),
            "midpoint" => Ok(QChoice::Midpoint),
            other => other
                .parse::<f64>()
                .map(QChoice::Value)
                .map_err(|_| Error::InvalidParameter(format!("unrecognized q value '{other}'"))),
        }
    }
}

impl std::fmt::Display for QChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QChoice::TwoSharp => write!(f, "two_sharp"),
            QChoice::TwoFlat => write!(f, "two_flat"),
            QChoice::Midpoint => write!(f, "midpoint"),
            QChoice::Value(q) => write!(f, "{q}"),
        }
    }
}

/// Build the exponent record for `N >= 5`.
pub fn make_exponents(n: usize, q: f64) -> Result<Exponents> {
    make_exponents_checked(n, q, false)
}

/// Like [`make_exponents`], but with `allow_low_dimension` the dimensions
/// 3 and 4 are accepted and flagged as outside the theory.
pub fn make_exponents_checked(n: usize, q: f64, allow_low_dimension: bool) -> Result<Exponents> {
    let min_n = if allow_low_dimension { 3 } else { 5 };
    if n < min_n {
        return Err(Error::Domain(format!(
            "dimension N = {n} is not supported (minimum {min_n}{})",
            if allow_low_dimension { "" } else { "; N = 3, 4 need the low-dimension flag" }
        )));
    }
    let nf = n as f64;
    let two_star = 2.0 * nf / (nf - 2.0);
    let two_sharp = 2.0 * nf / (nf - 1.0);
    let two_flat = 2.0 * (nf - 1.0) / (nf - 2.0);
    if !q.is_finite() || q < two_sharp * (1.0 - Q_RANGE_SLACK) || q > two_flat * (1.0 + Q_RANGE_SLACK) {
        return Err(Error::ExponentRange { n, q, lo: two_sharp, hi: two_flat });
    }
    let q = q.clamp(two_sharp, two_flat);
    let s = 2.0 - nf + q / (two_star - q);
    let t = 2.0 / (nf - 2.0) / (two_star - q);
    Ok(Exponents { n, q, two_star, two_sharp, two_flat, s, t, theory_out_of_range: n < 5 })
}

impl Exponents {
    pub fn dim(&self) -> f64 {
        self.n as f64
    }

    /// Same dimension, different `q`.
    pub fn with_q(&self, q: f64) -> Result<Exponents> {
        make_exponents_checked(self.n, q, self.theory_out_of_range)
    }

    /// `q t - 2s/(N-2) - 2`, zero up to rounding.
    pub fn identity_residual(&self) -> f64 {
        self.q * self.t - 2.0 * self.s / (self.dim() - 2.0) - 2.0
    }

    /// Residuals of the alternative expressions `s = (N-1)(q-2#)/(2*-q)` and
    /// `t = s/N + (N-1)/N`.
    pub fn alternative_form_residuals(&self) -> (f64, f64) {
        let n = self.dim();
        let s_alt = (n - 1.0) * (self.q - self.two_sharp) / (self.two_star - self.q);
        let t_alt = self.s / n + (n - 1.0) / n;
        (self.s - s_alt, self.t - t_alt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsTable {
    /// Best Sobolev constant.
    #[serde(rename = "S")]
    pub sobolev: f64,
    /// `S^{N/2}`, the instanton energy.
    #[serde(rename = "S_pow_N2")]
    pub sobolev_pow_half_n: f64,
    /// Area of the unit sphere in `R^N`.
    #[serde(rename = "omega_N")]
    pub omega_n: f64,
    /// `B(q, N) = ∫ U^q` over `R^N`.
    #[serde(rename = "B")]
    pub b: f64,
    /// Curvature coefficient `A(N)`.
    #[serde(rename = "A")]
    pub a_n: f64,
    /// `S / 2^{2/N}`.
    pub threshold: f64,
}

pub fn unit_sphere_area(n: usize) -> Result<f64> {
    let nf = n as f64;
    Ok(2.0 * PI.powf(nf / 2.0) / gamma_fn(nf / 2.0)?)
}

pub fn sobolev_pow_half_n(n: usize) -> Result<f64> {
    let nf = n as f64;
    Ok(PI.powf((nf + 1.0) / 2.0) / 2f64.powf(nf - 1.0) * (nf * (nf - 2.0)).powf(nf / 2.0)
        / gamma_fn((nf + 1.0) / 2.0)?)
}

/// `B(q, N) = π^{N/2} [N(N-2)]^{N/2} Γ((N-2)q/2 - N/2) / Γ((N-2)q/2)`.
pub fn instanton_q_mass(n: usize, q: f64) -> Result<f64> {
    let nf = n as f64;
    let k = (nf - 2.0) * q / 2.0;
    if !(k - nf / 2.0 > 0.0) {
        return Err(Error::Domain(format!("B(q, N) has a Gamma pole: (N-2)q/2 - N/2 = {} <= 0", k - nf / 2.0)));
    }
    Ok(PI.powf(nf / 2.0) * (nf * (nf - 2.0)).powf(nf / 2.0) * gamma_fn(k - nf / 2.0)? / gamma_fn(k)?)
}

/// `A(N) = ((N-1)/N) π^{-1/2} Γ((N-3)/2) / Γ((N-2)/2)`.
pub fn curvature_coefficient(n: usize) -> Result<f64> {
    let nf = n as f64;
    if n <= 3 {
        return Err(Error::Domain(format!("A(N) has a Gamma pole at N = {n}")));
    }
    Ok((nf - 1.0) / nf / PI.sqrt() * gamma_fn((nf - 3.0) / 2.0)? / gamma_fn((nf - 2.0) / 2.0)?)
}

pub fn closed_form_constants(exp: &Exponents) -> Result<ConstantsTable> {
    let n = exp.n;
    let nf = exp.dim();
    let s_pow = sobolev_pow_half_n(n)?;
    let sobolev = s_pow.powf(2.0 / nf);
    Ok(ConstantsTable {
        sobolev,
        sobolev_pow_half_n: s_pow,
        omega_n: unit_sphere_area(n)?,
        b: instanton_q_mass(n, exp.q)?,
        a_n: curvature_coefficient(n)?,
        threshold: sobolev * 2f64.powf(-2.0 / nf),
    })
}

fn instanton_scale(n: usize) -> f64 {
    (n * (n - 2)) as f64
}

/// `ω_N ∫_0^∞ U'(r)² r^{N-1} dr` by quadrature, with the analytic
/// leading-order tail beyond the truncation radius.
pub fn oracle_instanton_energy(n: usize, spec: &QuadratureSpec) -> Result<Integral> {
    if n < 3 {
        return Err(Error::Domain(format!("N = {n} too small")));
    }
    let nf = n as f64;
    let k = instanton_scale(n);
    let integrand = |r: f64| {
        let u = (k / (k + r * r)).powf((nf - 2.0) / 2.0);
        let du = -(nf - 2.0) * r / (k + r * r) * u;
        du * du * r.powf(nf - 1.0)
    };
    // U'(r)² r^{N-1} ~ (N-2)² K^{N-2} r^{1-N}
    let tail = PowerTail { coefficient: (nf - 2.0).powi(2) * k.powf(nf - 2.0), exponent: nf - 1.0 };
    let mut out = integrate_with(integrand, 0.0, f64::INFINITY, &[k.sqrt()], Some(tail), spec)?;
    let omega = unit_sphere_area(n)?;
    let next_order = nf * k / spec.tail_cutoff.powi(2) * out.tail;
    out.value *= omega;
    out.tail *= omega;
    out.error_estimate = omega * (out.error_estimate + next_order);
    Ok(out)
}

/// `ω_N ∫_0^∞ U(r)^q r^{N-1} dr` by quadrature; requires `q > N/(N-2)`.
pub fn oracle_instanton_qnorm(n: usize, q: f64, spec: &QuadratureSpec) -> Result<Integral> {
    let nf = n as f64;
    if n < 3 || !(q > nf / (nf - 2.0)) {
        return Err(Error::Domain(format!("U^q is not integrable for N = {n}, q = {q}")));
    }
    let k = instanton_scale(n);
    let power = (nf - 2.0) * q / 2.0;
    let integrand = |r: f64| (k / (k + r * r)).powf(power) * r.powf(nf - 1.0);
    let tail = PowerTail { coefficient: k.powf(power), exponent: 2.0 * power - nf + 1.0 };
    let mut out = integrate_with(integrand, 0.0, f64::INFINITY, &[k.sqrt()], Some(tail), spec)?;
    let omega = unit_sphere_area(n)?;
    let next_order = power * k / spec.tail_cutoff.powi(2) * out.tail;
    out.value *= omega;
    out.tail *= omega;
    out.error_estimate = omega * (out.error_estimate + next_order);
    Ok(out)
}

/// Relative differences between the quadrature oracles and the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResiduals {
    /// `∫|∇U|²` against `S^{N/2}`.
    pub energy: f64,
    /// `∫U^{2*}` against `S^{N/2}`.
    pub critical_mass: f64,
    /// `∫U^q` against `B(q, N)`.
    pub q_mass: f64,
}

pub fn oracle_residuals(exp: &Exponents, spec: &QuadratureSpec) -> Result<OracleResiduals> {
    let table = closed_form_constants(exp)?;
    let rel = |x: f64, y: f64| ((x - y) / y).abs();
    Ok(OracleResiduals {
        energy: rel(oracle_instanton_energy(exp.n, spec)?.value, table.sobolev_pow_half_n),
        critical_mass: rel(oracle_instanton_qnorm(exp.n, exp.two_star, spec)?.value, table.sobolev_pow_half_n),
        q_mass: rel(oracle_instanton_qnorm(exp.n, exp.q, spec)?.value, table.b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_exponents_for_n5() {
        let e = make_exponents(5, 2.5).unwrap();
        assert!(e.s.abs() < 1e-14);
        assert!((e.t - 0.8).abs() < 1e-14);
        let e = make_exponents(5, 8.0 / 3.0).unwrap();
        assert!((e.s - 1.0).abs() < 1e-14);
        assert!((e.t - 1.0).abs() < 1e-14);
    }

    #[test]
    fn interior_q_satisfies_identity() {
        let e = make_exponents(5, 2.6).unwrap();
        // s = -3 + 2.6/(10/3 - 2.6), t = (2/3)/(10/3 - 2.6)
        let gap = 10.0 / 3.0 - 2.6;
        assert!((e.s - (-3.0 + 2.6 / gap)).abs() < 1e-13);
        assert!((e.t - (2.0 / 3.0) / gap).abs() < 1e-13);
        assert!((2.6 * e.t - (2.0 * e.s / 3.0 + 2.0)).abs() < 1e-13);
    }

    #[test]
    fn out_of_range_q_names_the_interval() {
        match make_exponents(5, 9.9) {
            Err(Error::ExponentRange { lo, hi, .. }) => {
                assert_eq!(lo, 2.5);
                assert!((hi - 8.0 / 3.0).abs() < 1e-15);
            }
            other => panic!("{other:?}"),
        }
        let msg = make_exponents(5, 2.0).unwrap_err().to_string();
        assert!(msg.contains("[2.5, 2.66"), "{msg}");
    }

    #[test]
    fn low_dimensions_need_the_flag() {
        assert!(make_exponents(4, 3.0).is_err());
        let e = make_exponents_checked(4, 3.0, true).unwrap();
        assert!(e.theory_out_of_range);
        assert!(!make_exponents(6, 2.4).unwrap().theory_out_of_range);
    }

    #[test]
    fn keyword_choices_resolve_to_endpoints() {
        assert_eq!("two_sharp".parse::<QChoice>().unwrap().resolve(5), 2.5);
        assert_eq!("two_flat".parse::<QChoice>().unwrap().resolve(5), 8.0 / 3.0);
        assert_eq!("midpoint".parse::<QChoice>().unwrap().resolve(5), 0.5 * (2.5 + 8.0 / 3.0));
        assert_eq!("2.55".parse::<QChoice>().unwrap(), QChoice::Value(2.55));
        assert!("bogus".parse::<QChoice>().is_err());
    }

    #[test]
    fn n5_closed_forms() {
        let e = make_exponents(5, 8.0 / 3.0).unwrap();
        let c = closed_form_constants(&e).unwrap();
        assert!((c.omega_n - 8.0 * PI * PI / 3.0).abs() < 1e-12);
        // A(5) = (4/5)(1/√π)Γ(1)/Γ(3/2) = 8/(5π)
        assert!((c.a_n - 8.0 / (5.0 * PI)).abs() < 1e-14);
        // B(2b, 5) = π^{5/2} 15^{5/2} Γ(3/2)/Γ(4)
        let b = PI.powf(2.5) * 15f64.powf(2.5) * (0.5 * PI.sqrt()) / 6.0;
        assert!(((c.b - b) / b).abs() < 1e-13);
        assert!((c.threshold - c.sobolev * 2f64.powf(-0.4)).abs() < 1e-13);
        assert!((c.sobolev_pow_half_n - c.sobolev.powf(2.5)).abs() / c.sobolev_pow_half_n < 1e-13);
    }

    #[test]
    fn special_cases_of_b() {
        // B(2#, N) and B(2b, N) in their simplified Gamma forms
        for n in 5..=10usize {
            let nf = n as f64;
            let pref = PI.powf(nf / 2.0) * (nf * (nf - 2.0)).powf(nf / 2.0);
            let sharp = pref * gamma_fn(nf * (nf - 3.0) / (2.0 * (nf - 1.0))).unwrap()
                / gamma_fn(nf * (nf - 2.0) / (nf - 1.0)).unwrap();
            let flat = pref * gamma_fn((nf - 2.0) / 2.0).unwrap() / gamma_fn(nf - 1.0).unwrap();
            let e = make_exponents(n, 2.0 * nf / (nf - 1.0)).unwrap();
            assert!(((instanton_q_mass(n, e.two_sharp).unwrap() - sharp) / sharp).abs() < 1e-13);
            assert!(((instanton_q_mass(n, e.two_flat).unwrap() - flat) / flat).abs() < 1e-13);
        }
    }

    #[test]
    fn gamma_pole_is_domain_error() {
        assert!(matches!(instanton_q_mass(3, 3.0), Err(Error::Domain(_))));
        let e = make_exponents_checked(3, 3.0, true).unwrap();
        assert!(closed_form_constants(&e).is_err());
    }

    #[test]
    fn oracles_match_closed_forms_n5() {
        let spec = QuadratureSpec::default();
        let e = make_exponents(5, 8.0 / 3.0).unwrap();
        let r = oracle_residuals(&e, &spec).unwrap();
        assert!(r.energy < 1e-8 && r.critical_mass < 1e-8 && r.q_mass < 1e-8, "{r:?}");
    }
}
