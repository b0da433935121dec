use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::constants::{closed_form_constants, Exponents};
use crate::error::{Error, Result};
use crate::fields::{critical_alpha_from, field_norms, Functionals, ProfileField};
use crate::geometry::{BallDomain, Instanton};
use crate::numerics::{bisect_predicate, minimize_multistart, Minimum, OptimizerSpec, QuadratureSpec};

/// Boundary instanton plus constant, `cos θ · U_{ε,P} + sin θ · d₀`, with
/// parameters `x = (ln(ε/R), θ)`.
///
/// `d₀ = (S^{N/2} / (2|Ω|))^{1/2*}` puts both pieces at comparable `L^{2*}`
/// size. Every quantity here is invariant under `(a, R, ε) ↦ (aκ², R/κ, ε/κ)`
/// up to the factor `κ` carried by `δ`.
#[derive(Debug, Clone, Copy)]
pub struct TrialFamily {
    pub dom: BallDomain,
    pub exp: Exponents,
    pub a: f64,
    pub eps_min_ratio: f64,
    d_unit: f64,
    threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldParams {
    pub eps: f64,
    pub theta: f64,
    pub c: f64,
    pub d: f64,
}

impl TrialFamily {
    pub fn new(dom: BallDomain, exp: Exponents, a: f64, eps_min_ratio: f64) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!("a must be positive, got {a}")));
        }
        if !(eps_min_ratio > 0.0 && eps_min_ratio < 1.0) {
            return Err(Error::InvalidParameter(format!("eps_min_ratio must lie in (0, 1), got {eps_min_ratio}")));
        }
        let consts = closed_form_constants(&exp)?;
        let d_unit = (consts.sobolev_pow_half_n / (2.0 * dom.volume())).powf(1.0 / exp.two_star);
        Ok(Self { dom, exp, a, eps_min_ratio, d_unit, threshold: consts.threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn bounds(&self) -> [(f64, f64); 2] {
        [(self.eps_min_ratio.ln(), 0.0), (0.0, FRAC_PI_2)]
    }

    pub fn params(&self, x: &[f64]) -> FieldParams {
        let theta = x[1].clamp(0.0, FRAC_PI_2);
        let c = if theta >= FRAC_PI_2 - 1e-12 { 0.0 } else { theta.cos() };
        FieldParams { eps: self.dom.radius() * x[0].exp(), theta, c, d: theta.sin() * self.d_unit }
    }

    pub fn field(&self, x: &[f64]) -> Result<ProfileField> {
        let p = self.params(x);
        let inst = Instanton::on_boundary(&self.dom, p.eps)?;
        ProfileField::new(self.dom, p.c, inst, p.d, self.exp, self.a)
    }

    pub fn functionals(&self, x: &[f64], spec: &QuadratureSpec) -> Result<Functionals> {
        let nm = field_norms(&self.field(x)?, &self.exp, spec)?;
        Ok(Functionals::from_norms(&nm, &self.exp, 0.0))
    }

    pub fn critical_alpha(&self, x: &[f64], spec: &QuadratureSpec) -> Result<Option<f64>> {
        let f = self.functionals(x, spec)?;
        critical_alpha_from(f.beta, f.delta, self.threshold)
    }

    /// `Ψ_α` at `x`.
    pub fn psi(&self, x: &[f64], alpha: f64, spec: &QuadratureSpec) -> Result<f64> {
        let f = self.functionals(x, spec)?;
        Ok(f.beta * (1.0 + alpha * f.delta))
    }

    /// The pure constant field.
    pub fn constant_point(&self) -> [f64; 2] {
        [0.0, FRAC_PI_2]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alpha0Options {
    pub alpha_grid: Vec<f64>,
    pub eps_min_ratio: f64,
    /// Start values of `ln(ε/R)`.
    pub log_eps_starts: Vec<f64>,
    pub theta_starts: Vec<f64>,
    /// Relative width of the final bisection bracket.
    pub bisection_rel_tol: f64,
}

impl Default for Alpha0Options {
    fn default() -> Self {
        Self {
            alpha_grid: (0..=10).map(|k| k as f64 * 0.1).collect(),
            eps_min_ratio: 1e-4,
            log_eps_starts: vec![1e-3f64.ln(), 0.03f64.ln(), 0.3f64.ln()],
            theta_starts: vec![0.0, 0.5, 1.0, 1.4],
            bisection_rel_tol: 1e-4,
        }
    }
}

impl Alpha0Options {
    fn starts(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for &l in &self.log_eps_starts {
            for &t in &self.theta_starts {
                out.push(vec![l, t]);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaPoint {
    pub alpha: f64,
    pub psi_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alpha0Report {
    #[serde(rename = "N")]
    pub n: usize,
    pub q: f64,
    pub a: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub threshold: f64,
    /// Constant-field bound; absent when `a > S/(2|Ω|)^{2/N}`.
    pub lb_constant_test: Option<f64>,
    /// `2^t S^{N/2} A(N) / B(q,N)^t · max H`.
    pub lb_curvature: f64,
    /// Best critical α over the trial family.
    pub lb_variational: f64,
    pub best_field_params: FieldParams,
    /// Critical α of the narrowest pure boundary instanton in the family.
    pub curvature_witness: Option<f64>,
    pub s_alpha_curve: Vec<AlphaPoint>,
    /// Where "family-min Ψ_α < threshold" switches off.
    pub lb_bisection: f64,
    pub bisection_relative_gap: f64,
    pub nonconverged_runs: usize,
}

/// `2^t S^{N/2} A(N) / B^t · (1/R)`.
pub fn curvature_bound(dom: &BallDomain, exp: &Exponents) -> Result<f64> {
    let c = closed_form_constants(exp)?;
    Ok(2f64.powf(exp.t) * c.sobolev_pow_half_n * c.a_n / c.b.powf(exp.t) * dom.mean_curvature())
}

/// `|Ω|^{1-t} (S/(2|Ω|)^{2/N} - a) / a^{s/2}` when `a ≤ S/(2|Ω|)^{2/N}`.
pub fn constant_bound(dom: &BallDomain, exp: &Exponents, a: f64) -> Result<Option<f64>> {
    let c = closed_form_constants(exp)?;
    let vol = dom.volume();
    let a_max = c.sobolev / (2.0 * vol).powf(2.0 / exp.dim());
    if a > a_max {
        return Ok(None);
    }
    Ok(Some(vol.powf(1.0 - exp.t) * (a_max - a) / a.powf(exp.s / 2.0)))
}

struct Search<'a> {
    family: &'a TrialFamily,
    opts: &'a Alpha0Options,
    opt_spec: &'a OptimizerSpec,
    quad_spec: &'a QuadratureSpec,
}

impl Search<'_> {
    fn run(&self, f: impl Fn(&[f64]) -> f64 + Sync, extra: &[Vec<f64>]) -> Result<Minimum> {
        let mut starts = self.opts.starts();
        starts.extend_from_slice(extra);
        minimize_multistart(f, &starts, &self.family.bounds(), self.opt_spec)
    }

    /// Maximise the critical α; scaled so that the objective is invariant
    /// under the κ-rescaling. Fields above the threshold are penalised by
    /// their relative excess.
    fn max_critical_alpha(&self, scale: f64) -> Result<Minimum> {
        let fam = self.family;
        self.run(
            |x| match fam.functionals(x, self.quad_spec) {
                Ok(f) if f.beta > fam.threshold => (f.beta - fam.threshold) / fam.threshold,
                Ok(f) => match critical_alpha_from(f.beta, f.delta, fam.threshold) {
                    Ok(Some(v)) => -v / scale,
                    _ => f64::INFINITY,
                },
                Err(_) => f64::INFINITY,
            },
            &[],
        )
    }

    /// Family-min of `Ψ_α`, including the pure constant.
    fn min_psi(&self, alpha: f64, extra: &[Vec<f64>]) -> Result<(Minimum, f64)> {
        let fam = self.family;
        let thr = fam.threshold;
        let m = self.run(|x| fam.psi(x, alpha, self.quad_spec).map_or(f64::INFINITY, |p| p / thr), extra)?;
        let constant = fam.psi(&fam.constant_point(), alpha, self.quad_spec)?;
        Ok((m.clone(), (m.value * thr).min(constant)))
    }
}

/// Family-min of `Ψ_α` along the α-grid, warm-started from `seed` and from
/// the previous grid point.
fn curve(search: &Search<'_>, seed: &[f64]) -> Result<(Vec<AlphaPoint>, usize)> {
    let mut out = Vec::with_capacity(search.opts.alpha_grid.len());
    let mut nonconverged = 0;
    let mut warm = vec![seed.to_vec()];
    for &alpha in &search.opts.alpha_grid {
        let (m, v) = search.min_psi(alpha, &warm)?;
        nonconverged += usize::from(!m.converged);
        warm = vec![seed.to_vec(), m.argmin];
        out.push(AlphaPoint { alpha, psi_min: v });
    }
    Ok((out, nonconverged))
}

/// Family-min of `Ψ_α` on `opts.alpha_grid`, with the number of
/// non-converged optimizer runs.
pub fn s_alpha_curve(
    dom: &BallDomain,
    exp: &Exponents,
    a: f64,
    opts: &Alpha0Options,
    opt_spec: &OptimizerSpec,
    quad_spec: &QuadratureSpec,
) -> Result<(Vec<AlphaPoint>, usize)> {
    let family = TrialFamily::new(*dom, *exp, a, opts.eps_min_ratio)?;
    let search = Search { family: &family, opts, opt_spec, quad_spec };
    curve(&search, &family.constant_point())
}

/// Lower bounds for the sharp constant `α₀` from the trial family, the
/// constant field and the boundary-curvature estimate, plus the
/// `S_α` curve on `opts.alpha_grid`. Only lower bounds are produced; nothing
/// is claimed at `α = α₀` itself.
pub fn estimate_alpha0(
    dom: &BallDomain,
    exp: &Exponents,
    a: f64,
    opts: &Alpha0Options,
    opt_spec: &OptimizerSpec,
    quad_spec: &QuadratureSpec,
) -> Result<Alpha0Report> {
    if opts.alpha_grid.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidParameter("alpha grid must be nonnegative".into()));
    }
    let family = TrialFamily::new(*dom, *exp, a, opts.eps_min_ratio)?;
    let lb_curvature = curvature_bound(dom, exp)?;
    let lb_constant_test = constant_bound(dom, exp, a)?;
    let search = Search { family: &family, opts, opt_spec, quad_spec };
    let mut nonconverged = 0;

    let best = search.max_critical_alpha(lb_curvature)?;
    nonconverged += usize::from(!best.converged);
    let mut candidates: Vec<(Vec<f64>, Option<f64>)> = vec![
        (best.argmin.clone(), family.critical_alpha(&best.argmin, quad_spec)?),
        (family.constant_point().to_vec(), family.critical_alpha(&family.constant_point(), quad_spec)?),
    ];
    let witness_point = vec![opts.eps_min_ratio.ln(), 0.0];
    let curvature_witness = family.critical_alpha(&witness_point, quad_spec)?;
    candidates.push((witness_point, curvature_witness));
    let (best_x, lb_variational) = candidates
        .into_iter()
        .filter_map(|(x, v)| v.map(|v| (x, v)))
        .fold((vec![0.0, FRAC_PI_2], 0.0), |acc, c| if c.1 > acc.1 { c } else { acc });

    let (s_alpha_curve, curve_nonconverged) = curve(&search, &best_x)?;
    nonconverged += curve_nonconverged;

    let lb_bisection = if lb_variational > 0.0 {
        let below = |alpha: f64| {
            search.min_psi(alpha, std::slice::from_ref(&best_x)).map(|(_, v)| v < family.threshold).unwrap_or(false)
        };
        let mut hi = 2.0 * lb_variational;
        while below(hi) {
            hi *= 2.0;
        }
        let (lo, hi) = bisect_predicate(below, 0.0, hi, opts.bisection_rel_tol * lb_variational)?;
        0.5 * (lo + hi)
    } else {
        0.0
    };
    let bisection_relative_gap =
        if lb_variational > 0.0 { (lb_bisection - lb_variational).abs() / lb_variational } else { 0.0 };

    Ok(Alpha0Report {
        n: dom.dim(),
        q: exp.q,
        a,
        r: dom.radius(),
        threshold: family.threshold,
        lb_constant_test,
        lb_curvature,
        lb_variational,
        best_field_params: family.params(&best_x),
        curvature_witness,
        s_alpha_curve,
        lb_bisection,
        bisection_relative_gap,
        nonconverged_runs: nonconverged,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct S0Gap {
    /// Family-min of `Ψ_0`, an upper bound for `S_0`.
    pub s0_estimate: f64,
    pub threshold: f64,
    pub relative_gap: f64,
    pub best_field_params: FieldParams,
    pub converged: bool,
}

pub fn s0_gap(
    dom: &BallDomain,
    exp: &Exponents,
    a: f64,
    opts: &Alpha0Options,
    opt_spec: &OptimizerSpec,
    quad_spec: &QuadratureSpec,
) -> Result<S0Gap> {
    let family = TrialFamily::new(*dom, *exp, a, opts.eps_min_ratio)?;
    let search = Search { family: &family, opts, opt_spec, quad_spec };
    let (m, v) = search.min_psi(0.0, &[])?;
    let x = if v < m.value * family.threshold { family.constant_point().to_vec() } else { m.argmin.clone() };
    Ok(S0Gap {
        s0_estimate: v,
        threshold: family.threshold,
        relative_gap: (family.threshold - v) / family.threshold,
        best_field_params: family.params(&x),
        converged: m.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::make_exponents;

    #[test]
    fn family_endpoints() {
        let dom = BallDomain::new(5, 1.0).unwrap();
        let exp = make_exponents(5, 8.0 / 3.0).unwrap();
        let fam = TrialFamily::new(dom, exp, 1.0, 1e-4).unwrap();
        let p = fam.params(&fam.constant_point());
        assert_eq!(p.c, 0.0);
        let spec = QuadratureSpec::default();
        let direct = constant_bound(&dom, &exp, 1.0).unwrap().unwrap();
        let got = fam.critical_alpha(&fam.constant_point(), &spec).unwrap().unwrap();
        assert!((got / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_bound_absent_for_large_a() {
        let dom = BallDomain::new(5, 1.0).unwrap();
        let exp = make_exponents(5, 2.5).unwrap();
        assert_eq!(constant_bound(&dom, &exp, 100.0).unwrap(), None);
    }
}
