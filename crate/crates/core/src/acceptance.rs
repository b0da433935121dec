//! The acceptance suite: ten numbered criteria, each run at its stated
//! tolerance and reported as one pass/fail outcome.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{closed_form_constants, make_exponents, oracle_residuals, Exponents, QChoice};
use crate::error::Result;
use crate::experiments::{
    appendix_sweep, calculus_lemma_check, calculus_lemma_random, curvature_slope, eigen_residuals, estimate_alpha0,
    geometric_grid, s0_gap, s_alpha_curve, Alpha0Options,
};
use crate::fields::{critical_alpha, euler_residual_constant, field_norms, Functionals, ProfileField};
use crate::geometry::{BallDomain, Instanton};
use crate::numerics::{find_root, OptimizerSpec, QuadratureSpec};

/// Criteria that fail for reasons analysed in the README rather than bugs.
pub const KNOWN_DEVIATIONS: &[(u8, &str)] = &[
    (4, "measured slope is sqrt(N(N-2)) times the stated coefficient"),
    (6, "three-point stencil error 0.15 h^2 exceeds 1e-3 at M=512, R_trunc=50"),
];

pub const SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Wall time; kept out of serialized reports so they stay reproducible.
    #[serde(skip)]
    pub seconds: f64,
}

impl Outcome {
    pub fn known_deviation(&self) -> Option<&'static str> {
        KNOWN_DEVIATIONS.iter().find(|(id, _)| *id == self.id).map(|(_, why)| *why)
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "{} criterion {:>2}: {} [{:.2} s] {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.seconds,
            self.detail
        );
        if !self.passed {
            if let Some(why) = self.known_deviation() {
                s.push_str(&format!(" (known deviation: {why})"));
            }
        }
        s
    }
}

fn timed(id: u8, title: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> Outcome {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome { id, title, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn endpoints(n: usize) -> Result<[Exponents; 2]> {
    Ok([make_exponents(n, QChoice::TwoSharp.resolve(n))?, make_exponents(n, QChoice::TwoFlat.resolve(n))?])
}

fn rel(x: f64, y: f64) -> f64 {
    if x == y {
        0.0
    } else {
        ((x - y) / y).abs()
    }
}

pub fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut out = timed(1, "closed forms match radial quadrature oracles", || {
        let spec = QuadratureSpec::default();
        let mut worst = 0.0f64;
        for n in 5..=8 {
            for exp in endpoints(n)? {
                let r = oracle_residuals(&exp, &spec)?;
                worst = worst.max(r.energy).max(r.q_mass).max(r.critical_mass);
            }
        }
        Ok((worst <= 1e-8, format!("worst relative residual {worst:.2e} (tol 1e-8)")))
    });
    let secs = start.elapsed().as_secs_f64();
    if secs >= 10.0 {
        out.passed = false;
        out.detail.push_str(&format!("; runtime {secs:.1} s exceeds 10 s"));
    }
    out
}

pub fn criterion_2() -> Outcome {
    timed(2, "exponent identities", || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut worst = 0.0f64;
        for _ in 0..200 {
            let n = rng.gen_range(5..=10usize);
            let [lo, hi] = endpoints(n)?;
            let e = make_exponents(n, rng.gen_range(lo.q..=hi.q))?;
            let (s_alt, t_alt) = e.alternative_form_residuals();
            worst = worst.max(e.identity_residual().abs()).max(s_alt.abs()).max(t_alt.abs());
        }
        let mut endpoint = 0.0f64;
        for n in 5..=10 {
            let [lo, hi] = endpoints(n)?;
            endpoint = endpoint.max(lo.s.abs()).max((lo.t - 2.0 / lo.two_sharp).abs());
            endpoint = endpoint.max((hi.s - 1.0).abs()).max((hi.t - 1.0).abs());
        }
        Ok((
            worst <= 1e-13 && endpoint <= 1e-14,
            format!("identity residual {worst:.2e} (tol 1e-13), endpoint error {endpoint:.2e} (tol 1e-14)"),
        ))
    })
}

/// `ε = 0.064 · 2^{-k}`, ending at `1e-3`.
pub fn default_eps_grid() -> Vec<f64> {
    geometric_grid(0.064, 7)
}

pub fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut out = timed(3, "boundary L^q mass asymptotics", || {
        let spec = QuadratureSpec::default();
        let dom = |n| BallDomain::new(n, 1.0);
        let mut worst_err = 0.0f64;
        let mut worst_spread = 0.0f64;
        for n in [5, 6] {
            for exp in endpoints(n)? {
                let sweep = appendix_sweep(&dom(n)?, &exp, &default_eps_grid(), &spec)?;
                let at = sweep.scaled_at(1e-3).expect("grid reaches 1e-3");
                worst_err = worst_err.max(rel(at, sweep.reference));
                worst_spread = worst_spread.max(sweep.remainder_spread);
            }
        }
        Ok((
            worst_err <= 0.02 && worst_spread <= 2.0,
            format!(
                "worst |scaled/(B/2) - 1| at eps=1e-3: {worst_err:.2e} (tol 2e-2); remainder max/min ratio {worst_spread:.3} (bound 2)"
            ),
        ))
    });
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        out.passed = false;
        out.detail.push_str(&format!("; runtime {secs:.1} s exceeds 60 s"));
    }
    out
}

pub fn criterion_4() -> Outcome {
    timed(4, "boundary curvature expansion", || {
        let spec = QuadratureSpec::default();
        let mut slopes = Vec::new();
        let mut target = 0.0;
        for r in [1.0, 2.0, 4.0] {
            let sweep = curvature_slope(&BallDomain::new(5, r)?, &default_eps_grid(), &spec)?;
            if r == 1.0 {
                target = sweep.reference;
            }
            slopes.push(sweep.fitted_coefficient * r);
        }
        let ratio = slopes[0] / target;
        let scaling = slopes.iter().map(|s| rel(*s, slopes[0])).fold(0.0, f64::max);
        let magnitude_ok = (ratio - 1.0).abs() <= 0.05;
        let scaling_ok = scaling <= 0.05;
        Ok((
            magnitude_ok && scaling_ok,
            format!(
                "N=5: fitted/target = {ratio:.5} (tol 5%, sqrt(15) = {:.5}); slope*R spread over R=1,2,4: {scaling:.2e} (tol 5%)",
                15f64.sqrt()
            ),
        ))
    })
}

pub fn criterion_5() -> Outcome {
    timed(5, "calculus inequality", || {
        let mut jobs: Vec<(usize, Option<Exponents>)> = Vec::new();
        for n in 5..=8 {
            let [lo, hi] = endpoints(n)?;
            let mid = make_exponents(n, QChoice::Midpoint.resolve(n))?;
            for e in [lo, mid, hi] {
                jobs.push((n, Some(e)));
            }
            jobs.push((n, None));
        }
        let reports: Vec<_> = jobs
            .par_iter()
            .enumerate()
            .map(|(k, (n, e))| match e {
                Some(e) => calculus_lemma_check(e.q, e.t, 1_000_000, SEED + k as u64),
                None => calculus_lemma_random(*n, 1_000_000, SEED + k as u64),
            })
            .collect::<Result<_>>()?;
        let violations: usize = reports.iter().map(|r| r.violations).sum();
        let worst = reports.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min);
        let samples: usize = reports.iter().map(|r| r.samples).sum();
        Ok((
            violations == 0 && worst >= -1e-12,
            format!("{samples} samples over N=5..8, {violations} violations, worst margin {worst:.2e} (floor -1e-12)"),
        ))
    })
}

pub fn criterion_6() -> Outcome {
    timed(6, "eigenfunction residuals", || {
        let r = eigen_residuals(512, 50.0, 5)?;
        let ok = r.res_u < 1e-3 && r.res_du < 1e-3 && (r.order_u - 2.0).abs() <= 0.2 && (r.order_du - 2.0).abs() <= 0.2;
        Ok((
            ok,
            format!(
                "M=512, R_trunc=50, N=5: res_U {:.3e}, res_dU {:.3e} (tol 1e-3); order_U {:.3}, order_dU {:.3} (2 +- 0.2)",
                r.res_u, r.res_du, r.order_u, r.order_du
            ),
        ))
    })
}

/// A random admissible profile field.
pub fn random_profile_field(rng: &mut impl Rng) -> Result<ProfileField> {
    let n = rng.gen_range(5..=8usize);
    let [lo, hi] = endpoints(n)?;
    let exp = make_exponents(n, rng.gen_range(lo.q..=hi.q))?;
    let radius = rng.gen_range(0.5..2.0);
    let dom = BallDomain::new(n, radius)?;
    let eps = radius * 10f64.powf(rng.gen_range(-3.0..0.0));
    let inst = Instanton::new(n, eps, radius * rng.gen_range(0.0..=1.0))?;
    let c = rng.gen_range(0.0..2.0);
    let d = if c < 0.2 { rng.gen_range(0.1..2.0) } else { rng.gen_range(0.0..2.0) };
    ProfileField::new(dom, c, inst, d, exp, rng.gen_range(0.1..3.0))
}

pub fn criterion_7() -> Outcome {
    timed(7, "functional identities on random profile fields", || {
        let spec = QuadratureSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut fields = Vec::with_capacity(100);
        for _ in 0..100 {
            let f = random_profile_field(&mut rng)?;
            let lambda = 10f64.powf(rng.gen_range(-2.0..2.0));
            fields.push((f, lambda));
        }
        let worst: Vec<(f64, f64)> = fields
            .par_iter()
            .map(|(f, lambda)| -> Result<(f64, f64)> {
                let exp = f.exponents;
                let nm = field_norms(f, &exp, &spec)?;
                let scaled = f.scaled(*lambda)?;
                let nm_l = field_norms(&scaled, &exp, &spec)?;
                let tau = Functionals::from_norms(&nm, &exp, 0.0).tau;
                let nm_tau = field_norms(&f.scaled(tau)?, &exp, &spec)?;
                let mut nehari = 0.0f64;
                let mut homog = 0.0f64;
                for alpha in [0.0, 1.0, 10.0] {
                    let u = Functionals::from_norms(&nm, &exp, alpha);
                    let v = Functionals::from_norms(&nm_l, &exp, alpha);
                    let w = Functionals::from_norms(&nm_tau, &exp, alpha);
                    nehari = nehari.max(rel(w.phi, u.psi.powf(exp.dim() / 2.0) / exp.dim()));
                    homog = homog.max(rel(v.beta, u.beta)).max(rel(v.delta, u.delta)).max(rel(v.psi, u.psi));
                    homog = homog.max(rel(v.tau, u.tau / lambda));
                }
                let (ca, cb) = (critical_alpha(f, &exp, &spec), critical_alpha(&scaled, &exp, &spec));
                match (ca, cb) {
                    (Ok(Some(x)), Ok(Some(y))) => homog = homog.max(rel(y, x)),
                    (Ok(None), Ok(None)) => {}
                    (x, y) => {
                        return Err(crate::Error::InvalidParameter(format!(
                            "critical alpha differs under scaling: {x:?} vs {y:?}"
                        )))
                    }
                }
                Ok((nehari, homog))
            })
            .collect::<Result<_>>()?;
        let nehari = worst.iter().map(|w| w.0).fold(0.0, f64::max);
        let homog = worst.iter().map(|w| w.1).fold(0.0, f64::max);
        Ok((
            nehari <= 1e-9 && homog <= 1e-9,
            format!("100 fields x alpha in {{0,1,10}}: Nehari identity {nehari:.2e}, homogeneity/tau scaling {homog:.2e} (tol 1e-9)"),
        ))
    })
}

pub fn criterion_8() -> Outcome {
    timed(8, "unique constant solution of the Euler system", || {
        let dom = BallDomain::new(5, 1.0)?;
        let mut worst = 0.0f64;
        let mut extra_roots = 0usize;
        let mut root_err = 0.0f64;
        for exp in endpoints(5)?.into_iter().chain([make_exponents(5, QChoice::Midpoint.resolve(5))?]) {
            for a in [0.5f64, 1.0, 2.0] {
                let c0 = a.powf((exp.dim() - 2.0) / 4.0);
                for alpha in [0.0, 1.0, 10.0] {
                    worst = worst.max(euler_residual_constant(c0, alpha, &exp, a, &dom)?.abs());
                    // sign changes on a log grid over (1e-4 c0, 10 c0]
                    let f = |c: f64| euler_residual_constant(c, alpha, &exp, a, &dom).expect("positive c");
                    let grid: Vec<f64> = (0..=4000).map(|k| c0 * 10f64.powf(-4.0 + 5.0 * k as f64 / 4000.0)).collect();
                    let mut roots = 0usize;
                    for w in grid.windows(2) {
                        if f(w[0]) * f(w[1]) < 0.0 {
                            roots += 1;
                            let r = find_root(f, w[0], w[1], 1e-15 * c0)?;
                            root_err = root_err.max(rel(r, c0));
                        } else if f(w[1]) == 0.0 {
                            roots += 1;
                            root_err = root_err.max(rel(w[1], c0));
                        }
                    }
                    extra_roots += roots.abs_diff(1);
                }
            }
        }
        Ok((
            worst <= 1e-10 && extra_roots == 0 && root_err <= 1e-9,
            format!(
                "residual at a^((N-2)/4): {worst:.2e} (tol 1e-10); spurious/missing roots up to 10 c0: {extra_roots}; located root error {root_err:.2e}"
            ),
        ))
    })
}

/// `N = 5`, `q = 2b`, `a = 1` on the unit ball.
pub fn default_alpha0_setup() -> Result<(BallDomain, Exponents, f64)> {
    Ok((BallDomain::new(5, 1.0)?, make_exponents(5, QChoice::TwoFlat.resolve(5))?, 1.0))
}

pub fn criterion_9() -> Outcome {
    timed(9, "strict gap below the threshold and monotone S_alpha", || {
        let (dom, exp, a) = default_alpha0_setup()?;
        let opts = Alpha0Options::default();
        let (opt, quad) = (OptimizerSpec::default(), QuadratureSpec::default());
        let gap = s0_gap(&dom, &exp, a, &opts, &opt, &quad)?;
        let (curve, _) = s_alpha_curve(&dom, &exp, a, &opts, &opt, &quad)?;
        let monotone = curve.windows(2).all(|w| w[1].psi_min >= w[0].psi_min * (1.0 - 1e-12));
        Ok((
            gap.relative_gap > 1e-3 && gap.s0_estimate > 0.0 && monotone,
            format!(
                "S0 estimate {:.6} vs threshold {:.6}: relative gap {:.3e} (need > 1e-3); family-min Psi_alpha nondecreasing on alpha = 0..1: {monotone}",
                gap.s0_estimate, gap.threshold, gap.relative_gap
            ),
        ))
    })
}

pub fn criterion_10() -> Outcome {
    timed(10, "alpha_0 lower bounds consistency", || {
        let (dom, exp, a) = default_alpha0_setup()?;
        let opts = Alpha0Options::default();
        let (opt, quad) = (OptimizerSpec::default(), QuadratureSpec::default());
        let rep = estimate_alpha0(&dom, &exp, a, &opts, &opt, &quad)?;
        let floor = rep.lb_curvature.max(rep.lb_constant_test.unwrap_or(0.0));
        let bounds_ok = rep.lb_variational >= (1.0 - 1e-2) * floor;
        let bisection_ok = rep.bisection_relative_gap <= 1e-3;
        let kappa = 2.0;
        let scaled = estimate_alpha0(&dom.shrunk(kappa)?, &exp, a * kappa * kappa, &opts, &opt, &quad)?;
        let kappa_err = rel(scaled.lb_variational, kappa * rep.lb_variational);
        let threshold = closed_form_constants(&exp)?.threshold;
        Ok((
            bounds_ok && bisection_ok && kappa_err <= 1e-2,
            format!(
                "lb_variational {:.6} vs max(lb_curvature {:.6}, lb_constant {:.6}); bisection gap {:.2e} (tol 1e-3); kappa=2 scaling error {:.2e} (tol 1e-2); threshold {threshold:.6}",
                rep.lb_variational,
                rep.lb_curvature,
                rep.lb_constant_test.unwrap_or(f64::NAN),
                rep.bisection_relative_gap,
                kappa_err
            ),
        ))
    })
}

pub const FULL_SUITE_BUDGET_SECONDS: f64 = 600.0;

/// Runs every criterion in order. The whole-suite runtime budget is checked
/// as part of the last criterion.
pub fn run_all() -> Vec<Outcome> {
    run_with(|_| {})
}

/// As [`run_all`], calling `report` after each criterion.
pub fn run_with(mut report: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let start = Instant::now();
    let all: [fn() -> Outcome; 10] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
        criterion_9,
        criterion_10,
    ];
    let mut out = Vec::with_capacity(all.len());
    for (k, c) in all.iter().enumerate() {
        let mut o = c();
        if k + 1 == all.len() {
            let total = start.elapsed().as_secs_f64();
            if total >= FULL_SUITE_BUDGET_SECONDS {
                o.passed = false;
                o.detail.push_str(&format!("; full suite took {total:.1} s, over the {FULL_SUITE_BUDGET_SECONDS} s budget"));
            } else {
                o.detail.push_str(&format!("; full suite within the {FULL_SUITE_BUDGET_SECONDS} s budget"));
            }
        }
        report(&o);
        out.push(o);
    }
    out
}
