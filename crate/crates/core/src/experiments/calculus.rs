use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants::make_exponents;
use crate::error::{Error, Result};

/// Largest `x` drawn uniformly; beyond it a fixed log-spaced tail is checked.
const X_MAX: f64 = 1e3;
const TAIL_POINTS: usize = 200;
const TAIL_DECADES: f64 = 6.0;
/// Allowed rounding slack on the margin.
const MARGIN_FLOOR: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CalculusReport {
    pub samples: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub worst_x: f64,
    pub worst_q: f64,
    pub passed: bool,
}

/// `(1+x)^q - 1 - (qt/2)|x|^{2/t} + q|x|`.
fn margin(x: f64, q: f64, t: f64) -> f64 {
    (q * x.ln_1p()).exp_m1() - q * t / 2.0 * x.abs().powf(2.0 / t) + q * x.abs()
}

/// Draws from `[-1, 1]`, `[-1, X_MAX]` and log-uniform magnitudes in turn.
fn draw(rng: &mut ChaCha8Rng, k: usize) -> f64 {
    match k % 3 {
        0 => rng.gen_range(-1.0..=1.0),
        1 => rng.gen_range(-1.0..=X_MAX),
        _ => {
            let mag = 10f64.powf(rng.gen_range(-10.0..X_MAX.log10()));
            if rng.gen_bool(0.5) {
                mag
            } else {
                -mag.min(1.0)
            }
        }
    }
}

struct Tally {
    samples: usize,
    violations: usize,
    worst: (f64, f64, f64),
}

impl Tally {
    fn new() -> Self {
        Self { samples: 0, violations: 0, worst: (f64::INFINITY, f64::NAN, f64::NAN) }
    }

    fn add(&mut self, x: f64, q: f64, t: f64) {
        let m = margin(x, q, t);
        self.samples += 1;
        if !(m >= MARGIN_FLOOR) {
            self.violations += 1;
        }
        if !(m >= self.worst.0) {
            self.worst = (m, x, q);
        }
    }

    fn report(self) -> CalculusReport {
        CalculusReport {
            samples: self.samples,
            violations: self.violations,
            worst_margin: self.worst.0,
            worst_x: self.worst.1,
            worst_q: self.worst.2,
            passed: self.violations == 0,
        }
    }
}

fn fixed_points(tally: &mut Tally, q: f64, t: f64) {
    tally.add(0.0, q, t);
    tally.add(-1.0, q, t);
    for i in 0..TAIL_POINTS {
        let x = X_MAX * 10f64.powf(TAIL_DECADES * i as f64 / (TAIL_POINTS - 1) as f64);
        tally.add(x, q, t);
    }
}

/// Checks `(1+x)^q ≥ 1 + (qt/2)|x|^{2/t} - q|x|` on `x ≥ -1` at fixed `(q, t)`.
/// `samples` random points are drawn; the endpoints `x = 0, -1` and a
/// log-spaced tail up to `1e9` are always included.
pub fn calculus_lemma_check(q: f64, t: f64, samples: usize, seed: u64) -> Result<CalculusReport> {
    if !(q >= 1.0 && t > 0.0 && t <= 1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!("need q >= 1 and t in (0, 1], got q = {q}, t = {t}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new();
    fixed_points(&mut tally, q, t);
    for k in 0..samples {
        let x = draw(&mut rng, k);
        tally.add(x, q, t);
    }
    Ok(tally.report())
}

/// As [`calculus_lemma_check`], with `q` drawn uniformly from `[2#, 2b]` for
/// every sample.
pub fn calculus_lemma_random(n: usize, samples: usize, seed: u64) -> Result<CalculusReport> {
    let lo = make_exponents(n, 2.0 * n as f64 / (n as f64 - 1.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tally = Tally::new();
    fixed_points(&mut tally, lo.q, lo.t);
    for k in 0..samples {
        let q = rng.gen_range(lo.two_sharp..=lo.two_flat);
        let e = lo.with_q(q)?;
        let x = draw(&mut rng, k);
        tally.add(x, e.q, e.t);
    }
    Ok(tally.report())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_at_zero_and_positive_margin_at_minus_one() {
        assert_eq!(margin(0.0, 8.0 / 3.0, 1.0), 0.0);
        let q = 8.0 / 3.0;
        assert!((margin(-1.0, q, 1.0) - (q / 2.0 - 1.0)).abs() < 1e-15);
        assert!(margin(-1.0, q, 1.0) > 0.0);
    }

    #[test]
    fn small_x_margin_is_accurate() {
        // (1+x)^q - 1 + q|x| - (qt/2)x² ≈ q(q-1)x²/2 - (qt/2)x² for small negative x
        let (q, t, x) = (8.0 / 3.0, 1.0, -1e-9);
        let expect = q * (q - 1.0) / 2.0 * x * x - q * t / 2.0 * x * x;
        assert!((margin(x, q, t) / expect - 1.0).abs() < 1e-6);
    }

    #[test]
    fn deterministic_and_passing() {
        let a = calculus_lemma_check(2.5, 0.8, 10_000, 7).unwrap();
        let b = calculus_lemma_check(2.5, 0.8, 10_000, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.passed && a.worst_margin >= MARGIN_FLOOR);
        assert!(calculus_lemma_random(6, 10_000, 1).unwrap().passed);
    }

    #[test]
    fn detects_a_false_inequality() {
        // with q below 1 the bound fails for large x
        let r = calculus_lemma_check(1.0, 0.2, 1000, 3).unwrap();
        assert!(!r.passed);
    }
}
