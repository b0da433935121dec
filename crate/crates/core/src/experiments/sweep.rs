use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{closed_form_constants, make_exponents, Exponents};
use crate::error::{Error, Result};
use crate::geometry::{instanton_norms, BallDomain, Instanton, InstantonNorms};
use crate::numerics::QuadratureSpec;

/// One ε-sweep. `fitted[k]` is the Richardson estimate from points `k-1`
/// and `k`; `fitted_coefficient` is the last of them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub eps_values: Vec<f64>,
    pub raw: Vec<f64>,
    pub scaled: Vec<f64>,
    pub fitted: Vec<Option<f64>>,
    pub fitted_coefficient: f64,
    /// Change between the last two Richardson estimates.
    pub fit_residual: f64,
    /// The limit `scaled` should approach.
    pub reference: f64,
    /// Scaled next-order remainder per point.
    pub remainder: Vec<f64>,
    /// `max |remainder| / min |remainder|` over the sweep.
    pub remainder_spread: f64,
    /// Set when the sweep stopped early because a quadrature failed.
    pub truncated: bool,
}

impl SweepResult {
    pub fn relative_error(&self) -> f64 {
        (self.fitted_coefficient / self.reference - 1.0).abs()
    }

    /// `scaled` at the point nearest `eps`.
    pub fn scaled_at(&self, eps: f64) -> Option<f64> {
        self.eps_values
            .iter()
            .zip(&self.scaled)
            .min_by(|a, b| (a.0 / eps).ln().abs().total_cmp(&(b.0 / eps).ln().abs()))
            .map(|(_, &s)| s)
    }
}

/// `eps0 · 2^{-k}` for `k = 0..count`.
pub fn geometric_grid(eps0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| eps0 * 0.5f64.powi(k as i32)).collect()
}

fn check_grid(grid: &[f64], upper: f64) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::InvalidParameter("a sweep needs at least two ε values".into()));
    }
    if grid.iter().any(|&e| !(e > 0.0) || e > upper * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!("ε values must lie in (0, {upper}]")));
    }
    if grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("ε values must be strictly decreasing".into()));
    }
    Ok(())
}

/// Boundary-instanton norms along the grid, in parallel; stops at the first
/// failure and reports whether it did.
fn boundary_norms(dom: &BallDomain, q: f64, grid: &[f64], spec: &QuadratureSpec) -> Result<(Vec<InstantonNorms>, bool)> {
    let all: Vec<Result<InstantonNorms>> = grid
        .par_iter()
        .map(|&eps| instanton_norms(dom, &Instanton::on_boundary(dom, eps)?, q, spec))
        .collect();
    let mut out = Vec::with_capacity(all.len());
    for r in all {
        match r {
            Ok(n) => out.push(n),
            Err(e) if out.len() < 2 => return Err(e),
            Err(_) => return Ok((out, true)),
        }
    }
    Ok((out, false))
}

/// First-order Richardson on a grid with arbitrary ratios.
fn richardson(eps: &[f64], values: &[f64]) -> Vec<Option<f64>> {
    let mut out = vec![None];
    for k in 1..values.len() {
        let rho = eps[k - 1] / eps[k];
        out.push(Some((rho * values[k] - values[k - 1]) / (rho - 1.0)));
    }
    out
}

fn assemble(eps: Vec<f64>, raw: Vec<f64>, scaled: Vec<f64>, reference: f64, remainder: Vec<f64>, truncated: bool) -> SweepResult {
    let fitted = richardson(&eps, &scaled);
    let k = fitted.len();
    let last = fitted[k - 1].expect("at least two points");
    let fit_residual = if k >= 3 { (last - fitted[k - 2].expect("interior point")).abs() } else { f64::NAN };
    let abs: Vec<f64> = remainder.iter().map(|r| r.abs()).collect();
    let remainder_spread = abs.iter().cloned().fold(0.0, f64::max) / abs.iter().cloned().fold(f64::INFINITY, f64::min);
    SweepResult {
        eps_values: eps,
        raw,
        scaled,
        fitted,
        fitted_coefficient: last,
        fit_residual,
        reference,
        remainder,
        remainder_spread,
        truncated,
    }
}

/// `|U_{ε,P}|_q^q` for `P` on the boundary, scaled by `ε^{1/t}`; the limit
/// is `B(q,N)/2` and the remainder is reported against `ε^{1+1/t}`.
pub fn appendix_sweep(dom: &BallDomain, exp: &Exponents, eps_grid: &[f64], spec: &QuadratureSpec) -> Result<SweepResult> {
    check_grid(eps_grid, dom.radius() / 10.0)?;
    let half_b = closed_form_constants(exp)?.b / 2.0;
    let (norms, truncated) = boundary_norms(dom, exp.q, eps_grid, spec)?;
    let eps = eps_grid[..norms.len()].to_vec();
    let inv_t = 1.0 / exp.t;
    let raw: Vec<f64> = norms.iter().map(|n| n.q_norm_q).collect();
    let scaled = eps.iter().zip(&raw).map(|(e, r)| r / e.powf(inv_t)).collect();
    let remainder = eps.iter().zip(&raw).map(|(e, r)| (r - half_b * e.powf(inv_t)) / e.powf(1.0 + inv_t)).collect();
    Ok(assemble(eps, raw, scaled, half_b, remainder, truncated))
}

/// `β₀(U_{ε,P}) = |∇U|_2²/|U|_{2*}²` for `P` on the boundary, with
/// `scaled = (S 2^{-2/N} - β₀)/ε` compared against `2^{(N-2)/N} S A(N) H`.
/// The remainder column is `(β₀ - S 2^{-2/N} + slope·ε)/ε²` with the fitted slope.
pub fn curvature_slope(dom: &BallDomain, eps_grid: &[f64], spec: &QuadratureSpec) -> Result<SweepResult> {
    check_grid(eps_grid, dom.radius())?;
    let n = dom.dim();
    let nf = n as f64;
    let exp = make_exponents(n, 2.0 * nf / (nf - 1.0))?;
    let consts = closed_form_constants(&exp)?;
    let target = 2f64.powf((nf - 2.0) / nf) * consts.sobolev * consts.a_n * dom.mean_curvature();
    let (norms, truncated) = boundary_norms(dom, exp.q, eps_grid, spec)?;
    let eps = eps_grid[..norms.len()].to_vec();
    let raw: Vec<f64> = norms.iter().map(|m| m.grad_sq / (m.crit_norm * m.crit_norm)).collect();
    let scaled: Vec<f64> = eps.iter().zip(&raw).map(|(e, b)| (consts.threshold - b) / e).collect();
    let slope = *richardson(&eps, &scaled).last().expect("two points").as_ref().expect("richardson value");
    let remainder = eps.iter().zip(&raw).map(|(e, b)| (b - consts.threshold + slope * e) / (e * e)).collect();
    Ok(assemble(eps, raw, scaled, target, remainder, truncated))
}

/// Richardson limit of `β₀` itself, i.e. the intercept of the expansion.
pub fn curvature_intercept(sweep: &SweepResult) -> f64 {
    richardson(&sweep.eps_values, &sweep.raw).last().copied().flatten().expect("two points")
}

#[derive(Serialize)]
struct CsvRow {
    parameter: f64,
    raw: f64,
    scaled: f64,
    fitted: Option<f64>,
}

/// Columns `parameter, raw, scaled, fitted`.
pub fn write_sweep_csv(sweep: &SweepResult, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..sweep.eps_values.len() {
        w.serialize(CsvRow { parameter: sweep.eps_values[i], raw: sweep.raw[i], scaled: sweep.scaled[i], fitted: sweep.fitted[i] })
            .map_err(|e| Error::InvalidParameter(format!("csv output failed: {e}")))?;
    }
    w.flush().map_err(|e| Error::InvalidParameter(format!("csv output failed: {e}")))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_linear_error() {
        let eps = geometric_grid(0.1, 4);
        let vals: Vec<f64> = eps.iter().map(|e| 3.0 + 2.0 * e).collect();
        for v in richardson(&eps, &vals).into_iter().skip(1) {
            assert!((v.unwrap() - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_validation() {
        let dom = BallDomain::new(5, 1.0).unwrap();
        let exp = make_exponents(5, 2.5).unwrap();
        let spec = QuadratureSpec::default();
        assert!(appendix_sweep(&dom, &exp, &[0.2, 0.1], &spec).is_err());
        assert!(appendix_sweep(&dom, &exp, &[0.01, 0.02], &spec).is_err());
        assert!(appendix_sweep(&dom, &exp, &[0.01], &spec).is_err());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let dom = BallDomain::new(5, 1.0).unwrap();
        let exp = make_exponents(5, 8.0 / 3.0).unwrap();
        let sweep = appendix_sweep(&dom, &exp, &geometric_grid(0.05, 3), &QuadratureSpec::default()).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&sweep, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "parameter,raw,scaled,fitted");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].ends_with(','));
    }
}
