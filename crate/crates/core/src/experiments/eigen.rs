use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Instanton;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenResiduals {
    /// Max residual of `U'' + (N-1)U'/r + U^{2*-1} = 0` on the `M`-grid.
    pub res_u: f64,
    /// Max residual of the linearised equation with eigenvalue `2*-1` for `g = U'`.
    pub res_du: f64,
    /// `log2` of the residual ratio between the `M`- and `2M`-grids.
    pub order_u: f64,
    pub order_du: f64,
}

/// `(res_U, res_dU)` on a uniform grid of `m` intervals over `[0, r_trunc]`.
///
/// `U` uses the three-point stencil with `ΔU(0) = 2N(U_1 - U_0)/h²`. For
/// `g = U'` the singular `g/r²` term is removed by writing `g = r w`, where
/// `w = U'/r` is smooth and even and satisfies
/// `w'' + (N+1)w'/r + (2*-1)U^{2*-2} w = 0`; the residual of the `g`
/// equation is then `r` times that of `w`. The truncation end carries no
/// boundary condition and is skipped.
fn residuals(m: usize, r_trunc: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let p = (nf + 2.0) / (nf - 2.0);
    let inst = Instanton { n, eps: 1.0, center_dist: 0.0 };
    let h = r_trunc / m as f64;
    let r: Vec<f64> = (0..=m).map(|i| i as f64 * h).collect();
    let u: Vec<f64> = r.iter().map(|&x| inst.profile(x).0).collect();
    // U'/r, with limit -(N-2)/(N(N-2)) = -1/N at the origin
    let w: Vec<f64> = r.iter().map(|&x| if x == 0.0 { -1.0 / nf } else { inst.profile(x).1 / x }).collect();

    let mut res_u = (nf * 2.0 * (u[1] - u[0]) / (h * h) + u[0].powf(p)).abs();
    let mut res_g = 0.0f64;
    for i in 1..m {
        let d2 = |v: &[f64]| (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        let d1 = |v: &[f64]| (v[i + 1] - v[i - 1]) / (2.0 * h);
        let ru = d2(&u) + (nf - 1.0) * d1(&u) / r[i] + u[i].powf(p);
        let rw = d2(&w) + (nf + 1.0) * d1(&w) / r[i] + p * u[i].powf(p - 1.0) * w[i];
        res_u = res_u.max(ru.abs());
        res_g = res_g.max((r[i] * rw).abs());
    }
    (res_u, res_g)
}

/// Finite-difference residuals of the two known radial eigenfunctions of the
/// linearisation about `U`: `U` itself (eigenvalue 1) and `U'` (eigenvalue `2*-1`).
pub fn eigen_residuals(m: usize, r_trunc: f64, n: usize) -> Result<EigenResiduals> {
    if m < 64 {
        return Err(Error::InvalidParameter(format!("grid needs at least 64 intervals, got {m}")));
    }
    if !(r_trunc > 0.0) || !r_trunc.is_finite() {
        return Err(Error::InvalidParameter(format!("truncation radius must be positive, got {r_trunc}")));
    }
    if n < 3 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 3, got {n}")));
    }
    let (res_u, res_du) = residuals(m, r_trunc, n);
    let (fine_u, fine_du) = residuals(2 * m, r_trunc, n);
    Ok(EigenResiduals { res_u, res_du, order_u: (res_u / fine_u).log2(), order_du: (res_du / fine_du).log2() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_residuals() {
        let r = eigen_residuals(512, 50.0, 5).unwrap();
        // leading error near the origin: h² U''''(0) (1/12 + (N-1)/6) = 0.15 h² for N = 5
        let h = 50.0 / 512.0;
        assert!((r.res_u / (0.15 * h * h) - 1.0).abs() < 0.05, "{r:?}");
        assert!(r.res_du <= 1e-3, "{r:?}");
        assert!((r.order_u - 2.0).abs() <= 0.2 && (r.order_du - 2.0).abs() <= 0.2, "{r:?}");
    }

    #[test]
    fn higher_dimensions_converge_too() {
        for n in [6, 7, 8] {
            let r = eigen_residuals(256, 20.0, n).unwrap();
            assert!((r.order_u - 2.0).abs() <= 0.2 && (r.order_du - 2.0).abs() <= 0.2, "{n}: {r:?}");
        }
    }

    #[test]
    fn wrong_eigenvalue_is_visible() {
        // U' does not satisfy the equation with eigenvalue 1
        let nf = 5.0;
        let inst = Instanton { n: 5, eps: 1.0, center_dist: 0.0 };
        let (r, h) = (2.0, 1e-3);
        let g = |x: f64| inst.profile(x).1;
        let u = inst.profile(r).0;
        let lap = (g(r + h) - 2.0 * g(r) + g(r - h)) / (h * h) + (nf - 1.0) * (g(r + h) - g(r - h)) / (2.0 * h) / r
            - (nf - 1.0) * g(r) / (r * r);
        assert!((lap + u.powf(4.0 / 3.0) * g(r)).abs() > 1e-2);
        assert!(eigen_residuals(32, 50.0, 5).is_err());
    }
}
