use crate::error::{Error, Result};

/// Brent's method on a sign-changing bracket `[lo, hi]`.
///
/// Returns once the bracket is narrower than `tol` or `f` vanishes exactly.
/// The bracket only ever shrinks.
pub fn find_root(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("root tolerance must be positive".into()));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa * fb < 0.0) {
        return Err(Error::Bracketing { lo, hi, f_lo: fa, f_hi: fb });
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb * fc > 0.0 {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
    }
    Ok(b)
}

/// Plain bisection; `pred(lo)` and `pred(hi)` must differ. Returns the final
/// bracket `(lo, hi)` with `hi - lo <= tol`.
pub fn bisect_predicate(pred: impl Fn(f64) -> bool, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (lo, hi);
    let at_lo = pred(lo);
    if at_lo == pred(hi) {
        return Err(Error::Bracketing {
            lo,
            hi,
            f_lo: if at_lo { 1.0 } else { 0.0 },
            f_hi: if at_lo { 1.0 } else { 0.0 },
        });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) == at_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_quadratic() {
        assert!((find_root(|x| x - 2.0, 0.0, 5.0, 1e-14).unwrap() - 2.0).abs() < 1e-13);
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn cosine_root_is_half_pi() {
        let r = find_root(f64::cos, 1.0, 2.0, 1e-14).unwrap();
        assert!((r - std::f64::consts::FRAC_PI_2).abs() < 1e-13);
    }

    #[test]
    fn no_sign_change_is_bracketing_error() {
        assert!(matches!(find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-10), Err(Error::Bracketing { .. })));
    }

    #[test]
    fn bisection_predicate() {
        let (lo, hi) = bisect_predicate(|x| x < 0.3, 0.0, 1.0, 1e-10).unwrap();
        assert!(lo <= 0.3 && hi >= 0.3 && hi - lo <= 1e-10);
        assert!(bisect_predicate(|_| true, 0.0, 1.0, 1e-3).is_err());
    }
}
