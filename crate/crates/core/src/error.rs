use thiserror::Error;

/// Errors raised anywhere in the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "q = {q} is outside the admissible interval [{lo}, {hi}] = [{}, {}] for N = {n}",
        ratio(2 * n, n.saturating_sub(1)),
        ratio(2 * n.saturating_sub(1), n.saturating_sub(2))
    )]
    ExponentRange { n: usize, q: f64, lo: f64, hi: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Convergence { estimate: f64, error_bound: f64 },

    #[error("root is not bracketed: f({lo}) = {f_lo:e}, f({hi}) = {f_hi:e}")]
    Bracketing { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("delta(u) = 0 with beta(u) below the threshold: the critical alpha is unbounded")]
    UnboundedAlpha,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// `a/b` in lowest terms, or the integer when `b` divides `a`.
fn ratio(a: usize, b: usize) -> String {
    if b == 0 {
        return "inf".into();
    }
    let (mut x, mut y) = (a, b);
    while y != 0 {
        (x, y) = (y, x % y);
    }
    let (a, b) = (a / x, b / x);
    if b == 1 {
        a.to_string()
    } else {
        format!("{a}/{b}")
    }
}

pub type Result<T> = std::result::Result<T, Error>;
