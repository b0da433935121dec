use proptest::prelude::*;

use sobolev_core::constants::make_exponents;
use sobolev_core::fields::{critical_alpha, field_norms, Functionals, ProfileField};
use sobolev_core::geometry::{cap_density, BallDomain, Instanton};
use sobolev_core::numerics::{gamma_fn, integrate, minimize, OptimizerSpec, QuadratureSpec};

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn exponents() -> impl Strategy<Value = (usize, f64)> {
    (5usize..=10, 0.0..=1.0f64).prop_map(|(n, u)| {
        let nf = n as f64;
        let (lo, hi) = (2.0 * nf / (nf - 1.0), 2.0 * (nf - 1.0) / (nf - 2.0));
        (n, lo + u * (hi - lo))
    })
}

fn profile_field() -> impl Strategy<Value = ProfileField> {
    (exponents(), 0.5..2.0f64, -3.0..0.0f64, 0.0..=1.0f64, 0.0..2.0f64, 0.0..2.0f64, 0.1..3.0f64).prop_map(
        |((n, q), radius, log_eps, rho, c, d, a)| {
            let dom = BallDomain::new(n, radius).unwrap();
            let inst = Instanton::new(n, radius * 10f64.powf(log_eps), rho * radius).unwrap();
            let d = if c < 0.1 { d + 0.1 } else { d };
            ProfileField::new(dom, c, inst, d, make_exponents(n, q).unwrap(), a).unwrap()
        },
    )
}

fn rel(x: f64, y: f64) -> f64 {
    ((x - y) / y).abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_is_linear(
        f in prop::collection::vec(-3.0..3.0f64, 1..8),
        g in prop::collection::vec(-3.0..3.0f64, 1..8),
        alpha in -2.0..2.0f64,
        beta in -2.0..2.0f64,
    ) {
        let spec = QuadratureSpec::default();
        let combined = integrate(|x| alpha * poly(&f, x) + beta * poly(&g, x), -1.0, 2.0, &spec).unwrap().value;
        let separate = alpha * integrate(|x| poly(&f, x), -1.0, 2.0, &spec).unwrap().value
            + beta * integrate(|x| poly(&g, x), -1.0, 2.0, &spec).unwrap().value;
        prop_assert!((combined - separate).abs() <= 10.0 * spec.abs_tol.max(spec.rel_tol * separate.abs()));
    }

    #[test]
    fn gamma_recurrence(x in 0.5..20.0f64) {
        prop_assert!(rel(gamma_fn(x + 1.0).unwrap(), x * gamma_fn(x).unwrap()) <= 1e-12);
    }

    #[test]
    fn minimize_never_worsens_the_start(
        cx in -2.0..2.0f64, cy in -2.0..2.0f64, sx in -3.0..3.0f64, sy in -3.0..3.0f64, k in 0.5..50.0f64,
    ) {
        let f = |p: &[f64]| (p[0] - cx).powi(2) + k * (p[1] - cy).powi(2) + (p[0] * p[1]).sin();
        let spec = OptimizerSpec::default();
        let bounds = [(-3.0, 3.0), (-3.0, 3.0)];
        let m = minimize(f, &[sx, sy], &bounds, &spec).unwrap();
        prop_assert!(m.value <= f(&[sx, sy]));
        prop_assert!(m.argmin.iter().zip(bounds).all(|(x, (lo, hi))| *x >= lo && *x <= hi));
        let again = minimize(f, &[sx, sy], &bounds, &spec).unwrap();
        prop_assert_eq!(m, again);
    }

    #[test]
    fn exponent_identities((n, q) in exponents()) {
        let e = make_exponents(n, q).unwrap();
        prop_assert!(e.identity_residual().abs() <= 1e-13);
        let (s_alt, t_alt) = e.alternative_form_residuals();
        prop_assert!(s_alt.abs() <= 1e-13 && t_alt.abs() <= 1e-13);
        prop_assert!((-1e-14..=1.0 + 1e-14).contains(&e.s));
        prop_assert!(e.t >= 2.0 / e.two_sharp - 1e-14 && e.t <= 1.0 + 1e-14);
    }

    #[test]
    fn cap_density_support(n in 5usize..=8, rho in 0.0..=1.0f64, r in 0.0..3.0f64) {
        let dom = BallDomain::new(n, 1.0).unwrap();
        let m = cap_density(&dom, rho, r);
        prop_assert!(m >= 0.0);
        if r > 1.0 + rho {
            prop_assert_eq!(m, 0.0);
        }
        if r < 1.0 - rho {
            prop_assert!(rel(m, dom.omega_n() * r.powi(n as i32 - 1)) < 1e-14);
        }
    }

    #[test]
    fn instanton_rescaling(n in 5usize..=8, eps in 1e-3..10.0f64, r in 0.0..20.0f64) {
        let inst = Instanton::new(n, eps, 0.0).unwrap();
        let unit = Instanton::new(n, 1.0, 0.0).unwrap();
        let lhs = inst.profile(r).0;
        let rhs = eps.powf(-(n as f64 - 2.0) / 2.0) * unit.profile(r / eps).0;
        prop_assert!(rel(lhs, rhs) < 1e-12);
        prop_assert!(inst.profile(r).1 <= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn functionals_are_degree_zero(f in profile_field(), log_lambda in -2.0..2.0f64, alpha in 0.0..10.0f64) {
        let spec = QuadratureSpec::default();
        let exp = f.exponents;
        let lambda = 10f64.powf(log_lambda);
        let g = f.scaled(lambda).unwrap();
        let u = Functionals::from_norms(&field_norms(&f, &exp, &spec).unwrap(), &exp, alpha);
        let v = Functionals::from_norms(&field_norms(&g, &exp, &spec).unwrap(), &exp, alpha);
        prop_assert!(rel(v.beta, u.beta) < 1e-10);
        prop_assert!(rel(v.delta, u.delta) < 1e-10);
        prop_assert!(rel(v.psi, u.psi) < 1e-10);
        prop_assert!(rel(v.tau, u.tau / lambda) < 1e-10);
        match (critical_alpha(&f, &exp, &spec).unwrap(), critical_alpha(&g, &exp, &spec).unwrap()) {
            (Some(x), Some(y)) => prop_assert!(rel(y, x) < 1e-10),
            (None, None) => {}
            (x, y) => prop_assert!(false, "{:?} vs {:?}", x, y),
        }
    }

    #[test]
    fn psi_is_nondecreasing_in_alpha(f in profile_field(), a1 in 0.0..10.0f64, step in 0.0..10.0f64) {
        let spec = QuadratureSpec::default();
        let nm = field_norms(&f, &f.exponents, &spec).unwrap();
        let lo = Functionals::from_norms(&nm, &f.exponents, a1);
        let hi = Functionals::from_norms(&nm, &f.exponents, a1 + step);
        prop_assert!(lo.delta >= 0.0);
        prop_assert!(hi.psi >= lo.psi);
    }

    #[test]
    fn nehari_projection(f in profile_field(), alpha in 0.0..10.0f64) {
        let spec = QuadratureSpec::default();
        let exp = f.exponents;
        let u = Functionals::from_norms(&field_norms(&f, &exp, &spec).unwrap(), &exp, alpha);
        let projected = f.scaled(u.tau).unwrap();
        let w = Functionals::from_norms(&field_norms(&projected, &exp, &spec).unwrap(), &exp, alpha);
        prop_assert!(rel(w.phi, u.psi.powf(exp.dim() / 2.0) / exp.dim()) < 1e-9);
        prop_assert!((w.tau - 1.0).abs() < 1e-10);
    }
}
