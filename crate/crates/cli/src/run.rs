use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};
use sobolev_core::acceptance::run_all;
use sobolev_core::constants::{closed_form_constants, make_exponents_checked, oracle_residuals, Exponents};
use sobolev_core::experiments::{
    appendix_sweep, calculus_lemma_check, calculus_lemma_random, curvature_intercept, curvature_slope, eigen_residuals,
    estimate_alpha0, s0_gap, write_sweep_csv, Alpha0Options, SweepResult,
};
use sobolev_core::fields::{functionals, ProfileField};
use sobolev_core::geometry::{BallDomain, Instanton};
use sobolev_core::numerics::OptimizerSpec;

use crate::config::{parse_q, Command, Format, RunConfig};
use crate::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub results: BTreeMap<String, Value>,
    pub invariant_failures: Vec<String>,
    pub version: &'static str,
    #[serde(skip)]
    pub csv: Option<String>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.invariant_failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// What one experiment produced: its JSON section, failed checks and
/// optional sweep CSV.
struct Outcome {
    value: Value,
    failures: Vec<String>,
    csv: Option<String>,
}

impl Outcome {
    fn new(value: impl Serialize) -> Self {
        Self { value: serde_json::to_value(value).expect("result serializes"), failures: Vec::new(), csv: None }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }
}

fn command_name(c: Command) -> String {
    serde_json::to_value(c).ok().and_then(|v| v.as_str().map(String::from)).expect("unit variant")
}

/// Runs the configured experiment. Experiment errors end up in the report
/// rather than in the `Err` branch, which is reserved for bad input.
pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    if config.format == Format::Csv && !matches!(config.command, Command::Appendix | Command::Curvature) {
        return Err(CliError::Usage("csv output is only available for appendix and curvature".into()));
    }
    let name = command_name(config.command);
    let outcome = match dispatch(config) {
        Ok(o) => o,
        Err(CliError::Core(e)) => Outcome {
            value: json!({ "error": e.to_string() }),
            failures: vec![format!("{name}: {e}")],
            csv: None,
        },
        Err(e) => return Err(e),
    };
    let mut results = BTreeMap::new();
    results.insert(name, outcome.value);
    Ok(Report {
        config: config.clone(),
        results,
        invariant_failures: outcome.failures,
        version: env!("CARGO_PKG_VERSION"),
        csv: outcome.csv,
    })
}

fn exponents(config: &RunConfig) -> Result<Exponents, CliError> {
    Ok(make_exponents_checked(config.n, config.q_value, config.allow_low_dimension)?)
}

fn dispatch(config: &RunConfig) -> Result<Outcome, CliError> {
    match config.command {
        Command::Constants => constants(config),
        Command::Eval => eval(config),
        Command::Appendix => appendix(config),
        Command::Curvature => curvature(config),
        Command::Calculus => calculus(config),
        Command::Eigen => eigen(config),
        Command::Alpha0 => alpha0(config),
        Command::S0 => s0(config),
        Command::All => Ok(all()),
    }
}

fn constants(config: &RunConfig) -> Result<Outcome, CliError> {
    let exp = exponents(config)?;
    let table = closed_form_constants(&exp)?;
    let oracles = oracle_residuals(&exp, &config.quadrature)?;
    let tol = config.tol.unwrap_or(1e-8);
    let mut out = Outcome::new(json!({
        "N": exp.n,
        "q": exp.q,
        "two_star": exp.two_star,
        "two_sharp": exp.two_sharp,
        "two_flat": exp.two_flat,
        "s": exp.s,
        "t": exp.t,
        "S": table.sobolev,
        "omega_N": table.omega_n,
        "B": table.b,
        "A": table.a_n,
        "threshold": table.threshold,
        "oracle_residuals": oracles,
    }));
    let worst = oracles.energy.max(oracles.critical_mass).max(oracles.q_mass);
    out.check(worst <= tol, || format!("constants: oracle residual {worst:.3e} exceeds {tol:e}"));
    Ok(out)
}

fn number(obj: &Value, key: &str, default: f64) -> Result<f64, CliError> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(default),
        Some(v) => v.as_f64().ok_or_else(|| CliError::Usage(format!("field.{key} must be a number, got {v}"))),
    }
}

fn eval(config: &RunConfig) -> Result<Outcome, CliError> {
    let spec = config.field.as_ref().ok_or_else(|| CliError::Usage("eval needs --field".into()))?;
    if !spec.is_object() {
        return Err(CliError::Usage("field must be a JSON object".into()));
    }
    let n = match spec.get("N") {
        None | Some(Value::Null) => config.n,
        Some(v) => v.as_u64().ok_or_else(|| CliError::Usage(format!("field.N must be a positive integer, got {v}")))? as usize,
    };
    let q = match spec.get("q") {
        None | Some(Value::Null) => {
            if n == config.n {
                config.q_value
            } else {
                config.q.resolve(n)
            }
        }
        Some(Value::String(s)) => parse_q(s)?.resolve(n),
        Some(v) => v.as_f64().ok_or_else(|| CliError::Usage(format!("field.q must be a number or keyword, got {v}")))?,
    };
    let exp = make_exponents_checked(n, q, config.allow_low_dimension)?;
    let dom = BallDomain::new(n, number(spec, "R", config.r)?)?;
    let a = number(spec, "a", config.a)?;
    let alpha = number(spec, "alpha", config.alpha)?;
    let kind = spec.get("type").and_then(Value::as_str).unwrap_or("profile");
    let field = match kind {
        "constant" => ProfileField::constant(dom, number(spec, "d", 1.0)?, exp, a)?,
        "boundary" => ProfileField::boundary(dom, number(spec, "eps", 0.1)?, number(spec, "d", 0.0)?, exp, a)?,
        "profile" => {
            let inst = Instanton::new(n, number(spec, "eps", 0.1)?, number(spec, "rho_P", dom.radius())?)?;
            ProfileField::new(dom, number(spec, "c", 1.0)?, inst, number(spec, "d", 0.0)?, exp, a)?
        }
        other => {
            return Err(CliError::Usage(format!("unknown field type '{other}': expected profile, boundary or constant")))
        }
    };
    Ok(Outcome::new(functionals(&field, &exp, alpha, &config.quadrature)?))
}

fn sweep_csv(sweep: &SweepResult) -> Result<String, CliError> {
    let mut buf = Vec::new();
    write_sweep_csv(sweep, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv is utf-8"))
}

fn appendix(config: &RunConfig) -> Result<Outcome, CliError> {
    let exp = exponents(config)?;
    let dom = BallDomain::new(config.n, config.r)?;
    let sweep = appendix_sweep(&dom, &exp, &config.eps_grid, &config.quadrature)?;
    let tol = config.tol.unwrap_or(2e-2);
    let eps_last = *sweep.eps_values.last().expect("nonempty sweep");
    let err = (sweep.scaled.last().expect("nonempty sweep") / sweep.reference - 1.0).abs();
    let mut out = Outcome::new(json!({ "sweep": sweep, "relative_error_at_smallest_eps": err }));
    out.check(err <= tol, || format!("appendix: scaled mass at eps = {eps_last:e} is off by {err:.3e} (tol {tol:e})"));
    out.check(sweep.remainder_spread <= 2.0, || {
        format!("appendix: remainder max/min ratio {:.3} exceeds 2", sweep.remainder_spread)
    });
    out.check(!sweep.truncated, || "appendix: sweep stopped early".into());
    out.csv = Some(sweep_csv(&sweep)?);
    Ok(out)
}

fn curvature(config: &RunConfig) -> Result<Outcome, CliError> {
    let dom = BallDomain::new(config.n, config.r)?;
    let sweep = curvature_slope(&dom, &config.eps_grid, &config.quadrature)?;
    let intercept = curvature_intercept(&sweep);
    let nf = config.n as f64;
    let threshold = closed_form_constants(&make_exponents_checked(config.n, 2.0 * nf / (nf - 1.0), config.allow_low_dimension)?)?.threshold;
    let tol = config.tol.unwrap_or(5e-2);
    let err = sweep.relative_error();
    let mut out = Outcome::new(json!({
        "sweep": sweep,
        "intercept": intercept,
        "threshold": threshold,
        "intercept_relative_error": (intercept / threshold - 1.0).abs(),
        "slope_over_target": sweep.fitted_coefficient / sweep.reference,
    }));
    out.check(err <= tol, || {
        format!(
            "curvature: fitted slope {:.6} differs from 2^((N-2)/N) S A H = {:.6} by {err:.3e} (tol {tol:e})",
            sweep.fitted_coefficient, sweep.reference
        )
    });
    out.check(!sweep.truncated, || "curvature: sweep stopped early".into());
    out.csv = Some(sweep_csv(&sweep)?);
    Ok(out)
}

fn calculus(config: &RunConfig) -> Result<Outcome, CliError> {
    let exp = exponents(config)?;
    let at_q = calculus_lemma_check(exp.q, exp.t, config.samples, config.rng_seed)?;
    let random_q = calculus_lemma_random(config.n, config.samples, config.rng_seed)?;
    let mut out = Outcome::new(json!({ "at_q": at_q, "random_q": random_q }));
    for (label, r) in [("at q", &at_q), ("random q", &random_q)] {
        out.check(r.passed, || {
            format!("calculus ({label}): {} violations, worst margin {:e} at x = {:e}", r.violations, r.worst_margin, r.worst_x)
        });
    }
    Ok(out)
}

fn eigen(config: &RunConfig) -> Result<Outcome, CliError> {
    let r = eigen_residuals(config.m, config.r_trunc, config.n)?;
    let tol = config.tol.unwrap_or(1e-3);
    let mut out = Outcome::new(r);
    out.check(r.res_u <= tol, || format!("eigen: res_U {:.3e} exceeds {tol:e}", r.res_u));
    out.check(r.res_du <= tol, || format!("eigen: res_dU {:.3e} exceeds {tol:e}", r.res_du));
    for (label, order) in [("U", r.order_u), ("dU", r.order_du)] {
        out.check((order - 2.0).abs() <= 0.2, || format!("eigen: observed order {order:.3} for {label} is not 2 +- 0.2"));
    }
    Ok(out)
}

fn alpha0(config: &RunConfig) -> Result<Outcome, CliError> {
    let exp = exponents(config)?;
    let dom = BallDomain::new(config.n, config.r)?;
    let rep = estimate_alpha0(&dom, &exp, config.a, &Alpha0Options::default(), &OptimizerSpec::default(), &config.quadrature)?;
    let tol = config.tol.unwrap_or(1e-3);
    let floor = rep.lb_curvature.max(rep.lb_constant_test.unwrap_or(0.0));
    let mut out = Outcome::new(&rep);
    out.check(rep.lb_variational >= (1.0 - 1e-2) * floor, || {
        format!("alpha0: lb_variational {:.6} is below the other lower bounds ({floor:.6})", rep.lb_variational)
    });
    out.check(rep.bisection_relative_gap <= tol, || {
        format!("alpha0: bisection and direct estimates differ by {:.3e} (tol {tol:e})", rep.bisection_relative_gap)
    });
    Ok(out)
}

fn s0(config: &RunConfig) -> Result<Outcome, CliError> {
    let exp = exponents(config)?;
    let dom = BallDomain::new(config.n, config.r)?;
    let gap = s0_gap(&dom, &exp, config.a, &Alpha0Options::default(), &OptimizerSpec::default(), &config.quadrature)?;
    let tol = config.tol.unwrap_or(1e-3);
    let mut out = Outcome::new(&gap);
    out.check(gap.relative_gap > tol, || {
        format!("s0: relative gap {:.3e} below the threshold is not above {tol:e}", gap.relative_gap)
    });
    Ok(out)
}

fn all() -> Outcome {
    let outcomes = run_all();
    let criteria: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "id": o.id,
                "title": o.title,
                "passed": o.passed,
                "detail": o.detail,
                "known_deviation": o.known_deviation(),
            })
        })
        .collect();
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let mut out = Outcome::new(json!({ "passed": passed, "total": outcomes.len(), "criteria": criteria }));
    for o in &outcomes {
        out.check(o.passed, || format!("criterion {}: {}: {}", o.id, o.title, o.detail));
    }
    out
}
