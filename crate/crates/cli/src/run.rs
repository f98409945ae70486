//! Runners: one resolved [`RunConfig`] in, deterministic text outputs out.

use opsplit_core::class_calculus::{naive_lipschitz, CHAIN, CONIC_CONIC, TWO_OP};
use opsplit_core::figures::{self, Region2D};
use opsplit_core::operators::{MonotoneSpec, Vector};
use opsplit_core::splitting::{
    build_dr, build_fb, inclusion_residual, iterate, plan_dr, plan_dr_forced, plan_fb, plan_fb_forced, rate_report,
    DrOrder, FbCase, IterLog, IterOptions, SplitPlan,
};
use opsplit_core::verifier::{random_suite, run_named_case, NamedCase};
use opsplit_core::{classify, compose_chain, compose_conic, compose_general, Error as CoreError, InParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::*;

/// Label of the composition rule used when both factors are plain
/// Lipschitz classes.
pub const LIPSCHITZ_PRODUCT: &str = "Lipschitz product";

/// Everything a run produces. `summary` goes to standard output; the CSV
/// and SVG go to the paths given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub summary: String,
    pub csv: Option<String>,
    pub svg: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub outputs: Outputs,
    pub exit_code: i32,
}

fn summary(config: &RunConfig, key: &str, body: Value) -> String {
    let doc = json!({ "config": config, key: body });
    let mut s = serde_json::to_string_pretty(&doc).expect("summary serializes");
    s.push('\n');
    s
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("serializable")
}

fn error_body(e: &CliError, extra: Value) -> Value {
    let kind = match e.exit_code() {
        EXIT_GUARD => "guard_rejection",
        EXIT_NUMERIC => "numeric",
        _ => "invalid_input",
    };
    let mut body = json!({ "kind": kind, "message": e.to_string() });
    if let (Value::Object(m), Value::Object(x)) = (&mut body, extra) {
        m.extend(x);
    }
    body
}

fn failed(config: &RunConfig, e: CliError, extra: Value) -> Outcome {
    let code = e.exit_code();
    Outcome { outputs: Outputs { summary: summary(config, "error", error_body(&e, extra)), csv: None, svg: None }, exit_code: code }
}

fn done(config: &RunConfig, result: Value, exit_code: i32) -> Outcome {
    Outcome { outputs: Outputs { summary: summary(config, "result", result), csv: None, svg: None }, exit_code }
}

/// Runs one configuration. Never panics on bad input; failures are encoded
/// in the summary and the exit code.
pub fn run(config: &RunConfig) -> Outcome {
    match config {
        RunConfig::Compose(c) => run_compose(config, c),
        RunConfig::Classify(c) => match parse_class(&c.class) {
            Ok(spec) => done(config, json!({ "params": spec.params, "lipschitz": spec.params.lipschitz(), "classes": classify(spec.params) }), EXIT_OK),
            Err(e) => failed(config, e, Value::Null),
        },
        RunConfig::SolveDr(s) | RunConfig::SolveFb(s) => run_solve(config, s, matches!(config, RunConfig::SolveFb(_))),
        RunConfig::Verify(v) => run_verify(config, v),
        RunConfig::Figure(f) => run_figure(config, f),
    }
}

fn compose_pair(a: &ClassSpec, b: &ClassSpec) -> CliResult<Value> {
    let general = compose_general(a.params, b.params);
    if let Ok(p) = general {
        return Ok(json!({ "theorem": TWO_OP, "params": p, "lipschitz": p.lipschitz(), "classes": classify(p) }));
    }
    if let (Some(c1), Some(c2)) = (a.conic, b.conic) {
        if let Ok(c) = compose_conic(c1, c2) {
            let p = c.result.to_in();
            return Ok(json!({
                "theorem": CONIC_CONIC, "params": p, "scaled_conic": c.result, "averaged": c.averaged,
                "lipschitz": p.lipschitz(), "classes": classify(p),
            }));
        }
    }
    // With no identity part the product of the constants is exact.
    if a.params.alpha == 0.0 && b.params.alpha == 0.0 {
        let p = InParams::new(0.0, a.params.beta * b.params.beta)?;
        return Ok(json!({ "theorem": LIPSCHITZ_PRODUCT, "params": p, "lipschitz": p.lipschitz(), "classes": classify(p) }));
    }
    Err(general.unwrap_err().into())
}

fn compose_many(specs: &[ClassSpec], r: Option<usize>) -> CliResult<Value> {
    let items = specs
        .iter()
        .map(|s| s.conic.ok_or_else(|| CliError::Parse("chain entries must be averaged, conic or scaled-conic".into())))
        .collect::<CliResult<Vec<_>>>()?;
    // The one factor allowed to be non-averaged is the natural pivot.
    let r = r.unwrap_or_else(|| (0..items.len()).max_by(|&i, &j| items[i].alpha.total_cmp(&items[j].alpha)).unwrap_or(0));
    if r >= items.len() {
        return Err(CliError::Parse(format!("--r {r} is out of range for {} factors", items.len())));
    }
    let c = compose_chain(&items, r)?;
    let p = c.to_in();
    Ok(json!({ "theorem": CHAIN, "r": r, "params": p, "scaled_conic": c, "lipschitz": p.lipschitz(), "classes": classify(p) }))
}

fn run_compose(config: &RunConfig, c: &ComposeConfig) -> Outcome {
    let names: Vec<String> = match &c.chain {
        Some(list) => list.clone(),
        None => vec![c.class1.clone(), c.class2.clone()],
    };
    let specs = match names.iter().map(|n| parse_class(n)).collect::<CliResult<Vec<_>>>() {
        Ok(s) => s,
        Err(e) => return failed(config, e, Value::Null),
    };
    if specs.len() < 2 {
        return failed(config, CliError::Parse("a composition needs at least two classes".into()), Value::Null);
    }
    let result = if c.chain.is_some() { compose_many(&specs, c.r) } else { compose_pair(&specs[0], &specs[1]) };
    match result {
        Ok(v) => done(config, v, EXIT_OK),
        Err(e) => {
            let params: Vec<InParams> = specs.iter().map(|s| s.params).collect();
            let fallback = naive_lipschitz(&params);
            failed(config, e, json!({ "fallback_lipschitz": fallback }))
        }
    }
}

/// Command-line values for `solve-dr` / `solve-fb` that override the
/// instance file.
#[derive(Debug, Clone, Default)]
pub struct SolveFlags {
    pub gamma: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub omega: Option<f64>,
    pub beta: Option<f64>,
    pub beta_bar: Option<f64>,
    pub case: Option<String>,
    pub order: Option<DrOrder>,
    pub x0: Option<Vec<f64>>,
    pub max_iter: usize,
    pub tol: f64,
    pub force: bool,
}

/// Merges an instance file with command-line flags. Missing moduli are
/// read off the operators.
pub fn resolve_solve(inst: InstanceFile, flags: &SolveFlags, fb: bool) -> CliResult<SolveConfig> {
    let a = inst.a.to_spec()?;
    let b = inst.b.to_spec()?;
    if a.dim() != b.dim() {
        return Err(CoreError::Dimension { expected: a.dim(), got: b.dim() }.into());
    }
    let gamma = flags.gamma.or(inst.gamma).ok_or_else(|| CliError::Parse("no step size: pass --gamma or set \"gamma\"".into()))?;
    let x0 = flags.x0.clone().or(inst.x0).unwrap_or_else(|| vec![1.0; a.dim()]);
    if x0.len() != a.dim() {
        return Err(CoreError::Dimension { expected: a.dim(), got: x0.len() }.into());
    }
    let (mut cfg_case, mut order, mut lambda, mut beta, mut beta_bar) = (None, None, None, None, None);
    let (strong, weak) = if fb {
        let case_name = flags.case.clone().or(inst.case).unwrap_or_else(|| "I".into());
        let case = FbCase::parse(&case_name).ok_or_else(|| CliError::Parse(format!("unknown FB case `{case_name}`")))?;
        cfg_case = Some(case);
        beta = Some(flags.beta.or(inst.beta).ok_or_else(|| CliError::Parse("solve-fb needs --beta".into()))?);
        beta_bar = flags.beta_bar.or(inst.beta_bar);
        // Case I puts the strongly monotone operator first.
        if matches!(case, FbCase::I | FbCase::Ib) { (&a, &b) } else { (&b, &a) }
    } else {
        let o = flags.order.or(inst.order).unwrap_or(if a.modulus() >= b.modulus() { DrOrder::AStrong } else { DrOrder::BStrong });
        order = Some(o);
        lambda = Some(flags.lambda.or(inst.lambda).unwrap_or(0.5));
        if o == DrOrder::AStrong { (&a, &b) } else { (&b, &a) }
    };
    let mu = flags.mu.or(inst.mu).unwrap_or_else(|| strong.modulus());
    let omega = flags.omega.or(inst.omega).unwrap_or_else(|| (-weak.modulus()).max(0.0));
    Ok(SolveConfig {
        a: inst.a,
        b: inst.b,
        mu,
        omega,
        beta,
        beta_bar,
        gamma,
        lambda,
        order,
        case: cfg_case,
        x0,
        max_iter: flags.max_iter,
        tol: flags.tol,
        force: flags.force,
    })
}

fn plan_for(s: &SolveConfig, fb: bool) -> CliResult<SplitPlan> {
    Ok(if fb {
        let case = s.case.unwrap_or(FbCase::I);
        let beta = s.beta.ok_or_else(|| CliError::Parse("missing beta".into()))?;
        if s.force {
            plan_fb_forced(case, s.mu, s.omega, beta, s.beta_bar, s.gamma)?
        } else {
            plan_fb(case, s.mu, s.omega, beta, s.beta_bar, s.gamma)?
        }
    } else {
        let (lambda, order) = (s.lambda.unwrap_or(0.5), s.order.unwrap_or(DrOrder::AStrong));
        if s.force {
            plan_dr_forced(s.mu, s.omega, s.gamma, lambda, order)?
        } else {
            plan_dr(s.mu, s.omega, s.gamma, lambda, order)?
        }
    })
}

/// The valid step-size interval for a rejected plan, when one can be computed.
fn gamma_range(s: &SolveConfig, fb: bool) -> Option<String> {
    let forced = SolveConfig { force: true, ..s.clone() };
    plan_for(&forced, fb).ok().map(|p| p.gamma_range.to_string())
}

fn csv_text(log: &IterLog) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in log.csv_rows() {
        w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

fn solve(s: &SolveConfig, fb: bool) -> CliResult<(Value, String)> {
    let plan = plan_for(s, fb)?;
    let a: MonotoneSpec = s.a.to_spec()?;
    let b: MonotoneSpec = s.b.to_spec()?;
    let x0 = Vector::from_vec(s.x0.clone());
    let opts = IterOptions { max_iter: s.max_iter, tol: s.tol, ..IterOptions::default() };
    let (log, solution) = if fb {
        let t = build_fb(&plan, &a, &b)?;
        let log = iterate(&t, &x0, &opts, None, None)?;
        let z = log.last().cloned();
        (log, z)
    } else {
        let dr = build_dr(&plan, &a, &b)?;
        let shadow = dr.shadow();
        let log = iterate(&dr.t, &x0, &opts, Some(&shadow), None)?;
        let z = log.records.last().and_then(|r| r.shadow.as_ref()).map(|(ja, _)| ja.clone());
        (log, z)
    };
    let rate = rate_report(&log, &plan).ok();
    let last = log.records.last();
    let result = json!({
        "plan": plan,
        "status": log.status,
        "diverged": log.diverged(),
        "divergence_reason": log.divergence_reason,
        "iterations": log.records.len(),
        "final_step_norm": last.map(|r| r.step_norm),
        "final_shadow_gap": last.and_then(|r| r.shadow_gap()),
        "solution": solution.as_ref().map(|z| z.as_slice().to_vec()),
        "inclusion_residual": solution.as_ref().map(|z| inclusion_residual(&a, &b, z)),
        "certified_rate": plan.certified_rate(),
        "empirical_rate": rate.as_ref().map(|r| r.empirical_rate),
        "rate_satisfied": rate.as_ref().map(|r| r.satisfied),
    });
    Ok((result, csv_text(&log)?))
}

fn run_solve(config: &RunConfig, s: &SolveConfig, fb: bool) -> Outcome {
    match solve(s, fb) {
        Ok((result, csv)) => {
            let mut out = done(config, result, EXIT_OK);
            out.outputs.csv = Some(csv);
            out
        }
        Err(e) => {
            let extra = match (&e, gamma_range(s, fb)) {
                (CliError::Core(c), Some(r)) if c.is_guard_rejection() => json!({ "gamma_range": r }),
                _ => Value::Null,
            };
            failed(config, e, extra)
        }
    }
}

fn run_verify(config: &RunConfig, v: &VerifyConfig) -> Outcome {
    match v.suite {
        Suite::Named => {
            let mut reports = Vec::new();
            for case in NamedCase::ALL {
                match run_named_case(case) {
                    Ok(r) => reports.push(r),
                    Err(e) => return failed(config, e.into(), json!({ "case": case.key() })),
                }
            }
            let all = reports.iter().all(|r| r.agree);
            done(config, json!({ "all_agree": all, "cases": reports }), if all { EXIT_OK } else { EXIT_DISAGREE })
        }
        Suite::Random => match random_suite(v.seed, v.count, v.pairs, v.tol) {
            Ok(s) => {
                let code = if s.all_pass { EXIT_OK } else { EXIT_DISAGREE };
                done(config, to_value(&s), code)
            }
            Err(e) => failed(config, e.into(), Value::Null),
        },
    }
}

fn run_figure(config: &RunConfig, f: &FigureConfig) -> Outcome {
    if f.resolution < figures::MIN_RESOLUTION {
        let e = CliError::Parse(format!("resolution must be at least {}", figures::MIN_RESOLUTION));
        return failed(config, e, Value::Null);
    }
    let layers = match figures::preset_layers(&f.preset, f.resolution) {
        Ok(l) => l,
        Err(e) => {
            let e = match e {
                CoreError::Invalid(m) => CliError::Parse(format!("{m}; known presets: {}", figures::PRESETS.join(", "))),
                other => other.into(),
            };
            return failed(config, e, Value::Null);
        }
    };
    let mut result = json!({ "preset": f.preset, "layers": layers.len() });
    let mut code = EXIT_OK;
    if let Some(c) = figures::composition_preset(&f.preset) {
        let raster = layers.iter().find_map(|(r, _)| match r {
            Region2D::Raster(r) => Some(r),
            _ => None,
        });
        let pixels = raster.map(|r| r.count()).unwrap_or(0);
        result["pixels"] = json!(pixels);
        match (c.certified(), raster) {
            (Some(p), Some(r)) => {
                let outside = r.violations_outside_disk(p.alpha, p.beta, 1e-9);
                result["certified"] = to_value(&p);
                result["pixels_outside_certified"] = json!(outside);
                if outside > 0 {
                    code = EXIT_DISAGREE;
                }
            }
            _ => result["certified"] = Value::Null,
        }
    }
    let svg = embed_config_in_svg(&figures::render_svg(&layers, &[]), config);
    let mut out = done(config, result, code);
    out.outputs.svg = Some(svg);
    out
}
