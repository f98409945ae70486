//! Douglas-Rachford and forward-backward operators with certified
//! constants, step-size validation and an iteration driver.

use serde::{Deserialize, Serialize};

use crate::class_calculus::{InParams, ScaledConic};
use crate::error::{Error, Interval, Result};
use crate::operators::{
    compose, reflected_resolvent, relax, resolvent, scale, shift, spectral_norm, sym_min_eig, Matrix,
    MonotoneSpec, Op, Vector,
};

/// Which operator carries the positive modulus `mu` in a DR plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrOrder {
    /// `A` is `mu`-monotone, `B` is `(-omega)`-monotone.
    AStrong,
    /// `A` is `(-omega)`-monotone, `B` is `mu`-monotone.
    BStrong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FbCase {
    I,
    Ib,
    II,
    IIb,
    III,
    IIIb,
}

impl FbCase {
    pub fn is_b(self) -> bool {
        matches!(self, FbCase::Ib | FbCase::IIb | FbCase::IIIb)
    }

    pub fn parse(s: &str) -> Option<FbCase> {
        Some(match s.to_ascii_lowercase().as_str() {
            "i" | "1" => FbCase::I,
            "ib" | "1b" => FbCase::Ib,
            "ii" | "2" => FbCase::II,
            "iib" | "2b" => FbCase::IIb,
            "iii" | "3" => FbCase::III,
            "iiib" | "3b" => FbCase::IIIb,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Method {
    Dr,
    RelaxedDr { lambda: f64 },
    Fb { case: FbCase },
}

/// A validated splitting configuration with its certified constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<DrOrder>,
    pub mu: f64,
    pub omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_bar: Option<f64>,
    pub gamma: f64,
    pub lambda_relax: f64,
    /// Averagedness of the normalized forward step (FB). The normalized
    /// operator `T / delta` is then `1/(2 - nu)`-conic.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    /// Certified Lipschitz factor; negative for the sign-flipping FB cases.
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub averaged_alpha: Option<f64>,
    pub contraction: bool,
    pub gamma_range: Interval,
    /// Product of the factors' Lipschitz constants, kept for cross-checking.
    pub naive_lipschitz: f64,
    /// False for plans built with [`plan_dr_forced`] / [`plan_fb_forced`].
    pub certified: bool,
}

impl SplitPlan {
    /// `|delta|` for contraction plans, 1 otherwise.
    pub fn certified_rate(&self) -> f64 {
        if self.certified && self.contraction {
            self.delta.abs()
        } else {
            1.0
        }
    }

    /// Certificate of the plan's operator.
    pub fn certificate(&self) -> Option<InParams> {
        if !self.certified {
            return None;
        }
        if let Some(a) = self.averaged_alpha {
            if matches!(self.method, Method::Dr | Method::RelaxedDr { .. }) {
                return Some(InParams { alpha: 1.0 - a, beta: a });
            }
        }
        self.conic_alpha().map(|a| ScaledConic { delta: self.delta, alpha: a }.to_in())
    }

    /// Conic parameter of `T / delta` for FB plans.
    pub fn conic_alpha(&self) -> Option<f64> {
        self.nu.map(|nu| 1.0 / (2.0 - nu))
    }
}

const DR: &str = "DR averagedness";

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::domain("lambda", lambda, "0 < lambda < 1"));
    }
    Ok(())
}

fn dr_method(lambda: f64) -> Method {
    if lambda == 0.5 {
        Method::Dr
    } else {
        Method::RelaxedDr { lambda }
    }
}

fn dr_range(mu: f64, omega: f64, lambda: f64) -> Interval {
    if omega == 0.0 {
        Interval::open_unbounded(0.0)
    } else {
        Interval::open(0.0, (1.0 - lambda) * (mu - omega) / (mu * omega))
    }
}

fn dr_naive(gamma: f64, omega: f64, lambda: f64) -> f64 {
    (1.0 - lambda) + lambda * (1.0 + gamma * omega) / (1.0 - gamma * omega)
}

/// Relaxed DR `T = (1 - lambda) Id + lambda R_{gB} R_{gA}` with `A`, `B`
/// of moduli `mu` and `-omega` (in the given order).
pub fn plan_dr(mu: f64, omega: f64, gamma: f64, lambda: f64, order: DrOrder) -> Result<SplitPlan> {
    if !(omega >= 0.0) {
        return Err(Error::domain("omega", omega, "omega >= 0"));
    }
    if !(mu > omega) {
        return Err(Error::hypothesis(DR, "mu > omega"));
    }
    check_lambda(lambda)?;
    let range = dr_range(mu, omega, lambda);
    if !range.contains(gamma) {
        return Err(Error::StepRange { gamma, range });
    }
    let alpha = lambda * (mu - omega) / (mu - omega - gamma * mu * omega);
    Ok(SplitPlan {
        method: dr_method(lambda),
        order: Some(order),
        mu,
        omega,
        beta: None,
        beta_bar: None,
        gamma,
        lambda_relax: lambda,
        nu: None,
        delta: 1.0,
        averaged_alpha: Some(alpha),
        contraction: false,
        gamma_range: range,
        naive_lipschitz: dr_naive(gamma, omega, lambda),
        certified: true,
    })
}

/// DR plan without the certifying hypotheses, for running outside the
/// certified step range. Only single-valuedness is required.
pub fn plan_dr_forced(mu: f64, omega: f64, gamma: f64, lambda: f64, order: DrOrder) -> Result<SplitPlan> {
    if !(gamma > 0.0) {
        return Err(Error::domain("gamma", gamma, "gamma > 0"));
    }
    if !(gamma * omega < 1.0) {
        return Err(Error::NotSingleValued { value: -gamma * omega });
    }
    if let Ok(plan) = plan_dr(mu, omega, gamma, lambda, order) {
        return Ok(plan);
    }
    if !(lambda > 0.0) {
        return Err(Error::domain("lambda", lambda, "lambda > 0"));
    }
    let range = if mu > omega && omega >= 0.0 && lambda < 1.0 {
        dr_range(mu, omega, lambda)
    } else {
        Interval::open(0.0, 0.0)
    };
    let naive = dr_naive(gamma, omega, lambda);
    Ok(SplitPlan {
        method: dr_method(lambda),
        order: Some(order),
        mu,
        omega,
        beta: None,
        beta_bar: None,
        gamma,
        lambda_relax: lambda,
        nu: None,
        delta: naive,
        averaged_alpha: None,
        contraction: false,
        gamma_range: range,
        naive_lipschitz: naive,
        certified: false,
    })
}

fn fb_theorem(case: FbCase) -> &'static str {
    match case {
        FbCase::I => "FB case I",
        FbCase::Ib => "FB case Ib",
        FbCase::II => "FB case II",
        FbCase::IIb => "FB case IIb",
        FbCase::III => "FB case III",
        FbCase::IIIb => "FB case IIIb",
    }
}

struct FbConstants {
    range: Interval,
    nu: f64,
    delta: f64,
    naive: f64,
}

fn fb_constants(case: FbCase, mu: f64, omega: f64, beta: f64, beta_bar: Option<f64>, gamma: f64) -> Result<FbConstants> {
    let th = fb_theorem(case);
    let need_bar = || beta_bar.ok_or(Error::hypothesis(th, "beta_bar is required"));
    if !(beta > 0.0) {
        return Err(Error::domain("beta", beta, "beta > 0"));
    }
    if !(omega >= 0.0) {
        return Err(Error::domain("omega", omega, "omega >= 0"));
    }
    let g = gamma;
    let c = match case {
        FbCase::I => {
            if !(mu >= omega) {
                return Err(Error::hypothesis(th, "mu >= omega"));
            }
            FbConstants {
                range: Interval::open(0.0, 2.0 / (beta + 2.0 * mu)),
                nu: g * beta / (2.0 * (1.0 - g * mu)),
                delta: (1.0 - g * mu) / (1.0 - g * omega),
                naive: (1.0 - g * mu).abs().max((1.0 - g * (mu + beta)).abs()) / (1.0 - g * omega),
            }
        }
        FbCase::Ib => {
            if !(mu > omega) {
                return Err(Error::hypothesis(th, "mu > omega"));
            }
            // delta > -1 additionally needs gamma < 2/(mu + beta + omega)
            let hi = (2.0 / (beta + mu)).min(2.0 / (mu + beta + omega));
            FbConstants {
                range: Interval::closed_open(2.0 / (beta + 2.0 * mu), hi),
                nu: g * beta / (2.0 * (g * (mu + beta) - 1.0)),
                delta: (1.0 - g * (mu + beta)) / (1.0 - g * omega),
                naive: (1.0 - g * mu).abs().max((1.0 - g * (mu + beta)).abs()) / (1.0 - g * omega),
            }
        }
        FbCase::II | FbCase::IIb => {
            let bb = need_bar()?;
            if case == FbCase::II && !(mu >= omega) {
                return Err(Error::hypothesis(th, "mu >= omega"));
            }
            if case == FbCase::IIb && !(mu > omega) {
                return Err(Error::hypothesis(th, "mu > omega"));
            }
            if !(bb > beta.max(mu + omega)) {
                return Err(Error::hypothesis(th, "beta_bar > max(beta, mu + omega)"));
            }
            let naive = (1.0 + g * omega).abs().max((1.0 + g * omega - g * bb).abs()) / (1.0 + g * mu);
            if case == FbCase::II {
                FbConstants {
                    range: Interval::open(0.0, 2.0 / (bb - 2.0 * omega)),
                    nu: g * bb / (2.0 * (1.0 + g * omega)),
                    delta: (1.0 + g * omega) / (1.0 + g * mu),
                    naive,
                }
            } else {
                FbConstants {
                    range: Interval::closed_open(2.0 / (bb - 2.0 * omega), 2.0 / (bb - mu - omega)),
                    nu: g * bb / (2.0 * (g * bb - g * omega - 1.0)),
                    delta: (1.0 + g * omega - g * bb) / (1.0 + g * mu),
                    naive,
                }
            }
        }
        FbCase::III | FbCase::IIIb => {
            let bb = need_bar()?;
            if case == FbCase::III {
                if !(mu >= beta) {
                    return Err(Error::hypothesis(th, "mu >= beta"));
                }
                if !(bb > 2.0 * beta) {
                    return Err(Error::hypothesis(th, "beta_bar > 2 beta"));
                }
            } else {
                if !(mu > beta) {
                    return Err(Error::hypothesis(th, "mu > beta"));
                }
                if !(bb > mu + beta) {
                    return Err(Error::hypothesis(th, "beta_bar > mu + beta"));
                }
            }
            let naive = (1.0 + g * beta).abs().max((1.0 + g * beta - g * bb).abs()) / (1.0 + g * mu);
            if case == FbCase::III {
                FbConstants {
                    range: Interval::open(0.0, 2.0 / (bb - 2.0 * beta)),
                    nu: g * bb / (2.0 * (1.0 + g * beta)),
                    delta: (1.0 + g * beta) / (1.0 + g * mu),
                    naive,
                }
            } else {
                FbConstants {
                    range: Interval::closed_open(2.0 / (bb - 2.0 * beta), 2.0 / (bb - mu - beta)),
                    nu: g * bb / (2.0 * (g * bb - g * beta - 1.0)),
                    delta: (1.0 + g * beta - g * bb) / (1.0 + g * mu),
                    naive,
                }
            }
        }
    };
    Ok(c)
}

/// Forward-backward `T = J_{gB}(Id - g A)` under the hypotheses of `case`.
pub fn plan_fb(case: FbCase, mu: f64, omega: f64, beta: f64, beta_bar: Option<f64>, gamma: f64) -> Result<SplitPlan> {
    let c = fb_constants(case, mu, omega, beta, beta_bar, gamma)?;
    if !c.range.contains(gamma) {
        return Err(Error::StepRange { gamma, range: c.range });
    }
    let th = fb_theorem(case);
    // the left endpoint of the b-ranges gives nu = 1
    let nu_ok = if case.is_b() { c.nu > 0.0 && c.nu <= 1.0 } else { c.nu > 0.0 && c.nu < 1.0 };
    if !nu_ok {
        return Err(Error::hypothesis(th, "nu in ]0,1["));
    }
    let delta_ok = if case.is_b() { c.delta > -1.0 && c.delta <= 0.0 } else { c.delta > 0.0 && c.delta <= 1.0 };
    if !delta_ok {
        return Err(Error::StepRange { gamma, range: c.range });
    }
    let averaged_alpha = (!case.is_b()).then(|| 1.0 - c.delta * (1.0 - c.nu) / (2.0 - c.nu));
    Ok(SplitPlan {
        method: Method::Fb { case },
        order: None,
        mu,
        omega,
        beta: Some(beta),
        beta_bar,
        gamma,
        lambda_relax: 1.0,
        nu: Some(c.nu),
        delta: c.delta,
        averaged_alpha,
        contraction: c.delta.abs() < 1.0,
        gamma_range: c.range,
        naive_lipschitz: c.naive,
        certified: true,
    })
}

/// FB plan that skips the step-range check; the constants are evaluated
/// at `gamma` but not certified.
pub fn plan_fb_forced(case: FbCase, mu: f64, omega: f64, beta: f64, beta_bar: Option<f64>, gamma: f64) -> Result<SplitPlan> {
    if let Ok(plan) = plan_fb(case, mu, omega, beta, beta_bar, gamma) {
        return Ok(plan);
    }
    if !(gamma > 0.0) {
        return Err(Error::domain("gamma", gamma, "gamma > 0"));
    }
    let c = fb_constants(case, mu, omega, beta, beta_bar, gamma)?;
    Ok(SplitPlan {
        method: Method::Fb { case },
        order: None,
        mu,
        omega,
        beta: Some(beta),
        beta_bar,
        gamma,
        lambda_relax: 1.0,
        nu: None,
        delta: c.naive,
        averaged_alpha: None,
        contraction: false,
        gamma_range: c.range,
        naive_lipschitz: c.naive,
        certified: false,
    })
}

fn modulus_at_least(spec: &MonotoneSpec, bound: f64, which: &'static str) -> Result<()> {
    if spec.rho < bound - 1e-9 * (1.0 + bound.abs()) {
        return Err(Error::Hypothesis { theorem: "splitting modulus", condition: which });
    }
    Ok(())
}

/// `<Md, d> >= c ||Md||^2` for all `d`, up to a small tolerance.
fn affine_cocoercive(m: &Matrix, c: f64) -> bool {
    let form = (m + m.transpose()) * 0.5 - m.transpose() * m * c;
    sym_min_eig(&form) >= -1e-9 * (1.0 + m.amax() * m.amax() * c)
}

/// The DR operator with the maps needed for the shadow sequence.
#[derive(Debug, Clone)]
pub struct DrOperator {
    pub t: Op,
    pub ja: Op,
    pub ra: Op,
    pub jb: Op,
}

impl DrOperator {
    pub fn shadow(&self) -> DrShadow {
        DrShadow { ja: self.ja.clone(), jb_ra: compose(&self.ra, &self.jb).expect("same dimension") }
    }
}

pub fn build_dr(plan: &SplitPlan, a: &MonotoneSpec, b: &MonotoneSpec) -> Result<DrOperator> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    if !matches!(plan.method, Method::Dr | Method::RelaxedDr { .. }) {
        return Err(Error::Invalid("plan is not a Douglas-Rachford plan".into()));
    }
    if plan.certified {
        match plan.order.unwrap_or(DrOrder::AStrong) {
            DrOrder::AStrong => {
                modulus_at_least(a, plan.mu, "A is mu-monotone")?;
                modulus_at_least(b, -plan.omega, "B is (-omega)-monotone")?;
            }
            DrOrder::BStrong => {
                modulus_at_least(a, -plan.omega, "A is (-omega)-monotone")?;
                modulus_at_least(b, plan.mu, "B is mu-monotone")?;
            }
        }
    }
    let g = plan.gamma;
    let ja = resolvent(a, g)?;
    let ra = reflected_resolvent(a, g)?;
    let jb = resolvent(b, g)?;
    let rb = reflected_resolvent(b, g)?;
    let mut t = relax(plan.lambda_relax, &compose(&ra, &rb)?).named("T_DR");
    t = match plan.certificate() {
        Some(c) => t.with_certificate(c),
        None => t,
    };
    Ok(DrOperator { t, ja, ra, jb })
}

/// `J_{gB}(Id - g A)`; `A` must be single-valued.
pub fn build_fb(plan: &SplitPlan, a: &MonotoneSpec, b: &MonotoneSpec) -> Result<Op> {
    if a.dim() != b.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: b.dim() });
    }
    let case = match plan.method {
        Method::Fb { case } => case,
        _ => return Err(Error::Invalid("plan is not a forward-backward plan".into())),
    };
    let fwd = a.forward()?;
    if plan.certified {
        let beta = plan.beta.unwrap_or(0.0);
        let m = fwd.as_affine().map(|x| x.m.clone()).expect("forward operators are affine");
        let n = m.nrows();
        match case {
            FbCase::I | FbCase::Ib => {
                modulus_at_least(a, plan.mu, "A is mu-monotone")?;
                modulus_at_least(b, -plan.omega, "B is (-omega)-monotone")?;
                if !affine_cocoercive(&(m - Matrix::identity(n, n) * plan.mu), 1.0 / beta) {
                    return Err(Error::hypothesis(fb_theorem(case), "A - mu Id is 1/beta-cocoercive"));
                }
            }
            FbCase::II | FbCase::IIb => {
                modulus_at_least(a, -plan.omega, "A is (-omega)-monotone")?;
                modulus_at_least(b, plan.mu, "B is mu-monotone")?;
                let bb = plan.beta_bar.unwrap_or(f64::INFINITY);
                if !affine_cocoercive(&(m + Matrix::identity(n, n) * plan.omega), 1.0 / bb) {
                    return Err(Error::hypothesis(fb_theorem(case), "A + omega Id is 1/beta_bar-cocoercive"));
                }
            }
            FbCase::III | FbCase::IIIb => {
                modulus_at_least(b, plan.mu, "B is mu-monotone")?;
                if spectral_norm(&m) > beta * (1.0 + 1e-12) {
                    return Err(Error::hypothesis(fb_theorem(case), "A is beta-Lipschitz"));
                }
            }
        }
    }
    let forward_step = shift(1.0, &scale(-plan.gamma, &fwd)).without_certificate();
    let jb = resolvent(b, plan.gamma)?;
    let t = compose(&forward_step, &jb)?.without_certificate().named("T_FB");
    Ok(match plan.certificate() {
        Some(c) => t.with_certificate(c),
        None => t,
    })
}

/// Maps producing the DR shadow points `J_{gA} x` and `J_{gB} R_{gA} x`.
#[derive(Debug, Clone)]
pub struct DrShadow {
    pub ja: Op,
    pub jb_ra: Op,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterOptions {
    pub max_iter: usize,
    /// Relative fixed-point tolerance: stop when `||x_k - x_{k-1}|| <= tol (1 + ||x_{k-1}||)`.
    pub tol: f64,
    /// Divergence when `||x_k|| > blowup (1 + ||x_0||)`.
    pub blowup: f64,
    /// Divergence when the step norm fails to decrease this many times in a row.
    pub growth_window: usize,
}

impl Default for IterOptions {
    fn default() -> Self {
        IterOptions { max_iter: 10_000, tol: 1e-10, blowup: 1e6, growth_window: 50 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterStatus {
    Converged,
    Diverged,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterRecord {
    pub k: usize,
    pub x: Vector,
    pub step_norm: f64,
    pub err_norm: Option<f64>,
    pub shadow: Option<(Vector, Vector)>,
    pub ratio: Option<f64>,
}

impl IterRecord {
    pub fn shadow_gap(&self) -> Option<f64> {
        self.shadow.as_ref().map(|(a, b)| (a - b).norm())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterLog {
    pub x0: Vector,
    pub records: Vec<IterRecord>,
    pub status: IterStatus,
    pub divergence_reason: Option<String>,
}

impl IterLog {
    pub fn last(&self) -> Option<&Vector> {
        self.records.last().map(|r| &r.x)
    }

    pub fn diverged(&self) -> bool {
        self.status == IterStatus::Diverged
    }

    pub fn csv_rows(&self) -> Vec<CsvRow> {
        self.records
            .iter()
            .map(|r| CsvRow { k: r.k, step_norm: r.step_norm, err_norm: r.err_norm, shadow_gap: r.shadow_gap() })
            .collect()
    }
}

/// One line of the iteration CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub k: usize,
    pub step_norm: f64,
    pub err_norm: Option<f64>,
    pub shadow_gap: Option<f64>,
}

/// Runs `x_k = T x_{k-1}` from `x0`.
pub fn iterate(
    t: &Op,
    x0: &Vector,
    opts: &IterOptions,
    shadow: Option<&DrShadow>,
    fixed_point: Option<&Vector>,
) -> Result<IterLog> {
    if x0.len() != t.dim() {
        return Err(Error::Dimension { expected: t.dim(), got: x0.len() });
    }
    let limit = opts.blowup * (1.0 + x0.norm());
    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut prev_step: Option<f64> = None;
    let mut not_decreasing = 0usize;
    let mut status = IterStatus::MaxIter;
    let mut reason = None;
    for k in 1..=opts.max_iter {
        let next = t.apply(&x);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite iterate at k = {k}")));
        }
        let step = (&next - &x).norm();
        let ratio = prev_step.filter(|p| *p > 0.0).map(|p| step / p);
        let rec_shadow = shadow.map(|s| (s.ja.apply(&next), s.jb_ra.apply(&next)));
        let err_norm = fixed_point.map(|fp| (&next - fp).norm());
        let converged = step <= opts.tol * (1.0 + x.norm());
        records.push(IterRecord { k, x: next.clone(), step_norm: step, err_norm, shadow: rec_shadow, ratio });
        if converged {
            status = IterStatus::Converged;
            break;
        }
        if next.norm() > limit {
            status = IterStatus::Diverged;
            reason = Some(format!("iterate norm exceeded {limit:e} at k = {k}"));
            break;
        }
        match ratio {
            Some(r) if r >= 1.0 - 1e-12 => not_decreasing += 1,
            _ => not_decreasing = 0,
        }
        if not_decreasing >= opts.growth_window {
            status = IterStatus::Diverged;
            reason = Some(format!("step norm did not decrease for {} iterations (k = {k})", opts.growth_window));
            break;
        }
        prev_step = Some(step);
        x = next;
    }
    Ok(IterLog { x0: x0.clone(), records, status, divergence_reason: reason })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub empirical_rate: f64,
    pub certified_rate: f64,
    pub satisfied: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Geometric mean of the step ratios over the tail half of the log,
/// compared with the plan's certified rate.
pub fn rate_report(log: &IterLog, plan: &SplitPlan) -> Result<RateReport> {
    if log.records.is_empty() {
        return Err(Error::Invalid("empty iteration log".into()));
    }
    if log.records.len() < 10 {
        return Err(Error::Invalid(format!("rate needs at least 10 steps, log has {}", log.records.len())));
    }
    let tail = &log.records[log.records.len() / 2..];
    let logs: Vec<f64> = tail.iter().filter_map(|r| r.ratio).filter(|r| *r > 0.0).map(f64::ln).collect();
    let empirical_rate = if logs.is_empty() { 0.0 } else { (logs.iter().sum::<f64>() / logs.len() as f64).exp() };
    let certified_rate = plan.certified_rate();
    let mut satisfied = empirical_rate <= certified_rate + 1e-8;
    let mut reason = None;
    if log.diverged() {
        satisfied = false;
        reason = log.divergence_reason.clone().or(Some("diverged".into()));
    } else if !satisfied {
        reason = Some(format!("empirical rate {empirical_rate} exceeds certified {certified_rate}"));
    }
    Ok(RateReport { empirical_rate, certified_rate, satisfied, reason })
}

/// The scaling-factor instance on `R^2`: `A = N_U + mu Id` with
/// `U = span(e1)`, `B = -omega Id`.
pub fn scaling_instance(mu: f64, omega: f64) -> (MonotoneSpec, MonotoneSpec) {
    let u = Vector::from_vec(vec![1.0, 0.0]);
    let a = MonotoneSpec::subspace_normal(&[u], mu, 2).expect("nonzero basis vector");
    (a, MonotoneSpec::scaled_identity(-omega, 2))
}

/// Factor of the scaling-instance DR operator on `U` and on its complement.
pub fn scaling_factors(mu: f64, omega: f64, gamma: f64) -> (f64, f64) {
    let go = gamma * omega;
    let on_perp = -go / (1.0 - go);
    let on_u = (1.0 + go) / ((1.0 - go) * (1.0 + gamma * mu)) + on_perp;
    (on_u, on_perp)
}

/// `||Ax + Bx||` for single-valued `A`, `B` (minimal selection for the
/// normal-cone kind).
pub fn inclusion_residual(a: &MonotoneSpec, b: &MonotoneSpec, x: &Vector) -> f64 {
    (a.minimal_selection(x) + b.minimal_selection(x)).norm()
}
