//! Closed-form arithmetic over operator-class descriptors.
//!
//! Every Lipschitz operator class handled by this crate is described by an
//! identity-nonexpansive pair `(alpha, beta)`: the operator can be written as
//! `alpha * Id + beta * N` with `N` nonexpansive. Averaged, conic, cocoercive
//! and Lipschitz classes are all special cases, and the composition results
//! below map pairs of descriptors to a descriptor of the composition.
//!
//! All functions are pure. Hypotheses are checked exactly as stated by the
//! underlying results unless a [`Guard`] with a positive slack is used.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when matching an `(alpha, beta)` pair against the exact
/// pattern of a named class in [`classify`].
pub const PATTERN_TOL: f64 = 1e-12;

/// An `(alpha, beta)` identity-nonexpansive decomposition `alpha*Id + beta*N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InParams {
    pub alpha: f64,
    pub beta: f64,
}

impl InParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::domain("alpha", alpha, "finite alpha"));
        }
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::domain("beta", beta, "beta >= 0"));
        }
        Ok(InParams { alpha, beta })
    }

    /// Lipschitz constant implied by the decomposition, `|alpha| + beta`.
    pub fn lipschitz(&self) -> f64 {
        self.alpha.abs() + self.beta
    }

    /// Rewrites the pair as a positively scaled conic class, when
    /// `alpha + beta > 0` and `beta > 0`.
    pub fn to_scaled_conic(&self) -> Option<ScaledConic> {
        let scale = self.alpha + self.beta;
        if scale > 0.0 && self.beta > 0.0 {
            Some(ScaledConic { delta: scale, alpha: self.beta / scale })
        } else {
            None
        }
    }

    /// Decomposition of `c * T` given the decomposition of `T`.
    pub fn scaled(&self, c: f64) -> InParams {
        InParams { alpha: c * self.alpha, beta: c.abs() * self.beta }
    }

    /// Decomposition of `(1 - lambda) Id + lambda T`.
    pub fn relaxed(&self, lambda: f64) -> InParams {
        InParams { alpha: 1.0 - lambda + lambda * self.alpha, beta: lambda.abs() * self.beta }
    }

    /// Decomposition of `T + c Id`.
    pub fn shifted(&self, c: f64) -> InParams {
        InParams { alpha: self.alpha + c, beta: self.beta }
    }
}

/// `delta`-scaled `alpha`-conically nonexpansive: `T = delta((1-alpha) Id + alpha N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledConic {
    pub delta: f64,
    pub alpha: f64,
}

impl ScaledConic {
    pub fn new(delta: f64, alpha: f64) -> Result<Self> {
        if delta == 0.0 || !delta.is_finite() {
            return Err(Error::domain("delta", delta, "delta != 0"));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::domain("alpha", alpha, "alpha > 0"));
        }
        Ok(ScaledConic { delta, alpha })
    }

    /// Unscaled `alpha`-conic class.
    pub fn conic(alpha: f64) -> Result<Self> {
        Self::new(1.0, alpha)
    }

    pub fn to_in(&self) -> InParams {
        InParams { alpha: self.delta * (1.0 - self.alpha), beta: self.delta.abs() * self.alpha }
    }

    /// Inverse of [`ScaledConic::to_in`] for positive scales.
    pub fn from_in(p: InParams) -> Result<Self> {
        p.to_scaled_conic().ok_or(Error::Hypothesis {
            theorem: "scaled conic form",
            condition: "alpha + beta > 0 and beta > 0",
        })
    }

    /// `alpha < 1`: the normalized operator is averaged.
    pub fn is_averaged(&self) -> bool {
        self.alpha < 1.0
    }
}

/// Named operator classes. Parameters follow the usual conventions:
/// `Cocoercive(c)` means `<Tx-Ty, x-y> >= c ||Tx-Ty||^2`, and
/// `NegConic(a)` means `-T` is `a`-conically nonexpansive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum ClassLabel {
    Lipschitz { constant: f64 },
    Nonexpansive,
    Averaged { alpha: f64 },
    Conic { alpha: f64 },
    Cocoercive { constant: f64 },
    Contraction { constant: f64 },
    ScaledConic { delta: f64, alpha: f64 },
    NegConic { alpha: f64 },
}

impl ClassLabel {
    /// Same variant and parameters equal to within `tol` (relative to 1 + |value|).
    pub fn approx_eq(&self, other: &ClassLabel, tol: f64) -> bool {
        use ClassLabel::*;
        let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));
        match (self, other) {
            (Lipschitz { constant: a }, Lipschitz { constant: b })
            | (Cocoercive { constant: a }, Cocoercive { constant: b })
            | (Contraction { constant: a }, Contraction { constant: b })
            | (Averaged { alpha: a }, Averaged { alpha: b })
            | (Conic { alpha: a }, Conic { alpha: b })
            | (NegConic { alpha: a }, NegConic { alpha: b }) => close(*a, *b),
            (Nonexpansive, Nonexpansive) => true,
            (ScaledConic { delta: d1, alpha: a1 }, ScaledConic { delta: d2, alpha: a2 }) => {
                close(*d1, *d2) && close(*a1, *a2)
            }
            _ => false,
        }
    }
}

/// Converts a class label to its `(alpha, beta)` decomposition.
pub fn from_label(label: ClassLabel) -> Result<InParams> {
    use ClassLabel::*;
    match label {
        Lipschitz { constant } => {
            if !(constant >= 0.0) {
                return Err(Error::domain("L", constant, "L >= 0"));
            }
            InParams::new(0.0, constant)
        }
        Nonexpansive => InParams::new(0.0, 1.0),
        Averaged { alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::domain("alpha", alpha, "0 < alpha < 1"));
            }
            InParams::new(1.0 - alpha, alpha)
        }
        Conic { alpha } => {
            if !(alpha > 0.0) {
                return Err(Error::domain("alpha", alpha, "alpha > 0"));
            }
            InParams::new(1.0 - alpha, alpha)
        }
        Cocoercive { constant } => {
            if !(constant > 0.0) {
                return Err(Error::domain("cocoercivity", constant, "cocoercivity > 0"));
            }
            let beta = 1.0 / constant;
            InParams::new(beta / 2.0, beta / 2.0)
        }
        Contraction { constant } => {
            if !(0.0..1.0).contains(&constant) {
                return Err(Error::domain("L", constant, "0 <= L < 1"));
            }
            InParams::new(0.0, constant)
        }
        ScaledConic { delta, alpha } => Ok(self::ScaledConic::new(delta, alpha)?.to_in()),
        NegConic { alpha } => {
            if !(alpha > 0.0) {
                return Err(Error::domain("alpha", alpha, "alpha > 0"));
            }
            InParams::new(alpha - 1.0, alpha)
        }
    }
}

/// Every named class whose defining `(alpha, beta)` pattern matches `p`.
///
/// Positive-scale conic forms are reported as `Conic` when the scale is 1
/// and as `ScaledConic` otherwise; the only negative-scale form reported is
/// `NegConic` (scale exactly -1).
pub fn classify(p: InParams) -> Vec<ClassLabel> {
    let InParams { alpha, beta } = p;
    let lip = p.lipschitz();
    let mut out = vec![ClassLabel::Lipschitz { constant: lip }];
    if lip < 1.0 {
        out.push(ClassLabel::Contraction { constant: lip });
    }
    if lip <= 1.0 + PATTERN_TOL {
        out.push(ClassLabel::Nonexpansive);
    }
    if beta > 0.0 && beta < 1.0 && (alpha - (1.0 - beta)).abs() <= PATTERN_TOL {
        out.push(ClassLabel::Averaged { alpha: beta });
    }
    if alpha > 0.0 && (alpha - beta).abs() <= PATTERN_TOL {
        out.push(ClassLabel::Cocoercive { constant: 1.0 / (alpha + beta) });
    }
    if let Some(sc) = p.to_scaled_conic() {
        if (sc.delta - 1.0).abs() <= PATTERN_TOL {
            out.push(ClassLabel::Conic { alpha: beta });
        } else {
            out.push(ClassLabel::ScaledConic { delta: sc.delta, alpha: sc.alpha });
        }
    }
    if beta > 0.0 && (alpha - (beta - 1.0)).abs() <= PATTERN_TOL {
        out.push(ClassLabel::NegConic { alpha: beta });
    }
    out
}

/// Classes of the resolvent and reflected resolvent of a `rho`-monotone operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolventClass {
    pub resolvent: ClassLabel,
    /// `-R_A` is conic; stored as `NegConic` for `R_A`.
    pub reflected: ClassLabel,
    /// Lipschitz constant of `R_A`, available when `rho <= 0`.
    pub reflected_lipschitz: Option<f64>,
}

pub fn resolvent_class(rho: f64) -> Result<ResolventClass> {
    if !(rho > -1.0) {
        return Err(Error::NotSingleValued { value: rho });
    }
    Ok(ResolventClass {
        resolvent: ClassLabel::Cocoercive { constant: 1.0 + rho },
        reflected: ClassLabel::NegConic { alpha: 1.0 / (1.0 + rho) },
        reflected_lipschitz: (rho <= 0.0).then(|| (1.0 - rho) / (1.0 + rho)),
    })
}

/// The coefficients of the two-operator composition inequality
/// `||R2R1x-R2R1y||^2 + d1||(Id-R1)x-(Id-R1)y||^2 + d2||(Id-R2)R1x-(Id-R2)R1y||^2 <= d3||x-y||^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaBundle {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    /// `d1 d2 / (d1 + d2)`; `None` when `d1 + d2 == 0`.
    pub d4: Option<f64>,
}

pub const TWO_OP: &str = "two-operator composition";
pub const KAPPA_THETA: &str = "kappa-theta composition";
pub const CONIC_CONIC: &str = "scaled conic composition";
pub const CHAIN: &str = "chain composition";

pub fn delta_bundle(p1: InParams, p2: InParams) -> Result<DeltaBundle> {
    if !(p1.alpha < 1.0) {
        return Err(Error::domain("alpha1", p1.alpha, "alpha1 < 1"));
    }
    if !(p2.alpha < 1.0) {
        return Err(Error::domain("alpha2", p2.alpha, "alpha2 < 1"));
    }
    if !(p2.alpha * (p2.alpha - 1.0) <= p2.beta * p2.beta) {
        return Err(Error::hypothesis(TWO_OP, "alpha2*(alpha2-1) <= beta2^2"));
    }
    let c = |p: InParams| ((1.0 - p.alpha).powi(2) - p.beta * p.beta) / (1.0 - p.alpha);
    let (c1, c2) = (c(p1), c(p2));
    let d1 = p1.alpha / (1.0 - p1.alpha) * (1.0 - c2);
    let d2 = p2.alpha / (1.0 - p2.alpha);
    let d3 = 1.0 - (c1 * (1.0 - c2) + c2);
    let sum = d1 + d2;
    let d4 = (sum != 0.0).then(|| d1 * d2 / sum);
    Ok(DeltaBundle { d1, d2, d3, d4 })
}

/// Which operand is applied first in an ordered two-operator composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    AveragedFirst,
    CocoerciveFirst,
}

/// Result of composing two scaled conic operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConicComposition {
    pub result: ScaledConic,
    /// `true` iff both factors are averaged, equivalently the composite is.
    pub averaged: bool,
}

/// Hypothesis checker with a configurable slack. The default slack is zero:
/// strict and non-strict inequalities are applied exactly as stated.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Guard {
    pub slack: f64,
}

impl Guard {
    pub const STRICT: Guard = Guard { slack: 0.0 };

    pub fn with_slack(slack: f64) -> Self {
        Guard { slack: slack.abs() }
    }

    fn positive(&self, x: f64) -> bool {
        x > -self.slack
    }

    fn nonnegative(&self, x: f64) -> bool {
        x >= -self.slack
    }

    fn below_one(&self, x: f64) -> bool {
        x < 1.0 + self.slack
    }

    fn equals_one(&self, x: f64) -> bool {
        (x - 1.0).abs() <= self.slack
    }

    /// Composition `R2 R1` of two identity-nonexpansive operators through
    /// the `delta` coefficients. Each failing hypothesis gives a distinct error.
    pub fn compose_general(&self, p1: InParams, p2: InParams) -> Result<InParams> {
        let b = delta_bundle(p1, p2)?;
        if !(b.d1 + b.d2 > 0.0) || !self.positive(b.d1 + b.d2) {
            return Err(Error::hypothesis(TWO_OP, "delta1 + delta2 > 0"));
        }
        let d4 = b.d4.ok_or(Error::hypothesis(TWO_OP, "delta1 + delta2 > 0"))?;
        let radicand = b.d3 - d4 + b.d3 * d4;
        if !self.nonnegative(radicand) {
            return Err(Error::hypothesis(TWO_OP, "delta3 - delta4 + delta3*delta4 >= 0"));
        }
        if !self.positive(d4 + 1.0) || d4 + 1.0 == 0.0 {
            return Err(Error::hypothesis(TWO_OP, "delta4 > -1"));
        }
        Ok(InParams { alpha: d4 / (1.0 + d4), beta: radicand.max(0.0).sqrt() / (1.0 + d4) })
    }

    pub fn compose_kappa_theta(&self, p1: InParams, p2: InParams) -> Result<ScaledConic> {
        let (a1, b1, a2, b2) = (p1.alpha, p1.beta, p2.alpha, p2.beta);
        if !(b1 > 0.0 && b2 > 0.0) {
            return Err(Error::hypothesis(KAPPA_THETA, "beta1 > 0 and beta2 > 0"));
        }
        if !(a1 + b1 > 0.0 && a2 + b2 > 0.0) {
            return Err(Error::hypothesis(KAPPA_THETA, "alpha_i + beta_i > 0"));
        }
        let (s1, s2) = (a1 + b1, a2 + b2);
        let kappa = s1 * s2;
        let ratio = b1 * b2 / kappa;
        let theta = if ratio < 1.0 && self.below_one(ratio) {
            (b1 * a2 + b2 * a1) / (a1 * a2 + a1 * b2 + a2 * b1)
        } else if self.equals_one((b1 / s1).max(b2 / s2)) {
            1.0
        } else if self.below_one(ratio) {
            (b1 * a2 + b2 * a1) / (a1 * a2 + a1 * b2 + a2 * b1)
        } else {
            return Err(Error::hypothesis(
                KAPPA_THETA,
                "beta1*beta2 < (alpha1+beta1)(alpha2+beta2) or max ratio = 1",
            ));
        };
        if !(theta > 0.0) || !theta.is_finite() {
            return Err(Error::Numeric(format!("kappa-theta composition produced theta = {theta}")));
        }
        Ok(ScaledConic { delta: kappa, alpha: theta })
    }

    pub fn compose_conic(&self, c1: ScaledConic, c2: ScaledConic) -> Result<ConicComposition> {
        let c1 = ScaledConic::new(c1.delta, c1.alpha)?;
        let c2 = ScaledConic::new(c2.delta, c2.alpha)?;
        let (a1, a2) = (c1.alpha, c2.alpha);
        let prod = a1 * a2;
        let alpha = if prod < 1.0 && self.below_one(prod) {
            (a1 + a2 - 2.0 * prod) / (1.0 - prod)
        } else if self.equals_one(a1.max(a2)) {
            1.0
        } else {
            return Err(Error::hypothesis(
                CONIC_CONIC,
                "alpha1*alpha2 < 1 or max(alpha1, alpha2) = 1",
            ));
        };
        Ok(ConicComposition {
            result: ScaledConic { delta: c1.delta * c2.delta, alpha },
            averaged: a1 < 1.0 && a2 < 1.0,
        })
    }

    /// Composition `R_m ... R_1` of scaled conic operators where every factor
    /// except the one at index `r` (0-based) is averaged.
    pub fn compose_chain(&self, items: &[ScaledConic], r: usize) -> Result<ScaledConic> {
        if items.len() < 2 {
            return Err(Error::Invalid(format!("chain needs at least 2 operators, got {}", items.len())));
        }
        if r >= items.len() {
            return Err(Error::Invalid(format!("chain index {r} out of bounds for {} operators", items.len())));
        }
        let mut others = 0.0;
        for (i, it) in items.iter().enumerate() {
            ScaledConic::new(it.delta, it.alpha)?;
            if i != r {
                if !(it.alpha > 0.0 && it.alpha < 1.0) {
                    return Err(Error::domain("alpha_i", it.alpha, "0 < alpha_i < 1 for i != r"));
                }
                others += it.alpha / (1.0 - it.alpha);
            }
        }
        let alpha_r = items[r].alpha;
        let bar = others / (1.0 + others);
        if !(alpha_r * bar < 1.0) || !self.below_one(alpha_r * bar) {
            return Err(Error::hypothesis(CHAIN, "alpha_r * alpha_bar < 1"));
        }
        let scale: f64 = items.iter().map(|c| c.delta).product();
        let alpha = if alpha_r == 1.0 {
            1.0
        } else {
            let total = others + alpha_r / (1.0 - alpha_r);
            total / (1.0 + total)
        };
        Ok(ScaledConic { delta: scale, alpha })
    }
}

pub fn compose_general(p1: InParams, p2: InParams) -> Result<InParams> {
    Guard::STRICT.compose_general(p1, p2)
}

pub fn compose_kappa_theta(p1: InParams, p2: InParams) -> Result<ScaledConic> {
    Guard::STRICT.compose_kappa_theta(p1, p2)
}

pub fn compose_conic(c1: ScaledConic, c2: ScaledConic) -> Result<ConicComposition> {
    Guard::STRICT.compose_conic(c1, c2)
}

pub fn compose_chain(items: &[ScaledConic], r: usize) -> Result<ScaledConic> {
    Guard::STRICT.compose_chain(items, r)
}

/// Composition of a `delta`-scaled `alpha`-averaged operator with a
/// `1/beta`-cocoercive one, in either order.
pub fn compose_scaled_averaged_cocoercive(
    av: ScaledConic,
    coco_beta: f64,
    _order: Order,
) -> Result<ScaledConic> {
    if !(av.alpha > 0.0 && av.alpha < 1.0) {
        return Err(Error::domain("alpha", av.alpha, "0 < alpha < 1"));
    }
    if av.delta == 0.0 || !av.delta.is_finite() {
        return Err(Error::domain("delta", av.delta, "delta != 0"));
    }
    if !(coco_beta > 0.0) {
        return Err(Error::domain("beta", coco_beta, "beta > 0"));
    }
    Ok(ScaledConic { delta: coco_beta * av.delta, alpha: 1.0 / (2.0 - av.alpha) })
}

/// Composition of `m` operators, the `i`-th being `1/beta_i`-cocoercive.
pub fn compose_cocoercive_chain(betas: &[f64]) -> Result<ScaledConic> {
    if betas.is_empty() {
        return Err(Error::Invalid("cocoercive chain is empty".into()));
    }
    for &b in betas {
        if !(b > 0.0) {
            return Err(Error::domain("beta_i", b, "beta_i > 0"));
        }
    }
    let m = betas.len() as f64;
    Ok(ScaledConic { delta: betas.iter().product(), alpha: m / (1.0 + m) })
}

/// Lipschitz constant of a composition from the factors' decompositions alone.
pub fn naive_lipschitz(factors: &[InParams]) -> f64 {
    factors.iter().map(InParams::lipschitz).product()
}

/// Closed-form class identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "identity", rename_all = "snake_case")]
pub enum Identity {
    /// `delta * T` for `T` `alpha`-averaged, `delta` in `]0,1]`.
    RescaleAveraged { alpha: f64, delta: f64 },
    /// `T` `alpha`-averaged written as `(1-beta) Id + beta M`.
    AveragedRefactor { alpha: f64, beta: f64 },
    /// `Id - T` for `T` `alpha`-conic.
    DisplacementClass { alpha: f64 },
    /// `A + beta Id` for `A` `beta`-Lipschitz.
    LipschitzShift { beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityResult {
    pub labels: Vec<ClassLabel>,
    /// Monotonicity modulus implied for the input operator, when the
    /// identity yields one.
    pub monotonicity: Option<f64>,
}

pub fn algebra(identity: Identity) -> Result<IdentityResult> {
    match identity {
        Identity::RescaleAveraged { alpha, delta } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::domain("alpha", alpha, "0 < alpha < 1"));
            }
            if !(delta > 0.0 && delta <= 1.0) {
                return Err(Error::domain("delta", delta, "0 < delta <= 1"));
            }
            let mut labels = vec![ClassLabel::Averaged { alpha: 1.0 - delta * (1.0 - alpha) }];
            if delta < 1.0 {
                labels.push(ClassLabel::Contraction { constant: delta });
            }
            Ok(IdentityResult { labels, monotonicity: None })
        }
        Identity::AveragedRefactor { alpha, beta } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(Error::domain("alpha", alpha, "0 < alpha < 1"));
            }
            if !(beta > 0.0) {
                return Err(Error::domain("beta", beta, "beta > 0"));
            }
            Ok(IdentityResult { labels: vec![ClassLabel::Conic { alpha: alpha / beta }], monotonicity: None })
        }
        Identity::DisplacementClass { alpha } => {
            if !(alpha > 0.0) {
                return Err(Error::domain("alpha", alpha, "alpha > 0"));
            }
            Ok(IdentityResult {
                labels: vec![ClassLabel::Cocoercive { constant: 1.0 / (2.0 * alpha) }],
                monotonicity: Some(0.0),
            })
        }
        Identity::LipschitzShift { beta } => {
            if !(beta > 0.0) {
                return Err(Error::domain("beta", beta, "beta > 0"));
            }
            Ok(IdentityResult {
                labels: vec![ClassLabel::Cocoercive { constant: 1.0 / (2.0 * beta) }],
                monotonicity: Some(-beta),
            })
        }
    }
}
