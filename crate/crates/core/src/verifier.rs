//! Sample-based class membership checks, the composition identity oracle,
//! tightest-class fitting and the named counterexample suite.
//!
//! Sampling can refute membership but never prove it. Every violation is
//! normalized by `||x - y||^2` so tolerances are scale-free.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::class_calculus::{
    classify, compose_chain, compose_conic, compose_general, compose_scaled_averaged_cocoercive, ClassLabel,
    InParams, Order, ScaledConic,
};
use crate::error::{Error, Result};
use crate::operators::{build_in_operator, build_rotation, compose, displacement, scale, Matrix, MonotoneSpec, Op, Vector};
use crate::sampling::{self, sample_pairs, Pair, DEFAULT_PAIRS, DEFAULT_SEED};
use crate::splitting::{
    build_dr, build_fb, iterate, plan_dr, plan_dr_forced, plan_fb, rate_report, scaling_factors, scaling_instance,
    DrOrder, FbCase, IterOptions, IterStatus,
};

/// Which equivalent form of the identity-nonexpansive inequality to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characterization {
    /// `||Td||^2 - 2a<d,Td> <= (b^2 - a^2)||d||^2`
    B,
    /// `(1-2a)||Td||^2 - 2a<Td,(Id-T)d> <= (b^2 - a^2)||d||^2`
    C,
    /// `(2a-1)||(Id-T)d||^2 - 2(1-a)<Td,(Id-T)d> <= (b^2 - (1-a)^2)||d||^2`
    D,
    /// `(1-a)||Td||^2 + a||(Id-T)d||^2 <= (b^2 - a(a-1))||d||^2`
    E,
}

/// Sampling configuration shared by the checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleConfig {
    pub pairs: usize,
    pub seed: u64,
    pub adversarial: Vec<Pair>,
}

impl SampleConfig {
    pub fn new(pairs: usize) -> Self {
        SampleConfig { pairs, seed: DEFAULT_SEED, adversarial: Vec::new() }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self::new(DEFAULT_PAIRS)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub label: Option<ClassLabel>,
    pub params: InParams,
    pub characterization: Characterization,
    pub pairs_tested: usize,
    /// Largest normalized `LHS - RHS`; negative when every pair satisfies the inequality.
    pub worst_violation: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
}

/// Per-pair quantities, computed once per operator.
#[derive(Debug, Clone, Copy)]
struct PairStats {
    dd: f64,
    tt: f64,
    dt: f64,
    uu: f64,
    tu: f64,
}

fn pair_stats(t: &Op, pairs: &[Pair]) -> Vec<PairStats> {
    pairs
        .par_iter()
        .map(|(x, y)| {
            let d = x - y;
            let td = t.apply(x) - t.apply(y);
            let u = &d - &td;
            PairStats { dd: d.norm_squared(), tt: td.norm_squared(), dt: d.dot(&td), uu: u.norm_squared(), tu: td.dot(&u) }
        })
        .collect()
}

fn in_violation(s: &PairStats, p: InParams, ch: Characterization) -> f64 {
    let (a, b) = (p.alpha, p.beta);
    let excess = match ch {
        Characterization::B => s.tt - 2.0 * a * s.dt - (b * b - a * a) * s.dd,
        Characterization::C => (1.0 - 2.0 * a) * s.tt - 2.0 * a * s.tu - (b * b - a * a) * s.dd,
        Characterization::D => {
            (2.0 * a - 1.0) * s.uu - 2.0 * (1.0 - a) * s.tu - (b * b - (1.0 - a) * (1.0 - a)) * s.dd
        }
        Characterization::E => (1.0 - a) * s.tt + a * s.uu - (b * b - a * (a - 1.0)) * s.dd,
    };
    excess / s.dd
}

fn worst<F: Fn(&PairStats) -> f64 + Sync>(stats: &[PairStats], f: F) -> (f64, usize) {
    stats
        .par_iter()
        .enumerate()
        .map(|(i, s)| (f(s), i))
        .reduce(|| (f64::NEG_INFINITY, usize::MAX), |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
}

fn pair_vecs(pairs: &[Pair], i: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    pairs.get(i).map(|(x, y)| (x.iter().copied().collect(), y.iter().copied().collect()))
}

fn label_for(p: InParams) -> Option<ClassLabel> {
    let labels = classify(p);
    labels
        .iter()
        .rev()
        .find(|l| matches!(l, ClassLabel::Averaged { .. } | ClassLabel::Conic { .. } | ClassLabel::ScaledConic { .. }))
        .or(labels.first())
        .copied()
}

pub fn check_membership_with(
    t: &Op,
    p: InParams,
    cfg: &SampleConfig,
    tol: f64,
    ch: Characterization,
) -> MembershipReport {
    let pairs = sample_pairs(t.dim(), cfg.pairs.max(1), cfg.seed, &cfg.adversarial);
    let stats = pair_stats(t, &pairs);
    let (w, i) = worst(&stats, |s| in_violation(s, p, ch));
    MembershipReport {
        label: label_for(p),
        params: p,
        characterization: ch,
        pairs_tested: pairs.len(),
        worst_violation: w,
        pass: w <= tol,
        worst_pair: pair_vecs(&pairs, i),
    }
}

/// Tests `T = alpha Id + beta N` with `N` nonexpansive on sampled pairs.
pub fn check_membership(t: &Op, p: InParams, pairs: usize, tol: f64) -> MembershipReport {
    check_membership_with(t, p, &SampleConfig::new(pairs), tol, Characterization::B)
}

/// Tests `T / delta = (1 - alpha) Id + alpha N` through the conic form
/// `(1-a)||(Id-S)d||^2 <= a||d||^2 - a||Sd||^2` with `S = T/delta`.
pub fn check_membership_scaled_with(t: &Op, c: ScaledConic, cfg: &SampleConfig, tol: f64) -> MembershipReport {
    let pairs = sample_pairs(t.dim(), cfg.pairs.max(1), cfg.seed, &cfg.adversarial);
    let s = scale(1.0 / c.delta, t);
    let stats = pair_stats(&s, &pairs);
    let a = c.alpha;
    let (w, i) = worst(&stats, |st| ((1.0 - a) * st.uu - a * st.dd + a * st.tt) / st.dd);
    MembershipReport {
        label: Some(if c.delta == 1.0 {
            ClassLabel::Conic { alpha: c.alpha }
        } else {
            ClassLabel::ScaledConic { delta: c.delta, alpha: c.alpha }
        }),
        params: c.to_in(),
        characterization: Characterization::E,
        pairs_tested: pairs.len(),
        worst_violation: w,
        pass: w <= tol,
        worst_pair: pair_vecs(&pairs, i),
    }
}

pub fn check_membership_scaled(t: &Op, c: ScaledConic, pairs: usize, tol: f64) -> MembershipReport {
    check_membership_scaled_with(t, c, &SampleConfig::new(pairs), tol)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub rho: f64,
    pub pairs_tested: usize,
    /// Largest `rho - <d, Fd>/||d||^2`.
    pub worst_violation: f64,
    /// Smallest observed `<d, Fd>/||d||^2`.
    pub min_modulus: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_pair: Option<(Vec<f64>, Vec<f64>)>,
}

pub fn check_monotone_with(f: &Op, rho: f64, cfg: &SampleConfig, tol: f64) -> MonotoneReport {
    let pairs = sample_pairs(f.dim(), cfg.pairs.max(1), cfg.seed, &cfg.adversarial);
    let stats = pair_stats(f, &pairs);
    let (w, i) = worst(&stats, |s| rho - s.dt / s.dd);
    MonotoneReport {
        rho,
        pairs_tested: pairs.len(),
        worst_violation: w,
        min_modulus: rho - w,
        pass: w <= tol,
        worst_pair: pair_vecs(&pairs, i),
    }
}

/// Tests `<x-y, Fx-Fy> >= rho ||x-y||^2` on sampled pairs.
pub fn check_monotone(f: &Op, rho: f64, pairs: usize, tol: f64) -> MonotoneReport {
    check_monotone_with(f, rho, &SampleConfig::new(pairs), tol)
}

/// Largest scaled residual of the inner-product identity for
/// `R_l = (1-l) Id + l R2 R1`:
/// `<R_l d, (Id-R_l) d> = (1-2l)<d,(Id-R_l)d> + l^2<(Id+R1)d,(Id-R1)d> + l^2<(Id+R2)R1 d,(Id-R2)R1 d>`,
/// each residual divided by `||d||^2 + ||R1 d||^2 + ||R2 R1 d||^2`.
pub fn check_composition_identity(r1: &Op, r2: &Op, lambda: f64, pairs: usize) -> Result<f64> {
    check_composition_identity_with(r1, r2, lambda, &SampleConfig::new(pairs))
}

pub fn check_composition_identity_with(r1: &Op, r2: &Op, lambda: f64, cfg: &SampleConfig) -> Result<f64> {
    if r1.dim() != r2.dim() {
        return Err(Error::Dimension { expected: r1.dim(), got: r2.dim() });
    }
    let pairs = sample_pairs(r1.dim(), cfg.pairs.max(1), cfg.seed, &cfg.adversarial);
    let l = lambda;
    let res = pairs
        .par_iter()
        .map(|(x, y)| {
            let (r1x, r1y) = (r1.apply(x), r1.apply(y));
            let (r2x, r2y) = (r2.apply(&r1x), r2.apply(&r1y));
            let d = x - y;
            let b = &r1x - &r1y;
            let c = &r2x - &r2y;
            let rl = &d * (1.0 - l) + &c * l;
            let id_rl = &d - &rl;
            let lhs = rl.dot(&id_rl);
            let rhs = (1.0 - 2.0 * l) * d.dot(&id_rl)
                + l * l * (&d + &b).dot(&(&d - &b))
                + l * l * (&b + &c).dot(&(&b - &c));
            let scale = d.norm_squared() + b.norm_squared() + c.norm_squared();
            if scale == 0.0 {
                0.0
            } else {
                (lhs - rhs).abs() / scale
            }
        })
        .reduce(|| 0.0, f64::max);
    Ok(res)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Averaged,
    Conic,
    Lipschitz,
    Cocoercive,
}

const FIT_TOL: f64 = 1e-9;
const FIT_LO: f64 = 1e-6;
const FIT_HI: f64 = 1e6;

/// Smallest family parameter that passes the sampled membership check at
/// tolerance 1e-9. This is a lower bound on the true tightest class.
pub fn fit_tightest(t: &Op, family: Family, pairs: usize) -> Result<ClassLabel> {
    let pairs = sample_pairs(t.dim(), pairs.max(100), DEFAULT_SEED, &[]);
    let stats = pair_stats(t, &pairs);
    let params = |x: f64| match family {
        Family::Averaged | Family::Conic => InParams { alpha: 1.0 - x, beta: x },
        Family::Lipschitz => InParams { alpha: 0.0, beta: x },
        Family::Cocoercive => InParams { alpha: x / 2.0, beta: x / 2.0 },
    };
    let passes = |x: f64| worst(&stats, |s| in_violation(s, params(x), Characterization::B)).0 <= FIT_TOL;
    let hi = if family == Family::Averaged { 1.0 - 1e-12 } else { FIT_HI };
    let name = match family {
        Family::Averaged => "averaged",
        Family::Conic => "conic",
        Family::Lipschitz => "lipschitz",
        Family::Cocoercive => "cocoercive",
    };
    if !passes(hi) {
        return Err(Error::NotInFamily { family: name });
    }
    let x = if passes(FIT_LO) {
        FIT_LO
    } else {
        let (mut lo, mut up) = (FIT_LO, hi);
        for _ in 0..200 {
            let mid = 0.5 * (lo + up);
            if passes(mid) {
                up = mid;
            } else {
                lo = mid;
            }
            if up - lo <= 1e-12 * up {
                break;
            }
        }
        up
    };
    Ok(match family {
        Family::Averaged => ClassLabel::Averaged { alpha: x },
        Family::Conic => ClassLabel::Conic { alpha: x },
        Family::Lipschitz => ClassLabel::Lipschitz { constant: x },
        Family::Cocoercive => ClassLabel::Cocoercive { constant: 1.0 / x },
    })
}

/// Random nonexpansive linear map on the plane: a rotation or a reflection.
pub fn random_isometry_2d(rng: &mut rand_chacha::ChaCha8Rng) -> Op {
    let theta = sampling::uniform(rng, -std::f64::consts::PI, std::f64::consts::PI);
    if sampling::uniform(rng, 0.0, 1.0) < 0.5 {
        build_rotation(theta, 1.0, 1.0)
    } else {
        let (s, c) = theta.sin_cos();
        Op::linear(Matrix::from_row_slice(2, 2, &[c, s, s, -c]), "refl")
            .unwrap()
            .with_certificate(InParams { alpha: 0.0, beta: 1.0 })
    }
}

/// Affine `x -> Mx + b` on `R^dim` whose symmetric part has spectrum in
/// `[lo, hi]` with `lo` attained, plus a skew part of size `skew`.
pub fn random_affine_spec(
    rng: &mut rand_chacha::ChaCha8Rng,
    dim: usize,
    lo: f64,
    hi: f64,
    skew: f64,
) -> Result<MonotoneSpec> {
    let g = Matrix::from_fn(dim, dim, |_, _| sampling::gaussian_vector(rng, 1)[0]);
    let q = g.qr().q();
    let eig = Vector::from_fn(dim, |i, _| if i == 0 { lo } else { sampling::uniform(rng, lo, hi) });
    let k = Matrix::from_fn(dim, dim, |_, _| sampling::gaussian_vector(rng, 1)[0]);
    let m = &q * Matrix::from_diagonal(&eig) * q.transpose() + (&k - k.transpose()) * (0.5 * skew);
    MonotoneSpec::affine(m, sampling::gaussian_vector(rng, dim))
}

/// A composition built from random planar isometries together with the
/// class the calculus certifies for it.
#[derive(Debug, Clone)]
pub struct CertifiedComposition {
    pub kind: &'static str,
    pub op: Op,
    pub certificate: ScaledConic,
    pub inputs: Vec<f64>,
}

pub fn random_averaged_averaged(rng: &mut rand_chacha::ChaCha8Rng) -> Result<CertifiedComposition> {
    let a1 = sampling::uniform(rng, 0.01, 0.99);
    let a2 = sampling::uniform(rng, 0.01, 0.99);
    conic_pair("averaged-averaged", a1, a2, rng)
}

pub fn random_conic_conic(rng: &mut rand_chacha::ChaCha8Rng) -> Result<CertifiedComposition> {
    let a1 = sampling::uniform(rng, 0.05, 3.0);
    let a2 = sampling::uniform(rng, 0.01, 0.999) / a1;
    conic_pair("conic-conic", a1, a2, rng)
}

fn conic_pair(kind: &'static str, a1: f64, a2: f64, rng: &mut rand_chacha::ChaCha8Rng) -> Result<CertifiedComposition> {
    let r1 = build_in_operator(1.0 - a1, a1, &random_isometry_2d(rng))?;
    let r2 = build_in_operator(1.0 - a2, a2, &random_isometry_2d(rng))?;
    let cert = compose_conic(ScaledConic::conic(a1)?, ScaledConic::conic(a2)?)?.result;
    Ok(CertifiedComposition { kind, op: compose(&r1, &r2)?, certificate: cert, inputs: vec![a1, a2] })
}

pub fn random_scaled_averaged_cocoercive(rng: &mut rand_chacha::ChaCha8Rng) -> Result<CertifiedComposition> {
    let alpha = sampling::uniform(rng, 0.01, 0.99);
    let delta = sampling::uniform(rng, 0.2, 2.0);
    let beta = sampling::uniform(rng, 0.2, 3.0);
    let av = build_in_operator(delta * (1.0 - alpha), delta * alpha, &random_isometry_2d(rng))?;
    let co = build_in_operator(beta / 2.0, beta / 2.0, &random_isometry_2d(rng))?;
    let order = if sampling::uniform(rng, 0.0, 1.0) < 0.5 { Order::AveragedFirst } else { Order::CocoerciveFirst };
    let op = match order {
        Order::AveragedFirst => compose(&av, &co)?,
        Order::CocoerciveFirst => compose(&co, &av)?,
    };
    let cert = compose_scaled_averaged_cocoercive(ScaledConic::new(delta, alpha)?, beta, order)?;
    Ok(CertifiedComposition { kind: "scaled-averaged-cocoercive", op, certificate: cert, inputs: vec![alpha, delta, beta] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedCase {
    /// Negative kappa on an instance with `alpha1 alpha2 > 1`, `theta` in `]pi/4, pi/2[`.
    KappaSign,
    /// Quarter-turn instance with `alpha1 = alpha2 = 2`.
    QuarterTurn,
    /// Three-operator chain with a conic middle factor.
    ChainCounterexample,
    /// DR on a subspace normal cone plus a negative multiple of the identity.
    ScalingFactor,
    /// Averaged-averaged planar compositions.
    AveragedPairs,
    /// FB worst-case scalar instances.
    Tightness,
}

impl NamedCase {
    pub const ALL: [NamedCase; 6] = [
        NamedCase::KappaSign,
        NamedCase::QuarterTurn,
        NamedCase::ChainCounterexample,
        NamedCase::ScalingFactor,
        NamedCase::AveragedPairs,
        NamedCase::Tightness,
    ];

    pub fn parse(s: &str) -> Result<NamedCase> {
        Ok(match s {
            "a" | "kappa-sign" => NamedCase::KappaSign,
            "b" | "quarter-turn" => NamedCase::QuarterTurn,
            "c" | "chain-counterexample" => NamedCase::ChainCounterexample,
            "d" | "scaling-factor" => NamedCase::ScalingFactor,
            "e" | "averaged-pairs" => NamedCase::AveragedPairs,
            "f" | "tightness" => NamedCase::Tightness,
            _ => return Err(Error::Invalid(format!("unknown case {s:?}"))),
        })
    }

    pub fn key(self) -> &'static str {
        match self {
            NamedCase::KappaSign => "a",
            NamedCase::QuarterTurn => "b",
            NamedCase::ChainCounterexample => "c",
            NamedCase::ScalingFactor => "d",
            NamedCase::AveragedPairs => "e",
            NamedCase::Tightness => "f",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: NamedCase,
    pub key: String,
    /// Whether the certifying calculus accepts the configuration.
    pub guard_accepts: bool,
    pub guard_detail: String,
    /// Whether the sampled behavior is consistent with a certificate.
    pub empirical_pass: bool,
    pub empirical_detail: String,
    /// `guard_accepts == empirical_pass`.
    pub agree: bool,
    pub values: BTreeMap<String, f64>,
}

fn report(case: NamedCase, guard: (bool, String), empirical: (bool, String), values: BTreeMap<String, f64>) -> CaseReport {
    CaseReport {
        case,
        key: case.key().into(),
        guard_accepts: guard.0,
        guard_detail: guard.1,
        empirical_pass: empirical.0,
        empirical_detail: empirical.1,
        agree: guard.0 == empirical.0,
        values,
    }
}

/// `kappa = a1 + a2 - 2 a1 a2 sin^2 t - (a1 - a2) cos t`.
pub fn kappa(theta: f64, a1: f64, a2: f64) -> f64 {
    a1 + a2 - 2.0 * a1 * a2 * theta.sin().powi(2) - (a1 - a2) * theta.cos()
}

/// `R2 R1` with `R1 = (1-a1) Id + a1 R_t`, `R2 = (1-a2) Id - a2 R_t`.
pub fn rotation_pair(theta: f64, a1: f64, a2: f64) -> Result<(Op, Op)> {
    let rt = build_rotation(theta, 1.0, 1.0);
    let r1 = build_in_operator(1.0 - a1, a1, &rt)?;
    let r2 = build_in_operator(1.0 - a2, a2, &build_rotation(theta, 1.0, -1.0))?;
    Ok((r1, r2))
}

/// Lower bound on `epsilon` for the `theta` in `]pi/4, pi/2[` family.
pub fn kappa_epsilon_bound(theta: f64) -> f64 {
    let c2 = theta.cos().powi(2);
    let c = theta.cos();
    c2 * (2.0 - c2) / ((1.0 - 2.0 * c2) * (1.0 + c) + c)
}

/// The three-factor chain `R = R3 R2 R1`, with its conic parameters.
pub fn chain_counterexample(eps: f64, delta: f64, a1: f64) -> Result<(Op, [f64; 3])> {
    let s = build_rotation(FRAC_PI_2, 1.0, 1.0);
    let a2 = a1 + delta + eps;
    let a3 = (1.0 + delta) / (2.0 * delta);
    let r1 = build_in_operator(1.0 - a1, a1, &build_rotation(FRAC_PI_2, 1.0, -1.0))?;
    let r2 = build_in_operator(1.0 - a2, a2, &s)?;
    let r3 = scale(-1.0 / delta, &s);
    let r = compose(&compose(&r1, &r2)?, &r3)?;
    Ok((r, [a1, a2, a3]))
}

fn counterexample_report(case: NamedCase, r: &Op, guard: (bool, String), mut values: BTreeMap<String, f64>) -> CaseReport {
    let mono = check_monotone(&displacement(r), 0.0, DEFAULT_PAIRS, 1e-9);
    let conic_fit = fit_tightest(r, Family::Conic, 1000);
    values.insert("min_modulus_id_minus_r".into(), mono.min_modulus);
    let conic = conic_fit.is_ok();
    let empirical_pass = mono.pass && conic;
    let detail = format!(
        "Id-R min modulus {:.6}; conic fit {}",
        mono.min_modulus,
        match conic_fit {
            Ok(l) => format!("{l:?}"),
            Err(e) => e.to_string(),
        }
    );
    report(case, guard, (empirical_pass, detail), values)
}

fn guard_text<T: std::fmt::Debug>(r: &Result<T>) -> (bool, String) {
    match r {
        Ok(v) => (true, format!("accepted: {v:?}")),
        Err(e) => (false, format!("rejected: {e}")),
    }
}

pub fn run_named_case(case: NamedCase) -> Result<CaseReport> {
    let mut values = BTreeMap::new();
    match case {
        NamedCase::KappaSign => {
            let theta = 1.2;
            let eps = kappa_epsilon_bound(theta) + 0.05;
            let a1 = (1.0 + eps) / theta.sin().powi(2);
            let a2 = theta.sin().powi(2);
            let k = kappa(theta, a1, a2);
            values.extend([("theta".into(), theta), ("alpha1".into(), a1), ("alpha2".into(), a2), ("kappa".into(), k)]);
            let (r1, r2) = rotation_pair(theta, a1, a2)?;
            let guard = guard_text(&compose_conic(ScaledConic::conic(a1)?, ScaledConic::conic(a2)?));
            Ok(counterexample_report(case, &compose(&r1, &r2)?, guard, values))
        }
        NamedCase::QuarterTurn => {
            let (theta, a1, a2) = (FRAC_PI_2, 2.0, 2.0);
            let k = kappa(theta, a1, a2);
            values.extend([("alpha1".into(), a1), ("alpha2".into(), a2), ("kappa".into(), k)]);
            let (r1, r2) = rotation_pair(theta, a1, a2)?;
            let guard = guard_text(&compose_conic(ScaledConic::conic(a1)?, ScaledConic::conic(a2)?));
            Ok(counterexample_report(case, &compose(&r1, &r2)?, guard, values))
        }
        NamedCase::ChainCounterexample => {
            let (eps, delta, a1) = (1.0, 2.0, 0.25);
            let (r, a) = chain_counterexample(eps, delta, a1)?;
            let items = [ScaledConic::conic(a[0])?, ScaledConic::conic(a[1])?, ScaledConic::conic(a[2])?];
            let others = a[0] / (1.0 - a[0]) + a[2] / (1.0 - a[2]);
            values.extend([
                ("alpha1".into(), a[0]),
                ("alpha2".into(), a[1]),
                ("alpha3".into(), a[2]),
                ("alpha_bar".into(), others / (1.0 + others)),
                ("alpha_r_times_alpha_bar".into(), a[1] * others / (1.0 + others)),
                ("expected_modulus".into(), -eps / delta),
            ]);
            let guard = guard_text(&compose_chain(&items, 1));
            Ok(counterexample_report(case, &r, guard, values))
        }
        NamedCase::ScalingFactor => {
            let (mu, omega) = (2.0, 1.0);
            let (a, b) = scaling_instance(mu, omega);
            let x0 = Vector::from_vec(vec![0.0, 1.0]);
            let mut guard_ok = true;
            let mut emp_ok = true;
            let mut guard_parts = Vec::new();
            let mut emp_parts = Vec::new();
            for gamma in [0.1, 0.5, 0.6] {
                let accepted = plan_dr(mu, omega, gamma, 0.5, DrOrder::AStrong).is_ok();
                let plan = plan_dr_forced(mu, omega, gamma, 0.5, DrOrder::AStrong)?;
                let t = build_dr(&plan, &a, &b)?.t;
                let log = iterate(&t, &x0, &IterOptions::default(), None, None)?;
                let converged = log.status == IterStatus::Converged;
                values.insert(format!("perp_factor_gamma_{gamma}"), scaling_factors(mu, omega, gamma).1);
                values.insert(format!("iterations_gamma_{gamma}"), log.records.len() as f64);
                guard_parts.push(format!("gamma={gamma}: {}", if accepted { "accepted" } else { "rejected" }));
                emp_parts.push(format!("gamma={gamma}: {:?}", log.status));
                // the guard must accept exactly the convergent runs
                guard_ok &= accepted == converged;
                emp_ok &= accepted == converged;
            }
            let guard = (guard_ok, guard_parts.join("; "));
            let empirical = (emp_ok, emp_parts.join("; "));
            Ok(report(case, guard, empirical, values))
        }
        NamedCase::AveragedPairs => {
            let mut guard_ok = true;
            let mut emp_ok = true;
            let mut rng = sampling::rng(DEFAULT_SEED);
            let mut parts = Vec::new();
            for (a1, a2) in [(0.5, 0.5), (0.7, 0.6)] {
                let c = compose_conic(ScaledConic::conic(a1)?, ScaledConic::conic(a2)?);
                let g = compose_general(InParams::new(1.0 - a1, a1)?, InParams::new(1.0 - a2, a2)?);
                guard_ok &= c.is_ok() && g.is_ok();
                if let Ok(c) = c {
                    values.insert(format!("alpha_{a1}_{a2}"), c.result.alpha);
                    for _ in 0..20 {
                        let r1 = build_in_operator(1.0 - a1, a1, &random_isometry_2d(&mut rng))?;
                        let r2 = build_in_operator(1.0 - a2, a2, &random_isometry_2d(&mut rng))?;
                        let m = check_membership_scaled(&compose(&r1, &r2)?, c.result, DEFAULT_PAIRS, 1e-9);
                        emp_ok &= m.pass;
                    }
                    parts.push(format!("({a1},{a2}) -> averaged {:.6}", c.result.alpha));
                }
            }
            Ok(report(case, (guard_ok, parts.join("; ")), (emp_ok, "membership on 20 isometry pairs each".into()), values))
        }
        NamedCase::Tightness => {
            let (mu, omega, beta) = (2.0, 1.0, 1.0);
            let x0 = Vector::from_vec(vec![1.0, 0.0]);
            let mut emp_ok = true;
            let mut guard_ok = true;
            let mut parts = Vec::new();
            for (fb, gamma, a_coef) in [(FbCase::I, 0.2, mu), (FbCase::Ib, 0.45, mu + beta)] {
                let plan = plan_fb(fb, mu, omega, beta, None, gamma);
                guard_ok &= plan.is_ok();
                let plan = match plan {
                    Ok(p) => p,
                    Err(e) => return Ok(report(case, (false, e.to_string()), (false, String::new()), values)),
                };
                let t = build_fb(&plan, &MonotoneSpec::scaled_identity(a_coef, 2), &MonotoneSpec::scaled_identity(-omega, 2))?;
                let zero = Vector::zeros(2);
                let log = iterate(&t, &x0, &IterOptions::default(), None, Some(&zero))?;
                let rate = rate_report(&log, &plan)?;
                let fit = fit_tightest(&t, Family::Lipschitz, 1000)?;
                let fit_l = match fit {
                    ClassLabel::Lipschitz { constant } => constant,
                    _ => f64::NAN,
                };
                let tight = (rate.empirical_rate - plan.delta.abs()).abs() <= 1e-12 && (fit_l - plan.delta.abs()).abs() <= 1e-6;
                emp_ok &= rate.satisfied && tight;
                values.insert(format!("certified_{fb:?}"), plan.delta.abs());
                values.insert(format!("empirical_{fb:?}"), rate.empirical_rate);
                values.insert(format!("lipschitz_fit_{fb:?}"), fit_l);
                parts.push(format!("{fb:?}: certified {:.12}, empirical {:.12}", plan.delta.abs(), rate.empirical_rate));
            }
            Ok(report(case, (guard_ok, "both plans accepted".into()), (emp_ok, parts.join("; ")), values))
        }
    }
}

/// Outcome of one random certified composition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomCase {
    pub kind: String,
    pub inputs: Vec<f64>,
    pub certificate: ScaledConic,
    pub worst_violation: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomSuite {
    pub seed: u64,
    pub pairs: usize,
    pub cases: Vec<RandomCase>,
    pub all_pass: bool,
}

/// `count` random certified compositions cycling through the three kinds,
/// each checked on `pairs` planar pairs at tolerance `tol`.
pub fn random_suite(seed: u64, count: usize, pairs: usize, tol: f64) -> Result<RandomSuite> {
    let mut rng = sampling::rng(seed);
    let mut built = Vec::with_capacity(count);
    for i in 0..count {
        built.push(match i % 3 {
            0 => random_averaged_averaged(&mut rng)?,
            1 => random_conic_conic(&mut rng)?,
            _ => random_scaled_averaged_cocoercive(&mut rng)?,
        });
    }
    let cfg = SampleConfig::new(pairs).with_seed(seed);
    let cases: Vec<RandomCase> = built
        .iter()
        .map(|c| {
            let m = check_membership_scaled_with(&c.op, c.certificate, &cfg, tol);
            RandomCase {
                kind: c.kind.into(),
                inputs: c.inputs.clone(),
                certificate: c.certificate,
                worst_violation: m.worst_violation,
                pass: m.pass,
            }
        })
        .collect();
    let all_pass = cases.iter().all(|c| c.pass);
    Ok(RandomSuite { seed, pairs, cases, all_pass })
}
