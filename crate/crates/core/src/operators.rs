//! Evaluatable operators on real vectors: rotations, identity-nonexpansive
//! builds, resolvents, proximal maps of quadratics and pointwise combinators.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::class_calculus::{
    compose_general, compose_kappa_theta, from_label, resolvent_class, ClassLabel, InParams,
};
use crate::error::{Error, Result};
use crate::sampling::{sample_pairs, DEFAULT_SEED};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// `x -> m x + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub m: Matrix,
    pub b: Vector,
}

impl Affine {
    pub fn apply(&self, x: &Vector) -> Vector {
        &self.m * x + &self.b
    }
}

type MapFn = dyn Fn(&Vector) -> Vector + Send + Sync;

/// A map on `R^n` with an optional `(alpha, beta)` certificate.
#[derive(Clone)]
pub struct Op {
    dim: usize,
    f: Arc<MapFn>,
    affine: Option<Arc<Affine>>,
    certificate: Option<InParams>,
    name: String,
}

impl fmt::Debug for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Op")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("affine", &self.affine.is_some())
            .field("certificate", &self.certificate)
            .finish()
    }
}

impl Op {
    pub fn new<F>(dim: usize, name: impl Into<String>, f: F) -> Op
    where
        F: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        Op { dim, f: Arc::new(f), affine: None, certificate: None, name: name.into() }
    }

    pub fn affine(m: Matrix, b: Vector, name: impl Into<String>) -> Result<Op> {
        if !m.is_square() {
            return Err(Error::Invalid(format!("affine map needs a square matrix, got {}x{}", m.nrows(), m.ncols())));
        }
        if b.len() != m.nrows() {
            return Err(Error::Dimension { expected: m.nrows(), got: b.len() });
        }
        let aff = Arc::new(Affine { m, b });
        let inner = aff.clone();
        Ok(Op {
            dim: aff.b.len(),
            f: Arc::new(move |x| inner.apply(x)),
            affine: Some(aff),
            certificate: None,
            name: name.into(),
        })
    }

    pub fn linear(m: Matrix, name: impl Into<String>) -> Result<Op> {
        let n = m.nrows();
        Self::affine(m, Vector::zeros(n), name)
    }

    pub fn identity(dim: usize) -> Op {
        Self::linear(Matrix::identity(dim, dim), "Id").unwrap().with_certificate(InParams { alpha: 1.0, beta: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn certificate(&self) -> Option<InParams> {
        self.certificate
    }

    pub fn as_affine(&self) -> Option<&Affine> {
        self.affine.as_deref()
    }

    pub fn with_certificate(mut self, p: InParams) -> Op {
        self.certificate = Some(p);
        self
    }

    pub fn without_certificate(mut self) -> Op {
        self.certificate = None;
        self
    }

    pub fn named(mut self, name: impl Into<String>) -> Op {
        self.name = name.into();
        self
    }

    /// Evaluates the map. Panics if `x` has the wrong dimension.
    pub fn apply(&self, x: &Vector) -> Vector {
        assert_eq!(x.len(), self.dim, "operator {} expects dimension {}", self.name, self.dim);
        (self.f)(x)
    }

    pub fn try_apply(&self, x: &Vector) -> Result<Vector> {
        if x.len() != self.dim {
            return Err(Error::Dimension { expected: self.dim, got: x.len() });
        }
        Ok((self.f)(x))
    }
}

fn check_dims(a: &Op, b: &Op) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::Dimension { expected: a.dim, got: b.dim });
    }
    Ok(())
}

/// Certificate of `second . first` from the factors' certificates, falling
/// back to the Lipschitz product when no composition result applies.
pub fn compose_certificate(first: InParams, second: InParams) -> InParams {
    if let Ok(p) = compose_general(first, second) {
        return p;
    }
    if let Ok(sc) = compose_kappa_theta(first, second) {
        return sc.to_in();
    }
    InParams { alpha: 0.0, beta: first.lipschitz() * second.lipschitz() }
}

/// `second . first`: applies `first`, then `second`.
pub fn compose(first: &Op, second: &Op) -> Result<Op> {
    check_dims(first, second)?;
    let name = format!("{}.{}", second.name, first.name);
    let certificate = match (first.certificate, second.certificate) {
        (Some(p1), Some(p2)) => Some(compose_certificate(p1, p2)),
        _ => None,
    };
    let mut op = match (&first.affine, &second.affine) {
        (Some(a1), Some(a2)) => Op::affine(&a2.m * &a1.m, &a2.m * &a1.b + &a2.b, name)?,
        _ => {
            let (f1, f2) = (first.f.clone(), second.f.clone());
            Op::new(first.dim, name, move |x| f2(&f1(x)))
        }
    };
    op.certificate = certificate;
    Ok(op)
}

/// `c * T`.
pub fn scale(c: f64, t: &Op) -> Op {
    let name = format!("{c}*{}", t.name);
    let mut op = match &t.affine {
        Some(a) => Op::affine(&a.m * c, &a.b * c, name).unwrap(),
        None => {
            let f = t.f.clone();
            Op::new(t.dim, name, move |x| f(x) * c)
        }
    };
    op.certificate = t.certificate.map(|p| p.scaled(c));
    op
}

pub fn negate(t: &Op) -> Op {
    scale(-1.0, t).named(format!("-{}", t.name))
}

/// `(1 - lambda) Id + lambda T`.
pub fn relax(lambda: f64, t: &Op) -> Op {
    let name = format!("relax({lambda},{})", t.name);
    let mut op = match &t.affine {
        Some(a) => {
            let m = &a.m * lambda + Matrix::identity(t.dim, t.dim) * (1.0 - lambda);
            Op::affine(m, &a.b * lambda, name).unwrap()
        }
        None => {
            let f = t.f.clone();
            Op::new(t.dim, name, move |x| x * (1.0 - lambda) + f(x) * lambda)
        }
    };
    op.certificate = t.certificate.map(|p| p.relaxed(lambda));
    op
}

/// `T + c Id`.
pub fn shift(c: f64, t: &Op) -> Op {
    let name = format!("{}+{c}Id", t.name);
    let mut op = match &t.affine {
        Some(a) => Op::affine(&a.m + Matrix::identity(t.dim, t.dim) * c, a.b.clone(), name).unwrap(),
        None => {
            let f = t.f.clone();
            Op::new(t.dim, name, move |x| f(x) + x * c)
        }
    };
    op.certificate = t.certificate.map(|p| p.shifted(c));
    op
}

/// `Id - T`.
pub fn displacement(t: &Op) -> Op {
    shift(1.0, &negate(t)).named(format!("Id-{}", t.name))
}

/// Planar rotation `x -> scale * sign * R_theta x`.
pub fn build_rotation(theta: f64, scale: f64, sign: f64) -> Op {
    let s = scale * sign.signum();
    let (sn, cs) = theta.sin_cos();
    let m = Matrix::from_row_slice(2, 2, &[cs, -sn, sn, cs]) * s;
    Op::linear(m, format!("rot({theta})"))
        .unwrap()
        .with_certificate(InParams { alpha: 0.0, beta: scale.abs() })
}

/// `alpha Id + beta N` for a certified nonexpansive `N`.
pub fn build_in_operator(alpha: f64, beta: f64, n: &Op) -> Result<Op> {
    let p = InParams::new(alpha, beta)?;
    match n.certificate {
        Some(c) if c.lipschitz() <= 1.0 + 1e-12 => {}
        _ => return Err(Error::Invalid(format!("{} has no nonexpansive certificate", n.name))),
    }
    let name = format!("{alpha}Id+{beta}{}", n.name);
    let mut op = match &n.affine {
        Some(a) => Op::affine(&a.m * beta + Matrix::identity(n.dim, n.dim) * alpha, &a.b * beta, name)?,
        None => {
            let f = n.f.clone();
            Op::new(n.dim, name, move |x| x * alpha + f(x) * beta)
        }
    };
    op.certificate = Some(p);
    Ok(op)
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn sym_min_eig(m: &Matrix) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(s).eigenvalues.min()
}

/// Largest singular value of `m`.
pub fn spectral_norm(m: &Matrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

fn is_symmetric(m: &Matrix) -> bool {
    let scale = 1.0 + m.amax();
    (m - m.transpose()).amax() <= 1e-12 * scale
}

#[derive(Debug, Clone, PartialEq)]
pub enum MonotoneKind {
    Affine { m: Matrix, b: Vector },
    /// `N_U + mu Id`, stored through the orthogonal projector onto `U`.
    SubspaceNormalPlusScale { projector: Matrix, mu: f64 },
    ScaledIdentity { c: f64, dim: usize },
    QuadraticGradient { q: Matrix, b: Vector },
}

/// A maximally `rho`-monotone operator of a concrete kind.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneSpec {
    pub rho: f64,
    /// Cocoercivity constant, when claimed.
    pub coco: Option<f64>,
    pub kind: MonotoneKind,
}

impl MonotoneSpec {
    /// Affine map with its exact modulus.
    pub fn affine(m: Matrix, b: Vector) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Invalid("affine operator needs a square matrix".into()));
        }
        if b.len() != m.nrows() {
            return Err(Error::Dimension { expected: m.nrows(), got: b.len() });
        }
        let rho = sym_min_eig(&m);
        Ok(MonotoneSpec { rho, coco: None, kind: MonotoneKind::Affine { m, b } })
    }

    pub fn scaled_identity(c: f64, dim: usize) -> Self {
        let coco = (c > 0.0).then(|| 1.0 / c);
        MonotoneSpec { rho: c, coco, kind: MonotoneKind::ScaledIdentity { c, dim } }
    }

    /// `N_U + mu Id` with `U` spanned by `basis` (need not be orthonormal).
    pub fn subspace_normal(basis: &[Vector], mu: f64, dim: usize) -> Result<Self> {
        let projector = if basis.is_empty() {
            Matrix::zeros(dim, dim)
        } else {
            for v in basis {
                if v.len() != dim {
                    return Err(Error::Dimension { expected: dim, got: v.len() });
                }
            }
            let b = Matrix::from_columns(basis);
            let qr = b.qr();
            let (q, r) = (qr.q(), qr.r());
            let keep: Vec<usize> = (0..r.nrows().min(r.ncols())).filter(|&i| r[(i, i)].abs() > 1e-12).collect();
            if keep.len() < basis.len() {
                return Err(Error::Invalid("subspace basis is linearly dependent".into()));
            }
            &q * q.transpose()
        };
        Ok(MonotoneSpec { rho: mu, coco: None, kind: MonotoneKind::SubspaceNormalPlusScale { projector, mu } })
    }

    pub fn quadratic(q: Matrix, b: Vector) -> Result<Self> {
        if !q.is_square() || !is_symmetric(&q) {
            return Err(Error::Invalid("quadratic needs a symmetric matrix".into()));
        }
        if b.len() != q.nrows() {
            return Err(Error::Dimension { expected: q.nrows(), got: b.len() });
        }
        let rho = sym_min_eig(&q);
        Ok(MonotoneSpec { rho, coco: None, kind: MonotoneKind::QuadraticGradient { q, b } })
    }

    /// Claims a smaller modulus than the exact one. Claims above the
    /// exact modulus are rejected.
    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        let exact = self.modulus();
        if rho > exact + 1e-12 * (1.0 + exact.abs()) {
            return Err(Error::Invalid(format!("claimed modulus {rho} exceeds the exact modulus {exact}")));
        }
        self.rho = rho;
        Ok(self)
    }

    /// Claims cocoercivity constant `c`; a `rho`-monotone `c`-cocoercive
    /// operator with `rho > 0` must have `rho * c <= 1`.
    pub fn with_coco(mut self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::domain("cocoercivity", c, "cocoercivity > 0"));
        }
        if self.rho > 0.0 && self.rho * c > 1.0 + 1e-12 {
            return Err(Error::Invalid(format!("modulus {} and cocoercivity {c} violate rho*c <= 1", self.rho)));
        }
        self.coco = Some(c);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            MonotoneKind::Affine { b, .. } | MonotoneKind::QuadraticGradient { b, .. } => b.len(),
            MonotoneKind::SubspaceNormalPlusScale { projector, .. } => projector.nrows(),
            MonotoneKind::ScaledIdentity { dim, .. } => *dim,
        }
    }

    /// Exact monotonicity modulus of the underlying operator.
    pub fn modulus(&self) -> f64 {
        match &self.kind {
            MonotoneKind::Affine { m, .. } => sym_min_eig(m),
            MonotoneKind::QuadraticGradient { q, .. } => sym_min_eig(q),
            MonotoneKind::SubspaceNormalPlusScale { mu, .. } => *mu,
            MonotoneKind::ScaledIdentity { c, .. } => *c,
        }
    }

    /// Affine form of the operator, when it is single-valued.
    pub fn as_affine(&self) -> Option<Affine> {
        match &self.kind {
            MonotoneKind::Affine { m, b } | MonotoneKind::QuadraticGradient { q: m, b } => {
                Some(Affine { m: m.clone(), b: b.clone() })
            }
            MonotoneKind::ScaledIdentity { c, dim } => {
                Some(Affine { m: Matrix::identity(*dim, *dim) * *c, b: Vector::zeros(*dim) })
            }
            MonotoneKind::SubspaceNormalPlusScale { .. } => None,
        }
    }

    /// The operator itself as an [`Op`]; fails for the multivalued kind.
    pub fn forward(&self) -> Result<Op> {
        let a = self
            .as_affine()
            .ok_or_else(|| Error::Invalid("normal cone operator is not single-valued".into()))?;
        Op::affine(a.m, a.b, "A")
    }

    /// The operator on points of its domain: `Ax` for single-valued kinds
    /// and the minimal-norm element `mu x` of `(N_U + mu Id)(x)` for `x` in `U`.
    pub fn minimal_selection(&self, x: &Vector) -> Vector {
        match &self.kind {
            MonotoneKind::SubspaceNormalPlusScale { mu, .. } => x * *mu,
            _ => self.as_affine().unwrap().apply(x),
        }
    }
}

fn check_step(gamma: f64, rho: f64) -> Result<()> {
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::domain("gamma", gamma, "gamma > 0"));
    }
    if !(gamma * rho > -1.0) {
        return Err(Error::NotSingleValued { value: gamma * rho });
    }
    Ok(())
}

/// `J_{gamma A} = (Id + gamma A)^{-1}`, as an affine map.
pub fn resolvent(spec: &MonotoneSpec, gamma: f64) -> Result<Op> {
    check_step(gamma, spec.rho)?;
    let n = spec.dim();
    let cert = from_label(resolvent_class(gamma * spec.rho)?.resolvent)?;
    let op = match &spec.kind {
        MonotoneKind::Affine { m, b } | MonotoneKind::QuadraticGradient { q: m, b } => {
            let sys = Matrix::identity(n, n) + m * gamma;
            let inv = sys
                .lu()
                .try_inverse()
                .ok_or_else(|| Error::Numeric(format!("Id + gamma A is singular at gamma = {gamma}")))?;
            let off = -(&inv * b) * gamma;
            Op::affine(inv, off, "J")?
        }
        MonotoneKind::ScaledIdentity { c, .. } => Op::linear(Matrix::identity(n, n) / (1.0 + gamma * c), "J")?,
        MonotoneKind::SubspaceNormalPlusScale { projector, mu } => Op::linear(projector / (1.0 + gamma * mu), "J")?,
    };
    Ok(op.with_certificate(cert))
}

/// `R_{gamma A} = 2 J_{gamma A} - Id`.
pub fn reflected_resolvent(spec: &MonotoneSpec, gamma: f64) -> Result<Op> {
    let j = resolvent(spec, gamma)?;
    let cert = from_label(resolvent_class(gamma * spec.rho)?.reflected)?;
    Ok(shift(-1.0, &scale(2.0, &j)).named("R").with_certificate(cert))
}

/// `f(x) = x'Qx/2 + b'x` with a hypoconvexity witness `lambda`:
/// `Q + lambda Id` is positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct HypoconvexQuadratic {
    pub q: Matrix,
    pub b: Vector,
    pub lambda: f64,
}

impl HypoconvexQuadratic {
    pub fn new(q: Matrix, b: Vector, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) {
            return Err(Error::domain("lambda", lambda, "lambda >= 0"));
        }
        if !q.is_square() || !is_symmetric(&q) {
            return Err(Error::Invalid("quadratic needs a symmetric matrix".into()));
        }
        if b.len() != q.nrows() {
            return Err(Error::Dimension { expected: q.nrows(), got: b.len() });
        }
        let min = sym_min_eig(&q);
        if min + lambda < -1e-12 * (1.0 + q.amax()) {
            return Err(Error::Invalid(format!("Q + {lambda} Id is not positive semidefinite (min eigenvalue {min})")));
        }
        Ok(HypoconvexQuadratic { q, b, lambda })
    }

    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.q * x)) + self.b.dot(x)
    }

    pub fn gradient_spec(&self) -> MonotoneSpec {
        MonotoneSpec::quadratic(self.q.clone(), self.b.clone()).expect("validated at construction")
    }
}

/// `prox_{gamma f}(x) = argmin_y f(y) + ||x - y||^2 / (2 gamma)`.
pub fn prox(f: &HypoconvexQuadratic, gamma: f64) -> Result<Op> {
    if !(gamma > 0.0) {
        return Err(Error::domain("gamma", gamma, "gamma > 0"));
    }
    if f.lambda > 0.0 && !(gamma * f.lambda < 1.0) {
        return Err(Error::domain("gamma", gamma, "gamma < 1/lambda (prox not single-valued)"));
    }
    Ok(resolvent(&f.gradient_spec(), gamma)?.named("prox"))
}

/// Smallest observed `<x-y, Fx-Fy>/||x-y||^2`; exact for affine maps.
pub fn estimate_rho(op: &Op, samples: usize) -> f64 {
    if let Some(a) = op.as_affine() {
        return sym_min_eig(&a.m);
    }
    sample_pairs(op.dim, samples.max(2), DEFAULT_SEED, &[])
        .iter()
        .map(|(x, y)| {
            let d = x - y;
            d.dot(&(op.apply(x) - op.apply(y))) / d.norm_squared()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Operator description used in JSON instance files. Matrices are row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorJson {
    Affine {
        matrix: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rho: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coco: Option<f64>,
    },
    ScaledIdentity {
        c: f64,
        dim: usize,
    },
    SubspaceNormal {
        /// Spanning vectors of `U`, one per row.
        basis: Vec<Vec<f64>>,
        mu: f64,
        dim: usize,
    },
    Quadratic {
        q: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Invalid("empty matrix".into()));
    }
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Invalid("ragged matrix rows".into()));
    }
    Ok(Matrix::from_fn(n, m, |i, j| rows[i][j]))
}

impl OperatorJson {
    pub fn to_spec(&self) -> Result<MonotoneSpec> {
        match self {
            OperatorJson::Affine { matrix, offset, rho, coco } => {
                let m = matrix_from_rows(matrix)?;
                let b = offset.as_ref().map_or_else(|| Vector::zeros(m.nrows()), |o| Vector::from_vec(o.clone()));
                let mut s = MonotoneSpec::affine(m, b)?;
                if let Some(r) = rho {
                    s = s.with_rho(*r)?;
                }
                if let Some(c) = coco {
                    s = s.with_coco(*c)?;
                }
                Ok(s)
            }
            OperatorJson::ScaledIdentity { c, dim } => Ok(MonotoneSpec::scaled_identity(*c, *dim)),
            OperatorJson::SubspaceNormal { basis, mu, dim } => {
                let vs: Vec<Vector> = basis.iter().map(|r| Vector::from_vec(r.clone())).collect();
                MonotoneSpec::subspace_normal(&vs, *mu, *dim)
            }
            OperatorJson::Quadratic { q, b, lambda } => {
                let q = matrix_from_rows(q)?;
                let b = b.as_ref().map_or_else(|| Vector::zeros(q.nrows()), |o| Vector::from_vec(o.clone()));
                if let Some(l) = lambda {
                    HypoconvexQuadratic::new(q.clone(), b.clone(), *l)?;
                }
                MonotoneSpec::quadratic(q, b)
            }
        }
    }
}

/// Labels certified for `op`, if it carries a certificate.
pub fn certified_labels(op: &Op) -> Vec<ClassLabel> {
    op.certificate.map(crate::class_calculus::classify).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn rotation_examples() {
        let s = build_rotation(FRAC_PI_2, 1.0, 1.0);
        let y = s.apply(&v(&[1.0, 0.0]));
        assert_relative_eq!(y, v(&[0.0, 1.0]), epsilon = 1e-15);
        let ss = compose(&s, &s).unwrap();
        let x = v(&[0.3, -2.0]);
        assert_relative_eq!(ss.apply(&x), -x.clone(), epsilon = 1e-15);
        assert_eq!(build_rotation(0.0, 1.0, 1.0).apply(&x), x);
        assert_eq!(s.certificate(), Some(InParams { alpha: 0.0, beta: 1.0 }));
    }

    #[test]
    fn in_operator_examples() {
        let n = negate(&Op::identity(2)).with_certificate(InParams { alpha: 0.0, beta: 1.0 });
        let t = build_in_operator(0.5, 0.5, &n).unwrap();
        assert_eq!(t.apply(&v(&[1.0, 2.0])), v(&[0.0, 0.0]));
        let r = build_rotation(1.0, 1.0, 1.0);
        let same = build_in_operator(0.0, 1.0, &r).unwrap();
        let x = v(&[0.4, 0.1]);
        assert_relative_eq!(same.apply(&x), r.apply(&x), epsilon = 1e-15);
        let expansive = build_rotation(1.0, 2.0, 1.0);
        assert!(build_in_operator(0.5, 0.5, &expansive).is_err());
        assert!(build_in_operator(0.5, 0.5, &Op::new(2, "raw", |x| x.clone())).is_err());
    }

    #[test]
    fn resolvent_examples() {
        let (gamma, omega, mu) = (0.2, 1.0, 2.0);
        let j = resolvent(&MonotoneSpec::scaled_identity(-omega, 2), gamma).unwrap();
        let x = v(&[1.0, -3.0]);
        assert_relative_eq!(j.apply(&x), &x / (1.0 - gamma * omega), epsilon = 1e-15);

        let u = MonotoneSpec::subspace_normal(&[v(&[1.0, 1.0])], mu, 2).unwrap();
        let r = reflected_resolvent(&u, gamma).unwrap();
        let p = Matrix::from_element(2, 2, 0.5);
        let expect = &p * &x * (2.0 / (1.0 + gamma * mu)) - &x;
        assert_relative_eq!(r.apply(&x), expect, epsilon = 1e-14);

        let zero = MonotoneSpec::affine(Matrix::zeros(2, 2), Vector::zeros(2)).unwrap();
        assert_relative_eq!(resolvent(&zero, 3.0).unwrap().apply(&x), x.clone(), epsilon = 1e-15);

        assert!(matches!(
            resolvent(&MonotoneSpec::scaled_identity(-1.0, 2), 1.0),
            Err(Error::NotSingleValued { .. })
        ));
    }

    #[test]
    fn prox_examples() {
        let lambda = 0.5;
        let f = HypoconvexQuadratic::new(Matrix::identity(2, 2) * -lambda, Vector::zeros(2), lambda).unwrap();
        let gamma = 1.5;
        let x = v(&[1.0, 2.0]);
        assert_relative_eq!(prox(&f, gamma).unwrap().apply(&x), &x / (1.0 - gamma * lambda), epsilon = 1e-14);
        assert!(matches!(prox(&f, 2.0), Err(Error::Domain { .. })));

        let g = HypoconvexQuadratic::new(Matrix::identity(2, 2) * 3.0, Vector::zeros(2), 0.0).unwrap();
        assert_relative_eq!(prox(&g, 0.5).unwrap().apply(&x), &x / 2.5, epsilon = 1e-15);

        let b = v(&[0.3, -0.7]);
        let h = HypoconvexQuadratic::new(Matrix::zeros(2, 2), b.clone(), 0.0).unwrap();
        assert_relative_eq!(prox(&h, 2.0).unwrap().apply(&x), &x - &b * 2.0, epsilon = 1e-15);

        assert!(HypoconvexQuadratic::new(Matrix::identity(2, 2) * -1.0, Vector::zeros(2), 0.5).is_err());
    }

    #[test]
    fn prox_matches_grid_argmin_in_1d() {
        let (lambda, gamma, x) = (0.8, 0.9, 1.3);
        let f = HypoconvexQuadratic::new(Matrix::from_element(1, 1, -lambda), v(&[0.0]), lambda).unwrap();
        let p = prox(&f, gamma).unwrap().apply(&v(&[x]))[0];
        let obj = |y: f64| -0.5 * lambda * y * y + (x - y).powi(2) / (2.0 * gamma);
        let (mut best, mut best_y) = (f64::INFINITY, 0.0);
        for i in 0..=400_000 {
            let y = -10.0 + 20.0 * i as f64 / 400_000.0;
            if obj(y) < best {
                best = obj(y);
                best_y = y;
            }
        }
        assert!((p - best_y).abs() < 1e-4, "prox {p} vs grid {best_y}");
    }

    #[test]
    fn combinator_examples() {
        let s = build_rotation(FRAC_PI_2, 1.0, 1.0);
        let x = v(&[0.2, 0.9]);
        assert_eq!(negate(&negate(&s)).apply(&x), s.apply(&x));
        let delta = 2.0;
        let r3 = compose(&scale(-1.0 / delta, &Op::identity(2)), &s).unwrap();
        assert_relative_eq!(r3.apply(&x), -s.apply(&x) / delta, epsilon = 1e-15);
        let t = relax(0.25, &s);
        assert_relative_eq!(t.apply(&x), &x * 0.75 + s.apply(&x) * 0.25, epsilon = 1e-15);
        let sh = shift(0.5, &s);
        assert_relative_eq!(sh.apply(&x), s.apply(&x) + &x * 0.5, epsilon = 1e-15);
        assert!(compose(&s, &Op::identity(3)).is_err());
    }

    #[test]
    fn certificates_propagate() {
        let n = build_rotation(0.3, 1.0, 1.0);
        let a = build_in_operator(0.5, 0.5, &n).unwrap();
        let c = compose(&a, &a).unwrap().certificate().unwrap();
        assert_relative_eq!(c.alpha, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.beta, 2.0 / 3.0, epsilon = 1e-15);
        let nn = compose(&n, &n).unwrap().certificate().unwrap();
        assert_eq!(nn, InParams { alpha: 0.0, beta: 1.0 });
        assert!(compose(&a, &Op::new(2, "raw", |x| x.clone())).unwrap().certificate().is_none());
    }

    #[test]
    fn rho_examples() {
        let diag = Op::linear(Matrix::from_diagonal(&v(&[2.0, 3.0])), "D").unwrap();
        assert_relative_eq!(estimate_rho(&diag, 10), 2.0, epsilon = 1e-14);
        assert_eq!(MonotoneSpec::scaled_identity(-1.0, 3).modulus(), -1.0);
        let skew = MonotoneSpec::affine(Matrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), Vector::zeros(2)).unwrap();
        assert!(skew.rho.abs() < 1e-15);
        let sampled = Op::new(2, "skew", |x| v(&[-x[1], x[0]]));
        assert!(estimate_rho(&sampled, 1000).abs() < 1e-12);
    }

    #[test]
    fn modulus_claims_are_checked() {
        let m = Matrix::from_diagonal(&v(&[2.0, 3.0]));
        let s = MonotoneSpec::affine(m, Vector::zeros(2)).unwrap();
        assert!(s.clone().with_rho(1.5).is_ok());
        assert!(s.clone().with_rho(2.5).is_err());
        assert!(MonotoneSpec::scaled_identity(2.0, 2).with_coco(0.5).is_ok());
        assert!(MonotoneSpec::scaled_identity(2.0, 2).with_coco(0.6).is_err());
    }

    #[test]
    fn json_round_trip() {
        let j: OperatorJson = serde_json::from_str(r#"{"kind":"affine","matrix":[[2,0],[0,3]],"offset":[1,1]}"#).unwrap();
        let s = j.to_spec().unwrap();
        assert_relative_eq!(s.rho, 2.0, epsilon = 1e-14);
        let back: OperatorJson = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back, j);
        let sn: OperatorJson = serde_json::from_str(r#"{"kind":"subspace_normal","basis":[[1,0]],"mu":2,"dim":2}"#).unwrap();
        assert_eq!(sn.to_spec().unwrap().rho, 2.0);
        let bad: OperatorJson = serde_json::from_str(r#"{"kind":"affine","matrix":[[1,0],[0]]}"#).unwrap();
        assert!(bad.to_spec().is_err());
    }
}
