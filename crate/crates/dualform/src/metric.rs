//! Signature-aware dense linear algebra on the ambient space `L = R^{N+1}`.
//!
//! Everything here works for both the Euclidean inner product and the
//! Lorentzian one of signature `(N, 1)`, where the last coordinate is the
//! timelike one. Subspaces are carried as [`SubspaceBasis`] values; an
//! orthonormal basis may contain vectors with self-product `-1` in the
//! Lorentzian case, and every projection formula weights by that sign.

use std::ops::{Deref, Index};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default tolerance for rank and orthogonality decisions at unit scale.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Ratio between the smallest kept and the largest dropped singular value
/// required for a rank decision to count as stable.
pub const RANK_GAP: f64 = 1e6;

/// Relative floor below which singular values are treated as exact zeros.
const SINGULAR_FLOOR: f64 = 1e-14;

/// Relative slack used to break pivot ties towards the lowest index.
const PIVOT_TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    Euclidean,
    /// Signature `(N, 1)`; the last coordinate is timelike.
    Lorentzian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MetricSpace {
    ambient_dim: usize,
    signature: Signature,
}

impl MetricSpace {
    pub fn new(ambient_dim: usize, signature: Signature) -> Result<Self> {
        if ambient_dim < 2 {
            return Err(Error::AmbientTooSmall(ambient_dim));
        }
        Ok(Self {
            ambient_dim,
            signature,
        })
    }

    pub fn euclidean(ambient_dim: usize) -> Result<Self> {
        Self::new(ambient_dim, Signature::Euclidean)
    }

    pub fn lorentzian(ambient_dim: usize) -> Result<Self> {
        Self::new(ambient_dim, Signature::Lorentzian)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// The `N` of `L = R^{N+1}`; also the dimension of the sphere or sheet.
    pub fn sphere_dim(&self) -> usize {
        self.ambient_dim - 1
    }

    pub fn signature(&self) -> Signature {
        self.signature
    }

    /// Diagonal entry of the metric for coordinate `i`.
    pub fn weight(&self, i: usize) -> f64 {
        match self.signature {
            Signature::Lorentzian if i + 1 == self.ambient_dim => -1.0,
            _ => 1.0,
        }
    }

    pub fn inner(&self, x: &AmbientVector, y: &AmbientVector) -> Result<f64> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        Ok(self.dot(x, y))
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.ambient_dim {
            return Err(Error::DimensionMismatch {
                expected: self.ambient_dim,
                found: len,
            });
        }
        Ok(())
    }

    /// Unchecked inner product on raw coordinate slices.
    pub(crate) fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        let mut acc: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        if self.signature == Signature::Lorentzian {
            let last = self.ambient_dim - 1;
            acc -= 2.0 * x[last] * y[last];
        }
        acc
    }

    /// The standard basis, which is orthonormal for both signatures.
    pub fn standard_basis(&self) -> SubspaceBasis {
        let vectors = (0..self.ambient_dim)
            .map(|i| AmbientVector::axis(self.ambient_dim, i))
            .collect();
        SubspaceBasis::trusted(*self, vectors)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct AmbientVector(Vec<f64>);

impl AmbientVector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(coords))
    }

    pub(crate) fn from_vec(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn axis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Euclidean norm of the coordinates, independent of the metric.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|c| c * s).collect())
    }

    pub fn neg(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self += s * x`
    pub fn axpy(&mut self, s: f64, x: &Self) {
        for (a, b) in self.0.iter_mut().zip(&x.0) {
            *a += s * b;
        }
    }

    /// Euclidean distance between coordinate tuples.
    pub fn distance(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Deref for AmbientVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl Index<usize> for AmbientVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<AmbientVector> for Vec<f64> {
    fn from(v: AmbientVector) -> Self {
        v.0
    }
}

/// An ordered list of vectors spanning a subspace of `L`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    metric: MetricSpace,
    vectors: Vec<AmbientVector>,
    orthonormal: bool,
}

impl SubspaceBasis {
    /// A raw spanning list; not assumed orthonormal.
    pub fn spanning(metric: MetricSpace, vectors: Vec<AmbientVector>) -> Result<Self> {
        for v in &vectors {
            metric.check_len(v.len())?;
        }
        Ok(Self {
            metric,
            vectors,
            orthonormal: false,
        })
    }

    /// Wraps vectors the caller claims are orthonormal, verifying the claim.
    pub fn orthonormal(metric: MetricSpace, vectors: Vec<AmbientVector>, tol: f64) -> Result<Self> {
        for v in &vectors {
            metric.check_len(v.len())?;
        }
        let basis = Self::trusted(metric, vectors);
        if basis.orthonormality_defect() > tol {
            return Err(Error::NotOrthonormal);
        }
        Ok(basis)
    }

    pub fn empty(metric: MetricSpace) -> Self {
        Self::trusted(metric, Vec::new())
    }

    pub(crate) fn trusted(metric: MetricSpace, vectors: Vec<AmbientVector>) -> Self {
        Self {
            metric,
            vectors,
            orthonormal: true,
        }
    }

    pub fn metric(&self) -> MetricSpace {
        self.metric
    }

    pub fn vectors(&self) -> &[AmbientVector] {
        &self.vectors
    }

    pub fn into_vectors(self) -> Vec<AmbientVector> {
        self.vectors
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn is_orthonormal(&self) -> bool {
        self.orthonormal
    }

    /// Self-products of the basis vectors, `±1` for an orthonormal basis.
    pub fn signs(&self) -> Vec<f64> {
        self.vectors
            .iter()
            .map(|v| self.metric.dot(v, v).signum())
            .collect()
    }

    /// Largest deviation of the Gram matrix from a diagonal of `±1`.
    pub fn orthonormality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate().skip(i) {
                let g = self.metric.dot(a, b);
                let defect = if i == j { (g.abs() - 1.0).abs() } else { g.abs() };
                worst = worst.max(defect);
            }
        }
        worst
    }

    /// Concatenates the vector lists of several bases (no re-orthonormalization).
    pub fn concat(metric: MetricSpace, parts: &[&SubspaceBasis]) -> Self {
        let vectors = parts.iter().flat_map(|b| b.vectors.iter().cloned()).collect();
        Self {
            metric,
            vectors,
            orthonormal: parts.iter().all(|b| b.orthonormal),
        }
    }
}

/// Numerical rank chosen at the largest singular-value gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NumericalRank {
    pub rank: usize,
    /// Ratio between the smallest kept and the largest dropped value.
    pub gap: f64,
    /// Second-largest ratio among the candidate cut positions.
    pub runner_up: f64,
}

impl NumericalRank {
    /// A single cut exceeds `threshold` and no competing cut does.
    pub fn is_stable(&self, threshold: f64) -> bool {
        self.gap >= threshold && self.runner_up < threshold
    }
}

/// Picks the rank at the largest ratio between consecutive singular values.
///
/// The list is padded with a unit reference scale in front (so rank 0 is a
/// candidate) and with a relative floor at the back (so full rank is one).
pub fn gap_rank(values: &[f64]) -> NumericalRank {
    let mut sorted: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let reference = sorted.first().copied().unwrap_or(0.0).max(1.0);
    let floor = SINGULAR_FLOOR * reference;
    let mut ext = Vec::with_capacity(sorted.len() + 2);
    ext.push(reference);
    ext.extend(sorted.iter().map(|v| v.max(floor)));
    ext.push(floor);

    let mut best = (0usize, f64::NEG_INFINITY);
    let mut runner_up = 0.0f64;
    for i in 0..ext.len() - 1 {
        let ratio = ext[i] / ext[i + 1];
        if ratio > best.1 {
            runner_up = runner_up.max(best.1);
            best = (i, ratio);
        } else {
            runner_up = runner_up.max(ratio);
        }
    }
    NumericalRank {
        rank: best.0,
        gap: best.1,
        runner_up: runner_up.max(0.0),
    }
}

/// Outcome of pivoted Gram–Schmidt: orthonormal vectors plus the input index
/// each one was built from.
#[derive(Debug, Clone)]
pub(crate) struct Pivoted {
    pub vectors: Vec<AmbientVector>,
    pub pivots: Vec<usize>,
}

/// Modified Gram–Schmidt that always continues with the remaining residual of
/// largest `|self-product|`, seeded by `prefix` vectors that are already
/// orthonormal and are not returned.
pub(crate) fn pivoted_gram_schmidt(
    ms: &MetricSpace,
    prefix: &[AmbientVector],
    candidates: &[AmbientVector],
    tol: f64,
) -> Result<Pivoted> {
    let mut residuals: Vec<AmbientVector> = candidates.to_vec();
    for r in residuals.iter_mut() {
        ms.check_len(r.len())?;
        for b in prefix {
            let c = ms.dot(r, b) * ms.dot(b, b).signum();
            r.axpy(-c, b);
        }
    }
    let mut active: Vec<usize> = (0..candidates.len()).collect();
    let mut basis: Vec<AmbientVector> = prefix.to_vec();
    let mut out = Pivoted {
        vectors: Vec::new(),
        pivots: Vec::new(),
    };

    while !active.is_empty() {
        let max_norm = active
            .iter()
            .map(|&i| residuals[i].norm())
            .fold(0.0, f64::max);
        if max_norm < tol {
            break;
        }
        let products: Vec<f64> = active
            .iter()
            .map(|&i| ms.dot(&residuals[i], &residuals[i]).abs())
            .collect();
        let best = products.iter().copied().fold(0.0, f64::max);
        if best < tol * tol {
            return Err(Error::IndefiniteSpan { residual: max_norm });
        }
        let slot = products
            .iter()
            .position(|&p| p >= best * (1.0 - PIVOT_TIE))
            .expect("maximum is attained");
        let pivot = active.remove(slot);

        let mut b = residuals[pivot].clone();
        // second pass against the accumulated basis
        for prev in &basis {
            let c = ms.dot(&b, prev) * ms.dot(prev, prev).signum();
            b.axpy(-c, prev);
        }
        let sp = ms.dot(&b, &b);
        if sp.abs() < tol * tol {
            return Err(Error::IndefiniteSpan { residual: b.norm() });
        }
        let b = b.scaled(1.0 / sp.abs().sqrt());
        let sign = sp.signum();
        for &i in &active {
            let c = ms.dot(&residuals[i], &b) * sign;
            residuals[i].axpy(-c, &b);
        }
        basis.push(b.clone());
        out.vectors.push(b);
        out.pivots.push(pivot);
    }
    Ok(out)
}

/// Gram–Schmidt with pivoting on the largest residual; returns the
/// orthonormal basis and the numerical rank.
pub fn orthonormalize(
    ms: &MetricSpace,
    vectors: &[AmbientVector],
    tol: f64,
) -> Result<(SubspaceBasis, usize)> {
    let pivoted = pivoted_gram_schmidt(ms, &[], vectors, tol)?;
    let rank = pivoted.vectors.len();
    Ok((SubspaceBasis::trusted(*ms, pivoted.vectors), rank))
}

fn ensure_orthonormal(basis: &SubspaceBasis, tol: f64) -> Result<SubspaceBasis> {
    if basis.orthonormal {
        Ok(basis.clone())
    } else {
        Ok(orthonormalize(&basis.metric, &basis.vectors, tol)?.0)
    }
}

/// Projection of `v` onto the span of an orthonormal basis.
pub fn project(ms: &MetricSpace, v: &AmbientVector, basis: &SubspaceBasis) -> Result<AmbientVector> {
    ms.check_len(v.len())?;
    if !basis.orthonormal {
        return Err(Error::NotOrthonormal);
    }
    Ok(project_unchecked(ms, v, basis.vectors()))
}

pub(crate) fn project_unchecked(ms: &MetricSpace, v: &[f64], basis: &[AmbientVector]) -> AmbientVector {
    let mut out = AmbientVector::zeros(v.len());
    for b in basis {
        let sign = ms.dot(b, b).signum();
        out.axpy(sign * ms.dot(v, b), b);
    }
    out
}

/// Euclidean length of the part of `v` outside the span of `basis`.
pub fn residual_outside(ms: &MetricSpace, v: &AmbientVector, basis: &SubspaceBasis) -> Result<f64> {
    Ok(v.distance(&project(ms, v, basis)?))
}

/// Orthonormal basis of the metric complement of `span` inside `enclosing`.
pub fn complement_within(
    ms: &MetricSpace,
    enclosing: &SubspaceBasis,
    span: &SubspaceBasis,
    tol: f64,
) -> Result<SubspaceBasis> {
    let enclosing = ensure_orthonormal(enclosing, tol)?;
    let span = ensure_orthonormal(span, tol)?;
    for v in span.vectors() {
        let residual = residual_outside(ms, v, &enclosing)?;
        if residual > tol {
            return Err(Error::NotInside { residual });
        }
    }
    let pivoted = pivoted_gram_schmidt(ms, span.vectors(), enclosing.vectors(), tol)?;
    Ok(SubspaceBasis::trusted(*ms, pivoted.vectors))
}

/// Intersection by principal angles: directions whose cosine is at least
/// `1 - tol`. Both subspaces must be definite under the metric.
pub fn intersect(a: &SubspaceBasis, b: &SubspaceBasis, tol: f64) -> Result<SubspaceBasis> {
    if a.metric != b.metric {
        return Err(Error::DimensionMismatch {
            expected: a.metric.ambient_dim,
            found: b.metric.ambient_dim,
        });
    }
    let ms = a.metric;
    let a = ensure_orthonormal(a, tol)?;
    let b = ensure_orthonormal(b, tol)?;
    if a.is_empty() || b.is_empty() {
        return Ok(SubspaceBasis::empty(ms));
    }
    let cross = DMatrix::from_fn(a.dim(), b.dim(), |i, j| ms.dot(&a.vectors[i], &b.vectors[j]));
    let svd = cross.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut shared = Vec::new();
    for (k, &cosine) in svd.singular_values.iter().enumerate() {
        if cosine >= 1.0 - tol {
            let mut x = AmbientVector::zeros(ms.ambient_dim);
            for (i, av) in a.vectors.iter().enumerate() {
                x.axpy(u[(i, k)], av);
            }
            shared.push(x);
        }
    }
    Ok(orthonormalize(&ms, &shared, tol)?.0)
}

/// Cosines of the principal angles between two definite subspaces, descending.
pub fn principal_cosines(a: &SubspaceBasis, b: &SubspaceBasis, tol: f64) -> Result<Vec<f64>> {
    let ms = a.metric;
    let a = ensure_orthonormal(a, tol)?;
    let b = ensure_orthonormal(b, tol)?;
    if a.is_empty() || b.is_empty() {
        return Ok(Vec::new());
    }
    let cross = DMatrix::from_fn(a.dim(), b.dim(), |i, j| ms.dot(&a.vectors[i], &b.vectors[j]));
    let mut values: Vec<f64> = cross.singular_values().iter().copied().collect();
    values.sort_by(|x, y| y.total_cmp(x));
    Ok(values)
}

/// Orthonormal basis of the span of `vectors` with the rank chosen by the
/// singular-value gap of their metric Gram matrix. Intended for definite
/// spans (tangent spaces), where the Gram eigenvalues are squared singular
/// values.
pub fn span_with_rank(ms: &MetricSpace, vectors: &[AmbientVector]) -> Result<(SubspaceBasis, NumericalRank)> {
    for v in vectors {
        ms.check_len(v.len())?;
    }
    if vectors.is_empty() {
        return Ok((SubspaceBasis::empty(*ms), gap_rank(&[])));
    }
    let n = vectors.len();
    let gram = DMatrix::from_fn(n, n, |i, j| ms.dot(&vectors[i], &vectors[j]));
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].abs().total_cmp(&eig.eigenvalues[i].abs()));
    let singular: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].abs().sqrt()).collect();
    let rank = gap_rank(&singular);

    let mut raw = Vec::with_capacity(rank.rank);
    for (slot, &col) in order.iter().take(rank.rank).enumerate() {
        let mut x = AmbientVector::zeros(ms.ambient_dim);
        for (a, v) in vectors.iter().enumerate() {
            x.axpy(eig.eigenvectors[(a, col)] / singular[slot], v);
        }
        raw.push(x);
    }
    let pivoted = pivoted_gram_schmidt(ms, &[], &raw, 1e-3)?;
    Ok((SubspaceBasis::trusted(*ms, pivoted.vectors), rank))
}

/// Singular values of a spanning list under the metric Gram matrix, descending.
pub fn gram_singular_values(ms: &MetricSpace, vectors: &[AmbientVector]) -> Vec<f64> {
    let n = vectors.len();
    if n == 0 {
        return Vec::new();
    }
    let gram = DMatrix::from_fn(n, n, |i, j| ms.dot(&vectors[i], &vectors[j]));
    let mut values: Vec<f64> = SymmetricEigen::new(gram)
        .eigenvalues
        .iter()
        .map(|l| l.abs().sqrt())
        .collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn v(c: &[f64]) -> AmbientVector {
        AmbientVector::new(c.to_vec()).unwrap()
    }

    fn e3() -> MetricSpace {
        MetricSpace::euclidean(3).unwrap()
    }

    fn l3() -> MetricSpace {
        MetricSpace::lorentzian(3).unwrap()
    }

    fn assert_same_span(ms: &MetricSpace, a: &SubspaceBasis, expected: &[AmbientVector]) {
        assert_eq!(a.dim(), expected.len());
        for x in expected {
            assert!(residual_outside(ms, x, a).unwrap() < 1e-12);
        }
    }

    #[test]
    fn inner_examples() {
        assert_eq!(e3().inner(&v(&[1., 0., 0.]), &v(&[1., 0., 0.])).unwrap(), 1.0);
        assert_eq!(l3().inner(&v(&[0., 0., 1.]), &v(&[0., 0., 1.])).unwrap(), -1.0);
        assert_eq!(l3().inner(&v(&[1., 0., 1.]), &v(&[0., 1., 1.])).unwrap(), -1.0);
    }

    #[test]
    fn inner_rejects_mismatched_lengths() {
        let err = e3().inner(&v(&[1., 0.]), &v(&[1., 0., 0.])).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2 }));
    }

    #[test]
    fn ambient_dimension_must_be_two_or_more() {
        assert!(matches!(MetricSpace::euclidean(1), Err(Error::AmbientTooSmall(1))));
        assert!(AmbientVector::new(vec![f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn lorentzian_weights() {
        let ms = MetricSpace::lorentzian(4).unwrap();
        let w: Vec<f64> = (0..4).map(|i| ms.weight(i)).collect();
        assert_eq!(w, vec![1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn orthonormalize_examples() {
        let ms = e3();
        let (b, r) = orthonormalize(&ms, &[v(&[2., 0., 0.])], 1e-10).unwrap();
        assert_eq!(r, 1);
        assert_eq!(b.vectors()[0], v(&[1., 0., 0.]));

        let (b, r) = orthonormalize(&ms, &[v(&[1., 0., 0.]), v(&[1., 1., 0.])], 1e-10).unwrap();
        assert_eq!(r, 2);
        assert_same_span(&ms, &b, &[v(&[1., 0., 0.]), v(&[0., 1., 0.])]);
        assert!(b.orthonormality_defect() < 1e-15);

        let (_, r) = orthonormalize(&ms, &[v(&[1., 0., 0.]), v(&[2., 0., 0.])], 1e-10).unwrap();
        assert_eq!(r, 1);
    }

    #[test]
    fn orthonormalize_reports_null_directions() {
        let ms = l3();
        let err = orthonormalize(&ms, &[v(&[1., 0., 1.])], 1e-9).unwrap_err();
        assert!(matches!(err, Error::IndefiniteSpan { .. }));
    }

    #[test]
    fn complement_examples() {
        let ms = e3();
        let all = ms.standard_basis();
        let span = SubspaceBasis::spanning(ms, vec![v(&[0., 0., 1.])]).unwrap();
        let c = complement_within(&ms, &all, &span, 1e-9).unwrap();
        assert_same_span(&ms, &c, &[v(&[1., 0., 0.]), v(&[0., 1., 0.])]);

        let plane = SubspaceBasis::spanning(ms, vec![v(&[1., 1., 0.]), v(&[0., 1., 0.])]).unwrap();
        let c = complement_within(&ms, &plane, &plane, 1e-9).unwrap();
        assert!(c.is_empty());

        let ms = l3();
        let all = ms.standard_basis();
        let span = SubspaceBasis::spanning(ms, vec![v(&[0., 0., 1.])]).unwrap();
        let c = complement_within(&ms, &all, &span, 1e-9).unwrap();
        assert_same_span(&ms, &c, &[v(&[1., 0., 0.]), v(&[0., 1., 0.])]);
        assert_eq!(c.signs(), vec![1.0, 1.0]);
    }

    #[test]
    fn complement_requires_containment() {
        let ms = e3();
        let enclosing = SubspaceBasis::spanning(ms, vec![v(&[1., 0., 0.])]).unwrap();
        let span = SubspaceBasis::spanning(ms, vec![v(&[0., 1., 0.])]).unwrap();
        assert!(matches!(
            complement_within(&ms, &enclosing, &span, 1e-9),
            Err(Error::NotInside { .. })
        ));
    }

    #[test]
    fn intersect_examples() {
        let ms = e3();
        let a = SubspaceBasis::spanning(ms, vec![v(&[1., 0., 0.]), v(&[0., 1., 0.])]).unwrap();
        let b = SubspaceBasis::spanning(ms, vec![v(&[0., 1., 0.]), v(&[0., 0., 1.])]).unwrap();
        let i = intersect(&a, &b, 1e-9).unwrap();
        assert_same_span(&ms, &i, &[v(&[0., 1., 0.])]);

        let i = intersect(&a, &a, 1e-9).unwrap();
        assert_eq!(i.dim(), 2);

        let x = SubspaceBasis::spanning(ms, vec![v(&[1., 0., 0.])]).unwrap();
        let y = SubspaceBasis::spanning(ms, vec![v(&[0., 1., 0.])]).unwrap();
        assert!(intersect(&x, &y, 1e-9).unwrap().is_empty());
    }

    #[test]
    fn project_examples() {
        let ms = e3();
        let basis = SubspaceBasis::orthonormal(ms, vec![v(&[1., 0., 0.])], 1e-12).unwrap();
        assert_eq!(project(&ms, &v(&[1., 2., 3.]), &basis).unwrap(), v(&[1., 0., 0.]));
        assert_eq!(project(&ms, &v(&[4., 0., 0.]), &basis).unwrap(), v(&[4., 0., 0.]));

        let ms = l3();
        let basis = SubspaceBasis::orthonormal(ms, vec![v(&[0., 0., 1.])], 1e-12).unwrap();
        assert_eq!(project(&ms, &v(&[0., 0., 5.]), &basis).unwrap(), v(&[0., 0., 5.]));
    }

    #[test]
    fn project_rejects_raw_spans() {
        let ms = e3();
        let basis = SubspaceBasis::spanning(ms, vec![v(&[2., 0., 0.])]).unwrap();
        assert!(matches!(project(&ms, &v(&[1., 0., 0.]), &basis), Err(Error::NotOrthonormal)));
    }

    #[test]
    fn gap_rank_cases() {
        assert_eq!(gap_rank(&[1.0, 0.5]).rank, 2);
        assert_eq!(gap_rank(&[0.0]).rank, 0);
        assert_eq!(gap_rank(&[]).rank, 0);
        let r = gap_rank(&[1.0, 1e-17]);
        assert_eq!(r.rank, 1);
        assert!(r.is_stable(RANK_GAP));
        let r = gap_rank(&[1.0, 1e-8]);
        assert!(!r.is_stable(RANK_GAP));
        // scale-free above the unit reference
        assert_eq!(gap_rank(&[1e3, 2e2, 1e-12]).rank, 2);
    }

    #[test]
    fn span_with_rank_matches_gap() {
        let ms = e3();
        let (b, r) = span_with_rank(&ms, &[v(&[1., 1., 0.]), v(&[2., 2., 0.])]).unwrap();
        assert_eq!(r.rank, 1);
        assert_abs_diff_eq!(b.vectors()[0][0].abs(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        let (b, r) = span_with_rank(&ms, &[v(&[0., 0., 0.])]).unwrap();
        assert_eq!(r.rank, 0);
        assert!(b.is_empty());
    }
}
