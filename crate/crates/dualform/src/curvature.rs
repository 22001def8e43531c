//! Fundamental forms, radicals, the five-block decomposition of `L`, the
//! inverse-matrix relation between the two second fundamental forms, and
//! the bidual distance check.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::dualizer::{fiber_grid, normal_space, trace_dual, DualCloud, DualPair, TraceGrid};
use crate::error::{Error, Result};
use crate::metric::{
    gap_rank, intersect, orthonormalize, project_unchecked, AmbientVector, MetricSpace, NumericalRank,
    SubspaceBasis, DEFAULT_TOL, RANK_GAP,
};
use crate::patch::{Jet2, JetMethod, ParamPatch, Sheet};

/// Principal-angle slack when intersecting the two tangent spaces.
pub const INTERSECTION_TOL: f64 = 1e-6;

/// Metric Gram matrix of the coordinate tangent vectors.
pub fn first_form(ms: &MetricSpace, jet: &Jet2) -> DMatrix<f64> {
    let m = jet.d1.len();
    DMatrix::from_fn(m, m, |i, j| ms.dot(&jet.d1[i], &jet.d1[j]))
}

/// `B_ij = (∂_i ∂_j f, w)` for a direction `w` normal to the patch at `p`.
pub fn second_form(ms: &MetricSpace, jet: &Jet2, w: &AmbientVector, tol: f64) -> Result<DMatrix<f64>> {
    ms.check_len(w.len())?;
    let mut residual = ms.dot(w, &jet.p).abs();
    for t in &jet.d1 {
        residual = residual.max(ms.dot(w, t).abs() / t.norm().max(1.0));
    }
    if residual > tol {
        return Err(Error::NotNormal { residual });
    }
    let m = jet.d1.len();
    let b = DMatrix::from_fn(m, m, |i, j| ms.dot(&jet.d2[i][j], w));
    Ok((&b + b.transpose()) * 0.5)
}

/// A symmetric bilinear form written on an explicit list of tangent vectors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormMatrix {
    #[serde(skip)]
    pub basis: SubspaceBasis,
    pub entries: Vec<Vec<f64>>,
}

impl FormMatrix {
    fn from_matrix(basis: SubspaceBasis, m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let entries = (0..n)
            .map(|i| (0..n).map(|j| 0.5 * (m[(i, j)] + m[(j, i)])).collect())
            .collect();
        Self { basis, entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::from_fn(n, n, |i, j| self.entries[i][j])
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.matrix()).eigenvalues.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn negated(&self) -> Self {
        Self {
            basis: self.basis.clone(),
            entries: self.entries.iter().map(|r| r.iter().map(|x| -x).collect()).collect(),
        }
    }
}

/// Coordinates `c` with `x ≈ Σ c_j d1_j`, by a pseudo-inverse of the first
/// form (the dual map may have a kernel).
fn tangent_coords(ms: &MetricSpace, jet: &Jet2, g_pinv: &DMatrix<f64>, x: &AmbientVector, tol: f64) -> Result<DVector<f64>> {
    let m = jet.d1.len();
    let rhs = DVector::from_fn(m, |j, _| ms.dot(&jet.d1[j], x));
    let c = g_pinv * rhs;
    let mut back = AmbientVector::zeros(x.len());
    for (j, t) in jet.d1.iter().enumerate() {
        back.axpy(c[j], t);
    }
    let residual = back.distance(x) / x.norm().max(1.0);
    if residual > tol {
        return Err(Error::NotInTangentSpan { residual });
    }
    Ok(c)
}

fn pseudo_inverse(g: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(g.clone());
    let values: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs().sqrt()).collect();
    let rank = gap_rank(&values).rank;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    let n = g.nrows();
    let mut out = DMatrix::zeros(n, n);
    for &k in order.iter().take(rank) {
        let v = eig.eigenvectors.column(k);
        out += v * v.transpose() / eig.eigenvalues[k];
    }
    out
}

/// The second fundamental form in direction `w` evaluated on the vectors of
/// `basis`, each of which must lie in the span of the jet's tangents.
pub fn form_on_basis(
    ms: &MetricSpace,
    jet: &Jet2,
    w: &AmbientVector,
    basis: &SubspaceBasis,
    tol: f64,
) -> Result<FormMatrix> {
    let b = second_form(ms, jet, w, tol)?;
    let g_pinv = pseudo_inverse(&first_form(ms, jet));
    let span_tol = tol.max(1e-7);
    let coords: Vec<DVector<f64>> = basis
        .vectors()
        .iter()
        .map(|x| tangent_coords(ms, jet, &g_pinv, x, span_tol))
        .collect::<Result<_>>()?;
    let n = coords.len();
    let m = DMatrix::from_fn(n, n, |i, j| (coords[i].transpose() * &b * &coords[j])[(0, 0)]);
    Ok(FormMatrix::from_matrix(basis.clone(), &m))
}

/// Radical of the second fundamental form in direction `w`, restricted to the
/// orthonormal tangent basis `tangent`. The rank is read off the eigenvalue
/// gap of the form on that basis.
pub fn radical(
    ms: &MetricSpace,
    jet: &Jet2,
    w: &AmbientVector,
    tangent: &SubspaceBasis,
    tol: f64,
) -> Result<(SubspaceBasis, NumericalRank)> {
    let form = form_on_basis(ms, jet, w, tangent, tol)?;
    let n = form.dim();
    if n == 0 {
        return Ok((SubspaceBasis::empty(*ms), gap_rank(&[])));
    }
    let eig = SymmetricEigen::new(form.matrix());
    let values: Vec<f64> = eig.eigenvalues.iter().map(|v| v.abs()).collect();
    let rank = gap_rank(&values);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let kernel: Vec<AmbientVector> = order
        .iter()
        .take(n - rank.rank)
        .map(|&k| {
            let mut x = AmbientVector::zeros(ms.ambient_dim());
            for (i, t) in tangent.vectors().iter().enumerate() {
                x.axpy(eig.eigenvectors[(i, k)], t);
            }
            x
        })
        .collect();
    Ok((orthonormalize(ms, &kernel, 1e-6)?.0, rank))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The pair is not generic; the statement does not apply.
    Excluded,
    /// The tangent spaces meet trivially; the statement holds vacuously.
    Vacuous,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionReport {
    pub status: CheckStatus,
    /// `(1, dim rad II, dim T_p ∩ T_q, dim rad II∨, 1)`.
    pub dims: [usize; 5],
    /// Largest inner product between vectors of distinct blocks.
    pub ortho_residual: f64,
    /// Largest distance from a standard axis to the sum of the blocks.
    pub span_residual: f64,
    /// How far `T_p` and `T_q` are from `rad ⊕ (T_p ∩ T_q)`.
    pub tangent_residual: f64,
    pub form_gap: f64,
    #[serde(skip)]
    pub blocks: Vec<SubspaceBasis>,
}

impl DecompositionReport {
    fn excluded(form_gap: f64) -> Self {
        Self {
            status: CheckStatus::Excluded,
            dims: [0; 5],
            ortho_residual: 0.0,
            span_residual: 0.0,
            tangent_residual: 0.0,
            form_gap,
            blocks: Vec::new(),
        }
    }

    pub fn dim_sum(&self) -> usize {
        self.dims.iter().sum()
    }
}

fn max_cross_inner(ms: &MetricSpace, a: &SubspaceBasis, b: &SubspaceBasis) -> f64 {
    let mut worst = 0.0f64;
    for x in a.vectors() {
        for y in b.vectors() {
            worst = worst.max(ms.dot(x, y).abs());
        }
    }
    worst
}

fn max_residual(ms: &MetricSpace, vectors: &[AmbientVector], span: &[AmbientVector]) -> f64 {
    vectors
        .iter()
        .map(|v| v.distance(&project_unchecked(ms, v, span)))
        .fold(0.0, f64::max)
}

/// Both radicals, each with its numerical rank.
struct Radicals {
    rad_p: (SubspaceBasis, NumericalRank),
    rad_q: (SubspaceBasis, NumericalRank),
}

impl Radicals {
    fn compute(ms: &MetricSpace, pair: &DualPair, jet_p: &Jet2, jet_q: &Jet2) -> Result<Self> {
        Ok(Self {
            rad_p: radical(ms, jet_p, &pair.q, &pair.tp, DEFAULT_TOL)?,
            rad_q: radical(ms, jet_q, &pair.p, &pair.tq, DEFAULT_TOL)?,
        })
    }

    fn stable(&self) -> bool {
        self.rad_p.1.is_stable(RANK_GAP) && self.rad_q.1.is_stable(RANK_GAP)
    }

    fn gap(&self) -> f64 {
        self.rad_p.1.gap.min(self.rad_q.1.gap)
    }
}

/// Checks `T_p = rad II ⊕ (T_p ∩ T_q)`, `T_q = rad II∨ ⊕ (T_p ∩ T_q)` and
/// `L = Rp ⊕ rad II ⊕ (T_p ∩ T_q) ⊕ rad II∨ ⊕ Rq`, all orthogonal.
pub fn decomposition_report(
    ms: &MetricSpace,
    pair: &DualPair,
    jet_p: &Jet2,
    jet_q: &Jet2,
    tol: f64,
) -> Result<DecompositionReport> {
    if !pair.generic {
        return Ok(DecompositionReport::excluded(pair.gap));
    }
    let radicals = Radicals::compute(ms, pair, jet_p, jet_q)?;
    if !radicals.stable() {
        return Ok(DecompositionReport::excluded(radicals.gap()));
    }
    let (rad_p, rad_q) = (&radicals.rad_p.0, &radicals.rad_q.0);
    let shared = intersect(&pair.tp, &pair.tq, INTERSECTION_TOL)?;

    let mut tangent_residual = max_cross_inner(ms, rad_p, &shared).max(max_cross_inner(ms, rad_q, &shared));
    let side_p = SubspaceBasis::concat(*ms, &[rad_p, &shared]);
    let side_q = SubspaceBasis::concat(*ms, &[rad_q, &shared]);
    tangent_residual = tangent_residual
        .max(max_residual(ms, pair.tp.vectors(), side_p.vectors()))
        .max(max_residual(ms, pair.tq.vectors(), side_q.vectors()));
    let dims_match = side_p.dim() == pair.tp.dim() && side_q.dim() == pair.tq.dim();

    let line = |v: &AmbientVector| {
        let scale = ms.dot(v, v).abs().sqrt();
        SubspaceBasis::orthonormal(*ms, vec![v.scaled(1.0 / scale)], 1e-6)
    };
    let blocks = vec![line(&pair.p)?, rad_p.clone(), shared, rad_q.clone(), line(&pair.q)?];
    let mut ortho_residual = 0.0f64;
    for i in 0..blocks.len() {
        for j in i + 1..blocks.len() {
            ortho_residual = ortho_residual.max(max_cross_inner(ms, &blocks[i], &blocks[j]));
        }
    }
    let all = SubspaceBasis::concat(*ms, &blocks.iter().collect::<Vec<_>>());
    let span_residual = max_residual(ms, ms.standard_basis().vectors(), all.vectors());
    let dims = [1, blocks[1].dim(), blocks[2].dim(), blocks[3].dim(), 1];

    let pass = dims.iter().sum::<usize>() == ms.ambient_dim()
        && dims_match
        && ortho_residual <= tol
        && span_residual <= tol
        && tangent_residual <= tol;
    Ok(DecompositionReport {
        status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
        dims,
        ortho_residual,
        span_residual,
        tangent_residual,
        form_gap: radicals.gap(),
        blocks,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InverseDualityReport {
    pub status: CheckStatus,
    /// II in direction `q` on an orthonormal basis of `T_p ∩ T_q`.
    pub a: Option<FormMatrix>,
    /// II∨ in direction `p` on the same basis.
    pub a_dual: Option<FormMatrix>,
    /// `max |A · A_dual - I|`.
    pub residual: f64,
    pub gap: f64,
}

impl InverseDualityReport {
    fn without_forms(status: CheckStatus, gap: f64) -> Self {
        Self {
            status,
            a: None,
            a_dual: None,
            residual: 0.0,
            gap,
        }
    }
}

/// Checks that the two second fundamental forms, written on a common
/// orthonormal basis of `T_p ∩ T_q`, are inverse matrices.
pub fn inverse_duality(
    ms: &MetricSpace,
    pair: &DualPair,
    jet_p: &Jet2,
    jet_q: &Jet2,
    tol: f64,
) -> Result<InverseDualityReport> {
    if !pair.generic {
        return Ok(InverseDualityReport::without_forms(CheckStatus::Excluded, pair.gap));
    }
    let shared = intersect(&pair.tp, &pair.tq, INTERSECTION_TOL)?;
    if shared.is_empty() {
        return Ok(InverseDualityReport::without_forms(CheckStatus::Vacuous, pair.gap));
    }
    let a = form_on_basis(ms, jet_p, &pair.q, &shared, DEFAULT_TOL)?;
    let a_dual = form_on_basis(ms, jet_q, &pair.p, &shared, DEFAULT_TOL)?;
    let product = a.matrix() * a_dual.matrix();
    let n = product.nrows();
    let residual = (product - DMatrix::<f64>::identity(n, n)).amax();
    let status = if residual <= tol { CheckStatus::Pass } else { CheckStatus::Fail };
    Ok(InverseDualityReport {
        status,
        a: Some(a),
        a_dual: Some(a_dual),
        residual,
        gap: pair.gap,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BidualTarget {
    /// `M ∪ -M`, the spherical case.
    UnionWithAntipode,
    /// `M` alone, the hyperbolic case.
    Original,
}

impl BidualTarget {
    pub fn label(self) -> &'static str {
        match self {
            BidualTarget::UnionWithAntipode => "M ∪ τ(M)",
            BidualTarget::Original => "M",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BidualReport {
    pub target: BidualTarget,
    /// Largest distance from a bidual sample to the target sample.
    pub d_forward: f64,
    /// Largest distance from a target sample to the bidual sample.
    pub d_backward: f64,
    /// Largest distance from the antipodal image `-M` to the bidual sample.
    pub d_antipodal: Option<f64>,
    pub dual_rank: usize,
    pub dual_points: usize,
    pub bidual_points: usize,
    pub target_points: usize,
    #[serde(skip)]
    pub bidual: Vec<AmbientVector>,
}

/// Largest nearest-neighbour distance from `from` into `to`.
pub fn directed_hausdorff(from: &[AmbientVector], to: &[AmbientVector]) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    if to.is_empty() {
        return f64::INFINITY;
    }
    from.par_iter()
        .map(|x| to.iter().map(|y| x.distance(y)).fold(f64::INFINITY, f64::min))
        .reduce(|| 0.0, f64::max)
}

/// Generic dual pairs whose normal spaces seed the bidual; a finite dual is
/// deduplicated.
fn generic_dual_points(cloud: &DualCloud) -> Vec<&DualPair> {
    let mut chosen: Vec<&DualPair> = Vec::new();
    for pair in cloud.pairs.iter().filter(|p| p.generic && p.rank_q == cloud.generic_rank) {
        if cloud.generic_rank == 0 && chosen.iter().any(|c| c.q.max_abs_diff(&pair.q) <= 1e-9) {
            continue;
        }
        chosen.push(pair);
    }
    chosen
}

/// Samples the dual of the dual on the same grids and compares it with the
/// expected target by Hausdorff distance in ambient coordinates.
pub fn bidual_distance(patch: &ParamPatch, grid: &TraceGrid, method: JetMethod) -> Result<BidualReport> {
    let ms = patch.metric();
    let cloud = trace_dual(patch, grid, method)?;
    let seeds = generic_dual_points(&cloud);
    if seeds.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let res = grid.param_res.first().copied().unwrap_or(1);
    let per_seed: Vec<Result<Vec<AmbientVector>>> = seeds
        .par_iter()
        .map(|pair| {
            let normal = normal_space(&ms, &pair.q, &pair.tq, DEFAULT_TOL)?;
            match patch.sheet() {
                Sheet::Sphere => Ok(fiber_grid(normal.dim(), res)
                    .into_iter()
                    .map(|c| {
                        let mut x = AmbientVector::zeros(ms.ambient_dim());
                        for (ci, n) in c.iter().zip(normal.vectors()) {
                            x.axpy(*ci, n);
                        }
                        x
                    })
                    .collect()),
                Sheet::Hyperbolic => {
                    let n = match normal.vectors() {
                        [n] if ms.dot(n, n) < 0.0 => n,
                        _ => {
                            return Err(Error::Unsupported(format!(
                                "bidual of a hyperbolic patch needs a one-dimensional timelike normal space, found dimension {}",
                                normal.dim()
                            )))
                        }
                    };
                    let last = n[n.len() - 1];
                    Ok(vec![if last > 0.0 { n.clone() } else { n.neg() }])
                }
            }
        })
        .collect();
    let mut bidual = Vec::new();
    for pts in per_seed {
        bidual.extend(pts?);
    }

    let original: Vec<AmbientVector> = patch
        .grid(&grid.param_res)
        .iter()
        .map(|u| patch.point(u))
        .collect::<Result<_>>()?;
    let (target_kind, target, d_antipodal) = match patch.sheet() {
        Sheet::Sphere => {
            let mirror: Vec<AmbientVector> = original.iter().map(|x| x.neg()).collect();
            let d_anti = directed_hausdorff(&mirror, &bidual);
            let mut union = original.clone();
            union.extend(mirror);
            (BidualTarget::UnionWithAntipode, union, Some(d_anti))
        }
        Sheet::Hyperbolic => (BidualTarget::Original, original, None),
    };
    Ok(BidualReport {
        target: target_kind,
        d_forward: directed_hausdorff(&bidual, &target),
        d_backward: directed_hausdorff(&target, &bidual),
        d_antipodal,
        dual_rank: cloud.generic_rank,
        dual_points: seeds.len(),
        bidual_points: bidual.len(),
        target_points: target.len(),
        bidual,
    })
}
