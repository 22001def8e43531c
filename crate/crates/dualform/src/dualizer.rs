//! Normal frames, the dual map and sampled dual varieties.
//!
//! The dual variety is parametrized near a smooth point by
//! `g(u, σ) = Σ_j s_j(σ) n_j(u)`, where `n_1..n_k` is a deterministic
//! orthonormal frame of the normal space `{x : x ⟂ p, x ⟂ T_p(M)}` and
//! `s(σ)` is a stereographic chart of the fiber sphere `S^{k-1}`. The frame
//! comes from Gram–Schmidt on the coordinate axes with pivoting; once the
//! pivot order is fixed, the same arithmetic is replayed on Taylor series to
//! differentiate the frame.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{
    complement_within, gap_rank, pivoted_gram_schmidt, span_with_rank, AmbientVector, MetricSpace, NumericalRank,
    SubspaceBasis, DEFAULT_TOL, RANK_GAP,
};
use crate::patch::{central_differences, tangent_basis, Jet2, JetMethod, ParamPatch};
use crate::taylor::{Layout, Real, Taylor};

/// A frozen pivot may fall this far below the best candidate before the
/// frame is considered discontinuous.
const PIVOT_HYSTERESIS: f64 = 0.25;

/// Pivot order of the two Gram–Schmidt passes that build a normal frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FramePivots {
    /// Order in which `[p, d1_1, ..., d1_m]` were orthonormalized.
    pub span: Vec<usize>,
    /// Coordinate axes that seeded the frame vectors, in order.
    pub axes: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct NormalFrame {
    pub point: AmbientVector,
    pub tangent: SubspaceBasis,
    pub vectors: Vec<AmbientVector>,
    pub pivots: FramePivots,
}

impl NormalFrame {
    pub fn codim(&self) -> usize {
        self.vectors.len()
    }
}

/// Orthonormal frame of the normal space at a smooth point of a patch.
pub fn normal_frame(ms: &MetricSpace, jet: &Jet2, tol: f64) -> Result<NormalFrame> {
    let (tangent, smooth) = tangent_basis(ms, jet, tol)?;
    if !smooth {
        return Err(Error::NonSmooth {
            rank: tangent.dim(),
            expected: jet.param_dim(),
        });
    }
    let mut seeds = vec![jet.p.clone()];
    seeds.extend(jet.d1.iter().cloned());
    let span = pivoted_gram_schmidt(ms, &[], &seeds, tol)?;
    if span.vectors.len() != seeds.len() {
        return Err(Error::NonSmooth {
            rank: span.vectors.len().saturating_sub(1),
            expected: jet.param_dim(),
        });
    }
    let axes: Vec<AmbientVector> = ms.standard_basis().into_vectors();
    let frame = pivoted_gram_schmidt(ms, &span.vectors, &axes, tol)?;
    Ok(NormalFrame {
        point: jet.p.clone(),
        tangent,
        vectors: frame.vectors,
        pivots: FramePivots {
            span: span.pivots,
            axes: frame.pivots,
        },
    })
}

/// Orthonormal basis of `{x : x ⟂ point, x ⟂ tangent}`.
pub fn normal_space(ms: &MetricSpace, point: &AmbientVector, tangent: &SubspaceBasis, tol: f64) -> Result<SubspaceBasis> {
    let mut span = vec![point.clone()];
    span.extend(tangent.vectors().iter().cloned());
    let span = SubspaceBasis::spanning(*ms, span)?;
    complement_within(ms, &ms.standard_basis(), &span, tol)
}

/// Replays Gram–Schmidt with a fixed pivot order on any scalar type.
fn replay_frame<S: Real>(ms: &MetricSpace, p: &[S], d1: &[Vec<S>], pivots: &FramePivots) -> Vec<Vec<S>> {
    let zero = p[0].lift(0.0);
    let inner = |x: &[S], y: &[S]| {
        let mut acc = zero.clone();
        for (i, (a, b)) in x.iter().zip(y).enumerate() {
            acc = acc + (a.clone() * b.clone()).scale(ms.weight(i));
        }
        acc
    };
    let mut basis: Vec<(Vec<S>, f64)> = Vec::new();
    let push = |mut r: Vec<S>, basis: &mut Vec<(Vec<S>, f64)>| {
        for (b, sign) in basis.iter() {
            let c = inner(&r, b).scale(*sign);
            for (x, y) in r.iter_mut().zip(b) {
                *x = x.clone() - c.clone() * y.clone();
            }
        }
        let sp = inner(&r, &r);
        let sign = sp.value().signum();
        let scale = sp.scale(sign).sqrt().recip();
        let v: Vec<S> = r.into_iter().map(|x| x * scale.clone()).collect();
        basis.push((v.clone(), sign));
        v
    };
    for &i in &pivots.span {
        let seed = if i == 0 { p.to_vec() } else { d1[i - 1].clone() };
        push(seed, &mut basis);
    }
    let n = p.len();
    pivots
        .axes
        .iter()
        .map(|&a| {
            let axis: Vec<S> = (0..n).map(|j| zero.lift(if j == a { 1.0 } else { 0.0 })).collect();
            push(axis, &mut basis)
        })
        .collect()
}

/// Checks that a frozen pivot order is still the pivoted choice at `jet`,
/// up to the hysteresis factor.
fn check_frozen(ms: &MetricSpace, p: &AmbientVector, d1: &[AmbientVector], pivots: &FramePivots) -> Result<()> {
    let n = ms.ambient_dim();
    // residual self-products of every axis after projecting out the span and
    // the frame vectors chosen so far
    let mut prefix: Vec<AmbientVector> = Vec::new();
    {
        let mut seeds = vec![p.clone()];
        seeds.extend(d1.iter().cloned());
        let ordered: Vec<AmbientVector> = pivots.span.iter().map(|&i| seeds[i].clone()).collect();
        for v in ordered {
            let mut r = v;
            for b in &prefix {
                let c = ms.dot(&r, b) * ms.dot(b, b).signum();
                r.axpy(-c, b);
            }
            let sp = ms.dot(&r, &r);
            prefix.push(r.scaled(1.0 / sp.abs().sqrt()));
        }
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    for &axis in &pivots.axes {
        let residual = |a: usize| {
            let mut r = AmbientVector::axis(n, a);
            for b in &prefix {
                let c = ms.dot(&r, b) * ms.dot(b, b).signum();
                r.axpy(-c, b);
            }
            r
        };
        let best = remaining
            .iter()
            .map(|&a| {
                let r = residual(a);
                ms.dot(&r, &r).abs()
            })
            .fold(0.0, f64::max);
        let chosen = residual(axis);
        let chosen_sp = ms.dot(&chosen, &chosen);
        if chosen_sp.abs() < PIVOT_HYSTERESIS * best {
            return Err(Error::FrameDiscontinuity { axis });
        }
        remaining.retain(|&a| a != axis);
        prefix.push(chosen.scaled(1.0 / chosen_sp.abs().sqrt()));
    }
    Ok(())
}

/// Coordinates on the fiber sphere `S^{k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FiberChart {
    /// `k = 1`: the fiber is `{+1, -1}`.
    Sign { sign: f64 },
    /// Stereographic chart centred on `sign · e_axis` with `|coords| ≤ 1`.
    Stereo { axis: usize, sign: f64, coords: Vec<f64> },
}

impl FiberChart {
    pub fn from_unit(s: &[f64]) -> Result<FiberChart> {
        let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
        if s.is_empty() || (norm - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitFiber { norm });
        }
        if s.len() == 1 {
            return Ok(FiberChart::Sign { sign: s[0].signum() });
        }
        let biggest = s.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let axis = s.iter().position(|x| x.abs() == biggest).expect("non-empty");
        let pole = s[axis];
        let coords = s
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != axis)
            .map(|(_, x)| x / (1.0 + pole.abs()))
            .collect();
        Ok(FiberChart::Stereo {
            axis,
            sign: pole.signum(),
            coords,
        })
    }

    /// Number of chart coordinates (`k - 1`).
    pub fn dim(&self) -> usize {
        match self {
            FiberChart::Sign { .. } => 0,
            FiberChart::Stereo { coords, .. } => coords.len(),
        }
    }

    pub fn fiber_dim(&self) -> usize {
        self.dim() + 1
    }

    pub fn coords(&self) -> &[f64] {
        match self {
            FiberChart::Sign { .. } => &[],
            FiberChart::Stereo { coords, .. } => coords,
        }
    }

    /// The fiber point `s(σ)` as a function of chart coordinates.
    fn unit_generic<S: Real>(&self, sigma: &[S], one: &S) -> Vec<S> {
        match self {
            FiberChart::Sign { sign } => vec![one.scale(*sign)],
            FiberChart::Stereo { axis, sign, .. } => {
                let mut rho = one.lift(0.0);
                for x in sigma {
                    rho = rho + x.clone() * x.clone();
                }
                let denom = (one.clone() + rho.clone()).recip();
                let mut out = Vec::with_capacity(sigma.len() + 1);
                let mut it = sigma.iter();
                for i in 0..=sigma.len() {
                    if i == *axis {
                        out.push(((one.clone() - rho.clone()) * denom.clone()).scale(*sign));
                    } else {
                        let x = it.next().expect("chart arity");
                        out.push((x.clone() * denom.clone()).scale(2.0));
                    }
                }
                out
            }
        }
    }

    pub fn unit(&self) -> Vec<f64> {
        self.unit_generic(self.coords(), &1.0)
    }
}

/// `q = Σ_j s_j n_j` for a unit `s`.
pub fn dual_point(frame: &NormalFrame, s: &[f64]) -> Result<AmbientVector> {
    if s.len() != frame.codim() {
        return Err(Error::DimensionMismatch {
            expected: frame.codim(),
            found: s.len(),
        });
    }
    let norm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::NonUnitFiber { norm });
    }
    let mut q = AmbientVector::zeros(frame.point.len());
    for (sj, n) in s.iter().zip(&frame.vectors) {
        q.axpy(*sj, n);
    }
    Ok(q)
}

pub fn antipode(q: &AmbientVector) -> AmbientVector {
    q.neg()
}

/// The dual map near one base point: everything that does not depend on
/// the fiber chart is computed once.
pub struct DualMap<'a> {
    patch: &'a ParamPatch,
    base: Jet2,
    frame: NormalFrame,
    method: JetMethod,
    frame_jet: Option<(usize, Vec<Vec<Taylor>>)>,
}

impl<'a> DualMap<'a> {
    pub fn new(patch: &'a ParamPatch, u: &[f64], method: JetMethod) -> Result<Self> {
        Self::build(patch, u, method, None)
    }

    /// Like [`DualMap::new`] but with a frame pivot order fixed elsewhere in
    /// the chart; fails if that order is no longer the pivoted choice.
    pub fn with_pivots(patch: &'a ParamPatch, u: &[f64], method: JetMethod, pivots: &FramePivots) -> Result<Self> {
        Self::build(patch, u, method, Some(pivots))
    }

    fn build(patch: &'a ParamPatch, u: &[f64], method: JetMethod, frozen: Option<&FramePivots>) -> Result<Self> {
        let ms = patch.metric();
        let base = patch.eval_jet2(u, method)?;
        let mut frame = normal_frame(&ms, &base, DEFAULT_TOL)?;
        if let Some(pivots) = frozen {
            check_frozen(&ms, &base.p, &base.d1, pivots)?;
            let pv: Vec<f64> = base.p.to_vec();
            let dv: Vec<Vec<f64>> = base.d1.iter().map(|v| v.to_vec()).collect();
            frame.vectors = replay_frame(&ms, &pv, &dv, pivots)
                .into_iter()
                .map(AmbientVector::from_vec)
                .collect();
            frame.pivots = pivots.clone();
        }
        Ok(Self {
            patch,
            base,
            frame,
            method,
            frame_jet: None,
        })
    }

    pub fn base(&self) -> &Jet2 {
        &self.base
    }

    pub fn frame(&self) -> &NormalFrame {
        &self.frame
    }

    pub fn into_parts(self) -> (Jet2, NormalFrame) {
        (self.base, self.frame)
    }

    /// Taylor expansion (order 2, `nvars` variables) of the frame vectors.
    fn frame_taylor(&mut self, nvars: usize) -> Result<&[Vec<Taylor>]> {
        let stale = !matches!(&self.frame_jet, Some((n, _)) if *n == nvars);
        if stale {
            let m = self.patch.param_dim();
            let l3 = Layout::get(nvars, 3);
            let l2 = Layout::get(nvars, 2);
            let coords = self.patch.taylor_coords(&self.base.u, &l3)?;
            let p: Vec<Taylor> = coords.iter().map(|c| c.truncate(&l2)).collect();
            let d1: Vec<Vec<Taylor>> = (0..m)
                .map(|i| coords.iter().map(|c| c.differentiate(i, &l2)).collect())
                .collect();
            let frame = replay_frame(&self.patch.metric(), &p, &d1, &self.frame.pivots);
            self.frame_jet = Some((nvars, frame));
        }
        Ok(&self.frame_jet.as_ref().expect("just filled").1)
    }

    fn check_chart(&self, chart: &FiberChart) -> Result<()> {
        if chart.fiber_dim() != self.frame.codim() {
            return Err(Error::DimensionMismatch {
                expected: self.frame.codim(),
                found: chart.fiber_dim(),
            });
        }
        Ok(())
    }

    /// 2-jet of the dual map in the variables `(u, σ)`.
    pub fn jet(&mut self, chart: &FiberChart) -> Result<Jet2> {
        self.check_chart(chart)?;
        match self.method {
            JetMethod::Ad => self.jet_ad(chart),
            JetMethod::Fd { h } => self.jet_fd(chart, h),
        }
    }

    fn jet_ad(&mut self, chart: &FiberChart) -> Result<Jet2> {
        let m = self.patch.param_dim();
        let nvars = m + chart.dim();
        let l2 = Layout::get(nvars, 2);
        let sigma: Vec<Taylor> = chart
            .coords()
            .iter()
            .enumerate()
            .map(|(i, &x)| Taylor::variable(&l2, m + i, x))
            .collect();
        let one = Taylor::constant(&l2, 1.0);
        let s = chart.unit_generic(&sigma, &one);
        let frame = self.frame_taylor(nvars)?;
        let n = frame[0].len();
        let g: Vec<Taylor> = (0..n)
            .map(|c| {
                let mut acc = Taylor::constant(&l2, 0.0);
                for (sj, nj) in s.iter().zip(frame) {
                    acc = acc + sj.clone() * nj[c].clone();
                }
                acc
            })
            .collect();
        let mut vars = self.base.u.clone();
        vars.extend_from_slice(chart.coords());
        Ok(Jet2::from_taylor(vars, &g, nvars))
    }

    fn jet_fd(&self, chart: &FiberChart, h: f64) -> Result<Jet2> {
        let m = self.patch.param_dim();
        self.patch.check_margin(&self.base.u, 2.0 * h)?;
        let ms = self.patch.metric();
        let pivots = &self.frame.pivots;
        let eval = |x: &[f64]| -> Result<AmbientVector> {
            let (u, sigma) = x.split_at(m);
            let p = self.patch.raw_point(u)?.to_vec();
            let mut d1 = Vec::with_capacity(m);
            for i in 0..m {
                let mut plus = u.to_vec();
                let mut minus = u.to_vec();
                plus[i] += h;
                minus[i] -= h;
                let d = self.patch.raw_point(&plus)?.sub(&self.patch.raw_point(&minus)?);
                d1.push(d.scaled(0.5 / h).to_vec());
            }
            let frame = replay_frame(&ms, &p, &d1, pivots);
            let s = chart.unit_generic(sigma, &1.0);
            let mut q = AmbientVector::zeros(p.len());
            for (sj, nj) in s.iter().zip(&frame) {
                q.axpy(*sj, &AmbientVector::from_vec(nj.clone()));
            }
            Ok(q)
        };
        let mut vars = self.base.u.clone();
        vars.extend_from_slice(chart.coords());
        central_differences(&vars, h, eval)
    }
}

/// 2-jet of the dual map `g(u, σ)` at the given base parameter and chart.
pub fn dual_jet2(patch: &ParamPatch, u: &[f64], chart: &FiberChart, method: JetMethod) -> Result<Jet2> {
    DualMap::new(patch, u, method)?.jet(chart)
}

/// A corresponding pair `(p, q)` with `q` normal to `M` at `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualPair {
    pub u: Vec<f64>,
    /// Unit fiber coordinates.
    pub s: Vec<f64>,
    pub chart: FiberChart,
    pub p: AmbientVector,
    pub q: AmbientVector,
    #[serde(skip)]
    pub tp: SubspaceBasis,
    #[serde(skip)]
    pub tq: SubspaceBasis,
    /// Numerical rank of the differential of the dual map.
    pub rank_q: usize,
    pub gap: f64,
    pub generic: bool,
}

impl DualPair {
    /// Recomputes the 2-jets on both sides of the pair.
    pub fn jets(&self, patch: &ParamPatch, method: JetMethod) -> Result<(Jet2, Jet2)> {
        let mut map = DualMap::new(patch, &self.u, method)?;
        let dual = map.jet(&self.chart)?;
        Ok((map.base, dual))
    }

    /// The same pair with `q` replaced by `-q`.
    pub fn flipped(&self, patch: &ParamPatch, method: JetMethod) -> Result<DualPair> {
        let s: Vec<f64> = self.s.iter().map(|x| -x).collect();
        let mut map = DualMap::new(patch, &self.u, method)?;
        build_pair(&mut map, &s)
    }
}

fn build_pair(map: &mut DualMap<'_>, s: &[f64]) -> Result<DualPair> {
    let ms = map.patch.metric();
    let chart = FiberChart::from_unit(s)?;
    let dual = map.jet(&chart)?;
    let (tq, rank) = span_with_rank(&ms, &dual.d1)?;
    let tp = map.frame.tangent.clone();
    Ok(DualPair {
        u: map.base.u.clone(),
        s: s.to_vec(),
        chart,
        p: map.base.p.clone(),
        q: dual.p.clone(),
        tp,
        tq,
        rank_q: rank.rank,
        gap: rank.gap,
        generic: rank.is_stable(RANK_GAP),
    })
}

/// Builds the pair at parameter `u` and unit fiber point `s`.
pub fn dual_pair(patch: &ParamPatch, u: &[f64], s: &[f64], method: JetMethod) -> Result<DualPair> {
    let mut map = DualMap::new(patch, u, method)?;
    build_pair(&mut map, s)
}

/// Residuals of the two defining conditions of a corresponding pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairResiduals {
    /// `q ⟂ p` and `q ⟂ T_p(M)`.
    pub condition1: f64,
    /// `p ⟂ T_q(M∨)`.
    pub condition2: f64,
    /// `|(q, q) - 1|`.
    pub unit: f64,
}

pub fn pair_residuals(ms: &MetricSpace, pair: &DualPair) -> PairResiduals {
    let mut c1 = ms.dot(&pair.q, &pair.p).abs();
    for t in pair.tp.vectors() {
        c1 = c1.max(ms.dot(&pair.q, t).abs());
    }
    let c2 = pair
        .tq
        .vectors()
        .iter()
        .map(|t| ms.dot(&pair.p, t).abs())
        .fold(0.0, f64::max);
    PairResiduals {
        condition1: c1,
        condition2: c2,
        unit: (ms.dot(&pair.q, &pair.q) - 1.0).abs(),
    }
}

/// Unit vectors sampling `S^{k-1}`: `{±1}` for `k = 1`, `res` equally spaced
/// angles for `k = 2`, hyperspherical coordinates above.
pub fn fiber_grid(k: usize, res: usize) -> Vec<Vec<f64>> {
    match k {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => {
            let res = res.max(1);
            (0..res)
                .map(|j| {
                    let (s, c) = (std::f64::consts::TAU * j as f64 / res as f64).sin_cos();
                    vec![c, s]
                })
                .collect()
        }
        _ => {
            let inner = fiber_grid(k - 1, res);
            let steps = (res / 2).max(1);
            let mut out = Vec::new();
            for j in 0..=steps {
                let phi = std::f64::consts::PI * j as f64 / steps as f64;
                let (s, c) = phi.sin_cos();
                if j == 0 || j == steps {
                    let mut v = vec![0.0; k];
                    v[0] = if j == 0 { 1.0 } else { -1.0 };
                    out.push(v);
                    continue;
                }
                for w in &inner {
                    let mut v = Vec::with_capacity(k);
                    v.push(c);
                    v.extend(w.iter().map(|x| s * x));
                    out.push(v);
                }
            }
            out
        }
    }
}

/// Resolution of a dual trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceGrid {
    /// Samples per parameter axis (the last entry repeats for missing axes).
    pub param_res: Vec<usize>,
    /// Resolution of the fiber sphere (ignored for codimension 1).
    pub fiber_res: usize,
}

impl TraceGrid {
    pub fn uniform(res: usize) -> Self {
        Self {
            param_res: vec![res],
            fiber_res: res,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DualCloud {
    pub pairs: Vec<DualPair>,
    pub grid: TraceGrid,
    /// Base points dropped for tangent rank deficiency.
    pub skipped: usize,
    pub generic_rank: usize,
    pub generic_fraction: f64,
    pub non_generic: usize,
}

/// Samples the dual variety on the Cartesian product of the parameter grid
/// and the fiber grid. Output order follows the grid regardless of threads.
pub fn trace_dual(patch: &ParamPatch, grid: &TraceGrid, method: JetMethod) -> Result<DualCloud> {
    let fibers = fiber_grid(patch.codim(), grid.fiber_res);
    let points = patch.grid(&grid.param_res);
    let per_point: Vec<Result<Option<Vec<DualPair>>>> = points
        .par_iter()
        .map(|u| {
            let mut map = match DualMap::new(patch, u, method) {
                Ok(m) => m,
                Err(Error::NonSmooth { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            fibers
                .iter()
                .map(|s| build_pair(&mut map, s))
                .collect::<Result<Vec<_>>>()
                .map(Some)
        })
        .collect();
    let mut pairs = Vec::with_capacity(points.len() * fibers.len());
    let mut skipped = 0;
    for r in per_point {
        match r? {
            Some(ps) => pairs.extend(ps),
            None => skipped += 1,
        }
    }
    Ok(cloud_from_pairs(pairs, grid.clone(), skipped))
}

fn cloud_from_pairs(pairs: Vec<DualPair>, grid: TraceGrid, skipped: usize) -> DualCloud {
    let (generic_rank, generic_fraction) = modal_rank(&pairs).unwrap_or((0, 0.0));
    let non_generic = pairs.iter().filter(|p| !p.generic).count();
    DualCloud {
        pairs,
        grid,
        skipped,
        generic_rank,
        generic_fraction,
        non_generic,
    }
}

fn modal_rank(pairs: &[DualPair]) -> Option<(usize, f64)> {
    if pairs.is_empty() {
        return None;
    }
    let max_rank = pairs.iter().map(|p| p.rank_q).max().unwrap_or(0);
    let mut counts = vec![0usize; max_rank + 1];
    for p in pairs {
        counts[p.rank_q] += 1;
    }
    let best = counts.iter().copied().max().unwrap_or(0);
    let rank = counts.iter().position(|&c| c == best).unwrap_or(0);
    Some((rank, best as f64 / pairs.len() as f64))
}

/// Modal rank of the dual map over the cloud and the fraction attaining it.
pub fn generic_dual_dimension(cloud: &DualCloud) -> Result<(usize, f64)> {
    modal_rank(&cloud.pairs).ok_or(Error::EmptyCloud)
}

/// Seeded random pairs: parameters uniform in the domain, fiber points
/// uniform on the fiber sphere. Non-smooth base points are skipped.
pub fn sample_pairs(patch: &ParamPatch, count: usize, seed: u64, method: JetMethod) -> Result<Vec<DualPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = patch.codim();
    let margin = match method {
        JetMethod::Ad => 0.0,
        JetMethod::Fd { h } => 2.0 * h,
    };
    let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..count)
        .map(|_| {
            let u: Vec<f64> = patch
                .axes()
                .iter()
                .map(|a| {
                    let (lo, hi) = if a.is_periodic() {
                        (a.lo, a.hi)
                    } else {
                        (a.lo + margin, a.hi - margin)
                    };
                    lo + (hi - lo) * rng.random::<f64>()
                })
                .collect();
            let s = random_unit(&mut rng, k);
            (u, s)
        })
        .collect();
    let pairs: Vec<Result<Option<DualPair>>> = draws
        .par_iter()
        .map(|(u, s)| match DualMap::new(patch, u, method) {
            Ok(mut map) => build_pair(&mut map, s).map(Some),
            Err(Error::NonSmooth { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for p in pairs {
        if let Some(p) = p? {
            out.push(p);
        }
    }
    Ok(out)
}

fn random_unit(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
    }
    loop {
        let v: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            let mut v: Vec<f64> = v.into_iter().map(|x| x / norm).collect();
            // renormalize once more so the chart check at 1e-12 always passes
            let again = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= again);
            return v;
        }
    }
}

/// Numerical rank of a spanning list under the metric.
pub fn dual_rank(ms: &MetricSpace, d1: &[AmbientVector]) -> NumericalRank {
    gap_rank(&crate::metric::gram_singular_values(ms, d1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::variety::builtin;
    use approx::assert_abs_diff_eq;

    fn assert_vec(a: &[f64], b: &[f64], eps: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_abs_diff_eq!(*x, *y, epsilon = eps);
        }
    }

    fn frame_at(name: &str, params: &[f64], u: &[f64]) -> NormalFrame {
        let p = builtin(name, params).unwrap();
        let jet = p.eval_jet2(u, JetMethod::Ad).unwrap();
        normal_frame(&p.metric(), &jet, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn equator_frame_is_the_pole() {
        for t in [0.0, 1.0, 2.5] {
            let f = frame_at("great_circle", &[], &[t]);
            assert_eq!(f.codim(), 1);
            assert_vec(&f.vectors[0], &[0.0, 0.0, 1.0], 1e-15);
        }
    }

    #[test]
    fn small_circle_frame_closed_form() {
        let f = frame_at("small_circle", &[0.6], &[0.0]);
        assert_vec(&f.vectors[0], &[0.8, 0.0, -0.6], 1e-15);
        assert_eq!(f.pivots.axes, vec![0]);
    }

    #[test]
    fn hyperbolic_frame_closed_form() {
        let p = builtin("hyperbolic_circle", &[0.6]).unwrap();
        let f = frame_at("hyperbolic_circle", &[0.6], &[0.0]);
        assert_vec(&f.vectors[0], &[1.36f64.sqrt(), 0.0, 0.6], 1e-15);
        assert_abs_diff_eq!(p.metric().dot(&f.vectors[0], &f.vectors[0]), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn dual_point_examples() {
        let f = frame_at("great_circle", &[], &[0.3]);
        assert_vec(&dual_point(&f, &[1.0]).unwrap(), &[0.0, 0.0, 1.0], 1e-15);
        assert_vec(&dual_point(&f, &[-1.0]).unwrap(), &[0.0, 0.0, -1.0], 1e-15);

        let f = frame_at("clifford_torus", &[], &[0.0, 0.0]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_vec(&dual_point(&f, &[1.0]).unwrap(), &[s, 0.0, -s, 0.0], 1e-15);

        assert!(matches!(dual_point(&f, &[0.5]), Err(Error::NonUnitFiber { .. })));
    }

    #[test]
    fn dual_jet_small_circle_closed_form() {
        let p = builtin("small_circle", &[0.6]).unwrap();
        for t in [0.0, 0.7, 2.0, 4.5] {
            let jet = dual_jet2(&p, &[t], &FiberChart::Sign { sign: 1.0 }, JetMethod::Ad).unwrap();
            // the frame sign may flip between pivots; compare against ±g
            let g = [0.8 * t.cos(), 0.8 * t.sin(), -0.6];
            let sign = if jet.p[2] < 0.0 { 1.0 } else { -1.0 };
            let g: Vec<f64> = g.iter().map(|x| x * sign).collect();
            assert_vec(&jet.p, &g, 1e-14);
            assert_vec(&jet.d1[0], &[-0.8 * t.sin() * sign, 0.8 * t.cos() * sign, 0.0], 1e-14);
            assert_vec(&jet.d2[0][0], &[-0.8 * t.cos() * sign, -0.8 * t.sin() * sign, 0.0], 1e-13);
        }
    }

    #[test]
    fn dual_jet_clifford_closed_form() {
        let p = builtin("clifford_torus", &[]).unwrap();
        let (u, v) = (0.4, 1.1);
        let jet = dual_jet2(&p, &[u, v], &FiberChart::Sign { sign: 1.0 }, JetMethod::Ad).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let g = [u.cos() * s, u.sin() * s, -v.cos() * s, -v.sin() * s];
        let sign = (jet.p[0] * g[0] + jet.p[1] * g[1] + jet.p[2] * g[2] + jet.p[3] * g[3]).signum();
        let g: Vec<f64> = g.iter().map(|x| x * sign).collect();
        assert_vec(&jet.p, &g, 1e-14);
        assert_vec(&jet.d2[0][1], &[0.0; 4], 1e-13);
        assert_vec(&jet.d2[1][1], &[0.0, 0.0, v.cos() * s * sign, v.sin() * s * sign], 1e-13);
    }

    #[test]
    fn equator_dual_map_is_constant() {
        let p = builtin("great_circle", &[]).unwrap();
        let jet = dual_jet2(&p, &[1.3], &FiberChart::Sign { sign: 1.0 }, JetMethod::Ad).unwrap();
        assert_vec(&jet.p, &[0.0, 0.0, 1.0], 1e-15);
        assert!(jet.d1[0].norm() < 1e-15);
        assert_eq!(dual_rank(&p.metric(), &jet.d1).rank, 0);
    }

    #[test]
    fn dual_jet_matches_finite_differences() {
        let p = builtin("random_trig_curve", &[3.0, 3.0, 4.0]).unwrap();
        let chart = FiberChart::from_unit(&[0.6, -0.8]).unwrap();
        let ad = dual_jet2(&p, &[1.2], &chart, JetMethod::Ad).unwrap();
        let fd = dual_jet2(&p, &[1.2], &chart, JetMethod::Fd { h: 1e-3 }).unwrap();
        assert!(ad.max_discrepancy(&fd) < 1e-4, "{}", ad.max_discrepancy(&fd));
        assert_vec(&ad.p, &fd.p, 1e-5);
    }

    #[test]
    fn stereographic_chart_round_trip() {
        for s in [vec![0.6, -0.8], vec![-1.0, 0.0], vec![0.0, 0.6, 0.8], vec![0.5, 0.5, 0.5, -0.5]] {
            let chart = FiberChart::from_unit(&s).unwrap();
            let coords = chart.coords();
            assert!(coords.iter().map(|x| x * x).sum::<f64>() <= 1.0);
            assert_vec(&chart.unit(), &s, 1e-15);
        }
        assert!(FiberChart::from_unit(&[0.5, 0.5]).is_err());
    }

    #[test]
    fn frozen_pivots_detect_a_branch_change() {
        let p = builtin("small_circle", &[0.6]).unwrap();
        let at_zero = DualMap::new(&p, &[0.0], JetMethod::Ad).unwrap();
        let pivots = at_zero.frame().pivots.clone();
        assert!(DualMap::with_pivots(&p, &[0.1], JetMethod::Ad, &pivots).is_ok());
        let far = DualMap::with_pivots(&p, &[std::f64::consts::FRAC_PI_2], JetMethod::Ad, &pivots);
        assert!(matches!(far, Err(Error::FrameDiscontinuity { axis: 0 })));
    }

    #[test]
    fn fiber_grids_are_unit() {
        assert_eq!(fiber_grid(1, 10).len(), 2);
        assert_eq!(fiber_grid(2, 12).len(), 12);
        for v in fiber_grid(3, 8) {
            let n: f64 = v.iter().map(|x| x * x).sum();
            assert_abs_diff_eq!(n, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn antipode_properties() {
        let q = AmbientVector::new(vec![0.0, 0.0, 1.0]).unwrap();
        assert_eq!(antipode(&q).coords(), &[0.0, 0.0, -1.0]);
        let x = AmbientVector::new(vec![0.3, -1.2, 2.0]).unwrap();
        assert_eq!(antipode(&antipode(&x)), x);
        let ms = MetricSpace::lorentzian(3).unwrap();
        assert_eq!(ms.dot(&x, &x), ms.dot(&antipode(&x), &antipode(&x)));
    }

    #[test]
    fn empty_cloud_has_no_dimension() {
        let cloud = cloud_from_pairs(Vec::new(), TraceGrid::uniform(2), 0);
        assert!(matches!(generic_dual_dimension(&cloud), Err(Error::EmptyCloud)));
    }
}
