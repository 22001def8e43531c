//! Parametrized pieces of a subvariety of the unit sphere or of the upper
//! sheet of the hyperboloid, and their 2-jets.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::ParsedMap;
use crate::metric::{orthonormalize, AmbientVector, MetricSpace, Signature, SubspaceBasis};
use crate::taylor::{Layout, Real, Taylor};

/// Maximum residual of the sheet constraint accepted at a sample.
pub const SHEET_TOL: f64 = 1e-10;

/// Default central-difference step at unit scale.
pub const DEFAULT_FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sheet {
    /// `(f, f) = +1` in Euclidean space.
    Sphere,
    /// `(f, f) = -1` in Lorentzian space, last coordinate positive.
    Hyperbolic,
}

impl Sheet {
    pub fn constraint(self) -> f64 {
        match self {
            Sheet::Sphere => 1.0,
            Sheet::Hyperbolic => -1.0,
        }
    }

    pub fn signature(self) -> Signature {
        match self {
            Sheet::Sphere => Signature::Euclidean,
            Sheet::Hyperbolic => Signature::Lorentzian,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum JetMethod {
    #[default]
    Ad,
    Fd { h: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub period: Option<f64>,
}

impl ParamAxis {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            lo,
            hi,
            period: None,
        }
    }

    /// `[0, 2π]` with period `2π`.
    pub fn angle(name: impl Into<String>) -> Self {
        let tau = std::f64::consts::TAU;
        Self {
            name: name.into(),
            lo: 0.0,
            hi: tau,
            period: Some(tau),
        }
    }

    pub fn is_periodic(&self) -> bool {
        self.period.is_some()
    }

    /// `n` samples: endpoints included, except that a periodic axis drops the
    /// endpoint that coincides with the start.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        let n = n.max(1);
        if n == 1 {
            return vec![self.lo];
        }
        match self.period {
            Some(period) => (0..n).map(|j| self.lo + period * j as f64 / n as f64).collect(),
            None => (0..n)
                .map(|j| {
                    if j + 1 == n {
                        self.hi
                    } else {
                        self.lo + (self.hi - self.lo) * j as f64 / (n - 1) as f64
                    }
                })
                .collect(),
        }
    }

    fn contains(&self, x: f64) -> bool {
        if self.is_periodic() {
            return x.is_finite();
        }
        let slack = 1e-12 * (1.0 + self.lo.abs().max(self.hi.abs()));
        x >= self.lo - slack && x <= self.hi + slack
    }
}

/// 2-jet of a map at a parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    pub u: Vec<f64>,
    pub p: AmbientVector,
    /// `∂f/∂u_i`
    pub d1: Vec<AmbientVector>,
    /// `∂²f/∂u_i∂u_j`, symmetric
    pub d2: Vec<Vec<AmbientVector>>,
    pub method: JetMethod,
}

impl Jet2 {
    pub fn param_dim(&self) -> usize {
        self.d1.len()
    }

    /// Builds a jet from Taylor coordinates (order ≥ 2) in the first `m`
    /// variables of their layout.
    pub(crate) fn from_taylor(u: Vec<f64>, coords: &[Taylor], m: usize) -> Jet2 {
        let p = AmbientVector::from_vec(coords.iter().map(|c| c.value()).collect());
        let d1 = (0..m)
            .map(|i| AmbientVector::from_vec(coords.iter().map(|c| c.d1(i)).collect()))
            .collect();
        let d2 = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| AmbientVector::from_vec(coords.iter().map(|c| c.d2(i, j)).collect()))
                    .collect()
            })
            .collect();
        Jet2 {
            u,
            p,
            d1,
            d2,
            method: JetMethod::Ad,
        }
    }

    /// Max-abs difference between every entry of two jets of the same shape.
    pub fn max_discrepancy(&self, other: &Jet2) -> f64 {
        let mut worst = self.p.max_abs_diff(&other.p);
        for (a, b) in self.d1.iter().zip(&other.d1) {
            worst = worst.max(a.max_abs_diff(b));
        }
        for (ra, rb) in self.d2.iter().zip(&other.d2) {
            for (a, b) in ra.iter().zip(rb) {
                worst = worst.max(a.max_abs_diff(b));
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct ParamPatch {
    label: String,
    metric: MetricSpace,
    sheet: Sheet,
    axes: Vec<ParamAxis>,
    map: Arc<ParsedMap>,
}

impl ParamPatch {
    /// Builds a patch and checks the sheet constraint on a coarse grid.
    pub fn new(label: impl Into<String>, map: ParsedMap, axes: Vec<ParamAxis>, sheet: Sheet) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidParams("a patch needs at least one parameter".into()));
        }
        if map.params.len() != axes.len() {
            return Err(Error::InvalidParams(format!(
                "map uses {} parameter(s) but {} axis/axes were declared",
                map.params.len(),
                axes.len()
            )));
        }
        for axis in &axes {
            if !(axis.lo.is_finite() && axis.hi.is_finite() && axis.lo <= axis.hi) {
                return Err(Error::InvalidParams(format!("bad domain for '{}'", axis.name)));
            }
        }
        let metric = MetricSpace::new(map.exprs.len(), sheet.signature())?;
        let patch = Self {
            label: label.into(),
            metric,
            sheet,
            axes,
            map: Arc::new(map),
        };
        let res = vec![5; patch.param_dim()];
        for u in patch.grid(&res) {
            patch.point(&u)?;
        }
        Ok(patch)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn metric(&self) -> MetricSpace {
        self.metric
    }

    pub fn sheet(&self) -> Sheet {
        self.sheet
    }

    pub fn axes(&self) -> &[ParamAxis] {
        &self.axes
    }

    pub fn map(&self) -> &ParsedMap {
        &self.map
    }

    pub fn param_dim(&self) -> usize {
        self.axes.len()
    }

    /// Codimension `k = N - m` of the patch inside the sphere or sheet.
    pub fn codim(&self) -> usize {
        self.metric.sphere_dim().saturating_sub(self.param_dim())
    }

    /// Row-major Cartesian grid (first axis slowest).
    pub fn grid(&self, res: &[usize]) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .axes
            .iter()
            .enumerate()
            .map(|(i, a)| a.grid(res.get(i).copied().or(res.last().copied()).unwrap_or(2)))
            .collect();
        let mut out = vec![Vec::new()];
        for values in &axes {
            let mut next = Vec::with_capacity(out.len() * values.len());
            for prefix in &out {
                for &x in values {
                    let mut row = prefix.clone();
                    row.push(x);
                    next.push(row);
                }
            }
            out = next;
        }
        out
    }

    pub(crate) fn check_domain(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.param_dim() {
            return Err(Error::ParamArity {
                expected: self.param_dim(),
                found: u.len(),
            });
        }
        for (axis, (a, &x)) in self.axes.iter().zip(u).enumerate() {
            if !a.contains(x) {
                return Err(Error::OutsideDomain {
                    axis,
                    value: x,
                    lo: a.lo,
                    hi: a.hi,
                });
            }
        }
        Ok(())
    }

    fn check_sheet(&self, p: &AmbientVector) -> Result<()> {
        let residual = (self.metric.dot(p, p) - self.sheet.constraint()).abs();
        if residual.is_nan() || residual > SHEET_TOL {
            return Err(Error::NotOnSheet { residual });
        }
        if self.sheet == Sheet::Hyperbolic && p[p.len() - 1] <= 0.0 {
            return Err(Error::WrongSheet);
        }
        Ok(())
    }

    /// Plain evaluation without the domain or sheet checks.
    pub(crate) fn raw_point(&self, u: &[f64]) -> Result<AmbientVector> {
        let coords = self
            .map
            .exprs
            .iter()
            .map(|e| e.eval(u))
            .collect::<Result<Vec<f64>, _>>()?;
        Ok(AmbientVector::from_vec(coords))
    }

    /// `f(u)`, checked against the domain and the sheet.
    pub fn point(&self, u: &[f64]) -> Result<AmbientVector> {
        self.check_domain(u)?;
        let p = self.raw_point(u)?;
        self.check_sheet(&p)?;
        Ok(p)
    }

    /// Coordinates as Taylor series in the first `m` variables of `layout`.
    pub(crate) fn taylor_coords(&self, u: &[f64], layout: &Arc<Layout>) -> Result<Vec<Taylor>> {
        let vars: Vec<Taylor> = u
            .iter()
            .enumerate()
            .map(|(i, &x)| Taylor::variable(layout, i, x))
            .collect();
        Ok(self
            .map
            .exprs
            .iter()
            .map(|e| e.eval(&vars))
            .collect::<Result<Vec<Taylor>, _>>()?)
    }

    pub fn eval_jet2(&self, u: &[f64], method: JetMethod) -> Result<Jet2> {
        self.check_domain(u)?;
        let jet = match method {
            JetMethod::Ad => {
                let layout = Layout::get(self.param_dim(), 2);
                let coords = self.taylor_coords(u, &layout)?;
                Jet2::from_taylor(u.to_vec(), &coords, self.param_dim())
            }
            JetMethod::Fd { h } => {
                self.check_margin(u, h)?;
                let mut jet = central_differences(u, h, |x| self.raw_point(x))?;
                jet.method = method;
                jet
            }
        };
        if !jet.p.is_finite() || jet.d1.iter().chain(jet.d2.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.check_sheet(&jet.p)?;
        Ok(jet)
    }

    pub(crate) fn check_margin(&self, u: &[f64], reach: f64) -> Result<()> {
        for (axis, (a, &x)) in self.axes.iter().zip(u).enumerate() {
            if !a.is_periodic() && (x - reach < a.lo || x + reach > a.hi) {
                return Err(Error::MarginViolation { axis, h: reach });
            }
        }
        Ok(())
    }
}

/// Central-difference 2-jet of `f` at `u` with step `h`; every entry has
/// truncation error `O(h²)`.
#[allow(clippy::needless_range_loop)]
pub(crate) fn central_differences<F>(u: &[f64], h: f64, f: F) -> Result<Jet2>
where
    F: Fn(&[f64]) -> Result<AmbientVector>,
{
    let m = u.len();
    let at = |offsets: &[(usize, f64)]| {
        let mut x = u.to_vec();
        for &(i, s) in offsets {
            x[i] += s * h;
        }
        f(&x)
    };
    let p = f(u)?;
    let mut d1 = Vec::with_capacity(m);
    let mut d2 = vec![vec![AmbientVector::zeros(p.len()); m]; m];
    for i in 0..m {
        let plus = at(&[(i, 1.0)])?;
        let minus = at(&[(i, -1.0)])?;
        d1.push(plus.sub(&minus).scaled(0.5 / h));
        let mut second = plus.add(&minus);
        second.axpy(-2.0, &p);
        d2[i][i] = second.scaled(1.0 / (h * h));
    }
    for i in 0..m {
        for j in i + 1..m {
            let pp = at(&[(i, 1.0), (j, 1.0)])?;
            let pm = at(&[(i, 1.0), (j, -1.0)])?;
            let mp = at(&[(i, -1.0), (j, 1.0)])?;
            let mm = at(&[(i, -1.0), (j, -1.0)])?;
            let mixed = pp.sub(&pm).sub(&mp).add(&mm).scaled(0.25 / (h * h));
            d2[i][j] = mixed.clone();
            d2[j][i] = mixed;
        }
    }
    Ok(Jet2 {
        u: u.to_vec(),
        p,
        d1,
        d2,
        method: JetMethod::Fd { h },
    })
}

/// Orthonormal basis of `T_p(M)`; `smooth` is false on rank deficiency.
pub fn tangent_basis(ms: &MetricSpace, jet: &Jet2, tol: f64) -> Result<(SubspaceBasis, bool)> {
    let (basis, rank) = orthonormalize(ms, &jet.d1, tol)?;
    Ok((basis, rank == jet.param_dim()))
}

/// Largest entrywise gap between the AD jet and the central-difference jet.
pub fn fd_crosscheck(patch: &ParamPatch, u: &[f64], h: f64) -> Result<f64> {
    patch.check_domain(u)?;
    patch.check_margin(u, h)?;
    let ad = patch.eval_jet2(u, JetMethod::Ad)?;
    let fd = patch.eval_jet2(u, JetMethod::Fd { h })?;
    Ok(ad.max_discrepancy(&fd))
}
