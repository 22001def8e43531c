//! Commands behind the `dualform` binary and their machine-readable outputs:
//! JSON run reports, CSV dual clouds, ASCII PLY vertices and whitespace
//! plot columns.

use std::collections::BTreeMap;
use std::io::{self, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::curvature::{bidual_distance, decomposition_report, inverse_duality, BidualReport, CheckStatus};
use crate::dualizer::{sample_pairs, trace_dual, DualCloud, DualPair, TraceGrid};
use crate::error::{Error, Result};
use crate::metric::AmbientVector;
use crate::patch::{JetMethod, ParamPatch, Sheet};
use crate::variety::{builtin_spec, load_dsl};

pub const SCHEMA: &str = "dualform.run-report/1";
pub const DEFAULT_GRID: usize = 256;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Where the patch comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PatchSource {
    /// `NAME[:p1,p2,...]`
    Builtin(String),
    Dsl(PathBuf),
}

impl PatchSource {
    pub fn load(&self) -> Result<ParamPatch> {
        match self {
            PatchSource::Builtin(spec) => builtin_spec(spec),
            PatchSource::Dsl(path) => load_dsl(&std::fs::read_to_string(path)?),
        }
    }

    fn describe(&self) -> String {
        match self {
            PatchSource::Builtin(spec) => format!("builtin {spec}"),
            PatchSource::Dsl(path) => format!("dsl {}", path.display()),
        }
    }
}

/// Settings shared by every command.
#[derive(Debug, Clone, PartialEq)]
pub struct Options {
    pub source: PatchSource,
    /// Samples per parameter axis; `None` means [`DEFAULT_GRID`].
    pub grid: Option<Vec<usize>>,
    pub samples: usize,
    pub tol: f64,
    pub method: JetMethod,
    pub seed: u64,
}

impl Options {
    pub fn new(source: PatchSource) -> Self {
        Self {
            source,
            grid: None,
            samples: DEFAULT_SAMPLES,
            tol: DEFAULT_TOL,
            method: JetMethod::Ad,
            seed: 0,
        }
    }

    pub fn trace_grid(&self) -> TraceGrid {
        let param_res = self.grid.clone().unwrap_or_else(|| vec![DEFAULT_GRID]);
        let fiber_res = param_res[0];
        TraceGrid { param_res, fiber_res }
    }
}

/// A number together with the tolerance it was judged against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Measured {
    pub value: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Measured {
    pub fn at_most(value: f64, tol: f64) -> Self {
        Self {
            value,
            tol,
            pass: value <= tol,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PatchInfo {
    pub source: String,
    pub label: String,
    pub map: String,
    pub sheet: Sheet,
    pub ambient_dim: usize,
    pub param_dim: usize,
    pub codim: usize,
}

impl PatchInfo {
    fn new(source: &PatchSource, patch: &ParamPatch) -> Self {
        Self {
            source: source.describe(),
            label: patch.label().to_string(),
            map: patch.map().to_string(),
            sheet: patch.sheet(),
            ambient_dim: patch.metric().ambient_dim(),
            param_dim: patch.param_dim(),
            codim: patch.codim(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub grid: Vec<usize>,
    pub grid_is_default: bool,
    pub fiber_res: usize,
    pub samples: usize,
    pub tol: f64,
    pub jet_method: JetMethod,
    pub seed: u64,
}

impl Settings {
    fn new(opts: &Options) -> Self {
        let grid = opts.trace_grid();
        Self {
            grid: grid.param_res,
            grid_is_default: opts.grid.is_none(),
            fiber_res: grid.fiber_res,
            samples: opts.samples,
            tol: opts.tol,
            jet_method: opts.method,
            seed: opts.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceSummary {
    pub pairs: usize,
    pub skipped_base_points: usize,
    pub generic_rank: usize,
    pub generic_fraction: f64,
    pub rank_unstable: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecompositionSummary {
    pub pass: usize,
    pub fail: usize,
    pub excluded: usize,
    /// Histogram of block dimensions, keyed like `1,0,1,0,1`.
    pub dims: BTreeMap<String, usize>,
    pub max_ortho_residual: Measured,
    pub max_span_residual: Measured,
    pub max_tangent_residual: Measured,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairIssue {
    pub u: Vec<f64>,
    pub s: Vec<f64>,
    pub residual: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InverseSummary {
    pub pass: usize,
    pub fail: usize,
    pub vacuous: usize,
    pub excluded: usize,
    pub max_residual: Measured,
    pub mean_residual: f64,
    pub failures: Vec<PairIssue>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BidualSummary {
    pub target: String,
    pub d_forward: Measured,
    pub d_backward: Measured,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_antipodal: Option<Measured>,
    pub dual_rank: usize,
    pub dual_points: usize,
    pub bidual_points: usize,
    pub target_points: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub schema: &'static str,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub patch: PatchInfo,
    pub settings: Settings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inverse_duality: Option<InverseSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bidual: Option<BidualSummary>,
    pub verdict: Verdict,
    pub exit_status: i32,
}

impl RunReport {
    fn new(command: &'static str, opts: &Options, patch: &ParamPatch) -> Self {
        Self {
            schema: SCHEMA,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            patch: PatchInfo::new(&opts.source, patch),
            settings: Settings::new(opts),
            trace: None,
            decomposition: None,
            inverse_duality: None,
            bidual: None,
            verdict: Verdict::Pass,
            exit_status: 0,
        }
    }

    fn set_verdict(&mut self, pass: bool) {
        self.verdict = if pass { Verdict::Pass } else { Verdict::Fail };
        self.exit_status = if pass { 0 } else { 1 };
    }

    pub fn passed(&self) -> bool {
        matches!(self.verdict, Verdict::Pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn trace_summary(cloud: &DualCloud) -> TraceSummary {
    TraceSummary {
        pairs: cloud.pairs.len(),
        skipped_base_points: cloud.skipped,
        generic_rank: cloud.generic_rank,
        generic_fraction: cloud.generic_fraction,
        rank_unstable: cloud.non_generic,
    }
}

/// Samples the dual cloud on the grid.
pub fn trace(opts: &Options) -> Result<(ParamPatch, DualCloud, RunReport)> {
    let patch = opts.source.load()?;
    let cloud = trace_dual(&patch, &opts.trace_grid(), opts.method)?;
    let mut report = RunReport::new("trace", opts, &patch);
    report.trace = Some(trace_summary(&cloud));
    Ok((patch, cloud, report))
}

/// Marks pairs whose dual rank differs from the modal rank as non-generic.
fn restrict_to_modal_rank(pairs: &mut [DualPair]) -> usize {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for p in pairs.iter() {
        *counts.entry(p.rank_q).or_default() += 1;
    }
    let best = counts.values().copied().max().unwrap_or(0);
    let rank = counts.iter().find(|(_, &c)| c == best).map(|(&r, _)| r).unwrap_or(0);
    for p in pairs.iter_mut() {
        if p.rank_q != rank {
            p.generic = false;
        }
    }
    rank
}

/// Runs the decomposition and inverse-duality checks on seeded random pairs.
pub fn check(opts: &Options) -> Result<RunReport> {
    let patch = opts.source.load()?;
    let ms = patch.metric();
    let mut pairs = sample_pairs(&patch, opts.samples, opts.seed, opts.method)?;
    if pairs.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let generic_rank = restrict_to_modal_rank(&mut pairs);

    let mut dec = DecompositionSummary {
        pass: 0,
        fail: 0,
        excluded: 0,
        dims: BTreeMap::new(),
        max_ortho_residual: Measured::at_most(0.0, opts.tol),
        max_span_residual: Measured::at_most(0.0, opts.tol),
        max_tangent_residual: Measured::at_most(0.0, opts.tol),
    };
    let mut inv = InverseSummary {
        pass: 0,
        fail: 0,
        vacuous: 0,
        excluded: 0,
        max_residual: Measured::at_most(0.0, opts.tol),
        mean_residual: 0.0,
        failures: Vec::new(),
    };
    let (mut ortho, mut span, mut tangent, mut worst, mut total) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for pair in &pairs {
        let (jp, jq) = pair.jets(&patch, opts.method)?;
        let d = decomposition_report(&ms, pair, &jp, &jq, opts.tol)?;
        match d.status {
            CheckStatus::Pass | CheckStatus::Fail => {
                if d.status == CheckStatus::Pass {
                    dec.pass += 1;
                } else {
                    dec.fail += 1;
                }
                let key = d.dims.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
                *dec.dims.entry(key).or_default() += 1;
                ortho = ortho.max(d.ortho_residual);
                span = span.max(d.span_residual);
                tangent = tangent.max(d.tangent_residual);
            }
            _ => dec.excluded += 1,
        }
        let r = inverse_duality(&ms, pair, &jp, &jq, opts.tol)?;
        match r.status {
            CheckStatus::Pass => inv.pass += 1,
            CheckStatus::Fail => {
                inv.fail += 1;
                inv.failures.push(PairIssue {
                    u: pair.u.clone(),
                    s: pair.s.clone(),
                    residual: r.residual,
                    gap: r.gap,
                });
            }
            CheckStatus::Vacuous => inv.vacuous += 1,
            CheckStatus::Excluded => inv.excluded += 1,
        }
        if matches!(r.status, CheckStatus::Pass | CheckStatus::Fail) {
            worst = worst.max(r.residual);
            total += r.residual;
        }
    }
    dec.max_ortho_residual = Measured::at_most(ortho, opts.tol);
    dec.max_span_residual = Measured::at_most(span, opts.tol);
    dec.max_tangent_residual = Measured::at_most(tangent, opts.tol);
    inv.max_residual = Measured::at_most(worst, opts.tol);
    let evaluated = inv.pass + inv.fail;
    inv.mean_residual = if evaluated > 0 { total / evaluated as f64 } else { 0.0 };

    let mut report = RunReport::new("check", opts, &patch);
    let rank_unstable = pairs.iter().filter(|p| !p.generic).count();
    let modal = pairs.iter().filter(|p| p.rank_q == generic_rank).count();
    report.trace = Some(TraceSummary {
        pairs: pairs.len(),
        skipped_base_points: opts.samples - pairs.len(),
        generic_rank,
        generic_fraction: modal as f64 / pairs.len() as f64,
        rank_unstable,
    });
    let pass = dec.fail == 0 && inv.fail == 0;
    report.decomposition = Some(dec);
    report.inverse_duality = Some(inv);
    report.set_verdict(pass);
    Ok(report)
}

/// Compares the dual of the dual with its expected target.
pub fn bidual(opts: &Options) -> Result<(RunReport, BidualReport)> {
    let patch = opts.source.load()?;
    let b = bidual_distance(&patch, &opts.trace_grid(), opts.method)?;
    let mut report = RunReport::new("bidual", opts, &patch);
    let summary = BidualSummary {
        target: b.target.label().to_string(),
        d_forward: Measured::at_most(b.d_forward, opts.tol),
        d_backward: Measured::at_most(b.d_backward, opts.tol),
        d_antipodal: b.d_antipodal.map(|d| Measured::at_most(d, opts.tol)),
        dual_rank: b.dual_rank,
        dual_points: b.dual_points,
        bidual_points: b.bidual_points,
        target_points: b.target_points,
    };
    let pass = summary.d_forward.pass && summary.d_backward.pass;
    report.bidual = Some(summary);
    report.set_verdict(pass);
    Ok((report, b))
}

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes the cloud as CSV: `u*, s*, p*, q*, rank, generic`.
pub fn write_cloud_csv(cloud: &DualCloud, patch: &ParamPatch, mut w: impl Write) -> io::Result<()> {
    let n = patch.metric().ambient_dim();
    let mut header: Vec<String> = Vec::new();
    header.extend((0..patch.param_dim()).map(|i| format!("u{i}")));
    header.extend((0..patch.codim()).map(|i| format!("s{i}")));
    header.extend((0..n).map(|i| format!("p{i}")));
    header.extend((0..n).map(|i| format!("q{i}")));
    header.push("rank".into());
    header.push("generic".into());
    writeln!(w, "{}", header.join(","))?;
    for pair in &cloud.pairs {
        let mut row: Vec<String> = Vec::with_capacity(header.len());
        row.extend(pair.u.iter().map(|&x| fmt_float(x)));
        row.extend(pair.s.iter().map(|&x| fmt_float(x)));
        row.extend(pair.p.iter().map(|&x| fmt_float(x)));
        row.extend(pair.q.iter().map(|&x| fmt_float(x)));
        row.push(pair.rank_q.to_string());
        row.push(pair.generic.to_string());
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn ply_names(n: usize) -> Vec<String> {
    const NAMES: [&str; 4] = ["x", "y", "z", "w"];
    (0..n)
        .map(|i| NAMES.get(i).map(|s| s.to_string()).unwrap_or_else(|| format!("c{i}")))
        .collect()
}

/// ASCII PLY with one vertex per point.
pub fn write_ply(points: &[AmbientVector], mut w: impl Write) -> io::Result<()> {
    let n = points.first().map(|p| p.len()).unwrap_or(3);
    writeln!(w, "ply\nformat ascii 1.0\nelement vertex {}", points.len())?;
    for name in ply_names(n) {
        writeln!(w, "property double {name}")?;
    }
    writeln!(w, "end_header")?;
    for p in points {
        let row: Vec<String> = p.iter().map(|&x| fmt_float(x)).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Which point set `plotdata` emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudKind {
    P,
    Q,
    Bidual,
}

/// Reads the `p*` or `q*` columns of a trace CSV.
pub fn cloud_from_csv(text: &str, kind: CloudKind) -> Result<Vec<Vec<f64>>> {
    let prefix = match kind {
        CloudKind::P => 'p',
        CloudKind::Q => 'q',
        CloudKind::Bidual => {
            return Err(Error::Unsupported("bidual clouds need a patch, not a trace file".into()));
        }
    };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = match lines.next() {
        Some(h) => h,
        None => return Ok(Vec::new()),
    };
    let cols: Vec<usize> = header
        .split(',')
        .enumerate()
        .filter(|(_, name)| {
            let name = name.trim();
            name.starts_with(prefix) && name[1..].parse::<usize>().is_ok()
        })
        .map(|(i, _)| i)
        .collect();
    if cols.is_empty() {
        return Err(Error::InvalidParams(format!("trace file has no {prefix}* columns")));
    }
    lines
        .enumerate()
        .map(|(row, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            cols.iter()
                .map(|&c| {
                    fields
                        .get(c)
                        .and_then(|f| f.trim().parse::<f64>().ok())
                        .ok_or_else(|| Error::InvalidParams(format!("bad value in row {} column {}", row + 2, c + 1)))
                })
                .collect()
        })
        .collect()
}

/// Point clouds computed directly from a patch.
pub fn cloud_from_patch(opts: &Options, kind: CloudKind) -> Result<Vec<Vec<f64>>> {
    let points: Vec<AmbientVector> = match kind {
        CloudKind::P | CloudKind::Q => {
            let (_, cloud, _) = trace(opts)?;
            cloud
                .pairs
                .into_iter()
                .map(|p| if kind == CloudKind::P { p.p } else { p.q })
                .collect()
        }
        CloudKind::Bidual => bidual(opts)?.1.bidual,
    };
    Ok(points.into_iter().map(AmbientVector::into_inner).collect())
}

/// Selects 1-based coordinate columns; `None` keeps up to the first three.
pub fn project_columns(rows: &[Vec<f64>], columns: Option<&[usize]>) -> Result<Vec<Vec<f64>>> {
    let width = rows.first().map(|r| r.len()).unwrap_or(0);
    let cols: Vec<usize> = match columns {
        Some(cols) => {
            for &c in cols {
                if c == 0 || (width > 0 && c > width) {
                    return Err(Error::InvalidParams(format!("column {c} outside 1..={width}")));
                }
            }
            cols.iter().map(|c| c - 1).collect()
        }
        None => (0..width.min(3)).collect(),
    };
    Ok(rows.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect())
}

pub fn write_columns(rows: &[Vec<f64>], mut w: impl Write) -> io::Result<()> {
    for r in rows {
        let line: Vec<String> = r.iter().map(|&x| fmt_float(x)).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}
