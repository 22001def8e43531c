//! Built-in test varieties and the patch-file loader.
//!
//! Every builtin is written out as DSL text and run through the parser, so
//! the catalog exercises the same path as user files.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::expr::{parse, parse_constant, parse_with_params, ParseError, ParseErrorKind};
use crate::patch::{ParamAxis, ParamPatch, Sheet};

#[derive(Debug, Clone, Copy)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub params: &'static [&'static str],
    pub summary: &'static str,
}

pub const CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "great_circle",
        params: &[],
        summary: "equator (cos t, sin t, 0) of S^2; totally geodesic, dual is two points",
    },
    CatalogEntry {
        name: "small_circle",
        params: &["r"],
        summary: "(r cos t, r sin t, sqrt(1-r^2)) in S^2, 0 < r < 1",
    },
    CatalogEntry {
        name: "clifford_torus",
        params: &[],
        summary: "(cos u, sin u, cos v, sin v)/sqrt 2 in S^3",
    },
    CatalogEntry {
        name: "latitude_torus",
        params: &["a", "b"],
        summary: "(a cos u, a sin u, b cos v, b sin v) in S^3, a^2 + b^2 = 1",
    },
    CatalogEntry {
        name: "hyperbolic_circle",
        params: &["r"],
        summary: "(r cos t, r sin t, sqrt(1+r^2)) in H^2, r > 0",
    },
    CatalogEntry {
        name: "random_trig_curve",
        params: &["seed", "degree", "dim"],
        summary: "seeded trigonometric polynomial curve normalized onto S^{dim-1}",
    },
];

/// Closed-form second fundamental forms on the shared orthonormal tangent
/// basis, for the normal direction written in the comment of each case.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub dual_dim: usize,
    /// Diagonal of `II` in direction `q`.
    pub form: Vec<f64>,
    /// Diagonal of `II∨` in direction `p`.
    pub dual_form: Vec<f64>,
}

/// Known forms for fixtures; `None` where no closed form is recorded.
pub fn closed_form(name: &str, params: &[f64]) -> Option<ClosedForm> {
    match (name, params) {
        ("great_circle", _) => Some(ClosedForm {
            dual_dim: 0,
            form: vec![],
            dual_form: vec![],
        }),
        // q = (c cos t, c sin t, -r)
        ("small_circle", [r]) => {
            let c = (1.0 - r * r).sqrt();
            Some(ClosedForm {
                dual_dim: 1,
                form: vec![-c / r],
                dual_form: vec![-r / c],
            })
        }
        // q = (cos u, sin u, -cos v, -sin v)/sqrt 2
        ("clifford_torus", _) => Some(ClosedForm {
            dual_dim: 2,
            form: vec![-1.0, 1.0],
            dual_form: vec![-1.0, 1.0],
        }),
        // q = (b cos u, b sin u, -a cos v, -a sin v)
        ("latitude_torus", [a, b]) => Some(ClosedForm {
            dual_dim: 2,
            form: vec![-b / a, a / b],
            dual_form: vec![-a / b, b / a],
        }),
        // q = (c cos t, c sin t, r)
        ("hyperbolic_circle", [r]) => {
            let c = (1.0 + r * r).sqrt();
            Some(ClosedForm {
                dual_dim: 1,
                form: vec![-c / r],
                dual_form: vec![-r / c],
            })
        }
        _ => None,
    }
}

fn angle_patch(label: String, text: &str, names: &[&str], sheet: Sheet) -> Result<ParamPatch> {
    let params: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    let map = parse_with_params(text, &params)?;
    let axes = names.iter().map(|n| ParamAxis::angle(*n)).collect();
    ParamPatch::new(label, map, axes, sheet)
}

fn expect_params(name: &str, params: &[f64], count: usize) -> Result<()> {
    if params.len() != count {
        return Err(Error::InvalidParams(format!(
            "{name} takes {count} parameter(s), got {}",
            params.len()
        )));
    }
    Ok(())
}

fn as_count(name: &str, what: &str, x: f64) -> Result<u64> {
    if x.fract() != 0.0 || x < 0.0 || !x.is_finite() {
        return Err(Error::InvalidParams(format!("{name}: {what} must be a non-negative integer")));
    }
    Ok(x as u64)
}

/// Constructs a catalog patch by name.
pub fn builtin(name: &str, params: &[f64]) -> Result<ParamPatch> {
    let label = if params.is_empty() {
        name.to_string()
    } else {
        let list: Vec<String> = params.iter().map(|p| format!("{p:?}")).collect();
        format!("{name}:{}", list.join(","))
    };
    match name {
        "great_circle" => {
            expect_params(name, params, 0)?;
            angle_patch(label, "(cos(t), sin(t), 0)", &["t"], Sheet::Sphere)
        }
        "small_circle" => {
            expect_params(name, params, 1)?;
            let r = params[0];
            if !(r > 0.0 && r < 1.0) {
                return Err(Error::InvalidParams("small_circle: need 0 < r < 1".into()));
            }
            let c = (1.0 - r * r).sqrt();
            let text = format!("({r:?}*cos(t), {r:?}*sin(t), {c:?})");
            angle_patch(label, &text, &["t"], Sheet::Sphere)
        }
        "clifford_torus" => {
            expect_params(name, params, 0)?;
            angle_patch(
                label,
                "(cos(u)/sqrt(2), sin(u)/sqrt(2), cos(v)/sqrt(2), sin(v)/sqrt(2))",
                &["u", "v"],
                Sheet::Sphere,
            )
        }
        "latitude_torus" => {
            expect_params(name, params, 2)?;
            let (a, b) = (params[0], params[1]);
            if !(a > 0.0 && b > 0.0) || (a * a + b * b - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidParams(
                    "latitude_torus: need a, b > 0 with a^2 + b^2 = 1".into(),
                ));
            }
            let b = (1.0 - a * a).sqrt();
            let text = format!("({a:?}*cos(u), {a:?}*sin(u), {b:?}*cos(v), {b:?}*sin(v))");
            angle_patch(label, &text, &["u", "v"], Sheet::Sphere)
        }
        "hyperbolic_circle" => {
            expect_params(name, params, 1)?;
            let r = params[0];
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParams("hyperbolic_circle: need r > 0".into()));
            }
            let c = (1.0 + r * r).sqrt();
            let text = format!("({r:?}*cos(t), {r:?}*sin(t), {c:?})");
            angle_patch(label, &text, &["t"], Sheet::Hyperbolic)
        }
        "random_trig_curve" => {
            if params.is_empty() || params.len() > 3 {
                return Err(Error::InvalidParams(
                    "random_trig_curve takes seed[,degree[,dim]]".into(),
                ));
            }
            let seed = as_count(name, "seed", params[0])?;
            let degree = as_count(name, "degree", params.get(1).copied().unwrap_or(3.0))? as usize;
            let dim = as_count(name, "dim", params.get(2).copied().unwrap_or(4.0))? as usize;
            random_trig_curve(seed, degree, dim)
        }
        _ => Err(Error::UnknownBuiltin(name.to_string())),
    }
}

/// Parses `NAME[:p1,p2,...]` and builds the builtin.
pub fn builtin_spec(spec: &str) -> Result<ParamPatch> {
    let (name, params) = split_spec(spec)?;
    builtin(name, &params)
}

pub fn split_spec(spec: &str) -> Result<(&str, Vec<f64>)> {
    let (name, rest) = match spec.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (spec.trim(), None),
    };
    let params = match rest {
        None => Vec::new(),
        Some(r) => r
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidParams(format!("not a number: '{}'", s.trim())))
            })
            .collect::<Result<Vec<f64>>>()?,
    };
    Ok((name, params))
}

/// A trigonometric polynomial curve `x(t)` in `R^dim` with standard normal
/// coefficients, mapped to the sphere as `x / |x|`.
pub fn random_trig_curve(seed: u64, degree: usize, dim: usize) -> Result<ParamPatch> {
    if dim < 3 {
        return Err(Error::InvalidParams("random_trig_curve: dim must be at least 3".into()));
    }
    if degree == 0 {
        return Err(Error::InvalidParams("random_trig_curve: degree must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = 2048;
    let coeffs = loop {
        let c: Vec<Vec<f64>> = (0..dim)
            .map(|_| (0..2 * degree + 1).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect();
        let min_norm = (0..samples)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / samples as f64;
                c.iter()
                    .map(|row| trig_eval(row, t).powi(2))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        if min_norm >= 0.25 {
            break c;
        }
    };
    let raw: Vec<String> = coeffs
        .iter()
        .map(|row| {
            let mut terms = vec![format!("{:?}", row[0])];
            for k in 1..=degree {
                terms.push(format!("{:?}*cos({k}*t)", row[2 * k - 1]));
                terms.push(format!("{:?}*sin({k}*t)", row[2 * k]));
            }
            format!("({})", terms.join(" + "))
        })
        .collect();
    let norm = format!(
        "sqrt({})",
        raw.iter().map(|r| format!("{r}^2")).collect::<Vec<_>>().join(" + ")
    );
    let text = format!(
        "({})",
        raw.iter().map(|r| format!("{r}/{norm}")).collect::<Vec<_>>().join(", ")
    );
    let label = format!("random_trig_curve:{seed},{degree},{dim}");
    angle_patch(label, &text, &["t"], Sheet::Sphere)
}

fn trig_eval(row: &[f64], t: f64) -> f64 {
    let degree = (row.len() - 1) / 2;
    let mut acc = row[0];
    for k in 1..=degree {
        let (s, c) = (k as f64 * t).sin_cos();
        acc += row[2 * k - 1] * c + row[2 * k] * s;
    }
    acc
}

/// Loads a patch file: the map in DSL syntax plus optional directives
///
/// ```text
/// # comment
/// name: my_curve
/// sheet: sphere | hyperbolic
/// param: t in [0, 2*pi] periodic
/// (cos(t), sin(t), 0)
/// ```
///
/// Without `param:` lines the parameters are inferred from the map and each
/// gets the periodic domain `[0, 2π]`.
pub fn load_dsl(text: &str) -> Result<ParamPatch> {
    let mut sheet = Sheet::Sphere;
    let mut name = String::from("dsl");
    let mut axes: Vec<ParamAxis> = Vec::new();
    let mut body = String::with_capacity(text.len());

    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim_start();
        let directive = trimmed
            .split_once(':')
            .filter(|(k, _)| matches!(k.trim(), "sheet" | "param" | "name"));
        if lineno > 0 {
            body.push('\n');
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = directive else {
            body.push_str(line);
            continue;
        };
        let at = |msg: String| ParseError {
            line: lineno + 1,
            column: 1,
            kind: ParseErrorKind::Syntax(msg),
        };
        match key.trim() {
            "sheet" => {
                sheet = match value.trim() {
                    "sphere" => Sheet::Sphere,
                    "hyperbolic" => Sheet::Hyperbolic,
                    other => return Err(at(format!("unknown sheet '{other}'")).into()),
                }
            }
            "name" => name = value.trim().to_string(),
            _ => axes.push(parse_param_line(value).map_err(at)?),
        }
    }

    let map = if axes.is_empty() {
        let map = parse(&body)?;
        axes = map.params.iter().map(|p| ParamAxis::angle(p.clone())).collect();
        map
    } else {
        let names: Vec<String> = axes.iter().map(|a| a.name.clone()).collect();
        parse_with_params(&body, &names)?
    };
    ParamPatch::new(name, map, axes, sheet)
}

fn parse_param_line(value: &str) -> std::result::Result<ParamAxis, String> {
    let (name, rest) = value
        .split_once(" in ")
        .ok_or_else(|| "expected 'param: NAME in [LO, HI] [periodic]'".to_string())?;
    let rest = rest.trim();
    let open = rest.find('[').ok_or("missing '['")?;
    let close = rest.rfind(']').ok_or("missing ']'")?;
    let (lo, hi) = rest[open + 1..close]
        .split_once(',')
        .ok_or("expected two bounds")?;
    let lo = parse_constant(lo.trim()).map_err(|e| e.to_string())?;
    let hi = parse_constant(hi.trim()).map_err(|e| e.to_string())?;
    let mut axis = ParamAxis::new(name.trim(), lo, hi);
    match rest[close + 1..].trim() {
        "" => {}
        "periodic" => axis.period = Some(hi - lo),
        other => return Err(format!("unexpected '{other}' after bounds")),
    }
    Ok(axis)
}
