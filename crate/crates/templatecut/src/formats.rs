//! Text formats: templates, contours, shape models and DIMACS max-flow dumps.
//!
//! Template (`TPL2`/`TPL3`) and contour (`CONTOUR2`/`CONTOUR3`) files share
//! one layout: a header line, `v x y [z]` vertex lines, and for 3D
//! `f i j k` face lines with 0-based indices. Blank lines and `#` comments
//! are ignored. Numbers are written in shortest round-trip form.

use std::fmt::Write as _;

use templatecut_core::maxflow::{Arc, Capacity, FlowNetwork};
use templatecut_core::{normalize_template, Contour, Dim, ShapeModel, TemplateShape, Vec3};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum FormatError {
    #[error("ParseError: line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Core(#[from] templatecut_core::Error),
}

impl FormatError {
    pub fn kind(&self) -> &'static str {
        match self {
            FormatError::Syntax { .. } => "ParseError",
            FormatError::Core(e) => e.kind(),
        }
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

/// Meaningful lines with 1-based line numbers, comments stripped.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_numbers<T: std::str::FromStr>(line: usize, parts: &[&str], n: usize, what: &str) -> Result<Vec<T>, FormatError> {
    if parts.len() != n {
        return Err(syntax(line, format!("{what} needs {n} values, got {}", parts.len())));
    }
    parts
        .iter()
        .map(|p| p.parse::<T>().map_err(|_| syntax(line, format!("bad number {p:?}"))))
        .collect()
}

/// Vertices and faces of a `TPL`/`CONTOUR` style file.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub dim: Dim,
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
}

fn parse_point_set(text: &str, prefix: &str) -> Result<PointSet, FormatError> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| syntax(1, "empty file"))?;
    let dim = if header == format!("{prefix}2") {
        Dim::Two
    } else if header == format!("{prefix}3") {
        Dim::Three
    } else {
        return Err(syntax(ln, format!("expected {prefix}2 or {prefix}3")));
    };
    let d = dim.as_usize();
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (ln, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        match parts[0] {
            "v" => {
                let c: Vec<f64> = parse_numbers(ln, &parts[1..], d, "vertex")?;
                if c.iter().any(|x| !x.is_finite()) {
                    return Err(syntax(ln, "non-finite coordinate"));
                }
                vertices.push(if d == 2 { Vec3::xy(c[0], c[1]) } else { Vec3::new(c[0], c[1], c[2]) });
            }
            "f" if dim == Dim::Three => {
                let f: Vec<usize> = parse_numbers(ln, &parts[1..], 3, "face")?;
                faces.push([f[0], f[1], f[2]]);
            }
            other => return Err(syntax(ln, format!("unexpected record {other:?}"))),
        }
    }
    Ok(PointSet { dim, vertices, faces })
}

fn write_point_set(header: &str, dim: Dim, vertices: &[Vec3], faces: &[[usize; 3]]) -> String {
    let mut out = format!("{header}{}\n", dim.as_usize());
    for v in vertices {
        match dim {
            Dim::Two => writeln!(out, "v {} {}", v.x, v.y),
            Dim::Three => writeln!(out, "v {} {} {}", v.x, v.y, v.z),
        }
        .unwrap();
    }
    for f in faces {
        writeln!(out, "f {} {} {}", f[0], f[1], f[2]).unwrap();
    }
    out
}

pub fn parse_template_points(text: &str) -> Result<PointSet, FormatError> {
    parse_point_set(text, "TPL")
}

/// Parse and normalize a template.
pub fn parse_template(text: &str) -> Result<TemplateShape, FormatError> {
    let p = parse_template_points(text)?;
    Ok(normalize_template(p.dim, &p.vertices, &p.faces)?)
}

pub fn write_template(dim: Dim, vertices: &[Vec3], faces: &[[usize; 3]]) -> String {
    write_point_set("TPL", dim, vertices, faces)
}

pub fn write_contour(contour: &Contour) -> String {
    match contour {
        Contour::Polygon(p) => write_point_set("CONTOUR", Dim::Two, p, &[]),
        Contour::Mesh { vertices, faces } => write_point_set("CONTOUR", Dim::Three, vertices, faces),
    }
}

pub fn parse_contour(text: &str) -> Result<Contour, FormatError> {
    let p = parse_point_set(text, "CONTOUR")?;
    Ok(match p.dim {
        Dim::Two => Contour::Polygon(p.vertices),
        Dim::Three => Contour::Mesh { vertices: p.vertices, faces: p.faces },
    })
}

// ---- DIMACS ----

/// Capacity written for infinite arcs; parsed capacities at or above it read back as infinite.
pub const DIMACS_INFINITY: f64 = 1e12;

/// DIMACS max-flow problem with 1-based node ids.
pub fn write_dimacs(net: &FlowNetwork) -> String {
    let mut out = String::new();
    writeln!(out, "c ray graph, infinite capacity written as {}", DIMACS_INFINITY as u64).unwrap();
    writeln!(out, "p max {} {}", net.node_count, net.arcs.len()).unwrap();
    writeln!(out, "n {} s", net.source + 1).unwrap();
    writeln!(out, "n {} t", net.sink + 1).unwrap();
    for a in &net.arcs {
        match a.cap {
            Capacity::Finite(c) => writeln!(out, "a {} {} {}", a.from + 1, a.to + 1, c),
            Capacity::Infinite => writeln!(out, "a {} {} {}", a.from + 1, a.to + 1, DIMACS_INFINITY as u64),
        }
        .unwrap();
    }
    out
}

pub fn parse_dimacs(text: &str) -> Result<FlowNetwork, FormatError> {
    let mut problem = None;
    let mut source = None;
    let mut sink = None;
    let mut arcs = Vec::new();
    for (ln, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())) {
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let node = |s: &str, n: usize| -> Result<usize, FormatError> {
            let id: usize = s.parse().map_err(|_| syntax(ln, format!("bad node id {s:?}")))?;
            if id == 0 || id > n {
                return Err(syntax(ln, format!("node id {id} out of range")));
            }
            Ok(id - 1)
        };
        match parts.as_slice() {
            ["p", "max", n, m] => {
                let n: usize = n.parse().map_err(|_| syntax(ln, "bad node count"))?;
                let m: usize = m.parse().map_err(|_| syntax(ln, "bad arc count"))?;
                problem = Some((n, m));
            }
            ["n", id, role] => {
                let (n, _) = problem.ok_or_else(|| syntax(ln, "node line before problem line"))?;
                match *role {
                    "s" => source = Some(node(id, n)?),
                    "t" => sink = Some(node(id, n)?),
                    _ => return Err(syntax(ln, "node role must be s or t")),
                }
            }
            ["a", u, v, c] => {
                let (n, _) = problem.ok_or_else(|| syntax(ln, "arc line before problem line"))?;
                let cap: f64 = c.parse().map_err(|_| syntax(ln, format!("bad capacity {c:?}")))?;
                let cap = if cap >= DIMACS_INFINITY { Capacity::Infinite } else { Capacity::Finite(cap) };
                arcs.push(Arc { from: node(u, n)?, to: node(v, n)?, cap });
            }
            _ => return Err(syntax(ln, "unrecognized line")),
        }
    }
    let (n, m) = problem.ok_or_else(|| syntax(1, "missing problem line"))?;
    if arcs.len() != m {
        return Err(syntax(1, format!("problem line declares {m} arcs, found {}", arcs.len())));
    }
    let source = source.ok_or_else(|| syntax(1, "missing source"))?;
    let sink = sink.ok_or_else(|| syntax(1, "missing sink"))?;
    Ok(FlowNetwork::new(n, source, sink, arcs)?)
}

// ---- shape model ----

/// ```text
/// SHAPEMODEL <dim> <landmarks> <modes>
/// mean <landmarks*dim values>
/// lambda <k> <value>
/// mode <k> <landmarks*dim values>
/// ```
pub fn write_shape_model(model: &ShapeModel) -> String {
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = format!("SHAPEMODEL {} {} {}\n", model.dim.as_usize(), model.landmarks, model.modes.len());
    writeln!(out, "mean {}", join(&model.mean)).unwrap();
    for (k, (l, m)) in model.eigenvalues.iter().zip(&model.modes).enumerate() {
        writeln!(out, "lambda {k} {l}").unwrap();
        writeln!(out, "mode {k} {}", join(m)).unwrap();
    }
    out
}

pub fn parse_shape_model(text: &str) -> Result<ShapeModel, FormatError> {
    let mut lines = content_lines(text);
    let (ln, header) = lines.next().ok_or_else(|| syntax(1, "empty file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.first() != Some(&"SHAPEMODEL") {
        return Err(syntax(ln, "expected SHAPEMODEL header"));
    }
    let h: Vec<usize> = parse_numbers(ln, &h[1..], 3, "SHAPEMODEL")?;
    let dim = match h[0] {
        2 => Dim::Two,
        3 => Dim::Three,
        _ => return Err(syntax(ln, "dimension must be 2 or 3")),
    };
    let (landmarks, count) = (h[1], h[2]);
    let len = landmarks * h[0];
    let mut mean = None;
    let mut eigenvalues = vec![None; count];
    let mut modes = vec![None; count];
    for (ln, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let index = |s: &str| -> Result<usize, FormatError> {
            s.parse::<usize>().ok().filter(|&k| k < count).ok_or_else(|| syntax(ln, format!("bad mode index {s:?}")))
        };
        match parts[0] {
            "mean" => mean = Some(parse_numbers::<f64>(ln, &parts[1..], len, "mean")?),
            "lambda" if parts.len() == 3 => eigenvalues[index(parts[1])?] = Some(parse_numbers::<f64>(ln, &parts[2..], 1, "lambda")?[0]),
            "mode" if parts.len() >= 2 => modes[index(parts[1])?] = Some(parse_numbers::<f64>(ln, &parts[2..], len, "mode")?),
            other => return Err(syntax(ln, format!("unexpected record {other:?}"))),
        }
    }
    let missing = |what: &str| syntax(0, format!("missing {what}"));
    Ok(ShapeModel {
        dim,
        landmarks,
        mean: mean.ok_or_else(|| missing("mean"))?,
        eigenvalues: eigenvalues.into_iter().collect::<Option<_>>().ok_or_else(|| missing("lambda"))?,
        modes: modes.into_iter().collect::<Option<_>>().ok_or_else(|| missing("mode"))?,
    })
}
