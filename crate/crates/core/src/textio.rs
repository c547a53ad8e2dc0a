//! Text input/output for spaces, cocycles and correspondences, plus the
//! phase and permutation token formats shared by reports.
//!
//! The grammar is line-oriented:
//!
//! ```text
//! space <name> {
//!   vertices: a b c
//!   edges: (a b) (b c)
//!   chart: a b
//!   chart: b c
//! }
//! cocycle <name> over <space> degree <n> {
//!   pair <i> <j> {
//!     <vertex> -> ((1 2); 1 -1)
//!   }
//! }
//! correspondence <name> {
//!   base <space>
//!   target <space>
//!   cocycle <cocycle>
//!   range {
//!     <total-vertex-label> -> <target-vertex>
//!   }
//! }
//! ```
//!
//! `#` starts a comment. Total-vertex labels are the canonical
//! `base/chart.sheet` names of the covering built from the cocycle.

use crate::bundle::build_twisted_covering;
use crate::cocycle::TransitionSystem;
use crate::correspondence::TwistedCorrespondence;
use crate::group::{DiagPermUnitary, Permutation};
use crate::linalg::C64;
use crate::space::{CechSpace, SharedSpace};
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, column, message: message.into() })
}

/// Everything a model file may define.
#[derive(Debug, Default)]
pub struct Document {
    pub spaces: BTreeMap<String, SharedSpace>,
    pub cocycles: BTreeMap<String, TransitionSystem>,
    pub correspondences: BTreeMap<String, TwistedCorrespondence>,
}

/// Render a unit complex number so that parsing the output recovers the
/// exact float bits. Common exact values get short tokens.
pub fn format_phase(z: &C64) -> String {
    let exact = [
        (C64::new(1.0, 0.0), "1"),
        (C64::new(-1.0, 0.0), "-1"),
        (C64::new(0.0, 1.0), "i"),
        (C64::new(0.0, -1.0), "-i"),
    ];
    for (value, token) in exact {
        if z.re == value.re && z.im == value.im {
            return token.to_string();
        }
    }
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

pub fn parse_phase(token: &str) -> Option<C64> {
    match token {
        "1" => return Some(C64::new(1.0, 0.0)),
        "-1" => return Some(C64::new(-1.0, 0.0)),
        "i" => return Some(C64::new(0.0, 1.0)),
        "-i" => return Some(C64::new(0.0, -1.0)),
        _ => {}
    }
    if let Some(body) = token.strip_suffix('i') {
        // a+bi or a-bi; find the sign splitting real and imaginary parts,
        // skipping a leading sign and exponent signs.
        let bytes = body.as_bytes();
        let mut split = None;
        let mut idx = 1;
        while idx < bytes.len() {
            let c = bytes[idx] as char;
            if (c == '+' || c == '-') && !matches!(bytes[idx - 1] as char, 'e' | 'E') {
                split = Some(idx);
            }
            idx += 1;
        }
        let split = split?;
        let re: f64 = body[..split].parse().ok()?;
        let im: f64 = match &body[split..split + 1] {
            "+" => body[split + 1..].parse().ok()?,
            _ => -body[split + 1..].parse::<f64>().ok()?,
        };
        Some(C64::new(re, im))
    } else {
        token.parse::<f64>().ok().map(|re| C64::new(re, 0.0))
    }
}

/// Permutation cycle notation: "id" or "(1 2)(3 4)" with 1-based points.
pub fn parse_cycles(token: &str, degree: usize) -> Option<Permutation> {
    if token == "id" {
        return Some(Permutation::identity(degree));
    }
    let mut images: Vec<usize> = (0..degree).collect();
    let mut seen = vec![false; degree];
    let body = token.trim();
    if !body.starts_with('(') || !body.ends_with(')') {
        return None;
    }
    for cycle in body[1..body.len() - 1].split(")(") {
        let points: Vec<usize> = cycle
            .split_whitespace()
            .map(|p| p.parse::<usize>().ok().filter(|&v| v >= 1 && v <= degree))
            .collect::<Option<Vec<usize>>>()?
            .iter()
            .map(|v| v - 1)
            .collect();
        if points.is_empty() {
            return None;
        }
        for &p in &points {
            if seen[p] {
                return None;
            }
            seen[p] = true;
        }
        for w in 0..points.len() {
            images[points[w]] = points[(w + 1) % points.len()];
        }
    }
    Permutation::new(images).ok()
}

struct Lines<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let items = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { items, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.items.get(self.pos).copied();
        self.pos += 1;
        item
    }
}

/// Parse a model file. Cocycles get their covering built eagerly so that
/// correspondence range blocks can refer to total-vertex labels.
pub fn parse_input(text: &str) -> Result<Document, ParseError> {
    let mut doc = Document::default();
    let mut lines = Lines::new(text);
    while let Some((line_no, line)) = lines.next() {
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.first() {
            Some(&"space") => parse_space(&mut doc, &mut lines, line_no, &words)?,
            Some(&"cocycle") => parse_cocycle(&mut doc, &mut lines, line_no, &words)?,
            Some(&"correspondence") => {
                parse_correspondence(&mut doc, &mut lines, line_no, &words)?
            }
            _ => return err(line_no, 1, format!("expected a block keyword, found '{line}'")),
        }
    }
    Ok(doc)
}

fn parse_space(
    doc: &mut Document,
    lines: &mut Lines,
    start: usize,
    words: &[&str],
) -> Result<(), ParseError> {
    if words.len() != 3 || words[2] != "{" {
        return err(start, 1, "expected: space <name> {");
    }
    let name = words[1].to_string();
    let mut labels: Vec<String> = Vec::new();
    let mut edges: Vec<(String, String)> = Vec::new();
    let mut charts: Vec<Vec<String>> = Vec::new();
    loop {
        let Some((line_no, line)) = lines.next() else {
            return err(start, 1, "unterminated space block");
        };
        if line == "}" {
            break;
        }
        if let Some(rest) = line.strip_prefix("vertices:") {
            labels.extend(rest.split_whitespace().map(|s| s.to_string()));
        } else if let Some(rest) = line.strip_prefix("edges:") {
            let cleaned = rest.replace('(', " ").replace(')', " ");
            let tokens: Vec<&str> = cleaned.split_whitespace().collect();
            if tokens.len() % 2 != 0 {
                return err(line_no, 1, "edges come in pairs (a b)");
            }
            for pair in tokens.chunks(2) {
                edges.push((pair[0].to_string(), pair[1].to_string()));
            }
        } else if let Some(rest) = line.strip_prefix("chart:") {
            let chart: Vec<String> = rest.split_whitespace().map(|s| s.to_string()).collect();
            charts.push(chart);
        } else {
            return err(line_no, 1, format!("unexpected line in space block: '{line}'"));
        }
    }
    if charts.is_empty() {
        return err(start, 1, "no charts");
    }
    let index: BTreeMap<&str, usize> =
        labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let resolve = |label: &str| -> Result<usize, ParseError> {
        index
            .get(label)
            .copied()
            .ok_or(ParseError { line: start, column: 1, message: format!("unknown vertex '{label}'") })
    };
    let edge_ids = edges
        .iter()
        .map(|(a, b)| Ok((resolve(a)?, resolve(b)?)))
        .collect::<Result<Vec<_>, ParseError>>()?;
    let chart_ids = charts
        .iter()
        .map(|c| c.iter().map(|l| resolve(l)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let space = CechSpace::new(&name, labels, edge_ids, chart_ids)
        .map_err(|e| ParseError { line: start, column: 1, message: e.to_string() })?;
    doc.spaces.insert(name, Arc::new(space));
    Ok(())
}

fn parse_cocycle(
    doc: &mut Document,
    lines: &mut Lines,
    start: usize,
    words: &[&str],
) -> Result<(), ParseError> {
    if words.len() != 7 || words[2] != "over" || words[4] != "degree" || words[6] != "{" {
        return err(start, 1, "expected: cocycle <name> over <space> degree <n> {");
    }
    let name = words[1].to_string();
    let Some(space) = doc.spaces.get(words[3]).cloned() else {
        return err(start, 1, format!("unknown space '{}'", words[3]));
    };
    let Ok(degree) = words[5].parse::<usize>() else {
        return err(start, 6, "degree must be a number");
    };
    let mut system = TransitionSystem::identity(space.clone(), degree);
    loop {
        let Some((line_no, line)) = lines.next() else {
            return err(start, 1, "unterminated cocycle block");
        };
        if line == "}" {
            break;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 4 || words[0] != "pair" || words[3] != "{" {
            return err(line_no, 1, "expected: pair <i> <j> {");
        }
        let (Ok(i), Ok(j)) = (words[1].parse::<usize>(), words[2].parse::<usize>()) else {
            return err(line_no, 6, "chart indices must be numbers");
        };
        if i >= space.chart_count() || j >= space.chart_count() || i == j {
            return err(line_no, 6, "chart indices out of range");
        }
        loop {
            let Some((line_no, line)) = lines.next() else {
                return err(start, 1, "unterminated pair block");
            };
            if line == "}" {
                break;
            }
            let Some((vertex_label, value)) = line.split_once("->") else {
                return err(line_no, 1, "expected: <vertex> -> (cycles; phases)");
            };
            let Some(x) = space.vertex_by_label(vertex_label.trim()) else {
                return err(line_no, 1, format!("unknown vertex '{}'", vertex_label.trim()));
            };
            let value = value.trim();
            if !value.starts_with('(') || !value.ends_with(')') {
                return err(line_no, 1, "group element must look like (cycles; phases)");
            }
            let inner = &value[1..value.len() - 1];
            let Some((cycles, phases)) = inner.rsplit_once(';') else {
                return err(line_no, 1, "missing ';' between cycles and phases");
            };
            let Some(perm) = parse_cycles(cycles.trim(), degree) else {
                return err(line_no, 1, format!("bad cycle notation '{}'", cycles.trim()));
            };
            let mut phase_values = Vec::new();
            for token in phases.split_whitespace() {
                let column = line.find(token).map(|c| c + 1).unwrap_or(1);
                let Some(z) = parse_phase(token) else {
                    return err(line_no, column, format!("bad phase token '{token}'"));
                };
                phase_values.push(z);
            }
            if phase_values.len() != degree {
                return err(line_no, 1, format!("expected {degree} phases"));
            }
            let element = DiagPermUnitary::new(perm, phase_values)
                .map_err(|e| ParseError { line: line_no, column: 1, message: e.to_string() })?;
            system.set(i, j, x, element);
        }
    }
    doc.cocycles.insert(name, system);
    Ok(())
}

fn parse_correspondence(
    doc: &mut Document,
    lines: &mut Lines,
    start: usize,
    words: &[&str],
) -> Result<(), ParseError> {
    if words.len() != 3 || words[2] != "{" {
        return err(start, 1, "expected: correspondence <name> {");
    }
    let name = words[1].to_string();
    let mut target: Option<SharedSpace> = None;
    let mut cocycle: Option<TransitionSystem> = None;
    let mut ranges: Vec<(usize, String, String)> = Vec::new();
    loop {
        let Some((line_no, line)) = lines.next() else {
            return err(start, 1, "unterminated correspondence block");
        };
        if line == "}" {
            break;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        match words.first() {
            Some(&"base") => {
                // The base is implied by the cocycle; accept and check it.
                if words.len() != 2 || !doc.spaces.contains_key(words[1]) {
                    return err(line_no, 1, "expected: base <known-space>");
                }
            }
            Some(&"target") => {
                let Some(space) = words.get(1).and_then(|n| doc.spaces.get(*n)) else {
                    return err(line_no, 1, "expected: target <known-space>");
                };
                target = Some(space.clone());
            }
            Some(&"cocycle") => {
                let Some(system) = words.get(1).and_then(|n| doc.cocycles.get(*n)) else {
                    return err(line_no, 1, "expected: cocycle <known-cocycle>");
                };
                cocycle = Some(system.clone());
            }
            Some(&"range") => {
                if words.len() != 2 || words[1] != "{" {
                    return err(line_no, 1, "expected: range {");
                }
                loop {
                    let Some((line_no, line)) = lines.next() else {
                        return err(start, 1, "unterminated range block");
                    };
                    if line == "}" {
                        break;
                    }
                    let Some((z, y)) = line.split_once("->") else {
                        return err(line_no, 1, "expected: <total-vertex> -> <target-vertex>");
                    };
                    ranges.push((line_no, z.trim().to_string(), y.trim().to_string()));
                }
            }
            _ => return err(line_no, 1, format!("unexpected line '{line}'")),
        }
    }
    let Some(target) = target else {
        return err(start, 1, "correspondence needs a target space");
    };
    let Some(system) = cocycle else {
        return err(start, 1, "correspondence needs a cocycle");
    };
    let (covering, line_bundle) = build_twisted_covering(&system)
        .map_err(|e| ParseError { line: start, column: 1, message: e.to_string() })?;
    let label_of: BTreeMap<String, usize> = (0..covering.total_count())
        .map(|z| (covering.vertex_label(z), z))
        .collect();
    let mut range = vec![usize::MAX; covering.total_count()];
    for (line_no, z_label, y_label) in ranges {
        let Some(&z) = label_of.get(&z_label) else {
            return err(line_no, 1, format!("unknown total vertex '{z_label}'"));
        };
        let Some(y) = target.vertex_by_label(&y_label) else {
            return err(line_no, 1, format!("unknown target vertex '{y_label}'"));
        };
        range[z] = y;
    }
    if let Some(z) = range.iter().position(|&y| y == usize::MAX) {
        return err(start, 1, format!("range missing for '{}'", covering.vertex_label(z)));
    }
    let corr = TwistedCorrespondence::new(covering, line_bundle, target, range)
        .map_err(|e| ParseError { line: start, column: 1, message: e.to_string() })?;
    doc.correspondences.insert(name, corr);
    Ok(())
}

/// Emit a document in the input grammar; `parse_input(emit(d))` recovers
/// equal objects.
pub fn emit(doc: &Document) -> String {
    let mut out = String::new();
    for (name, space) in &doc.spaces {
        out.push_str(&format!("space {name} {{\n"));
        let labels: Vec<&str> = space.vertices().map(|v| space.label(v)).collect();
        out.push_str(&format!("  vertices: {}\n", labels.join(" ")));
        let edges: Vec<String> = space
            .edges()
            .map(|(a, b)| format!("({} {})", space.label(a), space.label(b)))
            .collect();
        out.push_str(&format!("  edges: {}\n", edges.join(" ")));
        for i in 0..space.chart_count() {
            let chart: Vec<&str> = space.chart(i).iter().map(|&v| space.label(v)).collect();
            out.push_str(&format!("  chart: {}\n", chart.join(" ")));
        }
        out.push_str("}\n");
    }
    for (name, system) in &doc.cocycles {
        out.push_str(&format!(
            "cocycle {name} over {} degree {} {{\n",
            system.base.name, system.degree
        ));
        for (&(i, j), map) in system.stored() {
            out.push_str(&format!("  pair {i} {j} {{\n"));
            for (&x, g) in map {
                out.push_str(&format!("    {} -> {}\n", system.base.label(x), g.display()));
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
    }
    for (name, corr) in &doc.correspondences {
        // The cocycle of the correspondence, under a reserved name.
        let system = crate::bundle::reassemble_cocycle(&corr.covering, &corr.line);
        let base_name = &corr.base().name;
        let target_name = &corr.target.name;
        out.push_str(&format!(
            "cocycle {name}-cocycle over {base_name} degree {} {{\n",
            system.degree
        ));
        for (&(i, j), map) in system.stored() {
            out.push_str(&format!("  pair {i} {j} {{\n"));
            for (&x, g) in map {
                out.push_str(&format!("    {} -> {}\n", system.base.label(x), g.display()));
            }
            out.push_str("  }\n");
        }
        out.push_str("}\n");
        out.push_str(&format!("correspondence {name} {{\n"));
        out.push_str(&format!("  base {base_name}\n"));
        out.push_str(&format!("  target {target_name}\n"));
        out.push_str(&format!("  cocycle {name}-cocycle\n"));
        out.push_str("  range {\n");
        for z in 0..corr.covering.total_count() {
            out.push_str(&format!(
                "    {} -> {}\n",
                corr.covering.vertex_label(z),
                corr.target.label(corr.range[z])
            ));
        }
        out.push_str("  }\n}\n");
    }
    out
}

/// Emit a document containing a space, a cocycle or a correspondence alone.
pub fn emit_correspondence(name: &str, corr: &TwistedCorrespondence) -> String {
    let mut doc = Document::default();
    doc.spaces.insert(corr.base().name.clone(), corr.base().clone());
    doc.spaces.insert(corr.target.name.clone(), corr.target.clone());
    doc.correspondences.insert(name.to_string(), corr.clone());
    emit(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_round_trip() {
        let samples = [
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, -1.0),
            C64::new(0.6, 0.8),
            C64::new(-0.6, -0.8),
            C64::new(std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
        ];
        for z in samples {
            let token = format_phase(&z);
            let back = parse_phase(&token).unwrap();
            assert_eq!(z.re.to_bits(), back.re.to_bits(), "{token}");
            assert_eq!(z.im.to_bits(), back.im.to_bits(), "{token}");
        }
    }

    #[test]
    fn malformed_phase_rejected() {
        assert!(parse_phase("2+").is_none());
        assert!(parse_phase("abc").is_none());
    }

    #[test]
    fn cycles_round_trip() {
        for (token, degree) in [("id", 3), ("(1 2)", 2), ("(1 2 3)(4 5)", 5)] {
            let p = parse_cycles(token, degree).unwrap();
            assert_eq!(p.cycle_string(), token);
        }
        assert!(parse_cycles("(0 1)", 2).is_none(), "points are 1-based");
        assert!(parse_cycles("(1 1)", 2).is_none());
    }

    #[test]
    fn empty_cover_is_an_error() {
        let text = "space s {\n vertices: a\n edges:\n}\n";
        let e = parse_input(text).unwrap_err();
        assert!(e.message.contains("no charts"), "{e}");
    }

    #[test]
    fn malformed_phase_reports_position() {
        let text = "\
space s {
  vertices: a b
  edges: (a b)
  chart: a b
}
cocycle c over s degree 1 {
  pair 0 0 {
  }
}
";
        // pair 0 0 is rejected before any phase parsing.
        let e = parse_input(text).unwrap_err();
        assert_eq!(e.line, 7);

        let text = "\
space s {
  vertices: a b
  edges: (a b)
  chart: a b
  chart: b a
}
cocycle c over s degree 1 {
  pair 0 1 {
    a -> (id; 1+junk)
  }
}
";
        let e = parse_input(text).unwrap_err();
        assert_eq!(e.line, 9);
        assert!(e.message.contains("bad phase token"), "{e}");
        assert!(e.column > 1);
    }

    #[test]
    fn gallery_documents_round_trip() {
        use crate::gallery::instances;
        for (name, corr) in [
            ("ex51", instances::example_51_circle()),
            ("plateau-r1", instances::plateau(instances::RangeChoice::First)),
            ("s2-w1", instances::s2_line_bundle_correspondence(1)),
        ] {
            let text = emit_correspondence(name, &corr);
            let doc = parse_input(&text).unwrap();
            let parsed = &doc.correspondences[name];
            assert_eq!(parsed.range, corr.range, "{name}");
            assert_eq!(*parsed.base(), *corr.base());
            assert_eq!(*parsed.target, *corr.target);
            // The reparsed phases agree exactly.
            let original = crate::bundle::reassemble_cocycle(&corr.covering, &corr.line);
            let reparsed = crate::bundle::reassemble_cocycle(&parsed.covering, &parsed.line);
            for (&(i, j), map) in original.stored() {
                for (&x, g) in map {
                    assert!(reparsed.value(i, j, x).unwrap().approx_eq(g, 0.0), "{name}");
                }
            }
            // Emitting again is byte-identical.
            assert_eq!(text, emit_correspondence(name, parsed));
        }
    }
}
