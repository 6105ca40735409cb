//! Line-based text formats for graphs of groups and hierarchies.

use std::collections::HashMap;

use super::{EdgeSpec, FixedNode, FixedSplittingWitness, GraphOfGroups, NodeContent, NodeStatus, SplittingKind};
use crate::error::{Error, Result};
use crate::words::{Basis, Word};

#[derive(Default, Debug)]
struct Sections {
    ambient: Option<(usize, String)>,
    vertices: Vec<(usize, String)>,
    edges: Vec<(usize, String)>,
    witness: Vec<(usize, String)>,
    children: Vec<(usize, String)>,
    status: Option<(usize, String)>,
    seen_vertices: bool,
}

fn strip(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

fn fill(sections: &mut Sections, current: &mut &'static str, n: usize, line: &str) -> Result<()> {
    if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
        *current = match name.trim() {
            "ambient" => "ambient",
            "vertices" => {
                sections.seen_vertices = true;
                "vertices"
            }
            "edges" => "edges",
            "witness" => "witness",
            "children" => "children",
            other => return Err(Error::parse(n, format!("unknown section [{other}]"))),
        };
        return Ok(());
    }
    if let Some(rest) = line.strip_prefix("status:") {
        sections.status = Some((n, rest.trim().to_string()));
        return Ok(());
    }
    let entry = (n, line.to_string());
    match *current {
        "ambient" => {
            let gens = line.strip_prefix("gens:").ok_or_else(|| Error::parse(n, "expected `gens: ...`"))?;
            sections.ambient = Some((n, gens.trim().to_string()));
        }
        "vertices" => sections.vertices.push(entry),
        "edges" => sections.edges.push(entry),
        "witness" => sections.witness.push(entry),
        "children" => sections.children.push(entry),
        _ => return Err(Error::parse(n, "line outside any section")),
    }
    Ok(())
}

fn word(basis: &Basis, n: usize, text: &str) -> Result<Word> {
    basis.parse_word(text).map_err(|e| Error::parse(n, e.to_string()))
}

fn word_list(basis: &Basis, n: usize, text: &str) -> Result<Vec<Word>> {
    let gens = text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| word(basis, n, s)).collect::<Result<Vec<_>>>()?;
    Ok(gens.into_iter().filter(|g| !g.is_identity()).collect())
}

fn named(n: usize, line: &str) -> Result<(String, String)> {
    let (name, rest) = line.split_once(':').ok_or_else(|| Error::parse(n, "expected `NAME: ...`"))?;
    let name = name.trim();
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(Error::parse(n, format!("bad name {name:?}")));
    }
    Ok((name.to_string(), rest.trim().to_string()))
}

/// Splits `head | key: value | key: value`.
fn options(n: usize, text: &str) -> Result<(String, HashMap<String, String>)> {
    let mut parts = text.split('|');
    let head = parts.next().unwrap_or("").trim().to_string();
    let mut opts = HashMap::new();
    for p in parts {
        let (k, v) = p.split_once(':').ok_or_else(|| Error::parse(n, format!("expected `key: value`, found {:?}", p.trim())))?;
        let k = k.trim();
        if !matches!(k, "group" | "stable" | "corrector") {
            return Err(Error::parse(n, format!("unknown option {k:?}")));
        }
        if opts.insert(k.to_string(), v.trim().to_string()).is_some() {
            return Err(Error::parse(n, format!("option {k:?} given twice")));
        }
    }
    Ok((head, opts))
}

fn arrow(n: usize, text: &str) -> Result<(String, String)> {
    let (a, b) = text.split_once("->").ok_or_else(|| Error::parse(n, "expected `X -> Y`"))?;
    Ok((a.trim().to_string(), b.trim().to_string()))
}

fn build_gog(s: &Sections, basis: &Basis, default_ambient: Option<Vec<Word>>) -> Result<(GraphOfGroups, Option<FixedSplittingWitness>)> {
    let ambient = match &s.ambient {
        Some((n, text)) => Some(word_list(basis, *n, text)?),
        None => default_ambient,
    };
    let mut vertices = Vec::new();
    for (n, line) in &s.vertices {
        let (name, gens) = named(*n, line)?;
        vertices.push((name, word_list(basis, *n, &gens)?));
    }
    let mut edges = Vec::new();
    for (n, line) in &s.edges {
        let (name, rest) = named(*n, line)?;
        let (ends, opts) = options(*n, &rest)?;
        if opts.contains_key("corrector") {
            return Err(Error::parse(*n, "correctors belong in [witness]"));
        }
        let (src, dst) = arrow(*n, &ends)?;
        let group = opts.get("group").map(|g| word(basis, *n, g)).transpose()?.unwrap_or_default();
        let stable = opts.get("stable").map(|g| word(basis, *n, g)).transpose()?;
        edges.push(EdgeSpec { name, src, dst, group, stable });
    }
    let gog = GraphOfGroups::new(basis.clone(), ambient, vertices, edges)?;
    if s.witness.is_empty() {
        return Ok((gog, None));
    }
    let mut w = FixedSplittingWitness::identity(&gog);
    let (mut vseen, mut eseen) = (vec![false; gog.vertices().len()], vec![false; gog.edges().len()]);
    for (n, line) in &s.witness {
        let (ends, opts) = options(*n, line)?;
        let (a, b) = arrow(*n, &ends)?;
        let corrector = opts.get("corrector").map(|c| word(basis, *n, c)).transpose()?;
        if opts.keys().any(|k| k != "corrector") {
            return Err(Error::parse(*n, "only `corrector` is allowed in [witness]"));
        }
        if let (Some(v), Some(u)) = (gog.vertex_index(&a), gog.vertex_index(&b)) {
            if std::mem::replace(&mut vseen[v], true) {
                return Err(Error::parse(*n, format!("vertex {a} mapped twice")));
            }
            w.vertex_map[v] = u;
            w.vertex_correctors[v] = corrector.unwrap_or_default();
            continue;
        }
        let (b, rev) = match b.strip_suffix('\'') {
            Some(b) => (b.to_string(), true),
            None => (b, false),
        };
        match (gog.edge_index(&a), gog.edge_index(&b)) {
            (Some(e), Some(f)) => {
                if std::mem::replace(&mut eseen[e], true) {
                    return Err(Error::parse(*n, format!("edge {a} mapped twice")));
                }
                w.edge_map[e] = (f, rev);
                w.edge_correctors[e] = corrector;
            }
            _ => return Err(Error::parse(*n, format!("{a} -> {b} names neither two vertices nor two edges"))),
        }
    }
    Ok((gog, Some(w)))
}

/// Parses a graph of groups with an optional `[witness]` section.
pub fn parse_gog(text: &str, basis: &Basis) -> Result<(GraphOfGroups, Option<FixedSplittingWitness>)> {
    let mut s = Sections::default();
    let mut current = "";
    for (i, raw) in text.lines().enumerate() {
        let line = strip(raw);
        if !line.is_empty() {
            fill(&mut s, &mut current, i + 1, line)?;
        }
    }
    if !s.children.is_empty() || s.status.is_some() {
        return Err(Error::parse(s.children.first().or(s.status.as_ref()).map_or(0, |c| c.0), "[children] and status belong in hierarchy files"));
    }
    build_gog(&s, basis, None)
}

#[derive(Clone, Debug)]
pub struct HierarchyFile {
    pub kind: SplittingKind,
    pub root: FixedNode,
}

/// Parses a hierarchy: `kind:` then `[node NAME]` blocks, the first being the
/// root. A child node's ambient group defaults to its parent vertex group.
pub fn parse_hierarchy(text: &str, basis: &Basis) -> Result<HierarchyFile> {
    let mut kind = None;
    let mut nodes: Vec<(usize, String, Sections)> = Vec::new();
    let mut current = "";
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = strip(raw);
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix("[node ").and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_string();
            if nodes.iter().any(|(_, m, _)| *m == name) {
                return Err(Error::parse(n, format!("node {name} defined twice")));
            }
            nodes.push((n, name, Sections::default()));
            current = "";
            continue;
        }
        match nodes.last_mut() {
            None => {
                let k = line.strip_prefix("kind:").ok_or_else(|| Error::parse(n, "expected `kind: free|cyclic`"))?;
                kind = Some(match k.trim() {
                    "free" => SplittingKind::Free,
                    "cyclic" => SplittingKind::Cyclic,
                    other => return Err(Error::parse(n, format!("unknown kind {other:?}"))),
                });
            }
            Some((_, _, s)) => fill(s, &mut current, n, line)?,
        }
    }
    let kind = kind.ok_or_else(|| Error::parse(1, "missing `kind:`"))?;
    if nodes.is_empty() {
        return Err(Error::parse(1, "no [node] blocks"));
    }
    let mut used = vec![false; nodes.len()];
    used[0] = true;
    let root = build_node(&nodes, 0, basis, None, &mut used)?;
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(Error::parse(nodes[i].0, format!("node {} is not reachable from the root", nodes[i].1)));
    }
    Ok(HierarchyFile { kind, root })
}

fn build_node(nodes: &[(usize, String, Sections)], i: usize, basis: &Basis, ambient: Option<Vec<Word>>, used: &mut [bool]) -> Result<FixedNode> {
    let (n, name, s) = &nodes[i];
    let status = match &s.status {
        None => None,
        Some((m, t)) => Some(match t.as_str() {
            "absolute" => NodeStatus::Absolute,
            "no-splitting" => NodeStatus::NoSplitting,
            "unexpanded" => NodeStatus::Unexpanded,
            "split" => NodeStatus::Split,
            other => return Err(Error::parse(*m, format!("unknown status {other:?}"))),
        }),
    };
    if !s.seen_vertices {
        if !s.edges.is_empty() || !s.witness.is_empty() || !s.children.is_empty() {
            return Err(Error::parse(*n, format!("node {name} has edges or children but no [vertices]")));
        }
        return Ok(FixedNode { name: name.clone(), content: NodeContent::Terminal(status.unwrap_or(NodeStatus::Unexpanded)), children: vec![] });
    }
    if matches!(status, Some(st) if st != NodeStatus::Split) {
        return Err(Error::parse(*n, format!("node {name} has a splitting but a terminal status")));
    }
    let (gog, witness) = build_gog(s, basis, ambient)?;
    let witness = witness.unwrap_or_else(|| FixedSplittingWitness::identity(&gog));
    let mut children = Vec::new();
    for (m, line) in &s.children {
        let (v, child) = arrow(*m, line)?;
        let vi = gog.vertex_index(&v).ok_or_else(|| Error::parse(*m, format!("unknown vertex {v}")))?;
        let ci = nodes.iter().position(|(_, c, _)| *c == child).ok_or_else(|| Error::parse(*m, format!("unknown node {child}")))?;
        if std::mem::replace(&mut used[ci], true) {
            return Err(Error::parse(*m, format!("node {child} is used twice")));
        }
        let child = build_node(nodes, ci, basis, Some(gog.vertices()[vi].gens.clone()), used)?;
        children.push((vi, child));
    }
    Ok(FixedNode { name: name.clone(), content: NodeContent::Split { gog: Box::new(gog), witness }, children })
}
