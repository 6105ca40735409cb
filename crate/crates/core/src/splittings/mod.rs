//! Graphs of groups for splittings of the fiber `F`, verification that a
//! splitting is fixed by the monodromy, the induced splitting of the
//! mapping torus, and hierarchy bookkeeping.
//!
//! A splitting is stored as its quotient graph of groups. Each vertex carries
//! a subgroup of the ambient free group. Edges whose `stable` word is absent
//! form a spanning tree, and their edge group is identified by the same word
//! in both endpoint groups. A non-tree edge `e: u → v` with stable letter `s`
//! has edge generator `y ∈ G_u` and `s⁻¹ y s ∈ G_v`.
//!
//! The monodromy is given as an element `g = x·tⁿ` of the mapping torus and
//! acts on `F` by `θ(a) = g a g⁻¹`; for the whole map, `g = t`.

mod text;

use serde::Serialize;

pub use text::{parse_gog, parse_hierarchy, HierarchyFile};

use crate::error::{Error, Result};
use crate::folding::{in_double_coset, StallingsGraph};
use crate::mapping_torus::{TorusElement, TorusGroup};
use crate::words::{Basis, Word};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GogVertex {
    pub name: String,
    pub gens: Vec<Word>,
    pub group: StallingsGraph,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GogEdge {
    pub name: String,
    pub src: usize,
    pub dst: usize,
    /// Edge group generator; the identity for a trivial edge group.
    pub group: Word,
    /// Present exactly on edges outside the spanning tree.
    pub stable: Option<Word>,
}

impl GogEdge {
    pub fn is_trivial(&self) -> bool {
        self.group.is_identity()
    }

    fn stable_or_identity(&self) -> Word {
        self.stable.clone().unwrap_or_default()
    }
}

/// Input shape for an edge before validation.
#[derive(Clone, Debug)]
pub struct EdgeSpec {
    pub name: String,
    pub src: String,
    pub dst: String,
    pub group: Word,
    pub stable: Option<Word>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphOfGroups {
    basis: Basis,
    ambient: StallingsGraph,
    vertices: Vec<GogVertex>,
    edges: Vec<GogEdge>,
}

impl GraphOfGroups {
    /// Builds and validates. `ambient` defaults to the whole free group.
    pub fn new(basis: Basis, ambient: Option<Vec<Word>>, vertices: Vec<(String, Vec<Word>)>, edges: Vec<EdgeSpec>) -> Result<Self> {
        let r = basis.rank();
        for w in ambient.iter().flatten().chain(vertices.iter().flat_map(|(_, g)| g)) {
            basis.check(w)?;
        }
        for e in &edges {
            basis.check(&e.group)?;
            if let Some(s) = &e.stable {
                basis.check(s)?;
            }
        }
        let ambient = match ambient {
            Some(gens) => StallingsGraph::new(r, &gens),
            None => StallingsGraph::rose(r),
        };
        let vertices: Vec<GogVertex> = vertices
            .into_iter()
            .map(|(name, gens)| {
                let group = StallingsGraph::new(r, &gens);
                GogVertex { name, gens, group }
            })
            .collect();
        let index = |name: &str| {
            vertices.iter().position(|v| v.name == name).ok_or_else(|| Error::Violation(format!("edge endpoint {name:?} is not a vertex")))
        };
        let mut resolved = Vec::with_capacity(edges.len());
        for e in edges {
            resolved.push(GogEdge { src: index(&e.src)?, dst: index(&e.dst)?, name: e.name, group: e.group, stable: e.stable });
        }
        let gog = GraphOfGroups { basis, ambient, vertices, edges: resolved };
        gog.validate()?;
        Ok(gog)
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn ambient(&self) -> &StallingsGraph {
        &self.ambient
    }

    pub fn vertices(&self) -> &[GogVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[GogEdge] {
        &self.edges
    }

    /// All edge groups trivial.
    pub fn is_free(&self) -> bool {
        self.edges.iter().all(GogEdge::is_trivial)
    }

    pub fn vertex_index(&self, name: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v.name == name)
    }

    pub fn edge_index(&self, name: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.name == name)
    }

    /// Checks every structural invariant; the error names the first failure.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Violation(m));
        if self.vertices.is_empty() {
            return bad("graph of groups has no vertices".into());
        }
        let mut names: Vec<&str> = self.vertices.iter().map(|v| v.name.as_str()).chain(self.edges.iter().map(|e| e.name.as_str())).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return bad(format!("name {:?} is used twice", w[0]));
        }
        let fmt = |w: &Word| self.basis.format_word(w);
        for e in &self.edges {
            if !e.group.is_identity() && !e.group.is_cyclically_reduced() {
                return bad(format!("edge {}: generator {} is not cyclically reduced", e.name, fmt(&e.group)));
            }
        }
        // tree edges must form a spanning tree
        let n = self.vertices.len();
        let tree: Vec<&GogEdge> = self.edges.iter().filter(|e| e.stable.is_none()).collect();
        if tree.len() + 1 != n {
            return bad(format!("{} edges without a stable letter, but a spanning tree on {n} vertices needs {}", tree.len(), n - 1));
        }
        let mut parent: Vec<usize> = (0..n).collect();
        fn root(p: &mut [usize], mut v: usize) -> usize {
            while p[v] != v {
                p[v] = p[p[v]];
                v = p[v];
            }
            v
        }
        for e in &tree {
            let (a, b) = (root(&mut parent, e.src), root(&mut parent, e.dst));
            if a == b {
                return bad(format!("tree edges close a cycle at edge {}", e.name));
            }
            parent[a] = b;
        }
        for e in &self.edges {
            let (src, dst) = (&self.vertices[e.src], &self.vertices[e.dst]);
            if !src.group.contains(&e.group) {
                return bad(format!("edge {}: {} is not in the group at {}", e.name, fmt(&e.group), src.name));
            }
            let far = match &e.stable {
                Some(s) => e.group.conjugate_by(&s.inverse()),
                None => e.group.clone(),
            };
            if !dst.group.contains(&far) {
                return bad(format!("edge {}: {} is not in the group at {}", e.name, fmt(&far), dst.name));
            }
        }
        let mut gens: Vec<Word> = Vec::new();
        for v in &self.vertices {
            for g in &v.gens {
                if !self.ambient.contains(g) {
                    return bad(format!("vertex {}: {} is outside the ambient group", v.name, fmt(g)));
                }
                gens.push(g.clone());
            }
        }
        for e in &self.edges {
            if let Some(s) = &e.stable {
                if !self.ambient.contains(s) {
                    return bad(format!("edge {}: stable letter {} is outside the ambient group", e.name, fmt(s)));
                }
                gens.push(s.clone());
            }
        }
        if StallingsGraph::new(self.basis.rank(), &gens) != self.ambient {
            return bad("vertex groups and stable letters do not generate the ambient group".into());
        }
        // χ(π₁) = Σ χ(G_v) − Σ χ(G_e), with χ = 1 − rank
        let lhs = 1 - self.ambient.rank() as i64;
        let rhs: i64 = self.vertices.iter().map(|v| 1 - v.group.rank() as i64).sum::<i64>() - self.edges.iter().filter(|e| e.is_trivial()).count() as i64;
        if lhs != rhs {
            return bad(format!("Euler characteristic mismatch: ambient {lhs}, graph of groups {rhs}"));
        }
        Ok(())
    }
}

/// A graph automorphism `σ` with corrector words, claimed to realise the
/// monodromy on the splitting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedSplittingWitness {
    pub vertex_map: Vec<usize>,
    pub vertex_correctors: Vec<Word>,
    /// Image edge and whether it is traversed backwards.
    pub edge_map: Vec<(usize, bool)>,
    /// Defaults to the corrector of the source vertex.
    pub edge_correctors: Vec<Option<Word>>,
}

impl FixedSplittingWitness {
    pub fn identity(gog: &GraphOfGroups) -> Self {
        FixedSplittingWitness {
            vertex_map: (0..gog.vertices.len()).collect(),
            vertex_correctors: vec![Word::identity(); gog.vertices.len()],
            edge_map: (0..gog.edges.len()).map(|e| (e, false)).collect(),
            edge_correctors: vec![None; gog.edges.len()],
        }
    }

    fn edge_corrector(&self, gog: &GraphOfGroups, e: usize) -> Word {
        self.edge_correctors[e].clone().unwrap_or_else(|| self.vertex_correctors[gog.edges[e].src].clone())
    }

    /// Smallest `n ≥ 1` with `σⁿ(v) = v`.
    pub fn vertex_period(&self, v: usize) -> usize {
        let mut cur = self.vertex_map[v];
        let mut n = 1;
        while cur != v {
            cur = self.vertex_map[cur];
            n += 1;
        }
        n
    }

    /// Smallest `n ≥ 1` with `σⁿ(e) = e` with the same orientation.
    pub fn edge_period(&self, e: usize) -> usize {
        self.edge_orbit(e).len()
    }

    /// Steps `(edge, reversed so far)` of the oriented orbit starting at `e`.
    fn edge_orbit(&self, e: usize) -> Vec<(usize, bool)> {
        let mut out = vec![(e, false)];
        let (mut cur, mut flipped) = self.edge_map[e];
        while (cur, flipped) != (e, false) {
            out.push((cur, flipped));
            let (next, rev) = self.edge_map[cur];
            cur = next;
            flipped ^= rev;
        }
        out
    }
}

fn is_permutation(map: &[usize], n: usize) -> bool {
    let mut seen = vec![false; n];
    map.len() == n && map.iter().all(|&v| v < n && !std::mem::replace(&mut seen[v], true))
}

/// `θ(w) = g w g⁻¹` for `g` in the mapping torus.
fn act(torus: &TorusGroup, g: &TorusElement, w: &Word) -> Word {
    torus.conjugate(&TorusElement::fiber(w.clone()), g).w
}

/// Checks the witness; the error says which condition fails.
pub fn check_fixed(gog: &GraphOfGroups, torus: &TorusGroup, g: &TorusElement, w: &FixedSplittingWitness) -> Result<()> {
    let reject = |m: String| Err(Error::WitnessRejected(m));
    let (nv, ne) = (gog.vertices.len(), gog.edges.len());
    if torus.rank() != gog.basis.rank() {
        return Err(Error::BasisMismatch);
    }
    if w.vertex_correctors.len() != nv || w.edge_correctors.len() != ne {
        return reject("corrector lists do not match the graph".into());
    }
    if !is_permutation(&w.vertex_map, nv) {
        return reject("vertex map is not a permutation".into());
    }
    let edge_targets: Vec<usize> = w.edge_map.iter().map(|&(e, _)| e).collect();
    if !is_permutation(&edge_targets, ne) {
        return reject("edge map is not a permutation".into());
    }
    let fmt = |x: &Word| gog.basis.format_word(x);
    for (i, e) in gog.edges.iter().enumerate() {
        let (j, rev) = w.edge_map[i];
        let f = &gog.edges[j];
        let (s, d) = if rev { (f.dst, f.src) } else { (f.src, f.dst) };
        if w.vertex_map[e.src] != s || w.vertex_map[e.dst] != d {
            return reject(format!("edge map {} -> {} does not respect endpoints", e.name, f.name));
        }
        if e.is_trivial() != f.is_trivial() {
            return reject(format!("edge {} and its image {} have different edge group types", e.name, f.name));
        }
    }
    for (i, v) in gog.vertices.iter().enumerate() {
        let target = &gog.vertices[w.vertex_map[i]];
        let x = &w.vertex_correctors[i];
        for b in v.group.free_basis() {
            let img = act(torus, g, &b).conjugate_by(x);
            if !target.group.contains(&img) {
                return reject(format!("vertex {}: image {} of {} is not in the group at {}", v.name, fmt(&img), fmt(&b), target.name));
            }
        }
    }
    for (i, e) in gog.edges.iter().enumerate() {
        let (j, rev) = w.edge_map[i];
        let f = &gog.edges[j];
        let xs = &w.vertex_correctors[e.src];
        let xe = w.edge_corrector(gog, i);
        let src_img = w.vertex_map[e.src];
        let dst_img = w.vertex_map[e.dst];
        let mut shift = xe.clone();
        shift.append_inverse(xs);
        if !gog.vertices[src_img].group.contains(&shift) {
            return reject(format!("edge {}: corrector differs from the source corrector outside the group at {}", e.name, gog.vertices[src_img].name));
        }
        if !e.is_trivial() {
            let img = act(torus, g, &e.group).conjugate_by(&xe);
            let target = if rev { f.group.conjugate_by(&f.stable_or_identity().inverse()) } else { f.group.clone() };
            if !StallingsGraph::new(gog.basis.rank(), std::slice::from_ref(&target)).contains(&img) {
                return reject(format!("edge {}: image {} of the edge generator is not in ⟨{}⟩", e.name, fmt(&img), fmt(&target)));
            }
        }
        // the path element across e must land in the right double coset
        let mut lhs = xs.clone();
        lhs.append(&act(torus, g, &e.stable_or_identity()));
        lhs.append_inverse(&w.vertex_correctors[e.dst]);
        let path = if rev { f.stable_or_identity().inverse() } else { f.stable_or_identity() };
        if !in_double_coset(&gog.vertices[src_img].group, &path, &gog.vertices[dst_img].group, &lhs) {
            return reject(format!("edge {}: {} is not in G_{} · {} · G_{}", e.name, fmt(&lhs), gog.vertices[src_img].name, fmt(&path), gog.vertices[dst_img].name));
        }
    }
    Ok(())
}

/// Whether the witness shows the splitting is fixed by `Φ` (`g = t`).
pub fn verify_fixed(gog: &GraphOfGroups, phi: &TorusGroup, witness: &FixedSplittingWitness) -> bool {
    check_fixed(gog, phi, &TorusElement::stable_letter(), witness).is_ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SplittingKind {
    Free,
    Cyclic,
    /// Edge groups `Z`, induced from a free splitting.
    Z,
    /// Edge groups `Z` or `Z ⋊ Z`, induced from a cyclic splitting.
    Slender,
}

/// Isomorphism type of an induced vertex or edge group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GroupTag {
    /// Infinite cyclic, generated by the first-return element.
    Z,
    /// `⟨y⟩ ⋊ ⟨g⟩` with `g y g⁻¹ = y`.
    Z2,
    /// `⟨y⟩ ⋊ ⟨g⟩` with `g y g⁻¹ = y⁻¹`.
    Klein,
    FreeByCyclic { rank: usize },
}

impl GroupTag {
    pub fn twist(self) -> Option<i8> {
        match self {
            GroupTag::Z2 => Some(1),
            GroupTag::Klein => Some(-1),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusVertex {
    pub name: String,
    pub members: Vec<usize>,
    pub period: usize,
    /// A free basis of the fiber part.
    pub fiber: Vec<Word>,
    /// First-return element `x·tⁿ`.
    pub stable: TorusElement,
    pub tag: GroupTag,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusEdge {
    pub name: String,
    pub members: Vec<usize>,
    pub src: usize,
    pub dst: usize,
    pub period: usize,
    /// Edge generator `y` (identity if trivial).
    pub fiber: Word,
    pub stable: TorusElement,
    pub tag: GroupTag,
}

/// Graph of groups for the mapping torus: the quotient by `σ`-orbits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorusSplitting {
    pub kind: SplittingKind,
    pub vertices: Vec<TorusVertex>,
    pub edges: Vec<TorusEdge>,
}

/// Composite corrector for a walk: `cₖ₋₁ ⋯ c₀` with `cⱼ = xⱼ·g`.
fn first_return(torus: &TorusGroup, g: &TorusElement, correctors: impl IntoIterator<Item = Word>) -> TorusElement {
    let mut acc = TorusElement::identity();
    for x in correctors {
        let step = torus.multiply(&TorusElement::fiber(x), g);
        acc = torus.multiply(&step, &acc);
    }
    acc
}

fn twist_tag(torus: &TorusGroup, basis: &Basis, y: &Word, s: &TorusElement, what: &str) -> Result<GroupTag> {
    let img = torus.conjugate(&TorusElement::fiber(y.clone()), s);
    debug_assert_eq!(img.k, 0);
    if img.w == *y {
        Ok(GroupTag::Z2)
    } else if img.w == y.inverse() {
        Ok(GroupTag::Klein)
    } else {
        Err(Error::Violation(format!("{what}: first return sends {} to {}, not to its generator or inverse", basis.format_word(y), basis.format_word(&img.w))))
    }
}

/// The splitting of `G` induced by a fixed splitting of `F`.
pub fn induce_torus_splitting(gog: &GraphOfGroups, torus: &TorusGroup, witness: &FixedSplittingWitness) -> Result<TorusSplitting> {
    if gog.ambient.rank() <= 1 {
        return Err(Error::CyclicFiber);
    }
    induce_with(gog, torus, &TorusElement::stable_letter(), witness)
}

/// As [`induce_torus_splitting`] for the monodromy `a ↦ g a g⁻¹` of a
/// subgroup; cyclic ambient groups are allowed here.
pub fn induce_with(gog: &GraphOfGroups, torus: &TorusGroup, g: &TorusElement, witness: &FixedSplittingWitness) -> Result<TorusSplitting> {
    check_fixed(gog, torus, g, witness)?;
    let basis = &gog.basis;
    let mut vertex_orbit = vec![usize::MAX; gog.vertices.len()];
    let mut vertices = Vec::new();
    for v in 0..gog.vertices.len() {
        if vertex_orbit[v] != usize::MAX {
            continue;
        }
        let period = witness.vertex_period(v);
        let mut members = Vec::with_capacity(period);
        let mut cur = v;
        for _ in 0..period {
            vertex_orbit[cur] = vertices.len();
            members.push(cur);
            cur = witness.vertex_map[cur];
        }
        let stable = first_return(torus, g, members.iter().map(|&u| witness.vertex_correctors[u].clone()));
        let fiber = gog.vertices[v].group.free_basis();
        let tag = match fiber.len() {
            0 => GroupTag::Z,
            1 => twist_tag(torus, basis, &fiber[0], &stable, &format!("vertex {}", gog.vertices[v].name))?,
            rank => GroupTag::FreeByCyclic { rank },
        };
        vertices.push(TorusVertex { name: gog.vertices[v].name.clone(), members, period, fiber, stable, tag });
    }
    let mut seen = vec![false; gog.edges.len()];
    let mut edges = Vec::new();
    for e in 0..gog.edges.len() {
        if seen[e] {
            continue;
        }
        let orbit = witness.edge_orbit(e);
        let mut members: Vec<usize> = orbit.iter().map(|&(f, _)| f).collect();
        for &m in &members {
            seen[m] = true;
        }
        members.sort_unstable();
        members.dedup();
        // a step landing on a reversed edge re-bases across its stable letter
        let correctors = orbit.iter().map(|&(f, _)| {
            let (img, rev) = witness.edge_map[f];
            let xe = witness.edge_corrector(gog, f);
            if rev {
                gog.edges[img].stable_or_identity().concat(&xe)
            } else {
                xe
            }
        });
        let stable = first_return(torus, g, correctors.collect::<Vec<_>>());
        let edge = &gog.edges[e];
        let tag = if edge.is_trivial() {
            GroupTag::Z
        } else {
            twist_tag(torus, basis, &edge.group, &stable, &format!("edge {}", edge.name))?
        };
        edges.push(TorusEdge {
            name: edge.name.clone(),
            members,
            src: vertex_orbit[edge.src],
            dst: vertex_orbit[edge.dst],
            period: orbit.len(),
            fiber: edge.group.clone(),
            stable,
            tag,
        });
    }
    let kind = if gog.is_free() { SplittingKind::Z } else { SplittingKind::Slender };
    Ok(TorusSplitting { kind, vertices, edges })
}

impl TorusSplitting {
    /// `g y g⁻¹ ∈ ⟨y⟩` for every induced edge group `⟨y, g⟩`.
    pub fn relators_sound(&self, torus: &TorusGroup) -> bool {
        self.edges.iter().all(|e| {
            let img = torus.conjugate(&TorusElement::fiber(e.fiber.clone()), &e.stable);
            img.k == 0 && StallingsGraph::new(torus.rank(), std::slice::from_ref(&e.fiber)).contains(&img.w)
        })
    }

    pub fn describe(&self, torus: &TorusGroup) -> String {
        let b = torus.basis();
        let mut out = format!("kind: {:?}\n", self.kind);
        for v in &self.vertices {
            let mut gens: Vec<String> = v.fiber.iter().map(|w| b.format_word(w)).collect();
            gens.push(torus.format(&v.stable));
            out.push_str(&format!("vertex {} (period {}): ⟨{}⟩ {}\n", v.name, v.period, gens.join(", "), tag_text(v.tag)));
        }
        for e in &self.edges {
            let mut gens = Vec::new();
            if !e.fiber.is_identity() {
                gens.push(b.format_word(&e.fiber));
            }
            gens.push(torus.format(&e.stable));
            let (s, d) = (&self.vertices[e.src].name, &self.vertices[e.dst].name);
            out.push_str(&format!("edge {} {s} -> {d} (period {}): ⟨{}⟩ {}\n", e.name, e.period, gens.join(", "), tag_text(e.tag)));
        }
        out
    }
}

pub fn tag_text(tag: GroupTag) -> String {
    match tag {
        GroupTag::Z => "Z".into(),
        GroupTag::Z2 => "Z^2 (twist +1)".into(),
        GroupTag::Klein => "K (twist -1)".into(),
        GroupTag::FreeByCyclic { rank } => format!("F{rank} x| Z"),
    }
}

/// Terminal status of a hierarchy node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeStatus {
    /// Split, with children.
    Split,
    Absolute,
    NoSplitting,
    Unexpanded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Completeness {
    Complete,
    Incomplete,
    /// Some terminal node was never expanded.
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HierarchyNode {
    pub name: String,
    pub group: String,
    pub splitting: Option<String>,
    pub status: NodeStatus,
    pub children: Vec<usize>,
}

/// Family tree of iterated splittings; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Hierarchy {
    pub kind: SplittingKind,
    pub nodes: Vec<HierarchyNode>,
}

impl Hierarchy {
    /// Number of edges on the longest root-to-leaf branch.
    pub fn depth(&self) -> usize {
        fn go(h: &Hierarchy, n: usize) -> usize {
            h.nodes[n].children.iter().map(|&c| 1 + go(h, c)).max().unwrap_or(0)
        }
        if self.nodes.is_empty() {
            0
        } else {
            go(self, 0)
        }
    }

    pub fn completeness(&self) -> Completeness {
        let terminal = self.nodes.iter().filter(|n| n.children.is_empty());
        let mut all_absolute = true;
        for n in terminal {
            match n.status {
                NodeStatus::Unexpanded => return Completeness::Unknown,
                NodeStatus::Absolute => {}
                _ => all_absolute = false,
            }
        }
        if all_absolute {
            Completeness::Complete
        } else {
            Completeness::Incomplete
        }
    }

    pub fn is_complete(&self) -> Option<bool> {
        match self.completeness() {
            Completeness::Complete => Some(true),
            Completeness::Incomplete => Some(false),
            Completeness::Unknown => None,
        }
    }
}

/// A user-authored fixed hierarchy of `F`, before verification.
#[derive(Clone, Debug)]
pub struct FixedNode {
    pub name: String,
    pub content: NodeContent,
    /// Child for a vertex (by index) of this node's splitting.
    pub children: Vec<(usize, FixedNode)>,
}

#[derive(Clone, Debug)]
pub enum NodeContent {
    Split { gog: Box<GraphOfGroups>, witness: FixedSplittingWitness },
    Terminal(NodeStatus),
}

/// Both sides of a verified hierarchy.
#[derive(Clone, Debug)]
pub struct VerifiedHierarchy {
    pub fiber: Hierarchy,
    pub torus: Hierarchy,
    pub splittings: Vec<(String, TorusSplitting)>,
}

/// Verifies every node and builds the `F`-side and induced `G`-side trees.
/// `family` is [`SplittingKind::Free`] or [`SplittingKind::Cyclic`].
pub fn verify_hierarchy(torus: &TorusGroup, family: SplittingKind, root: &FixedNode) -> Result<VerifiedHierarchy> {
    let g_kind = match family {
        SplittingKind::Free => SplittingKind::Z,
        SplittingKind::Cyclic => SplittingKind::Slender,
        _ => return Err(Error::InvalidArgument("hierarchy family must be free or cyclic".into())),
    };
    let mut out = VerifiedHierarchy {
        fiber: Hierarchy { kind: family, nodes: Vec::new() },
        torus: Hierarchy { kind: g_kind, nodes: Vec::new() },
        splittings: Vec::new(),
    };
    let rank = torus.rank();
    let ambient: Vec<Word> = (0..rank).map(Word::generator).collect();
    visit(torus, family, root, &ambient, &TorusElement::stable_letter(), &mut out)?;
    Ok(out)
}

fn visit(torus: &TorusGroup, family: SplittingKind, node: &FixedNode, gens: &[Word], g: &TorusElement, out: &mut VerifiedHierarchy) -> Result<usize> {
    let b = torus.basis();
    let rank = torus.rank();
    let group = StallingsGraph::new(rank, gens);
    let basis_words = group.free_basis();
    let show: Vec<String> = basis_words.iter().map(|w| b.format_word(w)).collect();
    let f_group = format!("⟨{}⟩", show.join(", "));
    let mut g_show = show.clone();
    g_show.push(torus.format(g));
    let g_group = format!("⟨{}⟩", g_show.join(", "));
    let id = out.fiber.nodes.len();
    out.fiber.nodes.push(HierarchyNode { name: node.name.clone(), group: f_group, splitting: None, status: NodeStatus::Unexpanded, children: vec![] });
    out.torus.nodes.push(HierarchyNode { name: node.name.clone(), group: g_group, splitting: None, status: NodeStatus::Unexpanded, children: vec![] });
    let violation = |m: String| Err(Error::Violation(format!("node {}: {m}", node.name)));
    match &node.content {
        NodeContent::Terminal(status) => {
            if !node.children.is_empty() {
                return violation("a node without a splitting cannot have children".into());
            }
            let absolute_ok = match family {
                SplittingKind::Free => group.is_trivial(),
                _ => group.rank() <= 1,
            };
            if *status == NodeStatus::Absolute && !absolute_ok {
                return violation("marked absolute but has no splitting".into());
            }
            if *status == NodeStatus::Split {
                return violation("marked split but has no splitting".into());
            }
            out.fiber.nodes[id].status = *status;
            out.torus.nodes[id].status = *status;
        }
        NodeContent::Split { gog, witness } => {
            if *gog.ambient() != group {
                return violation("the splitting is not of this node's group".into());
            }
            if family == SplittingKind::Free && !gog.is_free() {
                return violation("free hierarchy with a nontrivial edge group".into());
            }
            let induced = induce_with(gog, torus, g, witness).map_err(|e| Error::Violation(format!("node {}: {e}", node.name)))?;
            let qualifies = |v: &GogVertex| match family {
                SplittingKind::Free => !v.group.is_trivial(),
                _ => v.group.rank() >= 2,
            };
            // one child per orbit of qualifying vertices
            let mut expected: Vec<usize> = induced
                .vertices
                .iter()
                .enumerate()
                .filter(|(_, tv)| qualifies(&gog.vertices()[tv.members[0]]))
                .map(|(i, _)| i)
                .collect();
            let orbit_of = |v: usize| induced.vertices.iter().position(|tv| tv.members.contains(&v));
            let mut children = Vec::new();
            for (v, child) in &node.children {
                let Some(o) = (*v < gog.vertices().len()).then(|| orbit_of(*v)).flatten() else {
                    return violation(format!("child {} is attached to a missing vertex", child.name));
                };
                let Some(pos) = expected.iter().position(|&x| x == o) else {
                    return violation(format!("child {} does not match a remaining qualifying vertex orbit", child.name));
                };
                expected.remove(pos);
                // the first return at v itself, not at the orbit representative
                let tv = &induced.vertices[o];
                let start = tv.members.iter().position(|&m| m == *v).expect("member of its orbit");
                let order: Vec<usize> = tv.members[start..].iter().chain(&tv.members[..start]).copied().collect();
                let child_g = first_return(torus, g, order.iter().map(|&u| witness.vertex_correctors[u].clone()));
                let child_id = visit(torus, family, child, &gog.vertices()[*v].gens, &child_g, out)?;
                children.push(child_id);
            }
            if let Some(&o) = expected.first() {
                return violation(format!("vertex {} needs a child", induced.vertices[o].name));
            }
            let summary = format!("{}, {}", count(gog.vertices().len(), "vertex", "vertices"), count(gog.edges().len(), "edge", "edges"));
            let g_summary = format!("{}, {}", count(induced.vertices.len(), "vertex orbit", "vertex orbits"), count(induced.edges.len(), "edge orbit", "edge orbits"));
            let status = if children.is_empty() { NodeStatus::Absolute } else { NodeStatus::Split };
            for (side, s) in [(&mut out.fiber, summary), (&mut out.torus, g_summary)] {
                side.nodes[id].splitting = Some(s);
                side.nodes[id].status = status;
                side.nodes[id].children = children.clone();
            }
            out.splittings.push((node.name.clone(), induced));
        }
    }
    Ok(id)
}

fn count(n: usize, one: &str, many: &str) -> String {
    format!("{n} {}", if n == 1 { one } else { many })
}
