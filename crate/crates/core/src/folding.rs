//! Stallings graphs of finitely generated subgroups of a free group.
//!
//! Folding merges vertices through a union-find structure driven by a
//! worklist of vertices whose incident edges may collide. Optionally every
//! edge carries an *expression*: a word in the free group on the input
//! generators, kept so that the product of expressions along any closed path
//! at the basepoint writes the path label as a product of those generators.
//! When two edges collide the non-basepoint endpoint is re-gauged first, so
//! the surviving edge can stand in for both. That bookkeeping is what turns
//! folding into an inversion algorithm for automorphisms.
//!
//! Finished graphs are pruned to their core and relabelled in BFS order from
//! the basepoint with label-sorted edges, so two graphs of the same subgroup
//! compare equal with `==`.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;

use crate::words::{Basis, Letter, Word};

const NONE: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct RawEdge {
    src: usize,
    dst: usize,
    label: usize,
    alive: bool,
}

pub(crate) struct Folder {
    rank: usize,
    parent: Vec<usize>,
    incident: Vec<Vec<usize>>,
    edges: Vec<RawEdge>,
    exprs: Option<Vec<Word>>,
    worklist: Vec<usize>,
    stamp: Vec<u32>,
    epoch: u32,
    #[cfg(test)]
    shuffle: Option<rand_chacha::ChaCha8Rng>,
}

impl Folder {
    pub(crate) fn new(rank: usize, track: bool) -> Self {
        let mut f = Folder {
            rank,
            parent: Vec::new(),
            incident: Vec::new(),
            edges: Vec::new(),
            exprs: track.then(Vec::new),
            worklist: Vec::new(),
            stamp: Vec::new(),
            epoch: 0,
            #[cfg(test)]
            shuffle: None,
        };
        f.add_vertex();
        f
    }

    pub(crate) fn add_vertex(&mut self) -> usize {
        let v = self.parent.len();
        self.parent.push(v);
        self.incident.push(Vec::new());
        v
    }

    fn add_edge(&mut self, src: usize, dst: usize, label: usize, expr: Word) {
        let e = self.edges.len();
        self.edges.push(RawEdge { src, dst, label, alive: true });
        self.stamp.push(0);
        if let Some(ex) = self.exprs.as_mut() {
            ex.push(expr);
        }
        self.incident[src].push(e);
        if dst != src {
            self.incident[dst].push(e);
            self.worklist.push(dst);
        }
        self.worklist.push(src);
    }

    /// Adds a path reading `word` from `from` to `to` (fresh interior
    /// vertices). Traversing it forward multiplies the expressions to `expr`.
    pub(crate) fn add_path(&mut self, from: usize, to: usize, word: &Word, expr: Word) {
        let n = word.len();
        if n == 0 {
            if from != to {
                // an empty path identifies its endpoints
                self.union_plain(from, to);
            }
            return;
        }
        let mut cur = from;
        let mut expr = Some(expr);
        for (i, &l) in word.letters().iter().enumerate() {
            let next = if i + 1 == n { to } else { self.add_vertex() };
            let ex = expr.take().unwrap_or_default();
            if l.is_inverse() {
                self.add_edge(next, cur, l.generator(), ex.inverse());
            } else {
                self.add_edge(cur, next, l.generator(), ex);
            }
            cur = next;
        }
    }

    pub(crate) fn add_petal(&mut self, word: &Word, expr: Word) {
        self.add_path(0, 0, word, expr);
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    /// Merges two classes; smaller incidence list moves into the larger.
    fn link(&mut self, a: usize, b: usize) -> usize {
        let (a, b) = (self.find(a), self.find(b));
        if a == b {
            return a;
        }
        let (keep, gone) = if self.incident[a].len() >= self.incident[b].len() { (a, b) } else { (b, a) };
        self.parent[gone] = keep;
        let moved = std::mem::take(&mut self.incident[gone]);
        self.incident[keep].extend(moved);
        self.worklist.push(keep);
        keep
    }

    fn union_plain(&mut self, a: usize, b: usize) {
        self.link(a, b);
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.epoch
    }

    /// Multiplies expressions at vertex class `v`: outgoing edges on the left
    /// by `c`, incoming edges on the right by `c⁻¹`.
    fn gauge(&mut self, v: usize, c: &Word) {
        if c.is_identity() {
            return;
        }
        let epoch = self.next_epoch();
        let list = self.incident[v].clone();
        for e in list {
            if !self.edges[e].alive || self.stamp[e] == epoch {
                continue;
            }
            self.stamp[e] = epoch;
            let (s, d) = (self.edges[e].src, self.edges[e].dst);
            let (s, d) = (self.find(s), self.find(d));
            let exprs = self.exprs.as_mut().expect("gauge needs expressions");
            if s == v {
                exprs[e] = c.concat(&exprs[e]);
            }
            if d == v {
                exprs[e].append_inverse(c);
            }
        }
    }

    /// Looks for two live edges at class `v` with the same label and
    /// direction. Returns `(e1, e2, outgoing)`.
    fn find_collision(&mut self, v: usize) -> Option<(usize, usize, bool)> {
        let epoch = self.next_epoch();
        let mut seen = vec![NONE; 2 * self.rank];
        let list = std::mem::take(&mut self.incident[v]);
        let mut live = Vec::with_capacity(list.len());
        let mut found = None;
        for &e in &list {
            if !self.edges[e].alive || self.stamp[e] == epoch {
                continue;
            }
            self.stamp[e] = epoch;
            live.push(e);
            if found.is_some() {
                continue;
            }
            let RawEdge { src, dst, label, .. } = self.edges[e];
            let (s, d) = (self.find(src), self.find(dst));
            for (outgoing, at) in [(true, s), (false, d)] {
                if at != v {
                    continue;
                }
                let slot = 2 * label + usize::from(!outgoing);
                if seen[slot] == NONE {
                    seen[slot] = e as u32;
                } else if found.is_none() {
                    found = Some((seen[slot] as usize, e, outgoing));
                }
            }
        }
        self.incident[v] = live;
        found
    }

    fn fold_pair(&mut self, e1: usize, e2: usize, outgoing: bool) {
        let other = |f: &mut Folder, e: usize| {
            let end = if outgoing { f.edges[e].dst } else { f.edges[e].src };
            f.find(end)
        };
        let w1 = other(self, e1);
        let w2 = other(self, e2);
        if w1 != w2 {
            if self.exprs.is_some() {
                let base = self.find(0);
                let ex = self.exprs.as_ref().unwrap();
                let (x1, x2) = (ex[e1].clone(), ex[e2].clone());
                // gauge the endpoint that is not the basepoint
                let (g, c) = match (outgoing, w2 != base) {
                    (true, true) => (w2, x1.inverse().concat(&x2)),
                    (true, false) => (w1, x2.inverse().concat(&x1)),
                    (false, true) => (w2, x1.concat(&x2.inverse())),
                    (false, false) => (w1, x2.concat(&x1.inverse())),
                };
                self.gauge(g, &c);
            }
            self.link(w1, w2);
        }
        self.edges[e2].alive = false;
    }

    pub(crate) fn fold(&mut self) {
        while let Some(v) = self.pop_work() {
            let v = self.find(v);
            if let Some((e1, e2, outgoing)) = self.find_collision(v) {
                self.fold_pair(e1, e2, outgoing);
                let v = self.find(v);
                self.worklist.push(v);
            }
        }
    }

    fn pop_work(&mut self) -> Option<usize> {
        #[cfg(test)]
        if let Some(rng) = self.shuffle.as_mut() {
            use rand::Rng;
            if self.worklist.is_empty() {
                return None;
            }
            let i = rng.gen_range(0..self.worklist.len());
            return Some(self.worklist.swap_remove(i));
        }
        self.worklist.pop()
    }

    /// Prunes to the core (keeping `keep`) and relabels in canonical BFS order.
    pub(crate) fn finish(mut self, keep: &[usize]) -> Finished {
        let n = self.parent.len();
        let roots: Vec<usize> = (0..n).map(|v| self.find(v)).collect();
        let base = roots[0];
        let mut out = vec![NONE; n * self.rank];
        let mut inc = vec![NONE; n * self.rank];
        let mut out_edge = vec![NONE; n * self.rank];
        for (e, edge) in self.edges.iter().enumerate() {
            if !edge.alive {
                continue;
            }
            let (s, d) = (roots[edge.src], roots[edge.dst]);
            out[s * self.rank + edge.label] = d as u32;
            inc[d * self.rank + edge.label] = s as u32;
            out_edge[s * self.rank + edge.label] = e as u32;
        }
        let mut kept: Vec<usize> = keep.iter().map(|&k| roots[k]).collect();
        kept.push(base);
        let raw = RawGraph { rank: self.rank, n, out, inc };
        let (graph, map) = raw.canonicalize(base, &kept);
        let marks = keep.iter().map(|&k| map[roots[k]]).collect();
        let exprs = self.exprs.map(|exprs| {
            let mut table = vec![None; graph.n * graph.rank];
            for (old, &new) in map.iter().enumerate() {
                if new == NONE as usize {
                    continue;
                }
                for label in 0..graph.rank {
                    let e = out_edge[old * graph.rank + label];
                    if e != NONE && graph.out[new * graph.rank + label] != NONE {
                        table[new * graph.rank + label] = Some(exprs[e as usize].clone());
                    }
                }
            }
            table
        });
        Finished { graph, marks, exprs }
    }
}

pub(crate) struct Finished {
    pub graph: StallingsGraph,
    pub marks: Vec<usize>,
    pub exprs: Option<Vec<Option<Word>>>,
}

/// A folded graph before pruning and relabelling.
struct RawGraph {
    rank: usize,
    n: usize,
    out: Vec<u32>,
    inc: Vec<u32>,
}

impl RawGraph {
    /// Removes non-kept vertices of degree ≤ 1 repeatedly, then relabels the
    /// component of `base` in BFS order. Returns the graph and the old→new
    /// vertex map (`usize::MAX`-ish sentinel for dropped vertices).
    fn canonicalize(mut self, base: usize, keep: &[usize]) -> (StallingsGraph, Vec<usize>) {
        let r = self.rank;
        let mut degree = vec![0usize; self.n];
        for v in 0..self.n {
            for l in 0..r {
                if self.out[v * r + l] != NONE {
                    degree[v] += 1;
                }
                if self.inc[v * r + l] != NONE {
                    degree[v] += 1;
                }
            }
        }
        let mut alive = vec![true; self.n];
        let mut stack: Vec<usize> = (0..self.n).filter(|&v| degree[v] <= 1 && !keep.contains(&v)).collect();
        while let Some(v) = stack.pop() {
            if !alive[v] || degree[v] > 1 || keep.contains(&v) {
                continue;
            }
            alive[v] = false;
            for l in 0..r {
                let d = self.out[v * r + l];
                if d != NONE {
                    let d = d as usize;
                    self.out[v * r + l] = NONE;
                    self.inc[d * r + l] = NONE;
                    if d != v {
                        degree[d] -= 1;
                        if degree[d] <= 1 {
                            stack.push(d);
                        }
                    }
                }
                let s = self.inc[v * r + l];
                if s != NONE {
                    let s = s as usize;
                    self.inc[v * r + l] = NONE;
                    self.out[s * r + l] = NONE;
                    if s != v {
                        degree[s] -= 1;
                        if degree[s] <= 1 {
                            stack.push(s);
                        }
                    }
                }
            }
        }
        let mut map = vec![NONE as usize; self.n];
        let mut order = vec![base];
        map[base] = 0;
        let mut head = 0;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for l in 0..r {
                for t in [self.out[v * r + l], self.inc[v * r + l]] {
                    if t != NONE && map[t as usize] == NONE as usize {
                        map[t as usize] = order.len();
                        order.push(t as usize);
                    }
                }
            }
        }
        let n = order.len();
        let mut out = vec![NONE; n * r];
        let mut inc = vec![NONE; n * r];
        let mut edges = 0;
        for (new, &old) in order.iter().enumerate() {
            for l in 0..r {
                let d = self.out[old * r + l];
                if d != NONE {
                    out[new * r + l] = map[d as usize] as u32;
                    edges += 1;
                }
                let s = self.inc[old * r + l];
                if s != NONE {
                    inc[new * r + l] = map[s as usize] as u32;
                }
            }
        }
        (StallingsGraph { rank: r, n, out, inc, edges }, map)
    }
}

/// Index of a subgroup in the ambient free group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Index {
    Finite(usize),
    Infinite,
}

/// Folded, based core graph of a finitely generated subgroup. Vertex 0 is
/// the basepoint; vertices are numbered in canonical BFS order, so equality
/// is label-preserving based isomorphism.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct StallingsGraph {
    rank: usize,
    n: usize,
    out: Vec<u32>,
    inc: Vec<u32>,
    edges: usize,
}

impl std::fmt::Debug for StallingsGraph {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "StallingsGraph(V={}, E={}, edges=[", self.n, self.edges)?;
        for (s, l, d) in self.edge_list() {
            write!(f, " {s}-{l}->{d}")?;
        }
        write!(f, " ])")
    }
}

impl StallingsGraph {
    /// Folded core graph of `⟨gens⟩` in the free group of the given rank.
    pub fn new(rank: usize, gens: &[Word]) -> Self {
        let mut f = Folder::new(rank, false);
        for g in gens {
            debug_assert!(g.max_generator().is_none_or(|m| m < rank));
            f.add_petal(g, Word::identity());
        }
        f.fold();
        f.finish(&[]).graph
    }

    /// The whole free group: one vertex with a loop for every label.
    pub fn rose(rank: usize) -> Self {
        let gens: Vec<Word> = (0..rank).map(Word::generator).collect();
        StallingsGraph::new(rank, &gens)
    }

    pub fn trivial(rank: usize) -> Self {
        StallingsGraph::new(rank, &[])
    }

    pub fn ambient_rank(&self) -> usize {
        self.rank
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn target(&self, v: usize, l: Letter) -> Option<usize> {
        let t = if l.is_inverse() { self.inc[v * self.rank + l.generator()] } else { self.out[v * self.rank + l.generator()] };
        (t != NONE).then_some(t as usize)
    }

    /// Follows `w` from vertex `v`; `None` if the path falls off the graph.
    pub fn read_from(&self, v: usize, w: &Word) -> Option<usize> {
        let mut cur = v;
        for &l in w.letters() {
            cur = self.target(cur, l)?;
        }
        Some(cur)
    }

    pub fn contains(&self, w: &Word) -> bool {
        self.read_from(0, w) == Some(0)
    }

    /// Edges as `(source, label, target)` in canonical order.
    pub fn edge_list(&self) -> Vec<(usize, usize, usize)> {
        let mut v = Vec::with_capacity(self.edges);
        for s in 0..self.n {
            for l in 0..self.rank {
                let d = self.out[s * self.rank + l];
                if d != NONE {
                    v.push((s, l, d as usize));
                }
            }
        }
        v
    }

    /// Rank of the subgroup: `|E| − |V| + 1`.
    pub fn rank(&self) -> usize {
        self.edges + 1 - self.n
    }

    pub fn is_trivial(&self) -> bool {
        self.edges == 0
    }

    /// Finite iff every vertex has every label both in and out; then the
    /// index is the number of vertices.
    pub fn index(&self) -> Index {
        if self.out.iter().chain(&self.inc).all(|&t| t != NONE) {
            Index::Finite(self.n)
        } else {
            Index::Infinite
        }
    }

    pub fn is_whole_group(&self) -> bool {
        self.n == 1 && self.index() == Index::Finite(1)
    }

    /// BFS spanning tree: for each vertex the label path from the basepoint,
    /// and for each edge whether it is a tree edge.
    fn spanning_tree(&self) -> (Vec<Word>, HashMap<(usize, usize), bool>) {
        let mut path = vec![None; self.n];
        path[0] = Some(Word::identity());
        let mut tree = HashMap::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(v) = queue.pop_front() {
            for l in 0..self.rank {
                for inverse in [false, true] {
                    let letter = Letter::new(l, inverse);
                    if let Some(t) = self.target(v, letter) {
                        if path[t].is_none() {
                            let mut p = path[v].clone().unwrap();
                            p.push(letter);
                            path[t] = Some(p);
                            let key = if inverse { (t, l) } else { (v, l) };
                            tree.insert(key, true);
                            queue.push_back(t);
                        }
                    }
                }
            }
        }
        (path.into_iter().map(Option::unwrap).collect(), tree)
    }

    /// A free basis: one element per edge outside a BFS spanning tree, in
    /// canonical edge order.
    pub fn free_basis(&self) -> Vec<Word> {
        let (path, tree) = self.spanning_tree();
        self.edge_list()
            .into_iter()
            .filter(|&(s, l, _)| !tree.contains_key(&(s, l)))
            .map(|(s, l, d)| {
                let mut w = path[s].clone();
                w.push(Letter::pos(l));
                w.append_inverse(&path[d]);
                w
            })
            .collect()
    }

    /// Rewrites an element of the subgroup as a word in [`free_basis`]
    /// (letter `i` stands for basis element `i`). `None` if `w ∉ H`.
    ///
    /// [`free_basis`]: StallingsGraph::free_basis
    pub fn express_in_basis(&self, w: &Word) -> Option<Word> {
        let (_, tree) = self.spanning_tree();
        let mut index = HashMap::new();
        for (i, (s, l, _)) in self.edge_list().into_iter().filter(|&(s, l, _)| !tree.contains_key(&(s, l))).enumerate() {
            index.insert((s, l), i);
        }
        let mut cur = 0;
        let mut out = Word::identity();
        for &l in w.letters() {
            let next = self.target(cur, l)?;
            let key = if l.is_inverse() { (next, l.generator()) } else { (cur, l.generator()) };
            if let Some(&i) = index.get(&key) {
                out.push(Letter::new(i, l.is_inverse()));
            }
            cur = next;
        }
        (cur == 0).then_some(out)
    }

    /// Core of the fiber product at the paired basepoints: the graph of
    /// `H₁ ∩ H₂`.
    pub fn intersect(&self, other: &StallingsGraph) -> StallingsGraph {
        assert_eq!(self.rank, other.rank, "ambient ranks differ");
        let r = self.rank;
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut pairs = vec![(0usize, 0usize)];
        ids.insert((0, 0), 0);
        let mut out = Vec::new();
        let mut inc = Vec::new();
        let mut head = 0;
        while head < pairs.len() {
            let (p, q) = pairs[head];
            out.resize((head + 1) * r, NONE);
            inc.resize((head + 1) * r, NONE);
            for l in 0..r {
                for inverse in [false, true] {
                    let letter = Letter::new(l, inverse);
                    if let (Some(p2), Some(q2)) = (self.target(p, letter), other.target(q, letter)) {
                        let next = *ids.entry((p2, q2)).or_insert_with(|| {
                            pairs.push((p2, q2));
                            pairs.len() - 1
                        });
                        if inverse {
                            inc[head * r + l] = next as u32;
                        } else {
                            out[head * r + l] = next as u32;
                        }
                    }
                }
            }
            head += 1;
        }
        // targets discovered late may not have their own rows yet
        let n = pairs.len();
        out.resize(n * r, NONE);
        inc.resize(n * r, NONE);
        RawGraph { rank: r, n, out, inc }.canonicalize(0, &[0]).0
    }

    /// Graph of `g H g⁻¹`.
    pub fn conjugate(&self, g: &Word) -> StallingsGraph {
        let gens: Vec<Word> = self.free_basis().iter().map(|b| b.conjugate_by(g)).collect();
        StallingsGraph::new(self.rank, &gens)
    }

    /// Whether two vertices, one in each graph, can be joined by a common
    /// label path (reachability in the product graph).
    pub(crate) fn product_reaches(&self, from: (usize, usize), other: &StallingsGraph, to: (usize, usize)) -> bool {
        let mut seen = std::collections::HashSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some((p, q)) = queue.pop_front() {
            if (p, q) == to {
                return true;
            }
            for code in 0..2 * self.rank {
                let l = Letter::from_code(code);
                if let (Some(p2), Some(q2)) = (self.target(p, l), other.target(q, l)) {
                    if seen.insert((p2, q2)) {
                        queue.push_back((p2, q2));
                    }
                }
            }
        }
        false
    }

    /// Vertex/edge table for terminal output.
    pub fn table(&self, basis: &Basis) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "vertices: {} (basepoint 0)", self.n);
        let _ = writeln!(s, "edges: {}", self.edges);
        for (src, l, dst) in self.edge_list() {
            let _ = writeln!(s, "  {src} --{}--> {dst}", basis.name(l));
        }
        s
    }

    /// Plain DOT description for external rendering.
    pub fn to_dot(&self, basis: &Basis) -> String {
        let mut s = String::from("digraph stallings {\n  0 [shape=doublecircle];\n");
        for v in 1..self.n {
            let _ = writeln!(s, "  {v} [shape=circle];");
        }
        for (src, l, dst) in self.edge_list() {
            let _ = writeln!(s, "  {src} -> {dst} [label=\"{}\"];", basis.name(l));
        }
        s.push_str("}\n");
        s
    }
}

/// Folded graph of a subgroup whose edges carry expressions in the original
/// generators.
pub(crate) struct TrackedGraph {
    pub graph: StallingsGraph,
    exprs: Vec<Option<Word>>,
}

impl TrackedGraph {
    /// Folds `⟨gens⟩`; generator `i` is recorded as letter `i` of the
    /// expression alphabet.
    pub fn new(rank: usize, gens: &[Word]) -> Self {
        let mut f = Folder::new(rank, true);
        for (i, g) in gens.iter().enumerate() {
            f.add_petal(g, Word::generator(i));
        }
        f.fold();
        let done = f.finish(&[]);
        TrackedGraph { graph: done.graph, exprs: done.exprs.expect("tracked fold") }
    }

    /// Writes `w ∈ ⟨gens⟩` as a word in the generators; `None` if `w ∉ ⟨gens⟩`.
    pub fn express(&self, w: &Word) -> Option<Word> {
        let r = self.graph.rank;
        let mut cur = 0;
        let mut out = Word::identity();
        for &l in w.letters() {
            let next = self.graph.target(cur, l)?;
            if l.is_inverse() {
                let ex = self.exprs[next * r + l.generator()].as_ref()?;
                out.append_inverse(ex);
            } else {
                let ex = self.exprs[cur * r + l.generator()].as_ref()?;
                out.append(ex);
            }
            cur = next;
        }
        (cur == 0).then_some(out)
    }
}

/// `g ∈ H · K` (product set), decided by product-graph reachability between
/// `Γ_H` and `Γ_K` with a hair reading `g`.
pub fn in_product_set(h: &StallingsGraph, k: &StallingsGraph, g: &Word) -> bool {
    let rank = h.rank;
    let mut f = Folder::new(rank, false);
    for b in k.free_basis() {
        f.add_petal(&b, Word::identity());
    }
    let hair = f.add_vertex();
    f.add_path(hair, 0, g, Word::identity());
    f.fold();
    let done = f.finish(&[hair]);
    // paths from the hair start to the basepoint read exactly g·K
    h.product_reaches((0, done.marks[0]), &done.graph, (0, 0))
}

/// `g ∈ H · s · K` (double coset).
pub fn in_double_coset(h: &StallingsGraph, s: &Word, k: &StallingsGraph, g: &Word) -> bool {
    // H s K = H (s K s⁻¹) s
    let k_conj = k.conjugate(s);
    let mut gs = g.clone();
    gs.append_inverse(s);
    in_product_set(h, &k_conj, &gs)
}
