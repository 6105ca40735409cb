//! Growth of conjugacy classes under iteration of an automorphism.
//!
//! There are two routes. The exact route applies when no free reduction can
//! ever occur in iterated images: then every length is a column sum of a
//! power of the transition matrix, and growth type, rate and degree are read
//! off its strongly connected components. The condition is checked by
//! closing the set of turns (adjacent letter pairs) that iterated images can
//! contain and verifying that no turn cancels. Everything else goes through
//! the heuristic route, which iterates and inspects the length sequence.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::automorphisms::{Automorphism, Endomorphism};
use crate::folding::StallingsGraph;
use crate::words::{CyclicWord, Letter, Word};

/// `M[i][j]` = occurrences of generator `i` (either sign) in `Φ(generator j)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TransitionMatrix {
    entries: Vec<Vec<u64>>,
}

impl TransitionMatrix {
    pub fn of(phi: &Automorphism) -> Self {
        let r = phi.rank();
        let mut entries = vec![vec![0u64; r]; r];
        for (j, im) in phi.images().iter().enumerate() {
            for (i, c) in im.generator_counts(r).into_iter().enumerate() {
                entries[i][j] = c;
            }
        }
        TransitionMatrix { entries }
    }

    pub fn from_rows(entries: Vec<Vec<u64>>) -> Self {
        assert!(entries.iter().all(|r| r.len() == entries.len()), "matrix must be square");
        TransitionMatrix { entries }
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> u64 {
        self.entries[i][j]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.entries
    }

    /// `Mⁿ · v` with overflow detection.
    pub fn apply_power(&self, v: &[u128], n: usize) -> Option<Vec<u128>> {
        let s = self.size();
        let mut cur = v.to_vec();
        for _ in 0..n {
            let mut next = vec![0u128; s];
            for (i, row) in self.entries.iter().enumerate() {
                let mut acc = 0u128;
                for (j, &m) in row.iter().enumerate() {
                    acc = acc.checked_add((m as u128).checked_mul(cur[j])?)?;
                }
                next[i] = acc;
            }
            cur = next;
        }
        Some(cur)
    }

    /// Strongly connected components of the letter digraph (`j → i` iff
    /// `M[i][j] > 0`), in topological order: edges only go from earlier
    /// components to later ones.
    pub fn components(&self) -> Vec<Component> {
        let n = self.size();
        let succ = |j: usize| (0..n).filter(move |&i| self.entries[i][j] > 0);
        // Kosaraju: finishing order on the graph, then sweep the transpose
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for s in 0..n {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut stack = vec![(s, succ(s).collect::<Vec<_>>(), 0usize)];
            while let Some((v, next, idx)) = stack.last_mut() {
                if *idx < next.len() {
                    let u = next[*idx];
                    *idx += 1;
                    if !seen[u] {
                        seen[u] = true;
                        let nu = succ(u).collect();
                        stack.push((u, nu, 0));
                    }
                } else {
                    order.push(*v);
                    stack.pop();
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut members: Vec<Vec<usize>> = Vec::new();
        for &s in order.iter().rev() {
            if comp[s] != usize::MAX {
                continue;
            }
            let c = members.len();
            members.push(Vec::new());
            let mut stack = vec![s];
            comp[s] = c;
            while let Some(v) = stack.pop() {
                members[c].push(v);
                // predecessors of v: j with M[v][j] > 0
                for j in 0..n {
                    if self.entries[v][j] > 0 && comp[j] == usize::MAX {
                        comp[j] = c;
                        stack.push(j);
                    }
                }
            }
        }
        let comps = members
            .into_iter()
            .map(|mut m| {
                m.sort_unstable();
                let block: Vec<Vec<u64>> = m.iter().map(|&i| m.iter().map(|&j| self.entries[i][j]).collect()).collect();
                let class = classify_block(&block);
                let radius = match class {
                    BlockClass::Zero => 0.0,
                    BlockClass::Unit => 1.0,
                    BlockClass::Expanding => block_radius(&block),
                };
                let successors = Vec::new();
                Component { members: m, class, radius, successors }
            })
            .collect::<Vec<_>>();
        link_successors(comps, self, &comp)
    }

    /// Largest spectral radius over all components.
    pub fn spectral_radius(&self) -> f64 {
        self.components().iter().map(|c| c.radius).fold(0.0, f64::max)
    }
}

fn link_successors(mut comps: Vec<Component>, m: &TransitionMatrix, comp: &[usize]) -> Vec<Component> {
    let n = m.size();
    for j in 0..n {
        for i in 0..n {
            if m.entries[i][j] > 0 && comp[i] != comp[j] {
                let s = &mut comps[comp[j]].successors;
                if !s.contains(&comp[i]) {
                    s.push(comp[i]);
                }
            }
        }
    }
    for c in &mut comps {
        c.successors.sort_unstable();
    }
    comps
}

/// Exact classification of an irreducible block by its spectral radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlockClass {
    /// A single letter not occurring in its own image: radius 0.
    Zero,
    /// A permutation block: radius exactly 1.
    Unit,
    /// Radius > 1.
    Expanding,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Component {
    pub members: Vec<usize>,
    pub class: BlockClass,
    pub radius: f64,
    /// Indices of components reachable by one edge.
    pub successors: Vec<usize>,
}

/// An irreducible nonnegative integer block has radius 1 iff it is a
/// permutation matrix, i.e. every row sums to 1; a larger row sum forces
/// radius > 1.
fn classify_block(block: &[Vec<u64>]) -> BlockClass {
    if block.len() == 1 && block[0][0] == 0 {
        return BlockClass::Zero;
    }
    if block.iter().all(|row| row.iter().sum::<u64>() == 1) {
        BlockClass::Unit
    } else {
        BlockClass::Expanding
    }
}

/// Power iteration on `B + I` (primitive for irreducible `B`), relative
/// tolerance 1e-10; falls back to the Gelfand estimate `‖B⁶⁴‖^{1/64}`.
fn block_radius(block: &[Vec<u64>]) -> f64 {
    let n = block.len();
    let mut v = vec![1.0f64; n];
    let mut lambda = 0.0f64;
    for _ in 0..100_000 {
        let mut next = v.clone();
        for i in 0..n {
            for j in 0..n {
                next[i] += block[i][j] as f64 * v[j];
            }
        }
        let norm: f64 = next.iter().sum();
        let prev: f64 = v.iter().sum();
        let est = norm / prev;
        next.iter_mut().for_each(|x| *x /= norm);
        v = next;
        if (est - lambda).abs() <= 1e-10 * est {
            return est - 1.0;
        }
        lambda = est;
    }
    gelfand_radius(block, 64)
}

fn gelfand_radius(block: &[Vec<u64>], k: u32) -> f64 {
    let n = block.len();
    let mut p: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let mut log_scale = 0.0f64;
    for _ in 0..k {
        let mut q = vec![vec![0.0; n]; n];
        for i in 0..n {
            for l in 0..n {
                if block[i][l] == 0 {
                    continue;
                }
                for j in 0..n {
                    q[i][j] += block[i][l] as f64 * p[l][j];
                }
            }
        }
        let norm = q.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
        if norm > 0.0 {
            q.iter_mut().flatten().for_each(|x| *x /= norm);
            log_scale += norm.ln();
        }
        p = q;
    }
    (log_scale / f64::from(k)).exp()
}

/// Outcome of the no-cancellation check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    /// No iterated image of the checked classes ever freely reduces.
    Certified,
    /// `Φ(x)·Φ(y)` cancels for the turn `(x, y)`, which occurs in iterated images.
    Failed { turn: (Letter, Letter), left: Word, right: Word },
}

impl Certificate {
    pub fn is_certified(&self) -> bool {
        matches!(self, Certificate::Certified)
    }
}

fn turn_closure(endo: &Endomorphism, seeds: impl IntoIterator<Item = (Letter, Letter)>) -> Certificate {
    let image = |l: Letter| -> Word {
        let w = endo.image(l.generator());
        if l.is_inverse() {
            w.inverse()
        } else {
            w.clone()
        }
    };
    let mut seen: HashSet<(Letter, Letter)> = HashSet::new();
    let mut queue: VecDeque<(Letter, Letter)> = VecDeque::new();
    let mut letters_done: HashSet<Letter> = HashSet::new();
    let push = |t: (Letter, Letter), seen: &mut HashSet<_>, queue: &mut VecDeque<_>| {
        if seen.insert(t) {
            queue.push_back(t);
            seen.insert((t.1.inverse(), t.0.inverse()));
            queue.push_back((t.1.inverse(), t.0.inverse()));
        }
    };
    for t in seeds {
        push(t, &mut seen, &mut queue);
    }
    while let Some((x, y)) = queue.pop_front() {
        let (fx, fy) = (image(x), image(y));
        for (l, im) in [(x, &fx), (y, &fy)] {
            if letters_done.insert(l) {
                for pair in im.letters().windows(2) {
                    push((pair[0], pair[1]), &mut seen, &mut queue);
                }
            }
        }
        match (fx.last(), fy.first()) {
            (Some(p), Some(q)) if p == q.inverse() => {
                return Certificate::Failed { turn: (x, y), left: fx, right: fy };
            }
            (Some(p), Some(q)) => push((p, q), &mut seen, &mut queue),
            // a collapsing letter makes its neighbours adjacent: not tracked
            _ => return Certificate::Failed { turn: (x, y), left: fx, right: fy },
        }
    }
    Certificate::Certified
}

/// Checks that iterated images of every generator class never reduce. The
/// turn set starts from the turns inside each image and the wraparound turn
/// `(z, z)` of each one-letter class, and is closed under `(x, y) ↦
/// (last Φ(x), first Φ(y))`.
pub fn no_cancellation_certificate(phi: impl AsRef<Endomorphism>) -> Certificate {
    let phi = phi.as_ref();
    let r = phi.rank();
    let mut seeds = Vec::new();
    for im in phi.images() {
        for p in im.letters().windows(2) {
            seeds.push((p[0], p[1]));
        }
    }
    for g in 0..r {
        seeds.push((Letter::pos(g), Letter::pos(g)));
    }
    turn_closure(phi, seeds)
}

/// Same check seeded only from the cyclic turns of `x`.
pub fn class_certificate(phi: impl AsRef<Endomorphism>, x: &CyclicWord) -> Certificate {
    turn_closure(phi.as_ref(), x.turns().collect::<Vec<_>>())
}

/// `‖Φⁿ(x)‖` for `n = 1..=iterations`, stopping once a length exceeds `cap`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LengthSequence {
    pub lengths: Vec<u64>,
    pub truncated: bool,
}

pub fn length_sequence(phi: &Automorphism, x: &CyclicWord, iterations: usize, cap: u64) -> LengthSequence {
    let endo = phi.endomorphism();
    let mut cur = x.to_word();
    let mut lengths = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut next = Word::identity();
        for &l in cur.letters() {
            endo.push_image(&mut next, l);
            if next.len() as u64 > cap.saturating_mul(2) {
                break;
            }
        }
        let core = CyclicWord::new(&next);
        let len = core.len() as u64;
        if len > cap || next.len() as u64 > cap.saturating_mul(2) {
            return LengthSequence { lengths, truncated: true };
        }
        lengths.push(len);
        cur = core.to_word();
    }
    LengthSequence { lengths, truncated: false }
}

/// Lengths predicted by the transition matrix: `Σ_i (Mⁿ c)_i` where `c`
/// counts the letters of `x`. Exact when `x` is certified.
pub fn matrix_lengths(m: &TransitionMatrix, x: &CyclicWord, iterations: usize) -> Option<Vec<u128>> {
    let mut v: Vec<u128> = x.to_word().generator_counts(m.size()).into_iter().map(u128::from).collect();
    let mut out = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        v = m.apply_power(&v, 1)?;
        out.push(v.iter().try_fold(0u128, |a, &b| a.checked_add(b))?);
    }
    Some(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainDegree {
    Degree(usize),
    NotPolynomial,
}

/// Degree from the component chain: if every component reachable from the
/// letters of `x` (all components when `x` is `None`) has radius ≤ 1, the
/// degree is one less than the largest number of radius-1 components on a
/// path of the condensation.
pub fn scc_polynomial_degree(m: &TransitionMatrix, x: Option<&CyclicWord>) -> ChainDegree {
    let comps = m.components();
    let starts = start_components(&comps, x);
    let reach = reachable(&comps, &starts);
    if reach.iter().any(|&c| comps[c].class == BlockClass::Expanding) {
        return ChainDegree::NotPolynomial;
    }
    // components are topologically ordered, so a reverse sweep suffices
    let mut best = vec![0usize; comps.len()];
    for c in (0..comps.len()).rev() {
        let own = usize::from(comps[c].class == BlockClass::Unit);
        best[c] = own + comps[c].successors.iter().map(|&s| best[s]).max().unwrap_or(0);
    }
    let chain = starts.iter().map(|&c| best[c]).max().unwrap_or(0);
    ChainDegree::Degree(chain.saturating_sub(1))
}

fn start_components(comps: &[Component], x: Option<&CyclicWord>) -> Vec<usize> {
    match x {
        None => (0..comps.len()).collect(),
        Some(x) => {
            let gens: HashSet<usize> = x.letters().iter().map(|l| l.generator()).collect();
            (0..comps.len()).filter(|&c| comps[c].members.iter().any(|m| gens.contains(m))).collect()
        }
    }
}

fn reachable(comps: &[Component], starts: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; comps.len()];
    let mut stack: Vec<usize> = starts.to_vec();
    for &s in starts {
        seen[s] = true;
    }
    while let Some(c) = stack.pop() {
        for &s in &comps[c].successors {
            if !seen[s] {
                seen[s] = true;
                stack.push(s);
            }
        }
    }
    (0..comps.len()).filter(|&c| seen[c]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GrowthKind {
    Exponential,
    Polynomial,
    HeuristicExponential,
    HeuristicPolynomial,
    Inconclusive,
}

impl GrowthKind {
    /// Exponential / polynomial ignoring how the verdict was reached.
    pub fn family(self) -> Option<GrowthKind> {
        match self {
            GrowthKind::Exponential | GrowthKind::HeuristicExponential => Some(GrowthKind::Exponential),
            GrowthKind::Polynomial | GrowthKind::HeuristicPolynomial => Some(GrowthKind::Polynomial),
            GrowthKind::Inconclusive => None,
        }
    }

    pub fn is_exponential(self) -> bool {
        self.family() == Some(GrowthKind::Exponential)
    }

    pub fn is_polynomial(self) -> bool {
        self.family() == Some(GrowthKind::Polynomial)
    }
}

/// Budgets for the heuristic route.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GrowthParams {
    pub iterations: usize,
    pub cap: u64,
    pub margin: f64,
    pub max_degree: usize,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams { iterations: 40, cap: 1_000_000, margin: 0.05, max_degree: 6 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evidence {
    /// `certified`, or the failing turn as `x y`.
    pub certificate: String,
    pub eigenvalue: Option<f64>,
    /// Members of each component on the longest radius-1 chain.
    pub scc_chain: Vec<Vec<usize>>,
    /// `‖Φⁿ(x)‖^{1/n}` for the sampled tail.
    pub root_estimates: Vec<f64>,
    pub truncated: bool,
    /// Class-level summaries backing a whole-map verdict.
    pub classes: Vec<ClassSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassSummary {
    pub class: String,
    pub kind: GrowthKind,
    pub rate: Option<f64>,
    pub degree: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthReport {
    pub subject: String,
    pub kind: GrowthKind,
    pub certified: bool,
    pub rate: Option<f64>,
    pub degree: Option<usize>,
    pub lengths: Vec<u64>,
    pub evidence: Evidence,
}

impl GrowthReport {
    fn new(subject: String, kind: GrowthKind, certified: bool) -> Self {
        GrowthReport {
            subject,
            kind,
            certified,
            rate: None,
            degree: None,
            lengths: Vec::new(),
            evidence: Evidence {
                certificate: String::new(),
                eigenvalue: None,
                scc_chain: Vec::new(),
                root_estimates: Vec::new(),
                truncated: false,
                classes: Vec::new(),
            },
        }
    }
}

fn describe_certificate(phi: &Automorphism, c: &Certificate) -> String {
    match c {
        Certificate::Certified => "certified".into(),
        Certificate::Failed { turn, .. } => {
            let b = phi.basis();
            format!("failed at turn {}", b.format_word(&Word::from_letters([turn.0]).concat(&Word::letter(turn.1))))
        }
    }
}

/// Exact report from the matrix route, restricted to what `x` reaches.
fn exact_report(phi: &Automorphism, subject: String, x: Option<&CyclicWord>, params: &GrowthParams) -> GrowthReport {
    let m = TransitionMatrix::of(phi);
    let comps = m.components();
    let starts = start_components(&comps, x);
    let reach = reachable(&comps, &starts);
    let radius = reach.iter().map(|&c| comps[c].radius).fold(0.0, f64::max);
    let mut report;
    match scc_polynomial_degree(&m, x) {
        ChainDegree::NotPolynomial => {
            report = GrowthReport::new(subject, GrowthKind::Exponential, true);
            report.rate = Some(radius);
            report.evidence.eigenvalue = Some(radius);
        }
        ChainDegree::Degree(d) => {
            report = GrowthReport::new(subject, GrowthKind::Polynomial, true);
            report.degree = Some(d);
            report.rate = Some(1.0);
            report.evidence.eigenvalue = Some(radius);
            report.evidence.scc_chain = longest_chain(&comps, &starts);
        }
    }
    report.evidence.certificate = "certified".into();
    // lengths of the heaviest class for the record
    let witness = match x {
        Some(x) => x.clone(),
        None => heaviest_generator(phi, &m),
    };
    let seq = length_sequence(phi, &witness, params.iterations, params.cap);
    report.evidence.root_estimates = root_estimates(&seq.lengths);
    report.evidence.truncated = seq.truncated;
    report.lengths = seq.lengths;
    report
}

fn heaviest_generator(phi: &Automorphism, m: &TransitionMatrix) -> CyclicWord {
    let comps = m.components();
    let mut best = (0usize, 0usize, 0.0f64);
    for g in 0..phi.rank() {
        let x = CyclicWord::new(&Word::generator(g));
        let reach = reachable(&comps, &start_components(&comps, Some(&x)));
        let r = reach.iter().map(|&c| comps[c].radius).fold(0.0, f64::max);
        let d = match scc_polynomial_degree(m, Some(&x)) {
            ChainDegree::Degree(d) => d,
            ChainDegree::NotPolynomial => usize::MAX,
        };
        if (d, r) > (best.1, best.2) || g == 0 {
            best = (g, d, r);
        }
    }
    CyclicWord::new(&Word::generator(best.0))
}

fn longest_chain(comps: &[Component], starts: &[usize]) -> Vec<Vec<usize>> {
    let mut best = vec![0usize; comps.len()];
    let mut next = vec![None; comps.len()];
    for c in (0..comps.len()).rev() {
        let own = usize::from(comps[c].class == BlockClass::Unit);
        let succ = comps[c].successors.iter().copied().max_by_key(|&s| (best[s], std::cmp::Reverse(s)));
        best[c] = own + succ.map_or(0, |s| best[s]);
        next[c] = succ;
    }
    let Some(mut c) = starts.iter().copied().max_by_key(|&c| (best[c], std::cmp::Reverse(c))) else {
        return Vec::new();
    };
    let mut chain = Vec::new();
    loop {
        if comps[c].class == BlockClass::Unit {
            chain.push(comps[c].members.clone());
        }
        match next[c] {
            Some(s) => c = s,
            None => break,
        }
    }
    chain
}

fn root_estimates(lengths: &[u64]) -> Vec<f64> {
    lengths.iter().enumerate().map(|(i, &l)| (l as f64).powf(1.0 / (i + 1) as f64)).collect()
}

/// Least `k ≤ max_k` whose `k`-th differences vanish on the tail
/// `n ≥ len/2`, if the tail is long enough to show it.
fn vanishing_difference_order(lengths: &[u64], max_k: usize) -> Option<usize> {
    let tail: Vec<i128> = lengths[lengths.len() / 2..].iter().map(|&l| l as i128).collect();
    let mut diff = tail;
    for k in 1..=max_k {
        diff = diff.windows(2).map(|w| w[1] - w[0]).collect();
        // need at least two samples of the k-th difference
        if diff.len() < 2 {
            return None;
        }
        if diff.iter().all(|&d| d == 0) {
            return Some(k);
        }
    }
    None
}

/// Heuristic verdict from a length sequence alone.
pub fn classify_lengths(seq: &LengthSequence, params: &GrowthParams) -> (GrowthKind, Option<f64>, Option<usize>) {
    let l = &seq.lengths;
    if !seq.truncated {
        if let Some(k) = vanishing_difference_order(l, params.max_degree) {
            return (GrowthKind::HeuristicPolynomial, Some(1.0), Some(k - 1));
        }
    }
    const WINDOW: usize = 10;
    if l.len() >= WINDOW {
        let roots = root_estimates(l);
        let tail = &roots[roots.len() - WINDOW..];
        let lens = &l[l.len() - WINDOW..];
        let above = tail.iter().all(|&r| r >= 1.0 + params.margin);
        let growing = lens.windows(2).all(|w| w[1] > w[0]);
        if above && growing {
            return (GrowthKind::HeuristicExponential, roots.last().copied(), None);
        }
    }
    (GrowthKind::Inconclusive, None, None)
}

fn heuristic_class_report(phi: &Automorphism, x: &CyclicWord, cert: &Certificate, params: &GrowthParams) -> GrowthReport {
    let seq = length_sequence(phi, x, params.iterations, params.cap);
    let (kind, rate, degree) = classify_lengths(&seq, params);
    let mut report = GrowthReport::new(phi.basis().format_word(&x.to_word()), kind, false);
    report.rate = rate;
    report.degree = degree;
    report.evidence.certificate = describe_certificate(phi, cert);
    report.evidence.root_estimates = root_estimates(&seq.lengths);
    report.evidence.truncated = seq.truncated;
    report.lengths = seq.lengths;
    report
}

/// Growth of one conjugacy class.
pub fn classify_class(phi: &Automorphism, x: &CyclicWord, params: &GrowthParams) -> GrowthReport {
    let subject = phi.basis().format_word(&x.to_word());
    if x.is_empty() {
        let mut r = GrowthReport::new(subject, GrowthKind::Polynomial, true);
        r.degree = Some(0);
        r.rate = Some(1.0);
        r.evidence.certificate = "trivial class".into();
        r.lengths = vec![0; params.iterations];
        return r;
    }
    let cert = class_certificate(phi, x);
    if cert.is_certified() {
        exact_report(phi, subject, Some(x), params)
    } else {
        heuristic_class_report(phi, x, &cert, params)
    }
}

/// Classes sampled for a whole-map heuristic verdict: the generators and
/// the products `zᵢ zⱼ`, `zᵢ zⱼ⁻¹` for `i < j`.
pub fn test_classes(rank: usize) -> Vec<CyclicWord> {
    let mut out: Vec<CyclicWord> = (0..rank).map(|g| CyclicWord::new(&Word::generator(g))).collect();
    for i in 0..rank {
        for j in i + 1..rank {
            out.push(CyclicWord::new(&Word::from_letters([Letter::pos(i), Letter::pos(j)])));
            out.push(CyclicWord::new(&Word::from_letters([Letter::pos(i), Letter::neg(j)])));
        }
    }
    out
}

/// Growth of the map (`x = None`) or of one class.
pub fn classify_growth(phi: &Automorphism, x: Option<&CyclicWord>, params: &GrowthParams) -> GrowthReport {
    if let Some(x) = x {
        return classify_class(phi, x, params);
    }
    let cert = no_cancellation_certificate(phi);
    if cert.is_certified() {
        return exact_report(phi, "map".into(), None, params);
    }
    let classes = test_classes(phi.rank());
    let reports: Vec<GrowthReport> = classes.par_iter().map(|c| classify_class(phi, c, params)).collect();
    aggregate(phi, reports, &cert)
}

fn aggregate(phi: &Automorphism, reports: Vec<GrowthReport>, cert: &Certificate) -> GrowthReport {
    let summaries: Vec<ClassSummary> = reports
        .iter()
        .map(|r| ClassSummary { class: r.subject.clone(), kind: r.kind, rate: r.rate, degree: r.degree })
        .collect();
    let by_rate = |a: &&GrowthReport, b: &&GrowthReport| a.rate.unwrap_or(0.0).total_cmp(&b.rate.unwrap_or(0.0));
    let exact_exp = reports.iter().filter(|r| r.kind == GrowthKind::Exponential).max_by(by_rate);
    let any_exp = reports.iter().filter(|r| r.kind.is_exponential()).max_by(by_rate);
    let mut out = if let Some(best) = exact_exp.or(any_exp) {
        // one exponentially growing class settles the map
        let certified = best.kind == GrowthKind::Exponential;
        let kind = if certified { GrowthKind::Exponential } else { GrowthKind::HeuristicExponential };
        let mut r = GrowthReport::new("map".into(), kind, certified);
        r.rate = best.rate;
        r.lengths = best.lengths.clone();
        r.evidence.root_estimates = best.evidence.root_estimates.clone();
        r.evidence.truncated = best.evidence.truncated;
        r.evidence.eigenvalue = best.evidence.eigenvalue;
        r
    } else if reports.iter().all(|r| r.kind.is_polynomial()) {
        let best = reports.iter().max_by_key(|r| r.degree.unwrap_or(0)).expect("rank ≥ 1");
        let mut r = GrowthReport::new("map".into(), GrowthKind::HeuristicPolynomial, false);
        r.degree = best.degree;
        r.rate = Some(1.0);
        r.lengths = best.lengths.clone();
        r.evidence.root_estimates = best.evidence.root_estimates.clone();
        r.evidence.truncated = best.evidence.truncated;
        r
    } else {
        let mut r = GrowthReport::new("map".into(), GrowthKind::Inconclusive, false);
        if let Some(bad) = reports.iter().find(|r| r.kind == GrowthKind::Inconclusive) {
            r.lengths = bad.lengths.clone();
            r.evidence.truncated = bad.evidence.truncated;
            r.evidence.root_estimates = bad.evidence.root_estimates.clone();
        }
        r
    };
    out.evidence.certificate = describe_certificate(phi, cert);
    out.evidence.classes = summaries;
    out
}

/// Outcome of probing a subgroup for polynomially growing classes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ProbeOutcome {
    /// Every probed element grows polynomially (a heuristic statement).
    AllPolynomial { probed: usize },
    FoundExponential { witness: String, rate: Option<f64> },
    /// Some element could not be classified within budget.
    Inconclusive { probed: usize, unresolved: String },
}

/// Classifies the basis of `H` and up to 100 short products of basis
/// elements. A probe, not a computation of the polynomial subgroup system.
pub fn polynomial_probe(phi: &Automorphism, h: &StallingsGraph, params: &GrowthParams) -> ProbeOutcome {
    const LIMIT: usize = 100;
    let basis = h.free_basis();
    let mut elements: Vec<Word> = basis.clone();
    let mut seen: HashSet<CyclicWord> = elements.iter().map(CyclicWord::new).collect();
    let signed: Vec<Word> = basis.iter().flat_map(|b| [b.clone(), b.inverse()]).collect();
    let mut frontier = basis.clone();
    while elements.len() < LIMIT && !frontier.is_empty() {
        let mut next = Vec::new();
        'outer: for f in &frontier {
            for s in &signed {
                let p = f.concat(s);
                if p.is_identity() || !seen.insert(CyclicWord::new(&p)) {
                    continue;
                }
                elements.push(p.clone());
                next.push(p);
                if elements.len() >= LIMIT {
                    break 'outer;
                }
            }
        }
        frontier = next;
    }
    let reports: Vec<(Word, GrowthReport)> =
        elements.par_iter().map(|e| (e.clone(), classify_class(phi, &CyclicWord::new(e), params))).collect();
    if let Some((w, r)) = reports.iter().find(|(_, r)| r.kind.is_exponential()) {
        return ProbeOutcome::FoundExponential { witness: phi.basis().format_word(w), rate: r.rate };
    }
    if let Some((w, _)) = reports.iter().find(|(_, r)| r.kind == GrowthKind::Inconclusive) {
        return ProbeOutcome::Inconclusive { probed: reports.len(), unresolved: phi.basis().format_word(w) };
    }
    ProbeOutcome::AllPolynomial { probed: reports.len() }
}
