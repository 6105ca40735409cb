//! The mapping torus `G = F ⋊_Φ Z = ⟨F, t | t x t⁻¹ = Φ(x)⟩`.
//!
//! Elements are kept in the normal form `w·tᵏ`. Moving `t` rightward past a
//! word applies `Φ`, so `(w₁, k₁)(w₂, k₂) = (w₁·Φ^{k₁}(w₂), k₁ + k₂)`.

use serde::Serialize;

use crate::automorphisms::Automorphism;
use crate::error::{Error, Result};
use crate::folding::{StallingsGraph, TrackedGraph};
use crate::words::{Basis, Letter, Word};

/// Normal form `w·tᵏ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TorusElement {
    pub w: Word,
    pub k: i64,
}

impl TorusElement {
    pub fn new(w: Word, k: i64) -> Self {
        TorusElement { w, k }
    }

    pub fn identity() -> Self {
        TorusElement { w: Word::identity(), k: 0 }
    }

    pub fn fiber(w: Word) -> Self {
        TorusElement { w, k: 0 }
    }

    pub fn stable_letter() -> Self {
        TorusElement { w: Word::identity(), k: 1 }
    }

    pub fn is_identity(&self) -> bool {
        self.k == 0 && self.w.is_identity()
    }

    pub fn in_fiber(&self) -> bool {
        self.k == 0
    }
}

/// A letter of the presentation alphabet `basis ∪ {t}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorusLetter {
    Fiber(Letter),
    /// `t` (`true`) or `t⁻¹` (`false`).
    Stable(bool),
}

#[derive(Clone, Debug)]
pub struct TorusGroup {
    phi: Automorphism,
    extended: Basis,
}

impl TorusGroup {
    pub fn new(phi: Automorphism) -> Result<Self> {
        let names = phi.basis().names().iter().cloned().chain(["t".to_string()]);
        let extended = Basis::new(names).map_err(|e| match e {
            Error::DuplicateGenerator(_) => Error::InvalidArgument("generator name `t` is reserved for the stable letter".into()),
            e => e,
        })?;
        Ok(TorusGroup { phi, extended })
    }

    pub fn automorphism(&self) -> &Automorphism {
        &self.phi
    }

    pub fn basis(&self) -> &Basis {
        self.phi.basis()
    }

    pub fn rank(&self) -> usize {
        self.phi.rank()
    }

    pub fn multiply(&self, a: &TorusElement, b: &TorusElement) -> TorusElement {
        let mut w = a.w.clone();
        w.append(&self.phi.apply_power(&b.w, a.k));
        TorusElement { w, k: a.k + b.k }
    }

    pub fn invert(&self, g: &TorusElement) -> TorusElement {
        TorusElement { w: self.phi.apply_power(&g.w.inverse(), -g.k), k: -g.k }
    }

    pub fn power(&self, g: &TorusElement, n: i64) -> TorusElement {
        let base = if n < 0 { self.invert(g) } else { g.clone() };
        let mut acc = TorusElement::identity();
        let mut sq = base;
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.multiply(&acc, &sq);
            }
            e >>= 1;
            if e > 0 {
                sq = self.multiply(&sq, &sq);
            }
        }
        acc
    }

    /// `g·h·g⁻¹`.
    pub fn conjugate(&self, h: &TorusElement, g: &TorusElement) -> TorusElement {
        self.multiply(&self.multiply(g, h), &self.invert(g))
    }

    /// Left-to-right accumulation of a word in `basis ∪ {t}`.
    pub fn normalize(&self, letters: &[TorusLetter]) -> TorusElement {
        let mut acc = TorusElement::identity();
        for &l in letters {
            match l {
                TorusLetter::Fiber(x) => {
                    let img = self.phi.apply_power(&Word::letter(x), acc.k);
                    acc.w.append(&img);
                }
                TorusLetter::Stable(up) => acc.k += if up { 1 } else { -1 },
            }
        }
        acc
    }

    /// Parses a word over the generators and `t` (same token syntax as words).
    pub fn parse_letters(&self, text: &str) -> Result<Vec<TorusLetter>> {
        let r = self.rank();
        Ok(self
            .extended
            .parse_letters(text)?
            .into_iter()
            .map(|l| if l.generator() == r { TorusLetter::Stable(!l.is_inverse()) } else { TorusLetter::Fiber(l) })
            .collect())
    }

    pub fn parse(&self, text: &str) -> Result<TorusElement> {
        Ok(self.normalize(&self.parse_letters(text)?))
    }

    /// `w t^k` in the word syntax, e.g. `b a t^2`, `t'`, `1`.
    pub fn format(&self, g: &TorusElement) -> String {
        let t = match g.k {
            0 => None,
            1 => Some("t".to_string()),
            -1 => Some("t'".to_string()),
            k => Some(format!("t^{k}")),
        };
        match (g.w.is_identity(), t) {
            (true, None) => "1".into(),
            (true, Some(t)) => t,
            (false, None) => self.basis().format_word(&g.w),
            (false, Some(t)) => format!("{} {t}", self.basis().format_word(&g.w)),
        }
    }

    /// Defining relators `t a t⁻¹ Φ(a)⁻¹`, one per generator.
    pub fn relators(&self) -> Vec<Vec<TorusLetter>> {
        (0..self.rank())
            .map(|g| {
                let mut r = vec![TorusLetter::Stable(true), TorusLetter::Fiber(Letter::pos(g)), TorusLetter::Stable(false)];
                r.extend(self.phi.images()[g].inverse().letters().iter().map(|&l| TorusLetter::Fiber(l)));
                r
            })
            .collect()
    }

    /// Relative presentation, e.g. `⟨a,b,t | tat⁻¹=a, tbt⁻¹=ba⟩`.
    pub fn presentation(&self) -> String {
        let b = self.basis();
        let single = b.names().iter().all(|n| n.chars().count() == 1);
        let sep = if single { "" } else { " " };
        let gens: Vec<&str> = b.names().iter().map(String::as_str).chain(["t"]).collect();
        let rels: Vec<String> = (0..self.rank())
            .map(|g| format!("t{sep}{}{sep}t⁻¹={}", b.name(g), b.format_compact(&self.phi.images()[g])))
            .collect();
        format!("⟨{} | {}⟩", gens.join(","), rels.join(", "))
    }

    /// Evaluates a word in the letters `0..gens.len()` as a product of `gens`.
    pub fn evaluate(&self, expr: &Word, gens: &[TorusElement]) -> TorusElement {
        let mut acc = TorusElement::identity();
        for &l in expr.letters() {
            let g = &gens[l.generator()];
            let g = if l.is_inverse() { self.invert(g) } else { g.clone() };
            acc = self.multiply(&acc, &g);
        }
        acc
    }

    /// `⟨gens⟩ ∩ F`, by saturating the fiber parts under conjugation by a
    /// stable element found with the Euclidean algorithm on `t`-exponents.
    pub fn fiber_intersection(&self, gens: &[TorusElement], budget: SaturationBudget) -> Result<FiberIntersection> {
        let stable = self.stable_element(gens)?;
        self.fiber_intersection_with(gens, &stable, budget)
    }

    /// As [`fiber_intersection`](Self::fiber_intersection), with the stable
    /// element given as a word in the generators. Its `t`-exponent must be
    /// the gcd of the generators' exponents.
    pub fn fiber_intersection_with(&self, gens: &[TorusElement], stable: &Word, budget: SaturationBudget) -> Result<FiberIntersection> {
        let n = gens.iter().fold(0i64, |g, e| gcd(g, e.k));
        if n == 0 {
            return Err(Error::NoStableLetter);
        }
        if stable.max_generator().is_some_and(|m| m >= gens.len()) {
            return Err(Error::InvalidArgument("stable element uses an unknown generator".into()));
        }
        let s = self.evaluate(stable, gens);
        if s.k != n {
            return Err(Error::InvalidArgument(format!("stable element has t-exponent {}, expected {n}", s.k)));
        }
        // seeds gᵢ·s^{-kᵢ/n}, each a fiber element of ⟨gens⟩
        let mut pool: Vec<(Word, Word)> = Vec::new();
        for (i, g) in gens.iter().enumerate() {
            let q = g.k / n;
            let mut expr = Word::generator(i);
            expr.append(&stable.pow(-q));
            let e = self.evaluate(&expr, gens);
            debug_assert_eq!(e.k, 0);
            if !e.w.is_identity() {
                pool.push((e.w, expr));
            }
        }
        let theta = |w: &Word, inverse: bool| -> Word {
            if inverse {
                // s⁻¹ w s
                self.conjugate(&TorusElement::fiber(w.clone()), &self.invert(&s)).w
            } else {
                self.conjugate(&TorusElement::fiber(w.clone()), &s).w
            }
        };
        let r = self.rank();
        for round in 0..=budget.rounds {
            let tracked = TrackedGraph::new(r, &pool.iter().map(|(w, _)| w.clone()).collect::<Vec<_>>());
            if tracked.graph.vertex_count() > budget.vertices {
                return Err(Error::Unstabilized { rounds: round, vertices: tracked.graph.vertex_count() });
            }
            // trade the pool for a free basis with its expressions
            let exprs: Vec<Word> = pool.iter().map(|(_, e)| e.clone()).collect();
            let basis = tracked.graph.free_basis();
            pool = basis
                .iter()
                .map(|b| {
                    let local = tracked.express(b).expect("basis element lies in its own subgroup");
                    (b.clone(), substitute(&local, &exprs))
                })
                .collect();
            let mut grew = false;
            let mut additions = Vec::new();
            for (w, expr) in &pool {
                for inverse in [false, true] {
                    let image = theta(w, inverse);
                    if !tracked.graph.contains(&image) {
                        let e = if inverse { expr.conjugate_by(&stable.inverse()) } else { expr.conjugate_by(stable) };
                        additions.push((image, e));
                        grew = true;
                    }
                }
            }
            if !grew {
                return Ok(FiberIntersection {
                    graph: tracked.graph,
                    basis: pool.iter().map(|(w, _)| w.clone()).collect(),
                    witnesses: pool.into_iter().map(|(_, e)| e).collect(),
                    stable: s,
                    stable_witness: stable.clone(),
                    rounds: round,
                });
            }
            if round == budget.rounds {
                return Err(Error::Unstabilized { rounds: round, vertices: tracked.graph.vertex_count() });
            }
            pool.extend(additions);
        }
        unreachable!("loop returns on its last round")
    }

    /// An element of `⟨gens⟩` with `t`-exponent `gcd(kᵢ)`, as a word in the
    /// generators.
    pub fn stable_element(&self, gens: &[TorusElement]) -> Result<Word> {
        let mut live: Vec<(i64, Word)> = gens
            .iter()
            .enumerate()
            .filter(|(_, g)| g.k != 0)
            .map(|(i, g)| if g.k > 0 { (g.k, Word::generator(i)) } else { (-g.k, Word::generator(i).inverse()) })
            .collect();
        if live.is_empty() {
            return Err(Error::NoStableLetter);
        }
        // Euclid on exponents, keeping words in step
        loop {
            live.sort_by_key(|(k, _)| *k);
            if live.len() == 1 {
                return Ok(live.pop().expect("nonempty").1);
            }
            let (kp, p) = live[0].clone();
            let mut next = vec![(kp, p.clone())];
            for (k, w) in live.into_iter().skip(1) {
                let q = k / kp;
                let rem = k - q * kp;
                if rem != 0 {
                    let mut w = w;
                    w.append(&p.pow(-q));
                    next.push((rem, w));
                }
            }
            live = next;
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Replaces letter `i` of `w` by `table[i]`.
pub(crate) fn substitute(w: &Word, table: &[Word]) -> Word {
    let mut out = Word::identity();
    for &l in w.letters() {
        if l.is_inverse() {
            out.append_inverse(&table[l.generator()]);
        } else {
            out.append(&table[l.generator()]);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SaturationBudget {
    pub rounds: usize,
    pub vertices: usize,
}

impl Default for SaturationBudget {
    fn default() -> Self {
        SaturationBudget { rounds: 64, vertices: 100_000 }
    }
}

#[derive(Clone, Debug)]
pub struct FiberIntersection {
    pub graph: StallingsGraph,
    /// Free basis of `⟨gens⟩ ∩ F`.
    pub basis: Vec<Word>,
    /// `basis[i]` as a product of the input generators.
    pub witnesses: Vec<Word>,
    /// The element `s = x·tⁿ` used for saturation.
    pub stable: TorusElement,
    pub stable_witness: Word,
    pub rounds: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn torus(map: &str) -> TorusGroup {
        TorusGroup::new(Automorphism::parse(map).unwrap()).unwrap()
    }

    fn suite() -> Vec<TorusGroup> {
        ["a -> a; b -> b", "a -> a; b -> b a", "a -> a b; b -> a", "a -> b; b -> a", "a -> a b a; b -> b a"]
            .iter()
            .map(|m| torus(m))
            .collect()
    }

    fn el(g: &TorusGroup, s: &str) -> TorusElement {
        g.parse(s).unwrap()
    }

    #[test]
    fn stable_letter_moves_past_words() {
        let g = torus("a -> a; b -> b a");
        let tb = g.multiply(&TorusElement::stable_letter(), &TorusElement::fiber(Word::generator(1)));
        assert_eq!(g.format(&tb), "b a t");
        assert_eq!(el(&g, "t b t'"), el(&g, "b a"));
    }

    #[test]
    fn relators_normalize_to_identity() {
        for g in suite() {
            for r in g.relators() {
                assert!(g.normalize(&r).is_identity());
            }
        }
    }

    #[test]
    fn reserved_stable_letter() {
        assert!(matches!(TorusGroup::new(Automorphism::parse("t -> t; a -> a").unwrap()), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn presentation_text() {
        assert_eq!(torus("a -> a; b -> b").presentation(), "⟨a,b,t | tat⁻¹=a, tbt⁻¹=b⟩");
        assert_eq!(torus("a -> a; b -> b a'").presentation(), "⟨a,b,t | tat⁻¹=a, tbt⁻¹=ba⁻¹⟩");
    }

    #[test]
    fn format_round_trip() {
        let g = torus("a -> a b; b -> a");
        for s in ["1", "t", "t'", "t^-3", "a b' t^2", "b"] {
            let e = el(&g, s);
            assert_eq!(el(&g, &g.format(&e)), e);
        }
    }

    #[test]
    fn fiber_intersection_examples() {
        let b = SaturationBudget::default();
        let g = torus("a -> a; b -> b a");
        let f = g.fiber_intersection(&[TorusElement::stable_letter()], b).unwrap();
        assert!(f.graph.is_trivial());

        let id = torus("a -> a; b -> b");
        let f = id.fiber_intersection(&[el(&id, "b"), el(&id, "t")], b).unwrap();
        assert_eq!(f.graph, StallingsGraph::new(2, &[Word::generator(1)]));

        let f = g.fiber_intersection(&[el(&g, "a"), el(&g, "t^2")], b).unwrap();
        assert_eq!(f.graph, StallingsGraph::new(2, &[Word::generator(0)]));
        assert_eq!(f.stable, el(&g, "t^2"));
    }

    #[test]
    fn all_fiber_generators_is_an_error() {
        let g = torus("a -> a; b -> b a");
        assert!(matches!(g.fiber_intersection(&[el(&g, "a")], SaturationBudget::default()), Err(Error::NoStableLetter)));
    }

    #[test]
    fn saturation_needs_several_rounds() {
        // ⟨b, t⟩ with b ↦ ba: the fiber part is ⟨a, b⟩ after one step
        let g = torus("a -> a; b -> b a");
        let f = g.fiber_intersection(&[el(&g, "b"), el(&g, "t")], SaturationBudget::default()).unwrap();
        assert!(f.graph.is_whole_group());
        assert!(f.rounds >= 1);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let g = torus("a -> a b; b -> a");
        let tight = SaturationBudget { rounds: 0, vertices: 100_000 };
        assert!(matches!(g.fiber_intersection(&[el(&g, "b"), el(&g, "t")], tight), Err(Error::Unstabilized { .. })));
    }

    #[test]
    fn infinitely_generated_fiber_does_not_stabilize() {
        // ⟨w, t²⟩ is a free product here; its fiber part is the normal
        // closure of w under Φ², which is not finitely generated
        let g = torus("a -> a b; b -> a");
        let budget = SaturationBudget { rounds: 8, vertices: 100_000 };
        let r = g.fiber_intersection(&[el(&g, "a b' a'"), el(&g, "t^2")], budget);
        assert!(matches!(r, Err(Error::Unstabilized { rounds: 8, .. })));
    }

    #[test]
    fn euclid_finds_gcd_exponent() {
        let g = torus("a -> a b; b -> a");
        let gens = [el(&g, "a t^6"), el(&g, "b t^-4"), el(&g, "a b")];
        let s = g.stable_element(&gens).unwrap();
        assert_eq!(g.evaluate(&s, &gens).k, 2);
    }

    /// Products of at most `depth` signed generators.
    fn products(g: &TorusGroup, gens: &[TorusElement], depth: usize) -> Vec<TorusElement> {
        let signed: Vec<TorusElement> = gens.iter().flat_map(|x| [x.clone(), g.invert(x)]).collect();
        let mut all = vec![TorusElement::identity()];
        let mut frontier = all.clone();
        for _ in 0..depth {
            let mut next = Vec::new();
            for f in &frontier {
                for s in &signed {
                    next.push(g.multiply(f, s));
                }
            }
            all.extend(next.iter().cloned());
            frontier = next;
        }
        all
    }

    #[test]
    fn fiber_intersection_contains_short_fiber_products() {
        let cases: Vec<(TorusGroup, Vec<&str>)> = vec![
            (torus("a -> a; b -> b"), vec!["b", "t"]),
            (torus("a -> a; b -> b a"), vec!["a", "t^2"]),
            (torus("a -> a; b -> b a"), vec!["b", "a t"]),
            (torus("a -> a b; b -> a"), vec!["a", "t^2"]),
            (torus("a -> b; b -> a"), vec!["a b", "t^2"]),
        ];
        for (g, gens) in cases {
            let gens: Vec<TorusElement> = gens.iter().map(|s| el(&g, s)).collect();
            let f = g.fiber_intersection(&gens, SaturationBudget::default()).unwrap();
            for p in products(&g, &gens, 5) {
                if p.k == 0 {
                    assert!(f.graph.contains(&p.w), "{} missing", g.format(&p));
                }
            }
            for (b, wit) in f.basis.iter().zip(&f.witnesses) {
                assert_eq!(g.evaluate(wit, &gens), TorusElement::fiber(b.clone()));
            }
            let theta = g.automorphism().twisted(f.stable.k, f.stable.w.clone());
            assert!(crate::automorphisms::is_invariant(&f.graph, &theta));
        }
    }

    #[test]
    fn result_is_independent_of_stable_choice() {
        let g = torus("a -> a; b -> b a");
        let gens = [el(&g, "b"), el(&g, "a t")];
        let b = SaturationBudget::default();
        let first = g.fiber_intersection_with(&gens, &Word::generator(1), b).unwrap();
        let other = Word::from_letters([Letter::pos(0), Letter::pos(1), Letter::pos(0)]);
        let second = g.fiber_intersection_with(&gens, &other, b).unwrap();
        assert_ne!(first.stable, second.stable);
        assert_eq!(first.graph, second.graph);
    }

    fn element(rank: usize) -> impl Strategy<Value = TorusElement> {
        element_with(rank, 4)
    }

    fn element_with(rank: usize, max_k: i64) -> impl Strategy<Value = TorusElement> {
        (prop::collection::vec((0..rank, any::<bool>()), 0..=16), -max_k..=max_k).prop_map(|(ls, k)| {
            TorusElement::new(Word::from_letters(ls.into_iter().map(|(g, inv)| if inv { Letter::neg(g) } else { Letter::pos(g) })), k)
        })
    }

    fn torus_word() -> impl Strategy<Value = Vec<TorusLetter>> {
        prop::collection::vec(
            prop_oneof![
                (0..2usize, any::<bool>()).prop_map(|(g, inv)| TorusLetter::Fiber(if inv { Letter::neg(g) } else { Letter::pos(g) })),
                any::<bool>().prop_map(TorusLetter::Stable),
            ],
            0..12,
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn inverse_and_associativity(m in 0..5usize, a in element(2), b in element(2), c in element(2)) {
            let g = &suite()[m];
            prop_assert!(g.multiply(&a, &g.invert(&a)).is_identity());
            prop_assert!(g.multiply(&g.invert(&a), &a).is_identity());
            prop_assert_eq!(g.multiply(&g.multiply(&a, &b), &c), g.multiply(&a, &g.multiply(&b, &c)));
            prop_assert_eq!(g.multiply(&a, &b).k, a.k + b.k);
        }

        #[test]
        fn normalize_is_a_homomorphism(m in 0..5usize, u in torus_word(), v in torus_word()) {
            let g = &suite()[m];
            let uv: Vec<TorusLetter> = u.iter().chain(&v).copied().collect();
            prop_assert_eq!(g.multiply(&g.normalize(&u), &g.normalize(&v)), g.normalize(&uv));
        }

        #[test]
        fn print_then_parse(m in 0..5usize, a in element(2)) {
            let g = &suite()[m];
            prop_assert_eq!(g.parse(&g.format(&a)).unwrap(), a);
        }

        #[test]
        fn power_matches_repeated_product(m in 0..5usize, a in element_with(2, 2), n in -3i64..=3) {
            let g = &suite()[m];
            let mut acc = TorusElement::identity();
            let step = if n < 0 { g.invert(&a) } else { a.clone() };
            for _ in 0..n.abs() {
                acc = g.multiply(&acc, &step);
            }
            prop_assert_eq!(g.power(&a, n), acc);
        }
    }
}
