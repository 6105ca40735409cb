//! Endomorphisms and automorphisms of a free group given by generator images.

use std::fmt;

use crate::error::{Error, Result};
use crate::folding::{StallingsGraph, TrackedGraph};
use crate::words::{Basis, Letter, Word};

/// A generator-image table `a ↦ Φ(a)`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Endomorphism {
    basis: Basis,
    images: Vec<Word>,
}

impl Endomorphism {
    pub fn new(basis: Basis, images: Vec<Word>) -> Result<Self> {
        if images.len() != basis.rank() {
            return Err(Error::InvalidArgument(format!("expected {} images, got {}", basis.rank(), images.len())));
        }
        for im in &images {
            basis.check(im)?;
        }
        Ok(Endomorphism { basis, images })
    }

    pub fn identity(basis: Basis) -> Self {
        let images = (0..basis.rank()).map(Word::generator).collect();
        Endomorphism { basis, images }
    }

    /// Parses `gen -> word` rules separated by newlines or `;`. `#` starts a
    /// comment. The basis is the left-hand sides in order of appearance.
    pub fn parse(text: &str) -> Result<Self> {
        let rules = split_rules(text)?;
        let basis = Basis::new(rules.iter().map(|r| r.1.clone())).map_err(|e| match e {
            Error::DuplicateGenerator(g) => {
                let line = rules.iter().filter(|r| r.1 == g).nth(1).map_or(0, |r| r.0);
                Error::parse(line, format!("generator {g:?} listed twice"))
            }
            other => other,
        })?;
        Self::build(basis, &rules)
    }

    /// Parses rules against a fixed basis; every generator must appear once.
    pub fn parse_with_basis(text: &str, basis: &Basis) -> Result<Self> {
        let rules = split_rules(text)?;
        Self::build(basis.clone(), &rules)
    }

    fn build(basis: Basis, rules: &[(usize, String, String)]) -> Result<Self> {
        let mut images: Vec<Option<Word>> = vec![None; basis.rank()];
        for (line, lhs, rhs) in rules {
            let g = basis.index_of(lhs).ok_or_else(|| Error::parse(*line, format!("unknown generator {lhs:?}")))?;
            if images[g].is_some() {
                return Err(Error::parse(*line, format!("generator {lhs:?} listed twice")));
            }
            let img = basis.parse_word(rhs).map_err(|e| Error::parse(*line, e.to_string()))?;
            images[g] = Some(img);
        }
        let images = images
            .into_iter()
            .enumerate()
            .map(|(g, im)| im.ok_or_else(|| Error::MissingGenerator(basis.name(g).to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Endomorphism { basis, images })
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.rank()
    }

    pub fn images(&self) -> &[Word] {
        &self.images
    }

    pub fn image(&self, generator: usize) -> &Word {
        &self.images[generator]
    }

    /// Appends `Φ(l)` to `out` with free reduction.
    #[inline]
    pub fn push_image(&self, out: &mut Word, l: Letter) {
        let im = &self.images[l.generator()];
        if l.is_inverse() {
            out.append_inverse(im);
        } else {
            out.append(im);
        }
    }

    pub fn apply(&self, w: &Word) -> Result<Word> {
        self.basis.check(w)?;
        Ok(self.apply_unchecked(w))
    }

    pub(crate) fn apply_unchecked(&self, w: &Word) -> Word {
        let mut out = Word::identity();
        for &l in w.letters() {
            self.push_image(&mut out, l);
        }
        out
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Endomorphism) -> Result<Endomorphism> {
        if self.basis != other.basis {
            return Err(Error::BasisMismatch);
        }
        let images = other.images.iter().map(|im| self.apply_unchecked(im)).collect();
        Ok(Endomorphism { basis: self.basis.clone(), images })
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(g, im)| *im == Word::generator(g))
    }

    /// `ad_g ∘ self`: `a ↦ g Φ(a) g⁻¹`.
    pub fn conjugated(&self, g: &Word) -> Endomorphism {
        let images = self.images.iter().map(|im| im.conjugate_by(g)).collect();
        Endomorphism { basis: self.basis.clone(), images }
    }

    /// Renames generators: generator `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Endomorphism> {
        let n = self.rank();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        let rename = |w: &Word| Word::from_letters(w.letters().iter().map(|l| Letter::new(perm[l.generator()], l.is_inverse())));
        let mut images = vec![Word::identity(); n];
        for (g, im) in self.images.iter().enumerate() {
            images[perm[g]] = rename(im);
        }
        Ok(Endomorphism { basis: self.basis.clone(), images })
    }

    /// One `gen -> word` rule per line, in basis order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (g, im) in self.images.iter().enumerate() {
            s.push_str(self.basis.name(g));
            s.push_str(" -> ");
            s.push_str(&self.basis.format_word(im));
            s.push('\n');
        }
        s
    }
}

impl fmt::Debug for Endomorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rules: Vec<String> = self
            .images
            .iter()
            .enumerate()
            .map(|(g, im)| format!("{} -> {}", self.basis.name(g), self.basis.format_word(im)))
            .collect();
        write!(f, "Endomorphism({})", rules.join("; "))
    }
}

fn split_rules(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.split('#').next().unwrap_or("");
        for rule in line.split(';') {
            let rule = rule.trim();
            if rule.is_empty() {
                continue;
            }
            let (lhs, rhs) = rule
                .split_once("->")
                .ok_or_else(|| Error::parse(line_no, format!("expected `gen -> word`, found {rule:?}")))?;
            let lhs = lhs.trim();
            if lhs.is_empty() || lhs.contains(char::is_whitespace) {
                return Err(Error::parse(line_no, format!("bad generator {lhs:?}")));
            }
            rules.push((line_no, lhs.to_string(), rhs.trim().to_string()));
        }
    }
    Ok(rules)
}

/// Parses an endomorphism, taking the basis from the rule order.
pub fn parse_endomorphism(text: &str) -> Result<Endomorphism> {
    Endomorphism::parse(text)
}

/// An endomorphism together with verified inverse images.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Automorphism {
    forward: Endomorphism,
    backward: Endomorphism,
}

impl fmt::Debug for Automorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Automorphism({:?})", self.forward)
    }
}

impl AsRef<Endomorphism> for Endomorphism {
    fn as_ref(&self) -> &Endomorphism {
        self
    }
}

impl AsRef<Endomorphism> for Automorphism {
    fn as_ref(&self) -> &Endomorphism {
        &self.forward
    }
}

impl Automorphism {
    /// Decides surjectivity by folding the image subgroup; on success reads
    /// the inverse images off the expression-tracked fold and checks both
    /// compositions on every generator.
    pub fn certify(endo: Endomorphism) -> Result<Self> {
        let rank = endo.rank();
        let tracked = TrackedGraph::new(rank, &endo.images);
        if !tracked.graph.is_whole_group() {
            return Err(Error::NotSurjective(Box::new(tracked.graph)));
        }
        let mut inverse_images = Vec::with_capacity(rank);
        for g in 0..rank {
            let ex = tracked.express(&Word::generator(g)).expect("rose accepts every generator");
            inverse_images.push(ex);
        }
        let backward = Endomorphism { basis: endo.basis.clone(), images: inverse_images };
        let aut = Automorphism { forward: endo, backward };
        debug_assert!(aut.check_inverse());
        if !aut.check_inverse() {
            return Err(Error::NotSurjective(Box::new(tracked.graph)));
        }
        Ok(aut)
    }

    fn check_inverse(&self) -> bool {
        self.forward.compose(&self.backward).map(|e| e.is_identity()).unwrap_or(false)
            && self.backward.compose(&self.forward).map(|e| e.is_identity()).unwrap_or(false)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Automorphism::certify(Endomorphism::parse(text)?)
    }

    pub fn identity(basis: Basis) -> Self {
        let id = Endomorphism::identity(basis);
        Automorphism { forward: id.clone(), backward: id }
    }

    pub fn basis(&self) -> &Basis {
        &self.forward.basis
    }

    pub fn rank(&self) -> usize {
        self.forward.rank()
    }

    pub fn endomorphism(&self) -> &Endomorphism {
        &self.forward
    }

    pub fn images(&self) -> &[Word] {
        &self.forward.images
    }

    pub fn inverse_images(&self) -> &[Word] {
        &self.backward.images
    }

    pub fn apply(&self, w: &Word) -> Result<Word> {
        self.forward.apply(w)
    }

    pub fn apply_inverse(&self, w: &Word) -> Result<Word> {
        self.backward.apply(w)
    }

    /// `Φᵏ(w)` by iteration; negative `k` iterates the inverse.
    pub fn apply_power(&self, w: &Word, k: i64) -> Word {
        let map = if k < 0 { &self.backward } else { &self.forward };
        let mut cur = w.clone();
        for _ in 0..k.unsigned_abs() {
            cur = map.apply_unchecked(&cur);
        }
        cur
    }

    pub fn inverse(&self) -> Automorphism {
        Automorphism { forward: self.backward.clone(), backward: self.forward.clone() }
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Automorphism) -> Result<Automorphism> {
        Ok(Automorphism { forward: self.forward.compose(&other.forward)?, backward: other.backward.compose(&self.backward)? })
    }

    /// `Φⁿ` by repeated squaring; `n < 0` uses the inverse.
    pub fn power(&self, n: i64) -> Automorphism {
        let mut base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = Automorphism::identity(self.basis().clone());
        let mut e = n.unsigned_abs();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&base).expect("same basis");
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base).expect("same basis");
            }
        }
        acc
    }

    /// `ad_g ∘ Φ`, which represents the same outer class.
    pub fn conjugated(&self, g: &Word) -> Automorphism {
        // (ad_g ∘ Φ)⁻¹ = Φ⁻¹ ∘ ad_{g⁻¹}
        let forward = self.forward.conjugated(g);
        let ginv = g.inverse();
        let images = self.backward.images.iter().map(|im| im.conjugate_by(&self.backward.apply_unchecked(&ginv))).collect();
        Automorphism { forward, backward: Endomorphism { basis: self.basis().clone(), images } }
    }

    pub fn permuted(&self, perm: &[usize]) -> Result<Automorphism> {
        Ok(Automorphism { forward: self.forward.permuted(perm)?, backward: self.backward.permuted(perm)? })
    }

    pub fn is_identity(&self) -> bool {
        self.forward.is_identity()
    }

    /// The map `a ↦ x Φⁿ(a) x⁻¹`.
    pub fn twisted(&self, exponent: i64, corrector: Word) -> TwistedMap {
        TwistedMap { power: self.power(exponent), exponent, corrector }
    }

    /// Restriction of `a ↦ x Φⁿ(a) x⁻¹` to an invariant subgroup `H`,
    /// written on the free basis of `H`.
    pub fn restrict(&self, h: &StallingsGraph, exponent: i64, corrector: &Word) -> Result<Restriction> {
        if exponent < 1 {
            return Err(Error::InvalidArgument("restriction exponent must be positive".into()));
        }
        if h.is_trivial() {
            return Err(Error::TrivialSubgroup);
        }
        let theta = self.twisted(exponent, corrector.clone());
        let basis_words = h.free_basis();
        let mut images = Vec::with_capacity(basis_words.len());
        for b in &basis_words {
            let im = theta.apply(b);
            let ex = h.express_in_basis(&im).ok_or_else(|| Error::NotInvariant { generator: b.clone() })?;
            images.push(ex);
        }
        let names = (1..=basis_words.len()).map(|i| format!("h{i}"));
        let basis = Basis::new(names)?;
        let endo = Endomorphism { basis, images };
        let automorphism = Automorphism::certify(endo).map_err(|e| match e {
            // θ(H) is a proper subgroup of H
            Error::NotSurjective(_) => Error::NotInvariant {
                generator: basis_words.iter().find(|b| !h.contains(&theta.apply_inverse(b))).cloned().unwrap_or_default(),
            },
            other => other,
        })?;
        Ok(Restriction { automorphism, basis_words })
    }
}

/// An automorphism of a subgroup `H`, on the free basis `basis_words` of `H`
/// (generator `hᵢ` of the restricted basis stands for `basis_words[i-1]`).
#[derive(Clone, Debug)]
pub struct Restriction {
    pub automorphism: Automorphism,
    pub basis_words: Vec<Word>,
}

/// `θ: a ↦ x · Φⁿ(a) · x⁻¹`, the conjugation action of `x tⁿ` on the fiber
/// of the mapping torus.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistedMap {
    power: Automorphism,
    exponent: i64,
    corrector: Word,
}

impl TwistedMap {
    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn corrector(&self) -> &Word {
        &self.corrector
    }

    pub fn power(&self) -> &Automorphism {
        &self.power
    }

    pub fn apply(&self, w: &Word) -> Word {
        self.power.forward.apply_unchecked(w).conjugate_by(&self.corrector)
    }

    /// `θ⁻¹(w) = Φ⁻ⁿ(x⁻¹ w x)`.
    pub fn apply_inverse(&self, w: &Word) -> Word {
        let inner = w.conjugate_by(&self.corrector.inverse());
        self.power.backward.apply_unchecked(&inner)
    }

    /// `θ(H) = H`, checked on the basis in both directions.
    pub fn preserves(&self, h: &StallingsGraph) -> bool {
        h.free_basis().iter().all(|b| h.contains(&self.apply(b)) && h.contains(&self.apply_inverse(b)))
    }
}

/// Whether `θ(H) = H`.
pub fn is_invariant(h: &StallingsGraph, theta: &TwistedMap) -> bool {
    theta.preserves(h)
}
