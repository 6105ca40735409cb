//! Freely reduced words over a finite basis, cyclic words, and translation
//! length in the Cayley tree of the basis.
//!
//! Words do not carry their basis. A [`Word`] is a reduced sequence of
//! [`Letter`]s and the basis is only consulted where symbols are parsed or
//! printed, or where an operation needs to bound generator indices.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// A generator or its inverse.
///
/// Letters order by `(generator index, sign)` with the positive letter first.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(u32);

impl Letter {
    pub const fn new(generator: usize, inverse: bool) -> Self {
        Letter(((generator as u32) << 1) | inverse as u32)
    }

    pub const fn pos(generator: usize) -> Self {
        Letter::new(generator, false)
    }

    pub const fn neg(generator: usize) -> Self {
        Letter::new(generator, true)
    }

    #[inline]
    pub const fn generator(self) -> usize {
        (self.0 >> 1) as usize
    }

    #[inline]
    pub const fn is_inverse(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub const fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    /// Dense index in `0..2 * rank`.
    #[inline]
    pub const fn code(self) -> usize {
        self.0 as usize
    }

    pub const fn from_code(code: usize) -> Letter {
        Letter(code as u32)
    }

    /// +1 or -1.
    pub const fn sign(self) -> i8 {
        if self.is_inverse() {
            -1
        } else {
            1
        }
    }
}

impl fmt::Debug for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = (b'a' + (self.generator() % 26) as u8) as char;
        if self.is_inverse() {
            write!(f, "{c}'")
        } else {
            write!(f, "{c}")
        }
    }
}

/// An ordered list of distinct generator names.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Basis {
    names: Arc<[String]>,
}

fn valid_symbol(s: &str) -> bool {
    !s.is_empty()
        && s != "1"
        && !s.chars().any(|c| {
            c.is_whitespace() || matches!(c, '\'' | '^' | ',' | ';' | '|' | '#' | ':' | '-' | '>' | '(' | ')' | '[' | ']' | '=')
        })
}

impl Basis {
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(Error::EmptyBasis);
        }
        for (i, n) in names.iter().enumerate() {
            if !valid_symbol(n) {
                return Err(Error::InvalidSymbol(n.clone()));
            }
            if names[..i].contains(n) {
                return Err(Error::DuplicateGenerator(n.clone()));
            }
        }
        Ok(Basis { names: names.into() })
    }

    /// `a, b, c, …` for rank ≤ 26, `x1, x2, …` beyond.
    pub fn standard(rank: usize) -> Self {
        assert!(rank >= 1, "rank must be positive");
        let names: Vec<String> = if rank <= 26 {
            (0..rank).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
        } else {
            (1..=rank).map(|i| format!("x{i}")).collect()
        };
        Basis { names: names.into() }
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, generator: usize) -> &str {
        &self.names[generator]
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.names.iter().position(|n| n == symbol)
    }

    fn single_char(&self) -> bool {
        self.names.iter().all(|n| n.chars().count() == 1)
    }

    pub fn check(&self, w: &Word) -> Result<()> {
        match w.max_generator() {
            Some(g) if g >= self.rank() => Err(Error::LetterOutOfRange { index: g, rank: self.rank() }),
            _ => Ok(()),
        }
    }

    /// Parses the literal syntax: whitespace-separated symbols, each
    /// optionally suffixed by `'` or `^k` (so `^-1` inverts). `1` is the
    /// identity. When every name is a single character, a token may also be
    /// a run of symbols such as `ab'a`.
    pub fn parse_letters(&self, text: &str) -> Result<Vec<Letter>> {
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            self.parse_token(tok, &mut out)?;
        }
        Ok(out)
    }

    pub fn parse_word(&self, text: &str) -> Result<Word> {
        Ok(Word::from_letters(self.parse_letters(text)?))
    }

    fn parse_token(&self, tok: &str, out: &mut Vec<Letter>) -> Result<()> {
        if tok == "1" {
            return Ok(());
        }
        let (base, exp) = split_exponent(tok)?;
        if let Some(g) = self.index_of(base) {
            push_power(out, g, exp);
            return Ok(());
        }
        if !self.single_char() {
            return Err(Error::UnknownSymbol(tok.to_string()));
        }
        // compact form: a run of single-character symbols with postfix marks
        let chars: Vec<char> = tok.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let sym = chars[i].to_string();
            let g = self.index_of(&sym).ok_or_else(|| Error::UnknownSymbol(tok.to_string()))?;
            i += 1;
            let mut exp = 1i64;
            if i < chars.len() && chars[i] == '\'' {
                exp = -1;
                i += 1;
            } else if i < chars.len() && chars[i] == '^' {
                let start = i + 1;
                let mut end = start;
                if end < chars.len() && chars[end] == '-' {
                    end += 1;
                }
                while end < chars.len() && chars[end].is_ascii_digit() {
                    end += 1;
                }
                let digits: String = chars[start..end].iter().collect();
                exp = digits.parse().map_err(|_| Error::UnknownSymbol(tok.to_string()))?;
                i = end;
            }
            push_power(out, g, exp);
        }
        Ok(())
    }

    /// Space-separated symbols with `'` for inverses; `1` for the identity.
    pub fn format_word(&self, w: &Word) -> String {
        if w.is_identity() {
            return "1".to_string();
        }
        let mut s = String::new();
        for (i, l) in w.letters().iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            s.push_str(self.name(l.generator()));
            if l.is_inverse() {
                s.push('\'');
            }
        }
        s
    }

    /// Juxtaposed symbols with `⁻¹` superscripts, for presentations.
    pub fn format_compact(&self, w: &Word) -> String {
        if w.is_identity() {
            return "1".to_string();
        }
        let sep = if self.single_char() { "" } else { " " };
        let parts: Vec<String> = w
            .letters()
            .iter()
            .map(|l| {
                let mut s = self.name(l.generator()).to_string();
                if l.is_inverse() {
                    s.push_str("⁻¹");
                }
                s
            })
            .collect();
        parts.join(sep)
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.names.iter()).finish()
    }
}

fn split_exponent(tok: &str) -> Result<(&str, i64)> {
    if let Some(base) = tok.strip_suffix('\'') {
        return Ok((base, -1));
    }
    if let Some((base, exp)) = tok.rsplit_once('^') {
        let exp = exp.parse::<i64>().map_err(|_| Error::UnknownSymbol(tok.to_string()))?;
        return Ok((base, exp));
    }
    Ok((tok, 1))
}

fn push_power(out: &mut Vec<Letter>, g: usize, exp: i64) {
    let l = Letter::new(g, exp < 0);
    for _ in 0..exp.unsigned_abs() {
        out.push(l);
    }
}

/// A freely reduced word. The empty word is the identity.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word::default()
    }

    pub fn letter(l: Letter) -> Self {
        Word { letters: vec![l] }
    }

    pub fn generator(g: usize) -> Self {
        Word::letter(Letter::pos(g))
    }

    /// Free reduction of an arbitrary letter sequence.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(raw: I) -> Self {
        let mut w = Word::identity();
        for l in raw {
            w.push(l);
        }
        w
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn first(&self) -> Option<Letter> {
        self.letters.first().copied()
    }

    pub fn last(&self) -> Option<Letter> {
        self.letters.last().copied()
    }

    pub fn max_generator(&self) -> Option<usize> {
        self.letters.iter().map(|l| l.generator()).max()
    }

    /// Appends `l`, cancelling against the last letter if they are inverse.
    #[inline]
    pub fn push(&mut self, l: Letter) {
        if self.letters.last() == Some(&l.inverse()) {
            self.letters.pop();
        } else {
            self.letters.push(l);
        }
    }

    /// Right-multiplies in place.
    pub fn append(&mut self, other: &Word) {
        let mut i = 0;
        while i < other.letters.len() && self.letters.last() == Some(&other.letters[i].inverse()) {
            self.letters.pop();
            i += 1;
        }
        self.letters.extend_from_slice(&other.letters[i..]);
    }

    /// Right-multiplies by `other⁻¹` in place.
    pub fn append_inverse(&mut self, other: &Word) {
        for l in other.letters.iter().rev() {
            self.push(l.inverse());
        }
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut w = self.clone();
        w.append(other);
        w
    }

    pub fn inverse(&self) -> Word {
        Word { letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    pub fn pow(&self, n: i64) -> Word {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut w = Word::identity();
        for _ in 0..n.unsigned_abs() {
            w.append(&base);
        }
        w
    }

    /// `g · self · g⁻¹`.
    pub fn conjugate_by(&self, g: &Word) -> Word {
        let mut w = g.clone();
        w.append(self);
        w.append_inverse(g);
        w
    }

    /// Returns the cyclically reduced core (in canonical rotation) and a
    /// conjugator `c` with `self = c · core · c⁻¹`.
    pub fn cyclic_reduce(&self) -> (CyclicWord, Word) {
        let (start, end) = self.cyclic_core_bounds();
        let core = &self.letters[start..end];
        let rot = least_rotation(core);
        let mut letters = Vec::with_capacity(core.len());
        letters.extend_from_slice(&core[rot..]);
        letters.extend_from_slice(&core[..rot]);
        // self = p · core · p⁻¹ and core = core[..rot] · rotated · core[..rot]⁻¹
        let mut conjugator = Word { letters: self.letters[..start].to_vec() };
        for &l in &core[..rot] {
            conjugator.push(l);
        }
        (CyclicWord { letters }, conjugator)
    }

    fn cyclic_core_bounds(&self) -> (usize, usize) {
        let (mut i, mut j) = (0, self.letters.len());
        while j > i + 1 && self.letters[i] == self.letters[j - 1].inverse() {
            i += 1;
            j -= 1;
        }
        (i, j)
    }

    /// Length of the cyclically reduced core: the translation length of the
    /// element acting on the Cayley tree of the basis.
    pub fn translation_length(&self) -> usize {
        let (i, j) = self.cyclic_core_bounds();
        j - i
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.translation_length() == self.len()
    }

    /// Total number of occurrences of each generator (either sign).
    pub fn generator_counts(&self, rank: usize) -> Vec<u64> {
        let mut counts = vec![0u64; rank];
        for l in &self.letters {
            counts[l.generator()] += 1;
        }
        counts
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return f.write_str("ε");
        }
        for l in &self.letters {
            write!(f, "{l:?}")?;
        }
        Ok(())
    }
}

/// Free reduction with a rank check on every letter.
pub fn reduce(raw: &[Letter], rank: usize) -> Result<Word> {
    if let Some(l) = raw.iter().find(|l| l.generator() >= rank) {
        return Err(Error::LetterOutOfRange { index: l.generator(), rank });
    }
    Ok(Word::from_letters(raw.iter().copied()))
}

/// A conjugacy class of `F`: a cyclically reduced word stored in its
/// lexicographically least rotation, so equal classes compare equal.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CyclicWord {
    letters: Vec<Letter>,
}

impl CyclicWord {
    pub fn new(w: &Word) -> Self {
        w.cyclic_reduce().0
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// The stored rotation as a (reduced) word.
    pub fn to_word(&self) -> Word {
        Word { letters: self.letters.clone() }
    }

    /// Cyclic turns `(x, y)`: `y` follows `x`, wrapping around.
    pub fn turns(&self) -> impl Iterator<Item = (Letter, Letter)> + '_ {
        let n = self.letters.len();
        (0..n).map(move |i| (self.letters[i], self.letters[(i + 1) % n]))
    }
}

impl fmt::Debug for CyclicWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}]", self.to_word())
    }
}

/// Start index of the lexicographically least rotation (two-pointer scan).
pub(crate) fn least_rotation<T: Ord>(s: &[T]) -> usize {
    let n = s.len();
    if n < 2 {
        return 0;
    }
    let (mut i, mut j, mut k) = (0usize, 1usize, 0usize);
    while i < n && j < n && k < n {
        match s[(i + k) % n].cmp(&s[(j + k) % n]) {
            Ordering::Equal => k += 1,
            Ordering::Greater => {
                i += k + 1;
                if i <= j {
                    i = j + 1;
                }
                k = 0;
            }
            Ordering::Less => {
                j += k + 1;
                if j <= i {
                    j = i + 1;
                }
                k = 0;
            }
        }
    }
    i.min(j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ab() -> Basis {
        Basis::new(["a", "b", "c"]).unwrap()
    }

    fn w(s: &str) -> Word {
        ab().parse_word(s).unwrap()
    }

    /// Repeated single-pass cancellation until nothing changes.
    fn naive_reduce(mut v: Vec<Letter>) -> Vec<Letter> {
        loop {
            let mut out: Vec<Letter> = Vec::new();
            let mut i = 0;
            let mut changed = false;
            while i < v.len() {
                if i + 1 < v.len() && v[i + 1] == v[i].inverse() {
                    i += 2;
                    changed = true;
                } else {
                    out.push(v[i]);
                    i += 1;
                }
            }
            v = out;
            if !changed {
                return v;
            }
        }
    }

    fn raw_letters(max_len: usize) -> impl Strategy<Value = Vec<Letter>> {
        prop::collection::vec((0usize..3, any::<bool>()).prop_map(|(g, i)| Letter::new(g, i)), 0..max_len)
    }

    #[test]
    fn reduce_examples() {
        let b = ab();
        let raw = b.parse_letters("a b b' c").unwrap();
        assert_eq!(reduce(&raw, 3).unwrap(), w("a c"));
        assert_eq!(reduce(&[], 3).unwrap(), Word::identity());
        let raw = b.parse_letters("a a' a").unwrap();
        assert_eq!(reduce(&raw, 3).unwrap().letters(), naive_reduce(raw.clone()).as_slice());
        assert_eq!(reduce(&raw, 3).unwrap(), w("a"));
        assert!(matches!(reduce(&[Letter::pos(3)], 3), Err(Error::LetterOutOfRange { index: 3, rank: 3 })));
    }

    #[test]
    fn concat_and_invert_examples() {
        assert_eq!(w("a b").concat(&w("b' a")), w("a a"));
        assert_eq!(w("a b' c").inverse(), w("c' b a'"));
    }

    #[test]
    fn cyclic_reduce_examples() {
        let (core, c) = w("a b a'").cyclic_reduce();
        assert_eq!(core.to_word(), w("b"));
        assert_eq!(c, w("a"));
        let (core, c) = w("a b a b").cyclic_reduce();
        assert_eq!(core.to_word(), w("a b a b"));
        assert!(c.is_identity());
        let x = w("b a b'");
        assert_eq!(x.cyclic_reduce(), (CyclicWord::new(&w("a")), w("b")));
    }

    #[test]
    fn commutator_times_word_core_by_strip_oracle() {
        let x = w("a' b' a b").concat(&w("b a'"));
        let mut v = x.letters().to_vec();
        while v.len() > 1 && v[0] == v[v.len() - 1].inverse() {
            v.remove(0);
            v.pop();
        }
        // a'b'abba' is already cyclically reduced: its ends a', a' do not cancel
        assert_eq!(v.len(), 6);
        assert_eq!(x.translation_length(), v.len());
    }

    #[test]
    fn translation_length_examples() {
        assert_eq!(Word::identity().translation_length(), 0);
        assert_eq!(w("a b a'").translation_length(), 1);
    }

    #[test]
    fn literal_syntax() {
        let b = ab();
        assert_eq!(b.parse_word("a^-1 b^2").unwrap(), w("a' b b"));
        assert_eq!(b.parse_word("ab'c").unwrap(), w("a b' c"));
        assert_eq!(b.parse_word("a^3").unwrap(), w("a a a"));
        assert_eq!(b.parse_word("1").unwrap(), Word::identity());
        assert_eq!(b.format_word(&w("a b' c")), "a b' c");
        assert_eq!(b.format_word(&Word::identity()), "1");
        assert_eq!(b.format_compact(&w("a b'")), "ab⁻¹");
        assert!(matches!(b.parse_word("d"), Err(Error::UnknownSymbol(_))));
        let long = Basis::new(["x1", "x2"]).unwrap();
        assert_eq!(long.parse_word("x1 x2' x2^-1").unwrap().len(), 3);
        assert!(long.parse_word("x1x2").is_err());
    }

    #[test]
    fn basis_validation() {
        assert!(matches!(Basis::new(Vec::<String>::new()), Err(Error::EmptyBasis)));
        assert!(matches!(Basis::new(["a", "a"]), Err(Error::DuplicateGenerator(_))));
        assert!(matches!(Basis::new(["a'"]), Err(Error::InvalidSymbol(_))));
        assert!(matches!(Basis::new([""]), Err(Error::InvalidSymbol(_))));
        assert_eq!(Basis::standard(3).names(), &["a", "b", "c"]);
        assert_eq!(Basis::standard(30).name(29), "x30");
    }

    #[test]
    fn least_rotation_matches_brute_force_small() {
        let s = [2, 1, 2, 1, 1, 3];
        let n = s.len();
        let best = (0..n).min_by_key(|&r| s[r..].iter().chain(&s[..r]).copied().collect::<Vec<_>>()).unwrap();
        let got = least_rotation(&s);
        let rot = |r: usize| s[r..].iter().chain(&s[..r]).copied().collect::<Vec<_>>();
        assert_eq!(rot(got), rot(best));
    }

    proptest! {
        #[test]
        fn reduce_matches_naive_and_is_idempotent(raw in raw_letters(40)) {
            let r = Word::from_letters(raw.iter().copied());
            let expected = naive_reduce(raw);
            prop_assert_eq!(r.letters(), expected.as_slice());
            prop_assert_eq!(Word::from_letters(r.letters().iter().copied()), r);
        }

        #[test]
        fn concat_with_inverse_is_identity(raw in raw_letters(32)) {
            let x = Word::from_letters(raw);
            prop_assert!(x.concat(&x.inverse()).is_identity());
        }

        #[test]
        fn concat_length_bounds(u in raw_letters(20), v in raw_letters(20)) {
            let (u, v) = (Word::from_letters(u), Word::from_letters(v));
            let uv = u.concat(&v);
            prop_assert!(uv.len() <= u.len() + v.len());
            prop_assert!(uv.len() >= u.len().abs_diff(v.len()));
        }

        #[test]
        fn cyclic_reduce_conjugates_back(raw in raw_letters(30)) {
            let x = Word::from_letters(raw);
            let (core, c) = x.cyclic_reduce();
            prop_assert!(core.to_word().is_cyclically_reduced());
            prop_assert_eq!(core.to_word().conjugate_by(&c), x.clone());
            prop_assert_eq!(core.len(), x.translation_length());
        }

        #[test]
        fn translation_length_conjugation_invariant(raw in raw_letters(20), g in raw_letters(20)) {
            let (x, g) = (Word::from_letters(raw), Word::from_letters(g));
            prop_assert_eq!(x.conjugate_by(&g).translation_length(), x.translation_length());
            prop_assert_eq!(CyclicWord::new(&x.conjugate_by(&g)), CyclicWord::new(&x));
        }

        #[test]
        fn translation_length_of_powers(raw in raw_letters(16), n in 1i64..6) {
            let x = CyclicWord::new(&Word::from_letters(raw)).to_word();
            prop_assert_eq!(x.pow(n).translation_length(), n as usize * x.translation_length());
        }

        #[test]
        fn least_rotation_is_least(s in prop::collection::vec(0u8..3, 0..24)) {
            let n = s.len();
            let rot = |r: usize| s[r..].iter().chain(&s[..r]).copied().collect::<Vec<_>>();
            let got = rot(least_rotation(&s));
            for r in 0..n {
                prop_assert!(got <= rot(r));
            }
        }

        #[test]
        fn format_parse_round_trip(raw in raw_letters(24)) {
            let b = Basis::new(["a", "b", "c"]).unwrap();
            let x = Word::from_letters(raw);
            prop_assert_eq!(b.parse_word(&b.format_word(&x)).unwrap(), x);
        }
    }
}
