//! Non-commutative polynomials in the indexed variables `X_{i,I}`.
//!
//! An index list `I = (I_m, ..., I_n)` is right-aligned: with `n` the largest
//! length in the ambient universe, its entries sit at positions `m..=n`. The
//! level of a label is `n - len(I)`, so the empty list lives at level `n`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use num_traits::One;
use smallvec::SmallVec;
use thiserror::Error;

use crate::expalg::{ExpAlgError, ExpPoly, Sym};
use crate::rational::Q;

pub type Color = u16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NcError {
    #[error("label {0} is not in the source universe of the map")]
    UnknownLabel(String),
    #[error("color {color} outside 1..={d}")]
    BadColor { color: Color, d: usize },
    #[error(transparent)]
    ExpAlg(#[from] ExpAlgError),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IndexList(pub SmallVec<[u32; 6]>);

impl IndexList {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(entries: &[u32]) -> Self {
        Self(SmallVec::from_slice(entries))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// `n - len`; panics if the list is longer than `n`.
    pub fn level(&self, n: usize) -> usize {
        n.checked_sub(self.len()).expect("index list longer than the universe allows")
    }

    /// Entry at 1-based position `pos` when right-aligned in `1..=n`.
    pub fn at_position(&self, pos: usize, n: usize) -> Option<u32> {
        let m = n + 1 - self.len();
        (pos >= m && pos <= n).then(|| self.0[pos - m])
    }

    pub fn max_entry(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

impl fmt::Display for IndexList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarLabel {
    pub color: Color,
    pub index: IndexList,
}

impl VarLabel {
    pub fn new(color: Color, index: IndexList) -> Self {
        Self { color, index }
    }

    /// `X_{i,∅}`
    pub fn base(color: Color) -> Self {
        Self { color, index: IndexList::empty() }
    }
}

impl fmt::Display for VarLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index.is_empty() {
            write!(f, "X{}", self.color)
        } else {
            write!(f, "X{}{}", self.color, self.index)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(pub SmallVec<[VarLabel; 8]>);

impl Monomial {
    pub fn unit() -> Self {
        Self::default()
    }

    pub fn from_labels(labels: impl IntoIterator<Item = VarLabel>) -> Self {
        Self(labels.into_iter().collect())
    }

    /// Word of base letters, colors 1-based.
    pub fn base_word(colors: &[Color]) -> Self {
        Self(colors.iter().map(|&c| VarLabel::base(c)).collect())
    }

    pub fn deg(&self) -> usize {
        self.0.len()
    }

    pub fn letters(&self) -> &[VarLabel] {
        &self.0
    }

    pub fn concat(&self, other: &Monomial) -> Monomial {
        let mut w = self.0.clone();
        w.extend(other.0.iter().cloned());
        Monomial(w)
    }

    pub fn reversed(&self) -> Monomial {
        Monomial(self.0.iter().rev().cloned().collect())
    }

    /// Lexicographically smallest rotation.
    pub fn cyclic_canonical(&self) -> Monomial {
        let n = self.0.len();
        (0..n.max(1))
            .map(|r| Monomial(self.0[r.min(n)..].iter().chain(self.0[..r.min(n)].iter()).cloned().collect()))
            .min()
            .unwrap()
    }

    pub fn slice(&self, lo: usize, hi: usize) -> Monomial {
        Monomial(self.0[lo..hi].iter().cloned().collect())
    }

    /// `w[p+1..] w[..p]`, the cyclic derivative at position `p`.
    pub fn rotate_out(&self, p: usize) -> Monomial {
        Monomial(self.0[p + 1..].iter().chain(self.0[..p].iter()).cloned().collect())
    }

    pub fn map_labels<E>(&self, mut f: impl FnMut(&VarLabel) -> Result<VarLabel, E>) -> Result<Monomial, E> {
        let mut w = SmallVec::with_capacity(self.0.len());
        for l in &self.0 {
            w.push(f(l)?);
        }
        Ok(Monomial(w))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, "*")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NCPoly {
    terms: HashMap<Monomial, ExpPoly>,
}

impl NCPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::monomial(Monomial::unit())
    }

    pub fn monomial(m: Monomial) -> Self {
        Self::term(m, ExpPoly::one())
    }

    pub fn term(m: Monomial, c: ExpPoly) -> Self {
        let mut p = Self::zero();
        p.add_term(m, c);
        p
    }

    /// Polynomial with rational coefficients.
    pub fn from_rational_terms(terms: impl IntoIterator<Item = (Q, Monomial)>) -> Self {
        let mut p = Self::zero();
        for (c, m) in terms {
            p.add_term(m, ExpPoly::constant(c));
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Number of monomials.
    pub fn nb(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &ExpPoly)> {
        self.terms.iter()
    }

    pub fn into_terms(self) -> impl Iterator<Item = (Monomial, ExpPoly)> {
        self.terms.into_iter()
    }

    /// Terms in canonical (sorted) order.
    pub fn sorted_terms(&self) -> Vec<(&Monomial, &ExpPoly)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    pub fn coeff(&self, m: &Monomial) -> ExpPoly {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn add_term(&mut self, m: Monomial, c: ExpPoly) {
        if c.is_zero() {
            return;
        }
        use std::collections::hash_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                o.get_mut().add_assign_ref(&c);
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: NCPoly) {
        for (m, c) in other.terms {
            self.add_term(m, c);
        }
    }

    pub fn add(&self, other: &NCPoly) -> NCPoly {
        let mut out = self.clone();
        out.add_assign(other.clone());
        out
    }

    pub fn sub(&self, other: &NCPoly) -> NCPoly {
        self.add(&other.scale(&ExpPoly::constant(-Q::one())))
    }

    pub fn scale(&self, c: &ExpPoly) -> NCPoly {
        let mut out = NCPoly::zero();
        for (m, x) in &self.terms {
            out.add_term(m.clone(), x.mul(c));
        }
        out
    }

    pub fn mul(&self, other: &NCPoly) -> NCPoly {
        let mut out = NCPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.concat(mb), ca.mul(cb));
            }
        }
        out
    }

    /// Largest word length, 0 for the zero polynomial.
    pub fn deg(&self) -> usize {
        self.terms.keys().map(Monomial::deg).max().unwrap_or(0)
    }

    /// Largest number of level-`h` letters in a monomial.
    pub fn deg_level(&self, h: usize, n: usize) -> usize {
        self.terms
            .keys()
            .map(|m| m.0.iter().filter(|l| l.index.level(n) == h).count())
            .max()
            .unwrap_or(0)
    }

    /// Largest absolute coefficient at a numeric time assignment.
    pub fn c_max(&self, assignment: &HashMap<Sym, f64>) -> Result<f64, NcError> {
        let mut best = 0.0f64;
        for c in self.terms.values() {
            best = best.max(c.eval_numeric(assignment)?.abs());
        }
        Ok(best)
    }

    pub fn relabel(&self, map: &LabelMap) -> Result<NCPoly, NcError> {
        let mut out = NCPoly::zero();
        for (m, c) in &self.terms {
            let w = m.map_labels(|l| map.apply_label(l))?;
            out.add_term(w, c.clone());
        }
        Ok(out)
    }

    pub fn validate_colors(&self, d: usize) -> Result<(), NcError> {
        for m in self.terms.keys() {
            for l in &m.0 {
                if l.color == 0 || l.color as usize > d {
                    return Err(NcError::BadColor { color: l.color, d });
                }
            }
        }
        Ok(())
    }

    pub fn max_color(&self) -> usize {
        self.terms.keys().flat_map(|m| m.0.iter().map(|l| l.color as usize)).max().unwrap_or(0)
    }
}

impl fmt::Display for NCPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({c}) {m}")?;
        }
        Ok(())
    }
}

/// Finite sums of simple tensors `A ⊗ B`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TensorPoly {
    terms: HashMap<(Monomial, Monomial), ExpPoly>,
}

impl TensorPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn simple(a: Monomial, b: Monomial, c: ExpPoly) -> Self {
        let mut t = Self::zero();
        t.add_term(a, b, c);
        t
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Monomial, Monomial), &ExpPoly)> {
        self.terms.iter()
    }

    pub fn add_term(&mut self, a: Monomial, b: Monomial, c: ExpPoly) {
        if c.is_zero() {
            return;
        }
        use std::collections::hash_map::Entry;
        match self.terms.entry((a, b)) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                o.get_mut().add_assign_ref(&c);
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &TensorPoly) -> TensorPoly {
        let mut out = self.clone();
        for ((a, b), c) in &other.terms {
            out.add_term(a.clone(), b.clone(), c.clone());
        }
        out
    }

    /// `(A⊗B)·(C⊗D) = AC ⊗ BD`
    pub fn mul(&self, other: &TensorPoly) -> TensorPoly {
        let mut out = TensorPoly::zero();
        for ((a, b), c) in &self.terms {
            for ((a2, b2), c2) in &other.terms {
                out.add_term(a.concat(a2), b.concat(b2), c.mul(c2));
            }
        }
        out
    }

    /// `m(A⊗B) = BA`
    pub fn multiply_out(&self) -> NCPoly {
        let mut out = NCPoly::zero();
        for ((a, b), c) in &self.terms {
            out.add_term(b.concat(a), c.clone());
        }
        out
    }
}

/// Applies `f` to every `(A, B, coeff)` with `w = A X B` and `X` matching `pred`.
fn split_at_matches(p: &NCPoly, pred: impl Fn(&VarLabel) -> bool) -> TensorPoly {
    let mut out = TensorPoly::zero();
    for (m, c) in p.terms() {
        for (pos, l) in m.0.iter().enumerate() {
            if pred(l) {
                out.add_term(m.slice(0, pos), m.slice(pos + 1, m.deg()), c.clone());
            }
        }
    }
    out
}

/// `∂_{i,I} P`
pub fn partial(p: &NCPoly, color: Color, index: &IndexList) -> TensorPoly {
    split_at_matches(p, |l| l.color == color && &l.index == index)
}

/// `∂_{i,h} P`, summing over labels at level `h` of a universe with max length `n`.
pub fn partial_level(p: &NCPoly, color: Color, h: usize, n: usize) -> TensorPoly {
    split_at_matches(p, |l| l.color == color && l.index.level(n) == h)
}

/// `∂_i P` over every label of color `i`.
pub fn partial_color(p: &NCPoly, color: Color) -> TensorPoly {
    split_at_matches(p, |l| l.color == color)
}

/// `D_{i,h} P = m ∘ ∂_{i,h} P`
pub fn cyclic_d_level(p: &NCPoly, color: Color, h: usize, n: usize) -> NCPoly {
    partial_level(p, color, h, n).multiply_out()
}

/// `D_i P` over every label of color `i`.
pub fn cyclic_d(p: &NCPoly, color: Color) -> NCPoly {
    partial_color(p, color).multiply_out()
}

/// `(A⊗B) # C = A C B`, extended linearly.
pub fn hash_op(t: &TensorPoly, c: &NCPoly) -> NCPoly {
    let mut out = NCPoly::zero();
    for ((a, b), x) in t.terms() {
        for (m, y) in c.terms() {
            out.add_term(a.concat(m).concat(b), x.mul(y));
        }
    }
    out
}

/// One constructor step of a label universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Step {
    G,
    /// Union over every admissible `s`.
    F,
    /// Single piece `F_s`.
    Fj(usize),
}

/// Label maps of the constructor steps. `n` is the largest length and `c` the
/// largest entry of the source universe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMap {
    GPlus { c: u32 },
    F1 { s: usize, n: usize, c: u32 },
    F2 { s: usize, n: usize, c: u32 },
    F1Tilde { s: usize, n: usize, c: u32 },
    F2Tilde { s: usize, n: usize, c: u32 },
}

impl LabelMap {
    pub fn apply(&self, index: &IndexList) -> Result<IndexList, NcError> {
        let f = |s: usize, n: usize, c: u32, offset: u32, extra: u32, shift: u32| {
            if index.len() > n || s == 0 || s > n + 1 || index.max_entry() > c {
                return Err(NcError::UnknownLabel(index.to_string()));
            }
            let m = n + 1 - index.len();
            let mut out = SmallVec::with_capacity(index.len() + 2);
            for (k, &e) in index.0.iter().enumerate() {
                let pos = m + k;
                if pos < s {
                    out.push(e + offset + shift);
                } else if pos == s {
                    out.push(e + offset + shift);
                    out.push(e + shift);
                } else {
                    out.push(e + shift);
                }
            }
            if s == n + 1 {
                out.push(extra + shift);
            }
            out.push(3 * c + 1 + shift);
            Ok(IndexList(out))
        };
        match *self {
            LabelMap::GPlus { c } => {
                if index.max_entry() > c {
                    return Err(NcError::UnknownLabel(index.to_string()));
                }
                let mut out = index.clone();
                out.0.push(c + 1);
                Ok(out)
            }
            LabelMap::F1 { s, n, c } => f(s, n, c, c, 3 * c + 2, 0),
            LabelMap::F2 { s, n, c } => f(s, n, c, 2 * c, 3 * c + 3, 0),
            LabelMap::F1Tilde { s, n, c } => f(s, n, c, c, 3 * c + 2, 3 * c + 3),
            LabelMap::F2Tilde { s, n, c } => f(s, n, c, 2 * c, 3 * c + 3, 3 * c + 3),
        }
    }

    pub fn apply_label(&self, l: &VarLabel) -> Result<VarLabel, NcError> {
        Ok(VarLabel { color: l.color, index: self.apply(&l.index)? })
    }
}

/// Largest entry after a step, given the previous largest entry `c` and length `n`.
pub fn next_c(step: Step, c: u32, n: usize) -> u32 {
    match step {
        Step::G => c + 1,
        Step::Fj(s) if s <= n => 6 * c + 4,
        Step::Fj(_) | Step::F => 6 * c + 6,
    }
}

/// Largest length after a step.
pub fn next_n(step: Step, n: usize) -> usize {
    match step {
        Step::G => n + 1,
        Step::F | Step::Fj(_) => n + 2,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct History {
    pub steps: Vec<Step>,
}

impl History {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn push(&self, step: Step) -> History {
        let mut steps = self.steps.clone();
        steps.push(step);
        History { steps }
    }

    /// Largest label length, which is also the number of interpolation times.
    pub fn n(&self) -> usize {
        self.steps.iter().fold(0, |n, &s| next_n(s, n))
    }

    /// Largest entry in the universe.
    pub fn c(&self) -> u32 {
        let mut n = 0;
        let mut c = 0;
        for &s in &self.steps {
            c = next_c(s, c, n);
            n = next_n(s, n);
        }
        c
    }

    /// `J_H`, built from `{∅}` by the recorded steps.
    pub fn j_universe(&self) -> BTreeSet<IndexList> {
        let mut set = BTreeSet::from([IndexList::empty()]);
        let mut n = 0;
        for &step in &self.steps {
            let c = set.iter().map(IndexList::max_entry).max().unwrap_or(0);
            let apply_f = |s: usize, out: &mut BTreeSet<IndexList>| {
                for map in [
                    LabelMap::F1 { s, n, c },
                    LabelMap::F2 { s, n, c },
                    LabelMap::F1Tilde { s, n, c },
                    LabelMap::F2Tilde { s, n, c },
                ] {
                    out.extend(set.iter().map(|i| map.apply(i).expect("label from own universe")));
                }
            };
            let mut next = BTreeSet::new();
            match step {
                Step::G => {
                    let g = LabelMap::GPlus { c };
                    next.extend(set.iter().map(|i| g.apply(i).expect("label from own universe")));
                    next.insert(IndexList::empty());
                }
                Step::Fj(s) => apply_f(s, &mut next),
                Step::F => {
                    for s in 1..=n + 1 {
                        apply_f(s, &mut next);
                    }
                }
            }
            set = next;
            n = next_n(step, n);
        }
        set
    }

    /// `J_H^h` for `h = 0..=n`.
    pub fn levels(&self) -> Vec<Vec<IndexList>> {
        let n = self.n();
        let mut out = vec![Vec::new(); n + 1];
        for i in self.j_universe() {
            out[i.level(n)].push(i);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::qi;

    fn x(c: Color) -> Monomial {
        Monomial::base_word(&[c])
    }

    fn il(e: &[u32]) -> IndexList {
        IndexList::new(e)
    }

    #[test]
    fn universes() {
        assert_eq!(History::default().j_universe(), BTreeSet::from([il(&[])]));
        assert_eq!(History::new(vec![Step::G]).j_universe(), BTreeSet::from([il(&[]), il(&[1])]));
        assert_eq!(
            History::new(vec![Step::G, Step::G]).j_universe(),
            BTreeSet::from([il(&[]), il(&[2]), il(&[1, 2])])
        );
    }

    #[test]
    fn relabel_examples() {
        let p = NCPoly::monomial(x(1));
        let q = p.relabel(&LabelMap::GPlus { c: 0 }).unwrap();
        assert_eq!(q, NCPoly::monomial(Monomial::from_labels([VarLabel::new(1, il(&[1]))])));
        assert_eq!(NCPoly::one().relabel(&LabelMap::F1 { s: 1, n: 1, c: 1 }).unwrap(), NCPoly::one());
        let got = LabelMap::F1 { s: 1, n: 1, c: 1 }.apply(&il(&[1])).unwrap();
        assert_eq!(got, il(&[2, 1, 4]));
        assert!(LabelMap::GPlus { c: 0 }.apply(&il(&[3])).is_err());
    }

    #[test]
    fn c_and_n_track_universe() {
        let cases = [
            vec![Step::G],
            vec![Step::Fj(1)],
            vec![Step::G, Step::Fj(1)],
            vec![Step::G, Step::Fj(2)],
            vec![Step::G, Step::G, Step::Fj(2)],
            vec![Step::Fj(1), Step::G, Step::Fj(1)],
            vec![Step::G, Step::F],
        ];
        for steps in cases {
            let h = History::new(steps.clone());
            let u = h.j_universe();
            assert_eq!(h.c(), u.iter().map(IndexList::max_entry).max().unwrap(), "{steps:?}");
            assert_eq!(h.n(), u.iter().map(IndexList::len).max().unwrap(), "{steps:?}");
            let total: usize = h.levels().iter().map(Vec::len).sum();
            assert_eq!(total, u.len());
        }
    }

    #[test]
    fn partial_examples() {
        let w = NCPoly::monomial(Monomial::base_word(&[1, 2, 1]));
        let d = partial(&w, 1, &IndexList::empty());
        let mut want = TensorPoly::zero();
        want.add_term(Monomial::unit(), Monomial::base_word(&[2, 1]), ExpPoly::one());
        want.add_term(Monomial::base_word(&[1, 2]), Monomial::unit(), ExpPoly::one());
        assert_eq!(d, want);
        assert!(partial(&NCPoly::monomial(x(2)), 1, &IndexList::empty()).is_zero());
    }

    #[test]
    fn cyclic_examples() {
        let x2 = NCPoly::monomial(Monomial::base_word(&[1, 1]));
        assert_eq!(cyclic_d_level(&x2, 1, 0, 0), NCPoly::monomial(x(1)).scale(&ExpPoly::constant(qi(2))));
        let x1x2 = NCPoly::monomial(Monomial::base_word(&[1, 2]));
        assert_eq!(cyclic_d_level(&x1x2, 1, 0, 0), NCPoly::monomial(x(2)));
        let x4 = NCPoly::monomial(Monomial::base_word(&[1, 1, 1, 1]));
        let want = NCPoly::monomial(Monomial::base_word(&[1, 1, 1])).scale(&ExpPoly::constant(qi(4)));
        assert_eq!(cyclic_d(&x4, 1), want);
    }

    #[test]
    fn hash_examples() {
        let t = TensorPoly::simple(x(1), x(2), ExpPoly::one());
        assert_eq!(hash_op(&t, &NCPoly::one()), NCPoly::monomial(Monomial::base_word(&[1, 2])));
        let p = NCPoly::monomial(Monomial::base_word(&[2, 1]));
        let unit = TensorPoly::simple(Monomial::unit(), Monomial::unit(), ExpPoly::one());
        assert_eq!(hash_op(&unit, &p), p);
        let mut s = TensorPoly::simple(x(1), Monomial::unit(), ExpPoly::one());
        s.add_term(Monomial::unit(), x(1), ExpPoly::one());
        let want = NCPoly::monomial(Monomial::base_word(&[1, 2])).add(&NCPoly::monomial(Monomial::base_word(&[2, 1])));
        assert_eq!(hash_op(&s, &NCPoly::monomial(x(2))), want);
    }

    #[test]
    fn degrees() {
        assert_eq!(NCPoly::monomial(Monomial::base_word(&[1, 2, 1])).deg(), 3);
        let m = Monomial::from_labels([VarLabel::base(1), VarLabel::new(1, il(&[1]))]);
        assert_eq!(NCPoly::monomial(m).deg_level(0, 1), 1);
        let p = NCPoly::monomial(x(1)).scale(&ExpPoly::constant(qi(2))).add(&NCPoly::monomial(x(2)));
        assert_eq!(p.nb(), 2);
    }

    #[test]
    fn display_forms() {
        let m = Monomial::from_labels([VarLabel::base(1), VarLabel::new(2, il(&[2, 1, 4]))]);
        assert_eq!(m.to_string(), "X1*X2[2,1,4]");
        assert_eq!(Monomial::unit().to_string(), "1");
    }
}
