//! Exact finite-N GUE trace moments by brute-force pairing enumeration.
//!
//! Every factor `tr(q)` is a star whose half-edges carry the letters of `q`
//! in cyclic order. A colour-respecting perfect matching of all half-edges
//! glues the stars into a map, and contributes `N^{F - E}` to
//! `E[Π tr q_i(X)]` for GUE matrices with entry variance `1/N`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exec;
use crate::master::{LambdaSeries, Potential, Word};
use crate::ncpoly::Color;
use crate::rational::{factorial, format_q, qi, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GaussWickError {
    #[error("odd power N^{exp} at lambda order {order}: the series is not even in N")]
    OddPowerDetected { order: usize, exp: i64 },
    #[error("{half_edges} half-edges exceed the enumeration budget {budget}")]
    BudgetExceeded { half_edges: usize, budget: usize },
    #[error("empty star")]
    EmptyStar,
}

pub const DEFAULT_HALF_EDGE_BUDGET: usize = 20;

/// A vertex `tr(X_{i_1} ... X_{i_p})`; the first letter is the distinguished half-edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Star {
    pub word: Word,
}

impl Star {
    pub fn new(word: Word) -> Result<Self, GaussWickError> {
        if word.is_empty() {
            return Err(GaussWickError::EmptyStar);
        }
        Ok(Self { word })
    }

    pub fn power(k: usize) -> Self {
        Self { word: vec![1; k] }
    }
}

impl fmt::Display for Star {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::ncpoly::Monomial::base_word(&self.word))
    }
}

/// Stars glued by a matching of their half-edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairingDiagram {
    pub stars: Vec<Star>,
    /// `matching[h]` is the half-edge glued to `h`; half-edges are numbered star by star.
    pub matching: Vec<usize>,
}

/// Half-edge bookkeeping shared by all pairings of one list of stars.
#[derive(Debug, Clone)]
struct Layout {
    color: Vec<Color>,
    star_of: Vec<usize>,
    next: Vec<usize>,
    n_stars: usize,
}

impl Layout {
    fn new(stars: &[Star]) -> Self {
        let mut color = Vec::new();
        let mut star_of = Vec::new();
        let mut next = Vec::new();
        for (s, star) in stars.iter().enumerate() {
            let base = color.len();
            let p = star.word.len();
            for (k, &c) in star.word.iter().enumerate() {
                color.push(c);
                star_of.push(s);
                next.push(base + (k + 1) % p);
            }
        }
        Self { color, star_of, next, n_stars: stars.len() }
    }

    fn len(&self) -> usize {
        self.color.len()
    }

    /// Cycles of `h -> next(mate(h))`.
    fn faces(&self, mate: &[usize]) -> usize {
        let mut seen = vec![false; self.len()];
        let mut faces = 0;
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            faces += 1;
            let mut h = start;
            while !seen[h] {
                seen[h] = true;
                h = self.next[mate[h]];
            }
        }
        faces
    }

    fn components(&self, mate: &[usize]) -> usize {
        let mut parent: Vec<usize> = (0..self.n_stars).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut comps = self.n_stars;
        for (h, &m) in mate.iter().enumerate() {
            let a = find(&mut parent, self.star_of[h]);
            let b = find(&mut parent, self.star_of[m]);
            if a != b {
                parent[a] = b;
                comps -= 1;
            }
        }
        comps
    }
}

impl PairingDiagram {
    pub fn faces(&self) -> usize {
        Layout::new(&self.stars).faces(&self.matching)
    }

    pub fn components(&self) -> usize {
        Layout::new(&self.stars).components(&self.matching)
    }

    pub fn edges(&self) -> usize {
        self.matching.len() / 2
    }

    /// Total genus `(2·components - V + E - F) / 2`.
    pub fn genus(&self) -> Q {
        let v = self.stars.len() as i64;
        let e = self.edges() as i64;
        let f = self.faces() as i64;
        let c = self.components() as i64;
        Q::new((2 * c - v + e - f).into(), 2.into())
    }
}

/// Laurent polynomial in `N` with exact coefficients.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LaurentN {
    terms: BTreeMap<i64, Q>,
}

impl LaurentN {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(c: Q, exp: i64) -> Self {
        let mut l = Self::zero();
        l.add_term(exp, c);
        l
    }

    pub fn constant(c: Q) -> Self {
        Self::monomial(c, 0)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i64, &Q)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exp: i64) -> Q {
        self.terms.get(&exp).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add_term(&mut self, exp: i64, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(exp).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&exp);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero();
        for (e, x) in &self.terms {
            out.add_term(*e, x * c);
        }
        out
    }

    pub fn shift(&self, by: i64) -> Self {
        Self { terms: self.terms.iter().map(|(e, c)| (e + by, c.clone())).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(e1 + e2, c1 * c2);
            }
        }
        out
    }

    /// First odd or positive exponent, if any.
    pub fn non_genus_exponent(&self) -> Option<i64> {
        self.terms.keys().copied().find(|&e| e > 0 || e % 2 != 0)
    }
}

impl fmt::Display for LaurentN {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().rev().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match e {
                0 => write!(f, "{}", format_q(c))?,
                _ => write!(f, "{}*N^{e}", format_q(c))?,
            }
        }
        Ok(())
    }
}

/// Number of pairings per `(faces, components)`.
pub type Census = HashMap<(usize, usize), u64>;

fn enumerate(layout: &Layout, mate: &mut [usize], census: &mut Census) {
    let Some(h) = mate.iter().position(|&m| m == usize::MAX) else {
        *census.entry((layout.faces(mate), layout.components(mate))).or_insert(0) += 1;
        return;
    };
    for j in h + 1..layout.len() {
        if mate[j] == usize::MAX && layout.color[j] == layout.color[h] {
            mate[h] = j;
            mate[j] = h;
            enumerate(layout, mate, census);
            mate[h] = usize::MAX;
            mate[j] = usize::MAX;
        }
    }
}

fn merge(mut a: Census, b: Census) -> Census {
    for (k, v) in b {
        *a.entry(k).or_insert(0) += v;
    }
    a
}

/// Census of every colour-respecting pairing, split over the partners of half-edge 0.
pub fn census(stars: &[Star], budget: usize) -> Result<Census, GaussWickError> {
    let layout = Layout::new(stars);
    let h = layout.len();
    if h > budget {
        return Err(GaussWickError::BudgetExceeded { half_edges: h, budget });
    }
    let mut per_color: HashMap<Color, usize> = HashMap::new();
    for &c in &layout.color {
        *per_color.entry(c).or_insert(0) += 1;
    }
    if per_color.values().any(|k| k % 2 == 1) {
        return Ok(Census::new());
    }
    if h == 0 {
        return Ok(Census::from([((0, stars.len()), 1)]));
    }
    let firsts: Vec<usize> = (1..h).filter(|&j| layout.color[j] == layout.color[0]).collect();
    Ok(exec::map_reduce(
        firsts,
        |j| {
            let mut mate = vec![usize::MAX; h];
            mate[0] = j;
            mate[j] = 0;
            let mut c = Census::new();
            enumerate(&layout, &mut mate, &mut c);
            c
        },
        Census::new,
        merge,
    ))
}

/// `E[Π_i tr q_i(X)]` for `d` independent GUE matrices.
pub fn gue_mixed_moment(stars: &[Star], d: usize) -> Result<LaurentN, GaussWickError> {
    debug_assert!(stars.iter().all(|s| s.word.iter().all(|&c| c >= 1 && c as usize <= d)));
    let edges = stars.iter().map(|s| s.word.len()).sum::<usize>() as i64 / 2;
    let mut out = LaurentN::zero();
    for ((f, _), count) in census(stars, DEFAULT_HALF_EDGE_BUDGET)? {
        out.add_term(f as i64 - edges, qi(count as i64));
    }
    Ok(out)
}

/// All multisets of size `k` over `r` types, as multiplicity vectors.
pub fn multisets(r: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(r: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == r {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for m in 0..=k {
            prefix.push(m);
            rec(r, k - m, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if r == 0 {
        if k == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(r, k, &mut Vec::new(), &mut out);
    out
}

/// `Π_i t_i^{m_i} / m_i!` and the stars of a multiset.
fn multiset_weight(v: &Potential, mult: &[usize]) -> (Q, Vec<Star>) {
    let mut w = Q::one();
    let mut stars = Vec::new();
    for ((t, word), &m) in v.terms().iter().zip(mult) {
        w *= num_traits::pow(t.clone(), m) / Q::from_integer(factorial(m as u32));
        stars.extend(std::iter::repeat_n(Star { word: word.clone() }, m));
    }
    (w, stars)
}

/// `Σ_{|m| = k} Π t^m/m! E[Π tr(stars) · tr(q)^m]`, the order-`k` part of `E[... (tr V)^k]/k!`.
fn expanded_moment(prefix: &[Star], v: &Potential, k: usize, d: usize) -> Result<LaurentN, GaussWickError> {
    let mut out = LaurentN::zero();
    for mult in multisets(v.terms().len(), k) {
        let (w, extra) = multiset_weight(v, &mult);
        let mut stars = prefix.to_vec();
        stars.extend(extra);
        out = out.add(&gue_mixed_moment(&stars, d)?.scale(&w));
    }
    Ok(out)
}

/// λ-coefficients of `E[ts P e^{-λN tr V}] / E[e^{-λN tr V}]` for `P = Σ c_j q_j`.
pub fn ratio_series(p: &[(Q, Word)], v: &Potential, order: usize) -> Result<Vec<LaurentN>, GaussWickError> {
    let d = v.d().max(p.iter().flat_map(|(_, w)| w.iter()).copied().max().unwrap_or(1) as usize);
    let sign = |k: usize| if k.is_multiple_of(2) { Q::one() } else { -Q::one() };
    let mut a = Vec::with_capacity(order + 1);
    let mut b = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut ak = LaurentN::zero();
        for (c, w) in p {
            // ts(1) = 1 carries no star and no 1/N
            let m = match w.is_empty() {
                true => expanded_moment(&[], v, k, d)?.shift(1),
                false => expanded_moment(&[Star::new(w.clone())?], v, k, d)?,
            };
            ak = ak.add(&m.scale(c));
        }
        a.push(ak.shift(k as i64 - 1).scale(&sign(k)));
        b.push(expanded_moment(&[], v, k, d)?.shift(k as i64).scale(&sign(k)));
    }
    let mut c: Vec<LaurentN> = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut ck = a[k].clone();
        for j in 1..=k {
            ck = ck.sub(&b[j].mul(&c[k - j]));
        }
        if let Some(exp) = ck.non_genus_exponent() {
            return Err(GaussWickError::OddPowerDetected { order: k, exp });
        }
        c.push(ck);
    }
    Ok(c)
}

/// Coefficient of `N^{-2g}` at each λ order.
pub fn genus_coefficient(series: &[LaurentN], g: usize) -> LambdaSeries {
    LambdaSeries::new(series.iter().map(|l| l.coeff(-2 * g as i64)).collect())
}

/// Connected colour-respecting pairings of `root` plus the labelled `vertices` with genus `g`.
pub fn map_count(g: usize, vertices: &[Star], root: &Star) -> Result<u64, GaussWickError> {
    let mut stars = vec![root.clone()];
    stars.extend(vertices.iter().cloned());
    let v = stars.len() as i64;
    let e = stars.iter().map(|s| s.word.len()).sum::<usize>() as i64 / 2;
    Ok(census(&stars, DEFAULT_HALF_EDGE_BUDGET)?
        .into_iter()
        .filter(|&((f, comps), _)| comps == 1 && 2 - v + e - f as i64 == 2 * g as i64)
        .map(|(_, n)| n)
        .sum())
}

/// Both sides of the map-counting identity for one root and genus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapMomentReport {
    /// From the ratio of Gaussian moments.
    pub from_ratio: LambdaSeries,
    /// `Σ_k Σ_{|m|=k} Π (-t_i)^{m_i}/m_i! · map_count`
    pub from_maps: LambdaSeries,
}

impl MapMomentReport {
    pub fn ok(&self) -> bool {
        self.from_ratio == self.from_maps
    }

    /// Per-order ratio `from_ratio / from_maps` where both are nonzero.
    pub fn discrepancy(&self) -> Vec<Option<Q>> {
        self.from_ratio
            .coeffs
            .iter()
            .zip(&self.from_maps.coeffs)
            .map(|(a, b)| (!b.is_zero()).then(|| a / b))
            .collect()
    }
}

pub fn map_series(v: &Potential, root: &Star, g: usize, order: usize) -> Result<LambdaSeries, GaussWickError> {
    let mut coeffs = Vec::with_capacity(order + 1);
    for k in 0..=order {
        let mut total = Q::zero();
        for mult in multisets(v.terms().len(), k) {
            let (w, stars) = multiset_weight(v, &mult);
            let signed = if k % 2 == 0 { w } else { -w };
            total += signed * qi(map_count(g, &stars, root)? as i64);
        }
        coeffs.push(total);
    }
    Ok(LambdaSeries::new(coeffs))
}

pub fn map_moment_check(v: &Potential, root: &Star, g: usize, order: usize) -> Result<MapMomentReport, GaussWickError> {
    let series = ratio_series(&[(Q::one(), root.word.clone())], v, order)?;
    Ok(MapMomentReport { from_ratio: genus_coefficient(&series, g), from_maps: map_series(v, root, g, order)? })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MapCountRow {
    pub genus: usize,
    pub vertices: String,
    pub count: u64,
}

/// Map counts for every vertex multiset of size `≤ order` and genus `≤ g_max`.
pub fn map_count_table(v: &Potential, root: &Star, g_max: usize, order: usize) -> Result<Vec<MapCountRow>, GaussWickError> {
    let mut rows = Vec::new();
    for k in 0..=order {
        for mult in multisets(v.terms().len(), k) {
            let (_, stars) = multiset_weight(v, &mult);
            let label = stars.iter().map(Star::to_string).collect::<Vec<_>>().join(" ");
            for g in 0..=g_max {
                rows.push(MapCountRow { genus: g, vertices: label.clone(), count: map_count(g, &stars, root)? });
            }
        }
    }
    Ok(rows)
}

pub fn map_table_csv(rows: &[MapCountRow]) -> String {
    let mut s = String::from("genus,vertices,count\n");
    for r in rows {
        s.push_str(&format!("{},\"{}\",{}\n", r.genus, r.vertices, r.count));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q;

    fn diagram(words: &[&[Color]], matching: &[(usize, usize)]) -> PairingDiagram {
        let total: usize = words.iter().map(|w| w.len()).sum();
        let mut m = vec![0; total];
        for &(a, b) in matching {
            m[a] = b;
            m[b] = a;
        }
        PairingDiagram { stars: words.iter().map(|w| Star { word: w.to_vec() }).collect(), matching: m }
    }

    #[test]
    fn faces_and_genus() {
        let d = diagram(&[&[1, 1]], &[(0, 1)]);
        assert_eq!((d.faces(), d.genus()), (2, Q::zero()));
        let d = diagram(&[&[1; 4]], &[(0, 1), (2, 3)]);
        assert_eq!((d.faces(), d.genus()), (3, Q::zero()));
        let d = diagram(&[&[1; 4]], &[(0, 2), (1, 3)]);
        assert_eq!((d.faces(), d.genus()), (1, Q::one()));
    }

    #[test]
    fn moments() {
        let n = |c: i64, e: i64| LaurentN::monomial(qi(c), e);
        assert_eq!(gue_mixed_moment(&[Star::power(2)], 1).unwrap(), n(1, 1));
        assert_eq!(gue_mixed_moment(&[Star::power(4)], 1).unwrap(), n(2, 1).add(&n(1, -1)));
        assert_eq!(gue_mixed_moment(&[Star { word: vec![1, 2, 1, 2] }], 2).unwrap(), n(1, -1));
        assert!(gue_mixed_moment(&[Star::power(3)], 1).unwrap().is_zero());
    }

    #[test]
    fn harer_zagier_small() {
        // E[ts X^6] = 5 + 10 N^-2, E[ts X^8] = 14 + 70 N^-2 + 21 N^-4
        let m6 = gue_mixed_moment(&[Star::power(6)], 1).unwrap().shift(-1);
        assert_eq!(m6, LaurentN::constant(qi(5)).add(&LaurentN::monomial(qi(10), -2)));
        let m8 = gue_mixed_moment(&[Star::power(8)], 1).unwrap().shift(-1);
        assert_eq!(m8.coeff(0), qi(14));
        assert_eq!(m8.coeff(-2), qi(70));
        assert_eq!(m8.coeff(-4), qi(21));
    }

    #[test]
    fn map_counts() {
        assert_eq!(map_count(0, &[], &Star::power(2)).unwrap(), 1);
        assert_eq!(map_count(0, &[], &Star::power(4)).unwrap(), 2);
        assert_eq!(map_count(1, &[], &Star::power(4)).unwrap(), 1);
        assert_eq!(map_count(0, &[], &Star { word: vec![1, 2, 1, 2] }).unwrap(), 0);
        assert_eq!(map_count(0, &[Star::power(4)], &Star::power(2)).unwrap(), 8);
    }

    #[test]
    fn quadratic_ratio() {
        let s = ratio_series(&[(qi(1), vec![1, 1])], &Potential::quadratic(1), 4).unwrap();
        for (k, l) in s.iter().enumerate() {
            assert_eq!(*l, LaurentN::constant(qi((-2i64).pow(k as u32))));
        }
    }

    #[test]
    fn quartic_first_order() {
        let s = ratio_series(&[(qi(1), vec![1, 1])], &Potential::power(4), 1).unwrap();
        assert_eq!(s[0], LaurentN::constant(qi(1)));
        assert_eq!(s[1].coeff(0), qi(-8));
    }

    #[test]
    fn multiset_enumeration() {
        assert_eq!(multisets(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(multisets(1, 3), vec![vec![3]]);
        assert_eq!(multisets(3, 2).len(), 6);
    }

    #[test]
    fn map_moment_small() {
        let r = map_moment_check(&Potential::power(4), &Star::power(2), 0, 2).unwrap();
        assert!(r.ok(), "{r:?}");
        assert_eq!(r.from_maps.coeffs[1], qi(-8));
        let r = map_moment_check(&Potential::quadratic(1), &Star::power(2), 1, 3).unwrap();
        assert!(r.ok() && r.from_ratio.is_zero());
        assert_eq!(r.discrepancy()[0], None);
        let _ = q(1, 2);
    }

    #[test]
    fn laurent_display() {
        let l = LaurentN::constant(qi(2)).add(&LaurentN::monomial(qi(1), -2));
        assert_eq!(l.to_string(), "2 + 1*N^-2");
    }
}
