//! Free Wick calculus for the interpolated semicircular families.
//!
//! Times are the symbols `1..=n` of the coefficient ring, already sorted:
//! symbol `l` is the `l`-th smallest time `τ_l`, and `τ_0 = 0`. A label `I` at
//! level `h` stands for
//!
//! `e^{τ_h/2} ( Σ_{l=h+1}^{n} (e^{-τ_{l-1}} - e^{-τ_l})^{1/2} x^{I_l} + e^{-τ_n/2} x )`
//!
//! Square-root weights are never materialized: covariances only need products
//! of two weights at the same position, which are exponential polynomials.

use thiserror::Error;

use crate::expalg::{ExpPoly, HalfLinForm, Sym};
use crate::ncpoly::{Color, Monomial, NCPoly, VarLabel};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FreeWickError {
    #[error("pairings need an even number of points, got {0}")]
    OddLength(usize),
    #[error("{p} points exceed the pairing enumeration bound {bound}")]
    TooLarge { p: usize, bound: usize },
    #[error("label {label} does not fit in a time context with {n} times")]
    UnknownLabel { label: String, n: usize },
    #[error("labels {0} and {1} share a generator at different positions")]
    Incommensurate(String, String),
}

pub const MAX_ENUMERATED_POINTS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    /// The terminal semicircular system.
    Base,
    Copy(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GeneratorId {
    pub color: Color,
    pub family: Family,
}

/// Symbolic weight of one generator inside an interpolant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovFactor {
    /// `(e^{-τ_{l-1}} - e^{-τ_l})^{1/2}`
    Step(usize),
    /// `e^{-τ_n/2}`
    Terminal,
}

/// The generators behind one label, with the common prefactor `e^{τ_level/2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpolant {
    pub level: usize,
    pub parts: Vec<(GeneratorId, CovFactor)>,
}

impl Interpolant {
    pub fn for_label(label: &VarLabel, n: usize) -> Result<Self, FreeWickError> {
        if label.index.len() > n {
            return Err(FreeWickError::UnknownLabel { label: label.to_string(), n });
        }
        let level = label.index.level(n);
        let mut parts: Vec<_> = label
            .index
            .entries()
            .iter()
            .enumerate()
            .map(|(k, &e)| (GeneratorId { color: label.color, family: Family::Copy(e) }, CovFactor::Step(level + 1 + k)))
            .collect();
        parts.push((GeneratorId { color: label.color, family: Family::Base }, CovFactor::Terminal));
        Ok(Self { level, parts })
    }
}

/// `e^{-τ_l}` as a doubled linear form (zero form for `l = 0`).
fn minus_tau(l: usize) -> HalfLinForm {
    if l == 0 {
        HalfLinForm::zero()
    } else {
        HalfLinForm::single(l as Sym, -2)
    }
}

fn half_tau(l: usize) -> HalfLinForm {
    if l == 0 {
        HalfLinForm::zero()
    } else {
        HalfLinForm::single(l as Sym, 1)
    }
}

/// Second moment `τ(x_u x_v)` of two interpolated labels in a context with `n` times.
pub fn covariance(u: &VarLabel, v: &VarLabel, n: usize) -> Result<ExpPoly, FreeWickError> {
    if u.color != v.color {
        return Ok(ExpPoly::zero());
    }
    let iu = Interpolant::for_label(u, n)?;
    let iv = Interpolant::for_label(v, n)?;
    let mut inner = ExpPoly::exp(minus_tau(n));
    for (gu, fu) in &iu.parts {
        for (gv, fv) in &iv.parts {
            if gu != gv {
                continue;
            }
            match (fu, fv) {
                (CovFactor::Terminal, CovFactor::Terminal) => {}
                (CovFactor::Step(a), CovFactor::Step(b)) if a == b => {
                    inner = inner.add(&ExpPoly::exp(minus_tau(a - 1))).sub(&ExpPoly::exp(minus_tau(*a)));
                }
                _ => return Err(FreeWickError::Incommensurate(u.to_string(), v.to_string())),
            }
        }
    }
    let pre = half_tau(iu.level).plus(&half_tau(iv.level));
    Ok(inner.mul(&ExpPoly::exp(pre)))
}

/// All non-crossing perfect matchings of `0..p`, as lists of pairs `(a, b)` with `a < b`.
pub fn noncrossing_pairings(p: usize) -> Result<Vec<Vec<(usize, usize)>>, FreeWickError> {
    if p % 2 == 1 {
        return Err(FreeWickError::OddLength(p));
    }
    if p > MAX_ENUMERATED_POINTS {
        return Err(FreeWickError::TooLarge { p, bound: MAX_ENUMERATED_POINTS });
    }
    fn rec(lo: usize, hi: usize) -> Vec<Vec<(usize, usize)>> {
        if lo >= hi {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        for k in (lo + 1..hi).step_by(2) {
            let inner = rec(lo + 1, k);
            let outer = rec(k + 1, hi);
            for a in &inner {
                for b in &outer {
                    let mut v = Vec::with_capacity(a.len() + b.len() + 1);
                    v.push((lo, k));
                    v.extend_from_slice(a);
                    v.extend_from_slice(b);
                    out.push(v);
                }
            }
        }
        out
    }
    Ok(rec(0, p))
}

/// Free moment of a word: sum over non-crossing pairings of covariance products,
/// via the interval recursion `f(i,j) = Σ_k cov(w_i, w_k) f(i+1,k) f(k+1,j)`.
pub fn tau(word: &Monomial, n: usize) -> Result<ExpPoly, FreeWickError> {
    let w = word.letters();
    let len = w.len();
    for l in w {
        if l.index.len() > n {
            return Err(FreeWickError::UnknownLabel { label: l.to_string(), n });
        }
    }
    if len % 2 == 1 {
        return Ok(ExpPoly::zero());
    }
    if len == 0 {
        return Ok(ExpPoly::one());
    }
    let mut cov = vec![vec![None::<ExpPoly>; len]; len];
    for i in 0..len {
        for k in (i + 1..len).step_by(2) {
            let c = covariance(&w[i], &w[k], n)?;
            if !c.is_zero() {
                cov[i][k] = Some(c);
            }
        }
    }
    // f[i][j] covers the half-open interval i..j; only even lengths are used.
    let mut f = vec![vec![ExpPoly::zero(); len + 1]; len + 1];
    for (i, row) in f.iter_mut().enumerate() {
        row[i] = ExpPoly::one();
    }
    for span in (2..=len).step_by(2) {
        for i in 0..=len - span {
            let j = i + span;
            let mut acc = ExpPoly::zero();
            for k in (i + 1..j).step_by(2) {
                let Some(c) = &cov[i][k] else { continue };
                if f[i + 1][k].is_zero() || f[k + 1][j].is_zero() {
                    continue;
                }
                acc.add_assign_ref(&c.mul(&f[i + 1][k]).mul(&f[k + 1][j]));
            }
            f[i][j] = acc;
        }
    }
    Ok(std::mem::take(&mut f[0][len]))
}

/// Linear extension of [`tau`].
pub fn tau_poly(p: &NCPoly, n: usize) -> Result<ExpPoly, FreeWickError> {
    let mut out = ExpPoly::zero();
    for (m, c) in p.terms() {
        let t = tau(m, n)?;
        if !t.is_zero() {
            out.add_assign_ref(&t.mul(c));
        }
    }
    Ok(out)
}

/// Catalan number `C_k`.
pub fn catalan(k: u64) -> u64 {
    (0..k).fold(1u64, |c, i| c * 2 * (2 * i + 1) / (i + 2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncpoly::IndexList;
    use crate::rational::qi;
    use std::collections::HashMap;

    fn lab(color: Color, e: &[u32]) -> VarLabel {
        VarLabel::new(color, IndexList::new(e))
    }

    #[test]
    fn pairing_counts() {
        assert_eq!(noncrossing_pairings(2).unwrap().len(), 1);
        assert_eq!(noncrossing_pairings(4).unwrap().len(), 2);
        assert_eq!(noncrossing_pairings(6).unwrap().len(), 5);
        assert!(!noncrossing_pairings(4).unwrap().contains(&vec![(0, 2), (1, 3)]));
        assert_eq!(noncrossing_pairings(3), Err(FreeWickError::OddLength(3)));
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(covariance(&lab(1, &[]), &lab(1, &[]), 0).unwrap(), ExpPoly::one());
        assert!(covariance(&lab(1, &[]), &lab(2, &[]), 0).unwrap().is_zero());
        let got = covariance(&lab(1, &[1]), &lab(1, &[]), 1).unwrap();
        assert_eq!(got, ExpPoly::exp(HalfLinForm::single(1, -1)));
    }

    #[test]
    fn diagonal_is_one() {
        let n = 3;
        for e in [&[][..], &[4], &[2, 5], &[1, 2, 3]] {
            let l = lab(1, e);
            let c = covariance(&l, &l, n).unwrap();
            for ts in [[0.1, 0.5, 2.0], [1.0, 1.0, 3.0]] {
                let asg: HashMap<Sym, f64> = ts.iter().enumerate().map(|(i, &t)| (i as Sym + 1, t)).collect();
                assert!((c.eval_numeric(&asg).unwrap() - 1.0).abs() < 1e-12, "{l}");
            }
        }
    }

    #[test]
    fn endpoints_of_interpolation() {
        let c = covariance(&lab(1, &[1]), &lab(1, &[]), 1).unwrap();
        assert_eq!(c.eval_numeric(&HashMap::from([(1, 0.0)])).unwrap(), 1.0);
        assert!(c.eval_numeric(&HashMap::from([(1, 60.0)])).unwrap() < 1e-12);
    }

    #[test]
    fn incommensurate_positions_rejected() {
        assert!(matches!(
            covariance(&lab(1, &[3, 5]), &lab(1, &[3]), 2),
            Err(FreeWickError::Incommensurate(..))
        ));
    }

    #[test]
    fn moments() {
        let x = |k: usize| Monomial::base_word(&vec![1; k]);
        assert_eq!(tau(&x(2), 0).unwrap(), ExpPoly::one());
        assert_eq!(tau(&x(4), 0).unwrap(), ExpPoly::constant(qi(2)));
        assert!(tau(&Monomial::base_word(&[1, 2, 1, 2]), 0).unwrap().is_zero());
        for k in 0..=6 {
            assert_eq!(tau(&x(2 * k), 0).unwrap(), ExpPoly::constant(qi(catalan(k as u64) as i64)));
        }
        assert_eq!(tau_poly(&NCPoly::one(), 0).unwrap(), ExpPoly::one());
        let e = ExpPoly::exp(HalfLinForm::single(1, -2));
        assert_eq!(tau_poly(&NCPoly::term(x(2), e.clone()), 1).unwrap(), e);
        assert_eq!(tau_poly(&NCPoly::monomial(x(6)), 0).unwrap(), ExpPoly::constant(qi(5)));
    }

    #[test]
    fn recursion_matches_explicit_pairings() {
        let w = Monomial::from_labels([lab(1, &[1]), lab(1, &[]), lab(1, &[2, 1]), lab(1, &[3]), lab(1, &[]), lab(1, &[1])]);
        let n = 2;
        let mut brute = ExpPoly::zero();
        for pi in noncrossing_pairings(6).unwrap() {
            let mut prod = ExpPoly::one();
            for (a, b) in pi {
                prod = prod.mul(&covariance(&w.letters()[a], &w.letters()[b], n).unwrap());
            }
            brute = brute.add(&prod);
        }
        assert_eq!(tau(&w, n).unwrap(), brute);
    }
}
