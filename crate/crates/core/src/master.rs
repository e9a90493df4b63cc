//! The operators `∇_V` and `L` of the master equation, and the series they build.
//!
//! Time symbols of an [`OperatorState`] are always the ranks `1..=n` of the
//! current times in increasing order. `∇` appends a new largest time. `L`
//! appends a new largest time `t_c` and a drop time `t_d ∈ [τ_{s-1}, τ_s]`;
//! each `s` is returned as its own piece, with the existing symbols `≥ s`
//! shifted up so that `t_d` takes rank `s`. Every piece is thereby integrated
//! over the plain chain `0 ≤ t_1 ≤ ... ≤ t_n`.

use std::collections::HashMap;

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exec;
use crate::expalg::{integrate_domain, DomainSpec, ExpAlgError, ExpPoly, HalfLinForm, Shape, Sym};
use crate::freewick::{tau_poly, FreeWickError};
use crate::ncpoly::{next_c, next_n, Color, History, LabelMap, Monomial, NCPoly, Step, VarLabel};
use crate::rational::{format_q, q, qi, Q};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MasterError {
    #[error(transparent)]
    ExpAlg(#[from] ExpAlgError),
    #[error(transparent)]
    FreeWick(#[from] FreeWickError),
    #[error("potential is not trace self-adjoint: the class of {0} has no matching conjugate")]
    NotSelfAdjoint(String),
    #[error("exact engine needs real coefficients; {0} has an imaginary part")]
    ComplexCoefficient(String),
    #[error("color {color} outside 1..={d}")]
    BadColor { color: Color, d: usize },
    #[error("observable must use base variables only, found {0}")]
    NotBase(String),
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
}

/// Word over colors `1..=d`.
pub type Word = Vec<Color>;

fn word_string(w: &[Color]) -> String {
    Monomial::base_word(w).to_string()
}

fn cyclic_min(w: &[Color]) -> Word {
    (0..w.len().max(1))
        .map(|r| w[r.min(w.len())..].iter().chain(&w[..r.min(w.len())]).copied().collect::<Word>())
        .min()
        .unwrap()
}

/// Checks that `tr V` is real for Hermitian arguments: the coefficient sum of
/// every cyclic class equals the conjugate of the sum over the reversed class.
pub fn check_trace_self_adjoint(terms: &[((Q, Q), Word)]) -> Result<(), MasterError> {
    let mut classes: HashMap<Word, (Q, Q)> = HashMap::new();
    for ((re, im), w) in terms {
        let e = classes.entry(cyclic_min(w)).or_insert((Q::zero(), Q::zero()));
        e.0 += re;
        e.1 += im;
    }
    let mut keys: Vec<_> = classes.keys().cloned().collect();
    keys.sort();
    for k in keys {
        let (re, im) = &classes[&k];
        let rev: Word = k.iter().rev().copied().collect();
        let zero = (Q::zero(), Q::zero());
        let (rre, rim) = classes.get(&cyclic_min(&rev)).unwrap_or(&zero);
        if re != rre || *im != -rim.clone() {
            return Err(MasterError::NotSelfAdjoint(word_string(&k)));
        }
    }
    Ok(())
}

/// Polynomial potential over base variables with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Potential {
    d: usize,
    terms: Vec<(Q, Word)>,
    poly: NCPoly,
    derivs: Vec<NCPoly>,
}

impl Potential {
    pub fn new(terms: Vec<(Q, Word)>, d: usize) -> Result<Self, MasterError> {
        let complex: Vec<_> = terms.into_iter().map(|(c, w)| ((c, Q::zero()), w)).collect();
        Self::from_complex(complex, d)
    }

    /// Accepts complex coefficients for the self-adjointness check, then
    /// rejects any remaining imaginary part.
    pub fn from_complex(terms: Vec<((Q, Q), Word)>, d: usize) -> Result<Self, MasterError> {
        for (_, w) in &terms {
            for &c in w {
                if c == 0 || c as usize > d {
                    return Err(MasterError::BadColor { color: c, d });
                }
            }
        }
        check_trace_self_adjoint(&terms)?;
        if let Some((_, w)) = terms.iter().find(|((_, im), _)| !im.is_zero()) {
            return Err(MasterError::ComplexCoefficient(word_string(w)));
        }
        let terms: Vec<(Q, Word)> = terms.into_iter().filter(|((re, _), _)| !re.is_zero()).map(|((re, _), w)| (re, w)).collect();
        let poly = NCPoly::from_rational_terms(terms.iter().map(|(c, w)| (c.clone(), Monomial::base_word(w))));
        let derivs = (1..=d as Color).map(|i| crate::ncpoly::cyclic_d(&poly, i)).collect();
        Ok(Self { d, terms, poly, derivs })
    }

    /// `Σ_i X_i^2`
    pub fn quadratic(d: usize) -> Self {
        Self::new((1..=d as Color).map(|i| (qi(1), vec![i, i])).collect(), d).unwrap()
    }

    /// `X_1^k` in one color.
    pub fn power(k: usize) -> Self {
        Self::new(vec![(qi(1), vec![1; k])], 1).unwrap()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[(Q, Word)] {
        &self.terms
    }

    pub fn poly(&self) -> &NCPoly {
        &self.poly
    }

    pub fn deg(&self) -> usize {
        self.terms.iter().map(|(_, w)| w.len()).max().unwrap_or(0)
    }

    /// `D_i V` over base variables, colors 1-based.
    pub fn cyclic_derivative(&self, i: Color) -> &NCPoly {
        &self.derivs[i as usize - 1]
    }
}

/// Current polynomial plus the bookkeeping needed to keep applying operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OperatorState {
    pub poly: NCPoly,
    pub history: History,
    /// Number of times, equal to the largest label length.
    pub n: usize,
    /// Largest index entry in the label universe.
    pub c: u32,
}

impl OperatorState {
    pub fn initial(p: NCPoly) -> Self {
        Self { poly: p, history: History::default(), n: 0, c: 0 }
    }

    fn advance(&self, poly: NCPoly, step: Step) -> Self {
        Self {
            poly,
            history: self.history.push(step),
            n: next_n(step, self.n),
            c: next_c(step, self.c, self.n),
        }
    }

    /// Chain domain over all current times.
    pub fn domain(&self) -> DomainSpec {
        DomainSpec::chain((1..=self.n as Sym).collect())
    }
}

/// Doubled form of `τ_h / 2` (zero for `h = 0`).
fn half(h: usize) -> HalfLinForm {
    if h == 0 {
        HalfLinForm::zero()
    } else {
        HalfLinForm::single(h as Sym, 1)
    }
}

pub fn nabla(state: &OperatorState, v: &Potential) -> OperatorState {
    let n = state.n;
    let t_new = (n + 1) as Sym;
    let gplus = LabelMap::GPlus { c: state.c };
    let mut out = NCPoly::zero();
    for (m, coef) in state.poly.terms() {
        for (p, letter) in m.letters().iter().enumerate() {
            let dv = v.cyclic_derivative(letter.color);
            if dv.is_zero() {
                continue;
            }
            let h = letter.index.level(n);
            let rot = m.rotate_out(p).map_labels(|l| gplus.apply_label(l)).expect("labels lie in the universe");
            let mut form = half(h);
            form.add_entry(t_new, -1);
            let factor = coef.mul_exp(&q(1, 2), &form);
            for (vm, vc) in dv.terms() {
                out.add_term(rot.concat(vm), factor.mul(vc));
            }
        }
    }
    state.advance(out, Step::G)
}

/// Renames symbols `r >= s` to `r + 1`.
fn shift_symbols(f: &ExpPoly, s: Sym) -> ExpPoly {
    let mut out = ExpPoly::zero();
    for (shape, c) in f.terms() {
        let mut powers = crate::expalg::Powers::one();
        for &(sym, k) in shape.powers.entries() {
            powers.mul_entry(if sym >= s { sym + 1 } else { sym }, k);
        }
        let expo = HalfLinForm::from_doubled(shape.expo.entries().iter().map(|&(sym, a)| (if sym >= s { sym + 1 } else { sym }, a)));
        out.add_term(Shape { powers, expo }, c.clone());
    }
    out
}

fn relabel_word(w: &[VarLabel], map: &LabelMap) -> Monomial {
    Monomial::from_labels(w.iter().map(|l| map.apply_label(l).expect("labels lie in the universe")))
}

/// The pieces `L_s`, `s = 1..=n+1`, each already restricted to its region.
pub fn op_l(state: &OperatorState) -> Vec<OperatorState> {
    let n = state.n;
    let c = state.c;
    (1..=n + 1)
        .map(|s| {
            let t_d = s as Sym;
            let t_c = (n + 2) as Sym;
            // Old rank h sits at rank h (h < s) or h+1 (h >= s) after inserting t_d.
            let rank = |h: usize| if h < s { h } else { h + 1 };
            let f1 = LabelMap::F1 { s, n, c };
            let f2 = LabelMap::F2 { s, n, c };
            let f1t = LabelMap::F1Tilde { s, n, c };
            let f2t = LabelMap::F2Tilde { s, n, c };
            let mut out = NCPoly::zero();
            for (m, coef) in state.poly.terms() {
                let coef = shift_symbols(coef, t_d);
                let w = m.letters();
                for (p1, l1) in w.iter().enumerate() {
                    let i = l1.color;
                    let h = l1.index.level(n);
                    let u = m.rotate_out(p1);
                    let u = u.letters();
                    for (p2, l2) in u.iter().enumerate() {
                        if l2.color != i {
                            continue;
                        }
                        let k = l2.index.level(n);
                        let (a, b) = (&u[..p2], &u[p2 + 1..]);
                        for (q1, la) in a.iter().enumerate() {
                            let x = la.index.level(n);
                            if x + 1 > s {
                                continue;
                            }
                            for (q2, lb) in b.iter().enumerate() {
                                let y = lb.index.level(n);
                                if lb.color != la.color || y + 1 > s {
                                    continue;
                                }
                                if s <= n && la.index.at_position(s, n) != lb.index.at_position(s, n) {
                                    continue;
                                }
                                let (a1, a2) = (&a[..q1], &a[q1 + 1..]);
                                let (b1, b2) = (&b[..q2], &b[q2 + 1..]);
                                let word = relabel_word(a2, &f1)
                                    .concat(&relabel_word(a1, &f1t))
                                    .concat(&relabel_word(b2, &f2t))
                                    .concat(&relabel_word(b1, &f2));
                                let mut form = half(rank(h)).plus(&half(rank(k))).plus(&half(x)).plus(&half(y));
                                form.add_entry(t_c, -2);
                                form.add_entry(t_d, -2);
                                out.add_term(word, coef.mul_exp(&q(1, 2), &form));
                            }
                        }
                    }
                }
            }
            state.advance(out, Step::Fj(s))
        })
        .collect()
}

/// Limits on the symbolic expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    pub max_lambda_order: usize,
    pub max_genus: usize,
    /// Largest number of monomials allowed in any intermediate polynomial.
    pub max_terms: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_lambda_order: 10, max_genus: 3, max_terms: 4_000_000 }
    }
}

/// Truncated power series `Σ_{k=0}^{K} c_k λ^k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaSeries {
    pub coeffs: Vec<Q>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Truncation {
    #[serde(rename = "K")]
    pub k: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SeriesRecord {
    pub n: usize,
    pub lambda_coeffs: Vec<String>,
    pub truncation: Truncation,
}

impl LambdaSeries {
    pub fn new(coeffs: Vec<Q>) -> Self {
        assert!(!coeffs.is_empty(), "series needs at least the constant term");
        Self { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        Self { coeffs: vec![Q::zero(); order + 1] }
    }

    pub fn from_ints(cs: &[i64]) -> Self {
        Self::new(cs.iter().map(|&c| qi(c)).collect())
    }

    /// Truncation order `K`.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self { coeffs: self.coeffs.iter().take(order + 1).cloned().collect() }
    }

    /// Horner evaluation.
    pub fn eval(&self, lambda: &Q) -> Q {
        self.coeffs.iter().rev().fold(Q::zero(), |acc, c| acc * lambda + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        Self::new((0..=k).map(|i| &self.coeffs[i] + &other.coeffs[i]).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        Self::new((0..=k).map(|i| &self.coeffs[i] - &other.coeffs[i]).collect())
    }

    pub fn scale(&self, c: &Q) -> Self {
        Self::new(self.coeffs.iter().map(|x| x * c).collect())
    }

    /// Product truncated at the smaller order.
    pub fn mul(&self, other: &Self) -> Self {
        let k = self.order().min(other.order());
        let mut out = vec![Q::zero(); k + 1];
        for (i, a) in self.coeffs.iter().enumerate().take(k + 1) {
            for (j, b) in other.coeffs.iter().enumerate().take(k + 1 - i) {
                out[i + j] += a * b;
            }
        }
        Self::new(out)
    }

    /// `λ · f`, one order higher.
    pub fn shift_up(&self) -> Self {
        let mut c = vec![Q::zero()];
        c.extend(self.coeffs.iter().cloned());
        Self::new(c)
    }

    /// `∫_0^λ f`, one order higher.
    pub fn antiderivative(&self) -> Self {
        let mut c = vec![Q::zero()];
        c.extend(self.coeffs.iter().enumerate().map(|(k, x)| x / qi(k as i64 + 1)));
        Self::new(c)
    }

    /// `f'`, one order lower (order 0 stays a zero constant).
    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Self::zero(0);
        }
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(k, x)| x * qi(k as i64)).collect())
    }

    pub fn record(&self, n: usize) -> SeriesRecord {
        SeriesRecord {
            n,
            lambda_coeffs: self.coeffs.iter().map(format_q).collect(),
            truncation: Truncation { k: self.order() },
        }
    }
}

/// Checks that `p` only uses base labels of colors `1..=d`.
pub fn check_observable(p: &NCPoly, d: usize) -> Result<(), MasterError> {
    for (m, c) in p.terms() {
        for l in m.letters() {
            if !l.index.is_empty() {
                return Err(MasterError::NotBase(l.to_string()));
            }
            if l.color == 0 || l.color as usize > d {
                return Err(MasterError::BadColor { color: l.color, d });
            }
        }
        if c.as_constant().is_none() {
            return Err(MasterError::NotBase(format!("time-dependent coefficient on {m}")));
        }
    }
    Ok(())
}

/// Per-λ-order accumulators of signed free moments, before time integration.
fn expand(
    state: OperatorState,
    nabla_count: usize,
    l_count: usize,
    genus: usize,
    order: usize,
    v: &Potential,
    budget: &Budget,
) -> Result<Vec<ExpPoly>, MasterError> {
    let mut acc = vec![ExpPoly::zero(); order + 1];
    if state.poly.is_zero() {
        return Ok(acc);
    }
    if state.poly.nb() > budget.max_terms {
        return Err(MasterError::BudgetExceeded(format!(
            "{} monomials after {nabla_count} nabla and {l_count} L steps",
            state.poly.nb()
        )));
    }
    if l_count == genus {
        let t = tau_poly(&state.poly, state.n)?;
        acc[nabla_count] = if nabla_count % 2 == 1 { t.neg() } else { t };
    }
    let mut children = Vec::new();
    if nabla_count < order {
        children.push((nabla(&state, v), nabla_count + 1, l_count));
    }
    if l_count < genus {
        children.extend(op_l(&state).into_iter().map(|s| (s, nabla_count, l_count + 1)));
    }
    drop(state);
    let results = exec::map(children, |(s, a, b)| expand(s, a, b, genus, order, v, budget));
    for r in results {
        for (slot, e) in acc.iter_mut().zip(r?) {
            slot.add_assign_ref(&e);
        }
    }
    Ok(acc)
}

/// `α_n^V(λ, P)` up to `λ^K`.
pub fn alpha_series(n: usize, v: &Potential, p: &NCPoly, order: usize) -> Result<LambdaSeries, MasterError> {
    alpha_series_with_budget(n, v, p, order, &Budget::default())
}

pub fn alpha_series_with_budget(
    n: usize,
    v: &Potential,
    p: &NCPoly,
    order: usize,
    budget: &Budget,
) -> Result<LambdaSeries, MasterError> {
    if order > budget.max_lambda_order || n > budget.max_genus {
        return Err(MasterError::BudgetExceeded(format!(
            "order {order} / genus {n} above limits {} / {}",
            budget.max_lambda_order, budget.max_genus
        )));
    }
    check_observable(p, v.d())?;
    let acc = expand(OperatorState::initial(p.clone()), 0, 0, n, order, v, budget)?;
    let coeffs = acc
        .into_iter()
        .enumerate()
        .map(|(k, f)| {
            let times = k + 2 * n;
            let d = DomainSpec::chain((1..=times as Sym).collect());
            if times == 0 {
                return Ok(f.as_constant().expect("no times, no symbols"));
            }
            integrate_domain(&f, &d)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LambdaSeries::new(coeffs))
}

/// Value of the truncated series with the size of its last retained term.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlphaEval {
    pub value: Q,
    pub last_term: Q,
}

pub fn alpha_eval(n: usize, v: &Potential, p: &NCPoly, lambda: &Q, order: usize) -> Result<AlphaEval, MasterError> {
    let s = alpha_series(n, v, p, order)?;
    let last = s.coeffs.last().unwrap() * num_traits::pow(lambda.clone(), order);
    Ok(AlphaEval { value: s.eval(lambda), last_term: last.abs() })
}

/// `-∫_0^λ α_n(ν, V) dν` for `n = 0..=n_max`, with `α_n` taken to order `K`.
pub fn free_energy_series(v: &Potential, n_max: usize, order: usize) -> Result<Vec<LambdaSeries>, MasterError> {
    (0..=n_max)
        .map(|n| Ok(alpha_series(n, v, v.poly(), order)?.antiderivative().scale(&-Q::one())))
        .collect()
}

/// The two equivalent series for the free entropy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeEntropy {
    /// `λ α_0(λ) - ∫_0^λ α_0`
    pub by_difference: LambdaSeries,
    /// `∫_0^λ s α_0'(s) ds`
    pub by_parts: LambdaSeries,
}

impl FreeEntropy {
    pub fn from_alpha0(alpha0: &LambdaSeries) -> Self {
        let by_difference = alpha0.shift_up().sub(&alpha0.antiderivative());
        let by_parts = alpha0.derivative().shift_up().antiderivative();
        // derivative drops the top order; pad back so both have order K+1.
        let mut c = by_parts.coeffs;
        c.resize(alpha0.order() + 2, Q::zero());
        Self { by_difference, by_parts: LambdaSeries::new(c) }
    }

    pub fn agree(&self) -> bool {
        self.by_difference == self.by_parts
    }
}

pub fn free_entropy_series(v: &Potential, order: usize) -> Result<FreeEntropy, MasterError> {
    Ok(FreeEntropy::from_alpha0(&alpha_series(0, v, v.poly(), order)?))
}

/// Free entropy at `λ` from the series truncated at `α_0` order `K`.
pub fn free_entropy(v: &Potential, lambda: &Q, order: usize) -> Result<Q, MasterError> {
    Ok(free_entropy_series(v, order)?.by_difference.eval(lambda))
}
