//! Exponential polynomials in time variables with exact rational coefficients.
//!
//! Every time-dependent prefactor of the expansion is a finite sum of terms
//! `c * t1^m1 * ... * exp((a1/2) t1 + ...)` with `c` rational, `m_i >= 0` and
//! half-integer exponents. The class is closed under products and under the
//! bounded and tail integrals used by [`integrate_domain`].

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use smallvec::SmallVec;
use thiserror::Error;

use crate::rational::{factorial, format_q, q, qi, to_f64, Q};

/// Identifier of a time variable `t_k`.
pub type Sym = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExpAlgError {
    #[error("integral over t{symbol} to infinity diverges (a term has a non-negative exponent)")]
    DivergentIntegral { symbol: Sym },
    #[error("time variable t{0} is not bound")]
    UnboundSymbol(Sym),
    #[error("malformed integration domain: {0}")]
    MalformedDomain(String),
}

/// Linear form in the time variables. Stored coefficients are twice the true
/// ones, so `exp(-t1/2)` is stored as `[(1, -1)]`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfLinForm(SmallVec<[(Sym, i64); 4]>);

impl HalfLinForm {
    pub fn zero() -> Self {
        Self::default()
    }

    /// `doubled/2 * t_sym`
    pub fn single(sym: Sym, doubled: i64) -> Self {
        let mut f = Self::zero();
        f.add_entry(sym, doubled);
        f
    }

    pub fn from_doubled(entries: impl IntoIterator<Item = (Sym, i64)>) -> Self {
        let mut f = Self::zero();
        for (s, c) in entries {
            f.add_entry(s, c);
        }
        f
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Doubled coefficient of `sym`.
    pub fn get(&self, sym: Sym) -> i64 {
        match self.0.binary_search_by_key(&sym, |e| e.0) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn entries(&self) -> &[(Sym, i64)] {
        &self.0
    }

    pub fn add_entry(&mut self, sym: Sym, doubled: i64) {
        if doubled == 0 {
            return;
        }
        match self.0.binary_search_by_key(&sym, |e| e.0) {
            Ok(i) => {
                self.0[i].1 += doubled;
                if self.0[i].1 == 0 {
                    self.0.remove(i);
                }
            }
            Err(i) => self.0.insert(i, (sym, doubled)),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for &(s, c) in &other.0 {
            out.add_entry(s, c);
        }
        out
    }

    fn remove(&mut self, sym: Sym) -> i64 {
        match self.0.binary_search_by_key(&sym, |e| e.0) {
            Ok(i) => self.0.remove(i).1,
            Err(_) => 0,
        }
    }
}

/// Monomial part `t1^m1 * t2^m2 ...`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Powers(SmallVec<[(Sym, u32); 2]>);

impl Powers {
    pub fn one() -> Self {
        Self::default()
    }

    pub fn get(&self, sym: Sym) -> u32 {
        match self.0.binary_search_by_key(&sym, |e| e.0) {
            Ok(i) => self.0[i].1,
            Err(_) => 0,
        }
    }

    pub fn entries(&self) -> &[(Sym, u32)] {
        &self.0
    }

    pub fn mul_entry(&mut self, sym: Sym, k: u32) {
        if k == 0 {
            return;
        }
        match self.0.binary_search_by_key(&sym, |e| e.0) {
            Ok(i) => self.0[i].1 += k,
            Err(i) => self.0.insert(i, (sym, k)),
        }
    }

    fn times(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for &(s, k) in &other.0 {
            out.mul_entry(s, k);
        }
        out
    }

    fn remove(&mut self, sym: Sym) -> u32 {
        match self.0.binary_search_by_key(&sym, |e| e.0) {
            Ok(i) => self.0.remove(i).1,
            Err(_) => 0,
        }
    }
}

/// Shape of a term: everything but the coefficient.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Shape {
    pub powers: Powers,
    pub expo: HalfLinForm,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpTerm {
    pub coeff: Q,
    pub powers: Powers,
    pub expo: HalfLinForm,
}

#[derive(Clone, Default, PartialEq, Eq, Hash)]
pub struct ExpPoly {
    terms: BTreeMap<Shape, Q>,
}

impl ExpPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Q::one())
    }

    pub fn constant(c: Q) -> Self {
        let mut p = Self::zero();
        p.add_term(Shape::default(), c);
        p
    }

    /// `exp(form)`
    pub fn exp(form: HalfLinForm) -> Self {
        Self::term(Q::one(), Powers::one(), form)
    }

    /// `t_sym`
    pub fn var(sym: Sym) -> Self {
        let mut powers = Powers::one();
        powers.mul_entry(sym, 1);
        Self::term(Q::one(), powers, HalfLinForm::zero())
    }

    pub fn term(coeff: Q, powers: Powers, expo: HalfLinForm) -> Self {
        let mut p = Self::zero();
        p.add_term(Shape { powers, expo }, coeff);
        p
    }

    pub fn from_terms(terms: impl IntoIterator<Item = ExpTerm>) -> Self {
        let mut p = Self::zero();
        for t in terms {
            p.add_term(Shape { powers: t.powers, expo: t.expo }, t.coeff);
        }
        p
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

    pub fn terms(&self) -> impl Iterator<Item = (&Shape, &Q)> {
        self.terms.iter()
    }

    pub fn to_terms(&self) -> Vec<ExpTerm> {
        self.terms
            .iter()
            .map(|(s, c)| ExpTerm { coeff: c.clone(), powers: s.powers.clone(), expo: s.expo.clone() })
            .collect()
    }

    /// The value if this is a constant, `None` otherwise.
    pub fn as_constant(&self) -> Option<Q> {
        match self.terms.len() {
            0 => Some(Q::zero()),
            1 => {
                let (s, c) = self.terms.iter().next().unwrap();
                (s.powers.0.is_empty() && s.expo.is_zero()).then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn symbols(&self) -> BTreeSet<Sym> {
        let mut out = BTreeSet::new();
        for s in self.terms.keys() {
            out.extend(s.powers.0.iter().map(|e| e.0));
            out.extend(s.expo.0.iter().map(|e| e.0));
        }
        out
    }

    pub fn add_term(&mut self, shape: Shape, c: Q) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(shape) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add_assign_ref(&mut self, other: &ExpPoly) {
        for (s, c) in &other.terms {
            self.add_term(s.clone(), c.clone());
        }
    }

    pub fn add(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = self.clone();
        out.add_assign_ref(other);
        out
    }

    pub fn sub(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> ExpPoly {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> ExpPoly {
        if c.is_zero() {
            return ExpPoly::zero();
        }
        ExpPoly { terms: self.terms.iter().map(|(s, x)| (s.clone(), x * c)).collect() }
    }

    pub fn mul(&self, other: &ExpPoly) -> ExpPoly {
        let mut out = ExpPoly::zero();
        for (sa, ca) in &self.terms {
            for (sb, cb) in &other.terms {
                let shape = Shape { powers: sa.powers.times(&sb.powers), expo: sa.expo.plus(&sb.expo) };
                out.add_term(shape, ca * cb);
            }
        }
        out
    }

    /// Multiplies every term by `c * exp(form)`.
    pub fn mul_exp(&self, c: &Q, form: &HalfLinForm) -> ExpPoly {
        if c.is_zero() {
            return ExpPoly::zero();
        }
        ExpPoly {
            terms: self
                .terms
                .iter()
                .map(|(s, x)| (Shape { powers: s.powers.clone(), expo: s.expo.plus(form) }, x * c))
                .collect(),
        }
    }

    /// Numeric value at the given time assignment.
    pub fn eval_numeric(&self, assignment: &HashMap<Sym, f64>) -> Result<f64, ExpAlgError> {
        let lookup = |s: Sym| assignment.get(&s).copied().ok_or(ExpAlgError::UnboundSymbol(s));
        let mut total = 0.0;
        for (shape, c) in &self.terms {
            let mut v = to_f64(c);
            for &(s, k) in &shape.powers.0 {
                v *= lookup(s)?.powi(k as i32);
            }
            let mut e = 0.0;
            for &(s, a) in &shape.expo.0 {
                e += a as f64 * 0.5 * lookup(s)?;
            }
            total += v * e.exp();
        }
        Ok(total)
    }

    /// `∫_0^{upper} f dv`. The result no longer depends on `v`.
    pub fn integrate_drop(&self, v: Sym, upper: Sym) -> ExpPoly {
        assert_ne!(v, upper, "integration variable used as its own bound");
        let mut out = ExpPoly::zero();
        for (shape, c) in &self.terms {
            let (k, a, rest) = split_off(shape, v);
            if a == 0 {
                // ∫_0^U v^k dv = U^{k+1}/(k+1)
                let mut powers = rest.powers.clone();
                powers.mul_entry(upper, k + 1);
                out.add_term(Shape { powers, expo: rest.expo.clone() }, c / qi(k as i64 + 1));
            } else {
                let alpha = q(a, 2);
                antiderivative_at(&mut out, c, &rest, k, &alpha, Some(upper), &Q::one());
                antiderivative_at(&mut out, c, &rest, k, &alpha, None, &-Q::one());
            }
        }
        out
    }

    /// `∫_{lower}^∞ f du`, with `lower = None` meaning 0.
    pub fn integrate_chain_tail(&self, u: Sym, lower: Option<Sym>) -> Result<ExpPoly, ExpAlgError> {
        if lower == Some(u) {
            return Err(ExpAlgError::MalformedDomain(format!("t{u} bounded below by itself")));
        }
        let mut out = ExpPoly::zero();
        for (shape, c) in &self.terms {
            let (k, a, rest) = split_off(shape, u);
            if a >= 0 {
                return Err(ExpAlgError::DivergentIntegral { symbol: u });
            }
            let alpha = q(a, 2);
            antiderivative_at(&mut out, c, &rest, k, &alpha, lower, &-Q::one());
        }
        Ok(out)
    }
}

/// Splits `v^k exp(a/2 v) * rest` into `(k, a, rest)`.
fn split_off(shape: &Shape, v: Sym) -> (u32, i64, Shape) {
    let mut rest = shape.clone();
    let k = rest.powers.remove(v);
    let a = rest.expo.remove(v);
    (k, a, rest)
}

/// Adds `sign * c * rest * F(bound)` to `out`, where
/// `F(v) = exp(αv) Σ_j (-1)^j k!/(k-j)! v^{k-j} / α^{j+1}` is the antiderivative of `v^k exp(αv)`.
fn antiderivative_at(out: &mut ExpPoly, c: &Q, rest: &Shape, k: u32, alpha: &Q, bound: Option<Sym>, sign: &Q) {
    let kf = factorial(k);
    let mut alpha_pow = alpha.clone();
    for j in 0..=k {
        let deg = k - j;
        if bound.is_none() && deg != 0 {
            alpha_pow *= alpha;
            continue;
        }
        let falling = Q::from_integer(kf.clone() / factorial(deg));
        let mut coeff = c * sign * falling / &alpha_pow;
        if j % 2 == 1 {
            coeff = -coeff;
        }
        let mut shape = rest.clone();
        if let Some(b) = bound {
            shape.powers.mul_entry(b, deg);
            shape.expo.add_entry(b, (alpha * Q::from_integer(BigInt::from(2))).to_integer().to_i64().unwrap());
        }
        out.add_term(shape, coeff);
        alpha_pow *= alpha;
    }
}

impl fmt::Display for ExpPoly {
    /// `c * t1^m * exp((a/2)*t1 + ...)` terms joined by ` + `.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (shape, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{}", format_q(c))?;
            for &(s, k) in &shape.powers.0 {
                if k == 1 {
                    write!(f, " * t{s}")?;
                } else {
                    write!(f, " * t{s}^{k}")?;
                }
            }
            if !shape.expo.is_zero() {
                write!(f, " * exp(")?;
                for (j, &(s, a)) in shape.expo.0.iter().enumerate() {
                    if j > 0 {
                        write!(f, " + ")?;
                    }
                    write!(f, "({})*t{s}", format_q(&q(a, 2)))?;
                }
                write!(f, ")")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for ExpPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ExpPoly({self})")
    }
}

/// Ordered integration region: `0 <= chain[0] <= chain[1] <= ...` (unbounded
/// above) plus drop variables `0 <= v <= chain[anchor]`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DomainSpec {
    pub chain: Vec<Sym>,
    pub drops: Vec<(Sym, usize)>,
}

impl DomainSpec {
    pub fn chain(chain: Vec<Sym>) -> Self {
        Self { chain, drops: Vec::new() }
    }

    pub fn validate(&self) -> Result<(), ExpAlgError> {
        let mut seen = BTreeSet::new();
        for &s in self.chain.iter().chain(self.drops.iter().map(|d| &d.0)) {
            if !seen.insert(s) {
                return Err(ExpAlgError::MalformedDomain(format!("t{s} appears twice")));
            }
        }
        for &(v, p) in &self.drops {
            if p >= self.chain.len() {
                return Err(ExpAlgError::MalformedDomain(format!("t{v} anchored at missing chain position {p}")));
            }
        }
        Ok(())
    }

    pub fn symbols(&self) -> BTreeSet<Sym> {
        self.chain.iter().copied().chain(self.drops.iter().map(|d| d.0)).collect()
    }
}

/// Exact integral of `f` over `d`: drops first, then the chain from the top down.
pub fn integrate_domain(f: &ExpPoly, d: &DomainSpec) -> Result<Q, ExpAlgError> {
    d.validate()?;
    let bound = d.symbols();
    if let Some(s) = f.symbols().into_iter().find(|s| !bound.contains(s)) {
        return Err(ExpAlgError::UnboundSymbol(s));
    }
    let mut g = f.clone();
    for &(v, p) in &d.drops {
        g = g.integrate_drop(v, d.chain[p]);
    }
    for i in (0..d.chain.len()).rev() {
        let lower = if i == 0 { None } else { Some(d.chain[i - 1]) };
        g = g.integrate_chain_tail(d.chain[i], lower)?;
    }
    Ok(g.as_constant().expect("all symbols integrated out"))
}

/// Tuples `(n_1..n_k)` with `1 <= n_i <= i`.
fn for_each_tuple(k: usize, mut f: impl FnMut(&[usize])) {
    let mut n = vec![1usize; k];
    loop {
        f(&n);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if n[i] < i + 1 {
                n[i] += 1;
                break;
            }
            n[i] = 1;
        }
    }
}

/// `Σ_{E_k} exp(-Σ_i (t_i - t_{n_i - 1}))` with `t_0 = 0` and `t_i` the symbol `i`.
pub fn i_k_integrand(k: usize) -> ExpPoly {
    let mut out = ExpPoly::zero();
    for_each_tuple(k, |n| {
        let mut form = HalfLinForm::zero();
        for (i, &ni) in n.iter().enumerate() {
            form.add_entry(i as Sym + 1, -2);
            if ni > 1 {
                form.add_entry(ni as Sym - 1, 2);
            }
        }
        out.add_term(Shape { powers: Powers::one(), expo: form }, Q::one());
    });
    out
}

/// The ordered-time integral of [`i_k_integrand`] over `0 <= t_1 <= ... <= t_k`.
pub fn i_k_integral(k: usize) -> Result<Q, ExpAlgError> {
    assert!(k >= 1);
    let chain = (1..=k as Sym).collect();
    integrate_domain(&i_k_integrand(k), &DomainSpec::chain(chain))
}

fn tuple_weight(n: &[usize]) -> Q {
    let k = n.len();
    let mut w = Q::one();
    for j in 1..=k {
        let count = (1..=k).filter(|&i| n[i - 1] <= j && j <= i).count();
        w /= qi(count as i64);
    }
    w
}

/// `Σ_{E_k} Π_j 1/#{i | n_i <= j <= i}`
pub fn i_k_sum(k: usize) -> Q {
    assert!(k >= 1);
    let mut total = Q::zero();
    for_each_tuple(k, |n| total += tuple_weight(n));
    total
}

/// Same sum restricted to tuples where every value is hit at most `p` times.
pub fn i_k_restricted_sum(k: usize, p: usize) -> Q {
    let mut total = Q::zero();
    for_each_tuple(k, |n| {
        let mut hits = vec![0usize; k + 1];
        for &v in n {
            hits[v] += 1;
        }
        if hits.iter().all(|&h| h <= p) {
            total += tuple_weight(n);
        }
    });
    total
}

/// Absolute value of the largest coefficient.
pub fn max_abs_coeff(f: &ExpPoly) -> Q {
    f.terms().map(|(_, c)| c.abs()).max().unwrap_or_else(Q::zero)
}
