use std::collections::HashMap;

use mme_core::expalg::{i_k_integral, i_k_restricted_sum, i_k_sum, integrate_domain, DomainSpec, ExpPoly, HalfLinForm, Powers, Sym};
use mme_core::freewick::{covariance, tau};
use mme_core::gausswick::{census, gue_mixed_moment, map_count, multisets, ratio_series, LaurentN, Star, DEFAULT_HALF_EDGE_BUDGET};
use mme_core::master::{alpha_series, Potential, Word};
use mme_core::ncpoly::{partial_color, Color, History, IndexList, LabelMap, Monomial, NCPoly, Step, TensorPoly, VarLabel};
use mme_core::rational::{factorial, q, qi, to_f64};
use mme_core::Q;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn word(max_color: Color, max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(1..=max_color, 0..=max_len)
}

fn base_poly(terms: &[(i64, Word)]) -> NCPoly {
    NCPoly::from_rational_terms(terms.iter().map(|(c, w)| (qi(*c), Monomial::base_word(w))))
}

fn small_poly(max_color: Color, max_len: usize) -> impl Strategy<Value = NCPoly> {
    prop::collection::vec((-3i64..=3, word(max_color, max_len)), 1..=3).prop_map(|t| base_poly(&t))
}

fn tensor_of(p: &NCPoly, left: bool) -> TensorPoly {
    let mut t = TensorPoly::zero();
    for (m, c) in p.terms() {
        let (a, b) = if left { (m.clone(), Monomial::unit()) } else { (Monomial::unit(), m.clone()) };
        t.add_term(a, b, c.clone());
    }
    t
}

/// Labels from a small commensurate universe with three times.
fn universe() -> (Vec<IndexList>, usize) {
    let h = History::new(vec![Step::G, Step::Fj(1)]);
    (h.j_universe().into_iter().collect(), h.n())
}

fn labelled_word(max_len: usize) -> impl Strategy<Value = Monomial> {
    let (u, _) = universe();
    prop::collection::vec((1..=2 as Color, prop::sample::select(u)), 0..=max_len)
        .prop_map(|ls| Monomial::from_labels(ls.into_iter().map(|(c, i)| VarLabel::new(c, i))))
}

fn sorted_times(seed: u64, n: usize) -> HashMap<Sym, f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ts: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 3.0).collect();
    ts.sort_by(f64::total_cmp);
    ts.into_iter().enumerate().map(|(i, t)| (i as Sym + 1, t)).collect()
}

// exponential polynomials

/// `t_u^a t_v^b t_w^c exp(x t_u + y t_v + z t_w)` with halves; `u` decays fast enough
/// to stay integrable after both drops.
fn drop_term() -> impl Strategy<Value = (i64, [u32; 3], [i64; 3])> {
    (-4i64..=4, [0u32..=2, 0u32..=2, 0u32..=2], (-9i64..=-6, -3i64..=2, -3i64..=2))
        .prop_map(|(c, p, (a, b, d))| (c, p, [a, b, d]))
}

fn build(terms: &[(i64, [u32; 3], [i64; 3])]) -> ExpPoly {
    let mut f = ExpPoly::zero();
    for (c, p, e) in terms {
        let mut powers = Powers::one();
        for (s, &k) in p.iter().enumerate() {
            powers.mul_entry(s as Sym + 1, k);
        }
        let expo = HalfLinForm::from_doubled(e.iter().enumerate().map(|(s, &a)| (s as Sym + 1, a)));
        f = f.add(&ExpPoly::term(qi(*c), powers, expo));
    }
    f
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fubini_for_two_drops(terms in prop::collection::vec(drop_term(), 1..=4)) {
        let f = build(&terms);
        let a = integrate_domain(&f, &DomainSpec { chain: vec![1], drops: vec![(2, 0), (3, 0)] }).unwrap();
        let b = integrate_domain(&f, &DomainSpec { chain: vec![1], drops: vec![(3, 0), (2, 0)] }).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn canonical_after_arithmetic(a in prop::collection::vec(drop_term(), 0..=4), b in prop::collection::vec(drop_term(), 0..=4)) {
        let (f, g) = (build(&a), build(&b));
        for h in [f.add(&g), f.mul(&g), f.sub(&f)] {
            prop_assert!(h.terms().all(|(_, c)| !c.is_zero()));
            let shapes: Vec<_> = h.terms().map(|(s, _)| s.clone()).collect();
            let mut dedup = shapes.clone();
            dedup.dedup();
            prop_assert_eq!(shapes, dedup);
        }
        prop_assert!(f.sub(&f).is_zero());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn domain_integral_matches_monte_carlo(terms in prop::collection::vec((1i64..=4, [0u32..=1, 0u32..=1, 0u32..=0], (-8i64..=-6, -2i64..=2, 0i64..=0)), 1..=3), seed in 0u64..1000) {
        // positive integrand on {0 <= t2 <= t1}; t1 ~ Exp(1), t2 ~ U(0, t1)
        let terms: Vec<_> = terms.into_iter().map(|(c, p, (a, b, d))| (c, p, [a, b, d])).collect();
        let f = build(&terms);
        let exact = to_f64(&integrate_domain(&f, &DomainSpec { chain: vec![1], drops: vec![(2, 0)] }).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = 200_000;
        let mut acc = 0.0;
        let mut asg = HashMap::from([(1, 0.0), (2, 0.0), (3, 0.0)]);
        for _ in 0..samples {
            let u: f64 = -(1.0 - rng.random::<f64>()).ln();
            let v: f64 = rng.random::<f64>() * u;
            asg.insert(1, u);
            asg.insert(2, v);
            acc += f.eval_numeric(&asg).unwrap() * u * u.exp();
        }
        let mc = acc / samples as f64;
        prop_assert!((mc - exact).abs() <= 0.01 * exact.abs(), "mc {} exact {}", mc, exact);
    }
}

#[test]
fn i_k_identity_and_bound() {
    for k in 1..=6 {
        let sum = i_k_sum(k);
        assert_eq!(i_k_integral(k).unwrap(), sum, "k = {k}");
        assert!(sum <= Q::from_integer(num_bigint::BigInt::from(2u32).pow(k as u32)) * i_k_restricted_sum(k, 2));
    }
    assert_eq!(i_k_sum(2), q(3, 2));
}

// non-commutative polynomials

fn random_history() -> impl Strategy<Value = History> {
    prop::collection::vec(0usize..4, 0..=3).prop_map(|choices| {
        let mut h = History::default();
        for ch in choices {
            let n = h.n();
            let step = match ch {
                0 => Step::G,
                1 => Step::F,
                _ => Step::Fj(1 + ch % (n + 1)),
            };
            h = h.push(step);
        }
        h
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_is_a_derivation(p in small_poly(3, 3), q2 in small_poly(3, 3), i in 1..=3 as Color) {
        let lhs = partial_color(&p.mul(&q2), i);
        let rhs = partial_color(&p, i).mul(&tensor_of(&q2, false)).add(&tensor_of(&p, true).mul(&partial_color(&q2, i)));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn level_partition(h in random_history()) {
        let total: usize = h.levels().iter().map(Vec::len).sum();
        prop_assert_eq!(total, h.j_universe().len());
        prop_assert_eq!(h.j_universe().iter().map(IndexList::max_entry).max().unwrap(), h.c());
    }

    #[test]
    fn relabelling_is_injective_and_keeps_degree(h in random_history()) {
        let (n, c) = (h.n(), h.c());
        let labels: Vec<_> = h.j_universe().into_iter().collect();
        let mut maps = vec![LabelMap::GPlus { c }];
        for s in 1..=n + 1 {
            maps.extend([LabelMap::F1 { s, n, c }, LabelMap::F2 { s, n, c }, LabelMap::F1Tilde { s, n, c }, LabelMap::F2Tilde { s, n, c }]);
        }
        for map in maps {
            let image: std::collections::BTreeSet<_> = labels.iter().map(|l| map.apply(l).unwrap()).collect();
            prop_assert_eq!(image.len(), labels.len(), "{:?}", map);
            let p = NCPoly::from_rational_terms(labels.iter().map(|l| (qi(1), Monomial::from_labels([VarLabel::new(1, l.clone()), VarLabel::base(2)]))));
            prop_assert_eq!(p.relabel(&map).unwrap().deg(), p.deg());
        }
    }
}

// free Wick calculus

/// `τ(Q x) = Σ_p cov(Q_p, x) τ(Q_{<p}) τ(Q_{>p})`, the Schwinger-Dyson relation for
/// the jointly semicircular family behind the labels.
fn sd_rhs(q1: &Monomial, x: &VarLabel, n: usize) -> ExpPoly {
    let mut out = ExpPoly::zero();
    for (p, l) in q1.letters().iter().enumerate() {
        let c = covariance(l, x, n).unwrap();
        if c.is_zero() {
            continue;
        }
        out = out.add(&c.mul(&tau(&q1.slice(0, p), n).unwrap()).mul(&tau(&q1.slice(p + 1, q1.deg()), n).unwrap()));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schwinger_dyson_interpolated(w in labelled_word(7), xi in (1..=2 as Color, 0usize..8)) {
        let (u, n) = universe();
        let x = VarLabel::new(xi.0, u[xi.1 % u.len()].clone());
        let lhs = tau(&w.concat(&Monomial::from_labels([x.clone()])), n).unwrap();
        prop_assert_eq!(lhs, sd_rhs(&w, &x, n));
    }

    #[test]
    fn traciality(a in labelled_word(4), b in labelled_word(4)) {
        let (_, n) = universe();
        prop_assert_eq!(tau(&a.concat(&b), n).unwrap(), tau(&b.concat(&a), n).unwrap());
    }

    #[test]
    fn positivity(m in labelled_word(4), seed in 0u64..1000) {
        let (_, n) = universe();
        let v = tau(&m.concat(&m.reversed()), n).unwrap().eval_numeric(&sorted_times(seed, n)).unwrap();
        prop_assert!(v >= -1e-12, "{}", v);
    }
}

/// 200 random base monomials, `d ≤ 3`, degree ≤ 7; shared with the acceptance suite.
#[test]
fn schwinger_dyson_base_letters() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..200 {
        let d = rng.random_range(1..=3u16);
        let len = rng.random_range(0..=7usize);
        let w: Word = (0..len).map(|_| rng.random_range(1..=d)).collect();
        let i = rng.random_range(1..=d);
        let q1 = base_poly(&[(1, w.clone())]);
        let lhs = tau(&Monomial::base_word(&[w, vec![i]].concat()), 0).unwrap();
        let mut rhs = ExpPoly::zero();
        for ((a, b), c) in partial_color(&q1, i).terms() {
            rhs = rhs.add(&tau(a, 0).unwrap().mul(&tau(b, 0).unwrap()).mul(c));
        }
        assert_eq!(lhs, rhs);
    }
}

// master equation

fn quartic_two() -> Potential {
    Potential::new(vec![(qi(1), vec![1, 1, 1, 1])], 2).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn alpha_is_linear(p in small_poly(1, 4), q2 in small_poly(1, 4), a in -3i64..=3) {
        let v = Potential::power(4);
        for genus in 0..=1 {
            let lhs = alpha_series(genus, &v, &p.scale(&ExpPoly::constant(qi(a))).add(&q2), 1).unwrap();
            let rhs = alpha_series(genus, &v, &p, 1).unwrap().scale(&qi(a)).add(&alpha_series(genus, &v, &q2, 1).unwrap());
            prop_assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn quadratic_model_is_rescaled_gaussian(w in prop::collection::vec(1..=2 as Color, 2..=6)) {
        // e^{-N tr(λ ΣX² + ½ΣX²)} is GUE with variance 1/(1+2λ)
        let v = Potential::quadratic(2);
        let m = w.len() / 2;
        let moment = gue_mixed_moment(&[Star::new(w.clone()).unwrap()], 2).unwrap().shift(-1);
        for genus in 0..=1 {
            let eps = moment.coeff(-2 * genus as i64);
            let expected: Vec<Q> = (0..=2u32)
                .map(|k| {
                    let binom = Q::from_integer(factorial(m as u32 + k - 1) / (factorial(k) * factorial(m as u32 - 1)));
                    eps.clone() * binom * qi((-2i64).pow(k))
                })
                .collect();
            let got = alpha_series(genus, &v, &base_poly(&[(1, w.clone())]), 2).unwrap();
            prop_assert_eq!(got.coeffs, expected);
        }
    }

    #[test]
    fn gaussian_point_matches_moments(p in small_poly(2, 6)) {
        let terms: Vec<(Q, Word)> = p.sorted_terms().into_iter().map(|(m, c)| (c.as_constant().unwrap(), m.letters().iter().map(|l| l.color).collect())).collect();
        let oracle = ratio_series(&terms, &Potential::quadratic(2), 0).unwrap();
        for genus in 0..=1 {
            let got = alpha_series(genus, &Potential::quadratic(2), &p, 0).unwrap();
            prop_assert_eq!(got.coeffs[0].clone(), oracle[0].coeff(-2 * genus as i64));
        }
    }

    #[test]
    fn planar_factorization(p in word(1, 3), q2 in word(1, 3)) {
        let v = quartic_two();
        let joined: Word = [p.clone(), vec![2], q2.clone(), vec![2]].concat();
        let lhs = alpha_series(0, &v, &base_poly(&[(1, joined)]), 2).unwrap();
        let rhs = alpha_series(0, &v, &base_poly(&[(1, p)]), 2).unwrap().mul(&alpha_series(0, &v, &base_poly(&[(1, q2)]), 2).unwrap());
        prop_assert_eq!(lhs, rhs);
    }
}

// finite-N Gaussian moments

/// `(k+1) ε_g(k) = (4k-2) ε_g(k-1) + (k-1)(2k-1)(2k-3) ε_{g-1}(k-2)`
fn harer_zagier(k: usize, g: usize) -> i64 {
    fn eps(k: i64, g: i64) -> i64 {
        if g < 0 || k < 0 {
            return 0;
        }
        if k == 0 {
            return (g == 0) as i64;
        }
        ((4 * k - 2) * eps(k - 1, g) + (k - 1) * (2 * k - 1) * (2 * k - 3) * eps(k - 2, g - 1)) / (k + 1)
    }
    eps(k as i64, g as i64)
}

#[test]
fn harer_zagier_seeds() {
    for k in 1..=5 {
        let m = gue_mixed_moment(&[Star::power(2 * k)], 1).unwrap().shift(-1);
        for g in 0..=k / 2 + 1 {
            assert_eq!(m.coeff(-2 * g as i64), qi(harer_zagier(k, g)), "k={k} g={g}");
        }
    }
}

fn stars(max_color: Color) -> impl Strategy<Value = Vec<Star>> {
    prop::collection::vec(prop::collection::vec(1..=max_color, 1..=4), 1..=3)
        .prop_map(|ws| ws.into_iter().map(|w| Star::new(w).unwrap()).collect())
}

fn self_adjoint_potential() -> impl Strategy<Value = Potential> {
    prop::collection::vec((1i64..=3, prop::collection::vec(1..=2 as Color, 2..=4)), 1..=2).prop_map(|ts| {
        let mut terms = Vec::new();
        for (c, w) in ts {
            let mut r = w.clone();
            r.reverse();
            terms.push((q(c, 2), w));
            terms.push((q(c, 2), r));
        }
        Potential::new(terms, 2).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn connected_maps_obey_euler_parity(s in stars(2)) {
        let v = s.len();
        let e = s.iter().map(|x| x.word.len()).sum::<usize>() / 2;
        let c = census(&s, DEFAULT_HALF_EDGE_BUDGET).unwrap();
        let connected: u64 = c.iter().filter(|((_, comps), _)| *comps == 1).map(|(_, k)| k).sum();
        for (f, comps) in c.keys() {
            prop_assert_eq!((2 * comps + e - v - f) % 2, 0);
        }
        let by_genus: u64 = (0..=e).map(|g| map_count(g, &s[1..], &s[0]).unwrap()).sum();
        prop_assert_eq!(by_genus, connected);
    }

    #[test]
    fn ratio_series_is_even(v in self_adjoint_potential(), p in prop::collection::vec(1..=2 as Color, 1..=4)) {
        prop_assert!(ratio_series(&[(qi(1), p)], &v, 2).is_ok());
    }
}

/// Formal `E[e^{-λN tr V}]` coefficients, expanded directly.
fn partition_series(v: &Potential, order: usize) -> Vec<LaurentN> {
    (0..=order)
        .map(|k| {
            let mut out = LaurentN::zero();
            for mult in multisets(v.terms().len(), k) {
                let mut stars = Vec::new();
                let mut w = Q::one();
                for ((t, word), &m) in v.terms().iter().zip(&mult) {
                    w *= num_traits::pow(t.clone(), m) / Q::from_integer(factorial(m as u32));
                    stars.extend(std::iter::repeat_n(Star::new(word.clone()).unwrap(), m));
                }
                out = out.add(&gue_mixed_moment(&stars, v.d()).unwrap().scale(&w));
            }
            let sign = if k % 2 == 0 { Q::one() } else { -Q::one() };
            out.shift(k as i64).scale(&sign)
        })
        .collect()
}

#[test]
fn log_derivative_is_connected_moment() {
    // (log Z)' = Z'/Z = -N² E[ts V e^{-λN tr V}]/Z, compared as Z' = Z · (-N² ratio)
    for v in [Potential::power(4), Potential::new(vec![(qi(1), vec![1, 1, 1, 1]), (qi(1), vec![1, 2, 1, 2])], 2).unwrap()] {
        let order = 3;
        let z = partition_series(&v, order + 1);
        let r: Vec<LaurentN> = ratio_series(v.terms(), &v, order).unwrap().iter().map(|c| c.shift(2).scale(&-Q::one())).collect();
        for k in 0..=order {
            let dz = z[k + 1].scale(&qi(k as i64 + 1));
            let mut prod = LaurentN::zero();
            for j in 0..=k {
                prod = prod.add(&z[j].mul(&r[k - j]));
            }
            assert_eq!(dz, prod, "order {k}");
        }
    }
}
