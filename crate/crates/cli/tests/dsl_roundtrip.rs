use mme_cli::dsl::{parse_potential, Coeff, PotentialSpec, Term};
use mme_core::rational::q;
use proptest::prelude::*;

fn term() -> impl Strategy<Value = Term> {
    (-9i64..=9, 1i64..=6, any::<bool>(), prop::collection::vec(1u16..=3, 0..5)).prop_filter_map("zero", |(n, d, imag, word)| {
        if n == 0 || (imag && word.is_empty()) {
            return None;
        }
        let c = q(n, d);
        Some(Term { coeff: if imag { Coeff::Imag(c) } else { Coeff::Real(c) }, word })
    })
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(terms in prop::collection::vec(term(), 1..5)) {
        let spec = PotentialSpec { terms };
        let printed = spec.to_string();
        let back = parse_potential(&printed).unwrap();
        prop_assert_eq!(&back, &spec, "{}", printed);
        prop_assert_eq!(back.to_string(), printed);
    }
}
