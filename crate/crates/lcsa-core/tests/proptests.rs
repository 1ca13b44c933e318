//! Property tests over the super-polynomial engine.

use lcsa_core::superpoly::*;
use proptest::prelude::*;

fn spec() -> VarSpec {
    VarSpec::new(2, 2)
}

fn arb_mono() -> impl Strategy<Value = Monomial> {
    proptest::collection::vec((0..3usize, 1..=4u8), 0..5).prop_map(|factors| {
        let spec = spec();
        let mut m = Monomial::one();
        for (fam, i) in factors {
            let fam = FAMILIES[fam];
            if let Some((_, prod)) = m.mul(&Monomial::var(spec, fam, i)) {
                m = prod;
            }
        }
        m
    })
}

fn arb_poly() -> impl Strategy<Value = SuperPoly> {
    proptest::collection::vec((arb_mono(), -5i64..=5), 0..5).prop_map(|terms| {
        let mut p = SuperPoly::zero(spec());
        for (m, c) in terms {
            p.add_term(m, qi(c));
        }
        p
    })
}

proptest! {
    #[test]
    fn mul_is_supercommutative(a in arb_poly(), b in arb_poly()) {
        // compare per homogeneous parity part: x y = (-1)^{p(x)p(y)} y x
        let split = |p: &SuperPoly| {
            let mut even = SuperPoly::zero(spec());
            let mut odd = SuperPoly::zero(spec());
            for (m, c) in &p.terms {
                if m.parity() {
                    odd.add_term(*m, c.clone());
                } else {
                    even.add_term(*m, c.clone());
                }
            }
            (even, odd)
        };
        let (ae, ao) = split(&a);
        let (be, bo) = split(&b);
        prop_assert_eq!(ae.mul(&be), be.mul(&ae));
        prop_assert_eq!(ae.mul(&bo), bo.mul(&ae));
        prop_assert_eq!(ao.mul(&be), be.mul(&ao));
        prop_assert_eq!(ao.mul(&bo), bo.mul(&ao).neg());
    }

    #[test]
    fn mul_is_associative(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
    }

    #[test]
    fn degree_is_additive_on_homogeneous(a in arb_mono(), b in arb_mono()) {
        if let Some((_, m)) = a.mul(&b) {
            prop_assert_eq!(m.degree(), a.degree() + b.degree());
        }
    }

    #[test]
    fn derive_is_linear(a in arb_poly(), b in arb_poly(), i in 1..=4u8, f in 0..3usize) {
        let fam = FAMILIES[f];
        let lhs = a.add(&b).derive(fam, i).unwrap();
        let rhs = a.derive(fam, i).unwrap().add(&b.derive(fam, i).unwrap());
        prop_assert_eq!(lhs, rhs);
    }
}
