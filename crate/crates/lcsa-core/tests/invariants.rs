//! Cross-module invariants: the K-product restatements of sesquilinearity,
//! random-element sesquilinearity, annihilation-algebra skew and Jacobi
//! coverage, and the named error paths.

use std::sync::Arc;

use lcsa_core::algebras::*;
use lcsa_core::annihilation::{AnnElem, AnnSpace};
use lcsa_core::conformal::{GenSym, ModPoly};
use lcsa_core::error::CoreError;
use lcsa_core::superpoly::*;
use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// K-product value for a possibly non-canonical sequence, through the
/// equivalence lambda_J (a_J b) = lambda_K (a_K b).
fn k_product_seq(
    pres: &lcsa_core::conformal::Presentation,
    a: &ModPoly,
    b: &ModPoly,
    seq: &[u8],
) -> ModPoly {
    let (sign, sorted) = canonical_index(pres.spec, &IndexSeq::new(seq.to_vec())).unwrap();
    if sign == 0 {
        return ModPoly::zero(pres.spec);
    }
    let v = pres.k_product(a, b, &sorted).unwrap();
    if sign < 0 {
        v.neg()
    } else {
        v
    }
}

#[test]
fn kproduct_sesquilinearity_restatements() {
    // ((d_i a)_K b) = 0 when m_i(K) = 0, and
    // ((d_i a)_{iK} b) = -(m_i(K)+1)(a_K b);
    // (a_K (b d_i)) = (a_K b) d_i when m_i(K) = 0, and
    // (a_{iK} (b d_i)) = (a_{iK} b) d_i + (m_i(K)+1)(-1)^{(p(a)+p(b)) p_i}(a_K b).
    for pres in [
        build_rw(1, 1).unwrap(),
        build_rw(2, 1).unwrap(),
        build_kn(2).unwrap(),
    ] {
        let spec = pres.spec;
        for ga in 0..pres.gens.len() as u16 {
            for gb in 0..pres.gens.len() as u16 {
                let a = ModPoly::gen(spec, ga);
                let b = ModPoly::gen(spec, gb);
                let da_list: Vec<(u8, ModPoly)> = (1..=spec.nvars())
                    .map(|i| (i, a.lmul_poly(&SuperPoly::var(spec, Family::Del, i))))
                    .collect();
                for len in 0..=3u32 {
                    for km in enumerate_monos(spec, len) {
                        let k = IndexSeq::from_mono(spec, &km);
                        let akb = pres.k_product(&a, &b, &k).unwrap();
                        for (i, da) in &da_list {
                            let mi = km.exp(spec, *i) as i64;
                            if mi == 0 {
                                let v = pres.k_product(da, &b, &k).unwrap();
                                assert!(pres.is_zero_mod(&v), "Kprod1 vanishing");
                            }
                            if spec.is_odd(*i) && mi >= 1 {
                                // iK repeats an odd index; the K-product of
                                // iK vanishes by convention and the identity
                                // does not apply
                                continue;
                            }
                            let mut ik = vec![*i];
                            ik.extend_from_slice(&k.0);
                            let lhs = k_product_seq(&pres, da, &b, &ik);
                            let rhs = akb.scale(&qi(-(mi + 1)));
                            assert!(
                                pres.is_zero_mod(&lhs.sub(&rhs)),
                                "Kprod1 fails at i={i}, K={:?}",
                                k.0
                            );
                            // right multiplication on the second argument
                            let bd = b.rmul_var(Family::Del, *i, &pres.gens);
                            if mi == 0 {
                                let lhs = pres.k_product(&a, &bd, &k).unwrap();
                                let rhs = akb.rmul_var(Family::Del, *i, &pres.gens);
                                assert!(
                                    pres.is_zero_mod(&lhs.sub(&rhs)),
                                    "Kprod2 base fails at i={i}, K={:?}",
                                    k.0
                                );
                            }
                            let lhs = k_product_seq(&pres, &a, &bd, &ik);
                            let aikb = k_product_seq(&pres, &a, &b, &ik);
                            let mut corr = akb.scale(&qi(mi + 1));
                            let pa = pres.gens[ga as usize].parity;
                            let pb = pres.gens[gb as usize].parity;
                            if spec.is_odd(*i) && (pa ^ pb) {
                                corr = corr.neg();
                            }
                            let rhs = aikb.rmul_var(Family::Del, *i, &pres.gens).add(&corr);
                            assert!(
                                pres.is_zero_mod(&lhs.sub(&rhs)),
                                "Kprod2 fails at i={i}, K={:?}",
                                k.0
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn sesquilinearity_on_random_elements() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for pres in [build_rw(1, 1).unwrap(), build_kn(2).unwrap(), build_re36()] {
        let spec = pres.spec;
        for _ in 0..200 {
            let mut x = ModPoly::zero(spec);
            for _ in 0..3 {
                let g = rng.random_range(0..pres.gens.len()) as u16;
                let mut m = FamMono::one();
                for _ in 0..rng.random_range(0..2) {
                    let i = rng.random_range(1..=spec.nvars());
                    if spec.is_odd(i) {
                        m.odd |= 1 << (i - spec.r - 1);
                    } else {
                        m.even[(i - 1) as usize] += 1;
                    }
                }
                x.add_term(
                    Monomial::from_fam(Family::Del, m),
                    g,
                    qi(rng.random_range(-4..=4)),
                );
            }
            let y = ModPoly::gen(spec, rng.random_range(0..pres.gens.len()) as u16);
            let i = rng.random_range(1..=spec.nvars());
            let dx = x.lmul_poly(&SuperPoly::var(spec, Family::Del, i));
            let lhs = pres.bracket(&dx, &y);
            let rhs = pres
                .bracket(&x, &y)
                .lmul_poly(&SuperPoly::var(spec, Family::Lambda, i))
                .neg();
            assert!(pres.is_zero_mod(&lhs.sub(&rhs)));
        }
    }
}

#[test]
fn ann_bracket_skew_jacobi_all_builtins() {
    // Super skew-symmetry on all basis pairs with degrees in a window, and
    // Jacobi on capped triples, for every built-in.
    for pres in [
        build_rw(2, 1).unwrap(),
        build_kn(3).unwrap(),
        build_re36(),
        build_re38(),
        build_re510(),
    ] {
        let name = pres.name.clone();
        let space = AnnSpace::new(pres);
        let lo = space.min_gen_degree();
        let mut reps: Vec<AnnElem> = Vec::new();
        for d in lo..=2 {
            let b = space.graded_basis(d);
            for i in 0..b.dim.min(6) {
                reps.push(b.rep(i));
            }
        }
        for u in &reps {
            for v in &reps {
                let pu = space.parity(u).unwrap();
                let pv = space.parity(v).unwrap();
                let mut uv = space.bracket(u, v);
                let vu = space.bracket(v, u);
                if !(pu && pv) {
                    uv = uv.neg();
                }
                assert!(space.is_zero_class(&vu.sub(&uv)), "{name}: skew");
            }
        }
        for u in reps.iter().take(5) {
            for v in reps.iter().take(5) {
                for w in reps.iter().take(5) {
                    let pu = space.parity(u).unwrap();
                    let pv = space.parity(v).unwrap();
                    let lhs = space.bracket(u, &space.bracket(v, w));
                    let t1 = space.bracket(&space.bracket(u, v), w);
                    let mut t2 = space.bracket(v, &space.bracket(u, w));
                    if pu && pv {
                        t2 = t2.neg();
                    }
                    assert!(
                        space.is_zero_class(&lhs.sub(&t1).sub(&t2)),
                        "{name}: jacobi"
                    );
                }
            }
        }
    }
}

#[test]
fn grading_additivity_of_ann_bracket() {
    let space = AnnSpace::new(build_re38());
    for d1 in -3..=1i64 {
        for d2 in -3..=1i64 {
            let b1 = space.graded_basis(d1);
            let b2 = space.graded_basis(d2);
            for i in 0..b1.dim.min(4) {
                for j in 0..b2.dim.min(4) {
                    let br = space.canonicalize(&space.bracket(&b1.rep(i), &b2.rep(j)));
                    if !br.is_zero() {
                        assert_eq!(space.degree(&br), Some(d1 + d2));
                    }
                }
            }
        }
    }
}

#[test]
fn dual_of_rank_one_module() {
    // a_lambda m = (l1 + d1) m dualizes to a_lambda m* = d1 m*.
    let spec = VarSpec::new(1, 0);
    let agens = vec![GenSym {
        name: "a".into(),
        parity: false,
        degree: -2,
    }];
    let basis = vec![GenSym {
        name: "m".into(),
        parity: false,
        degree: 0,
    }];
    let action = ModPoly::gen(spec, 0).lmul_poly(
        &SuperPoly::var(spec, Family::Lambda, 1).add(&SuperPoly::var(spec, Family::Del, 1)),
    );
    let cm = lcsa_core::repmod::ConformalModule {
        spec,
        algebra: "toy".into(),
        basis,
        agens,
        action: vec![vec![action]],
    };
    let dual = cm.dual();
    let expect = ModPoly::gen(spec, 0).lmul_poly(&SuperPoly::var(spec, Family::Del, 1));
    assert_eq!(dual.action[0][0], expect);
    // zero action dualizes to zero
    let zero = lcsa_core::repmod::ConformalModule {
        spec,
        algebra: "toy".into(),
        basis: cm.basis.clone(),
        agens: cm.agens.clone(),
        action: vec![vec![ModPoly::zero(spec)]],
    };
    assert!(zero.dual().action[0][0].is_zero());
}

#[test]
fn named_error_paths() {
    // VarSpec mismatch
    let p = SuperPoly::one(VarSpec::new(1, 0));
    let q = SuperPoly::one(VarSpec::new(2, 0));
    assert!(matches!(p.poly_mul(&q), Err(CoreError::VarSpecMismatch)));
    // index out of range
    assert!(p.derive(Family::Del, 7).is_err());
    // non-canonical K rejected
    let pres = build_rw(2, 2).unwrap();
    let a = pres.element("a3").unwrap();
    let err = pres.k_product(&a, &a, &IndexSeq::new(vec![4, 3]));
    assert!(matches!(err, Err(CoreError::NotCanonical(_))));
    // unknown generator
    assert!(matches!(
        pres.element("zz"),
        Err(CoreError::UnknownGenerator(_))
    ));
    // assumptions refused with the failing assumption named: a degree -4
    // generator forces depth 4
    let spec = VarSpec::new(1, 0);
    let gens = vec![GenSym {
        name: "a".into(),
        parity: false,
        degree: -4,
    }];
    let mut table = std::collections::BTreeMap::new();
    table.insert((0u16, 0u16), ModPoly::zero(spec));
    let bad = lcsa_core::conformal::Presentation {
        name: "bad".into(),
        spec,
        gens,
        table,
        mode: lcsa_core::conformal::Mode::Free,
    };
    let space = Arc::new(AnnSpace::new(bad));
    let f = lcsa_core::repmod::G0Module::trivial(&space);
    let err = lcsa_core::repmod::build_verma(space, &f);
    match err {
        Err(CoreError::AssumptionFailed(msg)) => assert!(msg.contains("depth")),
        Err(other) => panic!("expected an assumption failure, got {other}"),
        Ok(_) => panic!("expected an assumption failure"),
    }
}

#[test]
fn canonical_index_idempotent_and_stats_invariance() {
    let spec = VarSpec::new(2, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let len = rng.random_range(0..6);
        let seq: Vec<u8> = (0..len).map(|_| rng.random_range(1..=4u8)).collect();
        let (sign, sorted) = canonical_index(spec, &IndexSeq::new(seq.clone())).unwrap();
        let (s2, sorted2) = canonical_index(spec, &sorted).unwrap();
        if sign != 0 {
            assert_eq!(s2, 1);
        }
        assert_eq!(sorted.0, sorted2.0);
        // f and parity are permutation invariants
        let (f1, p1, _) = seq_stats(spec, &IndexSeq::new(seq));
        let (f2, p2, _) = seq_stats(spec, &sorted);
        assert_eq!((f1, p1), (f2, p2));
    }
    let _ = BigInt::one();
}

#[test]
fn mutated_chi_breaks_restriction_matrices() {
    use lcsa_core::repmod::*;
    let space = Arc::new(AnnSpace::new(build_rw(1, 1).unwrap()));
    let f = G0Module::trivial(&space);
    let verma = build_verma(space.clone(), &f).unwrap();
    let dual = verma.cm.dual();
    let chi = shift_character(&space).unwrap();
    let shifted_right = chi_shift(&space, &f, &chi).unwrap();
    // Perturb chi on an even basis element by 1. Either the shifted module
    // fails validation outright, or its matrices differ from the true
    // restriction somewhere.
    let b0 = space.graded_basis(0);
    let even_pos = (0..b0.dim)
        .find(|&i| {
            let (m, g) = b0.symbols[i];
            !space.symbol_parity(&m, g) && !chi.chi[i].is_zero()
        })
        .expect("an even basis element with nonzero chi");
    let mut wrong = chi.clone();
    wrong.chi[even_pos] += lcsa_core::superpoly::qi(1);
    match chi_shift(&space, &f, &wrong) {
        Err(_) => {} // detected at construction
        Ok(shifted_wrong) => {
            assert_ne!(shifted_wrong.mats, shifted_right.mats);
            let got = dual.ann_action(&f.span[even_pos], &dual.basis_vec(0));
            let got_c = got
                .terms
                .get(&(Monomial::one(), 0))
                .cloned()
                .unwrap_or_else(|| lcsa_core::superpoly::qi(0));
            assert_eq!(got_c, shifted_right.mats[even_pos][0][0]);
            assert_ne!(got_c, shifted_wrong.mats[even_pos][0][0]);
        }
    }
    // and the unperturbed restriction matches everywhere
    for s in 0..b0.dim {
        let got = dual.ann_action(&f.span[s], &dual.basis_vec(0));
        let got_c = got
            .terms
            .get(&(Monomial::one(), 0))
            .cloned()
            .unwrap_or_else(|| lcsa_core::superpoly::qi(0));
        assert_eq!(got_c, shifted_right.mats[s][0][0]);
    }
}

#[test]
fn coherence_survives_dualization() {
    use lcsa_core::repmod::*;
    let space = Arc::new(AnnSpace::new(build_rw(1, 1).unwrap()));
    let f = G0Module::trivial(&space);
    let v = build_verma(space.clone(), &f).unwrap();
    v.cm.check_coherent(&space).unwrap();
    v.cm.dual().check_coherent(&space).unwrap();
    // the rank-0 module is vacuously coherent
    let empty = ConformalModule {
        spec: v.cm.spec,
        algebra: v.cm.algebra.clone(),
        basis: Vec::new(),
        agens: v.cm.agens.clone(),
        action: vec![Vec::new(), Vec::new()],
    };
    empty.check_coherent(&space).unwrap();
    // a zero lambda-action on a free rank-1 module is NOT coherent: the
    // degree -2 classes must act by the module del-operators
    let zero = ConformalModule {
        spec: v.cm.spec,
        algebra: v.cm.algebra.clone(),
        basis: v.cm.basis.clone(),
        agens: v.cm.agens.clone(),
        action: vec![
            vec![ModPoly::zero(v.cm.spec)],
            vec![ModPoly::zero(v.cm.spec)],
        ],
    };
    assert!(zero.check_coherent(&space).is_err());
}

#[test]
fn dual_morphism_rejects_non_morphisms() {
    use lcsa_core::repmod::*;
    let space = Arc::new(AnnSpace::new(build_rw(1, 0).unwrap()));
    let f = G0Module::trivial(&space);
    let v = build_verma(space.clone(), &f).unwrap();
    let cm = &v.cm;
    // the identity dualizes fine
    let id = ModuleMap { parity: false, mat: vec![cm.basis_vec(0)] };
    assert!(dual_morphism(&id, cm, cm).is_ok());
    // a del-twisted map breaks the action compatibility
    let bad = ModuleMap {
        parity: false,
        mat: vec![cm
            .basis_vec(0)
            .lmul_poly(&SuperPoly::var(cm.spec, Family::Del, 1))
            .add(&cm.basis_vec(0))],
    };
    match dual_morphism(&bad, cm, cm) {
        Err(CoreError::NotAMorphism(_)) => {}
        other => panic!("expected NotAMorphism, got {:?}", other.is_ok()),
    }
}

#[test]
fn skew_substitution_is_involutive() {
    let pres = build_rw(1, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let mut v = ModPoly::zero(pres.spec);
        for _ in 0..4 {
            let g = rng.random_range(0..pres.gens.len()) as u16;
            let mut m = Monomial::one();
            for _ in 0..rng.random_range(0..4) {
                let fam = [Family::Lambda, Family::Del][rng.random_range(0..2)];
                let i = rng.random_range(1..=pres.spec.nvars());
                if let Some((_, prod)) = m.mul(&Monomial::var(pres.spec, fam, i)) {
                    m = prod;
                }
            }
            v.add_term(m, g, qi(rng.random_range(-5..=5)));
        }
        let twice = pres.subst_skew(&pres.subst_skew(&v));
        assert_eq!(twice, v);
    }
}

#[test]
fn jacobi_on_random_composite_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for pres in [build_rw(1, 1).unwrap(), build_kn(2).unwrap(), build_re36()] {
        let spec = pres.spec;
        let random_elem = |rng: &mut ChaCha8Rng| {
            // parity-homogeneous combination with del coefficients
            let parity = rng.random_bool(0.5);
            let mut v = ModPoly::zero(spec);
            for _ in 0..4 {
                let g = rng.random_range(0..pres.gens.len()) as u16;
                let mut m = FamMono::one();
                for _ in 0..rng.random_range(0..3) {
                    let i = rng.random_range(1..=spec.nvars());
                    if spec.is_odd(i) {
                        m.odd |= 1 << (i - spec.r - 1);
                    } else {
                        m.even[(i - 1) as usize] += 1;
                    }
                }
                if (m.parity() ^ pres.gens[g as usize].parity) == parity {
                    v.add_term(
                        Monomial::from_fam(Family::Del, m),
                        g,
                        qi(rng.random_range(-4..=4)),
                    );
                }
            }
            v
        };
        for _ in 0..30 {
            let a = random_elem(&mut rng);
            let b = random_elem(&mut rng);
            let c = random_elem(&mut rng);
            if a.is_zero() || b.is_zero() || c.is_zero() {
                continue;
            }
            let res = pres.residual_jacobi(&a, &b, &c).unwrap();
            assert!(pres.is_zero_mod(&res), "{}: composite jacobi", pres.name);
            let skew = pres.residual_skew(&a, &b).unwrap();
            assert!(pres.is_zero_mod(&skew), "{}: composite skew", pres.name);
        }
    }
}
