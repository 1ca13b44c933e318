//! Built-in constructors for the five explicit conformal superalgebras:
//! the type-W family RW(r,s), the contact family K(n), and the three
//! exceptional presentations RE(3,6), RE(3,8) and RE(5,10).

use std::collections::BTreeMap;

use crate::conformal::{GenId, GenSym, ModPoly, Mode, Presentation};
use crate::error::CoreError;
use crate::superpoly::{qi, qr, Family, SuperPoly, VarSpec};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BuiltinId {
    Rw(u8, u8),
    K(u8),
    Re36,
    Re38,
    Re510,
}

impl BuiltinId {
    /// Accepts `RW(r,s)`, `K(n)`/`K(1,n)`, `RE36`/`E(3,6)`, `RE38`, `RE510`.
    pub fn parse(name: &str) -> Option<BuiltinId> {
        let squashed: String = name.chars().filter(|c| !c.is_whitespace()).collect();
        let up = squashed.to_uppercase();
        if let Some(args) = up.strip_prefix("RW(").and_then(|s| s.strip_suffix(")")) {
            let (r, s) = args.split_once(',')?;
            return Some(BuiltinId::Rw(r.parse().ok()?, s.parse().ok()?));
        }
        if let Some(args) = up.strip_prefix("K(").and_then(|s| s.strip_suffix(")")) {
            let n = match args.split_once(',') {
                Some(("1", n)) => n.parse().ok()?,
                Some(_) => return None,
                None => args.parse().ok()?,
            };
            return Some(BuiltinId::K(n));
        }
        match up.as_str() {
            "RE36" | "RE(3,6)" | "E(3,6)" => Some(BuiltinId::Re36),
            "RE38" | "RE(3,8)" | "E(3,8)" => Some(BuiltinId::Re38),
            "RE510" | "RE(5,10)" | "E(5,10)" => Some(BuiltinId::Re510),
            _ => None,
        }
    }

    pub fn display_name(&self) -> String {
        match self {
            BuiltinId::Rw(r, s) => format!("RW({r},{s})"),
            BuiltinId::K(n) => format!("K(1,{n})"),
            BuiltinId::Re36 => "RE36".into(),
            BuiltinId::Re38 => "RE38".into(),
            BuiltinId::Re510 => "RE510".into(),
        }
    }

    pub fn build(&self) -> Result<Presentation, CoreError> {
        match *self {
            BuiltinId::Rw(r, s) => build_rw(r, s),
            BuiltinId::K(n) => build_kn(n),
            BuiltinId::Re36 => Ok(build_re36()),
            BuiltinId::Re38 => Ok(build_re38()),
            BuiltinId::Re510 => Ok(build_re510()),
        }
    }
}

fn lam(spec: VarSpec, i: u8) -> SuperPoly {
    SuperPoly::var(spec, Family::Lambda, i)
}

fn del(spec: VarSpec, i: u8) -> SuperPoly {
    SuperPoly::var(spec, Family::Del, i)
}

/// Type-W conformal superalgebra on generators a_1..a_{r+s}, all of degree
/// -2, with `[a_i l a_j] = (del_i + l_i) a_j + a_i l_j`.
pub fn build_rw(r: u8, s: u8) -> Result<Presentation, CoreError> {
    if r + s == 0 {
        return Err(CoreError::Invalid("RW(r,s) needs r+s >= 1".into()));
    }
    let spec = VarSpec::new(r, s);
    let n = r + s;
    let gens: Vec<GenSym> = (1..=n)
        .map(|i| GenSym {
            name: format!("a{i}"),
            parity: spec.is_odd(i),
            degree: -2,
        })
        .collect();
    let mut table = BTreeMap::new();
    for i in 1..=n {
        for j in 1..=n {
            let aj = ModPoly::gen(spec, (j - 1) as GenId);
            let ai = ModPoly::gen(spec, (i - 1) as GenId);
            let v = aj
                .lmul_poly(&del(spec, i).add(&lam(spec, i)))
                .add(&ai.rmul_var(Family::Lambda, j, &gens));
            table.insert(((i - 1) as GenId, (j - 1) as GenId), v);
        }
    }
    Ok(Presentation {
        name: format!("RW({r},{s})"),
        spec,
        gens,
        table,
        mode: Mode::Free,
    })
}

/// Grassmann monomial on `n` odd symbols: bit mask plus helpers.
fn xi_name(mask: u8) -> String {
    if mask == 0 {
        return "one".into();
    }
    let mut s = String::from("x");
    for b in 0..8 {
        if mask & (1 << b) != 0 {
            s.push(char::from_digit(b as u32 + 1, 10).unwrap());
        }
    }
    s
}

fn xi_mul(a: u8, b: u8) -> Option<(i8, u8)> {
    if a & b != 0 {
        return None;
    }
    let mut swaps = 0u32;
    let mut bits = b;
    while bits != 0 {
        let j = bits.trailing_zeros();
        swaps += (a >> (j + 1)).count_ones();
        bits &= bits - 1;
    }
    Some((if swaps.is_multiple_of(2) { 1 } else { -1 }, a | b))
}

fn xi_derive(mask: u8, i: u8) -> Option<(i8, u8)> {
    let bit = 1u8 << (i - 1);
    if mask & bit == 0 {
        return None;
    }
    let before = (mask & (bit - 1)).count_ones();
    Some((if before.is_multiple_of(2) { 1 } else { -1 }, mask & !bit))
}

/// Contact conformal superalgebra K_n of type (1,0) on the 2^n Grassmann
/// monomials, `deg(xi_{i1}..xi_{ik}) = k - 2`, with the bracket
/// `[f l g] = (k-2) del (f g) + (-1)^k sum_i (d_{xi_i} f)(d_{xi_i} g)
///  + l (k+h-4) f g`.
pub fn build_kn(n: u8) -> Result<Presentation, CoreError> {
    if n > 6 {
        return Err(CoreError::Invalid("K(n) supported for n <= 6".into()));
    }
    let spec = VarSpec::new(1, 0);
    let count = 1u16 << n;
    let gens: Vec<GenSym> = (0..count)
        .map(|mask| {
            let k = (mask as u8).count_ones() as i64;
            GenSym {
                name: xi_name(mask as u8),
                parity: k % 2 == 1,
                degree: k - 2,
            }
        })
        .collect();
    let gid = |mask: u8| mask as GenId;
    let mut table = BTreeMap::new();
    for fm in 0..count {
        for gm in 0..count {
            let (f, g) = (fm as u8, gm as u8);
            let k = f.count_ones() as i64;
            let h = g.count_ones() as i64;
            let mut v = ModPoly::zero(spec);
            if let Some((sign, fg)) = xi_mul(f, g) {
                let base = ModPoly::gen(spec, gid(fg)).scale(&qi(sign as i64));
                v = v.add(&base.lmul_poly(&del(spec, 1)).scale(&qi(k - 2)));
                v = v.add(&base.lmul_poly(&lam(spec, 1)).scale(&qi(k + h - 4)));
            }
            for i in 1..=n {
                if let (Some((s1, df)), Some((s2, dg))) = (xi_derive(f, i), xi_derive(g, i)) {
                    if let Some((s3, prod)) = xi_mul(df, dg) {
                        let mut sign = (s1 * s2 * s3) as i64;
                        if k % 2 == 1 {
                            sign = -sign;
                        }
                        v = v.add(&ModPoly::gen(spec, gid(prod)).scale(&qi(sign)));
                    }
                }
            }
            table.insert((gid(f), gid(g)), v);
        }
    }
    Ok(Presentation {
        name: format!("K(1,{n})"),
        spec,
        gens,
        table,
        mode: Mode::Free,
    })
}

/// Signs and complementary indices over {1,2,3}: `eps3(i,j)` is the sign of
/// the permutation (i, j, t3(i,j)).
pub fn t3(i: u8, j: u8) -> u8 {
    6 - i - j
}

pub fn eps3(i: u8, j: u8) -> i64 {
    match (i, j) {
        (1, 2) | (2, 3) | (3, 1) => 1,
        (2, 1) | (3, 2) | (1, 3) => -1,
        _ => 0,
    }
}

/// Sign of the permutation (i,j,h,k,t) completing {1..5}; zero on collision.
pub fn eps5(i: u8, j: u8, h: u8, k: u8) -> (i64, u8) {
    let mut seen = [false; 6];
    for &x in &[i, j, h, k] {
        if seen[x as usize] {
            return (0, 0);
        }
        seen[x as usize] = true;
    }
    let t = (1..=5).find(|&x| !seen[x as usize]).unwrap();
    let perm = [i, j, h, k, t];
    let mut sign = 1i64;
    for a in 0..5 {
        for b in a + 1..5 {
            if perm[a] > perm[b] {
                sign = -sign;
            }
        }
    }
    (sign, t)
}

/// sl2 structure constants in the basis E, F, H (ids 0, 1, 2).
fn sl2_bracket(a: usize, b: usize) -> Vec<(usize, i64)> {
    match (a, b) {
        (0, 1) => vec![(2, 1)],
        (1, 0) => vec![(2, -1)],
        (2, 0) => vec![(0, 2)],
        (0, 2) => vec![(0, -2)],
        (2, 1) => vec![(1, -2)],
        (1, 2) => vec![(1, 2)],
        _ => vec![],
    }
}

/// Action of E, F, H on the standard basis e_1, e_2.
fn sl2_act(c: usize, v: usize) -> Vec<(usize, i64)> {
    match (c, v) {
        (0, 1) => vec![(0, 1)],  // E e2 = e1
        (1, 0) => vec![(1, 1)],  // F e1 = e2
        (2, 0) => vec![(0, 1)],  // H e1 = e1
        (2, 1) => vec![(1, -1)], // H e2 = -e2
        _ => vec![],
    }
}

fn sl2_trace(a: usize, b: usize) -> i64 {
    match (a, b) {
        (0, 1) | (1, 0) => 1,
        (2, 2) => 2,
        _ => 0,
    }
}

/// Symmetric product e_i . e_j as an sl2 element (E = e1^2/2, F = -e2^2/2,
/// H = -e1.e2).
fn sym_sq(i: usize, j: usize) -> Vec<(usize, i64)> {
    match (i, j) {
        (0, 0) => vec![(0, 2)],
        (1, 1) => vec![(1, -2)],
        _ => vec![(2, -1)],
    }
}

/// RE(3,6): free on a_1..a_3 (even, -2), b_{hk} (odd, -1) and E, F, H
/// (even, 0); table from the explicit lambda-brackets.
pub fn build_re36() -> Presentation {
    let spec = VarSpec::new(3, 0);
    let mut gens: Vec<GenSym> = (1..=3)
        .map(|i| GenSym {
            name: format!("a{i}"),
            parity: false,
            degree: -2,
        })
        .collect();
    for h in 1..=3u8 {
        for k in 1..=2u8 {
            gens.push(GenSym {
                name: format!("b{h}{k}"),
                parity: true,
                degree: -1,
            });
        }
    }
    for c in ["E", "F", "H"] {
        gens.push(GenSym {
            name: c.into(),
            parity: false,
            degree: 0,
        });
    }
    let ga = |i: u8| (i - 1) as GenId;
    let gb = |h: u8, k: u8| (3 + (h - 1) * 2 + (k - 1)) as GenId;
    let gc = |c: usize| (9 + c) as GenId;
    let mut table = BTreeMap::new();
    // [a_i l a_j] = (d_i + l_i) a_j + l_j a_i
    for i in 1..=3u8 {
        for j in 1..=3u8 {
            let v = ModPoly::gen(spec, ga(j))
                .lmul_poly(&del(spec, i).add(&lam(spec, i)))
                .add(&ModPoly::gen(spec, ga(i)).lmul_poly(&lam(spec, j)));
            table.insert((ga(i), ga(j)), v);
        }
    }
    // [a_i l b_hk] = (d_i + 3/2 l_i) b_hk - delta_ih sum_m l_m b_mk
    for i in 1..=3u8 {
        for h in 1..=3u8 {
            for k in 1..=2u8 {
                let mut v = ModPoly::gen(spec, gb(h, k))
                    .lmul_poly(&del(spec, i).add(&lam(spec, i).scale(&qr(3, 2))));
                if i == h {
                    for m in 1..=3u8 {
                        v = v.sub(&ModPoly::gen(spec, gb(m, k)).lmul_poly(&lam(spec, m)));
                    }
                }
                table.insert((ga(i), gb(h, k)), v);
            }
        }
    }
    // [b_ij l b_hk] = (j - k) eps(i,h) a_{t(i,h)}
    //   + eps(i,h) (l_t + 1/2 d_t) e_j.e_k
    // The second summand is forced by the Jacobi identity; it is the Fourier
    // transform of the (d omega ^ omega') part of the odd bracket.
    for i in 1..=3u8 {
        for j in 1..=2u8 {
            for h in 1..=3u8 {
                for k in 1..=2u8 {
                    let mut v = ModPoly::zero(spec);
                    let e = eps3(i, h);
                    if e != 0 {
                        if j != k {
                            v = ModPoly::gen(spec, ga(t3(i, h)))
                                .scale(&qi((j as i64 - k as i64) * e));
                        }
                        let t = t3(i, h);
                        let mut csum = ModPoly::zero(spec);
                        for (c, coef) in sym_sq((j - 1) as usize, (k - 1) as usize) {
                            csum = csum.add(&ModPoly::gen(spec, gc(c)).scale(&qi(coef)));
                        }
                        v = v.add(
                            &csum
                                .lmul_poly(&lam(spec, t).add(&del(spec, t).scale(&qr(1, 2))))
                                .scale(&qi(e)),
                        );
                    }
                    table.insert((gb(i, j), gb(h, k)), v);
                }
            }
        }
    }
    // [a_i l c] = (d_i + l_i) c
    for i in 1..=3u8 {
        for c in 0..3usize {
            let v = ModPoly::gen(spec, gc(c)).lmul_poly(&del(spec, i).add(&lam(spec, i)));
            table.insert((ga(i), gc(c)), v);
        }
    }
    // [c l b_h (x) v] = b_h (x) c.v
    for c in 0..3usize {
        for h in 1..=3u8 {
            for k in 1..=2u8 {
                let mut v = ModPoly::zero(spec);
                for (tv, coef) in sl2_act(c, (k - 1) as usize) {
                    v = v.add(&ModPoly::gen(spec, gb(h, tv as u8 + 1)).scale(&qi(coef)));
                }
                table.insert((gc(c), gb(h, k)), v);
            }
        }
    }
    // [c l c'] = [c, c']
    for c in 0..3usize {
        for d in 0..3usize {
            let mut v = ModPoly::zero(spec);
            for (t, coef) in sl2_bracket(c, d) {
                v = v.add(&ModPoly::gen(spec, gc(t)).scale(&qi(coef)));
            }
            table.insert((gc(c), gc(d)), v);
        }
    }
    let mut pres = Presentation {
        name: "RE36".into(),
        spec,
        gens,
        table,
        mode: Mode::Free,
    };
    pres.complete_table_by_skew();
    pres
}

/// RE(3,8): quotient presentation with relation d_1 b_1 + d_2 b_2 + d_3 b_3
/// and antisymmetric d_{hkl}; the full lambda-bracket table of section 8.
pub fn build_re38() -> Presentation {
    let spec = VarSpec::new(3, 0);
    let mut gens: Vec<GenSym> = (1..=3)
        .map(|i| GenSym {
            name: format!("a{i}"),
            parity: false,
            degree: -2,
        })
        .collect();
    for i in 1..=3u8 {
        gens.push(GenSym {
            name: format!("b{i}"),
            parity: false,
            degree: 2,
        });
    }
    for c in ["E", "F", "H"] {
        gens.push(GenSym {
            name: c.into(),
            parity: false,
            degree: 0,
        });
    }
    for l in 1..=2u8 {
        gens.push(GenSym {
            name: format!("e{l}"),
            parity: true,
            degree: -3,
        });
    }
    for h in 1..=3u8 {
        for k in h + 1..=3u8 {
            for l in 1..=2u8 {
                gens.push(GenSym {
                    name: format!("d{h}{k}{l}"),
                    parity: true,
                    degree: 1,
                });
            }
        }
    }
    let ga = |i: u8| (i - 1) as GenId;
    let gb = |i: u8| (2 + i) as GenId;
    let gc = |c: usize| (6 + c) as GenId;
    let ge = |l: u8| (8 + l) as GenId;
    let gd_pos = |h: u8, k: u8| match (h, k) {
        (1, 2) => 0u16,
        (1, 3) => 1,
        (2, 3) => 2,
        _ => unreachable!(),
    };
    // d_{hkl} with antisymmetry in (h,k); None when h == k.
    let gd = |h: u8, k: u8, l: u8| -> Option<(i64, GenId)> {
        use std::cmp::Ordering::*;
        match h.cmp(&k) {
            Equal => None,
            Less => Some((1, 11 + gd_pos(h, k) * 2 + (l - 1) as u16)),
            Greater => Some((-1, 11 + gd_pos(k, h) * 2 + (l - 1) as u16)),
        }
    };
    let gen = |g: GenId| -> ModPoly { ModPoly::gen(spec, g) };
    let dgen = |h: u8, k: u8, l: u8| -> ModPoly {
        match gd(h, k, l) {
            None => ModPoly::zero(spec),
            Some((s, g)) => gen(g).scale(&qi(s)),
        }
    };
    let mut table = BTreeMap::new();
    // [a_i l a_j] = -(l_i + d_i) a_j - l_j a_i + 1/2 l_i (l_j + d_j) sum_k l_k b_k
    for i in 1..=3u8 {
        for j in 1..=3u8 {
            let mut v = gen(ga(j))
                .lmul_poly(&lam(spec, i).add(&del(spec, i)))
                .neg()
                .sub(&gen(ga(i)).lmul_poly(&lam(spec, j)));
            let mut corr = ModPoly::zero(spec);
            for k in 1..=3u8 {
                corr = corr.add(&gen(gb(k)).lmul_poly(&lam(spec, k)));
            }
            let corr = corr
                .lmul_poly(&lam(spec, j).add(&del(spec, j)))
                .lmul_poly(&lam(spec, i))
                .scale(&qr(1, 2));
            v = v.add(&corr);
            table.insert((ga(i), ga(j)), v);
        }
    }
    // [a_i l c] = -(d_i + l_i) c
    for i in 1..=3u8 {
        for c in 0..3usize {
            table.insert(
                (ga(i), gc(c)),
                gen(gc(c)).lmul_poly(&del(spec, i).add(&lam(spec, i))).neg(),
            );
        }
    }
    // [a_i l b_k] = -(d_i + l_i) b_k + delta_ki sum_r l_r b_r
    for i in 1..=3u8 {
        for k in 1..=3u8 {
            let mut v = gen(gb(k)).lmul_poly(&del(spec, i).add(&lam(spec, i))).neg();
            if k == i {
                for r in 1..=3u8 {
                    v = v.add(&gen(gb(r)).lmul_poly(&lam(spec, r)));
                }
            }
            table.insert((ga(i), gb(k)), v);
        }
    }
    // [c l b_j] = 0, [b_i l b_k] = 0
    for c in 0..3usize {
        for j in 1..=3u8 {
            table.insert((gc(c), gb(j)), ModPoly::zero(spec));
        }
    }
    for i in 1..=3u8 {
        for k in 1..=3u8 {
            table.insert((gb(i), gb(k)), ModPoly::zero(spec));
        }
    }
    // [e_i l e_j] = (j - i) sum_{h,k} eps(h,k) l_k d_h a_{t(h,k)}
    for i in 1..=2u8 {
        for j in 1..=2u8 {
            let mut v = ModPoly::zero(spec);
            for h in 1..=3u8 {
                for k in 1..=3u8 {
                    let e = eps3(h, k);
                    if e != 0 {
                        v = v.add(
                            &gen(ga(t3(h, k)))
                                .lmul_poly(&del(spec, h))
                                .lmul_poly(&lam(spec, k))
                                .scale(&qi(e * (j as i64 - i as i64))),
                        );
                    }
                }
            }
            table.insert((ge(i), ge(j)), v);
        }
    }
    // [e_i l d_{jkh}] = eps(j,k) ( (h-i) a_{t(j,k)}
    //   + (i-h)(l_t + d_t) sum_r l_r b_r + 1/2 (2 l_t + d_t) e_i.e_h )
    for i in 1..=2u8 {
        for j in 1..=3u8 {
            for k in j + 1..=3u8 {
                for h in 1..=2u8 {
                    let e = eps3(j, k);
                    let t = t3(j, k);
                    let mut v = gen(ga(t)).scale(&qi(h as i64 - i as i64));
                    let mut bsum = ModPoly::zero(spec);
                    for r in 1..=3u8 {
                        bsum = bsum.add(&gen(gb(r)).lmul_poly(&lam(spec, r)));
                    }
                    v = v.add(
                        &bsum
                            .lmul_poly(&lam(spec, t).add(&del(spec, t)))
                            .scale(&qi(i as i64 - h as i64)),
                    );
                    let mut csum = ModPoly::zero(spec);
                    for (c, coef) in sym_sq((i - 1) as usize, (h - 1) as usize) {
                        csum = csum.add(&gen(gc(c)).scale(&qi(coef)));
                    }
                    v = v.add(
                        &csum
                            .lmul_poly(&lam(spec, t).scale(&qi(2)).add(&del(spec, t)))
                            .scale(&qr(1, 2)),
                    );
                    table.insert((ge(i), gd(j, k, h).unwrap().1), v.scale(&qi(e)));
                }
            }
        }
    }
    // [d_{jkh} l d_{j's l}]: nonzero only with a shared first index after
    // antisymmetry; [d_{jkh} l d_{jsl}] = eps(j,k)(l-h)(1-delta_{ks}) b_j.
    for p1 in [(1u8, 2u8), (1, 3), (2, 3)] {
        for l1 in 1..=2u8 {
            for p2 in [(1u8, 2u8), (1, 3), (2, 3)] {
                for l2 in 1..=2u8 {
                    let g1 = gd(p1.0, p1.1, l1).unwrap().1;
                    let g2 = gd(p2.0, p2.1, l2).unwrap().1;
                    let v = d_d_bracket(spec, p1, l1, p2, l2, &gb);
                    table.insert((g1, g2), v);
                }
            }
        }
    }
    // [a_i l e_j] = -(3/2 l_i + d_i) e_j - 1/2 sum_{k,r} l_k l_i d_r d_{krj}
    for i in 1..=3u8 {
        for j in 1..=2u8 {
            let mut v = gen(ge(j))
                .lmul_poly(&lam(spec, i).scale(&qr(3, 2)).add(&del(spec, i)))
                .neg();
            for k in 1..=3u8 {
                for r in 1..=3u8 {
                    let d = dgen(k, r, j);
                    if !d.is_zero() {
                        v = v.sub(
                            &d.lmul_poly(&del(spec, r))
                                .lmul_poly(&lam(spec, i))
                                .lmul_poly(&lam(spec, k))
                                .scale(&qr(1, 2)),
                        );
                    }
                }
            }
            table.insert((ga(i), ge(j)), v);
        }
    }
    // [c l e_j] = c e_j - sum_{i,h} l_i d_h d_{ih} (x) c e_j
    for c in 0..3usize {
        for j in 1..=2u8 {
            let mut v = ModPoly::zero(spec);
            for (tv, coef) in sl2_act(c, (j - 1) as usize) {
                v = v.add(&gen(ge(tv as u8 + 1)).scale(&qi(coef)));
                for i in 1..=3u8 {
                    for h in 1..=3u8 {
                        let d = dgen(i, h, tv as u8 + 1);
                        if !d.is_zero() {
                            v = v.sub(
                                &d.lmul_poly(&del(spec, h))
                                    .lmul_poly(&lam(spec, i))
                                    .scale(&qi(coef)),
                            );
                        }
                    }
                }
            }
            table.insert((gc(c), ge(j)), v);
        }
    }
    // [c l d_{ijh}] = [c, d_{ijh}] = d_ij (x) c.e_h
    for c in 0..3usize {
        for (i, j) in [(1u8, 2u8), (1, 3), (2, 3)] {
            for h in 1..=2u8 {
                let mut v = ModPoly::zero(spec);
                for (tv, coef) in sl2_act(c, (h - 1) as usize) {
                    v = v.add(&dgen(i, j, tv as u8 + 1).scale(&qi(coef)));
                }
                table.insert((gc(c), gd(i, j, h).unwrap().1), v);
            }
        }
    }
    // [b_j l e_k] = -sum_i l_i d_{ijk}
    for j in 1..=3u8 {
        for k in 1..=2u8 {
            let mut v = ModPoly::zero(spec);
            for i in 1..=3u8 {
                let d = dgen(i, j, k);
                if !d.is_zero() {
                    v = v.sub(&d.lmul_poly(&lam(spec, i)));
                }
            }
            table.insert((gb(j), ge(k)), v);
        }
    }
    // [b_i l d_{jkl}] = 0
    for i in 1..=3u8 {
        for (j, k) in [(1u8, 2u8), (1, 3), (2, 3)] {
            for l in 1..=2u8 {
                table.insert((gb(i), gd(j, k, l).unwrap().1), ModPoly::zero(spec));
            }
        }
    }
    // [c l c'] = [c,c'] + sum_k tr(cc') l_k b_k
    for c in 0..3usize {
        for d in 0..3usize {
            let mut v = ModPoly::zero(spec);
            for (t, coef) in sl2_bracket(c, d) {
                v = v.add(&gen(gc(t)).scale(&qi(coef)));
            }
            let tr = sl2_trace(c, d);
            if tr != 0 {
                for k in 1..=3u8 {
                    v = v.add(&gen(gb(k)).lmul_poly(&lam(spec, k)).scale(&qi(tr)));
                }
            }
            table.insert((gc(c), gc(d)), v);
        }
    }
    // [a_i l d_{hkl}] = -(3/2 l_i + d_i) d_{hkl} + delta_ih sum_j l_j d_{jkl}
    //   - delta_ik sum_r l_r d_{rhl}
    for i in 1..=3u8 {
        for (h, k) in [(1u8, 2u8), (1, 3), (2, 3)] {
            for l in 1..=2u8 {
                let mut v = dgen(h, k, l)
                    .lmul_poly(&lam(spec, i).scale(&qr(3, 2)).add(&del(spec, i)))
                    .neg();
                if i == h {
                    for j in 1..=3u8 {
                        let d = dgen(j, k, l);
                        if !d.is_zero() {
                            v = v.add(&d.lmul_poly(&lam(spec, j)));
                        }
                    }
                }
                if i == k {
                    for r in 1..=3u8 {
                        let d = dgen(r, h, l);
                        if !d.is_zero() {
                            v = v.sub(&d.lmul_poly(&lam(spec, r)));
                        }
                    }
                }
                table.insert((ga(i), gd(h, k, l).unwrap().1), v);
            }
        }
    }
    // relation: d_1 b_1 + d_2 b_2 + d_3 b_3 = 0
    let mut rel = ModPoly::zero(spec);
    for i in 1..=3u8 {
        rel = rel.add(&gen(gb(i)).lmul_poly(&del(spec, i)));
    }
    let mut pres = Presentation {
        name: "RE38".into(),
        spec,
        gens,
        table,
        mode: Mode::Rewrite {
            relations: vec![rel],
        },
    };
    pres.complete_table_by_skew();
    pres
}

/// `[d_{p1, l1} l d_{p2, l2}]` after reordering both to share the first
/// index: nonzero exactly when the pairs share one index.
fn d_d_bracket(
    spec: VarSpec,
    p1: (u8, u8),
    l1: u8,
    p2: (u8, u8),
    l2: u8,
    gb: &impl Fn(u8) -> GenId,
) -> ModPoly {
    // Orderings of each pair: (j,k) with sign from antisymmetry.
    let orders = |(a, b): (u8, u8)| [((a, b), 1i64), ((b, a), -1i64)];
    for ((j1, k1), s1) in orders(p1) {
        for ((j2, s2idx), s2) in orders(p2) {
            if j1 == j2 {
                // [d_{j k h} l d_{j s l}] = eps(j,k)(l-h)(1-delta_{ks}) b_j
                let (j, k, s) = (j1, k1, s2idx);
                if k == s {
                    return ModPoly::zero(spec);
                }
                let coef = eps3(j, k) * (l2 as i64 - l1 as i64) * s1 * s2;
                return ModPoly::gen(spec, gb(j)).scale(&qi(coef));
            }
        }
    }
    ModPoly::zero(spec)
}

/// The free ambient presentation of RE(5,10) on Dx_i (even, -2) and d_{jk}
/// (odd, -1); skew-symmetric but not a conformal algebra by itself.
pub fn build_re510_ambient() -> Presentation {
    let spec = VarSpec::new(5, 0);
    let mut gens: Vec<GenSym> = (1..=5)
        .map(|i| GenSym {
            name: format!("Dx{i}"),
            parity: false,
            degree: -2,
        })
        .collect();
    let mut pairs = Vec::new();
    for j in 1..=5u8 {
        for k in j + 1..=5u8 {
            pairs.push((j, k));
            gens.push(GenSym {
                name: format!("d{j}{k}"),
                parity: true,
                degree: -1,
            });
        }
    }
    let gx = |i: u8| (i - 1) as GenId;
    let pair_pos = |j: u8, k: u8| {
        pairs
            .iter()
            .position(|&(a, b)| (a, b) == (j, k))
            .map(|p| (5 + p) as GenId)
    };
    // d_{jk} with antisymmetry; None for j == k.
    let gd = |j: u8, k: u8| -> Option<(i64, GenId)> {
        use std::cmp::Ordering::*;
        match j.cmp(&k) {
            Equal => None,
            Less => Some((1, pair_pos(j, k).unwrap())),
            Greater => Some((-1, pair_pos(k, j).unwrap())),
        }
    };
    let gen = |g: GenId| ModPoly::gen(spec, g);
    let mut table = BTreeMap::new();
    // [Dx_i l Dx_j] = -(d_i + l_i) Dx_j - l_j Dx_i
    for i in 1..=5u8 {
        for j in 1..=5u8 {
            let v = gen(gx(j))
                .lmul_poly(&del(spec, i).add(&lam(spec, i)))
                .neg()
                .sub(&gen(gx(i)).lmul_poly(&lam(spec, j)));
            table.insert((gx(i), gx(j)), v);
        }
    }
    // [Dx_i l d_jk] = -(d_i + l_i) d_jk + delta_ij sum_h l_h d_hk
    //   - delta_ki sum_r l_r d_rj
    for i in 1..=5u8 {
        for &(j, k) in &pairs {
            let mut v = gen(gd(j, k).unwrap().1)
                .lmul_poly(&del(spec, i).add(&lam(spec, i)))
                .neg();
            if i == j {
                for h in 1..=5u8 {
                    if let Some((s, g)) = gd(h, k) {
                        v = v.add(&gen(g).scale(&qi(s)).lmul_poly(&lam(spec, h)));
                    }
                }
            }
            if i == k {
                for r in 1..=5u8 {
                    if let Some((s, g)) = gd(r, j) {
                        v = v.sub(&gen(g).scale(&qi(s)).lmul_poly(&lam(spec, r)));
                    }
                }
            }
            table.insert((gx(i), gd(j, k).unwrap().1), v);
        }
    }
    // [d_jk l Dx_i] = -l_i d_jk + delta_ij sum_h (l_h + d_h) d_hk
    //   - delta_ki sum_r (l_r + d_r) d_rj
    for &(j, k) in &pairs {
        for i in 1..=5u8 {
            let mut v = gen(gd(j, k).unwrap().1).lmul_poly(&lam(spec, i)).neg();
            if i == j {
                for h in 1..=5u8 {
                    if let Some((s, g)) = gd(h, k) {
                        v = v.add(
                            &gen(g)
                                .scale(&qi(s))
                                .lmul_poly(&lam(spec, h).add(&del(spec, h))),
                        );
                    }
                }
            }
            if i == k {
                for r in 1..=5u8 {
                    if let Some((s, g)) = gd(r, j) {
                        v = v.sub(
                            &gen(g)
                                .scale(&qi(s))
                                .lmul_poly(&lam(spec, r).add(&del(spec, r))),
                        );
                    }
                }
            }
            table.insert((gd(j, k).unwrap().1, gx(i)), v);
        }
    }
    // [d_ij l d_hk] = eps(i,j,h,k) Dx_t
    for &(i, j) in &pairs {
        for &(h, k) in &pairs {
            let (sign, t) = eps5(i, j, h, k);
            let v = if sign == 0 {
                ModPoly::zero(spec)
            } else {
                gen(gx(t)).scale(&qi(sign))
            };
            table.insert((gd(i, j).unwrap().1, gd(h, k).unwrap().1), v);
        }
    }
    Presentation {
        name: "hatRE510".into(),
        spec,
        gens,
        table,
        mode: Mode::Free,
    }
}

/// RE(5,10) in ambient mode: quotient generators a_{ij} (even, -4) and b_k
/// (odd, -3) inside the free ambient presentation, with the derived table.
pub fn build_re510() -> Presentation {
    let spec = VarSpec::new(5, 0);
    let ambient = build_re510_ambient();
    let mut gens = Vec::new();
    let mut pairs = Vec::new();
    for i in 1..=5u8 {
        for j in i + 1..=5u8 {
            pairs.push((i, j));
            gens.push(GenSym {
                name: format!("a{i}{j}"),
                parity: false,
                degree: -4,
            });
        }
    }
    for k in 1..=5u8 {
        gens.push(GenSym {
            name: format!("b{k}"),
            parity: true,
            degree: -3,
        });
    }
    let pair_pos = |i: u8, j: u8| pairs.iter().position(|&p| p == (i, j)).unwrap();
    // a_{ij} with antisymmetry; None for i == j.
    let gaq = |i: u8, j: u8| -> Option<(i64, GenId)> {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => None,
            Less => Some((1, pair_pos(i, j) as GenId)),
            Greater => Some((-1, pair_pos(j, i) as GenId)),
        }
    };
    let gbq = |k: u8| (10 + k - 1) as GenId;
    let agen = |i: u8, j: u8| -> ModPoly {
        match gaq(i, j) {
            None => ModPoly::zero(spec),
            Some((s, g)) => ModPoly::gen(spec, g).scale(&qi(s)),
        }
    };
    // Embedding: a_ij = d_i Dx_j - d_j Dx_i, b_k = sum_h d_h d_hk.
    let mut embed = Vec::new();
    for &(i, j) in &pairs {
        let gx = |i: u8| ambient.gen_id(&format!("Dx{i}")).unwrap();
        let v = ModPoly::gen(spec, gx(j))
            .lmul_poly(&del(spec, i))
            .sub(&ModPoly::gen(spec, gx(i)).lmul_poly(&del(spec, j)));
        embed.push(v);
    }
    for k in 1..=5u8 {
        let mut v = ModPoly::zero(spec);
        for h in 1..=5u8 {
            if h != k {
                let (mut s, name) = if h < k {
                    (1i64, format!("d{h}{k}"))
                } else {
                    (-1, format!("d{k}{h}"))
                };
                if h == k {
                    s = 0;
                }
                let g = ambient.gen_id(&name).unwrap();
                v = v.add(&ModPoly::gen(spec, g).scale(&qi(s)).lmul_poly(&del(spec, h)));
            }
        }
        embed.push(v);
    }
    let mut table = BTreeMap::new();
    // [a_ij l a_rs] = l_j l_r a_si + l_i l_r a_js + l_i l_s a_rj
    //   + l_j l_s a_ir + l_i d_j a_rs + l_j d_i a_sr
    for &(i, j) in &pairs {
        for &(r, s) in &pairs {
            let ll = |p: u8, q: u8| lam(spec, p).mul(&lam(spec, q));
            let mut v = agen(s, i).lmul_poly(&ll(j, r));
            v = v.add(&agen(j, s).lmul_poly(&ll(i, r)));
            v = v.add(&agen(r, j).lmul_poly(&ll(i, s)));
            v = v.add(&agen(i, r).lmul_poly(&ll(j, s)));
            v = v.add(&agen(r, s).lmul_poly(&lam(spec, i).mul(&del(spec, j))));
            v = v.add(&agen(s, r).lmul_poly(&lam(spec, j).mul(&del(spec, i))));
            table.insert((gaq(i, j).unwrap().1, gaq(r, s).unwrap().1), v);
        }
    }
    // [a_ij l b_k] = (l_i d_j - l_j d_i) b_k + (delta_ik l_j - delta_jk l_i) sum_r l_r b_r
    for &(i, j) in &pairs {
        for k in 1..=5u8 {
            let mut v = ModPoly::gen(spec, gbq(k)).lmul_poly(
                &lam(spec, i)
                    .mul(&del(spec, j))
                    .sub(&lam(spec, j).mul(&del(spec, i))),
            );
            let mut front = SuperPoly::zero(spec);
            if i == k {
                front = front.add(&lam(spec, j));
            }
            if j == k {
                front = front.sub(&lam(spec, i));
            }
            if !front.is_zero() {
                let mut bsum = ModPoly::zero(spec);
                for r in 1..=5u8 {
                    bsum = bsum.add(&ModPoly::gen(spec, gbq(r)).lmul_poly(&lam(spec, r)));
                }
                v = v.add(&bsum.lmul_poly(&front));
            }
            table.insert((gaq(i, j).unwrap().1, gbq(k)), v);
        }
    }
    // [b_i l b_i] = 0; [b_i l b_j] = eps(i,j,h,k,l)(l_h a_kl + l_k a_lh + l_l a_hk)
    for i in 1..=5u8 {
        for j in 1..=5u8 {
            let v = if i == j {
                ModPoly::zero(spec)
            } else {
                let others: Vec<u8> = (1..=5).filter(|&x| x != i && x != j).collect();
                let (h, k, l) = (others[0], others[1], others[2]);
                let perm = [i, j, h, k, l];
                let mut sign = 1i64;
                for a in 0..5 {
                    for b in a + 1..5 {
                        if perm[a] > perm[b] {
                            sign = -sign;
                        }
                    }
                }
                agen(k, l)
                    .lmul_poly(&lam(spec, h))
                    .add(&agen(l, h).lmul_poly(&lam(spec, k)))
                    .add(&agen(h, k).lmul_poly(&lam(spec, l)))
                    .scale(&qi(sign))
            };
            table.insert((gbq(i), gbq(j)), v);
        }
    }
    let mut pres = Presentation {
        name: "RE510".into(),
        spec,
        gens,
        table,
        mode: Mode::Ambient {
            ambient: Box::new(ambient),
            embed,
        },
    };
    pres.complete_table_by_skew();
    pres
}

/// All built-ins exercised by the acceptance suite.
pub fn acceptance_builtins() -> Vec<Presentation> {
    let mut out = Vec::new();
    for r in 0..=3u8 {
        for s in 0..=3u8 {
            if r + s >= 1 && r + s <= 3 {
                out.push(build_rw(r, s).unwrap());
            }
        }
    }
    for n in 0..=4u8 {
        out.push(build_kn(n).unwrap());
    }
    out.push(build_re36());
    out.push(build_re38());
    out.push(build_re510());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpoly::IndexSeq;

    #[test]
    fn rw_table_examples() {
        let a = build_rw(1, 0).unwrap();
        // [a1 l a1] = d1 a1 + 2 l1 a1
        let v = a.bracket(&a.element("a1").unwrap(), &a.element("a1").unwrap());
        let expect = ModPoly::gen(a.spec, 0).lmul_poly(&del(a.spec, 1)).add(
            &ModPoly::gen(a.spec, 0)
                .lmul_poly(&lam(a.spec, 1))
                .scale(&qi(2)),
        );
        assert_eq!(v, expect);
        // sesquilinearity: [d1 a1 l a1] = -l1 [a1 l a1]
        let da1 = a.element("a1").unwrap().lmul_poly(&del(a.spec, 1));
        let v2 = a.bracket(&da1, &a.element("a1").unwrap());
        assert_eq!(v2, expect.lmul_poly(&lam(a.spec, 1)).neg());
        // k-product (a1_(1) a1) = 2 a1
        let k = a
            .k_product(
                &a.element("a1").unwrap(),
                &a.element("a1").unwrap(),
                &IndexSeq::new(vec![1]),
            )
            .unwrap();
        assert_eq!(k, ModPoly::gen(a.spec, 0).scale(&qi(2)));
    }

    #[test]
    fn rw_odd_self_bracket() {
        // RW(1,1): [a2 l a2] = d2 a2 (the two odd lambda terms cancel)
        let a = build_rw(1, 1).unwrap();
        let v = a.bracket(&a.element("a2").unwrap(), &a.element("a2").unwrap());
        let expect = a.element("a2").unwrap().lmul_poly(&del(a.spec, 2));
        assert_eq!(v, expect);
    }

    #[test]
    fn rw_axioms_small() {
        for (r, s) in [(1, 0), (0, 1), (1, 1), (2, 1), (1, 2)] {
            let a = build_rw(r, s).unwrap();
            let rep = a.check();
            assert!(rep.passed(), "RW({r},{s}) failed: {:?}", rep.witnesses());
        }
    }

    #[test]
    fn mutated_table_fails_skew() {
        // [a l a] = a for an even generator violates skew-symmetry.
        let spec = VarSpec::new(1, 0);
        let gens = vec![GenSym {
            name: "a".into(),
            parity: false,
            degree: -2,
        }];
        let mut table = BTreeMap::new();
        table.insert((0, 0), ModPoly::gen(spec, 0));
        let pres = Presentation {
            name: "bad".into(),
            spec,
            gens,
            table,
            mode: Mode::Free,
        };
        let rep = pres.check();
        assert!(!rep.skew_failures.is_empty());
    }

    #[test]
    fn kn_table_examples() {
        let k0 = build_kn(0).unwrap();
        // n=0: [one l one] = -2 d one - 4 l one
        let v = k0.bracket(&k0.element("one").unwrap(), &k0.element("one").unwrap());
        let expect = k0
            .element("one")
            .unwrap()
            .lmul_poly(
                &del(k0.spec, 1)
                    .scale(&qi(2))
                    .add(&lam(k0.spec, 1).scale(&qi(4))),
            )
            .neg();
        assert_eq!(v, expect);
        let k2 = build_kn(2).unwrap();
        // [x1 l x1] = -one
        let v = k2.bracket(&k2.element("x1").unwrap(), &k2.element("x1").unwrap());
        assert_eq!(v, k2.element("one").unwrap().neg());
        // [one l x1x2] = -2 d (x1x2) - 2 l x1x2
        let v = k2.bracket(&k2.element("one").unwrap(), &k2.element("x12").unwrap());
        let expect = k2
            .element("x12")
            .unwrap()
            .lmul_poly(&del(k2.spec, 1).add(&lam(k2.spec, 1)))
            .scale(&qi(-2));
        assert_eq!(v, expect);
        // k-product at K = (): (one_() x1x2) = -2 d x1x2, while the reversed
        // order (x1x2_() one) vanishes since its degree prefactor is zero.
        let kp = k2
            .k_product(
                &k2.element("one").unwrap(),
                &k2.element("x12").unwrap(),
                &IndexSeq::new(vec![]),
            )
            .unwrap();
        assert_eq!(
            kp,
            k2.element("x12")
                .unwrap()
                .lmul_poly(&del(k2.spec, 1))
                .scale(&qi(-2))
        );
        let kp0 = k2
            .k_product(
                &k2.element("x12").unwrap(),
                &k2.element("one").unwrap(),
                &IndexSeq::new(vec![]),
            )
            .unwrap();
        assert!(kp0.is_zero());
    }

    #[test]
    fn kn_axioms() {
        for n in 0..=3u8 {
            let a = build_kn(n).unwrap();
            let rep = a.check();
            assert!(rep.passed(), "K({n}) failed: {:?}", rep.witnesses());
        }
    }

    #[test]
    fn re36_examples_and_axioms() {
        let a = build_re36();
        // [b11 l b22] = -a3 - (l3 + 1/2 d3) H
        let v = a.bracket(&a.element("b11").unwrap(), &a.element("b22").unwrap());
        let expect = a.element("a3").unwrap().neg().sub(
            &a.element("H")
                .unwrap()
                .lmul_poly(&lam(a.spec, 3).add(&del(a.spec, 3).scale(&qr(1, 2)))),
        );
        assert_eq!(v, expect);
        // [H l b11] = b11
        let v = a.bracket(&a.element("H").unwrap(), &a.element("b11").unwrap());
        assert_eq!(v, a.element("b11").unwrap());
        // [E l F] = H
        let v = a.bracket(&a.element("E").unwrap(), &a.element("F").unwrap());
        assert_eq!(v, a.element("H").unwrap());
        let rep = a.check();
        assert!(rep.passed(), "RE36 failed: {:?}", rep.witnesses());
    }

    #[test]
    fn re38_examples() {
        let a = build_re38();
        // [E l F] = H + sum_k l_k b_k
        let v = a.bracket(&a.element("E").unwrap(), &a.element("F").unwrap());
        let mut expect = a.element("H").unwrap();
        for k in 1..=3u8 {
            expect = expect.add(
                &a.element(&format!("b{k}"))
                    .unwrap()
                    .lmul_poly(&lam(a.spec, k)),
            );
        }
        assert_eq!(v, expect);
        // [b_i l b_k] = 0 and [e1 l e1] = 0
        assert!(a
            .bracket(&a.element("b1").unwrap(), &a.element("b2").unwrap())
            .is_zero());
        assert!(a
            .bracket(&a.element("e1").unwrap(), &a.element("e1").unwrap())
            .is_zero());
    }

    #[test]
    fn re38_axioms() {
        let a = build_re38();
        let rep = a.check();
        assert!(rep.passed(), "RE38 failed: {:?}", rep.witnesses());
    }

    #[test]
    fn re510_examples() {
        let a = build_re510();
        // [b1 l b1] = 0
        assert!(a
            .bracket(&a.element("b1").unwrap(), &a.element("b1").unwrap())
            .is_zero());
        // [a12 l b3] = (l1 d2 - l2 d1) b3
        let v = a.bracket(&a.element("a12").unwrap(), &a.element("b3").unwrap());
        let expect = a.element("b3").unwrap().lmul_poly(
            &lam(a.spec, 1)
                .mul(&del(a.spec, 2))
                .sub(&lam(a.spec, 2).mul(&del(a.spec, 1))),
        );
        assert_eq!(v, expect);
        // d1 a23 + d2 a31 + d3 a12 = 0 in the ambient module
        let rel = a
            .element("a23")
            .unwrap()
            .lmul_poly(&del(a.spec, 1))
            .add(&a.element("a13").unwrap().neg().lmul_poly(&del(a.spec, 2)))
            .add(&a.element("a12").unwrap().lmul_poly(&del(a.spec, 3)));
        assert!(a.is_zero_mod(&rel));
        assert!(!rel.is_zero());
    }

    #[test]
    fn re510_axioms() {
        let a = build_re510();
        let rep = a.check();
        assert!(rep.passed(), "RE510 failed: {:?}", rep.witnesses());
    }
}
