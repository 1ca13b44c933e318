//! Lie conformal superalgebras of type (r,s) presented by a lambda-bracket
//! table on generators of a finitely generated module over the del-algebra.
//!
//! The bracket of arbitrary elements is the bilinear extension of the table
//! by sesquilinearity; skew-symmetry, the Jacobi identity and the grading
//! are checked as exact residuals. Three presentation modes are supported:
//! free modules, submodules of a free ambient presentation (equality decided
//! after embedding), and quotients by oriented rewrite relations.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};

use crate::error::CoreError;
use crate::superpoly::{q_display, qi, FamMono, Family, IndexSeq, Monomial, SuperPoly, VarSpec, Q};

pub type GenId = u16;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenSym {
    pub name: String,
    pub parity: bool,
    pub degree: i64,
}

/// Element of the free module over the generators, with coefficients in the
/// three-family super-polynomial algebra. Plain elements use only the del
/// family; lambda-values also use lambda (and mu in two-variable contexts).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ModPoly {
    pub spec: VarSpec,
    pub terms: BTreeMap<(Monomial, GenId), Q>,
}

impl ModPoly {
    pub fn zero(spec: VarSpec) -> Self {
        ModPoly {
            spec,
            terms: BTreeMap::new(),
        }
    }

    pub fn gen(spec: VarSpec, g: GenId) -> Self {
        let mut v = Self::zero(spec);
        v.add_term(Monomial::one(), g, Q::one());
        v
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, g: GenId, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((m, g)).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&(m, g));
        }
    }

    pub fn add(&self, other: &ModPoly) -> ModPoly {
        let mut out = self.clone();
        for ((m, g), c) in &other.terms {
            out.add_term(*m, *g, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &ModPoly) -> ModPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ModPoly {
        let mut out = Self::zero(self.spec);
        for (k, c) in &self.terms {
            out.terms.insert(*k, -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Q) -> ModPoly {
        if k.is_zero() {
            return Self::zero(self.spec);
        }
        let mut out = Self::zero(self.spec);
        for (key, c) in &self.terms {
            out.terms.insert(*key, c * k);
        }
        out
    }

    /// Left multiplication by a super-polynomial.
    pub fn lmul_poly(&self, p: &SuperPoly) -> ModPoly {
        let mut out = Self::zero(self.spec);
        for (pm, pc) in &p.terms {
            for ((m, g), c) in &self.terms {
                if let Some((sign, prod)) = pm.mul(m) {
                    let mut q = pc * c;
                    if sign < 0 {
                        q = -q;
                    }
                    out.add_term(prod, *g, q);
                }
            }
        }
        out
    }

    pub fn lmul_mono(&self, m: &Monomial, c: &Q) -> ModPoly {
        let mut out = Self::zero(self.spec);
        for ((tm, g), tc) in &self.terms {
            if let Some((sign, prod)) = m.mul(tm) {
                let mut q = tc * c;
                if sign < 0 {
                    q = -q;
                }
                out.add_term(prod, *g, q);
            }
        }
        out
    }

    /// Right multiplication by a single variable, crossing the generator
    /// with the Koszul sign.
    pub fn rmul_var(&self, fam: Family, i: u8, gens: &[GenSym]) -> ModPoly {
        let vodd = self.spec.is_odd(i);
        let vmono = Monomial::var(self.spec, fam, i);
        let mut out = Self::zero(self.spec);
        for ((m, g), c) in &self.terms {
            if let Some((sign, prod)) = m.mul(&vmono) {
                let mut q = c.clone();
                if sign < 0 {
                    q = -q;
                }
                if vodd && gens[*g as usize].parity {
                    q = -q;
                }
                out.add_term(prod, *g, q);
            }
        }
        out
    }

    /// Substitute each polynomial factor in place, leaving generators fixed.
    pub fn subst<F>(&self, images: F) -> ModPoly
    where
        F: Fn(Family, u8) -> Option<SuperPoly>,
    {
        let mut out = Self::zero(self.spec);
        for ((m, g), c) in &self.terms {
            let mut poly = SuperPoly::zero(self.spec);
            poly.add_term(*m, c.clone());
            let poly = poly.subst(&images);
            for (pm, pc) in poly.terms {
                out.add_term(pm, *g, pc);
            }
        }
        out
    }

    /// Relabel every lambda factor as the corresponding mu factor.
    pub fn lambda_to_mu(&self) -> ModPoly {
        let mut out = Self::zero(self.spec);
        for ((m, g), c) in &self.terms {
            debug_assert!(m.fam(Family::Mu).is_one());
            let mut m2 = *m;
            m2.fams[Family::Mu as usize] = *m.fam(Family::Lambda);
            m2.fams[Family::Lambda as usize] = FamMono::one();
            out.add_term(m2, *g, c.clone());
        }
        out
    }

    /// Coefficient of the exact lambda-monomial `k` (other families kept).
    pub fn coeff_of(&self, fam: Family, k: &FamMono) -> ModPoly {
        let mut out = Self::zero(self.spec);
        for ((m, g), c) in &self.terms {
            if m.fam(fam) == k {
                let mut rest = *m;
                rest.fams[fam as usize] = FamMono::one();
                out.add_term(rest, *g, c.clone());
            }
        }
        out
    }

    pub fn parity(&self, gens: &[GenSym]) -> Option<bool> {
        let mut p = None;
        for (m, g) in self.terms.keys() {
            let tp = m.parity() ^ gens[*g as usize].parity;
            match p {
                None => p = Some(tp),
                Some(q) if q == tp => {}
                _ => return None,
            }
        }
        p
    }

    pub fn display<'a>(&'a self, gens: &'a [GenSym]) -> ModPolyDisplay<'a> {
        ModPolyDisplay { v: self, gens }
    }
}

pub struct ModPolyDisplay<'a> {
    v: &'a ModPoly,
    gens: &'a [GenSym],
}

impl fmt::Display for ModPolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.v.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((m, g), c) in &self.v.terms {
            let neg = c.is_negative();
            let abs = if neg { -c.clone() } else { c.clone() };
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if !abs.is_one() {
                write!(f, "{} ", q_display(&abs))?;
            }
            for (fam, i) in m.factors(self.v.spec) {
                write!(f, "{}{} ", fam.letter(), i)?;
            }
            write!(f, "{}", self.gens[*g as usize].name)?;
        }
        Ok(())
    }
}

/// Presentation mode of the algebra module.
#[derive(Clone, Debug)]
pub enum Mode {
    Free,
    /// Submodule of a free ambient presentation; `embed[g]` is the image of
    /// generator `g` as a del-only element over the ambient generators.
    Ambient {
        ambient: Box<Presentation>,
        embed: Vec<ModPoly>,
    },
    /// Quotient by the listed del-only relations, oriented by leading term.
    Rewrite {
        relations: Vec<ModPoly>,
    },
}

/// A Lie conformal superalgebra given by generators and a bracket table.
#[derive(Clone, Debug)]
pub struct Presentation {
    pub name: String,
    pub spec: VarSpec,
    pub gens: Vec<GenSym>,
    pub table: BTreeMap<(GenId, GenId), ModPoly>,
    pub mode: Mode,
}

/// Outcome of the axiom suite on a presentation.
#[derive(Clone, Debug, Default)]
pub struct AlgebraReport {
    pub skew_failures: Vec<String>,
    pub jacobi_failures: Vec<String>,
    pub grading_failures: Vec<String>,
    pub mode_failures: Vec<String>,
}

impl AlgebraReport {
    pub fn passed(&self) -> bool {
        self.skew_failures.is_empty()
            && self.jacobi_failures.is_empty()
            && self.grading_failures.is_empty()
            && self.mode_failures.is_empty()
    }

    pub fn witnesses(&self) -> Vec<String> {
        let mut w = self.skew_failures.clone();
        w.extend(self.jacobi_failures.clone());
        w.extend(self.grading_failures.clone());
        w.extend(self.mode_failures.clone());
        w
    }
}

impl Presentation {
    pub fn gen_id(&self, name: &str) -> Result<GenId, CoreError> {
        self.gens
            .iter()
            .position(|g| g.name == name)
            .map(|i| i as GenId)
            .ok_or_else(|| CoreError::UnknownGenerator(name.to_string()))
    }

    pub fn element(&self, name: &str) -> Result<ModPoly, CoreError> {
        Ok(ModPoly::gen(self.spec, self.gen_id(name)?))
    }

    fn table_entry(&self, a: GenId, b: GenId) -> &ModPoly {
        self.table
            .get(&(a, b))
            .unwrap_or_else(|| panic!("bracket table missing entry ({a},{b})"))
    }

    /// Bracket table entry with the lambda family relabelled to `outer`.
    fn table_as(&self, a: GenId, b: GenId, outer: Family) -> ModPoly {
        let t = self.table_entry(a, b);
        match outer {
            Family::Lambda => t.clone(),
            Family::Mu => t.lambda_to_mu(),
            Family::Del => panic!("del is not a bracket family"),
        }
    }

    /// Map del-coefficients of the first bracket slot to `-outer` variables,
    /// preserving factor order (a parity-preserving algebra map).
    fn del_to_minus(&self, m: &FamMono, outer: Family) -> (i8, Monomial) {
        let sign = if m.len().is_multiple_of(2) { 1 } else { -1 };
        (sign, Monomial::from_fam(outer, *m))
    }

    /// `[x_outer w]` where `x` is del-only and `w` may carry coefficients in
    /// the other (passive) bracket family plus del factors.
    pub fn ext_bracket(&self, x: &ModPoly, w: &ModPoly, outer: Family) -> ModPoly {
        let spec = self.spec;
        let mut out = ModPoly::zero(spec);
        for ((xm, g), xc) in &x.terms {
            debug_assert!(xm.fam(Family::Lambda).is_one() && xm.fam(Family::Mu).is_one());
            // Passive coefficients commute past the front polynomial, so the
            // crossing sign below uses the bare generator parity.
            let g_parity = self.gens[*g as usize].parity;
            let (dsign, front) = self.del_to_minus(xm.fam(Family::Del), outer);
            for ((wm, h), wc) in &w.terms {
                // passive coefficient (lambda and mu parts of w)
                let mut passive = *wm;
                let del_part = *passive.fam(Family::Del);
                passive.fams[Family::Del as usize] = FamMono::one();
                let mut coeff = xc * wc;
                if dsign < 0 {
                    coeff = -coeff;
                }
                if g_parity && passive.parity() {
                    coeff = -coeff;
                }
                // sigma twist: del factors crossed the generator h
                if del_part.parity() && self.gens[*h as usize].parity {
                    coeff = -coeff;
                }
                let mut val = self.table_as(*g, *h, outer);
                // right-multiply by (del_i + outer_i) for each del factor
                for i in del_part.factors(spec) {
                    let a = val.rmul_var(Family::Del, i, &self.gens);
                    let b = val.rmul_var(outer, i, &self.gens);
                    val = a.add(&b);
                }
                // left coefficients: front (from x's del part), then passive
                let val = val.lmul_mono(&passive, &Q::one());
                let val = val.lmul_mono(&front, &coeff);
                out = out.add(&val);
            }
        }
        out
    }

    /// Bilinear lambda-bracket of two del-only elements.
    pub fn bracket(&self, x: &ModPoly, y: &ModPoly) -> ModPoly {
        self.ext_bracket(x, y, Family::Lambda)
    }

    /// `[v_(lambda+mu) y]` for a lambda-value `v` and a del-only element `y`.
    pub fn bracket_shift(&self, v: &ModPoly, y: &ModPoly) -> ModPoly {
        let spec = self.spec;
        let shift = |fam: Family, i: u8| -> Option<SuperPoly> {
            if fam == Family::Lambda {
                Some(SuperPoly::var(spec, Family::Lambda, i).add(&SuperPoly::var(
                    spec,
                    Family::Mu,
                    i,
                )))
            } else {
                None
            }
        };
        let mut out = ModPoly::zero(spec);
        for ((vm, g), vc) in &v.terms {
            debug_assert!(vm.fam(Family::Mu).is_one());
            let lam_front = Monomial::from_fam(Family::Lambda, *vm.fam(Family::Lambda));
            // del factors of the first slot become -(lambda+mu) in place
            let mut frontpoly = SuperPoly::constant(spec, vc.clone());
            frontpoly.terms = {
                let mut t = BTreeMap::new();
                t.insert(lam_front, vc.clone());
                t
            };
            for i in vm.fam(Family::Del).factors(spec) {
                let neg = SuperPoly::var(spec, Family::Lambda, i)
                    .add(&SuperPoly::var(spec, Family::Mu, i))
                    .neg();
                frontpoly = frontpoly.mul(&neg);
            }
            for ((ym, h), yc) in &y.terms {
                debug_assert!(ym.fam(Family::Lambda).is_one() && ym.fam(Family::Mu).is_one());
                let del_part = *ym.fam(Family::Del);
                let mut coeff = yc.clone();
                if del_part.parity() && self.gens[*h as usize].parity {
                    coeff = -coeff;
                }
                let mut val = self.table_entry(*g, *h).subst(shift);
                for i in del_part.factors(spec) {
                    let a = val.rmul_var(Family::Del, i, &self.gens);
                    let b = val.rmul_var(Family::Lambda, i, &self.gens);
                    let c = val.rmul_var(Family::Mu, i, &self.gens);
                    val = a.add(&b).add(&c);
                }
                out = out.add(&val.lmul_poly(&frontpoly).scale(&coeff));
            }
        }
        out
    }

    /// K-product `(a_K b)`: `f(K)` times the coefficient of the canonical
    /// lambda-monomial of `K` in the bracket.
    pub fn k_product(&self, a: &ModPoly, b: &ModPoly, k: &IndexSeq) -> Result<ModPoly, CoreError> {
        if !k.is_canonical(self.spec) {
            return Err(CoreError::NotCanonical(format!("{:?}", k.0)));
        }
        let v = self.bracket(a, b);
        let mono = k.to_mono(self.spec);
        let f = mono.multiplicity_factorial();
        Ok(v.coeff_of(Family::Lambda, &mono).scale(&Q::from_integer(f)))
    }

    /// Substitute lambda -> -lambda - del throughout a lambda-value.
    pub fn subst_skew(&self, v: &ModPoly) -> ModPoly {
        let spec = self.spec;
        v.subst(|fam, i| {
            (fam == Family::Lambda).then(|| {
                SuperPoly::var(spec, Family::Lambda, i)
                    .add(&SuperPoly::var(spec, Family::Del, i))
                    .neg()
            })
        })
    }

    /// `[b_l a] + (-1)^{p(a)p(b)} [a_{-l-d} b]`; zero iff skew-symmetry holds.
    pub fn residual_skew(&self, a: &ModPoly, b: &ModPoly) -> Result<ModPoly, CoreError> {
        let pa = a.parity(&self.gens).ok_or(CoreError::NotHomogeneous)?;
        let pb = b.parity(&self.gens).ok_or(CoreError::NotHomogeneous)?;
        let lhs = self.bracket(b, a);
        let mut rhs = self.subst_skew(&self.bracket(a, b));
        if pa && pb {
            rhs = rhs.neg();
        }
        Ok(lhs.add(&rhs))
    }

    /// Jacobi residual `[a_l [b_m c]] - [[a_l b]_{l+m} c] - ±[b_m [a_l c]]`.
    pub fn residual_jacobi(
        &self,
        a: &ModPoly,
        b: &ModPoly,
        c: &ModPoly,
    ) -> Result<ModPoly, CoreError> {
        let pa = a.parity(&self.gens).ok_or(CoreError::NotHomogeneous)?;
        let pb = b.parity(&self.gens).ok_or(CoreError::NotHomogeneous)?;
        let inner_bc = self.bracket(b, c).lambda_to_mu();
        let lhs = self.ext_bracket(a, &inner_bc, Family::Lambda);
        let t2 = self.bracket_shift(&self.bracket(a, b), c);
        let inner_ac = self.bracket(a, c);
        let mut t3 = self.ext_bracket(b, &inner_ac, Family::Mu);
        if pa && pb {
            t3 = t3.neg();
        }
        Ok(lhs.sub(&t2).sub(&t3))
    }

    /// Degree report: messages for every bracket term violating
    /// `deg [a_l b] = deg a + deg b`.
    pub fn residual_grading(&self, a: GenId, b: GenId) -> Vec<String> {
        let expected = self.gens[a as usize].degree + self.gens[b as usize].degree;
        let mut bad = Vec::new();
        for (m, g) in self.table_entry(a, b).terms.keys() {
            let d = m.degree() + self.gens[*g as usize].degree;
            if d != expected {
                bad.push(format!(
                    "[{} _ {}]: term of degree {} expected {}",
                    self.gens[a as usize].name, self.gens[b as usize].name, d, expected
                ));
            }
        }
        bad
    }

    /// Expand an element through the ambient embedding.
    pub fn embed(&self, v: &ModPoly) -> ModPoly {
        match &self.mode {
            Mode::Ambient { embed, .. } => {
                let mut out = ModPoly::zero(self.spec);
                for ((m, g), c) in &v.terms {
                    out = out.add(&embed[*g as usize].lmul_mono(m, c));
                }
                out
            }
            _ => v.clone(),
        }
    }

    /// Reduce to the rewrite normal form (identity in other modes).
    pub fn rewrite_reduce(&self, v: &ModPoly) -> ModPoly {
        let rules = match &self.mode {
            Mode::Rewrite { relations } => orient_rules(relations),
            _ => return v.clone(),
        };
        let mut cur = v.clone();
        for _round in 0..10_000 {
            let mut hit = None;
            'scan: for ((m, g), c) in &cur.terms {
                for (lead, rest) in &rules {
                    let (lm, lg) = &lead;
                    if g == lg {
                        if let Some((sign, quot)) = m.fam(Family::Del).div(lm) {
                            hit = Some((*m, *g, c.clone(), sign, quot, rest.clone()));
                            break 'scan;
                        }
                    }
                }
            }
            match hit {
                None => return cur,
                Some((m, g, c, sign, quot, rest)) => {
                    cur.add_term(m, g, -c.clone());
                    let mut qm = m;
                    qm.fams[Family::Del as usize] = quot;
                    let mut coef = c;
                    if sign < 0 {
                        coef = -coef;
                    }
                    cur = cur.add(&rest.lmul_mono(&qm, &coef));
                }
            }
        }
        panic!("rewrite system did not terminate");
    }

    /// Zero test in the presentation's own equality.
    pub fn is_zero_mod(&self, v: &ModPoly) -> bool {
        match &self.mode {
            Mode::Free => v.is_zero(),
            Mode::Ambient { .. } => self.embed(v).is_zero(),
            Mode::Rewrite { .. } => self.rewrite_reduce(v).is_zero(),
        }
    }

    /// Kernel of the presentation map in a fixed homogeneous degree: a basis
    /// of the del-only combinations of generators that vanish in the algebra.
    pub fn relation_kernel(&self, degree: i64) -> Vec<ModPoly> {
        match &self.mode {
            Mode::Free => Vec::new(),
            Mode::Rewrite { relations } => {
                // All monomial multiples of the relations in this degree.
                let mut out = Vec::new();
                for rel in relations {
                    let rdeg = rel
                        .terms
                        .iter()
                        .map(|((m, g), _)| m.degree() + self.gens[*g as usize].degree)
                        .next()
                        .unwrap_or(0);
                    let extra = degree - rdeg;
                    if extra > 0 || extra % 2 != 0 {
                        continue;
                    }
                    let len = (-extra / 2) as u32;
                    for m in crate::superpoly::enumerate_monos(self.spec, len) {
                        let mono = Monomial::from_fam(Family::Del, m);
                        let v = rel.lmul_mono(&mono, &Q::one());
                        if !v.is_zero() {
                            out.push(v);
                        }
                    }
                }
                out
            }
            Mode::Ambient { .. } => {
                // Exact kernel of the embedding by row reduction over the
                // del-monomial columns of this degree.
                let mut cols: Vec<(Monomial, GenId)> = Vec::new();
                for (gi, g) in self.gens.iter().enumerate() {
                    let extra = degree - g.degree;
                    if extra > 0 || extra % 2 != 0 {
                        continue;
                    }
                    let len = (-extra / 2) as u32;
                    for m in crate::superpoly::enumerate_monos(self.spec, len) {
                        cols.push((Monomial::from_fam(Family::Del, m), gi as GenId));
                    }
                }
                let images: Vec<ModPoly> = cols
                    .iter()
                    .map(|(m, g)| self.embed(&ModPoly::gen(self.spec, *g).lmul_mono(m, &Q::one())))
                    .collect();
                kernel_vectors(&images)
                    .into_iter()
                    .map(|coeffs| {
                        let mut v = ModPoly::zero(self.spec);
                        for (j, c) in coeffs.into_iter().enumerate() {
                            if !c.is_zero() {
                                v.add_term(cols[j].0, cols[j].1, c);
                            }
                        }
                        v
                    })
                    .collect()
            }
        }
    }

    /// Full axiom suite: skew and Jacobi residuals on all generator
    /// pairs/triples, grading consistency, and the mode invariants.
    pub fn check(&self) -> AlgebraReport {
        use rayon::prelude::*;
        let n = self.gens.len() as GenId;
        let mut report = AlgebraReport::default();
        let pairs: Vec<(GenId, GenId)> = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
        let mut skew: Vec<String> = pairs
            .par_iter()
            .filter_map(|&(a, b)| {
                let ea = ModPoly::gen(self.spec, a);
                let eb = ModPoly::gen(self.spec, b);
                let res = self.residual_skew(&ea, &eb).ok()?;
                if self.is_zero_mod(&res) {
                    None
                } else {
                    Some(format!(
                        "skew({},{}) residual {}",
                        self.gens[a as usize].name,
                        self.gens[b as usize].name,
                        res.display(&self.gens)
                    ))
                }
            })
            .collect();
        report.skew_failures.append(&mut skew);
        for (a, b) in &pairs {
            report
                .grading_failures
                .extend(self.residual_grading(*a, *b));
        }
        let triples: Vec<(GenId, GenId, GenId)> = (0..n)
            .flat_map(|a| (0..n).flat_map(move |b| (0..n).map(move |c| (a, b, c))))
            .collect();
        let mut jac: Vec<String> = triples
            .par_iter()
            .filter_map(|&(a, b, c)| {
                let ea = ModPoly::gen(self.spec, a);
                let eb = ModPoly::gen(self.spec, b);
                let ec = ModPoly::gen(self.spec, c);
                let res = self.residual_jacobi(&ea, &eb, &ec).ok()?;
                if self.is_zero_mod(&res) {
                    None
                } else {
                    Some(format!(
                        "jacobi({},{},{})",
                        self.gens[a as usize].name,
                        self.gens[b as usize].name,
                        self.gens[c as usize].name
                    ))
                }
            })
            .collect();
        report.jacobi_failures.append(&mut jac);
        report.mode_failures = self.check_mode_invariants();
        report
    }

    /// Ambient-mode: the quotient table and the ambient bracket agree after
    /// embedding. Rewrite-mode: random elements reduce confluently.
    fn check_mode_invariants(&self) -> Vec<String> {
        let mut bad = Vec::new();
        match &self.mode {
            Mode::Free => {}
            Mode::Ambient { ambient, embed } => {
                for a in 0..self.gens.len() as GenId {
                    for b in 0..self.gens.len() as GenId {
                        let via_table = self.embed(self.table_entry(a, b));
                        let via_ambient = ambient.bracket(&embed[a as usize], &embed[b as usize]);
                        if !via_table.sub(&via_ambient).is_zero() {
                            bad.push(format!(
                                "ambient([{} _ {}]) table/expansion mismatch",
                                self.gens[a as usize].name, self.gens[b as usize].name
                            ));
                        }
                    }
                }
            }
            Mode::Rewrite { relations } => {
                for rel in relations {
                    if !self.rewrite_reduce(rel).is_zero() {
                        bad.push("relation does not reduce to zero".into());
                    }
                }
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
                for _ in 0..50 {
                    let v = self.random_element(&mut rng);
                    let r1 = self.rewrite_reduce(&v);
                    let flipped = self.rewrite_reduce_reversed(&v);
                    if r1 != flipped {
                        bad.push("rewrite normal forms differ between rule orders".into());
                    }
                }
            }
        }
        bad
    }

    fn random_element(&self, rng: &mut impl Rng) -> ModPoly {
        let mut v = ModPoly::zero(self.spec);
        for _ in 0..4 {
            let g = rng.random_range(0..self.gens.len()) as GenId;
            let mut m = FamMono::one();
            for _ in 0..rng.random_range(0..3) {
                let i = rng.random_range(1..=self.spec.nvars());
                if self.spec.is_odd(i) {
                    m.odd |= 1 << (i - self.spec.r - 1);
                } else {
                    m.even[(i - 1) as usize] += 1;
                }
            }
            v.add_term(
                Monomial::from_fam(Family::Del, m),
                g,
                qi(rng.random_range(-5..=5)),
            );
        }
        v
    }

    /// Same normal form computed by scanning terms and rules in the reverse
    /// order; used by the randomized confluence check.
    fn rewrite_reduce_reversed(&self, v: &ModPoly) -> ModPoly {
        let rules = match &self.mode {
            Mode::Rewrite { relations } => {
                let mut r = orient_rules(relations);
                r.reverse();
                r
            }
            _ => return v.clone(),
        };
        let mut cur = v.clone();
        for _round in 0..10_000 {
            let mut hit = None;
            'scan: for ((m, g), c) in cur.terms.iter().rev() {
                for (lead, rest) in &rules {
                    let (lm, lg) = &lead;
                    if g == lg {
                        if let Some((sign, quot)) = m.fam(Family::Del).div(lm) {
                            hit = Some((*m, *g, c.clone(), sign, quot, rest.clone()));
                            break 'scan;
                        }
                    }
                }
            }
            match hit {
                None => return cur,
                Some((m, g, c, sign, quot, rest)) => {
                    cur.add_term(m, g, -c.clone());
                    let mut qm = m;
                    qm.fams[Family::Del as usize] = quot;
                    let mut coef = c;
                    if sign < 0 {
                        coef = -coef;
                    }
                    cur = cur.add(&rest.lmul_mono(&qm, &coef));
                }
            }
        }
        panic!("rewrite system did not terminate");
    }

    /// Complete a partial table by conformal skew-symmetry.
    pub fn complete_table_by_skew(&mut self) {
        let n = self.gens.len() as GenId;
        for a in 0..n {
            for b in 0..n {
                if self.table.contains_key(&(a, b)) {
                    continue;
                }
                let ba = self
                    .table
                    .get(&(b, a))
                    .unwrap_or_else(|| panic!("neither ({a},{b}) nor ({b},{a}) in table"))
                    .clone();
                let mut v = self.subst_skew(&ba).neg();
                if self.gens[a as usize].parity && self.gens[b as usize].parity {
                    v = v.neg();
                }
                self.table.insert((a, b), v);
            }
        }
    }
}

fn orient_rules(relations: &[ModPoly]) -> Vec<((FamMono, GenId), ModPoly)> {
    relations
        .iter()
        .map(|rel| {
            // Leading term: maximal (generator, del-monomial) pair.
            let ((m, g), c) = rel
                .terms
                .iter()
                .max_by_key(|((m, g), _)| (*g, *m.fam(Family::Del)))
                .expect("empty relation");
            let mut rest = rel.clone();
            rest.add_term(*m, *g, -c.clone());
            let rest = rest.scale(&(-Q::one() / c.clone()));
            ((*m.fam(Family::Del), *g), rest)
        })
        .collect()
}

/// Basis of the kernel of the linear map `j -> images[j]` (exact rationals).
pub fn kernel_vectors(images: &[ModPoly]) -> Vec<Vec<Q>> {
    let ncols = images.len();
    // Collect the row space: each image vector is a linear constraint set.
    let mut keys: Vec<(Monomial, GenId)> = Vec::new();
    for v in images {
        for k in v.terms.keys() {
            if !keys.contains(k) {
                keys.push(*k);
            }
        }
    }
    keys.sort();
    // Matrix rows indexed by keys, columns by images.
    let mut rows: Vec<Vec<Q>> = keys
        .iter()
        .map(|k| {
            images
                .iter()
                .map(|v| v.terms.get(k).cloned().unwrap_or_else(Q::zero))
                .collect()
        })
        .collect();
    // Gaussian elimination to find pivots.
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0usize;
    for col in 0..ncols {
        let mut pr = None;
        for (ri, row) in rows.iter().enumerate().skip(rank) {
            if !row[col].is_zero() {
                pr = Some(ri);
                break;
            }
        }
        let Some(pr) = pr else { continue };
        rows.swap(rank, pr);
        let inv = Q::one() / rows[rank][col].clone();
        for x in rows[rank].iter_mut() {
            *x = x.clone() * inv.clone();
        }
        let pivot_row = rows[rank].clone();
        for (ri, row) in rows.iter_mut().enumerate() {
            if ri != rank && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *x = x.clone() - f.clone() * p.clone();
                }
            }
        }
        pivots.push(col);
        rank += 1;
    }
    // Free columns give kernel basis vectors.
    let mut out = Vec::new();
    for free in 0..ncols {
        if pivots.contains(&free) {
            continue;
        }
        let mut vec = vec![Q::zero(); ncols];
        vec[free] = Q::one();
        for (pi, &pc) in pivots.iter().enumerate() {
            vec[pc] = -rows[pi][free].clone();
        }
        out.push(vec);
    }
    out
}
