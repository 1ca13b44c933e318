//! Conformal modules: axiom checks, generalized Verma modules through a PBW
//! engine over the negative part of the annihilation algebra, conformal
//! duals, shift characters, and the verification that the dual of a Verma
//! module is the Verma module of the shifted dual.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::annihilation::{supertrace_ad, AnnElem, AnnSpace};
use crate::conformal::{GenId, GenSym, ModPoly};
use crate::error::CoreError;
use crate::superpoly::{FamMono, Family, Monomial, SuperPoly, Q};

fn qb(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// A finite-dimensional module over the degree-0 component, given by
/// matrices for a spanning set of degree-0 annihilation classes.
/// `mats[s][h][k]` is the coefficient of `v_h` in `span[s] . v_k`.
#[derive(Clone, Debug)]
pub struct G0Module {
    pub basis: Vec<(String, bool)>,
    pub span: Vec<AnnElem>,
    pub mats: Vec<Vec<Vec<Q>>>,
}

impl G0Module {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// The trivial one-dimensional module on the full degree-0 basis.
    pub fn trivial(space: &AnnSpace) -> Self {
        let b0 = space.graded_basis(0);
        G0Module {
            basis: vec![("v1".into(), false)],
            span: (0..b0.dim).map(|i| b0.rep(i)).collect(),
            mats: vec![vec![vec![Q::zero()]]; b0.dim],
        }
    }

    /// One-dimensional module with prescribed weights on the degree-0 basis.
    pub fn character(space: &AnnSpace, weights: &[Q]) -> Self {
        let b0 = space.graded_basis(0);
        assert_eq!(weights.len(), b0.dim);
        G0Module {
            basis: vec![("v1".into(), false)],
            span: (0..b0.dim).map(|i| b0.rep(i)).collect(),
            mats: weights.iter().map(|w| vec![vec![w.clone()]]).collect(),
        }
    }

    /// Validate parity structure, that the span really spans the degree-0
    /// component, and commutator consistency against the algebra bracket.
    pub fn validate(&self, space: &AnnSpace) -> Result<(), CoreError> {
        let b0 = space.graded_basis(0);
        let l = self.dim();
        if self.span.len() != self.mats.len() {
            return Err(CoreError::InconsistentModule(
                "span/matrix count mismatch".into(),
            ));
        }
        for (s, m) in self.mats.iter().enumerate() {
            if m.len() != l || m.iter().any(|r| r.len() != l) {
                return Err(CoreError::InconsistentModule(format!(
                    "matrix {s} has wrong shape"
                )));
            }
            let xp = space.parity(&self.span[s]).ok_or_else(|| {
                CoreError::InconsistentModule("span element not homogeneous".into())
            })?;
            for h in 0..l {
                for k in 0..l {
                    if !m[h][k].is_zero() && (self.basis[h].1 ^ self.basis[k].1) != xp {
                        return Err(CoreError::InconsistentModule(format!(
                            "matrix {s} violates parity at ({h},{k})"
                        )));
                    }
                }
            }
        }
        let solver = SpanSolver::new(space, &self.span)?;
        if solver.rank() != b0.dim {
            return Err(CoreError::InconsistentModule(
                "spanning set does not span the degree-0 component".into(),
            ));
        }
        // commutator consistency: matrix([x,y]) = [matrix(x), matrix(y)]
        for s in 0..self.span.len() {
            for t in 0..self.span.len() {
                let br = space.bracket(&self.span[s], &self.span[t]);
                let mbr = self.matrix_of(space, &solver, &br)?;
                let ps = space.parity(&self.span[s]).unwrap();
                let pt = space.parity(&self.span[t]).unwrap();
                let comm = mat_super_comm(&self.mats[s], &self.mats[t], ps && pt);
                if mbr != comm {
                    return Err(CoreError::InconsistentModule(format!(
                        "commutator consistency fails on span pair ({s},{t})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Matrix of an arbitrary degree-0 class through the spanning set.
    pub fn matrix_of(
        &self,
        space: &AnnSpace,
        solver: &SpanSolver,
        w: &AnnElem,
    ) -> Result<Vec<Vec<Q>>, CoreError> {
        let l = self.dim();
        let coeffs = solver.solve(space, w)?;
        let mut out = vec![vec![Q::zero(); l]; l];
        for (s, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for h in 0..l {
                for k in 0..l {
                    out[h][k] += c * &self.mats[s][h][k];
                }
            }
        }
        Ok(out)
    }
}

fn mat_super_comm(a: &[Vec<Q>], b: &[Vec<Q>], both_odd: bool) -> Vec<Vec<Q>> {
    let l = a.len();
    let mut out = vec![vec![Q::zero(); l]; l];
    for h in 0..l {
        for k in 0..l {
            let mut x = Q::zero();
            for m in 0..l {
                x += &a[h][m] * &b[m][k];
                let y = &b[h][m] * &a[m][k];
                if both_odd {
                    x += y;
                } else {
                    x -= y;
                }
            }
            out[h][k] = x;
        }
    }
    out
}

/// Solver expressing degree-0 classes as combinations of a spanning set.
pub struct SpanSolver {
    coords: Vec<Vec<Q>>,
    dim0: usize,
}

impl SpanSolver {
    pub fn new(space: &AnnSpace, span: &[AnnElem]) -> Result<Self, CoreError> {
        let b0 = space.graded_basis(0);
        let coords: Vec<Vec<Q>> = span
            .iter()
            .map(|u| space.coords(u, 0))
            .collect::<Result<_, _>>()?;
        Ok(SpanSolver {
            coords,
            dim0: b0.dim,
        })
    }

    pub fn rank(&self) -> usize {
        let rows: Vec<(Vec<Q>, Q)> = (0..self.dim0)
            .map(|t| {
                (
                    self.coords.iter().map(|c| c[t].clone()).collect(),
                    Q::zero(),
                )
            })
            .collect();
        // Row reduce the transpose to count independent span vectors.
        let mut mat: Vec<Vec<Q>> = rows.into_iter().map(|(r, _)| r).collect();
        let n = self.coords.len();
        let mut rank = 0usize;
        for col in 0..n {
            let Some(pr) = (rank..mat.len()).find(|&r| !mat[r][col].is_zero()) else {
                continue;
            };
            mat.swap(rank, pr);
            let inv = Q::one() / mat[rank][col].clone();
            for x in mat[rank].iter_mut() {
                *x = x.clone() * inv.clone();
            }
            let piv = mat[rank].clone();
            for (r, row) in mat.iter_mut().enumerate() {
                if r != rank && !row[col].is_zero() {
                    let f = row[col].clone();
                    for (x, p) in row.iter_mut().zip(piv.iter()) {
                        *x = x.clone() - f.clone() * p.clone();
                    }
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn solve(&self, space: &AnnSpace, w: &AnnElem) -> Result<Vec<Q>, CoreError> {
        let target = space.coords(w, 0)?;
        let rows: Vec<(Vec<Q>, Q)> = (0..self.dim0)
            .map(|t| {
                (
                    self.coords.iter().map(|c| c[t].clone()).collect(),
                    target[t].clone(),
                )
            })
            .collect();
        // An overcomplete span is fine: drop the uniqueness requirement by
        // extending with zero rows is unnecessary; use least-structure solve.
        solve_any(&rows, self.coords.len())
            .ok_or_else(|| CoreError::SolveFailed("element outside the span".into()))
    }
}

/// Any solution of a consistent linear system.
fn solve_any(rows: &[(Vec<Q>, Q)], n: usize) -> Option<Vec<Q>> {
    let mut mat: Vec<(Vec<Q>, Q)> = rows.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0usize;
    for col in 0..n {
        let Some(pr) = (rank..mat.len()).find(|&r| !mat[r].0[col].is_zero()) else {
            continue;
        };
        mat.swap(rank, pr);
        let inv = Q::one() / mat[rank].0[col].clone();
        for x in mat[rank].0.iter_mut() {
            *x = x.clone() * inv.clone();
        }
        mat[rank].1 = mat[rank].1.clone() * inv;
        let (pr_, prhs) = (mat[rank].0.clone(), mat[rank].1.clone());
        for (r, row) in mat.iter_mut().enumerate() {
            if r != rank && !row.0[col].is_zero() {
                let f = row.0[col].clone();
                for (x, p) in row.0.iter_mut().zip(pr_.iter()) {
                    *x = x.clone() - f.clone() * p.clone();
                }
                row.1 = row.1.clone() - f * prhs.clone();
            }
        }
        pivots.push(col);
        rank += 1;
    }
    for row in mat.iter().skip(rank) {
        if !row.1.is_zero() {
            return None;
        }
    }
    let mut out = vec![Q::zero(); n];
    for (r, &c) in pivots.iter().enumerate() {
        out[c] = mat[r].1.clone();
    }
    Some(out)
}

/// Letters of the enveloping algebra of the negative part.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NegLetter {
    /// y-derivation index (1-based)
    Dy(u8),
    /// index into the odd negative basis
    D(usize),
}

/// Internal Verma vector in the y-derivation convention:
/// (dy-monomial, subset of the odd negative basis, F-basis index).
pub type VVec = BTreeMap<(FamMono, u16, u8), Q>;

/// PBW structure data of the negative part.
pub struct NegPart {
    pub space: Arc<AnnSpace>,
    /// Ordered basis of the odd negative components (degree -1 before -3).
    pub d_basis: Vec<AnnElem>,
    pub d_deg: Vec<i64>,
    pub n: usize,
    pub perm: Option<Vec<usize>>,
    /// `omega[i][j]`: [d_i, d_j] as y-derivation coefficients (degree -2).
    omega: Vec<Vec<Vec<Q>>>,
    /// `tau[i][j]`: [d_i, dy_{j+1}] expanded over the d-basis (degree -3).
    tau: Vec<Vec<Vec<Q>>>,
}

impl NegPart {
    pub fn new(space: Arc<AnnSpace>) -> Result<Self, CoreError> {
        Self::with_order(space, None)
    }

    /// Optionally permute the within-degree order of the odd basis; the
    /// duality verification must be covariant under this.
    pub fn with_order(space: Arc<AnnSpace>, perm: Option<&[usize]>) -> Result<Self, CoreError> {
        let b1 = space.graded_basis(-1);
        let b3 = space.graded_basis(-3);
        let mut d_basis: Vec<AnnElem> = (0..b1.dim).map(|i| b1.rep(i)).collect();
        let mut d_deg: Vec<i64> = vec![-1; b1.dim];
        d_basis.extend((0..b3.dim).map(|i| b3.rep(i)));
        d_deg.extend(vec![-3i64; b3.dim]);
        if let Some(p) = perm {
            assert_eq!(p.len(), d_basis.len());
            d_basis = p.iter().map(|&i| d_basis[i].clone()).collect();
            d_deg = p.iter().map(|&i| d_deg[i]).collect();
        }
        let n = d_basis.len();
        if n > 16 {
            return Err(CoreError::Invalid(
                "odd negative part larger than 16".into(),
            ));
        }
        let nv = space.spec().nvars() as usize;
        let mut omega = vec![vec![vec![Q::zero(); nv]; n]; n];
        let mut tau = vec![vec![vec![Q::zero(); n]; nv]; n];
        for i in 0..n {
            for j in 0..n {
                let br = space.bracket(&d_basis[i], &d_basis[j]);
                match d_deg[i] + d_deg[j] {
                    -2 => omega[i][j] = space.as_derivation(&br)?,
                    _ => {
                        if !space.is_zero_class(&br) {
                            return Err(CoreError::AssumptionFailed(
                                "negative part bracket escapes the expected window".into(),
                            ));
                        }
                    }
                }
            }
            // [d_i, dy_j] = -(-1)^{p(d_i) p_j} dy_j(d_i), expanded in the
            // odd basis when the degree is -3.
            for j in 1..=space.spec().nvars() {
                let der = space.y_derive(&d_basis[i], j);
                let mut val = der.neg();
                if space.spec().is_odd(j) {
                    // p(d_i) = 1 always (odd basis)
                    val = val.neg();
                }
                if d_deg[i] == -1 {
                    let coords = coords_in_elems(&space, &val, &d_basis, -3)?;
                    tau[i][(j - 1) as usize] = coords;
                } else if !space.is_zero_class(&val) {
                    return Err(CoreError::AssumptionFailed(
                        "derivation of a depth-3 element does not vanish".into(),
                    ));
                }
            }
        }
        Ok(NegPart {
            space,
            d_basis,
            d_deg,
            n,
            omega,
            tau,
            perm: perm.map(|p| p.to_vec()),
        })
    }

    /// Multiply a negative letter onto a normal-form vector from the left.
    pub fn mul_letter(&self, letter: NegLetter, v: &VVec) -> VVec {
        let mut out = VVec::new();
        for ((m, mask, h), c) in v {
            match letter {
                NegLetter::Dy(j) => {
                    let jm = FamMono::var(self.space.spec(), j);
                    if let Some((s, prod)) = jm.mul(m) {
                        add_vterm(&mut out, prod, *mask, *h, c * qb(s as i64));
                    }
                }
                NegLetter::D(i) => {
                    self.dmul(i, *m, *mask, *h, c.clone(), &mut out);
                }
            }
        }
        out
    }

    /// d_i times a single normal-form term: peel the dy-monomial, then
    /// insert into the ordered odd product.
    fn dmul(&self, i: usize, m: FamMono, mask: u16, h: u8, c: Q, out: &mut VVec) {
        let spec = self.space.spec();
        let factors = m.factors(spec);
        if factors.is_empty() {
            self.dsert(i, mask, h, c, out);
            return;
        }
        let j = factors[0];
        let (_, rest) = m.derive_left(spec, j).expect("leading factor is divisible");
        // d_i dy_j X = (-1)^{p_j} dy_j (d_i X) + tau_{ij} X
        let mut inner = VVec::new();
        self.dmul(i, rest, mask, h, c.clone(), &mut inner);
        let sign = if spec.is_odd(j) { -1 } else { 1 };
        let jm = FamMono::var(spec, j);
        for ((m2, mk2, h2), c2) in inner {
            if let Some((s, prod)) = jm.mul(&m2) {
                add_vterm(out, prod, mk2, h2, c2 * qb(sign * s as i64));
            }
        }
        if self.d_deg[i] == -1 {
            for (t, coef) in self.tau[i][(j - 1) as usize].iter().enumerate() {
                if !coef.is_zero() {
                    let mut part = VVec::new();
                    self.dmul(t, rest, mask, h, &c * coef, &mut part);
                    for (k, v) in part {
                        add_vterm_key(out, k, v);
                    }
                }
            }
        }
    }

    /// Insert d_i into the ordered odd product d_mask.
    fn dsert(&self, i: usize, mask: u16, h: u8, c: Q, out: &mut VVec) {
        let bit = 1u16 << i;
        let lowest = mask.trailing_zeros() as usize;
        if mask == 0 || i < lowest {
            add_vterm(out, FamMono::one(), mask | bit, h, c);
            return;
        }
        let j1 = lowest;
        let rest = mask & !(1u16 << j1);
        if i == j1 {
            // d_i d_i = 1/2 [d_i, d_i]
            for (t, coef) in self.omega[i][i].iter().enumerate() {
                if !coef.is_zero() {
                    let m = FamMono::var(self.space.spec(), t as u8 + 1);
                    add_vterm(out, m, rest, h, &c * coef / qb(2));
                }
            }
            return;
        }
        // d_i d_{j1} = -d_{j1} d_i + [d_i, d_{j1}]
        let mut inner = VVec::new();
        self.dsert(i, rest, h, -c.clone(), &mut inner);
        let moved = self.mul_letter(NegLetter::D(j1), &inner);
        for (k, v) in moved {
            add_vterm_key(out, k, v);
        }
        for (t, coef) in self.omega[i][j1].iter().enumerate() {
            if !coef.is_zero() {
                let m = FamMono::var(self.space.spec(), t as u8 + 1);
                // the y-derivation coefficient multiplies the remaining d's
                let mut part = VVec::new();
                add_vterm(&mut part, FamMono::one(), rest, h, &c * coef);
                for ((m2, mk2, h2), c2) in part {
                    if let Some((s, prod)) = m.mul(&m2) {
                        add_vterm(out, prod, mk2, h2, c2 * qb(s as i64));
                    }
                }
            }
        }
    }

    /// Normal form of a word over the negative letters (applied to the
    /// vacuum of the enveloping algebra).
    pub fn pbw_normalize(&self, word: &[NegLetter], h: u8) -> VVec {
        let mut v = VVec::new();
        v.insert((FamMono::one(), 0u16, h), Q::one());
        for letter in word.iter().rev() {
            v = self.mul_letter(*letter, &v);
        }
        v
    }
}

fn add_vterm(out: &mut VVec, m: FamMono, mask: u16, h: u8, c: Q) {
    add_vterm_key(out, (m, mask, h), c);
}

fn add_vterm_key(out: &mut VVec, k: (FamMono, u16, u8), c: Q) {
    if c.is_zero() {
        return;
    }
    let e = out.entry(k).or_insert_with(Q::zero);
    *e += c;
    if e.is_zero() {
        out.remove(&k);
    }
}

/// Coordinates of a class over a list of homogeneous elements of one degree.
fn coords_in_elems(
    space: &AnnSpace,
    v: &AnnElem,
    elems: &[AnnElem],
    degree: i64,
) -> Result<Vec<Q>, CoreError> {
    let members: Vec<usize> = (0..elems.len())
        .filter(|&i| space.degree(&elems[i]) == Some(degree))
        .collect();
    if space.is_zero_class(v) {
        return Ok(vec![Q::zero(); elems.len()]);
    }
    let target = space.coords(v, degree)?;
    let cols: Vec<Vec<Q>> = members
        .iter()
        .map(|&i| space.coords(&elems[i], degree))
        .collect::<Result<_, _>>()?;
    let rows: Vec<(Vec<Q>, Q)> = (0..target.len())
        .map(|t| {
            (
                cols.iter().map(|c| c[t].clone()).collect(),
                target[t].clone(),
            )
        })
        .collect();
    let sol = solve_any(&rows, members.len())
        .ok_or_else(|| CoreError::SolveFailed("element outside the odd basis span".into()))?;
    let mut out = vec![Q::zero(); elems.len()];
    for (pos, &i) in members.iter().enumerate() {
        out[i] = sol[pos].clone();
    }
    Ok(out)
}

/// A conformal module: free basis over the del-algebra with the lambda
/// action of every algebra generator.
#[derive(Clone)]
pub struct ConformalModule {
    pub spec: crate::superpoly::VarSpec,
    pub algebra: String,
    /// module basis as generator symbols (name, parity; degree unused)
    pub basis: Vec<GenSym>,
    /// algebra generator symbols (parities drive the Koszul signs)
    pub agens: Vec<GenSym>,
    /// action[g][j] = lambda-action of generator g on basis vector j
    pub action: Vec<Vec<ModPoly>>,
}

impl ConformalModule {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn zero_vec(&self) -> ModPoly {
        ModPoly::zero(self.spec)
    }

    pub fn basis_vec(&self, j: usize) -> ModPoly {
        ModPoly::gen(self.spec, j as GenId)
    }

    /// Apply generator `g` with the bracket family `outer` to a module
    /// vector that may carry passive lambda/mu coefficients and del factors.
    pub fn apply_gen(&self, g: GenId, w: &ModPoly, outer: Family) -> ModPoly {
        let spec = self.spec;
        let pa = self.agens[g as usize].parity;
        let mut out = ModPoly::zero(spec);
        for ((wm, j), wc) in &w.terms {
            let mut passive = *wm;
            let del_part = *passive.fam(Family::Del);
            passive.fams[Family::Del as usize] = FamMono::one();
            let mut coeff = wc.clone();
            if pa && (passive.parity() ^ del_part.parity()) {
                coeff = -coeff;
            }
            let mut val = match outer {
                Family::Lambda => self.action[g as usize][*j as usize].clone(),
                Family::Mu => self.action[g as usize][*j as usize].lambda_to_mu(),
                Family::Del => unreachable!(),
            };
            // left-multiply (del_i + outer_i) factors in order
            let mut front = SuperPoly::one(spec);
            for i in del_part.factors(spec) {
                let f = SuperPoly::var(spec, Family::Del, i).add(&SuperPoly::var(spec, outer, i));
                front = front.mul(&f);
            }
            val = val.lmul_poly(&front);
            val = val.lmul_mono(&passive, &coeff);
            out = out.add(&val);
        }
        out
    }

    /// `(value)_{lambda+mu} v` for a lambda-value over the algebra
    /// generators applied to a basis vector.
    pub fn apply_value_shifted(&self, value: &ModPoly, j: usize) -> ModPoly {
        let spec = self.spec;
        let shift = |fam: Family, i: u8| -> Option<SuperPoly> {
            (fam == Family::Lambda).then(|| {
                SuperPoly::var(spec, Family::Lambda, i).add(&SuperPoly::var(spec, Family::Mu, i))
            })
        };
        let mut out = ModPoly::zero(spec);
        for ((vm, g), vc) in &value.terms {
            let mut front = SuperPoly::zero(spec);
            front.add_term(
                Monomial::from_fam(Family::Lambda, *vm.fam(Family::Lambda)),
                vc.clone(),
            );
            for i in vm.fam(Family::Del).factors(spec) {
                let f = SuperPoly::var(spec, Family::Lambda, i)
                    .add(&SuperPoly::var(spec, Family::Mu, i))
                    .neg();
                front = front.mul(&f);
            }
            let val = self.action[*g as usize][j].subst(shift);
            out = out.add(&val.lmul_poly(&front));
        }
        out
    }

    /// Action of an annihilation class on a module vector, through the
    /// coefficient extraction of the lambda action.
    pub fn ann_action(&self, w: &AnnElem, vec: &ModPoly) -> ModPoly {
        let mut out = ModPoly::zero(self.spec);
        for ((km, g), c) in &w.terms {
            let applied = self.apply_gen(*g, vec, Family::Lambda);
            let coeff = applied.coeff_of(Family::Lambda, km);
            let q = km.odd_count() as u64;
            let mut scale = Q::from_integer(km.multiplicity_factorial());
            if (q * (q + 1) / 2) % 2 == 1 {
                scale = -scale;
            }
            out = out.add(&coeff.scale(&(c * scale)));
        }
        out
    }

    /// Parity / relation-compatibility / commutator residuals: the module
    /// axioms, checked exactly.
    pub fn residual_module_axioms(&self, space: &AnnSpace) -> Vec<String> {
        let mut bad = Vec::new();
        // M1: parity consistency and relation compatibility of the action.
        for (g, rows) in self.action.iter().enumerate() {
            let pa = self.agens[g].parity;
            for (j, val) in rows.iter().enumerate() {
                let pj = self.basis[j].parity;
                for (m, t) in val.terms.keys() {
                    let pt = m.parity() ^ self.basis[*t as usize].parity;
                    if pt != pa ^ pj {
                        bad.push(format!("M1 parity: generator {g} on basis {j}"));
                    }
                }
            }
        }
        for rho in space.relation_generators().iter() {
            for j in 0..self.rank() {
                // (sum_terms c del_K g)_lambda v_j must vanish
                let mut total = ModPoly::zero(self.spec);
                for ((m, g), c) in &rho.terms {
                    let mut front = SuperPoly::constant(self.spec, c.clone());
                    for i in m.fam(Family::Del).factors(self.spec) {
                        front = front.mul(&SuperPoly::var(self.spec, Family::Lambda, i).neg());
                    }
                    total = total.add(&self.action[*g as usize][j].lmul_poly(&front));
                }
                if !total.is_zero() {
                    bad.push(format!("M1 relation compatibility fails on basis {j}"));
                }
            }
        }
        // M2 on generator pairs and basis vectors.
        use rayon::prelude::*;
        let jobs: Vec<(usize, usize, usize)> = (0..self.agens.len())
            .flat_map(|a| {
                let n = self.agens.len();
                let r = self.rank();
                (0..n).flat_map(move |b| (0..r).map(move |j| (a, b, j)))
            })
            .collect();
        let mut m2: Vec<String> = jobs
            .par_iter()
            .filter_map(|&(a, b, j)| {
                let res = self.residual_m2(space, a as GenId, b as GenId, j);
                if res.is_zero() {
                    None
                } else {
                    Some(format!("M2 fails for generators ({a},{b}) on basis {j}"))
                }
            })
            .collect();
        bad.append(&mut m2);
        bad
    }

    pub fn residual_m2(&self, space: &AnnSpace, a: GenId, b: GenId, j: usize) -> ModPoly {
        let ej = self.basis_vec(j);
        let bv = self.apply_gen(b, &ej, Family::Lambda).lambda_to_mu();
        let t1 = self.apply_gen(a, &bv, Family::Lambda);
        let av = self.apply_gen(a, &ej, Family::Lambda);
        let mut t2 = self.apply_gen(b, &av, Family::Mu);
        if self.agens[a as usize].parity && self.agens[b as usize].parity {
            t2 = t2.neg();
        }
        let value = space
            .pres
            .bracket(&ModPoly::gen(self.spec, a), &ModPoly::gen(self.spec, b));
        let rhs = self.apply_value_shifted(&value, j);
        t1.sub(&t2).sub(&rhs)
    }

    /// Coherence: every degree -2 class acts as the matching combination of
    /// module del-operators.
    pub fn check_coherent(&self, space: &AnnSpace) -> Result<(), CoreError> {
        let spec = self.spec;
        for g in 0..self.agens.len() as GenId {
            let gd = space.pres.gens[g as usize].degree;
            let extra = -2 - gd;
            if extra < 0 || extra % 2 != 0 {
                continue;
            }
            for km in crate::superpoly::enumerate_monos(spec, (extra / 2) as u32) {
                let cls = space.canonicalize(&AnnElem::symbol(km, g));
                if cls.is_zero() {
                    continue;
                }
                let alpha = space.as_derivation(&cls)?;
                for j in 0..self.rank() {
                    let got = self.ann_action(&AnnElem::symbol(km, g), &self.basis_vec(j));
                    let mut expect = ModPoly::zero(spec);
                    for (i, a) in alpha.iter().enumerate() {
                        if !a.is_zero() {
                            expect = expect.sub(
                                &self
                                    .basis_vec(j)
                                    .lmul_poly(&SuperPoly::var(spec, Family::Del, i as u8 + 1))
                                    .scale(a),
                            );
                        }
                    }
                    if !got.sub(&expect).is_zero() {
                        return Err(CoreError::InconsistentModule(format!(
                            "coherence fails for generator {g} at basis {j}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Conformal dual with the standard dual basis.
    pub fn dual(&self) -> ConformalModule {
        let spec = self.spec;
        let subst = |fam: Family, i: u8| -> Option<SuperPoly> {
            (fam == Family::Del).then(|| {
                SuperPoly::var(spec, Family::Del, i)
                    .add(&SuperPoly::var(spec, Family::Lambda, i))
                    .neg()
            })
        };
        let basis: Vec<GenSym> = self
            .basis
            .iter()
            .map(|b| GenSym {
                name: format!("{}*", b.name),
                parity: b.parity,
                degree: 0,
            })
            .collect();
        let mut action = Vec::new();
        for g in 0..self.agens.len() {
            let mut rows = Vec::new();
            for i in 0..self.rank() {
                let pi = self.basis[i].parity;
                let mut val = ModPoly::zero(spec);
                for j in 0..self.rank() {
                    // P_{ji}: coefficient of basis i in a_lambda m_j
                    let pj = self.basis[j].parity;
                    let mut pji = SuperPoly::zero(spec);
                    for ((m, t), c) in &self.action[g][j].terms {
                        if *t as usize == i {
                            pji.add_term(*m, c.clone());
                        }
                    }
                    if pji.is_zero() {
                        continue;
                    }
                    let mut term = ModPoly::gen(spec, j as GenId)
                        .lmul_poly(&pji.subst(subst))
                        .neg();
                    if pi && (pj ^ pi) {
                        term = term.neg();
                    }
                    val = val.add(&term);
                }
                rows.push(val);
            }
            action.push(rows);
        }
        ConformalModule {
            spec,
            algebra: self.algebra.clone(),
            basis,
            agens: self.agens.clone(),
            action,
        }
    }

    /// The signed identification of the double dual with the module.
    pub fn double_dual_check(&self) -> Result<(), CoreError> {
        let dd = self.dual().dual();
        for g in 0..self.agens.len() {
            for i in 0..self.rank() {
                // phi((m_i*)*) = (-1)^{p_i} m_i must intertwine
                let si = if self.basis[i].parity { -1 } else { 1 };
                let lhs = self.action[g][i].scale(&qb(si));
                let mut rhs = ModPoly::zero(self.spec);
                for ((m, j), c) in &dd.action[g][i].terms {
                    let sj = if self.basis[*j as usize].parity {
                        -1
                    } else {
                        1
                    };
                    rhs.add_term(*m, *j, c * qb(sj));
                }
                if !lhs.sub(&rhs).is_zero() {
                    return Err(CoreError::InconsistentModule(format!(
                        "double dual fails for generator {g} at basis {i}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A module map given by its matrix over the del-algebra:
/// `T(m_j) = mat[j]` (a del-only vector over the target basis).
#[derive(Clone)]
pub struct ModuleMap {
    pub parity: bool,
    pub mat: Vec<ModPoly>,
}

impl ModuleMap {
    /// Apply to a lambda/del vector over the source basis, with the parity
    /// crossing signs of a (possibly odd) morphism.
    pub fn apply(&self, spec: crate::superpoly::VarSpec, v: &ModPoly) -> ModPoly {
        let mut out = ModPoly::zero(spec);
        for ((m, j), c) in &v.terms {
            let mut coeff = c.clone();
            if self.parity && m.parity() {
                coeff = -coeff;
            }
            out = out.add(&self.mat[*j as usize].lmul_mono(m, &coeff));
        }
        out
    }

    /// Residual of the morphism conditions against both modules.
    pub fn morphism_residuals(&self, src: &ConformalModule, dst: &ConformalModule) -> Vec<String> {
        let mut bad = Vec::new();
        for g in 0..src.agens.len() as GenId {
            let sa = if src.agens[g as usize].parity && self.parity {
                -1
            } else {
                1
            };
            for j in 0..src.rank() {
                let lhs = self.apply(src.spec, &src.action[g as usize][j]);
                let rhs = dst
                    .apply_gen(g, &self.mat[j], Family::Lambda)
                    .scale(&qb(sa));
                if !lhs.sub(&rhs).is_zero() {
                    bad.push(format!(
                        "morphism condition fails at generator {g}, basis {j}"
                    ));
                }
            }
        }
        bad
    }

    /// Dual map between the dual modules.
    pub fn dual(&self, src: &ConformalModule, dst: &ConformalModule) -> ModuleMap {
        let spec = src.spec;
        let mut mat = Vec::new();
        for i in 0..dst.rank() {
            let pi = dst.basis[i].parity;
            let mut val = ModPoly::zero(spec);
            for j in 0..src.rank() {
                // T_{ji} as a polynomial
                let mut tji = SuperPoly::zero(spec);
                for ((m, t), c) in &self.mat[j].terms {
                    if *t as usize == i {
                        tji.add_term(*m, c.clone());
                    }
                }
                if tji.is_zero() {
                    continue;
                }
                // del_r -> -(-1)^{p_r p_i} del_r, with the overall sign
                let mapped = tji.subst(|fam, r| {
                    (fam == Family::Del).then(|| {
                        let mut v = SuperPoly::var(spec, Family::Del, r).neg();
                        if spec.is_odd(r) && pi {
                            v = v.neg();
                        }
                        v
                    })
                });
                let mut term = ModPoly::gen(spec, j as GenId).lmul_poly(&mapped).neg();
                if self.parity && pi {
                    term = term.neg();
                }
                val = val.add(&term);
            }
            mat.push(val);
        }
        ModuleMap {
            parity: self.parity,
            mat,
        }
    }

    /// Plain composition `self` after `first`.
    pub fn compose_after(&self, spec: crate::superpoly::VarSpec, first: &ModuleMap) -> ModuleMap {
        let mat = first.mat.iter().map(|v| self.apply(spec, v)).collect();
        ModuleMap {
            parity: self.parity ^ first.parity,
            mat,
        }
    }

    /// Rank over the constant block (del set to zero), enough to witness
    /// injectivity of maps with polynomial entries.
    pub fn constant_rank(&self, target_rank: usize) -> usize {
        let rows: Vec<Vec<Q>> = self
            .mat
            .iter()
            .map(|v| {
                let mut row = vec![Q::zero(); target_rank];
                for ((m, j), c) in &v.terms {
                    if m.is_one() {
                        row[*j as usize] = c.clone();
                    }
                }
                row
            })
            .collect();
        let mut mat = rows;
        let mut rank = 0usize;
        for col in 0..target_rank {
            let Some(pr) = (rank..mat.len()).find(|&r| !mat[r][col].is_zero()) else {
                continue;
            };
            mat.swap(rank, pr);
            let inv = Q::one() / mat[rank][col].clone();
            for x in mat[rank].iter_mut() {
                *x = x.clone() * inv.clone();
            }
            let piv = mat[rank].clone();
            for (r, row) in mat.iter_mut().enumerate() {
                if r != rank && !row[col].is_zero() {
                    let f = row[col].clone();
                    for (x, p) in row.iter_mut().zip(piv.iter()) {
                        *x = x.clone() - f.clone() * p.clone();
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}

/// Shift character on the degree-0 basis, with the auxiliary character of
/// the top exterior power.
#[derive(Clone, Debug)]
pub struct ShiftCharacter {
    pub chi: Vec<Q>,
    pub rho: Vec<Q>,
}

/// chi_x = str(ad x | negative part), rho_x = -str(ad x | odd negative).
pub fn shift_character(space: &AnnSpace) -> Result<ShiftCharacter, CoreError> {
    let b0 = space.graded_basis(0);
    let mut chi = Vec::new();
    let mut rho = Vec::new();
    for idx in 0..b0.dim {
        let x = b0.rep(idx);
        let s1 = supertrace_ad(space, &x, -1)?;
        let s2 = supertrace_ad(space, &x, -2)?;
        let s3 = supertrace_ad(space, &x, -3)?;
        let c = &s1 + &s2 + &s3;
        let r = -(&s1 + &s3);
        // consistency: chi = -rho + str(ad | -2)
        if c != -&r + &s2 {
            return Err(CoreError::Invalid("chi/rho consistency violated".into()));
        }
        chi.push(c);
        rho.push(r);
    }
    // chi vanishes on brackets of degree-0 elements
    for i in 0..b0.dim {
        for j in 0..b0.dim {
            let br = space.bracket(&b0.rep(i), &b0.rep(j));
            let coords = space.coords(&br, 0)?;
            let mut val = Q::zero();
            for (t, c) in coords.iter().enumerate() {
                val += c * &chi[t];
            }
            if !val.is_zero() {
                return Err(CoreError::Invalid(
                    "shift character does not vanish on brackets".into(),
                ));
            }
        }
    }
    Ok(ShiftCharacter { chi, rho })
}

pub fn eval_character(space: &AnnSpace, ch: &[Q], w: &AnnElem) -> Result<Q, CoreError> {
    let coords = space.coords(w, 0)?;
    let mut val = Q::zero();
    for (t, c) in coords.iter().enumerate() {
        val += c * &ch[t];
    }
    Ok(val)
}

/// The chi-shifted dual of a degree-0 module.
pub fn chi_shift(
    space: &AnnSpace,
    f: &G0Module,
    chi: &ShiftCharacter,
) -> Result<G0Module, CoreError> {
    let l = f.dim();
    let basis: Vec<(String, bool)> = f.basis.iter().map(|(n, p)| (format!("{n}*"), *p)).collect();
    let mut mats = Vec::new();
    for (s, span) in f.span.iter().enumerate() {
        let cx = eval_character(space, &chi.chi, span)?;
        let xp = space.parity(span).unwrap_or(false);
        let mut m = vec![vec![Q::zero(); l]; l];
        for h in 0..l {
            for k in 0..l {
                // x . v_h* = chi_x v_h* - (-1)^{p(x) p(v_h)} sum_k A[h][k] v_k*
                let mut val = -f.mats[s][h][k].clone();
                if xp && f.basis[h].1 {
                    val = -val;
                }
                m[k][h] = val;
            }
            m[h][h] += cx.clone();
        }
        mats.push(m);
    }
    let out = G0Module {
        basis,
        span: f.span.clone(),
        mats,
    };
    out.validate(space)?;
    Ok(out)
}

/// A generalized Verma module with cached lambda-action matrices.
pub struct VermaModule {
    pub space: Arc<AnnSpace>,
    pub neg: NegPart,
    pub fmod: G0Module,
    pub cm: ConformalModule,
}

impl VermaModule {
    pub fn rank(&self) -> usize {
        self.cm.rank()
    }

    pub fn flat(&self, mask: u16, h: u8) -> usize {
        mask as usize * self.fmod.dim() + h as usize
    }
}

/// Action engine for `y_M a` symbols on the PBW basis, with memoization on
/// (symbol, remaining word, F-index).
struct ActionEngine<'a> {
    space: &'a AnnSpace,
    neg: &'a NegPart,
    fmod: &'a G0Module,
    solver: SpanSolver,
    memo: HashMap<(FamMono, GenId, u16, u8), VVec>,
}

impl<'a> ActionEngine<'a> {
    fn new(space: &'a AnnSpace, neg: &'a NegPart, fmod: &'a G0Module) -> Result<Self, CoreError> {
        let solver = SpanSolver::new(space, &fmod.span)?;
        Ok(ActionEngine {
            space,
            neg,
            fmod,
            memo: HashMap::new(),
            solver,
        })
    }

    /// Total absorbable degree of the remaining word.
    fn cap(&self, word: &[usize]) -> i64 {
        word.iter().map(|&i| -self.neg.d_deg[i]).sum()
    }

    fn act_symbol(
        &mut self,
        m: FamMono,
        g: GenId,
        word: &[usize],
        h: u8,
    ) -> Result<VVec, CoreError> {
        let deg = self.space.symbol_degree(&m, g);
        if deg > self.cap(word) {
            return Ok(VVec::new());
        }
        let mask_key = word_mask(word);
        if let Some(v) = self.memo.get(&(m, g, mask_key, h)) {
            return Ok(v.clone());
        }
        let result = self.act_symbol_inner(m, g, word, h)?;
        // Runtime form of the filtration bound: non-negative elements only
        // shorten the odd word.
        if deg >= 0 {
            for (_, mask, _) in result.keys() {
                assert!(
                    mask.count_ones() as usize <= word.len(),
                    "filtration bound violated"
                );
            }
        }
        self.memo.insert((m, g, mask_key, h), result.clone());
        Ok(result)
    }

    fn act_symbol_inner(
        &mut self,
        m: FamMono,
        g: GenId,
        word: &[usize],
        h: u8,
    ) -> Result<VVec, CoreError> {
        let cls = self.space.canonicalize(&AnnElem::symbol(m, g));
        if cls.is_zero() {
            return Ok(VVec::new());
        }
        let deg = self.space.symbol_degree(&m, g);
        if word.is_empty() {
            let mut out = VVec::new();
            match deg {
                d if d > 0 => {}
                0 => {
                    let mat = self.fmod.matrix_of(self.space, &self.solver, &cls)?;
                    for (t, row) in mat.iter().enumerate() {
                        add_vterm(
                            &mut out,
                            FamMono::one(),
                            0,
                            t as u8,
                            row[h as usize].clone(),
                        );
                    }
                }
                -2 => {
                    let alpha = self.space.as_derivation(&cls)?;
                    for (i, a) in alpha.iter().enumerate() {
                        add_vterm(
                            &mut out,
                            FamMono::var(self.space.spec(), i as u8 + 1),
                            0,
                            h,
                            a.clone(),
                        );
                    }
                }
                -1 | -3 => {
                    let coords = coords_in_elems(self.space, &cls, &self.neg.d_basis, deg)?;
                    for (i, c) in coords.iter().enumerate() {
                        add_vterm(&mut out, FamMono::one(), 1u16 << i, h, c.clone());
                    }
                }
                _ => {
                    return Err(CoreError::AssumptionFailed(format!(
                        "nonzero class in forbidden degree {deg}"
                    )))
                }
            }
            return Ok(out);
        }
        let i0 = word[0];
        let rest = &word[1..];
        // [w, d_{i0}] acting on the rest
        let br = self
            .space
            .canonicalize(&self.space.bracket(&cls, &self.neg.d_basis[i0]));
        let mut out = VVec::new();
        for ((bm, bg), bc) in br.terms.clone() {
            let part = self.act_symbol(bm, bg, rest, h)?;
            for (k, v) in part {
                add_vterm_key(&mut out, k, v * &bc);
            }
        }
        // (-1)^{p(w)} d_{i0} (w . rest)
        let pw = self.space.symbol_parity(&m, g);
        let inner = self.act_symbol(m, g, rest, h)?;
        let moved = self.neg.mul_letter(NegLetter::D(i0), &inner);
        for (k, v) in moved {
            add_vterm_key(&mut out, k, if pw { -v } else { v });
        }
        Ok(out)
    }
}

fn word_mask(word: &[usize]) -> u16 {
    word.iter().fold(0u16, |m, &i| m | (1u16 << i))
}

/// Build the generalized Verma module of a validated degree-0 module.
pub fn build_verma(space: Arc<AnnSpace>, fmod: &G0Module) -> Result<VermaModule, CoreError> {
    build_verma_ordered(space, fmod, None)
}

pub fn build_verma_ordered(
    space: Arc<AnnSpace>,
    fmod: &G0Module,
    perm: Option<&[usize]>,
) -> Result<VermaModule, CoreError> {
    space.check_assumptions(2)?;
    fmod.validate(&space)?;
    let neg = NegPart::with_order(space.clone(), perm)?;
    let n = neg.n;
    let ell = fmod.dim();
    let spec = space.spec();
    let mut engine = ActionEngine::new(&space, &neg, fmod)?;
    // module basis
    let mut basis = Vec::new();
    for mask in 0..(1u16 << n) {
        for h in 0..ell {
            let mut name = String::new();
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    name.push_str(&format!("d{}", i + 1));
                }
            }
            name.push_str(&fmod.basis[h].0);
            let parity = (mask.count_ones() % 2 == 1) ^ fmod.basis[h].1;
            basis.push(GenSym {
                name,
                parity,
                degree: 0,
            });
        }
    }
    let flat = |mask: u16, h: u8| mask as usize * ell + h as usize;
    // lambda matrices per algebra generator
    let mut action: Vec<Vec<ModPoly>> = Vec::new();
    for g in 0..space.pres.gens.len() as GenId {
        let gdeg = space.pres.gens[g as usize].degree;
        let mut rows = vec![ModPoly::zero(spec); (1usize << n) * ell];
        for mask in 0..(1u16 << n) {
            let word: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
            let cap: i64 = word.iter().map(|&i| -neg.d_deg[i]).sum();
            let lmax = ((cap - gdeg) / 2).max(0) as u32;
            for h in 0..ell as u8 {
                let mut col = ModPoly::zero(spec);
                for len in 0..=lmax {
                    for km in crate::superpoly::enumerate_monos(spec, len) {
                        let res = engine.act_symbol(km, g, &word, h)?;
                        if res.is_empty() {
                            continue;
                        }
                        let q = km.odd_count() as u64;
                        let mut scale = Q::new(BigInt::one(), km.multiplicity_factorial());
                        if (q * (q + 1) / 2) % 2 == 1 {
                            scale = -scale;
                        }
                        let lmono = Monomial::from_fam(Family::Lambda, km);
                        for ((dm, mk, hh), c) in res {
                            // y-derivation monomial becomes (-1)^len del
                            let mut coeff = c * &scale;
                            if dm.len() % 2 == 1 {
                                coeff = -coeff;
                            }
                            let mut mono = lmono;
                            mono.fams[Family::Del as usize] = dm;
                            if let Some((s, prod)) = lmono.mul(&Monomial::from_fam(Family::Del, dm))
                            {
                                debug_assert_eq!(prod, mono);
                                if s < 0 {
                                    coeff = -coeff;
                                }
                            }
                            col.add_term(mono, flat(mk, hh) as GenId, coeff);
                        }
                    }
                }
                rows[flat(mask, h)] = col;
            }
        }
        action.push(rows);
    }
    let cm = ConformalModule {
        spec,
        algebra: space.pres.name.clone(),
        basis,
        agens: space.pres.gens.clone(),
        action,
    };
    Ok(VermaModule {
        space,
        neg,
        fmod: fmod.clone(),
        cm,
    })
}

/// Report of the restriction of the dual Verma module to the top dual
/// vectors: stability, the chi-shifted matrices, and the annihilation by
/// positive components.
pub fn dual_verma_restriction(verma: &VermaModule, window: i64) -> Result<(), CoreError> {
    let space = &verma.space;
    let dual = verma.cm.dual();
    let chi = shift_character(space)?;
    let shifted = chi_shift(space, &verma.fmod, &chi)?;
    let n = verma.neg.n;
    let ell = verma.fmod.dim();
    let full: u16 = ((1u32 << n) - 1) as u16;
    for (s, span) in verma.fmod.span.iter().enumerate() {
        for h in 0..ell {
            let target = dual.basis_vec(verma.flat(full, h as u8));
            let got = dual.ann_action(span, &target);
            // stability: the result stays in the span of top dual vectors
            let mut expect = ModPoly::zero(verma.cm.spec);
            for k in 0..ell {
                expect.add_term(
                    Monomial::one(),
                    verma.flat(full, k as u8) as GenId,
                    shifted.mats[s][k][h].clone(),
                );
            }
            if !got.sub(&expect).is_zero() {
                return Err(CoreError::InconsistentModule(format!(
                    "top dual restriction differs from the shifted dual at span {s}, basis {h}"
                )));
            }
        }
    }
    // positive components annihilate the top dual vectors
    for d in 1..=window {
        let b = space.graded_basis(d);
        for idx in 0..b.dim {
            let u = b.rep(idx);
            for h in 0..ell {
                let target = dual.basis_vec(verma.flat(full, h as u8));
                if !dual.ann_action(&u, &target).is_zero() {
                    return Err(CoreError::InconsistentModule(format!(
                        "positive degree {d} does not annihilate the top dual vectors"
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Full duality verification: the dual of the Verma module is the Verma
/// module of the chi-shifted dual, through the explicit top-vector map.
pub fn verify_duality(verma: &VermaModule) -> Result<(), CoreError> {
    let space = &verma.space;
    let spec = verma.cm.spec;
    let dual = verma.cm.dual();
    let chi = shift_character(space)?;
    let shifted = chi_shift(space, &verma.fmod, &chi)?;
    let vee = build_verma_ordered(space.clone(), &shifted, verma.neg.perm.as_deref())?;
    let n = verma.neg.n;
    let ell = verma.fmod.dim();
    let full: u16 = ((1u32 << n) - 1) as u16;
    let phi_parity = n % 2 == 1;
    // phi(d_I v_k*) = (-1)^{p(d_I) p(d_Omega)} d_I . (d_Omega v_k)*
    let mut phi: Vec<ModPoly> = Vec::new();
    for mask in 0..(1u16 << n) {
        let word: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        for k in 0..ell as u8 {
            let mut vec = dual.basis_vec(verma.flat(full, k));
            for &i in word.iter().rev() {
                vec = dual.ann_action(&verma.neg.d_basis[i], &vec);
            }
            if phi_parity && mask.count_ones() % 2 == 1 {
                vec = vec.neg();
            }
            phi.push(vec);
        }
    }
    // surjectivity: unit triangular against the complement pairing
    for mask in 0..(1u16 << n) {
        for k in 0..ell as u8 {
            let col = &phi[verma.flat(mask, k)];
            let comp = full & !mask;
            let target = verma.flat(comp, k) as GenId;
            let lead = col.terms.get(&(Monomial::one(), target)).cloned();
            match lead {
                Some(c) if (c.clone() * c.clone()) == Q::one() => {}
                _ => {
                    return Err(CoreError::InconsistentModule(format!(
                        "phi is not unit-triangular at mask {mask:b}"
                    )))
                }
            }
            for (m, t) in col.terms.keys() {
                if *t == target && m.is_one() {
                    continue;
                }
                let tmask = (*t as usize / ell) as u16;
                if tmask.count_ones() <= comp.count_ones() {
                    return Err(CoreError::InconsistentModule(format!(
                        "phi has a non-triangular term at mask {mask:b}"
                    )));
                }
            }
        }
    }
    // intertwining: phi(a_l x) = (-1)^{p(a) p(phi)} a_l phi(x)
    use rayon::prelude::*;
    let jobs: Vec<(GenId, usize)> = (0..space.pres.gens.len() as GenId)
        .flat_map(|g| (0..vee.cm.rank()).map(move |j| (g, j)))
        .collect();
    let failures: Vec<String> = jobs
        .par_iter()
        .filter_map(|&(g, j)| {
            let rhs0 = &vee.cm.action[g as usize][j];
            // transport through phi
            let mut lhs = ModPoly::zero(spec);
            for ((m, col), c) in &rhs0.terms {
                let mut coeff = c.clone();
                if phi_parity && m.parity() {
                    coeff = -coeff;
                }
                lhs = lhs.add(&phi[*col as usize].lmul_mono(m, &coeff));
            }
            let mut rhs = dual.apply_gen(g, &phi[j], Family::Lambda);
            if phi_parity && space.pres.gens[g as usize].parity {
                rhs = rhs.neg();
            }
            if lhs.sub(&rhs).is_zero() {
                None
            } else {
                Some(format!(
                    "intertwining fails for generator {} at column {j}",
                    space.pres.gens[g as usize].name
                ))
            }
        })
        .collect();
    if !failures.is_empty() {
        return Err(CoreError::InconsistentModule(failures[0].clone()));
    }
    Ok(())
}

/// Dual of a module map, refusing inputs that are not morphisms.
pub fn dual_morphism(
    t: &ModuleMap,
    src: &ConformalModule,
    dst: &ConformalModule,
) -> Result<ModuleMap, CoreError> {
    let residuals = t.morphism_residuals(src, dst);
    if !residuals.is_empty() {
        return Err(CoreError::NotAMorphism(residuals[0].clone()));
    }
    Ok(t.dual(src, dst))
}

/// Basis of the space of characters of the degree-0 component: functionals
/// vanishing on all brackets.
pub fn character_space(space: &AnnSpace) -> Result<Vec<Vec<Q>>, CoreError> {
    let b0 = space.graded_basis(0);
    let mut rows: Vec<Vec<Q>> = Vec::new();
    for i in 0..b0.dim {
        for j in 0..b0.dim {
            let br = space.bracket(&b0.rep(i), &b0.rep(j));
            let coords = space.coords(&br, 0)?;
            if coords.iter().any(|c| !c.is_zero()) {
                rows.push(coords);
            }
        }
    }
    // null space of the row span
    let images: Vec<ModPoly> = rows
        .iter()
        .map(|r| {
            let mut v = ModPoly::zero(space.spec());
            for (t, c) in r.iter().enumerate() {
                v.add_term(Monomial::one(), t as GenId, c.clone());
            }
            v
        })
        .collect();
    // kernel of the transpose: characters c with sum_t r[t] c[t] = 0
    let mut cols: Vec<ModPoly> = Vec::new();
    for t in 0..b0.dim {
        let mut v = ModPoly::zero(space.spec());
        for (ri, r) in images.iter().enumerate() {
            if let Some(c) = r.terms.get(&(Monomial::one(), t as GenId)) {
                v.add_term(Monomial::one(), ri as GenId, c.clone());
            }
        }
        cols.push(v);
    }
    Ok(crate::conformal::kernel_vectors(&cols))
}

/// Standard 3-dimensional module of the matrix part of the degree-0
/// component of RE36 (tensor a trivial sl2 factor), at a chosen trace
/// shift; gamma = 1/3 makes the grading element act by zero.
pub fn re36_standard_module(space: &AnnSpace, gamma: Q) -> G0Module {
    let spec = space.spec();
    let mut span = Vec::new();
    let mut mats = Vec::new();
    for i in 1..=3u8 {
        for j in 1..=3u8 {
            let g = space.pres.gen_id(&format!("a{j}")).unwrap();
            span.push(AnnElem::symbol(FamMono::var(spec, i), g));
            // y_i a_j acts as -E_ij + gamma delta_ij
            let mut m = vec![vec![Q::zero(); 3]; 3];
            m[i as usize - 1][j as usize - 1] = -Q::one();
            if i == j {
                for d in 0..3 {
                    m[d][d] += gamma.clone();
                }
            }
            mats.push(m);
        }
    }
    for c in ["E", "F", "H"] {
        let g = space.pres.gen_id(c).unwrap();
        span.push(AnnElem::symbol(FamMono::one(), g));
        mats.push(vec![vec![Q::zero(); 3]; 3]);
    }
    G0Module {
        basis: (1..=3).map(|i| (format!("v{i}"), false)).collect(),
        span,
        mats,
    }
}

/// Distinguished degree-0 elements with well-known shift-character values,
/// keyed by a printable name.
pub fn distinguished_elements(space: &AnnSpace) -> Vec<(String, AnnElem)> {
    let name = space.pres.name.clone();
    let spec = space.spec();
    let mut out = Vec::new();
    if name.starts_with("RW") {
        // c0, c1: the preimages of the even/odd Euler vector fields.
        let mut c0 = AnnElem::zero();
        let mut c1 = AnnElem::zero();
        for i in 1..=spec.nvars() {
            let g = space.pres.gen_id(&format!("a{i}")).unwrap();
            let sym = AnnElem::symbol(FamMono::var(spec, i), g);
            if spec.is_odd(i) {
                c1 = c1.sub(&sym);
            } else {
                c0 = c0.sub(&sym);
            }
        }
        if spec.r > 0 {
            out.push(("c0".into(), c0));
        }
        if spec.s > 0 {
            out.push(("c1".into(), c1));
        }
    } else if name.starts_with("K(") {
        let one = space.pres.gen_id("one").unwrap();
        out.push(("y".into(), AnnElem::symbol(FamMono::var(spec, 1), one)));
    } else if name == "RE36" {
        // z acts as the degree on each graded component
        let mut z = AnnElem::zero();
        for i in 1..=3u8 {
            let g = space.pres.gen_id(&format!("a{i}")).unwrap();
            z = z.sub(&AnnElem::symbol(FamMono::var(spec, i), g).scale(&qb(2)));
        }
        out.push(("z".into(), z));
    } else if name == "RE38" {
        // Y = 2/3 of the Euler field; ad Y is deg/3
        let mut y = AnnElem::zero();
        for i in 1..=3u8 {
            let g = space.pres.gen_id(&format!("a{i}")).unwrap();
            y = y
                .add(&AnnElem::symbol(FamMono::var(spec, i), g).scale(&crate::superpoly::qr(2, 3)));
        }
        out.push(("Y".into(), y));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebras::{build_kn, build_re36, build_re38, build_re510, build_rw};
    use crate::superpoly::qi;

    fn space_of(p: crate::conformal::Presentation) -> Arc<AnnSpace> {
        Arc::new(AnnSpace::new(p))
    }

    #[test]
    fn verma_rw10_trivial() {
        let space = space_of(build_rw(1, 0).unwrap());
        let f = G0Module::trivial(&space);
        let v = build_verma(space.clone(), &f).unwrap();
        assert_eq!(v.rank(), 1);
        // a_lambda v = del v
        let expect =
            v.cm.basis_vec(0)
                .lmul_poly(&SuperPoly::var(v.cm.spec, Family::Del, 1));
        assert_eq!(v.cm.action[0][0], expect);
        assert!(v.cm.residual_module_axioms(&space).is_empty());
        v.cm.check_coherent(&space).unwrap();
        v.cm.double_dual_check().unwrap();
        dual_verma_restriction(&v, 4).unwrap();
        verify_duality(&v).unwrap();
    }

    #[test]
    fn shift_character_values() {
        // RW central values (-r, s)
        for (r, s) in [(1u8, 1u8), (2, 1), (1, 2)] {
            let space = space_of(build_rw(r, s).unwrap());
            let ch = shift_character(&space).unwrap();
            for (name, el) in distinguished_elements(&space) {
                let val = eval_character(&space, &ch.chi, &el).unwrap();
                let expect = if name == "c0" {
                    qi(-(r as i64))
                } else {
                    qi(s as i64)
                };
                assert_eq!(val, expect, "RW({r},{s}) {name}");
            }
        }
        // K(1,n): chi_y = n - 2 and zero on the even so_n part
        for n in [2u8, 3, 4] {
            let space = space_of(build_kn(n).unwrap());
            let ch = shift_character(&space).unwrap();
            let (_, y) = &distinguished_elements(&space)[0];
            assert_eq!(
                eval_character(&space, &ch.chi, y).unwrap(),
                qi(n as i64 - 2)
            );
            // so_n part: generators xi_i xi_j at y^0
            for i in 1..=n {
                for j in i + 1..=n {
                    let g = space.pres.gen_id(&format!("x{i}{j}")).unwrap();
                    let el = AnnElem::symbol(FamMono::one(), g);
                    assert!(eval_character(&space, &ch.chi, &el).unwrap().is_zero());
                }
            }
        }
        // E36: z-value 0
        let space = space_of(build_re36());
        let ch = shift_character(&space).unwrap();
        let (_, z) = &distinguished_elements(&space)[0];
        assert!(eval_character(&space, &ch.chi, z).unwrap().is_zero());
        // E38: Y-value 2
        let space = space_of(build_re38());
        let ch = shift_character(&space).unwrap();
        let (_, y) = &distinguished_elements(&space)[0];
        assert_eq!(eval_character(&space, &ch.chi, y).unwrap(), qi(2));
        // E510: identically zero
        let space = space_of(build_re510());
        let ch = shift_character(&space).unwrap();
        assert!(ch.chi.iter().all(|c| c.is_zero()));
    }

    #[test]
    fn duality_rw11_characters() {
        let space = space_of(build_rw(1, 1).unwrap());
        let chars = character_space(&space).unwrap();
        assert!(!chars.is_empty());
        for w in [0i64, 1, -2, 3] {
            let weights: Vec<Q> = chars[0].iter().map(|c| c * qi(w)).collect();
            let f = G0Module::character(&space, &weights);
            let v = build_verma(space.clone(), &f).unwrap();
            assert_eq!(v.rank(), 1);
            assert!(
                v.cm.residual_module_axioms(&space).is_empty(),
                "axioms w={w}"
            );
            v.cm.check_coherent(&space).unwrap();
            v.cm.double_dual_check().unwrap();
            dual_verma_restriction(&v, 4).unwrap();
            verify_duality(&v).unwrap();
        }
    }

    #[test]
    fn duality_k13_trivial_and_scalar() {
        let space = space_of(build_kn(3).unwrap());
        let b0 = space.graded_basis(0);
        // scalar y-weight mu: character with weight on the y element
        let one = space.pres.gen_id("one").unwrap();
        let ypos = (0..b0.dim)
            .position(|i| b0.symbols[i] == (FamMono::var(space.spec(), 1), one))
            .unwrap();
        for mu in [qi(0), qi(5), crate::superpoly::qr(-7, 3)] {
            let mut weights = vec![Q::zero(); b0.dim];
            weights[ypos] = mu.clone();
            let f = G0Module::character(&space, &weights);
            let v = build_verma(space.clone(), &f).unwrap();
            assert_eq!(v.rank(), 8);
            assert!(
                v.cm.residual_module_axioms(&space).is_empty(),
                "axioms mu={mu}"
            );
            v.cm.check_coherent(&space).unwrap();
            v.cm.double_dual_check().unwrap();
            dual_verma_restriction(&v, 4).unwrap();
            verify_duality(&v).unwrap();
        }
    }

    #[test]
    fn k13_shifted_dual_weight() {
        // trivial F: the shifted dual has y-weight n - 2 = 1
        let space = space_of(build_kn(3).unwrap());
        let f = G0Module::trivial(&space);
        let chi = shift_character(&space).unwrap();
        let shifted = chi_shift(&space, &f, &chi).unwrap();
        let b0 = space.graded_basis(0);
        let one = space.pres.gen_id("one").unwrap();
        let ypos = (0..b0.dim)
            .position(|i| b0.symbols[i] == (FamMono::var(space.spec(), 1), one))
            .unwrap();
        assert_eq!(shifted.mats[ypos][0][0], qi(1));
    }

    #[test]
    fn duality_e36_trivial() {
        let space = space_of(build_re36());
        let f = G0Module::trivial(&space);
        let v = build_verma(space.clone(), &f).unwrap();
        assert_eq!(v.rank(), 64);
        dual_verma_restriction(&v, 2).unwrap();
        verify_duality(&v).unwrap();
    }

    #[test]
    fn duality_e36_standard() {
        let space = space_of(build_re36());
        let f = re36_standard_module(&space, qi(0));
        f.validate(&space).unwrap();
        let v = build_verma(space.clone(), &f).unwrap();
        assert_eq!(v.rank(), 192);
        dual_verma_restriction(&v, 2).unwrap();
        verify_duality(&v).unwrap();
    }

    #[test]
    fn pbw_engine_basics() {
        let space = space_of(build_kn(3).unwrap());
        let neg = NegPart::new(space.clone()).unwrap();
        // empty word
        let v = neg.pbw_normalize(&[], 0);
        assert_eq!(v.len(), 1);
        // d_i d_i for xi generators: [xi_i, xi_i] corresponds to a nonzero
        // -2 class in K(1,3) (the contact bracket of xi with itself).
        let sq = neg.pbw_normalize(&[NegLetter::D(0), NegLetter::D(0)], 0);
        // xi_1 xi_1 = 1/2 [xi_1, xi_1]: a pure dy term
        assert!(sq.keys().all(|(_, mask, _)| *mask == 0));
        assert!(!sq.is_empty());
        // reordering: d2 d1 = -d1 d2 + [d2, d1]
        let ab = neg.pbw_normalize(&[NegLetter::D(1), NegLetter::D(0)], 0);
        let ba = neg.pbw_normalize(&[NegLetter::D(0), NegLetter::D(1)], 0);
        let mut sum: VVec = ab.clone();
        for (k, c) in ba {
            add_vterm_key(&mut sum, k, c);
        }
        // d1 d2 + d2 d1 = [d1, d2], a dy-vector
        assert!(sum.keys().all(|(_, mask, _)| *mask == 0));
    }

    #[test]
    fn morphism_duality_toys() {
        // rank-2 -> rank-1 surjective toy over RW(1,0) Verma modules
        let space = space_of(build_rw(1, 0).unwrap());
        let f = G0Module::trivial(&space);
        let v = build_verma(space.clone(), &f).unwrap();
        let m1 = v.cm.clone();
        // M2 = M1 (+) M1 with the diagonal action
        let mut basis = m1.basis.clone();
        basis.push(GenSym {
            name: "w".into(),
            parity: false,
            degree: 0,
        });
        let mut action = vec![Vec::new()];
        action[0].push(m1.action[0][0].clone());
        let mut second = ModPoly::zero(m1.spec);
        for ((m, _), c) in &m1.action[0][0].terms {
            second.add_term(*m, 1, c.clone());
        }
        action[0].push(second);
        let m2 = ConformalModule {
            spec: m1.spec,
            algebra: m1.algebra.clone(),
            basis,
            agens: m1.agens.clone(),
            action,
        };
        // T: M2 -> M1, (x, y) -> x + y: surjective
        let t = ModuleMap {
            parity: false,
            mat: vec![m1.basis_vec(0), m1.basis_vec(0)],
        };
        assert!(t.morphism_residuals(&m2, &m1).is_empty());
        let tstar = t.dual(&m2, &m1);
        let m1d = m1.dual();
        let m2d = m2.dual();
        assert!(tstar.morphism_residuals(&m1d, &m2d).is_empty());
        // surjective T gives injective T*: constant rank equals source rank
        assert_eq!(tstar.constant_rank(m2d.rank()), m1d.rank());
        // zero map dualizes to zero
        let z = ModuleMap {
            parity: false,
            mat: vec![m1.zero_vec(), m1.zero_vec()],
        };
        let zd = z.dual(&m2, &m1);
        assert!(zd.mat.iter().all(|v| v.is_zero()));
        // composition contract: for even maps (S T)* = -T* S* with the
        // sign forced by the defining minus of the dual map.
        let s = ModuleMap {
            parity: false,
            mat: vec![m1.basis_vec(0).scale(&qi(3))],
        };
        assert!(s.morphism_residuals(&m1, &m1).is_empty());
        let st = s.compose_after(m1.spec, &t);
        let st_star = st.dual(&m2, &m1);
        let ts = tstar.compose_after(m1.spec, &s.dual(&m1, &m1));
        for j in 0..m1d.rank() {
            assert_eq!(st_star.mat[j], ts.mat[j].neg());
        }
    }

    #[test]
    fn mutated_verma_fails_m2() {
        let space = space_of(build_rw(1, 0).unwrap());
        let f = G0Module::trivial(&space);
        let v = build_verma(space.clone(), &f).unwrap();
        let mut broken = v.cm.clone();
        // flip one sign in the matrix
        let val = broken.action[0][0].clone();
        broken.action[0][0] = val.neg();
        assert!(!broken.residual_module_axioms(&space).is_empty());
    }

    #[test]
    fn order_covariance_rw11() {
        // a permuted d-order must also pass (here n = 0, so the real check
        // is on K(1,3)).
        let space = space_of(build_kn(3).unwrap());
        let f = G0Module::trivial(&space);
        let perm = vec![2usize, 0, 1];
        let v = build_verma_ordered(space.clone(), &f, Some(&perm)).unwrap();
        assert!(v.cm.residual_module_axioms(&space).is_empty());
        verify_duality(&v).unwrap();
    }
}
