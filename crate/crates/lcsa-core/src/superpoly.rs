//! Exact super-polynomial engine over `r` even and `s` odd indeterminates in
//! each of the variable families lambda, mu, del.
//!
//! All Koszul-sign bookkeeping is centralized here. The canonical normal form
//! orders factors family-major (lambda, then mu, then del) with even factors
//! collected as exponents and odd factors strictly ascending; every sign
//! arising from reordering is absorbed into the rational coefficient.
//! Coefficients are exact rationals with arbitrary-precision integers.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::CoreError;

/// Exact rational scalar used everywhere in the engine.
pub type Q = BigRational;

pub fn qi(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

/// Render a rational as `p` or `p/q`, never a float.
pub fn q_display(x: &Q) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Parse `p` or `p/q`.
pub fn q_parse(s: &str) -> Option<Q> {
    let s = s.trim();
    match s.split_once('/') {
        None => s.parse::<BigInt>().ok().map(Q::from_integer),
        Some((n, d)) => {
            let n = n.trim().parse::<BigInt>().ok()?;
            let d = d.trim().parse::<BigInt>().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(Q::new(n, d))
            }
        }
    }
}

/// Number of even / odd indeterminates. Index `i` ranges over `1..=r+s`,
/// with parity 0 for `i <= r` and 1 for `i > r`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct VarSpec {
    pub r: u8,
    pub s: u8,
}

pub const MAX_EVEN: usize = 6;
pub const MAX_ODD: usize = 8;

impl VarSpec {
    pub fn new(r: u8, s: u8) -> Self {
        assert!(
            (r as usize) <= MAX_EVEN && (s as usize) <= MAX_ODD,
            "supported range is r <= {MAX_EVEN}, s <= {MAX_ODD}"
        );
        VarSpec { r, s }
    }

    pub fn nvars(&self) -> u8 {
        self.r + self.s
    }

    /// Parity of indeterminate `i` (1-based).
    pub fn is_odd(&self, i: u8) -> bool {
        i > self.r
    }

    pub fn check_index(&self, i: u8) -> Result<(), CoreError> {
        if i == 0 || i > self.nvars() {
            Err(CoreError::IndexOutOfRange {
                index: i,
                nvars: self.nvars(),
            })
        } else {
            Ok(())
        }
    }
}

/// Variable family tags. `Mu` exists to double the lambda family in
/// two-variable (Jacobi-style) contexts.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Family {
    Lambda = 0,
    Mu = 1,
    Del = 2,
}

pub const FAMILIES: [Family; 3] = [Family::Lambda, Family::Mu, Family::Del];

impl Family {
    pub fn letter(&self) -> char {
        match self {
            Family::Lambda => 'l',
            Family::Mu => 'm',
            Family::Del => 'd',
        }
    }
}

/// Monomial in a single family: even exponents plus a set of odd indices.
/// Odd index `r+1+k` is stored as bit `k`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FamMono {
    pub even: [u16; MAX_EVEN],
    pub odd: u8,
}

impl fmt::Debug for FamMono {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FamMono({:?};{:08b})", self.even, self.odd)
    }
}

impl FamMono {
    pub fn one() -> Self {
        FamMono::default()
    }

    pub fn var(spec: VarSpec, i: u8) -> Self {
        let mut m = FamMono::default();
        if spec.is_odd(i) {
            m.odd = 1 << (i - spec.r - 1);
        } else {
            m.even[(i - 1) as usize] = 1;
        }
        m
    }

    pub fn is_one(&self) -> bool {
        self.odd == 0 && self.even.iter().all(|&e| e == 0)
    }

    pub fn odd_count(&self) -> u32 {
        self.odd.count_ones()
    }

    pub fn parity(&self) -> bool {
        self.odd_count() % 2 == 1
    }

    /// Total number of factors.
    pub fn len(&self) -> u32 {
        self.even.iter().map(|&e| e as u32).sum::<u32>() + self.odd_count()
    }

    pub fn is_empty(&self) -> bool {
        self.is_one()
    }

    /// Product of factorials of multiplicities (odd multiplicities are 1).
    pub fn multiplicity_factorial(&self) -> BigInt {
        let mut f = BigInt::one();
        for &e in &self.even {
            for k in 2..=e as u64 {
                f *= k;
            }
        }
        f
    }

    /// Exponent of index `i` (0 or 1 for odd indices).
    pub fn exp(&self, spec: VarSpec, i: u8) -> u16 {
        if spec.is_odd(i) {
            ((self.odd >> (i - spec.r - 1)) & 1) as u16
        } else {
            self.even[(i - 1) as usize]
        }
    }

    /// Merge `self * other`; `None` when an odd index repeats. The sign is
    /// the Koszul sign of interleaving `other`'s odd factors into place.
    pub fn mul(&self, other: &FamMono) -> Option<(i8, FamMono)> {
        if self.odd & other.odd != 0 {
            return None;
        }
        let mut out = *self;
        for (o, e) in out.even.iter_mut().zip(other.even.iter()) {
            *o += *e;
        }
        out.odd |= other.odd;
        // Inversions: each odd bit j of `other` must pass self's odd bits > j.
        let mut swaps = 0u32;
        let mut bits = other.odd;
        while bits != 0 {
            let j = bits.trailing_zeros();
            let higher = self.odd & !((1u16 << (j + 1)) as u8).wrapping_sub(1);
            swaps += higher.count_ones();
            bits &= bits - 1;
        }
        Some((if swaps.is_multiple_of(2) { 1 } else { -1 }, out))
    }

    /// Divide `self / other` exactly: returns `(sign, q)` with
    /// `q * other == sign * self` in normal form. `None` if not divisible.
    pub fn div(&self, other: &FamMono) -> Option<(i8, FamMono)> {
        if other.odd & !self.odd != 0 {
            return None;
        }
        let mut q = *self;
        for (s, o) in q.even.iter_mut().zip(other.even.iter()) {
            *s = s.checked_sub(*o)?;
        }
        q.odd &= !other.odd;
        let (sign, m) = q.mul(other).expect("disjoint odd sets");
        debug_assert_eq!(m, *self);
        Some((sign, q))
    }

    /// Left super-derivative by index `i`: `(coefficient, reduced monomial)`.
    /// For an even index the coefficient is the exponent; for an odd index it
    /// is the sign from moving the derivation past the lower odd factors.
    pub fn derive_left(&self, spec: VarSpec, i: u8) -> Option<(i64, FamMono)> {
        let mut out = *self;
        if spec.is_odd(i) {
            let bit = 1u8 << (i - spec.r - 1);
            if self.odd & bit == 0 {
                return None;
            }
            let before = (self.odd & (bit - 1)).count_ones();
            out.odd &= !bit;
            Some((if before.is_multiple_of(2) { 1 } else { -1 }, out))
        } else {
            let e = self.even[(i - 1) as usize];
            if e == 0 {
                return None;
            }
            out.even[(i - 1) as usize] = e - 1;
            Some((e as i64, out))
        }
    }

    /// Factor list in canonical order: even indices ascending with
    /// multiplicity, then odd indices ascending.
    pub fn factors(&self, spec: VarSpec) -> Vec<u8> {
        let mut v = Vec::with_capacity(self.len() as usize);
        for (k, &e) in self.even.iter().enumerate() {
            for _ in 0..e {
                v.push(k as u8 + 1);
            }
        }
        let mut bits = self.odd;
        while bits != 0 {
            let j = bits.trailing_zeros() as u8;
            v.push(spec.r + 1 + j);
            bits &= bits - 1;
        }
        v
    }
}

/// Monomial over the three families in canonical family-major order.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Debug)]
pub struct Monomial {
    pub fams: [FamMono; 3],
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(spec: VarSpec, fam: Family, i: u8) -> Self {
        let mut m = Monomial::default();
        m.fams[fam as usize] = FamMono::var(spec, i);
        m
    }

    pub fn from_fam(fam: Family, fm: FamMono) -> Self {
        let mut m = Monomial::default();
        m.fams[fam as usize] = fm;
        m
    }

    pub fn is_one(&self) -> bool {
        self.fams.iter().all(|f| f.is_one())
    }

    pub fn parity(&self) -> bool {
        self.fams.iter().map(|f| f.odd_count()).sum::<u32>() % 2 == 1
    }

    /// Grading: every lambda/mu/del factor has degree -2.
    pub fn degree(&self) -> i64 {
        -2 * self.fams.iter().map(|f| f.len() as i64).sum::<i64>()
    }

    pub fn fam(&self, fam: Family) -> &FamMono {
        &self.fams[fam as usize]
    }

    /// Koszul product of two monomials: `None` when an odd factor repeats.
    pub fn mul(&self, other: &Monomial) -> Option<(i8, Monomial)> {
        let mut sign = 1i8;
        let mut out = Monomial::default();
        // Cross-family swaps: other's odd factors in family f pass self's odd
        // factors in families strictly greater than f.
        let mut crossings = 0u32;
        for f in 0..3 {
            let ob = self.fams[f + 1..]
                .iter()
                .map(|m| m.odd_count())
                .sum::<u32>();
            crossings += ob * other.fams[f].odd_count();
        }
        if crossings % 2 == 1 {
            sign = -sign;
        }
        for f in 0..3 {
            let (s, m) = self.fams[f].mul(&other.fams[f])?;
            sign *= s;
            out.fams[f] = m;
        }
        Some((sign, out))
    }

    /// Sign of the left super-derivative operator for `(fam, i)` passing the
    /// odd factors that precede that position, and the reduced monomial.
    /// Only an odd derivation picks up crossing signs.
    pub fn derive_left(&self, spec: VarSpec, fam: Family, i: u8) -> Option<(i64, Monomial)> {
        let fi = fam as usize;
        let (c, reduced) = self.fams[fi].derive_left(spec, i)?;
        let mut coeff = c;
        if spec.is_odd(i) {
            let before: u32 = self.fams[..fi].iter().map(|m| m.odd_count()).sum();
            if before % 2 == 1 {
                coeff = -coeff;
            }
        }
        let mut out = *self;
        out.fams[fi] = reduced;
        Some((coeff, out))
    }

    /// Factor list in canonical order as `(family, index)` pairs.
    pub fn factors(&self, spec: VarSpec) -> Vec<(Family, u8)> {
        let mut v = Vec::new();
        for fam in FAMILIES {
            for i in self.fams[fam as usize].factors(spec) {
                v.push((fam, i));
            }
        }
        v
    }
}

/// Sparse super-polynomial in canonical normal form; no zero coefficients.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SuperPoly {
    pub spec: VarSpec,
    pub terms: BTreeMap<Monomial, Q>,
}

impl SuperPoly {
    pub fn zero(spec: VarSpec) -> Self {
        SuperPoly {
            spec,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(spec: VarSpec) -> Self {
        Self::constant(spec, Q::one())
    }

    pub fn constant(spec: VarSpec, c: Q) -> Self {
        let mut p = Self::zero(spec);
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn var(spec: VarSpec, fam: Family, i: u8) -> Self {
        let mut p = Self::zero(spec);
        p.add_term(Monomial::var(spec, fam, i), Q::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, m: Monomial, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn add(&self, other: &SuperPoly) -> SuperPoly {
        assert_eq!(self.spec, other.spec, "VarSpec mismatch");
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &SuperPoly) -> SuperPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> SuperPoly {
        let mut out = Self::zero(self.spec);
        for (m, c) in &self.terms {
            out.terms.insert(*m, -c.clone());
        }
        out
    }

    pub fn scale(&self, k: &Q) -> SuperPoly {
        if k.is_zero() {
            return Self::zero(self.spec);
        }
        let mut out = Self::zero(self.spec);
        for (m, c) in &self.terms {
            out.terms.insert(*m, c * k);
        }
        out
    }

    /// Super-commutative product with exact Koszul signs.
    pub fn mul(&self, other: &SuperPoly) -> SuperPoly {
        assert_eq!(self.spec, other.spec, "VarSpec mismatch");
        let mut out = Self::zero(self.spec);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                if let Some((sign, m)) = m1.mul(m2) {
                    let mut c = c1 * c2;
                    if sign < 0 {
                        c = -c;
                    }
                    out.add_term(m, c);
                }
            }
        }
        out
    }

    /// Checked product: the public `poly_mul` operation.
    pub fn poly_mul(&self, other: &SuperPoly) -> Result<SuperPoly, CoreError> {
        if self.spec != other.spec {
            return Err(CoreError::VarSpecMismatch);
        }
        Ok(self.mul(other))
    }

    /// Left super-derivation in family `fam` with respect to index `i`.
    pub fn derive(&self, fam: Family, i: u8) -> Result<SuperPoly, CoreError> {
        self.spec.check_index(i)?;
        let mut out = Self::zero(self.spec);
        for (m, c) in &self.terms {
            if let Some((k, rm)) = m.derive_left(self.spec, fam, i) {
                out.add_term(rm, c * qi(k));
            }
        }
        Ok(out)
    }

    /// Substitute each factor `(fam, i)` by `images(fam, i)` (a parity
    /// preserving linear image); factors without an image stay themselves.
    pub fn subst<F>(&self, images: F) -> SuperPoly
    where
        F: Fn(Family, u8) -> Option<SuperPoly>,
    {
        let mut out = Self::zero(self.spec);
        for (m, c) in &self.terms {
            let mut acc = Self::constant(self.spec, c.clone());
            for (fam, i) in m.factors(self.spec) {
                let img = match images(fam, i) {
                    Some(p) => p,
                    None => Self::var(self.spec, fam, i),
                };
                acc = acc.mul(&img);
                if acc.is_zero() {
                    break;
                }
            }
            out = out.add(&acc);
        }
        out
    }

    /// Coefficient of the exact family-`fam` monomial `k`, with the other
    /// families untouched. Canonical order makes this a plain read-off.
    pub fn coeff_of(&self, fam: Family, k: &FamMono) -> SuperPoly {
        let mut out = Self::zero(self.spec);
        for (m, c) in &self.terms {
            if m.fam(fam) == k {
                let mut rest = *m;
                rest.fams[fam as usize] = FamMono::one();
                out.add_term(rest, c.clone());
            }
        }
        out
    }

    /// Total degree when homogeneous, else `None`.
    pub fn homogeneous_degree(&self) -> Option<i64> {
        let mut deg = None;
        for m in self.terms.keys() {
            match deg {
                None => deg = Some(m.degree()),
                Some(d) if d == m.degree() => {}
                _ => return None,
            }
        }
        deg
    }

    pub fn parity(&self) -> Option<bool> {
        let mut p = None;
        for m in self.terms.keys() {
            match p {
                None => p = Some(m.parity()),
                Some(q) if q == m.parity() => {}
                _ => return None,
            }
        }
        p
    }
}

impl fmt::Display for SuperPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
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
            let factors = m.factors(self.spec);
            if !abs.is_one() || factors.is_empty() {
                write!(f, "{}", q_display(&abs))?;
                if !factors.is_empty() {
                    write!(f, " ")?;
                }
            }
            let mut sep = false;
            for (fam, i) in factors {
                if sep {
                    write!(f, " ")?;
                }
                write!(f, "{}{}", fam.letter(), i)?;
                sep = true;
            }
        }
        Ok(())
    }
}

/// An ordered sequence of variable indices (possibly with repeats).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct IndexSeq(pub Vec<u8>);

impl IndexSeq {
    pub fn new(entries: Vec<u8>) -> Self {
        IndexSeq(entries)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> IndexSeq {
        IndexSeq(self.0.iter().rev().copied().collect())
    }

    pub fn parity(&self, spec: VarSpec) -> bool {
        self.0.iter().filter(|&&i| spec.is_odd(i)).count() % 2 == 1
    }

    /// Number of odd entries.
    pub fn odd_count(&self, spec: VarSpec) -> usize {
        self.0.iter().filter(|&&i| spec.is_odd(i)).count()
    }

    /// Is this sequence canonical: weakly increasing, no repeated odd index.
    pub fn is_canonical(&self, spec: VarSpec) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
            && self
                .0
                .windows(2)
                .all(|w| !(w[0] == w[1] && spec.is_odd(w[0])))
    }

    /// Monomial of a canonical sequence (sign +1 by definition).
    pub fn to_mono(&self, spec: VarSpec) -> FamMono {
        debug_assert!(self.is_canonical(spec));
        let mut m = FamMono::one();
        for &i in &self.0 {
            if spec.is_odd(i) {
                m.odd |= 1 << (i - spec.r - 1);
            } else {
                m.even[(i - 1) as usize] += 1;
            }
        }
        m
    }

    /// All canonical sequences of a monomial's multiset.
    pub fn from_mono(spec: VarSpec, m: &FamMono) -> IndexSeq {
        IndexSeq(m.factors(spec))
    }
}

/// Sort a sequence into canonical order, returning the Koszul sign
/// (0 when an odd index repeats).
pub fn canonical_index(spec: VarSpec, k: &IndexSeq) -> Result<(i8, IndexSeq), CoreError> {
    for &i in &k.0 {
        spec.check_index(i)?;
    }
    let mut inversions = 0usize;
    let odd: Vec<u8> = k.0.iter().copied().filter(|&i| spec.is_odd(i)).collect();
    for a in 0..odd.len() {
        for b in a + 1..odd.len() {
            if odd[a] == odd[b] {
                let mut sorted = k.0.clone();
                sorted.sort_unstable();
                return Ok((0, IndexSeq(sorted)));
            }
            if odd[a] > odd[b] {
                inversions += 1;
            }
        }
    }
    let mut sorted = k.0.clone();
    sorted.sort_unstable();
    Ok((
        if inversions.is_multiple_of(2) { 1 } else { -1 },
        IndexSeq(sorted),
    ))
}

/// Multiplicity statistics of a sequence: `f = prod m_i!`, the parity, and
/// `eta = (-1)^(1+2+...+q)` where `q` counts odd entries.
pub fn seq_stats(spec: VarSpec, k: &IndexSeq) -> (BigInt, bool, i8) {
    let mut mult = [0u32; 32];
    for &i in &k.0 {
        mult[i as usize] += 1;
    }
    let mut f = BigInt::one();
    for m in mult {
        for j in 2..=m as u64 {
            f *= j;
        }
    }
    let q = k.odd_count(spec);
    let eta = if (q * (q + 1) / 2).is_multiple_of(2) {
        1
    } else {
        -1
    };
    (f, k.parity(spec), eta)
}

/// All splittings `I R ~ K` of a canonical sequence, with the sign defined by
/// `lambda_I lambda_R = sign * lambda_K`.
pub fn shift_split(spec: VarSpec, k: &IndexSeq) -> Vec<(IndexSeq, IndexSeq, i8)> {
    debug_assert!(k.is_canonical(spec));
    let m = k.to_mono(spec);
    let mut even_parts: Vec<(FamMono, FamMono)> = vec![(FamMono::one(), FamMono::one())];
    for idx in 0..spec.r as usize {
        let e = m.even[idx];
        let mut next = Vec::new();
        for (i_part, r_part) in &even_parts {
            for take in 0..=e {
                let mut i2 = *i_part;
                let mut r2 = *r_part;
                i2.even[idx] = take;
                r2.even[idx] = e - take;
                next.push((i2, r2));
            }
        }
        even_parts = next;
    }
    let mut out = Vec::new();
    let odd_bits: Vec<u8> = (0..8).filter(|b| m.odd & (1 << b) != 0).collect();
    for subset in 0..(1u16 << odd_bits.len()) {
        let mut i_odd = 0u8;
        let mut r_odd = 0u8;
        for (pos, &b) in odd_bits.iter().enumerate() {
            if subset & (1 << pos) != 0 {
                i_odd |= 1 << b;
            } else {
                r_odd |= 1 << b;
            }
        }
        for (i_part, r_part) in &even_parts {
            let mut im = *i_part;
            im.odd = i_odd;
            let mut rm = *r_part;
            rm.odd = r_odd;
            let (sign, prod) = im.mul(&rm).expect("disjoint odd split");
            debug_assert_eq!(prod, m);
            out.push((
                IndexSeq::from_mono(spec, &im),
                IndexSeq::from_mono(spec, &rm),
                sign,
            ));
        }
    }
    out
}

/// Enumerate all family monomials of total length `len`.
pub fn enumerate_monos(spec: VarSpec, len: u32) -> Vec<FamMono> {
    let mut out = Vec::new();
    for odd in 0..(1u16 << spec.s) {
        let oc = (odd as u8).count_ones();
        if oc > len {
            continue;
        }
        // distribute the remaining length over the even exponents
        let seed = FamMono { even: [0; MAX_EVEN], odd: odd as u8 };
        let mut stack = vec![(0usize, seed, len - oc)];
        while let Some((pos, m, left)) = stack.pop() {
            if pos == spec.r as usize {
                if left == 0 {
                    out.push(m);
                }
                continue;
            }
            if pos + 1 == spec.r as usize {
                let mut m2 = m;
                m2.even[pos] = left as u16;
                out.push(m2);
                continue;
            }
            for take in 0..=left {
                let mut m2 = m;
                m2.even[pos] = take as u16;
                stack.push((pos + 1, m2, left - take));
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(r: u8, s: u8) -> VarSpec {
        VarSpec::new(r, s)
    }

    #[test]
    fn canonical_index_mixed_parity() {
        // r=2, s=3, K=(2,3,2,1,5,4): lambda_K = -l1 l2^2 l3 l4 l5, f=2, p odd.
        let spec = sp(2, 3);
        let k = IndexSeq::new(vec![2, 3, 2, 1, 5, 4]);
        let (sign, sorted) = canonical_index(spec, &k).unwrap();
        assert_eq!(sign, -1);
        assert_eq!(sorted.0, vec![1, 2, 2, 3, 4, 5]);
        let (f, p, _) = seq_stats(spec, &k);
        assert_eq!(f, BigInt::from(2));
        assert!(p);
    }

    #[test]
    fn canonical_index_edges() {
        let spec = sp(1, 2);
        let (sign, sorted) = canonical_index(spec, &IndexSeq::new(vec![])).unwrap();
        assert_eq!((sign, sorted.0.len()), (1, 0));
        let (sign, _) = canonical_index(spec, &IndexSeq::new(vec![2, 2])).unwrap();
        assert_eq!(sign, 0);
        assert!(canonical_index(spec, &IndexSeq::new(vec![9])).is_err());
    }

    #[test]
    fn seq_stats_values() {
        let spec = sp(2, 2);
        // all-even triple
        let (f, p, eta) = seq_stats(spec, &IndexSeq::new(vec![1, 1, 1]));
        assert_eq!(f, BigInt::from(6));
        assert!(!p);
        assert_eq!(eta, 1);
        // two odd entries: eta = (-1)^3
        let (f, p, eta) = seq_stats(spec, &IndexSeq::new(vec![3, 4]));
        assert_eq!(f, BigInt::from(1));
        assert!(!p);
        assert_eq!(eta, -1);
    }

    #[test]
    fn odd_squares_and_anticommutation() {
        let spec = sp(2, 2);
        let l3 = SuperPoly::var(spec, Family::Lambda, 3);
        let l4 = SuperPoly::var(spec, Family::Lambda, 4);
        assert!(l4.mul(&l4).is_zero());
        let ab = l4.mul(&l3);
        let ba = l3.mul(&l4).neg();
        assert_eq!(ab, ba);
    }

    #[test]
    fn even_difference_of_squares() {
        let spec = sp(1, 0);
        let l1 = SuperPoly::var(spec, Family::Lambda, 1);
        let d1 = SuperPoly::var(spec, Family::Del, 1);
        let prod = l1.add(&d1).mul(&l1.sub(&d1));
        let expect = l1.mul(&l1).sub(&d1.mul(&d1));
        assert_eq!(prod, expect);
    }

    #[test]
    fn derive_cases() {
        let spec = sp(2, 2);
        let l1 = SuperPoly::var(spec, Family::Lambda, 1);
        let cube = l1.mul(&l1).mul(&l1);
        let d = cube.derive(Family::Lambda, 1).unwrap();
        assert_eq!(d, l1.mul(&l1).scale(&qi(3)));
        // d/dl4 (l3 l4) = -l3 for odd l3, l4
        let l3 = SuperPoly::var(spec, Family::Lambda, 3);
        let l4 = SuperPoly::var(spec, Family::Lambda, 4);
        let p = l3.mul(&l4);
        assert_eq!(p.derive(Family::Lambda, 4).unwrap(), l3.neg());
        // d/dl2 (l1) = 0
        assert!(l1.derive(Family::Lambda, 2).unwrap().is_zero());
    }

    #[test]
    fn shift_split_binomial_oracle() {
        // K=(1,1): reassembly must reproduce (l1+m1)^2 binomially.
        let spec = sp(2, 2);
        let k = IndexSeq::new(vec![1, 1]);
        let splits = shift_split(spec, &k);
        assert_eq!(splits.len(), 3);
        check_reassembly(spec, &k);
        // trivial and linear-odd cases
        assert_eq!(shift_split(spec, &IndexSeq::new(vec![])).len(), 1);
        let splits = shift_split(spec, &IndexSeq::new(vec![3]));
        assert_eq!(splits.len(), 2);
        assert!(splits.iter().all(|(_, _, s)| *s == 1));
    }

    /// (1/f(K)) (lambda+mu)_K == sum sign/(f(I)f(R)) lambda_I mu_R, exactly.
    fn check_reassembly(spec: VarSpec, k: &IndexSeq) {
        let lhs = {
            let mut acc = SuperPoly::one(spec);
            for &i in &k.0 {
                let term = SuperPoly::var(spec, Family::Lambda, i).add(&SuperPoly::var(
                    spec,
                    Family::Mu,
                    i,
                ));
                acc = acc.mul(&term);
            }
            let (f, _, _) = seq_stats(spec, k);
            acc.scale(&Q::new(BigInt::one(), f))
        };
        let mut rhs = SuperPoly::zero(spec);
        for (i_seq, r_seq, sign) in shift_split(spec, k) {
            let mut term = SuperPoly::constant(spec, qi(sign as i64));
            for &i in &i_seq.0 {
                term = term.mul(&SuperPoly::var(spec, Family::Lambda, i));
            }
            for &i in &r_seq.0 {
                term = term.mul(&SuperPoly::var(spec, Family::Mu, i));
            }
            let (fi, _, _) = seq_stats(spec, &i_seq);
            let (fr, _, _) = seq_stats(spec, &r_seq);
            rhs = rhs.add(&term.scale(&Q::new(BigInt::one(), fi * fr)));
        }
        assert_eq!(lhs, rhs, "reassembly failed for {:?}", k.0);
    }

    #[test]
    fn shift_split_reassembly_exhaustive() {
        // All canonical K with len <= 4 over (r,s) <= (2,2).
        for r in 0..=2u8 {
            for s in 0..=2u8 {
                if r + s == 0 {
                    continue;
                }
                let spec = sp(r, s);
                for len in 0..=4u32 {
                    for m in enumerate_monos(spec, len) {
                        let k = IndexSeq::from_mono(spec, &m);
                        check_reassembly(spec, &k);
                    }
                }
            }
        }
    }

    #[test]
    fn coeff_of_reads_off() {
        let spec = sp(1, 1);
        // p = l1^2 * d1: coefficient of l1^2 is d1
        let l1 = SuperPoly::var(spec, Family::Lambda, 1);
        let d1 = SuperPoly::var(spec, Family::Del, 1);
        let p = l1.mul(&l1).mul(&d1);
        let k = IndexSeq::new(vec![1, 1]).to_mono(spec);
        assert_eq!(p.coeff_of(Family::Lambda, &k), d1);
    }

    #[test]
    fn degree_additivity() {
        let spec = sp(2, 1);
        let p = SuperPoly::var(spec, Family::Lambda, 1).mul(&SuperPoly::var(spec, Family::Del, 3));
        assert_eq!(p.homogeneous_degree(), Some(-4));
    }

    #[test]
    fn supercommutativity_exhaustive_small() {
        // all monomial pairs of length <= 2 over one even and two odd vars
        let spec = sp(1, 2);
        let mut monos = vec![Monomial::one()];
        for len in 1..=2u32 {
            for fam in FAMILIES {
                for m in enumerate_monos(spec, len) {
                    monos.push(Monomial::from_fam(fam, m));
                }
            }
        }
        for a in &monos {
            for b in &monos {
                match (a.mul(b), b.mul(a)) {
                    (None, None) => {}
                    (Some((s1, m1)), Some((s2, m2))) => {
                        assert_eq!(m1, m2);
                        let expect = if a.parity() && b.parity() { -s2 } else { s2 };
                        assert_eq!(s1, expect, "{a:?} * {b:?}");
                    }
                    _ => panic!("zero mismatch"),
                }
            }
        }
    }

    #[test]
    fn enumerate_monos_counts() {
        // (2,0): monomials of length 2 in two even vars: 3
        assert_eq!(enumerate_monos(sp(2, 0), 2).len(), 3);
        // (0,2): length 1: two odd vars
        assert_eq!(enumerate_monos(sp(0, 2), 1).len(), 2);
        // (1,1): length 2: y1^2, y1 y2
        assert_eq!(enumerate_monos(sp(1, 1), 2).len(), 2);
    }
}
