//! Positive-existential definability laboratory over rings of S-integers in
//! `F_p(t)`, `p` odd: ring invariants, the unit-avoiding pair behind the
//! disequality formula, square definitions on units and on the whole ring,
//! and empirical validation of the emitted formulas.
//!
//! All constant searches are deterministic scans with explicit certificates;
//! running past a search bound is an error, never a loop. The hard
//! directions of the definability statements are theorems, not runtime
//! checks: validation constructs witnesses for members of the target
//! relation and runs bounded searches against non-members.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

use crate::fraction::FieldElem;
use crate::places::{factor, kornblum_search_filtered, Irreducibles, Place, RingSpec, FACTOR_BOUND};
use crate::rng::SplitMix64;
use crate::scalar::{Base, PolyFp, Scalar};

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DeflabError {
    EvenCharacteristic,
    WrongMode,
    SearchExhausted(String),
}

impl fmt::Display for DeflabError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeflabError::EvenCharacteristic => write!(f, "the base field must have odd characteristic"),
            DeflabError::WrongMode => write!(f, "definability lab requires a finite-S ring over F_p[t]"),
            DeflabError::SearchExhausted(what) => write!(f, "search bound exhausted: {}", what),
        }
    }
}

impl std::error::Error for DeflabError {}

/// Degree cap for the unit-avoiding pair scan.
pub const LENSTRA_MAX_DEGREE: usize = 8;
/// Degree cap for irreducible family construction.
pub const FAMILY_MAX_DEGREE: usize = 14;

fn check_ring(ring: &RingSpec) -> Result<u64, DeflabError> {
    let Base::Poly { p } = ring.base() else {
        return Err(DeflabError::WrongMode);
    };
    if ring.is_cofinite() {
        return Err(DeflabError::WrongMode);
    }
    if p == 2 {
        return Err(DeflabError::EvenCharacteristic);
    }
    Ok(p)
}

/// Finite-place generators of `S`, sorted by degree then coefficients so the
/// lab's output does not depend on the order the places were listed in.
pub fn s_fin_generators(ring: &RingSpec) -> Vec<PolyFp> {
    let mut gens: Vec<PolyFp> = ring
        .s_places()
        .iter()
        .filter_map(|pl| match pl {
            Place::Irreducible(q) => Some(q.clone()),
            _ => None,
        })
        .collect();
    gens.sort_by_key(|g| (g.degree().unwrap(), g.coeffs().to_vec()));
    gens
}

fn below_s_fin(gens: &[PolyFp], q: &PolyFp) -> bool {
    gens.iter().any(|g| g == q)
}

// ---------------------------------------------------------------------------
// Ring invariants and the derived constants
// ---------------------------------------------------------------------------

/// Invariants of the ring and the constants driving the square formula:
/// sizes of `S`, the maximal place degree, the order bound on finite-place
/// multiplicities, and the doubling-chain length.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RingInvariants {
    /// Size of the constant field.
    pub constant_field_size: u64,
    /// Ideal class number of the base ring (1 for a rational function field).
    pub class_number: u32,
    pub s_total: usize,
    pub s_finite: usize,
    pub s_infinite: usize,
    /// Largest degree of a place in `S`.
    pub max_place_degree: i64,
    /// Bound on the number of places above each finite base prime (1 here).
    pub primes_above_bound: u32,
    /// Infinite-place denominator bound; zero with a single infinite place.
    pub c1: i64,
    /// Largest finite-place order of the shifted family members.
    pub c3: i64,
    /// Growth constant: chosen so `-n0*n` dominates the budget inequality
    /// for every `n <= -1`.
    pub n0: i64,
    /// Doubling-chain length `N` with `2^(N-1) >= n0`.
    pub chain_length: u32,
    /// `2^(chain_length - 1)`.
    pub n1: u64,
    /// Free generators of the unit group (the constants complete it).
    pub unit_generators: Vec<PolyFp>,
}

pub fn compute_invariants(ring: &RingSpec) -> Result<RingInvariants, DeflabError> {
    let p = check_ring(ring)?;
    let gens = s_fin_generators(ring);
    let s_finite = gens.len();
    let s_infinite = ring.s_places().len() - s_finite;
    debug_assert_eq!(s_infinite, 1);
    let s_total = s_finite + s_infinite;
    let max_place_degree = ring
        .s_places()
        .iter()
        .map(Place::degree)
        .max()
        .expect("S is nonempty");
    let class_number = 1u32;
    let primes_above_bound = 1u32;
    let c1 = 0i64;
    // Shifted-family members avoid the finite places of S, so only the
    // multi-index contributes: its entries range over 1..=2r+1.
    let c3 = if s_finite > 0 { 2 * primes_above_bound as i64 + 1 } else { 0 };
    let s = s_total as i64;
    let d = max_place_degree;
    let h = class_number as i64;
    let si = s_infinite as i64;
    let slope = s * si * d * d * (4 + s * d);
    let offset = 3 * s * d * h + s * si * d * d * c3;
    let n0 = offset + slope + 1;
    for n in -10..=-1i64 {
        assert!(
            -n0 * n > 3 * s * d * h - s * si * d * d * ((4 + s * d) * n - c3),
            "growth constant fails its defining inequality at n = {}",
            n
        );
    }
    let mut chain_length = 1u32;
    while (1u64 << (chain_length - 1)) < n0 as u64 {
        chain_length += 1;
    }
    let n1 = 1u64 << (chain_length - 1);
    let _ = p;
    Ok(RingInvariants {
        constant_field_size: p,
        class_number,
        s_total,
        s_finite,
        s_infinite,
        max_place_degree,
        primes_above_bound,
        c1,
        c3,
        n0,
        chain_length,
        n1,
        unit_generators: gens,
    })
}

// ---------------------------------------------------------------------------
// The unit-avoiding pair
// ---------------------------------------------------------------------------

/// Pair `(q, b)` with `q` irreducible away from `S`, `deg b < deg q`, and
/// `q*x + b` never a unit, certified by the closure of the unit-group image
/// in the residue field at `q`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LenstraPair {
    pub q: PolyFp,
    pub b: PolyFp,
    /// Image of the unit group in the residue field, closed under products.
    pub subgroup: Vec<PolyFp>,
    pub group_order: u64,
}

impl LenstraPair {
    /// Re-verify the certificate: the listed set contains the generators'
    /// residues, is closed under multiplication, and misses `b`.
    pub fn verify(&self, ring: &RingSpec) -> bool {
        let gens = s_fin_generators(ring);
        let p = self.q.modulus();
        let set: BTreeSet<Vec<u64>> = self.subgroup.iter().map(|g| g.coeffs().to_vec()).collect();
        for c in 1..p {
            if !set.contains(&PolyFp::constant(p, c).coeffs().to_vec()) {
                return false;
            }
        }
        for g in &gens {
            if !set.contains(&g.rem(&self.q).coeffs().to_vec()) {
                return false;
            }
        }
        for a in &self.subgroup {
            for b in &self.subgroup {
                if !set.contains(&a.mul(b).rem(&self.q).coeffs().to_vec()) {
                    return false;
                }
            }
        }
        (self.subgroup.len() as u64) < self.group_order
            && !set.contains(&self.b.rem(&self.q).coeffs().to_vec())
            && !self.b.is_zero()
            && self.b.degree() < self.q.degree()
    }
}

/// Scan irreducibles in canonical order for the first one whose residue
/// field is not exhausted by the unit-group image, and pick the first
/// residue outside the image.
pub fn lenstra_pair(ring: &RingSpec) -> Result<LenstraPair, DeflabError> {
    let p = check_ring(ring)?;
    let gens = s_fin_generators(ring);
    for q in Irreducibles::new(Base::Poly { p }) {
        let q = q.as_poly().clone();
        if q.degree().unwrap() > LENSTRA_MAX_DEGREE {
            return Err(DeflabError::SearchExhausted(
                "no residue field escapes the unit image".into(),
            ));
        }
        if below_s_fin(&gens, &q) {
            continue;
        }
        let d = q.degree().unwrap() as u32;
        let group_order = p.pow(d) - 1;
        // Subgroup closure from the generators' residues.
        let mut set: BTreeSet<Vec<u64>> = BTreeSet::new();
        let mut work: Vec<PolyFp> = Vec::new();
        for c in 1..p {
            work.push(PolyFp::constant(p, c));
        }
        for g in &gens {
            work.push(g.rem(&q));
        }
        let mut members: Vec<PolyFp> = Vec::new();
        while let Some(el) = work.pop() {
            if set.insert(el.coeffs().to_vec()) {
                for m in &members {
                    work.push(m.mul(&el).rem(&q));
                }
                work.push(el.mul(&el).rem(&q));
                members.push(el);
            }
        }
        if (set.len() as u64) == group_order {
            continue;
        }
        // First residue (by degree, then lexicographic) outside the image.
        let b = nonzero_polys_below(p, q.degree().unwrap())
            .into_iter()
            .find(|cand| !set.contains(&cand.coeffs().to_vec()))
            .expect("a proper subgroup misses some residue");
        let mut subgroup: Vec<PolyFp> = set.into_iter().map(|c| PolyFp::new(p, c)).collect();
        subgroup.sort_by_key(|g| (g.degree().map_or(0, |d| d + 1), g.coeffs().to_vec()));
        let pair = LenstraPair { q, b, subgroup, group_order };
        debug_assert!(pair.verify(ring));
        return Ok(pair);
    }
    unreachable!("irreducible stream is infinite")
}

/// Nonzero polynomials of degree below `d`, by degree then lexicographic
/// (leading coefficient most significant).
fn nonzero_polys_below(p: u64, d: usize) -> Vec<PolyFp> {
    let mut out = Vec::new();
    for deg in 0..d {
        for lead in 1..p {
            for idx in 0..p.pow(deg as u32) {
                let mut coeffs = vec![0u64; deg + 1];
                let mut k = idx;
                for c in coeffs.iter_mut().take(deg) {
                    *c = k % p;
                    k /= p;
                }
                // Lexicographic with high coefficients significant.
                coeffs[..deg].reverse();
                coeffs[deg] = lead;
                out.push(PolyFp::new(p, coeffs));
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Units congruent to one
// ---------------------------------------------------------------------------

/// A unit given as a power of a finite-place generator; large exponents stay
/// symbolic and are checked by modular exponentiation.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct UnitPower {
    pub generator: PolyFp,
    pub exponent: BigUint,
}

impl UnitPower {
    pub fn is_infinite_order(&self) -> bool {
        self.generator.degree().map_or(false, |d| d >= 1) && !self.exponent.is_zero()
    }

    /// `self - 1 = 0 (mod m)`, checked by square-and-multiply.
    pub fn congruent_one_mod(&self, m: &PolyFp) -> bool {
        if m.is_constant() {
            return true;
        }
        self.generator.pow_mod(&self.exponent, m).is_one()
    }

    /// Materialize the polynomial when it is small enough to handle.
    pub fn value_if_small(&self, max_degree: usize) -> Option<FieldElem> {
        let deg = self.generator.degree()? as u64;
        let total = self.exponent.clone() * deg;
        let total = total.to_u64()?;
        if total as usize > max_degree {
            return None;
        }
        let mut acc = PolyFp::one(self.generator.modulus());
        let mut base = self.generator.clone();
        let mut e = self.exponent.clone();
        while !e.is_zero() {
            if e.bit(0) {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if !e.is_zero() {
                base = base.mul(&base);
            }
        }
        Some(FieldElem::from_scalar(Scalar::Poly(acc)))
    }

    pub fn squared(&self) -> UnitPower {
        UnitPower {
            generator: self.generator.clone(),
            exponent: &self.exponent * 2u32,
        }
    }
}

impl fmt::Display for UnitPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.generator.degree() == Some(1) && self.generator.coeff(0) == 0 {
            write!(f, "t^{}", self.exponent)
        } else {
            write!(f, "({})^{}", self.generator, self.exponent)
        }
    }
}

/// Strip the finite `S`-factors out of a polynomial and return the monic
/// remainder; divisibility by ring elements only sees this part.
pub fn strip_s_factors(ring: &RingSpec, q: &PolyFp) -> PolyFp {
    let mut q = q.clone();
    for g in s_fin_generators(ring) {
        loop {
            let (quot, rem) = q.divrem(&g);
            if rem.is_zero() && !quot.is_zero() {
                q = quot;
            } else {
                break;
            }
        }
    }
    if q.is_zero() {
        q
    } else {
        q.make_monic().0
    }
}

/// Exponent that annihilates the residue group modulo `m`: the least common
/// multiple of the unit-group orders of the prime-power factors.
pub fn residue_group_exponent(m: &PolyFp) -> BigUint {
    let p = m.modulus();
    let facts = factor(&Scalar::Poly(m.clone()), FACTOR_BOUND).expect("polynomial factorization");
    let mut acc = BigUint::one();
    for (place, mult) in facts.factors {
        let d = match place {
            Place::Irreducible(q) => q.degree().unwrap() as u32,
            _ => unreachable!(),
        };
        let order = (BigUint::from(p).pow(d) - 1u32) * BigUint::from(p).pow(d * (mult - 1));
        acc = &acc / acc.gcd(&order) * order;
    }
    acc
}

/// A unit of infinite order congruent to 1 modulo `x`. The generator is the
/// first finite place of `S`; the exponent kills the residue group of the
/// non-`S` part of `x`.
pub fn find_unit_congruent_one(x: &FieldElem, ring: &RingSpec) -> Result<UnitPower, DeflabError> {
    check_ring(ring)?;
    assert!(!x.is_zero(), "modulus must be nonzero");
    assert!(ring.is_member(x), "modulus must lie in the ring");
    let gens = s_fin_generators(ring);
    let eps0 = gens.first().expect("S has a finite place").clone();
    let core = strip_s_factors(ring, x.numerator().as_poly());
    if core.is_constant() {
        return Ok(UnitPower { generator: eps0, exponent: BigUint::one() });
    }
    let exponent = residue_group_exponent(&core);
    let eps = UnitPower { generator: eps0, exponent };
    debug_assert!(eps.congruent_one_mod(&core));
    Ok(eps)
}

// ---------------------------------------------------------------------------
// Formula objects
// ---------------------------------------------------------------------------

/// Multivariate polynomial term over the formula's variables; coefficients
/// are ring elements (fractions with poles inside `S`).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DefTerm {
    pub monomials: Vec<(FieldElem, Vec<(usize, u32)>)>,
}

impl DefTerm {
    pub fn constant(c: FieldElem) -> DefTerm {
        DefTerm { monomials: vec![(c, Vec::new())] }
    }

    pub fn var(base: Base, v: usize) -> DefTerm {
        DefTerm { monomials: vec![(FieldElem::one(base), vec![(v, 1)])] }
    }

    pub fn scaled_var(c: FieldElem, v: usize) -> DefTerm {
        DefTerm { monomials: vec![(c, vec![(v, 1)])] }
    }

    pub fn scaled_square(c: FieldElem, v: usize) -> DefTerm {
        DefTerm { monomials: vec![(c, vec![(v, 2)])] }
    }

    pub fn scaled_product(c: FieldElem, v: usize, w: usize) -> DefTerm {
        if v == w {
            return DefTerm::scaled_square(c, v);
        }
        DefTerm { monomials: vec![(c, vec![(v, 1), (w, 1)])] }
    }

    pub fn add(mut self, other: DefTerm) -> DefTerm {
        self.monomials.extend(other.monomials);
        self
    }

    pub fn eval(&self, assignment: &[FieldElem], base: Base) -> FieldElem {
        let mut acc = FieldElem::zero(base);
        for (c, vars) in &self.monomials {
            let mut term = c.clone();
            for &(v, e) in vars {
                for _ in 0..e {
                    term = term.mul(&assignment[v]);
                }
            }
            acc = acc.add(&term);
        }
        acc
    }

    pub fn vars(&self) -> Vec<usize> {
        let mut vs: Vec<usize> = self
            .monomials
            .iter()
            .flat_map(|(_, m)| m.iter().map(|&(v, _)| v))
            .collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    fn display(&self, names: &[String]) -> String {
        if self.monomials.is_empty() {
            return "0".to_string();
        }
        let parts: Vec<String> = self
            .monomials
            .iter()
            .map(|(c, vars)| {
                let mut s = String::new();
                let coeff = c.to_string();
                if vars.is_empty() {
                    return coeff;
                }
                if coeff != "1" {
                    if coeff.contains('+') || coeff.contains('/') && !coeff.starts_with('(') {
                        s.push_str(&format!("({})", coeff));
                    } else {
                        s.push_str(&coeff);
                    }
                    s.push('*');
                }
                let vs: Vec<String> = vars
                    .iter()
                    .map(|&(v, e)| {
                        if e == 1 {
                            names[v].clone()
                        } else {
                            format!("{}^{}", names[v], e)
                        }
                    })
                    .collect();
                s.push_str(&vs.join("*"));
                s
            })
            .collect();
        parts.join(" + ")
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum DefAtom {
    /// Ring divisibility of the two term values.
    Div(DefTerm, DefTerm),
    Eq(DefTerm, DefTerm),
    /// The variable holds a unit of infinite order (a non-constant unit).
    NonTorsionUnit(usize),
}

impl DefAtom {
    pub fn holds(&self, assignment: &[FieldElem], ring: &RingSpec) -> bool {
        let base = ring.base();
        match self {
            DefAtom::Div(a, b) => ring.divides(&a.eval(assignment, base), &b.eval(assignment, base)),
            DefAtom::Eq(a, b) => a.eval(assignment, base) == b.eval(assignment, base),
            DefAtom::NonTorsionUnit(v) => {
                let x = &assignment[*v];
                ring.is_unit(x)
                    && !(x.numerator().as_poly().is_constant() && x.denominator().is_one())
            }
        }
    }

    fn display(&self, names: &[String]) -> String {
        match self {
            DefAtom::Div(a, b) => format!("{} | {}", a.display(names), b.display(names)),
            DefAtom::Eq(a, b) => format!("{} = {}", a.display(names), b.display(names)),
            DefAtom::NonTorsionUnit(v) => format!("inf_order({})", names[*v]),
        }
    }
}

/// One disjunct: an existential block over the bound variables and a
/// conjunction of atoms.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DefBranch {
    pub bound: Vec<usize>,
    pub atoms: Vec<DefAtom>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DefKind {
    /// Defines `y != 0`.
    Neq,
    /// Defines `y = x^2` on units.
    SquareUnits,
    /// Defines `y = x^2` on the whole ring.
    Square,
}

/// A positive-existential defining formula with its constant slots filled.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct DefFormula {
    pub kind: DefKind,
    pub names: Vec<String>,
    pub free_count: usize,
    pub branches: Vec<DefBranch>,
}

impl DefFormula {
    /// Truth under a full assignment to free and bound variables: some
    /// branch has all atoms satisfied.
    pub fn holds_at(&self, assignment: &[FieldElem], ring: &RingSpec) -> bool {
        self.branches
            .iter()
            .any(|b| b.atoms.iter().all(|a| a.holds(assignment, ring)))
    }
}

impl fmt::Display for DefFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = match self.kind {
            DefKind::Neq => "psi_neq",
            DefKind::SquareUnits => "sq_u",
            DefKind::Square => "phi_sq",
        };
        let frees: Vec<String> = self.names[..self.free_count].to_vec();
        writeln!(f, "{}({}) :=", head, frees.join(", "))?;
        for (i, branch) in self.branches.iter().enumerate() {
            let sep = if i == 0 { "   " } else { " | " };
            let mut line = String::new();
            if !branch.bound.is_empty() {
                let bs: Vec<String> = branch.bound.iter().map(|&v| self.names[v].clone()).collect();
                line.push_str(&format!("E {} . ", bs.join(" ")));
            }
            let atoms: Vec<String> = branch.atoms.iter().map(|a| a.display(&self.names)).collect();
            line.push_str(&atoms.join(" & "));
            writeln!(f, "{}{}", sep, line)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Emitters
// ---------------------------------------------------------------------------

/// `psi_neq(y) : E A B x ( y | A  &  q*x + b | B  &  A + B = 1 )`.
pub fn emit_neq(ring: &RingSpec) -> Result<(DefFormula, LenstraPair), DeflabError> {
    let p = check_ring(ring)?;
    let pair = lenstra_pair(ring)?;
    let base = Base::Poly { p };
    let qx_plus_b = DefTerm::scaled_var(FieldElem::from_scalar(Scalar::Poly(pair.q.clone())), 3)
        .add(DefTerm::constant(FieldElem::from_scalar(Scalar::Poly(pair.b.clone()))));
    let formula = DefFormula {
        kind: DefKind::Neq,
        names: vec!["y".into(), "A".into(), "B".into(), "x".into()],
        free_count: 1,
        branches: vec![DefBranch {
            bound: vec![1, 2, 3],
            atoms: vec![
                DefAtom::Div(DefTerm::var(base, 0), DefTerm::var(base, 1)),
                DefAtom::Div(qx_plus_b, DefTerm::var(base, 2)),
                DefAtom::Eq(
                    DefTerm::var(base, 1).add(DefTerm::var(base, 2)),
                    DefTerm::constant(FieldElem::one(base)),
                ),
            ],
        }],
    };
    Ok((formula, pair))
}

/// Multi-indices in `{lo..=hi}^k`, lexicographic.
pub fn multi_indices(lo: u32, hi: u32, k: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for prefix in &out {
            for v in lo..=hi {
                let mut item = prefix.clone();
                item.push(v);
                next.push(item);
            }
        }
        out = next;
    }
    out
}

fn power_product(gens: &[PolyFp], alpha: &[u32], base: Base) -> FieldElem {
    let mut acc = FieldElem::one(base);
    for (g, &e) in gens.iter().zip(alpha) {
        let gf = FieldElem::from_scalar(Scalar::Poly(g.clone()));
        for _ in 0..e {
            acc = acc.mul(&gf);
        }
    }
    acc
}

/// Irreducible families for the unit-square formula: one block per distinct
/// degree, each block holding `count` same-degree irreducibles away from `S`.
fn same_degree_blocks(
    p: u64,
    gens: &[PolyFp],
    blocks: usize,
    count: usize,
) -> Result<Vec<Vec<PolyFp>>, DeflabError> {
    let mut out = Vec::new();
    let mut degree = 1usize;
    while out.len() < blocks {
        if degree > FAMILY_MAX_DEGREE {
            return Err(DeflabError::SearchExhausted("same-degree irreducible block".into()));
        }
        let mut block = Vec::new();
        for q in Irreducibles::new(Base::Poly { p }) {
            let q = q.as_poly().clone();
            if q.degree().unwrap() > degree {
                break;
            }
            if q.degree().unwrap() == degree && !below_s_fin(gens, &q) {
                block.push(q);
                if block.len() == count {
                    break;
                }
            }
        }
        if block.len() == count {
            out.push(block);
        }
        degree += 1;
    }
    Ok(out)
}

/// Distinct-degree irreducibles away from `S`, scanned in canonical order.
fn distinct_degree_family(
    p: u64,
    gens: &[PolyFp],
    count: usize,
    min_degree_exclusive: i64,
) -> Result<Vec<PolyFp>, DeflabError> {
    let mut out: Vec<PolyFp> = Vec::new();
    for q in Irreducibles::new(Base::Poly { p }) {
        let q = q.as_poly().clone();
        let d = q.degree().unwrap();
        if d > FAMILY_MAX_DEGREE {
            return Err(DeflabError::SearchExhausted("distinct-degree irreducible family".into()));
        }
        if (d as i64) <= min_degree_exclusive || below_s_fin(gens, &q) {
            continue;
        }
        if out.iter().any(|r| r.degree() == q.degree()) {
            continue;
        }
        out.push(q);
        if out.len() == count {
            return Ok(out);
        }
    }
    unreachable!("irreducible stream is infinite")
}

/// Constants of the unit-square formula.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SquConstants {
    /// `q[j][i]`: same degree across `i`, pairwise distinct degrees across `j`.
    pub families: Vec<Vec<PolyFp>>,
    pub alphas: Vec<Vec<u32>>,
}

/// `sq_u(x, y) : x | 1 & y | 1 & conj of mutual divisibilities of the
/// shifted pairs.`
pub fn emit_squ(ring: &RingSpec) -> Result<(DefFormula, SquConstants), DeflabError> {
    let p = check_ring(ring)?;
    let inv = compute_invariants(ring)?;
    let gens = &inv.unit_generators;
    let base = Base::Poly { p };
    let blocks = 2 * inv.s_infinite + 1;
    let count = inv.constant_field_size as usize;
    let families = same_degree_blocks(p, gens, blocks, count)?;
    // Side conditions: same degree within a block, distinct degrees across
    // blocks, and no member below a finite place of S.
    for block in &families {
        assert!(block.iter().all(|q| q.degree() == block[0].degree()));
        assert!(block.iter().all(|q| !below_s_fin(gens, q)));
    }
    for (i, a) in families.iter().enumerate() {
        for b in families.iter().skip(i + 1) {
            assert_ne!(a[0].degree(), b[0].degree());
        }
    }
    let alphas = multi_indices(0, 2 * inv.primes_above_bound + 1, inv.s_finite);
    let mut atoms = vec![
        DefAtom::Div(DefTerm::var(base, 0), DefTerm::constant(FieldElem::one(base))),
        DefAtom::Div(DefTerm::var(base, 1), DefTerm::constant(FieldElem::one(base))),
    ];
    for alpha in &alphas {
        let pa = power_product(gens, alpha, base);
        for block in &families {
            for q in block {
                let qf = FieldElem::from_scalar(Scalar::Poly(q.clone()));
                let lhs = DefTerm::scaled_var(pa.clone(), 0).add(DefTerm::constant(qf.clone()));
                let rhs = DefTerm::scaled_var(pa.clone(), 1).add(DefTerm::scaled_var(qf.clone(), 0));
                atoms.push(DefAtom::Div(lhs.clone(), rhs.clone()));
                atoms.push(DefAtom::Div(rhs, lhs));
            }
        }
    }
    let formula = DefFormula {
        kind: DefKind::SquareUnits,
        names: vec!["x".into(), "y".into()],
        free_count: 2,
        branches: vec![DefBranch { bound: Vec::new(), atoms }],
    };
    Ok((formula, SquConstants { families, alphas }))
}

/// Constants of the full square formula.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SqConstants {
    pub invariants: RingInvariants,
    /// Distinct-degree family indexed by the widest range the formula uses.
    pub q_family: Vec<PolyFp>,
    pub r_family: Vec<PolyFp>,
    pub s_family: Vec<PolyFp>,
    /// The congruence anchor with `deg q > h * s_f * D`.
    pub q_anchor: PolyFp,
    pub alphas: Vec<Vec<u32>>,
    pub betas: Vec<Vec<u32>>,
}

/// `phi_sq(x, y)`: the zero branch, the exceptional branches
/// `x = -P^(-a) q_j, y = P^(-2a) q_j^2`, and the unit-chain branch with the
/// shifted divisibilities and the doubling chain.
pub fn emit_sq(ring: &RingSpec) -> Result<(DefFormula, SqConstants), DeflabError> {
    let p = check_ring(ring)?;
    let inv = compute_invariants(ring)?;
    let gens = &inv.unit_generators;
    let base = Base::Poly { p };
    let q_family = distinct_degree_family(p, gens, 4 * inv.s_infinite + 1, 0)?;
    let r_family = distinct_degree_family(p, gens, inv.s_infinite + 1, 0)?;
    let s_family = distinct_degree_family(p, gens, inv.s_infinite + 1, 0)?;
    let q_anchor = distinct_degree_family(
        p,
        gens,
        1,
        inv.class_number as i64 * inv.s_finite as i64 * inv.max_place_degree,
    )?
    .pop()
    .unwrap();
    // Gap conditions at the infinite place: distinct degrees give distinct
    // orders, and differences have negative order, beating -2*C1 and
    // -(N1+1)*C1 since C1 = 0 here.
    let check_gaps = |family: &[PolyFp], bound: i64| {
        for (i, a) in family.iter().enumerate() {
            for b in family.iter().skip(i + 1) {
                assert_ne!(a.degree(), b.degree());
                let diff = a.sub(b);
                let ord_inf = -(diff.degree().unwrap() as i64);
                assert!(ord_inf < bound);
            }
        }
    };
    check_gaps(&q_family, -2 * inv.c1);
    check_gaps(&s_family, -(inv.n1 as i64 + 1) * inv.c1);
    assert!(
        (q_anchor.degree().unwrap() as i64)
            > inv.class_number as i64 * inv.s_finite as i64 * inv.max_place_degree
    );

    let n = inv.chain_length as usize;
    let mut names = vec!["x".to_string(), "y".to_string()];
    for i in 1..=n {
        names.push(format!("eps{}", i));
    }
    let eps = |i: usize| 2 + (i - 1); // variable index of eps_i, 1-based

    let alphas = multi_indices(1, 3 * inv.primes_above_bound + 1, inv.s_finite);
    let betas = multi_indices(1, 2 * inv.primes_above_bound + 1, inv.s_finite);

    let mut branches = Vec::new();
    // x = 0 and y = 0.
    branches.push(DefBranch {
        bound: Vec::new(),
        atoms: vec![
            DefAtom::Eq(DefTerm::var(base, 0), DefTerm::constant(FieldElem::zero(base))),
            DefAtom::Eq(DefTerm::var(base, 1), DefTerm::constant(FieldElem::zero(base))),
        ],
    });
    // Exceptional pairs x = -P^(-a) q_j, y = P^(-2a) q_j^2.
    for alpha in &alphas {
        let pa = power_product(gens, alpha, base);
        for qj in &q_family {
            let qf = FieldElem::from_scalar(Scalar::Poly(qj.clone()));
            let xval = qf.div(&pa).neg();
            let yval = qf.mul(&qf).div(&pa.mul(&pa));
            branches.push(DefBranch {
                bound: Vec::new(),
                atoms: vec![
                    DefAtom::Eq(DefTerm::var(base, 0), DefTerm::constant(xval)),
                    DefAtom::Eq(DefTerm::var(base, 1), DefTerm::constant(yval)),
                ],
            });
        }
    }
    // Main branch.
    let mut atoms = vec![
        DefAtom::Div(
            DefTerm::var(base, eps(1)),
            DefTerm::constant(FieldElem::one(base)),
        ),
        DefAtom::NonTorsionUnit(eps(1)),
    ];
    let eps1_minus_1 = DefTerm::var(base, eps(1))
        .add(DefTerm::constant(FieldElem::one(base).neg()));
    for alpha in &alphas {
        let pa = power_product(gens, alpha, base);
        let pa2 = pa.mul(&pa);
        for qj in q_family.iter().take(2 * inv.s_infinite + 1) {
            let qf = FieldElem::from_scalar(Scalar::Poly(qj.clone()));
            // P^a x + q_j | eps1 - 1
            atoms.push(DefAtom::Div(
                DefTerm::scaled_var(pa.clone(), 0).add(DefTerm::constant(qf.clone())),
                eps1_minus_1.clone(),
            ));
            // P^(2a) y + q_j^2 | eps1 - 1
            atoms.push(DefAtom::Div(
                DefTerm::scaled_var(pa2.clone(), 1).add(DefTerm::constant(qf.mul(&qf))),
                eps1_minus_1.clone(),
            ));
        }
    }
    atoms.push(DefAtom::Div(
        DefTerm::constant(FieldElem::from_scalar(Scalar::Poly(q_anchor.clone()))),
        eps1_minus_1.clone(),
    ));
    for i in 1..n {
        atoms.push(DefAtom::Eq(
            DefTerm::scaled_square(FieldElem::one(base), eps(i)),
            DefTerm::var(base, eps(i + 1)),
        ));
    }
    let two = FieldElem::from_i64(base, 2);
    for alpha in &alphas {
        let pa = power_product(gens, alpha, base);
        let pa2 = pa.mul(&pa);
        for beta in &betas {
            let pb = power_product(gens, beta, base);
            for ri in &r_family {
                let rf = FieldElem::from_scalar(Scalar::Poly(ri.clone()));
                for sj in &s_family {
                    let sf = FieldElem::from_scalar(Scalar::Poly(sj.clone())).mul(&pb);
                    // P^a x + (r_i eps_N + P^b s_j)
                    let lhs = DefTerm::scaled_var(pa.clone(), 0)
                        .add(DefTerm::scaled_var(rf.clone(), eps(n)))
                        .add(DefTerm::constant(sf.clone()));
                    // P^(2a) y - (r_i^2 eps_N^2 + 2 r_i eps_N P^b s_j + (P^b s_j)^2)
                    let rhs = DefTerm::scaled_var(pa2.clone(), 1)
                        .add(DefTerm::scaled_square(rf.mul(&rf).neg(), eps(n)))
                        .add(DefTerm::scaled_var(two.mul(&rf).mul(&sf).neg(), eps(n)))
                        .add(DefTerm::constant(sf.mul(&sf).neg()));
                    atoms.push(DefAtom::Div(lhs, rhs));
                }
            }
        }
    }
    branches.push(DefBranch { bound: (2..2 + n).collect(), atoms });

    let formula = DefFormula {
        kind: DefKind::Square,
        names,
        free_count: 2,
        branches,
    };
    Ok((
        formula,
        SqConstants {
            invariants: inv,
            q_family,
            r_family,
            s_family,
            q_anchor,
            alphas,
            betas,
        },
    ))
}

// ---------------------------------------------------------------------------
// Witness construction and validation
// ---------------------------------------------------------------------------

/// Witness for `psi_neq` at a nonzero `y`: an irreducible in the arithmetic
/// progression of `(q, b)` coprime to the numerator of `y` splits 1 between
/// a multiple of `y` and a multiple of `q*x + b`.
pub fn neq_witness(
    y: &FieldElem,
    ring: &RingSpec,
    pair: &LenstraPair,
) -> Result<(FieldElem, FieldElem, FieldElem), DeflabError> {
    assert!(!y.is_zero());
    let n = y.numerator().as_poly().clone();
    let hit = kornblum_search_filtered(&pair.q, &pair.b, |cand| !cand.divides(&n))
        .map_err(|e| DeflabError::SearchExhausted(e.to_string()))?;
    let x = {
        let (quot, rem) = hit.sub(&pair.b).divrem(&pair.q);
        assert!(rem.is_zero(), "progression member must be congruent to b");
        FieldElem::from_scalar(Scalar::Poly(quot))
    };
    let (g, u, v) = n.extended_gcd(&hit);
    assert!(g.is_one(), "progression member must be coprime to the numerator");
    let a_val = FieldElem::from_scalar(Scalar::Poly(u.mul(&n)));
    let b_val = FieldElem::from_scalar(Scalar::Poly(v.mul(&hit)));
    debug_assert!(ring.divides(y, &a_val));
    debug_assert!(a_val.add(&b_val).is_one());
    Ok((a_val, b_val, x))
}

/// Search a branch for witnesses of its bound variables: equality atoms that
/// pin a lone linear variable are propagated; zero-divisibility forces its
/// right side; remaining variables are enumerated within the bound.
pub fn search_branch(
    branch: &DefBranch,
    free_assignment: &[FieldElem],
    ring: &RingSpec,
    bound: crate::oracle::HeightBound,
    cap: usize,
) -> Option<Vec<FieldElem>> {
    let base = ring.base();
    let total = branch
        .atoms
        .iter()
        .flat_map(|a| match a {
            DefAtom::Div(x, y) | DefAtom::Eq(x, y) => {
                let mut v = x.vars();
                v.extend(y.vars());
                v
            }
            DefAtom::NonTorsionUnit(v) => vec![*v],
        })
        .max()
        .map_or(free_assignment.len(), |m| m + 1)
        .max(free_assignment.len());
    let mut assignment: Vec<Option<FieldElem>> = vec![None; total];
    for (i, x) in free_assignment.iter().enumerate() {
        assignment[i] = Some(x.clone());
    }
    let elems = crate::oracle::enumerate(ring, bound);
    let mut count = 0usize;
    search_rec(branch, &mut assignment, ring, base, &elems, cap, &mut count)
}

fn search_rec(
    branch: &DefBranch,
    assignment: &mut Vec<Option<FieldElem>>,
    ring: &RingSpec,
    base: Base,
    elems: &[FieldElem],
    cap: usize,
    count: &mut usize,
) -> Option<Vec<FieldElem>> {
    propagate(branch, assignment, ring, base);
    if let Some(bad) = conflict(branch, assignment, ring, base) {
        let _ = bad;
        return None;
    }
    let next = branch.bound.iter().find(|&&v| assignment[v].is_none());
    let Some(&v) = next else {
        let full: Vec<FieldElem> = assignment.iter().map(|x| x.clone().unwrap()).collect();
        let ok = branch.atoms.iter().all(|a| a.holds(&full, ring));
        return ok.then_some(full);
    };
    for cand in elems {
        *count += 1;
        if *count > cap {
            return None;
        }
        let saved = assignment.clone();
        assignment[v] = Some(cand.clone());
        if let Some(w) = search_rec(branch, assignment, ring, base, elems, cap, count) {
            return Some(w);
        }
        *assignment = saved;
    }
    None
}

/// Solve equality atoms with exactly one unassigned, linearly occurring
/// variable, and zero-divisibility constraints.
fn propagate(branch: &DefBranch, assignment: &mut [Option<FieldElem>], ring: &RingSpec, base: Base) {
    loop {
        let mut progressed = false;
        for atom in &branch.atoms {
            match atom {
                DefAtom::Eq(l, r) => {
                    let diff = l.clone().add(DefTerm {
                        monomials: r.monomials.iter().map(|(c, m)| (c.neg(), m.clone())).collect(),
                    });
                    if let Some((v, value)) = solve_linear(&diff, assignment, base) {
                        assignment[v] = Some(value);
                        progressed = true;
                    }
                }
                DefAtom::Div(l, r) => {
                    // 0 | r forces r = 0.
                    let l_val = eval_partial(l, assignment, base);
                    if let Some(lv) = l_val {
                        if lv.is_zero() {
                            if let Some((v, value)) = solve_linear(r, assignment, base) {
                                assignment[v] = Some(value);
                                progressed = true;
                            }
                        }
                    }
                }
                DefAtom::NonTorsionUnit(_) => {}
            }
        }
        let _ = ring;
        if !progressed {
            return;
        }
    }
}

/// If the term has exactly one unassigned variable, occurring alone and
/// linearly in its monomials, solve `term = 0` for it.
fn solve_linear(
    term: &DefTerm,
    assignment: &[Option<FieldElem>],
    base: Base,
) -> Option<(usize, FieldElem)> {
    let unassigned: Vec<usize> = term
        .vars()
        .into_iter()
        .filter(|&v| assignment[v].is_none())
        .collect();
    if unassigned.len() != 1 {
        return None;
    }
    let v = unassigned[0];
    let mut coeff = FieldElem::zero(base);
    let mut rest = FieldElem::zero(base);
    for (c, monos) in &term.monomials {
        if monos.iter().any(|&(w, _)| w == v) {
            if monos.len() != 1 || monos[0] != (v, 1) {
                return None; // not linear in the unknown
            }
            coeff = coeff.add(c);
        } else {
            let mut val = c.clone();
            for &(w, e) in monos {
                let wv = assignment[w].as_ref()?;
                for _ in 0..e {
                    val = val.mul(wv);
                }
            }
            rest = rest.add(&val);
        }
    }
    if coeff.is_zero() {
        return None;
    }
    Some((v, rest.neg().div(&coeff)))
}

fn eval_partial(term: &DefTerm, assignment: &[Option<FieldElem>], base: Base) -> Option<FieldElem> {
    let mut acc = FieldElem::zero(base);
    for (c, monos) in &term.monomials {
        let mut val = c.clone();
        for &(w, e) in monos {
            let wv = assignment[w].as_ref()?;
            for _ in 0..e {
                val = val.mul(wv);
            }
        }
        acc = acc.add(&val);
    }
    Some(acc)
}

/// Fully evaluable atoms that are already false.
fn conflict(
    branch: &DefBranch,
    assignment: &[Option<FieldElem>],
    ring: &RingSpec,
    base: Base,
) -> Option<usize> {
    for (i, atom) in branch.atoms.iter().enumerate() {
        let decided = match atom {
            DefAtom::Div(l, r) => match (eval_partial(l, assignment, base), eval_partial(r, assignment, base)) {
                (Some(lv), Some(rv)) => Some(ring.divides(&lv, &rv)),
                _ => None,
            },
            DefAtom::Eq(l, r) => match (eval_partial(l, assignment, base), eval_partial(r, assignment, base)) {
                (Some(lv), Some(rv)) => Some(lv == rv),
                _ => None,
            },
            DefAtom::NonTorsionUnit(v) => assignment[*v].as_ref().map(|x| {
                ring.is_unit(x)
                    && !(x.numerator().as_poly().is_constant() && x.denominator().is_one())
            }),
        };
        if decided == Some(false) {
            return Some(i);
        }
    }
    None
}

/// Validation report: one labelled pass/fail line per check.
#[derive(Clone, Debug, Default)]
pub struct Report {
    pub title: String,
    pub checks: Vec<(String, bool)>,
}

impl Report {
    pub fn push(&mut self, label: impl Into<String>, pass: bool) {
        self.checks.push((label.into(), pass));
    }

    pub fn passed(&self) -> usize {
        self.checks.iter().filter(|(_, ok)| *ok).count()
    }

    pub fn total(&self) -> usize {
        self.checks.len()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.total()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}/{} checks passed", self.title, self.passed(), self.total())?;
        for (label, ok) in &self.checks {
            writeln!(f, "  [{}] {}", if *ok { "ok" } else { "FAIL" }, label)?;
        }
        Ok(())
    }
}

/// Random nonzero ring element: polynomial numerator over a denominator
/// supported in the finite part of `S`.
pub fn random_ring_element(rng: &mut SplitMix64, ring: &RingSpec, max_deg: usize) -> FieldElem {
    let Base::Poly { p } = ring.base() else { unreachable!() };
    let gens = s_fin_generators(ring);
    loop {
        let deg = rng.below(max_deg as u64 + 1) as usize;
        let mut coeffs = vec![0u64; deg + 1];
        for c in coeffs.iter_mut() {
            *c = rng.below(p);
        }
        let num = PolyFp::new(p, coeffs);
        if num.is_zero() {
            continue;
        }
        let mut den = PolyFp::one(p);
        for g in &gens {
            for _ in 0..rng.below(3) {
                den = den.mul(g);
            }
        }
        return FieldElem::new(Scalar::Poly(num), Scalar::Poly(den));
    }
}

/// Random unit: constant times a product of finite-place generators.
pub fn random_unit(rng: &mut SplitMix64, ring: &RingSpec, max_exp: i64) -> FieldElem {
    let Base::Poly { p } = ring.base() else { unreachable!() };
    let gens = s_fin_generators(ring);
    let c = 1 + rng.below(p - 1);
    let mut acc = FieldElem::from_scalar(Scalar::Poly(PolyFp::constant(p, c)));
    for g in &gens {
        let e = rng.range_i64(-max_exp, max_exp);
        let gf = FieldElem::from_scalar(Scalar::Poly(g.clone()));
        for _ in 0..e.unsigned_abs() {
            acc = if e >= 0 { acc.mul(&gf) } else { acc.div(&gf) };
        }
    }
    acc
}

/// Validate the disequality formula: constructed witnesses on nonzero
/// samples, and a bounded search returning nothing at `y = 0`.
pub fn validate_neq(
    ring: &RingSpec,
    samples: usize,
    search_degree: usize,
    seed: u64,
) -> Result<Report, DeflabError> {
    let (formula, pair) = emit_neq(ring)?;
    let mut report = Report { title: "psi_neq validation".into(), ..Default::default() };
    report.push(
        format!("unit-avoiding pair certificate for (q, b) = ({}, {})", pair.q, pair.b),
        pair.verify(ring),
    );
    let mut rng = SplitMix64::new(seed);
    let mut pass = 0usize;
    for _ in 0..samples {
        let y = random_ring_element(&mut rng, ring, 3);
        let (a, b, x) = neq_witness(&y, ring, &pair)?;
        let assignment = vec![y, a, b, x];
        if formula.holds_at(&assignment, ring) {
            pass += 1;
        }
    }
    report.push(format!("positive samples with constructed witnesses: {}/{}", pass, samples), pass == samples);
    let zero = FieldElem::zero(ring.base());
    let found = search_branch(
        &formula.branches[0],
        &[zero],
        ring,
        crate::oracle::HeightBound::Degree(search_degree),
        2_000_000,
    );
    report.push(
        format!("bounded search at y = 0 (degree <= {}) finds no witness", search_degree),
        found.is_none(),
    );
    Ok(report)
}

/// Validate the unit-square formula: the easy direction on random units and
/// direct refutations off the relation.
pub fn validate_squ(ring: &RingSpec, samples: usize, seed: u64) -> Result<Report, DeflabError> {
    let (formula, _constants) = emit_squ(ring)?;
    let mut report = Report { title: "sq_u validation".into(), ..Default::default() };
    let mut rng = SplitMix64::new(seed);
    let mut pass = 0usize;
    for _ in 0..samples {
        let x = random_unit(&mut rng, ring, 3);
        let y = x.mul(&x);
        if formula.holds_at(&[x, y], ring) {
            pass += 1;
        }
    }
    report.push(format!("squares of random units accepted: {}/{}", pass, samples), pass == samples);
    let mut refuted = 0usize;
    let negatives = samples.min(10);
    for _ in 0..negatives {
        let x = random_unit(&mut rng, ring, 2);
        let y = x.mul(&x).mul(&random_unit(&mut rng, ring, 1));
        if y == x.mul(&x) {
            refuted += 1; // accidentally a square; formula must accept
            continue;
        }
        if !formula.holds_at(&[x.clone(), y], ring) {
            refuted += 1;
        }
    }
    report.push(
        format!("non-squares rejected: {}/{}", refuted, negatives),
        refuted == negatives,
    );
    Ok(report)
}

/// Validate the full square formula: constructed doubling chains on random
/// ring elements (the easy direction) and bounded refutations.
pub fn validate_sq(ring: &RingSpec, samples: usize, seed: u64) -> Result<Report, DeflabError> {
    let (formula, constants) = emit_sq(ring)?;
    let mut report = Report { title: "phi_sq validation".into(), ..Default::default() };
    let mut rng = SplitMix64::new(seed);
    let mut pass = 0usize;
    for _ in 0..samples {
        let x = random_ring_element(&mut rng, ring, 2);
        let y = x.mul(&x);
        if verify_sq_membership(&x, &y, ring, &formula, &constants)? {
            pass += 1;
        }
    }
    report.push(
        format!("squares accepted with constructed chains: {}/{}", pass, samples),
        pass == samples,
    );
    // Zero branch and an exceptional branch.
    let zero = FieldElem::zero(ring.base());
    report.push(
        "zero pair accepted".to_string(),
        formula.holds_at(
            &full_assignment(&formula, &[zero.clone(), zero.clone()], ring),
            ring,
        ),
    );
    let alpha = &constants.alphas[0];
    let pa = power_product(&constants.invariants.unit_generators, alpha, ring.base());
    let qj = FieldElem::from_scalar(Scalar::Poly(constants.q_family[0].clone()));
    let x_exc = qj.div(&pa).neg();
    let y_exc = qj.mul(&qj).div(&pa.mul(&pa));
    report.push(
        "exceptional pair accepted".to_string(),
        formula.holds_at(&full_assignment(&formula, &[x_exc, y_exc], ring), ring),
    );
    // Bounded refutation of non-squares: units-only chain search.
    let mut refuted = 0usize;
    let negatives = samples.min(5);
    for _ in 0..negatives {
        let x = random_ring_element(&mut rng, ring, 1);
        let y = x.mul(&x).add(&FieldElem::one(ring.base()));
        if y == x.mul(&x) || sq_bounded_search(&x, &y, ring, &formula, 3).is_some() {
            continue;
        }
        refuted += 1;
    }
    report.push(
        format!("non-squares refuted by bounded chain search: {}/{}", refuted, negatives),
        refuted == negatives,
    );
    Ok(report)
}

fn full_assignment(formula: &DefFormula, free: &[FieldElem], ring: &RingSpec) -> Vec<FieldElem> {
    let mut asg = free.to_vec();
    while asg.len() < formula.names.len() {
        asg.push(FieldElem::one(ring.base()));
    }
    asg
}

/// Easy-direction verification at `(x, x^2)`: either a trivial branch holds,
/// or a doubling chain rooted at a unit congruent to 1 modulo all shifted
/// moduli satisfies the main branch. All congruences are checked by modular
/// exponentiation; the final divisibilities hold with the explicit quotient
/// `P^a x - (r_i eps_N + P^b s_j)`, whose ring membership is checked.
pub fn verify_sq_membership(
    x: &FieldElem,
    y: &FieldElem,
    ring: &RingSpec,
    formula: &DefFormula,
    constants: &SqConstants,
) -> Result<bool, DeflabError> {
    let base = ring.base();
    if *y != x.mul(x) {
        return Ok(false);
    }
    if x.is_zero() {
        return Ok(formula.holds_at(&full_assignment(formula, &[x.clone(), y.clone()], ring), ring));
    }
    let inv = &constants.invariants;
    let gens = &inv.unit_generators;
    // Collect the chain moduli.
    let mut moduli: Vec<FieldElem> = Vec::new();
    for alpha in &constants.alphas {
        let pa = power_product(gens, alpha, base);
        let pa2 = pa.mul(&pa);
        for qj in constants.q_family.iter().take(2 * inv.s_infinite + 1) {
            let qf = FieldElem::from_scalar(Scalar::Poly(qj.clone()));
            moduli.push(pa.mul(x).add(&qf));
            moduli.push(pa2.mul(y).add(&qf.mul(&qf)));
        }
    }
    moduli.push(FieldElem::from_scalar(Scalar::Poly(constants.q_anchor.clone())));
    if moduli.iter().any(FieldElem::is_zero) {
        // x is one of the exceptional values; the matching branch decides.
        return Ok(formula.holds_at(&full_assignment(formula, &[x.clone(), y.clone()], ring), ring));
    }
    // One exponent annihilating every residue group.
    let mut exponent = BigUint::one();
    let mut cores = Vec::new();
    for m in &moduli {
        let core = strip_s_factors(ring, m.numerator().as_poly());
        if core.is_constant() {
            continue;
        }
        let e = residue_group_exponent(&core);
        exponent = &exponent / exponent.gcd(&e) * e;
        cores.push(core);
    }
    let eps1 = UnitPower {
        generator: gens.first().expect("finite place").clone(),
        exponent,
    };
    // psi_1, psi_2, psi_3: every modulus divides eps1 - 1.
    for core in &cores {
        if !eps1.congruent_one_mod(core) {
            return Ok(false);
        }
    }
    if !eps1.is_infinite_order() {
        return Ok(false);
    }
    // psi_4 is the doubling chain by construction; psi_5 holds with quotient
    // P^a x - (r_i eps_N + P^b s_j): check the membership of its pieces.
    for ri in &constants.r_family {
        let rf = FieldElem::from_scalar(Scalar::Poly(ri.clone()));
        if !ring.is_member(&rf) {
            return Ok(false);
        }
    }
    let eps_n = (0..inv.chain_length - 1).fold(eps1.clone(), |e, _| e.squared());
    if !eps_n.is_infinite_order() {
        return Ok(false);
    }
    // Dual route on small chains: literal divisibility checks.
    if let Some(eps_n_val) = eps_n.value_if_small(4000) {
        let eps1_val = eps1.value_if_small(4000).expect("smaller than its square chain");
        for m in &moduli {
            if !ring.divides(m, &eps1_val.sub(&FieldElem::one(base))) {
                return Ok(false);
            }
        }
        let alpha = &constants.alphas[0];
        let pa = power_product(gens, alpha, base);
        let ri = FieldElem::from_scalar(Scalar::Poly(constants.r_family[0].clone()));
        let sj = FieldElem::from_scalar(Scalar::Poly(constants.s_family[0].clone()));
        let w = pa.mul(x).add(&ri.mul(&eps_n_val)).add(&sj);
        let z = pa.mul(&pa).mul(y).sub(&ri.mul(&eps_n_val).add(&sj).mul(&ri.mul(&eps_n_val).add(&sj)));
        if !ring.divides(&w, &z) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bounded search for the main branch of the square formula: enumerate small
/// units for the chain root, square upward, and evaluate every atom
/// literally.
pub fn sq_bounded_search(
    x: &FieldElem,
    y: &FieldElem,
    ring: &RingSpec,
    formula: &DefFormula,
    max_exp: i64,
) -> Option<Vec<FieldElem>> {
    let Base::Poly { p } = ring.base() else { unreachable!() };
    let gens = s_fin_generators(ring);
    let n_chain = formula.names.len() - 2;
    // Trivial branches first.
    for branch in &formula.branches {
        if branch.bound.is_empty() {
            let asg = full_assignment(formula, &[x.clone(), y.clone()], ring);
            if branch.atoms.iter().all(|a| a.holds(&asg, ring)) {
                return Some(asg);
            }
        }
    }
    let exps = multi_indices(0, (2 * max_exp) as u32, gens.len());
    for c in 1..p {
        for exp in &exps {
            let mut eps = FieldElem::from_scalar(Scalar::Poly(PolyFp::constant(p, c)));
            for (g, &e) in gens.iter().zip(exp) {
                let gf = FieldElem::from_scalar(Scalar::Poly(g.clone()));
                let signed = e as i64 - max_exp;
                for _ in 0..signed.unsigned_abs() {
                    eps = if signed >= 0 { eps.mul(&gf) } else { eps.div(&gf) };
                }
            }
            let mut asg = vec![x.clone(), y.clone()];
            let mut cur = eps.clone();
            for _ in 0..n_chain {
                asg.push(cur.clone());
                cur = cur.mul(&cur);
            }
            let main = formula.branches.last().unwrap();
            if main.atoms.iter().all(|a| a.holds(&asg, ring)) {
                return Some(asg);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_inf_t() -> RingSpec {
        RingSpec::finite(
            Base::Poly { p: 3 },
            vec![Place::Infinity, Place::irreducible(PolyFp::t(3)).unwrap()],
        )
        .unwrap()
    }

    fn fp(coeffs: &[i64]) -> PolyFp {
        PolyFp::from_signed(3, coeffs)
    }

    fn pf(coeffs: &[i64]) -> FieldElem {
        FieldElem::from_scalar(Scalar::Poly(fp(coeffs)))
    }

    #[test]
    fn invariants_base_case() {
        let inv = compute_invariants(&ring_inf_t()).unwrap();
        assert_eq!(inv.constant_field_size, 3);
        assert_eq!(inv.class_number, 1);
        assert_eq!(inv.s_total, 2);
        assert_eq!(inv.s_finite, 1);
        assert_eq!(inv.s_infinite, 1);
        assert_eq!(inv.max_place_degree, 1);
        assert_eq!(inv.c1, 0);
        assert_eq!(inv.c3, 3);
        assert_eq!(inv.n0, 25);
        assert_eq!(inv.chain_length, 6);
        assert_eq!(inv.n1, 32);
        assert_eq!(inv.unit_generators, vec![PolyFp::t(3)]);
    }

    #[test]
    fn invariants_two_finite_places() {
        let ring = RingSpec::finite(
            Base::Poly { p: 3 },
            vec![
                Place::Infinity,
                Place::irreducible(PolyFp::t(3)).unwrap(),
                Place::irreducible(fp(&[1, 1])).unwrap(),
            ],
        )
        .unwrap();
        let inv = compute_invariants(&ring).unwrap();
        assert_eq!(inv.s_finite, 2);
        assert_eq!(inv.unit_generators, vec![PolyFp::t(3), fp(&[1, 1])]);
    }

    #[test]
    fn invariants_reject_bad_rings() {
        let even = RingSpec::finite(
            Base::Poly { p: 2 },
            vec![Place::Infinity, Place::irreducible(PolyFp::t(2)).unwrap()],
        )
        .unwrap();
        assert_eq!(compute_invariants(&even).unwrap_err(), DeflabError::EvenCharacteristic);
    }

    #[test]
    fn lenstra_reference_pair() {
        let pair = lenstra_pair(&ring_inf_t()).unwrap();
        assert_eq!(pair.q, fp(&[1, 0, 1])); // t^2 + 1
        assert_eq!(pair.b, fp(&[1, 1])); // t + 1
        assert_eq!(pair.group_order, 8);
        assert_eq!(pair.subgroup.len(), 4);
        assert!(pair.verify(&ring_inf_t()));
        // The defining property at x = 0: b itself is not a unit.
        assert!(!ring_inf_t().is_unit(&pf(&[1, 1])));
    }

    #[test]
    fn find_unit_examples() {
        let ring = ring_inf_t();
        // x = t + 1: the generator has residue order 2.
        let eps = find_unit_congruent_one(&pf(&[1, 1]), &ring).unwrap();
        assert_eq!(eps.to_string(), "t^2");
        assert!(ring.divides(
            &pf(&[1, 1]),
            &eps.value_if_small(100).unwrap().sub(&FieldElem::one(ring.base()))
        ));
        // x = 1: any non-constant unit works.
        let eps = find_unit_congruent_one(&FieldElem::one(ring.base()), &ring).unwrap();
        assert_eq!(eps.to_string(), "t^1");
        // x = t^2 + 1: full residue group order.
        let eps = find_unit_congruent_one(&pf(&[1, 0, 1]), &ring).unwrap();
        assert_eq!(eps.to_string(), "t^8");
        assert!(eps.congruent_one_mod(&fp(&[1, 0, 1])));
    }

    #[test]
    fn neq_witness_example() {
        let ring = ring_inf_t();
        let (formula, pair) = emit_neq(&ring).unwrap();
        // y = t: the first progression member coprime to t is t + 1, giving
        // x = 0, A = -t, B = t + 1.
        let y = pf(&[0, 1]);
        let (a, b, x) = neq_witness(&y, &ring, &pair).unwrap();
        assert_eq!(a, pf(&[0, 2])); // -t = 2t
        assert_eq!(b, pf(&[1, 1]));
        assert!(x.is_zero());
        assert!(formula.holds_at(&[y, a, b, x], &ring));
        // y = 1: B = 0 and A = 1.
        let one = FieldElem::one(ring.base());
        let (a, b, _x) = neq_witness(&one, &ring, &pair).unwrap();
        assert!(a.is_one());
        assert!(b.is_zero());
    }

    #[test]
    fn neq_zero_has_no_witness() {
        let ring = ring_inf_t();
        let (formula, _) = emit_neq(&ring).unwrap();
        let zero = FieldElem::zero(ring.base());
        let found = search_branch(
            &formula.branches[0],
            &[zero],
            &ring,
            crate::oracle::HeightBound::Degree(3),
            200_000,
        );
        assert!(found.is_none());
    }

    #[test]
    fn squ_families_and_identity() {
        let ring = ring_inf_t();
        let (formula, constants) = emit_squ(&ring).unwrap();
        assert_eq!(constants.families.len(), 3);
        assert!(constants.families.iter().all(|b| b.len() == 3));
        // (t, t^2) is a unit square.
        let x = pf(&[0, 1]);
        assert!(formula.holds_at(&[x.clone(), x.mul(&x)], &ring));
        // (1, 1) as well.
        let one = FieldElem::one(ring.base());
        assert!(formula.holds_at(&[one.clone(), one.clone()], &ring));
        // (t, t) is not.
        assert!(!formula.holds_at(&[x.clone(), x], &ring));
    }

    #[test]
    fn sq_branches() {
        let ring = ring_inf_t();
        let (formula, constants) = emit_sq(&ring).unwrap();
        assert_eq!(constants.q_family.len(), 5);
        assert_eq!(constants.r_family.len(), 2);
        assert_eq!(constants.s_family.len(), 2);
        assert_eq!(constants.q_anchor, fp(&[1, 0, 1]));
        // Zero branch.
        let zero = FieldElem::zero(ring.base());
        assert!(formula.holds_at(&full_assignment(&formula, &[zero.clone(), zero], &ring), &ring));
        // Constructed chain on (t+1, (t+1)^2).
        let x = pf(&[1, 1]);
        let y = x.mul(&x);
        assert!(verify_sq_membership(&x, &y, &ring, &formula, &constants).unwrap());
        // Exceptional branch sample.
        let pa = power_product(&constants.invariants.unit_generators, &constants.alphas[0], ring.base());
        let qf = FieldElem::from_scalar(Scalar::Poly(constants.q_family[1].clone()));
        let xe = qf.div(&pa).neg();
        let ye = qf.mul(&qf).div(&pa.mul(&pa));
        assert!(formula.holds_at(&full_assignment(&formula, &[xe, ye], &ring), &ring));
    }

    #[test]
    fn search_propagation_solves_chain() {
        // The chain equations pin every eps variable once eps1 is chosen;
        // a wrong pair is refuted by the bounded search.
        let ring = ring_inf_t();
        let (formula, _) = emit_sq(&ring).unwrap();
        let x = pf(&[0, 1]);
        let y = pf(&[1, 0, 1]);
        assert!(sq_bounded_search(&x, &y, &ring, &formula, 2).is_none());
    }
}
