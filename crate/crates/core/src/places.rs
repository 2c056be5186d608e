//! Places of the base field, valuations, ring membership and divisibility,
//! factorization, and the strong-approximation engine.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::One;

use crate::fraction::FieldElem;
use crate::scalar::{Base, MonicPolys, PolyFp, Scalar};

/// Trial-division budget for integer factorization.
pub const FACTOR_BOUND: u64 = 1_000_000;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum PlaceError {
    NotPrime(String),
    NotIrreducible(String),
    BaseMismatch,
}

impl fmt::Display for PlaceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlaceError::NotPrime(s) => write!(f, "{} is not a prime", s),
            PlaceError::NotIrreducible(s) => write!(f, "{} is not a monic irreducible", s),
            PlaceError::BaseMismatch => write!(f, "place base does not match ring base"),
        }
    }
}

impl std::error::Error for PlaceError {}

/// A finite prime of `Z` or `F_p[t]`, or the degree place of `F_p(t)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Place {
    Prime(BigInt),
    Irreducible(PolyFp),
    Infinity,
}

impl Place {
    pub fn prime(v: i64) -> Result<Place, PlaceError> {
        let b = BigInt::from(v);
        if is_prime_int(&b) {
            Ok(Place::Prime(b))
        } else {
            Err(PlaceError::NotPrime(v.to_string()))
        }
    }

    pub fn prime_big(v: BigInt) -> Result<Place, PlaceError> {
        if is_prime_int(&v) {
            Ok(Place::Prime(v))
        } else {
            Err(PlaceError::NotPrime(v.to_string()))
        }
    }

    pub fn irreducible(q: PolyFp) -> Result<Place, PlaceError> {
        if q.is_monic() && q.is_irreducible() {
            Ok(Place::Irreducible(q))
        } else {
            Err(PlaceError::NotIrreducible(q.to_string()))
        }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self, Place::Infinity)
    }

    /// Generator of a finite place as a base-ring scalar.
    pub fn generator(&self) -> Scalar {
        match self {
            Place::Prime(v) => Scalar::Int(v.clone()),
            Place::Irreducible(q) => Scalar::Poly(q.clone()),
            Place::Infinity => panic!("the infinite place has no generator"),
        }
    }

    pub fn base(&self) -> Option<Base> {
        match self {
            Place::Prime(_) => Some(Base::Int),
            Place::Irreducible(q) => Some(Base::Poly { p: q.modulus() }),
            Place::Infinity => None,
        }
    }

    /// Degree of the place (residue degree over the constants); `1` for
    /// integer primes and the infinite place.
    pub fn degree(&self) -> i64 {
        match self {
            Place::Prime(_) => 1,
            Place::Irreducible(q) => q.degree().unwrap() as i64,
            Place::Infinity => 1,
        }
    }

    /// Size of the residue field at a finite place.
    pub fn residue_count(&self) -> u64 {
        match self {
            Place::Prime(v) => {
                let digits = v.to_u64_digits().1;
                assert!(digits.len() == 1, "residue field too large to enumerate");
                digits[0]
            }
            Place::Irreducible(q) => {
                let d = q.degree().unwrap() as u32;
                q.modulus().checked_pow(d).expect("residue field too large")
            }
            Place::Infinity => panic!("residue enumeration at infinity"),
        }
    }

    /// k-th residue representative, enumerated deterministically.
    pub fn residue(&self, k: u64) -> Scalar {
        match self {
            Place::Prime(_) => Scalar::Int(BigInt::from(k)),
            Place::Irreducible(q) => {
                let p = q.modulus();
                let d = q.degree().unwrap();
                let mut coeffs = vec![0u64; d];
                let mut idx = k;
                for c in coeffs.iter_mut() {
                    *c = idx % p;
                    idx /= p;
                }
                Scalar::Poly(PolyFp::new(p, coeffs))
            }
            Place::Infinity => panic!("residue enumeration at infinity"),
        }
    }

    /// Valuation of a nonzero scalar at this place.
    pub fn ord_scalar(&self, s: &Scalar) -> OrdVal {
        if s.is_zero() {
            return OrdVal::Inf;
        }
        match self {
            Place::Infinity => match s {
                Scalar::Poly(q) => OrdVal::Fin(-(q.degree().unwrap() as i64)),
                Scalar::Int(_) => panic!("no infinite place over the integers"),
            },
            _ => {
                let g = self.generator();
                let mut v = 0i64;
                let mut cur = s.clone();
                loop {
                    match cur.exact_div(&g) {
                        Some(next) => {
                            v += 1;
                            cur = next;
                        }
                        None => return OrdVal::Fin(v),
                    }
                }
            }
        }
    }

    /// Normalized valuation of a field element; `Inf` exactly on zero.
    pub fn ord(&self, x: &FieldElem) -> OrdVal {
        if x.is_zero() {
            return OrdVal::Inf;
        }
        match (self.ord_scalar(x.numerator()), self.ord_scalar(x.denominator())) {
            (OrdVal::Fin(a), OrdVal::Fin(b)) => OrdVal::Fin(a - b),
            _ => unreachable!("nonzero scalars have finite order"),
        }
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Prime(v) => write!(f, "{}", v),
            Place::Irreducible(q) => write!(f, "{}", q),
            Place::Infinity => write!(f, "inf"),
        }
    }
}

/// Value of an additive valuation, with `Inf = ord(0)` as top element.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum OrdVal {
    Fin(i64),
    Inf,
}

impl OrdVal {
    pub fn add(self, other: OrdVal) -> OrdVal {
        match (self, other) {
            (OrdVal::Fin(a), OrdVal::Fin(b)) => OrdVal::Fin(a + b),
            _ => OrdVal::Inf,
        }
    }

    pub fn finite(self) -> Option<i64> {
        match self {
            OrdVal::Fin(v) => Some(v),
            OrdVal::Inf => None,
        }
    }

    pub fn is_inf(self) -> bool {
        matches!(self, OrdVal::Inf)
    }
}

impl fmt::Display for OrdVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrdVal::Fin(v) => write!(f, "{}", v),
            OrdVal::Inf => write!(f, "inf"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum RingError {
    EmptyPlaceList,
    DuplicatePlace(String),
    InfinityInCofinite,
    InfinityRequired,
    TooFewPlaces,
    BaseMismatch(String),
    PolyBaseRequired,
}

impl fmt::Display for RingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingError::EmptyPlaceList => write!(f, "the place list must be nonempty"),
            RingError::DuplicatePlace(s) => write!(f, "duplicate place {}", s),
            RingError::InfinityInCofinite => write!(f, "the infinite place cannot be excluded"),
            RingError::InfinityRequired => write!(f, "S must contain the infinite place"),
            RingError::TooFewPlaces => write!(f, "S must have at least two elements"),
            RingError::BaseMismatch(s) => write!(f, "place {} does not match the base ring", s),
            RingError::PolyBaseRequired => write!(f, "this ring mode requires base F_p[t]"),
        }
    }
}

impl std::error::Error for RingError {}

/// The two holomorphy-ring shapes the toolkit works over.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Mode {
    /// Integrality imposed exactly at the finite places in `T`; poles are
    /// allowed everywhere else.
    CofiniteS { t: Vec<Place> },
    /// Poles allowed only inside `S`, which contains the infinite place.
    FiniteS { s: Vec<Place> },
}

/// A base ring together with the set of places defining the holomorphy ring.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RingSpec {
    base: Base,
    mode: Mode,
}

impl RingSpec {
    pub fn cofinite(base: Base, t: Vec<Place>) -> Result<RingSpec, RingError> {
        if t.is_empty() {
            return Err(RingError::EmptyPlaceList);
        }
        for (i, p) in t.iter().enumerate() {
            if !p.is_finite() {
                return Err(RingError::InfinityInCofinite);
            }
            if p.base() != Some(base) {
                return Err(RingError::BaseMismatch(p.to_string()));
            }
            if t[..i].contains(p) {
                return Err(RingError::DuplicatePlace(p.to_string()));
            }
        }
        Ok(RingSpec { base, mode: Mode::CofiniteS { t } })
    }

    pub fn finite(base: Base, s: Vec<Place>) -> Result<RingSpec, RingError> {
        if !base.is_poly() {
            return Err(RingError::PolyBaseRequired);
        }
        if !s.contains(&Place::Infinity) {
            return Err(RingError::InfinityRequired);
        }
        if s.len() < 2 {
            return Err(RingError::TooFewPlaces);
        }
        for (i, p) in s.iter().enumerate() {
            if p.is_finite() && p.base() != Some(base) {
                return Err(RingError::BaseMismatch(p.to_string()));
            }
            if s[..i].contains(p) {
                return Err(RingError::DuplicatePlace(p.to_string()));
            }
        }
        Ok(RingSpec { base, mode: Mode::FiniteS { s } })
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn mode(&self) -> &Mode {
        &self.mode
    }

    pub fn is_cofinite(&self) -> bool {
        matches!(self.mode, Mode::CofiniteS { .. })
    }

    /// The excluded finite places `T` (cofinite mode only).
    pub fn t_places(&self) -> &[Place] {
        match &self.mode {
            Mode::CofiniteS { t } => t,
            Mode::FiniteS { .. } => panic!("T is defined only in cofinite mode"),
        }
    }

    /// The allowed pole set `S` (finite mode only).
    pub fn s_places(&self) -> &[Place] {
        match &self.mode {
            Mode::FiniteS { s } => s,
            Mode::CofiniteS { .. } => panic!("S is defined only in finite-S mode"),
        }
    }

    /// Finite members of `S`, in list order.
    pub fn s_finite(&self) -> Vec<&Place> {
        self.s_places().iter().filter(|p| p.is_finite()).collect()
    }

    /// Ring membership test.
    pub fn is_member(&self, x: &FieldElem) -> bool {
        if x.is_zero() {
            return true;
        }
        match &self.mode {
            Mode::CofiniteS { t } => t.iter().all(|p| p.ord(x) >= OrdVal::Fin(0)),
            Mode::FiniteS { s } => {
                // Membership holds iff the denominator is supported inside S:
                // strip the S-generators and check that a unit remains.
                let mut den = x.denominator().clone();
                if den.is_one() {
                    return true;
                }
                for place in s {
                    if let Place::Irreducible(_) = place {
                        let g = place.generator();
                        while let Some(q) = den.exact_div(&g) {
                            den = q;
                            if den.is_one() {
                                return true;
                            }
                        }
                    }
                }
                den.is_base_unit()
            }
        }
    }

    /// Divisibility in the ring: `x | y` iff `y = x*z` for some ring member `z`.
    pub fn divides(&self, x: &FieldElem, y: &FieldElem) -> bool {
        if y.is_zero() {
            return true;
        }
        if x.is_zero() {
            return false;
        }
        self.is_member(&y.div(x))
    }

    /// Units of the ring (divisors of 1).
    pub fn is_unit(&self, x: &FieldElem) -> bool {
        !x.is_zero() && self.divides(x, &FieldElem::one(self.base))
    }
}

impl fmt::Display for RingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ps: &[Place]| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(",");
        match &self.mode {
            Mode::CofiniteS { t } => write!(f, "O({}; T={{{}}})", self.base, join(t)),
            Mode::FiniteS { s } => write!(f, "O({}; S={{{}}})", self.base, join(s)),
        }
    }
}

fn is_prime_int(v: &BigInt) -> bool {
    if v.sign() == num_bigint::Sign::Minus || v < &BigInt::from(2) {
        return false;
    }
    let two = BigInt::from(2);
    if v == &two {
        return true;
    }
    if v.is_even() {
        return false;
    }
    let mut d = BigInt::from(3);
    while (&d * &d) <= *v {
        if v.is_multiple_of(&d) {
            return false;
        }
        d += 2;
    }
    true
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct FactorError {
    pub remaining: String,
}

impl fmt::Display for FactorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "factorization bound exceeded; unfactored part {}", self.remaining)
    }
}

impl std::error::Error for FactorError {}

/// `unit * prod(generator(place)^multiplicity) = input`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Factorization {
    pub unit: Scalar,
    pub factors: Vec<(Place, u32)>,
}

/// Factor a nonzero scalar into places by trial division; integer trial
/// divisors are capped at `bound`.
pub fn factor(x: &Scalar, bound: u64) -> Result<Factorization, FactorError> {
    assert!(!x.is_zero(), "factorization of zero");
    match x {
        Scalar::Int(_) => {
            let (canon, unit) = x.make_canonical();
            let mut n = canon.as_int().clone();
            let mut factors = Vec::new();
            let mut d = BigInt::from(2);
            let cap = BigInt::from(bound);
            while (&d * &d) <= n {
                if d > cap {
                    return Err(FactorError { remaining: n.to_string() });
                }
                let mut mult = 0u32;
                while n.is_multiple_of(&d) {
                    n /= &d;
                    mult += 1;
                }
                if mult > 0 {
                    factors.push((Place::Prime(d.clone()), mult));
                }
                if d == BigInt::from(2) {
                    d += 1;
                } else {
                    d += 2;
                }
            }
            if n > BigInt::one() {
                factors.push((Place::Prime(n), 1));
            }
            Ok(Factorization { unit, factors })
        }
        Scalar::Poly(_) => {
            let (canon, unit) = x.make_canonical();
            let mut n = canon.as_poly().clone();
            let p = n.modulus();
            let mut factors = Vec::new();
            let mut deg = 1usize;
            while n.degree().map_or(false, |d| d >= 1) {
                if deg > n.degree().unwrap() / 2 {
                    factors.push((Place::Irreducible(n.clone()), 1));
                    break;
                }
                let mut it = MonicPolys::new(p, deg);
                while let Some(g) = it.next_poly() {
                    if n.degree().map_or(true, |d| d < deg) {
                        break;
                    }
                    let mut mult = 0u32;
                    loop {
                        let (q, r) = n.divrem(&g);
                        if r.is_zero() {
                            n = q;
                            mult += 1;
                        } else {
                            break;
                        }
                    }
                    if mult > 0 {
                        factors.push((Place::Irreducible(g), mult));
                    }
                }
                deg += 1;
            }
            Ok(Factorization { unit, factors })
        }
    }
}

impl Factorization {
    pub fn product(&self) -> Scalar {
        let mut acc = self.unit.clone();
        for (place, mult) in &self.factors {
            acc = acc.mul(&place.generator().pow(*mult));
        }
        acc
    }
}

/// Irreducible generators of the base ring in canonical order: ascending
/// primes over `Z`; monic irreducibles by degree then lexicographic over
/// `F_p[t]`.
pub struct Irreducibles {
    base: Base,
    next_int: BigInt,
    poly_iter: Option<MonicPolys>,
    poly_degree: usize,
}

impl Irreducibles {
    pub fn new(base: Base) -> Self {
        Irreducibles {
            base,
            next_int: BigInt::from(2),
            poly_iter: None,
            poly_degree: 0,
        }
    }
}

impl Iterator for Irreducibles {
    type Item = Scalar;

    fn next(&mut self) -> Option<Scalar> {
        match self.base {
            Base::Int => loop {
                let v = self.next_int.clone();
                self.next_int += 1;
                if is_prime_int(&v) {
                    return Some(Scalar::Int(v));
                }
            },
            Base::Poly { p } => loop {
                if self.poly_iter.is_none() {
                    self.poly_degree += 1;
                    self.poly_iter = Some(MonicPolys::new(p, self.poly_degree));
                }
                match self.poly_iter.as_mut().unwrap().next_poly() {
                    Some(q) => {
                        if q.is_irreducible() {
                            return Some(Scalar::Poly(q));
                        }
                    }
                    None => self.poly_iter = None,
                }
            },
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum KornblumError {
    NotCoprime,
    ConstantModulus,
    DegreeBoundExceeded(usize),
}

impl fmt::Display for KornblumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KornblumError::NotCoprime => write!(f, "arguments are not coprime"),
            KornblumError::ConstantModulus => write!(f, "modulus must have positive degree"),
            KornblumError::DegreeBoundExceeded(d) => {
                write!(f, "no irreducible found up to degree {}", d)
            }
        }
    }
}

impl std::error::Error for KornblumError {}

/// Safety cap for progression scans; the underlying progression always
/// contains irreducibles, so this is never reached on valid inputs.
pub const KORNBLUM_MAX_DEGREE: usize = 16;

/// Smallest monic irreducible `q` with `q = b (mod a)`, scanning in canonical
/// order. Requires `gcd(a, b) = 1` and `deg a >= 1`.
pub fn kornblum_search(a: &PolyFp, b: &PolyFp) -> Result<PolyFp, KornblumError> {
    kornblum_search_filtered(a, b, |_| true)
}

/// As `kornblum_search`, with an extra acceptance predicate on candidates.
pub fn kornblum_search_filtered(
    a: &PolyFp,
    b: &PolyFp,
    accept: impl Fn(&PolyFp) -> bool,
) -> Result<PolyFp, KornblumError> {
    if a.degree().map_or(true, |d| d < 1) {
        return Err(KornblumError::ConstantModulus);
    }
    if !a.gcd(b).is_one() {
        return Err(KornblumError::NotCoprime);
    }
    let target = b.rem(a);
    for q in Irreducibles::new(Base::Poly { p: a.modulus() }) {
        let q = q.as_poly().clone();
        if q.degree().unwrap() > KORNBLUM_MAX_DEGREE {
            return Err(KornblumError::DegreeBoundExceeded(KORNBLUM_MAX_DEGREE));
        }
        if q.rem(a) == target && accept(&q) {
            return Ok(q);
        }
    }
    unreachable!("irreducible stream is infinite")
}

/// Simultaneous approximation: returns `y` with `ord_p(y - y_p) > n_p` for
/// every target `(p, y_p, n_p)`. Places must be finite and pairwise distinct.
pub fn crt_approximate(targets: &[(Place, FieldElem, i64)]) -> FieldElem {
    assert!(!targets.is_empty(), "no approximation targets");
    let base = targets[0].1.base();
    for (p, y, _) in targets {
        assert!(p.is_finite(), "approximation targets must be finite places");
        assert_eq!(y.base(), base);
    }
    for (i, (p, _, _)) in targets.iter().enumerate() {
        assert!(
            !targets[..i].iter().any(|(q, _, _)| q == p),
            "duplicate approximation place"
        );
    }

    // Scale by d = prod p^delta_p so every target becomes integral at its
    // place and the required precision becomes a plain congruence.
    let mut d = Scalar::one(base);
    let mut scaled: Vec<(Scalar, i64)> = Vec::new(); // (generator, k)
    for (p, y, n) in targets {
        let needed = n + 1;
        let vy = p.ord(y).finite().unwrap_or(0);
        let delta = 0.max(-needed).max(-vy);
        let gen = p.generator();
        d = d.mul(&gen.pow(delta as u32));
        scaled.push((gen, needed + delta));
    }

    // Combine residues of d*y_p modulo p^k by chained CRT.
    let mut acc = Scalar::zero(base);
    let mut modulus = Scalar::one(base);
    for ((_, y, _), (gen, k)) in targets.iter().zip(&scaled) {
        if *k <= 0 {
            continue;
        }
        let pk = gen.pow(*k as u32);
        let z = y.mul(&FieldElem::from_scalar(d.clone()));
        let rep = residue_of_integral(&z, &pk);
        // acc = acc + modulus * ((rep - acc) * modulus^-1 mod pk)
        let (g, minv, _) = modulus.extended_gcd(&pk);
        assert!(g.is_one(), "approximation moduli must be coprime");
        let diff = rep.sub(&acc).rem(&pk);
        let step = diff.mul(&minv).rem(&pk);
        acc = acc.add(&modulus.mul(&step));
        modulus = modulus.mul(&pk);
        acc = acc.rem(&modulus);
    }
    // Least nonnegative (respectively least-degree) representative.
    FieldElem::new(acc, d)
}

/// Residue of a field element integral at the place of `pk` (denominator
/// coprime to `pk`) modulo the scalar `pk`.
fn residue_of_integral(z: &FieldElem, pk: &Scalar) -> Scalar {
    let num = z.numerator().rem(pk);
    let den = z.denominator().rem(pk);
    let (g, dinv, _) = den.extended_gcd(pk);
    assert!(g.is_one(), "denominator not invertible modulo place power");
    num.mul(&dinv).rem(pk)
}
