//! Base-ring scalars: arbitrary-precision integers and polynomials over `F_p`
//! in the distinguished variable `t`.

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

/// Which base ring scalars live in.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Base {
    /// The rational integers.
    Int,
    /// `F_p[t]` for the given odd or even prime `p`.
    Poly { p: u64 },
}

impl Base {
    pub fn is_poly(self) -> bool {
        matches!(self, Base::Poly { .. })
    }

    /// Characteristic of the coefficient field (`0` over the integers).
    pub fn characteristic(self) -> u64 {
        match self {
            Base::Int => 0,
            Base::Poly { p } => p,
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Base::Int => write!(f, "Z"),
            Base::Poly { p } => write!(f, "F{}[t]", p),
        }
    }
}

/// Dense polynomial over `F_p`, coefficients ascending by degree, trailing
/// zeros trimmed. The zero polynomial has an empty coefficient vector.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PolyFp {
    p: u64,
    coeffs: Vec<u64>,
}

impl PolyFp {
    pub fn new(p: u64, coeffs: Vec<u64>) -> Self {
        assert!(p >= 2, "modulus must be at least 2");
        let mut coeffs: Vec<u64> = coeffs.into_iter().map(|c| c % p).collect();
        while coeffs.last() == Some(&0) {
            coeffs.pop();
        }
        PolyFp { p, coeffs }
    }

    pub fn from_signed(p: u64, coeffs: &[i64]) -> Self {
        let pp = p as i64;
        PolyFp::new(p, coeffs.iter().map(|&c| c.rem_euclid(pp) as u64).collect())
    }

    pub fn zero(p: u64) -> Self {
        PolyFp { p, coeffs: Vec::new() }
    }

    pub fn one(p: u64) -> Self {
        PolyFp::new(p, vec![1])
    }

    pub fn constant(p: u64, c: u64) -> Self {
        PolyFp::new(p, vec![c])
    }

    /// The polynomial `t`.
    pub fn t(p: u64) -> Self {
        PolyFp::new(p, vec![0, 1])
    }

    pub fn monomial(p: u64, c: u64, deg: usize) -> Self {
        let mut coeffs = vec![0; deg + 1];
        coeffs[deg] = c;
        PolyFp::new(p, coeffs)
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn coeffs(&self) -> &[u64] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> u64 {
        self.coeffs.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.coeffs == [1]
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading_coeff(&self) -> u64 {
        *self.coeffs.last().expect("leading coefficient of zero polynomial")
    }

    pub fn is_monic(&self) -> bool {
        self.coeffs.last() == Some(&1)
    }

    fn mulmod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 * b as u128) % self.p as u128) as u64
    }

    pub fn add(&self, other: &PolyFp) -> PolyFp {
        debug_assert_eq!(self.p, other.p);
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| (self.coeff(i) + other.coeff(i)) % self.p).collect();
        PolyFp::new(self.p, coeffs)
    }

    pub fn neg(&self) -> PolyFp {
        let coeffs = self.coeffs.iter().map(|&c| (self.p - c) % self.p).collect();
        PolyFp::new(self.p, coeffs)
    }

    pub fn sub(&self, other: &PolyFp) -> PolyFp {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &PolyFp) -> PolyFp {
        debug_assert_eq!(self.p, other.p);
        if self.is_zero() || other.is_zero() {
            return PolyFp::zero(self.p);
        }
        let mut coeffs = vec![0u64; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = (coeffs[i + j] + self.mulmod(a, b)) % self.p;
            }
        }
        PolyFp::new(self.p, coeffs)
    }

    pub fn scale(&self, c: u64) -> PolyFp {
        let c = c % self.p;
        PolyFp::new(self.p, self.coeffs.iter().map(|&a| self.mulmod(a, c)).collect())
    }

    /// Multiply by `t^k`.
    pub fn shift(&self, k: usize) -> PolyFp {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![0; k];
        coeffs.extend_from_slice(&self.coeffs);
        PolyFp::new(self.p, coeffs)
    }

    fn inv_scalar(&self, c: u64) -> u64 {
        // Fermat inverse; p is prime.
        let mut result = 1u64;
        let mut base = c % self.p;
        let mut e = self.p - 2;
        while e > 0 {
            if e & 1 == 1 {
                result = self.mulmod(result, base);
            }
            base = self.mulmod(base, base);
            e >>= 1;
        }
        result
    }

    /// Euclidean division: returns `(quotient, remainder)`.
    pub fn divrem(&self, divisor: &PolyFp) -> (PolyFp, PolyFp) {
        debug_assert_eq!(self.p, divisor.p);
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let dd = divisor.degree().unwrap();
        if self.degree().map_or(true, |d| d < dd) {
            return (PolyFp::zero(self.p), self.clone());
        }
        let lead_inv = self.inv_scalar(divisor.leading_coeff());
        let mut rem = self.coeffs.clone();
        let mut quot = vec![0u64; rem.len() - dd];
        for i in (dd..rem.len()).rev() {
            let c = rem[i];
            if c == 0 {
                continue;
            }
            let q = self.mulmod(c, lead_inv);
            quot[i - dd] = q;
            for (j, &b) in divisor.coeffs.iter().enumerate() {
                let idx = i - dd + j;
                rem[idx] = (rem[idx] + self.p - self.mulmod(q, b) % self.p) % self.p;
            }
        }
        (PolyFp::new(self.p, quot), PolyFp::new(self.p, rem))
    }

    pub fn rem(&self, divisor: &PolyFp) -> PolyFp {
        self.divrem(divisor).1
    }

    pub fn divides(&self, other: &PolyFp) -> bool {
        if self.is_zero() {
            return other.is_zero();
        }
        other.rem(self).is_zero()
    }

    /// Monic greatest common divisor.
    pub fn gcd(&self, other: &PolyFp) -> PolyFp {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        if a.is_zero() {
            a
        } else {
            a.make_monic().0
        }
    }

    /// Scale to a monic polynomial; returns `(monic, removed leading coefficient)`.
    pub fn make_monic(&self) -> (PolyFp, u64) {
        assert!(!self.is_zero());
        let lead = self.leading_coeff();
        (self.scale(self.inv_scalar(lead)), lead)
    }

    /// Extended gcd: returns `(g, u, v)` with `g` monic (or zero) and
    /// `u*self + v*other = g`.
    pub fn extended_gcd(&self, other: &PolyFp) -> (PolyFp, PolyFp, PolyFp) {
        let p = self.p;
        let (mut r0, mut r1) = (self.clone(), other.clone());
        let (mut s0, mut s1) = (PolyFp::one(p), PolyFp::zero(p));
        let (mut t0, mut t1) = (PolyFp::zero(p), PolyFp::one(p));
        while !r1.is_zero() {
            let (q, r) = r0.divrem(&r1);
            r0 = r1;
            r1 = r;
            let s = s0.sub(&q.mul(&s1));
            s0 = s1;
            s1 = s;
            let t = t0.sub(&q.mul(&t1));
            t0 = t1;
            t1 = t;
        }
        if r0.is_zero() {
            return (r0, s0, t0);
        }
        let lead = r0.leading_coeff();
        let inv = self.inv_scalar(lead);
        (r0.scale(inv), s0.scale(inv), t0.scale(inv))
    }

    /// Inverse modulo `m`, if coprime.
    pub fn inv_mod(&self, m: &PolyFp) -> Option<PolyFp> {
        let (g, u, _) = self.extended_gcd(m);
        if g.is_one() {
            Some(u.rem(m))
        } else {
            None
        }
    }

    pub fn pow(&self, e: u32) -> PolyFp {
        let mut result = PolyFp::one(self.p);
        for _ in 0..e {
            result = result.mul(self);
        }
        result
    }

    /// `self^e mod m` by square-and-multiply over the bits of `e`.
    pub fn pow_mod(&self, e: &BigUint, m: &PolyFp) -> PolyFp {
        let mut result = PolyFp::one(self.p).rem(m);
        let mut base = self.rem(m);
        let mut e = e.clone();
        while !e.is_zero() {
            if e.bit(0) {
                result = result.mul(&base).rem(m);
            }
            base = base.mul(&base).rem(m);
            e >>= 1;
        }
        result
    }

    pub fn eval(&self, x: u64) -> u64 {
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = (self.mulmod(acc, x) + c) % self.p;
        }
        acc
    }

    /// Irreducibility over `F_p` by trial division with all monic polynomials
    /// of degree at most `deg/2`.
    pub fn is_irreducible(&self) -> bool {
        let d = match self.degree() {
            None | Some(0) => return false,
            Some(1) => return true,
            Some(d) => d,
        };
        for dd in 1..=d / 2 {
            let mut iter = MonicPolys::new(self.p, dd);
            while let Some(g) = iter.next_poly() {
                if g.divides(self) {
                    return false;
                }
            }
        }
        true
    }

    /// Parse the ASCII polynomial syntax, e.g. `t^2+2t+1`, `2t`, `t`, `5`.
    pub fn parse(p: u64, s: &str) -> Result<PolyFp, String> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err("empty polynomial".into());
        }
        let mut result = PolyFp::zero(p);
        let mut rest = s.as_str();
        let mut sign_neg = false;
        if let Some(r) = rest.strip_prefix('-') {
            sign_neg = true;
            rest = r;
        }
        loop {
            let end = rest
                .char_indices()
                .find(|&(i, c)| i > 0 && (c == '+' || c == '-'))
                .map(|(i, _)| i)
                .unwrap_or(rest.len());
            let (mono, tail) = rest.split_at(end);
            let term = Self::parse_monomial(p, mono)?;
            result = if sign_neg { result.sub(&term) } else { result.add(&term) };
            if tail.is_empty() {
                break;
            }
            sign_neg = tail.starts_with('-');
            rest = &tail[1..];
            if rest.is_empty() {
                return Err("dangling sign in polynomial".into());
            }
        }
        Ok(result)
    }

    fn parse_monomial(p: u64, s: &str) -> Result<PolyFp, String> {
        let (digits, rest) = split_leading_digits(s);
        let coeff = if digits.is_empty() {
            1
        } else {
            digits.parse::<u64>().map_err(|_| format!("bad coefficient `{}`", digits))? % p
        };
        if rest.is_empty() {
            if digits.is_empty() {
                return Err(format!("bad monomial `{}`", s));
            }
            return Ok(PolyFp::constant(p, coeff));
        }
        let rest = rest
            .strip_prefix('t')
            .ok_or_else(|| format!("bad monomial `{}`", s))?;
        let deg = if rest.is_empty() {
            1
        } else {
            let rest = rest
                .strip_prefix('^')
                .ok_or_else(|| format!("bad monomial `{}`", s))?;
            rest.parse::<usize>().map_err(|_| format!("bad exponent `{}`", rest))?
        };
        Ok(PolyFp::monomial(p, coeff, deg))
    }
}

fn split_leading_digits(s: &str) -> (&str, &str) {
    let n = s.chars().take_while(|c| c.is_ascii_digit()).count();
    s.split_at(n)
}

impl fmt::Display for PolyFp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for i in (0..self.coeffs.len()).rev() {
            let c = self.coeffs[i];
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            match (i, c) {
                (0, c) => write!(f, "{}", c)?,
                (1, 1) => write!(f, "t")?,
                (1, c) => write!(f, "{}t", c)?,
                (i, 1) => write!(f, "t^{}", i)?,
                (i, c) => write!(f, "{}t^{}", c, i)?,
            }
        }
        Ok(())
    }
}

/// Iterator over monic polynomials of fixed degree in lexicographic order
/// (higher-degree coefficients most significant).
pub struct MonicPolys {
    p: u64,
    degree: usize,
    index: BigUint,
    count: BigUint,
}

impl MonicPolys {
    pub fn new(p: u64, degree: usize) -> Self {
        let count = BigUint::from(p).pow(degree as u32);
        MonicPolys { p, degree, index: BigUint::zero(), count }
    }

    pub fn next_poly(&mut self) -> Option<PolyFp> {
        if self.index >= self.count {
            return None;
        }
        let poly = monic_from_index(self.p, self.degree, &self.index);
        self.index += 1u32;
        Some(poly)
    }
}

/// Monic polynomial of the given degree whose lower coefficients are the
/// base-`p` digits of `index`, most significant digit on `t^(degree-1)`.
pub fn monic_from_index(p: u64, degree: usize, index: &BigUint) -> PolyFp {
    let mut coeffs = vec![0u64; degree + 1];
    coeffs[degree] = 1;
    let mut idx = index.clone();
    let big_p = BigUint::from(p);
    for c in coeffs.iter_mut().take(degree) {
        let digit = (&idx % &big_p).to_u64_digits();
        *c = digit.first().copied().unwrap_or(0);
        idx /= &big_p;
    }
    PolyFp::new(p, coeffs)
}

/// A base-ring element: an integer or a polynomial over `F_p`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Scalar {
    Int(BigInt),
    Poly(PolyFp),
}

impl Scalar {
    pub fn base(&self) -> Base {
        match self {
            Scalar::Int(_) => Base::Int,
            Scalar::Poly(q) => Base::Poly { p: q.modulus() },
        }
    }

    pub fn zero(base: Base) -> Scalar {
        match base {
            Base::Int => Scalar::Int(BigInt::zero()),
            Base::Poly { p } => Scalar::Poly(PolyFp::zero(p)),
        }
    }

    pub fn one(base: Base) -> Scalar {
        match base {
            Base::Int => Scalar::Int(BigInt::one()),
            Base::Poly { p } => Scalar::Poly(PolyFp::one(p)),
        }
    }

    pub fn from_i64(base: Base, v: i64) -> Scalar {
        match base {
            Base::Int => Scalar::Int(BigInt::from(v)),
            Base::Poly { p } => Scalar::Poly(PolyFp::from_signed(p, &[v])),
        }
    }

    pub fn int(v: i64) -> Scalar {
        Scalar::Int(BigInt::from(v))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Int(v) => v.is_zero(),
            Scalar::Poly(q) => q.is_zero(),
        }
    }

    pub fn is_one(&self) -> bool {
        match self {
            Scalar::Int(v) => v.is_one(),
            Scalar::Poly(q) => q.is_one(),
        }
    }

    fn lift<FI, FP>(&self, other: &Scalar, fi: FI, fp: FP) -> Scalar
    where
        FI: FnOnce(&BigInt, &BigInt) -> BigInt,
        FP: FnOnce(&PolyFp, &PolyFp) -> PolyFp,
    {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => Scalar::Int(fi(a, b)),
            (Scalar::Poly(a), Scalar::Poly(b)) => Scalar::Poly(fp(a, b)),
            _ => panic!("mixed scalar bases"),
        }
    }

    pub fn add(&self, other: &Scalar) -> Scalar {
        self.lift(other, |a, b| a + b, PolyFp::add)
    }

    pub fn sub(&self, other: &Scalar) -> Scalar {
        self.lift(other, |a, b| a - b, PolyFp::sub)
    }

    pub fn mul(&self, other: &Scalar) -> Scalar {
        self.lift(other, |a, b| a * b, PolyFp::mul)
    }

    pub fn neg(&self) -> Scalar {
        match self {
            Scalar::Int(v) => Scalar::Int(-v),
            Scalar::Poly(q) => Scalar::Poly(q.neg()),
        }
    }

    /// Euclidean division with nonnegative (respectively lower-degree) remainder.
    pub fn divrem(&self, other: &Scalar) -> (Scalar, Scalar) {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => {
                let (q, r) = a.div_mod_floor(b);
                (Scalar::Int(q), Scalar::Int(r))
            }
            (Scalar::Poly(a), Scalar::Poly(b)) => {
                let (q, r) = a.divrem(b);
                (Scalar::Poly(q), Scalar::Poly(r))
            }
            _ => panic!("mixed scalar bases"),
        }
    }

    pub fn rem(&self, other: &Scalar) -> Scalar {
        self.divrem(other).1
    }

    /// Exact quotient, or `None` when `other` does not divide `self`.
    pub fn exact_div(&self, other: &Scalar) -> Option<Scalar> {
        assert!(!other.is_zero(), "exact division by zero");
        let (q, r) = self.divrem(other);
        r.is_zero().then_some(q)
    }

    pub fn divides(&self, other: &Scalar) -> bool {
        if self.is_zero() {
            return other.is_zero();
        }
        other.rem(self).is_zero()
    }

    /// Nonnegative (respectively monic) greatest common divisor.
    pub fn gcd(&self, other: &Scalar) -> Scalar {
        self.lift(other, |a, b| a.gcd(b), PolyFp::gcd)
    }

    /// Extended gcd: `(g, u, v)` with `u*self + v*other = g` and `g` canonical.
    pub fn extended_gcd(&self, other: &Scalar) -> (Scalar, Scalar, Scalar) {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => {
                let e = a.extended_gcd(b);
                if e.gcd.is_negative() {
                    (Scalar::Int(-e.gcd), Scalar::Int(-e.x), Scalar::Int(-e.y))
                } else {
                    (Scalar::Int(e.gcd), Scalar::Int(e.x), Scalar::Int(e.y))
                }
            }
            (Scalar::Poly(a), Scalar::Poly(b)) => {
                let (g, u, v) = a.extended_gcd(b);
                (Scalar::Poly(g), Scalar::Poly(u), Scalar::Poly(v))
            }
            _ => panic!("mixed scalar bases"),
        }
    }

    /// Canonical associate: positive over the integers, monic over `F_p[t]`.
    /// Returns `(canonical, unit)` with `self = unit * canonical`.
    pub fn make_canonical(&self) -> (Scalar, Scalar) {
        match self {
            Scalar::Int(v) => {
                if v.is_negative() {
                    (Scalar::Int(-v), Scalar::int(-1))
                } else {
                    (self.clone(), Scalar::int(1))
                }
            }
            Scalar::Poly(q) => {
                if q.is_zero() {
                    (self.clone(), Scalar::Poly(PolyFp::one(q.modulus())))
                } else {
                    let (m, lead) = q.make_monic();
                    (Scalar::Poly(m), Scalar::Poly(PolyFp::constant(q.modulus(), lead)))
                }
            }
        }
    }

    pub fn is_canonical_assoc(&self) -> bool {
        match self {
            Scalar::Int(v) => !v.is_negative(),
            Scalar::Poly(q) => q.is_zero() || q.is_monic(),
        }
    }

    /// Whether this is a unit of the base ring (sign over `Z`, nonzero
    /// constant over `F_p[t]`).
    pub fn is_base_unit(&self) -> bool {
        match self {
            Scalar::Int(v) => v.magnitude().is_one(),
            Scalar::Poly(q) => !q.is_zero() && q.is_constant(),
        }
    }

    /// Size measure used to bound enumeration: absolute value over `Z`,
    /// degree over `F_p[t]` (zero has size 0).
    pub fn height(&self) -> BigUint {
        match self {
            Scalar::Int(v) => v.magnitude().clone(),
            Scalar::Poly(q) => BigUint::from(q.degree().map_or(0, |d| d)),
        }
    }

    pub fn as_int(&self) -> &BigInt {
        match self {
            Scalar::Int(v) => v,
            Scalar::Poly(_) => panic!("expected integer scalar"),
        }
    }

    pub fn as_poly(&self) -> &PolyFp {
        match self {
            Scalar::Poly(q) => q,
            Scalar::Int(_) => panic!("expected polynomial scalar"),
        }
    }

    pub fn pow(&self, e: u32) -> Scalar {
        let mut acc = Scalar::one(self.base());
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Parse a scalar literal: an integer over `Z`, polynomial syntax over
    /// `F_p[t]`.
    pub fn parse(base: Base, s: &str) -> Result<Scalar, String> {
        match base {
            Base::Int => s
                .trim()
                .parse::<BigInt>()
                .map(Scalar::Int)
                .map_err(|_| format!("bad integer `{}`", s)),
            Base::Poly { p } => PolyFp::parse(p, s).map(Scalar::Poly),
        }
    }

    /// Whether printing this scalar needs parentheses inside a product or
    /// fraction (more than one printed monomial).
    pub fn needs_parens(&self) -> bool {
        match self {
            Scalar::Int(_) => false,
            Scalar::Poly(q) => q.coeffs().iter().filter(|&&c| c != 0).count() > 1,
        }
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{}", v),
            Scalar::Poly(q) => write!(f, "{}", q),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(coeffs: &[i64]) -> PolyFp {
        PolyFp::from_signed(3, coeffs)
    }

    #[test]
    fn poly_normalization() {
        assert!(PolyFp::new(3, vec![0, 0, 0]).is_zero());
        assert_eq!(PolyFp::new(3, vec![4, 3, 1]).coeffs(), &[1, 0, 1]);
    }

    #[test]
    fn poly_divrem_roundtrip() {
        let a = poly(&[1, 2, 0, 1]); // t^3 + 2t + 1
        let b = poly(&[1, 1]); // t + 1
        let (q, r) = a.divrem(&b);
        assert_eq!(q.mul(&b).add(&r), a);
        assert!(r.degree() < b.degree());
    }

    #[test]
    fn poly_gcd_monic() {
        let a = poly(&[0, 1]).mul(&poly(&[1, 1])); // t(t+1)
        let b = poly(&[0, 1]).mul(&poly(&[2, 1])); // t(t+2)
        assert_eq!(a.gcd(&b), poly(&[0, 1]));
    }

    #[test]
    fn poly_extended_gcd() {
        let a = poly(&[1, 2, 0, 1]);
        let b = poly(&[2, 1, 1]);
        let (g, u, v) = a.extended_gcd(&b);
        assert_eq!(u.mul(&a).add(&v.mul(&b)), g);
    }

    #[test]
    fn irreducibility_over_f3() {
        assert!(poly(&[1, 0, 1]).is_irreducible()); // t^2+1, no roots in F3
        assert!(!poly(&[2, 0, 1]).is_irreducible()); // t^2+2 = (t+1)(t+2)
        assert!(poly(&[1, 1]).is_irreducible());
        assert!(!poly(&[2]).is_irreducible());
    }

    #[test]
    fn poly_display_and_parse() {
        let q = poly(&[1, 2, 1]);
        assert_eq!(q.to_string(), "t^2+2t+1");
        assert_eq!(PolyFp::parse(3, "t^2+2t+1").unwrap(), q);
        assert_eq!(PolyFp::parse(3, "t").unwrap(), PolyFp::t(3));
        assert_eq!(PolyFp::parse(3, "5").unwrap(), PolyFp::constant(3, 2));
        assert_eq!(PolyFp::parse(3, "2t").unwrap(), poly(&[0, 2]));
        assert!(PolyFp::parse(3, "t^").is_err());
        assert!(PolyFp::parse(3, "").is_err());
    }

    #[test]
    fn monic_enumeration_order() {
        let mut it = MonicPolys::new(3, 1);
        let names: Vec<String> = std::iter::from_fn(|| it.next_poly()).map(|q| q.to_string()).collect();
        assert_eq!(names, ["t", "t+1", "t+2"]);
        let mut it = MonicPolys::new(3, 2);
        assert_eq!(it.next_poly().unwrap().to_string(), "t^2");
        assert_eq!(it.next_poly().unwrap().to_string(), "t^2+1");
    }

    #[test]
    fn scalar_extended_gcd_int() {
        let a = Scalar::int(12);
        let b = Scalar::int(-8);
        let (g, u, v) = a.extended_gcd(&b);
        assert_eq!(g, Scalar::int(4));
        assert_eq!(u.mul(&a).add(&v.mul(&b)), g);
    }

    #[test]
    fn scalar_canonical() {
        let (c, u) = Scalar::int(-6).make_canonical();
        assert_eq!(c, Scalar::int(6));
        assert_eq!(u, Scalar::int(-1));
        let (c, u) = Scalar::Poly(poly(&[0, 2])).make_canonical();
        assert_eq!(c, Scalar::Poly(poly(&[0, 1])));
        assert_eq!(u, Scalar::Poly(poly(&[2])));
    }

    #[test]
    fn pow_mod_matches_naive() {
        use num_bigint::BigUint;
        let base = poly(&[1, 1]);
        let m = poly(&[1, 0, 1]);
        let naive = base.pow(10).rem(&m);
        assert_eq!(base.pow_mod(&BigUint::from(10u32), &m), naive);
    }
}
