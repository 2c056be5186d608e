//! Exact fractions over the base ring: elements of `Q` or `F_p(t)`.

use std::fmt;

use crate::scalar::{Base, Scalar};

/// Reduced fraction of base-ring scalars. The denominator is nonzero and
/// canonical (positive over `Z`, monic over `F_p[t]`).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct FieldElem {
    num: Scalar,
    den: Scalar,
}

impl FieldElem {
    pub fn new(num: Scalar, den: Scalar) -> FieldElem {
        assert!(!den.is_zero(), "zero denominator");
        debug_assert_eq!(num.base(), den.base());
        let base = num.base();
        if num.is_zero() {
            return FieldElem { num, den: Scalar::one(base) };
        }
        let g = num.gcd(&den);
        let mut num = num.exact_div(&g).unwrap();
        let (den, unit) = den.exact_div(&g).unwrap().make_canonical();
        if !unit.is_one() {
            num = scalar_div_unit(&num, &unit);
        }
        FieldElem { num, den }
    }

    pub fn from_scalar(s: Scalar) -> FieldElem {
        let base = s.base();
        FieldElem { num: s, den: Scalar::one(base) }
    }

    pub fn from_i64(base: Base, v: i64) -> FieldElem {
        FieldElem::from_scalar(Scalar::from_i64(base, v))
    }

    pub fn zero(base: Base) -> FieldElem {
        FieldElem::from_scalar(Scalar::zero(base))
    }

    pub fn one(base: Base) -> FieldElem {
        FieldElem::from_scalar(Scalar::one(base))
    }

    pub fn base(&self) -> Base {
        self.num.base()
    }

    pub fn numerator(&self) -> &Scalar {
        &self.num
    }

    pub fn denominator(&self) -> &Scalar {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    pub fn add(&self, other: &FieldElem) -> FieldElem {
        FieldElem::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &FieldElem) -> FieldElem {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FieldElem {
        FieldElem { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, other: &FieldElem) -> FieldElem {
        FieldElem::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn mul_scalar(&self, s: &Scalar) -> FieldElem {
        FieldElem::new(self.num.mul(s), self.den.clone())
    }

    pub fn div(&self, other: &FieldElem) -> FieldElem {
        assert!(!other.is_zero(), "division by zero");
        FieldElem::new(self.num.mul(&other.den), self.den.mul(&other.num))
    }

    pub fn inverse(&self) -> FieldElem {
        assert!(!self.is_zero(), "inverse of zero");
        FieldElem::new(self.den.clone(), self.num.clone())
    }

    /// Parse `num` or `num/den`, either side optionally parenthesized.
    pub fn parse(base: Base, s: &str) -> Result<FieldElem, String> {
        let strip = |part: &str| -> String {
            let part = part.trim();
            part.strip_prefix('(')
                .and_then(|inner| inner.strip_suffix(')'))
                .unwrap_or(part)
                .trim()
                .to_string()
        };
        let (num_str, den_str) = match s.split_once('/') {
            Some((n, d)) => (strip(n), Some(strip(d))),
            None => (strip(s), None),
        };
        let num = Scalar::parse(base, &num_str)?;
        let den = match den_str {
            Some(d) => Scalar::parse(base, &d)?,
            None => Scalar::one(base),
        };
        if den.is_zero() {
            return Err("zero denominator".into());
        }
        Ok(FieldElem::new(num, den))
    }
}

fn scalar_div_unit(s: &Scalar, unit: &Scalar) -> Scalar {
    match unit {
        Scalar::Int(_) => s.exact_div(unit).unwrap(),
        Scalar::Poly(u) => {
            debug_assert!(u.is_constant() && !u.is_zero());
            let p = u.modulus();
            let c = u.coeff(0);
            let inv = (1..p)
                .find(|&candidate| (candidate as u128 * c as u128) % p as u128 == 1)
                .expect("constant unit has an inverse");
            Scalar::Poly(s.as_poly().scale(inv))
        }
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            return write!(f, "{}", self.num);
        }
        let num_str = if self.num.needs_parens() {
            format!("({})", self.num)
        } else {
            format!("{}", self.num)
        };
        let den_str = if self.den.needs_parens() {
            format!("({})", self.den)
        } else {
            format!("{}", self.den)
        };
        write!(f, "{}/{}", num_str, den_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::PolyFp;

    #[test]
    fn reduction_and_sign() {
        let x = FieldElem::new(Scalar::int(6), Scalar::int(-4));
        assert_eq!(x.numerator(), &Scalar::int(-3));
        assert_eq!(x.denominator(), &Scalar::int(2));
    }

    #[test]
    fn poly_fraction_monic_denominator() {
        let num = Scalar::Poly(PolyFp::from_signed(3, &[1, 1]));
        let den = Scalar::Poly(PolyFp::from_signed(3, &[0, 2]));
        let x = FieldElem::new(num, den);
        assert_eq!(x.denominator(), &Scalar::Poly(PolyFp::t(3)));
        assert_eq!(x.numerator(), &Scalar::Poly(PolyFp::from_signed(3, &[2, 2])));
    }

    #[test]
    fn field_laws_samples() {
        let a = FieldElem::new(Scalar::int(3), Scalar::int(7));
        let b = FieldElem::new(Scalar::int(-5), Scalar::int(2));
        assert_eq!(a.add(&b).sub(&b), a);
        assert_eq!(a.mul(&b).div(&b), a);
        assert!(a.sub(&a).is_zero());
        assert!(a.div(&a).is_one());
    }

    #[test]
    fn display() {
        assert_eq!(FieldElem::new(Scalar::int(1), Scalar::int(2)).to_string(), "1/2");
        let x = FieldElem::new(
            Scalar::Poly(PolyFp::from_signed(3, &[1, 1])),
            Scalar::Poly(PolyFp::t(3)),
        );
        assert_eq!(x.to_string(), "(t+1)/t");
    }
}
