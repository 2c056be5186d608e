//! Independent bounded brute force over ring elements; the ground-truth
//! side of the differential test suite. Failure to find a witness within a
//! bound is evidence, not proof, of unsatisfiability.

use num_bigint::BigInt;
use num_traits::One;

use crate::formula::{self, Sentence};
use crate::fraction::FieldElem;
use crate::places::{Mode, RingSpec};
use crate::scalar::{Base, PolyFp, Scalar};

/// Enumeration bound: absolute value over `Z` (numerator and denominator),
/// degree over `F_p[t]`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum HeightBound {
    Height(u64),
    Degree(usize),
}

/// All ring elements within the bound, each exactly once, in a fixed order:
/// by height level, then denominator, then numerator, then sign.
pub fn enumerate(ring: &RingSpec, bound: HeightBound) -> Vec<FieldElem> {
    match (ring.base(), bound) {
        (Base::Int, HeightBound::Height(h)) => enumerate_int(ring, h),
        (Base::Poly { p }, HeightBound::Degree(d)) => enumerate_poly(ring, p, d),
        _ => panic!("bound kind does not match the base ring"),
    }
}

fn enumerate_int(ring: &RingSpec, h: u64) -> Vec<FieldElem> {
    let mut out = vec![FieldElem::zero(Base::Int)];
    for level in 1..=h {
        for den in 1..=level {
            if !denominator_admissible(ring, &Scalar::int(den as i64)) {
                continue;
            }
            let numerators: Vec<u64> = if den == level {
                (1..=level).collect()
            } else {
                vec![level]
            };
            for num in numerators {
                if BigInt::from(num).gcd_check(den) {
                    continue;
                }
                for sign in [1i64, -1] {
                    out.push(FieldElem::new(
                        Scalar::int(sign * num as i64),
                        Scalar::int(den as i64),
                    ));
                }
            }
        }
    }
    out
}

trait GcdCheck {
    fn gcd_check(&self, den: u64) -> bool;
}

impl GcdCheck for BigInt {
    fn gcd_check(&self, den: u64) -> bool {
        use num_integer::Integer;
        !self.gcd(&BigInt::from(den)).is_one()
    }
}

fn enumerate_poly(ring: &RingSpec, p: u64, d: usize) -> Vec<FieldElem> {
    let polys_of_degree = |deg: usize| -> Vec<PolyFp> {
        // Nonzero polynomials of exact degree, lexicographic with the
        // leading coefficient most significant.
        let mut out = Vec::new();
        let count = p.pow(deg as u32);
        for lead in 1..p {
            for idx in 0..count {
                let mut coeffs = vec![0u64; deg + 1];
                let mut k = idx;
                for c in coeffs.iter_mut().take(deg) {
                    *c = k % p;
                    k /= p;
                }
                coeffs[deg] = lead;
                out.push(PolyFp::new(p, coeffs));
            }
        }
        out
    };
    let mut out = vec![FieldElem::zero(Base::Poly { p })];
    for level in 0..=d {
        for den_deg in 0..=level {
            for den in polys_of_degree(den_deg) {
                if !den.is_monic() {
                    continue;
                }
                if !denominator_admissible(ring, &Scalar::Poly(den.clone())) {
                    continue;
                }
                let num_degs: Vec<usize> = if den_deg == level {
                    (0..=level).collect()
                } else {
                    vec![level]
                };
                for nd in num_degs {
                    for num in polys_of_degree(nd) {
                        if !num.gcd(&den).is_one() {
                            continue;
                        }
                        out.push(FieldElem::new(Scalar::Poly(num), Scalar::Poly(den.clone())));
                    }
                }
            }
        }
    }
    out
}

/// Denominators must avoid the excluded places (cofinite mode) or stay
/// supported inside `S` (finite mode).
fn denominator_admissible(ring: &RingSpec, den: &Scalar) -> bool {
    if den.is_one() {
        return true;
    }
    match ring.mode() {
        Mode::CofiniteS { t } => t
            .iter()
            .all(|p| !p.generator().divides(den)),
        Mode::FiniteS { .. } => {
            let x = FieldElem::new(Scalar::one(den.base()), den.clone());
            ring.is_member(&x)
        }
    }
}

/// First witness tuple satisfying the sentence, scanning assignment tuples
/// by maximal element index and then lexicographically, or `None` within the
/// bound. `max_tuples` caps the number of tuples examined.
pub fn brute_force(
    s: &Sentence,
    ring: &RingSpec,
    bound: HeightBound,
    max_tuples: Option<usize>,
) -> Option<Vec<FieldElem>> {
    let elems = enumerate(ring, bound);
    let n = s.var_count();
    if n == 0 {
        return formula::eval_sentence_unchecked(s, &[], ring).then_some(Vec::new());
    }
    let mut examined = 0usize;
    // Level = maximal element index used; within a level, lexicographic.
    for level in 0..elems.len() {
        let mut idx = vec![0usize; n];
        'tuples: loop {
            if idx.contains(&level) {
                if let Some(cap) = max_tuples {
                    if examined >= cap {
                        return None;
                    }
                }
                examined += 1;
                let tuple: Vec<FieldElem> = idx.iter().map(|&i| elems[i].clone()).collect();
                if formula::eval_sentence_unchecked(s, &tuple, ring) {
                    return Some(tuple);
                }
            }
            // Odometer in base (level+1), least significant last.
            let mut j = n;
            loop {
                if j == 0 {
                    break 'tuples;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] <= level {
                    continue 'tuples;
                }
                idx[j] = 0;
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::places::Place;

    fn ring2() -> RingSpec {
        RingSpec::cofinite(Base::Int, vec![Place::prime(2).unwrap()]).unwrap()
    }

    #[test]
    fn enumeration_prefix_int() {
        let elems = enumerate(&ring2(), HeightBound::Height(3));
        let strs: Vec<String> = elems.iter().map(|x| x.to_string()).collect();
        assert_eq!(
            strs,
            ["0", "1", "-1", "2", "-2", "3", "-3", "1/3", "-1/3", "2/3", "-2/3"]
        );
    }

    #[test]
    fn enumeration_no_small_denominators() {
        let ring = RingSpec::cofinite(
            Base::Int,
            vec![Place::prime(2).unwrap(), Place::prime(3).unwrap()],
        )
        .unwrap();
        let elems = enumerate(&ring, HeightBound::Height(2));
        let strs: Vec<String> = elems.iter().map(|x| x.to_string()).collect();
        assert_eq!(strs, ["0", "1", "-1", "2", "-2"]);
    }

    #[test]
    fn enumeration_poly_finite_mode() {
        let ring = RingSpec::finite(
            Base::Poly { p: 3 },
            vec![
                Place::Infinity,
                Place::irreducible(PolyFp::t(3)).unwrap(),
            ],
        )
        .unwrap();
        let elems = enumerate(&ring, HeightBound::Degree(1));
        let strs: Vec<String> = elems.iter().map(|x| x.to_string()).collect();
        // Constants, then degree-1 numerators, then denominator t.
        assert_eq!(strs[..3], ["0", "1", "2"]);
        assert!(strs.contains(&"t".to_string()));
        assert!(strs.contains(&"2t+2".to_string()));
        assert!(strs.contains(&"1/t".to_string()));
        assert!(strs.contains(&"(t+1)/t".to_string()));
        assert!(!strs.contains(&"1/(t+1)".to_string()));
    }

    #[test]
    fn brute_force_examples() {
        let ring = ring2();
        // 3 | x and x | 1: 1 is already a witness since 3 is a unit.
        let s = parse("E x . 3 div x & x div 1", Base::Int).unwrap();
        let w = brute_force(&s, &ring, HeightBound::Height(5), None).unwrap();
        assert_eq!(w[0].to_string(), "1");

        let s = parse("E x . 2 div x & x div 1", Base::Int).unwrap();
        assert!(brute_force(&s, &ring, HeightBound::Height(50), None).is_none());

        let s = parse("E x . x = 0", Base::Int).unwrap();
        let w = brute_force(&s, &ring, HeightBound::Height(2), None).unwrap();
        assert!(w[0].is_zero());
    }

    #[test]
    fn brute_force_monotone_in_bound() {
        let ring = ring2();
        let s = parse("E x . 3 div x & x div 5", Base::Int).unwrap();
        let w1 = brute_force(&s, &ring, HeightBound::Height(8), None);
        let w2 = brute_force(&s, &ring, HeightBound::Height(30), None);
        assert_eq!(w1, w2);
        assert!(w1.is_some());
    }
}
