//! End-to-end decision pipeline: normalize, parametrize the equations,
//! compile and decide at every excluded place, then assemble a global
//! verdict and extract a checked witness by simultaneous approximation.

use std::fmt;

use crate::exactlin::{lin, AffineParam};
use crate::formula::{self, NormalSystem, Sentence};
use crate::fraction::FieldElem;
use crate::localdec::{
    check_local_witness, compile_local, decide_local, form_lambda, LocalSystem, LocalVerdict,
};
use crate::places::{crt_approximate, OrdVal, Place, RingSpec};

/// Per-place provenance of a satisfiability verdict.
#[derive(Clone, Debug)]
pub struct PlaceWitness {
    pub place: Place,
    pub local_witness: Vec<FieldElem>,
    pub precision: i64,
    pub threshold: i64,
}

/// Provenance of a satisfiability verdict: the chosen disjunct, its
/// parametrization, and the per-place local data the witness was built from.
#[derive(Clone, Debug)]
pub struct SatProvenance {
    pub disjunct: usize,
    pub param: AffineParam,
    pub parameter_point: Vec<FieldElem>,
    pub places: Vec<PlaceWitness>,
}

#[derive(Clone, Debug)]
pub enum Verdict {
    Unsat,
    Sat { witness: Vec<FieldElem>, provenance: SatProvenance },
}

impl Verdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, Verdict::Sat { .. })
    }
}

/// Outcome of `decide`: a verdict, or inconclusive when bounded local
/// decisions ran out of budget on every undecided disjunct.
#[derive(Clone, Debug)]
pub enum DecisionOutcome {
    Decided(Verdict),
    Inconclusive { unknown_disjuncts: usize },
}

impl DecisionOutcome {
    pub fn verdict(&self) -> Option<&Verdict> {
        match self {
            DecisionOutcome::Decided(v) => Some(v),
            DecisionOutcome::Inconclusive { .. } => None,
        }
    }
}

impl fmt::Display for DecisionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecisionOutcome::Decided(Verdict::Unsat) => write!(f, "UNSAT"),
            DecisionOutcome::Decided(Verdict::Sat { witness, .. }) => {
                let w: Vec<String> = witness.iter().map(|x| x.to_string()).collect();
                write!(f, "SAT {}", w.join(", "))
            }
            DecisionOutcome::Inconclusive { unknown_disjuncts } => {
                write!(f, "UNKNOWN ({} disjuncts undecided)", unknown_disjuncts)
            }
        }
    }
}

/// Decide an existential sentence over a cofinite-S ring. A sentence is
/// satisfiable iff some normal disjunct has a solvable linear part and a
/// satisfiable compiled system at every excluded place; satisfiable verdicts
/// carry a witness assembled by approximation and re-verified semantically.
pub fn decide(s: &Sentence, ring: &RingSpec, budget: Option<i64>) -> DecisionOutcome {
    assert!(ring.is_cofinite(), "decision procedure requires cofinite-S mode");
    let t = ring.t_places();
    let nf = formula::normalize(s, t);
    let mut unknown = 0usize;
    for (idx, system) in nf.systems.iter().enumerate() {
        match decide_disjunct(system, s.var_count(), ring, budget, idx) {
            DisjunctOutcome::Sat(witness, prov) => {
                assert!(
                    check_witness(s, &witness, ring),
                    "extracted witness failed semantic re-verification"
                );
                return DecisionOutcome::Decided(Verdict::Sat { witness, provenance: prov });
            }
            DisjunctOutcome::Unsat => {}
            DisjunctOutcome::Unknown => unknown += 1,
        }
    }
    if unknown > 0 {
        DecisionOutcome::Inconclusive { unknown_disjuncts: unknown }
    } else {
        DecisionOutcome::Decided(Verdict::Unsat)
    }
}

enum DisjunctOutcome {
    Sat(Vec<FieldElem>, SatProvenance),
    Unsat,
    Unknown,
}

fn decide_disjunct(
    system: &NormalSystem,
    var_count: usize,
    ring: &RingSpec,
    budget: Option<i64>,
    disjunct: usize,
) -> DisjunctOutcome {
    let base = ring.base();
    let equations: Vec<_> = system
        .atoms
        .iter()
        .filter_map(|a| match a {
            formula::NormalAtom::Eq0(l) => Some(l.clone()),
            _ => None,
        })
        .collect();
    let Some(param) = lin(&equations, var_count, base) else {
        return DisjunctOutcome::Unsat;
    };
    let t = ring.t_places();
    let mut locals: Vec<(LocalSystem, Vec<FieldElem>, i64)> = Vec::new();
    for place in t {
        let ls = compile_local(system, &param, place, t);
        match decide_local(&ls, budget) {
            LocalVerdict::Unsat => return DisjunctOutcome::Unsat,
            LocalVerdict::Unknown => return DisjunctOutcome::Unknown,
            LocalVerdict::Sat { witness, precision } => {
                locals.push((ls, witness, precision));
            }
        }
    }
    // Thresholds and global approximation.
    let mut place_witnesses = Vec::new();
    let mut targets: Vec<Vec<(Place, FieldElem, i64)>> = vec![Vec::new(); param.params()];
    for (ls, w, k) in &locals {
        let n_p = compute_thresholds(ls, w, *k);
        place_witnesses.push(PlaceWitness {
            place: ls.place.clone(),
            local_witness: w.clone(),
            precision: *k,
            threshold: n_p,
        });
        for (j, target) in targets.iter_mut().enumerate() {
            target.push((ls.place.clone(), w[j].clone(), n_p));
        }
    }
    let y0 = extract_parameter_point(&targets);
    let witness = param.apply(&y0);
    let prov = SatProvenance {
        disjunct,
        param: param.clone(),
        parameter_point: y0,
        places: place_witnesses,
    };
    DisjunctOutcome::Sat(witness, prov)
}

/// Threshold `n_p` for one place: perturbations of the local witness with
/// `ord(y - y_p) > n_p` keep every atom satisfied and keep the affine image
/// integral. Computed from ultrametric coefficient bounds: for each atom the
/// frozen order bound reduced by the participating forms' minimal coefficient
/// orders, joined with the integrality bound from the parametrization matrix.
pub fn compute_thresholds(ls: &LocalSystem, witness: &[FieldElem], precision: i64) -> i64 {
    debug_assert!(check_local_witness(ls, witness, precision));
    let place = &ls.place;
    let mut n_p = 0i64;
    for atom in &ls.atoms {
        let involved = atom.forms();
        let bound = involved
            .iter()
            .filter_map(|&i| place.ord(&ls.forms[i].eval(witness)).finite())
            .max();
        let Some(m_atom) = bound else { continue };
        for &i in &involved {
            if let OrdVal::Fin(lambda) = form_lambda(&ls.forms[i], place) {
                n_p = n_p.max(m_atom - lambda);
            }
        }
    }
    // Integrality of A*y + c under perturbation.
    let mut lambda_a: Option<i64> = None;
    for i in 0..ls.param.ambient() {
        for j in 0..ls.param.params() {
            if let OrdVal::Fin(o) = place.ord(ls.param.a.at(i, j)) {
                lambda_a = Some(lambda_a.map_or(o, |m| m.min(o)));
            }
        }
    }
    if let Some(la) = lambda_a {
        n_p = n_p.max(-la - 1).max(0);
    }
    n_p
}

/// Choose one global parameter point approximating every place's local
/// witness within its threshold, then map through the parametrization.
fn extract_parameter_point(targets: &[Vec<(Place, FieldElem, i64)>]) -> Vec<FieldElem> {
    targets
        .iter()
        .map(|coord_targets| crt_approximate(coord_targets))
        .collect()
}

/// Semantic verification: every entry lies in the ring and the sentence
/// evaluates to true.
pub fn check_witness(s: &Sentence, witness: &[FieldElem], ring: &RingSpec) -> bool {
    witness.len() >= s.var_count()
        && witness.iter().all(|x| ring.is_member(x))
        && formula::eval_sentence_unchecked(s, witness, ring)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse;
    use crate::scalar::{Base, Scalar};

    fn ring2() -> RingSpec {
        RingSpec::cofinite(Base::Int, vec![Place::prime(2).unwrap()]).unwrap()
    }

    fn fe(n: i64) -> FieldElem {
        FieldElem::from_i64(Base::Int, n)
    }

    fn decide_full(text: &str, ring: &RingSpec) -> DecisionOutcome {
        decide(&parse(text, ring.base()).unwrap(), ring, None)
    }

    #[test]
    fn unit_interval_contradiction_unsat() {
        let out = decide_full("E x . 2 div x & x div 1", &ring2());
        assert!(matches!(out, DecisionOutcome::Decided(Verdict::Unsat)));
    }

    #[test]
    fn unit_divisible_by_unit_sat() {
        let out = decide_full("E x . 3 div x & x div 1", &ring2());
        match out {
            DecisionOutcome::Decided(Verdict::Sat { witness, .. }) => {
                let s = parse("E x . 3 div x & x div 1", Base::Int).unwrap();
                assert!(check_witness(&s, &witness, &ring2()));
            }
            other => panic!("expected sat, got {}", other),
        }
    }

    #[test]
    fn parity_split_unsat() {
        let out = decide_full("E x y . x + y = 1 & 2 div x & 2 div y", &ring2());
        assert!(matches!(out, DecisionOutcome::Decided(Verdict::Unsat)));
    }

    #[test]
    fn threshold_examples() {
        use crate::exactlin::{AffineParam, Mat};
        use crate::localdec::LocalAtom;
        let base = Base::Int;
        let var = crate::exactlin::AffineForm { coeffs: vec![fe(1)], constant: fe(0) };
        let one = crate::exactlin::AffineForm { coeffs: vec![fe(0)], constant: fe(1) };
        let ls = LocalSystem {
            place: Place::prime(2).unwrap(),
            param: AffineParam::identity(base, 1),
            forms: vec![var.clone(), one],
            atoms: vec![LocalAtom::DivLe { lhs: 0, rhs: 1 }],
        };
        assert_eq!(compute_thresholds(&ls, &[fe(1)], 1), 0);

        let ls2 = LocalSystem {
            place: Place::prime(2).unwrap(),
            param: AffineParam::identity(base, 1),
            forms: vec![var.clone()],
            atoms: vec![LocalAtom::NonNeg { form: 0 }],
        };
        assert_eq!(compute_thresholds(&ls2, &[fe(0)], 0), 0);

        let two = crate::exactlin::AffineForm {
            coeffs: vec![fe(0)],
            constant: fe(2),
        };
        let ls3 = LocalSystem {
            place: Place::prime(2).unwrap(),
            param: AffineParam::identity(base, 1),
            forms: vec![var, two],
            atoms: vec![LocalAtom::OrdGt { hi: 0, lo: 1 }],
        };
        assert_eq!(compute_thresholds(&ls3, &[fe(8)], 4), 3);
        let _ = Mat::identity(base, 1);
        let _ = Scalar::int(0);
    }

    #[test]
    fn extraction_crt_example() {
        // Two places with different thresholds combine through approximation.
        let targets = vec![vec![
            (Place::prime(2).unwrap(), fe(1), 2),
            (Place::prime(3).unwrap(), fe(2), 1),
        ]];
        let y0 = extract_parameter_point(&targets);
        assert_eq!(y0, vec![fe(65)]);
    }

    #[test]
    fn check_witness_examples() {
        let ring = ring2();
        let s = parse("E x . 3 div x & x div 1", Base::Int).unwrap();
        assert!(check_witness(&s, &[fe(3)], &ring));
        assert!(!check_witness(&s, &[fe(2)], &ring));
        let half = FieldElem::new(Scalar::int(1), Scalar::int(2));
        assert!(!check_witness(&s, &[half], &ring));
    }
}
