//! Acceptance suite: one test per criterion, each printing a pass line.
//! Run with `cargo test -p holodec-core --test acceptance -- --nocapture`.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use holodec_core::deflab;
use holodec_core::exactlin::{lin, solve_exact, Mat};
use holodec_core::formula::{self, LinTerm, Literal, NormalAtom, Sentence};
use holodec_core::fraction::FieldElem;
use holodec_core::localdec::{
    check_local_witness, compile_local, decide_local, decide_local_y_space, satisfies_at,
    LocalSystem, LocalVerdict,
};
use holodec_core::oracle::{self, HeightBound};
use holodec_core::places::{OrdVal, Place, RingSpec};
use holodec_core::solver::{self, DecisionOutcome, Verdict};
use holodec_core::{Base, PolyFp, Scalar};

// ---------------------------------------------------------------------------
// Random generators
// ---------------------------------------------------------------------------

fn int_ring(primes: &[i64]) -> RingSpec {
    let places = primes.iter().map(|&p| Place::prime(p).unwrap()).collect();
    RingSpec::cofinite(Base::Int, places).unwrap()
}

fn poly_ring(gens: &[&[i64]]) -> RingSpec {
    let places = gens
        .iter()
        .map(|c| Place::irreducible(PolyFp::from_signed(3, c)).unwrap())
        .collect();
    RingSpec::cofinite(Base::Poly { p: 3 }, places).unwrap()
}

fn random_scalar(rng: &mut ChaCha8Rng, base: Base, nonzero: bool) -> Scalar {
    loop {
        let s = match base {
            Base::Int => Scalar::int(rng.gen_range(-9..=9)),
            Base::Poly { p } => {
                let deg = rng.gen_range(0..=2);
                let coeffs: Vec<u64> = (0..=deg).map(|_| rng.gen_range(0..p)).collect();
                Scalar::Poly(PolyFp::new(p, coeffs))
            }
        };
        if !nonzero || !s.is_zero() {
            return s;
        }
    }
}

fn random_linterm(rng: &mut ChaCha8Rng, base: Base, nvars: usize) -> LinTerm {
    let mut l = LinTerm::constant(random_scalar(rng, base, false));
    for v in 0..nvars {
        if rng.gen_bool(0.6) {
            l = l.plus_monomial(v, random_scalar(rng, base, true));
        }
    }
    l
}

fn random_literal(rng: &mut ChaCha8Rng, base: Base, nvars: usize) -> Literal {
    let a = random_linterm(rng, base, nvars);
    let b = random_linterm(rng, base, nvars);
    match rng.gen_range(0..6) {
        0 | 1 => Literal::Div(a, b),
        2 => Literal::Eq(a),
        3 => Literal::NegEq(a),
        _ => Literal::NegDiv(a, b),
    }
}

fn random_sentence(rng: &mut ChaCha8Rng, base: Base) -> Sentence {
    let nvars = rng.gen_range(1..=3);
    let nlits = rng.gen_range(1..=4);
    let clauses = if nlits > 1 && rng.gen_bool(0.3) { 2 } else { 1 };
    let mut matrix = vec![Vec::new(); clauses];
    for i in 0..nlits {
        matrix[i % clauses].push(random_literal(rng, base, nvars));
    }
    Sentence::new(nvars, matrix)
}

fn random_int_t(rng: &mut ChaCha8Rng) -> RingSpec {
    let pool = [2i64, 3, 5];
    let k = rng.gen_range(1..=3);
    let mut chosen: Vec<i64> = pool.choose_multiple(rng, k).copied().collect();
    chosen.sort_unstable();
    int_ring(&chosen)
}

fn random_poly_t(rng: &mut ChaCha8Rng) -> RingSpec {
    match rng.gen_range(0..3) {
        0 => poly_ring(&[&[0, 1]]),
        1 => poly_ring(&[&[1, 1]]),
        _ => poly_ring(&[&[0, 1], &[1, 1]]),
    }
}

/// Random integral rational at the given place (denominator coprime to it).
fn random_integral_at(rng: &mut ChaCha8Rng, place: &Place, base: Base) -> FieldElem {
    match base {
        Base::Int => {
            let num = Scalar::int(rng.gen_range(-200..=200));
            let dens = [1i64, 3, 5, 7, 11, 13];
            loop {
                let d = *dens.choose(rng).unwrap();
                let den = Scalar::int(d);
                let x = FieldElem::new(num.clone(), den);
                if place.ord(&x) >= OrdVal::Fin(0) {
                    return x;
                }
            }
        }
        Base::Poly { p } => {
            let deg = rng.gen_range(0..=3);
            let coeffs: Vec<u64> = (0..=deg).map(|_| rng.gen_range(0..p)).collect();
            FieldElem::from_scalar(Scalar::Poly(PolyFp::new(p, coeffs)))
        }
    }
}

// ---------------------------------------------------------------------------
// Criterion 1 and 6: differential soundness and witness extraction
// ---------------------------------------------------------------------------

struct SatRecord {
    sentence: Sentence,
    ring: RingSpec,
    verdict: Verdict,
}

fn differential_run(
    rng: &mut ChaCha8Rng,
    count: usize,
    base: Base,
    bound: HeightBound,
    caps: [usize; 3],
) -> (usize, usize, Vec<SatRecord>) {
    let mut sat = 0usize;
    let mut unsat = 0usize;
    let mut records = Vec::new();
    for _ in 0..count {
        let ring = match base {
            Base::Int => random_int_t(rng),
            Base::Poly { .. } => random_poly_t(rng),
        };
        let s = random_sentence(rng, base);
        let outcome = solver::decide(&s, &ring, None);
        let verdict = outcome.verdict().expect("complete mode decides").clone();
        match &verdict {
            Verdict::Sat { witness, .. } => {
                sat += 1;
                assert!(
                    solver::check_witness(&s, witness, &ring),
                    "solver witness failed re-verification on {}",
                    formula::render(&s)
                );
                records.push(SatRecord { sentence: s, ring, verdict });
            }
            Verdict::Unsat => {
                unsat += 1;
                let cap = caps[s.var_count() - 1];
                let found = oracle::brute_force(&s, &ring, bound, Some(cap));
                assert!(
                    found.is_none(),
                    "oracle found witness for solver-UNSAT sentence {} over {}",
                    formula::render(&s),
                    ring
                );
            }
        }
    }
    (sat, unsat, records)
}

#[test]
fn criterion_1_and_6_differential_and_extraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (sat_z, unsat_z, records_z) = differential_run(
        &mut rng,
        500,
        Base::Int,
        HeightBound::Height(200),
        [usize::MAX, 150_000, 100_000],
    );
    let (sat_f, unsat_f, records_f) = differential_run(
        &mut rng,
        200,
        Base::Poly { p: 3 },
        HeightBound::Degree(6),
        [usize::MAX, 120_000, 80_000],
    );
    println!(
        "criterion 1: PASS (Z: {} sat / {} unsat; F3[t]: {} sat / {} unsat; no differential disagreements)",
        sat_z, unsat_z, sat_f, unsat_f
    );

    // Criterion 6: every SAT witness came from threshold-respecting
    // approximation; perturbing the local witnesses within their thresholds
    // keeps all local atoms satisfied.
    let mut perturbed_checks = 0usize;
    for rec in records_z.iter().chain(&records_f) {
        let Verdict::Sat { witness, provenance } = &rec.verdict else { unreachable!() };
        for w in witness {
            assert!(rec.ring.is_member(w), "witness entry outside ring");
        }
        assert!(solver::check_witness(&rec.sentence, witness, &rec.ring));
        let t = rec.ring.t_places();
        let nf = formula::normalize(&rec.sentence, t);
        let system = &nf.systems[provenance.disjunct];
        for pw in &provenance.places {
            let ls = compile_local(system, &provenance.param, &pw.place, t);
            assert!(satisfies_at(&ls, &pw.local_witness));
            let base = rec.ring.base();
            let gen = FieldElem::from_scalar(pw.place.generator());
            let mut shift = FieldElem::one(base);
            for _ in 0..=pw.threshold {
                shift = shift.mul(&gen);
            }
            for _ in 0..100 {
                let perturbed: Vec<FieldElem> = pw
                    .local_witness
                    .iter()
                    .map(|y| {
                        let rho = random_integral_at(&mut rng, &pw.place, base);
                        y.add(&shift.mul(&rho))
                    })
                    .collect();
                assert!(
                    satisfies_at(&ls, &perturbed),
                    "threshold perturbation violated local atoms at {}",
                    pw.place
                );
                perturbed_checks += 1;
            }
        }
    }
    println!(
        "criterion 6: PASS ({} SAT instances, {} threshold perturbations verified)",
        records_z.len() + records_f.len(),
        perturbed_checks
    );
}

// ---------------------------------------------------------------------------
// Criterion 2: regression verdicts
// ---------------------------------------------------------------------------

#[test]
fn criterion_2_regression_verdicts() {
    let cases_z: Vec<(&str, &[i64], Option<&str>)> = vec![
        // Divisibility forces 1 <= ord2(x) <= 0.
        ("E x . 2 div x & x div 1", &[2], None),
        // 3 is a unit at 2.
        ("E x . 3 div x & x div 1", &[2], Some("1")),
        // Parity split of 1.
        ("E x y . x + y = 1 & 2 div x & 2 div y", &[2], None),
        // Proper divisibility band (case i).
        ("E x . 2 div x & x div 4", &[2], Some("4")),
        // Equation with a divisibility side condition (case ii).
        ("E x y . x + y = 1 & 3 div x", &[3], Some("0,1")),
        // Disequation pinning a unit order (case iii).
        ("E x . !(x = 0) & x div 2 & 2 div x", &[2], Some("2")),
        // Negated divisibility through the order comparison (case iv).
        ("E x . !(x div 1) & !(x = 0)", &[2], Some("2")),
        // Contradictory order comparison (case iv, unsat side).
        ("E x . !(x div 1) & x div 1", &[2], None),
    ];
    for (text, primes, expect) in &cases_z {
        let ring = int_ring(primes);
        let s = formula::parse(text, Base::Int).unwrap();
        let a = solver::decide(&s, &ring, None);
        let b = solver::decide(&s, &ring, None);
        match (a.verdict().unwrap(), expect) {
            (Verdict::Unsat, None) => {}
            (Verdict::Sat { witness, .. }, Some(w)) => {
                let got: Vec<String> = witness.iter().map(|x| x.to_string()).collect();
                assert_eq!(got.join(","), *w, "witness drift on `{}`", text);
                assert!(solver::check_witness(&s, witness, &ring));
            }
            (v, _) => panic!("unexpected verdict {:?} on `{}`", v, text),
        }
        // Determinism: identical reruns.
        match (a.verdict().unwrap(), b.verdict().unwrap()) {
            (Verdict::Unsat, Verdict::Unsat) => {}
            (Verdict::Sat { witness: w1, .. }, Verdict::Sat { witness: w2, .. }) => {
                assert_eq!(w1, w2)
            }
            _ => panic!("nondeterministic verdict on `{}`", text),
        }
    }

    let cases_f: Vec<(&str, &[&[i64]], Option<&str>)> = vec![
        ("E x . t div x & x div 1", &[&[0, 1]], None),
        ("E x . t*x | 1 & !(x = 0)", &[&[0, 1]], None),
        // t+1 is a unit at the place t.
        ("E x . t+1 div x & x div 1", &[&[0, 1]], Some("1")),
    ];
    for (text, gens, expect) in &cases_f {
        let ring = poly_ring(gens);
        let s = formula::parse(text, Base::Poly { p: 3 }).unwrap();
        let out = solver::decide(&s, &ring, None);
        match (out.verdict().unwrap(), expect) {
            (Verdict::Unsat, None) => {}
            (Verdict::Sat { witness, .. }, Some(w)) => {
                let got: Vec<String> = witness.iter().map(|x| x.to_string()).collect();
                assert_eq!(got.join(","), *w, "witness drift on `{}`", text);
            }
            (v, _) => panic!("unexpected verdict {:?} on `{}`", v, text),
        }
    }
    println!(
        "criterion 2: PASS ({} integer and {} function-field regression cases)",
        cases_z.len(),
        cases_f.len()
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: normalization equivalence
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_normalization_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(3003);
    for (base, mk_ring, bound) in [
        (
            Base::Int,
            (|rng: &mut ChaCha8Rng| random_int_t(rng)) as fn(&mut ChaCha8Rng) -> RingSpec,
            HeightBound::Height(6),
        ),
        (
            Base::Poly { p: 3 },
            (|rng: &mut ChaCha8Rng| random_poly_t(rng)) as fn(&mut ChaCha8Rng) -> RingSpec,
            HeightBound::Degree(2),
        ),
    ] {
        let mut mismatches = 0usize;
        for _ in 0..1000 {
            let ring = mk_ring(&mut rng);
            let pool = oracle::enumerate(&ring, bound);
            let s = random_sentence(&mut rng, base);
            let assignment: Vec<FieldElem> = (0..s.var_count())
                .map(|_| pool.choose(&mut rng).unwrap().clone())
                .collect();
            let direct = formula::eval_sentence(&s, &assignment, &ring).unwrap();
            let nf = formula::normalize(&s, ring.t_places());
            let via_nf = nf
                .systems
                .iter()
                .any(|sys| formula::eval_normal_system(sys, &assignment, &ring).unwrap());
            if direct != via_nf {
                mismatches += 1;
            }
        }
        assert_eq!(mismatches, 0, "normalization mismatches over {:?}", base);
    }
    println!("criterion 3: PASS (1000 sentence/assignment pairs per base ring, zero mismatches)");
}

// ---------------------------------------------------------------------------
// Criterion 4: linear parametrizer postconditions
// ---------------------------------------------------------------------------

/// Independent reference solver: forward elimination with a different pivot
/// rule, random free values, back substitution.
fn reference_solution(
    terms: &[LinTerm],
    n: usize,
    base: Base,
    rng: &mut ChaCha8Rng,
) -> Option<Vec<FieldElem>> {
    let mut rows: Vec<Vec<FieldElem>> = terms
        .iter()
        .map(|l| {
            let mut row = vec![FieldElem::zero(base); n + 1];
            for (&i, c) in l.coeffs() {
                row[i] = FieldElem::from_scalar(c.clone());
            }
            row[n] = FieldElem::from_scalar(l.constant_part().neg());
            row
        })
        .collect();
    let mut pivot_of_row: Vec<usize> = Vec::new();
    let mut used_rows = 0usize;
    // Eliminate columns right to left.
    for col in (0..n).rev() {
        let Some(r) = (used_rows..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(used_rows, r);
        let inv = rows[used_rows][col].inverse();
        for c in 0..=n {
            rows[used_rows][c] = rows[used_rows][c].mul(&inv);
        }
        for r2 in 0..rows.len() {
            if r2 != used_rows && !rows[r2][col].is_zero() {
                let f = rows[r2][col].clone();
                for c in 0..=n {
                    let d = rows[used_rows][c].mul(&f);
                    rows[r2][c] = rows[r2][c].sub(&d);
                }
            }
        }
        pivot_of_row.push(col);
        used_rows += 1;
    }
    for row in rows.iter().skip(used_rows) {
        if !row[n].is_zero() {
            return None;
        }
    }
    let mut x: Vec<FieldElem> = (0..n)
        .map(|_| FieldElem::from_i64(base, rng.gen_range(-5..=5)))
        .collect();
    for (r, &col) in pivot_of_row.iter().enumerate() {
        // x[col] = rhs - sum(other coefficients * x)
        let mut val = rows[r][n].clone();
        for c in 0..n {
            if c != col && !rows[r][c].is_zero() {
                val = val.sub(&rows[r][c].mul(&x[c]));
            }
        }
        x[col] = val;
    }
    Some(x)
}

#[test]
fn criterion_4_linear_parametrizer() {
    let mut rng = ChaCha8Rng::seed_from_u64(4004);
    let mut consistent = 0usize;
    let mut inconsistent = 0usize;
    for case in 0..300 {
        let base = if case % 3 == 2 { Base::Poly { p: 3 } } else { Base::Int };
        let n = rng.gen_range(1..=4);
        let k = rng.gen_range(1..=4);
        let mut terms: Vec<LinTerm> = (0..k).map(|_| random_linterm(&mut rng, base, n)).collect();
        let make_inconsistent = rng.gen_bool(0.3);
        if make_inconsistent {
            // A combination of the rows plus a nonzero constant.
            let mut extra = LinTerm::constant(random_scalar(&mut rng, base, true));
            for t in &terms {
                if rng.gen_bool(0.5) {
                    extra = extra.add(t);
                }
            }
            terms.push(extra);
        }
        let result = lin(&terms, n, base);
        // Cross-check against exact ranks of the coefficient and augmented
        // matrices.
        let mut coeff = Mat::zero(base, terms.len(), n);
        let mut aug = Mat::zero(base, terms.len(), n + 1);
        for (r, l) in terms.iter().enumerate() {
            for (&i, c) in l.coeffs() {
                *coeff.at_mut(r, i) = FieldElem::from_scalar(c.clone());
                *aug.at_mut(r, i) = FieldElem::from_scalar(c.clone());
            }
            *aug.at_mut(r, n) = FieldElem::from_scalar(l.constant_part().neg());
        }
        let solvable = coeff.rank(base) == aug.rank(base);
        assert_eq!(result.is_some(), solvable, "solvability disagrees with rank");
        match result {
            None => inconsistent += 1,
            Some(param) => {
                consistent += 1;
                assert_eq!(param.params(), n - coeff.rank(base), "rank identity");
                // Annihilation at random parameter points.
                for _ in 0..10 {
                    let y: Vec<FieldElem> = (0..param.params())
                        .map(|_| FieldElem::from_i64(base, rng.gen_range(-9..=9)))
                        .collect();
                    let x = param.apply(&y);
                    for l in &terms {
                        assert!(l.eval(&x).is_zero(), "parametrization must annihilate");
                    }
                }
                // Completeness: 50 independently constructed solutions are
                // reached exactly.
                for _ in 0..50 {
                    let x = reference_solution(&terms, n, base, &mut rng)
                        .expect("consistent by rank check");
                    for l in &terms {
                        assert!(l.eval(&x).is_zero(), "reference solver must solve");
                    }
                    let shifted: Vec<FieldElem> =
                        x.iter().zip(&param.c).map(|(a, b)| a.sub(b)).collect();
                    let y = solve_exact(&param.a, &shifted, base)
                        .expect("solution must be in the parametrized set");
                    let back = param.apply(&y);
                    assert_eq!(back, x, "exact recovery with zero residual");
                }
            }
        }
    }
    println!(
        "criterion 4: PASS (300 systems: {} consistent, {} inconsistent, all postconditions exact)",
        consistent, inconsistent
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: local decider
// ---------------------------------------------------------------------------

fn random_local_system(rng: &mut ChaCha8Rng) -> Option<LocalSystem> {
    let base = if rng.gen_bool(0.7) { Base::Int } else { Base::Poly { p: 3 } };
    let ring = match base {
        Base::Int => random_int_t(rng),
        Base::Poly { .. } => random_poly_t(rng),
    };
    let s = random_sentence(rng, base);
    let t = ring.t_places();
    let nf = formula::normalize(&s, t);
    if nf.systems.is_empty() {
        return None;
    }
    let sys = &nf.systems[rng.gen_range(0..nf.systems.len())];
    let equations: Vec<LinTerm> = sys
        .atoms
        .iter()
        .filter_map(|a| match a {
            NormalAtom::Eq0(l) => Some(l.clone()),
            _ => None,
        })
        .collect();
    let param = lin(&equations, s.var_count(), base)?;
    let place = &t[rng.gen_range(0..t.len())];
    Some(compile_local(sys, &param, place, t))
}

#[test]
fn criterion_5_local_decider() {
    let mut rng = ChaCha8Rng::seed_from_u64(5005);
    let mut sat_count = 0usize;
    let mut unsat_count = 0usize;
    let mut systems = Vec::new();
    while systems.len() < 200 {
        if let Some(ls) = random_local_system(&mut rng) {
            systems.push(ls);
        }
    }
    for ls in &systems {
        let verdict = decide_local(ls, None);
        // (c) representation agreement.
        let y_verdict = decide_local_y_space(ls, None);
        assert_eq!(
            verdict.is_sat(),
            y_verdict.is_sat(),
            "slice and parameter-space decisions disagree"
        );
        let base = ls.param.base();
        match &verdict {
            LocalVerdict::Unknown => panic!("complete mode returned unknown"),
            LocalVerdict::Sat { witness, precision } => {
                sat_count += 1;
                assert!(check_local_witness(ls, witness, *precision));
                // (a) 100 random in-ball perturbations satisfy.
                let gen = FieldElem::from_scalar(ls.place.generator());
                let mut shift = FieldElem::one(base);
                for _ in 0..*precision {
                    shift = shift.mul(&gen);
                }
                for _ in 0..100 {
                    let perturbed: Vec<FieldElem> = witness
                        .iter()
                        .map(|y| {
                            let rho = random_integral_at(&mut rng, &ls.place, base);
                            y.add(&shift.mul(&rho))
                        })
                        .collect();
                    assert!(satisfies_at(ls, &perturbed), "in-ball perturbation fails");
                }
            }
            LocalVerdict::Unsat => {
                unsat_count += 1;
                // (b) sampling never satisfies.
                let r = ls.param.params();
                for _ in 0..10_000 {
                    let point: Vec<FieldElem> = (0..r)
                        .map(|_| random_integral_at(&mut rng, &ls.place, base))
                        .collect();
                    assert!(
                        !satisfies_at(ls, &point),
                        "sampled point satisfies a system declared unsatisfiable"
                    );
                }
            }
        }
    }
    println!(
        "criterion 5: PASS (200 local systems: {} sat with verified balls, {} unsat with clean sampling)",
        sat_count, unsat_count
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: definability lab
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_deflab() {
    let ring = RingSpec::finite(
        Base::Poly { p: 3 },
        vec![Place::Infinity, Place::irreducible(PolyFp::t(3)).unwrap()],
    )
    .unwrap();

    let pair = deflab::lenstra_pair(&ring).unwrap();
    assert_eq!(pair.q, PolyFp::from_signed(3, &[1, 0, 1]));
    assert_eq!(pair.b, PolyFp::from_signed(3, &[1, 1]));
    assert!(pair.verify(&ring));

    let neq = deflab::validate_neq(&ring, 100, 6, 7007).unwrap();
    assert!(neq.all_passed(), "{}", neq);

    let squ = deflab::validate_squ(&ring, 50, 7008).unwrap();
    assert!(squ.all_passed(), "{}", squ);

    let sq = deflab::validate_sq(&ring, 20, 7009).unwrap();
    assert!(sq.all_passed(), "{}", sq);

    // Units congruent to one, verified exactly on 100 random moduli.
    let mut rng = holodec_core::rng::SplitMix64::new(7010);
    let one = FieldElem::one(ring.base());
    for _ in 0..100 {
        let x = deflab::random_ring_element(&mut rng, &ring, 3);
        let eps = deflab::find_unit_congruent_one(&x, &ring).unwrap();
        assert!(eps.is_infinite_order());
        let core = deflab::strip_s_factors(&ring, x.numerator().as_poly());
        if !core.is_constant() {
            assert!(eps.congruent_one_mod(&core));
        }
        if let Some(value) = eps.value_if_small(3000) {
            assert!(ring.divides(&x, &value.sub(&one)), "literal division cross-check");
        }
    }
    println!("criterion 7: PASS (reference pair, 100+50+20 formula validations, 100 unit constructions)");
}
