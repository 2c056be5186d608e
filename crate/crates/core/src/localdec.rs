//! Compilation of normal systems into valuation constraints over one
//! completion, and a complete decision procedure for the emitted fragment.
//!
//! The compiled systems constrain orders of affine forms on the integral
//! points of an affine subspace. Satisfying sets are open, so a satisfiable
//! system always has a rational witness together with a ball certificate:
//! a precision `k` such that the whole ball around the witness satisfies.
//!
//! The decision engine reduces the domain to a full integral cube (either by
//! re-parametrizing the integral slice of the affine image, or by rescaling
//! the parameter space into a cube), then runs a digit search over residue
//! extensions. On a ball, any form whose center order lies strictly below
//! `depth + min coefficient order` has its order frozen across the ball;
//! atoms with frozen sides are decided. Identically-zero and pairwise
//! proportional forms are decided symbolically. Descent past the guard depth
//! (derived from coefficient spreads and the orders of the nonzero 2x2
//! minors of form pairs, constant column included) is cut on branches whose
//! decidability status stopped changing; the bounded mode replaces the cut
//! with a depth budget and reports `Unknown` instead of relying on it.

use std::fmt;

use crate::exactlin::{solve_exact, AffineForm, AffineParam, Mat};
use crate::formula::{NormalAtom, NormalSystem};
use crate::fraction::FieldElem;
use crate::places::{OrdVal, Place};
use crate::scalar::Scalar;

/// Constraint on the forms of a [`LocalSystem`]. Comparison atoms carry the
/// nonvanishing side conditions of the source language: divisibility keeps
/// its right side nonzero, order comparison keeps its larger side nonzero.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LocalAtom {
    /// `ord(f_lhs) <= ord(f_rhs)` and `f_rhs != 0` (hence `f_lhs != 0`).
    DivLe { lhs: usize, rhs: usize },
    /// `f != 0`.
    Nonzero { form: usize },
    /// `ord(f_hi) > ord(f_lo)` and `f_hi != 0`.
    OrdGt { hi: usize, lo: usize },
    /// `ord(f) >= 0` (integrality row).
    NonNeg { form: usize },
}

impl LocalAtom {
    pub fn forms(&self) -> Vec<usize> {
        match *self {
            LocalAtom::DivLe { lhs, rhs } => vec![lhs, rhs],
            LocalAtom::Nonzero { form } | LocalAtom::NonNeg { form } => vec![form],
            LocalAtom::OrdGt { hi, lo } => vec![hi, lo],
        }
    }

    fn requires_nonzero(&self) -> bool {
        !matches!(self, LocalAtom::NonNeg { .. })
    }
}

/// Valuation constraint system over one completion: affine forms in the
/// parameters of `param`, atoms over them, and the always-present integrality
/// constraint on the affine image (the trailing `NonNeg` atoms, one per
/// ambient coordinate).
#[derive(Clone, Debug)]
pub struct LocalSystem {
    pub place: Place,
    pub param: AffineParam,
    pub forms: Vec<AffineForm>,
    pub atoms: Vec<LocalAtom>,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum LocalVerdict {
    /// A rational witness in parameter space with a certifying precision:
    /// every parameter point within the ball of radius `precision` around
    /// the witness also satisfies.
    Sat { witness: Vec<FieldElem>, precision: i64 },
    Unsat,
    /// Bounded mode ran out of depth budget.
    Unknown,
}

impl LocalVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, LocalVerdict::Sat { .. })
    }
}

impl fmt::Display for LocalVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LocalVerdict::Sat { witness, precision } => {
                let w: Vec<String> = witness.iter().map(|x| x.to_string()).collect();
                write!(f, "sat y=({}) k={}", w.join(", "), precision)
            }
            LocalVerdict::Unsat => write!(f, "unsat"),
            LocalVerdict::Unknown => write!(f, "unknown"),
        }
    }
}

/// Compile one normal system (whose equations already went through the
/// linear parametrizer) into a local system at `place`. Equations become
/// tautologies; divisibility becomes an order comparison with a nonzero
/// side condition; disequations become nonvanishing; an order-comparison
/// atom survives only at its own place.
pub fn compile_local(
    ns: &NormalSystem,
    param: &AffineParam,
    place: &Place,
    t: &[Place],
) -> LocalSystem {
    let mut forms: Vec<AffineForm> = Vec::new();
    let mut atoms = Vec::new();
    let intern = |forms: &mut Vec<AffineForm>, f: AffineForm| -> usize {
        match forms.iter().position(|g| *g == f) {
            Some(i) => i,
            None => {
                forms.push(f);
                forms.len() - 1
            }
        }
    };
    for atom in &ns.atoms {
        match atom {
            NormalAtom::Eq0(_) => {}
            NormalAtom::Neq0(l) => {
                let f = crate::exactlin::substitute(l, param);
                let i = intern(&mut forms, f);
                atoms.push(LocalAtom::Nonzero { form: i });
            }
            NormalAtom::DivBar(a, b) => {
                let fa = crate::exactlin::substitute(a, param);
                let fb = crate::exactlin::substitute(b, param);
                let ia = intern(&mut forms, fa);
                let ib = intern(&mut forms, fb);
                atoms.push(LocalAtom::DivLe { lhs: ia, rhs: ib });
            }
            NormalAtom::OrdGt { place_idx, lhs, rhs } => {
                if &t[*place_idx] == place {
                    let fh = crate::exactlin::substitute(lhs, param);
                    let fl = crate::exactlin::substitute(rhs, param);
                    let ih = intern(&mut forms, fh);
                    let il = intern(&mut forms, fl);
                    atoms.push(LocalAtom::OrdGt { hi: ih, lo: il });
                }
            }
        }
    }
    // ord(A*y + c) >= 0, coordinatewise.
    let base = param.base();
    for i in 0..param.ambient() {
        let row = AffineForm {
            coeffs: (0..param.params()).map(|j| param.a.at(i, j).clone()).collect(),
            constant: param.c[i].clone(),
        };
        let _ = base;
        let idx = intern(&mut forms, row);
        atoms.push(LocalAtom::NonNeg { form: idx });
    }
    LocalSystem { place: place.clone(), param: param.clone(), forms, atoms }
}

/// Minimum coefficient order of the linear part (`Inf` for constant forms).
pub fn form_lambda(form: &AffineForm, place: &Place) -> OrdVal {
    form.coeffs
        .iter()
        .map(|c| place.ord(c))
        .min()
        .unwrap_or(OrdVal::Inf)
}

/// Parametrize the integral points of the affine image: returns `(x0, B)`
/// with `{A*y + c} ∩ O^n = {x0 + B*w : w integral}`, or `None` when the
/// intersection is empty. Reduction is a diagonalization over the
/// localization of the base ring at `place`.
pub fn integral_slice(param: &AffineParam, place: &Place) -> Option<(Vec<FieldElem>, Mat)> {
    let base = param.base();
    let n = param.ambient();
    let r = param.params();
    let gen = FieldElem::from_scalar(place.generator());
    let mut a = param.a.clone();
    let mut u = Mat::identity(base, n);
    let mut uinv = Mat::identity(base, n);

    for k in 0..r {
        // Minimal-order pivot in the remaining submatrix; ties broken by
        // position for determinism.
        let mut best: Option<(i64, usize, usize)> = None;
        for i in k..n {
            for j in k..r {
                if let OrdVal::Fin(o) = place.ord(a.at(i, j)) {
                    if best.map_or(true, |(bo, _, _)| o < bo) {
                        best = Some((o, i, j));
                    }
                }
            }
        }
        let (_, pi, pj) = best.expect("parametrization columns must be independent");
        a.swap_rows(k, pi);
        uinv.swap_rows(k, pi);
        swap_cols(&mut u, k, pi);
        swap_cols(&mut a, k, pj);
        // Normalize the pivot to an exact place power (column scaling only
        // touches the untracked right-hand transform).
        let e = place.ord(a.at(k, k)).finite().unwrap();
        let scale = pow_field(&gen, e, base).div(a.at(k, k));
        for i in 0..n {
            *a.at_mut(i, k) = a.at(i, k).mul(&scale);
        }
        // Clear the pivot column; multipliers are integral at the place.
        for i in k + 1..n {
            if a.at(i, k).is_zero() {
                continue;
            }
            let m = a.at(i, k).div(a.at(k, k));
            debug_assert!(place.ord(&m) >= OrdVal::Fin(0));
            for j in 0..r {
                let delta = a.at(k, j).mul(&m);
                *a.at_mut(i, j) = a.at(i, j).sub(&delta);
            }
            for j in 0..n {
                let delta = uinv.at(k, j).mul(&m);
                *uinv.at_mut(i, j) = uinv.at(i, j).sub(&delta);
                let bump = u.at(j, i).mul(&m);
                *u.at_mut(j, k) = u.at(j, k).add(&bump);
            }
        }
        // Clear the pivot row (right-hand transform, untracked).
        for j in k + 1..r {
            if a.at(k, j).is_zero() {
                continue;
            }
            let m = a.at(k, j).div(a.at(k, k));
            for i in 0..n {
                let delta = a.at(i, k).mul(&m);
                *a.at_mut(i, j) = a.at(i, j).sub(&delta);
            }
        }
    }

    let uc = uinv.mul_vec(&param.c, base);
    for item in uc.iter().take(n).skip(r) {
        if place.ord(item) < OrdVal::Fin(0) {
            return None;
        }
    }
    let mut x0 = param.c.clone();
    let mut b = Mat::zero(base, n, r);
    for i in 0..n {
        for j in 0..r {
            *b.at_mut(i, j) = u.at(i, j).clone();
            x0[i] = x0[i].sub(&u.at(i, j).mul(&uc[j]));
        }
    }
    Some((x0, b))
}

fn swap_cols(m: &mut Mat, a: usize, b: usize) {
    if a == b {
        return;
    }
    for r in 0..m.rows() {
        let tmp = m.at(r, a).clone();
        *m.at_mut(r, a) = m.at(r, b).clone();
        *m.at_mut(r, b) = tmp;
    }
}

fn pow_field(x: &FieldElem, e: i64, base: crate::scalar::Base) -> FieldElem {
    let mut acc = FieldElem::one(base);
    for _ in 0..e.unsigned_abs() {
        acc = acc.mul(x);
    }
    if e < 0 {
        acc.inverse()
    } else {
        acc
    }
}

/// Decide a local system. Without a budget the search is complete; with a
/// depth budget it may return `Unknown`, but never a wrong verdict.
pub fn decide_local(ls: &LocalSystem, budget: Option<i64>) -> LocalVerdict {
    let base = ls.param.base();
    let r = ls.param.params();
    let Some((x0, bmat)) = integral_slice(&ls.param, &ls.place) else {
        return LocalVerdict::Unsat;
    };
    // y(w) = E*w + e with A*E = B and A*e = x0 - c.
    let rr = bmat.cols();
    let mut emat = Mat::zero(base, r, rr);
    for j in 0..rr {
        let col = solve_exact(&ls.param.a, &bmat.col(j), base).expect("B spans inside A");
        for i in 0..r {
            *emat.at_mut(i, j) = col[i].clone();
        }
    }
    let rhs: Vec<FieldElem> = x0.iter().zip(&ls.param.c).map(|(x, c)| x.sub(c)).collect();
    let evec = solve_exact(&ls.param.a, &rhs, base).expect("x0 lies in the affine image");
    let forms: Vec<AffineForm> = ls.forms.iter().map(|f| f.compose(&emat, &evec)).collect();
    match decide_cube(&ls.place, &forms, &ls.atoms, rr, budget) {
        CubeOutcome::Unsat => LocalVerdict::Unsat,
        CubeOutcome::Unknown => LocalVerdict::Unknown,
        CubeOutcome::Sat(w) => {
            let y0 = affine_apply(&emat, &evec, &w, base);
            match freeze_certificate(ls, &y0) {
                Some(precision) => LocalVerdict::Sat { witness: y0, precision },
                None => unreachable!("cube witness must certify"),
            }
        }
    }
}

/// Decide directly in parameter space: rescale the feasible region into a
/// cube and search there. Verdicts agree with [`decide_local`].
pub fn decide_local_y_space(ls: &LocalSystem, budget: Option<i64>) -> LocalVerdict {
    let base = ls.param.base();
    let r = ls.param.params();
    let delta = if r == 0 {
        0
    } else {
        // Feasible parameters satisfy ord(y_j) >= delta, read off a left
        // inverse of A and the offset orders.
        let n = ls.param.ambient();
        let mut m = Mat::zero(base, n, r + n);
        for i in 0..n {
            for j in 0..r {
                *m.at_mut(i, j) = ls.param.a.at(i, j).clone();
            }
            *m.at_mut(i, r + i) = FieldElem::one(base);
        }
        let pivots = m.rref();
        assert_eq!(pivots.len().min(r), r, "parametrization columns must be independent");
        let mut min_ord = i64::MAX;
        for row in 0..r {
            for jj in 0..n {
                if let OrdVal::Fin(o) = ls.place.ord(m.at(row, r + jj)) {
                    min_ord = min_ord.min(o);
                }
            }
        }
        let mut c_min = 0i64;
        for ci in &ls.param.c {
            if let OrdVal::Fin(o) = ls.place.ord(ci) {
                c_min = c_min.min(o);
            }
        }
        if min_ord == i64::MAX {
            0
        } else {
            min_ord + c_min
        }
    };
    let gen = FieldElem::from_scalar(ls.place.generator());
    let scale = pow_field(&gen, delta, base);
    let forms: Vec<AffineForm> = ls
        .forms
        .iter()
        .map(|f| AffineForm {
            coeffs: f.coeffs.iter().map(|c| c.mul(&scale)).collect(),
            constant: f.constant.clone(),
        })
        .collect();
    match decide_cube(&ls.place, &forms, &ls.atoms, r, budget) {
        CubeOutcome::Unsat => LocalVerdict::Unsat,
        CubeOutcome::Unknown => LocalVerdict::Unknown,
        CubeOutcome::Sat(w) => {
            let y0: Vec<FieldElem> = w.iter().map(|wi| wi.mul(&scale)).collect();
            match freeze_certificate(ls, &y0) {
                Some(precision) => LocalVerdict::Sat { witness: y0, precision },
                None => unreachable!("cube witness must certify"),
            }
        }
    }
}

/// Pointwise truth of all atoms at a parameter point.
pub fn satisfies_at(ls: &LocalSystem, y: &[FieldElem]) -> bool {
    let vals: Vec<FieldElem> = ls.forms.iter().map(|f| f.eval(y)).collect();
    ls.atoms.iter().all(|atom| atom_holds_at(atom, &vals, &ls.place))
}

fn atom_holds_at(atom: &LocalAtom, vals: &[FieldElem], place: &Place) -> bool {
    match *atom {
        LocalAtom::DivLe { lhs, rhs } => {
            !vals[rhs].is_zero() && place.ord(&vals[lhs]) <= place.ord(&vals[rhs])
        }
        LocalAtom::Nonzero { form } => !vals[form].is_zero(),
        LocalAtom::OrdGt { hi, lo } => {
            !vals[hi].is_zero() && place.ord(&vals[hi]) > place.ord(&vals[lo])
        }
        LocalAtom::NonNeg { form } => place.ord(&vals[form]) >= OrdVal::Fin(0),
    }
}

/// Verify a ball certificate: all atoms hold at the witness with every
/// comparison form's order determined strictly below `k`, so the whole ball
/// of radius `k` satisfies.
pub fn check_local_witness(ls: &LocalSystem, y0: &[FieldElem], k: i64) -> bool {
    if y0.len() != ls.param.params() || k < 0 {
        return false;
    }
    let place = &ls.place;
    let es: Vec<OrdVal> = ls.forms.iter().map(|f| place.ord(&f.eval(y0))).collect();
    let lambdas: Vec<OrdVal> = ls.forms.iter().map(|f| form_lambda(f, place)).collect();
    let frozen = |i: usize| -> bool { es[i] < OrdVal::Fin(k).add(lambdas[i]) };
    ls.atoms.iter().all(|atom| match *atom {
        LocalAtom::DivLe { lhs, rhs } => frozen(lhs) && frozen(rhs) && es[lhs] <= es[rhs],
        LocalAtom::Nonzero { form } => frozen(form),
        LocalAtom::OrdGt { hi, lo } => frozen(hi) && frozen(lo) && es[hi] > es[lo],
        LocalAtom::NonNeg { form } => {
            // Ball order is at least min(center order, k + lambda).
            es[form].min(OrdVal::Fin(k).add(lambdas[form])) >= OrdVal::Fin(0)
        }
    })
}

/// Smallest certifying precision for a satisfying point, or `None` when the
/// point does not satisfy with ball room.
pub fn freeze_certificate(ls: &LocalSystem, y0: &[FieldElem]) -> Option<i64> {
    let place = &ls.place;
    let es: Vec<OrdVal> = ls.forms.iter().map(|f| place.ord(&f.eval(y0))).collect();
    let lambdas: Vec<OrdVal> = ls.forms.iter().map(|f| form_lambda(f, place)).collect();
    let mut k = 0i64;
    for atom in &ls.atoms {
        for i in atom.forms() {
            match (atom.requires_nonzero(), es[i], lambdas[i]) {
                (true, OrdVal::Inf, _) => return None,
                (true, OrdVal::Fin(e), OrdVal::Fin(l)) => k = k.max(e - l + 1),
                (true, OrdVal::Fin(_), OrdVal::Inf) => {}
                (false, OrdVal::Fin(e), OrdVal::Fin(l)) => {
                    if e < 0 {
                        return None;
                    }
                    k = k.max((e - l + 1).min((-l).max(0)));
                }
                (false, OrdVal::Inf, OrdVal::Fin(l)) => k = k.max((-l).max(0)),
                (false, e, OrdVal::Inf) => {
                    if e < OrdVal::Fin(0) {
                        return None;
                    }
                }
            }
        }
    }
    check_local_witness(ls, y0, k).then_some(k)
}

enum CubeOutcome {
    Sat(Vec<FieldElem>),
    Unsat,
    Unknown,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum FStat {
    Zero,
    Frozen(i64),
    Open,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum AStat {
    True,
    False,
    Undecided,
}

struct CubeSearch<'a> {
    place: &'a Place,
    forms: Vec<AffineForm>,
    atoms: Vec<LocalAtom>,
    dims: usize,
    lambdas: Vec<OrdVal>,
    zero: Vec<bool>,
    guard: i64,
    budget: Option<i64>,
    residues: u64,
    unknown_seen: bool,
}

fn decide_cube(
    place: &Place,
    forms: &[AffineForm],
    atoms: &[LocalAtom],
    dims: usize,
    budget: Option<i64>,
) -> CubeOutcome {
    let base = forms
        .first()
        .map(|f| f.base())
        .unwrap_or_else(|| place.base().expect("finite place"));
    // Symbolic phase: identically-zero forms and proportional pairs.
    let zero: Vec<bool> = forms.iter().map(AffineForm::is_identically_zero).collect();
    let mut live_atoms: Vec<LocalAtom> = Vec::new();
    for atom in atoms {
        match resolve_symbolic(atom, forms, &zero, place) {
            Symbolic::False => return CubeOutcome::Unsat,
            Symbolic::True => {}
            Symbolic::Keep(a) => live_atoms.push(a),
        }
    }
    if live_atoms.is_empty() {
        return CubeOutcome::Sat(vec![FieldElem::zero(base); dims]);
    }
    let lambdas: Vec<OrdVal> = forms.iter().map(|f| form_lambda(f, place)).collect();
    let guard = guard_depth(forms, &live_atoms, place);
    let mut search = CubeSearch {
        place,
        forms: forms.to_vec(),
        atoms: live_atoms,
        dims,
        lambdas,
        zero,
        guard,
        budget,
        residues: if dims == 0 { 1 } else { place.residue_count() },
        unknown_seen: false,
    };
    let center = vec![FieldElem::zero(base); dims];
    let values: Vec<FieldElem> = search.forms.iter().map(|f| f.eval(&center)).collect();
    if let Some(w) = search.dfs(center, values, 0, None) {
        return CubeOutcome::Sat(w);
    }
    if search.unknown_seen {
        return CubeOutcome::Unknown;
    }
    // Vanishing branches: exact zero slices of the non-constant forms.
    // Atoms with nonzero side conditions fail there symbolically, so these
    // branches only matter for integrality-only constraints; they recurse
    // with strictly fewer dimensions.
    for idx in 0..search.forms.len() {
        if search.zero[idx] || search.forms[idx].coeffs.iter().all(FieldElem::is_zero) {
            continue;
        }
        if !search.atoms.iter().any(|a| a.forms().contains(&idx)) {
            continue;
        }
        if search.atoms.iter().any(|a| a.requires_nonzero() && a.forms().contains(&idx)) {
            // The slice forces this form to vanish, contradicting its side
            // condition: symbolically unsatisfiable there.
            continue;
        }
        if let Some((w, unk)) = vanishing_branch(&search, idx, base, budget) {
            if let Some(w) = w {
                return CubeOutcome::Sat(w);
            }
            if unk {
                search.unknown_seen = true;
            }
        }
    }
    if search.unknown_seen {
        CubeOutcome::Unknown
    } else {
        CubeOutcome::Unsat
    }
}

/// Recurse on the exact zero slice of form `idx` inside the cube. Returns
/// `Some((witness, unknown_flag))` when the slice is nonempty.
fn vanishing_branch(
    search: &CubeSearch,
    idx: usize,
    base: crate::scalar::Base,
    budget: Option<i64>,
) -> Option<(Option<Vec<FieldElem>>, bool)> {
    let f = &search.forms[idx];
    // Solve f(w) = 0 over the field, then intersect with the cube.
    let mut lt = crate::formula::LinTerm::zero(base);
    // Clear denominators so the equation has base-ring coefficients.
    let mut den = Scalar::one(base);
    for c in f.coeffs.iter().chain(std::iter::once(&f.constant)) {
        den = den.mul(c.denominator());
    }
    let denf = FieldElem::from_scalar(den);
    for (j, c) in f.coeffs.iter().enumerate() {
        let scaled = c.mul(&denf);
        debug_assert!(scaled.is_integral());
        lt = lt.plus_monomial(j, scaled.numerator().clone());
    }
    let scaled_const = f.constant.mul(&denf);
    lt = lt.plus_constant(scaled_const.numerator());
    let param = crate::exactlin::lin(&[lt], search.dims, base)?;
    let (x0, bmat) = integral_slice(&param, search.place)?;
    // In cube coordinates the slice is {x0 + B w'}; compose forms directly.
    let forms2: Vec<AffineForm> = search
        .forms
        .iter()
        .map(|g| {
            let mut constant = g.constant.clone();
            for (c, x) in g.coeffs.iter().zip(&x0) {
                constant = constant.add(&c.mul(x));
            }
            let coeffs = (0..bmat.cols())
                .map(|j| {
                    let mut acc = FieldElem::zero(base);
                    for (i, c) in g.coeffs.iter().enumerate() {
                        acc = acc.add(&c.mul(bmat.at(i, j)));
                    }
                    acc
                })
                .collect();
            AffineForm { coeffs, constant }
        })
        .collect();
    match decide_cube(search.place, &forms2, &search.atoms, bmat.cols(), budget) {
        CubeOutcome::Sat(w2) => {
            let w: Vec<FieldElem> = (0..search.dims)
                .map(|i| {
                    let mut acc = x0[i].clone();
                    for (j, wj) in w2.iter().enumerate() {
                        acc = acc.add(&bmat.at(i, j).mul(wj));
                    }
                    acc
                })
                .collect();
            Some((Some(w), false))
        }
        CubeOutcome::Unsat => Some((None, false)),
        CubeOutcome::Unknown => Some((None, true)),
    }
}

enum Symbolic {
    True,
    False,
    Keep(LocalAtom),
}

fn resolve_symbolic(
    atom: &LocalAtom,
    forms: &[AffineForm],
    zero: &[bool],
    place: &Place,
) -> Symbolic {
    match *atom {
        LocalAtom::Nonzero { form } => {
            if zero[form] {
                Symbolic::False
            } else {
                Symbolic::Keep(*atom)
            }
        }
        LocalAtom::NonNeg { form } => {
            if zero[form] {
                Symbolic::True
            } else {
                Symbolic::Keep(*atom)
            }
        }
        LocalAtom::DivLe { lhs, rhs } => {
            if zero[rhs] || zero[lhs] {
                // Right side must be nonzero; a vanished left side would
                // force the right side to vanish too.
                return Symbolic::False;
            }
            match proportion(&forms[lhs], &forms[rhs], place) {
                Some(gap) => {
                    if gap >= 0 {
                        Symbolic::Keep(LocalAtom::Nonzero { form: lhs })
                    } else {
                        Symbolic::False
                    }
                }
                None => Symbolic::Keep(*atom),
            }
        }
        LocalAtom::OrdGt { hi, lo } => {
            if zero[hi] || zero[lo] {
                return Symbolic::False;
            }
            match proportion(&forms[hi], &forms[lo], place) {
                Some(gap) => {
                    // ord(lo) = gap + ord(hi) pointwise.
                    if gap < 0 {
                        Symbolic::Keep(LocalAtom::Nonzero { form: hi })
                    } else {
                        Symbolic::False
                    }
                }
                None => Symbolic::Keep(*atom),
            }
        }
    }
}

/// If `g = gamma * f` with both forms nonzero, returns `ord(gamma)`.
fn proportion(f: &AffineForm, g: &AffineForm, place: &Place) -> Option<i64> {
    let coords = |h: &AffineForm| -> Vec<FieldElem> {
        let mut v = h.coeffs.clone();
        v.push(h.constant.clone());
        v
    };
    let fc = coords(f);
    let gc = coords(g);
    if fc.len() != gc.len() {
        return None;
    }
    let lead = fc.iter().position(|c| !c.is_zero())?;
    if gc[lead].is_zero() {
        return None;
    }
    let gamma = gc[lead].div(&fc[lead]);
    for (a, b) in fc.iter().zip(&gc) {
        if !a.mul(&gamma).sub(b).is_zero() {
            return None;
        }
    }
    place.ord(&gamma).finite()
}

/// Depth guard for the stagnation cut: coefficient spreads and negative
/// offsets of single forms, joined with the orders of all nonzero 2x2 minors
/// (constant column included) over pairs of atom forms.
fn guard_depth(forms: &[AffineForm], atoms: &[LocalAtom], place: &Place) -> i64 {
    let mut used: Vec<usize> = atoms.iter().flat_map(|a| a.forms()).collect();
    used.sort_unstable();
    used.dedup();
    let coords = |h: &AffineForm| -> Vec<FieldElem> {
        let mut v = h.coeffs.clone();
        v.push(h.constant.clone());
        v
    };
    let mut guard = 0i64;
    for &i in &used {
        let ords: Vec<i64> = coords(&forms[i])
            .iter()
            .filter_map(|c| place.ord(c).finite())
            .collect();
        if let (Some(&max), Some(&min)) = (ords.iter().max(), ords.iter().min()) {
            guard = guard.max(max - min).max(-min);
        }
    }
    for (ai, &i) in used.iter().enumerate() {
        for &j in used.iter().skip(ai + 1) {
            let fi = coords(&forms[i]);
            let fj = coords(&forms[j]);
            for a in 0..fi.len() {
                for b in a + 1..fi.len() {
                    let minor = fi[a].mul(&fj[b]).sub(&fi[b].mul(&fj[a]));
                    if let OrdVal::Fin(o) = place.ord(&minor) {
                        guard = guard.max(o);
                    }
                }
            }
        }
    }
    guard
}

impl<'a> CubeSearch<'a> {
    /// Depth-first digit search. Returns a satisfying cube point, exploring
    /// children in lexicographic residue order.
    fn dfs(
        &mut self,
        center: Vec<FieldElem>,
        values: Vec<FieldElem>,
        depth: i64,
        parent_status: Option<(Vec<FStat>, Vec<AStat>)>,
    ) -> Option<Vec<FieldElem>> {
        let fstats: Vec<FStat> = (0..self.forms.len())
            .map(|i| {
                if self.zero[i] {
                    FStat::Zero
                } else {
                    let e = self.place.ord(&values[i]);
                    if e < OrdVal::Fin(depth).add(self.lambdas[i]) {
                        FStat::Frozen(e.finite().unwrap())
                    } else {
                        FStat::Open
                    }
                }
            })
            .collect();
        let astats: Vec<AStat> = self
            .atoms
            .iter()
            .map(|a| self.atom_status(a, &fstats, depth))
            .collect();
        if astats.iter().any(|s| *s == AStat::False) {
            return None;
        }
        if astats.iter().all(|s| *s == AStat::True) {
            return Some(center);
        }
        if self.dims == 0 {
            unreachable!("zero-dimensional cube decides all atoms");
        }
        if let Some(b) = self.budget {
            if depth >= b {
                self.unknown_seen = true;
                return None;
            }
        } else if depth > self.guard + 1 {
            if let Some((pf, pa)) = &parent_status {
                if *pf == fstats && *pa == astats {
                    // Stagnant branch beyond the guard depth: any deeper
                    // satisfying region is recovered through a sibling or a
                    // vanishing slice.
                    return None;
                }
            }
        }
        // Branch only on coordinates that still matter for undecided atoms.
        let mut relevant = vec![false; self.dims];
        for (a, s) in self.atoms.iter().zip(&astats) {
            if *s != AStat::Undecided {
                continue;
            }
            for fi in a.forms() {
                for (j, c) in self.forms[fi].coeffs.iter().enumerate() {
                    if !c.is_zero() {
                        relevant[j] = true;
                    }
                }
            }
        }
        if !relevant.iter().any(|&x| x) {
            // Undecided atoms without free coordinates cannot improve.
            return None;
        }
        let base = self.forms[0].base();
        let pk = pow_field(
            &FieldElem::from_scalar(self.place.generator()),
            depth,
            base,
        );
        let mut digits = vec![0u64; self.dims];
        loop {
            // Child center: bump relevant coordinates by digit * place^depth.
            let mut child_center = center.clone();
            let mut changed = false;
            for (j, &d) in digits.iter().enumerate() {
                if d != 0 {
                    let add = FieldElem::from_scalar(self.place.residue(d)).mul(&pk);
                    child_center[j] = child_center[j].add(&add);
                    changed = true;
                }
            }
            let child_values: Vec<FieldElem> = if changed {
                self.forms.iter().map(|f| f.eval(&child_center)).collect()
            } else {
                values.clone()
            };
            if let Some(w) = self.dfs(
                child_center,
                child_values,
                depth + 1,
                Some((fstats.clone(), astats.clone())),
            ) {
                return Some(w);
            }
            // Advance the digit counter over relevant coordinates only.
            let mut j = 0;
            loop {
                if j == self.dims {
                    return None;
                }
                if !relevant[j] {
                    j += 1;
                    continue;
                }
                digits[j] += 1;
                if digits[j] < self.residues {
                    break;
                }
                digits[j] = 0;
                j += 1;
            }
        }
    }

    fn atom_status(&self, atom: &LocalAtom, fstats: &[FStat], depth: i64) -> AStat {
        let lo_bound = |i: usize| -> OrdVal {
            match fstats[i] {
                FStat::Zero => OrdVal::Inf,
                FStat::Frozen(e) => OrdVal::Fin(e),
                FStat::Open => OrdVal::Fin(depth).add(self.lambdas[i]),
            }
        };
        match *atom {
            LocalAtom::Nonzero { form } => match fstats[form] {
                FStat::Frozen(_) => AStat::True,
                FStat::Zero => AStat::False,
                FStat::Open => AStat::Undecided,
            },
            LocalAtom::NonNeg { form } => match fstats[form] {
                FStat::Zero => AStat::True,
                FStat::Frozen(e) => {
                    if e >= 0 {
                        AStat::True
                    } else {
                        AStat::False
                    }
                }
                FStat::Open => {
                    if lo_bound(form) >= OrdVal::Fin(0) {
                        AStat::True
                    } else {
                        AStat::Undecided
                    }
                }
            },
            LocalAtom::DivLe { lhs, rhs } => match (fstats[lhs], fstats[rhs]) {
                (FStat::Frozen(el), FStat::Frozen(er)) => {
                    if el <= er {
                        AStat::True
                    } else {
                        AStat::False
                    }
                }
                (_, FStat::Frozen(er)) => {
                    if lo_bound(lhs) > OrdVal::Fin(er) {
                        AStat::False
                    } else {
                        AStat::Undecided
                    }
                }
                _ => AStat::Undecided,
            },
            LocalAtom::OrdGt { hi, lo } => match (fstats[hi], fstats[lo]) {
                (FStat::Frozen(eh), FStat::Frozen(el)) => {
                    if eh > el {
                        AStat::True
                    } else {
                        AStat::False
                    }
                }
                (FStat::Frozen(eh), FStat::Open) => {
                    if lo_bound(lo) >= OrdVal::Fin(eh) {
                        AStat::False
                    } else {
                        AStat::Undecided
                    }
                }
                _ => AStat::Undecided,
            },
        }
    }
}

fn affine_apply(
    emat: &Mat,
    evec: &[FieldElem],
    w: &[FieldElem],
    base: crate::scalar::Base,
) -> Vec<FieldElem> {
    let ew = emat.mul_vec(w, base);
    ew.iter().zip(evec).map(|(a, b)| a.add(b)).collect()
}
