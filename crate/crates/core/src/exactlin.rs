//! Exact linear algebra over the fraction field: reduced row echelon form,
//! the linear-equation parametrizer, kernels and exact solving.

use std::fmt;

use crate::formula::LinTerm;
use crate::fraction::FieldElem;
use crate::scalar::Base;

/// Dense matrix of exact field elements.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<FieldElem>,
}

impl Mat {
    pub fn zero(base: Base, rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![FieldElem::zero(base); rows * cols] }
    }

    pub fn identity(base: Base, n: usize) -> Mat {
        let mut m = Mat::zero(base, n, n);
        for i in 0..n {
            *m.at_mut(i, i) = FieldElem::one(base);
        }
        m
    }

    pub fn from_rows(base: Base, rows: Vec<Vec<FieldElem>>) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend(row);
        }
        let _ = base;
        Mat { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &FieldElem {
        &self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut FieldElem {
        &mut self.data[r * self.cols + c]
    }

    pub fn col(&self, c: usize) -> Vec<FieldElem> {
        (0..self.rows).map(|r| self.at(r, c).clone()).collect()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    /// `self * v` for a column vector.
    pub fn mul_vec(&self, v: &[FieldElem], base: Base) -> Vec<FieldElem> {
        assert_eq!(v.len(), self.cols, "dimension mismatch");
        (0..self.rows)
            .map(|r| {
                let mut acc = FieldElem::zero(base);
                for c in 0..self.cols {
                    acc = acc.add(&self.at(r, c).mul(&v[c]));
                }
                acc
            })
            .collect()
    }

    /// Reduced row echelon form in place; returns the pivot columns.
    /// Pivoting is first-nonzero in row order, so the result is canonical.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row == self.rows {
                break;
            }
            let Some(pr) = (row..self.rows).find(|&r| !self.at(r, col).is_zero()) else {
                continue;
            };
            self.swap_rows(row, pr);
            let inv = self.at(row, col).inverse();
            for c in col..self.cols {
                *self.at_mut(row, c) = self.at(row, c).mul(&inv);
            }
            for r in 0..self.rows {
                if r != row && !self.at(r, col).is_zero() {
                    let factor = self.at(r, col).clone();
                    for c in col..self.cols {
                        let delta = self.at(row, c).mul(&factor);
                        *self.at_mut(r, c) = self.at(r, c).sub(&delta);
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn rank(&self, _base: Base) -> usize {
        let mut copy = self.clone();
        copy.rref().len()
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.at(r, c).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Matrix-plus-offset parametrization of an affine solution set:
/// `{ A*y + c : y }` with the columns of `A` linearly independent.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineParam {
    pub a: Mat,
    pub c: Vec<FieldElem>,
    base: Base,
}

impl AffineParam {
    pub fn new(a: Mat, c: Vec<FieldElem>, base: Base) -> AffineParam {
        assert_eq!(a.rows(), c.len(), "offset dimension mismatch");
        AffineParam { a, c, base }
    }

    pub fn identity(base: Base, n: usize) -> AffineParam {
        AffineParam::new(Mat::identity(base, n), vec![FieldElem::zero(base); n], base)
    }

    pub fn base(&self) -> Base {
        self.base
    }

    /// Ambient dimension `n`.
    pub fn ambient(&self) -> usize {
        self.a.rows()
    }

    /// Parameter dimension `r`.
    pub fn params(&self) -> usize {
        self.a.cols()
    }

    /// The point `A*y + c`.
    pub fn apply(&self, y: &[FieldElem]) -> Vec<FieldElem> {
        let ay = self.a.mul_vec(y, self.base);
        ay.iter().zip(&self.c).map(|(a, c)| a.add(c)).collect()
    }
}

/// Decide solvability of `{ l = 0 : l in terms }` over the fraction field and
/// parametrize the solution set. `None` means unsolvable. An empty system
/// yields the identity parametrization.
pub fn lin(terms: &[LinTerm], n: usize, base: Base) -> Option<AffineParam> {
    if terms.is_empty() {
        return Some(AffineParam::identity(base, n));
    }
    // Augmented matrix [coeffs | -constant].
    let mut m = Mat::zero(base, terms.len(), n + 1);
    for (r, l) in terms.iter().enumerate() {
        debug_assert!(l.max_var().map_or(true, |v| v < n));
        for (&i, cf) in l.coeffs() {
            *m.at_mut(r, i) = FieldElem::from_scalar(cf.clone());
        }
        *m.at_mut(r, n) = FieldElem::from_scalar(l.constant_part().neg());
    }
    let pivots = m.rref();
    if pivots.contains(&n) {
        return None; // a row reduced to 0 = nonzero
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let r = free.len();
    let mut a = Mat::zero(base, n, r);
    let mut c = vec![FieldElem::zero(base); n];
    // Particular solution: free variables zero, pivots from the last column.
    for (row, &pc) in pivots.iter().enumerate() {
        c[pc] = m.at(row, n).clone();
    }
    // Kernel basis: one column per free variable, scaled so the first
    // nonzero coordinate is 1.
    for (k, &fc) in free.iter().enumerate() {
        *a.at_mut(fc, k) = FieldElem::one(base);
        for (row, &pc) in pivots.iter().enumerate() {
            *a.at_mut(pc, k) = m.at(row, fc).neg();
        }
        normalize_column(&mut a, k);
    }
    Some(AffineParam::new(a, c, base))
}

fn normalize_column(a: &mut Mat, k: usize) {
    let lead = (0..a.rows()).find(|&r| !a.at(r, k).is_zero());
    if let Some(r0) = lead {
        let inv = a.at(r0, k).inverse();
        for r in 0..a.rows() {
            *a.at_mut(r, k) = a.at(r, k).mul(&inv);
        }
    }
}

/// Basis of the null space of `m`, echelon-normalized (one vector per free
/// column, free coordinate scaled to 1).
pub fn kernel_basis(m: &Mat, base: Base) -> Vec<Vec<FieldElem>> {
    let n = m.cols();
    let mut work = m.clone();
    let pivots = work.rref();
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&fc| {
            let mut v = vec![FieldElem::zero(base); n];
            v[fc] = FieldElem::one(base);
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = work.at(row, fc).neg();
            }
            if let Some(lead) = v.iter().position(|x| !x.is_zero()) {
                let inv = v[lead].inverse();
                for x in v.iter_mut() {
                    *x = x.mul(&inv);
                }
            }
            v
        })
        .collect()
}

/// Affine form over the fraction field in `r` parameters.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AffineForm {
    pub coeffs: Vec<FieldElem>,
    pub constant: FieldElem,
}

impl AffineForm {
    pub fn constant_form(c: FieldElem) -> AffineForm {
        AffineForm { coeffs: Vec::new(), constant: c }
    }

    pub fn base(&self) -> Base {
        self.constant.base()
    }

    pub fn params(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_identically_zero(&self) -> bool {
        self.constant.is_zero() && self.coeffs.iter().all(FieldElem::is_zero)
    }

    pub fn eval(&self, y: &[FieldElem]) -> FieldElem {
        let mut acc = self.constant.clone();
        for (c, v) in self.coeffs.iter().zip(y) {
            acc = acc.add(&c.mul(v));
        }
        acc
    }

    /// Compose with an affine substitution `y = B*w + e`.
    pub fn compose(&self, b: &Mat, e: &[FieldElem]) -> AffineForm {
        let base = self.base();
        assert_eq!(b.rows(), self.coeffs.len().max(0));
        let mut constant = self.constant.clone();
        for (c, ei) in self.coeffs.iter().zip(e) {
            constant = constant.add(&c.mul(ei));
        }
        let coeffs = (0..b.cols())
            .map(|j| {
                let mut acc = FieldElem::zero(base);
                for (i, c) in self.coeffs.iter().enumerate() {
                    acc = acc.add(&c.mul(b.at(i, j)));
                }
                acc
            })
            .collect();
        AffineForm { coeffs, constant }
    }
}

/// `l(A*y + c)` as an affine form in the parameters of `p`.
pub fn substitute(l: &LinTerm, p: &AffineParam) -> AffineForm {
    let base = p.base();
    assert!(
        l.max_var().map_or(true, |v| v < p.ambient()),
        "dimension mismatch between term and parametrization"
    );
    let mut constant = FieldElem::from_scalar(l.constant_part().clone());
    for (&i, cf) in l.coeffs() {
        constant = constant.add(&p.c[i].mul_scalar(cf));
    }
    let coeffs = (0..p.params())
        .map(|j| {
            let mut acc = FieldElem::zero(base);
            for (&i, cf) in l.coeffs() {
                acc = acc.add(&p.a.at(i, j).mul_scalar(cf));
            }
            acc
        })
        .collect();
    AffineForm { coeffs, constant }
}

/// Exact solution of `A*x = v`, if one exists.
pub fn solve_exact(a: &Mat, v: &[FieldElem], base: Base) -> Option<Vec<FieldElem>> {
    assert_eq!(a.rows(), v.len());
    let n = a.cols();
    let mut m = Mat::zero(base, a.rows(), n + 1);
    for r in 0..a.rows() {
        for c in 0..n {
            *m.at_mut(r, c) = a.at(r, c).clone();
        }
        *m.at_mut(r, n) = v[r].clone();
    }
    let pivots = m.rref();
    if pivots.contains(&n) {
        return None;
    }
    let mut x = vec![FieldElem::zero(base); n];
    for (row, &pc) in pivots.iter().enumerate() {
        x[pc] = m.at(row, n).clone();
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn fe(n: i64, d: i64) -> FieldElem {
        FieldElem::new(Scalar::int(n), Scalar::int(d))
    }

    fn term(coeffs: &[(usize, i64)], constant: i64) -> LinTerm {
        let mut l = LinTerm::constant(Scalar::int(constant));
        for &(i, c) in coeffs {
            l = l.plus_monomial(i, Scalar::int(c));
        }
        l
    }

    #[test]
    fn lin_one_equation() {
        // x1 + x2 - 1 = 0
        let p = lin(&[term(&[(0, 1), (1, 1)], -1)], 2, Base::Int).unwrap();
        assert_eq!(p.params(), 1);
        // The parametrized set must coincide with the reference set
        // {(y, 1-y)}: both directions via exact solves.
        for y in [-3i64, 0, 7] {
            let pt = p.apply(&[fe(y, 1)]);
            assert!(pt[0].add(&pt[1]).sub(&fe(1, 1)).is_zero());
        }
        // The reference point (0, 1) is reached.
        let target = vec![fe(0, 1), fe(1, 1)];
        let shifted: Vec<FieldElem> = target.iter().zip(&p.c).map(|(t, c)| t.sub(c)).collect();
        assert!(solve_exact(&p.a, &shifted, Base::Int).is_some());
    }

    #[test]
    fn lin_inconsistent() {
        assert!(lin(&[term(&[(0, 1)], 0), term(&[(0, 1)], -1)], 1, Base::Int).is_none());
    }

    #[test]
    fn lin_empty_is_identity() {
        let p = lin(&[], 2, Base::Int).unwrap();
        assert_eq!(p.a, Mat::identity(Base::Int, 2));
        assert!(p.c.iter().all(FieldElem::is_zero));
    }

    #[test]
    fn substitute_examples() {
        // l = x1 + x2 through the parametrization of x1 + x2 = 1 is constant 1.
        let p = lin(&[term(&[(0, 1), (1, 1)], -1)], 2, Base::Int).unwrap();
        let g = substitute(&term(&[(0, 1), (1, 1)], 0), &p);
        assert!(g.coeffs.iter().all(FieldElem::is_zero));
        assert!(g.constant.is_one());

        // Identity parametrization leaves x1 alone.
        let idp = AffineParam::identity(Base::Int, 1);
        let g = substitute(&term(&[(0, 1)], 0), &idp);
        assert_eq!(g.coeffs, vec![fe(1, 1)]);
        assert!(g.constant.is_zero());

        // l = 2x1 + 1 through x1 = 3y + 5 is 6y + 11.
        let p = AffineParam::new(
            Mat::from_rows(Base::Int, vec![vec![fe(3, 1)]]),
            vec![fe(5, 1)],
            Base::Int,
        );
        let g = substitute(&term(&[(0, 2)], 1), &p);
        assert_eq!(g.coeffs, vec![fe(6, 1)]);
        assert_eq!(g.constant, fe(11, 1));
    }

    #[test]
    fn kernel_examples() {
        let m = Mat::from_rows(Base::Int, vec![vec![fe(1, 1), fe(1, 1)]]);
        let basis = kernel_basis(&m, Base::Int);
        assert_eq!(basis, vec![vec![fe(1, 1), fe(-1, 1)]]);
        let id = Mat::identity(Base::Int, 2);
        assert!(kernel_basis(&id, Base::Int).is_empty());
        let z = Mat::zero(Base::Int, 2, 2);
        let basis = kernel_basis(&z, Base::Int);
        assert_eq!(basis.len(), 2);
        assert_eq!(basis[0], vec![fe(1, 1), fe(0, 1)]);
        assert_eq!(basis[1], vec![fe(0, 1), fe(1, 1)]);
    }

    #[test]
    fn rank_identity() {
        // rank(A) = n - rank(coefficient matrix)
        let terms = [term(&[(0, 2), (1, 4)], 0), term(&[(0, 1), (1, 2)], 0)];
        let p = lin(&terms, 2, Base::Int).unwrap();
        let mut m = Mat::zero(Base::Int, 2, 2);
        *m.at_mut(0, 0) = fe(2, 1);
        *m.at_mut(0, 1) = fe(4, 1);
        *m.at_mut(1, 0) = fe(1, 1);
        *m.at_mut(1, 1) = fe(2, 1);
        assert_eq!(p.params(), 2 - m.rank(Base::Int));
    }
}
