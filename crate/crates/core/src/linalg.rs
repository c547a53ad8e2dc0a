//! Numeric kernel: complex matrices, eigenstructure of Hermitian and
//! commuting normal families, integer Smith normal form.

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Default numeric tolerance: gallery inputs are exactly representable, this
/// absorbs roundoff only.
pub const TAU_NUM: f64 = 1e-9;
/// Default eigenvalue-grouping tolerance.
pub const TAU_EIG: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub num: f64,
    pub eig: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { num: TAU_NUM, eig: TAU_EIG }
    }
}

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian: ||A - A*|| = {defect:.3e}")]
    NotHermitian { defect: f64 },
    #[error("matrix {index} is not normal: ||AA* - A*A|| = {defect:.3e}")]
    NotNormal { index: usize, defect: f64 },
    #[error("matrices {first} and {second} do not commute: ||[A,B]|| = {defect:.3e}")]
    NotCommuting { first: usize, second: usize, defect: f64 },
    #[error("family members have mismatched shapes")]
    ShapeMismatch,
}

/// Frobenius norm. All residual bounds in this crate are stated against it;
/// it dominates the operator norm, so the bounds are conservative.
pub fn fro_norm(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn is_hermitian(a: &CMat, tol: f64) -> bool {
    a.is_square() && fro_norm(&(a - a.adjoint())) <= tol
}

pub fn is_unitary(a: &CMat, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let n = a.nrows();
    fro_norm(&(a.adjoint() * a - CMat::identity(n, n))) <= tol
}

pub fn commutator_norm(a: &CMat, b: &CMat) -> f64 {
    fro_norm(&(a * b - b * a))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending, with the
/// index partition into near-equal eigenvalue groups.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub unitary: CMat,
    pub eigenvalues: Vec<f64>,
    pub blocks: Vec<Vec<usize>>,
}

/// Diagonalize a Hermitian matrix. Eigenvalues come out ascending and
/// `blocks` groups indices whose eigenvalues agree within `tol.eig`.
pub fn eig_hermitian(a: &CMat, tol: &Tolerances) -> Result<EigenDecomposition, LinalgError> {
    let defect = fro_norm(&(a - a.adjoint()));
    if !a.is_square() || defect > tol.num {
        return Err(LinalgError::NotHermitian { defect });
    }
    // Work on the exactly Hermitian part so the backend sees a clean input.
    let h = (a + a.adjoint()).map(|z| z * C64::new(0.5, 0.0));
    let se = nalgebra::linalg::SymmetricEigen::new(h);
    let n = a.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let mut unitary = CMat::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        unitary.set_column(dst, &se.eigenvectors.column(src));
        eigenvalues.push(se.eigenvalues[src]);
    }
    let blocks = group_runs(&eigenvalues, tol.eig);
    Ok(EigenDecomposition { unitary, eigenvalues, blocks })
}

fn group_runs(sorted: &[f64], tol: f64) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for i in 0..sorted.len() {
        match blocks.last_mut() {
            Some(block) if (sorted[i] - sorted[*block.last().unwrap()]).abs() <= tol => {
                block.push(i)
            }
            _ => blocks.push(vec![i]),
        }
    }
    blocks
}

/// Joint diagonalization of a family of pairwise commuting normal matrices.
///
/// Returns one unitary `u` with `u* a_j u` diagonal for every member, and per
/// column the tuple of eigenvalues `(a_1[kk], a_2[kk], ...)`.
///
/// The first pass diagonalizes a fixed pseudo-random real combination of the
/// Hermitian parts; remaining degeneracies are refined block by block on each
/// member. Columns are ordered so the eigenvalue tuples are lexicographically
/// ascending by (real, imaginary) per component.
pub fn simultaneous_diagonalize(
    family: &[CMat],
    tol: &Tolerances,
) -> Result<(CMat, Vec<Vec<C64>>), LinalgError> {
    let n = match family.first() {
        Some(a) => {
            if !a.is_square() {
                return Err(LinalgError::ShapeMismatch);
            }
            a.nrows()
        }
        None => return Ok((CMat::identity(0, 0), Vec::new())),
    };
    for (j, a) in family.iter().enumerate() {
        if a.nrows() != n || a.ncols() != n {
            return Err(LinalgError::ShapeMismatch);
        }
        let defect = fro_norm(&(a * a.adjoint() - a.adjoint() * a));
        if defect > tol.num * 10.0 {
            return Err(LinalgError::NotNormal { index: j, defect });
        }
    }
    for i in 0..family.len() {
        for j in (i + 1)..family.len() {
            let defect = commutator_norm(&family[i], &family[j]);
            if defect > tol.num * 10.0 {
                return Err(LinalgError::NotCommuting { first: i, second: j, defect });
            }
        }
    }

    // Hermitian real/imaginary parts of every member; commuting normal
    // matrices have commuting parts (Fuglede).
    let mut parts: Vec<CMat> = Vec::new();
    for a in family {
        parts.push((a + a.adjoint()).map(|z| z * C64::new(0.5, 0.0)));
        parts.push((a - a.adjoint()).map(|z| z * C64::new(0.0, -0.5)));
    }

    let mut u = CMat::identity(n, n);
    let mut blocks: Vec<Vec<usize>> = vec![(0..n).collect()];

    if !parts.is_empty() {
        // Fixed coefficients; deterministic and generic enough for the small
        // families arising here.
        let combo = parts
            .iter()
            .enumerate()
            .fold(CMat::zeros(n, n), |acc, (k, p)| {
                acc + p.map(|z| z * C64::new((1.0 + k as f64).sqrt(), 0.0))
            });
        refine(&mut u, &mut blocks, &combo, tol)?;
    }
    for p in &parts {
        if blocks.iter().all(|b| b.len() == 1) {
            break;
        }
        refine(&mut u, &mut blocks, p, tol)?;
    }

    let mut tuples: Vec<Vec<C64>> = vec![Vec::with_capacity(family.len()); n];
    for a in family {
        let d = u.adjoint() * a * &u;
        for (k, tuple) in tuples.iter_mut().enumerate() {
            tuple.push(d[(k, k)]);
        }
    }

    // Deterministic column order: lexicographic over the tuples.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| tuple_cmp(&tuples[i], &tuples[j]));
    let mut u_sorted = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
    }
    let tuples_sorted: Vec<Vec<C64>> = order.iter().map(|&src| tuples[src].clone()).collect();
    Ok((u_sorted, tuples_sorted))
}

fn tuple_cmp(a: &[C64], b: &[C64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap()) {
            std::cmp::Ordering::Equal => continue,
            ord => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

/// One refinement sweep: diagonalize the Hermitian `h` restricted to every
/// current block, then split the blocks along the new eigenvalue groups.
fn refine(
    u: &mut CMat,
    blocks: &mut Vec<Vec<usize>>,
    h: &CMat,
    tol: &Tolerances,
) -> Result<(), LinalgError> {
    let transformed = u.adjoint() * h * &*u;
    let mut next_blocks = Vec::new();
    for block in blocks.iter() {
        if block.len() == 1 {
            next_blocks.push(block.clone());
            continue;
        }
        let m = block.len();
        let mut sub = CMat::zeros(m, m);
        for (bi, &i) in block.iter().enumerate() {
            for (bj, &j) in block.iter().enumerate() {
                sub[(bi, bj)] = transformed[(i, j)];
            }
        }
        let dec = eig_hermitian(&sub, tol)?;
        // Rotate the block columns of u by the sub-unitary.
        let cols: Vec<CVec> = block.iter().map(|&i| u.column(i).into_owned()).collect();
        for (bj, &j) in block.iter().enumerate() {
            let mut newcol = CVec::zeros(u.nrows());
            for (bi, col) in cols.iter().enumerate() {
                newcol += col * dec.unitary[(bi, bj)];
            }
            u.set_column(j, &newcol);
        }
        for sub_block in &dec.blocks {
            next_blocks.push(sub_block.iter().map(|&bi| block[bi]).collect());
        }
    }
    *blocks = next_blocks;
    Ok(())
}

/// Max off-diagonal Frobenius mass of `u* a u` over the family; the residual
/// the joint diagonalization is judged by.
pub fn offdiag_residual(u: &CMat, family: &[CMat]) -> f64 {
    family
        .iter()
        .map(|a| {
            let d = u.adjoint() * a * u;
            let mut s = 0.0;
            for i in 0..d.nrows() {
                for j in 0..d.ncols() {
                    if i != j {
                        s += d[(i, j)].norm_sqr();
                    }
                }
            }
            s.sqrt()
        })
        .fold(0.0, f64::max)
}

/// Dense matrix over arbitrary-precision integers; carrier for the nerve
/// coboundary maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<i64>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = IntMat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, &v) in row.iter().enumerate() {
                m[(i, j)] = BigInt::from(v);
            }
        }
        m
    }

    pub fn mul(&self, other: &IntMat) -> IntMat {
        assert_eq!(self.cols, other.rows);
        let mut out = IntMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                if self[(i, k)].is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let add = &self[(i, k)] * &other[(k, j)];
                    out[(i, j)] += add;
                }
            }
        }
        out
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            let ia = a * self.cols + j;
            let ib = b * self.cols + j;
            self.data.swap(ia, ib);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            let ia = i * self.cols + a;
            let ib = i * self.cols + b;
            self.data.swap(ia, ib);
        }
    }

    /// row[a] += q * row[b]
    fn add_row(&mut self, a: usize, b: usize, q: &BigInt) {
        for j in 0..self.cols {
            let add = q * &self[(b, j)];
            self[(a, j)] += add;
        }
    }

    fn add_col(&mut self, a: usize, b: usize, q: &BigInt) {
        for i in 0..self.rows {
            let add = q * &self[(i, b)];
            self[(i, a)] += add;
        }
    }

    fn negate_row(&mut self, a: usize) {
        for j in 0..self.cols {
            let v = -self[(a, j)].clone();
            self[(a, j)] = v;
        }
    }

    /// Determinant by fraction-free Gaussian elimination (Bareiss).
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                match (k + 1..n).find(|&i| !m[(i, k)].is_zero()) {
                    Some(i) => {
                        m.swap_rows(i, k);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[(k, k)] * &m[(i, j)] - &m[(i, k)] * &m[(k, j)];
                    m[(i, j)] = num / &prev;
                }
            }
            for i in k + 1..n {
                m[(i, k)] = BigInt::zero();
            }
            prev = m[(k, k)].clone();
        }
        sign * m[(n - 1, n - 1)].clone()
    }
}

impl std::ops::Index<(usize, usize)> for IntMat {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

/// Smith normal form: unimodular `left`, `right` with `left * m * right`
/// equal to the diagonal embedding of `diag`, and d1 | d2 | ... .
#[derive(Debug, Clone)]
pub struct SmithNormalForm {
    pub left: IntMat,
    pub diag: Vec<BigInt>,
    pub right: IntMat,
}

pub fn smith_normal_form(m: &IntMat) -> SmithNormalForm {
    let mut a = m.clone();
    let mut left = IntMat::identity(m.rows);
    let mut right = IntMat::identity(m.cols);
    let n = m.rows.min(m.cols);

    let mut t = 0;
    while t < n {
        // Find a pivot: smallest nonzero absolute value in the remaining block.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..m.rows {
            for j in t..m.cols {
                if !a[(i, j)].is_zero()
                    && pivot.map_or(true, |(pi, pj)| a[(i, j)].abs() < a[(pi, pj)].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        a.swap_rows(t, pi);
        left.swap_rows(t, pi);
        a.swap_cols(t, pj);
        right.swap_cols(t, pj);

        loop {
            let mut clean = true;
            for i in t + 1..m.rows {
                if !a[(i, t)].is_zero() {
                    let q = -(&a[(i, t)] / &a[(t, t)]);
                    a.add_row(i, t, &q);
                    left.add_row(i, t, &q);
                    if !a[(i, t)].is_zero() {
                        a.swap_rows(i, t);
                        left.swap_rows(i, t);
                        clean = false;
                    }
                }
            }
            for j in t + 1..m.cols {
                if !a[(t, j)].is_zero() {
                    let q = -(&a[(t, j)] / &a[(t, t)]);
                    a.add_col(j, t, &q);
                    right.add_col(j, t, &q);
                    if !a[(t, j)].is_zero() {
                        a.swap_cols(j, t);
                        right.swap_cols(j, t);
                        clean = false;
                    }
                }
            }
            if clean {
                break;
            }
        }
        t += 1;
    }

    // Enforce the divisibility chain d1 | d2 | ... .
    loop {
        let mut fixed = true;
        for k in 0..t.saturating_sub(1) {
            let (dk, dk1) = (a[(k, k)].clone(), a[(k + 1, k + 1)].clone());
            if dk1.is_zero() || (&dk1 % &dk).is_zero() {
                continue;
            }
            fixed = false;
            // Standard 2x2 trick: fold d_{k+1} into column k, reduce again.
            a.add_col(k, k + 1, &BigInt::one());
            right.add_col(k, k + 1, &BigInt::one());
            loop {
                if a[(k + 1, k)].is_zero() {
                    break;
                }
                let q = -(&a[(k, k)] / &a[(k + 1, k)]);
                if !q.is_zero() {
                    a.add_row(k, k + 1, &q);
                    left.add_row(k, k + 1, &q);
                }
                if a[(k, k)].is_zero() {
                    a.swap_rows(k, k + 1);
                    left.swap_rows(k, k + 1);
                } else if !a[(k + 1, k)].is_zero() {
                    let q2 = -(&a[(k + 1, k)] / &a[(k, k)]);
                    a.add_row(k + 1, k, &q2);
                    left.add_row(k + 1, k, &q2);
                    if !a[(k + 1, k)].is_zero() {
                        a.swap_rows(k, k + 1);
                        left.swap_rows(k, k + 1);
                    }
                }
            }
            let q = -(&a[(k, k + 1)] / &a[(k, k)]);
            if !q.is_zero() {
                a.add_col(k + 1, k, &q);
                right.add_col(k + 1, k, &q);
            }
        }
        if fixed {
            break;
        }
    }

    for k in 0..t {
        if a[(k, k)].is_negative() {
            a.negate_row(k);
            left.negate_row(k);
        }
    }

    let diag: Vec<BigInt> =
        (0..t).map(|k| a[(k, k)].clone()).filter(|d| !d.is_zero()).collect();
    SmithNormalForm { left, diag, right }
}

/// Haar-ish random unitary: Q factor of a complex Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl rand::Rng) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    g.qr().q()
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian(n: usize, rng: &mut impl rand::Rng) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    (&g + g.adjoint()).map(|z| z * C64::new(0.5, 0.0))
}
