//! Dense column-major matrices and the handful of routines the estimators need:
//! Cholesky, SPD inversion, Gram matrices, quadratic forms and a Jacobi
//! eigenvalue sweep for symmetric matrices.

use std::io::{Read, Write};
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{dims, Error, Result};

/// Pivots at or below this value are treated as rank deficiency.
pub const PIVOT_FLOOR: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-10;

/// Real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self(data))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    /// The `j`-th canonical basis vector of length `len`.
    pub fn unit(len: usize, j: usize) -> Self {
        let mut v = Self::zeros(len);
        v.0[j] = 1.0;
        v
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn l0(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    pub fn l1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn l2(&self) -> f64 {
        dot(&self.0, &self.0).sqrt()
    }

    pub fn linf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl From<Vec<f64>> for DenseVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl Deref for DenseVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for DenseVector {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Real matrix stored column by column.
///
/// Serialized as a list of rows so that JSON reports read naturally.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<Vec<f64>>", try_from = "Vec<Vec<f64>>")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(p: usize) -> Self {
        Self::from_diag(&vec![1.0; p])
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let p = diag.len();
        let mut m = Self::zeros(p, p);
        for (j, d) in diag.iter().enumerate() {
            m[(j, j)] = *d;
        }
        m
    }

    pub fn from_col_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(dims(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row slices; all rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = vec![0.0; nrows * ncols];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return Err(dims(format!("row {i} has {} entries, expected {ncols}", row.len())));
            }
            for (j, v) in row.iter().enumerate() {
                data[j * nrows + i] = *v;
            }
        }
        Self::from_col_major(nrows, ncols, data)
    }

    /// Assembles a matrix from equal-length columns.
    pub fn from_columns<C: AsRef<[f64]>>(rows: usize, columns: &[C]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != rows {
                return Err(dims(format!("column {j} has {} entries, expected {rows}", c.len())));
            }
            data.extend_from_slice(c);
        }
        Self::from_col_major(rows, columns.len(), data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_col_major(&self) -> &[f64] {
        &self.data
    }

    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self[(i, j)]).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols)).map(|j| self[(j, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for j in 0..self.cols {
            for i in 0..self.rows {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(dims(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, b) in other.col(j).iter().enumerate() {
                if *b != 0.0 {
                    axpy(*b, self.col(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// `self · v`.
    pub fn matvec(&self, v: &[f64]) -> Result<DenseVector> {
        if v.len() != self.cols {
            return Err(dims(format!("{}x{} times vector of length {}", self.rows, self.cols, v.len())));
        }
        let mut out = vec![0.0; self.rows];
        for (j, b) in v.iter().enumerate() {
            if *b != 0.0 {
                axpy(*b, self.col(j), &mut out);
            }
        }
        Ok(DenseVector(out))
    }

    /// `selfᵀ · v`.
    pub fn tr_matvec(&self, v: &[f64]) -> Result<DenseVector> {
        if v.len() != self.rows {
            return Err(dims(format!(
                "transpose of {}x{} times vector of length {}",
                self.rows, self.cols, v.len()
            )));
        }
        Ok(DenseVector((0..self.cols).map(|j| dot(self.col(j), v)).collect()))
    }

    pub fn scale(&self, a: f64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|v| a * v).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(dims(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| f(*a, *b)).collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    /// Largest absolute entrywise difference; `∞` on shape mismatch.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for j in 0..self.cols.min(self.rows) {
            for i in 0..j {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    fn check_symmetric(&self, tol: f64) -> Result<()> {
        if !self.is_square() {
            return Err(dims(format!("expected a square matrix, got {}x{}", self.rows, self.cols)));
        }
        for j in 0..self.cols {
            for i in 0..j {
                let (a, b) = (self[(i, j)], self[(j, i)]);
                if (a - b).abs() > tol * a.abs().max(b.abs()).max(1.0) {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i)).collect()
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[j * self.rows + i]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[j * self.rows + i]
    }
}

impl From<DenseMatrix> for Vec<Vec<f64>> {
    fn from(m: DenseMatrix) -> Self {
        m.to_rows()
    }
}

impl TryFrom<Vec<Vec<f64>>> for DenseMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `y += a·x`
#[inline]
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Lower-triangular `L` with `L·Lᵀ = a`.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    a.check_symmetric(SYMMETRY_TOL)?;
    let p = a.rows;
    let mut l = DenseMatrix::zeros(p, p);
    for j in 0..p {
        let mut pivot = a[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot <= PIVOT_FLOOR || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let d = pivot.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..p {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / d;
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ x = b` in place given the Cholesky factor.
fn cholesky_solve_in_place(l: &DenseMatrix, b: &mut [f64]) {
    let p = l.rows;
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
    for i in (0..p).rev() {
        let mut s = b[i];
        for k in (i + 1)..p {
            s -= l[(k, i)] * b[k];
        }
        b[i] = s / l[(i, i)];
    }
}

/// Solves `a·x = b` for symmetric positive definite `a`.
pub fn solve_spd(a: &DenseMatrix, b: &[f64]) -> Result<DenseVector> {
    if b.len() != a.rows {
        return Err(dims(format!("{}x{} system with rhs of length {}", a.rows, a.cols, b.len())));
    }
    let l = cholesky(a)?;
    let mut x = b.to_vec();
    cholesky_solve_in_place(&l, &mut x);
    Ok(DenseVector(x))
}

pub fn invert_spd(a: &DenseMatrix) -> Result<DenseMatrix> {
    let l = cholesky(a)?;
    let p = a.rows;
    let mut inv = DenseMatrix::identity(p);
    for j in 0..p {
        cholesky_solve_in_place(&l, inv.col_mut(j));
    }
    // symmetrize away round-off
    for j in 0..p {
        for i in 0..j {
            let m = 0.5 * (inv[(i, j)] + inv[(j, i)]);
            inv[(i, j)] = m;
            inv[(j, i)] = m;
        }
    }
    Ok(inv)
}

/// `XᵀX / n`.
pub fn gram(x: &DenseMatrix) -> DenseMatrix {
    let (n, p) = (x.rows, x.cols);
    let mut g = DenseMatrix::zeros(p, p);
    if n == 0 {
        return g;
    }
    let inv_n = 1.0 / n as f64;
    for j in 0..p {
        for k in 0..=j {
            let v = dot(x.col(j), x.col(k)) * inv_n;
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    g
}

/// `vᵀ a w`.
pub fn quadratic_form(v: &[f64], a: &DenseMatrix, w: &[f64]) -> Result<f64> {
    if v.len() != a.rows || w.len() != a.cols {
        return Err(dims(format!(
            "vectors of length {} and {} against a {}x{} matrix",
            v.len(),
            w.len(),
            a.rows,
            a.cols
        )));
    }
    Ok(dot(v, &a.matvec(w)?))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    a.check_symmetric(1e-8)?;
    let p = a.rows;
    let mut m = a.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for j in 0..p {
            for i in 0..j {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for q in 1..p {
            for r in 0..q {
                let apq = m[(r, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(r, r)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..p {
                    let mkr = m[(k, r)];
                    let mkq = m[(k, q)];
                    m[(k, r)] = c * mkr - s * mkq;
                    m[(k, q)] = s * mkr + c * mkq;
                }
                for k in 0..p {
                    let mrk = m[(r, k)];
                    let mqk = m[(q, k)];
                    m[(r, k)] = c * mrk - s * mqk;
                    m[(q, k)] = s * mrk + c * mqk;
                }
            }
        }
    }
    let mut eig = m.diag();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

pub fn min_eigenvalue(a: &DenseMatrix) -> Result<f64> {
    Ok(symmetric_eigenvalues(a)?.first().copied().unwrap_or(f64::INFINITY))
}

/// Writes one matrix row per line, comma separated, 17 significant digits.
pub fn write_csv<W: Write>(m: &DenseMatrix, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for i in 0..m.rows {
        w.write_record((0..m.cols).map(|j| format!("{:.16e}", m[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<DenseMatrix> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut rows = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: `{f}`: {e}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DenseMatrix::from_rows(&rows)
}

/// Vectors are stored as a single column.
pub fn write_vector_csv<W: Write>(v: &[f64], out: W) -> Result<()> {
    write_csv(&DenseMatrix::from_col_major(v.len(), 1, v.to_vec())?, out)
}

pub fn read_vector_csv<R: Read>(input: R) -> Result<DenseVector> {
    let m = read_csv(input)?;
    match (m.rows, m.cols) {
        (_, 1) | (0, _) => Ok(DenseVector(m.data)),
        (1, _) => Ok(DenseVector(m.data)),
        (r, c) => Err(dims(format!("expected a vector, got a {r}x{c} matrix"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rho_half() -> DenseMatrix {
        DenseMatrix::from_rows(&[[1.0, 0.5], [0.5, 1.0]]).unwrap()
    }

    fn random_spd(p: usize, entries: &[f64]) -> DenseMatrix {
        // B·Bᵀ + p·I from a p×p block of entries
        let b = DenseMatrix::from_col_major(p, p, entries[..p * p].to_vec()).unwrap();
        b.matmul(&b.transpose()).unwrap().add(&DenseMatrix::identity(p).scale(0.5)).unwrap()
    }

    #[test]
    fn cholesky_examples() {
        let l = cholesky(&DenseMatrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_eq!(l, DenseMatrix::from_diag(&[2.0, 3.0]));

        let l = cholesky(&rho_half()).unwrap();
        assert_abs_diff_eq!(l[(0, 0)], 1.0);
        assert_abs_diff_eq!(l[(0, 1)], 0.0);
        assert_abs_diff_eq!(l[(1, 0)], 0.5);
        assert_abs_diff_eq!(l[(1, 1)], 0.75f64.sqrt(), epsilon = 1e-15);

        assert_eq!(cholesky(&DenseMatrix::identity(5)).unwrap(), DenseMatrix::identity(5));
    }

    #[test]
    fn cholesky_rejects_degenerate_and_asymmetric() {
        let singular = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&singular), Err(Error::NotPositiveDefinite { index: 1, .. })));
        let asym = DenseMatrix::from_rows(&[[1.0, 0.2], [0.1, 1.0]]).unwrap();
        assert!(matches!(cholesky(&asym), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn invert_examples() {
        let inv = invert_spd(&DenseMatrix::from_diag(&[2.0, 4.0])).unwrap();
        assert_abs_diff_eq!(inv.max_abs_diff(&DenseMatrix::from_diag(&[0.5, 0.25])), 0.0);

        let inv = invert_spd(&rho_half()).unwrap();
        let adjugate =
            DenseMatrix::from_rows(&[[1.0, -0.5], [-0.5, 1.0]]).unwrap().scale(1.0 / 0.75);
        assert!(inv.max_abs_diff(&adjugate) < 1e-14);

        assert_eq!(invert_spd(&DenseMatrix::identity(4)).unwrap(), DenseMatrix::identity(4));
    }

    #[test]
    fn gram_examples() {
        let g = gram(&DenseMatrix::identity(2));
        assert_eq!(g, DenseMatrix::from_diag(&[0.5, 0.5]));
        let ones = DenseMatrix::from_col_major(4, 1, vec![1.0; 4]).unwrap();
        assert_eq!(gram(&ones), DenseMatrix::from_diag(&[1.0]));

        let data: Vec<f64> = (0..15).map(|k| ((k * 7919) % 23) as f64 / 7.0 - 1.3).collect();
        let x = DenseMatrix::from_col_major(5, 3, data).unwrap();
        let g = gram(&x);
        for a in 0..3 {
            for b in 0..3 {
                let mut s = 0.0;
                for i in 0..5 {
                    s += x[(i, a)] * x[(i, b)];
                }
                assert_abs_diff_eq!(g[(a, b)], s / 5.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gram_of_empty_design_is_zero() {
        let x = DenseMatrix::zeros(0, 3);
        assert_eq!(gram(&x), DenseMatrix::zeros(3, 3));
    }

    #[test]
    fn quadratic_form_examples() {
        let e1 = DenseVector::unit(2, 0);
        let e2 = DenseVector::unit(2, 1);
        assert_eq!(quadratic_form(&e1, &DenseMatrix::identity(2), &e1).unwrap(), 1.0);
        let theta = invert_spd(&rho_half()).unwrap();
        assert_abs_diff_eq!(quadratic_form(&e1, &theta, &e2).unwrap(), -2.0 / 3.0, epsilon = 1e-14);
        let z = DenseVector::zeros(2);
        assert_eq!(quadratic_form(&z, &theta, &z).unwrap(), 0.0);
        assert!(matches!(
            quadratic_form(&[1.0], &theta, &e1),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn eigenvalues_of_small_matrices() {
        let e = symmetric_eigenvalues(&rho_half()).unwrap();
        assert_abs_diff_eq!(e[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(e[1], 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(min_eigenvalue(&DenseMatrix::from_diag(&[7.0, 3.0])).unwrap(), 3.0);
    }

    #[test]
    fn non_finite_rejected() {
        assert!(matches!(
            DenseMatrix::from_col_major(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
        assert!(DenseVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = DenseMatrix::from_rows(&[[0.1, -1.0 / 3.0, 1e-300], [2.0e10, std::f64::consts::PI, -0.0]])
            .unwrap();
        let mut buf = Vec::new();
        write_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert_eq!(read_csv(buf.as_slice()).unwrap(), m);
        assert!(matches!(read_csv("1,x\n".as_bytes()), Err(Error::Parse(_))));
    }

    proptest! {
        #[test]
        fn cholesky_reconstructs(p in 1usize..12, entries in prop::collection::vec(-1.0f64..1.0, 144)) {
            let a = random_spd(p, &entries);
            let l = cholesky(&a).unwrap();
            for j in 0..p {
                prop_assert!(l[(j, j)] > 0.0);
                for i in 0..j {
                    prop_assert_eq!(l[(i, j)], 0.0);
                }
            }
            let back = l.matmul(&l.transpose()).unwrap();
            prop_assert!(back.max_abs_diff(&a) <= 1e-10 * a.max_abs());
        }

        #[test]
        fn double_inverse_is_identity_map(p in 1usize..10, entries in prop::collection::vec(-1.0f64..1.0, 100)) {
            let a = random_spd(p, &entries);
            let inv = invert_spd(&a).unwrap();
            prop_assert!(a.matmul(&inv).unwrap().max_abs_diff(&DenseMatrix::identity(p)) < 1e-8);
            prop_assert!(invert_spd(&inv).unwrap().max_abs_diff(&a) < 1e-6);
        }

        #[test]
        fn gram_is_psd(n in 1usize..8, p in 1usize..8, entries in prop::collection::vec(-3.0f64..3.0, 64)) {
            let x = DenseMatrix::from_col_major(n, p, entries[..n * p].to_vec()).unwrap();
            let g = gram(&x);
            for j in 0..p {
                prop_assert!(g[(j, j)] >= 0.0);
            }
            prop_assert!(min_eigenvalue(&g).unwrap() >= -1e-10);
        }

        #[test]
        fn quadratic_form_symmetric(p in 1usize..8, entries in prop::collection::vec(-1.0f64..1.0, 96)) {
            let a = random_spd(p, &entries);
            let v = &entries[64..64 + p];
            let w = &entries[80..80 + p];
            let lhs = quadratic_form(v, &a, w).unwrap();
            let rhs = quadratic_form(w, &a, v).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
