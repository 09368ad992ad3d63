//! Dense matrices over exact rationals.
//!
//! This is the arithmetic kernel for everything else in the crate: exact
//! heights, products with the height inequality `H(ab) <= n H(a) H(b)`,
//! fraction-free (Bareiss) determinants, a column-style Hermite normal form
//! with entries bounded by `|det|`, and exact inverses.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::scalar::ExactScalar;

/// Errors from exact matrix operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatrixError {
    /// Inner dimensions do not match: `(a.rows x a.cols) * (b.rows x b.cols)`.
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },
    NonSquare {
        rows: usize,
        cols: usize,
    },
    Singular,
    /// An operation over the integers received a non-integral entry.
    NonIntegral,
    Parse(String),
}

impl fmt::Display for MatrixError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatrixError::DimensionMismatch { left, right } => write!(
                f,
                "dimension mismatch: {}x{} * {}x{}",
                left.0, left.1, right.0, right.1
            ),
            MatrixError::NonSquare { rows, cols } => {
                write!(f, "expected a square matrix, got {rows}x{cols}")
            }
            MatrixError::Singular => write!(f, "matrix is singular"),
            MatrixError::NonIntegral => write!(f, "matrix has non-integral entries"),
            MatrixError::Parse(msg) => write!(f, "matrix parse error: {msg}"),
        }
    }
}

impl std::error::Error for MatrixError {}

/// A dense `rows x cols` matrix of [`ExactScalar`]s, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExactMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<ExactScalar>,
}

impl ExactMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<ExactScalar>) -> Self {
        assert_eq!(entries.len(), rows * cols, "entry count mismatch");
        ExactMatrix { rows, cols, entries }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ExactMatrix::new(rows, cols, vec![ExactScalar::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ExactMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ExactScalar::one();
        }
        m
    }

    /// Builds a matrix from integer rows; panics if the rows are ragged.
    pub fn from_int_rows<T: Clone + Into<BigInt>>(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            for x in row {
                entries.push(ExactScalar::from_int(x.clone().into()));
            }
        }
        ExactMatrix::new(r, c, entries)
    }

    pub fn from_bigint_rows(rows: &[Vec<BigInt>]) -> Self {
        ExactMatrix::from_int_rows(rows)
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

    pub fn entries(&self) -> &[ExactScalar] {
        &self.entries
    }

    /// Maximum multiplicative height over all entries; 1 for an empty or zero
    /// matrix.
    pub fn height(&self) -> BigInt {
        let mut h = BigInt::one();
        for e in &self.entries {
            let eh = e.height();
            if eh > h {
                h = eh;
            }
        }
        h
    }

    /// Exact product. The height inequality `H(ab) <= k H(a) H(b)` with
    /// `k = a.cols` is checked in debug builds.
    pub fn mul(&self, rhs: &ExactMatrix) -> Result<ExactMatrix, MatrixError> {
        if self.cols != rhs.rows {
            return Err(MatrixError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        let mut out = ExactMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc = ExactScalar::zero();
                for k in 0..self.cols {
                    if !self[(i, k)].is_zero() && !rhs[(k, j)].is_zero() {
                        acc = acc + &self[(i, k)] * &rhs[(k, j)];
                    }
                }
                out[(i, j)] = acc;
            }
        }
        debug_assert!(
            out.height() <= BigInt::from(self.cols.max(1)) * self.height() * rhs.height(),
            "height product bound violated"
        );
        Ok(out)
    }

    pub fn transpose(&self) -> ExactMatrix {
        let mut out = ExactMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].clone();
            }
        }
        out
    }

    pub fn neg(&self) -> ExactMatrix {
        let entries = self.entries.iter().map(|e| -e).collect();
        ExactMatrix::new(self.rows, self.cols, entries)
    }

    pub fn scale(&self, s: &ExactScalar) -> ExactMatrix {
        let entries = self.entries.iter().map(|e| e * s).collect();
        ExactMatrix::new(self.rows, self.cols, entries)
    }

    pub fn add(&self, rhs: &ExactMatrix) -> Result<ExactMatrix, MatrixError> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(MatrixError::DimensionMismatch {
                left: (self.rows, self.cols),
                right: (rhs.rows, rhs.cols),
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ExactMatrix::new(self.rows, self.cols, entries))
    }

    pub fn is_integral(&self) -> bool {
        self.entries.iter().all(|e| e.is_integer())
    }

    /// Integer rows of this matrix, or `NonIntegral` if any entry has a
    /// denominator.
    pub fn to_int_rows(&self) -> Result<Vec<Vec<BigInt>>, MatrixError> {
        let mut rows = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let mut row = Vec::with_capacity(self.cols);
            for j in 0..self.cols {
                row.push(self[(i, j)].to_bigint().ok_or(MatrixError::NonIntegral)?);
            }
            rows.push(row);
        }
        Ok(rows)
    }

    /// Exact determinant by fraction-free Bareiss elimination.
    ///
    /// Rational input is cleared to integers row by row; the scaling factors
    /// are divided back out at the end.
    pub fn det(&self) -> Result<ExactScalar, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        if n == 0 {
            return Ok(ExactScalar::one());
        }
        // Clear denominators: multiply each row by the lcm of its
        // denominators, remembering the accumulated factor.
        let mut scale = BigInt::one();
        let mut a: Vec<Vec<BigInt>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut l = BigInt::one();
            for j in 0..n {
                l = l.lcm(self[(i, j)].denom());
            }
            let row = (0..n)
                .map(|j| {
                    let e = &self[(i, j)];
                    e.numer() * (&l / e.denom())
                })
                .collect();
            scale *= &l;
            a.push(row);
        }
        let d = bareiss_det(&mut a);
        Ok(ExactScalar::new(d, scale))
    }

    /// Column-style Hermite normal form `h = m * u`.
    ///
    /// Requires a square integral matrix with nonzero determinant. The result
    /// `h` is upper triangular with positive diagonal, every off-diagonal
    /// entry reduced modulo the diagonal entry of its row, and `u` unimodular.
    /// Every entry of `h` is bounded by `|det m|` in absolute value, which is
    /// asserted before returning.
    pub fn hnf(&self) -> Result<(ExactMatrix, ExactMatrix), MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut h = self.to_int_rows()?;
        let mut u: Vec<Vec<BigInt>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { BigInt::one() } else { BigInt::zero() })
                    .collect()
            })
            .collect();

        // Work bottom-up: after row i is processed, columns 0..=i carry zeros
        // in all rows below i, so later column operations cannot disturb the
        // triangular part already built.
        for i in (0..n).rev() {
            // Gather the gcd of row i over columns 0..=i into column i.
            for j in 0..i {
                if h[i][j].is_zero() {
                    continue;
                }
                if h[i][i].is_zero() {
                    col_swap(&mut h, &mut u, i, j);
                    continue;
                }
                let e = h[i][i].extended_gcd(&h[i][j]);
                // [s t; -b/g a/g] on columns (i, j) keeps u unimodular.
                let (g, s, t) = (e.gcd, e.x, e.y);
                let bi = &h[i][i] / &g;
                let bj = &h[i][j] / &g;
                for r in 0..n {
                    let new_i = &s * &h[r][i] + &t * &h[r][j];
                    let new_j = &bi * &h[r][j] - &bj * &h[r][i];
                    h[r][i] = new_i;
                    h[r][j] = new_j;
                    let new_i = &s * &u[r][i] + &t * &u[r][j];
                    let new_j = &bi * &u[r][j] - &bj * &u[r][i];
                    u[r][i] = new_i;
                    u[r][j] = new_j;
                }
            }
            if h[i][i].is_zero() {
                return Err(MatrixError::Singular);
            }
            if h[i][i].is_negative() {
                col_negate(&mut h, &mut u, i);
            }
            // Reduce the entries to the right of the pivot into [0, h[i][i]).
            for j in i + 1..n {
                let q = h[i][j].div_floor(&h[i][i]);
                if q.is_zero() {
                    continue;
                }
                for r in 0..n {
                    let s = &h[r][i] * &q;
                    h[r][j] -= s;
                    let s = &u[r][i] * &q;
                    u[r][j] -= s;
                }
            }
        }

        let h = ExactMatrix::from_bigint_rows(&h);
        let u = ExactMatrix::from_bigint_rows(&u);
        let det_abs = self.det()?.to_bigint().expect("integral det").abs();
        assert!(
            h.height() <= det_abs,
            "hnf entry bound violated: height {} > |det| {}",
            h.height(),
            det_abs
        );
        Ok((h, u))
    }

    /// Exact inverse (adjugate over determinant), or `Singular`.
    pub fn adjugate_inverse(&self) -> Result<ExactMatrix, MatrixError> {
        if !self.is_square() {
            return Err(MatrixError::NonSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        // Gauss-Jordan on [self | I] with exact rational pivots.
        let mut a: Vec<Vec<ExactScalar>> = (0..n)
            .map(|i| {
                let mut row: Vec<ExactScalar> = (0..n).map(|j| self[(i, j)].clone()).collect();
                for j in 0..n {
                    row.push(if i == j {
                        ExactScalar::one()
                    } else {
                        ExactScalar::zero()
                    });
                }
                row
            })
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .find(|&r| !a[r][col].is_zero())
                .ok_or(MatrixError::Singular)?;
            a.swap(col, pivot);
            let inv = a[col][col].recip().expect("nonzero pivot");
            for j in 0..2 * n {
                a[col][j] = &a[col][j] * &inv;
            }
            for r in 0..n {
                if r == col || a[r][col].is_zero() {
                    continue;
                }
                let f = a[r][col].clone();
                for j in 0..2 * n {
                    let s = &f * &a[col][j];
                    a[r][j] = &a[r][j] - &s;
                }
            }
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in &a {
            entries.extend(row[n..].iter().cloned());
        }
        Ok(ExactMatrix::new(n, n, entries))
    }

    /// Serializes to the shared text format: a `rows cols` header line, then
    /// one line per row of `p` or `p/q` entries.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|j| self[(i, j)].to_string()).collect();
            s.push_str(&row.join(" "));
            s.push('\n');
        }
        s
    }

    /// Parses the text format produced by [`ExactMatrix::to_text`].
    pub fn from_text(s: &str) -> Result<ExactMatrix, MatrixError> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| MatrixError::Parse("empty input".into()))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(MatrixError::Parse(format!("bad header {header:?}")));
        }
        let rows: usize = dims[0]
            .parse()
            .map_err(|e| MatrixError::Parse(format!("bad rows: {e}")))?;
        let cols: usize = dims[1]
            .parse()
            .map_err(|e| MatrixError::Parse(format!("bad cols: {e}")))?;
        let mut entries = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| MatrixError::Parse("missing row".into()))?;
            let row: Vec<&str> = line.split_whitespace().collect();
            if row.len() != cols {
                return Err(MatrixError::Parse(format!(
                    "expected {cols} entries, got {}",
                    row.len()
                )));
            }
            for e in row {
                entries.push(e.parse().map_err(MatrixError::Parse)?);
            }
        }
        Ok(ExactMatrix::new(rows, cols, entries))
    }
}

impl std::ops::Index<(usize, usize)> for ExactMatrix {
    type Output = ExactScalar;
    fn index(&self, (i, j): (usize, usize)) -> &ExactScalar {
        assert!(i < self.rows && j < self.cols, "index out of range");
        &self.entries[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ExactMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut ExactScalar {
        assert!(i < self.rows && j < self.cols, "index out of range");
        &mut self.entries[i * self.cols + j]
    }
}

impl fmt::Display for ExactMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

fn col_swap(h: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], a: usize, b: usize) {
    for r in 0..h.len() {
        h[r].swap(a, b);
        u[r].swap(a, b);
    }
    // A plain swap flips det(u); restore it by negating one column.
    col_negate(h, u, a);
}

fn col_negate(h: &mut [Vec<BigInt>], u: &mut [Vec<BigInt>], c: usize) {
    for r in 0..h.len() {
        let x = -h[r][c].clone();
        h[r][c] = x;
        let x = -u[r][c].clone();
        u[r][c] = x;
    }
}

/// Fraction-free Bareiss determinant of an integer matrix. Consumes `a`.
fn bareiss_det(a: &mut [Vec<BigInt>]) -> BigInt {
    let n = a.len();
    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                // Exact division by the previous pivot: Bareiss' identity.
                a[i][j] = num / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    if sign < 0 {
        -d
    } else {
        d
    }
}
