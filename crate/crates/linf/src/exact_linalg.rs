//! Dense exact linear algebra over the rationals and cohomology of finite
//! cochain windows.

use std::fmt;

use num::{One, Signed, Zero};

use crate::Q;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LinalgError {
    #[error("degree {degree} needs neighbours outside the window [{lo}, {hi}]")]
    DegreeOutsideWindow { degree: i64, lo: i64, hi: i64 },
    #[error("differential out of degree {degree} has shape {got:?}, expected {expected:?}")]
    ShapeMismatch {
        degree: i64,
        got: (usize, usize),
        expected: (usize, usize),
    },
    #[error("d∘d is nonzero starting in degree {degree}")]
    NotAComplex { degree: i64 },
}

/// Row-major dense matrix of exact rationals.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Q>,
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{}", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(|q| q.to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    /// Builds a matrix from rows; every row must have length `cols`.
    pub fn from_rows(rows: Vec<Vec<Q>>, cols: usize) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged row");
            data.extend(r);
        }
        RationalMatrix {
            rows: n,
            cols,
            data,
        }
    }

    /// Builds a matrix whose columns are the given vectors of length `rows`.
    pub fn from_columns(columns: &[Vec<Q>], rows: usize) -> Self {
        let mut m = Self::zeros(rows, columns.len());
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged column");
            for (i, x) in c.iter().enumerate() {
                if !x.is_zero() {
                    m.set(i, j, x.clone());
                }
            }
        }
        m
    }

    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Q::from_integer(x.into())).collect())
                .collect(),
            cols,
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Q {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        self.data[r * self.cols + c] = v;
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: &Q) {
        let e = &mut self.data[r * self.cols + c];
        *e += v;
    }

    pub fn row(&self, r: usize) -> &[Q] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<Q> {
        (0..self.rows).map(|r| self.get(r, c).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let x = self.get(r, c);
                if !x.is_zero() {
                    t.set(c, r, x.clone());
                }
            }
        }
        t
    }

    pub fn mul(&self, other: &RationalMatrix) -> RationalMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch in product");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    let b = other.get(k, c);
                    if !b.is_zero() {
                        out.add_to(r, c, &(a * b));
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len(), "dimension mismatch in product");
        (0..self.rows)
            .map(|r| {
                let mut acc = Q::zero();
                for (a, b) in self.row(r).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * b;
                    }
                }
                acc
            })
            .collect()
    }

    /// Reduced row echelon form and the pivot column of each nonzero row.
    pub fn rref(&self) -> (RationalMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut lead = 0;
        for c in 0..m.cols {
            if lead == m.rows {
                break;
            }
            let Some(p) = (lead..m.rows).find(|&r| !m.get(r, c).is_zero()) else {
                continue;
            };
            m.swap_rows(lead, p);
            let inv = m.get(lead, c).recip();
            for j in c..m.cols {
                let x = m.get(lead, j);
                if !x.is_zero() {
                    let y = x * &inv;
                    m.set(lead, j, y);
                }
            }
            for r in 0..m.rows {
                if r == lead || m.get(r, c).is_zero() {
                    continue;
                }
                let f = m.get(r, c).clone();
                for j in c..m.cols {
                    let x = m.get(lead, j);
                    if !x.is_zero() {
                        let y = x * &f;
                        m.data[r * m.cols + j] -= y;
                    }
                }
            }
            pivots.push(c);
            lead += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// One solution of `self * x = b`, or `None` if the system is inconsistent.
    pub fn solve(&self, b: &[Q]) -> Option<Vec<Q>> {
        assert_eq!(b.len(), self.rows, "right-hand side has wrong length");
        let mut aug = Self::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, self.cols, b[r].clone());
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Q::zero(); self.cols];
        for (r, &p) in pivots.iter().enumerate() {
            x[p] = red.get(r, self.cols).clone();
        }
        Some(x)
    }
}

/// Rank together with a kernel basis; each basis vector has a 1 in one free
/// column and zeros in the other free columns.
pub fn rank_kernel(m: &RationalMatrix) -> (usize, Vec<Vec<Q>>) {
    let (red, pivots) = m.rref();
    let mut is_pivot = vec![false; m.cols];
    for &p in &pivots {
        is_pivot[p] = true;
    }
    let mut kernel = Vec::new();
    for free in (0..m.cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Q::zero(); m.cols];
        v[free] = Q::one();
        for (r, &p) in pivots.iter().enumerate() {
            let x = red.get(r, free);
            if !x.is_zero() {
                v[p] = -x.clone();
            }
        }
        kernel.push(v);
    }
    (pivots.len(), kernel)
}

/// Incrementally maintained echelon basis of a subspace of `Q^n`.
///
/// Rows are kept fully reduced against each other, so membership and
/// coordinates are cheap. `original` keeps the inserted vectors in insertion
/// order, which is the deterministic choice of representatives used
/// throughout the crate.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    dim: usize,
    rows: Vec<(usize, Vec<Q>)>,
    original: Vec<Vec<Q>>,
}

impl EchelonBasis {
    pub fn new(dim: usize) -> Self {
        EchelonBasis {
            dim,
            rows: Vec::new(),
            original: Vec::new(),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Vectors accepted so far, in insertion order.
    pub fn vectors(&self) -> &[Vec<Q>] {
        &self.original
    }

    /// Residual of `v` after reduction against the basis.
    pub fn reduce(&self, v: &[Q]) -> Vec<Q> {
        let mut w = v.to_vec();
        for (p, row) in &self.rows {
            if w[*p].is_zero() {
                continue;
            }
            let f = w[*p].clone();
            for (a, b) in w.iter_mut().zip(row) {
                if !b.is_zero() {
                    *a -= &f * b;
                }
            }
        }
        w
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.reduce(v).iter().all(Zero::is_zero)
    }

    /// Adds `v` if it is independent of the current span; reports whether it was.
    pub fn insert(&mut self, v: &[Q]) -> bool {
        assert_eq!(v.len(), self.dim, "vector has wrong length");
        let mut w = self.reduce(v);
        let Some(p) = w.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = w[p].recip();
        for x in w.iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        for (_, row) in self.rows.iter_mut() {
            if row[p].is_zero() {
                continue;
            }
            let f = row[p].clone();
            for (a, b) in row.iter_mut().zip(&w) {
                if !b.is_zero() {
                    *a -= &f * b;
                }
            }
        }
        self.rows.push((p, w));
        self.original.push(v.to_vec());
        true
    }

    /// Coordinates of `v` in terms of `vectors()`, if `v` lies in the span.
    pub fn coordinates(&self, v: &[Q]) -> Option<Vec<Q>> {
        if self.original.is_empty() {
            return v.iter().all(Zero::is_zero).then(Vec::new);
        }
        RationalMatrix::from_columns(&self.original, self.dim).solve(v)
    }

    /// Sorted pivot columns of the echelon form.
    pub fn pivots(&self) -> Vec<usize> {
        let mut p: Vec<usize> = self.rows.iter().map(|(p, _)| *p).collect();
        p.sort_unstable();
        p
    }
}

/// A finite slice `C^lo → … → C^hi` of a cochain complex.
#[derive(Debug, Clone, PartialEq)]
pub struct CochainWindow {
    lo: i64,
    labels: Vec<Vec<String>>,
    diffs: Vec<RationalMatrix>,
}

/// Cohomology in one degree of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct CohomologyGroup {
    pub degree: i64,
    pub dim: usize,
    /// Cocycles independent modulo coboundaries, chosen by echelon position.
    pub representatives: Vec<Vec<Q>>,
    /// Spanning set of the coboundaries in this degree.
    pub boundaries: Vec<Vec<Q>>,
    /// Set when a neighbouring differential was outside the window.
    pub truncation_suspect: bool,
}

impl CohomologyGroup {
    /// Coordinates of the class of the cocycle `v` in the representative basis.
    /// Returns `None` when `v` is not a combination of cocycles.
    pub fn class_of(&self, v: &[Q]) -> Option<Vec<Q>> {
        let n = v.len();
        let mut cols = self.representatives.clone();
        cols.extend(self.boundaries.iter().cloned());
        if cols.is_empty() {
            return v.iter().all(Zero::is_zero).then(Vec::new);
        }
        let x = RationalMatrix::from_columns(&cols, n).solve(v)?;
        Some(x[..self.representatives.len()].to_vec())
    }

    pub fn is_coboundary(&self, v: &[Q]) -> bool {
        match self.class_of(v) {
            Some(c) => c.iter().all(Zero::is_zero),
            None => false,
        }
    }
}

impl CochainWindow {
    /// `diffs[i]` is the differential from degree `lo + i` to `lo + i + 1`,
    /// with `labels[i + 1].len()` rows and `labels[i].len()` columns.
    pub fn new(
        lo: i64,
        labels: Vec<Vec<String>>,
        diffs: Vec<RationalMatrix>,
    ) -> Result<Self, LinalgError> {
        assert!(!labels.is_empty(), "a window needs at least one degree");
        assert_eq!(diffs.len() + 1, labels.len(), "one differential per gap");
        for (i, d) in diffs.iter().enumerate() {
            let expected = (labels[i + 1].len(), labels[i].len());
            if (d.rows(), d.cols()) != expected {
                return Err(LinalgError::ShapeMismatch {
                    degree: lo + i as i64,
                    got: (d.rows(), d.cols()),
                    expected,
                });
            }
        }
        for i in 1..diffs.len() {
            if !diffs[i].mul(&diffs[i - 1]).is_zero() {
                return Err(LinalgError::NotAComplex {
                    degree: lo + i as i64 - 1,
                });
            }
        }
        Ok(CochainWindow { lo, labels, diffs })
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.labels.len() as i64 - 1
    }

    pub fn labels(&self, k: i64) -> &[String] {
        &self.labels[(k - self.lo) as usize]
    }

    pub fn dim(&self, k: i64) -> usize {
        if k < self.lo || k > self.hi() {
            0
        } else {
            self.labels(k).len()
        }
    }

    /// Differential out of degree `k`, if both ends lie in the window.
    pub fn differential(&self, k: i64) -> Option<&RationalMatrix> {
        if k < self.lo || k >= self.hi() {
            None
        } else {
            Some(&self.diffs[(k - self.lo) as usize])
        }
    }

    /// Cohomology in degree `k`. At the two ends of the window the missing
    /// differential is taken to be zero; this is refused unless
    /// `allow_boundary` is set, in which case the answer is flagged.
    pub fn cohomology(&self, k: i64, allow_boundary: bool) -> Result<CohomologyGroup, LinalgError> {
        let (lo, hi) = (self.lo, self.hi());
        if k < lo || k > hi {
            return Err(LinalgError::DegreeOutsideWindow { degree: k, lo, hi });
        }
        let boundary = k == lo || k == hi;
        if boundary && !allow_boundary {
            return Err(LinalgError::DegreeOutsideWindow { degree: k, lo, hi });
        }
        let n = self.dim(k);
        let kernel = match self.differential(k) {
            Some(d) => rank_kernel(d).1,
            None => (0..n).map(|i| unit(n, i)).collect(),
        };
        let mut image = EchelonBasis::new(n);
        let mut boundaries = Vec::new();
        if let Some(d) = self.differential(k - 1) {
            for c in 0..d.cols() {
                let v = d.column(c);
                if image.insert(&v) {
                    boundaries.push(v);
                }
            }
        }
        let mut representatives = Vec::new();
        for z in kernel {
            if image.insert(&z) {
                representatives.push(z);
            }
        }
        Ok(CohomologyGroup {
            degree: k,
            dim: representatives.len(),
            representatives,
            boundaries,
            truncation_suspect: boundary,
        })
    }

    /// Conjugates the window by invertible matrices `p[k]` (new basis = p⁻¹ old).
    pub fn change_basis(&self, p: &[RationalMatrix], p_inv: &[RationalMatrix]) -> Self {
        let diffs = self
            .diffs
            .iter()
            .enumerate()
            .map(|(i, d)| p_inv[i + 1].mul(d).mul(&p[i]))
            .collect();
        CochainWindow {
            lo: self.lo,
            labels: self.labels.clone(),
            diffs,
        }
    }
}

pub fn unit(n: usize, i: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); n];
    v[i] = Q::one();
    v
}

pub fn is_zero_vec(v: &[Q]) -> bool {
    v.iter().all(Zero::is_zero)
}

/// Scales a vector so that its first nonzero entry is positive and all
/// entries are coprime integers; leaves zero vectors alone.
pub fn primitive(v: &[Q]) -> Vec<Q> {
    use num::Integer;
    let Some(first) = v.iter().find(|x| !x.is_zero()) else {
        return v.to_vec();
    };
    let mut den = num::BigInt::one();
    for x in v {
        den = den.lcm(x.denom());
    }
    let mut num_gcd = num::BigInt::zero();
    for x in v {
        let n = x.numer() * (&den / x.denom());
        num_gcd = num_gcd.gcd(&n);
    }
    let mut scale = Q::new(den, num_gcd);
    if first.is_negative() {
        scale = -scale;
    }
    v.iter().map(|x| x * &scale).collect()
}
