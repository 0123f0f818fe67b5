//! Dense linear algebra over a prime field F_p.
//!
//! Entries are stored reduced into `0..p`. Every routine is exact; there is no pivoting
//! heuristic beyond "leftmost nonzero column, lowest row".

use crate::error::{Error, Result};

/// Multiplicative inverse modulo a prime `p`, for `a != 0 mod p`.
pub fn inv_mod(a: u32, p: u32) -> u32 {
    let a = a % p;
    assert!(a != 0, "zero has no inverse mod {p}");
    pow_mod(a, p - 2, p)
}

pub fn pow_mod(base: u32, mut exp: u32, p: u32) -> u32 {
    let mut acc: u64 = 1;
    let m = p as u64;
    let mut b = (base % p) as u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u32
}

#[inline]
fn axpy(dst: &mut [u32], factor: u32, src: &[u32], p: u32) {
    // dst -= factor * src
    if factor == 0 {
        return;
    }
    let m = p as u64;
    let neg = (m - factor as u64) % m;
    for (d, s) in dst.iter_mut().zip(src) {
        if *s != 0 {
            *d = ((*d as u64 + neg * *s as u64) % m) as u32;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlMatrix {
    p: u32,
    rows: usize,
    cols: usize,
    data: Vec<u32>,
}

impl FlMatrix {
    pub fn zeros(p: u32, rows: usize, cols: usize) -> Self {
        FlMatrix {
            p,
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn identity(p: u32, n: usize) -> Self {
        let mut m = Self::zeros(p, n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    /// Builds a matrix from rows; all rows must share one length.
    pub fn from_rows(p: u32, rows: &[Vec<u32>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::Dimension {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend(r.iter().map(|x| x % p));
        }
        Ok(FlMatrix {
            p,
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds the matrix whose columns are the given vectors.
    pub fn from_cols(p: u32, nrows: usize, cols: &[Vec<u32>]) -> Result<Self> {
        let mut m = Self::zeros(p, nrows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            if c.len() != nrows {
                return Err(Error::Dimension {
                    expected: nrows,
                    got: c.len(),
                });
            }
            for (i, &x) in c.iter().enumerate() {
                m.set(i, j, x % p);
            }
        }
        Ok(m)
    }

    pub fn prime(&self) -> u32 {
        self.p
    }
    pub fn nrows(&self) -> usize {
        self.rows
    }
    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: u32) {
        self.data[i * self.cols + j] = v % self.p;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[u32]) -> Result<Vec<u32>> {
        if v.len() != self.cols {
            return Err(Error::Dimension {
                expected: self.cols,
                got: v.len(),
            });
        }
        let m = self.p as u64;
        Ok((0..self.rows)
            .map(|i| {
                let s = self
                    .row(i)
                    .iter()
                    .zip(v)
                    .fold(0u64, |acc, (a, b)| (acc + *a as u64 * *b as u64) % m);
                s as u32
            })
            .collect())
    }

    pub fn mul(&self, other: &FlMatrix) -> Result<FlMatrix> {
        if self.cols != other.rows {
            return Err(Error::Dimension {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = FlMatrix::zeros(self.p, self.rows, other.cols);
        let m = self.p as u64;
        for i in 0..self.rows {
            let mut acc = vec![0u64; other.cols];
            for k in 0..self.cols {
                let a = self.get(i, k) as u64;
                if a == 0 {
                    continue;
                }
                for (j, slot) in acc.iter_mut().enumerate() {
                    *slot = (*slot + a * other.get(k, j) as u64) % m;
                }
            }
            for (j, v) in acc.into_iter().enumerate() {
                out.set(i, j, v as u32);
            }
        }
        Ok(out)
    }

    /// Reduced row echelon form and the pivot column of each nonzero row.
    pub fn rref(&self) -> (FlMatrix, Vec<usize>) {
        let mut m = self.clone();
        let p = self.p;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(pr) = (r..m.rows).find(|&i| m.get(i, c) != 0) else {
                continue;
            };
            if pr != r {
                for j in 0..m.cols {
                    m.data.swap(pr * m.cols + j, r * m.cols + j);
                }
            }
            let inv = inv_mod(m.get(r, c), p);
            for j in 0..m.cols {
                let v = (m.get(r, j) as u64 * inv as u64 % p as u64) as u32;
                m.set(r, j, v);
            }
            let pivot_row: Vec<u32> = m.row(r).to_vec();
            for i in 0..m.rows {
                if i != r {
                    let f = m.get(i, c);
                    if f != 0 {
                        let cols = m.cols;
                        axpy(&mut m.data[i * cols..(i + 1) * cols], f, &pivot_row, p);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        let mut e = Echelon::new(self.p, self.cols);
        for i in 0..self.rows {
            e.insert(self.row(i).to_vec());
        }
        e.rank()
    }

    /// One solution of `self * x = b` with every free variable set to zero, or `None`.
    pub fn solve(&self, b: &[u32]) -> Result<Option<Vec<u32>>> {
        if b.len() != self.rows {
            return Err(Error::Dimension {
                expected: self.rows,
                got: b.len(),
            });
        }
        let mut aug = FlMatrix::zeros(self.p, self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j));
            }
            aug.set(i, self.cols, b[i]);
        }
        let (red, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return Ok(None);
        }
        let mut x = vec![0; self.cols];
        for (r, &c) in pivots.iter().enumerate() {
            x[c] = red.get(r, self.cols);
        }
        Ok(Some(x))
    }

    /// A basis of the right kernel, one vector per free column, in increasing column order.
    pub fn kernel_basis(&self) -> Vec<Vec<u32>> {
        let (red, pivots) = self.rref();
        let p = self.p;
        let mut is_pivot = vec![false; self.cols];
        for &c in &pivots {
            is_pivot[c] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![0; self.cols];
            v[free] = 1;
            for (r, &c) in pivots.iter().enumerate() {
                v[c] = (p - red.get(r, free)) % p;
            }
            basis.push(v);
        }
        basis
    }
}

/// Incrementally built semi-echelon basis of a subspace of F_p^n.
///
/// Invariant: each stored row has a 1 at its pivot and zeros at the pivots of all earlier rows.
#[derive(Clone, Debug)]
pub struct Echelon {
    p: u32,
    dim: usize,
    rows: Vec<Vec<u32>>,
    pivots: Vec<usize>,
}

impl Echelon {
    pub fn new(p: u32, dim: usize) -> Self {
        Echelon {
            p,
            dim,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Remainder of `v` after clearing every pivot; zero iff `v` lies in the span.
    pub fn reduce(&self, mut v: Vec<u32>) -> Vec<u32> {
        for (row, &c) in self.rows.iter().zip(&self.pivots) {
            let f = v[c];
            if f != 0 {
                axpy(&mut v, f, row, self.p);
            }
        }
        v
    }

    pub fn contains(&self, v: &[u32]) -> bool {
        self.reduce(v.to_vec()).iter().all(|&x| x == 0)
    }

    /// Adds `v` to the span; returns true when the rank grew.
    pub fn insert(&mut self, v: Vec<u32>) -> bool {
        debug_assert_eq!(v.len(), self.dim);
        let mut v = self.reduce(v);
        let Some(c) = v.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = inv_mod(v[c], self.p);
        let m = self.p as u64;
        for x in v.iter_mut() {
            *x = (*x as u64 * inv as u64 % m) as u32;
        }
        self.rows.push(v);
        self.pivots.push(c);
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(p: u32) -> impl Strategy<Value = FlMatrix> {
        (1usize..7, 1usize..7).prop_flat_map(move |(r, c)| {
            proptest::collection::vec(0..p, r * c)
                .prop_map(move |d| FlMatrix::from_rows(p, &d.chunks(c).map(|x| x.to_vec()).collect::<Vec<_>>()).unwrap())
        })
    }

    #[test]
    fn solve_rejects_wrong_length() {
        let m = FlMatrix::identity(3, 2);
        assert!(matches!(m.solve(&[1]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn solve_sets_free_variables_to_zero() {
        let m = FlMatrix::from_rows(5, &[vec![1, 2, 0]]).unwrap();
        assert_eq!(m.solve(&[3]).unwrap(), Some(vec![3, 0, 0]));
    }

    #[test]
    fn inconsistent_system_has_no_solution() {
        let m = FlMatrix::from_rows(3, &[vec![1, 1], vec![2, 2]]).unwrap();
        assert_eq!(m.solve(&[1, 1]).unwrap(), None);
    }

    proptest! {
        #[test]
        fn rank_nullity(m in mat(5)) {
            prop_assert_eq!(m.rank() + m.kernel_basis().len(), m.ncols());
        }

        #[test]
        fn kernel_vectors_vanish(m in mat(3)) {
            for v in m.kernel_basis() {
                prop_assert!(m.mul_vec(&v).unwrap().iter().all(|&x| x == 0));
            }
        }

        #[test]
        fn solve_reproduces_consistent_rhs(m in mat(7), seed in proptest::collection::vec(0u32..7, 7)) {
            let x: Vec<u32> = seed[..m.ncols()].to_vec();
            let b = m.mul_vec(&x).unwrap();
            let y = m.solve(&b).unwrap().expect("consistent by construction");
            prop_assert_eq!(m.mul_vec(&y).unwrap(), b);
        }

        #[test]
        fn echelon_rank_matches_rref(m in mat(3)) {
            prop_assert_eq!(m.rank(), m.rref().1.len());
        }
    }
}
