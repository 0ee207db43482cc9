//! Small helpers around `nalgebra_sparse` CSR matrices.

use nalgebra::DMatrix;
use nalgebra_sparse::{CooMatrix, CsrMatrix};

pub type Csr = CsrMatrix<f64>;

/// Builds a CSR matrix from triplets, summing duplicates and dropping exact zeros.
pub fn from_triplets(rows: usize, cols: usize, trip: &[(usize, usize, f64)]) -> Csr {
    let mut coo = CooMatrix::new(rows, cols);
    for &(i, j, v) in trip {
        coo.push(i, j, v);
    }
    prune(&CsrMatrix::from(&coo))
}

/// Removes stored entries that are exactly zero.
pub fn prune(a: &Csr) -> Csr {
    let mut coo = CooMatrix::new(a.nrows(), a.ncols());
    for (i, j, &v) in a.triplet_iter() {
        if v != 0.0 {
            coo.push(i, j, v);
        }
    }
    CsrMatrix::from(&coo)
}

pub fn zeros(rows: usize, cols: usize) -> Csr {
    CsrMatrix::zeros(rows, cols)
}

pub fn identity(n: usize) -> Csr {
    CsrMatrix::identity(n)
}

/// Rows of the identity picked by `idx`, scaled by `sign`.
pub fn selector(n: usize, idx: &[usize], sign: f64) -> Csr {
    let t: Vec<_> = idx.iter().enumerate().map(|(r, &c)| (r, c, sign)).collect();
    from_triplets(idx.len(), n, &t)
}

pub fn diag(d: &[f64]) -> Csr {
    let t: Vec<_> = d.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
    from_triplets(d.len(), d.len(), &t)
}

pub fn mul(a: &Csr, b: &Csr) -> Csr {
    prune(&(a * b))
}

pub fn add(a: &Csr, b: &Csr) -> Csr {
    prune(&(a + b))
}

pub fn sub(a: &Csr, b: &Csr) -> Csr {
    prune(&(a - b))
}

pub fn scale(a: &Csr, s: f64) -> Csr {
    prune(&(a * s))
}

pub fn transpose(a: &Csr) -> Csr {
    a.transpose()
}

/// Stacks matrices with equal column counts.
pub fn vstack(blocks: &[&Csr]) -> Csr {
    let cols = blocks.first().map_or(0, |b| b.ncols());
    let mut trip = Vec::new();
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.ncols(), cols, "vstack column mismatch");
        trip.extend(b.triplet_iter().map(|(i, j, &v)| (i + off, j, v)));
        off += b.nrows();
    }
    from_triplets(off, cols, &trip)
}

/// Assembles a 2x2 block matrix; `None` blocks are zero.
pub fn block2(
    sizes_r: [usize; 2],
    sizes_c: [usize; 2],
    blocks: [[Option<&Csr>; 2]; 2],
) -> Csr {
    let mut trip = Vec::new();
    let ro = [0, sizes_r[0]];
    let co = [0, sizes_c[0]];
    for bi in 0..2 {
        for bj in 0..2 {
            if let Some(b) = blocks[bi][bj] {
                assert_eq!((b.nrows(), b.ncols()), (sizes_r[bi], sizes_c[bj]), "block size");
                trip.extend(b.triplet_iter().map(|(i, j, &v)| (i + ro[bi], j + co[bj], v)));
            }
        }
    }
    from_triplets(sizes_r[0] + sizes_r[1], sizes_c[0] + sizes_c[1], &trip)
}

/// Sub-block `[r0, r0+nr) x [c0, c0+nc)`.
pub fn slice(a: &Csr, r0: usize, nr: usize, c0: usize, nc: usize) -> Csr {
    let t: Vec<_> = a
        .triplet_iter()
        .filter(|(i, j, _)| *i >= r0 && *i < r0 + nr && *j >= c0 && *j < c0 + nc)
        .map(|(i, j, &v)| (i - r0, j - c0, v))
        .collect();
    from_triplets(nr, nc, &t)
}

pub fn to_dense(a: &Csr) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(a.nrows(), a.ncols());
    for (i, j, &v) in a.triplet_iter() {
        d[(i, j)] += v;
    }
    d
}

pub fn from_dense(d: &DMatrix<f64>) -> Csr {
    let mut t = Vec::new();
    for j in 0..d.ncols() {
        for i in 0..d.nrows() {
            if d[(i, j)] != 0.0 {
                t.push((i, j, d[(i, j)]));
            }
        }
    }
    from_triplets(d.nrows(), d.ncols(), &t)
}

/// Largest absolute stored value (0 for an empty matrix).
pub fn max_abs(a: &Csr) -> f64 {
    a.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Max-abs of `a - b`.
pub fn max_abs_diff(a: &Csr, b: &Csr) -> f64 {
    max_abs(&(a - b))
}

/// Numerical rank via singular values, relative tolerance.
pub fn rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    sv.iter().filter(|&&s| s > rel_tol * smax.max(1.0)).count()
}

/// Checks that every row and column holds exactly one entry equal to +-1.
pub fn is_signed_permutation(a: &Csr) -> bool {
    if a.nrows() != a.ncols() {
        return false;
    }
    let mut col_hits = vec![0usize; a.ncols()];
    for row in a.row_iter() {
        let vals: Vec<_> = row.values().iter().filter(|v| **v != 0.0).collect();
        if vals.len() != 1 || (vals[0].abs() - 1.0).abs() > 0.0 {
            return false;
        }
        for (&c, &v) in row.col_indices().iter().zip(row.values()) {
            if v != 0.0 {
                col_hits[c] += 1;
            }
        }
    }
    col_hits.iter().all(|&c| c == 1)
}

/// Matrix-vector product into a dense vector.
pub fn matvec(a: &Csr, x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; a.nrows()];
    for (i, row) in a.row_iter().enumerate() {
        y[i] = row.col_indices().iter().zip(row.values()).map(|(&j, &v)| v * x[j]).sum();
    }
    y
}
