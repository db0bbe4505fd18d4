//! Compressed sparse column matrices with full (both-triangle) storage.
//!
//! Indices are stored as `u32`, which halves the index memory of the large
//! 3D systems; row indices within a column are strictly increasing.

use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};

/// Square sparse matrix in CSC format.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    col_ptr: Vec<u32>,
    row_idx: Vec<u32>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Zero matrix with the given pattern. Row indices of each column must be
    /// strictly increasing and below `n`.
    pub fn from_pattern(n: usize, col_ptr: Vec<u32>, row_idx: Vec<u32>) -> Self {
        assert_eq!(col_ptr.len(), n + 1, "column pointer length must be n + 1");
        assert_eq!(*col_ptr.last().expect("non-empty") as usize, row_idx.len());
        debug_assert!((0..n).all(|j| {
            let r = &row_idx[col_ptr[j] as usize..col_ptr[j + 1] as usize];
            r.windows(2).all(|w| w[0] < w[1]) && r.iter().all(|&i| (i as usize) < n)
        }));
        let nnz = row_idx.len();
        Self {
            n,
            col_ptr,
            row_idx,
            values: vec![0.0; nnz],
        }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}×{n}");
            cols[j].push((i, v));
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0u32);
        for col in &mut cols {
            col.sort_by_key(|e| e.0);
            for &(i, v) in col.iter() {
                if row_idx.len() > *col_ptr.last().expect("non-empty") as usize
                    && *row_idx.last().expect("non-empty") == i as u32
                {
                    *values.last_mut().expect("non-empty") += v;
                } else {
                    row_idx.push(i as u32);
                    values.push(v);
                }
            }
            col_ptr.push(to_u32(row_idx.len()));
        }
        Self {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    /// The `n × n` identity.
    pub fn identity(n: usize) -> Self {
        let triplets: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, &triplets)
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    pub fn col_ptr(&self) -> &[u32] {
        &self.col_ptr
    }

    pub fn row_idx(&self) -> &[u32] {
        &self.row_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Storage range of column `j`.
    pub fn col_range(&self, j: usize) -> std::ops::Range<usize> {
        self.col_ptr[j] as usize..self.col_ptr[j + 1] as usize
    }

    /// Storage position of entry `(i, j)` if it is in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let r = self.col_range(j);
        self.row_idx[r.clone()]
            .binary_search(&(i as u32))
            .ok()
            .map(|k| r.start + k)
    }

    /// Entry `(i, j)` (zero outside the pattern).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// `K x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for k in self.col_range(j) {
                y[self.row_idx[k] as usize] += self.values[k] * xj;
            }
        }
        y
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest `|K_ij − K_ji|` over the stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.n {
            for k in self.col_range(j) {
                let i = self.row_idx[k] as usize;
                if i < j {
                    continue;
                }
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Whether the pattern contains `(j, i)` for every stored `(i, j)`.
    pub fn is_structurally_symmetric(&self) -> bool {
        (0..self.n).all(|j| {
            self.col_range(j)
                .all(|k| self.position(j, self.row_idx[k] as usize).is_some())
        })
    }

    /// Principal submatrix on the sorted index set `keep`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> SparseMatrix {
        debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
        let mut map = vec![u32::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new as u32;
        }
        let mut col_ptr = Vec::with_capacity(keep.len() + 1);
        col_ptr.push(0u32);
        let count: usize = keep
            .iter()
            .map(|&j| {
                self.col_range(j)
                    .filter(|&k| map[self.row_idx[k] as usize] != u32::MAX)
                    .count()
            })
            .sum();
        let mut row_idx = Vec::with_capacity(count);
        let mut values = Vec::with_capacity(count);
        for &j in keep {
            for k in self.col_range(j) {
                let r = map[self.row_idx[k] as usize];
                if r != u32::MAX {
                    row_idx.push(r);
                    values.push(self.values[k]);
                }
            }
            col_ptr.push(to_u32(row_idx.len()));
        }
        SparseMatrix {
            n: keep.len(),
            col_ptr,
            row_idx,
            values,
        }
    }

    /// Dense row-major copy (for small matrices).
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for j in 0..self.n {
            for k in self.col_range(j) {
                d[self.row_idx[k] as usize][j] = self.values[k];
            }
        }
        d
    }

    /// Zero-copy view for the sparse factorizations.
    pub fn as_faer(&self) -> SparseColMatRef<'_, u32, f64> {
        // SAFETY: every constructor keeps column pointers non-decreasing and
        // row indices sorted, unique and in range.
        let symbolic = unsafe {
            SymbolicSparseColMatRef::new_unchecked(self.n, self.n, &self.col_ptr, None, &self.row_idx)
        };
        SparseColMatRef::new(symbolic, &self.values)
    }
}

fn to_u32(v: usize) -> u32 {
    u32::try_from(v).expect("sparse matrix exceeds u32 index range")
}
