use std::fmt::Write as _;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::FeatureError;

/// Compressed sparse row matrix of `f64`. Column indices within a row are
/// strictly increasing and explicit zeros are never stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseMatrix {
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

/// Borrowed view of one sparse row.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl<'a> RowView<'a> {
    pub fn get(&self, col: usize) -> f64 {
        match self.indices.binary_search(&(col as u32)) {
            Ok(k) => self.values[k],
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.indices.iter().map(|&c| c as usize).zip(self.values.iter().copied())
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(c, v)| v * dense[c]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Squared Euclidean distance between two sparse rows, by merge.
    pub fn dist_sq(&self, other: &RowView<'_>) -> f64 {
        let (mut i, mut j, mut acc) = (0, 0, 0.0);
        while i < self.indices.len() || j < other.indices.len() {
            let a = self.indices.get(i).copied().unwrap_or(u32::MAX);
            let b = other.indices.get(j).copied().unwrap_or(u32::MAX);
            let d = if a == b {
                let d = self.values[i] - other.values[j];
                i += 1;
                j += 1;
                d
            } else if a < b {
                i += 1;
                self.values[i - 1]
            } else {
                j += 1;
                other.values[j - 1]
            };
            acc += d * d;
        }
        acc
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

impl SparseMatrix {
    pub fn empty(n_cols: usize) -> Self {
        SparseMatrix { n_cols, indptr: vec![0], indices: Vec::new(), values: Vec::new() }
    }

    /// Build from per-row `(column, value)` lists; entries are sorted, zeros dropped.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut m = SparseMatrix::empty(n_cols);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                assert!((c as usize) < n_cols, "column {c} out of range for {n_cols} columns");
                if v != 0.0 {
                    if m.indices.len() > *m.indptr.last().unwrap() && *m.indices.last().unwrap() == c {
                        *m.values.last_mut().unwrap() += v;
                        continue;
                    }
                    m.indices.push(c);
                    m.values.push(v);
                }
            }
            m.indptr.push(m.indices.len());
        }
        m
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n_cols = rows.first().map_or(0, Vec::len);
        SparseMatrix::from_rows(
            n_cols,
            rows.iter()
                .map(|r| {
                    assert_eq!(r.len(), n_cols, "ragged dense input");
                    r.iter().enumerate().map(|(c, &v)| (c as u32, v)).collect()
                })
                .collect(),
        )
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> RowView<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        RowView { indices: &self.indices[a..b], values: &self.values[a..b] }
    }

    pub fn rows(&self) -> impl Iterator<Item = RowView<'_>> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).get(j)
    }

    /// New matrix with the given rows in the given order (repeats allowed).
    pub fn select_rows(&self, rows: &[usize]) -> SparseMatrix {
        let mut m = SparseMatrix::empty(self.n_cols);
        for &r in rows {
            let v = self.row(r);
            m.indices.extend_from_slice(v.indices);
            m.values.extend_from_slice(v.values);
            m.indptr.push(m.indices.len());
        }
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows()
            .map(|r| {
                let mut d = vec![0.0; self.n_cols];
                for (c, v) in r.iter() {
                    d[c] = v;
                }
                d
            })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Indicator matrix of entries `> 0`.
    pub fn binarized(&self) -> SparseMatrix {
        let rows = self
            .rows()
            .map(|r| r.iter().filter(|&(_, v)| v > 0.0).map(|(c, _)| (c as u32, 1.0)).collect())
            .collect();
        SparseMatrix::from_rows(self.n_cols, rows)
    }

    /// Triplet text: `rows cols nnz` header, then `row col weight` per entry.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut s = String::new();
        writeln!(s, "{} {} {}", self.n_rows(), self.n_cols, self.nnz()).unwrap();
        for (i, row) in self.rows().enumerate() {
            for (c, v) in row.iter() {
                writeln!(s, "{i} {c} {v}").unwrap();
            }
        }
        out.write_all(s.as_bytes())
    }

    pub fn read_triplets<R: BufRead>(input: R) -> Result<SparseMatrix, FeatureError> {
        let fmt = |line: usize, message: &str| FeatureError::Format { line, message: message.into() };
        let mut lines = input.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| fmt(1, "missing header"))?;
        let header = header?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| fmt(1, "header must be `rows cols nnz`")))
            .collect::<Result<_, _>>()?;
        let [n_rows, n_cols, nnz] = nums[..] else { return Err(fmt(1, "header must be `rows cols nnz`")) };
        let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n_rows];
        let mut count = 0;
        for (i, line) in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let bad = || fmt(i + 1, "expected `row col weight`");
            let [r, c, w] = parts[..] else { return Err(bad()) };
            let (r, c, w): (usize, usize, f64) =
                (r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?, w.parse().map_err(|_| bad())?);
            if r >= n_rows || c >= n_cols {
                return Err(fmt(i + 1, "index out of range"));
            }
            rows[r].push((c as u32, w));
            count += 1;
        }
        if count != nnz {
            return Err(fmt(1, &format!("header declares {nnz} entries, found {count}")));
        }
        Ok(SparseMatrix::from_rows(n_cols, rows))
    }
}

/// A sparse matrix whose rows are tied to corpus record ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub matrix: SparseMatrix,
    pub row_ids: Vec<String>,
}
