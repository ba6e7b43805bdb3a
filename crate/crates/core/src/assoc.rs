//! Association costs (IoU, appearance, fused) and minimum-cost linear
//! assignment.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};

/// Cost of a pair that must never be matched.
pub const FORBIDDEN: f64 = f64::INFINITY;

/// Returns `v / |v|`, or `None` for a zero or non-finite vector. Vectors
/// whose norm is already 1 to within rounding are returned unchanged.
pub fn normalize(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return None;
    }
    if (norm - 1.0).abs() <= 1e-14 {
        return Some(v.to_vec());
    }
    Some(v.iter().map(|x| x / norm).collect())
}

/// Unit-norm appearance feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalizes `values`; fails on zero or non-finite input.
    pub fn new(values: &[f64]) -> Result<Self> {
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("embedding"));
        }
        normalize(values)
            .map(Embedding)
            .ok_or_else(|| Error::Config("embedding has zero norm".into()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `normalize(alpha * self + (1 - alpha) * other)`; keeps `self` if the
    /// blend cancels out.
    pub fn smoothed(&self, other: &Embedding, alpha: f64) -> Embedding {
        let mixed: Vec<f64> = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| alpha * a + (1.0 - alpha) * b)
            .collect();
        normalize(&mixed)
            .map(Embedding)
            .unwrap_or_else(|| self.clone())
    }
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb)
}

/// Dense row-major cost matrix: rows are tracks, columns detections.
#[derive(Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl fmt::Debug for CostMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.rows).map(|r| self.row(r)).collect();
        f.debug_struct("CostMatrix")
            .field("shape", &(self.rows, self.cols))
            .field("rows", &rows)
            .finish()
    }
}

impl CostMatrix {
    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        CostMatrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        CostMatrix { rows, cols, data }
    }

    /// Builds from nested rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::ShapeMismatch {
                left: (rows.len(), cols),
                right: (1, bad.len()),
            });
        }
        Ok(CostMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0 || self.cols == 0
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn forbid(&mut self, r: usize, c: usize) {
        self.set(r, c, FORBIDDEN);
    }

    /// Keeps only the listed columns, in the given order.
    pub fn select_cols(&self, cols: &[usize]) -> CostMatrix {
        CostMatrix::from_fn(self.rows, cols.len(), |r, c| self.get(r, cols[c]))
    }

    fn check_same_shape(&self, other: &CostMatrix) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }
}

/// `1 - IoU` between predicted track boxes (rows) and detections (columns).
pub fn iou_cost(tracks: &[BoundingBox], dets: &[BoundingBox]) -> CostMatrix {
    CostMatrix::from_fn(tracks.len(), dets.len(), |r, c| {
        1.0 - iou(&tracks[r], &dets[c])
    })
}

/// Halved cosine distance, `(1 - cos) / 2`, clipped to `[0, 1]`.
pub fn embedding_cost<A: AsRef<[f64]>, B: AsRef<[f64]>>(
    track_feats: &[A],
    det_feats: &[B],
) -> Result<CostMatrix> {
    let dims = track_feats
        .iter()
        .map(|f| f.as_ref().len())
        .chain(det_feats.iter().map(|f| f.as_ref().len()));
    let mut expected = None;
    for d in dims {
        match expected {
            None => expected = Some(d),
            Some(e) if e != d => return Err(Error::DimensionMismatch { left: e, right: d }),
            _ => {}
        }
    }
    Ok(CostMatrix::from_fn(
        track_feats.len(),
        det_feats.len(),
        |r, c| {
            let cos = cosine_similarity(track_feats[r].as_ref(), det_feats[c].as_ref());
            ((1.0 - cos) / 2.0).clamp(0.0, 1.0)
        },
    ))
}

/// Appearance costs are replaced by 1 where the pair is spatially far
/// (`iou_c > proximity_thresh`) or visually dissimilar
/// (`emb_c > appearance_thresh`); the fused cost is the smaller of the IoU
/// cost and the gated appearance cost.
pub fn fuse_costs(
    iou_c: &CostMatrix,
    emb_c: &CostMatrix,
    proximity_thresh: f64,
    appearance_thresh: f64,
) -> Result<CostMatrix> {
    iou_c.check_same_shape(emb_c)?;
    Ok(CostMatrix::from_fn(iou_c.rows, iou_c.cols, |r, c| {
        let (i, e) = (iou_c.get(r, c), emb_c.get(r, c));
        let gated = if i > proximity_thresh || e > appearance_thresh {
            1.0
        } else {
            e
        };
        i.min(gated)
    }))
}

/// Result of [`linear_assignment`]; all lists are sorted ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    pub matches: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
}

/// Minimum-cost assignment of rows to columns, then pairs costing more than
/// `match_thresh` are dropped and reported unmatched.
pub fn linear_assignment(cost: &CostMatrix, match_thresh: f64) -> Assignment {
    let (n, m) = cost.shape();
    let mut out = Assignment::default();
    let mut col_used = vec![false; m];
    for (r, col) in solve_assignment(cost).into_iter().enumerate() {
        match col {
            Some(c) if cost.get(r, c) <= match_thresh => {
                out.matches.push((r, c));
                col_used[c] = true;
            }
            _ => out.unmatched_rows.push(r),
        }
    }
    out.unmatched_cols = (0..m).filter(|c| !col_used[*c]).collect();
    debug_assert_eq!(out.matches.len() + out.unmatched_rows.len(), n);
    out
}

/// Optimal row-to-column assignment over the whole matrix.
///
/// Every row is assigned when `rows <= cols` (and vice versa), using
/// forbidden pairs only when no feasible alternative exists: among all
/// assignments, those with fewest forbidden pairs win, then lowest total
/// cost. Forbidden pairs are returned as `None`. Among equal-cost optima
/// the lexicographically smallest column sequence (by row) is chosen.
pub fn solve_assignment(cost: &CostMatrix) -> Vec<Option<usize>> {
    let (n, m) = cost.shape();
    if n == 0 || m == 0 {
        return vec![None; n];
    }
    let size = n.max(m);
    let max_finite = cost
        .data
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0f64, |a, v| a.max(v.abs()));
    // larger than any sum of finite entries, so forbidden pairs are a last resort
    let big = (max_finite + 1.0) * (size as f64 + 1.0);
    let mut square = vec![0.0; size * size];
    for r in 0..n {
        for c in 0..m {
            let v = cost.get(r, c);
            square[r * size + c] = if v.is_finite() { v } else { big };
        }
    }
    let (row_to_col, u, v) = hungarian(&square, size);
    let eps = 1e-9 * big;
    let tight = |r: usize, c: usize| square[r * size + c] - u[r] - v[c] <= eps;
    let row_to_col = lexicographic_refine(size, row_to_col, tight);

    (0..n)
        .map(|r| {
            let c = row_to_col[r];
            (c < m && cost.get(r, c).is_finite()).then_some(c)
        })
        .collect()
}

/// Shortest augmenting path Hungarian method on a square matrix. Returns
/// the assignment and dual potentials with `c[r][j] - u[r] - v[j] >= 0`,
/// equality on assigned pairs.
fn hungarian(a: &[f64], n: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based internally; index 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = a[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0; n];
    for j in 1..=n {
        row_to_col[p[j] - 1] = j - 1;
    }
    (row_to_col, u[1..].to_vec(), v[1..].to_vec())
}

/// Walks rows in order and moves each to the smallest tight column that
/// still admits a perfect matching of the remaining rows on tight edges.
/// Every perfect matching on tight edges is optimal, so the total is kept.
fn lexicographic_refine(
    n: usize,
    mut row_to_col: Vec<usize>,
    tight: impl Fn(usize, usize) -> bool,
) -> Vec<usize> {
    let mut col_to_row = vec![0; n];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|r| (0..n).filter(|&c| tight(r, c)).collect())
        .collect();

    for r in 0..n {
        for &c in &adj[r] {
            if row_to_col[r] == c {
                break;
            }
            let holder = col_to_row[c];
            if holder < r {
                continue;
            }
            let saved = (row_to_col.clone(), col_to_row.clone());
            let freed = row_to_col[r];
            row_to_col[r] = c;
            col_to_row[c] = r;
            let mut visited = vec![false; n];
            visited[c] = true;
            if augment(
                holder,
                r,
                freed,
                &adj,
                &mut row_to_col,
                &mut col_to_row,
                &mut visited,
            ) {
                break;
            }
            (row_to_col, col_to_row) = saved;
        }
    }
    row_to_col
}

/// Kuhn-style search for an alternating path from `row` to the free column
/// `freed`, touching only rows after `locked`.
fn augment(
    row: usize,
    locked: usize,
    freed: usize,
    adj: &[Vec<usize>],
    row_to_col: &mut [usize],
    col_to_row: &mut [usize],
    visited: &mut [bool],
) -> bool {
    for &c in &adj[row] {
        if visited[c] {
            continue;
        }
        visited[c] = true;
        let owner = col_to_row[c];
        let available = if c == freed {
            true
        } else {
            owner > locked && augment(owner, locked, freed, adj, row_to_col, col_to_row, visited)
        };
        if available {
            row_to_col[row] = c;
            col_to_row[c] = row;
            return true;
        }
    }
    false
}
