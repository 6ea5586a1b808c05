//! Sparse LU factorization of simplex bases.
//!
//! Left-looking factorization with partial pivoting (Gilbert-Peierls): each
//! basis column is solved against the already-built L by a sparse triangular
//! solve whose nonzero pattern comes from a depth-first reach over L's
//! graph, then the largest remaining entry is chosen as pivot. Columns can
//! be processed in any order; the solver passes them sorted by sparsity.
//!
//! L entries are stored with original row indices, U entries with the pivot
//! step of their row, which makes the forward/backward substitutions and
//! their transposes straightforward.

use alloc::vec::Vec;

const NONE: usize = usize::MAX;

/// Pivot threshold below which a column is declared singular.
const SINGULAR_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct LuFactors {
    m: usize,
    /// Unit lower triangle by step; entries (original row, value).
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Upper triangle by step; entries (pivot step of row, value), diag split off.
    u_cols: Vec<Vec<(usize, f64)>>,
    u_diag: Vec<f64>,
    /// p[k] = original row pivoted at step k; pinv is its inverse.
    p: Vec<usize>,
    pinv: Vec<usize>,
    /// q[k] = basis slot whose column was processed at step k.
    q: Vec<usize>,
    /// qinv[slot] = step.
    qinv: Vec<usize>,
}

/// Failure: the column of `slot` had no usable pivot. `unpivoted_row` is a
/// row still lacking a pivot, usable for basis repair.
#[derive(Clone, Copy, Debug)]
pub struct Singular {
    pub slot: usize,
    pub unpivoted_row: usize,
}

/// Scratch buffers reused across factorizations and solves.
#[derive(Clone, Debug, Default)]
pub struct Workspace {
    x: Vec<f64>,
    mark: Vec<u32>,
    stamp: u32,
    topo: Vec<usize>,
    dfs: Vec<(usize, usize)>,
    dense: Vec<f64>,
}

impl Workspace {
    fn prepare(&mut self, m: usize) {
        if self.x.len() < m {
            self.x.resize(m, 0.0);
            self.mark.resize(m, 0);
            self.dense.resize(m, 0.0);
        }
    }
}

/// Factorizes the basis given by `columns(slot)` for slots `0..m`.
///
/// `order` lists the slots in processing order; a good order puts sparse
/// columns first. Logical (slack) columns are passed like any other.
pub fn factorize(
    m: usize,
    columns: impl Fn(usize) -> Vec<(usize, f64)>,
    order: &[usize],
    ws: &mut Workspace,
) -> Result<LuFactors, Singular> {
    debug_assert_eq!(order.len(), m);
    ws.prepare(m);
    let mut f = LuFactors {
        m,
        l_cols: Vec::with_capacity(m),
        u_cols: Vec::with_capacity(m),
        u_diag: Vec::with_capacity(m),
        p: Vec::with_capacity(m),
        pinv: alloc::vec![NONE; m],
        q: order.to_vec(),
        qinv: alloc::vec![NONE; m],
    };

    for (step, &slot) in order.iter().enumerate() {
        f.qinv[slot] = step;
        let col = columns(slot);

        // Symbolic: topological reach of the column pattern over L.
        ws.stamp = ws.stamp.wrapping_add(1);
        if ws.stamp == 0 {
            ws.mark.iter_mut().for_each(|v| *v = 0);
            ws.stamp = 1;
        }
        ws.topo.clear();
        for &(row, _) in &col {
            if ws.mark[row] != ws.stamp {
                dfs_reach(row, &f.l_cols, &f.pinv, ws);
            }
        }

        // Numeric: x = L^{-1} b over the reach pattern.
        for &(row, v) in &col {
            ws.x[row] = v;
        }
        for idx in (0..ws.topo.len()).rev() {
            let node = ws.topo[idx];
            let k = f.pinv[node];
            if k == NONE {
                continue;
            }
            let xv = ws.x[node];
            if xv != 0.0 {
                for &(row, lv) in &f.l_cols[k] {
                    ws.x[row] -= lv * xv;
                }
            }
        }

        // Pivot: largest remaining entry among unpivoted rows.
        let mut pivot_row = NONE;
        let mut pivot_abs = 0.0;
        for &node in &ws.topo {
            if f.pinv[node] == NONE {
                let a = ws.x[node].abs();
                if a > pivot_abs || (a == pivot_abs && pivot_row != NONE && node < pivot_row) {
                    pivot_abs = a;
                    pivot_row = node;
                }
            }
        }
        if pivot_row == NONE || pivot_abs <= SINGULAR_TOL {
            let unpivoted_row = (0..m).find(|r| f.pinv[*r] == NONE).unwrap_or(0);
            // Clean scratch before bailing out.
            for &node in &ws.topo {
                ws.x[node] = 0.0;
            }
            return Err(Singular { slot, unpivoted_row });
        }

        let pivot_val = ws.x[pivot_row];
        let mut u_col = Vec::new();
        let mut l_col = Vec::new();
        for &node in &ws.topo {
            let xv = ws.x[node];
            ws.x[node] = 0.0;
            if xv == 0.0 {
                continue;
            }
            let k = f.pinv[node];
            if k != NONE {
                u_col.push((k, xv));
            } else if node != pivot_row {
                l_col.push((node, xv / pivot_val));
            }
        }
        f.pinv[pivot_row] = step;
        f.p.push(pivot_row);
        f.u_diag.push(pivot_val);
        f.u_cols.push(u_col);
        f.l_cols.push(l_col);
    }
    Ok(f)
}

/// Depth-first reach from `start` over the graph of L; appends nodes in
/// post-order to `ws.topo` (reverse iteration gives topological order).
fn dfs_reach(start: usize, l_cols: &[Vec<(usize, f64)>], pinv: &[usize], ws: &mut Workspace) {
    ws.dfs.clear();
    ws.dfs.push((start, 0));
    ws.mark[start] = ws.stamp;
    while let Some(&mut (node, ref mut child)) = ws.dfs.last_mut() {
        let k = pinv[node];
        let children: &[(usize, f64)] = if k == NONE { &[] } else { &l_cols[k] };
        if *child < children.len() {
            let next = children[*child].0;
            *child += 1;
            if ws.mark[next] != ws.stamp {
                ws.mark[next] = ws.stamp;
                ws.dfs.push((next, 0));
            }
        } else {
            ws.dfs.pop();
            ws.topo.push(node);
        }
    }
}

impl LuFactors {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Solves `B z = b`; `b` is given in row space, `z` in basis-slot space.
    pub fn ftran(&self, b: &mut [f64], ws: &mut Workspace) {
        ws.prepare(self.m);
        // Forward: L v = P b, working in row space.
        for k in 0..self.m {
            let val = b[self.p[k]];
            if val != 0.0 {
                for &(row, lv) in &self.l_cols[k] {
                    b[row] -= lv * val;
                }
            }
        }
        // Gather into step space.
        let v = &mut ws.dense;
        for k in 0..self.m {
            v[k] = b[self.p[k]];
        }
        // Backward: U w = v, column oriented.
        for k in (0..self.m).rev() {
            let t = v[k] / self.u_diag[k];
            v[k] = t;
            if t != 0.0 {
                for &(kk, uv) in &self.u_cols[k] {
                    v[kk] -= uv * t;
                }
            }
        }
        // Scatter to slot space.
        for k in 0..self.m {
            b[self.q[k]] = v[k];
        }
    }

    /// Solves `B' y = c`; `c` is given in basis-slot space, `y` in row space.
    pub fn btran(&self, c: &mut [f64], ws: &mut Workspace) {
        ws.prepare(self.m);
        let g = &mut ws.dense;
        // U' g = c-hat (forward over steps).
        for k in 0..self.m {
            let mut acc = c[self.q[k]];
            for &(j, uv) in &self.u_cols[k] {
                acc -= uv * g[j];
            }
            g[k] = acc / self.u_diag[k];
        }
        // L' h = g (backward); entries of l_cols[k] live at later steps.
        for k in (0..self.m).rev() {
            let mut acc = g[k];
            for &(row, lv) in &self.l_cols[k] {
                acc -= lv * g[self.pinv[row]];
            }
            g[k] = acc;
        }
        // y[p[k]] = h[k].
        for k in 0..self.m {
            c[self.p[k]] = g[k];
        }
    }

    /// Number of stored nonzeros, for refactorization heuristics.
    pub fn nnz(&self) -> usize {
        self.l_cols.iter().map(|c| c.len()).sum::<usize>()
            + self.u_cols.iter().map(|c| c.len()).sum::<usize>()
            + self.m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn dense_columns(cols: &[Vec<(usize, f64)>], m: usize) -> Vec<Vec<f64>> {
        cols.iter()
            .map(|c| {
                let mut d = vec![0.0; m];
                for &(r, v) in c {
                    d[r] = v;
                }
                d
            })
            .collect()
    }

    fn mat_vec(cols: &[Vec<f64>], z: &[f64]) -> Vec<f64> {
        let m = cols[0].len();
        let mut out = vec![0.0; m];
        for (j, col) in cols.iter().enumerate() {
            for r in 0..m {
                out[r] += col[r] * z[j];
            }
        }
        out
    }

    fn mat_t_vec(cols: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
        cols.iter().map(|col| col.iter().zip(y).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn random_bases_round_trip() {
        let mut rng = StdRng::seed_from_u64(7);
        for trial in 0..50 {
            let m = rng.gen_range(1..12);
            let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
            for j in 0..m {
                let mut col = vec![(j, rng.gen_range(0.5..2.0) * if rng.gen() { 1.0 } else { -1.0 })];
                for r in 0..m {
                    if r != j && rng.gen_bool(0.3) {
                        col.push((r, rng.gen_range(-1.0..1.0)));
                    }
                }
                col.sort_by_key(|e| e.0);
                cols.push(col);
            }
            let order: Vec<usize> = (0..m).collect();
            let mut ws = Workspace::default();
            let f = factorize(m, |s| cols[s].clone(), &order, &mut ws)
                .unwrap_or_else(|_| panic!("trial {trial} unexpectedly singular"));
            let dense = dense_columns(&cols, m);

            let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let mut z = b.clone();
            f.ftran(&mut z, &mut ws);
            let bz = mat_vec(&dense, &z);
            for r in 0..m {
                assert!((bz[r] - b[r]).abs() < 1e-8, "ftran residual at trial {trial}");
            }

            let c: Vec<f64> = (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let mut y = c.clone();
            f.btran(&mut y, &mut ws);
            let bty = mat_t_vec(&dense, &y);
            for j in 0..m {
                assert!((bty[j] - c[j]).abs() < 1e-8, "btran residual at trial {trial}");
            }
        }
    }

    #[test]
    fn sparse_order_matches_identity_matrix() {
        // Permuted negative identity, the initial slack basis.
        let m = 5;
        let cols: Vec<Vec<(usize, f64)>> = (0..m).map(|j| vec![(j, -1.0)]).collect();
        let order: Vec<usize> = (0..m).rev().collect();
        let mut ws = Workspace::default();
        let f = factorize(m, |s| cols[s].clone(), &order, &mut ws).unwrap();
        let mut b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        f.ftran(&mut b, &mut ws);
        assert_eq!(b, vec![-1.0, -2.0, -3.0, -4.0, -5.0]);
    }

    #[test]
    fn singular_basis_is_reported() {
        let m = 2;
        // Two identical columns.
        let cols: Vec<Vec<(usize, f64)>> = vec![vec![(0, 1.0), (1, 2.0)]; 2];
        let order = [0usize, 1];
        let mut ws = Workspace::default();
        let err = factorize(m, |s| cols[s].clone(), &order, &mut ws).unwrap_err();
        assert_eq!(err.slot, 1);
    }
}
