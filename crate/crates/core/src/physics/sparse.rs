//! Symmetric 3×3-block sparse matrices and an envelope Cholesky factorization
//! under reverse Cuthill–McKee ordering, used as the CG preconditioner.

use std::collections::VecDeque;

use nalgebra::Matrix3;

use super::Vec3;

/// Symmetric matrix stored as diagonal blocks plus off-diagonal blocks
/// `(i, j, B)` meaning `A_ij += B` and `A_ji += Bᵀ`.
#[derive(Debug, Clone)]
pub struct BlockMatrix {
    pub diag: Vec<Matrix3<f64>>,
    pub off: Vec<(usize, usize, Matrix3<f64>)>,
}

impl BlockMatrix {
    pub fn new(n: usize) -> Self {
        Self {
            diag: vec![Matrix3::zeros(); n],
            off: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.diag.len()
    }

    /// Adds a spring-pattern term `[[B, −B], [−B, B]]` on nodes `i`, `j`.
    pub fn add_pair(&mut self, i: usize, j: usize, b: Matrix3<f64>) {
        self.diag[i] += b;
        self.diag[j] += b;
        self.off.push((i, j, -b));
    }

    /// Adds `c·g·gᵀ` for a sparse block vector `g`.
    pub fn add_rank_one(&mut self, c: f64, g: &[(usize, Vec3)]) {
        for (x, (a, ga)) in g.iter().enumerate() {
            self.diag[*a] += ga * ga.transpose() * c;
            for (b, gb) in &g[x + 1..] {
                if a != b {
                    self.off.push((*a, *b, ga * gb.transpose() * c));
                } else {
                    self.diag[*a] += (ga * gb.transpose() + gb * ga.transpose()) * c;
                }
            }
        }
    }

    /// `out = P·A·P·v` where `P` zeroes the masked nodes.
    pub fn apply_masked(&self, v: &[f64], out: &mut [f64], masked: &[bool]) {
        let get = |i: usize| Vec3::new(v[3 * i], v[3 * i + 1], v[3 * i + 2]);
        for (i, d) in self.diag.iter().enumerate() {
            let y = if masked[i] { Vec3::zeros() } else { d * get(i) };
            out[3 * i..3 * i + 3].copy_from_slice(y.as_slice());
        }
        for (i, j, b) in &self.off {
            if masked[*i] || masked[*j] {
                continue;
            }
            let yi = b * get(*j);
            let yj = b.transpose() * get(*i);
            for a in 0..3 {
                out[3 * i + a] += yi[a];
                out[3 * j + a] += yj[a];
            }
        }
    }
}

/// Reverse Cuthill–McKee ordering of the block graph: `perm[k]` is the node
/// placed at position `k`.
fn rcm_order(n: usize, edges: &[(usize, usize, Matrix3<f64>)]) -> Vec<usize> {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in edges {
        if i != j {
            adj[*i].push(*j);
            adj[*j].push(*i);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        // Start each component from a minimum-degree node.
        let start = (0..n).filter(|&i| !seen[i]).min_by_key(|&i| (adj[i].len(), i)).unwrap();
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut next: Vec<usize> = adj[u].iter().copied().filter(|&v| !seen[v]).collect();
            next.sort_by_key(|&v| (adj[v].len(), v));
            for v in next {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// Lower-triangular Cholesky factor in row-envelope (skyline) storage.
#[derive(Debug, Clone)]
pub struct EnvelopeCholesky {
    /// DOF permutation: `perm[k]` is the original DOF at position `k`.
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl EnvelopeCholesky {
    /// Factorizes `P·A·P + (I on masked nodes)`. Returns `None` if the matrix
    /// is not numerically positive definite.
    pub fn factor(a: &BlockMatrix, masked: &[bool]) -> Option<Self> {
        let n = a.size();
        let node_order = rcm_order(n, &a.off);
        let mut pos = vec![0; n];
        for (k, &node) in node_order.iter().enumerate() {
            pos[node] = k;
        }
        let dofs = 3 * n;
        let perm: Vec<usize> = node_order.iter().flat_map(|&i| [3 * i, 3 * i + 1, 3 * i + 2]).collect();

        // Envelope: first stored column of every permuted row.
        let mut first_node: Vec<usize> = (0..n).collect();
        for (i, j, _) in &a.off {
            if masked[*i] || masked[*j] {
                continue;
            }
            let (pi, pj) = (pos[*i], pos[*j]);
            let (hi, lo) = if pi > pj { (pi, pj) } else { (pj, pi) };
            first_node[hi] = first_node[hi].min(lo);
        }
        let mut first = Vec::with_capacity(dofs);
        let mut offset = Vec::with_capacity(dofs + 1);
        let mut total = 0;
        for r in 0..dofs {
            let f = 3 * first_node[r / 3];
            first.push(f);
            offset.push(total);
            total += r - f + 1;
        }
        offset.push(total);
        let mut data = vec![0.0; total];

        let idx = |r: usize, c: usize, first: &[usize], offset: &[usize]| offset[r] + c - first[r];
        let add = |r: usize, c: usize, v: f64, data: &mut [f64]| {
            let (r, c) = if r >= c { (r, c) } else { (c, r) };
            data[idx(r, c, &first, &offset)] += v;
        };
        for (i, d) in a.diag.iter().enumerate() {
            let base = 3 * pos[i];
            if masked[i] {
                for x in 0..3 {
                    add(base + x, base + x, 1.0, &mut data);
                }
                continue;
            }
            for x in 0..3 {
                for y in 0..=x {
                    add(base + x, base + y, d[(x, y)], &mut data);
                }
            }
        }
        for (i, j, b) in &a.off {
            if masked[*i] || masked[*j] {
                continue;
            }
            let (bi, bj) = (3 * pos[*i], 3 * pos[*j]);
            for x in 0..3 {
                for y in 0..3 {
                    add(bi + x, bj + y, b[(x, y)], &mut data);
                }
            }
        }

        for r in 0..dofs {
            let fr = first[r];
            for c in fr..r {
                let fc = first[c];
                let k0 = fr.max(fc);
                let row_r = &data[offset[r] + k0 - fr..offset[r] + c - fr];
                let row_c = &data[offset[c] + k0 - fc..offset[c] + c - fc];
                let s: f64 = row_r.iter().zip(row_c).map(|(x, y)| x * y).sum();
                let diag_c = data[offset[c + 1] - 1];
                let at = offset[r] + c - fr;
                data[at] = (data[at] - s) / diag_c;
            }
            let row = &data[offset[r]..offset[r + 1] - 1];
            let s: f64 = row.iter().map(|x| x * x).sum();
            let d = data[offset[r + 1] - 1] - s;
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            data[offset[r + 1] - 1] = d.sqrt();
        }
        Some(Self { perm, first, offset, data })
    }

    /// Solves `L·Lᵀ·z = r`.
    pub fn solve(&self, r: &[f64], z: &mut [f64]) {
        let n = self.perm.len();
        let mut y: Vec<f64> = self.perm.iter().map(|&p| r[p]).collect();
        for i in 0..n {
            let f = self.first[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1] - 1];
            let s: f64 = row.iter().zip(&y[f..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / self.data[self.offset[i + 1] - 1];
        }
        for i in (0..n).rev() {
            y[i] /= self.data[self.offset[i + 1] - 1];
            let f = self.first[i];
            let yi = y[i];
            let row = &self.data[self.offset[i]..self.offset[i + 1] - 1];
            for (k, l) in row.iter().enumerate() {
                y[f + k] -= l * yi;
            }
        }
        for (k, &p) in self.perm.iter().enumerate() {
            z[p] = y[k];
        }
    }
}
