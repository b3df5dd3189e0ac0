//! Shared test oracles.

use std::sync::Arc;

use parinv::grid::{Field, SpaceTimeGrid};

/// Dense Gauss-Jordan inverse, for tiny matrices only.
pub fn dense_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        assert!(p.abs() > 1e-14, "singular matrix in oracle");
        for v in m[col].iter_mut() {
            *v /= p;
        }
        for row in 0..n {
            if row != col && m[row][col] != 0.0 {
                let f = m[row][col];
                for k in 0..2 * n {
                    let sub = f * m[col][k];
                    m[row][k] -= sub;
                }
            }
        }
    }
    m.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Assemble the dense implicit-Euler step matrix over interior nodes at one
/// time level: I + dt * (-Laplacian + V).
pub fn dense_step_matrix(grid: &Arc<SpaceTimeGrid>, potential: &Field, level: usize) -> Vec<Vec<f64>> {
    let n = grid.n_interior();
    let dt = grid.dt;
    let mut a = vec![vec![0.0; n]; n];
    for (k, &node) in grid.interior_nodes().iter().enumerate() {
        let mut diag = 0.0;
        for axis in 0..grid.dim {
            let h2 = grid.h[axis] * grid.h[axis];
            diag += 2.0 / h2;
            let (lo, hi) = grid.axis_neighbors(node, axis);
            for nb in [lo, hi] {
                if let Some(j) = grid.interior_index(nb) {
                    a[k][j] -= dt / h2;
                }
            }
        }
        a[k][k] = 1.0 + dt * (diag + potential.at(level, node));
    }
    a
}
