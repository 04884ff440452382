use serde::{Deserialize, Serialize};

use super::{Placement, SomGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub values: Vec<f64>,
}

impl UMatrix {
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// 4-connected lattice neighbours of `(r, c)`.
fn neighbours(rows: usize, cols: usize, r: usize, c: usize) -> impl Iterator<Item = (usize, usize)> {
    let up = (r > 0).then(|| (r - 1, c));
    let down = (r + 1 < rows).then(|| (r + 1, c));
    let left = (c > 0).then(|| (r, c - 1));
    let right = (c + 1 < cols).then(|| (r, c + 1));
    [up, down, left, right].into_iter().flatten()
}

/// Mean Euclidean distance from each neuron to its existing 4-neighbours;
/// 0 for a neuron without neighbours.
pub fn u_matrix(grid: &SomGrid) -> UMatrix {
    let mut values = Vec::with_capacity(grid.neurons());
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let w = grid.weight(r, c);
            let (sum, n) = neighbours(grid.rows, grid.cols, r, c)
                .fold((0.0, 0usize), |(s, n), (nr, nc)| (s + euclidean(w, grid.weight(nr, nc)), n + 1));
            values.push(if n == 0 { 0.0 } else { sum / n as f64 });
        }
    }
    UMatrix {
        rows: grid.rows,
        cols: grid.cols,
        values,
    }
}

/// Row-major image of weight dimension `k`.
pub fn component_plane(grid: &SomGrid, k: usize) -> Result<Vec<f64>> {
    if k >= grid.dim {
        return Err(Error::Parameter(format!(
            "component {k} out of range for dim {}",
            grid.dim
        )));
    }
    Ok(grid.weights.chunks(grid.dim).map(|w| w[k]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureRank {
    pub dimension: usize,
    /// BMU weight rescaled to [0, 1] over the map's range for this dimension.
    pub strength: f64,
    /// `-|v[k] - w[k]|`; closer to zero is more important.
    pub importance: f64,
}

/// Per-dimension strength and importance of `v` at its placement, most
/// important first; ties keep dimension order.
pub fn feature_importance(grid: &SomGrid, placement: &Placement, v: &[f64]) -> Result<Vec<FeatureRank>> {
    if v.len() != grid.dim {
        return Err(Error::Dimension {
            expected: grid.dim,
            actual: v.len(),
        });
    }
    if placement.row >= grid.rows || placement.col >= grid.cols {
        return Err(Error::Parameter(format!(
            "placement ({}, {}) outside {}x{} map",
            placement.row, placement.col, grid.rows, grid.cols
        )));
    }
    let w = grid.weight(placement.row, placement.col);
    let mut lo = vec![f64::INFINITY; grid.dim];
    let mut hi = vec![f64::NEG_INFINITY; grid.dim];
    for n in grid.weights.chunks(grid.dim) {
        for k in 0..grid.dim {
            lo[k] = lo[k].min(n[k]);
            hi[k] = hi[k].max(n[k]);
        }
    }
    let mut ranks: Vec<FeatureRank> = (0..grid.dim)
        .map(|k| FeatureRank {
            dimension: k,
            strength: if hi[k] > lo[k] {
                (w[k] - lo[k]) / (hi[k] - lo[k])
            } else {
                0.5
            },
            importance: -(v[k] - w[k]).abs(),
        })
        .collect();
    ranks.sort_by(|a, b| b.importance.total_cmp(&a.importance).then(a.dimension.cmp(&b.dimension)));
    Ok(ranks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: usize, cols: usize, ws: Vec<Vec<f64>>) -> SomGrid {
        let mut g = SomGrid::init(rows, cols, ws[0].len(), 0).unwrap();
        g.weights = ws.concat();
        g
    }

    #[test]
    fn identical_weights_give_flat_maps() {
        let g = grid(3, 3, vec![vec![0.2, 0.4]; 9]);
        assert!(u_matrix(&g).values.iter().all(|&u| u == 0.0));
        assert!(component_plane(&g, 1).unwrap().iter().all(|&x| x == 0.4));
        assert!(component_plane(&g, 2).is_err());
        assert_eq!(u_matrix(&grid(1, 1, vec![vec![1.0]])).values, vec![0.0]);
    }

    #[test]
    fn two_halves_make_a_ridge() {
        // 4x4, left two columns all zeros, right two all ones (dim 3)
        let ws = (0..16)
            .map(|n| if n % 4 < 2 { vec![0.0; 3] } else { vec![1.0; 3] })
            .collect();
        let u = u_matrix(&grid(4, 4, ws));
        let d = 3f64.sqrt();
        for r in 0..4 {
            assert_eq!(u.at(r, 0), 0.0);
            assert_eq!(u.at(r, 3), 0.0);
            let n_nb = if r == 0 || r == 3 { 3.0 } else { 4.0 };
            assert!((u.at(r, 1) - d / n_nb).abs() < 1e-12);
            assert!((u.at(r, 2) - d / n_nb).abs() < 1e-12);
        }
    }

    #[test]
    fn corner_neuron_uses_two_neighbours() {
        let g = grid(2, 2, vec![vec![0.0], vec![3.0], vec![4.0], vec![0.0]]);
        let u = u_matrix(&g);
        assert_eq!(u.at(0, 0), 3.5);
    }

    #[test]
    fn importance_examples() {
        let g = grid(
            2,
            2,
            vec![
                vec![0.0, 1.0, 5.0],
                vec![1.0, 3.0, 5.0],
                vec![2.0, 2.0, 5.0],
                vec![4.0, 0.0, 5.0],
            ],
        );
        let p = Placement {
            id: "x".into(),
            row: 1,
            col: 1,
            correlation: 1.0,
        };
        let w = g.weight(1, 1).to_vec();
        let r = feature_importance(&g, &p, &w).unwrap();
        assert_eq!(r.iter().map(|f| f.dimension).collect::<Vec<_>>(), [0, 1, 2]);
        assert!(r.iter().all(|f| f.importance == 0.0));
        assert_eq!(r[0].strength, 1.0);
        assert_eq!(r[1].strength, 0.0);
        assert_eq!(r[2].strength, 0.5);

        let r = feature_importance(&g, &p, &[9.0, 0.0, 8.0]).unwrap();
        assert_eq!(r[0].dimension, 1);
        assert!(feature_importance(&g, &p, &[1.0]).is_err());
    }
}
