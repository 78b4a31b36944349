//! Five-point Dirichlet solves on masked grids via SOR, and the harmonic
//! exhaustion field they induce.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridMask, NodeClass};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SorConfig {
    /// Relaxation factor in (0, 2); values near 2 pay off on fine grids.
    pub omega: f64,
    /// Convergence threshold on max |sum(neighbors) - 4u| over free nodes.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SorConfig {
    fn default() -> Self {
        SorConfig { omega: 1.9, tol: 1e-10, max_iter: 50_000 }
    }
}

/// Solve the five-point Laplace equation on the free nodes of `mask`, with
/// prescribed values on the fixed nodes. Every fixed node needs an entry in
/// `data` (keyed by row-major node index) and every free node must have all
/// four neighbors inside the mask.
pub fn dirichlet_solve(
    mask: &GridMask,
    data: &BTreeMap<usize, f64>,
    cfg: &SorConfig,
) -> Result<GridField> {
    if !(cfg.omega > 0.0 && cfg.omega < 2.0) {
        return Err(Error::InvalidParameter(format!(
            "relaxation factor must lie in (0,2), got {}",
            cfg.omega
        )));
    }
    let grid = mask.grid;
    for (&idx, v) in data {
        if idx >= grid.len() {
            return Err(Error::InvalidParameter(format!(
                "boundary data at node {idx} outside the grid"
            )));
        }
        if mask.class[idx] != NodeClass::Fixed {
            return Err(Error::InvalidParameter(format!(
                "boundary data at node {idx} which is not a fixed node"
            )));
        }
        if !v.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "boundary data at node {idx} is not finite"
            )));
        }
    }

    let mut values = vec![0.0f64; grid.len()];
    let mut fixed_count = 0usize;
    let mut fixed_sum = 0.0f64;
    for (idx, class) in mask.class.iter().enumerate() {
        if *class == NodeClass::Fixed {
            let v = data.get(&idx).ok_or_else(|| {
                Error::InvalidParameter(format!("fixed node {idx} has no boundary data"))
            })?;
            values[idx] = *v;
            fixed_count += 1;
            fixed_sum += *v;
        }
    }

    // free nodes with their neighbor indices, validated once
    let mut free: Vec<(usize, [usize; 4])> = Vec::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let idx = grid.idx(i, j);
            if mask.class[idx] != NodeClass::Free {
                continue;
            }
            if i == 0 || i + 1 >= grid.nx || j == 0 || j + 1 >= grid.ny {
                return Err(Error::InvalidParameter(format!(
                    "free node ({i}, {j}) touches the grid edge"
                )));
            }
            let neigh = [
                grid.idx(i - 1, j),
                grid.idx(i + 1, j),
                grid.idx(i, j - 1),
                grid.idx(i, j + 1),
            ];
            for &n in &neigh {
                if mask.class[n] == NodeClass::Outside {
                    return Err(Error::InvalidParameter(format!(
                        "free node ({i}, {j}) has an unclassified neighbor"
                    )));
                }
            }
            free.push((idx, neigh));
        }
    }

    if !free.is_empty() && fixed_count == 0 {
        return Err(Error::EmptyDomain("no fixed nodes to anchor the solve".into()));
    }
    let seed_value = if fixed_count > 0 { fixed_sum / fixed_count as f64 } else { 0.0 };
    for &(idx, _) in &free {
        values[idx] = seed_value;
    }

    let residual = |values: &[f64]| {
        let mut worst = 0.0f64;
        for &(idx, neigh) in &free {
            let s: f64 = neigh.iter().map(|&n| values[n]).sum();
            worst = worst.max((s - 4.0 * values[idx]).abs());
        }
        worst
    };

    let mut iterations = 0usize;
    let mut last_residual = residual(&values);
    while last_residual > cfg.tol {
        if iterations >= cfg.max_iter {
            return Err(Error::SolverDiverged { residual: last_residual, iterations });
        }
        let mut sweep_defect = 0.0f64;
        for &(idx, neigh) in &free {
            let s: f64 = neigh.iter().map(|&n| values[n]).sum();
            let defect = 0.25 * s - values[idx];
            sweep_defect = sweep_defect.max(4.0 * defect.abs());
            values[idx] += cfg.omega * defect;
        }
        iterations += 1;
        // the in-sweep defect mixes old and new neighbor values; confirm
        // with a clean pass before declaring convergence
        if sweep_defect <= cfg.tol {
            last_residual = residual(&values);
        }
    }

    let field_values = mask
        .class
        .iter()
        .zip(&values)
        .map(|(c, v)| match c {
            NodeClass::Outside => None,
            _ => Some(*v),
        })
        .collect();
    GridField::new(grid, field_values)
}

/// Harmonic majorant data: the Dirichlet solution F for the given fixed-node
/// data, and the defect psi = |z|^2 - F. When the data is |z|^2 itself, psi
/// is strictly negative at free nodes (by at least h^2) and zero on the ring.
pub struct ExhaustionField {
    pub f: GridField,
    pub psi: GridField,
}

pub fn exhaustion_field(
    mask: &GridMask,
    data: &BTreeMap<usize, f64>,
    cfg: &SorConfig,
) -> Result<ExhaustionField> {
    let f = dirichlet_solve(mask, data, cfg)?;
    let grid = f.grid;
    let mut psi_values = Vec::with_capacity(grid.len());
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.pos(i, j);
            psi_values.push(f.value(i, j).map(|v| p.norm_sq() - v));
        }
    }
    let psi = GridField::new(grid, psi_values)?;
    Ok(ExhaustionField { f, psi })
}

/// Fixed-node data map sampling |z|^2 at each fixed node.
pub fn abs_sq_ring_data(mask: &GridMask) -> BTreeMap<usize, f64> {
    let grid = mask.grid;
    let mut data = BTreeMap::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let idx = grid.idx(i, j);
            if mask.class[idx] == NodeClass::Fixed {
                data.insert(idx, grid.pos(i, j).norm_sq());
            }
        }
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn full_square_mask(n: usize) -> GridMask {
        let grid = Grid::centered_square(1.0, n).unwrap();
        GridMask::with_fixed_ring(grid, |p| {
            p.re(0).abs() < 1.0 - 1e-9 && p.im(0).abs() < 1.0 - 1e-9
        })
    }

    fn rim_data(mask: &GridMask, f: impl Fn(f64, f64) -> f64) -> BTreeMap<usize, f64> {
        let grid = mask.grid;
        let mut data = BTreeMap::new();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let idx = grid.idx(i, j);
                if mask.class[idx] == NodeClass::Fixed {
                    data.insert(idx, f(grid.x(i), grid.y(j)));
                }
            }
        }
        data
    }

    #[test]
    fn linear_data_is_reproduced_exactly() {
        let mask = full_square_mask(17);
        let data = rim_data(&mask, |x, y| 2.0 * x - y);
        let field = dirichlet_solve(&mask, &data, &SorConfig::default()).unwrap();
        let grid = mask.grid;
        let mut checked = 0;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if let Some(v) = field.value(i, j) {
                    let expected = 2.0 * grid.x(i) - grid.y(j);
                    assert!((v - expected).abs() < 1e-8);
                    checked += 1;
                }
            }
        }
        assert!(checked > 200);
    }

    #[test]
    fn saddle_harmonic_is_reproduced() {
        let mask = full_square_mask(21);
        let data = rim_data(&mask, |x, y| x * x - y * y);
        let field = dirichlet_solve(&mask, &data, &SorConfig::default()).unwrap();
        let grid = mask.grid;
        let mut worst = 0.0f64;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if let Some(v) = field.value(i, j) {
                    let expected = grid.x(i) * grid.x(i) - grid.y(j) * grid.y(j);
                    worst = worst.max((v - expected).abs());
                }
            }
        }
        assert!(worst > 0.0 && worst < 1e-6, "worst deviation {worst}");
    }

    #[test]
    fn constant_ring_value_fills_the_disc() {
        let grid = Grid::centered_square(1.0, 41).unwrap();
        let mask = GridMask::with_fixed_ring(grid, |p| p.norm() < 0.8);
        let data = rim_data(&mask, |_, _| 0.64);
        let field = dirichlet_solve(&mask, &data, &SorConfig::default()).unwrap();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if mask.class_at(i, j) == NodeClass::Free {
                    assert!((field.value(i, j).unwrap() - 0.64).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn missing_ring_data_is_rejected() {
        let mask = full_square_mask(9);
        let data = BTreeMap::new();
        assert!(matches!(
            dirichlet_solve(&mask, &data, &SorConfig::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn data_on_free_nodes_is_rejected() {
        let mask = full_square_mask(9);
        let mut data = rim_data(&mask, |_, _| 0.0);
        let center = mask.grid.idx(4, 4);
        data.insert(center, 1.0);
        assert!(matches!(
            dirichlet_solve(&mask, &data, &SorConfig::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn unclassified_neighbor_is_rejected() {
        let mut mask = full_square_mask(9);
        mask.set_class(1, 1, NodeClass::Outside); // adjacent to free (2,2)... (1,1) is fixed corner-adjacent
        mask.set_class(2, 1, NodeClass::Outside); // directly below free (2,2)
        let data = rim_data(&mask, |_, _| 0.0);
        assert!(matches!(
            dirichlet_solve(&mask, &data, &SorConfig::default()),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn iteration_cap_reports_divergence() {
        let mask = full_square_mask(17);
        let data = rim_data(&mask, |x, y| x * x - y * y);
        let cfg = SorConfig { max_iter: 2, ..SorConfig::default() };
        match dirichlet_solve(&mask, &data, &cfg) {
            Err(Error::SolverDiverged { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 0.0);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn exhaustion_defect_is_strictly_negative_inside() {
        let grid = Grid::centered_square(1.0, 41).unwrap();
        let mask = GridMask::with_fixed_ring(grid, |p| p.norm() < 0.8);
        let data = abs_sq_ring_data(&mask);
        let ex = exhaustion_field(&mask, &data, &SorConfig::default()).unwrap();
        let h2 = grid.h * grid.h;
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                match mask.class_at(i, j) {
                    NodeClass::Free => {
                        let psi = ex.psi.value(i, j).unwrap();
                        assert!(psi <= -h2 * 0.999, "psi = {psi} at ({i}, {j})");
                    }
                    NodeClass::Fixed => {
                        assert!(ex.psi.value(i, j).unwrap().abs() < 1e-12);
                    }
                    NodeClass::Outside => assert!(ex.psi.value(i, j).is_none()),
                }
            }
        }
    }
}
