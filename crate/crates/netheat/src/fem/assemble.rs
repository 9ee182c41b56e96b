//! Piecewise-linear element assembly. The vertex coupling needs no explicit
//! equation: a shared vertex DOF receives contributions from every incident
//! edge, which is exactly the natural (Kirchhoff) condition of the Dirichlet
//! form. Pinned DOFs are eliminated, not penalized.

use nalgebra::DVector;

use crate::fem::GraphGrid;
use crate::sparse::{SymCsr, SymTriplets};

/// Mass treatment: consistent elements by default; row-sum lumping turns
/// the implicit step matrix into an M-matrix, which the positivity and
/// comparison experiments rely on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MassMode {
    Consistent,
    Lumped,
}

/// Mass and stiffness matrices over the same DOF numbering.
#[derive(Debug, Clone)]
pub struct OperatorPair {
    pub mass: SymCsr,
    pub stiffness: SymCsr,
    pub mass_mode: MassMode,
}

impl OperatorPair {
    pub fn dim(&self) -> usize {
        self.mass.dim()
    }

    /// Mass-weighted L2 norm sqrt(u' M u).
    pub fn l2_norm(&self, u: &DVector<f64>) -> f64 {
        self.mass.matvec(u).dot(u).max(0.0).sqrt()
    }

    /// Integral of the field: 1' M u.
    pub fn total_mass(&self, u: &DVector<f64>) -> f64 {
        self.mass.matvec(u).sum()
    }

    /// Integral of |u| (exact for the lumped mass; for the consistent mass
    /// a nonnegative-weight quadrature of the same order).
    pub fn l1_norm(&self, u: &DVector<f64>) -> f64 {
        let abs = DVector::from_iterator(u.len(), u.iter().map(|x| x.abs()));
        self.mass.matvec(&abs).sum()
    }
}

/// Assembles the element integrals over every edge of the grid.
pub fn assemble(grid: &GraphGrid, mass_mode: MassMode) -> OperatorPair {
    let n = grid.num_dofs();
    let mut mass = SymTriplets::new(n);
    let mut stiffness = SymTriplets::new(n);
    for e in grid.graph().edge_ids() {
        let h = grid.width(e);
        for cell in 0..grid.cells(e) {
            let left = grid.node_dof(e, cell);
            let right = grid.node_dof(e, cell + 1);
            for (dof, other) in [(left, right), (right, left)] {
                let Some(i) = dof else { continue };
                stiffness.add(i, i, 1.0 / h);
                match mass_mode {
                    MassMode::Consistent => mass.add(i, i, h / 3.0),
                    MassMode::Lumped => mass.add(i, i, h / 2.0),
                }
                if let Some(j) = other {
                    if i < j {
                        stiffness.add(i, j, -1.0 / h);
                        if mass_mode == MassMode::Consistent {
                            mass.add(i, j, h / 6.0);
                        }
                    }
                }
            }
        }
    }
    OperatorPair {
        mass: mass.freeze(),
        stiffness: stiffness.freeze(),
        mass_mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::GraphGrid;
    use crate::graph::GraphBuilder;
    use crate::sparse::generalized_eigenvalues;
    use std::sync::Arc;

    fn unit_edge() -> Arc<crate::graph::MetricGraph> {
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "b", 1.0);
        Arc::new(b.build())
    }

    #[test]
    fn hand_assembled_single_interior_dof() {
        // One unit edge, two cells, both ends pinned: a single hat function
        // with K = 2/h = 4 and consistent M = 2h/3 = 1/3.
        let grid = GraphGrid::build_dirichlet(unit_edge(), 0.5).unwrap();
        let ops = assemble(&grid, MassMode::Consistent);
        assert_eq!(ops.dim(), 1);
        assert!((ops.stiffness.get(0, 0) - 4.0).abs() < 1e-14);
        assert!((ops.mass.get(0, 0) - 1.0 / 3.0).abs() < 1e-14);

        let lumped = assemble(&grid, MassMode::Lumped);
        assert!((lumped.mass.get(0, 0) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn neumann_stiffness_kills_constants() {
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "c", 1.0);
        b.edge("e2", "c", "b1", 1.0);
        b.edge("e3", "c", "b2", 1.0);
        let grid = GraphGrid::build_neumann(Arc::new(b.build()), 0.25).unwrap();
        let ops = assemble(&grid, MassMode::Consistent);
        let ones = DVector::from_element(ops.dim(), 1.0);
        let ku = ops.stiffness.matvec(&ones);
        assert!(ku.amax() < 1e-13, "K 1 = {:.3e}", ku.amax());
    }

    #[test]
    fn mass_is_positive_definite() {
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "c", 1.0);
        b.edge("e2", "c", "b1", 0.7);
        b.edge("e3", "c", "b2", 1.3);
        let grid = GraphGrid::build_neumann(Arc::new(b.build()), 0.2).unwrap();
        for mode in [MassMode::Consistent, MassMode::Lumped] {
            let ops = assemble(&grid, mode);
            let eig = nalgebra::SymmetricEigen::new(ops.mass.to_dense());
            let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            assert!(min > 0.0, "mode {mode:?}: min eigenvalue {min}");
        }
    }

    #[test]
    fn dirichlet_ground_eigenvalue_approaches_pi_squared() {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let mut errors = Vec::new();
        for cells in [8.0, 16.0] {
            let grid = GraphGrid::build_dirichlet(unit_edge(), 1.0 / cells).unwrap();
            let ops = assemble(&grid, MassMode::Consistent);
            let eigs = generalized_eigenvalues(&ops.stiffness, &ops.mass).unwrap();
            errors.push((eigs[0] - pi2).abs());
        }
        let ratio = errors[0] / errors[1];
        assert!(
            (3.6..=4.4).contains(&ratio),
            "expected O(h^2) decay, got ratio {ratio}"
        );
    }

    #[test]
    fn total_mass_matches_length() {
        // Integral of 1 over the graph is its total edge length.
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "b", 1.5);
        b.edge("e2", "b", "c", 2.5);
        let grid = GraphGrid::build_neumann(Arc::new(b.build()), 0.25).unwrap();
        for mode in [MassMode::Consistent, MassMode::Lumped] {
            let ops = assemble(&grid, mode);
            let ones = DVector::from_element(ops.dim(), 1.0);
            assert!((ops.total_mass(&ones) - 4.0).abs() < 1e-12);
            assert!((ops.l2_norm(&ones) - 2.0).abs() < 1e-12);
        }
    }
}
