//! Discrete vertex-flux functionals. The outer derivative of an edge at a
//! vertex is the one-sided derivative signed so that summing over incident
//! edges reads (inbound slopes) - (outbound slopes); a field satisfies the
//! vertex coupling when that sum vanishes.

use crate::error::{Error, Result};
use crate::fem::GraphField;
use crate::graph::{EdgeId, VertexId};

/// du_e/dnu(v): +u'(l_e) when v is the head of e, -u'(0) when v is the
/// tail. One-sided derivatives use the second-order 3-point stencil, exact
/// for quadratics.
pub fn outer_derivative(u: &GraphField, e: EdgeId, v: VertexId) -> Result<f64> {
    let grid = u.grid();
    let edge = grid.graph().edge(e);
    let n = grid.cells(e);
    if n < 2 {
        return Err(Error::invalid(format!(
            "edge {} has {n} cell(s); the flux stencil needs at least 2",
            edge.name
        )));
    }
    let h = grid.width(e);
    let vals = u.edge_values(e);
    if v == edge.head {
        Ok((3.0 * vals[n] - 4.0 * vals[n - 1] + vals[n - 2]) / (2.0 * h))
    } else if v == edge.tail {
        Ok(-(-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h))
    } else {
        Err(Error::invalid(format!(
            "vertex {} is not an endpoint of edge {}",
            grid.graph().vertex_name(v),
            edge.name
        )))
    }
}

/// Sum of outer derivatives over all edges incident to `v`.
pub fn flux_sum(u: &GraphField, v: VertexId) -> Result<f64> {
    let grid = u.grid();
    let mut sum = 0.0;
    for &e in grid.graph().incident(v) {
        sum += outer_derivative(u, e, v)?;
    }
    Ok(sum)
}

/// Largest |flux_sum| over interior vertices, skipping truncation stand-ins
/// and pinned vertices (their values are constrained, not coupled).
pub fn kirchhoff_residual(u: &GraphField) -> Result<f64> {
    let grid = u.grid();
    let mut worst = 0.0_f64;
    for v in grid.graph().interior_vertices() {
        if grid.is_pinned(v) {
            continue;
        }
        worst = worst.max(flux_sum(u, v)?.abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{GraphField, GraphGrid};
    use crate::graph::GraphBuilder;
    use std::sync::Arc;

    fn star3() -> Arc<crate::graph::MetricGraph> {
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "c", 1.0);
        b.edge("e2", "c", "b1", 1.0);
        b.edge("e3", "c", "b2", 1.0);
        Arc::new(b.build())
    }

    #[test]
    fn balanced_ramps_cancel() {
        // Slope 2 into c on e1, slope 1 out of c on e2 and e3.
        let g = star3();
        let grid = GraphGrid::build_neumann(Arc::clone(&g), 0.25).unwrap();
        let u = GraphField::from_edge_fn(Arc::clone(&grid), |e, x| match e.0 {
            0 => 2.0 * x,
            _ => 2.0 + x,
        });
        let c = g.vertex("c").unwrap();
        let sum = flux_sum(&u, c).unwrap();
        assert!(sum.abs() < 1e-12, "flux sum {sum}");
    }

    #[test]
    fn constant_field_has_zero_flux_everywhere() {
        let g = star3();
        let grid = GraphGrid::build_neumann(Arc::clone(&g), 0.25).unwrap();
        let u = GraphField::constant(grid, 3.7);
        for v in g.vertices() {
            assert!(flux_sum(&u, v).unwrap().abs() < 1e-13);
        }
    }

    #[test]
    fn stencil_exact_on_quadratics() {
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "b", 1.0);
        let g = Arc::new(b.build());
        let grid = GraphGrid::build_neumann(Arc::clone(&g), 0.125).unwrap();
        let u = GraphField::from_edge_fn(Arc::clone(&grid), |_, x| x * x);
        let a = g.vertex("a").unwrap();
        let b = g.vertex("b").unwrap();
        // u'(0) = 0, so the outer derivative at the tail vanishes exactly.
        assert!(flux_sum(&u, a).unwrap().abs() < 1e-13);
        // u'(1) = 2 at the head.
        assert!((flux_sum(&u, b).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn unit_kink_gives_unit_residual() {
        let g = star3();
        let grid = GraphGrid::build_neumann(Arc::clone(&g), 0.25).unwrap();
        // Rises to 1 along e1, stays flat on the other edges.
        let u = GraphField::from_edge_fn(Arc::clone(&grid), |e, x| match e.0 {
            0 => x,
            _ => 1.0,
        });
        let res = kirchhoff_residual(&u).unwrap();
        assert!((res - 1.0).abs() < 1e-12, "residual {res}");
    }

    #[test]
    fn steady_state_has_tiny_residual() {
        // Pin leaf values (1, 0, 0) and solve the interior rows of K u = 0.
        // The discrete solution is linear per edge, so the 3-point stencil
        // reproduces its slopes exactly and the center flux cancels.
        let g = star3();
        let grid = GraphGrid::build_neumann(Arc::clone(&g), 0.125).unwrap();
        let ops = crate::fem::assemble(&grid, crate::fem::MassMode::Consistent);
        let k = ops.stiffness.to_dense();
        let n = grid.num_dofs();
        let fixed: Vec<(usize, f64)> = [("a", 1.0), ("b1", 0.0), ("b2", 0.0)]
            .iter()
            .map(|&(name, val)| {
                (
                    grid.vertex_dof(g.vertex(name).unwrap()).unwrap(),
                    val,
                )
            })
            .collect();
        let free: Vec<usize> =
            (0..n).filter(|i| fixed.iter().all(|&(d, _)| d != *i)).collect();
        let mut kff = nalgebra::DMatrix::zeros(free.len(), free.len());
        let mut rhs = nalgebra::DVector::zeros(free.len());
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                kff[(r, c)] = k[(i, j)];
            }
            for &(d, val) in &fixed {
                rhs[r] -= k[(i, d)] * val;
            }
        }
        let sol = kff.lu().solve(&rhs).unwrap();
        let mut values = nalgebra::DVector::zeros(n);
        for (r, &i) in free.iter().enumerate() {
            values[i] = sol[r];
        }
        for &(d, val) in &fixed {
            values[d] = val;
        }
        let u = GraphField::new(Arc::clone(&grid), values).unwrap();
        // Harmonic mean value at the center: (1 + 0 + 0)/3.
        let c = grid.vertex_dof(g.vertex("c").unwrap()).unwrap();
        assert!((u.values[c] - 1.0 / 3.0).abs() < 1e-12);
        assert!(kirchhoff_residual(&u).unwrap() < 1e-11);
    }
}
