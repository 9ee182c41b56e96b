//! Per-edge meshes and graph fields. Each edge carries a uniform mesh of
//! n_e cells; interior mesh nodes own one degree of freedom each, and every
//! vertex outside the pinned set owns a single DOF shared by all incident
//! edges, so fields are continuous through vertices.

mod assemble;
mod flux;
pub mod io;

pub use assemble::{assemble, MassMode, OperatorPair};
pub use flux::{flux_sum, kirchhoff_residual, outer_derivative};

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, RootedMetrics, VertexId};

/// Discretization of a metric graph with a pinned (zero-value) vertex set.
#[derive(Debug)]
pub struct GraphGrid {
    graph: Arc<MetricGraph>,
    dirichlet: BTreeSet<VertexId>,
    cells: Vec<usize>,
    widths: Vec<f64>,
    vertex_dof: Vec<Option<usize>>,
    edge_interior_start: Vec<usize>,
    num_dofs: usize,
}

impl GraphGrid {
    /// Meshes every edge with n_e = max(1, round(l_e / target_h)) cells and
    /// assigns DOFs: free vertices first (in vertex order), then per-edge
    /// interior nodes.
    pub fn build(
        graph: Arc<MetricGraph>,
        target_h: f64,
        dirichlet: &BTreeSet<VertexId>,
    ) -> Result<Arc<GraphGrid>> {
        if !(target_h > 0.0 && target_h.is_finite()) {
            return Err(Error::invalid(format!(
                "target mesh width must be positive, got {target_h}"
            )));
        }
        for &v in dirichlet {
            if v.0 >= graph.num_vertices() {
                return Err(Error::invalid(format!(
                    "pinned vertex index {} out of range",
                    v.0
                )));
            }
        }
        let mut cells = Vec::with_capacity(graph.num_edges());
        let mut widths = Vec::with_capacity(graph.num_edges());
        for e in graph.edge_ids() {
            let l = graph.edge(e).length;
            let n = ((l / target_h).round() as usize).max(1);
            cells.push(n);
            widths.push(l / n as f64);
        }
        let mut vertex_dof = vec![None; graph.num_vertices()];
        let mut next = 0usize;
        for v in graph.vertices() {
            if !dirichlet.contains(&v) {
                vertex_dof[v.0] = Some(next);
                next += 1;
            }
        }
        let mut edge_interior_start = Vec::with_capacity(graph.num_edges());
        for &n in &cells {
            edge_interior_start.push(next);
            next += n - 1;
        }
        Ok(Arc::new(GraphGrid {
            graph,
            dirichlet: dirichlet.clone(),
            cells,
            widths,
            vertex_dof,
            edge_interior_start,
            num_dofs: next,
        }))
    }

    /// Convenience: pin the whole physical boundary.
    pub fn build_dirichlet(graph: Arc<MetricGraph>, target_h: f64) -> Result<Arc<GraphGrid>> {
        let boundary: BTreeSet<VertexId> = graph.boundary().into_iter().collect();
        GraphGrid::build(graph, target_h, &boundary)
    }

    /// Convenience: no pinned vertices.
    pub fn build_neumann(graph: Arc<MetricGraph>, target_h: f64) -> Result<Arc<GraphGrid>> {
        GraphGrid::build(graph, target_h, &BTreeSet::new())
    }

    pub fn graph(&self) -> &Arc<MetricGraph> {
        &self.graph
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    pub fn cells(&self, e: EdgeId) -> usize {
        self.cells[e.0]
    }

    pub fn width(&self, e: EdgeId) -> f64 {
        self.widths[e.0]
    }

    pub fn dirichlet(&self) -> &BTreeSet<VertexId> {
        &self.dirichlet
    }

    pub fn is_pinned(&self, v: VertexId) -> bool {
        self.dirichlet.contains(&v)
    }

    /// DOF of mesh node k on edge e (k = 0 is the tail, k = n_e the head);
    /// None for pinned vertices.
    pub fn node_dof(&self, e: EdgeId, k: usize) -> Option<usize> {
        let n = self.cells[e.0];
        assert!(k <= n, "node index {k} beyond {n} cells");
        if k == 0 {
            self.vertex_dof[self.graph.edge(e).tail.0]
        } else if k == n {
            self.vertex_dof[self.graph.edge(e).head.0]
        } else {
            Some(self.edge_interior_start[e.0] + k - 1)
        }
    }

    pub fn vertex_dof(&self, v: VertexId) -> Option<usize> {
        self.vertex_dof[v.0]
    }

    /// Two grids interchange fields when they mesh the same shape the same
    /// way: equal cell counts per edge and equal pinned sets.
    pub fn same_layout(&self, other: &GraphGrid) -> bool {
        self.cells == other.cells
            && self.dirichlet == other.dirichlet
            && self.graph.num_vertices() == other.graph.num_vertices()
    }
}

/// A scalar field on a grid: one value per DOF, zero at pinned vertices.
#[derive(Debug, Clone)]
pub struct GraphField {
    grid: Arc<GraphGrid>,
    pub values: DVector<f64>,
}

impl GraphField {
    pub fn new(grid: Arc<GraphGrid>, values: DVector<f64>) -> Result<Self> {
        if values.len() != grid.num_dofs() {
            return Err(Error::GridMismatch(format!(
                "field of length {} on a grid with {} DOFs",
                values.len(),
                grid.num_dofs()
            )));
        }
        Ok(GraphField { grid, values })
    }

    pub fn zeros(grid: Arc<GraphGrid>) -> Self {
        let n = grid.num_dofs();
        GraphField {
            grid,
            values: DVector::zeros(n),
        }
    }

    /// Constant value at every free DOF (pinned vertices stay 0).
    pub fn constant(grid: Arc<GraphGrid>, c: f64) -> Self {
        let n = grid.num_dofs();
        GraphField {
            grid,
            values: DVector::from_element(n, c),
        }
    }

    /// Samples a function of (edge, arc-length coordinate) at every node.
    /// Shared vertices are sampled through each incident edge; the function
    /// must agree at matching endpoints.
    pub fn from_edge_fn(grid: Arc<GraphGrid>, f: impl Fn(EdgeId, f64) -> f64) -> Self {
        let mut values = DVector::zeros(grid.num_dofs());
        for e in grid.graph().edge_ids() {
            let n = grid.cells(e);
            let h = grid.width(e);
            for k in 0..=n {
                if let Some(dof) = grid.node_dof(e, k) {
                    values[dof] = f(e, k as f64 * h);
                }
            }
        }
        GraphField { grid, values }
    }

    /// Samples a radial profile rho -> value through the root metrics.
    pub fn from_radial(
        grid: Arc<GraphGrid>,
        metrics: &RootedMetrics,
        f: impl Fn(f64) -> f64,
    ) -> Self {
        let graph = Arc::clone(grid.graph());
        GraphField::from_edge_fn(grid, |e, x| f(metrics.radius_at(&graph, e, x)))
    }

    pub fn grid(&self) -> &Arc<GraphGrid> {
        &self.grid
    }

    /// Node values along edge e, pinned endpoints expanded to 0.
    pub fn edge_values(&self, e: EdgeId) -> Vec<f64> {
        let n = self.grid.cells(e);
        (0..=n)
            .map(|k| match self.grid.node_dof(e, k) {
                Some(dof) => self.values[dof],
                None => 0.0,
            })
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |a, &x| a.max(x.abs()))
    }
}
