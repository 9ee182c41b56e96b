//! Collapse of regular-tree problems onto a weighted interval.
//!
//! On a regular tree every point at distance rho from the root looks the
//! same, so symmetric states are functions of rho alone. Summing the weak
//! form over each generation leaves a one-dimensional problem on [0, rho_N]
//! with the edge-count weight beta(rho) in both bilinear forms. Values stay
//! continuous at the branch radii while the derivative jumps by the
//! branching factor, z'(rho_n^-) = b_n z'(rho_n^+), the natural interface
//! condition of the weighted weak form. [`TreeLayout`] pairs a tree grid
//! with its reduced counterpart and moves fields both ways; on matched
//! meshes the two discrete flows are algebraically identical, which
//! [`evolve_reduced_and_compare`] exploits to cross-check the solvers.

use std::collections::BTreeSet;
use std::sync::Arc;

use nalgebra::DVector;

use crate::dynamics::{evolve, steps_for, Scheme, Stepper, Trajectory};
use crate::error::{Error, Result};
use crate::fem::{assemble, GraphField, GraphGrid, MassMode, OperatorPair};
use crate::graph::{build_regular_tree, EdgeId, RegularTreeSpec, RootedMetrics, VertexId};
use crate::nonlinearity::Nonlinearity;
use crate::order::{BoundaryKind, ConditionResidual, OrderKind, OrderReport};
use crate::sparse::SymTriplets;
use crate::textio::fmt_g17;

/// Relative slack for radius and length agreement when reading a tree's
/// shape off a grid.
const SHAPE_RTOL: f64 = 1e-9;

/// Mesh for the weighted interval problem equivalent to a regular tree.
///
/// The interval [0, rho_N] is split at the branch radii into N pieces;
/// piece n carries `cells[n]` equal cells and the constant weight
/// `weights[n]`, the number of tree edges running through that radius
/// range. Weights are attached to elements and never interpolated, so the
/// derivative jump at a breakpoint comes out of the weak form exactly.
/// Breakpoint nodes are shared: the profile is continuous, only its
/// derivative may jump.
#[derive(Clone, Debug)]
pub struct ReducedGrid {
    breakpoints: Vec<f64>,
    cells: Vec<usize>,
    weights: Vec<f64>,
    widths: Vec<f64>,
    root: BoundaryKind,
    outer_pinned: bool,
    /// Node index of breakpoint n: cells summed over earlier intervals.
    breakpoint_node: Vec<usize>,
    /// Arc-length position of every mesh node.
    positions: Vec<f64>,
}

impl ReducedGrid {
    /// Builds a grid from explicit tables. `breakpoints` lists
    /// rho_0 = 0 < rho_1 < ... < rho_N; `cells` and `weights` give one
    /// entry per interval, the first weight being 1. `outer_pinned` clamps
    /// the outermost node to zero, the same artificial treatment a
    /// truncated tree offers; the default free endpoint imposes zero
    /// weighted flux instead.
    pub fn new(
        breakpoints: Vec<f64>,
        cells: Vec<usize>,
        weights: Vec<f64>,
        root: BoundaryKind,
        outer_pinned: bool,
    ) -> Result<Arc<Self>> {
        if breakpoints.len() < 2 {
            return Err(Error::invalid("a reduced grid needs at least one interval"));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::invalid(format!(
                "the first breakpoint must sit at rho = 0, got {}",
                breakpoints[0]
            )));
        }
        for n in 1..breakpoints.len() {
            if !(breakpoints[n].is_finite() && breakpoints[n] > breakpoints[n - 1]) {
                return Err(Error::invalid(format!(
                    "breakpoints must increase strictly (offender rho_{n})"
                )));
            }
        }
        let intervals = breakpoints.len() - 1;
        if cells.len() != intervals {
            return Err(Error::invalid(format!(
                "expected {intervals} cell counts, got {}",
                cells.len()
            )));
        }
        if weights.len() != intervals {
            return Err(Error::invalid(format!(
                "expected {intervals} weights, got {}",
                weights.len()
            )));
        }
        if let Some(n) = cells.iter().position(|&c| c == 0) {
            return Err(Error::invalid(format!("interval {n} needs at least one cell")));
        }
        if weights[0] != 1.0 {
            return Err(Error::invalid(format!(
                "the first interval carries weight 1, got {}",
                weights[0]
            )));
        }
        for n in 1..weights.len() {
            if !(weights[n].is_finite() && weights[n] >= weights[n - 1]) {
                return Err(Error::invalid(format!(
                    "weights must be positive and nondecreasing (offender interval {n})"
                )));
            }
        }

        let mut breakpoint_node = vec![0usize];
        for &c in &cells {
            breakpoint_node.push(breakpoint_node.last().unwrap() + c);
        }
        let mut widths = Vec::with_capacity(intervals);
        let mut positions = Vec::with_capacity(breakpoint_node[intervals] + 1);
        for n in 0..intervals {
            let w = (breakpoints[n + 1] - breakpoints[n]) / cells[n] as f64;
            widths.push(w);
            for k in 0..cells[n] {
                positions.push(breakpoints[n] + k as f64 * w);
            }
        }
        positions.push(breakpoints[intervals]);

        Ok(Arc::new(ReducedGrid {
            breakpoints,
            cells,
            weights,
            widths,
            root,
            outer_pinned,
            breakpoint_node,
            positions,
        }))
    }

    /// Reads breakpoints and weights off a tree table and meshes each
    /// interval with cells of width close to `target_h`, rounding the same
    /// way tree grids do so the two stay matched.
    pub fn from_tree_spec(
        spec: &RegularTreeSpec,
        target_h: f64,
        root: BoundaryKind,
        outer_pinned: bool,
    ) -> Result<Arc<Self>> {
        if !(target_h > 0.0 && target_h.is_finite()) {
            return Err(Error::invalid(format!(
                "mesh width must be positive, got {target_h}"
            )));
        }
        if spec.depth == 0
            || spec.depth >= spec.radii.len()
            || spec.branching.len() != spec.radii.len()
        {
            return Err(Error::invalid(format!(
                "tree table does not cover depth {}",
                spec.depth
            )));
        }
        let breakpoints = spec.radii[..=spec.depth].to_vec();
        let mut cells = Vec::with_capacity(spec.depth);
        let mut weights = Vec::with_capacity(spec.depth);
        for n in 1..=spec.depth {
            let len = spec.radii[n] - spec.radii[n - 1];
            cells.push(((len / target_h).round() as usize).max(1));
            weights.push(spec.generation_count(n)? as f64);
        }
        ReducedGrid::new(breakpoints, cells, weights, root, outer_pinned)
    }

    pub fn num_intervals(&self) -> usize {
        self.cells.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.positions.len()
    }

    pub fn num_dofs(&self) -> usize {
        let mut pinned = 0;
        if self.root == BoundaryKind::Dirichlet {
            pinned += 1;
        }
        if self.outer_pinned {
            pinned += 1;
        }
        self.num_nodes() - pinned
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cells(&self, n: usize) -> usize {
        self.cells[n]
    }

    pub fn width(&self, n: usize) -> f64 {
        self.widths[n]
    }

    pub fn weight(&self, n: usize) -> f64 {
        self.weights[n]
    }

    pub fn root(&self) -> BoundaryKind {
        self.root
    }

    pub fn outer_pinned(&self) -> bool {
        self.outer_pinned
    }

    /// Node index of breakpoint n, for n in 0..=num_intervals().
    pub fn breakpoint_node(&self, n: usize) -> usize {
        self.breakpoint_node[n]
    }

    pub fn node_rho(&self, i: usize) -> f64 {
        self.positions[i]
    }

    /// Weight at node i; breakpoints take the inner interval's weight, the
    /// left-open convention of the branching function.
    pub fn node_beta(&self, i: usize) -> f64 {
        if i == 0 {
            return self.weights[0];
        }
        let n = self.breakpoint_node.partition_point(|&b| b < i) - 1;
        self.weights[n.min(self.weights.len() - 1)]
    }

    /// DOF behind node i, or None when the node is pinned to zero.
    pub fn node_dof(&self, i: usize) -> Option<usize> {
        let root_pinned = self.root == BoundaryKind::Dirichlet;
        if i == 0 && root_pinned {
            return None;
        }
        if self.outer_pinned && i + 1 == self.num_nodes() {
            return None;
        }
        Some(i - usize::from(root_pinned))
    }

    /// Structural equality: same breakpoints, meshes, weights, and pinning.
    pub fn same_layout(&self, other: &ReducedGrid) -> bool {
        self.breakpoints == other.breakpoints
            && self.cells == other.cells
            && self.weights == other.weights
            && self.root == other.root
            && self.outer_pinned == other.outer_pinned
    }
}

/// A radial profile on a reduced grid: one value per DOF, zero at pinned
/// nodes.
#[derive(Clone, Debug)]
pub struct ReducedField {
    grid: Arc<ReducedGrid>,
    pub values: DVector<f64>,
}

impl ReducedField {
    pub fn new(grid: Arc<ReducedGrid>, values: DVector<f64>) -> Result<Self> {
        if values.len() != grid.num_dofs() {
            return Err(Error::GridMismatch(format!(
                "reduced field of length {} on a grid with {} DOFs",
                values.len(),
                grid.num_dofs()
            )));
        }
        Ok(ReducedField { grid, values })
    }

    pub fn zeros(grid: Arc<ReducedGrid>) -> Self {
        let n = grid.num_dofs();
        ReducedField {
            grid,
            values: DVector::zeros(n),
        }
    }

    /// Constant value at every free DOF (pinned nodes stay 0).
    pub fn constant(grid: Arc<ReducedGrid>, c: f64) -> Self {
        let n = grid.num_dofs();
        ReducedField {
            grid,
            values: DVector::from_element(n, c),
        }
    }

    /// Samples a profile rho -> value at every free node.
    pub fn from_fn(grid: Arc<ReducedGrid>, g: impl Fn(f64) -> f64) -> Self {
        let mut values = DVector::zeros(grid.num_dofs());
        for i in 0..grid.num_nodes() {
            if let Some(dof) = grid.node_dof(i) {
                values[dof] = g(grid.node_rho(i));
            }
        }
        ReducedField { grid, values }
    }

    pub fn grid(&self) -> &Arc<ReducedGrid> {
        &self.grid
    }

    pub fn node_value(&self, i: usize) -> f64 {
        match self.grid.node_dof(i) {
            Some(dof) => self.values[dof],
            None => 0.0,
        }
    }

    /// Values along interval n, breakpoint nodes included.
    pub fn interval_values(&self, n: usize) -> Vec<f64> {
        (self.grid.breakpoint_node(n)..=self.grid.breakpoint_node(n + 1))
            .map(|i| self.node_value(i))
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

    /// One `rho,value,beta` row per node.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("rho,value,beta\n");
        for i in 0..self.grid.num_nodes() {
            out.push_str(&format!(
                "{},{},{}\n",
                fmt_g17(self.grid.node_rho(i)),
                fmt_g17(self.node_value(i)),
                fmt_g17(self.grid.node_beta(i))
            ));
        }
        out
    }
}

/// Pairing of a regular-tree grid with its reduced counterpart, carrying
/// the node identification both [`TreeLayout::reduce`] and
/// [`TreeLayout::lift`] run on.
#[derive(Clone, Debug)]
pub struct TreeLayout {
    grid: Arc<GraphGrid>,
    reduced: Arc<ReducedGrid>,
    /// Reduced node index of each edge's tail node.
    edge_offset: Vec<usize>,
}

impl TreeLayout {
    /// Reads the tree structure off a grid: walks outward from the root,
    /// checks that every generation branches uniformly, sits at one radius,
    /// and carries one mesh, then builds the matching reduced grid. The
    /// root boundary condition and the outer pinning are taken from the
    /// grid's pinned set.
    pub fn build(grid: &Arc<GraphGrid>, metrics: &RootedMetrics) -> Result<Self> {
        let graph = grid.graph().clone();
        let root = metrics.root;
        if metrics.radius(root) != 0.0 {
            return Err(Error::invalid(format!(
                "the root {} does not sit at radius 0",
                graph.vertex_name(root)
            )));
        }

        let mut gen = vec![usize::MAX; graph.num_vertices()];
        gen[root.0] = 0;
        let mut edge_gen = vec![0usize; graph.num_edges()];
        let mut generations: Vec<Vec<VertexId>> = vec![vec![root]];
        loop {
            let depth = generations.len();
            let mut next = Vec::new();
            for &v in generations.last().unwrap() {
                for &e in graph.incident(v) {
                    let edge = graph.edge(e);
                    if edge.tail != v {
                        continue;
                    }
                    if gen[edge.head.0] != usize::MAX {
                        return Err(Error::invalid(format!(
                            "vertex {} is reached twice walking outward from the root; not a rooted tree",
                            graph.vertex_name(edge.head)
                        )));
                    }
                    gen[edge.head.0] = depth;
                    edge_gen[e.0] = depth;
                    next.push(edge.head);
                }
            }
            if next.is_empty() {
                break;
            }
            generations.push(next);
        }
        if let Some(v) = graph.vertices().find(|&v| gen[v.0] == usize::MAX) {
            return Err(Error::invalid(format!(
                "vertex {} is not reachable along edge orientations from the root",
                graph.vertex_name(v)
            )));
        }
        let depth = generations.len() - 1;
        if depth == 0 {
            return Err(Error::invalid("the root has no outbound edges"));
        }
        if generations[1].len() != 1 {
            return Err(Error::invalid(format!(
                "the root must carry exactly one outbound edge, found {}",
                generations[1].len()
            )));
        }

        let mut breakpoints = vec![0.0];
        for (n, layer) in generations.iter().enumerate().skip(1) {
            let rho = metrics.radius(layer[0]);
            for &v in layer {
                let r = metrics.radius(v);
                if (r - rho).abs() > SHAPE_RTOL * rho.abs().max(1.0) {
                    return Err(Error::invalid(format!(
                        "generation {n} vertices sit at different radii: {} at {} but {} at {}",
                        graph.vertex_name(layer[0]),
                        rho,
                        graph.vertex_name(v),
                        r
                    )));
                }
            }
            if rho <= breakpoints[n - 1] {
                return Err(Error::invalid(format!(
                    "generation {n} does not lie strictly outside generation {}",
                    n - 1
                )));
            }
            breakpoints.push(rho);
        }

        for e in graph.edge_ids() {
            let edge = graph.edge(e);
            let stretch = metrics.radius(edge.head) - metrics.radius(edge.tail);
            if (stretch - edge.length).abs() > SHAPE_RTOL * edge.length.max(1.0) {
                return Err(Error::invalid(format!(
                    "edge {} does not run radially: length {} spans radii {} to {}",
                    edge.name,
                    edge.length,
                    metrics.radius(edge.tail),
                    metrics.radius(edge.head)
                )));
            }
        }

        let outbound = |v: VertexId| {
            graph
                .incident(v)
                .iter()
                .filter(|&&e| graph.edge(e).tail == v)
                .count()
        };
        for n in 1..=depth {
            let parents = &generations[n - 1];
            let b = outbound(parents[0]);
            for &v in parents {
                if outbound(v) != b {
                    return Err(Error::invalid(format!(
                        "vertices {} and {} branch differently ({} vs {} children)",
                        graph.vertex_name(parents[0]),
                        graph.vertex_name(v),
                        b,
                        outbound(v)
                    )));
                }
            }
        }

        for v in graph.vertices() {
            let deepest = gen[v.0] == depth;
            if graph.is_truncation(v) && !deepest {
                return Err(Error::invalid(format!(
                    "truncation stand-in {} sits at generation {}, expected {depth}",
                    graph.vertex_name(v),
                    gen[v.0]
                )));
            }
            if deepest && !graph.is_truncation(v) {
                return Err(Error::invalid(format!(
                    "deepest vertex {} is not marked as a truncation stand-in",
                    graph.vertex_name(v)
                )));
            }
        }

        let mut cells = vec![0usize; depth];
        let mut witness = vec![EdgeId(0); depth];
        for e in graph.edge_ids() {
            let n = edge_gen[e.0];
            if cells[n - 1] == 0 {
                cells[n - 1] = grid.cells(e);
                witness[n - 1] = e;
            } else if grid.cells(e) != cells[n - 1] {
                return Err(Error::invalid(format!(
                    "generation {n} edges carry different meshes ({} has {} cells, {} has {})",
                    graph.edge(witness[n - 1]).name,
                    cells[n - 1],
                    graph.edge(e).name,
                    grid.cells(e)
                )));
            }
        }

        let root_bc = if grid.is_pinned(root) {
            BoundaryKind::Dirichlet
        } else {
            BoundaryKind::Neumann
        };
        let leaves = &generations[depth];
        let outer_pinned = grid.is_pinned(leaves[0]);
        for &v in leaves {
            if grid.is_pinned(v) != outer_pinned {
                return Err(Error::invalid(
                    "truncation stand-ins are pinned inconsistently".to_string(),
                ));
            }
        }
        for v in graph.vertices() {
            if grid.is_pinned(v) && v != root && gen[v.0] != depth {
                return Err(Error::invalid(format!(
                    "pinned vertex {} is neither the root nor a truncation stand-in",
                    graph.vertex_name(v)
                )));
            }
        }

        let weights = (1..=depth).map(|n| generations[n].len() as f64).collect();
        let reduced = ReducedGrid::new(breakpoints, cells, weights, root_bc, outer_pinned)?;
        let edge_offset = (0..graph.num_edges())
            .map(|e| reduced.breakpoint_node(edge_gen[e] - 1))
            .collect();
        Ok(TreeLayout {
            grid: grid.clone(),
            reduced,
            edge_offset,
        })
    }

    pub fn grid(&self) -> &Arc<GraphGrid> {
        &self.grid
    }

    pub fn reduced(&self) -> &Arc<ReducedGrid> {
        &self.reduced
    }

    /// Reduced node behind node k of edge e.
    pub fn reduced_node(&self, e: EdgeId, k: usize) -> usize {
        debug_assert!(k <= self.grid.cells(e));
        self.edge_offset[e.0] + k
    }

    /// Folds a symmetric tree field onto its radial profile. Keeps the
    /// first traversal value at each radius verbatim, so reducing a lifted
    /// field returns the lift input bit for bit; errors when two nodes at
    /// one radius differ by more than `tol_sym`, naming the worst pair.
    pub fn reduce(&self, u: &GraphField, tol_sym: f64) -> Result<ReducedField> {
        if !u.grid().same_layout(&self.grid) {
            return Err(Error::GridMismatch(
                "field does not live on the layout's grid".into(),
            ));
        }
        if !(tol_sym >= 0.0 && tol_sym.is_finite()) {
            return Err(Error::invalid(format!(
                "symmetry tolerance must be finite and nonnegative, got {tol_sym}"
            )));
        }
        let graph = self.grid.graph();
        let n_nodes = self.reduced.num_nodes();
        let mut first = vec![f64::NAN; n_nodes];
        let mut lo = vec![(f64::INFINITY, EdgeId(0), 0usize); n_nodes];
        let mut hi = vec![(f64::NEG_INFINITY, EdgeId(0), 0usize); n_nodes];
        for e in graph.edge_ids() {
            for k in 0..=self.grid.cells(e) {
                let v = match self.grid.node_dof(e, k) {
                    Some(dof) => u.values[dof],
                    None => 0.0,
                };
                let node = self.reduced_node(e, k);
                if first[node].is_nan() {
                    first[node] = v;
                }
                if v < lo[node].0 {
                    lo[node] = (v, e, k);
                }
                if v > hi[node].0 {
                    hi[node] = (v, e, k);
                }
            }
        }

        let mut worst = (0.0f64, 0usize);
        for (i, (low, high)) in lo.iter().zip(&hi).enumerate() {
            let spread = high.0 - low.0;
            if spread > worst.0 {
                worst = (spread, i);
            }
        }
        if worst.0 > tol_sym {
            let i = worst.1;
            return Err(Error::invalid(format!(
                "field is not symmetric at rho {}: edge {} node {} = {} but edge {} node {} = {} (spread {} exceeds tolerance {tol_sym})",
                self.reduced.node_rho(i),
                graph.edge(hi[i].1).name,
                hi[i].2,
                hi[i].0,
                graph.edge(lo[i].1).name,
                lo[i].2,
                lo[i].0,
                worst.0
            )));
        }

        let mut values = DVector::zeros(self.reduced.num_dofs());
        for (i, &v) in first.iter().enumerate() {
            debug_assert!(!v.is_nan(), "every reduced node is covered by an edge");
            if let Some(dof) = self.reduced.node_dof(i) {
                values[dof] = v;
            }
        }
        ReducedField::new(self.reduced.clone(), values)
    }

    /// Spreads a radial profile over the tree, the exact inverse of
    /// [`TreeLayout::reduce`] on symmetric fields.
    pub fn lift(&self, z: &ReducedField) -> Result<GraphField> {
        if !z.grid().same_layout(&self.reduced) {
            return Err(Error::GridMismatch(
                "reduced field does not match the layout's reduced grid".into(),
            ));
        }
        let graph = self.grid.graph();
        let mut values = DVector::zeros(self.grid.num_dofs());
        for e in graph.edge_ids() {
            for k in 0..=self.grid.cells(e) {
                if let Some(dof) = self.grid.node_dof(e, k) {
                    values[dof] = z.node_value(self.reduced_node(e, k));
                }
            }
        }
        GraphField::new(self.grid.clone(), values)
    }
}

/// Mass and stiffness of the weighted forms: integrals of z w beta and
/// z' w' beta over piecewise-linear elements. The weight multiplies whole
/// element contributions, so the assembled interface condition at each
/// breakpoint is beta_- z'(rho^-) = beta_+ z'(rho^+).
pub fn assemble_weighted(grid: &ReducedGrid, mass_mode: MassMode) -> OperatorPair {
    let n = grid.num_dofs();
    let mut mass = SymTriplets::new(n);
    let mut stiffness = SymTriplets::new(n);
    for iv in 0..grid.num_intervals() {
        let h = grid.width(iv);
        let beta = grid.weight(iv);
        let start = grid.breakpoint_node(iv);
        for cell in 0..grid.cells(iv) {
            let left = grid.node_dof(start + cell);
            let right = grid.node_dof(start + cell + 1);
            for (dof, other) in [(left, right), (right, left)] {
                let Some(i) = dof else { continue };
                stiffness.add(i, i, beta * (1.0 / h));
                match mass_mode {
                    MassMode::Consistent => mass.add(i, i, beta * (h / 3.0)),
                    MassMode::Lumped => mass.add(i, i, beta * (h / 2.0)),
                }
                if let Some(j) = other {
                    if i < j {
                        stiffness.add(i, j, beta * (-1.0 / h));
                        if mass_mode == MassMode::Consistent {
                            mass.add(i, j, beta * (h / 6.0));
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

/// Time-ordered samples of one reduced run.
#[derive(Clone, Debug)]
pub struct ReducedTrajectory {
    grid: Arc<ReducedGrid>,
    times: Vec<f64>,
    samples: Vec<DVector<f64>>,
    dt: f64,
    scheme: Scheme,
}

impl ReducedTrajectory {
    pub fn grid(&self) -> &Arc<ReducedGrid> {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// Number of recorded samples, including the initial state.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self, k: usize) -> &DVector<f64> {
        &self.samples[k]
    }

    pub fn field(&self, k: usize) -> ReducedField {
        ReducedField {
            grid: self.grid.clone(),
            values: self.samples[k].clone(),
        }
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("a trajectory is never empty")
    }

    pub fn last_field(&self) -> ReducedField {
        self.field(self.len() - 1)
    }
}

/// Integrates the weighted problem `beta z_t = (beta z')' + beta f(z)` from
/// `z0` to `t_final`, implicit diffusion and explicit reaction, with the
/// same sampling and abort rules as the full-graph integrator.
pub fn evolve_reduced(
    z0: &ReducedField,
    t_final: f64,
    dt: f64,
    f: &Nonlinearity,
    ops: &OperatorPair,
    scheme: Scheme,
) -> Result<ReducedTrajectory> {
    if z0.grid().num_dofs() != ops.dim() {
        return Err(Error::GridMismatch(format!(
            "reduced field has {} degrees of freedom but the operators have {}",
            z0.grid().num_dofs(),
            ops.dim()
        )));
    }
    let n = steps_for(t_final, dt)?;
    let stride = if n <= 1000 { 1 } else { n.div_ceil(1000) };
    let cap = 1e6;

    let stepper = Stepper::new(ops, dt, scheme)?;
    let mut times = vec![0.0];
    let mut samples = vec![z0.values.clone()];
    let mut z = z0.values.clone();
    for k in 1..=n {
        let next = stepper.advance(&z, f);
        let mut sup = 0.0f64;
        let mut finite = true;
        for &x in next.iter() {
            if !x.is_finite() {
                finite = false;
                break;
            }
            sup = sup.max(x.abs());
        }
        let t = dt * k as f64;
        if !finite || sup > cap {
            return Err(Error::BlowUp {
                t,
                sup: if finite { sup } else { f64::INFINITY },
                cap,
                last: Box::new((dt * (k - 1) as f64, z.iter().copied().collect())),
            });
        }
        z = next;
        if k == n || k % stride == 0 {
            times.push(t);
            samples.push(z.clone());
        }
    }
    Ok(ReducedTrajectory {
        grid: z0.grid().clone(),
        times,
        samples,
        dt,
        scheme,
    })
}

/// Outcome of running the same problem reduced and on the full tree.
#[derive(Debug)]
pub struct ReducedComparison {
    pub reduced: ReducedTrajectory,
    pub full: Trajectory,
    /// Largest |u_full - lift(z)| over all recorded samples and DOFs.
    pub max_deviation: f64,
}

/// Materializes the tree behind `z0`'s grid, runs the full problem from
/// the lifted initial state and the weighted problem from `z0`, and
/// reports how far the two flows drift apart. Matched meshes make the two
/// discrete systems algebraically equivalent, so the deviation measures
/// nothing but linear-solver roundoff. Both runs use the
/// implicit-diffusion scheme with lumped mass.
pub fn evolve_reduced_and_compare(
    spec: &RegularTreeSpec,
    f: &Nonlinearity,
    z0: &ReducedField,
    t_final: f64,
    dt: f64,
) -> Result<ReducedComparison> {
    let rg = z0.grid().clone();
    let (graph, metrics) = build_regular_tree(spec)?;

    let total_len = *rg.breakpoints().last().expect("grids have breakpoints");
    let total_cells: usize = (0..rg.num_intervals()).map(|n| rg.cells(n)).sum();
    let target_h = total_len / total_cells as f64;
    let mut pinned = BTreeSet::new();
    if rg.root() == BoundaryKind::Dirichlet {
        pinned.insert(metrics.root);
    }
    if rg.outer_pinned() {
        pinned.extend(graph.truncation_vertices().iter().copied());
    }
    let grid = GraphGrid::build(Arc::new(graph), target_h, &pinned)?;
    let layout = TreeLayout::build(&grid, &metrics)?;
    if !layout.reduced().same_layout(&rg) {
        return Err(Error::GridMismatch(format!(
            "the reduced grid does not match the tree at matched resolution: {}",
            layout_gap(layout.reduced(), &rg)
        )));
    }

    let u0 = layout.lift(z0)?;
    let full_ops = assemble(&grid, MassMode::Lumped);
    let reduced_ops = assemble_weighted(&rg, MassMode::Lumped);
    let full = evolve(&u0, t_final, dt, f, &full_ops)?;
    let reduced = evolve_reduced(z0, t_final, dt, f, &reduced_ops, Scheme::ImexEuler)?;
    debug_assert_eq!(full.times(), reduced.times());

    let mut max_deviation = 0.0f64;
    for k in 0..full.len() {
        let lifted = layout.lift(&reduced.field(k))?;
        for (a, b) in full.values(k).iter().zip(lifted.values.iter()) {
            max_deviation = max_deviation.max((a - b).abs());
        }
    }
    Ok(ReducedComparison {
        reduced,
        full,
        max_deviation,
    })
}

/// First structural difference between two reduced grids, for error text.
fn layout_gap(a: &ReducedGrid, b: &ReducedGrid) -> String {
    if a.breakpoints() != b.breakpoints() {
        return format!(
            "breakpoints {:?} vs {:?}",
            a.breakpoints(),
            b.breakpoints()
        );
    }
    let cells = |g: &ReducedGrid| (0..g.num_intervals()).map(|n| g.cells(n)).collect::<Vec<_>>();
    if cells(a) != cells(b) {
        return format!("interval cell counts {:?} vs {:?}", cells(a), cells(b));
    }
    if a.weights() != b.weights() {
        return format!("weights {:?} vs {:?}", a.weights(), b.weights());
    }
    if a.root() != b.root() {
        return "root boundary conditions differ".to_string();
    }
    "outer pinning differs".to_string()
}

/// A candidate radial order function: a single profile for the stationary
/// conditions, or a reduced trajectory for the time-dependent ones.
#[derive(Clone, Copy)]
pub enum ReducedCandidate<'a> {
    Stationary(&'a ReducedField),
    Evolving(&'a ReducedTrajectory),
}

/// Reduced twin of the full-grid order tolerance: generous against the
/// scheme's own O(h^2 + dt) residuals, tight against genuine violations.
pub fn default_reduced_tol(
    grid: &ReducedGrid,
    dt: f64,
    f: &Nonlinearity,
    fields: &[&ReducedField],
) -> f64 {
    let h_max = (0..grid.num_intervals())
        .map(|n| grid.width(n))
        .fold(0.0, f64::max);
    let f_scale = fields
        .iter()
        .flat_map(|z| z.values.iter())
        .map(|&x| f.eval(x).abs())
        .fold(0.0, f64::max);
    10.0 * (h_max * h_max + dt) * (1.0 + f_scale)
}

/// Checks the radial sub/supersolution conditions and reports the worst
/// violation of each, reusing the four-row report of the full checker: the
/// derivative-jump inequalities at the branch radii fill the vertex-flux
/// row and the root condition the boundary row. The supersolution
/// direction demands z'(rho_n^-) >= b_n z'(rho_n^+) and a nonincreasing
/// start, z'(0^+) <= 0, under a Neumann root; the subsolution direction
/// reverses both, which the report records in its notes. Nothing is
/// imposed at the outer endpoint, matching the treatment of truncated
/// trees. `z0` supplies initial data for the time-dependent ordering;
/// without it that condition is skipped.
pub fn check_symmetric_conditions(
    candidate: ReducedCandidate,
    kind: OrderKind,
    stationary: bool,
    f: &Nonlinearity,
    z0: Option<&ReducedField>,
    tol: f64,
) -> Result<OrderReport> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!(
            "tolerance must be finite and nonnegative, got {tol}"
        )));
    }
    match (&candidate, stationary) {
        (ReducedCandidate::Evolving(_), true) => {
            return Err(Error::invalid(
                "a trajectory cannot witness the stationary conditions; pass stationary = false",
            ));
        }
        (ReducedCandidate::Stationary(_), false) => {
            return Err(Error::invalid(
                "a single profile cannot witness the time-dependent conditions; pass stationary = true",
            ));
        }
        _ => {}
    }

    let grid = match candidate {
        ReducedCandidate::Stationary(q) => q.grid().clone(),
        ReducedCandidate::Evolving(traj) => traj.grid().clone(),
    };
    for iv in 0..grid.num_intervals() {
        if grid.cells(iv) < 2 {
            return Err(Error::invalid(format!(
                "interval {iv} has a single cell; order checks need at least two"
            )));
        }
    }
    let s = kind.sign();

    let mut interior = ConditionResidual::vacuous();
    let mut initial = ConditionResidual::vacuous();
    let mut flux = ConditionResidual::vacuous();
    let mut boundary = ConditionResidual::vacuous();

    // One-sided 3-point derivatives, exact for quadratics, matching the
    // vertex-flux stencil of the full checker.
    let right_slope = |zf: &ReducedField, iv: usize| {
        let i = grid.breakpoint_node(iv);
        let h = grid.width(iv);
        (-3.0 * zf.node_value(i) + 4.0 * zf.node_value(i + 1) - zf.node_value(i + 2)) / (2.0 * h)
    };
    let left_slope = |zf: &ReducedField, iv: usize| {
        let i = grid.breakpoint_node(iv + 1);
        let h = grid.width(iv);
        (3.0 * zf.node_value(i) - 4.0 * zf.node_value(i - 1) + zf.node_value(i - 2)) / (2.0 * h)
    };

    let mut check_spatial = |zf: &ReducedField, when: Option<f64>| {
        let at = |place: String| match when {
            Some(t) => format!("{place} t {t:.6}"),
            None => place,
        };
        for j in 1..grid.num_intervals() {
            let b = grid.weight(j) / grid.weight(j - 1);
            let value = s * (left_slope(zf, j - 1) - b * right_slope(zf, j));
            flux.update(value.max(0.0), || at(format!("rho {}", grid.breakpoints()[j])));
        }
        let value = match grid.root() {
            BoundaryKind::Neumann => s * -right_slope(zf, 0),
            BoundaryKind::Dirichlet => s * zf.node_value(0),
        };
        boundary.update(value.max(0.0), || at("rho 0".to_string()));
    };

    match candidate {
        ReducedCandidate::Stationary(q) => {
            for iv in 0..grid.num_intervals() {
                let h = grid.width(iv);
                for i in grid.breakpoint_node(iv) + 1..grid.breakpoint_node(iv + 1) {
                    let d2 =
                        (q.node_value(i - 1) - 2.0 * q.node_value(i) + q.node_value(i + 1))
                            / (h * h);
                    let value = s * -(d2 + f.eval(q.node_value(i)));
                    interior.update(value.max(0.0), || format!("rho {}", grid.node_rho(i)));
                }
            }
            check_spatial(q, None);
        }
        ReducedCandidate::Evolving(traj) => {
            if traj.len() < 2 {
                return Err(Error::invalid(
                    "trajectory has a single sample; time-dependent checks need at least two",
                ));
            }
            if let Some(z0) = z0 {
                if !z0.grid().same_layout(&grid) {
                    return Err(Error::GridMismatch(
                        "initial data does not live on the candidate's grid".into(),
                    ));
                }
                let zinit = traj.field(0);
                for i in 0..grid.num_nodes() {
                    let value = s * (zinit.node_value(i) - z0.node_value(i));
                    initial.update(value.max(0.0), || format!("rho {} t 0", grid.node_rho(i)));
                }
            }
            for k in 1..traj.len() {
                let t = traj.time(k);
                let dt_k = t - traj.time(k - 1);
                let zf = traj.field(k);
                let old = traj.field(k - 1);
                for iv in 0..grid.num_intervals() {
                    let h = grid.width(iv);
                    for i in grid.breakpoint_node(iv) + 1..grid.breakpoint_node(iv + 1) {
                        let ut = (zf.node_value(i) - old.node_value(i)) / dt_k;
                        let d2 = (zf.node_value(i - 1) - 2.0 * zf.node_value(i)
                            + zf.node_value(i + 1))
                            / (h * h);
                        let value = s * (ut - d2 - f.eval(old.node_value(i)));
                        interior
                            .update(value.max(0.0), || format!("rho {} t {t:.6}", grid.node_rho(i)));
                    }
                }
                check_spatial(&zf, Some(t));
            }
        }
    }

    let notes = match kind {
        OrderKind::Super => Vec::new(),
        OrderKind::Sub => vec![
            "jump and root inequalities reverse the supersolution direction".to_string(),
        ],
    };
    Ok(OrderReport {
        kind,
        stationary,
        tol,
        interior,
        initial,
        flux,
        boundary,
        notes,
    })
}
