//! Exhaustion of an oriented graph by balls of increasing radius.
//!
//! Level k collects the vertices with r(v) <= R_k, the sphere vertices with
//! r(v) = R_k (up to a relative tolerance), and the edges with both endpoints
//! inside. Consecutive radii must keep their gaps within [1/c0, c0]; the
//! first radius is measured against 0.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, RootedMetrics, VertexId};

/// Relative tolerance for deciding that a vertex sits on a sphere.
const SPHERE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone)]
struct Level {
    region: BTreeSet<VertexId>,
    sphere: BTreeSet<VertexId>,
    edges: BTreeSet<EdgeId>,
}

/// A nested family of subgraphs cut at the given radii.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    radii: Vec<f64>,
    c0: f64,
    levels: Vec<Level>,
    /// Interior vertices of some level with an incident edge sticking out,
    /// as (level, vertex). Empty for admissibly oriented graphs.
    pub interior_violations: Vec<(usize, VertexId)>,
}

impl Exhaustion {
    /// Builds the exhaustion for `radii` on an oriented graph. The radii
    /// must be strictly increasing with gaps in [1/c0, c0].
    pub fn build(
        graph: &MetricGraph,
        metrics: &RootedMetrics,
        radii: &[f64],
        c0: f64,
    ) -> Result<Exhaustion> {
        if radii.is_empty() {
            return Err(Error::invalid("exhaustion needs at least one radius"));
        }
        if !(c0.is_finite() && c0 >= 1.0) {
            return Err(Error::invalid(format!(
                "exhaustion constant c0 = {c0} must be >= 1"
            )));
        }
        let mut prev = 0.0;
        for (k, &r) in radii.iter().enumerate() {
            if !(r.is_finite() && r > prev) {
                return Err(Error::invalid(format!(
                    "radii must be positive and strictly increasing (offender at index {k})"
                )));
            }
            let gap = r - prev;
            if gap < 1.0 / c0 - 1e-12 || gap > c0 + 1e-12 {
                return Err(Error::invalid(format!(
                    "radius gap {gap} at index {k} escapes [{}, {c0}]",
                    1.0 / c0
                )));
            }
            prev = r;
        }

        let mut levels = Vec::with_capacity(radii.len());
        let mut interior_violations = Vec::new();
        for (k, &rk) in radii.iter().enumerate() {
            let tol = SPHERE_RTOL * rk;
            let mut region = BTreeSet::new();
            let mut sphere = BTreeSet::new();
            for v in graph.vertices() {
                let r = metrics.radius(v);
                if r <= rk + tol {
                    region.insert(v);
                    if (r - rk).abs() <= tol {
                        sphere.insert(v);
                    }
                }
            }
            let edges: BTreeSet<EdgeId> = graph
                .edge_ids()
                .filter(|&e| {
                    let edge = graph.edge(e);
                    region.contains(&edge.tail) && region.contains(&edge.head)
                })
                .collect();
            for &v in region.difference(&sphere) {
                if graph.incident(v).iter().any(|e| !edges.contains(e)) {
                    interior_violations.push((k, v));
                }
            }
            levels.push(Level {
                region,
                sphere,
                edges,
            });
        }
        Ok(Exhaustion {
            radii: radii.to_vec(),
            c0,
            levels,
            interior_violations,
        })
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn radius(&self, level: usize) -> f64 {
        self.radii[level]
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Vertices with r(v) <= R_level.
    pub fn region(&self, level: usize) -> &BTreeSet<VertexId> {
        &self.levels[level].region
    }

    /// Vertices with r(v) = R_level.
    pub fn sphere(&self, level: usize) -> &BTreeSet<VertexId> {
        &self.levels[level].sphere
    }

    /// Edges with both endpoints inside level `level`.
    pub fn edges(&self, level: usize) -> &BTreeSet<EdgeId> {
        &self.levels[level].edges
    }

    /// Sum of inbound degrees over the sphere of `level`, counted in the
    /// full graph.
    pub fn sphere_inbound_sum(&self, graph: &MetricGraph, level: usize) -> u64 {
        self.sphere(level)
            .iter()
            .map(|&v| graph.inbound_degree(v) as u64)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::GraphBuilder;

    /// Path a - b - c - d with unit edges, rooted at a.
    fn path() -> (MetricGraph, RootedMetrics) {
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "b", 1.0);
        b.edge("e2", "b", "c", 1.0);
        b.edge("e3", "c", "d", 1.0);
        let g = b.build();
        let a = g.vertex("a").unwrap();
        g.orient_by_root(a).unwrap()
    }

    #[test]
    fn path_levels_grow_edge_by_edge() {
        let (g, rm) = path();
        let ex = Exhaustion::build(&g, &rm, &[1.0, 2.0, 3.0], 2.0).unwrap();
        for k in 0..3 {
            assert_eq!(ex.edges(k).len(), k + 1, "level {k}");
            assert_eq!(ex.region(k).len(), k + 2);
            assert_eq!(ex.sphere(k).len(), 1);
        }
        assert!(ex.interior_violations.is_empty());
    }

    #[test]
    fn rejects_uneven_spacing() {
        let (g, rm) = path();
        let err = Exhaustion::build(&g, &rm, &[1.0, 3.5], 2.0);
        assert!(err.is_err());
    }

    #[test]
    fn rejects_decreasing_radii() {
        let (g, rm) = path();
        assert!(Exhaustion::build(&g, &rm, &[2.0, 1.0], 2.0).is_err());
    }

    #[test]
    fn first_radius_checked_against_zero() {
        let (g, rm) = path();
        // Gap 3.0 from 0 exceeds c0 = 2.
        assert!(Exhaustion::build(&g, &rm, &[3.0], 2.0).is_err());
    }

    #[test]
    fn flags_edge_sticking_out_of_interior_vertex() {
        // Star around c: root a at distance 2, but c also starts an edge of
        // length 3 whose far endpoint escapes every level.
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "c", 2.0);
        b.edge("e2", "c", "z", 3.0);
        let g = b.build();
        let a = g.vertex("a").unwrap();
        let (og, rm) = g.orient_by_root(a).unwrap();
        let ex = Exhaustion::build(&og, &rm, &[2.5], 2.5).unwrap();
        // c is interior to the 2.5-ball (r = 2) yet e2 leaves the level.
        let c = og.vertex("c").unwrap();
        assert_eq!(ex.interior_violations, vec![(0, c)]);
    }
}
