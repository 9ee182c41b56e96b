//! Metric graphs: finitely many vertices joined by edges of positive finite
//! length, each edge carrying an orientation from its initial vertex `tail`
//! to its final vertex `head` and identified with the interval [0, length].
//!
//! Distances are path lengths through the graph, where a path may enter and
//! leave edges at interior points.

mod exhaustion;
mod h2;
pub mod io;
mod tree;

pub use exhaustion::Exhaustion;
pub use h2::{check_h2, H2Level, H2Report};
pub use tree::{branching_function, build_regular_tree, RegularTreeSpec};

use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use crate::error::{Error, Result};

/// Index of a vertex within its graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

/// Index of an edge within its graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId(pub usize);

/// An oriented edge of positive length.
#[derive(Debug, Clone)]
pub struct Edge {
    pub name: String,
    /// Initial vertex: the edge leaves here (coordinate x = 0).
    pub tail: VertexId,
    /// Final vertex: the edge arrives here (coordinate x = length).
    pub head: VertexId,
    pub length: f64,
}

/// A point of the metric graph: a vertex, or an interior point of an edge at
/// arc-length coordinate `x` from the edge's tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    Vertex(VertexId),
    OnEdge { edge: EdgeId, x: f64 },
}

/// Conditions a well-formed graph must satisfy, reported by `validate`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Empty,
    Loop { edge: String },
    BadLength { edge: String },
    IsolatedVertex { vertex: String },
    Disconnected { components: usize },
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::Empty => write!(f, "graph has no edges"),
            Violation::Loop { edge } => write!(f, "edge {edge} joins a vertex to itself"),
            Violation::BadLength { edge } => {
                write!(f, "edge {edge} has non-positive or non-finite length")
            }
            Violation::IsolatedVertex { vertex } => {
                write!(f, "vertex {vertex} has no incident edge")
            }
            Violation::Disconnected { components } => {
                write!(f, "graph splits into {components} components")
            }
        }
    }
}

/// Incrementally assembles a `MetricGraph`; vertices are created on first use.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    vertex_names: Vec<String>,
    lookup: BTreeMap<String, VertexId>,
    edges: Vec<Edge>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        GraphBuilder::default()
    }

    pub fn vertex(&mut self, name: &str) -> VertexId {
        if let Some(&id) = self.lookup.get(name) {
            return id;
        }
        let id = VertexId(self.vertex_names.len());
        self.vertex_names.push(name.to_string());
        self.lookup.insert(name.to_string(), id);
        id
    }

    pub fn edge(&mut self, name: &str, tail: &str, head: &str, length: f64) -> &mut Self {
        let tail = self.vertex(tail);
        let head = self.vertex(head);
        self.edges.push(Edge {
            name: name.to_string(),
            tail,
            head,
            length,
        });
        self
    }

    pub fn build(self) -> MetricGraph {
        let mut incidence = vec![Vec::new(); self.vertex_names.len()];
        for (k, e) in self.edges.iter().enumerate() {
            incidence[e.tail.0].push(EdgeId(k));
            if e.head != e.tail {
                incidence[e.head.0].push(EdgeId(k));
            }
        }
        MetricGraph {
            vertex_names: self.vertex_names,
            lookup: self.lookup,
            edges: self.edges,
            incidence,
            truncation: BTreeSet::new(),
        }
    }
}

/// Immutable metric graph. Construct through `GraphBuilder` or the tree
/// builder; all solvers treat it as read-only shared data.
#[derive(Debug, Clone)]
pub struct MetricGraph {
    vertex_names: Vec<String>,
    lookup: BTreeMap<String, VertexId>,
    edges: Vec<Edge>,
    incidence: Vec<Vec<EdgeId>>,
    /// Vertices that stand in for cut-off infinite structure (the deepest
    /// generation of a truncated tree). They are excluded from the boundary
    /// and from Kirchhoff residual checks.
    truncation: BTreeSet<VertexId>,
}

impl MetricGraph {
    pub fn num_vertices(&self) -> usize {
        self.vertex_names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertex(&self, name: &str) -> Option<VertexId> {
        self.lookup.get(name).copied()
    }

    pub fn vertex_name(&self, v: VertexId) -> &str {
        &self.vertex_names[v.0]
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_names.len()).map(VertexId)
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e.0]
    }

    pub fn edge_ids(&self) -> impl Iterator<Item = EdgeId> {
        (0..self.edges.len()).map(EdgeId)
    }

    /// Edges incident to `v`, in edge-index order.
    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        &self.incidence[v.0]
    }

    pub fn degree(&self, v: VertexId) -> usize {
        self.incidence[v.0].len()
    }

    /// Inbound degree: number of edges whose head is `v`.
    pub fn inbound_degree(&self, v: VertexId) -> usize {
        self.incidence[v.0]
            .iter()
            .filter(|&&e| self.edges[e.0].head == v)
            .count()
    }

    /// Outbound degree: number of edges whose tail is `v`.
    pub fn outbound_degree(&self, v: VertexId) -> usize {
        self.incidence[v.0]
            .iter()
            .filter(|&&e| self.edges[e.0].tail == v)
            .count()
    }

    /// Degree-one vertices, excluding truncation stand-ins.
    pub fn boundary(&self) -> Vec<VertexId> {
        self.vertices()
            .filter(|&v| self.degree(v) == 1 && !self.truncation.contains(&v))
            .collect()
    }

    /// Vertices neither on the boundary nor truncation stand-ins.
    pub fn interior_vertices(&self) -> Vec<VertexId> {
        self.vertices()
            .filter(|&v| self.degree(v) != 1 && !self.truncation.contains(&v))
            .collect()
    }

    pub fn truncation_vertices(&self) -> &BTreeSet<VertexId> {
        &self.truncation
    }

    pub fn is_truncation(&self, v: VertexId) -> bool {
        self.truncation.contains(&v)
    }

    pub(crate) fn set_truncation(&mut self, set: BTreeSet<VertexId>) {
        self.truncation = set;
    }

    /// Checks the structural conditions for a well-formed metric graph:
    /// nonempty, loop-free, positive finite lengths, no isolated vertices,
    /// connected. Returns every violated condition.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.edges.is_empty() {
            out.push(Violation::Empty);
            return out;
        }
        for e in &self.edges {
            if e.tail == e.head {
                out.push(Violation::Loop {
                    edge: e.name.clone(),
                });
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                out.push(Violation::BadLength {
                    edge: e.name.clone(),
                });
            }
        }
        for v in self.vertices() {
            if self.degree(v) == 0 {
                out.push(Violation::IsolatedVertex {
                    vertex: self.vertex_name(v).to_string(),
                });
            }
        }
        let components = self.component_count();
        if components > 1 {
            out.push(Violation::Disconnected { components });
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    fn component_count(&self) -> usize {
        let n = self.num_vertices();
        if n == 0 {
            return 0;
        }
        let mut seen = vec![false; n];
        let mut components = 0;
        for start in 0..n {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &e in &self.incidence[v] {
                    let edge = &self.edges[e.0];
                    for w in [edge.tail.0, edge.head.0] {
                        if !seen[w] {
                            seen[w] = true;
                            stack.push(w);
                        }
                    }
                }
            }
        }
        components
    }

    fn check_point(&self, p: Point) -> Result<()> {
        match p {
            Point::Vertex(v) => {
                if v.0 >= self.num_vertices() {
                    return Err(Error::invalid(format!("vertex index {} out of range", v.0)));
                }
            }
            Point::OnEdge { edge, x } => {
                if edge.0 >= self.num_edges() {
                    return Err(Error::invalid(format!(
                        "edge index {} out of range",
                        edge.0
                    )));
                }
                let l = self.edges[edge.0].length;
                if !(0.0..=l).contains(&x) {
                    return Err(Error::invalid(format!(
                        "coordinate {x} outside [0, {l}] on edge {}",
                        self.edges[edge.0].name
                    )));
                }
            }
        }
        Ok(())
    }

    /// Shortest-path distances from `sources` (vertex, initial offset) to all
    /// vertices. Unreachable vertices stay at infinity.
    fn dijkstra(&self, sources: &[(VertexId, f64)]) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Entry(f64, usize);
        impl Eq for Entry {}
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> std::cmp::Ordering {
                // Reversed: BinaryHeap is a max-heap, we want smallest first.
                other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
            }
        }
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut dist = vec![f64::INFINITY; self.num_vertices()];
        let mut heap = BinaryHeap::new();
        for &(v, d0) in sources {
            if d0 < dist[v.0] {
                dist[v.0] = d0;
                heap.push(Entry(d0, v.0));
            }
        }
        while let Some(Entry(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &e in &self.incidence[v] {
                let edge = &self.edges[e.0];
                let w = if edge.tail.0 == v {
                    edge.head.0
                } else {
                    edge.tail.0
                };
                let nd = d + edge.length;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Entry(nd, w));
                }
            }
        }
        dist
    }

    /// Length of the shortest path between two points of the graph.
    pub fn distance(&self, p: Point, q: Point) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        // Direct intra-edge segment, available when both points share an edge.
        let mut best = match (p, q) {
            (Point::OnEdge { edge: e1, x: x1 }, Point::OnEdge { edge: e2, x: x2 })
                if e1 == e2 =>
            {
                (x1 - x2).abs()
            }
            _ => f64::INFINITY,
        };
        let ends = |pt: Point| -> Vec<(VertexId, f64)> {
            match pt {
                Point::Vertex(v) => vec![(v, 0.0)],
                Point::OnEdge { edge, x } => {
                    let e = &self.edges[edge.0];
                    vec![(e.tail, x), (e.head, e.length - x)]
                }
            }
        };
        let dist = self.dijkstra(&ends(p));
        for (v, off) in ends(q) {
            best = best.min(dist[v.0] + off);
        }
        if !best.is_finite() {
            return Err(Error::invalid(
                "points lie in different components; no path exists".to_string(),
            ));
        }
        Ok(best)
    }

    /// Reorients every edge away from `root` (tail at smaller distance) and
    /// returns the oriented graph together with its radial metrics.
    pub fn orient_by_root(&self, root: VertexId) -> Result<(MetricGraph, RootedMetrics)> {
        self.check_point(Point::Vertex(root))?;
        let r = self.dijkstra(&[(root, 0.0)]);
        if r.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid(
                "root does not reach every vertex; graph is disconnected".to_string(),
            ));
        }
        let mut oriented = self.clone();
        for e in &mut oriented.edges {
            if r[e.tail.0] > r[e.head.0] {
                std::mem::swap(&mut e.tail, &mut e.head);
            }
        }
        // Incidence lists keep edge ids; rebuild to keep tail/head queries
        // consistent for multigraph loops that were swapped.
        let mut incidence = vec![Vec::new(); oriented.vertex_names.len()];
        for (k, e) in oriented.edges.iter().enumerate() {
            incidence[e.tail.0].push(EdgeId(k));
            if e.head != e.tail {
                incidence[e.head.0].push(EdgeId(k));
            }
        }
        oriented.incidence = incidence;
        let jump_size = oriented
            .edge_ids()
            .map(|e| {
                let edge = oriented.edge(e);
                oriented
                    .distance(Point::Vertex(edge.tail), Point::Vertex(edge.head))
                    .expect("endpoints are connected through their own edge")
            })
            .fold(0.0, f64::max);
        let metrics = RootedMetrics { root, r, jump_size };
        Ok((oriented, metrics))
    }
}

/// Distance-from-root data for an oriented graph.
#[derive(Debug, Clone)]
pub struct RootedMetrics {
    pub root: VertexId,
    r: Vec<f64>,
    /// Largest distance between the two endpoints of a single edge.
    pub jump_size: f64,
}

impl RootedMetrics {
    /// Distance from the root to a vertex.
    pub fn radius(&self, v: VertexId) -> f64 {
        self.r[v.0]
    }

    /// Distance from the root to the point of `edge` at coordinate `x`.
    /// Every path reaches the point through one of the edge's endpoints.
    pub fn radius_at(&self, graph: &MetricGraph, edge: EdgeId, x: f64) -> f64 {
        let e = graph.edge(edge);
        (self.r[e.tail.0] + x).min(self.r[e.head.0] + e.length - x)
    }

    pub(crate) fn from_radii(root: VertexId, r: Vec<f64>, jump_size: f64) -> Self {
        RootedMetrics { root, r, jump_size }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> MetricGraph {
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "b", 1.0);
        b.edge("e2", "b", "c", 1.0);
        b.edge("e3", "c", "a", 1.0);
        b.build()
    }

    #[test]
    fn validates_clean_triangle() {
        assert!(triangle().validate().is_empty());
    }

    #[test]
    fn flags_loop_and_bad_length() {
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "a", 1.0);
        b.edge("e2", "a", "b", -2.0);
        let g = b.build();
        let violations = g.validate();
        assert!(violations.contains(&Violation::Loop {
            edge: "e1".to_string()
        }));
        assert!(violations.contains(&Violation::BadLength {
            edge: "e2".to_string()
        }));
    }

    #[test]
    fn flags_disconnected_pieces() {
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "b", 1.0);
        b.edge("e2", "c", "d", 1.0);
        let g = b.build();
        assert_eq!(
            g.validate(),
            vec![Violation::Disconnected { components: 2 }]
        );
    }

    #[test]
    fn distance_between_vertices() {
        let g = triangle();
        let a = g.vertex("a").unwrap();
        let b = g.vertex("b").unwrap();
        let d = g.distance(Point::Vertex(a), Point::Vertex(b)).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn distance_between_edge_midpoints() {
        // Midpoints of two sides of a unit triangle: half an edge to the
        // shared vertex on each side.
        let g = triangle();
        let p = Point::OnEdge {
            edge: EdgeId(0),
            x: 0.5,
        };
        let q = Point::OnEdge {
            edge: EdgeId(1),
            x: 0.5,
        };
        let d = g.distance(p, q).unwrap();
        assert!((d - 1.0).abs() < 1e-15, "expected 1.0, got {d}");
    }

    #[test]
    fn same_edge_direct_segment_wins() {
        let g = triangle();
        let p = Point::OnEdge {
            edge: EdgeId(0),
            x: 0.2,
        };
        let q = Point::OnEdge {
            edge: EdgeId(0),
            x: 0.9,
        };
        let d = g.distance(p, q).unwrap();
        assert!((d - 0.7).abs() < 1e-15);
    }

    #[test]
    fn rejects_point_outside_edge() {
        let g = triangle();
        let p = Point::OnEdge {
            edge: EdgeId(0),
            x: 1.5,
        };
        assert!(g.distance(p, Point::Vertex(VertexId(0))).is_err());
    }

    #[test]
    fn orientation_points_away_from_root() {
        let mut b = GraphBuilder::new();
        // Path c - a - b with root a: both edges must leave a.
        b.edge("e1", "b", "a", 1.0);
        b.edge("e2", "a", "c", 2.0);
        let g = b.build();
        let a = g.vertex("a").unwrap();
        let (og, rm) = g.orient_by_root(a).unwrap();
        for e in og.edge_ids() {
            let edge = og.edge(e);
            assert!(rm.radius(edge.tail) <= rm.radius(edge.head));
        }
        assert_eq!(rm.radius(a), 0.0);
        assert!((rm.radius(g.vertex("c").unwrap()) - 2.0).abs() < 1e-15);
        assert!((rm.jump_size - 2.0).abs() < 1e-15);
    }

    #[test]
    fn jump_size_sees_shortcuts() {
        // A long edge in parallel with a short two-edge path: the long
        // edge's endpoints are closer through the detour.
        let mut b = GraphBuilder::new();
        b.edge("long", "a", "b", 5.0);
        b.edge("s1", "a", "m", 1.0);
        b.edge("s2", "m", "b", 1.0);
        let g = b.build();
        let a = g.vertex("a").unwrap();
        let (_, rm) = g.orient_by_root(a).unwrap();
        assert!((rm.jump_size - 2.0).abs() < 1e-15);
    }

    #[test]
    fn radius_at_interior_point_uses_nearer_endpoint() {
        // Cycle of two unit edges between a and b, root a: points near b on
        // either edge are reached through b when that is shorter.
        let mut b = GraphBuilder::new();
        b.edge("e1", "a", "b", 1.0);
        b.edge("e2", "b", "a", 1.0);
        let g = b.build();
        let a = g.vertex("a").unwrap();
        let (og, rm) = g.orient_by_root(a).unwrap();
        // Oriented e1 runs a -> b; a point at x = 0.9 sits 0.9 from a
        // directly but also 1.0 + 0.1 through b; direct wins.
        let rho = rm.radius_at(&og, EdgeId(0), 0.9);
        assert!((rho - 0.9).abs() < 1e-15);
    }
}
