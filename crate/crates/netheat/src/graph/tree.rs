//! Regular rooted trees: every vertex of generation n carries the same
//! number of children b_n and sits at the same distance rho_n from the root.
//! b_0 = 1, so a single edge leaves the root; b_n >= 2 afterwards.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::graph::{GraphBuilder, MetricGraph, RootedMetrics, VertexId};

/// Generation table of a regular tree. Entry n of `branching` is b_n, entry
/// n of `radii` is rho_n; the two run in lockstep from generation 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularTreeSpec {
    pub branching: Vec<u64>,
    pub radii: Vec<f64>,
    /// Number of generations to materialize when building a finite cut.
    pub depth: usize,
}

impl RegularTreeSpec {
    pub fn new(branching: Vec<u64>, radii: Vec<f64>, depth: usize) -> Result<Self> {
        let spec = RegularTreeSpec {
            branching,
            radii,
            depth,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Homogeneous tree: b children per vertex, edges of equal length.
    pub fn homogeneous(b: u64, edge_length: f64, depth: usize) -> Result<Self> {
        let mut branching = vec![1];
        let mut radii = vec![0.0];
        for n in 1..=depth {
            branching.push(b);
            radii.push(n as f64 * edge_length);
        }
        RegularTreeSpec::new(branching, radii, depth)
    }

    fn validate(&self) -> Result<()> {
        if self.branching.len() != self.radii.len() {
            return Err(Error::invalid(
                "branching and radius tables differ in length".to_string(),
            ));
        }
        if self.branching.is_empty() {
            return Err(Error::invalid("tree table is empty"));
        }
        if self.branching[0] != 1 {
            return Err(Error::invalid(format!(
                "generation 0 must branch exactly once, got b_0 = {}",
                self.branching[0]
            )));
        }
        if self.radii[0] != 0.0 {
            return Err(Error::invalid(format!(
                "the root sits at radius 0, got rho_0 = {}",
                self.radii[0]
            )));
        }
        for n in 1..self.branching.len() {
            if self.branching[n] < 2 {
                return Err(Error::invalid(format!(
                    "generation {n} must branch at least twice, got b_{n} = {}",
                    self.branching[n]
                )));
            }
            if !(self.radii[n].is_finite() && self.radii[n] > self.radii[n - 1]) {
                return Err(Error::invalid(format!(
                    "generation radii must increase strictly (offender rho_{n})"
                )));
            }
        }
        if self.depth + 1 > self.radii.len() {
            return Err(Error::invalid(format!(
                "depth {} exceeds the generation table (max {})",
                self.depth,
                self.radii.len() - 1
            )));
        }
        if self.depth == 0 {
            return Err(Error::invalid("depth must be at least 1"));
        }
        Ok(())
    }

    /// Number of vertices in generation n: the product b_0 ... b_{n-1}.
    pub fn generation_count(&self, n: usize) -> Result<u64> {
        let mut count: u64 = 1;
        for &b in &self.branching[..n] {
            count = count
                .checked_mul(b)
                .ok_or_else(|| Error::invalid("generation count overflows u64"))?;
        }
        Ok(count)
    }
}

/// Number of edges running through radius `rho`, i.e. the product
/// b_0 ... b_{n-1} on the half-open span (rho_{n-1}, rho_n].
pub fn branching_function(spec: &RegularTreeSpec, rho: f64) -> Result<u64> {
    spec.validate()?;
    if !(rho > 0.0) {
        return Err(Error::invalid(format!(
            "branching function is defined for rho > 0, got {rho}"
        )));
    }
    let last = spec.radii[spec.depth];
    if rho > last {
        return Err(Error::invalid(format!(
            "rho = {rho} lies beyond the last materialized radius {last}"
        )));
    }
    for n in 1..=spec.depth {
        if rho <= spec.radii[n] {
            return spec.generation_count(n);
        }
    }
    unreachable!("rho <= radii[depth] guarantees a span is found");
}

/// Materializes the first `depth` generations as a metric graph oriented
/// away from the root. Deepest-generation vertices are marked as truncation
/// stand-ins; the boundary of the result is the root alone.
pub fn build_regular_tree(spec: &RegularTreeSpec) -> Result<(MetricGraph, RootedMetrics)> {
    spec.validate()?;
    let mut builder = GraphBuilder::new();
    builder.vertex("O");
    // Names of the previous generation, in child order.
    let mut prev = vec!["O".to_string()];
    let mut edge_counter = 0usize;
    for n in 1..=spec.depth {
        let b = spec.branching[n - 1];
        let length = spec.radii[n] - spec.radii[n - 1];
        let mut current = Vec::with_capacity(prev.len() * b as usize);
        for parent in &prev {
            for _ in 0..b {
                let child = format!("g{n}_{}", current.len());
                builder.edge(&format!("e{edge_counter}"), parent, &child, length);
                edge_counter += 1;
                current.push(child);
            }
        }
        prev = current;
    }
    let mut graph = builder.build();
    let truncation: BTreeSet<VertexId> = prev
        .iter()
        .map(|name| graph.vertex(name).expect("vertex was just added"))
        .collect();
    graph.set_truncation(truncation);

    let root = graph.vertex("O").expect("root was just added");
    // Radii are exact by construction: a generation-n vertex lies at rho_n.
    let mut r = vec![0.0; graph.num_vertices()];
    for n in 1..=spec.depth {
        for k in 0.. {
            match graph.vertex(&format!("g{n}_{k}")) {
                Some(v) => r[v.0] = spec.radii[n],
                None => break,
            }
        }
    }
    let jump = (1..=spec.depth)
        .map(|n| spec.radii[n] - spec.radii[n - 1])
        .fold(0.0, f64::max);
    let metrics = RootedMetrics::from_radii(root, r, jump);
    Ok((graph, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_tree_counts() {
        let spec = RegularTreeSpec::new(vec![1, 2, 2], vec![0.0, 1.0, 2.0], 2).unwrap();
        assert_eq!(spec.generation_count(1).unwrap(), 1);
        assert_eq!(spec.generation_count(2).unwrap(), 2);
        let (g, rm) = build_regular_tree(&spec).unwrap();
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.num_vertices(), 4);
        assert_eq!(g.boundary(), vec![rm.root]);
        assert_eq!(g.truncation_vertices().len(), 2);
        assert!((rm.jump_size - 1.0).abs() < 1e-15);
    }

    #[test]
    fn homogeneous_ternary_counts() {
        let spec = RegularTreeSpec::homogeneous(3, 1.0, 3).unwrap();
        assert_eq!(spec.generation_count(3).unwrap(), 9);
        let (g, _) = build_regular_tree(&spec).unwrap();
        // 1 + 3 + 9 edges.
        assert_eq!(g.num_edges(), 13);
    }

    #[test]
    fn orientation_and_radii_match_generations() {
        let spec = RegularTreeSpec::homogeneous(2, 1.5, 3).unwrap();
        let (g, rm) = build_regular_tree(&spec).unwrap();
        for e in g.edge_ids() {
            let edge = g.edge(e);
            assert!(rm.radius(edge.tail) < rm.radius(edge.head));
            assert!(
                (rm.radius(edge.head) - rm.radius(edge.tail) - edge.length).abs() < 1e-12
            );
        }
        let deep = g.vertex("g3_3").unwrap();
        let dist_check = g
            .distance(
                crate::graph::Point::Vertex(rm.root),
                crate::graph::Point::Vertex(deep),
            )
            .unwrap();
        assert!((dist_check - 4.5).abs() < 1e-12);
        assert!((rm.radius(deep) - 4.5).abs() < 1e-15);
    }

    #[test]
    fn branching_function_is_left_open_right_closed() {
        let spec = RegularTreeSpec::new(vec![1, 2, 3], vec![0.0, 1.0, 2.5], 2).unwrap();
        assert_eq!(branching_function(&spec, 0.5).unwrap(), 1);
        assert_eq!(branching_function(&spec, 1.0).unwrap(), 1);
        assert_eq!(branching_function(&spec, 1.0 + 1e-12).unwrap(), 2);
        assert_eq!(branching_function(&spec, 2.5).unwrap(), 2);
        assert!(branching_function(&spec, 0.0).is_err());
        assert!(branching_function(&spec, 2.6).is_err());
    }

    #[test]
    fn tree_jump_at_generation_radius() {
        // Jump of the step function at rho_n is (product through n-1)(b_n - 1):
        // binary tree at rho_1: 1 * (2 - 1) = 1.
        let spec = RegularTreeSpec::homogeneous(2, 1.0, 3).unwrap();
        let below = branching_function(&spec, 1.0).unwrap();
        let above = branching_function(&spec, 1.0 + 1e-12).unwrap();
        assert_eq!(above - below, 1);
    }

    #[test]
    fn rejects_degenerate_tables() {
        assert!(RegularTreeSpec::new(vec![2, 2], vec![0.0, 1.0], 1).is_err());
        assert!(RegularTreeSpec::new(vec![1, 1], vec![0.0, 1.0], 1).is_err());
        assert!(RegularTreeSpec::new(vec![1, 2], vec![0.5, 1.0], 1).is_err());
        assert!(RegularTreeSpec::new(vec![1, 2], vec![0.0, 0.0], 1).is_err());
        assert!(RegularTreeSpec::new(vec![1, 2], vec![0.0, 1.0], 5).is_err());
    }
}
