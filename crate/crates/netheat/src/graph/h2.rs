//! Degree-growth admissibility check for an oriented, exhausted graph:
//! (i) no vertex receives more edges than it sends on,
//! (ii) sphere-summed inbound degrees grow at most like C exp(theta R^beta).
//! Truncation stand-ins are exempt from (i): their missing outbound edges
//! were cut away, not absent.

use crate::graph::{Exhaustion, MetricGraph, VertexId};

/// One exhaustion level's contribution to the growth bound.
#[derive(Debug, Clone)]
pub struct H2Level {
    pub level: usize,
    pub radius: f64,
    /// Sum of inbound degrees over the sphere at this radius.
    pub inbound_sum: u64,
    /// C exp(theta R^beta) for the supplied constants.
    pub bound: f64,
    pub ok: bool,
}

#[derive(Debug, Clone)]
pub struct H2Report {
    /// Vertices with inbound degree exceeding outbound degree.
    pub part_i_witnesses: Vec<VertexId>,
    pub part_i_ok: bool,
    pub levels: Vec<H2Level>,
    pub part_ii_ok: bool,
    /// Smallest theta making part (ii) hold with equality somewhere, for the
    /// supplied C and beta: max over levels of log(sum / C) / R^beta.
    /// None when every sphere sum is zero.
    pub fitted_theta: Option<f64>,
}

/// Checks both growth conditions for constants (c, theta, beta_exp).
pub fn check_h2(
    graph: &MetricGraph,
    exhaustion: &Exhaustion,
    c: f64,
    theta: f64,
    beta_exp: f64,
) -> H2Report {
    let part_i_witnesses: Vec<VertexId> = graph
        .vertices()
        .filter(|&v| !graph.is_truncation(v))
        .filter(|&v| graph.inbound_degree(v) > graph.outbound_degree(v))
        .collect();
    let part_i_ok = part_i_witnesses.is_empty();

    let mut levels = Vec::with_capacity(exhaustion.num_levels());
    let mut fitted_theta: Option<f64> = None;
    for k in 0..exhaustion.num_levels() {
        let radius = exhaustion.radius(k);
        let inbound_sum = exhaustion.sphere_inbound_sum(graph, k);
        let bound = c * (theta * radius.powf(beta_exp)).exp();
        let ok = inbound_sum as f64 <= bound * (1.0 + 1e-12);
        if inbound_sum > 0 {
            let t = (inbound_sum as f64 / c).ln() / radius.powf(beta_exp);
            fitted_theta = Some(fitted_theta.map_or(t, |cur: f64| cur.max(t)));
        }
        levels.push(H2Level {
            level: k,
            radius,
            inbound_sum,
            bound,
            ok,
        });
    }
    let part_ii_ok = levels.iter().all(|l| l.ok);
    H2Report {
        part_i_witnesses,
        part_i_ok,
        levels,
        part_ii_ok,
        fitted_theta,
    }
}
