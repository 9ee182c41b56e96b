//! Explicit barrier supersolution for the truncated backward dual problems.
//!
//! On a graph exhausted by balls of radii R_0 < R_1 < ... the barrier is the
//! radial function
//!
//! ```text
//! eta(r, t) = sigma * exp{ K (r + r0)^beta / (t - tau - t0) },
//! ```
//!
//! defined for t <= tau < t0, so the denominator stays negative. Together
//! with the linear cap
//!
//! ```text
//! h(x) = eta(R_{n-1}, 0) / (R_n - R_{n-1}) * (R_n - r(x))
//! ```
//!
//! it dominates any dual solution with unit-bounded terminal data, which
//! forces the outer-sphere flux terms of the truncated problems to vanish as
//! the truncation level grows. `barrier_check` evaluates the closed forms,
//! cross-checks them against central finite differences, verifies the
//! backward heat inequality eta_t + eta_xx <= 0 on a sample grid, and reports
//! the vertex-flux signs and weighted sphere sums on a concrete exhaustion.

use crate::error::{Error, Result};
use crate::graph::{Exhaustion, MetricGraph, RootedMetrics};

/// Step for the central finite differences in `barrier_check`.
const FD_STEP: f64 = 1e-4;

/// Parameters of the barrier, validated and with the derived constants
/// r0, sigma, t0 computed once.
#[derive(Debug, Clone, Copy)]
pub struct BarrierParams {
    beta_exp: f64,
    k: f64,
    theta: f64,
    c0: f64,
    base_radius: f64,
    tau: f64,
    r0: f64,
    sigma: f64,
    t0: f64,
}

impl BarrierParams {
    /// Validates the raw constants and derives the offset r0, the amplitude
    /// sigma = exp{2 theta (R_{n0} + r0)^beta}, and the time margin
    /// t0 = K / (2 theta). The dual horizon must satisfy tau < t0; larger
    /// horizons do not admit the vanishing-flux limit.
    pub fn new(
        beta_exp: f64,
        k: f64,
        theta: f64,
        c0: f64,
        base_radius: f64,
        tau: f64,
    ) -> Result<BarrierParams> {
        if !(beta_exp.is_finite() && (0.0..=2.0).contains(&beta_exp)) {
            return Err(Error::invalid(format!(
                "barrier exponent beta_exp = {beta_exp} must lie in [0, 2]"
            )));
        }
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::invalid(format!(
                "barrier constant K = {k} must be positive"
            )));
        }
        if beta_exp == 2.0 && k >= 0.25 {
            return Err(Error::invalid(format!(
                "barrier constant K = {k} must be below 1/4 when beta_exp = 2"
            )));
        }
        if !(theta.is_finite() && theta > 0.0) {
            return Err(Error::invalid(format!(
                "growth rate theta = {theta} must be positive"
            )));
        }
        if !(c0.is_finite() && c0 > 1.0) {
            return Err(Error::invalid(format!(
                "exhaustion constant c0 = {c0} must exceed 1"
            )));
        }
        if !(base_radius.is_finite() && base_radius >= 0.0) {
            return Err(Error::invalid(format!(
                "base radius {base_radius} must be nonnegative"
            )));
        }
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!(
                "dual horizon tau = {tau} must be positive"
            )));
        }
        let r0 = if beta_exp == 2.0 {
            c0
        } else {
            let pinch = (k * beta_exp * beta_exp).powf(1.0 / (2.0 - beta_exp));
            (pinch - base_radius).max(c0)
        };
        let sigma = (2.0 * theta * (base_radius + r0).powf(beta_exp)).exp();
        let t0 = k / (2.0 * theta);
        if tau >= t0 {
            return Err(Error::invalid(format!(
                "dual horizon tau = {tau} must stay below t0 = K/(2 theta) = {t0}"
            )));
        }
        Ok(BarrierParams {
            beta_exp,
            k,
            theta,
            c0,
            base_radius,
            tau,
            r0,
            sigma,
            t0,
        })
    }

    pub fn beta_exp(&self) -> f64 {
        self.beta_exp
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// Radius of the exhaustion level the barrier is anchored to.
    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    fn denom(&self, t: f64) -> f64 {
        t - self.tau - self.t0
    }

    /// The barrier value sigma * exp{K (r + r0)^beta / (t - tau - t0)}.
    pub fn eta(&self, r: f64, t: f64) -> f64 {
        self.sigma * (self.k * (r + self.r0).powf(self.beta_exp) / self.denom(t)).exp()
    }

    /// Time derivative, -K (r + r0)^beta / (t - tau - t0)^2 * eta.
    pub fn eta_t(&self, r: f64, t: f64) -> f64 {
        let d = self.denom(t);
        -self.k * (r + self.r0).powf(self.beta_exp) / (d * d) * self.eta(r, t)
    }

    /// Radial derivative, K beta (r + r0)^{beta-1} / (t - tau - t0) * eta.
    /// Negative for beta > 0: the barrier decays away from the root.
    pub fn eta_x(&self, r: f64, t: f64) -> f64 {
        if self.beta_exp == 0.0 {
            return 0.0;
        }
        let d = self.denom(t);
        self.k * self.beta_exp * (r + self.r0).powf(self.beta_exp - 1.0) / d * self.eta(r, t)
    }

    /// Second radial derivative, obtained by differentiating `eta_x` once
    /// more in r.
    pub fn eta_xx(&self, r: f64, t: f64) -> f64 {
        if self.beta_exp == 0.0 {
            return 0.0;
        }
        let d = self.denom(t);
        let s = r + self.r0;
        let b = self.beta_exp;
        let quad = self.k * b * s.powf(b - 1.0) / d;
        let curv = self.k * b * (b - 1.0) * s.powf(b - 2.0) / d;
        (quad * quad + curv) * self.eta(r, t)
    }
}

/// Graph-side inputs for the flux and level-sum probes of `barrier_check`.
#[derive(Debug, Clone, Copy)]
pub struct ExhaustedGraph<'a> {
    pub graph: &'a MetricGraph,
    pub metrics: &'a RootedMetrics,
    pub exhaustion: &'a Exhaustion,
    /// Exhaustion level whose radius anchors the barrier.
    pub base_level: usize,
    /// Constant C of the sphere-degree growth bound C exp{theta R^beta}.
    pub growth_constant: f64,
}

/// Weighted outer-sphere sum at one truncation level and the growth bound it
/// must stay under when the graph's sphere degrees grow at most like
/// C exp{theta R^beta}.
#[derive(Debug, Clone, Copy)]
pub struct BarrierLevelBound {
    pub level: usize,
    pub inner_radius: f64,
    pub outer_radius: f64,
    /// Sum over outer-sphere vertices of inbound degree times the cap slope
    /// eta(R_{n-1}, 0) / (R_n - R_{n-1}).
    pub weighted_sum: f64,
    /// C exp{theta R_n^beta} times the same slope.
    pub growth_bound: f64,
    pub within_bound: bool,
}

/// Results of sampling the barrier and probing its flux signs on a graph.
#[derive(Debug, Clone)]
pub struct BarrierReport {
    /// Largest eta_t + eta_xx over the sample grid; must be <= 0.
    pub max_heat_residual: f64,
    /// Worst disagreement between central finite differences and the closed
    /// forms, measured relative to the larger of the derivative and the
    /// barrier value at the sample.
    pub max_fd_mismatch: f64,
    /// Largest |h| over outer-sphere vertices; the cap vanishes there.
    pub cap_sphere_max_abs: f64,
    /// Smallest cap vertex flux below the outer sphere; nonnegative when no
    /// vertex has more inbound than outbound edges.
    pub cap_interior_flux_min: f64,
    /// Largest cap vertex flux on the outer spheres; strictly negative, which
    /// is what absorbs the dual solution's outward flux.
    pub cap_sphere_flux_max: f64,
    /// Smallest barrier vertex flux below the outer sphere; nonnegative under
    /// the same degree condition.
    pub eta_flux_min: f64,
    /// One row per truncation level above the base.
    pub levels: Vec<BarrierLevelBound>,
    /// Largest ratio of consecutive weighted sums, if two levels have
    /// positive sums. Below 1 means the sums decrease geometrically.
    pub max_level_ratio: Option<f64>,
}

impl BarrierReport {
    /// The backward heat inequality held on the whole sample grid.
    pub fn heat_ok(&self) -> bool {
        self.max_heat_residual <= 0.0
    }

    /// All vertex-flux signs came out as the comparison argument needs.
    pub fn fluxes_ok(&self) -> bool {
        self.cap_interior_flux_min >= 0.0
            && self.cap_sphere_flux_max < 0.0
            && self.eta_flux_min >= 0.0
    }

    /// Weighted sphere sums shrink level over level and stay under the
    /// growth bound, so the truncation flux terms vanish in the limit.
    pub fn sums_vanishing(&self) -> bool {
        self.levels.iter().all(|l| l.within_bound) && self.max_level_ratio.is_some_and(|q| q < 1.0)
    }
}

/// Counts inbound and outbound edges per vertex within one exhaustion level.
fn level_degrees(graph: &MetricGraph, exhaustion: &Exhaustion, level: usize) -> Vec<(u32, u32)> {
    let mut deg = vec![(0u32, 0u32); graph.num_vertices()];
    for &eid in exhaustion.edges(level) {
        let e = graph.edge(eid);
        deg[e.head.0].0 += 1;
        deg[e.tail.0].1 += 1;
    }
    deg
}

/// Samples the barrier on `r_samples` x `t_samples` and probes its vertex
/// fluxes on the exhausted graph. Every level above the base gets a
/// weighted-sum row.
pub fn barrier_check(
    p: &BarrierParams,
    r_samples: &[f64],
    t_samples: &[f64],
    setting: &ExhaustedGraph,
) -> Result<BarrierReport> {
    if r_samples.is_empty() || t_samples.is_empty() {
        return Err(Error::invalid("barrier check needs r and t samples"));
    }
    for &r in r_samples {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::invalid(format!(
                "barrier r sample {r} must be finite and nonnegative"
            )));
        }
    }
    for &t in t_samples {
        if !(t.is_finite() && t > 0.0 && t <= p.tau() * (1.0 + 1e-12)) {
            return Err(Error::invalid(format!(
                "barrier t sample {t} must lie in (0, tau] with tau = {}",
                p.tau()
            )));
        }
    }
    if !(setting.growth_constant.is_finite() && setting.growth_constant > 0.0) {
        return Err(Error::invalid(format!(
            "growth constant C = {} must be positive",
            setting.growth_constant
        )));
    }
    let exhaustion = setting.exhaustion;
    let n0 = setting.base_level;
    if n0 + 1 >= exhaustion.num_levels() {
        return Err(Error::invalid(format!(
            "barrier check needs a level above the base, got level {n0} of {}",
            exhaustion.num_levels()
        )));
    }
    let anchor = exhaustion.radius(n0);
    if (anchor - p.base_radius()).abs() > 1e-9 * anchor.max(1.0) {
        return Err(Error::invalid(format!(
            "barrier base radius {} does not match exhaustion radius {anchor} at level {n0}",
            p.base_radius()
        )));
    }

    let mut max_heat_residual = f64::NEG_INFINITY;
    let mut max_fd_mismatch: f64 = 0.0;
    for &r in r_samples {
        for &t in t_samples {
            let eta = p.eta(r, t);
            let et = p.eta_t(r, t);
            let ex = p.eta_x(r, t);
            let exx = p.eta_xx(r, t);
            max_heat_residual = max_heat_residual.max(et + exx);

            let d = FD_STEP;
            let fd_t = (p.eta(r, t + d) - p.eta(r, t - d)) / (2.0 * d);
            let fd_x = (p.eta(r + d, t) - p.eta(r - d, t)) / (2.0 * d);
            let fd_xx = (p.eta(r + d, t) - 2.0 * eta + p.eta(r - d, t)) / (d * d);
            for (fd, closed) in [(fd_t, et), (fd_x, ex), (fd_xx, exx)] {
                max_fd_mismatch = max_fd_mismatch.max((fd - closed).abs() / closed.abs().max(eta));
            }
        }
    }

    let mut cap_sphere_max_abs: f64 = 0.0;
    let mut cap_interior_flux_min = f64::INFINITY;
    let mut cap_sphere_flux_max = f64::NEG_INFINITY;
    let mut eta_flux_min = f64::INFINITY;
    let mut levels = Vec::new();
    for n in (n0 + 1)..exhaustion.num_levels() {
        let inner = exhaustion.radius(n - 1);
        let outer = exhaustion.radius(n);
        let slope = p.eta(inner, 0.0) / (outer - inner);
        let deg = level_degrees(setting.graph, exhaustion, n);
        let sphere = exhaustion.sphere(n);

        let mut weighted_sum = 0.0;
        for &v in sphere {
            let (inbound, _) = deg[v.0];
            cap_sphere_max_abs =
                cap_sphere_max_abs.max((slope * (outer - setting.metrics.radius(v))).abs());
            cap_sphere_flux_max = cap_sphere_flux_max.max(-f64::from(inbound) * slope);
            weighted_sum += f64::from(inbound) * slope;
        }
        for v in exhaustion.region(n).difference(sphere) {
            let (inbound, outbound) = deg[v.0];
            let net = f64::from(inbound) - f64::from(outbound);
            cap_interior_flux_min = cap_interior_flux_min.min(-net * slope);
            for &t in t_samples {
                eta_flux_min = eta_flux_min.min(net * p.eta_x(setting.metrics.radius(*v), t));
            }
        }

        let growth_bound =
            setting.growth_constant * (p.theta() * outer.powf(p.beta_exp())).exp() * slope;
        levels.push(BarrierLevelBound {
            level: n,
            inner_radius: inner,
            outer_radius: outer,
            weighted_sum,
            growth_bound,
            within_bound: weighted_sum <= growth_bound * (1.0 + 1e-12),
        });
    }

    let max_level_ratio = levels
        .windows(2)
        .filter(|w| w[0].weighted_sum > 0.0 && w[1].weighted_sum > 0.0)
        .map(|w| w[1].weighted_sum / w[0].weighted_sum)
        .max_by(f64::total_cmp);

    Ok(BarrierReport {
        max_heat_residual,
        max_fd_mismatch,
        cap_sphere_max_abs,
        cap_interior_flux_min,
        cap_sphere_flux_max,
        eta_flux_min,
        levels,
        max_level_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_regular_tree, RegularTreeSpec};

    fn desk_params() -> BarrierParams {
        BarrierParams::new(1.0, 1.0, 0.25, 2.0, 2.0, 1.0).unwrap()
    }

    struct Tree {
        graph: MetricGraph,
        metrics: RootedMetrics,
        exhaustion: Exhaustion,
    }

    impl Tree {
        fn binary(depth: usize) -> Tree {
            let spec = RegularTreeSpec::homogeneous(2, 1.0, depth).unwrap();
            let (graph, metrics) = build_regular_tree(&spec).unwrap();
            let radii: Vec<f64> = (1..=depth).map(|n| n as f64).collect();
            let exhaustion = Exhaustion::build(&graph, &metrics, &radii, 2.0).unwrap();
            Tree {
                graph,
                metrics,
                exhaustion,
            }
        }

        fn setting(&self, base_level: usize, growth_constant: f64) -> ExhaustedGraph<'_> {
            ExhaustedGraph {
                graph: &self.graph,
                metrics: &self.metrics,
                exhaustion: &self.exhaustion,
                base_level,
                growth_constant,
            }
        }
    }

    #[test]
    fn derived_constants_match_the_hand_computation() {
        let p = desk_params();
        assert_eq!(p.r0(), 2.0);
        assert_eq!(p.t0(), 2.0);
        assert!((p.sigma() - 7.38905609893065).abs() < 1e-12);

        let eta = p.eta(0.0, 0.0);
        assert!((eta - 3.793667894683177).abs() < 1e-12);
        assert!((p.eta_t(0.0, 0.0) + 2.0 / 9.0 * eta).abs() < 1e-12);
        assert!((p.eta_xx(0.0, 0.0) - eta / 9.0).abs() < 1e-12);
        assert!((p.eta_t(0.0, 0.0) + p.eta_xx(0.0, 0.0) + eta / 9.0).abs() < 1e-12);
    }

    #[test]
    fn inadmissible_parameters_are_rejected() {
        assert!(BarrierParams::new(1.0, 1.0, 0.25, 2.0, 2.0, 2.0).is_err());
        assert!(BarrierParams::new(1.0, 1.0, 0.25, 2.0, 2.0, 2.5).is_err());
        assert!(BarrierParams::new(2.0, 0.3, 0.25, 2.0, 2.0, 0.1).is_err());
        assert!(BarrierParams::new(2.5, 1.0, 0.25, 2.0, 2.0, 1.0).is_err());
        assert!(BarrierParams::new(1.0, 1.0, 0.25, 1.0, 2.0, 1.0).is_err());
        assert!(BarrierParams::new(1.0, -1.0, 0.25, 2.0, 2.0, 1.0).is_err());
        assert!(BarrierParams::new(1.0, 1.0, 0.25, 2.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn quadratic_exponent_admits_small_k_only() {
        let p = BarrierParams::new(2.0, 0.2, 0.25, 2.0, 2.0, 0.3).unwrap();
        assert_eq!(p.r0(), 2.0);
        assert!((p.t0() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn heat_inequality_and_derivatives_across_the_exponent_range() {
        let tree = Tree::binary(5);
        let r: Vec<f64> = (0..40).map(|i| f64::from(i) * 5.0 / 39.0).collect();
        for (beta_exp, k, theta, tau) in [
            (0.0, 1.0, 0.25, 1.0),
            (1.0, 1.0, 0.25, 1.0),
            (2.0, 0.2, 0.025, 1.0),
        ] {
            let p = BarrierParams::new(beta_exp, k, theta, 2.0, 2.0, tau).unwrap();
            let t: Vec<f64> = (1..=20).map(|i| f64::from(i) * tau / 20.0).collect();
            let rep = barrier_check(&p, &r, &t, &tree.setting(1, 0.5)).unwrap();
            assert!(rep.heat_ok(), "residual {}", rep.max_heat_residual);
            assert!(rep.max_fd_mismatch < 1e-6, "fd {}", rep.max_fd_mismatch);
            assert!(rep.fluxes_ok());
            assert!(rep.cap_sphere_max_abs < 1e-12);
            if beta_exp == 0.0 {
                assert_eq!(rep.eta_flux_min, 0.0);
            }
        }
    }

    #[test]
    fn weighted_sums_decrease_on_the_binary_tree() {
        let theta = std::f64::consts::LN_2;
        let t0 = 1.0 / (2.0 * theta);
        let p = BarrierParams::new(1.0, 1.0, theta, 2.0, 1.0, 0.5 * t0).unwrap();
        let tree = Tree::binary(8);
        let t = [0.25 * t0, 0.5 * t0];
        let rep = barrier_check(&p, &[0.0, 1.0], &t, &tree.setting(0, 0.5)).unwrap();

        assert_eq!(rep.levels.len(), 7);
        let expect_ratio = 2.0 * (-p.k() / (p.tau() + p.t0())).exp();
        let got = rep.max_level_ratio.unwrap();
        assert!((got - expect_ratio).abs() < 1e-12, "ratio {got}");
        assert!(rep.sums_vanishing());
        for row in &rep.levels {
            assert!(row.weighted_sum <= row.growth_bound * (1.0 + 1e-12));
            assert!(row.growth_bound <= row.weighted_sum * (1.0 + 1e-12));
        }
    }

    #[test]
    fn sample_and_anchor_preconditions_are_enforced() {
        let p = desk_params();
        let tree = Tree::binary(4);
        let ok_t = [0.5];
        assert!(barrier_check(&p, &[-1.0], &ok_t, &tree.setting(1, 0.5)).is_err());
        assert!(barrier_check(&p, &[0.0], &[1.5], &tree.setting(1, 0.5)).is_err());
        assert!(barrier_check(&p, &[0.0], &[0.0], &tree.setting(1, 0.5)).is_err());
        assert!(barrier_check(&p, &[0.0], &ok_t, &tree.setting(0, 0.5)).is_err());
        assert!(barrier_check(&p, &[0.0], &ok_t, &tree.setting(3, 0.5)).is_err());
        assert!(barrier_check(&p, &[0.0], &ok_t, &tree.setting(1, 0.0)).is_err());
    }
}
