//! Sub/supersolution checkers, trajectory comparison, and the monotone
//! iteration to extremal stationary solutions.
//!
//! A subsolution candidate must satisfy, in the discrete sense: the interior
//! inequality `u_t <= u_xx + f(u)`, ordering against the initial data, a
//! nonpositive outer-derivative sum at interior vertices, and the boundary
//! inequality (nonpositive outer derivative for Neumann, nonpositive value
//! for Dirichlet). Supersolutions reverse every inequality. Time derivatives
//! use the backward difference and reactions the earlier sample, matching
//! the implicit-diffusion stepper, so its exact discrete solutions produce
//! zero interior residual on lumped-mass grids.

pub mod barrier;

use nalgebra::DMatrix;

use crate::dynamics::{steps_for, Scheme, Stepper, Trajectory};
use crate::error::{Error, Result};
use crate::fem::{assemble, flux_sum, GraphField, GraphGrid, MassMode, OperatorPair};
use crate::nonlinearity::Nonlinearity;
use crate::textio::fmt_g17;

/// Which side of the order relation a candidate claims.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrderKind {
    Sub,
    Super,
}

impl OrderKind {
    /// Multiplier that turns each inequality into `residual <= 0`.
    pub(crate) fn sign(&self) -> f64 {
        match self {
            OrderKind::Sub => 1.0,
            OrderKind::Super => -1.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            OrderKind::Sub => "sub",
            OrderKind::Super => "super",
        }
    }
}

/// Boundary condition the candidate is checked against. The grid's pinned
/// set realizes Dirichlet values; this flag selects which inequality the
/// checker applies at degree-one vertices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Neumann,
    Dirichlet,
}

/// A candidate order function: a single profile for the stationary
/// conditions, or a trajectory for the time-dependent ones.
#[derive(Clone, Copy)]
pub enum Candidate<'a> {
    Stationary(&'a GraphField),
    Evolving(&'a Trajectory),
}

/// Worst violation of one condition and where it was attained.
#[derive(Clone, Debug)]
pub struct ConditionResidual {
    pub worst: f64,
    pub location: String,
}

impl ConditionResidual {
    pub(crate) fn vacuous() -> Self {
        ConditionResidual {
            worst: 0.0,
            location: "-".to_string(),
        }
    }

    pub(crate) fn update(&mut self, value: f64, location: impl FnOnce() -> String) {
        if value > self.worst {
            self.worst = value;
            self.location = location();
        }
    }
}

/// Residuals of the four order conditions for one candidate.
#[derive(Clone, Debug)]
pub struct OrderReport {
    pub kind: OrderKind,
    pub stationary: bool,
    pub tol: f64,
    pub interior: ConditionResidual,
    pub initial: ConditionResidual,
    pub flux: ConditionResidual,
    pub boundary: ConditionResidual,
    /// Free-form remarks about how the conditions were derived, e.g. which
    /// inequality directions were obtained by reversal. Not rendered.
    pub notes: Vec<String>,
}

impl OrderReport {
    pub fn worst(&self) -> f64 {
        self.interior
            .worst
            .max(self.initial.worst)
            .max(self.flux.worst)
            .max(self.boundary.worst)
    }

    pub fn pass(&self) -> bool {
        self.worst() <= self.tol
    }

    fn rows(&self) -> [(&'static str, &ConditionResidual); 4] {
        [
            ("interior", &self.interior),
            ("initial", &self.initial),
            ("vertex-flux", &self.flux),
            ("boundary", &self.boundary),
        ]
    }

    /// One line per condition: `<condition> <worst> <location> <pass|fail>`.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for (name, r) in self.rows() {
            let verdict = if r.worst <= self.tol { "pass" } else { "fail" };
            out.push_str(&format!(
                "{name} {} {} {verdict}\n",
                fmt_g17(r.worst),
                r.location
            ));
        }
        out
    }

    /// Machine-readable twin of `render_text`.
    pub fn render_csv(&self) -> String {
        let mut out = String::from("condition,worst,location,verdict\n");
        for (name, r) in self.rows() {
            let verdict = if r.worst <= self.tol { "pass" } else { "fail" };
            out.push_str(&format!(
                "{name},{},{},{verdict}\n",
                fmt_g17(r.worst),
                r.location
            ));
        }
        out
    }
}

/// Scale-aware default tolerance for order checks: generous against the
/// scheme's own O(h^2 + dt) residuals, tight against genuine violations.
pub fn default_order_tol(
    grid: &GraphGrid,
    dt: f64,
    f: &Nonlinearity,
    fields: &[&GraphField],
) -> f64 {
    let h_max = grid
        .graph()
        .edge_ids()
        .map(|e| grid.width(e))
        .fold(0.0, f64::max);
    let f_scale = fields
        .iter()
        .flat_map(|u| u.values.iter())
        .map(|&x| f.eval(x).abs())
        .fold(0.0, f64::max);
    10.0 * (h_max * h_max + dt) * (1.0 + f_scale)
}

fn require_two_cells(grid: &GraphGrid) -> Result<()> {
    for e in grid.graph().edge_ids() {
        if grid.cells(e) < 2 {
            return Err(Error::invalid(format!(
                "edge {} has a single cell; order checks need at least two",
                grid.graph().edge(e).name
            )));
        }
    }
    Ok(())
}

/// Checks the four sub/supersolution conditions and reports the worst
/// violation of each. `u0` supplies the initial data for the time-dependent
/// ordering; without it that condition is skipped.
pub fn check_order_conditions(
    candidate: Candidate,
    kind: OrderKind,
    stationary: bool,
    f: &Nonlinearity,
    bc: BoundaryKind,
    u0: Option<&GraphField>,
    tol: f64,
) -> Result<OrderReport> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("tolerance must be finite and nonnegative, got {tol}")));
    }
    match (&candidate, stationary) {
        (Candidate::Evolving(_), true) => {
            return Err(Error::invalid(
                "a trajectory cannot witness the stationary conditions; pass stationary = false",
            ));
        }
        (Candidate::Stationary(_), false) => {
            return Err(Error::invalid(
                "a single profile cannot witness the time-dependent conditions; pass stationary = true",
            ));
        }
        _ => {}
    }

    let grid = match candidate {
        Candidate::Stationary(q) => q.grid().clone(),
        Candidate::Evolving(traj) => traj.grid().clone(),
    };
    require_two_cells(&grid)?;
    let graph = grid.graph().clone();
    let s = kind.sign();

    let mut interior = ConditionResidual::vacuous();
    let mut initial = ConditionResidual::vacuous();
    let mut flux = ConditionResidual::vacuous();
    let mut boundary = ConditionResidual::vacuous();

    let flux_vertices: Vec<_> = graph
        .interior_vertices()
        .into_iter()
        .filter(|&v| !grid.is_pinned(v))
        .collect();
    let boundary_vertices = graph.boundary();

    let mut check_spatial = |field: &GraphField, when: Option<f64>| -> Result<()> {
        let at = |place: String| match when {
            Some(t) => format!("{place} t {t:.6}"),
            None => place,
        };
        for &v in &flux_vertices {
            let value = s * flux_sum(field, v)?;
            flux.update(value.max(0.0), || at(format!("vertex {}", graph.vertex_name(v))));
        }
        for &v in &boundary_vertices {
            let value = match bc {
                BoundaryKind::Neumann => s * flux_sum(field, v)?,
                BoundaryKind::Dirichlet => {
                    let dof_value = match grid.vertex_dof(v) {
                        Some(i) => field.values[i],
                        None => 0.0,
                    };
                    s * dof_value
                }
            };
            boundary.update(value.max(0.0), || {
                at(format!("vertex {}", graph.vertex_name(v)))
            });
        }
        Ok(())
    };

    match candidate {
        Candidate::Stationary(q) => {
            for e in graph.edge_ids() {
                let h = grid.width(e);
                let vals = q.edge_values(e);
                for j in 1..vals.len() - 1 {
                    let d2 = (vals[j - 1] - 2.0 * vals[j] + vals[j + 1]) / (h * h);
                    let value = s * -(d2 + f.eval(vals[j]));
                    interior.update(value.max(0.0), || {
                        format!("edge {} node {j}", graph.edge(e).name)
                    });
                }
            }
            check_spatial(q, None)?;
        }
        Candidate::Evolving(traj) => {
            if traj.len() < 2 {
                return Err(Error::invalid(
                    "trajectory has a single sample; time-dependent checks need at least two",
                ));
            }
            if let Some(u0) = u0 {
                if !u0.grid().same_layout(&grid) {
                    return Err(Error::GridMismatch(
                        "initial data does not live on the candidate's grid".into(),
                    ));
                }
                let first = traj.values(0);
                for e in graph.edge_ids() {
                    let cand = traj.field(0).edge_values(e);
                    let data = u0.edge_values(e);
                    for (j, (c, d)) in cand.iter().zip(&data).enumerate() {
                        initial.update((s * (c - d)).max(0.0), || {
                            format!("edge {} node {j} t 0", graph.edge(e).name)
                        });
                    }
                }
                debug_assert_eq!(first.len(), u0.values.len());
            }
            for k in 1..traj.len() {
                let t = traj.time(k);
                let dt_k = t - traj.time(k - 1);
                let field = traj.field(k);
                let prev = traj.field(k - 1);
                for e in graph.edge_ids() {
                    let h = grid.width(e);
                    let vals = field.edge_values(e);
                    let old = prev.edge_values(e);
                    for j in 1..vals.len() - 1 {
                        let ut = (vals[j] - old[j]) / dt_k;
                        let d2 = (vals[j - 1] - 2.0 * vals[j] + vals[j + 1]) / (h * h);
                        let value = s * (ut - d2 - f.eval(old[j]));
                        interior.update(value.max(0.0), || {
                            format!("edge {} node {j} t {t:.6}", graph.edge(e).name)
                        });
                    }
                }
                check_spatial(&field, Some(t))?;
            }
        }
    }

    Ok(OrderReport {
        kind,
        stationary,
        tol,
        interior,
        initial,
        flux,
        boundary,
        notes: Vec::new(),
    })
}

/// Signed minimum of `upper - lower` over all shared samples and DOFs.
/// A value no smaller than the scheme tolerance certifies the comparison.
pub fn compare(lower: &Trajectory, upper: &Trajectory) -> Result<f64> {
    if !lower.aligned_with(upper) {
        return Err(Error::GridMismatch(
            "compared trajectories must share a grid and sample times".into(),
        ));
    }
    let mut min = f64::INFINITY;
    for k in 0..lower.len() {
        for (lo, up) in lower.values(k).iter().zip(upper.values(k).iter()) {
            min = min.min(up - lo);
        }
    }
    Ok(min)
}

/// Result of the two-sided monotone flow.
#[derive(Debug)]
pub struct MonotoneOutcome {
    /// Limit of the flow started from the subsolution (minimal limit).
    pub lower_limit: GraphField,
    /// Limit of the flow started from the supersolution (maximal limit).
    pub upper_limit: GraphField,
    pub lower_traj: Trajectory,
    pub upper_traj: Trajectory,
    pub lower_converged: bool,
    pub upper_converged: bool,
}

/// Flows a stationary subsolution up and a stationary supersolution down
/// until both become stationary, certifying per-step monotonicity and the
/// sandwich ordering along the way.
///
/// Stationarity means the per-step change drops below `eps_stat * dt`. Runs
/// use lumped mass, which makes the monotonicity assertions exact scheme
/// properties rather than approximations.
pub fn monotone_iterate(
    q_lower: &GraphField,
    q_upper: &GraphField,
    f: &Nonlinearity,
    bc: BoundaryKind,
    dt: f64,
    eps_stat: f64,
    t_max: f64,
) -> Result<MonotoneOutcome> {
    if !q_lower.grid().same_layout(q_upper.grid()) {
        return Err(Error::GridMismatch(
            "the sub/supersolution pair must share a grid".into(),
        ));
    }
    if !(eps_stat > 0.0) {
        return Err(Error::invalid("stationarity threshold must be positive"));
    }
    let grid = q_lower.grid().clone();

    let tol = default_order_tol(&grid, 0.0, f, &[q_lower, q_upper]);
    let report = check_order_conditions(
        Candidate::Stationary(q_lower),
        OrderKind::Sub,
        true,
        f,
        bc,
        None,
        tol,
    )?;
    if !report.pass() {
        return Err(Error::OrderPrecondition(format!(
            "lower candidate is not a stationary subsolution (tol {tol:.3e}):\n{}",
            report.render_text()
        )));
    }
    let report = check_order_conditions(
        Candidate::Stationary(q_upper),
        OrderKind::Super,
        true,
        f,
        bc,
        None,
        tol,
    )?;
    if !report.pass() {
        return Err(Error::OrderPrecondition(format!(
            "upper candidate is not a stationary supersolution (tol {tol:.3e}):\n{}",
            report.render_text()
        )));
    }
    for (lo, up) in q_lower.values.iter().zip(q_upper.values.iter()) {
        if lo > up {
            return Err(Error::OrderPrecondition(format!(
                "candidates are not ordered: lower value {lo} exceeds upper value {up}"
            )));
        }
    }

    // The explicit reaction map u + dt f(u) must be nondecreasing on the
    // order interval, otherwise the flows are not monotone in time.
    let lo_bound = q_lower.min_value();
    let hi_bound = q_upper.max_value();
    let steepest_drop = (-f.min_deriv(lo_bound, hi_bound)).max(0.0);
    if dt * steepest_drop > 1.0 + 1e-12 {
        return Err(Error::invalid(format!(
            "time step {dt} exceeds the monotone limit {:.6e} for this reaction on [{lo_bound}, {hi_bound}]",
            1.0 / steepest_drop
        )));
    }

    let ops = assemble(&grid, MassMode::Lumped);
    let stepper = Stepper::new(&ops, dt, Scheme::ImexEuler)?;
    let n_max = steps_for(t_max, dt)?;
    let stride = if n_max <= 1000 { 1 } else { n_max.div_ceil(1000) };

    let mut u1 = q_lower.values.clone();
    let mut u2 = q_upper.values.clone();
    let mut times = vec![0.0];
    let mut samples1 = vec![u1.clone()];
    let mut samples2 = vec![u2.clone()];
    let mut lower_converged = false;
    let mut upper_converged = false;
    let mut last_recorded = 0;

    for k in 1..=n_max {
        let t = dt * k as f64;
        let next1 = stepper.advance(&u1, f);
        let next2 = stepper.advance(&u2, f);

        let mut diff1: f64 = 0.0;
        let mut diff2: f64 = 0.0;
        for i in 0..u1.len() {
            let d1 = next1[i] - u1[i];
            let d2 = next2[i] - u2[i];
            if d1 < -1e-10 {
                return Err(Error::solver(format!(
                    "lower flow decreased by {:.3e} at t = {t}",
                    -d1
                )));
            }
            if d2 > 1e-10 {
                return Err(Error::solver(format!(
                    "upper flow increased by {d2:.3e} at t = {t}"
                )));
            }
            if next1[i] < q_lower.values[i] - 1e-8
                || next1[i] > next2[i] + 1e-8
                || next2[i] > q_upper.values[i] + 1e-8
            {
                return Err(Error::solver(format!(
                    "sandwich ordering failed at t = {t}: {} <= {} <= {} <= {}",
                    q_lower.values[i], next1[i], next2[i], q_upper.values[i]
                )));
            }
            diff1 = diff1.max(d1.abs());
            diff2 = diff2.max(d2.abs());
        }
        u1 = next1;
        u2 = next2;
        lower_converged = lower_converged || diff1 < eps_stat * dt;
        upper_converged = upper_converged || diff2 < eps_stat * dt;

        let done = lower_converged && upper_converged;
        if k % stride == 0 || k == n_max || done {
            times.push(t);
            samples1.push(u1.clone());
            samples2.push(u2.clone());
            last_recorded = k;
        }
        if done {
            break;
        }
    }
    debug_assert!(last_recorded > 0);

    let lower_traj = Trajectory::from_parts(
        grid.clone(),
        times.clone(),
        samples1,
        dt,
        Scheme::ImexEuler,
    );
    let upper_traj = Trajectory::from_parts(grid.clone(), times, samples2, dt, Scheme::ImexEuler);
    Ok(MonotoneOutcome {
        lower_limit: GraphField::new(grid.clone(), u1)?,
        upper_limit: GraphField::new(grid, u2)?,
        lower_traj,
        upper_traj,
        lower_converged,
        upper_converged,
    })
}

/// Newton iteration for the discrete stationary system `K q = M f(q)`.
/// The boundary condition is the one built into the grid behind `ops`.
/// Serves as an independent oracle for the monotone-iteration limits.
pub fn solve_stationary(
    u_init: &GraphField,
    f: &Nonlinearity,
    ops: &OperatorPair,
    newton_tol: f64,
    max_iters: usize,
) -> Result<GraphField> {
    if u_init.grid().num_dofs() != ops.dim() {
        return Err(Error::GridMismatch(format!(
            "initial guess has {} degrees of freedom but the operators have {}",
            u_init.grid().num_dofs(),
            ops.dim()
        )));
    }
    if !(newton_tol > 0.0) {
        return Err(Error::invalid("Newton tolerance must be positive"));
    }
    if max_iters == 0 {
        return Err(Error::invalid("Newton needs at least one iteration"));
    }
    let k_dense = ops.stiffness.to_dense();
    let m_dense = ops.mass.to_dense();
    let mut q = u_init.values.clone();

    for _ in 0..max_iters {
        let residual = &k_dense * &q - &m_dense * f.eval_vector(&q);
        let res_norm = residual.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if res_norm <= newton_tol {
            return GraphField::new(u_init.grid().clone(), q);
        }
        let jac = &k_dense - &m_dense * DMatrix::from_diagonal(&q.map(|x| f.deriv(x)));
        let lu = jac.clone().lu();
        let pivots = lu.u().diagonal();
        let pivot_max = pivots.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let pivot_min = pivots.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
        if !(pivot_min > 1e-12 * pivot_max) {
            return Err(Error::solver("degenerate linearization"));
        }
        let delta = lu
            .solve(&residual)
            .ok_or_else(|| Error::solver("degenerate linearization"))?;
        let back = &jac * &delta - &residual;
        let back_norm = back.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if !delta.iter().all(|x| x.is_finite()) || back_norm > 1e-8 * (1.0 + res_norm) {
            return Err(Error::solver("degenerate linearization"));
        }
        q -= delta;
    }
    Err(Error::solver(format!(
        "stationary Newton did not converge within {max_iters} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::evolve;
    use crate::graph::{GraphBuilder, MetricGraph};
    use crate::sparse::generalized_eigenvalues;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn three_star() -> Arc<MetricGraph> {
        let mut b = GraphBuilder::new();
        b.edge("e1", "c", "a", 1.0);
        b.edge("e2", "c", "b", 1.0);
        b.edge("e3", "c", "d", 1.0);
        Arc::new(b.build())
    }

    fn single_edge() -> Arc<MetricGraph> {
        let mut b = GraphBuilder::new();
        b.edge("e", "p", "q", 1.0);
        Arc::new(b.build())
    }

    fn bistable() -> Nonlinearity {
        Nonlinearity::Bistable { threshold: 0.3 }
    }

    #[test]
    fn zero_profile_is_sub_and_super_with_zero_residuals() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let q = GraphField::zeros(grid);
        for kind in [OrderKind::Sub, OrderKind::Super] {
            let report = check_order_conditions(
                Candidate::Stationary(&q),
                kind,
                true,
                &Nonlinearity::Logistic,
                BoundaryKind::Neumann,
                None,
                0.0,
            )
            .unwrap();
            assert!(report.pass(), "{}", report.render_text());
            assert_eq!(report.worst(), 0.0);
        }
    }

    #[test]
    fn constant_above_threshold_is_a_bistable_subsolution() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let q = GraphField::constant(grid, 0.4);
        let sub = check_order_conditions(
            Candidate::Stationary(&q),
            OrderKind::Sub,
            true,
            &bistable(),
            BoundaryKind::Neumann,
            None,
            1e-6,
        )
        .unwrap();
        assert!(sub.pass(), "{}", sub.render_text());

        // As a supersolution it must fail: f(0.4) = 0.024 > 0.
        let sup = check_order_conditions(
            Candidate::Stationary(&q),
            OrderKind::Super,
            true,
            &bistable(),
            BoundaryKind::Neumann,
            None,
            1e-6,
        )
        .unwrap();
        assert!(!sup.pass());
        assert!((sup.interior.worst - 0.024).abs() < 1e-12);
    }

    #[test]
    fn constant_equilibrium_is_a_supersolution_with_equality() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let q = GraphField::constant(grid, 1.0);
        let report = check_order_conditions(
            Candidate::Stationary(&q),
            OrderKind::Super,
            true,
            &bistable(),
            BoundaryKind::Neumann,
            None,
            0.0,
        )
        .unwrap();
        assert!(report.pass(), "{}", report.render_text());
        assert_eq!(report.worst(), 0.0);
    }

    #[test]
    fn discrete_solutions_pass_both_time_dependent_checks() {
        let grid = GraphGrid::build_neumann(three_star(), 0.125).unwrap();
        let ops = assemble(&grid, MassMode::Lumped);
        let rough = GraphField::from_edge_fn(grid.clone(), |e, x| {
            0.3 + 0.2 * (2.0 * x + e.0 as f64).sin().abs()
        });
        let f = Nonlinearity::Logistic;
        // Let diffusion smooth the kinks first; the scheme only matches the
        // vertex-flux stencil on states without early-time boundary layers.
        let warm = evolve(&rough, 0.3, 0.01, &f, &ops).unwrap();
        let u0 = warm.last_field();
        let traj = evolve(&u0, 0.2, 0.01, &f, &ops).unwrap();
        let tol = default_order_tol(&grid, 0.01, &f, &[&u0]);
        for kind in [OrderKind::Sub, OrderKind::Super] {
            let report = check_order_conditions(
                Candidate::Evolving(&traj),
                kind,
                false,
                &f,
                BoundaryKind::Neumann,
                Some(&u0),
                tol,
            )
            .unwrap();
            assert!(
                report.pass(),
                "{} check failed:\n{}",
                kind.label(),
                report.render_text()
            );
        }
    }

    #[test]
    fn frozen_state_fails_the_supersolution_check_under_growth() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let ops = assemble(&grid, MassMode::Lumped);
        let u0 = GraphField::constant(grid, 0.2);
        // Evolve with no reaction: the state stays 0.2 while logistic growth
        // would demand u_t >= f(0.2) = 0.16 of a supersolution.
        let traj = evolve(&u0, 0.2, 0.01, &Nonlinearity::Zero, &ops).unwrap();
        let report = check_order_conditions(
            Candidate::Evolving(&traj),
            OrderKind::Super,
            false,
            &Nonlinearity::Logistic,
            BoundaryKind::Neumann,
            Some(&u0),
            1e-3,
        )
        .unwrap();
        assert!(!report.pass());
        assert!((report.interior.worst - 0.16).abs() < 1e-12);

        let sub = check_order_conditions(
            Candidate::Evolving(&traj),
            OrderKind::Sub,
            false,
            &Nonlinearity::Logistic,
            BoundaryKind::Neumann,
            Some(&u0),
            1e-3,
        )
        .unwrap();
        assert!(sub.pass());
    }

    #[test]
    fn candidate_shape_must_match_the_stationary_flag() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let ops = assemble(&grid, MassMode::Lumped);
        let q = GraphField::zeros(grid.clone());
        let traj = evolve(&q, 0.1, 0.05, &Nonlinearity::Zero, &ops).unwrap();
        let err = check_order_conditions(
            Candidate::Evolving(&traj),
            OrderKind::Sub,
            true,
            &Nonlinearity::Zero,
            BoundaryKind::Neumann,
            None,
            0.0,
        )
        .expect_err("trajectory with stationary flag");
        assert!(matches!(err, Error::InvalidInput(_)));
        let err = check_order_conditions(
            Candidate::Stationary(&q),
            OrderKind::Sub,
            false,
            &Nonlinearity::Zero,
            BoundaryKind::Neumann,
            None,
            0.0,
        )
        .expect_err("profile with evolving flag");
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn ordered_logistic_flows_stay_ordered() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let ops = assemble(&grid, MassMode::Lumped);
        let f = Nonlinearity::Logistic;
        let lower = evolve(&GraphField::constant(grid.clone(), 0.2), 1.0, 0.01, &f, &ops).unwrap();
        let upper = evolve(&GraphField::constant(grid.clone(), 0.8), 1.0, 0.01, &f, &ops).unwrap();
        assert!(compare(&lower, &upper).unwrap() >= -1e-8);
        assert_eq!(compare(&lower, &lower).unwrap(), 0.0);

        // Swapping the roles reports the violation honestly: at t = 0 the
        // would-be upper solution sits 0.2 below the lower one.
        let zero = evolve(
            &GraphField::zeros(grid),
            1.0,
            0.01,
            &f,
            &ops,
        )
        .unwrap();
        let min = compare(&lower, &zero).unwrap();
        assert!(min <= -0.2 + 1e-12, "min = {min}");
    }

    #[test]
    fn bistable_iteration_meets_at_the_stable_equilibrium() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let q_lower = GraphField::constant(grid.clone(), 0.4);
        let q_upper = GraphField::constant(grid.clone(), 1.0);
        let out = monotone_iterate(
            &q_lower,
            &q_upper,
            &bistable(),
            BoundaryKind::Neumann,
            0.05,
            1e-8,
            80.0,
        )
        .unwrap();
        assert!(out.lower_converged && out.upper_converged);
        for &x in out.lower_limit.values.iter() {
            assert!((x - 1.0).abs() < 1e-4);
        }
        for &x in out.upper_limit.values.iter() {
            assert!((x - 1.0).abs() < 1e-12);
        }
        for (a, b) in out
            .lower_limit
            .values
            .iter()
            .zip(out.upper_limit.values.iter())
        {
            assert!((a - b).abs() < 1e-4);
        }

        // Newton from a nearby guess lands on the same equilibrium.
        let ops = assemble(&grid, MassMode::Lumped);
        let init = GraphField::constant(grid, 0.9);
        let q = solve_stationary(&init, &bistable(), &ops, 1e-12, 50).unwrap();
        for (a, b) in q.values.iter().zip(out.upper_limit.values.iter()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn unordered_or_invalid_candidates_are_rejected() {
        // Fine enough that the tolerance 10 h^2 (1 + |f|) sits below the
        // residual |f(0.2)| = 0.016 of the bad candidate.
        let grid = GraphGrid::build_neumann(three_star(), 1.0 / 32.0).unwrap();
        // f(0.2) < 0 with threshold 0.3, so 0.2 is not a subsolution.
        let bad_lower = GraphField::constant(grid.clone(), 0.2);
        let q_upper = GraphField::constant(grid.clone(), 1.0);
        let err = monotone_iterate(
            &bad_lower,
            &q_upper,
            &bistable(),
            BoundaryKind::Neumann,
            0.05,
            1e-8,
            10.0,
        )
        .expect_err("0.2 is below the bistable threshold");
        assert!(matches!(err, Error::OrderPrecondition(_)));

        let q_lower = GraphField::constant(grid.clone(), 0.4);
        let too_low = GraphField::constant(grid, 0.35);
        let err = monotone_iterate(
            &q_lower,
            &too_low,
            &bistable(),
            BoundaryKind::Neumann,
            0.05,
            1e-8,
            10.0,
        )
        .expect_err("candidates are not ordered");
        assert!(matches!(err, Error::OrderPrecondition(_)));
    }

    #[test]
    fn subcritical_linear_flows_collapse_to_zero() {
        let grid = GraphGrid::build_dirichlet(single_edge(), 1.0 / 16.0).unwrap();
        let ops = assemble(&grid, MassMode::Lumped);
        let lambda1 = generalized_eigenvalues(&ops.stiffness, &ops.mass).unwrap()[0];
        let f = Nonlinearity::Linear { rate: 0.5 * lambda1 };
        let psi = GraphField::from_edge_fn(grid.clone(), |_, x| (PI * x).sin());
        let minus_psi = GraphField::new(grid, -&psi.values).unwrap();

        let out = monotone_iterate(
            &minus_psi,
            &psi,
            &f,
            BoundaryKind::Dirichlet,
            0.02,
            1e-8,
            30.0,
        )
        .unwrap();
        assert!(out.lower_converged && out.upper_converged);
        assert!(out.lower_limit.max_abs() < 1e-6);
        assert!(out.upper_limit.max_abs() < 1e-6);
    }

    #[test]
    fn newton_finds_zero_and_reports_degeneracy() {
        let grid = GraphGrid::build_dirichlet(single_edge(), 1.0 / 16.0).unwrap();
        let ops = assemble(&grid, MassMode::Consistent);
        let init = GraphField::constant(grid.clone(), 0.5);

        let q = solve_stationary(&init, &Nonlinearity::Zero, &ops, 1e-12, 5).unwrap();
        assert!(q.max_abs() < 1e-12);

        let lambda1 = generalized_eigenvalues(&ops.stiffness, &ops.mass).unwrap()[0];
        let sub = solve_stationary(
            &init,
            &Nonlinearity::Linear { rate: 0.5 * lambda1 },
            &ops,
            1e-12,
            10,
        )
        .unwrap();
        assert!(sub.max_abs() < 1e-12);

        let err = solve_stationary(
            &init,
            &Nonlinearity::Linear { rate: lambda1 },
            &ops,
            1e-12,
            10,
        )
        .expect_err("linearization at the eigenvalue is singular");
        match err {
            Error::Solver(msg) => assert!(msg.contains("degenerate"), "{msg}"),
            other => panic!("expected solver error, got {other}"),
        }
    }

    #[test]
    fn report_rendering_has_one_line_per_condition() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let q = GraphField::constant(grid, 0.4);
        let report = check_order_conditions(
            Candidate::Stationary(&q),
            OrderKind::Super,
            true,
            &bistable(),
            BoundaryKind::Neumann,
            None,
            1e-6,
        )
        .unwrap();
        let text = report.render_text();
        assert_eq!(text.lines().count(), 4);
        assert!(text.contains("interior"));
        assert!(text.contains("fail"));
        let csv = report.render_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.starts_with("condition,worst,location,verdict"));
    }

    #[test]
    fn stationary_flows_converge_immediately() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let q = GraphField::constant(grid, 1.0);
        let out = monotone_iterate(
            &q,
            &q,
            &bistable(),
            BoundaryKind::Neumann,
            0.05,
            1e-8,
            5.0,
        )
        .unwrap();
        assert!(out.lower_converged && out.upper_converged);
        assert_eq!(out.lower_traj.len(), 2);
        for (a, b) in out.lower_limit.values.iter().zip(q.values.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn evolving_trajectory_needs_an_initial_field_to_check_ordering() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let ops = assemble(&grid, MassMode::Lumped);
        let u0 = GraphField::constant(grid, 0.5);
        let traj = evolve(&u0, 0.1, 0.05, &Nonlinearity::Zero, &ops).unwrap();
        let report = check_order_conditions(
            Candidate::Evolving(&traj),
            OrderKind::Sub,
            false,
            &Nonlinearity::Zero,
            BoundaryKind::Neumann,
            None,
            0.0,
        )
        .unwrap();
        assert_eq!(report.initial.worst, 0.0);
        assert_eq!(report.initial.location, "-");
    }
}
