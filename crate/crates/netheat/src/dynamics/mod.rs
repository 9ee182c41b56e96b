//! Time integration of the semilinear heat equation on a graph grid.
//!
//! Diffusion is treated implicitly and the reaction explicitly, so every step
//! costs one symmetric solve with a matrix factored once per run. The
//! backward dual problems used by the comparison machinery live in [`dual`].

pub mod dual;

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fem::OperatorPair;
use crate::fem::{GraphField, GraphGrid};
use crate::nonlinearity::Nonlinearity;
use crate::sparse::DenseCholesky;

/// Time discretization of the diffusion term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Backward Euler on a diffusion, forward Euler on the reaction.
    ImexEuler,
    /// Trapezoidal diffusion, forward Euler reaction. Second order in time
    /// for the linear problem; used for quantitative decay measurements.
    CrankNicolson,
}

impl Scheme {
    pub fn label(&self) -> &'static str {
        match self {
            Scheme::ImexEuler => "imex-euler",
            Scheme::CrankNicolson => "crank-nicolson",
        }
    }
}

/// Knobs for [`evolve_with`]. The defaults match [`evolve`].
#[derive(Clone, Debug)]
pub struct EvolveOptions {
    pub scheme: Scheme,
    /// Abort threshold on `sup |u|`; existence is only local in time, so a
    /// run that leaves this range must fail loudly instead of overflowing.
    pub blow_up_cap: f64,
    /// Record every `stride`-th step. `None` picks 1 for runs of at most
    /// 1000 steps and about 1000 evenly spaced samples otherwise.
    pub stride: Option<usize>,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            scheme: Scheme::ImexEuler,
            blow_up_cap: 1e6,
            stride: None,
        }
    }
}

/// Time-ordered samples of a single run on one grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    grid: Arc<GraphGrid>,
    times: Vec<f64>,
    samples: Vec<DVector<f64>>,
    dt: f64,
    scheme: Scheme,
}

impl Trajectory {
    pub(crate) fn from_parts(
        grid: Arc<GraphGrid>,
        times: Vec<f64>,
        samples: Vec<DVector<f64>>,
        dt: f64,
        scheme: Scheme,
    ) -> Self {
        debug_assert_eq!(times.len(), samples.len());
        debug_assert!(times.first() == Some(&0.0));
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        Trajectory {
            grid,
            times,
            samples,
            dt,
            scheme,
        }
    }

    pub fn grid(&self) -> &Arc<GraphGrid> {
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

    pub fn field(&self, k: usize) -> GraphField {
        GraphField::new(self.grid.clone(), self.samples[k].clone())
            .expect("trajectory samples match their grid")
    }

    pub fn last_time(&self) -> f64 {
        *self.times.last().expect("trajectory is never empty")
    }

    pub fn last_values(&self) -> &DVector<f64> {
        self.samples.last().expect("trajectory is never empty")
    }

    pub fn last_field(&self) -> GraphField {
        self.field(self.len() - 1)
    }

    /// Index of the sample taken at time `t`, if one exists.
    pub fn index_at_time(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * t.abs().max(1.0);
        self.times.iter().position(|s| (s - t).abs() <= tol)
    }

    /// Largest `sup |u|` over all recorded samples.
    pub fn sup_bound(&self) -> f64 {
        self.samples
            .iter()
            .flat_map(|s| s.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    /// True when both trajectories share a grid layout and sample times.
    pub fn aligned_with(&self, other: &Trajectory) -> bool {
        self.grid.same_layout(&other.grid)
            && self.times.len() == other.times.len()
            && self
                .times
                .iter()
                .zip(&other.times)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0))
    }
}

pub(crate) struct Stepper<'a> {
    ops: &'a OperatorPair,
    dt: f64,
    scheme: Scheme,
    factor: DenseCholesky,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(ops: &'a OperatorPair, dt: f64, scheme: Scheme) -> Result<Self> {
        let shift = match scheme {
            Scheme::ImexEuler => dt,
            Scheme::CrankNicolson => 0.5 * dt,
        };
        let factor = DenseCholesky::new(&ops.mass, shift, &ops.stiffness)?;
        Ok(Stepper {
            ops,
            dt,
            scheme,
            factor,
        })
    }

    /// One step with the reaction values already evaluated at the current state.
    pub(crate) fn advance_with_reaction(
        &self,
        u: &DVector<f64>,
        reaction: &DVector<f64>,
    ) -> DVector<f64> {
        let mut rhs = self.ops.mass.matvec(&(u + reaction * self.dt));
        if self.scheme == Scheme::CrankNicolson {
            rhs -= self.ops.stiffness.matvec(u) * (0.5 * self.dt);
        }
        self.factor.solve(&rhs)
    }

    pub(crate) fn advance(&self, u: &DVector<f64>, f: &Nonlinearity) -> DVector<f64> {
        self.advance_with_reaction(u, &f.eval_vector(u))
    }
}

/// Number of uniform steps covering `[0, t_final]`.
pub(crate) fn steps_for(t_final: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    if !(t_final > 0.0) {
        return Err(Error::invalid(format!(
            "final time must be positive, got {t_final}"
        )));
    }
    let n = (t_final / dt).round();
    if n < 1.0 || (n * dt - t_final).abs() > 1e-9 * t_final.max(dt) {
        return Err(Error::invalid(format!(
            "time step {dt} does not divide the final time {t_final}"
        )));
    }
    Ok(n as usize)
}

fn check_dims(u: &GraphField, ops: &OperatorPair) -> Result<()> {
    if u.grid().num_dofs() != ops.dim() {
        return Err(Error::GridMismatch(format!(
            "field has {} degrees of freedom but the operators have {}",
            u.grid().num_dofs(),
            ops.dim()
        )));
    }
    Ok(())
}

/// One implicit-diffusion, explicit-reaction step:
/// `(M + dt K) u_next = M (u + dt f(u))`.
pub fn step_imex(
    u: &GraphField,
    dt: f64,
    f: &Nonlinearity,
    ops: &OperatorPair,
) -> Result<GraphField> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    check_dims(u, ops)?;
    let stepper = Stepper::new(ops, dt, Scheme::ImexEuler)?;
    GraphField::new(u.grid().clone(), stepper.advance(&u.values, f))
}

/// Integrates `u_t = Laplacian u + f(u)` from `u0` to time `t_final`.
pub fn evolve(
    u0: &GraphField,
    t_final: f64,
    dt: f64,
    f: &Nonlinearity,
    ops: &OperatorPair,
) -> Result<Trajectory> {
    evolve_with(u0, t_final, dt, f, ops, &EvolveOptions::default())
}

pub fn evolve_with(
    u0: &GraphField,
    t_final: f64,
    dt: f64,
    f: &Nonlinearity,
    ops: &OperatorPair,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    check_dims(u0, ops)?;
    if !(opts.blow_up_cap > 0.0) {
        return Err(Error::invalid("blow-up cap must be positive"));
    }
    let n = steps_for(t_final, dt)?;
    let stride = match opts.stride {
        Some(0) => return Err(Error::invalid("sample stride must be positive")),
        Some(s) => s,
        None => {
            if n <= 1000 {
                1
            } else {
                n.div_ceil(1000)
            }
        }
    };

    let stepper = Stepper::new(ops, dt, opts.scheme)?;
    let mut times = vec![0.0];
    let mut samples = vec![u0.values.clone()];
    let mut u = u0.values.clone();
    for k in 1..=n {
        let next = stepper.advance(&u, f);
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
        if !finite || sup > opts.blow_up_cap {
            return Err(Error::BlowUp {
                t,
                sup: if finite { sup } else { f64::INFINITY },
                cap: opts.blow_up_cap,
                last: Box::new((dt * (k - 1) as f64, u.iter().copied().collect())),
            });
        }
        u = next;
        if k == n || k % stride == 0 {
            times.push(t);
            samples.push(u.clone());
        }
    }
    Ok(Trajectory::from_parts(
        u0.grid().clone(),
        times,
        samples,
        dt,
        opts.scheme,
    ))
}

/// Linear heat flow `e^{t Laplacian} u0`, integrated with `substeps` steps.
pub fn heat_semigroup(
    u0: &GraphField,
    t: f64,
    ops: &OperatorPair,
    substeps: usize,
) -> Result<GraphField> {
    if substeps == 0 {
        return Err(Error::invalid("substeps must be at least 1"));
    }
    let traj = evolve(u0, t, t / substeps as f64, &Nonlinearity::Zero, ops)?;
    Ok(traj.last_field())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble, MassMode};
    use crate::graph::GraphBuilder;
    use crate::sparse::generalized_eigen;
    use std::f64::consts::PI;

    fn three_star() -> Arc<crate::graph::MetricGraph> {
        let mut b = GraphBuilder::new();
        b.edge("e1", "c", "a", 1.0);
        b.edge("e2", "c", "b", 1.0);
        b.edge("e3", "c", "d", 1.0);
        Arc::new(b.build())
    }

    fn single_edge() -> Arc<crate::graph::MetricGraph> {
        let mut b = GraphBuilder::new();
        b.edge("e", "p", "q", 1.0);
        Arc::new(b.build())
    }

    #[test]
    fn constants_are_invariant_without_reaction() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let ops = assemble(&grid, MassMode::Consistent);
        let u = GraphField::constant(grid, 3.7);
        let next = step_imex(&u, 0.2, &Nonlinearity::Zero, &ops).unwrap();
        for &x in next.values.iter() {
            assert!((x - 3.7).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_reaction_on_constants_matches_scalar_euler() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let ops = assemble(&grid, MassMode::Consistent);
        let u = GraphField::constant(grid, 2.0);
        let next = step_imex(&u, 0.1, &Nonlinearity::Linear { rate: -0.5 }, &ops).unwrap();
        for &x in next.values.iter() {
            assert!((x - 2.0 * (1.0 - 0.1 * 0.5)).abs() < 1e-13);
        }
    }

    #[test]
    fn logistic_half_step() {
        let grid = GraphGrid::build_neumann(three_star(), 0.5).unwrap();
        let ops = assemble(&grid, MassMode::Lumped);
        let u = GraphField::constant(grid, 0.5);
        let next = step_imex(&u, 0.1, &Nonlinearity::Logistic, &ops).unwrap();
        for &x in next.values.iter() {
            assert!((x - 0.525).abs() < 1e-12);
        }
    }

    #[test]
    fn logistic_run_tracks_the_scalar_solution() {
        let grid = GraphGrid::build_neumann(three_star(), 0.25).unwrap();
        let ops = assemble(&grid, MassMode::Consistent);
        let c = 0.2;
        let u0 = GraphField::constant(grid, c);
        let traj = evolve(&u0, 1.0, 1e-3, &Nonlinearity::Logistic, &ops).unwrap();
        let exact = c * 1f64.exp() / (1.0 - c + c * 1f64.exp());
        for &x in traj.last_values().iter() {
            assert!((x - exact).abs() < 2e-3 * exact);
        }
        assert_eq!(traj.time(0), 0.0);
        assert!((traj.last_time() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn crank_nicolson_reproduces_the_fourier_decay_rate() {
        let graph = single_edge();
        let grid = GraphGrid::build_dirichlet(graph, 1.0 / 64.0).unwrap();
        let ops = assemble(&grid, MassMode::Consistent);
        let u0 = GraphField::from_edge_fn(grid, |_, x| (PI * x).sin());
        let opts = EvolveOptions {
            scheme: Scheme::CrankNicolson,
            ..EvolveOptions::default()
        };
        let traj = evolve_with(&u0, 0.1, 1e-3, &Nonlinearity::Zero, &ops, &opts).unwrap();
        let ratio = ops.l2_norm(traj.last_values()) / ops.l2_norm(&u0.values);
        let exact = (-PI * PI * 0.1).exp();
        assert!(
            (ratio - exact).abs() < 1e-3 * exact,
            "decay ratio {ratio} vs {exact}"
        );
    }

    #[test]
    fn neumann_mass_is_conserved_without_reaction() {
        let grid = GraphGrid::build_neumann(three_star(), 0.125).unwrap();
        let ops = assemble(&grid, MassMode::Consistent);
        let u0 = GraphField::from_edge_fn(grid, |e, x| (e.0 as f64 + 1.0) * x * x);
        let m0 = ops.total_mass(&u0.values);
        let traj = evolve(&u0, 0.5, 0.01, &Nonlinearity::Zero, &ops).unwrap();
        for k in 0..traj.len() {
            assert!((ops.total_mass(traj.values(k)) - m0).abs() <= 1e-10 * m0.abs());
        }
    }

    #[test]
    fn blow_up_guard_reports_the_last_finite_state() {
        let grid = GraphGrid::build_neumann(three_star(), 0.5).unwrap();
        let ops = assemble(&grid, MassMode::Lumped);
        let u0 = GraphField::constant(grid, 1.0);
        let err = evolve(&u0, 10.0, 0.1, &Nonlinearity::Linear { rate: 50.0 }, &ops)
            .expect_err("growth must trip the guard");
        match err {
            Error::BlowUp { t, sup, cap, last } => {
                assert!((t - 0.8).abs() < 1e-12);
                assert!(sup > cap);
                assert!((last.0 - 0.7).abs() < 1e-12);
                assert!(last.1.iter().all(|x| x.abs() <= cap));
            }
            other => panic!("expected a blow-up error, got {other}"),
        }
    }

    #[test]
    fn heat_semigroup_is_a_contraction_and_preserves_order() {
        let grid = GraphGrid::build_neumann(three_star(), 0.125).unwrap();
        let ops = assemble(&grid, MassMode::Lumped);
        let u0 = GraphField::from_edge_fn(grid.clone(), |e, x| {
            0.5 + 0.4 * (3.0 * x + e.0 as f64).sin()
        });
        let v0 = GraphField::from_edge_fn(grid, |e, x| 0.7 + 0.3 * (3.0 * x + e.0 as f64).sin());
        assert!(u0
            .values
            .iter()
            .zip(v0.values.iter())
            .all(|(a, b)| a <= b));
        let ut = heat_semigroup(&u0, 0.3, &ops, 30).unwrap();
        let vt = heat_semigroup(&v0, 0.3, &ops, 30).unwrap();
        assert!(ut.max_abs() <= u0.max_abs() + 1e-12);
        assert!(ut.min_value() >= u0.min_value() - 1e-12);
        assert!(ut
            .values
            .iter()
            .zip(vt.values.iter())
            .all(|(a, b)| *a <= *b + 1e-12));
    }

    #[test]
    fn ground_mode_decays_at_the_discrete_rate() {
        let grid = GraphGrid::build_dirichlet(single_edge(), 1.0 / 16.0).unwrap();
        let ops = assemble(&grid, MassMode::Consistent);
        let (vecs, vals) = generalized_eigen(&ops.stiffness, &ops.mass).unwrap();
        let lambda1 = vals[0];
        let mut psi = DVector::from_iterator(ops.dim(), vecs.column(0).iter().copied());
        if psi[ops.dim() / 2] < 0.0 {
            psi = -psi;
        }
        let u0 = GraphField::new(grid, psi.clone()).unwrap();

        let substeps = 500;
        let dt = 0.05 / substeps as f64;
        let ut = heat_semigroup(&u0, 0.05, &ops, substeps).unwrap();
        let exact_factor = (1.0 + dt * lambda1).powi(-(substeps as i32));
        for (a, b) in ut.values.iter().zip(psi.iter()) {
            assert!((a - exact_factor * b).abs() < 1e-10);
        }
        assert!((exact_factor - (-lambda1 * 0.05).exp()).abs() < 1e-3);
    }

    #[test]
    fn mismatched_step_is_rejected() {
        assert!(steps_for(1.0, 0.3).is_err());
        assert!(steps_for(1.0, -0.1).is_err());
        assert_eq!(steps_for(1.0, 1e-3).unwrap(), 1000);
    }
}
