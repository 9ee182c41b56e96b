//! Backward dual problems for the comparison-by-duality argument.
//!
//! The dual runs backward from a terminal profile at time `tau`; we integrate
//! it as a forward problem in the reversed time `s = tau - t` and hand back
//! the samples reindexed to forward time. Truncated domains are expressed
//! through the grid itself: pinning the cut vertices makes the zero condition
//! on the inner part of the cut sphere automatic.

use nalgebra::DVector;

use crate::dynamics::{steps_for, Scheme, Stepper, Trajectory};
use crate::error::{Error, Result};
use crate::fem::OperatorPair;
use crate::fem::GraphField;
use crate::nonlinearity::Nonlinearity;

/// Relative floor below which the difference of two solutions is treated as
/// zero when forming the quotient coefficient.
const QUOTIENT_FLOOR: f64 = 1e-12;

/// Zeroth-order coefficient of the backward dual equation.
#[derive(Clone, Debug)]
pub enum DualCoefficient {
    /// Constant-rate form `phi_t = -Laplacian phi + lambda phi`.
    Lambda(f64),
    /// Space-time samples of `a = (f(lower) - f(upper)) / (lower - upper)`
    /// for `phi_t = -Laplacian phi - a phi`.
    Sampled {
        times: Vec<f64>,
        values: Vec<DVector<f64>>,
        /// Lipschitz bound that dominates every sample.
        bound: f64,
    },
}

impl DualCoefficient {
    /// Difference-quotient coefficient of a solution pair. Where the two
    /// solutions agree to relative precision the quotient is set to zero.
    pub fn from_pair(
        lower: &Trajectory,
        upper: &Trajectory,
        f: &Nonlinearity,
    ) -> Result<DualCoefficient> {
        if !lower.aligned_with(upper) {
            return Err(Error::GridMismatch(
                "solution pair must share a grid and sample times".into(),
            ));
        }
        let m = lower.sup_bound().max(upper.sup_bound());
        let bound = f.lipschitz_on(m);
        let slack = 1e-9 * (1.0 + bound);
        let mut values = Vec::with_capacity(lower.len());
        for k in 0..lower.len() {
            let lo = lower.values(k);
            let up = upper.values(k);
            let mut a = DVector::zeros(lo.len());
            for i in 0..lo.len() {
                let w = lo[i] - up[i];
                let scale = 1.0f64.max(lo[i].abs()).max(up[i].abs());
                if w.abs() > QUOTIENT_FLOOR * scale {
                    a[i] = (f.eval(lo[i]) - f.eval(up[i])) / w;
                }
                if a[i].abs() > bound + slack {
                    return Err(Error::invalid(format!(
                        "difference quotient {} at sample {k} exceeds the Lipschitz bound {bound}",
                        a[i]
                    )));
                }
            }
            values.push(a);
        }
        Ok(DualCoefficient::Sampled {
            times: lower.times().to_vec(),
            values,
            bound,
        })
    }

    /// Uniform bound on `|a|`.
    pub fn bound(&self) -> f64 {
        match self {
            DualCoefficient::Lambda(l) => l.abs(),
            DualCoefficient::Sampled { bound, .. } => *bound,
        }
    }

    /// Reaction values at physical time `t` (nearest stored sample).
    fn reaction_at(&self, t: f64, phi: &DVector<f64>) -> DVector<f64> {
        match self {
            DualCoefficient::Lambda(l) => phi * (-l),
            DualCoefficient::Sampled { times, values, .. } => {
                let k = nearest_index(times, t);
                values[k].component_mul(phi)
            }
        }
    }
}

fn nearest_index(times: &[f64], t: f64) -> usize {
    let mut best = 0;
    let mut gap = f64::INFINITY;
    for (k, &s) in times.iter().enumerate() {
        let d = (s - t).abs();
        if d < gap {
            gap = d;
            best = k;
        }
    }
    best
}

/// Solves the backward dual problem from terminal data `zeta` at time `tau`
/// down to time zero, returning the samples in forward time on `[0, tau]`.
///
/// The grid of `zeta` decides the domain: a truncated run pins the cut
/// vertices through its Dirichlet set.
pub fn solve_backward_dual(
    zeta: &GraphField,
    tau: f64,
    dt: f64,
    coeff: &DualCoefficient,
    ops: &OperatorPair,
) -> Result<Trajectory> {
    if zeta.grid().num_dofs() != ops.dim() {
        return Err(Error::GridMismatch(format!(
            "terminal data has {} degrees of freedom but the operators have {}",
            zeta.grid().num_dofs(),
            ops.dim()
        )));
    }
    if zeta.values.iter().any(|&z| !(-1e-12..=1.0 + 1e-12).contains(&z)) {
        return Err(Error::invalid(
            "terminal data must take values in [0, 1]",
        ));
    }
    let n = steps_for(tau, dt)?;
    let stride = if n <= 1000 { 1 } else { n.div_ceil(1000) };
    let stepper = Stepper::new(ops, dt, Scheme::ImexEuler)?;

    // March in reversed time s = tau - t; sample s-index j corresponds to
    // forward time (n - j) * dt.
    let mut recorded: Vec<(usize, DVector<f64>)> = vec![(0, zeta.values.clone())];
    let mut phi = zeta.values.clone();
    for j in 1..=n {
        let t_phys = dt * (n - (j - 1)) as f64;
        let reaction = coeff.reaction_at(t_phys, &phi);
        phi = stepper.advance_with_reaction(&phi, &reaction);
        if j == n || j % stride == 0 {
            recorded.push((j, phi.clone()));
        }
    }

    let mut times = Vec::with_capacity(recorded.len());
    let mut samples = Vec::with_capacity(recorded.len());
    for (j, values) in recorded.into_iter().rev() {
        times.push(dt * (n - j) as f64);
        samples.push(values);
    }
    Ok(Trajectory::from_parts(
        zeta.grid().clone(),
        times,
        samples,
        dt,
        Scheme::ImexEuler,
    ))
}

/// Mass-weighted pairing of the solution difference against `zeta` at `tau`:
/// `zeta^T M (lower - upper)`. Also forms the difference-quotient coefficient
/// of the pair, which enforces its Lipschitz bound as a side effect.
pub fn duality_gap(
    lower: &Trajectory,
    upper: &Trajectory,
    zeta: &GraphField,
    tau: f64,
    f: &Nonlinearity,
    ops: &OperatorPair,
) -> Result<f64> {
    if !zeta.grid().same_layout(lower.grid()) {
        return Err(Error::GridMismatch(
            "pairing field must live on the trajectory grid".into(),
        ));
    }
    if ops.dim() != zeta.grid().num_dofs() {
        return Err(Error::GridMismatch(
            "operators do not match the trajectory grid".into(),
        ));
    }
    let kl = lower
        .index_at_time(tau)
        .ok_or_else(|| Error::invalid(format!("{tau} is not a sample time of the lower run")))?;
    let ku = upper
        .index_at_time(tau)
        .ok_or_else(|| Error::invalid(format!("{tau} is not a sample time of the upper run")))?;
    DualCoefficient::from_pair(lower, upper, f)?;
    let w = lower.values(kl) - upper.values(ku);
    Ok(zeta.values.dot(&ops.mass.matvec(&w)))
}
