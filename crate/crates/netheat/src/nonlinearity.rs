//! Reaction terms for the semilinear problem.
//!
//! Every supported nonlinearity vanishes at the origin, so the zero field is
//! always an equilibrium. Lipschitz constants on bounded intervals are
//! computed from the derivative's critical points rather than sampled, which
//! keeps the bounds usable inside correctness checks.

use nalgebra::DVector;

/// Pointwise reaction term `f(u)` with `f(0) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    /// `f(u) = 0`.
    Zero,
    /// `f(u) = rate * u`.
    Linear { rate: f64 },
    /// `f(u) = u(1 - u)`.
    Logistic,
    /// `f(u) = u(1 - u)(u - threshold)`.
    Bistable { threshold: f64 },
    /// `f(u) = coeffs[0] u + coeffs[1] u^2 + ...` (no constant term).
    Polynomial { coeffs: Vec<f64> },
}

impl Nonlinearity {
    /// Short identifier used in run summaries.
    pub fn label(&self) -> &'static str {
        match self {
            Nonlinearity::Zero => "zero",
            Nonlinearity::Linear { .. } => "linear",
            Nonlinearity::Logistic => "logistic",
            Nonlinearity::Bistable { .. } => "bistable",
            Nonlinearity::Polynomial { .. } => "polynomial",
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear { rate } => rate * u,
            Nonlinearity::Logistic => u * (1.0 - u),
            Nonlinearity::Bistable { threshold } => u * (1.0 - u) * (u - threshold),
            Nonlinearity::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for &c in coeffs.iter().rev() {
                    acc = u * (c + acc);
                }
                acc
            }
        }
    }

    pub fn deriv(&self, u: f64) -> f64 {
        match self {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Linear { rate } => *rate,
            Nonlinearity::Logistic => 1.0 - 2.0 * u,
            Nonlinearity::Bistable { threshold } => {
                -3.0 * u * u + 2.0 * (1.0 + threshold) * u - threshold
            }
            Nonlinearity::Polynomial { coeffs } => {
                let mut acc = 0.0;
                for (k, &c) in coeffs.iter().enumerate().rev() {
                    acc = acc * u + (k + 1) as f64 * c;
                }
                acc
            }
        }
    }

    /// Applies `f` to every nodal value.
    pub fn eval_vector(&self, u: &DVector<f64>) -> DVector<f64> {
        u.map(|x| self.eval(x))
    }

    /// Lipschitz constant of `f` on `[-m, m]`.
    pub fn lipschitz_on(&self, m: f64) -> f64 {
        assert!(m >= 0.0, "interval radius must be nonnegative");
        self.max_abs_deriv(-m, m)
    }

    /// Maximum of `|f'|` over `[lo, hi]`.
    pub fn max_abs_deriv(&self, lo: f64, hi: f64) -> f64 {
        self.deriv_candidates(lo, hi)
            .into_iter()
            .map(|x| self.deriv(x).abs())
            .fold(0.0, f64::max)
    }

    /// Minimum of `f'` over `[lo, hi]` (signed).
    pub fn min_deriv(&self, lo: f64, hi: f64) -> f64 {
        self.deriv_candidates(lo, hi)
            .into_iter()
            .map(|x| self.deriv(x))
            .fold(f64::INFINITY, f64::min)
    }

    /// Points where the extrema of `f'` on `[lo, hi]` can sit: the interval
    /// endpoints plus the zeros of `f''` inside. For the named kinds and for
    /// polynomials up to degree four the zeros are closed-form; higher
    /// degrees fall back to a sign-change scan refined by bisection.
    fn deriv_candidates(&self, lo: f64, hi: f64) -> Vec<f64> {
        assert!(lo <= hi, "interval must be ordered");
        let mut candidates = vec![lo, hi];
        match self {
            Nonlinearity::Zero | Nonlinearity::Linear { .. } | Nonlinearity::Logistic => {}
            Nonlinearity::Bistable { threshold } => {
                candidates.push((1.0 + threshold) / 3.0);
            }
            Nonlinearity::Polynomial { coeffs } => {
                candidates.extend(second_deriv_zeros(coeffs, lo, hi));
            }
        }
        candidates.retain(|x| *x >= lo && *x <= hi);
        candidates
    }
}

/// Zeros of `f''` in `[lo, hi]` for `f(u) = sum coeffs[k] u^(k+1)`.
fn second_deriv_zeros(coeffs: &[f64], lo: f64, hi: f64) -> Vec<f64> {
    // f''(u) = sum_{k >= 1} (k+1) k coeffs[k] u^(k-1)
    let d2: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| ((k + 1) * k) as f64 * c)
        .collect();
    let degree = d2.iter().rposition(|&c| c != 0.0);
    let eval_d2 = |u: f64| -> f64 {
        let mut acc = 0.0;
        for &c in d2.iter().rev() {
            acc = acc * u + c;
        }
        acc
    };
    match degree {
        None | Some(0) => Vec::new(),
        Some(1) => vec![-d2[0] / d2[1]],
        Some(2) => {
            let (a, b, c) = (d2[2], d2[1], d2[0]);
            let disc = b * b - 4.0 * a * c;
            if disc < 0.0 {
                Vec::new()
            } else {
                let q = -0.5 * (b + b.signum() * disc.sqrt());
                let mut roots = vec![q / a];
                if q != 0.0 {
                    roots.push(c / q);
                }
                roots
            }
        }
        Some(_) => {
            let mut roots = Vec::new();
            let n = 2048;
            let width = hi - lo;
            let mut prev_x = lo;
            let mut prev_v = eval_d2(lo);
            for i in 1..=n {
                let x = lo + width * i as f64 / n as f64;
                let v = eval_d2(x);
                if prev_v == 0.0 {
                    roots.push(prev_x);
                } else if prev_v * v < 0.0 {
                    roots.push(bisect(&eval_d2, prev_x, x));
                }
                prev_x = x;
                prev_v = v;
            }
            if eval_d2(hi) == 0.0 {
                roots.push(hi);
            }
            roots
        }
    }
}

fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..100 {
        let mid = 0.5 * (a + b);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_kind_vanishes_at_zero() {
        let kinds = [
            Nonlinearity::Zero,
            Nonlinearity::Linear { rate: -2.5 },
            Nonlinearity::Logistic,
            Nonlinearity::Bistable { threshold: 0.3 },
            Nonlinearity::Polynomial {
                coeffs: vec![1.0, -0.5, 0.25, 3.0],
            },
        ];
        for f in &kinds {
            assert_eq!(f.eval(0.0), 0.0, "{} has f(0) != 0", f.label());
        }
    }

    #[test]
    fn logistic_values_and_slopes() {
        let f = Nonlinearity::Logistic;
        assert_eq!(f.eval(0.5), 0.25);
        assert_eq!(f.deriv(0.0), 1.0);
        assert_eq!(f.deriv(0.5), 0.0);
        assert_eq!(f.lipschitz_on(1.0), 3.0);
    }

    #[test]
    fn bistable_sign_structure() {
        let f = Nonlinearity::Bistable { threshold: 0.3 };
        assert!(f.eval(0.1) < 0.0);
        assert!(f.eval(0.5) > 0.0);
        assert!(f.eval(1.2) < 0.0);
        // max |f'| on [0, 1] sits at the right endpoint: f'(1) = -0.7.
        let l = f.max_abs_deriv(0.0, 1.0);
        assert!((l - 0.7).abs() < 1e-14);
        assert!((f.min_deriv(0.0, 1.0) + 0.7).abs() < 1e-14);
        // Between the zeros of f'' the slope peaks at (1+a)/3.
        assert!(f.min_deriv(0.3, 0.6) > 0.0);
    }

    #[test]
    fn square_matches_explicit_lipschitz_constant() {
        // f(u) = u^2 has f' = 2u, so the constant on [-m, m] is 2m.
        let f = Nonlinearity::Polynomial {
            coeffs: vec![0.0, 1.0],
        };
        assert_eq!(f.eval(3.0), 9.0);
        assert_eq!(f.lipschitz_on(3.0), 6.0);
    }

    #[test]
    fn quintic_bound_matches_dense_scan() {
        let f = Nonlinearity::Polynomial {
            coeffs: vec![2.0, -1.0, -4.0, 0.5, 1.5],
        };
        let (lo, hi) = (-1.3, 1.7);
        let bound = f.max_abs_deriv(lo, hi);
        let mut scanned: f64 = 0.0;
        for i in 0..=20000 {
            let x = lo + (hi - lo) * i as f64 / 20000.0;
            scanned = scanned.max(f.deriv(x).abs());
        }
        assert!(bound >= scanned - 1e-9);
        assert!(bound <= scanned + 1e-6 * (1.0 + scanned));
    }

    #[test]
    fn polynomial_derivative_matches_difference_quotient() {
        let f = Nonlinearity::Polynomial {
            coeffs: vec![1.0, 0.0, -2.0, 0.0, 0.7],
        };
        for &u in &[-1.1, -0.3, 0.0, 0.6, 2.2] {
            let h = 1e-6;
            let fd = (f.eval(u + h) - f.eval(u - h)) / (2.0 * h);
            assert!((f.deriv(u) - fd).abs() < 1e-5 * (1.0 + fd.abs()));
        }
    }
}
