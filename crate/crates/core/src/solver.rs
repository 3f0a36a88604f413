//! Proximal-gradient optimization of `smooth(X) + r u(X)`.
//!
//! Iterates `X+ = prox(Y - s grad(Y), s r)` with a backtracked step `s` and
//! optional Nesterov momentum that restarts whenever the objective would
//! increase, so the recorded objective trace is non-increasing. Points outside
//! the smooth part's domain (for the graphical lasso: outside the positive
//! definite cone) are rejected by the line search like any failed
//! sufficient-decrease test. Objective changes too small to resolve from two
//! rounded values of `F` are measured with the trapezoid rule on the smooth
//! part, exact for quadratics, plus a termwise gauge difference.
//!
//! Every fit reports a certified gap `delta >= F(X_hat) - min F`, the minimum
//! of a Fenchel duality gap (built from a rescaled gradient so the dual point
//! is feasible) and, when the smooth part is strongly convex with modulus
//! `mu`, the bound `dist(0, dF(X_hat))^2 / (2 mu)`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::gauge::GaugeSpec;
use crate::linalg;
use crate::models::GraphicalObjective;
use crate::tensor::Tensor;

/// Smooth convex part of an objective.
pub trait SmoothObjective {
    /// Shape of the parameter.
    fn dims(&self) -> &[usize];

    /// Value at `x`, or `None` outside the domain.
    fn value(&self, x: &Tensor) -> Option<f64>;

    /// Value and gradient at `x`, or `None` outside the domain.
    fn value_and_gradient(&self, x: &Tensor) -> Option<(f64, Tensor)>;

    /// For `smooth(x) = h(A x)`: `h(A x) + h*(c * grad h(A x))`, the smooth
    /// share of the Fenchel duality gap at the dual point obtained by scaling
    /// the gradient by `dual_scale = c` in `[0, 1]`.
    fn conjugate_gap(&self, _x: &Tensor, _dual_scale: f64) -> Option<f64> {
        None
    }

    /// A global strong-convexity modulus, if one is known and positive.
    fn strong_convexity(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    pub max_iterations: usize,
    /// Stop once the relative objective decrease falls below this.
    pub objective_tolerance: f64,
    pub initial_step: f64,
    /// Backtracking shrink factor in `(0, 1)`.
    pub shrink: f64,
    /// Momentum with restart-on-increase.
    pub accelerate: bool,
    /// Keep the per-iteration objective trace in the result.
    pub record_trace: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 5000,
            objective_tolerance: 1e-9,
            initial_step: 1.0,
            shrink: 0.5,
            accelerate: true,
            record_trace: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        if !(self.objective_tolerance > 0.0) || !self.objective_tolerance.is_finite() {
            return Err(Error::InvalidParameter("objective_tolerance must be positive".into()));
        }
        if !(self.initial_step > 0.0) || !self.initial_step.is_finite() {
            return Err(Error::InvalidParameter("initial_step must be positive".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::InvalidParameter("shrink must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub estimate: Tensor,
    /// Final value of `smooth + r u`.
    pub objective: f64,
    /// Certified upper bound on `objective - min`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every accepted iteration (starting with the initial
    /// point), when requested.
    pub trace: Vec<f64>,
}

const MAX_BACKTRACKS: usize = 200;

/// Relative size of an objective change below which two evaluations of `F`
/// cannot be compared directly.
const ROUNDING_BAND: f64 = 1e-11;

struct Point {
    x: Tensor,
    f: f64,
    grad: Tensor,
}

fn evaluate_point<S: SmoothObjective + ?Sized>(smooth: &S, x: Tensor) -> Option<Point> {
    let (f, grad) = smooth.value_and_gradient(&x)?;
    (f.is_finite() && grad.is_finite()).then_some(Point { x, f, grad })
}

/// One backtracked proximal-gradient step from `y`. Returns the new point
/// and the accepted step size.
fn prox_step<S: SmoothObjective + ?Sized>(
    smooth: &S,
    gauge: &GaugeSpec,
    r: f64,
    y: &Point,
    mut step: f64,
    shrink: f64,
) -> Result<Option<(Point, f64)>> {
    let slack = 1e-14 * y.f.abs().max(1.0);
    for _ in 0..MAX_BACKTRACKS {
        let z = gauge.prox(&y.x.axpy(-step, &y.grad)?, step * r)?;
        if let Some(p) = evaluate_point(smooth, z) {
            let d = p.x.sub(&y.x)?;
            let margin = d.norm_sq() / (2.0 * step);
            let accept = if margin > ROUNDING_BAND * y.f.abs().max(1.0) {
                p.f <= y.f + y.grad.inner(&d)? + margin + slack
            } else {
                // the same test with f(z) - f(y) from the trapezoid rule
                0.5 * p.grad.sub(&y.grad)?.inner(&d)? <= margin
            };
            if accept {
                return Ok(Some((p, step)));
            }
        }
        step *= shrink;
    }
    Ok(None)
}

/// Minimizes `smooth(X) + r u(X)` from `init`.
pub fn fit<S: SmoothObjective + ?Sized>(
    smooth: &S,
    gauge: &GaugeSpec,
    r: f64,
    init: &Tensor,
    settings: &SolverSettings,
) -> Result<FitResult> {
    settings.validate()?;
    if !gauge.is_convex() {
        return Err(Error::Unsupported(format!(
            "solver requires a convex gauge, got {}",
            gauge.name()
        )));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("regularization parameter {r}")));
    }
    if init.dims() != smooth.dims() {
        return Err(Error::ShapeMismatch {
            expected: smooth.dims().to_vec(),
            actual: init.dims().to_vec(),
        });
    }
    if !init.is_finite() {
        return Err(Error::NonFinite("initial point"));
    }
    gauge.check_compatible(init)?;

    let objective = |p: &Point| -> Result<f64> { Ok(p.f + r * gauge.evaluate(&p.x)?) };
    // F(to) - F(from)
    let change = |from: &Point, from_f: f64, to: &Point, to_f: f64| -> Result<f64> {
        let direct = to_f - from_f;
        if !(direct.abs() <= ROUNDING_BAND * from_f.abs().max(1.0)) {
            return Ok(direct);
        }
        let d = to.x.sub(&from.x)?;
        let smooth_change = 0.5 * from.grad.add(&to.grad)?.inner(&d)?;
        Ok(smooth_change + r * gauge.difference(&to.x, &from.x)?)
    };

    let mut current = evaluate_point(smooth, init.clone()).ok_or_else(|| Error::SolverFailure {
        iterations: 0,
        reason: "initial point outside the objective's domain".into(),
    })?;
    let mut big_f = objective(&current)?;
    let mut previous_x = current.x.clone();
    let mut momentum = 1.0f64;
    let mut step = settings.initial_step;
    let mut trace = Vec::new();
    if settings.record_trace {
        trace.push(big_f);
    }

    let mut converged = false;
    let mut iterations = 0;
    while iterations < settings.max_iterations {
        iterations += 1;
        let trial_step = (step / settings.shrink).min(settings.initial_step);

        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let beta = if settings.accelerate {
            (momentum - 1.0) / next_momentum
        } else {
            0.0
        };
        let extrapolated = if beta > 0.0 {
            let y = current.x.axpy(beta, &current.x.sub(&previous_x)?)?;
            evaluate_point(smooth, y)
        } else {
            None
        };
        // an extrapolated point outside the domain restarts the momentum
        momentum = if beta > 0.0 && extrapolated.is_none() {
            1.0
        } else {
            next_momentum
        };

        let mut outcome = match &extrapolated {
            Some(y) => prox_step(smooth, gauge, r, y, trial_step, settings.shrink)?,
            None => prox_step(smooth, gauge, r, &current, trial_step, settings.shrink)?,
        };
        let mut delta = match &outcome {
            Some((p, _)) => change(&current, big_f, p, objective(p)?)?,
            None => f64::INFINITY,
        };
        if delta > 0.0 && extrapolated.is_some() {
            // restart: plain step from the current iterate
            momentum = 1.0;
            outcome = prox_step(smooth, gauge, r, &current, trial_step, settings.shrink)?;
            delta = match &outcome {
                Some((p, _)) => change(&current, big_f, p, objective(p)?)?,
                None => f64::INFINITY,
            };
        }

        let Some((next, accepted_step)) = outcome else {
            if current.grad.max_abs() == 0.0 || iterations > 1 {
                // no representable decrease left
                converged = true;
                break;
            }
            return Err(Error::SolverFailure {
                iterations,
                reason: "line search failed to find a decrease".into(),
            });
        };
        if delta.is_nan() {
            return Err(Error::SolverFailure {
                iterations,
                reason: "objective became NaN".into(),
            });
        }
        if delta > 0.0 {
            // rounding-level stagnation
            converged = true;
            break;
        }
        step = accepted_step;
        let decrease = -delta;
        previous_x = std::mem::replace(&mut current, next).x;
        big_f += delta;
        if settings.record_trace {
            trace.push(big_f);
        }
        if !big_f.is_finite() {
            return Err(Error::SolverFailure {
                iterations,
                reason: "objective diverged".into(),
            });
        }
        if decrease <= settings.objective_tolerance * big_f.abs().max(1.0) {
            converged = true;
            break;
        }
    }

    let gap = certify_gap(smooth, gauge, r, &current.x)?;
    Ok(FitResult {
        estimate: current.x,
        objective: big_f,
        gap,
        iterations,
        converged,
        trace,
    })
}

/// Upper bound on `F(x) - min F` for `F = smooth + r u`. Returns infinity when
/// no certificate is available for this objective.
pub fn certify_gap<S: SmoothObjective + ?Sized>(
    smooth: &S,
    gauge: &GaugeSpec,
    r: f64,
    x: &Tensor,
) -> Result<f64> {
    let (_, grad) = smooth.value_and_gradient(x).ok_or_else(|| {
        Error::InvalidParameter("gap requested outside the objective's domain".into())
    })?;
    let penalty = r * gauge.evaluate(x)?;
    let dual_norm = gauge.dual_evaluate(&grad)?;
    let scale = if dual_norm <= r { 1.0 } else { r / dual_norm };

    let mut best = f64::INFINITY;
    if let Some(g) = smooth.conjugate_gap(x, scale) {
        let total = g + penalty;
        if total.is_finite() {
            best = best.min(total.max(0.0));
        }
    }
    if let Some(mu) = smooth.strong_convexity().filter(|&m| m > 0.0) {
        let dist = gauge.min_subgradient_norm(x, &grad, r)?;
        best = best.min(dist * dist / (2.0 * mu));
    }
    Ok(best)
}

/// Graphical lasso: minimizes `<S, L> - log det L + r' ||vec L||_1` over
/// positive definite `L`, starting from the identity.
pub fn fit_graphical_lasso(
    second_moment: &Tensor,
    r_prime: f64,
    settings: &SolverSettings,
) -> Result<FitResult> {
    let s = linalg::to_dmatrix(second_moment)?;
    let p = linalg::check_square(&s, "second-moment matrix")?;
    linalg::check_symmetric(&s, "second-moment matrix")?;
    let min_eig = linalg::min_eigenvalue(&s);
    let scale = s.amax().max(f64::MIN_POSITIVE);
    if min_eig < -1e-10 * scale {
        return Err(Error::InvalidParameter(
            "second-moment matrix is not positive semidefinite".into(),
        ));
    }
    if r_prime == 0.0 && min_eig <= 1e-12 * scale {
        return Err(Error::InvalidParameter(
            "no finite minimizer: r' = 0 with a singular second-moment matrix".into(),
        ));
    }
    let objective = GraphicalObjective::new(second_moment.clone())?;
    let init = linalg::from_dmatrix(&DMatrix::identity(p, p));
    fit(&objective, &GaugeSpec::L1, r_prime, &init, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `0.5 ||x - target||^2` scaled by `curvature`.
    struct Quadratic {
        target: Tensor,
        curvature: f64,
    }

    impl SmoothObjective for Quadratic {
        fn dims(&self) -> &[usize] {
            self.target.dims()
        }
        fn value(&self, x: &Tensor) -> Option<f64> {
            Some(0.5 * self.curvature * x.sub(&self.target).ok()?.norm_sq())
        }
        fn value_and_gradient(&self, x: &Tensor) -> Option<(f64, Tensor)> {
            let d = x.sub(&self.target).ok()?;
            Some((0.5 * self.curvature * d.norm_sq(), d.scale(self.curvature)))
        }
        fn strong_convexity(&self) -> Option<f64> {
            Some(self.curvature)
        }
    }

    #[test]
    fn separable_quadratic_soft_thresholds() {
        let q = Quadratic {
            target: Tensor::vector(vec![3.0, -0.5, 1.2]).unwrap(),
            curvature: 2.0,
        };
        let init = Tensor::zeros(&[3]).unwrap();
        let fit = fit(&q, &GaugeSpec::L1, 1.0, &init, &SolverSettings::default()).unwrap();
        // minimizer: soft(target, r / curvature)
        let expected = [2.5, 0.0, 0.7];
        for (a, b) in fit.estimate.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        assert!(fit.converged);
        assert!(fit.gap < 1e-8);
    }

    #[test]
    fn rejects_nonconvex_and_bad_inputs() {
        let q = Quadratic {
            target: Tensor::vector(vec![1.0]).unwrap(),
            curvature: 1.0,
        };
        let init = Tensor::zeros(&[1]).unwrap();
        let s = SolverSettings::default();
        assert!(matches!(
            fit(&q, &GaugeSpec::lq(0.5).unwrap(), 1.0, &init, &s),
            Err(Error::Unsupported(_))
        ));
        assert!(fit(&q, &GaugeSpec::L1, -1.0, &init, &s).is_err());
        assert!(fit(&q, &GaugeSpec::L1, 1.0, &Tensor::zeros(&[2]).unwrap(), &s).is_err());
        let bad = SolverSettings {
            shrink: 1.0,
            ..SolverSettings::default()
        };
        assert!(fit(&q, &GaugeSpec::L1, 1.0, &init, &bad).is_err());
    }

    #[test]
    fn starting_at_minimizer_stops_immediately() {
        let q = Quadratic {
            target: Tensor::vector(vec![3.0, 0.2]).unwrap(),
            curvature: 1.0,
        };
        let init = Tensor::vector(vec![2.0, 0.0]).unwrap();
        let fit = fit(&q, &GaugeSpec::L1, 1.0, &init, &SolverSettings::default()).unwrap();
        assert!(fit.iterations <= 2);
        assert!(fit.gap <= 1e-8);
        assert_eq!(fit.estimate, init);
    }

    #[test]
    fn graphical_scalar_root() {
        // 1 - 1/L + 0.5 = 0
        let s = Tensor::matrix(1, 1, vec![1.0]).unwrap();
        let settings = SolverSettings {
            objective_tolerance: 1e-15,
            ..SolverSettings::default()
        };
        let fit = fit_graphical_lasso(&s, 0.5, &settings).unwrap();
        assert!((fit.estimate.data()[0] - 1.0 / 1.5).abs() < 1e-6);
    }

    #[test]
    fn graphical_rejects_singular_unregularized() {
        let s = Tensor::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(fit_graphical_lasso(&s, 0.0, &SolverSettings::default()).is_err());
        assert!(fit_graphical_lasso(&s, 0.1, &SolverSettings::default()).is_ok());
    }
}
