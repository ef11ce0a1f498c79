//! Box-constrained quasi-Newton minimizer used for hyperparameter fitting.
//!
//! L-BFGS with projection onto the box: search directions come from the
//! two-loop recursion, trial points are clamped back into the box, and an
//! Armijo backtracking line search guarantees monotone progress. Function
//! value and gradient are supplied by separate closures because the value
//! alone is much cheaper for the caller.

use nalgebra::DVector;

use crate::error::Result;
use crate::scalar::{cast, Scalar};

const HISTORY: usize = 8;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 24;
const GRAD_TOL: f64 = 1e-6;
const F_TOL: f64 = 1e-10;

pub(crate) struct BoxBounds<F: Scalar> {
    pub lo: DVector<F>,
    pub hi: DVector<F>,
}

impl<F: Scalar> BoxBounds<F> {
    pub fn clamp(&self, x: &mut DVector<F>) {
        for i in 0..x.len() {
            x[i] = x[i].clamp(self.lo[i], self.hi[i]);
        }
    }
}

pub(crate) struct Minimum<F: Scalar> {
    pub x: DVector<F>,
    pub value: F,
    /// Gradient evaluations consumed (= iterations performed + 1).
    pub grad_evals: usize,
}

/// Minimizes `value_grad` over the box starting from `x0`, using at most
/// `max_iters` gradient evaluations. `value` must agree with the first
/// component of `value_grad`.
pub(crate) fn minimize_in_box<F, V, VG>(
    mut value: V,
    mut value_grad: VG,
    x0: DVector<F>,
    bounds: &BoxBounds<F>,
    max_iters: usize,
) -> Result<Minimum<F>>
where
    F: Scalar,
    V: FnMut(&DVector<F>) -> Result<F>,
    VG: FnMut(&DVector<F>) -> Result<(F, DVector<F>)>,
{
    let mut x = x0;
    bounds.clamp(&mut x);
    let (mut f, mut g) = value_grad(&x)?;
    let mut grad_evals = 1usize;

    let mut s_hist: Vec<DVector<F>> = Vec::new();
    let mut y_hist: Vec<DVector<F>> = Vec::new();
    let mut rho_hist: Vec<F> = Vec::new();

    for _ in 0..max_iters {
        if projected_grad_norm(&x, &g, bounds) < cast(GRAD_TOL) {
            break;
        }

        let mut dir = lbfgs_direction(&g, &s_hist, &y_hist, &rho_hist);
        if dir.dot(&g) >= F::zero() {
            // Not a descent direction after curvature updates; fall back.
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            dir = -&g;
        }

        let mut step = F::one();
        let mut accepted: Option<(DVector<F>, F)> = None;
        for _ in 0..MAX_BACKTRACKS {
            let mut trial = &x + &dir * step;
            bounds.clamp(&mut trial);
            let displacement = &trial - &x;
            if displacement.amax() == F::zero() {
                break;
            }
            let ft = value(&trial)?;
            // Monotone guard on top of Armijo: clamping can flip the sign
            // of g . displacement, which would otherwise admit an increase.
            let armijo = f + cast::<F>(ARMIJO_C1) * g.dot(&displacement).min(F::zero());
            if ft.is_finite() && ft <= armijo {
                accepted = Some((trial, ft));
                break;
            }
            step *= cast(0.5);
        }

        let Some((xt, ft)) = accepted else {
            break;
        };
        let f_change = (f - ft).abs();
        let (_, gt) = value_grad(&xt)?;
        grad_evals += 1;

        let s = &xt - &x;
        let yv = &gt - &g;
        let sy = s.dot(&yv);
        if sy > cast::<F>(1e-12) * s.norm() * yv.norm() {
            if s_hist.len() == HISTORY {
                s_hist.remove(0);
                y_hist.remove(0);
                rho_hist.remove(0);
            }
            rho_hist.push(F::one() / sy);
            s_hist.push(s);
            y_hist.push(yv);
        }

        x = xt;
        g = gt;
        let done = f_change < cast::<F>(F_TOL) * (F::one() + f.abs());
        f = ft;
        if done {
            break;
        }
    }

    Ok(Minimum {
        x,
        value: f,
        grad_evals,
    })
}

fn projected_grad_norm<F: Scalar>(x: &DVector<F>, g: &DVector<F>, bounds: &BoxBounds<F>) -> F {
    let mut stepped = x - g;
    bounds.clamp(&mut stepped);
    (stepped - x).amax()
}

fn lbfgs_direction<F: Scalar>(
    g: &DVector<F>,
    s_hist: &[DVector<F>],
    y_hist: &[DVector<F>],
    rho_hist: &[F],
) -> DVector<F> {
    let mut q = g.clone();
    let k = s_hist.len();
    let mut alphas = vec![F::zero(); k];
    for i in (0..k).rev() {
        let a = rho_hist[i] * s_hist[i].dot(&q);
        alphas[i] = a;
        q -= &y_hist[i] * a;
    }
    if k > 0 {
        let last = k - 1;
        let gamma = s_hist[last].dot(&y_hist[last]) / y_hist[last].dot(&y_hist[last]);
        q *= gamma;
    }
    for i in 0..k {
        let beta = rho_hist[i] * y_hist[i].dot(&q);
        q += &s_hist[i] * (alphas[i] - beta);
    }
    -q
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bounds2(lo: f64, hi: f64) -> BoxBounds<f64> {
        BoxBounds {
            lo: DVector::from_element(2, lo),
            hi: DVector::from_element(2, hi),
        }
    }

    #[test]
    fn quadratic_interior_minimum() {
        let target = DVector::from_vec(vec![0.3, -0.2]);
        let value = |x: &DVector<f64>| Ok((x - &target).norm_squared());
        let value_grad = |x: &DVector<f64>| Ok(((x - &target).norm_squared(), (x - &target) * 2.0));
        let m = minimize_in_box(
            value,
            value_grad,
            DVector::zeros(2),
            &bounds2(-1.0, 1.0),
            100,
        )
        .unwrap();
        assert!((m.x - target).amax() < 1e-5);
    }

    #[test]
    fn minimum_projected_onto_box_face() {
        let target = DVector::from_vec(vec![3.0, 0.5]);
        let value = |x: &DVector<f64>| Ok((x - &target).norm_squared());
        let value_grad = |x: &DVector<f64>| Ok(((x - &target).norm_squared(), (x - &target) * 2.0));
        let m = minimize_in_box(
            value,
            value_grad,
            DVector::zeros(2),
            &bounds2(-1.0, 1.0),
            100,
        )
        .unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-8);
        assert!((m.x[1] - 0.5).abs() < 1e-5);
    }

    #[test]
    fn rosenbrock_in_box() {
        let value =
            |x: &DVector<f64>| Ok((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2));
        let value_grad = |x: &DVector<f64>| {
            let g = DVector::from_vec(vec![
                -2.0 * (1.0 - x[0]) - 400.0 * x[0] * (x[1] - x[0] * x[0]),
                200.0 * (x[1] - x[0] * x[0]),
            ]);
            value(x).map(|f| (f, g))
        };
        let m = minimize_in_box(
            value,
            value_grad,
            DVector::from_vec(vec![-0.5, 1.5]),
            &bounds2(-2.0, 2.0),
            400,
        )
        .unwrap();
        assert!(m.value < 1e-8, "value {}", m.value);
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn respects_iteration_budget() {
        let value = |x: &DVector<f64>| Ok(x.norm_squared());
        let value_grad = |x: &DVector<f64>| Ok((x.norm_squared(), x * 2.0));
        let m = minimize_in_box(
            value,
            value_grad,
            DVector::from_element(2, 0.9),
            &bounds2(-1.0, 1.0),
            1,
        )
        .unwrap();
        assert!(m.grad_evals <= 2);
    }
}
