//! Exact Gaussian-process regression with a Matérn-5/2 ARD kernel.
//!
//! One model per trust region: targets are standardized per region, the
//! kernel hyperparameters are refit before every batch by maximizing the
//! log-marginal likelihood over a fixed box, and Thompson sampling draws
//! joint posterior realizations on finite candidate sets.
//!
//! Everything here is exact (dense Cholesky); approximate inference is out
//! of scope at the data sizes this crate targets.

mod optim;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::CholeskyFactor;
use crate::scalar::{cast, Scalar};

use optim::{minimize_in_box, BoxBounds};

/// Box constraint for ARD lengthscales (unit-cube coordinates).
pub const LENGTHSCALE_BOUNDS: (f64, f64) = (0.005, 2.0);
/// Box constraint for the signal variance (standardized units squared).
pub const SIGNAL_VARIANCE_BOUNDS: (f64, f64) = (0.05, 20.0);
/// Box constraint for the noise variance (standardized units squared).
pub const NOISE_VARIANCE_BOUNDS: (f64, f64) = (0.0005, 0.1);

const SQRT5: f64 = 2.236_067_977_499_79;
const FIVE_THIRDS: f64 = 5.0 / 3.0;

/// Hyperparameters of the Matérn-5/2 ARD kernel with constant mean.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelParams<F: Scalar> {
    /// Per-dimension lengthscales, in unit-cube coordinates.
    pub lengthscales: DVector<F>,
    /// Kernel amplitude (variance of the latent function).
    pub signal_variance: F,
    /// Observation noise variance.
    pub noise_variance: F,
    /// Constant mean of the latent function, in standardized units.
    pub mean_constant: F,
}

impl<F: Scalar> KernelParams<F> {
    pub fn new(lengthscales: DVector<F>, signal_variance: F, noise_variance: F) -> Self {
        KernelParams {
            lengthscales,
            signal_variance,
            noise_variance,
            mean_constant: F::zero(),
        }
    }

    /// Parameters at the center of the hyperparameter box in log space.
    pub fn centered(dim: usize) -> Self {
        let ls = (LENGTHSCALE_BOUNDS.0 * LENGTHSCALE_BOUNDS.1).sqrt();
        let sv = (SIGNAL_VARIANCE_BOUNDS.0 * SIGNAL_VARIANCE_BOUNDS.1).sqrt();
        let nv = (NOISE_VARIANCE_BOUNDS.0 * NOISE_VARIANCE_BOUNDS.1).sqrt();
        KernelParams::new(DVector::from_element(dim, cast(ls)), cast(sv), cast(nv))
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// Copy with every hyperparameter clamped into its box. The mean is
    /// pinned to zero: targets are standardized before fitting, so a free
    /// constant would be redundant.
    pub fn clamped(&self) -> Self {
        let mut out = self.clone();
        for l in out.lengthscales.iter_mut() {
            *l = l.clamp(cast(LENGTHSCALE_BOUNDS.0), cast(LENGTHSCALE_BOUNDS.1));
        }
        out.signal_variance = out.signal_variance.clamp(
            cast(SIGNAL_VARIANCE_BOUNDS.0),
            cast(SIGNAL_VARIANCE_BOUNDS.1),
        );
        out.noise_variance = out
            .noise_variance
            .clamp(cast(NOISE_VARIANCE_BOUNDS.0), cast(NOISE_VARIANCE_BOUNDS.1));
        out.mean_constant = F::zero();
        out
    }

    /// Checks the box invariants.
    pub fn validate(&self) -> Result<()> {
        let in_box = |v: F, b: (f64, f64)| v >= cast(b.0) && v <= cast(b.1);
        if !self
            .lengthscales
            .iter()
            .all(|&l| in_box(l, LENGTHSCALE_BOUNDS))
        {
            return Err(Error::invalid("lengthscale out of bounds"));
        }
        if !in_box(self.signal_variance, SIGNAL_VARIANCE_BOUNDS) {
            return Err(Error::invalid("signal variance out of bounds"));
        }
        if !in_box(self.noise_variance, NOISE_VARIANCE_BOUNDS) {
            return Err(Error::invalid("noise variance out of bounds"));
        }
        if !self.mean_constant.is_finite() {
            return Err(Error::invalid("mean constant not finite"));
        }
        Ok(())
    }
}

/// Mean/stddev used to z-score the raw objective values of one region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardizationStats<F: Scalar> {
    pub mean: F,
    pub std_dev: F,
}

impl<F: Scalar> StandardizationStats<F> {
    /// Computes the statistics, replacing a degenerate stddev (constant
    /// data) by 1 so the transform stays invertible.
    pub fn from_values(values: &DVector<F>) -> Self {
        let n = cast::<F>(values.len() as f64);
        let mean = values.sum() / n;
        let var = values
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .fold(F::zero(), |a, b| a + b)
            / n;
        let std_dev = var.sqrt();
        let std_dev = if std_dev < cast(1e-12) {
            F::one()
        } else {
            std_dev
        };
        StandardizationStats { mean, std_dev }
    }

    #[inline]
    pub fn standardize(&self, y: F) -> F {
        (y - self.mean) / self.std_dev
    }

    #[inline]
    pub fn unstandardize(&self, z: F) -> F {
        self.mean + self.std_dev * z
    }
}

/// Finite-dimensional Gaussian posterior on a candidate set.
#[derive(Debug, Clone)]
pub struct Posterior<F: Scalar> {
    /// Posterior mean, standardized units.
    pub mean: DVector<F>,
    /// Posterior covariance of the latent function (noise-free).
    pub covariance: DMatrix<F>,
}

/// A fitted local surrogate: training data, standardization, kernel
/// hyperparameters, and the Cholesky factor of K + sigma^2 I.
#[derive(Debug, Clone)]
pub struct GpModel<F: Scalar> {
    train_x: DMatrix<F>,
    z: DVector<F>,
    params: KernelParams<F>,
    stats: StandardizationStats<F>,
    chol: CholeskyFactor<F>,
    alpha: DVector<F>,
    lml: F,
}

impl<F: Scalar> GpModel<F> {
    /// Builds the model at fixed (clamped) hyperparameters, no fitting.
    pub fn with_params(
        train_x: DMatrix<F>,
        y_raw: &DVector<F>,
        params: KernelParams<F>,
    ) -> Result<Self> {
        let stats = StandardizationStats::from_values(y_raw);
        let z = y_raw.map(|y| stats.standardize(y));
        build_model(train_x, z, stats, params.clamped())
    }

    pub fn len(&self) -> usize {
        self.train_x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.train_x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.train_x.ncols()
    }

    pub fn params(&self) -> &KernelParams<F> {
        &self.params
    }

    pub fn stats(&self) -> &StandardizationStats<F> {
        &self.stats
    }

    pub fn train_inputs(&self) -> &DMatrix<F> {
        &self.train_x
    }

    pub fn standardized_targets(&self) -> &DVector<F> {
        &self.z
    }

    /// Lower-triangular factor of K + sigma^2 I (plus any jitter used).
    pub fn chol_factor(&self) -> &DMatrix<F> {
        self.chol.l()
    }

    /// Log-marginal likelihood at the model's hyperparameters.
    pub fn lml(&self) -> F {
        self.lml
    }

    /// GP posterior (mean and latent covariance) on a candidate set, in
    /// standardized units.
    pub fn posterior(&self, candidates: &DMatrix<F>) -> Result<Posterior<F>> {
        if candidates.nrows() == 0 {
            return Err(Error::invalid("empty candidate set"));
        }
        if candidates.ncols() != self.dim() {
            return Err(Error::invalid("candidate dimension mismatch"));
        }
        check_finite(candidates)?;

        let ks = cross_kernel_matrix_unchecked(&self.train_x, candidates, &self.params);
        let mean = ks.transpose() * &self.alpha
            + DVector::from_element(candidates.nrows(), self.params.mean_constant);

        let mut v = ks;
        self.chol.solve_lower_in_place(&mut v);
        let vt = v.transpose();
        let mut covariance = kernel_matrix_unchecked(candidates, &self.params);
        covariance.gemm(-F::one(), &vt, &v, F::one());
        symmetrize(&mut covariance);
        for i in 0..covariance.nrows() {
            if covariance[(i, i)] < F::zero() {
                covariance[(i, i)] = F::zero();
            }
        }
        Ok(Posterior { mean, covariance })
    }

    /// Posterior mean only; avoids forming the candidate covariance.
    pub fn posterior_mean(&self, points: &DMatrix<F>) -> Result<DVector<F>> {
        if points.ncols() != self.dim() {
            return Err(Error::invalid("candidate dimension mismatch"));
        }
        check_finite(points)?;
        let ks = cross_kernel_matrix_unchecked(&self.train_x, points, &self.params);
        Ok(ks.transpose() * &self.alpha
            + DVector::from_element(points.nrows(), self.params.mean_constant))
    }
}

/// Matérn-5/2 ARD kernel between two points.
pub fn matern52_ard<F: Scalar>(x: &[F], x_prime: &[F], params: &KernelParams<F>) -> Result<F> {
    if x.len() != x_prime.len() || x.len() != params.dim() {
        return Err(Error::invalid("kernel input dimension mismatch"));
    }
    if !x.iter().chain(x_prime.iter()).all(|v| v.is_finite()) {
        return Err(Error::invalid("non-finite kernel input"));
    }
    params.validate()?;
    let mut r2 = F::zero();
    for i in 0..x.len() {
        let u = (x[i] - x_prime[i]) / params.lengthscales[i];
        r2 += u * u;
    }
    Ok(matern52_from_r2(r2, params.signal_variance))
}

#[inline]
fn matern52_from_r2<F: Scalar>(r2: F, signal_variance: F) -> F {
    let r = r2.sqrt();
    let sqrt5 = cast::<F>(SQRT5);
    let c = cast::<F>(FIVE_THIRDS);
    signal_variance * (F::one() + sqrt5 * r + c * r2) * (-sqrt5 * r).exp()
}

/// Kernel Gram matrix of a set of points (noise-free; diagonal equals the
/// signal variance exactly).
pub fn kernel_matrix<F: Scalar>(x: &DMatrix<F>, params: &KernelParams<F>) -> Result<DMatrix<F>> {
    if x.nrows() == 0 {
        return Err(Error::invalid("kernel matrix needs at least one point"));
    }
    if x.ncols() != params.dim() {
        return Err(Error::invalid("kernel input dimension mismatch"));
    }
    check_finite(x)?;
    params.validate()?;
    Ok(kernel_matrix_unchecked(x, params))
}

fn check_finite<F: Scalar>(x: &DMatrix<F>) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::invalid("non-finite input"))
    }
}

fn scaled_inputs<F: Scalar>(x: &DMatrix<F>, lengthscales: &DVector<F>) -> DMatrix<F> {
    let mut xs = x.clone();
    for j in 0..xs.ncols() {
        let inv = F::one() / lengthscales[j];
        for v in xs.column_mut(j).iter_mut() {
            *v *= inv;
        }
    }
    xs
}

/// Squared scaled distances r^2 between all row pairs, via one Gram GEMM.
fn scaled_sq_dists<F: Scalar>(xs: &DMatrix<F>) -> DMatrix<F> {
    let n = xs.nrows();
    let xst = xs.transpose();
    let mut gram = DMatrix::zeros(n, n);
    gram.gemm(F::one(), xs, &xst, F::zero());
    let mut sq = DVector::zeros(n);
    for i in 0..n {
        sq[i] = gram[(i, i)];
    }
    let two = cast::<F>(2.0);
    for j in 0..n {
        for i in 0..n {
            let v = sq[i] + sq[j] - two * gram[(i, j)];
            gram[(i, j)] = if v > F::zero() { v } else { F::zero() };
        }
        gram[(j, j)] = F::zero();
    }
    gram
}

fn scaled_sq_dists_cross<F: Scalar>(xs_a: &DMatrix<F>, xs_b: &DMatrix<F>) -> DMatrix<F> {
    let (na, nb) = (xs_a.nrows(), xs_b.nrows());
    let xbt = xs_b.transpose();
    let mut cross = DMatrix::zeros(na, nb);
    cross.gemm(F::one(), xs_a, &xbt, F::zero());
    let sq_a: Vec<F> = (0..na).map(|i| xs_a.row(i).norm_squared()).collect();
    let sq_b: Vec<F> = (0..nb).map(|i| xs_b.row(i).norm_squared()).collect();
    let two = cast::<F>(2.0);
    for j in 0..nb {
        for i in 0..na {
            let v = sq_a[i] + sq_b[j] - two * cross[(i, j)];
            cross[(i, j)] = if v > F::zero() { v } else { F::zero() };
        }
    }
    cross
}

fn kernel_matrix_unchecked<F: Scalar>(x: &DMatrix<F>, params: &KernelParams<F>) -> DMatrix<F> {
    let xs = scaled_inputs(x, &params.lengthscales);
    let mut k = scaled_sq_dists(&xs);
    let sv = params.signal_variance;
    for v in k.iter_mut() {
        *v = matern52_from_r2(*v, sv);
    }
    symmetrize(&mut k);
    for i in 0..k.nrows() {
        k[(i, i)] = sv;
    }
    k
}

fn cross_kernel_matrix_unchecked<F: Scalar>(
    x_a: &DMatrix<F>,
    x_b: &DMatrix<F>,
    params: &KernelParams<F>,
) -> DMatrix<F> {
    let xs_a = scaled_inputs(x_a, &params.lengthscales);
    let xs_b = scaled_inputs(x_b, &params.lengthscales);
    let mut k = scaled_sq_dists_cross(&xs_a, &xs_b);
    let sv = params.signal_variance;
    for v in k.iter_mut() {
        *v = matern52_from_r2(*v, sv);
    }
    k
}

fn symmetrize<F: Scalar>(m: &mut DMatrix<F>) {
    let n = m.nrows();
    let half = cast::<F>(0.5);
    for j in 0..n {
        for i in (j + 1)..n {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Kernel system shared by the likelihood and its gradient.
struct KernelSystem<F: Scalar> {
    k_noiseless: DMatrix<F>,
    sq_dists: DMatrix<F>,
    chol: CholeskyFactor<F>,
    alpha: DVector<F>,
    lml: F,
}

fn build_system<F: Scalar>(
    x: &DMatrix<F>,
    z: &DVector<F>,
    params: &KernelParams<F>,
) -> Result<KernelSystem<F>> {
    let n = x.nrows();
    let xs = scaled_inputs(x, &params.lengthscales);
    let sq_dists = scaled_sq_dists(&xs);
    let sv = params.signal_variance;
    let mut k_noiseless = sq_dists.clone();
    for v in k_noiseless.iter_mut() {
        *v = matern52_from_r2(*v, sv);
    }
    for i in 0..n {
        k_noiseless[(i, i)] = sv;
    }

    let mut k_full = k_noiseless.clone();
    let nv = params.noise_variance;
    for i in 0..n {
        k_full[(i, i)] += nv;
    }
    let chol = CholeskyFactor::factor(&k_full)?;
    let centered = z.map(|v| v - params.mean_constant);
    let alpha = chol.solve_vec(&centered);
    let half = cast::<F>(0.5);
    let lml = -half * centered.dot(&alpha)
        - half * chol.log_det()
        - half * cast::<F>(n as f64) * cast::<F>((2.0 * std::f64::consts::PI).ln());
    Ok(KernelSystem {
        k_noiseless,
        sq_dists,
        chol,
        alpha,
        lml,
    })
}

/// Log-marginal likelihood of standardized targets under the given
/// hyperparameters.
pub fn log_marginal_likelihood<F: Scalar>(
    x: &DMatrix<F>,
    y_standardized: &DVector<F>,
    params: &KernelParams<F>,
) -> Result<F> {
    if x.nrows() != y_standardized.len() || x.nrows() == 0 {
        return Err(Error::invalid(
            "inputs and targets must match and be nonempty",
        ));
    }
    check_finite(x)?;
    params.validate()?;
    Ok(build_system(x, y_standardized, params)?.lml)
}

/// Log-marginal likelihood together with its gradient with respect to the
/// log-hyperparameters, ordered [log l_1 .. log l_d, log s^2, log sigma^2].
pub fn lml_with_gradient<F: Scalar>(
    x: &DMatrix<F>,
    y_standardized: &DVector<F>,
    params: &KernelParams<F>,
) -> Result<(F, DVector<F>)> {
    if x.nrows() != y_standardized.len() || x.nrows() == 0 {
        return Err(Error::invalid(
            "inputs and targets must match and be nonempty",
        ));
    }
    let system = build_system(x, y_standardized, params)?;
    let grad = gradient_from_system(x, params, &system);
    Ok((system.lml, grad))
}

fn gradient_from_system<F: Scalar>(
    x: &DMatrix<F>,
    params: &KernelParams<F>,
    system: &KernelSystem<F>,
) -> DVector<F> {
    let n = x.nrows();
    let d = x.ncols();
    let half = cast::<F>(0.5);
    let sqrt5 = cast::<F>(SQRT5);

    // M = alpha alpha^T - K^{-1}; dLML/dtheta = 1/2 tr(M dK/dtheta).
    let kinv = system.chol.inverse();
    let mut m = kinv;
    for j in 0..n {
        let aj = system.alpha[j];
        for i in 0..n {
            m[(i, j)] = system.alpha[i] * aj - m[(i, j)];
        }
    }

    let mut grad = DVector::zeros(d + 2);

    // Noise: dK/dlog sigma^2 = sigma^2 I.
    let mut tr_m = F::zero();
    for i in 0..n {
        tr_m += m[(i, i)];
    }
    grad[d + 1] = half * params.noise_variance * tr_m;

    // Signal: dK/dlog s^2 = K_noiseless.
    let mut acc = F::zero();
    for (mv, kv) in m.iter().zip(system.k_noiseless.iter()) {
        acc += *mv * *kv;
    }
    grad[d] = half * acc;

    // Lengthscales: dK/dlog l_i has entries G_ab (x_ai - x_bi)^2 / l_i^2
    // with G = 5/3 s^2 (1 + sqrt5 r) exp(-sqrt5 r). Expanding the squared
    // difference turns the trace into GEMM-shaped sums: for symmetric
    // W = M .* G,
    //   sum_ab W_ab (x_ai - x_bi)^2 = 2 (sum_a x_ai^2 rowsum_a(W) - x_i . W x_i).
    let c = cast::<F>(FIVE_THIRDS) * params.signal_variance;
    let mut w = m;
    for (wv, r2) in w.iter_mut().zip(system.sq_dists.iter()) {
        let r = r2.sqrt();
        let g = c * (F::one() + sqrt5 * r) * (-sqrt5 * r).exp();
        *wv *= g;
    }
    let row_sums = &w * DVector::from_element(n, F::one());
    let wx = &w * x;
    for i in 0..d {
        let xi = x.column(i);
        let mut sq_dot = F::zero();
        let mut cross_dot = F::zero();
        for a in 0..n {
            sq_dot += xi[a] * xi[a] * row_sums[a];
            cross_dot += xi[a] * wx[(a, i)];
        }
        let li = params.lengthscales[i];
        grad[i] = (sq_dot - cross_dot) / (li * li);
    }
    grad
}

fn log_box<F: Scalar>(d: usize) -> BoxBounds<F> {
    let mut lo = DVector::zeros(d + 2);
    let mut hi = DVector::zeros(d + 2);
    for i in 0..d {
        lo[i] = cast(LENGTHSCALE_BOUNDS.0.ln());
        hi[i] = cast(LENGTHSCALE_BOUNDS.1.ln());
    }
    lo[d] = cast(SIGNAL_VARIANCE_BOUNDS.0.ln());
    hi[d] = cast(SIGNAL_VARIANCE_BOUNDS.1.ln());
    lo[d + 1] = cast(NOISE_VARIANCE_BOUNDS.0.ln());
    hi[d + 1] = cast(NOISE_VARIANCE_BOUNDS.1.ln());
    BoxBounds { lo, hi }
}

fn params_to_log_vec<F: Scalar>(params: &KernelParams<F>) -> DVector<F> {
    let d = params.dim();
    let mut v = DVector::zeros(d + 2);
    for i in 0..d {
        v[i] = params.lengthscales[i].ln();
    }
    v[d] = params.signal_variance.ln();
    v[d + 1] = params.noise_variance.ln();
    v
}

fn params_from_log_vec<F: Scalar>(v: &DVector<F>) -> KernelParams<F> {
    let d = v.len() - 2;
    let lengthscales = DVector::from_fn(d, |i, _| v[i].exp());
    KernelParams::new(lengthscales, v[d].exp(), v[d + 1].exp())
}

/// Fits kernel hyperparameters by maximizing the log-marginal likelihood.
///
/// Raw targets are standardized first (the model carries the statistics).
/// The optimizer is projected L-BFGS in log space, restarted from three
/// points: the clamped `init`, the box center, and one random draw from the
/// box. `budget` caps the total number of quasi-Newton iterations across
/// the restarts; `budget = 0` returns the model at the clamped `init`.
/// Every start is at least evaluated, so the result is never worse than the
/// best of the three starts.
pub fn fit_hyperparameters<F: Scalar, R: Rng + ?Sized>(
    x: &DMatrix<F>,
    y_raw: &DVector<F>,
    init: &KernelParams<F>,
    budget: usize,
    rng: &mut R,
) -> Result<GpModel<F>> {
    let n = x.nrows();
    let d = x.ncols();
    if n == 0 || y_raw.len() != n {
        return Err(Error::invalid("fit needs matching, nonempty inputs"));
    }
    check_finite(x)?;
    if init.dim() != d {
        return Err(Error::invalid("init dimension mismatch"));
    }

    let stats = StandardizationStats::from_values(y_raw);
    let z = y_raw.map(|y| stats.standardize(y));
    let init = init.clamped();

    if budget == 0 {
        return build_model(x.clone(), z, stats, init);
    }

    let bounds = log_box::<F>(d);
    let random_start = DVector::from_fn(d + 2, |i, _| {
        let u = F::unit_uniform(rng);
        bounds.lo[i] + (bounds.hi[i] - bounds.lo[i]) * u
    });
    let starts = [
        params_to_log_vec(&init),
        params_to_log_vec(&KernelParams::centered(d)),
        random_start,
    ];

    // Both closures share a one-entry cache so the gradient evaluation at
    // an accepted line-search point reuses its factorization.
    use std::cell::RefCell;
    let cache: RefCell<Option<(DVector<F>, KernelSystem<F>)>> = RefCell::new(None);
    let ensure = |theta: &DVector<F>| -> Result<()> {
        let hit = cache
            .borrow()
            .as_ref()
            .map(|(t, _)| t == theta)
            .unwrap_or(false);
        if !hit {
            let system = build_system(x, &z, &params_from_log_vec(theta))?;
            *cache.borrow_mut() = Some((theta.clone(), system));
        }
        Ok(())
    };
    let value = |theta: &DVector<F>| -> Result<F> {
        ensure(theta)?;
        Ok(-cache.borrow().as_ref().unwrap().1.lml)
    };
    let value_grad = |theta: &DVector<F>| -> Result<(F, DVector<F>)> {
        ensure(theta)?;
        let borrow = cache.borrow();
        let (_, system) = borrow.as_ref().unwrap();
        let params = params_from_log_vec(theta);
        let grad = gradient_from_system(x, &params, system);
        Ok((-system.lml, -grad))
    };

    let per_start = budget.div_ceil(starts.len());
    let mut remaining = budget;
    let mut best: Option<(DVector<F>, F)> = None;
    for start in starts {
        let mut clamped_start = start;
        bounds.clamp(&mut clamped_start);
        if remaining == 0 {
            let f = value(&clamped_start)?;
            if best.as_ref().map(|(_, bf)| f < *bf).unwrap_or(true) {
                best = Some((clamped_start, f));
            }
            continue;
        }
        let iters = per_start.min(remaining);
        let m = minimize_in_box(&value, &value_grad, clamped_start, &bounds, iters)?;
        remaining = remaining.saturating_sub((m.grad_evals.saturating_sub(1)).max(1));
        if best.as_ref().map(|(_, bf)| m.value < *bf).unwrap_or(true) {
            best = Some((m.x, m.value));
        }
    }

    let (theta, _) = best.expect("at least one start evaluated");
    build_model(x.clone(), z, stats, params_from_log_vec(&theta))
}

fn build_model<F: Scalar>(
    train_x: DMatrix<F>,
    z: DVector<F>,
    stats: StandardizationStats<F>,
    params: KernelParams<F>,
) -> Result<GpModel<F>> {
    let system = build_system(&train_x, &z, &params)?;
    Ok(GpModel {
        train_x,
        z,
        params,
        stats,
        chol: system.chol,
        alpha: system.alpha,
        lml: system.lml,
    })
}

/// Pre-factored sampler for repeated joint draws from one posterior.
#[derive(Debug, Clone)]
pub struct JointSampler<F: Scalar> {
    mean: DVector<F>,
    /// None when the covariance is exactly zero (degenerate posterior).
    scale: Option<DMatrix<F>>,
}

impl<F: Scalar> JointSampler<F> {
    pub fn new(posterior: &Posterior<F>) -> Result<Self> {
        let r = posterior.mean.len();
        if posterior.covariance.nrows() != r || posterior.covariance.ncols() != r {
            return Err(Error::invalid("posterior covariance shape mismatch"));
        }
        if posterior.covariance.iter().all(|&v| v == F::zero()) {
            return Ok(JointSampler {
                mean: posterior.mean.clone(),
                scale: None,
            });
        }
        let factor = CholeskyFactor::factor(&posterior.covariance)?;
        Ok(JointSampler {
            mean: posterior.mean.clone(),
            scale: Some(factor.l().clone()),
        })
    }

    /// One joint draw: mean + L eta with eta standard normal.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<F> {
        match &self.scale {
            None => self.mean.clone(),
            Some(l) => {
                let eta = DVector::from_fn(self.mean.len(), |_, _| F::standard_normal(rng));
                l * eta + &self.mean
            }
        }
    }
}

/// Draws `count` independent joint samples; each row of the result is one
/// realization on the candidate set.
pub fn sample_joint<F: Scalar, R: Rng + ?Sized>(
    posterior: &Posterior<F>,
    count: usize,
    rng: &mut R,
) -> Result<DMatrix<F>> {
    if count == 0 {
        return Err(Error::invalid("sample count must be positive"));
    }
    let sampler = JointSampler::new(posterior)?;
    let r = posterior.mean.len();
    let mut out = DMatrix::zeros(count, r);
    for i in 0..count {
        let draw = sampler.draw(rng);
        out.row_mut(i).copy_from(&draw.transpose());
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
