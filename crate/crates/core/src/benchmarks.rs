//! Synthetic benchmark objectives, a Gaussian-noise wrapper, and the
//! random-search baseline.
//!
//! Objectives are defined on their native boxes; [`ObjectiveSpec`] carries
//! the affine map between the box and the unit cube the optimizer works in.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use crate::trace::RunTrace;

/// Objective evaluated in unit-cube coordinates, as consumed by the
/// optimizer and the baselines.
pub trait UnitObjective<F: Scalar> {
    fn eval(&mut self, x: &[F]) -> Result<F>;
}

impl<F: Scalar, T: FnMut(&[F]) -> Result<F>> UnitObjective<F> for T {
    fn eval(&mut self, x: &[F]) -> Result<F> {
        self(x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Ackley,
    Levy,
    Rastrigin,
    Hartmann6,
}

/// A named benchmark function with its native box and known optimum.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec<F: Scalar> {
    name: &'static str,
    dim: usize,
    lower: DVector<F>,
    upper: DVector<F>,
    kind: Kind,
    known_optimum: Option<F>,
}

impl<F: Scalar> ObjectiveSpec<F> {
    /// Looks an objective up by name. `ackley`, `levy`, and `rastrigin`
    /// accept any dimension; `hartmann6` is fixed to six.
    pub fn by_name(name: &str, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("objective dimension must be positive"));
        }
        let spec = match name {
            "ackley" => ObjectiveSpec {
                name: "ackley",
                dim,
                lower: DVector::from_element(dim, cast(-5.0)),
                upper: DVector::from_element(dim, cast(10.0)),
                kind: Kind::Ackley,
                known_optimum: Some(F::zero()),
            },
            "levy" => ObjectiveSpec {
                name: "levy",
                dim,
                lower: DVector::from_element(dim, cast(-5.0)),
                upper: DVector::from_element(dim, cast(10.0)),
                kind: Kind::Levy,
                known_optimum: Some(F::zero()),
            },
            "rastrigin" => ObjectiveSpec {
                name: "rastrigin",
                dim,
                lower: DVector::from_element(dim, cast(-3.0)),
                upper: DVector::from_element(dim, cast(4.0)),
                kind: Kind::Rastrigin,
                known_optimum: Some(F::zero()),
            },
            "hartmann6" => {
                if dim != 6 {
                    return Err(Error::invalid("hartmann6 is only defined for dimension 6"));
                }
                ObjectiveSpec {
                    name: "hartmann6",
                    dim: 6,
                    lower: DVector::from_element(6, F::zero()),
                    upper: DVector::from_element(6, F::one()),
                    kind: Kind::Hartmann6,
                    known_optimum: Some(cast(-3.32237)),
                }
            }
            other => return Err(Error::invalid(format!("unknown objective '{other}'"))),
        };
        Ok(spec)
    }

    /// All registry names.
    pub fn names() -> &'static [&'static str] {
        &["ackley", "levy", "rastrigin", "hartmann6"]
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> (&DVector<F>, &DVector<F>) {
        (&self.lower, &self.upper)
    }

    pub fn known_optimum(&self) -> Option<F> {
        self.known_optimum
    }

    /// Evaluates at raw (native-box) coordinates.
    pub fn evaluate(&self, x: &[F]) -> Result<F> {
        if x.len() != self.dim {
            return Err(Error::invalid("evaluation dimension mismatch"));
        }
        for (i, &v) in x.iter().enumerate() {
            if !v.is_finite() || v < self.lower[i] || v > self.upper[i] {
                return Err(Error::invalid(format!(
                    "coordinate {i} = {:?} outside the objective box",
                    v.to_f64()
                )));
            }
        }
        Ok(match self.kind {
            Kind::Ackley => ackley(x),
            Kind::Levy => levy(x),
            Kind::Rastrigin => rastrigin(x),
            Kind::Hartmann6 => hartmann6(x),
        })
    }

    /// Maps unit-cube coordinates to the native box.
    pub fn to_raw(&self, unit: &[F]) -> Vec<F> {
        unit.iter()
            .enumerate()
            .map(|(i, &u)| self.lower[i] + u * (self.upper[i] - self.lower[i]))
            .collect()
    }

    /// Maps native-box coordinates to the unit cube.
    pub fn to_unit(&self, raw: &[F]) -> Vec<F> {
        raw.iter()
            .enumerate()
            .map(|(i, &r)| (r - self.lower[i]) / (self.upper[i] - self.lower[i]))
            .collect()
    }

    /// The objective as a unit-cube closure (what the optimizer consumes).
    pub fn unit_objective(&self) -> impl FnMut(&[F]) -> Result<F> + '_ {
        move |unit: &[F]| {
            let raw = self.to_raw(unit);
            self.evaluate(&raw)
        }
    }
}

/// Ackley function (a = 20, b = 0.2, c = 2 pi); global minimum 0 at the
/// origin.
pub fn ackley<F: Scalar>(x: &[F]) -> F {
    let d = cast::<F>(x.len() as f64);
    let a = cast::<F>(20.0);
    let b = cast::<F>(0.2);
    let c = F::two_pi();
    let sq = x.iter().map(|&v| v * v).fold(F::zero(), |s, v| s + v) / d;
    let cosines = x
        .iter()
        .map(|&v| (c * v).cos())
        .fold(F::zero(), |s, v| s + v)
        / d;
    -a * (-b * sq.sqrt()).exp() - cosines.exp() + a + F::e()
}

/// Levy function; global minimum 0 at (1, ..., 1).
pub fn levy<F: Scalar>(x: &[F]) -> F {
    let quarter = cast::<F>(0.25);
    let w = |v: F| F::one() + (v - F::one()) * quarter;
    let pi = F::pi();
    let d = x.len();
    let w1 = w(x[0]);
    let mut total = (pi * w1).sin().powi(2);
    for &v in &x[..d - 1] {
        let wi = w(v);
        let s = (pi * wi + F::one()).sin();
        total += (wi - F::one()).powi(2) * (F::one() + cast::<F>(10.0) * s * s);
    }
    let wd = w(x[d - 1]);
    let s = (F::two_pi() * wd).sin();
    total + (wd - F::one()).powi(2) * (F::one() + s * s)
}

/// Rastrigin function (A = 10); global minimum 0 at the origin.
pub fn rastrigin<F: Scalar>(x: &[F]) -> F {
    let a = cast::<F>(10.0);
    let c = F::two_pi();
    x.iter().fold(a * cast::<F>(x.len() as f64), |acc, &v| {
        acc + v * v - a * (c * v).cos()
    })
}

const HARTMANN6_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
const HARTMANN6_P: [[f64; 6]; 4] = [
    [0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886],
    [0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991],
    [0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650],
    [0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381],
];

/// Six-dimensional Hartmann function on the unit cube; global minimum
/// about -3.32237.
pub fn hartmann6<F: Scalar>(x: &[F]) -> F {
    let mut total = F::zero();
    for i in 0..4 {
        let mut inner = F::zero();
        for j in 0..6 {
            let diff = x[j] - cast::<F>(HARTMANN6_P[i][j]);
            inner += cast::<F>(HARTMANN6_A[i][j]) * diff * diff;
        }
        total -= cast::<F>(HARTMANN6_ALPHA[i]) * (-inner).exp();
    }
    total
}

/// Wraps a unit-cube objective with additive Gaussian noise drawn from a
/// dedicated, seeded stream.
pub fn noisy<F: Scalar, O: FnMut(&[F]) -> Result<F>>(
    mut base: O,
    sigma: F,
    seed: u64,
) -> impl FnMut(&[F]) -> Result<F> {
    assert!(sigma >= F::zero(), "noise level must be nonnegative");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    move |x: &[F]| {
        let value = base(x)?;
        if sigma == F::zero() {
            Ok(value)
        } else {
            Ok(value + sigma * F::standard_normal(&mut rng))
        }
    }
}

/// Uniform random search over the unit cube; trace format matches the
/// optimizer's.
pub fn random_search<F: Scalar, O: UnitObjective<F>, R: Rng + ?Sized>(
    objective: &mut O,
    dim: usize,
    budget: usize,
    rng: &mut R,
) -> Result<RunTrace<F>> {
    if budget == 0 {
        return Err(Error::invalid("random search budget must be positive"));
    }
    let mut trace = RunTrace::new();
    let mut point = vec![F::zero(); dim];
    for _ in 0..budget {
        for v in point.iter_mut() {
            *v = F::unit_uniform(rng);
        }
        let value = objective.eval(&point)?;
        trace.push(DVector::from_column_slice(&point), value, 0, F::one(), 0);
    }
    Ok(trace)
}
