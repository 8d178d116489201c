//! Fitting the design vector to target current-voltage observations.
//!
//! The loss is the mean squared current error over the observed biases. Its
//! gradient comes from one forward-mode pass with all seven parameters
//! seeded; AdaBelief steps descend it, parameters are clamped back into the
//! search box after every step, and many random starts guard against local
//! minima.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::observables::{current, Grids};
use crate::physics::{DesignVector, Device, PotentialParams};
use crate::rng::SplitMix64;
use crate::scalar::{Dual, Scalar, TANGENT_WIDTH};

/// Target `(V, I)` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    biases: Vec<f64>,
    currents: Vec<f64>,
}

impl Observations {
    pub fn new(biases: Vec<f64>, currents: Vec<f64>) -> Result<Self> {
        if biases.len() != currents.len() {
            return Err(Error::LengthMismatch {
                expected: biases.len(),
                found: currents.len(),
            });
        }
        if biases.is_empty() {
            return Err(Error::InvalidParameter {
                name: "observations",
                value: 0.0,
            });
        }
        if let Some(&v) = biases.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter {
                name: "bias",
                value: v,
            });
        }
        if let Some(&i) = currents.iter().find(|i| !i.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "target current",
                value: i,
            });
        }
        Ok(Observations { biases, currents })
    }

    /// Targets reproduced exactly by `design`.
    pub fn synthetic(
        design: &DesignVector,
        biases: Vec<f64>,
        device: &Device,
        grids: &Grids,
    ) -> Result<Self> {
        let currents = biases
            .iter()
            .map(|&v| current(v, &design.potential, design.fermi, device, grids))
            .collect::<Result<Vec<f64>>>()?;
        Observations::new(biases, currents)
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub fn currents(&self) -> &[f64] {
        &self.currents
    }

    pub fn len(&self) -> usize {
        self.biases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.biases.is_empty()
    }
}

/// Device and grids the loss is evaluated on.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Simulation {
    pub device: Device,
    pub grids: Grids,
}

/// `(1/m) sum_k (I(V_k) - I_k)^2`, over any scalar.
pub fn loss_generic<S: Scalar>(
    potential: &PotentialParams<S>,
    fermi: S,
    observations: &Observations,
    sim: &Simulation,
) -> Result<S> {
    let mut total = S::zero();
    for (&v, &target) in observations.biases.iter().zip(&observations.currents) {
        let residual = current(v, potential, fermi, &sim.device, &sim.grids)?.offset(-target);
        total = total + residual * residual;
    }
    Ok(total.scale(1.0 / observations.len() as f64))
}

pub fn loss(design: &DesignVector, observations: &Observations, sim: &Simulation) -> Result<f64> {
    design.validate()?;
    loss_generic(&design.potential, design.fermi, observations, sim)
}

/// Loss value and its gradient from one seeded forward pass.
pub fn loss_and_gradient(
    design: &DesignVector,
    observations: &Observations,
    sim: &Simulation,
) -> Result<(f64, [f64; TANGENT_WIDTH])> {
    design.validate()?;
    let (potential, fermi) = design.seeded();
    let l: Dual = loss_generic(&potential, fermi, observations, sim)?;
    Ok((l.value, l.gradient()))
}

pub fn loss_gradient(
    design: &DesignVector,
    observations: &Observations,
    sim: &Simulation,
) -> Result<[f64; TANGENT_WIDTH]> {
    loss_and_gradient(design, observations, sim).map(|(_, g)| g)
}

/// Central differences of `f` with per-component step `h max(1, |x_i|)`.
pub fn central_difference<F>(f: F, x: &[f64; TANGENT_WIDTH], h: f64) -> Result<[f64; TANGENT_WIDTH]>
where
    F: Fn(&[f64; TANGENT_WIDTH]) -> Result<f64>,
{
    let mut gradient = [0.0; TANGENT_WIDTH];
    for (i, g) in gradient.iter_mut().enumerate() {
        let step = h * x[i].abs().max(1.0);
        let mut plus = *x;
        let mut minus = *x;
        plus[i] += step;
        minus[i] -= step;
        *g = (f(&plus)? - f(&minus)?) / (2.0 * step);
    }
    Ok(gradient)
}

/// [`central_difference`] applied to the loss.
pub fn finite_difference_gradient(
    design: &DesignVector,
    observations: &Observations,
    sim: &Simulation,
    h: f64,
) -> Result<[f64; TANGENT_WIDTH]> {
    central_difference(
        |v| loss(&design.with_values(*v), observations, sim),
        &design.to_array(),
        h,
    )
}

/// Central differences of each current residual, combined as `(2/m) J^T r`.
///
/// Differencing the residuals rather than the loss avoids cancellation when
/// the loss is dominated by a constant target mismatch.
pub fn finite_difference_gradient_by_residuals(
    design: &DesignVector,
    observations: &Observations,
    sim: &Simulation,
    h: f64,
) -> Result<[f64; TANGENT_WIDTH]> {
    let base = design.to_array();
    let m = observations.len() as f64;
    let mut gradient = [0.0; TANGENT_WIDTH];
    for (&v, &target) in observations.biases.iter().zip(&observations.currents) {
        let at = |values: &[f64; TANGENT_WIDTH]| -> Result<f64> {
            let d = design.with_values(*values);
            d.validate()?;
            current(v, &d.potential, d.fermi, &sim.device, &sim.grids)
        };
        let residual = at(&base)? - target;
        let jacobian_row = central_difference(at, &base, h)?;
        for (g, j) in gradient.iter_mut().zip(jacobian_row) {
            *g += 2.0 * residual * j / m;
        }
    }
    Ok(gradient)
}

/// AdaBelief hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaBelief {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Added both inside the second-moment recursion and to its square root.
    pub epsilon: f64,
}

impl Default for AdaBelief {
    fn default() -> Self {
        AdaBelief {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerState {
    pub first_moment: [f64; TANGENT_WIDTH],
    /// Exponential average of `(g - m)^2`, the "belief" in the gradient.
    pub second_moment: [f64; TANGENT_WIDTH],
    pub step_count: u64,
    pub hyper: AdaBelief,
}

impl OptimizerState {
    pub fn new(hyper: AdaBelief) -> Self {
        OptimizerState {
            first_moment: [0.0; TANGENT_WIDTH],
            second_moment: [0.0; TANGENT_WIDTH],
            step_count: 0,
            hyper,
        }
    }

    /// Advances the moments with `gradient` and returns the updated parameters.
    pub fn step(
        &mut self,
        gradient: &[f64; TANGENT_WIDTH],
        params: &[f64; TANGENT_WIDTH],
    ) -> [f64; TANGENT_WIDTH] {
        let AdaBelief {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.hyper;
        self.step_count += 1;
        let t = self.step_count as f64;
        let bias1 = 1.0 - libm::pow(beta1, t);
        let bias2 = 1.0 - libm::pow(beta2, t);
        let mut next = *params;
        for i in 0..TANGENT_WIDTH {
            let g = gradient[i];
            let m = beta1 * self.first_moment[i] + (1.0 - beta1) * g;
            let surprise = g - m;
            let s = beta2 * self.second_moment[i] + (1.0 - beta2) * surprise * surprise + epsilon;
            self.first_moment[i] = m;
            self.second_moment[i] = s;
            let m_hat = m / bias1;
            let s_hat = s / bias2;
            next[i] -= learning_rate * m_hat / (libm::sqrt(s_hat) + epsilon);
        }
        next
    }
}

/// One AdaBelief update as a pure function.
pub fn adabelief_step(
    state: &OptimizerState,
    gradient: &[f64; TANGENT_WIDTH],
    design: &DesignVector,
) -> (OptimizerState, DesignVector) {
    let mut next = *state;
    let params = next.step(gradient, &design.to_array());
    (next, design.with_values(params))
}

/// Axis-aligned search box for the design vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: [f64; TANGENT_WIDTH],
    pub upper: [f64; TANGENT_WIDTH],
}

impl Bounds {
    /// Same range for both barriers: height, center, width, then the Fermi level.
    pub fn symmetric(
        height: (f64, f64),
        center: (f64, f64),
        width: (f64, f64),
        fermi: (f64, f64),
    ) -> Result<Self> {
        let lower = [
            height.0, center.0, width.0, height.0, center.0, width.0, fermi.0,
        ];
        let upper = [
            height.1, center.1, width.1, height.1, center.1, width.1, fermi.1,
        ];
        let bounds = Bounds { lower, upper };
        bounds.validate()?;
        Ok(bounds)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..TANGENT_WIDTH {
            if !(self.lower[i] <= self.upper[i]
                && self.lower[i].is_finite()
                && self.upper[i].is_finite())
            {
                return Err(Error::InvalidParameter {
                    name: DesignVector::NAMES[i],
                    value: self.lower[i],
                });
            }
        }
        // Every point of the box must be a feasible design.
        let corner = |pick_upper: bool| {
            let v = if pick_upper { self.upper } else { self.lower };
            DesignVector::from_array(v, 1.0).validate()
        };
        corner(false)?;
        corner(true)
    }

    pub fn clamp(&self, values: [f64; TANGENT_WIDTH]) -> [f64; TANGENT_WIDTH] {
        core::array::from_fn(|i| values[i].clamp(self.lower[i], self.upper[i]))
    }

    pub fn contains(&self, values: &[f64; TANGENT_WIDTH]) -> bool {
        (0..TANGENT_WIDTH).all(|i| self.lower[i] <= values[i] && values[i] <= self.upper[i])
    }

    /// Uniform draw from the box, components in design-vector order.
    pub fn sample(&self, rng: &mut SplitMix64, sharpness: f64) -> DesignVector {
        let values = core::array::from_fn(|i| {
            self.lower[i] + rng.next_f64() * (self.upper[i] - self.lower[i])
        });
        DesignVector::from_array(values, sharpness)
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            lower: [0.05, 0.2, 0.02, 0.05, 0.2, 0.02, 0.05],
            upper: [0.5, 0.8, 0.2, 0.5, 0.8, 0.2, 0.3],
        }
    }
}

/// Settings shared by every optimization start.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    pub iterations: usize,
    pub hyper: AdaBelief,
    pub bounds: Bounds,
    /// Edge sharpness given to randomly drawn barriers, in nm^-1.
    pub sharpness: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        OptimizeOptions {
            iterations: 1000,
            hyper: AdaBelief::default(),
            bounds: Bounds::default(),
            sharpness: 1.0,
        }
    }
}

/// Result of optimizing from one start.
#[derive(Debug, Clone, PartialEq)]
pub struct StartOutcome {
    pub start: DesignVector,
    /// Last iterate reached (the start itself if nothing ran).
    pub params: DesignVector,
    /// Loss at every iterate, the final one included.
    pub history: Vec<f64>,
    /// Why the start was abandoned, if it was.
    pub failure: Option<Error>,
}

impl StartOutcome {
    pub fn final_loss(&self) -> Option<f64> {
        match self.failure {
            None => self.history.last().copied(),
            Some(_) => None,
        }
    }
}

/// Runs `options.iterations` AdaBelief steps from `start`.
pub fn optimize(
    start: &DesignVector,
    observations: &Observations,
    sim: &Simulation,
    options: &OptimizeOptions,
) -> StartOutcome {
    let mut outcome = StartOutcome {
        start: *start,
        params: *start,
        history: Vec::with_capacity(options.iterations + 1),
        failure: None,
    };
    let mut state = OptimizerState::new(options.hyper);
    for iteration in 0..=options.iterations {
        let evaluated = if iteration < options.iterations {
            loss_and_gradient(&outcome.params, observations, sim)
        } else {
            loss(&outcome.params, observations, sim).map(|l| (l, [0.0; TANGENT_WIDTH]))
        };
        let (value, gradient) = match evaluated {
            Ok(pair) => pair,
            Err(e) => {
                outcome.failure = Some(e);
                return outcome;
            }
        };
        if !value.is_finite() || gradient.iter().any(|g| !g.is_finite()) {
            outcome.failure = Some(Error::NonFiniteLoss { iteration });
            return outcome;
        }
        outcome.history.push(value);
        if iteration < options.iterations {
            let next = state.step(&gradient, &outcome.params.to_array());
            outcome.params = outcome.params.with_values(options.bounds.clamp(next));
        }
    }
    outcome
}

/// Best start over a multi-start run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best_params: DesignVector,
    pub best_loss: f64,
    pub start_index: usize,
    pub seed: u64,
    pub starts: Vec<StartOutcome>,
}

impl RunResult {
    /// Collects outcomes in start order and picks the lowest final loss,
    /// ties going to the lower index.
    pub fn from_outcomes(starts: Vec<StartOutcome>, seed: u64) -> Result<Self> {
        let mut best: Option<(usize, f64)> = None;
        for (i, outcome) in starts.iter().enumerate() {
            if let Some(l) = outcome.final_loss() {
                if best.map_or(true, |(_, b)| l < b) {
                    best = Some((i, l));
                }
            }
        }
        let (start_index, best_loss) = best.ok_or(Error::AllStartsFailed)?;
        Ok(RunResult {
            best_params: starts[start_index].params,
            best_loss,
            start_index,
            seed,
            starts,
        })
    }
}

/// Initial designs for a multi-start run, drawn uniformly from the bounds.
pub fn draw_starts(count: usize, seed: u64, options: &OptimizeOptions) -> Vec<DesignVector> {
    let mut rng = SplitMix64::new(seed);
    (0..count)
        .map(|_| options.bounds.sample(&mut rng, options.sharpness))
        .collect()
}

/// Optimizes from each start in order and keeps the best.
pub fn run_starts(
    starts: &[DesignVector],
    seed: u64,
    observations: &Observations,
    sim: &Simulation,
    options: &OptimizeOptions,
) -> Result<RunResult> {
    let outcomes = starts
        .iter()
        .map(|s| optimize(s, observations, sim, options))
        .collect();
    RunResult::from_outcomes(outcomes, seed)
}

/// `count` random starts from a seeded generator, each optimized independently.
pub fn multi_start(
    observations: &Observations,
    count: usize,
    seed: u64,
    sim: &Simulation,
    options: &OptimizeOptions,
) -> Result<RunResult> {
    if count == 0 {
        return Err(Error::InvalidParameter {
            name: "starts",
            value: 0.0,
        });
    }
    options.bounds.validate()?;
    run_starts(
        &draw_starts(count, seed, options),
        seed,
        observations,
        sim,
        options,
    )
}
