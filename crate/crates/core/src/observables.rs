//! Transmission spectra and zero-temperature current.
//!
//! Currents are reported as the bare transmission integral
//! `I(V0) = ∫_{mu - V0}^{mu} T(E) dE` in eV; multiply by `2e/h` for amperes.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::physics::{
    sample_internal_potential, wavenumber_drain, wavenumber_source, Device, PotentialParams,
};
use crate::scalar::Scalar;
use crate::solver::{drain_amplitude, ScatteringState};

/// Guard added to `k1` in the transmission denominator, in nm^-1.
pub const TRANSMISSION_EPSILON: f64 = 1e-10;

/// Sizes of the energy grids used for the current integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grids {
    /// Transmission samples on `[0, mu]`.
    pub energy_points: usize,
    /// Quadrature nodes on `[mu - V0, mu]`.
    pub interp_points: usize,
}

impl Grids {
    pub fn new(energy_points: usize, interp_points: usize) -> Result<Self> {
        if energy_points < 2 {
            return Err(Error::InvalidParameter {
                name: "grids.energy_points",
                value: energy_points as f64,
            });
        }
        if interp_points < 2 {
            return Err(Error::InvalidParameter {
                name: "grids.interp_points",
                value: interp_points as f64,
            });
        }
        Ok(Grids {
            energy_points,
            interp_points,
        })
    }
}

impl Default for Grids {
    fn default() -> Self {
        Grids {
            energy_points: 100,
            interp_points: 100,
        }
    }
}

/// Transmission sampled on an energy grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<S> {
    pub energies: Vec<S>,
    pub transmission: Vec<S>,
}

/// Current at each applied bias.
#[derive(Debug, Clone, PartialEq)]
pub struct IvCurve {
    pub biases: Vec<f64>,
    pub currents: Vec<f64>,
}

/// `count` evenly spaced points from `start` to `end`, both included exactly.
fn linspace<S: Scalar>(start: S, end: S, count: usize) -> Vec<S> {
    let step = (end - start).scale(1.0 / (count - 1) as f64);
    (0..count)
        .map(|j| {
            if j + 1 == count {
                end
            } else {
                start + step.scale(j as f64)
            }
        })
        .collect()
}

/// Energy grid `[0, mu]` with `count` points.
pub fn energy_grid<S: Scalar>(fermi: S, count: usize) -> Vec<S> {
    linspace(S::zero(), fermi, count)
}

/// `T = k2 |psi_{n-1}|^2 / (k1 + eps)`.
pub fn transmission<S: Scalar>(
    energy: S,
    bias: f64,
    potential: &PotentialParams<S>,
    device: &Device,
) -> Result<S> {
    let internal = sample_internal_potential(potential, bias, device);
    transmission_with_profile(&internal, energy, bias, device)
}

/// [`transmission`] from a pre-sampled internal potential.
pub fn transmission_with_profile<S: Scalar>(
    internal: &[S],
    energy: S,
    bias: f64,
    device: &Device,
) -> Result<S> {
    let k1 = wavenumber_source(energy, &device.constants)?;
    let k2 = wavenumber_drain(energy, bias, &device.constants)?;
    let psi_drain = drain_amplitude(internal, energy, bias, device)?;
    Ok(k2 * psi_drain.abs2() / k1.offset(TRANSMISSION_EPSILON))
}

/// Transmission of an already solved state.
pub fn state_transmission<S: Scalar>(state: &ScatteringState<S>) -> S {
    let last = state.psi[state.psi.len() - 1];
    state.k2 * last.abs2() / state.k1.offset(TRANSMISSION_EPSILON)
}

/// Transmission at `count` energies evenly spaced on `[0, mu]`.
pub fn transmission_spectrum<S: Scalar>(
    bias: f64,
    potential: &PotentialParams<S>,
    fermi: S,
    device: &Device,
    count: usize,
) -> Result<Spectrum<S>> {
    if count < 2 {
        return Err(Error::InvalidParameter {
            name: "grids.energy_points",
            value: count as f64,
        });
    }
    let internal = sample_internal_potential(potential, bias, device);
    let energies = energy_grid(fermi, count);
    let transmission = energies
        .iter()
        .map(|&e| transmission_with_profile(&internal, e, bias, device))
        .collect::<Result<Vec<S>>>()?;
    Ok(Spectrum {
        energies,
        transmission,
    })
}

/// Piecewise-linear interpolation through `(xs, ys)`, holding the end values
/// outside the sampled range. `xs` must be increasing in value.
pub fn interpolate<S: Scalar>(x: S, xs: &[S], ys: &[S]) -> S {
    let n = xs.len();
    let xv = x.value();
    if xv <= xs[0].value() {
        return ys[0];
    }
    if xv >= xs[n - 1].value() {
        return ys[n - 1];
    }
    // Largest j with xs[j] <= x.
    let j = xs.partition_point(|p| p.value() <= xv) - 1;
    let slope = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
    slope * (x - xs[j]) + ys[j]
}

/// Trapezoid rule over sample points `xs`.
pub fn trapezoid<S: Scalar>(ys: &[S], xs: &[S]) -> S {
    xs.windows(2)
        .zip(ys.windows(2))
        .fold(S::zero(), |acc, (x, y)| {
            acc + (x[1] - x[0]) * (y[0] + y[1]).scale(0.5)
        })
}

/// Integrates an already computed spectrum over `[mu - V0, mu]` with
/// `interp_points` trapezoid nodes.
pub fn integrate_spectrum<S: Scalar>(
    spectrum: &Spectrum<S>,
    bias: f64,
    fermi: S,
    interp_points: usize,
) -> S {
    let nodes = linspace(fermi.offset(-bias), fermi, interp_points);
    let values: Vec<S> = nodes
        .iter()
        .map(|&e| interpolate(e, &spectrum.energies, &spectrum.transmission))
        .collect();
    trapezoid(&values, &nodes)
}

/// Zero-temperature current `∫_{mu - V0}^{mu} T(E; V0) dE`.
pub fn current<S: Scalar>(
    bias: f64,
    potential: &PotentialParams<S>,
    fermi: S,
    device: &Device,
    grids: &Grids,
) -> Result<S> {
    if !(bias >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "bias",
            value: bias,
        });
    }
    if !(fermi.value() > 0.0) {
        return Err(Error::InvalidParameter {
            name: "fermi",
            value: fermi.value(),
        });
    }
    let spectrum = transmission_spectrum(bias, potential, fermi, device, grids.energy_points)?;
    Ok(integrate_spectrum(
        &spectrum,
        bias,
        fermi,
        grids.interp_points,
    ))
}

/// Currents at a list of biases, one independent sweep per bias.
pub fn currents<S: Scalar>(
    biases: &[f64],
    potential: &PotentialParams<S>,
    fermi: S,
    device: &Device,
    grids: &Grids,
) -> Result<Vec<S>> {
    biases
        .iter()
        .map(|&v| current(v, potential, fermi, device, grids))
        .collect()
}

/// Current-voltage curve over sorted, nonnegative biases.
pub fn iv_curve(
    biases: &[f64],
    potential: &PotentialParams,
    fermi: f64,
    device: &Device,
    grids: &Grids,
) -> Result<IvCurve> {
    if let Some(pair) = biases.windows(2).find(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter {
            name: "biases (unsorted)",
            value: pair[1],
        });
    }
    Ok(IvCurve {
        biases: biases.to_vec(),
        currents: currents(biases, potential, fermi, device, grids)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::{BarrierParams, DesignVector, DeviceGeometry};
    use crate::solver::scattering_state;
    use alloc::vec;
    use proptest::prelude::*;

    fn device(length: f64, points: usize) -> Device {
        Device {
            geometry: DeviceGeometry::new(length, points).unwrap(),
            ..Device::default()
        }
    }

    fn double_barrier(h: f64, w: f64, sharpness: f64) -> PotentialParams {
        let b = |center| BarrierParams {
            height: h,
            center,
            width: w,
            sharpness,
        };
        PotentialParams {
            barrier1: b(0.4),
            barrier2: b(0.6),
        }
    }

    /// Closed-form transmission through a rectangular barrier of height `v`
    /// and width `w` below the barrier top.
    fn rectangular_barrier(e: f64, v: f64, w: f64) -> f64 {
        let kappa = libm::sqrt((v - e) / crate::physics::HBAR2_OVER_2M);
        let s = libm::sinh(kappa * w);
        1.0 / (1.0 + v * v * s * s / (4.0 * e * (v - e)))
    }

    #[test]
    fn zero_energy_transmits_nothing() {
        let dev = Device::default();
        assert_eq!(
            transmission(0.0, 0.1, &double_barrier(0.3, 0.05, 1.0), &dev).unwrap(),
            0.0
        );
        let spectrum =
            transmission_spectrum(0.1, &double_barrier(0.3, 0.05, 1.0), 0.2, &dev, 50).unwrap();
        assert_eq!(spectrum.transmission[0], 0.0);
        assert_eq!(spectrum.energies[0], 0.0);
        assert_eq!(spectrum.energies[49], 0.2);
    }

    #[test]
    fn free_particle_transmits_fully() {
        let dev = device(10.0, 1000);
        let t = transmission(0.1, 0.0, &PotentialParams::flat(), &dev).unwrap();
        assert!((t - 1.0).abs() < 1e-3);
        let spectrum = transmission_spectrum(0.0, &PotentialParams::flat(), 0.3, &dev, 61).unwrap();
        for (e, t) in spectrum.energies.iter().zip(&spectrum.transmission) {
            if *e >= 0.05 {
                assert!((t - 1.0).abs() < 1e-3, "T({e}) = {t}");
            }
        }
    }

    #[test]
    fn sharp_barrier_converges_to_rectangular_closed_form() {
        // The end rows carry the full on-site potential, which leaves an O(ka)
        // contact reflection; the error against the closed form halves with a.
        let exact = rectangular_barrier(0.15, 0.3, 2.0);
        let error = |n: usize| {
            let dev = device(40.0, n);
            let b = BarrierParams {
                height: 0.3,
                center: 0.5,
                width: 2.0 / 40.0,
                sharpness: 50.0,
            };
            let pot = PotentialParams {
                barrier1: b,
                barrier2: BarrierParams { height: 0.0, ..b },
            };
            transmission(0.15, 0.0, &pot, &dev).unwrap() / exact - 1.0
        };
        let (coarse, fine, finest) = (error(4000), error(8000), error(16000));
        assert!(coarse.abs() < 0.025, "{coarse}");
        assert!((1.8..2.2).contains(&(coarse / fine)));
        assert!((1.8..2.2).contains(&(fine / finest)));
        assert!(finest.abs() < 0.006);
    }

    #[test]
    fn fast_transmission_matches_solved_state() {
        let dev = Device::default();
        let pot = double_barrier(0.25, 0.06, 1.0);
        for e in [0.01, 0.05, 0.11, 0.2] {
            let fast = transmission(e, 0.07, &pot, &dev).unwrap();
            let state = scattering_state(e, 0.07, &pot, &dev).unwrap();
            let slow = state_transmission(&state);
            assert!((fast - slow).abs() <= 1e-12 * slow);
        }
    }

    #[test]
    fn symmetric_double_barrier_has_a_resonance() {
        let dev = device(40.0, 400);
        let pot = double_barrier(0.3, 0.05, 3.0);
        let spectrum = transmission_spectrum(0.0, &pot, 0.3, &dev, 3000).unwrap();
        let peak = spectrum
            .energies
            .iter()
            .zip(&spectrum.transmission)
            .filter(|(e, _)| **e < 0.3)
            .map(|(_, t)| *t)
            .fold(0.0, f64::max);
        assert!(peak > 0.9, "peak transmission {peak}");
    }

    #[test]
    fn interpolation_matches_numpy_semantics() {
        let xs = [0.0, 1.0, 2.0, 4.0];
        let ys = [0.0, 10.0, 20.0, 0.0];
        assert_eq!(interpolate(-1.0, &xs, &ys), 0.0);
        assert_eq!(interpolate(5.0, &xs, &ys), 0.0);
        assert_eq!(interpolate(1.0, &xs, &ys), 10.0);
        assert_eq!(interpolate(0.5, &xs, &ys), 5.0);
        assert_eq!(interpolate(3.0, &xs, &ys), 10.0);
        assert_eq!(interpolate(4.0, &xs, &ys), 0.0);
    }

    #[test]
    fn unit_transmission_integrates_to_bias() {
        let spectrum = Spectrum {
            energies: energy_grid(0.3, 100),
            transmission: vec![1.0; 100],
        };
        for v0 in [0.0, 0.05, 0.2, 0.45] {
            let i = integrate_spectrum(&spectrum, v0, 0.3, 100);
            assert!((i - v0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_bias_gives_zero_current() {
        let dev = Device::default();
        let pot = double_barrier(0.25, 0.05, 1.0);
        assert_eq!(
            current(0.0, &pot, 0.15, &dev, &Grids::default()).unwrap(),
            0.0
        );
        let iv = iv_curve(&[0.0], &pot, 0.15, &dev, &Grids::default()).unwrap();
        assert_eq!(iv.currents, [0.0]);
        assert!(iv_curve(&[0.2, 0.1], &pot, 0.15, &dev, &Grids::default()).is_err());
        assert!(current(-0.1, &pot, 0.15, &dev, &Grids::default()).is_err());
    }

    #[test]
    fn default_grids_converge_against_refined_quadrature() {
        let dev = Device::default();
        let pot = PotentialParams {
            barrier1: BarrierParams {
                height: 0.15,
                center: 0.35,
                width: 0.04,
                sharpness: 1.0,
            },
            barrier2: BarrierParams {
                height: 0.1,
                center: 0.62,
                width: 0.03,
                sharpness: 1.0,
            },
        };
        for v0 in [0.05, 0.12, 0.2] {
            let coarse = current(v0, &pot, 0.2, &dev, &Grids::default()).unwrap();
            let fine = current(v0, &pot, 0.2, &dev, &Grids::new(4000, 4000).unwrap()).unwrap();
            assert!((coarse / fine - 1.0).abs() < 0.01, "{coarse} vs {fine}");
            let doubled = current(v0, &pot, 0.2, &dev, &Grids::new(100, 200).unwrap()).unwrap();
            assert!((doubled / coarse - 1.0).abs() < 0.005);
        }
    }

    #[test]
    fn dual_current_value_matches_plain_current() {
        let dev = Device::default();
        let d = DesignVector {
            potential: double_barrier(0.22, 0.05, 1.0),
            fermi: 0.17,
        };
        let (pot, mu) = d.seeded();
        let plain = current(0.11, &d.potential, d.fermi, &dev, &Grids::default()).unwrap();
        let dual = current(0.11, &pot, mu, &dev, &Grids::default()).unwrap();
        assert_eq!(plain.to_bits(), dual.value.to_bits());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn transmission_is_bounded_and_current_nonnegative(
            h1 in 0.0f64..0.5, c1 in 0.2f64..0.5, w1 in 0.02f64..0.2,
            h2 in 0.0f64..0.5, c2 in 0.5f64..0.8, w2 in 0.02f64..0.2,
            e in 0.0f64..0.4, v0 in 0.0f64..0.4, mu in 0.05f64..0.3,
        ) {
            let dev = Device::default();
            let pot = PotentialParams {
                barrier1: BarrierParams { height: h1, center: c1, width: w1, sharpness: 1.0 },
                barrier2: BarrierParams { height: h2, center: c2, width: w2, sharpness: 1.0 },
            };
            let t = transmission(e, v0, &pot, &dev).unwrap();
            let ka = wavenumber_source(e, &dev.constants).unwrap() * dev.geometry.spacing();
            prop_assert!(t >= 0.0 && t <= 1.0 + 5.0 * ka * ka);
            let i = current(v0, &pot, mu, &dev, &Grids::new(30, 30).unwrap()).unwrap();
            prop_assert!(i >= 0.0);
        }

        #[test]
        fn spectrum_values_do_not_depend_on_grid_size(m in 2usize..40) {
            let dev = Device::default();
            let pot = double_barrier(0.2, 0.05, 1.0);
            let spectrum = transmission_spectrum(0.05, &pot, 0.25, &dev, m).unwrap();
            for (e, t) in spectrum.energies.iter().zip(&spectrum.transmission) {
                prop_assert_eq!(*t, transmission(*e, 0.05, &pot, &dev).unwrap());
            }
        }
    }
}
