//! Device model: constants, geometry, the double-barrier potential and the
//! contact wavenumbers.
//!
//! Energies are in eV and lengths in nm. The source band edge is the energy
//! zero; a positive bias `V0` lowers the drain contact to `-V0`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::scalar::{seed, Dual, Scalar, TANGENT_WIDTH};

/// `hbar^2 / (2 m_e)` in eV nm^2, from CODATA 2018 values of `hbar`, `m_e`
/// and the elementary charge.
pub const HBAR2_OVER_2M: f64 = 0.038_099_821_114_859_614;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// `hbar^2 / (2 m)` in eV nm^2.
    pub hbar2_over_2m: f64,
}

impl PhysicalConstants {
    pub fn new(hbar2_over_2m: f64) -> Result<Self> {
        if !(hbar2_over_2m > 0.0 && hbar2_over_2m.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "hbar2_over_2m",
                value: hbar2_over_2m,
            });
        }
        Ok(PhysicalConstants { hbar2_over_2m })
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            hbar2_over_2m: HBAR2_OVER_2M,
        }
    }
}

/// Uniform finite-difference grid over `[0, L]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceGeometry {
    length: f64,
    points: usize,
}

impl DeviceGeometry {
    pub fn new(length: f64, points: usize) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "length",
                value: length,
            });
        }
        if points < 3 {
            return Err(Error::InvalidParameter {
                name: "points",
                value: points as f64,
            });
        }
        Ok(DeviceGeometry { length, points })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// Node spacing `L / (n - 1)`.
    pub fn spacing(&self) -> f64 {
        self.length / (self.points - 1) as f64
    }

    /// Position of node `i`. The last node sits exactly at `L`.
    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.points {
            self.length
        } else {
            i as f64 * self.spacing()
        }
    }
}

impl Default for DeviceGeometry {
    fn default() -> Self {
        DeviceGeometry {
            length: 40.0,
            points: 100,
        }
    }
}

/// Smooth box that keeps the barriers away from the contacts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    /// Margin `delta` as a fraction of the device length.
    pub margin_frac: f64,
    /// Edge sharpness `sigma_w` in nm^-1.
    pub sharpness: f64,
}

impl Window {
    pub fn new(margin_frac: f64, sharpness: f64) -> Result<Self> {
        if !(margin_frac > 0.0 && margin_frac < 0.5) {
            return Err(Error::InvalidParameter {
                name: "window.margin_frac",
                value: margin_frac,
            });
        }
        if !(sharpness > 0.0 && sharpness.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "window.sharpness",
                value: sharpness,
            });
        }
        Ok(Window {
            margin_frac,
            sharpness,
        })
    }
}

impl Default for Window {
    fn default() -> Self {
        Window {
            margin_frac: 0.1,
            sharpness: 2.0,
        }
    }
}

/// Everything about the simulated device that is not optimized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Device {
    pub constants: PhysicalConstants,
    pub geometry: DeviceGeometry,
    pub window: Window,
}

impl Device {
    pub fn new(constants: PhysicalConstants, geometry: DeviceGeometry, window: Window) -> Self {
        Device {
            constants,
            geometry,
            window,
        }
    }

    /// Hopping energy `alpha = hbar^2 / (2 m a^2)`.
    pub fn hopping(&self) -> f64 {
        let a = self.geometry.spacing();
        self.constants.hbar2_over_2m / (a * a)
    }
}

/// One smoothed box barrier.
///
/// `center` and `width` are fractions of the device length; `sharpness` is
/// the slope of the tanh edges in nm^-1 (1 reproduces unit-slope edges).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierParams<S = f64> {
    pub height: S,
    pub center: S,
    pub width: S,
    pub sharpness: f64,
}

impl<S: Scalar> BarrierParams<S> {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, name: &'static str, value: f64| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter { name, value })
            }
        };
        let (h, c, w) = (self.height.value(), self.center.value(), self.width.value());
        check(h.is_finite(), "height", h)?;
        check(c > 0.0 && c < 1.0, "center", c)?;
        check(w > 0.0 && w.is_finite(), "width", w)?;
        check(
            self.sharpness > 0.0 && self.sharpness.is_finite(),
            "sharpness",
            self.sharpness,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams<S = f64> {
    pub barrier1: BarrierParams<S>,
    pub barrier2: BarrierParams<S>,
}

impl<S: Scalar> PotentialParams<S> {
    pub fn validate(&self) -> Result<()> {
        self.barrier1.validate()?;
        self.barrier2.validate()
    }

    /// Both barriers with zero height.
    pub fn flat() -> Self {
        let b = BarrierParams {
            height: S::zero(),
            center: S::constant(0.5),
            width: S::constant(0.1),
            sharpness: 1.0,
        };
        PotentialParams {
            barrier1: b,
            barrier2: b,
        }
    }
}

/// Seven optimizable parameters: both barriers and the Fermi level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignVector {
    pub potential: PotentialParams<f64>,
    /// Fermi level `mu` in eV.
    pub fermi: f64,
}

impl DesignVector {
    pub const NAMES: [&'static str; TANGENT_WIDTH] = ["h1", "c1", "w1", "h2", "c2", "w2", "fermi"];

    /// Builds a design vector from `(H1, C1, W1, H2, C2, W2, mu)` with a
    /// shared barrier sharpness.
    pub fn from_array(values: [f64; TANGENT_WIDTH], sharpness: f64) -> Self {
        DesignVector {
            potential: PotentialParams {
                barrier1: BarrierParams {
                    height: values[0],
                    center: values[1],
                    width: values[2],
                    sharpness,
                },
                barrier2: BarrierParams {
                    height: values[3],
                    center: values[4],
                    width: values[5],
                    sharpness,
                },
            },
            fermi: values[6],
        }
    }

    pub fn to_array(&self) -> [f64; TANGENT_WIDTH] {
        let (b1, b2) = (&self.potential.barrier1, &self.potential.barrier2);
        [
            b1.height, b1.center, b1.width, b2.height, b2.center, b2.width, self.fermi,
        ]
    }

    /// Same sharpness settings, new parameter values.
    pub fn with_values(&self, values: [f64; TANGENT_WIDTH]) -> Self {
        let mut next = DesignVector::from_array(values, self.potential.barrier1.sharpness);
        next.potential.barrier2.sharpness = self.potential.barrier2.sharpness;
        next
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        if !(self.fermi > 0.0 && self.fermi.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "fermi",
                value: self.fermi,
            });
        }
        Ok(())
    }

    /// Lifts the parameters to duals, slot `i` tracking component `i`.
    pub fn seeded(&self) -> (PotentialParams<Dual>, Dual) {
        let d = seed(self.to_array());
        let (b1, b2) = (&self.potential.barrier1, &self.potential.barrier2);
        let potential = PotentialParams {
            barrier1: BarrierParams {
                height: d[0],
                center: d[1],
                width: d[2],
                sharpness: b1.sharpness,
            },
            barrier2: BarrierParams {
                height: d[3],
                center: d[4],
                width: d[5],
                sharpness: b2.sharpness,
            },
        };
        (potential, d[6])
    }
}

/// Source wavenumber `k1 = sqrt(E / c)` with `c = hbar^2 / 2m`.
pub fn wavenumber_source<S: Scalar>(energy: S, constants: &PhysicalConstants) -> Result<S> {
    let e = energy.value();
    if e < 0.0 || e.is_nan() {
        return Err(Error::NegativeKineticEnergy { energy: e });
    }
    Ok(energy.scale(1.0 / constants.hbar2_over_2m).sqrt())
}

/// Drain wavenumber `k2 = sqrt((E + V0) / c)`; the drain band edge sits at `-V0`.
pub fn wavenumber_drain<S: Scalar>(
    energy: S,
    bias: f64,
    constants: &PhysicalConstants,
) -> Result<S> {
    let kinetic = energy.offset(bias);
    if kinetic.value() < 0.0 || kinetic.value().is_nan() {
        return Err(Error::EvanescentDrain {
            energy: energy.value(),
            bias,
        });
    }
    Ok(kinetic.scale(1.0 / constants.hbar2_over_2m).sqrt())
}

/// Smoothed box barrier
/// `H [tanh(s(x - L(2C - W)/2)) - tanh(s(x - L(2C + W)/2))] / 2`.
pub fn barrier_profile<S: Scalar>(x: f64, barrier: &BarrierParams<S>, length: f64) -> S {
    let two_c = barrier.center.scale(2.0);
    let left_edge = (two_c - barrier.width).scale(length / 2.0);
    let right_edge = (two_c + barrier.width).scale(length / 2.0);
    let rising = (S::constant(x) - left_edge).scale(barrier.sharpness).tanh();
    let falling = (S::constant(x) - right_edge)
        .scale(barrier.sharpness)
        .tanh();
    barrier.height * (rising - falling).scale(0.5)
}

/// Linear bias drop `V0 x / L`.
pub fn bias_profile(x: f64, bias: f64, length: f64) -> f64 {
    bias * x / length
}

/// Window `[tanh(s(x - d)) - tanh(s(x - (L - d)))] / 2`, about 1 inside the
/// device and about 0 at both contacts.
pub fn window_profile(x: f64, length: f64, margin: f64, sharpness: f64) -> f64 {
    let rising = libm::tanh(sharpness * (x - margin));
    let falling = libm::tanh(sharpness * (x - (length - margin)));
    (rising - falling) / 2.0
}

/// Internal energy profile `w(x) [B1(x) + B2(x)] - V0 x / L` (the total
/// potential without the `-E` shift).
pub fn internal_potential<S: Scalar>(
    x: f64,
    potential: &PotentialParams<S>,
    bias: f64,
    device: &Device,
) -> S {
    let length = device.geometry.length();
    let window = window_profile(
        x,
        length,
        device.window.margin_frac * length,
        device.window.sharpness,
    );
    let barriers = barrier_profile(x, &potential.barrier1, length)
        + barrier_profile(x, &potential.barrier2, length);
    barriers
        .scale(window)
        .offset(-bias_profile(x, bias, length))
}

/// Total potential `U(x) = w(x) [B1 + B2] - V0 x / L - E` entering the
/// discretized equation.
pub fn total_potential<S: Scalar>(
    x: f64,
    potential: &PotentialParams<S>,
    energy: S,
    bias: f64,
    device: &Device,
) -> S {
    internal_potential(x, potential, bias, device) - energy
}

/// [`internal_potential`] at every grid node.
pub fn sample_internal_potential<S: Scalar>(
    potential: &PotentialParams<S>,
    bias: f64,
    device: &Device,
) -> Vec<S> {
    let geometry = &device.geometry;
    (0..geometry.points())
        .map(|i| internal_potential(geometry.node(i), potential, bias, device))
        .collect()
}

/// [`total_potential`] at every grid node.
pub fn sample_potential<S: Scalar>(
    potential: &PotentialParams<S>,
    energy: S,
    bias: f64,
    device: &Device,
) -> Vec<S> {
    sample_internal_potential(potential, bias, device)
        .into_iter()
        .map(|u| u - energy)
        .collect()
}
