//! Open-boundary Schrödinger solve.
//!
//! The discretized equation `(H + U + B) psi = S` is tridiagonal: `H` is the
//! three-point kinetic stencil with half-weight end rows, `U` the sampled
//! potential (including the `-E` shift), `B` the two transmitting-boundary
//! corner terms and `S` the injection at the source node.
//!
//! With the source `S_0 = 2 BND_1` the injected wave enters with amplitude
//! `-1`, so the reflected amplitude is `psi_0 + 1`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::physics::{
    sample_internal_potential, wavenumber_drain, wavenumber_source, Device, PotentialParams,
};
use crate::scalar::{Complex, Scalar};

/// Relative pivot magnitude below which elimination is declared singular.
pub const PIVOT_GUARD: f64 = 1e-14;

/// Largest accepted `||A psi - S|| / ||S||` for a solved state.
pub const RESIDUAL_GUARD: f64 = 1e-10;

/// Which contact a boundary term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    Source,
    Drain,
}

/// Three complex bands plus the right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem<S> {
    /// Sub-diagonal, length `n - 1`; `lower[i]` couples row `i + 1` to column `i`.
    pub lower: Vec<Complex<S>>,
    pub diag: Vec<Complex<S>>,
    /// Super-diagonal, length `n - 1`; `upper[i]` couples row `i` to column `i + 1`.
    pub upper: Vec<Complex<S>>,
    pub source: Vec<Complex<S>>,
}

impl<S: Scalar> TridiagonalSystem<S> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn check_shape(&self) -> Result<()> {
        let n = self.diag.len();
        if n == 0 {
            return Err(Error::LengthMismatch {
                expected: 1,
                found: 0,
            });
        }
        for len in [self.lower.len(), self.upper.len()] {
            if len != n - 1 {
                return Err(Error::LengthMismatch {
                    expected: n - 1,
                    found: len,
                });
            }
        }
        if self.source.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: self.source.len(),
            });
        }
        Ok(())
    }

    /// Matrix-vector product on the value parts.
    pub fn apply_values(&self, x: &[Complex<S>]) -> Vec<Complex<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i].values() * x[i].values();
                if i > 0 {
                    acc = acc + self.lower[i - 1].values() * x[i - 1].values();
                }
                if i + 1 < n {
                    acc = acc + self.upper[i].values() * x[i + 1].values();
                }
                acc
            })
            .collect()
    }

    /// `||A x - S||_2` on the value parts.
    pub fn residual_norm(&self, x: &[Complex<S>]) -> f64 {
        let sum: f64 = self
            .apply_values(x)
            .into_iter()
            .zip(&self.source)
            .map(|(ax, s)| (ax - s.values()).abs2())
            .sum();
        libm::sqrt(sum)
    }

    pub fn source_norm(&self) -> f64 {
        libm::sqrt(self.source.iter().map(|s| s.values().abs2()).sum())
    }
}

/// Thomas elimination without pivoting.
///
/// Fails with [`Error::SingularPivot`] when a pivot falls below
/// [`PIVOT_GUARD`] times the largest magnitude in its original row.
pub fn solve_tridiagonal<S: Scalar>(system: &TridiagonalSystem<S>) -> Result<Vec<Complex<S>>> {
    system.check_shape()?;
    let n = system.len();
    let (lower, diag, upper, rhs) = (&system.lower, &system.diag, &system.upper, &system.source);

    let mut c_prime: Vec<Complex<S>> = Vec::with_capacity(n);
    let mut d_prime: Vec<Complex<S>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut row_max = diag[i].abs_value();
        let mut pivot = diag[i];
        let mut d = rhs[i];
        if i > 0 {
            row_max = row_max.max(lower[i - 1].abs_value());
            pivot = pivot - lower[i - 1] * c_prime[i - 1];
            d = d - lower[i - 1] * d_prime[i - 1];
        }
        if i + 1 < n {
            row_max = row_max.max(upper[i].abs_value());
        }
        if !(pivot.abs_value() >= PIVOT_GUARD * row_max) || row_max == 0.0 {
            return Err(Error::SingularPivot { index: i });
        }
        c_prime.push(if i + 1 < n {
            upper[i] / pivot
        } else {
            Complex::zero()
        });
        d_prime.push(d / pivot);
    }

    let mut x = d_prime;
    for i in (0..n - 1).rev() {
        let next = x[i + 1];
        x[i] = x[i] - c_prime[i] * next;
    }
    Ok(x)
}

/// Boundary term `BND_j = i k_j alpha a` of terminal `j`.
pub fn boundary_term<S: Scalar>(
    terminal: Terminal,
    energy: S,
    bias: f64,
    device: &Device,
) -> Result<Complex<S>> {
    let k = match terminal {
        Terminal::Source => wavenumber_source(energy, &device.constants)?,
        Terminal::Drain => wavenumber_drain(energy, bias, &device.constants)?,
    };
    let scale = device.hopping() * device.geometry.spacing();
    Ok(Complex::imag(k.scale(scale)))
}

/// Assembles `(H + U + B) psi = S` for one energy and bias.
pub fn assemble<S: Scalar>(
    energy: S,
    bias: f64,
    potential: &PotentialParams<S>,
    device: &Device,
) -> Result<TridiagonalSystem<S>> {
    let internal = sample_internal_potential(potential, bias, device);
    assemble_with_profile(&internal, energy, bias, device)
}

/// [`assemble`] from a pre-sampled internal potential (the total potential
/// without the `-E` shift), so energy sweeps sample the barriers once.
pub fn assemble_with_profile<S: Scalar>(
    internal: &[S],
    energy: S,
    bias: f64,
    device: &Device,
) -> Result<TridiagonalSystem<S>> {
    let n = device.geometry.points();
    if internal.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: internal.len(),
        });
    }
    let alpha = device.hopping();
    let bnd1 = boundary_term(Terminal::Source, energy, bias, device)?;
    let bnd2 = boundary_term(Terminal::Drain, energy, bias, device)?;

    let mut diag: Vec<Complex<S>> = internal
        .iter()
        .map(|&u| Complex::real((u - energy).offset(2.0 * alpha)))
        .collect();
    diag[0] = Complex::real((internal[0] - energy).offset(alpha)) - bnd1;
    diag[n - 1] = Complex::real((internal[n - 1] - energy).offset(alpha)) - bnd2;

    let hop = Complex::real(S::constant(-alpha));
    let mut source = vec![Complex::zero(); n];
    source[0] = bnd1.scale_const(2.0);
    Ok(TridiagonalSystem {
        lower: vec![hop; n - 1],
        diag,
        upper: vec![hop; n - 1],
        source,
    })
}

/// Solved wavefunction for one energy and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringState<S> {
    pub psi: Vec<Complex<S>>,
    pub energy: S,
    pub bias: f64,
    /// Source wavenumber in nm^-1.
    pub k1: S,
    /// Drain wavenumber in nm^-1.
    pub k2: S,
    /// `||A psi - S||_2` of the accepted solve.
    pub residual_norm: f64,
    /// Node spacing in nm.
    pub spacing: f64,
}

impl<S: Scalar> ScatteringState<S> {
    /// Reflected amplitude `psi_0 + 1` (incident amplitude is `-1`).
    pub fn reflection_amplitude(&self) -> Complex<S> {
        self.psi[0] + Complex::real(S::constant(1.0))
    }

    /// Reflection probability `|psi_0 + 1|^2`; zero for the zero state.
    pub fn reflection(&self) -> S {
        if self.energy.value() == 0.0 {
            return S::zero();
        }
        self.reflection_amplitude().abs2()
    }

    /// Discrete probability current on every link,
    /// `J_i = Im(conj(psi_i) psi_{i+1}) / a`.
    pub fn probability_current(&self) -> Vec<f64> {
        self.psi
            .windows(2)
            .map(|w| (w[0].values().conj() * w[1].values()).im / self.spacing)
            .collect()
    }
}

/// Assembles, solves and verifies the state at `(E, V0)`.
///
/// At `E = 0` the injection vanishes and the zero wavefunction is returned
/// without a solve.
pub fn scattering_state<S: Scalar>(
    energy: S,
    bias: f64,
    potential: &PotentialParams<S>,
    device: &Device,
) -> Result<ScatteringState<S>> {
    let internal = sample_internal_potential(potential, bias, device);
    scattering_state_with_profile(&internal, energy, bias, device)
}

pub fn scattering_state_with_profile<S: Scalar>(
    internal: &[S],
    energy: S,
    bias: f64,
    device: &Device,
) -> Result<ScatteringState<S>> {
    let k1 = wavenumber_source(energy, &device.constants)?;
    let k2 = wavenumber_drain(energy, bias, &device.constants)?;
    let n = device.geometry.points();
    let spacing = device.geometry.spacing();
    if energy.value() == 0.0 {
        return Ok(ScatteringState {
            psi: vec![Complex::zero(); n],
            energy,
            bias,
            k1,
            k2,
            residual_norm: 0.0,
            spacing,
        });
    }
    let system = assemble_with_profile(internal, energy, bias, device)?;
    let psi = solve_tridiagonal(&system)?;
    let residual_norm = system.residual_norm(&psi);
    let bound = RESIDUAL_GUARD * system.source_norm();
    if !(residual_norm <= bound) {
        return Err(Error::ResidualTooLarge {
            residual: residual_norm,
            bound,
        });
    }
    Ok(ScatteringState {
        psi,
        energy,
        bias,
        k1,
        k2,
        residual_norm,
        spacing,
    })
}

/// Wavefunction at the drain node, `psi_{n-1}`, from the forward sweep
/// alone.
///
/// Uses the structure of the assembled system (constant real hopping `-alpha`,
/// a single source entry) and skips back substitution; the result equals the
/// last entry of [`solve_tridiagonal`] on the same system. Returns zero at
/// `E = 0`.
pub fn drain_amplitude<S: Scalar>(
    internal: &[S],
    energy: S,
    bias: f64,
    device: &Device,
) -> Result<Complex<S>> {
    let n = device.geometry.points();
    if internal.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: internal.len(),
        });
    }
    let bnd1 = boundary_term(Terminal::Source, energy, bias, device)?;
    let bnd2 = boundary_term(Terminal::Drain, energy, bias, device)?;
    if energy.value() == 0.0 {
        return Ok(Complex::zero());
    }
    let alpha = device.hopping();

    // Row 0: pivot = diag_0, d' = S_0 / pivot.
    let first = Complex::real((internal[0] - energy).offset(alpha)) - bnd1;
    let mut inverse = reciprocal_pivot(first, first.abs_value().max(alpha), 0)?;
    let mut d_prime = bnd1.scale_const(2.0) * inverse;
    for i in 1..n {
        let on_site = if i + 1 == n {
            Complex::real((internal[i] - energy).offset(alpha)) - bnd2
        } else {
            Complex::real((internal[i] - energy).offset(2.0 * alpha))
        };
        // pivot_i = b_i - alpha^2 / pivot_{i-1};  d'_i = alpha d'_{i-1} / pivot_i
        let pivot = on_site - inverse.scale_const(alpha * alpha);
        inverse = reciprocal_pivot(pivot, on_site.abs_value().max(alpha), i)?;
        d_prime = (d_prime * inverse).scale_const(alpha);
    }
    Ok(d_prime)
}

/// Reciprocal of a forward-sweep pivot with the singularity guard applied.
#[inline]
fn reciprocal_pivot<S: Scalar>(pivot: Complex<S>, row_max: f64, row: usize) -> Result<Complex<S>> {
    let magnitude = pivot.abs_value();
    if !(magnitude >= PIVOT_GUARD * row_max) || magnitude == 0.0 {
        return Err(Error::SingularPivot { index: row });
    }
    let denom = pivot.abs2();
    Ok(Complex::new(pivot.re / denom, -pivot.im / denom))
}
