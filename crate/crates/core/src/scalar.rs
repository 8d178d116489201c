//! Forward-mode tangent arithmetic.
//!
//! Every physics routine in this crate is generic over [`Scalar`]. Running it
//! with `f64` gives a plain evaluation; running it with [`Dual`] carries a
//! seven-wide tangent block alongside each value, so a single pass yields the
//! full gradient with respect to the design vector. [`Complex`] lifts either
//! scalar to complex arithmetic for the wavefunction.

use core::fmt::Debug;
use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Number of tangent slots: one per design-vector component.
pub const TANGENT_WIDTH: usize = 7;

/// Real scalar the physics can be evaluated over.
///
/// Value arithmetic of every implementation must match plain `f64`
/// arithmetic operation for operation, so that a dual evaluation reproduces
/// the plain evaluation bit for bit.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// A scalar with zero tangent.
    fn constant(value: f64) -> Self;
    fn value(&self) -> f64;
    /// Multiply by a constant.
    fn scale(self, k: f64) -> Self;
    /// Add a constant.
    fn offset(self, k: f64) -> Self;
    /// Square root. Returns NaN below zero; at exactly zero the tangent is 0.
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn exp(self) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }
}

impl Scalar for f64 {
    #[inline]
    fn constant(value: f64) -> Self {
        value
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self * k
    }
    #[inline]
    fn offset(self, k: f64) -> Self {
        self + k
    }
    #[inline]
    fn sqrt(self) -> Self {
        libm::sqrt(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        libm::tanh(self)
    }
    #[inline]
    fn exp(self) -> Self {
        libm::exp(self)
    }
}

/// A real value paired with its derivatives along the seven design directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual {
    pub value: f64,
    pub tangent: [f64; TANGENT_WIDTH],
}

impl Dual {
    pub const fn new(value: f64, tangent: [f64; TANGENT_WIDTH]) -> Self {
        Dual { value, tangent }
    }

    pub const fn constant(value: f64) -> Self {
        Dual {
            value,
            tangent: [0.0; TANGENT_WIDTH],
        }
    }

    /// Independent variable for slot `slot`: tangent is the unit vector there.
    pub fn variable(value: f64, slot: usize) -> Self {
        let mut tangent = [0.0; TANGENT_WIDTH];
        tangent[slot] = 1.0;
        Dual { value, tangent }
    }

    pub fn gradient(&self) -> [f64; TANGENT_WIDTH] {
        self.tangent
    }

    /// Chain rule for a unary function with value `value` and derivative `slope`.
    #[inline]
    fn chain(&self, value: f64, slope: f64) -> Dual {
        let mut tangent = self.tangent;
        for t in &mut tangent {
            *t *= slope;
        }
        Dual { value, tangent }
    }

    pub fn checked_div(self, rhs: Dual) -> Result<Dual> {
        if rhs.value == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self / rhs)
    }

    pub fn checked_sqrt(self) -> Result<Dual> {
        if self.value < 0.0 {
            return Err(Error::SqrtDomain { value: self.value });
        }
        Ok(Scalar::sqrt(self))
    }
}

/// Seeds a dual per input: slot `i` carries value `values[i]` and tangent `e_i`.
pub fn seed(values: [f64; TANGENT_WIDTH]) -> [Dual; TANGENT_WIDTH] {
    core::array::from_fn(|i| Dual::variable(values[i], i))
}

impl Scalar for Dual {
    #[inline]
    fn constant(value: f64) -> Self {
        Dual::constant(value)
    }
    #[inline]
    fn value(&self) -> f64 {
        self.value
    }
    #[inline]
    fn scale(self, k: f64) -> Self {
        self.chain(self.value * k, k)
    }
    #[inline]
    fn offset(mut self, k: f64) -> Self {
        self.value += k;
        self
    }
    #[inline]
    fn sqrt(self) -> Self {
        let root = libm::sqrt(self.value);
        // d/dx sqrt is unbounded at zero; callers guard that point.
        let slope = if root == 0.0 { 0.0 } else { 0.5 / root };
        self.chain(root, slope)
    }
    #[inline]
    fn tanh(self) -> Self {
        let t = libm::tanh(self.value);
        self.chain(t, 1.0 - t * t)
    }
    #[inline]
    fn exp(self) -> Self {
        let e = libm::exp(self.value);
        self.chain(e, e)
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(mut self, rhs: Dual) -> Dual {
        self.value += rhs.value;
        for (t, r) in self.tangent.iter_mut().zip(rhs.tangent) {
            *t += r;
        }
        self
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(mut self, rhs: Dual) -> Dual {
        self.value -= rhs.value;
        for (t, r) in self.tangent.iter_mut().zip(rhs.tangent) {
            *t -= r;
        }
        self
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, rhs: Dual) -> Dual {
        let mut tangent = [0.0; TANGENT_WIDTH];
        for ((t, a), b) in tangent.iter_mut().zip(self.tangent).zip(rhs.tangent) {
            *t = a * rhs.value + self.value * b;
        }
        Dual {
            value: self.value * rhs.value,
            tangent,
        }
    }
}

impl Div for Dual {
    type Output = Dual;
    /// IEEE semantics on the value; see [`Dual::checked_div`] for the guarded form.
    #[inline]
    fn div(self, rhs: Dual) -> Dual {
        let value = self.value / rhs.value;
        let mut tangent = [0.0; TANGENT_WIDTH];
        for ((t, a), b) in tangent.iter_mut().zip(self.tangent).zip(rhs.tangent) {
            *t = (a - value * b) / rhs.value;
        }
        Dual { value, tangent }
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        self.chain(-self.value, -1.0)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, rhs: Dual) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dual {
    #[inline]
    fn sub_assign(&mut self, rhs: Dual) {
        *self = *self - rhs;
    }
}

/// Complex number over a real [`Scalar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Complex<S> {
    pub re: S,
    pub im: S,
}

impl<S: Scalar> Complex<S> {
    pub fn new(re: S, im: S) -> Self {
        Complex { re, im }
    }

    pub fn real(re: S) -> Self {
        Complex { re, im: S::zero() }
    }

    /// Purely imaginary `i * im`.
    pub fn imag(im: S) -> Self {
        Complex { re: S::zero(), im }
    }

    pub fn zero() -> Self {
        Complex::real(S::zero())
    }

    pub fn i() -> Self {
        Complex::imag(S::constant(1.0))
    }

    pub fn conj(self) -> Self {
        Complex {
            re: self.re,
            im: -self.im,
        }
    }

    /// Squared modulus `re^2 + im^2`.
    pub fn abs2(self) -> S {
        self.re * self.re + self.im * self.im
    }

    /// Modulus of the value part, ignoring tangents.
    pub fn abs_value(&self) -> f64 {
        libm::hypot(self.re.value(), self.im.value())
    }

    /// Multiply by a real scalar.
    pub fn scale(self, k: S) -> Self {
        Complex {
            re: self.re * k,
            im: self.im * k,
        }
    }

    /// Multiply by a real constant.
    pub fn scale_const(self, k: f64) -> Self {
        Complex {
            re: self.re.scale(k),
            im: self.im.scale(k),
        }
    }

    pub fn checked_div(self, rhs: Self) -> Result<Self> {
        if rhs.re.value() == 0.0 && rhs.im.value() == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(self / rhs)
    }

    /// Values of both parts, tangents dropped.
    pub fn values(&self) -> Complex<f64> {
        Complex {
            re: self.re.value(),
            im: self.im.value(),
        }
    }
}

impl<S: Scalar> Add for Complex<S> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        Complex {
            re: self.re + rhs.re,
            im: self.im + rhs.im,
        }
    }
}

impl<S: Scalar> Sub for Complex<S> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        Complex {
            re: self.re - rhs.re,
            im: self.im - rhs.im,
        }
    }
}

impl<S: Scalar> Mul for Complex<S> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        Complex {
            re: self.re * rhs.re - self.im * rhs.im,
            im: self.re * rhs.im + self.im * rhs.re,
        }
    }
}

impl<S: Scalar> Div for Complex<S> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        let denom = rhs.abs2();
        Complex {
            re: (self.re * rhs.re + self.im * rhs.im) / denom,
            im: (self.im * rhs.re - self.re * rhs.im) / denom,
        }
    }
}

impl<S: Scalar> Neg for Complex<S> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Complex {
            re: -self.re,
            im: -self.im,
        }
    }
}
