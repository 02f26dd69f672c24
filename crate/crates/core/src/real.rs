//! Scalar types the Medusa iteration can run in: `f64` and double-double.

use std::fmt::Debug;
use std::ops::Neg;

use num_complex::{Complex, Complex64};
use num_traits::NumAssign;

/// Double-double: an unevaluated sum of two `f64`, about 32 significant digits.
pub use qd::Quad as DoubleDouble;

pub trait Real:
    Copy + Debug + PartialOrd + NumAssign + Neg<Output = Self> + Send + Sync + 'static
{
    /// Unit roundoff.
    const EPSILON: f64;

    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn sqrt(self) -> Self;
    fn is_finite(self) -> bool;

    fn abs(self) -> Self {
        if self < Self::zero() {
            -self
        } else {
            self
        }
    }

    /// `|z|` without overflow for moderately large components.
    fn cabs(z: Complex<Self>) -> Self {
        let (x, y) = (z.re.abs(), z.im.abs());
        let (big, small) = if x >= y { (x, y) } else { (y, x) };
        if big == Self::zero() {
            return big;
        }
        let r = small / big;
        big * (Self::one() + r * r).sqrt()
    }

    /// Principal square root: nonnegative real part, branch cut on the negative axis.
    fn csqrt(z: Complex<Self>) -> Complex<Self> {
        let zero = Self::zero();
        if z.re == zero && z.im == zero {
            return z;
        }
        let half = Self::from_f64(0.5);
        let r = Self::cabs(z);
        if z.re >= zero {
            let t = ((r + z.re) * half).sqrt();
            Complex::new(t, z.im / (t + t))
        } else {
            let t = ((r - z.re) * half).sqrt();
            let re = z.im.abs() / (t + t);
            Complex::new(re, if z.im < zero { -t } else { t })
        }
    }
}

impl Real for f64 {
    const EPSILON: f64 = f64::EPSILON;

    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn cabs(z: Complex64) -> Self {
        z.norm()
    }
    fn csqrt(z: Complex64) -> Complex64 {
        z.sqrt()
    }
}

impl Real for DoubleDouble {
    const EPSILON: f64 = f64::EPSILON * f64::EPSILON;

    fn from_f64(x: f64) -> Self {
        DoubleDouble::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        self.0 + self.1
    }
    fn sqrt(self) -> Self {
        if self.0 < 0.0 {
            return DoubleDouble::NAN;
        }
        DoubleDouble::sqrt(self)
    }
    fn is_finite(self) -> bool {
        DoubleDouble::is_finite(self)
    }
    fn abs(self) -> Self {
        DoubleDouble::abs(self)
    }
}

/// A tolerance chosen for rounding noise in `f64`, rescaled to the unit
/// roundoff of `T`.
pub(crate) fn noise<T: Real>(f64_bound: f64) -> f64 {
    f64_bound * (T::EPSILON / f64::EPSILON)
}

/// Conversions and `f64`-valued measurements on complex numbers of any [`Real`].
pub trait ComplexExt<T: Real>: Sized {
    fn modulus(self) -> T;
    fn to_c64(self) -> Complex64;
    fn from_c64(z: Complex64) -> Self;
    fn principal_sqrt(self) -> Self;

    fn modulus_f64(self) -> f64 {
        self.modulus().to_f64()
    }
}

impl<T: Real> ComplexExt<T> for Complex<T> {
    fn modulus(self) -> T {
        T::cabs(self)
    }
    fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
    fn from_c64(z: Complex64) -> Self {
        Complex::new(T::from_f64(z.re), T::from_f64(z.im))
    }
    fn principal_sqrt(self) -> Self {
        T::csqrt(self)
    }
}

/// `re + i im` with components of type `T`.
pub(crate) fn cr<T: Real>(re: f64, im: f64) -> Complex<T> {
    Complex::new(T::from_f64(re), T::from_f64(im))
}

/// `x` as a `T`.
pub(crate) fn r<T: Real>(x: f64) -> T {
    T::from_f64(x)
}
