use num_traits::{Float, NumAssignOps};
use std::fmt::{Debug, Display};

/// Scalar type the solvers are generic over.
///
/// Constants go through [`Real::cst`], which is exact for every implementor.
pub trait Real: Float + NumAssignOps + Debug + Display + Send + Sync + 'static {
    fn cst(x: f64) -> Self;
    fn as_f64(self) -> f64;

    fn half() -> Self {
        Self::cst(0.5)
    }

    fn two() -> Self {
        Self::cst(2.0)
    }
}

impl Real for f32 {
    #[inline]
    fn cst(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn cst(x: f64) -> Self {
        x
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f128::f128 {
    #[inline]
    fn cst(x: f64) -> Self {
        f128::f128::from(x)
    }
    #[inline]
    fn as_f64(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

/// Converts a slice of reals to another precision.
pub fn convert_slice<A: Real, B: Real>(xs: &[A]) -> Vec<B> {
    xs.iter().map(|x| B::cst(x.as_f64())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use f128::f128;

    #[test]
    fn quad_constants_round_trip() {
        let x = f128::cst(0.1);
        assert_eq!(x.as_f64(), 0.1);
        let third = f128::cst(1.0) / f128::cst(3.0);
        let back = third * f128::cst(3.0) - f128::cst(1.0);
        assert!(back.abs().as_f64() < 1e-32, "{}", back.as_f64());
    }

    #[test]
    fn quad_exp_carries_the_digits_f64_drops() {
        let e = f128::cst(1.0).exp();
        let hi = e.as_f64();
        assert_eq!(hi, std::f64::consts::E);
        // e = 2.718281828459045235360287...; f64 keeps 2.718281828459045090795598...
        let lo = (e - f128::cst(hi)).as_f64();
        assert!((lo - 1.445646891729250e-16).abs() < 1e-30, "{lo:e}");
    }
}
