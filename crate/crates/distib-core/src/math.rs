//! Scalar math routed through `libm` so the crate builds without `std`.

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn fmax(a: f64, b: f64) -> f64 {
    libm::fmax(a, b)
}

#[inline]
pub(crate) fn fmin(a: f64, b: f64) -> f64 {
    libm::fmin(a, b)
}

/// Sign with `sign(0) = 0`, unlike `f64::signum` which maps `+0.0` to `1.0`.
#[inline]
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_is_zero_at_zero() {
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-0.0), 0.0);
        assert_eq!(sign(3.5), 1.0);
        assert_eq!(sign(-2.0), -1.0);
    }

    #[test]
    fn wrappers_match_expected_values() {
        assert!(abs(exp(0.0) - 1.0) < 1e-15);
        assert!(abs(ln(1.0)) < 1e-15);
        assert!(abs(sqrt(4.0) - 2.0) < 1e-15);
        assert_eq!(fmax(1.0, 2.0), 2.0);
        assert_eq!(fmin(1.0, 2.0), 1.0);
        assert_eq!(round(2.5), 3.0);
    }
}
