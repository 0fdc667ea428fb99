pub const SELU_ALPHA: f64 = 1.6732632423543772;
pub const SELU_LAMBDA: f64 = 1.0507009873554805;

/// Scaled exponential linear unit.
#[inline]
pub fn selu(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA * x
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp_m1()
    }
}

/// Derivative of [`selu`]; at 0 the left branch is used.
#[inline]
pub fn selu_grad(x: f64) -> f64 {
    if x > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * x.exp()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selu_values() {
        assert_eq!(selu(0.0), 0.0);
        assert_eq!(selu(1.0), SELU_LAMBDA);
        assert!((selu(f64::NEG_INFINITY) + SELU_LAMBDA * SELU_ALPHA).abs() < 1e-15);
        assert!((selu(-1e3) + 1.758099340847161).abs() < 1e-12);
    }

    #[test]
    fn selu_grad_matches_difference() {
        for x in [-2.0, -0.3, 0.4, 3.0] {
            let fd = (selu(x + 1e-6) - selu(x - 1e-6)) / 2e-6;
            assert!((fd - selu_grad(x)).abs() < 1e-8);
        }
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert_eq!(sigmoid(800.0), 1.0);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert!((sigmoid(2.0) + sigmoid(-2.0) - 1.0).abs() < 1e-15);
    }
}
