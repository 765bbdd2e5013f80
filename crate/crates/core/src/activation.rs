//! Scalar nonlinearities: the activation σ and the elementwise prior φ.

use std::fmt;

#[derive(Clone, Copy)]
pub enum Activation {
    /// σ(x) = x²
    Quadratic,
    /// σ(x) = max(0, x), with σ′(0) = 0.
    Relu,
    Custom {
        name: &'static str,
        f: fn(f64) -> f64,
        df: fn(f64) -> f64,
    },
}

impl Activation {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Activation::Quadratic => x * x,
            Activation::Relu => x.max(0.0),
            Activation::Custom { f, .. } => f(x),
        }
    }

    #[inline]
    pub fn deriv(&self, x: f64) -> f64 {
        match self {
            Activation::Quadratic => 2.0 * x,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Custom { df, .. } => df(x),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Quadratic => "quadratic",
            Activation::Relu => "relu",
            Activation::Custom { name, .. } => name,
        }
    }
}

impl fmt::Debug for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl PartialEq for Activation {
    fn eq(&self, other: &Self) -> bool {
        self.name() == other.name()
    }
}

/// Elementwise regularizer φ entering the update as `−(τ/N)φ(w)`.
#[derive(Clone, Copy, Default)]
pub enum Prior {
    #[default]
    Zero,
    /// φ(x) = slope·x (L2).
    Linear { slope: f64 },
    Custom { name: &'static str, f: fn(f64) -> f64 },
}

impl Prior {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Prior::Zero => 0.0,
            Prior::Linear { slope } => slope * x,
            Prior::Custom { f, .. } => f(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Prior::Zero)
    }
}

impl fmt::Debug for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Prior::Zero => f.write_str("zero"),
            Prior::Linear { slope } => write!(f, "linear({slope})"),
            Prior::Custom { name, .. } => f.write_str(name),
        }
    }
}

impl PartialEq for Prior {
    fn eq(&self, other: &Self) -> bool {
        format!("{self:?}") == format!("{other:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives() {
        assert_eq!(Activation::Quadratic.deriv(1.5), 3.0);
        assert_eq!(Activation::Relu.deriv(0.0), 0.0);
        assert_eq!(Activation::Relu.deriv(1e-300), 1.0);
        assert_eq!(Activation::Relu.eval(-2.0), 0.0);
        let tanh = Activation::Custom {
            name: "tanh",
            f: f64::tanh,
            df: |x| 1.0 - x.tanh().powi(2),
        };
        let h = 1e-6;
        let fd = (tanh.eval(0.3 + h) - tanh.eval(0.3 - h)) / (2.0 * h);
        assert!((fd - tanh.deriv(0.3)).abs() < 1e-9);
    }

    #[test]
    fn priors() {
        assert_eq!(Prior::Zero.eval(3.0), 0.0);
        assert_eq!(Prior::Linear { slope: 0.5 }.eval(3.0), 1.5);
        assert_eq!(Prior::default(), Prior::Zero);
    }
}
