use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// A band-limiting pulse evaluated in seconds.
pub trait PulseShape {
    fn eval(&self, t: f64) -> f64;
}

impl<F: Fn(f64) -> f64> PulseShape for F {
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Raised-cosine pulse with symbol period `period` and roll-off `rolloff`.
///
/// Evaluated analytically; at `|t| = T/(2β)` the 0/0 form is replaced by its
/// limit `(π/4) sinc(1/(2β))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaisedCosine {
    pub period: f64,
    pub rolloff: f64,
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

impl RaisedCosine {
    pub fn new(period: f64, rolloff: f64) -> Self {
        Self { period, rolloff }
    }
}

impl PulseShape for RaisedCosine {
    fn eval(&self, t: f64) -> f64 {
        let x = t / self.period;
        let b = self.rolloff;
        if b == 0.0 {
            return sinc(x);
        }
        let denom = 1.0 - (2.0 * b * x).powi(2);
        if denom.abs() < 1e-10 {
            PI / 4.0 * sinc(1.0 / (2.0 * b))
        } else {
            sinc(x) * (PI * b * x).cos() / denom
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nyquist_zeros() {
        let p = RaisedCosine::new(3.125e-9, 1.0);
        assert_eq!(p.eval(0.0), 1.0);
        for l in 1..20 {
            let t = l as f64 * 3.125e-9;
            assert!(p.eval(t).abs() < 1e-12, "l={l}");
            assert!(p.eval(-t).abs() < 1e-12, "l=-{l}");
        }
    }

    #[test]
    fn singularity_uses_the_limit() {
        let p = RaisedCosine::new(1.0, 1.0);
        let at = p.eval(0.5);
        assert!((at - 0.5).abs() < 1e-12);
        // Continuous through the removable singularity.
        assert!((p.eval(0.5 + 1e-7) - at).abs() < 1e-6);
        assert!((p.eval(0.5 - 1e-7) - at).abs() < 1e-6);
        let half = RaisedCosine::new(1.0, 0.5);
        assert!((half.eval(1.0) - PI / 4.0 * sinc(1.0)).abs() < 1e-12);
    }

    #[test]
    fn zero_rolloff_is_sinc() {
        let p = RaisedCosine::new(2.0, 0.0);
        assert!((p.eval(1.0) - 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn closures_are_pulses() {
        let ideal = |t: f64| if t == 0.0 { 1.0 } else { 0.0 };
        assert_eq!(ideal.eval(0.0), 1.0);
        assert_eq!(ideal.eval(1.0), 0.0);
    }
}
