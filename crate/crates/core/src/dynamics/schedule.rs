use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Time profile of a ramp on [0, 1].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    #[default]
    Linear,
    /// Quintic smoothstep, zero first and second derivative at both ends.
    Smooth,
}

impl Ramp {
    pub fn shape(self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        match self {
            Ramp::Linear => x,
            Ramp::Smooth => x * x * x * (x * (6.0 * x - 15.0) + 10.0),
        }
    }
}

/// Piecewise curve through keyframes, each segment shaped by `ramp`.
///
/// Repeated keyframe times encode jumps; the curve is right-continuous.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    knots: Vec<(f64, f64)>,
    ramp: Ramp,
}

impl Curve {
    pub fn constant(value: f64) -> Self {
        Curve {
            knots: vec![(0.0, value)],
            ramp: Ramp::Linear,
        }
    }

    pub fn ramp(from: f64, to: f64, t0: f64, t1: f64, ramp: Ramp) -> Result<Self> {
        Self::keyframes(vec![(t0, from), (t1, to)], ramp)
    }

    pub fn keyframes(knots: Vec<(f64, f64)>, ramp: Ramp) -> Result<Self> {
        if knots.is_empty() {
            return Err(Error::Config("curve needs at least one keyframe".into()));
        }
        if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
            return Err(Error::Config("curve keyframes must be finite".into()));
        }
        if knots.windows(2).any(|w| w[1].0 < w[0].0) {
            return Err(Error::Config("curve keyframe times must be non-decreasing".into()));
        }
        Ok(Curve { knots, ramp })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn value(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t < k[0].0 {
            return k[0].1;
        }
        // last knot with time <= t
        let i = k.partition_point(|(tk, _)| *tk <= t) - 1;
        if i + 1 >= k.len() {
            return k[i].1;
        }
        let (t0, v0) = k[i];
        let (t1, v1) = k[i + 1];
        v0 + (v1 - v0) * self.ramp.shape((t - t0) / (t1 - t0))
    }
}

/// Duration, integration step and the named parameter curves of a protocol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    duration: f64,
    dt: f64,
    curves: Vec<(String, Curve)>,
}

impl Schedule {
    pub fn new(duration: f64, dt: f64) -> Result<Self> {
        if !(duration > 0.0 && duration.is_finite()) {
            return Err(Error::Config(format!("duration must be positive, got {duration}")));
        }
        if !(dt > 0.0 && dt <= duration) {
            return Err(Error::Config(format!("dt must lie in (0, T], got {dt}")));
        }
        Ok(Schedule {
            duration,
            dt,
            curves: Vec::new(),
        })
    }

    pub fn with_curve(mut self, name: impl Into<String>, curve: Curve) -> Self {
        self.curves.push((name.into(), curve));
        self
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Number of integration steps; the actual step is `duration / steps`.
    pub fn steps(&self) -> usize {
        ((self.duration / self.dt) - 1e-9).ceil().max(1.0) as usize
    }

    pub fn step(&self) -> f64 {
        self.duration / self.steps() as f64
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.curves.iter().map(|(n, _)| n.as_str())
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|(n, _)| n == name).map(|(_, c)| c)
    }

    pub fn value(&self, name: &str, t: f64) -> Option<f64> {
        self.curve(name).map(|c| c.value(t))
    }

    /// All curve values at `t`, in insertion order.
    pub fn values(&self, t: f64) -> Vec<f64> {
        self.curves.iter().map(|(_, c)| c.value(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_ramp_endpoints() {
        assert_eq!(Ramp::Smooth.shape(0.0), 0.0);
        assert_eq!(Ramp::Smooth.shape(1.0), 1.0);
        assert!((Ramp::Smooth.shape(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(Ramp::Linear.shape(0.25), 0.25);
    }

    #[test]
    fn keyframes_with_jump() {
        let c = Curve::keyframes(vec![(0.0, 0.0), (1.0, 1.0), (1.0, 0.0), (2.0, 1.0)], Ramp::Linear).unwrap();
        assert!((c.value(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(c.value(1.0), 0.0);
        assert!((c.value(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(c.value(3.0), 1.0);
        assert_eq!(c.value(-1.0), 0.0);
    }

    #[test]
    fn schedule_steps() {
        let s = Schedule::new(200.0, 0.05).unwrap();
        assert_eq!(s.steps(), 4000);
        assert!(Schedule::new(1.0, 2.0).is_err());
        assert!(Schedule::new(1.0, 0.0).is_err());
    }
}
