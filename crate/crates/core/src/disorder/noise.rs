use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::NaturalSpline;
use crate::dynamics::{Drive, Schedule};
use crate::lattice::Lattice;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderKind {
    /// One curve per site, added to the diagonal.
    Onsite,
    /// One curve per structural bond, added to its hopping.
    Hopping,
    /// One curve per schedule parameter, added to the angle before sin/cos are taken.
    CorrelatedAngle,
}

impl DisorderKind {
    pub const ALL: [DisorderKind; 3] = [DisorderKind::Onsite, DisorderKind::Hopping, DisorderKind::CorrelatedAngle];

    pub fn name(self) -> &'static str {
        match self {
            DisorderKind::Onsite => "onsite",
            DisorderKind::Hopping => "hopping",
            DisorderKind::CorrelatedAngle => "correlated_angle",
        }
    }
}

impl std::fmt::Display for DisorderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_knots() -> usize {
    20
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub kind: DisorderKind,
    pub sigma: f64,
    #[serde(default = "default_knots")]
    pub knots: usize,
    #[serde(default)]
    pub seed: u64,
    pub realizations: usize,
}

impl DisorderSpec {
    pub fn new(kind: DisorderKind, sigma: f64, seed: u64, realizations: usize) -> Self {
        DisorderSpec {
            kind,
            sigma,
            knots: default_knots(),
            seed,
            realizations,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if self.knots < 2 {
            return Err(Error::Config(format!("need at least 2 knots, got {}", self.knots)));
        }
        if self.realizations == 0 {
            return Err(Error::Config("need at least one realization".into()));
        }
        Ok(())
    }
}

/// Smooth offset t ↦ δ(t); the zero curve when σ = 0.
#[derive(Clone, Debug, PartialEq)]
pub enum NoiseCurve {
    Zero,
    Spline(NaturalSpline),
}

impl NoiseCurve {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            NoiseCurve::Zero => 0.0,
            NoiseCurve::Spline(s) => s.value(t),
        }
    }
}

/// Independent stream `index` of the master `seed`.
pub fn realization_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `count` curves, each a natural spline through `spec.knots` normal draws spread over [0, duration].
pub fn sample_noise(spec: &DisorderSpec, duration: f64, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<NoiseCurve>> {
    spec.validate()?;
    if spec.sigma == 0.0 {
        return Ok(vec![NoiseCurve::Zero; count]);
    }
    let normal = Normal::new(0.0, spec.sigma).map_err(|e| Error::Config(e.to_string()))?;
    (0..count)
        .map(|_| {
            let ys = (0..spec.knots).map(|_| normal.sample(rng)).collect();
            NaturalSpline::uniform(0.0, duration, ys).map(NoiseCurve::Spline)
        })
        .collect()
}

/// Number of curves `kind` needs for `drive`.
pub fn curve_count<D: Drive + ?Sized>(drive: &D, kind: DisorderKind) -> Result<usize> {
    Ok(match kind {
        DisorderKind::Onsite => drive.lattice(0.0)?.dim(),
        DisorderKind::Hopping => drive.lattice(0.0)?.bonds().len(),
        DisorderKind::CorrelatedAngle => drive.schedule().len(),
    })
}

/// Lattice-level disorder: adds `offsets` to the diagonal or to the bonds.
///
/// Angle disorder acts on parameters, not on a built lattice; see [`Disordered`].
pub fn apply_disorder(lat: &Lattice, offsets: &[f64], kind: DisorderKind) -> Result<Lattice> {
    match kind {
        DisorderKind::Onsite => lat.with_onsite_offsets(offsets),
        DisorderKind::Hopping => lat.with_bond_offsets(offsets),
        DisorderKind::CorrelatedAngle => Err(Error::Config(
            "correlated angle disorder perturbs schedule parameters, not lattice entries".into(),
        )),
    }
}

/// A drive with one noise curve per perturbed degree of freedom.
pub struct Disordered<'a, D: Drive + ?Sized> {
    inner: &'a D,
    kind: DisorderKind,
    curves: Vec<NoiseCurve>,
}

impl<'a, D: Drive + ?Sized> Disordered<'a, D> {
    pub fn new(inner: &'a D, kind: DisorderKind, curves: Vec<NoiseCurve>) -> Result<Self> {
        let need = curve_count(inner, kind)?;
        if curves.len() != need {
            return Err(Error::Config(format!(
                "{kind} disorder needs {need} curves, got {}",
                curves.len()
            )));
        }
        Ok(Disordered { inner, kind, curves })
    }

    /// Draws the curves for realization `index` of `spec`.
    pub fn sample(inner: &'a D, spec: &DisorderSpec, index: u64) -> Result<Self> {
        let count = curve_count(inner, spec.kind)?;
        let mut rng = realization_rng(spec.seed, index);
        let curves = sample_noise(spec, inner.schedule().duration(), count, &mut rng)?;
        Self::new(inner, spec.kind, curves)
    }

    pub fn offsets(&self, t: f64) -> Vec<f64> {
        self.curves.iter().map(|c| c.value(t)).collect()
    }
}

impl<D: Drive + ?Sized> Drive for Disordered<'_, D> {
    fn schedule(&self) -> &Schedule {
        self.inner.schedule()
    }

    fn lattice_at(&self, t: f64, params: &[f64]) -> Result<Lattice> {
        match self.kind {
            DisorderKind::CorrelatedAngle => {
                let shifted: Vec<f64> = params.iter().zip(self.offsets(t)).map(|(p, d)| p + d).collect();
                self.inner.lattice_at(t, &shifted)
            }
            kind => apply_disorder(&self.inner.lattice_at(t, params)?, &self.offsets(t), kind),
        }
    }

    fn params(&self, t: f64) -> Vec<f64> {
        self.inner.params(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_gives_zero_curves() {
        let spec = DisorderSpec::new(DisorderKind::Onsite, 0.0, 1, 1);
        let c = sample_noise(&spec, 10.0, 3, &mut realization_rng(1, 0)).unwrap();
        assert!(c.iter().all(|c| c.value(3.3) == 0.0));
    }

    #[test]
    fn same_seed_same_curves() {
        let spec = DisorderSpec::new(DisorderKind::Hopping, 0.1, 42, 1);
        let a = sample_noise(&spec, 5.0, 4, &mut realization_rng(42, 7)).unwrap();
        let b = sample_noise(&spec, 5.0, 4, &mut realization_rng(42, 7)).unwrap();
        let c = sample_noise(&spec, 5.0, 4, &mut realization_rng(42, 8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn knot_spread_matches_sigma() {
        let spec = DisorderSpec::new(DisorderKind::Onsite, 0.1, 3, 1);
        let mut rng = realization_rng(3, 0);
        let curves = sample_noise(&spec, 1.0, 500, &mut rng).unwrap();
        let vals: Vec<f64> = curves
            .iter()
            .flat_map(|c| match c {
                NoiseCurve::Spline(s) => s.knots().1.to_vec(),
                NoiseCurve::Zero => vec![],
            })
            .collect();
        assert_eq!(vals.len(), 10_000);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let sd = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
        assert!((sd - 0.1).abs() < 0.01, "{sd}");
    }

    #[test]
    fn invalid_specs() {
        let mut s = DisorderSpec::new(DisorderKind::Onsite, -0.1, 0, 1);
        assert!(s.validate().is_err());
        s.sigma = 0.1;
        s.knots = 1;
        assert!(s.validate().is_err());
    }
}
