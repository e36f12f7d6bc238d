use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::disorder::{run_ensemble, DisorderSpec, EnsembleStats};
use crate::dynamics::{
    adiabatic_prediction, evolve_columns, min_gap, phase_aligned, wrap_phase, Curve, Drive, Ramp, Schedule,
    StateVector,
};
use crate::exec::Execution;
use crate::lattice::{open_chain, sine_cosine_chain, Lattice};
use crate::{CMatrix, Error, Result};

/// Below this value of (smallest gap) · T the run is flagged as possibly diabatic.
pub const ADIABATIC_MARGIN: f64 = 10.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferOrder {
    /// Three-site SSH chain: the B-sublattice block of the square-root chain, minus 1.
    Parent,
    /// Seven-site sine-cosine chain.
    #[default]
    SquareRoot,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefectSide {
    #[default]
    Left,
    /// Runs the schedule backwards, moving the defect from the right end to the left.
    Right,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransferProtocol {
    pub order: TransferOrder,
    pub lambda: f64,
    /// Final angle of the last bond pair; 0 or π.
    pub gamma: f64,
    pub duration: f64,
    pub dt: f64,
    pub ramp: Ramp,
    pub side: DefectSide,
}

impl Default for TransferProtocol {
    fn default() -> Self {
        TransferProtocol {
            order: TransferOrder::SquareRoot,
            lambda: PI / 3.0,
            gamma: 0.0,
            duration: 200.0,
            dt: 200.0 / 4000.0,
            ramp: Ramp::Linear,
            side: DefectSide::Left,
        }
    }
}

/// A channel of the transfer: `initial` is carried to `sign · target`.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub label: &'static str,
    pub energy: f64,
    pub initial: StateVector,
    pub sign: f64,
    pub target: StateVector,
}

impl Channel {
    /// The expected final state without its dynamical phase.
    pub fn expected(&self) -> StateVector {
        self.target.scaled(self.sign.into())
    }
}

impl TransferProtocol {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_duration(mut self, duration: f64) -> Self {
        self.dt *= duration / self.duration;
        self.duration = duration;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < FRAC_PI_2) {
            return Err(Error::Config(format!("lambda must lie in (0, π/2), got {}", self.lambda)));
        }
        if self.gamma_is_pi().is_none() {
            return Err(Error::Config(format!("gamma must be 0 or π, got {}", self.gamma)));
        }
        Schedule::new(self.duration, self.dt).map(|_| ())
    }

    fn gamma_is_pi(&self) -> Option<bool> {
        if self.gamma.abs() < 1e-9 {
            Some(false)
        } else if (self.gamma - PI).abs() < 1e-9 {
            Some(true)
        } else {
            None
        }
    }

    pub fn dim(&self) -> usize {
        match self.order {
            TransferOrder::Parent => 3,
            TransferOrder::SquareRoot => 7,
        }
    }

    /// (θ1, θ2, θ3) at the start and end of the left-to-right sweep.
    pub fn endpoints(&self) -> ([f64; 3], [f64; 3]) {
        (
            [FRAC_PI_2, 0.0, self.lambda],
            [FRAC_PI_2 - self.lambda, FRAC_PI_2, self.gamma],
        )
    }

    pub fn schedule(&self) -> Result<Schedule> {
        self.validate()?;
        let (mut a, mut b) = self.endpoints();
        if self.side == DefectSide::Right {
            std::mem::swap(&mut a, &mut b);
        }
        let mut s = Schedule::new(self.duration, self.dt)?;
        for (k, name) in ["theta1", "theta2", "theta3"].into_iter().enumerate() {
            s = s.with_curve(name, Curve::ramp(a[k], b[k], 0.0, self.duration, self.ramp)?);
        }
        Ok(s)
    }

    pub fn drive(&self) -> Result<TransferDrive> {
        Ok(TransferDrive {
            schedule: self.schedule()?,
            order: self.order,
        })
    }

    /// Defect channels with the sign each one picks up.
    pub fn channels(&self) -> Result<Vec<Channel>> {
        self.validate()?;
        let pi = self.gamma_is_pi() == Some(true);
        let n = self.dim();
        let st = |e: &[(usize, f64)]| StateVector::from_sites(n, e);
        let r = FRAC_1_SQRT_2;
        let left = match self.order {
            TransferOrder::Parent => vec![Channel {
                label: "0",
                energy: 0.0,
                initial: st(&[(0, 1.0)])?,
                sign: -1.0,
                target: st(&[(2, 1.0)])?,
            }],
            TransferOrder::SquareRoot => {
                let bonding = st(&[(5, r), (6, r)])?;
                let anti = st(&[(5, -r), (6, r)])?;
                vec![
                    Channel {
                        label: "+1",
                        energy: 1.0,
                        initial: st(&[(0, r), (1, r)])?,
                        sign: if pi { 1.0 } else { -1.0 },
                        target: if pi { anti.clone() } else { bonding.clone() },
                    },
                    Channel {
                        label: "-1",
                        energy: -1.0,
                        initial: st(&[(0, -r), (1, r)])?,
                        sign: if pi { -1.0 } else { 1.0 },
                        target: if pi { bonding } else { anti },
                    },
                    Channel {
                        label: "0",
                        energy: 0.0,
                        initial: st(&[(2, 1.0)])?,
                        sign: if pi { 1.0 } else { -1.0 },
                        target: st(&[(4, 1.0)])?,
                    },
                ]
            }
        };
        Ok(match self.side {
            DefectSide::Left => left,
            // H(t) is real symmetric, so the reversed sweep propagates by the
            // transpose: ⟨a|U_rev|b⟩ = ⟨b|U|a⟩, and b goes back to sign · a.
            DefectSide::Right => left
                .into_iter()
                .map(|c| Channel {
                    initial: c.target,
                    target: c.initial,
                    ..c
                })
                .collect(),
        })
    }
}

/// θ1, θ2, θ3 on the seven-site chain (or its three-site parent).
pub struct TransferDrive {
    schedule: Schedule,
    order: TransferOrder,
}

impl Drive for TransferDrive {
    fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn lattice_at(&self, _t: f64, p: &[f64]) -> Result<Lattice> {
        match self.order {
            TransferOrder::SquareRoot => sine_cosine_chain(p, 7, 1.0),
            TransferOrder::Parent => open_chain(&[p[0].cos() * p[1].sin(), p[1].cos() * p[2].sin()]),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelReport {
    pub label: &'static str,
    pub energy: f64,
    pub initial: StateVector,
    /// Expected final state without the dynamical phase.
    pub expected: StateVector,
    pub final_state: StateVector,
    /// |⟨expected|final⟩|², insensitive to the global phase.
    pub fidelity: f64,
    /// arg ⟨expected|final⟩.
    pub phase: f64,
    /// -∫ ε dt along the followed level.
    pub dynamical_phase: f64,
    /// `phase - dynamical_phase`, wrapped; near zero when the sign pattern holds.
    pub residual_phase: f64,
    /// Sign that parallel transport of the instantaneous eigenvector predicts.
    pub predicted_sign: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferReport {
    pub channels: Vec<ChannelReport>,
    /// Minimum over the sweep of each adjacent instantaneous gap.
    pub min_gaps: Vec<f64>,
    pub times: Vec<f64>,
    /// Column c of each entry is channel c at the matching time.
    pub trajectory: Vec<CMatrix>,
    pub warning: Option<String>,
}

impl TransferReport {
    pub fn channel(&self, label: &str) -> Option<&ChannelReport> {
        self.channels.iter().find(|c| c.label == label)
    }
}

/// Default number of time samples for gap scans and adiabatic following.
pub const GAP_SAMPLES: usize = 4000;

pub fn run_transfer(p: &TransferProtocol, samples: usize) -> Result<TransferReport> {
    let drive = p.drive()?;
    let channels = p.channels()?;
    let n = p.dim();
    let mut psi0 = CMatrix::zeros(n, channels.len());
    for (c, ch) in channels.iter().enumerate() {
        psi0.set_column(c, ch.initial.amplitudes());
    }
    let traj = evolve_columns(&drive, psi0, samples)?;
    let last = traj.last();
    let mut reports = Vec::with_capacity(channels.len());
    for (c, ch) in channels.into_iter().enumerate() {
        let fin = StateVector::new(last.column(c).into_owned())?;
        let expected = ch.expected();
        let (fidelity, phase) = phase_aligned(&expected, &fin);
        let pred = adiabatic_prediction(&drive, &ch.initial, GAP_SAMPLES)?;
        let dynamical_phase = -pred.energy_integral;
        let predicted = expected.inner(&pred.state) * num_complex::Complex64::from_polar(1.0, -dynamical_phase);
        reports.push(ChannelReport {
            label: ch.label,
            energy: ch.energy,
            initial: ch.initial,
            expected,
            final_state: fin,
            fidelity,
            phase,
            dynamical_phase: wrap_phase(dynamical_phase),
            residual_phase: wrap_phase(phase - dynamical_phase),
            predicted_sign: predicted.re.signum(),
        });
    }
    let min_gaps = min_gap(&drive, GAP_SAMPLES)?;
    let smallest = min_gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let warning = (smallest * p.duration < ADIABATIC_MARGIN).then(|| {
        format!(
            "smallest gap {smallest:.4} times T = {} is {:.2}, below {ADIABATIC_MARGIN}; transfer may be diabatic",
            p.duration,
            smallest * p.duration
        )
    });
    Ok(TransferReport {
        channels: reports,
        min_gaps,
        times: traj.times,
        trajectory: traj.states,
        warning,
    })
}

/// Disorder ensemble of one channel; final fidelities are against the channel's expected state.
pub fn run_transfer_ensemble(
    p: &TransferProtocol,
    label: &str,
    spec: &DisorderSpec,
    samples: usize,
    exec: Execution,
) -> Result<EnsembleStats> {
    let drive = p.drive()?;
    let ch = p
        .channels()?
        .into_iter()
        .find(|c| c.label == label)
        .ok_or_else(|| Error::Config(format!("no transfer channel labelled {label:?}")))?;
    run_ensemble(&drive, &ch.initial, None, spec, samples, exec)
}
