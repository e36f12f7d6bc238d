use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use nalgebra::{Matrix2, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::disorder::{run_ensemble, DisorderSpec, EnsembleStats};
use crate::dynamics::{evolve_columns, wrap_phase, Curve, Drive, Ramp, Schedule, StateVector};
use crate::exec::Execution;
use crate::lattice::{build_y_junction, Lattice, YJunctionSpec};
use crate::{CMatrix, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BraidProtocol {
    pub lambda: f64,
    pub leg_duration: f64,
    pub dt: f64,
    pub ramp: Ramp,
    pub defect_legs: [usize; 2],
    /// Leg moves to perform, 0..=3. A full exchange is 3; 0 holds the start configuration for one leg time.
    pub moves: usize,
}

impl Default for BraidProtocol {
    fn default() -> Self {
        BraidProtocol {
            lambda: PI / 3.0,
            leg_duration: 200.0,
            dt: 200.0 / 4000.0,
            ramp: Ramp::Smooth,
            defect_legs: [0, 1],
            moves: 3,
        }
    }
}

impl BraidProtocol {
    pub fn with_moves(mut self, moves: usize) -> Self {
        self.moves = moves;
        self
    }

    pub fn with_leg_duration(mut self, t: f64) -> Self {
        self.dt *= t / self.leg_duration;
        self.leg_duration = t;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < FRAC_PI_2) {
            return Err(Error::Config(format!("lambda must lie in (0, π/2), got {}", self.lambda)));
        }
        let [a, b] = self.defect_legs;
        if a > 2 || b > 2 {
            return Err(Error::Config(format!("defect legs must be in 0..3, got [{a}, {b}]")));
        }
        if a == b {
            return Err(Error::Protocol(format!("both defects start on leg {a}")));
        }
        if self.moves > 3 {
            return Err(Error::Config(format!("at most 3 leg moves, got {}", self.moves)));
        }
        Schedule::new(self.leg_duration, self.dt).map(|_| ())
    }

    pub fn free_leg(&self) -> usize {
        3 - self.defect_legs[0] - self.defect_legs[1]
    }

    /// (from, to) leg of each move: first defect to the free leg, second defect
    /// into the first one's leg, first defect on into the second one's leg.
    pub fn moves_list(&self) -> [(usize, usize); 3] {
        let [d1, d2] = self.defect_legs;
        let f = self.free_leg();
        [(d1, f), (d2, d1), (f, d2)]
    }

    pub fn total_duration(&self) -> f64 {
        self.leg_duration * self.moves.max(1) as f64
    }

    pub fn start_spec(&self) -> YJunctionSpec {
        let mut legs = [
            YJunctionSpec::defect_leg(),
            YJunctionSpec::defect_leg(),
            YJunctionSpec::defect_leg(),
        ];
        legs[self.free_leg()] = YJunctionSpec::connected_leg(self.lambda);
        YJunctionSpec {
            legs,
            defect_legs: self.defect_legs,
        }
    }

    /// Curves α0, α1, α2 (leg angles) and φ (center angle).
    pub fn schedule(&self) -> Result<Schedule> {
        self.validate()?;
        let tl = self.leg_duration;
        let connected = FRAC_PI_2 - self.lambda;
        let mut alpha = [FRAC_PI_2; 3];
        alpha[self.free_leg()] = connected;
        let mut alpha_knots: [Vec<(f64, f64)>; 3] = std::array::from_fn(|l| vec![(0.0, alpha[l])]);
        let mut phi_knots = vec![(0.0, 0.0)];
        for (s, &(p, q)) in self.moves_list().iter().take(self.moves).enumerate() {
            let (t0, t1) = (s as f64 * tl, (s + 1) as f64 * tl);
            alpha[p] = connected;
            alpha[q] = FRAC_PI_2;
            for (l, k) in alpha_knots.iter_mut().enumerate() {
                k.push((t1, alpha[l]));
            }
            phi_knots.push((t0, 0.0));
            phi_knots.push((t1, FRAC_PI_2));
        }
        let mut sched = Schedule::new(self.total_duration(), self.dt)?;
        for (l, k) in alpha_knots.into_iter().enumerate() {
            sched = sched.with_curve(format!("alpha{l}"), Curve::keyframes(k, self.ramp)?);
        }
        Ok(sched.with_curve("phi", Curve::keyframes(phi_knots, self.ramp)?))
    }

    pub fn drive(&self) -> Result<JunctionDrive> {
        Ok(JunctionDrive {
            schedule: self.schedule()?,
            protocol: self.clone(),
        })
    }

    pub fn basis(&self) -> DefectBasis {
        DefectBasis::new(&self.start_spec())
    }
}

/// The ten-site junction driven through the leg moves of a [`BraidProtocol`].
pub struct JunctionDrive {
    schedule: Schedule,
    protocol: BraidProtocol,
}

impl JunctionDrive {
    /// Index of the move running at time `t`.
    pub fn move_at(&self, t: f64) -> usize {
        let last = self.protocol.moves.max(1) - 1;
        ((t / self.protocol.leg_duration).floor().max(0.0) as usize).min(last)
    }
}

impl Drive for JunctionDrive {
    fn schedule(&self) -> &Schedule {
        &self.schedule
    }

    fn lattice_at(&self, t: f64, p: &[f64]) -> Result<Lattice> {
        let (from, to) = self.protocol.moves_list()[self.move_at(t)];
        let mut center = [0.0; 3];
        center[from] = p[3].sin();
        center[to] = p[3].cos();
        let spec = YJunctionSpec {
            legs: std::array::from_fn(|l| YJunctionSpec::leg(center[l], p[l])),
            defect_legs: self.protocol.defect_legs,
        };
        build_y_junction(&spec)
    }
}

/// Six defect states: ε = +1, -1, 0 on the left (first) and right (second) defect leg.
#[derive(Clone, Debug, PartialEq)]
pub struct DefectBasis {
    pub states: Vec<StateVector>,
    pub labels: [&'static str; 6],
    pub energies: [f64; 6],
}

impl DefectBasis {
    pub fn new(spec: &YJunctionSpec) -> Self {
        let n = 1 + spec.legs.iter().map(Vec::len).sum::<usize>();
        let [l, r] = spec.defect_legs;
        let s = |leg, pos| spec.site(leg, pos);
        let h = FRAC_1_SQRT_2;
        let mk = |e: &[(usize, f64)]| StateVector::from_sites(n, e).expect("defect sites lie in the junction");
        DefectBasis {
            states: vec![
                mk(&[(s(l, 3), h), (s(l, 2), h)]),
                mk(&[(s(r, 2), h), (s(r, 3), h)]),
                mk(&[(s(l, 3), h), (s(l, 2), -h)]),
                mk(&[(s(r, 2), h), (s(r, 3), -h)]),
                mk(&[(s(l, 1), 1.0)]),
                mk(&[(s(r, 1), 1.0)]),
            ],
            labels: ["+1,L", "+1,R", "-1,L", "-1,R", "0,L", "0,R"],
            energies: [1.0, 1.0, -1.0, -1.0, 0.0, 0.0],
        }
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    pub fn matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), 6);
        for (c, s) in self.states.iter().enumerate() {
            m.set_column(c, s.amplitudes());
        }
        m
    }

    /// Σ c_i |i⟩, normalized.
    pub fn combine(&self, coeffs: &[Complex64; 6]) -> Result<StateVector> {
        let v = self.matrix() * nalgebra::DVector::from_column_slice(coeffs);
        StateVector::normalized(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    Identity,
    X,
    Y,
    Z,
}

impl GateKind {
    pub const ALL: [GateKind; 4] = [GateKind::Identity, GateKind::X, GateKind::Y, GateKind::Z];

    /// Real 2×2 form in the (L, R) basis; Y sends |L⟩ to |R⟩ and |R⟩ to -|L⟩.
    pub fn matrix(self) -> Matrix2<f64> {
        match self {
            GateKind::Identity => Matrix2::identity(),
            GateKind::X => Matrix2::new(0.0, 1.0, 1.0, 0.0),
            GateKind::Y => Matrix2::new(0.0, -1.0, 1.0, 0.0),
            GateKind::Z => Matrix2::new(1.0, 0.0, 0.0, -1.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorReport {
    pub energy: f64,
    pub block: Matrix2<Complex64>,
    /// Kind whose phase-aligned distance to the block is smallest.
    pub kind: GateKind,
    /// Least-squares global phase aligning the block with `kind`.
    pub phase: f64,
    /// Largest entrywise distance between the aligned block and `kind`.
    pub deviation: f64,
    /// -ε · total time, wrapped.
    pub dynamical_phase: f64,
    /// Aligned distance to each [`GateKind`], in [`GateKind::ALL`] order.
    pub distances: [f64; 4],
}

impl SectorReport {
    pub fn distance_to(&self, kind: GateKind) -> f64 {
        self.distances[GateKind::ALL.iter().position(|k| *k == kind).expect("listed")]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GateReport {
    /// ⟨i|U|j⟩ over the defect basis.
    pub matrix: DMatrix<Complex64>,
    /// 1 - Σ_i |⟨i|U|j⟩|² for each input j.
    pub leakage: Vec<f64>,
    /// Largest |element| linking different energy sectors.
    pub off_block: f64,
    /// Sectors ε = +1, -1, 0.
    pub sectors: Vec<SectorReport>,
}

impl GateReport {
    pub fn sector(&self, energy: f64) -> Option<&SectorReport> {
        self.sectors.iter().find(|s| s.energy == energy)
    }
}

/// Aligns `block` to `target` by the phase minimizing ‖e^{-iφ} block - target‖.
pub fn align_block(block: &Matrix2<Complex64>, target: &Matrix2<f64>) -> (f64, f64) {
    let overlap: Complex64 = block.iter().zip(target.iter()).map(|(b, t)| b * t).sum();
    let phase = overlap.arg();
    let rot = Complex64::from_polar(1.0, -phase);
    let dev = block
        .iter()
        .zip(target.iter())
        .map(|(b, t)| (b * rot - t).norm())
        .fold(0.0, f64::max);
    (phase, dev)
}

/// Gate matrix from the final states of the six basis inputs (columns of `finals`).
pub fn extract_gate(basis: &DefectBasis, finals: &CMatrix, total_time: f64) -> GateReport {
    let matrix = basis.matrix().adjoint() * finals;
    let leakage = (0..6)
        .map(|j| 1.0 - matrix.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .collect();
    let mut off_block = 0.0f64;
    for j in 0..6 {
        for i in 0..6 {
            if i / 2 != j / 2 {
                off_block = off_block.max(matrix[(i, j)].norm());
            }
        }
    }
    let sectors = (0..3)
        .map(|k| {
            let o = 2 * k;
            let block = Matrix2::new(
                matrix[(o, o)],
                matrix[(o, o + 1)],
                matrix[(o + 1, o)],
                matrix[(o + 1, o + 1)],
            );
            let fits: Vec<(f64, f64)> = GateKind::ALL.iter().map(|g| align_block(&block, &g.matrix())).collect();
            let best = (0..4).min_by(|&a, &b| fits[a].1.total_cmp(&fits[b].1)).expect("four kinds");
            let energy = basis.energies[o];
            SectorReport {
                energy,
                block,
                kind: GateKind::ALL[best],
                phase: fits[best].0,
                deviation: fits[best].1,
                dynamical_phase: wrap_phase(-energy * total_time),
                distances: std::array::from_fn(|g| fits[g].1),
            }
        })
        .collect();
    GateReport {
        matrix,
        leakage,
        off_block,
        sectors,
    }
}

pub fn run_braiding(p: &BraidProtocol) -> Result<GateReport> {
    let drive = p.drive()?;
    let basis = p.basis();
    let traj = evolve_columns(&drive, basis.matrix(), 1)?;
    Ok(extract_gate(&basis, traj.last(), p.total_duration()))
}

/// The braiding input used for ensembles, (|+1,L⟩ + |+1,R⟩)/√2, and its ideal image (-|+1,L⟩ + |+1,R⟩)/√2.
pub fn braid_probe(basis: &DefectBasis) -> Result<(StateVector, StateVector)> {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    Ok((
        basis.combine(&[o, o, z, z, z, z])?,
        basis.combine(&[-o, o, z, z, z, z])?,
    ))
}

pub fn run_braid_ensemble(p: &BraidProtocol, spec: &DisorderSpec, samples: usize, exec: Execution) -> Result<EnsembleStats> {
    let drive = p.drive()?;
    let (psi0, expected) = braid_probe(&p.basis())?;
    run_ensemble(&drive, &psi0, Some(&expected), spec, samples, exec)
}
