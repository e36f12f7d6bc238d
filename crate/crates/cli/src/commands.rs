use std::f64::consts::PI;

use matryoshka::disorder::DisorderSpec;
use matryoshka::dynamics::{
    bloch_evolve, bloch_vector, evolve, evolve_hermitian, fidelity, sample_steps, state_from_bloch,
    two_level_hamiltonian, von_neumann_entropy, density_matrix, Ramp, StateVector,
};
use matryoshka::exec::Execution;
use matryoshka::lattice::{build_chain, square_hamiltonian, Boundary, MemorySpec, Termination};
use matryoshka::protocols::{
    braid_probe, dimer_qubit, edge_splitting, memory_chain, run_braid_ensemble, run_braiding, run_memory,
    run_qudit_memory, run_transfer, run_transfer_ensemble, BraidProtocol, GateKind, MemoryProtocol, MemoryRun,
    QuditMemoryProtocol, TransferProtocol, DEFAULT_COUPLING,
};
use matryoshka::spectral::{
    band_gaps, bloch_bands_with, bulk_bands, chain_edge_states, edge_energies, k_grid, tail_weights,
};
use nalgebra::{DMatrix, Vector3};
use serde_json::json;

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::output::{usage, Cell, Csv, Run};

const TAIL_FRACTION: f64 = 0.15;
const K_POINTS: usize = 256;

pub fn spectrum(cfg: &Config, run: &mut Run) -> CliResult<()> {
    let chain = cfg.chain.as_ref().ok_or_else(|| usage("spectrum needs a [chain] section"))?;
    cfg.protocol.only("spectrum", &[])?;
    let spec = chain.spec()?;
    let tail = chain.tail_fraction.unwrap_or(TAIL_FRACTION);
    let (lat, spectrum, report) = chain_edge_states(&spec, tail)?;
    let weights = tail_weights(&spectrum, report.tail_sites);
    let mut csv = Csv::new(&["index", "energy", "left_weight", "right_weight", "is_edge"]);
    for (k, e) in spectrum.energies.iter().enumerate() {
        let edge = report.states.iter().any(|s| s.index == k);
        csv.row(vec![k.into(), (*e).into(), weights[k].0.into(), weights[k].1.into(), edge.into()]);
    }
    run.write_csv("spectrum.csv", csv)?;
    run.derive("sites", lat.dim());
    run.derive("max_eigen_residual", spectrum.max_residual(lat.hamiltonian()));
    run.derive("tail_sites", report.tail_sites);
    run.derive("edge_count", report.count());
    run.derive("edge_states", &report.states);
    run.derive("bulk_bands", bulk_bands(&spec, 64)?);
    if let (Some(tower), true) = (chain.tower()?, spec.order >= 1) {
        run.derive("predicted_edge_energies", edge_energies(&tower.scales()[1..spec.order as usize])?);
    }
    Ok(())
}

pub fn bands(cfg: &Config, run: &mut Run, exec: Execution) -> CliResult<()> {
    let chain = cfg.chain.as_ref().ok_or_else(|| usage("bands needs a [chain] section"))?;
    cfg.protocol.only("bands", &[])?;
    let mut spec = chain.spec()?;
    spec.boundary = Boundary::Periodic;
    spec.sites = None;
    spec.termination = Termination::Straight;
    let ks = k_grid(chain.k_points.unwrap_or(K_POINTS));
    let points = bloch_bands_with(&spec, &ks, exec)?;
    let m = spec.cell_size();
    let header: Vec<String> = std::iter::once("k".to_string()).chain((0..m).map(|b| format!("band_{b}"))).collect();
    let mut csv = Csv::new(&header);
    for p in &points {
        csv.row(std::iter::once(Cell::F(p.k)).chain(p.energies.iter().map(|&e| Cell::F(e))).collect());
    }
    run.write_csv("bands.csv", csv)?;
    let ranges = bulk_bands(&spec, ks.len())?;
    run.derive("band_count", m);
    run.derive("band_ranges", &ranges);
    run.derive("gaps", band_gaps(&ranges, 1e-9));
    if let Some(tower) = chain.tower()? {
        let mut worst = 0.0f64;
        for p in &points {
            let closed = tower.dispersion(spec.order, p.k)?;
            for (a, b) in p.energies.iter().zip(&closed) {
                worst = worst.max((a - b).abs());
            }
        }
        run.derive("closed_form_max_deviation", worst);
    }
    Ok(())
}

pub fn sqrt_check(cfg: &Config, run: &mut Run) -> CliResult<()> {
    let chain = cfg.chain.as_ref().ok_or_else(|| usage("sqrt-check needs a [chain] section"))?;
    cfg.protocol.only("sqrt-check", &[])?;
    let tower = chain
        .tower()?
        .ok_or_else(|| usage("sqrt-check needs a tower: set base_angle and scales in [chain]"))?;
    if chain.order == 0 {
        return Err(usage("sqrt-check needs order >= 1"));
    }
    let cells = chain.cells;
    let mut csv = Csv::new(&["order", "boundary", "sites", "cross_block", "parent_deviation", "lift_residual"]);
    let (mut worst_cross, mut worst_parent) = (0.0f64, 0.0f64);
    for order in 1..=chain.order {
        let t = tower.scales()[order as usize - 1];
        for boundary in [Boundary::Periodic, Boundary::Open] {
            let mut child = tower.spec(order, cells)?;
            let mut parent = tower.spec(order - 1, cells)?;
            child.boundary = boundary;
            parent.boundary = boundary;
            if boundary == Boundary::Open {
                // one extra site gives every B site two A neighbours
                child.sites = Some(child.site_count() + 1);
            }
            let lat = build_chain(&child)?;
            let sq = square_hamiltonian(&lat)?;
            let hp = build_chain(&parent)?.hamiltonian().clone();
            let n = sq.b.nrows();
            let dev = (&sq.b - DMatrix::identity(n, n) - hp * t).amax();
            worst_cross = worst_cross.max(sq.cross);
            worst_parent = worst_parent.max(dev);
            let name = if boundary == Boundary::Open { "open" } else { "periodic" };
            csv.row(vec![
                (order as usize).into(),
                name.into(),
                lat.dim().into(),
                sq.cross.into(),
                dev.into(),
                tower.residual(order).into(),
            ]);
        }
    }
    run.write_csv("sqrt_check.csv", csv)?;
    let angles: Vec<&[f64]> = (0..=chain.order).map(|p| tower.angles(p)).collect();
    run.derive("angles", angles);
    run.derive("scales", tower.scales());
    run.derive("max_cross_block", worst_cross);
    run.derive("max_parent_deviation", worst_parent);
    Ok(())
}

fn transfer_protocol(cfg: &Config) -> CliResult<TransferProtocol> {
    let pr = &cfg.protocol;
    let mut p = TransferProtocol::default();
    if let Some(o) = pr.order {
        p.order = o;
    }
    if let Some(s) = pr.side {
        p.side = s;
    }
    if let Some(l) = pr.lambda()? {
        p.lambda = l;
    }
    if let Some(g) = pr.gamma()? {
        p.gamma = g;
    }
    let s = &cfg.schedule;
    if let Some(d) = s.duration {
        p = p.with_duration(d);
    }
    if let Some(dt) = s.dt {
        p.dt = dt;
    }
    if let Some(r) = s.ramp {
        p.ramp = r;
    }
    p.validate()?;
    Ok(p)
}

fn channel_tag(label: &str) -> String {
    match label {
        "+1" => "plus1".into(),
        "-1" => "minus1".into(),
        "0" => "zero".into(),
        other => other.replace([',', '+', '-'], "_"),
    }
}

fn trajectory_csv(times: &[f64], states: &[StateVector]) -> Csv {
    let n = states[0].dim();
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((0..n).flat_map(|i| [format!("site_{i}_re"), format!("site_{i}_im")]))
        .collect();
    let mut csv = Csv::new(&header);
    for (t, s) in times.iter().zip(states) {
        let mut row = vec![Cell::F(*t)];
        for z in s.amplitudes().iter() {
            row.push(z.re.into());
            row.push(z.im.into());
        }
        csv.row(row);
    }
    csv
}

fn observables_csv(times: &[f64], states: &[StateVector], initial: &StateVector, expected: &StateVector) -> Csv {
    let mut csv = Csv::new(&["t", "fidelity_initial", "fidelity_expected", "entropy"]);
    for (t, s) in times.iter().zip(states) {
        let entropy = von_neumann_entropy(&density_matrix(std::slice::from_ref(s)));
        csv.row(vec![
            (*t).into(),
            fidelity(initial, s).into(),
            fidelity(expected, s).into(),
            entropy.into(),
        ]);
    }
    csv
}

pub fn transfer(cfg: &Config, run: &mut Run) -> CliResult<()> {
    cfg.protocol.only("transfer", &["lambda", "gamma", "order", "side"])?;
    let p = transfer_protocol(cfg)?;
    let r = run_transfer(&p, cfg.schedule.samples())?;
    let mut channels = Vec::new();
    for (c, ch) in r.channels.iter().enumerate() {
        let states: Vec<StateVector> = r
            .trajectory
            .iter()
            .map(|m| StateVector::new(m.column(c).into_owned()))
            .collect::<matryoshka::Result<_>>()?;
        let tag = channel_tag(ch.label);
        run.write_csv(&format!("trajectory_{tag}.csv"), trajectory_csv(&r.times, &states))?;
        run.write_csv(
            &format!("observables_{tag}.csv"),
            observables_csv(&r.times, &states, &ch.initial, &ch.expected),
        )?;
        channels.push(json!({
            "label": ch.label,
            "energy": ch.energy,
            "fidelity": ch.fidelity,
            "phase": ch.phase,
            "dynamical_phase": ch.dynamical_phase,
            "residual_phase": ch.residual_phase,
            "predicted_sign": ch.predicted_sign,
        }));
    }
    run.derive("protocol", &p);
    run.derive("channels", channels);
    run.derive("min_gaps", &r.min_gaps);
    run.derive("warning", &r.warning);
    Ok(())
}

fn braid_protocol(cfg: &Config) -> CliResult<BraidProtocol> {
    let pr = &cfg.protocol;
    let mut p = BraidProtocol::default();
    if let Some(l) = pr.lambda()? {
        p.lambda = l;
    }
    if let Some(m) = pr.moves {
        p.moves = m;
    }
    if let Some(d) = pr.defect_legs {
        p.defect_legs = d;
    }
    let s = &cfg.schedule;
    if let Some(d) = s.duration {
        p = p.with_leg_duration(d);
    }
    if let Some(dt) = s.dt {
        p.dt = dt;
    }
    if let Some(r) = s.ramp {
        p.ramp = r;
    }
    p.validate()?;
    Ok(p)
}

pub fn braid(cfg: &Config, run: &mut Run) -> CliResult<()> {
    cfg.protocol.only("braid", &["lambda", "moves", "defect_legs"])?;
    let p = braid_protocol(cfg)?;
    let g = run_braiding(&p)?;
    let basis = p.basis();
    let mut csv = Csv::new(&["row", "col", "row_label", "col_label", "re", "im"]);
    for j in 0..6 {
        for i in 0..6 {
            let z = g.matrix[(i, j)];
            csv.row(vec![i.into(), j.into(), basis.labels[i].into(), basis.labels[j].into(), z.re.into(), z.im.into()]);
        }
    }
    run.write_csv("gate.csv", csv)?;
    let mut sectors = Csv::new(&[
        "energy",
        "kind",
        "deviation",
        "phase",
        "dynamical_phase",
        "distance_identity",
        "distance_x",
        "distance_y",
        "distance_z",
    ]);
    for s in &g.sectors {
        let mut row = vec![
            s.energy.into(),
            format!("{:?}", s.kind).into(),
            s.deviation.into(),
            s.phase.into(),
            s.dynamical_phase.into(),
        ];
        row.extend(GateKind::ALL.iter().map(|k| Cell::F(s.distance_to(*k))));
        sectors.row(row);
    }
    run.write_csv("sectors.csv", sectors)?;

    let (psi0, expected) = braid_probe(&basis)?;
    let tr = evolve(&p.drive()?, &psi0, cfg.schedule.samples())?;
    run.write_csv("observables.csv", observables_csv(&tr.times, &tr.states, &psi0, &expected))?;

    run.derive("protocol", &p);
    run.derive("leakage", &g.leakage);
    run.derive("off_block", g.off_block);
    run.derive(
        "sectors",
        g.sectors
            .iter()
            .map(|s| json!({"energy": s.energy, "kind": s.kind, "deviation": s.deviation, "phase": s.phase}))
            .collect::<Vec<_>>(),
    );
    run.derive("probe_final_fidelity", fidelity(&expected, tr.last()));
    Ok(())
}

pub fn memory(cfg: &Config, run: &mut Run) -> CliResult<()> {
    let pr = &cfg.protocol;
    pr.only("memory", &["theta1", "sites", "energy", "coupling", "tau", "waits", "require_edge_state"])?;
    let chain = match (&cfg.chain, pr.theta1()?, pr.sites) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
            return Err(usage("give the memory chain either as [chain] or as protocol theta1/sites"))
        }
        (Some(c), None, None) => c.spec()?,
        (None, theta1, sites) => memory_chain(theta1.unwrap_or(5.0 * PI / 12.0), sites.unwrap_or(21))?,
    };
    let energy = pr.energy.unwrap_or(1.0);
    let spec = MemorySpec {
        chain: chain.clone(),
        qubits: vec![dimer_qubit(energy, pr.coupling.unwrap_or(DEFAULT_COUPLING))],
    };
    let mut p = MemoryProtocol::new(spec, pr.waits.clone().unwrap_or_else(|| vec![0.0, 1e2, 1e4, 1e6]));
    p.tau = pr.tau;
    if let Some(r) = pr.require_edge_state {
        p.require_edge_state = r;
    }
    p.validate()?;
    let r = run_memory(&p)?;
    let mut csv = Csv::new(&["wait", "fidelity"]);
    for (w, f) in r.waits.iter().zip(&r.fidelities) {
        csv.row(vec![(*w).into(), (*f).into()]);
    }
    run.write_csv("memory.csv", csv)?;
    let splitting = edge_splitting(&chain, energy)?;
    run.derive("tau", r.tau);
    run.derive("tau_estimate", r.tau_estimate);
    run.derive("edge_weight", r.edge_weight);
    run.derive("norm_drift", r.norm_drift);
    run.derive("edge_splitting", splitting);
    if splitting > 1e-14 {
        let half = MemoryRun::prepare(&p)?.half_period(2.5 * PI / splitting, 20_000);
        run.derive("half_period", half);
        run.derive("half_period_over_pi_per_splitting", half.map(|h| h * splitting / PI));
    }
    Ok(())
}

pub fn qudit_memory(cfg: &Config, run: &mut Run) -> CliResult<()> {
    cfg.protocol.only("qudit-memory", &["coupling", "wait"])?;
    if cfg.chain.is_some() {
        return Err(usage("qudit-memory uses its built-in 80-site chain; remove [chain]"));
    }
    let mut p = QuditMemoryProtocol::eighty_site()?;
    if let Some(u) = cfg.protocol.coupling {
        p.coupling = u;
    }
    if let Some(w) = cfg.protocol.wait {
        p.wait = w;
    }
    let r = run_qudit_memory(&p)?;
    let mut csv = Csv::new(&["label", "energy", "eigen_residual", "tau", "fidelity"]);
    for c in &r.channels {
        csv.row(vec![
            c.label.clone().into(),
            c.energy.into(),
            c.eigen_residual.into(),
            c.tau.into(),
            c.fidelity.into(),
        ]);
    }
    run.write_csv("qudit.csv", csv)?;
    let mut edges = Csv::new(&["index", "energy", "left_weight", "right_weight", "side"]);
    for s in &r.edge_states.states {
        edges.row(vec![
            s.index.into(),
            s.energy.into(),
            s.left_weight.into(),
            s.right_weight.into(),
            format!("{:?}", s.side).to_lowercase().into(),
        ]);
    }
    run.write_csv("edge_states.csv", edges)?;
    run.derive("edge_count", r.edge_states.count());
    run.derive("coupling", p.coupling);
    run.derive("wait", p.wait);
    Ok(())
}

pub fn disorder_sweep(cfg: &Config, run: &mut Run, exec: Execution) -> CliResult<()> {
    let d = cfg.disorder.as_ref().ok_or_else(|| usage("disorder-sweep needs a [disorder] section"))?;
    let target = cfg.protocol.target.as_deref().unwrap_or("braid");
    let samples = cfg.schedule.samples();
    let specs = d.specs()?;
    let run_one: Box<dyn Fn(&DisorderSpec) -> matryoshka::Result<_>> = match target {
        "braid" => {
            cfg.protocol.only("disorder-sweep", &["target", "lambda", "moves", "defect_legs"])?;
            let p = braid_protocol(cfg)?;
            Box::new(move |s| run_braid_ensemble(&p, s, samples, exec))
        }
        "transfer" => {
            cfg.protocol
                .only("disorder-sweep", &["target", "channel", "lambda", "gamma", "order", "side"])?;
            let p = transfer_protocol(cfg)?;
            let channel = cfg.protocol.channel.clone().unwrap_or_else(|| "+1".into());
            Box::new(move |s| run_transfer_ensemble(&p, &channel, s, samples, exec))
        }
        other => return Err(usage(format!("unknown disorder-sweep target {other:?}; use braid or transfer"))),
    };
    let mut summary = Csv::new(&[
        "kind",
        "sigma",
        "final_fidelity_mean",
        "final_fidelity_stderr",
        "final_entropy",
        "n_effective",
        "failed",
    ]);
    let mut derived = Vec::new();
    for spec in &specs {
        let stats = run_one(spec)?;
        let mut csv = Csv::new(&["t", "kind", "sigma", "mean_fidelity", "fidelity_stderr", "entropy", "n_effective"]);
        for j in 0..stats.times.len() {
            csv.row(vec![
                stats.times[j].into(),
                spec.kind.name().into(),
                spec.sigma.into(),
                stats.mean_fidelity[j].into(),
                stats.fidelity_stderr[j].into(),
                stats.entropy[j].into(),
                stats.n_effective.into(),
            ]);
        }
        run.write_csv(&format!("ensemble_{}_{}.csv", spec.kind.name(), spec.sigma), csv)?;
        let (m, se) = stats.final_fidelity();
        let s_final = *stats.entropy.last().expect("at least one sample");
        summary.row(vec![
            spec.kind.name().into(),
            spec.sigma.into(),
            m.into(),
            se.into(),
            s_final.into(),
            stats.n_effective.into(),
            stats.failed.len().into(),
        ]);
        derived.push(json!({
            "kind": spec.kind,
            "sigma": spec.sigma,
            "final_fidelity_mean": m,
            "final_fidelity_stderr": se,
            "final_entropy": s_final,
            "n_effective": stats.n_effective,
            "failed": stats.failed,
        }));
    }
    run.write_csv("summary.csv", summary)?;
    run.derive("target", target);
    run.derive("ensembles", derived);
    Ok(())
}

pub fn bloch(cfg: &Config, run: &mut Run) -> CliResult<()> {
    let pr = &cfg.protocol;
    pr.only("bloch", &["field_start", "field_end", "r0"])?;
    let a = Vector3::from(pr.field_start.unwrap_or([0.0, 0.0, 1.0]));
    let b = pr.field_end.map(Vector3::from).unwrap_or(a);
    let r0 = Vector3::from(pr.r0.unwrap_or([1.0, 0.0, 0.0]));
    let duration = cfg.schedule.duration.unwrap_or(10.0);
    let dt = cfg.schedule.dt.unwrap_or(1e-3);
    let ramp = cfg.schedule.ramp.unwrap_or(Ramp::Linear);
    let n = |t: f64| a + (b - a) * ramp.shape(t / duration);
    let path = bloch_evolve(n, r0, duration, dt)?;
    let steps = path.len() - 1;
    let schr = evolve_hermitian(|t| two_level_hamiltonian(n(t)), &state_from_bloch(r0)?, duration, dt, steps)?;
    let deviation = path
        .iter()
        .zip(&schr.states)
        .map(|(p, s)| (p.r - bloch_vector(s)).norm())
        .fold(0.0, f64::max);
    let mut csv = Csv::new(&["t", "x", "y", "z", "gap"]);
    for k in sample_steps(steps, cfg.schedule.samples()) {
        let p = &path[k];
        csv.row(vec![p.t.into(), p.r.x.into(), p.r.y.into(), p.r.z.into(), n(p.t).norm().into()]);
    }
    run.write_csv("bloch.csv", csv)?;
    run.derive("schrodinger_max_deviation", deviation);
    run.derive(
        "norm_drift",
        path.iter().map(|p| (p.r.norm() - 1.0).abs()).fold(0.0, f64::max),
    );
    Ok(())
}

/// Validates early so config mistakes fail before any output directory is created.
pub fn check(command: &str, cfg: &Config) -> CliResult<()> {
    let needs_chain = matches!(command, "spectrum" | "bands" | "sqrt-check");
    if needs_chain && cfg.chain.is_none() {
        return Err(CliError::Usage(format!("{command} needs a [chain] section")));
    }
    if command == "disorder-sweep" && cfg.disorder.is_none() {
        return Err(CliError::Usage("disorder-sweep needs a [disorder] section".into()));
    }
    Ok(())
}
