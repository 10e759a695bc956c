//! Executes a validated configuration and tabulates the results.

use num_complex::Complex64;
use qcool::gaussian::theorem3_oneshot;
use qcool::opttime::{topt, Method, SearchOptions};
use qcool::protocol::{run_protocol, EnergySweep, ProtocolTrace, TraceSummary};
use qcool::stateprep::{make_cat, make_hybrid_entangled, make_noon, make_odd_cat};
use qcool::states::{depolarized_qudit, displaced_squeezed_thermal};
use qcool::{DSTParams, ProtocolConfig, QcoolError, SystemState, Topology, TopologyKind};
use rayon::prelude::*;

use crate::config::{Experiment, PrepKind, RegulatorKindConfig, Report, RunConfig, TopologyConfig, TopologyKindConfig};
use crate::error::CliError;
use crate::output::{Cell, Table};

pub fn run(cfg: &RunConfig) -> Result<Table, CliError> {
    cfg.validate()?;
    match cfg.experiment {
        Experiment::Cool => cool(cfg),
        Experiment::SweepDim | Experiment::Network | Experiment::Hybrid => sweep(cfg),
        Experiment::SweepEnergy => sweep_energy(cfg),
        Experiment::Gaussian => gaussian(cfg),
        Experiment::OptTime => opt_time(cfg),
        Experiment::Prep => prep(cfg),
    }
}

fn dst_params(cfg: &RunConfig) -> Result<DSTParams, CliError> {
    let s = cfg.state()?;
    Ok(DSTParams::new(s.alpha, s.r, s.nbar)
        .with_alpha_phase(s.alpha_phase)
        .with_theta(s.theta))
}

fn topology_config(cfg: &RunConfig) -> TopologyConfig {
    cfg.topology.clone().unwrap_or(TopologyConfig {
        kind: TopologyKindConfig::Single,
        modes: 1,
        system_levels: 2,
        regulator: RegulatorKindConfig::Qudit,
    })
}

/// `(d, k)` pairs with `k < d`, sorted and deduplicated.
fn pairs(cfg: &RunConfig) -> Result<Vec<(usize, usize)>, CliError> {
    let r = cfg.regulator()?;
    let mut out: Vec<(usize, usize)> = r
        .d
        .iter()
        .flat_map(|&d| r.k.iter().filter(move |&&k| k < d).map(move |&k| (d, k)))
        .collect();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Protocol config for regulator size `d` and level `k`.
fn protocol_config(cfg: &RunConfig, d: usize, k: usize) -> Result<ProtocolConfig, CliError> {
    let topo = topology_config(cfg);
    let s = cfg.state()?;
    let rho = displaced_squeezed_thermal(&dst_params(cfg)?, s.cutoff)?;
    let (kind, system) = match topo.kind {
        TopologyKindConfig::Single => (TopologyKind::SingleOscillator, SystemState::Dense(rho)),
        TopologyKindConfig::Linear => (TopologyKind::Linear(topo.modes), SystemState::identical_modes(rho, topo.modes)),
        TopologyKindConfig::Star => (TopologyKind::Star(topo.modes), SystemState::identical_modes(rho, topo.modes)),
        TopologyKindConfig::Hybrid => (
            TopologyKind::Hybrid(topo.system_levels),
            SystemState::Product(vec![rho, depolarized_qudit(topo.system_levels)?]),
        ),
    };
    let topology = match topo.regulator {
        RegulatorKindConfig::Qudit => Topology::new(kind, d),
        RegulatorKindConfig::Oscillator => Topology::new(kind, 2).with_oscillator_regulator(d),
    };
    let p = &cfg.protocol;
    let mut pc = ProtocolConfig::new(topology, system, k);
    pc.cycle_time = p.cycle_time;
    pc.n_max = p.n_max;
    pc.fidelity_target = p.fidelity_target;
    pc.probability_floor = p.probability_floor;
    pc.convergence_tol = p.convergence_tol;
    Ok(pc)
}

fn report(cfg: &RunConfig, trace: &ProtocolTrace) -> TraceSummary {
    match cfg.protocol.report {
        Report::Converged => trace.summary(),
        Report::Saturation => trace.saturation_summary(cfg.protocol.convergence_tol),
    }
}

fn cool(cfg: &RunConfig) -> Result<Table, CliError> {
    let ps = pairs(cfg)?;
    let [(d, k)] = ps[..] else {
        return Err(CliError::Config(format!(
            "cool runs one (d, k) pair, the regulator lists give {}",
            ps.len()
        )));
    };
    let trace = run_protocol(&protocol_config(cfg, d, k)?)?;
    let mut t = Table::new(&["cycle", "F", "P", "FP_product"]);
    for r in &trace.records {
        t.push(vec![
            r.cycle.into(),
            r.fidelity.into(),
            r.probability.into(),
            (r.fidelity * r.probability).into(),
        ]);
    }
    Ok(t)
}

fn sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    let rows: Vec<Result<(usize, usize, TraceSummary), CliError>> = pairs(cfg)?
        .par_iter()
        .map(|&(d, k)| {
            let trace = run_protocol(&protocol_config(cfg, d, k)?)?;
            Ok((d, k, report(cfg, &trace)))
        })
        .collect();
    let mut t = Table::new(&["d", "k", "N", "F", "P"]);
    for row in rows {
        let (d, k, s) = row?;
        t.push(vec![d.into(), k.into(), s.cycles.into(), s.fidelity.into(), s.probability.into()]);
    }
    Ok(t)
}

fn sweep_energy(cfg: &RunConfig) -> Result<Table, CliError> {
    if topology_config(cfg).kind != TopologyKindConfig::Single {
        return Err(CliError::Config("sweep-energy runs a single oscillator".into()));
    }
    let grid = &cfg.energy.as_ref().expect("validated").nbar;
    let state = dst_params(cfg)?;
    let cutoff = cfg.state()?.cutoff;
    let mut t = Table::new(&["d", "k", "nbar", "energy", "N", "F", "P"]);
    for (d, k) in pairs(cfg)? {
        let base = protocol_config(cfg, d, k)?;
        let sweep = EnergySweep::new(&base, &state, cutoff)?;
        let rows: Vec<_> = grid.par_iter().map(|&nb| sweep.evaluate(nb)).collect();
        for row in rows {
            let row = row?;
            let o = row.outcome;
            t.push(vec![
                d.into(),
                k.into(),
                row.nbar.into(),
                row.energy.into(),
                o.map(|s| s.cycles).into(),
                o.map(|s| s.fidelity).into(),
                o.map(|s| s.probability).into(),
            ]);
        }
    }
    Ok(t)
}

fn gaussian(cfg: &RunConfig) -> Result<Table, CliError> {
    let g = cfg.gaussian.as_ref().expect("validated");
    let mut t = Table::new(&["alpha1", "alpha2", "r", "nbar", "fidelity", "prob_formula", "prob_projector"]);
    for &a1 in &g.alpha1 {
        for &a2 in &g.alpha2 {
            for &r in &g.r {
                for &nbar in &g.nbar {
                    let alpha = Complex64::new(a1, a2);
                    let p = DSTParams::new(alpha.norm(), r, nbar).with_alpha_phase(alpha.arg());
                    let o = theorem3_oneshot(&p)?;
                    t.push(vec![
                        a1.into(),
                        a2.into(),
                        r.into(),
                        nbar.into(),
                        o.fidelity.into(),
                        o.prob_formula.into(),
                        o.prob.into(),
                    ]);
                }
            }
        }
    }
    Ok(t)
}

fn opt_time(cfg: &RunConfig) -> Result<Table, CliError> {
    let o = cfg.opt_time.as_ref().expect("validated");
    let opts = SearchOptions {
        window: (o.window[0], o.window[1]),
        grid_step: o.grid_step,
        tol: o.tol,
        prefer_near: o.prefer_near,
    };
    let mut ks = o.k.clone();
    ks.sort_unstable();
    ks.dedup();
    let results: Vec<_> = ks.par_iter().map(|&k| (k, topt(k + 1, k, &opts))).collect();
    let mut t = Table::new(&["k", "t_opt", "residual", "method"]);
    for (k, res) in results {
        match res {
            Ok(r) => {
                let method = match r.method {
                    Method::Analytic => "analytic",
                    Method::Numeric => "numeric",
                };
                t.push(vec![k.into(), r.t_opt.into(), r.residual.into(), method.into()]);
            }
            // no admissible time: report the best candidate's residual only
            Err(QcoolError::SearchFailure { best_residual, .. }) => {
                t.push(vec![k.into(), Cell::Empty, best_residual.into(), "none".into()]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(t)
}

fn prep(cfg: &RunConfig) -> Result<Table, CliError> {
    let p = cfg.prep.as_ref().expect("validated");
    let mut ds = p.d.clone();
    ds.sort_unstable();
    ds.dedup();
    let alpha = Complex64::from(p.alpha);
    let mut t = Table::new(&["kind", "d", "param", "fidelity", "success_prob"]);
    for &kind in &p.kinds {
        for &d in &ds {
            match kind {
                PrepKind::Cat | PrepKind::OddCat => {
                    // N-component cats need an even qudit with d = N
                    if d % 2 != 0 {
                        continue;
                    }
                    let even = make_cat(alpha, d, d, p.cutoff)?;
                    let res = if kind == PrepKind::Cat {
                        even
                    } else {
                        make_odd_cat(&even, alpha, d)?
                    };
                    t.push(vec![
                        kind.name().into(),
                        d.into(),
                        p.alpha.into(),
                        res.target_fidelity.into(),
                        res.success_prob.into(),
                    ]);
                }
                PrepKind::HybridEntangled => {
                    for &r in &p.r {
                        let h = make_hybrid_entangled(d, r, p.cutoff)?;
                        t.push(vec![
                            kind.name().into(),
                            d.into(),
                            r.into(),
                            h.prep.target_fidelity.into(),
                            h.prep.success_prob.into(),
                        ]);
                    }
                }
                PrepKind::Noon => {
                    let n = make_noon(d, p.cutoff)?;
                    t.push(vec![
                        kind.name().into(),
                        d.into(),
                        (d - 1).into(),
                        n.prep.target_fidelity.into(),
                        n.prep.success_prob.into(),
                    ]);
                }
            }
        }
    }
    if t.rows.is_empty() {
        return Err(CliError::Config("empty grid: no preparation applies to the listed qudit sizes".into()));
    }
    Ok(t)
}
