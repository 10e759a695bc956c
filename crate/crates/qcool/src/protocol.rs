//! Repeated evolve-and-measure cooling.
//!
//! Each cycle evolves system and regulator for a fixed time, measures the
//! regulator and keeps the run only if it is found back in its initial level
//! `k`. Conditioned on success the system transforms as
//! `rho -> V rho V^dagger` with `V = <k|U|k>`. Because the Hamiltonian
//! conserves the total excitation, `V` is block diagonal in the system
//! excitation `n` and the `n`-th block is read off the `E = n + k` sector of
//! `U`. Only the diagonal blocks of the initial state ever matter.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{QcoolError, Result};
use crate::hamiltonians::{CouplingParams, ExcitationModel, RegulatorKind, Topology, TopologyKind};
use crate::hilbert::{BlockedOperator, DensityMatrix, OperatorMatrix, OperatorTag, SpaceSpec, Subsystem};
use crate::linalg::{exp_hermitian, hermiticity_error, symmetric_eigen, CMatrix, SplitMatrix};
use crate::opttime::{self, SearchOptions};
use crate::states::{self, DSTParams};

/// Initial state of the cooled system.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemState {
    Dense(DensityMatrix),
    /// Uncorrelated product, one factor per system subsystem.
    Product(Vec<DensityMatrix>),
}

impl SystemState {
    /// `rho^{⊗ modes}` for a network of identically prepared oscillators.
    pub fn identical_modes(rho: DensityMatrix, modes: usize) -> Self {
        SystemState::Product(vec![rho; modes])
    }

    pub fn space(&self) -> Result<SpaceSpec> {
        match self {
            SystemState::Dense(r) => Ok(r.space.clone()),
            SystemState::Product(fs) => {
                let mut subs: Vec<Subsystem> = Vec::new();
                for f in fs {
                    subs.extend_from_slice(f.space.subsystems());
                }
                SpaceSpec::new(subs)
            }
        }
    }

    fn factor_for(&self, sub: usize) -> Option<(&DensityMatrix, usize)> {
        let SystemState::Product(fs) = self else {
            return None;
        };
        let mut offset = 0;
        for f in fs {
            let len = f.space.len();
            if sub < offset + len {
                return Some((f, offset));
            }
            offset += len;
        }
        None
    }

    /// Matrix element `<a|rho|b>` for multi-indices; zero outside the truncation.
    pub fn element(&self, a: &[usize], b: &[usize]) -> Complex64 {
        match self {
            SystemState::Dense(r) => match (r.space.flat_index(a), r.space.flat_index(b)) {
                (Ok(i), Ok(j)) => r.matrix[(i, j)],
                _ => Complex64::from(0.0),
            },
            SystemState::Product(fs) => {
                let mut acc = Complex64::from(1.0);
                let mut offset = 0;
                for f in fs {
                    let len = f.space.len();
                    let (sa, sb) = (&a[offset..offset + len], &b[offset..offset + len]);
                    match (f.space.flat_index(sa), f.space.flat_index(sb)) {
                        (Ok(i), Ok(j)) => acc *= f.matrix[(i, j)],
                        _ => return Complex64::from(0.0),
                    }
                    offset += len;
                }
                acc
            }
        }
    }

    pub fn trace(&self) -> f64 {
        match self {
            SystemState::Dense(r) => r.trace(),
            SystemState::Product(fs) => fs.iter().map(DensityMatrix::trace).product(),
        }
    }

    /// Population of each total system excitation `0, 1, ...`.
    pub fn excitation_weights(&self) -> Result<Vec<f64>> {
        match self {
            SystemState::Dense(r) => {
                let mut w = vec![0.0; r.space.max_excitation() + 1];
                for (i, p) in r.populations().iter().enumerate() {
                    w[r.space.excitation(i)?] += p;
                }
                Ok(w)
            }
            SystemState::Product(fs) => {
                let _ = self.factor_for(0);
                let mut w = vec![1.0];
                for f in fs {
                    let mut fw = vec![0.0; f.space.max_excitation() + 1];
                    for (i, p) in f.populations().iter().enumerate() {
                        fw[f.space.excitation(i)?] += p;
                    }
                    let mut conv = vec![0.0; w.len() + fw.len() - 1];
                    for (i, x) in w.iter().enumerate() {
                        for (j, y) in fw.iter().enumerate() {
                            conv[i + j] += x * y;
                        }
                    }
                    w = conv;
                }
                Ok(w)
            }
        }
    }

    pub fn vacuum_population(&self) -> f64 {
        let zeros = vec![0; self.space().map(|s| s.len()).unwrap_or(0)];
        self.element(&zeros, &zeros).re
    }
}

/// Everything that defines one cooling run.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub topology: Topology,
    pub coupling: CouplingParams,
    pub initial_system: SystemState,
    /// Level `k` the regulator is prepared in and post-selected on.
    pub regulator_level: usize,
    /// Evolution time per cycle; `None` picks [`default_cycle_time`].
    pub cycle_time: Option<f64>,
    pub n_max: usize,
    pub fidelity_target: f64,
    pub probability_floor: f64,
    pub convergence_tol: f64,
    /// Largest initial weight allowed above the excitation cap.
    pub leakage_tol: f64,
    /// Highest system excitation kept; `None` chooses it from `leakage_tol`.
    pub excitation_cap: Option<usize>,
    /// Oscillator cutoff inside the joint evolution. `None` leaves the
    /// oscillators effectively untruncated within every kept sector.
    pub joint_cutoff: Option<usize>,
}

impl ProtocolConfig {
    pub fn new(topology: Topology, initial_system: SystemState, regulator_level: usize) -> Self {
        Self {
            topology,
            coupling: CouplingParams::default(),
            initial_system,
            regulator_level,
            cycle_time: None,
            n_max: 100,
            fidelity_target: 0.999,
            probability_floor: 0.1,
            convergence_tol: 1e-3,
            leakage_tol: 1e-6,
            excitation_cap: None,
            joint_cutoff: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.topology.validate()?;
        let d = self.topology.regulator_levels;
        if self.regulator_level >= d {
            return Err(QcoolError::Index(format!(
                "regulator level {} outside 0..{d}",
                self.regulator_level
            )));
        }
        if self.n_max == 0 {
            return Err(QcoolError::Argument("n_max must be at least 1".into()));
        }
        for (name, v) in [
            ("fidelity_target", self.fidelity_target),
            ("probability_floor", self.probability_floor),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(QcoolError::Argument(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        if !(self.convergence_tol > 0.0) || !(self.leakage_tol > 0.0) {
            return Err(QcoolError::Argument("tolerances must be positive".into()));
        }
        if let Some(t) = self.cycle_time {
            if !t.is_finite() {
                return Err(QcoolError::Argument("cycle time must be finite".into()));
            }
        }
        let space = self.initial_system.space()?;
        let expected = self.topology.system_subsystems(1);
        let matches = space.len() == expected.len()
            && space
                .subsystems()
                .iter()
                .zip(&expected)
                .all(|(a, b)| match (a, b) {
                    (Subsystem::Oscillator { .. }, Subsystem::Oscillator { .. }) => true,
                    (Subsystem::Qudit { levels: x }, Subsystem::Qudit { levels: y }) => x == y,
                    _ => false,
                });
        if !matches {
            return Err(QcoolError::Dimension(
                "initial state does not match the system of the topology".into(),
            ));
        }
        let tr = self.initial_system.trace();
        if (tr - 1.0).abs() > 1e-9 {
            return Err(QcoolError::Argument(format!("initial state has trace {tr}, expected 1")));
        }
        Ok(())
    }

    pub fn resolved_cycle_time(&self) -> Result<f64> {
        match self.cycle_time {
            Some(t) => Ok(t),
            None => default_cycle_time(&self.topology, self.regulator_level),
        }
    }
}

/// Default evolution time per cycle.
///
/// Single oscillators and networks use the single-oscillator optimum for
/// level `k`. The hybrid system uses `pi/sqrt(2)` for `k = 0` and
/// `sqrt(2) pi` for `k = 1`; an oscillator regulator uses `pi/2` for `k = 0`.
pub fn default_cycle_time(topology: &Topology, k: usize) -> Result<f64> {
    if topology.regulator == RegulatorKind::Oscillator {
        return match k {
            0 => Ok(PI / 2.0),
            _ => Err(QcoolError::Argument(
                "no default cycle time for an oscillator regulator with k > 0".into(),
            )),
        };
    }
    match topology.kind {
        TopologyKind::Hybrid(_) => match k {
            0 => Ok(PI / 2f64.sqrt()),
            1 => Ok(2f64.sqrt() * PI),
            _ => Err(QcoolError::Argument(format!(
                "no default hybrid cycle time for k = {k}"
            ))),
        },
        _ => Ok(opttime::topt(topology.regulator_levels, k, &SearchOptions::default())?.t_opt),
    }
}

/// Evolve a Hermitian generator: `exp(-i H t)`.
pub fn evolve_unitary(h: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    let err = hermiticity_error(&h.matrix);
    if err > 1e-10 {
        return Err(QcoolError::Argument(format!("generator is not Hermitian (deviation {err:.3e})")));
    }
    OperatorMatrix::new(h.space.clone(), exp_hermitian(&h.matrix, t), OperatorTag::Unitary)
}

/// Sector-wise `exp(-i H t)` of a blocked Hermitian operator.
pub fn evolve_blocked(h: &BlockedOperator, t: f64) -> Result<BlockedOperator> {
    for b in h.blocks.values() {
        let err = hermiticity_error(&b.matrix);
        if err > 1e-10 {
            return Err(QcoolError::Argument(format!("block is not Hermitian (deviation {err:.3e})")));
        }
    }
    Ok(h.map_blocks(|m| exp_hermitian(m, t)))
}

/// `V = <k|U|k>` on the system space, for a dense unitary whose last subsystem is the regulator.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveOperator {
    pub space: SpaceSpec,
    pub matrix: CMatrix,
    pub level: usize,
    pub regulator_levels: usize,
}

impl EffectiveOperator {
    pub fn largest_singular_value(&self) -> f64 {
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .copied()
            .fold(0.0, f64::max)
    }

    /// Largest entry coupling different system excitations.
    pub fn off_block_magnitude(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let ei = self.space.excitation(i).expect("index in range");
                let ej = self.space.excitation(j).expect("index in range");
                if ei != ej {
                    worst = worst.max(self.matrix[(i, j)].norm());
                }
            }
        }
        worst
    }

    /// Diagonal in the system basis.
    pub fn diagonal(&self) -> Vec<Complex64> {
        self.matrix.diagonal().iter().copied().collect()
    }
}

pub fn effective_operator(u: &OperatorMatrix, k: usize) -> Result<EffectiveOperator> {
    let subs = u.space.subsystems();
    let reg = subs.last().expect("spaces are non-empty");
    let d = reg.dim();
    if k >= d {
        return Err(QcoolError::Index(format!("regulator level {k} outside 0..{d}")));
    }
    if subs.len() < 2 {
        return Err(QcoolError::Argument("space has no system besides the regulator".into()));
    }
    let sys = u.space.subspace(&(0..subs.len() - 1).collect::<Vec<_>>())?;
    let n = sys.dim();
    let m = CMatrix::from_fn(n, n, |i, j| u.matrix[(i * d + k, j * d + k)]);
    Ok(EffectiveOperator {
        space: sys,
        matrix: m,
        level: k,
        regulator_levels: d,
    })
}

/// One system-excitation sector of the effective operator.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveSector {
    /// System multi-indices spanning the sector.
    pub states: Vec<Vec<usize>>,
    pub matrix: CMatrix,
}

/// Effective operator stored per system excitation `n = 0..=cap`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedEffectiveOperator {
    pub level: usize,
    pub time: f64,
    pub sectors: BTreeMap<usize, EffectiveSector>,
}

/// Build `<k|exp(-iHt)|k>` sector by sector up to system excitation `cap`.
///
/// `system` fixes which subsystems form the system (oscillators may have
/// any cutoff there). Inside the joint evolution oscillators use
/// `joint_cutoff`, or `cap + k + 1` levels if `None`, which is exact for
/// every kept sector.
pub fn blocked_effective_operator(
    topology: &Topology,
    coupling: &CouplingParams,
    k: usize,
    t: f64,
    cap: usize,
    joint_cutoff: Option<usize>,
) -> Result<BlockedEffectiveOperator> {
    topology.validate()?;
    if k >= topology.regulator_levels {
        return Err(QcoolError::Index(format!(
            "regulator level {k} outside 0..{}",
            topology.regulator_levels
        )));
    }
    let cutoff = joint_cutoff.unwrap_or(cap + k + 1);
    let model = ExcitationModel::for_topology(topology, coupling, cutoff)?;
    let reg = model.space.len() - 1;
    let sectors: Vec<(usize, EffectiveSector)> = (0..=cap)
        .map_while(Some)
        .map(|n| {
            let (states, h) = model.block(n + k);
            let keep: Vec<usize> = (0..states.len()).filter(|&i| states[i][reg] == k).collect();
            let sys_states: Vec<Vec<usize>> = keep.iter().map(|&i| states[i][..reg].to_vec()).collect();
            let matrix = if keep.is_empty() {
                CMatrix::zeros(0, 0)
            } else {
                let eig = symmetric_eigen(h);
                let phases: Vec<Complex64> = eig
                    .eigenvalues
                    .iter()
                    .map(|w| Complex64::from_polar(1.0, -w * t))
                    .collect();
                let q = &eig.eigenvectors;
                let qk = DMatrix::from_fn(keep.len(), q.ncols(), |a, j| q[(keep[a], j)]);
                let scaled = |f: &dyn Fn(Complex64) -> f64| {
                    let mut m = qk.clone();
                    for (j, mut col) in m.column_iter_mut().enumerate() {
                        col *= f(phases[j]);
                    }
                    &m * qk.transpose()
                };
                SplitMatrix {
                    re: scaled(&|z| z.re),
                    im: scaled(&|z| z.im),
                }
                .to_complex()
            };
            (
                n,
                EffectiveSector {
                    states: sys_states,
                    matrix,
                },
            )
        })
        .collect();
    Ok(BlockedEffectiveOperator {
        level: k,
        time: t,
        sectors: sectors.into_iter().collect(),
    })
}

/// Fidelity and success probability after one cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub fidelity: f64,
    pub probability: f64,
}

/// Reported outcome of a run: the converged cycle, or `n_max` if the target
/// was never met.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSummary {
    pub cycles: usize,
    pub fidelity: f64,
    pub probability: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolTrace {
    /// Vacuum population of the initial system state.
    pub initial_fidelity: f64,
    pub records: Vec<CycleRecord>,
    /// First cycle with `F >= target` and `|F_n - F_{n-1}| < tol`.
    pub converged_at: Option<usize>,
}

impl ProtocolTrace {
    pub fn record(&self, cycle: usize) -> Option<&CycleRecord> {
        cycle.checked_sub(1).and_then(|i| self.records.get(i))
    }

    fn fidelity_before(&self, cycle: usize) -> f64 {
        if cycle <= 1 {
            self.initial_fidelity
        } else {
            self.records[cycle - 2].fidelity
        }
    }

    /// First cycle meeting the stopping rule for the given target and tolerance.
    pub fn first_converged(&self, target: f64, tol: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.fidelity >= target && (r.fidelity - self.fidelity_before(r.cycle)).abs() < tol)
            .map(|r| r.cycle)
    }

    /// First cycle where the fidelity changes by less than `tol`, whatever its value.
    pub fn plateau_at(&self, tol: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| (r.fidelity - self.fidelity_before(r.cycle)).abs() < tol)
            .map(|r| r.cycle)
    }

    /// Converged cycle, or `n_max` when the target was never met.
    pub fn summary(&self) -> TraceSummary {
        self.summary_at(self.converged_at.unwrap_or(self.records.len()))
    }

    /// Converged cycle, else the first plateau within `tol`, else `n_max`.
    /// Suits runs whose fidelity saturates below the target.
    pub fn saturation_summary(&self, tol: f64) -> TraceSummary {
        let cycle = self
            .converged_at
            .or_else(|| self.plateau_at(tol))
            .unwrap_or(self.records.len());
        self.summary_at(cycle)
    }

    pub fn summary_at(&self, cycle: usize) -> TraceSummary {
        let r = self.records[cycle - 1];
        TraceSummary {
            cycles: cycle,
            fidelity: r.fidelity,
            probability: r.probability,
            converged: self.converged_at.is_some_and(|c| c <= cycle),
        }
    }

    pub fn last(&self) -> &CycleRecord {
        self.records.last().expect("traces hold at least one cycle")
    }
}

/// Smallest excitation cap whose discarded initial weight is below `tol`.
pub fn excitation_cap_for(weights: &[f64], tol: f64) -> usize {
    let total: f64 = weights.iter().sum();
    let mut kept = 0.0;
    for (n, w) in weights.iter().enumerate() {
        kept += w;
        if total - kept < tol {
            return n;
        }
    }
    weights.len().saturating_sub(1)
}

/// Run `n_max` cycles of a prepared effective operator on an initial state.
pub fn iterate(
    op: &BlockedEffectiveOperator,
    state: &SystemState,
    n_max: usize,
    fidelity_target: f64,
    convergence_tol: f64,
) -> Result<ProtocolTrace> {
    let mut blocks: Vec<(SplitMatrix, SplitMatrix)> = Vec::with_capacity(op.sectors.len());
    let mut vacuum_sector = None;
    for (n, sec) in &op.sectors {
        let rho = CMatrix::from_fn(sec.states.len(), sec.states.len(), |a, b| {
            state.element(&sec.states[a], &sec.states[b])
        });
        if *n == 0 {
            vacuum_sector = Some(blocks.len());
        }
        blocks.push((SplitMatrix::from_complex(&sec.matrix), SplitMatrix::from_complex(&rho)));
    }
    let vac = vacuum_sector.ok_or_else(|| QcoolError::Argument("operator lacks the vacuum sector".into()))?;
    let initial_fidelity = state.vacuum_population() / state.trace();

    let mut records = Vec::with_capacity(n_max);
    for cycle in 1..=n_max {
        let mut p = 0.0;
        for (v, rho) in blocks.iter_mut() {
            if rho.nrows() == 0 {
                continue;
            }
            *rho = SplitMatrix::sandwich(v, rho);
            p += rho.re.trace();
        }
        if !(p > 0.0) || !p.is_finite() {
            return Err(QcoolError::Numeric(format!(
                "success probability vanished at cycle {cycle}"
            )));
        }
        let f = blocks[vac].1.re[(0, 0)] / p;
        records.push(CycleRecord {
            cycle,
            fidelity: f,
            probability: p,
        });
    }
    let mut trace = ProtocolTrace {
        initial_fidelity,
        records,
        converged_at: None,
    };
    trace.converged_at = trace.first_converged(fidelity_target, convergence_tol);
    Ok(trace)
}

fn cap_for(cfg: &ProtocolConfig) -> Result<usize> {
    let weights = cfg.initial_system.excitation_weights()?;
    match cfg.excitation_cap {
        Some(cap) => {
            let total: f64 = weights.iter().sum();
            let kept: f64 = weights.iter().take(cap + 1).sum();
            let leakage = total - kept;
            if leakage > cfg.leakage_tol {
                return Err(QcoolError::Truncation {
                    leakage,
                    tol: cfg.leakage_tol,
                });
            }
            Ok(cap)
        }
        None => Ok(excitation_cap_for(&weights, cfg.leakage_tol)),
    }
}

/// Full cooling run with the stopping rule of the config.
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<ProtocolTrace> {
    cfg.validate()?;
    let t = cfg.resolved_cycle_time()?;
    let cap = cap_for(cfg)?;
    let op = blocked_effective_operator(
        &cfg.topology,
        &cfg.coupling,
        cfg.regulator_level,
        t,
        cap,
        cfg.joint_cutoff,
    )?;
    iterate(&op, &cfg.initial_system, cfg.n_max, cfg.fidelity_target, cfg.convergence_tol)
}

/// Hybrid oscillator-plus-qudit run; fidelity is measured against `|0_V, 0_s>`.
pub fn run_hybrid(cfg: &ProtocolConfig) -> Result<ProtocolTrace> {
    if !matches!(cfg.topology.kind, TopologyKind::Hybrid(_)) {
        return Err(QcoolError::Type("run_hybrid needs a hybrid topology".into()));
    }
    run_protocol(cfg)
}

/// Long-time fidelity of a qubit regulator for a single oscillator:
/// only Fock levels whose amplitude keeps unit modulus at the optimal time survive.
pub fn qubit_asymptotic_fidelity(rho: &DensityMatrix, k: usize) -> Result<f64> {
    let pops = rho.populations();
    let survives = |i: usize| -> bool {
        match k {
            // |cos(sqrt(i) pi/2)| = 1  <=>  i = (2m)^2
            0 => {
                let s = (i as f64).sqrt().round() as usize;
                s * s == i && s % 2 == 0
            }
            // |cos(sqrt(i+1) pi)| = 1  <=>  i = m^2 - 1
            1 => {
                let s = ((i + 1) as f64).sqrt().round() as usize;
                s * s == i + 1
            }
            _ => false,
        }
    };
    if k > 1 {
        return Err(QcoolError::Argument(format!("a qubit regulator has no level {k}")));
    }
    let denom: f64 = pops.iter().enumerate().filter(|(i, _)| survives(*i)).map(|(_, p)| p).sum();
    Ok(pops[0] / denom)
}

/// One cell of a dimension sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub d: usize,
    pub k: usize,
    pub cycles: usize,
    pub fidelity: f64,
    pub probability: f64,
    pub converged: bool,
}

/// Run every `(d, k)` pair with `k < d`; rows come back ordered by `(d, k)`.
pub fn sweep_dimension(base: &ProtocolConfig, d_list: &[usize], k_list: &[usize]) -> Result<Vec<SweepRow>> {
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for &d in d_list {
        for &k in k_list {
            if k < d {
                pairs.push((d, k));
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let rows: Vec<Result<SweepRow>> = pairs
        .par_iter()
        .map(|&(d, k)| {
            let mut cfg = base.clone();
            cfg.topology.regulator_levels = d;
            cfg.regulator_level = k;
            let s = run_protocol(&cfg)?.summary();
            Ok(SweepRow {
                d,
                k,
                cycles: s.cycles,
                fidelity: s.fidelity,
                probability: s.probability,
                converged: s.converged,
            })
        })
        .collect();
    rows.into_iter().collect()
}

/// One point of an energy sweep; `outcome` is absent when the target is not
/// met within `n_max` cycles with at least the probability floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyRow {
    pub nbar: f64,
    pub energy: f64,
    pub outcome: Option<TraceSummary>,
}

/// Reusable evaluator for single-oscillator states of varying thermal occupation.
///
/// The effective operator of a single oscillator is diagonal in the Fock
/// basis, so cycle statistics depend on the initial populations only and the
/// state is carried as its diagonal.
pub struct EnergySweep<'a> {
    base: &'a ProtocolConfig,
    family: states::DstFamily,
    op: BlockedEffectiveOperator,
    space: SpaceSpec,
}

impl<'a> EnergySweep<'a> {
    /// `state` fixes displacement and squeezing; its `nbar` is ignored.
    pub fn new(base: &'a ProtocolConfig, state: &DSTParams, cutoff: usize) -> Result<Self> {
        if base.topology.kind != TopologyKind::SingleOscillator {
            return Err(QcoolError::Type("energy sweeps use a single oscillator".into()));
        }
        if base.topology.regulator_levels < 3 {
            return Err(QcoolError::Argument("energy sweeps need d >= 3".into()));
        }
        let family = states::DstFamily::new(state, cutoff)?;
        let t = base.resolved_cycle_time()?;
        let op = blocked_effective_operator(
            &base.topology,
            &base.coupling,
            base.regulator_level,
            t,
            cutoff - 1,
            base.joint_cutoff,
        )?;
        Ok(Self {
            base,
            family,
            op,
            space: SpaceSpec::oscillator(cutoff)?,
        })
    }

    pub fn evaluate(&self, nbar: f64) -> Result<EnergyRow> {
        let pops = self.family.populations(nbar)?;
        let energy = pops.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        let rho = DensityMatrix::diagonal(self.space.clone(), &pops)?;
        let trace = iterate(
            &self.op,
            &SystemState::Dense(rho),
            self.base.n_max,
            self.base.fidelity_target,
            self.base.convergence_tol,
        )?;
        let outcome = trace
            .converged_at
            .map(|_| trace.summary())
            .filter(|s| s.probability >= self.base.probability_floor);
        Ok(EnergyRow { nbar, energy, outcome })
    }
}

/// Required cycles against initial energy, sweeping the thermal occupation.
pub fn sweep_energy(
    base: &ProtocolConfig,
    state: &DSTParams,
    cutoff: usize,
    nbar_grid: &[f64],
) -> Result<Vec<EnergyRow>> {
    let sweep = EnergySweep::new(base, state, cutoff)?;
    nbar_grid.iter().map(|&nb| sweep.evaluate(nb)).collect()
}

/// Largest coolable energy along the thermal-occupation line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyThreshold {
    pub nbar: f64,
    pub energy: f64,
    pub cycles: usize,
}

/// Scan `nbar` on `[0, nbar_max]` with step `step`, then bisect the last
/// success-to-failure transition down to `resolution`.
pub fn energy_threshold(
    base: &ProtocolConfig,
    state: &DSTParams,
    cutoff: usize,
    nbar_max: f64,
    step: f64,
    resolution: f64,
) -> Result<Option<EnergyThreshold>> {
    let sweep = EnergySweep::new(base, state, cutoff)?;
    let n = (nbar_max / step).floor() as usize;
    let mut last_ok: Option<(f64, EnergyRow)> = None;
    let mut first_fail_after: Option<f64> = None;
    for i in 0..=n {
        let nb = i as f64 * step;
        let row = sweep.evaluate(nb)?;
        if row.outcome.is_some() {
            last_ok = Some((nb, row));
            first_fail_after = None;
        } else if last_ok.is_some() && first_fail_after.is_none() {
            first_fail_after = Some(nb);
        }
    }
    let Some((mut lo, mut lo_row)) = last_ok else {
        return Ok(None);
    };
    if let Some(mut hi) = first_fail_after {
        while hi - lo > resolution {
            let mid = 0.5 * (lo + hi);
            let row = sweep.evaluate(mid)?;
            if row.outcome.is_some() {
                lo = mid;
                lo_row = row;
            } else {
                hi = mid;
            }
        }
    }
    Ok(Some(EnergyThreshold {
        nbar: lo,
        energy: lo_row.energy,
        cycles: lo_row.outcome.expect("kept only successful rows").cycles,
    }))
}
