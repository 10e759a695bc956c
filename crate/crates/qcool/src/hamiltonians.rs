//! Hamiltonians of oscillator networks coupled to a regulator.
//!
//! Two independent representations are provided. The dense builders
//! ([`free_hamiltonian`], [`interaction_linear`], ...) assemble matrices from
//! ladder operators on a [`SpaceSpec`]. [`ExcitationModel`] enumerates the
//! basis states of one excitation sector directly and is what the cooling
//! engine diagonalises. Tests check that the two agree.

use nalgebra::DMatrix;

use crate::error::{QcoolError, Result};
use crate::hilbert::{annihilation, qudit_transition, raising, OperatorMatrix, OperatorTag, SpaceSpec, Subsystem};
use crate::linalg::CMatrix;

/// Couplings and level spacings. The defaults are the resonant point where
/// every frequency and coupling equals one.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingParams {
    /// Oscillator-regulator coupling.
    pub lambda: f64,
    /// Oscillator-oscillator coupling in the linear chain.
    pub lambda_tilde: f64,
    /// Regulator level spacing.
    pub omega_a: f64,
    /// Level spacing of the system qudit in the hybrid setup.
    pub omega_s: f64,
    /// Oscillator frequencies; missing entries default to one.
    pub omega_f: Vec<f64>,
}

impl Default for CouplingParams {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            lambda_tilde: 1.0,
            omega_a: 1.0,
            omega_s: 1.0,
            omega_f: Vec::new(),
        }
    }
}

impl CouplingParams {
    pub fn omega_f(&self, mode: usize) -> f64 {
        self.omega_f.get(mode).copied().unwrap_or(1.0)
    }
}

/// Arrangement of the cooled system around the regulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyKind {
    SingleOscillator,
    /// Open chain of `M` oscillators; the first one touches the regulator.
    Linear(usize),
    /// `M` oscillators each coupled only to the regulator.
    Star(usize),
    /// One oscillator plus a `d_s`-level system qudit, both coupled through the oscillator.
    Hybrid(usize),
}

/// What plays the regulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegulatorKind {
    Qudit,
    /// Truncated oscillator with `sqrt(n)` ladder factors.
    Oscillator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    pub kind: TopologyKind,
    /// Number of regulator levels `d` (the cutoff for an oscillator regulator).
    pub regulator_levels: usize,
    pub regulator: RegulatorKind,
}

impl Topology {
    pub fn new(kind: TopologyKind, d: usize) -> Self {
        Self {
            kind,
            regulator_levels: d,
            regulator: RegulatorKind::Qudit,
        }
    }

    pub fn with_oscillator_regulator(mut self, cutoff: usize) -> Self {
        self.regulator = RegulatorKind::Oscillator;
        self.regulator_levels = cutoff;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            TopologyKind::Linear(0) | TopologyKind::Star(0) => {
                return Err(QcoolError::Argument("a network needs at least one oscillator".into()))
            }
            TopologyKind::Hybrid(ds) if ds < 2 => {
                return Err(QcoolError::Argument("the hybrid system qudit needs d_s >= 2".into()))
            }
            _ => {}
        }
        if self.regulator_levels < 2 {
            return Err(QcoolError::Argument("the regulator needs at least two levels".into()));
        }
        Ok(())
    }

    /// Number of oscillators in the system.
    pub fn modes(&self) -> usize {
        match self.kind {
            TopologyKind::SingleOscillator | TopologyKind::Hybrid(_) => 1,
            TopologyKind::Linear(m) | TopologyKind::Star(m) => m,
        }
    }

    pub fn regulator_subsystem(&self) -> Subsystem {
        match self.regulator {
            RegulatorKind::Qudit => Subsystem::Qudit {
                levels: self.regulator_levels,
            },
            RegulatorKind::Oscillator => Subsystem::Oscillator {
                cutoff: self.regulator_levels,
            },
        }
    }

    /// System subsystems with the given oscillator cutoff.
    pub fn system_subsystems(&self, cutoff: usize) -> Vec<Subsystem> {
        let osc = Subsystem::Oscillator { cutoff };
        match self.kind {
            TopologyKind::Hybrid(ds) => vec![osc, Subsystem::Qudit { levels: ds }],
            _ => vec![osc; self.modes()],
        }
    }

    /// Full space, system first and regulator last.
    pub fn space(&self, cutoff: usize) -> Result<SpaceSpec> {
        let mut subs = self.system_subsystems(cutoff);
        subs.push(self.regulator_subsystem());
        SpaceSpec::new(subs)
    }

    /// Exchange terms `c (up_raised down_lowered + h.c.)` on the full space.
    pub fn exchanges(&self, params: &CouplingParams) -> Vec<Exchange> {
        let m = self.modes();
        let reg = match self.kind {
            TopologyKind::Hybrid(_) => 2,
            _ => m,
        };
        match self.kind {
            TopologyKind::SingleOscillator => vec![Exchange::new(params.lambda, 0, reg)],
            TopologyKind::Linear(_) => {
                let mut v = vec![Exchange::new(params.lambda, 0, reg)];
                v.extend((0..m - 1).map(|i| Exchange::new(params.lambda_tilde, i + 1, i)));
                v
            }
            TopologyKind::Star(_) => (0..m).map(|i| Exchange::new(params.lambda, i, reg)).collect(),
            TopologyKind::Hybrid(_) => vec![
                Exchange::new(params.lambda, 0, reg),
                Exchange::new(params.lambda, 0, 1),
            ],
        }
    }

    /// Level spacing of every subsystem of [`Topology::space`].
    pub fn frequencies(&self, params: &CouplingParams) -> Vec<f64> {
        let mut f: Vec<f64> = match self.kind {
            TopologyKind::Hybrid(_) => vec![params.omega_f(0), params.omega_s],
            _ => (0..self.modes()).map(|i| params.omega_f(i)).collect(),
        };
        f.push(params.omega_a);
        f
    }
}

/// `coupling * (up_{raised} down_{lowered} + h.c.)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Exchange {
    pub coupling: f64,
    pub lowered: usize,
    pub raised: usize,
}

impl Exchange {
    pub fn new(coupling: f64, lowered: usize, raised: usize) -> Self {
        Self {
            coupling,
            lowered,
            raised,
        }
    }
}

/// `sum_j omega_j n_j` with `n_j` the level of subsystem `j` (oscillator number
/// operators and `sum_k k |k><k|` for qudits).
pub fn free_hamiltonian(space: &SpaceSpec, frequencies: &[f64]) -> Result<OperatorMatrix> {
    if frequencies.len() != space.len() {
        return Err(QcoolError::Dimension(format!(
            "{} frequencies for {} subsystems",
            frequencies.len(),
            space.len()
        )));
    }
    let n = space.dim();
    let mut h = CMatrix::zeros(n, n);
    for (j, (sub, w)) in space.subsystems().iter().zip(frequencies).enumerate() {
        match sub {
            Subsystem::Oscillator { .. } => {
                let a = annihilation(space, j)?.matrix;
                h += a.adjoint() * a * num_complex::Complex64::from(*w);
            }
            Subsystem::Qudit { levels } => {
                for k in 1..*levels {
                    h += qudit_transition(space, j, k, k)?.matrix * num_complex::Complex64::from(w * k as f64);
                }
            }
        }
    }
    OperatorMatrix::new(space.clone(), h, OperatorTag::Hermitian)
}

fn lowering(space: &SpaceSpec, mode: usize) -> Result<OperatorMatrix> {
    Ok(raising(space, mode)?.adjoint())
}

fn exchange_term(space: &SpaceSpec, c: f64, lowered: usize, raised: usize) -> Result<OperatorMatrix> {
    let up = raising(space, raised)?;
    let down = lowering(space, lowered)?;
    Ok(up.compose(&down)?.scale(c).plus_adjoint())
}

fn regulator_index(space: &SpaceSpec) -> usize {
    space.len() - 1
}

/// `lambda a_1 sum_k |k><k-1|_R + lambda~ sum_i a_i^dagger a_{i+1} + h.c.` on
/// `M` oscillators followed by the regulator.
pub fn interaction_linear(space: &SpaceSpec, params: &CouplingParams) -> Result<OperatorMatrix> {
    let reg = regulator_index(space);
    let mut h = exchange_term(space, params.lambda, 0, reg)?;
    for i in 0..reg.saturating_sub(1) {
        h = h.add(&exchange_term(space, params.lambda_tilde, i + 1, i)?)?;
    }
    Ok(h)
}

/// `lambda sum_i a_i sum_k |k><k-1|_R + h.c.`; no oscillator-oscillator terms.
pub fn interaction_star(space: &SpaceSpec, params: &CouplingParams) -> Result<OperatorMatrix> {
    let reg = regulator_index(space);
    let mut h = exchange_term(space, params.lambda, 0, reg)?;
    for i in 1..reg {
        h = h.add(&exchange_term(space, params.lambda, i, reg)?)?;
    }
    Ok(h)
}

/// Oscillator, system qudit and regulator (in that order): free terms plus
/// `lambda a (up_R + up_s) + h.c.`.
pub fn hamiltonian_hybrid(space: &SpaceSpec, params: &CouplingParams) -> Result<OperatorMatrix> {
    if space.len() != 3 || !space.subsystems()[0].is_oscillator() || space.subsystems()[1].is_oscillator() {
        return Err(QcoolError::Type(
            "hybrid space must be oscillator, qudit, regulator".into(),
        ));
    }
    let free = free_hamiltonian(space, &[params.omega_f(0), params.omega_s, params.omega_a])?;
    let to_reg = exchange_term(space, params.lambda, 0, 2)?;
    let to_sys = exchange_term(space, params.lambda, 0, 1)?;
    free.add(&to_reg)?.add(&to_sys)
}

/// Dense total Hamiltonian of a topology.
pub fn hamiltonian(topology: &Topology, params: &CouplingParams, cutoff: usize) -> Result<OperatorMatrix> {
    topology.validate()?;
    let space = topology.space(cutoff)?;
    match topology.kind {
        TopologyKind::Hybrid(_) => hamiltonian_hybrid(&space, params),
        TopologyKind::Star(_) => {
            free_hamiltonian(&space, &topology.frequencies(params))?.add(&interaction_star(&space, params)?)
        }
        TopologyKind::SingleOscillator | TopologyKind::Linear(_) => {
            free_hamiltonian(&space, &topology.frequencies(params))?.add(&interaction_linear(&space, params)?)
        }
    }
}

/// Excitation-conserving Hamiltonian described by level spacings and
/// exchange terms, evaluated one excitation sector at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationModel {
    pub space: SpaceSpec,
    pub frequencies: Vec<f64>,
    pub exchanges: Vec<Exchange>,
}

impl ExcitationModel {
    pub fn new(space: SpaceSpec, frequencies: Vec<f64>, exchanges: Vec<Exchange>) -> Result<Self> {
        if frequencies.len() != space.len() {
            return Err(QcoolError::Dimension("one frequency per subsystem required".into()));
        }
        for x in &exchanges {
            if x.lowered >= space.len() || x.raised >= space.len() || x.lowered == x.raised {
                return Err(QcoolError::Index(format!(
                    "exchange between subsystems {} and {} is invalid",
                    x.lowered, x.raised
                )));
            }
        }
        Ok(Self {
            space,
            frequencies,
            exchanges,
        })
    }

    pub fn for_topology(topology: &Topology, params: &CouplingParams, cutoff: usize) -> Result<Self> {
        topology.validate()?;
        Self::new(
            topology.space(cutoff)?,
            topology.frequencies(params),
            topology.exchanges(params),
        )
    }

    /// Basis states (multi-indices) of sector `e` and the real symmetric block.
    pub fn block(&self, e: usize) -> (Vec<Vec<usize>>, DMatrix<f64>) {
        let states = self.space.states_with_excitation(e);
        let n = states.len();
        let mut h = DMatrix::zeros(n, n);
        let lookup: std::collections::HashMap<&[usize], usize> =
            states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
        let subs = self.space.subsystems();
        for (i, s) in states.iter().enumerate() {
            h[(i, i)] = s.iter().zip(&self.frequencies).map(|(&l, w)| w * l as f64).sum();
            for x in &self.exchanges {
                let down = subs[x.lowered].lower_amplitude(s[x.lowered]);
                let up = subs[x.raised].raise_amplitude(s[x.raised]);
                if down == 0.0 || up == 0.0 {
                    continue;
                }
                let mut t = s.clone();
                t[x.lowered] -= 1;
                t[x.raised] += 1;
                let j = lookup[t.as_slice()];
                let amp = x.coupling * down * up;
                h[(j, i)] += amp;
                h[(i, j)] += amp;
            }
        }
        (states, h)
    }
}
