//! Truncated composite Hilbert spaces: basis bookkeeping, elementary
//! operators, tensor structure and excitation-number blocks.
//!
//! Basis states are ordered row-major over the subsystem list, so the first
//! subsystem is the most significant digit. By convention the regulator is
//! always the last subsystem, which makes `<k|U|k>` a strided sub-block.

use std::collections::BTreeMap;

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{QcoolError, Result};
use crate::linalg::{hermiticity_error, unitarity_error, CMatrix};

/// One factor of a composite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    /// Bosonic mode truncated to Fock levels `0..cutoff`.
    Oscillator { cutoff: usize },
    /// Discrete system with levels `0..levels`.
    Qudit { levels: usize },
}

impl Subsystem {
    pub fn dim(&self) -> usize {
        match *self {
            Subsystem::Oscillator { cutoff } => cutoff,
            Subsystem::Qudit { levels } => levels,
        }
    }

    pub fn is_oscillator(&self) -> bool {
        matches!(self, Subsystem::Oscillator { .. })
    }

    /// Matrix element of the raising ladder `<level+1| up |level>`, zero at the top.
    pub fn raise_amplitude(&self, level: usize) -> f64 {
        if level + 1 >= self.dim() {
            return 0.0;
        }
        match self {
            Subsystem::Oscillator { .. } => ((level + 1) as f64).sqrt(),
            Subsystem::Qudit { .. } => 1.0,
        }
    }

    /// Matrix element of the lowering ladder `<level-1| down |level>`, zero at the bottom.
    pub fn lower_amplitude(&self, level: usize) -> f64 {
        if level == 0 || level >= self.dim() {
            return 0.0;
        }
        match self {
            Subsystem::Oscillator { .. } => (level as f64).sqrt(),
            Subsystem::Qudit { .. } => 1.0,
        }
    }
}

/// Ordered list of subsystems defining a truncated tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceSpec {
    subsystems: Vec<Subsystem>,
}

impl SpaceSpec {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(QcoolError::Argument("a space needs at least one subsystem".into()));
        }
        for s in &subsystems {
            match *s {
                Subsystem::Oscillator { cutoff } if cutoff == 0 => {
                    return Err(QcoolError::Argument("oscillator cutoff must be positive".into()))
                }
                Subsystem::Qudit { levels } if levels < 2 => {
                    return Err(QcoolError::Argument("a qudit needs at least two levels".into()))
                }
                _ => {}
            }
        }
        Ok(Self { subsystems })
    }

    pub fn oscillator(cutoff: usize) -> Result<Self> {
        Self::new(vec![Subsystem::Oscillator { cutoff }])
    }

    pub fn qudit(levels: usize) -> Result<Self> {
        Self::new(vec![Subsystem::Qudit { levels }])
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(Subsystem::dim).collect()
    }

    /// Total dimension, the product of the subsystem dimensions.
    pub fn dim(&self) -> usize {
        self.subsystems.iter().map(Subsystem::dim).product()
    }

    /// Flat basis index of a multi-index.
    pub fn flat_index(&self, levels: &[usize]) -> Result<usize> {
        if levels.len() != self.len() {
            return Err(QcoolError::Dimension(format!(
                "expected {} levels, got {}",
                self.len(),
                levels.len()
            )));
        }
        let mut idx = 0;
        for (l, s) in levels.iter().zip(&self.subsystems) {
            if *l >= s.dim() {
                return Err(QcoolError::Index(format!("level {l} outside 0..{}", s.dim())));
            }
            idx = idx * s.dim() + l;
        }
        Ok(idx)
    }

    /// Multi-index of a flat basis index.
    pub fn levels(&self, index: usize) -> Result<Vec<usize>> {
        if index >= self.dim() {
            return Err(QcoolError::Index(format!("basis index {index} outside 0..{}", self.dim())));
        }
        let mut out = vec![0; self.len()];
        let mut rest = index;
        for (slot, s) in out.iter_mut().zip(&self.subsystems).rev() {
            *slot = rest % s.dim();
            rest /= s.dim();
        }
        Ok(out)
    }

    /// Total excitation (sum of levels) of a basis state.
    pub fn excitation(&self, index: usize) -> Result<usize> {
        Ok(self.levels(index)?.iter().sum())
    }

    pub fn max_excitation(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim() - 1).sum()
    }

    /// Multi-indices with total excitation `e`, in ascending flat order.
    pub fn states_with_excitation(&self, e: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = vec![0; self.len()];
        self.fill(0, e, &mut cur, &mut out);
        out
    }

    fn fill(&self, pos: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pos == self.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let top = (self.subsystems[pos].dim() - 1).min(left);
        for l in 0..=top {
            cur[pos] = l;
            self.fill(pos + 1, left - l, cur, out);
        }
    }

    /// Space made of the listed subsystems, in the given order.
    pub fn subspace(&self, keep: &[usize]) -> Result<SpaceSpec> {
        let mut subs = Vec::with_capacity(keep.len());
        for &k in keep {
            let s = self
                .subsystems
                .get(k)
                .ok_or_else(|| QcoolError::Index(format!("subsystem {k} out of range")))?;
            subs.push(*s);
        }
        SpaceSpec::new(subs)
    }

    /// Concatenation `self ⊗ other`.
    pub fn tensor(&self, other: &SpaceSpec) -> SpaceSpec {
        let mut subs = self.subsystems.clone();
        subs.extend_from_slice(&other.subsystems);
        SpaceSpec { subsystems: subs }
    }

    fn check_mode(&self, mode: usize) -> Result<&Subsystem> {
        self.subsystems
            .get(mode)
            .ok_or_else(|| QcoolError::Index(format!("subsystem {mode} out of range 0..{}", self.len())))
    }
}

/// Normalisable state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Ket {
    pub space: SpaceSpec,
    pub amplitudes: DVector<Complex64>,
}

impl Ket {
    pub fn new(space: SpaceSpec, amplitudes: DVector<Complex64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(QcoolError::Dimension(format!(
                "ket of length {} for a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        Ok(Self { space, amplitudes })
    }

    pub fn basis(space: SpaceSpec, levels: &[usize]) -> Result<Self> {
        let idx = space.flat_index(levels)?;
        let mut v = DVector::zeros(space.dim());
        v[idx] = Complex64::new(1.0, 0.0);
        Ok(Self { space, amplitudes: v })
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(QcoolError::Numeric("cannot normalise a zero vector".into()));
        }
        Ok(Self {
            space: self.space.clone(),
            amplitudes: self.amplitudes.unscale(n),
        })
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Ket) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|<self|other>|^2` for normalised vectors.
    pub fn fidelity(&self, other: &Ket) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            space: self.space.clone(),
            matrix: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Dense density operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub space: SpaceSpec,
    pub matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(space: SpaceSpec, matrix: CMatrix) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(QcoolError::Dimension(format!(
                "{}x{} matrix for a space of dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm = (&matrix - matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-10 {
            return Err(QcoolError::Argument(format!("density matrix is not Hermitian (error {herm:.3e})")));
        }
        Ok(Self { space, matrix })
    }

    /// Diagonal state with the given populations.
    pub fn diagonal(space: SpaceSpec, populations: &[f64]) -> Result<Self> {
        let v = DVector::from_iterator(populations.len(), populations.iter().map(|&p| Complex64::from(p)));
        Self::new(space, CMatrix::from_diagonal(&v))
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    pub fn normalized(&self) -> Result<Self> {
        let tr = self.trace();
        if tr <= 0.0 || !tr.is_finite() {
            return Err(QcoolError::Numeric(format!("cannot normalise a state of trace {tr}")));
        }
        Ok(Self {
            space: self.space.clone(),
            matrix: self.matrix.unscale(tr),
        })
    }

    pub fn populations(&self) -> Vec<f64> {
        self.matrix.diagonal().iter().map(|z| z.re).collect()
    }

    /// Population of the all-zero basis state.
    pub fn vacuum_population(&self) -> f64 {
        self.matrix[(0, 0)].re
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.matrix)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * Complex64::from(0.5);
        nalgebra::SymmetricEigen::new(h)
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix {
            space: self.space.tensor(&other.space),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    /// `Tr(rho O)`.
    pub fn expect(&self, op: &CMatrix) -> Complex64 {
        (&self.matrix * op).trace()
    }
}

/// What an operator is expected to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorTag {
    Hermitian,
    Unitary,
    General,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub space: SpaceSpec,
    pub matrix: CMatrix,
    pub tag: OperatorTag,
}

impl OperatorMatrix {
    pub fn new(space: SpaceSpec, matrix: CMatrix, tag: OperatorTag) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(QcoolError::Dimension(format!(
                "{}x{} operator for a space of dimension {n}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { space, matrix, tag })
    }

    pub fn identity(space: &SpaceSpec) -> Self {
        let n = space.dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(n, n),
            tag: OperatorTag::Unitary,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
            tag: self.tag,
        }
    }

    /// Whether the tag is honoured within `tol`.
    pub fn tag_consistent(&self, tol: f64) -> bool {
        match self.tag {
            OperatorTag::Hermitian => hermiticity_error(&self.matrix) <= tol,
            OperatorTag::Unitary => unitarity_error(&self.matrix) <= tol,
            OperatorTag::General => true,
        }
    }

    pub fn compose(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.space != other.space {
            return Err(QcoolError::Dimension("operators act on different spaces".into()));
        }
        Ok(OperatorMatrix {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
            tag: OperatorTag::General,
        })
    }

    pub fn add(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.space != other.space {
            return Err(QcoolError::Dimension("operators act on different spaces".into()));
        }
        let tag = if self.tag == OperatorTag::Hermitian && other.tag == OperatorTag::Hermitian {
            OperatorTag::Hermitian
        } else {
            OperatorTag::General
        };
        Ok(OperatorMatrix {
            space: self.space.clone(),
            matrix: &self.matrix + &other.matrix,
            tag,
        })
    }

    pub fn scale(&self, c: f64) -> OperatorMatrix {
        OperatorMatrix {
            space: self.space.clone(),
            matrix: self.matrix.scale(c),
            tag: self.tag,
        }
    }

    /// `A + A^dagger`, Hermitian by construction.
    pub fn plus_adjoint(&self) -> OperatorMatrix {
        OperatorMatrix {
            space: self.space.clone(),
            matrix: &self.matrix + self.matrix.adjoint(),
            tag: OperatorTag::Hermitian,
        }
    }
}

/// Embed a local operator on subsystem `mode`, identity elsewhere.
pub fn embed(space: &SpaceSpec, mode: usize, local: &CMatrix) -> Result<CMatrix> {
    let sub = space.check_mode(mode)?;
    if local.nrows() != sub.dim() || local.ncols() != sub.dim() {
        return Err(QcoolError::Dimension(format!(
            "local operator is {}x{} but subsystem {mode} has dimension {}",
            local.nrows(),
            local.ncols(),
            sub.dim()
        )));
    }
    let before: usize = space.dims()[..mode].iter().product();
    let after: usize = space.dims()[mode + 1..].iter().product();
    let left = CMatrix::identity(before, before).kronecker(local);
    Ok(left.kronecker(&CMatrix::identity(after, after)))
}

/// Truncated lowering matrix on `dim` Fock levels.
pub fn local_annihilation(dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |i, j| {
        if j == i + 1 {
            Complex64::from((j as f64).sqrt())
        } else {
            Complex64::from(0.0)
        }
    })
}

/// `a` on oscillator `mode`.
pub fn annihilation(space: &SpaceSpec, mode: usize) -> Result<OperatorMatrix> {
    let sub = *space.check_mode(mode)?;
    let Subsystem::Oscillator { cutoff } = sub else {
        return Err(QcoolError::Type(format!("subsystem {mode} is a qudit, not an oscillator")));
    };
    let m = embed(space, mode, &local_annihilation(cutoff))?;
    OperatorMatrix::new(space.clone(), m, OperatorTag::General)
}

/// `a^dagger` on oscillator `mode`, the adjoint of the truncated `a`.
pub fn creation(space: &SpaceSpec, mode: usize) -> Result<OperatorMatrix> {
    Ok(annihilation(space, mode)?.adjoint())
}

/// `|to><from|` on qudit `mode`.
pub fn qudit_transition(space: &SpaceSpec, mode: usize, from: usize, to: usize) -> Result<OperatorMatrix> {
    let sub = *space.check_mode(mode)?;
    let Subsystem::Qudit { levels } = sub else {
        return Err(QcoolError::Type(format!("subsystem {mode} is an oscillator, not a qudit")));
    };
    if from >= levels || to >= levels {
        return Err(QcoolError::Index(format!(
            "transition {from}->{to} outside 0..{levels}"
        )));
    }
    let mut local = CMatrix::zeros(levels, levels);
    local[(to, from)] = Complex64::from(1.0);
    OperatorMatrix::new(space.clone(), embed(space, mode, &local)?, OperatorTag::General)
}

/// Raising ladder on any subsystem: `a^dagger` for oscillators,
/// `sum_k |k+1><k|` for qudits (truncated at the top level).
pub fn raising(space: &SpaceSpec, mode: usize) -> Result<OperatorMatrix> {
    match *space.check_mode(mode)? {
        Subsystem::Oscillator { .. } => creation(space, mode),
        Subsystem::Qudit { levels } => {
            let mut acc = CMatrix::zeros(space.dim(), space.dim());
            for k in 0..levels - 1 {
                acc += qudit_transition(space, mode, k, k + 1)?.matrix;
            }
            OperatorMatrix::new(space.clone(), acc, OperatorTag::General)
        }
    }
}

/// Diagonal operator whose entries are the total excitation of each basis state.
pub fn excitation_number(space: &SpaceSpec) -> OperatorMatrix {
    let n = space.dim();
    let diag = DVector::from_iterator(
        n,
        (0..n).map(|i| Complex64::from(space.excitation(i).expect("index in range") as f64)),
    );
    OperatorMatrix {
        space: space.clone(),
        matrix: CMatrix::from_diagonal(&diag),
        tag: OperatorTag::Hermitian,
    }
}

/// One excitation sector of a blocked operator.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    /// Flat basis indices spanning the sector, ascending.
    pub indices: Vec<usize>,
    pub matrix: CMatrix,
}

/// Operator stored per total-excitation sector.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockedOperator {
    pub space: SpaceSpec,
    pub blocks: BTreeMap<usize, Block>,
}

impl BlockedOperator {
    /// Reassemble a dense matrix; entries outside the stored sectors are zero.
    pub fn to_dense(&self) -> CMatrix {
        let n = self.space.dim();
        let mut out = CMatrix::zeros(n, n);
        for block in self.blocks.values() {
            for (a, &i) in block.indices.iter().enumerate() {
                for (b, &j) in block.indices.iter().enumerate() {
                    out[(i, j)] = block.matrix[(a, b)];
                }
            }
        }
        out
    }

    /// Apply `f` to each block matrix, keeping the sector layout.
    pub fn map_blocks(&self, f: impl Fn(&CMatrix) -> CMatrix) -> BlockedOperator {
        BlockedOperator {
            space: self.space.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|(e, b)| {
                    (
                        *e,
                        Block {
                            indices: b.indices.clone(),
                            matrix: f(&b.matrix),
                        },
                    )
                })
                .collect(),
        }
    }
}

/// Flat indices of every basis state, grouped by excitation, up to `e_max`.
pub fn excitation_sectors(space: &SpaceSpec, e_max: usize) -> BTreeMap<usize, Vec<usize>> {
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..space.dim() {
        let e = space.excitation(i).expect("index in range");
        if e <= e_max {
            out.entry(e).or_default().push(i);
        }
    }
    out
}

/// Split an excitation-conserving operator into sectors `E = 0..=e_max`.
pub fn block_decompose(op: &OperatorMatrix, e_max: usize) -> Result<BlockedOperator> {
    let space = &op.space;
    let exc: Vec<usize> = (0..space.dim())
        .map(|i| space.excitation(i))
        .collect::<Result<_>>()?;
    let mut max_off = 0.0f64;
    for ((i, j), z) in op.matrix.iter().enumerate().map(|(n, z)| ((n % space.dim(), n / space.dim()), z)) {
        if exc[i] != exc[j] {
            max_off = max_off.max(z.norm());
        }
    }
    if max_off > 1e-10 {
        return Err(QcoolError::ConservationViolation { max_off });
    }
    let blocks = excitation_sectors(space, e_max)
        .into_iter()
        .map(|(e, idx)| {
            let m = CMatrix::from_fn(idx.len(), idx.len(), |a, b| op.matrix[(idx[a], idx[b])]);
            (e, Block { indices: idx, matrix: m })
        })
        .collect();
    Ok(BlockedOperator {
        space: space.clone(),
        blocks,
    })
}

/// Reduced state on the subsystems in `keep` (kept in ascending order).
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(QcoolError::Argument("partial trace must keep at least one subsystem".into()));
    }
    let mut keep: Vec<usize> = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let space = &rho.space;
    let reduced = space.subspace(&keep)?;
    let traced: Vec<usize> = (0..space.len()).filter(|i| !keep.contains(i)).collect();
    let traced_space = if traced.is_empty() {
        None
    } else {
        Some(space.subspace(&traced)?)
    };
    let n_env = traced_space.as_ref().map_or(1, SpaceSpec::dim);

    let mut out = CMatrix::zeros(reduced.dim(), reduced.dim());
    let mut full = vec![0usize; space.len()];
    let join = |r: &[usize], e: &[usize], full: &mut Vec<usize>| {
        for (slot, &k) in keep.iter().enumerate() {
            full[k] = r[slot];
        }
        for (slot, &k) in traced.iter().enumerate() {
            full[k] = e[slot];
        }
    };
    for a in 0..reduced.dim() {
        let ra = reduced.levels(a)?;
        for b in 0..reduced.dim() {
            let rb = reduced.levels(b)?;
            let mut acc = Complex64::from(0.0);
            for env in 0..n_env {
                let le = match &traced_space {
                    Some(ts) => ts.levels(env)?,
                    None => Vec::new(),
                };
                join(&ra, &le, &mut full);
                let i = space.flat_index(&full)?;
                join(&rb, &le, &mut full);
                let j = space.flat_index(&full)?;
                acc += rho.matrix[(i, j)];
            }
            out[(a, b)] = acc;
        }
    }
    DensityMatrix::new(reduced, out)
}
