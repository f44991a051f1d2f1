//! Blind quantum-memory inference from symbol data.
//!
//! Observed length-L words act as surrogate memory states. Their pairwise
//! overlaps are Bhattacharyya sums over length-L futures,
//! ⟨ς_w|ς_w′⟩ = Σ_u √(P(u|w) P(u|w′)), which is exact once L reaches the
//! Markov order of the process (the memory state after L more symbols is
//! determined by u alone). The pipeline therefore:
//!
//! 1. counts (L+1)-words and forms next-symbol conditionals,
//! 2. chains conditionals over a horizon of exactly L future symbols,
//!    always conditioning on the most recent L symbols (including the
//!    symbols generated along the way),
//! 3. assembles the word Gram G[w,w′] = Σ_u √(P̃(wu) P̃(w′u)), renormalized
//!    to unit trace, and
//! 4. reads C̃_q and D̃_q off its spectrum.
//!
//! Futures that run through never-observed histories contribute nothing;
//! their lost probability mass is tallied and reported rather than
//! redistributed.

use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

use crate::machine::{Machine, SymbolSequence};
use crate::quantum::{self, GramMatrix, QuantumError, SpectralReport};
use crate::report::{csv_table, g12};
use crate::rng::substream_seed;
use crate::words::{
    conditional_next, count_words, effective_markov_order, l_max_guideline, ConditionalTable,
    WordProbs, WordsError,
};

/// Gram matrices are kept dense; |A|^L above this is refused.
pub const DENSE_DIM_CAP: u64 = 4096;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("word length {0} does not match expected length {1}")]
    LengthMismatch(usize, usize),
    #[error("no surviving probability mass in the inferred joint")]
    EmptySupport,
    #[error("|A|^L = {0} exceeds the dense-dimension cap {1}")]
    DimensionTooLarge(u64, u64),
    #[error("sequence of {n} symbols cannot support L = {l} (need N > 2L)")]
    SequenceTooShort { n: usize, l: usize },
    #[error("L must be at least 1")]
    ZeroLength,
    #[error(transparent)]
    Alphabet(#[from] crate::alphabet::AlphabetError),
    #[error(transparent)]
    Words(#[from] WordsError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Machine(#[from] crate::machine::MachineError),
}

// ---------------------------------------------------------------------------
// joint construction

/// Inferred joint over (L+horizon)-words plus the mass lost to unobserved
/// histories.
#[derive(Debug, Clone)]
pub struct InferredJoint {
    pub probs: WordProbs,
    pub lost_mass: f64,
}

/// Chains next-symbol conditionals from each L-word over `horizon` future
/// steps: P̃(w u) = P̃(w)·Π_i P̃(uᵢ | last L symbols before uᵢ).
///
/// A chain that steps onto a history absent from `cond` dies there and its
/// accumulated probability is added to `lost_mass`.
pub fn inferred_joint(
    cond: &ConditionalTable,
    marg: &WordProbs,
    horizon: usize,
) -> Result<InferredJoint, InferenceError> {
    let l = marg.word_len();
    if cond.history_len() != l {
        return Err(InferenceError::LengthMismatch(cond.history_len(), l));
    }
    let a = marg.alphabet().len() as u64;
    let ctx_space = marg.alphabet().word_space(l)?;
    marg.alphabet().word_space(l + horizon)?;
    let horizon_space = marg.alphabet().word_space(horizon)?;

    let mut entries: BTreeMap<u64, f64> = BTreeMap::new();
    let mut lost = 0.0;
    // Depth-first chain: (steps taken, current context, suffix code, mass).
    let mut stack: Vec<(usize, u64, u64, f64)> = Vec::new();
    for (w, pw) in marg.iter() {
        if pw <= 0.0 {
            continue;
        }
        let base = w * horizon_space;
        stack.push((0, w, 0, pw));
        while let Some((depth, ctx, suffix, mass)) = stack.pop() {
            if depth == horizon {
                *entries.entry(base + suffix).or_insert(0.0) += mass;
                continue;
            }
            match cond.lookup(ctx) {
                None => lost += mass,
                Some(entry) => {
                    for (y, &p) in entry.probs.iter().enumerate() {
                        if p > 0.0 {
                            let next_ctx = (ctx * a + y as u64) % ctx_space;
                            stack.push((depth + 1, next_ctx, suffix * a + y as u64, mass * p));
                        }
                    }
                }
            }
        }
    }

    Ok(InferredJoint {
        probs: WordProbs::new(l + horizon, marg.alphabet().clone(), entries),
        lost_mass: lost,
    })
}

/// Word-level Gram matrix from a joint over 2L-words: rows/columns indexed
/// by the observed L-word prefixes, G[w,w′] = Σ_u √(P(wu) P(w′u)),
/// renormalized to unit trace.
#[derive(Debug, Clone)]
pub struct InferredGram {
    pub gram: GramMatrix,
    pub word_codes: Vec<u64>,
    /// Raw trace before renormalization (= surviving joint mass).
    pub raw_trace: f64,
}

pub fn inferred_gram(joint: &WordProbs, l: usize) -> Result<InferredGram, InferenceError> {
    if joint.word_len() != 2 * l {
        return Err(InferenceError::LengthMismatch(joint.word_len(), 2 * l));
    }
    let suffix_space = joint.alphabet().word_space(l)?;

    // Per-prefix suffix lists; BTreeMap iteration keeps both sorted.
    let mut prefixes: BTreeMap<u64, Vec<(u64, f64)>> = BTreeMap::new();
    for (code, p) in joint.iter() {
        if p > 0.0 {
            prefixes
                .entry(code / suffix_space)
                .or_default()
                .push((code % suffix_space, p));
        }
    }
    if prefixes.is_empty() {
        return Err(InferenceError::EmptySupport);
    }

    let word_codes: Vec<u64> = prefixes.keys().copied().collect();
    let lists: Vec<&Vec<(u64, f64)>> = prefixes.values().collect();
    let dim = word_codes.len();
    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let mut acc = 0.0;
            let (mut a, mut b) = (lists[i].iter().peekable(), lists[j].iter().peekable());
            while let (Some(&&(ua, pa)), Some(&&(ub, pb))) = (a.peek(), b.peek()) {
                match ua.cmp(&ub) {
                    std::cmp::Ordering::Less => {
                        a.next();
                    }
                    std::cmp::Ordering::Greater => {
                        b.next();
                    }
                    std::cmp::Ordering::Equal => {
                        acc += (pa * pb).sqrt();
                        a.next();
                        b.next();
                    }
                }
            }
            mat[(i, j)] = acc;
            mat[(j, i)] = acc;
        }
    }

    let raw_trace = mat.trace();
    if raw_trace <= 0.0 || raw_trace.is_nan() {
        return Err(InferenceError::EmptySupport);
    }
    mat /= raw_trace;

    let labels = word_codes
        .iter()
        .map(|&w| joint.alphabet().word_string(w, l))
        .collect();
    Ok(InferredGram {
        gram: GramMatrix::new(labels, mat)?,
        word_codes,
        raw_trace,
    })
}

// ---------------------------------------------------------------------------
// end-to-end estimation

/// Result of blind quantum-memory estimation at a fixed word length.
#[derive(Debug, Clone)]
pub struct InferredModel {
    pub l: usize,
    /// Source sequence length; None when exact probabilities were supplied.
    pub n: Option<u64>,
    pub word_codes: Vec<u64>,
    pub gram: GramMatrix,
    pub spectral: SpectralReport,
    /// Probability mass lost to unobserved histories while chaining.
    pub lost_mass: f64,
    /// Raw Gram trace divided out during renormalization; → 1 as N → ∞.
    pub trace_renorm: f64,
    /// Data-driven max word length, when the sequence admits one.
    pub guideline: Option<usize>,
    /// Set when L exceeds the guideline (or no guideline exists).
    pub undersampled: bool,
}

impl InferredModel {
    /// Estimated quantum memory C̃_q in bits.
    pub fn cq(&self) -> f64 {
        self.spectral.entropy_bits
    }

    /// Estimated topological memory D̃_q in qubits.
    pub fn dq(&self) -> f64 {
        self.spectral.d_q
    }

    /// Surrogate-state count (Gram dimension).
    pub fn dim(&self) -> usize {
        self.gram.dim()
    }

    /// Normalized overlap between two surrogate states:
    /// G[i,j]/√(G[i,i]·G[j,j]).
    pub fn overlap(&self, i: usize, j: usize) -> f64 {
        let g = self.gram.matrix();
        g[(i, j)] / (g[(i, i)] * g[(j, j)]).sqrt()
    }
}

/// Runs the full pipeline on prepared conditionals and marginal: joint over
/// 2L-words (horizon exactly L), word Gram, spectrum.
pub fn estimate_from_distributions(
    cond: &ConditionalTable,
    marg: &WordProbs,
    l: usize,
    n: Option<u64>,
) -> Result<InferredModel, InferenceError> {
    if l == 0 {
        return Err(InferenceError::ZeroLength);
    }
    let space = marg.alphabet().word_space(l)?;
    if space > DENSE_DIM_CAP {
        return Err(InferenceError::DimensionTooLarge(space, DENSE_DIM_CAP));
    }
    let joint = inferred_joint(cond, marg, l)?;
    let ig = inferred_gram(&joint.probs, l)?;
    let spectral = ig.gram.spectrum()?;

    let guideline = n.and_then(|n| l_max_guideline(n as usize, marg.alphabet().len()).ok());
    let undersampled = match (n, guideline) {
        (None, _) => false,
        (Some(_), Some(g)) => l > g,
        (Some(_), None) => true,
    };
    Ok(InferredModel {
        l,
        n,
        word_codes: ig.word_codes,
        gram: ig.gram,
        spectral,
        lost_mass: joint.lost_mass,
        trace_renorm: ig.raw_trace,
        guideline,
        undersampled,
    })
}

/// Blind estimate of quantum memory from a symbol sequence at word length
/// `l`: count → condition → chain → Gram → spectrum.
pub fn estimate_cq(seq: &SymbolSequence, l: usize) -> Result<InferredModel, InferenceError> {
    if l == 0 {
        return Err(InferenceError::ZeroLength);
    }
    if seq.len() <= 2 * l {
        return Err(InferenceError::SequenceTooShort { n: seq.len(), l });
    }
    let cond = conditional_next(&count_words(seq, l + 1)?)?;
    let marg = count_words(seq, l)?.to_probs();
    estimate_from_distributions(&cond, &marg, l, Some(seq.len() as u64))
}

/// Runs the inference pipeline on a machine's exact word probabilities —
/// the self-merging setting where C̃_q reproduces C_q once L reaches the
/// Markov order.
pub fn estimate_cq_exact(machine: &Machine, l: usize) -> Result<InferredModel, InferenceError> {
    if l == 0 {
        return Err(InferenceError::ZeroLength);
    }
    let cond = ConditionalTable::from_word_probs(&machine.word_distribution(l + 1)?)?;
    let marg = machine.word_distribution(l)?;
    estimate_from_distributions(&cond, &marg, l, None)
}

// ---------------------------------------------------------------------------
// sweeps

/// Grid specification for an inference sweep.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub l_values: Vec<usize>,
    pub n_values: Vec<u64>,
    pub trials: usize,
    pub base_seed: u64,
    /// Threshold for the per-cell effective-Markov-order readout.
    pub delta: f64,
    pub r_max: usize,
    /// Free-form parameter label copied into every row.
    pub params_label: String,
}

/// One (L, N, trial) cell of a sweep.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub process: String,
    pub params: String,
    pub l: usize,
    pub n: u64,
    pub trial: usize,
    pub seed: u64,
    pub cq_estimate: f64,
    pub cq_exact: f64,
    pub cmu: f64,
    pub dq: f64,
    pub reff: Option<usize>,
    pub trace_renorm: f64,
    pub excluded_mass: f64,
    pub undersampled: bool,
}

/// Samples and estimates every (L, N, trial) cell. Each cell draws its own
/// RNG substream keyed by grid indices, so results are independent of cell
/// execution order and thread count; rows come back in grid order.
pub fn sweep(machine: &Machine, config: &SweepConfig) -> Result<Vec<SweepRow>, InferenceError> {
    let exact = quantum::quantum_memory(machine)?;
    let cmu = quantum::statistical_complexity(machine);

    let mut cells = Vec::new();
    for (li, &l) in config.l_values.iter().enumerate() {
        for (ni, &n) in config.n_values.iter().enumerate() {
            for trial in 0..config.trials {
                cells.push((li, l, ni, n, trial));
            }
        }
    }

    cells
        .into_par_iter()
        .map(|(li, l, ni, n, trial)| {
            let seed = substream_seed(config.base_seed, &[li as u64, ni as u64, trial as u64]);
            let seq = machine.sample_sequence(n as usize, seed);
            let model = estimate_cq(&seq, l)?;
            // Sparse cells may not support the order statistic; that is a
            // property of the cell, not a sweep failure.
            let reff = effective_markov_order(&seq, config.delta, config.r_max)
                .ok()
                .and_then(|p| p.r_eff);
            Ok(SweepRow {
                process: machine.name().to_string(),
                params: config.params_label.clone(),
                l,
                n,
                trial,
                seed,
                cq_estimate: model.cq(),
                cq_exact: exact.entropy_bits,
                cmu,
                dq: model.dq(),
                reff,
                trace_renorm: model.trace_renorm,
                excluded_mass: model.lost_mass,
                undersampled: model.undersampled,
            })
        })
        .collect()
}

/// Pinned sweep CSV schema.
pub const SWEEP_HEADER: &str = "process,params,L,N,trial,seed,cq_estimate,cq_exact,cmu,dq,reff,trace_renorm,excluded_mass,undersampled_flag";

/// Renders sweep rows under [`SWEEP_HEADER`].
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    csv_table(
        SWEEP_HEADER,
        rows.iter().map(|r| {
            vec![
                r.process.clone(),
                r.params.clone(),
                r.l.to_string(),
                r.n.to_string(),
                r.trial.to_string(),
                r.seed.to_string(),
                g12(r.cq_estimate),
                g12(r.cq_exact),
                g12(r.cmu),
                g12(r.dq),
                r.reff.map(|v| v.to_string()).unwrap_or_default(),
                g12(r.trace_renorm),
                g12(r.excluded_mass),
                if r.undersampled { "1" } else { "0" }.to_string(),
            ]
        }),
    )
}

// ---------------------------------------------------------------------------
