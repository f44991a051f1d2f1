//! Robustness of the inferred spectrum under probability noise.
//!
//! Perturbing a joint word distribution P → P + εΔP (ΔP zero-sum,
//! supported on P) moves the word Gram by
//!
//! ```text
//! ΔG[w,w′] = Σ_u √(P(wu) P(w′u))/2 · (ΔP(wu)/P(wu) + ΔP(w′u)/P(w′u))
//! ```
//!
//! to first order, and Weyl's inequality bounds every eigenvalue shift by
//! the spectral norm of the actual Gram difference ≈ ε‖ΔG‖₂. The module
//! verifies the expansion numerically (residual shrinking as ε²), checks
//! the eigenvalue bound, and measures how the end-to-end estimation error
//! scales with sample size.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::inference::{estimate_cq, InferenceError};
use crate::machine::Machine;
use crate::quantum::{self, spectral_norm_sym, QuantumError};
use crate::report::{csv_table, g12};
use crate::rng::substream_seed;
use crate::words::WordProbs;

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("perturbed probability of word {word} is {value}")]
    NegativeProbability { word: u64, value: f64 },
    #[error("ΔP sums to {0}, not 0")]
    NotZeroSum(f64),
    #[error("ΔP assigns weight to word {0} outside the support of P")]
    SupportViolation(u64),
    #[error("log-log fit needs at least 3 points, got {0}")]
    GridTooSmall(usize),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
}

/// Zero-sum tolerance for ΔP.
pub const ZERO_SUM_TOL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// perturbation specs

/// A validated perturbation P → P + εΔP.
#[derive(Debug, Clone)]
pub struct PerturbationSpec {
    base: WordProbs,
    delta: BTreeMap<u64, f64>,
    epsilon: f64,
}

impl PerturbationSpec {
    /// Validates support (ΔP ⊆ supp P), the zero-sum constraint, and
    /// nonnegativity of the perturbed distribution.
    pub fn new(
        base: WordProbs,
        delta: BTreeMap<u64, f64>,
        epsilon: f64,
    ) -> Result<Self, PerturbError> {
        let sum: f64 = delta.values().sum();
        if sum.abs() > ZERO_SUM_TOL {
            return Err(PerturbError::NotZeroSum(sum));
        }
        for (&word, &d) in &delta {
            if d != 0.0 && base.get(word) <= 0.0 {
                return Err(PerturbError::SupportViolation(word));
            }
            let perturbed = base.get(word) + epsilon * d;
            if perturbed < 0.0 {
                return Err(PerturbError::NegativeProbability {
                    word,
                    value: perturbed,
                });
            }
        }
        Ok(Self {
            base,
            delta,
            epsilon,
        })
    }

    pub fn base(&self) -> &WordProbs {
        &self.base
    }

    pub fn delta(&self) -> &BTreeMap<u64, f64> {
        &self.delta
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// P + εΔP over the support of P (total mass preserved).
    pub fn apply(&self) -> WordProbs {
        let entries = self
            .base
            .iter()
            .map(|(w, p)| {
                (
                    w,
                    p + self.epsilon * self.delta.get(&w).copied().unwrap_or(0.0),
                )
            })
            .collect();
        WordProbs::new(self.base.word_len(), self.base.alphabet().clone(), entries)
    }
}

/// Draws ΔP as i.i.d. Uniform(−1, 1) values on the support of P, projected
/// to zero sum and sup-normalized to max |ΔP| = 1.
pub fn random_zero_sum_delta(base: &WordProbs, rng: &mut impl Rng) -> BTreeMap<u64, f64> {
    let words: Vec<u64> = base
        .iter()
        .filter(|&(_, p)| p > 0.0)
        .map(|(w, _)| w)
        .collect();
    let mut values: Vec<f64> = words.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in &mut values {
        *v -= mean;
    }
    let sup = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if sup < 1e-300 {
        // Degenerate draw (e.g. single-word support): the only zero-sum
        // perturbation is 0.
        return words.into_iter().map(|w| (w, 0.0)).collect();
    }
    // Re-project after scaling so rounding cannot break the zero sum.
    for v in &mut values {
        *v /= sup;
    }
    let resid = values.iter().sum::<f64>() / values.len() as f64;
    for v in &mut values {
        *v -= resid;
    }
    words.into_iter().zip(values).collect()
}

// ---------------------------------------------------------------------------
// first-order Gram response

/// Raw (unnormalized) word Gram of a joint over 2L-words, with its prefix
/// labels. Zero-probability entries keep their row so perturbed spectra
/// stay dimension-aligned.
pub fn word_gram_raw(
    joint: &WordProbs,
    l: usize,
) -> Result<(Vec<u64>, DMatrix<f64>), InferenceError> {
    if joint.word_len() != 2 * l {
        return Err(InferenceError::LengthMismatch(joint.word_len(), 2 * l));
    }
    let suffix_space = joint.alphabet().word_space(l)?;
    let mut prefixes: BTreeMap<u64, Vec<(u64, f64)>> = BTreeMap::new();
    for (code, p) in joint.iter() {
        prefixes
            .entry(code / suffix_space)
            .or_default()
            .push((code % suffix_space, p));
    }
    let labels: Vec<u64> = prefixes.keys().copied().collect();
    let lists: Vec<&Vec<(u64, f64)>> = prefixes.values().collect();
    let dim = labels.len();
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
                        acc += (pa.max(0.0) * pb.max(0.0)).sqrt();
                        a.next();
                        b.next();
                    }
                }
            }
            mat[(i, j)] = acc;
            mat[(j, i)] = acc;
        }
    }
    Ok((labels, mat))
}

/// First-order Gram response ΔG to a word-probability perturbation ΔP of a
/// joint over 2L-words. ΔP must vanish outside the support of P.
pub fn first_order_delta_gram(
    joint: &WordProbs,
    delta: &BTreeMap<u64, f64>,
    l: usize,
) -> Result<(Vec<u64>, DMatrix<f64>), PerturbError> {
    if joint.word_len() != 2 * l {
        return Err(PerturbError::Inference(InferenceError::LengthMismatch(
            joint.word_len(),
            2 * l,
        )));
    }
    for (&word, &d) in delta {
        if d != 0.0 && joint.get(word) <= 0.0 {
            return Err(PerturbError::SupportViolation(word));
        }
    }
    let suffix_space = joint
        .alphabet()
        .word_space(l)
        .map_err(InferenceError::from)?;

    // Per-prefix lists of (suffix, P, ΔP/P).
    let mut prefixes: BTreeMap<u64, Vec<(u64, f64, f64)>> = BTreeMap::new();
    for (code, p) in joint.iter() {
        let rel = if p > 0.0 {
            delta.get(&code).copied().unwrap_or(0.0) / p
        } else {
            0.0
        };
        prefixes
            .entry(code / suffix_space)
            .or_default()
            .push((code % suffix_space, p, rel));
    }
    let labels: Vec<u64> = prefixes.keys().copied().collect();
    let lists: Vec<&Vec<(u64, f64, f64)>> = prefixes.values().collect();
    let dim = labels.len();
    let mut mat = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let mut acc = 0.0;
            let (mut a, mut b) = (lists[i].iter().peekable(), lists[j].iter().peekable());
            while let (Some(&&(ua, pa, ra)), Some(&&(ub, pb, rb))) = (a.peek(), b.peek()) {
                match ua.cmp(&ub) {
                    std::cmp::Ordering::Less => {
                        a.next();
                    }
                    std::cmp::Ordering::Greater => {
                        b.next();
                    }
                    std::cmp::Ordering::Equal => {
                        acc += (pa * pb).sqrt() / 2.0 * (ra + rb);
                        a.next();
                        b.next();
                    }
                }
            }
            mat[(i, j)] = acc;
            mat[(j, i)] = acc;
        }
    }
    Ok((labels, mat))
}

// ---------------------------------------------------------------------------
// Weyl bound and expansion checks

/// One ε row of a Weyl check.
#[derive(Debug, Clone)]
pub struct WeylRow {
    pub epsilon: f64,
    /// max_i |λ_i(G^ε) − λ_i(G)| over descending spectra.
    pub max_eig_shift: f64,
    /// First-order bound ε·‖ΔG‖₂.
    pub weyl_bound: f64,
    /// |S(G^ε) − S(G)| in bits.
    pub entropy_shift: f64,
    /// Shift within 1.1× the bound (10% headroom for the ε² term).
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct WeylReport {
    pub rows: Vec<WeylRow>,
    pub delta_g_norm: f64,
    pub base_entropy: f64,
}

impl WeylReport {
    /// CSV rows `epsilon,max_eig_shift,weyl_bound,entropy_shift,pass`.
    pub fn to_csv(&self) -> String {
        csv_table(
            "epsilon,max_eig_shift,weyl_bound,entropy_shift,pass",
            self.rows.iter().map(|r| {
                vec![
                    g12(r.epsilon),
                    g12(r.max_eig_shift),
                    g12(r.weyl_bound),
                    g12(r.entropy_shift),
                    if r.pass { "1" } else { "0" }.to_string(),
                ]
            }),
        )
    }
}

fn descending_eigenvalues(mat: &DMatrix<f64>) -> Vec<f64> {
    let sym = (mat + mat.transpose()).scale(0.5);
    let mut eigs: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    eigs.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    eigs
}

fn gram_entropy(mat: &DMatrix<f64>) -> Result<f64, QuantumError> {
    let normalized = mat / mat.trace();
    Ok(quantum::spectral_entropy(&normalized)?.entropy_bits)
}

/// Compares eigenvalue shifts of the perturbed word Gram against the
/// first-order Weyl bound across an ε grid.
pub fn weyl_check(
    base: &WordProbs,
    delta: &BTreeMap<u64, f64>,
    epsilons: &[f64],
    l: usize,
) -> Result<WeylReport, PerturbError> {
    let (_, g0) = word_gram_raw(base, l)?;
    let eigs0 = descending_eigenvalues(&g0);
    let base_entropy = gram_entropy(&g0)?;
    let (_, dg) = first_order_delta_gram(base, delta, l)?;
    let delta_g_norm = spectral_norm_sym(&dg);

    let mut rows = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let perturbed = PerturbationSpec::new(base.clone(), delta.clone(), epsilon)?.apply();
        let (_, g_eps) = word_gram_raw(&perturbed, l)?;
        let eigs = descending_eigenvalues(&g_eps);
        let max_eig_shift = eigs0
            .iter()
            .zip(&eigs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let weyl_bound = epsilon * delta_g_norm;
        let entropy_shift = (gram_entropy(&g_eps)? - base_entropy).abs();
        rows.push(WeylRow {
            epsilon,
            max_eig_shift,
            weyl_bound,
            entropy_shift,
            pass: max_eig_shift <= 1.1 * weyl_bound,
        });
    }
    Ok(WeylReport {
        rows,
        delta_g_norm,
        base_entropy,
    })
}

/// Spectral-norm residual ‖G(P + εΔP) − G(P) − ε·ΔG‖₂ of the first-order
/// expansion at one ε.
pub fn expansion_residual(
    base: &WordProbs,
    delta: &BTreeMap<u64, f64>,
    epsilon: f64,
    l: usize,
) -> Result<f64, PerturbError> {
    let (_, g0) = word_gram_raw(base, l)?;
    let (_, dg) = first_order_delta_gram(base, delta, l)?;
    let perturbed = PerturbationSpec::new(base.clone(), delta.clone(), epsilon)?.apply();
    let (_, g_eps) = word_gram_raw(&perturbed, l)?;
    let resid = &g_eps - &g0 - dg.scale(epsilon);
    Ok(spectral_norm_sym(&resid))
}

// ---------------------------------------------------------------------------
// noise scaling

/// Mean estimation error for one (L, N) cell.
#[derive(Debug, Clone)]
pub struct ScalingCell {
    pub l: usize,
    pub n: u64,
    pub trials: usize,
    pub mean_abs_error: f64,
    /// Standard error of the mean over trials.
    pub std_error: f64,
}

/// Log-log slope of mean error vs N at fixed L.
#[derive(Debug, Clone)]
pub struct ScalingFit {
    pub l: usize,
    pub slope: f64,
    pub slope_se: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub cells: Vec<ScalingCell>,
    pub fits: Vec<ScalingFit>,
}

impl ScalingReport {
    /// CSV rows `L,N,trials,mean_abs_error,std_error,slope,slope_se`; the
    /// per-L fit repeats on each of its rows.
    pub fn to_csv(&self) -> String {
        csv_table(
            "L,N,trials,mean_abs_error,std_error,slope,slope_se",
            self.cells.iter().map(|c| {
                let fit = self
                    .fits
                    .iter()
                    .find(|f| f.l == c.l)
                    .expect("every cell has a fit");
                vec![
                    c.l.to_string(),
                    c.n.to_string(),
                    c.trials.to_string(),
                    g12(c.mean_abs_error),
                    g12(c.std_error),
                    g12(fit.slope),
                    g12(fit.slope_se),
                ]
            }),
        )
    }
}

/// Ordinary least squares of ln(y) on ln(x): (slope, standard error).
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64), PerturbError> {
    let k = xs.len();
    if k < 3 || ys.len() != k {
        return Err(PerturbError::GridTooSmall(k.min(ys.len())));
    }
    let lx: Vec<f64> = xs.iter().map(|&x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k as f64;
    let my = ly.iter().sum::<f64>() / k as f64;
    let sxx: f64 = lx.iter().map(|&x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_resid: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(&x, &y)| (y - intercept - slope * x).powi(2))
        .sum();
    let se = (ss_resid / (k as f64 - 2.0) / sxx).sqrt();
    Ok((slope, se))
}

/// Measures |C̃_q − C_q| over an (L, N, trial) grid and fits the log-log
/// error-vs-N slope per L. Substream seeding matches [`crate::inference::sweep`].
pub fn noise_scaling_experiment(
    machine: &Machine,
    l_values: &[usize],
    n_values: &[u64],
    trials: usize,
    base_seed: u64,
) -> Result<ScalingReport, PerturbError> {
    let cq_exact = quantum::quantum_memory(machine)?.entropy_bits;

    let grid: Vec<(usize, usize, usize, u64)> = l_values
        .iter()
        .enumerate()
        .flat_map(|(li, &l)| {
            n_values
                .iter()
                .enumerate()
                .map(move |(ni, &n)| (li, l, ni, n))
        })
        .collect();

    let cells: Result<Vec<ScalingCell>, PerturbError> = grid
        .into_par_iter()
        .map(|(li, l, ni, n)| {
            let mut errors = Vec::with_capacity(trials);
            for trial in 0..trials {
                let seed = substream_seed(base_seed, &[li as u64, ni as u64, trial as u64]);
                let seq = machine.sample_sequence(n as usize, seed);
                let model = estimate_cq(&seq, l)?;
                errors.push((model.cq() - cq_exact).abs());
            }
            let mean = errors.iter().sum::<f64>() / trials as f64;
            let var = if trials > 1 {
                errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0)
            } else {
                0.0
            };
            Ok(ScalingCell {
                l,
                n,
                trials,
                mean_abs_error: mean,
                std_error: (var / trials as f64).sqrt(),
            })
        })
        .collect();
    let cells = cells?;

    let mut fits = Vec::with_capacity(l_values.len());
    for &l in l_values {
        let xs: Vec<f64> = cells
            .iter()
            .filter(|c| c.l == l)
            .map(|c| c.n as f64)
            .collect();
        let ys: Vec<f64> = cells
            .iter()
            .filter(|c| c.l == l)
            .map(|c| c.mean_abs_error.max(1e-300))
            .collect();
        let (slope, slope_se) = log_log_slope(&xs, &ys)?;
        fits.push(ScalingFit { l, slope, slope_se });
    }
    Ok(ScalingReport { cells, fits })
}

// ---------------------------------------------------------------------------
