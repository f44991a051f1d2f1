//! Quantum memory of a machine: state overlaps, Gram spectra, and the
//! phaseless unitary model.
//!
//! The quantum memory states |σ_j⟩ of a unifilar machine satisfy the
//! self-consistent overlap recursion
//!
//! ```text
//! ⟨σ_j|σ_k⟩ = Σ_x √(P(x|j) P(x|k)) ⟨σ_λ(x,j)|σ_λ(x,k)⟩
//! ```
//!
//! whose fixed point (reached from the all-ones matrix) equals the
//! Bhattacharyya overlap of the states' future distributions. The memory
//! cost C_q is the von Neumann entropy of ρ = Σ_j π_j |σ_j⟩⟨σ_j|, computed
//! from the Gram matrix G = √(π_j π_k)·⟨σ_j|σ_k⟩, which shares ρ's nonzero
//! spectrum. All phases are fixed to zero: amplitudes are real square
//! roots.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::machine::Machine;
use crate::report::{csv_table, g12};

/// Sup-norm tolerance for the overlap fixed point.
pub const OVERLAP_TOL: f64 = 1e-12;
/// Iteration cap for the overlap fixed point.
pub const OVERLAP_MAX_ITERS: usize = 1_000_000;
/// Eigenvalues below this are treated as exact zeros before renormalizing.
pub const EIG_CLAMP: f64 = 1e-10;
/// Rank is counted above this tolerance.
pub const RANK_TOL: f64 = 1e-8;
/// Symmetric matrices may deviate from symmetry by at most this much.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Gram traces must be 1 within this tolerance.
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue accepted (and clamped) before declaring a
/// matrix non-PSD.
pub const PSD_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("overlap fixed point did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("labels/weights dimension mismatch: {0} vs {1}")]
    LabelMismatch(usize, usize),
    #[error("weights are not a distribution: {0}")]
    BadWeights(String),
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix trace is {0}, not 1")]
    TraceNotOne(f64),
    #[error("matrix is not positive semidefinite (eigenvalue {0:e})")]
    NotPsd(f64),
}

// ---------------------------------------------------------------------------
// overlaps

/// Pairwise overlaps ⟨σ_j|σ_k⟩ of the quantum memory states.
#[derive(Debug, Clone)]
pub struct OverlapMatrix {
    labels: Vec<String>,
    mat: DMatrix<f64>,
    /// Sup-norm recursion residual at the accepted fixed point.
    residual: f64,
    iterations: usize,
}

impl OverlapMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.mat[(j, k)]
    }

    /// CSV with a label header row and one labelled row per state.
    pub fn to_csv(&self) -> String {
        labelled_matrix_csv(&self.labels, &self.mat)
    }

    pub fn to_json(&self) -> serde_json::Value {
        labelled_matrix_json(&self.labels, &self.mat)
    }
}

/// Solves the overlap recursion to the default tolerance.
pub fn memory_overlaps(machine: &Machine) -> Result<OverlapMatrix, QuantumError> {
    memory_overlaps_with(machine, OVERLAP_TOL, OVERLAP_MAX_ITERS)
}

/// Solves the overlap recursion by fixed-point iteration from the all-ones
/// matrix. After m sweeps the matrix equals the Bhattacharyya overlap of
/// depth-m futures, so iterates decrease monotonically to the fixed point.
pub fn memory_overlaps_with(
    machine: &Machine,
    tol: f64,
    max_iters: usize,
) -> Result<OverlapMatrix, QuantumError> {
    let n = machine.n_states();
    let a = machine.alphabet().len();
    let mut cur = DMatrix::from_element(n, n, 1.0);
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    while iterations < max_iters {
        let mut next = DMatrix::identity(n, n);
        for j in 0..n {
            for k in (j + 1)..n {
                let mut acc = 0.0;
                for x in 0..a {
                    let pj = machine.emission_prob(j, x as u8);
                    let pk = machine.emission_prob(k, x as u8);
                    if pj > 0.0 && pk > 0.0 {
                        let tj = machine.next_state(j, x as u8).expect("edge exists");
                        let tk = machine.next_state(k, x as u8).expect("edge exists");
                        acc += (pj * pk).sqrt() * cur[(tj, tk)];
                    }
                }
                next[(j, k)] = acc;
                next[(k, j)] = acc;
            }
        }
        residual = sup_diff(&next, &cur);
        cur = next;
        iterations += 1;
        if residual <= tol {
            return Ok(OverlapMatrix {
                labels: machine.state_names().to_vec(),
                mat: cur,
                residual,
                iterations,
            });
        }
    }
    let _ = residual;
    Err(QuantumError::NoConvergence(max_iters))
}

fn sup_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Gram matrices and spectra

/// Weighted Gram matrix G[j,k] = √(w_j w_k)·⟨σ_j|σ_k⟩; unit trace,
/// symmetric, PSD. Shares its nonzero spectrum with the density operator
/// Σ_j w_j |σ_j⟩⟨σ_j| of the purification it came from.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    labels: Vec<String>,
    mat: DMatrix<f64>,
}

impl GramMatrix {
    /// Validates symmetry and unit trace.
    pub fn new(labels: Vec<String>, mat: DMatrix<f64>) -> Result<Self, QuantumError> {
        if labels.len() != mat.nrows() || !mat.is_square() {
            return Err(QuantumError::LabelMismatch(labels.len(), mat.nrows()));
        }
        let asym = max_asymmetry(&mat);
        if asym > SYMMETRY_TOL {
            return Err(QuantumError::NotSymmetric(asym));
        }
        let trace = mat.trace();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(QuantumError::TraceNotOne(trace));
        }
        Ok(Self { labels, mat })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.mat[(j, k)]
    }

    /// Spectral summary under the default clamp and rank tolerances.
    pub fn spectrum(&self) -> Result<SpectralReport, QuantumError> {
        spectral_entropy(&self.mat)
    }

    pub fn to_csv(&self) -> String {
        labelled_matrix_csv(&self.labels, &self.mat)
    }

    pub fn to_json(&self) -> serde_json::Value {
        labelled_matrix_json(&self.labels, &self.mat)
    }
}

/// Builds G from overlaps and a weight distribution over the same states.
pub fn gram_from_overlaps(
    overlaps: &OverlapMatrix,
    weights: &[f64],
) -> Result<GramMatrix, QuantumError> {
    let n = overlaps.labels.len();
    if weights.len() != n {
        return Err(QuantumError::LabelMismatch(n, weights.len()));
    }
    if let Some(&w) = weights.iter().find(|&&w| w < 0.0 || w.is_nan()) {
        return Err(QuantumError::BadWeights(format!("negative weight {w}")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(QuantumError::BadWeights(format!("weights sum to {sum}")));
    }
    let roots: Vec<f64> = weights.iter().map(|&w| w.sqrt()).collect();
    let mat = DMatrix::from_fn(n, n, |j, k| roots[j] * roots[k] * overlaps.mat[(j, k)]);
    GramMatrix::new(overlaps.labels.clone(), mat)
}

/// Eigenvalue summary of a unit-trace symmetric matrix.
#[derive(Debug, Clone, serde::Serialize)]
pub struct SpectralReport {
    /// Descending, clamped, renormalized to sum 1.
    pub eigenvalues: Vec<f64>,
    /// Von Neumann entropy −Σ λ log₂ λ in bits.
    pub entropy_bits: f64,
    /// Number of eigenvalues above the rank tolerance.
    pub rank: usize,
    /// Topological memory log₂(rank) in qubits.
    pub d_q: f64,
    pub clamp: f64,
    pub rank_tol: f64,
}

impl SpectralReport {
    /// CSV rows `index,eigenvalue` in descending order.
    pub fn to_csv(&self) -> String {
        csv_table(
            "index,eigenvalue",
            self.eigenvalues
                .iter()
                .enumerate()
                .map(|(i, &v)| vec![i.to_string(), g12(v)]),
        )
    }
}

/// Spectral entropy of a unit-trace symmetric PSD matrix with the default
/// clamp (1e-10) and rank tolerance (1e-8).
pub fn spectral_entropy(mat: &DMatrix<f64>) -> Result<SpectralReport, QuantumError> {
    spectral_entropy_with(mat, EIG_CLAMP, RANK_TOL)
}

/// Spectral entropy with explicit tolerances. Eigenvalues below `clamp`
/// (including rounding-level negatives above −PSD_TOL) are zeroed and the
/// spectrum renormalized; anything below −PSD_TOL is an error.
pub fn spectral_entropy_with(
    mat: &DMatrix<f64>,
    clamp: f64,
    rank_tol: f64,
) -> Result<SpectralReport, QuantumError> {
    let asym = max_asymmetry(mat);
    if asym > SYMMETRY_TOL {
        return Err(QuantumError::NotSymmetric(asym));
    }
    let trace = mat.trace();
    if (trace - 1.0).abs() > TRACE_TOL {
        return Err(QuantumError::TraceNotOne(trace));
    }

    let sym = (mat + mat.transpose()).scale(0.5);
    let mut eigenvalues: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    if let Some(&lo) = eigenvalues
        .iter()
        .filter(|&&v| v < -PSD_TOL)
        .min_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"))
    {
        return Err(QuantumError::NotPsd(lo));
    }
    for v in &mut eigenvalues {
        if *v < clamp {
            *v = 0.0;
        }
    }
    eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
    let mass: f64 = eigenvalues.iter().sum();
    for v in &mut eigenvalues {
        *v /= mass;
    }

    let entropy_bits = -eigenvalues
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| v * v.log2())
        .sum::<f64>();
    let rank = eigenvalues.iter().filter(|&&v| v > rank_tol).count();
    Ok(SpectralReport {
        eigenvalues,
        entropy_bits,
        rank,
        d_q: (rank as f64).log2(),
        clamp,
        rank_tol,
    })
}

/// Statistical complexity C_μ = H(π) in bits.
pub fn statistical_complexity(machine: &Machine) -> f64 {
    shannon_bits(machine.stationary())
}

/// Shannon entropy of a probability vector in bits (0·log 0 = 0).
pub fn shannon_bits(probs: &[f64]) -> f64 {
    -probs
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.log2())
        .sum::<f64>()
}

/// Exact quantum memory of a machine: spectral report of the stationary
/// Gram matrix (C_q = entropy_bits, D_q = d_q).
pub fn quantum_memory(machine: &Machine) -> Result<SpectralReport, QuantumError> {
    let overlaps = memory_overlaps(machine)?;
    gram_from_overlaps(&overlaps, machine.stationary())?.spectrum()
}

fn max_asymmetry(mat: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..mat.nrows() {
        for k in (j + 1)..mat.ncols() {
            worst = worst.max((mat[(j, k)] - mat[(k, j)]).abs());
        }
    }
    worst
}

fn labelled_matrix_csv(labels: &[String], mat: &DMatrix<f64>) -> String {
    let header = format!("label,{}", labels.join(","));
    csv_table(
        &header,
        (0..mat.nrows()).map(|j| {
            let mut row = vec![labels[j].clone()];
            row.extend((0..mat.ncols()).map(|k| g12(mat[(j, k)])));
            row
        }),
    )
}

fn labelled_matrix_json(labels: &[String], mat: &DMatrix<f64>) -> serde_json::Value {
    let rows: Vec<Vec<f64>> = (0..mat.nrows())
        .map(|j| (0..mat.ncols()).map(|k| mat[(j, k)]).collect())
        .collect();
    serde_json::json!({ "labels": labels, "rows": rows })
}

// ---------------------------------------------------------------------------
// model reconstruction

/// Concrete phaseless model: real coordinates for each memory state and
/// per-symbol interaction blocks acting on their span.
///
/// Coordinates are a rank-revealing square root of the overlap matrix, so
/// states merged by the process (overlap 1) get literally equal coordinate
/// vectors. The blocks A_x satisfy A_x v_j = √(P(x|j))·v_λ(x,j); stacking
/// them over the emitted symbol registers realizes the interaction
/// U|σ_j⟩|blank⟩ = Σ_x √(P(x|j)) |σ_λ(x,j)⟩|x⟩, an isometry on the span.
#[derive(Debug, Clone)]
pub struct UnitaryModel {
    labels: Vec<String>,
    alphabet: Vec<char>,
    /// rank × n; column j holds the coordinates of |σ_j⟩.
    coords: DMatrix<f64>,
    /// One rank × rank block per symbol.
    blocks: Vec<DMatrix<f64>>,
}

impl UnitaryModel {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    pub fn rank(&self) -> usize {
        self.coords.nrows()
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn state_vector(&self, j: usize) -> nalgebra::DVector<f64> {
        self.coords.column(j).into_owned()
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// ⟨σ_λ(x,j), x| U |σ_j, blank⟩ = √(P(x|j)) when the model is exact.
    pub fn emission_amplitude(&self, machine: &Machine, state: usize, symbol: u8) -> f64 {
        match machine.next_state(state, symbol) {
            Some(target) => {
                let out = &self.blocks[symbol as usize] * self.coords.column(state);
                self.coords.column(target).dot(&out)
            }
            None => 0.0,
        }
    }

    /// Max deviation of the coordinate Gram VᵀV from the overlap matrix.
    pub fn gram_residual(&self, overlaps: &OverlapMatrix) -> f64 {
        let gram = self.coords.transpose() * &self.coords;
        sup_diff(&gram, &overlaps.mat)
    }

    /// Spectral-norm deviation of Σ_x A_xᵀA_x from the identity on the
    /// span: ‖(U†U − I)|span‖.
    pub fn isometry_residual(&self) -> f64 {
        let r = self.rank();
        let mut acc = DMatrix::<f64>::zeros(r, r);
        for block in &self.blocks {
            acc += block.transpose() * block;
        }
        acc -= DMatrix::identity(r, r);
        spectral_norm_sym(&acc)
    }
}

/// Largest absolute eigenvalue of a (symmetrized) matrix.
pub fn spectral_norm_sym(mat: &DMatrix<f64>) -> f64 {
    let sym = (mat + mat.transpose()).scale(0.5);
    sym.symmetric_eigenvalues()
        .iter()
        .map(|v| v.abs())
        .fold(0.0, f64::max)
}

/// Builds the phaseless model from a machine and its overlap matrix.
pub fn reconstruct_model(
    machine: &Machine,
    overlaps: &OverlapMatrix,
) -> Result<UnitaryModel, QuantumError> {
    let n = machine.n_states();
    if overlaps.labels.len() != n {
        return Err(QuantumError::LabelMismatch(overlaps.labels.len(), n));
    }
    let a = machine.alphabet().len();

    // Rank-revealing factorization C = Lᵀ-rows · (duplicated rows for
    // merged states); coords are the rows of L, stored column-per-state.
    let l = pivoted_cholesky(&overlaps.mat, 1e-10)?;
    let rank = l.ncols();
    let coords = l.transpose();

    // A_x from the least-squares solution of A_x·V = W_x, where column j of
    // W_x is √(P(x|j))·v_λ(x,j). The exact solution exists on the span.
    let v_t = coords.transpose(); // n × rank
    let mut blocks = Vec::with_capacity(a);
    for x in 0..a {
        let mut w = DMatrix::<f64>::zeros(rank, n);
        for j in 0..n {
            let p = machine.emission_prob(j, x as u8);
            if p > 0.0 {
                let target = machine.next_state(j, x as u8).expect("edge exists");
                let scaled = coords.column(target) * p.sqrt();
                w.set_column(j, &scaled);
            }
        }
        let solved = v_t
            .clone()
            .svd(true, true)
            .solve(&w.transpose(), 1e-12)
            .map_err(|_| QuantumError::NotPsd(f64::NAN))?;
        blocks.push(solved.transpose());
    }

    Ok(UnitaryModel {
        labels: overlaps.labels.clone(),
        alphabet: machine.alphabet().symbols().to_vec(),
        coords,
        blocks,
    })
}

/// Pivoted Cholesky factorization of a symmetric PSD matrix: returns L
/// (n × rank) with C = L·Lᵀ, stopping when the residual diagonal falls to
/// `tol`. Rows of merged (identical) states come out identical.
fn pivoted_cholesky(c: &DMatrix<f64>, tol: f64) -> Result<DMatrix<f64>, QuantumError> {
    let n = c.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    let mut d: Vec<f64> = (0..n).map(|i| c[(i, i)]).collect();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    for k in 0..n {
        let (pos, &pivot) = match remaining
            .iter()
            .enumerate()
            .max_by(|(_, &i), (_, &j)| d[i].partial_cmp(&d[j]).expect("finite diagonal"))
        {
            Some((pos, i)) => (pos, i),
            None => break,
        };
        if d[pivot] <= tol {
            if d[pivot] < -PSD_TOL {
                return Err(QuantumError::NotPsd(d[pivot]));
            }
            break;
        }
        remaining.swap_remove(pos);
        let s = d[pivot].sqrt();
        l[(pivot, k)] = s;
        for &i in &remaining {
            let mut val = c[(i, pivot)];
            for t in 0..k {
                val -= l[(i, t)] * l[(pivot, t)];
            }
            val /= s;
            l[(i, k)] = val;
            d[i] -= val * val;
            if d[i] < -PSD_TOL {
                return Err(QuantumError::NotPsd(d[i]));
            }
        }
        rank = k + 1;
    }
    Ok(l.columns(0, rank).into_owned())
}

// ---------------------------------------------------------------------------
