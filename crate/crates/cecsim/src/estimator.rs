//! Transfer-matrix estimation of per-cycle logical error rates.
//!
//! The correction procedure is Markovian over five logical classes
//! {Correct, XErr, ZErr, YErr, Failed}. Conditional transition rows
//! `alpha_ab(i,j)` — the destination distribution given class `a` input
//! and exactly `i` memory plus `j` gate faults — are estimated by exact
//! enumeration where affordable and Monte Carlo otherwise; they are
//! independent of the error rates, so one cached table serves every
//! operating point. The transfer matrix is then
//!
//! ```text
//! T_ab = sum over the truncation set of alpha_ab(i,j) * P(i,j)
//! ```
//!
//! with Failed pinned absorbing and the truncated tail mass parked on the
//! diagonal. The per-cycle logical rate is `1 - rho(Q)` for the non-failed
//! 4x4 block `Q`, the asymptotic absorption rate of the chain.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

use crate::circuit::CecCircuit;
use crate::codes::{classify, Code, CodeSpec, LogicalClass};
use crate::error::{Error, Result};
use crate::noise::{
    log_path_weight, sample_fault_path, sample_unconditional, site_is_single, truncation_set,
    ErrorModel, FaultPath, MemFault,
};
use crate::pauli::{
    apply_gate_deterministic, inject_site_fault, multiply, FrameState, Pauli, PauliString,
    SitePauli,
};
use crate::rng::{RngFactory, StreamDomain};

/// Run one correction cycle over `state`, interleaving the path's memory
/// faults (injected at the start of their layer) and gate faults (injected
/// right after their gate acts) with deterministic propagation.
///
/// The path must be normalized (sorted); `FaultPath` produced by the
/// samplers always is.
pub fn run_cycle(circuit: &CecCircuit, state: &mut FrameState, path: &FaultPath) {
    let n_data = circuit.n_data();
    let mut mem_cursor = 0usize;
    let mut gate_cursor = 0usize;

    for (layer, gate_ids) in circuit.layers.iter().enumerate() {
        while mem_cursor < path.mem_faults.len() && path.mem_faults[mem_cursor].layer == layer {
            let MemFault { qubit, pauli, .. } = path.mem_faults[mem_cursor];
            if qubit < n_data {
                state.data.apply(qubit, pauli);
            } else {
                state.ancillas.absorb_fault(qubit - n_data, pauli);
            }
            mem_cursor += 1;
        }

        for &gate_idx in gate_ids {
            let gate = &circuit.gates[gate_idx].kind;
            apply_gate_deterministic(state, gate).expect("circuit operands validated at build");
            let site_lo = circuit.site_offsets[gate_idx];
            let site_hi = circuit.site_offsets[gate_idx + 1];
            while gate_cursor < path.gate_faults.len() {
                let (site, pauli) = path.gate_faults[gate_cursor];
                if site < site_lo || site >= site_hi {
                    break;
                }
                inject_site_fault(state, gate, site - site_lo, pauli)
                    .expect("fault sites validated against circuit");
                gate_cursor += 1;
            }
        }
    }
    debug_assert_eq!(mem_cursor, path.mem_faults.len(), "memory fault layer out of range");
    debug_assert_eq!(gate_cursor, path.gate_faults.len(), "gate fault site left unapplied");
}

/// One cycle from a class representative with zeroed ancillas; returns the
/// logical class of the final data frame.
pub fn run_one_cycle(
    circuit: &CecCircuit,
    representative: &PauliString,
    path: &FaultPath,
) -> LogicalClass {
    let mut state = FrameState::with_frame(*representative, circuit.n_ancilla);
    run_cycle(circuit, &mut state, path);
    classify(&circuit.code, &state.data)
}

/// Minimal-weight coset representatives of a logical class.
///
/// Correct is represented by the identity frame; XErr/ZErr by a single X/Z
/// on each qubit; YErr by every independent (single X, single Z) product.
/// Classes a code cannot express (ZErr/YErr for the bit-flip code, whose Z
/// residues are inert) have no representatives.
pub fn class_representatives(code: &CodeSpec, class: LogicalClass) -> Vec<PauliString> {
    let n = code.n_data;
    match class {
        LogicalClass::Correct => vec![PauliString::identity(n)],
        LogicalClass::XErr => (0..n).map(|q| PauliString::single(n, q, Pauli::X)).collect(),
        LogicalClass::ZErr => {
            if !code.protects_phase() {
                return vec![];
            }
            (0..n).map(|q| PauliString::single(n, q, Pauli::Z)).collect()
        }
        LogicalClass::YErr => {
            if !code.protects_phase() {
                return vec![];
            }
            let mut reps = Vec::with_capacity(n * n);
            for qx in 0..n {
                for qz in 0..n {
                    reps.push(
                        multiply(
                            &PauliString::single(n, qx, Pauli::X),
                            &PauliString::single(n, qz, Pauli::Z),
                        )
                        .unwrap(),
                    );
                }
            }
            reps
        }
        LogicalClass::Failed => vec![],
    }
}

/// The non-failed classes this code can actually occupy.
pub fn valid_classes(code: &CodeSpec) -> Vec<LogicalClass> {
    LogicalClass::ALL
        .into_iter()
        .filter(|&c| c != LogicalClass::Failed && !class_representatives(code, c).is_empty())
        .collect()
}

/// One estimated transition cell.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AlphaCell {
    pub from: LogicalClass,
    pub to: LogicalClass,
    pub i: usize,
    pub j: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub n_samples: u64,
    pub exact: bool,
}

/// A full destination row for one (input class, i, j) condition.
#[derive(Debug, Clone)]
pub struct AlphaRow {
    pub from: LogicalClass,
    pub i: usize,
    pub j: usize,
    pub probs: [f64; 5],
    pub stderr: [f64; 5],
    /// Monte Carlo samples, or evaluated paths when exact.
    pub n_samples: u64,
    pub exact: bool,
}

impl AlphaRow {
    pub fn cells(&self) -> Vec<AlphaCell> {
        LogicalClass::ALL
            .into_iter()
            .map(|to| AlphaCell {
                from: self.from,
                to,
                i: self.i,
                j: self.j,
                estimate: self.probs[to.index()],
                stderr: self.stderr[to.index()],
                n_samples: self.n_samples,
                exact: self.exact,
            })
            .collect()
    }
}

fn counts_to_row(
    from: LogicalClass,
    i: usize,
    j: usize,
    counts: [u64; 5],
    exact: bool,
) -> AlphaRow {
    let total: u64 = counts.iter().sum();
    let mut probs = [0.0; 5];
    let mut stderr = [0.0; 5];
    for k in 0..5 {
        let p = counts[k] as f64 / total as f64;
        probs[k] = p;
        if !exact {
            stderr[k] = (p * (1.0 - p) / total as f64).sqrt();
        }
    }
    AlphaRow { from, i, j, probs, stderr, n_samples: total, exact }
}

/// Monte Carlo estimate of the transition row from class `a` under exactly
/// (i, j) faults: each sample draws a uniform class representative and a
/// uniform fault path.
pub fn estimate_alpha<R: rand::Rng>(
    circuit: &CecCircuit,
    a: LogicalClass,
    i: usize,
    j: usize,
    n_samples: u64,
    rng: &mut R,
) -> Result<AlphaRow> {
    if a == LogicalClass::Failed {
        return Err(Error::usage("Failed is absorbing; no transitions to estimate"));
    }
    if n_samples == 0 {
        return Err(Error::usage("n_samples must be at least 1"));
    }
    let reps = class_representatives(&circuit.code, a);
    if reps.is_empty() {
        return Err(Error::usage(format!(
            "class {a} has no representatives for code {}",
            circuit.code.name
        )));
    }

    let mut counts = [0u64; 5];
    for _ in 0..n_samples {
        let rep = reps[rng.gen_range(0..reps.len())];
        let path = sample_fault_path(circuit, i, j, rng)?;
        counts[run_one_cycle(circuit, &rep, &path).index()] += 1;
    }
    Ok(counts_to_row(a, i, j, counts, false))
}

/// Number of paths a full enumeration of (i, j) faults would evaluate:
/// placements x Pauli choices x class representatives.
pub fn enumeration_count(circuit: &CecCircuit, a: LogicalClass, i: usize, j: usize) -> f64 {
    let reps = class_representatives(&circuit.code, a).len() as f64;
    let qt = circuit.mem_sites();
    let g = circuit.g();
    let singles = (0..g).filter(|&s| site_is_single(circuit, s)).count();
    let pairs = g - singles;

    // Memory placements with 3 Pauli choices each.
    let mem = binom(qt, i) * 3f64.powi(i as i32);
    // Gate placements: choose k single-Pauli sites and j-k pair sites.
    let mut gate = 0.0;
    for k in 0..=j.min(singles) {
        if j - k > pairs {
            continue;
        }
        gate += binom(singles, k) * 3f64.powi(k as i32)
            * binom(pairs, j - k) * 15f64.powi((j - k) as i32);
    }
    mem * gate * reps
}

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut out = 1.0;
    for m in 0..k {
        out *= (n - m) as f64 / (m + 1) as f64;
    }
    out
}

/// Budget for an explicit `enumerate_alpha` call, in evaluated paths.
pub const DEFAULT_ENUM_BUDGET: u64 = 100_000_000;

/// Exact transition row by full enumeration over placements, Pauli
/// choices, and class representatives, all uniformly weighted. Refuses
/// (with the computed combination count) when the enumeration would exceed
/// `budget` paths.
pub fn enumerate_alpha(
    circuit: &CecCircuit,
    a: LogicalClass,
    i: usize,
    j: usize,
    budget: u64,
) -> Result<AlphaRow> {
    if a == LogicalClass::Failed {
        return Err(Error::usage("Failed is absorbing; no transitions to enumerate"));
    }
    let reps = class_representatives(&circuit.code, a);
    if reps.is_empty() {
        return Err(Error::usage(format!(
            "class {a} has no representatives for code {}",
            circuit.code.name
        )));
    }
    let total = enumeration_count(circuit, a, i, j);
    if total > budget as f64 {
        return Err(Error::usage(format!(
            "enumeration of ({i},{j}) faults for class {a} needs {total:.3e} paths, over the budget of {budget}"
        )));
    }

    let qt = circuit.mem_sites();
    let g = circuit.g();
    let mut counts = [0u64; 5];

    // Walk memory-site combinations and gate-site combinations jointly;
    // for each placement, sweep all Pauli assignments by mixed radix.
    let mem_combos = Combinations::new(qt, i);
    for mem_sites in mem_combos {
        let mut path = FaultPath::empty();
        for &site in &mem_sites {
            path.mem_faults.push(MemFault {
                qubit: site % circuit.q,
                layer: site / circuit.q,
                pauli: Pauli::X,
            });
        }

        for gate_sites in Combinations::new(g, j) {
            path.gate_faults.clear();
            let mut radices: Vec<usize> = vec![3; i];
            for &site in &gate_sites {
                let single = site_is_single(circuit, site);
                path.gate_faults.push((
                    site,
                    if single {
                        SitePauli::Single(Pauli::X)
                    } else {
                        SitePauli::Pair(Pauli::I, Pauli::X)
                    },
                ));
                radices.push(if single { 3 } else { 15 });
            }

            let mut assignment = vec![0usize; radices.len()];
            loop {
                for (slot, &digit) in assignment.iter().enumerate() {
                    if slot < i {
                        path.mem_faults[slot].pauli = Pauli::NONTRIVIAL[digit];
                    } else {
                        let (site, _) = path.gate_faults[slot - i];
                        let pauli = if site_is_single(circuit, site) {
                            SitePauli::Single(Pauli::NONTRIVIAL[digit])
                        } else {
                            crate::noise::pair_from_index(digit + 1)
                        };
                        path.gate_faults[slot - i].1 = pauli;
                    }
                }
                for rep in &reps {
                    counts[run_one_cycle(circuit, rep, &path).index()] += 1;
                }
                if !increment(&mut assignment, &radices) {
                    break;
                }
            }
        }
    }
    Ok(counts_to_row(a, i, j, counts, true))
}

/// Lexicographic k-combinations of 0..n.
struct Combinations {
    n: usize,
    state: Option<Vec<usize>>,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        let state = if k <= n { Some((0..k).collect()) } else { None };
        Combinations { n, state }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.state.clone()?;
        let k = current.len();
        let mut next = current.clone();
        let mut idx = k;
        loop {
            if idx == 0 {
                self.state = None;
                break;
            }
            idx -= 1;
            if next[idx] + 1 <= self.n - (k - idx) {
                next[idx] += 1;
                for m in idx + 1..k {
                    next[m] = next[m - 1] + 1;
                }
                self.state = Some(next);
                break;
            }
        }
        Some(current)
    }
}

fn increment(assignment: &mut [usize], radices: &[usize]) -> bool {
    for slot in (0..assignment.len()).rev() {
        assignment[slot] += 1;
        if assignment[slot] < radices[slot] {
            return true;
        }
        assignment[slot] = 0;
    }
    false
}

/// Estimation controls for transfer-matrix assembly.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AlphaParams {
    /// Monte Carlo samples per sampled (a, i, j) cell.
    pub n_samples: u64,
    /// Cells whose full enumeration stays within this many paths are
    /// computed exactly instead of sampled.
    pub exact_cell_budget: u64,
}

impl Default for AlphaParams {
    fn default() -> Self {
        AlphaParams { n_samples: 10_000, exact_cell_budget: 3_000_000 }
    }
}

/// Lazily computed alpha table for one circuit, reused across every
/// operating point of a sweep or threshold search (the alpha rows do not
/// depend on the error rates). Cells are deterministic given (seed, cell):
/// each draws from its own RNG stream keyed by (class, i, j).
pub struct AlphaCache<'a> {
    pub circuit: &'a CecCircuit,
    pub factory: RngFactory,
    pub params: AlphaParams,
    cells: HashMap<(usize, usize, usize), AlphaRow>,
}

impl<'a> AlphaCache<'a> {
    pub fn new(circuit: &'a CecCircuit, factory: RngFactory, params: AlphaParams) -> Self {
        AlphaCache { circuit, factory, params, cells: HashMap::new() }
    }

    fn cell_stream(&self, class_idx: usize, i: usize, j: usize) -> u64 {
        (class_idx as u64) | ((i as u64) << 3) | ((j as u64) << 28)
    }

    fn compute_row(&self, class: LogicalClass, i: usize, j: usize) -> Result<AlphaRow> {
        let count = enumeration_count(self.circuit, class, i, j);
        if count <= self.params.exact_cell_budget as f64 {
            enumerate_alpha(self.circuit, class, i, j, self.params.exact_cell_budget)
        } else {
            let mut rng = self
                .factory
                .stream(StreamDomain::AlphaCell, self.cell_stream(class.index(), i, j));
            estimate_alpha(self.circuit, class, i, j, self.params.n_samples, &mut rng)
        }
    }

    /// Ensure every (class, i, j) cell for the given fault orders exists,
    /// computing missing ones in parallel.
    pub fn ensure(&mut self, orders: &[(usize, usize)]) -> Result<()> {
        let classes = valid_classes(&self.circuit.code);
        let missing: Vec<(LogicalClass, usize, usize)> = classes
            .iter()
            .flat_map(|&c| orders.iter().map(move |&(i, j)| (c, i, j)))
            .filter(|&(c, i, j)| !self.cells.contains_key(&(c.index(), i, j)))
            .collect();
        let computed: Vec<Result<AlphaRow>> = missing
            .par_iter()
            .map(|&(c, i, j)| self.compute_row(c, i, j))
            .collect();
        for row in computed {
            let row = row?;
            self.cells.insert((row.from.index(), row.i, row.j), row);
        }
        Ok(())
    }

    pub fn row(&mut self, class: LogicalClass, i: usize, j: usize) -> Result<&AlphaRow> {
        let key = (class.index(), i, j);
        if !self.cells.contains_key(&key) {
            let row = self.compute_row(class, i, j)?;
            self.cells.insert(key, row);
        }
        Ok(&self.cells[&key])
    }

    pub fn get(&self, class: LogicalClass, i: usize, j: usize) -> Option<&AlphaRow> {
        self.cells.get(&(class.index(), i, j))
    }

    pub fn exact_cell_count(&self) -> usize {
        self.cells.values().filter(|r| r.exact).count()
    }

    pub fn sampled_cell_count(&self) -> usize {
        self.cells.values().filter(|r| !r.exact).count()
    }
}

/// 5x5 row-stochastic transition matrix over the logical classes, with
/// Failed absorbing.
#[derive(Debug, Clone, Serialize)]
pub struct TransferMatrix {
    /// Rows and columns ordered (Correct, XErr, ZErr, YErr, Failed).
    pub entries: [[f64; 5]; 5],
    /// Statistical error per entry (zero for exactly computed cells).
    pub stderr: [[f64; 5]; 5],
    pub meta: TransferMeta,
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferMeta {
    pub code: Code,
    pub p_gate: f64,
    pub p_mem: f64,
    pub epsilon: f64,
    /// Highest i + j included.
    pub truncation_order: usize,
    /// Probability mass outside the truncation set, parked on the diagonal.
    pub residual_mass: f64,
    pub seed: u64,
    pub n_samples: u64,
    pub exact_cells: usize,
    pub sampled_cells: usize,
}

impl TransferMatrix {
    /// The non-failed 4x4 block.
    pub fn q_block(&self) -> [[f64; 4]; 4] {
        let mut q = [[0.0; 4]; 4];
        for (r, row) in q.iter_mut().enumerate() {
            row.copy_from_slice(&self.entries[r][..4]);
        }
        q
    }
}

/// Assemble the transfer matrix at one operating point from cached alpha
/// rows. Residual truncation mass is assigned to the diagonal (a
/// stay-in-place convention that never inflates failure) and recorded.
pub fn build_transfer(cache: &mut AlphaCache, model: &ErrorModel, epsilon: f64) -> Result<TransferMatrix> {
    let circuit = cache.circuit;
    let dims = circuit.dims();
    let orders = truncation_set(dims, model, epsilon)?;
    cache.ensure(&orders)?;

    let weights: Vec<f64> = orders
        .iter()
        .map(|&(i, j)| log_path_weight(dims, model, i, j).map(f64::exp))
        .collect::<Result<_>>()?;
    let included: f64 = weights.iter().sum();
    let residual = (1.0 - included).max(0.0);

    let mut entries = [[0.0; 5]; 5];
    let mut stderr = [[0.0; 5]; 5];
    let classes = valid_classes(&circuit.code);
    for &class in &classes {
        let r = class.index();
        for (&(i, j), &w) in orders.iter().zip(&weights) {
            let row = cache.row(class, i, j)?;
            for b in 0..5 {
                entries[r][b] += w * row.probs[b];
                stderr[r][b] += (w * row.stderr[b]).powi(2);
            }
        }
        entries[r][r] += residual;
        for b in 0..5 {
            stderr[r][b] = stderr[r][b].sqrt();
        }
    }
    // Classes with no representatives count as already failed.
    for class in LogicalClass::ALL {
        let r = class.index();
        if class != LogicalClass::Failed && !classes.contains(&class) {
            entries[r] = [0.0, 0.0, 0.0, 0.0, 1.0];
        }
    }
    entries[LogicalClass::Failed.index()] = [0.0, 0.0, 0.0, 0.0, 1.0];

    Ok(TransferMatrix {
        entries,
        stderr,
        meta: TransferMeta {
            code: circuit.code.name,
            p_gate: model.p_gate,
            p_mem: model.p_mem,
            epsilon,
            truncation_order: orders.iter().map(|&(i, j)| i + j).max().unwrap_or(0),
            residual_mass: residual,
            seed: cache.factory.seed,
            n_samples: cache.params.n_samples,
            exact_cells: cache.exact_cell_count(),
            sampled_cells: cache.sampled_cell_count(),
        },
    })
}

/// Spectral radius of a nonnegative 4x4 matrix by power iteration.
pub fn spectral_radius(q: &[[f64; 4]; 4], rel_tol: f64, max_iter: usize) -> Result<f64> {
    let mut v = [0.25f64; 4];
    let mut lambda_prev = f64::NAN;
    for iter in 0..max_iter {
        let mut next = [0.0f64; 4];
        for (r, row) in q.iter().enumerate() {
            for (c, &entry) in row.iter().enumerate() {
                next[c] += v[r] * entry;
            }
        }
        let norm: f64 = next.iter().map(|x| x.abs()).sum();
        if norm == 0.0 {
            return Ok(0.0);
        }
        for x in &mut next {
            *x /= norm;
        }
        let lambda = norm;
        if (lambda - lambda_prev).abs() <= rel_tol * lambda.max(f64::MIN_POSITIVE) {
            return Ok(lambda);
        }
        lambda_prev = lambda;
        v = next;
        if iter == max_iter - 1 {
            break;
        }
    }
    Err(Error::numerical(format!(
        "power iteration did not converge after {max_iter} iterations (last estimate {lambda_prev})"
    )))
}

/// Per-cycle logical error rate: `1 - rho(Q)` for the non-failed block.
pub fn logical_rate(t: &TransferMatrix) -> Result<f64> {
    let rho = spectral_radius(&t.q_block(), 1e-10, 500_000)?;
    Ok((1.0 - rho).max(0.0))
}

/// Finite-horizon alternative: the hazard rate of the survival sequence
/// `s_n = |pi Q^n|` started from Correct, reported once successive doubled
/// horizons agree. The spectral value is the primary estimate; this one is
/// a diagnostic cross-check.
pub fn logical_rate_finite_horizon(t: &TransferMatrix, max_horizon: usize) -> Result<f64> {
    let q = t.q_block();
    let step = |v: &[f64; 4]| {
        let mut next = [0.0f64; 4];
        for r in 0..4 {
            for c in 0..4 {
                next[c] += v[r] * q[r][c];
            }
        }
        next
    };
    let mut v = [1.0, 0.0, 0.0, 0.0];
    let mut horizon = 8usize;
    let mut prev_rate = f64::NAN;
    let mut steps_done = 0usize;
    loop {
        while steps_done < horizon {
            v = step(&v);
            steps_done += 1;
            let s: f64 = v.iter().sum();
            if s == 0.0 {
                return Ok(1.0);
            }
        }
        let s_n: f64 = v.iter().sum();
        let s_next: f64 = step(&v).iter().sum();
        let rate = 1.0 - s_next / s_n;
        if (rate - prev_rate).abs() <= 1e-9 * rate.abs().max(1e-30) {
            return Ok(rate.max(0.0));
        }
        prev_rate = rate;
        horizon *= 2;
        if horizon > max_horizon {
            return Err(Error::numerical(format!(
                "finite-horizon rate did not stabilize within {max_horizon} cycles"
            )));
        }
        // Renormalize to dodge underflow on long horizons.
        let s: f64 = v.iter().sum();
        for x in &mut v {
            *x /= s;
        }
    }
}

/// A transfer matrix with its derived rate and bootstrap uncertainty.
#[derive(Debug, Clone, Serialize)]
pub struct PointEstimate {
    pub transfer: TransferMatrix,
    pub p_log: f64,
    pub p_log_stderr: f64,
}

/// Build the transfer matrix and logical rate at one operating point,
/// with the rate's standard error from a parametric bootstrap over the
/// sampled alpha cells (exact cells carry no noise). Deterministic given
/// the cache's seed.
pub fn estimate_point(
    cache: &mut AlphaCache,
    model: &ErrorModel,
    epsilon: f64,
    resamples: usize,
) -> Result<PointEstimate> {
    let transfer = build_transfer(cache, model, epsilon)?;
    let p_log = logical_rate(&transfer)?;

    let dims = cache.circuit.dims();
    let orders = truncation_set(dims, model, epsilon)?;
    let classes = valid_classes(&cache.circuit.code);
    let sampled: Vec<(LogicalClass, usize, usize)> = classes
        .iter()
        .flat_map(|&c| orders.iter().map(move |&(i, j)| (c, i, j)))
        .filter(|&(c, i, j)| cache.get(c, i, j).is_some_and(|r| !r.exact))
        .collect();

    if sampled.is_empty() {
        return Ok(PointEstimate { transfer, p_log, p_log_stderr: 0.0 });
    }

    let weights: Vec<f64> = orders
        .iter()
        .map(|&(i, j)| log_path_weight(dims, model, i, j).map(f64::exp))
        .collect::<Result<_>>()?;

    let mut rates = Vec::with_capacity(resamples);
    for k in 0..resamples {
        let mut rng = cache.factory.stream(StreamDomain::Resample, k as u64);
        let mut entries = transfer.entries;
        for &(class, i, j) in &sampled {
            let row = cache.get(class, i, j).unwrap();
            let w = weights[orders.iter().position(|&o| o == (i, j)).unwrap()];
            let resampled = multinomial_resample(&row.probs, row.n_samples, &mut rng);
            let r = class.index();
            for b in 0..5 {
                entries[r][b] += w * (resampled[b] - row.probs[b]);
            }
        }
        let mut t_k = transfer.clone();
        t_k.entries = entries;
        rates.push(logical_rate(&t_k)?);
    }
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (rates.len() - 1) as f64;
    Ok(PointEstimate { transfer, p_log, p_log_stderr: var.sqrt() })
}

fn multinomial_resample<R: rand::Rng>(probs: &[f64; 5], n: u64, rng: &mut R) -> [f64; 5] {
    let mut out = [0.0; 5];
    let mut remaining = n;
    let mut rest = 1.0;
    for b in 0..5 {
        if remaining == 0 || rest <= 0.0 {
            break;
        }
        let p = (probs[b] / rest).clamp(0.0, 1.0);
        let draw = if b == 4 {
            remaining
        } else {
            rng.sample(rand_distr::Binomial::new(remaining, p).unwrap())
        };
        out[b] = draw as f64 / n as f64;
        remaining -= draw;
        rest -= probs[b];
    }
    out
}

/// Outcome of one Monte Carlo trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryOutcome {
    /// Cycle index (1-based) at which the frame first classified Failed.
    pub failed_at: Option<usize>,
    pub cycles_run: usize,
}

/// Direct Monte Carlo logical rate estimate.
#[derive(Debug, Clone, Serialize)]
pub struct McRate {
    /// Per-cycle hazard MLE; absent when no failures were observed.
    pub p_log: Option<f64>,
    pub stderr: Option<f64>,
    /// 95% upper bound (rule of three) when no failures occurred.
    pub upper_bound: f64,
    pub failures: u64,
    /// Total post-burn-in cycles observed.
    pub exposure: u64,
    pub n_trajectories: usize,
    pub burn_in: usize,
}

/// Simulate independent trajectories with unconditional per-site faulting
/// until logical failure or `max_cycles`, then fit a geometric failure-time
/// distribution. The first `burn_in` cycles of each trajectory are excluded
/// so the fitted hazard reflects the stationary regime the transfer matrix
/// describes.
pub fn direct_monte_carlo_rate(
    circuit: &CecCircuit,
    model: &ErrorModel,
    n_trajectories: usize,
    max_cycles: usize,
    burn_in: usize,
    factory: &RngFactory,
) -> Result<McRate> {
    if max_cycles <= burn_in {
        return Err(Error::usage("max_cycles must exceed burn_in"));
    }
    let outcomes: Vec<TrajectoryOutcome> = (0..n_trajectories)
        .into_par_iter()
        .map(|idx| {
            let mut rng = factory.stream(StreamDomain::Trajectory, idx as u64);
            let mut state = FrameState::new(circuit.n_data(), circuit.n_ancilla);
            for cycle in 1..=max_cycles {
                let path = sample_unconditional(circuit, model, &mut rng);
                run_cycle(circuit, &mut state, &path);
                if classify(&circuit.code, &state.data) == LogicalClass::Failed {
                    return TrajectoryOutcome { failed_at: Some(cycle), cycles_run: cycle };
                }
            }
            TrajectoryOutcome { failed_at: None, cycles_run: max_cycles }
        })
        .collect();
    Ok(geometric_mle(&outcomes, burn_in, n_trajectories))
}

/// Maximum-likelihood geometric hazard from (possibly censored)
/// trajectories, left-truncated at `burn_in` cycles.
pub fn geometric_mle(outcomes: &[TrajectoryOutcome], burn_in: usize, n_trajectories: usize) -> McRate {
    let mut failures = 0u64;
    let mut exposure = 0u64;
    for o in outcomes {
        if o.cycles_run <= burn_in {
            continue;
        }
        exposure += (o.cycles_run - burn_in) as u64;
        if o.failed_at.is_some_and(|c| c > burn_in) {
            failures += 1;
        }
    }
    let upper_bound = if exposure > 0 { 3.0 / exposure as f64 } else { 1.0 };
    let (p_log, stderr) = if failures > 0 {
        let p = failures as f64 / exposure as f64;
        (Some(p), Some(p / (failures as f64).sqrt()))
    } else {
        (None, None)
    };
    McRate {
        p_log,
        stderr,
        upper_bound,
        failures,
        exposure,
        n_trajectories,
        burn_in,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_cycle, CircuitOptions};
    use crate::codes::CodeSpec;
    use crate::noise::MemMode;
    use crate::pauli::GateKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn circuit(code: Code) -> CecCircuit {
        build_cycle(&CodeSpec::new(code), CircuitOptions::default())
    }

    #[test]
    fn noiseless_cycle_returns_every_representative_to_correct() {
        for code in Code::ALL {
            let c = circuit(code);
            for class in valid_classes(&c.code) {
                for rep in class_representatives(&c.code, class) {
                    assert_eq!(
                        run_one_cycle(&c, &rep, &FaultPath::empty()),
                        LogicalClass::Correct,
                        "{code} {class} rep {rep}"
                    );
                }
            }
        }
    }

    #[test]
    fn bf_x_on_third_qubit_is_corrected() {
        let c = circuit(Code::Bf);
        let rep = PauliString::single(3, 2, Pauli::X);
        assert_eq!(run_one_cycle(&c, &rep, &FaultPath::empty()), LogicalClass::Correct);
    }

    #[test]
    fn representatives_classify_to_their_class() {
        for code in Code::ALL {
            let spec = CodeSpec::new(code);
            for class in valid_classes(&spec) {
                for rep in class_representatives(&spec, class) {
                    assert_eq!(classify(&spec, &rep), class, "{code} {rep}");
                }
            }
        }
    }

    #[test]
    fn bf_has_no_phase_classes() {
        let spec = CodeSpec::new(Code::Bf);
        assert_eq!(
            valid_classes(&spec),
            vec![LogicalClass::Correct, LogicalClass::XErr]
        );
        assert!(class_representatives(&spec, LogicalClass::ZErr).is_empty());
    }

    #[test]
    fn single_extraction_fault_recovers_in_one_clean_cycle() {
        // X (x) X on the first extraction site: the data picks up an X that
        // this cycle's correction logic must not escalate, and the next
        // clean cycle must remove.
        let c = circuit(Code::Bf);
        let mut path = FaultPath::empty();
        path.gate_faults.push((0, SitePauli::Pair(Pauli::X, Pauli::X)));

        let mut state = FrameState::new(3, 3);
        run_cycle(&c, &mut state, &path);
        run_cycle(&c, &mut state, &FaultPath::empty());
        assert_eq!(classify(&c.code, &state.data), LogicalClass::Correct);
    }

    #[test]
    fn estimate_alpha_noiseless_is_all_correct() {
        let c = circuit(Code::Bf);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let row = estimate_alpha(&c, LogicalClass::Correct, 0, 0, 100, &mut rng).unwrap();
        assert_eq!(row.probs[LogicalClass::Correct.index()], 1.0);
        // Correctable input classes also land on Correct, not on themselves.
        let row = estimate_alpha(&c, LogicalClass::XErr, 0, 0, 100, &mut rng).unwrap();
        assert_eq!(row.probs[LogicalClass::Correct.index()], 1.0);
    }

    #[test]
    fn alpha_rows_sum_to_one_exactly() {
        let c = circuit(Code::Bs);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for class in [LogicalClass::Correct, LogicalClass::YErr] {
            let row = estimate_alpha(&c, class, 1, 1, 500, &mut rng).unwrap();
            assert_eq!(row.probs.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn estimate_alpha_rejects_vacant_and_absorbing_classes() {
        let c = circuit(Code::Bf);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        assert!(estimate_alpha(&c, LogicalClass::Failed, 0, 0, 10, &mut rng).is_err());
        assert!(estimate_alpha(&c, LogicalClass::ZErr, 0, 0, 10, &mut rng).is_err());
    }

    #[test]
    fn enumerate_alpha_path_count_bf_single_gate_fault() {
        // 15 sites x 15 Paulis = 225 paths per representative.
        let c = circuit(Code::Bf);
        assert_eq!(enumeration_count(&c, LogicalClass::Correct, 0, 1), 225.0);
        let row = enumerate_alpha(&c, LogicalClass::Correct, 0, 1, 1_000_000).unwrap();
        assert_eq!(row.n_samples, 225);
        assert!(row.exact);
    }

    #[test]
    fn enumerate_alpha_budget_refusal_reports_count() {
        let c = circuit(Code::Steane);
        let err = enumerate_alpha(&c, LogicalClass::YErr, 2, 2, 1000).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("paths"), "{msg}");
    }

    #[test]
    fn sampled_alpha_matches_enumeration_within_3_sigma() {
        let c = circuit(Code::Bf);
        let exact = enumerate_alpha(&c, LogicalClass::Correct, 0, 1, 1_000_000).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let sampled = estimate_alpha(&c, LogicalClass::Correct, 0, 1, 20_000, &mut rng).unwrap();
        for b in 0..5 {
            let diff = (sampled.probs[b] - exact.probs[b]).abs();
            assert!(
                diff <= 3.0 * sampled.stderr[b] + 1e-12,
                "class {b}: diff {diff} stderr {}",
                sampled.stderr[b]
            );
        }
    }

    #[test]
    fn steane_single_fault_never_fails_from_correct() {
        let c = circuit(Code::Steane);
        let row = enumerate_alpha(&c, LogicalClass::Correct, 0, 1, 10_000_000).unwrap();
        assert_eq!(row.probs[LogicalClass::Failed.index()], 0.0);
    }

    #[test]
    fn transfer_at_zero_noise_routes_everything_to_correct() {
        let c = circuit(Code::Bs);
        let factory = RngFactory::new(0);
        let mut cache = AlphaCache::new(&c, factory, AlphaParams::default());
        let model = ErrorModel::new(0.0, MemMode::Zero).unwrap();
        let t = build_transfer(&mut cache, &model, 1e-4).unwrap();
        for class in valid_classes(&c.code) {
            assert_eq!(t.entries[class.index()][0], 1.0, "{class}");
        }
        assert_eq!(t.entries[4], [0.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(logical_rate(&t).unwrap(), 0.0);
    }

    #[test]
    fn transfer_rows_sum_to_one() {
        let c = circuit(Code::Bf);
        let factory = RngFactory::new(7);
        let mut cache = AlphaCache::new(&c, factory, AlphaParams::default());
        let model = ErrorModel::new(2e-3, MemMode::Tied).unwrap();
        let t = build_transfer(&mut cache, &model, 1e-4).unwrap();
        for r in 0..5 {
            let sum: f64 = t.entries[r].iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "row {r} sums to {sum}");
        }
        assert!(t.meta.residual_mass >= 0.0);
    }

    #[test]
    fn transfer_is_seed_stable_within_3_sigma() {
        // Force sampling with a zero exact budget so the seeds matter.
        let c = circuit(Code::Bf);
        let params = AlphaParams { n_samples: 4000, exact_cell_budget: 0 };
        let model = ErrorModel::new(1e-3, MemMode::Zero).unwrap();
        let t1 = build_transfer(&mut AlphaCache::new(&c, RngFactory::new(1), params), &model, 1e-4).unwrap();
        let t2 = build_transfer(&mut AlphaCache::new(&c, RngFactory::new(2), params), &model, 1e-4).unwrap();
        for r in 0..5 {
            for b in 0..5 {
                let diff = (t1.entries[r][b] - t2.entries[r][b]).abs();
                let sigma = (t1.stderr[r][b].powi(2) + t2.stderr[r][b].powi(2)).sqrt();
                assert!(diff <= 3.0 * sigma + 1e-12, "entry ({r},{b}): {diff} vs {sigma}");
            }
        }
    }

    #[test]
    fn spectral_radius_trivial_cases() {
        let identity = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        assert!((spectral_radius(&identity, 1e-10, 1000).unwrap() - 1.0).abs() < 1e-10);

        let p = 0.0378;
        let scaled = identity.map(|row| row.map(|x| x * (1.0 - p)));
        let rho = spectral_radius(&scaled, 1e-10, 1000).unwrap();
        assert!((1.0 - rho - p).abs() < 1e-10);
    }

    #[test]
    fn spectral_radius_matches_matrix_power_oracle() {
        // Frozen random sub-stochastic Q.
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        let mut q = [[0.0f64; 4]; 4];
        for row in &mut q {
            let mut total = 0.0;
            for entry in row.iter_mut() {
                *entry = rand::Rng::gen_range(&mut rng, 0.0..1.0);
                total += *entry;
            }
            let scale = rand::Rng::gen_range(&mut rng, 0.6..0.95) / total;
            for entry in row.iter_mut() {
                *entry *= scale;
            }
        }
        let rho = spectral_radius(&q, 1e-12, 1_000_000).unwrap();

        // Oracle: decay rate of |v Q^n| over n <= 10^4.
        let mut v = [1.0f64; 4];
        let mut rate = 0.0;
        for _ in 0..10_000 {
            let mut next = [0.0f64; 4];
            for r in 0..4 {
                for c in 0..4 {
                    next[c] += v[r] * q[r][c];
                }
            }
            let norm: f64 = next.iter().sum();
            rate = norm / v.iter().sum::<f64>();
            v = next;
            let scale: f64 = v.iter().sum();
            for x in &mut v {
                *x /= scale;
            }
        }
        assert!((rho - rate).abs() < 1e-6, "rho {rho} vs oracle {rate}");
    }

    #[test]
    fn logical_rate_invariant_under_class_relabeling() {
        let mut rng = ChaCha12Rng::seed_from_u64(29);
        let mut q = [[0.0f64; 4]; 4];
        for row in &mut q {
            for entry in row.iter_mut() {
                *entry = rand::Rng::gen_range(&mut rng, 0.0..0.24);
            }
        }
        let rho = spectral_radius(&q, 1e-12, 1_000_000).unwrap();
        // Permute the three intermediate classes (indices 1..4).
        for perm in [[0, 2, 3, 1], [0, 3, 1, 2], [0, 2, 1, 3]] {
            let mut pq = [[0.0f64; 4]; 4];
            for r in 0..4 {
                for c in 0..4 {
                    pq[perm[r]][perm[c]] = q[r][c];
                }
            }
            let rho_p = spectral_radius(&pq, 1e-12, 1_000_000).unwrap();
            assert!((rho - rho_p).abs() < 1e-9);
        }
    }

    #[test]
    fn finite_horizon_rate_agrees_with_spectral() {
        let c = circuit(Code::Bf);
        let mut cache = AlphaCache::new(&c, RngFactory::new(3), AlphaParams::default());
        let model = ErrorModel::new(5e-3, MemMode::Zero).unwrap();
        let t = build_transfer(&mut cache, &model, 1e-4).unwrap();
        let spectral = logical_rate(&t).unwrap();
        let horizon = logical_rate_finite_horizon(&t, 1 << 22).unwrap();
        assert!(
            (spectral - horizon).abs() <= 1e-6 * spectral.max(1e-12),
            "spectral {spectral} vs horizon {horizon}"
        );
    }

    #[test]
    fn direct_monte_carlo_zero_noise_gives_upper_bound_only() {
        let c = circuit(Code::Bf);
        let model = ErrorModel::new(0.0, MemMode::Zero).unwrap();
        let rate =
            direct_monte_carlo_rate(&c, &model, 50, 20, 5, &RngFactory::new(1)).unwrap();
        assert!(rate.p_log.is_none());
        assert_eq!(rate.failures, 0);
        assert!(rate.upper_bound > 0.0);
    }

    #[test]
    fn geometric_fit_recovers_synthetic_rate() {
        let p = 0.013;
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let max_cycles = 2000;
        let outcomes: Vec<TrajectoryOutcome> = (0..4000)
            .map(|_| {
                for cycle in 1..=max_cycles {
                    if rand::Rng::gen_bool(&mut rng, p) {
                        return TrajectoryOutcome { failed_at: Some(cycle), cycles_run: cycle };
                    }
                }
                TrajectoryOutcome { failed_at: None, cycles_run: max_cycles }
            })
            .collect();
        let fit = geometric_mle(&outcomes, 0, 4000);
        let got = fit.p_log.unwrap();
        let se = fit.stderr.unwrap();
        assert!((got - p).abs() < 3.0 * se, "got {got} +/- {se}, want {p}");
    }

    #[test]
    fn executor_matches_apply_gate_path() {
        // The fast executor and the public apply_gate must agree on a
        // nontrivial faulted cycle.
        let c = circuit(Code::Bf);
        let mut path = FaultPath::empty();
        path.mem_faults.push(MemFault { qubit: 1, layer: 0, pauli: Pauli::X });
        path.mem_faults.push(MemFault { qubit: 4, layer: 3, pauli: Pauli::Y });
        path.gate_faults.push((2, SitePauli::Pair(Pauli::Y, Pauli::X)));
        path.gate_faults.push((10, SitePauli::Pair(Pauli::X, Pauli::Z)));
        path.normalize();

        let mut fast = FrameState::new(3, 3);
        run_cycle(&c, &mut fast, &path);

        let mut slow = FrameState::new(3, 3);
        let mut mem_cursor = 0;
        for (layer, gate_ids) in c.layers.iter().enumerate() {
            while mem_cursor < path.mem_faults.len() && path.mem_faults[mem_cursor].layer == layer {
                let f = path.mem_faults[mem_cursor];
                if f.qubit < 3 {
                    slow.data.apply(f.qubit, f.pauli);
                } else {
                    slow.ancillas.absorb_fault(f.qubit - 3, f.pauli);
                }
                mem_cursor += 1;
            }
            for &gate_idx in gate_ids {
                let lo = c.site_offsets[gate_idx];
                let hi = c.site_offsets[gate_idx + 1];
                let fault = crate::pauli::GateFault {
                    sites: path
                        .gate_faults
                        .iter()
                        .filter(|&&(s, _)| s >= lo && s < hi)
                        .map(|&(s, p)| (s - lo, p))
                        .collect(),
                };
                crate::pauli::apply_gate(&mut slow, &c.gates[gate_idx].kind, Some(&fault)).unwrap();
            }
        }
        assert_eq!(fast, slow);
    }

    #[test]
    fn extraction_has_no_back_action_on_data() {
        // Fault-free runs: the data frame is unchanged until a correction
        // gate fires.
        let c = circuit(Code::Steane);
        let mut rng = ChaCha12Rng::seed_from_u64(37);
        for _ in 0..50 {
            let frame = PauliString {
                n: 7,
                x_bits: rand::Rng::gen_range(&mut rng, 0u32..128),
                z_bits: rand::Rng::gen_range(&mut rng, 0u32..128),
            };
            let mut state = FrameState::with_frame(frame, c.n_ancilla);
            for gate in &c.gates {
                if matches!(gate.kind, GateKind::CorrectX { .. } | GateKind::CorrectZ { .. }) {
                    break;
                }
                apply_gate_deterministic(&mut state, &gate.kind).unwrap();
            }
            assert_eq!(state.data, frame);
        }
    }
}
