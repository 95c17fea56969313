//! Fixed-point threshold search and parameter sweeps.
//!
//! The threshold is the gate rate where the per-cycle logical error rate
//! crosses it: `p_log(p_gate) = p_gate`. The solver bisects
//! `f(p) = p_log(p) - p` in log space, growing the per-cell sample budget
//! when `f` at the midpoint is statistically ambiguous. Alpha rows are
//! cached across every evaluation — they do not depend on the rates — so
//! later bisection steps mostly reweight existing cells.

use serde::{Deserialize, Serialize};

use crate::circuit::{build_cycle, CecCircuit, CircuitOptions};
use crate::codes::{Code, CodeSpec};
use crate::error::{Error, Result};
use crate::estimator::{estimate_point, AlphaCache, AlphaParams, PointEstimate};
use crate::noise::{ErrorModel, MemMode};
use crate::rng::RngFactory;

/// Run configuration, read from a single JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub code: Option<Code>,
    /// Gate error rate for single-point runs.
    #[serde(default)]
    pub p_gate: Option<f64>,
    /// Memory rate: a number, 0, or the string "tied".
    #[serde(default)]
    pub p_mem: PMem,
    /// Strictly increasing gate-rate grid for sweeps.
    #[serde(default)]
    pub grid: Vec<f64>,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default = "defaults::n_samples")]
    pub n_samples: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub polarity_gates_noisy: bool,
    /// Initial threshold bracket (low, high).
    #[serde(default = "defaults::bracket")]
    pub bracket: (f64, f64),
    /// Relative bracket width at which bisection stops.
    #[serde(default = "defaults::rel_width")]
    pub rel_width: f64,
    /// Cells cheaper than this many enumerated paths are computed exactly.
    #[serde(default = "defaults::exact_cell_budget")]
    pub exact_cell_budget: u64,
    /// Bootstrap resamples for the p_log standard error.
    #[serde(default = "defaults::resamples")]
    pub resamples: usize,
}

mod defaults {
    pub fn epsilon() -> f64 {
        1e-4
    }
    pub fn n_samples() -> u64 {
        10_000
    }
    pub fn bracket() -> (f64, f64) {
        (1e-6, 1e-1)
    }
    pub fn rel_width() -> f64 {
        0.05
    }
    pub fn exact_cell_budget() -> u64 {
        3_000_000
    }
    pub fn resamples() -> usize {
        32
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").unwrap()
    }
}

/// Memory-rate field: `0`, a fixed value, or `"tied"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PMem {
    Value(f64),
    Mode(TiedTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TiedTag {
    Tied,
}

impl Default for PMem {
    fn default() -> Self {
        PMem::Value(0.0)
    }
}

impl PMem {
    pub fn mem_mode(&self) -> MemMode {
        match self {
            PMem::Mode(TiedTag::Tied) => MemMode::Tied,
            PMem::Value(v) if *v == 0.0 => MemMode::Zero,
            PMem::Value(v) => MemMode::Fixed(*v),
        }
    }
}

impl RunConfig {
    pub fn from_json(json: &str) -> Result<RunConfig> {
        let config: RunConfig = serde_json::from_str(json)
            .map_err(|e| Error::usage(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let check_prob = |name: &str, p: f64| -> Result<()> {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::usage(format!("{name} must be in [0, 0.5), got {p}")));
            }
            Ok(())
        };
        if let Some(p) = self.p_gate {
            check_prob("p_gate", p)?;
        }
        if let PMem::Value(v) = self.p_mem {
            check_prob("p_mem", v)?;
        }
        for &p in &self.grid {
            check_prob("grid entry", p)?;
        }
        if !self.grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::usage("grid must be strictly increasing"));
        }
        let (lo, hi) = self.bracket;
        check_prob("bracket low", lo)?;
        check_prob("bracket high", hi)?;
        if lo >= hi {
            return Err(Error::usage("bracket low must be below bracket high"));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::usage("epsilon must be in (0, 1)"));
        }
        if self.n_samples == 0 {
            return Err(Error::usage("n_samples must be positive"));
        }
        Ok(())
    }

    pub fn code(&self) -> Result<Code> {
        self.code
            .ok_or_else(|| Error::usage("no code selected (use --code or the config's code field)"))
    }

    pub fn circuit_options(&self) -> CircuitOptions {
        CircuitOptions { polarity_gates_noisy: self.polarity_gates_noisy }
    }

    pub fn alpha_params(&self) -> AlphaParams {
        AlphaParams {
            n_samples: self.n_samples,
            exact_cell_budget: self.exact_cell_budget,
        }
    }

    pub fn build_circuit(&self) -> Result<CecCircuit> {
        Ok(build_cycle(&CodeSpec::new(self.code()?), self.circuit_options()))
    }
}

/// One threshold-solver evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdRecord {
    pub p_gate: f64,
    pub p_log: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdStop {
    BracketWidth,
    StatisticalFloor,
}

/// Result of a fixed-point threshold search.
#[derive(Debug, Clone, Serialize)]
pub struct ThresholdResult {
    pub code: Code,
    pub mem_mode: MemMode,
    pub p_threshold: f64,
    pub bracket: (f64, f64),
    pub iterations: usize,
    pub records: Vec<ThresholdRecord>,
    pub stopped_by: ThresholdStop,
    pub seed: u64,
    /// f = p_log - p at the final bracket endpoints.
    pub f_low: f64,
    pub f_high: f64,
}

struct ThresholdSolver<'a> {
    mem_mode: MemMode,
    epsilon: f64,
    resamples: usize,
    /// One cache per sample-boost level; level k holds 4^k times the base
    /// sample budget.
    caches: Vec<AlphaCache<'a>>,
    records: Vec<ThresholdRecord>,
}

impl<'a> ThresholdSolver<'a> {
    const MAX_BOOST: usize = 2;

    fn new(circuit: &'a CecCircuit, config: &RunConfig) -> ThresholdSolver<'a> {
        let factory = RngFactory::new(config.seed);
        let base = config.alpha_params();
        let caches = (0..=Self::MAX_BOOST)
            .map(|level| {
                let params = AlphaParams {
                    n_samples: base.n_samples * 4u64.pow(level as u32),
                    exact_cell_budget: base.exact_cell_budget,
                };
                AlphaCache::new(circuit, factory, params)
            })
            .collect();
        ThresholdSolver {
            mem_mode: config.p_mem.mem_mode(),
            epsilon: config.epsilon,
            resamples: config.resamples,
            caches,
            records: Vec::new(),
        }
    }

    fn point(&mut self, p_gate: f64, level: usize) -> Result<PointEstimate> {
        let model = ErrorModel::new(p_gate, self.mem_mode)?;
        let est = estimate_point(&mut self.caches[level], &model, self.epsilon, self.resamples)?;
        self.records.push(ThresholdRecord {
            p_gate,
            p_log: est.p_log,
            stderr: est.p_log_stderr,
            n_samples: self.caches[level].params.n_samples,
        });
        Ok(est)
    }

    /// f(p) = p_log(p) - p with adaptive sample growth: the budget is
    /// boosted while the sign of f is within 2 sigma of zero.
    fn f(&mut self, p_gate: f64) -> Result<(f64, f64)> {
        let mut level = 0;
        loop {
            let est = self.point(p_gate, level)?;
            let f = est.p_log - p_gate;
            if f.abs() >= 2.0 * est.p_log_stderr || level == Self::MAX_BOOST {
                return Ok((f, est.p_log_stderr));
            }
            level += 1;
        }
    }
}

/// Bisection on `f(p) = p_log(p) - p` over the configured bracket.
///
/// Terminates when the bracket's relative width falls below `rel_width` or
/// when statistical uncertainty dominates f at the midpoint even at the
/// maximum sample boost.
pub fn find_threshold(config: &RunConfig) -> Result<ThresholdResult> {
    config.validate()?;
    let circuit = config.build_circuit()?;
    let mut solver = ThresholdSolver::new(&circuit, config);

    let (mut lo, mut hi) = config.bracket;
    let (mut f_lo, _) = solver.f(lo)?;
    let (mut f_hi, _) = solver.f(hi)?;
    if f_lo >= 0.0 || f_hi <= 0.0 {
        return Err(Error::numerical(format!(
            "no sign change in bracket: f({lo:.3e}) = {f_lo:.3e}, f({hi:.3e}) = {f_hi:.3e}"
        )));
    }

    let mut stopped_by = ThresholdStop::BracketWidth;
    while hi / lo - 1.0 >= config.rel_width {
        let mid = (lo * hi).sqrt();
        let (f_mid, stderr) = solver.f(mid)?;
        if f_mid.abs() < stderr {
            // Noise floor reached; the midpoint is our best estimate.
            stopped_by = ThresholdStop::StatisticalFloor;
            lo = mid;
            hi = mid;
            break;
        }
        if f_mid < 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }

    let iterations = solver.records.len();
    Ok(ThresholdResult {
        code: circuit.code.name,
        mem_mode: config.p_mem.mem_mode(),
        p_threshold: (lo * hi).sqrt(),
        bracket: (lo, hi),
        iterations,
        records: solver.records,
        stopped_by,
        seed: config.seed,
        f_low: f_lo,
        f_high: f_hi,
    })
}

/// One sweep row.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub p_gate: f64,
    pub p_mem: f64,
    pub p_log: f64,
    pub p_log_stderr: f64,
    pub trunc_order: usize,
    pub seed: u64,
}

/// Evaluate the logical rate over the configured grid (ascending).
pub fn sweep(config: &RunConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    if config.grid.is_empty() {
        return Err(Error::usage("sweep requires a nonempty grid"));
    }
    let circuit = config.build_circuit()?;
    let factory = RngFactory::new(config.seed);
    let mut cache = AlphaCache::new(&circuit, factory, config.alpha_params());
    let mem_mode = config.p_mem.mem_mode();

    let mut rows = Vec::with_capacity(config.grid.len());
    for &p_gate in &config.grid {
        let model = ErrorModel::new(p_gate, mem_mode)?;
        let est = estimate_point(&mut cache, &model, config.epsilon, config.resamples)?;
        rows.push(SweepRow {
            p_gate,
            p_mem: model.p_mem,
            p_log: est.p_log,
            p_log_stderr: est.p_log_stderr,
            trunc_order: est.transfer.meta.truncation_order,
            seed: config.seed,
        });
    }
    Ok(rows)
}

pub const SWEEP_CSV_HEADER: &str = "p_gate,p_mem,p_log,p_log_stderr,trunc_order,seed";

/// Render sweep rows as CSV with the pinned header, sorted by p_gate.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.p_gate.total_cmp(&b.p_gate));
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in sorted {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.p_gate, r.p_mem, r.p_log, r.p_log_stderr, r.trunc_order, r.seed
        ));
    }
    out
}

/// The p_log = p_gate reference line for the same grid, as CSV.
pub fn diagonal_csv(rows: &[SweepRow]) -> String {
    let mut sorted: Vec<&SweepRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.p_gate.total_cmp(&b.p_gate));
    let mut out = String::from("p_gate,p_log\n");
    for r in sorted {
        out.push_str(&format!("{},{}\n", r.p_gate, r.p_gate));
    }
    out
}

/// Single-point result JSON payload (the `simulate` subcommand output).
#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub code: Code,
    pub p_gate: f64,
    pub p_mem: f64,
    #[serde(rename = "T")]
    pub transfer: [[f64; 5]; 5],
    pub p_log: f64,
    pub stderr: f64,
    pub truncation: Truncation,
    pub seed: u64,
    pub n_samples: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Truncation {
    pub order: usize,
    pub residual_mass: f64,
}

/// Evaluate one operating point and package the result JSON payload.
pub fn simulate_point(config: &RunConfig) -> Result<PointResult> {
    config.validate()?;
    let p_gate = config
        .p_gate
        .ok_or_else(|| Error::usage("simulate requires p_gate in the config"))?;
    let circuit = config.build_circuit()?;
    let factory = RngFactory::new(config.seed);
    let mut cache = AlphaCache::new(&circuit, factory, config.alpha_params());
    let model = ErrorModel::new(p_gate, config.p_mem.mem_mode())?;
    let est = estimate_point(&mut cache, &model, config.epsilon, config.resamples)?;
    Ok(PointResult {
        code: circuit.code.name,
        p_gate,
        p_mem: model.p_mem,
        transfer: est.transfer.entries,
        p_log: est.p_log,
        stderr: est.p_log_stderr,
        truncation: Truncation {
            order: est.transfer.meta.truncation_order,
            residual_mass: est.transfer.meta.residual_mass,
        },
        seed: config.seed,
        n_samples: config.n_samples,
    })
}
