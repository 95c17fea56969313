//! Two-parameter error model, exact fault-path weights, and fault-path
//! sampling conditioned on exact fault counts.
//!
//! Every memory site (each of the `q` qubits at each of the `t` layers)
//! faults independently with probability `p_mem`; every gate site with
//! `p_gate`. A path with exactly `i` memory and `j` gate faults therefore
//! has probability
//!
//! ```text
//! P(i,j) = C(qt,i) C(g,j) p_mem^i (1-p_mem)^(qt-i) p_gate^j (1-p_gate)^(g-j)
//! ```
//!
//! Memory faults draw a uniform single-qubit Pauli from {X,Y,Z}; gate
//! faults draw uniformly from the 15 nontrivial two-qubit Paulis (the
//! identity pair is excluded: a fault is a nontrivial event). A fault
//! component landing on an ancilla flips its classical bit iff the
//! component is X or Y.

use rand::seq::index::sample as index_sample;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::circuit::CecCircuit;
use crate::error::{Error, Result};
use crate::pauli::{Pauli, SitePauli};

/// How the memory rate is derived from the gate rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MemMode {
    /// p_mem = 0.
    Zero,
    /// p_mem fixed to the given value.
    Fixed(f64),
    /// p_mem = p_gate at evaluation time.
    Tied,
}

impl MemMode {
    pub fn resolve(&self, p_gate: f64) -> f64 {
        match self {
            MemMode::Zero => 0.0,
            MemMode::Fixed(v) => *v,
            MemMode::Tied => p_gate,
        }
    }
}

/// The two-parameter error model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorModel {
    pub p_gate: f64,
    pub p_mem: f64,
}

impl ErrorModel {
    pub fn new(p_gate: f64, mem_mode: MemMode) -> Result<ErrorModel> {
        let p_mem = mem_mode.resolve(p_gate);
        for (name, p) in [("p_gate", p_gate), ("p_mem", p_mem)] {
            if !(0.0..1.0).contains(&p) {
                return Err(Error::usage(format!("{name} must be in [0, 1), got {p}")));
            }
        }
        Ok(ErrorModel { p_gate, p_mem })
    }
}

/// A single memory fault: a Pauli at one (qubit, layer) grid point.
/// Qubits `0..n_data` are data, `n_data..q` are ancillas.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MemFault {
    pub qubit: usize,
    pub layer: usize,
    pub pauli: Pauli,
}

/// A concrete assignment of Pauli faults to distinct error sites for one cycle.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FaultPath {
    pub mem_faults: Vec<MemFault>,
    pub gate_faults: Vec<(usize, SitePauli)>,
}

impl FaultPath {
    pub fn empty() -> FaultPath {
        FaultPath::default()
    }

    pub fn is_empty(&self) -> bool {
        self.mem_faults.is_empty() && self.gate_faults.is_empty()
    }

    /// Sort faults into execution order (memory by layer, gates by site id).
    pub fn normalize(&mut self) {
        self.mem_faults.sort_by_key(|f| (f.layer, f.qubit));
        self.gate_faults.sort_by_key(|&(site, _)| site);
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `count` faults at rate `p` over `n` sites, log of one term's weight
/// including the binomial placement factor. Exact at p = 0.
fn ln_binomial_term(n: usize, count: usize, p: f64) -> f64 {
    if p == 0.0 {
        return if count == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    ln_binomial(n, count) + count as f64 * p.ln() + (n - count) as f64 * (1.0 - p).ln()
}

/// log P(i,j) for a circuit with dimensions (q, t, g).
pub fn log_path_weight(dims: (usize, usize, usize), model: &ErrorModel, i: usize, j: usize) -> Result<f64> {
    let (q, t, g) = dims;
    let qt = q * t;
    if i > qt {
        return Err(Error::usage(format!("i={i} exceeds the {qt} memory sites")));
    }
    if j > g {
        return Err(Error::usage(format!("j={j} exceeds the {g} gate sites")));
    }
    Ok(ln_binomial_term(qt, i, model.p_mem) + ln_binomial_term(g, j, model.p_gate))
}

/// All (i, j) with i + j <= W for the smallest W whose excluded tail mass
/// is below `epsilon * P(0,0)`. Zero-probability pairs (a positive count at
/// a zero rate) are dropped; (0,0) is always present.
pub fn truncation_set(
    dims: (usize, usize, usize),
    model: &ErrorModel,
    epsilon: f64,
) -> Result<Vec<(usize, usize)>> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::usage(format!("epsilon must be in (0,1), got {epsilon}")));
    }
    let (q, t, g) = dims;
    let qt = q * t;
    let max_order = qt + g;

    let p00 = log_path_weight(dims, model, 0, 0)?.exp();
    let target = epsilon * p00;

    let mut included = 0.0;
    let mut order = 0usize;
    loop {
        for i in 0..=order.min(qt) {
            let j = order - i;
            if j > g {
                continue;
            }
            included += log_path_weight(dims, model, i, j)?.exp();
        }
        if 1.0 - included < target || order == max_order {
            break;
        }
        order += 1;
    }

    let mut set = Vec::new();
    for w in 0..=order {
        for i in 0..=w.min(qt) {
            let j = w - i;
            if j > g {
                continue;
            }
            if (i > 0 && model.p_mem == 0.0) || (j > 0 && model.p_gate == 0.0) {
                continue;
            }
            set.push((i, j));
        }
    }
    Ok(set)
}

/// Uniformly choose `i` distinct memory sites and `j` distinct gate sites,
/// with uniform Pauli labels per fault.
pub fn sample_fault_path<R: Rng>(
    circuit: &CecCircuit,
    i: usize,
    j: usize,
    rng: &mut R,
) -> Result<FaultPath> {
    let qt = circuit.mem_sites();
    let g = circuit.g();
    if i > qt {
        return Err(Error::usage(format!("requested {i} memory faults but only {qt} sites")));
    }
    if j > g {
        return Err(Error::usage(format!("requested {j} gate faults but only {g} sites")));
    }

    let mut path = FaultPath::empty();
    if i > 0 {
        for site in index_sample(rng, qt, i) {
            path.mem_faults.push(MemFault {
                qubit: site % circuit.q,
                layer: site / circuit.q,
                pauli: random_memory_pauli(rng),
            });
        }
    }
    if j > 0 {
        for site in index_sample(rng, g, j) {
            path.gate_faults.push((site, random_site_pauli(circuit, site, rng)));
        }
    }
    path.normalize();
    Ok(path)
}

/// Unconditional per-site faulting: every site flips a coin independently.
/// Used by the direct Monte Carlo cross-check.
pub fn sample_unconditional<R: Rng>(circuit: &CecCircuit, model: &ErrorModel, rng: &mut R) -> FaultPath {
    let mut path = FaultPath::empty();
    if model.p_mem > 0.0 {
        let qt = circuit.mem_sites();
        let count = rand_distr::Binomial::new(qt as u64, model.p_mem).unwrap();
        let n = rng.sample(count) as usize;
        for site in index_sample(rng, qt, n) {
            path.mem_faults.push(MemFault {
                qubit: site % circuit.q,
                layer: site / circuit.q,
                pauli: random_memory_pauli(rng),
            });
        }
    }
    if model.p_gate > 0.0 {
        let g = circuit.g();
        let count = rand_distr::Binomial::new(g as u64, model.p_gate).unwrap();
        let n = rng.sample(count) as usize;
        for site in index_sample(rng, g, n) {
            path.gate_faults.push((site, random_site_pauli(circuit, site, rng)));
        }
    }
    path.normalize();
    path
}

pub fn random_memory_pauli<R: Rng>(rng: &mut R) -> Pauli {
    Pauli::NONTRIVIAL[rng.gen_range(0..3)]
}

/// Uniform fault label for a gate site: one of the 15 nontrivial two-qubit
/// Paulis for pair sites, one of {X,Y,Z} for single-qubit polarity sites.
pub fn random_site_pauli<R: Rng>(circuit: &CecCircuit, site: usize, rng: &mut R) -> SitePauli {
    if site_is_single(circuit, site) {
        SitePauli::Single(random_memory_pauli(rng))
    } else {
        pair_from_index(rng.gen_range(1..16))
    }
}

pub(crate) fn site_is_single(circuit: &CecCircuit, site: usize) -> bool {
    let gate = circuit.gate_sites[site].gate;
    matches!(circuit.gates[gate].kind, crate::pauli::GateKind::PolarityX { .. })
}

/// Decode a two-qubit Pauli from its index in 1..16 (base-4 digits over
/// I, X, Y, Z; 0 would be the identity pair and is excluded).
pub fn pair_from_index(index: usize) -> SitePauli {
    debug_assert!((1..16).contains(&index));
    SitePauli::Pair(Pauli::ALL[index >> 2], Pauli::ALL[index & 3])
}

/// All 15 nontrivial two-qubit Paulis in index order.
pub fn all_pairs() -> Vec<SitePauli> {
    (1..16).map(pair_from_index).collect()
}
