//! Structural and fault-tolerance verification suites.
//!
//! Fast structural checks: check incidence structure, the single-bit-flip
//! syndrome table, the even-parity property of redundant extraction, and
//! the pinned extraction gate counts. The exhaustive suite then drives
//! every possible single-fault path through a cycle and demands full
//! recovery after one clean follow-up cycle.

use rayon::prelude::*;
use serde::Serialize;

use crate::circuit::{build_cycle, CecCircuit, CircuitOptions};
use crate::codes::{check_incidence, classify, Code, CodeSpec, LogicalClass};
use crate::error::Result;
use crate::estimator::run_cycle;
use crate::noise::{all_pairs, FaultPath, MemFault};
use crate::pauli::{
    apply_gate_deterministic, FrameState, GateKind, Pauli, PauliString, SitePauli,
};

#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<VerifyCheck>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: impl Into<String>, result: Result<String>) -> VerifyCheck {
    match result {
        Ok(detail) => VerifyCheck { name: name.into(), passed: true, detail },
        Err(e) => VerifyCheck { name: name.into(), passed: false, detail: e.to_string() },
    }
}

fn fail_if(condition: bool, msg: String, ok: String) -> Result<String> {
    if condition {
        Err(crate::error::Error::validation(msg))
    } else {
        Ok(ok)
    }
}

/// Run every verification suite for the given codes.
pub fn run_verify(codes: &[Code], options: CircuitOptions) -> VerifyReport {
    let mut checks = Vec::new();
    for &code in codes {
        let spec = CodeSpec::new(code);
        let circuit = build_cycle(&spec, options);

        checks.push(check(format!("{code}: commutation structure"), {
            spec.validate_structure().map(|_| "all checks commute, logicals anticommute".into())
        }));

        checks.push(check(format!("{code}: check incidence"), incidence_check(&spec)));

        if code == Code::Bf {
            checks.push(check("bf: single-bit-flip syndrome table", bf_syndrome_table(&spec)));
            checks.push(check("bf: even extraction parity", extraction_parity(&circuit, &[0, 2])));
        }
        if code == Code::Steane {
            checks.push(check(
                "steane: extraction parity 0 or 4",
                extraction_parity(&circuit, &[0, 4]),
            ));
        }

        checks.push(check(format!("{code}: extraction gate count"), extraction_count(&circuit)));
        checks.push(check(
            format!("{code}: single-fault recovery"),
            single_fault_exhaustion(&circuit),
        ));
    }
    VerifyReport { checks }
}

fn incidence_check(spec: &CodeSpec) -> Result<String> {
    let report = check_incidence(spec)?;
    Ok(format!(
        "weights {:?}, degrees {:?}, overlaps {:?}",
        report.check_weights,
        report.qubit_degrees,
        report.pair_overlaps.iter().map(|&(_, _, o)| o).collect::<Vec<_>>()
    ))
}

/// All four columns of the correctly-extracted-syndrome table for single
/// bit flips on the |000> codeword.
fn bf_syndrome_table(spec: &CodeSpec) -> Result<String> {
    let columns: [(Option<usize>, [bool; 3]); 4] = [
        (None, [false, false, false]),
        (Some(0), [true, false, true]),
        (Some(1), [true, true, false]),
        (Some(2), [false, true, true]),
    ];
    for (qubit, want) in columns {
        let frame = match qubit {
            Some(q) => PauliString::single(3, q, Pauli::X),
            None => PauliString::identity(3),
        };
        let got = crate::codes::syndrome(spec, &frame);
        fail_if(
            got.z_bits != want,
            format!("syndrome of {frame} is {:?}, expected {want:?}", got.z_bits),
            String::new(),
        )?;
    }
    Ok("all four columns reproduced".into())
}

/// Noiseless extraction of every single-X data error must set a number of
/// ancillas from `allowed` (an even count: errors during extraction are
/// detectable by parity).
fn extraction_parity(circuit: &CecCircuit, allowed: &[usize]) -> Result<String> {
    let n = circuit.n_data();
    for q in 0..n {
        let mut state = FrameState::with_frame(
            PauliString::single(n, q, Pauli::X),
            circuit.n_ancilla,
        );
        for gate in &circuit.gates {
            if !matches!(gate.kind, GateKind::ExtractZ { .. }) {
                break;
            }
            apply_gate_deterministic(&mut state, &gate.kind).unwrap();
        }
        let ones = state.ancillas.mask().count_ones() as usize;
        fail_if(
            !allowed.contains(&ones),
            format!("X on q{q} lit {ones} ancillas, allowed {allowed:?}"),
            String::new(),
        )?;
    }
    Ok(format!("every single X error lights an ancilla count in {allowed:?}"))
}

fn extraction_count(circuit: &CecCircuit) -> Result<String> {
    let count = circuit
        .gates
        .iter()
        .filter(|g| matches!(g.kind, GateKind::ExtractZ { .. } | GateKind::ExtractX { .. }))
        .count();
    let want = match circuit.code.name {
        Code::Bf => 6,
        Code::Bs => 36,
        Code::Steane => 56,
    };
    fail_if(
        count != want,
        format!("{} extraction CNOTs, expected {want}", count),
        format!("{count} extraction CNOTs"),
    )
}

/// The fault set a single-fault exhaustion sweeps per site. The bit-flip
/// code is exercised with X-type components only (its phase sector is
/// unprotected by construction); the full code sweeps all Paulis.
fn exhaustion_fault_sets(code: Code) -> (Vec<Pauli>, Vec<SitePauli>) {
    match code {
        Code::Bf => (
            vec![Pauli::X],
            vec![
                SitePauli::Pair(Pauli::I, Pauli::X),
                SitePauli::Pair(Pauli::X, Pauli::I),
                SitePauli::Pair(Pauli::X, Pauli::X),
            ],
        ),
        _ => (Pauli::NONTRIVIAL.to_vec(), all_pairs()),
    }
}

/// Every single-fault path, followed by one noiseless cycle, must land in
/// class Correct. Returns the number of paths checked.
pub fn single_fault_exhaustion(circuit: &CecCircuit) -> Result<String> {
    let (mem_paulis, pair_paulis) = exhaustion_fault_sets(circuit.code.name);
    let single_paulis: Vec<SitePauli> = match circuit.code.name {
        Code::Bf => vec![SitePauli::Single(Pauli::X)],
        _ => Pauli::NONTRIVIAL.iter().map(|&p| SitePauli::Single(p)).collect(),
    };

    let mut paths: Vec<FaultPath> = Vec::new();
    for layer in 0..circuit.t {
        for qubit in 0..circuit.q {
            for &pauli in &mem_paulis {
                paths.push(FaultPath {
                    mem_faults: vec![MemFault { qubit, layer, pauli }],
                    gate_faults: vec![],
                });
            }
        }
    }
    for site in 0..circuit.g() {
        let labels = if crate::noise::site_is_single(circuit, site) {
            &single_paulis
        } else {
            &pair_paulis
        };
        for &pauli in labels {
            paths.push(FaultPath { mem_faults: vec![], gate_faults: vec![(site, pauli)] });
        }
    }

    let total = paths.len();
    let failures: Vec<String> = paths
        .par_iter()
        .filter_map(|path| {
            let mut state = FrameState::new(circuit.n_data(), circuit.n_ancilla);
            run_cycle(circuit, &mut state, path);
            run_cycle(circuit, &mut state, &FaultPath::empty());
            let class = classify(&circuit.code, &state.data);
            (class != LogicalClass::Correct).then(|| format!("{path:?} -> {class}"))
        })
        .collect();

    fail_if(
        !failures.is_empty(),
        format!("{} of {total} single-fault paths failed; first: {}", failures.len(), failures[0]),
        format!("all {total} single-fault paths recover"),
    )
}
