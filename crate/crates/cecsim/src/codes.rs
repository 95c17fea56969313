//! The three supported codes and logical-class bookkeeping.
//!
//! Each [`CodeSpec`] carries the *extended* check lists actually extracted
//! by the circuits — stabilizer generators plus their redundant products —
//! alongside gauge generators, logical operators, minimal-weight decoder
//! tables, and the control patterns of the correction gates.
//!
//! Qubit numbering:
//! - bit-flip (BF): qubits 0..3;
//! - Bacon-Shor (BS): a 3x3 grid in row-major order, rows {0,1,2},
//!   {3,4,5}, {6,7,8} and columns {0,3,6}, {1,4,7}, {2,5,8};
//! - Steane: qubits 0..7, Z generators Z{0,1,2,6}, Z{0,1,3,5}, Z{0,2,3,4}
//!   extended by all products to seven weight-4 checks.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::{multiply, PauliString};

/// Which code to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Code {
    Bf,
    Bs,
    Steane,
}

impl Code {
    pub const ALL: [Code; 3] = [Code::Bf, Code::Bs, Code::Steane];

    pub fn name(&self) -> &'static str {
        match self {
            Code::Bf => "bf",
            Code::Bs => "bs",
            Code::Steane => "steane",
        }
    }
}

impl fmt::Display for Code {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Code {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bf" | "bitflip" | "bit-flip" => Ok(Code::Bf),
            "bs" | "bacon-shor" | "baconshor" => Ok(Code::Bs),
            "steane" => Ok(Code::Steane),
            other => Err(Error::usage(format!("unknown code '{other}' (expected bf, bs, steane)"))),
        }
    }
}

/// Coset category of a data frame after a cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicalClass {
    Correct,
    XErr,
    ZErr,
    YErr,
    Failed,
}

impl LogicalClass {
    /// Fixed ordering used everywhere a class indexes a row or column.
    pub const ALL: [LogicalClass; 5] = [
        LogicalClass::Correct,
        LogicalClass::XErr,
        LogicalClass::ZErr,
        LogicalClass::YErr,
        LogicalClass::Failed,
    ];

    pub fn index(self) -> usize {
        match self {
            LogicalClass::Correct => 0,
            LogicalClass::XErr => 1,
            LogicalClass::ZErr => 2,
            LogicalClass::YErr => 3,
            LogicalClass::Failed => 4,
        }
    }
}

impl fmt::Display for LogicalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LogicalClass::Correct => "Correct",
            LogicalClass::XErr => "XErr",
            LogicalClass::ZErr => "ZErr",
            LogicalClass::YErr => "YErr",
            LogicalClass::Failed => "Failed",
        };
        f.write_str(s)
    }
}

/// Extracted check values: one bit per z_check and per x_check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Syndrome {
    pub z_bits: Vec<bool>,
    pub x_bits: Vec<bool>,
}

impl Syndrome {
    fn z_key(&self) -> u32 {
        pack_bits(&self.z_bits)
    }

    fn x_key(&self) -> u32 {
        pack_bits(&self.x_bits)
    }
}

fn pack_bits(bits: &[bool]) -> u32 {
    bits.iter()
        .enumerate()
        .fold(0u32, |acc, (i, &b)| acc | ((b as u32) << i))
}

/// One correction gate's classical trigger: the ancilla indices it reads,
/// the bit pattern that fires it, and the data qubit it targets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionGroup {
    pub controls: Vec<usize>,
    pub pattern: Vec<bool>,
    pub target: usize,
}

/// Full static description of one code.
#[derive(Debug, Clone, Serialize)]
pub struct CodeSpec {
    pub name: Code,
    pub n_data: usize,
    /// Extracted Z-type checks, generators first, then redundant products.
    pub z_checks: Vec<PauliString>,
    /// Extracted X-type checks (empty for BF).
    pub x_checks: Vec<PauliString>,
    /// Gauge generators (empty for BF and Steane).
    pub gauge_gens: Vec<PauliString>,
    pub logical_x: PauliString,
    pub logical_z: PauliString,
    /// z-syndrome -> minimal X correction, keyed by packed syndrome bits.
    pub decode_x: HashMap<u32, PauliString>,
    /// x-syndrome -> minimal Z correction.
    pub decode_z: HashMap<u32, PauliString>,
    /// Correction gates for the bit-flip half (CorrectX) and phase half (CorrectZ).
    pub correction_groups_x: Vec<CorrectionGroup>,
    pub correction_groups_z: Vec<CorrectionGroup>,
    /// Row-echelon basis over F2 of the group generated by checks and gauge
    /// generators, packed as (x_bits << n) | z_bits.
    #[serde(skip)]
    group_basis: Vec<u64>,
}

impl CodeSpec {
    pub fn new(code: Code) -> CodeSpec {
        let mut spec = match code {
            Code::Bf => Self::bit_flip(),
            Code::Bs => Self::bacon_shor(),
            Code::Steane => Self::steane(),
        };
        spec.decode_x = build_decode_table(&spec, CheckType::Z);
        spec.decode_z = build_decode_table(&spec, CheckType::X);
        spec.group_basis = echelon_basis(
            spec.z_checks
                .iter()
                .chain(spec.x_checks.iter())
                .chain(spec.gauge_gens.iter())
                .map(|p| pack_symplectic(p)),
        );
        debug_assert!(spec.validate_structure().is_ok());
        spec
    }

    fn bit_flip() -> CodeSpec {
        let n = 3;
        let z = |support: &[usize]| PauliString::from_z_support(n, support);
        CodeSpec {
            name: Code::Bf,
            n_data: n,
            z_checks: vec![z(&[0, 1]), z(&[1, 2]), z(&[0, 2])],
            x_checks: vec![],
            gauge_gens: vec![],
            logical_x: PauliString::from_x_support(n, &[0, 1, 2]),
            logical_z: PauliString::from_z_support(n, &[0, 1, 2]),
            decode_x: HashMap::new(),
            decode_z: HashMap::new(),
            correction_groups_x: vec![
                CorrectionGroup { controls: vec![0, 1, 2], pattern: vec![true, false, true], target: 0 },
                CorrectionGroup { controls: vec![0, 1, 2], pattern: vec![true, true, false], target: 1 },
                CorrectionGroup { controls: vec![0, 1, 2], pattern: vec![false, true, true], target: 2 },
            ],
            correction_groups_z: vec![],
            group_basis: vec![],
        }
    }

    fn bacon_shor() -> CodeSpec {
        let n = 9;
        let rows: [&[usize]; 3] = [&[0, 1, 2], &[3, 4, 5], &[6, 7, 8]];
        let cols: [&[usize]; 3] = [&[0, 3, 6], &[1, 4, 7], &[2, 5, 8]];

        let z_span = |a: &[usize], b: &[usize]| {
            let mut support: Vec<usize> = a.to_vec();
            support.extend_from_slice(b);
            PauliString::from_z_support(n, &support)
        };
        let x_span = |a: &[usize], b: &[usize]| {
            let mut support: Vec<usize> = a.to_vec();
            support.extend_from_slice(b);
            PauliString::from_x_support(n, &support)
        };

        // Z_U (rows 0,1), Z_D (rows 1,2), and their product Z_M (rows 0,2);
        // the X checks mirror this by column.
        let z_checks = vec![z_span(rows[0], rows[1]), z_span(rows[1], rows[2]), z_span(rows[0], rows[2])];
        let x_checks = vec![x_span(cols[0], cols[1]), x_span(cols[1], cols[2]), x_span(cols[0], cols[2])];

        let mut gauge_gens = Vec::new();
        for r in 0..3 {
            for c in 0..2 {
                gauge_gens.push(PauliString::from_x_support(n, &[rows[r][c], rows[r][c + 1]]));
            }
        }
        for c in 0..3 {
            for r in 0..2 {
                gauge_gens.push(PauliString::from_z_support(n, &[cols[c][r], cols[c][r + 1]]));
            }
        }

        // Correcting a row (column) error may target any qubit in that row
        // (column); we fix the lowest-index one.
        let patterns = [vec![true, false, true], vec![true, true, false], vec![false, true, true]];
        let correction_groups_x = (0..3)
            .map(|r| CorrectionGroup {
                controls: vec![0, 1, 2],
                pattern: patterns[r].clone(),
                target: rows[r][0],
            })
            .collect();
        let correction_groups_z = (0..3)
            .map(|c| CorrectionGroup {
                controls: vec![0, 1, 2],
                pattern: patterns[c].clone(),
                target: cols[c][0],
            })
            .collect();

        CodeSpec {
            name: Code::Bs,
            n_data: n,
            z_checks,
            x_checks,
            gauge_gens,
            logical_x: PauliString::from_x_support(n, &(0..9).collect::<Vec<_>>()),
            logical_z: PauliString::from_z_support(n, &(0..9).collect::<Vec<_>>()),
            decode_x: HashMap::new(),
            decode_z: HashMap::new(),
            correction_groups_x,
            correction_groups_z,
            group_basis: vec![],
        }
    }

    fn steane() -> CodeSpec {
        let n = 7;
        let generators: [&[usize]; 3] = [&[0, 1, 2, 6], &[0, 1, 3, 5], &[0, 2, 3, 4]];

        // Generators first, then pairwise products, then the triple product:
        // S4 = S1*S2, S5 = S1*S3, S6 = S2*S3, S7 = S1*S2*S3.
        let gen = |s: &[usize]| PauliString::from_z_support(n, s);
        let mut z_checks = vec![gen(generators[0]), gen(generators[1]), gen(generators[2])];
        z_checks.push(multiply(&z_checks[0], &z_checks[1]).unwrap());
        z_checks.push(multiply(&z_checks[0], &z_checks[2]).unwrap());
        z_checks.push(multiply(&z_checks[1], &z_checks[2]).unwrap());
        z_checks.push(multiply(&z_checks[3], &z_checks[2]).unwrap());

        let x_checks: Vec<PauliString> = z_checks
            .iter()
            .map(|p| PauliString { n, x_bits: p.z_bits, z_bits: 0 })
            .collect();

        // Each data qubit is matched to the unique set of four checks that
        // contain it; the correction gate fires on all-ones.
        let incident = |q: usize, checks: &[PauliString]| -> Vec<usize> {
            checks
                .iter()
                .enumerate()
                .filter(|(_, c)| (c.z_bits | c.x_bits) >> q & 1 == 1)
                .map(|(i, _)| i)
                .collect()
        };
        let correction_groups_x = (0..n)
            .map(|q| {
                let controls = incident(q, &z_checks);
                CorrectionGroup { pattern: vec![true; controls.len()], controls, target: q }
            })
            .collect();
        let correction_groups_z = (0..n)
            .map(|q| {
                let controls = incident(q, &x_checks);
                CorrectionGroup { pattern: vec![true; controls.len()], controls, target: q }
            })
            .collect();

        CodeSpec {
            name: Code::Steane,
            n_data: n,
            z_checks,
            x_checks,
            gauge_gens: vec![],
            logical_x: PauliString::from_x_support(n, &(0..7).collect::<Vec<_>>()),
            logical_z: PauliString::from_z_support(n, &(0..7).collect::<Vec<_>>()),
            decode_x: HashMap::new(),
            decode_z: HashMap::new(),
            correction_groups_x,
            correction_groups_z,
            group_basis: vec![],
        }
    }

    /// A code with no X-type checks protects only the computational basis;
    /// it stores a classical bit and phase residues act trivially on it.
    pub fn protects_phase(&self) -> bool {
        !self.x_checks.is_empty()
    }

    /// True iff `frame` lies in the group generated by checks and gauge
    /// generators, i.e. acts trivially on the logical information.
    pub fn in_check_gauge_group(&self, frame: &PauliString) -> bool {
        reduce_by_basis(pack_symplectic(frame), &self.group_basis) == 0
    }

    /// Sanity checks on the commutation structure; used by tests and debug builds.
    pub fn validate_structure(&self) -> Result<()> {
        let all_checks: Vec<&PauliString> = self.z_checks.iter().chain(self.x_checks.iter()).collect();
        for (i, a) in all_checks.iter().enumerate() {
            for b in &all_checks[i + 1..] {
                if a.anticommutes_with(b) {
                    return Err(Error::validation(format!("checks {a} and {b} anticommute")));
                }
            }
        }
        if !self.logical_x.anticommutes_with(&self.logical_z) {
            return Err(Error::validation("logical X must anticommute with logical Z"));
        }
        for check in all_checks.iter().copied().chain(self.gauge_gens.iter()) {
            if self.logical_x.anticommutes_with(check) || self.logical_z.anticommutes_with(check) {
                return Err(Error::validation(format!(
                    "logical operator anticommutes with {check}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CheckType {
    /// Z-type checks detect X errors.
    Z,
    /// X-type checks detect Z errors.
    X,
}

/// Decoder tables are built once by exhaustive minimal-weight search over
/// error patterns of weight <= 2 (weight 1 already covers every syndrome a
/// single data error can produce); ties break toward the lowest qubit
/// indices by enumeration order.
fn build_decode_table(spec: &CodeSpec, kind: CheckType) -> HashMap<u32, PauliString> {
    let n = spec.n_data;
    let checks = match kind {
        CheckType::Z => &spec.z_checks,
        CheckType::X => &spec.x_checks,
    };
    let error_of = |support: &[usize]| match kind {
        CheckType::Z => PauliString::from_x_support(n, support),
        CheckType::X => PauliString::from_z_support(n, support),
    };
    let syndrome_of = |e: &PauliString| -> u32 {
        pack_bits(&checks.iter().map(|c| e.anticommutes_with(c)).collect::<Vec<_>>())
    };

    let mut table = HashMap::new();
    table.insert(0, PauliString::identity(n));
    for q in 0..n {
        let e = error_of(&[q]);
        table.entry(syndrome_of(&e)).or_insert(e);
    }
    for a in 0..n {
        for b in a + 1..n {
            let e = error_of(&[a, b]);
            table.entry(syndrome_of(&e)).or_insert(e);
        }
    }
    table
}

/// Check values of `frame`: bit i of `z_bits` is set iff the frame
/// anticommutes with `z_checks[i]`, and likewise for `x_bits`.
pub fn syndrome(code: &CodeSpec, frame: &PauliString) -> Syndrome {
    debug_assert_eq!(frame.n, code.n_data);
    Syndrome {
        z_bits: code.z_checks.iter().map(|c| frame.anticommutes_with(c)).collect(),
        x_bits: code.x_checks.iter().map(|c| frame.anticommutes_with(c)).collect(),
    }
}

/// The decoder-table correction for a syndrome: identity for the zero
/// syndrome, a minimal-weight representative otherwise. Syndromes no data
/// error can produce (extraction-error artifacts) decode to identity.
pub fn minimal_correction(code: &CodeSpec, s: &Syndrome) -> PauliString {
    let x_corr = code
        .decode_x
        .get(&s.z_key())
        .copied()
        .unwrap_or_else(|| PauliString::identity(code.n_data));
    let z_corr = code
        .decode_z
        .get(&s.x_key())
        .copied()
        .unwrap_or_else(|| PauliString::identity(code.n_data));
    multiply(&x_corr, &z_corr).unwrap()
}

/// Classify a residual frame into one of the five logical classes.
///
/// The frame splits into independent X and Z parts (all codes here are
/// CSS). Each part is decoded by the lookup table; the part fails if the
/// decoded residue lies outside the check/gauge group, and counts as
/// corrected if it was outside the group before decoding but inside after.
/// For the bit-flip code the Z part is skipped entirely: with no X-type
/// checks the code stores a classical bit, and phase residues act
/// trivially on it.
pub fn classify(code: &CodeSpec, frame: &PauliString) -> LogicalClass {
    debug_assert_eq!(frame.n, code.n_data);

    let (x_failed, x_corrected) = classify_part(code, &frame.x_part(), CheckType::Z);
    let (z_failed, z_corrected) = if code.protects_phase() {
        classify_part(code, &frame.z_part(), CheckType::X)
    } else {
        (false, false)
    };

    if x_failed || z_failed {
        return LogicalClass::Failed;
    }
    match (x_corrected, z_corrected) {
        (false, false) => LogicalClass::Correct,
        (true, false) => LogicalClass::XErr,
        (false, true) => LogicalClass::ZErr,
        (true, true) => LogicalClass::YErr,
    }
}

fn classify_part(code: &CodeSpec, part: &PauliString, kind: CheckType) -> (bool, bool) {
    let checks = match kind {
        CheckType::Z => &code.z_checks,
        CheckType::X => &code.x_checks,
    };
    let table = match kind {
        CheckType::Z => &code.decode_x,
        CheckType::X => &code.decode_z,
    };
    let key = pack_bits(&checks.iter().map(|c| part.anticommutes_with(c)).collect::<Vec<_>>());
    let correction = table
        .get(&key)
        .copied()
        .unwrap_or_else(|| PauliString::identity(code.n_data));
    let residue = multiply(part, &correction).unwrap();

    let clean_after = code.in_check_gauge_group(&residue);
    if !clean_after {
        return (true, false);
    }
    let clean_before = code.in_check_gauge_group(part);
    (false, !clean_before)
}

/// Weights, degrees and pairwise overlaps of a code's Z-type checks.
#[derive(Debug, Clone, Serialize)]
pub struct IncidenceReport {
    pub code: Code,
    pub check_weights: Vec<u32>,
    pub qubit_degrees: Vec<u32>,
    /// Overlap |support(i) ∩ support(j)| for every pair i < j.
    pub pair_overlaps: Vec<(usize, usize, u32)>,
    /// True iff the qubit -> incident-check-set map is injective.
    pub incidence_injective: bool,
}

/// Compute the incidence structure of the Z checks. For the Steane code
/// this additionally enforces the defining structure of the extended check
/// set: every check weight 4, every qubit degree 4, every pairwise overlap
/// exactly 2, and distinct qubits touching distinct check sets.
pub fn check_incidence(code: &CodeSpec) -> Result<IncidenceReport> {
    let supports: Vec<u32> = code.z_checks.iter().map(|c| c.z_bits | c.x_bits).collect();
    let check_weights: Vec<u32> = supports.iter().map(|s| s.count_ones()).collect();
    let qubit_degrees: Vec<u32> = (0..code.n_data)
        .map(|q| supports.iter().filter(|s| (*s >> q) & 1 == 1).count() as u32)
        .collect();
    let mut pair_overlaps = Vec::new();
    for i in 0..supports.len() {
        for j in i + 1..supports.len() {
            pair_overlaps.push((i, j, (supports[i] & supports[j]).count_ones()));
        }
    }
    let mut columns: Vec<u32> = (0..code.n_data)
        .map(|q| {
            supports
                .iter()
                .enumerate()
                .fold(0u32, |acc, (i, s)| acc | (((s >> q) & 1) << i))
        })
        .collect();
    columns.sort_unstable();
    columns.dedup();
    let incidence_injective = columns.len() == code.n_data;

    let report = IncidenceReport {
        code: code.name,
        check_weights,
        qubit_degrees,
        pair_overlaps,
        incidence_injective,
    };

    if code.name == Code::Steane {
        if report.check_weights.iter().any(|&w| w != 4) {
            return Err(Error::validation(format!(
                "steane check weights must all be 4, got {:?}",
                report.check_weights
            )));
        }
        if report.qubit_degrees.iter().any(|&d| d != 4) {
            return Err(Error::validation(format!(
                "steane qubit degrees must all be 4, got {:?}",
                report.qubit_degrees
            )));
        }
        if report.pair_overlaps.iter().any(|&(_, _, o)| o != 2) {
            return Err(Error::validation("steane pairwise check overlaps must all be 2"));
        }
        if !report.incidence_injective {
            return Err(Error::validation("steane qubit -> check-set map must be injective"));
        }
    }
    Ok(report)
}

fn pack_symplectic(p: &PauliString) -> u64 {
    ((p.x_bits as u64) << p.n) | p.z_bits as u64
}

/// Row-echelon basis of a set of F2 vectors.
fn echelon_basis(vectors: impl Iterator<Item = u64>) -> Vec<u64> {
    let mut basis: Vec<u64> = Vec::new();
    for mut v in vectors {
        v = reduce_by_basis(v, &basis);
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis
}

fn reduce_by_basis(mut v: u64, basis: &[u64]) -> u64 {
    for &b in basis {
        let lead = 63 - b.leading_zeros();
        if v >> lead & 1 == 1 {
            v ^= b;
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{anticommutes_with_z, Pauli};
    use proptest::prelude::*;

    fn bits(s: &Syndrome) -> Vec<u8> {
        s.z_bits.iter().map(|&b| b as u8).collect()
    }

    #[test]
    fn bf_syndromes_for_single_bit_flips() {
        let code = CodeSpec::new(Code::Bf);
        // Columns of the correctly-extracted-syndrome table for |000>,
        // |100>, |010>, |001> in (Z1Z2, Z2Z3, Z1Z3) order.
        let cases = [
            (None, vec![0, 0, 0]),
            (Some(0), vec![1, 0, 1]),
            (Some(1), vec![1, 1, 0]),
            (Some(2), vec![0, 1, 1]),
        ];
        for (qubit, want) in cases {
            let frame = match qubit {
                Some(q) => PauliString::single(3, q, Pauli::X),
                None => PauliString::identity(3),
            };
            assert_eq!(bits(&syndrome(&code, &frame)), want, "frame {frame}");
        }
    }

    #[test]
    fn steane_syndrome_matches_brute_force_oracle() {
        let code = CodeSpec::new(Code::Steane);
        // X on the first qubit touches exactly the four checks containing it.
        let frame = PauliString::single(7, 0, Pauli::X);
        assert_eq!(bits(&syndrome(&code, &frame)), vec![1, 1, 1, 0, 0, 0, 1]);

        // Oracle: count anticommutation per check by explicit per-qubit scan.
        for q in 0..7 {
            let frame = PauliString::single(7, q, Pauli::X);
            let s = syndrome(&code, &frame);
            for (i, check) in code.z_checks.iter().enumerate() {
                let mut overlap = 0;
                for k in 0..7 {
                    let frame_x = anticommutes_with_z(&frame, k);
                    let check_z = (check.z_bits >> k) & 1 == 1;
                    if frame_x && check_z {
                        overlap += 1;
                    }
                }
                assert_eq!(s.z_bits[i], overlap % 2 == 1);
            }
        }
    }

    #[test]
    fn bf_classifies_single_bit_flip_as_correctable() {
        let code = CodeSpec::new(Code::Bf);
        let frame = PauliString::single(3, 1, Pauli::X);
        assert_eq!(classify(&code, &frame), LogicalClass::XErr);
    }

    #[test]
    fn bf_phase_residues_are_inert() {
        // The bit-flip code stores a classical bit: phase residues act
        // trivially on it and are never counted as errors or failures.
        let code = CodeSpec::new(Code::Bf);
        for q in 0..3 {
            let frame = PauliString::single(3, q, Pauli::Z);
            assert_eq!(classify(&code, &frame), LogicalClass::Correct);
        }
        // A Y residue is a correctable bit flip plus inert phase.
        let frame = PauliString::single(3, 0, Pauli::Y);
        assert_eq!(classify(&code, &frame), LogicalClass::XErr);
    }

    #[test]
    fn bf_logical_flip_fails() {
        let code = CodeSpec::new(Code::Bf);
        let frame = PauliString::from_x_support(3, &[0, 1, 2]);
        assert_eq!(classify(&code, &frame), LogicalClass::Failed);
        // Two bit flips decode to the third qubit and leave a logical flip.
        let frame = PauliString::from_x_support(3, &[0, 1]);
        assert_eq!(classify(&code, &frame), LogicalClass::Failed);
    }

    #[test]
    fn bs_same_row_pair_is_gauge_equivalent_to_identity() {
        let code = CodeSpec::new(Code::Bs);
        let frame = PauliString::from_x_support(9, &[0, 1]);
        assert_eq!(classify(&code, &frame), LogicalClass::Correct);
        // Same-column Z pair likewise.
        let frame = PauliString::from_z_support(9, &[1, 4]);
        assert_eq!(classify(&code, &frame), LogicalClass::Correct);
    }

    #[test]
    fn bs_and_steane_correct_every_single_qubit_pauli() {
        for code in [CodeSpec::new(Code::Bs), CodeSpec::new(Code::Steane)] {
            for q in 0..code.n_data {
                for p in Pauli::NONTRIVIAL {
                    let frame = PauliString::single(code.n_data, q, p);
                    let got = classify(&code, &frame);
                    let want = match p {
                        Pauli::X => LogicalClass::XErr,
                        Pauli::Z => LogicalClass::ZErr,
                        _ => LogicalClass::YErr,
                    };
                    assert_eq!(got, want, "{} {p} on q{q}", code.name);
                }
            }
        }
    }

    #[test]
    fn classify_identity_is_correct_for_all_codes() {
        for code in Code::ALL {
            let spec = CodeSpec::new(code);
            assert_eq!(
                classify(&spec, &PauliString::identity(spec.n_data)),
                LogicalClass::Correct
            );
        }
    }

    #[test]
    fn minimal_correction_examples() {
        let bf = CodeSpec::new(Code::Bf);
        let s = Syndrome { z_bits: vec![true, false, true], x_bits: vec![] };
        assert_eq!(minimal_correction(&bf, &s), PauliString::single(3, 0, Pauli::X));

        let steane = CodeSpec::new(Code::Steane);
        // The four checks incident on q4 (the fifth qubit).
        let frame = PauliString::single(7, 4, Pauli::X);
        let s = syndrome(&steane, &frame);
        assert_eq!(minimal_correction(&steane, &s), frame);
        // Scan all incidence columns: each single error decodes to itself.
        for q in 0..7 {
            let frame = PauliString::single(7, q, Pauli::X);
            assert_eq!(minimal_correction(&steane, &syndrome(&steane, &frame)), frame);
        }

        for code in Code::ALL {
            let spec = CodeSpec::new(code);
            let zero = Syndrome {
                z_bits: vec![false; spec.z_checks.len()],
                x_bits: vec![false; spec.x_checks.len()],
            };
            assert!(minimal_correction(&spec, &zero).is_identity());
        }
    }

    #[test]
    fn single_error_plus_its_correction_is_clean() {
        for code in Code::ALL {
            let spec = CodeSpec::new(code);
            for q in 0..spec.n_data {
                for p in Pauli::NONTRIVIAL {
                    if code == Code::Bf && p != Pauli::X {
                        continue;
                    }
                    let frame = PauliString::single(spec.n_data, q, p);
                    let corr = minimal_correction(&spec, &syndrome(&spec, &frame));
                    let residue = multiply(&frame, &corr).unwrap();
                    assert_eq!(
                        classify(&spec, &residue),
                        LogicalClass::Correct,
                        "{code:?} {p} on q{q}"
                    );
                }
            }
        }
    }

    #[test]
    fn steane_incidence_structure() {
        let code = CodeSpec::new(Code::Steane);
        let report = check_incidence(&code).unwrap();
        assert_eq!(report.check_weights, vec![4; 7]);
        assert_eq!(report.qubit_degrees, vec![4; 7]);
        assert!(report.pair_overlaps.iter().all(|&(_, _, o)| o == 2));
        assert!(report.incidence_injective);
    }

    #[test]
    fn bf_incidence_overlaps_are_one() {
        let code = CodeSpec::new(Code::Bf);
        let report = check_incidence(&code).unwrap();
        assert!(report.pair_overlaps.iter().all(|&(_, _, o)| o == 1));
    }

    #[test]
    fn bf_logical_z_coset_enumeration() {
        // Exhaustive oracle: the BF check group has exactly 4 elements;
        // Z on one qubit is in none of their cosets' trivial class but in
        // the logical-Z coset (logical_z times a group element).
        let code = CodeSpec::new(Code::Bf);
        let group: Vec<PauliString> = vec![
            PauliString::identity(3),
            code.z_checks[0],
            code.z_checks[1],
            code.z_checks[2],
        ];
        let z1 = PauliString::single(3, 0, Pauli::Z);
        assert!(group.iter().all(|g| *g != z1));
        assert!(!code.in_check_gauge_group(&z1));
        assert!(group
            .iter()
            .any(|g| multiply(g, &code.logical_z).unwrap() == z1));
    }

    #[test]
    fn structure_validates_for_all_codes() {
        for code in Code::ALL {
            CodeSpec::new(code).validate_structure().unwrap();
        }
    }

    #[test]
    fn codespec_serializes_to_json() {
        let code = CodeSpec::new(Code::Bf);
        let json = serde_json::to_value(&code).unwrap();
        assert_eq!(json["n_data"], 3);
        assert_eq!(json["z_checks"].as_array().unwrap().len(), 3);
    }

    proptest! {
        /// Multiplying by any check or gauge generator never changes the class.
        #[test]
        fn classify_is_gauge_invariant(
            code_idx in 0usize..3,
            x_bits in 0u32..512,
            z_bits in 0u32..512,
        ) {
            let spec = CodeSpec::new(Code::ALL[code_idx]);
            let mask = (1u32 << spec.n_data) - 1;
            let frame = PauliString {
                n: spec.n_data,
                x_bits: x_bits & mask,
                z_bits: z_bits & mask,
            };
            let base = classify(&spec, &frame);
            for g in spec
                .z_checks
                .iter()
                .chain(spec.x_checks.iter())
                .chain(spec.gauge_gens.iter())
            {
                let shifted = multiply(&frame, g).unwrap();
                prop_assert_eq!(classify(&spec, &shifted), base);
            }
        }
    }
}
