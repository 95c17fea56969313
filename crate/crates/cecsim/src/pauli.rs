//! Phase-free Pauli algebra and deterministic frame propagation.
//!
//! The simulation state is a [`FrameState`]: a residual Pauli error on the
//! data qubits (tracked in symplectic form, global phase untracked) plus a
//! register of classical ancilla bits. All circuit gates used here map
//! Pauli frames to Pauli frames, so one cycle is simulated by a handful of
//! bitmask operations instead of a full stabilizer tableau.
//!
//! Ancillas are modeled as classical bits throughout: they are written by
//! extraction CNOTs, read by the multi-controlled correction gates, and
//! cleared by resets. No Z-type information is ever stored for an ancilla,
//! so a Z fault landing on one is a no-op.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Single-qubit Pauli operator (phase ignored).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    /// The three faults a depolarizing event can inject.
    pub const NONTRIVIAL: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    /// True iff the operator has an X component (X or Y).
    pub fn has_x(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// True iff the operator has a Z component (Z or Y).
    pub fn has_z(self) -> bool {
        matches!(self, Pauli::Z | Pauli::Y)
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{c}")
    }
}

/// An n-qubit Pauli operator in symplectic (x-bits, z-bits) form.
///
/// Bit `i` of `x_bits` is set iff the operator acts as X or Y on qubit `i`;
/// bit `i` of `z_bits` iff it acts as Z or Y. Products are bitwise XOR on
/// both masks; the global phase is deliberately untracked, which is safe
/// because every circuit here is Clifford + classically controlled Paulis
/// and frame classification is phase-insensitive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliString {
    pub n: usize,
    pub x_bits: u32,
    pub z_bits: u32,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= 32, "PauliString supports at most 32 qubits");
        PauliString { n, x_bits: 0, z_bits: 0 }
    }

    /// Single-qubit Pauli embedded in an n-qubit string.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        assert!(qubit < n, "qubit {qubit} out of range for n={n}");
        let mut s = Self::identity(n);
        s.apply(qubit, p);
        s
    }

    /// X on every qubit in `support`.
    pub fn from_x_support(n: usize, support: &[usize]) -> Self {
        let mut s = Self::identity(n);
        for &q in support {
            assert!(q < n);
            s.x_bits |= 1 << q;
        }
        s
    }

    /// Z on every qubit in `support`.
    pub fn from_z_support(n: usize, support: &[usize]) -> Self {
        let mut s = Self::identity(n);
        for &q in support {
            assert!(q < n);
            s.z_bits |= 1 << q;
        }
        s
    }

    pub fn is_identity(&self) -> bool {
        self.x_bits == 0 && self.z_bits == 0
    }

    /// Number of qubits acted on nontrivially.
    pub fn weight(&self) -> u32 {
        (self.x_bits | self.z_bits).count_ones()
    }

    /// Multiply `p` into this string at `qubit` (phase-free).
    pub fn apply(&mut self, qubit: usize, p: Pauli) {
        debug_assert!(qubit < self.n);
        if p.has_x() {
            self.x_bits ^= 1 << qubit;
        }
        if p.has_z() {
            self.z_bits ^= 1 << qubit;
        }
    }

    pub fn pauli_at(&self, qubit: usize) -> Pauli {
        debug_assert!(qubit < self.n);
        match ((self.x_bits >> qubit) & 1, (self.z_bits >> qubit) & 1) {
            (0, 0) => Pauli::I,
            (1, 0) => Pauli::X,
            (0, 1) => Pauli::Z,
            _ => Pauli::Y,
        }
    }

    /// The X/Y component alone (Z bits dropped).
    pub fn x_part(&self) -> PauliString {
        PauliString { n: self.n, x_bits: self.x_bits, z_bits: 0 }
    }

    /// The Z/Y component alone (X bits dropped).
    pub fn z_part(&self) -> PauliString {
        PauliString { n: self.n, x_bits: 0, z_bits: self.z_bits }
    }

    /// True iff this string anticommutes with `other`.
    pub fn anticommutes_with(&self, other: &PauliString) -> bool {
        debug_assert_eq!(self.n, other.n);
        let overlap = (self.x_bits & other.z_bits).count_ones()
            + (self.z_bits & other.x_bits).count_ones();
        overlap % 2 == 1
    }
}

/// Phase-free symplectic product of two equal-length Pauli strings.
pub fn multiply(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    if a.n != b.n {
        return Err(Error::usage(format!(
            "cannot multiply Pauli strings of different lengths ({} vs {})",
            a.n, b.n
        )));
    }
    Ok(PauliString {
        n: a.n,
        x_bits: a.x_bits ^ b.x_bits,
        z_bits: a.z_bits ^ b.z_bits,
    })
}

/// True iff `frame` would flip a Z-basis parity check touching `qubit`,
/// i.e. it acts as X or Y there. This is the bit an ExtractZ CNOT copies.
pub fn anticommutes_with_z(frame: &PauliString, qubit: usize) -> bool {
    assert!(qubit < frame.n, "qubit {qubit} out of range");
    (frame.x_bits >> qubit) & 1 == 1
}

impl fmt::Display for PauliString {
    /// Dense label, qubit 0 leftmost: e.g. `ZZIIIIZ`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", self.pauli_at(q))?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut out = PauliString::identity(s.len());
        for (q, c) in s.chars().enumerate() {
            let p = match c {
                'I' => Pauli::I,
                'X' => Pauli::X,
                'Y' => Pauli::Y,
                'Z' => Pauli::Z,
                _ => return Err(Error::usage(format!("invalid Pauli label character '{c}'"))),
            };
            out.apply(q, p);
        }
        Ok(out)
    }
}

/// Ordered register of classical ancilla bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AncillaRegister {
    count: usize,
    bits: u16,
}

impl AncillaRegister {
    pub fn zeros(count: usize) -> Self {
        assert!(count <= 16, "at most 16 ancillas supported");
        AncillaRegister { count, bits: 0 }
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.count, "ancilla {i} out of range");
        (self.bits >> i) & 1 == 1
    }

    pub fn flip(&mut self, i: usize) {
        assert!(i < self.count, "ancilla {i} out of range");
        self.bits ^= 1 << i;
    }

    pub fn reset(&mut self, i: usize) {
        assert!(i < self.count, "ancilla {i} out of range");
        self.bits &= !(1 << i);
    }

    /// Raw bitmask, bit i = ancilla i.
    pub fn mask(&self) -> u16 {
        self.bits
    }

    pub fn set_mask(&mut self, mask: u16) {
        debug_assert_eq!(mask & !((1u32 << self.count) as u16).wrapping_sub(1), 0);
        self.bits = mask;
    }

    /// A classical bit absorbs a Pauli fault as a flip iff the fault has an
    /// X component; a pure Z is a no-op.
    pub fn absorb_fault(&mut self, i: usize, p: Pauli) {
        if p.has_x() {
            self.flip(i);
        }
    }

    pub fn as_vec(&self) -> Vec<bool> {
        (0..self.count).map(|i| self.get(i)).collect()
    }
}

/// Gate vocabulary executed by the frame kernel.
///
/// `controls`/`pattern` of the correction gates describe a multi-controlled
/// X (or Z) that fires iff the listed ancilla bits equal the pattern
/// exactly. The pattern encodes control polarity; the physically flanking
/// X gates are only materialized as error sites when requested (see
/// `PolarityX`), since a deterministic Pauli gate commutes with the frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GateKind {
    /// CNOT data -> ancilla: flips the ancilla iff the frame has X/Y on `data`.
    ExtractZ { data: usize, ancilla: usize },
    /// Hadamard-conjugated extraction: flips the ancilla iff the frame has Z/Y on `data`.
    ExtractX { data: usize, ancilla: usize },
    /// Multi-controlled X on `target`, firing iff ancilla `controls` == `pattern`.
    CorrectX {
        controls: Vec<usize>,
        pattern: Vec<bool>,
        target: usize,
    },
    /// Multi-controlled Z on `target`.
    CorrectZ {
        controls: Vec<usize>,
        pattern: Vec<bool>,
        target: usize,
    },
    /// Noiseless ancilla reset to 0.
    Reset { ancilla: usize },
    /// Polarity X gate on an ancilla: identity on the frame, exists only as
    /// an optional single-qubit error site.
    PolarityX { ancilla: usize },
}

impl GateKind {
    /// Number of gate-error sites this gate contributes.
    pub fn site_count(&self) -> usize {
        match self {
            GateKind::ExtractZ { .. } | GateKind::ExtractX { .. } => 1,
            GateKind::CorrectX { controls, .. } | GateKind::CorrectZ { controls, .. } => {
                controls.len()
            }
            GateKind::Reset { .. } => 0,
            GateKind::PolarityX { .. } => 1,
        }
    }

    /// Every qubit/ancilla index this gate occupies in its layer.
    /// Data qubits are returned as `Operand::Data`, ancillas as `Operand::Ancilla`.
    pub fn operands(&self) -> Vec<Operand> {
        match self {
            GateKind::ExtractZ { data, ancilla } | GateKind::ExtractX { data, ancilla } => {
                vec![Operand::Data(*data), Operand::Ancilla(*ancilla)]
            }
            GateKind::CorrectX { controls, target, .. }
            | GateKind::CorrectZ { controls, target, .. } => {
                let mut ops: Vec<Operand> = controls.iter().map(|&a| Operand::Ancilla(a)).collect();
                ops.push(Operand::Data(*target));
                ops
            }
            GateKind::Reset { ancilla } | GateKind::PolarityX { ancilla } => {
                vec![Operand::Ancilla(*ancilla)]
            }
        }
    }
}

/// A qubit index tagged by register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operand {
    Data(usize),
    Ancilla(usize),
}

/// Pauli components of a fault landing on one gate-error site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SitePauli {
    /// Two-qubit fault; factor order matches the site definition:
    /// (data, ancilla) for extraction sites, (control, target) for
    /// correction sites.
    Pair(Pauli, Pauli),
    /// Single-qubit fault (polarity-gate sites only).
    Single(Pauli),
}

/// Faults attached to one gate, keyed by the gate's local site index.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GateFault {
    pub sites: Vec<(usize, SitePauli)>,
}

/// Residual Pauli error on the data qubits plus classical ancilla bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameState {
    pub data: PauliString,
    pub ancillas: AncillaRegister,
}

impl FrameState {
    pub fn new(n_data: usize, n_ancilla: usize) -> Self {
        FrameState {
            data: PauliString::identity(n_data),
            ancillas: AncillaRegister::zeros(n_ancilla),
        }
    }

    pub fn with_frame(frame: PauliString, n_ancilla: usize) -> Self {
        FrameState {
            data: frame,
            ancillas: AncillaRegister::zeros(n_ancilla),
        }
    }
}

/// Deterministic frame update for one gate, then fault injection, in that
/// order. Returns a usage error for out-of-range operands or a fault that
/// does not match the gate's site structure.
pub fn apply_gate(state: &mut FrameState, gate: &GateKind, fault: Option<&GateFault>) -> Result<()> {
    apply_gate_deterministic(state, gate)?;
    if let Some(fault) = fault {
        inject_gate_fault(state, gate, fault)?;
    }
    Ok(())
}

pub(crate) fn apply_gate_deterministic(state: &mut FrameState, gate: &GateKind) -> Result<()> {
    let n_data = state.data.n;
    let n_anc = state.ancillas.len();
    let check_data = |q: usize| -> Result<()> {
        if q >= n_data {
            Err(Error::usage(format!("data qubit {q} out of range (n={n_data})")))
        } else {
            Ok(())
        }
    };
    let check_anc = |a: usize| -> Result<()> {
        if a >= n_anc {
            Err(Error::usage(format!("ancilla {a} out of range (count={n_anc})")))
        } else {
            Ok(())
        }
    };

    match gate {
        GateKind::ExtractZ { data, ancilla } => {
            check_data(*data)?;
            check_anc(*ancilla)?;
            if (state.data.x_bits >> data) & 1 == 1 {
                state.ancillas.flip(*ancilla);
            }
        }
        GateKind::ExtractX { data, ancilla } => {
            check_data(*data)?;
            check_anc(*ancilla)?;
            if (state.data.z_bits >> data) & 1 == 1 {
                state.ancillas.flip(*ancilla);
            }
        }
        GateKind::CorrectX { controls, pattern, target }
        | GateKind::CorrectZ { controls, pattern, target } => {
            check_data(*target)?;
            if controls.len() != pattern.len() {
                return Err(Error::usage("correction gate controls/pattern length mismatch"));
            }
            for &c in controls {
                check_anc(c)?;
            }
            let fires = controls
                .iter()
                .zip(pattern.iter())
                .all(|(&c, &want)| state.ancillas.get(c) == want);
            if fires {
                match gate {
                    GateKind::CorrectX { .. } => state.data.apply(*target, Pauli::X),
                    _ => state.data.apply(*target, Pauli::Z),
                }
            }
        }
        GateKind::Reset { ancilla } => {
            check_anc(*ancilla)?;
            state.ancillas.reset(*ancilla);
        }
        GateKind::PolarityX { ancilla } => {
            check_anc(*ancilla)?;
            // Pauli gates commute with the frame; nothing to do.
        }
    }
    Ok(())
}

pub(crate) fn inject_gate_fault(
    state: &mut FrameState,
    gate: &GateKind,
    fault: &GateFault,
) -> Result<()> {
    for &(local, pauli) in &fault.sites {
        inject_site_fault(state, gate, local, pauli)?;
    }
    Ok(())
}

/// Inject a fault onto one (gate, local site) location.
pub(crate) fn inject_site_fault(
    state: &mut FrameState,
    gate: &GateKind,
    local: usize,
    pauli: SitePauli,
) -> Result<()> {
    let site_count = gate.site_count();
    if local >= site_count {
        return Err(Error::usage(format!(
            "fault site {local} out of range for gate with {site_count} sites"
        )));
    }
    match (gate, pauli) {
        (GateKind::ExtractZ { data, ancilla }, SitePauli::Pair(on_data, on_anc))
        | (GateKind::ExtractX { data, ancilla }, SitePauli::Pair(on_data, on_anc)) => {
            state.data.apply(*data, on_data);
            state.ancillas.absorb_fault(*ancilla, on_anc);
        }
        (GateKind::CorrectX { controls, target, .. }, SitePauli::Pair(on_ctrl, on_target))
        | (GateKind::CorrectZ { controls, target, .. }, SitePauli::Pair(on_ctrl, on_target)) => {
            state.ancillas.absorb_fault(controls[local], on_ctrl);
            state.data.apply(*target, on_target);
        }
        (GateKind::PolarityX { ancilla }, SitePauli::Single(p)) => {
            state.ancillas.absorb_fault(*ancilla, p);
        }
        _ => {
            return Err(Error::usage(
                "fault Pauli arity does not match the gate's site structure",
            ));
        }
    }
    Ok(())
}
