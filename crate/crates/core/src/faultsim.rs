//! Pauli-frame propagation of faults through circuits with classical processing.
//!
//! Frames record deviations from the fault-free run: a measurement outcome
//! bit is 1 when it differs from what the ideal circuit would have produced.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::circuits::{Circuit, Directive, ExRec, GaugeGroup, LocKind, PauliType, Step};
use crate::codes::{bacon_shor_decode_bits, repetition_flips};
use crate::error::{Error, Result};
use crate::pauli::{Letter, PauliOp};

/// A fault at the output of one location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultDescriptor {
    /// Preparation of the orthogonal state, or a flipped measurement outcome.
    Flip,
    /// Single-qubit Pauli after a memory location.
    Pauli1(Letter),
    /// Two-qubit Pauli (control, target) after a CNOT.
    Pauli2(Letter, Letter),
}

/// Which nontrivial descriptors are enumerated per location.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorSet {
    /// X, Y, Z on memory; all 15 two-qubit Paulis on CNOTs.
    #[default]
    Full,
    /// Pure X-type or pure Z-type faults only.
    Separated,
}

const LETTERS: [Letter; 4] = [Letter::I, Letter::X, Letter::Y, Letter::Z];

/// Nontrivial descriptors of a location kind, in lexicographic order.
pub fn descriptors(kind: LocKind, set: DescriptorSet) -> Vec<FaultDescriptor> {
    let pure = |l: Letter| l == Letter::I || l == Letter::X || l == Letter::Z;
    match kind {
        LocKind::Prep0 | LocKind::PrepPlus | LocKind::MeasX | LocKind::MeasZ => vec![FaultDescriptor::Flip],
        LocKind::Memory => LETTERS[1..]
            .iter()
            .filter(|&&l| set == DescriptorSet::Full || pure(l))
            .map(|&l| FaultDescriptor::Pauli1(l))
            .collect(),
        LocKind::Cnot => {
            let mut v = Vec::new();
            for &a in &LETTERS {
                for &b in &LETTERS {
                    if a == Letter::I && b == Letter::I {
                        continue;
                    }
                    let ok = match set {
                        DescriptorSet::Full => true,
                        DescriptorSet::Separated => {
                            pure(a) && pure(b) && !(a == Letter::X && b == Letter::Z) && !(a == Letter::Z && b == Letter::X)
                        }
                    };
                    if ok {
                        v.push(FaultDescriptor::Pauli2(a, b));
                    }
                }
            }
            v
        }
    }
}

pub fn descriptor_matches(kind: LocKind, d: FaultDescriptor) -> bool {
    match d {
        FaultDescriptor::Flip => kind.is_prep() || kind.is_meas(),
        FaultDescriptor::Pauli1(l) => kind == LocKind::Memory && l != Letter::I,
        FaultDescriptor::Pauli2(a, b) => kind == LocKind::Cnot && !(a == Letter::I && b == Letter::I),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultAssignment {
    pub entries: BTreeMap<usize, FaultDescriptor>,
}

impl FaultAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, loc: usize, d: FaultDescriptor) -> Self {
        self.entries.insert(loc, d);
        self
    }

    pub fn validate(&self, circuit: &Circuit) -> Result<()> {
        for (&id, &d) in &self.entries {
            let Some(l) = circuit.locations.get(id) else {
                return Err(Error::Fault(format!("location {id} does not exist")));
            };
            if !descriptor_matches(l.kind, d) {
                return Err(Error::Fault(format!("{d:?} does not fit {} location {id}", l.kind)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrameState {
    pub frame: PauliOp,
    pub cbit_flips: BTreeSet<usize>,
    pub accepted: bool,
    /// Logical corrections applied per block by decoded Knill gadgets.
    pub logical_frame: Vec<Letter>,
    /// Frame at the exRec checkpoint, when the circuit has one.
    pub checkpoint: Option<PauliOp>,
}

fn toggle(frame: &mut PauliOp, q: usize, p: PauliType) {
    let l = frame.letter(q);
    let (x, z) = l.bits();
    let nl = match p {
        PauliType::X => Letter::from_bits(!x, z),
        PauliType::Z => Letter::from_bits(x, !z),
    };
    frame.set_letter(q, nl);
}

fn xor_letter(frame: &mut PauliOp, q: usize, l: Letter) {
    let (a, b) = frame.letter(q).bits();
    let (c, d) = l.bits();
    frame.set_letter(q, Letter::from_bits(a ^ c, b ^ d));
}

fn majority(bits: &[bool]) -> bool {
    2 * bits.iter().filter(|&&b| b).count() > bits.len()
}

/// Decision of a directive given outcome deviations. Returns qubits to toggle.
pub(crate) fn directive_actions(d: &Directive, outcome: &dyn Fn(usize) -> bool) -> DirectiveAction {
    let parity = |ms: &[usize]| ms.iter().fold(false, |a, &m| a ^ outcome(m));
    match d {
        Directive::MajorityRecovery { groups, targets, pauli } => {
            let p: Vec<bool> = groups.iter().map(|g| parity(g)).collect();
            let diffs: Vec<bool> = p.windows(2).map(|w| w[0] ^ w[1]).collect();
            let flips = repetition_flips(&diffs);
            let toggles = targets.iter().zip(flips).filter(|(_, f)| *f).map(|(&q, _)| q).collect();
            DirectiveAction::Toggle(toggles, *pauli)
        }
        Directive::GaugeRecovery { groups, targets, pauli } => {
            let flips = repetition_flips(&gauge_syndrome(groups, outcome));
            let toggles = targets.iter().zip(flips).filter(|(_, f)| *f).map(|(&q, _)| q).collect();
            DirectiveAction::Toggle(toggles, *pauli)
        }
        Directive::BitwiseCorrection { meas, targets, pauli } => {
            let toggles = meas.iter().zip(targets).filter(|(&m, _)| outcome(m)).map(|(_, &q)| q).collect();
            DirectiveAction::Toggle(toggles, *pauli)
        }
        Directive::LogicalCorrection { groups, support, block, pauli } => {
            let p: Vec<bool> = groups.iter().map(|g| parity(g)).collect();
            if majority(&p) {
                DirectiveAction::Logical(support.clone(), *block, *pauli)
            } else {
                DirectiveAction::Toggle(Vec::new(), *pauli)
            }
        }
        Directive::ParityCorrection { meas, target, pauli } => {
            let t = if parity(meas) { vec![*target] } else { Vec::new() };
            DirectiveAction::Toggle(t, *pauli)
        }
        Directive::Postselect { meas } => {
            if parity(meas) {
                DirectiveAction::Reject
            } else {
                DirectiveAction::Toggle(Vec::new(), PauliType::X)
            }
        }
    }
}

/// Stabilizer syndrome from repeated gauge outcomes.
///
/// Each round's syndrome bit k is the XOR over lines of pair (k, k+1). When
/// a line's redundancy check fails, its first pair outcome is replaced by
/// the parity of the other two measurements.
/// With several rounds the last round is used when it agrees with the one
/// before, else the second-to-last when it agrees with its predecessor,
/// else the last.
pub fn gauge_syndrome(groups: &[GaugeGroup], outcome: &dyn Fn(usize) -> bool) -> Vec<bool> {
    let npairs = groups.first().map_or(0, |g| g.pairs.len());
    let rounds = groups.first().and_then(|g| g.pairs.first()).map_or(0, |r| r.len());
    let round = |r: usize| -> Vec<bool> {
        let mut s = vec![false; npairs];
        for g in groups {
            let mut vals: Vec<bool> = g.pairs.iter().map(|p| outcome(p[r])).collect();
            if let Some(&red) = g.redundancy.get(r) {
                if vals.iter().fold(outcome(red), |a, &b| a ^ b) {
                    vals[0] = !vals[0];
                }
            }
            for (d, v) in s.iter_mut().zip(vals) {
                *d ^= v;
            }
        }
        s
    };
    match rounds {
        0 => vec![false; npairs],
        1 => round(0),
        _ => {
            let last = round(rounds - 1);
            let prev = round(rounds - 2);
            if last == prev || rounds < 3 {
                last
            } else if prev == round(rounds - 3) {
                prev
            } else {
                last
            }
        }
    }
}

pub(crate) enum DirectiveAction {
    Toggle(Vec<usize>, PauliType),
    Logical(Vec<usize>, usize, PauliType),
    Reject,
}

/// Propagates `faults` through `circuit` from `input_frame`.
pub fn propagate(circuit: &Circuit, faults: &FaultAssignment, input_frame: &PauliOp) -> Result<FrameState> {
    run_frame(circuit, faults, input_frame, None)
}

/// [`propagate`] plus a dump of the frame after every program step, one
/// `t=<step> <KIND> q<i>[,q<j>] | <frame>` line per location.
pub fn propagate_trace(circuit: &Circuit, faults: &FaultAssignment, input_frame: &PauliOp) -> Result<(FrameState, String)> {
    let mut out = String::new();
    let st = run_frame(circuit, faults, input_frame, Some(&mut out))?;
    Ok((st, out))
}

fn run_frame(
    circuit: &Circuit,
    faults: &FaultAssignment,
    input_frame: &PauliOp,
    mut trace: Option<&mut String>,
) -> Result<FrameState> {
    if input_frame.n() != circuit.n_qubits {
        return Err(Error::DimensionMismatch { left: input_frame.n(), right: circuit.n_qubits });
    }
    faults.validate(circuit)?;
    let mut frame = input_frame.clone().with_phase(0);
    let mut flips = BTreeSet::new();
    let mut accepted = true;
    let mut logical = vec![Letter::I; circuit.blocks.len()];
    let mut checkpoint = None;
    for step in &circuit.program {
        match *step {
            Step::Loc(id) => {
                let l = &circuit.locations[id];
                let qs = l.qubits();
                let fault = faults.entries.get(&id).copied();
                match l.kind {
                    LocKind::Prep0 | LocKind::PrepPlus => {
                        frame.set_letter(qs[0], Letter::I);
                        if fault == Some(FaultDescriptor::Flip) {
                            let p = if l.kind == LocKind::Prep0 { PauliType::X } else { PauliType::Z };
                            toggle(&mut frame, qs[0], p);
                        }
                    }
                    LocKind::MeasX | LocKind::MeasZ => {
                        let (x, z) = frame.letter(qs[0]).bits();
                        let dev = if l.kind == LocKind::MeasX { z } else { x };
                        if dev ^ (fault == Some(FaultDescriptor::Flip)) {
                            flips.insert(id);
                        }
                        frame.set_letter(qs[0], Letter::I);
                    }
                    LocKind::Memory => {
                        if let Some(FaultDescriptor::Pauli1(p)) = fault {
                            xor_letter(&mut frame, qs[0], p);
                        }
                    }
                    LocKind::Cnot => {
                        let (c, t) = (qs[0], qs[1]);
                        let (xc, zc) = frame.letter(c).bits();
                        let (xt, zt) = frame.letter(t).bits();
                        frame.set_letter(c, Letter::from_bits(xc, zc ^ zt));
                        frame.set_letter(t, Letter::from_bits(xt ^ xc, zt));
                        if let Some(FaultDescriptor::Pauli2(a, b)) = fault {
                            xor_letter(&mut frame, c, a);
                            xor_letter(&mut frame, t, b);
                        }
                    }
                }
                if let Some(out) = trace.as_deref_mut() {
                    let qs: Vec<String> = qs.iter().map(|q| format!("q{q}")).collect();
                    let letters: String = (0..frame.n()).map(|q| frame.letter(q).as_char()).collect();
                    out.push_str(&format!("t={} {} {} | {}\n", l.timestep, l.kind, qs.join(","), letters));
                }
            }
            Step::Directive(k) => {
                let d = &circuit.classical_directives[k];
                match directive_actions(d, &|m| flips.contains(&m)) {
                    DirectiveAction::Toggle(qs, p) => qs.iter().for_each(|&q| toggle(&mut frame, q, p)),
                    DirectiveAction::Logical(support, block, p) => {
                        support.iter().for_each(|&q| toggle(&mut frame, q, p));
                        let (x, z) = logical[block].bits();
                        logical[block] = match p {
                            PauliType::X => Letter::from_bits(!x, z),
                            PauliType::Z => Letter::from_bits(x, !z),
                        };
                    }
                    DirectiveAction::Reject => accepted = false,
                }
            }
            Step::Checkpoint => checkpoint = Some(frame.clone()),
        }
    }
    Ok(FrameState { frame, cbit_flips: flips, accepted, logical_frame: logical, checkpoint })
}

/// Logical (x, z) flips of the block `qubits` (Bacon-Shor grid order).
pub fn decode_block(n: usize, frame: &PauliOp, qubits: &[usize]) -> (bool, bool) {
    let x: Vec<bool> = qubits.iter().map(|&q| frame.x_bits().get(q)).collect();
    let z: Vec<bool> = qubits.iter().map(|&q| frame.z_bits().get(q)).collect();
    bacon_shor_decode_bits(n, &x, &z)
}

/// Compares the decoded output with the ideal CNOT applied to the decoded Rec input.
pub fn cnot_incorrect(input: [(bool, bool); 2], output: [(bool, bool); 2]) -> (bool, bool) {
    let [(xc, zc), (xt, zt)] = input;
    let expect = [(xc, zc ^ zt), (xt ^ xc, zt)];
    let x_bad = expect[0].0 != output[0].0 || expect[1].0 != output[1].0;
    let z_bad = expect[0].1 != output[0].1 || expect[1].1 != output[1].1;
    (x_bad, z_bad)
}

/// Runs the exRec with trivial input; returns (X incorrect, Z incorrect).
pub fn exrec_is_incorrect(exrec: &ExRec, faults: &FaultAssignment) -> Result<(bool, bool)> {
    for &id in faults.entries.keys() {
        if !exrec.faultable.get(id).copied().unwrap_or(false) {
            return Err(Error::Fault(format!("location {id} is not a fault location of this exRec")));
        }
    }
    let c = &exrec.circuit;
    let st = propagate(c, faults, &PauliOp::identity(c.n_qubits))?;
    if !st.accepted {
        return Ok((false, false));
    }
    let n = exrec.code_size;
    let ck = st.checkpoint.as_ref().ok_or_else(|| Error::Circuit("exRec without checkpoint".into()))?;
    let input = [decode_block(n, ck, &exrec.checkpoint_blocks[0]), decode_block(n, ck, &exrec.checkpoint_blocks[1])];
    let output = [
        decode_block(n, &st.frame, &exrec.output_blocks[0]),
        decode_block(n, &st.frame, &exrec.output_blocks[1]),
    ];
    Ok(cnot_incorrect(input, output))
}

// ---------------------------------------------------------------------------
// Compiled linear model

/// Signature width limit in 64-bit words.
pub const MAX_WORDS: usize = 16;

pub type Sig = [u64; MAX_WORDS];

#[derive(Clone, Debug)]
enum CDirective {
    Majority { groups: Vec<Vec<usize>>, units: Vec<usize> },
    Gauge { groups: Vec<GaugeGroup>, units: Vec<usize> },
    Bitwise { bits: Vec<usize>, units: Vec<usize> },
    Logical { groups: Vec<Vec<usize>>, unit: usize },
    Parity { bits: Vec<usize>, unit: usize },
    Postselect { bits: Vec<usize> },
}

/// Every fault and every recovery action reduced to a fixed bit signature.
///
/// Bits hold measurement deviations, the checkpoint frame and the output
/// frame; faults combine by XOR and directives are replayed on the result.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub words: usize,
    pub n: usize,
    /// Faultable location ids in increasing order.
    pub locs: Vec<usize>,
    pub kinds: Vec<LocKind>,
    /// Descriptor list and signatures per faultable location.
    pub desc: Vec<Vec<FaultDescriptor>>,
    pub desc_sigs: Vec<Vec<Sig>>,
    units: Vec<Sig>,
    directives: Vec<CDirective>,
    /// [block][row or col] masks: X-part column parities, Z-part row parities.
    ck_x: [Vec<Sig>; 2],
    ck_z: [Vec<Sig>; 2],
    out_x: [Vec<Sig>; 2],
    out_z: [Vec<Sig>; 2],
}

#[inline]
fn bit(s: &Sig, i: usize) -> bool {
    (s[i >> 6] >> (i & 63)) & 1 == 1
}

#[inline]
fn flip_bit(s: &mut Sig, i: usize) {
    s[i >> 6] ^= 1 << (i & 63);
}

#[inline]
pub fn xor_into(a: &mut Sig, b: &Sig, w: usize) {
    for i in 0..w {
        a[i] ^= b[i];
    }
}

#[inline]
fn masked_parity(s: &Sig, m: &Sig, w: usize) -> bool {
    let mut acc = 0u64;
    for i in 0..w {
        acc ^= s[i] & m[i];
    }
    acc.count_ones() & 1 == 1
}

impl Compiled {
    pub fn new(exrec: &ExRec, set: DescriptorSet) -> Result<Compiled> {
        let c = &exrec.circuit;
        let n = exrec.code_size;
        let nn = n * n;
        let meas_ids: Vec<usize> = c.locations.iter().filter(|l| l.kind.is_meas()).map(|l| l.id).collect();
        let mut meas_bit = vec![usize::MAX; c.locations.len()];
        for (i, &m) in meas_ids.iter().enumerate() {
            meas_bit[m] = i;
        }
        let ck_base = meas_ids.len();
        let out_base = ck_base + 4 * nn;
        let nbits = out_base + 4 * nn;
        let words = nbits.div_ceil(64);
        if words > MAX_WORDS {
            return Err(Error::Unsupported(format!("signature of {nbits} bits exceeds the compiled limit")));
        }
        // bit index of (block b, qubit position p, x/z)
        let frame_bit = |base: usize, b: usize, p: usize, z: bool| base + (b * nn + p) * 2 + z as usize;
        let mut pos_in_block = [vec![usize::MAX; c.n_qubits], vec![usize::MAX; c.n_qubits]];
        let mut ck_pos = [vec![usize::MAX; c.n_qubits], vec![usize::MAX; c.n_qubits]];
        for b in 0..2 {
            for (p, &q) in exrec.output_blocks[b].iter().enumerate() {
                pos_in_block[b][q] = p;
            }
            for (p, &q) in exrec.checkpoint_blocks[b].iter().enumerate() {
                ck_pos[b][q] = p;
            }
        }
        let prog_index_of_loc: Vec<usize> = {
            let mut v = vec![0; c.locations.len()];
            for (i, s) in c.program.iter().enumerate() {
                if let Step::Loc(id) = s {
                    v[*id] = i;
                }
            }
            v
        };
        // Ideal propagation of a Pauli injected after program index `start`.
        let run = |start: usize, init: &[(usize, bool, bool)]| -> Sig {
            let mut sig = [0u64; MAX_WORDS];
            let mut fx = vec![false; c.n_qubits];
            let mut fz = vec![false; c.n_qubits];
            for &(q, x, z) in init {
                fx[q] ^= x;
                fz[q] ^= z;
            }
            for step in &c.program[start + 1..] {
                match *step {
                    Step::Loc(id) => {
                        let l = &c.locations[id];
                        let qs = l.qubits();
                        match l.kind {
                            LocKind::Prep0 | LocKind::PrepPlus => {
                                fx[qs[0]] = false;
                                fz[qs[0]] = false;
                            }
                            LocKind::MeasX | LocKind::MeasZ => {
                                let dev = if l.kind == LocKind::MeasX { fz[qs[0]] } else { fx[qs[0]] };
                                if dev {
                                    flip_bit(&mut sig, meas_bit[id]);
                                }
                                fx[qs[0]] = false;
                                fz[qs[0]] = false;
                            }
                            LocKind::Memory => {}
                            LocKind::Cnot => {
                                let (a, b) = (qs[0], qs[1]);
                                fx[b] ^= fx[a];
                                fz[a] ^= fz[b];
                            }
                        }
                    }
                    Step::Checkpoint => {
                        for b in 0..2 {
                            for (p, &q) in exrec.checkpoint_blocks[b].iter().enumerate() {
                                if fx[q] {
                                    flip_bit(&mut sig, frame_bit(ck_base, b, p, false));
                                }
                                if fz[q] {
                                    flip_bit(&mut sig, frame_bit(ck_base, b, p, true));
                                }
                            }
                        }
                    }
                    Step::Directive(_) => {}
                }
            }
            for b in 0..2 {
                for (p, &q) in exrec.output_blocks[b].iter().enumerate() {
                    if fx[q] {
                        flip_bit(&mut sig, frame_bit(out_base, b, p, false));
                    }
                    if fz[q] {
                        flip_bit(&mut sig, frame_bit(out_base, b, p, true));
                    }
                }
            }
            sig
        };
        let _ = (&pos_in_block, &ck_pos);
        // Faults.
        let mut locs = Vec::new();
        let mut kinds = Vec::new();
        let mut desc = Vec::new();
        let mut desc_sigs = Vec::new();
        for l in &c.locations {
            if !exrec.faultable[l.id] {
                continue;
            }
            let start = prog_index_of_loc[l.id];
            let qs = l.qubits();
            let ds = descriptors(l.kind, set);
            let sigs: Vec<Sig> = ds
                .iter()
                .map(|&d| match d {
                    FaultDescriptor::Flip => {
                        if l.kind.is_meas() {
                            let mut s = [0u64; MAX_WORDS];
                            flip_bit(&mut s, meas_bit[l.id]);
                            s
                        } else {
                            let x = l.kind == LocKind::Prep0;
                            run(start, &[(qs[0], x, !x)])
                        }
                    }
                    FaultDescriptor::Pauli1(p) => {
                        let (x, z) = p.bits();
                        run(start, &[(qs[0], x, z)])
                    }
                    FaultDescriptor::Pauli2(a, b) => {
                        let (xa, za) = a.bits();
                        let (xb, zb) = b.bits();
                        run(start, &[(qs[0], xa, za), (qs[1], xb, zb)])
                    }
                })
                .collect();
            locs.push(l.id);
            kinds.push(l.kind);
            desc.push(ds);
            desc_sigs.push(sigs);
        }
        // Directives and their recovery units.
        let mut units = Vec::new();
        let mut directives = Vec::new();
        let mb = |v: &[usize]| v.iter().map(|&m| meas_bit[m]).collect::<Vec<_>>();
        for (pi, step) in c.program.iter().enumerate() {
            let Step::Directive(k) = *step else { continue };
            let d = &c.classical_directives[k];
            let mut unit = |qs: &[usize], p: PauliType| -> usize {
                let init: Vec<(usize, bool, bool)> =
                    qs.iter().map(|&q| (q, p == PauliType::X, p == PauliType::Z)).collect();
                units.push(run(pi, &init));
                units.len() - 1
            };
            let cd = match d {
                Directive::MajorityRecovery { groups, targets, pauli } => CDirective::Majority {
                    groups: groups.iter().map(|g| mb(g)).collect(),
                    units: targets.iter().map(|&q| unit(&[q], *pauli)).collect(),
                },
                Directive::GaugeRecovery { groups, targets, pauli } => CDirective::Gauge {
                    groups: groups
                        .iter()
                        .map(|g| GaugeGroup { pairs: g.pairs.iter().map(|r| mb(r)).collect(), redundancy: mb(&g.redundancy) })
                        .collect(),
                    units: targets.iter().map(|&q| unit(&[q], *pauli)).collect(),
                },
                Directive::BitwiseCorrection { meas, targets, pauli } => CDirective::Bitwise {
                    bits: mb(meas),
                    units: targets.iter().map(|&q| unit(&[q], *pauli)).collect(),
                },
                Directive::LogicalCorrection { groups, support, pauli, .. } => CDirective::Logical {
                    groups: groups.iter().map(|g| mb(g)).collect(),
                    unit: unit(support, *pauli),
                },
                Directive::ParityCorrection { meas, target, pauli } => {
                    CDirective::Parity { bits: mb(meas), unit: unit(&[*target], *pauli) }
                }
                Directive::Postselect { meas } => CDirective::Postselect { bits: mb(meas) },
            };
            directives.push(cd);
        }
        let masks = |base: usize, z: bool| -> [Vec<Sig>; 2] {
            let mk = |b: usize| -> Vec<Sig> {
                (0..n)
                    .map(|line| {
                        let mut s = [0u64; MAX_WORDS];
                        for k in 0..n {
                            // Z part: row parities; X part: column parities.
                            let p = if z { line * n + k } else { k * n + line };
                            flip_bit(&mut s, frame_bit(base, b, p, z));
                        }
                        s
                    })
                    .collect()
            };
            [mk(0), mk(1)]
        };
        Ok(Compiled {
            words,
            n,
            locs,
            kinds,
            desc,
            desc_sigs,
            units,
            directives,
            ck_x: masks(ck_base, false),
            ck_z: masks(ck_base, true),
            out_x: masks(out_base, false),
            out_z: masks(out_base, true),
        })
    }

    fn decode(&self, s: &Sig, xm: &[Vec<Sig>; 2], zm: &[Vec<Sig>; 2]) -> [(bool, bool); 2] {
        let w = self.words;
        let maj = |ms: &[Sig]| 2 * ms.iter().filter(|m| masked_parity(s, m, w)).count() > ms.len();
        [(maj(&xm[0]), maj(&zm[0])), (maj(&xm[1]), maj(&zm[1]))]
    }

    /// Replays the directives on a combined signature. `None` means rejected.
    pub fn eval(&self, sig: &Sig) -> Option<(bool, bool)> {
        let w = self.words;
        let mut s = *sig;
        for d in &self.directives {
            match d {
                CDirective::Majority { groups, units } => {
                    let p: Vec<bool> = groups.iter().map(|g| g.iter().fold(false, |a, &b| a ^ bit(&s, b))).collect();
                    let diffs: Vec<bool> = p.windows(2).map(|x| x[0] ^ x[1]).collect();
                    for (i, f) in repetition_flips(&diffs).into_iter().enumerate() {
                        if f {
                            let u = self.units[units[i]];
                            xor_into(&mut s, &u, w);
                        }
                    }
                }
                CDirective::Gauge { groups, units } => {
                    let syn = gauge_syndrome(groups, &|b| bit(&s, b));
                    for (i, f) in repetition_flips(&syn).into_iter().enumerate() {
                        if f {
                            let u = self.units[units[i]];
                            xor_into(&mut s, &u, w);
                        }
                    }
                }
                CDirective::Bitwise { bits, units } => {
                    for (&b, &u) in bits.iter().zip(units) {
                        if bit(&s, b) {
                            let u = self.units[u];
                            xor_into(&mut s, &u, w);
                        }
                    }
                }
                CDirective::Logical { groups, unit } => {
                    let ones = groups.iter().filter(|g| g.iter().fold(false, |a, &b| a ^ bit(&s, b))).count();
                    if 2 * ones > groups.len() {
                        let u = self.units[*unit];
                        xor_into(&mut s, &u, w);
                    }
                }
                CDirective::Parity { bits, unit } => {
                    if bits.iter().fold(false, |a, &b| a ^ bit(&s, b)) {
                        let u = self.units[*unit];
                        xor_into(&mut s, &u, w);
                    }
                }
                CDirective::Postselect { bits } => {
                    if bits.iter().fold(false, |a, &b| a ^ bit(&s, b)) {
                        return None;
                    }
                }
            }
        }
        let input = self.decode(&s, &self.ck_x, &self.ck_z);
        let output = self.decode(&s, &self.out_x, &self.out_z);
        Some(cnot_incorrect(input, output))
    }

    /// (X incorrect, Z incorrect) for one descriptor index per listed location index.
    pub fn eval_assignment(&self, picks: &[(usize, usize)]) -> (bool, bool) {
        let mut s = [0u64; MAX_WORDS];
        for &(li, di) in picks {
            xor_into(&mut s, &self.desc_sigs[li][di], self.words);
        }
        self.eval(&s).unwrap_or((false, false))
    }

    pub fn position(&self, loc_id: usize) -> Option<usize> {
        self.locs.binary_search(&loc_id).ok()
    }
}
