//! Location-typed circuits and the Bacon-Shor gadget builders.
//!
//! Scheduling: gates inside a cat-state or gauge-measurement circuit are
//! placed as early as the gate order allows, preparations as late as
//! possible, and transversal data interactions form one layer. A qubit
//! idle between two of its operations gets one MEMORY location per idle
//! step.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LocKind {
    Memory,
    Prep0,
    PrepPlus,
    MeasX,
    MeasZ,
    Cnot,
}

impl LocKind {
    pub const ALL: [LocKind; 6] =
        [LocKind::Memory, LocKind::Prep0, LocKind::PrepPlus, LocKind::MeasX, LocKind::MeasZ, LocKind::Cnot];

    /// Position in the six-type taxonomy (0-based).
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            LocKind::Memory => "MEMORY",
            LocKind::Prep0 => "PREP_0",
            LocKind::PrepPlus => "PREP_PLUS",
            LocKind::MeasX => "MEAS_X",
            LocKind::MeasZ => "MEAS_Z",
            LocKind::Cnot => "CNOT",
        }
    }

    pub fn arity(self) -> usize {
        if self == LocKind::Cnot {
            2
        } else {
            1
        }
    }

    pub fn is_prep(self) -> bool {
        matches!(self, LocKind::Prep0 | LocKind::PrepPlus)
    }

    pub fn is_meas(self) -> bool {
        matches!(self, LocKind::MeasX | LocKind::MeasZ)
    }
}

impl fmt::Display for LocKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which part of an exRec a location belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    Gadget,
    LeadingEc(u8),
    Ga,
    TrailingEc(u8),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Location {
    pub id: usize,
    pub kind: LocKind,
    qubits: [usize; 2],
    pub timestep: u32,
    pub region: Region,
    /// Part of a transversal Bell measurement in a Knill gadget.
    pub bell_measurement: bool,
}

impl Location {
    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.kind.arity()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliType {
    X,
    Z,
}

impl PauliType {
    pub fn letter(self) -> char {
        match self {
            PauliType::X => 'X',
            PauliType::Z => 'Z',
        }
    }
}

/// Adjacent-pair gauge outcomes along one column (or row).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaugeGroup {
    /// `pairs[k]` lists the outcomes of pair (k, k+1), one per extraction round.
    pub pairs: Vec<Vec<usize>>,
    /// Per round, the outcome of the product of the first and last qubits, if measured.
    pub redundancy: Vec<usize>,
}

/// Classical processing of measurement outcomes. All ids are location ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Directive {
    /// Parities of `groups` should agree; targets of minority groups get `pauli`.
    MajorityRecovery { groups: Vec<Vec<usize>>, targets: Vec<usize>, pauli: PauliType },
    /// Adjacent-pair gauge outcomes combined into a syndrome, then repetition decoding.
    GaugeRecovery { groups: Vec<GaugeGroup>, targets: Vec<usize>, pauli: PauliType },
    /// Outcome `meas[i]` toggles `pauli` on `targets[i]`.
    BitwiseCorrection { meas: Vec<usize>, targets: Vec<usize>, pauli: PauliType },
    /// Majority of the group parities toggles a logical representative on `support`.
    LogicalCorrection { groups: Vec<Vec<usize>>, support: Vec<usize>, block: usize, pauli: PauliType },
    /// Parity of `meas` toggles `pauli` on `target`.
    ParityCorrection { meas: Vec<usize>, target: usize, pauli: PauliType },
    /// Reject the run unless the parity of `meas` is even.
    Postselect { meas: Vec<usize> },
}

impl Directive {
    pub fn measurements(&self) -> Vec<usize> {
        match self {
            Directive::MajorityRecovery { groups, .. } | Directive::LogicalCorrection { groups, .. } => {
                groups.iter().flatten().copied().collect()
            }
            Directive::GaugeRecovery { groups, .. } => groups
                .iter()
                .flat_map(|g| g.pairs.iter().flatten().copied().chain(g.redundancy.iter().copied()))
                .collect(),
            Directive::BitwiseCorrection { meas, .. }
            | Directive::ParityCorrection { meas, .. }
            | Directive::Postselect { meas } => meas.clone(),
        }
    }

    /// Qubits a directive may write to.
    pub fn targets(&self) -> Vec<usize> {
        match self {
            Directive::MajorityRecovery { targets, .. }
            | Directive::GaugeRecovery { targets, .. }
            | Directive::BitwiseCorrection { targets, .. } => targets.clone(),
            Directive::LogicalCorrection { support, .. } => support.clone(),
            Directive::ParityCorrection { target, .. } => vec![*target],
            Directive::Postselect { .. } => Vec::new(),
        }
    }

    fn remap(&mut self, f: &dyn Fn(usize) -> usize) {
        let map = |v: &mut Vec<usize>| v.iter_mut().for_each(|m| *m = f(*m));
        match self {
            Directive::MajorityRecovery { groups, .. } | Directive::LogicalCorrection { groups, .. } => {
                groups.iter_mut().for_each(map)
            }
            Directive::GaugeRecovery { groups, .. } => {
                for g in groups {
                    g.pairs.iter_mut().for_each(map);
                    map(&mut g.redundancy);
                }
            }
            Directive::BitwiseCorrection { meas, .. }
            | Directive::ParityCorrection { meas, .. }
            | Directive::Postselect { meas } => map(meas),
        }
    }

    pub fn dump(&self) -> String {
        let ids = |v: &[usize]| v.iter().map(|m| format!("m{m}")).collect::<Vec<_>>().join(",");
        let qs = |v: &[usize]| v.iter().map(|q| format!("q{q}")).collect::<Vec<_>>().join(",");
        let grp = |g: &[Vec<usize>]| g.iter().map(|x| ids(x)).collect::<Vec<_>>().join("|");
        match self {
            Directive::MajorityRecovery { groups, targets, pauli } => {
                format!("MAJORITY {} groups={} targets={}", pauli.letter(), grp(groups), qs(targets))
            }
            Directive::GaugeRecovery { groups, targets, pauli } => {
                let g = groups
                    .iter()
                    .map(|g| {
                        let mut s = grp(&g.pairs);
                        if !g.redundancy.is_empty() {
                            s.push_str(&format!("+r:{}", ids(&g.redundancy)));
                        }
                        s
                    })
                    .collect::<Vec<_>>()
                    .join(";");
                format!("GAUGE {} groups={} targets={}", pauli.letter(), g, qs(targets))
            }
            Directive::BitwiseCorrection { meas, targets, pauli } => {
                format!("BITWISE {} meas={} targets={}", pauli.letter(), ids(meas), qs(targets))
            }
            Directive::LogicalCorrection { groups, support, block, pauli } => format!(
                "LOGICAL {} groups={} block={} support={}",
                pauli.letter(),
                grp(groups),
                block,
                qs(support)
            ),
            Directive::ParityCorrection { meas, target, pauli } => {
                format!("PARITY {} meas={} target=q{}", pauli.letter(), ids(meas), target)
            }
            Directive::Postselect { meas } => format!("POSTSELECT meas={}", ids(meas)),
        }
    }
}

/// One entry of the execution order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Loc(usize),
    Directive(usize),
    /// Boundary between the leading ECs and the rest of an exRec.
    Checkpoint,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub name: String,
    pub qubits: Vec<usize>,
}

/// A circuit with its classical post-processing.
///
/// `locations` is sorted by timestep. `program` is the execution order used
/// by simulators: a topological order of the same operations in which each
/// directive runs right after the measurements it reads and before any
/// later operation on the qubits it corrects.
#[derive(Clone, Debug)]
pub struct Circuit {
    pub n_qubits: usize,
    pub locations: Vec<Location>,
    pub block_map: Vec<Option<(usize, usize)>>,
    pub blocks: Vec<Block>,
    pub classical_directives: Vec<Directive>,
    pub program: Vec<Step>,
    /// Qubits live before the first operation.
    pub inputs: Vec<usize>,
}

impl Circuit {
    pub fn empty() -> Circuit {
        Circuit {
            n_qubits: 0,
            locations: Vec::new(),
            block_map: Vec::new(),
            blocks: Vec::new(),
            classical_directives: Vec::new(),
            program: Vec::new(),
            inputs: Vec::new(),
        }
    }

    pub fn block(&self, name: &str) -> Option<&Block> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn depth(&self) -> u32 {
        self.locations.iter().map(|l| l.timestep + 1).max().unwrap_or(0)
    }

    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Circuit(m));
        let nl = self.locations.len();
        for (i, l) in self.locations.iter().enumerate() {
            if l.id != i {
                return bad(format!("location {i} carries id {}", l.id));
            }
            if l.qubits().iter().any(|&q| q >= self.n_qubits) {
                return bad(format!("location {i} references a qubit out of range"));
            }
            if l.kind == LocKind::Cnot && l.qubits[0] == l.qubits[1] {
                return bad(format!("CNOT {i} has identical control and target"));
            }
            if i > 0 && self.locations[i - 1].timestep > l.timestep {
                return bad("locations are not time-ordered".into());
            }
        }
        let mut busy = std::collections::HashSet::new();
        for l in &self.locations {
            for &q in l.qubits() {
                if !busy.insert((l.timestep, q)) {
                    return bad(format!("qubit {q} used twice at timestep {}", l.timestep));
                }
            }
        }
        // Program covers every location once; per-qubit order agrees with time.
        let mut seen = vec![false; nl];
        let mut live = vec![false; self.n_qubits];
        let mut measured = vec![false; nl];
        let mut last_t: Vec<Option<u32>> = vec![None; self.n_qubits];
        for &q in &self.inputs {
            live[q] = true;
        }
        for step in &self.program {
            match *step {
                Step::Loc(id) => {
                    if id >= nl || seen[id] {
                        return bad(format!("program visits location {id} twice or out of range"));
                    }
                    seen[id] = true;
                    let l = &self.locations[id];
                    for &q in l.qubits() {
                        if let Some(t) = last_t[q] {
                            if t >= l.timestep {
                                return bad(format!("qubit {q} order disagrees with time at location {id}"));
                            }
                        }
                        last_t[q] = Some(l.timestep);
                        if l.kind.is_prep() {
                            live[q] = true;
                        } else if !live[q] {
                            return bad(format!("qubit {q} used before preparation at location {id}"));
                        }
                        if l.kind.is_meas() {
                            live[q] = false;
                            measured[id] = true;
                        }
                    }
                }
                Step::Directive(d) => {
                    let Some(dir) = self.classical_directives.get(d) else {
                        return bad(format!("program references missing directive {d}"));
                    };
                    for m in dir.measurements() {
                        if m >= nl || !self.locations[m].kind.is_meas() {
                            return bad(format!("directive {d} references non-measurement {m}"));
                        }
                        if !measured[m] {
                            return bad(format!("directive {d} reads m{m} before it is measured"));
                        }
                    }
                    for q in dir.targets() {
                        if q >= self.n_qubits || !live[q] {
                            return bad(format!("directive {d} corrects dead qubit {q}"));
                        }
                    }
                }
                Step::Checkpoint => {}
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return bad(format!("location {i} missing from program"));
        }
        Ok(())
    }

    /// Text dump: one location per line, then the directives.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for l in &self.locations {
            let qs = l.qubits().iter().map(|q| format!("q{q}")).collect::<Vec<_>>().join(",");
            let _ = writeln!(s, "t={} {} {}", l.timestep, l.kind.name(), qs);
        }
        for (i, d) in self.classical_directives.iter().enumerate() {
            let _ = writeln!(s, "D{} {}", i, d.dump());
        }
        s
    }
}

pub fn count_locations(circuit: &Circuit, filter: Option<LocKind>) -> usize {
    circuit.locations.iter().filter(|l| filter.is_none_or(|k| l.kind == k)).count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EcStyle {
    Gauge,
    Steane,
    Knill,
}

impl fmt::Display for EcStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EcStyle::Gauge => "gauge",
            EcStyle::Steane => "steane",
            EcStyle::Knill => "knill",
        })
    }
}

/// How Knill gadgets turn Bell-measurement outcomes into a correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KnillCorrection {
    /// Each outcome corrects its own output qubit.
    #[default]
    Bitwise,
    /// Outcomes are majority-decoded into a logical Pauli.
    Decoded,
}

/// Options shared by the gadget builders.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    pub knill_correction: KnillCorrection,
    /// Prepare cat qubits as late as possible (otherwise all at the first cat step).
    pub late_preps: bool,
    /// Extraction rounds of the n=5 gauge gadget.
    pub gauge_rounds: usize,
    pub steane_order: SteaneOrder,
}

/// Which syndrome a Steane gadget extracts first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SteaneOrder {
    ZFirst,
    XFirst,
    /// Z first on control blocks, X first on target blocks.
    #[default]
    Mirrored,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { knill_correction: KnillCorrection::Bitwise, late_preps: true, gauge_rounds: 3, steane_order: SteaneOrder::Mirrored }
    }
}

#[derive(Clone, Debug)]
pub struct ExRec {
    pub circuit: Circuit,
    pub gate_kind: LocKind,
    pub code_size: usize,
    pub leading_ec_ids: Vec<usize>,
    pub ga_ids: Vec<usize>,
    pub trailing_ec_ids: Vec<usize>,
    pub ec_style: EcStyle,
    pub contracted: bool,
    pub knill_ideal_bell: bool,
    /// Locations that may carry faults.
    pub faultable: Vec<bool>,
    /// Control and target blocks at the Rec input.
    pub checkpoint_blocks: [Vec<usize>; 2],
    /// Control and target blocks at the output.
    pub output_blocks: [Vec<usize>; 2],
}

impl ExRec {
    pub fn placeable_count(&self) -> usize {
        self.faultable.iter().filter(|&&f| f).count()
    }

    pub fn placeable_ids(&self) -> Vec<usize> {
        (0..self.faultable.len()).filter(|&i| self.faultable[i]).collect()
    }

    pub fn placeable_by_kind(&self) -> [usize; 6] {
        let mut c = [0; 6];
        for l in &self.circuit.locations {
            if self.faultable[l.id] {
                c[l.kind.index()] += 1;
            }
        }
        c
    }
}

// ---------------------------------------------------------------------------
// Builder

#[derive(Clone, Debug)]
struct BOp {
    kind: LocKind,
    qubits: [usize; 2],
    t: i64,
    region: Region,
    bell: bool,
}

#[derive(Clone, Copy, Debug)]
enum BStep {
    Op(usize),
    Directive(usize),
    Checkpoint,
}

struct Builder {
    n_qubits: usize,
    ops: Vec<BOp>,
    program: Vec<BStep>,
    directives: Vec<Directive>,
    inputs: Vec<usize>,
    blocks: Vec<Block>,
    region: Region,
    bell: bool,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            n_qubits: 0,
            ops: Vec::new(),
            program: Vec::new(),
            directives: Vec::new(),
            inputs: Vec::new(),
            blocks: Vec::new(),
            region: Region::Gadget,
            bell: false,
        }
    }

    fn alloc(&mut self, k: usize) -> Vec<usize> {
        let start = self.n_qubits;
        self.n_qubits += k;
        (start..start + k).collect()
    }

    fn block(&mut self, name: impl Into<String>, qubits: &[usize]) {
        self.blocks.push(Block { name: name.into(), qubits: qubits.to_vec() });
    }

    fn op(&mut self, kind: LocKind, qubits: &[usize], t: i64) -> usize {
        debug_assert_eq!(qubits.len(), kind.arity());
        let q = [qubits[0], *qubits.get(1).unwrap_or(&qubits[0])];
        self.ops.push(BOp { kind, qubits: q, t, region: self.region, bell: self.bell });
        let h = self.ops.len() - 1;
        self.program.push(BStep::Op(h));
        h
    }

    fn directive(&mut self, d: Directive) {
        self.directives.push(d);
        self.program.push(BStep::Directive(self.directives.len() - 1));
    }

    fn finish(self, insert_memory: bool) -> Result<Circuit> {
        let t0 = self.ops.iter().map(|o| o.t).min().unwrap_or(0);
        let mut ops = self.ops;
        for o in &mut ops {
            o.t -= t0;
        }
        // Idle steps between consecutive operations on a qubit become memory.
        let mut last: Vec<Option<(i64, Region)>> = vec![None; self.n_qubits];
        let mut program: Vec<BStep> = Vec::with_capacity(self.program.len());
        let mut extra: Vec<BOp> = Vec::new();
        let base = ops.len();
        for step in &self.program {
            if let BStep::Op(h) = *step {
                let o = ops[h].clone();
                for &q in &o.qubits[..o.kind.arity()] {
                    if let Some((lt, lr)) = last[q] {
                        if insert_memory && !o.kind.is_prep() {
                            // Waiting for the gate layer still belongs to the preceding EC.
                            let region = if o.region == Region::Ga { lr } else { o.region };
                            for t in lt + 1..o.t {
                                extra.push(BOp {
                                    kind: LocKind::Memory,
                                    qubits: [q, q],
                                    t,
                                    region,
                                    bell: false,
                                });
                                program.push(BStep::Op(base + extra.len() - 1));
                            }
                        }
                    }
                    last[q] = Some((o.t, o.region));
                }
            }
            program.push(*step);
        }
        ops.extend(extra);
        // Sort by time, stable in program order.
        let mut pos = vec![0usize; ops.len()];
        for (i, s) in program.iter().enumerate() {
            if let BStep::Op(h) = s {
                pos[*h] = i;
            }
        }
        let mut order: Vec<usize> = (0..ops.len()).collect();
        order.sort_by_key(|&h| (ops[h].t, pos[h]));
        let mut id_of = vec![0usize; ops.len()];
        for (id, &h) in order.iter().enumerate() {
            id_of[h] = id;
        }
        let locations = order
            .iter()
            .enumerate()
            .map(|(id, &h)| {
                let o = &ops[h];
                Location {
                    id,
                    kind: o.kind,
                    qubits: o.qubits,
                    timestep: o.t as u32,
                    region: o.region,
                    bell_measurement: o.bell,
                }
            })
            .collect();
        let mut directives = self.directives;
        for d in &mut directives {
            d.remap(&|h| id_of[h]);
        }
        let program = program
            .into_iter()
            .map(|s| match s {
                BStep::Op(h) => Step::Loc(id_of[h]),
                BStep::Directive(d) => Step::Directive(d),
                BStep::Checkpoint => Step::Checkpoint,
            })
            .collect();
        let mut block_map = vec![None; self.n_qubits];
        for (b, blk) in self.blocks.iter().enumerate() {
            for (p, &q) in blk.qubits.iter().enumerate() {
                block_map[q].get_or_insert((b, p));
            }
        }
        let c = Circuit {
            n_qubits: self.n_qubits,
            locations,
            block_map,
            blocks: self.blocks,
            classical_directives: directives,
            program,
            inputs: self.inputs,
        };
        c.validate()?;
        Ok(c)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 3 || n == 5 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("gadgets exist for n=3 and n=5, got n={n}")))
    }
}

fn g(n: usize, r: usize, c: usize) -> usize {
    r * n + c
}

/// A small sub-circuit with relative times, placed later in absolute time.
struct Sub {
    ops: Vec<(LocKind, Vec<usize>, i64)>,
    /// Time by which every cat qubit is ready.
    ready: i64,
}

/// Schedules preparations and gates: gates as early as their order allows,
/// preps just before first use (or all at the start), trailing measurements
/// right after the last use.
fn schedule(
    preps: &[(usize, LocKind)],
    gates: &[(usize, usize)],
    verify_meas: Option<(usize, LocKind)>,
    late_preps: bool,
) -> Sub {
    let mut avail: std::collections::HashMap<usize, i64> = std::collections::HashMap::new();
    let mut first_use: std::collections::HashMap<usize, i64> = std::collections::HashMap::new();
    let mut ops = Vec::new();
    let mut gate_ops = Vec::new();
    for &(c, t) in gates {
        let time = avail.get(&c).copied().unwrap_or(0).max(avail.get(&t).copied().unwrap_or(0)) + 1;
        avail.insert(c, time);
        avail.insert(t, time);
        first_use.entry(c).or_insert(time);
        first_use.entry(t).or_insert(time);
        gate_ops.push((LocKind::Cnot, vec![c, t], time));
    }
    for &(q, k) in preps {
        let t = if late_preps { first_use[&q] - 1 } else { 0 };
        ops.push((k, vec![q], t));
    }
    ops.extend(gate_ops);
    let mut ready = 0;
    for &(q, _) in preps {
        if verify_meas.is_none_or(|(v, _)| v != q) {
            ready = ready.max(avail[&q]);
        }
    }
    if let Some((v, k)) = verify_meas {
        ready = ready.max(avail[&v]);
        ops.push((k, vec![v], avail[&v] + 1));
    }
    Sub { ops, ready }
}

/// Cat state in the Hadamard-rotated basis on `a` (n=5 adds a verifier).
fn h_cat(a: &[usize], ver: Option<usize>, late: bool) -> Sub {
    use LocKind::*;
    match a.len() {
        3 => schedule(&[(a[0], PrepPlus), (a[1], Prep0), (a[2], PrepPlus)], &[(a[0], a[1]), (a[2], a[1])], None, late),
        _ => {
            let v = ver.expect("five-qubit cats are verified");
            schedule(
                &[(a[0], PrepPlus), (a[1], PrepPlus), (a[2], Prep0), (a[3], PrepPlus), (a[4], PrepPlus), (v, PrepPlus)],
                &[(a[1], a[2]), (a[3], a[2]), (a[0], a[1]), (a[4], a[3]), (v, a[0]), (v, a[4])],
                Some((v, MeasX)),
                late,
            )
        }
    }
}

/// Cat state in the computational basis on `a` (n=5 adds a verifier).
fn z_cat(a: &[usize], ver: Option<usize>, late: bool) -> Sub {
    use LocKind::*;
    match a.len() {
        3 => schedule(&[(a[0], Prep0), (a[1], PrepPlus), (a[2], Prep0)], &[(a[1], a[0]), (a[1], a[2])], None, late),
        _ => {
            let v = ver.expect("five-qubit cats are verified");
            schedule(
                &[(a[0], Prep0), (a[1], Prep0), (a[2], PrepPlus), (a[3], Prep0), (a[4], Prep0), (v, Prep0)],
                &[(a[2], a[1]), (a[2], a[3]), (a[1], a[0]), (a[3], a[4]), (a[0], v), (a[4], v)],
                Some((v, MeasZ)),
                late,
            )
        }
    }
}

/// Emits a sub-circuit so that its qubits are ready for a layer at `layer`.
/// Returns handles of emitted measurements (verification only).
fn emit(b: &mut Builder, sub: &Sub, layer: i64) -> Vec<usize> {
    let shift = layer - 1 - sub.ready;
    let mut meas = Vec::new();
    for (k, qs, t) in &sub.ops {
        let h = b.op(*k, qs, t + shift);
        if k.is_meas() {
            meas.push(h);
        }
    }
    meas
}

/// Encoded |0> (`h_cat` per column) or |+> (`z_cat` per row) ancilla ready at `layer`.
/// Returns the ancilla block in grid order and the verification measurements.
fn ancilla_block(b: &mut Builder, n: usize, zero: bool, layer: i64, late: bool) -> (Vec<usize>, Vec<usize>) {
    let anc = b.alloc(n * n);
    let mut checks = Vec::new();
    for line in 0..n {
        let qs: Vec<usize> =
            (0..n).map(|k| if zero { anc[g(n, k, line)] } else { anc[g(n, line, k)] }).collect();
        let ver = if n == 5 { Some(b.alloc(1)[0]) } else { None };
        let sub = if zero { h_cat(&qs, ver, late) } else { z_cat(&qs, ver, late) };
        checks.extend(emit(b, &sub, layer));
    }
    (anc, checks)
}

/// Steane gadget on `data`, first touching it at `t0`; the data is free again at `t0 + 2`.
fn steane_ec(b: &mut Builder, n: usize, data: &[usize], t0: i64, opts: &BuildOptions, z_first: bool) {
    let (tz, tx) = if z_first { (t0, t0 + 1) } else { (t0 + 1, t0) };
    // Z-error syndrome: encoded |0> controls onto the data, then X measurements.
    let (a0, ver0) = ancilla_block(b, n, true, tz, opts.late_preps);
    let (a1, ver1) = ancilla_block(b, n, false, tx, opts.late_preps);
    let mut mx = Vec::new();
    let mut mz = Vec::new();
    for first in [true, false] {
        if first == z_first {
            for q in 0..n * n {
                b.op(LocKind::Cnot, &[a0[q], data[q]], tz);
            }
            mx = (0..n * n).map(|q| b.op(LocKind::MeasX, &[a0[q]], tz + 1)).collect();
        } else {
            // X-error syndrome: data controls onto encoded |+>, then Z measurements.
            for q in 0..n * n {
                b.op(LocKind::Cnot, &[data[q], a1[q]], tx);
            }
            mz = (0..n * n).map(|q| b.op(LocKind::MeasZ, &[a1[q]], tx + 1)).collect();
        }
    }
    for v in ver0.into_iter().chain(ver1) {
        b.directive(Directive::Postselect { meas: vec![v] });
    }
    b.directive(Directive::MajorityRecovery {
        groups: (0..n).map(|r| (0..n).map(|c| mx[g(n, r, c)]).collect()).collect(),
        targets: (0..n).map(|r| data[g(n, r, 0)]).collect(),
        pauli: PauliType::Z,
    });
    b.directive(Directive::MajorityRecovery {
        groups: (0..n).map(|c| (0..n).map(|r| mz[g(n, r, c)]).collect()).collect(),
        targets: (0..n).map(|c| data[g(n, 0, c)]).collect(),
        pauli: PauliType::X,
    });
}

/// Knill gadget teleporting `data` (first touched at `t0`) into a fresh block,
/// which is free from `t0` on. Returns the output block.
fn knill_ec(b: &mut Builder, n: usize, data: &[usize], t0: i64, opts: &BuildOptions, block_id: usize) -> Vec<usize> {
    let (plus, ver0) = ancilla_block(b, n, false, t0 - 1, opts.late_preps);
    let (zero, ver1) = ancilla_block(b, n, true, t0 - 1, opts.late_preps);
    for q in 0..n * n {
        b.op(LocKind::Cnot, &[plus[q], zero[q]], t0 - 1);
    }
    let was = b.bell;
    b.bell = true;
    for q in 0..n * n {
        b.op(LocKind::Cnot, &[data[q], plus[q]], t0);
    }
    let mx: Vec<usize> = (0..n * n).map(|q| b.op(LocKind::MeasX, &[data[q]], t0 + 1)).collect();
    let mz: Vec<usize> = (0..n * n).map(|q| b.op(LocKind::MeasZ, &[plus[q]], t0 + 1)).collect();
    b.bell = was;
    for v in ver0.into_iter().chain(ver1) {
        b.directive(Directive::Postselect { meas: vec![v] });
    }
    match opts.knill_correction {
        KnillCorrection::Bitwise => {
            b.directive(Directive::BitwiseCorrection { meas: mx, targets: zero.clone(), pauli: PauliType::Z });
            b.directive(Directive::BitwiseCorrection { meas: mz, targets: zero.clone(), pauli: PauliType::X });
        }
        KnillCorrection::Decoded => {
            b.directive(Directive::LogicalCorrection {
                groups: (0..n).map(|r| (0..n).map(|c| mx[g(n, r, c)]).collect()).collect(),
                support: (0..n).map(|r| zero[g(n, r, 0)]).collect(),
                block: block_id,
                pauli: PauliType::Z,
            });
            b.directive(Directive::LogicalCorrection {
                groups: (0..n).map(|c| (0..n).map(|r| mz[g(n, r, c)]).collect()).collect(),
                support: (0..n).map(|c| zero[g(n, 0, c)]).collect(),
                block: block_id,
                pauli: PauliType::X,
            });
        }
    }
    zero
}

/// Gauge-measurement gadget; data free again at `t0 + 4 * rounds`.
fn gauge_ec(b: &mut Builder, n: usize, data: &[usize], t0: i64, opts: &BuildOptions) -> i64 {
    let rounds = if n == 3 { 1 } else { opts.gauge_rounds.max(1) };
    // Ancilla k of a line measures the pair (pair_a[k], pair_b[k]); gates listed in figure order.
    let (pairs, order): (Vec<(usize, usize)>, Vec<(usize, usize)>) = if n == 3 {
        (vec![(0, 1), (1, 2), (0, 2)], vec![(2, 2), (1, 1), (0, 0), (1, 2), (0, 1), (2, 0)])
    } else {
        (
            vec![(0, 1), (1, 2), (2, 3), (3, 4)],
            vec![(3, 3), (2, 2), (1, 1), (0, 0), (3, 4), (2, 3), (1, 2), (0, 1)],
        )
    };
    let na = pairs.len();
    // outcomes[type][line][ancilla][round]
    let mut outcomes = vec![vec![vec![Vec::new(); na]; n]; 2];
    let mut t = t0;
    for _ in 0..rounds {
        for (ty, x_type) in [(0usize, true), (1, false)] {
            for line in 0..n {
                let anc = b.alloc(na);
                let dq = |k: usize| if x_type { data[g(n, k, line)] } else { data[g(n, line, k)] };
                let gates: Vec<(usize, usize)> = order
                    .iter()
                    .map(|&(a, k)| if x_type { (anc[a], dq(k)) } else { (dq(k), anc[a]) })
                    .collect();
                let prep = if x_type { LocKind::PrepPlus } else { LocKind::Prep0 };
                let preps: Vec<(usize, LocKind)> = anc.iter().map(|&a| (a, prep)).collect();
                let sub = schedule(&preps, &gates, None, true);
                let shift = t - 1;
                for (k, qs, rt) in &sub.ops {
                    b.op(*k, qs, rt + shift);
                }
                let meas = if x_type { LocKind::MeasX } else { LocKind::MeasZ };
                for (a, &q) in anc.iter().enumerate() {
                    let h = b.op(meas, &[q], t + 2);
                    outcomes[ty][line][a].push(h);
                }
            }
            t += 2;
        }
    }
    for (ty, pauli) in [(0usize, PauliType::Z), (1, PauliType::X)] {
        let groups = (0..n)
            .map(|line| GaugeGroup {
                pairs: (0..n - 1).map(|k| outcomes[ty][line][k].clone()).collect(),
                redundancy: if n == 3 { outcomes[ty][line][2].clone() } else { Vec::new() },
            })
            .collect();
        let targets = (0..n)
            .map(|k| if pauli == PauliType::Z { data[g(n, k, 0)] } else { data[g(n, 0, k)] })
            .collect();
        b.directive(Directive::GaugeRecovery { groups, targets, pauli });
    }
    t
}

fn ec(b: &mut Builder, style: EcStyle, n: usize, data: &[usize], t0: i64, opts: &BuildOptions, block_id: usize) -> (Vec<usize>, i64) {
    match style {
        EcStyle::Steane => {
            let z_first = match opts.steane_order {
                SteaneOrder::ZFirst => true,
                SteaneOrder::XFirst => false,
                SteaneOrder::Mirrored => block_id % 2 == 0,
            };
            steane_ec(b, n, data, t0, opts, z_first);
            (data.to_vec(), t0 + 2)
        }
        EcStyle::Knill => (knill_ec(b, n, data, t0, opts, block_id), t0),
        EcStyle::Gauge => {
            let t = gauge_ec(b, n, data, t0, opts);
            (data.to_vec(), t)
        }
    }
}

fn standalone_ec(style: EcStyle, n: usize, opts: &BuildOptions) -> Result<Circuit> {
    check_size(n)?;
    let mut b = Builder::new();
    let data = b.alloc(n * n);
    b.inputs = data.clone();
    b.block("data", &data);
    let (out, _) = ec(&mut b, style, n, &data, 0, opts, 1);
    b.block("output", &out);
    b.finish(true)
}

pub fn build_gauge_ec(n: usize) -> Result<Circuit> {
    standalone_ec(EcStyle::Gauge, n, &BuildOptions::default())
}

pub fn build_steane_ec(n: usize) -> Result<Circuit> {
    standalone_ec(EcStyle::Steane, n, &BuildOptions::default())
}

pub fn build_knill_ec(n: usize) -> Result<Circuit> {
    standalone_ec(EcStyle::Knill, n, &BuildOptions::default())
}

pub fn build_ec_with(style: EcStyle, n: usize, opts: &BuildOptions) -> Result<Circuit> {
    standalone_ec(style, n, opts)
}

pub fn build_cnot_exrec(n: usize, style: EcStyle, contracted: bool, knill_ideal_bell: bool) -> Result<ExRec> {
    build_cnot_exrec_with(n, style, contracted, knill_ideal_bell, &BuildOptions::default())
}

pub fn build_cnot_exrec_with(
    n: usize,
    style: EcStyle,
    contracted: bool,
    knill_ideal_bell: bool,
    opts: &BuildOptions,
) -> Result<ExRec> {
    check_size(n)?;
    if knill_ideal_bell && style != EcStyle::Knill {
        return Err(Error::Unsupported("ideal Bell measurements need Knill gadgets".into()));
    }
    let nn = n * n;
    let mut b = Builder::new();
    let dc = b.alloc(nn);
    let dt = b.alloc(nn);
    b.inputs = dc.iter().chain(&dt).copied().collect();
    b.block("control_in", &dc);
    b.block("target_in", &dt);
    // Leave room before t0 for ancilla preparation.
    let t0 = 16;
    b.region = Region::LeadingEc(0);
    let (c1, tf) = ec(&mut b, style, n, &dc, t0, opts, 2);
    b.region = Region::LeadingEc(1);
    let (t1, _) = ec(&mut b, style, n, &dt, t0, opts, 3);
    b.block("control_mid", &c1);
    b.block("target_mid", &t1);
    b.program.push(BStep::Checkpoint);
    b.region = Region::Ga;
    for q in 0..nn {
        b.op(LocKind::Cnot, &[c1[q], t1[q]], tf);
    }
    b.region = Region::TrailingEc(0);
    let (c2, _) = ec(&mut b, style, n, &c1, tf + 1, opts, 4);
    b.region = Region::TrailingEc(1);
    let (t2, _) = ec(&mut b, style, n, &t1, tf + 1, opts, 5);
    b.block("control_out", &c2);
    b.block("target_out", &t2);
    let circuit = b.finish(true)?;
    let mut leading = Vec::new();
    let mut ga = Vec::new();
    let mut trailing = Vec::new();
    let mut faultable = Vec::with_capacity(circuit.locations.len());
    for l in &circuit.locations {
        match l.region {
            Region::LeadingEc(_) => leading.push(l.id),
            Region::Ga => ga.push(l.id),
            Region::TrailingEc(_) => trailing.push(l.id),
            Region::Gadget => return Err(Error::Circuit("untagged exRec location".into())),
        }
        let mut f = true;
        if contracted && (l.kind.is_prep() || l.kind.is_meas()) {
            f = false;
        }
        if knill_ideal_bell && l.bell_measurement && matches!(l.region, Region::LeadingEc(_)) {
            f = false;
        }
        faultable.push(f);
    }
    Ok(ExRec {
        circuit,
        gate_kind: LocKind::Cnot,
        code_size: n,
        leading_ec_ids: leading,
        ga_ids: ga,
        trailing_ec_ids: trailing,
        ec_style: style,
        contracted,
        knill_ideal_bell,
        faultable,
        checkpoint_blocks: [c1, t1],
        output_blocks: [c2, t2],
    })
}

/// Decoding circuit mapping a block to its last qubit. Idle qubits are not
/// counted, so the location count is the decoder size D.
pub fn build_decoder(n: usize) -> Result<Circuit> {
    check_size(n)?;
    let mut b = Builder::new();
    let data = b.alloc(n * n);
    b.inputs = data.clone();
    b.block("data", &data);
    let last = n - 1;
    let mut t = 0;
    for r in 0..last {
        for c in 0..n {
            b.op(LocKind::Cnot, &[data[g(n, r, c)], data[g(n, last, c)]], t);
            t += 1;
        }
    }
    let out = data[g(n, last, last)];
    for c in 0..last {
        b.op(LocKind::Cnot, &[out, data[g(n, last, c)]], t);
        t += 1;
    }
    let mut row0 = Vec::new();
    for r in 0..last {
        for c in 0..n {
            let h = b.op(LocKind::MeasX, &[data[g(n, r, c)]], t);
            if r == 0 {
                row0.push(h);
            }
        }
    }
    let mut col0 = None;
    for c in 0..last {
        let h = b.op(LocKind::MeasZ, &[data[g(n, last, c)]], t);
        if c == 0 {
            col0 = Some(h);
        }
    }
    b.directive(Directive::ParityCorrection { meas: row0, target: out, pauli: PauliType::Z });
    b.directive(Directive::ParityCorrection { meas: vec![col0.unwrap()], target: out, pauli: PauliType::X });
    b.block("output", &[out]);
    b.finish(false)
}
