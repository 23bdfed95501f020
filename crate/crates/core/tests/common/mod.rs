//! Dense real state-vector simulator used as an independent oracle.
//!
//! Executes a circuit with actual random measurement outcomes and actual
//! classical processing, applying faults and corrections as gates. Only
//! Clifford circuits on real states are supported; Y is applied as XZ.
#![allow(dead_code)]

use std::collections::HashMap;

use bsft::circuits::{Circuit, Directive, ExRec, GaugeGroup, LocKind, PauliType, Step};
use bsft::faultsim::{FaultAssignment, FaultDescriptor};
use bsft::pauli::Letter;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Dense {
    pub amp: Vec<f64>,
}

impl Dense {
    pub fn new(slots: usize) -> Dense {
        let mut amp = vec![0.0; 1 << slots];
        amp[0] = 1.0;
        Dense { amp }
    }

    pub fn x(&mut self, q: usize) {
        let m = 1 << q;
        for i in 0..self.amp.len() {
            if i & m == 0 {
                self.amp.swap(i, i | m);
            }
        }
    }

    pub fn z(&mut self, q: usize) {
        let m = 1 << q;
        for (i, a) in self.amp.iter_mut().enumerate() {
            if i & m != 0 {
                *a = -*a;
            }
        }
    }

    pub fn h(&mut self, q: usize) {
        let m = 1 << q;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.amp.len() {
            if i & m == 0 {
                let (a, b) = (self.amp[i], self.amp[i | m]);
                self.amp[i] = (a + b) * s;
                self.amp[i | m] = (a - b) * s;
            }
        }
    }

    pub fn cnot(&mut self, c: usize, t: usize) {
        let (mc, mt) = (1 << c, 1 << t);
        for i in 0..self.amp.len() {
            if i & mc != 0 && i & mt == 0 {
                self.amp.swap(i, i | mt);
            }
        }
    }

    pub fn pauli(&mut self, q: usize, l: Letter) {
        match l {
            Letter::I => {}
            Letter::X => self.x(q),
            Letter::Z => self.z(q),
            Letter::Y => {
                self.x(q);
                self.z(q);
            }
        }
    }

    /// Z-basis measurement; leaves the slot in |0>.
    pub fn measure_z(&mut self, q: usize, rng: &mut ChaCha8Rng) -> bool {
        let m = 1 << q;
        let p1: f64 = self.amp.iter().enumerate().filter(|(i, _)| i & m != 0).map(|(_, a)| a * a).sum();
        let one = if p1 < 1e-9 {
            false
        } else if p1 > 1.0 - 1e-9 {
            true
        } else {
            rng.gen::<f64>() < p1
        };
        let norm = if one { p1 } else { 1.0 - p1 }.sqrt();
        for (i, a) in self.amp.iter_mut().enumerate() {
            if (i & m != 0) != one {
                *a = 0.0;
            } else {
                *a /= norm;
            }
        }
        if one {
            self.x(q);
        }
        one
    }

    pub fn expect_z(&self, qs: &[usize]) -> f64 {
        let mask: usize = qs.iter().map(|q| 1 << q).sum();
        self.amp
            .iter()
            .enumerate()
            .map(|(i, a)| if (i & mask).count_ones() % 2 == 1 { -a * a } else { a * a })
            .sum()
    }

    pub fn expect_x(&self, qs: &[usize]) -> f64 {
        let mask: usize = qs.iter().map(|q| 1 << q).sum();
        self.amp.iter().enumerate().map(|(i, a)| a * self.amp[i ^ mask]).sum()
    }
}

fn touched(c: &Circuit, step: &Step, ck: &[usize]) -> Vec<usize> {
    match *step {
        Step::Loc(id) => c.locations[id].qubits().to_vec(),
        Step::Directive(k) => c.classical_directives[k].targets(),
        Step::Checkpoint => ck.to_vec(),
    }
}

/// Dependency-respecting order that keeps few qubits alive: repeatedly
/// schedules the measurement whose unscheduled past needs the fewest new
/// preparations, together with that past.
pub fn greedy_order(c: &Circuit, ck: &[usize]) -> (Vec<Step>, usize) {
    let steps = &c.program;
    let mut last_on: Vec<Option<usize>> = vec![None; c.n_qubits];
    let mut step_of_loc = vec![usize::MAX; c.locations.len()];
    let mut deps: Vec<Vec<usize>> = Vec::with_capacity(steps.len());
    for (i, s) in steps.iter().enumerate() {
        let mut d: Vec<usize> = Vec::new();
        for q in touched(c, s, ck) {
            if let Some(p) = last_on[q] {
                d.push(p);
            }
            last_on[q] = Some(i);
        }
        match *s {
            Step::Loc(id) => step_of_loc[id] = i,
            Step::Directive(k) => d.extend(c.classical_directives[k].measurements().iter().map(|&m| step_of_loc[m])),
            Step::Checkpoint => {}
        }
        deps.push(d);
    }
    let is_prep = |i: usize| matches!(steps[i], Step::Loc(id) if c.locations[id].kind.is_prep());
    let is_meas = |i: usize| matches!(steps[i], Step::Loc(id) if c.locations[id].kind.is_meas());
    let mut done = vec![false; steps.len()];
    let cone = |root: usize, done: &[bool]| -> Vec<usize> {
        let mut seen = vec![false; steps.len()];
        let mut stack = vec![root];
        let mut out = Vec::new();
        while let Some(i) = stack.pop() {
            if done[i] || seen[i] {
                continue;
            }
            seen[i] = true;
            out.push(i);
            stack.extend(deps[i].iter().copied());
        }
        out.sort_unstable();
        out
    };
    let mut order = Vec::with_capacity(steps.len());
    let mut live: usize = c.inputs.len();
    let mut peak = live;
    let mut emit = |i: usize, done: &mut Vec<bool>, order: &mut Vec<Step>| {
        done[i] = true;
        order.push(steps[i]);
        if is_prep(i) {
            live += 1;
            peak = peak.max(live);
        }
        if is_meas(i) {
            live -= 1;
        }
    };
    loop {
        let mut best: Option<(usize, Vec<usize>)> = None;
        for i in 0..steps.len() {
            if done[i] || !is_meas(i) {
                continue;
            }
            let cn = cone(i, &done);
            let preps = cn.iter().filter(|&&j| is_prep(j)).count();
            if best.as_ref().is_none_or(|(bp, _)| preps < *bp) {
                best = Some((preps, cn));
            }
        }
        let Some((_, cn)) = best else { break };
        for j in cn {
            emit(j, &mut done, &mut order);
        }
        // Classical steps whose inputs are now available.
        for i in 0..steps.len() {
            if !done[i] && !matches!(steps[i], Step::Loc(_)) && deps[i].iter().all(|&d| done[d]) {
                emit(i, &mut done, &mut order);
            }
        }
    }
    for i in 0..steps.len() {
        if !done[i] {
            emit(i, &mut done, &mut order);
        }
    }
    (order, peak)
}

fn minority_flips(parities: &[bool]) -> Vec<bool> {
    // Flip the minority side of the repetition pattern.
    let ones = parities.iter().filter(|&&p| p).count();
    if 2 * ones > parities.len() {
        parities.iter().map(|&p| !p).collect()
    } else {
        parities.to_vec()
    }
}

fn rep_flips_from_diffs(diffs: &[bool]) -> Vec<bool> {
    // Pattern relative to element 0; ties keep element 0's side.
    let mut e = vec![false];
    for &d in diffs {
        let last = *e.last().unwrap();
        e.push(last ^ d);
    }
    minority_flips(&e)
}

fn gauge_round_syndrome(groups: &[GaugeGroup], out: &HashMap<usize, bool>, r: usize) -> Vec<bool> {
    let np = groups[0].pairs.len();
    let mut s = vec![false; np];
    for g in groups {
        let mut v: Vec<bool> = g.pairs.iter().map(|p| out[&p[r]]).collect();
        if let Some(red) = g.redundancy.get(r) {
            if v.iter().fold(out[red], |a, &b| a ^ b) {
                v[0] = v[1] ^ out[red];
            }
        }
        for k in 0..np {
            s[k] ^= v[k];
        }
    }
    s
}

pub struct Execution {
    pub state: Dense,
    pub slot: HashMap<usize, usize>,
    pub accepted: bool,
    /// Decoded checkpoint values, when requested.
    pub checkpoint: Option<Vec<bool>>,
}

/// Runs `c`. `init` prepares the input qubits (given their slots); `ck`
/// decodes blocks at the checkpoint step.
pub fn execute(
    c: &Circuit,
    faults: &FaultAssignment,
    rng: &mut ChaCha8Rng,
    ck_qubits: &[usize],
    init: &mut dyn FnMut(&mut Dense, &HashMap<usize, usize>, &mut ChaCha8Rng),
    ck: &mut dyn FnMut(&Dense, &HashMap<usize, usize>) -> Vec<bool>,
) -> Execution {
    let (order, peak) = greedy_order(c, ck_qubits);
    assert!(peak <= 24, "oracle would need {peak} live qubits");
    let mut st = Dense::new(peak);
    let mut free: Vec<usize> = (0..peak).rev().collect();
    let mut slot = HashMap::new();
    for &q in &c.inputs {
        slot.insert(q, free.pop().unwrap());
    }
    init(&mut st, &slot, rng);
    let mut outcomes: HashMap<usize, bool> = HashMap::new();
    let mut accepted = true;
    let mut checkpoint = None;
    for s in order {
        match s {
            Step::Loc(id) => {
                let l = &c.locations[id];
                let f = faults.entries.get(&id).copied();
                match l.kind {
                    LocKind::Prep0 | LocKind::PrepPlus => {
                        let sl = free.pop().expect("slot");
                        slot.insert(l.qubits()[0], sl);
                        if l.kind == LocKind::PrepPlus {
                            st.h(sl);
                        }
                        if f == Some(FaultDescriptor::Flip) {
                            if l.kind == LocKind::Prep0 {
                                st.x(sl)
                            } else {
                                st.z(sl)
                            }
                        }
                    }
                    LocKind::MeasX | LocKind::MeasZ => {
                        let sl = slot.remove(&l.qubits()[0]).unwrap();
                        if l.kind == LocKind::MeasX {
                            st.h(sl);
                        }
                        let mut o = st.measure_z(sl, rng);
                        if f == Some(FaultDescriptor::Flip) {
                            o = !o;
                        }
                        outcomes.insert(id, o);
                        free.push(sl);
                    }
                    LocKind::Memory => {
                        if let Some(FaultDescriptor::Pauli1(p)) = f {
                            st.pauli(slot[&l.qubits()[0]], p);
                        }
                    }
                    LocKind::Cnot => {
                        let (a, b) = (slot[&l.qubits()[0]], slot[&l.qubits()[1]]);
                        st.cnot(a, b);
                        if let Some(FaultDescriptor::Pauli2(p, q)) = f {
                            st.pauli(a, p);
                            st.pauli(b, q);
                        }
                    }
                }
            }
            Step::Directive(k) => {
                let apply = |st: &mut Dense, q: usize, p: PauliType| match p {
                    PauliType::X => st.x(slot[&q]),
                    PauliType::Z => st.z(slot[&q]),
                };
                let par = |ms: &[usize]| ms.iter().fold(false, |a, m| a ^ outcomes[m]);
                match &c.classical_directives[k] {
                    Directive::MajorityRecovery { groups, targets, pauli } => {
                        let p: Vec<bool> = groups.iter().map(|g| par(g)).collect();
                        let d: Vec<bool> = p.windows(2).map(|w| w[0] ^ w[1]).collect();
                        for (q, f) in targets.iter().zip(rep_flips_from_diffs(&d)) {
                            if f {
                                apply(&mut st, *q, *pauli);
                            }
                        }
                    }
                    Directive::GaugeRecovery { groups, targets, pauli } => {
                        let rounds = groups[0].pairs[0].len();
                        let syn = if rounds == 1 {
                            gauge_round_syndrome(groups, &outcomes, 0)
                        } else {
                            let a = gauge_round_syndrome(groups, &outcomes, rounds - 1);
                            let b = gauge_round_syndrome(groups, &outcomes, rounds - 2);
                            if a == b || rounds < 3 || b != gauge_round_syndrome(groups, &outcomes, rounds - 3) {
                                a
                            } else {
                                b
                            }
                        };
                        for (q, f) in targets.iter().zip(rep_flips_from_diffs(&syn)) {
                            if f {
                                apply(&mut st, *q, *pauli);
                            }
                        }
                    }
                    Directive::BitwiseCorrection { meas, targets, pauli } => {
                        for (m, q) in meas.iter().zip(targets) {
                            if outcomes[m] {
                                apply(&mut st, *q, *pauli);
                            }
                        }
                    }
                    Directive::LogicalCorrection { groups, support, pauli, .. } => {
                        let ones = groups.iter().filter(|g| par(g)).count();
                        if 2 * ones > groups.len() {
                            for q in support {
                                apply(&mut st, *q, *pauli);
                            }
                        }
                    }
                    Directive::ParityCorrection { meas, target, pauli } => {
                        if par(meas) {
                            apply(&mut st, *target, *pauli);
                        }
                    }
                    Directive::Postselect { meas } => {
                        if par(meas) {
                            accepted = false;
                        }
                    }
                }
            }
            Step::Checkpoint => checkpoint = Some(ck(&st, &slot)),
        }
    }
    Execution { state: st, slot, accepted, checkpoint }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Basis {
    Z,
    X,
}

/// Encodes the logical basis state `bit` of the given basis on a grid block,
/// then applies random gauge operators.
pub fn encode(st: &mut Dense, n: usize, slots: &[usize], basis: Basis, bit: bool, rng: &mut ChaCha8Rng) {
    let q = |r: usize, c: usize| slots[r * n + c];
    match basis {
        Basis::Z => {
            // Columns hold even-parity states: |+..+> + |-..->.
            for c in 0..n {
                for r in 1..n {
                    st.h(q(r, c));
                    st.cnot(q(r, c), q(0, c));
                }
            }
            if bit {
                for c in 0..n {
                    st.x(q(0, c));
                }
            }
        }
        Basis::X => {
            for r in 0..n {
                st.h(q(r, 0));
                for c in 1..n {
                    st.cnot(q(r, 0), q(r, c));
                }
            }
            if bit {
                for r in 0..n {
                    st.z(q(r, 0));
                }
            }
        }
    }
    for _ in 0..2 * n {
        let (r, c) = (rng.gen_range(0..n - 1), rng.gen_range(0..n));
        if rng.gen() {
            st.x(q(r, c));
            st.x(q(r + 1, c));
        } else {
            st.z(q(c, r));
            st.z(q(c, r + 1));
        }
    }
}

/// Majority over lines of the bare logical operator values; asserts the
/// block is an eigenstate of each line operator.
pub fn decode(st: &Dense, n: usize, slots: &[usize], basis: Basis) -> bool {
    let mut ones = 0;
    for line in 0..n {
        let v = match basis {
            Basis::Z => st.expect_z(&(0..n).map(|r| slots[r * n + line]).collect::<Vec<_>>()),
            Basis::X => st.expect_x(&(0..n).map(|c| slots[line * n + c]).collect::<Vec<_>>()),
        };
        assert!((v.abs() - 1.0).abs() < 1e-6, "block is not an eigenstate of line {line}: {v}");
        if v < 0.0 {
            ones += 1;
        }
    }
    2 * ones > n
}

/// Replays `faults` on the exRec in one basis with random logical inputs.
/// Returns `None` when postselection rejects, else whether the logical
/// outcome disagrees with the ideal CNOT of the decoded checkpoint.
pub fn exrec_fails(ex: &ExRec, faults: &FaultAssignment, basis: Basis, seed: u64) -> Option<bool> {
    let n = ex.code_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inputs = [rng.gen::<bool>(), rng.gen::<bool>()];
    let cb = ex.checkpoint_blocks.clone();
    let ck_qubits: Vec<usize> = cb.iter().flatten().copied().collect();
    let in_blocks = [ex.circuit.inputs[..n * n].to_vec(), ex.circuit.inputs[n * n..].to_vec()];
    let mut init = |st: &mut Dense, slot: &HashMap<usize, usize>, rng: &mut ChaCha8Rng| {
        for (b, blk) in in_blocks.iter().enumerate() {
            let s: Vec<usize> = blk.iter().map(|q| slot[q]).collect();
            encode(st, n, &s, basis, inputs[b], rng);
        }
    };
    let mut ck = |st: &Dense, slot: &HashMap<usize, usize>| -> Vec<bool> {
        cb.iter()
            .map(|blk| decode(st, n, &blk.iter().map(|q| slot[q]).collect::<Vec<_>>(), basis))
            .collect()
    };
    let ex_run = execute(&ex.circuit, faults, &mut rng, &ck_qubits, &mut init, &mut ck);
    if !ex_run.accepted {
        return None;
    }
    let cv = ex_run.checkpoint.expect("checkpoint");
    let out: Vec<bool> = ex
        .output_blocks
        .iter()
        .map(|blk| decode(&ex_run.state, n, &blk.iter().map(|q| ex_run.slot[q]).collect::<Vec<_>>(), basis))
        .collect();
    let expect = match basis {
        Basis::Z => [cv[0], cv[0] ^ cv[1]],
        Basis::X => [cv[0] ^ cv[1], cv[1]],
    };
    Some(out[0] != expect[0] || out[1] != expect[1])
}
