//! Exact and sampled counting of malignant fault-location sets.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{EcStyle, ExRec, LocKind};
use crate::error::{Error, Result};
use crate::faultsim::{xor_into, Compiled, DescriptorSet, FaultAssignment, FaultDescriptor, Sig, MAX_WORDS};

/// Default cap on descriptor evaluations for one exact sweep.
pub const DEFAULT_EVAL_CAP: u64 = 50_000_000;
/// Default per-set descriptor budget above which assignments are sampled.
pub const DEFAULT_DESCRIPTOR_BUDGET: u64 = 4096;

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

pub fn binomial_u64(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

/// Malignant pair counts by location-type pair, lower triangular (row ≥ column).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlphaMatrix {
    pub alpha: [[u64; 6]; 6],
    /// Pairs with an X-type failure.
    pub alpha_x: [[u64; 6]; 6],
    /// Pairs with a Z-type failure.
    pub alpha_z: [[u64; 6]; 6],
    /// Faultable locations per type.
    pub type_counts: [usize; 6],
    pub a: u64,
    pub c: usize,
    pub b: u64,
}

impl AlphaMatrix {
    fn empty(type_counts: [usize; 6]) -> Self {
        let c: usize = type_counts.iter().sum();
        AlphaMatrix { type_counts, c, b: binomial_u64(c as u64, 3), ..Default::default() }
    }

    fn add(&mut self, ti: usize, tj: usize, x: bool, z: bool) {
        let (r, c) = if ti >= tj { (ti, tj) } else { (tj, ti) };
        if x {
            self.alpha_x[r][c] += 1;
        }
        if z {
            self.alpha_z[r][c] += 1;
        }
        if x || z {
            self.alpha[r][c] += 1;
            self.a += 1;
        }
    }

    pub fn get(&self, i: LocKind, j: LocKind) -> u64 {
        let (a, b) = (i.index(), j.index());
        if a >= b {
            self.alpha[a][b]
        } else {
            self.alpha[b][a]
        }
    }

    /// Sum over cells whose types both lie in `kinds`.
    pub fn restricted_total(&self, kinds: &[LocKind]) -> u64 {
        let mut s = 0;
        for &a in kinds {
            for &b in kinds {
                if a.index() >= b.index() {
                    s += self.alpha[a.index()][b.index()];
                }
            }
        }
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("type");
        for k in LocKind::ALL {
            out.push(',');
            out.push_str(k.name());
        }
        out.push('\n');
        for (i, k) in LocKind::ALL.iter().enumerate() {
            out.push_str(k.name());
            for j in 0..6 {
                out.push(',');
                if j <= i {
                    out.push_str(&self.alpha[i][j].to_string());
                }
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub set_size: usize,
    pub samples: u64,
    pub malignant: u64,
    pub f_hat: f64,
    pub sigma: f64,
    /// f̂ · C(C, set_size).
    pub a_hat: f64,
    pub a_sigma: f64,
    pub descriptor_budget: u64,
    /// Sets whose assignment space exceeded the budget and was sampled.
    pub sampled_sets: u64,
    pub seed: u64,
}

impl McEstimate {
    pub fn from_counts(set_size: usize, samples: u64, malignant: u64, c: usize, budget: u64, sampled: u64, seed: u64) -> Self {
        let f = if samples == 0 { 0.0 } else { malignant as f64 / samples as f64 };
        let sigma = if samples == 0 { 0.0 } else { (f * (1.0 - f) / samples as f64).sqrt() };
        let scale = binomial(c as u64, set_size as u64);
        McEstimate {
            set_size,
            samples,
            malignant,
            f_hat: f,
            sigma,
            a_hat: f * scale,
            a_sigma: sigma * scale,
            descriptor_budget: budget,
            sampled_sets: sampled,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub p: f64,
    pub trials: u64,
    pub accepted: u64,
    pub failures: u64,
    pub rate: f64,
    pub sigma: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// A fault assignment that makes the exRec incorrect.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub locations: Vec<usize>,
    pub assignment: FaultAssignment,
    pub x: bool,
    pub z: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairCount {
    pub alpha: AlphaMatrix,
    pub witnesses: Vec<Witness>,
    pub evaluations: u64,
}

#[derive(Clone, Debug, Default)]
struct SetResult {
    x: bool,
    z: bool,
    witness: Option<Vec<usize>>,
}

/// Compiled exRec ready for repeated malignancy queries.
pub struct Engine {
    pub compiled: Compiled,
    pub code_size: usize,
    pub ec_style: EcStyle,
    pub contracted: bool,
    pub ideal_bell: bool,
    pub descriptor_set: DescriptorSet,
}

impl Engine {
    pub fn new(exrec: &ExRec, set: DescriptorSet) -> Result<Engine> {
        Ok(Engine {
            compiled: Compiled::new(exrec, set)?,
            code_size: exrec.code_size,
            ec_style: exrec.ec_style,
            contracted: exrec.contracted,
            ideal_bell: exrec.knill_ideal_bell,
            descriptor_set: set,
        })
    }

    /// Number of faultable locations.
    pub fn c(&self) -> usize {
        self.compiled.locs.len()
    }

    pub fn type_counts(&self) -> [usize; 6] {
        let mut t = [0; 6];
        for k in &self.compiled.kinds {
            t[k.index()] += 1;
        }
        t
    }

    fn positions(&self, ids: &[usize]) -> Result<Vec<usize>> {
        let mut ps = Vec::with_capacity(ids.len());
        for &id in ids {
            let p = self
                .compiled
                .position(id)
                .ok_or_else(|| Error::Fault(format!("location {id} is not a fault location of this exRec")))?;
            if ps.contains(&p) {
                return Err(Error::Fault(format!("location {id} listed twice")));
            }
            ps.push(p);
        }
        Ok(ps)
    }

    /// Lexicographic search over descriptor tuples; stops once both flags are set.
    fn search(&self, ps: &[usize], evals: &mut u64) -> SetResult {
        let cm = &self.compiled;
        let w = cm.words;
        let k = ps.len();
        let mut res = SetResult::default();
        if k == 0 {
            *evals += 1;
            return res;
        }
        let mut idx = vec![0usize; k];
        // prefix[i] = XOR of the first i chosen signatures
        let mut prefix: Vec<Sig> = vec![[0u64; MAX_WORDS]; k + 1];
        for i in 0..k {
            let mut s = prefix[i];
            xor_into(&mut s, &cm.desc_sigs[ps[i]][0], w);
            prefix[i + 1] = s;
        }
        loop {
            *evals += 1;
            if let Some((x, z)) = cm.eval(&prefix[k]) {
                if (x && !res.x) || (z && !res.z) {
                    if res.witness.is_none() {
                        res.witness = Some(idx.clone());
                    }
                    res.x |= x;
                    res.z |= z;
                    if res.x && res.z {
                        return res;
                    }
                }
            }
            // advance odometer, last position fastest
            let mut i = k;
            loop {
                if i == 0 {
                    return res;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < cm.desc_sigs[ps[i]].len() {
                    break;
                }
                idx[i] = 0;
            }
            for j in i..k {
                let mut s = prefix[j];
                xor_into(&mut s, &cm.desc_sigs[ps[j]][idx[j]], w);
                prefix[j + 1] = s;
            }
        }
    }

    fn sampled_search(&self, ps: &[usize], budget: u64, rng: &mut ChaCha8Rng) -> SetResult {
        let cm = &self.compiled;
        let mut res = SetResult::default();
        for _ in 0..budget {
            let picks: Vec<usize> = ps.iter().map(|&p| rng.gen_range(0..cm.desc_sigs[p].len())).collect();
            let mut s = [0u64; MAX_WORDS];
            for (&p, &d) in ps.iter().zip(&picks) {
                xor_into(&mut s, &cm.desc_sigs[p][d], cm.words);
            }
            if let Some((x, z)) = cm.eval(&s) {
                if (x || z) && res.witness.is_none() {
                    res.witness = Some(picks.clone());
                }
                res.x |= x;
                res.z |= z;
                if res.x && res.z {
                    break;
                }
            }
        }
        res
    }

    fn witness(&self, ps: &[usize], picks: &[usize], x: bool, z: bool) -> Witness {
        let cm = &self.compiled;
        let mut a = FaultAssignment::new();
        for (&p, &d) in ps.iter().zip(picks) {
            a.entries.insert(cm.locs[p], cm.desc[p][d]);
        }
        Witness { locations: ps.iter().map(|&p| cm.locs[p]).collect(), assignment: a, x, z }
    }

    /// (X malignant, Z malignant) for a set of location ids.
    pub fn is_malignant(&self, ids: &[usize]) -> Result<(bool, bool)> {
        let ps = self.positions(ids)?;
        let r = self.search(&ps, &mut 0);
        Ok((r.x, r.z))
    }

    /// Like [`Engine::is_malignant`] but also returns the first witness.
    pub fn malignant_witness(&self, ids: &[usize]) -> Result<Option<Witness>> {
        let ps = self.positions(ids)?;
        let r = self.search(&ps, &mut 0);
        Ok(r.witness.map(|w| self.witness(&ps, &w, r.x, r.z)))
    }

    /// Upper bound on assignment evaluations for the full pair sweep.
    pub fn pair_evaluations(&self) -> u64 {
        let d: Vec<u64> = self.compiled.desc_sigs.iter().map(|v| v.len() as u64).collect();
        let s: u64 = d.iter().sum();
        let sq: u64 = d.iter().map(|x| x * x).sum();
        (s * s - sq) / 2
    }

    pub fn count_pairs_exact(&self, workers: usize, cap: u64) -> Result<PairCount> {
        let needed = self.pair_evaluations();
        if needed > cap {
            return Err(Error::Budget { needed, cap });
        }
        let c = self.c();
        let kinds = &self.compiled.kinds;
        let sweep = || -> Vec<(AlphaMatrix, Vec<Witness>, u64)> {
            (0..c)
                .into_par_iter()
                .map(|i| {
                    let mut m = AlphaMatrix::empty(self.type_counts());
                    let mut ws = Vec::new();
                    let mut evals = 0;
                    for j in i + 1..c {
                        let r = self.search(&[i, j], &mut evals);
                        m.add(kinds[i].index(), kinds[j].index(), r.x, r.z);
                        if let Some(p) = r.witness {
                            ws.push(self.witness(&[i, j], &p, r.x, r.z));
                        }
                    }
                    (m, ws, evals)
                })
                .collect()
        };
        let parts = if workers == 0 {
            sweep()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| Error::Unsupported(e.to_string()))?
                .install(sweep)
        };
        let mut total = AlphaMatrix::empty(self.type_counts());
        let mut witnesses = Vec::new();
        let mut evaluations = 0;
        for (m, ws, e) in parts {
            for r in 0..6 {
                for col in 0..6 {
                    total.alpha[r][col] += m.alpha[r][col];
                    total.alpha_x[r][col] += m.alpha_x[r][col];
                    total.alpha_z[r][col] += m.alpha_z[r][col];
                }
            }
            total.a += m.a;
            witnesses.extend(ws);
            evaluations += e;
        }
        Ok(PairCount { alpha: total, witnesses, evaluations })
    }

    fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        rng
    }

    /// Malignancy verdict of MC sample `index`: (malignant, assignment space was sampled).
    fn mc_sample(&self, set_size: usize, seed: u64, index: u64, budget: u64) -> (bool, bool) {
        let mut rng = Self::sample_rng(seed, index);
        let ps = sample(&mut rng, self.c(), set_size).into_vec();
        let space: u64 = ps.iter().map(|&p| self.compiled.desc_sigs[p].len() as u64).product();
        if space > budget {
            let r = self.sampled_search(&ps, budget, &mut rng);
            (r.x || r.z, true)
        } else {
            let r = self.search(&ps, &mut 0);
            (r.x || r.z, false)
        }
    }

    /// Tally of samples `start..end`: (malignant, sampled).
    pub fn mc_range(&self, set_size: usize, seed: u64, start: u64, end: u64, budget: u64) -> (u64, u64) {
        (start..end)
            .into_par_iter()
            .map(|i| {
                let (m, s) = self.mc_sample(set_size, seed, i, budget);
                (m as u64, s as u64)
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
    }

    pub fn count_sets_mc(&self, set_size: usize, samples: u64, seed: u64, budget: u64) -> Result<McEstimate> {
        if set_size < 2 || set_size > self.c() {
            return Err(Error::Domain(format!("set size {set_size} outside 2..={}", self.c())));
        }
        let (m, s) = self.mc_range(set_size, seed, 0, samples, budget);
        Ok(McEstimate::from_counts(set_size, samples, m, self.c(), budget, s, seed))
    }

    /// Fraction of accepted trials that end incorrect under i.i.d. location faults.
    pub fn direct_failure_rate(&self, p: f64, trials: u64, seed: u64) -> Result<RateEstimate> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Domain(format!("fault probability {p} outside [0, 1)")));
        }
        let cm = &self.compiled;
        let (acc, fail) = (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = Self::sample_rng(seed, t);
                let mut s = [0u64; MAX_WORDS];
                let mut any = false;
                for sigs in &cm.desc_sigs {
                    if rng.gen::<f64>() < p {
                        let d = rng.gen_range(0..sigs.len());
                        xor_into(&mut s, &sigs[d], cm.words);
                        any = true;
                    }
                }
                if !any {
                    return (1u64, 0u64);
                }
                match cm.eval(&s) {
                    None => (0, 0),
                    Some((x, z)) => (1, (x || z) as u64),
                }
            })
            .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        let rate = if acc == 0 { 0.0 } else { fail as f64 / acc as f64 };
        let sigma = if acc == 0 { 0.0 } else { (rate * (1.0 - rate) / acc as f64).sqrt() };
        Ok(RateEstimate {
            p,
            trials,
            accepted: acc,
            failures: fail,
            rate,
            sigma,
            ci_low: (rate - 1.96 * sigma).max(0.0),
            ci_high: (rate + 1.96 * sigma).min(1.0),
        })
    }
}

pub fn is_malignant(exrec: &ExRec, ids: &[usize]) -> Result<(bool, bool)> {
    Engine::new(exrec, DescriptorSet::Full)?.is_malignant(ids)
}

pub fn count_pairs_exact(exrec: &ExRec, workers: usize) -> Result<PairCount> {
    Engine::new(exrec, DescriptorSet::Full)?.count_pairs_exact(workers, DEFAULT_EVAL_CAP)
}

pub fn count_sets_mc(exrec: &ExRec, set_size: usize, samples: u64, seed: u64) -> Result<McEstimate> {
    Engine::new(exrec, DescriptorSet::Full)?.count_sets_mc(set_size, samples, seed, DEFAULT_DESCRIPTOR_BUDGET)
}

pub fn direct_failure_rate(exrec: &ExRec, p: f64, trials: u64, seed: u64) -> Result<RateEstimate> {
    Engine::new(exrec, DescriptorSet::Full)?.direct_failure_rate(p, trials, seed)
}

/// Descriptor index of `d` at compiled position `p`, for replaying stored witnesses.
pub fn descriptor_index(engine: &Engine, p: usize, d: FaultDescriptor) -> Option<usize> {
    engine.compiled.desc[p].iter().position(|&x| x == d)
}
