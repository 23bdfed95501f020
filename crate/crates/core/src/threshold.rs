//! Threshold arithmetic: effective coefficients, recursion fixed points,
//! error budgets, distillation maps and ancilla accuracy bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::malignancy::binomial;

/// Explicitly summed levels in [`ancilla_accuracy_bound`] before the tail bound.
pub const DEFAULT_K_TERMS: usize = 100;
/// Distillation threshold of the |+i> protocol.
pub const PLUS_I_THRESHOLD: f64 = 0.5;
/// Distillation threshold of the |H> magic state, quoted for comparison only.
pub const H_STATE_THRESHOLD: f64 = 0.14;
/// Upper limit on Toffoli error components for the improved constants.
pub const TOFFOLI_VALIDITY: f64 = 0.12;
pub const TOFFOLI_BETA: f64 = 4.0 / 3.0;
pub const TOFFOLI_GAMMA: f64 = 8.0 / 3.0;

fn check_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite, got {v}")))
    }
}

/// Positive root of A + B·x^(−1/t) = x.
pub fn solve_a_prime(a: f64, b: f64, t: u32) -> Result<f64> {
    check_finite("A", a)?;
    check_finite("B", b)?;
    if a <= 0.0 || b < 0.0 || t == 0 {
        return Err(Error::Domain(format!("need A > 0, B >= 0, t >= 1 (A={a}, B={b}, t={t})")));
    }
    if b == 0.0 {
        return Ok(a);
    }
    if t == 1 {
        return Ok(a / 2.0 * (1.0 + (1.0 + 4.0 * b / (a * a)).sqrt()));
    }
    let tf = t as f64;
    let f = |x: f64| a + b * x.powf(-1.0 / tf) - x;
    // f(a) > 0 and f(a + b·a^(−1/t)) <= 0 since x^(−1/t) decreases.
    let mut lo = a;
    let mut hi = a + b * a.powf(-1.0 / tf);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-15 * hi {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    if (f(x) / x).abs() >= 1e-12 {
        return Err(Error::NoConvergence(format!("A' residual {} at {x}", f(x) / x)));
    }
    Ok(x)
}

/// C(C, t+1)^(−1/t).
pub fn naive_threshold(c: u64, t: u32) -> Result<f64> {
    if t == 0 || c < t as u64 + 1 {
        return Err(Error::Domain(format!("need t >= 1 and C >= t+1 (C={c}, t={t})")));
    }
    Ok(binomial(c, t as u64 + 1).powf(-1.0 / t as f64))
}

/// C(C, s)·ε^s·e^((C−s)ε).
pub fn coherent_fault_sum_bound(c: u64, s: u64, eps: f64) -> Result<f64> {
    if s > c || !(eps >= 0.0) {
        return Err(Error::Domain(format!("need 0 <= s <= C and eps >= 0 (C={c}, s={s}, eps={eps})")));
    }
    if s == 0 {
        return Ok(((c - s) as f64 * eps).exp());
    }
    Ok(binomial(c, s) * eps.powi(s as i32) * ((c - s) as f64 * eps).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentThreshold {
    pub epsilon: f64,
    pub kappa: f64,
    /// e^((C−t−1)ε)/κ − 1 at the returned ε; nonpositive means self-consistent.
    pub residual: f64,
}

/// Critical coherent-noise strength (κ·C(C,t+1))^(−1/t) with κ from one
/// iteration starting at κ = 1.
pub fn coherent_threshold(c: u64, t: u32) -> Result<CoherentThreshold> {
    let eps0 = naive_threshold(c, t)?;
    let m = (c - t as u64 - 1) as f64;
    let kappa = (m * eps0).exp();
    let epsilon = (kappa * binomial(c, t as u64 + 1)).powf(-1.0 / t as f64);
    let residual = (m * epsilon).exp() / kappa - 1.0;
    Ok(CoherentThreshold { epsilon, kappa, residual })
}

/// (p_thr, level-1 condition) for a level-1 then contracted quadratic recursion.
pub fn two_stage_threshold(a1_prime: f64, astr_prime: f64) -> Result<(f64, f64)> {
    if !(a1_prime > 0.0 && astr_prime > 0.0) {
        return Err(Error::Domain(format!("coefficients must be positive ({a1_prime}, {astr_prime})")));
    }
    let level1 = 1.0 / astr_prime;
    Ok(((level1 / a1_prime).sqrt(), level1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionModel {
    pub t: u32,
    pub a: f64,
    pub b: f64,
    pub a_str: f64,
    pub b_str: f64,
    pub c0: f64,
    pub c0_str: f64,
    pub conditioned: bool,
}

impl RecursionModel {
    pub fn validate(&self) -> Result<()> {
        for (n, v) in [("A", self.a), ("B", self.b), ("A_str", self.a_str), ("B_str", self.b_str), ("C0", self.c0), ("C0_str", self.c0_str)] {
            check_finite(n, v)?;
            if v < 0.0 {
                return Err(Error::Domain(format!("{n} must be nonnegative, got {v}")));
            }
        }
        if self.t == 0 {
            return Err(Error::Domain("t must be at least 1".into()));
        }
        Ok(())
    }

    fn step(&self, p: f64, a: f64, b: f64, c0: f64) -> f64 {
        let base = (a + b * p) * p.powi(self.t as i32 + 1);
        if self.conditioned {
            base / (1.0 - p).powf(4.0 * c0)
        } else {
            base
        }
    }

    pub fn level1(&self, p: f64) -> f64 {
        self.step(p, self.a, self.b, self.c0)
    }

    pub fn contracted(&self, p: f64) -> f64 {
        self.step(p, self.a_str, self.b_str, self.c0_str)
    }

    /// Noise strengths p^(0..=levels).
    pub fn sequence(&self, p: f64, levels: usize) -> Vec<f64> {
        let mut v = Vec::with_capacity(levels + 1);
        v.push(p);
        for j in 1..=levels {
            let prev = v[j - 1];
            let next = if !(prev < 1.0) {
                f64::INFINITY
            } else if j == 1 {
                self.level1(prev)
            } else {
                self.contracted(prev)
            };
            v.push(next);
        }
        v
    }

    /// Whether the level-1 then contracted iteration drives p to zero.
    pub fn converges(&self, p: f64) -> bool {
        let mut q = self.level1(p);
        for _ in 0..10_000 {
            if !(q < 1.0) {
                return false;
            }
            if q < 1e-200 {
                return true;
            }
            let next = self.contracted(q);
            if !(next < q) {
                return false;
            }
            q = next;
        }
        false
    }
}

/// Largest p whose recursion converges, by bisection.
pub fn fixed_point(model: &RecursionModel) -> Result<f64> {
    model.validate()?;
    if model.a_str == 0.0 && model.b_str == 0.0 {
        return Err(Error::Domain("contracted coefficients vanish; recursion has no threshold".into()));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    if model.converges(hi) {
        return Ok(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if model.converges(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi {
            break;
        }
    }
    if lo == 0.0 {
        return Err(Error::NoConvergence("no convergent noise strength found".into()));
    }
    Ok(lo)
}

/// Fixed point of the postselection-conditioned recursion.
pub fn conditioned_fixed_point(model: &RecursionModel) -> Result<f64> {
    if !model.conditioned {
        return Err(Error::Domain("model is not conditioned on acceptance".into()));
    }
    fixed_point(model)
}

/// δ = 2L·p_thr·(p/p_thr)^((t+1)^k).
pub fn error_budget(p: f64, p_thr: f64, t: u32, l: f64, k: u32) -> Result<f64> {
    if !(p >= 0.0 && p < p_thr) {
        return Err(Error::Domain(format!("need 0 <= p < p_thr (p={p}, p_thr={p_thr})")));
    }
    let e = ((t + 1) as f64).powi(k as i32);
    Ok(2.0 * l * p_thr * (p / p_thr).powf(e))
}

/// Smallest level k with error_budget(p, p_thr, t, L, k) <= δ0.
pub fn required_level(p: f64, p_thr: f64, t: u32, l: f64, delta0: f64) -> Result<u32> {
    error_budget(p, p_thr, t, l, 0)?;
    if !(delta0 > 0.0) {
        return Err(Error::Domain(format!("target error must be positive, got {delta0}")));
    }
    let ratio = (2.0 * l * p_thr / delta0).ln() / (p_thr / p).ln();
    let mut k = if ratio <= 1.0 { 0 } else { ratio.log((t + 1) as f64).ceil().max(0.0) as u32 };
    while error_budget(p, p_thr, t, l, k)? > delta0 {
        k += 1;
    }
    while k > 0 && error_budget(p, p_thr, t, l, k - 1)? <= delta0 {
        k -= 1;
    }
    Ok(k)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlusIResult {
    pub p_out: f64,
    /// (1/2)(2p)^(2^rounds).
    pub bound: f64,
}

/// Rounds of |+i> distillation: p → p²/(p² + (1−p)²).
pub fn distill_plus_i(p: f64, rounds: u32) -> Result<PlusIResult> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("probability {p} outside [0, 1]")));
    }
    let mut q = p;
    for _ in 0..rounds {
        q = q * q / (q * q + (1.0 - q) * (1.0 - q));
    }
    let bound = 0.5 * (2.0 * p).powf(2f64.powi(rounds as i32));
    Ok(PlusIResult { p_out: q, bound })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToffoliVariant {
    Crude,
    Improved,
}

/// One full round (three subprotocols) of Toffoli distillation.
pub fn distill_toffoli(state: [f64; 3], variant: ToffoliVariant) -> Result<[f64; 3]> {
    for &x in &state {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!("probability {x} outside [0, 1]")));
        }
    }
    let [a, b, c] = state;
    match variant {
        ToffoliVariant::Crude => Ok([32.0 * a * a, 128.0 * b * b, 512.0 * c * c]),
        ToffoliVariant::Improved => {
            if state.iter().any(|&x| x > TOFFOLI_VALIDITY) {
                return Err(Error::Domain(format!("improved constants need components <= {TOFFOLI_VALIDITY}")));
            }
            let (be, g) = (TOFFOLI_BETA, TOFFOLI_GAMMA);
            Ok([be * g * g * a * a, be * g.powi(3) * b * b, be * g.powi(4) * c * c])
        }
    }
}

pub fn toffoli_threshold(variant: ToffoliVariant) -> f64 {
    match variant {
        ToffoliVariant::Crude => 1.0 / 512.0,
        ToffoliVariant::Improved => 1.0 / (TOFFOLI_BETA * TOFFOLI_GAMMA.powi(4)),
    }
}

/// (d·C(n_c, t+1) + C(d, t+1)·n_c^(t+1))^(−1/t).
pub fn toffoli_recursive_prep_threshold(n_c: u64, d: u64, t: u32) -> Result<f64> {
    if t == 0 || d != 2 * t as u64 + 1 {
        return Err(Error::Domain(format!("need t >= 1 and d = 2t+1 (d={d}, t={t})")));
    }
    let t1 = t as u64 + 1;
    let v = d as f64 * binomial(n_c, t1) + binomial(d, t1) * (n_c as f64).powi(t1 as i32);
    Ok(v.powf(-1.0 / t as f64))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AncillaMode {
    /// Quadratic recursion with effective coefficients A′ and A′_str.
    Bs3,
    /// Conditioned cubic recursion.
    Bs5,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AncillaBound {
    pub p: f64,
    pub d: f64,
    /// Σ p^(j) over the explicit levels j = 0..=k_terms+1.
    pub explicit_sum: f64,
    /// Closed-form bound on the levels from k_terms+2 on.
    pub tail: f64,
    /// A′ (Bs3) or the level-1 coefficient used (Bs5).
    pub a1_prime: Option<f64>,
    pub astr_prime: Option<f64>,
    pub gamma: Option<f64>,
    pub injection: f64,
    pub value: f64,
}

/// D·Σ_j p^(j) + (3+s)·p, with the sum split into explicit levels and a tail.
pub fn ancilla_accuracy_bound(
    model: &RecursionModel,
    p: f64,
    d: f64,
    k_terms: usize,
    mode: AncillaMode,
    extra_prep_locs: u32,
) -> Result<AncillaBound> {
    model.validate()?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("noise strength {p} outside (0, 1)")));
    }
    let last = k_terms + 2;
    let divergent = |j: usize, v: f64| Error::Divergent(format!("p^({j}) = {v:e} does not decrease at p = {p:e}"));
    let mut levels = Vec::with_capacity(last + 1);
    levels.push(p);
    let (a1p, asp, gamma, tail);
    match mode {
        AncillaMode::Bs3 => {
            let a1 = solve_a_prime(model.a, model.b, 1)?;
            let ast = solve_a_prime(model.a_str, model.b_str, 1)?;
            levels.push(a1 * p * p);
            for j in 2..=last {
                let prev = levels[j - 1];
                levels.push(ast * prev * prev);
            }
            let x = ast * levels[last];
            if !(x < 1.0) || !(ast * levels[1] < 1.0) {
                return Err(divergent(last, levels[last]));
            }
            tail = (1.0 / ast) / (1.0 - x * x);
            a1p = Some(a1);
            asp = Some(ast);
            gamma = None;
        }
        AncillaMode::Bs5 => {
            let seq = model.sequence(p, last);
            levels = seq;
            let pl = levels[last];
            if !pl.is_finite() || levels.iter().any(|&v| !(v < 1.0)) {
                return Err(divergent(last, pl));
            }
            let g = (model.a_str + model.b_str * pl) / (1.0 - pl).powf(4.0 * model.c0_str);
            let x = g * pl;
            if !(x < 1.0) {
                return Err(divergent(last, pl));
            }
            tail = (1.0 / g) / (1.0 - x.powi(3));
            a1p = None;
            asp = None;
            gamma = Some(g);
        }
    }
    let explicit_sum: f64 = levels[..last].iter().sum();
    let injection = (3 + extra_prep_locs) as f64 * p;
    let value = d * (explicit_sum + tail) + injection;
    Ok(AncillaBound { p, d, explicit_sum, tail, a1_prime: a1p, astr_prime: asp, gamma, injection, value })
}
