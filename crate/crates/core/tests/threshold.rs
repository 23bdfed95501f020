use bsft::error::Error;
use bsft::malignancy::binomial;
use bsft::threshold::*;
use proptest::prelude::*;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

/// C(n, k) by repeated multiplication, independent of the library helper.
fn choose(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn bs3(a: f64, a_str: f64) -> RecursionModel {
    RecursionModel { t: 1, a, b: choose(297, 3), a_str, b_str: choose(153, 3), c0: 0.0, c0_str: 0.0, conditioned: false }
}

fn bs5() -> RecursionModel {
    RecursionModel {
        t: 2,
        a: 16625488.0,
        b: choose(1185, 4),
        a_str: 8653028.0,
        b_str: choose(705, 4),
        c0: 190.0,
        c0_str: 120.0,
        conditioned: true,
    }
}

#[test]
fn a_prime_matches_published_bounds() {
    let s = solve_a_prime(12913.0, choose(297, 3), 1).unwrap();
    assert!(s <= 13241.0 && rel(s, 13241.0) < 1e-3, "{s}");
    let k = solve_a_prime(11184.0, choose(297, 3), 1).unwrap();
    assert!(k <= 11559.0 && rel(k, 11559.0) < 1e-3, "{k}");
    let st = solve_a_prime(4939.0, choose(153, 3), 1).unwrap();
    assert!(st <= 5055.0 && rel(st, 5055.0) < 1e-3, "{st}");
}

#[test]
fn a_prime_without_b_is_a() {
    for t in 1..5 {
        assert_eq!(solve_a_prime(321.5, 0.0, t).unwrap(), 321.5);
    }
}

#[test]
fn a_prime_rejects_bad_input() {
    assert!(matches!(solve_a_prime(-1.0, 1.0, 1), Err(Error::Domain(_))));
    assert!(solve_a_prime(1.0, -1.0, 1).is_err());
    assert!(solve_a_prime(1.0, 1.0, 0).is_err());
    assert!(solve_a_prime(f64::NAN, 1.0, 1).is_err());
}

#[test]
fn naive_threshold_examples() {
    let p = naive_threshold(297, 1).unwrap();
    assert!((p - 1.0 / 43956.0).abs() < 1e-18);
    assert!((2.2e-5..=2.3e-5).contains(&p));
    assert_eq!(naive_threshold(2, 1).unwrap(), 1.0);
    let want = choose(1185, 3).powf(-0.5);
    assert!(rel(naive_threshold(1185, 2).unwrap(), want) < 1e-12);
    assert!(naive_threshold(2, 2).is_err());
}

#[test]
fn coherent_sum_bound_examples() {
    let eps: f64 = 0.03;
    assert!(rel(coherent_fault_sum_bound(7, 7, eps).unwrap(), eps.powi(7)) < 1e-12);
    assert_eq!(coherent_fault_sum_bound(297, 3, 0.0).unwrap(), 0.0);
    let want = choose(297, 2) * 1e-8 * (295.0f64 * 1e-4).exp();
    assert!(rel(coherent_fault_sum_bound(297, 2, 1e-4).unwrap(), want) < 1e-12);
    assert!(coherent_fault_sum_bound(3, 4, 0.1).is_err());
    assert!(coherent_fault_sum_bound(3, 1, -0.1).is_err());
}

#[test]
fn coherent_threshold_is_below_the_stochastic_one() {
    let c = coherent_threshold(297, 1).unwrap();
    let naive = naive_threshold(297, 1).unwrap();
    assert!(c.epsilon < naive);
    assert!(c.kappa > 1.0);
    // κ from the naive value overestimates the one needed at the smaller ε.
    assert!(c.residual <= 0.0);
    assert!(rel(c.epsilon, (c.kappa * choose(297, 2)).powf(-1.0)) < 1e-12);
}

#[test]
fn two_stage_reproduces_published_thresholds() {
    let (p, l1) = two_stage_threshold(13241.0, 5055.0).unwrap();
    assert!(rel(p, 1.22e-4) < 0.01, "{p}");
    assert!(rel(l1, 1.97e-4) < 0.01, "{l1}");

    let a1 = solve_a_prime(11184.0, choose(297, 3), 1).unwrap();
    let ast = solve_a_prime(5328.0, choose(153, 3), 1).unwrap();
    let (p, _) = two_stage_threshold(a1, ast).unwrap();
    assert!(rel(p, 1.26e-4) < 0.01, "{p}");

    assert_eq!(two_stage_threshold(1.0, 1.0).unwrap(), (1.0, 1.0));
    assert!(two_stage_threshold(0.0, 1.0).is_err());
}

#[test]
fn two_stage_agrees_with_iterating_the_recursion() {
    let a1 = solve_a_prime(12913.0, choose(297, 3), 1).unwrap();
    let ast = solve_a_prime(4939.0, choose(153, 3), 1).unwrap();
    let (p, _) = two_stage_threshold(a1, ast).unwrap();
    let pure = RecursionModel { t: 1, a: a1, b: 0.0, a_str: ast, b_str: 0.0, c0: 0.0, c0_str: 0.0, conditioned: false };
    let fp = fixed_point(&pure).unwrap();
    assert!(rel(fp, p) < 1e-6, "{fp} vs {p}");
}

#[test]
fn bs5_conditioned_threshold() {
    let p = conditioned_fixed_point(&bs5()).unwrap();
    assert!(rel(p, 1.94e-4) < 0.01, "{p}");
    let mut unconditioned = bs5();
    unconditioned.conditioned = false;
    assert!(conditioned_fixed_point(&unconditioned).is_err());
    assert!(fixed_point(&unconditioned).unwrap() > p);
}

#[test]
fn pure_cubic_map_has_analytic_fixed_point() {
    for a in [10.0, 1234.0, 8.6e6] {
        let m = RecursionModel { t: 2, a, b: 0.0, a_str: a, b_str: 0.0, c0: 0.0, c0_str: 0.0, conditioned: true };
        let p = conditioned_fixed_point(&m).unwrap();
        assert!(rel(p, a.powf(-0.5)) < 1e-9, "{a}: {p}");
    }
}

#[test]
fn model_validation() {
    let mut m = bs5();
    m.b = -1.0;
    assert!(fixed_point(&m).is_err());
    let mut m = bs5();
    m.t = 0;
    assert!(fixed_point(&m).is_err());
    let m = RecursionModel { a_str: 0.0, b_str: 0.0, ..bs5() };
    assert!(fixed_point(&m).is_err());
}

#[test]
fn recursion_converges_below_and_diverges_above() {
    for m in [bs3(12913.0, 4939.0), bs3(11184.0, 5328.0), bs5()] {
        let thr = fixed_point(&m).unwrap();
        for f in [0.1, 0.5, 0.9, 0.99] {
            let seq = m.sequence(thr * f, 40);
            assert!(*seq.last().unwrap() < 1e-30, "{f}: {:?}", &seq[..4]);
            assert!(seq.windows(2).skip(1).all(|w| w[1] < w[0] || w[1] == 0.0));
        }
        for f in [1.01, 1.5, 3.0] {
            let seq = m.sequence(thr * f, 40);
            let end = *seq.last().unwrap();
            assert!(!(end < 1.0), "{f}: ends at {end}");
        }
    }
}

#[test]
fn error_budget_examples() {
    let p = 1e-5;
    assert!(rel(error_budget(p, 1e-4, 1, 1e6, 0).unwrap(), 2.0 * 1e6 * p) < 1e-12);
    // Doubling k squares the ratio for t = 1.
    let r = |k| error_budget(p, 1e-4, 1, 0.5, k).unwrap() / 1e-4;
    for k in 1..4 {
        assert!(rel(r(2 * k), r(k).powi(1 << k)) < 1e-9);
    }
    assert!(error_budget(1e-4, 1e-4, 1, 1.0, 1).is_err());
}

#[test]
fn required_level_matches_iterated_recursion() {
    let (thr, l, d0) = (1.22e-4, 1e6, 1e-2);
    let p = thr / 2.0;
    let k = required_level(p, thr, 1, l, d0).unwrap();
    // Oracle: iterate p -> p²/thr until 2L·p^(k) drops below δ0.
    let mut q = p;
    let mut levels = 0;
    while 2.0 * l * q > d0 {
        q = q * q / thr;
        levels += 1;
    }
    assert_eq!(k, levels);
    let logs = ((2.0 * l * thr / d0).ln() / (thr / p).ln()).log2().ceil() as u32;
    assert_eq!(k, logs);
    assert!(required_level(thr, thr, 1, l, d0).is_err());
}

#[test]
fn plus_i_distillation() {
    assert_eq!(distill_plus_i(0.0, 3).unwrap().p_out, 0.0);
    let r = distill_plus_i(0.2, 1).unwrap();
    assert!((r.bound - 0.08).abs() < 1e-15);
    assert!(rel(r.p_out, 0.04 / 0.68) < 1e-12);
    assert_eq!(PLUS_I_THRESHOLD, 0.5);
    for p in [0.0, 0.5, 1.0] {
        assert_eq!(distill_plus_i(p, 1).unwrap().p_out, p);
    }
    assert!(distill_plus_i(1.2, 1).is_err());
}

#[test]
fn toffoli_distillation() {
    assert_eq!(toffoli_threshold(ToffoliVariant::Crude), 1.0 / 512.0);
    let imp = toffoli_threshold(ToffoliVariant::Improved);
    assert!(imp >= 0.0145);
    assert!(rel(imp, 243.0 / 16384.0) < 1e-12);
    for v in [ToffoliVariant::Crude, ToffoliVariant::Improved] {
        assert_eq!(distill_toffoli([0.0; 3], v).unwrap(), [0.0; 3]);
    }
    let c = distill_toffoli([0.01, 0.02, 0.03], ToffoliVariant::Crude).unwrap();
    let want = [32.0 * 1e-4, 128.0 * 4e-4, 512.0 * 9e-4];
    for i in 0..3 {
        assert!(rel(c[i], want[i]) < 1e-12);
    }
    // At threshold the worst component is a fixed point.
    let out = distill_toffoli([imp; 3], ToffoliVariant::Improved).unwrap();
    assert!(rel(out[2], imp) < 1e-12 && out[0] < imp && out[1] < imp);
    assert!(distill_toffoli([0.13, 0.0, 0.0], ToffoliVariant::Improved).is_err());
    assert!(distill_toffoli([0.5, -0.1, 0.0], ToffoliVariant::Crude).is_err());
}

#[test]
fn recursive_toffoli_preparation() {
    assert!(rel(toffoli_recursive_prep_threshold(9, 3, 1).unwrap(), 1.0 / 351.0) < 1e-12);
    let want = (5.0 * choose(25, 3) + choose(5, 3) * 25f64.powi(3)).powf(-0.5);
    let got = toffoli_recursive_prep_threshold(25, 5, 2).unwrap();
    assert!(rel(got, want) < 1e-12);
    assert!((0.0024..0.0025).contains(&got));
    assert!(toffoli_recursive_prep_threshold(1, 1, 0).is_err());
}

/// Independent evaluation of the quadratic-mode bound.
fn ancilla_oracle(a: f64, a_str: f64, p: f64, d: f64, s: u32) -> f64 {
    let a1 = a / 2.0 * (1.0 + (1.0 + 4.0 * choose(297, 3) / (a * a)).sqrt());
    let ast = a_str / 2.0 * (1.0 + (1.0 + 4.0 * choose(153, 3) / (a_str * a_str)).sqrt());
    let mut sum = p;
    let mut q = a1 * p * p;
    for _ in 1..102 {
        sum += q;
        q = ast * q * q;
    }
    let x = ast * q;
    sum += (1.0 / ast) / (1.0 - x * x);
    d * sum + (3 + s) as f64 * p
}

#[test]
fn ancilla_bound_against_oracle_and_published_values() {
    let m = bs3(11184.0, 5328.0);
    for (p, s, want) in [(1.16e-4, 1, 0.0125), (1.16e-4, 4, 0.0129)] {
        let b = ancilla_accuracy_bound(&m, p, 16.0, DEFAULT_K_TERMS, AncillaMode::Bs3, s).unwrap();
        assert!(rel(b.value, ancilla_oracle(11184.0, 5328.0, p, 16.0, s)) < 1e-9);
        assert!(rel(b.value, want) < 0.02, "p={p} s={s}: {}", b.value);
        assert!(b.gamma.is_none() && b.a1_prime.is_some());
    }
}

#[test]
fn ancilla_bound_bs5_mode() {
    let b = ancilla_accuracy_bound(&bs5(), 1.9e-4, 48.0, DEFAULT_K_TERMS, AncillaMode::Bs5, 1).unwrap();
    assert!(b.gamma.unwrap() > 0.0);
    assert!(b.value < PLUS_I_THRESHOLD);
    assert!(rel(b.injection, 4.0 * 1.9e-4) < 1e-12);
    let seq = bs5().sequence(1.9e-4, DEFAULT_K_TERMS + 2);
    let explicit: f64 = seq[..DEFAULT_K_TERMS + 2].iter().sum();
    assert!(rel(b.explicit_sum, explicit) < 1e-12);
}

#[test]
fn ancilla_bound_reports_divergence() {
    let m = bs3(11184.0, 5328.0);
    let r = ancilla_accuracy_bound(&m, 2e-4, 16.0, DEFAULT_K_TERMS, AncillaMode::Bs3, 1);
    assert!(matches!(r, Err(Error::Divergent(_))), "{r:?}");
    let r = ancilla_accuracy_bound(&bs5(), 3e-4, 48.0, DEFAULT_K_TERMS, AncillaMode::Bs5, 1);
    assert!(matches!(r, Err(Error::Divergent(_))), "{r:?}");
    assert!(ancilla_accuracy_bound(&m, 0.0, 16.0, 10, AncillaMode::Bs3, 1).is_err());
}

#[test]
fn ancilla_bound_grows_with_p() {
    let m = bs3(11184.0, 5328.0);
    let v: Vec<f64> = [0.5e-4, 0.8e-4, 1.0e-4, 1.16e-4, 1.2e-4]
        .iter()
        .map(|&p| ancilla_accuracy_bound(&m, p, 16.0, DEFAULT_K_TERMS, AncillaMode::Bs3, 1).unwrap().value)
        .collect();
    assert!(v.windows(2).all(|w| w[0] < w[1]), "{v:?}");
}

proptest! {
    #[test]
    fn a_prime_residual_is_tiny(a in 1.0f64..1e8, b in 0.0f64..1e13, t in 1u32..4) {
        let x = solve_a_prime(a, b, t).unwrap();
        let res = (a + b * x.powf(-1.0 / t as f64) - x).abs() / x;
        prop_assert!(res < 1e-9, "residual {}", res);
        prop_assert!(x >= a);
    }

    #[test]
    fn thresholds_drop_when_a_grows(a in 1e3f64..5e4, bump in 1.01f64..2.0) {
        let m = bs3(a, 4939.0);
        let m2 = bs3(a * bump, 4939.0);
        prop_assert!(fixed_point(&m2).unwrap() < fixed_point(&m).unwrap());
        let ms = bs3(12913.0, a);
        let ms2 = bs3(12913.0, a * bump);
        prop_assert!(fixed_point(&ms2).unwrap() < fixed_point(&ms).unwrap());
        prop_assert!(naive_threshold((a as u64).max(3), 1).unwrap() > naive_threshold(((a * bump) as u64).max(4), 1).unwrap());
    }

    #[test]
    fn conditioned_threshold_drops_when_a_grows(bump in 1.05f64..3.0) {
        let m = bs5();
        let m2 = RecursionModel { a: m.a * bump, ..m.clone() };
        prop_assert!(conditioned_fixed_point(&m2).unwrap() < conditioned_fixed_point(&m).unwrap());
    }

    #[test]
    fn plus_i_moves_away_from_one_half(p in 0.0f64..1.0) {
        let q = distill_plus_i(p, 1).unwrap().p_out;
        if p > 0.0 && p < 0.5 - 1e-9 {
            prop_assert!(q < p);
            prop_assert!(q <= 2.0 * p * p + 1e-15);
        } else if p > 0.5 + 1e-9 && p < 1.0 {
            prop_assert!(q > p);
        }
    }

    #[test]
    fn iterated_plus_i_respects_its_bound(p in 0.0f64..0.5, rounds in 0u32..6) {
        let r = distill_plus_i(p, rounds).unwrap();
        prop_assert!(r.p_out <= r.bound * (1.0 + 1e-9) + 1e-300);
    }

    #[test]
    fn required_level_meets_target(ratio in 0.01f64..0.95, l in 1.0f64..1e9, d0 in 1e-12f64..1e-1, t in 1u32..3) {
        let thr = 1e-4;
        let p = ratio * thr;
        let k = required_level(p, thr, t, l, d0).unwrap();
        prop_assert!(error_budget(p, thr, t, l, k).unwrap() <= d0);
        if k > 0 {
            prop_assert!(error_budget(p, thr, t, l, k - 1).unwrap() > d0);
        }
    }
}

#[test]
fn library_binomial_agrees_with_product_formula() {
    for (n, k) in [(297, 2), (297, 3), (153, 3), (1185, 3), (1185, 4), (705, 4)] {
        assert!(rel(binomial(n, k), choose(n, k)) < 1e-12);
    }
}
