use std::fs;
use std::path::Path;
use std::time::Instant;

use bsft::circuits::{build_cnot_exrec, build_decoder, build_ec_with, BuildOptions, ExRec, LocKind};
use bsft::malignancy::{binomial, Engine, McEstimate};
use bsft::threshold::{
    ancilla_accuracy_bound, conditioned_fixed_point, distill_plus_i, distill_toffoli, fixed_point, solve_a_prime,
    toffoli_recursive_prep_threshold, toffoli_threshold, two_stage_threshold, AncillaMode, RecursionModel,
    PLUS_I_THRESHOLD,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::*;

pub const SCHEMA: u64 = 1;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Budget(String),
    Runtime(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Budget(_) => 3,
            Failure::Runtime(_) => 1,
        }
    }

    pub fn to_json(&self) -> Value {
        let (kind, msg) = match self {
            Failure::Validation(m) => ("validation", m),
            Failure::Budget(m) => ("budget", m),
            Failure::Runtime(m) => ("runtime", m),
        };
        json!({ "error": { "kind": kind, "message": msg, "exit_code": self.exit_code() } })
    }
}

impl From<bsft::Error> for Failure {
    fn from(e: bsft::Error) -> Self {
        match e {
            bsft::Error::Budget { .. } => Failure::Budget(e.to_string()),
            bsft::Error::NoConvergence(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Validation(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

/// Wraps a result with its config; runtime goes to `metadata` so reruns compare equal elsewhere.
fn envelope(kind: &str, config: Value, result: Value, started: Instant) -> Value {
    json!({
        "schema": SCHEMA,
        "kind": kind,
        "config": config,
        "result": result,
        "metadata": {
            "runtime_s": started.elapsed().as_secs_f64(),
            "version": env!("CARGO_PKG_VERSION"),
        },
    })
}

pub fn emit_text(out: &OutArgs, text: &str) -> Res<()> {
    match &out.out {
        Some(p) => fs::write(p, text).map_err(|e| io_err(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit(out: &OutArgs, v: &Value) -> Res<()> {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    emit_text(out, &s)
}

pub fn resolve_workers(flag: Option<usize>) -> Res<usize> {
    let w = match flag {
        Some(w) => w,
        None => match std::env::var("BSFT_WORKERS") {
            Ok(s) => s.trim().parse().map_err(|_| Failure::Validation(format!("BSFT_WORKERS={s:?} is not a count")))?,
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        },
    };
    if w == 0 {
        return Err(Failure::Validation("workers must be at least 1".into()));
    }
    Ok(w)
}

fn pool(workers: usize) -> Res<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(|e| Failure::Runtime(e.to_string()))
}

fn build_exrec(g: &GadgetArgs) -> Res<ExRec> {
    Ok(build_cnot_exrec(g.code.size(), g.ec_style.into(), g.contracted, g.ideal_bell)?)
}

fn gadget_json(g: &GadgetArgs, ex: &ExRec) -> Value {
    json!({
        "code": g.code,
        "ec_style": g.ec_style,
        "contracted": g.contracted,
        "ideal_bell": g.ideal_bell,
        "descriptors": g.descriptors,
        "C": ex.placeable_count(),
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(b), Value::Object(e)) = (&mut base, extra) {
        b.extend(e);
    }
    base
}

pub fn count(args: &CountArgs) -> Res<()> {
    let started = Instant::now();
    let workers = resolve_workers(args.workers)?;
    let mut config = to_value(args);
    config["workers"] = json!(workers);
    let ex = build_exrec(&args.gadget)?;
    let engine = Engine::new(&ex, args.gadget.descriptors.into())?;
    let pool = pool(workers)?;
    let (kind, result) = if args.exact_pairs {
        let pc = pool.install(|| engine.count_pairs_exact(0, args.eval_cap))?;
        if let Some(p) = &args.csv {
            fs::write(p, pc.alpha.to_csv()).map_err(|e| io_err(p, e))?;
        }
        if let Some(p) = &args.witnesses {
            let s = serde_json::to_string(&pc.witnesses).expect("witnesses serialize");
            fs::write(p, s).map_err(|e| io_err(p, e))?;
        }
        let m = &pc.alpha;
        let r = json!({
            "alpha": m.alpha,
            "alpha_x": m.alpha_x,
            "alpha_z": m.alpha_z,
            "type_counts": m.type_counts,
            "A": m.a,
            "A_str": m.restricted_total(&[LocKind::Memory, LocKind::Cnot]),
            "B": m.b,
            "evaluations": pc.evaluations,
            "witness_count": pc.witnesses.len(),
            "witnesses_path": args.witnesses,
            "workers": workers,
            "seed": args.seed,
        });
        ("count-exact", merge(gadget_json(&args.gadget, &ex), r))
    } else {
        let est = pool.install(|| run_mc(args, &engine))?;
        let r = merge(to_value(&est), json!({ "B": binomial(engine.c() as u64, args.set_size as u64), "workers": workers }));
        ("count-mc", merge(gadget_json(&args.gadget, &ex), r))
    };
    emit(&args.out, &envelope(kind, config, result, started))
}

#[derive(Serialize, Deserialize, PartialEq, Clone, Debug)]
struct CheckpointKey {
    gadget: Value,
    set_size: usize,
    seed: u64,
    budget: u64,
}

#[derive(Serialize, Deserialize, Debug)]
struct Checkpoint {
    schema: u64,
    key: CheckpointKey,
    done: u64,
    malignant: u64,
    sampled: u64,
}

fn run_mc(args: &CountArgs, engine: &Engine) -> Res<McEstimate> {
    let k = args.set_size;
    if k < 2 || k > engine.c() {
        return Err(Failure::Validation(format!("set size {k} outside 2..={}", engine.c())));
    }
    let key = CheckpointKey { gadget: to_value(&args.gadget), set_size: k, seed: args.seed, budget: args.budget };
    let (mut done, mut malignant, mut sampled) = (0, 0, 0);
    if let Some(path) = &args.checkpoint {
        if path.exists() {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let cp: Checkpoint = serde_json::from_str(&text)
                .map_err(|e| Failure::Validation(format!("{}: unreadable checkpoint: {e}", path.display())))?;
            if cp.schema != SCHEMA || cp.key != key {
                return Err(Failure::Validation(format!("{}: checkpoint belongs to a different run", path.display())));
            }
            if cp.done > args.samples {
                return Err(Failure::Validation(format!("checkpoint holds {} samples, more than requested", cp.done)));
            }
            (done, malignant, sampled) = (cp.done, cp.malignant, cp.sampled);
        }
    }
    let step = if args.checkpoint.is_some() { args.checkpoint_every.max(1) } else { args.samples.max(1) };
    while done < args.samples {
        let end = (done + step).min(args.samples);
        let (m, s) = engine.mc_range(k, args.seed, done, end, args.budget);
        malignant += m;
        sampled += s;
        done = end;
        if let Some(path) = &args.checkpoint {
            let cp = Checkpoint { schema: SCHEMA, key: key.clone(), done, malignant, sampled };
            let tmp = path.with_extension("tmp");
            fs::write(&tmp, serde_json::to_string(&cp).expect("checkpoint serializes")).map_err(|e| io_err(&tmp, e))?;
            fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
        }
    }
    Ok(McEstimate::from_counts(k, args.samples, malignant, engine.c(), args.budget, sampled, args.seed))
}

pub fn direct_sim(args: &DirectSimArgs) -> Res<()> {
    let started = Instant::now();
    let workers = resolve_workers(args.workers)?;
    let mut config = to_value(args);
    config["workers"] = json!(workers);
    if !(args.p > 0.0 && args.p < 1.0) {
        return Err(Failure::Validation(format!("p = {} outside (0, 1)", args.p)));
    }
    let ex = build_exrec(&args.gadget)?;
    let engine = Engine::new(&ex, args.gadget.descriptors.into())?;
    let rate = pool(workers)?.install(|| engine.direct_failure_rate(args.p, args.trials, args.seed))?;
    let result = merge(gadget_json(&args.gadget, &ex), to_value(&rate));
    emit(&args.out, &envelope("direct-sim", config, result, started))
}

/// Coefficients and reference values that come with a preset.
struct PresetData {
    code: CodeArg,
    ec: EcArg,
    locations: u64,
    contracted_locations: u64,
    model: RecursionModel,
    reference: Vec<f64>,
    d: f64,
}

fn preset(p: Preset) -> PresetData {
    let bs3 = |a: f64, a_str: f64| RecursionModel {
        t: 1,
        a,
        b: binomial(297, 3),
        a_str,
        b_str: binomial(153, 3),
        c0: 0.0,
        c0_str: 0.0,
        conditioned: false,
    };
    match p {
        Preset::Bs3Steane => PresetData {
            code: CodeArg::Bs3,
            ec: EcArg::Steane,
            locations: 297,
            contracted_locations: 153,
            model: bs3(12913.0, 4939.0),
            reference: vec![1.22e-4, 1.21e-4],
            d: 16.0,
        },
        Preset::Bs3Knill => PresetData {
            code: CodeArg::Bs3,
            ec: EcArg::Knill,
            locations: 297,
            contracted_locations: 153,
            model: bs3(11184.0, 5328.0),
            reference: vec![1.26e-4],
            d: 16.0,
        },
        Preset::Bs5Steane => PresetData {
            code: CodeArg::Bs5,
            ec: EcArg::Steane,
            locations: 1185,
            contracted_locations: 705,
            model: RecursionModel {
                t: 2,
                a: 16625488.0,
                b: binomial(1185, 4),
                a_str: 8653028.0,
                b_str: binomial(705, 4),
                c0: 190.0,
                c0_str: 120.0,
                conditioned: true,
            },
            reference: vec![1.94e-4],
            d: 48.0,
        },
    }
}

fn resolve_model(preset: Option<&PresetData>, m: &ModelArgs) -> Res<RecursionModel> {
    let base = preset.map(|p| p.model.clone());
    let a = match (m.a, &base) {
        (Some(a), _) => a,
        (None, Some(b)) => b.a,
        (None, None) => return Err(Failure::Validation("--a is required without --preset".into())),
    };
    let b = m.b.or(base.as_ref().map(|x| x.b)).unwrap_or(0.0);
    let model = RecursionModel {
        t: m.t.or(base.as_ref().map(|x| x.t)).unwrap_or(1),
        a,
        b,
        a_str: m.a_str.or(base.as_ref().map(|x| x.a_str)).unwrap_or(a),
        b_str: m.b_str.or(base.as_ref().map(|x| x.b_str)).unwrap_or(b),
        c0: m.c0.or(base.as_ref().map(|x| x.c0)).unwrap_or(0.0),
        c0_str: m.c0_str.or(base.as_ref().map(|x| x.c0_str)).unwrap_or(0.0),
        conditioned: m.conditioned || base.as_ref().is_some_and(|x| x.conditioned),
    };
    model.validate()?;
    Ok(model)
}

fn preset_json(p: Option<&PresetData>) -> Value {
    match p {
        Some(p) => json!({
            "code": p.code,
            "parameters": p.code.parameters(),
            "ec_style": p.ec,
            "exrec_locations": p.locations,
            "contracted_locations": p.contracted_locations,
            "reference_p_thr": p.reference,
        }),
        None => json!({}),
    }
}

pub fn threshold(args: &ThresholdArgs) -> Res<()> {
    let started = Instant::now();
    let data = args.preset.map(preset);
    let model = resolve_model(data.as_ref(), &args.model)?;
    let a_prime = solve_a_prime(model.a, model.b, model.t)?;
    let astr_prime = solve_a_prime(model.a_str, model.b_str, model.t)?;
    let (p_thr, level1) = if model.t == 1 && !model.conditioned {
        let (p, l) = two_stage_threshold(a_prime, astr_prime)?;
        (p, Some(l))
    } else if model.conditioned {
        (conditioned_fixed_point(&model)?, None)
    } else {
        (fixed_point(&model)?, None)
    };
    let result = merge(
        preset_json(data.as_ref()),
        json!({
            "model": model,
            "a_prime": a_prime,
            "astr_prime": astr_prime,
            "level1_condition": level1,
            "p_thr": p_thr,
        }),
    );
    emit(&args.out, &envelope("threshold", to_value(args), result, started))
}

pub fn anc_bound(args: &AncBoundArgs) -> Res<()> {
    let started = Instant::now();
    let data = args.preset.map(preset);
    let model = resolve_model(data.as_ref(), &args.model)?;
    let mode = match (model.t, model.conditioned) {
        (1, false) => AncillaMode::Bs3,
        (2, _) => AncillaMode::Bs5,
        (t, c) => return Err(Failure::Validation(format!("no ancilla bound for t={t}, conditioned={c}"))),
    };
    let p = args
        .p
        .or(data.as_ref().map(|d| d.reference[0]))
        .ok_or_else(|| Failure::Validation("--p is required without --preset".into()))?;
    let d = args
        .d
        .or(data.as_ref().map(|x| x.d))
        .ok_or_else(|| Failure::Validation("--d is required without --preset".into()))?;
    let b = ancilla_accuracy_bound(&model, p, d, args.k_terms, mode, args.extra_prep_locs)?;
    let result = merge(preset_json(data.as_ref()), json!({ "model": model, "mode": mode, "bound": b }));
    emit(&args.out, &envelope("anc-bound", to_value(args), result, started))
}

pub fn distill(cmd: &DistillCommand) -> Res<()> {
    let started = Instant::now();
    let (kind, result) = match cmd {
        DistillCommand::PlusI { p, rounds, .. } => {
            let r = distill_plus_i(*p, *rounds)?;
            ("distill-plus-i", json!({ "p_out": r.p_out, "bound": r.bound, "threshold": PLUS_I_THRESHOLD }))
        }
        DistillCommand::Toffoli { variant, state, rounds, .. } => {
            let mut s: [f64; 3] = state
                .as_slice()
                .try_into()
                .map_err(|_| Failure::Validation(format!("--state takes 3 values, got {}", state.len())))?;
            let mut trace = vec![s];
            for _ in 0..*rounds {
                s = distill_toffoli(s, (*variant).into())?;
                trace.push(s);
            }
            ("distill-toffoli", json!({ "state_out": s, "rounds": trace, "threshold": toffoli_threshold((*variant).into()) }))
        }
        DistillCommand::ToffoliPrep { nc, d, t, .. } => {
            ("toffoli-prep", json!({ "p_thr": toffoli_recursive_prep_threshold(*nc, *d, *t)? }))
        }
    };
    emit(cmd.out(), &envelope(kind, to_value(cmd), result, started))
}

pub fn circuit(args: &CircuitArgs) -> Res<()> {
    let n = args.code.size();
    let c = match args.kind {
        CircuitKind::Ec => build_ec_with(args.ec_style.into(), n, &BuildOptions::default())?,
        CircuitKind::Exrec => build_cnot_exrec(n, args.ec_style.into(), args.contracted, args.ideal_bell)?.circuit,
        CircuitKind::Decoder => build_decoder(n)?,
    };
    emit_text(&args.out, &c.dump())
}
