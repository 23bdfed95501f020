use std::fs;

use serde_json::Value;

use crate::args::ReportArgs;
use crate::jobs::{emit_text, Failure, SCHEMA};

pub const HEADER: &str = "| Code | Parameters | EC gadget | exRec locs | p_thr (1e-4) |\n|---|---|---|---|---|\n";

fn field<'a>(v: &'a Value, path: &[&str]) -> Option<&'a Value> {
    path.iter().try_fold(v, |v, k| v.get(*k))
}

fn text(v: Option<&Value>) -> String {
    match v {
        Some(Value::String(s)) => s.clone(),
        Some(Value::Null) | None => "-".into(),
        Some(v) => v.to_string(),
    }
}

fn parameters(code: &str) -> &'static str {
    match code {
        "bs3" => "[[9,1,3]]",
        "bs5" => "[[25,1,5]]",
        _ => "-",
    }
}

fn row(path: &str, v: &Value) -> Result<String, Failure> {
    let schema = v.get("schema").and_then(Value::as_u64);
    if schema != Some(SCHEMA) {
        return Err(Failure::Validation(format!("{path}: schema mismatch (expected {SCHEMA}, found {})", text(v.get("schema")))));
    }
    let r = v.get("result").ok_or_else(|| Failure::Validation(format!("{path}: no result")))?;
    let code = text(r.get("code"));
    let (locs, p_thr) = match v.get("kind").and_then(Value::as_str) {
        Some("threshold") => {
            let locs = text(r.get("exrec_locations"));
            let p = r.get("p_thr").and_then(Value::as_f64).map_or("-".into(), |p| format!("{:.3}", p / 1e-4));
            (locs, p)
        }
        Some("count-exact") | Some("count-mc") => {
            let contracted = field(v, &["result", "contracted"]).and_then(Value::as_bool).unwrap_or(false);
            let locs = text(r.get("C"));
            (if contracted { format!("{locs} (contracted)") } else { locs }, "-".into())
        }
        _ => return Err(Failure::Validation(format!("{path}: cannot report kind {}", text(v.get("kind"))))),
    };
    Ok(format!("| {} | {} | {} | {} | {} |\n", code.to_uppercase(), parameters(&code), text(r.get("ec_style")), locs, p_thr))
}

pub fn report(args: &ReportArgs) -> Result<(), Failure> {
    let mut out = String::from(HEADER);
    for p in &args.inputs {
        let name = p.display().to_string();
        let raw = fs::read_to_string(p).map_err(|e| Failure::Runtime(format!("{name}: {e}")))?;
        let v: Value = serde_json::from_str(&raw).map_err(|e| Failure::Validation(format!("{name}: {e}")))?;
        out.push_str(&row(&name, &v)?);
    }
    emit_text(&args.out, &out)
}
