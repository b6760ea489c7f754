//! JSON file formats for behaviors, configurations, models and states.
//!
//! Behavior file:
//! ```json
//! {"parties": 2, "settings": [2, 2], "outcomes": [2, 2],
//!  "table": {"0,0": ["1/4", "1/4", "1/4", "1/4"], "0,1": [...], ...}}
//! ```
//! Probabilities are decimal strings, `p/q` fractions, or JSON numbers.

use num_complex::Complex64;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError};
use crate::linalg::ComplexMatrix;
use crate::prob::{fmt_rational, parse_rational, Prob};
use crate::quantum::{build_paper_model, Observable, QuantumError, QuantumModel, StateVector};
use crate::spacetime::{Event, Requirement, SpacetimeError, VConeConfig};
use crate::vcausal::{VCausalError, VCausalModel};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    Spacetime(#[from] SpacetimeError),
    #[error(transparent)]
    Model(#[from] VCausalError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

impl From<serde_json::Error> for ParseError {
    fn from(e: serde_json::Error) -> Self {
        ParseError::Syntax { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

fn field(field: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Field { field: field.into(), message: message.into() }
}

/// Probability types that can be read from and written to files.
pub trait FileProb: Prob {
    fn parse_entry(s: &str) -> Option<Self>;
    fn format_entry(&self) -> String;
}

impl FileProb for f64 {
    fn parse_entry(s: &str) -> Option<Self> {
        if s.contains('/') {
            parse_rational(s).map(|r| r.to_f64())
        } else {
            s.trim().parse().ok()
        }
    }

    /// Shortest representation that parses back to the same bits.
    fn format_entry(&self) -> String {
        format!("{self:?}")
    }
}

impl FileProb for BigRational {
    fn parse_entry(s: &str) -> Option<Self> {
        parse_rational(s)
    }

    fn format_entry(&self) -> String {
        fmt_rational(self)
    }
}

fn usize_list(v: &Value, name: &str) -> Result<Vec<usize>, ParseError> {
    v.get(name)
        .ok_or_else(|| field(name, "missing"))?
        .as_array()
        .ok_or_else(|| field(name, "expected an array"))?
        .iter()
        .enumerate()
        .map(|(i, x)| {
            x.as_u64()
                .filter(|&k| k > 0)
                .map(|k| k as usize)
                .ok_or_else(|| field(format!("{name}[{i}]"), "expected a positive integer"))
        })
        .collect()
}

pub fn parse_behavior<T: FileProb>(text: &str, tol: &T) -> Result<Behavior<T>, ParseError> {
    let root: Value = serde_json::from_str(text)?;
    let settings = usize_list(&root, "settings")?;
    let outcomes = usize_list(&root, "outcomes")?;
    if let Some(p) = root.get("parties") {
        if p.as_u64() != Some(settings.len() as u64) {
            return Err(field("parties", format!("does not match the {} entries of `settings`", settings.len())));
        }
    }
    if settings.len() != outcomes.len() || settings.is_empty() {
        return Err(field("outcomes", "must list one entry per party"));
    }
    let table = root
        .get("table")
        .ok_or_else(|| field("table", "missing"))?
        .as_object()
        .ok_or_else(|| field("table", "expected an object keyed by setting tuples"))?;

    let n_set: usize = settings.iter().product();
    let n_out: usize = outcomes.iter().product();
    let mut rows: Vec<Option<Vec<T>>> = vec![None; n_set];
    let shape = Behavior::<T>::uniform(settings.clone(), outcomes.clone());
    for (key, entries) in table {
        let loc = format!("table[\"{key}\"]");
        let xs: Vec<usize> = key
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| field(&loc, "key must be comma-joined setting indices"))?;
        if xs.len() != settings.len() || xs.iter().zip(&settings).any(|(x, k)| x >= k) {
            return Err(field(&loc, "setting tuple out of range"));
        }
        let idx = shape.setting_index(&xs);
        if rows[idx].is_some() {
            return Err(field(&loc, "duplicate setting tuple"));
        }
        let list = entries.as_array().ok_or_else(|| field(&loc, "expected an array"))?;
        if list.len() != n_out {
            return Err(field(&loc, format!("expected {n_out} probabilities, found {}", list.len())));
        }
        let mut row = Vec::with_capacity(n_out);
        for (o, e) in list.iter().enumerate() {
            let text = match e {
                Value::String(s) => s.clone(),
                Value::Number(n) => n.to_string(),
                _ => return Err(field(format!("{loc}[{o}]"), "expected a number or fraction string")),
            };
            let p = T::parse_entry(&text).ok_or_else(|| field(format!("{loc}[{o}]"), format!("cannot parse {text:?}")))?;
            if p < T::zero() {
                return Err(field(format!("{loc}[{o}]"), format!("negative probability {text}")));
            }
            row.push(p);
        }
        rows[idx] = Some(row);
    }
    let mut full = Vec::with_capacity(n_set);
    for (s, row) in rows.into_iter().enumerate() {
        let xs = shape.setting_tuple(s);
        let key: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
        full.push(row.ok_or_else(|| field(format!("table[\"{}\"]", key.join(",")), "missing setting tuple"))?);
    }
    Ok(Behavior::new(settings, outcomes, full, tol)?)
}

pub fn behavior_to_json<T: FileProb>(b: &Behavior<T>) -> String {
    let mut table = serde_json::Map::new();
    for (s, row) in b.table().iter().enumerate() {
        let key: Vec<String> = b.setting_tuple(s).iter().map(|x| x.to_string()).collect();
        table.insert(key.join(","), Value::Array(row.iter().map(|p| Value::String(p.format_entry())).collect()));
    }
    let root = serde_json::json!({
        "parties": b.parties(),
        "settings": b.settings(),
        "outcomes": b.outcomes(),
        "table": table,
    });
    serde_json::to_string_pretty(&root).expect("serializable")
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigFile {
    /// Influence speed in m/s; alternatively `v_over_c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    v_over_c: Option<f64>,
    events: Vec<EventEntry>,
    #[serde(default)]
    requirements: Vec<Requirement>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EventEntry {
    label: String,
    t: f64,
    #[serde(default)]
    r: Vec<f64>,
}

pub fn parse_config(text: &str) -> Result<VConeConfig, ParseError> {
    let f: ConfigFile = serde_json::from_str(text)?;
    let v = match (f.v, f.v_over_c) {
        (Some(v), None) => v,
        (None, Some(k)) => k * crate::spacetime::C,
        _ => return Err(field("v", "give exactly one of `v` and `v_over_c`")),
    };
    let mut events = Vec::with_capacity(f.events.len());
    for (i, e) in f.events.into_iter().enumerate() {
        if e.r.len() > 3 {
            return Err(field(format!("events[{i}].r"), "at most three spatial coordinates"));
        }
        events.push(Event::new(e.label, e.t, &e.r));
    }
    let cfg = VConeConfig::new(v, events, f.requirements)?;
    for (i, r) in cfg.requirements().iter().enumerate() {
        for label in [&r.from, &r.to] {
            cfg.event(label).map_err(|_| field(format!("requirements[{i}]"), format!("unknown event {label:?}")))?;
        }
    }
    Ok(cfg)
}

pub fn config_to_json(cfg: &VConeConfig) -> String {
    let f = ConfigFile {
        v: Some(cfg.v()),
        v_over_c: None,
        events: cfg
            .events()
            .iter()
            .map(|e| EventEntry { label: e.label.clone(), t: e.t, r: e.r.to_vec() })
            .collect(),
        requirements: cfg.requirements().to_vec(),
    };
    serde_json::to_string_pretty(&f).expect("serializable")
}

pub fn parse_model(text: &str) -> Result<VCausalModel, ParseError> {
    let m: VCausalModel = serde_json::from_str(text)?;
    m.validate()?;
    Ok(m)
}

pub fn model_to_json(m: &VCausalModel) -> String {
    serde_json::to_string_pretty(m).expect("serializable")
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ComplexEntry {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexEntry {
    fn value(&self) -> Complex64 {
        match *self {
            ComplexEntry::Real(re) => Complex64::new(re, 0.0),
            ComplexEntry::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct StateFile {
    amplitudes: Vec<ComplexEntry>,
    /// `observables[party][setting]` as a 2×2 matrix of entries.
    #[serde(default)]
    observables: Option<Vec<Vec<[[ComplexEntry; 2]; 2]>>>,
}

/// Reads a state (dense amplitudes, `[re, im]` pairs or reals) and optional
/// observables. Without observables the four-party measurement settings of
/// the built-in model are used.
pub fn parse_quantum_model(text: &str) -> Result<QuantumModel, ParseError> {
    let f: StateFile = serde_json::from_str(text)?;
    let state = StateVector::new(f.amplitudes.iter().map(ComplexEntry::value).collect())?;
    let observables = match f.observables {
        Some(per_party) => {
            let mut out = Vec::with_capacity(per_party.len());
            for (p, settings) in per_party.iter().enumerate() {
                let mut row = Vec::with_capacity(settings.len());
                for (s, m) in settings.iter().enumerate() {
                    let entries = m.iter().flatten().map(ComplexEntry::value).collect();
                    let o = Observable::new(ComplexMatrix::from_rows(2, 2, entries))
                        .map_err(|e| field(format!("observables[{p}][{s}]"), e.to_string()))?;
                    row.push(o);
                }
                out.push(row);
            }
            out
        }
        None => {
            let builtin = build_paper_model();
            (0..builtin.parties())
                .map(|p| (0..2).map(|s| builtin.observable(p, s).clone()).collect())
                .collect()
        }
    };
    Ok(QuantumModel::new(state, observables)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::rat;
    use crate::spacetime::four_party_config;
    use crate::vcausal::ghz_triangle_shared_bit;

    #[test]
    fn rational_round_trip_is_exact() {
        let block = [rat(1, 3), rat(1, 6), rat(1, 4), rat(1, 4)];
        let b = Behavior::from_fn(vec![2, 2], vec![2, 2], |xs, os| block[(2 * os[0] + os[1] + xs[1]) % 4].clone())
            .unwrap();
        let text = behavior_to_json(&b);
        let back: Behavior<BigRational> = parse_behavior(&text, &BigRational::from_f64(0.0)).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn float_round_trip_is_bit_exact() {
        let b = build_paper_model().behavior();
        let back: Behavior<f64> = parse_behavior(&behavior_to_json(&b), &1e-9).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn decimals_read_exactly() {
        let text = r#"{"parties":1,"settings":[1],"outcomes":[2],"table":{"0":["0.1", 0.9]}}"#;
        let b: Behavior<BigRational> = parse_behavior(text, &BigRational::from_f64(0.0)).unwrap();
        assert_eq!(b.table()[0][0], rat(1, 10));
    }

    #[test]
    fn negative_probability_names_field() {
        let text = r#"{"parties":1,"settings":[1],"outcomes":[2],"table":{"0":["-1/2","3/2"]}}"#;
        match parse_behavior::<f64>(text, &1e-9) {
            Err(ParseError::Field { field, .. }) => assert_eq!(field, "table[\"0\"][0]"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_behavior::<f64>("{\n  \"settings\": [1,\n}", &1e-9).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn missing_block_reported() {
        let text = r#"{"settings":[2],"outcomes":[2],"table":{"0":[0.5,0.5]}}"#;
        let err = parse_behavior::<f64>(text, &1e-9).unwrap_err();
        assert_eq!(err, field("table[\"1\"]", "missing setting tuple"));
    }

    #[test]
    fn config_round_trip() {
        let cfg = four_party_config(2.0 * crate::spacetime::C, 1.4).unwrap();
        assert_eq!(parse_config(&config_to_json(&cfg)).unwrap(), cfg);
    }

    #[test]
    fn model_round_trip() {
        let m = ghz_triangle_shared_bit(true);
        assert_eq!(parse_model(&model_to_json(&m)).unwrap(), m);
    }

    #[test]
    fn product_state_file() {
        let mut amps = vec!["0"; 16];
        amps[0] = "[1, 0]";
        let text = format!("{{\"amplitudes\": [{}]}}", amps.join(","));
        let q = parse_quantum_model(&text).unwrap();
        let c = q.behavior().marginal(&[2, 3]).unwrap();
        // C0 = σz and D0 = -σz are sharp on |0000>
        assert!((c.prob(&[0, 0, 0, 0], &[0, 1]) - 1.0).abs() < 1e-12);
    }
}
