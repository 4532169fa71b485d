// Copyright 2026 The discsched Authors
// SPDX-License-Identifier: Apache-2.0

//! JSON forms of schedules and traces.
//!
//! Schedule: `{"label": str, "emissions": {"<step>": [[ttl, fee], ...]}}`,
//! where `ttl` may be the string `"inf"`.
//!
//! Trace: `{"label", "lambda", "gamma", "seed", "revenue", "choices",
//! "mempool_sizes"}` with each choice `[step, ttl, fee]` or `[step, null]`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{horizon_of, Transaction, TransactionSchedule};
use crate::sim::SimulationTrace;

#[derive(Serialize, Deserialize)]
struct ScheduleFile {
    #[serde(default)]
    label: String,
    emissions: BTreeMap<String, Vec<(TtlField, f64)>>,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
enum TtlField {
    Finite(u32),
    Word(InfWord),
}

#[derive(Clone, Copy, Serialize, Deserialize)]
enum InfWord {
    #[serde(rename = "inf")]
    Inf,
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse(e.to_string())
}

/// Reads a schedule. Infinite TTLs become `horizon + 1`; without an explicit
/// horizon, the last step any finite transaction can be served (or the last
/// emitting step, if later) is used.
pub fn schedule_from_json(text: &str, horizon: Option<usize>) -> Result<TransactionSchedule> {
    let file: ScheduleFile = serde_json::from_str(text).map_err(parse_err)?;
    let mut finite = TransactionSchedule::new(file.label.clone());
    let mut unbounded: Vec<(usize, f64)> = Vec::new();
    for (key, entries) in &file.emissions {
        let step: usize = key
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("emission key {key:?} is not a step index")))?;
        for &(ttl, fee) in entries {
            match ttl {
                TtlField::Finite(t) => finite.push(step, Transaction::new(t, fee)?),
                TtlField::Word(InfWord::Inf) => unbounded.push((step, fee)),
            }
        }
    }
    let horizon = horizon.unwrap_or_else(|| {
        let last_inf = unbounded.iter().map(|&(s, _)| s).max().unwrap_or(0);
        horizon_of(&finite).max(last_inf)
    });
    // Rebuild in step order so that emission order within a step is kept.
    let mut schedule = TransactionSchedule::new(file.label);
    for (key, entries) in &file.emissions {
        let step: usize = key.trim().parse().expect("checked above");
        for &(ttl, fee) in entries {
            let tx = match ttl {
                TtlField::Finite(t) => Transaction::new(t, fee)?,
                TtlField::Word(InfWord::Inf) => Transaction::unbounded(fee, horizon)?,
            };
            schedule.push(step, tx);
        }
    }
    Ok(schedule)
}

pub fn schedule_to_json(schedule: &TransactionSchedule) -> String {
    let mut emissions = BTreeMap::new();
    for (step, txs) in schedule.iter() {
        let list: Vec<(TtlField, f64)> = txs.iter().map(|t| (TtlField::Finite(t.ttl()), t.fee())).collect();
        emissions.insert(step.to_string(), list);
    }
    let file = ScheduleFile {
        label: schedule.label().to_string(),
        emissions,
    };
    serde_json::to_string_pretty(&file).expect("plain data")
}

pub fn trace_to_json(trace: &SimulationTrace) -> String {
    let choices: Vec<Value> = trace
        .choices
        .iter()
        .map(|&(step, tx)| match tx {
            Some(t) => json!([step, t.ttl(), t.fee()]),
            None => json!([step, null]),
        })
        .collect();
    let value = json!({
        "label": trace.schedule_label,
        "lambda": trace.lambda,
        "gamma": trace.gamma,
        "seed": trace.seed,
        "revenue": trace.revenue,
        "choices": choices,
        "mempool_sizes": trace.mempool_sizes,
        "origins": trace.origins,
        "urgent_probabilities": trace.urgent_probabilities,
    });
    serde_json::to_string_pretty(&value).expect("plain data")
}

#[derive(Deserialize)]
struct TraceFile {
    label: String,
    lambda: f64,
    gamma: f64,
    seed: u64,
    revenue: f64,
    choices: Vec<Vec<Value>>,
    #[serde(default)]
    mempool_sizes: Vec<usize>,
    #[serde(default)]
    origins: Vec<Option<usize>>,
    #[serde(default)]
    urgent_probabilities: Vec<f64>,
}

pub fn trace_from_json(text: &str) -> Result<SimulationTrace> {
    let file: TraceFile = serde_json::from_str(text).map_err(parse_err)?;
    let mut choices = Vec::with_capacity(file.choices.len());
    for entry in &file.choices {
        let bad = || Error::Parse(format!("malformed choice {entry:?}"));
        let step = entry.first().and_then(Value::as_u64).ok_or_else(bad)? as usize;
        let tx = match entry.as_slice() {
            [_, Value::Null] => None,
            [_, ttl, fee] => {
                let ttl = ttl.as_u64().and_then(|t| u32::try_from(t).ok()).ok_or_else(bad)?;
                Some(Transaction::new(ttl, fee.as_f64().ok_or_else(bad)?)?)
            }
            _ => return Err(bad()),
        };
        choices.push((step, tx));
    }
    Ok(SimulationTrace {
        schedule_label: file.label,
        lambda: file.lambda,
        gamma: file.gamma,
        seed: file.seed,
        choices,
        origins: file.origins,
        urgent_probabilities: file.urgent_probabilities,
        mempool_sizes: file.mempool_sizes,
        revenue: file.revenue,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MinerParams;
    use crate::policies::PolicyDescriptor;
    use crate::sim::simulate;

    const EXAMPLE: &str = r#"{
        "label": "example",
        "emissions": {"1": [[1, 2], [2, 4]], "2": [[2, 6]], "4": [[1, 8]]}
    }"#;

    #[test]
    fn reads_the_example() {
        let s = schedule_from_json(EXAMPLE, None).unwrap();
        assert_eq!(s.label(), "example");
        assert_eq!(s.transaction_count(), 4);
        assert_eq!(horizon_of(&s), 4);
        let back = schedule_from_json(&schedule_to_json(&s), None).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn infinite_ttl_is_clamped() {
        let text = r#"{"label": "", "emissions": {"0": [["inf", 1.5]], "3": [[2, 1]]}}"#;
        let s = schedule_from_json(text, None).unwrap();
        assert_eq!(s.at(0)[0].ttl(), 5);
        let s = schedule_from_json(text, Some(10)).unwrap();
        assert_eq!(s.at(0)[0].ttl(), 11);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(schedule_from_json(r#"{"emissions": {"x": []}}"#, None).is_err());
        assert!(schedule_from_json(r#"{"emissions": {"0": [[0, 1]]}}"#, None).is_err());
        assert!(schedule_from_json(r#"{"emissions": {"0": [[1, -1]]}}"#, None).is_err());
        assert!(schedule_from_json("[]", None).is_err());
    }

    #[test]
    fn trace_round_trip() {
        let s = schedule_from_json(EXAMPLE, None).unwrap();
        let params = MinerParams::new(0.25, 0.5, 4).unwrap();
        let trace = simulate(&PolicyDescriptor::Greedy, &s, &params, 42).unwrap();
        let text = trace_to_json(&trace);
        assert_eq!(trace_from_json(&text).unwrap(), trace);
        let value: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["choices"][0], json!([0, null]));
        assert_eq!(value["choices"][1], json!([1, 2, 4.0]));
    }
}
