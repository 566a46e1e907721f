use std::io::Write;

use super::{Efficiency, RecordLine, SweepRow};
use crate::error::{Error, Result};

/// First line of every sweep CSV.
pub const CSV_SCHEMA: &str = "# pac-mcts-sweep v1";

pub const CSV_COLUMNS: [&str; 12] = [
    "policy",
    "bias_bound",
    "sigma",
    "budget",
    "radius_factor",
    "replications",
    "pcs",
    "pcs_stderr",
    "pruning_rate",
    "mean_selected_mu",
    "mean_samples",
    "efficiency_multiplier",
];

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "{CSV_SCHEMA}").map_err(|e| Error::Parse(e.to_string()))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        let eff = match r.efficiency_multiplier {
            Efficiency::NotComputed => String::new(),
            Efficiency::Value(v) => v.to_string(),
            Efficiency::Censored => "censored".into(),
        };
        w.write_record([
            r.policy.clone(),
            r.bias_bound.to_string(),
            r.sigma.to_string(),
            r.budget.to_string(),
            r.radius_factor.to_string(),
            r.replications.to_string(),
            r.pcs.to_string(),
            r.pcs_stderr.to_string(),
            r.pruning_rate.to_string(),
            r.mean_selected_mu.to_string(),
            r.mean_samples.to_string(),
            eff,
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))?;
    Ok(())
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let body = text
        .strip_prefix(CSV_SCHEMA)
        .and_then(|rest| rest.strip_prefix('\n'))
        .ok_or_else(|| Error::Parse(format!("missing schema line `{CSV_SCHEMA}`")))?;
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().map_err(csv_err)?;
    if !header.iter().eq(CSV_COLUMNS) {
        return Err(Error::Parse(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let line = i + 3;
        if rec.len() != CSV_COLUMNS.len() {
            return Err(Error::Parse(format!(
                "line {line}: expected {} fields",
                CSV_COLUMNS.len()
            )));
        }
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| {
                Error::Parse(format!("line {line}: bad {} `{}`", CSV_COLUMNS[k], &rec[k]))
            })
        };
        let int = |k: usize| -> Result<u64> {
            rec[k].parse().map_err(|_| {
                Error::Parse(format!("line {line}: bad {} `{}`", CSV_COLUMNS[k], &rec[k]))
            })
        };
        let efficiency_multiplier = match &rec[11] {
            "" => Efficiency::NotComputed,
            "censored" => Efficiency::Censored,
            _ => Efficiency::Value(num(11)?),
        };
        rows.push(SweepRow {
            policy: rec[0].to_string(),
            bias_bound: num(1)?,
            sigma: num(2)?,
            budget: int(3)?,
            radius_factor: num(4)?,
            replications: int(5)?,
            pcs: num(6)?,
            pcs_stderr: num(7)?,
            pruning_rate: num(8)?,
            mean_selected_mu: num(9)?,
            mean_samples: num(10)?,
            efficiency_multiplier,
        });
    }
    Ok(rows)
}

pub fn write_record_lines<W: Write>(mut out: W, records: &[RecordLine]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")
            .map_err(|e| Error::Parse(e.to_string()))?;
    }
    Ok(())
}

/// Parse JSON-lines run records; blank lines are skipped.
pub fn parse_record_lines(text: &str) -> Result<Vec<RecordLine>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse(format!("record line {}: {e}", i + 1)))
        })
        .collect()
}
