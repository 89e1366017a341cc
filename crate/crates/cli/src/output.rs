use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

use kvariates::{CenterSet, Provenance};

use crate::args::Format;

/// A command result: a JSON document plus a flat table for CSV output.
pub struct Report {
    pub json: serde_json::Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn write(&self, format: Format, out: Option<&Path>) -> Result<()> {
        let mut sink: Box<dyn Write> = match out {
            Some(path) => Box::new(
                File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
            ),
            None => Box::new(io::stdout().lock()),
        };
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut sink, &self.json)?;
                writeln!(sink)?;
            }
            Format::Csv => {
                let mut csv = csv::Writer::from_writer(&mut sink);
                csv.write_record(&self.header)?;
                for row in &self.rows {
                    csv.write_record(row)?;
                }
                csv.flush()?;
            }
        }
        sink.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct CenterRecord<'a> {
    coords: &'a [f64],
    #[serde(flatten)]
    provenance: &'a Provenance,
}

/// Report listing centers (one CSV row each) with extra JSON fields.
pub fn centers_report(
    algorithm: &str,
    k: usize,
    seed: u64,
    potential: f64,
    centers: &CenterSet,
    extra: serde_json::Value,
) -> Report {
    let records: Vec<CenterRecord> = centers
        .centers()
        .iter()
        .zip(centers.provenance())
        .map(|(c, p)| CenterRecord {
            coords: c.coords(),
            provenance: p,
        })
        .collect();
    let mut json = serde_json::json!({
        "algorithm": algorithm,
        "k": k,
        "seed": seed,
        "potential": potential,
        "centers": records,
    });
    if let (Some(obj), serde_json::Value::Object(more)) = (json.as_object_mut(), extra) {
        obj.extend(more);
    }
    let d = centers.centers().first().map_or(0, |c| c.dim());
    let header = (0..d).map(|j| format!("x{j}")).collect();
    let rows = centers
        .centers()
        .iter()
        .map(|c| c.coords().iter().map(f64::to_string).collect())
        .collect();
    Report { json, header, rows }
}

/// Two-column `key,value` table from a flat JSON object.
pub fn key_value_report(json: serde_json::Value) -> Report {
    let rows = json
        .as_object()
        .map(|obj| {
            obj.iter()
                .map(|(k, v)| {
                    let value = match v {
                        serde_json::Value::String(s) => s.clone(),
                        serde_json::Value::Null => String::new(),
                        other => other.to_string(),
                    };
                    vec![k.clone(), value]
                })
                .collect()
        })
        .unwrap_or_default();
    Report {
        json,
        header: vec!["key".into(), "value".into()],
        rows,
    }
}
