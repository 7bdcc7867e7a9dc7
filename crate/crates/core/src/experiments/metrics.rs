//! CSV metrics, run manifests and plain key-value summaries.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::experiments::config::ExperimentConfig;
use crate::optim::MetricsRecord;

pub const MANIFEST_FILE: &str = "manifest.toml";

fn real(v: f64) -> String {
    // 17 significant digits round-trip every f64
    format!("{v:.16e}")
}

/// Serializes records; the accuracy column is present when any record has
/// one.
pub fn csv_string(records: &[MetricsRecord]) -> Result<String> {
    let with_accuracy = records.iter().any(|r| r.accuracy.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["epoch", "loss", "feasibility_defect", "lr"];
    if with_accuracy {
        header.push("accuracy");
    }
    let to_input = |e: csv::Error| Error::Input(format!("csv encoding: {e}"));
    w.write_record(&header).map_err(to_input)?;
    for r in records {
        let mut row = vec![
            r.epoch.to_string(),
            real(r.loss),
            real(r.feasibility_defect),
            real(r.lr),
        ];
        if with_accuracy {
            row.push(r.accuracy.map(real).unwrap_or_default());
        }
        w.write_record(&row).map_err(to_input)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Input(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("ascii output"))
}

pub fn emit_csv(records: &[MetricsRecord], path: &Path) -> Result<()> {
    fs::write(path, csv_string(records)?).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<MetricsRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_csv(text: &str) -> Result<Vec<MetricsRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::Input(e.to_string()))?
        .clone();
    let expected = ["epoch", "loss", "feasibility_defect", "lr"];
    let with_accuracy = match headers.len() {
        4 => false,
        5 if &headers[4] == "accuracy" => true,
        _ => return Err(Error::Input(format!("unexpected header {headers:?}"))),
    };
    if headers.iter().take(4).ne(expected) {
        return Err(Error::Input(format!("unexpected header {headers:?}")));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Input(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::Input(format!("bad number {:?}", &record[i])))
        };
        let epoch = record[0]
            .parse()
            .map_err(|_| Error::Input(format!("bad epoch {:?}", &record[0])))?;
        let accuracy = if with_accuracy && !record[4].is_empty() {
            Some(num(4)?)
        } else {
            None
        };
        out.push(MetricsRecord {
            epoch,
            loss: num(1)?,
            feasibility_defect: num(2)?,
            lr: num(3)?,
            accuracy,
        });
    }
    Ok(out)
}

/// Writes `manifest.toml`: the effective configuration (including seed and
/// output directory) preceded by a comment naming the library version. It is
/// itself a valid config file.
pub fn write_manifest(dir: &Path, config: &ExperimentConfig) -> Result<()> {
    let body = config.to_toml()?;
    let text = format!(
        "# {} {}\n# seed = {}\n# rerun: gbp {} --config {}\n{body}",
        env!("CARGO_PKG_NAME"),
        env!("CARGO_PKG_VERSION"),
        config.optimizer.seed,
        subcommand_name(config),
        MANIFEST_FILE,
    );
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn subcommand_name(config: &ExperimentConfig) -> &'static str {
    use crate::experiments::config::ExperimentKind::*;
    match config.experiment {
        PcaRecovery => "pca-recovery",
        Autoencoder => "autoencoder",
        LowrankSimplify => "lowrank",
        TrainGeneric => "train",
    }
}

/// Ordered `key = value` summary written as TOML.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub entries: Vec<(String, SummaryValue)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SummaryValue {
    Real(f64),
    Int(usize),
    Bool(bool),
    Text(String),
}

impl Summary {
    pub fn real(&mut self, key: &str, v: f64) {
        self.entries.push((key.into(), SummaryValue::Real(v)));
    }

    pub fn int(&mut self, key: &str, v: usize) {
        self.entries.push((key.into(), SummaryValue::Int(v)));
    }

    pub fn flag(&mut self, key: &str, v: bool) {
        self.entries.push((key.into(), SummaryValue::Bool(v)));
    }

    pub fn text(&mut self, key: &str, v: &str) {
        self.entries
            .push((key.into(), SummaryValue::Text(v.into())));
    }

    pub fn get(&self, key: &str) -> Option<&SummaryValue> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let v = match v {
                SummaryValue::Real(x) if x.is_finite() => real(*x),
                SummaryValue::Real(x) => format!("\"{x}\""),
                SummaryValue::Int(i) => i.to_string(),
                SummaryValue::Bool(b) => b.to_string(),
                SummaryValue::Text(s) => format!("{s:?}"),
            };
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}
