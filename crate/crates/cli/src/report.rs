//! Run reports and versioned CSV tables.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use mhinr_core::models::{FlopsReport, ModelSpec};
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

pub const REPORT_SCHEMA: &str = "mhinr-run-report/1";

/// Everything needed to reproduce and judge one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub spec: ModelSpec,
    /// Image path or Perlin description of the target.
    pub source: String,
    pub height: usize,
    pub width: usize,
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub params: usize,
    pub losses: Vec<f64>,
    pub train_psnr_db: f64,
    pub eval_psnr_db: Option<f64>,
    pub flops: FlopsReport,
    /// Kept out of the CSV so that seeded runs stay byte-identical.
    pub wall_time_s: Option<f64>,
}

fn bad(msg: impl Display) -> CliError {
    CliError::Report(msg.to_string())
}

fn parse<T: std::str::FromStr>(field: &str, value: &str) -> Result<T>
where
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| bad(format_args!("field {field}: {e}")))
}

impl RunReport {
    /// Long-format CSV: one `field,index,value` record per scalar, losses
    /// indexed by epoch. Floats use the shortest round-tripping form.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["field", "index", "value"])?;
        let spec = serde_json::to_string(&self.spec).map_err(bad)?;
        let eval = self.eval_psnr_db.map(|v| v.to_string()).unwrap_or_default();
        let scalars: [(&str, String); 14] = [
            ("schema", REPORT_SCHEMA.to_string()),
            ("spec", spec),
            ("source", self.source.clone()),
            ("height", self.height.to_string()),
            ("width", self.width.to_string()),
            ("seed", self.seed.to_string()),
            ("epochs", self.epochs.to_string()),
            ("lr", self.lr.to_string()),
            ("params", self.params.to_string()),
            ("train_psnr_db", self.train_psnr_db.to_string()),
            ("eval_psnr_db", eval),
            (
                "flops_per_forward",
                self.flops.flops_per_forward.to_string(),
            ),
            (
                "forwards_per_image",
                self.flops.forwards_per_image.to_string(),
            ),
            ("flops_per_image", self.flops.flops_per_image.to_string()),
        ];
        for (field, value) in &scalars {
            w.write_record([*field, "", value.as_str()])?;
        }
        w.write_record(["flops_convention", "", &self.flops.convention])?;
        for (epoch, loss) in self.losses.iter().enumerate() {
            w.write_record(["loss", &epoch.to_string(), &loss.to_string()])?;
        }
        let bytes = w.into_inner().map_err(|e| bad(e.error()))?;
        String::from_utf8(bytes).map_err(bad)
    }

    pub fn from_csv(text: &str) -> Result<RunReport> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut fields = std::collections::BTreeMap::new();
        let mut losses = Vec::new();
        for record in r.records() {
            let record = record?;
            if record.len() != 3 {
                return Err(bad(format_args!(
                    "expected 3 columns, got {}",
                    record.len()
                )));
            }
            let (field, index, value) = (&record[0], &record[1], &record[2]);
            if field == "loss" {
                let epoch: usize = parse("loss index", index)?;
                if epoch != losses.len() {
                    return Err(bad(format_args!("loss index {epoch} out of order")));
                }
                losses.push(parse("loss", value)?);
            } else if fields
                .insert(field.to_string(), value.to_string())
                .is_some()
            {
                return Err(bad(format_args!("duplicate field {field}")));
            }
        }
        let mut take = |name: &str| {
            fields
                .remove(name)
                .ok_or_else(|| bad(format_args!("missing field {name}")))
        };
        let schema = take("schema")?;
        if schema != REPORT_SCHEMA {
            return Err(bad(format_args!("unsupported schema {schema}")));
        }
        let spec = serde_json::from_str(&take("spec")?).map_err(bad)?;
        let eval = take("eval_psnr_db")?;
        Ok(RunReport {
            spec,
            source: take("source")?,
            height: parse("height", &take("height")?)?,
            width: parse("width", &take("width")?)?,
            seed: parse("seed", &take("seed")?)?,
            epochs: parse("epochs", &take("epochs")?)?,
            lr: parse("lr", &take("lr")?)?,
            params: parse("params", &take("params")?)?,
            losses,
            train_psnr_db: parse("train_psnr_db", &take("train_psnr_db")?)?,
            eval_psnr_db: if eval.is_empty() {
                None
            } else {
                Some(parse("eval_psnr_db", &eval)?)
            },
            flops: FlopsReport {
                flops_per_forward: parse("flops_per_forward", &take("flops_per_forward")?)?,
                forwards_per_image: parse("forwards_per_image", &take("forwards_per_image")?)?,
                flops_per_image: parse("flops_per_image", &take("flops_per_image")?)?,
                convention: take("flops_convention")?,
            },
            wall_time_s: None,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(bad)
    }

    pub fn from_json(text: &str) -> Result<RunReport> {
        serde_json::from_str(text).map_err(bad)
    }
}

/// A CSV table whose first line is a `# schema: NAME/VERSION` comment.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub schema: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &str, header: &[&str]) -> Table {
        Table {
            schema: schema.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format_args!("table {} has no column {name}", self.schema)))
    }

    /// Numeric values of a column, in row order.
    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows.iter().map(|row| parse(name, &row[c])).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path).map_err(|e| CliError::io(path, e))?;
        writeln!(file, "# schema: {}", self.schema).map_err(|e| CliError::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Table> {
        let file = File::open(path).map_err(|e| CliError::io(path, e))?;
        let mut reader = BufReader::new(file);
        let mut first = String::new();
        reader
            .read_line(&mut first)
            .map_err(|e| CliError::io(path, e))?;
        let schema = first
            .trim_end()
            .strip_prefix("# schema: ")
            .ok_or_else(|| bad(format_args!("{} lacks a schema line", path.display())))?
            .to_string();
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers()?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Table {
            schema,
            header,
            rows,
        })
    }
}
