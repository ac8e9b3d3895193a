//! File formats: JSON model and payoff specs, smile CSVs, and CSV tables
//! with `#`-prefixed metadata lines.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use varswap_core::replication::{SmileGrid, SmileRow};
use varswap_core::{Error as CoreError, ModelSpec, Payoff};

use crate::error::{Error, Result};

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads and structurally checks a model file.
pub fn read_model(path: &Path) -> Result<ModelSpec> {
    let m: ModelSpec = read_json(path)?;
    m.check()?;
    Ok(m)
}

pub fn read_payoff(path: &Path) -> Result<Payoff> {
    read_json(path)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(Error::io(path))
}

/// Parses a smile file: optional `# key = value` lines (`forward`, `expiry`)
/// followed by a CSV with header `strike,call,put`. Strikes must be
/// strictly increasing; errors name the 1-based data row. Without a
/// `forward` line the forward is inferred from put–call parity as the mean
/// of `C − P + K`.
pub fn parse_smile(path: &Path) -> Result<SmileGrid> {
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    parse_smile_str(&text).map_err(|e| match e {
        Error::Csv { source, .. } => Error::Csv {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn parse_smile_str(text: &str) -> Result<SmileGrid> {
    let mut forward = None;
    let mut expiry = None;
    let mut body = String::with_capacity(text.len());
    let mut body_line = 0usize;
    for line in text.lines() {
        if let Some(meta) = line.trim_start().strip_prefix('#') {
            if let Some((k, v)) = meta.split_once('=') {
                let v: f64 = v.trim().parse().map_err(|_| CoreError::Format {
                    row: body_line,
                    msg: format!("bad metadata value in `{}`", line.trim()),
                })?;
                match k.trim() {
                    "forward" => forward = Some(v),
                    "expiry" => expiry = Some(v),
                    _ => {}
                }
            }
            continue;
        }
        body.push_str(line);
        body.push('\n');
        body_line += 1;
    }

    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let headers = rdr
        .headers()
        .map_err(|source| Error::Csv {
            path: "<smile>".into(),
            source,
        })?
        .clone();
    let want = ["strike", "call", "put"];
    if headers.iter().collect::<Vec<_>>() != want {
        return Err(CoreError::Format {
            row: 0,
            msg: format!(
                "header must be strike,call,put, got {}",
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        }
        .into());
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| CoreError::Format {
            row,
            msg: e.to_string(),
        })?;
        let field = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| {
                    CoreError::Format {
                        row,
                        msg: format!("column {} is not a number", want[j]),
                    }
                    .into()
                })
        };
        rows.push(SmileRow {
            strike: field(0)?,
            call: field(1)?,
            put: field(2)?,
        });
    }
    let forward = match forward {
        Some(f) => f,
        None if !rows.is_empty() => {
            rows.iter().map(|r| r.call - r.put + r.strike).sum::<f64>() / rows.len() as f64
        }
        None => 0.0,
    };
    Ok(SmileGrid::new(forward, expiry.unwrap_or(0.0), rows)?)
}

pub fn smile_to_string(smile: &SmileGrid) -> String {
    let mut out = format!(
        "# forward = {}\n# expiry = {}\nstrike,call,put\n",
        smile.forward(),
        smile.expiry()
    );
    for r in smile.rows() {
        out.push_str(&format!("{},{},{}\n", r.strike, r.call, r.put));
    }
    out
}

/// A CSV table with leading `# key = value` metadata lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            meta: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Floats are written with Rust's shortest round-trip formatting.
    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        for (k, v) in &self.meta {
            writeln!(buf, "# {k} = {v}").expect("write to Vec");
        }
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.header).expect("write to Vec");
            for r in &self.rows {
                w.write_record(r.iter().map(|v| v.to_string()))
                    .expect("write to Vec");
            }
            w.flush().expect("write to Vec");
        }
        String::from_utf8(buf).expect("CSV output is UTF-8")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv_string()).map_err(Error::io(path))
    }

    pub fn parse(text: &str) -> Result<Table> {
        let mut t = Table::default();
        let mut body = String::new();
        for line in text.lines() {
            match line.strip_prefix('#') {
                Some(meta) => {
                    if let Some((k, v)) = meta.split_once('=') {
                        t.meta.push((k.trim().to_string(), v.trim().to_string()));
                    }
                }
                None => {
                    body.push_str(line);
                    body.push('\n');
                }
            }
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let csv_err = |source| Error::Csv {
            path: "<table>".into(),
            source,
        };
        t.header = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(String::from)
            .collect();
        for rec in rdr.records() {
            let rec = rec.map_err(csv_err)?;
            let row = rec
                .iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Usage(format!("non-numeric table cell `{s}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            t.rows.push(row);
        }
        Ok(t)
    }
}
