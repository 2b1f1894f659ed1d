//! CSV/JSON emission. CSV carries '#'-prefixed metadata lines, a mandatory
//! header row, comma separators and '.' decimals; floats are rendered at a
//! fixed precision so identical invocations produce byte-identical output.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Out {
    pub format: Format,
    pub path: Option<PathBuf>,
    pub precision: usize,
    pub meta: Vec<(String, String)>,
}

impl Out {
    pub fn new(format: Format, path: Option<PathBuf>, precision: usize) -> Out {
        let mut meta = vec![("tool".into(), format!("mapscale {}", env!("CARGO_PKG_VERSION")))];
        let argv: Vec<String> = std::env::args().skip(1).collect();
        meta.push(("command".into(), argv.join(" ")));
        Out { format, path, precision, meta }
    }

    pub fn push_meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn float(&self, v: f64) -> String {
        format_float(v, self.precision)
    }

    fn writer(&self) -> io::Result<Box<dyn Write>> {
        match &self.path {
            Some(p) => Ok(Box::new(io::BufWriter::new(File::create(p)?))),
            None => Ok(Box::new(io::stdout().lock())),
        }
    }

    /// Emit a table in the selected format.
    pub fn table(&self, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        match self.format {
            Format::Csv => {
                let mut w = self.writer()?;
                for (k, v) in &self.meta {
                    writeln!(w, "# {k}: {v}")?;
                }
                writeln!(w, "{}", header.join(","))?;
                for row in rows {
                    writeln!(w, "{}", row.join(","))?;
                }
                w.flush()
            }
            Format::Json => {
                let meta: serde_json::Map<String, serde_json::Value> = self
                    .meta
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                    .collect();
                let value = serde_json::json!({
                    "meta": meta,
                    "columns": header,
                    "data": rows,
                });
                self.json(&value)
            }
        }
    }

    /// Emit a JSON document (adds the metadata object under "meta" if the
    /// value is an object without one).
    pub fn json(&self, value: &serde_json::Value) -> io::Result<()> {
        let mut value = value.clone();
        if let serde_json::Value::Object(map) = &mut value {
            if !map.contains_key("meta") {
                let meta: serde_json::Map<String, serde_json::Value> = self
                    .meta
                    .iter()
                    .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                    .collect();
                map.insert("meta".into(), serde_json::Value::Object(meta));
            }
        }
        let mut w = self.writer()?;
        writeln!(w, "{}", serde_json::to_string_pretty(&value)?)?;
        w.flush()
    }
}

pub fn format_float(v: f64, precision: usize) -> String {
    format!("{v:.precision$e}")
}
