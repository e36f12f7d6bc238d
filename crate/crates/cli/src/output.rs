use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Map, Value};

use crate::config::Config;
use crate::error::{io_error, CliError, CliResult};

/// Default output directory when neither `--out` nor `[output] dir` is given.
pub const OUT_ENV: &str = "MATRYOSHKA_OUT";

/// Every float in CSV and JSON output goes through this.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON with floats written as `{:.16e}`.
struct SciFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SciFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(num(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory JSON");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

/// A CSV table built row by row; floats are formatted with [`num`].
pub struct Csv {
    text: String,
    columns: usize,
}

pub enum Cell {
    F(f64),
    I(usize),
    S(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::I(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::S(x.to_string())
    }
}

impl Csv {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let names: Vec<&str> = header.iter().map(AsRef::as_ref).collect();
        Csv {
            text: names.join(",") + "\n",
            columns: names.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "row width must match the header");
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match c {
                Cell::F(x) => self.text.push_str(&num(*x)),
                Cell::I(n) => write!(self.text, "{n}").expect("String write"),
                Cell::S(s) => self.text.push_str(s),
            }
        }
        self.text.push('\n');
    }
}

/// Files written by one run plus the manifest describing it.
pub struct Run {
    dir: PathBuf,
    command: String,
    config: Config,
    seed: Option<u64>,
    threads: usize,
    started: f64,
    derived: Map<String, Value>,
    outputs: Vec<String>,
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl Run {
    pub fn new(dir: PathBuf, command: &str, config: &Config, threads: usize) -> CliResult<Self> {
        std::fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
        Ok(Run {
            dir,
            command: command.to_string(),
            config: config.clone(),
            seed: config.disorder.as_ref().map(|d| d.seed),
            threads,
            started: now(),
            derived: Map::new(),
            outputs: Vec::new(),
        })
    }

    pub fn derive(&mut self, key: &str, value: impl Serialize) {
        self.derived
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable derived value"));
    }

    pub fn write_csv(&mut self, name: &str, csv: Csv) -> CliResult<()> {
        self.write(name, &csv.text)
    }

    fn write(&mut self, name: &str, text: &str) -> CliResult<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Writes `manifest.json` and returns its path.
    pub fn finish(self) -> CliResult<PathBuf> {
        let manifest = json!({
            "command": self.command,
            "versions": {
                "matryoshka": matryoshka::VERSION,
                "matryoshka-cli": env!("CARGO_PKG_VERSION"),
            },
            "seed": self.seed,
            "threads": self.threads,
            "started_unix": self.started,
            "finished_unix": now(),
            "config": self.config,
            "derived": self.derived,
            "outputs": self.outputs,
        });
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, to_json_string(&manifest)).map_err(|e| io_error(&path, e))?;
        Ok(path)
    }
}

/// `--out`, then `[output] dir`, then the environment variable, then `./matryoshka-out`.
pub fn resolve_dir(flag: Option<&Path>, config: &Config) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("matryoshka-out"))
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(num(0.1), "1.0000000000000001e-1");
        assert_eq!(num(-2.0), "-2.0000000000000000e0");
        let s = to_json_string(&json!({"x": 0.5, "n": 3, "v": [1.5]}));
        assert!(s.contains("\"x\": 5.0000000000000000e-1"));
        assert!(s.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.5));
    }

    #[test]
    fn csv_rows() {
        let mut c = Csv::new(&["k", "band_0", "label"]);
        c.row(vec![0usize.into(), 0.25.into(), "x".into()]);
        assert_eq!(c.text, "k,band_0,label\n0,2.5000000000000000e-1,x\n");
    }
}
