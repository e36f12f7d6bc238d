//! Experiment configuration: TOML with sections [chain], [schedule], [disorder], [protocol], [output].
//!
//! Real-valued fields take either a number or a short expression such as
//! `"5pi/12"`, `"asin(0.588)"` or `"0.9/sqrt(2)"`.

use std::path::{Path, PathBuf};

use matryoshka::disorder::{DisorderKind, DisorderSpec};
use matryoshka::dynamics::Ramp;
use matryoshka::lattice::{Boundary, ChainSpec, Termination, Tower};
use serde::{Deserialize, Serialize};

use crate::error::{io_error, CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Number(f64),
    Expr(String),
}

impl Real {
    pub fn value(&self) -> CliResult<f64> {
        match self {
            Real::Number(x) => Ok(*x),
            Real::Expr(s) => eval(s).map_err(|why| CliError::Usage(format!("cannot evaluate {s:?}: {why}"))),
        }
    }
}

fn values(xs: &[Real]) -> CliResult<Vec<f64>> {
    xs.iter().map(Real::value).collect()
}

fn opt(x: &Option<Real>) -> CliResult<Option<f64>> {
    x.as_ref().map(Real::value).transpose()
}

/// expr := factor (('*' | '/') factor)*
/// factor := '-' factor | number ['pi'] | 'pi' | func '(' expr ')' | '(' expr ')'
fn eval(s: &str) -> Result<f64, String> {
    let tokens: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut p = Parser { s: &tokens, i: 0 };
    let v = p.expr()?;
    if p.i != tokens.len() {
        return Err(format!("unexpected {:?}", tokens[p.i..].iter().collect::<String>()));
    }
    Ok(v)
}

struct Parser<'a> {
    s: &'a [char],
    i: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.s.get(self.i).copied()
    }

    fn eat_word(&mut self, w: &str) -> bool {
        let n = w.chars().count();
        if self.s.len() >= self.i + n && self.s[self.i..self.i + n].iter().copied().eq(w.chars()) {
            self.i += n;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<f64, String> {
        let mut v = self.factor()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.i += 1;
                    v *= self.factor()?;
                }
                Some('/') => {
                    self.i += 1;
                    v /= self.factor()?;
                }
                _ => return Ok(v),
            }
        }
    }

    fn factor(&mut self) -> Result<f64, String> {
        if self.peek() == Some('-') {
            self.i += 1;
            return Ok(-self.factor()?);
        }
        if self.eat_word("pi") {
            return Ok(std::f64::consts::PI);
        }
        for (name, f) in [("sqrt", f64::sqrt as fn(f64) -> f64), ("asin", f64::asin), ("acos", f64::acos)] {
            if self.eat_word(name) {
                return Ok(f(self.group()?));
            }
        }
        if self.peek() == Some('(') {
            return self.group();
        }
        let start = self.i;
        while let Some(c) = self.peek() {
            let exponent_sign = matches!(c, '+' | '-') && matches!(self.s.get(self.i.wrapping_sub(1)), Some('e' | 'E'));
            if c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E') || exponent_sign {
                self.i += 1;
            } else {
                break;
            }
        }
        if start == self.i {
            return Err(format!("expected a number at position {start}"));
        }
        let text: String = self.s[start..self.i].iter().collect();
        let x: f64 = text.parse().map_err(|_| format!("bad number {text:?}"))?;
        Ok(if self.eat_word("pi") { x * std::f64::consts::PI } else { x })
    }

    fn group(&mut self) -> Result<f64, String> {
        if self.peek() != Some('(') {
            return Err("expected '('".into());
        }
        self.i += 1;
        let v = self.expr()?;
        if self.peek() != Some(')') {
            return Err("expected ')'".into());
        }
        self.i += 1;
        Ok(v)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub chain: Option<ChainSection>,
    #[serde(default)]
    pub schedule: ScheduleSection,
    pub disorder: Option<DisorderSection>,
    #[serde(default)]
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// Either explicit `angles` or a square-root tower (`base_angle` plus `scales`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(default)]
    pub order: u32,
    pub angles: Option<Vec<Real>>,
    pub base_angle: Option<Real>,
    #[serde(default)]
    pub scales: Vec<Real>,
    #[serde(default = "one_cell")]
    pub cells: usize,
    pub sites: Option<usize>,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default)]
    pub termination: Termination,
    pub scale: Option<Real>,
    /// Fraction of sites at each end that counts as the edge.
    pub tail_fraction: Option<f64>,
    pub k_points: Option<usize>,
}

fn one_cell() -> usize {
    1
}

impl ChainSection {
    pub fn tower(&self) -> CliResult<Option<Tower>> {
        let Some(base) = &self.base_angle else {
            return Ok(None);
        };
        let scales = values(&self.scales)?;
        if scales.len() < self.order as usize {
            return Err(CliError::Usage(format!(
                "order {} needs {} scales, got {}",
                self.order,
                self.order,
                scales.len()
            )));
        }
        Ok(Some(Tower::new(base.value()?, &scales[..self.order as usize])?))
    }

    pub fn spec(&self) -> CliResult<ChainSpec> {
        let mut spec = match (&self.angles, self.tower()?) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("[chain] takes either angles or base_angle, not both".into()))
            }
            (Some(a), None) => ChainSpec::new(self.order, values(a)?, self.cells)?,
            (None, Some(t)) => t.spec(self.order, self.cells)?,
            (None, None) => return Err(CliError::Usage("[chain] needs angles or base_angle".into())),
        };
        spec.boundary = self.boundary;
        spec.termination = self.termination;
        spec.sites = self.sites;
        if let Some(s) = opt(&self.scale)? {
            spec.scale = s;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub duration: Option<f64>,
    pub dt: Option<f64>,
    pub ramp: Option<Ramp>,
    /// Recorded time samples, endpoints included as extra.
    pub samples: Option<usize>,
}

impl ScheduleSection {
    pub fn samples(&self) -> usize {
        self.samples.unwrap_or(200)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSection {
    #[serde(default)]
    pub kinds: Vec<DisorderKind>,
    #[serde(default)]
    pub sigmas: Vec<f64>,
    pub knots: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub realizations: usize,
}

impl DisorderSection {
    /// One spec per (kind, σ), kinds outermost; every kind when none listed.
    pub fn specs(&self) -> CliResult<Vec<DisorderSpec>> {
        if self.sigmas.is_empty() {
            return Err(CliError::Usage("[disorder] needs at least one entry in sigmas".into()));
        }
        let kinds = if self.kinds.is_empty() { DisorderKind::ALL.to_vec() } else { self.kinds.clone() };
        let mut out = Vec::new();
        for kind in kinds {
            for &sigma in &self.sigmas {
                let mut s = DisorderSpec::new(kind, sigma, self.seed, self.realizations);
                if let Some(k) = self.knots {
                    s.knots = k;
                }
                s.validate()?;
                out.push(s);
            }
        }
        Ok(out)
    }
}

/// Protocol parameters; each subcommand reads the fields it needs and rejects the rest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub lambda: Option<Real>,
    pub gamma: Option<Real>,
    pub order: Option<matryoshka::protocols::TransferOrder>,
    pub side: Option<matryoshka::protocols::DefectSide>,
    pub moves: Option<usize>,
    pub defect_legs: Option<[usize; 2]>,
    pub theta1: Option<Real>,
    pub sites: Option<usize>,
    pub energy: Option<f64>,
    pub coupling: Option<f64>,
    pub tau: Option<f64>,
    pub wait: Option<f64>,
    pub waits: Option<Vec<f64>>,
    pub require_edge_state: Option<bool>,
    /// `transfer` or `braid`, for disorder sweeps.
    pub target: Option<String>,
    pub channel: Option<String>,
    pub field_start: Option<[f64; 3]>,
    pub field_end: Option<[f64; 3]>,
    pub r0: Option<[f64; 3]>,
}

impl ProtocolSection {
    pub fn lambda(&self) -> CliResult<Option<f64>> {
        opt(&self.lambda)
    }

    pub fn gamma(&self) -> CliResult<Option<f64>> {
        opt(&self.gamma)
    }

    pub fn theta1(&self) -> CliResult<Option<f64>> {
        opt(&self.theta1)
    }

    /// Fails when a field outside `allowed` is set.
    pub fn only(&self, command: &str, allowed: &[&str]) -> CliResult<()> {
        let v = serde_json::to_value(self).expect("plain data");
        let extra: Vec<&String> = v
            .as_object()
            .expect("struct")
            .iter()
            .filter(|(k, v)| !v.is_null() && !allowed.contains(&k.as_str()))
            .map(|(k, _)| k)
            .collect();
        if extra.is_empty() {
            Ok(())
        } else {
            Err(CliError::Usage(format!("[protocol] fields {extra:?} do not apply to {command}")))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

/// Reads a TOML config, or the `config` field of a JSON run manifest, then applies `section.key=value` overrides.
pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Config> {
    let mut table = match path {
        None => toml::Table::new(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            if p.extension().is_some_and(|e| e == "json") {
                let manifest: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                let config = manifest
                    .get("config")
                    .ok_or_else(|| CliError::Usage(format!("{}: manifest has no config", p.display())))?;
                let cfg: Config = serde_json::from_value(config.clone())
                    .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                match toml::Value::try_from(&cfg).map_err(|e| CliError::Usage(e.to_string()))? {
                    toml::Value::Table(t) => t,
                    _ => unreachable!("a struct serializes to a table"),
                }
            } else {
                // Parse into the typed config first so type errors carry line numbers.
                toml::from_str::<Config>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
                toml::from_str::<toml::Table>(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?
            }
        }
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Usage(format!("after overrides: {e}")))
}

fn apply_override(table: &mut toml::Table, item: &str) -> CliResult<()> {
    let bad = || CliError::Usage(format!("override {item:?} is not of the form section.key=value"));
    let (key, raw) = item.split_once('=').ok_or_else(bad)?;
    let (section, field) = key.trim().split_once('.').ok_or_else(bad)?;
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.trim().to_string()),
    };
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(sec) = entry else {
        return Err(CliError::Usage(format!("{section} is not a section")));
    };
    sec.insert(field.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn expressions() {
        assert_eq!(eval("pi/6").unwrap(), PI / 6.0);
        assert_eq!(eval("5pi/12").unwrap(), 5.0 * PI / 12.0);
        assert_eq!(eval("0.9/sqrt(2)").unwrap(), 0.9 / 2f64.sqrt());
        assert_eq!(eval("asin(0.588)").unwrap(), 0.588f64.asin());
        assert_eq!(eval("-1.5e-3*2").unwrap(), -3e-3);
        assert_eq!(eval("(1/2)*pi").unwrap(), PI / 2.0);
        assert!(eval("pi+1").is_err());
        assert!(eval("sqrt 2").is_err());
    }

    #[test]
    fn fig3_chain_from_text() {
        let cfg: Config = toml::from_str(
            r#"
            [chain]
            order = 2
            base_angle = "asin(0.588)"
            scales = ["0.9/sqrt(2)", "0.8/sqrt(2)"]
            cells = 4
            "#,
        )
        .unwrap();
        let spec = cfg.chain.unwrap().spec().unwrap();
        assert_eq!(spec.angles.len(), 4);
        assert_eq!(spec.site_count(), 32);
    }

    #[test]
    fn unknown_keys_are_rejected_with_a_line() {
        let err = toml::from_str::<Config>("[chain]\norder = 1\nangels = [1]\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }

    #[test]
    fn overrides_replace_scalars() {
        let mut t: toml::Table = toml::from_str("[protocol]\nlambda = 1.0\n").unwrap();
        apply_override(&mut t, "protocol.lambda=\"pi/8\"").unwrap();
        apply_override(&mut t, "schedule.duration=50").unwrap();
        apply_override(&mut t, "protocol.target=braid").unwrap();
        let cfg: Config = toml::Value::Table(t).try_into().unwrap();
        assert_eq!(cfg.protocol.lambda().unwrap(), Some(PI / 8.0));
        assert_eq!(cfg.schedule.duration, Some(50.0));
        assert_eq!(cfg.protocol.target.as_deref(), Some("braid"));
        assert!(apply_override(&mut toml::Table::new(), "nodot=1").is_err());
    }

    #[test]
    fn protocol_fields_are_checked_per_command() {
        let p = ProtocolSection {
            moves: Some(2),
            ..Default::default()
        };
        assert!(p.only("braid", &["moves"]).is_ok());
        assert!(p.only("transfer", &["lambda"]).is_err());
    }
}
