//! Configuration parsing and persisted artifacts: delay-table JSON, BER CSV,
//! gnuplot plot data and gain reports.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{BerPoint, CurvePoint, DelaySelection, GainReport, SimConfig};
use crate::mmse::Detector;
use crate::prn::{DelayEntry, DelayTable};

/// Keys accepted in a config file, in canonical order.
pub const CONFIG_KEYS: [&str; 12] = [
    "seed",
    "sv",
    "g",
    "window_l",
    "detectors",
    "isr_db",
    "n_bits",
    "n_interferers",
    "interferer_delays",
    "bit_epoch_offsets",
    "noise_var",
    "solve_stride",
];

/// Loosely typed config value, shared by file and command-line sources.
#[derive(Debug, Clone, PartialEq)]
pub enum RawValue {
    Int(i64),
    Float(f64),
    Str(String),
    List(Vec<RawValue>),
}

impl RawValue {
    /// Parses a command-line value: comma-separated lists, then integers,
    /// floats and bare strings.
    pub fn parse_cli(s: &str) -> Self {
        let s = s.trim();
        if s.contains(',') {
            return RawValue::List(
                s.split(',')
                    .filter(|p| !p.trim().is_empty())
                    .map(Self::parse_cli)
                    .collect(),
            );
        }
        if let Ok(i) = s.parse::<i64>() {
            RawValue::Int(i)
        } else if let Ok(f) = s.parse::<f64>() {
            RawValue::Float(f)
        } else {
            RawValue::Str(s.to_string())
        }
    }

    fn from_toml(key: &str, v: &toml::Value) -> Result<Self> {
        Ok(match v {
            toml::Value::Integer(i) => RawValue::Int(*i),
            toml::Value::Float(f) => RawValue::Float(*f),
            toml::Value::String(s) => RawValue::Str(s.clone()),
            toml::Value::Array(items) => RawValue::List(
                items
                    .iter()
                    .map(|i| Self::from_toml(key, i))
                    .collect::<Result<_>>()?,
            ),
            other => {
                return Err(type_err(key, format!("unsupported value {other}")));
            }
        })
    }

    fn items(&self) -> Vec<RawValue> {
        match self {
            RawValue::List(items) => items.clone(),
            RawValue::Str(s) if s.contains(',') => match RawValue::parse_cli(s) {
                RawValue::List(items) => items,
                other => vec![other],
            },
            other => vec![other.clone()],
        }
    }
}

fn type_err(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn as_u64(key: &str, v: &RawValue) -> Result<u64> {
    match v {
        RawValue::Int(i) if *i >= 0 => Ok(*i as u64),
        RawValue::Int(i) => Err(type_err(key, format!("{i} must be nonnegative"))),
        other => Err(type_err(key, format!("expected an integer, got {other:?}"))),
    }
}

fn as_f64(key: &str, v: &RawValue) -> Result<f64> {
    match v {
        RawValue::Int(i) => Ok(*i as f64),
        RawValue::Float(f) => Ok(*f),
        other => Err(type_err(key, format!("expected a number, got {other:?}"))),
    }
}

fn narrow<T: TryFrom<u64>>(key: &str, v: u64) -> Result<T> {
    T::try_from(v).map_err(|_| type_err(key, format!("{v} is out of range")))
}

/// Sets one config key. Unknown keys and ill-typed values are rejected with
/// the key named; range invariants are left to [`SimConfig::validate`].
pub fn apply_value(config: &mut SimConfig, key: &str, value: &RawValue) -> Result<()> {
    match key {
        "seed" => config.seed = as_u64(key, value)?,
        "sv" => config.sv = narrow(key, as_u64(key, value)?)?,
        "g" => config.g = narrow(key, as_u64(key, value)?)?,
        "window_l" => config.window_l = narrow(key, as_u64(key, value)?)?,
        "n_bits" => config.n_bits = as_u64(key, value)?,
        "n_interferers" => config.n_interferers = narrow(key, as_u64(key, value)?)?,
        "solve_stride" => config.solve_stride = as_u64(key, value)?,
        "noise_var" => config.noise_var = as_f64(key, value)?,
        "detectors" => {
            config.detectors = value
                .items()
                .iter()
                .map(|v| match v {
                    RawValue::Str(s) => s.parse::<Detector>().map_err(|e| type_err(key, e)),
                    other => Err(type_err(key, format!("expected mf or mmse, got {other:?}"))),
                })
                .collect::<Result<_>>()?;
        }
        "isr_db" => {
            config.isr_db = value
                .items()
                .iter()
                .map(|v| as_f64(key, v))
                .collect::<Result<_>>()?;
        }
        "interferer_delays" => {
            config.interferer_delays = match value {
                RawValue::Str(s) if s.trim().eq_ignore_ascii_case("auto") => DelaySelection::Auto,
                other => DelaySelection::Explicit(
                    other
                        .items()
                        .iter()
                        .map(|v| as_u64(key, v).and_then(|d| narrow(key, d)))
                        .collect::<Result<_>>()?,
                ),
            }
        }
        "bit_epoch_offsets" => {
            config.bit_epoch_offsets = value
                .items()
                .iter()
                .map(|v| as_u64(key, v))
                .collect::<Result<_>>()?;
        }
        other => return Err(Error::UnknownConfigKey(other.to_string())),
    }
    Ok(())
}

/// Applies a flat TOML key/value document on top of `config`.
pub fn apply_config_str(config: &mut SimConfig, text: &str) -> Result<()> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::ConfigSyntax(e.to_string()))?;
    for (key, value) in &table {
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err(Error::UnknownConfigKey(key.clone()));
        }
        apply_value(config, key, &RawValue::from_toml(key, value)?)?;
    }
    Ok(())
}

/// Parses a config document over the defaults and validates it.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let mut config = SimConfig::default();
    apply_config_str(&mut config, text)?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(path: &std::path::Path) -> Result<SimConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

#[derive(Serialize, Deserialize)]
struct DelayTableJson {
    sv: u32,
    entries: Vec<DelayEntry>,
}

pub fn delay_table_to_json(table: &DelayTable) -> String {
    let doc = DelayTableJson {
        sv: table.code_id,
        entries: table.entries.clone(),
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("delay table serializes");
    s.push('\n');
    s
}

pub fn delay_table_from_json(text: &str) -> Result<DelayTable> {
    let doc: DelayTableJson =
        serde_json::from_str(text).map_err(|e| Error::Io(format!("delay table: {e}")))?;
    Ok(DelayTable {
        code_id: doc.sv,
        entries: doc.entries,
    })
}

/// Header of the BER CSV.
pub const CSV_HEADER: &str =
    "isr_db,detector,g,window_l,n_interferers,bits,errors,ber,ci_low,ci_high,seed";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CsvRow {
    isr_db: f64,
    detector: String,
    g: usize,
    window_l: usize,
    n_interferers: usize,
    bits: u64,
    errors: u64,
    ber: f64,
    ci_low: f64,
    ci_high: f64,
    seed: u64,
}

impl From<&BerPoint> for CsvRow {
    fn from(p: &BerPoint) -> Self {
        Self {
            isr_db: p.isr_db,
            detector: p.detector.as_str().to_string(),
            g: p.g,
            window_l: p.window_l,
            n_interferers: p.n_interferers,
            bits: p.bits_counted,
            errors: p.errors,
            ber: p.ber,
            ci_low: p.ci_low,
            ci_high: p.ci_high,
            seed: p.seed,
        }
    }
}

pub fn write_ber_csv<W: Write>(points: &[BerPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(CsvRow::from(p))
            .map_err(|e| Error::Csv(e.to_string()))?;
    }
    if points.is_empty() {
        w.write_record(CSV_HEADER.split(','))
            .map_err(|e| Error::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn ber_csv_string(points: &[BerPoint]) -> String {
    let mut buf = Vec::new();
    write_ber_csv(points, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("CSV is UTF-8")
}

/// Parses rows written by [`write_ber_csv`].
pub fn read_ber_csv<R: Read>(input: R) -> Result<Vec<BerPoint>> {
    let mut reader = csv::Reader::from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(Error::Csv(format!("unexpected header `{header}`")));
    }
    reader
        .deserialize::<CsvRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| Error::Csv(format!("row {}: {e}", i + 1)))?;
            let detector = row
                .detector
                .parse()
                .map_err(|e| Error::Csv(format!("row {}: {e}", i + 1)))?;
            if row.errors > row.bits || row.bits == 0 {
                return Err(Error::Csv(format!(
                    "row {}: {} errors in {} bits",
                    i + 1,
                    row.errors,
                    row.bits
                )));
            }
            Ok(BerPoint {
                isr_db: row.isr_db,
                detector,
                g: row.g,
                window_l: row.window_l,
                n_interferers: row.n_interferers,
                bits_counted: row.bits,
                errors: row.errors,
                ber: row.ber,
                ci_low: row.ci_low,
                ci_high: row.ci_high,
                seed: row.seed,
                regularized_solves: 0,
            })
        })
        .collect()
}

/// Whitespace-separated copy of the CSV rows for gnuplot.
pub fn plot_data_string(points: &[BerPoint]) -> String {
    let mut s = format!("# {}\n", CSV_HEADER.replace(',', " "));
    for p in points {
        let r = CsvRow::from(p);
        s.push_str(&format!(
            "{} {} {} {} {} {} {} {} {} {} {}\n",
            r.isr_db,
            r.detector,
            r.g,
            r.window_l,
            r.n_interferers,
            r.bits,
            r.errors,
            r.ber,
            r.ci_low,
            r.ci_high,
            r.seed
        ));
    }
    s
}

/// Identity of one BER curve inside a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CurveKey {
    pub detector: Detector,
    pub g: usize,
    pub window_l: usize,
    pub n_interferers: usize,
}

impl std::fmt::Display for CurveKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.detector {
            Detector::Mf => write!(f, "mf/i{}", self.n_interferers),
            Detector::Mmse => write!(
                f,
                "mmse/g{}/l{}/i{}",
                self.g, self.window_l, self.n_interferers
            ),
        }
    }
}

/// Groups CSV rows into curves.
pub fn split_curves(points: &[BerPoint]) -> BTreeMap<CurveKey, Vec<CurvePoint>> {
    let mut curves: BTreeMap<CurveKey, Vec<CurvePoint>> = BTreeMap::new();
    for p in points {
        let key = CurveKey {
            detector: p.detector,
            g: p.g,
            window_l: p.window_l,
            n_interferers: p.n_interferers,
        };
        curves.entry(key).or_default().push(CurvePoint::from(p));
    }
    curves
}

/// Picks the single curve in `points`, optionally restricted to `detector`.
pub fn select_curve(
    points: &[BerPoint],
    detector: Option<Detector>,
) -> Result<(CurveKey, Vec<CurvePoint>)> {
    let mut curves: Vec<_> = split_curves(points)
        .into_iter()
        .filter(|(k, _)| detector.map_or(true, |d| k.detector == d))
        .collect();
    match curves.len() {
        0 => Err(Error::Csv("no matching curve".into())),
        1 => Ok(curves.pop().expect("one curve")),
        n => Err(Error::Csv(format!(
            "{n} curves in file ({}); select one with a detector filter",
            curves
                .iter()
                .map(|(k, _)| k.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

#[derive(Serialize)]
struct GainJson<'a> {
    target_ber: f64,
    curve_a: &'a str,
    curve_b: &'a str,
    isr_a: Option<f64>,
    isr_b: Option<f64>,
    gain_db: serde_json::Value,
}

pub fn gain_line(report: &GainReport) -> String {
    match report.gain_db {
        Some(g) => format!("gain_db={g:?}"),
        None => "gain_db=not_reached".to_string(),
    }
}

pub fn gain_to_json(report: &GainReport) -> String {
    let doc = GainJson {
        target_ber: report.target_ber,
        curve_a: &report.curve_a,
        curve_b: &report.curve_b,
        isr_a: report.isr_a,
        isr_b: report.isr_b,
        gain_db: match report.gain_db {
            Some(g) => serde_json::json!(g),
            None => serde_json::json!("not_reached"),
        },
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("gain report serializes");
    s.push('\n');
    s
}
