//! File formats: band sets, butterflies, experiment tables, audit reports
//! and tree dumps, plus atomic writes and provenance sidecars.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use harperlab_core::bandset::{BandSet, Interval};
use harperlab_core::chambers::RationalFrequency;
use harperlab_core::config::{AuditItem, AuditReport};
use harperlab_core::moran::NodeView;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const BANDSET_HEADER: &str = "# bandset v1";
pub const BUTTERFLY_HEADER: &str = "# butterfly v1";

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    lo: f64,
    hi: f64,
}

fn csv_with_comment<T: Serialize>(comment: Option<&str>, rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, IoError> {
    let mut out = Vec::new();
    if let Some(c) = comment {
        writeln!(out, "{c}").expect("writing to memory");
    }
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| IoError::Format(e.to_string()))
}

fn json_bytes(v: &Value) -> Result<Vec<u8>, IoError> {
    let mut b = serde_json::to_vec_pretty(v)?;
    b.push(b'\n');
    Ok(b)
}

pub fn bandset_bytes(s: &BandSet, format: Format) -> Result<Vec<u8>, IoError> {
    match format {
        Format::Csv => {
            let rows = s.iter().map(|iv| Row { lo: iv.lo, hi: iv.hi });
            // an empty set still gets its column header
            if s.is_empty() {
                return Ok(format!("{BANDSET_HEADER}\nlo,hi\n").into_bytes());
            }
            csv_with_comment(Some(BANDSET_HEADER), rows)
        }
        Format::Json => {
            let rows: Vec<Row> = s.iter().map(|iv| Row { lo: iv.lo, hi: iv.hi }).collect();
            json_bytes(&json!({ "format": "bandset v1", "intervals": rows }))
        }
    }
}

/// Reads a band set from CSV (`# bandset v1`, `lo,hi`) or its JSON mirror,
/// chosen by the first non-blank character.
pub fn read_bandset(path: &Path) -> Result<BandSet, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let rows: Vec<Row> = if text.trim_start().starts_with('{') {
        #[derive(Deserialize)]
        struct Doc {
            intervals: Vec<Row>,
        }
        serde_json::from_str::<Doc>(&text)?.intervals
    } else {
        if !text.lines().any(|l| l.trim() == BANDSET_HEADER) {
            return Err(IoError::Format(format!("{}: missing '{BANDSET_HEADER}' header", path.display())));
        }
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
        r.deserialize().collect::<Result<_, _>>()?
    };
    let ivs = rows
        .iter()
        .map(|r| Interval::new(r.lo, r.hi).map_err(|e| IoError::Format(format!("{}: {e}", path.display()))))
        .collect::<Result<Vec<_>, _>>()?;
    BandSet::normalize(&ivs).map_err(|e| IoError::Format(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct ButterflyRow {
    p: u64,
    q: u64,
    band_index: usize,
    lo: f64,
    hi: f64,
}

pub fn butterfly_bytes(rows: &[(RationalFrequency, BandSet)], format: Format) -> Result<Vec<u8>, IoError> {
    match format {
        Format::Csv => csv_with_comment(
            Some(BUTTERFLY_HEADER),
            rows.iter().flat_map(|(f, s)| {
                s.iter().enumerate().map(|(i, iv)| ButterflyRow { p: f.p(), q: f.q(), band_index: i, lo: iv.lo, hi: iv.hi })
            }),
        ),
        Format::Json => {
            let spectra: Vec<Value> = rows
                .iter()
                .map(|(f, s)| json!({ "p": f.p(), "q": f.q(), "bands": s.iter().map(|iv| [iv.lo, iv.hi]).collect::<Vec<_>>() }))
                .collect();
            json_bytes(&json!({ "format": "butterfly v1", "spectra": spectra }))
        }
    }
}

/// One row of the dimension experiment table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimsRecord {
    pub a: u64,
    pub q_used: u64,
    pub error_radius: f64,
    pub slope: f64,
    pub slope_max: f64,
    pub slope_min: f64,
    pub r_min: f64,
    pub r_max: f64,
}

/// One row of the collapse report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollapseRecord {
    pub a: u64,
    pub d: usize,
    pub measure: f64,
    pub md_slope: f64,
    pub sum_slope: f64,
    pub max_interior: f64,
}

pub fn table_bytes<T: Serialize>(rows: &[T], format: Format) -> Result<Vec<u8>, IoError> {
    match format {
        Format::Csv => csv_with_comment(None, rows),
        Format::Json => json_bytes(&json!({ "rows": rows })),
    }
}

pub fn audit_value(r: &AuditReport) -> Value {
    let items: Vec<Value> = AuditItem::ALL
        .iter()
        .map(|&it| {
            let x = r.item(it);
            json!({ "item": it.label(), "pass": x.pass, "slack": finite(x.slack), "required_c": x.required_c.map(finite) })
        })
        .collect();
    json!({
        "pass": r.pass,
        "params_valid": r.params_valid,
        "effective_constant": finite(r.effective_constant),
        "items": items,
        "r": r.r, "s": r.s, "r1": r.r1, "s1": r.s1,
        "zones": {
            "inner": r.zones.inner,
            "outer_minus": r.zones.outer_minus,
            "outer_plus": r.zones.outer_plus,
            "middle": r.zones.middle,
        },
        "log_j_min": finite(r.log_j_min),
        "log_j_max": finite(r.log_j_max),
    })
}

/// JSON has no infinities; they are written as strings.
fn finite(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!(format!("{x}"))
    }
}

pub fn audit_bytes(r: &AuditReport) -> Result<Vec<u8>, IoError> {
    json_bytes(&audit_value(r))
}

/// One JSON line `{word, type, k, h, lo, hi}`.
pub fn node_line(v: &NodeView) -> Result<String, IoError> {
    Ok(serde_json::to_string(&json!({
        "word": v.word.to_string(),
        "type": v.ty.number(),
        "k": v.k,
        "h": v.h,
        "lo": v.lo,
        "hi": v.hi,
    }))?)
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| IoError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Provenance written next to every data file.
#[derive(Debug, Clone, Serialize)]
pub struct Sidecar {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub params: Value,
    pub error_radii: Vec<f64>,
    pub summary: Value,
    pub jobs: usize,
    pub wall_time_s: f64,
    pub timestamp_unix_s: u64,
}

/// Writes the data file and then its sidecar; removes the data file if the
/// sidecar cannot be written.
pub fn write_with_sidecar(out: &Path, data: &[u8], meta: &Sidecar) -> Result<(), IoError> {
    write_atomic(out, data)?;
    let side = sidecar_path(out);
    let res = serde_json::to_vec_pretty(meta).map_err(IoError::from).and_then(|mut b| {
        b.push(b'\n');
        write_atomic(&side, &b)
    });
    if res.is_err() {
        let _ = fs::remove_file(out);
    }
    res
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bandset_round_trip() {
        let s = BandSet::from_pairs(&[(-1.5, -0.25), (0.1, 3.0e-7 + 0.1), (2.0, 2.0)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        for f in [Format::Csv, Format::Json] {
            let p = dir.path().join(format!("s.{f:?}"));
            write_atomic(&p, &bandset_bytes(&s, f).unwrap()).unwrap();
            assert_eq!(read_bandset(&p).unwrap(), s);
        }
        let text = String::from_utf8(bandset_bytes(&s, Format::Csv).unwrap()).unwrap();
        assert!(text.starts_with("# bandset v1\nlo,hi\n-1.5,-0.25\n"), "{text}");
    }

    #[test]
    fn rejects_headerless_and_inverted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        fs::write(&p, "lo,hi\n0,1\n").unwrap();
        assert!(read_bandset(&p).is_err());
        fs::write(&p, "# bandset v1\nlo,hi\n1,0\n").unwrap();
        assert!(read_bandset(&p).is_err());
    }

    #[test]
    fn butterfly_rows() {
        let f = RationalFrequency::new(1, 2).unwrap();
        let s = BandSet::from_pairs(&[(-2.0, 2.0)]).unwrap();
        let text = String::from_utf8(butterfly_bytes(&[(f, s)], Format::Csv).unwrap()).unwrap();
        assert_eq!(text, "# butterfly v1\np,q,band_index,lo,hi\n1,2,0,-2.0,2.0\n");
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/x.csv")), PathBuf::from("out/x.csv.meta.json"));
    }
}
