//! File formats: network JSON/CSV, profile CSV and spectrum exports.
//!
//! JSON floats use the shortest representation that round-trips exactly;
//! CSV floats are written with 17 significant digits. An optional run
//! manifest is embedded as a top-level `"manifest"` key in JSON and as a
//! leading `# manifest: {...}` comment line in CSV.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::net::Network;
use crate::profile::Profile;
use crate::spectral::Spectrum;

/// 17 significant digits in scientific notation.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes `value` as pretty JSON, adding `manifest` as a top-level key
/// when `value` is an object.
pub fn to_json<T: Serialize>(value: &T, manifest: Option<&Value>) -> Result<String> {
    let mut v = serde_json::to_value(value)?;
    if let (Some(m), Value::Object(map)) = (manifest, &mut v) {
        map.insert("manifest".into(), m.clone());
    }
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn csv_preamble(manifest: Option<&Value>) -> String {
    match manifest {
        Some(m) => format!("# manifest: {m}\n"),
        None => String::new(),
    }
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

pub fn network_to_json(net: &Network, manifest: Option<&Value>) -> Result<String> {
    to_json(
        &NetworkFile {
            n: net.n(),
            edges: net.edges(),
        },
        manifest,
    )
}

/// Parses network JSON. Weights are taken as stored (already normalized) and
/// the resulting matrix must pass validation.
pub fn network_from_json(text: &str) -> Result<Network> {
    let file: NetworkFile = serde_json::from_str(text)?;
    let n = file.n;
    if n == 0 {
        return Err(Error::InvalidSize("network must have at least one node".into()));
    }
    let mut w = DMatrix::zeros(n, n);
    let mut seen = BTreeSet::new();
    for &(i, j, weight) in &file.edges {
        let bad = |reason: &str| Error::InvalidEdge { i, j, reason: reason.into() };
        if i >= n || j >= n {
            return Err(bad("endpoint out of range"));
        }
        if i >= j {
            return Err(bad("edges must be stored with i < j"));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(bad("weight must be positive and finite"));
        }
        if !seen.insert((i, j)) {
            return Err(bad("duplicate edge"));
        }
        w[(i, j)] = weight;
        w[(j, i)] = weight;
    }
    Network::from_matrix(w)
}

pub fn read_network(path: &Path) -> Result<Network> {
    network_from_json(&std::fs::read_to_string(path)?)
}

/// `i,j,w` rows with a header, one per undirected edge.
pub fn network_to_csv(net: &Network, manifest: Option<&Value>) -> String {
    let mut out = csv_preamble(manifest);
    out.push_str("i,j,w\n");
    for (i, j, w) in net.edges() {
        let _ = writeln!(out, "{i},{j},{}", format_float(w));
    }
    out
}

/// Reads a profile from CSV: either one value per line, or `node,value`
/// rows covering nodes `0..n` in any order. A header row and `#` comment
/// lines are allowed.
pub fn profile_from_csv(text: &str) -> Result<Profile> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push(v),
            Err(_) if k == 0 => continue,
            Err(_) => return Err(Error::Parse(format!("non-numeric profile row {}: {record:?}", k + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse("profile file has no values".into()));
    }
    match rows[0].len() {
        1 => Profile::new(rows.into_iter().map(|r| r[0]).collect()),
        2 => {
            let n = rows.len();
            let mut values = vec![None; n];
            for r in rows {
                let node = r[0];
                if node.fract() != 0.0 || node < 0.0 || node >= n as f64 {
                    return Err(Error::Parse(format!("node index {node} is not in 0..{n}")));
                }
                let slot = &mut values[node as usize];
                if slot.is_some() {
                    return Err(Error::Parse(format!("node {node} listed twice")));
                }
                *slot = Some(r[1]);
            }
            Profile::new(values.into_iter().map(|v| v.expect("every node filled")).collect())
        }
        k => Err(Error::Parse(format!("profile rows need 1 or 2 columns, got {k}"))),
    }
}

pub fn read_profile(path: &Path) -> Result<Profile> {
    profile_from_csv(&std::fs::read_to_string(path)?)
}

pub fn profile_to_csv(p: &Profile, manifest: Option<&Value>) -> String {
    let mut out = csv_preamble(manifest);
    out.push_str("node,value\n");
    for (i, v) in p.iter().enumerate() {
        let _ = writeln!(out, "{i},{}", format_float(*v));
    }
    out
}

pub fn spectrum_to_json(spec: &Spectrum, manifest: Option<&Value>) -> Result<String> {
    to_json(&spec.export(), manifest)
}

/// Wide table for plotting eigenvectors: a `lambda` row with the eigenvalues,
/// then one row per node with the entries of `u^1 … u^n` as columns.
pub fn spectrum_to_csv(spec: &Spectrum, manifest: Option<&Value>) -> String {
    let n = spec.n();
    let mut out = csv_preamble(manifest);
    out.push_str("node");
    for l in 1..=n {
        let _ = write!(out, ",u{l}");
    }
    out.push_str("\nlambda");
    for l in 0..n {
        let _ = write!(out, ",{}", format_float(spec.eigenvalue(l)));
    }
    out.push('\n');
    for i in 0..n {
        let _ = write!(out, "{i}");
        for l in 0..n {
            let _ = write!(out, ",{}", format_float(spec.eigenvectors()[(i, l)]));
        }
        out.push('\n');
    }
    out
}
