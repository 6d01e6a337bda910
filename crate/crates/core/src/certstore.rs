//! JSON-lines certificate files, NPN universe files, and the standalone
//! integer audit.
//!
//! A certificate file is a header object followed by one record per line,
//! sorted by fid:
//!
//! ```text
//! {"format_version":1,"n":3,"producer":"bbt-lab 0.1.0","count":2}
//! {"fid":"0x0","n":3,"mask":[1,0,0,0,0,0,0,0],"support":1,"margin_min":1,"optimal":true,"solver":"bnb","elapsed_ms":null}
//! ```
//!
//! An interrupted writer ends the file with `{"truncated":true,"written":k}`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::minsupport::Certificate;
use crate::npn::NpnUniverse;
use crate::synthesis::TernaryMask;
use crate::walsh::{apply_hadamard_dense, format_fid, parse_fid, TruthTable, MAX_UNIVERSE_VARS};

pub const FORMAT_VERSION: u32 = 1;

pub fn producer() -> String {
    format!("bbt-lab {}", env!("CARGO_PKG_VERSION"))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertHeader {
    pub format_version: u32,
    pub n: usize,
    pub producer: String,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct CertRecord {
    fid: String,
    n: usize,
    mask: Vec<i64>,
    support: usize,
    margin_min: i64,
    optimal: bool,
    solver: String,
    elapsed_ms: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct TruncationMarker {
    truncated: bool,
    written: usize,
}

fn record_of(c: &Certificate, timings: bool) -> CertRecord {
    CertRecord {
        fid: format_fid(c.fid()),
        n: c.n(),
        mask: c.mask().as_i64(),
        support: c.min_support(),
        margin_min: c.margin_min(),
        optimal: c.optimal(),
        solver: c.solver().to_string(),
        elapsed_ms: if timings {
            c.elapsed().map(|d| d.as_millis() as u64)
        } else {
            None
        },
    }
}

/// Refuses to replace an existing file unless `force` is set.
pub fn create_output(path: &Path, force: bool) -> Result<BufWriter<File>> {
    if path.exists() && !force {
        return Err(Error::WouldOverwrite(path.to_path_buf()));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

/// Incremental writer. Records must arrive in ascending fid order.
pub struct CertificateStream<W: Write> {
    out: W,
    n: usize,
    timings: bool,
    written: usize,
    last_fid: Option<u64>,
}

impl<W: Write> CertificateStream<W> {
    pub fn new(mut out: W, n: usize, count: usize, timings: bool) -> Result<Self> {
        let header = CertHeader {
            format_version: FORMAT_VERSION,
            n,
            producer: producer(),
            count,
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        Ok(Self {
            out,
            n,
            timings,
            written: 0,
            last_fid: None,
        })
    }

    pub fn push(&mut self, c: &Certificate) -> Result<()> {
        if c.n() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: c.n(),
            });
        }
        if self.last_fid.is_some_and(|l| l >= c.fid()) {
            return Err(Error::Domain(format!(
                "certificate {} out of fid order",
                format_fid(c.fid())
            )));
        }
        writeln!(self.out, "{}", serde_json::to_string(&record_of(c, self.timings))?)?;
        self.last_fid = Some(c.fid());
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }

    /// Appends the truncation marker and flushes.
    pub fn truncate(mut self) -> Result<W> {
        let m = TruncationMarker {
            truncated: true,
            written: self.written,
        };
        writeln!(self.out, "{}", serde_json::to_string(&m)?)?;
        self.finish()
    }
}

/// Writes `certs` sorted by fid. `elapsed_ms` is null unless `timings`.
pub fn write_certificates<W: Write>(
    out: W,
    n: usize,
    certs: &[Certificate],
    timings: bool,
) -> Result<()> {
    let mut sorted: Vec<&Certificate> = certs.iter().collect();
    sorted.sort_by_key(|c| c.fid());
    let mut s = CertificateStream::new(out, n, certs.len(), timings)?;
    for c in sorted {
        s.push(c)?;
    }
    s.finish()?;
    Ok(())
}

pub fn save_certificates(
    path: &Path,
    n: usize,
    certs: &[Certificate],
    timings: bool,
    force: bool,
) -> Result<()> {
    write_certificates(create_output(path, force)?, n, certs, timings)
}

#[derive(Clone, Debug)]
pub struct CertificateFile {
    pub header: CertHeader,
    pub certificates: Vec<Certificate>,
    pub truncated: bool,
}

fn corrupt(line: usize, reason: impl Into<String>) -> Error {
    Error::CorruptRecord {
        line,
        reason: reason.into(),
    }
}

fn parse_header(line: &str) -> Result<CertHeader> {
    let v: Value = serde_json::from_str(line).map_err(|e| corrupt(1, e.to_string()))?;
    match v.get("format_version").and_then(Value::as_u64) {
        Some(1) => {}
        Some(other) => {
            return Err(Error::UnsupportedFormat(format!(
                "format_version {other}"
            )))
        }
        None => return Err(corrupt(1, "missing format_version")),
    }
    let h: CertHeader = serde_json::from_value(v).map_err(|e| corrupt(1, e.to_string()))?;
    if h.n == 0 || h.n > MAX_UNIVERSE_VARS {
        return Err(corrupt(1, format!("n = {} outside 1..=5", h.n)));
    }
    Ok(h)
}

fn mask_of(line: usize, n: usize, entries: &[i64]) -> Result<TernaryMask> {
    if entries.len() != 1 << n {
        return Err(corrupt(
            line,
            format!("mask length {} for n = {n}", entries.len()),
        ));
    }
    if let Some(bad) = entries.iter().find(|e| !(-1..=1).contains(*e)) {
        return Err(corrupt(line, format!("mask entry {bad} is not ternary")));
    }
    TernaryMask::new(entries.iter().map(|&e| e as i8).collect())
}

/// Parses and re-verifies every record. Any record that fails the sign
/// check aborts the load with its fid.
pub fn read_certificates<R: BufRead>(r: R) -> Result<CertificateFile> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(l) => parse_header(&l?)?,
        None => return Err(corrupt(1, "empty file")),
    };
    let n = header.n;
    let mut certificates = Vec::with_capacity(header.count);
    let mut truncated = false;
    for (idx, l) in lines.enumerate() {
        let line_no = idx + 2;
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        if truncated {
            return Err(corrupt(line_no, "content after truncation marker"));
        }
        let v: Value = serde_json::from_str(&l).map_err(|e| corrupt(line_no, e.to_string()))?;
        if v.get("truncated").is_some() {
            let m: TruncationMarker =
                serde_json::from_value(v).map_err(|e| corrupt(line_no, e.to_string()))?;
            if m.written != certificates.len() {
                return Err(corrupt(line_no, "truncation marker count mismatch"));
            }
            truncated = true;
            continue;
        }
        let rec: CertRecord =
            serde_json::from_value(v).map_err(|e| corrupt(line_no, e.to_string()))?;
        if rec.n != n {
            return Err(corrupt(line_no, format!("record n = {} in an n = {n} file", rec.n)));
        }
        let fid = parse_fid(&rec.fid).map_err(|e| corrupt(line_no, e.to_string()))?;
        let f = TruthTable::from_fid(n, fid).map_err(|e| corrupt(line_no, e.to_string()))?;
        let mask = mask_of(line_no, n, &rec.mask)?;
        if rec.support != mask.support() {
            return Err(corrupt(line_no, "support does not match mask"));
        }
        let c = Certificate::new(
            &f,
            mask,
            rec.optimal,
            rec.solver,
            rec.elapsed_ms.map(Duration::from_millis),
        )?;
        if c.margin_min() != rec.margin_min {
            return Err(corrupt(line_no, "stored margin does not match mask"));
        }
        if certificates
            .last()
            .is_some_and(|p: &Certificate| p.fid() >= fid)
        {
            return Err(corrupt(line_no, "records not sorted by fid"));
        }
        certificates.push(c);
    }
    if !truncated && certificates.len() != header.count {
        return Err(corrupt(
            1,
            format!(
                "header count {} but {} records",
                header.count,
                certificates.len()
            ),
        ));
    }
    Ok(CertificateFile {
        header,
        certificates,
        truncated,
    })
}

pub fn load_certificates(path: &Path) -> Result<CertificateFile> {
    read_certificates(BufReader::new(File::open(path)?))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AuditFailure {
    pub line: usize,
    pub fid: Option<String>,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct AuditReport {
    pub records: usize,
    pub passed: usize,
    pub failures: Vec<AuditFailure>,
    /// Integer multiplications in the dense `H_n w` products.
    pub integer_ops: u64,
    pub truncated: bool,
    pub elapsed_ms: u64,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn audit_line(line_no: usize, text: &str) -> std::result::Result<u64, AuditFailure> {
    let fail = |fid: Option<String>, reason: String| AuditFailure {
        line: line_no,
        fid,
        reason,
    };
    let v: Value = serde_json::from_str(text).map_err(|e| fail(None, e.to_string()))?;
    let fid_str = v.get("fid").and_then(Value::as_str).map(str::to_string);
    let fid = fid_str
        .as_deref()
        .ok_or_else(|| "missing fid".to_string())
        .and_then(|s| parse_fid(s).map_err(|e| e.to_string()))
        .map_err(|e| fail(fid_str.clone(), e))?;
    let n = v
        .get("n")
        .and_then(Value::as_u64)
        .ok_or_else(|| fail(fid_str.clone(), "missing n".into()))? as usize;
    let f = TruthTable::from_fid(n, fid).map_err(|e| fail(fid_str.clone(), e.to_string()))?;
    let mask: Vec<i64> = v
        .get("mask")
        .and_then(Value::as_array)
        .ok_or_else(|| fail(fid_str.clone(), "missing mask".into()))?
        .iter()
        .map(|e| e.as_i64().filter(|x| (-1..=1).contains(x)))
        .collect::<Option<_>>()
        .ok_or_else(|| fail(fid_str.clone(), "mask entry is not ternary".into()))?;
    if mask.len() != f.len() {
        return Err(fail(fid_str, format!("mask length {}", mask.len())));
    }
    let (y, ops) = apply_hadamard_dense(&mask).map_err(|e| fail(fid_str.clone(), e.to_string()))?;
    if let Some(row) = (0..f.len()).find(|&i| y[i] * f.value(i) as i64 <= 0) {
        return Err(fail(fid_str, format!("sign check fails at row {row}")));
    }
    let support = mask.iter().filter(|&&e| e != 0).count() as u64;
    if let Some(claim) = v.get("support").and_then(Value::as_u64) {
        if claim != support {
            return Err(fail(fid_str, format!("claimed support {claim}, mask has {support}")));
        }
    }
    let margin = (0..f.len()).map(|i| y[i] * f.value(i) as i64).min().unwrap_or(0);
    if let Some(claim) = v.get("margin_min").and_then(Value::as_i64) {
        if claim != margin {
            return Err(fail(fid_str, format!("claimed margin {claim}, product gives {margin}")));
        }
    }
    Ok(ops)
}

/// Independent re-check of every record with the dense `H_n w` product,
/// including any stored support and margin claims. Failures are report
/// entries.
pub fn audit<R: BufRead>(r: R) -> Result<AuditReport> {
    let start = Instant::now();
    let mut body = Vec::new();
    let mut report = AuditReport::default();
    for (idx, l) in r.lines().enumerate() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        if idx == 0 && l.contains("format_version") {
            continue;
        }
        if l.contains("\"truncated\"") {
            report.truncated = true;
            continue;
        }
        body.push((idx + 1, l));
    }
    let results: Vec<_> = body
        .par_iter()
        .map(|(line, text)| audit_line(*line, text))
        .collect();
    for r in results {
        report.records += 1;
        match r {
            Ok(ops) => {
                report.passed += 1;
                report.integer_ops += ops;
            }
            Err(f) => report.failures.push(f),
        }
    }
    report.elapsed_ms = start.elapsed().as_millis() as u64;
    Ok(report)
}

pub fn audit_file(path: &Path) -> Result<AuditReport> {
    audit(BufReader::new(File::open(path)?))
}

#[derive(Serialize, Deserialize)]
struct UniverseHeader {
    format_version: u32,
    kind: String,
    n: usize,
    count: usize,
}

const UNIVERSE_KIND: &str = "npn-universe";

/// Header line, then one canonical fid per line in ascending order.
pub fn write_universe<W: Write>(u: &NpnUniverse, mut out: W) -> Result<()> {
    let h = UniverseHeader {
        format_version: FORMAT_VERSION,
        kind: UNIVERSE_KIND.into(),
        n: u.n,
        count: u.canonical_fids.len(),
    };
    writeln!(out, "{}", serde_json::to_string(&h)?)?;
    for &fid in &u.canonical_fids {
        writeln!(out, "{}", format_fid(fid))?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_universe(u: &NpnUniverse, path: &Path, force: bool) -> Result<()> {
    write_universe(u, create_output(path, force)?)
}

pub fn read_universe<R: BufRead>(r: R) -> Result<NpnUniverse> {
    let mut lines = r.lines();
    let first = lines.next().ok_or_else(|| corrupt(1, "empty file"))??;
    let h: UniverseHeader = serde_json::from_str(&first).map_err(|e| corrupt(1, e.to_string()))?;
    if h.format_version != FORMAT_VERSION || h.kind != UNIVERSE_KIND {
        return Err(Error::UnsupportedFormat(format!(
            "{} version {}",
            h.kind, h.format_version
        )));
    }
    let mut fids = Vec::with_capacity(h.count);
    for (idx, l) in lines.enumerate() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let fid = parse_fid(l.trim()).map_err(|e| corrupt(idx + 2, e.to_string()))?;
        if fids.last().is_some_and(|&p| p >= fid) {
            return Err(corrupt(idx + 2, "fids not ascending"));
        }
        fids.push(fid);
    }
    if fids.len() != h.count {
        return Err(corrupt(1, format!("header count {} but {} fids", h.count, fids.len())));
    }
    Ok(NpnUniverse {
        n: h.n,
        canonical_fids: fids,
    })
}

pub fn load_universe(path: &Path) -> Result<NpnUniverse> {
    read_universe(BufReader::new(File::open(path)?))
}
