//! On-disk archive of a computed series and CSV export of analysis results.
//!
//! An archive is a directory: a `manifest.txt` of run metadata plus one
//! `order_NNNNN.rec` file per completed order, holding the drift coefficient
//! c_k and the three polynomials (u_k, sigma_k, gamma_k) that a resumed
//! expansion needs. Scalars are stored as sign, hexadecimal mantissa and
//! binary exponent, so every value round-trips bit-exactly and files are
//! byte-reproducible across runs. Orders are append-only: interrupting and
//! resuming a run leaves exactly the same bytes as running it in one piece.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rug::{Float, Integer};

use crate::arith::{float_bits, Complex, Context, Frequency};
use crate::error::{Error, Result};
use crate::gevrey::{FitResult, GrowthSequence, NormDescriptor};
use crate::lindstedt::LindstedtSeries;
use crate::trigpoly::TrigPoly;
use crate::validate::{CrossEntry, ResidualReport, SweepReport};

/// Version of the archive layout this build reads and writes.
pub const FORMAT_VERSION: u32 = 1;

/// Run metadata stored at the head of every archive.
#[derive(Debug, Clone)]
pub struct Manifest {
    pub format_version: u32,
    /// Frequency descriptor (p, q, d, r) for (p + q sqrt(d)) / r.
    pub descriptor: (i64, i64, i64, i64),
    pub label: String,
    pub decimal_digits: u32,
    pub grid_exponent: u32,
    /// Highest completed order present in the directory.
    pub n_max: usize,
    pub normalization: String,
    pub forcing: String,
    pub tool_version: String,
    /// Unix seconds; taken from SOURCE_DATE_EPOCH when set, so archives can
    /// be reproduced byte-for-byte.
    pub created: u64,
}

/// Creation time for new manifests: SOURCE_DATE_EPOCH when set (the usual
/// reproducible-output convention), otherwise the current clock.
pub fn creation_timestamp() -> u64 {
    if let Ok(v) = std::env::var("SOURCE_DATE_EPOCH") {
        if let Ok(n) = v.trim().parse::<u64>() {
            return n;
        }
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Encodes a scalar as sign + hex mantissa + binary exponent, e.g.
/// `-0x1a2bp-13` for -0x1a2b * 2^-13. Zeros keep their sign.
pub fn float_to_hex(f: &Float) -> String {
    if f.is_zero() {
        return if f.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let (m, e) = float_bits(f);
    let sign = if m < 0 { "-" } else { "" };
    let mag = m.clone().abs();
    format!("{sign}0x{}p{e}", mag.to_string_radix(16))
}

/// Decodes [`float_to_hex`] output at the given precision. Exact whenever the
/// precision is at least that of the stored value.
pub fn float_from_hex(s: &str, prec: u32) -> Result<Float> {
    let bad = |msg: &str| Error::Corrupted(format!("scalar {s:?}: {msg}"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if body == "0" {
        let mut z = Float::new(prec);
        if neg {
            z = -z;
        }
        return Ok(z);
    }
    let body = body
        .strip_prefix("0x")
        .ok_or_else(|| bad("missing 0x prefix"))?;
    let (mant, exp) = body.split_once('p').ok_or_else(|| bad("missing exponent"))?;
    let m = Integer::from_str_radix(mant, 16).map_err(|_| bad("bad mantissa"))?;
    let e: i32 = exp.parse().map_err(|_| bad("bad exponent"))?;
    if m.significant_bits() > prec {
        return Err(bad("mantissa wider than the target precision"));
    }
    let mut f = Float::with_val(prec, &m);
    f <<= e;
    if neg {
        f = -f;
    }
    Ok(f)
}

fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.txt")
}

fn order_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("order_{k:05}.rec"))
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(content.as_bytes())?;
    Ok(())
}

fn render_manifest(m: &Manifest) -> String {
    let (p, q, d, r) = m.descriptor;
    format!(
        "format_version = {}\n\
         omega_descriptor = {p} {q} {d} {r}\n\
         omega_label = {}\n\
         decimal_digits = {}\n\
         grid_exponent = {}\n\
         n_max = {}\n\
         normalization = {}\n\
         forcing = {}\n\
         tool_version = {}\n\
         created = {}\n",
        m.format_version,
        m.label,
        m.decimal_digits,
        m.grid_exponent,
        m.n_max,
        m.normalization,
        m.forcing,
        m.tool_version,
        m.created,
    )
}

/// Reads and checks the manifest of an archive directory.
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = manifest_path(dir);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Corrupted(format!("cannot read {}: {e}", path.display())))?;
    let mut kv = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Corrupted(format!("{}:{}: expected key = value", path.display(), i + 1))
        })?;
        kv.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |key: &str| {
        kv.get(key)
            .cloned()
            .ok_or_else(|| Error::Corrupted(format!("{}: missing {key}", path.display())))
    };
    let parse_u32 = |key: &str| -> Result<u32> {
        get(key)?
            .parse()
            .map_err(|_| Error::Corrupted(format!("{}: bad {key}", path.display())))
    };
    let format_version: u32 = parse_u32("format_version")?;
    if format_version != FORMAT_VERSION {
        return Err(Error::FormatVersion {
            found: format_version,
            supported: FORMAT_VERSION,
        });
    }
    let desc_raw = get("omega_descriptor")?;
    let parts: Vec<i64> = desc_raw
        .split_whitespace()
        .map(|t| t.parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Corrupted(format!("{}: bad omega_descriptor", path.display())))?;
    if parts.len() != 4 {
        return Err(Error::Corrupted(format!(
            "{}: omega_descriptor needs 4 integers",
            path.display()
        )));
    }
    Ok(Manifest {
        format_version,
        descriptor: (parts[0], parts[1], parts[2], parts[3]),
        label: get("omega_label")?,
        decimal_digits: parse_u32("decimal_digits")?,
        grid_exponent: parse_u32("grid_exponent")?,
        n_max: get("n_max")?
            .parse()
            .map_err(|_| Error::Corrupted(format!("{}: bad n_max", path.display())))?,
        normalization: get("normalization")?,
        forcing: get("forcing")?,
        tool_version: get("tool_version")?,
        created: get("created")?
            .parse()
            .map_err(|_| Error::Corrupted(format!("{}: bad created", path.display())))?,
    })
}

fn render_poly(name: &str, poly: &TrigPoly, out: &mut String) {
    use std::fmt::Write as _;
    let _ = writeln!(out, "{name}_degree = {}", poly.degree());
    for (l, c) in poly.coeffs().iter().enumerate() {
        let _ = writeln!(
            out,
            "{name} {l} {} {}",
            float_to_hex(&c.re),
            float_to_hex(&c.im)
        );
    }
}

fn render_order(series: &LindstedtSeries, k: usize) -> String {
    let mut out = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(out, "order = {k}");
    let _ = writeln!(out, "c = {}", float_to_hex(series.drift(k)));
    render_poly("u", series.term(k), &mut out);
    render_poly("sigma", series.sin_comp(k), &mut out);
    render_poly("gamma", series.cos_comp(k), &mut out);
    out
}

fn manifest_for(series: &LindstedtSeries, n_max: usize, created: u64) -> Manifest {
    Manifest {
        format_version: FORMAT_VERSION,
        descriptor: series.omega().descriptor(),
        label: series.omega().label().to_string(),
        decimal_digits: series.ctx().decimal_digits(),
        grid_exponent: series.ctx().grid_exponent(),
        n_max,
        normalization: "zero-mean".into(),
        forcing: "sin(2*pi*x)/(2*pi)".into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        created,
    }
}

/// Writes a complete archive for the series. The directory is created if
/// needed; a directory that already holds a manifest is refused (use
/// [`append_order`] to continue a run).
pub fn save_archive(series: &LindstedtSeries, dir: &Path, created: Option<u64>) -> Result<()> {
    fs::create_dir_all(dir)?;
    if manifest_path(dir).exists() {
        return Err(Error::Config(format!(
            "{} already holds an archive; resume instead of overwriting",
            dir.display()
        )));
    }
    for k in 0..=series.n_max() {
        write_file(&order_path(dir, k), &render_order(series, k))?;
    }
    let m = manifest_for(series, series.n_max(), created.unwrap_or_else(creation_timestamp));
    write_file(&manifest_path(dir), &render_manifest(&m))
}

/// Appends order k of the series to the archive, creating the archive on the
/// first call (k = 0). Orders must arrive consecutively; the manifest is
/// rewritten to record the new high-water mark while keeping its original
/// creation stamp.
pub fn append_order(
    series: &LindstedtSeries,
    k: usize,
    dir: &Path,
    created: Option<u64>,
) -> Result<()> {
    if k > series.n_max() {
        return Err(Error::Config(format!(
            "order {k} is not present in the series (max {})",
            series.n_max()
        )));
    }
    let manifest = if manifest_path(dir).exists() {
        let mut m = read_manifest(dir)?;
        if k != m.n_max + 1 && k != 0 {
            return Err(Error::Config(format!(
                "archive holds orders 0..={}, cannot append order {k}",
                m.n_max
            )));
        }
        if k == 0 {
            // rewriting order 0 of an existing archive is only sane if
            // nothing beyond it exists yet
            if m.n_max != 0 {
                return Err(Error::Config(
                    "archive already holds higher orders; refusing to restart it".into(),
                ));
            }
        }
        m.n_max = k;
        m
    } else {
        if k != 0 {
            return Err(Error::Config(format!(
                "new archive must start at order 0, got {k}"
            )));
        }
        fs::create_dir_all(dir)?;
        manifest_for(series, 0, created.unwrap_or_else(creation_timestamp))
    };
    write_file(&order_path(dir, k), &render_order(series, k))?;
    write_file(&manifest_path(dir), &render_manifest(&manifest))
}

struct OrderRecord {
    c: Float,
    u: TrigPoly,
    sigma: TrigPoly,
    gamma: TrigPoly,
}

fn parse_poly(
    lines: &mut std::iter::Peekable<std::str::Lines<'_>>,
    name: &str,
    ctx: Context,
    file: &Path,
) -> Result<TrigPoly> {
    let bad = |msg: String| Error::Corrupted(format!("{}: {msg}", file.display()));
    let head = lines
        .next()
        .ok_or_else(|| bad(format!("missing {name}_degree")))?;
    let degree: usize = head
        .strip_prefix(&format!("{name}_degree ="))
        .map(str::trim)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(format!("bad {name}_degree line {head:?}")))?;
    let prec = ctx.prec();
    let mut coeffs = Vec::with_capacity(degree + 1);
    for l in 0..=degree {
        let line = lines
            .next()
            .ok_or_else(|| bad(format!("{name} truncated at mode {l}")))?;
        let mut tok = line.split_whitespace();
        let tag = tok.next();
        let idx: Option<usize> = tok.next().and_then(|t| t.parse().ok());
        let re = tok.next();
        let im = tok.next();
        match (tag, idx, re, im, tok.next()) {
            (Some(t), Some(i), Some(re), Some(im), None) if t == name && i == l => {
                let re = float_from_hex(re, prec)
                    .map_err(|e| bad(format!("{name} mode {l}: {e}")))?;
                let im = float_from_hex(im, prec)
                    .map_err(|e| bad(format!("{name} mode {l}: {e}")))?;
                coeffs.push(Complex::from_parts(re, im));
            }
            _ => return Err(bad(format!("bad {name} line {line:?}"))),
        }
    }
    TrigPoly::from_coeffs(ctx, coeffs)
}

fn read_order(dir: &Path, k: usize, ctx: Context) -> Result<OrderRecord> {
    let path = order_path(dir, k);
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::Corrupted(format!("cannot read {}: {e}", path.display())))?;
    let bad = |msg: String| Error::Corrupted(format!("{}: {msg}", path.display()));
    let mut lines = text.lines().peekable();
    let order_line = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let stored_k: usize = order_line
        .strip_prefix("order =")
        .map(str::trim)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| bad(format!("bad order line {order_line:?}")))?;
    if stored_k != k {
        return Err(bad(format!("file claims order {stored_k}, expected {k}")));
    }
    let c_line = lines.next().ok_or_else(|| bad("missing drift line".into()))?;
    let c_hex = c_line
        .strip_prefix("c =")
        .map(str::trim)
        .ok_or_else(|| bad(format!("bad drift line {c_line:?}")))?;
    let c = float_from_hex(c_hex, ctx.prec()).map_err(|e| bad(format!("drift: {e}")))?;
    let u = parse_poly(&mut lines, "u", ctx, &path)?;
    let sigma = parse_poly(&mut lines, "sigma", ctx, &path)?;
    let gamma = parse_poly(&mut lines, "gamma", ctx, &path)?;
    if lines.next().is_some() {
        return Err(bad("trailing content".into()));
    }
    Ok(OrderRecord { c, u, sigma, gamma })
}

/// Loads an archive into a series under the caller's context, which must
/// carry at least as many digits as the stored run (values are re-read
/// exactly; extra precision pads with zero bits).
pub fn load_archive(dir: &Path, ctx: Context) -> Result<LindstedtSeries> {
    let manifest = read_manifest(dir)?;
    if ctx.decimal_digits() < manifest.decimal_digits {
        return Err(Error::PrecisionDowngrade {
            stored: manifest.decimal_digits,
            requested: ctx.decimal_digits(),
        });
    }
    let (p, q, d, r) = manifest.descriptor;
    let mut omega = Frequency::new(p, q, d, r, ctx)?;
    omega.set_label(manifest.label.clone());

    let mut terms = Vec::with_capacity(manifest.n_max + 1);
    let mut drift = Vec::with_capacity(manifest.n_max + 1);
    let mut sin_comp = Vec::with_capacity(manifest.n_max + 1);
    let mut cos_comp = Vec::with_capacity(manifest.n_max + 1);
    for k in 0..=manifest.n_max {
        let rec = read_order(dir, k, ctx)?;
        terms.push(rec.u);
        drift.push(rec.c);
        sin_comp.push(rec.sigma);
        cos_comp.push(rec.gamma);
    }
    LindstedtSeries::from_parts(omega, terms, drift, sin_comp, cos_comp)
}

fn format_value(v: &Float, digits: usize) -> String {
    if v.is_zero() {
        return "0".into();
    }
    v.to_string_radix(10, Some(digits))
}

fn format_log10(v: f64) -> String {
    if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.6}")
    }
}

/// Writes a growth sequence as `k,value` rows after two comment lines naming
/// the norm and the source run.
pub fn export_sequence_csv(
    seq: &GrowthSequence,
    path: &Path,
    digits: usize,
) -> Result<()> {
    let mut out = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(out, "# norm: {}", seq.norm());
    let _ = writeln!(out, "# source: {}", seq.source());
    let _ = writeln!(out, "k,value");
    for (k, v) in seq.entries() {
        let _ = writeln!(out, "{k},{}", format_value(v, digits));
    }
    write_file(path, &out)
}

/// Reads rows written by [`export_sequence_csv`] (comments and header
/// skipped) at the given precision.
pub fn read_sequence_csv(path: &Path, prec: u32) -> Result<GrowthSequence> {
    let text = fs::read_to_string(path)?;
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("k,") {
            continue;
        }
        let (k_str, v_str) = line.split_once(',').ok_or_else(|| {
            Error::Corrupted(format!("{}:{}: expected k,value", path.display(), i + 1))
        })?;
        let k: usize = k_str.trim().parse().map_err(|_| {
            Error::Corrupted(format!("{}:{}: bad index", path.display(), i + 1))
        })?;
        let parsed = Float::parse(v_str.trim()).map_err(|_| {
            Error::Corrupted(format!("{}:{}: bad value", path.display(), i + 1))
        })?;
        entries.push((k, Float::with_val(prec, parsed)));
    }
    GrowthSequence::from_entries(
        entries,
        NormDescriptor::Label(format!("csv:{}", path.display())),
        path.display().to_string(),
    )
}

/// One row per fit: prefactor, exponent, shift, worst residual, window, model.
pub fn export_fits_csv(fits: &[(String, FitResult)], path: &Path, digits: usize) -> Result<()> {
    let mut out = String::from("label,R,sigma,b,e_inf,k_lo,k_hi,model\n");
    use std::fmt::Write as _;
    for (label, fit) in fits {
        let _ = writeln!(
            out,
            "{label},{},{},{},{},{},{},{}",
            format_value(&fit.r, digits),
            format_value(&fit.sigma, digits),
            format_value(&fit.b, digits),
            format_value(&fit.e_inf, digits),
            fit.k_lo,
            fit.k_hi,
            fit.model.as_str()
        );
    }
    write_file(path, &out)
}

/// Per-order conjugacy residual exponents.
pub fn export_residual_csv(report: &ResidualReport, path: &Path) -> Result<()> {
    let mut out = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(out, "# source: {}", report.source);
    let _ = writeln!(
        out,
        "# digits: {}, grid points: {}",
        report.decimal_digits, report.grid_points
    );
    let _ = writeln!(out, "n,log10_resid,log10_scale,scaled_log10");
    for e in &report.entries {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.n,
            format_log10(e.log10),
            format_log10(e.log10_scale),
            format_log10(e.scaled_log10())
        );
    }
    write_file(path, &out)
}

/// Truncation-order sweep of invariance residuals at one strength.
pub fn export_sweep_csv(report: &SweepReport, path: &Path) -> Result<()> {
    let mut out = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(out, "# eps: {}", format_value(&report.eps, 20));
    if let Some(s) = report.slope {
        let _ = writeln!(out, "# slope: {s:.6}");
    }
    let _ = writeln!(out, "# floor_log10: {:.1}", report.floor_log10);
    let _ = writeln!(out, "n_trunc,log10_resid,usable");
    for e in &report.entries {
        let _ = writeln!(out, "{},{},{}", e.n_trunc, format_log10(e.log10), e.usable);
    }
    write_file(path, &out)
}

/// Order-by-order cross-run differences as log10 exponents; exact matches
/// print as -inf.
pub fn export_cross_csv(entries: &[CrossEntry], path: &Path) -> Result<()> {
    let mut out = String::from("n,log10_abs,log10_rel,log10_drift_abs\n");
    use std::fmt::Write as _;
    let log = |v: &Float| {
        if v.is_zero() {
            f64::NEG_INFINITY
        } else {
            v.clone().log10().to_f64()
        }
    };
    for e in entries {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            e.n,
            format_log10(log(&e.sup_abs)),
            format_log10(log(&e.sup_rel)),
            format_log10(log(&e.drift_abs))
        );
    }
    write_file(path, &out)
}
