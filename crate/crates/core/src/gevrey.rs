//! Growth observables of the series and their analysis: per-order norm
//! sequences, power-law fits, the factorial-scaled diagnostic, centralized
//! (moving-average-subtracted) sequences, and oscillation detection.
//!
//! The central object is the sequence a_k = (1/k) log ||u_k|| for a chosen
//! norm. A Gevrey-type bound ||u_k|| <= C R^k k^(sigma k) makes a_k behave
//! like log R + sigma log k, which is what the fits extract. Natural
//! logarithms throughout.

use std::fmt;

use rug::Float;

use crate::arith::Context;
use crate::error::{Error, Result};
use crate::lindstedt::LindstedtSeries;
use crate::trigpoly::{Grid, NormConvention};

/// Which norm a growth sequence measures.
#[derive(Debug, Clone)]
pub enum NormDescriptor {
    Analytic { rho: Float, convention: NormConvention },
    Sobolev { r: u32 },
    Sup,
    /// Externally supplied data (synthetic sequences, CSV imports).
    Label(String),
}

impl fmt::Display for NormDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormDescriptor::Analytic { rho, convention } => {
                write!(
                    f,
                    "analytic rho={} ({})",
                    rho.to_string_radix(10, Some(6)),
                    convention.as_str()
                )
            }
            NormDescriptor::Sobolev { r } => write!(f, "sobolev r={r}"),
            NormDescriptor::Sup => write!(f, "sup"),
            NormDescriptor::Label(s) => write!(f, "{s}"),
        }
    }
}

/// Per-order scalar observable (k, value), k strictly increasing.
#[derive(Debug, Clone)]
pub struct GrowthSequence {
    entries: Vec<(usize, Float)>,
    norm: NormDescriptor,
    source: String,
}

impl GrowthSequence {
    /// Builds from raw entries; sorts by k and rejects duplicates.
    pub fn from_entries(
        entries: Vec<(usize, Float)>,
        norm: NormDescriptor,
        source: impl Into<String>,
    ) -> Result<GrowthSequence> {
        let mut entries = entries;
        entries.sort_by_key(|(k, _)| *k);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Config(format!(
                    "duplicate entry for k = {}",
                    pair[0].0
                )));
            }
        }
        if entries.is_empty() {
            return Err(Error::DegenerateRange("empty growth sequence".into()));
        }
        Ok(GrowthSequence {
            entries,
            norm,
            source: source.into(),
        })
    }

    pub fn entries(&self) -> &[(usize, Float)] {
        &self.entries
    }

    pub fn norm(&self) -> &NormDescriptor {
        &self.norm
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn k_min(&self) -> usize {
        self.entries.first().map(|(k, _)| *k).unwrap_or(0)
    }

    pub fn k_max(&self) -> usize {
        self.entries.last().map(|(k, _)| *k).unwrap_or(0)
    }

    pub fn value_at(&self, k: usize) -> Option<&Float> {
        self.entries
            .binary_search_by_key(&k, |(kk, _)| *kk)
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// Entries with k_lo <= k <= k_hi.
    fn window(&self, k_lo: usize, k_hi: usize) -> Vec<&(usize, Float)> {
        self.entries
            .iter()
            .filter(|(k, _)| (k_lo..=k_hi).contains(k))
            .collect()
    }

    /// True when the ks cover `lo..=hi` without gaps.
    fn contiguous_over(&self, lo: usize, hi: usize) -> bool {
        if lo > hi {
            return false;
        }
        (lo..=hi).all(|k| self.value_at(k).is_some())
    }

    fn prec(&self) -> u32 {
        self.entries[0].1.prec()
    }
}

fn norm_of(
    series: &LindstedtSeries,
    k: usize,
    norm: &NormDescriptor,
    grid: &mut Option<Grid>,
) -> Result<Float> {
    let u = series.term(k);
    match norm {
        NormDescriptor::Analytic { rho, convention } => u.analytic_norm(rho, *convention),
        NormDescriptor::Sobolev { r } => Ok(u.sobolev_norm(*r)),
        NormDescriptor::Sup => {
            let g = grid.get_or_insert_with(|| Grid::new(series.ctx()));
            u.sup_norm(g)
        }
        NormDescriptor::Label(s) => Err(Error::Config(format!(
            "descriptor {s:?} labels external data; it cannot measure a series"
        ))),
    }
}

/// a_k = (1/k) log ||u_k|| for k = 1..=k_max.
pub fn growth_sequence(
    series: &LindstedtSeries,
    norm: &NormDescriptor,
    k_max: usize,
) -> Result<GrowthSequence> {
    if k_max < 1 || k_max > series.n_max() {
        return Err(Error::DegenerateRange(format!(
            "k_max = {k_max} outside the computed orders 1..={}",
            series.n_max()
        )));
    }
    let mut grid = None;
    let mut entries = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let n = norm_of(series, k, norm, &mut grid)?;
        if n.is_zero() {
            return Err(Error::UndefinedLog { order: k });
        }
        let mut v = n.ln();
        v /= k as u32;
        entries.push((k, v));
    }
    GrowthSequence::from_entries(entries, norm.clone(), source_of(series))
}

/// The factorial-scaled diagnostic (1/k)(log k! + log ||u_k||): what the
/// original tables effectively measured, shifting the fitted sigma up by
/// about 1.
pub fn factorial_scaled(
    series: &LindstedtSeries,
    norm: &NormDescriptor,
    k_max: usize,
) -> Result<GrowthSequence> {
    if k_max < 1 || k_max > series.n_max() {
        return Err(Error::DegenerateRange(format!(
            "k_max = {k_max} outside the computed orders 1..={}",
            series.n_max()
        )));
    }
    let prec = series.ctx().prec();
    let mut grid = None;
    let mut entries = Vec::with_capacity(k_max);
    let mut log_fact = Float::new(prec); // log k! accumulated as sum of logs
    for k in 1..=k_max {
        log_fact += Float::with_val(prec, k as u32).ln();
        let n = norm_of(series, k, norm, &mut grid)?;
        if n.is_zero() {
            return Err(Error::UndefinedLog { order: k });
        }
        let mut v = n.ln();
        v += &log_fact;
        v /= k as u32;
        entries.push((k, v));
    }
    GrowthSequence::from_entries(entries, norm.clone(), source_of(series))
}

fn source_of(series: &LindstedtSeries) -> String {
    format!(
        "{} d={} N={}",
        series.omega().label(),
        series.ctx().decimal_digits(),
        series.n_max()
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// value ~ log R + sigma log k.
    PowerLaw,
    /// value ~ log R + sigma log(k + b).
    ShiftedPowerLaw,
}

impl FitModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitModel::PowerLaw => "power-law",
            FitModel::ShiftedPowerLaw => "shifted-power-law",
        }
    }
}

/// Least-squares fit of a growth sequence window.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Prefactor R (always positive: it is exp of the fitted intercept).
    pub r: Float,
    pub sigma: Float,
    /// Abscissa shift; exactly 0 for the two-parameter model.
    pub b: Float,
    /// Largest absolute residual over the fitted window.
    pub e_inf: Float,
    pub k_lo: usize,
    pub k_hi: usize,
    pub model: FitModel,
}

/// Inner linear solve shared by both fit models: least squares of
/// value ~ intercept + slope * log(k + b) over the window, returning the full
/// result for that fixed b.
pub fn fit_with_shift(
    seq: &GrowthSequence,
    k_lo: usize,
    k_hi: usize,
    b: &Float,
) -> Result<FitResult> {
    if k_lo >= k_hi {
        return Err(Error::DegenerateRange(format!(
            "fit window [{k_lo}, {k_hi}] is empty or reversed"
        )));
    }
    let window = seq.window(k_lo, k_hi);
    if window.len() < 3 {
        return Err(Error::DegenerateRange(format!(
            "fit window [{k_lo}, {k_hi}] holds {} entries, need at least 3",
            window.len()
        )));
    }
    let prec = seq.prec();
    // abscissa log(k + b) must exist for every window point
    let lowest = Float::with_val(prec, window[0].0 as u32) + b;
    if !(lowest.cmp0() == Some(std::cmp::Ordering::Greater)) {
        return Err(Error::DegenerateRange(format!(
            "shift b = {b} makes log(k+b) undefined at k = {}",
            window[0].0
        )));
    }

    let n = Float::with_val(prec, window.len() as u32);
    let mut sw = Float::new(prec);
    let mut sww = Float::new(prec);
    let mut sy = Float::new(prec);
    let mut swy = Float::new(prec);
    let mut abscissa = Vec::with_capacity(window.len());
    for (k, y) in &window {
        let mut w = Float::with_val(prec, *k as u32);
        w += b;
        w.ln_mut();
        sw += &w;
        sww += Float::with_val(prec, &w * &w);
        sy += y;
        swy += Float::with_val(prec, &w * y);
        abscissa.push(w);
    }
    let mut denom = Float::with_val(prec, &n * &sww);
    denom -= Float::with_val(prec, &sw * &sw);
    if denom.is_zero() {
        return Err(Error::DegenerateRange(
            "all abscissas coincide; slope undefined".into(),
        ));
    }
    let mut sigma = Float::with_val(prec, &n * &swy);
    sigma -= Float::with_val(prec, &sw * &sy);
    sigma /= &denom;
    let mut intercept = sy.clone();
    intercept -= Float::with_val(prec, &sigma * &sw);
    intercept /= &n;

    let mut e_inf = Float::new(prec);
    for ((_, y), w) in window.iter().zip(&abscissa) {
        let mut resid = Float::with_val(prec, y);
        resid -= &intercept;
        resid -= Float::with_val(prec, &sigma * w);
        resid.abs_mut();
        if resid > e_inf {
            e_inf = resid;
        }
    }

    Ok(FitResult {
        r: intercept.exp(),
        sigma,
        b: Float::with_val(prec, b),
        e_inf,
        k_lo,
        k_hi,
        model: FitModel::PowerLaw,
    })
}

/// Least-squares fit value ~ log R + sigma log k over k in [k_lo, k_hi];
/// e_inf is the largest residual over the same window.
pub fn fit_log(seq: &GrowthSequence, k_lo: usize, k_hi: usize) -> Result<FitResult> {
    let zero = Float::new(seq.prec());
    fit_with_shift(seq, k_lo, k_hi, &zero)
}

/// Three-parameter fit value ~ log R + sigma log(k + b), profiling the sum of
/// squares over b with a golden-section search on [-k_lo + 1, 10 k_hi].
pub fn fit_log_shifted(seq: &GrowthSequence, k_lo: usize, k_hi: usize) -> Result<FitResult> {
    let prec = seq.prec();
    let sse = |b: &Float| -> Result<Float> {
        let fit = fit_with_shift(seq, k_lo, k_hi, b)?;
        let window = seq.window(k_lo, k_hi);
        let mut acc = Float::new(prec);
        let log_r = fit.r.clone().ln();
        for (k, y) in window {
            let mut w = Float::with_val(prec, *k as u32);
            w += b;
            w.ln_mut();
            let mut resid = Float::with_val(prec, y);
            resid -= &log_r;
            resid -= Float::with_val(prec, &fit.sigma * &w);
            acc += Float::with_val(prec, &resid * &resid);
        }
        Ok(acc)
    };

    // golden-section bracket per the documented search interval
    let mut lo = Float::with_val(prec, 1i64 - k_lo as i64);
    let mut hi = Float::with_val(prec, 10 * k_hi as u32);
    let mut inv_phi = Float::with_val(prec, 5u32);
    inv_phi.sqrt_mut();
    inv_phi -= 1u32;
    inv_phi /= 2u32; // 0.618...

    let mut width = Float::with_val(prec, &hi - &lo);
    let mut x1 = Float::with_val(prec, &hi - Float::with_val(prec, &width * &inv_phi));
    let mut x2 = Float::with_val(prec, &lo + Float::with_val(prec, &width * &inv_phi));
    let mut f1 = sse(&x1)?;
    let mut f2 = sse(&x2)?;
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            width = Float::with_val(prec, &hi - &lo);
            x1 = Float::with_val(prec, &hi - Float::with_val(prec, &width * &inv_phi));
            f1 = sse(&x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            width = Float::with_val(prec, &hi - &lo);
            x2 = Float::with_val(prec, &lo + Float::with_val(prec, &width * &inv_phi));
            f2 = sse(&x2)?;
        }
    }
    let mut best_b = Float::with_val(prec, &lo + &hi);
    best_b /= 2u32;
    let mut fit = fit_with_shift(seq, k_lo, k_hi, &best_b)?;
    fit.model = FitModel::ShiftedPowerLaw;
    Ok(fit)
}

/// x_k = a_k - (1/5) sum_{j=k-2..k+2} a_j, defined on [k_min+2, k_max-2].
pub fn centralize_x(seq: &GrowthSequence) -> Result<GrowthSequence> {
    let (lo, hi) = (seq.k_min(), seq.k_max());
    if hi < lo + 4 {
        return Err(Error::DegenerateRange(
            "sequence too short for the 5-point stencil".into(),
        ));
    }
    if !seq.contiguous_over(lo, hi) {
        return Err(Error::DegenerateRange(
            "centralization needs a gap-free sequence".into(),
        ));
    }
    let prec = seq.prec();
    let mut entries = Vec::with_capacity(hi - lo - 3);
    for k in (lo + 2)..=(hi - 2) {
        let mut avg = Float::new(prec);
        for j in (k - 2)..=(k + 2) {
            avg += seq.value_at(j).unwrap();
        }
        avg /= 5u32;
        let mut x = seq.value_at(k).unwrap().clone();
        x -= &avg;
        entries.push((k, x));
    }
    GrowthSequence::from_entries(
        entries,
        seq.norm.clone(),
        format!("{} [x-centralized]", seq.source),
    )
}

/// z_k = a_k - (1/3k) sum_{j=k..k+2} j a_j, defined on [k_min, k_max-2]; the
/// stencil annihilates c/k exactly.
pub fn centralize_z(seq: &GrowthSequence) -> Result<GrowthSequence> {
    let (lo, hi) = (seq.k_min(), seq.k_max());
    if hi < lo + 2 {
        return Err(Error::DegenerateRange(
            "sequence too short for the forward stencil".into(),
        ));
    }
    if !seq.contiguous_over(lo, hi) {
        return Err(Error::DegenerateRange(
            "centralization needs a gap-free sequence".into(),
        ));
    }
    let prec = seq.prec();
    let mut entries = Vec::with_capacity(hi - lo - 1);
    for k in lo..=(hi - 2) {
        let mut acc = Float::new(prec);
        for j in k..=(k + 2) {
            acc += Float::with_val(prec, seq.value_at(j).unwrap() * (j as u32));
        }
        acc /= 3u32;
        acc /= k as u32;
        let mut z = seq.value_at(k).unwrap().clone();
        z -= &acc;
        entries.push((k, z));
    }
    GrowthSequence::from_entries(
        entries,
        seq.norm.clone(),
        format!("{} [z-centralized]", seq.source),
    )
}

/// What the oscillation analysis found in a window of x_k.
#[derive(Debug, Clone)]
pub enum OscillationOutcome {
    /// The centralized sequence is flat at rounding level; there is nothing
    /// periodic to report.
    None { max_abs: Float },
    Periodic(OscillationReport),
}

#[derive(Debug, Clone)]
pub struct OscillationReport {
    /// Period in 2..=10 with the largest single-bin Fourier magnitude.
    pub dominant_period: usize,
    /// That winning magnitude.
    pub peak_magnitude: Float,
    /// Second-best magnitude, for margin inspection.
    pub runner_up_magnitude: Float,
    /// Decay exponent: |x_k| envelope ~ k^(-beta).
    pub beta: Float,
    /// Largest residual of the log-log envelope fit.
    pub beta_residual: Float,
    /// Number of envelope points (local maxima of |x_k|) the beta fit used.
    pub envelope_points: usize,
}

/// Centralizes the sequence with the 5-point stencil, then finds the dominant
/// oscillation period of x_k on [k_lo, k_hi] (single-bin Fourier magnitudes
/// at periods 2..=10) and the decay exponent beta of the |x_k| envelope.
///
/// Requires a window of at least 30 points. A centralization that is zero at
/// rounding level yields [`OscillationOutcome::None`].
pub fn oscillation_report(
    seq: &GrowthSequence,
    k_lo: usize,
    k_hi: usize,
) -> Result<OscillationOutcome> {
    if k_hi < k_lo || k_hi - k_lo + 1 < 30 {
        return Err(Error::DegenerateRange(format!(
            "oscillation window [{k_lo}, {k_hi}] holds fewer than 30 points"
        )));
    }
    let x = centralize_x(seq)?;
    let lo = k_lo.max(x.k_min());
    let hi = k_hi.min(x.k_max());
    if hi < lo || hi - lo + 1 < 30 {
        return Err(Error::DegenerateRange(format!(
            "centralized window [{lo}, {hi}] holds fewer than 30 points"
        )));
    }
    if !x.contiguous_over(lo, hi) {
        return Err(Error::DegenerateRange(
            "centralized sequence has gaps in the window".into(),
        ));
    }
    let prec = x.prec();

    // flatness gate: compare against the data's own scale at working accuracy
    let mut scale = Float::with_val(prec, 1u32);
    for (_, v) in seq.window(lo, hi) {
        let a = v.clone().abs();
        if a > scale {
            scale = a;
        }
    }
    let mut max_abs = Float::new(prec);
    for k in lo..=hi {
        let a = x.value_at(k).unwrap().clone().abs();
        if a > max_abs {
            max_abs = a;
        }
    }
    let digits = (prec as f64 / std::f64::consts::LOG2_10).floor() as u32;
    let mut floor = Float::with_val(prec, 10u32);
    {
        use rug::ops::Pow;
        floor = floor.pow(-((digits.saturating_sub(20)) as i32));
    }
    floor *= &scale;
    if max_abs <= floor {
        return Ok(OscillationOutcome::None { max_abs });
    }

    // single-bin Fourier magnitude at frequency 1/p, p = 2..=10
    let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
    let mut best: Option<(usize, Float)> = None;
    let mut second: Option<Float> = None;
    for p in 2usize..=10 {
        let mut re = Float::new(prec);
        let mut im = Float::new(prec);
        for k in lo..=hi {
            let mut angle = Float::with_val(prec, k as u32);
            angle /= p as u32;
            angle *= &two_pi;
            let (s, c) = angle.sin_cos(Float::new(prec));
            let v = x.value_at(k).unwrap();
            re += Float::with_val(prec, v * &c);
            im -= Float::with_val(prec, v * &s);
        }
        let mut mag = Float::with_val(prec, &re * &re);
        mag += Float::with_val(prec, &im * &im);
        mag.sqrt_mut();
        let is_new_best = best.as_ref().map_or(true, |(_, bm)| mag > *bm);
        if is_new_best {
            if let Some((_, bm)) = best.take() {
                second = Some(bm); // the previous best outranks any older second
            }
            best = Some((p, mag));
        } else if second.as_ref().map_or(true, |s| mag > *s) {
            second = Some(mag);
        }
    }
    let (dominant_period, peak_magnitude) = best.unwrap();
    let runner_up_magnitude = second.unwrap();

    // envelope: local maxima of |x_k| in the window
    let mut env: Vec<(usize, Float)> = Vec::new();
    for k in (lo + 1)..hi {
        let a = x.value_at(k).unwrap().clone().abs();
        let before = x.value_at(k - 1).unwrap().clone().abs();
        let after = x.value_at(k + 1).unwrap().clone().abs();
        if a > before && a >= after && !a.is_zero() {
            env.push((k, a));
        }
    }
    if env.len() < 3 {
        return Ok(OscillationOutcome::None { max_abs });
    }
    let entries: Vec<(usize, Float)> = env
        .iter()
        .map(|(k, a)| (*k, a.clone().ln()))
        .collect();
    let env_seq = GrowthSequence::from_entries(
        entries,
        NormDescriptor::Label("log envelope".into()),
        "oscillation envelope",
    )?;
    let fit = fit_with_shift(
        &env_seq,
        env_seq.k_min(),
        env_seq.k_max(),
        &Float::new(prec),
    )?;
    let beta = Float::with_val(prec, -&fit.sigma);

    Ok(OscillationOutcome::Periodic(OscillationReport {
        dominant_period,
        peak_magnitude,
        runner_up_magnitude,
        beta,
        beta_residual: fit.e_inf,
        envelope_points: env.len(),
    }))
}

/// Convenience: digits-of-context helper for callers that format fit tables.
pub fn round6(v: &Float) -> String {
    let f = v.to_f64();
    format!("{f:.6}")
}

/// Builds the standard analytic-norm descriptor used throughout analysis.
pub fn analytic_descriptor(ctx: Context, rho_str: &str, convention: NormConvention) -> Result<NormDescriptor> {
    let parsed = Float::parse(rho_str)
        .map_err(|e| Error::Config(format!("cannot parse rho {rho_str:?}: {e}")))?;
    let rho = Float::with_val(ctx.prec(), parsed);
    if rho.is_sign_negative() && !rho.is_zero() {
        return Err(Error::Config(format!("rho must be >= 0, got {rho_str}")));
    }
    Ok(NormDescriptor::Analytic { rho, convention })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{float_bits, preset};
    use crate::lindstedt::expand;
    use crate::trigpoly::TrigPoly;

    fn ctx() -> Context {
        Context::new(60, 8).unwrap()
    }

    fn close(a: &Float, b: &Float, tol: &Float) -> bool {
        Float::with_val(a.prec().max(b.prec()), a - b).abs() < *tol
    }

    fn synthetic(ctx: Context, range: std::ops::RangeInclusive<usize>, f: impl Fn(usize, u32) -> Float) -> GrowthSequence {
        let prec = ctx.prec();
        let entries: Vec<(usize, Float)> = range.map(|k| (k, f(k, prec))).collect();
        GrowthSequence::from_entries(entries, NormDescriptor::Label("synthetic".into()), "test")
            .unwrap()
    }

    #[test]
    fn fit_recovers_exact_power_law() {
        let ctx = ctx();
        // value = log 2 + 0.5 log k
        let seq = synthetic(ctx, 1..=50, |k, prec| {
            let mut v = Float::with_val(prec, k as u32).ln();
            v /= 2u32;
            v += Float::with_val(prec, 2u32).ln();
            v
        });
        let fit = fit_log(&seq, 1, 50).unwrap();
        let tol = ctx.tol(40);
        assert!(close(&fit.r, &ctx.float_from_u32(2), &tol), "R = {}", fit.r);
        assert!(close(&fit.sigma, &ctx.float_from_f64(0.5), &tol));
        assert!(fit.e_inf < tol);
        assert!(fit.b.is_zero());
        assert_eq!(fit.model, FitModel::PowerLaw);
    }

    #[test]
    fn fit_is_order_independent() {
        let ctx = ctx();
        let values: Vec<(usize, Float)> = (1..=20)
            .map(|k| (k, ctx.float_from_f64((k as f64).sin())))
            .collect();
        let mut shuffled = values.clone();
        shuffled.reverse();
        shuffled.swap(3, 11);
        let a = GrowthSequence::from_entries(values, NormDescriptor::Sup, "a").unwrap();
        let b = GrowthSequence::from_entries(shuffled, NormDescriptor::Sup, "b").unwrap();
        let fa = fit_log(&a, 2, 18).unwrap();
        let fb = fit_log(&b, 2, 18).unwrap();
        assert_eq!(float_bits(&fa.sigma), float_bits(&fb.sigma));
        assert_eq!(float_bits(&fa.r), float_bits(&fb.r));
        assert_eq!(float_bits(&fa.e_inf), float_bits(&fb.e_inf));
    }

    #[test]
    fn fit_rejects_degenerate_windows() {
        let ctx = ctx();
        let seq = synthetic(ctx, 1..=10, |k, prec| Float::with_val(prec, k as u32));
        assert!(matches!(fit_log(&seq, 5, 5), Err(Error::DegenerateRange(_))));
        assert!(matches!(fit_log(&seq, 9, 12), Err(Error::DegenerateRange(_))));
        assert!(matches!(fit_log(&seq, 40, 80), Err(Error::DegenerateRange(_))));
    }

    #[test]
    fn shifted_fit_recovers_planted_shift() {
        let ctx = ctx();
        // value = log 0.57 + 0.24 log(k + 240)
        let seq = synthetic(ctx, 1..=300, |k, prec| {
            let mut v = Float::with_val(prec, k as u32);
            v += 240u32;
            v.ln_mut();
            v *= Float::with_val(prec, 0.24f64);
            v += Float::with_val(prec, 0.57f64).ln();
            v
        });
        let fit = fit_log_shifted(&seq, 1, 300).unwrap();
        assert_eq!(fit.model, FitModel::ShiftedPowerLaw);
        let b = fit.b.to_f64();
        assert!((b - 240.0).abs() < 1e-3, "b = {b}");
        assert!((fit.sigma.to_f64() - 0.24).abs() < 1e-5);
        assert!((fit.r.to_f64() - 0.57).abs() < 1e-5);
        assert!(fit.e_inf.to_f64() < 1e-7);
    }

    #[test]
    fn shift_locked_to_zero_is_the_plain_fit() {
        let ctx = ctx();
        let seq = synthetic(ctx, 1..=40, |k, prec| {
            let mut v = Float::with_val(prec, k as u32).ln();
            v *= Float::with_val(prec, 0.3f64);
            v += Float::with_val(prec, 1.5f64).ln();
            v
        });
        let zero = ctx.new_float();
        let locked = fit_with_shift(&seq, 5, 35, &zero).unwrap();
        let plain = fit_log(&seq, 5, 35).unwrap();
        assert_eq!(float_bits(&locked.sigma), float_bits(&plain.sigma));
        assert_eq!(float_bits(&locked.r), float_bits(&plain.r));
    }

    #[test]
    fn shifted_fit_beats_plain_on_shifted_data() {
        let ctx = ctx();
        let seq = synthetic(ctx, 1..=120, |k, prec| {
            let mut v = Float::with_val(prec, k as u32);
            v += 60u32;
            v.ln_mut();
            v *= Float::with_val(prec, 0.8f64);
            v
        });
        let plain = fit_log(&seq, 1, 120).unwrap();
        let shifted = fit_log_shifted(&seq, 1, 120).unwrap();
        assert!(shifted.e_inf <= plain.e_inf);
    }

    #[test]
    fn factorial_scaling_is_the_log_factorial() {
        let ctx = ctx();
        let omega = preset("golden", ctx).unwrap();
        let series = expand(&omega, 12, ctx).unwrap();
        let norm = NormDescriptor::Sobolev { r: 1 };
        let plain = growth_sequence(&series, &norm, 12).unwrap();
        let scaled = factorial_scaled(&series, &norm, 12).unwrap();
        let tol = ctx.tol(45);
        for k in 1..=12usize {
            // (1/k) log k! via an independent integer-factorial route
            let fact = rug::Integer::from(rug::Integer::factorial(k as u32));
            let mut expect = Float::with_val(ctx.prec(), &fact).ln();
            expect /= k as u32;
            let mut diff = scaled.value_at(k).unwrap().clone();
            diff -= plain.value_at(k).unwrap();
            assert!(close(&diff, &expect, &tol), "k = {k}");
        }
    }

    #[test]
    fn stirling_limit_sanity() {
        let prec = 200;
        let k = 5000u32;
        let mut log_fact = Float::new(prec);
        for j in 1..=k {
            log_fact += Float::with_val(prec, j).ln();
        }
        log_fact /= k;
        // (1/k) log k! - (log k - 1) = log(2 pi k)/(2k) + O(1/k^2) -> 0+
        let mut gap = log_fact;
        gap -= Float::with_val(prec, k).ln();
        gap += 1u32;
        let g = gap.to_f64();
        assert!(g > 0.0005 && g < 0.0015, "gap = {g}");
    }

    #[test]
    fn centralizations_annihilate_their_kernels() {
        let ctx = ctx();
        let tol = ctx.tol(40);

        // constants die under the centered stencil; the forward z stencil
        // instead maps a constant a to exactly -a/k
        let flat = synthetic(ctx, 1..=30, |_, prec| Float::with_val(prec, 0.75f64));
        for v in centralize_x(&flat).unwrap().entries() {
            assert!(v.1.clone().abs() < tol);
        }
        for (k, z) in centralize_z(&flat).unwrap().entries() {
            let mut expect = ctx.float_from_f64(-0.75);
            expect /= *k as u32;
            let mut diff = z.clone();
            diff -= &expect;
            assert!(diff.abs() < tol, "k = {k}");
        }

        // affine sequences die under the centered 5-point stencil
        let affine = synthetic(ctx, 1..=30, |k, prec| {
            let mut v = Float::with_val(prec, k as u32);
            v *= Float::with_val(prec, -1.25f64);
            v += 7u32;
            v
        });
        let x = centralize_x(&affine).unwrap();
        assert_eq!(x.k_min(), 3);
        assert_eq!(x.k_max(), 28);
        for v in x.entries() {
            assert!(v.1.clone().abs() < tol, "k = {}", v.0);
        }

        // c/k dies under the forward z stencil
        let harmonic = synthetic(ctx, 1..=30, |k, prec| {
            let mut v = Float::with_val(prec, 3u32);
            v /= k as u32;
            v
        });
        let z = centralize_z(&harmonic).unwrap();
        assert_eq!(z.k_min(), 1);
        assert_eq!(z.k_max(), 28);
        for v in z.entries() {
            assert!(v.1.clone().abs() < tol, "k = {}", v.0);
        }
    }

    #[test]
    fn centralization_rejects_gaps() {
        let ctx = ctx();
        let prec = ctx.prec();
        let mut entries: Vec<(usize, Float)> = (1..=20)
            .map(|k| (k, Float::with_val(prec, k as u32)))
            .collect();
        entries.remove(10);
        let seq =
            GrowthSequence::from_entries(entries, NormDescriptor::Label("gap".into()), "t").unwrap();
        assert!(matches!(centralize_x(&seq), Err(Error::DegenerateRange(_))));
    }

    #[test]
    fn oscillation_recovers_planted_period_and_decay() {
        let ctx = ctx();
        // a_k = log 2 + 0.5 log k + (1/k) cos(2 pi k / 3)
        let seq = synthetic(ctx, 1..=200, |k, prec| {
            let mut v = Float::with_val(prec, k as u32).ln();
            v /= 2u32;
            v += Float::with_val(prec, 2u32).ln();
            let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
            let mut angle = Float::with_val(prec, k as u32);
            angle /= 3u32;
            angle *= &two_pi;
            let mut osc = angle.cos();
            osc /= k as u32;
            v += osc;
            v
        });
        let outcome = oscillation_report(&seq, 30, 190).unwrap();
        match outcome {
            OscillationOutcome::Periodic(report) => {
                assert_eq!(report.dominant_period, 3);
                let beta = report.beta.to_f64();
                assert!((beta - 1.0).abs() < 0.15, "beta = {beta}");
                assert!(report.peak_magnitude > report.runner_up_magnitude);
                assert!(report.envelope_points >= 10);
            }
            OscillationOutcome::None { .. } => panic!("oscillation missed"),
        }
    }

    #[test]
    fn flat_data_reports_no_oscillation() {
        let ctx = ctx();
        let affine = synthetic(ctx, 1..=100, |k, prec| {
            let mut v = Float::with_val(prec, k as u32);
            v *= Float::with_val(prec, 0.01f64);
            v += 4u32;
            v
        });
        match oscillation_report(&affine, 10, 90).unwrap() {
            OscillationOutcome::None { .. } => {}
            OscillationOutcome::Periodic(r) => {
                panic!("claimed period {} on affine data", r.dominant_period)
            }
        }
    }

    #[test]
    fn oscillation_window_must_be_wide() {
        let ctx = ctx();
        let seq = synthetic(ctx, 1..=100, |k, prec| Float::with_val(prec, k as u32));
        assert!(matches!(
            oscillation_report(&seq, 10, 20),
            Err(Error::DegenerateRange(_))
        ));
    }

    #[test]
    fn growth_sequence_on_real_series() {
        let ctx = ctx();
        let omega = preset("golden", ctx).unwrap();
        let series = expand(&omega, 10, ctx).unwrap();
        let rho = analytic_descriptor(ctx, "1e-7", NormConvention::Sqrt).unwrap();
        let seq = growth_sequence(&series, &rho, 10).unwrap();
        assert_eq!(seq.entries().len(), 10);
        assert_eq!(seq.k_min(), 1);
        assert_eq!(seq.k_max(), 10);
        // a_1 = log ||u_1|| = log(1/(8 pi sin^2(pi w)) / sqrt(2)), roughly -3.43
        let a1 = seq.value_at(1).unwrap().to_f64();
        assert!(a1 < -3.0 && a1 > -4.0, "a_1 = {a1}");

        // sup descriptor exercises the grid path
        let sup = growth_sequence(&series, &NormDescriptor::Sup, 5).unwrap();
        assert_eq!(sup.entries().len(), 5);
    }

    #[test]
    fn zero_term_reports_undefined_log() {
        let ctx = ctx();
        let omega = preset("golden", ctx).unwrap();
        let series = expand(&omega, 5, ctx).unwrap();
        let mut terms = series.terms().to_vec();
        terms[3] = TrigPoly::zero(ctx, 0);
        let doctored = LindstedtSeries::from_parts(
            series.omega().clone(),
            terms,
            series.drift_series().to_vec(),
            (0..=5).map(|k| series.sin_comp(k).clone()).collect(),
            (0..=5).map(|k| series.cos_comp(k).clone()).collect(),
        )
        .unwrap();
        let desc = NormDescriptor::Sobolev { r: 1 };
        assert!(matches!(
            growth_sequence(&doctored, &desc, 5),
            Err(Error::UndefinedLog { order: 3 })
        ));
    }

    #[test]
    fn constant_norm_series_decays_like_one_over_k() {
        let ctx = ctx();
        let omega = preset("golden", ctx).unwrap();
        let real = expand(&omega, 6, ctx).unwrap();
        // u_k = sin(2 pi theta) for every k >= 1: constant norm 1/sqrt(2)
        let mut terms = vec![TrigPoly::zero(ctx, 0)];
        for _ in 1..=6 {
            terms.push(TrigPoly::sin_wave(ctx));
        }
        let fake = LindstedtSeries::from_parts(
            real.omega().clone(),
            terms,
            real.drift_series().to_vec(),
            (0..=6).map(|k| real.sin_comp(k).clone()).collect(),
            (0..=6).map(|k| real.cos_comp(k).clone()).collect(),
        )
        .unwrap();
        let rho0 = NormDescriptor::Analytic {
            rho: ctx.new_float(),
            convention: NormConvention::Sqrt,
        };
        let seq = growth_sequence(&fake, &rho0, 6).unwrap();
        let tol = ctx.tol(45);
        let mut half_log2 = Float::with_val(ctx.prec(), 2u32).ln();
        half_log2 /= 2u32;
        for (k, v) in seq.entries() {
            // (1/k) log(1/sqrt 2) = -log(2)/(2k)
            let mut expect = Float::with_val(ctx.prec(), -&half_log2);
            expect /= *k as u32;
            assert!(close(v, &expect, &tol), "k = {k}");
        }
    }
}
