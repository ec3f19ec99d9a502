//! Self-validation of a computed series: per-order conjugacy-equation
//! residuals, truncated-sum residuals of the full invariance equation with
//! their order-scaling law, cross-precision comparison, and the degree audit.
//!
//! Everything here is an a-posteriori check: it consumes a finished
//! [`LindstedtSeries`] and measures how well it actually satisfies the
//! equations it was built from, on a uniform evaluation grid.

use rug::Float;

use crate::arith::Context;
use crate::error::{Error, Result};
use crate::lindstedt::{dissipation, forcing_at, LindstedtSeries};
use crate::trigpoly::{sup_of, Grid, TrigPoly};

/// log10 of a nonnegative Float, as f64; exact zeros map to -inf.
fn log10_f64(v: &Float) -> f64 {
    if v.is_zero() {
        f64::NEG_INFINITY
    } else {
        v.clone().log10().to_f64()
    }
}

/// Rounding floor 10^-(d-20) for usability flags, as log10.
fn floor_log10(ctx: Context) -> f64 {
    -((ctx.decimal_digits() as f64) - 20.0)
}

/// The order-n conjugacy equation, assembled in coefficient space and
/// measured in the sup norm:
///
/// ```text
/// u_n(.+w) - 2 u_n + u_n(.-w) + D_n + S_n + w [n=3] - c_n
/// ```
///
/// with D_n the dissipation pickup from three orders below. Order 0 is
/// trivially zero.
pub fn cohomology_residual(
    series: &LindstedtSeries,
    n: usize,
    grid: &Grid,
) -> Result<Float> {
    let ctx = series.ctx();
    if n > series.n_max() {
        return Err(Error::DegenerateRange(format!(
            "order {n} beyond the computed range 0..={}",
            series.n_max()
        )));
    }
    if n == 0 {
        return Ok(ctx.new_float());
    }
    let omega = series.omega().value();
    let u = series.term(n);
    let mut resid = u.shift(omega).add(&u.shift(&(-omega.clone())))?;
    resid = resid.sub(&u.scale_u32(2))?;
    if n >= 3 {
        let prev = series.term(n - 3);
        resid = resid.add(prev)?;
        resid = resid.sub(&prev.shift(&(-omega.clone())))?;
    }
    resid = resid.add(&series.forcing(n)?)?;
    let mut constant = ctx.new_float();
    constant -= series.drift(n);
    if n == 3 {
        constant += omega;
    }
    resid = resid.add(&TrigPoly::constant(ctx, &constant))?;
    resid.sup_norm(grid)
}

#[derive(Debug, Clone)]
pub struct ResidualEntry {
    pub n: usize,
    /// log10 of the sup-norm residual; -inf when it is exactly zero.
    pub log10: f64,
    /// log10 of the normalizer max(1, sup |S_n|).
    pub log10_scale: f64,
}

impl ResidualEntry {
    /// Scaled residual exponent log10(resid / scale).
    pub fn scaled_log10(&self) -> f64 {
        self.log10 - self.log10_scale
    }
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub source: String,
    pub decimal_digits: u32,
    pub grid_points: usize,
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    /// Largest scaled residual exponent over all orders.
    pub fn worst_scaled_log10(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.scaled_log10())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Conjugacy residuals for every order 1..=n_max, each normalized by
/// max(1, sup |S_n|).
pub fn cohomology_report(
    series: &LindstedtSeries,
    n_max: usize,
    grid: &Grid,
) -> Result<ResidualReport> {
    if n_max < 1 || n_max > series.n_max() {
        return Err(Error::DegenerateRange(format!(
            "order range 1..={n_max} not contained in 1..={}",
            series.n_max()
        )));
    }
    let ctx = series.ctx();
    let one = ctx.float_from_u32(1);
    let mut entries = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let resid = cohomology_residual(series, n, grid)?;
        let mut scale = series.forcing(n)?.sup_norm(grid)?;
        if scale < one {
            scale = one.clone();
        }
        entries.push(ResidualEntry {
            n,
            log10: log10_f64(&resid),
            log10_scale: log10_f64(&scale),
        });
    }
    Ok(ResidualReport {
        source: format!(
            "{} d={}",
            series.omega().label(),
            ctx.decimal_digits()
        ),
        decimal_digits: ctx.decimal_digits(),
        grid_points: grid.len(),
        entries,
    })
}

/// Truncated sum u(theta) = sum_{k=1..n} eps^k u_k as a single polynomial,
/// built by a Horner pass over the coefficient vectors.
fn truncated_sum(series: &LindstedtSeries, eps: &Float, n: usize) -> Result<TrigPoly> {
    let ctx = series.ctx();
    if n == 0 {
        return Ok(TrigPoly::zero(ctx, 0));
    }
    let mut acc = series.term(n).clone();
    for k in (1..n).rev() {
        acc = acc.scale(eps).add(series.term(k))?;
    }
    Ok(acc.scale(eps))
}

/// Drift value c(eps) = sum_{k=0..n} eps^k c_k by Horner.
fn drift_sum(series: &LindstedtSeries, eps: &Float, n: usize) -> Float {
    let prec = series.ctx().prec();
    let mut acc = Float::with_val(prec, series.drift(n));
    for k in (0..n).rev() {
        acc *= eps;
        acc += series.drift(k);
    }
    acc
}

/// Sup-norm residual of the full invariance equation for the order-n
/// truncation at perturbation strength eps:
///
/// ```text
/// u(t+w) - (1+b) u(t) + b u(t-w) + (1-b) w - c(eps) + eps V'(t + u(t))
/// ```
///
/// evaluated pointwise on the grid, with b the eps-dependent dissipation.
pub fn invariance_residual(
    series: &LindstedtSeries,
    eps: &Float,
    n_trunc: usize,
    grid: &Grid,
) -> Result<Float> {
    let ctx = series.ctx();
    if n_trunc > series.n_max() {
        return Err(Error::DegenerateRange(format!(
            "truncation order {n_trunc} beyond the computed range 0..={}",
            series.n_max()
        )));
    }
    let omega = series.omega().value();
    let u = truncated_sum(series, eps, n_trunc)?;
    let c = drift_sum(series, eps, n_trunc);
    let b = dissipation(ctx, eps);

    let here = u.eval_grid(grid)?;
    let up = u.shift(omega).eval_grid(grid)?;
    let down = u.shift(&(-omega.clone())).eval_grid(grid)?;

    let prec = ctx.prec();
    let mut one_plus_b = Float::with_val(prec, 1u32);
    one_plus_b += &b;
    // (1-b) w - c, the theta-independent part
    let mut constant = Float::with_val(prec, 1u32);
    constant -= &b;
    constant *= omega;
    constant -= &c;

    let mut sup = Float::new(prec);
    for j in 0..grid.len() {
        let mut r = Float::with_val(prec, &up[j]);
        r -= Float::with_val(prec, &one_plus_b * &here[j]);
        r += Float::with_val(prec, &b * &down[j]);
        r += &constant;
        let mut arg = grid.theta(j);
        arg += &here[j];
        let mut kick = forcing_at(ctx, &arg);
        kick *= eps;
        r += kick;
        r.abs_mut();
        if r > sup {
            sup = r;
        }
    }
    Ok(sup)
}

#[derive(Debug, Clone)]
pub struct SweepEntry {
    pub n_trunc: usize,
    /// log10 of the sup residual; -inf when exactly zero.
    pub log10: f64,
    /// False when the value sits at or below the rounding floor 10^-(d-20),
    /// where it no longer reflects the truncation error.
    pub usable: bool,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub eps: Float,
    pub entries: Vec<SweepEntry>,
    /// Least-squares slope of log10 residual against truncation order, set
    /// when requested and every entry is usable.
    pub slope: Option<f64>,
    pub floor_log10: f64,
}

/// Invariance residuals for truncation orders n_lo..=n_hi at fixed eps.
pub fn invariance_sweep(
    series: &LindstedtSeries,
    eps: &Float,
    n_lo: usize,
    n_hi: usize,
    grid: &Grid,
) -> Result<SweepReport> {
    if n_lo > n_hi || n_hi > series.n_max() {
        return Err(Error::DegenerateRange(format!(
            "sweep range [{n_lo}, {n_hi}] not contained in 0..={}",
            series.n_max()
        )));
    }
    let floor = floor_log10(series.ctx());
    let mut entries = Vec::with_capacity(n_hi - n_lo + 1);
    for n in n_lo..=n_hi {
        let resid = invariance_residual(series, eps, n, grid)?;
        let log10 = log10_f64(&resid);
        entries.push(SweepEntry {
            n_trunc: n,
            log10,
            usable: log10 > floor,
        });
    }
    Ok(SweepReport {
        eps: eps.clone(),
        entries,
        slope: None,
        floor_log10: floor,
    })
}

/// Fits log10 residual ~ a + slope * N over a sweep whose entries are all
/// above the rounding floor; the slope should track log10(eps).
pub fn order_slope(
    series: &LindstedtSeries,
    eps: &Float,
    n_lo: usize,
    n_hi: usize,
    grid: &Grid,
) -> Result<SweepReport> {
    if n_hi - n_lo + 1 < 3 {
        return Err(Error::DegenerateRange(format!(
            "slope needs at least 3 truncation orders, got [{n_lo}, {n_hi}]"
        )));
    }
    let mut report = invariance_sweep(series, eps, n_lo, n_hi, grid)?;
    if let Some(bad) = report.entries.iter().find(|e| !e.usable) {
        return Err(Error::FloorSaturated { order: bad.n_trunc });
    }
    let n = report.entries.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for e in &report.entries {
        let x = e.n_trunc as f64;
        sx += x;
        sy += e.log10;
        sxx += x * x;
        sxy += x * e.log10;
    }
    report.slope = Some((n * sxy - sx * sy) / (n * sxx - sx * sx));
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct CrossEntry {
    pub n: usize,
    /// Sup of |u_n^a - u_n^b| over the common grid.
    pub sup_abs: Float,
    /// That sup relative to sup |u_n^a|; zero when both are zero.
    pub sup_rel: Float,
    /// |c_n^a - c_n^b|.
    pub drift_abs: Float,
}

/// Order-by-order comparison of two runs of the same frequency at possibly
/// different precisions and grid sizes. Both are re-rounded to the higher of
/// the two precisions and evaluated on the coarser grid.
pub fn cross_compare(a: &LindstedtSeries, b: &LindstedtSeries) -> Result<Vec<CrossEntry>> {
    if !a.omega().same_number(b.omega()) {
        return Err(Error::Mismatch(format!(
            "different rotation numbers: {} vs {}",
            a.omega().label(),
            b.omega().label()
        )));
    }
    let digits = a.ctx().decimal_digits().max(b.ctx().decimal_digits());
    let grid_exp = a.ctx().grid_exponent().min(b.ctx().grid_exponent());
    let ctx = Context::new(digits, grid_exp)?;
    let grid = Grid::new(ctx);
    let prec = ctx.prec();

    let n_common = a.n_max().min(b.n_max());
    let mut out = Vec::with_capacity(n_common + 1);
    for n in 0..=n_common {
        let ua = a.term(n).with_context(ctx);
        let ub = b.term(n).with_context(ctx);
        let diff = ua.sub(&ub)?;
        let sup_abs = diff.sup_norm(&grid)?;
        let denom = ua.sup_norm(&grid)?;
        let sup_rel = if sup_abs.is_zero() {
            Float::new(prec)
        } else {
            Float::with_val(prec, &sup_abs / &denom)
        };
        let mut drift_abs = Float::with_val(prec, a.drift(n));
        drift_abs -= Float::with_val(prec, b.drift(n));
        drift_abs.abs_mut();
        out.push(CrossEntry {
            n,
            sup_abs,
            sup_rel,
            drift_abs,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct DegreeEntry {
    pub n: usize,
    pub degree: usize,
    /// Largest modulus found above mode n when the order is re-derived in
    /// arrays padded beyond its true degree.
    pub max_spurious: Float,
}

#[derive(Debug, Clone)]
pub struct DegreeReport {
    pub pad: usize,
    pub tol: Float,
    pub entries: Vec<DegreeEntry>,
    pub all_ok: bool,
}

/// Verifies the support property: u_n carries no modes above n. The stored
/// degree bound is structural; the audit re-derives each order inside arrays
/// padded by `pad` extra modes and measures everything above mode n, which
/// exposes any spillover a lossy pipeline would create (the exact convolution
/// here leaves those modes identically zero).
pub fn degree_check(
    series: &LindstedtSeries,
    pad: usize,
    tol: &Float,
) -> Result<DegreeReport> {
    let ctx = series.ctx();
    let omega = series.omega();
    let neg_one = ctx.float_from_i64(-1);
    let mut entries = Vec::with_capacity(series.n_max());
    let mut all_ok = true;
    for n in 1..=series.n_max() {
        let u = series.term(n);
        let degree = u.degree();
        if degree > n {
            return Err(Error::Mismatch(format!(
                "order {n} stores degree {degree} > {n}"
            )));
        }
        // re-derive u_n from its padded right-hand side c_n - S_n - D_n
        // (minus the order-3 frequency pickup) and scan the high modes
        let forcing = series.forcing(n)?;
        let extra = (n + pad).saturating_sub(forcing.degree());
        let mut rhs = forcing.pad(extra).scale(&neg_one);
        if n >= 3 {
            let prev = series.term(n - 3);
            rhs = rhs.sub(prev)?;
            rhs = rhs.add(&prev.shift(&(-omega.value().clone())))?;
        }
        let mut c0 = Float::with_val(ctx.prec(), series.drift(n));
        if n == 3 {
            c0 -= omega.value();
        }
        rhs = rhs.add(&TrigPoly::constant(ctx, &c0))?;
        let solved = crate::lindstedt::solve_cohomology(&rhs, omega)?;
        let mut max_spurious = ctx.new_float();
        for l in (n + 1)..=solved.degree() {
            if let Some(c) = solved.coeff(l) {
                let m = c.abs();
                if m > max_spurious {
                    max_spurious = m;
                }
            }
        }
        if max_spurious >= *tol {
            all_ok = false;
        }
        entries.push(DegreeEntry {
            n,
            degree,
            max_spurious,
        });
    }
    Ok(DegreeReport {
        pad,
        tol: tol.clone(),
        entries,
        all_ok,
    })
}

/// Export helper: largest usable residual exponent in a sweep.
pub fn sweep_max_log10(report: &SweepReport) -> f64 {
    report
        .entries
        .iter()
        .filter(|e| e.usable)
        .map(|e| e.log10)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Sup of several polynomials on a grid, used by callers sizing tolerance
/// scales.
pub fn sup_all(polys: &[TrigPoly], grid: &Grid) -> Result<Float> {
    let mut values = Vec::new();
    for p in polys {
        values.push(p.sup_norm(grid)?);
    }
    Ok(sup_of(&values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{preset, Complex};
    use crate::error::Error;
    use crate::lindstedt::expand;

    fn series_at(digits: u32, grid_exp: u32, n: usize) -> (LindstedtSeries, Grid) {
        let ctx = Context::new(digits, grid_exp).unwrap();
        let omega = preset("golden", ctx).unwrap();
        let s = expand(&omega, n, ctx).unwrap();
        let g = Grid::new(ctx);
        (s, g)
    }

    /// Replaces one term of a series, rebuilding it through the shape check.
    fn with_term(series: &LindstedtSeries, k: usize, new_term: TrigPoly) -> LindstedtSeries {
        let mut terms = series.terms().to_vec();
        terms[k] = new_term;
        let n = series.n_max();
        LindstedtSeries::from_parts(
            series.omega().clone(),
            terms,
            series.drift_series().to_vec(),
            (0..=n).map(|j| series.sin_comp(j).clone()).collect(),
            (0..=n).map(|j| series.cos_comp(j).clone()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn cohomology_residuals_sit_at_rounding_level() {
        let (s, g) = series_at(60, 8, 12);
        let report = cohomology_report(&s, 12, &g).unwrap();
        assert_eq!(report.entries.len(), 12);
        // every order solves its equation to half the working digits, with
        // lots of margin
        assert!(
            report.worst_scaled_log10() <= -30.0,
            "worst = {}",
            report.worst_scaled_log10()
        );
        // and residuals really are tiny absolute numbers, not just scaled
        for e in &report.entries {
            assert!(e.log10 < -40.0, "order {} at 1e{:.1}", e.n, e.log10);
        }
    }

    #[test]
    fn perturbed_term_is_visible_in_the_residual() {
        let (s, g) = series_at(60, 8, 5);
        // add 1e-10 sin(2 pi theta) to u_1
        let bump = TrigPoly::sin_wave(s.ctx()).scale(&s.ctx().tol(50));
        let u1 = s.term(1).add(&bump).unwrap();
        let doctored = with_term(&s, 1, u1);
        let r = cohomology_residual(&doctored, 1, &g).unwrap();
        let r = r.to_f64();
        assert!(
            (1e-11..1e-8).contains(&r),
            "residual {r} escaped the forward-error window"
        );
    }

    #[test]
    fn invariance_residual_vanishes_at_zero_strength() {
        let (s, g) = series_at(40, 8, 6);
        let eps = s.ctx().new_float();
        let r = invariance_residual(&s, &eps, 6, &g).unwrap();
        assert!(r.is_zero(), "r = {r}");
    }

    #[test]
    fn first_order_truncation_error_is_quadratic() {
        let (s, g) = series_at(60, 8, 5);
        let ctx = s.ctx();
        let r1 = invariance_residual(&s, &ctx.float_from_f64(1e-3), 1, &g).unwrap();
        let r2 = invariance_residual(&s, &ctx.float_from_f64(5e-4), 1, &g).unwrap();
        let ratio = Float::with_val(ctx.prec(), &r1 / &r2).to_f64();
        assert!(
            (3.7..4.3).contains(&ratio),
            "halving the strength scaled the residual by {ratio}, want about 4"
        );
    }

    #[test]
    fn residual_slope_tracks_log_eps() {
        // the slope of log10(residual) vs truncation order equals log10(eps)
        // plus a coefficient-growth bias that cancels between two eps values
        let ctx = Context::new(120, 8).unwrap();
        let omega = preset("golden", ctx).unwrap();
        let s = expand(&omega, 14, ctx).unwrap();
        let g = Grid::new(ctx);
        let fat = order_slope(&s, &ctx.float_from_f64(1e-1), 3, 12, &g).unwrap();
        let thin = order_slope(&s, &ctx.float_from_f64(1e-2), 3, 12, &g).unwrap();
        let diff = fat.slope.unwrap() - thin.slope.unwrap();
        assert!(
            (diff - 1.0).abs() < 0.05,
            "slope gap {diff}, want 1.0 (got {} and {})",
            fat.slope.unwrap(),
            thin.slope.unwrap()
        );
    }

    #[test]
    fn saturated_sweep_is_refused_a_slope() {
        let (s, g) = series_at(40, 8, 12);
        // at d=40 the floor is 1e-20; eps=1e-3 reaches it near order 6
        let eps = s.ctx().float_from_f64(1e-3);
        let err = order_slope(&s, &eps, 1, 10, &g).unwrap_err();
        match err {
            Error::FloorSaturated { order } => assert!((5..=8).contains(&order), "order {order}"),
            other => panic!("wrong error {other:?}"),
        }
        // the raw sweep still reports, flagging the saturated tail
        let sweep = invariance_sweep(&s, &eps, 1, 10, &g).unwrap();
        assert!(sweep.entries.iter().any(|e| !e.usable));
        assert!(sweep.entries[0].usable);
    }

    #[test]
    fn zeroed_term_breaks_the_slope() {
        let (s, g) = series_at(60, 8, 10);
        let eps = s.ctx().float_from_f64(1e-1);
        let healthy = order_slope(&s, &eps, 2, 8, &g).unwrap().slope.unwrap();
        let broken_series = with_term(&s, 2, TrigPoly::zero(s.ctx(), 0));
        let broken = order_slope(&broken_series, &eps, 2, 8, &g)
            .unwrap()
            .slope
            .unwrap();
        assert!(healthy < -0.8, "healthy slope {healthy}");
        assert!(
            broken > -0.4,
            "a missing second order should pin the residual at eps^2, slope {broken}"
        );
    }

    #[test]
    fn cross_compare_is_exact_on_identical_runs() {
        let (a, _) = series_at(40, 8, 8);
        let (b, _) = series_at(40, 8, 8);
        for e in cross_compare(&a, &b).unwrap() {
            assert!(e.sup_abs.is_zero(), "order {} differs", e.n);
            assert!(e.sup_rel.is_zero());
            assert!(e.drift_abs.is_zero());
        }
    }

    #[test]
    fn cross_compare_across_precisions_is_tiny() {
        let ctx_a = Context::new(40, 8).unwrap();
        let ctx_b = Context::new(80, 9).unwrap();
        let a = expand(&preset("golden", ctx_a).unwrap(), 8, ctx_a).unwrap();
        let b = expand(&preset("golden", ctx_b).unwrap(), 8, ctx_b).unwrap();
        let entries = cross_compare(&a, &b).unwrap();
        assert_eq!(entries.len(), 9);
        let mut worst = f64::NEG_INFINITY;
        for e in &entries[1..] {
            assert!(!e.sup_abs.is_zero(), "order {} suspiciously exact", e.n);
            worst = worst.max(log10_f64(&e.sup_rel));
        }
        assert!(worst < -30.0, "worst relative 1e{worst:.1}");
    }

    #[test]
    fn cross_compare_needs_matching_frequencies() {
        let ctx = Context::new(40, 8).unwrap();
        let a = expand(&preset("golden", ctx).unwrap(), 4, ctx).unwrap();
        let b = expand(&preset("sqrt2", ctx).unwrap(), 4, ctx).unwrap();
        assert!(matches!(cross_compare(&a, &b), Err(Error::Mismatch(_))));
    }

    #[test]
    fn degree_audit_finds_no_spillover() {
        let (s, _) = series_at(40, 8, 10);
        let tol = s.ctx().tol(10);
        let report = degree_check(&s, 16, &tol).unwrap();
        assert!(report.all_ok);
        assert_eq!(report.entries.len(), 10);
        for e in &report.entries {
            assert!(e.degree <= e.n);
            assert!(
                e.max_spurious.is_zero(),
                "order {} leaked 1e{:.1} above its degree",
                e.n,
                log10_f64(&e.max_spurious)
            );
        }
    }

    #[test]
    fn perturbed_high_mode_fails_the_audit() {
        let (s, _) = series_at(40, 8, 6);
        let ctx = s.ctx();
        // plant a coefficient at mode 5 of u_2 (legal shape would be degree 2)
        let mut coeffs: Vec<Complex> = s.term(2).coeffs().to_vec();
        let prec = ctx.prec();
        while coeffs.len() < 6 {
            coeffs.push(Complex::zero(prec));
        }
        coeffs[5].re += ctx.tol(20);
        let planted = TrigPoly::from_coeffs(ctx, coeffs).unwrap();
        let mut terms = s.terms().to_vec();
        terms[2] = planted; // degree 5 > 2: from_parts must refuse it
        let rebuilt = LindstedtSeries::from_parts(
            s.omega().clone(),
            terms,
            s.drift_series().to_vec(),
            (0..=6).map(|j| s.sin_comp(j).clone()).collect(),
            (0..=6).map(|j| s.cos_comp(j).clone()).collect(),
        );
        assert!(matches!(rebuilt, Err(Error::Corrupted(_))));
    }

    #[test]
    fn residual_report_rejects_bad_ranges() {
        let (s, g) = series_at(40, 8, 4);
        assert!(matches!(
            cohomology_report(&s, 9, &g),
            Err(Error::DegenerateRange(_))
        ));
        assert!(matches!(
            invariance_residual(&s, &s.ctx().float_from_f64(0.1), 9, &g),
            Err(Error::DegenerateRange(_))
        ));
    }
}
