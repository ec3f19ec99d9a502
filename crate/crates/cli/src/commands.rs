//! The four subcommands: expand (compute or resume an archive), analyze
//! (growth sequences and fits), validate (residual checks with a gate exit
//! code), and centralize (oscillation analysis of the growth sequence).

use std::path::{Path, PathBuf};
use std::time::Instant;

use lindstedt_core::arith::{preset, preset_names, Frequency};
use lindstedt_core::gevrey::{
    analytic_descriptor, centralize_x, centralize_z, factorial_scaled, fit_log, fit_log_shifted,
    growth_sequence, oscillation_report, FitResult, GrowthSequence, NormDescriptor,
    OscillationOutcome,
};
use lindstedt_core::lindstedt::Expansion;
use lindstedt_core::store::{
    append_order, export_cross_csv, export_fits_csv, export_residual_csv, export_sequence_csv,
    export_sweep_csv, load_archive, read_manifest, read_sequence_csv, Manifest,
};
use lindstedt_core::validate::{
    cohomology_report, cross_compare, degree_check, invariance_sweep, order_slope,
};
use lindstedt_core::{Context, Error, Grid, NormConvention, Result};
use rug::Float;

use crate::config::Resolved;

fn parse_float(ctx: Context, s: &str) -> Result<Float> {
    let parsed = Float::parse(s)
        .map_err(|e| Error::Config(format!("cannot parse number {s:?}: {e}")))?;
    Ok(Float::with_val(ctx.prec(), parsed))
}

/// A preset name like `golden`, or a raw descriptor `p,q,d,r` meaning
/// (p + q sqrt(d)) / r.
fn parse_omega(desc: &str, ctx: Context) -> Result<Frequency> {
    if let Ok(f) = preset(desc, ctx) {
        return Ok(f);
    }
    let parts: Vec<&str> = desc.split(',').map(str::trim).collect();
    if parts.len() == 4 {
        let nums: std::result::Result<Vec<i64>, _> =
            parts.iter().map(|t| t.parse::<i64>()).collect();
        if let Ok(v) = nums {
            return Frequency::new(v[0], v[1], v[2], v[3], ctx);
        }
    }
    Err(Error::Config(format!(
        "unknown frequency {desc:?}: use one of {} or a descriptor p,q,d,r",
        preset_names().join(", ")
    )))
}

/// Directory name for a run: the preset name (or sanitized descriptor) plus
/// the digit count, so runs at different precision never collide.
fn archive_dir_name(desc: &str, digits: u32) -> String {
    let safe: String = desc
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    format!("{safe}-d{digits}")
}

fn out_root(r: &Resolved) -> PathBuf {
    r.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

/// Where analysis products for an archive go unless --out overrides it.
fn analysis_dir(archive: &Path, out: &Option<PathBuf>) -> PathBuf {
    out.clone().unwrap_or_else(|| archive.join("analysis"))
}

fn archive_context(m: &Manifest) -> Result<Context> {
    Context::new(m.decimal_digits, m.grid_exponent)
}

pub fn cmd_expand(r: &Resolved, resume: bool) -> Result<()> {
    let ctx = Context::new(r.digits, r.grid_exp)?;
    let omega = parse_omega(&r.omega, ctx)?;
    let dir = out_root(r).join(archive_dir_name(&r.omega, r.digits));

    let manifest_exists = dir.join("manifest.txt").exists();
    let mut exp = if manifest_exists {
        if !resume {
            return Err(Error::Config(format!(
                "{} already holds an archive; pass --resume to continue it",
                dir.display()
            )));
        }
        let m = read_manifest(&dir)?;
        if m.decimal_digits != r.digits {
            return Err(Error::Config(format!(
                "archive was computed at {} digits, requested {}; resuming must keep the precision",
                m.decimal_digits, r.digits
            )));
        }
        if m.descriptor != omega.descriptor() {
            return Err(Error::Config(format!(
                "archive frequency {:?} differs from requested {:?}",
                m.descriptor,
                omega.descriptor()
            )));
        }
        let series = load_archive(&dir, ctx)?;
        eprintln!(
            "resuming {} from order {} toward {}",
            dir.display(),
            series.n_max(),
            r.orders
        );
        Expansion::from_series(series)?
    } else {
        let exp = Expansion::new(omega);
        append_order(exp.series(), 0, &dir, None)?;
        eprintln!(
            "expanding {} at {} digits toward order {} in {}",
            r.omega,
            r.digits,
            r.orders,
            dir.display()
        );
        exp
    };

    let start = Instant::now();
    while exp.order() < r.orders {
        let step_start = Instant::now();
        let k = exp.step()?;
        append_order(exp.series(), k, &dir, None)?;
        eprintln!(
            "[{:9.2}s] order {k}/{} done in {:.3}s",
            start.elapsed().as_secs_f64(),
            r.orders,
            step_start.elapsed().as_secs_f64()
        );
    }
    println!(
        "archive {} complete at order {}",
        dir.display(),
        exp.order()
    );
    Ok(())
}

fn write_fit_table(fits: &[(String, FitResult)]) {
    println!(
        "{:<40} {:>12} {:>12} {:>12} {:>12}",
        "norm", "R", "sigma", "b", "e_inf"
    );
    for (label, fit) in fits {
        println!(
            "{label:<40} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            fit.r.to_f64(),
            fit.sigma.to_f64(),
            fit.b.to_f64(),
            fit.e_inf.to_f64()
        );
    }
}

pub fn cmd_analyze(
    r: &Resolved,
    archive: &Path,
    factorial: bool,
    shifted: bool,
) -> Result<()> {
    let m = read_manifest(archive)?;
    let ctx = archive_context(&m)?;
    let series = load_archive(archive, ctx)?;
    let n_max = series.n_max();
    let convention = NormConvention::parse(&r.norm_convention)?;
    let dir = analysis_dir(archive, &r.out);
    std::fs::create_dir_all(&dir)?;

    let mut fits: Vec<(String, FitResult)> = Vec::new();
    let mut measure = |desc: NormDescriptor, stem: String| -> Result<()> {
        let seq = growth_sequence(&series, &desc, n_max)?;
        export_sequence_csv(&seq, &dir.join(format!("growth_{stem}.csv")), 20)?;
        fits.push((desc.to_string(), fit_log(&seq, r.fit_lo, r.fit_hi)?));
        if shifted {
            fits.push((
                format!("{desc} shifted"),
                fit_log_shifted(&seq, r.fit_lo, r.fit_hi)?,
            ));
        }
        if factorial {
            let fseq = factorial_scaled(&series, &desc, n_max)?;
            export_sequence_csv(&fseq, &dir.join(format!("growth_factorial_{stem}.csv")), 20)?;
            fits.push((
                format!("{desc} factorial-scaled"),
                fit_log(&fseq, r.fit_lo, r.fit_hi)?,
            ));
        }
        Ok(())
    };

    for rho in &r.rho {
        let desc = analytic_descriptor(ctx, rho, convention)?;
        measure(desc, format!("analytic_{rho}"))?;
    }
    for s in &r.sobolev_r {
        measure(NormDescriptor::Sobolev { r: *s }, format!("sobolev_r{s}"))?;
    }

    export_fits_csv(&fits, &dir.join("fits.csv"), 20)?;
    println!(
        "analyzed {} orders of {} over window [{}, {}]",
        n_max,
        series.omega().label(),
        r.fit_lo,
        r.fit_hi
    );
    write_fit_table(&fits);
    println!("tables written to {}", dir.display());
    Ok(())
}

pub fn cmd_validate(
    r: &Resolved,
    archive: &Path,
    cross: Option<&Path>,
    n_lo: Option<usize>,
    n_hi: Option<usize>,
) -> Result<bool> {
    let m = read_manifest(archive)?;
    let ctx = archive_context(&m)?;
    let series = load_archive(archive, ctx)?;
    let grid = Grid::new(ctx);
    let dir = analysis_dir(archive, &r.out);
    std::fs::create_dir_all(&dir)?;
    let mut all_ok = true;
    let mut gate = |name: &str, ok: bool, detail: String| {
        println!("{}: {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        all_ok &= ok;
    };

    // per-order conjugacy residuals, normalized by the forcing size
    let report = cohomology_report(&series, series.n_max(), &grid)?;
    export_residual_csv(&report, &dir.join("cohomology_residuals.csv"))?;
    let bound = -(m.decimal_digits as f64) / 2.0;
    let worst = report.worst_scaled_log10();
    gate(
        "order-by-order residuals",
        worst <= bound,
        format!("worst 1e{worst:.1}, allowed 1e{bound:.1}"),
    );

    // truncated-sum residuals and their order scaling
    let n_lo = n_lo.unwrap_or(1);
    let n_hi = n_hi.unwrap_or_else(|| series.n_max().min(35));
    for eps_str in &r.eps {
        let eps = parse_float(ctx, eps_str)?;
        let name = format!("invariance sweep eps={eps_str}");
        let stem = format!("invariance_eps_{eps_str}.csv");
        match order_slope(&series, &eps, n_lo, n_hi, &grid) {
            Ok(sweep) => {
                export_sweep_csv(&sweep, &dir.join(stem))?;
                let slope = sweep.slope.unwrap();
                let expect = eps.to_f64().log10();
                // corruption pins the residual, flattening the slope far
                // below the decay the truncation order dictates
                let ok = slope.abs() >= 0.5 * expect.abs();
                gate(
                    &name,
                    ok,
                    format!("slope {slope:.3} per order, log10(eps) = {expect:.3}"),
                );
            }
            Err(Error::FloorSaturated { order }) => {
                let sweep = invariance_sweep(&series, &eps, n_lo, n_hi, &grid)?;
                export_sweep_csv(&sweep, &dir.join(stem))?;
                gate(
                    &name,
                    true,
                    format!(
                        "residuals reach the rounding floor at order {order}; \
                         slope not measurable, nothing to flag"
                    ),
                );
            }
            Err(e) => return Err(e),
        }
    }

    // support of the coefficients, with a padded re-derivation
    let audit = degree_check(&series, 16, &ctx.tol(10))?;
    gate(
        "degree audit",
        audit.all_ok,
        format!(
            "pad 16, worst spurious mode {}",
            audit
                .entries
                .iter()
                .map(|e| {
                    if e.max_spurious.is_zero() {
                        f64::NEG_INFINITY
                    } else {
                        e.max_spurious.clone().log10().to_f64()
                    }
                })
                .fold(f64::NEG_INFINITY, f64::max)
        ),
    );

    // agreement with an independent run, typically at another precision
    if let Some(other_dir) = cross {
        let other_manifest = read_manifest(other_dir)?;
        let other = load_archive(other_dir, archive_context(&other_manifest)?)?;
        let entries = cross_compare(&series, &other)?;
        export_cross_csv(&entries, &dir.join("cross_compare.csv"))?;
        let d_min = m.decimal_digits.min(other_manifest.decimal_digits) as f64;
        let allowed = -(d_min - 50.0);
        let worst = entries
            .iter()
            .skip(1)
            .map(|e| {
                if e.sup_rel.is_zero() {
                    f64::NEG_INFINITY
                } else {
                    e.sup_rel.clone().log10().to_f64()
                }
            })
            .fold(f64::NEG_INFINITY, f64::max);
        gate(
            "cross-run agreement",
            worst <= allowed,
            format!("worst relative 1e{worst:.1}, allowed 1e{allowed:.1}"),
        );
    }

    println!("reports written to {}", dir.display());
    Ok(all_ok)
}

pub fn cmd_centralize(
    r: &Resolved,
    archive: Option<&Path>,
    from_csv: Option<&Path>,
) -> Result<()> {
    let (seq, dir): (GrowthSequence, PathBuf) = match (archive, from_csv) {
        (Some(dir), None) => {
            let m = read_manifest(dir)?;
            let ctx = archive_context(&m)?;
            let series = load_archive(dir, ctx)?;
            let convention = NormConvention::parse(&r.norm_convention)?;
            let rho = r.rho.first().ok_or_else(|| {
                Error::Config("centralize needs a --rho for the analytic norm".into())
            })?;
            let desc = analytic_descriptor(ctx, rho, convention)?;
            (
                growth_sequence(&series, &desc, series.n_max())?,
                analysis_dir(dir, &r.out),
            )
        }
        (None, Some(path)) => {
            let ctx = Context::new(r.digits.min(600), 8)?;
            let dir = r
                .out
                .clone()
                .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
            (read_sequence_csv(path, ctx.prec())?, dir)
        }
        _ => {
            return Err(Error::Config(
                "centralize takes exactly one of --archive or --from-csv".into(),
            ))
        }
    };

    std::fs::create_dir_all(&dir)?;
    let x = centralize_x(&seq)?;
    let z = centralize_z(&seq)?;
    export_sequence_csv(&x, &dir.join("centralized_x.csv"), 20)?;
    export_sequence_csv(&z, &dir.join("centralized_z.csv"), 20)?;

    let outcome = oscillation_report(&seq, r.fit_lo, r.fit_hi)?;
    let mut out = String::from("dominant_period,peak,runner_up,beta,beta_residual,envelope_points\n");
    match &outcome {
        OscillationOutcome::Periodic(rep) => {
            out.push_str(&format!(
                "{},{:.6e},{:.6e},{:.6},{:.6},{}\n",
                rep.dominant_period,
                rep.peak_magnitude.to_f64(),
                rep.runner_up_magnitude.to_f64(),
                rep.beta.to_f64(),
                rep.beta_residual.to_f64(),
                rep.envelope_points
            ));
            println!(
                "window [{}, {}]: dominant period {} (margin {:.2}x), envelope decay exponent {:.3}",
                r.fit_lo,
                r.fit_hi,
                rep.dominant_period,
                rep.peak_magnitude.to_f64() / rep.runner_up_magnitude.to_f64(),
                rep.beta.to_f64()
            );
        }
        OscillationOutcome::None { max_abs } => {
            out.push_str(&format!("none,{:.6e},,,,\n", max_abs.to_f64()));
            println!(
                "window [{}, {}]: centralized sequence is flat at rounding level, no oscillation",
                r.fit_lo, r.fit_hi
            );
        }
    }
    std::fs::write(dir.join("oscillation.csv"), out)?;
    println!("centralizations written to {}", dir.display());
    Ok(())
}
