//! Arbitrary-precision arithmetic configuration, quadratic-irrational
//! frequencies, and the small divisors they generate.
//!
//! Everything downstream (Fourier algebra, the order-by-order solver, norms)
//! receives its precision from a [`Context`] created here. Frequencies are
//! stored as exact integer descriptors and re-materialized per context, so no
//! decimal literal ever truncates them.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Assign, Float, Integer};

use crate::error::{Error, Result};

/// Binary digits per decimal digit, rounded up when deriving precision.
const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Working-precision configuration: decimal digits, the derived binary
/// precision, and the exponent of the evaluation grid (2^exp points).
///
/// Rounding is fixed to nearest; identical inputs under an identical context
/// produce bit-identical results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Context {
    decimal_digits: u32,
    prec: u32,
    grid_exponent: u32,
}

impl Context {
    /// Creates a context with `decimal_digits` of working precision and a
    /// `2^grid_exponent`-point evaluation grid.
    ///
    /// Requires `decimal_digits >= 30` and `8 <= grid_exponent <= 16`.
    pub fn new(decimal_digits: u32, grid_exponent: u32) -> Result<Context> {
        if decimal_digits < 30 {
            return Err(Error::Config(format!(
                "decimal_digits = {decimal_digits} is below the minimum of 30"
            )));
        }
        if !(8..=16).contains(&grid_exponent) {
            return Err(Error::Config(format!(
                "grid_exponent = {grid_exponent} is outside the supported range 8..=16"
            )));
        }
        let prec = (decimal_digits as f64 * LOG2_10).ceil() as u32;
        Ok(Context {
            decimal_digits,
            prec,
            grid_exponent,
        })
    }

    pub fn decimal_digits(&self) -> u32 {
        self.decimal_digits
    }

    /// Binary precision carried by every scalar produced under this context:
    /// ceil(decimal_digits * log2(10)).
    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn grid_exponent(&self) -> u32 {
        self.grid_exponent
    }

    /// Number of points in the evaluation grid.
    pub fn grid_points(&self) -> usize {
        1usize << self.grid_exponent
    }

    /// Fresh zero at working precision.
    pub fn new_float(&self) -> Float {
        Float::new(self.prec)
    }

    pub fn float_from_f64(&self, v: f64) -> Float {
        Float::with_val(self.prec, v)
    }

    pub fn float_from_u32(&self, v: u32) -> Float {
        Float::with_val(self.prec, v)
    }

    pub fn float_from_i64(&self, v: i64) -> Float {
        Float::with_val(self.prec, v)
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.prec, Constant::Pi)
    }

    pub fn two_pi(&self) -> Float {
        let mut p = self.pi();
        p *= 2u32;
        p
    }

    /// 10^(-(decimal_digits - margin)), the usual tolerance shape for
    /// "working precision up to a safety margin" assertions.
    pub fn tol(&self, margin: u32) -> Float {
        let e = -((self.decimal_digits.saturating_sub(margin)) as i32);
        Float::with_val(self.prec, 10u32).pow(e)
    }
}

/// Complex scalar at context precision, stored as two real parts.
///
/// Only the handful of operations the coefficient algebra needs are provided;
/// hot loops in the convolution kernel work on the parts directly.
#[derive(Debug, Clone, PartialEq)]
pub struct Complex {
    pub re: Float,
    pub im: Float,
}

impl Complex {
    pub fn zero(prec: u32) -> Complex {
        Complex {
            re: Float::new(prec),
            im: Float::new(prec),
        }
    }

    pub fn from_parts(re: Float, im: Float) -> Complex {
        Complex { re, im }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    /// |z|^2 = re^2 + im^2.
    pub fn abs_sqr(&self) -> Float {
        let prec = self.prec();
        let mut s = Float::with_val(prec, &self.re * &self.re);
        s += Float::with_val(prec, &self.im * &self.im);
        s
    }

    /// |z|.
    pub fn abs(&self) -> Float {
        self.abs_sqr().sqrt()
    }

    pub fn conj(&self) -> Complex {
        Complex {
            re: self.re.clone(),
            im: Float::with_val(self.im.prec(), -&self.im),
        }
    }
}

impl fmt::Display for Complex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} + {}i)", self.re, self.im)
    }
}

/// A quadratic irrational frequency omega = frac((p + q*sqrt(d))/r), kept as
/// the exact integer descriptor plus its materialized value at context
/// precision.
///
/// The integer part subtracted during reduction is recorded so the descriptor
/// round-trips; the value always lies in (0, 1).
#[derive(Debug, Clone)]
pub struct Frequency {
    p: i64,
    q: i64,
    d: i64,
    r: i64,
    reduction: i64,
    value: Float,
    label: String,
    ctx: Context,
}

impl Frequency {
    /// Materializes omega = frac((p + q*sqrt(d))/r) at context precision.
    ///
    /// Rejects r = 0, q = 0 (rational), d < 2, and perfect-square d
    /// (rational). The square root and division run with guard bits before
    /// the final rounding to context precision.
    pub fn new(p: i64, q: i64, d: i64, r: i64, ctx: Context) -> Result<Frequency> {
        if r == 0 {
            return Err(Error::ZeroDivisor("frequency descriptor has r = 0".into()));
        }
        if q == 0 {
            return Err(Error::RationalFrequency(format!(
                "descriptor ({p}, {q}, {d}, {r}) has q = 0, so omega = {p}/{r} is rational"
            )));
        }
        if d < 2 {
            return Err(Error::RationalFrequency(format!(
                "descriptor requires d >= 2, got d = {d}"
            )));
        }
        if Integer::from(d).is_perfect_square() {
            return Err(Error::RationalFrequency(format!(
                "d = {d} is a perfect square, so omega is rational"
            )));
        }

        let guard_prec = ctx.prec() + 64;
        let mut raw = Float::with_val(guard_prec, d);
        raw.sqrt_mut();
        raw *= q;
        raw += p;
        raw /= r;

        let floor = Float::with_val(guard_prec, raw.floor_ref());
        let reduction = floor
            .to_integer()
            .and_then(|i| i.to_i64())
            .ok_or_else(|| Error::Config("frequency integer part out of i64 range".into()))?;
        raw -= &floor;
        let value = Float::with_val(ctx.prec(), &raw);

        let label = descriptor_label(p, q, d, r);
        Ok(Frequency {
            p,
            q,
            d,
            r,
            reduction,
            value,
            label,
            ctx,
        })
    }

    /// The exact integer descriptor (p, q, d, r).
    pub fn descriptor(&self) -> (i64, i64, i64, i64) {
        (self.p, self.q, self.d, self.r)
    }

    /// Integer part removed when reducing (p + q*sqrt(d))/r into (0, 1).
    pub fn reduction(&self) -> i64 {
        self.reduction
    }

    /// omega itself, at context precision, in (0, 1).
    pub fn value(&self) -> &Float {
        &self.value
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub fn ctx(&self) -> Context {
        self.ctx
    }

    /// Re-materializes the same descriptor under another context.
    pub fn with_context(&self, ctx: Context) -> Result<Frequency> {
        let mut f = Frequency::new(self.p, self.q, self.d, self.r, ctx)?;
        f.label = self.label.clone();
        Ok(f)
    }

    /// True when both values describe the same number (same descriptor after
    /// normalizing the sign of r).
    pub fn same_number(&self, other: &Frequency) -> bool {
        let norm = |(p, q, d, r): (i64, i64, i64, i64)| {
            if r < 0 {
                (-p, -q, d, -r)
            } else {
                (p, q, d, r)
            }
        };
        norm(self.descriptor()) == norm(other.descriptor())
    }
}

fn descriptor_label(p: i64, q: i64, d: i64, r: i64) -> String {
    let root = if q == 1 {
        format!("sqrt({d})")
    } else {
        format!("{q}*sqrt({d})")
    };
    let numer = match p.cmp(&0) {
        Ordering::Equal => root,
        Ordering::Greater => format!("({p}+{root})"),
        Ordering::Less => format!("({root}{p})"),
    };
    if r == 1 {
        numer
    } else {
        format!("{numer}/{r}")
    }
}

/// The frequencies studied throughout, as named presets: token, descriptor,
/// and display label.
pub const PRESETS: &[(&str, (i64, i64, i64, i64), &str)] = &[
    ("golden", (-1, 1, 5, 2), "(sqrt(5)-1)/2"),
    ("sqrt3m1o2", (-1, 1, 3, 2), "(sqrt(3)-1)/2"),
    ("sqrt2", (0, 1, 2, 1), "sqrt(2) mod 1"),
    ("sqrt3", (0, 1, 3, 1), "sqrt(3) mod 1"),
    ("sqrt7m1o2", (-1, 1, 7, 2), "(sqrt(7)-1)/2"),
    ("sqrt13m1o6", (-1, 1, 13, 6), "(sqrt(13)-1)/6"),
    ("sqrt5m1o6", (-1, 1, 5, 6), "(sqrt(5)-1)/6"),
];

/// Materializes a named preset frequency.
pub fn preset(name: &str, ctx: Context) -> Result<Frequency> {
    for (token, (p, q, d, r), label) in PRESETS {
        if *token == name {
            let mut f = Frequency::new(*p, *q, *d, *r, ctx)?;
            f.set_label(*label);
            return Ok(f);
        }
    }
    Err(Error::Config(format!(
        "unknown frequency preset {name:?}; available: {}",
        preset_names().join(", ")
    )))
}

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(t, _, _)| *t).collect()
}

/// Fourier multiplier of the discrete second difference at frequency omega:
/// m(l) = 2cos(2*pi*l*omega) - 2 = -4sin^2(pi*l*omega).
///
/// Strictly inside (-4, 0) for irrational omega; l = 0 is rejected because
/// the operator annihilates constants.
pub fn small_divisor(omega: &Frequency, ell: i64) -> Result<Float> {
    if ell == 0 {
        return Err(Error::ZeroDivisor(
            "small divisor at mode 0; the zero mode is handled by drift selection".into(),
        ));
    }
    let prec = omega.ctx.prec();
    let mut angle = Float::with_val(prec, omega.value() * ell);
    angle *= omega.ctx.pi();
    let s = angle.sin();
    let mut m = Float::with_val(prec, &s * &s);
    m *= -4i32;
    Ok(m)
}

/// Outcome of a Diophantine scan: whether |e^{2*pi*i*l*omega} - 1| stays
/// above nu * l^(-tau) for 1 <= l <= l_max, and the worst offender.
#[derive(Debug, Clone)]
pub struct DiophantineReport {
    pub holds: bool,
    /// Mode minimizing |e^{2*pi*i*l*omega} - 1| * l^tau.
    pub worst_ell: i64,
    /// That minimum value; the largest nu for which the bound can hold.
    pub worst_ratio: Float,
}

/// Scans 1 <= l <= l_max for the mode minimizing
/// |e^{2*pi*i*l*omega} - 1| * l^tau and returns (l, minimum).
///
/// The minimum is exactly the best constant nu for the class at this tau and
/// range, which is how a default nu is chosen when none is given.
pub fn diophantine_scan(omega: &Frequency, tau: &Float, l_max: i64) -> Result<(i64, Float)> {
    if l_max < 1 {
        return Err(Error::Config(format!("l_max = {l_max} must be >= 1")));
    }
    let prec = omega.ctx.prec();
    let pi = omega.ctx.pi();
    let mut best_ell = 1i64;
    let mut best = Float::new(prec);
    let mut first = true;
    let mut angle = Float::new(prec);
    for ell in 1..=l_max {
        // |e^{2 pi i l w} - 1| = 2|sin(pi l w)|
        angle.assign(omega.value() * ell);
        angle *= &pi;
        let mut dist = angle.clone().sin().abs();
        dist *= 2u32;
        let weight = Float::with_val(prec, ell).pow(tau);
        dist *= weight;
        if first || dist < best {
            best.assign(&dist);
            best_ell = ell;
            first = false;
        }
    }
    Ok((best_ell, best))
}

/// Checks the Diophantine lower bound |e^{2*pi*i*l*omega} - 1| >= nu * l^(-tau)
/// over 1 <= l <= l_max; requires nu > 0.
pub fn diophantine_check(
    omega: &Frequency,
    nu: &Float,
    tau: &Float,
    l_max: i64,
) -> Result<DiophantineReport> {
    if !(nu.cmp0() == Some(Ordering::Greater)) {
        return Err(Error::Config("diophantine constant nu must be > 0".into()));
    }
    let (worst_ell, worst_ratio) = diophantine_scan(omega, tau, l_max)?;
    Ok(DiophantineReport {
        holds: worst_ratio >= *nu,
        worst_ell,
        worst_ratio,
    })
}

/// Decomposes a float into (sign/mantissa, exponent) for bit-level equality
/// checks; zero maps to (0, 0).
pub fn float_bits(f: &Float) -> (Integer, i32) {
    f.to_integer_exp().unwrap_or((Integer::new(), 0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx40() -> Context {
        Context::new(40, 8).unwrap()
    }

    #[test]
    fn context_precision_formula() {
        for (digits, bits) in [(30u32, 100u32), (40, 133), (120, 399), (300, 997), (600, 1994)] {
            let ctx = Context::new(digits, 12).unwrap();
            assert_eq!(ctx.prec(), bits, "digits = {digits}");
            assert_eq!(ctx.new_float().prec(), bits);
        }
    }

    #[test]
    fn context_rejects_out_of_range() {
        assert!(matches!(Context::new(10, 13), Err(Error::Config(_))));
        assert!(matches!(Context::new(29, 13), Err(Error::Config(_))));
        assert!(matches!(Context::new(600, 7), Err(Error::Config(_))));
        assert!(matches!(Context::new(600, 17), Err(Error::Config(_))));
        assert!(Context::new(30, 8).is_ok());
        assert!(Context::new(600, 16).is_ok());
    }

    /// Integer Newton iteration for floor(sqrt(n * 4^scale)), used as a
    /// square-root oracle that never touches the float library's sqrt.
    fn newton_sqrt_digits(d: i64, decimal_digits: u32) -> Integer {
        let scaled = Integer::from(d) * Integer::from(100u32).pow(decimal_digits);
        let mut x = Integer::from(1) << ((scaled.significant_bits() / 2) + 1);
        loop {
            let next = (Integer::from(&scaled / &x) + &x) >> 1;
            if next >= x {
                return x;
            }
            x = next;
        }
    }

    /// Reference value of frac((p + q*sqrt(d))/r) as a Float built from the
    /// integer oracle.
    fn oracle_value(p: i64, q: i64, d: i64, r: i64, digits: u32, prec: u32) -> Float {
        let scale = Integer::from(10u32).pow(digits);
        let root = newton_sqrt_digits(d, digits);
        // numerator = p*scale + q*root, then divide by r*scale
        let numer = Integer::from(p) * &scale + Integer::from(q) * &root;
        let mut v = Float::with_val(prec + 64, &numer);
        v /= Float::with_val(prec + 64, &scale);
        v /= r;
        let floor = v.clone().floor();
        v -= floor;
        Float::with_val(prec, v)
    }

    #[test]
    fn preset_values_match_integer_newton_oracle() {
        let ctx = Context::new(50, 8).unwrap();
        for (token, (p, q, d, r), _) in PRESETS {
            let f = preset(token, ctx).unwrap();
            let oracle = oracle_value(*p, *q, *d, *r, 60, ctx.prec());
            let diff = Float::with_val(ctx.prec(), f.value() - &oracle).abs();
            assert!(
                diff < ctx.tol(3),
                "{token}: value {} vs oracle {}",
                f.value(),
                oracle
            );
        }
    }

    #[test]
    fn known_leading_digits() {
        let ctx = ctx40();
        let cases = [
            ("golden", "0.6180339887498948"),
            ("sqrt2", "0.4142135623730950"),
            ("sqrt3", "0.7320508075688772"),
            ("sqrt13m1o6", "0.4342585459106648"),
        ];
        for (token, digits) in cases {
            let f = preset(token, ctx).unwrap();
            let expect = Float::with_val(ctx.prec(), Float::parse(digits).unwrap());
            let diff = Float::with_val(ctx.prec(), f.value() - &expect).abs();
            let bound = Float::with_val(ctx.prec(), Float::parse("1e-15").unwrap());
            assert!(diff < bound, "{token}: got {}, want {digits}...", f.value());
        }
    }

    #[test]
    fn descriptor_round_trip_and_reduction() {
        let ctx = ctx40();
        let f = Frequency::new(0, 1, 2, 1, ctx).unwrap();
        assert_eq!(f.descriptor(), (0, 1, 2, 1));
        assert_eq!(f.reduction(), 1); // sqrt(2) = 1.414... loses its integer part

        let g = Frequency::new(-9, 1, 5, 2, ctx).unwrap();
        assert_eq!(g.reduction(), -4); // (-9+sqrt5)/2 = -3.38... -> frac 0.618...
        let golden = preset("golden", ctx).unwrap();
        let diff = Float::with_val(ctx.prec(), g.value() - golden.value()).abs();
        assert!(diff < ctx.tol(3));

        let h = f.with_context(Context::new(80, 9).unwrap()).unwrap();
        assert_eq!(h.descriptor(), f.descriptor());
        assert_eq!(h.value().prec(), Context::new(80, 9).unwrap().prec());
    }

    #[test]
    fn rational_descriptors_rejected() {
        let ctx = ctx40();
        assert!(matches!(
            Frequency::new(1, 1, 4, 2, ctx),
            Err(Error::RationalFrequency(_))
        ));
        assert!(matches!(
            Frequency::new(1, 0, 5, 2, ctx),
            Err(Error::RationalFrequency(_))
        ));
        assert!(matches!(
            Frequency::new(1, 1, 5, 0, ctx),
            Err(Error::ZeroDivisor(_))
        ));
        assert!(matches!(
            Frequency::new(1, 1, 1, 2, ctx),
            Err(Error::RationalFrequency(_))
        ));
    }

    #[test]
    fn precision_monotonicity() {
        for (token, _, _) in PRESETS {
            let lo = preset(token, Context::new(60, 8).unwrap()).unwrap();
            let hi = preset(token, Context::new(160, 8).unwrap()).unwrap();
            let diff = Float::with_val(hi.value().prec(), lo.value() - hi.value()).abs();
            // |value at d digits - value at d+100| < 10^-(d-2)
            assert!(diff < Context::new(60, 8).unwrap().tol(2), "{token}");
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let ctx = Context::new(90, 10).unwrap();
        let a = preset("sqrt7m1o2", ctx).unwrap();
        let b = preset("sqrt7m1o2", ctx).unwrap();
        assert_eq!(float_bits(a.value()), float_bits(b.value()));
    }

    /// Taylor-series sine with its own term recursion; independent of the
    /// float library's sin.
    fn taylor_sin(x: &Float, prec: u32) -> Float {
        let work = prec + 64;
        let x = Float::with_val(work, x);
        let xx = Float::with_val(work, &x * &x);
        let mut term = x.clone();
        let mut sum = x;
        let mut n = 1u32;
        loop {
            term *= &xx;
            term /= (2 * n) * (2 * n + 1);
            term = -term;
            if term.clone().abs() < Float::with_val(work, Float::parse("1e-80").unwrap()) {
                break;
            }
            sum += &term;
            n += 1;
        }
        Float::with_val(prec, sum)
    }

    #[test]
    fn small_divisor_matches_taylor_oracle() {
        let ctx = ctx40();
        let omega = preset("golden", ctx).unwrap();
        for ell in [1i64, 2, 3, 5, 13] {
            let m = small_divisor(&omega, ell).unwrap();
            let mut angle = Float::with_val(ctx.prec(), omega.value() * ell);
            angle *= ctx.pi();
            // reduce into [0, 2 pi) before the series
            let two_pi = ctx.two_pi();
            let k = Float::with_val(ctx.prec(), &angle / &two_pi).floor();
            angle -= Float::with_val(ctx.prec(), &k * &two_pi);
            let s = taylor_sin(&angle, ctx.prec());
            let mut expect = Float::with_val(ctx.prec(), &s * &s);
            expect *= -4i32;
            let diff = Float::with_val(ctx.prec(), &m - &expect).abs();
            assert!(diff < ctx.tol(5), "ell = {ell}: {m} vs {expect}");
        }
    }

    #[test]
    fn small_divisor_symmetry_range_and_cos_route() {
        let ctx = Context::new(120, 8).unwrap();
        for (token, _, _) in PRESETS {
            let omega = preset(token, ctx).unwrap();
            for ell in [1i64, 2, 7, 55, 144, -3, -89] {
                let m = small_divisor(&omega, ell).unwrap();
                let m_neg = small_divisor(&omega, -ell).unwrap();
                assert_eq!(float_bits(&m), float_bits(&m_neg), "{token} evenness");
                assert!(m < 0u32 && m > -4i32, "{token} range: {m}");

                // 2cos(2 pi l w) - 2 route
                let mut angle = Float::with_val(ctx.prec(), omega.value() * ell);
                angle *= ctx.two_pi();
                let mut via_cos = angle.cos();
                via_cos *= 2u32;
                via_cos -= 2u32;
                let rel = Float::with_val(ctx.prec(), &m - &via_cos).abs() / m.clone().abs();
                assert!(rel < ctx.tol(5), "{token} cos route at ell = {ell}");
            }
        }
    }

    #[test]
    fn small_divisor_rejects_zero_mode() {
        let omega = preset("golden", ctx40()).unwrap();
        assert!(matches!(
            small_divisor(&omega, 0),
            Err(Error::ZeroDivisor(_))
        ));
    }

    #[test]
    fn diophantine_golden_worst_offenders_are_fibonacci() {
        let ctx = ctx40();
        let omega = preset("golden", ctx).unwrap();
        let tau = ctx.float_from_u32(1);
        // running minima of 2|sin(pi l w)| l^tau must occur at Fibonacci l
        let fib = [1i64, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987];
        let mut minima = Vec::new();
        let pi = ctx.pi();
        let mut best: Option<Float> = None;
        for ell in 1..=1000i64 {
            let mut angle = Float::with_val(ctx.prec(), omega.value() * ell);
            angle *= &pi;
            let mut v = angle.sin().abs();
            v *= 2u32;
            v *= Float::with_val(ctx.prec(), ell).pow(&tau);
            if best.as_ref().map_or(true, |b| v < *b) {
                minima.push(ell);
                best = Some(v);
            }
        }
        for ell in &minima {
            assert!(fib.contains(ell), "running minimum at non-Fibonacci l = {ell}");
        }

        // the scan's worst offender agrees with the brute loop above
        let (worst, ratio) = diophantine_scan(&omega, &tau, 1000).unwrap();
        assert_eq!(worst, *minima.last().unwrap());
        assert_eq!(&ratio, best.as_ref().unwrap());

        // with nu = observed minimum the bound holds; nudged up, it fails
        let report = diophantine_check(&omega, &ratio, &tau, 1000).unwrap();
        assert!(report.holds);
        let mut bigger = ratio.clone();
        bigger *= 2u32;
        let report = diophantine_check(&omega, &bigger, &tau, 1000).unwrap();
        assert!(!report.holds);
    }

    #[test]
    fn diophantine_rejects_bad_nu() {
        let ctx = ctx40();
        let omega = preset("golden", ctx).unwrap();
        let tau = ctx.float_from_u32(1);
        let zero = ctx.new_float();
        assert!(matches!(
            diophantine_check(&omega, &zero, &tau, 100),
            Err(Error::Config(_))
        ));
    }
}
