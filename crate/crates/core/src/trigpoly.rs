//! Trigonometric polynomials: real 1-periodic functions held as exact Fourier
//! coefficient vectors with convolution products, shifts, norms, and grid
//! evaluation.
//!
//! Storage is exact-degree, never a fixed grid: products are exact
//! convolutions, so "u_k has degree k" is structural and the evaluation grid
//! only enters for sup norms. A polynomial keeps modes l = 0..=degree; the
//! negative modes are implied by realness (hat(f)(-l) = conj(hat(f)(l))).

use rug::ops::PowAssign;
use rug::{Assign, Float};

use crate::arith::{Complex, Context};
use crate::error::{Error, Result};

/// Whether the analytic norm is the weighted coefficient sum as printed
/// (`Literal`) or its square root (`Sqrt`, the default everywhere).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NormConvention {
    #[default]
    Sqrt,
    Literal,
}

impl NormConvention {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormConvention::Sqrt => "sqrt",
            NormConvention::Literal => "literal",
        }
    }

    pub fn parse(s: &str) -> Result<NormConvention> {
        match s {
            "sqrt" => Ok(NormConvention::Sqrt),
            "literal" => Ok(NormConvention::Literal),
            other => Err(Error::Config(format!(
                "unknown norm convention {other:?} (expected \"sqrt\" or \"literal\")"
            ))),
        }
    }
}

/// Real trigonometric polynomial f(theta) = hat(f)(0)
/// + sum_{l=1..degree} (hat(f)(l) e^{2 pi i l theta} + conjugate term).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPoly {
    ctx: Context,
    coeffs: Vec<Complex>,
}

impl TrigPoly {
    /// Zero polynomial with the given allocated degree.
    pub fn zero(ctx: Context, degree: usize) -> TrigPoly {
        let coeffs = (0..=degree).map(|_| Complex::zero(ctx.prec())).collect();
        TrigPoly { ctx, coeffs }
    }

    /// Constant polynomial (degree 0).
    pub fn constant(ctx: Context, value: &Float) -> TrigPoly {
        let mut c = Complex::zero(ctx.prec());
        c.re.assign(value);
        TrigPoly {
            ctx,
            coeffs: vec![c],
        }
    }

    /// sin(2 pi theta): hat(f)(1) = -i/2.
    pub fn sin_wave(ctx: Context) -> TrigPoly {
        let mut c = Complex::zero(ctx.prec());
        c.im.assign(-0.5f64);
        TrigPoly {
            ctx,
            coeffs: vec![Complex::zero(ctx.prec()), c],
        }
    }

    /// cos(2 pi theta): hat(f)(1) = 1/2.
    pub fn cos_wave(ctx: Context) -> TrigPoly {
        let mut c = Complex::zero(ctx.prec());
        c.re.assign(0.5f64);
        TrigPoly {
            ctx,
            coeffs: vec![Complex::zero(ctx.prec()), c],
        }
    }

    /// Builds from explicit coefficients for modes 0..=degree.
    ///
    /// Rejects an empty vector, a nonzero imaginary part at mode 0 (the
    /// polynomial would not be real), and coefficients whose precision does
    /// not match the context.
    pub fn from_coeffs(ctx: Context, coeffs: Vec<Complex>) -> Result<TrigPoly> {
        if coeffs.is_empty() {
            return Err(Error::Config(
                "a trig polynomial needs at least the mode-0 coefficient".into(),
            ));
        }
        if !coeffs[0].im.is_zero() {
            return Err(Error::Config(
                "mode-0 coefficient has a nonzero imaginary part; the polynomial is not real"
                    .into(),
            ));
        }
        for (l, c) in coeffs.iter().enumerate() {
            if c.re.prec() != ctx.prec() || c.im.prec() != ctx.prec() {
                return Err(Error::Mismatch(format!(
                    "coefficient {l} carries precision {}/{} but the context demands {}",
                    c.re.prec(),
                    c.im.prec(),
                    ctx.prec()
                )));
            }
        }
        Ok(TrigPoly { ctx, coeffs })
    }

    pub(crate) fn from_coeffs_unchecked(ctx: Context, coeffs: Vec<Complex>) -> TrigPoly {
        debug_assert!(!coeffs.is_empty());
        debug_assert!(coeffs[0].im.is_zero());
        TrigPoly { ctx, coeffs }
    }

    pub fn ctx(&self) -> Context {
        self.ctx
    }

    /// Allocated degree; leading coefficients may be zero.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of mode l, or None beyond the allocated degree.
    pub fn coeff(&self, l: usize) -> Option<&Complex> {
        self.coeffs.get(l)
    }

    pub(crate) fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    fn check_ctx(&self, other: &TrigPoly) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::Mismatch(format!(
                "operands built under different contexts ({} vs {} digits)",
                self.ctx.decimal_digits(),
                other.ctx.decimal_digits()
            )));
        }
        Ok(())
    }

    /// Re-rounds every coefficient to the precision of `ctx`. Exact when the
    /// target precision is at least the current one.
    pub fn with_context(&self, ctx: Context) -> TrigPoly {
        let prec = ctx.prec();
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                Complex::from_parts(
                    Float::with_val(prec, &c.re),
                    Float::with_val(prec, &c.im),
                )
            })
            .collect();
        TrigPoly::from_coeffs_unchecked(ctx, coeffs)
    }

    /// Coefficient-wise sum; result degree is the larger of the two.
    pub fn add(&self, other: &TrigPoly) -> Result<TrigPoly> {
        self.check_ctx(other)?;
        let (long, short) = if self.coeffs.len() >= other.coeffs.len() {
            (self, other)
        } else {
            (other, self)
        };
        let mut coeffs = long.coeffs.clone();
        for (l, c) in short.coeffs.iter().enumerate() {
            coeffs[l].re += &c.re;
            coeffs[l].im += &c.im;
        }
        Ok(TrigPoly {
            ctx: self.ctx,
            coeffs,
        })
    }

    /// Coefficient-wise difference self - other.
    pub fn sub(&self, other: &TrigPoly) -> Result<TrigPoly> {
        self.check_ctx(other)?;
        let degree = self.degree().max(other.degree());
        let prec = self.ctx.prec();
        let mut coeffs = Vec::with_capacity(degree + 1);
        for l in 0..=degree {
            let mut c = Complex::zero(prec);
            if let Some(a) = self.coeffs.get(l) {
                c.re += &a.re;
                c.im += &a.im;
            }
            if let Some(b) = other.coeffs.get(l) {
                c.re -= &b.re;
                c.im -= &b.im;
            }
            coeffs.push(c);
        }
        Ok(TrigPoly {
            ctx: self.ctx,
            coeffs,
        })
    }

    /// Scalar multiple a*f.
    pub fn scale(&self, a: &Float) -> TrigPoly {
        let mut coeffs = self.coeffs.clone();
        for c in &mut coeffs {
            c.re *= a;
            c.im *= a;
        }
        TrigPoly {
            ctx: self.ctx,
            coeffs,
        }
    }

    pub fn scale_u32(&self, a: u32) -> TrigPoly {
        let mut coeffs = self.coeffs.clone();
        for c in &mut coeffs {
            c.re *= a;
            c.im *= a;
        }
        TrigPoly {
            ctx: self.ctx,
            coeffs,
        }
    }

    /// Exact convolution product; degree adds.
    ///
    /// The double loop over input modes runs in fixed ascending order, so the
    /// result is bit-reproducible.
    pub fn mul(&self, other: &TrigPoly) -> Result<TrigPoly> {
        self.check_ctx(other)?;
        let prec = self.ctx.prec();
        let out_degree = self.degree() + other.degree();
        let mut acc: Vec<Complex> = (0..=out_degree).map(|_| Complex::zero(prec)).collect();
        mul_add_into(self, other, &mut acc);
        Ok(TrigPoly {
            ctx: self.ctx,
            coeffs: acc,
        })
    }

    /// f(theta + delta): multiplies mode l by e^{2 pi i l delta}.
    pub fn shift(&self, delta: &Float) -> TrigPoly {
        let prec = self.ctx.prec();
        let table = phase_table(self.ctx, delta, self.degree());
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (l, c) in self.coeffs.iter().enumerate() {
            let ph = &table[l];
            let mut re = Float::with_val(prec, &c.re * &ph.re);
            re -= Float::with_val(prec, &c.im * &ph.im);
            let mut im = Float::with_val(prec, &c.re * &ph.im);
            im += Float::with_val(prec, &c.im * &ph.re);
            coeffs.push(Complex::from_parts(re, im));
        }
        TrigPoly {
            ctx: self.ctx,
            coeffs,
        }
    }

    /// Like [`shift`](Self::shift) with a caller-precomputed phase table
    /// (entries e^{2 pi i l delta} for l = 0..=degree at least).
    pub(crate) fn shift_with_table(&self, table: &[Complex]) -> TrigPoly {
        debug_assert!(table.len() > self.degree());
        let prec = self.ctx.prec();
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (l, c) in self.coeffs.iter().enumerate() {
            let ph = &table[l];
            let mut re = Float::with_val(prec, &c.re * &ph.re);
            re -= Float::with_val(prec, &c.im * &ph.im);
            let mut im = Float::with_val(prec, &c.re * &ph.im);
            im += Float::with_val(prec, &c.im * &ph.re);
            coeffs.push(Complex::from_parts(re, im));
        }
        TrigPoly {
            ctx: self.ctx,
            coeffs,
        }
    }

    /// Zero mode hat(f)(0), the average of f.
    pub fn mean(&self) -> Float {
        self.coeffs[0].re.clone()
    }

    /// Copy padded with `extra` zero coefficients beyond the current degree
    /// (for degree audits on oversized arrays).
    pub fn pad(&self, extra: usize) -> TrigPoly {
        let prec = self.ctx.prec();
        let mut coeffs = self.coeffs.clone();
        coeffs.extend((0..extra).map(|_| Complex::zero(prec)));
        TrigPoly {
            ctx: self.ctx,
            coeffs,
        }
    }

    /// Analytic norm with weight e^{2 pi |l| rho}, summed over both signs of
    /// l in ascending |l|; `Sqrt` takes the square root of the sum, `Literal`
    /// returns the sum as printed. Requires rho >= 0.
    pub fn analytic_norm(&self, rho: &Float, convention: NormConvention) -> Result<Float> {
        if rho.is_sign_negative() && !rho.is_zero() {
            return Err(Error::Config(format!(
                "analytic norm requires rho >= 0, got {rho}"
            )));
        }
        let prec = self.ctx.prec();
        let two_pi = self.ctx.two_pi();
        let mut sum = Float::with_val(prec, &self.coeffs[0].re * &self.coeffs[0].re);
        let mut w = Float::new(prec);
        for (l, c) in self.coeffs.iter().enumerate().skip(1) {
            w.assign(&two_pi * rho);
            w *= l as u32;
            w.exp_mut();
            let mut term = c.abs_sqr();
            term *= &w;
            term *= 2u32; // modes +l and -l contribute equally
            sum += &term;
        }
        Ok(match convention {
            NormConvention::Sqrt => sum.sqrt(),
            NormConvention::Literal => sum,
        })
    }

    /// Sobolev norm sqrt(sum over l of (2 pi l)^{2r} |hat(f)(l)|^2), both
    /// signs of l; at r = 0 the l = 0 weight is 1 and the norm coincides with
    /// the analytic norm at rho = 0 (sqrt convention).
    pub fn sobolev_norm(&self, r: u32) -> Float {
        let prec = self.ctx.prec();
        let two_pi = self.ctx.two_pi();
        let mut sum = Float::new(prec);
        if r == 0 {
            sum += Float::with_val(prec, &self.coeffs[0].re * &self.coeffs[0].re);
        }
        let mut w = Float::new(prec);
        for (l, c) in self.coeffs.iter().enumerate().skip(1) {
            w.assign(&two_pi * (l as u32));
            if r > 0 {
                w.pow_assign(2 * r);
            } else {
                w.assign(1u32);
            }
            let mut term = c.abs_sqr();
            term *= &w;
            term *= 2u32;
            sum += &term;
        }
        sum.sqrt()
    }

    /// Sum of |hat(f)(l)| over both signs of l: an upper bound for the sup
    /// norm.
    pub fn coeff_l1(&self) -> Float {
        let mut sum = self.coeffs[0].re.clone().abs();
        for c in self.coeffs.iter().skip(1) {
            let mut a = c.abs();
            a *= 2u32;
            sum += &a;
        }
        sum
    }

    /// Values f(j / 2^grid_exponent) for j = 0..2^grid_exponent.
    ///
    /// Requires the grid to be strictly finer than twice the degree, so a
    /// polynomial is never sampled below its Nyquist rate.
    pub fn eval_grid(&self, grid: &Grid) -> Result<Vec<Float>> {
        if self.ctx != grid.ctx {
            return Err(Error::Mismatch(
                "polynomial and grid built under different contexts".into(),
            ));
        }
        let m = grid.len();
        if 2 * self.degree() >= m {
            return Err(Error::Aliasing {
                degree: self.degree(),
                grid: m,
            });
        }
        let prec = self.ctx.prec();
        let mut out = Vec::with_capacity(m);
        let mut t = Float::new(prec);
        for j in 0..m {
            let mut acc = self.coeffs[0].re.clone();
            for (l, c) in self.coeffs.iter().enumerate().skip(1) {
                let idx = (l * j) % m;
                // 2*(Re c * cos - Im c * sin) is the +l/-l pair at theta_j
                t.assign(&c.re * &grid.cos[idx]);
                acc += &t;
                acc += &t;
                t.assign(&c.im * &grid.sin[idx]);
                acc -= &t;
                acc -= &t;
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// max_j |f(theta_j)| over the evaluation grid.
    pub fn sup_norm(&self, grid: &Grid) -> Result<Float> {
        let values = self.eval_grid(grid)?;
        Ok(sup_of(&values))
    }
}

/// Largest |v| in a slice of grid values (zero for an empty slice).
pub fn sup_of(values: &[Float]) -> Float {
    match values.split_first() {
        None => Float::new(53),
        Some((first, rest)) => {
            let mut best = first.clone().abs();
            for v in rest {
                let a = v.clone().abs();
                if a > best {
                    best = a;
                }
            }
            best
        }
    }
}

/// Phase factors e^{2 pi i l delta} for l = 0..=degree, each angle computed
/// directly (not by repeated multiplication) so tables are identical no
/// matter how they are grown.
pub(crate) fn phase_table(ctx: Context, delta: &Float, degree: usize) -> Vec<Complex> {
    let prec = ctx.prec();
    let two_pi = ctx.two_pi();
    let mut table = Vec::with_capacity(degree + 1);
    let mut one = Complex::zero(prec);
    one.re.assign(1u32);
    table.push(one);
    for l in 1..=degree {
        let mut angle = Float::with_val(prec, delta * (l as u32));
        angle *= &two_pi;
        let (sin, cos) = angle.sin_cos(Float::new(prec));
        table.push(Complex::from_parts(cos, sin));
    }
    table
}

/// Adds the convolution f*g into `acc`, which must already span the product
/// degree.
///
/// Each ordered pair of stored modes (l, m) contributes to the sum mode
/// l + m and, through the implied negative modes, to |l - m|; realness then
/// fills in everything below zero. Both loops ascend, so the accumulation
/// order (and hence every rounding) is fixed.
pub(crate) fn mul_add_into(f: &TrigPoly, g: &TrigPoly, acc: &mut Vec<Complex>) {
    debug_assert_eq!(f.ctx, g.ctx);
    let prec = f.ctx.prec();
    let need = f.degree() + g.degree() + 1;
    debug_assert!(acc.len() >= need, "accumulator too short for product");

    let mut p1 = Float::new(prec);
    let mut p2 = Float::new(prec);
    let mut p3 = Float::new(prec);
    let mut p4 = Float::new(prec);

    for (l, fc) in f.coeffs.iter().enumerate() {
        if fc.is_zero() {
            continue;
        }
        for (m, gc) in g.coeffs.iter().enumerate() {
            if gc.is_zero() {
                continue;
            }
            p1.assign(&fc.re * &gc.re);
            p2.assign(&fc.im * &gc.im);
            p3.assign(&fc.re * &gc.im);
            p4.assign(&fc.im * &gc.re);

            // f(l) g(m) -> mode l+m: (p1 - p2) + i (p3 + p4)
            {
                let s = &mut acc[l + m];
                s.re += &p1;
                s.re -= &p2;
                s.im += &p3;
                s.im += &p4;
            }

            // cross terms with one implied negative mode land on |l - m|
            if l >= 1 && m >= 1 {
                if l > m {
                    // f(l) conj(g(m)) -> mode l-m: (p1 + p2) + i (p4 - p3)
                    let d = &mut acc[l - m];
                    d.re += &p1;
                    d.re += &p2;
                    d.im += &p4;
                    d.im -= &p3;
                } else if l < m {
                    // conj(f(l)) g(m) -> mode m-l: (p1 + p2) + i (p3 - p4)
                    let d = &mut acc[m - l];
                    d.re += &p1;
                    d.re += &p2;
                    d.im += &p3;
                    d.im -= &p4;
                } else {
                    // both cross terms hit mode 0 with conjugate phases:
                    // 2 (p1 + p2), imaginary parts cancel exactly
                    let d = &mut acc[0];
                    d.re += &p1;
                    d.re += &p2;
                    d.re += &p1;
                    d.re += &p2;
                }
            }
        }
    }
}

/// Evaluation grid: cos/sin of 2 pi j / 2^grid_exponent for one full turn,
/// shared by every sup-norm and pointwise residual evaluation under a
/// context.
#[derive(Debug, Clone)]
pub struct Grid {
    ctx: Context,
    cos: Vec<Float>,
    sin: Vec<Float>,
}

impl Grid {
    pub fn new(ctx: Context) -> Grid {
        let m = ctx.grid_points();
        let prec = ctx.prec();
        let two_pi = ctx.two_pi();
        let mut cos = Vec::with_capacity(m);
        let mut sin = Vec::with_capacity(m);
        for j in 0..m {
            let mut angle = Float::with_val(prec, j as u32);
            angle /= m as u32;
            angle *= &two_pi;
            let (s, c) = angle.sin_cos(Float::new(prec));
            cos.push(c);
            sin.push(s);
        }
        Grid { ctx, cos, sin }
    }

    pub fn ctx(&self) -> Context {
        self.ctx
    }

    pub fn len(&self) -> usize {
        self.cos.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid abscissa theta_j = j / 2^grid_exponent (exact: the divisor is a
    /// power of two).
    pub fn theta(&self, j: usize) -> Float {
        let mut t = Float::with_val(self.ctx.prec(), j as u64);
        t /= self.len() as u32;
        t
    }
}
