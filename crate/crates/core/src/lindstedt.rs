//! Order-by-order construction of the Lindstedt series for the dissipative
//! standard map.
//!
//! The map on the cylinder is x' = x + y', y' = b y + c + eps V'(x) with the
//! fixed dissipation law b = 1 - eps^3 and forcing V'(x) = sin(2 pi x)/(2 pi).
//! Writing the invariant circle of rotation number omega as
//! theta -> theta + u(theta) and expanding u and the drift c in powers of eps
//! turns the invariance equation into one cohomology equation per order:
//!
//! ```text
//! L u_k = c_k - S_k - D_k - omega*[k=3]
//! ```
//!
//! where L phi = phi(theta+omega) - 2 phi(theta) + phi(theta-omega),
//! S_k collects the order-k coefficients of eps V'(theta + u(theta)),
//! D_k = u_{k-3} - u_{k-3}(. - omega) is the dissipation echo, and the drift
//! coefficient c_k = mean(S_k) + omega*[k=3] removes the zero mode. Each
//! order divides by the small divisors m(l) = -4 sin^2(pi l omega) and fixes
//! the free zero mode of u_k to 0.

use rug::Float;

use crate::arith::{small_divisor, Complex, Context, Frequency};
use crate::error::{Error, Result};
use crate::trigpoly::{mul_add_into, TrigPoly};

/// Dissipation coefficient b = 1 - eps^3 of the fixed map family.
pub fn dissipation(ctx: Context, eps: &Float) -> Float {
    let prec = ctx.prec();
    let mut cube = Float::with_val(prec, eps * eps);
    cube *= eps;
    let mut b = ctx.float_from_u32(1);
    b -= &cube;
    b
}

/// The forcing derivative V'(theta) = sin(2 pi theta)/(2 pi) as a polynomial.
pub fn forcing_poly(ctx: Context) -> TrigPoly {
    let mut inv = ctx.two_pi();
    inv.recip_mut();
    TrigPoly::sin_wave(ctx).scale(&inv)
}

/// V'(x) = sin(2 pi x)/(2 pi) evaluated at a point.
pub fn forcing_at(ctx: Context, x: &Float) -> Float {
    let prec = ctx.prec();
    let two_pi = ctx.two_pi();
    let mut s = Float::with_val(prec, x * &two_pi);
    s.sin_mut();
    s /= &two_pi;
    s
}

/// The computed series: corrections u_k (`terms`), drifts c_k (`drift`), and
/// the sine/cosine composition series sigma_k = [sin(2 pi u)]_k,
/// gamma_k = [cos(2 pi u)]_k that make resuming the recursion O(1).
///
/// Invariants: all four lists cover orders 0..=n_max; degree(u_k) <= k;
/// mean(u_k) = 0; u_0 = 0 and c_0 = c_1 = c_2 = 0, c_3 = omega.
#[derive(Debug, Clone)]
pub struct LindstedtSeries {
    omega: Frequency,
    ctx: Context,
    terms: Vec<TrigPoly>,
    drift: Vec<Float>,
    sin_comp: Vec<TrigPoly>,
    cos_comp: Vec<TrigPoly>,
}

impl LindstedtSeries {
    /// Reassembles a series from stored parts, checking structural shape
    /// (equal lengths, order 0 present, degree bound).
    pub fn from_parts(
        omega: Frequency,
        terms: Vec<TrigPoly>,
        drift: Vec<Float>,
        sin_comp: Vec<TrigPoly>,
        cos_comp: Vec<TrigPoly>,
    ) -> Result<LindstedtSeries> {
        let n = terms.len();
        if n == 0 {
            return Err(Error::Corrupted("series holds no orders at all".into()));
        }
        if drift.len() != n || sin_comp.len() != n || cos_comp.len() != n {
            return Err(Error::Corrupted(format!(
                "order lists disagree: {} terms, {} drifts, {} sine parts, {} cosine parts",
                n,
                drift.len(),
                sin_comp.len(),
                cos_comp.len()
            )));
        }
        let ctx = omega.ctx();
        for (k, u) in terms.iter().enumerate() {
            if u.degree() > k {
                return Err(Error::Corrupted(format!(
                    "term {k} has degree {} > {k}",
                    u.degree()
                )));
            }
            if u.ctx() != ctx {
                return Err(Error::Mismatch(
                    "series term context differs from frequency context".into(),
                ));
            }
        }
        Ok(LindstedtSeries {
            omega,
            ctx,
            terms,
            drift,
            sin_comp,
            cos_comp,
        })
    }

    pub fn omega(&self) -> &Frequency {
        &self.omega
    }

    pub fn ctx(&self) -> Context {
        self.ctx
    }

    /// Highest completed order N.
    pub fn n_max(&self) -> usize {
        self.terms.len() - 1
    }

    /// Correction u_k.
    pub fn term(&self, k: usize) -> &TrigPoly {
        &self.terms[k]
    }

    pub fn terms(&self) -> &[TrigPoly] {
        &self.terms
    }

    /// Drift coefficient c_k.
    pub fn drift(&self, k: usize) -> &Float {
        &self.drift[k]
    }

    /// All drift coefficients c_0..c_N.
    pub fn drift_series(&self) -> &[Float] {
        &self.drift
    }

    /// sigma_k, the order-k coefficient of sin(2 pi u).
    pub fn sin_comp(&self, k: usize) -> &TrigPoly {
        &self.sin_comp[k]
    }

    /// gamma_k, the order-k coefficient of cos(2 pi u).
    pub fn cos_comp(&self, k: usize) -> &TrigPoly {
        &self.cos_comp[k]
    }

    /// Forcing coefficient S_k of eps V'(theta + u(theta)), rebuilt from the
    /// stored composition series:
    /// S_k = [sin(2 pi theta) gamma_{k-1} + cos(2 pi theta) sigma_{k-1}]/(2 pi).
    pub fn forcing(&self, k: usize) -> Result<TrigPoly> {
        if k > self.n_max() + 1 {
            return Err(Error::DegenerateRange(format!(
                "forcing order {k} needs composition order {}, have {}",
                k.saturating_sub(1),
                self.n_max()
            )));
        }
        if k == 0 {
            return Ok(TrigPoly::zero(self.ctx, 0));
        }
        Ok(forcing_from(
            self.ctx,
            &self.sin_comp[k - 1],
            &self.cos_comp[k - 1],
        ))
    }

    /// Clone of the first `n + 1` orders.
    pub fn truncated(&self, n: usize) -> Result<LindstedtSeries> {
        if n > self.n_max() {
            return Err(Error::DegenerateRange(format!(
                "cannot truncate to order {n}, series ends at {}",
                self.n_max()
            )));
        }
        Ok(LindstedtSeries {
            omega: self.omega.clone(),
            ctx: self.ctx,
            terms: self.terms[..=n].to_vec(),
            drift: self.drift[..=n].to_vec(),
            sin_comp: self.sin_comp[..=n].to_vec(),
            cos_comp: self.cos_comp[..=n].to_vec(),
        })
    }
}

/// S_{k+1} from sigma_k and gamma_k.
fn forcing_from(ctx: Context, sin_comp: &TrigPoly, cos_comp: &TrigPoly) -> TrigPoly {
    let prec = ctx.prec();
    let degree = 1 + sin_comp.degree().max(cos_comp.degree());
    let mut acc: Vec<Complex> = (0..=degree).map(|_| Complex::zero(prec)).collect();
    let sin1 = TrigPoly::sin_wave(ctx);
    let cos1 = TrigPoly::cos_wave(ctx);
    mul_add_into(&sin1, cos_comp, &mut acc);
    mul_add_into(&cos1, sin_comp, &mut acc);
    let mut inv = ctx.two_pi();
    inv.recip_mut();
    for c in &mut acc {
        c.re *= &inv;
        c.im *= &inv;
    }
    TrigPoly::from_coeffs_unchecked(ctx, acc)
}

/// Solves L u = rhs for the zero-mean u, dividing mode l by
/// m(l) = -4 sin^2(pi l omega).
///
/// Requires |mean(rhs)| <= 10^-(d-20): the operator annihilates constants, so
/// a visible zero mode means no solution exists.
pub fn solve_cohomology(rhs: &TrigPoly, omega: &Frequency) -> Result<TrigPoly> {
    if rhs.ctx() != omega.ctx() {
        return Err(Error::Mismatch(
            "right-hand side and frequency built under different contexts".into(),
        ));
    }
    let ctx = rhs.ctx();
    let mean = rhs.mean().abs();
    if mean > ctx.tol(20) {
        let mean_log10 = mean.to_f64().log10();
        return Err(Error::Unsolvable { mean_log10 });
    }
    let mut multipliers = Vec::with_capacity(rhs.degree() + 1);
    multipliers.push(ctx.new_float()); // unused slot for mode 0
    for l in 1..=rhs.degree() {
        multipliers.push(small_divisor(omega, l as i64)?);
    }
    Ok(solve_with_multipliers(ctx, rhs, &multipliers))
}

fn solve_with_multipliers(ctx: Context, rhs: &TrigPoly, multipliers: &[Float]) -> TrigPoly {
    let prec = ctx.prec();
    let mut coeffs = Vec::with_capacity(rhs.degree() + 1);
    coeffs.push(Complex::zero(prec)); // free zero mode fixed to 0
    for l in 1..=rhs.degree() {
        let c = rhs.coeff(l).unwrap();
        let m = &multipliers[l];
        let re = Float::with_val(prec, &c.re / m);
        let im = Float::with_val(prec, &c.im / m);
        coeffs.push(Complex::from_parts(re, im));
    }
    TrigPoly::from_coeffs_unchecked(ctx, coeffs)
}

/// The running state of an expansion: the completed series plus everything
/// the next order needs (pre-scaled terms, small-divisor and shift tables,
/// and the next forcing coefficient).
///
/// Stepping is strictly sequential; resuming from a stored prefix rebuilds
/// this state bit-identically because every table entry is computed directly
/// from its index, never incrementally.
pub struct Expansion {
    series: LindstedtSeries,
    /// k * u_k, the weights of the derivative recursion.
    scaled_terms: Vec<TrigPoly>,
    /// S_{n_max+1}, ready for the next step.
    next_forcing: TrigPoly,
    /// m(l) for l = 1..; slot 0 unused.
    multipliers: Vec<Float>,
    /// e^{-2 pi i l omega} for the dissipation echo shift.
    back_shift: Vec<Complex>,
}

impl Expansion {
    /// Fresh order-0 state: u_0 = 0, c_0 = 0, sigma_0 = 0, gamma_0 = 1,
    /// S_1 = V'.
    pub fn new(omega: Frequency) -> Expansion {
        let ctx = omega.ctx();
        let zero_poly = TrigPoly::zero(ctx, 0);
        let one = TrigPoly::constant(ctx, &ctx.float_from_u32(1));
        let next_forcing = forcing_from(ctx, &zero_poly, &one);
        let series = LindstedtSeries {
            omega,
            ctx,
            terms: vec![zero_poly.clone()],
            drift: vec![ctx.new_float()],
            sin_comp: vec![zero_poly.clone()],
            cos_comp: vec![one],
        };
        Expansion {
            series,
            scaled_terms: vec![zero_poly],
            next_forcing,
            multipliers: vec![ctx.new_float()],
            back_shift: Vec::new(),
        }
    }

    /// Rebuilds stepping state from a completed series (e.g. loaded from an
    /// archive), so the next `step` continues exactly where the original run
    /// would have.
    pub fn from_series(series: LindstedtSeries) -> Result<Expansion> {
        let ctx = series.ctx();
        let n = series.n_max();
        let scaled_terms = series
            .terms
            .iter()
            .enumerate()
            .map(|(k, u)| u.scale_u32(k as u32))
            .collect();
        let next_forcing = forcing_from(ctx, &series.sin_comp[n], &series.cos_comp[n]);
        let mut exp = Expansion {
            series,
            scaled_terms,
            next_forcing,
            multipliers: vec![ctx.new_float()],
            back_shift: Vec::new(),
        };
        exp.extend_tables(n)?;
        Ok(exp)
    }

    /// Highest completed order.
    pub fn order(&self) -> usize {
        self.series.n_max()
    }

    pub fn series(&self) -> &LindstedtSeries {
        &self.series
    }

    pub fn into_series(self) -> LindstedtSeries {
        self.series
    }

    fn extend_tables(&mut self, upto: usize) -> Result<()> {
        let omega = self.series.omega().clone();
        let ctx = self.series.ctx();
        let prec = ctx.prec();
        let two_pi = ctx.two_pi();
        while self.multipliers.len() <= upto {
            let l = self.multipliers.len();
            self.multipliers.push(small_divisor(&omega, l as i64)?);
        }
        while self.back_shift.len() <= upto {
            // e^{-2 pi i l omega}, each angle from scratch for determinism
            let l = self.back_shift.len();
            let mut angle = Float::with_val(prec, omega.value() * (l as u32));
            angle *= &two_pi;
            angle = -angle;
            let (sin, cos) = angle.sin_cos(Float::new(prec));
            self.back_shift.push(Complex::from_parts(cos, sin));
        }
        Ok(())
    }

    /// Computes the next order and returns its index.
    pub fn step(&mut self) -> Result<usize> {
        let k = self.order() + 1;
        self.step_inner(k).map_err(|e| Error::AtOrder {
            order: k,
            source: Box::new(e),
        })?;
        Ok(k)
    }

    fn step_inner(&mut self, k: usize) -> Result<()> {
        let ctx = self.series.ctx();
        let prec = ctx.prec();
        self.extend_tables(k)?;

        // drift selection: c_k = mean(S_k), plus omega once at order 3 where
        // the dissipation law 1 - eps^3 first bites
        let mut drift = self.next_forcing.mean();
        if k == 3 {
            drift += self.series.omega().value();
        }

        // the zero mode of c_k - S_k - D_k - omega*[k=3]: D_k contributes
        // nothing (u_{k-3} has mean 0, shifts keep it), so only the scalars
        // remain, and they must cancel for the equation to be solvable
        let mut rhs_mean = drift.clone();
        rhs_mean -= self.next_forcing.mean();
        if k == 3 {
            rhs_mean -= self.series.omega().value();
        }
        rhs_mean.abs_mut();
        if rhs_mean > ctx.tol(20) {
            return Err(Error::Unsolvable {
                mean_log10: rhs_mean.to_f64().log10(),
            });
        }

        let forcing = std::mem::replace(&mut self.next_forcing, TrigPoly::zero(ctx, 0));

        // nonzero modes of the right-hand side
        let mut rhs: Vec<Complex> = (0..=k).map(|_| Complex::zero(prec)).collect();
        for l in 1..=forcing.degree() {
            let c = forcing.coeff(l).unwrap();
            rhs[l].re -= &c.re;
            rhs[l].im -= &c.im;
        }
        if k >= 3 {
            // D_k = u_{k-3} - u_{k-3}(theta - omega)
            let u_old = &self.series.terms[k - 3];
            let shifted = u_old.shift_with_table(&self.back_shift);
            for l in 1..=u_old.degree() {
                let a = u_old.coeff(l).unwrap();
                let b = shifted.coeff(l).unwrap();
                rhs[l].re -= &a.re;
                rhs[l].re += &b.re;
                rhs[l].im -= &a.im;
                rhs[l].im += &b.im;
            }
        }

        let rhs = TrigPoly::from_coeffs_unchecked(ctx, rhs);
        let term = solve_with_multipliers(ctx, &rhs, &self.multipliers);

        // derivative recursion for the composition series:
        // sigma_k = (2 pi / k) sum_j j u_j gamma_{k-j},
        // gamma_k = -(2 pi / k) sum_j j u_j sigma_{k-j}
        self.scaled_terms.push(term.scale_u32(k as u32));
        let mut sin_acc: Vec<Complex> = (0..=k).map(|_| Complex::zero(prec)).collect();
        let mut cos_acc: Vec<Complex> = (0..=k).map(|_| Complex::zero(prec)).collect();
        for j in 1..=k {
            mul_add_into(&self.scaled_terms[j], &self.series.cos_comp[k - j], &mut sin_acc);
            mul_add_into(&self.scaled_terms[j], &self.series.sin_comp[k - j], &mut cos_acc);
        }
        let mut factor = ctx.two_pi();
        factor /= k as u32;
        for c in &mut sin_acc {
            c.re *= &factor;
            c.im *= &factor;
        }
        factor = -factor;
        for c in &mut cos_acc {
            c.re *= &factor;
            c.im *= &factor;
        }
        let sin_comp = TrigPoly::from_coeffs_unchecked(ctx, sin_acc);
        let cos_comp = TrigPoly::from_coeffs_unchecked(ctx, cos_acc);

        self.next_forcing = forcing_from(ctx, &sin_comp, &cos_comp);
        self.series.terms.push(term);
        self.series.drift.push(drift);
        self.series.sin_comp.push(sin_comp);
        self.series.cos_comp.push(cos_comp);
        Ok(())
    }
}

/// Runs the full recursion up to order `n` under `ctx` (re-materializing
/// omega under `ctx` if it was built elsewhere).
pub fn expand(omega: &Frequency, n: usize, ctx: Context) -> Result<LindstedtSeries> {
    if n < 1 {
        return Err(Error::Config("expansion order must be at least 1".into()));
    }
    let omega = if omega.ctx() == ctx {
        omega.clone()
    } else {
        omega.with_context(ctx)?
    };
    let mut exp = Expansion::new(omega);
    while exp.order() < n {
        exp.step()?;
    }
    Ok(exp.into_series())
}
