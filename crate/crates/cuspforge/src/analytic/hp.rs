//! Thin context around `astro_float` plus complex arithmetic.
//!
//! All operations run at `prec + GUARD` bits internally; the guard absorbs
//! accumulated rounding so results are trustworthy to roughly 2^(-prec/2)
//! relative error, which is what the estimator contracts promise.

use std::cell::RefCell;

use astro_float::{BigFloat, Consts, RoundingMode};

pub type Real = BigFloat;

const GUARD: usize = 64;

pub struct Ctx {
    pub prec: usize,
    p: usize,
    rm: RoundingMode,
    cc: RefCell<Consts>,
}

impl Ctx {
    pub fn new(prec_bits: usize) -> Self {
        let prec = prec_bits.max(64);
        Ctx {
            prec,
            p: prec + GUARD,
            rm: RoundingMode::ToEven,
            cc: RefCell::new(Consts::new().expect("constants cache")),
        }
    }

    pub fn pi(&self) -> Real {
        self.cc.borrow_mut().pi(self.p, self.rm)
    }

    pub fn zero(&self) -> Real {
        BigFloat::from_i64(0, self.p)
    }

    pub fn one(&self) -> Real {
        BigFloat::from_i64(1, self.p)
    }

    pub fn int(&self, n: i64) -> Real {
        BigFloat::from_i64(n, self.p)
    }

    pub fn real(&self, x: f64) -> Real {
        BigFloat::from_f64(x, self.p)
    }

    /// 2^(-bits)
    pub fn eps2(&self, bits: usize) -> Real {
        let mut x = self.one();
        x.set_exponent(x.exponent().unwrap() - bits as i32);
        x
    }

    pub fn add(&self, a: &Real, b: &Real) -> Real {
        a.add(b, self.p, self.rm)
    }

    pub fn sub(&self, a: &Real, b: &Real) -> Real {
        a.sub(b, self.p, self.rm)
    }

    pub fn mul(&self, a: &Real, b: &Real) -> Real {
        a.mul(b, self.p, self.rm)
    }

    pub fn div(&self, a: &Real, b: &Real) -> Real {
        a.div(b, self.p, self.rm)
    }

    pub fn neg(&self, a: &Real) -> Real {
        a.neg()
    }

    pub fn sqrt(&self, a: &Real) -> Real {
        a.sqrt(self.p, self.rm)
    }

    pub fn exp(&self, a: &Real) -> Real {
        a.exp(self.p, self.rm, &mut self.cc.borrow_mut())
    }

    pub fn ln(&self, a: &Real) -> Real {
        a.ln(self.p, self.rm, &mut self.cc.borrow_mut())
    }

    pub fn sin(&self, a: &Real) -> Real {
        a.sin(self.p, self.rm, &mut self.cc.borrow_mut())
    }

    pub fn cos(&self, a: &Real) -> Real {
        a.cos(self.p, self.rm, &mut self.cc.borrow_mut())
    }

    pub fn atan(&self, a: &Real) -> Real {
        a.atan(self.p, self.rm, &mut self.cc.borrow_mut())
    }

    /// Four-quadrant arctangent of y/x.
    pub fn atan2(&self, y: &Real, x: &Real) -> Real {
        let pi = self.pi();
        if x.is_zero() {
            let half = self.div(&pi, &self.int(2));
            return if y.is_negative() { half.neg() } else { half };
        }
        let base = self.atan(&self.div(y, x));
        if x.is_positive() {
            base
        } else if y.is_negative() {
            self.sub(&base, &pi)
        } else {
            self.add(&base, &pi)
        }
    }

    pub fn lt(&self, a: &Real, b: &Real) -> bool {
        matches!(a.cmp(b), Some(c) if c < 0)
    }

    pub fn to_f64(&self, a: &Real) -> f64 {
        if a.is_zero() {
            return 0.0;
        }
        if a.is_nan() || a.is_inf() {
            return f64::NAN;
        }
        let (words, _n, sign, exp, _) = a.as_raw_parts().expect("finite number");
        // Mantissa words are little-endian and normalized; value = m * 2^(e-n)
        // with m read as a fraction in [1/2, 1) from the top words.
        let mut frac = 0.0f64;
        for (i, w) in words.iter().rev().take(2).enumerate() {
            frac += *w as f64 / 18446744073709551616.0f64.powi(i as i32 + 1);
        }
        let v = frac * 2f64.powi(exp);
        if sign == astro_float::Sign::Neg {
            -v
        } else {
            v
        }
    }
}

/// Complex number over [`Real`]; operations take the context.
#[derive(Clone, Debug)]
pub struct Cx {
    pub re: Real,
    pub im: Real,
}

impl Cx {
    pub fn new(re: Real, im: Real) -> Self {
        Cx { re, im }
    }

    pub fn from_f64(ctx: &Ctx, re: f64, im: f64) -> Self {
        Cx::new(ctx.real(re), ctx.real(im))
    }

    pub fn zero(ctx: &Ctx) -> Self {
        Cx::new(ctx.zero(), ctx.zero())
    }

    pub fn one(ctx: &Ctx) -> Self {
        Cx::new(ctx.one(), ctx.zero())
    }

    pub fn i(ctx: &Ctx) -> Self {
        Cx::new(ctx.zero(), ctx.one())
    }

    pub fn add(&self, ctx: &Ctx, o: &Cx) -> Cx {
        Cx::new(ctx.add(&self.re, &o.re), ctx.add(&self.im, &o.im))
    }

    pub fn sub(&self, ctx: &Ctx, o: &Cx) -> Cx {
        Cx::new(ctx.sub(&self.re, &o.re), ctx.sub(&self.im, &o.im))
    }

    pub fn neg(&self, ctx: &Ctx) -> Cx {
        Cx::new(ctx.neg(&self.re), ctx.neg(&self.im))
    }

    pub fn mul(&self, ctx: &Ctx, o: &Cx) -> Cx {
        let re = ctx.sub(&ctx.mul(&self.re, &o.re), &ctx.mul(&self.im, &o.im));
        let im = ctx.add(&ctx.mul(&self.re, &o.im), &ctx.mul(&self.im, &o.re));
        Cx::new(re, im)
    }

    pub fn scale(&self, ctx: &Ctx, f: &Real) -> Cx {
        Cx::new(ctx.mul(&self.re, f), ctx.mul(&self.im, f))
    }

    pub fn norm_sqr(&self, ctx: &Ctx) -> Real {
        ctx.add(&ctx.mul(&self.re, &self.re), &ctx.mul(&self.im, &self.im))
    }

    pub fn abs(&self, ctx: &Ctx) -> Real {
        ctx.sqrt(&self.norm_sqr(ctx))
    }

    pub fn div(&self, ctx: &Ctx, o: &Cx) -> Cx {
        let d = o.norm_sqr(ctx);
        let re = ctx.div(
            &ctx.add(&ctx.mul(&self.re, &o.re), &ctx.mul(&self.im, &o.im)),
            &d,
        );
        let im = ctx.div(
            &ctx.sub(&ctx.mul(&self.im, &o.re), &ctx.mul(&self.re, &o.im)),
            &d,
        );
        Cx::new(re, im)
    }

    pub fn inv(&self, ctx: &Ctx) -> Cx {
        Cx::one(ctx).div(ctx, self)
    }

    /// exp(self)
    pub fn exp(&self, ctx: &Ctx) -> Cx {
        let r = ctx.exp(&self.re);
        Cx::new(
            ctx.mul(&r, &ctx.cos(&self.im)),
            ctx.mul(&r, &ctx.sin(&self.im)),
        )
    }

    /// Principal logarithm: argument in (-pi, pi].
    pub fn log(&self, ctx: &Ctx) -> Cx {
        let half = ctx.div(&ctx.ln(&self.norm_sqr(ctx)), &ctx.int(2));
        Cx::new(half, ctx.atan2(&self.im, &self.re))
    }

    pub fn arg(&self, ctx: &Ctx) -> Real {
        ctx.atan2(&self.im, &self.re)
    }

    /// Principal n-th root via exp(log/n).
    pub fn nth_root(&self, ctx: &Ctx, n: u64) -> Cx {
        let l = self.log(ctx);
        l.scale(ctx, &ctx.div(&ctx.one(), &ctx.int(n as i64))).exp(ctx)
    }

    pub fn powi(&self, ctx: &Ctx, n: u32) -> Cx {
        let mut acc = Cx::one(ctx);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(ctx, &base);
            }
            base = base.mul(ctx, &base);
            e >>= 1;
        }
        acc
    }

    pub fn to_f64(&self, ctx: &Ctx) -> (f64, f64) {
        (ctx.to_f64(&self.re), ctx.to_f64(&self.im))
    }

    pub fn dist(&self, ctx: &Ctx, o: &Cx) -> Real {
        self.sub(ctx, o).abs(ctx)
    }
}

/// e^(2 pi i t) for a real parameter t (given as f64 fraction).
pub fn unit_phase(ctx: &Ctx, t: f64) -> Cx {
    let two_pi = ctx.mul(&ctx.pi(), &ctx.int(2));
    let ang = ctx.mul(&two_pi, &ctx.real(t));
    Cx::new(ctx.cos(&ang), ctx.sin(&ang))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_arithmetic() {
        let ctx = Ctx::new(128);
        let pi = ctx.pi();
        assert!((ctx.to_f64(&pi) - std::f64::consts::PI).abs() < 1e-15);
        let z = Cx::from_f64(&ctx, 0.3, 0.4);
        let w = z.mul(&ctx, &z.inv(&ctx));
        let (re, im) = w.to_f64(&ctx);
        assert!((re - 1.0).abs() < 1e-20 && im.abs() < 1e-20);
    }

    #[test]
    fn exp_log_roundtrip() {
        let ctx = Ctx::new(128);
        let z = Cx::from_f64(&ctx, -0.7, 0.2);
        let back = z.exp(&ctx).log(&ctx);
        let d = ctx.to_f64(&z.dist(&ctx, &back));
        assert!(d < 1e-30, "distance {}", d);
    }

    #[test]
    fn atan2_quadrants() {
        let ctx = Ctx::new(96);
        for &(y, x) in &[(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0), (1.0, 0.0), (-1.0, 0.0)] {
            let got = ctx.to_f64(&ctx.atan2(&ctx.real(y), &ctx.real(x)));
            assert!((got - y.atan2(x)).abs() < 1e-14, "atan2({}, {})", y, x);
        }
    }

    #[test]
    fn nth_root_principal() {
        let ctx = Ctx::new(128);
        let z = Cx::from_f64(&ctx, -8.0, 0.0);
        let r = z.nth_root(&ctx, 3);
        let cubed = r.powi(&ctx, 3);
        let (re, im) = cubed.to_f64(&ctx);
        assert!((re + 8.0).abs() < 1e-25 && im.abs() < 1e-25);
        // principal branch: argument pi/3
        let arg = ctx.to_f64(&r.arg(&ctx));
        assert!((arg - std::f64::consts::PI / 3.0).abs() < 1e-14);
    }

    #[test]
    fn to_f64_roundtrip() {
        let ctx = Ctx::new(192);
        for &x in &[0.0, 1.0, -2.5, 1e-12, 3.141592653589793, -1e40] {
            let v = ctx.real(x);
            assert_eq!(ctx.to_f64(&v), x, "roundtrip {}", x);
        }
    }
}
