//! The modular lambda function via Jacobi theta series.
//!
//! With q = e^(pi i z):
//!
//! ```text
//!   lambda(z) = theta2(q)^4 / theta3(q)^4 = 16 q (sum q^(n(n+1)))^4 / theta3^4
//!   1 - lambda(z) = theta4(q)^4 / theta3(q)^4
//! ```
//!
//! The sparse theta sums need O(sqrt(prec / Im z)) terms, so evaluation stays
//! cheap deep into the strip; 1 - lambda comes out of theta4 directly, which
//! matters near the cusp 1 where lambda - 1 underflows catastrophically if
//! computed by subtraction. lambda(i) = 1/2 and the A/B invariances pin the
//! normalization: lambda(infinity) = 0, lambda(0) = 1, lambda(1) = infinity.
//!
//! (The classical product 16 q prod ((1+q^(2n))/(1+q^(2n-1)))^8 is kept as an
//! independent cross-check route in the tests.)

use super::hp::{Ctx, Cx};
use crate::{Error, Result};

/// lambda(z) and 1 - lambda(z) together, sharing the theta evaluations.
pub fn lambda_pair(ctx: &Ctx, z: &Cx) -> Result<(Cx, Cx)> {
    if !z.im.is_positive() {
        return Err(Error::OutOfRange(
            "lambda needs a point in the upper half-plane".into(),
        ));
    }
    // q = exp(pi i z)
    let pi = ctx.pi();
    let iz = Cx::new(ctx.neg(&z.im), z.re.clone());
    let q = iz.scale(ctx, &pi).exp(ctx);

    let cutoff = ctx.eps2(ctx.prec + 32);
    let q2 = q.mul(ctx, &q);

    // theta3 = 1 + 2 sum q^(n^2), theta4 with alternating signs.
    let mut th3 = Cx::one(ctx);
    let mut th4 = Cx::one(ctx);
    // theta2 core: sum_{n>=0} q^(n(n+1)); theta2^4 = 16 q * core^4.
    let mut th2core = Cx::one(ctx);

    let mut pow_sq = q.clone(); // q^(n^2) at n = 1
    let mut step_sq = q2.clone(); // q^(2n+1) at n = 1 is q^3; updated below
    step_sq = step_sq.mul(ctx, &q);
    let mut pow_tri = q2.clone(); // q^(n(n+1)) at n = 1
    let mut step_tri = q2.mul(ctx, &q2); // q^(2(n+1)) at n = 1

    let mut sign = -1i32;
    for n in 1..100000u32 {
        let two = ctx.int(2);
        let term3 = pow_sq.scale(ctx, &two);
        th3 = th3.add(ctx, &term3);
        th4 = if sign < 0 {
            th4.sub(ctx, &term3)
        } else {
            th4.add(ctx, &term3)
        };
        th2core = th2core.add(ctx, &pow_tri);

        let done = ctx.lt(&pow_sq.abs(ctx), &cutoff) && ctx.lt(&pow_tri.abs(ctx), &cutoff);
        if done {
            break;
        }
        if n == 99999 {
            return Err(Error::Unstable(
                "theta series did not converge (Im z too small?)".into(),
            ));
        }
        pow_sq = pow_sq.mul(ctx, &step_sq);
        step_sq = step_sq.mul(ctx, &q2);
        pow_tri = pow_tri.mul(ctx, &step_tri);
        step_tri = step_tri.mul(ctx, &q2);
        sign = -sign;
    }

    let th3_4 = th3.powi(ctx, 4);
    let th4_4 = th4.powi(ctx, 4);
    let th2_4 = th2core.powi(ctx, 4).mul(ctx, &q).scale(ctx, &ctx.int(16));
    let lambda = th2_4.div(ctx, &th3_4);
    let one_minus = th4_4.div(ctx, &th3_4);
    Ok((lambda, one_minus))
}

/// The modular lambda function.
pub fn modular_lambda(ctx: &Ctx, z: &Cx) -> Result<Cx> {
    Ok(lambda_pair(ctx, z)?.0)
}

/// Im z below this makes the series long and the conditioning poor; callers
/// surface it as a warning, not an error.
pub fn precision_risky(ctx: &Ctx, z: &Cx) -> bool {
    ctx.lt(&z.im, &ctx.real(0.05))
}

/// Independent route: the classical product 16 q prod((1+q^2n)/(1+q^(2n-1)))^8.
pub fn lambda_product_form(ctx: &Ctx, z: &Cx) -> Result<Cx> {
    if !z.im.is_positive() {
        return Err(Error::OutOfRange(
            "lambda needs a point in the upper half-plane".into(),
        ));
    }
    let pi = ctx.pi();
    let iz = Cx::new(ctx.neg(&z.im), z.re.clone());
    let q = iz.scale(ctx, &pi).exp(ctx);
    let cutoff = ctx.eps2(ctx.prec + 32);
    let one = Cx::one(ctx);
    let mut acc = q.scale(ctx, &ctx.int(16));
    let mut q_odd = q.clone(); // q^(2n-1) at n = 1
    for _ in 1..100000u32 {
        let q_even = q_odd.mul(ctx, &q); // q^(2n)
        let num = one.add(ctx, &q_even);
        let den = one.add(ctx, &q_odd);
        let factor = num.div(ctx, &den).powi(ctx, 8);
        acc = acc.mul(ctx, &factor);
        if ctx.lt(&q_even.abs(ctx), &cutoff) {
            return Ok(acc);
        }
        q_odd = q_even.mul(ctx, &q);
    }
    Err(Error::Unstable("lambda product did not converge".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(ctx: &Ctx, a: &Cx, b: &Cx, tol: f64) -> bool {
        ctx.to_f64(&a.dist(ctx, b)) < tol
    }

    #[test]
    fn lambda_at_i_is_half() {
        let ctx = Ctx::new(256);
        let z = Cx::from_f64(&ctx, 0.0, 1.0);
        let l = modular_lambda(&ctx, &z).unwrap();
        let (re, im) = l.to_f64(&ctx);
        assert!((re - 0.5).abs() < 1e-60, "re = {}", re);
        assert!(im.abs() < 1e-60);
    }

    #[test]
    fn theta_and_product_routes_agree() {
        let ctx = Ctx::new(192);
        for &(x, y) in &[(0.0, 1.0), (0.3, 0.7), (-0.45, 0.2), (1.7, 2.5)] {
            let z = Cx::from_f64(&ctx, x, y);
            let a = modular_lambda(&ctx, &z).unwrap();
            let b = lambda_product_form(&ctx, &z).unwrap();
            assert!(close(&ctx, &a, &b, 1e-40), "at z = {} + {}i", x, y);
        }
    }

    #[test]
    fn leading_order_at_high_points() {
        // lambda(10 i) = 16 e^(-10 pi) (1 + O(e^(-10 pi))).
        let ctx = Ctx::new(256);
        let z = Cx::from_f64(&ctx, 0.0, 10.0);
        let l = modular_lambda(&ctx, &z).unwrap();
        let lead = 16.0 * (-10.0 * std::f64::consts::PI).exp();
        let (re, im) = l.to_f64(&ctx);
        assert!((re - lead).abs() < lead * lead, "re = {:e} vs {:e}", re, lead);
        assert!(im.abs() < 1e-40);
    }

    #[test]
    fn functional_equations() {
        let ctx = Ctx::new(192);
        for &(x, y) in &[(0.21, 0.9), (-0.3, 1.4)] {
            let z = Cx::from_f64(&ctx, x, y);
            let l = modular_lambda(&ctx, &z).unwrap();
            // A-invariance: lambda(z + 2) = lambda(z)
            let za = Cx::from_f64(&ctx, x + 2.0, y);
            assert!(close(&ctx, &l, &modular_lambda(&ctx, &za).unwrap(), 1e-40));
            // B-invariance: lambda(z / (2z + 1)) = lambda(z)
            let two_z_one = z.scale(&ctx, &ctx.int(2)).add(&ctx, &Cx::one(&ctx));
            let zb = z.div(&ctx, &two_z_one);
            assert!(close(&ctx, &l, &modular_lambda(&ctx, &zb).unwrap(), 1e-40));
            // S-relation: lambda(-1/z) = 1 - lambda(z)
            let zs = z.inv(&ctx).neg(&ctx);
            let ls = modular_lambda(&ctx, &zs).unwrap();
            let expect = Cx::one(&ctx).sub(&ctx, &l);
            assert!(close(&ctx, &ls, &expect, 1e-40));
        }
    }

    #[test]
    fn one_minus_lambda_is_stable_near_one() {
        let ctx = Ctx::new(192);
        // Near the cusp 1 the direct subtraction loses everything; theta4
        // keeps full precision.
        let z = Cx::from_f64(&ctx, 1.0, 0.08);
        let (l, oml) = lambda_pair(&ctx, &z).unwrap();
        let direct = Cx::one(&ctx).sub(&ctx, &l);
        let d = ctx.to_f64(&oml.dist(&ctx, &direct));
        let scale = ctx.to_f64(&oml.abs(&ctx));
        assert!(d < 1e-25 * scale.max(1.0), "d = {:e}, |1-l| = {:e}", d, scale);
        assert!(scale < 1.0);
    }

    #[test]
    fn rejects_lower_half_plane() {
        let ctx = Ctx::new(96);
        assert!(modular_lambda(&ctx, &Cx::from_f64(&ctx, 0.0, -1.0)).is_err());
        assert!(modular_lambda(&ctx, &Cx::from_f64(&ctx, 0.5, 0.0)).is_err());
        assert!(precision_risky(&ctx, &Cx::from_f64(&ctx, 0.0, 0.01)));
        assert!(!precision_risky(&ctx, &Cx::from_f64(&ctx, 0.0, 1.0)));
    }
}
