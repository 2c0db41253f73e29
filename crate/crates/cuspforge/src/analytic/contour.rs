//! Contour integrals of dlog of modular units along cusp geodesics.
//!
//! contour_F integrates (1/(2 pi i N)) dlog u along the hyperbolic geodesic
//! between two boundary points (g1 -> g(-1) on side plus, g0 -> g oo on side
//! minus), with both ends truncated where the cusp-local height Im(sigma^-1 z)
//! reaches 1/eps. The integral is accumulated as a telescoping sum of
//! principal logarithms of consecutive value ratios, so there is no
//! quadrature error at all: the only error sources are the endpoint
//! truncation (exponentially small in 1/eps) and the working precision.
//! Running two eps levels turns the truncation into a reported error bar.


use super::hp::{Ctx, Cx};
use super::units::{BranchWalker, UnitProduct};
use super::TruncationParams;
use crate::dessin::Dessin;
use crate::eisenstein::bigint_to_f64;
use crate::gamma2::{CuspPoint, Mat2};
use crate::homology::Side;
use crate::{Error, Result};

/// A contour value with its error estimate.
#[derive(Clone, Copy, Debug)]
pub struct ContourValue {
    pub re: f64,
    pub im: f64,
    pub error: f64,
}

/// Endpoints of the defining path for a coset representative.
pub fn side_endpoints(g: &Mat2, side: Side) -> (CuspPoint, CuspPoint) {
    match side {
        Side::Plus => (
            g.act_on_cusp(CuspPoint::integer(1)),
            g.act_on_cusp(CuspPoint::integer(-1)),
        ),
        Side::Minus => (
            g.act_on_cusp(CuspPoint::integer(0)),
            g.act_on_cusp(CuspPoint::Infinity),
        ),
    }
}

/// Some SL_2(Z) matrix sending infinity to the given boundary point.
pub fn scaling_matrix(point: &CuspPoint) -> Mat2 {
    match point {
        CuspPoint::Infinity => Mat2::identity(),
        CuspPoint::Rational(p, q) => {
            // columns (p, q), (u, v) with p v - q u = 1
            let e = num_integer::ExtendedGcd::from(num_integer::Integer::extended_gcd(p, q));
            // p*x + q*y = 1 => v = x, u = -y
            let x = e.x.clone();
            let y = e.y.clone();
            Mat2 {
                a: p.clone(),
                b: -y,
                c: q.clone(),
                d: x,
            }
        }
    }
}

fn point_to_f64(p: &CuspPoint) -> Option<f64> {
    match p {
        CuspPoint::Infinity => None,
        CuspPoint::Rational(n, d) => Some(bigint_to_f64(n) / bigint_to_f64(d)),
    }
}

/// Geodesic path between two boundary points, parameterized by u in (0, 1).
struct GeodesicPath {
    p: Option<f64>,
    q: Option<f64>,
    center: f64,
    radius: f64,
}

impl GeodesicPath {
    fn new(p: Option<f64>, q: Option<f64>) -> Result<Self> {
        let (center, radius) = match (p, q) {
            (Some(a), Some(b)) => {
                if a == b {
                    return Err(Error::Invalid("geodesic endpoints coincide".into()));
                }
                ((a + b) / 2.0, (a - b).abs() / 2.0)
            }
            (Some(a), None) | (None, Some(a)) => (a, 0.0),
            (None, None) => return Err(Error::Invalid("geodesic endpoints coincide".into())),
        };
        Ok(GeodesicPath { p, q, center, radius })
    }

    /// u = 0 at the p end, u = 1 at the q end (exclusive).
    fn z(&self, u: f64) -> (f64, f64) {
        match (self.p, self.q) {
            (Some(a), Some(_b)) => {
                // semicircle; a sits at theta = pi when a < b, at 0 otherwise
                let from_left = a < self.center;
                let theta = if from_left {
                    std::f64::consts::PI * (1.0 - u)
                } else {
                    std::f64::consts::PI * u
                };
                (
                    self.center + self.radius * theta.cos(),
                    self.radius * theta.sin(),
                )
            }
            (Some(a), None) => (a, (std::f64::consts::FRAC_PI_2 * u).tan()),
            (None, Some(b)) => (b, (std::f64::consts::FRAC_PI_2 * (1.0 - u)).tan()),
            (None, None) => unreachable!(),
        }
    }
}

fn local_height(sigma_inv_c: f64, sigma_inv_d: f64, z: (f64, f64)) -> f64 {
    let (x, y) = z;
    let den = (sigma_inv_c * x + sigma_inv_d).powi(2) + (sigma_inv_c * y).powi(2);
    y / den
}

/// contour_F: (1/(2 pi i N)) integral of dlog(unit) along the side's geodesic
/// for the coset representative g, endpoints truncated at height 1/eps.
pub fn contour_f(
    ctx: &Ctx,
    dessin: &Dessin,
    product: &UnitProduct,
    g: &Mat2,
    side: Side,
    params: &TruncationParams,
) -> Result<ContourValue> {
    let _ = dessin;
    let coarse = contour_once(ctx, product, g, side, params.eps, params.quad_steps)?;
    let fine = contour_once(ctx, product, g, side, params.eps / 2.0, params.quad_steps)?;
    let err = ((fine.0 - coarse.0).powi(2) + (fine.1 - coarse.1).powi(2)).sqrt()
        + 2f64.powi(-(ctx.prec as i32) / 4);
    if !err.is_finite() || err > 0.05 {
        return Err(Error::Unstable(format!(
            "contour did not converge under endpoint refinement (difference {:.3e}); \
             the unit likely has divisor support at a path endpoint",
            err
        )));
    }
    Ok(ContourValue {
        re: fine.0,
        im: fine.1,
        error: err,
    })
}

fn contour_once(
    ctx: &Ctx,
    product: &UnitProduct,
    g: &Mat2,
    side: Side,
    eps: f64,
    quad_steps: u32,
) -> Result<(f64, f64)> {
    let (p, q) = side_endpoints(g, side);
    let path = GeodesicPath::new(point_to_f64(&p), point_to_f64(&q))?;

    // Truncation: local height 1/eps at both ends.
    let sig_p = scaling_matrix(&p).inv();
    let sig_q = scaling_matrix(&q).inv();
    let hp = (bigint_to_f64(&sig_p.c), bigint_to_f64(&sig_p.d));
    let hq = (bigint_to_f64(&sig_q.c), bigint_to_f64(&sig_q.d));
    let target = 1.0 / eps;
    let u_start = bisect_height(|u| local_height(hp.0, hp.1, path.z(u)), target, true)?;
    let u_end = bisect_height(|u| local_height(hq.0, hq.1, path.z(u)), target, false)?;
    if !(u_start < u_end) {
        return Err(Error::Unstable(
            "truncated contour is empty; eps too large".into(),
        ));
    }

    // Seed the branch state high in the half-plane and bring it to the start.
    let mut walker = BranchWalker::new(ctx, product.root_order());
    let seed = Cx::from_f64(ctx, 0.0, 10.0);
    walker.step_to(&seed)?;
    let z_of = |u: f64| {
        let (x, y) = path.z(u);
        Cx::from_f64(ctx, x, y)
    };
    let start = z_of(u_start);
    let (x, y, l) = super::units::walk_segment(&mut walker, ctx, &start, 26)?;
    let mut f_prev = product.value(ctx, &x, &y, &l);
    if f_prev.abs(ctx).is_zero() {
        return Err(Error::Unstable("unit vanishes on the contour".into()));
    }

    let steps = quad_steps.max(16);
    let mut total = Cx::zero(ctx);
    for i in 1..=steps {
        let u_to = u_start + (u_end - u_start) * i as f64 / steps as f64;
        let u_from = u_start + (u_end - u_start) * (i - 1) as f64 / steps as f64;
        let (f_to, partial) =
            accumulate(ctx, &mut walker, product, &z_of, u_from, u_to, &f_prev, 24)?;
        total = total.add(ctx, &partial);
        f_prev = f_to;
    }

    // F = total / (2 pi i N)
    let two_pi_n = ctx.mul(&ctx.pi(), &ctx.int(2 * product.level as i64));
    let denom = Cx::new(ctx.zero(), two_pi_n);
    let value = total.div(ctx, &denom);
    let (re, im) = value.to_f64(ctx);
    Ok((re, im))
}

/// Accumulate log(f(u_to)/f(u_from)) with adaptive splitting; the ratio must
/// stay close to 1 so the principal log is the analytic continuation.
#[allow(clippy::too_many_arguments)]
fn accumulate(
    ctx: &Ctx,
    walker: &mut BranchWalker,
    product: &UnitProduct,
    z_of: &impl Fn(f64) -> Cx,
    u_from: f64,
    u_to: f64,
    f_from: &Cx,
    depth: u32,
) -> Result<(Cx, Cx)> {
    let attempt = walker.step_to(&z_of(u_to));
    match attempt {
        Ok((x, y, l)) => {
            let f_to = product.value(ctx, &x, &y, &l);
            let ratio = f_to.div(ctx, f_from);
            let dist = ctx.to_f64(&ratio.sub(ctx, &Cx::one(ctx)).abs(ctx));
            if dist < 0.7 {
                return Ok((f_to, ratio.log(ctx)));
            }
            if depth == 0 {
                return Err(Error::Unstable(format!(
                    "log accumulation step too large ({:.3}) at u = {}",
                    dist, u_to
                )));
            }
        }
        Err(Error::Unstable(_)) if depth > 0 => {}
        Err(e) => return Err(e),
    }
    let u_mid = 0.5 * (u_from + u_to);
    let (f_mid, s1) = accumulate(ctx, walker, product, z_of, u_from, u_mid, f_from, depth - 1)?;
    let (f_to, s2) = accumulate(ctx, walker, product, z_of, u_mid, u_to, &f_mid, depth - 1)?;
    Ok((f_to, s1.add(ctx, &s2)))
}

fn bisect_height(
    height: impl Fn(f64) -> f64,
    target: f64,
    from_low_u: bool,
) -> Result<f64> {
    // height -> infinity at the cusp end and is O(1) mid-path.
    let (mut a, mut b) = if from_low_u { (1e-12, 0.5) } else { (0.5, 1.0 - 1e-12) };
    let at_cusp = if from_low_u { a } else { b };
    if height(at_cusp) < target {
        return Err(Error::Unstable(
            "cannot reach requested truncation height".into(),
        ));
    }
    if height(0.5) > target {
        return Err(Error::Unstable(
            "midpoint already above truncation height; eps too large".into(),
        ));
    }
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let above = height(m) > target;
        // keep the invariant: one side above target (cusp side), other below
        if from_low_u {
            if above {
                a = m;
            } else {
                b = m;
            }
        } else if above {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// contour_F over every coset of the dessin, using BFS representatives.
pub fn contour_table(
    ctx: &Ctx,
    dessin: &Dessin,
    product: &UnitProduct,
    side: Side,
    params: &TruncationParams,
) -> Result<Vec<ContourValue>> {
    dessin
        .coset_representatives()
        .iter()
        .map(|g| contour_f(ctx, dessin, product, g, side, params))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::units::{UnitFamily, UnitSpec};

    #[test]
    fn scaling_matrices_are_unimodular() {
        use num_bigint::BigInt;
        for (p, q) in [(1i64, 2i64), (0, 1), (-3, 5), (7, 3)] {
            let pt = CuspPoint::Rational(BigInt::from(p), BigInt::from(q));
            let m = scaling_matrix(&pt);
            assert_eq!(m.det(), BigInt::from(1), "det for {}/{}", p, q);
            assert_eq!(m.act_on_cusp(CuspPoint::Infinity), pt);
        }
        assert!(scaling_matrix(&CuspPoint::Infinity).is_identity());
    }

    /// Orientation lock: on Gamma(2), the N = 1 unit y - 1 = -lambda/(lambda-1)
    /// has divisor (infinity cusp) - (zero cusp); the side-plus contour from 1
    /// to -1 must give the calibrated coefficient -1 exactly.
    #[test]
    fn gamma2_orientation_lock() {
        let ctx = Ctx::new(128);
        let dessin = Dessin::gamma2();
        let spec = UnitProduct::single(UnitSpec::new(UnitFamily::YMinusZeta, 0, 1).unwrap());
        let params = TruncationParams {
            quad_steps: 256,
            ..TruncationParams::default()
        };
        let v = contour_f(&ctx, &dessin, &spec, &Mat2::identity(), Side::Plus, &params).unwrap();
        assert!(
            (v.re - (-1.0)).abs() < 1e-8 && v.im.abs() < 1e-8,
            "got {} + {} i (err {:.2e})",
            v.re,
            v.im,
            v.error
        );
    }

    /// A unit with divisor at a path endpoint is flagged, not silently wrong.
    #[test]
    fn divergent_contour_is_flagged() {
        let ctx = Ctx::new(96);
        let dessin = Dessin::gamma2();
        // lambda itself vanishes at the infinity cusp, an endpoint of the
        // side-minus path 0 -> oo.
        let spec = UnitProduct::single(UnitSpec::new(UnitFamily::LambdaItself, 0, 1).unwrap());
        let params = TruncationParams {
            quad_steps: 64,
            ..TruncationParams::default()
        };
        match contour_f(&ctx, &dessin, &spec, &Mat2::identity(), Side::Minus, &params) {
            Err(Error::Unstable(_)) => {}
            other => panic!("expected instability flag, got {:?}", other.map(|v| (v.re, v.im))),
        }
    }

    /// dlog is additive: the sum of the contour values of f-(0,1) and
    /// f-(1,2) matches the value of f-(0,2) (their product), on a Fermat
    /// coset away from the unit divisors.
    #[test]
    fn contour_additivity_of_ratios() {
        let ctx = Ctx::new(128);
        let dessin = Dessin::from_fermat(3).unwrap();
        let g = Mat2::identity();
        let params = TruncationParams {
            quad_steps: 384,
            ..TruncationParams::default()
        };
        let f01 = UnitProduct::f_minus(3, 0, 1).unwrap();
        let f12 = UnitProduct::f_minus(3, 1, 2).unwrap();
        let f02 = UnitProduct::f_minus(3, 0, 2).unwrap();
        let v01 = contour_f(&ctx, &dessin, &f01, &g, Side::Minus, &params).unwrap();
        let v12 = contour_f(&ctx, &dessin, &f12, &g, Side::Minus, &params).unwrap();
        let v02 = contour_f(&ctx, &dessin, &f02, &g, Side::Minus, &params).unwrap();
        assert!(
            (v01.re + v12.re - v02.re).abs() < 1e-8,
            "{} + {} != {}",
            v01.re,
            v12.re,
            v02.re
        );
        assert!((v01.im + v12.im - v02.im).abs() < 1e-8);
    }
}
