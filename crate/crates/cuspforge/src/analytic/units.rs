//! Fermat modular units with branch tracking.
//!
//! The units of section-eleven type live on the Fermat cover: with the
//! paper-normalized hauptmodul L = lambda/(lambda - 1) (which has its zero
//! over the infinity cusps and its pole over the zero cusps),
//!
//! ```text
//!   x = L^(1/N),   y = (1 - L)^(1/N) = (1/(1 - lambda))^(1/N)
//! ```
//!
//! and the unit families are x - zeta^j, y - zeta^j, x - eps zeta^j y with
//! zeta = e^(2 pi i / N), eps = e^(pi i / N). Both roots are single-valued on
//! the (simply connected) upper half-plane once seeded; the walker continues
//! them along a path, refusing steps large enough to make the branch choice
//! ambiguous. The family `lambda_itself` is the plain modular lambda.

use super::hp::{unit_phase, Ctx, Cx};
use super::lambda::lambda_pair;
use crate::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UnitFamily {
    XMinusZeta,
    YMinusZeta,
    XMinusEpsZetaY,
    LambdaItself,
}

impl UnitFamily {
    pub fn name(self) -> &'static str {
        match self {
            UnitFamily::XMinusZeta => "x_minus_zeta",
            UnitFamily::YMinusZeta => "y_minus_zeta",
            UnitFamily::XMinusEpsZetaY => "x_minus_eps_zeta_y",
            UnitFamily::LambdaItself => "lambda_itself",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "x_minus_zeta" | "x" => Ok(UnitFamily::XMinusZeta),
            "y_minus_zeta" | "y" => Ok(UnitFamily::YMinusZeta),
            "x_minus_eps_zeta_y" | "xy" => Ok(UnitFamily::XMinusEpsZetaY),
            "lambda_itself" | "lambda" => Ok(UnitFamily::LambdaItself),
            other => Err(Error::Parse(format!("unknown unit family {:?}", other))),
        }
    }
}

/// A modular unit for the level-N Fermat cover.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct UnitSpec {
    pub family: UnitFamily,
    pub j: u64,
    pub n: u64,
}

impl UnitSpec {
    pub fn new(family: UnitFamily, j: u64, n: u64) -> Result<Self> {
        if n == 0 || (j >= n && family != UnitFamily::LambdaItself) {
            return Err(Error::OutOfRange(format!(
                "unit index {} out of range for N = {}",
                j, n
            )));
        }
        Ok(UnitSpec { family, j, n })
    }

    /// The divisor of the unit is `n` times a primitive cusp divisor; dlog
    /// integrals are divided by this factor.
    pub fn divisor_scale(&self) -> u64 {
        match self.family {
            UnitFamily::LambdaItself => 1,
            _ => self.n,
        }
    }
}

/// Continuation state for x and y along a path.
pub struct BranchWalker<'c> {
    ctx: &'c Ctx,
    n: u64,
    /// Current point and the branch values there.
    state: Option<(Cx, Cx, Cx, Cx)>, // (z, x, y, lambda)
}

impl<'c> BranchWalker<'c> {
    pub fn new(ctx: &'c Ctx, n: u64) -> Self {
        BranchWalker { ctx, n, state: None }
    }

    pub fn position(&self) -> Option<&Cx> {
        self.state.as_ref().map(|(z, _, _, _)| z)
    }

    /// Move to z, continuing the branches. Fails with `Unstable` when the
    /// step is too large to identify the branch unambiguously.
    pub fn step_to(&mut self, z: &Cx) -> Result<(Cx, Cx, Cx)> {
        let ctx = self.ctx;
        let (lambda, one_minus) = lambda_pair(ctx, z)?;
        // Paper-normalized building blocks: L = lambda/(lambda-1) = -lambda/(1-lambda),
        // 1 - L = 1/(1 - lambda).
        let w_x = lambda.neg(ctx).div(ctx, &one_minus);
        let w_y = one_minus.inv(ctx);
        let (x, y) = if self.n == 1 {
            (w_x, w_y)
        } else {
            let prev = self.state.as_ref().map(|(_, x, y, _)| (x.clone(), y.clone()));
            let x = self.continue_root(&w_x, prev.as_ref().map(|(x, _)| x))?;
            let y = self.continue_root(&w_y, prev.as_ref().map(|(_, y)| y))?;
            (x, y)
        };
        self.state = Some((z.clone(), x.clone(), y.clone(), lambda.clone()));
        Ok((x, y, lambda))
    }

    fn continue_root(&self, w: &Cx, prev: Option<&Cx>) -> Result<Cx> {
        let ctx = self.ctx;
        let principal = w.nth_root(ctx, self.n);
        let Some(prev) = prev else {
            return Ok(principal);
        };
        // Candidate roots are principal * zeta^m; keep the one closest to the
        // previous value and insist the move stays well inside half the
        // angular gap between neighbouring roots.
        let mut best: Option<(Cx, f64)> = None;
        for m in 0..self.n {
            let cand = principal.mul(ctx, &unit_phase(ctx, m as f64 / self.n as f64));
            let d = ctx.to_f64(&cand.dist(ctx, prev));
            if best.as_ref().map(|&(_, bd)| d < bd).unwrap_or(true) {
                best = Some((cand, d));
            }
        }
        let (chosen, dist) = best.expect("n >= 1 root candidates");
        let scale = ctx.to_f64(&prev.abs(ctx));
        let guard = scale * (std::f64::consts::PI / (2.0 * self.n as f64)).sin();
        if dist > guard {
            return Err(Error::Unstable(format!(
                "branch step too large: moved {:.3e} against guard {:.3e}",
                dist, guard
            )));
        }
        Ok(chosen)
    }
}

/// Value of the unit from the walker outputs.
pub fn unit_value(ctx: &Ctx, spec: &UnitSpec, x: &Cx, y: &Cx, lambda: &Cx) -> Cx {
    match spec.family {
        UnitFamily::XMinusZeta => {
            let zeta_j = unit_phase(ctx, spec.j as f64 / spec.n as f64);
            x.sub(ctx, &zeta_j)
        }
        UnitFamily::YMinusZeta => {
            let zeta_j = unit_phase(ctx, spec.j as f64 / spec.n as f64);
            y.sub(ctx, &zeta_j)
        }
        UnitFamily::XMinusEpsZetaY => {
            let phase = unit_phase(ctx, (2 * spec.j + 1) as f64 / (2.0 * spec.n as f64));
            x.sub(ctx, &phase.mul(ctx, y))
        }
        UnitFamily::LambdaItself => lambda.clone(),
    }
}

/// A product of unit powers sharing one Fermat level. The interesting
/// integrands are ratios: the c-cusp poles of the individual families cancel,
/// leaving a divisor supported on a single cusp pair.
#[derive(Clone, Debug)]
pub struct UnitProduct {
    pub factors: Vec<(UnitSpec, i32)>,
    /// The product's divisor is `level` times a primitive divisor.
    pub level: u64,
}

impl UnitProduct {
    pub fn single(spec: UnitSpec) -> Self {
        let level = spec.divisor_scale();
        UnitProduct {
            factors: vec![(spec, 1)],
            level,
        }
    }

    /// f+ = (y - zeta^j) / (x - eps zeta^k y), divisor N((a_j) - (c_k)).
    pub fn f_plus(n: u64, j: u64, k: u64) -> Result<Self> {
        Ok(UnitProduct {
            factors: vec![
                (UnitSpec::new(UnitFamily::YMinusZeta, j, n)?, 1),
                (UnitSpec::new(UnitFamily::XMinusEpsZetaY, k, n)?, -1),
            ],
            level: n,
        })
    }

    /// f- = (x - zeta^j) / (x - zeta^k), divisor N((b_j) - (b_k)).
    pub fn f_minus(n: u64, j: u64, k: u64) -> Result<Self> {
        Ok(UnitProduct {
            factors: vec![
                (UnitSpec::new(UnitFamily::XMinusZeta, j, n)?, 1),
                (UnitSpec::new(UnitFamily::XMinusZeta, k, n)?, -1),
            ],
            level: n,
        })
    }

    /// Largest root order appearing; the branch walker needs it.
    pub fn root_order(&self) -> u64 {
        self.factors
            .iter()
            .map(|(s, _)| match s.family {
                UnitFamily::LambdaItself => 1,
                _ => s.n,
            })
            .max()
            .unwrap_or(1)
    }

    pub fn value(&self, ctx: &Ctx, x: &Cx, y: &Cx, lambda: &Cx) -> Cx {
        let mut acc = Cx::one(ctx);
        for (spec, e) in &self.factors {
            let v = unit_value(ctx, spec, x, y, lambda);
            let p = v.powi(ctx, e.unsigned_abs());
            acc = if *e >= 0 { acc.mul(ctx, &p) } else { acc.div(ctx, &p) };
        }
        acc
    }
}

/// Walk a straight segment adaptively, splitting when the branch guard
/// trips. Returns the walker values at the target.
pub fn walk_segment(
    walker: &mut BranchWalker,
    ctx: &Ctx,
    target: &Cx,
    depth: u32,
) -> Result<(Cx, Cx, Cx)> {
    match walker.step_to(target) {
        Ok(v) => Ok(v),
        Err(Error::Unstable(_)) if depth > 0 => {
            let from = walker
                .position()
                .cloned()
                .ok_or_else(|| Error::Unstable("walker has no seed".into()))?;
            let mid = from.add(ctx, target).scale(ctx, &ctx.real(0.5));
            walk_segment(walker, ctx, &mid, depth - 1)?;
            walk_segment(walker, ctx, target, depth - 1)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roots_are_consistent() {
        let ctx = Ctx::new(192);
        let mut walker = BranchWalker::new(&ctx, 3);
        let z = Cx::from_f64(&ctx, 0.0, 10.0);
        let (x, y, lambda) = walker.step_to(&z).unwrap();
        // x^3 = lambda/(lambda-1), y^3 = 1/(1-lambda)
        let one_minus = Cx::one(&ctx).sub(&ctx, &lambda);
        let lx = lambda.neg(&ctx).div(&ctx, &one_minus);
        let d1 = ctx.to_f64(&x.powi(&ctx, 3).dist(&ctx, &lx));
        let d2 = ctx.to_f64(&y.powi(&ctx, 3).dist(&ctx, &one_minus.inv(&ctx)));
        assert!(d1 < 1e-40 && d2 < 1e-40, "d1 = {:e}, d2 = {:e}", d1, d2);
    }

    #[test]
    fn continuation_is_continuous() {
        let ctx = Ctx::new(128);
        let mut walker = BranchWalker::new(&ctx, 3);
        let mut prev: Option<Cx> = None;
        // March down towards the real axis; x should vary continuously.
        for k in 0..40 {
            let z = Cx::from_f64(&ctx, 0.4, 3.0 - 0.07 * k as f64);
            let (x, _, _) = walk_segment(&mut walker, &ctx, &z, 12).unwrap();
            if let Some(p) = prev {
                let d = ctx.to_f64(&x.dist(&ctx, &p));
                assert!(d < 0.8, "jump of size {} at step {}", d, k);
            }
            prev = Some(x);
        }
    }

    #[test]
    fn x_to_the_n_returns_after_loop() {
        // Around a closed loop high in the half-plane nothing winds, so the
        // continued branch returns to its start value.
        let ctx = Ctx::new(128);
        let mut walker = BranchWalker::new(&ctx, 5);
        let center = Cx::from_f64(&ctx, 0.0, 2.0);
        let start = walker.step_to(&center).unwrap().0;
        let steps = 24;
        for k in 1..=steps {
            let t = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
            let z = Cx::from_f64(&ctx, 0.3 * t.sin(), 2.0 + 0.3 * (1.0 - t.cos()));
            walk_segment(&mut walker, &ctx, &z, 10).unwrap();
        }
        let back = walker.step_to(&center).unwrap().0;
        let d = ctx.to_f64(&start.dist(&ctx, &back));
        assert!(d < 1e-20, "loop drift {}", d);
    }

    #[test]
    fn unit_family_parsing() {
        assert_eq!(UnitFamily::parse("y").unwrap(), UnitFamily::YMinusZeta);
        assert!(UnitFamily::parse("zzz").is_err());
        assert!(UnitSpec::new(UnitFamily::XMinusZeta, 3, 3).is_err());
        assert_eq!(
            UnitSpec::new(UnitFamily::YMinusZeta, 1, 3).unwrap().divisor_scale(),
            3
        );
    }
}
