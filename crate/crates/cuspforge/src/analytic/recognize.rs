//! Rational recognition from intervals, by continued fractions.
//!
//! The decisive fact: the closest rationals with denominator <= B on either
//! side of a number x are convergents or semiconvergents of x. So an interval
//! around x contains a rational with denominator <= B iff one of those two
//! best approximations lies inside, and when the interval is narrower than
//! 1/(2 B^2) such a rational is unique.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

/// Outcome of a recognition attempt.
#[derive(Clone, PartialEq, Debug)]
pub enum Recognition {
    /// The unique rational with denominator <= bound inside the interval.
    Unique(Rat),
    /// Decisive: no rational with denominator <= bound meets the interval.
    NoneFound,
    /// The interval is too wide to certify uniqueness.
    Ambiguous,
}

/// Best rational approximations to x with denominator <= bound, from below
/// and from above (both equal x when x itself qualifies).
pub fn best_approximations(x: &Rat, bound: &BigInt) -> (Rat, Rat) {
    assert!(bound >= &BigInt::one());
    let a0 = x.floor();
    if x.denom() <= bound {
        return (x.clone(), x.clone());
    }
    // Convergents p/q of the continued fraction of x.
    let mut p_prev = BigInt::one();
    let mut q_prev = BigInt::zero();
    let mut p_cur = a0.numer().clone();
    let mut q_cur = BigInt::one();
    let mut frac = x - &a0;
    loop {
        // frac in (0, 1); next partial quotient from 1/frac.
        let y = frac.recip();
        let a = y.floor().numer().clone();
        let p_next = &a * &p_cur + &p_prev;
        let q_next = &a * &q_cur + &q_prev;
        if q_next > *bound {
            // Semiconvergent with the largest step staying under the bound.
            let t = (bound - &q_prev) / &q_cur;
            let side_a = Rat::new(p_cur.clone(), q_cur.clone());
            let cand = if t.is_zero() {
                Rat::new(p_prev.clone(), q_prev.clone())
            } else {
                Rat::new(&t * &p_cur + &p_prev, &t * &q_cur + &q_prev)
            };
            return if side_a < *x {
                (side_a, cand)
            } else {
                (cand, side_a)
            };
        }
        frac = y - Rat::from_integer(a);
        p_prev = std::mem::replace(&mut p_cur, p_next);
        q_prev = std::mem::replace(&mut q_cur, q_next);
        if frac.is_zero() {
            // x itself was reached; handled above unless reduction shrank it.
            let exact = Rat::new(p_cur, q_cur);
            return (exact.clone(), exact);
        }
    }
}

/// Recognize the unique rational p/q with q <= den_bound inside
/// [mid - half_width, mid + half_width].
pub fn rational_recognize(mid: &Rat, half_width: &Rat, den_bound: u64) -> Recognition {
    let bound = BigInt::from(den_bound);
    let half_width = half_width.abs();
    let lo = mid - &half_width;
    let hi = mid + &half_width;
    let (below, above) = best_approximations(mid, &bound);
    let mut inside: Vec<Rat> = Vec::new();
    for cand in [below, above] {
        if cand >= lo && cand <= hi && !inside.contains(&cand) {
            inside.push(cand);
        }
    }
    if inside.is_empty() {
        return Recognition::NoneFound;
    }
    // width < 1/(2 bound^2) guarantees at most one rational in the interval.
    let width = &half_width * Rat::from_integer(BigInt::from(2));
    let unique_cap = Rat::new(BigInt::one(), BigInt::from(2) * &bound * &bound);
    if width < unique_cap && inside.len() == 1 {
        Recognition::Unique(inside.remove(0))
    } else {
        Recognition::Ambiguous
    }
}

/// Float convenience wrapper: the interval is [x - tol, x + tol] exactly.
pub fn rational_recognize_f64(x: f64, tol: f64, den_bound: u64) -> Recognition {
    let Some(mid) = Rat::from_float(x) else {
        return Recognition::Ambiguous;
    };
    let Some(half) = Rat::from_float(tol.abs()) else {
        return Recognition::Ambiguous;
    };
    rational_recognize(&mid, &half, den_bound)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(n.into(), d.into())
    }

    #[test]
    fn recognizes_third() {
        let mid = Rat::new(333333333333i64.into(), 1000000000000i64.into());
        let half = rat(1, 1_000_000_000);
        match rational_recognize(&mid, &half, 10) {
            Recognition::Unique(r) => assert_eq!(r, rat(1, 3)),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn rejects_sqrt2_over_2() {
        // 0.70710678... has no denominator <= 1000 approximation within 1e-12.
        match rational_recognize_f64(std::f64::consts::FRAC_1_SQRT_2, 1e-12, 1000) {
            Recognition::NoneFound => {}
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn exact_quarter() {
        match rational_recognize(&rat(1, 4), &Rat::zero(), 10) {
            Recognition::Unique(r) => assert_eq!(r, rat(1, 4)),
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn wide_interval_is_ambiguous() {
        match rational_recognize(&rat(3, 10), &rat(1, 10), 1000) {
            Recognition::Ambiguous => {}
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn log10_two_truncation_rejected_at_million() {
        // 0.30102999566 as an exact decimal; nearest q <= 10^6 rational sits
        // around 1e-13 away, far outside a 1e-15 interval.
        let mid = Rat::new(30102999566i64.into(), 100000000000i64.into());
        let half = Rat::new(1.into(), 1000000000000000i64.into());
        match rational_recognize(&mid, &half, 1_000_000) {
            Recognition::NoneFound => {}
            other => panic!("{:?}", other),
        }
    }

    #[test]
    fn best_approximations_of_pi() {
        let pi = Rat::from_float(std::f64::consts::PI).unwrap();
        let (lo, hi) = best_approximations(&pi, &BigInt::from(120));
        assert!(lo < pi && pi < hi);
        assert_eq!(hi, rat(22, 7).max(rat(355, 113)).min(rat(22, 7)));
        // 333/106 from below, 22/7 from above at bound 120.
        assert_eq!(lo, rat(333, 106));
        assert_eq!(hi, rat(22, 7));
    }

    #[test]
    fn negative_values() {
        let mid = Rat::from_float(-0.6666666666).unwrap();
        let half = rat(1, 1_000_000);
        match rational_recognize(&mid, &half, 10) {
            Recognition::Unique(r) => assert_eq!(r, rat(-2, 3)),
            other => panic!("{:?}", other),
        }
    }
}
