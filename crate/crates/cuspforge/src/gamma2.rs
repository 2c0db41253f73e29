//! Exact arithmetic in SL_2(Z) and the word problem in Gamma(2).
//!
//! The principal congruence subgroup Gamma(2) consists of the integer matrices
//! congruent to the identity mod 2. Its image PGamma(2) in PSL_2(Z) is free on
//!
//! ```text
//!   A = [1 2]      B = [1 0]
//!       [0 1]          [2 1]
//! ```
//!
//! so every m in Gamma(2) factors uniquely as +/- a reduced word in A, B.
//! The decomposition here is the continued-fraction style reduction: multiply
//! on the right by A^k or B^k so that the larger column strictly shrinks, and
//! read the word off backwards. Entries grow exponentially in word length,
//! hence `BigInt` throughout.

use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::{Error, Result};

/// A 2x2 integer matrix, normally of determinant 1.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat2 {
    pub a: BigInt,
    pub b: BigInt,
    pub c: BigInt,
    pub d: BigInt,
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {}; {} {}]", self.a, self.b, self.c, self.d)
    }
}

impl fmt::Display for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} {}; {} {}]", self.a, self.b, self.c, self.d)
    }
}

impl Mat2 {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2 {
            a: a.into(),
            b: b.into(),
            c: c.into(),
            d: d.into(),
        }
    }

    pub fn identity() -> Self {
        Mat2::new(1, 0, 0, 1)
    }

    /// A = [1 2; 0 1], the free generator translating by 2.
    pub fn gen_a() -> Self {
        Mat2::new(1, 2, 0, 1)
    }

    /// B = [1 0; 2 1], the other free generator.
    pub fn gen_b() -> Self {
        Mat2::new(1, 0, 2, 1)
    }

    /// S = [0 1; -1 0], order 4 in SL_2(Z).
    pub fn gen_s() -> Self {
        Mat2::new(0, 1, -1, 0)
    }

    /// U = [0 1; -1 1]; permutes the cusps 0, 1, infinity cyclically.
    pub fn gen_u() -> Self {
        Mat2::new(0, 1, -1, 1)
    }

    /// A^k = [1 2k; 0 1].
    pub fn gen_a_pow(k: i64) -> Self {
        Mat2::new(1, 2 * k, 0, 1)
    }

    /// B^k = [1 0; 2k 1].
    pub fn gen_b_pow(k: i64) -> Self {
        Mat2::new(1, 0, 2 * k, 1)
    }

    pub fn det(&self) -> BigInt {
        &self.a * &self.d - &self.b * &self.c
    }

    pub fn is_identity(&self) -> bool {
        self.a.is_one() && self.b.is_zero() && self.c.is_zero() && self.d.is_one()
    }

    pub fn is_minus_identity(&self) -> bool {
        self.neg().is_identity()
    }

    pub fn neg(&self) -> Self {
        Mat2 {
            a: -&self.a,
            b: -&self.b,
            c: -&self.c,
            d: -&self.d,
        }
    }

    pub fn inv(&self) -> Self {
        // requires det = 1
        Mat2 {
            a: self.d.clone(),
            b: -&self.b,
            c: -&self.c,
            d: self.a.clone(),
        }
    }

    /// Entries reduced mod 2, packed as (a,b,c,d) bits. Distinguishes the six
    /// classes of SL_2(F_2).
    pub fn mod2_key(&self) -> (u8, u8, u8, u8) {
        let bit = |x: &BigInt| if x.bit(0) { 1 } else { 0 };
        (bit(&self.a), bit(&self.b), bit(&self.c), bit(&self.d))
    }

    /// Largest absolute value among the four entries.
    pub fn max_abs_entry(&self) -> BigInt {
        let mut m = self.a.abs();
        for e in [&self.b, &self.c, &self.d] {
            let v = e.abs();
            if v > m {
                m = v;
            }
        }
        m
    }

    /// Serialization form `[a, b, c, d]`.
    pub fn to_array(&self) -> [BigInt; 4] {
        [
            self.a.clone(),
            self.b.clone(),
            self.c.clone(),
            self.d.clone(),
        ]
    }

    pub fn from_array(v: &[BigInt; 4]) -> Self {
        Mat2 {
            a: v[0].clone(),
            b: v[1].clone(),
            c: v[2].clone(),
            d: v[3].clone(),
        }
    }

    /// Image of the boundary point under the Moebius action. `None` encodes
    /// the point at infinity, `Some((p, q))` the reduced fraction p/q.
    pub fn act_on_cusp(&self, point: CuspPoint) -> CuspPoint {
        let (p, q) = match point {
            CuspPoint::Infinity => (BigInt::one(), BigInt::zero()),
            CuspPoint::Rational(p, q) => (p, q),
        };
        let num = &self.a * &p + &self.b * &q;
        let den = &self.c * &p + &self.d * &q;
        CuspPoint::reduced(num, den)
    }
}

impl Mul for &Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: &Mat2) -> Mat2 {
        Mat2 {
            a: &self.a * &rhs.a + &self.b * &rhs.c,
            b: &self.a * &rhs.b + &self.b * &rhs.d,
            c: &self.c * &rhs.a + &self.d * &rhs.c,
            d: &self.c * &rhs.b + &self.d * &rhs.d,
        }
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        &self * &rhs
    }
}

/// A point of P^1(Q), the boundary of the upper half-plane.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum CuspPoint {
    Infinity,
    /// Reduced fraction p/q with q > 0.
    Rational(BigInt, BigInt),
}

impl CuspPoint {
    pub fn integer(n: i64) -> Self {
        CuspPoint::Rational(n.into(), BigInt::one())
    }

    fn reduced(p: BigInt, q: BigInt) -> Self {
        if q.is_zero() {
            return CuspPoint::Infinity;
        }
        let g = num_integer::gcd(p.clone(), q.clone());
        let (mut p, mut q) = (p / &g, q / g);
        if q.is_negative() {
            p = -p;
            q = -q;
        }
        CuspPoint::Rational(p, q)
    }
}

impl fmt::Display for CuspPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CuspPoint::Infinity => write!(f, "oo"),
            CuspPoint::Rational(p, q) => {
                if q.is_one() {
                    write!(f, "{}", p)
                } else {
                    write!(f, "{}/{}", p, q)
                }
            }
        }
    }
}

/// One of the two free generators of PGamma(2).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Gen {
    A,
    B,
}

/// A reduced word `sign * g1^e1 g2^e2 ...` in PGamma(2) x {+-1}.
///
/// Adjacent letters use different generators and all exponents are nonzero.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AbWord {
    pub sign: i8,
    pub letters: Vec<(Gen, i64)>,
}

impl AbWord {
    pub fn identity() -> Self {
        AbWord {
            sign: 1,
            letters: Vec::new(),
        }
    }

    pub fn single(g: Gen, e: i64) -> Self {
        let mut w = AbWord::identity();
        w.push(g, e);
        w
    }

    /// Append a letter, merging with the tail and dropping zero exponents.
    pub fn push(&mut self, g: Gen, e: i64) {
        if e == 0 {
            return;
        }
        if let Some(last) = self.letters.last_mut() {
            if last.0 == g {
                last.1 += e;
                if last.1 == 0 {
                    self.letters.pop();
                }
                return;
            }
        }
        self.letters.push((g, e));
    }

    /// Total A-exponent and B-exponent (the image in Z^2).
    pub fn abelianized(&self) -> (i64, i64) {
        let mut a = 0;
        let mut b = 0;
        for &(g, e) in &self.letters {
            match g {
                Gen::A => a += e,
                Gen::B => b += e,
            }
        }
        (a, b)
    }

    /// Letter count of the expanded word (sum of |exponents|).
    pub fn expanded_len(&self) -> u64 {
        self.letters.iter().map(|&(_, e)| e.unsigned_abs()).sum()
    }

    /// String form over {A, B, a, b} with lowercase meaning inverse and an
    /// optional leading '-' for the central sign, e.g. "-BAAb".
    pub fn to_plain_string(&self) -> String {
        let mut s = String::new();
        if self.sign < 0 {
            s.push('-');
        }
        for &(g, e) in &self.letters {
            let ch = match (g, e > 0) {
                (Gen::A, true) => 'A',
                (Gen::A, false) => 'a',
                (Gen::B, true) => 'B',
                (Gen::B, false) => 'b',
            };
            for _ in 0..e.unsigned_abs() {
                s.push(ch);
            }
        }
        s
    }

    pub fn from_plain_string(s: &str) -> Result<Self> {
        let mut w = AbWord::identity();
        let mut rest = s.trim();
        if let Some(stripped) = rest.strip_prefix('-') {
            w.sign = -1;
            rest = stripped;
        }
        for ch in rest.chars() {
            match ch {
                'A' => w.push(Gen::A, 1),
                'a' => w.push(Gen::A, -1),
                'B' => w.push(Gen::B, 1),
                'b' => w.push(Gen::B, -1),
                c if c.is_whitespace() => {}
                other => {
                    return Err(Error::Parse(format!(
                        "invalid word character {:?} (expected A, B, a, b)",
                        other
                    )))
                }
            }
        }
        Ok(w)
    }
}

impl fmt::Display for AbWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_plain_string())
    }
}

/// Membership test for Gamma(2): determinant 1 and congruent to the identity
/// mod 2 entrywise (-Id qualifies since -1 = 1 mod 2).
pub fn is_gamma2(m: &Mat2) -> bool {
    m.det().is_one() && m.mod2_key() == (1, 0, 0, 1)
}

/// Product of generator powers times the central sign.
pub fn evaluate_word(w: &AbWord) -> Mat2 {
    let mut m = Mat2::identity();
    for &(g, e) in &w.letters {
        let step = match g {
            Gen::A => Mat2::gen_a_pow(e),
            Gen::B => Mat2::gen_b_pow(e),
        };
        m = &m * &step;
    }
    if w.sign < 0 {
        m = m.neg();
    }
    m
}

/// Round-to-nearest quotient p/q for nonzero q. Ties cannot occur at the call
/// sites (parity of Gamma(2) entries), but round half away from zero anyway.
fn div_round_nearest(p: &BigInt, q: &BigInt) -> BigInt {
    let (p, q) = if q.is_negative() {
        (-p.clone(), -q.clone())
    } else {
        (p.clone(), q.clone())
    };
    let two_p: BigInt = &p * 2;
    let num = if two_p.is_negative() {
        two_p - &q
    } else {
        two_p + &q
    };
    num / (q * 2)
}

fn col_norms(m: &Mat2) -> (BigInt, BigInt) {
    (m.a.abs() + m.c.abs(), m.b.abs() + m.d.abs())
}

/// Decompose m in Gamma(2) as a signed reduced word in A, B.
///
/// Euclidean reduction: at each step multiply on the right by the generator
/// power that strictly shrinks the larger column, which strips the final
/// letter of the word. Freeness of PGamma(2) makes the result canonical.
pub fn decompose_ab(m: &Mat2) -> Result<AbWord> {
    Ok(decompose_ab_with_steps(m)?.0)
}

/// As [`decompose_ab`], also returning the number of reduction steps taken.
pub fn decompose_ab_with_steps(m: &Mat2) -> Result<(AbWord, usize)> {
    if !is_gamma2(m) {
        return Err(Error::NotGamma2(format!("{}", m)));
    }
    let mut cur = m.clone();
    let mut rev_letters: Vec<(Gen, i64)> = Vec::new();
    let mut steps = 0usize;
    loop {
        if cur.b.is_zero() && cur.c.is_zero() {
            break;
        }
        steps += 1;
        let (n1, n2) = col_norms(&cur);
        // Shrinking column 1 means right-multiplying by B^k; column 2 by A^k.
        // The shift k comes from whichever row has a nonzero divisor entry
        // (a and d are odd, so the A-strip and the B-strip fallback exist).
        let (g, k, next) = if n1 > n2 {
            let k = if cur.b.is_zero() {
                div_round_nearest(&-&cur.c, &(&cur.d * 2))
            } else {
                div_round_nearest(&-&cur.a, &(&cur.b * 2))
            };
            let next = &cur * &Mat2::gen_b_pow_big(&k);
            (Gen::B, k, next)
        } else {
            let k = div_round_nearest(&-&cur.b, &(&cur.a * 2));
            let next = &cur * &Mat2::gen_a_pow_big(&k);
            (Gen::A, k, next)
        };
        let (m1, m2) = col_norms(&next);
        let before = n1.max(n2);
        let after = m1.max(m2);
        if after >= before {
            // Cannot happen for genuine Gamma(2) input; guards invalid data.
            return Err(Error::NotGamma2(format!(
                "reduction stalled at {} (not in Gamma(2)?)",
                cur
            )));
        }
        let k_i64 = i64::try_from(&k).map_err(|_| {
            Error::Parse(format!("generator exponent {} exceeds i64 range", k))
        })?;
        // cur = next * g^{-k}, so the stripped final letter is g^{-k}.
        rev_letters.push((g, -k_i64));
        cur = next;
    }
    let mut word = AbWord::identity();
    word.sign = if cur.is_identity() { 1 } else { -1 };
    for (g, e) in rev_letters.into_iter().rev() {
        word.push(g, e);
    }
    Ok((word, steps))
}

impl Mat2 {
    fn gen_a_pow_big(k: &BigInt) -> Self {
        Mat2 {
            a: BigInt::one(),
            b: k * 2,
            c: BigInt::zero(),
            d: BigInt::one(),
        }
    }

    fn gen_b_pow_big(k: &BigInt) -> Self {
        Mat2 {
            a: BigInt::one(),
            b: BigInt::zero(),
            c: k * 2,
            d: BigInt::one(),
        }
    }
}

/// Image of m under PGamma(2) -> (Z/N)^2, A -> (1,0), B -> (0,1).
pub fn abelianization_mod(m: &Mat2, n: u64) -> Result<(u64, u64)> {
    if n == 0 {
        return Err(Error::Parse("modulus N must be positive".into()));
    }
    let w = decompose_ab(m)?;
    let (a, b) = w.abelianized();
    let n_i = n as i64;
    Ok((a.rem_euclid(n_i) as u64, b.rem_euclid(n_i) as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gamma2_membership() {
        assert!(is_gamma2(&Mat2::gen_a()));
        assert!(is_gamma2(&Mat2::gen_b()));
        assert!(!is_gamma2(&Mat2::gen_s()));
        assert!(is_gamma2(&Mat2::identity().neg()));
        assert!(!is_gamma2(&Mat2::gen_u()));
    }

    #[test]
    fn evaluate_word_basics() {
        assert_eq!(evaluate_word(&AbWord::single(Gen::A, 1)), Mat2::gen_a());
        assert_eq!(
            evaluate_word(&AbWord::single(Gen::B, -1)),
            Mat2::new(1, 0, -2, 1)
        );
        // B * A = [1 2; 2 5], independent re-multiplication.
        let mut w = AbWord::identity();
        w.push(Gen::B, 1);
        w.push(Gen::A, 1);
        assert_eq!(evaluate_word(&w), Mat2::new(1, 2, 2, 5));
    }

    #[test]
    fn decompose_simple() {
        let w = decompose_ab(&Mat2::gen_a()).unwrap();
        assert_eq!(w, AbWord::single(Gen::A, 1));

        let w = decompose_ab(&Mat2::identity().neg()).unwrap();
        assert_eq!(w.sign, -1);
        assert!(w.letters.is_empty());

        let w = decompose_ab(&Mat2::new(1, 2, 2, 5)).unwrap();
        assert_eq!(w.to_plain_string(), "BA");
        assert_eq!(evaluate_word(&w), Mat2::new(1, 2, 2, 5));
    }

    #[test]
    fn decompose_rejects_outsiders() {
        assert!(decompose_ab(&Mat2::gen_s()).is_err());
        assert!(decompose_ab(&Mat2::gen_u()).is_err());
    }

    #[test]
    fn abelianization_examples() {
        assert_eq!(abelianization_mod(&Mat2::gen_a(), 3).unwrap(), (1, 0));
        assert_eq!(
            abelianization_mod(&Mat2::identity().neg(), 5).unwrap(),
            (0, 0)
        );
        assert_eq!(abelianization_mod(&Mat2::new(1, 2, 2, 5), 3).unwrap(), (1, 1));
        assert!(abelianization_mod(&Mat2::gen_a(), 0).is_err());
    }

    #[test]
    fn word_string_roundtrip() {
        let w = AbWord::from_plain_string("-BAAb").unwrap();
        assert_eq!(w.sign, -1);
        assert_eq!(w.letters, vec![(Gen::B, 1), (Gen::A, 2), (Gen::B, -1)]);
        assert_eq!(w.to_plain_string(), "-BAAb");
        assert!(AbWord::from_plain_string("AXB").is_err());
    }

    fn arb_word() -> impl Strategy<Value = AbWord> {
        let letter = (prop_oneof![Just(Gen::A), Just(Gen::B)], -5i64..=5);
        (any::<bool>(), proptest::collection::vec(letter, 0..20)).prop_map(|(neg, raw)| {
            let mut w = AbWord::identity();
            w.sign = if neg { -1 } else { 1 };
            for (g, e) in raw {
                w.push(g, e);
            }
            w
        })
    }

    proptest! {
        #[test]
        fn roundtrip_word(w in arb_word()) {
            let m = evaluate_word(&w);
            let back = decompose_ab(&m).unwrap();
            prop_assert_eq!(back, w);
        }

        #[test]
        fn abelianization_is_homomorphism(w1 in arb_word(), w2 in arb_word()) {
            let n = 7u64;
            let m1 = evaluate_word(&w1);
            let m2 = evaluate_word(&w2);
            let prod = &m1 * &m2;
            let (a1, b1) = abelianization_mod(&m1, n).unwrap();
            let (a2, b2) = abelianization_mod(&m2, n).unwrap();
            let (ap, bp) = abelianization_mod(&prod, n).unwrap();
            prop_assert_eq!(ap, (a1 + a2) % n);
            prop_assert_eq!(bp, (b1 + b2) % n);
        }

        #[test]
        fn decompose_step_count_logarithmic(w in arb_word()) {
            let m = evaluate_word(&w);
            let (_, steps) = decompose_ab_with_steps(&m).unwrap();
            let bits = m.max_abs_entry().bits();
            prop_assert!(steps as u64 <= 3 * bits + 8,
                "steps {} too large for {} bits", steps, bits);
        }
    }
}
