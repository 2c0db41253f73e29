//! Truncated Kloosterman zeta functions, S_D sums, Scholl coefficients and
//! scattering differences.
//!
//! phi_{jk,r}(s) = sum over the double cosets Gamma_j \ Gamma / Gamma_k of
//! e^(2 pi i r d / c) / c^(2s), where (c, d) is the bottom row of
//! sigma_j^{-1} sigma sigma_k normalized to c > 0. Double cosets with
//! c <= c_max are enumerated by scanning coprime pairs: for each c and each
//! d mod (c h_k) coprime to c, the lift classes a mod (c h_j) with
//! a d = 1 (mod c) are tested for membership sigma_j M sigma_k^{-1} in Gamma
//! via the coset walk. Here h = 2 * (dessin width) is the SL_2(Z)-width of
//! the cusp, the index of its stabilizer conjugated to upper triangular form.
//!
//! Truncation is explicit in the contract: every estimate carries the crude
//! tail bound density * c_max^(2-2s) / (2s - 2). The c-sums are accumulated
//! in f64; the truncation error dominates float rounding by many orders of
//! magnitude at any reachable c_max.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::TruncationParams;
use crate::dessin::{Cusp, CuspKind, CuspTable, Dessin};
use crate::gamma2::{CuspPoint, Mat2};
use crate::homology::CuspDivisor;
use crate::{Error, Result};

/// Scaling data for a cusp: sigma with sigma(oo) in the cusp class, and the
/// SL_2(Z)-width h (stabilizer conjugates to +-T^h).
pub struct CuspData {
    pub sigma: Mat2,
    pub h: u64,
}

pub fn cusp_data(dessin: &Dessin, cusps: &CuspTable, cusp: Cusp) -> Result<CuspData> {
    let orbit = cusps.orbit(cusp)?;
    let rep = orbit.orbit[0];
    let g = &dessin.coset_representatives()[rep];
    let point = match cusp.kind {
        CuspKind::Zero => g.act_on_cusp(CuspPoint::integer(0)),
        CuspKind::One => g.act_on_cusp(CuspPoint::integer(1)),
        CuspKind::Infinity => g.act_on_cusp(CuspPoint::Infinity),
    };
    let sigma = super::contour::scaling_matrix(&point);
    Ok(CuspData {
        sigma,
        h: 2 * orbit.width() as u64,
    })
}

/// One admitted double coset: the (c, d mod c) data entering the summand.
#[derive(Clone, Copy, Debug)]
pub struct ScanTerm {
    pub c: u64,
    pub d_mod_c: u64,
}

/// Enumerate the double cosets with 0 < c <= c_max.
pub fn scan_double_cosets(
    dessin: &Dessin,
    cusps: &CuspTable,
    j: Cusp,
    k: Cusp,
    c_max: u32,
) -> Result<Vec<ScanTerm>> {
    let dj = cusp_data(dessin, cusps, j)?;
    let dk = cusp_data(dessin, cusps, k)?;
    let sigma_j = dj.sigma;
    let sigma_k_inv = dk.sigma.inv();
    let mut terms = Vec::new();
    for c in 1..=c_max as u64 {
        let cb = BigInt::from(c);
        for d in 0..c * dk.h {
            if c.gcd(&(d % c.max(1))) != 1 && c > 1 {
                continue;
            }
            if c == 1 || (d % c).gcd(&c) == 1 {
                let db = BigInt::from(d);
                // a0 = d^{-1} mod c
                let a0 = if c == 1 {
                    BigInt::zero()
                } else {
                    let e = BigInt::from(d % c).extended_gcd(&cb);
                    e.x.mod_floor(&cb)
                };
                for t in 0..dj.h {
                    let a = &a0 + &cb * BigInt::from(t);
                    let b = (&a * &db - BigInt::one()) / &cb;
                    let m = Mat2 {
                        a,
                        b,
                        c: cb.clone(),
                        d: db.clone(),
                    };
                    let sigma = &(&sigma_j * &m) * &sigma_k_inv;
                    if crate::gamma2::is_gamma2(&sigma) && dessin.coset_of(&sigma)? == 0 {
                        terms.push(ScanTerm { c, d_mod_c: d % c });
                    }
                }
            }
        }
    }
    Ok(terms)
}

/// A truncated estimate with an explicit tail heuristic.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct PhiEstimate {
    pub re: f64,
    pub im: f64,
    /// density * c_max^(2-2s) / (2s-2)
    pub tail: f64,
    pub terms: usize,
}

/// Evaluate the truncated phi sum from a scan.
pub fn phi_from_scan(terms: &[ScanTerm], r: i64, s: f64, c_max: u32) -> PhiEstimate {
    let mut re = 0.0;
    let mut im = 0.0;
    for t in terms {
        let w = (t.c as f64).powf(-2.0 * s);
        let ang = 2.0 * std::f64::consts::PI * r as f64 * t.d_mod_c as f64 / t.c as f64;
        re += w * ang.cos();
        im += w * ang.sin();
    }
    let density = 2.0 * terms.len() as f64 / (c_max as f64).powi(2);
    let tail = if s > 1.0 {
        density * (c_max as f64).powf(2.0 - 2.0 * s) / (2.0 * s - 2.0)
    } else {
        density * (c_max as f64).powf(2.0 - 2.0 * s)
    };
    PhiEstimate {
        re,
        im,
        tail,
        terms: terms.len(),
    }
}

/// phi_{jk,r}(s) truncated at c_max.
pub fn phi_truncated(
    dessin: &Dessin,
    cusps: &CuspTable,
    j: Cusp,
    k: Cusp,
    r: i64,
    s: f64,
    c_max: u32,
) -> Result<PhiEstimate> {
    if s <= 1.0 && r == 0 {
        // the r = 0 series genuinely diverges at s = 1
        if s < 1.0 {
            return Err(Error::OutOfRange("phi needs s >= 1".into()));
        }
    }
    let terms = scan_double_cosets(dessin, cusps, j, k, c_max)?;
    Ok(phi_from_scan(&terms, r, s, c_max))
}

/// Classify a boundary point: its Gamma-cusp, via the parity of the reduced
/// fraction and an explicit Gamma(2) matrix moving the standard cusp there.
pub fn classify_point(dessin: &Dessin, cusps: &CuspTable, x: &CuspPoint) -> Result<Cusp> {
    let (g, kind) = gamma2_matrix_to(x)?;
    let coset = dessin.coset_of(&g)?;
    Ok(cusps.cusp_of(kind, coset).cusp)
}

/// A Gamma(2) matrix g and a kind in {0, 1, oo} with g * (standard point) = x.
pub fn gamma2_matrix_to(x: &CuspPoint) -> Result<(Mat2, CuspKind)> {
    let (p, q) = match x {
        CuspPoint::Infinity => (BigInt::one(), BigInt::zero()),
        CuspPoint::Rational(p, q) => (p.clone(), q.clone()),
    };
    let p_odd = p.bit(0);
    let q_odd = q.bit(0);
    let m = if p_odd && !q_odd {
        // infinity class: first column (p, q)
        let e = p.extended_gcd(&q);
        let mut v = e.x.clone();
        let mut u = -e.y.clone();
        if u.bit(0) {
            u += &p;
            v += &q;
        }
        (
            Mat2 {
                a: p,
                b: u,
                c: q,
                d: v,
            },
            CuspKind::Infinity,
        )
    } else if !p_odd && q_odd {
        // zero class: second column (p, q); aq - cp = 1
        let e = q.extended_gcd(&p);
        let mut a = e.x.clone();
        let mut c = -e.y.clone();
        if c.bit(0) {
            a += &p;
            c += &q;
        }
        (
            Mat2 {
                a,
                b: p,
                c,
                d: q,
            },
            CuspKind::Zero,
        )
    } else if p_odd && q_odd {
        // one class: column sums (p, q); aq - cp = 1 with a odd, c even
        let e = q.extended_gcd(&p);
        let mut a = e.x.clone();
        let mut c = -e.y.clone();
        if !a.bit(0) {
            a += &p;
            c += &q;
        }
        let b = &p - &a;
        let d = &q - &c;
        (
            Mat2 { a, b, c, d },
            CuspKind::One,
        )
    } else {
        return Err(Error::Parse(format!("point {} is not reduced", x)));
    };
    debug_assert!(crate::gamma2::is_gamma2(&m.0));
    Ok(m)
}

/// S_D estimate and its refinement diagnostics.
#[derive(Clone, Debug, serde::Serialize)]
pub struct SdEstimate {
    pub re: f64,
    pub im: f64,
    pub error: f64,
    /// (c_max, r_max, eps, re, im) at each refinement level.
    pub diagnostics: Vec<(u32, u32, f64, f64, f64)>,
}

/// The Kloosterman-zeta generating sum
/// S_D(x) = (1/2 pi i) sum_j m_j sum_{r <= r_max} phi_{jj,r}(1) q^r
/// evaluated at q = e^(2 pi i (x + i eps)), with an eps -> 0 radial approach.
pub fn sd_estimate(
    dessin: &Dessin,
    cusps: &CuspTable,
    d: &CuspDivisor,
    x: &CuspPoint,
    params: &TruncationParams,
) -> Result<SdEstimate> {
    if !d.degree().is_zero() {
        return Err(Error::NonzeroDegree(format!("{}", d)));
    }
    let at = classify_point(dessin, cusps, x)?;
    if !d.coeff(&at).is_zero() {
        return Err(Error::WrongSupport(format!(
            "S_D needs m_(Gamma x) = 0 but x lies on {} with coefficient {}",
            at,
            d.coeff(&at)
        )));
    }
    let x_f = match x {
        CuspPoint::Infinity => {
            return Err(Error::WrongSupport(
                "S_D is evaluated at finite rational points".into(),
            ))
        }
        CuspPoint::Rational(p, q) => {
            crate::eisenstein::bigint_to_f64(p) / crate::eisenstein::bigint_to_f64(q)
        }
    };

    let mut scans = Vec::new();
    for (cusp, m) in d.support() {
        let terms = scan_double_cosets(dessin, cusps, *cusp, *cusp, params.c_max)?;
        scans.push((crate::eisenstein::rat_to_f64(m), terms));
    }

    let eval = |c_max: u32, r_max: u32, eps: f64| -> (f64, f64) {
        // sum_j m_j sum_r phi_{jj,r}(1) e^(2 pi i r x) e^(-2 pi r eps) / (2 pi i)
        let mut acc = (0.0f64, 0.0f64);
        for (m, terms) in &scans {
            let cut: Vec<ScanTerm> = terms.iter().copied().filter(|t| t.c <= c_max as u64).collect();
            for r in 1..=r_max as i64 {
                let phi = phi_from_scan(&cut, r, 1.0, c_max);
                let damp = (-2.0 * std::f64::consts::PI * r as f64 * eps).exp();
                let ang = 2.0 * std::f64::consts::PI * r as f64 * x_f;
                let qr = (damp * ang.cos(), damp * ang.sin());
                acc.0 += m * (phi.re * qr.0 - phi.im * qr.1);
                acc.1 += m * (phi.re * qr.1 + phi.im * qr.0);
            }
        }
        // divide by 2 pi i
        let two_pi = 2.0 * std::f64::consts::PI;
        (acc.1 / two_pi, -acc.0 / two_pi)
    };

    let levels = [
        (params.c_max / 2, params.r_max / 2, params.eps * 2.0),
        (params.c_max, params.r_max, params.eps),
    ];
    let mut diagnostics = Vec::new();
    for &(c, r, e) in &levels {
        let c = c.max(1);
        let r = r.max(1);
        let (re, im) = eval(c, r, e);
        diagnostics.push((c, r, e, re, im));
    }
    let last = diagnostics[diagnostics.len() - 1];
    let prev = diagnostics[diagnostics.len() - 2];
    let error = ((last.3 - prev.3).powi(2) + (last.4 - prev.4).powi(2)).sqrt();
    Ok(SdEstimate {
        re: last.3,
        im: last.4,
        error,
        diagnostics,
    })
}

/// Scholl's q-expansion coefficient
/// a_r = -4 pi^2 r sum_j m_j phi_{j, Gamma oo, r}(1), truncated.
pub fn scholl_coefficient(
    dessin: &Dessin,
    cusps: &CuspTable,
    d: &CuspDivisor,
    r: u32,
    params: &TruncationParams,
) -> Result<(f64, f64, f64)> {
    if r == 0 {
        return Err(Error::OutOfRange("Scholl coefficients need r >= 1".into()));
    }
    if !d.degree().is_zero() {
        return Err(Error::NonzeroDegree(format!("{}", d)));
    }
    let infinity_cusp = cusps.cusp_of(CuspKind::Infinity, 0).cusp;
    let factor = -4.0 * std::f64::consts::PI.powi(2) * r as f64;
    let mut re = 0.0;
    let mut im = 0.0;
    let mut err = 0.0;
    for (cusp, m) in d.support() {
        let phi = phi_truncated(dessin, cusps, *cusp, infinity_cusp, r as i64, 1.0, params.c_max)?;
        let mf = crate::eisenstein::rat_to_f64(m);
        re += mf * phi.re;
        im += mf * phi.im;
        err += mf.abs() * phi.tail;
    }
    Ok((factor * re, factor * im, factor.abs() * err))
}

/// Scattering-constant difference C_{j,k1} - C_{j,k2} as the limit
/// lim_{s->1} pi (phi_{j k1, 0}(s) - phi_{j k2, 0}(s)), by Richardson
/// extrapolation on a geometric s-grid; the pole cancels in the difference.
pub fn scattering_difference(
    dessin: &Dessin,
    cusps: &CuspTable,
    j: Cusp,
    k1: Cusp,
    k2: Cusp,
    params: &TruncationParams,
) -> Result<(f64, f64)> {
    if k1 == k2 {
        return Ok((0.0, 0.0));
    }
    let t1 = scan_double_cosets(dessin, cusps, j, k1, params.c_max)?;
    let t2 = scan_double_cosets(dessin, cusps, j, k2, params.c_max)?;
    // The admitted (c, d) sets are s-independent: count per c once.
    let mut counts = vec![0i64; params.c_max as usize + 1];
    for t in &t1 {
        counts[t.c as usize] += 1;
    }
    for t in &t2 {
        counts[t.c as usize] -= 1;
    }
    let g = |s: f64| -> f64 {
        let mut acc = 0.0;
        for (c, &n) in counts.iter().enumerate().skip(1) {
            if n != 0 {
                acc += n as f64 * (c as f64).powf(-2.0 * s);
            }
        }
        std::f64::consts::PI * acc
    };
    // s_i = 1 + (s0 - 1) / 2^i; linear Richardson then one more level.
    let s0 = params.s.max(1.0 + 1e-6);
    let gs: Vec<f64> = (0..4).map(|i| g(1.0 + (s0 - 1.0) / 2f64.powi(i))).collect();
    let r1: Vec<f64> = (0..3).map(|i| 2.0 * gs[i + 1] - gs[i]).collect();
    let r2: Vec<f64> = (0..2).map(|i| (4.0 * r1[i + 1] - r1[i]) / 3.0).collect();
    let value = r2[1];
    let tail = {
        // tails of the two phi sums at the smallest s
        let s_min = 1.0 + (s0 - 1.0) / 8.0;
        let density = 2.0 * (t1.len() + t2.len()) as f64 / (params.c_max as f64).powi(2);
        std::f64::consts::PI * density * (params.c_max as f64).powf(2.0 - 2.0 * s_min)
            / (2.0 * s_min - 2.0).max(1e-9)
    };
    let error = (r2[1] - r2[0]).abs() + tail;
    Ok((value, error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg;

    fn gamma2_setup() -> (Dessin, CuspTable) {
        let d = Dessin::gamma2();
        let c = d.cusps();
        (d, c)
    }

    #[test]
    fn phi_empty_truncation() {
        let (d, c) = gamma2_setup();
        let inf = c.cusp_of(CuspKind::Infinity, 0).cusp;
        let phi = phi_truncated(&d, &c, inf, inf, 0, 2.0, 0).unwrap();
        assert_eq!(phi.terms, 0);
        assert_eq!(phi.re, 0.0);
    }

    /// Independent brute-force oracle for Gamma(2), j = k = infinity:
    /// enumerate matrices (a b; c d) in Gamma(2) with c in (0, c_max] and
    /// count classes with d mod 2c and a mod 2c (sigma_j = identity, h = 2).
    #[test]
    fn phi_matches_brute_force_gamma2() {
        let (d, c) = gamma2_setup();
        let inf = c.cusp_of(CuspKind::Infinity, 0).cusp;
        let c_max = 6u32;
        let mut expected = 0.0f64;
        let s = 2.0;
        for cc in 1..=c_max as i64 {
            for dd in 0..2 * cc {
                for aa in 0..2 * cc {
                    // need b with aa*dd - b*cc = 1 and the Gamma(2) parity
                    if (aa * dd - 1) % cc != 0 {
                        continue;
                    }
                    let bb = (aa * dd - 1) / cc;
                    let m = Mat2::new(aa, bb, cc, dd);
                    if crate::gamma2::is_gamma2(&m) {
                        expected += (cc as f64).powf(-2.0 * s);
                    }
                }
            }
        }
        let phi = phi_truncated(&d, &c, inf, inf, 0, s, c_max).unwrap();
        assert!(
            (phi.re - expected).abs() < 1e-12,
            "scan {} vs brute force {}",
            phi.re,
            expected
        );
        assert!(phi.im.abs() < 1e-12);
    }

    #[test]
    fn phi_monotone_in_c_max_for_r0() {
        let (d, c) = gamma2_setup();
        let inf = c.cusp_of(CuspKind::Infinity, 0).cusp;
        let mut prev = 0.0;
        for c_max in [2u32, 4, 8, 16, 32] {
            let phi = phi_truncated(&d, &c, inf, inf, 0, 2.0, c_max).unwrap();
            assert!(phi.re >= prev - 1e-15, "not monotone at c_max = {}", c_max);
            prev = phi.re;
        }
    }

    #[test]
    fn classify_points() {
        let d = Dessin::from_fermat(3).unwrap();
        let cusps = d.cusps();
        // infinity itself
        let at = classify_point(&d, &cusps, &CuspPoint::Infinity).unwrap();
        assert_eq!(at, cusps.cusp_of(CuspKind::Infinity, 0).cusp);
        // 0 and 1
        let at = classify_point(&d, &cusps, &CuspPoint::integer(0)).unwrap();
        assert_eq!(at, cusps.cusp_of(CuspKind::Zero, 0).cusp);
        let at = classify_point(&d, &cusps, &CuspPoint::integer(1)).unwrap();
        assert_eq!(at, cusps.cusp_of(CuspKind::One, 0).cusp);
        // A translate: A(0) = 2 lies on the zero cusp of coset piA(0)... the
        // class of g = A with g 0 = 2.
        let at2 = classify_point(
            &d,
            &cusps,
            &CuspPoint::Rational(2.into(), 1.into()),
        )
        .unwrap();
        let expect = cusps.cusp_of(CuspKind::Zero, d.coset_of(&Mat2::gen_a()).unwrap()).cusp;
        assert_eq!(at2, expect);
    }

    #[test]
    fn sd_zero_divisor() {
        let d = Dessin::from_fermat(3).unwrap();
        let cusps = d.cusps();
        let params = TruncationParams {
            c_max: 20,
            r_max: 4,
            ..TruncationParams::default()
        };
        let est = sd_estimate(
            &d,
            &cusps,
            &CuspDivisor::zero(),
            &CuspPoint::Rational(1.into(), 3.into()),
            &params,
        )
        .unwrap();
        assert_eq!(est.re, 0.0);
        assert_eq!(est.im, 0.0);
    }

    #[test]
    fn sd_rejects_support_point() {
        let d = Dessin::gamma2();
        let cusps = d.cusps();
        let zero = cusps.cusp_of(CuspKind::Zero, 0).cusp;
        let inf = cusps.cusp_of(CuspKind::Infinity, 0).cusp;
        let mut div = CuspDivisor::single(zero);
        div.add(inf, linalg::rat(-1));
        let params = TruncationParams::default();
        // x = 0 lies on the zero cusp, which carries coefficient 1.
        assert!(sd_estimate(&d, &cusps, &div, &CuspPoint::integer(0), &params).is_err());
    }

    #[test]
    fn scattering_antisymmetry() {
        let d = Dessin::from_fermat(3).unwrap();
        let cusps = d.cusps();
        let ones = cusps.boundary_minus();
        let plus = cusps.boundary_plus();
        let params = TruncationParams {
            c_max: 30,
            ..TruncationParams::default()
        };
        let (v12, _) =
            scattering_difference(&d, &cusps, plus[0], ones[0], ones[1], &params).unwrap();
        let (v21, _) =
            scattering_difference(&d, &cusps, plus[0], ones[1], ones[0], &params).unwrap();
        assert!((v12 + v21).abs() < 1e-12);
        let (same, _) =
            scattering_difference(&d, &cusps, plus[0], ones[0], ones[0], &params).unwrap();
        assert_eq!(same, 0.0);
    }
}
