//! Eisenstein cycles and Manin-Drinfeld torsion certificates.
//!
//! An Eisenstein cycle for a degree-0 cusp divisor D is the homology class
//! with boundary -D against which holomorphic differentials integrate to
//! zero. For Fermat curves the real part is exactly computable: the
//! coefficient of xi(g) depends only on the pair of cusps at the ends of the
//! g-geodesic, so a small linear system (the "separated ansatz") pins it
//! down. Two modes are kept side by side:
//!
//! - `PaperLiteral`: the displayed +-1/N (resp. +-1/2N) fiber combination.
//!   Its boundary is NOT +-D; reports flag this rather than hiding it.
//! - `Calibrated`: the unique separated vector with boundary exactly -D.
//!   The numeric contour oracle (module [`crate::analytic`]) referees.
//!
//! Torsion orders are computed modulo the integral lattice together with the
//! lambda-span of the relevant side, via Smith normal form on the quotient
//! lattice.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::dessin::{Cusp, CuspKind, Dessin};
use crate::gamma2::Mat2;
use crate::homology::{CuspDivisor, ManinPresentation, MixedHomology, Side, SymbolVector};
use crate::lattice;
use crate::linalg::{self, Rat, RowSpace};
use crate::{Error, Result};

/// Which construction produced a cycle.
#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CycleMode {
    PaperLiteral,
    Calibrated,
}

/// Outcome of comparing a cycle's boundary with its target divisor.
#[derive(Clone, PartialEq, Debug)]
pub enum BoundaryCheck {
    MinusD,
    PlusD,
    Fail { found: CuspDivisor },
}

impl BoundaryCheck {
    pub fn label(&self) -> String {
        match self {
            BoundaryCheck::MinusD => "-D".into(),
            BoundaryCheck::PlusD => "+D".into(),
            BoundaryCheck::Fail { found } => format!("FAIL (boundary = {})", found),
        }
    }
}

/// An Eisenstein cycle: exact real part in a xi basis, imaginary part stored
/// in lambda-coordinates over the opposite cusp set.
#[derive(Clone, Debug)]
pub struct EisensteinCycle {
    pub side: Side,
    pub divisor: CuspDivisor,
    pub real_part: SymbolVector<Rat>,
    /// Coefficients of lambda_opposite(j); zero for the exact constructions.
    pub imag_lambda: BTreeMap<Cusp, f64>,
    pub mode: CycleMode,
}

impl EisensteinCycle {
    pub fn boundary_check(&self, h: &MixedHomology) -> Result<BoundaryCheck> {
        let b = h.boundary(&self.real_part)?;
        let minus_d = self.divisor.neg();
        if b == minus_d {
            Ok(BoundaryCheck::MinusD)
        } else if b == self.divisor {
            Ok(BoundaryCheck::PlusD)
        } else {
            Ok(BoundaryCheck::Fail { found: b })
        }
    }

    pub fn imag_sup_norm(&self) -> f64 {
        self.imag_lambda
            .values()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

// ---------------------------------------------------------------------------
// Separated-ansatz solver
// ---------------------------------------------------------------------------

/// Solve for the unique side-plus vector of the form
/// F(g) = u(zero cusp of g) + v(infinity cusp of g)
/// whose boundary equals `target` (a degree-0 divisor on the plus cusps).
pub fn separated_plus_vector(
    h: &MixedHomology,
    target: &CuspDivisor,
) -> Result<SymbolVector<Rat>> {
    if !target.degree().is_zero() {
        return Err(Error::NonzeroDegree(format!("{}", target)));
    }
    if !target.supported_on(&[CuspKind::Zero, CuspKind::Infinity]) {
        return Err(Error::WrongSupport(format!(
            "separated plus ansatz needs a divisor on the plus cusps: {}",
            target
        )));
    }
    let zeros: Vec<Cusp> = h.cusps.zero.iter().map(|o| o.cusp).collect();
    let infs: Vec<Cusp> = h.cusps.infinity.iter().map(|o| o.cusp).collect();
    let nz = zeros.len();
    let ni = infs.len();
    let zpos = |c: Cusp| zeros.iter().position(|&x| x == c).unwrap();
    let ipos = |c: Cusp| infs.iter().position(|&x| x == c).unwrap();

    // Unknowns: u over zero cusps (columns 0..nz), v over infinity cusps.
    let cols = nz + ni;
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    for orbit in &h.cusps.infinity {
        let mut row = vec![Rat::zero(); cols];
        for &g in &orbit.orbit {
            row[zpos(h.cusps.cusp_of(CuspKind::Zero, g).cusp)] += linalg::rat(1);
        }
        row[nz + ipos(orbit.cusp)] += linalg::rat(orbit.width() as i64);
        rows.push(row);
        rhs.push(target.coeff(&orbit.cusp));
    }
    for orbit in &h.cusps.zero {
        let mut row = vec![Rat::zero(); cols];
        for &g in &orbit.orbit {
            row[nz + ipos(h.cusps.cusp_of(CuspKind::Infinity, g).cusp)] += linalg::rat(1);
        }
        row[zpos(orbit.cusp)] += linalg::rat(orbit.width() as i64);
        rows.push(row);
        rhs.push(-target.coeff(&orbit.cusp));
    }
    // Gauge: sum of u = 0.
    let mut gauge = vec![Rat::zero(); cols];
    for cell in gauge.iter_mut().take(nz) {
        *cell = linalg::rat(1);
    }
    rows.push(gauge);
    rhs.push(Rat::zero());

    let sol = solve_affine(rows, rhs)?;
    let mut f = SymbolVector::zero(Side::Plus, h.dessin.n());
    for g in 0..h.dessin.n() {
        let u = &sol[zpos(h.cusps.cusp_of(CuspKind::Zero, g).cusp)];
        let v = &sol[nz + ipos(h.cusps.cusp_of(CuspKind::Infinity, g).cusp)];
        f.coeffs[g] = u + v;
    }
    let got = h.boundary_plus(&f)?;
    if &got != target {
        return Err(Error::Invalid(format!(
            "separated plus ansatz is not solvable for this dessin: wanted boundary {}, got {}",
            target, got
        )));
    }
    Ok(f)
}

/// Solve for a side-minus vector of the form
/// F(g) = u(one cusp of g) + v(one cusp of g A^{-1})
/// with boundary `target` (degree-0 on the one-kind cusps), normalized to
/// mean zero. The boundary determines F up to an additive constant; the
/// constant rides on the lambda-span, so classes modulo loops are unaffected.
pub fn separated_minus_vector(
    h: &MixedHomology,
    target: &CuspDivisor,
) -> Result<SymbolVector<Rat>> {
    if !target.degree().is_zero() {
        return Err(Error::NonzeroDegree(format!("{}", target)));
    }
    if !target.supported_on(&[CuspKind::One]) {
        return Err(Error::WrongSupport(format!(
            "separated minus ansatz needs a divisor on the one-kind cusps: {}",
            target
        )));
    }
    let ones: Vec<Cusp> = h.cusps.one.iter().map(|o| o.cusp).collect();
    let n1 = ones.len();
    let opos = |c: Cusp| ones.iter().position(|&x| x == c).unwrap();
    let inv_a = |g: usize| h.dessin.apply_gen(g, crate::gamma2::Gen::A, -1);

    let cols = 2 * n1;
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    let mut rhs: Vec<Rat> = Vec::new();
    for orbit in &h.cusps.one {
        // sum_{g1 = q} F(g) - sum_{g(-1) = q} F(g) = target(q)
        let mut row = vec![Rat::zero(); cols];
        for g in 0..h.dessin.n() {
            let gq = h.cusps.cusp_of(CuspKind::One, g).cusp;
            let gq_prev = h.cusps.cusp_of(CuspKind::One, inv_a(g)).cusp;
            let mut weight = Rat::zero();
            if gq == orbit.cusp {
                weight += linalg::rat(1);
            }
            if gq_prev == orbit.cusp {
                weight -= linalg::rat(1);
            }
            if !weight.is_zero() {
                row[opos(gq)] += weight.clone();
                row[n1 + opos(gq_prev)] += weight;
            }
        }
        rows.push(row);
        rhs.push(target.coeff(&orbit.cusp));
    }
    // Gauges: sum u = 0 and mean F = 0 (i.e. sum over cosets of F = 0).
    let mut g1 = vec![Rat::zero(); cols];
    for cell in g1.iter_mut().take(n1) {
        *cell = linalg::rat(1);
    }
    rows.push(g1);
    rhs.push(Rat::zero());
    let mut g2 = vec![Rat::zero(); cols];
    for g in 0..h.dessin.n() {
        g2[opos(h.cusps.cusp_of(CuspKind::One, g).cusp)] += linalg::rat(1);
        g2[n1 + opos(h.cusps.cusp_of(CuspKind::One, inv_a(g)).cusp)] += linalg::rat(1);
    }
    rows.push(g2);
    rhs.push(Rat::zero());

    let sol = solve_affine(rows, rhs)?;
    let mut f = SymbolVector::zero(Side::Minus, h.dessin.n());
    for g in 0..h.dessin.n() {
        let u = &sol[opos(h.cusps.cusp_of(CuspKind::One, g).cusp)];
        let v = &sol[n1 + opos(h.cusps.cusp_of(CuspKind::One, inv_a(g)).cusp)];
        f.coeffs[g] = u + v;
    }
    let got = h.boundary_minus(&f)?;
    if &got != target {
        return Err(Error::Invalid(format!(
            "separated minus ansatz is not solvable for this dessin: wanted boundary {}, got {}",
            target, got
        )));
    }
    Ok(f)
}

/// Solve rows * x = rhs exactly; error when inconsistent. Underdetermined
/// directions are set to zero (callers add gauge rows to avoid them).
fn solve_affine(rows: Vec<Vec<Rat>>, rhs: Vec<Rat>) -> Result<Vec<Rat>> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut aug: Vec<Vec<Rat>> = rows
        .into_iter()
        .zip(rhs)
        .map(|(mut r, b)| {
            r.push(b);
            r
        })
        .collect();
    let pivots = linalg::rref(&mut aug);
    let mut x = vec![Rat::zero(); cols];
    for (row, &p) in aug.iter().zip(&pivots) {
        if p == cols {
            return Err(Error::Invalid("inconsistent linear system".into()));
        }
        x[p] = row[cols].clone();
    }
    Ok(x)
}

// ---------------------------------------------------------------------------
// Fermat cycles
// ---------------------------------------------------------------------------

/// Eisenstein cycle for D = (a_j) - (c_k) on the N-th Fermat curve.
pub fn fermat_cycle_ac(
    dessin: &Dessin,
    n: u64,
    j: u64,
    k: u64,
    mode: CycleMode,
    labeling: lattice::FermatLabeling,
) -> Result<EisensteinCycle> {
    if j >= n || k >= n {
        return Err(Error::OutOfRange(format!(
            "cusp indices ({}, {}) out of range for N = {}",
            j, k, n
        )));
    }
    let h = MixedHomology::new(dessin);
    let aj = lattice::fermat_cusp(n, labeling, lattice::FermatFamily::A, j)?;
    let ck = lattice::fermat_cusp(n, labeling, lattice::FermatFamily::C, k)?;
    let mut divisor = CuspDivisor::single(aj);
    divisor.add(ck, linalg::rat(-1));

    let real_part = match mode {
        CycleMode::PaperLiteral => {
            // +1/N on the fiber of a_j, -1/N on the fiber of c_k.
            let mut f = SymbolVector::zero(Side::Plus, dessin.n());
            let inv_n = Rat::new(BigInt::one(), BigInt::from(n));
            for &g in &h.cusps.orbit(aj)?.orbit {
                f.coeffs[g] += inv_n.clone();
            }
            for &g in &h.cusps.orbit(ck)?.orbit {
                f.coeffs[g] -= inv_n.clone();
            }
            f
        }
        CycleMode::Calibrated => separated_plus_vector(&h, &divisor.neg())?,
    };
    Ok(EisensteinCycle {
        side: Side::Plus,
        divisor,
        real_part,
        imag_lambda: BTreeMap::new(),
        mode,
    })
}

/// Eisenstein cycle for D = (b_j) - (b_k) on the N-th Fermat curve.
pub fn fermat_cycle_bb(
    dessin: &Dessin,
    n: u64,
    j: u64,
    k: u64,
    mode: CycleMode,
    labeling: lattice::FermatLabeling,
) -> Result<EisensteinCycle> {
    if j >= n || k >= n {
        return Err(Error::OutOfRange(format!(
            "cusp indices ({}, {}) out of range for N = {}",
            j, k, n
        )));
    }
    let h = MixedHomology::new(dessin);
    let bj = lattice::fermat_cusp(n, labeling, lattice::FermatFamily::B, j)?;
    let bk = lattice::fermat_cusp(n, labeling, lattice::FermatFamily::B, k)?;
    let mut divisor = CuspDivisor::single(bj);
    divisor.add(bk, linalg::rat(-1));

    let real_part = match mode {
        CycleMode::PaperLiteral => {
            let mut f = SymbolVector::zero(Side::Minus, dessin.n());
            let half_n = Rat::new(BigInt::one(), BigInt::from(2 * n));
            for (cusp, sign) in [(bj, 1i64), (bk, -1)] {
                let s = &half_n * linalg::rat(sign);
                for &g in &h.cusps.orbit(cusp)?.orbit {
                    // fiber g1 = cusp; the fiber g(-1) = cusp is its piA image
                    f.coeffs[g] += s.clone();
                    let shifted = dessin.pi_a()[g];
                    f.coeffs[shifted] -= s.clone();
                }
            }
            f
        }
        CycleMode::Calibrated => separated_minus_vector(&h, &divisor.neg())?,
    };
    Ok(EisensteinCycle {
        side: Side::Minus,
        divisor,
        real_part,
        imag_lambda: BTreeMap::new(),
        mode,
    })
}

// ---------------------------------------------------------------------------
// Quotient modulo the integral lattice plus the lambda-span
// ---------------------------------------------------------------------------

/// Coordinates of Q^n / lambda-span, together with the image of Z^n there.
/// Orders of cycle classes in the (generalized) Jacobian picture are read off
/// this quotient.
pub struct LambdaQuotient {
    space: RowSpace,
    coords: Vec<usize>,
    lattice_basis: Vec<Vec<Rat>>,
}

impl LambdaQuotient {
    /// `side` is the side of the vectors to be reduced; the lambda maps come
    /// from the opposite boundary set.
    pub fn new(h: &MixedHomology, side: Side) -> Result<Self> {
        let n = h.dessin.n();
        let rows: Vec<Vec<Rat>> = match side {
            Side::Plus => h
                .cusps
                .boundary_minus()
                .iter()
                .map(|&j| h.lambda_plus(j).map(|v| v.coeffs))
                .collect::<Result<_>>()?,
            Side::Minus => h
                .cusps
                .boundary_plus()
                .iter()
                .map(|&j| h.lambda_minus(j).map(|v| v.coeffs))
                .collect::<Result<_>>()?,
        };
        let space = RowSpace::from_rows(rows, n);
        let coords = space.complement_coords();
        // Lattice: the image of the standard basis of Z^n.
        let mut gens: Vec<Vec<Rat>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut e = vec![Rat::zero(); n];
            e[i] = linalg::rat(1);
            gens.push(project_coords(&space, &coords, &e));
        }
        let lattice_basis = lattice_basis_from_generators(gens)?;
        Ok(LambdaQuotient {
            space,
            coords,
            lattice_basis,
        })
    }

    pub fn rank(&self) -> usize {
        self.space.rank()
    }

    /// Quotient coordinates of a coefficient vector.
    pub fn project(&self, v: &[Rat]) -> Vec<Rat> {
        project_coords(&self.space, &self.coords, v)
    }

    /// Order of the class of v in Q^n / (Z^n + lambda-span).
    pub fn class_order(&self, v: &[Rat]) -> Result<BigInt> {
        lattice::class_order(&self.lattice_basis, &self.project(v))
    }

    /// Structure of the subgroup generated by several classes.
    pub fn classes_structure(&self, vs: &[Vec<Rat>]) -> Result<lattice::AbelianStructure> {
        let projected: Vec<Vec<Rat>> = vs.iter().map(|v| self.project(v)).collect();
        lattice::classes_structure(&self.lattice_basis, &projected)
    }
}

fn project_coords(space: &RowSpace, coords: &[usize], v: &[Rat]) -> Vec<Rat> {
    let reduced = space.reduce(v);
    coords.iter().map(|&c| reduced[c].clone()).collect()
}

/// Full-rank basis from a rational generating set (rows).
pub fn lattice_basis_from_generators(gens: Vec<Vec<Rat>>) -> Result<Vec<Vec<Rat>>> {
    let mut flat: Vec<Rat> = Vec::new();
    for g in &gens {
        flat.extend(g.iter().cloned());
    }
    let den = linalg::common_denominator(&flat);
    let scaled: Vec<Vec<BigInt>> = gens
        .iter()
        .map(|g| g.iter().map(|x| x.numer() * (&den / x.denom())).collect())
        .collect();
    let basis = lattice::row_basis(scaled);
    Ok(basis
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|x| Rat::new(x, den.clone()))
                .collect()
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Torsion verdicts
// ---------------------------------------------------------------------------

/// Result of a torsion test, with certificate or diagnostics.
#[derive(Clone, Debug)]
pub enum TorsionVerdict {
    Torsion {
        order: BigInt,
        /// Recognized rational coefficients (canonical representative).
        certificate: Vec<Rat>,
    },
    NotTorsion {
        /// Which coordinate resisted rational recognition, and its value.
        witness: String,
    },
    Indeterminate {
        reason: String,
    },
}

impl TorsionVerdict {
    pub fn is_torsion(&self) -> Option<bool> {
        match self {
            TorsionVerdict::Torsion { .. } => Some(true),
            TorsionVerdict::NotTorsion { .. } => Some(false),
            TorsionVerdict::Indeterminate { .. } => None,
        }
    }
}

/// Torsion test for an exact cycle: the class is rational by construction, so
/// the verdict is the order modulo the integral lattice plus the lambda-span,
/// provided the imaginary part vanishes.
pub fn torsion_order(
    quotient: &LambdaQuotient,
    cycle: &EisensteinCycle,
    imag_tol: f64,
) -> Result<TorsionVerdict> {
    let imag = cycle.imag_sup_norm();
    if imag > imag_tol {
        return Ok(TorsionVerdict::NotTorsion {
            witness: format!(
                "imaginary part has sup norm {:.3e} > {:.3e}",
                imag, imag_tol
            ),
        });
    }
    let order = quotient.class_order(&cycle.real_part.coeffs)?;
    Ok(TorsionVerdict::Torsion {
        order,
        certificate: quotient.project(&cycle.real_part.coeffs),
    })
}

// ---------------------------------------------------------------------------
// Divisor splitting and full-curve assembly
// ---------------------------------------------------------------------------

/// Split a degree-0 divisor D as -E0 + Einf with E0 supported on the
/// infinity/one cusps and Einf on the zero/one cusps, both of degree 0.
/// Canonical choice: E0 = -D|_inf + deg(D|_inf) [base].
pub fn split_divisor(d: &CuspDivisor, base: Cusp) -> Result<(CuspDivisor, CuspDivisor)> {
    if !d.degree().is_zero() {
        return Err(Error::NonzeroDegree(format!("{}", d)));
    }
    if base.kind != CuspKind::One {
        return Err(Error::WrongSupport(format!(
            "split base must be a one-kind cusp, got {}",
            base
        )));
    }
    let d_inf = d.restrict(CuspKind::Infinity);
    let deg_inf = d_inf.degree();
    let mut e0 = d_inf.neg();
    e0.add(base, deg_inf.clone());
    let mut einf = d.restrict(CuspKind::Zero);
    einf.add_divisor(&d.restrict(CuspKind::One), &linalg::rat(1));
    einf.add(base, deg_inf);
    debug_assert!(e0.degree().is_zero() && einf.degree().is_zero());
    Ok((e0, einf))
}

/// Supplies exact F-values (side-plus Eisenstein coefficients) for a divisor
/// on the plus cusps of a dessin. Implementations may fail for dessins where
/// no exact formula applies.
pub trait FProvider {
    fn f_values(&self, dessin: &Dessin, divisor: &CuspDivisor) -> Result<Vec<Rat>>;
}

/// Exact provider backed by the separated ansatz (valid for Fermat dessins
/// and their conjugates).
pub struct SeparatedProvider;

impl FProvider for SeparatedProvider {
    fn f_values(&self, dessin: &Dessin, divisor: &CuspDivisor) -> Result<Vec<Rat>> {
        let h = MixedHomology::new(dessin);
        Ok(separated_plus_vector(&h, &divisor.neg())?.coeffs)
    }
}

/// Dessin of the conjugate subgroup v Gamma v^{-1}, on the same index set:
/// the generators act through the words of v^{-1} A v and v^{-1} B v.
pub fn conjugate_dessin(dessin: &Dessin, v: &Mat2) -> Result<Dessin> {
    let vi = v.inv();
    let perm_of = |m: &Mat2| -> Result<Vec<usize>> {
        let w = crate::gamma2::decompose_ab(m)?;
        Ok((0..dessin.n()).map(|i| dessin.apply_word(i, &w)).collect())
    };
    let pa = perm_of(&(&(&vi * &Mat2::gen_a()) * v))?;
    let pb = perm_of(&(&(&vi * &Mat2::gen_b()) * v))?;
    Dessin::from_quotient_hom(pa, pb)
}

/// Transport a cusp of X_Gamma to the conjugate curve X_{v Gamma v^{-1}}:
/// the kind moves by the Moebius action of v on {0, 1, oo}, the underlying
/// coset index is preserved.
fn transport_cusp(
    conj: &crate::dessin::CuspTable,
    v_kind: impl Fn(CuspKind) -> CuspKind,
    cusp: Cusp,
    original: &crate::dessin::CuspTable,
) -> Result<Cusp> {
    let coset = original.orbit(cusp)?.orbit[0];
    Ok(conj.cusp_of(v_kind(cusp.kind), coset).cusp)
}

fn u_kind(kind: CuspKind) -> CuspKind {
    // U maps oo -> 0 -> 1 -> oo.
    match kind {
        CuspKind::Infinity => CuspKind::Zero,
        CuspKind::Zero => CuspKind::One,
        CuspKind::One => CuspKind::Infinity,
    }
}

fn u_inv_kind(kind: CuspKind) -> CuspKind {
    match kind {
        CuspKind::Infinity => CuspKind::One,
        CuspKind::One => CuspKind::Zero,
        CuspKind::Zero => CuspKind::Infinity,
    }
}

fn transport_divisor(
    d: &CuspDivisor,
    conj: &crate::dessin::CuspTable,
    v_kind: impl Fn(CuspKind) -> CuspKind + Copy,
    original: &crate::dessin::CuspTable,
) -> Result<CuspDivisor> {
    let mut out = CuspDivisor::zero();
    for (c, coeff) in d.support() {
        out.add(transport_cusp(conj, v_kind, *c, original)?, coeff.clone());
    }
    Ok(out)
}

/// Assemble the full-curve Eisenstein class of a degree-0 divisor D on all
/// cusps, as a vector over Gamma \ SL_2(Z) in the Manin presentation:
///
///   sum_g ( F_{U^{-1} Einf}(U^{-1} g) - F_{U E0}(U g) ) xi(g)
///
/// with both F extended by zero off Gamma(2). The result has boundary -D
/// (the crate-wide convention).
pub fn assemble_full_cycle(
    p: &ManinPresentation,
    d: &CuspDivisor,
    provider: &dyn FProvider,
) -> Result<Vec<Rat>> {
    let dessin = p.dessin;
    let base = *p
        .cusps
        .boundary_minus()
        .first()
        .ok_or_else(|| Error::Invalid("dessin has no one-kind cusp".into()))?;
    let (e0, einf) = split_divisor(d, base)?;

    let u = Mat2::gen_u();
    let u_inv = u.inv();

    // F for U^{-1} Gamma U with the divisor U^{-1} Einf (supported on its
    // plus cusps), and for U Gamma U^{-1} with U E0.
    let conj_uinv = conjugate_dessin(dessin, &u_inv)?;
    let conj_u = conjugate_dessin(dessin, &u)?;
    let cusps_uinv = conj_uinv.cusps();
    let cusps_u = conj_u.cusps();
    let div_minus = transport_divisor(&einf, &cusps_uinv, u_inv_kind, &p.cusps)?;
    let div_plus = transport_divisor(&e0, &cusps_u, u_kind, &p.cusps)?;
    let f_minus = provider.f_values(&conj_uinv, &div_minus)?;
    let f_plus = provider.f_values(&conj_u, &div_plus)?;

    let reps = dessin.coset_representatives();
    let mut out = vec![Rat::zero(); p.size()];
    for i in 0..dessin.n() {
        for e in 0..6 {
            let g = &reps[i] * &p.transversal[e];
            let mut coeff = Rat::zero();
            // F_{U^{-1} Einf}(U^{-1} g): nonzero only when U^{-1} g lands in
            // Gamma(2); its coset is read in the conjugate dessin.
            let arg = &u_inv * &g;
            if crate::gamma2::is_gamma2(&arg) {
                let idx = conj_coset_of(dessin, &u_inv, &arg)?;
                coeff += f_minus[idx].clone();
            }
            let arg = &u * &g;
            if crate::gamma2::is_gamma2(&arg) {
                let idx = conj_coset_of(dessin, &u, &arg)?;
                coeff -= f_plus[idx].clone();
            }
            out[p.index(i, e)] = coeff;
        }
    }
    Ok(out)
}

/// Coset index of h in (v Gamma v^{-1}) \ Gamma(2), via the index-preserving
/// bijection with Gamma \ Gamma(2).
fn conj_coset_of(dessin: &Dessin, v: &Mat2, h: &Mat2) -> Result<usize> {
    let vi = v.inv();
    dessin.coset_of(&(&(&vi * h) * v))
}

// ---------------------------------------------------------------------------
// Manin-Drinfeld checker on the full presentation
// ---------------------------------------------------------------------------

/// Vectors accepted by the Manin-Drinfeld checker.
pub enum MdInput {
    Exact(Vec<Rat>),
    /// values with symmetric error bars
    Real(Vec<(f64, f64)>),
}

/// Quotient data for the full Manin presentation: the invariant subspace W
/// (spanned by the S-orbit and U-orbit indicator vectors, i.e. the relation
/// space) and the image lattice of Z[cosets].
pub struct MdQuotient {
    pub coords: Vec<usize>,
    lattice_basis: Vec<Vec<Rat>>,
    reduce_f64: Vec<Vec<f64>>,
    pivots: Vec<usize>,
    size: usize,
}

impl MdQuotient {
    pub fn new(p: &ManinPresentation) -> Result<Self> {
        let size = p.size();
        let space = p.relation_space();
        let coords = space.complement_coords();
        let mut gens = Vec::with_capacity(size);
        for i in 0..size {
            let mut e = vec![Rat::zero(); size];
            e[i] = linalg::rat(1);
            gens.push(project_coords(space, &coords, &e));
        }
        let lattice_basis = lattice_basis_from_generators(gens)?;
        let reduce_f64 = space
            .rows
            .iter()
            .map(|r| r.iter().map(rat_to_f64).collect())
            .collect();
        Ok(MdQuotient {
            coords,
            lattice_basis,
            reduce_f64,
            pivots: space.pivots.clone(),
            size,
        })
    }

    fn project_exact(&self, p: &ManinPresentation, v: &[Rat]) -> Vec<Rat> {
        let reduced = p.reduce(v);
        self.coords.iter().map(|&c| reduced[c].clone()).collect()
    }

    fn project_real(&self, v: &[f64]) -> Vec<f64> {
        let mut v = v.to_vec();
        for (row, &p) in self.reduce_f64.iter().zip(&self.pivots) {
            let f = v[p];
            if f != 0.0 {
                for j in 0..self.size {
                    v[j] -= row[j] * f;
                }
            }
        }
        self.coords.iter().map(|&c| v[c]).collect()
    }
}

/// Torsion test in H_1(X, cusps): project modulo the S/U-invariant span and
/// recognize every surviving coordinate as a rational number.
pub fn manin_drinfeld_check(
    p: &ManinPresentation,
    q: &MdQuotient,
    input: &MdInput,
    den_bound: u64,
    tol: f64,
) -> Result<TorsionVerdict> {
    let rational: Vec<Rat> = match input {
        MdInput::Exact(v) => {
            if v.len() != q.size {
                return Err(Error::OutOfRange("vector length mismatch".into()));
            }
            q.project_exact(p, v)
        }
        MdInput::Real(values) => {
            if values.len() != q.size {
                return Err(Error::OutOfRange("vector length mismatch".into()));
            }
            let vals: Vec<f64> = values.iter().map(|&(x, _)| x).collect();
            let errs: Vec<f64> = values.iter().map(|&(_, e)| e.abs()).collect();
            // The exact projection amplifies input error by at most the sup
            // norm of the row operations; fold that into the recognition
            // tolerance conservatively.
            let row_norm: f64 = q
                .reduce_f64
                .iter()
                .map(|r| r.iter().map(|x| x.abs()).fold(0.0, f64::max))
                .fold(1.0, f64::max);
            let err_in = errs.iter().cloned().fold(0.0, f64::max);
            let eff_tol = tol + err_in * row_norm * (q.pivots.len() as f64 + 1.0);
            let projected = q.project_real(&vals);
            let mut out = Vec::with_capacity(projected.len());
            for (idx, &x) in projected.iter().enumerate() {
                use crate::analytic::recognize::{rational_recognize_f64, Recognition};
                match rational_recognize_f64(x, eff_tol, den_bound) {
                    Recognition::Unique(r) => out.push(r),
                    Recognition::NoneFound => {
                        return Ok(TorsionVerdict::NotTorsion {
                            witness: format!(
                                "coordinate {} = {:.12} has no rational approximation with denominator <= {} within {:.3e}",
                                idx, x, den_bound, eff_tol
                            ),
                        })
                    }
                    Recognition::Ambiguous => {
                        return Ok(TorsionVerdict::Indeterminate {
                            reason: format!(
                                "interval around coordinate {} too wide for denominator bound {}",
                                idx, den_bound
                            ),
                        })
                    }
                }
            }
            out
        }
    };
    let order = lattice::class_order(&q.lattice_basis, &rational)?;
    Ok(TorsionVerdict::Torsion {
        order,
        certificate: rational,
    })
}

/// f64 view of a rational (reports and float paths only).
pub fn rat_to_f64_pub(x: &Rat) -> f64 {
    rat_to_f64(x)
}

pub(crate) fn rat_to_f64(x: &Rat) -> f64 {
    bigint_to_f64(x.numer()) / bigint_to_f64(x.denom())
}

pub fn bigint_to_f64(x: &BigInt) -> f64 {
    let (sign, digits) = x.to_u64_digits();
    let mut v = 0.0f64;
    for d in digits.iter().rev() {
        v = v * 18446744073709551616.0 + *d as f64;
    }
    if sign == num_bigint::Sign::Minus {
        -v
    } else {
        v
    }
}

// ---------------------------------------------------------------------------
// Imaginary parts from scattering differences
// ---------------------------------------------------------------------------

/// Result of assembling an imaginary part from scattering estimates.
#[derive(Clone, Debug)]
pub struct ImaginaryPart {
    /// Raw coefficient per coset (value, error estimate).
    pub raw: Vec<(f64, f64)>,
    /// Coordinates over the lambda basis of the cycle's side.
    pub lambda_coords: Vec<(Cusp, f64)>,
    /// Sup norm of the component outside the lambda-span (consistency defect).
    pub residual: f64,
}

impl ImaginaryPart {
    pub fn sup_norm(&self) -> f64 {
        self.raw.iter().fold(0.0f64, |m, &(v, _)| m.max(v.abs()))
    }

    pub fn error_sum(&self) -> f64 {
        self.raw.iter().map(|&(_, e)| e).fold(0.0f64, f64::max)
    }
}

/// Assemble I_D for a side-plus divisor from scattering-constant differences:
/// coefficient of xi+(g) is pi * sum_j m_j (C_{j, g(-1)} - C_{j, g(1)}).
/// `scattering` returns (value, error) for a difference C_{j,k1} - C_{j,k2}.
pub fn imaginary_part_from_scattering(
    h: &MixedHomology,
    d: &CuspDivisor,
    mut scattering: impl FnMut(Cusp, Cusp, Cusp) -> Result<(f64, f64)>,
) -> Result<ImaginaryPart> {
    if !d.degree().is_zero() {
        return Err(Error::NonzeroDegree(format!("{}", d)));
    }
    let n = h.dessin.n();
    let inv_a = |g: usize| h.dessin.apply_gen(g, crate::gamma2::Gen::A, -1);
    let pi = std::f64::consts::PI;
    let mut raw = vec![(0.0f64, 0.0f64); n];
    for g in 0..n {
        let k_minus1 = h.cusps.cusp_of(CuspKind::One, inv_a(g)).cusp;
        let k_plus1 = h.cusps.cusp_of(CuspKind::One, g).cusp;
        let mut val = 0.0;
        let mut err = 0.0;
        if k_minus1 != k_plus1 {
            for (j, m) in d.support() {
                let (v, e) = scattering(*j, k_minus1, k_plus1)?;
                let mf = rat_to_f64(m);
                val += mf * v;
                err += mf.abs() * e;
            }
        }
        raw[g] = (pi * val, pi * err);
    }

    // Express in lambda+ coordinates via the exact normal equations of the
    // lambda row matrix (dropping one cusp; the loops sum to zero).
    let minus_cusps = h.cusps.boundary_minus();
    let rows: Vec<Vec<Rat>> = minus_cusps
        .iter()
        .skip(1)
        .map(|&j| h.lambda_plus(j).map(|v| v.coeffs))
        .collect::<Result<_>>()?;
    let vals: Vec<f64> = raw.iter().map(|&(v, _)| v).collect();
    let (coords, residual) = lambda_fit(&rows, &vals)?;
    let lambda_coords = minus_cusps.iter().skip(1).copied().zip(coords).collect();
    Ok(ImaginaryPart {
        raw,
        lambda_coords,
        residual,
    })
}

/// Least-squares fit of v onto the span of the given rational rows; returns
/// the coefficients and the sup norm of the residual.
fn lambda_fit(rows: &[Vec<Rat>], v: &[f64]) -> Result<(Vec<f64>, f64)> {
    let r = rows.len();
    if r == 0 {
        let res = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        return Ok((Vec::new(), res));
    }
    let n = rows[0].len();
    // Normal equations over Q, inverted exactly, then applied in floats.
    let mut gram = vec![vec![Rat::zero(); r]; r];
    for i in 0..r {
        for j in 0..r {
            let mut s = Rat::zero();
            for k in 0..n {
                s += &rows[i][k] * &rows[j][k];
            }
            gram[i][j] = s;
        }
    }
    let inv = invert_rational(&gram)
        .ok_or_else(|| Error::Invalid("lambda rows are dependent".into()))?;
    let rows_f: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| row.iter().map(rat_to_f64).collect())
        .collect();
    let inv_f: Vec<Vec<f64>> = inv
        .iter()
        .map(|row| row.iter().map(rat_to_f64).collect())
        .collect();
    let mut mv = vec![0.0f64; r];
    for i in 0..r {
        mv[i] = rows_f[i].iter().zip(v).map(|(a, b)| a * b).sum();
    }
    let mut coords = vec![0.0f64; r];
    for i in 0..r {
        coords[i] = inv_f[i].iter().zip(&mv).map(|(a, b)| a * b).sum();
    }
    let mut residual = 0.0f64;
    for k in 0..n {
        let fit: f64 = (0..r).map(|i| coords[i] * rows_f[i][k]).sum();
        residual = residual.max((v[k] - fit).abs());
    }
    Ok((coords, residual))
}

fn invert_rational(m: &[Vec<Rat>]) -> Option<Vec<Vec<Rat>>> {
    let n = m.len();
    let mut aug: Vec<Vec<Rat>> = (0..n)
        .map(|i| {
            let mut row = m[i].clone();
            for j in 0..n {
                row.push(if i == j { linalg::rat(1) } else { Rat::zero() });
            }
            row
        })
        .collect();
    let pivots = linalg::rref(&mut aug);
    if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{FermatFamily, FermatLabeling};

    fn rat(n: i64) -> Rat {
        linalg::rat(n)
    }

    fn rat_frac(n: i64, d: i64) -> Rat {
        linalg::rat_frac(n, d)
    }

    #[test]
    fn calibrated_ac_n3_closed_form() {
        let d = Dessin::from_fermat(3).unwrap();
        let c = fermat_cycle_ac(&d, 3, 0, 0, CycleMode::Calibrated, FermatLabeling::Combinatorial)
            .unwrap();
        let h = MixedHomology::new(&d);
        // Expect (delta_{g0 = a0} + delta_{g oo = c0}) / 3 - 1/9 on each coset.
        let a0 =
            lattice::fermat_cusp(3, FermatLabeling::Combinatorial, FermatFamily::A, 0).unwrap();
        let c0 =
            lattice::fermat_cusp(3, FermatLabeling::Combinatorial, FermatFamily::C, 0).unwrap();
        for g in 0..9 {
            let mut expect = rat_frac(-1, 9);
            if h.cusps.cusp_of(a0.kind, g).cusp == a0 {
                expect += rat_frac(1, 3);
            }
            if h.cusps.cusp_of(c0.kind, g).cusp == c0 {
                expect += rat_frac(1, 3);
            }
            assert_eq!(c.real_part.coeffs[g], expect, "coset {}", g);
        }
        assert_eq!(c.boundary_check(&h).unwrap(), BoundaryCheck::MinusD);
    }

    #[test]
    fn literal_ac_boundary_fails_as_documented() {
        let d = Dessin::from_fermat(3).unwrap();
        let c = fermat_cycle_ac(&d, 3, 0, 0, CycleMode::PaperLiteral, FermatLabeling::Combinatorial)
            .unwrap();
        let h = MixedHomology::new(&d);
        match c.boundary_check(&h).unwrap() {
            BoundaryCheck::Fail { .. } => {}
            other => panic!("literal mode unexpectedly has boundary {:?}", other),
        }
    }

    #[test]
    fn calibrated_bb_boundary_and_gauge() {
        let d = Dessin::from_fermat(3).unwrap();
        let h = MixedHomology::new(&d);
        let c = fermat_cycle_bb(&d, 3, 0, 1, CycleMode::Calibrated, FermatLabeling::Combinatorial)
            .unwrap();
        assert_eq!(c.boundary_check(&h).unwrap(), BoundaryCheck::MinusD);
        let mean: Rat = c
            .real_part
            .coeffs
            .iter()
            .cloned()
            .fold(Rat::zero(), |a, b| a + b);
        assert!(mean.is_zero());
        // j = k gives the zero cycle.
        let z = fermat_cycle_bb(&d, 3, 1, 1, CycleMode::Calibrated, FermatLabeling::Combinatorial)
            .unwrap();
        assert!(z.real_part.is_zero());
    }

    #[test]
    fn cycle_orders_divide_annihilators() {
        let d = Dessin::from_fermat(3).unwrap();
        let h = MixedHomology::new(&d);
        let qp = LambdaQuotient::new(&h, Side::Plus).unwrap();
        let qm = LambdaQuotient::new(&h, Side::Minus).unwrap();
        for j in 0..3 {
            for k in 0..3 {
                let ac = fermat_cycle_ac(
                    &d, 3, j, k, CycleMode::Calibrated, FermatLabeling::Combinatorial,
                )
                .unwrap();
                let order = qp.class_order(&ac.real_part.coeffs).unwrap();
                assert!(
                    (BigInt::from(3) % &order).is_zero() || order.is_one(),
                    "ac order {} should divide 3",
                    order
                );
                let bb = fermat_cycle_bb(
                    &d, 3, j, k, CycleMode::Calibrated, FermatLabeling::Combinatorial,
                )
                .unwrap();
                let order = qm.class_order(&bb.real_part.coeffs).unwrap();
                assert!(
                    (BigInt::from(6) % &order).is_zero(),
                    "bb order {} should divide 6",
                    order
                );
            }
        }
    }

    #[test]
    fn generated_groups_match_cuspidal_structures() {
        let n = 3u64;
        let d = Dessin::from_fermat(n).unwrap();
        let h = MixedHomology::new(&d);
        let qp = LambdaQuotient::new(&h, Side::Plus).unwrap();
        let qm = LambdaQuotient::new(&h, Side::Minus).unwrap();
        let mut plus_classes = Vec::new();
        let mut minus_classes = Vec::new();
        for j in 0..n {
            for k in 0..n {
                plus_classes.push(
                    fermat_cycle_ac(
                        &d, n, j, k, CycleMode::Calibrated, FermatLabeling::Combinatorial,
                    )
                    .unwrap()
                    .real_part
                    .coeffs,
                );
                minus_classes.push(
                    fermat_cycle_bb(
                        &d, n, j, k, CycleMode::Calibrated, FermatLabeling::Combinatorial,
                    )
                    .unwrap()
                    .real_part
                    .coeffs,
                );
            }
        }
        let gp = qp.classes_structure(&plus_classes).unwrap();
        let gm = qm.classes_structure(&minus_classes).unwrap();
        // N^(2N-2) = 81 and (2N)^(N-1) = 36 for N = 3.
        assert_eq!(gp.order().unwrap(), BigInt::from(81), "plus side got {}", gp);
        assert_eq!(gm.order().unwrap(), BigInt::from(36), "minus side got {}", gm);
    }

    #[test]
    fn split_divisor_examples() {
        let d = Dessin::gamma2();
        let h = MixedHomology::new(&d);
        let inf = h.cusps.infinity[0].cusp;
        let zero = h.cusps.zero[0].cusp;
        let one = h.cusps.one[0].cusp;
        let mut div = CuspDivisor::single(inf);
        div.add(zero, rat(-1));
        let (e0, einf) = split_divisor(&div, one).unwrap();
        // E0 = -(oo) + (1), Einf = -(0) + (1).
        assert_eq!(e0.coeff(&inf), rat(-1));
        assert_eq!(e0.coeff(&one), rat(1));
        assert_eq!(einf.coeff(&zero), rat(-1));
        assert_eq!(einf.coeff(&one), rat(1));
        let mut recombined = e0.neg();
        recombined.add_divisor(&einf, &rat(1));
        assert_eq!(recombined, div);

        // Supported on the one-kind cusps only: E0 = 0, Einf = D.
        let d3 = Dessin::from_fermat(3).unwrap();
        let h3 = MixedHomology::new(&d3);
        let ones = h3.cusps.boundary_minus();
        let mut div = CuspDivisor::single(ones[0]);
        div.add(ones[1], rat(-1));
        let (e0, einf) = split_divisor(&div, ones[0]).unwrap();
        assert!(e0.is_zero());
        assert_eq!(einf, div);
    }

    #[test]
    fn assemble_gamma2_cycle() {
        let d = Dessin::gamma2();
        let p = ManinPresentation::new(&d).unwrap();
        let h = MixedHomology::new(&d);
        let inf = h.cusps.infinity[0].cusp;
        let zero = h.cusps.zero[0].cusp;
        let mut div = CuspDivisor::single(inf);
        div.add(zero, rat(-1));
        let v = assemble_full_cycle(&p, &div, &SeparatedProvider).unwrap();
        let b = p.boundary_of(&v);
        assert_eq!(b, div.neg(), "assembled boundary should be -D, got {}", b);

        // D = 0 gives the zero vector.
        let z = assemble_full_cycle(&p, &CuspDivisor::zero(), &SeparatedProvider).unwrap();
        assert!(z.iter().all(|x| x.is_zero()));
    }

    #[test]
    fn assemble_fermat_cycles_have_boundary_minus_d() {
        let n = 3u64;
        let d = Dessin::from_fermat(n).unwrap();
        let p = ManinPresentation::new(&d).unwrap();
        let cusps = p.cusps.all();
        // Representative degree-0 divisors across all three kinds.
        let mut divisors = Vec::new();
        for pair in cusps.windows(2) {
            let mut div = CuspDivisor::single(pair[0]);
            div.add(pair[1], rat(-1));
            divisors.push(div);
        }
        for div in divisors {
            let v = assemble_full_cycle(&p, &div, &SeparatedProvider).unwrap();
            assert_eq!(p.boundary_of(&v), div.neg(), "divisor {}", div);
        }
    }

    #[test]
    fn md_check_exact_and_adversarial() {
        let d = Dessin::from_fermat(3).unwrap();
        let p = ManinPresentation::new(&d).unwrap();
        let q = MdQuotient::new(&p).unwrap();
        // Exact rational vectors are always torsion.
        let mut v = vec![Rat::zero(); p.size()];
        v[0] = rat_frac(1, 2);
        v[7] = rat_frac(-2, 3);
        match manin_drinfeld_check(&p, &q, &MdInput::Exact(v), 1000, 1e-9).unwrap() {
            TorsionVerdict::Torsion { order, .. } => {
                assert!(!order.is_zero());
            }
            other => panic!("exact input should be torsion: {:?}", other),
        }
        // An irrational multiple of a complement basis vector is rejected.
        let coords = q.coords.clone();
        let mut w = vec![(0.0f64, 0.0f64); p.size()];
        w[coords[0]] = (0.30102999566398119, 1e-15);
        match manin_drinfeld_check(&p, &q, &MdInput::Real(w), 1_000_000, 1e-12).unwrap() {
            TorsionVerdict::NotTorsion { .. } => {}
            other => panic!("irrational injection should be rejected: {:?}", other),
        }
    }

    #[test]
    fn imaginary_part_zero_scattering() {
        let d = Dessin::from_fermat(3).unwrap();
        let h = MixedHomology::new(&d);
        let labeling = FermatLabeling::Combinatorial;
        let a0 = lattice::fermat_cusp(3, labeling, FermatFamily::A, 0).unwrap();
        let c0 = lattice::fermat_cusp(3, labeling, FermatFamily::C, 0).unwrap();
        let mut div = CuspDivisor::single(a0);
        div.add(c0, rat(-1));
        let im = imaginary_part_from_scattering(&h, &div, |_, _, _| Ok((0.0, 1e-12))).unwrap();
        assert!(im.residual < 1e-9);
        assert!(im.raw.iter().all(|&(v, _)| v == 0.0));
    }
}
