//! Integer linear algebra for cuspidal divisor class groups.
//!
//! The cuspidal subgroup computations all reduce to the same pattern: present
//! a finite abelian group as Z^k modulo a row lattice and read its invariant
//! factors off the Smith normal form. The Smith form here keeps the unimodular
//! transforms U, V with U * M * V = D, selects the smallest-absolute-value
//! pivot at each step, and enforces the divisibility chain at the end.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::dessin::{Cusp, CuspKind, Dessin};
use crate::homology::CuspDivisor;
use crate::linalg::{self, Rat};
use crate::{Error, Result};

/// Dense arbitrary-precision integer matrix with optional row/column labels.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct IntMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<BigInt>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
            row_labels: Vec::new(),
            col_labels: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMatrix::zero(n, n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<BigInt>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = IntMatrix::zero(r, c);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, x) in row.into_iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        m
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        IntMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
                .collect(),
        )
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for k in 0..self.cols {
            self.data.swap(i * self.cols + k, j * self.cols + k);
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    /// row[i] += f * row[j]
    fn add_row(&mut self, i: usize, j: usize, f: &BigInt) {
        for k in 0..self.cols {
            let t = &self.data[j * self.cols + k] * f;
            self.data[i * self.cols + k] += t;
        }
    }

    /// col[i] += f * col[j]
    fn add_col(&mut self, i: usize, j: usize, f: &BigInt) {
        for r in 0..self.rows {
            let t = &self.data[r * self.cols + j] * f;
            self.data[r * self.cols + i] += t;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for k in 0..self.cols {
            let idx = i * self.cols + k;
            self.data[idx] = -self.data[idx].clone();
        }
    }

    pub fn mul(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, rhs.rows);
        let mut out = IntMatrix::zero(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let t = a * &rhs[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    /// Determinant by Bareiss fraction-free elimination (square matrices).
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut m = self.data.clone();
        let at = |m: &Vec<BigInt>, i: usize, j: usize| m[i * n + j].clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if at(&m, k, k).is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !at(&m, i, k).is_zero()) else {
                    return BigInt::zero();
                };
                for j in 0..n {
                    m.swap(k * n + j, p * n + j);
                }
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let val = (at(&m, i, j) * at(&m, k, k) - at(&m, i, k) * at(&m, k, j))
                        .checked_div(&prev)
                        .expect("bareiss divisibility");
                    m[i * n + j] = val;
                }
                m[i * n + k] = BigInt::zero();
            }
            prev = at(&m, k, k);
        }
        sign * at(&m, n - 1, n - 1)
    }

    /// CSV export (labels first if present).
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        if !self.col_labels.is_empty() {
            let _ = writeln!(s, ",{}", self.col_labels.join(","));
        }
        for i in 0..self.rows {
            if !self.row_labels.is_empty() {
                let _ = write!(s, "{},", self.row_labels[i]);
            }
            let cells: Vec<String> = self.row(i).iter().map(|x| x.to_string()).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.data[i * self.cols + j]
    }
}

/// Smith normal form result: u * m * v = d with u, v unimodular and d
/// diagonal with a divisibility chain.
pub struct Snf {
    pub d: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
}

impl Snf {
    /// Diagonal entries, including zeros.
    pub fn diagonal(&self) -> Vec<BigInt> {
        (0..self.d.rows.min(self.d.cols))
            .map(|i| self.d[(i, i)].clone())
            .collect()
    }
}

pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let mut d = m.clone();
    d.row_labels.clear();
    d.col_labels.clear();
    let mut u = IntMatrix::identity(m.rows);
    let mut v = IntMatrix::identity(m.cols);
    let limit = m.rows.min(m.cols);

    for k in 0..limit {
        // Bring the smallest nonzero entry of the trailing block to (k, k)
        // and clear its row and column by euclidean steps.
        'pivot: loop {
            let mut best: Option<(usize, usize)> = None;
            for i in k..m.rows {
                for j in k..m.cols {
                    if !d[(i, j)].is_zero()
                        && best
                            .map(|(bi, bj)| d[(i, j)].abs() < d[(bi, bj)].abs())
                            .unwrap_or(true)
                    {
                        best = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = best else {
                // trailing block is zero
                return finish_chain(d, u, v, k);
            };
            d.swap_rows(k, pi);
            u.swap_rows(k, pi);
            d.swap_cols(k, pj);
            v.swap_cols(k, pj);

            let mut dirty = false;
            for i in k + 1..m.rows {
                if !d[(i, k)].is_zero() {
                    let q = -(&d[(i, k)] / &d[(k, k)]);
                    d.add_row(i, k, &q);
                    u.add_row(i, k, &q);
                    if !d[(i, k)].is_zero() {
                        dirty = true;
                    }
                }
            }
            for j in k + 1..m.cols {
                if !d[(k, j)].is_zero() {
                    let q = -(&d[(k, j)] / &d[(k, k)]);
                    d.add_col(j, k, &q);
                    v.add_col(j, k, &q);
                    if !d[(k, j)].is_zero() {
                        dirty = true;
                    }
                }
            }
            if dirty {
                continue 'pivot;
            }
            // Row and column are clear; make sure the pivot divides the rest.
            for i in k + 1..m.rows {
                for j in k + 1..m.cols {
                    if !(&d[(i, j)] % &d[(k, k)]).is_zero() {
                        let one = BigInt::one();
                        d.add_row(k, i, &one);
                        u.add_row(k, i, &one);
                        continue 'pivot;
                    }
                }
            }
            break 'pivot;
        }
    }
    finish_chain(d, u, v, limit)
}

fn finish_chain(mut d: IntMatrix, mut u: IntMatrix, v: IntMatrix, rank: usize) -> Snf {
    for k in 0..rank {
        if k < d.rows.min(d.cols) && d[(k, k)].is_negative() {
            d.negate_row(k);
            u.negate_row(k);
        }
    }
    Snf { d, u, v }
}

/// Invariant-factor description of a finitely generated abelian group.
#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct AbelianStructure {
    pub free_rank: usize,
    /// Invariant factors > 1 with d_1 | d_2 | ... | d_k.
    #[serde(serialize_with = "crate::report::serialize_bigints")]
    pub invariant_factors: Vec<BigInt>,
}

impl AbelianStructure {
    pub fn trivial() -> Self {
        AbelianStructure {
            free_rank: 0,
            invariant_factors: Vec::new(),
        }
    }

    /// (Z/m)^k
    pub fn homocyclic(m: u64, k: usize) -> Self {
        AbelianStructure {
            free_rank: 0,
            invariant_factors: vec![BigInt::from(m); k],
        }
    }

    pub fn order(&self) -> Option<BigInt> {
        if self.free_rank > 0 {
            return None;
        }
        Some(
            self.invariant_factors
                .iter()
                .fold(BigInt::one(), |acc, d| acc * d),
        )
    }

    /// Elementary divisors: the multiset of prime powers, sorted.
    pub fn elementary_divisors(&self) -> Vec<BigInt> {
        let mut out = Vec::new();
        for d in &self.invariant_factors {
            for (p, e) in trial_factor(d) {
                out.push(p.pow(e));
            }
        }
        out.sort();
        out
    }
}

impl std::fmt::Display for AbelianStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if self.free_rank > 0 {
            parts.push(format!("Z^{}", self.free_rank));
        }
        // group equal factors as (Z/d)^k
        let mut i = 0;
        while i < self.invariant_factors.len() {
            let d = &self.invariant_factors[i];
            let j = self.invariant_factors[i..]
                .iter()
                .take_while(|x| *x == d)
                .count();
            if j == 1 {
                parts.push(format!("Z/{}", d));
            } else {
                parts.push(format!("(Z/{})^{}", d, j));
            }
            i += j;
        }
        if parts.is_empty() {
            parts.push("0".into());
        }
        write!(f, "{}", parts.join(" x "))
    }
}

fn trial_factor(n: &BigInt) -> Vec<(BigInt, u32)> {
    let mut n = n.abs();
    let mut out = Vec::new();
    let mut p = BigInt::from(2);
    while &p * &p <= n {
        if (&n % &p).is_zero() {
            let mut e = 0;
            while (&n % &p).is_zero() {
                n /= &p;
                e += 1;
            }
            out.push((p.clone(), e));
        }
        p += 1;
    }
    if n > BigInt::one() {
        out.push((n, 1));
    }
    out
}

/// Structure of Z^cols / (row lattice of m).
pub fn cokernel_structure(m: &IntMatrix) -> AbelianStructure {
    let snf = smith_normal_form(m);
    let diag = snf.diagonal();
    let nonzero = diag.iter().filter(|d| !d.is_zero()).count();
    AbelianStructure {
        free_rank: m.cols - nonzero,
        invariant_factors: diag
            .into_iter()
            .filter(|d| !d.is_zero() && !d.is_one())
            .collect(),
    }
}

/// Order of the image of the row lattice of `m` in (Z/modulus)^cols:
/// product over invariant factors d of modulus / gcd(d, modulus), counting
/// d = 0 for missing rows.
pub fn image_order_mod(m: &IntMatrix, modulus: &BigInt) -> BigInt {
    let snf = smith_normal_form(m);
    let mut order = BigInt::one();
    let mut diag = snf.diagonal();
    diag.resize(m.rows, BigInt::zero());
    for d in diag {
        order *= modulus / d.gcd(modulus);
    }
    order
}

// ---------------------------------------------------------------------------
// Fermat cusp labels
// ---------------------------------------------------------------------------

/// Which cusps the Fermat labels a_j, b_j, c_j name.
///
/// `Combinatorial` follows the index sets of the theta maps ("g0 = a_j",
/// "g oo = c_k"): a_j is the zero-kind cusp with orbit label j, c_k the
/// infinity-kind cusp with orbit label k. `Geometric` follows the unit
/// divisors (a_j above lambda = 0, i.e. the infinity-kind cusps) and swaps
/// the two families. b_j is the one-kind cusp with a + b = j in both.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FermatLabeling {
    Combinatorial,
    Geometric,
}

/// The three Fermat cusp families.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum FermatFamily {
    A,
    B,
    C,
}

impl FermatFamily {
    pub fn name(self) -> &'static str {
        match self {
            FermatFamily::A => "a",
            FermatFamily::B => "b",
            FermatFamily::C => "c",
        }
    }
}

/// Cusp named by family and index for the level-N Fermat dessin.
pub fn fermat_cusp(n: u64, labeling: FermatLabeling, family: FermatFamily, j: u64) -> Result<Cusp> {
    if j >= n {
        return Err(Error::OutOfRange(format!(
            "cusp index {} out of range for N = {}",
            j, n
        )));
    }
    let kind = match (labeling, family) {
        (_, FermatFamily::B) => CuspKind::One,
        (FermatLabeling::Combinatorial, FermatFamily::A) => CuspKind::Zero,
        (FermatLabeling::Combinatorial, FermatFamily::C) => CuspKind::Infinity,
        (FermatLabeling::Geometric, FermatFamily::A) => CuspKind::Infinity,
        (FermatLabeling::Geometric, FermatFamily::C) => CuspKind::Zero,
    };
    // Orbit representatives: zero-kind orbits are {a = const} with rep (j, 0),
    // infinity-kind orbits {b = const} with rep (0, j), one-kind orbits
    // {a + b = const} with rep (0, j).
    let rep = match kind {
        CuspKind::Zero => (j as usize) * n as usize,
        CuspKind::One | CuspKind::Infinity => j as usize,
    };
    Ok(Cusp { kind, rep })
}

/// Inverse of [`fermat_cusp`].
pub fn fermat_cusp_name(n: u64, labeling: FermatLabeling, cusp: Cusp) -> (FermatFamily, u64) {
    let family = match (labeling, cusp.kind) {
        (_, CuspKind::One) => FermatFamily::B,
        (FermatLabeling::Combinatorial, CuspKind::Zero) => FermatFamily::A,
        (FermatLabeling::Combinatorial, CuspKind::Infinity) => FermatFamily::C,
        (FermatLabeling::Geometric, CuspKind::Infinity) => FermatFamily::A,
        (FermatLabeling::Geometric, CuspKind::Zero) => FermatFamily::C,
    };
    let j = match cusp.kind {
        CuspKind::Zero => cusp.rep as u64 / n,
        CuspKind::One | CuspKind::Infinity => cusp.rep as u64,
    };
    (family, j)
}

/// The divisors of the 3N Fermat modular units:
/// div(x - zeta^j) = N b_j - sum_k c_k, div(y - zeta^j) = N a_j - sum_k c_k,
/// div(x - eps zeta^j y) = N c_j - sum_k c_k.
pub fn fermat_unit_divisors(n: u64, labeling: FermatLabeling) -> Result<Vec<CuspDivisor>> {
    if n == 0 {
        return Err(Error::OutOfRange("N must be >= 1".into()));
    }
    let nn = BigInt::from(n);
    let mut sum_c = CuspDivisor::zero();
    for k in 0..n {
        sum_c.add(fermat_cusp(n, labeling, FermatFamily::C, k)?, linalg::rat(1));
    }
    let mut out = Vec::with_capacity(3 * n as usize);
    for family in [FermatFamily::B, FermatFamily::A, FermatFamily::C] {
        for j in 0..n {
            let mut d = CuspDivisor::zero();
            d.add(
                fermat_cusp(n, labeling, family, j)?,
                Rat::from_integer(nn.clone()),
            );
            d.add_divisor(&sum_c, &linalg::rat(-1));
            out.push(d);
        }
    }
    Ok(out)
}

/// The six Rohrlich relations with base point P = a_0, in degree-0 form.
pub fn rohrlich_relation_divisors(n: u64, labeling: FermatLabeling) -> Result<Vec<CuspDivisor>> {
    if n == 0 || n % 2 == 0 {
        return Err(Error::OutOfRange(format!(
            "Rohrlich relations need odd N >= 1, got {}",
            n
        )));
    }
    let p = fermat_cusp(n, labeling, FermatFamily::A, 0)?;
    let cusp = |f: FermatFamily, j: u64| fermat_cusp(n, labeling, f, j);
    let mut out = Vec::with_capacity(6);
    // sum over a family minus N [P]
    for family in [FermatFamily::A, FermatFamily::B, FermatFamily::C] {
        let mut d = CuspDivisor::zero();
        for j in 0..n {
            d.add(cusp(family, j)?, linalg::rat(1));
        }
        d.add(p, linalg::rat(-(n as i64)));
        out.push(d);
    }
    // first moments sum i ([a_i] - [b_i]) and sum i ([a_i] - [c_i])
    for other in [FermatFamily::B, FermatFamily::C] {
        let mut d = CuspDivisor::zero();
        for j in 0..n {
            d.add(cusp(FermatFamily::A, j)?, linalg::rat(j as i64));
            d.add(cusp(other, j)?, linalg::rat(-(j as i64)));
        }
        out.push(d);
    }
    // second moment sum i^2 ([a_i] + [b_i] + [c_i] - 3 [P])
    let mut d = CuspDivisor::zero();
    let mut total = 0i64;
    for j in 0..n {
        let w = (j * j) as i64;
        total += 3 * w;
        for family in [FermatFamily::A, FermatFamily::B, FermatFamily::C] {
            d.add(cusp(family, j)?, linalg::rat(w));
        }
    }
    d.add(p, linalg::rat(-total));
    out.push(d);
    Ok(out)
}

/// Coordinates of a degree-0 divisor in the basis [c] - [base], c != base.
fn degree_zero_coordinates(d: &CuspDivisor, cusps: &[Cusp], base: Cusp) -> Result<Vec<BigInt>> {
    if !d.degree().is_zero() {
        return Err(Error::NonzeroDegree(format!("{}", d)));
    }
    let mut coords = Vec::with_capacity(cusps.len() - 1);
    for &c in cusps.iter().filter(|&&c| c != base) {
        let v = d.coeff(&c);
        if !v.denom().is_one() {
            return Err(Error::Parse(format!("divisor is not integral: {}", d)));
        }
        coords.push(v.numer().clone());
    }
    Ok(coords)
}

/// Quotient of Z[cusps]^0 by N Z[cusps]^0 and the given relation divisors.
fn divisor_quotient(
    n_annihilator: u64,
    cusps: &[Cusp],
    base: Cusp,
    relations: &[CuspDivisor],
) -> Result<AbelianStructure> {
    let k = cusps.len() - 1;
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(k + relations.len());
    for i in 0..k {
        let mut row = vec![BigInt::zero(); k];
        row[i] = BigInt::from(n_annihilator);
        rows.push(row);
    }
    for rel in relations {
        rows.push(degree_zero_coordinates(rel, cusps, base)?);
    }
    Ok(cokernel_structure(&IntMatrix::from_rows(rows)))
}

/// Cuspidal subgroup of the Jacobian of the N-th Fermat curve (odd N >= 3),
/// presented by N Z[cusps]^0 plus the Rohrlich relations.
pub fn cuspidal_group_full(n: u64) -> Result<AbelianStructure> {
    if n % 2 == 0 || n < 3 {
        return Err(Error::OutOfRange(format!(
            "cuspidal_group_full needs odd N >= 3, got {}",
            n
        )));
    }
    let labeling = FermatLabeling::Combinatorial;
    let d = Dessin::from_fermat(n)?;
    let cusps = d.cusps().all();
    let base = fermat_cusp(n, labeling, FermatFamily::A, 0)?;
    let relations = rohrlich_relation_divisors(n, labeling)?;
    divisor_quotient(n, &cusps, base, &relations)
}

/// Cuspidal subgroup of the generalized Jacobian rel. the one-kind cusps:
/// Z[boundary_plus]^0 / < N Z^0, sum_j [a_j] - [c_j] >.
pub fn cuspidal_group_minus(n: u64) -> Result<AbelianStructure> {
    if n % 2 == 0 || n < 3 {
        return Err(Error::OutOfRange(format!(
            "cuspidal_group_minus needs odd N >= 3, got {}",
            n
        )));
    }
    let labeling = FermatLabeling::Combinatorial;
    let d = Dessin::from_fermat(n)?;
    let cusps = d.cusps().boundary_plus();
    let base = fermat_cusp(n, labeling, FermatFamily::A, 0)?;
    let mut rel = CuspDivisor::zero();
    for j in 0..n {
        rel.add(fermat_cusp(n, labeling, FermatFamily::A, j)?, linalg::rat(1));
        rel.add(fermat_cusp(n, labeling, FermatFamily::C, j)?, linalg::rat(-1));
    }
    divisor_quotient(n, &cusps, base, &[rel])
}

/// Cuspidal subgroup of the generalized Jacobian rel. the plus cusps:
/// Z[boundary_minus]^0 / 2N Z^0.
pub fn cuspidal_group_plus(n: u64) -> Result<AbelianStructure> {
    if n % 2 == 0 || n < 3 {
        return Err(Error::OutOfRange(format!(
            "cuspidal_group_plus needs odd N >= 3, got {}",
            n
        )));
    }
    let d = Dessin::from_fermat(n)?;
    let cusps = d.cusps().boundary_minus();
    let base = cusps[0];
    divisor_quotient(2 * n, &cusps, base, &[])
}

/// theta+ : a degree-0 divisor on the plus cusps, mod N, as a coset vector.
/// [q] goes to the indicator of the fiber of q (g0 = q for zero-kind,
/// g oo = q for infinity-kind).
pub fn theta_plus(dessin: &Dessin, n: u64, d: &CuspDivisor) -> Result<Vec<BigInt>> {
    if !d.degree().is_zero() {
        return Err(Error::NonzeroDegree(format!("{}", d)));
    }
    if !d.supported_on(&[CuspKind::Zero, CuspKind::Infinity]) {
        return Err(Error::WrongSupport(format!(
            "theta_plus needs support on the plus cusps: {}",
            d
        )));
    }
    let modulus = BigInt::from(n);
    let cusps = dessin.cusps();
    let mut out = vec![BigInt::zero(); dessin.n()];
    for (cusp, coeff) in d.support() {
        if !coeff.denom().is_one() {
            return Err(Error::Parse(format!("divisor is not integral: {}", d)));
        }
        for &g in &cusps.orbit(*cusp)?.orbit {
            out[g] += coeff.numer();
        }
    }
    for x in out.iter_mut() {
        *x = x.mod_floor(&modulus);
    }
    Ok(out)
}

/// theta- : a degree-0 divisor on the one-kind cusps, mod 2N.
/// [b] goes to (fiber g1 = b) - (fiber g(-1) = b); the latter is the image of
/// the former under piA.
pub fn theta_minus(dessin: &Dessin, n: u64, d: &CuspDivisor) -> Result<Vec<BigInt>> {
    if !d.degree().is_zero() {
        return Err(Error::NonzeroDegree(format!("{}", d)));
    }
    if !d.supported_on(&[CuspKind::One]) {
        return Err(Error::WrongSupport(format!(
            "theta_minus needs support on the one-kind cusps: {}",
            d
        )));
    }
    let modulus = BigInt::from(2 * n);
    let cusps = dessin.cusps();
    let mut out = vec![BigInt::zero(); dessin.n()];
    for (cusp, coeff) in d.support() {
        if !coeff.denom().is_one() {
            return Err(Error::Parse(format!("divisor is not integral: {}", d)));
        }
        for &g in &cusps.orbit(*cusp)?.orbit {
            out[g] += coeff.numer();
            out[dessin.pi_a()[g]] -= coeff.numer();
        }
    }
    for x in out.iter_mut() {
        *x = x.mod_floor(&modulus);
    }
    Ok(out)
}

/// Matrix of theta over a basis [q_i] - [q_0] of the degree-0 divisors.
pub fn theta_matrix(
    dessin: &Dessin,
    n: u64,
    cusps: &[Cusp],
    theta: impl Fn(&Dessin, u64, &CuspDivisor) -> Result<Vec<BigInt>>,
) -> Result<IntMatrix> {
    let base = cusps[0];
    let mut rows = Vec::new();
    for &c in &cusps[1..] {
        let mut d = CuspDivisor::single(c);
        d.add(base, linalg::rat(-1));
        rows.push(theta(dessin, n, &d)?);
    }
    Ok(IntMatrix::from_rows(rows))
}

// ---------------------------------------------------------------------------
// Lattice quotients over Q-subspaces (used for torsion orders)
// ---------------------------------------------------------------------------

/// Integer row-space basis by Hermite-style elimination. Returns a full set
/// of independent rows spanning the same lattice.
pub fn row_basis(rows: Vec<Vec<BigInt>>) -> Vec<Vec<BigInt>> {
    let Some(cols) = rows.first().map(|r| r.len()) else {
        return Vec::new();
    };
    let mut work = rows;
    let mut basis: Vec<Vec<BigInt>> = Vec::new();
    for col in 0..cols {
        loop {
            let mut nz: Vec<usize> = (0..work.len()).filter(|&i| !work[i][col].is_zero()).collect();
            if nz.is_empty() {
                break;
            }
            if nz.len() == 1 {
                let row = work.swap_remove(nz[0]);
                basis.push(row);
                break;
            }
            // Reduce the larger leading entry by the smaller.
            nz.sort_by(|&i, &j| work[i][col].abs().cmp(&work[j][col].abs()));
            let (small, large) = (nz[0], nz[1]);
            let q = -(&work[large][col] / &work[small][col]);
            for k in 0..cols {
                let t = &work[small][k] * &q;
                work[large][k] += t;
            }
        }
        // Rows that became zero never matter again.
        work.retain(|r| r.iter().any(|x| !x.is_zero()));
    }
    basis
}

/// Structure of (L + V) / L where L is a full-rank lattice in Q^k given by
/// basis rows and V is spanned by the added vectors.
pub fn lattice_extension_structure(
    l_basis: &[Vec<Rat>],
    added: &[Vec<Rat>],
) -> Result<AbelianStructure> {
    let k = l_basis.len();
    if k == 0 {
        return Ok(AbelianStructure::trivial());
    }
    // Clear denominators: the quotient is invariant under common scaling.
    let mut all: Vec<Rat> = Vec::new();
    for r in l_basis.iter().chain(added.iter()) {
        all.extend(r.iter().cloned());
    }
    let den = linalg::common_denominator(&all);
    let scale = |r: &[Rat]| -> Vec<BigInt> {
        r.iter()
            .map(|x| x.numer() * (&den / x.denom()))
            .collect()
    };
    let li: Vec<Vec<BigInt>> = l_basis.iter().map(|r| scale(r)).collect();
    let mut stacked = li.clone();
    stacked.extend(added.iter().map(|r| scale(r)));
    let big = row_basis(stacked);
    if big.len() != k {
        return Err(Error::Invalid(
            "added vectors leave the rational span of the lattice".into(),
        ));
    }
    // Write the L basis in terms of the L+V basis; the change of basis is an
    // integer matrix whose Smith form presents the quotient.
    let big_rows: Vec<Vec<Rat>> = big
        .iter()
        .map(|r| r.iter().map(|x| Rat::from_integer(x.clone())).collect())
        .collect();
    let mut x_rows = Vec::with_capacity(k);
    for row in &li {
        let target: Vec<Rat> = row.iter().map(|x| Rat::from_integer(x.clone())).collect();
        let sol = solve_row(&big_rows, &target)?;
        let ints: Vec<BigInt> = sol
            .iter()
            .map(|x| {
                if x.denom().is_one() {
                    Ok(x.numer().clone())
                } else {
                    Err(Error::Invalid("lattice solve was not integral".into()))
                }
            })
            .collect::<Result<_>>()?;
        x_rows.push(ints);
    }
    let m = IntMatrix::from_rows(x_rows);
    let structure = cokernel_structure(&m);
    Ok(structure)
}

/// Solve x * rows = target over Q (rows independent, square-or-wide system).
fn solve_row(rows: &[Vec<Rat>], target: &[Rat]) -> Result<Vec<Rat>> {
    let k = rows.len();
    let cols = target.len();
    // Transpose to a standard linear system: rows^T * x^T = target^T.
    let mut aug: Vec<Vec<Rat>> = (0..cols)
        .map(|j| {
            let mut row: Vec<Rat> = (0..k).map(|i| rows[i][j].clone()).collect();
            row.push(target[j].clone());
            row
        })
        .collect();
    let pivots = linalg::rref(&mut aug);
    let mut x = vec![Rat::zero(); k];
    for (row, &p) in aug.iter().zip(&pivots) {
        if p == k {
            return Err(Error::Invalid("inconsistent lattice solve".into()));
        }
        x[p] = row[k].clone();
    }
    Ok(x)
}

/// Smallest positive t with t * v in L (orders are finite in our uses).
pub fn class_order(l_basis: &[Vec<Rat>], v: &[Rat]) -> Result<BigInt> {
    let s = lattice_extension_structure(l_basis, &[v.to_vec()])?;
    s.order()
        .ok_or_else(|| Error::Invalid("class has infinite order".into()))
}

/// Group generated by several classes in Q^k / L.
pub fn classes_structure(l_basis: &[Vec<Rat>], vs: &[Vec<Rat>]) -> Result<AbelianStructure> {
    lattice_extension_structure(l_basis, vs)
}
