//! Mixed relative homology of X_Gamma in the xi+ / xi- coset bases.
//!
//! For g running over Gamma \ Gamma(2), the classes xi+(g) = {g0, g oo}+ and
//! xi-(g) = {g1, g(-1)}- freely generate H_1(X - boundary_minus, boundary_plus)
//! and H_1(X - boundary_plus, boundary_minus), and the intersection pairing is
//! the identity matrix in these bases. Boundary maps send xi+(g) to
//! (g oo) - (g 0) and xi-(g) to (g 1) - (g(-1)); the loop maps lambda-/+ send a
//! cusp to the class of a small counterclockwise loop around it:
//!
//! ```text
//!   lambda-(g oo) = - sum_k xi-(g A^k)         (k over the cusp width)
//!   lambda-(g 0)  = + sum_k xi-(g B^k)
//!   lambda+(g 1)  =   sum_k xi+(g (AB^-1)^k B) - xi+(g (AB^-1)^k)
//! ```
//!
//! The Manin presentation realizes H_1(X, all cusps) as Z[Gamma \ SL_2(Z)]
//! modulo the two-term and three-term relations x + xS and x + xU + xU^2,
//! with Gamma \ SL_2(Z) built as (Gamma \ Gamma(2)) x (Gamma(2) \ SL_2(Z))
//! over a fixed six-element transversal indexed by SL_2(F_2).

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::Zero;

use crate::dessin::{Cusp, CuspKind, CuspTable, Dessin};
use crate::gamma2::{self, Mat2};
use crate::linalg::{self, Rat, RowSpace};
use crate::{Error, Result};

/// Which mixed homology group a vector lives in.
#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Coefficient vector over the coset basis xi+ or xi-.
#[derive(Clone, PartialEq, Debug)]
pub struct SymbolVector<S> {
    pub side: Side,
    pub coeffs: Vec<S>,
}

impl<S: Scalar> SymbolVector<S> {
    pub fn zero(side: Side, n: usize) -> Self {
        SymbolVector {
            side,
            coeffs: vec![S::zero(); n],
        }
    }

    /// The basis vector xi_side(coset).
    pub fn basis(side: Side, n: usize, coset: usize) -> Self {
        let mut v = Self::zero(side, n);
        v.coeffs[coset] = S::one();
        v
    }

    pub fn add_scaled(&mut self, other: &Self, factor: &S) {
        assert_eq!(self.side, other.side);
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x = x.clone() + y.clone() * factor.clone();
        }
    }

    pub fn scale(&mut self, factor: &S) {
        for x in self.coeffs.iter_mut() {
            *x = x.clone() * factor.clone();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|x| x.is_zero())
    }
}

/// Minimal scalar requirements; exact rationals for structure theory, floats
/// for numerically assembled cycles.
pub trait Scalar:
    Clone
    + PartialEq
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn one() -> Self;
}

impl Scalar for Rat {
    fn one() -> Self {
        num_traits::One::one()
    }
}

impl Scalar for f64 {
    fn one() -> Self {
        1.0
    }
}

/// A divisor supported on cusps, with rational coefficients.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct CuspDivisor {
    coeffs: BTreeMap<Cusp, Rat>,
}

impl CuspDivisor {
    pub fn zero() -> Self {
        CuspDivisor::default()
    }

    pub fn single(cusp: Cusp) -> Self {
        let mut d = CuspDivisor::zero();
        d.add(cusp, linalg::rat(1));
        d
    }

    pub fn add(&mut self, cusp: Cusp, coeff: Rat) {
        if coeff.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(cusp).or_insert_with(Rat::zero);
        *entry += coeff;
        if entry.is_zero() {
            self.coeffs.remove(&cusp);
        }
    }

    pub fn add_divisor(&mut self, other: &CuspDivisor, factor: &Rat) {
        for (c, v) in &other.coeffs {
            self.add(*c, v * factor);
        }
    }

    pub fn neg(&self) -> CuspDivisor {
        let mut d = CuspDivisor::zero();
        for (c, v) in &self.coeffs {
            d.add(*c, -v.clone());
        }
        d
    }

    pub fn coeff(&self, cusp: &Cusp) -> Rat {
        self.coeffs.get(cusp).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn degree(&self) -> Rat {
        self.coeffs.values().fold(Rat::zero(), |a, b| a + b)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn support(&self) -> impl Iterator<Item = (&Cusp, &Rat)> {
        self.coeffs.iter()
    }

    pub fn supported_on(&self, kinds: &[CuspKind]) -> bool {
        self.coeffs.keys().all(|c| kinds.contains(&c.kind))
    }

    /// The part of the divisor above the given X(2) cusp kind.
    pub fn restrict(&self, kind: CuspKind) -> CuspDivisor {
        let mut d = CuspDivisor::zero();
        for (c, v) in &self.coeffs {
            if c.kind == kind {
                d.add(*c, v.clone());
            }
        }
        d
    }
}

impl std::fmt::Display for CuspDivisor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (c, v) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "{}*({})", v, c)?;
            first = false;
        }
        Ok(())
    }
}

/// Homology machinery bound to one dessin.
pub struct MixedHomology<'a> {
    pub dessin: &'a Dessin,
    pub cusps: CuspTable,
}

impl<'a> MixedHomology<'a> {
    pub fn new(dessin: &'a Dessin) -> Self {
        MixedHomology {
            dessin,
            cusps: dessin.cusps(),
        }
    }

    /// Boundary of a side-plus vector: xi+(g) |-> (g oo) - (g 0).
    pub fn boundary_plus(&self, v: &SymbolVector<Rat>) -> Result<CuspDivisor> {
        if v.side != Side::Plus {
            return Err(Error::WrongSupport("boundary_plus needs a side-plus vector".into()));
        }
        let mut d = CuspDivisor::zero();
        for (i, coeff) in v.coeffs.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            d.add(self.cusps.cusp_of(CuspKind::Infinity, i).cusp, coeff.clone());
            d.add(self.cusps.cusp_of(CuspKind::Zero, i).cusp, -coeff.clone());
        }
        Ok(d)
    }

    /// Boundary of a side-minus vector: xi-(g) |-> (g 1) - (g(-1)).
    /// The cusp g(-1) is the one-kind cusp of the coset g A^{-1}.
    pub fn boundary_minus(&self, v: &SymbolVector<Rat>) -> Result<CuspDivisor> {
        if v.side != Side::Minus {
            return Err(Error::WrongSupport("boundary_minus needs a side-minus vector".into()));
        }
        let inv_a = |i: usize| self.dessin.apply_gen(i, gamma2::Gen::A, -1);
        let mut d = CuspDivisor::zero();
        for (i, coeff) in v.coeffs.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            d.add(self.cusps.cusp_of(CuspKind::One, i).cusp, coeff.clone());
            d.add(self.cusps.cusp_of(CuspKind::One, inv_a(i)).cusp, -coeff.clone());
        }
        Ok(d)
    }

    pub fn boundary(&self, v: &SymbolVector<Rat>) -> Result<CuspDivisor> {
        match v.side {
            Side::Plus => self.boundary_plus(v),
            Side::Minus => self.boundary_minus(v),
        }
    }

    /// Loop around a boundary-plus cusp, as a side-minus vector.
    pub fn lambda_minus(&self, j: Cusp) -> Result<SymbolVector<Rat>> {
        let orbit = self.cusps.orbit(j)?;
        let mut v = SymbolVector::zero(Side::Minus, self.dessin.n());
        match j.kind {
            CuspKind::Infinity => {
                for &c in &orbit.orbit {
                    v.coeffs[c] -= Rat::from_integer(1.into());
                }
            }
            CuspKind::Zero => {
                for &c in &orbit.orbit {
                    v.coeffs[c] += Rat::from_integer(1.into());
                }
            }
            CuspKind::One => {
                return Err(Error::WrongSupport(format!(
                    "lambda_minus is defined for cusps above 0 or infinity, got {}",
                    j
                )))
            }
        }
        Ok(v)
    }

    /// Loop around a boundary-minus cusp, as a side-plus vector.
    pub fn lambda_plus(&self, j: Cusp) -> Result<SymbolVector<Rat>> {
        if j.kind != CuspKind::One {
            return Err(Error::WrongSupport(format!(
                "lambda_plus is defined for cusps above 1, got {}",
                j
            )));
        }
        let orbit = self.cusps.orbit(j)?;
        let mut v = SymbolVector::zero(Side::Plus, self.dessin.n());
        let mut x = orbit.cusp.rep;
        for _ in 0..orbit.width() {
            // term xi+(g (AB^-1)^k B) - xi+(g (AB^-1)^k)
            v.coeffs[self.dessin.pi_b()[x]] += Rat::from_integer(1.into());
            v.coeffs[x] -= Rat::from_integer(1.into());
            x = self.dessin.step_one_kind_inv(x);
        }
        Ok(v)
    }

    /// Intersection number: diagonal pairing of the xi+ and xi- coordinates.
    pub fn intersect<S: Scalar>(
        &self,
        vp: &SymbolVector<S>,
        vm: &SymbolVector<S>,
    ) -> Result<S> {
        if vp.side != Side::Plus || vm.side != Side::Minus {
            return Err(Error::WrongSupport(
                "intersect takes a side-plus and a side-minus vector, in that order".into(),
            ));
        }
        let mut acc = S::zero();
        for (x, y) in vp.coeffs.iter().zip(&vm.coeffs) {
            acc = acc + x.clone() * y.clone();
        }
        Ok(acc)
    }
}

/// Index of a transversal element by its reduction mod 2.
fn transversal_slot(key: (u8, u8, u8, u8)) -> usize {
    match key {
        (1, 0, 0, 1) => 0, // Id
        (0, 1, 1, 0) => 1, // S
        (0, 1, 1, 1) => 2, // U
        (1, 0, 1, 1) => 3, // US
        (1, 1, 1, 0) => 4, // U^2
        (1, 1, 0, 1) => 5, // U^2 S
        _ => unreachable!("not an SL_2(F_2) class of a determinant-1 matrix"),
    }
}

/// The fixed transversal of Gamma(2) \ SL_2(Z): Id, S, U, US, U^2, U^2 S.
pub fn gamma2_transversal() -> Vec<Mat2> {
    let u = Mat2::gen_u();
    let s = Mat2::gen_s();
    let u2 = &u * &u;
    vec![
        Mat2::identity(),
        s.clone(),
        u.clone(),
        &u * &s,
        u2.clone(),
        &u2 * &s,
    ]
}

/// Manin-symbol presentation of H_1(X_Gamma, all cusps; Z).
pub struct ManinPresentation<'a> {
    pub dessin: &'a Dessin,
    pub cusps: CuspTable,
    pub transversal: Vec<Mat2>,
    /// Sparse relation rows over the 6n full cosets.
    pub relations: Vec<Vec<(usize, i64)>>,
    /// For each full coset, the boundary divisor of its Manin symbol.
    pub boundary: Vec<CuspDivisor>,
    /// Rank of the quotient, equal to 2 g + #cusps - 1.
    pub rank: usize,
    relation_space: RowSpace,
    perm_s: Vec<usize>,
    perm_u: Vec<usize>,
}

impl<'a> ManinPresentation<'a> {
    pub fn new(dessin: &'a Dessin) -> Result<Self> {
        let n = dessin.n();
        let transversal = gamma2_transversal();
        let size = 6 * n;
        let index = |i: usize, e: usize| i * 6 + e;

        // Right action of M on pairs (i, e): t_e M = gamma t_{e'}, gamma in
        // Gamma(2), new pair (i * gamma, e').
        let act = |m: &Mat2| -> Result<Vec<usize>> {
            let mut perm = vec![0usize; size];
            for e in 0..6 {
                let te_m = &transversal[e] * m;
                let e2 = transversal_slot(te_m.mod2_key());
                let gamma = &te_m * &transversal[e2].inv();
                let w = gamma2::decompose_ab(&gamma)?;
                for i in 0..n {
                    perm[index(i, e)] = index(dessin.apply_word(i, &w), e2);
                }
            }
            Ok(perm)
        };
        let perm_s = act(&Mat2::gen_s())?;
        let perm_u = act(&Mat2::gen_u())?;

        let mut relations: Vec<Vec<(usize, i64)>> = Vec::with_capacity(2 * size);
        for x in 0..size {
            relations.push(sparse_sum(&[x, perm_s[x]]));
        }
        for x in 0..size {
            relations.push(sparse_sum(&[x, perm_u[x], perm_u[perm_u[x]]]));
        }

        let cusps = dessin.cusps();
        // t_e oo and t_e 0 as X(2) cusps, read off the fixed transversal.
        let t_infty = [
            CuspKind::Infinity,
            CuspKind::Zero,
            CuspKind::Zero,
            CuspKind::One,
            CuspKind::One,
            CuspKind::Infinity,
        ];
        let t_zero = [
            CuspKind::Zero,
            CuspKind::Infinity,
            CuspKind::One,
            CuspKind::Zero,
            CuspKind::Infinity,
            CuspKind::One,
        ];
        let mut boundary = Vec::with_capacity(size);
        for i in 0..n {
            for e in 0..6 {
                let mut d = CuspDivisor::zero();
                d.add(cusps.cusp_of(t_infty[e], i).cusp, linalg::rat(1));
                d.add(cusps.cusp_of(t_zero[e], i).cusp, -linalg::rat(1));
                boundary.push(d);
            }
        }
        // boundary was filled in index order (i, e) -> i*6+e; keep it that way.

        let rows: Vec<Vec<Rat>> = relations
            .iter()
            .map(|r| {
                let mut row = vec![Rat::zero(); size];
                for &(j, c) in r {
                    row[j] += linalg::rat(c);
                }
                row
            })
            .collect();
        let relation_space = RowSpace::from_rows(rows, size);
        let rank = size - relation_space.rank();

        Ok(ManinPresentation {
            dessin,
            cusps,
            transversal,
            relations,
            boundary,
            rank,
            relation_space,
            perm_s,
            perm_u,
        })
    }

    pub fn size(&self) -> usize {
        6 * self.dessin.n()
    }

    pub fn index(&self, coset: usize, slot: usize) -> usize {
        coset * 6 + slot
    }

    /// Full coset of an arbitrary g in SL_2(Z).
    pub fn full_coset_of(&self, g: &Mat2) -> Result<usize> {
        let e = transversal_slot(g.mod2_key());
        let gamma = g * &self.transversal[e].inv();
        Ok(self.index(self.dessin.coset_of(&gamma)?, e))
    }

    pub fn act_s(&self, x: usize) -> usize {
        self.perm_s[x]
    }

    pub fn act_u(&self, x: usize) -> usize {
        self.perm_u[x]
    }

    /// Canonical representative of a vector modulo the relation space.
    pub fn reduce(&self, v: &[Rat]) -> Vec<Rat> {
        self.relation_space.reduce(v)
    }

    pub fn relation_space(&self) -> &RowSpace {
        &self.relation_space
    }

    /// Boundary divisor of a full-coset vector.
    pub fn boundary_of(&self, v: &[Rat]) -> CuspDivisor {
        let mut d = CuspDivisor::zero();
        for (x, coeff) in v.iter().enumerate() {
            if !coeff.is_zero() {
                d.add_divisor(&self.boundary[x], coeff);
            }
        }
        d
    }

    /// Transport a side-plus vector along xi+(g) |-> xi(g) and reduce modulo
    /// the Manin relations. Side minus has no such transport.
    pub fn project_to_full(&self, v: &SymbolVector<Rat>) -> Result<Vec<Rat>> {
        if v.side != Side::Plus {
            return Err(Error::WrongSupport(
                "project_to_full is only defined on side plus".into(),
            ));
        }
        let mut full = vec![Rat::zero(); self.size()];
        for (i, c) in v.coeffs.iter().enumerate() {
            full[self.index(i, 0)] = c.clone();
        }
        Ok(self.reduce(&full))
    }
}

fn sparse_sum(indices: &[usize]) -> Vec<(usize, i64)> {
    let mut m: BTreeMap<usize, i64> = BTreeMap::new();
    for &i in indices {
        *m.entry(i).or_insert(0) += 1;
    }
    m.into_iter().filter(|&(_, c)| c != 0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dessin::Dessin;

    fn rat(n: i64) -> Rat {
        linalg::rat(n)
    }

    #[test]
    fn gamma2_boundaries() {
        let d = Dessin::gamma2();
        let h = MixedHomology::new(&d);
        let xi = SymbolVector::basis(Side::Plus, 1, 0);
        let b = h.boundary_plus(&xi).unwrap();
        let inf = Cusp { kind: CuspKind::Infinity, rep: 0 };
        let zero = Cusp { kind: CuspKind::Zero, rep: 0 };
        assert_eq!(b.coeff(&inf), rat(1));
        assert_eq!(b.coeff(&zero), rat(-1));
        assert!(b.degree().is_zero());

        let ximinus = SymbolVector::basis(Side::Minus, 1, 0);
        let bm = h.boundary_minus(&ximinus).unwrap();
        assert!(bm.is_zero());
    }

    #[test]
    fn gamma2_lambdas() {
        let d = Dessin::gamma2();
        let h = MixedHomology::new(&d);
        let inf = Cusp { kind: CuspKind::Infinity, rep: 0 };
        let zero = Cusp { kind: CuspKind::Zero, rep: 0 };
        let one = Cusp { kind: CuspKind::One, rep: 0 };

        let lm = h.lambda_minus(inf).unwrap();
        assert_eq!(lm.coeffs, vec![rat(-1)]);
        let lz = h.lambda_minus(zero).unwrap();
        assert_eq!(lz.coeffs, vec![rat(1)]);
        assert!(h.lambda_minus(one).is_err());

        let lp = h.lambda_plus(one).unwrap();
        assert!(lp.is_zero());
        assert!(h.lambda_plus(inf).is_err());
    }

    #[test]
    fn fermat3_lambda_minus_and_boundaries() {
        let d = Dessin::from_fermat(3).unwrap();
        let h = MixedHomology::new(&d);
        // Infinity-kind cusp containing coset (0,0): the piA-orbit {0, 3, 6}.
        let j = h.cusps.cusp_of(CuspKind::Infinity, 0).cusp;
        let v = h.lambda_minus(j).unwrap();
        let mut expect = SymbolVector::zero(Side::Minus, 9);
        for c in [0usize, 3, 6] {
            expect.coeffs[c] = rat(-1);
        }
        assert_eq!(v, expect);
        assert!(h.boundary_minus(&v).unwrap().is_zero());
    }

    #[test]
    fn loops_are_closed_and_sum_to_zero() {
        for d in [Dessin::from_fermat(3).unwrap(), Dessin::from_fermat(4).unwrap()] {
            let h = MixedHomology::new(&d);
            let mut total_minus = SymbolVector::zero(Side::Minus, d.n());
            for j in h.cusps.boundary_plus() {
                let v = h.lambda_minus(j).unwrap();
                assert!(h.boundary_minus(&v).unwrap().is_zero(), "open loop at {}", j);
                total_minus.add_scaled(&v, &rat(1));
            }
            assert!(total_minus.is_zero());

            let mut total_plus = SymbolVector::zero(Side::Plus, d.n());
            for j in h.cusps.boundary_minus() {
                let v = h.lambda_plus(j).unwrap();
                assert!(h.boundary_plus(&v).unwrap().is_zero(), "open loop at {}", j);
                total_plus.add_scaled(&v, &rat(1));
            }
            assert!(total_plus.is_zero());
        }
    }

    /// The sign-locking duality: pairing xi+ against a lambda- loop reads off
    /// minus the boundary coefficient, and symmetrically for lambda+.
    #[test]
    fn duality_locks_signs() {
        let dessins = vec![
            Dessin::gamma2(),
            Dessin::new(vec![1, 0], vec![0, 1]).unwrap(),
            Dessin::from_fermat(3).unwrap(),
            // A nonabelian example: piA, piB generate S_3 on cosets.
            Dessin::new(vec![1, 0, 2], vec![0, 2, 1]).unwrap(),
        ];
        for d in &dessins {
            let h = MixedHomology::new(d);
            for g in 0..d.n() {
                let xp = SymbolVector::basis(Side::Plus, d.n(), g);
                let bp = h.boundary_plus(&xp).unwrap();
                for j in h.cusps.boundary_plus() {
                    let lm = h.lambda_minus(j).unwrap();
                    let pairing = h.intersect(&xp, &lm).unwrap();
                    assert_eq!(pairing, -bp.coeff(&j), "lambda- duality at {} coset {}", j, g);
                }
                let xm = SymbolVector::basis(Side::Minus, d.n(), g);
                let bm = h.boundary_minus(&xm).unwrap();
                for j in h.cusps.boundary_minus() {
                    let lp = h.lambda_plus(j).unwrap();
                    let pairing = h.intersect(&lp, &xm).unwrap();
                    assert_eq!(pairing, -bm.coeff(&j), "lambda+ duality at {} coset {}", j, g);
                }
            }
        }
    }

    #[test]
    fn manin_rank_gamma2_and_fermat() {
        let d = Dessin::gamma2();
        let p = ManinPresentation::new(&d).unwrap();
        assert_eq!(p.size(), 6);
        assert_eq!(p.rank, 2);

        let d3 = Dessin::from_fermat(3).unwrap();
        let p3 = ManinPresentation::new(&d3).unwrap();
        assert_eq!(p3.size(), 54);
        assert_eq!(p3.rank, 10);
    }

    #[test]
    fn manin_two_term_rows() {
        let d = Dessin::from_fermat(2).unwrap();
        let p = ManinPresentation::new(&d).unwrap();
        let size = p.size();
        for row in p.relations.iter().take(size) {
            match row.len() {
                1 => assert_eq!(row[0].1, 2),
                2 => assert!(row.iter().all(|&(_, c)| c == 1)),
                other => panic!("unexpected 2-term row with {} entries", other),
            }
        }
    }

    #[test]
    fn project_kills_lambda_plus() {
        let d = Dessin::from_fermat(3).unwrap();
        let h = MixedHomology::new(&d);
        let p = ManinPresentation::new(&d).unwrap();
        for j in h.cusps.boundary_minus() {
            let v = h.lambda_plus(j).unwrap();
            let reduced = p.project_to_full(&v).unwrap();
            assert!(reduced.iter().all(|x| x.is_zero()), "lambda+({}) survives", j);
        }
        let vminus = SymbolVector::zero(Side::Minus, d.n());
        assert!(p.project_to_full(&vminus).is_err());
    }

    #[test]
    fn manin_boundary_degree_zero() {
        let d = Dessin::from_fermat(3).unwrap();
        let p = ManinPresentation::new(&d).unwrap();
        for b in &p.boundary {
            assert!(b.degree().is_zero());
        }
    }
}
