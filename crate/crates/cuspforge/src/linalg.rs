//! Small dense exact linear algebra over the rationals.
//!
//! Everything at desk scale (matrices up to a few hundred rows), so plain
//! row reduction with `BigRational` entries is fine. Integer lattice work
//! (Smith form, lattice indices) lives in [`crate::lattice`].

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Rat = BigRational;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

pub fn rat_frac(n: i64, d: i64) -> Rat {
    Rat::new(n.into(), d.into())
}

/// Row-reduce in place to reduced row echelon form.
/// Returns the pivot column of each nonzero row, in order.
pub fn rref(rows: &mut Vec<Vec<Rat>>) -> Vec<usize> {
    let nrows = rows.len();
    if nrows == 0 {
        return Vec::new();
    }
    let ncols = rows[0].len();
    let mut pivots = Vec::new();
    let mut r = 0usize;
    for c in 0..ncols {
        let Some(p) = (r..nrows).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..nrows {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..ncols {
                    let t = &rows[r][j] * &f;
                    rows[i][j] -= t;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == nrows {
            break;
        }
    }
    rows.retain(|row| row.iter().any(|x| !x.is_zero()));
    pivots
}

/// Rank over Q.
pub fn rank(rows: Vec<Vec<Rat>>) -> usize {
    let mut rows = rows;
    rref(&mut rows).len()
}

/// A row space in RREF with recorded pivots; reduces vectors to a canonical
/// representative of their class modulo the space.
#[derive(Clone, Debug)]
pub struct RowSpace {
    pub rows: Vec<Vec<Rat>>,
    pub pivots: Vec<usize>,
    pub ncols: usize,
}

impl RowSpace {
    pub fn from_rows(rows: Vec<Vec<Rat>>, ncols: usize) -> Self {
        let mut rows = rows;
        let pivots = rref(&mut rows);
        RowSpace { rows, pivots, ncols }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Subtract the unique combination of basis rows that clears the pivot
    /// coordinates of `v`.
    pub fn reduce(&self, v: &[Rat]) -> Vec<Rat> {
        let mut v = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !v[p].is_zero() {
                let f = v[p].clone();
                for j in 0..self.ncols {
                    let t = &row[j] * &f;
                    v[j] -= t;
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[Rat]) -> bool {
        self.reduce(v).iter().all(|x| x.is_zero())
    }

    /// The non-pivot coordinates, a basis of the quotient Q^ncols / rowspace.
    pub fn complement_coords(&self) -> Vec<usize> {
        (0..self.ncols).filter(|c| !self.pivots.contains(c)).collect()
    }
}

/// Least common multiple of the coefficient denominators.
pub fn common_denominator(v: &[Rat]) -> BigInt {
    let mut l = BigInt::one();
    for x in v {
        l = num_integer::lcm(l, x.denom().abs());
    }
    l
}

/// Scale a rational vector to integers by the common denominator.
pub fn scale_to_integers(v: &[Rat]) -> (Vec<BigInt>, BigInt) {
    let den = common_denominator(v);
    let ints = v
        .iter()
        .map(|x| x.numer() * (&den / x.denom()))
        .collect();
    (ints, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rref_and_rank() {
        let rows = vec![
            vec![rat(1), rat(2), rat(3)],
            vec![rat(2), rat(4), rat(6)],
            vec![rat(0), rat(1), rat(1)],
        ];
        assert_eq!(rank(rows), 2);
    }

    #[test]
    fn rowspace_reduce() {
        let space = RowSpace::from_rows(vec![vec![rat(1), rat(1), rat(0)]], 3);
        let v = vec![rat(2), rat(3), rat(4)];
        let r = space.reduce(&v);
        assert!(r[0].is_zero());
        assert_eq!(r[1], rat(1));
        assert_eq!(r[2], rat(4));
        assert!(space.contains(&[rat(5), rat(5), rat(0)]));
        assert!(!space.contains(&[rat(5), rat(4), rat(0)]));
    }

    #[test]
    fn scaling() {
        let v = vec![rat_frac(1, 2), rat_frac(2, 3)];
        let (ints, den) = scale_to_integers(&v);
        assert_eq!(den, BigInt::from(6));
        assert_eq!(ints, vec![BigInt::from(3), BigInt::from(4)]);
    }
}
