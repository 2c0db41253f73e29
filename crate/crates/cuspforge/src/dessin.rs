//! Permutation-pair model of a finite-index subgroup of Gamma(2).
//!
//! A subgroup Gamma of Gamma(2) containing -Id is encoded by the right action
//! of the free generators A, B on the coset set Gamma \ Gamma(2): this is the
//! dessin d'enfant of the covering X_Gamma -> X(2). Coset 0 is Gamma itself.
//!
//! Cusps of X_Gamma come in three kinds according to the underlying X(2) cusp:
//! infinity-kind cusps are the orbits of piA (A stabilizes infinity),
//! zero-kind cusps the orbits of piB, and one-kind cusps the orbits of the
//! right action of BA^{-1} (the stabilizer generator of 1). The width of a
//! cusp is its orbit length.

use serde::{Deserialize, Serialize};

use crate::gamma2::{self, AbWord, Gen, Mat2};
use crate::{Error, Result};

/// Which X(2) cusp a cusp of X_Gamma lies above.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CuspKind {
    Zero,
    One,
    Infinity,
}

impl CuspKind {
    pub const ALL: [CuspKind; 3] = [CuspKind::Zero, CuspKind::One, CuspKind::Infinity];

    pub fn name(self) -> &'static str {
        match self {
            CuspKind::Zero => "zero",
            CuspKind::One => "one",
            CuspKind::Infinity => "infinity",
        }
    }
}

/// Canonical cusp label: kind plus the smallest coset index in its orbit.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Cusp {
    pub kind: CuspKind,
    pub rep: usize,
}

impl std::fmt::Display for Cusp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.kind.name(), self.rep)
    }
}

/// A single cusp orbit: its canonical label, the coset orbit, and the width.
#[derive(Clone, Debug)]
pub struct CuspOrbit {
    pub cusp: Cusp,
    pub orbit: Vec<usize>,
}

impl CuspOrbit {
    pub fn width(&self) -> usize {
        self.orbit.len()
    }
}

/// All cusps of a dessin, grouped by kind.
#[derive(Clone, Debug)]
pub struct CuspTable {
    pub zero: Vec<CuspOrbit>,
    pub one: Vec<CuspOrbit>,
    pub infinity: Vec<CuspOrbit>,
    /// cusp_of[kind][coset] = index into the kind's orbit list.
    orbit_of: [Vec<usize>; 3],
}

impl CuspTable {
    pub fn kind(&self, kind: CuspKind) -> &[CuspOrbit] {
        match kind {
            CuspKind::Zero => &self.zero,
            CuspKind::One => &self.one,
            CuspKind::Infinity => &self.infinity,
        }
    }

    /// Total number of cusps.
    pub fn count(&self) -> usize {
        self.zero.len() + self.one.len() + self.infinity.len()
    }

    /// The cusp of the given kind containing a coset.
    pub fn cusp_of(&self, kind: CuspKind, coset: usize) -> &CuspOrbit {
        let idx = self.orbit_of[kind_index(kind)][coset];
        &self.kind(kind)[idx]
    }

    /// Cusps above 0 and infinity (the "plus" boundary set).
    pub fn boundary_plus(&self) -> Vec<Cusp> {
        let mut v: Vec<Cusp> = self
            .zero
            .iter()
            .chain(self.infinity.iter())
            .map(|o| o.cusp)
            .collect();
        v.sort();
        v
    }

    /// Cusps above 1 (the "minus" boundary set).
    pub fn boundary_minus(&self) -> Vec<Cusp> {
        self.one.iter().map(|o| o.cusp).collect()
    }

    /// All cusps in canonical order.
    pub fn all(&self) -> Vec<Cusp> {
        let mut v: Vec<Cusp> = self
            .zero
            .iter()
            .chain(self.one.iter())
            .chain(self.infinity.iter())
            .map(|o| o.cusp)
            .collect();
        v.sort();
        v
    }

    pub fn orbit(&self, cusp: Cusp) -> Result<&CuspOrbit> {
        self.kind(cusp.kind)
            .iter()
            .find(|o| o.cusp == cusp)
            .ok_or_else(|| Error::OutOfRange(format!("no cusp {}", cusp)))
    }
}

fn kind_index(kind: CuspKind) -> usize {
    match kind {
        CuspKind::Zero => 0,
        CuspKind::One => 1,
        CuspKind::Infinity => 2,
    }
}

/// Serialized dessin: 0-based one-line permutation notation.
#[derive(Serialize, Deserialize)]
struct DessinRepr {
    n: usize,
    #[serde(rename = "piA")]
    pi_a: Vec<usize>,
    #[serde(rename = "piB")]
    pi_b: Vec<usize>,
}

/// A finite-index subgroup of Gamma(2) as a transitive permutation pair.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Dessin {
    n: usize,
    pi_a: Vec<usize>,
    pi_b: Vec<usize>,
    inv_a: Vec<usize>,
    inv_b: Vec<usize>,
}

impl Dessin {
    /// Build from the right actions of A and B; rejects invalid input.
    pub fn new(pi_a: Vec<usize>, pi_b: Vec<usize>) -> Result<Self> {
        let d = Self::new_unchecked(pi_a, pi_b)?;
        let violations = d.validate();
        if violations.is_empty() {
            Ok(d)
        } else {
            Err(Error::InvalidDessin(violations))
        }
    }

    fn new_unchecked(pi_a: Vec<usize>, pi_b: Vec<usize>) -> Result<Self> {
        let n = pi_a.len();
        if n == 0 || pi_b.len() != n {
            return Err(Error::InvalidDessin(vec![format!(
                "permutation lengths disagree or are zero: {} vs {}",
                n,
                pi_b.len()
            )]));
        }
        let invert = |p: &[usize]| -> Vec<usize> {
            let mut inv = vec![0; p.len()];
            for (i, &j) in p.iter().enumerate() {
                if j < p.len() {
                    inv[j] = i;
                }
            }
            inv
        };
        let inv_a = invert(&pi_a);
        let inv_b = invert(&pi_b);
        Ok(Dessin {
            n,
            pi_a,
            pi_b,
            inv_a,
            inv_b,
        })
    }

    /// Report-style validation: empty list means both invariants hold.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        for (name, p) in [("piA", &self.pi_a), ("piB", &self.pi_b)] {
            let mut seen = vec![false; self.n];
            for &j in p {
                if j >= self.n {
                    violations.push(format!("{} maps outside 0..{}", name, self.n));
                    break;
                }
                if seen[j] {
                    violations.push(format!("{} is not a bijection", name));
                    break;
                }
                seen[j] = true;
            }
        }
        if !violations.is_empty() {
            return violations;
        }
        // Orbit of 0 under the monoid generated by piA, piB; on a finite set
        // this equals the group orbit.
        let mut reached = vec![false; self.n];
        let mut stack = vec![0usize];
        reached[0] = true;
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for y in [self.pi_a[x], self.pi_b[x]] {
                if !reached[y] {
                    reached[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        if count != self.n {
            violations.push(format!(
                "action is not transitive: orbit of 0 has size {} of {}",
                count, self.n
            ));
        }
        violations
    }

    /// The dessin of Gamma(2) itself: one coset.
    pub fn gamma2() -> Self {
        Dessin::new(vec![0], vec![0]).expect("trivial dessin is valid")
    }

    /// The Fermat dessin Phi_N: cosets are (a, b) in (Z/N)^2, A and B act by
    /// the two translations. Coset (a, b) has index a*N + b.
    pub fn from_fermat(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::OutOfRange("fermat level N must be >= 1".into()));
        }
        let n = n as usize;
        let idx = |a: usize, b: usize| (a % n) * n + (b % n);
        let mut pi_a = vec![0; n * n];
        let mut pi_b = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                pi_a[idx(a, b)] = idx(a + 1, b);
                pi_b[idx(a, b)] = idx(a, b + 1);
            }
        }
        Dessin::new(pi_a, pi_b)
    }

    /// Generic quotient construction: the images of A and B in a transitive
    /// permutation group.
    pub fn from_quotient_hom(image_a: Vec<usize>, image_b: Vec<usize>) -> Result<Self> {
        Dessin::new(image_a, image_b)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pi_a(&self) -> &[usize] {
        &self.pi_a
    }

    pub fn pi_b(&self) -> &[usize] {
        &self.pi_b
    }

    /// Right action of a single generator power on a coset.
    pub fn apply_gen(&self, coset: usize, g: Gen, e: i64) -> usize {
        let (fwd, bwd) = match g {
            Gen::A => (&self.pi_a, &self.inv_a),
            Gen::B => (&self.pi_b, &self.inv_b),
        };
        let mut x = coset;
        // Orbit lengths divide n, so reduce the exponent mod the orbit length.
        let mut orbit_len = 1usize;
        let mut y = fwd[coset];
        while y != coset {
            y = fwd[y];
            orbit_len += 1;
        }
        let e = e.rem_euclid(orbit_len as i64) as usize;
        if e <= orbit_len / 2 {
            for _ in 0..e {
                x = fwd[x];
            }
        } else {
            for _ in 0..(orbit_len - e) {
                x = bwd[x];
            }
        }
        x
    }

    /// Right action of a whole word.
    pub fn apply_word(&self, coset: usize, w: &AbWord) -> usize {
        let mut x = coset;
        for &(g, e) in &w.letters {
            x = self.apply_gen(x, g, e);
        }
        x
    }

    /// Index of the coset Gamma*m. The central sign is ignored (-Id in Gamma).
    pub fn coset_of(&self, m: &Mat2) -> Result<usize> {
        let w = gamma2::decompose_ab(m)?;
        Ok(self.apply_word(0, &w))
    }

    /// One-kind step: the right action of BA^{-1}, the stabilizer generator
    /// of the cusp 1. x |-> x * (B A^{-1}) applies piB first, then piA^{-1}.
    pub fn step_one_kind(&self, coset: usize) -> usize {
        self.inv_a[self.pi_b[coset]]
    }

    /// One step of the right action of A B^{-1} (inverse of the above).
    pub fn step_one_kind_inv(&self, coset: usize) -> usize {
        self.inv_b[self.pi_a[coset]]
    }

    fn orbits_of(&self, step: impl Fn(usize) -> usize) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n];
        let mut orbits = Vec::new();
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut orbit = vec![start];
            seen[start] = true;
            let mut x = step(start);
            while x != start {
                seen[x] = true;
                orbit.push(x);
                x = step(x);
            }
            orbits.push(orbit);
        }
        orbits
    }

    /// Enumerate all cusps with orbits and widths.
    pub fn cusps(&self) -> CuspTable {
        let build = |kind: CuspKind, orbits: Vec<Vec<usize>>| -> Vec<CuspOrbit> {
            let mut v: Vec<CuspOrbit> = orbits
                .into_iter()
                .map(|orbit| {
                    let rep = *orbit.iter().min().unwrap();
                    CuspOrbit {
                        cusp: Cusp { kind, rep },
                        orbit,
                    }
                })
                .collect();
            v.sort_by_key(|o| o.cusp.rep);
            v
        };
        let zero = build(CuspKind::Zero, self.orbits_of(|x| self.pi_b[x]));
        let infinity = build(CuspKind::Infinity, self.orbits_of(|x| self.pi_a[x]));
        let one = build(CuspKind::One, self.orbits_of(|x| self.step_one_kind(x)));
        let mut orbit_of = [vec![0; self.n], vec![0; self.n], vec![0; self.n]];
        for (k, list) in [(CuspKind::Zero, &zero), (CuspKind::One, &one), (CuspKind::Infinity, &infinity)] {
            for (i, o) in list.iter().enumerate() {
                for &c in &o.orbit {
                    orbit_of[kind_index(k)][c] = i;
                }
            }
        }
        CuspTable {
            zero,
            one,
            infinity,
            orbit_of,
        }
    }

    /// Genus from the Euler characteristic: g = (2 + n - #cusps) / 2.
    pub fn genus(&self) -> Result<usize> {
        let c = self.cusps().count();
        let num = 2 + self.n as i64 - c as i64;
        if num < 0 || num % 2 != 0 {
            return Err(Error::InvalidDessin(vec![format!(
                "2 + n - cusps = {} is not a nonnegative even number",
                num
            )]));
        }
        Ok((num / 2) as usize)
    }

    /// A word representative for every coset, found by BFS from coset 0 along
    /// the A, B edges. Words are short (BFS-minimal in generator steps).
    pub fn coset_words(&self) -> Vec<AbWord> {
        let mut words: Vec<Option<AbWord>> = vec![None; self.n];
        words[0] = Some(AbWord::identity());
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for (g, e, y) in [
                (Gen::A, 1i64, self.pi_a[x]),
                (Gen::B, 1, self.pi_b[x]),
                (Gen::A, -1, self.inv_a[x]),
                (Gen::B, -1, self.inv_b[x]),
            ] {
                if words[y].is_none() {
                    let mut w = words[x].clone().unwrap();
                    w.push(g, e);
                    words[y] = Some(w);
                    queue.push_back(y);
                }
            }
        }
        words.into_iter().map(|w| w.unwrap()).collect()
    }

    /// Matrix representatives for every coset.
    pub fn coset_representatives(&self) -> Vec<Mat2> {
        self.coset_words()
            .iter()
            .map(gamma2::evaluate_word)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&DessinRepr {
            n: self.n,
            pi_a: self.pi_a.clone(),
            pi_b: self.pi_b.clone(),
        })
        .expect("dessin serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let repr: DessinRepr =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("dessin json: {}", e)))?;
        if repr.pi_a.len() != repr.n || repr.pi_b.len() != repr.n {
            return Err(Error::InvalidDessin(vec![format!(
                "declared n = {} but permutations have lengths {} and {}",
                repr.n,
                repr.pi_a.len(),
                repr.pi_b.len()
            )]));
        }
        Dessin::new(repr.pi_a, repr.pi_b)
    }
}

/// Fermat coset index for (a, b) in (Z/N)^2.
pub fn fermat_index(n: u64, a: u64, b: u64) -> usize {
    let n = n as usize;
    (a as usize % n) * n + (b as usize % n)
}

/// Inverse of [`fermat_index`].
pub fn fermat_coords(n: u64, idx: usize) -> (u64, u64) {
    let n = n as usize;
    ((idx / n) as u64, (idx % n) as u64)
}
