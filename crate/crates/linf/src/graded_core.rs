//! Graded vector spaces with named bases, the Koszul sign rule, suspension
//! and duals.

use std::collections::HashMap;
use std::fmt;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::Q;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GradedError {
    #[error("permutation has length {perm} but {degrees} degrees were given")]
    LengthMismatch { perm: usize, degrees: usize },
    #[error("{0:?} is not a permutation")]
    NotAPermutation(Vec<usize>),
    #[error("basis name {0:?} occurs twice")]
    DuplicateName(String),
    #[error("unknown basis name {0:?}")]
    UnknownName(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grading {
    Homological,
    Cohomological,
}

impl Grading {
    pub fn flip(self) -> Self {
        match self {
            Grading::Homological => Grading::Cohomological,
            Grading::Cohomological => Grading::Homological,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisElement {
    pub name: String,
    pub degree: i64,
}

/// Finite graded space with a named, ordered basis. Degrees are stored in
/// the space's own grading mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedSpace {
    basis: Vec<BasisElement>,
    grading: Grading,
    index: HashMap<String, usize>,
}

impl GradedSpace {
    pub fn new(basis: Vec<BasisElement>, grading: Grading) -> Result<Self, GradedError> {
        let mut index = HashMap::new();
        for (i, b) in basis.iter().enumerate() {
            if index.insert(b.name.clone(), i).is_some() {
                return Err(GradedError::DuplicateName(b.name.clone()));
            }
        }
        Ok(GradedSpace {
            basis,
            grading,
            index,
        })
    }

    /// Shorthand for tests and examples; panics on duplicate names.
    pub fn from_pairs(pairs: &[(&str, i64)], grading: Grading) -> Self {
        let basis = pairs
            .iter()
            .map(|(n, d)| BasisElement {
                name: n.to_string(),
                degree: *d,
            })
            .collect();
        Self::new(basis, grading).expect("duplicate basis name")
    }

    pub fn zero(grading: Grading) -> Self {
        Self::new(Vec::new(), grading).unwrap()
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[BasisElement] {
        &self.basis
    }

    pub fn name(&self, i: usize) -> &str {
        &self.basis[i].name
    }

    pub fn names(&self) -> Vec<String> {
        self.basis.iter().map(|b| b.name.clone()).collect()
    }

    pub fn index_of(&self, name: &str) -> Result<usize, GradedError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| GradedError::UnknownName(name.to_string()))
    }

    /// Degree in the space's own mode.
    pub fn degree(&self, i: usize) -> i64 {
        self.basis[i].degree
    }

    /// Degree in the cohomological convention.
    pub fn cdeg(&self, i: usize) -> i64 {
        match self.grading {
            Grading::Cohomological => self.basis[i].degree,
            Grading::Homological => -self.basis[i].degree,
        }
    }

    /// Degree in the homological convention.
    pub fn hdeg(&self, i: usize) -> i64 {
        -self.cdeg(i)
    }

    pub fn cdegrees(&self) -> Vec<i64> {
        (0..self.dim()).map(|i| self.cdeg(i)).collect()
    }

    /// Same space re-expressed in the given mode.
    pub fn in_mode(&self, grading: Grading) -> Self {
        if grading == self.grading {
            return self.clone();
        }
        let basis = self
            .basis
            .iter()
            .map(|b| BasisElement {
                name: b.name.clone(),
                degree: -b.degree,
            })
            .collect();
        GradedSpace {
            basis,
            grading,
            index: self.index.clone(),
        }
    }

    /// Per-degree dimensions in the space's own mode, sorted by degree.
    pub fn dims_by_degree(&self) -> Vec<(i64, usize)> {
        let mut m = std::collections::BTreeMap::new();
        for b in &self.basis {
            *m.entry(b.degree).or_insert(0) += 1;
        }
        m.into_iter().collect()
    }

    /// Indices of basis elements in cohomological degree `d`.
    pub fn indices_in_cdeg(&self, d: i64) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.cdeg(i) == d).collect()
    }

    /// Direct sum; names must stay distinct.
    pub fn direct_sum(&self, other: &GradedSpace) -> Result<GradedSpace, GradedError> {
        let other = other.in_mode(self.grading);
        let mut basis = self.basis.clone();
        basis.extend(other.basis.iter().cloned());
        GradedSpace::new(basis, self.grading)
    }
}

impl fmt::Display for GradedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mode = match self.grading {
            Grading::Homological => "hom",
            Grading::Cohomological => "coh",
        };
        let items: Vec<String> = self
            .basis
            .iter()
            .map(|b| format!("{}:{}", b.name, b.degree))
            .collect();
        write!(f, "[{}] {{{}}}", mode, items.join(", "))
    }
}

/// Sign of the permutation that places `perm[i]` (an index into the original
/// word) at position `i`. Each pair of elements whose relative order is
/// reversed contributes `(−1)^{pq}`.
pub fn koszul_sign(perm: &[usize], degrees: &[i64]) -> Result<i32, GradedError> {
    if perm.len() != degrees.len() {
        return Err(GradedError::LengthMismatch {
            perm: perm.len(),
            degrees: degrees.len(),
        });
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || seen[p] {
            return Err(GradedError::NotAPermutation(perm.to_vec()));
        }
        seen[p] = true;
    }
    let mut odd = false;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] && degrees[perm[i]] * degrees[perm[j]] % 2 != 0 {
                odd = !odd;
            }
        }
    }
    Ok(if odd { -1 } else { 1 })
}

/// Sorts `items` by `key` with a stable insertion sort and returns the
/// accumulated Koszul sign, where `degree` gives the parity of each item.
pub fn koszul_sort<T, K: Ord>(
    items: &mut [T],
    key: impl Fn(&T) -> K,
    degree: impl Fn(&T) -> i64,
) -> i32 {
    let mut sign = 1;
    for i in 1..items.len() {
        let mut j = i;
        while j > 0 && key(&items[j - 1]) > key(&items[j]) {
            if degree(&items[j - 1]) * degree(&items[j]) % 2 != 0 {
                sign = -sign;
            }
            items.swap(j - 1, j);
            j -= 1;
        }
    }
    sign
}

const SUSP: &str = "s·";
const DESUSP: &str = "s⁻¹·";

fn decorate_suspend(name: &str) -> String {
    match name.strip_prefix(DESUSP) {
        Some(rest) => rest.to_string(),
        None => format!("{SUSP}{name}"),
    }
}

fn decorate_desuspend(name: &str) -> String {
    match name.strip_prefix(SUSP) {
        Some(rest) => rest.to_string(),
        None => format!("{DESUSP}{name}"),
    }
}

/// `k`-fold suspension: homological degrees go up by `k`, cohomological
/// degrees go down by `k`.
pub fn suspend(v: &GradedSpace, k: i64) -> GradedSpace {
    let shift = match v.grading {
        Grading::Homological => k,
        Grading::Cohomological => -k,
    };
    let basis = v
        .basis
        .iter()
        .map(|b| {
            let mut name = b.name.clone();
            for _ in 0..k.unsigned_abs() {
                name = if k > 0 {
                    decorate_suspend(&name)
                } else {
                    decorate_desuspend(&name)
                };
            }
            BasisElement {
                name,
                degree: b.degree + shift,
            }
        })
        .collect();
    GradedSpace::new(basis, v.grading).expect("decoration keeps names distinct")
}

/// Degreewise dual: the dual of a degree-`i` element is listed with the same
/// number in the opposite mode, so `(V*)^i = (V_i)*`.
pub fn dual(v: &GradedSpace) -> GradedSpace {
    let basis = v
        .basis
        .iter()
        .map(|b| BasisElement {
            name: format!("{}*", b.name),
            degree: b.degree,
        })
        .collect();
    GradedSpace::new(basis, v.grading.flip()).expect("decoration keeps names distinct")
}

/// Generators of the representing algebra `ŜΣ⁻¹V*`, cohomologically graded:
/// a basis vector of cohomological degree `d` contributes a generator of
/// degree `1 − d`.
pub fn representing_generators(v: &GradedSpace) -> GradedSpace {
    suspend(&dual(v), -1).in_mode(Grading::Cohomological)
}

/// Coefficient times an ordered word in basis labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignedTerm {
    pub coefficient: Q,
    pub word: Vec<String>,
}

impl SignedTerm {
    /// Reorders the word into basis order, picking up the Koszul sign.
    /// Returns `None` when the coefficient is zero.
    pub fn normalized(&self, space: &GradedSpace) -> Result<Option<SignedTerm>, GradedError> {
        if self.coefficient.is_zero() {
            return Ok(None);
        }
        let mut idx = self
            .word
            .iter()
            .map(|n| space.index_of(n))
            .collect::<Result<Vec<_>, _>>()?;
        let sign = koszul_sort(&mut idx, |&i| i, |&i| space.cdeg(i));
        let coefficient = if sign < 0 {
            -self.coefficient.clone()
        } else {
            self.coefficient.clone()
        };
        Ok(Some(SignedTerm {
            coefficient,
            word: idx.iter().map(|&i| space.name(i).to_string()).collect(),
        }))
    }
}
