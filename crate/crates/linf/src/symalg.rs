//! Weight-truncated free graded-commutative algebras and their derivations.
//!
//! A monomial is an exponent vector over the generators, read in generator
//! order; odd generators have exponent at most one. A polynomial is a sparse
//! map from monomials to coefficients. Products whose weight exceeds the cap
//! are dropped and the algebra's truncation flag is raised.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, OnceLock};

use num::{One, Signed, Zero};

use crate::graded_core::{Grading, GradedSpace};
use crate::{max_dim, Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymalgError {
    #[error("value on {generator} has a term of degree {found}, expected {expected}")]
    DegreeMismatch {
        generator: String,
        expected: i64,
        found: i64,
    },
    #[error("derivations live on different algebras")]
    AlgebraMismatch,
    #[error("value on {generator} has a constant term but constant terms are not allowed")]
    ConstantTerm { generator: String },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("{0} is not a basis element of this derivation space")]
    NotInBasis(String),
    #[error("enumeration would exceed {limit} basis elements (LINFTY_MAX_DIM)")]
    TooLarge { limit: usize },
    #[error("the image of generator {generator} has a constant term")]
    UnitalImage { generator: String },
}

pub type Mono = Vec<u32>;

/// Sparse polynomial: monomial → nonzero coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Poly(BTreeMap<Mono, Q>);

impl Poly {
    pub fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    pub fn monomial(m: Mono, c: Q) -> Self {
        let mut p = Poly::zero();
        p.add_term(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Mono, &Q)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coeff(&self, m: &Mono) -> Q {
        self.0.get(m).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add_term(&mut self, m: Mono, c: Q) {
        if c.is_zero() {
            return;
        }
        match self.0.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_scaled(&mut self, other: &Poly, c: &Q) {
        if c.is_zero() {
            return;
        }
        for (m, x) in other.terms() {
            self.add_term(m.clone(), x * c);
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut p = self.clone();
        p.add_scaled(other, &Q::one());
        p
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut p = self.clone();
        p.add_scaled(other, &-Q::one());
        p
    }

    pub fn scale(&self, c: &Q) -> Poly {
        let mut p = Poly::zero();
        p.add_scaled(self, c);
        p
    }

    pub fn neg(&self) -> Poly {
        self.scale(&-Q::one())
    }

    /// Terms whose monomial satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(&Mono) -> bool) -> Poly {
        Poly(
            self.0
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        )
    }

    pub fn weight_component(&self, w: u32) -> Poly {
        self.filter(|m| weight(m) == w)
    }
}

pub fn weight(m: &Mono) -> u32 {
    m.iter().sum()
}

/// Free graded-commutative algebra on cohomologically graded generators,
/// truncated at `weight_cap`.
#[derive(Debug)]
pub struct FreeCommAlgebra {
    gens: GradedSpace,
    weight_cap: u32,
    truncated: AtomicBool,
    monomials: OnceLock<Result<BTreeMap<i64, Vec<Mono>>, SymalgError>>,
}

impl PartialEq for FreeCommAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.gens == other.gens && self.weight_cap == other.weight_cap
    }
}

/// Builds `ŜW` truncated at `weight_cap`; generators are taken in the
/// cohomological convention.
pub fn build_algebra(w: &GradedSpace, weight_cap: u32) -> Arc<FreeCommAlgebra> {
    assert!(weight_cap >= 1, "weight cap must be at least 1");
    Arc::new(FreeCommAlgebra {
        gens: w.in_mode(Grading::Cohomological),
        weight_cap,
        truncated: AtomicBool::new(false),
        monomials: OnceLock::new(),
    })
}

impl FreeCommAlgebra {
    pub fn generators(&self) -> &GradedSpace {
        &self.gens
    }

    pub fn n_gens(&self) -> usize {
        self.gens.dim()
    }

    pub fn weight_cap(&self) -> u32 {
        self.weight_cap
    }

    pub fn gen_degree(&self, i: usize) -> i64 {
        self.gens.cdeg(i)
    }

    pub fn is_odd(&self, i: usize) -> bool {
        self.gen_degree(i).rem_euclid(2) == 1
    }

    /// Whether any product so far dropped a nonzero term above the cap.
    pub fn truncation_hit(&self) -> bool {
        self.truncated.load(Ordering::Relaxed)
    }

    pub fn reset_truncation(&self) {
        self.truncated.store(false, Ordering::Relaxed);
    }

    fn flag(&self) {
        self.truncated.store(true, Ordering::Relaxed);
    }

    pub fn unit_mono(&self) -> Mono {
        vec![0; self.n_gens()]
    }

    pub fn gen_mono(&self, i: usize) -> Mono {
        let mut m = self.unit_mono();
        m[i] = 1;
        m
    }

    pub fn one(&self) -> Poly {
        Poly::monomial(self.unit_mono(), Q::one())
    }

    pub fn gen(&self, i: usize) -> Poly {
        Poly::monomial(self.gen_mono(i), Q::one())
    }

    pub fn mono_degree(&self, m: &Mono) -> i64 {
        m.iter()
            .enumerate()
            .map(|(i, &a)| a as i64 * self.gen_degree(i))
            .sum()
    }

    /// Product of two monomials in canonical order: `None` when an odd
    /// generator would repeat, otherwise the monomial and whether the sign
    /// is negative.
    pub fn mul_mono(&self, a: &Mono, b: &Mono) -> Option<(Mono, bool)> {
        let mut out = Vec::with_capacity(a.len());
        let mut neg = false;
        // Odd generators of `a` strictly after position j.
        let mut odd_after = 0u32;
        for j in (0..a.len()).rev() {
            if self.is_odd(j) {
                if a[j] + b[j] > 1 {
                    return None;
                }
                if b[j] == 1 && odd_after % 2 == 1 {
                    neg = !neg;
                }
                odd_after += a[j];
            }
        }
        for j in 0..a.len() {
            out.push(a[j] + b[j]);
        }
        Some((out, neg))
    }

    pub fn mul(&self, p: &Poly, r: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (a, x) in p.terms() {
            for (b, y) in r.terms() {
                let Some((m, neg)) = self.mul_mono(a, b) else {
                    continue;
                };
                if weight(&m) > self.weight_cap {
                    self.flag();
                    continue;
                }
                let c = x * y;
                out.add_term(m, if neg { -c } else { c });
            }
        }
        out
    }

    /// Left multiplication by a single monomial with coefficient.
    fn mul_mono_poly(&self, a: &Mono, c: &Q, r: &Poly, out: &mut Poly) {
        for (b, y) in r.terms() {
            let Some((m, neg)) = self.mul_mono(a, b) else {
                continue;
            };
            if weight(&m) > self.weight_cap {
                self.flag();
                continue;
            }
            let v = c * y;
            out.add_term(m, if neg { -v } else { v });
        }
    }

    /// Monomials of positive weight up to the cap, bucketed by degree and
    /// ordered by weight, then with earlier generators first.
    pub fn monomials_by_degree(&self) -> Result<&BTreeMap<i64, Vec<Mono>>, SymalgError> {
        self.monomials
            .get_or_init(|| self.enumerate())
            .as_ref()
            .map_err(Clone::clone)
    }

    fn enumerate(&self) -> Result<BTreeMap<i64, Vec<Mono>>, SymalgError> {
        let limit = max_dim();
        let n = self.n_gens();
        let mut all = Vec::new();
        let mut cur = vec![0u32; n];
        fn rec(
            alg: &FreeCommAlgebra,
            i: usize,
            left: u32,
            cur: &mut Mono,
            all: &mut Vec<Mono>,
            limit: usize,
        ) -> Result<(), SymalgError> {
            if i == cur.len() {
                if weight(cur) > 0 {
                    if all.len() >= limit {
                        return Err(SymalgError::TooLarge { limit });
                    }
                    all.push(cur.clone());
                }
                return Ok(());
            }
            let top = if alg.is_odd(i) { left.min(1) } else { left };
            for a in 0..=top {
                cur[i] = a;
                rec(alg, i + 1, left - a, cur, all, limit)?;
            }
            cur[i] = 0;
            Ok(())
        }
        rec(self, 0, self.weight_cap, &mut cur, &mut all, limit)?;
        all.sort_by(|a, b| weight(a).cmp(&weight(b)).then_with(|| b.cmp(a)));
        let mut map: BTreeMap<i64, Vec<Mono>> = BTreeMap::new();
        for m in all {
            map.entry(self.mono_degree(&m)).or_default().push(m);
        }
        Ok(map)
    }

    /// Positive-weight monomials of degree `d` within the cap.
    pub fn monomials_in_degree(&self, d: i64) -> Result<Vec<Mono>, SymalgError> {
        Ok(self
            .monomials_by_degree()?
            .get(&d)
            .cloned()
            .unwrap_or_default())
    }

    /// Whether a monomial of degree `d` and weight above the cap exists.
    /// Decided from the generator degrees; returns `true` when it cannot be
    /// ruled out.
    pub fn has_monomials_above_cap(&self, d: i64) -> bool {
        let n = self.n_gens();
        let even_nonpos = (0..n).any(|i| !self.is_odd(i) && self.gen_degree(i) <= 0);
        if even_nonpos {
            return true;
        }
        let odd_count = (0..n).filter(|&i| self.is_odd(i)).count() as u32;
        let evens: Vec<i64> = (0..n)
            .filter(|&i| !self.is_odd(i))
            .map(|i| self.gen_degree(i))
            .collect();
        if evens.is_empty() {
            return odd_count > self.weight_cap && self.odd_only_reaches(d);
        }
        // A monomial of weight w uses at least w − odd_count even factors, each
        // of degree ≥ min_even, plus odd factors whose degrees sum to at least
        // the sum of the negative odd degrees.
        let min_even = *evens.iter().min().unwrap();
        let neg_odd: i64 = (0..n)
            .filter(|&i| self.is_odd(i) && self.gen_degree(i) < 0)
            .map(|i| self.gen_degree(i))
            .sum();
        let w = self.weight_cap as i64 + 1;
        let min_evens = (w - odd_count as i64).max(0);
        let lower = min_evens * min_even + neg_odd;
        d >= lower
    }

    fn odd_only_reaches(&self, d: i64) -> bool {
        // Subsets of odd generators of size > cap with degree sum d.
        let degs: Vec<i64> = (0..self.n_gens()).map(|i| self.gen_degree(i)).collect();
        let n = degs.len();
        if n > 20 {
            return true;
        }
        (0u32..(1 << n)).any(|mask| {
            mask.count_ones() > self.weight_cap
                && (0..n)
                    .filter(|&i| mask & (1 << i) != 0)
                    .map(|i| degs[i])
                    .sum::<i64>()
                    == d
        })
    }

    pub fn fmt_mono(&self, m: &Mono) -> String {
        if weight(m) == 0 {
            return "1".to_string();
        }
        let mut s = String::new();
        for (i, &a) in m.iter().enumerate() {
            if a == 0 {
                continue;
            }
            if !s.is_empty() {
                s.push('·');
            }
            s.push_str(self.gens.name(i));
            if a > 1 {
                let _ = write!(s, "^{a}");
            }
        }
        s
    }

    pub fn fmt_poly(&self, p: &Poly) -> String {
        if p.is_zero() {
            return "0".to_string();
        }
        let mut s = String::new();
        for (k, (m, c)) in p.terms().enumerate() {
            let (neg, abs) = (c.is_negative(), c.abs());
            if k == 0 {
                if neg {
                    s.push('-');
                }
            } else {
                s.push_str(if neg { " - " } else { " + " });
            }
            let mono = self.fmt_mono(m);
            if abs.is_one() {
                s.push_str(&mono);
            } else if weight(m) == 0 {
                let _ = write!(s, "{abs}");
            } else {
                let _ = write!(s, "{abs}·{mono}");
            }
        }
        s
    }

    /// Degree of every term if the polynomial is homogeneous.
    pub fn homogeneous_degree(&self, p: &Poly) -> Option<i64> {
        let mut d = None;
        for (m, _) in p.terms() {
            let e = self.mono_degree(m);
            match d {
                None => d = Some(e),
                Some(x) if x != e => return None,
                _ => {}
            }
        }
        d
    }
}

/// Derivation of a truncated free algebra, stored by its values on the
/// generators.
#[derive(Debug, Clone)]
pub struct Derivation {
    alg: Arc<FreeCommAlgebra>,
    values: Vec<Poly>,
    degree: i64,
    constant_term_allowed: bool,
}

impl PartialEq for Derivation {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.values == other.values && self.alg == other.alg
    }
}

impl Derivation {
    /// Extends values on generators to a derivation of the given degree.
    /// Terms above the weight cap are dropped.
    pub fn new(
        alg: &Arc<FreeCommAlgebra>,
        values: Vec<Poly>,
        degree: i64,
        constant_term_allowed: bool,
    ) -> Result<Self, SymalgError> {
        if values.len() != alg.n_gens() {
            return Err(SymalgError::LengthMismatch {
                expected: alg.n_gens(),
                got: values.len(),
            });
        }
        let cap = alg.weight_cap();
        let mut clean = Vec::with_capacity(values.len());
        for (i, v) in values.into_iter().enumerate() {
            let expected = alg.gen_degree(i) + degree;
            for (m, _) in v.terms() {
                let found = alg.mono_degree(m);
                if found != expected {
                    return Err(SymalgError::DegreeMismatch {
                        generator: alg.generators().name(i).to_string(),
                        expected,
                        found,
                    });
                }
                if !constant_term_allowed && weight(m) == 0 {
                    return Err(SymalgError::ConstantTerm {
                        generator: alg.generators().name(i).to_string(),
                    });
                }
            }
            if v.terms().any(|(m, _)| weight(m) > cap) {
                alg.flag();
            }
            clean.push(v.filter(|m| weight(m) <= cap));
        }
        Ok(Derivation {
            alg: Arc::clone(alg),
            values: clean,
            degree,
            constant_term_allowed,
        })
    }

    pub fn zero(alg: &Arc<FreeCommAlgebra>, degree: i64, constant_term_allowed: bool) -> Self {
        Derivation {
            alg: Arc::clone(alg),
            values: vec![Poly::zero(); alg.n_gens()],
            degree,
            constant_term_allowed,
        }
    }

    /// The derivation `M ∂_i` sending generator `i` to `M` and the others to 0.
    pub fn elementary(alg: &Arc<FreeCommAlgebra>, i: usize, m: Mono, c: Q) -> Self {
        let degree = alg.mono_degree(&m) - alg.gen_degree(i);
        let cta = weight(&m) == 0;
        let mut values = vec![Poly::zero(); alg.n_gens()];
        values[i] = Poly::monomial(m, c);
        Derivation {
            alg: Arc::clone(alg),
            values,
            degree,
            constant_term_allowed: cta,
        }
    }

    pub fn algebra(&self) -> &Arc<FreeCommAlgebra> {
        &self.alg
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn constant_term_allowed(&self) -> bool {
        self.constant_term_allowed
    }

    pub fn values(&self) -> &[Poly] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &Poly {
        &self.values[i]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(Poly::is_zero)
    }

    /// Whether some value has a weight-0 term.
    pub fn has_constant_term(&self) -> bool {
        self.values
            .iter()
            .any(|v| v.terms().any(|(m, _)| weight(m) == 0))
    }

    pub fn with_constant_terms_allowed(mut self, allowed: bool) -> Self {
        self.constant_term_allowed = allowed || self.has_constant_term();
        self
    }

    fn same_alg(&self, other: &Derivation) -> Result<(), SymalgError> {
        if Arc::ptr_eq(&self.alg, &other.alg) || *self.alg == *other.alg {
            Ok(())
        } else {
            Err(SymalgError::AlgebraMismatch)
        }
    }

    /// Value on a monomial by the graded Leibniz rule.
    pub fn apply_mono(&self, m: &Mono) -> Poly {
        let alg = &self.alg;
        let mut out = Poly::zero();
        let theta_odd = self.degree.rem_euclid(2) == 1;
        let mut prefix = alg.unit_mono();
        let mut prefix_odd = false;
        for i in 0..m.len() {
            let a = m[i];
            if a == 0 {
                continue;
            }
            if !self.values[i].is_zero() {
                // θ(x^a) = a·x^{a−1}·θ(x) for even x; a = 1 for odd x.
                let mut suffix = alg.unit_mono();
                suffix[i + 1..].copy_from_slice(&m[i + 1..]);
                let mut left = prefix.clone();
                left[i] = a - 1;
                let mut c = Q::from_integer(a.into());
                if theta_odd && prefix_odd {
                    c = -c;
                }
                let mut middle = Poly::zero();
                alg.mul_mono_poly(&left, &c, &self.values[i], &mut middle);
                let suffix_poly = Poly::monomial(suffix, Q::one());
                let term = alg.mul(&middle, &suffix_poly);
                out.add_scaled(&term, &Q::one());
            }
            prefix[i] = a;
            if alg.is_odd(i) && a % 2 == 1 {
                prefix_odd = !prefix_odd;
            }
        }
        out
    }

    pub fn apply(&self, p: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in p.terms() {
            out.add_scaled(&self.apply_mono(m), c);
        }
        out
    }

    /// Graded commutator `[ξ,η] = ξ∘η − (−1)^{|ξ||η|} η∘ξ`.
    pub fn commutator(&self, other: &Derivation) -> Result<Derivation, SymalgError> {
        self.same_alg(other)?;
        let odd = (self.degree * other.degree).rem_euclid(2) == 1;
        let values = (0..self.alg.n_gens())
            .map(|i| {
                let a = self.apply(&other.values[i]);
                let b = other.apply(&self.values[i]);
                if odd {
                    a.add(&b)
                } else {
                    a.sub(&b)
                }
            })
            .collect();
        Ok(Derivation {
            alg: Arc::clone(&self.alg),
            values,
            degree: self.degree + other.degree,
            constant_term_allowed: self.constant_term_allowed || other.constant_term_allowed,
        })
    }

    pub fn add(&self, other: &Derivation) -> Result<Derivation, SymalgError> {
        self.combine(other, &Q::one())
    }

    pub fn sub(&self, other: &Derivation) -> Result<Derivation, SymalgError> {
        self.combine(other, &-Q::one())
    }

    /// `self + c·other`; both must have the same degree.
    pub fn combine(&self, other: &Derivation, c: &Q) -> Result<Derivation, SymalgError> {
        self.same_alg(other)?;
        if self.degree != other.degree && !other.is_zero() && !self.is_zero() {
            return Err(SymalgError::DegreeMismatch {
                generator: String::from("(sum)"),
                expected: self.degree,
                found: other.degree,
            });
        }
        let degree = if self.is_zero() { other.degree } else { self.degree };
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| {
                let mut v = a.clone();
                v.add_scaled(b, c);
                v
            })
            .collect();
        Ok(Derivation {
            alg: Arc::clone(&self.alg),
            values,
            degree,
            constant_term_allowed: self.constant_term_allowed || other.constant_term_allowed,
        })
    }

    pub fn scale(&self, c: &Q) -> Derivation {
        Derivation {
            alg: Arc::clone(&self.alg),
            values: self.values.iter().map(|v| v.scale(c)).collect(),
            degree: self.degree,
            constant_term_allowed: self.constant_term_allowed,
        }
    }

    /// Component whose values have weight exactly `w`.
    pub fn weight_component(&self, w: u32) -> Derivation {
        Derivation {
            alg: Arc::clone(&self.alg),
            values: self.values.iter().map(|v| v.weight_component(w)).collect(),
            degree: self.degree,
            constant_term_allowed: self.constant_term_allowed,
        }
    }

    /// Weights occurring in the values, ascending.
    pub fn weights(&self) -> Vec<u32> {
        let mut ws: Vec<u32> = self
            .values
            .iter()
            .flat_map(|v| v.terms().map(|(m, _)| weight(m)))
            .collect();
        ws.sort_unstable();
        ws.dedup();
        ws
    }

    pub fn display(&self) -> String {
        let mut parts = Vec::new();
        for (i, v) in self.values.iter().enumerate() {
            if !v.is_zero() {
                parts.push(format!(
                    "{} ↦ {}",
                    self.alg.generators().name(i),
                    self.alg.fmt_poly(v)
                ));
            }
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join(", ")
        }
    }
}

/// Ordered basis `{M∂_i}` of derivations of one degree.
#[derive(Debug, Clone)]
pub struct DerBasis {
    alg: Arc<FreeCommAlgebra>,
    degree: i64,
    constant_term_allowed: bool,
    elements: Vec<(usize, Mono)>,
    index: HashMap<(usize, Mono), usize>,
}

/// Basis of derivations of degree `degree`, ordered by target generator and
/// then by monomial.
pub fn der_basis(
    alg: &Arc<FreeCommAlgebra>,
    degree: i64,
    constant_term_allowed: bool,
) -> Result<DerBasis, SymalgError> {
    let limit = max_dim();
    let mut elements = Vec::new();
    for i in 0..alg.n_gens() {
        let d = alg.gen_degree(i) + degree;
        if constant_term_allowed && d == 0 {
            elements.push((i, alg.unit_mono()));
        }
        for m in alg.monomials_in_degree(d)? {
            elements.push((i, m));
        }
        if elements.len() > limit {
            return Err(SymalgError::TooLarge { limit });
        }
    }
    let index = elements
        .iter()
        .enumerate()
        .map(|(k, e)| (e.clone(), k))
        .collect();
    Ok(DerBasis {
        alg: Arc::clone(alg),
        degree,
        constant_term_allowed,
        elements,
        index,
    })
}

impl DerBasis {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn elements(&self) -> &[(usize, Mono)] {
        &self.elements
    }

    /// Weight of the monomial of basis element `k`.
    pub fn weight_of(&self, k: usize) -> u32 {
        weight(&self.elements[k].1)
    }

    pub fn element(&self, k: usize) -> Derivation {
        let (i, m) = &self.elements[k];
        Derivation::elementary(&self.alg, *i, m.clone(), Q::one())
            .with_constant_terms_allowed(self.constant_term_allowed)
    }

    pub fn label(&self, k: usize) -> String {
        let (i, m) = &self.elements[k];
        let mono = if weight(m) == 0 {
            String::new()
        } else {
            self.alg.fmt_mono(m)
        };
        format!("{}∂{}", mono, self.alg.generators().name(*i))
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.len()).map(|k| self.label(k)).collect()
    }

    /// Coordinates of a derivation of this degree.
    pub fn coords(&self, d: &Derivation) -> Result<Vec<Q>, SymalgError> {
        let mut v = vec![Q::zero(); self.len()];
        for (i, p) in d.values().iter().enumerate() {
            for (m, c) in p.terms() {
                match self.index.get(&(i, m.clone())) {
                    Some(&k) => v[k] = c.clone(),
                    None => {
                        return Err(SymalgError::NotInBasis(format!(
                            "{}∂{}",
                            self.alg.fmt_mono(m),
                            self.alg.generators().name(i)
                        )))
                    }
                }
            }
        }
        Ok(v)
    }

    pub fn from_coords(&self, v: &[Q]) -> Derivation {
        let mut values = vec![Poly::zero(); self.alg.n_gens()];
        for (k, c) in v.iter().enumerate() {
            if !c.is_zero() {
                let (i, m) = &self.elements[k];
                values[*i].add_term(m.clone(), c.clone());
            }
        }
        Derivation {
            alg: Arc::clone(&self.alg),
            values,
            degree: self.degree,
            constant_term_allowed: self.constant_term_allowed,
        }
    }
}

/// Algebra map between truncated free algebras, given on generators.
#[derive(Debug, Clone)]
pub struct AlgebraMap {
    source: Arc<FreeCommAlgebra>,
    target: Arc<FreeCommAlgebra>,
    images: Vec<Poly>,
}

impl AlgebraMap {
    /// Images must be homogeneous of the generator's degree and have no
    /// constant term.
    pub fn new(
        source: &Arc<FreeCommAlgebra>,
        target: &Arc<FreeCommAlgebra>,
        images: Vec<Poly>,
    ) -> Result<Self, SymalgError> {
        if images.len() != source.n_gens() {
            return Err(SymalgError::LengthMismatch {
                expected: source.n_gens(),
                got: images.len(),
            });
        }
        for (i, p) in images.iter().enumerate() {
            for (m, _) in p.terms() {
                if weight(m) == 0 {
                    return Err(SymalgError::UnitalImage {
                        generator: source.generators().name(i).to_string(),
                    });
                }
                let found = target.mono_degree(m);
                if found != source.gen_degree(i) {
                    return Err(SymalgError::DegreeMismatch {
                        generator: source.generators().name(i).to_string(),
                        expected: source.gen_degree(i),
                        found,
                    });
                }
            }
        }
        Ok(AlgebraMap {
            source: Arc::clone(source),
            target: Arc::clone(target),
            images,
        })
    }

    pub fn identity(alg: &Arc<FreeCommAlgebra>) -> Self {
        AlgebraMap {
            source: Arc::clone(alg),
            target: Arc::clone(alg),
            images: (0..alg.n_gens()).map(|i| alg.gen(i)).collect(),
        }
    }

    pub fn source(&self) -> &Arc<FreeCommAlgebra> {
        &self.source
    }

    pub fn target(&self) -> &Arc<FreeCommAlgebra> {
        &self.target
    }

    pub fn images(&self) -> &[Poly] {
        &self.images
    }

    pub fn apply_mono(&self, m: &Mono) -> Poly {
        let t = &self.target;
        let mut acc = t.one();
        for (i, &a) in m.iter().enumerate() {
            for _ in 0..a {
                acc = t.mul(&acc, &self.images[i]);
                if acc.is_zero() {
                    return acc;
                }
            }
        }
        acc
    }

    pub fn apply(&self, p: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in p.terms() {
            out.add_scaled(&self.apply_mono(m), c);
        }
        out
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &AlgebraMap) -> AlgebraMap {
        AlgebraMap {
            source: Arc::clone(&self.source),
            target: Arc::clone(&next.target),
            images: self.images.iter().map(|p| next.apply(p)).collect(),
        }
    }
}
