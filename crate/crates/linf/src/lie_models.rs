//! Free and finitely presented graded Lie algebras, Quillen models of
//! nilpotent cdgas, adjoining a Maurer–Cartan variable τ, and Harrison
//! complexes.
//!
//! Lie elements live in the tensor algebra on the generators with the
//! graded commutator `[a,b] = ab − (−1)^{|a||b|} ba`. Products are truncated
//! at a bracket-length cap (and optionally a degree cap); the part of length
//! above the cap is a dg ideal for every differential used here, so the
//! truncations are honest quotient dglas.
//!
//! Free Lie algebras use the basis of standard bracketings of Lyndon words
//! together with the squares `[w,w]` of odd Lyndon words.
//!
//! Generators of the Quillen model of `A` are `s⁻¹a*`: a basis element of
//! `A^k` gives a generator of homological degree `k − 1`. With this choice the
//! representing algebra of the model is generated by `A` itself.

use std::collections::{BTreeMap, HashMap};

use num::{One, Zero};

use crate::ce::{CEComplex, CeError};
use crate::cup_def::NilpotentBase;
use crate::exact_linalg::{CochainWindow, CohomologyGroup, EchelonBasis, LinalgError, RationalMatrix};
use crate::graded_core::{dual, suspend, BasisElement, Grading, GradedSpace};
use crate::linfty::{Dgla, LinftyError, SparseVec};
use crate::{frac, max_dim, q, Q};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LieError {
    #[error("degree-0 generators need an explicit bracket-length cap")]
    InfinitePerDegree,
    #[error("relation {0} lies outside the caps or is not homogeneous")]
    RelationOutsideCap(String),
    #[error("{0} is not in the span of the Lie basis")]
    NotInLie(String),
    #[error("d² ≠ 0 on generator {0}")]
    NotADifferential(String),
    #[error("enumeration would exceed {limit} basis elements (LINFTY_MAX_DIM)")]
    TooLarge { limit: usize },
    #[error("bracket length may truncate derivation degrees {degrees:?}")]
    UnsafeWindow { degrees: Vec<i64> },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Linfty(#[from] LinftyError),
    #[error(transparent)]
    Ce(#[from] CeError),
}

fn odd(d: i64) -> bool {
    d.rem_euclid(2) == 1
}

fn sign(neg: bool) -> Q {
    if neg {
        q(-1)
    } else {
        q(1)
    }
}

pub type Word = Vec<usize>;

/// Element of the tensor algebra on the generators.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TensorPoly(BTreeMap<Word, Q>);

impl TensorPoly {
    pub fn zero() -> Self {
        TensorPoly(BTreeMap::new())
    }

    pub fn word(w: Word, c: Q) -> Self {
        let mut t = TensorPoly::zero();
        t.add_term(w, c);
        t
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Q)> {
        self.0.iter()
    }

    pub fn coeff(&self, w: &Word) -> Q {
        self.0.get(w).cloned().unwrap_or_else(Q::zero)
    }

    pub fn add_term(&mut self, w: Word, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.0.entry(w).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.0.retain(|_, v| !v.is_zero());
        }
    }

    pub fn add_scaled(&mut self, other: &TensorPoly, c: &Q) {
        for (w, x) in other.terms() {
            self.add_term(w.clone(), x * c);
        }
    }

    pub fn add(&self, other: &TensorPoly) -> TensorPoly {
        let mut t = self.clone();
        t.add_scaled(other, &Q::one());
        t
    }

    pub fn scale(&self, c: &Q) -> TensorPoly {
        let mut t = TensorPoly::zero();
        t.add_scaled(self, c);
        t
    }

    pub fn max_length(&self) -> usize {
        self.0.keys().map(Vec::len).max().unwrap_or(0)
    }
}

/// Caps of a truncated free Lie algebra. `degree` bounds the absolute
/// homological degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LieCaps {
    pub length: Option<usize>,
    pub degree: Option<i64>,
}

impl LieCaps {
    pub fn length(n: usize) -> Self {
        LieCaps {
            length: Some(n),
            degree: None,
        }
    }

    pub fn degree(d: i64) -> Self {
        LieCaps {
            length: None,
            degree: Some(d),
        }
    }
}

/// Generators with degrees and caps; bracket arithmetic in the tensor
/// algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct LieAlphabet {
    gens: GradedSpace,
    length_cap: usize,
    degree_cap: Option<i64>,
}

impl LieAlphabet {
    pub fn new(gens: &GradedSpace, caps: LieCaps) -> Result<Self, LieError> {
        let gens = gens.in_mode(Grading::Cohomological);
        let degs = gens.cdegrees();
        let derived = caps.degree.and_then(|d| {
            let all_pos = degs.iter().all(|&x| x < 0);
            let all_neg = degs.iter().all(|&x| x > 0);
            if degs.is_empty() {
                Some(1)
            } else if all_pos || all_neg {
                let min = degs.iter().map(|x| x.abs()).min().unwrap();
                Some((d / min).max(1) as usize)
            } else {
                None
            }
        });
        let length_cap = match (caps.length, derived) {
            (Some(l), Some(m)) => l.min(m),
            (Some(l), None) => l,
            (None, Some(m)) => m,
            (None, None) => return Err(LieError::InfinitePerDegree),
        };
        Ok(LieAlphabet {
            gens,
            length_cap,
            degree_cap: caps.degree,
        })
    }

    pub fn generators(&self) -> &GradedSpace {
        &self.gens
    }

    pub fn n_gens(&self) -> usize {
        self.gens.dim()
    }

    pub fn length_cap(&self) -> usize {
        self.length_cap
    }

    pub fn degree_cap(&self) -> Option<i64> {
        self.degree_cap
    }

    /// Cohomological degree of a word.
    pub fn word_degree(&self, w: &[usize]) -> i64 {
        w.iter().map(|&i| self.gens.cdeg(i)).sum()
    }

    pub fn keep(&self, w: &[usize]) -> bool {
        w.len() <= self.length_cap
            && self
                .degree_cap
                .map_or(true, |d| self.word_degree(w).abs() <= d)
    }

    pub fn gen(&self, i: usize) -> TensorPoly {
        TensorPoly::word(vec![i], Q::one())
    }

    /// Degree of a homogeneous element; `None` for zero.
    pub fn degree_of(&self, t: &TensorPoly) -> Option<i64> {
        t.terms().next().map(|(w, _)| self.word_degree(w))
    }

    pub fn is_homogeneous(&self, t: &TensorPoly) -> bool {
        let mut it = t.terms().map(|(w, _)| self.word_degree(w));
        match it.next() {
            None => true,
            Some(d) => it.all(|e| e == d),
        }
    }

    fn concat_mul(&self, a: &TensorPoly, b: &TensorPoly, c: &Q, out: &mut TensorPoly) {
        for (u, x) in a.terms() {
            for (v, y) in b.terms() {
                if u.len() + v.len() > self.length_cap {
                    continue;
                }
                let mut w = u.clone();
                w.extend_from_slice(v);
                if self.keep(&w) {
                    out.add_term(w, x * y * c);
                }
            }
        }
    }

    /// Graded commutator of homogeneous elements, truncated.
    pub fn bracket(&self, a: &TensorPoly, b: &TensorPoly) -> TensorPoly {
        let (Some(da), Some(db)) = (self.degree_of(a), self.degree_of(b)) else {
            return TensorPoly::zero();
        };
        let mut out = TensorPoly::zero();
        self.concat_mul(a, b, &Q::one(), &mut out);
        self.concat_mul(b, a, &-sign(odd(da * db)), &mut out);
        out
    }

    /// `[g_{i₁},[g_{i₂},…,g_{iₙ}]]`.
    pub fn right_normed(&self, idx: &[usize]) -> TensorPoly {
        let Some((&last, rest)) = idx.split_last() else {
            return TensorPoly::zero();
        };
        let mut t = self.gen(last);
        for &i in rest.iter().rev() {
            t = self.bracket(&self.gen(i), &t);
        }
        t
    }

    /// Extends values on generators to a derivation of degree `deg` and
    /// applies it.
    pub fn apply(&self, deg: i64, values: &[TensorPoly], t: &TensorPoly) -> TensorPoly {
        let mut out = TensorPoly::zero();
        for (w, c) in t.terms() {
            let mut pre = 0i64;
            for (i, &g) in w.iter().enumerate() {
                let s = sign(odd(deg * pre));
                for (v, x) in values[g].terms() {
                    let mut nw = w[..i].to_vec();
                    nw.extend_from_slice(v);
                    nw.extend_from_slice(&w[i + 1..]);
                    if self.keep(&nw) {
                        out.add_term(nw, c * x * &s);
                    }
                }
                pre += self.gens.cdeg(g);
            }
        }
        out
    }

    pub fn fmt(&self, t: &TensorPoly) -> String {
        if t.is_zero() {
            return "0".into();
        }
        let parts: Vec<String> = t
            .terms()
            .map(|(w, c)| {
                let word: Vec<&str> = w.iter().map(|&i| self.gens.name(i)).collect();
                format!("{}·{}", c, word.join(""))
            })
            .collect();
        parts.join(" + ")
    }
}

/// Derivation of a truncated free Lie algebra, given on generators.
#[derive(Debug, Clone, PartialEq)]
pub struct LieDerivation {
    pub degree: i64,
    pub values: Vec<TensorPoly>,
}

impl LieDerivation {
    pub fn zero(alpha: &LieAlphabet, degree: i64) -> Self {
        LieDerivation {
            degree,
            values: vec![TensorPoly::zero(); alpha.n_gens()],
        }
    }

    pub fn apply(&self, alpha: &LieAlphabet, t: &TensorPoly) -> TensorPoly {
        alpha.apply(self.degree, &self.values, t)
    }

    /// `[a,b] = a∘b − (−1)^{|a||b|} b∘a`, evaluated on generators.
    pub fn commutator(&self, other: &LieDerivation, alpha: &LieAlphabet) -> LieDerivation {
        let s = -sign(odd(self.degree * other.degree));
        let values = (0..alpha.n_gens())
            .map(|g| {
                let mut v = self.apply(alpha, &other.values[g]);
                v.add_scaled(&other.apply(alpha, &self.values[g]), &s);
                v
            })
            .collect();
        LieDerivation {
            degree: self.degree + other.degree,
            values,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(TensorPoly::is_zero)
    }
}

/// Lyndon words of length `1..=max_len` over `n` letters, in lexicographic
/// order.
pub fn lyndon_words(n: usize, max_len: usize) -> Vec<Word> {
    let mut out = Vec::new();
    if n == 0 || max_len == 0 {
        return out;
    }
    let mut w: Vec<i64> = vec![-1];
    while !w.is_empty() {
        *w.last_mut().unwrap() += 1;
        out.push(w.iter().map(|&x| x as usize).collect());
        let m = w.len();
        while w.len() < max_len {
            let c = w[w.len() - m];
            w.push(c);
        }
        while let Some(&l) = w.last() {
            if l == n as i64 - 1 {
                w.pop();
            } else {
                break;
            }
        }
    }
    out
}

fn is_lyndon(w: &[usize]) -> bool {
    !w.is_empty() && (1..w.len()).all(|i| w < &w[i..])
}

/// One element of the Lie basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LieBasisElement {
    pub label: String,
    pub length: usize,
    pub tensor: TensorPoly,
}

#[derive(Debug, Clone, PartialEq)]
struct DegreePiece {
    elements: Vec<LieBasisElement>,
    words: Vec<Word>,
    /// Word indices at which the basis matrix restricts to an invertible block.
    pivots: Vec<usize>,
    inverse: RationalMatrix,
}

impl DegreePiece {
    fn new(elements: Vec<LieBasisElement>) -> Self {
        let mut words: Vec<Word> = elements
            .iter()
            .flat_map(|e| e.tensor.terms().map(|(w, _)| w.clone()))
            .collect();
        words.sort();
        words.dedup();
        let index: HashMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
        let k = elements.len();
        let mut b = RationalMatrix::zeros(words.len(), k);
        for (j, e) in elements.iter().enumerate() {
            for (w, c) in e.tensor.terms() {
                b.set(index[w], j, c.clone());
            }
        }
        let (_, pivots) = b.transpose().rref();
        let block = RationalMatrix::from_rows(pivots.iter().map(|&r| b.row(r).to_vec()).collect(), k);
        let cols: Vec<Vec<Q>> = (0..k)
            .map(|j| block.solve(&crate::exact_linalg::unit(k, j)).expect("independent basis"))
            .collect();
        let inverse = RationalMatrix::from_columns(&cols, k);
        DegreePiece {
            elements,
            words,
            pivots,
            inverse,
        }
    }

    fn coords(&self, t: &TensorPoly) -> Option<Vec<Q>> {
        let k = self.elements.len();
        let v: Vec<Q> = self.pivots.iter().map(|&r| t.coeff(&self.words[r])).collect();
        let c = if k == 0 { Vec::new() } else { self.inverse.mul_vec(&v) };
        let mut back = TensorPoly::zero();
        for (j, x) in c.iter().enumerate() {
            back.add_scaled(&self.elements[j].tensor, x);
        }
        (back == *t).then_some(c)
    }
}

/// Truncated free graded Lie algebra with its Lyndon basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeLie {
    alpha: LieAlphabet,
    pieces: BTreeMap<i64, DegreePiece>,
}

impl FreeLie {
    pub fn new(gens: &GradedSpace, caps: LieCaps) -> Result<Self, LieError> {
        let alpha = LieAlphabet::new(gens, caps)?;
        let n = alpha.n_gens();
        let limit = max_dim();
        let words = lyndon_words(n, alpha.length_cap);
        if words.len() > limit {
            return Err(LieError::TooLarge { limit });
        }
        let mut memo: HashMap<Word, TensorPoly> = HashMap::new();
        let mut by_degree: BTreeMap<i64, Vec<LieBasisElement>> = BTreeMap::new();
        let mut odd_lyndon = Vec::new();
        for w in &words {
            let t = standard_bracket(&alpha, w, &mut memo);
            let deg = alpha.word_degree(w);
            if odd(deg) && 2 * w.len() <= alpha.length_cap {
                odd_lyndon.push((w.clone(), t.clone()));
            }
            if !alpha.keep(w) || t.is_zero() {
                continue;
            }
            by_degree.entry(deg).or_default().push(LieBasisElement {
                label: bracket_label(&alpha, w),
                length: w.len(),
                tensor: t,
            });
        }
        for (w, t) in odd_lyndon {
            let mut ww = w.clone();
            ww.extend_from_slice(&w);
            if !alpha.keep(&ww) {
                continue;
            }
            let sq = alpha.bracket(&t, &t);
            let l = bracket_label(&alpha, &w);
            by_degree.entry(alpha.word_degree(&ww)).or_default().push(LieBasisElement {
                label: format!("[{l},{l}]"),
                length: ww.len(),
                tensor: sq,
            });
        }
        let pieces = by_degree
            .into_iter()
            .map(|(d, mut els)| {
                els.sort_by_key(|e| e.length);
                (d, DegreePiece::new(els))
            })
            .collect();
        Ok(FreeLie { alpha, pieces })
    }

    pub fn alphabet(&self) -> &LieAlphabet {
        &self.alpha
    }

    pub fn generators(&self) -> &GradedSpace {
        self.alpha.generators()
    }

    pub fn basis(&self, deg: i64) -> &[LieBasisElement] {
        self.pieces.get(&deg).map_or(&[], |p| &p.elements)
    }

    /// Cohomological degrees with a nonzero piece.
    pub fn degrees(&self) -> Vec<i64> {
        self.pieces.keys().copied().collect()
    }

    pub fn dim(&self, deg: i64) -> usize {
        self.basis(deg).len()
    }

    pub fn total_dim(&self) -> usize {
        self.pieces.values().map(|p| p.elements.len()).sum()
    }

    /// Dimensions per bracket length.
    pub fn dims_by_length(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for p in self.pieces.values() {
            for e in &p.elements {
                *out.entry(e.length).or_insert(0) += 1;
            }
        }
        out
    }

    /// Coordinates of a homogeneous Lie element in the basis of its degree.
    pub fn coords(&self, t: &TensorPoly) -> Result<(i64, Vec<Q>), LieError> {
        let Some(deg) = self.alpha.degree_of(t) else {
            return Ok((0, vec![Q::zero(); self.dim(0)]));
        };
        let piece = self
            .pieces
            .get(&deg)
            .ok_or_else(|| LieError::NotInLie(self.alpha.fmt(t)))?;
        let c = piece.coords(t).ok_or_else(|| LieError::NotInLie(self.alpha.fmt(t)))?;
        Ok((deg, c))
    }

    /// Coordinates in degree `deg`, with zero allowed.
    pub fn coords_in(&self, deg: i64, t: &TensorPoly) -> Result<Vec<Q>, LieError> {
        if t.is_zero() {
            return Ok(vec![Q::zero(); self.dim(deg)]);
        }
        let (d, c) = self.coords(t)?;
        if d != deg {
            return Err(LieError::NotInLie(self.alpha.fmt(t)));
        }
        Ok(c)
    }

    pub fn element(&self, deg: i64, coords: &[Q]) -> TensorPoly {
        let mut t = TensorPoly::zero();
        for (e, c) in self.basis(deg).iter().zip(coords) {
            t.add_scaled(&e.tensor, c);
        }
        t
    }

    /// The truncated algebra with differential `d` as a finite dgla.
    pub fn to_dgla(&self, d: Option<&LieDerivation>) -> Result<Dgla, LieError> {
        let mut elems = Vec::new();
        let mut offset = BTreeMap::new();
        for (&deg, p) in &self.pieces {
            offset.insert(deg, elems.len());
            for e in &p.elements {
                elems.push((deg, e.clone()));
            }
        }
        let space = GradedSpace::new(
            elems
                .iter()
                .map(|(deg, e)| BasisElement {
                    name: e.label.clone(),
                    degree: *deg,
                })
                .collect(),
            Grading::Cohomological,
        )
        .map_err(|e| LinftyError::SpaceMismatch(e.to_string()))?;
        let embed = |t: &TensorPoly| -> Result<SparseVec, LieError> {
            if t.is_zero() {
                return Ok(Vec::new());
            }
            let (deg, c) = self.coords(t)?;
            Ok(c.into_iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .map(|(k, x)| (offset[&deg] + k, x))
                .collect())
        };
        let mut diff = Vec::with_capacity(elems.len());
        for (_, e) in &elems {
            diff.push(match d {
                Some(d) => embed(&d.apply(&self.alpha, &e.tensor))?,
                None => Vec::new(),
            });
        }
        let mut br = Vec::new();
        for a in 0..elems.len() {
            for b in a..elems.len() {
                let t = self.alpha.bracket(&elems[a].1.tensor, &elems[b].1.tensor);
                let v = embed(&t)?;
                if !v.is_empty() {
                    br.push(((a, b), v));
                }
            }
        }
        let g = Dgla::new(space, diff, br)?;
        Ok(g.in_mode(Grading::Homological))
    }
}

fn standard_bracket(alpha: &LieAlphabet, w: &[usize], memo: &mut HashMap<Word, TensorPoly>) -> TensorPoly {
    if w.len() == 1 {
        return alpha.gen(w[0]);
    }
    if let Some(t) = memo.get(w) {
        return t.clone();
    }
    let split = (1..w.len()).find(|&i| is_lyndon(&w[i..])).expect("a letter is Lyndon");
    let u = standard_bracket(alpha, &w[..split], memo);
    let v = standard_bracket(alpha, &w[split..], memo);
    let t = alpha.bracket(&u, &v);
    memo.insert(w.to_vec(), t.clone());
    t
}

fn bracket_label(alpha: &LieAlphabet, w: &[usize]) -> String {
    if w.len() == 1 {
        return alpha.gens.name(w[0]).to_string();
    }
    let split = (1..w.len()).find(|&i| is_lyndon(&w[i..])).unwrap();
    format!("[{},{}]", bracket_label(alpha, &w[..split]), bracket_label(alpha, &w[split..]))
}

/// Free graded Lie algebra on `gens`, truncated by `caps`.
pub fn free_lie(gens: &GradedSpace, caps: LieCaps) -> Result<FreeLie, LieError> {
    FreeLie::new(gens, caps)
}

/// Quillen model `𝓛(A)`: free Lie on `s⁻¹A*` with the differential dual to
/// the product and differential of `A`.
#[derive(Debug, Clone)]
pub struct QuillenModel {
    pub lie: FreeLie,
    pub d: LieDerivation,
}

/// Builds `𝓛(A)` truncated at bracket length `length_cap`.
///
/// The differential is the unique one making `Σ a_k ⊗ x_k` Maurer–Cartan in
/// `A ⊗ 𝓛(A)`:
/// `d x_k = −(−1)^{|a_k|} (Σ_i (d_A)_{ki} x_i + ½ Σ_{i,j} (−1)^{|x_i||a_j|} μ^k_{ij} [x_i,x_j])`.
pub fn quillen_model(a: &NilpotentBase, length_cap: Option<usize>) -> Result<QuillenModel, LieError> {
    let gens = suspend(&dual(a.space()), -1);
    let cap = match length_cap {
        Some(l) => LieCaps::length(l),
        None => {
            if gens.cdegrees().iter().any(|&d| d == 0) {
                return Err(LieError::InfinitePerDegree);
            }
            LieCaps::length(2 * a.dim().max(1))
        }
    };
    let lie = FreeLie::new(&gens, cap)?;
    let alpha = lie.alphabet().clone();
    let n = a.dim();
    let half = frac(1, 2);
    let dmat = a.differential_matrix();
    let mut values = Vec::with_capacity(n);
    for k in 0..n {
        let mut v = TensorPoly::zero();
        for i in 0..n {
            let c = dmat.get(k, i);
            if !c.is_zero() {
                v.add_scaled(&alpha.gen(i), c);
            }
        }
        for i in 0..n {
            for j in 0..n {
                let mu = &a.product(i, j)[k];
                if mu.is_zero() {
                    continue;
                }
                let s = sign(odd(alpha.gens.cdeg(i) * a.degree(j)));
                let br = alpha.bracket(&alpha.gen(i), &alpha.gen(j));
                v.add_scaled(&br, &(mu * &s * &half));
            }
        }
        values.push(v.scale(&-sign(odd(a.degree(k)))));
    }
    let d = LieDerivation { degree: 1, values };
    let sq = d.commutator(&d, &alpha);
    if let Some(g) = sq.values.iter().position(|v| !v.is_zero()) {
        return Err(LieError::NotADifferential(alpha.gens.name(g).to_string()));
    }
    Ok(QuillenModel { lie, d })
}

impl QuillenModel {
    pub fn alphabet(&self) -> &LieAlphabet {
        self.lie.alphabet()
    }

    pub fn to_dgla(&self) -> Result<Dgla, LieError> {
        self.lie.to_dgla(Some(&self.d))
    }
}

/// `g⟨τ⟩` for a free dgla `g`: τ is a new generator of cohomological degree
/// 1, `d^τ(x) = dx + [τ,x]` and `d^τ(τ) = ½[τ,τ]`.
#[derive(Debug, Clone)]
pub struct TauExtension {
    pub alpha: LieAlphabet,
    pub tau: usize,
    pub d: LieDerivation,
}

/// Adjoins τ to a free dgla given by its alphabet and differential.
pub fn adjoin_tau(alpha: &LieAlphabet, d: &LieDerivation) -> Result<TauExtension, LieError> {
    let mut basis: Vec<BasisElement> = alpha.gens.basis().to_vec();
    basis.push(BasisElement {
        name: "τ".into(),
        degree: 1,
    });
    let gens = GradedSpace::new(basis, Grading::Cohomological)
        .map_err(|e| LinftyError::SpaceMismatch(e.to_string()))?;
    let big = LieAlphabet {
        gens,
        length_cap: alpha.length_cap + 1,
        degree_cap: None,
    };
    let tau = alpha.n_gens();
    let t = big.gen(tau);
    let mut values: Vec<TensorPoly> = (0..tau)
        .map(|i| d.values[i].add(&big.bracket(&t, &big.gen(i))))
        .collect();
    values.push(big.bracket(&t, &t).scale(&frac(1, 2)));
    Ok(TauExtension {
        alpha: big,
        tau,
        d: LieDerivation { degree: 1, values },
    })
}

impl TauExtension {
    /// `(d^τ)²` on every generator, up to the length cap.
    pub fn square_vanishes(&self) -> bool {
        self.d.commutator(&self.d, &self.alpha).is_zero()
    }

    /// The derivation of `g⟨τ⟩` restricting to `D` on `g` and sending τ to `x`.
    pub fn lift(&self, big_d: &LieDerivation, x: &TensorPoly) -> LieDerivation {
        let mut values = big_d.values.clone();
        values.push(x.clone());
        LieDerivation {
            degree: big_d.degree,
            values,
        }
    }
}

/// Which Harrison complex to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarrisonKind {
    /// `Σ⁻¹Der(𝓛(A))`.
    Truncated,
    /// `Σ⁻¹Der_τ(𝓛(A)⟨τ⟩) ≅ Σ⁻¹(Der(𝓛(A)) ⋉ 𝓛(A))`.
    Full,
}

#[derive(Debug, Clone, PartialEq)]
enum HarrElem {
    /// Derivation sending generator `gen` to basis element `idx` of degree `deg`.
    Der { gen: usize, deg: i64, idx: usize },
    /// The derivation `τ ↦ x`, `x` basis element `idx` of degree `deg`.
    Tau { deg: i64, idx: usize },
}

/// Windowed Harrison complex, indexed by derivation degree.
#[derive(Debug, Clone)]
pub struct HarrisonComplex {
    model: QuillenModel,
    kind: HarrisonKind,
    lo: i64,
    hi: i64,
    bases: BTreeMap<i64, Vec<HarrElem>>,
    window: CochainWindow,
    complete: BTreeMap<i64, bool>,
}

/// Bracket length at which every Lie element of cohomological degree `e` is
/// retained, for generators of positive homological degree.
fn length_needed(gens: &GradedSpace, e: i64) -> Option<usize> {
    let hmin = gens.cdegrees().iter().map(|&d| -d).min()?;
    if hmin <= 0 {
        return None;
    }
    Some(((-e).max(0) / hmin) as usize)
}

impl HarrisonComplex {
    /// Derivation degrees `lo..=hi`; the length cap is chosen so the window
    /// is complete whenever the generators have positive homological degree.
    pub fn new(
        a: &NilpotentBase,
        lo: i64,
        hi: i64,
        kind: HarrisonKind,
        length_cap: Option<usize>,
    ) -> Result<Self, LieError> {
        let gens = suspend(&dual(a.space()), -1).in_mode(Grading::Cohomological);
        let mut need = 1usize;
        let mut feasible = gens.dim() > 0;
        for p in lo - 1..=hi + 1 {
            let mut degs: Vec<i64> = gens.cdegrees().iter().map(|&d| d + p).collect();
            if kind == HarrisonKind::Full {
                degs.push(p + 1);
            }
            for e in degs {
                match length_needed(&gens, e) {
                    Some(l) => need = need.max(l),
                    None => feasible = false,
                }
            }
        }
        let cap = match length_cap {
            Some(l) => l,
            None if feasible => need,
            None if gens.dim() == 0 => 1,
            None => return Err(LieError::InfinitePerDegree),
        };
        let model = quillen_model(a, Some(cap))?;
        let lie = &model.lie;
        let complete_in = |e: i64| length_needed(lie.generators(), e).is_some_and(|l| l <= cap);
        let mut bases = BTreeMap::new();
        let mut complete = BTreeMap::new();
        for p in lo - 1..=hi + 1 {
            let mut b = Vec::new();
            let mut ok = true;
            for g in 0..gens.dim() {
                let deg = gens.cdeg(g) + p;
                ok &= complete_in(deg);
                for idx in 0..lie.dim(deg) {
                    b.push(HarrElem::Der { gen: g, deg, idx });
                }
            }
            if kind == HarrisonKind::Full {
                ok &= complete_in(p + 1);
                for idx in 0..lie.dim(p + 1) {
                    b.push(HarrElem::Tau { deg: p + 1, idx });
                }
            }
            bases.insert(p, b);
            complete.insert(p, ok || gens.dim() == 0);
        }
        let mut hc = HarrisonComplex {
            model,
            kind,
            lo,
            hi,
            bases,
            window: CochainWindow::new(0, vec![vec![]], vec![])?,
            complete,
        };
        let labels = (lo - 1..=hi + 1).map(|p| hc.labels(p)).collect();
        let mut diffs = Vec::new();
        for p in lo - 1..=hi {
            diffs.push(hc.differential_matrix(p)?);
        }
        hc.window = CochainWindow::new(lo - 1, labels, diffs)?;
        Ok(hc)
    }

    pub fn model(&self) -> &QuillenModel {
        &self.model
    }

    pub fn kind(&self) -> HarrisonKind {
        self.kind
    }

    pub fn labels(&self, p: i64) -> Vec<String> {
        let lie = &self.model.lie;
        self.bases[&p]
            .iter()
            .map(|e| match e {
                HarrElem::Der { gen, deg, idx } => format!(
                    "{}↦{}",
                    lie.generators().name(*gen),
                    lie.basis(*deg)[*idx].label
                ),
                HarrElem::Tau { deg, idx } => format!("τ↦{}", lie.basis(*deg)[*idx].label),
            })
            .collect()
    }

    pub fn dim(&self, p: i64) -> usize {
        self.bases.get(&p).map_or(0, Vec::len)
    }

    pub fn is_safe(&self, p: i64) -> bool {
        (p - 1..=p + 1).all(|q| self.complete.get(&q).copied().unwrap_or(false))
    }

    pub fn unsafe_degrees(&self) -> Vec<i64> {
        (self.lo..=self.hi).filter(|&p| !self.is_safe(p)).collect()
    }

    pub fn require_safe(&self) -> Result<(), LieError> {
        let degrees = self.unsafe_degrees();
        if degrees.is_empty() {
            Ok(())
        } else {
            Err(LieError::UnsafeWindow { degrees })
        }
    }

    /// Splits a vector of degree `p` into `(D, x)`.
    pub fn to_pair(&self, p: i64, v: &[Q]) -> (LieDerivation, TensorPoly) {
        let lie = &self.model.lie;
        let alpha = lie.alphabet();
        let mut big_d = LieDerivation::zero(alpha, p);
        let mut x = TensorPoly::zero();
        for (e, c) in self.bases[&p].iter().zip(v) {
            if c.is_zero() {
                continue;
            }
            match e {
                HarrElem::Der { gen, deg, idx } => {
                    big_d.values[*gen].add_scaled(&lie.basis(*deg)[*idx].tensor, c)
                }
                HarrElem::Tau { deg, idx } => x.add_scaled(&lie.basis(*deg)[*idx].tensor, c),
            }
        }
        (big_d, x)
    }

    /// Inverse of [`HarrisonComplex::to_pair`].
    pub fn from_pair(&self, p: i64, big_d: &LieDerivation, x: &TensorPoly) -> Result<Vec<Q>, LieError> {
        let lie = &self.model.lie;
        let gens = lie.generators();
        let mut per_gen = Vec::new();
        for g in 0..gens.dim() {
            per_gen.push(lie.coords_in(gens.cdeg(g) + p, &big_d.values[g])?);
        }
        let xc = lie.coords_in(p + 1, x)?;
        Ok(self.bases[&p]
            .iter()
            .map(|e| match e {
                HarrElem::Der { gen, idx, .. } => per_gen[*gen][*idx].clone(),
                HarrElem::Tau { idx, .. } => xc[*idx].clone(),
            })
            .collect())
    }

    /// `d(D, x) = ([d,D] + (−1)^{|x|} ad_x, dx)`.
    pub fn apply_d(&self, big_d: &LieDerivation, x: &TensorPoly) -> (LieDerivation, TensorPoly) {
        let alpha = self.model.alphabet();
        let mut out = self.model.d.commutator(big_d, alpha);
        if let Some(dx) = alpha.degree_of(x) {
            let s = sign(odd(dx));
            for g in 0..alpha.n_gens() {
                let ad = alpha.bracket(x, &alpha.gen(g));
                out.values[g].add_scaled(&ad, &s);
            }
        }
        let x2 = self.model.d.apply(alpha, x);
        (out, x2)
    }

    /// `[(D₁,x₁),(D₂,x₂)] = ([D₁,D₂], D₁x₂ − (−1)^{|D₁||D₂|} D₂x₁)`.
    pub fn bracket(
        &self,
        a: &(LieDerivation, TensorPoly),
        b: &(LieDerivation, TensorPoly),
    ) -> (LieDerivation, TensorPoly) {
        let alpha = self.model.alphabet();
        let dd = a.0.commutator(&b.0, alpha);
        let mut x = a.0.apply(alpha, &b.1);
        x.add_scaled(&b.0.apply(alpha, &a.1), &-sign(odd(a.0.degree * b.0.degree)));
        (dd, x)
    }

    fn differential_matrix(&self, p: i64) -> Result<RationalMatrix, LieError> {
        let n_from = self.dim(p);
        let n_to = self.dim(p + 1);
        let mut m = RationalMatrix::zeros(n_to, n_from);
        for k in 0..n_from {
            let (big_d, x) = self.to_pair(p, &crate::exact_linalg::unit(n_from, k));
            let (od, ox) = self.apply_d(&big_d, &x);
            let ox = if self.kind == HarrisonKind::Full { ox } else { TensorPoly::zero() };
            let col = self.from_pair(p + 1, &od, &ox)?;
            for (r, c) in col.into_iter().enumerate() {
                if !c.is_zero() {
                    m.set(r, k, c);
                }
            }
        }
        Ok(m)
    }

    pub fn cochain_window(&self) -> &CochainWindow {
        &self.window
    }

    pub fn cohomology(&self, p: i64) -> Result<CohomologyGroup, LieError> {
        let mut h = self.window.cohomology(p, false)?;
        h.truncation_suspect = !self.is_safe(p);
        Ok(h)
    }

    pub fn dims(&self) -> Vec<(i64, usize)> {
        (self.lo..=self.hi)
            .map(|p| (p, self.cohomology(p).map(|h| h.dim).unwrap_or(0)))
            .collect()
    }
}

/// Harrison cohomology dims of `A` in derivation degrees `lo..=hi`.
pub fn harrison_cohomology(
    a: &NilpotentBase,
    lo: i64,
    hi: i64,
    kind: HarrisonKind,
) -> Result<Vec<(i64, usize)>, LieError> {
    let h = HarrisonComplex::new(a, lo, hi, kind, None)?;
    h.require_safe()?;
    Ok(h.dims())
}

/// Checks the full Harrison dims against the long exact sequence of
/// `0 → Der → Der ⋉ 𝓛 → 𝓛 → 0`, whose connecting map is `x ↦ ±ad_x`.
/// Returns the predicted dims for degrees strictly inside the window.
pub fn harrison_les_prediction(a: &NilpotentBase, lo: i64, hi: i64) -> Result<Vec<(i64, usize)>, LieError> {
    let full = HarrisonComplex::new(a, lo, hi, HarrisonKind::Full, None)?;
    let cap = full.model.lie.alphabet().length_cap();
    let trunc = HarrisonComplex::new(a, lo, hi, HarrisonKind::Truncated, Some(cap))?;
    let lie = &full.model.lie;
    let alpha = lie.alphabet();
    // Complex 𝓛 shifted so that x of degree p+1 sits in degree p.
    let labels: Vec<Vec<String>> = (lo - 1..=hi + 1)
        .map(|p| lie.basis(p + 1).iter().map(|e| e.label.clone()).collect())
        .collect();
    let mut diffs = Vec::new();
    for p in lo - 1..=hi {
        let mut m = RationalMatrix::zeros(lie.dim(p + 2), lie.dim(p + 1));
        for (k, e) in lie.basis(p + 1).iter().enumerate() {
            let col = lie.coords_in(p + 2, &full.model.d.apply(alpha, &e.tensor))?;
            for (r, c) in col.into_iter().enumerate() {
                m.set(r, k, c);
            }
        }
        diffs.push(m);
    }
    let gwin = CochainWindow::new(lo - 1, labels, diffs)?;
    let delta_rank = |p: i64| -> Result<usize, LieError> {
        // δ: H^p(𝓛-part) → H^{p+1}(Der)
        let hg = gwin.cohomology(p, false)?;
        let hd = trunc.cohomology(p + 1)?;
        let mut ech = EchelonBasis::new(hd.dim);
        for r in &hg.representatives {
            let x = lie.element(p + 1, r);
            let (od, _) = full.apply_d(&LieDerivation::zero(alpha, p), &x);
            let v = trunc.from_pair(p + 1, &od, &TensorPoly::zero())?;
            let cls = hd.class_of(&v).expect("connecting map lands in cocycles");
            ech.insert(&cls);
        }
        Ok(ech.len())
    };
    let mut out = Vec::new();
    for p in lo + 1..hi {
        let hd = trunc.cohomology(p)?.dim;
        let hg = gwin.cohomology(p, false)?.dim;
        out.push((p, hd - delta_rank(p - 1)? + hg - delta_rank(p)?));
    }
    Ok(out)
}

/// Dims of `𝐶̄_CE(𝓛(A),𝓛(A))` and `𝐶̄_Harr(A,A)` in derivation degrees
/// `lo..=hi`. The CE side uses `𝓛(A)/𝓛_{>ce_length}`, which is
/// quasi-isomorphic to `𝓛(A)` only when nothing above that length carries
/// cohomology (for instance `𝓛(A)` finite at that length, or acyclic with a
/// length-preserving differential).
pub fn ceh_comparison(
    a: &NilpotentBase,
    lo: i64,
    hi: i64,
    ce_length: usize,
) -> Result<(Vec<(i64, usize)>, Vec<(i64, usize)>), LieError> {
    let harr = HarrisonComplex::new(a, lo, hi, HarrisonKind::Truncated, None)?;
    harr.require_safe()?;
    let g = quillen_model(a, Some(ce_length))?.to_dgla()?;
    let v = g.to_linfty(2);
    let ce = CEComplex::new(&v, 2, lo, hi, true)?;
    ce.require_safe()?;
    let ce_dims = (lo..=hi).map(|p| Ok((p, ce.cohomology(p)?.dim))).collect::<Result<_, CeError>>()?;
    Ok((ce_dims, harr.dims()))
}

/// Quotient of a truncated free Lie algebra by the ideal generated by
/// homogeneous relations.
#[derive(Debug, Clone)]
pub struct PresentedLie {
    free: FreeLie,
    relations: Vec<TensorPoly>,
    /// Per degree: ideal basis and chosen complement, in Lie coordinates.
    ideal: BTreeMap<i64, EchelonBasis>,
    complement: BTreeMap<i64, Vec<usize>>,
    finite: bool,
}

/// `𝕃(generators)/(relations)` truncated by `caps`.
pub fn presented_dgla(
    gens: &GradedSpace,
    relations: Vec<TensorPoly>,
    caps: LieCaps,
) -> Result<PresentedLie, LieError> {
    let free = FreeLie::new(gens, caps)?;
    let alpha = free.alphabet().clone();
    for r in &relations {
        let inside = r.terms().all(|(w, _)| alpha.keep(w));
        if !inside || !alpha.is_homogeneous(r) || free.coords(r).is_err() {
            return Err(LieError::RelationOutsideCap(alpha.fmt(r)));
        }
    }
    let mut ideal: BTreeMap<i64, EchelonBasis> = free
        .degrees()
        .into_iter()
        .map(|d| (d, EchelonBasis::new(free.dim(d))))
        .collect();
    let mut queue: std::collections::VecDeque<TensorPoly> = relations.iter().cloned().collect();
    while let Some(r) = queue.pop_front() {
        if r.is_zero() {
            continue;
        }
        let (deg, c) = free.coords(&r)?;
        if !ideal.get_mut(&deg).expect("degree present").insert(&c) {
            continue;
        }
        for g in 0..alpha.n_gens() {
            queue.push_back(alpha.bracket(&alpha.gen(g), &r));
        }
    }
    let mut complement = BTreeMap::new();
    for (&deg, ech) in &ideal {
        let mut e = ech.clone();
        let n = free.dim(deg);
        let chosen: Vec<usize> = (0..n)
            .filter(|&k| e.insert(&crate::exact_linalg::unit(n, k)))
            .collect();
        complement.insert(deg, chosen);
    }
    let mut p = PresentedLie {
        free,
        relations,
        ideal,
        complement,
        finite: false,
    };
    p.finite = p.detect_finite();
    Ok(p)
}

impl PresentedLie {
    pub fn free(&self) -> &FreeLie {
        &self.free
    }

    pub fn relations(&self) -> &[TensorPoly] {
        &self.relations
    }

    /// Quotient dimension in cohomological degree `deg`.
    pub fn dim(&self, deg: i64) -> usize {
        self.complement.get(&deg).map_or(0, Vec::len)
    }

    /// Quotient dims per homological degree, over the retained range.
    pub fn dims_by_hdegree(&self) -> BTreeMap<i64, usize> {
        let alpha = self.free.alphabet();
        let cap = alpha
            .degree_cap()
            .unwrap_or_else(|| self.free.degrees().iter().map(|d| d.abs()).max().unwrap_or(0));
        let lo = alpha.generators().cdegrees().iter().map(|d| -d).min().unwrap_or(1).min(1);
        (lo..=cap).map(|h| (h, self.dim(-h))).collect()
    }

    /// True when the quotient is known to vanish above the caps: it vanishes
    /// on a band of consecutive degrees as wide as the largest generator
    /// degree, above all generator degrees and inside the complete range.
    pub fn is_finite(&self) -> bool {
        self.finite
    }

    fn detect_finite(&self) -> bool {
        let alpha = self.free.alphabet();
        let h: Vec<i64> = alpha.generators().cdegrees().iter().map(|d| -d).collect();
        if h.is_empty() {
            return true;
        }
        if h.iter().any(|&d| d <= 0) {
            return false;
        }
        let hmin = *h.iter().min().unwrap();
        let hmax = *h.iter().max().unwrap();
        // Degrees retained completely by the caps.
        let by_len = alpha.length_cap() as i64 * hmin;
        let top = alpha.degree_cap().map_or(by_len, |d| d.min(by_len));
        let mut run = 0;
        for deg in hmax + 1..=top {
            if self.dim(-deg) == 0 {
                run += 1;
                if run >= hmax {
                    return true;
                }
            } else {
                run = 0;
            }
        }
        false
    }

    fn quotient_coords(&self, t: &TensorPoly) -> Result<(i64, Vec<Q>), LieError> {
        let (deg, c) = self.free.coords(t)?;
        let ideal = &self.ideal[&deg];
        let chosen = &self.complement[&deg];
        let n = c.len();
        let mut cols: Vec<Vec<Q>> = ideal.vectors().to_vec();
        cols.extend(chosen.iter().map(|&k| crate::exact_linalg::unit(n, k)));
        let x = RationalMatrix::from_columns(&cols, n)
            .solve(&c)
            .expect("ideal and complement span the degree");
        Ok((deg, x[ideal.len()..].to_vec()))
    }

    /// The quotient (truncated at the caps) as a finite dgla with zero
    /// differential.
    pub fn to_dgla(&self) -> Result<Dgla, LieError> {
        let mut elems = Vec::new();
        let mut offset = BTreeMap::new();
        for (&deg, chosen) in &self.complement {
            offset.insert(deg, elems.len());
            for &k in chosen {
                elems.push((deg, self.free.basis(deg)[k].clone()));
            }
        }
        let space = GradedSpace::new(
            elems
                .iter()
                .map(|(deg, e)| BasisElement {
                    name: e.label.clone(),
                    degree: *deg,
                })
                .collect(),
            Grading::Cohomological,
        )
        .map_err(|e| LinftyError::SpaceMismatch(e.to_string()))?;
        let alpha = self.free.alphabet();
        let mut br = Vec::new();
        for a in 0..elems.len() {
            for b in a..elems.len() {
                let t = alpha.bracket(&elems[a].1.tensor, &elems[b].1.tensor);
                if t.is_zero() {
                    continue;
                }
                let (deg, c) = self.quotient_coords(&t)?;
                let v: SparseVec = c
                    .into_iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(k, x)| (offset[&deg] + k, x))
                    .collect();
                if !v.is_empty() {
                    br.push(((a, b), v));
                }
            }
        }
        let g = Dgla::new(space, vec![vec![]; elems.len()], br)?;
        Ok(g.in_mode(Grading::Homological))
    }
}

/// `𝕃⟨p₁,q₁,…,p_N,q_N⟩/(Σ[p_i,q_i])` with generators in homological degree
/// `n − 1`: the rational homotopy Lie algebra of a connected sum of `N`
/// copies of `Sⁿ × Sⁿ`.
pub fn wedge_model(n: i64, copies: usize, degree_cap: i64) -> Result<PresentedLie, LieError> {
    let mut pairs = Vec::new();
    for i in 1..=copies {
        pairs.push((format!("p{i}"), n - 1));
        pairs.push((format!("q{i}"), n - 1));
    }
    let refs: Vec<(&str, i64)> = pairs.iter().map(|(s, d)| (s.as_str(), *d)).collect();
    let gens = GradedSpace::from_pairs(&refs, Grading::Homological);
    let alpha = LieAlphabet::new(&gens, LieCaps::degree(degree_cap))?;
    let mut w = TensorPoly::zero();
    for i in 0..copies {
        w = w.add(&alpha.bracket(&alpha.gen(2 * i), &alpha.gen(2 * i + 1)));
    }
    presented_dgla(&gens, vec![w], LieCaps::degree(degree_cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ce::ce_cohomology;
    use crate::exact_linalg::unit;

    fn hom(pairs: &[(&str, i64)]) -> GradedSpace {
        GradedSpace::from_pairs(pairs, Grading::Homological)
    }

    /// Rank of all right-normed brackets of a given length and degree.
    fn spanning_rank(alpha: &LieAlphabet, len: usize) -> BTreeMap<i64, usize> {
        let n = alpha.n_gens();
        let mut words: Vec<Word> = vec![vec![]];
        for _ in 0..len {
            words = words
                .into_iter()
                .flat_map(|w| (0..n).map(move |g| {
                    let mut x = w.clone();
                    x.push(g);
                    x
                }))
                .collect();
        }
        let mut by_deg: BTreeMap<i64, Vec<TensorPoly>> = BTreeMap::new();
        for w in &words {
            if !alpha.keep(w) {
                continue;
            }
            let t = alpha.right_normed(w);
            by_deg.entry(alpha.word_degree(w)).or_default().push(t);
        }
        by_deg
            .into_iter()
            .map(|(d, ts)| {
                let mut all: Vec<Word> = ts.iter().flat_map(|t| t.terms().map(|(w, _)| w.clone())).collect();
                all.sort();
                all.dedup();
                let mut ech = EchelonBasis::new(all.len());
                for t in &ts {
                    let v: Vec<Q> = all.iter().map(|w| t.coeff(w)).collect();
                    ech.insert(&v);
                }
                (d, ech.len())
            })
            .filter(|(_, r)| *r > 0)
            .collect()
    }

    fn lyndon_dims_by_length_and_degree(f: &FreeLie, len: usize) -> BTreeMap<i64, usize> {
        let mut out = BTreeMap::new();
        for d in f.degrees() {
            let c = f.basis(d).iter().filter(|e| e.length == len).count();
            if c > 0 {
                out.insert(d, c);
            }
        }
        out
    }

    #[test]
    fn lyndon_words_small() {
        let w = lyndon_words(2, 3);
        assert_eq!(w, vec![vec![0], vec![0, 0, 1], vec![0, 1], vec![0, 1, 1], vec![1]]);
    }

    #[test]
    fn one_odd_generator() {
        let f = free_lie(&hom(&[("ξ", 1)]), LieCaps::length(6)).unwrap();
        assert_eq!(f.total_dim(), 2);
        let a = f.alphabet();
        let xi = a.gen(0);
        let sq = a.bracket(&xi, &xi);
        assert!(!sq.is_zero());
        assert!(a.bracket(&xi, &sq).is_zero());
    }

    #[test]
    fn two_degree_zero_generators() {
        let gens = hom(&[("a", 0), ("b", 0)]);
        assert_eq!(free_lie(&gens, LieCaps::degree(3)).unwrap_err(), LieError::InfinitePerDegree);
        let f = free_lie(&gens, LieCaps::length(3)).unwrap();
        assert_eq!(f.dims_by_length(), BTreeMap::from([(1, 2), (2, 1), (3, 2)]));
    }

    #[test]
    fn one_even_generator() {
        let f = free_lie(&hom(&[("e", 2)]), LieCaps::degree(10)).unwrap();
        assert_eq!(f.total_dim(), 1);
    }

    #[test]
    fn lyndon_basis_matches_spanning_rank() {
        let profiles: Vec<Vec<(&str, i64)>> = vec![
            vec![("a", 1), ("b", 1)],
            vec![("a", 1), ("b", 2)],
            vec![("a", 2), ("b", 2)],
            vec![("a", 1), ("b", 1), ("c", 2)],
            vec![("a", 0), ("b", 0)],
            vec![("a", 1)],
        ];
        for prof in profiles {
            let f = free_lie(&hom(&prof), LieCaps::length(5)).unwrap();
            for len in 1..=5 {
                assert_eq!(
                    lyndon_dims_by_length_and_degree(&f, len),
                    spanning_rank(f.alphabet(), len),
                    "{prof:?} length {len}"
                );
            }
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let f = free_lie(&hom(&[("a", 1), ("b", 2)]), LieCaps::length(4)).unwrap();
        let a = f.alphabet();
        let t = a.right_normed(&[1, 0, 0, 1]);
        let (deg, c) = f.coords(&t).unwrap();
        assert_eq!(f.element(deg, &c), t);
        assert!(f.coords(&TensorPoly::word(vec![0, 1], q(1))).is_err());
    }

    #[test]
    fn graded_jacobi_in_tensor_algebra() {
        let f = free_lie(&hom(&[("a", 1), ("b", 2), ("c", 1)]), LieCaps::length(6)).unwrap();
        let al = f.alphabet();
        let (x, y, z) = (al.gen(0), al.right_normed(&[1, 2]), al.gen(2));
        let (dx, dy) = (al.degree_of(&x).unwrap(), al.degree_of(&y).unwrap());
        let lhs = al.bracket(&x, &al.bracket(&y, &z));
        let rhs = al
            .bracket(&al.bracket(&x, &y), &z)
            .add(&al.bracket(&y, &al.bracket(&x, &z)).scale(&sign(odd(dx * dy))));
        assert_eq!(lhs, rhs);
    }

    fn point_in_degree(k: i64) -> NilpotentBase {
        NilpotentBase::infinitesimal(GradedSpace::from_pairs(&[("x", k)], Grading::Cohomological))
    }

    /// u in degree 2, v in degree 3, du = v.
    pub(crate) fn acyclic_pair() -> NilpotentBase {
        let sp = GradedSpace::from_pairs(&[("u", 2), ("v", 3)], Grading::Cohomological);
        NilpotentBase::new(sp, vec![], vec![vec![(1, q(1))], vec![]]).unwrap()
    }

    /// Cohomology ring of S²×S²-like: a, b in degree 2, ab = c in degree 4.
    fn product_base() -> NilpotentBase {
        let sp = GradedSpace::from_pairs(&[("a", 2), ("b", 2), ("c", 4)], Grading::Cohomological);
        NilpotentBase::new(sp, vec![((0, 1), vec![(2, q(1))])], vec![vec![]; 3]).unwrap()
    }

    #[test]
    fn quillen_models() {
        let m = quillen_model(&point_in_degree(2), None).unwrap();
        assert_eq!(m.lie.total_dim(), 2);
        assert!(m.d.is_zero());
        assert_eq!(m.lie.generators().name(0), "s⁻¹·x*");
        assert_eq!(m.lie.generators().hdeg(0), 1);

        let m = quillen_model(&acyclic_pair(), Some(4)).unwrap();
        // d(s⁻¹v*) = s⁻¹u*.
        assert_eq!(m.d.values[1], m.alphabet().gen(0));
        assert!(m.d.values[0].is_zero());

        let m = quillen_model(&product_base(), Some(4)).unwrap();
        assert!(!m.d.values[2].is_zero());
        let g = m.to_dgla().unwrap();
        g.validate().unwrap();
    }

    #[test]
    fn quillen_rejects_degree_one_without_cap() {
        assert_eq!(quillen_model(&point_in_degree(1), None).unwrap_err(), LieError::InfinitePerDegree);
    }

    #[test]
    fn tau_extension_squares_to_zero() {
        for a in [point_in_degree(2), acyclic_pair(), product_base()] {
            let m = quillen_model(&a, Some(4)).unwrap();
            let t = adjoin_tau(m.alphabet(), &m.d).unwrap();
            assert!(t.square_vanishes());
        }
        let ab = quillen_model(&NilpotentBase::infinitesimal(GradedSpace::from_pairs(&[("x", 2), ("y", 3)], Grading::Cohomological)), Some(3)).unwrap();
        let t = adjoin_tau(ab.alphabet(), &ab.d).unwrap();
        let tau = t.alpha.gen(t.tau);
        assert_eq!(t.d.values[0], t.alpha.bracket(&tau, &t.alpha.gen(0)));
    }

    /// Literal commutators in `Der(g⟨τ⟩)` agree with the semidirect formulas.
    #[test]
    fn der_tau_is_semidirect_product() {
        for a in [point_in_degree(2), acyclic_pair(), product_base()] {
            let h = HarrisonComplex::new(&a, -3, 1, HarrisonKind::Full, Some(3)).unwrap();
            let t = adjoin_tau(h.model().alphabet(), &h.model().d).unwrap();
            let big = &t.alpha;
            let embed = |x: &TensorPoly| x.clone();
            for p in -3..=1 {
                for k in 0..h.dim(p) {
                    let pair = h.to_pair(p, &unit(h.dim(p), k));
                    let lifted = t.lift(&pair.0, &embed(&pair.1));
                    // Differential.
                    let lit = t.d.commutator(&lifted, big);
                    let (fd, fx) = h.apply_d(&pair.0, &pair.1);
                    let expect = t.lift(&fd, &fx);
                    for g in 0..big.n_gens() {
                        let trunc = |x: &TensorPoly| {
                            let mut o = TensorPoly::zero();
                            for (w, c) in x.terms() {
                                if w.len() <= 3 && !w.contains(&t.tau) {
                                    o.add_term(w.clone(), c.clone());
                                }
                            }
                            o
                        };
                        assert_eq!(trunc(&lit.values[g]), trunc(&expect.values[g]));
                        // Image stays in g: no τ in words up to the cap.
                        assert!(lit.values[g].terms().filter(|(w, _)| w.len() <= 3).all(|(w, _)| !w.contains(&t.tau)));
                    }
                    // Bracket with every other basis element of a nearby degree.
                    for r in -3..=1 {
                        for j in 0..h.dim(r) {
                            let other = h.to_pair(r, &unit(h.dim(r), j));
                            let lo = t.lift(&other.0, &other.1);
                            let lit = lifted.commutator(&lo, big);
                            let (bd, bx) = h.bracket(&pair, &other);
                            let exp = t.lift(&bd, &bx);
                            for g in 0..big.n_gens() {
                                let keep = |x: &TensorPoly| {
                                    let mut o = TensorPoly::zero();
                                    for (w, c) in x.terms() {
                                        if w.len() <= 3 {
                                            o.add_term(w.clone(), c.clone());
                                        }
                                    }
                                    o
                                };
                                assert_eq!(keep(&lit.values[g]), keep(&exp.values[g]));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn harrison_of_a_point() {
        let a = point_in_degree(2);
        let h = HarrisonComplex::new(&a, -3, 3, HarrisonKind::Truncated, None).unwrap();
        h.require_safe().unwrap();
        assert_eq!(h.dim(0) + h.dim(-1), 2);
        let nonzero: Vec<(i64, usize)> = h.dims().into_iter().filter(|d| d.1 > 0).collect();
        assert_eq!(nonzero, vec![(-1, 1), (0, 1)]);
        let full = harrison_cohomology(&a, -3, 3, HarrisonKind::Full).unwrap();
        let nonzero: Vec<(i64, usize)> = full.into_iter().filter(|d| d.1 > 0).collect();
        assert_eq!(nonzero, vec![(-3, 1), (0, 1)]);
    }

    #[test]
    fn harrison_of_zero() {
        let a = NilpotentBase::infinitesimal(GradedSpace::zero(Grading::Cohomological));
        assert!(harrison_cohomology(&a, -2, 2, HarrisonKind::Full).unwrap().iter().all(|d| d.1 == 0));
    }

    #[test]
    fn les_prediction_matches() {
        for a in [point_in_degree(2), acyclic_pair(), product_base()] {
            let full = HarrisonComplex::new(&a, -4, 2, HarrisonKind::Full, None).unwrap();
            let pred = harrison_les_prediction(&a, -4, 2).unwrap();
            for (p, d) in pred {
                assert_eq!(full.cohomology(p).unwrap().dim, d, "degree {p}");
            }
        }
    }

    #[test]
    fn ceh_point_and_acyclic() {
        for a in [point_in_degree(2), acyclic_pair()] {
            let (ce, harr) = ceh_comparison(&a, -3, 3, 2).unwrap();
            assert_eq!(ce, harr);
        }
        let (ce, _) = ceh_comparison(&acyclic_pair(), -3, 3, 2).unwrap();
        assert!(ce.iter().all(|d| d.1 == 0));
    }

    #[test]
    fn full_ce_matches_full_harrison_for_a_point() {
        let a = point_in_degree(2);
        let g = quillen_model(&a, None).unwrap().to_dgla().unwrap();
        let c = CEComplex::new(&g.to_linfty(2), 2, -3, 3, false).unwrap();
        let t = ce_cohomology(&c).unwrap();
        assert_eq!(t.dims(), harrison_cohomology(&a, -3, 3, HarrisonKind::Full).unwrap());
    }

    #[test]
    fn presented_without_relations_is_free() {
        let gens = hom(&[("a", 1), ("b", 2)]);
        let p = presented_dgla(&gens, vec![], LieCaps::degree(6)).unwrap();
        let f = free_lie(&gens, LieCaps::degree(6)).unwrap();
        for d in f.degrees() {
            assert_eq!(p.dim(d), f.dim(d));
        }
    }

    #[test]
    fn wedge_n3_n1() {
        let p = wedge_model(3, 1, 10).unwrap();
        let dims = p.dims_by_hdegree();
        assert_eq!(dims[&2], 2);
        assert_eq!(dims[&4], 0);
        assert!(dims.values().sum::<usize>() == 2);
        assert!(p.is_finite());
        let g = p.to_dgla().unwrap();
        assert_eq!(g.dim(), 2);
        assert!(g.bracket_entries().is_empty());
        let c = CEComplex::new(&g.to_linfty(3), 3, -4, 4, false).unwrap();
        c.require_safe().unwrap();
        let mut by_arity: BTreeMap<u32, Vec<(i64, usize)>> = BTreeMap::new();
        for p in -4..=4 {
            for (w, n) in c.cohomology_by_weight(p).unwrap() {
                if n > 0 {
                    by_arity.entry(w).or_default().push((p, n));
                }
            }
        }
        let expect = BTreeMap::from([(0, vec![(-3, 2)]), (1, vec![(0, 4)]), (2, vec![(3, 2)])]);
        assert_eq!(by_arity, expect);
    }

    #[test]
    fn relation_outside_cap() {
        let gens = hom(&[("a", 2), ("b", 2)]);
        let alpha = LieAlphabet::new(&gens, LieCaps::degree(10)).unwrap();
        let r = alpha.right_normed(&[0, 0, 1]);
        assert!(matches!(
            presented_dgla(&gens, vec![r], LieCaps::degree(4)),
            Err(LieError::RelationOutsideCap(_))
        ));
    }

    #[test]
    fn presented_odd_wedge() {
        // Odd generators: the squares survive and everything above vanishes.
        let p = wedge_model(2, 1, 8).unwrap();
        assert!(p.is_finite());
        let dims = p.dims_by_hdegree();
        assert_eq!((dims[&1], dims[&2], dims[&3], dims[&4]), (2, 2, 0, 0));
        let g = p.to_dgla().unwrap();
        g.validate().unwrap();
        assert_eq!(g.dim(), 4);
    }
}
