//! Chevalley–Eilenberg complexes as derivation complexes.
//!
//! `C_CE(V,V) = Σ⁻¹Der(ŜΣ⁻¹V*)` with differential `[m,−]`; a derivation of
//! degree `p` is a CE cochain of degree `p + 1`. The truncated complex uses
//! derivations without constant term. Windows are indexed by derivation
//! degree and every report carries both degrees.
//!
//! A derivation degree `p` is *safe* when the derivation spaces in degrees
//! `p − 1`, `p`, `p + 1` are complete at the weight cap, so the cohomology
//! computed there is the true cohomology.

use std::collections::BTreeMap;
use std::sync::Arc;

use num::Zero;

use crate::exact_linalg::{CochainWindow, CohomologyGroup, LinalgError, RationalMatrix};
use crate::linfty::{self, Dgla, LInftyStructure, LinftyError, SparseVec};
use crate::symalg::{build_algebra, der_basis, DerBasis, Derivation, FreeCommAlgebra, SymalgError};
use crate::Q;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CeError {
    #[error(transparent)]
    Symalg(#[from] SymalgError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Linfty(#[from] LinftyError),
    #[error("weight cap may truncate derivation degrees {degrees:?}")]
    UnsafeWindow { degrees: Vec<i64> },
    #[error("cochains belong to different complexes")]
    ComplexMismatch,
    #[error("window {lo}..{hi} is empty")]
    EmptyWindow { lo: i64, hi: i64 },
    #[error("the structure has brackets of arity other than 2")]
    NotHomogeneous,
}

/// Largest cap tried when raising the weight cap automatically.
const CAP_SEARCH: u32 = 16;

/// Whether `Der_p` of `alg` has no basis element above the cap.
pub fn der_degree_complete(alg: &FreeCommAlgebra, p: i64) -> bool {
    (0..alg.n_gens()).all(|i| !alg.has_monomials_above_cap(alg.gen_degree(i) + p))
}

/// Smallest cap `≥ cap` (searching a bounded range) at which every
/// derivation degree in `lo..=hi` is complete, if any.
pub fn safe_cap(v: &LInftyStructure, cap: u32, lo: i64, hi: i64) -> Option<u32> {
    let gens = v.algebra().generators();
    (cap..=cap.max(CAP_SEARCH)).find(|&c| {
        let alg = build_algebra(gens, c);
        (lo..=hi).all(|p| der_degree_complete(&alg, p))
    })
}

/// Windowed CE complex of an L∞ algebra with adjoint coefficients.
#[derive(Debug, Clone)]
pub struct CEComplex {
    base: LInftyStructure,
    truncated: bool,
    lo: i64,
    hi: i64,
    bases: BTreeMap<i64, DerBasis>,
    window: CochainWindow,
    complete: BTreeMap<i64, bool>,
}

impl CEComplex {
    /// Builds derivation degrees `lo..=hi` plus one padding degree on each
    /// side. The weight cap is raised when that makes the window safe.
    pub fn new(
        v: &LInftyStructure,
        weight_cap: u32,
        lo: i64,
        hi: i64,
        truncated: bool,
    ) -> Result<Self, CeError> {
        if lo > hi {
            return Err(CeError::EmptyWindow { lo, hi });
        }
        let cap = safe_cap(v, weight_cap, lo - 1, hi + 1).unwrap_or(weight_cap);
        let base = v.with_weight_cap(cap);
        let alg = Arc::clone(base.algebra());
        let mut bases = BTreeMap::new();
        let mut complete = BTreeMap::new();
        for p in lo - 1..=hi + 1 {
            bases.insert(p, der_basis(&alg, p, !truncated)?);
            complete.insert(p, der_degree_complete(&alg, p));
        }
        let labels = bases.values().map(|b| b.labels()).collect();
        let mut diffs = Vec::new();
        for p in lo - 1..=hi {
            diffs.push(differential_matrix(base.m(), &bases[&p], &bases[&(p + 1)])?);
        }
        let window = CochainWindow::new(lo - 1, labels, diffs)?;
        Ok(CEComplex {
            base,
            truncated,
            lo,
            hi,
            bases,
            window,
            complete,
        })
    }

    pub fn base(&self) -> &LInftyStructure {
        &self.base
    }

    pub fn algebra(&self) -> &Arc<FreeCommAlgebra> {
        self.base.algebra()
    }

    pub fn weight_cap(&self) -> u32 {
        self.base.weight_cap()
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Derivation-degree window `(lo, hi)`.
    pub fn window(&self) -> (i64, i64) {
        (self.lo, self.hi)
    }

    pub fn cochain_window(&self) -> &CochainWindow {
        &self.window
    }

    /// CE degree of derivation degree `p`.
    pub fn ce_degree(p: i64) -> i64 {
        p + 1
    }

    /// Basis of `Der_p`; `p` may be one of the padding degrees.
    pub fn basis(&self, p: i64) -> &DerBasis {
        &self.bases[&p]
    }

    pub fn dim(&self, p: i64) -> usize {
        self.bases.get(&p).map_or(0, DerBasis::len)
    }

    /// Dimensions of `Der_p` split by weight of the value monomial.
    pub fn dims_by_weight(&self, p: i64) -> BTreeMap<u32, usize> {
        let mut out = BTreeMap::new();
        let b = self.basis(p);
        for k in 0..b.len() {
            *out.entry(b.weight_of(k)).or_insert(0) += 1;
        }
        out
    }

    pub fn is_safe(&self, p: i64) -> bool {
        (p - 1..=p + 1).all(|q| self.complete.get(&q).copied().unwrap_or(false))
    }

    pub fn unsafe_degrees(&self) -> Vec<i64> {
        (self.lo..=self.hi).filter(|&p| !self.is_safe(p)).collect()
    }

    /// Errors with the list of unsafe degrees, if any.
    pub fn require_safe(&self) -> Result<(), CeError> {
        let degrees = self.unsafe_degrees();
        if degrees.is_empty() {
            Ok(())
        } else {
            Err(CeError::UnsafeWindow { degrees })
        }
    }

    /// Matrix of `d: Der_p → Der_{p+1}`.
    pub fn differential(&self, p: i64) -> Option<&RationalMatrix> {
        self.window.differential(p)
    }

    /// `d_CE(a) = [m, a]`.
    pub fn d(&self, a: &Derivation) -> Result<Derivation, CeError> {
        self.check_same(a)?;
        let m = self.base.m().clone().with_constant_terms_allowed(!self.truncated);
        Ok(m.commutator(a)?)
    }

    fn check_same(&self, a: &Derivation) -> Result<(), CeError> {
        if **a.algebra() != **self.algebra() {
            return Err(CeError::ComplexMismatch);
        }
        Ok(())
    }

    /// Cohomology in derivation degree `p`, flagged when `p` is unsafe.
    pub fn cohomology(&self, p: i64) -> Result<CohomologyGroup, CeError> {
        if p < self.lo || p > self.hi {
            return Err(LinalgError::DegreeOutsideWindow {
                degree: p,
                lo: self.lo,
                hi: self.hi,
            }
            .into());
        }
        let mut h = self.window.cohomology(p, false)?;
        h.truncation_suspect = !self.is_safe(p);
        Ok(h)
    }

    /// Cohomology in derivation degree `p` split by weight of the value
    /// monomial (the arity of the cochain). Needs `m` purely quadratic, so
    /// that `d` raises weight by exactly one.
    pub fn cohomology_by_weight(&self, p: i64) -> Result<BTreeMap<u32, usize>, CeError> {
        if self.base.m().weights().iter().any(|&w| w != 2) {
            return Err(CeError::NotHomogeneous);
        }
        self.cohomology(p)?;
        let restricted_rank = |q: i64, w: u32| -> usize {
            let (Some(d), Some(from), Some(to)) =
                (self.differential(q), self.bases.get(&q), self.bases.get(&(q + 1)))
            else {
                return 0;
            };
            let cols: Vec<usize> = (0..from.len()).filter(|&k| from.weight_of(k) == w).collect();
            let rows: Vec<usize> = (0..to.len()).filter(|&k| to.weight_of(k) == w + 1).collect();
            let sub = RationalMatrix::from_rows(
                rows.iter().map(|&r| cols.iter().map(|&c| d.get(r, c).clone()).collect()).collect(),
                cols.len(),
            );
            sub.rank()
        };
        let mut out = BTreeMap::new();
        for (w, n) in self.dims_by_weight(p) {
            let before = if w == 0 { 0 } else { restricted_rank(p - 1, w - 1) };
            out.insert(w, n - restricted_rank(p, w) - before);
        }
        Ok(out)
    }

    pub fn to_derivation(&self, p: i64, coords: &[Q]) -> Derivation {
        self.basis(p).from_coords(coords)
    }

    pub fn coords(&self, a: &Derivation) -> Result<Vec<Q>, CeError> {
        self.check_same(a)?;
        Ok(self.basis(a.degree()).coords(a)?)
    }

    /// The part of the CE dgla in derivation degrees `< 0` as a finite dgla.
    /// Requires the window to reach down to the lowest nonzero degree and
    /// every degree in `lo..0` to be complete.
    pub fn negative_part(&self) -> Result<Dgla, CeError> {
        let alg = self.algebra();
        let unsafe_neg: Vec<i64> = (self.lo - 1..0)
            .filter(|&p| !self.complete.get(&p).copied().unwrap_or(false))
            .collect();
        if !unsafe_neg.is_empty() {
            return Err(CeError::UnsafeWindow { degrees: unsafe_neg });
        }
        // No derivations at all below the window.
        let lowest = (0..alg.n_gens()).map(|i| -alg.gen_degree(i)).min().unwrap_or(0);
        if lowest < self.lo - 1 {
            return Err(CeError::UnsafeWindow {
                degrees: (lowest..self.lo - 1).collect(),
            });
        }
        let degrees: Vec<i64> = (self.lo - 1..0).collect();
        let mut elems = Vec::new();
        let mut offset = BTreeMap::new();
        for &p in &degrees {
            offset.insert(p, elems.len());
            let b = self.basis(p);
            for k in 0..b.len() {
                elems.push((p, k, b.label(k)));
            }
        }
        let space = crate::graded_core::GradedSpace::new(
            elems
                .iter()
                .map(|(p, _, l)| crate::graded_core::BasisElement {
                    name: l.clone(),
                    degree: *p,
                })
                .collect(),
            crate::graded_core::Grading::Cohomological,
        )
        .map_err(|e| LinftyError::SpaceMismatch(e.to_string()))?;
        let embed = |d: &Derivation| -> Result<SparseVec, CeError> {
            let p = d.degree();
            if d.is_zero() || p >= 0 {
                return Ok(Vec::new());
            }
            let c = self.basis(p).coords(d)?;
            Ok(c.into_iter()
                .enumerate()
                .filter(|(_, x)| !x.is_zero())
                .map(|(k, x)| (offset[&p] + k, x))
                .collect())
        };
        let elts: Vec<Derivation> = elems
            .iter()
            .map(|(p, k, _)| self.basis(*p).element(*k))
            .collect();
        let mut diff = Vec::new();
        for e in &elts {
            diff.push(embed(&self.d(e)?)?);
        }
        let mut br = Vec::new();
        for a in 0..elts.len() {
            for b in a..elts.len() {
                let c = elts[a].commutator(&elts[b])?;
                let v = embed(&c)?;
                if !v.is_empty() {
                    br.push(((a, b), v));
                }
            }
        }
        Ok(Dgla::new(space, diff, br)?)
    }
}

fn differential_matrix(
    m: &Derivation,
    from: &DerBasis,
    to: &DerBasis,
) -> Result<RationalMatrix, CeError> {
    let mut mat = RationalMatrix::zeros(to.len(), from.len());
    for k in 0..from.len() {
        let e = from.element(k);
        let m = m.clone().with_constant_terms_allowed(e.constant_term_allowed());
        let img = m.commutator(&e)?;
        let c = to.coords(&img)?;
        for (r, x) in c.into_iter().enumerate() {
            if !x.is_zero() {
                mat.set(r, k, x);
            }
        }
    }
    Ok(mat)
}

/// Gerstenhaber bracket: the commutator of derivations, i.e. the dgla
/// bracket of `ΣC_CE`.
pub fn gerstenhaber_bracket(a: &Derivation, b: &Derivation) -> Result<Derivation, CeError> {
    a.commutator(b).map_err(|e| match e {
        SymalgError::AlgebraMismatch => CeError::ComplexMismatch,
        other => other.into(),
    })
}

/// One row of a Whitehead table.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteheadRow {
    pub der_degree: i64,
    pub ce_degree: i64,
    pub dim: usize,
    pub safe: bool,
    pub representatives: Vec<Derivation>,
}

/// Bracket of two classes, as coordinates of a class in the target degree,
/// or `None` when the target degree is outside the window.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassBracket {
    pub left: (i64, usize),
    pub right: (i64, usize),
    pub value: Option<Vec<Q>>,
}

/// Cohomology per degree of a CE window, with brackets of representatives.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteheadTable {
    pub truncated: bool,
    pub weight_cap: u32,
    pub rows: Vec<WhiteheadRow>,
    pub brackets: Vec<ClassBracket>,
}

impl WhiteheadTable {
    pub fn row(&self, p: i64) -> Option<&WhiteheadRow> {
        self.rows.iter().find(|r| r.der_degree == p)
    }

    pub fn dims(&self) -> Vec<(i64, usize)> {
        self.rows.iter().map(|r| (r.der_degree, r.dim)).collect()
    }

    pub fn unsafe_degrees(&self) -> Vec<i64> {
        self.rows.iter().filter(|r| !r.safe).map(|r| r.der_degree).collect()
    }
}

/// Cohomology table of a CE complex with the brackets of representatives.
pub fn ce_cohomology(c: &CEComplex) -> Result<WhiteheadTable, CeError> {
    let (lo, hi) = c.window();
    let mut rows = Vec::new();
    let mut groups = BTreeMap::new();
    for p in lo..=hi {
        let h = c.cohomology(p)?;
        let reps = h
            .representatives
            .iter()
            .map(|v| c.to_derivation(p, v))
            .collect();
        rows.push(WhiteheadRow {
            der_degree: p,
            ce_degree: CEComplex::ce_degree(p),
            dim: h.dim,
            safe: !h.truncation_suspect,
            representatives: reps,
        });
        groups.insert(p, h);
    }
    let mut brackets = Vec::new();
    for (ia, a) in rows.iter().enumerate() {
        for b in &rows[ia..] {
            for (i, x) in a.representatives.iter().enumerate() {
                for (j, y) in b.representatives.iter().enumerate() {
                    if a.der_degree == b.der_degree && j < i {
                        continue;
                    }
                    let target = a.der_degree + b.der_degree;
                    let value = match groups.get(&target) {
                        Some(h) => {
                            let z = gerstenhaber_bracket(x, y)?;
                            let v = c.coords(&z)?;
                            Some(h.class_of(&v).expect("bracket of cocycles is a cocycle"))
                        }
                        None => None,
                    };
                    brackets.push(ClassBracket {
                        left: (a.der_degree, i),
                        right: (b.der_degree, j),
                        value,
                    });
                }
            }
        }
    }
    Ok(WhiteheadTable {
        truncated: c.truncated(),
        weight_cap: c.weight_cap(),
        rows,
        brackets,
    })
}

/// The classifying-space model `ΣC_CE(V,V)⟨n⟩` of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct BautModel {
    pub n: i64,
    /// Full windowed table.
    pub table: WhiteheadTable,
    /// Cohomology of the connected cover, per derivation degree.
    pub cover_dims: Vec<(i64, usize)>,
    /// Basis names of the cover, when it was built as a finite dgla.
    pub cover_basis: Option<Vec<String>>,
    /// Action of each derivation-degree-0 class on each cover class:
    /// `(h1_index, (degree, class_index), coordinates of the bracket class)`.
    pub action: Vec<(usize, (i64, usize), Vec<Q>)>,
}

/// Tabulates `ΣC_CE(V,V)⟨n⟩` and the adjoint action of `H` in derivation
/// degree 0 on it. The cover keeps derivation degrees `≤ −n`, with the
/// cocycles in degree `−n`.
pub fn baut_model(c: &CEComplex, n: i64) -> Result<BautModel, CeError> {
    let table = ce_cohomology(c)?;
    let (lo, hi) = c.window();
    let mut cover_dims: Vec<(i64, usize)> = table
        .rows
        .iter()
        .filter(|r| r.der_degree <= -n)
        .map(|r| (r.der_degree, r.dim))
        .collect();
    let mut cover_basis = None;
    if let Ok(neg) = c.negative_part() {
        let v = neg.to_linfty(2);
        let cover = linfty::connected_cover(&v, n)?;
        let tc = linfty::tangent_cohomology(&cover);
        cover_dims = tc
            .into_iter()
            .filter(|&(k, _)| k >= lo && k <= -n)
            .collect();
        cover_basis = Some(cover.space().names());
    }
    let mut action = Vec::new();
    if lo <= 0 && 0 <= hi {
        let h1 = table.row(0).expect("degree 0 in window");
        for (e_idx, e) in h1.representatives.iter().enumerate() {
            for r in table.rows.iter().filter(|r| r.der_degree <= -n) {
                let h = c.cohomology(r.der_degree)?;
                for (k, x) in r.representatives.iter().enumerate() {
                    let z = gerstenhaber_bracket(e, x)?;
                    let cls = h
                        .class_of(&c.coords(&z)?)
                        .expect("bracket of cocycles is a cocycle");
                    action.push((e_idx, (r.der_degree, k), cls));
                }
            }
        }
    }
    Ok(BautModel {
        n,
        table,
        cover_dims,
        cover_basis,
        action,
    })
}
