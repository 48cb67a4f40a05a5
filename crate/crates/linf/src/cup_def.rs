//! Deformation bases, the cup bracket on CE cochains, deformation sets over
//! nilpotent bases, square-zero lifting and exponentials of derivations.
//!
//! Two dglas carry the computations here.
//!
//! * [`TensorDgla`] is `ŜΣ⁻¹V* ⊗ U` for an L∞ algebra `V` and a dgla `U`,
//!   with `d(p⊗u) = m(p)⊗u + (−1)^{|p|} p⊗du` and
//!   `[p⊗u, q⊗w] = (−1)^{|u||q|} pq⊗[u,w]`. Twisting it by the identity
//!   element `Σ y_α⊗e_α` of `V = U` gives the CE complex of `V` graded by CE
//!   degree, with the cup bracket.
//! * [`BaseDgla`] is `A ⊗ Der(ŜΣ⁻¹I*)` for a nilpotent base `A`, with
//!   `d(a⊗D) = d_A a⊗D + (−1)^{|a|} a⊗[m,D]` and
//!   `[a⊗D, b⊗E] = (−1)^{|D||b|} ab⊗[D,E]`. Its Maurer–Cartan elements of
//!   degree 1 are deformations of `I` over `A`.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use num::{One, Zero};

use crate::ce::{der_degree_complete, CEComplex, CeError};
use crate::exact_linalg::{rank_kernel, unit, CochainWindow, CohomologyGroup, EchelonBasis, LinalgError, RationalMatrix};
use crate::graded_core::{BasisElement, Grading, GradedSpace};
use crate::linfty::{Dgla, LInftyStructure, LinftyError, SparseVec};
use crate::symalg::{der_basis, weight, DerBasis, Derivation, FreeCommAlgebra, Mono, Poly, SymalgError};
use crate::{frac, q, Q};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CupError {
    #[error("base algebra: {0}")]
    InvalidBase(String),
    #[error("not a Maurer–Cartan element: {0}")]
    NotMaurerCartan(String),
    #[error("the closed cup formula needs a Lie algebra in degree 0 with zero differential")]
    AritySupport,
    #[error("weight cap may truncate degrees {degrees:?}")]
    UnsafeWindow { degrees: Vec<i64> },
    #[error("element of degree {found} where degree {expected} is needed")]
    WrongDegree { expected: i64, found: i64 },
    #[error(transparent)]
    Symalg(#[from] SymalgError),
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

/// `d` moved onto `alg`, which has the same generators; terms above the cap
/// of `alg` are dropped.
fn onto(alg: &Arc<FreeCommAlgebra>, d: &Derivation) -> Derivation {
    Derivation::new(alg, d.values().to_vec(), d.degree(), d.constant_term_allowed()).expect("same generators")
}

pub(crate) fn factorial(n: usize) -> Q {
    (1..=n as i64).fold(Q::one(), |acc, k| acc * q(k))
}

/// Finite-dimensional graded-commutative algebra without unit whose
/// products vanish beyond some length, optionally with a differential.
#[derive(Debug, Clone, PartialEq)]
pub struct NilpotentBase {
    space: GradedSpace,
    mult: Mult,
    /// Column `j` is `d a_j`.
    d: Vec<SparseVec>,
    order: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Mult {
    Table(HashMap<(usize, usize), SparseVec>),
    /// Monomials of positive weight in a truncated free algebra; products
    /// are computed on demand.
    Free {
        alg: Arc<FreeCommAlgebra>,
        monos: Vec<Mono>,
        index: HashMap<Mono, usize>,
    },
}

/// Positive-weight monomials of a truncated free algebra, by degree.
pub fn positive_monomials(alg: &FreeCommAlgebra) -> Result<Vec<Mono>, CupError> {
    Ok(alg
        .monomials_by_degree()?
        .values()
        .flatten()
        .filter(|m| weight(m) > 0)
        .cloned()
        .collect())
}

impl NilpotentBase {
    /// `products` lists `a·b` for some pairs; the rest follows from graded
    /// commutativity. `differential[a]` is `d a`.
    pub fn new(
        space: GradedSpace,
        products: Vec<((usize, usize), SparseVec)>,
        differential: Vec<SparseVec>,
    ) -> Result<Self, CupError> {
        let space = space.in_mode(Grading::Cohomological);
        let n = space.dim();
        let bad = |s: String| Err(CupError::InvalidBase(s));
        let mut mult: HashMap<(usize, usize), SparseVec> = HashMap::new();
        for ((a, b), out) in products {
            if a >= n || b >= n || out.iter().any(|(g, _)| *g >= n) {
                return bad("product index out of range".into());
            }
            let mut v = vec![Q::zero(); n];
            for (g, c) in out {
                if !c.is_zero() && space.cdeg(g) != space.cdeg(a) + space.cdeg(b) {
                    return bad(format!("{}·{} has wrong degree", space.name(a), space.name(b)));
                }
                v[g] += c;
            }
            let s = sign(odd(space.cdeg(a) * space.cdeg(b)));
            let w: Vec<Q> = v.iter().map(|x| x * &s).collect();
            for ((x, y), val) in [((a, b), v), ((b, a), w)] {
                let sparse: SparseVec = val.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).collect();
                if let Some(prev) = mult.get(&(x, y)) {
                    if *prev != sparse {
                        return bad(format!("{}·{} contradicts commutativity", space.name(x), space.name(y)));
                    }
                }
                if !sparse.is_empty() {
                    mult.insert((x, y), sparse);
                }
            }
        }
        if differential.len() != n {
            return bad(format!("differential has {} columns for {n} basis elements", differential.len()));
        }
        let mut d = Vec::with_capacity(n);
        for (a, col) in differential.into_iter().enumerate() {
            let mut v = vec![Q::zero(); n];
            for (g, c) in col {
                if g >= n {
                    return bad("differential index out of range".into());
                }
                if !c.is_zero() && space.cdeg(g) != space.cdeg(a) + 1 {
                    return bad(format!("d({}) has wrong degree", space.name(a)));
                }
                v[g] += c;
            }
            d.push(v.into_iter().enumerate().filter(|(_, c)| !c.is_zero()).collect());
        }
        let mut base = NilpotentBase {
            space,
            mult: Mult::Table(mult),
            d,
            order: 0,
        };
        base.validate()?;
        base.order = base.compute_order()?;
        Ok(base)
    }

    /// Zero multiplication and zero differential.
    pub fn infinitesimal(space: GradedSpace) -> Self {
        let n = space.dim();
        NilpotentBase {
            space: space.in_mode(Grading::Cohomological),
            mult: Mult::Table(HashMap::new()),
            d: vec![vec![]; n],
            order: 2,
        }
    }

    /// Maximal ideal `tQ[t]/t^{k+1}` with `t` in degree 0; basis `t, …, t^k`.
    pub fn truncated_polynomial(k: usize) -> Self {
        let names: Vec<String> = (1..=k)
            .map(|j| if j == 1 { "t".to_string() } else { format!("t^{j}") })
            .collect();
        let space = GradedSpace::new(
            names.iter().map(|n| BasisElement { name: n.clone(), degree: 0 }).collect(),
            Grading::Cohomological,
        )
        .expect("distinct names");
        let mut products = Vec::new();
        for i in 1..=k {
            for j in i..=k {
                if i + j <= k {
                    products.push(((i - 1, j - 1), vec![(i + j - 1, q(1))]));
                }
            }
        }
        NilpotentBase::new(space, products, vec![vec![]; k]).expect("valid truncated polynomial ring")
    }

    /// Positive-weight part of a truncated free algebra, with `m` as
    /// differential. Basis: [`positive_monomials`], named like them.
    pub fn from_free_algebra(alg: &Arc<FreeCommAlgebra>, m: &Derivation) -> Result<Self, CupError> {
        let monos = positive_monomials(alg)?;
        let index: HashMap<Mono, usize> = monos.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect();
        let space = GradedSpace::new(
            monos
                .iter()
                .map(|mo| BasisElement {
                    name: alg.fmt_mono(mo),
                    degree: alg.mono_degree(mo),
                })
                .collect(),
            Grading::Cohomological,
        )
        .map_err(|e| CupError::InvalidBase(e.to_string()))?;
        let d = monos
            .iter()
            .map(|a| {
                m.apply_mono(a)
                    .terms()
                    .filter_map(|(mo, c)| index.get(mo).map(|&i| (i, c.clone())))
                    .collect()
            })
            .collect();
        Ok(NilpotentBase {
            space,
            mult: Mult::Free {
                alg: Arc::clone(alg),
                monos,
                index,
            },
            d,
            order: alg.weight_cap() as usize + 1,
        })
    }

    pub fn space(&self) -> &GradedSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn degree(&self, i: usize) -> i64 {
        self.space.cdeg(i)
    }

    /// Smallest `N` such that all `N`-fold products vanish.
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_infinitesimal(&self) -> bool {
        self.order <= 2
    }

    /// The monomial behind basis element `i` of a free-algebra base.
    pub fn monomial(&self, i: usize) -> Option<&Mono> {
        match &self.mult {
            Mult::Free { monos, .. } => monos.get(i),
            Mult::Table(_) => None,
        }
    }

    /// Basis index of a monomial of a free-algebra base.
    pub fn monomial_index(&self, m: &Mono) -> Option<usize> {
        match &self.mult {
            Mult::Free { index, .. } => index.get(m).copied(),
            Mult::Table(_) => None,
        }
    }

    /// Sparse column `d a_j`.
    pub fn differential_column(&self, j: usize) -> &[(usize, Q)] {
        &self.d[j]
    }

    pub fn differential_matrix(&self) -> RationalMatrix {
        let n = self.dim();
        let mut d = RationalMatrix::zeros(n, n);
        for (j, col) in self.d.iter().enumerate() {
            for (i, c) in col {
                d.set(*i, j, c.clone());
            }
        }
        d
    }

    pub fn has_differential(&self) -> bool {
        self.d.iter().any(|c| !c.is_empty())
    }

    /// Structure constants of `a_i · a_j`, sparse.
    pub fn product_sparse(&self, i: usize, j: usize) -> SparseVec {
        match &self.mult {
            Mult::Table(t) => t.get(&(i, j)).cloned().unwrap_or_default(),
            Mult::Free { alg, monos, index } => {
                let (a, b) = (&monos[i], &monos[j]);
                if weight(a) + weight(b) > alg.weight_cap() {
                    return vec![];
                }
                match alg.mul_mono(a, b) {
                    Some((mo, neg)) => vec![(index[&mo], sign(neg))],
                    None => vec![],
                }
            }
        }
    }

    /// Structure constants of `a_i · a_j`.
    pub fn product(&self, i: usize, j: usize) -> Vec<Q> {
        let mut v = vec![Q::zero(); self.dim()];
        for (g, c) in self.product_sparse(i, j) {
            v[g] = c;
        }
        v
    }

    pub fn mul(&self, u: &[Q], v: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.dim()];
        let nz = |w: &[Q]| -> Vec<usize> { (0..w.len()).filter(|&i| !w[i].is_zero()).collect() };
        let (su, sv) = (nz(u), nz(v));
        for &i in &su {
            for &j in &sv {
                let c = &u[i] * &v[j];
                for (g, z) in self.product_sparse(i, j) {
                    out[g] += &c * z;
                }
            }
        }
        out
    }

    pub fn differential(&self, u: &[Q]) -> Vec<Q> {
        let mut out = vec![Q::zero(); self.dim()];
        for (j, x) in u.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (i, c) in &self.d[j] {
                out[*i] += x * c;
            }
        }
        out
    }

    /// `A/span(killed)`; the span must be a dg ideal.
    pub fn quotient(&self, killed: &[usize]) -> Result<NilpotentBase, CupError> {
        let n = self.dim();
        let kill: Vec<bool> = (0..n).map(|i| killed.contains(&i)).collect();
        let keep: Vec<usize> = (0..n).filter(|&i| !kill[i]).collect();
        let new_index: HashMap<usize, usize> = keep.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        for &k in killed {
            let leaks = (0..n).any(|j| self.product_sparse(k, j).iter().any(|(g, _)| !kill[*g]))
                || self.d[k].iter().any(|(g, _)| !kill[*g]);
            if leaks {
                return Err(CupError::InvalidBase(format!(
                    "span of {} is not an ideal",
                    killed.iter().map(|&i| self.space.name(i)).collect::<Vec<_>>().join(",")
                )));
            }
        }
        let space = GradedSpace::new(
            keep.iter().map(|&i| self.space.basis()[i].clone()).collect(),
            Grading::Cohomological,
        )
        .map_err(|e| CupError::InvalidBase(e.to_string()))?;
        let mut mult = HashMap::new();
        for &i in &keep {
            for &j in &keep {
                let p: SparseVec = self
                    .product_sparse(i, j)
                    .into_iter()
                    .filter(|(g, _)| !kill[*g])
                    .map(|(g, c)| (new_index[&g], c))
                    .collect();
                if !p.is_empty() {
                    mult.insert((new_index[&i], new_index[&j]), p);
                }
            }
        }
        let d = keep
            .iter()
            .map(|&j| self.d[j].iter().filter(|(g, _)| !kill[*g]).map(|(g, c)| (new_index[g], c.clone())).collect())
            .collect();
        let mut out = NilpotentBase {
            space,
            mult: Mult::Table(mult),
            d,
            order: 0,
        };
        out.order = out.compute_order()?;
        Ok(out)
    }

    /// Level of each basis element in the power filtration `A ⊃ A² ⊃ …`:
    /// the largest `j` with `a_i ∈ A^j`. Errors unless every `A^j` is spanned
    /// by basis elements.
    pub fn power_levels(&self) -> Result<Vec<usize>, CupError> {
        let n = self.dim();
        let mut levels = vec![1usize; n];
        let mut power: Vec<Vec<Q>> = (0..n).map(|i| unit(n, i)).collect();
        for j in 2..=self.order.max(2) {
            let mut next = EchelonBasis::new(n);
            for v in &power {
                for i in 0..n {
                    next.insert(&self.mul(v, &unit(n, i)));
                }
            }
            let support: Vec<usize> = (0..n).filter(|&i| next.vectors().iter().any(|v| !v[i].is_zero())).collect();
            if support.len() != next.len() || !support.iter().all(|&i| next.contains(&unit(n, i))) {
                return Err(CupError::InvalidBase(format!("A^{j} is not spanned by basis elements")));
            }
            for &i in &support {
                levels[i] = j;
            }
            power = next.vectors().to_vec();
        }
        Ok(levels)
    }

    fn validate(&self) -> Result<(), CupError> {
        let n = self.dim();
        let name = |i: usize| self.space.name(i).to_string();
        for a in 0..n {
            let ua = unit(n, a);
            if self.differential(&self.differential(&ua)).iter().any(|x| !x.is_zero()) {
                return Err(CupError::InvalidBase(format!("d² ≠ 0 on {}", name(a))));
            }
            for b in 0..n {
                let ub = unit(n, b);
                let ab = self.mul(&ua, &ub);
                let s = sign(odd(self.degree(a)));
                let lhs = self.differential(&ab);
                let r1 = self.mul(&self.differential(&ua), &ub);
                let r2 = self.mul(&ua, &self.differential(&ub));
                let rhs: Vec<Q> = r1.iter().zip(&r2).map(|(x, y)| x + &s * y).collect();
                if lhs != rhs {
                    return Err(CupError::InvalidBase(format!("Leibniz fails on ({}, {})", name(a), name(b))));
                }
                for c in 0..n {
                    let uc = unit(n, c);
                    if self.mul(&ab, &uc) != self.mul(&ua, &self.mul(&ub, &uc)) {
                        return Err(CupError::InvalidBase(format!(
                            "associativity fails on ({}, {}, {})",
                            name(a),
                            name(b),
                            name(c)
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn compute_order(&self) -> Result<usize, CupError> {
        let n = self.dim();
        // Spanning set of A^k, the span of k-fold products.
        let mut power: Vec<Vec<Q>> = (0..n).map(|i| unit(n, i)).collect();
        for k in 1..=n + 1 {
            if power.iter().all(|v| v.iter().all(Zero::is_zero)) {
                return Ok(k.max(2));
            }
            let mut next = EchelonBasis::new(n);
            for v in &power {
                for i in 0..n {
                    next.insert(&self.mul(v, &unit(n, i)));
                }
            }
            power = next.vectors().to_vec();
        }
        Err(CupError::InvalidBase("multiplication is not nilpotent".into()))
    }
}

// ---------------------------------------------------------------------------
// ŜΣ⁻¹V* ⊗ U

/// Element `Σ_α p_α ⊗ u_α`, one polynomial per basis vector of `U`.
pub type TensorElement = Vec<Poly>;

/// The dgla `ŜΣ⁻¹V* ⊗ U`, optionally twisted by a Maurer–Cartan element.
#[derive(Debug, Clone)]
pub struct TensorDgla {
    v: LInftyStructure,
    u: Dgla,
    twist: Option<TensorElement>,
    truncated: bool,
}

impl TensorDgla {
    /// Untwisted tensor dgla. With `truncated`, constants `1⊗u` are left out
    /// of cohomology windows.
    pub fn new(v: &LInftyStructure, u: &Dgla, truncated: bool) -> Self {
        TensorDgla {
            v: v.clone(),
            u: u.clone().in_mode(Grading::Cohomological),
            twist: None,
            truncated,
        }
    }

    pub fn algebra(&self) -> &Arc<FreeCommAlgebra> {
        self.v.algebra()
    }

    pub fn u(&self) -> &Dgla {
        &self.u
    }

    pub fn twist(&self) -> Option<&TensorElement> {
        self.twist.as_ref()
    }

    pub fn zero(&self) -> TensorElement {
        vec![Poly::zero(); self.u.dim()]
    }

    /// Degree of a homogeneous element; `None` for zero.
    pub fn degree_of(&self, x: &TensorElement) -> Option<i64> {
        let alg = self.algebra();
        x.iter().enumerate().find_map(|(a, p)| {
            p.terms().next().map(|(m, _)| alg.mono_degree(m) + self.u.space().cdeg(a))
        })
    }

    /// `Σ y_α ⊗ e_α` for `U = V` as a dgla.
    pub fn identity_element(&self) -> TensorElement {
        let alg = self.algebra();
        (0..self.u.dim()).map(|a| alg.gen(a)).collect()
    }

    fn untwisted_d(&self, x: &TensorElement) -> TensorElement {
        let alg = self.algebra();
        let n = self.u.dim();
        let mut out = self.zero();
        for (a, p) in x.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            out[a] = out[a].add(&self.v.m().apply(p));
            let du = self.u.differential(&unit(n, a));
            for (g, c) in du.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for (m, x) in p.terms() {
                    let s = sign(odd(alg.mono_degree(m)));
                    out[g].add_term(m.clone(), x * c * s);
                }
            }
        }
        out
    }

    pub fn bracket(&self, x: &TensorElement, y: &TensorElement) -> TensorElement {
        let alg = self.algebra();
        let sp = self.u.space();
        let mut out = self.zero();
        for (a, p) in x.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (b, r) in y.iter().enumerate() {
                if r.is_zero() {
                    continue;
                }
                let br = self.u.bracket_basis(a, b);
                if br.iter().all(Zero::is_zero) {
                    continue;
                }
                let mut signed = Poly::zero();
                for (m, c) in r.terms() {
                    signed.add_term(m.clone(), c * sign(odd(sp.cdeg(a) * alg.mono_degree(m))));
                }
                let prod = alg.mul(p, &signed);
                for (g, c) in br.iter().enumerate() {
                    if !c.is_zero() {
                        out[g].add_scaled(&prod, c);
                    }
                }
            }
        }
        out
    }

    /// `d + [f,−]` when twisted by `f`.
    pub fn d(&self, x: &TensorElement) -> TensorElement {
        let mut out = self.untwisted_d(x);
        if let Some(f) = &self.twist {
            for (o, b) in out.iter_mut().zip(self.bracket(f, x)) {
                *o = o.add(&b);
            }
        }
        out
    }

    /// `d f + ½[f,f]` for the untwisted differential.
    pub fn mc_residual(&self, f: &TensorElement) -> TensorElement {
        let d = self.untwisted_d(f);
        let b = self.bracket(f, f);
        d.iter().zip(&b).map(|(x, y)| x.add(&y.scale(&frac(1, 2)))).collect()
    }

    /// Twists by `f` after checking the Maurer–Cartan equation.
    pub fn twisted(&self, f: &TensorElement) -> Result<TensorDgla, CupError> {
        if let Some(deg) = self.degree_of(f) {
            if deg != 1 {
                return Err(CupError::WrongDegree { expected: 1, found: deg });
            }
        }
        let r = self.mc_residual(f);
        if r.iter().any(|p| !p.is_zero()) {
            let alg = self.algebra();
            let shown: Vec<String> = r
                .iter()
                .enumerate()
                .filter(|(_, p)| !p.is_zero())
                .map(|(a, p)| format!("({})⊗{}", alg.fmt_poly(p), self.u.space().name(a)))
                .collect();
            return Err(CupError::NotMaurerCartan(shown.join(" + ")));
        }
        let mut t = self.clone();
        t.twist = Some(f.clone());
        Ok(t)
    }

    /// Basis of degree `t`: pairs `(α, monomial)`.
    pub fn basis(&self, t: i64) -> Result<Vec<(usize, Mono)>, CupError> {
        let alg = self.algebra();
        let mut out = Vec::new();
        for a in 0..self.u.dim() {
            let deg = t - self.u.space().cdeg(a);
            if !self.truncated && deg == 0 {
                out.push((a, alg.unit_mono()));
            }
            for m in alg.monomials_in_degree(deg)? {
                out.push((a, m));
            }
        }
        Ok(out)
    }

    pub fn is_complete(&self, t: i64) -> bool {
        let alg = self.algebra();
        (0..self.u.dim()).all(|a| !alg.has_monomials_above_cap(t - self.u.space().cdeg(a)))
    }

    pub fn element(&self, basis: &[(usize, Mono)], v: &[Q]) -> TensorElement {
        let mut x = self.zero();
        for ((a, m), c) in basis.iter().zip(v) {
            x[*a].add_term(m.clone(), c.clone());
        }
        x
    }

    pub fn coords(&self, basis: &[(usize, Mono)], x: &TensorElement) -> Vec<Q> {
        basis.iter().map(|(a, m)| x[*a].coeff(m)).collect()
    }

    /// Cohomology window over degrees `lo..=hi` (with one padding degree on
    /// each side).
    pub fn window(&self, lo: i64, hi: i64) -> Result<TensorWindow, CupError> {
        let mut bases = BTreeMap::new();
        for t in lo - 1..=hi + 1 {
            bases.insert(t, self.basis(t)?);
        }
        let labels = bases
            .values()
            .map(|b| {
                b.iter()
                    .map(|(a, m)| {
                        let alg = self.algebra();
                        let mono = if weight(m) == 0 { "1".to_string() } else { alg.fmt_mono(m) };
                        format!("{mono}⊗{}", self.u.space().name(*a))
                    })
                    .collect()
            })
            .collect();
        let mut diffs = Vec::new();
        for t in lo - 1..=hi {
            let (from, to) = (&bases[&t], &bases[&(t + 1)]);
            let mut m = RationalMatrix::zeros(to.len(), from.len());
            for k in 0..from.len() {
                let x = self.element(from, &unit(from.len(), k));
                let dx = self.d(&x);
                for (r, c) in self.coords(to, &dx).into_iter().enumerate() {
                    m.set(r, k, c);
                }
            }
            diffs.push(m);
        }
        let complete = (lo - 1..=hi + 1).map(|t| (t, self.is_complete(t))).collect();
        Ok(TensorWindow {
            lo,
            hi,
            window: CochainWindow::new(lo - 1, labels, diffs)?,
            bases,
            complete,
        })
    }
}

/// Windowed cohomology of a [`TensorDgla`].
#[derive(Debug, Clone)]
pub struct TensorWindow {
    pub lo: i64,
    pub hi: i64,
    pub window: CochainWindow,
    pub bases: BTreeMap<i64, Vec<(usize, Mono)>>,
    complete: BTreeMap<i64, bool>,
}

impl TensorWindow {
    pub fn is_safe(&self, t: i64) -> bool {
        (t - 1..=t + 1).all(|s| self.complete.get(&s).copied().unwrap_or(false))
    }

    pub fn cohomology(&self, t: i64) -> Result<CohomologyGroup, CupError> {
        let mut h = self.window.cohomology(t, false)?;
        h.truncation_suspect = !self.is_safe(t);
        Ok(h)
    }
}

/// The CE complex of `V` with coefficients in `U`: `(ŜΣ⁻¹V*⊗U)^f`.
pub fn coefficient_complex(
    v: &LInftyStructure,
    u: &Dgla,
    f: &TensorElement,
    truncated: bool,
) -> Result<TensorDgla, CupError> {
    TensorDgla::new(v, u, truncated).twisted(f)
}

/// `C_CE(V,V)` as `(ŜΣ⁻¹V*⊗V)^id` with the cup bracket; `V` must have
/// brackets of arity at most 2.
pub fn cup_complex(v: &LInftyStructure, truncated: bool) -> Result<TensorDgla, CupError> {
    let u = v.to_dgla()?;
    let t = TensorDgla::new(v, &u, truncated);
    let id = t.identity_element();
    t.twisted(&id)
}

/// A cochain `ΛⁿV → V` on a Lie algebra, stored on increasing index tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct Cochain {
    pub arity: usize,
    pub dim: usize,
    pub values: BTreeMap<Vec<usize>, Vec<Q>>,
}

impl Cochain {
    pub fn zero(arity: usize, dim: usize) -> Self {
        Cochain {
            arity,
            dim,
            values: BTreeMap::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut c = Cochain::zero(1, dim);
        for i in 0..dim {
            c.values.insert(vec![i], unit(dim, i));
        }
        c
    }

    /// The bracket as a 2-cochain.
    pub fn bracket_of(g: &Dgla) -> Self {
        let n = g.dim();
        let mut c = Cochain::zero(2, n);
        for i in 0..n {
            for j in i + 1..n {
                c.set(vec![i, j], g.bracket_basis(i, j));
            }
        }
        c
    }

    pub fn set(&mut self, tuple: Vec<usize>, value: Vec<Q>) {
        if value.iter().all(Zero::is_zero) {
            self.values.remove(&tuple);
        } else {
            self.values.insert(tuple, value);
        }
    }

    /// Value on an arbitrary tuple of basis indices.
    pub fn eval(&self, tuple: &[usize]) -> Vec<Q> {
        let mut t = tuple.to_vec();
        let mut neg = false;
        for i in 0..t.len() {
            for j in 0..t.len() - 1 - i {
                if t[j] > t[j + 1] {
                    t.swap(j, j + 1);
                    neg = !neg;
                }
            }
        }
        if t.windows(2).any(|w| w[0] == w[1]) {
            return vec![Q::zero(); self.dim];
        }
        let s = sign(neg);
        self.values
            .get(&t)
            .map_or_else(|| vec![Q::zero(); self.dim], |v| v.iter().map(|x| x * &s).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_ungraded_lie(g: &Dgla) -> Result<(), CupError> {
    let sp = g.space();
    if (0..g.dim()).any(|i| sp.cdeg(i) != 0) || !g.differential_matrix().is_zero() {
        return Err(CupError::AritySupport);
    }
    Ok(())
}

fn increasing_tuples(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u64..(1u64 << n))
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

fn permutations(k: usize) -> Vec<(Vec<usize>, bool)> {
    if k == 0 {
        return vec![(vec![], false)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut r = p.clone();
            r.insert(pos, k - 1);
            // Inserting the largest element at `pos` adds `len − pos` inversions.
            out.push((r, s ^ ((p.len() - pos) % 2 == 1)));
        }
    }
    out
}

/// `[g∪h](v₁,…,v_{n+m}) = 1/(n+m)! Σ_σ (−1)^σ [g(v_σ…), h(v_σ…)]`.
pub fn cup_bracket(g: &Dgla, a: &Cochain, b: &Cochain) -> Result<Cochain, CupError> {
    check_ungraded_lie(g)?;
    let n = g.dim();
    let k = a.arity + b.arity;
    let mut out = Cochain::zero(k, n);
    let norm = factorial(k).recip();
    let perms = permutations(k);
    for tuple in increasing_tuples(n, k) {
        let mut acc = vec![Q::zero(); n];
        for (p, s) in &perms {
            let t: Vec<usize> = p.iter().map(|&i| tuple[i]).collect();
            let x = a.eval(&t[..a.arity]);
            let y = b.eval(&t[a.arity..]);
            let br = g.bracket(&x, &y);
            let c = sign(*s);
            for (o, z) in acc.iter_mut().zip(br) {
                *o += z * &c;
            }
        }
        out.set(tuple, acc.into_iter().map(|x| x * &norm).collect());
    }
    Ok(out)
}

/// Chevalley–Eilenberg differential with adjoint coefficients:
/// `δc(v₀,…,vₙ) = Σ_i (−1)^i [v_i, c(…v̂_i…)] + Σ_{i<j} (−1)^{i+j} c([v_i,v_j], …)`.
pub fn classical_differential(g: &Dgla, c: &Cochain) -> Result<Cochain, CupError> {
    check_ungraded_lie(g)?;
    let n = g.dim();
    let k = c.arity + 1;
    let mut out = Cochain::zero(k, n);
    for tuple in increasing_tuples(n, k) {
        let mut acc = vec![Q::zero(); n];
        for i in 0..k {
            let rest: Vec<usize> = tuple.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, &x)| x).collect();
            let br = g.bracket(&unit(n, tuple[i]), &c.eval(&rest));
            let s = sign(i % 2 == 1);
            for (o, z) in acc.iter_mut().zip(br) {
                *o += z * &s;
            }
            for j in i + 1..k {
                let vij = g.bracket_basis(tuple[i], tuple[j]);
                let others: Vec<usize> = tuple
                    .iter()
                    .enumerate()
                    .filter(|(l, _)| *l != i && *l != j)
                    .map(|(_, &x)| x)
                    .collect();
                let s = sign((i + j) % 2 == 1);
                for (w, cw) in vij.iter().enumerate() {
                    if cw.is_zero() {
                        continue;
                    }
                    let mut t = vec![w];
                    t.extend_from_slice(&others);
                    for (o, z) in acc.iter_mut().zip(c.eval(&t)) {
                        *o += z * cw * &s;
                    }
                }
            }
        }
        out.set(tuple, acc);
    }
    Ok(out)
}

/// `n!·Σ_{I increasing} y_I ⊗ c(e_I)`: intertwines the cup bracket with the
/// bracket of `(ŜΣ⁻¹V*⊗V)^id`.
pub fn cochain_to_tensor(alg: &FreeCommAlgebra, c: &Cochain) -> TensorElement {
    let n = c.dim;
    let f = factorial(c.arity);
    let mut x = vec![Poly::zero(); n];
    for (tuple, val) in &c.values {
        let mut m = alg.unit_mono();
        for &i in tuple {
            m[i] += 1;
        }
        for (g, v) in val.iter().enumerate() {
            x[g].add_term(m.clone(), v * &f);
        }
    }
    x
}

/// Inverse of [`cochain_to_tensor`] on elements of weight `arity`.
pub fn tensor_to_cochain(x: &TensorElement, arity: usize) -> Cochain {
    let n = x.len();
    let f = factorial(arity).recip();
    let mut c = Cochain::zero(arity, n);
    let mut vals: BTreeMap<Vec<usize>, Vec<Q>> = BTreeMap::new();
    for (g, p) in x.iter().enumerate() {
        for (m, v) in p.terms() {
            if weight(m) as usize != arity {
                continue;
            }
            let tuple: Vec<usize> = (0..m.len()).filter(|&i| m[i] > 0).collect();
            vals.entry(tuple).or_insert_with(|| vec![Q::zero(); n])[g] += v * &f;
        }
    }
    for (t, v) in vals {
        c.set(t, v);
    }
    c
}

/// Bracket of two cohomology classes, reduced to class coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct CupEntry {
    pub left: (i64, usize),
    pub right: (i64, usize),
    /// `None` when the target degree is outside the window.
    pub value: Option<Vec<Q>>,
    pub safe: bool,
}

/// Induced cup brackets on the cohomology of `C_CE(V,V)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CupTable {
    pub truncated: bool,
    pub dims: Vec<(i64, usize)>,
    pub entries: Vec<CupEntry>,
}

impl CupTable {
    /// Every computed bracket vanishes in cohomology.
    pub fn all_zero(&self) -> bool {
        self.entries
            .iter()
            .all(|e| e.value.as_ref().map_or(true, |v| v.iter().all(Zero::is_zero)))
    }

    pub fn unsafe_degrees(&self) -> Vec<i64> {
        let mut d: Vec<i64> = self.entries.iter().filter(|e| !e.safe).map(|e| e.left.0).collect();
        d.dedup();
        d
    }
}

/// Cup brackets of cohomology representatives of `C_CE(V,V)` (or `𝐶̄`) in CE
/// degrees `lo..=hi`, reduced modulo coboundaries.
pub fn induced_cohomology_bracket(
    v: &LInftyStructure,
    lo: i64,
    hi: i64,
    truncated: bool,
) -> Result<CupTable, CupError> {
    let t = cup_complex(v, truncated)?;
    let w = t.window(lo, hi)?;
    let bad: Vec<i64> = (lo..=hi).filter(|&d| !w.is_safe(d)).collect();
    if !bad.is_empty() {
        return Err(CupError::UnsafeWindow { degrees: bad });
    }
    let mut groups = BTreeMap::new();
    for d in lo..=hi {
        groups.insert(d, w.cohomology(d)?);
    }
    let mut entries = Vec::new();
    for (&p, hp) in &groups {
        for (&r, hr) in &groups {
            for (i, a) in hp.representatives.iter().enumerate() {
                for (j, b) in hr.representatives.iter().enumerate() {
                    if (p, i) > (r, j) {
                        continue;
                    }
                    let x = t.element(&w.bases[&p], a);
                    let y = t.element(&w.bases[&r], b);
                    let br = t.bracket(&x, &y);
                    let value = groups.get(&(p + r)).map(|h| {
                        let c = t.coords(&w.bases[&(p + r)], &br);
                        h.class_of(&c).expect("bracket of cocycles is a cocycle")
                    });
                    entries.push(CupEntry {
                        left: (p, i),
                        right: (r, j),
                        value,
                        safe: true,
                    });
                }
            }
        }
    }
    Ok(CupTable {
        truncated,
        dims: groups.iter().map(|(&d, h)| (d, h.dim)).collect(),
        entries,
    })
}

// ---------------------------------------------------------------------------
// A ⊗ Der(ŜΣ⁻¹I*)

/// Element `Σ_i a_i ⊗ X_i` of total degree `degree`; `parts[i]` has
/// derivation degree `degree − |a_i|`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseElement {
    pub degree: i64,
    pub parts: Vec<Derivation>,
}

impl BaseElement {
    pub fn is_zero(&self) -> bool {
        self.parts.iter().all(Derivation::is_zero)
    }
}

/// The dgla `A ⊗ Der(ŜΣ⁻¹I*)`; with `truncated`, derivations have no
/// constant term.
#[derive(Debug, Clone)]
pub struct BaseDgla {
    base: NilpotentBase,
    v: LInftyStructure,
    truncated: bool,
}

impl BaseDgla {
    pub fn new(base: &NilpotentBase, v: &LInftyStructure, truncated: bool) -> Self {
        BaseDgla {
            base: base.clone(),
            v: v.clone(),
            truncated,
        }
    }

    pub fn base(&self) -> &NilpotentBase {
        &self.base
    }

    pub fn fiber(&self) -> &LInftyStructure {
        &self.v
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    pub fn algebra(&self) -> &Arc<FreeCommAlgebra> {
        self.v.algebra()
    }

    pub fn zero(&self, t: i64) -> BaseElement {
        let alg = self.algebra();
        BaseElement {
            degree: t,
            parts: (0..self.base.dim())
                .map(|i| Derivation::zero(alg, t - self.base.degree(i), !self.truncated))
                .collect(),
        }
    }

    /// Element with a single part `a_i ⊗ x`.
    pub fn single(&self, i: usize, x: &Derivation) -> BaseElement {
        let mut e = self.zero(x.degree() + self.base.degree(i));
        e.parts[i] = x.clone().with_constant_terms_allowed(!self.truncated);
        e
    }

    pub fn combine(&self, x: &BaseElement, y: &BaseElement, c: &Q) -> Result<BaseElement, CupError> {
        if !x.is_zero() && !y.is_zero() && x.degree != y.degree {
            return Err(CupError::WrongDegree {
                expected: x.degree,
                found: y.degree,
            });
        }
        let degree = if x.is_zero() { y.degree } else { x.degree };
        let parts = x
            .parts
            .iter()
            .zip(&y.parts)
            .map(|(a, b)| a.combine(b, c))
            .collect::<Result<Vec<_>, _>>()?;
        let mut out = self.zero(degree);
        for (o, p) in out.parts.iter_mut().zip(parts) {
            if !p.is_zero() {
                *o = p;
            }
        }
        Ok(out)
    }

    pub fn add(&self, x: &BaseElement, y: &BaseElement) -> Result<BaseElement, CupError> {
        self.combine(x, y, &Q::one())
    }

    pub fn scale(&self, x: &BaseElement, c: &Q) -> BaseElement {
        BaseElement {
            degree: x.degree,
            parts: x.parts.iter().map(|p| p.scale(c)).collect(),
        }
    }

    fn m(&self) -> Derivation {
        self.v.m().clone().with_constant_terms_allowed(!self.truncated)
    }

    pub fn d(&self, x: &BaseElement) -> Result<BaseElement, CupError> {
        let mut out = self.zero(x.degree + 1);
        let m = self.m();
        for (j, xj) in x.parts.iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            for (i, c) in self.base.differential_column(j) {
                out.parts[*i] = out.parts[*i].combine(xj, c)?;
            }
            let mx = m.commutator(xj)?;
            out.parts[j] = out.parts[j].combine(&mx, &sign(odd(self.base.degree(j))))?;
        }
        Ok(out)
    }

    pub fn bracket(&self, x: &BaseElement, y: &BaseElement) -> Result<BaseElement, CupError> {
        let mut out = self.zero(x.degree + y.degree);
        for (j, xj) in x.parts.iter().enumerate() {
            if xj.is_zero() {
                continue;
            }
            for (k, yk) in y.parts.iter().enumerate() {
                if yk.is_zero() {
                    continue;
                }
                let prod = self.base.product_sparse(j, k);
                if prod.is_empty() {
                    continue;
                }
                let br = xj.commutator(yk)?;
                let s = sign(odd(xj.degree() * self.base.degree(k)));
                for (i, c) in prod {
                    out.parts[i] = out.parts[i].combine(&br, &(c * &s))?;
                }
            }
        }
        Ok(out)
    }

    /// `dx + ½[x,x]`.
    pub fn mc_residual(&self, x: &BaseElement) -> Result<BaseElement, CupError> {
        let d = self.d(x)?;
        let b = self.bracket(x, x)?;
        self.combine(&d, &b, &frac(1, 2))
    }

    pub fn is_mc(&self, x: &BaseElement) -> Result<bool, CupError> {
        Ok(self.mc_residual(x)?.is_zero())
    }

    /// Gauge action of a degree-0 element:
    /// `e^η·x = x + Σ_{n≥1} ad_η^{n−1}([η,x] − dη)/n!`.
    pub fn gauge(&self, eta: &BaseElement, x: &BaseElement) -> Result<BaseElement, CupError> {
        if !eta.is_zero() && eta.degree != 0 {
            return Err(CupError::WrongDegree {
                expected: 0,
                found: eta.degree,
            });
        }
        let mut term = self.combine(&self.bracket(eta, x)?, &self.d(eta)?, &-Q::one())?;
        let mut out = x.clone();
        let mut n = 1usize;
        while !term.is_zero() {
            out = self.combine(&out, &term, &factorial(n).recip())?;
            term = self.bracket(eta, &term)?;
            n += 1;
            if n > self.base.order() + 1 + self.v.weight_cap() as usize {
                return Err(CupError::InvalidBase("ad of the gauge element is not nilpotent".into()));
            }
        }
        Ok(out)
    }

    /// Basis of total degree `t`: for each `a_i`, a derivation basis.
    pub fn basis(&self, t: i64) -> Result<Vec<DerBasis>, CupError> {
        let alg = self.algebra();
        (0..self.base.dim())
            .map(|i| Ok(der_basis(alg, t - self.base.degree(i), !self.truncated)?))
            .collect()
    }

    pub fn to_vector(&self, basis: &[DerBasis], x: &BaseElement) -> Result<Vec<Q>, CupError> {
        let mut v = Vec::new();
        for (b, p) in basis.iter().zip(&x.parts) {
            if p.is_zero() {
                v.extend(vec![Q::zero(); b.len()]);
            } else {
                v.extend(b.coords(p)?);
            }
        }
        Ok(v)
    }

    pub fn from_vector(&self, t: i64, basis: &[DerBasis], v: &[Q]) -> BaseElement {
        let mut out = self.zero(t);
        let mut off = 0;
        for (i, b) in basis.iter().enumerate() {
            let part = b.from_coords(&v[off..off + b.len()]);
            if !part.is_zero() {
                out.parts[i] = part;
            }
            off += b.len();
        }
        out
    }

    pub fn is_complete(&self, t: i64) -> bool {
        let alg = self.algebra();
        (0..self.base.dim()).all(|i| der_degree_complete(alg, t - self.base.degree(i)))
    }

    /// Cochain window in total degrees `lo..=hi`, padded by one degree.
    pub fn window(&self, lo: i64, hi: i64) -> Result<(CochainWindow, BTreeMap<i64, Vec<DerBasis>>), CupError> {
        let mut bases = BTreeMap::new();
        for t in lo - 1..=hi + 1 {
            bases.insert(t, self.basis(t)?);
        }
        let labels = bases
            .values()
            .map(|bs| {
                bs.iter()
                    .enumerate()
                    .flat_map(|(i, b)| {
                        let a = self.base.space().name(i).to_string();
                        b.labels().into_iter().map(move |l| format!("{a}⊗{l}"))
                    })
                    .collect()
            })
            .collect();
        let mut diffs = Vec::new();
        for t in lo - 1..=hi {
            let (from, to) = (&bases[&t], &bases[&(t + 1)]);
            let nf: usize = from.iter().map(DerBasis::len).sum();
            let nt: usize = to.iter().map(DerBasis::len).sum();
            let mut m = RationalMatrix::zeros(nt, nf);
            for k in 0..nf {
                let x = self.from_vector(t, from, &unit(nf, k));
                let dx = self.d(&x)?;
                for (r, c) in self.to_vector(to, &dx)?.into_iter().enumerate() {
                    m.set(r, k, c);
                }
            }
            diffs.push(m);
        }
        Ok((CochainWindow::new(lo - 1, labels, diffs)?, bases))
    }
}

/// Outcome of lifting a deformation along a small extension.
#[derive(Debug, Clone, PartialEq)]
pub enum LiftOutcome {
    Lifted(BaseElement),
    /// Nonzero obstruction classes, one per kernel basis element, in
    /// coordinates of the cohomology in derivation degree `2 − |k|`.
    Obstructed { classes: Vec<(String, Vec<Q>)> },
}

impl LiftOutcome {
    pub fn is_lifted(&self) -> bool {
        matches!(self, LiftOutcome::Lifted(_))
    }
}

/// Lifts a deformation of `V` over `B = A/K` to one over `A`, where `K` is
/// spanned by the basis elements `kernel` and `K·A = 0`. `x_b` is given over
/// [`NilpotentBase::quotient`] of `A` by `kernel`. Both bases must have zero
/// differential.
pub fn lift_square_zero(
    v: &LInftyStructure,
    a: &NilpotentBase,
    kernel: &[usize],
    x_b: &BaseElement,
) -> Result<LiftOutcome, CupError> {
    if a.has_differential() {
        return Err(CupError::InvalidBase("lifting needs zero differential".into()));
    }
    let n = a.dim();
    for &k in kernel {
        if (0..n).any(|j| !a.product_sparse(k, j).is_empty()) {
            return Err(CupError::InvalidBase(format!("{}·A ≠ 0", a.space().name(k))));
        }
    }
    let b = a.quotient(kernel)?;
    let keep: Vec<usize> = (0..n).filter(|i| !kernel.contains(i)).collect();
    let db = BaseDgla::new(&b, v, true);
    if !db.is_mc(x_b)? {
        return Err(CupError::NotMaurerCartan("deformation over the quotient".into()));
    }
    let da = BaseDgla::new(a, v, true);
    let mut x = da.zero(x_b.degree);
    for (k, &i) in keep.iter().enumerate() {
        if !x_b.parts[k].is_zero() {
            x.parts[i] = x_b.parts[k].clone();
        }
    }
    let r = da.mc_residual(&x)?;
    let cap = v.weight_cap();
    let mut classes = Vec::new();
    for &k in kernel {
        let rk = &r.parts[k];
        if rk.is_zero() {
            continue;
        }
        let p = 1 - a.degree(k);
        let ce = CEComplex::new(v, cap, p, p + 1, true)?;
        let target = ce.coords(rk)?;
        let s = sign(odd(a.degree(k)));
        let rhs: Vec<Q> = target.iter().map(|c| -c * &s).collect();
        match ce.differential(p).and_then(|m| m.solve(&rhs)) {
            Some(y) => {
                let yk = onto(v.algebra(), &ce.to_derivation(p, &y));
                x.parts[k] = x.parts[k].add(&yk)?;
            }
            None => {
                let h = ce.cohomology(p + 1)?;
                let cls = h.class_of(&target).unwrap_or_default();
                classes.push((a.space().name(k).to_string(), cls));
            }
        }
    }
    if !classes.is_empty() {
        return Ok(LiftOutcome::Obstructed { classes });
    }
    debug_assert!(da.is_mc(&x)?);
    Ok(LiftOutcome::Lifted(x))
}

/// Deformations of `I` over a nilpotent base.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformationSet {
    pub base_order: usize,
    /// Dimension of first-order deformations modulo gauge.
    pub dimension: usize,
    /// Representatives of first-order deformations over `A/A²`.
    pub tangent: Vec<BaseElement>,
    pub safe: bool,
    /// For a non-infinitesimal base: per tangent vector, the outcome of
    /// lifting through `A/A³, A/A⁴, …, A`.
    pub lifts: Vec<Vec<LiftOutcome>>,
}

/// `Def_I(A)`: over an infinitesimal base, `H¹(A ⊗ 𝐶̄)`; otherwise the
/// first-order part together with order-by-order lifting of each basis
/// tangent vector. The basis of a non-infinitesimal `A` must be adapted to
/// its power filtration.
pub fn deformation_set(v: &LInftyStructure, a: &NilpotentBase) -> Result<DeformationSet, CupError> {
    let levels = if a.is_infinitesimal() { vec![1; a.dim()] } else { a.power_levels()? };
    let deep: Vec<usize> = (0..a.dim()).filter(|&i| levels[i] >= 2).collect();
    let first = a.quotient(&deep)?;
    let dd = BaseDgla::new(&first, v, true);
    let (win, bases) = dd.window(0, 2)?;
    let h = win.cohomology(1, false)?;
    let safe = (0..=2).all(|t| dd.is_complete(t));
    let tangent: Vec<BaseElement> = h
        .representatives
        .iter()
        .map(|r| dd.from_vector(1, &bases[&1], r))
        .collect();
    let mut lifts = Vec::new();
    if !a.is_infinitesimal() {
        let top = levels.iter().copied().max().unwrap_or(1);
        for t in &tangent {
            let mut outcomes = Vec::new();
            let mut cur = t.clone();
            for j in 2..=top {
                // A/A^{j+1} → A/A^j with kernel A^j/A^{j+1}.
                let beyond: Vec<usize> = (0..a.dim()).filter(|&i| levels[i] > j).collect();
                let target = a.quotient(&beyond)?;
                let kept: Vec<usize> = (0..a.dim()).filter(|&i| levels[i] <= j).collect();
                let kernel: Vec<usize> = kept
                    .iter()
                    .enumerate()
                    .filter(|(_, &i)| levels[i] == j)
                    .map(|(k, _)| k)
                    .collect();
                let out = lift_square_zero(v, &target, &kernel, &cur)?;
                let next = match &out {
                    LiftOutcome::Lifted(x) => Some(x.clone()),
                    LiftOutcome::Obstructed { .. } => None,
                };
                outcomes.push(out);
                match next {
                    Some(x) => cur = x,
                    None => break,
                }
            }
            lifts.push(outcomes);
        }
    }
    Ok(DeformationSet {
        base_order: a.order(),
        dimension: h.dim,
        tangent,
        safe,
        lifts,
    })
}

/// `Σ_{j≤k} ξ^j(p)/j!`, coefficientwise in `t`: entry `j` is `ξ^j(p)/j!`.
pub fn exp_coefficients(xi: &Derivation, p: &Poly, k: usize) -> Vec<Poly> {
    let mut out = vec![p.clone()];
    let mut cur = p.clone();
    for j in 1..=k {
        cur = xi.apply(&cur);
        out.push(cur.scale(&factorial(j).recip()));
    }
    out
}

/// Result of checking `e^{tξ}` modulo `t^{k+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpLiftReport {
    pub xi: String,
    pub order: usize,
    /// `e^{tξ}` is multiplicative modulo `t^{k+1}`.
    pub multiplicative: bool,
    /// `e^{tξ}` commutes with `m` modulo `t^{k+1}`.
    pub commutes: bool,
}

impl ExpLiftReport {
    pub fn ok(&self) -> bool {
        self.multiplicative && self.commutes
    }
}

/// Infinitesimal automorphisms of `V`: degree-0 derivations without constant
/// term commuting with `m`.
pub fn infinitesimal_automorphisms(v: &LInftyStructure) -> Result<Vec<Derivation>, CupError> {
    let ce = CEComplex::new(v, v.weight_cap(), 0, 0, true)?;
    ce.require_safe()?;
    let d = ce.differential(0).expect("degree 0 is in the window");
    let (_, ker) = rank_kernel(d);
    Ok(ker.iter().map(|k| onto(v.algebra(), &ce.to_derivation(0, k))).collect())
}

/// For every infinitesimal automorphism `ξ` and `k ≤ max_order`, checks that
/// `e^{tξ}` modulo `t^{k+1}` is an automorphism of `ŜΣ⁻¹V*[t]/t^{k+1}`
/// commuting with `m`; it reduces to the order `k − 1` map by construction.
pub fn exp_lifts(v: &LInftyStructure, max_order: usize) -> Result<Vec<ExpLiftReport>, CupError> {
    let alg = v.algebra();
    let monos: Vec<Mono> = alg.monomials_by_degree()?.values().flatten().cloned().collect();
    let mut out = Vec::new();
    for xi in infinitesimal_automorphisms(v)? {
        for k in 1..=max_order {
            let e = |p: &Poly| exp_coefficients(&xi, p, k);
            let mut multiplicative = true;
            'pairs: for a in &monos {
                for b in &monos {
                    if weight(a) + weight(b) > alg.weight_cap() {
                        continue;
                    }
                    let pa = Poly::monomial(a.clone(), Q::one());
                    let pb = Poly::monomial(b.clone(), Q::one());
                    let (ea, eb, eab) = (e(&pa), e(&pb), e(&alg.mul(&pa, &pb)));
                    for l in 0..=k {
                        let mut s = Poly::zero();
                        for i in 0..=l {
                            s = s.add(&alg.mul(&ea[i], &eb[l - i]));
                        }
                        if s != eab[l] {
                            multiplicative = false;
                            break 'pairs;
                        }
                    }
                }
            }
            let commutes = (0..alg.n_gens()).all(|g| {
                let y = alg.gen(g);
                let lhs: Vec<Poly> = e(&y).iter().map(|p| v.m().apply(p)).collect();
                lhs == e(&v.m().apply(&y))
            });
            out.push(ExpLiftReport {
                xi: xi.display(),
                order: k,
                multiplicative,
                commutes,
            });
        }
    }
    Ok(out)
}
