//! Model files and the reports behind the `linf` binary.
//!
//! A model file is JSON with keys `kind`, `grading`, `basis`, `ops`, `caps`
//! and an optional `differential`. Coefficients are strings `"p/q"` or
//! integers, so exactness survives the file boundary. The meaning of an op
//! `{arity, inputs, output}` depends on the kind:
//!
//! - `lie`: `[a, b] = Σ coeff·name` (arity 2); `differential` ops have
//!   arity 1 and give `d a`.
//! - `linfty`: `l_n(inputs) = Σ coeff·name`, read as a symmetric bracket on
//!   the suspension; arity-1 ops and `differential` give `l₁`.
//! - `cdga`: the basis lists generators of a free graded-commutative
//!   algebra, and an op means `d(name) ∋ coeff·Π inputs`. Weight-truncated,
//!   the same file describes a nilpotent base such as `Q[t]/t³`.
//! - `presented-lie`: the basis lists generators, and an op adds
//!   `coeff·[i₁,[i₂,…]]` to the relation called `name`.

use std::fmt::Write as _;
use std::str::FromStr;

use num::Zero;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::ce::{baut_model, ce_cohomology, CEComplex};
use crate::cup_def::{deformation_set, induced_cohomology_bracket, LiftOutcome, NilpotentBase};
use crate::exact_linalg::unit;
use crate::extensions::{
    classical_components, hom_ladder, is_ideal, mc_from_extension, split_off, universal_extension, ExtError,
};
use crate::graded_core::{BasisElement, Grading, GradedSpace};
use crate::lie_models::{presented_dgla, HarrisonComplex, HarrisonKind, LieAlphabet, LieCaps, PresentedLie, TensorPoly};
use crate::linfty::{fmt_combination, BracketOp, Dgla, LInftyStructure, LinftyError, SparseVec};
use crate::symalg::{build_algebra, Derivation, Poly};
use crate::Q;

const DEFAULT_WEIGHT_CAP: u32 = 3;
const DEFAULT_WINDOW: (i64, i64) = (-2, 2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Lie,
    Linfty,
    Cdga,
    PresentedLie,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradingName {
    Homological,
    Cohomological,
}

impl From<GradingName> for Grading {
    fn from(g: GradingName) -> Self {
        match g {
            GradingName::Homological => Grading::Homological,
            GradingName::Cohomological => Grading::Cohomological,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisDecl {
    pub name: String,
    pub degree: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub name: String,
    pub coeff: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Op {
    pub arity: usize,
    pub inputs: Vec<String>,
    pub output: Vec<Term>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[i64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub kind: Kind,
    pub grading: GradingName,
    pub basis: Vec<BasisDecl>,
    #[serde(default)]
    pub ops: Vec<Op>,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub differential: Option<Vec<Op>>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Command(String),
}

impl CliError {
    /// Process exit code for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Validation(_) => 3,
            CliError::Io(_) => 4,
            CliError::Command(_) => 5,
        }
    }
}

fn cmd_err(e: impl std::fmt::Display) -> CliError {
    CliError::Command(e.to_string())
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

/// Parses `"p/q"` or `"n"`; decimals are rejected.
pub fn parse_coeff(s: &str) -> Result<Q, CliError> {
    let t = s.trim();
    let bad = || CliError::Validation(format!("coefficient {s:?} is not an integer or fraction p/q"));
    if t.is_empty() || t.contains('.') {
        return Err(bad());
    }
    if t.contains('/') {
        let q = Q::from_str(t).map_err(|_| bad())?;
        Ok(q)
    } else {
        let n = num::BigInt::from_str(t).map_err(|_| bad())?;
        Ok(Q::from_integer(n))
    }
}

fn fmt_q(c: &Q) -> String {
    c.to_string()
}

/// A validated model.
#[derive(Debug, Clone)]
pub enum Structure {
    Lie(Dgla),
    Linfty(LInftyStructure),
    /// Free graded-commutative algebra with a square-zero differential.
    Cdga(Derivation),
    Presented(PresentedLie),
}

#[derive(Debug, Clone)]
pub struct Model {
    pub file: ModelFile,
    pub structure: Structure,
}

impl Model {
    pub fn weight_cap(&self) -> u32 {
        self.file.caps.weight.unwrap_or(DEFAULT_WEIGHT_CAP)
    }

    pub fn window(&self) -> (i64, i64) {
        self.file.caps.window.map_or(DEFAULT_WINDOW, |[a, b]| (a, b))
    }

    /// The model as an L∞ algebra at weight cap `cap`.
    pub fn linfty(&self, cap: u32) -> Result<LInftyStructure, CliError> {
        Ok(match &self.structure {
            Structure::Lie(g) => g.to_linfty(cap),
            Structure::Linfty(v) => v.with_weight_cap(cap),
            Structure::Cdga(m) => {
                let alg = build_algebra(m.algebra().generators(), cap);
                let m = Derivation::new(&alg, m.values().to_vec(), 1, false).map_err(invalid)?;
                LInftyStructure::from_representing(m).map_err(invalid)?
            }
            Structure::Presented(p) => p.to_dgla().map_err(cmd_err)?.to_linfty(cap),
        })
    }

    /// The model as a nilpotent base: the positive-weight part of a
    /// weight-truncated cdga.
    pub fn base(&self) -> Result<NilpotentBase, CliError> {
        match &self.structure {
            Structure::Cdga(m) => NilpotentBase::from_free_algebra(m.algebra(), m).map_err(invalid),
            _ => Err(CliError::Command("a base must be a cdga model".into())),
        }
    }
}

fn space_of(file: &ModelFile) -> Result<GradedSpace, CliError> {
    let basis = file
        .basis
        .iter()
        .map(|b| BasisElement {
            name: b.name.clone(),
            degree: b.degree,
        })
        .collect();
    GradedSpace::new(basis, file.grading.into()).map_err(invalid)
}

fn index(space: &GradedSpace, name: &str) -> Result<usize, CliError> {
    space
        .index_of(name)
        .map_err(|_| CliError::Validation(format!("unknown basis element {name:?}")))
}

fn sparse(space: &GradedSpace, out: &[Term]) -> Result<SparseVec, CliError> {
    out.iter()
        .map(|t| Ok((index(space, &t.name)?, parse_coeff(&t.coeff)?)))
        .collect()
}

fn check_arity(op: &Op) -> Result<(), CliError> {
    if op.arity != op.inputs.len() {
        return Err(CliError::Validation(format!(
            "op on ({}) declares arity {}",
            op.inputs.join(", "),
            op.arity
        )));
    }
    Ok(())
}

/// First failing generalized Jacobi identity, by output and inputs.
fn linfty_failure(m: &Derivation) -> Option<String> {
    let alg = m.algebra();
    let sq = m.commutator(m).ok()?;
    sq.values().iter().enumerate().find_map(|(g, p)| {
        p.terms().next().map(|(mono, _)| {
            let inputs: Vec<&str> = mono
                .iter()
                .enumerate()
                .flat_map(|(i, &e)| std::iter::repeat(alg.generators().name(i)).take(e as usize))
                .collect();
            format!(
                "generalized Jacobi fails on inputs ({}) in component {}",
                inputs.join(", "),
                alg.generators().name(g)
            )
        })
    })
}

fn build_lie(file: &ModelFile) -> Result<Dgla, CliError> {
    let space = space_of(file)?;
    let mut brackets = Vec::new();
    for op in &file.ops {
        check_arity(op)?;
        if op.arity != 2 {
            return Err(CliError::Validation(format!("lie ops must have arity 2, found {}", op.arity)));
        }
        let (a, b) = (index(&space, &op.inputs[0])?, index(&space, &op.inputs[1])?);
        brackets.push(((a, b), sparse(&space, &op.output)?));
    }
    let mut diff = vec![vec![]; space.dim()];
    for op in file.differential.iter().flatten() {
        check_arity(op)?;
        if op.arity != 1 {
            return Err(CliError::Validation("differential ops must have arity 1".into()));
        }
        let a = index(&space, &op.inputs[0])?;
        diff[a].extend(sparse(&space, &op.output)?);
    }
    let g = Dgla::new(space, diff, brackets).map_err(invalid)?;
    g.validate().map_err(invalid)?;
    Ok(g)
}

fn build_linfty(file: &ModelFile, cap: u32) -> Result<LInftyStructure, CliError> {
    let space = space_of(file)?;
    let mut ops = Vec::new();
    for op in file.ops.iter().chain(file.differential.iter().flatten()) {
        check_arity(op)?;
        if op.arity == 0 {
            return Err(CliError::Validation("curved structures (arity 0) are not supported".into()));
        }
        let inputs = op.inputs.iter().map(|n| index(&space, n)).collect::<Result<_, _>>()?;
        ops.push(BracketOp {
            inputs,
            output: sparse(&space, &op.output)?,
        });
    }
    let v = LInftyStructure::from_brackets(space.clone(), &ops, cap).map_err(invalid)?;
    match LInftyStructure::new(space, v.m().clone()) {
        Ok(v) => Ok(v),
        Err(LinftyError::NotLInfty(w)) => Err(CliError::Validation(
            linfty_failure(v.m()).unwrap_or_else(|| format!("[m,m] ≠ 0 in weight {w}")),
        )),
        Err(e) => Err(invalid(e)),
    }
}

fn build_cdga(file: &ModelFile, cap: u32) -> Result<Derivation, CliError> {
    if file.differential.is_some() {
        return Err(CliError::Validation("a cdga gives its differential through ops".into()));
    }
    let gens = space_of(file)?.in_mode(Grading::Cohomological);
    let alg = build_algebra(&gens, cap.max(file.ops.iter().map(|o| o.arity as u32).max().unwrap_or(1)));
    let mut values = vec![Poly::zero(); gens.dim()];
    for op in &file.ops {
        check_arity(op)?;
        if op.arity == 0 {
            return Err(CliError::Validation("a differential has no constant terms".into()));
        }
        let mut p = alg.one();
        for n in &op.inputs {
            p = alg.mul(&p, &alg.gen(index(&gens, n)?));
        }
        for t in &op.output {
            let g = index(&gens, &t.name)?;
            values[g].add_scaled(&p, &parse_coeff(&t.coeff)?);
        }
    }
    let m = Derivation::new(&alg, values, 1, false).map_err(invalid)?;
    let failing = (0..gens.dim()).find(|&g| !m.apply(m.value(g)).is_zero());
    if let Some(g) = failing {
        return Err(CliError::Validation(format!("d² ≠ 0 on generator {}", alg.generators().name(g))));
    }
    Ok(m)
}

fn build_presented(file: &ModelFile, degree_cap: Option<i64>) -> Result<PresentedLie, CliError> {
    if file.differential.is_some() {
        return Err(CliError::Validation("presented Lie algebras carry no differential".into()));
    }
    let cap = degree_cap.ok_or_else(|| CliError::Validation("presented-lie needs caps.degree".into()))?;
    let gens = space_of(file)?;
    let alpha = LieAlphabet::new(&gens, LieCaps::degree(cap)).map_err(invalid)?;
    let mut rels: Vec<(String, TensorPoly)> = Vec::new();
    for op in &file.ops {
        check_arity(op)?;
        let idx: Vec<usize> = op.inputs.iter().map(|n| index(&gens, n)).collect::<Result<_, _>>()?;
        let t = alpha.right_normed(&idx);
        for term in &op.output {
            let c = parse_coeff(&term.coeff)?;
            match rels.iter_mut().find(|(n, _)| *n == term.name) {
                Some((_, r)) => r.add_scaled(&t, &c),
                None => rels.push((term.name.clone(), t.scale(&c))),
            }
        }
    }
    let p = presented_dgla(&gens, rels.into_iter().map(|r| r.1).collect(), LieCaps::degree(cap)).map_err(invalid)?;
    p.to_dgla().map_err(invalid)?.validate().map_err(invalid)?;
    Ok(p)
}

/// Parses and validates model text. `weight_cap` and `degree_cap` override
/// the file's caps.
pub fn parse_model(text: &str, weight_cap: Option<u32>, degree_cap: Option<i64>) -> Result<Model, CliError> {
    let mut file: ModelFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if let Some(w) = weight_cap {
        file.caps.weight = Some(w);
    }
    if let Some(d) = degree_cap {
        file.caps.degree = Some(d);
    }
    if file.caps.weight == Some(0) {
        return Err(CliError::Validation("weight cap must be positive".into()));
    }
    let cap = file.caps.weight.unwrap_or(DEFAULT_WEIGHT_CAP);
    let structure = match file.kind {
        Kind::Lie => Structure::Lie(build_lie(&file)?),
        Kind::Linfty => Structure::Linfty(build_linfty(&file, cap)?),
        Kind::Cdga => Structure::Cdga(build_cdga(&file, cap)?),
        Kind::PresentedLie => Structure::Presented(build_presented(&file, file.caps.degree)?),
    };
    Ok(Model { file, structure })
}

pub fn load_model(path: &str, weight_cap: Option<u32>, degree_cap: Option<i64>) -> Result<Model, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{path}: {e}")))?;
    parse_model(&text, weight_cap, degree_cap)
}

fn terms(names: &[String], v: &[Q]) -> Vec<Term> {
    v.iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(i, c)| Term {
            name: names[i].clone(),
            coeff: fmt_q(c),
        })
        .collect()
}

fn basis_decls(space: &GradedSpace) -> Vec<BasisDecl> {
    (0..space.dim())
        .map(|i| BasisDecl {
            name: space.name(i).to_string(),
            degree: space.degree(i),
        })
        .collect()
}

fn grading_name(g: Grading) -> GradingName {
    match g {
        Grading::Homological => GradingName::Homological,
        Grading::Cohomological => GradingName::Cohomological,
    }
}

/// Writes a dgla as a `lie` model.
pub fn lie_to_file(g: &Dgla, caps: Caps) -> ModelFile {
    let space = g.space();
    let names = space.names();
    let ops = g
        .bracket_entries()
        .into_iter()
        .map(|((a, b), v)| Op {
            arity: 2,
            inputs: vec![names[a].clone(), names[b].clone()],
            output: terms(&names, &v),
        })
        .collect();
    let d = g.differential_matrix();
    let diff: Vec<Op> = (0..g.dim())
        .filter_map(|a| {
            let col: Vec<Q> = (0..g.dim()).map(|r| d.get(r, a).clone()).collect();
            col.iter().any(|c| !c.is_zero()).then(|| Op {
                arity: 1,
                inputs: vec![names[a].clone()],
                output: terms(&names, &col),
            })
        })
        .collect();
    ModelFile {
        kind: Kind::Lie,
        grading: grading_name(space.grading()),
        basis: basis_decls(space),
        ops,
        caps,
        differential: (!diff.is_empty()).then_some(diff),
    }
}

/// Writes an L∞ structure as a `linfty` model.
pub fn linfty_to_file(v: &LInftyStructure, caps: Caps) -> ModelFile {
    let space = v.space();
    let names = space.names();
    let ops = v
        .to_brackets()
        .into_iter()
        .map(|op| {
            let mut out = vec![Q::zero(); v.dim()];
            for (g, c) in op.output {
                out[g] += c;
            }
            Op {
                arity: op.inputs.len(),
                inputs: op.inputs.iter().map(|&i| names[i].clone()).collect(),
                output: terms(&names, &out),
            }
        })
        .filter(|op| !op.output.is_empty())
        .collect();
    ModelFile {
        kind: Kind::Linfty,
        grading: grading_name(space.grading()),
        basis: basis_decls(space),
        ops,
        caps: Caps {
            weight: Some(caps.weight.unwrap_or(v.weight_cap())),
            ..caps
        },
        differential: None,
    }
}

/// Writes a differential of a free algebra as a `cdga` model.
pub fn cdga_to_file(m: &Derivation, caps: Caps) -> ModelFile {
    let alg = m.algebra();
    let gens = alg.generators();
    let mut ops = Vec::new();
    for (g, p) in m.values().iter().enumerate() {
        for (mono, c) in p.terms() {
            let inputs: Vec<String> = mono
                .iter()
                .enumerate()
                .flat_map(|(i, &e)| std::iter::repeat(gens.name(i).to_string()).take(e as usize))
                .collect();
            // Products in the listed order may pick up a Koszul sign.
            let mut prod = alg.one();
            for n in &inputs {
                prod = alg.mul(&prod, &alg.gen(gens.index_of(n).expect("own generator")));
            }
            let s = prod.terms().next().map(|(_, s)| s.clone()).expect("nonzero monomial");
            ops.push(Op {
                arity: inputs.len(),
                inputs,
                output: vec![Term {
                    name: gens.name(g).to_string(),
                    coeff: fmt_q(&(c / s)),
                }],
            });
        }
    }
    ModelFile {
        kind: Kind::Cdga,
        grading: GradingName::Cohomological,
        basis: basis_decls(&gens.in_mode(Grading::Cohomological)),
        ops,
        caps: Caps {
            weight: Some(caps.weight.unwrap_or(alg.weight_cap())),
            ..caps
        },
        differential: None,
    }
}

/// A rendered command result.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub json: Value,
    /// False when the command ran but its check failed.
    pub ok: bool,
}

/// Options shared by the commands.
#[derive(Debug, Clone, Default)]
pub struct Options {
    pub window: Option<(i64, i64)>,
    pub weight_cap: Option<u32>,
    pub degree_cap: Option<i64>,
    pub truncated: bool,
    pub base: Option<String>,
    pub ideal: Option<Vec<String>>,
    pub connectivity: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Check,
    Cohomology,
    Baut,
    Harrison,
    Extend,
    UniversalExt,
    Deform,
    CupTable,
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "check" => Command::Check,
            "cohomology" => Command::Cohomology,
            "baut" => Command::Baut,
            "harrison" => Command::Harrison,
            "extend" => Command::Extend,
            "universal-ext" => Command::UniversalExt,
            "deform" => Command::Deform,
            "cup-table" => Command::CupTable,
            other => return Err(CliError::Command(format!("unknown command {other:?}"))),
        })
    }
}

/// Parses `lo..hi`.
pub fn parse_window(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected lo..hi, found {s:?}"))?;
    let lo = a.trim().parse::<i64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<i64>().map_err(|e| e.to_string())?;
    if lo > hi {
        return Err(format!("empty window {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn safe_flag(safe: bool) -> &'static str {
    if safe {
        "safe"
    } else {
        "truncation-suspect"
    }
}

fn qvec_json(v: &[Q]) -> Value {
    Value::Array(v.iter().map(|c| Value::String(fmt_q(c))).collect())
}

fn fmt_vec(v: &[Q]) -> String {
    let parts: Vec<String> = v.iter().map(fmt_q).collect();
    format!("({})", parts.join(", "))
}

fn model_name(path: &str) -> String {
    std::path::Path::new(path)
        .file_stem()
        .map_or_else(|| path.to_string(), |s| s.to_string_lossy().into_owned())
}

/// Runs a command on the model at `path`.
pub fn run(command: Command, path: &str, opts: &Options) -> Result<Report, CliError> {
    let model = load_model(path, opts.weight_cap, opts.degree_cap)?;
    run_model(command, &model_name(path), &model, opts)
}

/// Runs a command on a parsed model.
pub fn run_model(command: Command, name: &str, model: &Model, opts: &Options) -> Result<Report, CliError> {
    match command {
        Command::Check => check(name, model),
        Command::Cohomology => cohomology(name, model, opts),
        Command::Baut => baut(name, model, opts),
        Command::Harrison => harrison(name, model, opts),
        Command::Extend => extend(name, model, opts),
        Command::UniversalExt => universal(name, model),
        Command::Deform => deform(name, model, opts),
        Command::CupTable => cup_table(name, model, opts),
    }
}

fn kind_name(k: Kind) -> &'static str {
    match k {
        Kind::Lie => "lie",
        Kind::Linfty => "linfty",
        Kind::Cdga => "cdga",
        Kind::PresentedLie => "presented-lie",
    }
}

fn check(name: &str, model: &Model) -> Result<Report, CliError> {
    let mut text = String::new();
    let kind = kind_name(model.file.kind);
    let _ = writeln!(text, "model: {name} ({kind}, {} basis elements)", model.file.basis.len());
    let mut extra = json!({});
    if let Structure::Presented(p) = &model.structure {
        let dims = p.dims_by_hdegree();
        let row: Vec<String> = dims.iter().map(|(d, n)| format!("{d}:{n}")).collect();
        let _ = writeln!(text, "quotient dims by homological degree: {}", row.join(" "));
        extra = json!({ "dims_by_hdegree": dims.iter().map(|(d, n)| json!([d, n])).collect::<Vec<_>>(),
                        "finite": p.is_finite() });
    }
    let _ = writeln!(text, "L∞/Jacobi: OK");
    Ok(Report {
        text,
        json: json!({ "command": "check", "model": name, "kind": kind, "valid": true, "details": extra }),
        ok: true,
    })
}

fn window_of(model: &Model, opts: &Options) -> (i64, i64) {
    opts.window.unwrap_or_else(|| model.window())
}

fn cohomology(name: &str, model: &Model, opts: &Options) -> Result<Report, CliError> {
    let v = model.linfty(model.weight_cap())?;
    let (lo, hi) = window_of(model, opts);
    let c = CEComplex::new(&v, v.weight_cap(), lo, hi, opts.truncated).map_err(cmd_err)?;
    let table = ce_cohomology(&c).map_err(cmd_err)?;
    let mut text = String::new();
    let variant = if opts.truncated { "truncated" } else { "full" };
    let _ = writeln!(text, "CE cohomology of {name} ({variant}, weight cap {})", c.weight_cap());
    let _ = writeln!(text, "{:>6} {:>6} {:>5}  {:<19} by arity", "p", "CE", "dim", "status");
    let mut rows = Vec::new();
    for r in &table.rows {
        let by_w = c.cohomology_by_weight(r.der_degree).map_err(cmd_err)?;
        let arity: Vec<String> = by_w.iter().filter(|(_, n)| **n > 0).map(|(w, n)| format!("{w}:{n}")).collect();
        let _ = writeln!(
            text,
            "{:>6} {:>6} {:>5}  {:<19} {}",
            r.der_degree,
            r.ce_degree,
            r.dim,
            safe_flag(r.safe),
            arity.join(" ")
        );
        rows.push(json!({
            "der_degree": r.der_degree, "ce_degree": r.ce_degree, "dim": r.dim, "safe": r.safe,
            "by_arity": by_w.iter().map(|(w, n)| json!([w, n])).collect::<Vec<_>>(),
        }));
    }
    Ok(Report {
        text,
        json: json!({ "command": "cohomology", "model": name, "truncated": opts.truncated,
                      "weight_cap": c.weight_cap(), "rows": rows }),
        ok: true,
    })
}

fn baut(name: &str, model: &Model, opts: &Options) -> Result<Report, CliError> {
    let v = model.linfty(model.weight_cap())?;
    let (lo, hi) = window_of(model, opts);
    let n = opts.connectivity.unwrap_or(1);
    let c = CEComplex::new(&v, v.weight_cap(), lo, hi, opts.truncated).map_err(cmd_err)?;
    let b = baut_model(&c, n).map_err(cmd_err)?;
    let mut text = String::new();
    let _ = writeln!(text, "Baut model of {name}: cover ⟨{n}⟩, weight cap {}", c.weight_cap());
    let _ = writeln!(text, "{:>6} {:>6} {:>5}  status", "p", "CE", "dim");
    let mut rows = Vec::new();
    for r in &b.table.rows {
        let _ = writeln!(text, "{:>6} {:>6} {:>5}  {}", r.der_degree, r.ce_degree, r.dim, safe_flag(r.safe));
        rows.push(json!({ "der_degree": r.der_degree, "ce_degree": r.ce_degree, "dim": r.dim, "safe": r.safe }));
    }
    let cover: Vec<String> = b.cover_dims.iter().map(|(d, k)| format!("{d}:{k}")).collect();
    let _ = writeln!(text, "cover dims: {}", cover.join(" "));
    let mut action = Vec::new();
    for (e, (deg, k), cls) in &b.action {
        let _ = writeln!(text, "action: [E{e}, c({deg},{k})] = {}", fmt_vec(cls));
        action.push(json!({ "h0_class": e, "target": [deg, k], "value": qvec_json(cls),
                            "nontrivial": cls.iter().any(|x| !x.is_zero()) }));
    }
    if b.action.is_empty() {
        let _ = writeln!(text, "action: none");
    }
    Ok(Report {
        text,
        json: json!({ "command": "baut", "model": name, "n": n, "weight_cap": c.weight_cap(), "rows": rows,
                      "cover_dims": b.cover_dims, "cover_basis": b.cover_basis, "action": action }),
        ok: true,
    })
}

fn harrison(name: &str, model: &Model, opts: &Options) -> Result<Report, CliError> {
    let a = model.base()?;
    let (lo, hi) = window_of(model, opts);
    let kind = if opts.truncated { HarrisonKind::Truncated } else { HarrisonKind::Full };
    let h = HarrisonComplex::new(&a, lo, hi, kind, None).map_err(cmd_err)?;
    let mut text = String::new();
    let variant = if opts.truncated { "truncated" } else { "full" };
    let _ = writeln!(text, "Harrison cohomology of {name} ({variant}, {}-dimensional base)", a.dim());
    let _ = writeln!(text, "{:>6} {:>5}  status", "p", "dim");
    let mut rows = Vec::new();
    for (p, d) in h.dims() {
        let safe = h.is_safe(p);
        let _ = writeln!(text, "{p:>6} {d:>5}  {}", safe_flag(safe));
        rows.push(json!({ "der_degree": p, "dim": d, "safe": safe }));
    }
    Ok(Report {
        text,
        json: json!({ "command": "harrison", "model": name, "truncated": opts.truncated, "rows": rows }),
        ok: true,
    })
}

fn extend(name: &str, model: &Model, opts: &Options) -> Result<Report, CliError> {
    let v = model.linfty(model.weight_cap())?;
    let names = opts
        .ideal
        .as_ref()
        .ok_or_else(|| CliError::Command("extend needs --ideal=a,b,…".into()))?;
    let space = v.space().clone();
    let vecs: Vec<Vec<Q>> = names
        .iter()
        .map(|n| Ok(unit(v.dim(), index(&space, n)?)))
        .collect::<Result<_, CliError>>()?;
    let ideal = is_ideal(&v, &vecs).map_err(cmd_err)?;
    let mut text = String::new();
    let _ = writeln!(text, "⟨{}⟩ in {name}: {}", names.join(", "), if ideal { "L∞ ideal" } else { "not an ideal" });
    if !ideal {
        return Ok(Report {
            text,
            json: json!({ "command": "extend", "model": name, "ideal": false }),
            ok: true,
        });
    }
    let total = split_off(&v, &vecs).map_err(cmd_err)?;
    let e = mc_from_extension(&total, vecs.len(), false).map_err(cmd_err)?;
    let base = e.dgla.dgla().base();
    let _ = writeln!(
        text,
        "fiber I: {}; base U: {}",
        e.fiber().space().names().join(", "),
        e.base().space().names().join(", ")
    );
    let mut parts = Vec::new();
    for (a, x) in e.xi.parts.iter().enumerate() {
        if !x.is_zero() {
            let line = format!("{} ⊗ ({})", base.space().name(a), x.display());
            let _ = writeln!(text, "ξ: {line}");
            parts.push(Value::String(line));
        }
    }
    if parts.is_empty() {
        let _ = writeln!(text, "ξ = 0 (direct product)");
    }
    let mut classical = Value::Null;
    if let Ok(cc) = classical_components(&e) {
        let un = e.base().space().names();
        for (k, m) in cc.action.iter().enumerate() {
            let rows: Vec<String> = (0..m.rows())
                .map(|r| fmt_vec(&(0..m.cols()).map(|c| m.get(r, c).clone()).collect::<Vec<_>>()))
                .collect();
            let _ = writeln!(text, "f₁({}) = [{}]", un[k], rows.join(", "));
        }
        for ((a, b), c) in &cc.cocycle {
            let _ = writeln!(text, "f₂({}, {}) = {}", un[*a], un[*b], fmt_combination(&e.fiber().space().names(), c));
        }
        let _ = writeln!(text, "f₁ Lie map: {}; f₂ cocycle: {}", cc.action_is_lie_map, cc.cocycle_is_closed);
        classical = json!({
            "action_is_lie_map": cc.action_is_lie_map,
            "cocycle_is_closed": cc.cocycle_is_closed,
            "cocycle": cc.cocycle.iter().map(|((a, b), c)| json!([un[*a], un[*b], qvec_json(c)])).collect::<Vec<_>>(),
        });
    }
    Ok(Report {
        text,
        json: json!({ "command": "extend", "model": name, "ideal": true, "xi": parts, "classical": classical }),
        ok: true,
    })
}

fn universal(name: &str, model: &Model) -> Result<Report, CliError> {
    let v = model.linfty(model.weight_cap())?;
    let mut text = String::new();
    match universal_extension(&v, model.weight_cap()) {
        Err(ExtError::InfiniteFiber) => {
            let ladder = hom_ladder(&v).map_err(cmd_err)?;
            let _ = writeln!(text, "universal extension of {name}: representing algebra is infinite");
            let row: Vec<String> = ladder.iter().map(|(p, n)| format!("{p}:{n}")).collect();
            let _ = writeln!(text, "Der dims at weight cap {} (truncated): {}", v.weight_cap(), row.join(" "));
            Ok(Report {
                text,
                json: json!({ "command": "universal-ext", "model": name, "finite": false, "ladder": ladder }),
                ok: true,
            })
        }
        Err(e) => Err(cmd_err(e)),
        Ok(u) => {
            let _ = writeln!(text, "universal extension of {name}: total dimension {}", u.extension.total.dim());
            let _ = writeln!(
                text,
                "m₁ on ΣI → I: rank {} ({})",
                u.sigma_block_rank,
                if u.sigma_is_iso { "isomorphism" } else { "not an isomorphism" }
            );
            let _ = writeln!(text, "{:>6} {:>7} {:>9}", "degree", "H(total)", "H(C̄_CE)");
            for ((d, a), (_, b)) in u.total_dims.iter().zip(&u.truncated_dims) {
                let _ = writeln!(text, "{d:>6} {a:>7} {b:>9}");
            }
            let _ = writeln!(text, "inclusion quasi-isomorphism: {}", u.inclusion_is_quasi_iso);
            Ok(Report {
                text,
                json: json!({ "command": "universal-ext", "model": name, "finite": true,
                              "total_dim": u.extension.total.dim(), "sigma_rank": u.sigma_block_rank,
                              "sigma_is_iso": u.sigma_is_iso, "total_dims": u.total_dims,
                              "truncated_dims": u.truncated_dims, "quasi_iso": u.inclusion_is_quasi_iso }),
                ok: u.sigma_is_iso && u.inclusion_is_quasi_iso,
            })
        }
    }
}

/// Named bases: `eps` (dual numbers) and `t<k>` (`Q[t]/t^k`); anything
/// else is read as a cdga model file.
pub fn resolve_base(base_arg: &str) -> Result<NilpotentBase, CliError> {
    if base_arg == "eps" {
        return Ok(NilpotentBase::infinitesimal(GradedSpace::from_pairs(&[("ε", 0)], Grading::Cohomological)));
    }
    if let Some(k) = base_arg.strip_prefix('t').and_then(|k| k.parse::<usize>().ok()) {
        if k < 2 {
            return Err(CliError::Command("t<k> needs k ≥ 2".into()));
        }
        return Ok(NilpotentBase::truncated_polynomial(k - 1));
    }
    load_model(base_arg, None, None)?.base()
}

fn deform(name: &str, model: &Model, opts: &Options) -> Result<Report, CliError> {
    let v = model.linfty(model.weight_cap())?;
    let base_arg = opts.base.as_deref().unwrap_or("eps");
    let a = resolve_base(base_arg)?;
    let def = deformation_set(&v, &a).map_err(cmd_err)?;
    let mut text = String::new();
    let _ = writeln!(text, "deformations of {name} over {base_arg} (order {})", def.base_order);
    let _ = writeln!(text, "Def dimension: {}", def.dimension);
    let _ = writeln!(text, "window: {}", safe_flag(def.safe));
    let base = a.space();
    let mut tangent = Vec::new();
    for (k, t) in def.tangent.iter().enumerate() {
        let parts: Vec<String> = t
            .parts
            .iter()
            .enumerate()
            .filter(|(_, x)| !x.is_zero())
            .map(|(i, x)| format!("{} ⊗ ({})", base.name(i), x.display()))
            .collect();
        let line = parts.join(" + ");
        let _ = writeln!(text, "tangent {k}: {line}");
        tangent.push(Value::String(line));
    }
    let mut lifts = Vec::new();
    for (k, chain) in def.lifts.iter().enumerate() {
        let status: Vec<&str> = chain
            .iter()
            .map(|o| match o {
                LiftOutcome::Lifted(_) => "lifts",
                LiftOutcome::Obstructed { .. } => "obstructed",
            })
            .collect();
        let _ = writeln!(text, "tangent {k} lifting: {}", status.join(", "));
        lifts.push(json!(status));
    }
    let all_lift = def.lifts.iter().all(|c| c.iter().all(LiftOutcome::is_lifted));
    Ok(Report {
        text,
        json: json!({ "command": "deform", "model": name, "base": base_arg, "base_order": def.base_order,
                      "dimension": def.dimension, "safe": def.safe, "tangent": tangent, "lifts": lifts,
                      "all_lift": all_lift }),
        ok: true,
    })
}

fn cup_table(name: &str, model: &Model, opts: &Options) -> Result<Report, CliError> {
    let v = model.linfty(model.weight_cap())?;
    let (lo, hi) = window_of(model, opts);
    let t = induced_cohomology_bracket(&v, lo, hi, opts.truncated).map_err(cmd_err)?;
    let mut text = String::new();
    let _ = writeln!(text, "induced brackets on H(C_CE) of {name}, CE degrees {lo}..{hi}");
    let dims: Vec<String> = t.dims.iter().map(|(d, n)| format!("{d}:{n}")).collect();
    let _ = writeln!(text, "dims: {}", dims.join(" "));
    let mut entries = Vec::new();
    for e in &t.entries {
        let value = e.value.as_ref().map_or_else(|| "outside window".to_string(), |v| fmt_vec(v));
        let _ = writeln!(
            text,
            "[c({},{}), c({},{})] = {value}  {}",
            e.left.0,
            e.left.1,
            e.right.0,
            e.right.1,
            safe_flag(e.safe)
        );
        entries.push(json!({ "left": [e.left.0, e.left.1], "right": [e.right.0, e.right.1],
                             "value": e.value.as_ref().map(|v| qvec_json(v)), "safe": e.safe }));
    }
    let _ = writeln!(text, "all induced brackets vanish: {}", t.all_zero());
    Ok(Report {
        text,
        json: json!({ "command": "cup-table", "model": name, "dims": t.dims, "entries": entries,
                      "all_zero": t.all_zero() }),
        ok: true,
    })
}

/// Whether two models define the same structure.
pub fn same_structure(a: &Model, b: &Model) -> bool {
    match (&a.structure, &b.structure) {
        (Structure::Lie(x), Structure::Lie(y)) => x.clone().in_mode(Grading::Cohomological) == y.clone().in_mode(Grading::Cohomological),
        (Structure::Linfty(x), Structure::Linfty(y)) => x == y,
        (Structure::Cdga(x), Structure::Cdga(y)) => {
            x.algebra().generators().cdegrees() == y.algebra().generators().cdegrees() && x.values() == y.values()
        }
        (Structure::Presented(x), Structure::Presented(y)) => x.dims_by_hdegree() == y.dims_by_hdegree(),
        _ => false,
    }
}

/// Serializes a parsed model back to the schema.
pub fn to_file(model: &Model) -> ModelFile {
    let caps = model.file.caps.clone();
    match &model.structure {
        Structure::Lie(g) => lie_to_file(g, caps),
        Structure::Linfty(v) => linfty_to_file(v, caps),
        Structure::Cdga(m) => cdga_to_file(m, caps),
        Structure::Presented(_) => model.file.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::q;
    use proptest::prelude::*;

    const SL2: &str = r#"{
      "kind": "lie", "grading": "homological",
      "basis": [{"name": "e", "degree": 0}, {"name": "f", "degree": 0}, {"name": "h", "degree": 0}],
      "ops": [
        {"arity": 2, "inputs": ["h", "e"], "output": [{"name": "e", "coeff": "2"}]},
        {"arity": 2, "inputs": ["h", "f"], "output": [{"name": "f", "coeff": "-2"}]},
        {"arity": 2, "inputs": ["e", "f"], "output": [{"name": "h", "coeff": "1"}]}
      ],
      "caps": {"weight": 3, "window": [-1, 2]}
    }"#;

    #[test]
    fn coefficients() {
        assert_eq!(parse_coeff("3").unwrap(), q(3));
        assert_eq!(parse_coeff("-1/2").unwrap(), crate::frac(-1, 2));
        assert_eq!(parse_coeff("4/6").unwrap(), crate::frac(2, 3));
        assert!(parse_coeff("0.5").is_err());
        assert!(parse_coeff("x").is_err());
    }

    #[test]
    fn sl2_checks() {
        let m = parse_model(SL2, None, None).unwrap();
        let r = run_model(Command::Check, "sl2", &m, &Options::default()).unwrap();
        assert!(r.text.contains("L∞/Jacobi: OK"));
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = parse_model("{\n  \"kind\": \"lie\",\n  oops }", None, None).unwrap_err();
        assert!(matches!(e, CliError::Parse { line: 3, .. }));
        assert_eq!(e.exit_code(), 2);
        let e = parse_model(r#"{"kind": "group", "grading": "homological", "basis": []}"#, None, None).unwrap_err();
        assert!(matches!(e, CliError::Parse { .. }));
    }

    #[test]
    fn jacobi_violation_names_the_triple() {
        let bad = r#"{"kind": "lie", "grading": "homological",
          "basis": [{"name": "x", "degree": 0}, {"name": "y", "degree": 0}, {"name": "z", "degree": 0}],
          "ops": [{"arity": 2, "inputs": ["x", "y"], "output": [{"name": "x", "coeff": "1"}]},
                  {"arity": 2, "inputs": ["x", "z"], "output": [{"name": "y", "coeff": "1"}]}]}"#;
        let e = parse_model(bad, None, None).unwrap_err();
        let CliError::Validation(msg) = &e else { panic!("{e:?}") };
        assert!(msg.contains("Jacobi") && msg.contains("x") && msg.contains("z"), "{msg}");
        assert_eq!(e.exit_code(), 3);
    }

    #[test]
    fn linfty_violation_names_inputs() {
        let bad = r#"{"kind": "linfty", "grading": "cohomological",
          "basis": [{"name": "x", "degree": 0}, {"name": "y", "degree": 0}, {"name": "z", "degree": 0}],
          "ops": [{"arity": 2, "inputs": ["x", "y"], "output": [{"name": "x", "coeff": "1"}]},
                  {"arity": 2, "inputs": ["x", "z"], "output": [{"name": "y", "coeff": "1"}]}]}"#;
        let e = parse_model(bad, None, None).unwrap_err();
        let CliError::Validation(msg) = &e else { panic!("{e:?}") };
        assert!(msg.contains("generalized Jacobi fails on inputs"), "{msg}");
    }

    #[test]
    fn empty_basis_is_the_zero_algebra() {
        for kind in ["lie", "linfty", "cdga"] {
            let text = format!(r#"{{"kind": "{kind}", "grading": "cohomological", "basis": []}}"#);
            let m = parse_model(&text, None, None).unwrap();
            assert_eq!(m.linfty(2).unwrap().dim(), 0);
        }
    }

    #[test]
    fn declared_arity_must_match() {
        let bad = r#"{"kind": "lie", "grading": "homological", "basis": [{"name": "x", "degree": 0}],
          "ops": [{"arity": 3, "inputs": ["x", "x"], "output": []}]}"#;
        assert!(matches!(parse_model(bad, None, None), Err(CliError::Validation(_))));
    }

    #[test]
    fn cdga_square_zero_is_checked() {
        // d a = b, d b = a·a with a odd: d²a = a² = 0, d² b = 2a·b ≠ 0.
        let bad = r#"{"kind": "cdga", "grading": "cohomological",
          "basis": [{"name": "a", "degree": 1}, {"name": "b", "degree": 2}],
          "ops": [{"arity": 1, "inputs": ["a"], "output": [{"name": "b", "coeff": "1"}]},
                  {"arity": 2, "inputs": ["a", "b"], "output": [{"name": "b", "coeff": "1"}]}]}"#;
        assert!(matches!(parse_model(bad, None, None), Err(CliError::Validation(_))));
    }

    #[test]
    fn windows() {
        assert_eq!(parse_window("-3..3"), Ok((-3, 3)));
        assert!(parse_window("3..-3").is_err());
        assert!(parse_window("3").is_err());
    }

    #[test]
    fn sl2_round_trip() {
        let m = parse_model(SL2, None, None).unwrap();
        let text = serde_json::to_string_pretty(&to_file(&m)).unwrap();
        let back = parse_model(&text, None, None).unwrap();
        assert!(same_structure(&m, &back));
        assert_eq!(to_file(&back), to_file(&m));
    }

    #[test]
    fn reports_are_deterministic() {
        let m = parse_model(SL2, None, None).unwrap();
        let opts = Options::default();
        let a = run_model(Command::Cohomology, "sl2", &m, &opts).unwrap();
        let b = run_model(Command::Cohomology, "sl2", &parse_model(SL2, None, None).unwrap(), &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a.json).unwrap(), serde_json::to_string(&b.json).unwrap());
    }

    fn arb_linfty() -> impl Strategy<Value = String> {
        // A random nilpotent L∞ algebra: l_n only increases the index.
        (proptest::collection::vec(-2i64..=2, 3), proptest::collection::vec(-3i64..=3, 4)).prop_map(|(degs, cs)| {
            let d = [degs[0], degs[1], degs[2]];
            let mut ops = Vec::new();
            // l₂(x0, x1) ∝ x2 when the degrees match.
            if d[0] + d[1] + 1 == d[2] && cs[0] != 0 {
                ops.push(format!(
                    r#"{{"arity": 2, "inputs": ["x0", "x1"], "output": [{{"name": "x2", "coeff": "{}"}}]}}"#,
                    cs[0]
                ));
            }
            if d[0] + 1 == d[1] && cs[1] != 0 {
                ops.push(format!(
                    r#"{{"arity": 1, "inputs": ["x0"], "output": [{{"name": "x1", "coeff": "{}/{}"}}]}}"#,
                    cs[1],
                    cs[2].abs() + 1
                ));
            }
            let basis: Vec<String> =
                d.iter().enumerate().map(|(i, k)| format!(r#"{{"name": "x{i}", "degree": {k}}}"#)).collect();
            format!(
                r#"{{"kind": "linfty", "grading": "cohomological", "basis": [{}], "ops": [{}], "caps": {{"weight": 3}}}}"#,
                basis.join(","),
                ops.join(",")
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn linfty_round_trip(text in arb_linfty()) {
            if let Ok(m) = parse_model(&text, None, None) {
                let out = serde_json::to_string(&to_file(&m)).unwrap();
                let back = parse_model(&out, None, None).unwrap();
                prop_assert!(same_structure(&m, &back));
            }
        }
    }
}
