//! Sparse multivariate polynomials and polynomial ODE systems.
//!
//! [`Poly`] is a scratch type used while building systems (it supports ring
//! arithmetic). [`PolyOdeSystem`] is the immutable, canonical form: one list
//! of [`Monomial`]s per equation, like terms combined, zero terms dropped and
//! monomials ordered graded-lexicographically so equality is structural.

use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::PolyError;

/// Relative tolerance used when comparing coefficients structurally.
pub const COEFF_REL_TOL: f64 = 1e-12;

/// `true` when two coefficients are equal exactly or within [`COEFF_REL_TOL`].
pub fn coeff_close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= COEFF_REL_TOL * a.abs().max(b.abs())
}

/// Graded lexicographic order, highest degree first.
pub fn grlex_cmp(a: &[u32], b: &[u32]) -> Ordering {
    let da: u32 = a.iter().sum();
    let db: u32 = b.iter().sum();
    db.cmp(&da).then_with(|| b.cmp(a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub exps: Vec<u32>,
}

impl Monomial {
    pub fn new(coeff: f64, exps: Vec<u32>) -> Self {
        Self { coeff, exps }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    /// Value of the monomial (coefficient included) at `state`.
    pub fn eval(&self, state: &[f64]) -> f64 {
        self.exps
            .iter()
            .zip(state)
            .filter(|(e, _)| **e > 0)
            .fold(self.coeff, |acc, (e, x)| acc * x.powi(*e as i32))
    }

    fn fmt_with(&self, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        for (e, name) in self.exps.iter().zip(names) {
            match e {
                0 => {}
                1 => write!(f, "*{name}")?,
                _ => write!(f, "*{name}^{e}")?,
            }
        }
        Ok(())
    }
}

/// Builder polynomial over a fixed number of variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: BTreeMap<Vec<u32>, f64>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Self { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: f64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(vec![0; nvars], c);
        p
    }

    /// The polynomial `x_var`.
    pub fn var(nvars: usize, var: usize) -> Self {
        let mut exps = vec![0; nvars];
        exps[var] = 1;
        let mut p = Self::zero(nvars);
        p.add_term(exps, 1.0);
        p
    }

    /// `coeff * prod x_i^exps_i`.
    pub fn monomial(coeff: f64, exps: Vec<u32>) -> Self {
        let mut p = Self::zero(exps.len());
        p.add_term(exps, coeff);
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exps: Vec<u32>, coeff: f64) {
        debug_assert_eq!(exps.len(), self.nvars);
        if coeff == 0.0 {
            return;
        }
        match self.terms.entry(exps) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
        }
    }

    pub fn scale(&self, s: f64) -> Poly {
        let mut out = Poly::zero(self.nvars);
        if s != 0.0 {
            for (e, c) in &self.terms {
                out.add_term(e.clone(), c * s);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Poly {
        let mut acc = Poly::constant(self.nvars, 1.0);
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn coeff(&self, exps: &[u32]) -> f64 {
        self.terms.get(exps).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, state: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| Monomial::new(*c, e.clone()).eval(state))
            .sum()
    }

    pub fn into_monomials(self) -> Vec<Monomial> {
        self.terms
            .into_iter()
            .map(|(exps, coeff)| Monomial { coeff, exps })
            .collect()
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), *c);
        }
        out
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, rhs: &Poly) -> Poly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), -*c);
        }
        out
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, rhs: &Poly) -> Poly {
        let mut out = Poly::zero(self.nvars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let e: Vec<u32> = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(e, ca * cb);
            }
        }
        out
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        self.scale(-1.0)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Poly> for Poly {
            type Output = Poly;
            fn $m(self, rhs: &Poly) -> Poly {
                (&self).$m(rhs)
            }
        }
        impl $tr<Poly> for &Poly {
            type Output = Poly;
            fn $m(self, rhs: Poly) -> Poly {
                self.$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// A violation of the kinetic (no negative cross term) condition.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticViolation {
    pub equation: usize,
    pub monomial: Monomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticVerdict {
    pub violations: Vec<KineticViolation>,
}

impl KineticVerdict {
    pub fn is_kinetic(&self) -> bool {
        self.violations.is_empty()
    }
}

/// One term prepared for fast evaluation: coefficient plus the non-zero
/// (variable, exponent) factors.
#[derive(Debug, Clone)]
struct CompiledTerm {
    coeff: f64,
    factors: Vec<(usize, i32)>,
}

/// N-variable polynomial vector field in canonical form.
#[derive(Debug, Clone)]
pub struct PolyOdeSystem {
    names: Vec<String>,
    rhs: Vec<Vec<Monomial>>,
    compiled: Vec<Vec<CompiledTerm>>,
}

impl PolyOdeSystem {
    /// Builds a canonical system. Like monomials are summed, zero terms
    /// dropped and each equation sorted graded-lexicographically.
    pub fn new(names: Vec<String>, rhs: Vec<Vec<Monomial>>) -> Result<Self, PolyError> {
        let dim = names.len();
        if rhs.len() != dim {
            return Err(PolyError::DimensionMismatch { expected: dim, found: rhs.len() });
        }
        let mut seen = std::collections::HashSet::new();
        for n in &names {
            if !seen.insert(n.as_str()) {
                return Err(PolyError::DuplicateName(n.clone()));
            }
        }
        let mut canon = Vec::with_capacity(dim);
        for (eq, monos) in rhs.into_iter().enumerate() {
            let mut acc: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
            for m in monos {
                if m.exps.len() != dim {
                    return Err(PolyError::DimensionMismatch { expected: dim, found: m.exps.len() });
                }
                if !m.coeff.is_finite() {
                    return Err(PolyError::NonFiniteCoefficient { equation: eq });
                }
                *acc.entry(m.exps).or_insert(0.0) += m.coeff;
            }
            let mut terms: Vec<Monomial> = acc
                .into_iter()
                .filter(|(_, c)| *c != 0.0)
                .map(|(exps, coeff)| Monomial { coeff, exps })
                .collect();
            terms.sort_by(|a, b| grlex_cmp(&a.exps, &b.exps));
            canon.push(terms);
        }
        let compiled = compile(&canon);
        Ok(Self { names, rhs: canon, compiled })
    }

    pub fn from_polys(names: Vec<String>, polys: Vec<Poly>) -> Result<Self, PolyError> {
        let rhs = polys.into_iter().map(Poly::into_monomials).collect();
        Self::new(names, rhs)
    }

    /// Variables named `x0, x1, ...`.
    pub fn with_default_names(rhs: Vec<Vec<Monomial>>) -> Result<Self, PolyError> {
        let names = (0..rhs.len()).map(|i| format!("x{i}")).collect();
        Self::new(names, rhs)
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rhs(&self) -> &[Vec<Monomial>] {
        &self.rhs
    }

    pub fn equation(&self, i: usize) -> &[Monomial] {
        &self.rhs[i]
    }

    pub fn monomial_count(&self) -> usize {
        self.rhs.iter().map(Vec::len).sum()
    }

    /// Maximum total degree over all monomials.
    pub fn degree(&self) -> u32 {
        self.rhs.iter().flatten().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Total degree of a single equation.
    pub fn equation_degree(&self, i: usize) -> u32 {
        self.rhs[i].iter().map(Monomial::degree).max().unwrap_or(0)
    }

    /// Coefficient of the monomial with exponent vector `exps` in equation `eq`.
    pub fn coeff(&self, eq: usize, exps: &[u32]) -> f64 {
        self.rhs[eq]
            .iter()
            .find(|m| m.exps == exps)
            .map(|m| m.coeff)
            .unwrap_or(0.0)
    }

    /// Index of a variable by name.
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Re-runs canonicalization. Always a structural no-op.
    pub fn canonicalized(&self) -> Self {
        Self::new(self.names.clone(), self.rhs.clone()).expect("already valid")
    }

    /// Componentwise evaluation of the right-hand side.
    pub fn evaluate(&self, state: &[f64]) -> Result<Vec<f64>, PolyError> {
        if state.len() != self.dim() {
            return Err(PolyError::DimensionMismatch { expected: self.dim(), found: state.len() });
        }
        let mut out = vec![0.0; self.dim()];
        self.eval_into(state, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into a caller buffer.
    pub fn eval_into(&self, state: &[f64], out: &mut [f64]) {
        for (o, terms) in out.iter_mut().zip(&self.compiled) {
            let mut s = 0.0;
            for t in terms {
                let mut v = t.coeff;
                for &(var, e) in &t.factors {
                    v *= state[var].powi(e);
                }
                s += v;
            }
            *o = s;
        }
    }

    /// Exact Jacobian, row-major `dim x dim`.
    pub fn jacobian_into(&self, state: &[f64], jac: &mut [f64]) {
        let n = self.dim();
        jac.iter_mut().for_each(|j| *j = 0.0);
        for (row, terms) in self.compiled.iter().enumerate() {
            for t in terms {
                for (k, &(var, e)) in t.factors.iter().enumerate() {
                    let mut v = t.coeff * e as f64 * state[var].powi(e - 1);
                    for (l, &(ov, oe)) in t.factors.iter().enumerate() {
                        if l != k {
                            v *= state[ov].powi(oe);
                        }
                    }
                    jac[row * n + var] += v;
                }
            }
        }
    }

    /// Checks the kinetic condition: every negative monomial in equation `i`
    /// must contain variable `i`.
    pub fn is_kinetic(&self) -> KineticVerdict {
        let violations = self
            .rhs
            .iter()
            .enumerate()
            .flat_map(|(i, terms)| {
                terms
                    .iter()
                    .filter(move |m| m.coeff < 0.0 && m.exps[i] == 0)
                    .map(move |m| KineticViolation { equation: i, monomial: m.clone() })
            })
            .collect();
        KineticVerdict { violations }
    }

    /// Structural comparison with coefficient tolerance [`COEFF_REL_TOL`].
    /// Variable names are not compared.
    pub fn structurally_eq(&self, other: &Self) -> bool {
        self.first_difference(other).is_none()
    }

    /// Human-readable description of the first structural difference.
    pub fn first_difference(&self, other: &Self) -> Option<String> {
        if self.dim() != other.dim() {
            return Some(format!("dimension {} vs {}", self.dim(), other.dim()));
        }
        for (i, (a, b)) in self.rhs.iter().zip(&other.rhs).enumerate() {
            if a.len() != b.len() {
                return Some(format!("equation {i}: {} vs {} monomials", a.len(), b.len()));
            }
            for (ma, mb) in a.iter().zip(b) {
                if ma.exps != mb.exps {
                    return Some(format!("equation {i}: exps {:?} vs {:?}", ma.exps, mb.exps));
                }
                if !coeff_close(ma.coeff, mb.coeff) {
                    return Some(format!(
                        "equation {i}, exps {:?}: coeff {} vs {}",
                        ma.exps, ma.coeff, mb.coeff
                    ));
                }
            }
        }
        None
    }
}

fn compile(rhs: &[Vec<Monomial>]) -> Vec<Vec<CompiledTerm>> {
    rhs.iter()
        .map(|terms| {
            terms
                .iter()
                .map(|m| CompiledTerm {
                    coeff: m.coeff,
                    factors: m
                        .exps
                        .iter()
                        .enumerate()
                        .filter(|(_, e)| **e > 0)
                        .map(|(v, e)| (v, *e as i32))
                        .collect(),
                })
                .collect()
        })
        .collect()
}

impl fmt::Display for PolyOdeSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, terms) in self.names.iter().zip(&self.rhs) {
            write!(f, "d{name}/dt =")?;
            if terms.is_empty() {
                write!(f, " 0")?;
            }
            for m in terms {
                write!(f, " + ")?;
                m.fmt_with(&self.names, f)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Serialized form: `{variables:[names], equations:[[{coeff, exps}]]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolySystemJson {
    pub variables: Vec<String>,
    pub equations: Vec<Vec<Monomial>>,
}

impl From<&PolyOdeSystem> for PolySystemJson {
    fn from(sys: &PolyOdeSystem) -> Self {
        Self { variables: sys.names.clone(), equations: sys.rhs.clone() }
    }
}

impl TryFrom<PolySystemJson> for PolyOdeSystem {
    type Error = PolyError;
    fn try_from(j: PolySystemJson) -> Result<Self, PolyError> {
        PolyOdeSystem::new(j.variables, j.equations)
    }
}
