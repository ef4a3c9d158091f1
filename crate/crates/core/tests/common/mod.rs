//! Double-double evaluation of polynomial systems. Expanded monomials around
//! far-off centers cancel to many orders of magnitude below their size, so
//! identities between systems are checked in extended precision.

#![allow(dead_code)]

use lcf_core::PolyOdeSystem;
use twofloat::TwoFloat;

pub fn eval_dd(sys: &PolyOdeSystem, state: &[TwoFloat]) -> Vec<TwoFloat> {
    sys.rhs()
        .iter()
        .map(|eq| {
            eq.iter().fold(TwoFloat::from(0.0), |acc, m| {
                let term = m
                    .exps
                    .iter()
                    .zip(state)
                    .filter(|(&e, _)| e > 0)
                    .fold(TwoFloat::from(m.coeff), |t, (&e, &s)| t * s.powi(e as i32));
                acc + term
            })
        })
        .collect()
}

/// Sum of absolute monomial values per equation: the scale of the rounding
/// error carried by the coefficients themselves.
pub fn term_mass(sys: &PolyOdeSystem, state: &[f64]) -> Vec<f64> {
    sys.rhs().iter().map(|eq| eq.iter().map(|m| m.eval(state).abs()).sum()).collect()
}

pub fn dd(values: &[f64]) -> Vec<TwoFloat> {
    values.iter().map(|&v| TwoFloat::from(v)).collect()
}
