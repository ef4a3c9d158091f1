//! Chemical reaction networks and the mass-action compiler in both
//! directions: network to reaction rate equations, and kinetic polynomial
//! system back to a canonical network.

pub mod format;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::CrnError;
use crate::poly::{Monomial, PolyOdeSystem};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Species {
    pub id: usize,
    pub name: String,
}

/// Stoichiometric counts per species.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Complex(pub Vec<u32>);

impl Complex {
    pub fn empty(n: usize) -> Self {
        Complex(vec![0; n])
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.iter().all(|c| *c == 0)
    }

    /// Builds a complex from `(species index, count)` pairs.
    pub fn from_counts(n: usize, counts: &[(usize, u32)]) -> Self {
        let mut v = vec![0; n];
        for &(i, c) in counts {
            v[i] += c;
        }
        Complex(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub reactant: Complex,
    pub product: Complex,
    pub rate: f64,
}

impl Reaction {
    pub fn new(reactant: Complex, product: Complex, rate: f64) -> Self {
        Self { reactant, product, rate }
    }

    pub fn order(&self) -> u32 {
        self.reactant.order()
    }
}

/// How [`ode_to_crn`] realizes monomials as reactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergePolicy {
    /// One reaction per monomial per equation.
    #[default]
    PerTerm,
    /// Monomials in different equations with identical exponents and
    /// identical absolute coefficient share one reaction.
    MergeSharedReactants,
}

/// A validated network. The complex set is implied by the reactions.
#[derive(Debug, Clone, PartialEq)]
pub struct Crn {
    species: Vec<Species>,
    reactions: Vec<Reaction>,
}

pub(crate) fn valid_species_name(name: &str) -> bool {
    !name.is_empty()
        && name != "0"
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && !name.chars().any(|c| c.is_whitespace() || matches!(c, '+' | '@' | '-' | '>' | '#' | '"'))
}

impl Crn {
    pub fn new(names: Vec<String>, reactions: Vec<Reaction>) -> Result<Self, CrnError> {
        let mut seen = HashMap::new();
        for n in &names {
            if !valid_species_name(n) {
                return Err(CrnError::InvalidSpeciesName(n.clone()));
            }
            if seen.insert(n.clone(), ()).is_some() {
                return Err(CrnError::DuplicateSpecies(n.clone()));
            }
        }
        let n = names.len();
        for (j, r) in reactions.iter().enumerate() {
            for c in [&r.reactant, &r.product] {
                if c.len() != n {
                    return Err(CrnError::ComplexLength { reaction: j, expected: n, found: c.len() });
                }
            }
            if !(r.rate > 0.0 && r.rate.is_finite()) {
                return Err(CrnError::NonpositiveRate { reaction: j, rate: r.rate });
            }
            if r.reactant == r.product {
                return Err(CrnError::NoOpReaction(j));
            }
        }
        let species = names
            .into_iter()
            .enumerate()
            .map(|(id, name)| Species { id, name })
            .collect();
        Ok(Self { species, reactions })
    }

    pub fn species(&self) -> &[Species] {
        &self.species
    }

    pub fn species_names(&self) -> Vec<String> {
        self.species.iter().map(|s| s.name.clone()).collect()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn reactions(&self) -> &[Reaction] {
        &self.reactions
    }

    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn num_reactions(&self) -> usize {
        self.reactions.len()
    }

    /// Largest reactant order over all reactions (0 for an empty network).
    pub fn max_order(&self) -> u32 {
        self.reactions.iter().map(Reaction::order).max().unwrap_or(0)
    }

    /// Whether the network contains a reaction equal to `r` (rate compared
    /// with the structural coefficient tolerance).
    pub fn contains(&self, r: &Reaction) -> bool {
        self.reactions.iter().any(|q| {
            q.reactant == r.reactant && q.product == r.product && crate::poly::coeff_close(q.rate, r.rate)
        })
    }
}

/// Reaction rate equations of `crn` under mass-action kinetics.
pub fn mass_action_odes(crn: &Crn) -> PolyOdeSystem {
    let n = crn.num_species();
    let mut rhs: Vec<Vec<Monomial>> = vec![Vec::new(); n];
    for r in crn.reactions() {
        for (i, eq) in rhs.iter_mut().enumerate() {
            let net = r.product.0[i] as i64 - r.reactant.0[i] as i64;
            if net != 0 {
                eq.push(Monomial::new(r.rate * net as f64, r.reactant.0.clone()));
            }
        }
    }
    PolyOdeSystem::new(crn.species_names(), rhs).expect("crn invariants guarantee a valid system")
}

/// Canonical network realizing a kinetic polynomial system: a positive
/// monomial in equation `i` becomes a reaction that produces one extra unit
/// of species `i`, a negative one a reaction that consumes one.
pub fn ode_to_crn(sys: &PolyOdeSystem, policy: MergePolicy) -> Result<Crn, CrnError> {
    let verdict = sys.is_kinetic();
    if let Some(first) = verdict.violations.first() {
        return Err(CrnError::NotKinetic {
            count: verdict.violations.len(),
            first_equation: first.equation,
        });
    }
    let n = sys.dim();
    let reactions = match policy {
        MergePolicy::PerTerm => {
            let mut out = Vec::with_capacity(sys.monomial_count());
            for (i, terms) in sys.rhs().iter().enumerate() {
                for m in terms {
                    let mut product = m.exps.clone();
                    if m.coeff > 0.0 {
                        product[i] += 1;
                    } else {
                        product[i] -= 1;
                    }
                    out.push(Reaction::new(Complex(m.exps.clone()), Complex(product), m.coeff.abs()));
                }
            }
            out
        }
        MergePolicy::MergeSharedReactants => {
            // key: (exponents, |coeff| bit pattern) -> index into `groups`
            let mut index: HashMap<(Vec<u32>, u64), usize> = HashMap::new();
            let mut groups: Vec<(Vec<u32>, f64, Vec<i64>)> = Vec::new();
            for (i, terms) in sys.rhs().iter().enumerate() {
                for m in terms {
                    let key = (m.exps.clone(), m.coeff.abs().to_bits());
                    let g = *index.entry(key).or_insert_with(|| {
                        groups.push((m.exps.clone(), m.coeff.abs(), vec![0; n]));
                        groups.len() - 1
                    });
                    groups[g].2[i] += if m.coeff > 0.0 { 1 } else { -1 };
                }
            }
            groups
                .into_iter()
                .map(|(exps, rate, delta)| {
                    let product = exps
                        .iter()
                        .zip(&delta)
                        .map(|(e, d)| (*e as i64 + d) as u32)
                        .collect();
                    Reaction::new(Complex(exps), Complex(product), rate)
                })
                .collect()
        }
    };
    Crn::new(sys.names().to_vec(), reactions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn first_order_decay() {
        let crn = Crn::new(names(&["X"]), vec![Reaction::new(Complex(vec![1]), Complex(vec![0]), 2.0)]).unwrap();
        let sys = mass_action_odes(&crn);
        assert_eq!(sys.equation(0), &[Monomial::new(-2.0, vec![1])]);
        assert_eq!(crn.max_order(), 1);
    }

    #[test]
    fn inflow_and_catalysed_decay() {
        // species (X, V1), eps = 1
        let crn = Crn::new(
            names(&["X", "V1"]),
            vec![
                Reaction::new(Complex(vec![0, 0]), Complex(vec![0, 1]), 1.0),
                Reaction::new(Complex(vec![6, 1]), Complex(vec![6, 0]), 1.0),
            ],
        )
        .unwrap();
        let sys = mass_action_odes(&crn);
        assert!(sys.equation(0).is_empty(), "X is catalytic");
        assert_eq!(
            sys.equation(1),
            &[Monomial::new(-1.0, vec![6, 1]), Monomial::new(1.0, vec![0, 0])]
        );
    }

    #[test]
    fn invalid_reactions_rejected() {
        let r = |rate| vec![Reaction::new(Complex(vec![1]), Complex(vec![0]), rate)];
        assert!(matches!(Crn::new(names(&["X"]), r(0.0)), Err(CrnError::NonpositiveRate { .. })));
        assert!(matches!(Crn::new(names(&["X"]), r(-1.0)), Err(CrnError::NonpositiveRate { .. })));
        let noop = vec![Reaction::new(Complex(vec![1]), Complex(vec![1]), 1.0)];
        assert!(matches!(Crn::new(names(&["X"]), noop), Err(CrnError::NoOpReaction(0))));
        let bad_len = vec![Reaction::new(Complex(vec![1, 0]), Complex(vec![0]), 1.0)];
        assert!(matches!(Crn::new(names(&["X"]), bad_len), Err(CrnError::ComplexLength { .. })));
        assert!(matches!(Crn::new(names(&["X", "X"]), vec![]), Err(CrnError::DuplicateSpecies(_))));
        assert!(matches!(Crn::new(names(&["2X"]), vec![]), Err(CrnError::InvalidSpeciesName(_))));
    }

    #[test]
    fn factoring_rule_for_negative_cubic() {
        let sys = PolyOdeSystem::new(names(&["X"]), vec![vec![Monomial::new(-1.0, vec![3])]]).unwrap();
        let crn = ode_to_crn(&sys, MergePolicy::PerTerm).unwrap();
        assert_eq!(crn.reactions(), &[Reaction::new(Complex(vec![3]), Complex(vec![2]), 1.0)]);
    }

    #[test]
    fn factoring_rule_for_positive_cross_term() {
        let k = 2.5;
        let sys = PolyOdeSystem::new(
            names(&["X", "Y"]),
            vec![vec![Monomial::new(k, vec![1, 1])], vec![]],
        )
        .unwrap();
        let crn = ode_to_crn(&sys, MergePolicy::PerTerm).unwrap();
        assert_eq!(crn.reactions(), &[Reaction::new(Complex(vec![1, 1]), Complex(vec![2, 1]), k)]);
    }

    #[test]
    fn shared_negative_term_merges() {
        // (X, Y, V1): dx ⊇ -v x^2 y^2, dy ⊇ -v x^2 y^2
        let e = vec![2, 2, 1];
        let sys = PolyOdeSystem::new(
            names(&["X", "Y", "V1"]),
            vec![vec![Monomial::new(-1.0, e.clone())], vec![Monomial::new(-1.0, e.clone())], vec![]],
        )
        .unwrap();
        let merged = ode_to_crn(&sys, MergePolicy::MergeSharedReactants).unwrap();
        assert_eq!(
            merged.reactions(),
            &[Reaction::new(Complex(e.clone()), Complex(vec![1, 1, 1]), 1.0)]
        );
        let split = ode_to_crn(&sys, MergePolicy::PerTerm).unwrap();
        assert_eq!(split.num_reactions(), 2);
        assert!(mass_action_odes(&merged).structurally_eq(&sys));
        assert!(mass_action_odes(&split).structurally_eq(&sys));
    }

    #[test]
    fn non_kinetic_rejected() {
        let sys = PolyOdeSystem::new(
            names(&["X", "Y"]),
            vec![vec![Monomial::new(-1.0, vec![0, 1])], vec![Monomial::new(1.0, vec![1, 0])]],
        )
        .unwrap();
        assert!(matches!(
            ode_to_crn(&sys, MergePolicy::PerTerm),
            Err(CrnError::NotKinetic { count: 1, first_equation: 0 })
        ));
    }
}
