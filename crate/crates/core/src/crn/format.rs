//! Text and JSON serializations of a [`Crn`].
//!
//! Text form, one reaction per line:
//!
//! ```text
//! species: X Y V1
//! V1 + 6X -> 6X @ 1.0
//! 0 -> V1 @ 1.0
//! ```
//!
//! `0` denotes the empty complex. The `species:` directive fixes the species
//! order; without it species are numbered by first appearance. Lines starting
//! with `#` are comments. Rates are written in shortest round-trip form so
//! `parse_text(&to_text(c)) == c`.

use serde::{Deserialize, Serialize};

use super::{valid_species_name, Complex, Crn, Reaction};
use crate::error::CrnError;

fn fmt_complex(c: &Complex, names: &[String]) -> String {
    let parts: Vec<String> = c
        .0
        .iter()
        .zip(names)
        .filter(|(n, _)| **n > 0)
        .map(|(n, name)| if *n == 1 { name.clone() } else { format!("{n}{name}") })
        .collect();
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join(" + ")
    }
}

pub fn reaction_to_text(r: &Reaction, names: &[String]) -> String {
    format!(
        "{} -> {} @ {:?}",
        fmt_complex(&r.reactant, names),
        fmt_complex(&r.product, names),
        r.rate
    )
}

pub fn to_text(crn: &Crn) -> String {
    let names = crn.species_names();
    let mut out = format!("species: {}\n", names.join(" "));
    for r in crn.reactions() {
        out.push_str(&reaction_to_text(r, &names));
        out.push('\n');
    }
    out
}

struct TextParser {
    names: Vec<String>,
    fixed: bool,
}

impl TextParser {
    fn index(&mut self, name: &str, line: usize) -> Result<usize, CrnError> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Ok(i);
        }
        if self.fixed {
            return Err(CrnError::UnknownSpecies(name.to_string()));
        }
        if !valid_species_name(name) {
            return Err(CrnError::Parse { line, message: format!("invalid species name `{name}`") });
        }
        self.names.push(name.to_string());
        Ok(self.names.len() - 1)
    }

    fn complex(&mut self, s: &str, line: usize) -> Result<Vec<(usize, u32)>, CrnError> {
        let s = s.trim();
        if s == "0" {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for term in s.split('+') {
            let term = term.trim();
            let split = term.find(|c: char| !c.is_ascii_digit()).unwrap_or(term.len());
            let (count, name) = term.split_at(split);
            let count: u32 = if count.is_empty() {
                1
            } else {
                count.parse().map_err(|_| CrnError::Parse {
                    line,
                    message: format!("bad stoichiometric coefficient in `{term}`"),
                })?
            };
            if name.is_empty() {
                return Err(CrnError::Parse { line, message: format!("missing species in `{term}`") });
            }
            out.push((self.index(name, line)?, count));
        }
        Ok(out)
    }
}

/// Parses the text form.
pub fn parse_text(text: &str) -> Result<Crn, CrnError> {
    let mut p = TextParser { names: Vec::new(), fixed: false };
    let mut raw: Vec<(Vec<(usize, u32)>, Vec<(usize, u32)>, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("species:") {
            if p.fixed || !raw.is_empty() {
                return Err(CrnError::Parse {
                    line: line_no,
                    message: "species directive must come first and only once".into(),
                });
            }
            p.names = rest.split_whitespace().map(str::to_string).collect();
            p.fixed = true;
            continue;
        }
        let (lhs, rest) = line.split_once("->").ok_or_else(|| CrnError::Parse {
            line: line_no,
            message: "expected `->`".into(),
        })?;
        let (rhs, rate) = rest.split_once('@').ok_or_else(|| CrnError::Parse {
            line: line_no,
            message: "expected `@ <rate>`".into(),
        })?;
        let rate: f64 = rate.trim().parse().map_err(|_| CrnError::Parse {
            line: line_no,
            message: format!("bad rate `{}`", rate.trim()),
        })?;
        let reactant = p.complex(lhs, line_no)?;
        let product = p.complex(rhs, line_no)?;
        raw.push((reactant, product, rate));
    }
    let n = p.names.len();
    let reactions = raw
        .into_iter()
        .map(|(r, q, k)| Reaction::new(Complex::from_counts(n, &r), Complex::from_counts(n, &q), k))
        .collect();
    Crn::new(p.names, reactions)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrnJson {
    pub species: Vec<String>,
    pub reactions: Vec<Reaction>,
}

pub fn to_json(crn: &Crn) -> String {
    let j = CrnJson { species: crn.species_names(), reactions: crn.reactions().to_vec() };
    serde_json::to_string_pretty(&j).expect("plain data serializes")
}

pub fn parse_json(text: &str) -> Result<Crn, CrnError> {
    let j: CrnJson = serde_json::from_str(text)?;
    Crn::new(j.species, j.reactions)
}
