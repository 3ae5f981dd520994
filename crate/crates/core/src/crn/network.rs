//! Reaction network text format.
//!
//! ```text
//! species: X1 X2 X3     # optional, fixes species order
//! 2 X1 + X2 -> 3 X1 ; k1
//! X1 + X4 <-> X6 ; k1, k2
//! 0 -> X1 ; k0          # `0` is the empty complex
//! ```

use std::collections::HashSet;

use super::CrnError;
use crate::polysys::{is_identifier, VarSpace};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reaction {
    /// Reactant stoichiometric coefficients, one per species.
    pub reactant: Vec<u32>,
    pub product: Vec<u32>,
    pub rate: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReactionNetwork {
    pub species: Vec<String>,
    pub reactions: Vec<Reaction>,
}

impl ReactionNetwork {
    pub fn num_species(&self) -> usize {
        self.species.len()
    }

    pub fn rate_labels(&self) -> Vec<&str> {
        self.reactions.iter().map(|r| r.rate.as_str()).collect()
    }

    /// Variable names for the species concentrations (lowercased names).
    pub fn concentration_names(&self) -> Result<Vec<String>, CrnError> {
        let names: Vec<String> = self.species.iter().map(|s| s.to_lowercase()).collect();
        let mut seen = HashSet::new();
        for (name, sp) in names.iter().zip(&self.species) {
            if !seen.insert(name.as_str()) {
                return Err(CrnError::NameCollision(format!(
                    "species `{sp}` collides with another species when lowercased"
                )));
            }
            if self.reactions.iter().any(|r| &r.rate == name) {
                return Err(CrnError::NameCollision(format!(
                    "concentration name `{name}` equals a rate label"
                )));
            }
        }
        Ok(names)
    }

    /// Concentrations as variables, rate constants as parameters.
    pub fn var_space(&self) -> Result<VarSpace, CrnError> {
        let names = self.concentration_names()?;
        VarSpace::new(names, self.rate_labels().into_iter().map(String::from).collect::<Vec<_>>())
            .map_err(|e| CrnError::NameCollision(e.to_string()))
    }
}

pub fn parse_network(text: &str) -> Result<ReactionNetwork, CrnError> {
    let mut species: Vec<String> = Vec::new();
    let mut fixed_species = false;
    let mut raw: Vec<(usize, Vec<(u32, String, usize)>, Vec<(u32, String, usize)>, String)> =
        Vec::new();
    let mut labels: HashSet<String> = HashSet::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let content = line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let lead = content.len() - content.trim_start().len();
        if let Some(rest) = content.trim_start().strip_prefix("species:") {
            if fixed_species || !raw.is_empty() {
                return Err(malformed(line_no, lead + 1, "`species:` must come first and only once"));
            }
            let base = lead + "species:".len();
            for (col, name) in words(rest, base) {
                if !is_identifier(name) {
                    return Err(malformed(line_no, col, &format!("`{name}` is not a valid species name")));
                }
                if species.iter().any(|s| s == name) {
                    return Err(malformed(line_no, col, &format!("species `{name}` listed twice")));
                }
                species.push(name.to_string());
            }
            if species.is_empty() {
                return Err(malformed(line_no, lead + 1, "empty species list"));
            }
            fixed_species = true;
            continue;
        }

        let Some(semi) = content.find(';') else {
            return Err(malformed(line_no, content.len() + 1, "expected `; rate` after the reaction"));
        };
        let body = &content[..semi];
        let rates: Vec<(usize, &str)> = content[semi + 1..]
            .split(',')
            .scan(semi + 1, |off, part| {
                let col = *off + (part.len() - part.trim_start().len()) + 1;
                *off += part.len() + 1;
                Some((col, part.trim()))
            })
            .collect();
        let (arrow, reversible) = if let Some(p) = body.find("<->") {
            (p, true)
        } else if let Some(p) = body.find("->") {
            (p, false)
        } else {
            return Err(malformed(line_no, lead + 1, "expected `->` or `<->`"));
        };
        let arrow_len = if reversible { 3 } else { 2 };
        let left = parse_complex(&body[..arrow], 0, line_no)?;
        let right = parse_complex(&body[arrow + arrow_len..], arrow + arrow_len, line_no)?;
        let expected = if reversible { 2 } else { 1 };
        if rates.len() != expected {
            return Err(malformed(
                line_no,
                semi + 2,
                &format!("expected {expected} rate label(s)"),
            ));
        }
        for &(col, label) in &rates {
            if !is_identifier(label) {
                return Err(malformed(line_no, col, &format!("`{label}` is not a valid rate label")));
            }
            if !labels.insert(label.to_string()) {
                return Err(CrnError::DuplicateRate {
                    line: line_no,
                    label: label.to_string(),
                });
            }
        }
        for (_, name, col) in left.iter().chain(&right) {
            if !species.iter().any(|s| s == name) {
                if fixed_species {
                    return Err(malformed(line_no, *col, &format!("species `{name}` not declared")));
                }
                species.push(name.clone());
            }
        }
        raw.push((line_no, left.clone(), right.clone(), rates[0].1.to_string()));
        if reversible {
            raw.push((line_no, right, left, rates[1].1.to_string()));
        }
    }
    if species.is_empty() {
        return Err(CrnError::Empty);
    }

    let n = species.len();
    let mut reactions = Vec::with_capacity(raw.len());
    for (line, left, right, rate) in raw {
        let mut reactant = vec![0u32; n];
        let mut product = vec![0u32; n];
        for (c, name, _) in &left {
            reactant[species.iter().position(|s| s == name).unwrap()] += c;
        }
        for (c, name, _) in &right {
            product[species.iter().position(|s| s == name).unwrap()] += c;
        }
        if reactant == product {
            return Err(CrnError::NoNetChange { line });
        }
        reactions.push(Reaction {
            reactant,
            product,
            rate,
        });
    }
    Ok(ReactionNetwork { species, reactions })
}

fn malformed(line: usize, column: usize, message: &str) -> CrnError {
    CrnError::Malformed {
        line,
        column,
        message: message.to_string(),
    }
}

fn words(s: &str, base: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in s.char_indices() {
        if c.is_whitespace() {
            if let Some(st) = start.take() {
                out.push((base + st + 1, &s[st..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(st) = start {
        out.push((base + st + 1, &s[st..]));
    }
    out
}

/// Terms `c Name` separated by `+`; `0` alone is the empty complex.
fn parse_complex(s: &str, base: usize, line: usize) -> Result<Vec<(u32, String, usize)>, CrnError> {
    let trimmed = s.trim();
    if trimmed == "0" || trimmed == "∅" {
        return Ok(Vec::new());
    }
    if trimmed.is_empty() {
        return Err(malformed(line, base + 1, "empty complex (write `0`)"));
    }
    let mut out = Vec::new();
    let mut offset = 0;
    for part in s.split('+') {
        let col = base + offset + (part.len() - part.trim_start().len()) + 1;
        offset += part.len() + 1;
        let term = part.trim();
        let digits_end = term.find(|c: char| !c.is_ascii_digit()).unwrap_or(term.len());
        let (coef, name) = if digits_end == 0 {
            (1, term)
        } else {
            let c: u32 = term[..digits_end]
                .parse()
                .map_err(|_| malformed(line, col, "malformed stoichiometric coefficient"))?;
            let rest = term[digits_end..].trim_start();
            let rest = rest.strip_prefix('*').map(str::trim_start).unwrap_or(rest);
            (c, rest)
        };
        if coef == 0 || !is_identifier(name) {
            return Err(malformed(line, col, &format!("malformed stoichiometry `{term}`")));
        }
        out.push((coef, name.to_string(), col));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const HK: &str = "\
X1 -> X2 ; k1
X2 -> X3 ; k2
X3 -> X4 ; k3
X3 + X5 -> X1 + X6 ; k4
X6 -> X5 ; k6
X4 + X5 -> X2 + X6 ; k5
";

    #[test]
    fn parses_six_reaction_network() {
        let net = parse_network(HK).unwrap();
        assert_eq!(net.species, vec!["X1", "X2", "X3", "X4", "X5", "X6"]);
        assert_eq!(net.reactions.len(), 6);
        assert_eq!(net.reactions[3].reactant, vec![0, 0, 1, 0, 1, 0]);
    }

    #[test]
    fn coefficients_and_reversible_reactions() {
        let net = parse_network("2 X1 + X2 -> 3X1 ; k1\nX1 <-> 0 ; a, b\n").unwrap();
        assert_eq!(net.reactions[0].reactant, vec![2, 1]);
        assert_eq!(net.reactions[0].product, vec![3, 0]);
        assert_eq!(net.reactions[2].reactant, vec![0, 0]);
        assert_eq!(net.reactions[2].rate, "b");
    }

    #[test]
    fn species_header_fixes_order() {
        let net = parse_network("species: B A\nA -> B ; k\n").unwrap();
        assert_eq!(net.species, vec!["B", "A"]);
        assert!(parse_network("species: A\nA -> C ; k\n").is_err());
    }

    #[test]
    fn errors() {
        assert_eq!(
            parse_network("X1 -> X1 ; k1\n"),
            Err(CrnError::NoNetChange { line: 1 })
        );
        assert_eq!(
            parse_network("A -> B ; k\nB -> A ; k\n"),
            Err(CrnError::DuplicateRate {
                line: 2,
                label: "k".into()
            })
        );
        assert!(matches!(
            parse_network("2.5 A -> B ; k\n"),
            Err(CrnError::Malformed { line: 1, column: 1, .. })
        ));
        assert!(matches!(
            parse_network("A => B ; k\n"),
            Err(CrnError::Malformed { line: 1, .. })
        ));
        assert!(matches!(parse_network("A -> B\n"), Err(CrnError::Malformed { .. })));
    }
}
