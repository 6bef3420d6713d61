//! Line-oriented model files.
//!
//! ```text
//! family normal
//! + 2.0  0.0  1.0
//! - 1.0  0.25 0.25
//! ```
//!
//! Each component line is `<sign> <weight> <p1> <p2>`; `#` starts a comment.

use std::fmt::Write;

use crate::component::{Component, Family};
use crate::error::ParseError;
use crate::mixture::{SignedMixture, Term};

pub fn parse_model(text: &str) -> Result<SignedMixture, ParseError> {
    let mut family: Option<Family> = None;
    let mut positives = Vec::new();
    let mut negatives = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let err = |message: String| ParseError { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split_whitespace().collect();
        match family {
            None => {
                if fields.len() != 2 || fields[0] != "family" {
                    return Err(err("expected 'family normal' or 'family gamma'".into()));
                }
                family = Some(fields[1].parse().map_err(err)?);
            }
            Some(fam) => {
                if fields.len() != 4 {
                    return Err(err(format!("expected 4 fields, found {}", fields.len())));
                }
                let num = |s: &str| -> Result<f64, ParseError> {
                    let v: f64 = s.parse().map_err(|_| err(format!("bad number '{s}'")))?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(err(format!("non-finite number '{s}'")))
                    }
                };
                let weight = num(fields[1])?;
                if weight <= 0.0 {
                    return Err(err(format!("weight {weight} must be positive")));
                }
                let comp = Component::try_new(fam, num(fields[2])?, num(fields[3])?)
                    .map_err(|e| err(e.to_string()))?;
                let term = Term::new(weight, comp);
                match fields[0] {
                    "+" => positives.push(term),
                    "-" => negatives.push(term),
                    s => return Err(err(format!("sign must be '+' or '-', found '{s}'"))),
                }
            }
        }
    }
    if family.is_none() {
        return Err(ParseError {
            line: 0,
            message: "missing family line".into(),
        });
    }
    SignedMixture::new(positives, negatives).map_err(|e| ParseError {
        line: 0,
        message: e.to_string(),
    })
}

/// Serializes a model; numbers use the shortest representation that parses
/// back to the same value.
pub fn write_model(model: &SignedMixture) -> String {
    let mut out = format!("family {}\n", model.family());
    let mut line = |sign: char, t: &Term| {
        let _ = writeln!(
            out,
            "{sign} {:?} {:?} {:?}",
            t.weight,
            t.comp.p1(),
            t.comp.p2()
        );
    };
    for t in model.positives() {
        line('+', t);
    }
    for t in model.negatives() {
        line('-', t);
    }
    out
}
