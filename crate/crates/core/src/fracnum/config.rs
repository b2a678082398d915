//! System definition files.
//!
//! ```toml
//! gain = 1.0
//!
//! [[denominator]]
//! coeff = { param = "a", mult = 1.0 }
//! order = "1.31"
//!
//! [[denominator]]
//! coeff = 1.69
//! order = "0"
//! ```
//!
//! `numerator` uses the same term layout and defaults to the constant `1`.
//! An optional `[view]` table suggests a plot plane, window and grid:
//!
//! ```toml
//! [view]
//! plane = ["a", "c"]
//! window = [[-30000.0, 30000.0], [-10.0, 10.0]]
//! resolution = [256, 256]
//! ```

use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use super::{Coefficient, FracError, FracOrder, FracSystem, QuasiPolynomial, Term};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{field}: {source}")]
    Invalid {
        field: String,
        #[source]
        source: FracError,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDoc {
    denominator: Vec<TermDoc>,
    numerator: Option<Vec<TermDoc>>,
    gain: Option<f64>,
    view: Option<ViewHints>,
}

/// Display defaults carried by a system file.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewHints {
    pub plane: Option<(String, String)>,
    pub window: Option<[[f64; 2]; 2]>,
    pub resolution: Option<(usize, usize)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    coeff: CoeffDoc,
    order: OrderDoc,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoeffDoc {
    Value(f64),
    Param(ParamDoc),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamDoc {
    param: String,
    #[serde(default = "unit")]
    mult: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OrderDoc {
    Text(String),
    Int(u64),
}

/// Parses and validates a system definition.
pub fn parse_system(text: &str) -> Result<FracSystem, ConfigError> {
    parse_system_with_view(text).map(|(sys, _)| sys)
}

/// Like [`parse_system`], also returning the `[view]` table.
pub fn parse_system_with_view(text: &str) -> Result<(FracSystem, ViewHints), ConfigError> {
    let doc: SystemDoc = toml::from_str(text).map_err(|e| {
        let (line, column) = e
            .span()
            .map(|span| line_col(text, span.start))
            .unwrap_or((0, 0));
        ConfigError::Syntax {
            line,
            column,
            message: e.message().trim().to_string(),
        }
    })?;
    let denominator = build_poly("denominator", &doc.denominator)?;
    let numerator = doc
        .numerator
        .as_deref()
        .map(|terms| build_poly("numerator", terms))
        .transpose()?;
    let sys = FracSystem::new(denominator, numerator, doc.gain.unwrap_or(1.0)).map_err(|source| {
        ConfigError::Invalid {
            field: "system".into(),
            source,
        }
    })?;
    Ok((sys, doc.view.unwrap_or_default()))
}

fn build_poly(section: &str, docs: &[TermDoc]) -> Result<QuasiPolynomial, ConfigError> {
    let mut terms = Vec::with_capacity(docs.len());
    for (i, t) in docs.iter().enumerate() {
        let invalid = |field: &str, source| ConfigError::Invalid {
            field: format!("{section}[{i}].{field}"),
            source,
        };
        let order = match &t.order {
            OrderDoc::Text(s) => s.parse::<FracOrder>(),
            OrderDoc::Int(n) => FracOrder::integer(*n),
        }
        .map_err(|e| invalid("order", e))?;
        let coeff = match &t.coeff {
            CoeffDoc::Value(v) => Coefficient::Known(*v),
            CoeffDoc::Param(p) => {
                if !valid_identifier(&p.param) {
                    return Err(invalid("coeff.param", FracError::InvalidName(p.param.clone())));
                }
                Coefficient::Unknown {
                    name: p.param.clone(),
                    multiplier: p.mult,
                }
            }
        };
        terms.push(Term::new(coeff, order));
    }
    QuasiPolynomial::new(terms).map_err(|source| ConfigError::Invalid {
        field: section.to_string(),
        source,
    })
}

fn valid_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

/// Canonical, byte-stable text form; terms ascend by order and floats use the
/// shortest representation that round-trips.
pub fn serialize_system(sys: &FracSystem) -> String {
    let mut out = String::new();
    writeln!(out, "gain = {:?}", sys.gain()).unwrap();
    write_terms(&mut out, "denominator", sys.denominator());
    write_terms(&mut out, "numerator", sys.numerator());
    out
}

fn write_terms(out: &mut String, section: &str, qp: &QuasiPolynomial) {
    for t in qp.terms() {
        writeln!(out, "\n[[{section}]]").unwrap();
        match &t.coeff {
            Coefficient::Known(v) => writeln!(out, "coeff = {v:?}").unwrap(),
            Coefficient::Unknown { name, multiplier } => {
                writeln!(out, "coeff = {{ param = \"{name}\", mult = {multiplier:?} }}").unwrap()
            }
        }
        writeln!(out, "order = \"{}\"", t.order).unwrap();
    }
}
