//! Fractional orders, quasi-polynomials, and system definitions.

mod config;
mod order;
mod poly;

pub use config::{parse_system, parse_system_with_view, serialize_system, ConfigError, ViewHints};
pub use order::{parse_ratio, FracOrder, ORDER_LIMIT, Q_MAX};
pub use poly::{Bindings, Coefficient, QuasiPolynomial, Term};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FracError {
    #[error("invalid order {0:?}: expected a non-negative decimal like \"0.5\" or a ratio like \"1/3\"")]
    InvalidOrder(String),
    #[error("order denominator {den} exceeds Q_MAX = {max}")]
    DenominatorTooLarge { den: u64, max: u64 },
    #[error("order {0} is not below 100")]
    OrderTooLarge(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid parameter name {0:?}")]
    InvalidName(String),
    #[error("multiplier of parameter {0} must be finite and nonzero")]
    BadMultiplier(String),
    #[error("parameter {0} appears in more than one term")]
    DuplicateUnknown(String),
    #[error("order {0} appears more than once with a parameter coefficient")]
    AmbiguousOrder(String),
    #[error("polynomial has no nonzero terms")]
    ZeroPolynomial,
    #[error("no binding for parameter {0}")]
    MissingBinding(String),
    #[error("numerator degree {numerator} must be below denominator degree {denominator}")]
    ImproperSystem { numerator: String, denominator: String },
}

/// `G(s) = gain * N(s) / D(s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FracSystem {
    denominator: QuasiPolynomial,
    numerator: QuasiPolynomial,
    gain: f64,
}

impl FracSystem {
    /// The numerator must have a lower degree than the denominator; a static
    /// system (both of degree zero) is also accepted.
    pub fn new(
        denominator: QuasiPolynomial,
        numerator: Option<QuasiPolynomial>,
        gain: f64,
    ) -> Result<Self, FracError> {
        if !gain.is_finite() {
            return Err(FracError::NonFinite(format!("gain {gain}")));
        }
        let numerator = numerator.unwrap_or_else(QuasiPolynomial::one);
        let (dn, dd) = (numerator.degree(), denominator.degree());
        if !(dn < dd || (dn.is_zero() && dd.is_zero())) {
            return Err(FracError::ImproperSystem {
                numerator: dn.to_string(),
                denominator: dd.to_string(),
            });
        }
        Ok(FracSystem {
            denominator,
            numerator,
            gain,
        })
    }

    pub fn denominator(&self) -> &QuasiPolynomial {
        &self.denominator
    }

    pub fn numerator(&self) -> &QuasiPolynomial {
        &self.numerator
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// Parameter names across numerator and denominator, sorted and deduplicated.
    pub fn unknowns(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .denominator
            .unknowns()
            .into_iter()
            .chain(self.numerator.unknowns())
            .map(str::to_string)
            .collect();
        names.sort();
        names.dedup();
        names
    }

    pub fn substitute(&self, bindings: &Bindings) -> Result<FracSystem, FracError> {
        FracSystem::new(
            self.denominator.substitute(bindings)?,
            Some(self.numerator.substitute(bindings)?),
            self.gain,
        )
    }
}
