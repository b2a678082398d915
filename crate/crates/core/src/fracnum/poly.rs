use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use super::{FracError, FracOrder};

/// Values assigned to named parameters.
pub type Bindings = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Known(f64),
    /// `multiplier * <parameter>`
    Unknown { name: String, multiplier: f64 },
}

impl Coefficient {
    pub fn param(name: impl Into<String>) -> Self {
        Coefficient::Unknown {
            name: name.into(),
            multiplier: 1.0,
        }
    }

    pub fn known_value(&self) -> Option<f64> {
        match self {
            Coefficient::Known(v) => Some(*v),
            Coefficient::Unknown { .. } => None,
        }
    }

    pub fn unknown_name(&self) -> Option<&str> {
        match self {
            Coefficient::Known(_) => None,
            Coefficient::Unknown { name, .. } => Some(name),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub coeff: Coefficient,
    pub order: FracOrder,
}

impl Term {
    pub fn new(coeff: Coefficient, order: FracOrder) -> Self {
        Term { coeff, order }
    }

    pub fn known(value: f64, order: FracOrder) -> Self {
        Term::new(Coefficient::Known(value), order)
    }
}

/// A sum of `coefficient * s^order` terms with strictly increasing orders.
///
/// Construction sorts the terms, merges duplicate known orders, and drops
/// known zero coefficients. Unknown terms are kept even if their multiplier
/// would later be bound to zero.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiPolynomial {
    terms: Vec<Term>,
}

impl QuasiPolynomial {
    pub fn new(terms: impl IntoIterator<Item = Term>) -> Result<Self, FracError> {
        let mut terms: Vec<Term> = terms.into_iter().collect();
        let mut names = BTreeSet::new();
        for t in &terms {
            match &t.coeff {
                Coefficient::Known(v) if !v.is_finite() => {
                    return Err(FracError::NonFinite(format!("coefficient of s^{}", t.order)))
                }
                Coefficient::Unknown { name, multiplier } => {
                    if name.is_empty() {
                        return Err(FracError::InvalidName(name.clone()));
                    }
                    if !multiplier.is_finite() || *multiplier == 0.0 {
                        return Err(FracError::BadMultiplier(name.clone()));
                    }
                    if !names.insert(name.clone()) {
                        return Err(FracError::DuplicateUnknown(name.clone()));
                    }
                }
                _ => {}
            }
        }
        // Stable sort keeps the caller's order among equal orders for the merge below.
        terms.sort_by_key(|t| t.order);
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(prev) if prev.order == t.order => match (&mut prev.coeff, &t.coeff) {
                    (Coefficient::Known(a), Coefficient::Known(b)) => *a += *b,
                    _ => return Err(FracError::AmbiguousOrder(t.order.to_string())),
                },
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != Coefficient::Known(0.0));
        if merged.is_empty() {
            return Err(FracError::ZeroPolynomial);
        }
        Ok(QuasiPolynomial { terms: merged })
    }

    /// Fully known polynomial from `(coefficient, order)` pairs.
    pub fn from_known(pairs: &[(f64, FracOrder)]) -> Result<Self, FracError> {
        Self::new(pairs.iter().map(|&(c, o)| Term::known(c, o)))
    }

    /// The constant polynomial `1`.
    pub fn one() -> Self {
        QuasiPolynomial {
            terms: vec![Term::known(1.0, FracOrder::ZERO)],
        }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Largest order present.
    pub fn degree(&self) -> FracOrder {
        self.terms.last().map(|t| t.order).unwrap_or(FracOrder::ZERO)
    }

    pub fn top_term(&self) -> &Term {
        self.terms.last().expect("quasi-polynomial has at least one term")
    }

    pub fn constant_term(&self) -> Option<&Term> {
        self.terms.first().filter(|t| t.order.is_zero())
    }

    pub fn term_with_unknown(&self, name: &str) -> Option<&Term> {
        self.terms
            .iter()
            .find(|t| t.coeff.unknown_name() == Some(name))
    }

    /// Names of unknown coefficients, in ascending order of their term.
    pub fn unknowns(&self) -> Vec<&str> {
        self.terms
            .iter()
            .filter_map(|t| t.coeff.unknown_name())
            .collect()
    }

    pub fn is_fully_known(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.known_value().is_some())
    }

    /// Known `(coefficient, order)` pairs; `None` if any unknown remains.
    pub fn known_terms(&self) -> Option<Vec<(f64, FracOrder)>> {
        self.terms
            .iter()
            .map(|t| t.coeff.known_value().map(|c| (c, t.order)))
            .collect()
    }

    /// Multiplies every coefficient (known values and multipliers) by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, FracError> {
        if !factor.is_finite() || factor == 0.0 {
            return Err(FracError::NonFinite(format!("scale factor {factor}")));
        }
        Self::new(self.terms.iter().map(|t| {
            let coeff = match &t.coeff {
                Coefficient::Known(v) => Coefficient::Known(v * factor),
                Coefficient::Unknown { name, multiplier } => Coefficient::Unknown {
                    name: name.clone(),
                    multiplier: multiplier * factor,
                },
            };
            Term::new(coeff, t.order)
        }))
    }

    /// Resolves every unknown; fails naming the first parameter without a binding.
    pub fn substitute(&self, bindings: &Bindings) -> Result<Self, FracError> {
        if let Some(missing) = self.unknowns().into_iter().find(|n| !bindings.contains_key(*n)) {
            return Err(FracError::MissingBinding(missing.to_string()));
        }
        self.bind(bindings)
    }

    /// Resolves the unknowns present in `bindings`, leaving the rest symbolic.
    pub fn bind(&self, bindings: &Bindings) -> Result<Self, FracError> {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let coeff = match &t.coeff {
                Coefficient::Unknown { name, multiplier } => match bindings.get(name) {
                    Some(v) if !v.is_finite() => {
                        return Err(FracError::NonFinite(format!("binding {name} = {v}")))
                    }
                    Some(v) => Coefficient::Known(multiplier * v),
                    None => t.coeff.clone(),
                },
                known => known.clone(),
            };
            out.push(Term::new(coeff, t.order));
        }
        Self::new(out)
    }

    /// Evaluates at `s` on the principal branch. `None` if any unknown remains.
    pub fn eval(&self, s: Complex64) -> Option<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let c = t.coeff.known_value()?;
            let power = if t.order.is_zero() {
                Complex64::new(1.0, 0.0)
            } else if s == Complex64::new(0.0, 0.0) {
                Complex64::new(0.0, 0.0)
            } else {
                s.powf(t.order.value())
            };
            acc += power * c;
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(s: &str) -> FracOrder {
        s.parse().unwrap()
    }

    fn basset() -> QuasiPolynomial {
        QuasiPolynomial::new([
            Term::new(Coefficient::param("a"), ord("1")),
            Term::new(Coefficient::param("b"), ord("0.5")),
            Term::new(Coefficient::param("c"), ord("0")),
        ])
        .unwrap()
    }

    fn bindings(pairs: &[(&str, f64)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn sorted_and_merged() {
        let qp = QuasiPolynomial::from_known(&[(2.0, ord("1")), (1.0, ord("0")), (3.0, ord("1"))])
            .unwrap();
        assert_eq!(
            qp.terms(),
            &[Term::known(1.0, ord("0")), Term::known(5.0, ord("1"))]
        );
        assert_eq!(qp.degree(), ord("1"));
    }

    #[test]
    fn zero_terms_dropped_and_cancellation() {
        let qp = QuasiPolynomial::from_known(&[(0.0, ord("2")), (1.0, ord("0"))]).unwrap();
        assert_eq!(qp.terms().len(), 1);
        let qp = QuasiPolynomial::from_known(&[(1.0, ord("1")), (-1.0, ord("1")), (4.0, ord("0"))])
            .unwrap();
        assert_eq!(qp.terms(), &[Term::known(4.0, ord("0"))]);
        assert!(matches!(
            QuasiPolynomial::from_known(&[(0.0, ord("1"))]),
            Err(FracError::ZeroPolynomial)
        ));
    }

    #[test]
    fn construction_errors() {
        let dup = QuasiPolynomial::new([
            Term::new(Coefficient::param("a"), ord("1")),
            Term::known(2.0, ord("1")),
        ]);
        assert!(matches!(dup, Err(FracError::AmbiguousOrder(_))));
        let names = QuasiPolynomial::new([
            Term::new(Coefficient::param("a"), ord("1")),
            Term::new(Coefficient::param("a"), ord("0")),
        ]);
        assert!(matches!(names, Err(FracError::DuplicateUnknown(_))));
        let mult = QuasiPolynomial::new([Term::new(
            Coefficient::Unknown { name: "a".into(), multiplier: 0.0 },
            ord("1"),
        )]);
        assert!(matches!(mult, Err(FracError::BadMultiplier(_))));
        assert!(QuasiPolynomial::from_known(&[(f64::NAN, ord("1"))]).is_err());
    }

    #[test]
    fn substitute_stable_basset_point() {
        let qp = basset()
            .substitute(&bindings(&[("a", -3.0), ("b", -2.0), ("c", -4.0)]))
            .unwrap();
        assert_eq!(
            qp.known_terms().unwrap(),
            vec![(-4.0, ord("0")), (-2.0, ord("0.5")), (-3.0, ord("1"))]
        );
    }

    #[test]
    fn substitute_drops_zero_leading_term() {
        let qp = basset()
            .substitute(&bindings(&[("a", 0.0), ("b", 1.0), ("c", 1.0)]))
            .unwrap();
        assert_eq!(qp.known_terms().unwrap(), vec![(1.0, ord("0")), (1.0, ord("0.5"))]);
        assert_eq!(qp.degree(), ord("0.5"));
    }

    #[test]
    fn substitute_errors() {
        let err = basset()
            .substitute(&bindings(&[("a", 1.0), ("c", 1.0)]))
            .unwrap_err();
        assert_eq!(err, FracError::MissingBinding("b".into()));
        let err = basset()
            .substitute(&bindings(&[("a", 1.0), ("b", f64::INFINITY), ("c", 1.0)]))
            .unwrap_err();
        assert!(matches!(err, FracError::NonFinite(_)));
    }

    #[test]
    fn partial_bind_keeps_unknowns() {
        let qp = basset().bind(&bindings(&[("b", -2.0)])).unwrap();
        assert_eq!(qp.unknowns(), vec!["c", "a"]);
        assert!(!qp.is_fully_known());
    }

    #[test]
    fn multiplier_applies() {
        let qp = QuasiPolynomial::new([
            Term::new(Coefficient::Unknown { name: "k".into(), multiplier: -2.5 }, ord("1")),
            Term::known(1.0, ord("0")),
        ])
        .unwrap();
        let bound = qp.substitute(&bindings(&[("k", 2.0)])).unwrap();
        assert_eq!(bound.top_term().coeff, Coefficient::Known(-5.0));
    }

    #[test]
    fn eval_principal_branch() {
        let qp = QuasiPolynomial::from_known(&[(1.0, ord("0.5")), (1.0, ord("0"))]).unwrap();
        let v = qp.eval(Complex64::new(4.0, 0.0)).unwrap();
        assert!((v - Complex64::new(3.0, 0.0)).norm() < 1e-14);
        let v = qp.eval(Complex64::new(0.0, 1.0)).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v - Complex64::new(1.0 + h, h)).norm() < 1e-14);
        assert!(basset().eval(Complex64::new(1.0, 0.0)).is_none());
    }
}
