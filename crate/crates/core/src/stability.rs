//! Commensurate-order transform and the Matignon sector test.
//!
//! A fully known quasi-polynomial whose orders are integer multiples of a
//! base `alpha` becomes an ordinary polynomial in `w = s^alpha`. The system is
//! stable iff every root `w` satisfies `|arg w| > alpha*pi/2`.

use num_complex::Complex64;
use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::fracnum::{FracError, FracOrder, QuasiPolynomial};
use crate::rootfind::{find_roots, IntPolynomial, RootError, D_MAX};

/// Tolerance on the sector margin separating the three verdicts.
pub const EPS_ARG: f64 = 1e-9;
/// Roots within this distance of zero (relative to the root scale) sit at the origin.
pub const ORIGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("parameter {0} is unbound")]
    Unbound(String),
    #[error(
        "commensurate degree {required} exceeds D_MAX = {max}; \
         use orders with smaller denominators (Q_MAX bounds each denominator)"
    )]
    DegreeOverflow { required: u128, max: usize },
    #[error(transparent)]
    Order(#[from] FracError),
    #[error(transparent)]
    Root(#[from] RootError),
}

/// `P(w)` with `w = s^base`; the coefficient of `w^k` is that of `s^(k*base)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CommensurateForm {
    pub base: FracOrder,
    pub poly: IntPolynomial,
}

/// Largest `alpha` with every order an integer multiple of it:
/// `gcd(numerators) / lcm(denominators)` over the orders on a common denominator.
/// A base above one is reduced to `1/den` so that it also divides one; otherwise
/// a pure `s^2` would look like a simple root at the origin.
pub fn commensurate_base(orders: &[FracOrder]) -> Result<(FracOrder, Vec<u128>), StabilityError> {
    let overflow = |required| StabilityError::DegreeOverflow { required, max: D_MAX };
    let mut lcm: u128 = 1;
    for o in orders {
        lcm = lcm.lcm(&(o.den() as u128));
        if lcm > u64::MAX as u128 {
            return Err(overflow(lcm));
        }
    }
    let scaled: Vec<u128> = orders
        .iter()
        .map(|o| o.num() as u128 * (lcm / o.den() as u128))
        .collect();
    let g = scaled.iter().fold(0u128, |g, &k| g.gcd(&k));
    if g == 0 {
        return Ok((FracOrder::ONE, vec![0; orders.len()]));
    }
    let (mut num, den) = (g / g.gcd(&lcm), lcm / g.gcd(&lcm));
    let mut g = g;
    if num > den {
        g /= num;
        num = 1;
    }
    let powers: Vec<u128> = scaled.iter().map(|k| k / g).collect();
    let base = FracOrder::with_limit(num as u64, den as u64, u64::MAX)?;
    Ok((base, powers))
}

pub fn commensurate(qp: &QuasiPolynomial) -> Result<CommensurateForm, StabilityError> {
    let terms = known(qp)?;
    let orders: Vec<FracOrder> = terms.iter().map(|t| t.1).collect();
    let (base, powers) = commensurate_base(&orders)?;
    let degree = powers.iter().copied().max().unwrap_or(0);
    if degree > D_MAX as u128 {
        return Err(StabilityError::DegreeOverflow {
            required: degree,
            max: D_MAX,
        });
    }
    let mut coeffs = vec![0.0; degree as usize + 1];
    for ((c, _), k) in terms.iter().zip(&powers) {
        coeffs[*k as usize] = *c;
    }
    Ok(CommensurateForm {
        base,
        poly: IntPolynomial::new(coeffs)?,
    })
}

fn known(qp: &QuasiPolynomial) -> Result<Vec<(f64, FracOrder)>, StabilityError> {
    qp.known_terms().ok_or_else(|| {
        StabilityError::Unbound(qp.unknowns().first().copied().unwrap_or_default().to_string())
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictClass {
    Stable,
    Marginal,
    Unstable,
}

impl VerdictClass {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictClass::Stable => "stable",
            VerdictClass::Marginal => "marginal",
            VerdictClass::Unstable => "unstable",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootWitness {
    pub root: Complex64,
    pub multiplicity: usize,
    /// `|arg root|`; zero for a root at the origin.
    pub arg: f64,
    pub at_origin: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilityVerdict {
    pub class: VerdictClass,
    /// `min |arg w| - alpha*pi/2` over the roots (radians). Infinite when
    /// there are no roots.
    pub margin: f64,
    pub witnesses: Vec<RootWitness>,
    pub base_order: FracOrder,
}

impl StabilityVerdict {
    /// Roots (with multiplicity) strictly inside the unstable sector, plus
    /// roots at the origin.
    pub fn unstable_roots(&self) -> usize {
        let half = self.base_order.value() * std::f64::consts::FRAC_PI_2;
        self.witnesses
            .iter()
            .filter(|w| w.at_origin || w.arg - half < -EPS_ARG)
            .map(|w| w.multiplicity)
            .sum()
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct View<'a> {
            class: &'a str,
            margin: Option<f64>,
            base_order: String,
            roots: Vec<[f64; 2]>,
        }
        let roots = self
            .witnesses
            .iter()
            .flat_map(|w| std::iter::repeat([w.root.re, w.root.im]).take(w.multiplicity))
            .collect();
        let view = View {
            class: self.class.as_str(),
            margin: self.margin.is_finite().then_some(self.margin),
            base_order: self.base_order.to_string(),
            roots,
        };
        serde_json::to_string_pretty(&view).expect("verdict serializes")
    }
}

pub fn matignon_check(qp: &QuasiPolynomial) -> Result<StabilityVerdict, StabilityError> {
    let form = commensurate(qp)?;
    classify(&form)
}

/// Verdict for an already transformed polynomial.
pub fn classify(form: &CommensurateForm) -> Result<StabilityVerdict, StabilityError> {
    let half = form.base.value() * std::f64::consts::FRAC_PI_2;
    if form.poly.degree() == 0 {
        return Ok(StabilityVerdict {
            class: VerdictClass::Stable,
            margin: f64::INFINITY,
            witnesses: Vec::new(),
            base_order: form.base,
        });
    }
    let roots = find_roots(&form.poly)?;
    let scale = roots
        .roots
        .iter()
        .map(|r| r.value.norm())
        .fold(1.0f64, f64::max);
    let witnesses: Vec<RootWitness> = roots
        .roots
        .iter()
        .map(|r| {
            let at_origin = r.value.norm() <= ORIGIN_TOL * scale;
            RootWitness {
                root: r.value,
                multiplicity: r.multiplicity,
                arg: if at_origin { 0.0 } else { r.value.arg().abs() },
                at_origin,
            }
        })
        .collect();

    let others = witnesses
        .iter()
        .filter(|w| !w.at_origin)
        .map(|w| w.arg - half)
        .fold(f64::INFINITY, f64::min);
    let origin: usize = witnesses
        .iter()
        .filter(|w| w.at_origin)
        .map(|w| w.multiplicity)
        .sum();

    let (class, margin) = if origin == 0 {
        let class = if others > EPS_ARG {
            VerdictClass::Stable
        } else if others >= -EPS_ARG {
            VerdictClass::Marginal
        } else {
            VerdictClass::Unstable
        };
        (class, others)
    } else if origin == 1 && others > EPS_ARG {
        (VerdictClass::Marginal, 0.0)
    } else {
        (VerdictClass::Unstable, others.min(-half))
    };
    Ok(StabilityVerdict {
        class,
        margin,
        witnesses,
        base_order: form.base,
    })
}
