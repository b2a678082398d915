//! Exact rational exponents of `s`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;

use super::FracError;

/// Largest admissible reduced denominator of an order.
pub const Q_MAX: u64 = 1000;

/// Orders must stay below this value.
pub const ORDER_LIMIT: u64 = 100;

/// A non-negative rational exponent `num/den`, always stored in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FracOrder {
    num: u64,
    den: u64,
}

impl FracOrder {
    pub const ZERO: FracOrder = FracOrder { num: 0, den: 1 };
    pub const ONE: FracOrder = FracOrder { num: 1, den: 1 };

    /// Builds a canonical order, rejecting denominators above [`Q_MAX`].
    pub fn new(num: u64, den: u64) -> Result<Self, FracError> {
        Self::with_limit(num, den, Q_MAX)
    }

    pub fn with_limit(num: u64, den: u64, q_max: u64) -> Result<Self, FracError> {
        if den == 0 {
            return Err(FracError::InvalidOrder(format!("{num}/0")));
        }
        let g = num.gcd(&den);
        let (num, den) = (num / g, den / g);
        if den > q_max {
            return Err(FracError::DenominatorTooLarge { den, max: q_max });
        }
        if (num as u128) >= (ORDER_LIMIT as u128) * (den as u128) {
            return Err(FracError::OrderTooLarge(format!("{num}/{den}")));
        }
        Ok(FracOrder { num, den })
    }

    pub fn integer(n: u64) -> Result<Self, FracError> {
        Self::new(n, 1)
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(self) -> bool {
        self.num == 0
    }

    pub fn is_integer(self) -> bool {
        self.den == 1
    }

    /// Exact `k * self`, if representable.
    pub fn scale(self, k: u64) -> Result<Self, FracError> {
        let num = self
            .num
            .checked_mul(k)
            .ok_or_else(|| FracError::OrderTooLarge(format!("{k}*{self}")))?;
        Self::new(num, self.den)
    }

    /// `cos(pi*order/2)` and `sin(pi*order/2)`, exact at integer orders.
    pub fn half_pi_cis(self) -> (f64, f64) {
        // Period in the order is 4; reduce to a quadrant and an angle in it.
        let r = self.num % (4 * self.den);
        let (quadrant, f) = (r / self.den, r % self.den);
        let (c, s) = if f == 0 {
            (1.0, 0.0)
        } else if 2 * f == self.den {
            (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2)
        } else if 2 * f < self.den {
            let t = std::f64::consts::FRAC_PI_2 * (f as f64 / self.den as f64);
            (t.cos(), t.sin())
        } else {
            let t = std::f64::consts::FRAC_PI_2 * ((self.den - f) as f64 / self.den as f64);
            (t.sin(), t.cos())
        };
        match quadrant {
            0 => (c, s),
            1 => (-s, c),
            2 => (-c, -s),
            _ => (s, -c),
        }
    }
}

impl Default for FracOrder {
    fn default() -> Self {
        FracOrder::ZERO
    }
}

impl Ord for FracOrder {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as u128 * other.den as u128;
        let rhs = other.num as u128 * self.den as u128;
        lhs.cmp(&rhs)
    }
}

impl PartialOrd for FracOrder {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Parses a non-negative exact decimal (`"1.31"`, `"2"`) or a ratio (`"1/3"`)
/// into an unreduced `(numerator, denominator)` pair.
pub fn parse_ratio(text: &str) -> Result<(u64, u64), FracError> {
    let bad = || FracError::InvalidOrder(text.to_string());
    let s = text.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: u64 = digits(n.trim()).ok_or_else(bad)?;
        let d: u64 = digits(d.trim()).ok_or_else(bad)?;
        if d == 0 {
            return Err(bad());
        }
        return Ok((n, d));
    }
    let (int_part, frac_part) = match s.split_once('.') {
        Some((i, f)) => (i, f),
        None => (s, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if frac_part.len() > 18 {
        return Err(bad());
    }
    let int_val = if int_part.is_empty() {
        0
    } else {
        digits(int_part).ok_or_else(bad)?
    };
    let frac_val = if frac_part.is_empty() {
        0
    } else {
        digits(frac_part).ok_or_else(bad)?
    };
    let den = 10u64.pow(frac_part.len() as u32);
    let num = int_val
        .checked_mul(den)
        .and_then(|v| v.checked_add(frac_val))
        .ok_or_else(bad)?;
    Ok((num, den))
}

fn digits(s: &str) -> Option<u64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

impl FromStr for FracOrder {
    type Err = FracError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (num, den) = parse_ratio(s)?;
        FracOrder::new(num, den)
    }
}

impl fmt::Display for FracOrder {
    /// Terminating decimals print as decimals, everything else as `p/q`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = self.den;
        let (mut twos, mut fives) = (0u32, 0u32);
        while d % 2 == 0 {
            d /= 2;
            twos += 1;
        }
        while d % 5 == 0 {
            d /= 5;
            fives += 1;
        }
        if d != 1 {
            return write!(f, "{}/{}", self.num, self.den);
        }
        let places = twos.max(fives);
        if places == 0 {
            return write!(f, "{}", self.num);
        }
        let scale = 10u128.pow(places);
        let scaled = self.num as u128 * scale / self.den as u128;
        let int = scaled / scale;
        let frac = scaled % scale;
        let frac = format!("{:0width$}", frac, width = places as usize);
        write!(f, "{}.{}", int, frac.trim_end_matches('0'))
    }
}
