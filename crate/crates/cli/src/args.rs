//! Parsers for the compound flag values.

use fracstab_core::fracnum::parse_ratio;
use fracstab_core::{FracOrder, Window};

/// `name=value`.
pub fn binding(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got {s:?}"))?;
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| format!("{value:?} is not a number"))?;
    if !v.is_finite() {
        return Err(format!("{value:?} is not finite"));
    }
    Ok((name.trim().to_string(), v))
}

/// `p1,p2`.
pub fn plane(s: &str) -> Result<(String, String), String> {
    match s.split(',').map(str::trim).collect::<Vec<_>>()[..] {
        [a, b] if !a.is_empty() && !b.is_empty() && a != b => Ok((a.to_string(), b.to_string())),
        _ => Err(format!("expected two distinct names p1,p2, got {s:?}")),
    }
}

fn range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected lo:hi, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad number {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad number {hi:?}"))?;
    Ok((lo, hi))
}

/// `x0:x1,y0:y1`.
pub fn window(s: &str) -> Result<Window, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected x0:x1,y0:y1, got {s:?}"))?;
    Window::new(range(x)?, range(y)?)
        .ok_or_else(|| format!("window {s:?} needs finite bounds with lo < hi"))
}

/// `n1xn2` or a single `n` for a square grid.
pub fn resolution(s: &str) -> Result<(usize, usize), String> {
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| format!("bad grid size {t:?}"))
    };
    match s.split_once(['x', 'X']) {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

/// `lo:hi:count`.
pub fn omega(s: &str) -> Result<OmegaSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(format!("expected lo:hi:count, got {s:?}"));
    };
    let lo: f64 = lo.parse().map_err(|_| format!("bad number {lo:?}"))?;
    let hi: f64 = hi.parse().map_err(|_| format!("bad number {hi:?}"))?;
    let count: usize = count.parse().map_err(|_| format!("bad count {count:?}"))?;
    if !(lo > 0.0 && hi > lo && hi.is_finite() && count >= 2) {
        return Err(format!("need 0 < lo < hi and count >= 2, got {s:?}"));
    }
    Ok(OmegaSpec { lo, hi, count })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub start: String,
    pub stop: String,
    pub step: String,
}

/// `name:start:stop:step`.
pub fn sweep(s: &str) -> Result<SweepSpec, String> {
    let parts: Vec<&str> = s.split(':').map(str::trim).collect();
    let [name, start, stop, step] = parts[..] else {
        return Err(format!("expected name:start:stop:step, got {s:?}"));
    };
    if name.is_empty() {
        return Err("sweep name is empty".into());
    }
    Ok(SweepSpec {
        name: name.to_string(),
        start: start.to_string(),
        stop: stop.to_string(),
        step: step.to_string(),
    })
}

/// Largest sweep length accepted.
const MAX_SWEEP: usize = 10_000;

impl SweepSpec {
    /// Exact order values `start, start + step, ...` not exceeding `stop`.
    pub fn orders(&self) -> Result<Vec<FracOrder>, String> {
        let ratio = |t: &str| parse_ratio(t).map_err(|e| e.to_string());
        let (a, b, c) = (ratio(&self.start)?, ratio(&self.stop)?, ratio(&self.step)?);
        if c.0 == 0 {
            return Err("sweep step must be positive".into());
        }
        let den = [a.1, b.1, c.1]
            .iter()
            .fold(1u128, |l, &d| num_lcm(l, d as u128));
        let on = |(n, d): (u64, u64)| n as u128 * (den / d as u128);
        let (start, stop, step) = (on(a), on(b), on(c));
        if stop < start {
            return Err("sweep stop is below start".into());
        }
        let count = (stop - start) / step + 1;
        if count > MAX_SWEEP as u128 {
            return Err(format!("sweep has {count} values; at most {MAX_SWEEP} allowed"));
        }
        (0..count)
            .map(|k| {
                let num = start + k * step;
                let g = num_gcd(num, den);
                let (n, d) = (num / g, den / g);
                if n > u64::MAX as u128 || d > u64::MAX as u128 {
                    return Err(format!("order {n}/{d} is too large"));
                }
                FracOrder::new(n as u64, d as u64).map_err(|e| e.to_string())
            })
            .collect()
    }

    /// Coefficient values `start + k * step` not exceeding `stop`.
    pub fn values(&self) -> Result<Vec<f64>, String> {
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number {t:?}"));
        let (start, stop, step) = (num(&self.start)?, num(&self.stop)?, num(&self.step)?);
        if !(step > 0.0 && start.is_finite() && stop.is_finite()) {
            return Err("sweep needs finite bounds and a positive step".into());
        }
        if stop < start {
            return Err("sweep stop is below start".into());
        }
        let count = ((stop - start) / step * (1.0 + 1e-12)).floor() + 1.0;
        if count > MAX_SWEEP as f64 {
            return Err(format!("sweep has {count} values; at most {MAX_SWEEP} allowed"));
        }
        Ok((0..count as usize).map(|k| start + k as f64 * step).collect())
    }
}

fn num_gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn num_lcm(a: u128, b: u128) -> u128 {
    a / num_gcd(a, b) * b
}
