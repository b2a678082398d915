//! All complex roots of a real polynomial.
//!
//! Simultaneous Aberth–Ehrlich iteration started from Newton-polygon radii.
//! Points outside the unit disk are evaluated through the reversed
//! polynomial so that high degrees never overflow.

use std::cmp::Ordering;

use num_complex::Complex64;
use thiserror::Error;

/// Largest supported degree.
pub const D_MAX: usize = 2048;

/// Leading coefficients at or below this fraction of the largest are dropped.
const TRIM_TOL: f64 = 1e-14;
/// Roots closer than this (relative to `max(1, |z|)`) merge into one cluster.
const CLUSTER_TOL: f64 = 1e-7;
/// Acceptance bound on the relative backward error.
const RESIDUAL_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 800;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RootError {
    #[error("polynomial has degree 0; nothing to solve")]
    ZeroDegree,
    #[error("all coefficients are zero")]
    ZeroPolynomial,
    #[error("coefficient {0} is not finite")]
    NonFinite(usize),
    #[error("degree {degree} exceeds D_MAX = {max}")]
    DegreeTooLarge { degree: usize, max: usize },
    #[error("no convergence after {iterations} iterations (worst residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Real coefficients, index = power. The leading coefficient is nonzero.
#[derive(Clone, Debug, PartialEq)]
pub struct IntPolynomial {
    coeffs: Vec<f64>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self, RootError> {
        if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
            return Err(RootError::NonFinite(i));
        }
        let max = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
        if max == 0.0 {
            return Err(RootError::ZeroPolynomial);
        }
        while let Some(&last) = coeffs.last() {
            if last.abs() <= TRIM_TOL * max {
                coeffs.pop();
            } else {
                break;
            }
        }
        let degree = coeffs.len() - 1;
        if degree > D_MAX {
            return Err(RootError::DegreeTooLarge { degree, max: D_MAX });
        }
        Ok(IntPolynomial { coeffs })
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn scaled(&self, factor: f64) -> Result<Self, RootError> {
        IntPolynomial::new(self.coeffs.iter().map(|c| c * factor).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    /// Distinct roots sorted by real part, then imaginary part.
    pub roots: Vec<Root>,
    /// Worst relative backward error `|p(z)| / sum |c_k| |z|^k` on the
    /// max-norm scaled coefficients.
    pub residual: f64,
}

impl RootSet {
    /// Number of roots counted with multiplicity.
    pub fn count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    /// Every root repeated by its multiplicity.
    pub fn expanded(&self) -> Vec<Complex64> {
        self.roots
            .iter()
            .flat_map(|r| std::iter::repeat(r.value).take(r.multiplicity))
            .collect()
    }
}

pub fn find_roots(p: &IntPolynomial) -> Result<RootSet, RootError> {
    let n = p.degree();
    if n == 0 {
        return Err(RootError::ZeroDegree);
    }
    let max = p.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let zeros = p.coeffs.iter().take_while(|&&c| c == 0.0).count();
    let coeffs: Vec<f64> = p.coeffs[zeros..].iter().map(|c| c / max).collect();

    let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
    match coeffs.len() - 1 {
        0 => {}
        1 => roots.push(Complex64::new(-coeffs[0] / coeffs[1], 0.0)),
        2 => roots.extend(quadratic(coeffs[2], coeffs[1], coeffs[0])),
        _ => roots.extend(aberth(&coeffs)?),
    }

    let residual = roots[zeros..]
        .iter()
        .map(|&z| backward_error(&coeffs, z))
        .fold(0.0, f64::max);
    if residual > RESIDUAL_TOL {
        return Err(RootError::NoConvergence {
            iterations: MAX_ITERATIONS,
            residual,
        });
    }

    symmetrize(&mut roots);
    let mut roots = cluster(roots);
    roots.sort_by(|a, b| cmp_complex(&a.value, &b.value));
    Ok(RootSet { roots, residual })
}

fn cmp_complex(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

/// Roots of `a w^2 + b w + c` without cancellation.
fn quadratic(a: f64, b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let q = if q == 0.0 { -0.5 * disc.sqrt() } else { q };
        [Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a).abs();
        [Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// `|p(z)| / sum |c_k| |z|^k`, evaluated without overflow.
fn backward_error(coeffs: &[f64], z: Complex64) -> f64 {
    let e = evaluate(coeffs, z);
    if e.bound == 0.0 {
        0.0
    } else {
        e.value_abs / e.bound
    }
}

struct Evaluation {
    /// Newton correction `p(z)/p'(z)`.
    ratio: Complex64,
    value_abs: f64,
    bound: f64,
}

/// Evaluates `p`, `p'`, and the magnitude bound at `z`. For `|z| > 1` all three
/// come from the reversed polynomial and share a common `|z|^n` factor, which
/// cancels in both the Newton ratio and the backward error.
fn evaluate(coeffs: &[f64], z: Complex64) -> Evaluation {
    let n = coeffs.len() - 1;
    let zero = Complex64::new(0.0, 0.0);
    if z.norm() <= 1.0 {
        let (mut p, mut dp) = (zero, zero);
        let mut bound = 0.0;
        let r = z.norm();
        for &c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
            bound = bound * r + c.abs();
        }
        Evaluation {
            ratio: p / dp,
            value_abs: p.norm(),
            bound,
        }
    } else {
        let y = z.inv();
        let r = y.norm();
        let (mut q, mut dq) = (zero, zero);
        let mut bound = 0.0;
        for &c in coeffs.iter() {
            dq = dq * y + q;
            q = q * y + c;
            bound = bound * r + c.abs();
        }
        // p(z) = z^n q(y); p'(z) = z^(n-1) (n q(y) - y q'(y)).
        let denom = q * n as f64 - y * dq;
        Evaluation {
            ratio: z * q / denom,
            value_abs: q.norm(),
            bound,
        }
    }
}

/// Starting points on circles whose radii come from the upper convex hull of
/// `(k, ln|c_k|)`. Each hull edge spanning `m` powers contributes `m` points.
fn initial_guesses(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let pts: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(k, c)| (k, c.abs().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::with_capacity(pts.len());
    for &p in &pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 as f64 - o.0 as f64) * (p.1 - o.1) - (a.1 - o.1) * (p.0 as f64 - o.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    const SIGMA: f64 = 0.7;
    let tau = std::f64::consts::TAU;
    let mut guesses = Vec::with_capacity(n);
    for (seg, w) in hull.windows(2).enumerate() {
        let (k0, l0) = w[0];
        let (k1, l1) = w[1];
        let m = k1 - k0;
        let radius = ((l0 - l1) / m as f64).exp();
        for j in 0..m {
            let theta = tau * j as f64 / m as f64 + tau * seg as f64 / n as f64 + SIGMA;
            guesses.push(Complex64::from_polar(radius, theta));
        }
    }
    guesses
}

fn aberth(coeffs: &[f64]) -> Result<Vec<Complex64>, RootError> {
    let n = coeffs.len() - 1;
    let mut z = initial_guesses(coeffs);
    debug_assert_eq!(z.len(), n);
    let mut done = vec![false; n];
    let stop = 4.0 * (n as f64 + 1.0) * f64::EPSILON;
    for _ in 0..MAX_ITERATIONS {
        let mut active = false;
        for i in 0..n {
            if done[i] {
                continue;
            }
            active = true;
            let e = evaluate(coeffs, z[i]);
            if e.value_abs <= stop * e.bound {
                done[i] = true;
                continue;
            }
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    sum += (z[i] - zj).inv();
                }
            }
            let step = e.ratio / (Complex64::new(1.0, 0.0) - e.ratio * sum);
            if step.re.is_finite() && step.im.is_finite() {
                z[i] -= step;
                if step.norm() <= f64::EPSILON * z[i].norm() {
                    done[i] = true;
                }
            } else {
                // Derivative vanished or two iterates collided; nudge off the spot.
                let r = z[i].norm().max(1e-3);
                z[i] += Complex64::from_polar(1e-6 * r, 1.0 + i as f64);
            }
        }
        if !active {
            return Ok(z);
        }
    }
    let residual = z
        .iter()
        .map(|&zi| backward_error(coeffs, zi))
        .fold(0.0, f64::max);
    if residual <= RESIDUAL_TOL {
        Ok(z)
    } else {
        Err(RootError::NoConvergence {
            iterations: MAX_ITERATIONS,
            residual,
        })
    }
}

/// Snaps near-real roots to the axis and averages conjugate partners so the
/// output is exactly closed under conjugation.
fn symmetrize(roots: &mut [Complex64]) {
    const REAL_TOL: f64 = 1e-10;
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (i, z) in roots.iter_mut().enumerate() {
        if z.im.abs() <= REAL_TOL * z.norm().max(1.0) {
            z.im = 0.0;
        } else if z.im > 0.0 {
            upper.push(i);
        } else {
            lower.push(i);
        }
    }
    let mut used = vec![false; lower.len()];
    for &u in &upper {
        let target = roots[u].conj();
        let best = lower
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .min_by(|(_, &a), (_, &b)| {
                (roots[a] - target)
                    .norm()
                    .total_cmp(&(roots[b] - target).norm())
            });
        if let Some((k, &l)) = best {
            used[k] = true;
            let avg = (roots[u] + roots[l].conj()) * 0.5;
            roots[u] = avg;
            roots[l] = avg.conj();
        }
    }
}

/// Single-linkage clustering; each cluster becomes its centroid.
fn cluster(mut roots: Vec<Complex64>) -> Vec<Root> {
    roots.sort_by(cmp_complex);
    let n = roots.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let tol = CLUSTER_TOL * roots[i].norm().max(roots[j].norm()).max(1.0);
            if roots[j].re - roots[i].re > tol {
                break;
            }
            if (roots[i] - roots[j]).norm() <= tol {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut out: Vec<(usize, Complex64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match out.iter_mut().find(|(root, _, _)| *root == r) {
            Some((_, sum, count)) => {
                *sum += roots[i];
                *count += 1;
            }
            None => out.push((r, roots[i], 1)),
        }
    }
    out.into_iter()
        .map(|(_, sum, count)| {
            let mut value = sum / count as f64;
            if value.im.abs() <= f64::EPSILON * value.norm() {
                value.im = 0.0;
            }
            Root {
                value,
                multiplicity: count,
            }
        })
        .collect()
}
