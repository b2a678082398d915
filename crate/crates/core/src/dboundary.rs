//! D-decomposition boundaries in a plane of two unknown coefficients.
//!
//! Substituting `s = j*omega` splits `D(j*omega)` into real and imaginary
//! parts that are affine in the unknowns. Their common zeros, as `omega`
//! sweeps `(0, inf)`, form the complex root boundary (CRB). The real root
//! boundary (RRB) is where the constant coefficient vanishes and the infinite
//! root boundary (IRB) is where the top coefficient vanishes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::emit::fmt_num;
use crate::fracnum::{Bindings, Coefficient, FracError, FracOrder, QuasiPolynomial};
use crate::plane::{Plane, Window};

/// Relative determinant threshold below which a frequency is skipped.
const SINGULAR_TOL: f64 = 1e-12;
/// Allowed `|D(j*omega)|` relative to the sum of term magnitudes.
const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundaryError {
    #[error("frequency must be positive and finite, got {0}")]
    BadFrequency(f64),
    #[error("{0} unknown parameters remain after binding; at most two are allowed")]
    TooManyUnknowns(usize),
    #[error("parameter {0} does not appear in the polynomial")]
    MissingUnknown(String),
    #[error("unknown parameter {0} is neither bound nor on the plane")]
    StrayUnknown(String),
    #[error("plane axes must be two distinct parameters")]
    SamePlaneAxes,
    #[error("{0} and {1} enter D(jw) proportionally at every frequency; the system is structurally singular")]
    StructurallySingular(String, String),
    #[error("orders must satisfy {0}")]
    InvalidOrders(&'static str),
    #[error(transparent)]
    Poly(#[from] FracError),
}

/// `constant + sum(coefficient * parameter)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AffineForm {
    pub constant: f64,
    pub terms: BTreeMap<String, f64>,
}

impl AffineForm {
    pub fn coefficient(&self, name: &str) -> f64 {
        self.terms.get(name).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, values: &Bindings) -> Option<f64> {
        self.terms.iter().try_fold(self.constant, |acc, (name, k)| {
            values.get(name).map(|v| acc + k * v)
        })
    }
}

/// Real and imaginary parts of `D(j*omega)` as affine forms in the unknowns
/// that remain after `bindings`.
pub fn eval_boundary_parts(
    qp: &QuasiPolynomial,
    omega: f64,
    bindings: &Bindings,
) -> Result<(AffineForm, AffineForm), BoundaryError> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(BoundaryError::BadFrequency(omega));
    }
    let bound = qp.bind(bindings)?;
    let left = bound.unknowns().len();
    if left > 2 {
        return Err(BoundaryError::TooManyUnknowns(left));
    }
    let mut re = AffineForm::default();
    let mut im = AffineForm::default();
    for t in bound.terms() {
        let (cos, sin) = t.order.half_pi_cis();
        let mag = omega.powf(t.order.value());
        match &t.coeff {
            Coefficient::Known(c) => {
                re.constant += c * cos * mag;
                im.constant += c * sin * mag;
            }
            Coefficient::Unknown { name, multiplier } => {
                *re.terms.entry(name.clone()).or_default() += multiplier * cos * mag;
                *im.terms.entry(name.clone()).or_default() += multiplier * sin * mag;
            }
        }
    }
    Ok((re, im))
}

/// The line `p1 * x + p2 * y + constant = 0` in plane coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub p1: f64,
    pub p2: f64,
    pub constant: f64,
}

impl Line {
    pub fn eval(&self, (x, y): (f64, f64)) -> f64 {
        self.p1 * x + self.p2 * y + self.constant
    }

    /// The part of the line inside `window`, as its two end points.
    pub fn segment_in(&self, window: &Window) -> Option<((f64, f64), (f64, f64))> {
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(4);
        if self.p2 != 0.0 {
            for x in [window.p1.0, window.p1.1] {
                let y = -(self.constant + self.p1 * x) / self.p2;
                if y >= window.p2.0 && y <= window.p2.1 {
                    pts.push((x, y));
                }
            }
        }
        if self.p1 != 0.0 {
            for y in [window.p2.0, window.p2.1] {
                let x = -(self.constant + self.p2 * y) / self.p1;
                if x >= window.p1.0 && x <= window.p1.1 {
                    pts.push((x, y));
                }
            }
        }
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        pts.dedup();
        match pts.len() {
            0 => None,
            1 => Some((pts[0], pts[0])),
            n => Some((pts[0], pts[n - 1])),
        }
    }
}

fn coefficient_line(coeff: &Coefficient, plane: &Plane) -> Option<Line> {
    match coeff {
        Coefficient::Unknown { name, multiplier } if *name == plane.p1 => Some(Line {
            p1: *multiplier,
            p2: 0.0,
            constant: 0.0,
        }),
        Coefficient::Unknown { name, multiplier } if *name == plane.p2 => Some(Line {
            p1: 0.0,
            p2: *multiplier,
            constant: 0.0,
        }),
        _ => None,
    }
}

/// Real root boundary: the constant coefficient vanishes. Absent unless that
/// coefficient is one of the plane unknowns.
pub fn rrb(qp: &QuasiPolynomial, plane: &Plane) -> Option<Line> {
    qp.constant_term()
        .and_then(|t| coefficient_line(&t.coeff, plane))
}

/// Infinite root boundary: the top-order coefficient vanishes.
pub fn irb(qp: &QuasiPolynomial, plane: &Plane) -> Option<Line> {
    let top = qp.top_term();
    if top.order.is_zero() {
        return None;
    }
    coefficient_line(&top.coeff, plane)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrbSample {
    pub omega: f64,
    pub point: (f64, f64),
}

/// One CRB polyline, ordered by increasing frequency.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CrbBranch {
    pub samples: Vec<CrbSample>,
    /// Bound parameters and orders that define the branch.
    pub fixed: BTreeMap<String, f64>,
    /// Frequencies skipped because the 2x2 system was singular.
    pub gaps: Vec<f64>,
    pub notes: Vec<String>,
}

/// `count` log-spaced frequencies over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (l0, l1) = (lo.log10(), hi.log10());
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| 10f64.powf(l0 + (l1 - l0) * i as f64 / (n - 1) as f64))
            .collect(),
    }
}

/// Solves `Re D = Im D = 0` for the two plane unknowns at one frequency.
struct PlaneSolver<'a> {
    qp: &'a QuasiPolynomial,
    plane: &'a Plane,
}

enum Solve {
    Point(f64, f64),
    Singular,
    Inaccurate,
}

impl<'a> PlaneSolver<'a> {
    /// `qp` must already be bound down to exactly the plane unknowns.
    fn new(qp: &'a QuasiPolynomial, plane: &'a Plane) -> Result<Self, BoundaryError> {
        if plane.p1 == plane.p2 {
            return Err(BoundaryError::SamePlaneAxes);
        }
        for name in [&plane.p1, &plane.p2] {
            if qp.term_with_unknown(name).is_none() {
                return Err(BoundaryError::MissingUnknown(name.clone()));
            }
        }
        if let Some(stray) = qp
            .unknowns()
            .into_iter()
            .find(|n| *n != plane.p1 && *n != plane.p2)
        {
            return Err(BoundaryError::StrayUnknown(stray.to_string()));
        }
        Ok(PlaneSolver { qp, plane })
    }

    fn solve(&self, omega: f64) -> Result<Solve, BoundaryError> {
        let (re, im) = eval_boundary_parts(self.qp, omega, &Bindings::new())?;
        let (a11, a12) = (re.coefficient(&self.plane.p1), re.coefficient(&self.plane.p2));
        let (a21, a22) = (im.coefficient(&self.plane.p1), im.coefficient(&self.plane.p2));
        let (r1, r2) = (-re.constant, -im.constant);
        let det = a11 * a22 - a12 * a21;
        let det_scale = (a11 * a22).abs() + (a12 * a21).abs();
        if det_scale == 0.0 || det.abs() < SINGULAR_TOL * det_scale {
            return Ok(Solve::Singular);
        }
        let x = (r1 * a22 - a12 * r2) / det;
        let y = (a11 * r2 - a21 * r1) / det;
        if !(x.is_finite() && y.is_finite()) {
            return Ok(Solve::Inaccurate);
        }
        // Residual of D(jw) at the solution against the size of its terms.
        let values: Bindings = [(self.plane.p1.clone(), x), (self.plane.p2.clone(), y)]
            .into_iter()
            .collect();
        let dr = re.eval(&values).unwrap_or(f64::NAN);
        let di = im.eval(&values).unwrap_or(f64::NAN);
        let scale = magnitude_sum(self.qp, omega, &values);
        if dr.hypot(di) > RESIDUAL_TOL * scale.max(f64::MIN_POSITIVE) {
            return Ok(Solve::Inaccurate);
        }
        Ok(Solve::Point(x, y))
    }
}

fn magnitude_sum(qp: &QuasiPolynomial, omega: f64, values: &Bindings) -> f64 {
    qp.terms()
        .iter()
        .map(|t| {
            let c = match &t.coeff {
                Coefficient::Known(c) => *c,
                Coefficient::Unknown { name, multiplier } => {
                    multiplier * values.get(name).copied().unwrap_or(0.0)
                }
            };
            c.abs() * omega.powf(t.order.value())
        })
        .sum()
}

fn sorted_frequencies(omegas: &[f64]) -> Result<Vec<f64>, BoundaryError> {
    if let Some(&bad) = omegas.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(BoundaryError::BadFrequency(bad));
    }
    let mut grid = omegas.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    Ok(grid)
}

/// CRB by solving the real/imaginary system at every frequency of `omegas`.
pub fn crb_general(
    qp: &QuasiPolynomial,
    plane: &Plane,
    bindings: &Bindings,
    omegas: &[f64],
) -> Result<CrbBranch, BoundaryError> {
    let bound = qp.bind(bindings)?;
    let solver = PlaneSolver::new(&bound, plane)?;
    let grid = sorted_frequencies(omegas)?;
    let mut branch = CrbBranch {
        fixed: bindings.clone(),
        ..CrbBranch::default()
    };
    let mut singular = 0;
    for &omega in &grid {
        match solver.solve(omega)? {
            Solve::Point(x, y) => branch.samples.push(CrbSample {
                omega,
                point: (x, y),
            }),
            Solve::Singular => {
                singular += 1;
                branch.gaps.push(omega);
            }
            Solve::Inaccurate => branch.gaps.push(omega),
        }
    }
    if !grid.is_empty() && singular == grid.len() {
        return Err(BoundaryError::StructurallySingular(
            plane.p1.clone(),
            plane.p2.clone(),
        ));
    }
    Ok(branch)
}

fn order_gap(lo: FracOrder, hi: FracOrder) -> Result<FracOrder, BoundaryError> {
    let num = hi.num() as u128 * lo.den() as u128 - lo.num() as u128 * hi.den() as u128;
    let den = hi.den() as u128 * lo.den() as u128;
    let g = num_integer::gcd(num, den);
    FracOrder::with_limit((num / g) as u64, (den / g) as u64, u64::MAX).map_err(Into::into)
}

/// Closed-form CRB of `a s^alpha2 + b s^alpha1 + c` in the `(a, c)` plane.
pub fn crb_three_term(
    b: f64,
    alpha1: FracOrder,
    alpha2: FracOrder,
    omegas: &[f64],
) -> Result<CrbBranch, BoundaryError> {
    let two = FracOrder::integer(2)?;
    if !(FracOrder::ZERO < alpha1 && alpha1 < alpha2 && alpha2 < two) {
        return Err(BoundaryError::InvalidOrders("0 < alpha1 < alpha2 < 2"));
    }
    let grid = sorted_frequencies(omegas)?;
    let mut branch = CrbBranch::default();
    branch.fixed.insert("b".into(), b);
    branch.fixed.insert("alpha1".into(), alpha1.value());
    branch.fixed.insert("alpha2".into(), alpha2.value());
    if b == 0.0 {
        branch
            .notes
            .push("b = 0: the complex root boundary collapses to the point (0, 0)".into());
        return Ok(branch);
    }
    let s1 = alpha1.half_pi_cis().1;
    let s2 = alpha2.half_pi_cis().1;
    let s21 = order_gap(alpha1, alpha2)?.half_pi_cis().1;
    let (a1, a2) = (alpha1.value(), alpha2.value());
    branch.samples = grid
        .iter()
        .map(|&w| CrbSample {
            omega: w,
            point: (-b * w.powf(a1 - a2) * s1 / s2, -b * w.powf(a1) * s21 / s2),
        })
        .collect();
    Ok(branch)
}

/// Closed-form CRB of `a s^(2 alpha) + b s^alpha + c` in the `(a, c)` plane.
pub fn crb_commensurate_pair(
    b: f64,
    alpha: FracOrder,
    omegas: &[f64],
) -> Result<CrbBranch, BoundaryError> {
    if !(FracOrder::ZERO < alpha && alpha < FracOrder::ONE) {
        return Err(BoundaryError::InvalidOrders("0 < alpha < 1"));
    }
    let grid = sorted_frequencies(omegas)?;
    let double = alpha.scale(2)?;
    let (cos1, sin1) = alpha.half_pi_cis();
    let (cos2, sin2) = double.half_pi_cis();
    let al = alpha.value();
    let mut branch = CrbBranch::default();
    branch.fixed.insert("b".into(), b);
    branch.fixed.insert("alpha".into(), al);
    branch.samples = grid
        .iter()
        .map(|&w| {
            let a = -b * w.powf(-al) * sin1 / sin2;
            let c = -a * w.powf(2.0 * al) * cos2 - b * w.powf(al) * cos1;
            CrbSample {
                omega: w,
                point: (a, c),
            }
        })
        .collect();
    Ok(branch)
}

/// Frequency sampling and clipping used when tracing boundaries for display.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct TraceOptions {
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub samples: usize,
    /// Samples outside the window scaled by this factor are dropped.
    pub clip_factor: f64,
    /// Maximum bisection depth between consecutive samples.
    pub refine_levels: u32,
    /// Consecutive samples further apart than this fraction of the window
    /// diagonal are refined.
    pub refine_fraction: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            omega_lo: 1e-4,
            omega_hi: 1e4,
            samples: 2000,
            clip_factor: 3.0,
            refine_levels: 3,
            refine_fraction: 0.05,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundarySet {
    pub rrb: Option<Line>,
    pub irb: Option<Line>,
    pub crb: Vec<CrbBranch>,
    pub notes: Vec<String>,
}

/// All three boundaries of `qp` in `plane`, clipped around `window`.
pub fn boundary_set(
    qp: &QuasiPolynomial,
    plane: &Plane,
    bindings: &Bindings,
    window: &Window,
    opts: &TraceOptions,
) -> Result<BoundarySet, BoundaryError> {
    let bound = qp.bind(bindings)?;
    let solver = PlaneSolver::new(&bound, plane)?;
    let mut set = BoundarySet {
        rrb: rrb(&bound, plane),
        irb: irb(&bound, plane),
        ..BoundarySet::default()
    };

    let grid = log_grid(opts.omega_lo, opts.omega_hi, opts.samples);
    let mut raw = Vec::with_capacity(grid.len());
    let mut singular = 0;
    for &w in &grid {
        let s = solver.solve(w)?;
        if matches!(s, Solve::Singular) {
            singular += 1;
        }
        raw.push(match s {
            Solve::Point(x, y) => Some((x, y)),
            _ => None,
        });
    }
    if !grid.is_empty() && singular == grid.len() {
        return Err(BoundaryError::StructurallySingular(
            plane.p1.clone(),
            plane.p2.clone(),
        ));
    }

    let points: Vec<(f64, f64)> = raw.iter().flatten().copied().collect();
    if let Some(&first) = points.first() {
        let spread = points
            .iter()
            .map(|p| (p.0 - first.0).hypot(p.1 - first.1))
            .fold(0.0, f64::max);
        if points.len() > 1 && spread <= 1e-12 * window.diagonal() {
            set.notes.push(format!(
                "complex root boundary degenerates to the point ({}, {}); omitted",
                fmt_num(first.0),
                fmt_num(first.1)
            ));
            return Ok(set);
        }
    }

    let clip = window.expanded(opts.clip_factor);
    let max_gap = opts.refine_fraction * window.diagonal();
    let keep = |p: Option<(f64, f64)>| p.filter(|p| clip.contains(*p));
    let mut branches: Vec<Vec<CrbSample>> = Vec::new();
    let mut current: Vec<CrbSample> = Vec::new();
    let mut prev: Option<CrbSample> = None;
    for (i, &w) in grid.iter().enumerate() {
        match keep(raw[i]) {
            Some(point) => {
                let sample = CrbSample { omega: w, point };
                if let Some(p) = prev {
                    refine(&solver, &clip, p, sample, max_gap, opts.refine_levels, &mut current)?;
                }
                current.push(sample);
                prev = Some(sample);
            }
            None => {
                if !current.is_empty() {
                    branches.push(std::mem::take(&mut current));
                }
                prev = None;
            }
        }
    }
    if !current.is_empty() {
        branches.push(current);
    }
    set.crb = branches
        .into_iter()
        .map(|samples| CrbBranch {
            samples,
            fixed: bindings.clone(),
            ..CrbBranch::default()
        })
        .collect();
    Ok(set)
}

/// Inserts geometric-mean frequencies between `a` and `b` while the points
/// stay far apart, up to `levels` deep.
fn refine(
    solver: &PlaneSolver<'_>,
    clip: &Window,
    a: CrbSample,
    b: CrbSample,
    max_gap: f64,
    levels: u32,
    out: &mut Vec<CrbSample>,
) -> Result<(), BoundaryError> {
    if levels == 0 {
        return Ok(());
    }
    let d = (a.point.0 - b.point.0).hypot(a.point.1 - b.point.1);
    if d <= max_gap {
        return Ok(());
    }
    let omega = (0.5 * (a.omega.ln() + b.omega.ln())).exp();
    if let Solve::Point(x, y) = solver.solve(omega)? {
        if clip.contains((x, y)) {
            let mid = CrbSample {
                omega,
                point: (x, y),
            };
            refine(solver, clip, a, mid, max_gap, levels - 1, out)?;
            out.push(mid);
            refine(solver, clip, mid, b, max_gap, levels - 1, out)?;
        }
    }
    Ok(())
}

impl BoundarySet {
    /// `omega,p1,p2,branch_id`; straight boundaries span `window` with an
    /// empty frequency.
    pub fn to_csv(&self, window: &Window) -> String {
        let mut out = String::from("omega,p1,p2,branch_id\n");
        for (id, line) in [("rrb", &self.rrb), ("irb", &self.irb)] {
            if let Some((a, b)) = line.and_then(|l| l.segment_in(window)) {
                for p in [a, b] {
                    writeln!(out, ",{},{},{id}", fmt_num(p.0), fmt_num(p.1)).unwrap();
                }
            }
        }
        for (k, branch) in self.crb.iter().enumerate() {
            for s in &branch.samples {
                writeln!(
                    out,
                    "{},{},{},crb-{k}",
                    fmt_num(s.omega),
                    fmt_num(s.point.0),
                    fmt_num(s.point.1)
                )
                .unwrap();
            }
        }
        out
    }

    pub fn crb_samples(&self) -> impl Iterator<Item = &CrbSample> {
        self.crb.iter().flat_map(|b| b.samples.iter())
    }
}
