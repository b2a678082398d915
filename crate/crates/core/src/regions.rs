//! Grid classification of a parameter window into stability regions.
//!
//! Every cell center gets a sector-test verdict. Cells are then grouped into
//! 4-connected regions sharing both the verdict and the number of unstable
//! roots, which separates regions that differ in root distribution even when
//! both are unstable.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::emit::fmt_num;
use crate::fracnum::{Bindings, FracError, FracOrder, QuasiPolynomial, Term};
use crate::plane::{Plane, Window};
use crate::stability::{matignon_check, VerdictClass};

/// Smallest accepted grid side.
pub const MIN_RESOLUTION: usize = 32;
/// Largest tolerated fraction of cells whose check failed.
const MAX_FAILURE_FRACTION: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegionError {
    #[error("resolution {0}x{1} is below the minimum {MIN_RESOLUTION}x{MIN_RESOLUTION}")]
    Resolution(usize, usize),
    #[error("plane needs two distinct parameters")]
    SamePlaneAxes,
    #[error("parameter {0} does not appear in the polynomial")]
    MissingUnknown(String),
    #[error("parameter {0} is unbound and not on the plane")]
    Unbound(String),
    #[error("sweep parameter {0} is one of the plane axes")]
    SweepOnPlane(String),
    #[error("sweep has no values")]
    EmptySweep,
    #[error("order {0} is outside (0, 1)")]
    OrderRange(String),
    #[error("template must have three terms with orders (0, alpha1, alpha2)")]
    Template,
    #[error("{failed} of {total} cells could not be classified (first error: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },
    #[error("adjacent cells at ({0}, {1}) could not be classified: {2}")]
    AdjacentFailures(f64, f64, String),
    #[error("layers have different geometry")]
    Geometry,
    #[error(transparent)]
    Poly(#[from] FracError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CellVerdict {
    Stable,
    Marginal,
    Unstable,
    /// The check failed for this cell.
    Unknown,
}

impl CellVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            CellVerdict::Stable => "stable",
            CellVerdict::Marginal => "marginal",
            CellVerdict::Unstable => "unstable",
            CellVerdict::Unknown => "unknown",
        }
    }
}

impl From<VerdictClass> for CellVerdict {
    fn from(c: VerdictClass) -> Self {
        match c {
            VerdictClass::Stable => CellVerdict::Stable,
            VerdictClass::Marginal => CellVerdict::Marginal,
            VerdictClass::Unstable => CellVerdict::Unstable,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Cell {
    pub verdict: CellVerdict,
    /// Roots in the unstable sector, counted with multiplicity.
    pub unstable_roots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    pub id: usize,
    pub verdict: CellVerdict,
    pub unstable_roots: usize,
    /// Center of the member cell closest to the region centroid.
    pub representative: (f64, f64),
    pub cells: usize,
}

/// Classified grid. Cells are row-major with rows along `p2`: cell `(i, j)`
/// sits at index `j * n1 + i`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionMap {
    pub plane: Plane,
    pub window: Window,
    pub resolution: (usize, usize),
    pub cells: Vec<Cell>,
    /// Region index per cell; `None` for marginal and unknown cells.
    pub labels: Vec<Option<usize>>,
    pub regions: Vec<Region>,
}

impl RegionMap {
    pub fn cell_size(&self) -> (f64, f64) {
        (
            self.window.width() / self.resolution.0 as f64,
            self.window.height() / self.resolution.1 as f64,
        )
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        cell_center(&self.window, self.resolution, i, j)
    }

    /// Grid coordinates of the cell containing `point`.
    pub fn locate(&self, (x, y): (f64, f64)) -> Option<(usize, usize)> {
        if !self.window.contains((x, y)) {
            return None;
        }
        let (dx, dy) = self.cell_size();
        let i = (((x - self.window.p1.0) / dx) as usize).min(self.resolution.0 - 1);
        let j = (((y - self.window.p2.0) / dy) as usize).min(self.resolution.1 - 1);
        Some((i, j))
    }

    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.cells[j * self.resolution.0 + i]
    }

    pub fn verdict_at(&self, point: (f64, f64)) -> Option<CellVerdict> {
        self.locate(point).map(|(i, j)| self.cell(i, j).verdict)
    }

    pub fn region_at(&self, point: (f64, f64)) -> Option<&Region> {
        let (i, j) = self.locate(point)?;
        self.labels[j * self.resolution.0 + i].map(|r| &self.regions[r])
    }

    pub fn count(&self, verdict: CellVerdict) -> usize {
        self.cells.iter().filter(|c| c.verdict == verdict).count()
    }

    pub fn same_geometry(&self, other: &RegionMap) -> bool {
        self.plane == other.plane
            && self.window == other.window
            && self.resolution == other.resolution
    }

    /// `p1,p2,verdict` per cell in storage order.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.cells.len() * 24);
        out.push_str("p1,p2,verdict\n");
        for j in 0..self.resolution.1 {
            for i in 0..self.resolution.0 {
                let (x, y) = self.center(i, j);
                let v = self.cell(i, j).verdict.as_str();
                writeln!(out, "{},{},{v}", fmt_num(x), fmt_num(y)).unwrap();
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            plane: &'a Plane,
            window: &'a Window,
            resolution: (usize, usize),
            regions: &'a [Region],
            stable_cells: usize,
            unstable_cells: usize,
            marginal_cells: usize,
            unknown_cells: usize,
        }
        serde_json::to_string_pretty(&Summary {
            plane: &self.plane,
            window: &self.window,
            resolution: self.resolution,
            regions: &self.regions,
            stable_cells: self.count(CellVerdict::Stable),
            unstable_cells: self.count(CellVerdict::Unstable),
            marginal_cells: self.count(CellVerdict::Marginal),
            unknown_cells: self.count(CellVerdict::Unknown),
        })
        .expect("region summary serializes")
    }
}

fn cell_center(window: &Window, (n1, n2): (usize, usize), i: usize, j: usize) -> (f64, f64) {
    let dx = window.width() / n1 as f64;
    let dy = window.height() / n2 as f64;
    (
        window.p1.0 + (i as f64 + 0.5) * dx,
        window.p2.0 + (j as f64 + 0.5) * dy,
    )
}

/// Verdict of every cell center of `window` in `plane`, grouped into regions.
pub fn classify_window(
    qp: &QuasiPolynomial,
    plane: &Plane,
    bindings: &Bindings,
    window: &Window,
    resolution: (usize, usize),
) -> Result<RegionMap, RegionError> {
    let (n1, n2) = resolution;
    if n1 < MIN_RESOLUTION || n2 < MIN_RESOLUTION {
        return Err(RegionError::Resolution(n1, n2));
    }
    if plane.p1 == plane.p2 {
        return Err(RegionError::SamePlaneAxes);
    }
    let bound = qp.bind(bindings)?;
    for name in [&plane.p1, &plane.p2] {
        if bound.term_with_unknown(name).is_none() {
            return Err(RegionError::MissingUnknown(name.clone()));
        }
    }
    if let Some(stray) = bound
        .unknowns()
        .into_iter()
        .find(|n| *n != plane.p1 && *n != plane.p2)
    {
        return Err(RegionError::Unbound(stray.to_string()));
    }

    let results: Vec<Result<Cell, String>> = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let (x, y) = cell_center(window, resolution, k % n1, k / n1);
            let values: Bindings = [(plane.p1.clone(), x), (plane.p2.clone(), y)]
                .into_iter()
                .collect();
            let qp = bound.substitute(&values).map_err(|e| e.to_string())?;
            let v = matignon_check(&qp).map_err(|e| e.to_string())?;
            Ok(Cell {
                verdict: v.class.into(),
                unstable_roots: v.unstable_roots(),
            })
        })
        .collect();

    let failed: Vec<usize> = (0..results.len()).filter(|&k| results[k].is_err()).collect();
    if let Some(&first) = failed.first() {
        let message = results[first].clone().unwrap_err();
        let total = n1 * n2;
        if failed.len() as f64 > MAX_FAILURE_FRACTION * total as f64 {
            return Err(RegionError::TooManyFailures {
                failed: failed.len(),
                total,
                first: message,
            });
        }
        for &k in &failed {
            let (i, j) = (k % n1, k / n1);
            let right = i + 1 < n1 && results[k + 1].is_err();
            let up = j + 1 < n2 && results[k + n1].is_err();
            if right || up {
                let (x, y) = cell_center(window, resolution, i, j);
                return Err(RegionError::AdjacentFailures(x, y, message));
            }
        }
    }
    let cells: Vec<Cell> = results
        .into_iter()
        .map(|r| {
            r.unwrap_or(Cell {
                verdict: CellVerdict::Unknown,
                unstable_roots: 0,
            })
        })
        .collect();

    let (labels, regions) = label_regions(&cells, window, resolution);
    Ok(RegionMap {
        plane: plane.clone(),
        window: *window,
        resolution,
        cells,
        labels,
        regions,
    })
}

fn label_regions(
    cells: &[Cell],
    window: &Window,
    (n1, n2): (usize, usize),
) -> (Vec<Option<usize>>, Vec<Region>) {
    let mut labels: Vec<Option<usize>> = vec![None; cells.len()];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..cells.len() {
        let seed = cells[start];
        if labels[start].is_some()
            || !matches!(seed.verdict, CellVerdict::Stable | CellVerdict::Unstable)
        {
            continue;
        }
        let id = regions.len();
        let mut members = Vec::new();
        labels[start] = Some(id);
        queue.push_back(start);
        while let Some(k) = queue.pop_front() {
            members.push(k);
            let (i, j) = (k % n1, k / n1);
            let mut neighbors = [None; 4];
            if i > 0 {
                neighbors[0] = Some(k - 1);
            }
            if i + 1 < n1 {
                neighbors[1] = Some(k + 1);
            }
            if j > 0 {
                neighbors[2] = Some(k - n1);
            }
            if j + 1 < n2 {
                neighbors[3] = Some(k + n1);
            }
            for m in neighbors.into_iter().flatten() {
                if labels[m].is_none() && cells[m] == seed {
                    labels[m] = Some(id);
                    queue.push_back(m);
                }
            }
        }
        let n = members.len() as f64;
        let (sx, sy) = members.iter().fold((0.0, 0.0), |(sx, sy), &k| {
            let (x, y) = cell_center(window, (n1, n2), k % n1, k / n1);
            (sx + x, sy + y)
        });
        let centroid = (sx / n, sy / n);
        let representative = members
            .iter()
            .map(|&k| cell_center(window, (n1, n2), k % n1, k / n1))
            .min_by(|a, b| {
                let da = (a.0 - centroid.0).hypot(a.1 - centroid.1);
                let db = (b.0 - centroid.0).hypot(b.1 - centroid.1);
                da.total_cmp(&db)
            })
            .expect("region is not empty");
        regions.push(Region {
            id,
            verdict: seed.verdict,
            unstable_roots: seed.unstable_roots,
            representative,
            cells: members.len(),
        });
    }
    (labels, regions)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub value: f64,
    /// Exact text of the swept value, e.g. `1/3` or `0.25`.
    pub label: String,
    pub map: RegionMap,
}

/// Region maps for a sequence of values of one swept quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepStack {
    pub axis: String,
    pub layers: Vec<Layer>,
}

impl SweepStack {
    /// Index document listing each layer and its file stem.
    pub fn index_json(&self, stems: &[String]) -> String {
        #[derive(Serialize)]
        struct Entry<'a> {
            value: f64,
            label: &'a str,
            file: &'a str,
            regions: usize,
            stable_cells: usize,
        }
        #[derive(Serialize)]
        struct Index<'a> {
            axis: &'a str,
            layers: Vec<Entry<'a>>,
        }
        let layers = self
            .layers
            .iter()
            .zip(stems)
            .map(|(l, stem)| Entry {
                value: l.value,
                label: &l.label,
                file: stem,
                regions: l.map.regions.len(),
                stable_cells: l.map.count(CellVerdict::Stable),
            })
            .collect();
        serde_json::to_string_pretty(&Index {
            axis: &self.axis,
            layers,
        })
        .expect("index serializes")
    }
}

/// One region map per value of the coefficient parameter `name`.
pub fn sweep_parameter(
    qp: &QuasiPolynomial,
    plane: &Plane,
    bindings: &Bindings,
    name: &str,
    values: &[f64],
    window: &Window,
    resolution: (usize, usize),
) -> Result<SweepStack, RegionError> {
    if name == plane.p1 || name == plane.p2 {
        return Err(RegionError::SweepOnPlane(name.to_string()));
    }
    if values.is_empty() {
        return Err(RegionError::EmptySweep);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let layers = sorted
        .into_iter()
        .map(|v| {
            let mut b = bindings.clone();
            b.insert(name.to_string(), v);
            Ok(Layer {
                value: v,
                label: fmt_num(v),
                map: classify_window(qp, plane, &b, window, resolution)?,
            })
        })
        .collect::<Result<Vec<_>, RegionError>>()?;
    Ok(SweepStack {
        axis: name.to_string(),
        layers,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderSweepMode {
    /// Orders `(alpha, 1)`.
    Basset,
    /// Orders `(alpha, 2 alpha)`.
    Commensurate,
}

/// Replaces the two nonzero orders of a three-term template.
pub fn with_orders(
    template: &QuasiPolynomial,
    alpha1: FracOrder,
    alpha2: FracOrder,
) -> Result<QuasiPolynomial, RegionError> {
    let t = template.terms();
    if t.len() != 3 || !t[0].order.is_zero() {
        return Err(RegionError::Template);
    }
    Ok(QuasiPolynomial::new([
        t[0].clone(),
        Term::new(t[1].coeff.clone(), alpha1),
        Term::new(t[2].coeff.clone(), alpha2),
    ])?)
}

/// One region map per order `alpha` in `(0, 1)`.
pub fn sweep_order(
    template: &QuasiPolynomial,
    plane: &Plane,
    bindings: &Bindings,
    alphas: &[FracOrder],
    mode: OrderSweepMode,
    window: &Window,
    resolution: (usize, usize),
) -> Result<SweepStack, RegionError> {
    if alphas.is_empty() {
        return Err(RegionError::EmptySweep);
    }
    let mut sorted = alphas.to_vec();
    sorted.sort();
    sorted.dedup();
    if let Some(bad) = sorted
        .iter()
        .find(|a| a.is_zero() || **a >= FracOrder::ONE)
    {
        return Err(RegionError::OrderRange(bad.to_string()));
    }
    let layers = sorted
        .into_iter()
        .map(|alpha| {
            let top = match mode {
                OrderSweepMode::Basset => FracOrder::ONE,
                OrderSweepMode::Commensurate => alpha.scale(2)?,
            };
            let qp = with_orders(template, alpha, top)?;
            Ok(Layer {
                value: alpha.value(),
                label: alpha.to_string(),
                map: classify_window(&qp, plane, bindings, window, resolution)?,
            })
        })
        .collect::<Result<Vec<_>, RegionError>>()?;
    Ok(SweepStack {
        axis: "alpha".into(),
        layers,
    })
}

/// Cells stable in every layer of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct RobustRegion {
    pub plane: Plane,
    pub window: Window,
    pub resolution: (usize, usize),
    pub mask: Vec<bool>,
    pub axis: String,
    pub swept: Vec<f64>,
}

impl RobustRegion {
    pub fn contains(&self, (x, y): (f64, f64)) -> Option<bool> {
        if !self.window.contains((x, y)) {
            return None;
        }
        let (n1, n2) = self.resolution;
        let i = (((x - self.window.p1.0) / self.window.width() * n1 as f64) as usize).min(n1 - 1);
        let j = (((y - self.window.p2.0) / self.window.height() * n2 as f64) as usize).min(n2 - 1);
        Some(self.mask[j * n1 + i])
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        cell_center(&self.window, self.resolution, i, j)
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// `p1,p2,robust` with `robust` 1 or 0.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p1,p2,robust\n");
        let (n1, n2) = self.resolution;
        for j in 0..n2 {
            for i in 0..n1 {
                let (x, y) = self.center(i, j);
                let m = u8::from(self.mask[j * n1 + i]);
                writeln!(out, "{},{},{m}", fmt_num(x), fmt_num(y)).unwrap();
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            plane: &'a Plane,
            window: &'a Window,
            resolution: (usize, usize),
            axis: &'a str,
            swept: &'a [f64],
            robust_cells: usize,
        }
        serde_json::to_string_pretty(&Summary {
            plane: &self.plane,
            window: &self.window,
            resolution: self.resolution,
            axis: &self.axis,
            swept: &self.swept,
            robust_cells: self.count(),
        })
        .expect("robust summary serializes")
    }
}

pub fn robust_intersection(stack: &SweepStack) -> Result<RobustRegion, RegionError> {
    let first = &stack.layers.first().ok_or(RegionError::EmptySweep)?.map;
    if stack.layers.iter().any(|l| !l.map.same_geometry(first)) {
        return Err(RegionError::Geometry);
    }
    let mask = (0..first.cells.len())
        .map(|k| {
            stack
                .layers
                .iter()
                .all(|l| l.map.cells[k].verdict == CellVerdict::Stable)
        })
        .collect();
    Ok(RobustRegion {
        plane: first.plane.clone(),
        window: first.window,
        resolution: first.resolution,
        mask,
        axis: stack.axis.clone(),
        swept: stack.layers.iter().map(|l| l.value).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fracnum::Coefficient;

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

    fn fix_b(b: f64) -> Bindings {
        [("b".to_string(), b)].into_iter().collect()
    }

    #[test]
    fn five_basset_regions_at_low_resolution() {
        let map = classify_window(&basset(), &Plane::new("a", "c"), &fix_b(-2.0), &Window::square(10.0), (64, 64))
            .unwrap();
        assert_eq!(map.regions.len(), 5);
        let stable: Vec<&Region> = map
            .regions
            .iter()
            .filter(|r| r.verdict == CellVerdict::Stable)
            .collect();
        assert_eq!(stable.len(), 2);
        for r in &map.regions {
            assert_eq!(map.region_at(r.representative).unwrap().id, r.id);
        }
        assert_eq!(map.verdict_at((-5.0, -5.0)), Some(CellVerdict::Stable));
        assert_eq!(map.verdict_at((5.0, 5.0)), Some(CellVerdict::Stable));
        assert_eq!(map.verdict_at((1.0, 1.0)), Some(CellVerdict::Unstable));
        assert_eq!(map.verdict_at((-5.0, 5.0)), Some(CellVerdict::Unstable));
    }

    #[test]
    fn input_validation() {
        let plane = Plane::new("a", "c");
        let w = Window::square(10.0);
        assert_eq!(
            classify_window(&basset(), &plane, &fix_b(1.0), &w, (16, 64)),
            Err(RegionError::Resolution(16, 64))
        );
        assert!(matches!(
            classify_window(&basset(), &plane, &Bindings::new(), &w, (32, 32)),
            Err(RegionError::Unbound(_))
        ));
        assert!(matches!(
            sweep_parameter(&basset(), &plane, &Bindings::new(), "a", &[1.0], &w, (32, 32)),
            Err(RegionError::SweepOnPlane(_))
        ));
        assert!(matches!(
            sweep_order(&basset(), &plane, &fix_b(1.0), &[FracOrder::ONE], OrderSweepMode::Basset, &w, (32, 32)),
            Err(RegionError::OrderRange(_))
        ));
    }

    #[test]
    fn singleton_sweep_matches_direct_map() {
        let plane = Plane::new("a", "c");
        let w = Window::square(10.0);
        let stack = sweep_parameter(&basset(), &plane, &Bindings::new(), "b", &[-2.0], &w, (32, 32)).unwrap();
        let direct = classify_window(&basset(), &plane, &fix_b(-2.0), &w, (32, 32)).unwrap();
        assert_eq!(stack.layers.len(), 1);
        assert_eq!(stack.layers[0].map, direct);
        let robust = robust_intersection(&stack).unwrap();
        for (m, c) in robust.mask.iter().zip(&direct.cells) {
            assert_eq!(*m, c.verdict == CellVerdict::Stable);
        }
    }

    #[test]
    fn commensurate_half_equals_basset() {
        let plane = Plane::new("a", "c");
        let w = Window::square(10.0);
        let a = sweep_order(&basset(), &plane, &fix_b(-2.0), &[ord("0.5")], OrderSweepMode::Basset, &w, (32, 32))
            .unwrap();
        let c = sweep_order(&basset(), &plane, &fix_b(-2.0), &[ord("0.25")], OrderSweepMode::Commensurate, &w, (32, 32))
            .unwrap();
        assert_eq!(a.layers[0].map.cells.len(), c.layers[0].map.cells.len());
        // Basset at 1/2 is the commensurate pair at base 1/2; 1/4 differs.
        let same = sweep_order(&basset(), &plane, &fix_b(-2.0), &[ord("0.5")], OrderSweepMode::Commensurate, &w, (32, 32))
            .unwrap();
        assert_eq!(a.layers[0].map.cells, same.layers[0].map.cells);
        assert_ne!(a.layers[0].map.cells, c.layers[0].map.cells);
    }

    #[test]
    fn csv_and_json_shapes() {
        let map = classify_window(&basset(), &Plane::new("a", "c"), &fix_b(-2.0), &Window::square(10.0), (32, 32))
            .unwrap();
        let csv = map.to_csv();
        assert_eq!(csv.lines().count(), 32 * 32 + 1);
        assert!(csv.starts_with("p1,p2,verdict\n-9.6875,-9.6875,stable\n"));
        let json: serde_json::Value = serde_json::from_str(&map.to_json()).unwrap();
        assert_eq!(json["regions"].as_array().unwrap().len(), 5);
        assert_eq!(json["resolution"], serde_json::json!([32, 32]));
    }
}
