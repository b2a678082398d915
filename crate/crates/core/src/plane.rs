//! The two-parameter plane shared by boundary tracing and region maps.

use serde::Serialize;

/// Names of the horizontal (`p1`) and vertical (`p2`) parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Plane {
    pub p1: String,
    pub p2: String,
}

impl Plane {
    pub fn new(p1: impl Into<String>, p2: impl Into<String>) -> Self {
        Plane {
            p1: p1.into(),
            p2: p2.into(),
        }
    }
}

/// Axis-aligned rectangle `[p1.0, p1.1] x [p2.0, p2.1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Window {
    pub p1: (f64, f64),
    pub p2: (f64, f64),
}

impl Window {
    pub fn new(p1: (f64, f64), p2: (f64, f64)) -> Option<Self> {
        let ok = |(lo, hi): (f64, f64)| lo.is_finite() && hi.is_finite() && lo < hi;
        (ok(p1) && ok(p2)).then_some(Window { p1, p2 })
    }

    pub fn square(half: f64) -> Self {
        Window {
            p1: (-half, half),
            p2: (-half, half),
        }
    }

    pub fn width(&self) -> f64 {
        self.p1.1 - self.p1.0
    }

    pub fn height(&self) -> f64 {
        self.p2.1 - self.p2.0
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        x >= self.p1.0 && x <= self.p1.1 && y >= self.p2.0 && y <= self.p2.1
    }

    /// Same center, each side multiplied by `factor`.
    pub fn expanded(&self, factor: f64) -> Window {
        let grow = |(lo, hi): (f64, f64)| {
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo) * factor;
            (mid - half, mid + half)
        };
        Window {
            p1: grow(self.p1),
            p2: grow(self.p2),
        }
    }
}
