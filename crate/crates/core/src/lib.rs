//! Stability of linear fractional differential equations.
//!
//! Fractional orders are exact rationals ([`FracOrder`]). A fully bound
//! characteristic quasi-polynomial is mapped to an integer-degree polynomial
//! in `w = s^alpha` and judged by the sector condition on its roots
//! ([`matignon_check`]). With two free coefficients, [`dboundary`] traces the
//! real, infinite and complex root boundaries of the parameter plane and
//! [`regions`] labels the plane cell by cell. [`simulate`] is an independent
//! time-domain check based on Grünwald–Letnikov differences.

pub mod dboundary;
pub mod emit;
pub mod fracnum;
pub mod plane;
pub mod regions;
pub mod rootfind;
pub mod simulate;
pub mod stability;

pub use dboundary::{boundary_set, BoundarySet, CrbBranch, Line, TraceOptions};
pub use fracnum::{
    parse_system, serialize_system, Bindings, Coefficient, FracOrder, FracSystem, QuasiPolynomial,
    Term,
};
pub use plane::{Plane, Window};
pub use regions::{classify_window, CellVerdict, RegionMap, RobustRegion, SweepStack};
pub use rootfind::{find_roots, IntPolynomial, RootSet};
pub use simulate::{gl_simulate, SimConfig, SimResult, SimVerdict};
pub use stability::{matignon_check, StabilityVerdict, VerdictClass};
