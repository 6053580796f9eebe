//! Numerical tolerances used across the crate.
//!
//! Values are double precision with about two digits of margin against the
//! four-decimal figures the speed tables are quoted to.

/// Residual accepted for a real root of a characteristic function.
pub const ROOT_RESIDUAL: f64 = 1e-12;

/// Bracket width at which bisection stops before Newton polishing.
pub const BISECTION_WIDTH: f64 = 1e-13;

/// Residual accepted for points on implicitly defined speed curves.
pub const CURVE_RESIDUAL: f64 = 1e-10;

/// Bracket width for delay searches (`h_p`, `h_osc`).
pub const DELAY_SEARCH_WIDTH: f64 = 1e-10;

/// Upper end of the delay search range; no crossing below it means "absent".
pub const DELAY_SEARCH_CAP: f64 = 20.0;

/// Step of the delay continuation used by the double-root Newton solver.
pub const CONTINUATION_STEP: f64 = 0.05;

/// Relative residual allowed for the profile equation on the numeric segment.
pub const PROFILE_RESIDUAL: f64 = 1e-6;

/// Distance to the positive equilibrium required at the end of a profile.
pub const PROFILE_SETTLE: f64 = 1e-3;

/// Size the unstable mode may reach before profile integration stops.
pub const UNSTABLE_MODE_CAP: f64 = 1e-8;

/// Below this gap between `lambda1` and `lambda2` the amplitude formula is refused.
pub const CRITICAL_GAP: f64 = 1e-8;

/// Normalization tolerance for the integral of the kernel `N`.
pub const KERNEL_NORMALIZATION: f64 = 1e-4;

/// Exponential tail cut used to truncate kernel supports.
pub const KERNEL_TAIL: f64 = 1e-10;

/// Distance from an integer accepted for a winding number before rounding.
pub const WINDING_INTEGER: f64 = 1e-3;

/// Outward shift applied to a contour that passes too close to a zero.
pub const CONTOUR_NUDGE: f64 = 1e-6;
