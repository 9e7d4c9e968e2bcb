//! Human-aware trajectory planning for collaborative robots.
//!
//! * [`bspline`] and [`planner`]: quintic B-spline waypoint interpolation.
//! * [`optimizer`]: bi-objective time/jerk optimization over the interval
//!   vector and downsampling of the Pareto front into a pacing ladder.
//! * [`human`]: attention, mental effort, RR windows and camera stress from
//!   recorded observations.
//! * [`safety`]: attention-scaled safety zones, local path morphing and the
//!   stop/replan rule.
//! * [`pacing`]: stress-driven stepping along the ladder.
//! * [`sim`]: the tick-based episode runner, baselines and metrics.

pub mod bspline;
pub mod error;
pub mod human;
pub mod optimizer;
pub mod pacing;
pub mod pose;
pub mod planner;
pub mod safety;
pub mod sim;

pub use bspline::{BSplineBundle, BSplineCurve, KnotVector};
pub use error::{Error, Result};
pub use planner::{BoundaryConditions, IntervalVector, WaypointList};
pub use pose::Pose6;
