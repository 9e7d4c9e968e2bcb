//! Fixtures shared by the criterion benches.

use std::f64::consts::PI;

use promind_core::{Pose6, WaypointList};

/// Six waypoints of a pick-and-place style motion in front of the robot base.
pub fn demo_waypoints() -> WaypointList {
    WaypointList::new(vec![
        Pose6::new(0.45, -0.30, 0.25, PI, 0.0, 0.0),
        Pose6::new(0.50, -0.15, 0.40, PI, 0.0, 0.3),
        Pose6::new(0.55, 0.00, 0.45, PI, 0.1, 0.6),
        Pose6::new(0.55, 0.15, 0.40, PI, 0.1, 0.9),
        Pose6::new(0.50, 0.30, 0.30, PI, 0.0, 1.2),
        Pose6::new(0.45, 0.40, 0.20, PI, 0.0, 1.5),
    ])
    .expect("demo waypoints are valid")
}
