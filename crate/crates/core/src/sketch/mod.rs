//! From raster or point file to a joint-space drawing trajectory.

pub mod edges;
pub mod eval;
pub mod plan;
pub mod raster;
pub mod strokes;

pub use edges::extract_edge_points;
pub use eval::{evaluate_drawing, read_commanded_csv, write_commanded_csv};
pub use plan::{plan_trajectory, IkMethod, JointTrajectory, PenState, PlanOptions, PlannedDrawing, Waypoint};
pub use raster::GrayRaster;
pub use strokes::{order_strokes, read_points_csv, SketchPlan, Stroke};
