//! Visibility-aware mmWave coverage planning: ray-based visibility over extruded
//! building footprints, 3GPP UMa path loss gated by visibility, and exact 0-1
//! programs for gNB placement and passive metallic reflector placement.

pub mod bilp;
pub mod channel;
pub mod error;
pub mod geom;
pub mod pipeline;
pub mod planner_gnb;
pub mod planner_pmr;
pub mod reflector;
pub mod report;
pub mod scenario;
pub mod visibility;

pub use error::{PlanError, Result};
pub use geom::{Point3, UnitVec3, Vec3};
