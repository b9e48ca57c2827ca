//! Dimension design for multi-joint constant-curvature continuum robots.
//!
//! The crate answers two coupled questions:
//!
//! 1. **Analysis** — given a robot design (segment lengths, base pose,
//!    minimum bend radii), which fraction of a prescribed workspace can its
//!    end effector reach?  Reachability is estimated by forward-kinematics
//!    sampling and sharpened with damped-least-squares inverse kinematics;
//!    for task points a minimum-torque solve reports the statically best
//!    posture.
//! 2. **Design** — which segment lengths minimize a cost (total length, or
//!    summed static torque over task points) subject to reaching a required
//!    fraction of the workspace?  An estimation-of-distribution optimizer
//!    searches the design space, with a genetic-algorithm baseline for
//!    comparison.
//!
//! Workspaces come from STL meshes (voxelized to cell centers), CSV point
//! lists, or built-in scenario definitions.  All lengths are centimetres,
//! masses kilograms, torques newton-metres.  Every stochastic routine takes
//! an explicit seed and is deterministic for a fixed seed, including under
//! multi-threaded execution.

pub mod cli;
pub mod error;
pub mod ik;
pub mod kinematics;
pub mod optimizer;
pub mod problems;
pub mod reachability;
pub mod rng;
pub mod stl;
pub mod vec3;
pub mod voxel;

pub use error::{Error, Result};
pub use vec3::Vec3;
