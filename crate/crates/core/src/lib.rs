//! Egocentric kinematic annotation: IMU filtering, IMU-to-camera
//! calibration, Kalman fusion, Plücker control maps, clip curation metrics,
//! and trajectory evaluation.
//!
//! ```
//! use egokin::geometry::{Pose, Vec3};
//! use egokin::pluecker::{pluecker_embed, Intrinsics, PixelSampling};
//!
//! let k = Intrinsics::new(1.0, 1.0, 0.0, 0.0, 1, 1).unwrap();
//! let map = pluecker_embed(&Pose::from_translation(Vec3::x()), &k, PixelSampling::Corner);
//! assert_eq!(map.pixel(0, 0), [0.0, -1.0, 0.0, 1.0, 0.0, 1.0]);
//! ```

pub mod align;
pub mod calibration;
pub mod curation;
pub mod dead_reckoning;
pub mod error;
pub mod eval;
pub mod format;
pub mod geometry;
pub mod io;
pub mod kalman;
pub mod lm;
pub mod pipeline;
pub mod pluecker;
pub mod rng;
pub mod sim;
pub mod signal;
pub mod trajectory;

pub use error::{Error, Result};
pub use geometry::{Pose, UnitQuaternion, Vec3};
pub use trajectory::{ImuSample, ImuSequence, PoseTrajectory};
