//! Face detection toolkit: Haar and MB-LBP cascades, HOG + linear SVM,
//! MTCNN and BlazeFace on a small CNN inference engine, plus a latency
//! benchmark harness with scoring and cross-run comparison.

pub mod bench;
pub mod blazeface;
pub mod cascade;
pub mod detection;
pub mod detectors;
pub mod error;
pub mod hog;
pub mod imaging;
pub mod mtcnn;
pub mod nn;

pub use detection::{BoundingBox, Detection, Landmark, LandmarkKind};
pub use error::{Error, Result};
pub use imaging::ImageBuffer;
