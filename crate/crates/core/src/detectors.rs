//! One interface over every detector, plus loading from a models directory.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::blazeface::{detect_blazeface, BlazeFaceModel, BlazeKind};
use crate::cascade::{detect_cascade, load_cascade, scan_cascade, CascadeModel, CascadeScan, ScanParams};
use crate::detection::{group_rectangles, Detection};
use crate::error::{Error, Result};
use crate::hog::{detect_hog, load_svm, HogConfig, HogDetectParams, LinearSvmModel};
use crate::imaging::{to_grayscale, ImageBuffer};
use crate::mtcnn::{detect_mtcnn, MtcnnModels, MtcnnParams};

/// A loaded detector. `detect` covers the whole per-frame cost: color
/// conversion, detection and post-processing.
pub trait FaceDetector {
    fn name(&self) -> &str;

    /// Input size of single-resolution models; `None` accepts any size.
    fn native_resolution(&self) -> Option<(usize, usize)> {
        None
    }

    fn detect(&self, img: &ImageBuffer) -> Result<Vec<Detection>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Haar,
    Lbp,
    Hog,
    Mtcnn,
    BlazeFaceFront,
    BlazeFaceRear,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Haar,
        Algorithm::Lbp,
        Algorithm::Hog,
        Algorithm::Mtcnn,
        Algorithm::BlazeFaceFront,
        Algorithm::BlazeFaceRear,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Haar => "haar",
            Algorithm::Lbp => "lbp",
            Algorithm::Hog => "hog",
            Algorithm::Mtcnn => "mtcnn",
            Algorithm::BlazeFaceFront => "blazeface-front",
            Algorithm::BlazeFaceRear => "blazeface-rear",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.as_str()).collect();
                Error::invalid(format!("unknown algorithm {s:?} (expected one of {})", names.join(", ")))
            })
    }
}

pub const HAAR_MODEL: &str = "haarcascade_frontalface_default.xml";
pub const LBP_MODEL: &str = "lbpcascade_frontalface.xml";
pub const HOG_MODEL: &str = "hog_face.hsvm";
pub const BLAZEFACE_FRONT_MODEL: &str = "blazeface_front.fdnw";
pub const BLAZEFACE_REAR_MODEL: &str = "blazeface_rear.fdnw";

/// Models shipped with this crate.
pub fn bundled_models_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join("models")
}

/// Model files an algorithm reads from `dir`, in load order.
pub fn model_paths(algo: Algorithm, dir: &Path) -> Vec<PathBuf> {
    match algo {
        Algorithm::Haar => vec![dir.join(HAAR_MODEL)],
        Algorithm::Lbp => vec![dir.join(LBP_MODEL)],
        Algorithm::Hog => vec![dir.join(HOG_MODEL)],
        Algorithm::Mtcnn => ["pnet.fdnw", "rnet.fdnw", "onet.fdnw"]
            .iter()
            .map(|f| dir.join(f))
            .collect(),
        Algorithm::BlazeFaceFront => vec![dir.join(BLAZEFACE_FRONT_MODEL)],
        Algorithm::BlazeFaceRear => vec![dir.join(BLAZEFACE_REAR_MODEL)],
    }
}

/// Loads the detector for `algo` with default parameters.
pub fn load_detector(algo: Algorithm, dir: &Path) -> Result<Box<dyn FaceDetector>> {
    let paths = model_paths(algo, dir);
    Ok(match algo {
        Algorithm::Haar | Algorithm::Lbp => Box::new(CascadeDetector::new(
            algo.as_str(),
            load_cascade(&paths[0])?,
            ScanParams::default(),
        )),
        Algorithm::Hog => Box::new(HogDetector::new(load_svm(&paths[0])?)?),
        Algorithm::Mtcnn => Box::new(MtcnnDetector {
            models: MtcnnModels::load_dir(dir)?,
            params: MtcnnParams::default(),
        }),
        Algorithm::BlazeFaceFront => Box::new(BlazeFaceDetector::load(BlazeKind::Front, &paths[0])?),
        Algorithm::BlazeFaceRear => Box::new(BlazeFaceDetector::load(BlazeKind::Rear, &paths[0])?),
    })
}

pub struct CascadeDetector {
    name: String,
    pub model: CascadeModel,
    pub params: ScanParams,
}

impl CascadeDetector {
    pub fn new(name: impl Into<String>, model: CascadeModel, params: ScanParams) -> Self {
        Self {
            name: name.into(),
            model,
            params,
        }
    }

    /// Detection together with the scan's work counters.
    pub fn detect_with_scan(&self, img: &ImageBuffer) -> Result<(Vec<Detection>, CascadeScan)> {
        let scan = scan_cascade(&self.model, &to_grayscale(img), &self.params)?;
        let dets = group_rectangles(&scan.windows, self.params.min_neighbors, self.params.group_eps);
        Ok((dets, scan))
    }
}

impl FaceDetector for CascadeDetector {
    fn name(&self) -> &str {
        &self.name
    }

    fn detect(&self, img: &ImageBuffer) -> Result<Vec<Detection>> {
        detect_cascade(&self.model, img, &self.params)
    }
}

pub struct HogDetector {
    pub model: LinearSvmModel,
    pub config: HogConfig,
    pub params: HogDetectParams,
}

impl HogDetector {
    pub fn new(model: LinearSvmModel) -> Result<Self> {
        let config = HogConfig::default();
        if model.weights.len() != config.descriptor_len() {
            return Err(Error::WeightLoad(format!(
                "hog model has {} weights, expected {}",
                model.weights.len(),
                config.descriptor_len()
            )));
        }
        Ok(Self {
            model,
            config,
            params: HogDetectParams::default(),
        })
    }
}

impl FaceDetector for HogDetector {
    fn name(&self) -> &str {
        "hog"
    }

    fn detect(&self, img: &ImageBuffer) -> Result<Vec<Detection>> {
        detect_hog(&self.model, &self.config, img, &self.params)
    }
}

pub struct MtcnnDetector {
    pub models: MtcnnModels,
    pub params: MtcnnParams,
}

impl FaceDetector for MtcnnDetector {
    fn name(&self) -> &str {
        "mtcnn"
    }

    fn detect(&self, img: &ImageBuffer) -> Result<Vec<Detection>> {
        detect_mtcnn(img, &self.params, &self.models)
    }
}

pub struct BlazeFaceDetector {
    pub model: BlazeFaceModel,
}

impl BlazeFaceDetector {
    pub fn load(kind: BlazeKind, path: &Path) -> Result<Self> {
        Ok(Self {
            model: BlazeFaceModel::load(kind, path)?,
        })
    }
}

impl FaceDetector for BlazeFaceDetector {
    fn name(&self) -> &str {
        match self.model.variant.kind {
            BlazeKind::Front => "blazeface-front",
            BlazeKind::Rear => "blazeface-rear",
        }
    }

    fn native_resolution(&self) -> Option<(usize, usize)> {
        let s = self.model.variant.input_size;
        Some((s, s))
    }

    fn detect(&self, img: &ImageBuffer) -> Result<Vec<Detection>> {
        detect_blazeface(img, &self.model)
    }
}
