//! Boosted stage cascades over Haar and MB-LBP features, and the
//! multi-scale sliding-window detector that runs them.

mod eval;
mod scan;
mod xml;

pub use eval::{
    eval_haar_feature, eval_mb_lbp, run_cascade_window, window_inv_norm, ScaledCascade,
    WindowOutcome,
};
pub use scan::{detect_cascade, scan_cascade, CascadeScan, ScanParams};
pub use xml::{load_cascade, parse_cascade_xml};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Haar,
    MbLbp,
}

/// Rectangle in window-relative pixels with its weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedRect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub weight: f64,
}

/// Two or three weighted rectangles.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarFeature {
    pub rects: Vec<WeightedRect>,
}

/// Anchor block of a 3x3 grid of equally sized blocks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MbLbpFeature {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub enum FeatureTable {
    Haar(Vec<HaarFeature>),
    MbLbp(Vec<MbLbpFeature>),
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        match self {
            FeatureTable::Haar(f) => f.len(),
            FeatureTable::MbLbp(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// How a stump routes a feature value to its left or right leaf.
#[derive(Clone, Debug, PartialEq)]
pub enum Split {
    /// Haar: value below the threshold goes left.
    Threshold(f64),
    /// MB-LBP: codes whose bit is set in the 256-bit mask go left.
    Subset([u32; 8]),
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeakClassifier {
    pub feature: usize,
    pub split: Split,
    pub left: f64,
    pub right: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub threshold: f64,
    pub weak_classifiers: Vec<WeakClassifier>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeModel {
    pub window_w: u32,
    pub window_h: u32,
    pub stages: Vec<Stage>,
    pub features: FeatureTable,
}

impl CascadeModel {
    pub fn feature_kind(&self) -> FeatureKind {
        match self.features {
            FeatureTable::Haar(_) => FeatureKind::Haar,
            FeatureTable::MbLbp(_) => FeatureKind::MbLbp,
        }
    }

    pub fn weak_count(&self) -> usize {
        self.stages.iter().map(|s| s.weak_classifiers.len()).sum()
    }

    /// Checks the structural invariants: at least one stage, nonempty
    /// stages, in-range feature indices, features inside the window and
    /// split kinds matching the feature kind.
    pub fn validate(&self) -> Result<(), String> {
        if self.window_w == 0 || self.window_h == 0 {
            return Err("window size must be positive".into());
        }
        if self.stages.is_empty() {
            return Err("cascade has no stages".into());
        }
        let n = self.features.len();
        for (si, stage) in self.stages.iter().enumerate() {
            if stage.weak_classifiers.is_empty() {
                return Err(format!("stage {si} has no weak classifiers"));
            }
            for (wi, weak) in stage.weak_classifiers.iter().enumerate() {
                if weak.feature >= n {
                    return Err(format!(
                        "stage {si} weak {wi}: feature index {} out of range ({n} features)",
                        weak.feature
                    ));
                }
                let split_ok = matches!(
                    (&self.features, &weak.split),
                    (FeatureTable::Haar(_), Split::Threshold(_))
                        | (FeatureTable::MbLbp(_), Split::Subset(_))
                );
                if !split_ok {
                    return Err(format!(
                        "stage {si} weak {wi}: split kind does not match feature kind"
                    ));
                }
            }
        }
        match &self.features {
            FeatureTable::Haar(features) => {
                for (i, f) in features.iter().enumerate() {
                    if !(2..=3).contains(&f.rects.len()) {
                        return Err(format!("haar feature {i} has {} rects", f.rects.len()));
                    }
                    for r in &f.rects {
                        if r.x + r.w > self.window_w || r.y + r.h > self.window_h {
                            return Err(format!("haar feature {i} leaves the model window"));
                        }
                        if !r.weight.is_finite() {
                            return Err(format!("haar feature {i} has a non-finite weight"));
                        }
                    }
                }
            }
            FeatureTable::MbLbp(features) => {
                for (i, f) in features.iter().enumerate() {
                    if f.w == 0
                        || f.h == 0
                        || f.x + 3 * f.w > self.window_w
                        || f.y + 3 * f.h > self.window_h
                    {
                        return Err(format!("mb-lbp feature {i} leaves the model window"));
                    }
                }
            }
        }
        Ok(())
    }
}
