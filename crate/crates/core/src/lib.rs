//! Region growing segmentation driven by a neighborhood classifier.
//!
//! A frontier of seed pixels is repeatedly classified: every evaluated pixel
//! casts foreground votes onto its 3×3 neighborhood, and a pixel joins the
//! mask once its average vote exceeds a threshold. Admitted pixels form the
//! next frontier, so every object in the output is grown outwards from a seed.
//!
//! The crate is organised as:
//!
//! * [`imgdata`]: rasters, file formats, tiling, dataset layout and a
//!   synthetic vessel generator.
//! * [`classify`]: the classifier contract and its backends.
//! * [`grow`]: the region growing engine and the dense-threshold baseline.
//! * [`train`]: balanced sampling, boundary weighting, augmentation and
//!   fitting of the reference classifier.
//! * [`metrics`]: Dice, Jaccard, MSSD, connected components and threshold
//!   tuning.

pub mod classify;
pub mod error;
pub mod grow;
pub mod imgdata;
pub mod metrics;
pub mod train;

pub use classify::{
    classify_batch, BoundClassifier, Classifier, ClassifierConfig, ClassifierModel, FeatureSpec,
    ModelClassifier, NeighborhoodPrediction, OracleClassifier, ProbMapClassifier,
};
pub use error::{Error, Result};
pub use grow::{
    dense_threshold_segment, grow_region, grow_region_from, sample_seeds, Frontier, GrowConfig,
    GrowResult, VoteAccumulator,
};
pub use imgdata::{DatasetSplit, Image, Mask, Pixel, ProbMap, Sample, SynthParams};
pub use metrics::{
    dice, distance_field, evaluate, jaccard, label_components, largest_component, mssd,
    ComponentLabeling, Connectivity, DistanceField, Metric, MetricReport,
};
pub use train::{TrainConfig, TrainSample, WeightMap};
