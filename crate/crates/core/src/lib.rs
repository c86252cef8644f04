//! LiDAR single-object-tracking robustness toolkit: weather corruption,
//! domain randomization, local geometric contrastive alignment, dataset
//! construction, one-pass evaluation and failure analysis.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod lgcm;
pub mod randomize;
pub mod seed;
pub mod weather;

pub use analysis::{binned_iou_deviation, extract_paired_records, BinAxis, BinSpec, PairedFrameRecord};
pub use config::StormConfig;
pub use dataset::{
    build_corruption_grid, filter_real_sequences, generate_synthetic_scene, group_by_condition, Category,
    DatasetManifest, Frame, SceneSpec, TrackingSequence,
};
pub use error::{Error, Result};
pub use eval::{
    build_report, degradation_rate, one_pass_evaluate, range_stat, run_reference_tracker, std_dev, MetricReport,
    OpeScore, TrackResult, TrackerKind,
};
pub use geometry::{hausdorff_distance, iou_3d, IouMode, OrientedBox3D, Point3, PointCloud};
pub use lgcm::{alignment_loss, lgcm_pipeline, toy_descriptor, FeatureCloud, LgcmConfig};
pub use randomize::{randomize, AugmentationTrace, RandomizationConfig};
pub use seed::derive_seed;
pub use weather::{corrupt_frame, corrupt_sequence, SeverityLevel, SeverityTable, WeatherKind};
