//! Sequences, synthetic data, the real-time evaluation protocol and reports.

pub mod bench;
pub mod image;
pub mod mot;
pub mod report;
pub mod synth;
pub mod vot;

pub use bench::{bench_scaling, grid_boxes, scaling_csv, scaling_table, ScalingRow};
pub use image::{list_frames, Image};
pub use mot::{
    format_mot, format_results, load_mot_sequence, parse_mot, FrameBoxes, MotGroundTruth, Sequence,
};
pub use report::{report_csv, report_text};
pub use synth::{synth_sequence, synth_trajectories, SynthObject, SynthSpec};
pub use vot::{
    robustness, run_vot_rt, EvalReport, LatencyModel, OracleTracker, SequenceTracker, TargetReport, GAMMA,
    REINIT_DELAY,
};
