//! Per-target exemplar and search features.

pub mod attention;
pub mod inertia;
pub mod roi;

pub use attention::{
    attention_apply, attention_init, channel_attention, mix_channels, AttentionWeights, ExemplarCache,
};
pub use inertia::{
    inertia_input, inertia_mlp, predict_inertia, synthetic_inertia_batch, train_inertia, BoxHistory,
    InertiaTraining, HISTORY_CAPACITY, INERTIA_INPUT_DIM,
};
pub use roi::{
    exemplar_side, extract_exemplar, extract_search, plan_regions, search_side, select_level, RegionPlan,
    RoiConfig, SearchArea,
};
