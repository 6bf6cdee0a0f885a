pub mod dtw;
pub mod export;
pub mod fisher;
pub mod loess;
pub mod pearson;
pub mod pipeline;

pub use dtw::{dtw_align, AlignedPair};
pub use export::{trajectory_export, DEFAULT_REAL_SCALE, EXPORT_HEADER};
pub use fisher::{fisher_two_sided, odds_ratio_test, OddsRatioTest};
pub use loess::{loess_smooth, LoessDegree};
pub use pearson::pearson_r;
pub use pipeline::{dtw_corr_pipeline, ChannelCorrelationReport, ChannelRow, PipelineOptions, REPORT_HEADER};
