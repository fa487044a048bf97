//! Process maps, path statistics, length of stay and crowdedness.

pub mod cohort;
pub mod crowd;
pub mod dfg;
pub mod dot;
pub mod los;
pub mod paths;
pub mod stats;

pub use cohort::{cohort_compare, select_cohort, CohortComparison, CohortRow, Split};
pub use crowd::{
    crowdedness, crowdedness_threshold, simultaneity_counts, stay_intervals, Crowdedness,
    CrowdednessRecord, StayInterval, DEFAULT_CROWDEDNESS_PERCENTILE,
};
pub use dfg::{mine_dfg, Dfg, EdgeStats, EndpointStats, NodeStats};
pub use dot::{export_dot, Annotation, DotOptions};
pub use los::{
    classify_quadrants, compute_los, los_percentile, AcuityBand, LosRecord, Quadrant,
    QuadrantTable, DEFAULT_LOS_THRESHOLD_MINUTES,
};
pub use paths::{path_statistics, Aggregation, PathStats};
