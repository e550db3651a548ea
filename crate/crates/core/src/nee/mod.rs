//! Next-event estimation with learned light selection.

pub mod cdf;
pub mod estimator;
pub mod net;
pub mod online;
pub mod render;
pub mod select;
pub mod td;

pub use cdf::{build_cdf, sample_cdf, Cdf, SELECTION_FLOOR};
pub use estimator::{estimate_direct, light_contribution, sample_light_contribution};
pub use net::{encode_state, LightSelectionNet, SampleRecord};
pub use online::{render_with_online_learning, selection_index_image, IterationMetrics, OnlineConfig, OnlineResult};
pub use render::{render_direct, render_direct_tabular, SelectorName, Selector, TablePolicy, TabularPass};
pub use select::{epsilon_greedy_select, softmax_temperature_select};
pub use td::TdTable;
