//! Learned path guiding: a tabular incident-radiance field updated by
//! Q-learning, direction sampling proportional to it, and a neural Q
//! trained on the residual of the transport equation.

mod qgrid;
pub mod qnet;
mod sampling;

pub use qgrid::{bracket, Alpha, QGrid, ScatterSample, DEFAULT_DIRECTION_RESOLUTION, DEFAULT_GRID_RESOLUTION};
pub use qnet::{residual_target, train_q_network_online, QNetwork, QState, QTrainConfig, QTrainReport};
pub use sampling::{cosine_bin_masses, guided_scatter_direction, GuidedDistribution, GuidedSample, DEFAULT_COSINE_MIX};
