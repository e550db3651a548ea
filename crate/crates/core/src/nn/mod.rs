//! Dense feed-forward networks with explicit weights, backpropagation and SGD.
//!
//! Everything is `f64`. Networks are tiny (9-9-3, 9-64-64-K), so the code
//! favors inspectability over speed: one `Vec` per weight matrix, row-major
//! `outputs × inputs`.

mod io;
mod mlp;
mod train;

pub use io::{read_network, write_network, NetworkMetadata};
pub use mlp::{softmax, Activation, ForwardCache, Gradients, Layer, TinyMlp};
pub use train::{train_minibatch, LearningRate, Loss, MiniBatch, Sample, Target};
