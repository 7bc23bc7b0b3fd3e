//! Minimal reverse-mode automatic differentiation over dense 2-D tensors,
//! with an ADAM optimizer and a flat serialization format for parameter
//! bundles. Just enough machinery for the graph-convolution embeddings, the
//! per-owner scoring network and the monotone min-max network.

mod adam;
mod bundle;
mod tape;

pub use adam::AdamState;
pub use bundle::{ParamBundle, ParamRecord};
pub use tape::{Gradients, Tape, TensorId};
