//! Small deterministic CNN inference engine: tensors, layer kernels, a
//! sequential network runner with named skips and taps, and the FDNW weight
//! file format.

mod fdnw;
mod network;
pub mod ops;
mod tensor;

pub use fdnw::{WeightFile, WeightRecord, WeightTensor};
pub use network::{run_network, LayerSpec, Network, NetworkSpec, Op, RunTrace, INPUT};
pub use tensor::Tensor;
