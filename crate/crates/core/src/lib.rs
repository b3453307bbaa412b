pub mod agent;
pub mod data;
pub mod encoding;
pub mod error;
pub mod lif;
pub mod mushroom;
pub mod network;
pub mod neuron;
pub mod raster;
pub mod scalar;
pub mod training;

pub use data::{Dataset, IdxError, Split};
pub use encoding::{EncodedInput, EncoderSpec, Encoding};
pub use error::{Error, Result};
pub use network::{Layer, Mode, NetworkTopology, Projection, RunTrace, Source};
pub use neuron::{Dynamics, LayerState, NeuronParams, SynapseBundle};
pub use raster::{SpikeEvent, SpikeEventList, SpikeRaster};
pub use scalar::Scalar;
pub use training::{Gradients, Metrics, SampleSource, TargetSpec, TrainConfig};

pub type NeuronParamsF32 = NeuronParams<f32>;
pub type NeuronParamsF64 = NeuronParams<f64>;
pub type NetworkF32 = NetworkTopology<f32>;
pub type NetworkF64 = NetworkTopology<f64>;
pub type SynapsesF32 = SynapseBundle<f32>;
pub type SynapsesF64 = SynapseBundle<f64>;
