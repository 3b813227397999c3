//! The reconstruction network and its structural tooling.

pub mod checkpoint;
mod config;
mod network;
mod params;
pub mod probe;

pub use config::ModelConfig;
pub use network::{
    build_branch, crnn_iterate, oucr_forward, refine_module, Branch, BranchKind, ConvSpec, HiddenState, Oucr,
    RefineModule,
};
pub use checkpoint::{load_tensors, save_tensors, TensorEntry, TensorIndex};
pub use params::{param_count, Bound, Namespace, ParamSet};
pub use probe::{encoder_prefix, probe_network, receptive_field_probe, ProbeLayer, ReceptiveField};
