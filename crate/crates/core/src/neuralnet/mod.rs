//! A small dense/convolutional network engine with Adadelta, plus builders
//! for the convolutional architectures.

pub mod arch;
pub mod layers;
pub mod net;
pub mod optim;
pub mod signal_image;
pub mod tensor;
pub mod train;

pub use arch::{
    assemble_modalities, build_chen_xue, build_chen_xue_with, build_ha, build_ha2015, build_ha2016,
    build_jiang_yin, build_jiang_yin_with, modality_groups, padded_width, ChenXueParams, HaParams,
    JiangYinParams,
};
pub use layers::{Activation, Dims, PoolKind};
pub use net::{LayerSpec, NetSpec, Network, Shape};
pub use optim::{adadelta_step, AdadeltaState};
pub use signal_image::{channel_sequence, signal_image};
pub use tensor::Tensor;
pub use train::{fit, grad_check, relative_error, EpochLog, GradCheck, TrainConfig, TrainedNet};
