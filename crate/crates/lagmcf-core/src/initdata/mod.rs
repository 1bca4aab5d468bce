//! Initial data: analytic presets, heat-kernel mollification, parabolic
//! rescaling and the lift decomposition of periodic gradients.

mod lift;
mod mollify;
mod preset;
mod rescale;

pub use lift::{lift_decompose, LiftDecomposition};
pub use mollify::{mollifier_sequence, mollify, mollify_with_clamp, MollifierReport, MollifierStep};
pub use preset::{make_preset, Preset};
pub use rescale::{parabolic_rescale, RescaleRequest, RescaledFrame};
