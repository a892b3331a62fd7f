//! ICA baselines that consume raw chart observations: FastICA with the
//! log-cosh contrast, and a conformal nonlinear-ICA baseline built from a
//! composition of Möbius transformations trained by maximum likelihood.

mod fastica;
mod mobius;

pub use fastica::{fastica_fit, FastIcaConfig, FastIcaOutput};
pub use mobius::{
    layer_forward, layer_log_det_forward, mobius_forward, mobius_inverse, nlica_fit, MobiusFlow,
    MobiusLayerView, NlicaOutput, TrainConfig,
};
pub use mobius::{center_and_project, nll_and_gradients};
