//! Bayesian change-point detection for sequences of networks.
//!
//! Layers of a network tensor are degree-corrected ([`correction`]) and
//! modelled as `B_t = U_{S_t} diag(v_t) U_{S_t}^T + noise`, where the hidden
//! regime `S_t` moves forward through `M` regimes. [`sampler`] draws from the
//! posterior, [`diagnostics`] compares candidate numbers of change points and
//! [`postprocess`] turns draws into regime summaries and CSV exports.

pub mod correction;
pub mod diagnostics;
pub mod dist;
pub mod error;
pub mod postprocess;
pub mod sampler;
pub mod spectral;
pub mod synth;
pub mod tensor;

pub use correction::{degree_correct, CorrectedTensor, NullKind, NullModel};
pub use error::{HmtmError, Result};
pub use sampler::config::{ErrorKind, FixedParams, HmtmConfig, Priors};
pub use sampler::state::{HmtmState, McmcTrace, RegimePath};
pub use sampler::{fit_hmtm, initialize_state, Sampler};
pub use synth::{default_schedule, make_block_network_change, BlockSchedule, EdgeProbabilities, Scenario};
pub use tensor::{load_tensor, Edge, IndexBase, NetworkTensor};
