//! Conditional quantum teleportation of photon-number states through a
//! two-mode squeezed resource, with a continuous-variable baseline.

pub mod analysis;
pub mod bk;
pub mod error;
pub mod export;
pub mod fock;
pub mod numerics;
pub mod oracle;
pub mod par;
pub mod squeeze;
pub mod teleport;

pub use analysis::{
    conditional_success, convergence_check, diagonal_sweep, sweep_grid, OutcomeFilter, OutcomeGrid, Quantity,
};
pub use bk::{bk_conditional, bk_pu, BkConfig, QuadratureOutcome};
pub use error::{Error, Result};
pub use fock::{fidelity, inner_product, lower_shift, normalize, raise_shift, FockVector};
pub use par::Exec;
pub use squeeze::{coeff_profile, matrix_element, s_coeff, CoeffCache, SqueezeParams};
pub use teleport::{conditional_state, teleport_event, MeasurementOutcome, TeleportResult};
