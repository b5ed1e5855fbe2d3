//! Singularity analysis: branch points, Puiseux expansions, systems at the
//! Jacobian degeneracy point, and transfer to coefficient asymptotics.

pub mod closed_form;
pub mod dlw;
pub mod expectation;
pub mod implicit;
pub mod transfer;
pub mod two_connected;

use rug::Float;

/// `A_0 + A_1 X + A_2 X^2 + ...` with `X = sqrt(1 - x/rho)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularExpansion {
    pub rho: Float,
    pub coeffs: Vec<Float>,
}

impl SingularExpansion {
    pub fn new(rho: Float, coeffs: Vec<Float>) -> Self {
        SingularExpansion { rho, coeffs }
    }
}
