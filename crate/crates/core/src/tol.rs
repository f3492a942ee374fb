//! Numerical tolerances shared across the crate.
//!
//! The algebra tolerances are tight since all operators are 2×2; the
//! assemblage tolerances are looser to absorb error from generating members
//! out of larger multi-party states.

use serde::{Deserialize, Serialize};

/// Hermiticity check, absolute and entrywise.
pub const HERM: f64 = 1e-12;
/// Operator reconstruction, absolute and entrywise.
pub const RECON: f64 = 1e-12;
/// Slack on the Bloch-vector norm of a state.
pub const NORM: f64 = 1e-9;
/// Positivity of assemblage members and measurement effects.
pub const PSD: f64 = 1e-9;
/// Normalization of assemblages and distributions.
pub const NRM: f64 = 1e-9;
/// No-signaling consistency of assemblages.
pub const NS: f64 = 1e-9;
/// Below this norm an optimal direction is treated as undefined.
pub const DEG: f64 = 1e-12;
/// Values within this distance of the local bound are reported as marginal.
pub const TIE: f64 = 1e-10;

/// The tolerance set in effect for a run. Defaults to the crate constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub herm: f64,
    pub recon: f64,
    pub norm: f64,
    pub psd: f64,
    pub nrm: f64,
    pub ns: f64,
    pub deg: f64,
    pub tie: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            herm: HERM,
            recon: RECON,
            norm: NORM,
            psd: PSD,
            nrm: NRM,
            ns: NS,
            deg: DEG,
            tie: TIE,
        }
    }
}

impl Tolerances {
    /// Overrides one tolerance by key. Returns `false` for an unknown key.
    pub fn set(&mut self, key: &str, value: f64) -> bool {
        let slot = match key {
            "herm" => &mut self.herm,
            "recon" => &mut self.recon,
            "norm" => &mut self.norm,
            "psd" => &mut self.psd,
            "nrm" => &mut self.nrm,
            "ns" => &mut self.ns,
            "deg" => &mut self.deg,
            "tie" => &mut self.tie,
            _ => return false,
        };
        *slot = value;
        true
    }
}
