//! Steering-inequality view of the two-input two-output bipartite case.
//!
//! With `w_y = r(σ_{0|y} − σ_{1|y})`, the correlator of a trusted Pauli
//! `A = v̂·σ` with the untrusted `±1` observable `B_y` is `w_y · v̂`. The
//! combinations `t_0 = w_0 + w_1` and `t_1 = w_0 − w_1` are exactly the CHSH
//! vectors of [`crate::criterion::chsh_fast`], so the two-Pauli steering
//! expression is the CHSH quantity restricted to a plane.

use serde::Serialize;

use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::qubit::BlochVector;
use crate::tol;

/// Three orthonormal Bloch directions `v̂_0, v̂_1, v̂_2` defining rotated
/// Pauli operators `A_α = v̂_α·σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PauliTriple {
    axes: [BlochVector; 3],
    right_handed: bool,
}

impl PauliTriple {
    /// Accepts either orientation and records which one it is.
    pub fn new(v0: BlochVector, v1: BlochVector, v2: BlochVector) -> Result<Self> {
        let axes = [v0, v1, v2];
        for (i, u) in axes.iter().enumerate() {
            if !u.is_finite() || (u.norm() - 1.0).abs() > tol::RECON {
                return Err(Error::InvalidParameter(format!("axis {i} is not a unit vector")));
            }
            for (j, w) in axes.iter().enumerate().skip(i + 1) {
                if u.dot(*w).abs() > tol::RECON {
                    return Err(Error::InvalidParameter(format!("axes {i} and {j} are not orthogonal")));
                }
            }
        }
        Ok(Self {
            axes,
            right_handed: v0.cross(v1).dot(v2) > 0.0,
        })
    }

    /// `(X, Y, Z)`.
    pub fn computational() -> Self {
        Self {
            axes: [BlochVector::X, BlochVector::Y, BlochVector::Z],
            right_handed: true,
        }
    }

    /// Orthonormalizes `v1` against `v0` and completes with `v̂_2 = v̂_0 × v̂_1`.
    pub fn from_plane(v0: BlochVector, v1: BlochVector) -> Result<Self> {
        let e0 = v0
            .normalized(tol::DEG)
            .ok_or_else(|| Error::InvalidParameter("first axis is zero".into()))?;
        let e1 = (v1 - e0 * e0.dot(v1))
            .normalized(tol::DEG)
            .ok_or_else(|| Error::InvalidParameter("axes are collinear".into()))?;
        Ok(Self {
            axes: [e0, e1, e0.cross(e1)],
            right_handed: true,
        })
    }

    pub fn axes(&self) -> &[BlochVector; 3] {
        &self.axes
    }

    pub fn axis(&self, alpha: usize) -> BlochVector {
        self.axes[alpha]
    }

    pub fn is_right_handed(&self) -> bool {
        self.right_handed
    }
}

fn check_2222(a: &Assemblage) -> Result<()> {
    let s = a.shape();
    if s.inputs_per_party() != [2] || s.outputs_per_party() != [2] {
        return Err(Error::ShapeMismatch(
            "steering expressions need one untrusted party with two inputs and two outputs".into(),
        ));
    }
    Ok(())
}

/// `w_y = r(Σ_b (−1)^b σ_{b|y})` for a single untrusted party.
fn correlation_vector(a: &Assemblage, y: usize) -> BlochVector {
    (0..a.shape().output_strings())
        .map(|b| a.member(b, y).bloch_vector() * if b % 2 == 0 { 1.0 } else { -1.0 })
        .sum()
}

/// `⟨A B_y⟩ = Σ_b (−1)^b Tr[σ_{b|y} (v̂·σ)]` for a unit direction `v̂`.
pub fn correlator(a: &Assemblage, direction: BlochVector, y: usize) -> Result<f64> {
    let s = a.shape();
    if s.untrusted_parties() != 1 || s.outputs_per_party() != [2] {
        return Err(Error::ShapeMismatch("correlators need one untrusted party with two outputs".into()));
    }
    if y >= s.input_strings() {
        return Err(Error::IndexOutOfRange(format!("input {y} of {}", s.input_strings())));
    }
    if !direction.is_finite() || (direction.norm() - 1.0).abs() > tol::RECON {
        return Err(Error::InvalidParameter("correlator direction must be a unit vector".into()));
    }
    Ok(correlation_vector(a, y).dot(direction))
}

/// `t_0 = w_0 + w_1`, `t_1 = w_0 − w_1`.
pub fn chsh_vectors(a: &Assemblage) -> Result<[BlochVector; 2]> {
    check_2222(a)?;
    let (w0, w1) = (correlation_vector(a, 0), correlation_vector(a, 1));
    Ok([w0 + w1, w0 - w1])
}

fn steering_sum(a: &Assemblage, basis: &PauliTriple, axes: usize) -> Result<f64> {
    let [t0, t1] = chsh_vectors(a)?;
    let root = |t: BlochVector| {
        basis.axes[..axes]
            .iter()
            .map(|v| t.dot(*v).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    Ok(root(t0) + root(t1))
}

/// `√(Σ_{x<2} ⟨A_x(B_0+B_1)⟩²) + √(Σ_{x<2} ⟨A_x(B_0−B_1)⟩²)`; a value above
/// 2 certifies steering.
pub fn cavalcanti_lhs(a: &Assemblage, basis: &PauliTriple) -> Result<f64> {
    steering_sum(a, basis, 2)
}

/// The same expression summed over all three Paulis; equals `‖t_0‖ + ‖t_1‖`
/// for every basis.
pub fn three_pauli_lhs(a: &Assemblage, basis: &PauliTriple) -> Result<f64> {
    steering_sum(a, basis, 3)
}

/// A basis whose first two axes span the plane of `t_0, t_1`, so that the
/// two-Pauli expression loses nothing.
///
/// Degenerate cases: both vectors zero gives the computational triple; a
/// single common line `u` is completed by the first of `X, Y, Z` not
/// collinear with it.
pub fn optimal_steering_basis(a: &Assemblage) -> Result<PauliTriple> {
    let [t0, t1] = chsh_vectors(a)?;
    let (long, short) = if t0.norm() >= t1.norm() { (t0, t1) } else { (t1, t0) };
    let Some(u) = long.normalized(tol::DEG) else {
        return Ok(PauliTriple::computational());
    };
    if let Ok(basis) = PauliTriple::from_plane(u, short) {
        if short.norm() > tol::DEG && u.cross(short).norm() > tol::DEG {
            return Ok(basis);
        }
    }
    let axis = [BlochVector::X, BlochVector::Y, BlochVector::Z]
        .into_iter()
        .find(|e| u.cross(*e).norm() > 1e-6)
        .expect("a unit vector is collinear with at most one axis");
    PauliTriple::from_plane(u, axis)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringEvaluation {
    pub basis: PauliTriple,
    pub cavalcanti_lhs: f64,
    pub three_pauli_lhs: f64,
    /// `three_pauli_lhs − cavalcanti_lhs`, never negative.
    pub gap: f64,
}

pub fn steering_evaluation(a: &Assemblage, basis: PauliTriple) -> Result<SteeringEvaluation> {
    let cavalcanti_lhs = cavalcanti_lhs(a, &basis)?;
    let three_pauli_lhs = three_pauli_lhs(a, &basis)?;
    Ok(SteeringEvaluation {
        basis,
        cavalcanti_lhs,
        three_pauli_lhs,
        gap: three_pauli_lhs - cavalcanti_lhs,
    })
}
