//! Seeded random objects for property tests, the oracle and the
//! well-behavedness search.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::assemblage::Assemblage;
use crate::criterion::DichotomicPOVM;
use crate::error::Result;
use crate::generate::{generate_with_trusted_inputs, MultipartyState, PartyMeasurements, UntrustedMeasurementSet};
use crate::qubit::{BlochVector, HermitianOp};
use crate::shape::ScenarioShape;

type CMatrix = DMatrix<Complex64>;

/// Uniform on the unit sphere.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    loop {
        let v = BlochVector::new(rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal));
        if let Some(n) = v.normalized(1e-6) {
            return n;
        }
    }
}

/// `M⁽⁰⁾ = λ₀ Π(n̂) + λ₁ Π(−n̂)` with `λ` uniform on `[0,1]²` and `n̂` uniform.
pub fn dichotomic_povm<R: Rng + ?Sized>(rng: &mut R) -> DichotomicPOVM {
    let n = unit_vector(rng);
    let (l0, l1): (f64, f64) = (rng.random(), rng.random());
    let m0 = HermitianOp::projector(n) * l0 + HermitianOp::projector(-n) * l1;
    let m1 = HermitianOp::IDENTITY - m0;
    DichotomicPOVM::new(m0, m1).expect("convex mixture of projectors is a POVM")
}

/// A random right-handed orthonormal frame.
pub fn orthonormal_frame<R: Rng + ?Sized>(rng: &mut R) -> [BlochVector; 3] {
    let v0 = unit_vector(rng);
    let v1 = loop {
        let w = unit_vector(rng);
        if let Some(u) = (w - v0 * v0.dot(w)).normalized(1e-6) {
            break u;
        }
    };
    [v0, v1, v0.cross(v1)]
}

fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Mixed state `G G† / Tr` with `G` a `d × k` Ginibre matrix, `k` uniform in `1..=d`.
pub fn density_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    let k = rng.random_range(1..=d);
    let g = ginibre(rng, d, k);
    let rho = &g * g.adjoint();
    let rho = (&rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = rho.trace();
    rho / tr
}

/// Haar-like unitary from the QR decomposition of a Ginibre matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    ginibre(rng, d, d).qr().q()
}

/// Projective measurement onto the columns of a random unitary.
fn basis_measurement<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<CMatrix> {
    let u = unitary(rng, d);
    (0..d)
        .map(|i| {
            let col = u.column(i);
            let p = col * col.adjoint();
            (&p + p.adjoint()) * Complex64::new(0.5, 0.0)
        })
        .collect()
}

/// Local dimensions (trusted qubit first) and random projective measurements
/// of every untrusted party.
fn random_parties<R: Rng + ?Sized>(rng: &mut R, shape: &ScenarioShape) -> Result<(Vec<usize>, UntrustedMeasurementSet)> {
    let mut dims = vec![2];
    let mut parties = Vec::new();
    for (&m, &o) in shape.inputs_per_party().iter().zip(shape.outputs_per_party()) {
        let d = o.max(2);
        dims.push(d);
        let settings = (0..m)
            .map(|_| if o == 1 { vec![CMatrix::identity(d, d)] } else { basis_measurement(rng, d) })
            .collect();
        parties.push(PartyMeasurements::new(d, settings)?);
    }
    Ok((dims, UntrustedMeasurementSet::new(parties)))
}

/// Assemblage from a random mixed state on `2 ⊗ o_1 ⊗ …` (dimension 2 for
/// single-outcome parties) and random projective measurements.
pub fn assemblage<R: Rng + ?Sized>(rng: &mut R, shape: &ScenarioShape) -> Result<Assemblage> {
    let (dims, parties) = random_parties(rng, shape)?;
    let total = dims.iter().product();
    let state = MultipartyState::new(dims, density_matrix(rng, total))?;
    generate_with_trusted_inputs(&state, &parties, shape.trusted_inputs())
}

/// Like [`assemblage`], but the state is `v·|G⟩⟨G| + (1−v)·I/D` with
/// `|G⟩ = (|0…0⟩ + |1…1⟩)/√2` and `v` uniform in `[0.7, 1]`, so that
/// violations of standard inequalities are common.
pub fn entangled_assemblage<R: Rng + ?Sized>(rng: &mut R, shape: &ScenarioShape) -> Result<Assemblage> {
    let (dims, parties) = random_parties(rng, shape)?;
    let total: usize = dims.iter().product();
    let mut psi = vec![Complex64::new(0.0, 0.0); total];
    psi[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let ones = dims.iter().fold(0, |acc, &d| acc * d + 1);
    psi[ones] = psi[0];
    let g = CMatrix::from_column_slice(total, 1, &psi);
    let v: f64 = rng.random_range(0.7..=1.0);
    let rho = &g * g.adjoint() * Complex64::new(v, 0.0)
        + CMatrix::identity(total, total) * Complex64::new((1.0 - v) / total as f64, 0.0);
    let state = MultipartyState::new(dims, rho)?;
    generate_with_trusted_inputs(&state, &parties, shape.trusted_inputs())
}
