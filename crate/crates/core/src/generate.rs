//! Born-rule generation of assemblages from multi-party states, and the
//! built-in test assemblages.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Deserialize;

use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::qubit::{BlochVector, HermitianOp};
use crate::shape::ScenarioShape;
use crate::tol;

pub type CMatrix = DMatrix<Complex64>;

const STATE_TOL: f64 = 1e-9;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn hermiticity_gap(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn min_eigenvalue(m: &CMatrix) -> f64 {
    let h = (m + m.adjoint()) * c(0.5);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Dense Kronecker product of a list of square matrices.
fn kron_all<'a>(factors: impl IntoIterator<Item = &'a CMatrix>) -> CMatrix {
    factors
        .into_iter()
        .fold(CMatrix::identity(1, 1), |acc, f| acc.kronecker(f))
}

/// A density operator on `2 ⊗ d_1 ⊗ … ⊗ d_{N-1}`, trusted qubit first.
#[derive(Debug, Clone, PartialEq)]
pub struct MultipartyState {
    dims: Vec<usize>,
    rho: CMatrix,
}

impl MultipartyState {
    /// `dims[0]` must be 2. Rejects matrices that are not unit-trace PSD.
    pub fn new(dims: Vec<usize>, rho: CMatrix) -> Result<Self> {
        if dims.len() < 2 || dims[0] != 2 {
            return Err(Error::InvalidState("need a trusted qubit followed by at least one untrusted party".into()));
        }
        let d: usize = dims.iter().product();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "state is {}×{} but local dimensions {dims:?} require {d}×{d}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let gap = hermiticity_gap(&rho);
        if !(gap <= STATE_TOL) {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {gap:.3e})")));
        }
        let tr = rho.trace();
        if !((tr.re - 1.0).abs() <= STATE_TOL && tr.im.abs() <= STATE_TOL) {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let lo = min_eigenvalue(&rho);
        if lo < -STATE_TOL {
            return Err(Error::InvalidState(format!("not positive semidefinite (min eigenvalue {lo:.3e})")));
        }
        Ok(Self { dims, rho })
    }

    pub fn pure(dims: Vec<usize>, psi: &[Complex64]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        let n = v.norm();
        if !(n > 0.0) {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = v / c(n);
        Self::new(dims, &v * v.adjoint())
    }

    /// `(|01⟩ − |10⟩)/√2`.
    pub fn singlet() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::pure(vec![2, 2], &[c(0.0), c(h), c(-h), c(0.0)]).expect("static state")
    }

    /// `v·singlet + (1−v)·I/4`.
    pub fn werner(v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidParameter(format!("visibility {v} outside [0, 1]")));
        }
        let rho = Self::singlet().rho * c(v) + CMatrix::identity(4, 4) * c((1.0 - v) / 4.0);
        Self::new(vec![2, 2], rho)
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` on `n ≥ 2` qubits.
    pub fn ghz(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParameter(format!("GHZ state needs at least 2 qubits, got {n}")));
        }
        let d = 1usize << n;
        let mut psi = vec![c(0.0); d];
        psi[0] = c(1.0);
        psi[d - 1] = c(1.0);
        Self::pure(vec![2; n], &psi)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    /// Reads `{"dims": [...], "rho": [[[re, im], ...], ...]}`.
    pub fn from_json_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            dims: Vec<usize>,
            rho: Vec<Vec<[f64; 2]>>,
        }
        let doc: Doc = serde_json::from_str(text)?;
        let n = doc.rho.len();
        if doc.rho.iter().any(|row| row.len() != n) {
            return Err(Error::Format("density matrix rows have unequal lengths".into()));
        }
        let rho = CMatrix::from_fn(n, n, |i, j| Complex64::new(doc.rho[i][j][0], doc.rho[i][j][1]));
        Self::new(doc.dims, rho)
    }
}

/// Measurements of one untrusted party: for each input, a list of effects.
#[derive(Debug, Clone, PartialEq)]
pub struct PartyMeasurements {
    dim: usize,
    settings: Vec<Vec<CMatrix>>,
}

impl PartyMeasurements {
    /// Checks each setting is a POVM with the same number of outcomes.
    pub fn new(dim: usize, settings: Vec<Vec<CMatrix>>) -> Result<Self> {
        let outcomes = settings.first().map(Vec::len).unwrap_or(0);
        if outcomes == 0 {
            return Err(Error::InvalidMeasurement("a party needs at least one input with one outcome".into()));
        }
        for (y, effects) in settings.iter().enumerate() {
            if effects.len() != outcomes {
                return Err(Error::InvalidMeasurement(format!(
                    "input {y} has {} outcomes, input 0 has {outcomes}",
                    effects.len()
                )));
            }
            let mut total = CMatrix::zeros(dim, dim);
            for (b, e) in effects.iter().enumerate() {
                if e.nrows() != dim || e.ncols() != dim {
                    return Err(Error::ShapeMismatch(format!("effect (b={b}, y={y}) is not {dim}×{dim}")));
                }
                if hermiticity_gap(e) > tol::RECON {
                    return Err(Error::InvalidMeasurement(format!("effect (b={b}, y={y}) is not Hermitian")));
                }
                if min_eigenvalue(e) < -tol::PSD {
                    return Err(Error::InvalidMeasurement(format!("effect (b={b}, y={y}) is not PSD")));
                }
                total += e;
            }
            let gap = (total - CMatrix::identity(dim, dim)).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if gap > tol::RECON {
                return Err(Error::InvalidMeasurement(format!(
                    "effects of input {y} sum to identity only within {gap:.3e}"
                )));
            }
        }
        Ok(Self { dim, settings })
    }

    /// Von Neumann qubit measurements, one Bloch direction per input; outcome
    /// 0 is the +1 eigenvalue.
    pub fn qubit_directions(directions: &[BlochVector]) -> Result<Self> {
        let settings = directions
            .iter()
            .map(|&n| {
                let n = n
                    .normalized(tol::DEG)
                    .ok_or_else(|| Error::InvalidMeasurement("zero measurement direction".into()))?;
                Ok([n, -n].iter().map(|&d| qubit_matrix(&HermitianOp::projector(d))).collect())
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(2, settings)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inputs(&self) -> usize {
        self.settings.len()
    }

    pub fn outputs(&self) -> usize {
        self.settings[0].len()
    }

    pub fn effect(&self, b: usize, y: usize) -> &CMatrix {
        &self.settings[y][b]
    }
}

/// Measurements of all untrusted parties, party 1 first.
#[derive(Debug, Clone, PartialEq)]
pub struct UntrustedMeasurementSet {
    pub parties: Vec<PartyMeasurements>,
}

impl UntrustedMeasurementSet {
    pub fn new(parties: Vec<PartyMeasurements>) -> Self {
        Self { parties }
    }

    /// Every untrusted qubit party measures along the same per-input directions.
    pub fn uniform_qubit(parties: usize, directions: &[BlochVector]) -> Result<Self> {
        let p = PartyMeasurements::qubit_directions(directions)?;
        Ok(Self::new(vec![p; parties]))
    }

    pub fn shape(&self, trusted_inputs: usize) -> Result<ScenarioShape> {
        ScenarioShape::new(
            self.parties.iter().map(PartyMeasurements::inputs).collect(),
            self.parties.iter().map(PartyMeasurements::outputs).collect(),
            trusted_inputs,
        )
    }
}

/// Converts a qubit operator into a dense 2×2 matrix.
pub fn qubit_matrix(op: &HermitianOp) -> CMatrix {
    let e = op.entries();
    CMatrix::from_fn(2, 2, |i, j| e[i][j])
}

/// `σ_{b|y} = Tr_untrusted[(I ⊗ M_{b_1|y_1} ⊗ … ) ρ]`.
///
/// The trusted side's input count is not fixed by a state; the returned
/// shape uses `trusted_inputs = 2`, which [`Assemblage`] consumers may
/// override through their inequality.
pub fn generate_from_state(state: &MultipartyState, measurements: &UntrustedMeasurementSet) -> Result<Assemblage> {
    generate_with_trusted_inputs(state, measurements, 2)
}

pub fn generate_with_trusted_inputs(
    state: &MultipartyState,
    measurements: &UntrustedMeasurementSet,
    trusted_inputs: usize,
) -> Result<Assemblage> {
    let untrusted_dims: Vec<usize> = measurements.parties.iter().map(PartyMeasurements::dim).collect();
    if untrusted_dims.as_slice() != &state.dims[1..] {
        return Err(Error::ShapeMismatch(format!(
            "measurements act on dimensions {untrusted_dims:?}, state has {:?}",
            &state.dims[1..]
        )));
    }
    let shape = measurements.shape(trusted_inputs)?;
    let du: usize = untrusted_dims.iter().product();
    let rho = &state.rho;
    let mut members = Vec::with_capacity(shape.output_strings() * shape.input_strings());
    for y in 0..shape.input_strings() {
        let ys = shape.decode_inputs(y);
        for b in 0..shape.output_strings() {
            let bs = shape.decode_outputs(b);
            let k = kron_all(
                measurements
                    .parties
                    .iter()
                    .zip(bs.iter().zip(&ys))
                    .map(|(p, (&bi, &yi))| p.effect(bi, yi)),
            );
            let mut sigma = [[Complex64::new(0.0, 0.0); 2]; 2];
            for (j, row) in sigma.iter_mut().enumerate() {
                for (l, entry) in row.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for u in 0..du {
                        for v in 0..du {
                            acc += rho[(j * du + u, l * du + v)] * k[(v, u)];
                        }
                    }
                    *entry = acc;
                }
            }
            members.push(HermitianOp::with_tolerance(sigma, 1e-10)?);
        }
    }
    Assemblage::new(shape, members)
}

/// Named test assemblages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Builtin {
    /// `σ_{b|y} = I/4` for two-input, two-output Bob.
    UniformNoise,
    /// Singlet with Bob measuring Z (y=0) and X (y=1).
    SingletZx,
    /// Werner state of visibility `v` with the singlet-ZX measurements.
    WernerZx(f64),
    /// `n`-qubit GHZ with every untrusted party measuring Z (y=0) and X (y=1).
    Ghz(usize),
    /// Three-qubit GHZ with untrusted measurements in the xy-plane: party 1
    /// at azimuths (0, π/2), party 2 at (−π/4, π/4).
    GhzSvetlichny,
}

impl Builtin {
    pub const NAMES: &'static [&'static str] =
        &["uniform-noise", "singlet-zx", "werner-zx:<v>", "ghz-<n>", "ghz3-svetlichny"];

    pub fn parse(name: &str) -> Result<Self> {
        let lower = name.trim().to_ascii_lowercase();
        let unknown = || Error::UnknownBuiltin(name.to_string());
        Ok(match lower.as_str() {
            "uniform-noise" | "noise" => Self::UniformNoise,
            "singlet-zx" | "singlet" => Self::SingletZx,
            "ghz3-svetlichny" | "ghz-svetlichny" => Self::GhzSvetlichny,
            other => {
                if let Some(v) = other.strip_prefix("werner-zx:") {
                    let v: f64 = v.parse().map_err(|_| Error::InvalidParameter(format!("visibility `{v}`")))?;
                    if !(0.0..=1.0).contains(&v) {
                        return Err(Error::InvalidParameter(format!("visibility {v} outside [0, 1]")));
                    }
                    Self::WernerZx(v)
                } else if let Some(n) = other.strip_prefix("ghz-") {
                    let n: usize = n.parse().map_err(|_| unknown())?;
                    if n < 2 {
                        return Err(Error::InvalidParameter(format!("ghz-{n}: need at least 2 parties")));
                    }
                    Self::Ghz(n)
                } else {
                    return Err(unknown());
                }
            }
        })
    }

    pub fn build(self) -> Result<Assemblage> {
        let zx = [BlochVector::Z, BlochVector::X];
        match self {
            Self::UniformNoise => Ok(Assemblage::from_fn(ScenarioShape::bipartite_2222(), |_, _| {
                HermitianOp::IDENTITY * 0.25
            })),
            Self::SingletZx => generate_from_state(&MultipartyState::singlet(), &UntrustedMeasurementSet::uniform_qubit(1, &zx)?),
            Self::WernerZx(v) => generate_from_state(&MultipartyState::werner(v)?, &UntrustedMeasurementSet::uniform_qubit(1, &zx)?),
            Self::Ghz(n) => generate_from_state(&MultipartyState::ghz(n)?, &UntrustedMeasurementSet::uniform_qubit(n - 1, &zx)?),
            Self::GhzSvetlichny => {
                let xy = |phi: f64| BlochVector::from_angles(FRAC_PI_2, phi);
                let p1 = PartyMeasurements::qubit_directions(&[xy(0.0), xy(FRAC_PI_2)])?;
                let p2 = PartyMeasurements::qubit_directions(&[xy(-FRAC_PI_4), xy(FRAC_PI_4)])?;
                generate_from_state(&MultipartyState::ghz(3)?, &UntrustedMeasurementSet::new(vec![p1, p2]))
            }
        }
    }
}

/// Parses and builds a built-in assemblage by name.
pub fn builtin_assemblage(name: &str) -> Result<Assemblage> {
    Builtin::parse(name)?.build()
}
