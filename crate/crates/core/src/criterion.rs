//! Closed-form maximal violation of a linear Bell inequality by an
//! assemblage, over all dichotomic measurements on the trusted qubit.
//!
//! For each trusted input `x` the Bell expression splits into a constant
//! `Σ ½β_{a,b,x,y} P(b|y)` plus `Tr[B_x ŝ_x·σ]`, where
//! `B_x = Σ ½(β_{0,b,x,y} − β_{1,b,x,y}) σ_{b|y}`. The second term is
//! maximized by `ŝ_x = r(B_x)/‖r(B_x)‖` with value `‖r(B_x)‖`, so the maximal
//! value is `Σ_x [constant_x + ‖s_x‖]` with `s_x = r(B_x)`, attained by von
//! Neumann measurements along `s_x`. For well-behaved inequalities no POVM
//! does better, since every dichotomic POVM is a projective measurement
//! followed by a local mixing of the outcome (see [`povm_reduce`]).

use serde::{Serialize, Serializer};

use crate::assemblage::Assemblage;
use crate::error::{Error, Result};
use crate::inequality::{BellInequality, Distribution, MixingKernel, WellBehaved};
use crate::qubit::{BlochVector, HermitianOp};
use crate::shape::{ScenarioShape, TRUSTED_OUTPUTS};
use crate::tol::{self, Tolerances};

/// A two-outcome measurement `{M⁽⁰⁾, M⁽¹⁾}` on the trusted qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DichotomicPOVM {
    effects: [HermitianOp; 2],
}

impl DichotomicPOVM {
    /// Both effects must be PSD within [`tol::PSD`] and sum to the identity
    /// within [`tol::RECON`].
    pub fn new(m0: HermitianOp, m1: HermitianOp) -> Result<Self> {
        if !m0.psd_check(tol::PSD) || !m1.psd_check(tol::PSD) {
            return Err(Error::InvalidMeasurement("effect is not positive semidefinite".into()));
        }
        let gap = (m0 + m1).max_abs_diff(&HermitianOp::IDENTITY);
        if gap > tol::RECON {
            return Err(Error::InvalidMeasurement(format!("effects sum to identity only within {gap:.3e}")));
        }
        Ok(Self { effects: [m0, m1] })
    }

    /// `M⁽ᵃ⁾ = ½(I + (−1)ᵃ n̂·σ)` for a unit direction `n̂`.
    pub fn projective(direction: BlochVector) -> Self {
        Self {
            effects: [HermitianOp::projector(direction), HermitianOp::projector(-direction)],
        }
    }

    /// `M⁽⁰⁾ = effect`, `M⁽¹⁾ = I − effect`.
    pub fn from_effect(effect: HermitianOp) -> Result<Self> {
        Self::new(effect, HermitianOp::IDENTITY - effect)
    }

    pub fn effect(&self, a: usize) -> &HermitianOp {
        &self.effects[a]
    }

    pub fn effects(&self) -> &[HermitianOp; 2] {
        &self.effects
    }

    /// Bloch direction of `M⁽⁰⁾` (unnormalized).
    pub fn bloch_direction(&self) -> BlochVector {
        self.effects[0].bloch_vector()
    }

    /// Both effects idempotent within `tol`.
    pub fn is_projective(&self, tol: f64) -> bool {
        self.effects.iter().all(|e| {
            let r = e.bloch_vector();
            (e.trace() - 1.0).abs() <= tol && (r.norm() - 1.0).abs() <= tol
                || e.max_abs_diff(&HermitianOp::ZERO) <= tol
                || e.max_abs_diff(&HermitianOp::IDENTITY) <= tol
        })
    }
}

impl Serialize for DichotomicPOVM {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DichotomicPOVM", 2)?;
        st.serialize_field("direction", &self.bloch_direction())?;
        st.serialize_field("effects", &self.effects)?;
        st.end()
    }
}

/// How far the report's value can be trusted as the maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Guarantee {
    /// The inequality is well behaved: `lhs_value` is the maximum over all
    /// POVMs and `violated` decides violation.
    NecessaryAndSufficient,
    /// Only achievability holds: `lhs_value` is attained by the reported
    /// measurements, but some POVM might do better.
    AchievabilityOnly,
}

/// Per-input contribution to the criterion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputContribution {
    pub x: usize,
    pub s_opt: BlochVector,
    pub norm: f64,
    pub constant: f64,
    /// Unit measurement direction; `+z` when `direction_free`.
    pub direction: BlochVector,
    /// `‖s_opt‖` is below the degeneracy tolerance, so every direction is optimal.
    pub direction_free: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Criterion,
    ChshFast,
}

/// Outcome of a closed-form evaluation. Field order is fixed for stable output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub method: Method,
    pub inequality: Option<String>,
    pub inputs: Vec<InputContribution>,
    pub constant_term: f64,
    pub lhs_value: f64,
    pub local_bound: f64,
    pub violated: bool,
    /// `lhs_value` lies within the tie tolerance of the bound.
    pub marginal: bool,
    pub guarantee: Guarantee,
    /// For two-input two-output bipartite assemblages evaluated via the
    /// CHSH path, whether the assemblage is Bell local.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bell_local: Option<bool>,
    pub optimal_measurements: Vec<DichotomicPOVM>,
}

impl CriterionReport {
    pub fn s_vectors(&self) -> Vec<BlochVector> {
        self.inputs.iter().map(|c| c.s_opt).collect()
    }

    pub fn verdict(&self) -> &'static str {
        match (self.bell_local, self.violated, self.marginal) {
            (_, true, _) => "VIOLATED",
            (Some(_), false, true) => "LOCAL (marginal)",
            (Some(_), false, false) => "LOCAL",
            (None, false, true) => "NOT VIOLATED (marginal)",
            (None, false, false) => "NOT VIOLATED",
        }
    }
}

/// The assemblage and inequality must agree on every untrusted party; the
/// trusted input count comes from the inequality.
fn check_compatible(a: &Assemblage, ineq: &BellInequality) -> Result<()> {
    let (sa, si) = (a.shape(), ineq.shape());
    if sa.inputs_per_party() != si.inputs_per_party() || sa.outputs_per_party() != si.outputs_per_party() {
        return Err(Error::ShapeMismatch(format!(
            "assemblage has untrusted inputs {:?} / outputs {:?}, inequality expects {:?} / {:?}",
            sa.inputs_per_party(),
            sa.outputs_per_party(),
            si.inputs_per_party(),
            si.outputs_per_party()
        )));
    }
    Ok(())
}

/// `B_x = Σ_{b,y} ½(β_{0,b,x,y} − β_{1,b,x,y}) σ_{b|y}`.
pub fn correlation_operator(a: &Assemblage, ineq: &BellInequality, x: usize) -> Result<HermitianOp> {
    check_compatible(a, ineq)?;
    if x >= ineq.shape().trusted_inputs() {
        return Err(Error::IndexOutOfRange(format!(
            "trusted input {x} of {}",
            ineq.shape().trusted_inputs()
        )));
    }
    Ok(a.iter()
        .map(|(b, y, sigma)| *sigma * (0.5 * (ineq.coefficient(0, b, x, y) - ineq.coefficient(1, b, x, y))))
        .sum())
}

/// `s_x^opt = r(B_x)`.
pub fn s_opt(a: &Assemblage, ineq: &BellInequality, x: usize) -> Result<BlochVector> {
    Ok(correlation_operator(a, ineq, x)?.bloch_vector())
}

fn constant_for_input(a: &Assemblage, ineq: &BellInequality, x: usize) -> f64 {
    a.iter()
        .map(|(b, y, sigma)| {
            let p = sigma.trace();
            (0..TRUSTED_OUTPUTS).map(|t| 0.5 * ineq.coefficient(t, b, x, y) * p).sum::<f64>()
        })
        .sum()
}

fn contribution(x: usize, s_opt: BlochVector, constant: f64, tol: &Tolerances) -> InputContribution {
    let norm = s_opt.norm();
    let (direction, direction_free) = match s_opt.normalized(tol.deg) {
        Some(d) => (d, false),
        None => (BlochVector::Z, true),
    };
    InputContribution {
        x,
        s_opt,
        norm,
        constant,
        direction,
        direction_free,
    }
}

fn finish(
    method: Method,
    inequality: Option<String>,
    inputs: Vec<InputContribution>,
    local_bound: f64,
    guarantee: Guarantee,
    tol: &Tolerances,
) -> CriterionReport {
    let constant_term = inputs.iter().map(|c| c.constant).sum();
    let lhs_value = inputs.iter().map(|c| c.constant + c.norm).sum::<f64>();
    let marginal = (lhs_value - local_bound).abs() <= tol.tie;
    let violated = lhs_value > local_bound && !marginal;
    let optimal_measurements = inputs.iter().map(|c| DichotomicPOVM::projective(c.direction)).collect();
    CriterionReport {
        method,
        inequality,
        inputs,
        constant_term,
        lhs_value,
        local_bound,
        violated,
        marginal,
        guarantee,
        bell_local: None,
        optimal_measurements,
    }
}

pub fn evaluate(a: &Assemblage, ineq: &BellInequality) -> Result<CriterionReport> {
    evaluate_with(a, ineq, &Tolerances::default())
}

/// Closed-form maximal value of `β·P` with its optimal von Neumann measurements.
pub fn evaluate_with(a: &Assemblage, ineq: &BellInequality, tol: &Tolerances) -> Result<CriterionReport> {
    check_compatible(a, ineq)?;
    let inputs = (0..ineq.shape().trusted_inputs())
        .map(|x| Ok(contribution(x, s_opt(a, ineq, x)?, constant_for_input(a, ineq, x), tol)))
        .collect::<Result<Vec<_>>>()?;
    let guarantee = match ineq.well_behaved() {
        WellBehaved::Established => Guarantee::NecessaryAndSufficient,
        WellBehaved::Unverified => Guarantee::AchievabilityOnly,
    };
    Ok(finish(
        Method::Criterion,
        ineq.name().map(str::to_owned),
        inputs,
        ineq.local_bound(),
        guarantee,
        tol,
    ))
}

pub fn chsh_fast(a: &Assemblage) -> Result<CriterionReport> {
    chsh_fast_with(a, &Tolerances::default())
}

/// Two-input two-output bipartite decision: `t_x = r(Σ_{b,y} (−1)^{b+xy} σ_{b|y})`
/// and the assemblage is Bell local iff `‖t_0‖ + ‖t_1‖ ≤ 2`.
pub fn chsh_fast_with(a: &Assemblage, tol: &Tolerances) -> Result<CriterionReport> {
    let s = a.shape();
    if s.inputs_per_party() != [2] || s.outputs_per_party() != [2] {
        return Err(Error::ShapeMismatch(
            "the CHSH path needs one untrusted party with two inputs and two outputs".into(),
        ));
    }
    let inputs = (0..2)
        .map(|x| {
            let t: BlochVector = a
                .iter()
                .map(|(b, y, sigma)| sigma.bloch_vector() * if (b + x * y) % 2 == 0 { 1.0 } else { -1.0 })
                .sum();
            contribution(x, t, 0.0, tol)
        })
        .collect();
    let mut report = finish(
        Method::ChshFast,
        Some("chsh".into()),
        inputs,
        2.0,
        Guarantee::NecessaryAndSufficient,
        tol,
    );
    report.bell_local = Some(!report.violated);
    Ok(report)
}

/// `P(a,b|x,y) = Tr[M_x⁽ᵃ⁾ σ_{b|y}]`, one measurement per trusted input.
pub fn distribution_from(a: &Assemblage, measurements: &[DichotomicPOVM]) -> Result<Distribution> {
    if measurements.is_empty() {
        return Err(Error::ShapeMismatch("at least one trusted measurement is required".into()));
    }
    let s = a.shape();
    let shape = ScenarioShape::new(
        s.inputs_per_party().to_vec(),
        s.outputs_per_party().to_vec(),
        measurements.len(),
    )?;
    Ok(Distribution::from_fn(shape, |t, b, x, y| {
        measurements[x].effect(t).trace_product(a.member(b, y))
    }))
}

/// A dichotomic POVM written as a projective measurement followed by a local
/// mixing of its outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PovmReduction {
    pub projective: DichotomicPOVM,
    /// `[[q(0|0), q(0|1)], [q(1|0), q(1|1)]]`.
    pub kernel_slice: [[f64; 2]; 2],
    /// Eigenvalues of `M⁽⁰⁾` on `Π⁽⁰⁾` and `Π⁽¹⁾`.
    pub lambdas: [f64; 2],
}

/// Diagonalizes `M⁽⁰⁾ = λ⁽⁰⁾Π⁽⁰⁾ + λ⁽¹⁾Π⁽¹⁾`, so that
/// `M⁽ᵃ⁾ = Σ_{a'} q(a|a') Π⁽ᵃ'⁾` with `q(0|a') = λ⁽ᵃ'⁾`, `q(1|a') = 1 − λ⁽ᵃ'⁾`.
pub fn povm_reduce(m: &DichotomicPOVM) -> Result<PovmReduction> {
    let checked = DichotomicPOVM::new(m.effects[0], m.effects[1])?;
    let eig = checked.effects[0].eig2();
    let lambdas = eig.values.map(|l| l.clamp(0.0, 1.0));
    let kernel_slice = [[lambdas[0], lambdas[1]], [1.0 - lambdas[0], 1.0 - lambdas[1]]];
    Ok(PovmReduction {
        projective: DichotomicPOVM {
            effects: eig.projectors,
        },
        kernel_slice,
        lambdas,
    })
}

/// Reduces every measurement and stacks the kernel slices.
pub fn povm_reduce_all(measurements: &[DichotomicPOVM]) -> Result<(Vec<DichotomicPOVM>, MixingKernel)> {
    let reductions = measurements.iter().map(povm_reduce).collect::<Result<Vec<_>>>()?;
    let kernel = MixingKernel::from_slices(reductions.iter().map(|r| r.kernel_slice).collect())?;
    Ok((reductions.into_iter().map(|r| r.projective).collect(), kernel))
}
