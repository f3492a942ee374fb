//! Brute-force reference computations: local bounds by enumeration of
//! deterministic strategies, and maximal violation by direct search over
//! trusted-side measurements.
//!
//! The search never touches the closed-form vectors of [`crate::criterion`];
//! it scores candidate measurements through `β·P` with `P` built from the
//! Born rule, one trusted input at a time (the inputs do not interact).

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::assemblage::Assemblage;
use crate::criterion::{distribution_from, DichotomicPOVM};
use crate::error::{Error, Result};
use crate::inequality::{bell_value, BellInequality};
use crate::qubit::BlochVector;
use crate::random;
use crate::shape::TRUSTED_OUTPUTS;

/// Default cap on the number of enumerated strategy combinations.
pub const DEFAULT_STRATEGY_CAP: f64 = 1e8;

/// Exact local bound: `max β·P` over deterministic local strategies.
pub fn local_bound_enumerate(ineq: &BellInequality) -> Result<f64> {
    let parties = ineq.shape().untrusted_parties() + 1;
    let order: Vec<usize> = (0..parties).collect();
    local_bound_enumerate_with(ineq, &order, DEFAULT_STRATEGY_CAP)
}

/// Enumerates the strategies of every party in `order` except the last,
/// whose response is optimized input by input. Party 0 is the trusted party;
/// party `i ≥ 1` is untrusted party `i`. `cap` bounds the number of
/// enumerated combinations.
pub fn local_bound_enumerate_with(ineq: &BellInequality, order: &[usize], cap: f64) -> Result<f64> {
    let shape = ineq.shape();
    let n = shape.untrusted_parties() + 1;
    crate::shape::check_permutation(order, n)?;
    let inputs: Vec<usize> = std::iter::once(shape.trusted_inputs())
        .chain(shape.inputs_per_party().iter().copied())
        .collect();
    let outputs: Vec<usize> = std::iter::once(TRUSTED_OUTPUTS)
        .chain(shape.outputs_per_party().iter().copied())
        .collect();

    let (enumerated, last) = order.split_at(n - 1);
    let last = last[0];
    let count: f64 = enumerated
        .iter()
        .map(|&p| (outputs[p] as f64).powi(inputs[p] as i32))
        .product();
    if count > cap {
        return Err(Error::CapExceeded { count, cap });
    }

    // Every joint input tuple (x, y_1, …) with its per-party input digits.
    let ny = shape.input_strings();
    let tuples: Vec<(usize, usize, Vec<usize>)> = (0..shape.trusted_inputs())
        .flat_map(|x| (0..ny).map(move |y| (x, y)))
        .map(|(x, y)| {
            let mut digits = vec![x];
            digits.extend(shape.decode_inputs(y));
            (x, y, digits)
        })
        .collect();

    // Odometer over (party, input) slots of the enumerated parties.
    let slots: Vec<(usize, usize)> = enumerated
        .iter()
        .flat_map(|&p| (0..inputs[p]).map(move |i| (p, i)))
        .collect();
    let mut strategy: Vec<Vec<usize>> = inputs.iter().map(|&m| vec![0; m]).collect();
    let mut best = f64::NEG_INFINITY;
    let mut table = vec![0.0; inputs[last] * outputs[last]];
    let mut out_digits = vec![0; n];
    loop {
        table.iter_mut().for_each(|v| *v = 0.0);
        for (x, y, digits) in &tuples {
            for &p in enumerated {
                out_digits[p] = strategy[p][digits[p]];
            }
            let li = digits[last];
            for o in 0..outputs[last] {
                out_digits[last] = o;
                let b = shape.encode_outputs(&out_digits[1..]).expect("digits in range");
                table[li * outputs[last] + o] += ineq.coefficient(out_digits[0], b, *x, *y);
            }
        }
        let value: f64 = table
            .chunks(outputs[last])
            .map(|row| row.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .sum();
        best = best.max(value);

        let mut k = 0;
        loop {
            if k == slots.len() {
                return Ok(best);
            }
            let (p, i) = slots[k];
            strategy[p][i] += 1;
            if strategy[p][i] < outputs[p] {
                break;
            }
            strategy[p][i] = 0;
            k += 1;
        }
    }
}

/// Parameters of the direct search.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchConfig {
    /// Polar grid points; the azimuthal grid uses twice as many.
    pub grid_resolution: usize,
    /// Random dichotomic POVMs scored per trusted input.
    pub povm_samples: usize,
    /// Rounds of alternating golden-section refinement around the best grid point.
    pub refine_iterations: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 180,
            povm_samples: 200,
            refine_iterations: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Grid,
    Refined,
    SampledPovm,
    Candidate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputSearch {
    pub x: usize,
    pub value: f64,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub value: f64,
    /// Bound on how far the grid stage alone can fall short of the maximum
    /// over von Neumann measurements.
    pub grid_error_bound: f64,
    pub inputs: Vec<InputSearch>,
    pub measurements: Vec<DichotomicPOVM>,
    pub config: SearchConfig,
}

/// Per-input Bell contribution `Σ_{a,b,y} β_{a,b,x,y} Tr[M⁽ᵃ⁾ σ_{b|y}]`.
fn score(a: &Assemblage, ineq: &BellInequality, x: usize, m: &DichotomicPOVM) -> f64 {
    a.iter()
        .map(|(b, y, sigma)| {
            (0..TRUSTED_OUTPUTS)
                .map(|t| ineq.coefficient(t, b, x, y) * m.effect(t).trace_product(sigma))
                .sum::<f64>()
        })
        .sum()
}

fn score_direction(a: &Assemblage, ineq: &BellInequality, x: usize, theta: f64, phi: f64) -> f64 {
    score(a, ineq, x, &DichotomicPOVM::projective(BlochVector::from_angles(theta, phi)))
}

/// Golden-section maximization of `f` on `[lo, hi]` with a fixed step count.
fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, steps: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..steps {
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - g * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + g * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Largest possible per-input contribution of the direction-dependent part,
/// from the triangle inequality on the raw members.
fn direction_lipschitz(a: &Assemblage, ineq: &BellInequality, x: usize) -> f64 {
    a.iter()
        .map(|(b, y, sigma)| {
            0.5 * (ineq.coefficient(0, b, x, y) - ineq.coefficient(1, b, x, y)).abs() * sigma.bloch_vector().norm()
        })
        .sum()
}

/// Searches trusted measurements maximizing `β·P`. See [`max_violation_search_seeded`].
pub fn max_violation_search(a: &Assemblage, ineq: &BellInequality, cfg: &SearchConfig) -> Result<SearchResult> {
    max_violation_search_seeded(a, ineq, cfg, &[])
}

/// Grid search over von Neumann directions with golden-section refinement,
/// plus random POVMs and optional caller-supplied directions (`candidates[x]`
/// for input `x`; may be empty). The returned value is recomputed from the
/// full distribution of the chosen measurements.
pub fn max_violation_search_seeded(
    a: &Assemblage,
    ineq: &BellInequality,
    cfg: &SearchConfig,
    candidates: &[BlochVector],
) -> Result<SearchResult> {
    let sa = a.shape();
    let si = ineq.shape();
    if sa.inputs_per_party() != si.inputs_per_party() || sa.outputs_per_party() != si.outputs_per_party() {
        return Err(Error::ShapeMismatch("assemblage and inequality disagree on the untrusted parties".into()));
    }
    let res = cfg.grid_resolution.max(2);
    let n_theta = res;
    let n_phi = 2 * res;
    let d_theta = PI / (n_theta - 1) as f64;
    let d_phi = 2.0 * PI / n_phi as f64;

    let mut inputs = Vec::new();
    let mut measurements = Vec::new();
    let mut grid_error_bound = 0.0;
    for x in 0..si.trusted_inputs() {
        grid_error_bound += direction_lipschitz(a, ineq, x) * PI / res as f64;

        // Grid stage: best (value, i, j), ties to the smallest index pair.
        let pick = |l: (f64, usize, usize), r: (f64, usize, usize)| {
            if r.0 > l.0 || (r.0 == l.0 && (r.1, r.2) < (l.1, l.2)) {
                r
            } else {
                l
            }
        };
        let (gv, gi, gj) = (0..n_theta)
            .into_par_iter()
            .map(|i| {
                let theta = i as f64 * d_theta;
                let cols = if i == 0 || i == n_theta - 1 { 1 } else { n_phi };
                (0..cols)
                    .map(|j| (score_direction(a, ineq, x, theta, j as f64 * d_phi), i, j))
                    .fold((f64::NEG_INFINITY, 0, 0), pick)
            })
            .reduce(|| (f64::NEG_INFINITY, 0, 0), pick);

        let mut best_value = gv;
        let mut best_m = DichotomicPOVM::projective(BlochVector::from_angles(gi as f64 * d_theta, gj as f64 * d_phi));
        let mut source = Source::Grid;

        // Refinement stage.
        let (mut theta, mut phi) = (gi as f64 * d_theta, gj as f64 * d_phi);
        let mut refined = gv;
        let (mut half_t, mut half_p) = (d_theta, d_phi);
        for _ in 0..cfg.refine_iterations {
            let (t, v) = golden_max(
                |t| score_direction(a, ineq, x, t, phi),
                (theta - half_t).max(0.0),
                (theta + half_t).min(PI),
                60,
            );
            if v > refined {
                theta = t;
                refined = v;
            }
            let (p, v) = golden_max(|p| score_direction(a, ineq, x, theta, p), phi - half_p, phi + half_p, 60);
            if v > refined {
                phi = p;
                refined = v;
            }
            half_t *= 0.5;
            half_p *= 0.5;
        }
        if refined > best_value {
            best_value = refined;
            best_m = DichotomicPOVM::projective(BlochVector::from_angles(theta, phi));
            source = Source::Refined;
        }

        // Sampled POVMs.
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(x as u64 + 1)));
        for _ in 0..cfg.povm_samples {
            let m = random::dichotomic_povm(&mut rng);
            let v = score(a, ineq, x, &m);
            if v > best_value {
                best_value = v;
                best_m = m;
                source = Source::SampledPovm;
            }
        }

        if let Some(dir) = candidates.get(x).and_then(|c| c.normalized(0.0)) {
            let m = DichotomicPOVM::projective(dir);
            let v = score(a, ineq, x, &m);
            if v >= best_value {
                best_value = v;
                best_m = m;
                source = Source::Candidate;
            }
        }

        inputs.push(InputSearch {
            x,
            value: best_value,
            source,
        });
        measurements.push(best_m);
    }
    let value = bell_value(ineq, &distribution_from(a, &measurements)?)?;
    Ok(SearchResult {
        value,
        grid_error_bound,
        inputs,
        measurements,
        config: cfg.clone(),
    })
}
