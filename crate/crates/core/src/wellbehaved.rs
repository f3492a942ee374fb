//! Randomized search for violations that a local mixing of the trusted
//! party's outputs would increase.
//!
//! An inequality is well behaved when `β·P_lm ≤ β·P` for every violating `P`
//! and every kernel `q`. The map `q ↦ β·P_lm` is linear and the kernels form
//! a product of simplices whose vertices are the deterministic kernels, so
//! checking those suffices at each sampled `P`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::criterion::{distribution_from, evaluate};
use crate::error::Result;
use crate::inequality::{apply_local_mixing, bell_value, build_chsh, BellInequality, Distribution, MixingKernel};
use crate::random;
use crate::shape::{ScenarioShape, TRUSTED_OUTPUTS};

/// Increases at or below this are treated as rounding.
pub const INCREASE_TOLERANCE: f64 = 1e-9;

/// Above this many trusted inputs the `4^m` kernels are not listed one by
/// one; the per-input maximum is taken instead, which covers the same set.
const EXPLICIT_KERNEL_INPUTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counterexample {
    pub distribution: Distribution,
    pub kernel: MixingKernel,
    pub value: f64,
    pub mixed_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WellBehavedReport {
    pub inequality: Option<String>,
    pub seed: u64,
    pub samples_requested: usize,
    pub violating_samples: usize,
    pub attempts: usize,
    /// Deterministic kernels covered per sample, `4^m`.
    pub kernels_per_sample: f64,
    pub counterexample: Option<Counterexample>,
}

impl WellBehavedReport {
    pub fn found_counterexample(&self) -> bool {
        self.counterexample.is_some()
    }

    pub fn summary(&self) -> String {
        match &self.counterexample {
            Some(c) => format!(
                "not well behaved: a local mixing raises a violation from {:.6} to {:.6}",
                c.value, c.mixed_value
            ),
            None => format!("no counterexample found in {} trials", self.violating_samples),
        }
    }
}

/// `G[x][a][a'] = Σ_{b,y} β_{a,b,x,y} P(a',b|x,y)`, so that a kernel's
/// mixed value is `Σ_x Σ_{a,a'} q(a|a',x) G[x][a][a']`.
fn mixing_gains(ineq: &BellInequality, p: &Distribution) -> Vec<[[f64; 2]; 2]> {
    let s = ineq.shape();
    (0..s.trusted_inputs())
        .map(|x| {
            let mut g = [[0.0; 2]; 2];
            for b in 0..s.output_strings() {
                for y in 0..s.input_strings() {
                    for (a, row) in g.iter_mut().enumerate() {
                        for (a_prime, cell) in row.iter_mut().enumerate() {
                            *cell += ineq.coefficient(a, b, x, y) * p.get(a_prime, b, x, y);
                        }
                    }
                }
            }
            g
        })
        .collect()
}

fn kernel_value(gains: &[[[f64; 2]; 2]], k: &MixingKernel) -> f64 {
    gains
        .iter()
        .enumerate()
        .map(|(x, g)| {
            (0..TRUSTED_OUTPUTS)
                .flat_map(|a| (0..TRUSTED_OUTPUTS).map(move |ap| (a, ap)))
                .map(|(a, ap)| k.q(a, ap, x) * g[a][ap])
                .sum::<f64>()
        })
        .sum()
}

/// The deterministic kernel with the largest mixed value at `p`.
pub fn best_deterministic_kernel(ineq: &BellInequality, p: &Distribution) -> (MixingKernel, f64) {
    let gains = mixing_gains(ineq, p);
    let m = gains.len();
    if m <= EXPLICIT_KERNEL_INPUTS {
        let mut best: Option<(MixingKernel, f64)> = None;
        for k in MixingKernel::all_deterministic(m) {
            let v = kernel_value(&gains, &k);
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((k, v));
            }
        }
        return best.expect("at least the identity kernel");
    }
    const RESPONSES: [[usize; 2]; 4] = [[0, 1], [1, 0], [0, 0], [1, 1]];
    let responses: Vec<[usize; 2]> = gains
        .iter()
        .map(|g| {
            *RESPONSES
                .iter()
                .max_by(|r, s| {
                    let v = |f: &[usize; 2]| g[f[0]][0] + g[f[1]][1];
                    v(r).total_cmp(&v(s))
                })
                .expect("four responses")
        })
        .collect();
    let k = MixingKernel::deterministic(&responses);
    let v = kernel_value(&gains, &k);
    (k, v)
}

/// Samples violating distributions and tests every deterministic kernel on
/// each. Violating samples come from the optimal measurements on random
/// assemblages, and from mixtures of those with random deterministic local
/// points. At most `100·samples` assemblages are drawn.
pub fn well_behaved_heuristic(ineq: &BellInequality, samples: usize, seed: u64) -> Result<WellBehavedReport> {
    let shape = ineq.shape().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = WellBehavedReport {
        inequality: ineq.name().map(str::to_owned),
        seed,
        samples_requested: samples,
        violating_samples: 0,
        attempts: 0,
        kernels_per_sample: 4f64.powi(shape.trusted_inputs() as i32),
        counterexample: None,
    };
    let max_attempts = samples.saturating_mul(100);
    let bound = ineq.local_bound();
    while report.violating_samples < samples && report.attempts < max_attempts {
        report.attempts += 1;
        let a = if report.attempts.is_multiple_of(2) {
            random::assemblage(&mut rng, &shape)?
        } else {
            random::entangled_assemblage(&mut rng, &shape)?
        };
        let r = evaluate(&a, ineq)?;
        let mut p = distribution_from(&a, &r.optimal_measurements)?;
        if rng.random_bool(0.5) {
            let alice: Vec<usize> = (0..shape.trusted_inputs()).map(|_| rng.random_range(0..TRUSTED_OUTPUTS)).collect();
            let untrusted: Vec<Vec<usize>> = shape
                .inputs_per_party()
                .iter()
                .zip(shape.outputs_per_party())
                .map(|(&m, &o)| (0..m).map(|_| rng.random_range(0..o)).collect())
                .collect();
            let d = Distribution::deterministic(shape.clone(), &alice, &untrusted);
            let w: f64 = rng.random_range(0.5..=1.0);
            p = p.mix(&d, w)?;
        }
        let value = bell_value(ineq, &p)?;
        if value <= bound {
            continue;
        }
        report.violating_samples += 1;
        let (kernel, predicted) = best_deterministic_kernel(ineq, &p);
        if predicted > value + INCREASE_TOLERANCE {
            let mixed_value = bell_value(ineq, &apply_local_mixing(&p, &kernel)?)?;
            report.counterexample = Some(Counterexample {
                distribution: p,
                kernel,
                value,
                mixed_value,
            });
            break;
        }
    }
    Ok(report)
}

/// CHSH on inputs 0 and 1 plus a third trusted input rewarding `a = 1`
/// regardless of everything else.
pub fn chsh_with_superfluous_term(c: f64) -> BellInequality {
    let chsh = build_chsh();
    let shape = ScenarioShape::new(vec![2], vec![2], 3).expect("valid shape");
    let coeffs = {
        let mut v = vec![0.0; shape.tensor_len()];
        for a in 0..2 {
            for b in 0..2 {
                for x in 0..3 {
                    for y in 0..2 {
                        v[shape.tensor_index(a, b, x, y)] = if x < 2 {
                            chsh.coefficient(a, b, x, y)
                        } else if a == 1 {
                            c
                        } else {
                            0.0
                        };
                    }
                }
            }
        }
        v
    };
    BellInequality::with_enumerated_bound(shape, coeffs)
        .expect("small enumeration")
        .named(format!("chsh+superfluous:{c}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_values_match_explicit_mixing() {
        let ineq = chsh_with_superfluous_term(0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random::entangled_assemblage(&mut rng, ineq.shape()).unwrap();
        let p = distribution_from(&a, &evaluate(&a, &ineq).unwrap().optimal_measurements).unwrap();
        let gains = mixing_gains(&ineq, &p);
        for k in MixingKernel::all_deterministic(3) {
            let direct = bell_value(&ineq, &apply_local_mixing(&p, &k).unwrap()).unwrap();
            assert!((kernel_value(&gains, &k) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_never_increases() {
        let ineq = build_chsh();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = random::assemblage(&mut rng, ineq.shape()).unwrap();
        let p = distribution_from(&a, &evaluate(&a, &ineq).unwrap().optimal_measurements).unwrap();
        let gains = mixing_gains(&ineq, &p);
        let id = kernel_value(&gains, &MixingKernel::identity(2));
        assert!((id - bell_value(&ineq, &p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn superfluous_term_bound() {
        assert_eq!(chsh_with_superfluous_term(0.5).local_bound(), 3.0);
    }

    #[test]
    fn chsh_has_no_counterexample() {
        let r = well_behaved_heuristic(&build_chsh(), 30, 1).unwrap();
        assert_eq!(r.violating_samples, 30);
        assert!(!r.found_counterexample(), "{}", r.summary());
        assert_eq!(r.kernels_per_sample, 16.0);
    }

    #[test]
    fn superfluous_term_is_caught() {
        let r = well_behaved_heuristic(&chsh_with_superfluous_term(0.5), 30, 1).unwrap();
        let c = r.counterexample.expect("counterexample");
        assert!(c.mixed_value > c.value + INCREASE_TOLERANCE);
        assert!(c.value > 3.0);
    }
}
