//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::process::ExitCode;
use std::time::Instant;

use qubitbell::criterion::{chsh_fast, distribution_from, evaluate, povm_reduce_all, DichotomicPOVM};
use qubitbell::generate::Builtin;
use qubitbell::inequality::{
    apply_local_mixing, bell_value, build_chained_svetlichny, build_chsh, build_svetlichny, chsh_symmetries,
};
use qubitbell::oracle::{
    local_bound_enumerate, local_bound_enumerate_with, max_violation_search, max_violation_search_seeded,
    SearchConfig, DEFAULT_STRATEGY_CAP,
};
use qubitbell::qubit::HermitianOp;
use qubitbell::random;
use qubitbell::steering::{cavalcanti_lhs, optimal_steering_basis, three_pauli_lhs, PauliTriple};
use qubitbell::wellbehaved::{chsh_with_superfluous_term, well_behaved_heuristic};
use qubitbell::{Assemblage, ScenarioShape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

/// Half generic mixed states, half noisy GHZ-type states that violate often.
fn sample_assemblage(rng: &mut ChaCha8Rng, shape: &ScenarioShape, i: usize) -> Assemblage {
    if i.is_multiple_of(2) {
        random::assemblage(rng, shape).unwrap()
    } else {
        random::entangled_assemblage(rng, shape).unwrap()
    }
}

fn tsirelson() -> Outcome {
    let a = Builtin::SingletZx.build().map_err(e2s)?;
    let chsh = build_chsh();
    let r = evaluate(&a, &chsh).map_err(e2s)?;
    let target = 2.0 * SQRT_2;
    ensure((r.lhs_value - target).abs() <= 1e-9 && r.violated, || {
        format!("closed form {} (violated {})", r.lhs_value, r.violated)
    })?;
    let cfg = SearchConfig {
        grid_resolution: 360,
        ..SearchConfig::default()
    };
    let injected = max_violation_search_seeded(&a, &chsh, &cfg, &r.s_vectors()).map_err(e2s)?;
    ensure((injected.value - r.lhs_value).abs() <= 1e-9, || {
        format!("oracle with injection {} vs {}", injected.value, r.lhs_value)
    })?;
    let plain = max_violation_search(&a, &chsh, &cfg).map_err(e2s)?;
    ensure((plain.value - target).abs() <= 1e-4, || format!("grid-only oracle {}", plain.value))?;
    Ok(format!(
        "lhs {:.12}, oracle+injection {:.12}, grid-only {:.12}",
        r.lhs_value, injected.value, plain.value
    ))
}

fn werner_sweep() -> Outcome {
    let chsh = build_chsh();
    for k in 0..=10 {
        let v = k as f64 / 10.0;
        let a = Builtin::WernerZx(v).build().map_err(e2s)?;
        let r = evaluate(&a, &chsh).map_err(e2s)?;
        let f = chsh_fast(&a).map_err(e2s)?;
        ensure((r.lhs_value - 2.0 * SQRT_2 * v).abs() <= 1e-9, || format!("v={v}: lhs {}", r.lhs_value))?;
        let expected = v > FRAC_1_SQRT_2;
        ensure(r.violated == expected && f.bell_local == Some(!expected), || {
            format!("v={v}: violated {} bell_local {:?}", r.violated, f.bell_local)
        })?;
    }
    let a = Builtin::WernerZx(FRAC_1_SQRT_2).build().map_err(e2s)?;
    let r = evaluate(&a, &chsh).map_err(e2s)?;
    ensure(r.marginal && !r.violated, || {
        format!("v=1/√2: lhs {} marginal {} violated {}", r.lhs_value, r.marginal, r.violated)
    })?;
    Ok(format!("11 grid points; v=1/√2 flagged marginal at lhs {:.15}", r.lhs_value))
}

fn criteria_agree() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shape = ScenarioShape::bipartite_2222();
    let chsh = build_chsh();
    let symmetries = chsh_symmetries();
    let (mut worst_fast, mut worst_sym) = (0.0f64, 0.0f64);
    for i in 0..200 {
        let a = sample_assemblage(&mut rng, &shape, i);
        let lhs = evaluate(&a, &chsh).map_err(e2s)?.lhs_value;
        worst_fast = worst_fast.max((lhs - chsh_fast(&a).map_err(e2s)?.lhs_value).abs());
        for s in &symmetries {
            worst_sym = worst_sym.max((evaluate(&a, s).map_err(e2s)?.lhs_value - lhs).abs());
        }
    }
    ensure(worst_fast <= 1e-12 && worst_sym <= 1e-12, || {
        format!("max gap fast {worst_fast:e}, symmetries {worst_sym:e}")
    })?;
    Ok(format!("200 assemblages; max gap fast {worst_fast:.1e}, symmetries {worst_sym:.1e}"))
}

/// Either a uniform random POVM, or one concentrated near the optimal
/// direction so that violating samples occur.
fn sample_povm(rng: &mut ChaCha8Rng, optimal: &DichotomicPOVM) -> DichotomicPOVM {
    if rng.random_bool(0.5) {
        return random::dichotomic_povm(rng);
    }
    let jitter = random::unit_vector(rng) * rng.random_range(0.0..0.3);
    let n = (optimal.bloch_direction() + jitter).normalized(1e-9).unwrap_or(qubitbell::BlochVector::Z);
    let (l0, l1) = (rng.random_range(0.85..=1.0), rng.random_range(0.0..0.15));
    let m0 = HermitianOp::projector(n) * l0 + HermitianOp::projector(-n) * l1;
    DichotomicPOVM::new(m0, HermitianOp::IDENTITY - m0).unwrap()
}

fn lemma_one() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let cases = [(ScenarioShape::bipartite_2222(), build_chsh()), (ScenarioShape::uniform(2, 2, 2).unwrap(), build_svetlichny())];
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_reproduce = 0.0f64;
    let mut violating = 0;
    for (shape, ineq) in &cases {
        for i in 0..200 {
            let a = sample_assemblage(&mut rng, shape, i);
            let r = evaluate(&a, ineq).map_err(e2s)?;
            let own = bell_value(ineq, &distribution_from(&a, &r.optimal_measurements).map_err(e2s)?).map_err(e2s)?;
            worst_reproduce = worst_reproduce.max((own - r.lhs_value).abs());
            for _ in 0..50 {
                let ms: Vec<DichotomicPOVM> =
                    r.optimal_measurements.iter().map(|m| sample_povm(&mut rng, m)).collect();
                let v = bell_value(ineq, &distribution_from(&a, &ms).map_err(e2s)?).map_err(e2s)?;
                // A violation can never beat the closed form; a
                // non-violating value is only bounded by the local bound.
                if v > ineq.local_bound() {
                    violating += 1;
                    worst_excess = worst_excess.max(v - r.lhs_value);
                }
                ensure(v <= r.lhs_value.max(ineq.local_bound()) + 1e-10, || {
                    format!("POVM value {v} above lhs {} and bound", r.lhs_value)
                })?;
            }
        }
    }
    ensure(violating > 0 && worst_excess <= 1e-10, || {
        format!("{violating} violating samples, worst excess {worst_excess:e}")
    })?;
    ensure(worst_reproduce <= 1e-12, || format!("own measurements off by {worst_reproduce:e}"))?;
    Ok(format!(
        "400 assemblages x 50 POVM sets; {violating} violating samples, max excess {worst_excess:.1e}; reproduction {worst_reproduce:.1e}"
    ))
}

fn povm_reduction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let shapes = [
        ScenarioShape::bipartite_2222(),
        ScenarioShape::uniform(2, 2, 2).unwrap(),
        ScenarioShape::new(vec![3], vec![3], 3).unwrap(),
    ];
    let mut worst = 0.0f64;
    for i in 0..500 {
        let shape = &shapes[i % shapes.len()];
        let a = sample_assemblage(&mut rng, shape, i / shapes.len());
        let ms: Vec<DichotomicPOVM> = (0..shape.trusted_inputs()).map(|_| random::dichotomic_povm(&mut rng)).collect();
        let (projective, kernel) = povm_reduce_all(&ms).map_err(e2s)?;
        let direct = distribution_from(&a, &ms).map_err(e2s)?;
        let reduced = apply_local_mixing(&distribution_from(&a, &projective).map_err(e2s)?, &kernel).map_err(e2s)?;
        worst = worst.max(direct.max_abs_diff(&reduced));
    }
    ensure(worst <= 1e-12, || format!("max entry gap {worst:e}"))?;
    Ok(format!("500 POVM sets; max entry gap {worst:.1e}"))
}

fn steering_link() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let shape = ScenarioShape::bipartite_2222();
    let (mut order, mut invariance, mut fast, mut optimal) = (f64::NEG_INFINITY, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..200 {
        let a = sample_assemblage(&mut rng, &shape, i);
        let reference = three_pauli_lhs(&a, &PauliTriple::computational()).map_err(e2s)?;
        fast = fast.max((reference - chsh_fast(&a).map_err(e2s)?.lhs_value).abs());
        for _ in 0..20 {
            let [v0, v1, v2] = random::orthonormal_frame(&mut rng);
            let basis = PauliTriple::new(v0, v1, v2).map_err(e2s)?;
            let three = three_pauli_lhs(&a, &basis).map_err(e2s)?;
            order = order.max(cavalcanti_lhs(&a, &basis).map_err(e2s)? - three);
            invariance = invariance.max((three - reference).abs());
        }
        let best = optimal_steering_basis(&a).map_err(e2s)?;
        optimal = optimal.max((cavalcanti_lhs(&a, &best).map_err(e2s)? - three_pauli_lhs(&a, &best).map_err(e2s)?).abs());
    }
    ensure(order <= 1e-12 && invariance <= 1e-10 && fast <= 1e-12 && optimal <= 1e-10, || {
        format!("order {order:e}, invariance {invariance:e}, fast {fast:e}, optimal {optimal:e}")
    })?;
    Ok(format!(
        "200 assemblages x 20 bases; two-Pauli excess {order:.1e}, invariance {invariance:.1e}, vs fast path {fast:.1e}, optimal-basis gap {optimal:.1e}"
    ))
}

fn local_bounds() -> Outcome {
    let chsh = local_bound_enumerate(&build_chsh()).map_err(e2s)?;
    ensure(chsh == 2.0, || format!("chsh bound {chsh}"))?;
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let mut found = vec![format!("chsh {chsh}")];
    let mut cases = vec![("svetlichny".to_string(), build_svetlichny())];
    for m in 2..=4 {
        cases.push((format!("chained:{m}"), build_chained_svetlichny(m).map_err(e2s)?));
    }
    for (name, ineq) in &cases {
        for p in &perms {
            let b = local_bound_enumerate_with(ineq, p, DEFAULT_STRATEGY_CAP).map_err(e2s)?;
            ensure(b == ineq.local_bound(), || {
                format!("{name}: order {p:?} gives {b}, stored {}", ineq.local_bound())
            })?;
        }
        found.push(format!("{name} {}", ineq.local_bound()));
    }
    Ok(found.join(", "))
}

fn multipartite() -> Outcome {
    let a = Builtin::GhzSvetlichny.build().map_err(e2s)?;
    let svet = build_svetlichny();
    let r = evaluate(&a, &svet).map_err(e2s)?;
    ensure(r.violated, || format!("lhs {} not above {}", r.lhs_value, r.local_bound))?;
    let o = max_violation_search(&a, &svet, &SearchConfig::default()).map_err(e2s)?;
    ensure(
        (o.value - r.lhs_value).abs() <= o.grid_error_bound && o.value <= r.lhs_value + 1e-10,
        || format!("oracle {} vs closed form {} (grid bound {})", o.value, r.lhs_value, o.grid_error_bound),
    )?;
    Ok(format!(
        "lhs {:.12} > 4, oracle {:.12}, gap {:.1e} within grid bound {:.3e}",
        r.lhs_value,
        o.value,
        (o.value - r.lhs_value).abs(),
        o.grid_error_bound
    ))
}

fn well_behavedness() -> Outcome {
    let chsh = well_behaved_heuristic(&build_chsh(), 100, 9).map_err(e2s)?;
    ensure(chsh.violating_samples == 100 && chsh.kernels_per_sample == 16.0, || {
        format!("only {} violating samples", chsh.violating_samples)
    })?;
    ensure(!chsh.found_counterexample(), || format!("chsh: {}", chsh.summary()))?;
    let reducible = well_behaved_heuristic(&chsh_with_superfluous_term(0.5), 100, 9).map_err(e2s)?;
    let c = reducible
        .counterexample
        .as_ref()
        .ok_or_else(|| "no counterexample for the reducible inequality".to_string())?;
    Ok(format!(
        "chsh: {}; reducible: value {:.6} raised to {:.6}",
        chsh.summary(),
        c.value,
        c.mixed_value
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 9] = [
        ("Tsirelson reproduction", tsirelson),
        ("Werner threshold sweep", werner_sweep),
        ("general criterion agrees with CHSH path", criteria_agree),
        ("projective measurements are optimal", lemma_one),
        ("POVM reduction identity", povm_reduction),
        ("steering link", steering_link),
        ("local bounds", local_bounds),
        ("multipartite violation", multipartite),
        ("well-behavedness search", well_behavedness),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {}. {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
