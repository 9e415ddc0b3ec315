//! End-to-end acceptance checks, one test per criterion. Each test prints a
//! single pass line (visible with `--nocapture`); a failed assertion marks
//! the criterion as failed.

use std::f64::consts::TAU;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use curved_qit::channel::{compose, ChoiMatrix};
use curved_qit::fell::{solve_fell, FellProblem, FellStatus, ObservableConstraint, SolverConfig};
use curved_qit::hilbert::{
    expectation, number_op, partial_trace, trace_distance, FockSpace, Operator,
};
use curved_qit::povm::{neumark_dilate, simulate_frequencies, OutcomeSet, POVM};
use curved_qit::random;
use curved_qit::unruh::{
    compare_representations, rindler_thermal_state, two_mode_squeezed_state, SqueezeMethod,
    SqueezingParams,
};
use curved_qit::{QitError, DEFAULT_TOL};

fn unit_temperature() -> SqueezingParams {
    // a = 2 pi, omega = 1 gives kT = 1 and Boltzmann factor x = 1/e.
    SqueezingParams::new(TAU, 1.0).unwrap()
}

#[test]
fn criterion_1_unruh_thermality() {
    let start = Instant::now();
    let params = unit_temperature();
    let pair = FockSpace::new(2, 30).unwrap();
    let single = FockSpace::new(1, 30).unwrap();

    let squeezed = two_mode_squeezed_state(pair, &params, SqueezeMethod::Series).unwrap();
    let reduced = partial_trace(&squeezed, &[0]).unwrap();

    let n = number_op(single, 0).unwrap();
    let mean = expectation(&reduced, &n).unwrap().re;
    let oracle = 1.0 / (std::f64::consts::E - 1.0);
    assert!(
        (mean - oracle).abs() < 1e-9,
        "mean occupation {mean} vs {oracle}"
    );

    let thermal = rindler_thermal_state(single, &params).unwrap();
    let dist = trace_distance(&reduced, &thermal).unwrap();
    assert!(dist < 1e-9, "trace distance {dist}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "runtime {elapsed:?}");
    println!(
        "criterion 1 (unruh thermality): pass (mean occupation err {:.2e}, trace distance {:.2e}, {:.2}s)",
        (mean - oracle).abs(),
        dist,
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_2_representation_agreement() {
    let start = Instant::now();
    let params = unit_temperature();
    let cutoffs = [5usize, 10, 20, 30];
    let rows = compare_representations(&params, 0.01, &cutoffs).unwrap();

    for r in &rows {
        assert!(r.d12 < 1e-9, "cutoff {}: d12 = {:.3e}", r.cutoff, r.d12);
    }
    for w in rows.windows(2) {
        assert!(
            w[1].d13 < w[0].d13,
            "d13 not shrinking: {:.3e} -> {:.3e}",
            w[0].d13,
            w[1].d13
        );
    }
    let last = rows.last().unwrap();
    assert!(last.d13 < 1e-6, "d13 at cutoff 30 = {:.3e}", last.d13);

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "runtime {elapsed:?}");
    println!(
        "criterion 2 (representation agreement): pass (max d12 {:.2e}, final d13 {:.2e}, {:.2}s)",
        rows.iter().fold(0f64, |m, r| m.max(r.d12)),
        last.d13,
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_3_neumark_dilation() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_prob = 0f64;
    let mut worst_iso = 0f64;
    for trial in 0..100 {
        let cutoff = 1 + trial % 7; // dims 2..=8
        let outcomes = 2 + trial % 5; // 2..=6
        let space = FockSpace::new(1, cutoff).unwrap();
        let povm = random::povm(space, outcomes, &mut rng);
        let rho = random::density_matrix(space, &mut rng);

        let dilation = neumark_dilate(&povm).unwrap();
        worst_iso = worst_iso.max(dilation.isometry_residual());

        let direct = povm.probabilities(&rho).unwrap();
        let dilated = dilation.dilated_probabilities(&rho).unwrap();
        for (p, q) in direct.iter().zip(&dilated) {
            worst_prob = worst_prob.max((p - q).abs());
        }
    }
    assert!(worst_prob < 1e-10, "probability discrepancy {worst_prob:.3e}");
    assert!(worst_iso < 1e-12, "isometry residual {worst_iso:.3e}");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "runtime {elapsed:?}");
    println!(
        "criterion 3 (neumark dilation): pass (max prob err {:.2e}, max isometry residual {:.2e}, {:.2}s)",
        worst_prob,
        worst_iso,
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_4_channel_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);

    // Choi <-> Kraus round trip.
    let mut worst_roundtrip = 0f64;
    for trial in 0..100 {
        let cutoff = 1 + trial % 7;
        let space = FockSpace::new(1, cutoff).unwrap();
        let t = random::kraus_channel(space, 1 + trial % 4, &mut rng);
        let choi = t.choi();
        let back = choi.kraus_channel(1e-12).unwrap();
        worst_roundtrip = worst_roundtrip.max(choi.distance(&back.choi()));
    }
    assert!(worst_roundtrip < 1e-10, "round trip {worst_roundtrip:.3e}");

    // The transpose map is positive but not completely positive.
    let space4 = FockSpace::new(1, 3).unwrap();
    let transpose = ChoiMatrix::from_map(space4, |m| m.transpose()).unwrap();
    let min_eig = transpose.min_eigenvalue();
    assert!(min_eig <= -1.0 + 1e-10, "transpose min eigenvalue {min_eig}");
    assert!(transpose.kraus_channel(1e-12).is_err());

    // Schrodinger/Heisenberg duality: tr(T[rho] B) = tr(rho T^dag[B]).
    let mut worst_duality = 0f64;
    for trial in 0..100 {
        let cutoff = 1 + trial % 7;
        let space = FockSpace::new(1, cutoff).unwrap();
        let t = random::kraus_channel(space, 1 + trial % 3, &mut rng);
        let rho = random::density_matrix(space, &mut rng);
        let b = random::hermitian(space, &mut rng);
        let lhs = expectation(&t.apply(&rho).unwrap().rho, &b).unwrap();
        let rhs = expectation(&rho, &t.apply_dual(&b).unwrap()).unwrap();
        worst_duality = worst_duality.max((lhs - rhs).norm());
    }
    assert!(worst_duality < 1e-10, "duality residual {worst_duality:.3e}");

    // Composition associativity.
    let mut worst_assoc = 0f64;
    for _ in 0..10 {
        let space = FockSpace::new(1, 3).unwrap();
        let t1 = random::kraus_channel(space, 2, &mut rng);
        let t2 = random::kraus_channel(space, 2, &mut rng);
        let t3 = random::kraus_channel(space, 2, &mut rng);
        let left = compose(&compose(&t3, &t2).unwrap(), &t1).unwrap();
        let right = compose(&t3, &compose(&t2, &t1).unwrap()).unwrap();
        worst_assoc = worst_assoc.max(left.choi().distance(&right.choi()));
    }
    assert!(worst_assoc < 1e-9, "associativity {worst_assoc:.3e}");

    println!(
        "criterion 4 (channel suite): pass (round trip {:.2e}, transpose min eig {:.6}, duality {:.2e}, associativity {:.2e})",
        worst_roundtrip, min_eig, worst_duality, worst_assoc
    );
}

#[test]
fn criterion_5_fell_solver() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut feasible = 0usize;
    for trial in 0..100 {
        let cutoff = 1 + trial % 15; // dims 2..=16
        let n = 1 + trial % 5;
        let space = FockSpace::new(1, cutoff).unwrap();
        let hidden = random::density_matrix(space, &mut rng);
        let constraints: Vec<ObservableConstraint> = (0..n)
            .map(|_| {
                let a = random::hermitian(space, &mut rng);
                let target = expectation(&hidden, &a).unwrap().re;
                ObservableConstraint::new(a, target, 1e-6, DEFAULT_TOL).unwrap()
            })
            .collect();
        let problem = FellProblem::new(
            space,
            constraints,
            SolverConfig {
                seed: trial as u64,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        let solution = solve_fell(&problem).unwrap();
        assert!(solution.iterations <= 10_000);
        for w in solution.objective_history.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-12,
                "objective increased: {} -> {}",
                w[0],
                w[1]
            );
        }
        if solution.status == FellStatus::Feasible {
            feasible += 1;
        }
    }
    assert!(feasible >= 99, "only {feasible}/100 feasible");

    // Targets outside the observable's spectrum must be rejected up front.
    for trial in 0..10 {
        let space = FockSpace::new(1, 1 + trial % 7).unwrap();
        let a = random::hermitian(space, &mut rng);
        let top = a.eigenvalues().last().copied().unwrap();
        let c = ObservableConstraint::new(a, top + 1.0, 1e-6, DEFAULT_TOL).unwrap();
        let problem = FellProblem::new(space, vec![c], SolverConfig::default()).unwrap();
        match solve_fell(&problem) {
            Err(QitError::ProvablyInfeasible { .. }) => {}
            other => panic!("expected infeasibility pre-check, got {other:?}"),
        }
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "runtime {elapsed:?}");
    println!(
        "criterion 5 (expectation matching): pass ({feasible}/100 feasible, monotone objective, infeasible targets pre-detected, {:.2}s)",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_6_frequency_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for pair in 0..20u64 {
        let cutoff = 1 + (pair as usize) % 7;
        let outcomes = 2 + (pair as usize) % 3;
        let space = FockSpace::new(1, cutoff).unwrap();
        let povm = random::povm(space, outcomes, &mut rng);
        let rho = random::density_matrix(space, &mut rng);

        let report = simulate_frequencies(&povm, &rho, 100_000, pair).unwrap();
        for k in 0..report.labels.len() {
            assert!(
                (report.frequencies[k] - report.probabilities[k]).abs()
                    <= report.epsilons[k].max(f64::EPSILON),
                "pair {pair} outcome {k}: |w - p| = {:.3e} > {:.3e}",
                (report.frequencies[k] - report.probabilities[k]).abs(),
                report.epsilons[k]
            );
        }
        let rerun = simulate_frequencies(&povm, &rho, 100_000, pair).unwrap();
        assert_eq!(report.counts, rerun.counts, "pair {pair} not reproducible");
    }
    println!("criterion 6 (frequency check): pass (20 pairs within 5-sigma, reruns identical)");
}

#[test]
fn criterion_7_povm_validator() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..1000usize {
        let cutoff = 1 + case % 7;
        let outcomes = 2 + case % 4;
        let space = FockSpace::new(1, cutoff).unwrap();
        let valid = random::povm(space, outcomes, &mut rng);
        let labels = OutcomeSet::indexed(outcomes);

        match case % 3 {
            // Valid as constructed.
            0 => {
                POVM::new(labels, valid.effects().to_vec(), 1e-9)
                    .unwrap_or_else(|e| panic!("case {case}: valid set rejected: {e}"));
            }
            // Shift weight between two effects so the sum stays the
            // identity but the first effect acquires a negative eigenvalue.
            1 => {
                let mut effects = valid.effects().to_vec();
                let mu = effects[0].min_eigenvalue() + 1e-3;
                let id = Operator::identity(space);
                effects[0] = effects[0].sub(&id.scale_re(mu)).unwrap();
                effects[1] = effects[1].add(&id.scale_re(mu)).unwrap();
                match POVM::new(labels, effects, 1e-9) {
                    Err(QitError::NotPositive { .. }) => {}
                    other => panic!("case {case}: expected positivity rejection, got {other:?}"),
                }
            }
            // Inflate every effect: still positive, no longer complete.
            _ => {
                let effects: Vec<Operator> =
                    valid.effects().iter().map(|e| e.scale_re(1.001)).collect();
                match POVM::new(labels, effects, 1e-9) {
                    Err(QitError::Incomplete { .. }) => {}
                    other => {
                        panic!("case {case}: expected completeness rejection, got {other:?}")
                    }
                }
            }
        }
    }
    println!("criterion 7 (measure validator): pass (1000 cases classified correctly)");
}
