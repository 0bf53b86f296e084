//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (visible with `cargo test --test acceptance -- --nocapture`).
//!
//! The expensive fixtures (unitary database, optimized 20 ns sequence) are
//! built once and shared.

use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use sfq_control::experiments::{
    jitter_eval, jittered_pulse, optimize_gate_time, speed_limit_sweep, JitterMode, JitterSpec,
};
use sfq_control::ga::{GaConfig, GaRun, Termination};
use sfq_control::model::{
    build_control, build_database, build_drift, free_evolution, pulse_normalization, ModelParams,
    UnitaryDatabase, DEFAULT_SUBSTEPS,
};
use sfq_control::propagator::{ordered_propagator, ComplexMatrix};
use sfq_control::sequence::{
    evolve, fidelity, initial_sequence, populations, PulseSequence, SequenceScorer, TargetGate,
};

/// Regression constant: gate error of the evenly spaced n = 100 sequence at
/// 20 ns, computed once with the shipped defaults and frozen.
const SEED_SEQUENCE_ERROR: f64 = 1.131_654_602_201_004_3e-2;

fn params() -> ModelParams {
    ModelParams::default()
}

fn db() -> &'static UnitaryDatabase {
    static DB: OnceLock<UnitaryDatabase> = OnceLock::new();
    DB.get_or_init(|| build_database(&params(), DEFAULT_SUBSTEPS).unwrap())
}

/// One optimized 20 ns run (seed 5), shared by the jitter and invariant
/// criteria.
fn optimized() -> &'static GaRun {
    static OPT: OnceLock<GaRun> = OnceLock::new();
    OPT.get_or_init(|| {
        let ga = GaConfig {
            seed: 5,
            ..GaConfig::default()
        };
        let run = optimize_gate_time(2000, &params(), db(), &ga).unwrap();
        assert_eq!(run.terminated_by, Termination::TargetReached);
        run
    })
}

fn report(criterion: &str, pass: bool) {
    println!(
        "acceptance criterion {criterion}: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed");
}

#[test]
fn criterion_1_database_correctness() {
    let db = db();
    let unitary = db.u0().unitarity_defect() < 1e-12 && db.u1().unitarity_defect() < 1e-12;

    let closed_form = [
        C64::new(1.0, 0.0),
        C64::from_polar(1.0, -0.1 * std::f64::consts::PI),
        C64::from_polar(1.0, -0.196 * std::f64::consts::PI),
    ];
    let mut u0_ok = true;
    for (k, want) in closed_form.iter().enumerate() {
        u0_ok &= (db.u0().get(k, k) - want).norm() < 1e-12;
        for j in 0..3 {
            if j != k {
                u0_ok &= db.u0().get(k, j) == C64::new(0.0, 0.0);
            }
        }
    }

    let doubled = build_database(&params(), 2 * DEFAULT_SUBSTEPS).unwrap();
    let doubling_diff = db.u1().max_abs_diff(doubled.u1());

    println!(
        "  u0/u1 defects: {:.2e} / {:.2e}; substep-doubling diff: {:.2e}",
        db.u0().unitarity_defect(),
        db.u1().unitarity_defect(),
        doubling_diff
    );
    report(
        "1 (database correctness)",
        unitary && u0_ok && doubling_diff < 1e-10,
    );
}

/// Whole-interval oracle: the stitched H(t) carries the build-grid-normalized
/// Gaussian at the center of every pulse pixel, and the pixel-product
/// convention is recovered by the half-pixel free-evolution conjugation.
fn stitched_oracle(bits: &[bool], p: &ModelParams, substeps_per_pixel: usize) -> ComplexMatrix {
    let h0 = build_drift(p);
    let h1 = build_control(p.levels);
    let amp = pulse_normalization(p, DEFAULT_SUBSTEPS);
    let pixel = p.pixel();
    let inv_2tau2 = 1.0 / (2.0 * p.tau * p.tau);
    let n = bits.len();

    let sampler = |t: f64| {
        let idx = ((t / pixel) as usize).min(n - 1);
        let u = if bits[idx] {
            let t_rel = t - (idx as f64 * pixel + p.t_c);
            amp * (-t_rel * t_rel * inv_2tau2).exp()
        } else {
            0.0
        };
        ComplexMatrix::from_fn(p.levels, |i, j| h0.get(i, j) + u * h1.get(i, j))
    };
    let windowed =
        ordered_propagator(sampler, 0.0, n as f64 * pixel, n * substeps_per_pixel).unwrap();
    free_evolution(p, p.t_c)
        .mul(&windowed)
        .mul(&free_evolution(p, -p.t_c))
}

#[test]
fn criterion_2_oracle_equivalence() {
    let p = params();
    let db = db();
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let bits: Vec<bool> = (0..50).map(|_| rng.random_bool(0.5)).collect();
        let seq = PulseSequence::new(bits.clone(), p.pixel()).unwrap();
        let via_database = evolve(&seq, db).unwrap();
        let via_integration = stitched_oracle(&bits, &p, DEFAULT_SUBSTEPS);
        worst = worst.max(via_database.max_abs_diff(&via_integration));
    }

    // a pulse delayed by one full pixel equals the stitched integration of
    // the correspondingly shifted drive
    let late = jittered_pulse(db, p.pixel());
    let shifted = db.u0().mul(db.u0()).mul(&late); // bits "100", pulse one pixel late
    let oracle = stitched_oracle(&[false, true, false], &p, DEFAULT_SUBSTEPS);
    let jitter_diff = shifted.max_abs_diff(&oracle);

    println!("  worst evolve-vs-integration diff: {worst:.2e}; delayed-pulse diff: {jitter_diff:.2e}");
    report(
        "2 (oracle equivalence)",
        worst < 1e-8 && jitter_diff < 1e-8,
    );
}

#[test]
fn criterion_3_seed_sequence_baseline() {
    let p = params();
    let seq = initial_sequence(&p, 100).unwrap();
    let target = TargetGate::pauli_y(3, 0.0);
    let error = 1.0 - fidelity(&evolve(&seq, db()).unwrap(), &target);
    println!("  seed-sequence error: {error:.12e} (frozen {SEED_SEQUENCE_ERROR:.12e})");
    report(
        "3 (seed-sequence baseline)",
        (1e-3..=1e-1).contains(&error) && (error - SEED_SEQUENCE_ERROR).abs() < 1e-9,
    );
}

#[test]
fn criterion_4_ga_reproduction() {
    let p = params();
    let db = db();
    let mut successes = 0;
    let mut pulse_counts_ok = true;
    for seed in 1..=5u64 {
        let ga = GaConfig {
            seed,
            ..GaConfig::default()
        };
        let run = optimize_gate_time(2000, &p, db, &ga).unwrap();
        let error = 1.0 - run.best_fitness;
        let pulses = run.best_genome.pulse_count();
        println!(
            "  seed {seed}: error {error:.3e} after {} generations, {} pulses",
            run.generations_used, pulses
        );
        if error < 1e-4 {
            successes += 1;
            pulse_counts_ok &= pulses > 100;
        }
    }
    report(
        "4 (GA reaches target at 20 ns)",
        successes >= 3 && pulse_counts_ok,
    );
}

#[test]
fn criterion_5_speed_limit() {
    let p = params();
    let db = db();
    let gate_times: Vec<f64> = [6.0, 8.0, 12.0, 16.0, 20.0]
        .iter()
        .map(|ns| ns * 1e-9)
        .collect();
    let ga = GaConfig::default();
    let sweep = speed_limit_sweep(&gate_times, &p, db, &ga).unwrap();
    for row in &sweep.rows {
        println!(
            "  {} ns ({} pixels): error {:.3e} after {} generations",
            row.gate_time * 1e9,
            row.pixels,
            row.best_error,
            row.generations
        );
    }
    let err_20 = sweep.rows.last().unwrap().best_error;
    let reaches_target_at_20 = err_20 < 1e-4;
    // shorter gates must not systematically beat the 20 ns optimum
    let non_improving = sweep.rows[..4]
        .iter()
        .all(|row| row.best_error > err_20 / 10.0);

    // the 6 ns frontier: at least one of five seeds gets below 1e-2
    let mut frontier_ok = false;
    for seed in 1..=5u64 {
        let ga = GaConfig {
            seed,
            ..GaConfig::default()
        };
        let run = optimize_gate_time(600, &p, db, &ga).unwrap();
        if 1.0 - run.best_fitness < 1e-2 {
            println!("  6 ns frontier reached with seed {seed}: {:.3e}", 1.0 - run.best_fitness);
            frontier_ok = true;
            break;
        }
    }
    report(
        "5 (speed-limit behavior)",
        reaches_target_at_20 && non_improving && frontier_ok,
    );
}

#[test]
fn criterion_6_jitter_robustness() {
    let db = db();
    let run = optimized();
    let seq = &run.best_genome;
    let target = TargetGate::pauli_y(3, 0.0);
    let scorer = SequenceScorer::new(db, &target, seq.len());
    let noiseless = scorer.error_bits(seq.bits());
    let runs = 1000;
    let stderr = |std: f64| std / (runs as f64).sqrt();

    let eval = |sigma_ps: f64, mode: JitterMode| {
        let spec = JitterSpec::new(sigma_ps * 1e-12, mode, runs, 7);
        jitter_eval(seq, db, &target, &spec).unwrap()
    };

    // (a) zero jitter reproduces the noiseless error exactly
    let (mean0, std0) = eval(0.0, JitterMode::External);
    let zero_exact = mean0.to_bits() == noiseless.to_bits() && std0 == 0.0;

    // (b) external sigma = 1 ps stays below 1e-3
    let (ext1, ext1_std) = eval(1.0, JitterMode::External);
    let external_ok = ext1 < 1e-3 + 3.0 * stderr(ext1_std);

    // (c) the internal clock degrades faster at the same sigma
    let (int1, int1_std) = eval(1.0, JitterMode::Internal);
    let ordering_1ps = int1 > ext1 - 3.0 * (stderr(int1_std) + stderr(ext1_std));

    // (d) sigma at the pulse duration rises past 10x the optimized error
    let (ext10, ext10_std) = eval(10.0, JitterMode::External);
    let saturation = ext10 - 3.0 * stderr(ext10_std) > 10.0 * noiseless;

    // statistical monotonicity and mode ordering across the sigma grid
    let grid = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0];
    let mut monotone = true;
    let mut ordering = true;
    let mut prev: Option<(f64, f64)> = None;
    for &sigma_ps in &grid {
        let (ext_mean, ext_std) = eval(sigma_ps, JitterMode::External);
        let (int_mean, int_std) = eval(sigma_ps, JitterMode::Internal);
        println!(
            "  sigma {sigma_ps:>4} ps: external {ext_mean:.3e} (std {ext_std:.1e}), internal {int_mean:.3e} (std {int_std:.1e})"
        );
        if sigma_ps > 0.0 {
            ordering &= int_mean >= ext_mean - 3.0 * (stderr(int_std) + stderr(ext_std));
        }
        if let Some((prev_mean, prev_std)) = prev {
            monotone &= ext_mean >= prev_mean - 3.0 * (stderr(prev_std) + stderr(ext_std));
        }
        prev = Some((ext_mean, ext_std));
    }

    println!(
        "  noiseless {noiseless:.3e}; sigma=0 exact: {zero_exact}; ext 1 ps {ext1:.3e}; int 1 ps {int1:.3e}; ext 10 ps {ext10:.3e}"
    );
    report(
        "6 (jitter robustness)",
        zero_exact && external_ok && ordering_1ps && saturation && monotone && ordering,
    );
}

#[test]
fn criterion_7_invariant_suite() {
    let p = params();
    let db = db();
    let run = optimized();
    let seq = &run.best_genome;
    let u = evolve(seq, db).unwrap();

    // fidelity is bitwise blind to the leakage phase and to a global phase
    let phi0 = fidelity(&u, &TargetGate::pauli_y(3, 0.0));
    let mut phase_blind = true;
    for leak_phase in [0.7, 2.1, -1.3] {
        phase_blind &= fidelity(&u, &TargetGate::pauli_y(3, leak_phase)).to_bits() == phi0.to_bits();
    }
    let alpha = 0.7;
    let rotated = ComplexMatrix::from_fn(3, |i, j| C64::from_polar(1.0, alpha) * u.get(i, j));
    let global_phase = (fidelity(&rotated, &TargetGate::pauli_y(3, 0.0)) - phi0).abs() < 1e-12;

    // populations: every row sums to one; the optimized sequence ends with
    // negligible leakage from either computational start
    let mut rows_sum = true;
    let mut leakage_ok = true;
    for start in [0usize, 1] {
        let rows = populations(seq, db, start);
        for row in &rows {
            rows_sum &= (row.iter().sum::<f64>() - 1.0).abs() < 1e-10;
        }
        let final_leak = rows.last().unwrap()[2];
        println!("  final leakage from level {start}: {final_leak:.3e}");
        leakage_ok &= final_leak < 1e-4;
    }

    // elitist monotonicity over the full optimization history
    let monotone = run
        .history
        .windows(2)
        .all(|pair| pair[1].best_fitness >= pair[0].best_fitness);

    // seed determinism: identical short runs, byte-identical rendered history
    let ga = GaConfig {
        seed: 17,
        max_iterations: 150,
        ..GaConfig::default()
    };
    let render = |run: &GaRun| {
        let mut s = String::new();
        for row in &run.history {
            s.push_str(&format!(
                "{},{:.12e},{:.12e}\n",
                row.generation,
                1.0 - row.best_fitness,
                1.0 - row.mean_fitness
            ));
        }
        s
    };
    let run_a = optimize_gate_time(2000, &p, db, &ga).unwrap();
    let run_b = optimize_gate_time(2000, &p, db, &ga).unwrap();
    let deterministic =
        render(&run_a) == render(&run_b) && run_a.best_genome == run_b.best_genome;

    // the three-level model is enough: a five-level rebuild scores the same
    // optimized sequence to 1e-4
    let p5 = ModelParams {
        levels: 5,
        ..params()
    };
    let db5 = build_database(&p5, DEFAULT_SUBSTEPS).unwrap();
    let seq5 = PulseSequence::new(seq.bits().to_vec(), p5.pixel()).unwrap();
    let phi5 = fidelity(&evolve(&seq5, &db5).unwrap(), &TargetGate::pauli_y(5, 0.0));
    let dlevel_diff = (phi5 - phi0).abs();
    println!("  d=3 vs d=5 fidelity difference: {dlevel_diff:.3e}");
    let dlevel_ok = dlevel_diff < 1e-4;

    report(
        "7 (invariant suite)",
        phase_blind && global_phase && rows_sum && leakage_ok && monotone && deterministic && dlevel_ok,
    );
}
