//! Study drivers: the quantum-speed-limit sweep over gate times and the
//! Monte-Carlo robustness of an optimized sequence against clock jitter.

use num_complex::Complex64 as C64;
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ga::{optimize, GaConfig, GaRun, Termination};
use crate::model::{ModelParams, UnitaryDatabase};
use crate::propagator::ComplexMatrix;
use crate::sequence::{truncated_initial_sequence, PulseSequence, SequenceScorer, TargetGate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JitterMode {
    /// Constant per-pulse variance: an external clock distributes its own
    /// timing error to every pulse independently.
    External,
    /// Variance growing linearly with the applied pulse number k (std
    /// sqrt(k) * sigma): an on-chip clock accumulates timing error.
    Internal,
}

impl JitterMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            JitterMode::External => "external",
            JitterMode::Internal => "internal",
        }
    }
}

/// How the internal clock's growing variance is realized. Both give pulse k a
/// marginal std of sqrt(k) * sigma; the random walk correlates neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InternalModel {
    IndependentSqrtK,
    RandomWalk,
}

#[derive(Debug, Clone, Copy)]
pub struct JitterSpec {
    pub sigma: f64,
    pub mode: JitterMode,
    pub runs: usize,
    pub seed: u64,
    pub internal_model: InternalModel,
}

impl JitterSpec {
    pub fn new(sigma: f64, mode: JitterMode, runs: usize, seed: u64) -> Self {
        Self {
            sigma,
            mode,
            runs,
            seed,
            internal_model: InternalModel::IndependentSqrtK,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::InvalidConfig(format!(
                "jitter sigma must be nonnegative, got {}",
                self.sigma
            )));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("jitter runs must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub gate_time: f64,
    pub pixels: usize,
    pub best_error: f64,
    pub generations: usize,
    pub terminated_by: Termination,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Number of pixels in a gate time, requiring an integer multiple of the
/// pixel length up to floating slack.
pub fn pixel_count(gate_time: f64, pixel: f64) -> Result<usize> {
    let ratio = gate_time / pixel;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-6 {
        return Err(Error::NonIntegerPixelCount { gate_time, pixel });
    }
    Ok(rounded as usize)
}

/// One GA run per gate time, each seeded from the evenly spaced sequence
/// truncated to the gate's pixel count. A row records the reached error and
/// how the run stopped (target fidelity or iteration budget).
pub fn speed_limit_sweep(
    gate_times: &[f64],
    params: &ModelParams,
    db: &UnitaryDatabase,
    ga_config: &GaConfig,
) -> Result<SweepResult> {
    let pixel = params.pixel();
    let mut rows = Vec::with_capacity(gate_times.len());
    for &gate_time in gate_times {
        let pixels = pixel_count(gate_time, pixel)?;
        let run = optimize_gate_time(pixels, params, db, ga_config)?;
        rows.push(SweepRow {
            gate_time,
            pixels,
            best_error: 1.0 - run.best_fitness,
            generations: run.generations_used,
            terminated_by: run.terminated_by,
        });
    }
    Ok(SweepResult { rows })
}

/// GA run for a fixed pixel count, maximizing the Pauli-Y fidelity.
pub fn optimize_gate_time(
    pixels: usize,
    params: &ModelParams,
    db: &UnitaryDatabase,
    ga_config: &GaConfig,
) -> Result<GaRun> {
    let seed_seq = truncated_initial_sequence(params, pixels)?;
    let target = TargetGate::pauli_y(db.dim(), 0.0);
    let scorer = SequenceScorer::new(db, &target, pixels);
    optimize(&seed_seq, |bits| scorer.fidelity_bits(bits), ga_config)
}

/// A pulse displaced in time by `delta_t`: U0(-dt) U1 U0(dt). Positive
/// delta_t is a late pulse.
pub fn jittered_pulse(db: &UnitaryDatabase, delta_t: f64) -> ComplexMatrix {
    let dim = db.dim();
    let freqs = db.drift_frequencies();
    ComplexMatrix::from_fn(dim, |i, j| {
        let left = C64::from_polar(1.0, freqs[i] * delta_t); // U0(-dt) diagonal
        let right = C64::from_polar(1.0, -freqs[j] * delta_t); // U0(dt) diagonal
        left * db.u1().get(i, j) * right
    })
}

/// Monte-Carlo estimate of the gate error under timing jitter: every applied
/// pulse is displaced by a normal random time, the sequence is evolved, and
/// (mean, sample std) of the error over `spec.runs` draws is returned.
///
/// Run r derives its RNG stream from (seed, r), so results do not depend on
/// scheduling.
pub fn jitter_eval(
    seq: &PulseSequence,
    db: &UnitaryDatabase,
    target: &TargetGate,
    spec: &JitterSpec,
) -> Result<(f64, f64)> {
    spec.validate()?;
    let scorer = SequenceScorer::new(db, target, seq.len());
    let bits = seq.bits();

    if spec.sigma == 0.0 {
        // exactly the noiseless error, with zero spread
        return Ok((scorer.error_bits(bits), 0.0));
    }

    let n_pulses = seq.pulse_count();
    let errors: Vec<f64> = (0..spec.runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
            rng.set_stream(run as u64);
            let mut offsets = Vec::with_capacity(n_pulses);
            let mut walk = 0.0;
            for k in 1..=n_pulses {
                let z: f64 = rng.sample(StandardNormal);
                let dt = match (spec.mode, spec.internal_model) {
                    (JitterMode::External, _) => spec.sigma * z,
                    (JitterMode::Internal, InternalModel::IndependentSqrtK) => {
                        spec.sigma * (k as f64).sqrt() * z
                    }
                    (JitterMode::Internal, InternalModel::RandomWalk) => {
                        walk += spec.sigma * z;
                        walk
                    }
                };
                offsets.push(dt);
            }
            1.0 - scorer.fidelity_bits_jittered(bits, &offsets)
        })
        .collect();

    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let std = if errors.len() > 1 {
        let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
        var.sqrt()
    } else {
        0.0
    };
    Ok((mean, std))
}
