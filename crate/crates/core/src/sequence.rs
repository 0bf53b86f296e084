//! Bit-string pulse sequences: the evenly spaced seed sequence, total time
//! evolution over the unitary database, projected average fidelity, and
//! level-population trajectories.

use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{ModelParams, UnitaryDatabase};
use crate::propagator::ComplexMatrix;

/// A binary pulse train: ones are applied pulses, zeros free evolution, each
/// occupying one pixel of length 2 t_c.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    bits: Vec<bool>,
    pixel_ps: f64,
}

impl PulseSequence {
    pub fn new(bits: Vec<bool>, pixel: f64) -> Result<Self> {
        if !(pixel.is_finite() && pixel > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "pixel must be positive and finite, got {pixel}"
            )));
        }
        Ok(Self {
            bits,
            pixel_ps: clean_ps(pixel),
        })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Pixel length in seconds.
    pub fn pixel(&self) -> f64 {
        self.pixel_ps * 1e-12
    }

    /// Total gate time: number of pixels times the pixel length.
    pub fn gate_time(&self) -> f64 {
        self.bits.len() as f64 * self.pixel()
    }

    /// Number of applied pulses (ones).
    pub fn pulse_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Replaces the bit pattern, keeping the pixel length.
    pub fn with_bits(&self, bits: Vec<bool>) -> Self {
        Self {
            bits,
            pixel_ps: self.pixel_ps,
        }
    }

    /// One header line, then the bit string as one ASCII line of '0'/'1'.
    pub fn to_text(&self) -> String {
        let gate_ns = self.bits.len() as f64 * self.pixel_ps / 1000.0;
        let mut out = format!("# pixel_ps={} gate_ns={}\n", self.pixel_ps, gate_ns);
        out.extend(self.bits.iter().map(|&b| if b { '1' } else { '0' }));
        out.push('\n');
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let parse_err = |msg: String| Error::Parse {
            path: origin.to_string(),
            msg,
        };
        let mut pixel_ps: Option<f64> = None;
        let mut bits: Option<Vec<bool>> = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                for token in header.split_whitespace() {
                    if let Some(value) = token.strip_prefix("pixel_ps=") {
                        pixel_ps = Some(
                            value
                                .parse()
                                .map_err(|e| parse_err(format!("pixel_ps: {e}")))?,
                        );
                    }
                }
                continue;
            }
            if bits.is_some() {
                return Err(parse_err("more than one bit-string line".into()));
            }
            let parsed: Vec<bool> = line
                .chars()
                .map(|c| match c {
                    '0' => Ok(false),
                    '1' => Ok(true),
                    other => Err(parse_err(format!("invalid sequence character '{other}'"))),
                })
                .collect::<Result<_>>()?;
            bits = Some(parsed);
        }
        let pixel_ps = pixel_ps.ok_or_else(|| parse_err("missing pixel_ps header".into()))?;
        let bits = bits.ok_or_else(|| parse_err("missing bit-string line".into()))?;
        Self::new(bits, pixel_ps * 1e-12)
    }
}

/// Rounds a pixel length to a clean picosecond value for the text header
/// (removes the 1e-16-level residue of the seconds <-> ps conversion).
fn clean_ps(pixel_s: f64) -> f64 {
    let ps = pixel_s * 1e12;
    (ps * 1e9).round() / 1e9
}

/// Target gate embedded in the d-level space. The fidelity only reads the
/// qubit block, so the leakage phase never affects any score.
#[derive(Debug, Clone)]
pub struct TargetGate {
    matrix: ComplexMatrix,
    qubit_dim: usize,
    leak_phase: f64,
}

impl TargetGate {
    /// Pauli-Y on the computational subspace, an arbitrary phase on every
    /// leakage level.
    pub fn pauli_y(levels: usize, leak_phase: f64) -> Self {
        let matrix = ComplexMatrix::from_fn(levels, |i, j| match (i, j) {
            (0, 1) => C64::new(-1.0, 0.0),
            (1, 0) => C64::new(1.0, 0.0),
            (i, j) if i == j && i >= 2 => C64::from_polar(1.0, leak_phase),
            _ => C64::new(0.0, 0.0),
        });
        Self {
            matrix,
            qubit_dim: 2,
            leak_phase,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn qubit_dim(&self) -> usize {
        self.qubit_dim
    }

    pub fn leak_phase(&self) -> f64 {
        self.leak_phase
    }
}

/// Evenly spaced seed sequence: `n_pulses` ones separated by one full qubit
/// precession period, rounded to the pixel grid.
pub fn initial_sequence(params: &ModelParams, n_pulses: usize) -> Result<PulseSequence> {
    assert!(n_pulses >= 1, "need at least one pulse");
    let spacing = pulse_spacing(params)?;
    let mut bits = vec![false; n_pulses * spacing];
    for k in 0..n_pulses {
        bits[k * spacing] = true;
    }
    PulseSequence::new(bits, params.pixel())
}

/// Evenly spaced sequence truncated (or extended) to an exact pixel count,
/// keeping the precession spacing; seeds short-gate-time optimizations.
pub fn truncated_initial_sequence(params: &ModelParams, n_pixels: usize) -> Result<PulseSequence> {
    assert!(n_pixels >= 1, "need at least one pixel");
    let spacing = pulse_spacing(params)?;
    let mut bits = vec![false; n_pixels];
    let mut k = 0;
    while k < n_pixels {
        bits[k] = true;
        k += spacing;
    }
    PulseSequence::new(bits, params.pixel())
}

/// Pixels per pulse period: round((2 pi / omega) / (2 t_c)).
pub fn pulse_spacing(params: &ModelParams) -> Result<usize> {
    let period = params.precession_period();
    let pixel = params.pixel();
    if period < pixel {
        return Err(Error::PeriodTooShort { period, pixel });
    }
    Ok((period / pixel).round() as usize)
}

/// Total time evolution of a sequence: the ordered product of database
/// entries, earliest pixel acting first (rightmost factor).
pub fn evolve(seq: &PulseSequence, db: &UnitaryDatabase) -> Result<ComplexMatrix> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let dim = db.dim();
    let phases = db.u0_phases();
    let mut u = ComplexMatrix::identity(dim);
    for &bit in seq.bits() {
        if bit {
            u = db.u1().mul(&u);
        } else {
            // u0 is diagonal: left-multiplying scales row i by phase i
            u = ComplexMatrix::from_fn(dim, |i, j| phases[i] * u.get(i, j));
        }
    }
    Ok(u)
}

/// Projected average fidelity: |sum over the qubit block of
/// conj(target) * u|^2 / qubit_dim^2. Invariant under global phase and
/// independent of every leakage entry of `u`.
pub fn fidelity(u: &ComplexMatrix, target: &TargetGate) -> f64 {
    assert_eq!(
        u.dim(),
        target.matrix().dim(),
        "fidelity dimension mismatch"
    );
    let q = target.qubit_dim();
    let mut trace = C64::new(0.0, 0.0);
    for j in 0..q {
        for k in 0..q {
            trace += target.matrix().get(j, k).conj() * u.get(j, k);
        }
    }
    let q2 = (q * q) as f64;
    (trace.norm_sqr() / q2).clamp(0.0, 1.0)
}

/// Per-pixel level occupations for a basis-state start: N+1 rows of d
/// probabilities, computed by state-vector propagation.
pub fn populations(
    seq: &PulseSequence,
    db: &UnitaryDatabase,
    initial_level: usize,
) -> Vec<Vec<f64>> {
    let dim = db.dim();
    assert!(initial_level < dim, "initial level outside model");
    let phases = db.u0_phases();
    let mut state = vec![C64::new(0.0, 0.0); dim];
    state[initial_level] = C64::new(1.0, 0.0);

    let mut rows = Vec::with_capacity(seq.len() + 1);
    rows.push(state.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
    for &bit in seq.bits() {
        if bit {
            state = db.u1().apply(&state);
        } else {
            for (z, p) in state.iter_mut().zip(&phases) {
                *z *= p;
            }
        }
        rows.push(state.iter().map(|z| z.norm_sqr()).collect());
    }
    rows
}

/// Gate error 1 - fidelity of a sequence, through the full evolution.
pub fn sequence_error(seq: &PulseSequence, db: &UnitaryDatabase, target: &TargetGate) -> Result<f64> {
    Ok(1.0 - fidelity(&evolve(seq, db)?, target))
}

/// Fast scorer for rating many bit strings against one database and target:
/// propagates only the qubit columns and jumps over runs of free pixels with
/// precomputed powers of the diagonal u0.
pub struct SequenceScorer {
    dim: usize,
    qubit_dim: usize,
    u1: Vec<C64>,
    u0_pow: Vec<C64>, // u0_pow[k*dim + j] = exp(-i lambda_j * k * pixel)
    freqs: Vec<f64>,
    target_conj: Vec<C64>,
    max_len: usize,
}

impl SequenceScorer {
    pub fn new(db: &UnitaryDatabase, target: &TargetGate, max_len: usize) -> Self {
        let dim = db.dim();
        assert_eq!(dim, target.matrix().dim(), "scorer dimension mismatch");
        let pixel = db.params().pixel();
        let freqs = db.drift_frequencies();
        let mut u0_pow = Vec::with_capacity((max_len + 1) * dim);
        for k in 0..=max_len {
            for &f in &freqs {
                u0_pow.push(C64::from_polar(1.0, -f * k as f64 * pixel));
            }
        }
        let q = target.qubit_dim();
        let mut target_conj = Vec::with_capacity(q * q);
        for j in 0..q {
            for k in 0..q {
                target_conj.push(target.matrix().get(j, k).conj());
            }
        }
        Self {
            dim,
            qubit_dim: q,
            u1: db.u1().entries().to_vec(),
            u0_pow,
            freqs,
            target_conj,
            max_len,
        }
    }

    /// Fidelity of a bit string; agrees with `fidelity(evolve(..))` to
    /// rounding.
    pub fn fidelity_bits(&self, bits: &[bool]) -> f64 {
        assert!(bits.len() <= self.max_len, "bit string longer than scorer");
        let d = self.dim;
        let q = self.qubit_dim;
        // columns of the evolving unitary, restricted to the qubit starts
        let mut cols = vec![C64::new(0.0, 0.0); q * d];
        for c in 0..q {
            cols[c * d + c] = C64::new(1.0, 0.0);
        }
        let mut scratch = vec![C64::new(0.0, 0.0); d];

        let n = bits.len();
        let mut i = 0;
        while i < n {
            if bits[i] {
                for c in 0..q {
                    let col = &mut cols[c * d..(c + 1) * d];
                    for (r, s) in scratch.iter_mut().enumerate() {
                        let row = &self.u1[r * d..(r + 1) * d];
                        *s = row
                            .iter()
                            .zip(col.iter())
                            .map(|(a, b)| a * b)
                            .sum();
                    }
                    col.copy_from_slice(&scratch);
                }
                i += 1;
            } else {
                let start = i;
                while i < n && !bits[i] {
                    i += 1;
                }
                let gap = i - start;
                let phases = &self.u0_pow[gap * d..(gap + 1) * d];
                for c in 0..q {
                    for r in 0..d {
                        cols[c * d + r] *= phases[r];
                    }
                }
            }
        }

        let mut trace = C64::new(0.0, 0.0);
        for j in 0..q {
            for k in 0..q {
                trace += self.target_conj[j * q + k] * cols[k * d + j];
            }
        }
        let q2 = (q * q) as f64;
        (trace.norm_sqr() / q2).clamp(0.0, 1.0)
    }

    /// Gate error 1 - fidelity of a bit string.
    pub fn error_bits(&self, bits: &[bool]) -> f64 {
        1.0 - self.fidelity_bits(bits)
    }

    /// Fidelity of a bit string where applied pulse k is displaced in time by
    /// `offsets[k]`: each pulse unitary is conjugated by the free evolution
    /// over the offset, U0(-dt) U1 U0(dt).
    pub fn fidelity_bits_jittered(&self, bits: &[bool], offsets: &[f64]) -> f64 {
        assert!(bits.len() <= self.max_len, "bit string longer than scorer");
        let d = self.dim;
        let q = self.qubit_dim;
        let mut cols = vec![C64::new(0.0, 0.0); q * d];
        for c in 0..q {
            cols[c * d + c] = C64::new(1.0, 0.0);
        }
        let mut scratch = vec![C64::new(0.0, 0.0); d];
        let mut ph_in = vec![C64::new(0.0, 0.0); d];

        let n = bits.len();
        let mut i = 0;
        let mut pulse_idx = 0;
        while i < n {
            if bits[i] {
                let dt = offsets[pulse_idx];
                pulse_idx += 1;
                for (p, &f) in ph_in.iter_mut().zip(&self.freqs) {
                    *p = C64::from_polar(1.0, -f * dt);
                }
                for c in 0..q {
                    let col = &mut cols[c * d..(c + 1) * d];
                    for (z, p) in col.iter_mut().zip(&ph_in) {
                        *z *= p;
                    }
                    for (r, s) in scratch.iter_mut().enumerate() {
                        let row = &self.u1[r * d..(r + 1) * d];
                        *s = row.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                    }
                    for ((z, s), p) in col.iter_mut().zip(&scratch).zip(&ph_in) {
                        *z = s * p.conj();
                    }
                }
                i += 1;
            } else {
                let start = i;
                while i < n && !bits[i] {
                    i += 1;
                }
                let gap = i - start;
                let phases = &self.u0_pow[gap * d..(gap + 1) * d];
                for c in 0..q {
                    for r in 0..d {
                        cols[c * d + r] *= phases[r];
                    }
                }
            }
        }
        assert_eq!(pulse_idx, offsets.len(), "one offset per applied pulse");

        let mut trace = C64::new(0.0, 0.0);
        for j in 0..q {
            for k in 0..q {
                trace += self.target_conj[j * q + k] * cols[k * d + j];
            }
        }
        let q2 = (q * q) as f64;
        (trace.norm_sqr() / q2).clamp(0.0, 1.0)
    }
}
