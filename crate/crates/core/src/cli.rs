//! Command-line front end: config parsing, database build/caching, GA runs,
//! gate-time sweeps, jitter studies, and CSV emission with reproducibility
//! metadata.
//!
//! Exit codes: 0 success, 2 config/validation error, 3 iteration budget
//! exhausted (best result still written).

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};
use crate::experiments::{
    jitter_eval, pixel_count, speed_limit_sweep, InternalModel, JitterMode, JitterSpec,
};
use crate::ga::{CrossoverKind, GaConfig, Selection, Termination};
use crate::model::{build_database, ModelParams, UnitaryDatabase, DEFAULT_SUBSTEPS};
use crate::sequence::{
    initial_sequence, populations, sequence_error, PulseSequence, TargetGate,
};

const VERSION_STRING: &str = concat!("sfq-control ", env!("CARGO_PKG_VERSION"));

/// Full run configuration in CLI units (GHz, ps, ns); converted to SI once.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub omega_ghz: f64,
    pub delta_ghz: f64,
    pub dtheta: f64,
    pub t_c_ps: f64,
    pub tau_ps: Option<f64>,
    pub levels: usize,
    pub ga: GaConfig,
    pub gate_ns: f64,
    pub pulses: Option<usize>,
    pub substeps: usize,
    pub target: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            omega_ghz: 5.0,
            delta_ghz: -0.2,
            dtheta: PI / 100.0,
            t_c_ps: 5.0,
            tau_ps: None,
            levels: 3,
            ga: GaConfig::default(),
            gate_ns: 20.0,
            pulses: None,
            substeps: DEFAULT_SUBSTEPS,
            target: "pauli_y".into(),
        }
    }
}

impl RunConfig {
    pub fn model_params(&self) -> ModelParams {
        let t_c = self.t_c_ps * 1e-12;
        ModelParams {
            omega: 2.0 * PI * self.omega_ghz * 1e9,
            delta: 2.0 * PI * self.delta_ghz * 1e9,
            dtheta: self.dtheta,
            t_c,
            tau: self.tau_ps.map_or(t_c / 3.0, |ps| ps * 1e-12),
            levels: self.levels,
        }
    }

    pub fn target_gate(&self, levels: usize) -> Result<TargetGate> {
        match self.target.as_str() {
            "pauli_y" => Ok(TargetGate::pauli_y(levels, 0.0)),
            other => Err(Error::InvalidConfig(format!(
                "unknown target gate '{other}' (supported: pauli_y)"
            ))),
        }
    }

    /// Validates everything before any computation starts.
    pub fn validate(&self) -> Result<()> {
        self.model_params().validate()?;
        self.ga.validate()?;
        if !(self.gate_ns.is_finite() && self.gate_ns > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "gate_ns must be positive, got {}",
                self.gate_ns
            )));
        }
        if self.substeps == 0 {
            return Err(Error::InvalidConfig("substeps must be >= 1".into()));
        }
        if self.pulses == Some(0) {
            return Err(Error::InvalidConfig("pulses must be >= 1".into()));
        }
        self.target_gate(self.levels).map(|_| ())
    }

    /// Parses the flat key=value format with [model]/[ga]/[run] sections.
    /// Every key is optional; omitted keys keep their defaults.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                section = name.trim().to_string();
                if !["model", "ga", "run"].contains(&section.as_str()) {
                    return Err(Error::Parse {
                        path: origin.into(),
                        msg: format!("unknown section '[{section}]' at line {}", lineno + 1),
                    });
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: origin.into(),
                msg: format!("expected key=value at line {}: '{line}'", lineno + 1),
            })?;
            let key = key.trim();
            let value = value.trim();
            cfg.apply(&section, key, value).map_err(|e| Error::Parse {
                path: origin.into(),
                msg: format!("line {}: {e}", lineno + 1),
            })?;
        }
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e| format!("{key}: {e}"))
        }
        match (section, key) {
            ("model", "omega_ghz") => self.omega_ghz = num(key, value)?,
            ("model", "delta_ghz") => self.delta_ghz = num(key, value)?,
            ("model", "dtheta") => self.dtheta = num(key, value)?,
            ("model", "t_c_ps") => self.t_c_ps = num(key, value)?,
            ("model", "tau_ps") => self.tau_ps = Some(num(key, value)?),
            ("model", "levels") => self.levels = num(key, value)?,
            ("ga", "population_size") => self.ga.population_size = num(key, value)?,
            ("ga", "mutation_prob") => self.ga.mutation_prob = num(key, value)?,
            ("ga", "crossover_prob") => self.ga.crossover_prob = num(key, value)?,
            ("ga", "mating_pool") => self.ga.mating_pool = num(key, value)?,
            ("ga", "max_iterations") => self.ga.max_iterations = num(key, value)?,
            ("ga", "target_fitness") => self.ga.target_fitness = num(key, value)?,
            ("ga", "elitism") => self.ga.elitism = num(key, value)?,
            ("ga", "seed") => self.ga.seed = num(key, value)?,
            ("ga", "selection") => {
                self.ga.selection = match value {
                    "roulette" => Selection::Roulette,
                    "tournament" => Selection::Tournament,
                    other => return Err(format!("selection: unknown scheme '{other}'")),
                }
            }
            ("ga", "crossover") => {
                self.ga.crossover = match value {
                    "single_point" => CrossoverKind::SinglePoint,
                    "uniform" => CrossoverKind::Uniform,
                    other => return Err(format!("crossover: unknown kind '{other}'")),
                }
            }
            ("run", "gate_ns") => self.gate_ns = num(key, value)?,
            ("run", "pulses") => self.pulses = Some(num(key, value)?),
            ("run", "substeps") => self.substeps = num(key, value)?,
            ("run", "target") => self.target = value.to_string(),
            _ => return Err(format!("unknown key '{key}' in section '[{section}]'")),
        }
        Ok(())
    }

    /// Echoes the configuration as a valid config file; reparsing it yields
    /// exactly this configuration (shortest round-trip float formatting).
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "omega_ghz={}", self.omega_ghz);
        let _ = writeln!(s, "delta_ghz={}", self.delta_ghz);
        let _ = writeln!(s, "dtheta={}", self.dtheta);
        let _ = writeln!(s, "t_c_ps={}", self.t_c_ps);
        if let Some(tau) = self.tau_ps {
            let _ = writeln!(s, "tau_ps={tau}");
        }
        let _ = writeln!(s, "levels={}", self.levels);
        let _ = writeln!(s, "[ga]");
        let _ = writeln!(s, "population_size={}", self.ga.population_size);
        let _ = writeln!(s, "mutation_prob={}", self.ga.mutation_prob);
        let _ = writeln!(s, "crossover_prob={}", self.ga.crossover_prob);
        let _ = writeln!(s, "mating_pool={}", self.ga.mating_pool);
        let _ = writeln!(s, "max_iterations={}", self.ga.max_iterations);
        let _ = writeln!(s, "target_fitness={}", self.ga.target_fitness);
        let _ = writeln!(s, "elitism={}", self.ga.elitism);
        let _ = writeln!(s, "seed={}", self.ga.seed);
        let _ = writeln!(
            s,
            "selection={}",
            match self.ga.selection {
                Selection::Roulette => "roulette",
                Selection::Tournament => "tournament",
            }
        );
        let _ = writeln!(
            s,
            "crossover={}",
            match self.ga.crossover {
                CrossoverKind::SinglePoint => "single_point",
                CrossoverKind::Uniform => "uniform",
            }
        );
        let _ = writeln!(s, "[run]");
        let _ = writeln!(s, "gate_ns={}", self.gate_ns);
        if let Some(p) = self.pulses {
            let _ = writeln!(s, "pulses={p}");
        }
        let _ = writeln!(s, "substeps={}", self.substeps);
        let _ = writeln!(s, "target={}", self.target);
        s
    }

    pub fn config_hash(&self) -> String {
        format!("{:016x}", fnv1a(self.echo().as_bytes()))
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

#[derive(Parser, Debug)]
#[command(
    name = "sfqctl",
    version,
    about = "Digital qubit control with SFQ pulse trains: build the unitary database, evolve and optimize bit-string sequences, sweep gate times, study clock jitter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file (key=value with [model], [ga], [run] sections)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Unitary-database file (loaded if present, otherwise built and cached)
    #[arg(long, global = true)]
    db: Option<PathBuf>,

    /// Pulse-sequence file
    #[arg(long, global = true)]
    seq: Option<PathBuf>,

    /// Output directory (default: current directory)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// RNG seed, overriding the config file
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: machine parallelism)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the two-entry unitary database and write it to --db
    GenDb,
    /// Write the evenly spaced seed sequence to --seq
    InitSeq {
        /// Number of pulses (default: ceil(pi / dtheta))
        #[arg(long)]
        pulses: Option<usize>,
    },
    /// Print the gate error of a sequence and write population CSVs
    Simulate,
    /// Optimize the pulse sequence; writes history.csv, best.seq, run.meta
    Optimize,
    /// One GA run per gate time (ns); writes qsl.csv
    SweepQsl {
        /// Comma-separated gate times in ns, e.g. 6,8,12,16,20
        #[arg(long, value_delimiter = ',', required = true)]
        gates: Vec<f64>,
    },
    /// Monte-Carlo jitter robustness of a sequence; writes jitter.csv
    Jitter {
        /// Comma-separated jitter standard deviations in ps
        #[arg(long = "sigmas-ps", value_delimiter = ',', required = true)]
        sigmas_ps: Vec<f64>,
        /// Clock model: external (constant variance) or internal (growing)
        #[arg(long, default_value = "external")]
        mode: String,
        /// Monte-Carlo runs per sigma
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        /// Internal-clock realization: independent or random_walk
        #[arg(long = "internal-model", default_value = "independent")]
        internal_model: String,
    },
}

/// Parses the process arguments and executes; returns the exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(cli: Cli) -> Result<i32> {
    if let Some(threads) = cli.threads {
        // ignore the error if a global pool already exists (e.g. in tests)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            RunConfig::parse(&text, &path.display().to_string())?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.ga.seed = seed;
    }
    cfg.validate()?;

    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;

    match &cli.command {
        Command::GenDb => cmd_gen_db(&cfg, &cli, &out_dir),
        Command::InitSeq { pulses } => cmd_init_seq(&cfg, &cli, &out_dir, *pulses),
        Command::Simulate => cmd_simulate(&cfg, &cli, &out_dir),
        Command::Optimize => cmd_optimize(&cfg, &cli, &out_dir),
        Command::SweepQsl { gates } => cmd_sweep(&cfg, &cli, &out_dir, gates),
        Command::Jitter {
            sigmas_ps,
            mode,
            runs,
            internal_model,
        } => cmd_jitter(&cfg, &cli, &out_dir, sigmas_ps, mode, *runs, internal_model),
    }
}

fn db_path(cli: &Cli, out_dir: &Path) -> PathBuf {
    cli.db
        .clone()
        .unwrap_or_else(|| out_dir.join("database.txt"))
}

/// Loads the database if the file exists; otherwise builds it from the
/// config and caches it at the same path. A loaded database must carry the
/// configured physics.
fn load_or_build_db(cfg: &RunConfig, path: &Path) -> Result<UnitaryDatabase> {
    if path.exists() {
        let db = UnitaryDatabase::load(path)?;
        let want = cfg.model_params();
        let have = db.params();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1e-300);
        let matches = have.levels == want.levels
            && close(have.omega, want.omega)
            && close(have.delta, want.delta)
            && close(have.dtheta, want.dtheta)
            && close(have.t_c, want.t_c)
            && close(have.tau, want.tau);
        if !matches {
            return Err(Error::InvalidConfig(format!(
                "database {} was built for different model parameters; regenerate it with gen-db",
                path.display()
            )));
        }
        Ok(db)
    } else {
        let db = build_database(&cfg.model_params(), cfg.substeps)?;
        db.save(path)?;
        Ok(db)
    }
}

fn cmd_gen_db(cfg: &RunConfig, cli: &Cli, out_dir: &Path) -> Result<i32> {
    let path = db_path(cli, out_dir);
    let db = build_database(&cfg.model_params(), cfg.substeps)?;
    db.save(&path)?;
    println!(
        "database written to {} ({} levels, {} substeps)",
        path.display(),
        db.dim(),
        db.substeps()
    );
    Ok(0)
}

fn cmd_init_seq(cfg: &RunConfig, cli: &Cli, out_dir: &Path, pulses: Option<usize>) -> Result<i32> {
    let params = cfg.model_params();
    let n = pulses
        .or(cfg.pulses)
        .unwrap_or_else(|| params.min_pulses());
    if n == 0 {
        return Err(Error::InvalidConfig("pulses must be >= 1".into()));
    }
    let seq = initial_sequence(&params, n)?;
    let path = cli
        .seq
        .clone()
        .unwrap_or_else(|| out_dir.join("initial.seq"));
    seq.save(&path)?;
    println!(
        "seed sequence written to {} ({} pulses, {} pixels, {} ns)",
        path.display(),
        seq.pulse_count(),
        seq.len(),
        seq.gate_time() * 1e9
    );
    Ok(0)
}

fn load_sequence(cfg: &RunConfig, cli: &Cli) -> Result<PulseSequence> {
    let path = cli
        .seq
        .as_ref()
        .ok_or_else(|| Error::InvalidConfig("this command requires --seq <path>".into()))?;
    let seq = PulseSequence::load(path)?;
    let pixel = cfg.model_params().pixel();
    if ((seq.pixel() - pixel) / pixel).abs() > 1e-6 {
        return Err(Error::InvalidConfig(format!(
            "sequence pixel {:.6e} s does not match the model pixel {:.6e} s",
            seq.pixel(),
            pixel
        )));
    }
    Ok(seq)
}

fn cmd_simulate(cfg: &RunConfig, cli: &Cli, out_dir: &Path) -> Result<i32> {
    let seq = load_sequence(cfg, cli)?;
    let db = load_or_build_db(cfg, &db_path(cli, out_dir))?;
    let target = cfg.target_gate(db.dim())?;

    let error = sequence_error(&seq, &db, &target)?;
    println!("gate_error = {error:.5e}");

    for (level, name) in [(0usize, "ground"), (1usize, "excited")] {
        let rows = populations(&seq, &db, level);
        let path = out_dir.join(format!("populations_{name}.csv"));
        write_populations_csv(&path, &rows, seq.pixel())?;
    }
    println!(
        "populations written to {} and {}",
        out_dir.join("populations_ground.csv").display(),
        out_dir.join("populations_excited.csv").display()
    );
    Ok(0)
}

fn write_populations_csv(path: &Path, rows: &[Vec<f64>], pixel: f64) -> Result<()> {
    let dim = rows.first().map_or(0, Vec::len);
    let mut body = String::from("pixel,time_ns");
    for k in 0..dim {
        let _ = write!(body, ",p{k}");
    }
    body.push('\n');
    let pixel_ps = pixel * 1e12;
    for (i, row) in rows.iter().enumerate() {
        let time_ns = i as f64 * pixel_ps / 1000.0;
        let _ = write!(body, "{i},{time_ns}");
        for p in row {
            let _ = write!(body, ",{p:.12e}");
        }
        body.push('\n');
    }
    std::fs::write(path, body)?;
    Ok(())
}

fn cmd_optimize(cfg: &RunConfig, cli: &Cli, out_dir: &Path) -> Result<i32> {
    let started = Instant::now();
    let params = cfg.model_params();
    let db = load_or_build_db(cfg, &db_path(cli, out_dir))?;
    let pixels = pixel_count(cfg.gate_ns * 1e-9, params.pixel())?;

    let run = crate::experiments::optimize_gate_time(pixels, &params, &db, &cfg.ga)?;
    let best_error = 1.0 - run.best_fitness;

    let mut history = String::from("generation,best_error,mean_error\n");
    for row in &run.history {
        let _ = writeln!(
            history,
            "{},{:.12e},{:.12e}",
            row.generation,
            1.0 - row.best_fitness,
            1.0 - row.mean_fitness
        );
    }
    std::fs::write(out_dir.join("history.csv"), history)?;
    run.best_genome.save(&out_dir.join("best.seq"))?;

    let mut meta = String::new();
    let _ = writeln!(meta, "version={VERSION_STRING}");
    let _ = writeln!(meta, "command=optimize");
    let _ = writeln!(meta, "seed={}", cfg.ga.seed);
    let _ = writeln!(meta, "config_hash={}", cfg.config_hash());
    let _ = writeln!(meta, "wall_time_s={:.3}", started.elapsed().as_secs_f64());
    let _ = writeln!(meta, "terminated_by={}", run.terminated_by.as_str());
    let _ = writeln!(meta, "best_error={best_error:.12e}");
    let _ = writeln!(meta, "generations={}", run.generations_used);
    let _ = writeln!(meta, "pulses={}", run.best_genome.pulse_count());
    meta.push_str(&cfg.echo());
    std::fs::write(out_dir.join("run.meta"), meta)?;

    println!(
        "best_error = {best_error:.5e} after {} generations ({}); {} pulses; artifacts in {}",
        run.generations_used,
        run.terminated_by.as_str(),
        run.best_genome.pulse_count(),
        out_dir.display()
    );
    Ok(match run.terminated_by {
        Termination::TargetReached => 0,
        Termination::MaxIterations => 3,
    })
}

fn cmd_sweep(cfg: &RunConfig, cli: &Cli, out_dir: &Path, gates_ns: &[f64]) -> Result<i32> {
    let params = cfg.model_params();
    let gate_times: Vec<f64> = gates_ns.iter().map(|ns| ns * 1e-9).collect();
    // validate the full list before any GA run starts
    for &t in &gate_times {
        pixel_count(t, params.pixel())?;
    }
    let db = load_or_build_db(cfg, &db_path(cli, out_dir))?;
    let result = speed_limit_sweep(&gate_times, &params, &db, &cfg.ga)?;

    let mut csv = String::from("gate_ns,pixels,best_error,generations\n");
    for (row, ns) in result.rows.iter().zip(gates_ns) {
        let _ = writeln!(
            csv,
            "{},{},{:.12e},{}",
            ns, row.pixels, row.best_error, row.generations
        );
        println!(
            "gate {ns} ns: best_error = {:.5e} after {} generations ({})",
            row.best_error,
            row.generations,
            row.terminated_by.as_str()
        );
    }
    std::fs::write(out_dir.join("qsl.csv"), csv)?;
    println!("sweep written to {}", out_dir.join("qsl.csv").display());
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_jitter(
    cfg: &RunConfig,
    cli: &Cli,
    out_dir: &Path,
    sigmas_ps: &[f64],
    mode: &str,
    runs: usize,
    internal_model: &str,
) -> Result<i32> {
    let mode = match mode {
        "external" => JitterMode::External,
        "internal" => JitterMode::Internal,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown jitter mode '{other}' (external or internal)"
            )))
        }
    };
    let internal_model = match internal_model {
        "independent" | "independent_sqrt_k" => InternalModel::IndependentSqrtK,
        "random_walk" => InternalModel::RandomWalk,
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown internal model '{other}' (independent or random_walk)"
            )))
        }
    };

    let seq = load_sequence(cfg, cli)?;
    let db = load_or_build_db(cfg, &db_path(cli, out_dir))?;
    let target = cfg.target_gate(db.dim())?;

    let mut csv = String::from("sigma_ps,mode,mean_error,std_error,runs\n");
    for &sigma_ps in sigmas_ps {
        let spec = JitterSpec {
            sigma: sigma_ps * 1e-12,
            mode,
            runs,
            seed: cfg.ga.seed,
            internal_model,
        };
        let (mean, std) = jitter_eval(&seq, &db, &target, &spec)?;
        let _ = writeln!(
            csv,
            "{},{},{:.12e},{:.12e},{}",
            sigma_ps,
            mode.as_str(),
            mean,
            std,
            runs
        );
        println!("sigma {sigma_ps} ps ({}): mean_error = {mean:.5e}, std = {std:.5e}", mode.as_str());
    }
    std::fs::write(out_dir.join("jitter.csv"), csv)?;
    println!("jitter study written to {}", out_dir.join("jitter.csv").display());
    Ok(0)
}
