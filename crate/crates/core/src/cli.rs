//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on a failed validation or runtime error,
//! 2 on a configuration or usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{self, ConfigFile};
use crate::constants::{self, DEFAULT_LATTICE_CONST, DEFAULT_PACKET_WIDTH, STANDARD_GRAVITY};
use crate::correlations::{self, oracle::FockOracle, FieldState, ModeBasis};
use crate::ensemble::{self, ExperimentConfig, Outputs};
use crate::error::Error;
use crate::lattice::{DistributionModel, LatticeConfig, ModelKind, Occupancy, SeedMode, Statistics};
use crate::wavepacket::{self, DetectionGrid, DoubleWellState, ExpansionParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "latticecorr", version, about = "Time-of-flight correlation diagnostics for atoms in 1D optical lattices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one ensemble experiment and write its reconstructions.
    Simulate(RunArgs),
    /// Run the random / bunched / anti-bunched / super-lattice comparison.
    Figure6(RunArgs),
    /// Synthesize double-well fringes and fit them back.
    Doublewell(DoubleWellArgs),
    /// Print the coincidence period and fringe-envelope width.
    Resolution(ResolutionArgs),
    /// Run the built-in consistency suites.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Experiment config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of runs.
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Args, Debug)]
struct DoubleWellArgs {
    /// Output directory for the synthesized density.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = config::DEFAULT_SPECIES)]
    species: String,
    /// Flight time in seconds.
    #[arg(long, default_value_t = config::DEFAULT_FLIGHT_TIME)]
    time: f64,
    /// Fringe contrast 2 c1 c2.
    #[arg(long, default_value_t = 1.0)]
    contrast: f64,
    /// Relative phase in radians.
    #[arg(long, default_value_t = 0.7)]
    phase: f64,
    /// Well separation in meters.
    #[arg(long, default_value_t = DEFAULT_LATTICE_CONST)]
    separation: f64,
    /// Packet width sigma' in meters.
    #[arg(long, default_value_t = DEFAULT_PACKET_WIDTH)]
    packet_width: f64,
}

#[derive(Args, Debug)]
struct ResolutionArgs {
    #[arg(long, default_value = config::DEFAULT_SPECIES)]
    species: String,
    /// Flight time in seconds.
    #[arg(long, default_value_t = config::DEFAULT_FLIGHT_TIME)]
    time: f64,
    /// Lattice constant w' in meters.
    #[arg(long, default_value_t = DEFAULT_LATTICE_CONST)]
    lattice_const: f64,
    /// Packet width sigma' in meters.
    #[arg(long, default_value_t = DEFAULT_PACKET_WIDTH)]
    packet_width: f64,
    /// Detection delay in seconds to convert to a detector offset.
    #[arg(long)]
    delay: Option<f64>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    /// Master seed of the Monte Carlo suites.
    #[arg(long, default_value_t = 2024)]
    seed: u64,
}

/// Parses `argv` (including the program name) and runs the command.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Figure6(args) => figure6(&args),
        Command::Doublewell(args) => doublewell(&args),
        Command::Resolution(args) => resolution(&args),
        Command::Validate(args) => validate(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. } | Error::InvalidConfig(_) | Error::Infeasible(_) => EXIT_CONFIG,
        _ => EXIT_FAILED,
    }
}

fn load_run_config(args: &RunArgs) -> Result<ConfigFile, Error> {
    let mut file = config::load(&args.config).map_err(|e| match e {
        Error::Config { line, message } => {
            Error::Config { line, message: format!("{}: {message}", args.config.display()) }
        }
        Error::Io(io) => Error::Config { line: 0, message: format!("{}: {io}", args.config.display()) },
        other => other,
    })?;
    if let Some(seed) = args.seed {
        file.experiment.master_seed = seed;
        file.seed_generated = false;
    }
    if let Some(runs) = args.runs {
        if runs == 0 {
            return Err(Error::InvalidConfig("--runs must be >= 1".into()));
        }
        file.experiment.runs = runs;
    }
    if file.seed_generated {
        eprintln!("no seed given; using master seed {}", file.experiment.master_seed);
    }
    Ok(file)
}

fn list_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn simulate(args: &RunArgs) -> Result<i32, Error> {
    let file = load_run_config(args)?;
    let config = &file.experiment;
    let start = Instant::now();
    let result = ensemble::run_experiment(config)?;
    let written = ensemble::write_experiment(&result, &args.out)?;
    println!(
        "{} model, N = {}, R = {}, {} runs, seed {} ({:.2} s)",
        config.model.kind.name(),
        config.lattice.n_sites,
        result.atom_count,
        config.runs,
        config.master_seed,
        start.elapsed().as_secs_f64()
    );
    let peak = argmax(&result.p1_recon);
    let u = result.diagnostics.uniformity;
    println!("p1_recon peak at site {peak}; uniformity p = {:.3e}", u.best_p_value());
    if let Some(p2) = &result.p2_recon {
        println!(
            "p2_recon mass at j <= 8: {:.4}; clipped mass {:.2e}",
            p2.iter().take(9).sum::<f64>(),
            result.diagnostics.p2_clip_mass
        );
    }
    list_written(&written);
    Ok(EXIT_OK)
}

fn figure6(args: &RunArgs) -> Result<i32, Error> {
    let file = load_run_config(args)?;
    let panels = ensemble::figure6_suite(&file.experiment, &file.figure6)?;
    let written = ensemble::write_figure6(&file.experiment, &file.figure6, &panels, &args.out)?;
    let baseline = ensemble::random_pair_baseline(file.experiment.lattice.n_sites);
    for panel in &panels {
        if let Some(p2) = &panel.result.p2_recon {
            let cmp = ensemble::compare_distributions(p2, &baseline)?;
            println!(
                "fig6{} {:<14} L1 distance from random baseline {:.4}",
                panel.panel,
                panel.kind.name(),
                cmp.l1
            );
        }
    }
    list_written(&written);
    Ok(EXIT_OK)
}

fn species_params(species: &str, time: f64) -> Result<ExpansionParams, Error> {
    let mass = constants::species_mass(species)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown species `{species}`")))?;
    ExpansionParams::new(mass, time)
}

fn doublewell(args: &DoubleWellArgs) -> Result<i32, Error> {
    let params = species_params(&args.species, args.time)?;
    let state = DoubleWellState::with_contrast(args.contrast, args.phase, args.separation, args.packet_width)?;
    let sigma = params.envelope_width(args.packet_width);
    let grid = DetectionGrid::symmetric(8.0 * sigma, 4001, params.l_squared)?;
    let density = wavepacket::double_well_density(&state, &params, &grid)?;
    let fit = wavepacket::extract_fringe_params(&density, &grid, &params, args.separation)?;
    println!("fringe spacing L^2/dxi = {:.4} mm, envelope sigma = {:.4} mm", params.fringe_spacing(args.separation) * 1e3, sigma * 1e3);
    println!("input  contrast {:.6}, phase {:.6}", state.contrast(), args.phase.rem_euclid(std::f64::consts::TAU));
    match fit.phase {
        Some(phase) => println!("fitted contrast {:.6}, phase {:.6}", fit.contrast, phase),
        None => println!("fitted contrast {:.6}, phase undefined", fit.contrast),
    }
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        let path = dir.join("doublewell.csv");
        let header = vec![
            format!("species = {} flight_time = {:?} l_squared = {:e}", args.species, args.time, params.l_squared),
            format!(
                "c1 = {:?} c2 = {:?} phi = {:?} well_separation = {:?} packet_width = {:?}",
                state.c1, state.c2, state.phi, state.well_separation, state.packet_width
            ),
            format!("fit contrast = {:?} phase = {:?}", fit.contrast, fit.phase),
        ];
        let mut out = BufWriter::new(File::create(&path)?);
        wavepacket::write_density_csv(&mut out, &header, &grid, &density)?;
        out.flush()?;
        println!("wrote {}", path.display());
    }
    let contrast_ok = (fit.contrast - state.contrast()).abs() < 1e-4;
    let phase_ok = match fit.phase {
        Some(p) => {
            let d = (p - args.phase).rem_euclid(std::f64::consts::TAU);
            d.min(std::f64::consts::TAU - d) < 1e-4
        }
        None => state.contrast() < 1e-8,
    };
    Ok(if contrast_ok && phase_ok { EXIT_OK } else { EXIT_FAILED })
}

fn resolution(args: &ResolutionArgs) -> Result<i32, Error> {
    let params = species_params(&args.species, args.time)?;
    let lattice = LatticeConfig::new(2, args.lattice_const, 0.0, Statistics::Boson)?;
    let r = wavepacket::resolution_figures(&lattice, args.packet_width, &params)?;
    println!("species {} (M = {:e} kg), t = {} s", args.species, params.mass, args.time);
    println!("L^2 = {:.4e} m^2", params.l_squared);
    println!("Λ = {:.1} mm, σ = {:.1} mm", r.coincidence_period * 1e3, r.envelope_width * 1e3);
    if let Some(dt) = args.delay {
        let dx = wavepacket::gravity_delay_map(args.time, STANDARD_GRAVITY, dt)?;
        println!("delay {dt:e} s -> detector offset {:.4} mm", dx * 1e3);
    }
    Ok(EXIT_OK)
}

fn argmax(v: &[f64]) -> usize {
    v.iter().enumerate().fold((0, f64::NEG_INFINITY), |best, (i, &x)| if x > best.1 { (i, x) } else { best }).0
}

/// Outcome of one validation suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn report(name: &'static str, passed: bool, detail: String) -> SuiteReport {
    SuiteReport { name, passed, detail }
}

/// Operator-oracle equivalence on every Fock state of 4, 5 and 6 modes.
pub fn validate_oracle() -> SuiteReport {
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for n in 4..=6usize {
        let basis = ModeBasis::dimensionless(n);
        for stats in [Statistics::Boson, Statistics::Fermion] {
            let oracle = match FockOracle::new(basis, stats) {
                Ok(o) => o,
                Err(e) => return report("oracle", false, e.to_string()),
            };
            for l in -(n as isize)..n as isize {
                let s = l as f64 * basis.delta_x2;
                let table = oracle.table(s);
                for m in 1..(1usize << n) {
                    let modes: Vec<usize> = (0..n).filter(|j| m & (1 << j) != 0).collect();
                    let state = FieldState::from_modes(n, &modes, stats).expect("valid modes");
                    let g1 = correlations::g1_of_state(&state, &basis, s).expect("non-empty");
                    worst = worst.max((g1 - table.g1[m].expect("non-empty")).norm());
                    if modes.len() >= 2 {
                        let g2 = correlations::g2_of_state(&state, &basis, s).expect("two atoms");
                        worst = worst.max((g2 - table.g2[m].expect("two atoms")).abs());
                    }
                    checked += 1;
                }
            }
        }
    }
    report("oracle", worst < 1e-10, format!("{checked} state/separation pairs, max deviation {worst:.2e}"))
}

/// p1 -> g1 -> p1 and p2 -> g2 -> p2 on random distributions at N = 256.
pub fn validate_transforms(seed: u64) -> SuiteReport {
    let n = 256;
    let basis = ModeBasis::dimensionless(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let mut p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let t: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= t);
        let back = correlations::g1_from_p1(&p, &basis).and_then(|g| correlations::p1_from_g1(&g));
        match back {
            Ok(b) => worst = worst.max(max_diff(&p, &b.p1)),
            Err(e) => return report("transforms", false, format!("p1 trial {trial}: {e}")),
        }
        let mut p2: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        p2[0] = 0.0;
        let t: f64 = p2.iter().sum();
        p2.iter_mut().for_each(|x| *x /= t);
        let back = correlations::g2_from_p2(&p2, 25, &basis, Statistics::Boson)
            .and_then(|g| correlations::p2_from_g2(&g, 25, Statistics::Boson));
        match back {
            Ok(b) => worst = worst.max(max_diff(&p2, &b.values)),
            Err(e) => return report("transforms", false, format!("p2 trial {trial}: {e}")),
        }
    }
    report("transforms", worst < 1e-12, format!("100 + 100 round trips at N = 256, max error {worst:.2e}"))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Gaussian-statistics relation for independently filled lattices.
///
/// For a single-occupancy Boson shot with R atoms, `g2 = 1 - 2/R + |g1|^2`
/// holds exactly at every separation. This suite checks that identity shot
/// by shot and reports the ensemble residual of `g2 = 1 + |g1|^2` for
/// reference.
pub fn validate_siegert(seed: u64) -> SuiteReport {
    let n = 64;
    let lattice = LatticeConfig::new(n, DEFAULT_LATTICE_CONST, 0.25, Statistics::Boson).expect("valid lattice");
    let model = DistributionModel::new(ModelKind::Random, 0.25);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut g1_sum = vec![Complex64::new(0.0, 0.0); n];
    let mut g2_sum = vec![0.0; 2 * n];
    let shots = 2000;
    let mut r = 0;
    for _ in 0..shots {
        let shot: Occupancy = match crate::lattice::sample_occupancy(&model, &lattice, &mut rng) {
            Ok(s) => s,
            Err(e) => return report("siegert", false, e.to_string()),
        };
        r = shot.atom_count();
        let profile = correlations::profile_of_state(&FieldState::from_occupancy(&shot, Statistics::Boson))
            .expect("non-empty shot");
        let g2 = profile.g2.as_ref().expect("R >= 2");
        let res = correlations::siegert_check(&profile.g1, g2).expect("matching grids");
        let offset = correlations::boson_siegert_offset(r);
        worst = worst.max(res.residual.iter().map(|x| (x - offset).abs()).fold(0.0, f64::max));
        g1_sum.iter_mut().zip(&profile.g1).for_each(|(a, b)| *a += b);
        g2_sum.iter_mut().zip(g2).for_each(|(a, b)| *a += b);
    }
    let g1_mean: Vec<Complex64> = g1_sum.iter().map(|z| z / shots as f64).collect();
    let g2_mean: Vec<f64> = g2_sum.iter().map(|x| x / shots as f64).collect();
    let ensemble = correlations::siegert_check(&g1_mean, &g2_mean).expect("matching grids").max_abs;
    report(
        "siegert",
        worst < 1e-10,
        format!(
            "{shots} shots, R = {r}: per-shot |residual + 2/R| <= {worst:.2e}; ensemble max |g2 - 1 - |g1|^2| = {ensemble:.3}"
        ),
    )
}

/// Fixed-seed versus random-seed bunching at reduced scale (N = 64, 200 runs).
pub fn validate_washout(seed: u64) -> SuiteReport {
    let lattice = LatticeConfig::new(64, DEFAULT_LATTICE_CONST, 0.1, Statistics::Boson).expect("valid lattice");
    let base = ExperimentConfig {
        lattice,
        model: DistributionModel::new(ModelKind::Random, 0.1),
        runs: 200,
        expansion: ExpansionParams::new(constants::CESIUM_MASS, 1.0).expect("valid expansion"),
        species: Some(config::DEFAULT_SPECIES.into()),
        packet_width: DEFAULT_PACKET_WIDTH,
        master_seed: seed,
        outputs: Outputs::default(),
    };
    let tau = 8.0 * DEFAULT_LATTICE_CONST;
    let fixed = base.with_model(ModelKind::Bunched { tau, seed_mode: SeedMode::Fixed(32) }, ensemble::derive_seed(seed, 0));
    let random = base.with_model(ModelKind::Bunched { tau, seed_mode: SeedMode::RandomUniform }, ensemble::derive_seed(seed, 1));
    let (fixed, random) = match (ensemble::run_experiment(&fixed), ensemble::run_experiment(&random)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return report("washout", false, e.to_string()),
    };
    let peak = argmax(&fixed.p1_recon);
    let p = random.diagnostics.uniformity.best_p_value();
    let cosine = match (&fixed.p2_recon, &random.p2_recon) {
        (Some(a), Some(b)) => ensemble::compare_distributions(a, b).map(|c| c.cosine_similarity).unwrap_or(f64::NAN),
        _ => f64::NAN,
    };
    let passed = peak.abs_diff(32) <= 2 && p > 0.01 && cosine >= 0.9;
    report(
        "washout",
        passed,
        format!("fixed-seed p1 peak at {peak}; random-seed uniformity p = {p:.3}; p2 cosine = {cosine:.4}"),
    )
}

/// Runs every suite, printing one line each.
pub fn validate_all(seed: u64) -> Vec<SuiteReport> {
    let suites: [&dyn Fn() -> SuiteReport; 4] = [
        &validate_oracle,
        &|| validate_transforms(seed),
        &|| validate_siegert(seed),
        &|| validate_washout(seed),
    ];
    suites
        .iter()
        .map(|suite| {
            let start = Instant::now();
            let r = suite();
            println!(
                "[{}] {:<10} {} ({:.2} s)",
                if r.passed { "PASS" } else { "FAIL" },
                r.name,
                r.detail,
                start.elapsed().as_secs_f64()
            );
            r
        })
        .collect()
}

fn validate(args: &ValidateArgs) -> Result<i32, Error> {
    let reports = validate_all(args.seed);
    Ok(if reports.iter().all(|r| r.passed) { EXIT_OK } else { EXIT_FAILED })
}

/// Runs the CLI with arguments given as strings; convenience for tests and
/// examples.
pub fn run_args(args: &[&str]) -> i32 {
    run(std::iter::once("latticecorr").chain(args.iter().copied()))
}
