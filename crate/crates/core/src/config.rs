//! Experiment files.
//!
//! A config is TOML with up to five sections; only `[lattice]` and `[model]` are
//! required:
//!
//! ```toml
//! [lattice]
//! n_sites = 256
//! lattice_const = 5e-7      # m, default 0.5 um
//! fill_factor = 0.1
//! statistics = "boson"      # or "fermion"
//!
//! [model]
//! kind = "bunched"          # random | bunched | anti_bunched | super_lattice
//! tau = 4e-6                # bunched: kernel width in m, default 8 w'
//! seed_mode = "fixed"       # bunched: fixed | random
//! seed_site = 128           # bunched, fixed mode: default N/2
//! # min_gap = 5             # anti_bunched: default N/(2R), at least 2
//! # period = 4              # super_lattice
//! # envelope_width = 3.2e-5 # super_lattice: m, default N/4 sites
//!
//! [expansion]
//! species = "cesium"        # or give `mass` in kg
//! flight_time = 1.0         # s
//! packet_width = 3e-8       # m
//!
//! [run]
//! runs = 500
//! seed = 12345              # drawn from the OS when absent
//! outputs = ["p1_recon", "p2_recon", "ground_truth"]  # also "raw_profiles"
//!
//! [figure6]                 # optional overrides for the four-model suite
//! bunched_tau = 4e-6
//! min_gap = 5
//! period = 4
//! envelope_width = 3.2e-5
//! ```
//!
//! Unknown keys, keys that do not apply to the chosen model, and invalid
//! values are rejected with the offending key and line.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::constants::{self, DEFAULT_LATTICE_CONST, DEFAULT_PACKET_WIDTH};
use crate::ensemble::{ExperimentConfig, Figure6Params, Outputs};
use crate::error::{Error, Result};
use crate::lattice::{atoms_for_fill, DistributionModel, LatticeConfig, ModelKind, SeedMode, Statistics};
use crate::wavepacket::ExpansionParams;

pub const DEFAULT_RUNS: usize = 500;
pub const DEFAULT_SPECIES: &str = "cesium";
pub const DEFAULT_FLIGHT_TIME: f64 = 1.0;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    lattice: RawLattice,
    model: RawModel,
    expansion: Option<RawExpansion>,
    run: Option<RawRun>,
    figure6: Option<RawFigure6>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLattice {
    n_sites: i64,
    lattice_const: Option<f64>,
    fill_factor: f64,
    statistics: Option<Statistics>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: String,
    tau: Option<f64>,
    seed_mode: Option<String>,
    seed_site: Option<i64>,
    min_gap: Option<i64>,
    period: Option<i64>,
    envelope_width: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExpansion {
    species: Option<String>,
    mass: Option<f64>,
    flight_time: Option<f64>,
    packet_width: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    runs: Option<i64>,
    seed: Option<i64>,
    outputs: Option<Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFigure6 {
    bunched_tau: Option<f64>,
    min_gap: Option<i64>,
    period: Option<i64>,
    envelope_width: Option<f64>,
}

/// A parsed config file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigFile {
    pub experiment: ExperimentConfig,
    pub figure6: Figure6Params,
    /// True when no seed was given and one was drawn from the OS.
    pub seed_generated: bool,
}

/// Reads and validates an experiment config.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    Ok(load(path)?.experiment)
}

pub fn load(path: impl AsRef<Path>) -> Result<ConfigFile> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_str(&text)
}

/// Line (1-based) of `key = ...` inside `[section]`, or of the section
/// header when the key is absent.
fn locate(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    let mut header_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = name.trim().to_string();
            if current == section {
                header_line = i + 1;
            }
            continue;
        }
        if current == section {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return i + 1;
                }
            }
        }
    }
    header_line
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

struct Ctx<'a> {
    text: &'a str,
}

impl Ctx<'_> {
    fn err(&self, section: &str, key: &str, message: impl Into<String>) -> Error {
        Error::Config { line: locate(self.text, section, key), message: message.into() }
    }

    fn count(&self, section: &str, key: &str, value: i64, min: i64) -> Result<usize> {
        if value < min {
            return Err(self.err(section, key, format!("{key} must be >= {min} (got {value})")));
        }
        Ok(value as usize)
    }

    fn positive(&self, section: &str, key: &str, value: f64) -> Result<f64> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(self.err(section, key, format!("{key} must be a positive number (got {value})")));
        }
        Ok(value)
    }
}

/// Parses config text. See the module documentation for the schema.
pub fn parse_str(text: &str) -> Result<ConfigFile> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Config {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    let ctx = Ctx { text };

    let l = &raw.lattice;
    let n = ctx.count("lattice", "n_sites", l.n_sites, 2)?;
    let lattice_const = ctx.positive("lattice", "lattice_const", l.lattice_const.unwrap_or(DEFAULT_LATTICE_CONST))?;
    if !(0.0..=1.0).contains(&l.fill_factor) {
        return Err(ctx.err("lattice", "fill_factor", format!("fill_factor out of range [0, 1] (got {})", l.fill_factor)));
    }
    let lattice = LatticeConfig::new(n, lattice_const, l.fill_factor, l.statistics.unwrap_or_default())
        .map_err(|e| ctx.err("lattice", "n_sites", e.to_string()))?;
    let atoms = atoms_for_fill(l.fill_factor, n);
    let defaults = Figure6Params::for_lattice(&lattice, atoms);

    let kind = parse_model(&ctx, &raw.model, &lattice, &defaults)?;
    let model = DistributionModel::new(kind, l.fill_factor);
    model.validate(&lattice).map_err(|e| ctx.err("model", "kind", e.to_string()))?;

    let (expansion, species, packet_width) = parse_expansion(&ctx, raw.expansion.as_ref())?;

    let run = raw.run.as_ref();
    let runs = match run.and_then(|r| r.runs) {
        Some(v) => ctx.count("run", "runs", v, 1)?,
        None => DEFAULT_RUNS,
    };
    let (master_seed, seed_generated) = match run.and_then(|r| r.seed) {
        Some(s) if s < 0 => return Err(ctx.err("run", "seed", format!("seed must be non-negative (got {s})"))),
        Some(s) => (s as u64, false),
        None => (entropy_seed(), true),
    };
    let outputs = match run.and_then(|r| r.outputs.as_ref()) {
        None => Outputs::default(),
        Some(list) => {
            let mut o = Outputs { p1_recon: false, p2_recon: false, raw_profiles: false, ground_truth: false };
            for item in list {
                match item.as_str() {
                    "p1_recon" => o.p1_recon = true,
                    "p2_recon" => o.p2_recon = true,
                    "raw_profiles" => o.raw_profiles = true,
                    "ground_truth" => o.ground_truth = true,
                    other => return Err(ctx.err("run", "outputs", format!("unknown output `{other}`"))),
                }
            }
            o
        }
    };

    let figure6 = match &raw.figure6 {
        None => defaults,
        Some(f) => Figure6Params {
            bunched_tau: match f.bunched_tau {
                Some(v) => ctx.positive("figure6", "bunched_tau", v)?,
                None => defaults.bunched_tau,
            },
            min_gap: match f.min_gap {
                Some(v) => ctx.count("figure6", "min_gap", v, 1)?,
                None => defaults.min_gap,
            },
            period: match f.period {
                Some(v) => ctx.count("figure6", "period", v, 2)?,
                None => defaults.period,
            },
            envelope_width: match f.envelope_width {
                Some(v) => ctx.positive("figure6", "envelope_width", v)?,
                None => defaults.envelope_width,
            },
        },
    };

    let experiment = ExperimentConfig {
        lattice,
        model,
        runs,
        expansion,
        species,
        packet_width,
        master_seed,
        outputs,
    };
    Ok(ConfigFile { experiment, figure6, seed_generated })
}

fn parse_model(ctx: &Ctx, m: &RawModel, lattice: &LatticeConfig, defaults: &Figure6Params) -> Result<ModelKind> {
    let present: [(&str, bool); 6] = [
        ("tau", m.tau.is_some()),
        ("seed_mode", m.seed_mode.is_some()),
        ("seed_site", m.seed_site.is_some()),
        ("min_gap", m.min_gap.is_some()),
        ("period", m.period.is_some()),
        ("envelope_width", m.envelope_width.is_some()),
    ];
    let allowed: &[&str] = match m.kind.as_str() {
        "random" => &[],
        "bunched" => &["tau", "seed_mode", "seed_site"],
        "anti_bunched" => &["min_gap"],
        "super_lattice" => &["period", "envelope_width"],
        other => {
            return Err(ctx.err(
                "model",
                "kind",
                format!("unknown model kind `{other}` (expected random, bunched, anti_bunched or super_lattice)"),
            ))
        }
    };
    if let Some((key, _)) = present.iter().find(|(k, p)| *p && !allowed.contains(k)) {
        return Err(ctx.err("model", key, format!("key `{key}` does not apply to model kind `{}`", m.kind)));
    }
    Ok(match m.kind.as_str() {
        "random" => ModelKind::Random,
        "bunched" => {
            let tau = match m.tau {
                Some(t) => ctx.positive("model", "tau", t)?,
                None => defaults.bunched_tau,
            };
            let seed_mode = match m.seed_mode.as_deref().unwrap_or("fixed") {
                "fixed" => {
                    let site = match m.seed_site {
                        Some(s) => ctx.count("model", "seed_site", s, 0)?,
                        None => lattice.n_sites / 2,
                    };
                    if site >= lattice.n_sites {
                        return Err(ctx.err("model", "seed_site", format!("seed_site {site} outside lattice of {}", lattice.n_sites)));
                    }
                    SeedMode::Fixed(site)
                }
                "random" => {
                    if m.seed_site.is_some() {
                        return Err(ctx.err("model", "seed_site", "seed_site requires seed_mode = \"fixed\""));
                    }
                    SeedMode::RandomUniform
                }
                other => return Err(ctx.err("model", "seed_mode", format!("unknown seed_mode `{other}` (expected fixed or random)"))),
            };
            ModelKind::Bunched { tau, seed_mode }
        }
        "anti_bunched" => ModelKind::AntiBunched {
            min_gap: match m.min_gap {
                Some(g) => ctx.count("model", "min_gap", g, 1)?,
                None => defaults.min_gap,
            },
        },
        _ => ModelKind::SuperLattice {
            period: match m.period {
                Some(p) => ctx.count("model", "period", p, 2)?,
                None => defaults.period,
            },
            envelope_width: match m.envelope_width {
                Some(w) => ctx.positive("model", "envelope_width", w)?,
                None => defaults.envelope_width,
            },
        },
    })
}

fn parse_expansion(ctx: &Ctx, e: Option<&RawExpansion>) -> Result<(ExpansionParams, Option<String>, f64)> {
    let species = e.and_then(|e| e.species.clone());
    let mass = e.and_then(|e| e.mass);
    let (mass, species) = match (species, mass) {
        (Some(_), Some(_)) => return Err(ctx.err("expansion", "mass", "give either species or mass, not both")),
        (None, Some(m)) => (ctx.positive("expansion", "mass", m)?, None),
        (s, None) => {
            let name = s.unwrap_or_else(|| DEFAULT_SPECIES.to_string());
            let mass = constants::species_mass(&name)
                .ok_or_else(|| ctx.err("expansion", "species", format!("unknown species `{name}`")))?;
            (mass, Some(name))
        }
    };
    let flight_time = ctx.positive("expansion", "flight_time", e.and_then(|e| e.flight_time).unwrap_or(DEFAULT_FLIGHT_TIME))?;
    let packet_width = ctx.positive("expansion", "packet_width", e.and_then(|e| e.packet_width).unwrap_or(DEFAULT_PACKET_WIDTH))?;
    Ok((ExpansionParams::new(mass, flight_time)?, species, packet_width))
}

/// Seed drawn from the OS, kept below 2^63 so it fits a TOML integer.
pub fn entropy_seed() -> u64 {
    rand::random::<u64>() >> 1
}

/// Renders a fully resolved config in the file syntax; parsing the output
/// reproduces `config`.
pub fn render(config: &ExperimentConfig) -> String {
    let mut s = String::new();
    let l = &config.lattice;
    let stats = match l.statistics {
        Statistics::Boson => "boson",
        Statistics::Fermion => "fermion",
    };
    let _ = writeln!(s, "[lattice]");
    let _ = writeln!(s, "n_sites = {}", l.n_sites);
    let _ = writeln!(s, "lattice_const = {:?}", l.lattice_const);
    let _ = writeln!(s, "fill_factor = {:?}", l.fill_factor);
    let _ = writeln!(s, "statistics = \"{stats}\"");
    let _ = writeln!(s, "[model]");
    let _ = writeln!(s, "kind = \"{}\"", config.model.kind.name());
    match config.model.kind {
        ModelKind::Random => {}
        ModelKind::Bunched { tau, seed_mode } => {
            let _ = writeln!(s, "tau = {tau:?}");
            match seed_mode {
                SeedMode::Fixed(site) => {
                    let _ = writeln!(s, "seed_mode = \"fixed\"\nseed_site = {site}");
                }
                SeedMode::RandomUniform => {
                    let _ = writeln!(s, "seed_mode = \"random\"");
                }
            }
        }
        ModelKind::AntiBunched { min_gap } => {
            let _ = writeln!(s, "min_gap = {min_gap}");
        }
        ModelKind::SuperLattice { period, envelope_width } => {
            let _ = writeln!(s, "period = {period}\nenvelope_width = {envelope_width:?}");
        }
    }
    let _ = writeln!(s, "[expansion]");
    match &config.species {
        Some(name) => {
            let _ = writeln!(s, "species = \"{name}\"");
        }
        None => {
            let _ = writeln!(s, "mass = {:?}", config.expansion.mass);
        }
    }
    let _ = writeln!(s, "flight_time = {:?}", config.expansion.flight_time);
    let _ = writeln!(s, "packet_width = {:?}", config.packet_width);
    let _ = writeln!(s, "[run]");
    let _ = writeln!(s, "runs = {}", config.runs);
    let _ = writeln!(s, "seed = {}", config.master_seed);
    let o = config.outputs;
    let names: Vec<String> = [
        (o.p1_recon, "p1_recon"),
        (o.p2_recon, "p2_recon"),
        (o.raw_profiles, "raw_profiles"),
        (o.ground_truth, "ground_truth"),
    ]
    .iter()
    .filter(|(on, _)| *on)
    .map(|(_, n)| format!("\"{n}\""))
    .collect();
    let _ = writeln!(s, "outputs = [{}]", names.join(", "));
    s
}
