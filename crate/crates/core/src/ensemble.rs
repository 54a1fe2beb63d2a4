//! Monte Carlo time-of-flight experiments: draw shots, average the per-shot
//! correlation profiles, invert them and compare with the ground truth.
//!
//! Shots are processed in fixed-size batches. Each run index `r` draws from
//! its own ChaCha stream `(master_seed, r)`, batches are reduced in index
//! order, and all floating-point accumulation is compensated, so a result
//! is bit-identical for any thread count.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::config;
use crate::correlations::{self, CorrelationProfile, FieldState, ModeBasis};
use crate::error::{Error, Result};
use crate::lattice::{
    self, ArchiveHeader, DistributionModel, LatticeConfig, ModelKind, Occupancy, ProbabilityVectors, SeedMode,
};
use crate::stats::{ComplexMoments, VectorMoments};
use crate::wavepacket::ExpansionParams;

const BATCH: usize = 64;
/// Batches evaluated concurrently before being folded into the total.
const WAVE: usize = 16;
/// Largest lattice for which the site co-occurrence matrix is accumulated.
const MAX_COOCCURRENCE_SITES: usize = 1024;

/// Which optional products an experiment writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outputs {
    pub p1_recon: bool,
    pub p2_recon: bool,
    /// Keep every shot so per-shot profiles can be regenerated.
    pub raw_profiles: bool,
    pub ground_truth: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Self { p1_recon: true, p2_recon: true, raw_profiles: false, ground_truth: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub lattice: LatticeConfig,
    pub model: DistributionModel,
    pub runs: usize,
    pub expansion: ExpansionParams,
    /// Species name the mass was taken from, if any.
    pub species: Option<String>,
    /// Local packet width sigma', m.
    pub packet_width: f64,
    pub master_seed: u64,
    pub outputs: Outputs,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be >= 1".into()));
        }
        self.lattice.validate()?;
        self.model.validate(&self.lattice)?;
        self.expansion.validate()?;
        if !(self.packet_width > 0.0) {
            return Err(Error::InvalidConfig("packet_width must be positive".into()));
        }
        Ok(())
    }

    pub fn atom_count(&self) -> usize {
        self.model.atoms_for(self.lattice.n_sites)
    }

    pub fn basis(&self) -> Result<ModeBasis> {
        ModeBasis::new(self.lattice.n_sites, self.lattice.lattice_const, self.expansion.l_squared)
    }

    /// Copy with a different model and master seed.
    pub fn with_model(&self, kind: ModelKind, master_seed: u64) -> Self {
        Self { model: DistributionModel::new(kind, self.model.target_fill), master_seed, ..self.clone() }
    }
}

/// The random stream of run `run`.
pub fn run_stream(master_seed: u64, run: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run as u64);
    rng
}

/// Regenerates the shot of run `run`.
pub fn shot_for_run(config: &ExperimentConfig, run: usize) -> Result<Occupancy> {
    lattice::sample_occupancy(&config.model, &config.lattice, &mut run_stream(config.master_seed, run))
}

/// SplitMix64 step, used to derive independent master seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Pearson test of a reconstructed `p1` against the uniform distribution.
///
/// Sites of one shot are not independent (the atom count is fixed and the
/// models correlate neighbors), so the plain chi-square reference is
/// miscalibrated. The corrected p-value rescales the statistic with the
/// first two moments of the shot-to-shot occupancy covariance
/// (Satterthwaite): `X^2 / a ~ chi^2(nu)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityTest {
    pub statistic: f64,
    pub dof: f64,
    pub p_value_naive: f64,
    /// Scale `a` and degrees of freedom `nu` of the corrected reference.
    pub scale: Option<f64>,
    pub effective_dof: Option<f64>,
    pub p_value: Option<f64>,
}

impl UniformityTest {
    /// Corrected p-value when available, otherwise the naive one.
    pub fn best_p_value(&self) -> f64 {
        self.p_value.unwrap_or(self.p_value_naive)
    }
}

fn chi2_sf(x: f64, dof: f64) -> f64 {
    match ChiSquared::new(dof) {
        Ok(d) => 1.0 - d.cdf(x),
        Err(_) => f64::NAN,
    }
}

/// `p1` is a distribution over sites reconstructed from `runs` shots of
/// `atoms` atoms; `cooccurrence[i * n + k]` counts shots with both `i` and
/// `k` occupied.
pub fn uniformity_test(p1: &[f64], runs: usize, atoms: usize, cooccurrence: Option<&[u64]>) -> UniformityTest {
    let n = p1.len();
    let total = (runs * atoms) as f64;
    let expected = total / n as f64;
    let statistic: f64 = p1.iter().map(|p| (p * total - expected).powi(2) / expected).sum();
    let dof = (n - 1) as f64;
    let p_value_naive = chi2_sf(statistic, dof);

    let corrected = cooccurrence.filter(|_| runs >= 3).and_then(|co| {
        let m = runs as f64;
        let mean: Vec<f64> = (0..n).map(|i| co[i * n + i] as f64 / m).collect();
        let cov = |i: usize, k: usize| (co[i * n + k] as f64 - m * mean[i] * mean[k]) / (m - 1.0);
        let factor = n as f64 / atoms as f64;
        let trace: f64 = (0..n).map(|i| factor * cov(i, i)).sum();
        let mut trace_sq = 0.0;
        for i in 0..n {
            for k in 0..n {
                trace_sq += (factor * cov(i, k)).powi(2);
            }
        }
        // The plug-in tr(S^2) is biased upward by sampling noise in the
        // off-diagonal entries; use the unbiased estimator under normality.
        let trace_sq = (m - 1.0).powi(2) / ((m - 2.0) * (m + 1.0)) * (trace_sq - trace * trace / (m - 1.0));
        (trace > 0.0 && trace_sq > 0.0).then(|| {
            let scale = trace_sq / trace;
            let nu = trace * trace / trace_sq;
            (scale, nu, chi2_sf(statistic / scale, nu))
        })
    });
    UniformityTest {
        statistic,
        dof,
        p_value_naive,
        scale: corrected.map(|c| c.0),
        effective_dof: corrected.map(|c| c.1),
        p_value: corrected.map(|c| c.2),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Largest imaginary component discarded when inverting the mean g1.
    pub p1_imag_residue: f64,
    /// Total negative mass set to zero in the reconstructions.
    pub p1_clip_mass: f64,
    pub p2_clip_mass: f64,
    /// Reconstructed weight at zero separation before clipping.
    pub p2_self_pair: f64,
    pub uniformity: UniformityTest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub atom_count: usize,
    pub basis: ModeBasis,
    /// Mean g1 on the g1 grid with standard errors of its real and
    /// imaginary parts (packed as `re + i im`).
    pub mean_g1: Vec<Complex64>,
    pub g1_stderr: Vec<Complex64>,
    /// Mean g2 on the g2 grid (`l = -N..N`); absent for single-atom shots.
    pub mean_g2: Option<Vec<f64>>,
    pub g2_stderr: Option<Vec<f64>>,
    /// Reconstructed site distribution (sums to one).
    pub p1_recon: Vec<f64>,
    pub p1_recon_stderr: Vec<f64>,
    pub p2_recon: Option<Vec<f64>>,
    pub p2_recon_stderr: Option<Vec<f64>>,
    /// Per-site occupation probability over the same shots (sums to R).
    pub p1_truth: Vec<f64>,
    pub p2_truth: Option<Vec<f64>>,
    pub diagnostics: Diagnostics,
    /// Every shot, kept when raw profiles were requested.
    #[serde(skip)]
    pub shots: Option<Vec<Occupancy>>,
}

impl ExperimentResult {
    /// Ground-truth site distribution, `p1_truth / R`.
    pub fn p1_truth_distribution(&self) -> Vec<f64> {
        let r = self.atom_count as f64;
        self.p1_truth.iter().map(|p| p / r).collect()
    }

    /// Mean correlation profile on both grids.
    pub fn profile(&self) -> CorrelationProfile {
        let mut p = CorrelationProfile::from_parts(correlations::refine_g1(&self.mean_g1), self.mean_g2.clone());
        p.g1 = self.mean_g1.clone();
        p.visibility = self.mean_g1.iter().map(|z| z.norm()).collect();
        p
    }

    /// Truth-side probability vectors.
    pub fn truth(&self) -> Option<ProbabilityVectors> {
        Some(ProbabilityVectors {
            p1: self.p1_truth.clone(),
            p1_normalization: lattice::P1Normalization::PerSite,
            p2: self.p2_truth.clone()?,
            conditional: None,
        })
    }
}

/// Per-batch sums. Integer counters are order independent; the
/// floating-point moments are merged in batch order.
struct Accumulator {
    g1: ComplexMoments,
    g2: Option<VectorMoments>,
    p1_shot: VectorMoments,
    p2_shot: Option<VectorMoments>,
    site_counts: Vec<u64>,
    pair_counts: Vec<u64>,
    cooccurrence: Option<Vec<u64>>,
    shots: Option<Vec<Occupancy>>,
}

impl Accumulator {
    fn new(n: usize, atoms: usize, keep_shots: bool) -> Self {
        let pairs = atoms >= 2;
        Self {
            g1: ComplexMoments::new(n),
            g2: pairs.then(|| VectorMoments::new(2 * n)),
            p1_shot: VectorMoments::new(n),
            p2_shot: pairs.then(|| VectorMoments::new(n)),
            site_counts: vec![0; n],
            pair_counts: vec![0; n],
            cooccurrence: (n <= MAX_COOCCURRENCE_SITES).then(|| vec![0; n * n]),
            shots: keep_shots.then(Vec::new),
        }
    }

    fn push(&mut self, shot: Occupancy, config: &ExperimentConfig) -> Result<()> {
        let n = shot.n_sites();
        let stats = config.lattice.statistics;
        let state = FieldState::from_occupancy(&shot, stats);
        let profile = correlations::profile_of_state(&state)?;
        self.g1.push(&profile.g1);
        self.p1_shot.push(&correlations::p1_from_g1(&profile.g1)?.p1);
        if let (Some(g2), Some(p2m), Some(acc)) = (profile.g2.as_ref(), self.p2_shot.as_mut(), self.g2.as_mut()) {
            acc.push(g2);
            p2m.push(&correlations::p2_from_g2(g2, shot.atom_count(), stats)?.values);
        }
        let occupied: Vec<usize> = shot.occupied().collect();
        for &i in &occupied {
            self.site_counts[i] += 1;
        }
        for (c, p) in self.pair_counts.iter_mut().zip(lattice::pair_counts(&shot)) {
            *c += p;
        }
        if let Some(co) = self.cooccurrence.as_mut() {
            for &i in &occupied {
                for &k in &occupied {
                    co[i * n + k] += 1;
                }
            }
        }
        if let Some(shots) = self.shots.as_mut() {
            shots.push(shot);
        }
        Ok(())
    }

    fn merge(&mut self, other: Accumulator) {
        self.g1.merge(&other.g1);
        self.p1_shot.merge(&other.p1_shot);
        if let (Some(a), Some(b)) = (self.g2.as_mut(), other.g2.as_ref()) {
            a.merge(b);
        }
        if let (Some(a), Some(b)) = (self.p2_shot.as_mut(), other.p2_shot.as_ref()) {
            a.merge(b);
        }
        for (a, b) in self.site_counts.iter_mut().zip(&other.site_counts) {
            *a += b;
        }
        for (a, b) in self.pair_counts.iter_mut().zip(&other.pair_counts) {
            *a += b;
        }
        if let (Some(a), Some(b)) = (self.cooccurrence.as_mut(), other.cooccurrence.as_ref()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        if let (Some(a), Some(b)) = (self.shots.as_mut(), other.shots) {
            a.extend(b);
        }
    }
}

fn clip_negative(v: &mut [f64]) -> f64 {
    let mut clipped = 0.0;
    for x in v.iter_mut() {
        if *x < 0.0 {
            clipped -= *x;
            *x = 0.0;
        }
    }
    clipped
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let n = config.lattice.n_sites;
    let atoms = config.atom_count();
    if atoms == 0 {
        return Err(Error::EmptyField);
    }
    let basis = config.basis()?;
    let keep = config.outputs.raw_profiles;

    let batches: Vec<(usize, usize)> =
        (0..config.runs).step_by(BATCH).map(|s| (s, (s + BATCH).min(config.runs))).collect();
    let mut total = Accumulator::new(n, atoms, keep);
    for wave in batches.chunks(WAVE) {
        let parts: Vec<Result<Accumulator>> = wave
            .par_iter()
            .map(|&(start, end)| {
                let mut acc = Accumulator::new(n, atoms, keep);
                for run in start..end {
                    let shot = shot_for_run(config, run).map_err(|e| Error::Run { run, source: Box::new(e) })?;
                    acc.push(shot, config).map_err(|e| Error::Run { run, source: Box::new(e) })?;
                }
                Ok(acc)
            })
            .collect();
        for part in parts {
            total.merge(part?);
        }
    }

    let runs = config.runs as f64;
    let mean_g1 = total.g1.mean();
    let inversion = correlations::p1_from_g1(&mean_g1)?;
    let mut p1_recon = inversion.p1;
    let p1_clip_mass = clip_negative(&mut p1_recon);
    let p1_truth: Vec<f64> = total.site_counts.iter().map(|&c| c as f64 / runs).collect();

    let (mean_g2, g2_stderr, p2_recon, p2_recon_stderr, p2_truth, p2_clip_mass, p2_self_pair) =
        match (total.g2.as_ref(), total.p2_shot.as_ref()) {
            (Some(g2m), Some(p2m)) => {
                let mean_g2 = g2m.mean();
                let mut p2 = correlations::p2_from_g2(&mean_g2, atoms, config.lattice.statistics)?.values;
                let self_pair = p2[0];
                let clip = clip_negative(&mut p2);
                let pairs: u64 = total.pair_counts.iter().sum();
                let truth = total.pair_counts.iter().map(|&c| c as f64 / pairs as f64).collect();
                (Some(mean_g2), Some(g2m.stderr()), Some(p2), Some(p2m.stderr()), Some(truth), clip, self_pair)
            }
            _ => (None, None, None, None, None, 0.0, 0.0),
        };

    let uniformity = uniformity_test(&p1_recon, config.runs, atoms, total.cooccurrence.as_deref());
    Ok(ExperimentResult {
        config: config.clone(),
        atom_count: atoms,
        basis,
        g1_stderr: total.g1.stderr(),
        mean_g1,
        mean_g2,
        g2_stderr,
        p1_recon,
        p1_recon_stderr: total.p1_shot.stderr(),
        p2_recon,
        p2_recon_stderr,
        p1_truth,
        p2_truth,
        diagnostics: Diagnostics {
            p1_imag_residue: inversion.imag_residue,
            p1_clip_mass,
            p2_clip_mass,
            p2_self_pair,
            uniformity,
        },
        shots: total.shots,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub l1: f64,
    pub cosine_similarity: f64,
    pub max_abs: f64,
}

/// Distances between two vectors after each is rescaled to unit sum.
pub fn compare_distributions(a: &[f64], b: &[f64]) -> Result<Comparison> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    let a = lattice::normalized(a)?;
    let b = lattice::normalized(b)?;
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(Comparison {
        l1: a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum(),
        cosine_similarity: dot / (na * nb),
        max_abs: a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
    })
}

/// Model parameters of the four-panel comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Figure6Params {
    /// Bunched kernel width, m.
    pub bunched_tau: f64,
    pub min_gap: usize,
    pub period: usize,
    /// Super-lattice envelope width, m.
    pub envelope_width: f64,
}

impl Figure6Params {
    /// Defaults for a lattice: `tau = 8 w'`, `min_gap = N / (2R)` (at least
    /// 2), period 4 and an envelope of `N / 4` sites.
    pub fn for_lattice(lattice: &LatticeConfig, atoms: usize) -> Self {
        let w = lattice.lattice_const;
        let n = lattice.n_sites;
        Self {
            bunched_tau: 8.0 * w,
            min_gap: (n / (2 * atoms.max(1))).max(2),
            period: 4,
            envelope_width: (n / 4) as f64 * w,
        }
    }

    pub fn models(&self) -> [ModelKind; 4] {
        [
            ModelKind::Random,
            ModelKind::Bunched { tau: self.bunched_tau, seed_mode: SeedMode::RandomUniform },
            ModelKind::AntiBunched { min_gap: self.min_gap },
            ModelKind::SuperLattice { period: self.period, envelope_width: self.envelope_width },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Figure6Panel {
    /// Panel letter `a`..`d`.
    pub panel: char,
    pub kind: ModelKind,
    pub result: ExperimentResult,
}

/// Runs the random, bunched, anti-bunched and super-lattice models on the
/// lattice of `base`, each with its own seed derived from the base seed.
pub fn figure6_suite(base: &ExperimentConfig, params: &Figure6Params) -> Result<Vec<Figure6Panel>> {
    params
        .models()
        .into_iter()
        .zip(['a', 'b', 'c', 'd'])
        .enumerate()
        .map(|(i, (kind, panel))| {
            let config = base.with_model(kind, derive_seed(base.master_seed, i as u64));
            Ok(Figure6Panel { panel, kind, result: run_experiment(&config)? })
        })
        .collect()
}

/// Pair-separation distribution of uniformly random filling, `(N - j)`
/// normalized over `j = 1..N`.
pub fn random_pair_baseline(n_sites: usize) -> Vec<f64> {
    ProbabilityVectors::random_filling(n_sites, 2).p2
}

/// Header lines carried by every output file: the resolved configuration
/// in config-file syntax.
pub fn header_lines(config: &ExperimentConfig) -> Vec<String> {
    let mut lines = vec![format!("latticecorr {}", env!("CARGO_PKG_VERSION"))];
    lines.extend(config::render(config).lines().map(str::to_string));
    lines
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    Ok((path.clone(), BufWriter::new(File::create(&path)?)))
}

fn write_header<W: Write>(out: &mut W, header: &[String]) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// Writes `j,recon,recon_stderr,truth[,baseline]` rows.
fn write_distribution_csv(
    dir: &Path,
    name: &str,
    header: &[String],
    recon: &[f64],
    stderr: &[f64],
    truth: Option<&[f64]>,
    baseline: Option<&[f64]>,
) -> Result<PathBuf> {
    let (path, mut out) = create(dir, name)?;
    write_header(&mut out, header)?;
    write!(out, "j,recon,recon_stderr")?;
    if truth.is_some() {
        write!(out, ",truth")?;
    }
    if baseline.is_some() {
        write!(out, ",baseline")?;
    }
    writeln!(out)?;
    for j in 0..recon.len() {
        write!(out, "{j},{:e},{:e}", recon[j], stderr[j])?;
        if let Some(t) = truth {
            write!(out, ",{:e}", t[j])?;
        }
        if let Some(b) = baseline {
            write!(out, ",{:e}", b[j])?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(path)
}

/// CSV of a correlation profile on the g2 grid: `l, separation_m, re_g1,
/// im_g1, visibility, g2` for `l = -N..N` (g2 column empty when undefined).
pub fn write_profile_csv<W: Write>(
    mut out: W,
    header: &[String],
    profile: &CorrelationProfile,
    basis: &ModeBasis,
) -> Result<()> {
    write_header(&mut out, header)?;
    writeln!(out, "l,separation_m,re_g1,im_g1,visibility,g2")?;
    let n = profile.n_modes as isize;
    for l in -n..n {
        let g1 = profile.g1_fine[(l + n) as usize];
        write!(out, "{l},{:e},{:e},{:e},{:e},", l as f64 * basis.delta_x2, g1.re, g1.im, g1.norm())?;
        match profile.g2_at(l) {
            Some(g) => writeln!(out, "{g:e}")?,
            None => writeln!(out)?,
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'a str,
    master_seed: u64,
    config_text: String,
    #[serde(flatten)]
    result: &'a ExperimentResult,
}

/// File stem of the panel pair for a single experiment: the fixed-seed and
/// random-seed bunched runs map to `fig5a`/`fig5b` and `fig5c`/`fig5d`.
fn panel_names(kind: &ModelKind) -> (&'static str, &'static str) {
    match kind {
        ModelKind::Bunched { seed_mode: SeedMode::Fixed(_), .. } => ("fig5a.csv", "fig5b.csv"),
        ModelKind::Bunched { seed_mode: SeedMode::RandomUniform, .. } => ("fig5c.csv", "fig5d.csv"),
        _ => ("p1.csv", "p2.csv"),
    }
}

/// Writes the JSON summary, the mean profile and the p1/p2 panel CSVs of
/// one experiment into `dir`. Returns the paths written.
pub fn write_experiment(result: &ExperimentResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let header = header_lines(&result.config);
    let outputs = result.config.outputs;
    let mut written = Vec::new();

    let (path, mut out) = create(dir, "result.json")?;
    let summary = Summary {
        version: env!("CARGO_PKG_VERSION"),
        master_seed: result.config.master_seed,
        config_text: config::render(&result.config),
        result,
    };
    serde_json::to_writer_pretty(&mut out, &summary)?;
    writeln!(out)?;
    out.flush()?;
    written.push(path);

    let (path, mut out) = create(dir, "profile.csv")?;
    write_profile_csv(&mut out, &header, &result.profile(), &result.basis)?;
    out.flush()?;
    written.push(path);

    let (p1_name, p2_name) = panel_names(&result.config.model.kind);
    let truth1 = result.p1_truth_distribution();
    if outputs.p1_recon {
        let truth = outputs.ground_truth.then_some(truth1.as_slice());
        written.push(write_distribution_csv(
            dir,
            p1_name,
            &header,
            &result.p1_recon,
            &result.p1_recon_stderr,
            truth,
            None,
        )?);
    }
    if let (true, Some(p2), Some(se)) = (outputs.p2_recon, &result.p2_recon, &result.p2_recon_stderr) {
        let truth = result.p2_truth.as_deref().filter(|_| outputs.ground_truth);
        written.push(write_distribution_csv(dir, p2_name, &header, p2, se, truth, None)?);
    }
    if let Some(shots) = &result.shots {
        let (path, mut out) = create(dir, "shots.txt")?;
        lattice::write_archive(&mut out, &ArchiveHeader::from_config(&result.config.lattice), &header, shots)?;
        out.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Serialize)]
struct Figure6Summary<'a> {
    version: &'a str,
    master_seed: u64,
    config_text: String,
    params: &'a Figure6Params,
    panels: &'a [Figure6Panel],
}

/// Writes `figure6.json` and the p2 panels `fig6a.csv`..`fig6d.csv`.
pub fn write_figure6(
    base: &ExperimentConfig,
    params: &Figure6Params,
    panels: &[Figure6Panel],
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let (path, mut out) = create(dir, "figure6.json")?;
    let summary = Figure6Summary {
        version: env!("CARGO_PKG_VERSION"),
        master_seed: base.master_seed,
        config_text: config::render(base),
        params,
        panels,
    };
    serde_json::to_writer_pretty(&mut out, &summary)?;
    writeln!(out)?;
    out.flush()?;
    written.push(path);

    let baseline = random_pair_baseline(base.lattice.n_sites);
    for panel in panels {
        let r = &panel.result;
        let (Some(p2), Some(se)) = (&r.p2_recon, &r.p2_recon_stderr) else {
            continue;
        };
        let mut header = header_lines(&r.config);
        header.push(format!("panel {} model {}", panel.panel, panel.kind.name()));
        let name = format!("fig6{}.csv", panel.panel);
        written.push(write_distribution_csv(dir, &name, &header, p2, se, r.p2_truth.as_deref(), Some(&baseline))?);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{CESIUM_MASS, DEFAULT_PACKET_WIDTH};
    use crate::lattice::Statistics;

    fn config(n: usize, fill: f64, kind: ModelKind, runs: usize, seed: u64) -> ExperimentConfig {
        let lattice = LatticeConfig::new(n, 0.5e-6, fill, Statistics::Boson).unwrap();
        ExperimentConfig {
            lattice,
            model: DistributionModel::new(kind, fill),
            runs,
            expansion: ExpansionParams::new(CESIUM_MASS, 1.0).unwrap(),
            species: Some("cesium".into()),
            packet_width: DEFAULT_PACKET_WIDTH,
            master_seed: seed,
            outputs: Outputs::default(),
        }
    }

    #[test]
    fn single_atom_single_run_recovers_site() {
        let c = config(32, 1.0 / 32.0, ModelKind::Random, 1, 5);
        let shot = shot_for_run(&c, 0).unwrap();
        let site = shot.occupied().next().unwrap();
        let r = run_experiment(&c).unwrap();
        for (j, p) in r.p1_recon.iter().enumerate() {
            assert!((p - if j == site { 1.0 } else { 0.0 }).abs() < 1e-12);
        }
        assert!(r.mean_g2.is_none() && r.p2_recon.is_none());
    }

    #[test]
    fn zero_separation_g2_is_shot_independent() {
        let c = config(64, 0.25, ModelKind::Random, 200, 9);
        let r = run_experiment(&c).unwrap();
        let g2 = r.mean_g2.as_ref().unwrap();
        assert!((g2[64] - 2.0 * 15.0 / 16.0).abs() < 1e-10);
    }

    #[test]
    fn reconstruction_matches_truth_without_noise() {
        // Each shot's profile is exact, so the inversions reproduce the
        // empirical distributions of the same shots.
        let kind = ModelKind::Bunched { tau: 2e-6, seed_mode: SeedMode::Fixed(20) };
        let c = config(48, 0.2, kind, 150, 3);
        let r = run_experiment(&c).unwrap();
        for (a, b) in r.p1_recon.iter().zip(r.p1_truth_distribution()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in r.p2_recon.as_ref().unwrap().iter().zip(r.p2_truth.as_ref().unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(r.diagnostics.p1_clip_mass < 1e-12);
    }

    #[test]
    fn fermions_reconstruct_the_same_distributions() {
        let mut c = config(40, 0.2, ModelKind::Random, 100, 21);
        let boson = run_experiment(&c).unwrap();
        c.lattice.statistics = Statistics::Fermion;
        let fermion = run_experiment(&c).unwrap();
        for (a, b) in boson.p2_recon.unwrap().iter().zip(fermion.p2_recon.unwrap()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(fermion.mean_g2.unwrap()[40].abs() < 1e-12);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let kind = ModelKind::Bunched { tau: 4e-6, seed_mode: SeedMode::RandomUniform };
        let c = config(64, 0.1, kind, 300, 77);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_experiment(&c)).unwrap();
        let b = four.install(|| run_experiment(&c)).unwrap();
        assert_eq!(a, b);
        let c2 = ExperimentConfig { master_seed: 78, ..c };
        assert_ne!(run_experiment(&c2).unwrap().mean_g1, a.mean_g1);
    }

    #[test]
    fn run_failure_reports_index() {
        let kind = ModelKind::AntiBunched { min_gap: 10 };
        let c = config(32, 0.25, kind, 5, 1);
        assert!(matches!(run_experiment(&c), Err(Error::Infeasible(_))));
    }

    #[test]
    fn compare_examples() {
        let a = [0.2, 0.3, 0.5];
        let c = compare_distributions(&a, &a).unwrap();
        assert!(c.l1.abs() < 1e-15 && (c.cosine_similarity - 1.0).abs() < 1e-15);
        let c = compare_distributions(&[1.0, 0.0], &[0.0, 2.0]).unwrap();
        assert_eq!((c.l1, c.cosine_similarity, c.max_abs), (2.0, 0.0, 1.0));
        assert!(compare_distributions(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(compare_distributions(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn uniformity_of_random_filling() {
        let c = config(64, 0.25, ModelKind::Random, 400, 12);
        let r = run_experiment(&c).unwrap();
        let u = r.diagnostics.uniformity;
        // Fixed atom count: nu is close to N - 1 and a close to 1 - R/N.
        assert!((u.effective_dof.unwrap() - 63.0).abs() < 8.0, "{u:?}");
        assert!((u.scale.unwrap() - 0.75).abs() < 0.1);
        assert!(u.best_p_value() > 1e-4);

        let fixed = ModelKind::Bunched { tau: 2e-6, seed_mode: SeedMode::Fixed(32) };
        let r = run_experiment(&config(64, 0.25, fixed, 400, 12)).unwrap();
        assert!(r.diagnostics.uniformity.best_p_value() < 1e-6);
    }

    #[test]
    fn derived_seeds_differ() {
        let s: Vec<u64> = (0..4).map(|i| derive_seed(42, i)).collect();
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(s[i], s[j]);
            }
        }
        assert_eq!(derive_seed(42, 1), derive_seed(42, 1));
    }

    #[test]
    fn outputs_carry_header_and_seed() {
        let dir = tempfile::tempdir().unwrap();
        let kind = ModelKind::Bunched { tau: 4e-6, seed_mode: SeedMode::Fixed(16) };
        let mut c = config(32, 0.25, kind, 20, 4242);
        c.outputs.raw_profiles = true;
        let r = run_experiment(&c).unwrap();
        let files = write_experiment(&r, dir.path()).unwrap();
        let names: Vec<String> = files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["result.json", "profile.csv", "fig5a.csv", "fig5b.csv", "shots.txt"]);
        for f in &files[1..] {
            let text = std::fs::read_to_string(f).unwrap();
            assert!(text.contains("seed = 4242"), "{f:?}");
        }
        let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files[0]).unwrap()).unwrap();
        assert_eq!(json["master_seed"], 4242);
        assert_eq!(json["p1_recon"].as_array().unwrap().len(), 32);

        let (_, shots) = lattice::read_archive(std::io::BufReader::new(File::open(&files[4]).unwrap())).unwrap();
        assert_eq!(shots.len(), 20);
        assert_eq!(shots[7], shot_for_run(&c, 7).unwrap());

        let profile = std::fs::read_to_string(&files[1]).unwrap();
        let rows: Vec<&str> = profile.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(rows[0], "l,separation_m,re_g1,im_g1,visibility,g2");
        assert_eq!(rows.len(), 1 + 64);
    }
}
