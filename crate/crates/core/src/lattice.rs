//! Lattice geometry, single-occupancy shot generation and the first/second
//! order site probability vectors derived from it.
//!
//! All separation sums use hard lattice edges: a term whose partner site
//! falls outside `0..N` contributes zero.

use std::io::{BufRead, Write};

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exchange statistics of the trapped atoms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    #[default]
    Boson,
    Fermion,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatticeConfig {
    pub n_sites: usize,
    /// Lattice constant w' in meters.
    pub lattice_const: f64,
    pub fill_factor: f64,
    pub statistics: Statistics,
}

impl LatticeConfig {
    pub fn new(n_sites: usize, lattice_const: f64, fill_factor: f64, statistics: Statistics) -> Result<Self> {
        let cfg = Self { n_sites, lattice_const, fill_factor, statistics };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites < 2 {
            return Err(Error::InvalidConfig(format!("n_sites must be >= 2 (got {})", self.n_sites)));
        }
        if !(self.lattice_const > 0.0 && self.lattice_const.is_finite()) {
            return Err(Error::InvalidConfig("lattice_const must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.fill_factor) {
            return Err(Error::InvalidConfig(format!(
                "fill_factor out of range [0, 1] (got {})",
                self.fill_factor
            )));
        }
        Ok(())
    }

    /// Number of atoms per shot, `floor(fill * N)`.
    pub fn atom_count(&self) -> usize {
        atoms_for_fill(self.fill_factor, self.n_sites)
    }
}

/// `floor(fill * n)`, tolerant of representation error just below an integer.
pub fn atoms_for_fill(fill: f64, n: usize) -> usize {
    let exact = fill * n as f64;
    let nearest = exact.round();
    let count = if (exact - nearest).abs() < 1e-9 { nearest } else { exact.floor() };
    (count.max(0.0) as usize).min(n)
}

/// One shot: which sites hold an atom. At most one atom per site.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Occupancy {
    sites: Vec<bool>,
    atom_count: usize,
}

impl Occupancy {
    pub fn empty(n_sites: usize) -> Self {
        Self { sites: vec![false; n_sites], atom_count: 0 }
    }

    pub fn from_sites(sites: Vec<bool>) -> Self {
        let atom_count = sites.iter().filter(|&&s| s).count();
        Self { sites, atom_count }
    }

    /// Builds a shot from occupied site indices; duplicates and out-of-range
    /// indices are rejected.
    pub fn from_indices(n_sites: usize, occupied: &[usize]) -> Result<Self> {
        let mut sites = vec![false; n_sites];
        for &i in occupied {
            if i >= n_sites {
                return Err(Error::InvalidConfig(format!("site {i} outside lattice of {n_sites}")));
            }
            if sites[i] {
                return Err(Error::InvalidConfig(format!("site {i} occupied twice")));
            }
            sites[i] = true;
        }
        Ok(Self { sites, atom_count: occupied.len() })
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn sites(&self) -> &[bool] {
        &self.sites
    }

    pub fn is_occupied(&self, site: usize) -> bool {
        self.sites[site]
    }

    /// Occupied site indices in ascending order.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.sites.iter().enumerate().filter_map(|(i, &s)| s.then_some(i))
    }

    /// The shot moved by `offset` sites, or `None` if an atom would leave the lattice.
    pub fn translated(&self, offset: isize) -> Option<Self> {
        let n = self.n_sites() as isize;
        let mut moved = Vec::with_capacity(self.atom_count);
        for i in self.occupied() {
            let j = i as isize + offset;
            if !(0..n).contains(&j) {
                return None;
            }
            moved.push(j as usize);
        }
        Self::from_indices(self.n_sites(), &moved).ok()
    }

    /// `0`/`1` characters, one per site.
    pub fn to_line(&self) -> String {
        self.sites.iter().map(|&s| if s { '1' } else { '0' }).collect()
    }

    pub fn parse_line(line: &str) -> Option<Self> {
        let sites = line
            .chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<bool>>>()?;
        Some(Self::from_sites(sites))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedMode {
    /// Cluster around this lattice site in every shot.
    Fixed(usize),
    /// Draw the cluster center uniformly over the lattice in every shot.
    RandomUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Uniform random subset of sites.
    Random,
    /// Atoms drawn from a discretized Gaussian of standard deviation `tau`
    /// (meters) around a seed site.
    Bunched { tau: f64, seed_mode: SeedMode },
    /// Uniform over all configurations whose pairwise gaps are `>= min_gap` sites.
    AntiBunched { min_gap: usize },
    /// Only sites `k = 0 (mod period)` may be filled, weighted by a Gaussian
    /// envelope of width `envelope_width` (meters) about the lattice center.
    SuperLattice { period: usize, envelope_width: f64 },
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::Random => "random",
            ModelKind::Bunched { .. } => "bunched",
            ModelKind::AntiBunched { .. } => "anti_bunched",
            ModelKind::SuperLattice { .. } => "super_lattice",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionModel {
    pub kind: ModelKind,
    pub target_fill: f64,
}

impl DistributionModel {
    pub fn new(kind: ModelKind, target_fill: f64) -> Self {
        Self { kind, target_fill }
    }

    /// Atoms placed per shot on a lattice of `n_sites`.
    pub fn atoms_for(&self, n_sites: usize) -> usize {
        atoms_for_fill(self.target_fill, n_sites)
    }

    /// Checks that every shot this model produces on `config` can be filled.
    pub fn validate(&self, config: &LatticeConfig) -> Result<()> {
        config.validate()?;
        if !(0.0..=1.0).contains(&self.target_fill) {
            return Err(Error::InvalidConfig(format!(
                "fill_factor out of range [0, 1] (got {})",
                self.target_fill
            )));
        }
        let n = config.n_sites;
        let atoms = self.atoms_for(n);
        match self.kind {
            ModelKind::Random => {}
            ModelKind::Bunched { tau, seed_mode } => {
                if !(tau > 0.0 && tau.is_finite()) {
                    return Err(Error::InvalidConfig(format!("bunched tau must be > 0 (got {tau})")));
                }
                if let SeedMode::Fixed(site) = seed_mode {
                    if site >= n {
                        return Err(Error::InvalidConfig(format!("seed site {site} outside lattice of {n}")));
                    }
                }
            }
            ModelKind::AntiBunched { min_gap } => {
                if min_gap == 0 {
                    return Err(Error::InvalidConfig("anti-bunched min_gap must be >= 1".into()));
                }
                if min_gap * atoms > n {
                    return Err(Error::Infeasible(format!(
                        "cannot place {atoms} atoms with gap {min_gap} on {n} sites"
                    )));
                }
            }
            ModelKind::SuperLattice { period, envelope_width } => {
                if period < 2 || 2 * period > n {
                    return Err(Error::InvalidConfig(format!(
                        "super-lattice period must satisfy 2 <= period <= N/2 (got {period})"
                    )));
                }
                if !(envelope_width > 0.0 && envelope_width.is_finite()) {
                    return Err(Error::InvalidConfig("super-lattice envelope_width must be > 0".into()));
                }
                let comb = n.div_ceil(period);
                if comb < atoms {
                    return Err(Error::Infeasible(format!(
                        "super-lattice has {comb} sites for {atoms} atoms"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Draws one shot of `model` on `config`.
///
/// Every returned shot holds exactly `floor(target_fill * N)` atoms.
pub fn sample_occupancy<R: Rng + ?Sized>(
    model: &DistributionModel,
    config: &LatticeConfig,
    rng: &mut R,
) -> Result<Occupancy> {
    model.validate(config)?;
    let n = config.n_sites;
    let atoms = model.atoms_for(n);
    if atoms == 0 {
        return Ok(Occupancy::empty(n));
    }
    let chosen: Vec<usize> = match model.kind {
        ModelKind::Random => index::sample(rng, n, atoms).into_vec(),
        ModelKind::Bunched { tau, seed_mode } => {
            let seed = match seed_mode {
                SeedMode::Fixed(site) => site,
                SeedMode::RandomUniform => rng.random_range(0..n),
            };
            let width = tau / config.lattice_const;
            let candidates: Vec<usize> = (0..n).collect();
            draw_weighted(&candidates, atoms, rng, |k| {
                let d = k as f64 - seed as f64;
                -d * d / (2.0 * width * width)
            })
        }
        ModelKind::AntiBunched { min_gap } => {
            // Uniform gap-constrained configurations are in bijection with
            // plain subsets of a lattice shortened by (atoms - 1)(min_gap - 1).
            let shrink = (atoms - 1) * (min_gap - 1);
            let mut base = index::sample(rng, n - shrink, atoms).into_vec();
            base.sort_unstable();
            base.iter().enumerate().map(|(i, &c)| c + i * (min_gap - 1)).collect()
        }
        ModelKind::SuperLattice { period, envelope_width } => {
            let center = (n - 1) as f64 / 2.0;
            let width = envelope_width / config.lattice_const;
            let candidates: Vec<usize> = (0..n).step_by(period).collect();
            draw_weighted(&candidates, atoms, rng, |k| {
                let d = k as f64 - center;
                -d * d / (2.0 * width * width)
            })
        }
    };
    Occupancy::from_indices(n, &chosen)
}

/// Sequential draw without replacement with probabilities proportional to
/// `exp(log_weight(k))` over the still-free candidates.
///
/// This is the distribution of a redraw-on-collision sampler, evaluated
/// directly so it terminates even when the kernel is much narrower than the
/// cluster it has to build. Weights are taken relative to the largest free
/// weight so they never all underflow.
fn draw_weighted<R, F>(candidates: &[usize], count: usize, rng: &mut R, log_weight: F) -> Vec<usize>
where
    R: Rng + ?Sized,
    F: Fn(usize) -> f64,
{
    let log_w: Vec<f64> = candidates.iter().map(|&k| log_weight(k)).collect();
    let mut free = vec![true; candidates.len()];
    let mut chosen = Vec::with_capacity(count);
    let mut weights = vec![0.0; candidates.len()];
    for _ in 0..count {
        let top = log_w
            .iter()
            .zip(&free)
            .filter(|(_, &f)| f)
            .map(|(&w, _)| w)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for (i, w) in weights.iter_mut().enumerate() {
            *w = if free[i] { (log_w[i] - top).exp() } else { 0.0 };
            total += *w;
        }
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                pick = Some(i);
                if target < w {
                    break;
                }
                target -= w;
            }
        }
        let i = pick.expect("at least one free candidate with positive weight");
        free[i] = false;
        chosen.push(candidates[i]);
    }
    chosen
}

fn check_lengths(shots: &[Occupancy]) -> Result<usize> {
    let first = shots.first().ok_or(Error::NoShots)?;
    let n = first.n_sites();
    for s in shots {
        if s.n_sites() != n {
            return Err(Error::DimensionMismatch { expected: n, got: s.n_sites() });
        }
    }
    Ok(n)
}

/// Fraction of shots in which each site is occupied.
pub fn empirical_p1(shots: &[Occupancy]) -> Result<Vec<f64>> {
    let n = check_lengths(shots)?;
    let mut counts = vec![0u64; n];
    for shot in shots {
        for i in shot.occupied() {
            counts[i] += 1;
        }
    }
    let total = shots.len() as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Unordered occupied pairs of one shot, binned by separation in sites.
pub fn pair_counts(shot: &Occupancy) -> Vec<u64> {
    let mut counts = vec![0u64; shot.n_sites()];
    let sites: Vec<usize> = shot.occupied().collect();
    for (a, &i) in sites.iter().enumerate() {
        for &j in &sites[a + 1..] {
            counts[j - i] += 1;
        }
    }
    counts
}

/// Pair-separation distribution pooled over all shots with at least two
/// atoms, normalized to unit sum. Bin 0 is always empty.
pub fn empirical_p2(shots: &[Occupancy]) -> Result<Vec<f64>> {
    let n = check_lengths(shots)?;
    let mut counts = vec![0u64; n];
    let mut used = 0usize;
    for shot in shots.iter().filter(|s| s.atom_count() >= 2) {
        used += 1;
        for (c, p) in counts.iter_mut().zip(pair_counts(shot)) {
            *c += p;
        }
    }
    if used == 0 {
        return Err(Error::NoPairs);
    }
    let total: u64 = counts.iter().sum();
    Ok(counts.into_iter().map(|c| c as f64 / total as f64).collect())
}

/// Second-order probabilities from first-order ones and a conditional table,
/// `P2_j = sum_l P1_l P(l + j | l)`.
///
/// `conditional[l][m]` is the probability of an atom at site `m` given one at `l`.
pub fn p2_from_bayes(p1: &[f64], conditional: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = p1.len();
    if conditional.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: conditional.len() });
    }
    if let Some(row) = conditional.iter().find(|r| r.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: row.len() });
    }
    Ok((0..n)
        .map(|j| (0..n - j).map(|l| p1[l] * conditional[l][l + j]).sum())
        .collect())
}

/// `sum_l p1_l p1_{l+j}` for `j = 0..N`, without renormalization.
pub fn autocorrelation_raw(p1: &[f64]) -> Vec<f64> {
    let n = p1.len();
    (0..n)
        .map(|j| (0..n - j).map(|l| p1[l] * p1[l + j]).sum())
        .collect()
}

/// A pair-separation distribution that may carry weight at zero separation,
/// which single occupancy forbids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistribution {
    pub values: Vec<f64>,
    /// Set when bin 0 carries non-negligible weight.
    pub degenerate: bool,
}

impl PairDistribution {
    pub(crate) fn new(values: Vec<f64>, tol: f64) -> Self {
        let degenerate = values.first().is_some_and(|v| v.abs() > tol);
        Self { values, degenerate }
    }
}

/// Pair-separation distribution implied by statistically independent sites:
/// the autocorrelation of `p1`, renormalized to unit sum.
pub fn autocorrelation_p2(p1: &[f64]) -> Result<PairDistribution> {
    if p1.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidConfig("p1 must be non-negative".into()));
    }
    let raw = autocorrelation_raw(p1);
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroDistribution);
    }
    Ok(PairDistribution::new(raw.into_iter().map(|v| v / total).collect(), 1e-12))
}

/// Which sum the first-order vector is normalized to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum P1Normalization {
    /// Per-site occupation probability; sums to the expected atom count.
    PerSite,
    /// Probability distribution over sites; sums to one.
    Distribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityVectors {
    pub p1: Vec<f64>,
    pub p1_normalization: P1Normalization,
    pub p2: Vec<f64>,
    pub conditional: Option<Vec<Vec<f64>>>,
}

impl ProbabilityVectors {
    pub fn from_shots(shots: &[Occupancy]) -> Result<Self> {
        Ok(Self {
            p1: empirical_p1(shots)?,
            p1_normalization: P1Normalization::PerSite,
            p2: empirical_p2(shots)?,
            conditional: None,
        })
    }

    /// Exact vectors for uniform random filling of `atoms` out of `n_sites`:
    /// flat `p1` and the `(N - j)` triangle for `p2`.
    pub fn random_filling(n_sites: usize, atoms: usize) -> Self {
        let n = n_sites as f64;
        let pairs = n * (n - 1.0) / 2.0;
        let mut p2: Vec<f64> = (0..n_sites).map(|j| (n - j as f64) / pairs).collect();
        p2[0] = 0.0;
        Self {
            p1: vec![atoms as f64 / n; n_sites],
            p1_normalization: P1Normalization::PerSite,
            p2,
            conditional: None,
        }
    }

    /// `p1` rescaled to unit sum.
    pub fn p1_distribution(&self) -> Result<Vec<f64>> {
        normalized(&self.p1)
    }
}

/// Copy of `v` scaled to unit sum.
pub fn normalized(v: &[f64]) -> Result<Vec<f64>> {
    let total: f64 = v.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroDistribution);
    }
    Ok(v.iter().map(|x| x / total).collect())
}

/// Header of a plain-text shot archive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArchiveHeader {
    pub n_sites: usize,
    pub lattice_const: f64,
    pub fill: f64,
}

impl ArchiveHeader {
    pub fn from_config(config: &LatticeConfig) -> Self {
        Self { n_sites: config.n_sites, lattice_const: config.lattice_const, fill: config.fill_factor }
    }
}

/// Writes `N=<n> w=<meters> fill=<f>` followed by optional `#` comment lines
/// and one `0`/`1` line per shot.
pub fn write_archive<W: Write>(
    mut out: W,
    header: &ArchiveHeader,
    comments: &[String],
    shots: &[Occupancy],
) -> Result<()> {
    writeln!(out, "N={} w={:e} fill={}", header.n_sites, header.lattice_const, header.fill)?;
    for c in comments {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    for shot in shots {
        if shot.n_sites() != header.n_sites {
            return Err(Error::DimensionMismatch { expected: header.n_sites, got: shot.n_sites() });
        }
        writeln!(out, "{}", shot.to_line())?;
    }
    Ok(())
}

pub fn read_archive<R: BufRead>(input: R) -> Result<(ArchiveHeader, Vec<Occupancy>)> {
    let mut lines = input.lines().enumerate();
    let (_, first) = lines.next().ok_or(Error::Archive { line: 1, message: "missing header".into() })?;
    let header = parse_archive_header(&first?)?;
    let mut shots = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let shot = Occupancy::parse_line(line).ok_or_else(|| Error::Archive {
            line: i + 1,
            message: "expected only 0/1 characters".into(),
        })?;
        if shot.n_sites() != header.n_sites {
            return Err(Error::Archive {
                line: i + 1,
                message: format!("shot has {} sites, header says {}", shot.n_sites(), header.n_sites),
            });
        }
        shots.push(shot);
    }
    Ok((header, shots))
}

fn parse_archive_header(line: &str) -> Result<ArchiveHeader> {
    let bad = |message: String| Error::Archive { line: 1, message };
    let mut n = None;
    let mut w = None;
    let mut fill = None;
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=').ok_or_else(|| bad(format!("bad header field `{field}`")))?;
        match key {
            "N" => n = Some(value.parse::<usize>().map_err(|e| bad(format!("N: {e}")))?),
            "w" => w = Some(value.parse::<f64>().map_err(|e| bad(format!("w: {e}")))?),
            "fill" => fill = Some(value.parse::<f64>().map_err(|e| bad(format!("fill: {e}")))?),
            other => return Err(bad(format!("unknown header key `{other}`"))),
        }
    }
    Ok(ArchiveHeader {
        n_sites: n.ok_or_else(|| bad("missing N".into()))?,
        lattice_const: w.ok_or_else(|| bad("missing w".into()))?,
        fill: fill.ok_or_else(|| bad("missing fill".into()))?,
    })
}
