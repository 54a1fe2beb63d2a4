//! Same-time first- and second-order correlations of the multimode atomic
//! field in the detection plane.
//!
//! Each lattice site `j` maps to a plane-wave mode `k_j = j dk` with
//! `dk = 2 pi w' / L^2`. Two detection grids are used:
//!
//! * the g1 grid, spacing `dx` with `dk dx = 2 pi / N`, separations `l = 0..N`;
//! * the g2 grid, spacing `dx2` with `dk dx2 = pi / N`, separations `l = -N..N`.
//!
//! On these grids the site/separation probabilities and the correlation
//! profiles form exact discrete transform pairs.

pub mod oracle;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::lattice::{Occupancy, PairDistribution, Statistics};

/// Tolerance on `sum(p) = 1` for inputs that must be distributions.
const NORMALIZATION_TOL: f64 = 1e-9;
/// Imaginary residue below which an inverted g1 is silently taken as real.
const IMAG_SILENT: f64 = 1e-8;
/// Imaginary residue above which an inverted g1 is rejected.
const IMAG_REJECT: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-8;
const SELF_PAIR_TOL: f64 = 1e-12;

/// Plane-wave mode spacing and the two matched detector grids.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeBasis {
    pub n_modes: usize,
    /// Mode spacing dk, 1/m.
    pub delta_k: f64,
    /// g1 slit quantum, `dk dx = 2 pi / N`.
    pub delta_x: f64,
    /// g2 detector quantum, `dk dx2 = pi / N`.
    pub delta_x2: f64,
}

impl ModeBasis {
    pub fn new(n_modes: usize, lattice_const: f64, l_squared: f64) -> Result<Self> {
        if n_modes < 2 {
            return Err(Error::InvalidConfig("mode basis needs at least two modes".into()));
        }
        if !(lattice_const > 0.0 && l_squared > 0.0) {
            return Err(Error::InvalidConfig("lattice constant and L^2 must be positive".into()));
        }
        Ok(Self::from_delta_k(n_modes, TAU * lattice_const / l_squared))
    }

    /// Basis in units where `dk = 1`.
    pub fn dimensionless(n_modes: usize) -> Self {
        Self::from_delta_k(n_modes, 1.0)
    }

    fn from_delta_k(n_modes: usize, delta_k: f64) -> Self {
        let delta_x = TAU / (n_modes as f64 * delta_k);
        Self { n_modes, delta_k, delta_x, delta_x2: delta_x / 2.0 }
    }

    pub fn wavenumber(&self, mode: usize) -> f64 {
        mode as f64 * self.delta_k
    }

    /// Separations `l dx2` for `l = -N..N`, in meters.
    pub fn g2_separations(&self) -> Vec<f64> {
        let n = self.n_modes as isize;
        (-n..n).map(|l| l as f64 * self.delta_x2).collect()
    }
}

/// Single-occupancy Fock state of the plane-wave modes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldState {
    pub occupations: Vec<bool>,
    pub statistics: Statistics,
    pub atom_count: usize,
}

impl FieldState {
    pub fn from_occupancy(shot: &Occupancy, statistics: Statistics) -> Self {
        Self { occupations: shot.sites().to_vec(), statistics, atom_count: shot.atom_count() }
    }

    pub fn from_modes(n_modes: usize, modes: &[usize], statistics: Statistics) -> Result<Self> {
        let shot = Occupancy::from_indices(n_modes, modes)?;
        Ok(Self::from_occupancy(&shot, statistics))
    }

    pub fn n_modes(&self) -> usize {
        self.occupations.len()
    }

    fn modes(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupations.iter().enumerate().filter_map(|(i, &o)| o.then_some(i))
    }
}

/// `g1(-s/2, s/2)` for detectors separated by `separation` meters:
/// `(1/R) sum_j n_j exp(i k_j s)`. Identical for Bosons and Fermions.
pub fn g1_of_state(state: &FieldState, basis: &ModeBasis, separation: f64) -> Result<Complex64> {
    if state.atom_count == 0 {
        return Err(Error::EmptyField);
    }
    let sum: Complex64 = state
        .modes()
        .map(|j| Complex64::from_polar(1.0, basis.wavenumber(j) * separation))
        .sum();
    Ok(sum / state.atom_count as f64)
}

/// Normalized coincidence rate `g2(-s/2, s/2)` for a Fock state, from the
/// pair sum over occupied modes `j != l` of `1 +/- cos((k_j - k_l) s)`.
pub fn g2_of_state(state: &FieldState, basis: &ModeBasis, separation: f64) -> Result<f64> {
    let r = state.atom_count;
    if r < 2 {
        return Err(Error::TooFewAtoms(r));
    }
    let modes: Vec<usize> = state.modes().collect();
    let mut cross = 0.0;
    for (a, &j) in modes.iter().enumerate() {
        for &l in &modes[a + 1..] {
            cross += 2.0 * ((basis.wavenumber(l) - basis.wavenumber(j)) * separation).cos();
        }
    }
    let pairs = (r * (r - 1)) as f64;
    let sign = exchange_sign(state.statistics);
    Ok((pairs + sign * cross) / (r * r) as f64)
}

fn exchange_sign(statistics: Statistics) -> f64 {
    match statistics {
        Statistics::Boson => 1.0,
        Statistics::Fermion => -1.0,
    }
}

/// Correlation functions of one state (or an ensemble mean) on both grids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationProfile {
    pub n_modes: usize,
    /// g1 at `l dx`, `l = 0..N`.
    pub g1: Vec<Complex64>,
    /// g1 re-evaluated on the g2 grid, `l dx2` for `l = -N..N` (index `l + N`).
    pub g1_fine: Vec<Complex64>,
    /// g2 at `l dx2` for `l = -N..N` (index `l + N`); absent when R < 2.
    pub g2: Option<Vec<f64>>,
    /// Fringe visibility `|g1|` on the g1 grid.
    pub visibility: Vec<f64>,
}

impl CorrelationProfile {
    pub fn from_parts(g1_fine: Vec<Complex64>, g2: Option<Vec<f64>>) -> Self {
        let n = g1_fine.len() / 2;
        let g1: Vec<Complex64> = (0..n).map(|l| g1_fine[n + 2 * l - if 2 * l >= n { 2 * n } else { 0 }]).collect();
        let visibility = g1.iter().map(|z| z.norm()).collect();
        Self { n_modes: n, g1, g1_fine, g2, visibility }
    }

    /// g2 at signed separation index `l` on the g2 grid.
    pub fn g2_at(&self, l: isize) -> Option<f64> {
        let n = self.n_modes as isize;
        if !(-n..n).contains(&l) {
            return None;
        }
        self.g2.as_ref().map(|g| g[(l + n) as usize])
    }
}

/// Position of signed index `l` in a `-N..N` vector stored from index 0.
#[inline]
fn signed_slot(l: isize, n: usize) -> usize {
    (l + n as isize) as usize
}

/// Full profile of one state on both grids, via one 2N-point transform of
/// the occupation vector.
pub fn profile_of_state(state: &FieldState) -> Result<CorrelationProfile> {
    let r = state.atom_count;
    if r == 0 {
        return Err(Error::EmptyField);
    }
    let n = state.n_modes();
    let mut amp = vec![Complex64::new(0.0, 0.0); 2 * n];
    for j in state.modes() {
        amp[j] = Complex64::new(1.0, 0.0);
    }
    // amp[m] = sum_j n_j exp(i pi j m / N)
    fft::inverse_in_place(&mut amp);

    let rf = r as f64;
    let mut g1_fine = vec![Complex64::new(0.0, 0.0); 2 * n];
    let mut g2 = (r >= 2).then(|| vec![0.0; 2 * n]);
    let sign = exchange_sign(state.statistics);
    let pairs = rf * (rf - 1.0);
    for l in -(n as isize)..n as isize {
        let a = amp[l.rem_euclid(2 * n as isize) as usize];
        let slot = signed_slot(l, n);
        g1_fine[slot] = a / rf;
        if let Some(g2) = g2.as_mut() {
            g2[slot] = (pairs + sign * (a.norm_sqr() - rf)) / (rf * rf);
        }
    }
    if let Some(g2) = g2.as_mut() {
        symmetrize(g2, n);
        g2[signed_slot(0, n)] = if r >= 2 { (pairs + sign * pairs) / (rf * rf) } else { 0.0 };
    }
    g1_fine[signed_slot(0, n)] = Complex64::new(1.0, 0.0);
    Ok(CorrelationProfile::from_parts(g1_fine, g2))
}

/// Averages `g(l)` and `g(-l)` so the stored profile is exactly even.
fn symmetrize(g: &mut [f64], n: usize) {
    for l in 1..n as isize {
        let (a, b) = (signed_slot(l, n), signed_slot(-l, n));
        let m = 0.5 * (g[a] + g[b]);
        g[a] = m;
        g[b] = m;
    }
}

fn check_distribution(p: &[f64]) -> Result<()> {
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL || p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotNormalized(total));
    }
    Ok(())
}

/// Van Cittert-Zernike forward relation on the g1 grid:
/// `g1_l = sum_j p1_j exp(2 pi i j l / N)`.
pub fn g1_from_p1(p1: &[f64], basis: &ModeBasis) -> Result<Vec<Complex64>> {
    if p1.len() != basis.n_modes {
        return Err(Error::DimensionMismatch { expected: basis.n_modes, got: p1.len() });
    }
    check_distribution(p1)?;
    let buf: Vec<Complex64> = p1.iter().map(|&p| Complex64::new(p, 0.0)).collect();
    Ok(fft::inverse(&buf))
}

/// Output of [`p1_from_g1`]: the real part of the inversion plus the largest
/// imaginary component that was discarded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct P1Inversion {
    pub p1: Vec<f64>,
    pub imag_residue: f64,
}

/// Inverse of [`g1_from_p1`]: `p1_j = (1/N) sum_l g1_l exp(-2 pi i j l / N)`.
pub fn p1_from_g1(g1: &[Complex64]) -> Result<P1Inversion> {
    let n = g1.len();
    if n == 0 {
        return Err(Error::DimensionMismatch { expected: 1, got: 0 });
    }
    let spectrum = fft::forward(g1);
    let scale = 1.0 / n as f64;
    let imag_residue = spectrum.iter().map(|z| (z.im * scale).abs()).fold(0.0, f64::max);
    if imag_residue > IMAG_REJECT {
        return Err(Error::InconsistentG1(imag_residue));
    }
    if imag_residue > IMAG_SILENT {
        log::warn!("p1_from_g1: discarding imaginary residue {imag_residue:e}");
    }
    Ok(P1Inversion { p1: spectrum.iter().map(|z| z.re * scale).collect(), imag_residue })
}

/// Coincidence profile of an R-atom state with pair-separation distribution
/// `p2`, on the g2 grid `l = -N..N` (index `l + N`):
///
/// `(R/(R-1)) g2_l - 1 = +/- sum_j p2_j cos(pi j l / N)`.
pub fn g2_from_p2(p2: &[f64], atom_count: usize, basis: &ModeBasis, statistics: Statistics) -> Result<Vec<f64>> {
    let n = basis.n_modes;
    if p2.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p2.len() });
    }
    if atom_count < 2 {
        return Err(Error::TooFewAtoms(atom_count));
    }
    check_distribution(p2)?;
    if p2[0].abs() > SELF_PAIR_TOL {
        return Err(Error::NonzeroSelfPair(p2[0]));
    }
    let cosine_sum = even_extension_transform(p2);
    let r = atom_count as f64;
    let sign = exchange_sign(statistics);
    let mut g2 = vec![0.0; 2 * n];
    for l in -(n as isize)..n as isize {
        let s = cosine_sum[l.rem_euclid(2 * n as isize) as usize];
        g2[signed_slot(l, n)] = (r - 1.0) / r * (1.0 + sign * s);
    }
    Ok(g2)
}

/// `S_m = sum_{j=-N}^{N-1} q_j exp(i pi j m / N)` for the even extension
/// `q_0 = p_0`, `q_{+-j} = p_j / 2`, `q_{-N} = 0`. Returns `S` indexed by
/// `m mod 2N`.
fn even_extension_transform(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut q = vec![Complex64::new(0.0, 0.0); 2 * n];
    q[0] = Complex64::new(p[0], 0.0);
    for j in 1..n {
        q[j] = Complex64::new(0.5 * p[j], 0.0);
        q[2 * n - j] = Complex64::new(0.5 * p[j], 0.0);
    }
    fft::inverse_in_place(&mut q);
    q.into_iter().map(|z| z.re).collect()
}

/// Inverse of [`g2_from_p2`]. `g2` holds `l = -N..N` at index `l + N`.
///
/// The symmetric halves are folded back onto `j = 1..N`; `j = 0` keeps its
/// full weight. A non-zero weight at `j = 0` is flagged as unphysical.
pub fn p2_from_g2(g2: &[f64], atom_count: usize, statistics: Statistics) -> Result<PairDistribution> {
    if g2.len() < 4 || !g2.len().is_multiple_of(2) {
        return Err(Error::DimensionMismatch { expected: 4, got: g2.len() });
    }
    if atom_count < 2 {
        return Err(Error::TooFewAtoms(atom_count));
    }
    let n = g2.len() / 2;
    let asym = (1..n as isize)
        .map(|l| (g2[signed_slot(l, n)] - g2[signed_slot(-l, n)]).abs())
        .fold(0.0, f64::max);
    if asym > SYMMETRY_TOL {
        return Err(Error::AsymmetricG2(asym));
    }
    let r = atom_count as f64;
    let sign = exchange_sign(statistics);
    let mut s = vec![Complex64::new(0.0, 0.0); 2 * n];
    for l in -(n as isize)..n as isize {
        let v = sign * (r / (r - 1.0) * g2[signed_slot(l, n)] - 1.0);
        s[l.rem_euclid(2 * n as isize) as usize] = Complex64::new(v, 0.0);
    }
    fft::forward_in_place(&mut s);
    let scale = 1.0 / (2 * n) as f64;
    let mut p2 = vec![0.0; n];
    p2[0] = s[0].re * scale;
    for j in 1..n {
        p2[j] = (s[j].re + s[2 * n - j].re) * scale;
    }
    Ok(PairDistribution::new(p2, 1e-9))
}

/// Maps a Boson-normalized profile onto its Fermion counterpart:
/// `(g - 1) -> -(g - 1)`, i.e. `2 - g`.
///
/// The map is exact for profiles in the `(R/(R-1)) g2` normalization; see
/// [`eq13_normalized`].
pub fn fermion_transform(g2: &[f64]) -> Vec<f64> {
    g2.iter().map(|g| 2.0 - g).collect()
}

/// `(R/(R-1)) g2`, the coincidence profile with the finite-atom-number
/// factor removed.
pub fn eq13_normalized(g2: &[f64], atom_count: usize) -> Vec<f64> {
    let r = atom_count as f64;
    g2.iter().map(|g| r / (r - 1.0) * g).collect()
}

/// Evaluates a g1 profile given on the g1 grid (`l = 0..N`) at the g2 grid
/// points `l dx2`, `l = -N..N`, by inverting to mode amplitudes and summing
/// exactly rather than interpolating.
pub fn refine_g1(g1: &[Complex64]) -> Vec<Complex64> {
    let n = g1.len();
    let mut amplitudes = fft::forward(g1);
    let scale = 1.0 / n as f64;
    amplitudes.iter_mut().for_each(|a| *a *= scale);
    let mut padded = vec![Complex64::new(0.0, 0.0); 2 * n];
    padded[..n].copy_from_slice(&amplitudes);
    fft::inverse_in_place(&mut padded);
    (-(n as isize)..n as isize)
        .map(|l| padded[l.rem_euclid(2 * n as isize) as usize])
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SiegertResidual {
    /// `g2_l - 1 - |g1_l|^2` on the g2 grid.
    pub residual: Vec<f64>,
    pub max_abs: f64,
}

/// Residual of the Gaussian-statistics relation `g2 = 1 + |g1|^2`.
///
/// `g2` must be on the g2 grid (length 2N). `g1` may be given on the same
/// grid or on the g1 grid (length N), in which case it is re-evaluated.
pub fn siegert_check(g1: &[Complex64], g2: &[f64]) -> Result<SiegertResidual> {
    let fine;
    let g1 = if g1.len() == g2.len() {
        g1
    } else if 2 * g1.len() == g2.len() {
        fine = refine_g1(g1);
        &fine
    } else {
        return Err(Error::DimensionMismatch { expected: g2.len(), got: g1.len() });
    };
    let residual: Vec<f64> = g1.iter().zip(g2).map(|(a, b)| b - 1.0 - a.norm_sqr()).collect();
    let max_abs = residual.iter().map(|r| r.abs()).fold(0.0, f64::max);
    Ok(SiegertResidual { residual, max_abs })
}

/// Per-shot Siegert residual of a single-occupancy Boson state with R atoms.
///
/// For such a state `g2 = 1 - 2/R + |g1|^2` holds at every separation, so the
/// Gaussian-statistics relation is reached only as R grows.
pub fn boson_siegert_offset(atom_count: usize) -> f64 {
    -2.0 / atom_count as f64
}

/// Phase `exp(i pi j l / N)` on the g2 grid, used by tests and the oracle.
pub fn g2_grid_phase(j: usize, l: isize, n: usize) -> f64 {
    PI * (j as isize * l).rem_euclid(2 * n as isize) as f64 / n as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Brute-force O(N^2) sums, independent of the FFT path.
    fn naive_g1(p: &[f64]) -> Vec<Complex64> {
        let n = p.len();
        (0..n)
            .map(|l| {
                p.iter()
                    .enumerate()
                    .map(|(j, &pj)| pj * Complex64::from_polar(1.0, TAU * ((j * l) % n) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    fn naive_g2(p2: &[f64], r: usize, sign: f64) -> Vec<f64> {
        let n = p2.len();
        let rf = r as f64;
        (-(n as isize)..n as isize)
            .map(|l| {
                let s: f64 = p2.iter().enumerate().map(|(j, &p)| p * g2_grid_phase(j, l, n).cos()).sum();
                (rf - 1.0) / rf * (1.0 + sign * s)
            })
            .collect()
    }

    fn random_distribution(rng: &mut ChaCha8Rng, n: usize, zero_first: bool) -> Vec<f64> {
        let mut p: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        if zero_first {
            p[0] = 0.0;
        }
        let t: f64 = p.iter().sum();
        p.iter().map(|x| x / t).collect()
    }

    #[test]
    fn basis_grids_are_matched() {
        let basis = ModeBasis::new(256, 0.5e-6, 3.0e-9).unwrap();
        assert!((basis.delta_k * basis.delta_x - TAU / 256.0).abs() < 1e-15);
        assert!((basis.delta_k * basis.delta_x2 - PI / 256.0).abs() < 1e-15);
    }

    #[test]
    fn g1_single_atom_is_pure_phasor() {
        let basis = ModeBasis::dimensionless(8);
        let state = FieldState::from_modes(8, &[3], Statistics::Boson).unwrap();
        for l in 0..8 {
            let s = l as f64 * basis.delta_x;
            let g = g1_of_state(&state, &basis, s).unwrap();
            assert!((g - Complex64::from_polar(1.0, 3.0 * s)).norm() < 1e-14);
            assert!((g.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn g1_normalization_and_two_modes() {
        let basis = ModeBasis::dimensionless(6);
        let state = FieldState::from_modes(6, &[0, 1], Statistics::Fermion).unwrap();
        assert_eq!(g1_of_state(&state, &basis, 0.0).unwrap(), Complex64::new(1.0, 0.0));
        for l in 0..6 {
            let s = l as f64 * basis.delta_x;
            let g = g1_of_state(&state, &basis, s).unwrap();
            let want = (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, basis.delta_k * s)) / 2.0;
            assert!((g - want).norm() < 1e-14);
            assert!((g.norm() - (basis.delta_k * s / 2.0).cos().abs()).abs() < 1e-14);
        }
        let empty = FieldState::from_modes(6, &[], Statistics::Boson).unwrap();
        assert!(matches!(g1_of_state(&empty, &basis, 0.0), Err(Error::EmptyField)));
    }

    #[test]
    fn g2_two_atom_laws() {
        let basis = ModeBasis::dimensionless(16);
        let boson = FieldState::from_modes(16, &[4, 5], Statistics::Boson).unwrap();
        let fermion = FieldState::from_modes(16, &[4, 5], Statistics::Fermion).unwrap();
        assert_eq!(g2_of_state(&boson, &basis, 0.0).unwrap(), 1.0);
        for l in -16..16 {
            let s = l as f64 * basis.delta_x2;
            let c = (basis.delta_k * s).cos();
            assert!((2.0 * g2_of_state(&boson, &basis, s).unwrap() - 1.0 - c).abs() < 1e-14);
            assert!((2.0 * g2_of_state(&fermion, &basis, s).unwrap() - 1.0 + c).abs() < 1e-14);
        }
        let lone = FieldState::from_modes(16, &[3], Statistics::Boson).unwrap();
        assert!(matches!(g2_of_state(&lone, &basis, 0.0), Err(Error::TooFewAtoms(1))));
    }

    #[test]
    fn g2_zero_separation_bunching_factor() {
        let basis = ModeBasis::dimensionless(128);
        for r in [2usize, 3, 10, 50, 100] {
            let modes: Vec<usize> = (0..r).collect();
            let state = FieldState::from_modes(128, &modes, Statistics::Boson).unwrap();
            let g = g2_of_state(&state, &basis, 0.0).unwrap();
            assert!((g - 2.0 * (r as f64 - 1.0) / r as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_matches_pointwise_closed_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 32;
        let basis = ModeBasis::dimensionless(n);
        for stats in [Statistics::Boson, Statistics::Fermion] {
            for _ in 0..20 {
                let shot: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.3).collect();
                let shot = Occupancy::from_sites(shot);
                if shot.atom_count() < 2 {
                    continue;
                }
                let state = FieldState::from_occupancy(&shot, stats);
                let prof = profile_of_state(&state).unwrap();
                for l in 0..n {
                    let g = g1_of_state(&state, &basis, l as f64 * basis.delta_x).unwrap();
                    assert!((prof.g1[l] - g).norm() < 1e-12);
                }
                for l in -(n as isize)..n as isize {
                    let s = l as f64 * basis.delta_x2;
                    let g2 = g2_of_state(&state, &basis, s).unwrap();
                    assert!((prof.g2_at(l).unwrap() - g2).abs() < 1e-12);
                    let g1 = g1_of_state(&state, &basis, s).unwrap();
                    assert!((prof.g1_fine[(l + n as isize) as usize] - g1).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn g1_from_p1_examples() {
        let n = 16;
        let basis = ModeBasis::dimensionless(n);
        let mut delta = vec![0.0; n];
        delta[3] = 1.0;
        let g = g1_from_p1(&delta, &basis).unwrap();
        for (l, z) in g.iter().enumerate() {
            assert!((z - Complex64::from_polar(1.0, TAU * (3 * l) as f64 / n as f64)).norm() < 1e-14);
        }

        let uniform = vec![1.0 / n as f64; n];
        let g = g1_from_p1(&uniform, &basis).unwrap();
        assert!((g[0] - 1.0).norm() < 1e-15);
        assert!(g[1..].iter().all(|z| z.norm() < 1e-15));

        let mut two = vec![0.0; n];
        two[0] = 0.5;
        two[5] = 0.5;
        let g = g1_from_p1(&two, &basis).unwrap();
        for (l, z) in g.iter().enumerate() {
            assert!((z.norm() - (PI * (5 * l) as f64 / n as f64).cos().abs()).abs() < 1e-14);
        }
        assert!(matches!(g1_from_p1(&[0.5; 16], &basis), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn g1_transform_matches_naive_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = random_distribution(&mut rng, 24, false);
        let fast = g1_from_p1(&p, &ModeBasis::dimensionless(24)).unwrap();
        for (a, b) in fast.iter().zip(naive_g1(&p)) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn p1_from_g1_examples() {
        let n = 32;
        let ones = vec![Complex64::new(1.0, 0.0); n];
        let p = p1_from_g1(&ones).unwrap().p1;
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1..].iter().all(|v| v.abs() < 1e-15));

        let phasor: Vec<Complex64> = (0..n).map(|l| Complex64::from_polar(1.0, TAU * (5 * l) as f64 / n as f64)).collect();
        let p = p1_from_g1(&phasor).unwrap().p1;
        for (j, v) in p.iter().enumerate() {
            assert!((v - if j == 5 { 1.0 } else { 0.0 }).abs() < 1e-14);
        }

        let mut bad = ones.clone();
        bad[1] = Complex64::new(1.0, 0.1);
        assert!(matches!(p1_from_g1(&bad), Err(Error::InconsistentG1(_))));
    }

    #[test]
    fn g2_from_p2_examples() {
        let n = 20;
        let basis = ModeBasis::dimensionless(n);
        let mut delta = vec![0.0; n];
        delta[1] = 1.0;
        let g2 = g2_from_p2(&delta, 2, &basis, Statistics::Boson).unwrap();
        for l in -(n as isize)..n as isize {
            let want = (basis.delta_k * l as f64 * basis.delta_x2).cos();
            assert!((2.0 * g2[(l + n as isize) as usize] - 1.0 - want).abs() < 1e-14);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for r in [2, 5, 25] {
            let p = random_distribution(&mut rng, n, true);
            let g2 = g2_from_p2(&p, r, &basis, Statistics::Boson).unwrap();
            assert!((g2[n] - 2.0 * (r as f64 - 1.0) / r as f64).abs() < 1e-14);
            for (a, b) in g2.iter().zip(naive_g2(&p, r, 1.0)) {
                assert!((a - b).abs() < 1e-14);
            }
            // Fermions: the normalized profile is the fermion transform of the Boson one.
            let gf = g2_from_p2(&p, r, &basis, Statistics::Fermion).unwrap();
            let mapped = fermion_transform(&eq13_normalized(&g2, r));
            for (a, b) in eq13_normalized(&gf, r).iter().zip(&mapped) {
                assert!((a - b).abs() < 1e-14);
            }
        }

        let mut bad = vec![0.0; n];
        bad[0] = 1.0;
        assert!(matches!(g2_from_p2(&bad, 3, &basis, Statistics::Boson), Err(Error::NonzeroSelfPair(_))));
        assert!(matches!(g2_from_p2(&delta, 1, &basis, Statistics::Boson), Err(Error::TooFewAtoms(1))));
    }

    #[test]
    fn p2_from_g2_examples() {
        let n = 16;
        let r = 4;
        let g0 = 2.0 * (r as f64 - 1.0) / r as f64;
        let flat = vec![g0; 2 * n];
        let p = p2_from_g2(&flat, r, Statistics::Boson).unwrap();
        assert!(p.degenerate);
        assert!((p.values[0] - 1.0).abs() < 1e-14);
        assert!(p.values[1..].iter().all(|v| v.abs() < 1e-14));

        let basis = ModeBasis::dimensionless(n);
        let two_atom: Vec<f64> = (-(n as isize)..n as isize)
            .map(|l| 0.5 * (1.0 + (basis.delta_k * l as f64 * basis.delta_x2).cos()))
            .collect();
        let p = p2_from_g2(&two_atom, 2, Statistics::Boson).unwrap();
        assert!(!p.degenerate);
        for (j, v) in p.values.iter().enumerate() {
            assert!((v - if j == 1 { 1.0 } else { 0.0 }).abs() < 1e-14);
        }

        let mut skew = two_atom.clone();
        skew[n + 3] += 1e-3;
        assert!(matches!(p2_from_g2(&skew, 2, Statistics::Boson), Err(Error::AsymmetricG2(_))));
    }

    #[test]
    fn fermion_transform_is_an_involution() {
        assert_eq!(fermion_transform(&[1.5, 1.0, 0.25]), vec![0.5, 1.0, 1.75]);
        let g = [0.375, 1.75, 1.0, 0.0];
        assert_eq!(fermion_transform(&fermion_transform(&g)), g.to_vec());
    }

    #[test]
    fn siegert_endpoints() {
        // |g1| = 1 predicts g2 = 2; g1 = 0 predicts g2 = 1.
        let g1 = vec![Complex64::from_polar(1.0, 0.3); 8];
        let res = siegert_check(&g1, &[2.0; 8]).unwrap();
        assert!(res.max_abs < 1e-15);
        let g1 = vec![Complex64::new(0.0, 0.0); 8];
        assert!(siegert_check(&g1, &[1.0; 8]).unwrap().max_abs == 0.0);
        assert!(siegert_check(&g1[..3], &[1.0; 8]).is_err());
    }

    #[test]
    fn siegert_single_shot_offset() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let n = 40;
        for _ in 0..10 {
            let shot = Occupancy::from_sites((0..n).map(|_| rng.random::<f64>() < 0.2).collect());
            if shot.atom_count() < 2 {
                continue;
            }
            let prof = profile_of_state(&FieldState::from_occupancy(&shot, Statistics::Boson)).unwrap();
            let res = siegert_check(&prof.g1, prof.g2.as_ref().unwrap()).unwrap();
            let off = boson_siegert_offset(shot.atom_count());
            assert!(res.residual.iter().all(|r| (r - off).abs() < 1e-12));
        }
    }

    #[test]
    fn refine_g1_is_exact_re_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let n = 12;
        let p = random_distribution(&mut rng, n, false);
        let coarse = g1_from_p1(&p, &ModeBasis::dimensionless(n)).unwrap();
        let fine = refine_g1(&coarse);
        for l in -(n as isize)..n as isize {
            let want: Complex64 = p
                .iter()
                .enumerate()
                .map(|(j, &pj)| pj * Complex64::from_polar(1.0, g2_grid_phase(j, l, n)))
                .sum();
            assert!((fine[(l + n as isize) as usize] - want).norm() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn p1_round_trip(seed in any::<u64>(), n in 2usize..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_distribution(&mut rng, n, false);
            let back = p1_from_g1(&g1_from_p1(&p, &ModeBasis::dimensionless(n)).unwrap()).unwrap();
            for (a, b) in p.iter().zip(&back.p1) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn p2_round_trip(seed in any::<u64>(), n in 2usize..200, r in 2usize..40) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_distribution(&mut rng, n, true);
            for stats in [Statistics::Boson, Statistics::Fermion] {
                let g2 = g2_from_p2(&p, r, &ModeBasis::dimensionless(n), stats).unwrap();
                let back = p2_from_g2(&g2, r, stats).unwrap();
                for (a, b) in p.iter().zip(&back.values) {
                    prop_assert!((a - b).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn g2_profile_is_even(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let shot = Occupancy::from_sites((0..30).map(|_| rng.random::<f64>() < 0.4).collect());
            prop_assume!(shot.atom_count() >= 2);
            let prof = profile_of_state(&FieldState::from_occupancy(&shot, Statistics::Boson)).unwrap();
            for l in 1..30 {
                prop_assert_eq!(prof.g2_at(l), prof.g2_at(-l));
            }
        }
    }
}
