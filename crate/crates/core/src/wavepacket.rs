//! Single-atom sector: far-field free expansion of a local wave function,
//! mixed-state time-of-flight densities and double-well fringes.
//!
//! All lengths are SI meters. The far-field propagator is
//!
//! `Psi(x) = (sqrt(-i)/L) exp(i pi x^2 / L^2) F[Phi](x / L^2)`,
//!
//! with `F[f](u) = int f(x') exp(-2 pi i u x') dx'` and `L^2 = h t / M`.
//! A packet centered at `x'_i` contributes the linear phase
//! `exp(-2 pi i x x'_i / L^2)` through the shift theorem.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::constants::PLANCK;
use crate::error::{Error, Result};
use crate::fft;
use crate::lattice::LatticeConfig;

const NORM_TOL: f64 = 1e-10;
const MAX_PHASE_STEP: f64 = PI / 4.0;
const FAR_FIELD_WARN: f64 = 0.1;
const DEFAULT_PADDING: usize = 4;
/// Relative rms fit residual above which a fringe fit is rejected.
const FIT_MISMATCH: f64 = 1e-3;

/// Time-of-flight geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionParams {
    /// Atomic mass M, kg.
    pub mass: f64,
    /// Flight time t - t', s.
    pub flight_time: f64,
    /// Effective length squared `L^2 = h (t - t') / M`, m^2.
    pub l_squared: f64,
}

impl ExpansionParams {
    pub fn new(mass: f64, flight_time: f64) -> Result<Self> {
        if !(mass > 0.0 && flight_time > 0.0) {
            return Err(Error::InvalidConfig("mass and flight_time must be positive".into()));
        }
        Ok(Self { mass, flight_time, l_squared: PLANCK * flight_time / mass })
    }

    /// Parameters with a prescribed `L^2`, for scaled-unit calculations.
    /// Mass and flight time are set so that `h t / M = L^2`.
    pub fn scaled(l_squared: f64) -> Result<Self> {
        if !(l_squared > 0.0) {
            return Err(Error::InvalidConfig("l_squared must be positive".into()));
        }
        Ok(Self { mass: PLANCK, flight_time: l_squared, l_squared })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.l_squared > 0.0 && self.mass > 0.0 && self.flight_time > 0.0) {
            return Err(Error::InvalidConfig("expansion parameters must be positive".into()));
        }
        let expected = PLANCK * self.flight_time / self.mass;
        if ((self.l_squared - expected) / expected).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "l_squared {:e} inconsistent with h t / M = {expected:e}",
                self.l_squared
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.l_squared.sqrt()
    }

    /// Fringe-envelope width `sigma = L^2 / (4 pi sigma')`.
    pub fn envelope_width(&self, packet_width: f64) -> f64 {
        self.l_squared / (4.0 * PI * packet_width)
    }

    /// Double-well fringe spacing `L^2 / delta_xi`.
    pub fn fringe_spacing(&self, well_separation: f64) -> f64 {
        self.l_squared / well_separation
    }
}

/// Uniform grid in the detection plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionGrid {
    pub start: f64,
    pub spacing: f64,
    pub len: usize,
    pub l_squared: f64,
}

impl DetectionGrid {
    pub fn new(start: f64, spacing: f64, len: usize, l_squared: f64) -> Result<Self> {
        if !(spacing > 0.0 && l_squared > 0.0) || len == 0 {
            return Err(Error::InvalidConfig("detection grid needs positive spacing and length".into()));
        }
        Ok(Self { start, spacing, len, l_squared })
    }

    /// `len` points symmetric about zero spanning `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, len: usize, l_squared: f64) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidConfig("detection grid needs at least two points".into()));
        }
        let spacing = 2.0 * half_width / (len - 1) as f64;
        Self::new(-half_width, spacing, len, l_squared)
    }

    pub fn position(&self, i: usize) -> f64 {
        self.start + i as f64 * self.spacing
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.position(i)).collect()
    }

    /// Reciprocal coordinate `u = x / L^2`.
    pub fn reciprocal(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.position(i) / self.l_squared).collect()
    }
}

/// Local wave function `Phi(x' - x'_i)` sampled on a uniform grid centered
/// on `center`: sample `k` sits at `center + (k - n/2) spacing`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalWavepacket {
    pub spacing: f64,
    pub amplitudes: Vec<Complex64>,
    pub center: f64,
    pub width: f64,
}

impl LocalWavepacket {
    /// Normalizes `amplitudes` to unit norm and checks the grid invariants.
    pub fn from_samples(amplitudes: Vec<Complex64>, spacing: f64, center: f64, width: f64) -> Result<Self> {
        let n = amplitudes.len();
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidConfig(format!("wavepacket grid length {n} is not a power of two")));
        }
        if !(spacing > 0.0 && width > 0.0) {
            return Err(Error::InvalidConfig("wavepacket spacing and width must be positive".into()));
        }
        if (n / 2) as f64 * spacing < 8.0 * width {
            return Err(Error::InvalidConfig("wavepacket grid must span 8 widths each side".into()));
        }
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * spacing;
        if norm <= 0.0 {
            return Err(Error::ZeroDistribution);
        }
        let scale = norm.sqrt().recip();
        let amplitudes = amplitudes.into_iter().map(|a| a * scale).collect();
        Ok(Self { spacing, amplitudes, center, width })
    }

    /// Gaussian `(2 pi w^2)^{-1/4} exp(-(x' - x'_i)^2 / (4 w^2))`, whose
    /// density has standard deviation `width`.
    pub fn gaussian(width: f64, spacing: f64, len: usize, center: f64) -> Result<Self> {
        let amps = (0..len)
            .map(|k| {
                let x = (k as f64 - (len / 2) as f64) * spacing;
                Complex64::new((-x * x / (4.0 * width * width)).exp(), 0.0)
            })
            .collect();
        Self::from_samples(amps, spacing, center, width)
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.spacing
    }

    /// Same shape at another center.
    pub fn recentered(&self, center: f64) -> Self {
        Self { center, ..self.clone() }
    }
}

/// Wave function in the detection plane.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectedField {
    pub grid: DetectionGrid,
    pub psi: Vec<Complex64>,
    /// `S^2 / L^2` for a source extent `S` of eight packet widths; the far
    /// field requires this to be small.
    pub far_field_ratio: f64,
}

impl DetectedField {
    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing
    }
}

/// Source-extent to fringe-scale ratio `S / d_f = S^2 / L^2`.
pub fn far_field_ratio(extent: f64, params: &ExpansionParams) -> f64 {
    extent * extent / params.l_squared
}

/// Far-field expansion of `psi0` with the default zero-padding factor.
pub fn free_expand(psi0: &LocalWavepacket, params: &ExpansionParams) -> Result<DetectedField> {
    free_expand_padded(psi0, params, DEFAULT_PADDING)
}

/// Far-field expansion with an explicit zero-padding factor (power of two,
/// at least 4). The detection grid has `padding * n` points of spacing
/// `L^2 / (padding * n * dx')`, centered on `x = 0`.
pub fn free_expand_padded(psi0: &LocalWavepacket, params: &ExpansionParams, padding: usize) -> Result<DetectedField> {
    if padding < DEFAULT_PADDING || !padding.is_power_of_two() {
        return Err(Error::InvalidConfig(format!("padding factor {padding} must be a power of two >= 4")));
    }
    let n = psi0.len();
    let total = n * padding;
    let dx = psi0.spacing;
    let l2 = params.l_squared;

    let step = PI * l2 / (total as f64 * dx * dx);
    if step > MAX_PHASE_STEP {
        return Err(Error::CoarseGrid(step));
    }
    let ratio = far_field_ratio(8.0 * psi0.width, params);
    if ratio > FAR_FIELD_WARN {
        log::warn!("free_expand: source extent is not in the far field (S/d_f = {ratio:.3})");
    }

    let mut buf = vec![Complex64::new(0.0, 0.0); total];
    buf[..n].copy_from_slice(&psi0.amplitudes);
    fft::forward_in_place(&mut buf);

    let du = 1.0 / (total as f64 * dx);
    let grid = DetectionGrid::new(-((total / 2) as f64) * du * l2, du * l2, total, l2)?;
    let prefactor = Complex64::from_polar(1.0 / params.length(), -PI / 4.0) * dx;
    let half = (total / 2) as isize;
    let psi = (-half..half)
        .map(|m| {
            let spectrum = buf[m.rem_euclid(total as isize) as usize];
            let u = m as f64 * du;
            let x = u * l2;
            // Sample k sits at relative position (k - n/2) dx.
            let offset = PI * (m * n as isize).rem_euclid(2 * total as isize) as f64 / total as f64;
            let phase = PI * x * x / l2 - TAU * u * psi0.center + offset;
            prefactor * spectrum * Complex64::from_polar(1.0, phase)
        })
        .collect();
    Ok(DetectedField { grid, psi, far_field_ratio: ratio })
}

/// Closed-form far field of [`LocalWavepacket::gaussian`] at `x`.
pub fn gaussian_far_field(x: f64, width: f64, center: f64, params: &ExpansionParams) -> Complex64 {
    let l2 = params.l_squared;
    let u = x / l2;
    let transform = (TAU * width * width).powf(-0.25)
        * (4.0 * PI).sqrt()
        * width
        * (-4.0 * PI * PI * width * width * u * u).exp();
    Complex64::from_polar(transform / params.length(), PI * x * x / l2 - TAU * u * center - PI / 4.0)
}

/// Mixed-state TOF density `n(x) = sum_j p_j |Psi_j(x)|^2`. All components
/// must share grid length and spacing so they land on a common detection
/// grid.
pub fn tof_density(
    components: &[(f64, LocalWavepacket)],
    params: &ExpansionParams,
) -> Result<(DetectionGrid, Vec<f64>)> {
    let (_, first) = components.first().ok_or(Error::NoShots)?;
    if components.iter().any(|(p, _)| !(*p >= 0.0)) {
        return Err(Error::InvalidConfig("mixture weights must be non-negative".into()));
    }
    let total: f64 = components.iter().map(|(p, _)| p).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(total));
    }
    let mut grid = None;
    let mut density = Vec::new();
    for (p, packet) in components {
        if packet.len() != first.len() || packet.spacing != first.spacing {
            return Err(Error::DimensionMismatch { expected: first.len(), got: packet.len() });
        }
        let field = free_expand(packet, params)?;
        if density.is_empty() {
            density = vec![0.0; field.psi.len()];
        }
        for (d, z) in density.iter_mut().zip(&field.psi) {
            *d += p * z.norm_sqr();
        }
        grid = Some(field.grid);
    }
    Ok((grid.expect("non-empty component list"), density))
}

/// Coherent superposition of one Gaussian packet in each of two wells:
/// `c1 Phi(x' - dxi/2) + exp(i phi) c2 Phi(x' + dxi/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellState {
    pub c1: f64,
    pub c2: f64,
    pub phi: f64,
    pub well_separation: f64,
    pub packet_width: f64,
}

impl DoubleWellState {
    pub fn new(c1: f64, c2: f64, phi: f64, well_separation: f64, packet_width: f64) -> Result<Self> {
        let s = Self { c1, c2, phi, well_separation, packet_width };
        s.validate()?;
        Ok(s)
    }

    /// State with fringe contrast `2 c1 c2 = contrast`.
    pub fn with_contrast(contrast: f64, phi: f64, well_separation: f64, packet_width: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&contrast) {
            return Err(Error::InvalidConfig(format!("contrast {contrast} outside [0, 1]")));
        }
        let s = (1.0 - contrast * contrast).sqrt();
        let c1 = (0.5 * (1.0 + s)).sqrt();
        let c2 = (0.5 * (1.0 - s)).sqrt();
        Self::new(c1, c2, phi, well_separation, packet_width)
    }

    pub fn validate(&self) -> Result<()> {
        if (self.c1 * self.c1 + self.c2 * self.c2 - 1.0).abs() > NORM_TOL || self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(Error::InvalidConfig("double-well amplitudes need c1, c2 >= 0 and c1^2 + c2^2 = 1".into()));
        }
        if !(self.well_separation > 0.0 && self.packet_width > 0.0) {
            return Err(Error::InvalidConfig("well separation and packet width must be positive".into()));
        }
        Ok(())
    }

    pub fn contrast(&self) -> f64 {
        2.0 * self.c1 * self.c2
    }

    /// Squared norm of the two-packet state, including the overlap term.
    pub fn norm_squared(&self) -> f64 {
        let overlap = (-(self.well_separation * self.well_separation) / (8.0 * self.packet_width * self.packet_width)).exp();
        1.0 + self.contrast() * self.phi.cos() * overlap
    }
}

/// Far-field density of a double-well state on `grid`:
/// a Gaussian envelope of width `sigma` times
/// `1 + 2 c1 c2 cos(2 pi x dxi / L^2 + phi)`, normalized to unit integral.
pub fn double_well_density(state: &DoubleWellState, params: &ExpansionParams, grid: &DetectionGrid) -> Result<Vec<f64>> {
    state.validate()?;
    let sigma = params.envelope_width(state.packet_width);
    let k = TAU * state.well_separation / params.l_squared;
    let scale = 1.0 / ((TAU).sqrt() * sigma * state.norm_squared());
    Ok(grid
        .positions()
        .into_iter()
        .map(|x| {
            let env = (-0.5 * (x / sigma).powi(2)).exp();
            // full contrast can round to -0 at the fringe minima
            (scale * env * (1.0 + state.contrast() * (k * x + state.phi).cos())).max(0.0)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    /// Fitted `2 c1 c2`.
    pub contrast: f64,
    /// Relative phase in `[0, 2 pi)`; `None` when the contrast vanishes.
    pub phase: Option<f64>,
    /// Fitted envelope width, m.
    pub envelope_width: f64,
    /// Root-mean-square residual relative to the peak density.
    pub relative_residual: f64,
}

/// Least-squares fit of `A exp(-x^2 / 2 s^2) (1 + C cos(k x + phi))` with
/// `k = 2 pi dxi / L^2` known. For fixed `s` the model is linear in
/// `(a, b, c) = A (1, C cos phi, -C sin phi)`; the envelope width is found
/// by a one-dimensional search on the profiled residual.
pub fn extract_fringe_params(
    density: &[f64],
    grid: &DetectionGrid,
    params: &ExpansionParams,
    well_separation: f64,
) -> Result<FringeFit> {
    if density.len() != grid.len {
        return Err(Error::DimensionMismatch { expected: grid.len, got: density.len() });
    }
    if density.len() < 4 {
        return Err(Error::InvalidConfig("fringe fit needs at least four samples".into()));
    }
    if density.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::InvalidConfig("density must be non-negative".into()));
    }
    let xs = grid.positions();
    let k = TAU * well_separation / params.l_squared;
    let peak = density.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Err(Error::ZeroDistribution);
    }

    let total: f64 = density.iter().sum();
    let mean: f64 = density.iter().zip(&xs).map(|(d, x)| d * x).sum::<f64>() / total;
    let var: f64 = density.iter().zip(&xs).map(|(d, x)| d * (x - mean).powi(2)).sum::<f64>() / total;
    let s0 = var.sqrt().max(grid.spacing);

    let objective = |log_s: f64| linear_fringe_fit(density, &xs, k, log_s.exp()).1;
    let log_s = golden_section(objective, (0.2 * s0).ln(), (5.0 * s0).ln(), 1e-12);
    let s = log_s.exp();
    let ([a, b, c], rss) = linear_fringe_fit(density, &xs, k, s);

    let relative_residual = (rss / density.len() as f64).sqrt() / peak;
    if relative_residual > FIT_MISMATCH || a <= 0.0 {
        return Err(Error::ModelMismatch(relative_residual));
    }
    let contrast = (b * b + c * c).sqrt() / a;
    let phase = (contrast > 1e-8).then(|| (-c).atan2(b).rem_euclid(TAU));
    Ok(FringeFit { contrast, phase, envelope_width: s, relative_residual })
}

/// Linear least squares for `env (a + b cos kx + c sin kx)`; returns the
/// coefficients and residual sum of squares.
fn linear_fringe_fit(density: &[f64], xs: &[f64], k: f64, s: f64) -> ([f64; 3], f64) {
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    let basis = |x: f64| {
        let env = (-0.5 * (x / s).powi(2)).exp();
        [env, env * (k * x).cos(), env * (k * x).sin()]
    };
    for (&d, &x) in density.iter().zip(xs) {
        let f = basis(x);
        for i in 0..3 {
            atb[i] += f[i] * d;
            for j in 0..3 {
                ata[i][j] += f[i] * f[j];
            }
        }
    }
    let coef = solve3(ata, atb).unwrap_or([0.0; 3]);
    let rss = density
        .iter()
        .zip(xs)
        .map(|(&d, &x)| {
            let f = basis(x);
            let m = coef[0] * f[0] + coef[1] * f[1] + coef[2] * f[2];
            (d - m).powi(2)
        })
        .sum();
    (coef, rss)
}

/// Gaussian elimination with partial pivoting for a 3x3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() <= 1e-14 * scale {
            // Degenerate column (e.g. sin kx vanishing on a symmetric grid with k = 0).
            a[col] = [0.0; 3];
            a[col][col] = 1.0;
            b[col] = 0.0;
            continue;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    /// Coincidence-count period `L^2 / w'`, m.
    pub coincidence_period: f64,
    /// Fringe-envelope width `L^2 / (4 pi sigma')`, m.
    pub envelope_width: f64,
}

pub fn resolution_figures(config: &LatticeConfig, packet_width: f64, params: &ExpansionParams) -> Result<Resolution> {
    if !(config.lattice_const > 0.0 && packet_width > 0.0 && params.l_squared > 0.0) {
        return Err(Error::InvalidConfig("resolution needs positive lengths".into()));
    }
    Ok(Resolution {
        coincidence_period: params.l_squared / config.lattice_const,
        envelope_width: params.envelope_width(packet_width),
    })
}

/// Detector offset along the fall direction equivalent to a detection delay
/// `delta_t` after falling for `flight_time`: `g t dt`.
pub fn gravity_delay_map(flight_time: f64, gravity: f64, delta_t: f64) -> Result<f64> {
    if !(flight_time > 0.0) {
        return Err(Error::InvalidConfig("flight_time must be positive".into()));
    }
    Ok(gravity * flight_time * delta_t)
}

/// Writes `x,re,im,abs2` rows; `header` lines are emitted as `# ` comments.
pub fn write_field_csv<W: Write>(mut out: W, header: &[String], grid: &DetectionGrid, psi: &[Complex64]) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "x,re,im,abs2")?;
    for (i, z) in psi.iter().enumerate() {
        writeln!(out, "{:e},{:e},{:e},{:e}", grid.position(i), z.re, z.im, z.norm_sqr())?;
    }
    Ok(())
}

/// Density variant of [`write_field_csv`]: the amplitude columns are empty.
pub fn write_density_csv<W: Write>(mut out: W, header: &[String], grid: &DetectionGrid, density: &[f64]) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    writeln!(out, "x,re,im,abs2")?;
    for (i, d) in density.iter().enumerate() {
        writeln!(out, "{:e},,,{:e}", grid.position(i), d)?;
    }
    Ok(())
}
