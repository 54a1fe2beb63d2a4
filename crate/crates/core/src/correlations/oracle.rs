//! Brute-force Fock-space evaluation of g1 and g2.
//!
//! Builds dense annihilation matrices on the truncated space of at most one
//! quantum per mode (dimension `2^N`), forms the detector operator
//! `b(x) = N^{-1/2} sum_j a_j exp(i k_j x)` and takes the expectation values
//! `<b1^+ b2>` and `<b1^+ b2^+ b2 b1>` literally. Fermion signs follow the
//! Jordan-Wigner ordering. Truncation does not change normally ordered
//! expectations of single-occupancy states, since every operator product
//! annihilates before it creates.
//!
//! Intended for `N <= 8`; cost grows as `8^N`.

use num_complex::Complex64;

use super::{FieldState, ModeBasis};
use crate::error::{Error, Result};
use crate::lattice::Statistics;

const MAX_MODES: usize = 10;

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone)]
struct Matrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl Matrix {
    fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] }
    }

    fn at(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[row * self.dim + col] = v;
    }

    fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.set(c, r, self.at(r, c).conj());
            }
        }
        out
    }

    fn mul(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for k in 0..n {
                let a = self.at(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..n {
                    out.data[r * n + c] += a * other.at(k, c);
                }
            }
        }
        out
    }

    fn scaled_add(&mut self, other: &Self, s: Complex64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }
}

/// Operator algebra for N modes with Boson or Fermion exchange signs.
pub struct FockOracle {
    n_modes: usize,
    statistics: Statistics,
    basis: ModeBasis,
    annihilators: Vec<Matrix>,
}

impl FockOracle {
    pub fn new(basis: ModeBasis, statistics: Statistics) -> Result<Self> {
        let n = basis.n_modes;
        if n > MAX_MODES {
            return Err(Error::InvalidConfig(format!("Fock oracle limited to {MAX_MODES} modes, got {n}")));
        }
        let dim = 1usize << n;
        let annihilators = (0..n)
            .map(|j| {
                let mut a = Matrix::zeros(dim);
                for state in 0..dim {
                    if state & (1 << j) == 0 {
                        continue;
                    }
                    let sign = match statistics {
                        Statistics::Boson => 1.0,
                        Statistics::Fermion => {
                            if (state & ((1 << j) - 1)).count_ones() % 2 == 0 {
                                1.0
                            } else {
                                -1.0
                            }
                        }
                    };
                    a.set(state ^ (1 << j), state, Complex64::new(sign, 0.0));
                }
                a
            })
            .collect();
        Ok(Self { n_modes: n, statistics, basis, annihilators })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    fn detector(&self, x: f64) -> Matrix {
        let dim = 1usize << self.n_modes;
        let mut b = Matrix::zeros(dim);
        let norm = 1.0 / (self.n_modes as f64).sqrt();
        for (j, a) in self.annihilators.iter().enumerate() {
            b.scaled_add(a, Complex64::from_polar(norm, self.basis.wavenumber(j) * x));
        }
        b
    }

    /// g1 and g2 for every basis state at detectors `-s/2` and `s/2`.
    /// Entry `m` belongs to the state whose bit `j` is the occupation of
    /// mode `j`; undefined values (too few atoms) are `None`.
    pub fn table(&self, separation: f64) -> OracleTable {
        let b1 = self.detector(-0.5 * separation);
        let b2 = self.detector(0.5 * separation);
        let (b1d, b2d) = (b1.adjoint(), b2.adjoint());
        let n11 = b1d.mul(&b1);
        let n22 = b2d.mul(&b2);
        let g1op = b1d.mul(&b2);
        let g2op = b1d.mul(&b2d).mul(&b2).mul(&b1);

        let dim = 1usize << self.n_modes;
        let mut g1 = Vec::with_capacity(dim);
        let mut g2 = Vec::with_capacity(dim);
        for m in 0..dim {
            let d1 = n11.at(m, m).re;
            let d2 = n22.at(m, m).re;
            let atoms = m.count_ones();
            g1.push((atoms >= 1).then(|| g1op.at(m, m) / (d1 * d2).sqrt()));
            g2.push((atoms >= 2).then(|| g2op.at(m, m).re / (d1 * d2)));
        }
        OracleTable { separation, g1, g2 }
    }

    /// Evaluates a single state at one separation.
    pub fn evaluate(&self, state: &FieldState, separation: f64) -> Result<(Complex64, Option<f64>)> {
        if state.n_modes() != self.n_modes {
            return Err(Error::DimensionMismatch { expected: self.n_modes, got: state.n_modes() });
        }
        let index = state_index(&state.occupations);
        let table = self.table(separation);
        let g1 = table.g1[index].ok_or(Error::EmptyField)?;
        Ok((g1, table.g2[index]))
    }
}

/// Bitmask index of an occupation vector (bit `j` = mode `j`).
pub fn state_index(occupations: &[bool]) -> usize {
    occupations.iter().enumerate().filter(|(_, &o)| o).map(|(j, _)| 1usize << j).sum()
}

#[derive(Debug, Clone)]
pub struct OracleTable {
    pub separation: f64,
    pub g1: Vec<Option<Complex64>>,
    pub g2: Vec<Option<f64>>,
}
