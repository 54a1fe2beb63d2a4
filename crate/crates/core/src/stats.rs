//! Compensated accumulators used by the ensemble reductions.

use num_complex::Complex64;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums a slice with compensation.
pub fn compensated_sum(xs: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Per-index mean and standard error of a stream of equal-length real vectors.
#[derive(Debug, Clone)]
pub struct VectorMoments {
    count: usize,
    sum: Vec<CompensatedSum>,
    sum_sq: Vec<CompensatedSum>,
}

impl VectorMoments {
    pub fn new(len: usize) -> Self {
        Self {
            count: 0,
            sum: vec![CompensatedSum::default(); len],
            sum_sq: vec![CompensatedSum::default(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.sum.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sum.is_empty()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn push(&mut self, xs: &[f64]) {
        assert_eq!(xs.len(), self.sum.len(), "VectorMoments: length mismatch");
        self.count += 1;
        for ((s, q), &x) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(xs) {
            s.add(x);
            q.add(x * x);
        }
    }

    pub fn merge(&mut self, other: &VectorMoments) {
        assert_eq!(other.len(), self.len(), "VectorMoments: length mismatch");
        self.count += other.count;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            a.merge(b);
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            a.merge(b);
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        let n = self.count as f64;
        self.sum.iter().map(|s| s.value() / n).collect()
    }

    /// Standard error of the mean, sqrt(s^2 / n) with the unbiased sample variance.
    /// Zero when fewer than two samples were pushed.
    pub fn stderr(&self) -> Vec<f64> {
        if self.count < 2 {
            return vec![0.0; self.len()];
        }
        let n = self.count as f64;
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(s, q)| {
                let mean = s.value() / n;
                let var = ((q.value() - n * mean * mean) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            })
            .collect()
    }
}

/// Complex counterpart of [`VectorMoments`]; real and imaginary parts are
/// tracked independently.
#[derive(Debug, Clone)]
pub struct ComplexMoments {
    re: VectorMoments,
    im: VectorMoments,
    scratch_re: Vec<f64>,
    scratch_im: Vec<f64>,
}

impl ComplexMoments {
    pub fn new(len: usize) -> Self {
        Self {
            re: VectorMoments::new(len),
            im: VectorMoments::new(len),
            scratch_re: vec![0.0; len],
            scratch_im: vec![0.0; len],
        }
    }

    pub fn push(&mut self, zs: &[Complex64]) {
        for (i, z) in zs.iter().enumerate() {
            self.scratch_re[i] = z.re;
            self.scratch_im[i] = z.im;
        }
        self.re.push(&self.scratch_re);
        self.im.push(&self.scratch_im);
    }

    pub fn merge(&mut self, other: &ComplexMoments) {
        self.re.merge(&other.re);
        self.im.merge(&other.im);
    }

    pub fn count(&self) -> usize {
        self.re.count()
    }

    pub fn mean(&self) -> Vec<Complex64> {
        self.re
            .mean()
            .into_iter()
            .zip(self.im.mean())
            .map(|(r, i)| Complex64::new(r, i))
            .collect()
    }

    /// Standard errors of the real and imaginary parts, packed as `re + i im`.
    pub fn stderr(&self) -> Vec<Complex64> {
        self.re
            .stderr()
            .into_iter()
            .zip(self.im.stderr())
            .map(|(r, i)| Complex64::new(r, i))
            .collect()
    }
}
