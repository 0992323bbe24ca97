//! Unnormalized 3D complex FFT on an `n^3` cube, row-major with the last
//! index contiguous.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft3 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    /// `X[k] = sum_j x[j] exp(-i k.x_j)`, no scaling.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// `x[j] = sum_k X[k] exp(+i k.x_j)`, no scaling.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
    }

    fn run(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "buffer does not match grid");
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // last axis: contiguous lines
        plan.process_with_scratch(data, &mut scratch);

        let mut slab = vec![Complex64::default(); n * n];
        // middle axis
        for i0 in 0..n {
            let base = i0 * n * n;
            for i1 in 0..n {
                for i2 in 0..n {
                    slab[i2 * n + i1] = data[base + i1 * n + i2];
                }
            }
            plan.process_with_scratch(&mut slab, &mut scratch);
            for i1 in 0..n {
                for i2 in 0..n {
                    data[base + i1 * n + i2] = slab[i2 * n + i1];
                }
            }
        }
        // first axis
        for i1 in 0..n {
            for i0 in 0..n {
                let row = (i0 * n + i1) * n;
                for i2 in 0..n {
                    slab[i2 * n + i0] = data[row + i2];
                }
            }
            plan.process_with_scratch(&mut slab, &mut scratch);
            for i0 in 0..n {
                let row = (i0 * n + i1) * n;
                for i2 in 0..n {
                    data[row + i2] = slab[i2 * n + i0];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(n: usize, x: &[Complex64], sign: f64) -> Vec<Complex64> {
        let w = 2.0 * std::f64::consts::PI / n as f64;
        let mut out = vec![Complex64::default(); n * n * n];
        for k0 in 0..n {
            for k1 in 0..n {
                for k2 in 0..n {
                    let mut acc = Complex64::default();
                    for j0 in 0..n {
                        for j1 in 0..n {
                            for j2 in 0..n {
                                let ph = sign * w * ((k0 * j0 + k1 * j1 + k2 * j2) % n) as f64;
                                acc += x[(j0 * n + j1) * n + j2] * Complex64::from_polar(1.0, ph);
                            }
                        }
                    }
                    out[(k0 * n + k1) * n + k2] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 4;
        let x: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let fft = Fft3::new(n);
        let mut f = x.clone();
        fft.forward(&mut f);
        let reference = naive_dft(n, &x, -1.0);
        for (a, b) in f.iter().zip(&reference) {
            assert!((a - b).norm() < 1e-12);
        }
        let mut g = x.clone();
        fft.inverse(&mut g);
        let reference = naive_dft(n, &x, 1.0);
        for (a, b) in g.iter().zip(&reference) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
