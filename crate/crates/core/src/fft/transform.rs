use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Complex 3-D discrete Fourier transform on x-fastest data.
pub struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(dims: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dims,
            forward: dims.map(|n| planner.plan_fft_forward(n)),
            inverse: dims.map(|n| planner.plan_fft_inverse(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform, scaled so that it undoes [`Fft3::forward`].
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
        let scale = 1.0 / self.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [n0, n1, n2] = self.dims;
        assert_eq!(data.len(), n0 * n1 * n2);
        plans[0].process(data);
        let mut line = vec![Complex64::default(); n1.max(n2)];
        for k in 0..n2 {
            for i in 0..n0 {
                let at = |j: usize| i + n0 * (j + n1 * k);
                for j in 0..n1 {
                    line[j] = data[at(j)];
                }
                plans[1].process(&mut line[..n1]);
                for j in 0..n1 {
                    data[at(j)] = line[j];
                }
            }
        }
        for j in 0..n1 {
            for i in 0..n0 {
                let at = |k: usize| i + n0 * (j + n1 * k);
                for k in 0..n2 {
                    line[k] = data[at(k)];
                }
                plans[2].process(&mut line[..n2]);
                for k in 0..n2 {
                    data[at(k)] = line[k];
                }
            }
        }
    }
}

/// Signed integer frequency of index `m` on an axis of `n` points, and whether
/// it is the unpaired Nyquist index of an even axis.
pub fn frequency(m: usize, n: usize) -> (f64, bool) {
    if 2 * m == n {
        (m as f64, true)
    } else if 2 * m < n {
        (m as f64, false)
    } else {
        (m as f64 - n as f64, false)
    }
}
