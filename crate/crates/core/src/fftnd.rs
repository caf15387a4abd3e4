//! Separable n-dimensional FFTs on row-major grids (last axis fastest).

pub use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Unnormalized forward (`e^{-2πi}`) or inverse (`e^{+2πi}`) transform over `dims`.
pub fn fftn(data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let mut planner = FftPlanner::new();
    fftn_with(&mut planner, data, dims, inverse);
}

pub fn fftn_with(planner: &mut FftPlanner<f64>, data: &mut [Complex64], dims: &[usize], inverse: bool) {
    let total: usize = dims.iter().product();
    assert_eq!(total, data.len(), "grid size mismatch");
    let mut stride = 1;
    for axis in (0..dims.len()).rev() {
        let n = dims[axis];
        let fft: Arc<dyn Fft<f64>> = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        if stride == 1 {
            fft.process(data);
        } else {
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let block = n * stride;
            for start in (0..total).step_by(block) {
                for off in 0..stride {
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[start + off + i * stride];
                    }
                    fft.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        data[start + off + i * stride] = *v;
                    }
                }
            }
        }
        stride *= n;
    }
}
