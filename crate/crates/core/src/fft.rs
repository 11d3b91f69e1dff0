//! Internal 2D FFT engine with cached plans and reusable scratch space.
//!
//! Coefficients follow the convention `c_k = (1/(nx*ny)) * sum g * exp(-i k.x)`,
//! so a unit-amplitude cosine mode carries a coefficient pair of magnitude 1/2
//! and synthesis is the plain unnormalized inverse transform.

use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

/// Plans and buffers for repeated transforms on one `nx x ny` grid.
///
/// Storage is row-major with x as the row index: entry `r*ny + c` holds the
/// value at x-index `r`, y-index `c`.
pub(crate) struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    flipped: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = planner().lock().expect("fft planner poisoned");
        let fwd_x = planner.plan_fft_forward(nx);
        let inv_x = planner.plan_fft_inverse(nx);
        let fwd_y = planner.plan_fft_forward(ny);
        let inv_y = planner.plan_fft_inverse(ny);
        let scratch_len = fwd_x
            .get_inplace_scratch_len()
            .max(inv_x.get_inplace_scratch_len())
            .max(fwd_y.get_inplace_scratch_len())
            .max(inv_y.get_inplace_scratch_len());
        Fft2 {
            nx,
            ny,
            fwd_x,
            inv_x,
            fwd_y,
            inv_y,
            scratch: vec![Complex64::default(); scratch_len],
            flipped: vec![Complex64::default(); nx * ny],
        }
    }

    /// Grid values to normalized coefficients, in place.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.nx * self.ny);
        self.fwd_y.process_with_scratch(data, &mut self.scratch);
        self.transpose_into_flipped(data);
        self.fwd_x
            .process_with_scratch(&mut self.flipped, &mut self.scratch);
        self.transpose_from_flipped(data);
        let scale = 1.0 / (self.nx * self.ny) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    /// Normalized coefficients to grid values, in place.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.nx * self.ny);
        self.transpose_into_flipped(data);
        self.inv_x
            .process_with_scratch(&mut self.flipped, &mut self.scratch);
        self.transpose_from_flipped(data);
        self.inv_y.process_with_scratch(data, &mut self.scratch);
    }

    fn transpose_into_flipped(&mut self, data: &[Complex64]) {
        for r in 0..self.nx {
            let row = &data[r * self.ny..(r + 1) * self.ny];
            for (c, v) in row.iter().enumerate() {
                self.flipped[c * self.nx + r] = *v;
            }
        }
    }

    fn transpose_from_flipped(&self, data: &mut [Complex64]) {
        for c in 0..self.ny {
            let row = &self.flipped[c * self.nx..(c + 1) * self.nx];
            for (r, v) in row.iter().enumerate() {
                data[r * self.ny + c] = *v;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forward_recovers_single_mode_coefficients() {
        let (nx, ny) = (8, 16);
        let mut data = vec![Complex64::default(); nx * ny];
        // cos at lattice (1, 2) plus sin at (0, 3)
        for p in 0..nx {
            for q in 0..ny {
                let x = 2.0 * std::f64::consts::PI * p as f64 / nx as f64;
                let y = 2.0 * std::f64::consts::PI * q as f64 / ny as f64;
                data[p * ny + q] = Complex64::new((x + 2.0 * y).cos() + (3.0 * y).sin(), 0.0);
            }
        }
        let mut fft = Fft2::new(nx, ny);
        fft.forward(&mut data);
        let at = |r: usize, c: usize| data[r * ny + c];
        assert!((at(1, 2) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((at(nx - 1, ny - 2) - Complex64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((at(0, 3) - Complex64::new(0.0, -0.5)).norm() < 1e-12);
        assert!((at(0, ny - 3) - Complex64::new(0.0, 0.5)).norm() < 1e-12);
    }

    #[test]
    fn round_trip_is_identity() {
        let (nx, ny) = (16, 8);
        let mut data: Vec<Complex64> = (0..nx * ny)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), 0.0))
            .collect();
        let original = data.clone();
        let mut fft = Fft2::new(nx, ny);
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&original) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
