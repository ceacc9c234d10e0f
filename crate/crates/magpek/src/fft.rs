//! Minimal 3D complex FFT on x-fastest arrays, axis by axis via rustfft.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft3 {
    n: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(n: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = [
            planner.plan_fft_forward(n[0]),
            planner.plan_fft_forward(n[1]),
            planner.plan_fft_forward(n[2]),
        ];
        let inv = [
            planner.plan_fft_inverse(n[0]),
            planner.plan_fft_inverse(n[1]),
            planner.plan_fft_inverse(n[2]),
        ];
        Self { n, fwd, inv }
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn apply_axis(&self, data: &mut [Complex64], axis: usize, forward: bool) {
        let [nx, ny, nz] = self.n;
        let plan = if forward { &self.fwd[axis] } else { &self.inv[axis] };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        match axis {
            0 => {
                for line in data.chunks_exact_mut(nx) {
                    plan.process_with_scratch(line, &mut scratch);
                }
            }
            1 => {
                let mut buf = vec![Complex64::new(0.0, 0.0); ny];
                for iz in 0..nz {
                    for ix in 0..nx {
                        let base = ix + nx * ny * iz;
                        for iy in 0..ny {
                            buf[iy] = data[base + nx * iy];
                        }
                        plan.process_with_scratch(&mut buf, &mut scratch);
                        for iy in 0..ny {
                            data[base + nx * iy] = buf[iy];
                        }
                    }
                }
            }
            2 => {
                let mut buf = vec![Complex64::new(0.0, 0.0); nz];
                let plane = nx * ny;
                for iy in 0..ny {
                    for ix in 0..nx {
                        let base = ix + nx * iy;
                        for iz in 0..nz {
                            buf[iz] = data[base + plane * iz];
                        }
                        plan.process_with_scratch(&mut buf, &mut scratch);
                        for iz in 0..nz {
                            data[base + plane * iz] = buf[iz];
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// In-place forward transform (no normalization).
    pub fn forward(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        for axis in 0..3 {
            self.apply_axis(data, axis, true);
        }
    }

    /// In-place inverse transform, normalized by 1/N.
    pub fn inverse(&self, data: &mut [Complex64]) {
        debug_assert_eq!(data.len(), self.len());
        for axis in 0..3 {
            self.apply_axis(data, axis, false);
        }
        let scale = 1.0 / self.len() as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_recovers_input() {
        let n = [4usize, 6, 5];
        let fft = Fft3::new(n);
        let orig: Vec<Complex64> = (0..fft.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut data = orig.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_is_a_single_bin() {
        let n = [8usize, 8, 8];
        let fft = Fft3::new(n);
        let (kx, ky, kz) = (2usize, 5, 7);
        let mut data = vec![Complex64::new(0.0, 0.0); fft.len()];
        for iz in 0..8 {
            for iy in 0..8 {
                for ix in 0..8 {
                    let phase = 2.0 * std::f64::consts::PI
                        * (kx * ix + ky * iy + kz * iz) as f64
                        / 8.0;
                    data[ix + 8 * (iy + 8 * iz)] = Complex64::new(0.0, phase).exp();
                }
            }
        }
        fft.forward(&mut data);
        let hot = kx + 8 * (ky + 8 * kz);
        for (i, v) in data.iter().enumerate() {
            if i == hot {
                assert!((v - Complex64::new(512.0, 0.0)).norm() < 1e-9);
            } else {
                assert!(v.norm() < 1e-9);
            }
        }
    }
}
