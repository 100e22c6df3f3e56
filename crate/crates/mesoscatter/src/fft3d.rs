//! Minimal 3D complex FFT on top of `rustfft`, used for the lattice
//! convolutions in the Foldy-Lax and Lippmann-Schwinger matvecs.
//!
//! Data layout is row-major with the last axis fastest:
//! `idx = (ix * ny + iy) * nz + iz`.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub(crate) struct Fft3 {
    dims: [usize; 3],
    fwd: [Arc<dyn Fft<f64>>; 3],
    inv: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(dims: [usize; 3]) -> Self {
        assert!(dims.iter().all(|&d| d >= 1));
        let mut planner = FftPlanner::new();
        let fwd = [
            planner.plan_fft_forward(dims[0]),
            planner.plan_fft_forward(dims[1]),
            planner.plan_fft_forward(dims[2]),
        ];
        let inv = [
            planner.plan_fft_inverse(dims[0]),
            planner.plan_fft_inverse(dims[1]),
            planner.plan_fft_inverse(dims[2]),
        ];
        Self { dims, fwd, inv }
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    #[inline]
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        (ix * self.dims[1] + iy) * self.dims[2] + iz
    }

    fn transform_axis(&self, data: &mut [Complex64], axis: usize, forward: bool) {
        let [nx, ny, nz] = self.dims;
        let plan = if forward {
            &self.fwd[axis]
        } else {
            &self.inv[axis]
        };
        let n = self.dims[axis];
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        match axis {
            2 => {
                // Contiguous lines.
                for chunk in data.chunks_exact_mut(nz) {
                    plan.process_with_scratch(chunk, &mut scratch);
                }
            }
            1 => {
                for ix in 0..nx {
                    for iz in 0..nz {
                        for iy in 0..ny {
                            line[iy] = data[self.index(ix, iy, iz)];
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for iy in 0..ny {
                            data[self.index(ix, iy, iz)] = line[iy];
                        }
                    }
                }
            }
            0 => {
                for iy in 0..ny {
                    for iz in 0..nz {
                        for ix in 0..nx {
                            line[ix] = data[self.index(ix, iy, iz)];
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for ix in 0..nx {
                            data[self.index(ix, iy, iz)] = line[ix];
                        }
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// In-place forward DFT (unnormalized).
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        for axis in 0..3 {
            self.transform_axis(data, axis, true);
        }
    }

    /// In-place inverse DFT, normalized so `inverse(forward(x)) == x`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        for axis in 0..3 {
            self.transform_axis(data, axis, false);
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
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_recovers_input() {
        let fft = Fft3::new([4, 6, 5]);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let original: Vec<Complex64> = (0..fft.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut data = original.clone();
        fft.forward(&mut data);
        fft.inverse(&mut data);
        for (a, b) in data.iter().zip(&original) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn delta_transforms_to_all_ones() {
        let fft = Fft3::new([3, 3, 3]);
        let mut data = vec![Complex64::new(0.0, 0.0); fft.len()];
        data[0] = Complex64::new(1.0, 0.0);
        fft.forward(&mut data);
        for v in &data {
            assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn cyclic_convolution_matches_direct_sum() {
        // (a ⊛ b)[m] = Σ_j a[m−j mod n] b[j], computed both ways.
        let dims = [4usize, 3, 5];
        let fft = Fft3::new(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let a: Vec<Complex64> = (0..fft.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let b: Vec<Complex64> = (0..fft.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();

        let mut fa = a.clone();
        let mut fb = b.clone();
        fft.forward(&mut fa);
        fft.forward(&mut fb);
        let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
        fft.inverse(&mut prod);

        for mx in 0..dims[0] {
            for my in 0..dims[1] {
                for mz in 0..dims[2] {
                    let mut want = Complex64::new(0.0, 0.0);
                    for jx in 0..dims[0] {
                        for jy in 0..dims[1] {
                            for jz in 0..dims[2] {
                                let kx = (mx + dims[0] - jx) % dims[0];
                                let ky = (my + dims[1] - jy) % dims[1];
                                let kz = (mz + dims[2] - jz) % dims[2];
                                want += a[fft.index(kx, ky, kz)] * b[fft.index(jx, jy, jz)];
                            }
                        }
                    }
                    let got = prod[fft.index(mx, my, mz)];
                    assert!((got - want).norm() < 1e-11, "mismatch at ({mx},{my},{mz})");
                }
            }
        }
    }
}
