//! Orthonormal type-I discrete sine transform and the Dirichlet Laplacian of a box.
//!
//! The sine modes `s_p(i) = sqrt(2/(n+1)) sin(pi p i/(n+1))` diagonalise the
//! absorbing Laplacian `L = 4I - A` of an `nx x ny` interior grid with
//! eigenvalues `(2 - 2cos(pi p/(nx+1))) + (2 - 2cos(pi q/(ny+1)))`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// DST-I of length `n`, computed through a complex FFT of length `2(n+1)`.
#[derive(Clone)]
pub struct Dst1 {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
    norm: f64,
}

impl std::fmt::Debug for Dst1 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dst1").field("n", &self.n).finish()
    }
}

impl Dst1 {
    pub fn new(n: usize, planner: &mut FftPlanner<f64>) -> Self {
        assert!(n >= 1);
        let fft = planner.plan_fft_forward(2 * (n + 1));
        Dst1 { n, fft, norm: (2.0 / (n as f64 + 1.0)).sqrt() }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn buffers(&self) -> (Vec<Complex<f64>>, Vec<Complex<f64>>) {
        let m = 2 * (self.n + 1);
        (vec![Complex::new(0.0, 0.0); m], vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()])
    }

    /// Transforms two sequences at once, packing them as real and imaginary parts.
    fn apply_pair(&self, x: &mut [f64], y: &mut [f64], buf: &mut [Complex<f64>], scratch: &mut [Complex<f64>]) {
        let n = self.n;
        let m = 2 * (n + 1);
        buf[0] = Complex::new(0.0, 0.0);
        buf[n + 1] = Complex::new(0.0, 0.0);
        for j in 1..=n {
            let c = Complex::new(x[j - 1], y[j - 1]);
            buf[j] = c;
            buf[m - j] = -c;
        }
        self.fft.process_with_scratch(buf, scratch);
        let half_norm = 0.5 * self.norm;
        for k in 1..=n {
            x[k - 1] = -buf[k].im * half_norm;
            y[k - 1] = buf[k].re * half_norm;
        }
    }

    pub fn apply(&self, x: &mut [f64]) {
        let (mut buf, mut scratch) = self.buffers();
        let mut dummy = vec![0.0; self.n];
        self.apply_pair(x, &mut dummy, &mut buf, &mut scratch);
    }
}

/// Dirichlet Laplacian `4I - A` on an `nx x ny` grid stored row-major.
#[derive(Debug, Clone)]
pub struct BoxLaplacian {
    nx: usize,
    ny: usize,
    row: Dst1,
    col: Dst1,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
}

fn eigs(n: usize) -> Vec<f64> {
    (1..=n).map(|p| 2.0 - 2.0 * (PI * p as f64 / (n as f64 + 1.0)).cos()).collect()
}

impl BoxLaplacian {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        let row = Dst1::new(nx, &mut planner);
        let col = Dst1::new(ny, &mut planner);
        BoxLaplacian { nx, ny, row, col, eig_x: eigs(nx), eig_y: eigs(ny) }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Eigenvalue of mode `(p, q)`, both 1-based.
    pub fn eigenvalue(&self, p: usize, q: usize) -> f64 {
        self.eig_x[p - 1] + self.eig_y[q - 1]
    }

    /// Orthonormal 2D DST-I in place; the transform is its own inverse.
    pub fn transform(&self, data: &mut [f64]) {
        assert_eq!(data.len(), self.len());
        let (nx, ny) = (self.nx, self.ny);
        {
            let (mut buf, mut scratch) = self.row.buffers();
            let mut rows = data.chunks_exact_mut(nx);
            loop {
                match (rows.next(), rows.next()) {
                    (Some(a), Some(b)) => self.row.apply_pair(a, b, &mut buf, &mut scratch),
                    (Some(a), None) => {
                        let mut z = vec![0.0; nx];
                        self.row.apply_pair(a, &mut z, &mut buf, &mut scratch);
                        break;
                    }
                    _ => break,
                }
            }
        }
        let (mut buf, mut scratch) = self.col.buffers();
        let mut ca = vec![0.0; ny];
        let mut cb = vec![0.0; ny];
        let mut c = 0;
        while c < nx {
            let pair = c + 1 < nx;
            for r in 0..ny {
                ca[r] = data[r * nx + c];
                cb[r] = if pair { data[r * nx + c + 1] } else { 0.0 };
            }
            self.col.apply_pair(&mut ca, &mut cb, &mut buf, &mut scratch);
            for r in 0..ny {
                data[r * nx + c] = ca[r];
                if pair {
                    data[r * nx + c + 1] = cb[r];
                }
            }
            c += 2;
        }
    }

    fn scale_modes(&self, data: &mut [f64], f: impl Fn(f64) -> f64) {
        for q in 0..self.ny {
            for p in 0..self.nx {
                data[q * self.nx + p] *= f(self.eig_x[p] + self.eig_y[q]);
            }
        }
    }

    /// Replaces `rhs` with `L^{-1} rhs`.
    pub fn solve(&self, rhs: &mut [f64]) {
        self.transform(rhs);
        self.scale_modes(rhs, |mu| 1.0 / mu);
        self.transform(rhs);
    }

    /// Maps white noise to a field with covariance `4 L^{-1}`.
    pub fn synthesize(&self, noise: &mut [f64]) {
        self.scale_modes(noise, |mu| (4.0 / mu).sqrt());
        self.transform(noise);
    }

    /// `L u` for a grid function vanishing outside the grid.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        let mut out = vec![0.0; u.len()];
        for y in 0..ny {
            for x in 0..nx {
                let i = y * nx + x;
                let mut s = 4.0 * u[i];
                if x > 0 {
                    s -= u[i - 1];
                }
                if x + 1 < nx {
                    s -= u[i + 1];
                }
                if y > 0 {
                    s -= u[i - nx];
                }
                if y + 1 < ny {
                    s -= u[i + nx];
                }
                out[i] = s;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dst(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        (1..=n)
            .map(|k| norm * (1..=n).map(|j| x[j - 1] * (PI * (j * k) as f64 / (n as f64 + 1.0)).sin()).sum::<f64>())
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        let mut planner = FftPlanner::new();
        for n in [1usize, 2, 5, 8, 17] {
            let d = Dst1::new(n, &mut planner);
            let x: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 11) as f64 - 4.5).collect();
            let mut y = x.clone();
            d.apply(&mut y);
            for (a, b) in y.iter().zip(naive_dst(&x)) {
                assert!((a - b).abs() < 1e-12);
            }
            d.apply(&mut y);
            for (a, b) in y.iter().zip(&x) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn solve_inverts_laplacian() {
        for (nx, ny) in [(1, 1), (3, 5), (6, 6), (7, 2)] {
            let lap = BoxLaplacian::new(nx, ny);
            let b: Vec<f64> = (0..nx * ny).map(|i| ((i * 13 + 5) % 17) as f64 / 3.0 - 2.0).collect();
            let mut u = b.clone();
            lap.solve(&mut u);
            let back = lap.apply(&u);
            for (a, c) in back.iter().zip(&b) {
                assert!((a - c).abs() < 1e-11, "{nx}x{ny}");
            }
        }
    }
}
