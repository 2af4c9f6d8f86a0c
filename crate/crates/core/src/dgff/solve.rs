//! Conjugate gradients for `(4I - A) u = b` on the free cells of a masked grid.
//!
//! Cells outside the free mask are held at zero; boundary data enters through
//! the right-hand side.

use super::DgffError;

#[derive(Debug, Clone)]
pub struct MaskedLaplacian {
    width: usize,
    height: usize,
    free: Vec<bool>,
}

impl MaskedLaplacian {
    pub fn new(width: usize, height: usize, free: Vec<bool>) -> Self {
        assert_eq!(free.len(), width * height);
        MaskedLaplacian { width, height, free }
    }

    pub fn free(&self) -> &[bool] {
        &self.free
    }

    /// `(4I - A) u` on free cells, zero elsewhere; `u` is read only on free cells.
    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        let (w, h) = (self.width, self.height);
        let val = |i: usize| if self.free[i] { u[i] } else { 0.0 };
        for y in 0..h {
            for x in 0..w {
                let i = y * w + x;
                if !self.free[i] {
                    out[i] = 0.0;
                    continue;
                }
                let mut s = 4.0 * u[i];
                if x > 0 {
                    s -= val(i - 1);
                }
                if x + 1 < w {
                    s -= val(i + 1);
                }
                if y > 0 {
                    s -= val(i - w);
                }
                if y + 1 < h {
                    s -= val(i + w);
                }
                out[i] = s;
            }
        }
    }

    /// Solves to an absolute max-norm residual of `tol`.
    pub fn solve(&self, rhs: &[f64], tol: f64) -> Result<Vec<f64>, DgffError> {
        let n = rhs.len();
        let mut u = vec![0.0; n];
        let mut r: Vec<f64> = rhs.iter().zip(&self.free).map(|(&b, &f)| if f { b } else { 0.0 }).collect();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr: f64 = r.iter().map(|x| x * x).sum();
        let unknowns = self.free.iter().filter(|&&f| f).count();
        let max_iter = 20 * unknowns + 100;
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for it in 0..max_iter {
            if inf(&r) <= tol {
                break;
            }
            // refresh the recursive residual now and then to stop drift
            if it > 0 && it % 200 == 0 {
                self.apply(&u, &mut ap);
                for i in 0..n {
                    r[i] = if self.free[i] { rhs[i] - ap[i] } else { 0.0 };
                }
                rr = r.iter().map(|x| x * x).sum();
                p.copy_from_slice(&r);
            }
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            if pap <= 0.0 {
                break;
            }
            let alpha = rr / pap;
            for i in 0..n {
                u[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rr_new: f64 = r.iter().map(|x| x * x).sum();
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        self.apply(&u, &mut ap);
        let res = (0..n).filter(|&i| self.free[i]).fold(0.0f64, |m, i| m.max((rhs[i] - ap[i]).abs()));
        if res > tol * 10.0 {
            return Err(DgffError::NoConvergence(res));
        }
        Ok(u)
    }
}
