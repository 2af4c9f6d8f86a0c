use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dst::BoxLaplacian;
use super::green::greens_matrix;
use super::rng::{standard_normals, stream};
use super::{DgffError, Domain, GreensMatrix};
use crate::geometry::{LatticeBox, Vertex};

/// Largest interior handled by the dense factorization.
pub const DENSE_LIMIT: usize = 5000;
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Dense,
    Spectral,
}

/// One field realization; values are laid out row-major over the domain's bounding box
/// and are exactly zero off the interior.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub domain: Domain,
    pub values: Vec<f64>,
    pub seed: u64,
    pub sampler: SamplerKind,
}

impl FieldSample {
    pub fn bbox(&self) -> &LatticeBox {
        self.domain.bbox()
    }

    pub fn value(&self, v: Vertex) -> f64 {
        self.domain.bbox().index(v).map(|i| self.values[i]).unwrap_or(0.0)
    }

    pub fn zero(domain: Domain) -> Self {
        let n = domain.bbox().len();
        FieldSample { domain, values: vec![0.0; n], seed: 0, sampler: SamplerKind::Dense }
    }
}

/// Exact sampler through the Cholesky factor of the Green matrix.
#[derive(Debug, Clone)]
pub struct DenseSampler {
    green: GreensMatrix,
    factor: DMatrix<f64>,
}

impl DenseSampler {
    pub fn new(domain: &Domain) -> Result<Self, DgffError> {
        let n = domain.interior_vertices().len();
        if n > DENSE_LIMIT {
            return Err(DgffError::TooLarge(n));
        }
        let green = greens_matrix(domain)?;
        let chol = green
            .matrix()
            .clone()
            .cholesky()
            .ok_or_else(|| DgffError::Factorization("Green matrix not positive definite".into()))?;
        let factor = chol.unpack();
        if let Some(k) = (0..factor.nrows()).find(|&k| factor[(k, k)] * factor[(k, k)] < PIVOT_TOL) {
            return Err(DgffError::Factorization(format!("pivot {k} below {PIVOT_TOL:e}")));
        }
        Ok(DenseSampler { green, factor })
    }

    pub fn green(&self) -> &GreensMatrix {
        &self.green
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        let xi = standard_normals(&mut stream(seed), self.factor.nrows());
        let x = &self.factor * nalgebra::DVector::from_vec(xi);
        self.embed(x.as_slice(), seed)
    }

    fn embed(&self, interior_values: &[f64], seed: u64) -> FieldSample {
        let domain = self.green.domain().clone();
        let bbox = *domain.bbox();
        let mut values = vec![0.0; bbox.len()];
        for (v, x) in self.green.interior().iter().zip(interior_values) {
            values[bbox.index(*v).expect("member")] = *x;
        }
        FieldSample { domain, values, seed, sampler: SamplerKind::Dense }
    }

    /// Interior values for many seeds at once, one column per seed.
    /// Column `c` equals the interior of `sample(seeds[c])`.
    pub fn sample_matrix(&self, seeds: &[u64]) -> DMatrix<f64> {
        let n = self.factor.nrows();
        let mut xi = DMatrix::zeros(n, seeds.len());
        for (c, &s) in seeds.iter().enumerate() {
            xi.set_column(c, &nalgebra::DVector::from_vec(standard_normals(&mut stream(s), n)));
        }
        &self.factor * xi
    }
}

pub fn sample_dense(domain: &Domain, seed: u64) -> Result<FieldSample, DgffError> {
    Ok(DenseSampler::new(domain)?.sample(seed))
}

/// Exact sampler for rectangles through the sine eigenbasis.
#[derive(Debug, Clone)]
pub struct SpectralSampler {
    bbox: LatticeBox,
    lap: Option<BoxLaplacian>,
}

impl SpectralSampler {
    pub fn new(bbox: LatticeBox) -> Self {
        let lap = bbox.interior().map(|i| BoxLaplacian::new(i.width, i.height));
        SpectralSampler { bbox, lap }
    }

    pub fn for_domain(domain: &Domain) -> Result<Self, DgffError> {
        domain.as_box().map(Self::new).ok_or(DgffError::NotRectangular)
    }

    pub fn bbox(&self) -> &LatticeBox {
        &self.bbox
    }

    pub fn sample(&self, seed: u64) -> FieldSample {
        let mut values = vec![0.0; self.bbox.len()];
        if let Some(lap) = &self.lap {
            let mut noise = standard_normals(&mut stream(seed), lap.len());
            lap.synthesize(&mut noise);
            let (nx, _) = lap.dims();
            let w = self.bbox.width;
            for (k, x) in noise.iter().enumerate() {
                values[(k / nx + 1) * w + k % nx + 1] = *x;
            }
        }
        FieldSample { domain: Domain::from_box(self.bbox), values, seed, sampler: SamplerKind::Spectral }
    }
}

pub fn sample_spectral(bbox: LatticeBox, seed: u64) -> FieldSample {
    SpectralSampler::new(bbox).sample(seed)
}

/// Covariance of the spectral sampler by direct summation over sine modes,
/// indexed by interior vertices in row-major order.
pub fn spectral_covariance(bbox: &LatticeBox) -> Result<DMatrix<f64>, DgffError> {
    let inner = bbox.interior().ok_or(DgffError::NoInterior)?;
    let (nx, ny) = (inner.width, inner.height);
    let basis = |n: usize| -> Vec<Vec<f64>> {
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        (1..=n).map(|p| (1..=n).map(|i| norm * (PI * (p * i) as f64 / (n as f64 + 1.0)).sin()).collect()).collect()
    };
    let (sx, sy) = (basis(nx), basis(ny));
    let mu = |p: usize, q: usize| {
        4.0 - 2.0 * (PI * (p + 1) as f64 / (nx as f64 + 1.0)).cos() - 2.0 * (PI * (q + 1) as f64 / (ny as f64 + 1.0)).cos()
    };
    let n = nx * ny;
    let mut cov = DMatrix::zeros(n, n);
    for q in 0..ny {
        for p in 0..nx {
            let weight = 4.0 / mu(p, q);
            let mode: Vec<f64> = (0..n).map(|k| sx[p][k % nx] * sy[q][k / nx]).collect();
            for a in 0..n {
                let wa = weight * mode[a];
                for b in 0..n {
                    cov[(a, b)] += wa * mode[b];
                }
            }
        }
    }
    Ok(cov)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(side: usize) -> LatticeBox {
        LatticeBox::square(Vertex::new(0, 0), side).unwrap()
    }

    #[test]
    fn unit_variance_centre() {
        let cov = spectral_covariance(&sq(3)).unwrap();
        assert!((cov[(0, 0)] - 1.0).abs() < 1e-10);
        let s = sample_dense(&Domain::from_box(sq(3)), 9).unwrap();
        assert_eq!(s.values.iter().filter(|x| **x != 0.0).count(), 1);
    }

    #[test]
    fn spectral_covariance_matches_green() {
        for (w, h) in [(8, 8), (5, 7), (6, 3)] {
            let b = LatticeBox::new(Vertex::new(0, 0), w, h).unwrap();
            let cov = spectral_covariance(&b).unwrap();
            let g = greens_matrix(&Domain::from_box(b)).unwrap();
            assert!((cov - g.matrix()).amax() < 1e-8);
        }
    }

    #[test]
    fn deterministic_and_zero_on_boundary() {
        let b = sq(12);
        let d = Domain::from_box(b);
        let dense = DenseSampler::new(&d).unwrap();
        assert_eq!(dense.sample(5).values, dense.sample(5).values);
        let spec = sample_spectral(b, 5);
        assert_eq!(spec.values, sample_spectral(b, 5).values);
        for s in [dense.sample(5), spec] {
            for v in b.boundary() {
                assert_eq!(s.value(v), 0.0);
            }
            assert_eq!(s.value(Vertex::new(-3, 4)), 0.0);
        }
    }

    #[test]
    fn batch_matches_single_draws() {
        let d = Domain::from_box(sq(6));
        let s = DenseSampler::new(&d).unwrap();
        let m = s.sample_matrix(&[3, 4]);
        let one = s.sample(4);
        for (k, v) in s.green().interior().iter().enumerate() {
            assert!((m[(k, 1)] - one.value(*v)).abs() < 1e-13);
        }
    }

    #[test]
    fn size_limit() {
        let d = Domain::from_box(sq(80));
        assert!(matches!(DenseSampler::new(&d), Err(DgffError::TooLarge(6084))));
    }
}
