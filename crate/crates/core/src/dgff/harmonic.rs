use super::dst::BoxLaplacian;
use super::solve::MaskedLaplacian;
use super::{DgffError, Domain, FieldSample};
use crate::geometry::Vertex;

const CG_TOL: f64 = 1e-12;

/// Discrete harmonic function on the interior of `domain` with given boundary values.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    pub domain: Domain,
    /// Row-major over the domain's bounding box; zero off the domain.
    pub values: Vec<f64>,
}

impl HarmonicField {
    pub fn value(&self, v: Vertex) -> f64 {
        self.domain.bbox().index(v).map(|i| self.values[i]).unwrap_or(0.0)
    }

    /// Largest deviation from the four-neighbour mean over interior vertices.
    pub fn residual(&self) -> f64 {
        self.domain
            .interior_vertices()
            .iter()
            .map(|&v| {
                let mean: f64 = v.neighbors().iter().map(|&n| self.value(n)).sum::<f64>() / 4.0;
                (self.value(v) - mean).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Solves `(4I - A) u = rhs` on the interior of `domain` with `u = boundary` on the
/// domain boundary. `rhs` and `boundary` are indexed by the bounding-box grid.
pub(crate) fn dirichlet_solve(domain: &Domain, boundary: &[f64], rhs: Option<&[f64]>) -> Result<Vec<f64>, DgffError> {
    let bbox = *domain.bbox();
    let interior = domain.interior_mask();
    let mut out = vec![0.0; bbox.len()];
    for (i, v) in bbox.vertices().enumerate() {
        if domain.contains(v) && !interior[i] {
            out[i] = boundary[i];
        }
    }
    let mut b = vec![0.0; bbox.len()];
    let w = bbox.width;
    for i in (0..bbox.len()).filter(|&i| interior[i]) {
        let mut s = rhs.map(|r| r[i]).unwrap_or(0.0);
        for j in [i - 1, i + 1, i - w, i + w] {
            if !interior[j] {
                s += out[j];
            }
        }
        b[i] = s;
    }
    match domain.as_box().and_then(|bx| bx.interior()) {
        Some(inner) => {
            let lap = BoxLaplacian::new(inner.width, inner.height);
            let mut packed: Vec<f64> = (0..bbox.len()).filter(|&i| interior[i]).map(|i| b[i]).collect();
            lap.solve(&mut packed);
            for (k, i) in (0..bbox.len()).filter(|&i| interior[i]).enumerate() {
                out[i] = packed[k];
            }
        }
        None => {
            if interior.iter().any(|&f| f) {
                let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
                let u = MaskedLaplacian::new(bbox.width, bbox.height, interior.clone()).solve(&b, CG_TOL * scale)?;
                for i in (0..bbox.len()).filter(|&i| interior[i]) {
                    out[i] = u[i];
                }
            }
        }
    }
    Ok(out)
}

/// Conditional mean of the field on `b` given its values off the interior of `b`.
pub fn harmonic_extension(sample: &FieldSample, b: &Domain) -> Result<HarmonicField, DgffError> {
    if !b.is_subset_of(&sample.domain) {
        return Err(DgffError::NotContained(format!("{:?} in {:?}", b.bbox(), sample.bbox())));
    }
    let data: Vec<f64> = b.bbox().vertices().map(|v| sample.value(v)).collect();
    let values = dirichlet_solve(b, &data, None)?;
    Ok(HarmonicField { domain: b.clone(), values })
}

/// Splits the field on `b` into a zero-boundary part and the harmonic extension.
pub fn markov_decompose(sample: &FieldSample, b: &Domain) -> Result<(FieldSample, HarmonicField), DgffError> {
    let h = harmonic_extension(sample, b)?;
    let bbox = *b.bbox();
    let values = bbox
        .vertices()
        .enumerate()
        .map(|(i, v)| if b.is_interior(v) { sample.value(v) - h.values[i] } else { 0.0 })
        .collect();
    let inner = FieldSample { domain: b.clone(), values, seed: sample.seed, sampler: sample.sampler };
    Ok((inner, h))
}
