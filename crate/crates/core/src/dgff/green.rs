use nalgebra::DMatrix;

use super::{DgffError, Domain};
use crate::geometry::Vertex;

/// `G = 4 (4I - A)^{-1}` on the interior of a domain, in expected-visit units.
#[derive(Debug, Clone)]
pub struct GreensMatrix {
    domain: Domain,
    interior: Vec<Vertex>,
    /// bbox grid index -> interior index
    slot: Vec<Option<usize>>,
    matrix: DMatrix<f64>,
}

/// Dense `4I - A` restricted to the interior vertices.
pub(crate) fn interior_laplacian(domain: &Domain) -> (Vec<Vertex>, Vec<Option<usize>>, DMatrix<f64>) {
    let interior = domain.interior_vertices();
    let bbox = *domain.bbox();
    let mut slot = vec![None; bbox.len()];
    for (k, v) in interior.iter().enumerate() {
        slot[bbox.index(*v).expect("member")] = Some(k);
    }
    let n = interior.len();
    let mut lap = DMatrix::zeros(n, n);
    for (k, v) in interior.iter().enumerate() {
        lap[(k, k)] = 4.0;
        for nb in v.neighbors() {
            if let Some(Some(l)) = bbox.index(nb).map(|i| slot[i]) {
                lap[(k, l)] = -1.0;
            }
        }
    }
    (interior, slot, lap)
}

pub fn greens_matrix(domain: &Domain) -> Result<GreensMatrix, DgffError> {
    let (interior, slot, lap) = interior_laplacian(domain);
    if interior.is_empty() {
        return Err(DgffError::NoInterior);
    }
    let chol = lap.cholesky().ok_or_else(|| DgffError::Factorization("interior Laplacian not positive definite".into()))?;
    let matrix = chol.inverse() * 4.0;
    Ok(GreensMatrix { domain: domain.clone(), interior, slot, matrix })
}

impl GreensMatrix {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Interior vertices in row-major order, indexing the matrix.
    pub fn interior(&self) -> &[Vertex] {
        &self.interior
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn slot(&self, v: Vertex) -> Option<usize> {
        self.domain.bbox().index(v).and_then(|i| self.slot[i])
    }

    /// `G(u, v)`, zero when either vertex is not interior.
    pub fn get(&self, u: Vertex, v: Vertex) -> f64 {
        match (self.slot(u), self.slot(v)) {
            (Some(a), Some(b)) => self.matrix[(a, b)],
            _ => 0.0,
        }
    }
}
