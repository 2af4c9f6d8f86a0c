use super::DgffError;
use crate::geometry::{LatticeBox, Vertex};

/// A finite set of lattice vertices stored as a mask over its bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    bbox: LatticeBox,
    member: Vec<bool>,
    rectangular: bool,
}

impl Domain {
    pub fn from_box(bbox: LatticeBox) -> Self {
        Domain { bbox, member: vec![true; bbox.len()], rectangular: true }
    }

    /// Builds a domain from a mask laid out on `bbox`; the box is trimmed to the members.
    pub fn from_mask(bbox: LatticeBox, member: &[bool]) -> Result<Self, DgffError> {
        if member.len() != bbox.len() {
            return Err(DgffError::Invalid("mask length does not match its box".into()));
        }
        Self::from_vertices(bbox.vertices().zip(member).filter(|(_, &m)| m).map(|(v, _)| v))
    }

    pub fn from_vertices(vs: impl IntoIterator<Item = Vertex>) -> Result<Self, DgffError> {
        let vs: Vec<Vertex> = vs.into_iter().collect();
        let first = *vs.first().ok_or(DgffError::EmptyDomain)?;
        let (mut lo, mut hi) = (first, first);
        for v in &vs {
            lo = Vertex::new(lo.x.min(v.x), lo.y.min(v.y));
            hi = Vertex::new(hi.x.max(v.x), hi.y.max(v.y));
        }
        let bbox = LatticeBox::spanning(lo, hi)?;
        let mut member = vec![false; bbox.len()];
        for v in &vs {
            member[bbox.index(*v).expect("inside bounding box")] = true;
        }
        let rectangular = member.iter().all(|&m| m);
        Ok(Domain { bbox, member, rectangular })
    }

    pub fn bbox(&self) -> &LatticeBox {
        &self.bbox
    }

    pub fn mask(&self) -> &[bool] {
        &self.member
    }

    pub fn as_box(&self) -> Option<LatticeBox> {
        self.rectangular.then_some(self.bbox)
    }

    pub fn len(&self) -> usize {
        self.member.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.bbox.index(v).map(|i| self.member[i]).unwrap_or(false)
    }

    /// Member with a lattice neighbour outside the domain.
    pub fn is_boundary(&self, v: Vertex) -> bool {
        self.contains(v) && v.neighbors().iter().any(|&n| !self.contains(n))
    }

    pub fn is_interior(&self, v: Vertex) -> bool {
        self.contains(v) && v.neighbors().iter().all(|&n| self.contains(n))
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.bbox.vertices().zip(self.member.iter()).filter(|(_, &m)| m).map(|(v, _)| v)
    }

    /// Interior vertices in row-major order.
    pub fn interior_vertices(&self) -> Vec<Vertex> {
        self.vertices().filter(|&v| self.is_interior(v)).collect()
    }

    pub fn boundary_vertices(&self) -> Vec<Vertex> {
        self.vertices().filter(|&v| self.is_boundary(v)).collect()
    }

    /// Mask of interior vertices over the bounding box.
    pub fn interior_mask(&self) -> Vec<bool> {
        self.bbox.vertices().map(|v| self.is_interior(v)).collect()
    }

    pub fn is_subset_of(&self, other: &Domain) -> bool {
        self.vertices().all(|v| other.contains(v))
    }
}
