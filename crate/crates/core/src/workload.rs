//! Content catalog with Zipf popularity and the constant-rate request stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::caching::ChunkId;
use crate::topology::NodeId;

pub const DEFAULT_ZIPF_EXPONENT: f64 = 0.9;
pub const DEFAULT_REQUEST_RATE: u32 = 10;
pub const DEFAULT_CATALOG_SIZE: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("catalog needs at least one chunk")]
    EmptyCatalog,
    #[error("catalog needs at least one server")]
    NoServers,
    #[error("zipf exponent must be finite and non-negative, got {0}")]
    BadExponent(f64),
}

/// Chunks ranked by popularity: chunk `i` has rank `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    exponent: f64,
    probabilities: Vec<f64>,
    cdf: Vec<f64>,
    placement: Vec<NodeId>,
}

impl Catalog {
    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn probability(&self, chunk: ChunkId) -> f64 {
        self.probabilities[chunk.0 as usize]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Server router holding the chunk.
    pub fn server_of(&self, chunk: ChunkId) -> NodeId {
        self.placement[chunk.0 as usize]
    }

    pub fn placement(&self) -> &[NodeId] {
        &self.placement
    }

    /// Draws one chunk by inverting the popularity CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChunkId {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1);
        ChunkId(i as u32)
    }
}

pub fn build_catalog(n_chunks: usize, exponent: f64, servers: &[NodeId], seed: u64) -> Result<Catalog, WorkloadError> {
    if n_chunks == 0 {
        return Err(WorkloadError::EmptyCatalog);
    }
    if servers.is_empty() {
        return Err(WorkloadError::NoServers);
    }
    if !(exponent.is_finite() && exponent >= 0.0) {
        return Err(WorkloadError::BadExponent(exponent));
    }
    let weights: Vec<f64> = (1..=n_chunks).map(|r| (r as f64).powf(-exponent)).collect();
    // sum smallest-first to keep the normalisation tight
    let total: f64 = weights.iter().rev().sum();
    let probabilities: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let mut acc = 0.0;
    let mut cdf: Vec<f64> = probabilities
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect();
    *cdf.last_mut().unwrap() = 1.0;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let placement = (0..n_chunks)
        .map(|_| servers[rng.random_range(0..servers.len())])
        .collect();
    Ok(Catalog {
        exponent,
        probabilities,
        cdf,
        placement,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestEvent {
    pub hour: usize,
    pub client: NodeId,
    pub chunk: ChunkId,
}

/// Exactly `rate` requests per client for `hour`, client-major order. The
/// draw depends only on `(seed, hour)`, so any hour can be regenerated alone.
pub fn generate_requests(
    catalog: &Catalog,
    clients: &[NodeId],
    rate: u32,
    hour: usize,
    seed: u64,
) -> Vec<RequestEvent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(hour as u64);
    let mut out = Vec::with_capacity(clients.len() * rate as usize);
    for &client in clients {
        for _ in 0..rate {
            out.push(RequestEvent {
                hour,
                client,
                chunk: catalog.sample(&mut rng),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn servers() -> Vec<NodeId> {
        vec![NodeId(3), NodeId(8)]
    }

    #[test]
    fn uniform_when_exponent_zero() {
        let c = build_catalog(5, 0.0, &servers(), 1).unwrap();
        assert!(c.probabilities().iter().all(|p| (p - 0.2).abs() < 1e-15));
    }

    #[test]
    fn two_chunk_ratio() {
        let c = build_catalog(2, 0.9, &servers(), 1).unwrap();
        let ratio = c.probability(ChunkId(0)) / c.probability(ChunkId(1));
        assert!((ratio - 2f64.powf(0.9)).abs() < 1e-12);
    }

    #[test]
    fn normalised() {
        for n in [1, 10, 1000, 100_000] {
            let c = build_catalog(n, 0.9, &servers(), 0).unwrap();
            assert!((c.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn placement_is_seeded() {
        let a = build_catalog(200, 0.9, &servers(), 7).unwrap();
        let b = build_catalog(200, 0.9, &servers(), 7).unwrap();
        assert_eq!(a.placement(), b.placement());
        assert!(a.placement().iter().all(|s| servers().contains(s)));
        assert!(a.placement().contains(&NodeId(3)) && a.placement().contains(&NodeId(8)));
    }

    #[test]
    fn bad_inputs() {
        assert_eq!(build_catalog(0, 0.9, &servers(), 0), Err(WorkloadError::EmptyCatalog));
        assert_eq!(build_catalog(3, 0.9, &[], 0), Err(WorkloadError::NoServers));
        assert!(build_catalog(3, -1.0, &servers(), 0).is_err());
    }

    #[test]
    fn request_counts() {
        let c = build_catalog(50, 0.9, &servers(), 0).unwrap();
        let clients = [NodeId(0), NodeId(1)];
        assert!(generate_requests(&c, &clients, 0, 3, 9).is_empty());
        let reqs = generate_requests(&c, &clients, 5, 3, 9);
        assert_eq!(reqs.len(), 10);
        assert!(reqs.iter().all(|r| r.hour == 3));
        assert_eq!(reqs, generate_requests(&c, &clients, 5, 3, 9));
        assert_ne!(reqs, generate_requests(&c, &clients, 5, 4, 9));
    }
}
