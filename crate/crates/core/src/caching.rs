//! Router content stores and the admission / cooperation strategies.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use lru::LruCache;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::NodeId;

/// Default store size: 4 GB of 1 MB chunks.
pub const DEFAULT_CAPACITY: usize = 4096;
pub const DEFAULT_BLOOM_BITS_PER_CHUNK: usize = 16;
pub const DEFAULT_BLOOM_HASHES: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChunkId(pub u32);

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CacheError {
    #[error("content store capacity must be at least one chunk")]
    ZeroCapacity,
    #[error("chunk header carries path length 0")]
    ZeroPathLength,
    #[error("bloom filter needs at least one bit and one hash function")]
    BadFilterSize,
    #[error("unknown caching strategy `{0}` (expected none, all, cachedbit, nbsc or nbsc-green)")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss,
}

/// Fixed-capacity LRU chunk store owned by one router.
#[derive(Debug, Clone)]
pub struct ContentStore {
    owner: NodeId,
    entries: LruCache<ChunkId, ()>,
}

impl ContentStore {
    pub fn new(owner: NodeId, capacity: usize) -> Result<Self, CacheError> {
        let cap = NonZeroUsize::new(capacity).ok_or(CacheError::ZeroCapacity)?;
        Ok(Self {
            owner,
            entries: LruCache::new(cap),
        })
    }

    pub fn owner(&self) -> NodeId {
        self.owner
    }

    pub fn capacity(&self) -> usize {
        self.entries.cap().get()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Looks a chunk up for a request; a hit makes it the most recent entry.
    pub fn lookup(&mut self, chunk: ChunkId) -> Lookup {
        match self.entries.get(&chunk) {
            Some(()) => Lookup::Hit,
            None => Lookup::Miss,
        }
    }

    /// Membership without touching recency.
    pub fn contains(&self, chunk: ChunkId) -> bool {
        self.entries.contains(&chunk)
    }

    /// Inserts or refreshes `chunk`; returns the evicted victim, if any.
    pub fn insert(&mut self, chunk: ChunkId) -> Option<ChunkId> {
        match self.entries.push(chunk, ()) {
            Some((victim, ())) if victim != chunk => Some(victim),
            _ => None,
        }
    }

    /// Entries from most to least recently used.
    pub fn entries(&self) -> impl Iterator<Item = ChunkId> + '_ {
        self.entries.iter().map(|(c, ())| *c)
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }
}

/// A data chunk travelling from the serving point back to the client.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChunkPacket {
    pub chunk: ChunkId,
    pub cached_bit: bool,
    /// Client-to-server hop count of the request's path.
    pub path_length: u32,
}

impl ChunkPacket {
    /// A packet as emitted by the origin: the cached bit is clear.
    pub fn from_origin(chunk: ChunkId, path_length: u32) -> Self {
        Self {
            chunk,
            cached_bit: false,
            path_length,
        }
    }
}

/// Caches every passing chunk.
pub fn admit_all(store: &mut ContentStore, packet: &ChunkPacket) -> bool {
    store.insert(packet.chunk);
    true
}

/// Caches a not-yet-cached chunk with probability `1/n` unless an upstream
/// router already did, in which case the header bit is set.
pub fn admit_cachedbit<R: Rng + ?Sized>(
    store: &mut ContentStore,
    packet: &mut ChunkPacket,
    rng: &mut R,
) -> Result<bool, CacheError> {
    if packet.path_length == 0 {
        return Err(CacheError::ZeroPathLength);
    }
    if store.contains(packet.chunk) || packet.cached_bit {
        return Ok(false);
    }
    let x: f64 = rng.random();
    if x < 1.0 / f64::from(packet.path_length) {
        store.insert(packet.chunk);
        packet.cached_bit = true;
        return Ok(true);
    }
    Ok(false)
}

/// Bloom filter over chunk ids using double hashing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BloomFilter {
    words: Vec<u64>,
    bits: usize,
    hashes: u32,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl BloomFilter {
    pub fn new(bits: usize, hashes: u32) -> Result<Self, CacheError> {
        if bits == 0 || hashes == 0 {
            return Err(CacheError::BadFilterSize);
        }
        Ok(Self {
            words: vec![0; bits.div_ceil(64)],
            bits,
            hashes,
        })
    }

    fn positions(&self, chunk: ChunkId) -> impl Iterator<Item = usize> + '_ {
        let h1 = splitmix64(u64::from(chunk.0));
        let h2 = splitmix64(h1 ^ 0x5851_f42d_4c95_7f2d) | 1;
        let bits = self.bits as u64;
        (0..u64::from(self.hashes)).map(move |i| (h1.wrapping_add(i.wrapping_mul(h2)) % bits) as usize)
    }

    pub fn insert(&mut self, chunk: ChunkId) {
        let pos: Vec<usize> = self.positions(chunk).collect();
        for p in pos {
            self.words[p / 64] |= 1 << (p % 64);
        }
    }

    pub fn contains(&self, chunk: ChunkId) -> bool {
        self.positions(chunk).all(|p| self.words[p / 64] & (1 << (p % 64)) != 0)
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn hashes(&self) -> u32 {
        self.hashes
    }

    pub fn ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    /// Analytic false-positive probability after `items` insertions.
    pub fn expected_false_positive_rate(&self, items: usize) -> f64 {
        let k = f64::from(self.hashes);
        (1.0 - (-k * items as f64 / self.bits as f64).exp()).powf(k)
    }
}

/// Snapshot of a router's store that it advertises to its neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborSummary {
    pub owner: NodeId,
    pub filter: BloomFilter,
    pub epoch: usize,
}

impl NeighborSummary {
    pub fn may_contain(&self, chunk: ChunkId) -> bool {
        self.filter.contains(chunk)
    }
}

/// Builds a fresh filter holding exactly the store's current entries.
pub fn rebuild_summary(
    store: &ContentStore,
    filter_bits: usize,
    hashes: u32,
    epoch: usize,
) -> Result<NeighborSummary, CacheError> {
    let mut filter = BloomFilter::new(filter_bits, hashes)?;
    for chunk in store.entries() {
        filter.insert(chunk);
    }
    Ok(NeighborSummary {
        owner: store.owner(),
        filter,
        epoch,
    })
}

/// How NbSC picks among several neighbours advertising a chunk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeighborSelection {
    Random,
    Greenest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Reply,
    Redirect(NodeId),
    Forward,
}

/// Neighbours whose summaries advertise `chunk`, in the order given.
pub fn matching_neighbors<'a>(chunk: ChunkId, summaries: impl IntoIterator<Item = &'a NeighborSummary>) -> Vec<NodeId> {
    summaries
        .into_iter()
        .filter(|s| s.may_contain(chunk))
        .map(|s| s.owner)
        .collect()
}

/// Picks one redirect target among `matches`. `green` gives each router's
/// green ratio by node index.
pub fn select_neighbor<R: Rng + ?Sized>(
    matches: &[NodeId],
    selection: NeighborSelection,
    green: &[f64],
    rng: &mut R,
) -> Option<NodeId> {
    if matches.is_empty() {
        return None;
    }
    match selection {
        NeighborSelection::Random => Some(matches[rng.random_range(0..matches.len())]),
        NeighborSelection::Greenest => matches
            .iter()
            .copied()
            .min_by(|a, b| green[b.0].total_cmp(&green[a.0]).then(a.cmp(b))),
    }
}

/// Cooperative lookup at one router: reply from the local store, otherwise
/// redirect to a neighbour whose summary matches, otherwise forward.
pub fn nbsc_respond<'a, R: Rng + ?Sized>(
    store: &mut ContentStore,
    chunk: ChunkId,
    summaries: impl IntoIterator<Item = &'a NeighborSummary>,
    selection: NeighborSelection,
    green: &[f64],
    rng: &mut R,
) -> Response {
    if store.lookup(chunk) == Lookup::Hit {
        return Response::Reply;
    }
    let matches = matching_neighbors(chunk, summaries);
    match select_neighbor(&matches, selection, green, rng) {
        Some(n) => Response::Redirect(n),
        None => Response::Forward,
    }
}

/// Admission and cooperation behaviour of a caching strategy. The
/// simulation engine only talks to strategies through this trait.
pub trait CachePolicy: Send + Sync + fmt::Debug {
    fn strategy(&self) -> Strategy;

    /// Whether routers consult their stores at all.
    fn caches(&self) -> bool {
        true
    }

    /// Offers a passing reply chunk to `store`; returns whether it was cached.
    fn admit(
        &self,
        store: &mut ContentStore,
        packet: &mut ChunkPacket,
        rng: &mut dyn rand::RngCore,
    ) -> Result<bool, CacheError>;

    /// Neighbour redirection mode, if the strategy cooperates.
    fn neighbor_search(&self) -> Option<NeighborSelection> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NoCache;

impl CachePolicy for NoCache {
    fn strategy(&self) -> Strategy {
        Strategy::None
    }

    fn caches(&self) -> bool {
        false
    }

    fn admit(&self, _: &mut ContentStore, _: &mut ChunkPacket, _: &mut dyn rand::RngCore) -> Result<bool, CacheError> {
        Ok(false)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CacheAll;

impl CachePolicy for CacheAll {
    fn strategy(&self) -> Strategy {
        Strategy::All
    }

    fn admit(
        &self,
        store: &mut ContentStore,
        packet: &mut ChunkPacket,
        _: &mut dyn rand::RngCore,
    ) -> Result<bool, CacheError> {
        Ok(admit_all(store, packet))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Cachedbit;

impl CachePolicy for Cachedbit {
    fn strategy(&self) -> Strategy {
        Strategy::Cachedbit
    }

    fn admit(
        &self,
        store: &mut ContentStore,
        packet: &mut ChunkPacket,
        rng: &mut dyn rand::RngCore,
    ) -> Result<bool, CacheError> {
        admit_cachedbit(store, packet, rng)
    }
}

/// Cachedbit admission plus neighbour redirection.
#[derive(Debug, Clone, Copy)]
pub struct NeighborSearch {
    pub selection: NeighborSelection,
}

impl CachePolicy for NeighborSearch {
    fn strategy(&self) -> Strategy {
        match self.selection {
            NeighborSelection::Random => Strategy::Nbsc,
            NeighborSelection::Greenest => Strategy::NbscGreen,
        }
    }

    fn admit(
        &self,
        store: &mut ContentStore,
        packet: &mut ChunkPacket,
        rng: &mut dyn rand::RngCore,
    ) -> Result<bool, CacheError> {
        admit_cachedbit(store, packet, rng)
    }

    fn neighbor_search(&self) -> Option<NeighborSelection> {
        Some(self.selection)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "all")]
    All,
    #[serde(rename = "cachedbit")]
    Cachedbit,
    #[serde(rename = "nbsc")]
    Nbsc,
    #[serde(rename = "nbsc-green")]
    NbscGreen,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::None,
        Strategy::All,
        Strategy::Cachedbit,
        Strategy::Nbsc,
        Strategy::NbscGreen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::All => "all",
            Strategy::Cachedbit => "cachedbit",
            Strategy::Nbsc => "nbsc",
            Strategy::NbscGreen => "nbsc-green",
        }
    }

    pub fn policy(self) -> Box<dyn CachePolicy> {
        match self {
            Strategy::None => Box::new(NoCache),
            Strategy::All => Box::new(CacheAll),
            Strategy::Cachedbit => Box::new(Cachedbit),
            Strategy::Nbsc => Box::new(NeighborSearch {
                selection: NeighborSelection::Random,
            }),
            Strategy::NbscGreen => Box::new(NeighborSearch {
                selection: NeighborSelection::Greenest,
            }),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = CacheError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CacheError::UnknownStrategy(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn store(cap: usize) -> ContentStore {
        ContentStore::new(NodeId(0), cap).unwrap()
    }

    #[test]
    fn lru_order() {
        let mut s = store(2);
        s.insert(ChunkId(1));
        s.insert(ChunkId(2));
        assert_eq!(s.lookup(ChunkId(1)), Lookup::Hit);
        assert_eq!(s.insert(ChunkId(3)), Some(ChunkId(2)));
        assert!(s.contains(ChunkId(1)) && s.contains(ChunkId(3)));
        assert_eq!(store(3).lookup(ChunkId(9)), Lookup::Miss);
        let mut one = store(1);
        one.insert(ChunkId(1));
        one.insert(ChunkId(2));
        assert_eq!(one.entries().collect::<Vec<_>>(), vec![ChunkId(2)]);
        assert!(ContentStore::new(NodeId(0), 0).is_err());
    }

    #[test]
    fn duplicate_insert_refreshes() {
        let mut s = store(2);
        s.insert(ChunkId(1));
        s.insert(ChunkId(2));
        assert_eq!(s.insert(ChunkId(1)), None);
        assert_eq!(s.len(), 2);
        assert_eq!(s.insert(ChunkId(3)), Some(ChunkId(2)));
    }

    #[test]
    fn all_caches_everywhere() {
        let mut stores: Vec<_> = (0..3).map(|_| store(4)).collect();
        let p = ChunkPacket::from_origin(ChunkId(7), 3);
        for s in &mut stores {
            assert!(admit_all(s, &p));
        }
        assert!(stores.iter().all(|s| s.contains(ChunkId(7))));
    }

    #[test]
    fn cachedbit_rules() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = store(4);
        let mut p = ChunkPacket::from_origin(ChunkId(1), 1);
        assert!(admit_cachedbit(&mut s, &mut p, &mut rng).unwrap());
        assert!(p.cached_bit);
        let mut downstream = store(4);
        for _ in 0..100 {
            assert!(!admit_cachedbit(&mut downstream, &mut p, &mut rng).unwrap());
        }
        let mut zero = ChunkPacket::from_origin(ChunkId(1), 0);
        assert_eq!(
            admit_cachedbit(&mut s, &mut zero, &mut rng),
            Err(CacheError::ZeroPathLength)
        );
    }

    #[test]
    fn empty_summary_is_all_zero() {
        let s = rebuild_summary(&store(8), 128, 4, 0).unwrap();
        assert_eq!(s.filter.ones(), 0);
        assert!(!s.may_contain(ChunkId(3)));
    }

    #[test]
    fn summary_has_no_false_negatives() {
        let mut s = store(500);
        for c in (0..500).map(|i| ChunkId(i * 7 + 3)) {
            s.insert(c);
        }
        let sum = rebuild_summary(&s, 500 * 16, 4, 2).unwrap();
        assert!(s.entries().all(|c| sum.may_contain(c)));
        assert_eq!(sum, rebuild_summary(&s, 500 * 16, 4, 2).unwrap());
    }

    #[test]
    fn false_positive_rate_near_analytic() {
        let m = 256;
        let mut s = store(m);
        for i in 0..m as u32 {
            s.insert(ChunkId(i));
        }
        let sum = rebuild_summary(&s, m * DEFAULT_BLOOM_BITS_PER_CHUNK, DEFAULT_BLOOM_HASHES, 0).unwrap();
        let trials = 1000;
        let fp = (0..trials).filter(|i| sum.may_contain(ChunkId(1_000_000 + i))).count() as f64;
        let p = sum.filter.expected_false_positive_rate(m);
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (fp - trials as f64 * p).abs() <= 3.0 * sigma,
            "fp {fp}, expected {}",
            trials as f64 * p
        );
    }

    #[test]
    fn nbsc_decisions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let green = vec![0.0, 0.2, 0.9, 0.5];
        let mut local = store(4);
        local.insert(ChunkId(5));
        let mut n1 = ContentStore::new(NodeId(1), 4).unwrap();
        n1.insert(ChunkId(6));
        let sums = [rebuild_summary(&n1, 64, 4, 0).unwrap()];
        assert_eq!(
            nbsc_respond(
                &mut local,
                ChunkId(5),
                &sums,
                NeighborSelection::Random,
                &green,
                &mut rng
            ),
            Response::Reply
        );
        assert_eq!(
            nbsc_respond(
                &mut local,
                ChunkId(6),
                &sums,
                NeighborSelection::Random,
                &green,
                &mut rng
            ),
            Response::Redirect(NodeId(1))
        );
        assert_eq!(
            nbsc_respond(
                &mut local,
                ChunkId(77),
                &sums,
                NeighborSelection::Random,
                &green,
                &mut rng
            ),
            Response::Forward
        );
    }

    #[test]
    fn greenest_neighbor_among_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let green = vec![0.0, 0.4, 0.9, 0.9];
        let matches = [NodeId(1), NodeId(3), NodeId(2)];
        assert_eq!(
            select_neighbor(&matches, NeighborSelection::Greenest, &green, &mut rng),
            Some(NodeId(2))
        );
        let picked = select_neighbor(&matches, NeighborSelection::Random, &green, &mut rng).unwrap();
        assert!(matches.contains(&picked));
        assert_eq!(select_neighbor(&[], NeighborSelection::Random, &green, &mut rng), None);
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
            assert_eq!(s.policy().strategy(), s);
        }
        assert!("lfu".parse::<Strategy>().is_err());
        assert!(!Strategy::None.policy().caches());
    }
}
