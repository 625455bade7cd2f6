//! The reference one-server scheme.
//!
//! With corner memory t = KM/N, every file splits into C(K, t) sub-files
//! indexed by t-subsets of the users, and user k caches exactly the
//! sub-files whose subset contains k. For any demand vector, the server
//! sends one XOR packet per (t+1)-subset T: the XOR over r in T of the
//! sub-file of r's demand indexed by T minus r. Every user in T holds all
//! terms but its own, so one packet serves t+1 users at once.
//!
//! The module works on an explicit member list rather than 0..K so the
//! dedicated scheme can run one instance per server group (with padded
//! virtual members).

use crate::gf::Fe;
use crate::model::{CacheContents, FileCatalog, PieceKey, PiecePart, SplitPlan};
use crate::scheme::SchemeError;
use crate::combin;

/// One single-server instance: `members` (sorted global user ids) share the
/// server; every file splits into C(|members|, t) sub-files.
#[derive(Clone, Debug)]
pub struct SingleServer {
    members: Vec<usize>,
    t: usize,
    plan: SplitPlan,
}

/// One XOR packet, labeled by the (t+1)-subset it serves.
#[derive(Clone, Debug, PartialEq)]
pub struct XorPacket {
    pub subset: Vec<usize>,
    pub symbols: Vec<Fe>,
}

impl SingleServer {
    pub fn new(members: Vec<usize>, t: usize, file_symbols: usize) -> Result<SingleServer, SchemeError> {
        assert!(t <= members.len(), "corner parameter exceeds group size");
        let plan = SplitPlan::single(&members, t, file_symbols)?;
        Ok(SingleServer { members, t, plan })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn plan(&self) -> &SplitPlan {
        &self.plan
    }

    /// Packet length in symbols: (F/m) / C(|members|, t).
    pub fn packet_symbols(&self) -> usize {
        self.plan.piece_symbols()
    }

    /// Number of packets any demand vector needs: C(|members|, t+1).
    pub fn packet_count(&self) -> u64 {
        combin::binomial(self.members.len(), self.t + 1) as u64
    }

    /// Demand-oblivious placement: member k caches sub-file (n, tau) for
    /// every file n and every tau containing k. Caches are returned in
    /// member order.
    pub fn place(&self, catalog: &FileCatalog) -> Vec<CacheContents> {
        self.members
            .iter()
            .map(|&k| {
                let mut cache = CacheContents::new(k);
                for n in 0..catalog.count() {
                    for part in self.plan.parts() {
                        if part.tau().contains(&k) {
                            cache.insert(
                                PieceKey { file: n, part: part.clone() },
                                self.plan.slice(catalog.file(n), part).expect("part in plan").to_vec(),
                            );
                        }
                    }
                }
                cache
            })
            .collect()
    }

    /// All XOR packets for a demand vector, in lexicographic subset order.
    /// `demands` is indexed by global user id and must cover every member.
    pub fn deliver(&self, catalog: &FileCatalog, demands: &[usize]) -> Vec<XorPacket> {
        combin::subsets_of(&self.members, self.t + 1)
            .into_iter()
            .map(|subset| {
                let mut symbols = vec![Fe::ZERO; self.packet_symbols()];
                for &r in &subset {
                    let tau: Vec<usize> = subset.iter().copied().filter(|&v| v != r).collect();
                    let part = PiecePart::Subfile { tau };
                    let piece = self
                        .plan
                        .slice(catalog.file(demands[r]), &part)
                        .expect("sub-file in plan");
                    for (acc, &s) in symbols.iter_mut().zip(piece) {
                        *acc = Fe(acc.0 ^ s.0);
                    }
                }
                XorPacket { subset, symbols }
            })
            .collect()
    }

    /// Reconstruct member `user`'s demanded file from its cache and the
    /// packet list. Bit-exactness is the caller's check; this recovers the
    /// missing sub-files by XORing cached interference out of each packet.
    pub fn decode(
        &self,
        user: usize,
        cache: &CacheContents,
        packets: &[XorPacket],
        demands: &[usize],
    ) -> Result<Vec<Fe>, SchemeError> {
        let want = demands[user];
        let mut recovered: Vec<(PiecePart, Vec<Fe>)> = Vec::new();
        for packet in packets {
            if !packet.subset.contains(&user) {
                continue;
            }
            let mut piece = packet.symbols.clone();
            for &r in &packet.subset {
                if r == user {
                    continue;
                }
                let tau: Vec<usize> = packet.subset.iter().copied().filter(|&v| v != r).collect();
                let key = PieceKey { file: demands[r], part: PiecePart::Subfile { tau } };
                let cached = cache.get(&key).ok_or_else(|| SchemeError::DecodeFailure {
                    user,
                    detail: format!("interference piece {key} not cached"),
                })?;
                for (acc, &s) in piece.iter_mut().zip(cached) {
                    *acc = Fe(acc.0 ^ s.0);
                }
            }
            let tau: Vec<usize> = packet.subset.iter().copied().filter(|&v| v != user).collect();
            recovered.push((PiecePart::Subfile { tau }, piece));
        }
        // Assemble the file in plan order: cached sub-files contain `user`,
        // all others must have been recovered from packets.
        let mut out = Vec::with_capacity(self.plan.piece_count() * self.packet_symbols());
        for part in self.plan.parts() {
            if part.tau().contains(&user) {
                let key = PieceKey { file: want, part: part.clone() };
                let cached = cache.get(&key).ok_or_else(|| SchemeError::DecodeFailure {
                    user,
                    detail: format!("cached piece {key} missing"),
                })?;
                out.extend_from_slice(cached);
            } else {
                let piece = recovered
                    .iter()
                    .find(|(p, _)| p == part)
                    .map(|(_, d)| d)
                    .ok_or_else(|| SchemeError::DecodeFailure {
                        user,
                        detail: format!("sub-file {part} never recovered"),
                    })?;
                out.extend_from_slice(piece);
            }
        }
        Ok(out)
    }
}
