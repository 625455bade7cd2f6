//! L parallel single-server instances over dedicated lines.
//!
//! Users are padded to K' = L * ceil(K/L) with virtual users (ids >= K,
//! demanding file 0 and consuming real slots), split into L contiguous
//! groups of K'/L, and each group runs the reference scheme against its own
//! server simultaneously. The measured delay is the longest group schedule;
//! with balanced groups every server is busy the whole time, which is what
//! buys the factor-L speedup at the corner memories K'M/(LN) integral.

use crate::combin;
use crate::gf::{Fe, Matrix};
use crate::model::{
    CacheContents, FileCatalog, NetworkModel, ScenarioConfig, SlotGroup, SlotRouting, TransmitBlock,
};
use crate::scheme::single::{SingleServer, XorPacket};
use crate::scheme::SchemeError;
use crate::{rat_int, Rational};

/// The padded-group structure for one scenario.
#[derive(Clone, Debug)]
pub struct Dedicated {
    users: usize,
    padded: usize,
    group_size: usize,
    /// Per-group corner parameter t_g = K'M/(LN).
    t: usize,
    groups: Vec<SingleServer>,
}

impl Dedicated {
    /// Validates the corner condition K'M/(LN) integral and builds the
    /// per-group instances. Group l serves users l*K'/L .. (l+1)*K'/L - 1
    /// (contiguous), ids >= K being virtual padding.
    pub fn new(cfg: &ScenarioConfig) -> Result<Dedicated, SchemeError> {
        let padded = cfg.servers * cfg.users.div_ceil(cfg.servers);
        let group_size = padded / cfg.servers;
        // t_g = K'M/(LN) = (K'/L) * M/N must be integral.
        let t_rat = rat_int(group_size as u128) * &cfg.cache_files / rat_int(cfg.files as u128);
        if !t_rat.is_integer() {
            return Err(SchemeError::NonIntegralCorner {
                memory: cfg.cache_files.clone(),
                detail: format!(
                    "K'M/(LN) = {t_rat} must be an integer (K' = {padded}, group size {group_size})"
                ),
            });
        }
        let t = num_traits::ToPrimitive::to_usize(&t_rat.to_integer()).expect("t fits usize");
        debug_assert!(t <= group_size, "corner parameter bounded by group size");
        let groups = (0..cfg.servers)
            .map(|l| {
                let members: Vec<usize> = (l * group_size..(l + 1) * group_size).collect();
                SingleServer::new(members, t, cfg.file_symbols())
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Dedicated { users: cfg.users, padded, group_size, t, groups })
    }

    pub fn padded_users(&self) -> usize {
        self.padded
    }

    pub fn group_t(&self) -> usize {
        self.t
    }

    pub fn groups(&self) -> &[SingleServer] {
        &self.groups
    }

    /// The fixed wiring: classes[l] lists server l's users (incl. padding).
    pub fn network(&self) -> NetworkModel {
        NetworkModel::Dedicated {
            classes: self.groups.iter().map(|g| g.members().to_vec()).collect(),
        }
    }

    /// Pad a real demand vector to K' entries; virtual users demand file 0.
    pub fn padded_demands(&self, demands: &[usize]) -> Vec<usize> {
        let mut out = demands.to_vec();
        out.resize(self.padded, 0);
        out
    }

    /// Placement for the real users only (virtual caches are never read:
    /// packets are formed from the catalog and virtual users never decode).
    pub fn place(&self, catalog: &FileCatalog) -> Vec<CacheContents> {
        let mut out: Vec<CacheContents> = Vec::with_capacity(self.users);
        for g in &self.groups {
            for cache in g.place(catalog) {
                if cache.user < self.users {
                    out.push(cache);
                }
            }
        }
        out.sort_by_key(|c| c.user);
        out
    }

    /// All groups transmit their packet schedules in parallel, one row per
    /// server. Balanced groups give equal schedules; the block is still
    /// zero-padded defensively to the longest.
    pub fn deliver(&self, catalog: &FileCatalog, demands: &[usize]) -> TransmitBlock {
        let padded_demands = self.padded_demands(demands);
        let schedules: Vec<Vec<Fe>> = self
            .groups
            .iter()
            .map(|g| {
                g.deliver(catalog, &padded_demands)
                    .into_iter()
                    .flat_map(|p| p.symbols)
                    .collect()
            })
            .collect();
        let width = schedules.iter().map(Vec::len).max().unwrap_or(0);
        let mut symbols = Matrix::zero(self.groups.len(), width);
        for (l, sched) in schedules.iter().enumerate() {
            for (c, &v) in sched.iter().enumerate() {
                symbols.set(l, c, v);
            }
        }
        let mut block = TransmitBlock::new(self.groups.len());
        if width > 0 {
            block.push(SlotGroup { routing: SlotRouting::Fixed, symbols });
        }
        block
    }

    /// Decode for one real user from the symbols it heard on its line.
    /// The stream is chopped back into the group's lexicographic packet
    /// schedule, then the reference decoder runs.
    pub fn decode(
        &self,
        user: usize,
        cache: &CacheContents,
        received: &[Fe],
        demands: &[usize],
    ) -> Result<Vec<Fe>, SchemeError> {
        let group = &self.groups[user / self.group_size];
        let padded_demands = self.padded_demands(demands);
        let plen = group.packet_symbols();
        let count = group.packet_count() as usize;
        if received.len() < count * plen {
            return Err(SchemeError::DecodeFailure {
                user,
                detail: format!(
                    "received {} symbols, schedule needs {}",
                    received.len(),
                    count * plen
                ),
            });
        }
        let subsets = combin::subsets_of(group.members(), group.t() + 1);
        let packets: Vec<XorPacket> = subsets
            .into_iter()
            .enumerate()
            .map(|(i, subset)| XorPacket {
                subset,
                symbols: received[i * plen..(i + 1) * plen].to_vec(),
            })
            .collect();
        group.decode(user, cache, &packets, &padded_demands)
    }

    /// The scheme's exact slot count for any demand vector, in symbols.
    pub fn formula_slots(&self, file_symbols: usize) -> u64 {
        
        combin::binomial(self.group_size, self.t + 1) as u64
            * (file_symbols as u64 / combin::binomial(self.group_size, self.t) as u64)
    }

    /// Corner memory as a rational, M = t_g * N / K_g * ... (inverse of the
    /// corner condition), exposed for sweep construction.
    pub fn corner_memory(group_size: usize, t: usize, files: usize) -> Rational {
        rat_int((t * files) as u128) / rat_int(group_size as u128)
    }
}
