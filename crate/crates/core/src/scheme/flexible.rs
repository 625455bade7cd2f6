//! The flexible scheme: a switch re-partitions users among servers each slot.
//!
//! A profile (p_1..p_L) fixes how many users each server serves per slot
//! (all >= 2), leaving Q = K - sum(p_i) users idle per slot. Files split
//! three levels deep: per server i into a sub-file, per (p_i - 1)-subset
//! tau into mini-files (user k caches the minis with k in tau), and per
//! mini into gamma_i pico copies. Delivery walks every ordered partition of
//! the users into classes of sizes (p_1, .., p_L, Q) in lexicographic
//! order; server i sends the XOR over its class P_i of the next fresh pico
//! of each member's demand indexed by P_i minus that member. A freshness
//! ledger N(i, P_i) starts at 1 and advances per visit, ending at
//! gamma_i + 1 for every subset — delivery and decoder replay it
//! identically, so pico indices never need to be transmitted.

use std::collections::BTreeMap;

use crate::bounds::{flex_params, flexible_pair, FlexiblePlanParams, PartitionProfile};
use crate::combin;
use crate::gf::{Fe, Matrix};
use crate::model::{
    CacheContents, FileCatalog, NetworkModel, PieceKey, PiecePart, ScenarioConfig, SlotGroup,
    SlotRouting, SplitPlan, TransmitBlock,
};
use crate::scheme::SchemeError;

/// One configured flexible-scheme instance.
#[derive(Clone, Debug)]
pub struct Flexible {
    users: usize,
    profile: PartitionProfile,
    params: FlexiblePlanParams,
    plan: SplitPlan,
}

/// Delivery output: the transmit block plus the final freshness ledger
/// (exposed so its completion postcondition is checkable).
#[derive(Clone, Debug)]
pub struct FlexibleDelivery {
    pub block: TransmitBlock,
    pub ledger: BTreeMap<(usize, Vec<usize>), usize>,
}

impl Flexible {
    pub fn new(cfg: &ScenarioConfig, profile: PartitionProfile) -> Result<Flexible, SchemeError> {
        assert_eq!(profile.servers(), cfg.servers, "profile must match server count");
        let (memory, _) = flexible_pair(cfg.users, cfg.files, &profile);
        if memory != cfg.cache_files {
            return Err(SchemeError::NonIntegralCorner {
                memory: cfg.cache_files.clone(),
                detail: format!("profile {:?} achieves memory {memory}", profile.parts()),
            });
        }
        let params = flex_params(cfg.users, &profile);
        let plan = SplitPlan::flexible(cfg.users, profile.parts(), &params.gammas, cfg.file_symbols())?;
        Ok(Flexible { users: cfg.users, profile, params, plan })
    }

    pub fn profile(&self) -> &PartitionProfile {
        &self.profile
    }

    pub fn params(&self) -> &FlexiblePlanParams {
        &self.params
    }

    pub fn plan(&self) -> &SplitPlan {
        &self.plan
    }

    /// Pico length in symbols, x * F/m.
    pub fn pico_symbols(&self) -> usize {
        self.plan.piece_symbols()
    }

    pub fn network(&self) -> NetworkModel {
        NetworkModel::Flexible { servers: self.profile.servers() }
    }

    /// The lexicographic ordered-partition schedule both sides walk.
    pub fn partitions(&self) -> Vec<Vec<Vec<usize>>> {
        let items: Vec<usize> = (0..self.users).collect();
        combin::ordered_partitions(&items, &self.profile.class_sizes())
    }

    /// Demand-oblivious placement: user k caches pico (n, i, tau, j) for
    /// every file n, server i, subset tau containing k and copy j.
    pub fn place(&self, catalog: &FileCatalog) -> Vec<CacheContents> {
        (0..self.users)
            .map(|k| {
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

    /// One slot group per ordered partition: row i carries server i's XOR
    /// packet for its class, the idle class hears nothing. Errors indicate
    /// enumeration bugs (the ledger postcondition is re-checked at runtime).
    pub fn deliver(
        &self,
        catalog: &FileCatalog,
        demands: &[usize],
    ) -> Result<FlexibleDelivery, SchemeError> {
        let servers = self.profile.servers();
        let width = self.pico_symbols();
        let mut ledger: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let mut block = TransmitBlock::new(servers);
        for partition in self.partitions() {
            let mut symbols = Matrix::zero(servers, width);
            for (i, class) in partition.iter().take(servers).enumerate() {
                let budget = self.params.gammas[i] as usize;
                let copy = *ledger.entry((i, class.clone())).or_insert(1);
                if copy > budget {
                    return Err(SchemeError::LedgerOverflow {
                        key: format!("server {i}, class {class:?}"),
                        next: copy,
                        budget,
                    });
                }
                for &r in class {
                    let tau: Vec<usize> = class.iter().copied().filter(|&v| v != r).collect();
                    let part = PiecePart::Pico { server: i, tau, copy };
                    let pico = self
                        .plan
                        .slice(catalog.file(demands[r]), &part)
                        .expect("pico in plan");
                    for (c, &s) in pico.iter().enumerate() {
                        let v = symbols.get(i, c);
                        symbols.set(i, c, Fe(v.0 ^ s.0));
                    }
                }
            }
            for (i, class) in partition.iter().take(servers).enumerate() {
                *ledger.get_mut(&(i, class.clone())).expect("visited above") += 1;
            }
            block.push(SlotGroup {
                routing: SlotRouting::Partition { classes: partition },
                symbols,
            });
        }
        // Postcondition: every (server, subset) counter ended at gamma + 1.
        for (i, &p) in self.profile.parts().iter().enumerate() {
            let want = self.params.gammas[i] as usize + 1;
            for tau in combin::subsets(self.users, p) {
                let got = ledger.get(&(i, tau.clone())).copied().unwrap_or(1);
                if got != want {
                    return Err(SchemeError::LedgerIncomplete {
                        key: format!("server {i}, class {tau:?}"),
                        got,
                        want,
                    });
                }
            }
        }
        Ok(FlexibleDelivery { block, ledger })
    }

    /// Decode one user's file from its cache and the per-group symbols it
    /// heard. `received[g]` is this user's received row for slot group g;
    /// the ledger is replayed from the shared partition schedule.
    pub fn decode(
        &self,
        user: usize,
        cache: &CacheContents,
        received: &[Vec<Fe>],
        demands: &[usize],
    ) -> Result<Vec<Fe>, SchemeError> {
        let servers = self.profile.servers();
        let want = demands[user];
        let mut ledger: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let mut recovered: BTreeMap<PiecePart, Vec<Fe>> = BTreeMap::new();
        for (g, partition) in self.partitions().into_iter().enumerate() {
            for (i, class) in partition.iter().take(servers).enumerate() {
                let copy = *ledger.entry((i, class.clone())).or_insert(1);
                if class.contains(&user) {
                    let row = received.get(g).ok_or_else(|| SchemeError::DecodeFailure {
                        user,
                        detail: format!("missing received symbols for slot group {g}"),
                    })?;
                    let mut pico = row.clone();
                    for &r in class {
                        if r == user {
                            continue;
                        }
                        let tau: Vec<usize> = class.iter().copied().filter(|&v| v != r).collect();
                        let key = PieceKey {
                            file: demands[r],
                            part: PiecePart::Pico { server: i, tau, copy },
                        };
                        let cached = cache.get(&key).ok_or_else(|| SchemeError::DecodeFailure {
                            user,
                            detail: format!("interference piece {key} not cached"),
                        })?;
                        for (acc, &s) in pico.iter_mut().zip(cached) {
                            *acc = Fe(acc.0 ^ s.0);
                        }
                    }
                    let tau: Vec<usize> = class.iter().copied().filter(|&v| v != user).collect();
                    recovered.insert(PiecePart::Pico { server: i, tau, copy }, pico);
                }
            }
            for (i, class) in partition.iter().take(servers).enumerate() {
                *ledger.get_mut(&(i, class.clone())).expect("visited above") += 1;
            }
        }
        let mut out = Vec::with_capacity(self.plan.piece_count() * self.pico_symbols());
        for part in self.plan.parts() {
            if part.tau().contains(&user) {
                let key = PieceKey { file: want, part: part.clone() };
                let cached = cache.get(&key).ok_or_else(|| SchemeError::DecodeFailure {
                    user,
                    detail: format!("cached piece {key} missing"),
                })?;
                out.extend_from_slice(cached);
            } else {
                let pico = recovered.get(part).ok_or_else(|| SchemeError::DecodeFailure {
                    user,
                    detail: format!("pico {part} never recovered"),
                })?;
                out.extend_from_slice(pico);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{memory_exact, receive_group};
    use crate::rat_int;
    use crate::Rational;

    fn cfg_for(k: usize, parts: &[usize], n: usize, seed: u64) -> (ScenarioConfig, PartitionProfile) {
        let profile = PartitionProfile::new(parts.to_vec(), k).unwrap();
        let params = flex_params(k, &profile);
        let denom: u128 = params.alphas.iter().zip(&params.gammas).map(|(a, g)| a * g).sum();
        let (memory, _) = flexible_pair(k, n, &profile);
        let cfg = ScenarioConfig {
            users: k,
            servers: parts.len(),
            files: n,
            cache_files: memory,
            file_bits: denom as u64 * 4,
            symbol_bits: 4,
            seed,
        };
        cfg.validate().unwrap();
        (cfg, profile)
    }

    fn run_all_users(cfg: &ScenarioConfig, scheme: &Flexible, demands: &[usize]) -> bool {
        let field = cfg.field().unwrap();
        let catalog = FileCatalog::random(cfg, &field);
        let caches = scheme.place(&catalog);
        let delivery = scheme.deliver(&catalog, demands).unwrap();
        let net = scheme.network();
        let mut heard: Vec<Vec<Vec<Fe>>> = vec![Vec::new(); cfg.users];
        for g in &delivery.block.groups {
            let rx = receive_group(&net, &field, g, cfg.users).unwrap();
            for (k, rows) in heard.iter_mut().enumerate() {
                rows.push(rx.row(k).to_vec());
            }
        }
        (0..cfg.users).all(|k| {
            scheme
                .decode(k, &caches[k], &heard[k], demands)
                .map(|f| f == catalog.file(demands[k]))
                .unwrap_or(false)
        })
    }

    #[test]
    fn worked_example_structure() {
        // K=4, L=2, profile (2,2): 6 ordered partitions, x = 1/8, minimal
        // file of 8 symbols -> 6 slots = (3/4) F/m. Memory corner M = 1.
        let (cfg, profile) = cfg_for(4, &[2, 2], 4, 33);
        assert_eq!(cfg.cache_files, rat_int(1));
        let field = cfg.field().unwrap();
        let catalog = FileCatalog::random(&cfg, &field);
        let scheme = Flexible::new(&cfg, profile).unwrap();
        assert_eq!(scheme.partitions().len(), 6);
        assert_eq!(scheme.pico_symbols(), 1);
        let caches = scheme.place(&catalog);
        assert!(memory_exact(&caches, &cfg));
        let delivery = scheme.deliver(&catalog, &[0, 1, 2, 3]).unwrap();
        assert_eq!(delivery.block.slot_count(), 6);
        let want = flexible_pair(4, 4, scheme.profile()).1 * rat_int(cfg.file_symbols() as u128);
        assert_eq!(Rational::from_integer(delivery.block.slot_count().into()), want);
        // First partition is ({0,1},{2,3}); its ledger entries ended at
        // gamma + 1 = 2.
        assert_eq!(delivery.ledger.get(&(0, vec![0, 1])), Some(&2));
        assert_eq!(delivery.ledger.get(&(1, vec![2, 3])), Some(&2));
        assert!(run_all_users(&cfg, &scheme, &[0, 1, 2, 3]));
    }

    #[test]
    fn every_demand_vector_decodes_k4() {
        let (cfg, profile) = cfg_for(4, &[2, 2], 4, 34);
        let scheme = Flexible::new(&cfg, profile).unwrap();
        for d in 0..256usize {
            let demands = vec![d & 3, (d >> 2) & 3, (d >> 4) & 3, (d >> 6) & 3];
            assert!(run_all_users(&cfg, &scheme, &demands), "demands {demands:?}");
        }
    }

    #[test]
    fn idle_users_hear_nothing_but_still_decode() {
        // K=5, L=2, profile (2,2): one user idles per slot (Q=1).
        let (cfg, profile) = cfg_for(5, &[2, 2], 5, 35);
        let scheme = Flexible::new(&cfg, profile).unwrap();
        assert_eq!(scheme.profile().idle(), 1);
        // Served users per slot is K - Q.
        for partition in scheme.partitions() {
            let served: usize = partition.iter().take(2).map(Vec::len).sum();
            assert_eq!(served, 4);
        }
        assert!(run_all_users(&cfg, &scheme, &[0, 1, 2, 3, 4]));
        assert!(run_all_users(&cfg, &scheme, &[2, 2, 2, 2, 2]));
    }

    #[test]
    fn ledger_budget_enforced_per_subset() {
        // K=6, profile (2,2), Q=2: gamma_i = 6 visits per class subset.
        let (cfg, profile) = cfg_for(6, &[2, 2], 6, 36);
        let scheme = Flexible::new(&cfg, profile).unwrap();
        let field = cfg.field().unwrap();
        let catalog = FileCatalog::random(&cfg, &field);
        let delivery = scheme.deliver(&catalog, &[0, 1, 2, 3, 4, 5]).unwrap();
        let gammas = &scheme.params().gammas;
        assert_eq!(gammas, &vec![6, 6]);
        for ((i, tau), count) in &delivery.ledger {
            assert_eq!(*count, gammas[*i] as usize + 1, "server {i} class {tau:?}");
        }
        // Every 2-subset of the 6 users appears for both servers.
        assert_eq!(delivery.ledger.len(), 2 * combin::binomial(6, 2) as usize);
        assert!(run_all_users(&cfg, &scheme, &[5, 4, 3, 2, 1, 0]));
    }

    #[test]
    fn single_server_profile_degenerates_to_reference() {
        // L=1, profile (K): one partition, one slot group whose packet
        // equals the reference scheme's single packet at t = K-1.
        use crate::scheme::single::SingleServer;
        let (cfg, profile) = cfg_for(4, &[4], 4, 37);
        let scheme = Flexible::new(&cfg, profile).unwrap();
        let field = cfg.field().unwrap();
        let catalog = FileCatalog::random(&cfg, &field);
        let demands = vec![0, 1, 2, 3];
        let delivery = scheme.deliver(&catalog, &demands).unwrap();
        assert_eq!(delivery.block.groups.len(), 1);
        let reference = SingleServer::new(vec![0, 1, 2, 3], 3, cfg.file_symbols()).unwrap();
        let packets = reference.deliver(&catalog, &demands);
        assert_eq!(packets.len(), 1);
        assert_eq!(delivery.block.groups[0].symbols.row(0), &packets[0].symbols[..]);
    }

    #[test]
    fn unbalanced_profiles_round_trip() {
        for (k, parts) in [(5usize, vec![2usize, 3]), (6, vec![2, 4]), (6, vec![3, 3]), (6, vec![2, 2, 2])] {
            let (cfg, profile) = cfg_for(k, &parts, k, 38);
            let scheme = Flexible::new(&cfg, profile).unwrap();
            let demands: Vec<usize> = (0..k).collect();
            assert!(run_all_users(&cfg, &scheme, &demands), "K={k} profile {parts:?}");
        }
    }

    #[test]
    fn wrong_memory_rejected() {
        let (cfg, profile) = cfg_for(4, &[2, 2], 4, 39);
        let bad = ScenarioConfig { cache_files: rat_int(2), ..cfg };
        assert!(matches!(
            Flexible::new(&bad, profile),
            Err(SchemeError::NonIntegralCorner { .. })
        ));
    }
}
