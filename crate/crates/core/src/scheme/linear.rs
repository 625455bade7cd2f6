//! The linear-network scheme: zero-forcing precoding over a full-rank
//! transfer matrix.
//!
//! User k receives the fixed combination h_k . x of the L server symbols.
//! With corner parameter t = KM/N the scheme activates L' = min(L, K - t)
//! servers, cuts each t-subset sub-file into C(K-t-1, L'-1) mini-files,
//! and serves one (t + L')-subset S of users per block. Within a block,
//! every (t+1)-subset T of S gets a precoder u_T orthogonal to the reduced
//! channel rows of S \ T and non-orthogonal to those of T, so each user
//! hears only the omega = C(t+L'-1, t) coded combinations it participates
//! in. Stacking omega random-coefficient rounds per block gives every user
//! an invertible omega x omega system; the servers verify invertibility for
//! all users in S before transmitting and re-randomize the coefficients if
//! any system is singular, so decoding never silently corrupts data.
//! Mini-file freshness follows a per-(user, subset) ledger replayed
//! identically by servers and decoders.

use std::collections::BTreeMap;

use crate::combin::{self, binomial};
use crate::gf::{Fe, Field, GfError, Matrix};
use crate::model::{
    CacheContents, FileCatalog, NetworkModel, PieceKey, PiecePart, ScenarioConfig, SlotGroup,
    SlotRouting, SplitPlan, TransmitBlock,
};
use crate::rat_int;
use crate::scheme::{corner_t, DeliveryStats, SchemeError};
use crate::{Rational, SimRng};

/// Transfer-matrix draws allowed before giving up on rank conditions.
const TRANSFER_DRAWS: u64 = 256;
/// Random-combination draws per precoder constraint set.
const PRECODER_DRAWS: u64 = 64;
/// Whole-block coefficient re-randomizations before declaring the field
/// too small.
const BLOCK_REROLLS: u64 = 8;

/// One configured linear-scheme instance (demand-independent state).
#[derive(Clone, Debug)]
pub struct LinearScheme {
    users: usize,
    servers: usize,
    t: usize,
    active: usize,
    copies: usize,
    omega: usize,
    plan: SplitPlan,
    field: Field,
}

/// Channel state and precoders, fixed across demand vectors for one seed:
/// `precoders[s][j]` is the length-L' precoder of the j-th (t+1)-subset
/// (lexicographic) of the s-th (t+L')-subset (lexicographic) of users.
#[derive(Clone, Debug)]
pub struct LinearSession {
    pub transfer: Matrix,
    precoders: Vec<Vec<Vec<Fe>>>,
    pub stats: DeliveryStats,
}

impl LinearSession {
    /// Designed precoders, indexed by block then by the lexicographic rank
    /// of the beneficiary subset within that block.
    pub fn precoders(&self) -> &[Vec<Vec<Fe>>] {
        &self.precoders
    }
}

/// The random combining coefficients actually used, indexed
/// `[block][round][subset_in_block][member_in_subset]` — transmitted
/// alongside the payload so decoders can reconstruct their systems.
pub type CoefficientRecord = Vec<Vec<Vec<Vec<Fe>>>>;

/// Delivery output for one demand vector.
#[derive(Clone, Debug)]
pub struct LinearDelivery {
    pub block: TransmitBlock,
    pub coefficients: CoefficientRecord,
    pub stats: DeliveryStats,
}

impl LinearScheme {
    pub fn new(cfg: &ScenarioConfig) -> Result<LinearScheme, SchemeError> {
        let t = corner_t(cfg.users, &cfg.cache_files, cfg.files)?;
        let active = (cfg.users - t).min(cfg.servers);
        let (copies, omega) = if active == 0 {
            (1, 0)
        } else {
            (
                binomial(cfg.users - t - 1, active - 1) as usize,
                binomial(t + active - 1, t) as usize,
            )
        };
        let plan = SplitPlan::two_level(cfg.users, t, copies, cfg.file_symbols())?;
        Ok(LinearScheme {
            users: cfg.users,
            servers: cfg.servers,
            t,
            active,
            copies,
            omega,
            plan,
            field: cfg.field()?,
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Servers actually precoding, L' = min(L, K - t).
    pub fn active(&self) -> usize {
        self.active
    }

    /// Mini-files per sub-file.
    pub fn copies(&self) -> usize {
        self.copies
    }

    /// Stacked rounds per block, C(t + L' - 1, t).
    pub fn omega(&self) -> usize {
        self.omega
    }

    pub fn plan(&self) -> &SplitPlan {
        &self.plan
    }

    pub fn mini_symbols(&self) -> usize {
        self.plan.piece_symbols()
    }

    /// The user blocks served in order: all (t + L')-subsets, lexicographic.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        if self.active == 0 {
            Vec::new()
        } else {
            combin::subsets(self.users, self.t + self.active)
        }
    }

    /// Slots this scheme transmits for a file of `file_symbols` symbols:
    /// (K - t) / min(K, L + t) of them.
    pub fn formula_slots(&self, file_symbols: usize) -> Rational {
        let num = rat_int((self.users - self.t) as u128);
        let den = rat_int(self.users.min(self.servers + self.t) as u128);
        num / den * rat_int(file_symbols as u128)
    }

    pub fn network(&self, session: &LinearSession) -> NetworkModel {
        NetworkModel::Linear { transfer: session.transfer.clone() }
    }

    /// Demand-oblivious placement: user k caches every mini-file whose
    /// subset contains k, for every file.
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

    /// Reduced channel row of user k: the first L' transfer coefficients.
    fn reduced_row(&self, transfer: &Matrix, k: usize) -> Vec<Fe> {
        transfer.row(k)[..self.active].to_vec()
    }

    /// Sample the transfer matrix and design all zero-forcing precoders.
    /// Channel draws that are rank-deficient or whose geometry defeats some
    /// precoder constraint set are discarded and re-sampled (counted in
    /// `transfer_resamples`); budget exhaustion means the field cannot
    /// support these parameters.
    pub fn prepare(
        &self,
        transfer_rng: &mut SimRng,
        precoder_rng: &mut SimRng,
    ) -> Result<LinearSession, SchemeError> {
        let mut stats = DeliveryStats::default();
        let blocks = self.blocks();
        'channel: for draw in 0..TRANSFER_DRAWS {
            let h = Matrix::random(&self.field, self.users, self.servers, transfer_rng);
            let full = self.field.rank(&h) == self.users.min(self.servers);
            let reduced_ok = self.active == 0 || {
                let rows: Vec<Vec<Fe>> = (0..self.users).map(|k| self.reduced_row(&h, k)).collect();
                self.field.rank(&Matrix::from_rows(rows)) == self.active
            };
            if !full || !reduced_ok {
                continue;
            }
            let mut precoders = Vec::with_capacity(blocks.len());
            for s_members in &blocks {
                let reduced: BTreeMap<usize, Vec<Fe>> = s_members
                    .iter()
                    .map(|&k| (k, self.reduced_row(&h, k)))
                    .collect();
                let mut per_subset = Vec::new();
                for t_sub in combin::subsets_of(s_members, self.t + 1) {
                    let perp: Vec<&[Fe]> = s_members
                        .iter()
                        .filter(|k| !t_sub.contains(k))
                        .map(|k| reduced[k].as_slice())
                        .collect();
                    let avoid: Vec<&[Fe]> = t_sub.iter().map(|k| reduced[k].as_slice()).collect();
                    match self.field.constrained_precoder(&perp, &avoid, self.active, precoder_rng, PRECODER_DRAWS) {
                        Ok((u, redraws)) => {
                            stats.precoder_redraws += redraws;
                            per_subset.push(u);
                        }
                        Err(GfError::PrecoderNotFound { draws }) => {
                            // This channel cannot be zero-forced at all;
                            // draw a new one.
                            stats.precoder_redraws += draws;
                            continue 'channel;
                        }
                        Err(e) => return Err(SchemeError::Gf(e)),
                    }
                }
                precoders.push(per_subset);
            }
            stats.transfer_resamples = draw;
            return Ok(LinearSession { transfer: h, precoders, stats });
        }
        Err(SchemeError::FieldTooSmall {
            width: self.field.width(),
            detail: format!(
                "no transfer matrix admitting zero-forcing precoders in {TRANSFER_DRAWS} draws"
            ),
        })
    }

    /// Per-user combining matrix inside one block: row = round, column =
    /// the user's (t+1)-subsets in block-local lexicographic order.
    fn decode_matrix(
        &self,
        user: usize,
        reduced_user: &[Fe],
        subsets: &[Vec<usize>],
        precoders: &[Vec<Fe>],
        coeffs: &[Vec<Vec<Fe>>],
    ) -> Result<Matrix, SchemeError> {
        let mut a = Matrix::zero(self.omega, self.omega);
        for (w, round) in coeffs.iter().enumerate().take(self.omega) {
            let mut col = 0;
            for (j, t_sub) in subsets.iter().enumerate() {
                let Some(pos) = t_sub.iter().position(|&r| r == user) else {
                    continue;
                };
                let gain = self.field.dot(reduced_user, &precoders[j])?;
                a.set(w, col, self.field.mul(gain, round[j][pos]));
                col += 1;
            }
            debug_assert_eq!(col, self.omega, "user participates in omega subsets");
        }
        Ok(a)
    }

    /// Transmit all blocks for one demand vector. Coefficients come from
    /// `coeff_rng`; each block is re-randomized (bounded) until every
    /// in-block user's combining matrix is invertible.
    pub fn deliver(
        &self,
        catalog: &FileCatalog,
        demands: &[usize],
        session: &LinearSession,
        coeff_rng: &mut SimRng,
    ) -> Result<LinearDelivery, SchemeError> {
        let mut stats = DeliveryStats::default();
        let mut block = TransmitBlock::new(self.servers);
        let mut coefficients: CoefficientRecord = Vec::new();
        let mut ledger: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let width = self.mini_symbols();
        for (s_idx, s_members) in self.blocks().into_iter().enumerate() {
            let subsets = combin::subsets_of(&s_members, self.t + 1);
            // Freshness indices are read once per block and shared by all
            // omega rounds; they advance only after the block is sent.
            let mut fresh: Vec<Vec<usize>> = Vec::with_capacity(subsets.len());
            for t_sub in &subsets {
                let mut per_member = Vec::with_capacity(t_sub.len());
                for &r in t_sub {
                    let tau: Vec<usize> = t_sub.iter().copied().filter(|&v| v != r).collect();
                    let copy = *ledger.entry((r, tau.clone())).or_insert(1);
                    if copy > self.copies {
                        return Err(SchemeError::LedgerOverflow {
                            key: format!("user {r}, subset {tau:?}"),
                            next: copy,
                            budget: self.copies,
                        });
                    }
                    per_member.push(copy);
                }
                fresh.push(per_member);
            }
            let reduced: Vec<Vec<Fe>> = s_members
                .iter()
                .map(|&k| self.reduced_row(&session.transfer, k))
                .collect();
            // Draw coefficients until every served user could invert its
            // system, or give up loudly.
            let mut chosen = None;
            for _ in 0..BLOCK_REROLLS {
                let coeffs: Vec<Vec<Vec<Fe>>> = (0..self.omega)
                    .map(|_| {
                        subsets
                            .iter()
                            .map(|t_sub| {
                                t_sub.iter().map(|_| self.field.random(coeff_rng)).collect()
                            })
                            .collect()
                    })
                    .collect();
                let all_invertible = s_members.iter().enumerate().all(|(i, &k)| {
                    self.decode_matrix(k, &reduced[i], &subsets, &session.precoders[s_idx], &coeffs)
                        .map(|a| self.field.rank(&a) == self.omega)
                        .unwrap_or(false)
                });
                if all_invertible {
                    chosen = Some(coeffs);
                    break;
                }
                stats.coefficient_rerolls += 1;
            }
            let Some(coeffs) = chosen else {
                return Err(SchemeError::FieldTooSmall {
                    width: self.field.width(),
                    detail: format!(
                        "block {s_members:?}: no invertible coefficient draw in {BLOCK_REROLLS} tries"
                    ),
                });
            };
            // Round w occupies symbol columns [w*width, (w+1)*width).
            let mut symbols = Matrix::zero(self.servers, self.omega * width);
            for (w, round) in coeffs.iter().enumerate() {
                for (j, t_sub) in subsets.iter().enumerate() {
                    let mut combined = vec![Fe::ZERO; width];
                    for (pos, &r) in t_sub.iter().enumerate() {
                        let tau: Vec<usize> =
                            t_sub.iter().copied().filter(|&v| v != r).collect();
                        let part = PiecePart::Mini { tau, copy: fresh[j][pos] };
                        let mini = self
                            .plan
                            .slice(catalog.file(demands[r]), &part)
                            .expect("mini in plan");
                        self.field.axpy(&mut combined, round[j][pos], mini);
                    }
                    for s in 0..self.active {
                        let gain = session.precoders[s_idx][j][s];
                        for (c, &v) in combined.iter().enumerate() {
                            let cur = symbols.get(s, w * width + c);
                            symbols.set(s, w * width + c, self.field.add(cur, self.field.mul(gain, v)));
                        }
                    }
                }
            }
            block.push(SlotGroup { routing: SlotRouting::Fixed, symbols });
            coefficients.push(coeffs);
            for (j, t_sub) in subsets.iter().enumerate() {
                for (pos, &r) in t_sub.iter().enumerate() {
                    let tau: Vec<usize> = t_sub.iter().copied().filter(|&v| v != r).collect();
                    debug_assert_eq!(ledger[&(r, tau.clone())], fresh[j][pos]);
                    *ledger.get_mut(&(r, tau)).expect("entered above") += 1;
                }
            }
        }
        // Postcondition: every (user, t-subset-not-containing-it) counter
        // consumed exactly its `copies` budget.
        if self.active > 0 {
            for tau in combin::subsets(self.users, self.t) {
                for r in 0..self.users {
                    if tau.contains(&r) {
                        continue;
                    }
                    let got = ledger.get(&(r, tau.clone())).copied().unwrap_or(1);
                    if got != self.copies + 1 {
                        return Err(SchemeError::LedgerIncomplete {
                            key: format!("user {r}, subset {tau:?}"),
                            got,
                            want: self.copies + 1,
                        });
                    }
                }
            }
        }
        Ok(LinearDelivery { block, coefficients, stats })
    }

    /// Decode one user's file. `received[b]` holds the user's received
    /// symbols for block b (omega rounds wide); the freshness ledger is
    /// replayed from the shared block schedule.
    pub fn decode(
        &self,
        user: usize,
        cache: &CacheContents,
        received: &[Vec<Fe>],
        demands: &[usize],
        session: &LinearSession,
        coefficients: &CoefficientRecord,
    ) -> Result<Vec<Fe>, SchemeError> {
        let want = demands[user];
        let width = self.mini_symbols();
        let mut ledger: BTreeMap<(usize, Vec<usize>), usize> = BTreeMap::new();
        let mut recovered: BTreeMap<PiecePart, Vec<Fe>> = BTreeMap::new();
        for (s_idx, s_members) in self.blocks().into_iter().enumerate() {
            let subsets = combin::subsets_of(&s_members, self.t + 1);
            let mut fresh: Vec<Vec<usize>> = Vec::with_capacity(subsets.len());
            for t_sub in &subsets {
                let mut per_member = Vec::with_capacity(t_sub.len());
                for &r in t_sub {
                    let tau: Vec<usize> = t_sub.iter().copied().filter(|&v| v != r).collect();
                    per_member.push(*ledger.entry((r, tau)).or_insert(1));
                }
                fresh.push(per_member);
            }
            if s_members.contains(&user) {
                let row = received.get(s_idx).ok_or_else(|| SchemeError::DecodeFailure {
                    user,
                    detail: format!("missing received symbols for block {s_idx}"),
                })?;
                if row.len() != self.omega * width {
                    return Err(SchemeError::DecodeFailure {
                        user,
                        detail: format!(
                            "block {s_idx}: received {} symbols, expected {}",
                            row.len(),
                            self.omega * width
                        ),
                    });
                }
                let coeffs = &coefficients[s_idx];
                let reduced_user = self.reduced_row(&session.transfer, user);
                // Subtract cached interference: terms of the user's own
                // subsets contributed by other members.
                let mut cleaned: Vec<Vec<Fe>> = (0..self.omega)
                    .map(|w| row[w * width..(w + 1) * width].to_vec())
                    .collect();
                let mut my_subsets = Vec::new();
                for (j, t_sub) in subsets.iter().enumerate() {
                    if !t_sub.contains(&user) {
                        continue; // zero-forced away from this user
                    }
                    my_subsets.push(j);
                    let gain = self.field.dot(&reduced_user, &session.precoders[s_idx][j])?;
                    for (pos, &r) in t_sub.iter().enumerate() {
                        if r == user {
                            continue;
                        }
                        let tau: Vec<usize> =
                            t_sub.iter().copied().filter(|&v| v != r).collect();
                        let key = PieceKey {
                            file: demands[r],
                            part: PiecePart::Mini { tau, copy: fresh[j][pos] },
                        };
                        let cached = cache.get(&key).ok_or_else(|| SchemeError::DecodeFailure {
                            user,
                            detail: format!("interference piece {key} not cached"),
                        })?;
                        for (w, clean) in cleaned.iter_mut().enumerate() {
                            let factor = self.field.mul(gain, coeffs[w][j][pos]);
                            self.field.axpy(clean, factor, cached);
                        }
                    }
                }
                let a = self.decode_matrix(
                    user,
                    &reduced_user,
                    &subsets,
                    &session.precoders[s_idx],
                    coeffs,
                )?;
                // Solve the omega x omega system once per symbol position.
                let mut minis: Vec<Vec<Fe>> = vec![vec![Fe::ZERO; width]; self.omega];
                for c in 0..width {
                    let rhs: Vec<Fe> = (0..self.omega).map(|w| cleaned[w][c]).collect();
                    let sol = self.field.solve_square(&a, &rhs).map_err(|e| match e {
                        GfError::SingularMatrix => SchemeError::SingularDecodeMatrix {
                            user,
                            subset: s_members.clone(),
                        },
                        other => SchemeError::Gf(other),
                    })?;
                    for (col, &v) in sol.iter().enumerate() {
                        minis[col][c] = v;
                    }
                }
                for (col, &j) in my_subsets.iter().enumerate() {
                    let t_sub = &subsets[j];
                    let pos = t_sub.iter().position(|&r| r == user).expect("user in subset");
                    let tau: Vec<usize> =
                        t_sub.iter().copied().filter(|&v| v != user).collect();
                    recovered
                        .insert(PiecePart::Mini { tau, copy: fresh[j][pos] }, minis[col].clone());
                }
            }
            for t_sub in &subsets {
                for &r in t_sub {
                    let tau: Vec<usize> = t_sub.iter().copied().filter(|&v| v != r).collect();
                    *ledger.get_mut(&(r, tau)).expect("entered above") += 1;
                }
            }
        }
        let mut out = Vec::with_capacity(self.plan.piece_count() * width);
        for part in self.plan.parts() {
            if part.tau().contains(&user) {
                let key = PieceKey { file: want, part: part.clone() };
                let cached = cache.get(&key).ok_or_else(|| SchemeError::DecodeFailure {
                    user,
                    detail: format!("cached piece {key} missing"),
                })?;
                out.extend_from_slice(cached);
            } else {
                let mini = recovered.get(part).ok_or_else(|| SchemeError::DecodeFailure {
                    user,
                    detail: format!("mini-file {part} never recovered"),
                })?;
                out.extend_from_slice(mini);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{memory_exact, receive_group};
    use crate::{rat, rng_for, RngStream};

    fn cfg_for(k: usize, l: usize, n: usize, m_num: i64, m_den: i64, seed: u64) -> ScenarioConfig {
        // Minimal file: one symbol per mini-file.
        let t = (m_num as usize * k) / (n * m_den as usize);
        let active = (k - t).min(l);
        let copies = if active == 0 { 1 } else { binomial(k - t - 1, active - 1) };
        let minis = binomial(k, t) * copies;
        let cfg = ScenarioConfig {
            users: k,
            servers: l,
            files: n,
            cache_files: rat(m_num, m_den),
            file_bits: minis as u64 * 16,
            symbol_bits: 16,
            seed,
        };
        cfg.validate().unwrap();
        cfg
    }

    fn run_all_users(cfg: &ScenarioConfig, demands: &[usize]) -> (u64, DeliveryStats) {
        let scheme = LinearScheme::new(cfg).unwrap();
        let field = cfg.field().unwrap();
        let catalog = FileCatalog::random(cfg, &field);
        let caches = scheme.place(&catalog);
        let mut t_rng = rng_for(cfg.seed, RngStream::TransferMatrix);
        let mut p_rng = rng_for(cfg.seed, RngStream::Precoder);
        let session = scheme.prepare(&mut t_rng, &mut p_rng).unwrap();
        let mut c_rng = rng_for(cfg.seed, RngStream::Coefficients);
        let delivery = scheme.deliver(&catalog, demands, &session, &mut c_rng).unwrap();
        let net = scheme.network(&session);
        let mut heard: Vec<Vec<Vec<Fe>>> = vec![Vec::new(); cfg.users];
        for g in &delivery.block.groups {
            let rx = receive_group(&net, &field, g, cfg.users).unwrap();
            for (k, rows) in heard.iter_mut().enumerate() {
                rows.push(rx.row(k).to_vec());
            }
        }
        for k in 0..cfg.users {
            let got = scheme
                .decode(k, &caches[k], &heard[k], demands, &session, &delivery.coefficients)
                .unwrap();
            assert_eq!(got, catalog.file(demands[k]), "user {k} demands {demands:?}");
        }
        let mut stats = session.stats;
        stats.coefficient_rerolls = delivery.stats.coefficient_rerolls;
        (delivery.block.slot_count(), stats)
    }

    #[test]
    fn worked_example_dimensions() {
        // K=4, L=2, M=1, N=4: t=1, L'=2, two mini-files per sub-file,
        // omega=2 rounds, 4 blocks of 3 users.
        let cfg = cfg_for(4, 2, 4, 1, 1, 101);
        let scheme = LinearScheme::new(&cfg).unwrap();
        assert_eq!(scheme.t(), 1);
        assert_eq!(scheme.active(), 2);
        assert_eq!(scheme.copies(), 2);
        assert_eq!(scheme.omega(), 2);
        assert_eq!(scheme.blocks().len(), 4);
        assert_eq!(scheme.plan().piece_count(), 8);
        // Delay (K-t)/min(K, L+t) = 3/3 = 1 file.
        assert_eq!(scheme.formula_slots(8), rat_int(8));
        let (slots, _) = run_all_users(&cfg, &[0, 1, 2, 3]);
        assert_eq!(slots, 8);
    }

    #[test]
    fn measured_slots_match_formula_across_corners() {
        for (k, l, m_num) in [(4, 2, 0), (4, 2, 1), (4, 2, 2), (4, 2, 3), (4, 3, 1), (5, 2, 1), (4, 4, 1)] {
            let cfg = cfg_for(k, l, k, m_num, 1, 200 + m_num as u64);
            let scheme = LinearScheme::new(&cfg).unwrap();
            let demands: Vec<usize> = (0..k).collect();
            let (slots, _) = run_all_users(&cfg, &demands);
            assert_eq!(
                Rational::from_integer(slots.into()),
                scheme.formula_slots(cfg.file_symbols()),
                "K={k} L={l} M={m_num}"
            );
        }
    }

    #[test]
    fn fewer_users_than_servers_fall_back() {
        // K=3, L=4, M=1, N=3: t=1, L'=min(4, 2)=2 active servers only.
        let cfg = cfg_for(3, 4, 3, 1, 1, 77);
        let scheme = LinearScheme::new(&cfg).unwrap();
        assert_eq!(scheme.active(), 2);
        // Delay (K-t)/min(K, L+t) = 2/3.
        assert_eq!(scheme.formula_slots(3), rat_int(2));
        let (slots, _) = run_all_users(&cfg, &[2, 0, 1]);
        assert_eq!(slots, 2);
    }

    #[test]
    fn full_cache_needs_no_delivery() {
        let cfg = cfg_for(3, 2, 3, 3, 1, 55);
        let scheme = LinearScheme::new(&cfg).unwrap();
        assert_eq!(scheme.active(), 0);
        let (slots, stats) = run_all_users(&cfg, &[0, 0, 2]);
        assert_eq!(slots, 0);
        assert!(!stats.any());
    }

    #[test]
    fn zero_cache_works_via_singleton_subsets() {
        let cfg = cfg_for(3, 2, 3, 0, 1, 56);
        let scheme = LinearScheme::new(&cfg).unwrap();
        assert_eq!(scheme.t(), 0);
        assert_eq!(scheme.omega(), 1);
        let field = cfg.field().unwrap();
        let catalog = FileCatalog::random(&cfg, &field);
        let caches = scheme.place(&catalog);
        assert!(caches.iter().all(|c| c.piece_count() == 0));
        assert!(memory_exact(&caches, &cfg));
        let (slots, _) = run_all_users(&cfg, &[1, 1, 1]);
        // Delay 3/2 of a 2-mini file (3 symbols... file = C(3,0)*2 = 2 minis).
        assert_eq!(Rational::from_integer(slots.into()), scheme.formula_slots(cfg.file_symbols()));
    }

    #[test]
    fn memory_budget_is_exact() {
        for (k, l, m_num) in [(4, 2, 1), (4, 2, 2), (5, 2, 2), (4, 3, 2)] {
            let cfg = cfg_for(k, l, k, m_num, 1, 300 + m_num as u64);
            let scheme = LinearScheme::new(&cfg).unwrap();
            let field = cfg.field().unwrap();
            let catalog = FileCatalog::random(&cfg, &field);
            assert!(memory_exact(&scheme.place(&catalog), &cfg), "K={k} L={l} M={m_num}");
        }
    }

    #[test]
    fn every_demand_vector_decodes_k4() {
        let cfg = cfg_for(4, 2, 4, 2, 1, 500);
        for d in 0..256usize {
            let demands = vec![d & 3, (d >> 2) & 3, (d >> 4) & 3, (d >> 6) & 3];
            run_all_users(&cfg, &demands);
        }
    }

    #[test]
    fn zero_forcing_holds_per_precoder() {
        let cfg = cfg_for(5, 3, 5, 1, 1, 42);
        let scheme = LinearScheme::new(&cfg).unwrap();
        let field = cfg.field().unwrap();
        let mut t_rng = rng_for(cfg.seed, RngStream::TransferMatrix);
        let mut p_rng = rng_for(cfg.seed, RngStream::Precoder);
        let session = scheme.prepare(&mut t_rng, &mut p_rng).unwrap();
        for (s_idx, s_members) in scheme.blocks().into_iter().enumerate() {
            for (j, t_sub) in combin::subsets_of(&s_members, scheme.t() + 1).into_iter().enumerate() {
                let u = &session.precoders[s_idx][j];
                for &k in &s_members {
                    let gain = field.dot(&scheme.reduced_row(&session.transfer, k), u).unwrap();
                    if t_sub.contains(&k) {
                        assert!(!gain.is_zero(), "subset member {k} must hear subset {t_sub:?}");
                    } else {
                        assert!(gain.is_zero(), "user {k} must be zero-forced from {t_sub:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn tiny_field_failures_are_loud() {
        // Over GF(2) the constraint sets are usually unsatisfiable; the
        // scheme must refuse rather than transmit undecodable blocks.
        let base = cfg_for(4, 2, 4, 1, 1, 7);
        let cfg = ScenarioConfig { symbol_bits: 1, file_bits: base.file_bits / 16, ..base };
        cfg.validate().unwrap();
        let scheme = LinearScheme::new(&cfg).unwrap();
        let mut t_rng = rng_for(cfg.seed, RngStream::TransferMatrix);
        let mut p_rng = rng_for(cfg.seed, RngStream::Precoder);
        match scheme.prepare(&mut t_rng, &mut p_rng) {
            Err(SchemeError::FieldTooSmall { width, .. }) => assert_eq!(width, 1),
            Ok(session) => {
                let field = cfg.field().unwrap();
                let catalog = FileCatalog::random(&cfg, &field);
                let mut c_rng = rng_for(cfg.seed, RngStream::Coefficients);
                let err = scheme.deliver(&catalog, &[0, 1, 2, 3], &session, &mut c_rng);
                assert!(
                    matches!(err, Err(SchemeError::FieldTooSmall { .. })),
                    "GF(2) delivery should exhaust its reroll budget"
                );
            }
            Err(e) => panic!("unexpected error {e}"),
        }
    }
}
