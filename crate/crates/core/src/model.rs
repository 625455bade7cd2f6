//! Scenario data model: parameters, file catalog, split plans, caches and
//! the three network topologies between servers and users.
//!
//! A file of `F` bits is viewed as `F/m` symbols over GF(2^m) and split into
//! equal pieces according to a scheme-specific plan. Piece keys name the
//! pieces canonically (subsets as sorted comma-joined indices), and both the
//! placement and the decoders address content exclusively through those
//! keys, so encoder and decoder can never disagree about piece boundaries.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use num_traits::Signed;

use crate::combin;
use crate::gf::{Fe, Field, GfError, Matrix};
use crate::{rng_for, Rational, RngStream};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid scenario: {0}")]
    InvalidConfig(String),
    #[error("file of {symbols} symbols cannot be split into {pieces} equal nonempty pieces")]
    IndivisibleSplit { symbols: usize, pieces: u128 },
    #[error("invalid routing partition: {0}")]
    InvalidPartition(String),
    #[error(transparent)]
    Gf(#[from] GfError),
}

/// Full parameter set of one scenario.
///
/// `users` = K, `servers` = L, `files` = N (library size, N >= K assumed),
/// `cache_files` = M (cache size in units of files, rational so padded-group
/// corner points like 4/3 are representable exactly), `file_bits` = F,
/// `symbol_bits` = m.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub users: usize,
    pub servers: usize,
    pub files: usize,
    pub cache_files: Rational,
    pub file_bits: u64,
    pub symbol_bits: u32,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.users == 0 {
            return fail("need at least one user".into());
        }
        if self.servers == 0 {
            return fail("need at least one server".into());
        }
        if self.files < self.users {
            return fail(format!(
                "library must hold at least one file per user (N = {} < K = {})",
                self.files, self.users
            ));
        }
        if self.cache_files.is_negative() {
            return fail(format!("cache size M = {} is negative", self.cache_files));
        }
        if self.cache_files > Rational::from_integer(self.files.into()) {
            return fail(format!(
                "cache size M = {} exceeds the library size N = {}",
                self.cache_files, self.files
            ));
        }
        if !(1..=32).contains(&self.symbol_bits) {
            return fail(format!("symbol width m = {} outside 1..=32", self.symbol_bits));
        }
        if self.file_bits == 0 || !self.file_bits.is_multiple_of(self.symbol_bits as u64) {
            return fail(format!(
                "file size F = {} bits is not a positive multiple of the symbol width m = {}",
                self.file_bits, self.symbol_bits
            ));
        }
        Ok(())
    }

    /// Symbols per file, F/m.
    pub fn file_symbols(&self) -> usize {
        (self.file_bits / self.symbol_bits as u64) as usize
    }

    /// Cache budget M*F in bits, exact.
    pub fn memory_budget_bits(&self) -> Rational {
        &self.cache_files * Rational::from_integer(self.file_bits.into())
    }

    /// The GF(2^m) the scenario is coded over (built-in polynomial).
    pub fn field(&self) -> Result<Field, GfError> {
        Field::with_default_poly(self.symbol_bits)
    }
}

/// The N files, each `file_symbols` symbols. Contents are seeded-pseudorandom
/// so decode checks compare real data, never the all-zero vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FileCatalog {
    files: Vec<Vec<Fe>>,
}

impl FileCatalog {
    pub fn random(cfg: &ScenarioConfig, field: &Field) -> FileCatalog {
        let mut rng = rng_for(cfg.seed, RngStream::Catalog);
        let files = (0..cfg.files)
            .map(|_| (0..cfg.file_symbols()).map(|_| field.random(&mut rng)).collect())
            .collect();
        FileCatalog { files }
    }

    pub fn from_files(files: Vec<Vec<Fe>>) -> FileCatalog {
        FileCatalog { files }
    }

    pub fn count(&self) -> usize {
        self.files.len()
    }

    pub fn file(&self, n: usize) -> &[Fe] {
        &self.files[n]
    }
}

/// Demand vector: `demands[k]` is the file index user k requests (0-based).
pub type DemandVector = Vec<usize>;

pub fn validate_demands(demands: &[usize], cfg: &ScenarioConfig) -> Result<(), ModelError> {
    if demands.len() != cfg.users {
        return Err(ModelError::InvalidConfig(format!(
            "demand vector has {} entries for {} users",
            demands.len(),
            cfg.users
        )));
    }
    if let Some(&d) = demands.iter().find(|&&d| d >= cfg.files) {
        return Err(ModelError::InvalidConfig(format!(
            "demanded file {} outside library of {} files",
            d, cfg.files
        )));
    }
    Ok(())
}

/// Structural name of one piece of a file, canonical and totally ordered.
/// Subsets are kept sorted; `copy` indices are 1-based like the freshness
/// ledgers that consume them.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum PiecePart {
    /// Sub-file indexed by a user subset tau (cached by exactly tau).
    Subfile { tau: Vec<usize> },
    /// Equal further split of a sub-file, `copy` in 1..=copies.
    Mini { tau: Vec<usize>, copy: usize },
    /// Flexible-scheme piece: sub-file of server `server` (0-based),
    /// mini-file subset tau, pico copy index.
    Pico { server: usize, tau: Vec<usize>, copy: usize },
}

impl PiecePart {
    pub fn tau(&self) -> &[usize] {
        match self {
            PiecePart::Subfile { tau } | PiecePart::Mini { tau, .. } | PiecePart::Pico { tau, .. } => tau,
        }
    }
}

fn write_subset(f: &mut fmt::Formatter<'_>, tau: &[usize]) -> fmt::Result {
    write!(f, "[")?;
    for (i, t) in tau.iter().enumerate() {
        if i > 0 {
            write!(f, ",")?;
        }
        write!(f, "{t}")?;
    }
    write!(f, "]")
}

impl fmt::Display for PiecePart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PiecePart::Subfile { tau } => write_subset(f, tau),
            PiecePart::Mini { tau, copy } => {
                write_subset(f, tau)?;
                write!(f, "#{copy}")
            }
            PiecePart::Pico { server, tau, copy } => {
                write!(f, "s{server}")?;
                write_subset(f, tau)?;
                write!(f, "#{copy}")
            }
        }
    }
}

/// A piece of a specific file.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct PieceKey {
    pub file: usize,
    pub part: PiecePart,
}

impl fmt::Display for PieceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "W{}{}", self.file, self.part)
    }
}

/// How every file is cut into equal pieces: an ordered list of piece names
/// with their symbol ranges. The same plan applies to all files.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitPlan {
    parts: Vec<PiecePart>,
    piece_symbols: usize,
    index: BTreeMap<PiecePart, usize>,
}

impl SplitPlan {
    fn from_parts(parts: Vec<PiecePart>, file_symbols: usize) -> Result<SplitPlan, ModelError> {
        let pieces = parts.len() as u128;
        if pieces == 0 || !(file_symbols as u128).is_multiple_of(pieces) {
            return Err(ModelError::IndivisibleSplit { symbols: file_symbols, pieces });
        }
        let piece_symbols = file_symbols / parts.len();
        let index = parts.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Ok(SplitPlan { parts, piece_symbols, index })
    }

    /// Reference split: one sub-file per t-subset of `members`
    /// (lexicographic). `members` are global user ids, sorted.
    pub fn single(members: &[usize], t: usize, file_symbols: usize) -> Result<SplitPlan, ModelError> {
        let parts = combin::subsets_of(members, t)
            .into_iter()
            .map(|tau| PiecePart::Subfile { tau })
            .collect();
        SplitPlan::from_parts(parts, file_symbols)
    }

    /// Two-level split: every t-subset sub-file is cut into `copies` equal
    /// mini-files, ordered sub-file-major then copy.
    pub fn two_level(k: usize, t: usize, copies: usize, file_symbols: usize) -> Result<SplitPlan, ModelError> {
        let mut parts = Vec::new();
        for tau in combin::subsets(k, t) {
            for copy in 1..=copies {
                parts.push(PiecePart::Mini { tau: tau.clone(), copy });
            }
        }
        SplitPlan::from_parts(parts, file_symbols)
    }

    /// Flexible split: for server i (0-based), mini-files run over all
    /// (p_i - 1)-subsets of the K users and each carries `gammas[i]` pico
    /// copies; ordered server-major, then subset, then copy.
    pub fn flexible(
        k: usize,
        profile: &[usize],
        gammas: &[u128],
        file_symbols: usize,
    ) -> Result<SplitPlan, ModelError> {
        assert_eq!(profile.len(), gammas.len(), "one gamma per server");
        let mut parts = Vec::new();
        for (i, (&p, &gamma)) in profile.iter().zip(gammas).enumerate() {
            for tau in combin::subsets(k, p - 1) {
                for copy in 1..=gamma as usize {
                    parts.push(PiecePart::Pico { server: i, tau: tau.clone(), copy });
                }
            }
        }
        SplitPlan::from_parts(parts, file_symbols)
    }

    pub fn piece_count(&self) -> usize {
        self.parts.len()
    }

    pub fn piece_symbols(&self) -> usize {
        self.piece_symbols
    }

    pub fn parts(&self) -> &[PiecePart] {
        &self.parts
    }

    /// Symbol range of a piece within its file.
    pub fn range(&self, part: &PiecePart) -> Option<Range<usize>> {
        let i = *self.index.get(part)?;
        Some(i * self.piece_symbols..(i + 1) * self.piece_symbols)
    }

    /// The piece's symbols within one file's data.
    pub fn slice<'a>(&self, file_data: &'a [Fe], part: &PiecePart) -> Option<&'a [Fe]> {
        file_data.get(self.range(part)?)
    }
}

/// One user's cache: piece keys to symbol data.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CacheContents {
    pub user: usize,
    pieces: BTreeMap<PieceKey, Vec<Fe>>,
}

impl CacheContents {
    pub fn new(user: usize) -> CacheContents {
        CacheContents { user, pieces: BTreeMap::new() }
    }

    pub fn insert(&mut self, key: PieceKey, data: Vec<Fe>) {
        let prev = self.pieces.insert(key, data);
        debug_assert!(prev.is_none(), "piece cached twice");
    }

    pub fn get(&self, key: &PieceKey) -> Option<&[Fe]> {
        self.pieces.get(key).map(Vec::as_slice)
    }

    pub fn piece_count(&self) -> usize {
        self.pieces.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &PieceKey> {
        self.pieces.keys()
    }

    /// Exact occupancy in bits.
    pub fn memory_bits(&self, symbol_bits: u32) -> u64 {
        self.pieces.values().map(|v| v.len() as u64 * symbol_bits as u64).sum()
    }
}

/// Server-to-user topology during delivery.
#[derive(Clone, Debug)]
pub enum NetworkModel {
    /// Every user has a fixed line to one server; `classes[l]` lists the
    /// users (possibly padded virtual ids >= K) wired to server l.
    Dedicated { classes: Vec<Vec<usize>> },
    /// A switch re-partitions users among the L servers every slot; the
    /// active partition rides on the slot routing metadata.
    Flexible { servers: usize },
    /// Linear network: user k receives the fixed combination
    /// `transfer[k] . s` of all L server symbols (rows = users).
    Linear { transfer: Matrix },
}

/// Routing metadata attached to a run of slots.
#[derive(Clone, Debug, PartialEq)]
pub enum SlotRouting {
    /// Use the network's own wiring (dedicated lines, linear combining).
    Fixed,
    /// Flexible switch position: `classes` has L+1 entries, the last being
    /// the users idling this slot.
    Partition { classes: Vec<Vec<usize>> },
}

/// A run of consecutive slots sharing one routing: `symbols` is L x width,
/// row l being server l's transmission.
#[derive(Clone, Debug)]
pub struct SlotGroup {
    pub routing: SlotRouting,
    pub symbols: Matrix,
}

/// Everything the servers transmit for one demand vector, as slot runs in
/// transmission order. The measured coding delay is the total slot count.
#[derive(Clone, Debug, Default)]
pub struct TransmitBlock {
    pub servers: usize,
    pub groups: Vec<SlotGroup>,
}

impl TransmitBlock {
    pub fn new(servers: usize) -> TransmitBlock {
        TransmitBlock { servers, groups: Vec::new() }
    }

    pub fn push(&mut self, group: SlotGroup) {
        assert_eq!(group.symbols.rows(), self.servers, "one row per server");
        self.groups.push(group);
    }

    /// Measured coding delay in slots.
    pub fn slot_count(&self) -> u64 {
        self.groups.iter().map(|g| g.symbols.cols() as u64).sum()
    }

    /// The full L x T transmit matrix (all groups concatenated).
    pub fn as_matrix(&self) -> Matrix {
        let total = self.slot_count() as usize;
        let mut out = Matrix::zero(self.servers, total);
        let mut at = 0;
        for g in &self.groups {
            for c in 0..g.symbols.cols() {
                for r in 0..self.servers {
                    out.set(r, at + c, g.symbols.get(r, c));
                }
            }
            at += g.symbols.cols();
        }
        out
    }
}

fn check_partition(classes: &[Vec<usize>], servers: usize, users: usize) -> Result<(), ModelError> {
    if classes.len() != servers + 1 {
        return Err(ModelError::InvalidPartition(format!(
            "expected {} classes (servers + idle), got {}",
            servers + 1,
            classes.len()
        )));
    }
    let mut seen = vec![false; users];
    for class in classes {
        for &u in class {
            if u >= users || seen[u] {
                return Err(ModelError::InvalidPartition(format!(
                    "user {u} missing or repeated in partition"
                )));
            }
            seen[u] = true;
        }
    }
    if seen.iter().all(|&s| s) {
        Ok(())
    } else {
        Err(ModelError::InvalidPartition("partition does not cover all users".into()))
    }
}

/// One slot of the channel: from the L transmitted symbols `s` to the K
/// received symbols, under the group's routing metadata.
pub fn apply_network(
    net: &NetworkModel,
    field: &Field,
    s: &[Fe],
    routing: &SlotRouting,
    users: usize,
) -> Result<Vec<Fe>, ModelError> {
    match (net, routing) {
        (NetworkModel::Dedicated { classes }, SlotRouting::Fixed) => {
            let mut out = vec![Fe::ZERO; users];
            for (l, class) in classes.iter().enumerate() {
                for &u in class {
                    if u < users {
                        out[u] = s[l]; // padded virtual ids receive nothing real
                    }
                }
            }
            Ok(out)
        }
        (NetworkModel::Flexible { servers }, SlotRouting::Partition { classes }) => {
            check_partition(classes, *servers, users)?;
            let mut out = vec![Fe::ZERO; users];
            for (l, class) in classes.iter().take(*servers).enumerate() {
                for &u in class {
                    out[u] = s[l];
                }
            }
            // classes[servers] idles: those users keep the zero symbol.
            Ok(out)
        }
        (NetworkModel::Linear { transfer }, SlotRouting::Fixed) => {
            let mut out = vec![Fe::ZERO; users];
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = field.dot(transfer.row(k), s)?;
            }
            Ok(out)
        }
        (net, routing) => Err(ModelError::InvalidPartition(format!(
            "routing {routing:?} does not apply to network {net:?}"
        ))),
    }
}

/// What the K users hear during one slot group: users x width.
pub fn receive_group(
    net: &NetworkModel,
    field: &Field,
    group: &SlotGroup,
    users: usize,
) -> Result<Matrix, ModelError> {
    let mut out = Matrix::zero(users, group.symbols.cols());
    for c in 0..group.symbols.cols() {
        let s = group.symbols.col(c);
        let r = apply_network(net, field, &s, &group.routing, users)?;
        for (k, &v) in r.iter().enumerate() {
            out.set(k, c, v);
        }
    }
    Ok(out)
}

/// Exact memory check: every cache must occupy exactly M*F bits.
pub fn memory_exact(caches: &[CacheContents], cfg: &ScenarioConfig) -> bool {
    let budget = cfg.memory_budget_bits();
    caches.iter().all(|c| {
        Rational::from_integer(c.memory_bits(cfg.symbol_bits).into()) == budget
    })
}
