//! End-to-end scenario orchestration: build a scheme, place caches, deliver
//! over the simulated network, decode every user, and compare bits.
//!
//! A [`ScenarioSpec`] names one (scheme, K, L, N, M) point; [`run_scenario`]
//! executes it for a set of demand vectors and returns a [`RunRecord`] with
//! the measured slot count, the closed-form delay, the cut-set lower bound,
//! and decode/retry accounting. [`sweep_memory`] runs every memory corner of
//! a scheme in parallel with per-point derived seeds, and [`emit_report`]
//! renders records as CSV. Output is a pure function of the scenario:
//! identical ([`ScenarioSpec`], seed) pairs produce byte-identical reports.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;

use crate::bounds::{
    cutset_bound, dedicated_delay, flexible_corner_set, flexible_pair, gap_ratio, linear_delay,
    single_server_delay, BoundsError, PartitionProfile,
};
use crate::combin::binomial;
use crate::gf::{Fe, GfError};
use crate::model::{
    receive_group, validate_demands, DemandVector, FileCatalog, ModelError, ScenarioConfig,
    TransmitBlock,
};
use crate::scheme::dedicated::Dedicated;
use crate::scheme::flexible::Flexible;
use crate::scheme::linear::LinearScheme;
use crate::scheme::{DeliveryStats, SchemeError};
use crate::{derive_seed, rat_int, rng_for, Rational, RngStream};

/// Users above this need `force` (subset enumeration grows combinatorially).
pub const MAX_USERS_UNFORCED: usize = 12;
/// File sizes above this need `force` (16 MiB of symbols per file).
pub const MAX_FILE_BITS_UNFORCED: u64 = 1 << 24;
/// Full demand sweeps larger than this need `force`.
pub const MAX_SWEEP_UNFORCED: u128 = 65_536;
/// Hard ceiling on enumerated demand vectors even with `force`.
pub const MAX_SWEEP_HARD: u128 = 1 << 24;

/// Which delivery scheme a scenario runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SchemeKind {
    /// Reference single-shared-link scheme (always simulated with L = 1).
    Single,
    /// L servers with fixed dedicated lines and user grouping.
    Dedicated,
    /// L servers behind a per-slot re-partitioning switch.
    Flexible,
    /// L servers through a full-rank linear combining network.
    Linear,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SchemeKind::Single => "single",
            SchemeKind::Dedicated => "dedicated",
            SchemeKind::Flexible => "flexible",
            SchemeKind::Linear => "linear",
        };
        f.write_str(name)
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<SchemeKind, String> {
        match s {
            "single" => Ok(SchemeKind::Single),
            "dedicated" => Ok(SchemeKind::Dedicated),
            "flexible" => Ok(SchemeKind::Flexible),
            "linear" => Ok(SchemeKind::Linear),
            other => Err(format!(
                "unknown scheme '{other}' (expected single, dedicated, flexible or linear)"
            )),
        }
    }
}

/// Orchestration failure, partitioned by required process exit code.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// The requested parameters are invalid or out of policy (exit 3).
    #[error("{0}")]
    Rejected(String),
    /// Retry budgets ran out; the symbol field cannot support the
    /// parameters (exit 4).
    #[error("{0}")]
    FieldExhausted(String),
    /// An internal invariant broke (exit 1); always a bug.
    #[error("internal error: {0}")]
    Internal(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Rejected(_) => 3,
            HarnessError::FieldExhausted(_) => 4,
            HarnessError::Internal(_) => 1,
        }
    }
}

impl From<SchemeError> for HarnessError {
    fn from(e: SchemeError) -> HarnessError {
        match e {
            SchemeError::FieldTooSmall { .. } => HarnessError::FieldExhausted(e.to_string()),
            SchemeError::NonIntegralCorner { .. } | SchemeError::Model(_) => {
                HarnessError::Rejected(e.to_string())
            }
            SchemeError::Gf(GfError::PrecoderNotFound { .. }) => {
                HarnessError::FieldExhausted(e.to_string())
            }
            other => HarnessError::Internal(other.to_string()),
        }
    }
}

impl From<ModelError> for HarnessError {
    fn from(e: ModelError) -> HarnessError {
        HarnessError::Rejected(e.to_string())
    }
}

impl From<BoundsError> for HarnessError {
    fn from(e: BoundsError) -> HarnessError {
        HarnessError::Rejected(e.to_string())
    }
}

impl From<GfError> for HarnessError {
    fn from(e: GfError) -> HarnessError {
        match e {
            GfError::PrecoderNotFound { .. } => HarnessError::FieldExhausted(e.to_string()),
            GfError::InvalidWidth { .. }
            | GfError::WrongDegree { .. }
            | GfError::Reducible { .. }
            | GfError::NoDefaultPolynomial { .. } => HarnessError::Rejected(e.to_string()),
            other => HarnessError::Internal(other.to_string()),
        }
    }
}

/// Which demand vectors a scenario exercises.
#[derive(Clone, Debug)]
pub enum DemandSpec {
    /// Explicit vectors, each `users` long with 0-based file indices.
    Explicit(Vec<DemandVector>),
    /// One vector where user k demands file k (N >= K makes this valid).
    AllDistinct,
    /// All N^K vectors, lexicographic.
    Sweep,
    /// Seeded-uniform random vectors.
    Random { count: usize },
}

/// One simulation point.
#[derive(Clone, Debug)]
pub struct ScenarioSpec {
    pub scheme: SchemeKind,
    pub users: usize,
    pub servers: usize,
    pub files: usize,
    pub cache_files: Rational,
    /// File size in bits; `None` picks the scheme's minimal size.
    pub file_bits: Option<u64>,
    pub symbol_bits: u32,
    pub seed: u64,
    /// Flexible slot-group sizes; `None` resolves the best profile whose
    /// memory corner matches `cache_files`.
    pub profile: Option<Vec<usize>>,
    pub demands: DemandSpec,
    /// Lifts the size guardrails.
    pub force: bool,
}

/// Everything measured at one simulation point.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub scheme: SchemeKind,
    pub users: usize,
    pub servers: usize,
    pub files: usize,
    pub cache_files: Rational,
    pub file_bits: u64,
    pub symbol_bits: u32,
    pub seed: u64,
    /// Resolved flexible profile, when one was used.
    pub profile: Option<Vec<usize>>,
    /// Transmitted slots, identical for every demand vector.
    pub measured_slots: u64,
    /// Closed-form delay in file units (target slots = delay * F/m).
    pub formula_delay: Rational,
    /// Cut-set lower bound in file units.
    pub lower_bound: Rational,
    /// delay / bound; `None` when the bound is zero.
    pub gap: Option<Rational>,
    pub demand_vectors: usize,
    pub decode_failures: u64,
    pub decode_ok: bool,
    /// First decode failure detail, for diagnostics.
    pub first_failure: Option<String>,
    pub stats: DeliveryStats,
}

impl RunRecord {
    /// Measured slots as a fraction of one file (F/m slots per file).
    pub fn measured_delay(&self) -> Rational {
        let file_slots = self.file_bits / self.symbol_bits as u64;
        rat_int(self.measured_slots as u128) / rat_int(file_slots as u128)
    }
}

fn padded(users: usize, servers: usize) -> usize {
    servers * users.div_ceil(servers)
}

/// Corner parameter from a memory that must sit exactly on a corner of a
/// `group`-user schedule: t = group * M / N.
fn integral_corner(group: usize, cache_files: &Rational, files: usize) -> Result<usize, HarnessError> {
    let t = cache_files * rat_int(group as u128) / rat_int(files as u128);
    if !t.is_integer() || t < rat_int(0) || t > rat_int(group as u128) {
        return Err(HarnessError::Rejected(format!(
            "memory {cache_files} is not a corner point: {group} * M / N = {t} must be an integer in 0..={group}"
        )));
    }
    Ok(num_traits::ToPrimitive::to_usize(&t.to_integer()).expect("corner fits usize"))
}

/// The flexible profile to use: the explicit one, or the lowest-delay
/// corner matching the requested memory exactly.
pub fn resolve_profile(spec: &ScenarioSpec) -> Result<PartitionProfile, HarnessError> {
    match &spec.profile {
        Some(parts) => {
            if parts.len() != spec.servers {
                return Err(HarnessError::Rejected(format!(
                    "profile lists {} slot-group sizes for {} servers",
                    parts.len(),
                    spec.servers
                )));
            }
            Ok(PartitionProfile::new(parts.clone(), spec.users)?)
        }
        None => {
            let corners = flexible_corner_set(spec.users, spec.servers, spec.files)?;
            corners
                .into_iter()
                .filter(|c| c.memory == spec.cache_files)
                .min_by(|a, b| a.delay.cmp(&b.delay))
                .map(|c| c.profile)
                .ok_or_else(|| {
                    HarnessError::Rejected(format!(
                        "no slot-group profile reaches memory {} exactly; pass one explicitly",
                        spec.cache_files
                    ))
                })
        }
    }
}

/// Smallest file size (bits) the scheme can split at this point. Larger
/// files must be multiples of it.
pub fn minimal_file_bits(spec: &ScenarioSpec) -> Result<u64, HarnessError> {
    let m = spec.symbol_bits as u64;
    let pieces: u128 = match spec.scheme {
        SchemeKind::Single => {
            let t = integral_corner(spec.users, &spec.cache_files, spec.files)?;
            binomial(spec.users, t)
        }
        SchemeKind::Dedicated => {
            let group = padded(spec.users, spec.servers) / spec.servers;
            let t = integral_corner(group, &spec.cache_files, spec.files)?;
            binomial(group, t)
        }
        SchemeKind::Flexible => {
            let profile = resolve_profile(spec)?;
            let params = crate::bounds::flex_params(spec.users, &profile);
            params.alphas.iter().zip(&params.gammas).map(|(a, g)| a * g).sum()
        }
        SchemeKind::Linear => {
            let t = integral_corner(spec.users, &spec.cache_files, spec.files)?;
            let active = (spec.users - t).min(spec.servers);
            let copies = if active == 0 { 1 } else { binomial(spec.users - t - 1, active - 1) };
            binomial(spec.users, t) * copies
        }
    };
    u64::try_from(pieces * m as u128)
        .map_err(|_| HarnessError::Rejected("file split needs more pieces than fit in memory".into()))
}

/// Expand a demand specification into concrete vectors (never empty).
pub fn expand_demands(
    spec: &DemandSpec,
    cfg: &ScenarioConfig,
    force: bool,
) -> Result<Vec<DemandVector>, HarnessError> {
    let vectors = match spec {
        DemandSpec::Explicit(vs) => {
            for v in vs {
                validate_demands(v, cfg)?;
            }
            vs.clone()
        }
        DemandSpec::AllDistinct => vec![(0..cfg.users).collect()],
        DemandSpec::Sweep => {
            let total = (cfg.files as u128)
                .checked_pow(cfg.users as u32)
                .unwrap_or(u128::MAX);
            if total > MAX_SWEEP_HARD {
                return Err(HarnessError::Rejected(format!(
                    "demand sweep of {total} vectors exceeds the hard limit of {MAX_SWEEP_HARD}"
                )));
            }
            if total > MAX_SWEEP_UNFORCED && !force {
                return Err(HarnessError::Rejected(format!(
                    "demand sweep of {total} vectors needs force (limit {MAX_SWEEP_UNFORCED})"
                )));
            }
            let mut out = Vec::with_capacity(total as usize);
            let mut d = vec![0usize; cfg.users];
            loop {
                out.push(d.clone());
                let mut i = cfg.users;
                loop {
                    if i == 0 {
                        return Ok(out);
                    }
                    i -= 1;
                    d[i] += 1;
                    if d[i] < cfg.files {
                        break;
                    }
                    d[i] = 0;
                }
            }
        }
        DemandSpec::Random { count } => {
            let mut rng = rng_for(cfg.seed, RngStream::Demands);
            (0..*count)
                .map(|_| (0..cfg.users).map(|_| rng.random_range(0..cfg.files)).collect())
                .collect()
        }
    };
    if vectors.is_empty() {
        return Err(HarnessError::Rejected("need at least one demand vector".into()));
    }
    Ok(vectors)
}

/// Decode bookkeeping shared by the per-scheme runners.
#[derive(Default)]
struct Outcome {
    measured_slots: Option<u64>,
    decode_failures: u64,
    first_failure: Option<String>,
    stats: DeliveryStats,
}

impl Outcome {
    fn note_slots(&mut self, slots: u64) -> Result<(), HarnessError> {
        match self.measured_slots {
            None => self.measured_slots = Some(slots),
            Some(prev) if prev == slots => {}
            Some(prev) => {
                return Err(HarnessError::Internal(format!(
                    "slot count changed across demand vectors ({prev} then {slots}); the schedule must be demand-oblivious"
                )));
            }
        }
        Ok(())
    }

    fn note_decode(&mut self, user: usize, result: Result<Vec<Fe>, SchemeError>, want: &[Fe]) {
        let detail = match result {
            Ok(bits) if bits == want => return,
            Ok(_) => format!("user {user} decoded the wrong symbols"),
            Err(e) => e.to_string(),
        };
        self.decode_failures += 1;
        self.first_failure.get_or_insert(detail);
    }
}

fn internal(e: ModelError) -> HarnessError {
    HarnessError::Internal(e.to_string())
}

/// Per-user received rows for every slot group of a block.
fn hear_all(
    net: &crate::model::NetworkModel,
    field: &crate::gf::Field,
    block: &TransmitBlock,
    users: usize,
) -> Result<Vec<Vec<Vec<Fe>>>, HarnessError> {
    let mut heard: Vec<Vec<Vec<Fe>>> = vec![Vec::new(); users];
    for g in &block.groups {
        let rx = receive_group(net, field, g, users).map_err(internal)?;
        for (k, rows) in heard.iter_mut().enumerate() {
            rows.push(rx.row(k).to_vec());
        }
    }
    Ok(heard)
}

/// Run one scenario end to end. Placement happens once; every demand
/// vector is delivered over the network model and decoded by every user.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<RunRecord, HarnessError> {
    if spec.users > MAX_USERS_UNFORCED && !spec.force {
        return Err(HarnessError::Rejected(format!(
            "{} users needs force (limit {MAX_USERS_UNFORCED}; schedules grow combinatorially)",
            spec.users
        )));
    }
    let minimal = minimal_file_bits(spec)?;
    let file_bits = spec.file_bits.unwrap_or(minimal);
    if file_bits == 0 || !file_bits.is_multiple_of(minimal) {
        return Err(HarnessError::Rejected(format!(
            "file size {file_bits} bits must be a positive multiple of {minimal} bits at this point"
        )));
    }
    if file_bits > MAX_FILE_BITS_UNFORCED && !spec.force {
        return Err(HarnessError::Rejected(format!(
            "file size {file_bits} bits needs force (limit {MAX_FILE_BITS_UNFORCED})"
        )));
    }
    // The reference scheme always runs on a single shared link.
    let servers = if spec.scheme == SchemeKind::Single { 1 } else { spec.servers };
    let cfg = ScenarioConfig {
        users: spec.users,
        servers,
        files: spec.files,
        cache_files: spec.cache_files.clone(),
        file_bits,
        symbol_bits: spec.symbol_bits,
        seed: spec.seed,
    };
    cfg.validate()?;
    let field = cfg.field()?;
    let demand_list = expand_demands(&spec.demands, &cfg, spec.force)?;
    let catalog = FileCatalog::random(&cfg, &field);

    let mut outcome = Outcome::default();
    let mut profile_used = None;
    match spec.scheme {
        SchemeKind::Single | SchemeKind::Dedicated => {
            let scheme = Dedicated::new(&cfg)?;
            let caches = scheme.place(&catalog);
            let net = scheme.network();
            for demands in &demand_list {
                let block = scheme.deliver(&catalog, demands);
                outcome.note_slots(block.slot_count())?;
                let heard = hear_all(&net, &field, &block, cfg.users)?;
                for k in 0..cfg.users {
                    let stream: Vec<Fe> = heard[k].iter().flatten().copied().collect();
                    let got = scheme.decode(k, &caches[k], &stream, demands);
                    outcome.note_decode(k, got, catalog.file(demands[k]));
                }
            }
        }
        SchemeKind::Flexible => {
            let profile = resolve_profile(spec)?;
            profile_used = Some(profile.parts().to_vec());
            let scheme = Flexible::new(&cfg, profile)?;
            let caches = scheme.place(&catalog);
            let net = scheme.network();
            for demands in &demand_list {
                let delivery = scheme.deliver(&catalog, demands)?;
                outcome.note_slots(delivery.block.slot_count())?;
                let heard = hear_all(&net, &field, &delivery.block, cfg.users)?;
                for k in 0..cfg.users {
                    let got = scheme.decode(k, &caches[k], &heard[k], demands);
                    outcome.note_decode(k, got, catalog.file(demands[k]));
                }
            }
        }
        SchemeKind::Linear => {
            let scheme = LinearScheme::new(&cfg)?;
            let caches = scheme.place(&catalog);
            let mut transfer_rng = rng_for(cfg.seed, RngStream::TransferMatrix);
            let mut precoder_rng = rng_for(cfg.seed, RngStream::Precoder);
            let session = scheme.prepare(&mut transfer_rng, &mut precoder_rng)?;
            outcome.stats = session.stats;
            let net = scheme.network(&session);
            let mut coeff_rng = rng_for(cfg.seed, RngStream::Coefficients);
            for demands in &demand_list {
                let delivery = scheme.deliver(&catalog, demands, &session, &mut coeff_rng)?;
                outcome.stats.coefficient_rerolls += delivery.stats.coefficient_rerolls;
                outcome.note_slots(delivery.block.slot_count())?;
                let heard = hear_all(&net, &field, &delivery.block, cfg.users)?;
                for k in 0..cfg.users {
                    let got = scheme.decode(
                        k,
                        &caches[k],
                        &heard[k],
                        demands,
                        &session,
                        &delivery.coefficients,
                    );
                    outcome.note_decode(k, got, catalog.file(demands[k]));
                }
            }
        }
    }

    let formula_delay = match spec.scheme {
        SchemeKind::Single => single_server_delay(cfg.users, &cfg.cache_files, cfg.files)?,
        SchemeKind::Dedicated => {
            dedicated_delay(cfg.users, cfg.servers, &cfg.cache_files, cfg.files)?
        }
        SchemeKind::Flexible => {
            let parts = profile_used.clone().expect("profile resolved above");
            let profile = PartitionProfile::new(parts, cfg.users)?;
            flexible_pair(cfg.users, cfg.files, &profile).1
        }
        SchemeKind::Linear => linear_delay(cfg.users, cfg.servers, &cfg.cache_files, cfg.files)?,
    };
    let lower_bound = cutset_bound(cfg.users, cfg.servers, &cfg.cache_files, cfg.files)?;
    let gap = gap_ratio(&formula_delay, &lower_bound).ok();

    Ok(RunRecord {
        scheme: spec.scheme,
        users: cfg.users,
        servers: cfg.servers,
        files: cfg.files,
        cache_files: cfg.cache_files.clone(),
        file_bits: cfg.file_bits,
        symbol_bits: cfg.symbol_bits,
        seed: cfg.seed,
        profile: profile_used,
        measured_slots: outcome.measured_slots.expect("at least one demand vector ran"),
        formula_delay,
        lower_bound,
        gap,
        demand_vectors: demand_list.len(),
        decode_failures: outcome.decode_failures,
        decode_ok: outcome.decode_failures == 0,
        first_failure: outcome.first_failure,
        stats: outcome.stats,
    })
}

/// A memory sweep over one scheme's corners.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub scheme: SchemeKind,
    pub users: usize,
    pub servers: usize,
    pub files: usize,
    pub file_bits: Option<u64>,
    pub symbol_bits: u32,
    pub seed: u64,
    pub force: bool,
}

/// One sweep point: the corner memory and, for the flexible scheme, the
/// profile that achieves it.
pub type MemoryCorner = (Rational, Option<Vec<usize>>);

/// The memory corners a scheme achieves, ordered by memory (flexible rows
/// carry their profile and may share a memory value).
pub fn memory_corners(spec: &SweepSpec) -> Result<Vec<MemoryCorner>, HarnessError> {
    let corners = match spec.scheme {
        SchemeKind::Single | SchemeKind::Linear => (0..=spec.users)
            .map(|t| (rat_int((t * spec.files) as u128) / rat_int(spec.users as u128), None))
            .collect(),
        SchemeKind::Dedicated => {
            let group = padded(spec.users, spec.servers) / spec.servers;
            (0..=group)
                .map(|t| (Dedicated::corner_memory(group, t, spec.files), None))
                .collect()
        }
        SchemeKind::Flexible => {
            let mut rows: Vec<MemoryCorner> =
                flexible_corner_set(spec.users, spec.servers, spec.files)?
                    .into_iter()
                    .map(|c| (c.memory, Some(c.profile.parts().to_vec())))
                    .collect();
            rows.sort();
            rows
        }
    };
    Ok(corners)
}

/// Run every memory corner of the scheme, in parallel, each point seeded by
/// `derive_seed(seed, index)`. Records come back in corner order.
pub fn sweep_memory(spec: &SweepSpec) -> Result<Vec<RunRecord>, HarnessError> {
    let corners = memory_corners(spec)?;
    corners
        .into_par_iter()
        .enumerate()
        .map(|(i, (memory, profile))| {
            run_scenario(&ScenarioSpec {
                scheme: spec.scheme,
                users: spec.users,
                servers: spec.servers,
                files: spec.files,
                cache_files: memory,
                file_bits: spec.file_bits,
                symbol_bits: spec.symbol_bits,
                seed: derive_seed(spec.seed, i as u64),
                profile,
                demands: DemandSpec::AllDistinct,
                force: spec.force,
            })
        })
        .collect()
}

/// One row of the built-in reference delay table.
#[derive(Clone, Debug)]
pub struct VerifyRow {
    pub servers: usize,
    pub cache_files: Rational,
    pub expected_delay: Rational,
    pub record: RunRecord,
    pub pass: bool,
}

/// Check the linear scheme against the built-in reference table: K = N = 4,
/// L in {2, 3}, every integer memory. Pass requires the closed form, the
/// measured slot count and every decode to agree exactly.
pub fn verify_examples(seed: u64, symbol_bits: u32) -> Result<Vec<VerifyRow>, HarnessError> {
    let table: [(usize, u64, (i64, i64)); 10] = [
        (2, 0, (2, 1)),
        (2, 1, (1, 1)),
        (2, 2, (1, 2)),
        (2, 3, (1, 4)),
        (2, 4, (0, 1)),
        (3, 0, (4, 3)),
        (3, 1, (3, 4)),
        (3, 2, (1, 2)),
        (3, 3, (1, 4)),
        (3, 4, (0, 1)),
    ];
    let mut rows = Vec::with_capacity(table.len());
    for (i, (servers, memory, (num, den))) in table.into_iter().enumerate() {
        let expected = crate::rat(num, den);
        let record = run_scenario(&ScenarioSpec {
            scheme: SchemeKind::Linear,
            users: 4,
            servers,
            files: 4,
            cache_files: rat_int(memory as u128),
            file_bits: None,
            symbol_bits,
            seed: derive_seed(seed, i as u64),
            profile: None,
            demands: DemandSpec::AllDistinct,
            force: false,
        })?;
        let pass = record.formula_delay == expected
            && record.measured_delay() == expected
            && record.decode_ok;
        rows.push(VerifyRow {
            servers,
            cache_files: rat_int(memory as u128),
            expected_delay: expected,
            record,
            pass,
        });
    }
    Ok(rows)
}

fn rational_cells(r: &Rational) -> (String, String) {
    (r.numer().to_string(), r.denom().to_string())
}

/// Render records as CSV. Unavailable values (an undefined gap over a zero
/// bound) become empty cells. Byte-identical for identical inputs.
pub fn emit_report(records: &[RunRecord]) -> String {
    let mut out = String::from(
        "scheme,K,L,N,M_num,M_den,F_bits,m,measured_slots,formula_delay_num,formula_delay_den,lower_bound_num,lower_bound_den,gap_num,gap_den,decode_ok,seed\n",
    );
    for r in records {
        let (m_num, m_den) = rational_cells(&r.cache_files);
        let (f_num, f_den) = rational_cells(&r.formula_delay);
        let (b_num, b_den) = rational_cells(&r.lower_bound);
        let (g_num, g_den) = match &r.gap {
            Some(g) => rational_cells(g),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.scheme,
            r.users,
            r.servers,
            r.files,
            m_num,
            m_den,
            r.file_bits,
            r.symbol_bits,
            r.measured_slots,
            f_num,
            f_den,
            b_num,
            b_den,
            g_num,
            g_den,
            r.decode_ok,
            r.seed,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;

    fn base_spec(scheme: SchemeKind, k: usize, l: usize, m: Rational, seed: u64) -> ScenarioSpec {
        ScenarioSpec {
            scheme,
            users: k,
            servers: l,
            files: k,
            cache_files: m,
            file_bits: None,
            symbol_bits: 16,
            seed,
            profile: None,
            demands: DemandSpec::AllDistinct,
            force: false,
        }
    }

    #[test]
    fn minimal_file_sizes() {
        // Reference split at K=4, M=2, N=4: C(4,2) = 6 pieces of 16 bits.
        let spec = base_spec(SchemeKind::Single, 4, 1, rat_int(2), 1);
        assert_eq!(minimal_file_bits(&spec).unwrap(), 96);
        // Dedicated K=4, L=2, M=2: groups of 2 at t=1, 2 pieces.
        let spec = base_spec(SchemeKind::Dedicated, 4, 2, rat_int(2), 1);
        assert_eq!(minimal_file_bits(&spec).unwrap(), 32);
        // Linear K=4, L=2, M=1: 4 sub-files x 2 mini-files.
        let spec = base_spec(SchemeKind::Linear, 4, 2, rat_int(1), 1);
        assert_eq!(minimal_file_bits(&spec).unwrap(), 128);
        // Flexible K=4, profile (2,2): sum alpha*gamma = 8 picos.
        let spec = base_spec(SchemeKind::Flexible, 4, 2, rat_int(1), 1);
        assert_eq!(minimal_file_bits(&spec).unwrap(), 128);
    }

    #[test]
    fn single_run_matches_reference_delay() {
        let record = run_scenario(&base_spec(SchemeKind::Single, 4, 1, rat_int(2), 7)).unwrap();
        assert!(record.decode_ok);
        assert_eq!(record.servers, 1);
        assert_eq!(record.measured_delay(), rat(2, 3));
        assert_eq!(record.formula_delay, rat(2, 3));
        // Single shared link: max over s of (s - sM/floor(N/s)) at s = 1.
        assert_eq!(record.lower_bound, rat(1, 2));
        assert_eq!(record.gap, Some(rat(4, 3)));
    }

    #[test]
    fn dedicated_run_halves_the_delay() {
        let record = run_scenario(&base_spec(SchemeKind::Dedicated, 4, 2, rat_int(2), 7)).unwrap();
        assert!(record.decode_ok);
        assert_eq!(record.measured_delay(), rat(1, 2));
        assert_eq!(record.formula_delay, rat(1, 2));
    }

    #[test]
    fn flexible_run_resolves_profile() {
        let record = run_scenario(&base_spec(SchemeKind::Flexible, 4, 2, rat_int(1), 7)).unwrap();
        assert!(record.decode_ok);
        assert_eq!(record.profile, Some(vec![2, 2]));
        assert_eq!(record.measured_delay(), rat(3, 4));
        // No profile reaches M = 2 for K = 4, L = 2.
        let err = run_scenario(&base_spec(SchemeKind::Flexible, 4, 2, rat_int(2), 7)).unwrap_err();
        assert!(matches!(err, HarnessError::Rejected(_)));
    }

    #[test]
    fn linear_run_collects_stats_and_gap() {
        let record = run_scenario(&base_spec(SchemeKind::Linear, 4, 2, rat_int(1), 7)).unwrap();
        assert!(record.decode_ok);
        assert_eq!(record.measured_delay(), rat_int(1));
        assert_eq!(record.formula_delay, rat_int(1));
        assert_eq!(record.lower_bound, rat(3, 4));
        assert_eq!(record.gap, Some(rat(4, 3)));
    }

    #[test]
    fn sweep_is_ordered_and_deterministic() {
        let spec = SweepSpec {
            scheme: SchemeKind::Single,
            users: 4,
            servers: 1,
            files: 4,
            file_bits: None,
            symbol_bits: 16,
            seed: 99,
            force: false,
        };
        let first = sweep_memory(&spec).unwrap();
        assert_eq!(first.len(), 5);
        for w in first.windows(2) {
            assert!(w[0].cache_files < w[1].cache_files);
        }
        assert!(first.iter().all(|r| r.decode_ok));
        let second = sweep_memory(&spec).unwrap();
        assert_eq!(emit_report(&first), emit_report(&second));
    }

    #[test]
    fn flexible_sweep_visits_every_profile() {
        let spec = SweepSpec {
            scheme: SchemeKind::Flexible,
            users: 6,
            servers: 2,
            files: 6,
            file_bits: None,
            symbol_bits: 16,
            seed: 3,
            force: false,
        };
        let records = sweep_memory(&spec).unwrap();
        let profiles: Vec<Vec<usize>> =
            records.iter().map(|r| r.profile.clone().unwrap()).collect();
        // Ordered by corner memory: 1, 38/23, 2, 33/13.
        assert_eq!(profiles, vec![vec![2, 2], vec![2, 3], vec![3, 3], vec![2, 4]]);
        for w in records.windows(2) {
            assert!(w[0].cache_files <= w[1].cache_files);
        }
        assert!(records.iter().all(|r| r.decode_ok));
    }

    #[test]
    fn reference_table_passes() {
        for row in verify_examples(5, 16).unwrap() {
            assert!(
                row.pass,
                "L={} M={} expected {} got {} (measured {})",
                row.servers,
                row.cache_files,
                row.expected_delay,
                row.record.formula_delay,
                row.record.measured_delay(),
            );
        }
    }

    #[test]
    fn demand_expansion_modes() {
        let cfg = ScenarioConfig {
            users: 2,
            servers: 1,
            files: 3,
            cache_files: rat_int(0),
            file_bits: 16,
            symbol_bits: 16,
            seed: 1,
        };
        let sweep = expand_demands(&DemandSpec::Sweep, &cfg, false).unwrap();
        assert_eq!(sweep.len(), 9);
        assert_eq!(sweep[0], vec![0, 0]);
        assert_eq!(sweep[8], vec![2, 2]);
        let distinct = expand_demands(&DemandSpec::AllDistinct, &cfg, false).unwrap();
        assert_eq!(distinct, vec![vec![0, 1]]);
        let random = expand_demands(&DemandSpec::Random { count: 5 }, &cfg, false).unwrap();
        assert_eq!(random.len(), 5);
        assert!(random.iter().flatten().all(|&d| d < 3));
        let again = expand_demands(&DemandSpec::Random { count: 5 }, &cfg, false).unwrap();
        assert_eq!(random, again);
        let bad = expand_demands(&DemandSpec::Explicit(vec![vec![0, 9]]), &cfg, false);
        assert!(matches!(bad, Err(HarnessError::Rejected(_))));
        let empty = expand_demands(&DemandSpec::Explicit(Vec::new()), &cfg, false);
        assert!(matches!(empty, Err(HarnessError::Rejected(_))));
    }

    #[test]
    fn guardrails_require_force() {
        let mut spec = base_spec(SchemeKind::Single, 13, 1, rat_int(0), 1);
        spec.files = 13;
        let err = run_scenario(&spec).unwrap_err();
        assert!(matches!(err, HarnessError::Rejected(_)), "{err}");
        assert_eq!(err.exit_code(), 3);

        let mut spec = base_spec(SchemeKind::Single, 4, 1, rat_int(0), 1);
        spec.file_bits = Some(1 << 25);
        let err = run_scenario(&spec).unwrap_err();
        assert!(matches!(err, HarnessError::Rejected(_)), "{err}");

        let mut spec = base_spec(SchemeKind::Single, 6, 1, rat_int(0), 1);
        spec.files = 8;
        spec.demands = DemandSpec::Sweep; // 8^6 = 262144 > 65536
        let err = run_scenario(&spec).unwrap_err();
        assert!(matches!(err, HarnessError::Rejected(_)), "{err}");
    }

    #[test]
    fn file_bits_must_be_a_multiple_of_minimal() {
        let mut spec = base_spec(SchemeKind::Single, 4, 1, rat_int(2), 1);
        spec.file_bits = Some(100);
        let err = run_scenario(&spec).unwrap_err();
        assert!(matches!(err, HarnessError::Rejected(_)));
        spec.file_bits = Some(192); // 2 x minimal
        let record = run_scenario(&spec).unwrap();
        assert!(record.decode_ok);
        assert_eq!(record.measured_delay(), rat(2, 3));
    }

    #[test]
    fn csv_shape_and_empty_gap() {
        // M = N makes both delay and bound zero, so the gap cell is empty.
        let record = run_scenario(&base_spec(SchemeKind::Single, 4, 1, rat_int(4), 1)).unwrap();
        assert_eq!(record.gap, None);
        let csv = emit_report(&[record]);
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert_eq!(
            header,
            "scheme,K,L,N,M_num,M_den,F_bits,m,measured_slots,formula_delay_num,formula_delay_den,lower_bound_num,lower_bound_den,gap_num,gap_den,decode_ok,seed"
        );
        let row = lines.next().unwrap();
        assert_eq!(row.split(',').count(), 17);
        assert!(row.contains(",,"));
        assert!(row.ends_with(",true,1"));
    }

    #[test]
    fn exit_codes_partition_errors() {
        assert_eq!(HarnessError::Rejected(String::new()).exit_code(), 3);
        assert_eq!(HarnessError::FieldExhausted(String::new()).exit_code(), 4);
        assert_eq!(HarnessError::Internal(String::new()).exit_code(), 1);
    }

    #[test]
    fn tiny_field_surfaces_as_field_exhausted() {
        let mut spec = base_spec(SchemeKind::Linear, 4, 2, rat_int(1), 7);
        spec.symbol_bits = 1;
        let err = run_scenario(&spec).unwrap_err();
        assert!(matches!(err, HarnessError::FieldExhausted(_)), "{err}");
        assert_eq!(err.exit_code(), 4);
    }
}
