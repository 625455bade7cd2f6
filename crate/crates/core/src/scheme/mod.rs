//! Placement / delivery / decode for the four caching schemes.
//!
//! * [`single`] — the reference one-server XOR scheme everything builds on,
//! * [`dedicated`] — L parallel single-server instances over fixed lines,
//! * [`flexible`] — per-slot user re-partitioning behind a switch,
//! * [`linear`] — zero-forcing precoding through a full linear network.
//!
//! Placement never looks at demands, decoders consume only what their user
//! cached plus what their user received through the network model, and
//! every decode is verified bit-exact against the catalog by the callers.

pub mod dedicated;
pub mod flexible;
pub mod linear;
pub mod single;

use num_traits::{Signed, ToPrimitive};

use crate::gf::GfError;
use crate::model::ModelError;
use crate::{rat_int, Rational};

#[derive(Debug, thiserror::Error)]
pub enum SchemeError {
    /// The memory is not one of the scheme's corner points.
    #[error("M = {memory} is not a corner point: {detail}")]
    NonIntegralCorner { memory: Rational, detail: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gf(#[from] GfError),
    /// A freshness counter passed its copy budget — an enumeration bug.
    #[error("freshness ledger overflow at {key}: copy {next} of {budget}")]
    LedgerOverflow { key: String, next: usize, budget: usize },
    /// A freshness counter ended short of its budget — an enumeration bug.
    #[error("freshness ledger incomplete at {key}: final {got}, expected {want}")]
    LedgerIncomplete { key: String, got: usize, want: usize },
    /// A decoder could not reconstruct its file from cache + received.
    #[error("user {user} failed to decode: {detail}")]
    DecodeFailure { user: usize, detail: String },
    /// The stacked per-omega combinations were linearly dependent.
    #[error("user {user} hit a singular decode system on subset {subset:?}")]
    SingularDecodeMatrix { user: usize, subset: Vec<usize> },
    /// Retry budgets exhausted; the field is too small for these parameters.
    #[error("field of 2^{width} looks too small: {detail}")]
    FieldTooSmall { width: u32, detail: String },
}

/// Corner parameter t = K*M/N for sub-file-based schemes; errors when M is
/// not a corner memory.
pub fn corner_t(users: usize, memory: &Rational, files: usize) -> Result<usize, SchemeError> {
    let t = memory * rat_int(users as u128) / rat_int(files as u128);
    if !t.is_integer() || t.is_negative() || t > rat_int(users as u128) {
        return Err(SchemeError::NonIntegralCorner {
            memory: memory.clone(),
            detail: format!("K*M/N = {t} must be an integer in 0..={users}"),
        });
    }
    Ok(t.to_integer().to_usize().expect("t <= K"))
}

/// Counters for the retryable random events inside delivery.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DeliveryStats {
    /// Transfer-matrix draws discarded for rank deficiency or because the
    /// draw admitted no zero-forcing precoder.
    pub transfer_resamples: u64,
    /// Precoder draws beyond the first per constraint set.
    pub precoder_redraws: u64,
    /// Whole-block coefficient re-randomizations after a user's decode
    /// system came out singular.
    pub coefficient_rerolls: u64,
}

impl DeliveryStats {
    pub fn any(&self) -> bool {
        self.transfer_resamples > 0 || self.precoder_redraws > 0 || self.coefficient_rerolls > 0
    }
}
