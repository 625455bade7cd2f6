//! Exact delay/memory trade-off formulas and the cut-set lower bound.
//!
//! Delays are in units of F/m time slots (one unit = the time to push one
//! file through one server link). All arithmetic is exact rational: the
//! formulas are compared against simulator slot counts with zero tolerance,
//! so nothing here may round.
//!
//! Each scheme's formula is exact at its corner memory points; between
//! corners the achievable curve is the straight line between them
//! (memory-sharing), so the evaluators interpolate linearly.

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::combin;
use crate::{rat_int, Rational};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum BoundsError {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("invalid server profile: {0}")]
    InvalidProfile(String),
    #[error("lower bound is zero; gap ratio is infinite")]
    InfiniteGap,
}

fn check_memory(m: &Rational, n: usize) -> Result<(), BoundsError> {
    if m.is_negative() || m > &rat_int(n as u128) {
        return Err(BoundsError::Domain(format!("M = {m} outside [0, {n}]")));
    }
    Ok(())
}

/// Evaluate a curve that is exact at integer corner parameters
/// `0..=max_corner` and linear in between: `t` is the (rational) corner
/// coordinate of the query point.
fn interpolate_corners<F>(t: &Rational, max_corner: u64, corner_value: F) -> Rational
where
    F: Fn(u64) -> Rational,
{
    debug_assert!(!t.is_negative() && t <= &rat_int(max_corner as u128));
    if t.is_integer() {
        return corner_value(t.to_integer().to_u64().expect("corner fits u64"));
    }
    let t0 = t.floor().to_integer().to_u64().expect("corner fits u64");
    let w = t - rat_int(t0 as u128); // in (0, 1)
    let v0 = corner_value(t0);
    let v1 = corner_value(t0 + 1);
    &v0 + w * (v1 - &v0)
}

/// Coding delay of the reference one-server scheme:
/// K(1 - M/N) / (1 + KM/N) at corners t = KM/N in {0..K}, linearly
/// interpolated elsewhere.
pub fn single_server_delay(k: usize, m: &Rational, n: usize) -> Result<Rational, BoundsError> {
    check_memory(m, n)?;
    let t = m * rat_int(k as u128) / rat_int(n as u128);
    Ok(interpolate_corners(&t, k as u64, |t| {
        // (K - t) / (1 + t)
        Rational::new(((k as u64 - t) as u128).into(), ((1 + t) as u128).into())
    }))
}

/// Padded user count K' = L * ceil(K / L) for the dedicated-lines scheme.
pub fn padded_users(k: usize, l: usize) -> usize {
    l * k.div_ceil(l)
}

/// Coding delay with one dedicated line per user to one of L servers:
/// K'(1 - M/N) / min(K', L + K'M/N) at corners K'M/(LN) in {0..K'/L},
/// linearly interpolated elsewhere. The padded K' is used throughout.
pub fn dedicated_delay(k: usize, l: usize, m: &Rational, n: usize) -> Result<Rational, BoundsError> {
    check_memory(m, n)?;
    let kp = padded_users(k, l);
    let group = kp / l;
    // Corner coordinate u = K'M/(LN); at the corner, K'M/N = uL, so the
    // formula reduces to integers: (K' - uL) / min(K', L(1 + u)).
    let u = m * rat_int(kp as u128) / rat_int((l * n) as u128);
    Ok(interpolate_corners(&u, group as u64, |u| {
        let load = (kp - u as usize * l) as u128;
        let denom = (kp as u128).min(l as u128 * (1 + u as u128));
        Rational::new(load.into(), denom.into())
    }))
}

/// Server profile for the flexible scheme: `parts[i]` = p_i users served by
/// server i each slot (all >= 2), `idle` = K - sum(parts) users idle per
/// slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionProfile {
    parts: Vec<usize>,
    idle: usize,
}

impl PartitionProfile {
    pub fn new(parts: Vec<usize>, k: usize) -> Result<PartitionProfile, BoundsError> {
        if parts.is_empty() {
            return Err(BoundsError::InvalidProfile("profile has no servers".into()));
        }
        if let Some(&p) = parts.iter().find(|&&p| p < 2) {
            return Err(BoundsError::InvalidProfile(format!(
                "every slot group must serve at least 2 users, got {p}"
            )));
        }
        let sum: usize = parts.iter().sum();
        if sum > k {
            return Err(BoundsError::InvalidProfile(format!(
                "profile serves {sum} users per slot but only {k} exist"
            )));
        }
        Ok(PartitionProfile { parts: parts.clone(), idle: k - sum })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn idle(&self) -> usize {
        self.idle
    }

    pub fn servers(&self) -> usize {
        self.parts.len()
    }

    /// Class sizes including the idle class, as the delivery enumerates them.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut s = self.parts.clone();
        s.push(self.idle);
        s
    }
}

/// Split parameters derived from a profile: per server i,
/// `alphas[i] = C(K, p_i - 1)` mini-files per sub-file and `gammas[i]` pico
/// copies per mini-file; every pico is `x` of a file, and sub-file i is
/// `alphas[i] * gammas[i] * x` of a file.
#[derive(Clone, Debug, PartialEq)]
pub struct FlexiblePlanParams {
    pub alphas: Vec<u128>,
    pub gammas: Vec<u128>,
    pub x: Rational,
    /// Number of ordered server-class partitions the delivery walks.
    pub partitions: u128,
}

pub fn flex_params(k: usize, profile: &PartitionProfile) -> FlexiblePlanParams {
    let alphas: Vec<u128> = profile.parts().iter().map(|&p| combin::binomial(k, p - 1)).collect();
    // gamma_i counts ordered partitions of the K - p_i remaining users into
    // the other classes (class i held fixed).
    let gammas: Vec<u128> = (0..profile.servers())
        .map(|i| {
            let mut sizes: Vec<usize> = profile
                .parts()
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &p)| p)
                .collect();
            sizes.push(profile.idle());
            combin::multinomial(&sizes)
        })
        .collect();
    let denom: u128 = alphas.iter().zip(&gammas).map(|(a, g)| a * g).sum();
    FlexiblePlanParams {
        alphas,
        gammas,
        x: Rational::new(1.into(), denom.into()),
        partitions: combin::multinomial(&profile.class_sizes()),
    }
}

/// The (memory, delay) point a profile achieves:
/// M = (N/K) * sum(p_i(p_i-1)/(K-p_i+1)) / sum(p_i/(K-p_i+1)),
/// T = 1 / sum(p_i/(K-p_i+1)).
pub fn flexible_pair(
    k: usize,
    n: usize,
    profile: &PartitionProfile,
) -> (Rational, Rational) {
    let mut weight = Rational::zero(); // sum p_i / (K - p_i + 1)
    let mut loaded = Rational::zero(); // sum p_i (p_i - 1) / (K - p_i + 1)
    for &p in profile.parts() {
        let denom = rat_int((k - p + 1) as u128);
        weight += rat_int(p as u128) / denom.clone();
        loaded += rat_int((p * (p - 1)) as u128) / denom;
    }
    let m = rat_int(n as u128) / rat_int(k as u128) * &loaded / &weight;
    let t = Rational::one() / weight;
    (m, t)
}

/// One corner of the flexible trade-off with its achieving profile.
#[derive(Clone, Debug, PartialEq)]
pub struct FlexibleCorner {
    pub profile: PartitionProfile,
    pub memory: Rational,
    pub delay: Rational,
    /// True when the point lies on the lower convex envelope of the corner
    /// set (the connecting lines are achievable by memory-sharing).
    pub on_envelope: bool,
}

/// Every distinct (M, T) corner achievable with L servers and K users,
/// enumerating all multiset profiles with parts >= 2 (idle counts
/// 0..=K-2L), sorted by memory then delay.
pub fn flexible_corner_set(k: usize, l: usize, n: usize) -> Result<Vec<FlexibleCorner>, BoundsError> {
    if k < 2 * l {
        return Err(BoundsError::InvalidProfile(format!(
            "flexible scheme needs K >= 2L (every server serves >= 2 users), got K={k}, L={l}"
        )));
    }
    let mut corners: Vec<FlexibleCorner> = Vec::new();
    for idle in 0..=k - 2 * l {
        for parts in combin::multiset_compositions(k - idle, l, 2) {
            let profile = PartitionProfile::new(parts, k).expect("enumerated profile is valid");
            let (memory, delay) = flexible_pair(k, n, &profile);
            // Exact-duplicate de-dup: keep the first profile achieving a pair.
            if !corners.iter().any(|c| c.memory == memory && c.delay == delay) {
                corners.push(FlexibleCorner { profile, memory, delay, on_envelope: false });
            }
        }
    }
    corners.sort_by(|a, b| a.memory.cmp(&b.memory).then(a.delay.cmp(&b.delay)));
    mark_lower_envelope(&mut corners);
    Ok(corners)
}

/// Mark the corners lying on the lower convex envelope of the (M, T) set.
fn mark_lower_envelope(corners: &mut [FlexibleCorner]) {
    // Monotone-chain lower hull over exact rationals; input sorted by M.
    let pts: Vec<(Rational, Rational)> =
        corners.iter().map(|c| (c.memory.clone(), c.delay.clone())).collect();
    let cross = |o: &(Rational, Rational), a: &(Rational, Rational), b: &(Rational, Rational)| {
        (&a.0 - &o.0) * (&b.1 - &o.1) - (&a.1 - &o.1) * (&b.0 - &o.0)
    };
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..pts.len() {
        while hull.len() >= 2 {
            let o = &pts[hull[hull.len() - 2]];
            let a = &pts[hull[hull.len() - 1]];
            if cross(o, a, &pts[i]).is_negative() {
                hull.pop();
            } else {
                break;
            }
        }
        // Equal-memory points: only the lowest delay can sit on the hull.
        if let Some(&last) = hull.last() {
            if pts[last].0 == pts[i].0 {
                continue;
            }
        }
        hull.push(i);
    }
    for c in corners.iter_mut() {
        c.on_envelope = false;
    }
    // A corner is on the envelope when it coincides with a hull vertex or
    // lies exactly on a hull segment.
    for i in 0..pts.len() {
        let on = hull.iter().any(|&h| pts[h] == pts[i])
            || hull.windows(2).any(|w| {
                let (a, b) = (&pts[w[0]], &pts[w[1]]);
                pts[i].0 >= a.0 && pts[i].0 <= b.0 && cross(a, b, &pts[i]).is_zero()
            });
        corners[i].on_envelope = on;
    }
}

/// Smallest memory achieving delay (1 - M/N) with no idle users (Q = 0):
/// M* = min over Q = 0 profiles of the achieved memory. Equals
/// (N/K)(K/L - 1) when L divides K.
pub fn flexible_mstar(k: usize, l: usize, n: usize) -> Result<Rational, BoundsError> {
    if k < 2 * l {
        return Err(BoundsError::InvalidProfile(format!(
            "flexible scheme needs K >= 2L, got K={k}, L={l}"
        )));
    }
    combin::multiset_compositions(k, l, 2)
        .into_iter()
        .map(|parts| {
            let profile = PartitionProfile::new(parts, k).expect("valid");
            flexible_pair(k, n, &profile).0
        })
        .min()
        .ok_or_else(|| BoundsError::InvalidProfile("no zero-idle profile exists".into()))
}

/// Coding delay of the linear-network scheme:
/// K(1 - M/N) / min(K, L + KM/N) at corners t = KM/N in {0..K}, linearly
/// interpolated elsewhere.
pub fn linear_delay(k: usize, l: usize, m: &Rational, n: usize) -> Result<Rational, BoundsError> {
    check_memory(m, n)?;
    let t = m * rat_int(k as u128) / rat_int(n as u128);
    Ok(interpolate_corners(&t, k as u64, |t| {
        let denom = (k as u64).min(l as u64 + t);
        Rational::new(((k as u64 - t) as u128).into(), (denom as u128).into())
    }))
}

/// Cut-set lower bound on the coding delay of any scheme:
/// max over s in {1..K} of (s - s*M/floor(N/s)) / min(s, L), floored at 0.
pub fn cutset_bound(k: usize, l: usize, m: &Rational, n: usize) -> Result<Rational, BoundsError> {
    check_memory(m, n)?;
    let mut best = Rational::zero();
    for s in 1..=k {
        let files_per_cut = (n / s) as u128; // floor(N/s) >= 1 since N >= K >= s
        let data = rat_int(s as u128) - rat_int(s as u128) * m / rat_int(files_per_cut);
        let links = rat_int(s.min(l) as u128);
        let value = data / links;
        if value > best {
            best = value;
        }
    }
    Ok(best)
}

/// achievable / bound, exact. Zero bound has no finite ratio.
pub fn gap_ratio(achievable: &Rational, bound: &Rational) -> Result<Rational, BoundsError> {
    if bound.is_zero() {
        return Err(BoundsError::InfiniteGap);
    }
    Ok(achievable / bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat;
    use proptest::prelude::*;

    fn profile(parts: &[usize], k: usize) -> PartitionProfile {
        PartitionProfile::new(parts.to_vec(), k).unwrap()
    }

    #[test]
    fn single_server_reference_points() {
        // K=4, M=2, N=4 -> 2/3; K=4, M=1, N=4 -> 3/2.
        assert_eq!(single_server_delay(4, &rat(2, 1), 4).unwrap(), rat(2, 3));
        assert_eq!(single_server_delay(4, &rat(1, 1), 4).unwrap(), rat(3, 2));
        // Extremes: M=0 sends everything, M=N sends nothing.
        assert_eq!(single_server_delay(4, &rat(0, 1), 4).unwrap(), rat(4, 1));
        assert_eq!(single_server_delay(4, &rat(4, 1), 4).unwrap(), rat(0, 1));
        // Non-corner M interpolates between corners: M=3/2 between 3/2 and 2/3.
        let mid = single_server_delay(4, &rat(3, 2), 4).unwrap();
        assert_eq!(mid, (rat(3, 2) + rat(2, 3)) / rat(2, 1));
        // Domain errors.
        assert!(single_server_delay(4, &rat(-1, 1), 4).is_err());
        assert!(single_server_delay(4, &rat(5, 1), 4).is_err());
    }

    #[test]
    fn dedicated_delay_reference_points() {
        // K=4, L=2, N=4, M=2 -> 1/2 (two parallel 2-user instances).
        assert_eq!(dedicated_delay(4, 2, &rat(2, 1), 4).unwrap(), rat(1, 2));
        // K=5, L=2 pads to K'=6, groups of 3; corners at M = uLN/K' = 5u/3.
        assert_eq!(padded_users(5, 2), 6);
        let d0 = dedicated_delay(5, 2, &rat(0, 1), 5).unwrap();
        assert_eq!(d0, rat(3, 1), "u=0: per-group delay K_g = 3");
        let d1 = dedicated_delay(5, 2, &rat(5, 3), 5).unwrap();
        assert_eq!(d1, rat(1, 1), "u=1: (3-1)/(1+1)");
        let d2 = dedicated_delay(5, 2, &rat(10, 3), 5).unwrap();
        assert_eq!(d2, rat(1, 3), "u=2: (3-2)/(1+2)");
        assert_eq!(dedicated_delay(5, 2, &rat(5, 1), 5).unwrap(), rat(0, 1));
        // L=1 degenerates to the single-server curve (K' = K).
        for m_num in 0..=8 {
            let m = rat(m_num, 2);
            assert_eq!(
                dedicated_delay(4, 1, &m, 4).unwrap(),
                single_server_delay(4, &m, 4).unwrap()
            );
        }
    }

    #[test]
    fn dedicated_corner_matches_per_group_formula() {
        // At every valid corner the formula must equal the per-group
        // single-server delay (K_g - u) / (1 + u) — the min cap only binds
        // where the numerator vanishes.
        for k in 1..=8usize {
            for l in 1..=4usize {
                let kp = padded_users(k, l);
                let group = kp / l;
                let n = k; // N = K keeps corners rational but in range
                for u in 0..=group {
                    let m = rat((u * l * n) as i64, kp as i64);
                    let want = rat((group - u) as i64, (1 + u) as i64);
                    assert_eq!(
                        dedicated_delay(k, l, &m, n).unwrap(),
                        want,
                        "K={k} L={l} u={u}"
                    );
                }
            }
        }
    }

    #[test]
    fn flexible_profile_validation() {
        assert!(PartitionProfile::new(vec![2, 2], 4).is_ok());
        assert!(PartitionProfile::new(vec![1, 2], 4).is_err(), "parts must be >= 2");
        assert!(PartitionProfile::new(vec![3, 3], 5).is_err(), "parts exceed K");
        assert!(PartitionProfile::new(vec![], 4).is_err());
        let p = profile(&[2, 2], 6);
        assert_eq!(p.idle(), 2);
        assert_eq!(p.class_sizes(), vec![2, 2, 2]);
    }

    #[test]
    fn flex_params_worked_example() {
        // K=4, L=2, profile (2,2), Q=0: alpha_i = C(4,1) = 4, gamma_i = 1,
        // x = 1/8, 6 ordered partitions.
        let p = profile(&[2, 2], 4);
        let params = flex_params(4, &p);
        assert_eq!(params.alphas, vec![4, 4]);
        assert_eq!(params.gammas, vec![1, 1]);
        assert_eq!(params.x, rat(1, 8));
        assert_eq!(params.partitions, 6);
        // K=5, L=2, profile (2,3): gamma_1 fixes the 2-class, partitioning
        // 3 remaining into sizes (3, 0): 1 way; gamma_2: 2 remaining into
        // (2, 0): 1 way. alpha = (C(5,1), C(5,2)) = (5, 10).
        let p = profile(&[2, 3], 5);
        let params = flex_params(5, &p);
        assert_eq!(params.alphas, vec![5, 10]);
        assert_eq!(params.gammas, vec![1, 1]);
        assert_eq!(params.x, rat(1, 15));
        assert_eq!(params.partitions, 10);
        // With idle users: K=6, profile (2,2), Q=2: gamma_i = C(4,2) = 6
        // (remaining 4 users into sizes (2, 2) with the idle class).
        let p = profile(&[2, 2], 6);
        let params = flex_params(6, &p);
        assert_eq!(params.alphas, vec![6, 6]);
        assert_eq!(params.gammas, vec![6, 6]);
        assert_eq!(params.partitions, combin::multinomial(&[2, 2, 2]));
    }

    #[test]
    fn flexible_pair_consistent_with_counting() {
        // The closed form must agree with the split-parameter derivation:
        // T = partitions * x and M = (N/K) sum alpha_i gamma_i (p_i - 1) * x.
        for (k, n, parts) in [
            (4usize, 4usize, vec![2usize, 2]),
            (5, 7, vec![2, 3]),
            (6, 6, vec![2, 2]),
            (6, 9, vec![2, 4]),
            (6, 6, vec![3, 3]),
            (8, 8, vec![2, 3, 3]),
            (8, 11, vec![2, 2, 2, 2]),
            (7, 7, vec![7]),
        ] {
            let p = profile(&parts, k);
            let params = flex_params(k, &p);
            let (m, t) = flexible_pair(k, n, &p);
            assert_eq!(t, rat_int(params.partitions) * &params.x, "delay, profile {parts:?}");
            let cached: Rational = params
                .alphas
                .iter()
                .zip(&params.gammas)
                .zip(p.parts())
                .map(|((a, g), &pi)| rat_int(a * g * (pi as u128 - 1)) * &params.x)
                .sum();
            let m_counted = rat_int(n as u128) / rat_int(k as u128) * cached;
            assert_eq!(m, m_counted, "memory, profile {parts:?}");
        }
    }

    #[test]
    fn flexible_reference_pairs() {
        // K=4, L=2, (2,2): (M, T) = (1, 3/4) with N=4.
        let (m, t) = flexible_pair(4, 4, &profile(&[2, 2], 4));
        assert_eq!((m, t), (rat(1, 1), rat(3, 4)));
        // Balanced profile identity M = (N/K)(K/L - 1).
        let (m, t) = flexible_pair(6, 6, &profile(&[3, 3], 6));
        assert_eq!(m, rat(2, 1));
        assert_eq!(t, Rational::one() - m / rat(6, 1), "zero idle: T = 1 - M/N");
        // Zero-idle profiles always satisfy T = 1 - M/N (with N = K).
        for (k, parts) in [(6usize, vec![2usize, 4]), (8, vec![2, 2, 4]), (8, vec![3, 5])] {
            let (m, t) = flexible_pair(k, k, &profile(&parts, k));
            assert_eq!(t, Rational::one() - m / rat_int(k as u128));
        }
    }

    #[test]
    fn flexible_corner_enumeration_k6_l2() {
        // Profiles: Q=2 -> (2,2); Q=1 -> (2,3); Q=0 -> (2,4), (3,3).
        let corners = flexible_corner_set(6, 2, 6).unwrap();
        let profiles: Vec<Vec<usize>> =
            corners.iter().map(|c| c.profile.parts().to_vec()).collect();
        assert_eq!(corners.len(), 4);
        for want in [vec![2, 2], vec![2, 3], vec![2, 4], vec![3, 3]] {
            assert!(profiles.contains(&want), "missing profile {want:?}");
        }
        // Sorted by memory, delays non-increasing along the corner list.
        for w in corners.windows(2) {
            assert!(w[0].memory < w[1].memory);
            assert!(w[0].delay >= w[1].delay);
        }
        // K < 2L has no valid profile.
        assert!(flexible_corner_set(4, 3, 4).is_err());
    }

    #[test]
    fn flexible_mstar_prefers_balanced_profile() {
        // L | K: M* = (N/K)(K/L - 1).
        assert_eq!(flexible_mstar(6, 2, 6).unwrap(), rat(2, 1));
        assert_eq!(flexible_mstar(6, 3, 6).unwrap(), rat(1, 1));
        assert_eq!(flexible_mstar(8, 2, 8).unwrap(), rat(3, 1));
        assert_eq!(flexible_mstar(4, 2, 4).unwrap(), rat(1, 1));
        // And with N != K the scale follows N/K.
        assert_eq!(flexible_mstar(6, 2, 9).unwrap(), rat(3, 1));
    }

    #[test]
    fn envelope_flags_lower_hull() {
        let corners = flexible_corner_set(8, 2, 8).unwrap();
        assert!(corners.iter().any(|c| c.on_envelope));
        // The cheapest and the most-cached corners are always on the hull.
        assert!(corners.first().unwrap().on_envelope);
        assert!(corners.last().unwrap().on_envelope);
        // Everything on the hull must not be strictly above the segment of
        // its neighbors on the hull (sanity of the exact geometry).
        let hull: Vec<&FlexibleCorner> = corners.iter().filter(|c| c.on_envelope).collect();
        for w in hull.windows(2) {
            assert!(w[0].memory < w[1].memory);
            assert!(w[0].delay >= w[1].delay);
        }
    }

    #[test]
    fn linear_delay_reference_values() {
        // L=2, N=K=4: M = 0..4 -> 2, 1, 1/2, 1/4, 0.
        let want = [rat(2, 1), rat(1, 1), rat(1, 2), rat(1, 4), rat(0, 1)];
        for (m, want) in want.iter().enumerate() {
            assert_eq!(&linear_delay(4, 2, &rat(m as i64, 1), 4).unwrap(), want, "L=2 M={m}");
        }
        // L=3, N=K=4: 4/3, 3/4, 1/2, 1/4, 0.
        let want = [rat(4, 3), rat(3, 4), rat(1, 2), rat(1, 4), rat(0, 1)];
        for (m, want) in want.iter().enumerate() {
            assert_eq!(&linear_delay(4, 3, &rat(m as i64, 1), 4).unwrap(), want, "L=3 M={m}");
        }
        // Example values: K=3, L=2, N=3, M=1 -> 2/3.
        assert_eq!(linear_delay(3, 2, &rat(1, 1), 3).unwrap(), rat(2, 3));
        // L=1 equals the single-server curve everywhere.
        for m2 in 0..=8 {
            let m = rat(m2, 2);
            assert_eq!(
                linear_delay(4, 1, &m, 4).unwrap(),
                single_server_delay(4, &m, 4).unwrap()
            );
        }
        // More servers never hurt.
        for l in 1..4usize {
            for m2 in 0..=8 {
                let m = rat(m2, 2);
                assert!(
                    linear_delay(4, l + 1, &m, 4).unwrap() <= linear_delay(4, l, &m, 4).unwrap()
                );
            }
        }
    }

    #[test]
    fn cutset_reference_points() {
        // K=3, L=2, N=3: the bound is max(1 - M/3, (3 - 3M)/2, 1 - M)+.
        let cases = [
            (rat(0, 1), rat(3, 2)),
            (rat(1, 3), rat(1, 1)),
            (rat(1, 1), rat(2, 3)),
            (rat(3, 1), rat(0, 1)),
        ];
        for (m, want) in cases {
            assert_eq!(cutset_bound(3, 2, &m, 3).unwrap(), want, "M = {m}");
        }
        // The bound never exceeds any achievable curve on a grid.
        for k in [4usize, 6] {
            for l in 1..=3usize {
                for m4 in 0..=(4 * k as i64) {
                    let m = rat(m4, 4);
                    let bound = cutset_bound(k, l, &m, k).unwrap();
                    assert!(bound <= linear_delay(k, l, &m, k).unwrap());
                    assert!(bound <= dedicated_delay(k, l, &m, k).unwrap());
                    assert!(bound <= single_server_delay(k, &m, k).unwrap());
                }
            }
        }
    }

    #[test]
    fn zero_idle_corners_meet_cutset() {
        // Q=0 profiles achieve T = 1 - M/N which equals the s=1 cut when
        // M >= the profile's memory... verified pointwise: the achieved
        // delay equals the cut-set bound exactly at those corners (N = K).
        for (k, l) in [(4usize, 2usize), (6, 2), (6, 3), (8, 2), (8, 3), (8, 4)] {
            for parts in combin::multiset_compositions(k, l, 2) {
                let p = profile(&parts, k);
                let (m, t) = flexible_pair(k, k, &p);
                assert_eq!(
                    cutset_bound(k, l, &m, k).unwrap(),
                    t,
                    "K={k} L={l} profile {parts:?}"
                );
            }
        }
    }

    #[test]
    fn gap_ratio_signals_infinite() {
        assert_eq!(gap_ratio(&rat(3, 2), &rat(3, 4)).unwrap(), rat(2, 1));
        assert_eq!(gap_ratio(&rat(1, 1), &rat(0, 1)).unwrap_err(), BoundsError::InfiniteGap);
    }

    proptest! {
        /// Every valid profile satisfies (1 - M/N) = (1 - Q/K) * T exactly.
        #[test]
        fn idle_fraction_identity(k in 4usize..10, seed in 0u64..500) {
            let l = 1 + (seed as usize) % (k / 2);
            let combos = combin::multiset_compositions(k, l, 2);
            prop_assume!(!combos.is_empty());
            let parts = combos[(seed as usize / 7) % combos.len()].clone();
            let q = k - parts.iter().sum::<usize>();
            let p = PartitionProfile::new(parts, k).unwrap();
            let n = k + (seed as usize) % 3;
            let (m, t) = flexible_pair(k, n, &p);
            let lhs = Rational::one() - m / rat_int(n as u128);
            let rhs = (Rational::one() - rat_int(q as u128) / rat_int(k as u128)) * t;
            prop_assert_eq!(lhs, rhs);
        }

        /// Interpolated curves are monotone non-increasing in M.
        #[test]
        fn delays_monotone_in_memory(k in 2usize..9, l in 1usize..5, num in 0i64..40) {
            let n = k;
            let m1 = rat(num, 41) * rat(n as i64, 1);
            let m2 = rat(num + 1, 41) * rat(n as i64, 1);
            prop_assert!(linear_delay(k, l, &m1, n).unwrap() >= linear_delay(k, l, &m2, n).unwrap());
            prop_assert!(dedicated_delay(k, l, &m1, n).unwrap() >= dedicated_delay(k, l, &m2, n).unwrap());
            prop_assert!(cutset_bound(k, l, &m1, n).unwrap() >= cutset_bound(k, l, &m2, n).unwrap());
        }
    }
}
