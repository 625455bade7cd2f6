//! Subset and partition enumeration used by the split plans and schemes.
//!
//! Everything here enumerates in lexicographic order over sorted index
//! lists, because piece keys, delivery schedules and freshness ledgers all
//! rely on one canonical order shared by encoder and decoder.

/// `n!` as `u128`. Panics on overflow (n > 34), which the parameter
/// guardrails keep unreachable.
pub fn factorial(n: usize) -> u128 {
    (1..=n as u128).product()
}

/// Binomial coefficient `C(n, k)`, 0 when `k > n`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128).expect("binomial overflow");
        acc /= (i + 1) as u128;
    }
    acc
}

/// Multinomial coefficient `(sum parts)! / prod(part!)`.
pub fn multinomial(parts: &[usize]) -> u128 {
    let mut remaining: usize = parts.iter().sum();
    let mut acc: u128 = 1;
    for &p in parts {
        acc = acc
            .checked_mul(binomial(remaining, p))
            .expect("multinomial overflow");
        remaining -= p;
    }
    acc
}

/// All `k`-subsets of `items` (assumed sorted), in lexicographic order.
/// The empty subset list is `[[]]` for `k == 0`.
pub fn subsets_of(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > items.len() {
        return out;
    }
    let mut current = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let needed = k - current.len();
        for i in start..=items.len().saturating_sub(needed) {
            current.push(items[i]);
            rec(items, k, i + 1, current, out);
            current.pop();
        }
    }
    rec(items, k, 0, &mut current, &mut out);
    out
}

/// All `k`-subsets of `{0, 1, .., n-1}` in lexicographic order.
pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let items: Vec<usize> = (0..n).collect();
    subsets_of(&items, k)
}

/// All ways to split `items` (sorted) into ordered classes of the given
/// sizes, lexicographic by (class 1, class 2, ..) with each class sorted.
/// Classes are distinguishable even when sizes coincide, so the count is
/// the multinomial `|items|! / prod(size_i!)` when sizes sum to `|items|`.
pub fn ordered_partitions(items: &[usize], sizes: &[usize]) -> Vec<Vec<Vec<usize>>> {
    assert_eq!(
        sizes.iter().sum::<usize>(),
        items.len(),
        "partition sizes must cover the item set"
    );
    let mut out = Vec::new();
    let mut acc: Vec<Vec<usize>> = Vec::with_capacity(sizes.len());
    fn rec(remaining: &[usize], sizes: &[usize], acc: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if sizes.is_empty() {
            out.push(acc.clone());
            return;
        }
        for class in subsets_of(remaining, sizes[0]) {
            let rest: Vec<usize> = remaining.iter().copied().filter(|v| !class.contains(v)).collect();
            acc.push(class);
            rec(&rest, &sizes[1..], acc, out);
            acc.pop();
        }
    }
    rec(items, sizes, &mut acc, &mut out);
    out
}

/// All multisets of `parts` integers, each >= `min_part`, summing to
/// `total`, returned as nondecreasing vectors in lexicographic order.
pub fn multiset_compositions(total: usize, parts: usize, min_part: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut acc = Vec::with_capacity(parts);
    fn rec(total: usize, parts: usize, floor: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if total == 0 {
                out.push(acc.clone());
            }
            return;
        }
        // Remaining parts are all >= p, so p can be at most total/parts.
        let mut p = floor;
        while p * parts <= total {
            acc.push(p);
            rec(total - p, parts - 1, p, acc, out);
            acc.pop();
            p += 1;
        }
    }
    rec(total, parts, min_part, &mut acc, &mut out);
    out
}

/// Position of `subset` (sorted) in the lexicographic enumeration of
/// `k`-subsets of `items`. Used to map piece keys back to plan offsets.
pub fn subset_rank(items: &[usize], subset: &[usize]) -> Option<usize> {
    let k = subset.len();
    let mut rank: u128 = 0;
    let mut prev_pos: isize = -1;
    for (j, &s) in subset.iter().enumerate() {
        let pos = items.iter().position(|&v| v == s)? as isize;
        if pos <= prev_pos {
            return None;
        }
        // Count subsets whose element j is drawn strictly earlier.
        for p in (prev_pos + 1) as usize..pos as usize {
            rank += binomial(items.len() - p - 1, k - j - 1);
        }
        prev_pos = pos;
    }
    Some(rank as usize)
}
