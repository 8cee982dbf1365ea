//! Exhaustive enumeration, used as the reference the Hungarian solver is
//! checked against.

use super::{Assignment, WeightMatrix};
use crate::error::{Error, Result};
use crate::scalar::Weight;

const MAX_USERS: usize = 6;
const MAX_CHANNELS: usize = 8;

/// Visits every injective map in lexicographic order of `channel_of`.
fn for_each_injection(k: usize, n: usize, visit: &mut impl FnMut(&[usize])) {
    fn go(
        depth: usize,
        k: usize,
        n: usize,
        used: &mut [bool],
        cur: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if depth == k {
            visit(cur);
            return;
        }
        for c in 0..n {
            if used[c] {
                continue;
            }
            used[c] = true;
            cur.push(c);
            go(depth + 1, k, n, used, cur, visit);
            cur.pop();
            used[c] = false;
        }
    }
    go(
        0,
        k,
        n,
        &mut vec![false; n],
        &mut Vec::with_capacity(k),
        visit,
    );
}

fn checked<T: Weight>(w: &WeightMatrix<T>) -> Result<WeightMatrix<T>> {
    w.check_shape()?;
    if w.rows() > MAX_USERS || w.cols() > MAX_CHANNELS {
        return Err(Error::OracleSizeLimit {
            users: w.rows(),
            channels: w.cols(),
        });
    }
    Ok(w.with_sentinels_resolved())
}

/// Best value and the acceptance threshold for "optimal" on the resolved
/// matrix.
fn optimum<T: Weight>(resolved: &WeightMatrix<T>) -> (T, T) {
    let mut best: Option<T> = None;
    for_each_injection(resolved.rows(), resolved.cols(), &mut |a| {
        let v = resolved.value_of(a);
        if best.is_none_or(|b| v > b) {
            best = Some(v);
        }
    });
    let best = best.unwrap_or_else(T::zero);
    (best, best - T::tie_tolerance(&resolved.max_abs()))
}

/// Enumerates all injective assignments (`K <= 6`, `N <= 8`) and returns the
/// lexicographically first one attaining the maximum.
pub fn brute_force_assign<T: Weight>(w: &WeightMatrix<T>) -> Result<Assignment<T>> {
    let resolved = checked(w)?;
    let (_, threshold) = optimum(&resolved);
    let mut first: Option<Vec<usize>> = None;
    for_each_injection(resolved.rows(), resolved.cols(), &mut |a| {
        if first.is_none() && resolved.value_of(a) >= threshold {
            first = Some(a.to_vec());
        }
    });
    let channel_of = first.unwrap_or_default();
    let value = w.value_of(&channel_of);
    Ok(Assignment { channel_of, value })
}

/// Per-user union of channels over every optimal assignment.
pub fn brute_force_optimal_channels<T: Weight>(w: &WeightMatrix<T>) -> Result<Vec<Vec<usize>>> {
    let resolved = checked(w)?;
    let (_, threshold) = optimum(&resolved);
    let mut hit = vec![vec![false; w.cols()]; w.rows()];
    for_each_injection(resolved.rows(), resolved.cols(), &mut |a| {
        if resolved.value_of(a) >= threshold {
            for (k, &c) in a.iter().enumerate() {
                hit[k][c] = true;
            }
        }
    });
    Ok(hit
        .into_iter()
        .map(|row| (0..row.len()).filter(|&c| row[c]).collect())
        .collect())
}
