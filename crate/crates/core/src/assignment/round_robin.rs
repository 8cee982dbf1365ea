//! Circular coordination for homogeneous networks.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Weight;

/// The `k` channels with the highest weight, best first. Ties go to the lower
/// channel index; `+inf` entries rank above everything finite.
pub fn rank_top_k<T: Weight>(row: &[T], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| {
        row[b]
            .partial_cmp(&row[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Channel for `user` at slot `t`: `ranked[(user + t) mod K]`. Over any `K`
/// consecutive slots each user visits every ranked channel once.
pub fn round_robin_assign(ranked: &[usize], user: usize, t: u64) -> Result<usize> {
    let k = ranked.len();
    if user >= k {
        return Err(Error::BadUser { user, users: k });
    }
    for (i, c) in ranked.iter().enumerate() {
        if ranked[..i].contains(c) {
            return Err(Error::DuplicateChannel(*c));
        }
    }
    Ok(ranked[((user as u64 + t) % k as u64) as usize])
}
