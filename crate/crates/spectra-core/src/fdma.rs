//! Orthogonal-access (FDMA) analysis: the power-invariant flat reallocation
//! and the strong-interference conditions under which it is globally optimal.
//!
//! The central construction takes users sharing a flat band at PSDs
//! `P_1..P_K` and hands user `i` an exclusive slice of width
//! `P_i / sum_j P_j` at PSD `sum_j P_j`. Each user spends exactly the same
//! power as before, so the comparison between shared and orthogonal operation
//! is pure: no budget shuffling is involved.
//!
//! For a pair of users the reallocation never hurts either one when both
//! normalized cross gains on the band are at least 1/2; applied across every
//! sub-channel this certifies that *some* FDMA allocation is globally optimal
//! for the pair regardless of budgets or weights. Users outside the
//! reallocated group also never lose: trading flat interference for the same
//! total interference concentrated in slices is a convexity win for them.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use thiserror::Error;

use crate::channel::ChannelSpec;
use crate::math;

/// Cross-gain threshold above which mutual interference is "strong" and
/// orthogonalizing a pair can only help. The comparison is exact: a gain of
/// exactly 1/2 satisfies the condition (the reallocation is rate-neutral
/// there only in degenerate cases).
pub const STRONG_INTERFERENCE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdmaError {
    #[error("user index {index} out of range for {users} users")]
    UserOutOfRange { index: usize, users: usize },
    #[error("a pair needs two distinct users, got ({i}, {j})")]
    NotAPair { i: usize, j: usize },
    #[error("reallocation group is empty")]
    EmptyGroup,
    #[error("group member {index} repeats in the reallocation group")]
    RepeatedMember { index: usize },
    #[error("all group powers are zero; the reallocation bandwidth split is undefined")]
    AllPowersZero,
    #[error("power {value} for user {index} is negative or not finite")]
    BadPower { index: usize, value: f64 },
    #[error("cross gain {value} must be positive to define a power-region threshold")]
    BadGain { value: f64 },
}

/// Flat FDMA reallocation of a shared band: user `i` receives bandwidth
/// fraction `P_i / sum(P)` at PSD `sum(P)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FdmaReallocation {
    /// Bandwidth fraction per user (zero for users with zero power).
    pub widths: Vec<f64>,
    /// Common PSD used inside every slice.
    pub psd: f64,
}

/// `widths[i] = powers[i] / sum(powers)`, `psd = sum(powers)`. Each user's
/// spent power `widths[i] * psd` equals `powers[i]` exactly in exact
/// arithmetic.
pub fn flat_fdma_reallocate(powers: &[f64]) -> Result<FdmaReallocation, FdmaError> {
    for (index, &value) in powers.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(FdmaError::BadPower { index, value });
        }
    }
    let total: f64 = powers.iter().sum();
    if total <= 0.0 {
        return Err(FdmaError::AllPowersZero);
    }
    Ok(FdmaReallocation {
        widths: powers.iter().map(|p| p / total).collect(),
        psd: total,
    })
}

/// Per-pair verdict of the strong-interference test.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PairCondition {
    pub i: usize,
    pub j: usize,
    /// For each sub-channel: do both `alpha(m, j, i) >= 1/2` and
    /// `alpha(m, i, j) >= 1/2` hold?
    pub per_subchannel: Vec<bool>,
    /// True when the condition holds on every sub-channel, certifying that
    /// orthogonalizing this pair can be done without losing any rate point.
    pub certified: bool,
}

/// Checks the mutual strong-interference condition for users `i` and `j` on
/// every sub-channel. The threshold comparison is exact (>= 1/2, no epsilon).
pub fn pairwise_fdma_condition(
    spec: &ChannelSpec,
    i: usize,
    j: usize,
) -> Result<PairCondition, FdmaError> {
    let users = spec.users();
    if i >= users {
        return Err(FdmaError::UserOutOfRange { index: i, users });
    }
    if j >= users {
        return Err(FdmaError::UserOutOfRange { index: j, users });
    }
    if i == j {
        return Err(FdmaError::NotAPair { i, j });
    }
    let per_subchannel: Vec<bool> = (0..spec.subchannels().len())
        .map(|m| {
            spec.alpha(m, j, i) >= STRONG_INTERFERENCE_THRESHOLD
                && spec.alpha(m, i, j) >= STRONG_INTERFERENCE_THRESHOLD
        })
        .collect();
    let certified = per_subchannel.iter().all(|&ok| ok);
    Ok(PairCondition {
        i,
        j,
        per_subchannel,
        certified,
    })
}

/// Verdicts for all user pairs of a channel.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FdmaDecision {
    /// One entry per unordered pair `(i, j)`, `i < j`, in lexicographic order.
    pub pairs: Vec<PairCondition>,
    /// True when every pair is certified: full orthogonal operation is
    /// optimal for the whole channel.
    pub all_certified: bool,
}

impl FdmaDecision {
    /// Looks up the verdict for an unordered pair.
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairCondition> {
        let key = if i < j { (i, j) } else { (j, i) };
        self.pairs.iter().find(|p| (p.i, p.j) == key)
    }
}

/// Runs [`pairwise_fdma_condition`] over all pairs.
pub fn analyze(spec: &ChannelSpec) -> FdmaDecision {
    let users = spec.users();
    let mut pairs = Vec::new();
    for i in 0..users {
        for j in (i + 1)..users {
            // Index bounds were checked by the loop ranges.
            pairs.push(pairwise_fdma_condition(spec, i, j).expect("valid pair"));
        }
    }
    let all_certified = pairs.iter().all(|p| p.certified);
    FdmaDecision {
        pairs,
        all_certified,
    }
}

/// Sum-power threshold above which the flat FDMA reallocation of a symmetric
/// two-user band (cross gain `alpha`, unit noise) yields a sum-rate at least
/// as large as full-band sharing: `p0 = 2 (1/(2 alpha^2) - 1/alpha)`.
///
/// For `alpha >= 1/2` this is nonpositive: FDMA dominates at every power.
pub fn fdma_power_region_threshold(alpha: f64) -> Result<f64, FdmaError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(FdmaError::BadGain { value: alpha });
    }
    Ok(2.0 * (1.0 / (2.0 * alpha * alpha) - 1.0 / alpha))
}

/// Rates of every user before and after a group of users is orthogonalized
/// on one flat sub-channel.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ReallocationComparison {
    /// Rate density per user under full sharing at `powers`.
    pub shared: Vec<f64>,
    /// Rate density per user after the group's slice reallocation.
    pub reallocated: Vec<f64>,
    /// The reallocation applied to the group's powers.
    pub reallocation: FdmaReallocation,
}

/// Compares flat sharing on sub-channel `m` against orthogonalizing `group`
/// within that band while everyone else keeps transmitting flat.
///
/// Group members are assigned slices by [`flat_fdma_reallocate`] of their
/// powers; outside the group each user keeps PSD `powers[i]` across the whole
/// band and, inside a slice owned by group member `g`, sees interference from
/// `g` alone (at the slice PSD) plus the other outsiders. Group members with
/// zero power get zero-width slices and keep rate zero. A singleton group
/// reproduces the shared rates exactly.
pub fn reallocation_gain(
    spec: &ChannelSpec,
    m: usize,
    powers: &[f64],
    group: &[usize],
) -> Result<ReallocationComparison, FdmaError> {
    let users = spec.users();
    if group.is_empty() {
        return Err(FdmaError::EmptyGroup);
    }
    let mut seen = BTreeMap::new();
    for &g in group {
        if g >= users {
            return Err(FdmaError::UserOutOfRange { index: g, users });
        }
        if seen.insert(g, ()).is_some() {
            return Err(FdmaError::RepeatedMember { index: g });
        }
    }
    for (index, &value) in powers.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(FdmaError::BadPower { index, value });
        }
    }

    let shared = spec.rate_density(m, powers);

    let group_powers: Vec<f64> = group.iter().map(|&g| powers[g]).collect();
    let reallocation = flat_fdma_reallocate(&group_powers)?;
    let in_group = |i: usize| group.iter().position(|&g| g == i);

    let mut reallocated = Vec::with_capacity(users);
    for i in 0..users {
        if let Some(slot) = in_group(i) {
            let width = reallocation.widths[slot];
            if width == 0.0 {
                reallocated.push(0.0);
                continue;
            }
            // Inside its own slice the member sees only outsider interference.
            let mut denom = spec.noise(m, i);
            for j in 0..users {
                if j != i && in_group(j).is_none() {
                    denom += powers[j] * spec.alpha(m, j, i);
                }
            }
            reallocated.push(width * math::ln_1p(reallocation.psd / denom));
        } else {
            // Outsiders integrate over the group's slices (plus any remaining
            // width if the group spends nothing there -- widths sum to 1, so
            // there is none).
            let mut rate = 0.0;
            let mut base = spec.noise(m, i);
            for j in 0..users {
                if j != i && in_group(j).is_none() {
                    base += powers[j] * spec.alpha(m, j, i);
                }
            }
            for (slot, &g) in group.iter().enumerate() {
                let width = reallocation.widths[slot];
                if width == 0.0 {
                    continue;
                }
                let denom = base + reallocation.psd * spec.alpha(m, g, i);
                rate += width * math::ln_1p(powers[i] / denom);
            }
            reallocated.push(rate);
        }
    }

    Ok(ReallocationComparison {
        shared,
        reallocated,
        reallocation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ChannelSpec, Subchannel};
    use alloc::vec;

    fn two_user(alpha_21: f64, alpha_12: f64) -> ChannelSpec {
        ChannelSpec::new(
            2,
            vec![Subchannel {
                bandwidth: 1.0,
                alpha: vec![1.0, alpha_12, alpha_21, 1.0],
                noise: vec![1.0, 1.0],
            }],
            vec![1.0, 1.0],
            vec![10.0, 10.0],
        )
        .expect("valid channel")
    }

    #[test]
    fn reallocation_splits_band_proportionally_to_power() {
        let r = flat_fdma_reallocate(&[3.0, 1.0]).expect("valid powers");
        assert_eq!(r.widths, vec![0.75, 0.25]);
        assert_eq!(r.psd, 4.0);
        // Spent power per user is unchanged.
        assert_eq!(r.widths[0] * r.psd, 3.0);
        assert_eq!(r.widths[1] * r.psd, 1.0);
    }

    #[test]
    fn reallocation_rejects_zero_total_power() {
        assert!(matches!(
            flat_fdma_reallocate(&[0.0, 0.0]),
            Err(FdmaError::AllPowersZero)
        ));
    }

    #[test]
    fn condition_requires_both_directions() {
        let spec = two_user(0.6, 0.4);
        let pair = pairwise_fdma_condition(&spec, 0, 1).expect("valid pair");
        assert!(!pair.certified, "only one direction is strong");

        let spec = two_user(0.5, 0.5);
        let pair = pairwise_fdma_condition(&spec, 0, 1).expect("valid pair");
        assert!(pair.certified, "threshold is inclusive at exactly 1/2");
    }

    #[test]
    fn condition_must_hold_on_every_subchannel() {
        let spec = ChannelSpec::new(
            2,
            vec![
                Subchannel {
                    bandwidth: 0.5,
                    alpha: vec![1.0, 0.9, 0.8, 1.0],
                    noise: vec![1.0, 1.0],
                },
                Subchannel {
                    bandwidth: 0.5,
                    alpha: vec![1.0, 0.9, 0.3, 1.0],
                    noise: vec![1.0, 1.0],
                },
            ],
            vec![1.0, 1.0],
            vec![10.0, 10.0],
        )
        .expect("valid channel");
        let decision = analyze(&spec);
        assert!(!decision.all_certified);
        let pair = decision.pair(1, 0).expect("pair exists");
        assert_eq!(pair.per_subchannel, vec![true, false]);
    }

    #[test]
    fn pair_arguments_are_validated() {
        let spec = two_user(1.0, 1.0);
        assert!(matches!(
            pairwise_fdma_condition(&spec, 0, 0),
            Err(FdmaError::NotAPair { .. })
        ));
        assert!(matches!(
            pairwise_fdma_condition(&spec, 0, 7),
            Err(FdmaError::UserOutOfRange { .. })
        ));
    }

    #[test]
    fn power_region_threshold_matches_closed_form() {
        let p0 = fdma_power_region_threshold(0.1).expect("valid gain");
        assert!((p0 - 80.0).abs() < 1e-12, "p0(0.1) = 80, got {p0}");
        assert!(fdma_power_region_threshold(0.5).expect("valid gain") <= 0.0);
        assert!(matches!(
            fdma_power_region_threshold(0.0),
            Err(FdmaError::BadGain { .. })
        ));
    }

    #[test]
    fn strong_interference_reallocation_helps_both_users() {
        let spec = two_user(0.8, 0.9);
        let cmp = reallocation_gain(&spec, 0, &[6.0, 2.0], &[0, 1]).expect("valid group");
        for i in 0..2 {
            assert!(
                cmp.reallocated[i] >= cmp.shared[i] - 1e-12,
                "user {i} lost rate: {} -> {}",
                cmp.shared[i],
                cmp.reallocated[i]
            );
        }
    }

    #[test]
    fn weak_interference_reallocation_can_hurt() {
        let spec = two_user(0.05, 0.05);
        let cmp = reallocation_gain(&spec, 0, &[2.0, 2.0], &[0, 1]).expect("valid group");
        let shared_sum: f64 = cmp.shared.iter().sum();
        let fdma_sum: f64 = cmp.reallocated.iter().sum();
        assert!(
            shared_sum > fdma_sum,
            "weak coupling at low power favors sharing"
        );
    }

    #[test]
    fn singleton_group_changes_nothing() {
        let spec = two_user(0.7, 0.6);
        let cmp = reallocation_gain(&spec, 0, &[5.0, 3.0], &[1]).expect("valid group");
        assert!((cmp.shared[0] - cmp.reallocated[0]).abs() < 1e-12);
        assert!((cmp.shared[1] - cmp.reallocated[1]).abs() < 1e-12);
    }

    #[test]
    fn outsider_never_loses_from_group_reallocation() {
        // Three users; users 0 and 1 orthogonalize, user 2 watches.
        let spec = ChannelSpec::new(
            3,
            vec![Subchannel {
                bandwidth: 1.0,
                alpha: vec![
                    1.0, 0.9, 0.4, //
                    0.8, 1.0, 0.7, //
                    0.2, 0.3, 1.0,
                ],
                noise: vec![1.0, 0.5, 2.0],
            }],
            vec![1.0, 1.0, 1.0],
            vec![10.0, 10.0, 10.0],
        )
        .expect("valid channel");
        let cmp = reallocation_gain(&spec, 0, &[4.0, 6.0, 3.0], &[0, 1]).expect("valid group");
        assert!(
            cmp.reallocated[2] >= cmp.shared[2] - 1e-12,
            "outsider rate dropped: {} -> {}",
            cmp.shared[2],
            cmp.reallocated[2]
        );
    }

    #[test]
    fn zero_power_group_member_gets_zero_width() {
        let spec = two_user(0.8, 0.8);
        let cmp = reallocation_gain(&spec, 0, &[5.0, 0.0], &[0, 1]).expect("valid group");
        assert_eq!(cmp.reallocation.widths[1], 0.0);
        assert_eq!(cmp.reallocated[1], 0.0);
        // User 0 takes the whole band free of user 1.
        assert!((cmp.reallocated[0] - 6.0f64.ln()).abs() < 1e-12);
    }
}
