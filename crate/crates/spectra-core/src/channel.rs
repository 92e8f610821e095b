//! Channel data model: normalized interference channels, piecewise-flat
//! spectrum allocations, rate densities, and sub-channel refinement.
//!
//! A channel instance covers the unit band `[0, 1]` split into flat
//! sub-channels. All gains are stored normalized: the cross gain
//! `alpha(m, j, i)` is transmitter `j`'s gain into receiver `i` divided by
//! receiver `i`'s direct gain, and `noise(m, i)` is receiver `i`'s noise PSD
//! in the same normalization. [`normalize`] produces this form from raw
//! squared gains and noise levels; rates are invariant under the rescaling.
//!
//! Rates are measured in nats: a user transmitting at PSD `P_i` against
//! interference treated as noise has rate density
//! `ln(1 + P_i / (noise_i + sum_{j != i} P_j * alpha_ji))`.

use alloc::vec::Vec;
use thiserror::Error;

use crate::math;

/// Smallest admissible noise PSD. Channels are rejected below this floor so
/// that rate densities and their derivatives stay finite.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Tolerance on `sum(bandwidths) == 1` accepted by constructors. Inputs close
/// to a partition (e.g. decimal-rounded JSON) should be renormalized by the
/// caller before construction; see [`ChannelSpec::new`].
pub const BANDWIDTH_SUM_TOL: f64 = 1e-12;

/// Problems with channel parameters or their normalization.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("channel needs at least one user")]
    NoUsers,
    #[error("channel needs at least one sub-channel")]
    NoSubchannels,
    #[error("sub-channel {m} has non-positive bandwidth {bandwidth}")]
    NonPositiveBandwidth { m: usize, bandwidth: f64 },
    #[error("bandwidths sum to {sum}, expected 1 within {BANDWIDTH_SUM_TOL}")]
    BandwidthSum { sum: f64 },
    #[error("sub-channel {m}: expected {expected} entries in `{field}`, got {got}")]
    DimensionMismatch {
        m: usize,
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("cross gain alpha({m}, {j}, {i}) = {value} is negative or not finite")]
    BadCrossGain {
        m: usize,
        j: usize,
        i: usize,
        value: f64,
    },
    #[error("noise({m}, {i}) = {value} is below the floor {NOISE_FLOOR} or not finite")]
    NoiseBelowFloor { m: usize, i: usize, value: f64 },
    #[error("weight {i} = {value} is negative or not finite")]
    BadWeight { i: usize, value: f64 },
    #[error("all user weights are zero; at least one must be positive")]
    AllWeightsZero,
    #[error("budget {i} = {value} is negative or not finite")]
    BadBudget { i: usize, value: f64 },
    #[error("direct gain |H_{i}{i}|^2 = {value} on sub-channel {m} must be positive")]
    ZeroDirectGain { m: usize, i: usize, value: f64 },
    #[error("noise power sigma_{i} = {value} on sub-channel {m} must be positive")]
    BadSigma { m: usize, i: usize, value: f64 },
    #[error("refinement cut {value} must lie strictly inside (0, 1)")]
    CutOutOfRange { value: f64 },
}

/// Problems with a spectrum allocation or its evaluation against a channel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AllocationError {
    #[error("allocation needs at least one piece")]
    Empty,
    #[error("piece {index} has start {start} >= end {end}")]
    EmptyPiece { index: usize, start: f64, end: f64 },
    #[error("piece {index} starts at {found}, expected {expected} (pieces must tile [0,1])")]
    Gap {
        index: usize,
        expected: f64,
        found: f64,
    },
    #[error("allocation ends at {found}, expected 1")]
    BadCover { found: f64 },
    #[error("piece {index} expected {expected} PSD entries, got {got}")]
    PsdLength {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("piece {index} has negative or non-finite PSD {value} for user {user}")]
    NegativePsd {
        index: usize,
        user: usize,
        value: f64,
    },
    #[error("piece {index} ([{start}, {end}]) straddles a sub-channel boundary at {boundary}")]
    StraddlesBoundary {
        index: usize,
        start: f64,
        end: f64,
        boundary: f64,
    },
    #[error("allocation carries {got} users, channel has {expected}")]
    UserMismatch { expected: usize, got: usize },
}

/// One flat sub-channel: bandwidth fraction plus normalized gains and noise.
///
/// `alpha` is a `users x users` row-major matrix; entry `alpha[j * users + i]`
/// is the normalized gain from transmitter `j` into receiver `i`. Diagonal
/// entries are unused (they are 1 by normalization) and ignored.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Subchannel {
    pub bandwidth: f64,
    pub alpha: Vec<f64>,
    pub noise: Vec<f64>,
}

/// Normalized K-user channel over the unit band, with per-user rate weights
/// and power budgets. Immutable after construction; all solvers take `&self`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ChannelSpec {
    users: usize,
    subchannels: Vec<Subchannel>,
    weights: Vec<f64>,
    budgets: Vec<f64>,
}

impl ChannelSpec {
    /// Validates and builds a channel. Bandwidths must tile the unit band to
    /// within [`BANDWIDTH_SUM_TOL`], cross gains must be finite and
    /// nonnegative, noise must sit above [`NOISE_FLOOR`], weights must be
    /// nonnegative with at least one positive, budgets nonnegative.
    pub fn new(
        users: usize,
        subchannels: Vec<Subchannel>,
        weights: Vec<f64>,
        budgets: Vec<f64>,
    ) -> Result<Self, ChannelError> {
        if users == 0 {
            return Err(ChannelError::NoUsers);
        }
        if subchannels.is_empty() {
            return Err(ChannelError::NoSubchannels);
        }
        let mut sum = 0.0;
        for (m, sc) in subchannels.iter().enumerate() {
            if !(sc.bandwidth > 0.0) || !sc.bandwidth.is_finite() {
                return Err(ChannelError::NonPositiveBandwidth {
                    m,
                    bandwidth: sc.bandwidth,
                });
            }
            sum += sc.bandwidth;
            if sc.alpha.len() != users * users {
                return Err(ChannelError::DimensionMismatch {
                    m,
                    field: "alpha",
                    expected: users * users,
                    got: sc.alpha.len(),
                });
            }
            if sc.noise.len() != users {
                return Err(ChannelError::DimensionMismatch {
                    m,
                    field: "noise",
                    expected: users,
                    got: sc.noise.len(),
                });
            }
            for j in 0..users {
                for i in 0..users {
                    if i == j {
                        continue;
                    }
                    let value = sc.alpha[j * users + i];
                    if !value.is_finite() || value < 0.0 {
                        return Err(ChannelError::BadCrossGain { m, j, i, value });
                    }
                }
            }
            for (i, &value) in sc.noise.iter().enumerate() {
                if !value.is_finite() || value < NOISE_FLOOR {
                    return Err(ChannelError::NoiseBelowFloor { m, i, value });
                }
            }
        }
        if (sum - 1.0).abs() > BANDWIDTH_SUM_TOL {
            return Err(ChannelError::BandwidthSum { sum });
        }
        if weights.len() != users {
            return Err(ChannelError::DimensionMismatch {
                m: 0,
                field: "weights",
                expected: users,
                got: weights.len(),
            });
        }
        for (i, &value) in weights.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ChannelError::BadWeight { i, value });
            }
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(ChannelError::AllWeightsZero);
        }
        if budgets.len() != users {
            return Err(ChannelError::DimensionMismatch {
                m: 0,
                field: "budgets",
                expected: users,
                got: budgets.len(),
            });
        }
        for (i, &value) in budgets.iter().enumerate() {
            if !value.is_finite() || value < 0.0 {
                return Err(ChannelError::BadBudget { i, value });
            }
        }
        Ok(Self {
            users,
            subchannels,
            weights,
            budgets,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn subchannels(&self) -> &[Subchannel] {
        &self.subchannels
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn budgets(&self) -> &[f64] {
        &self.budgets
    }

    /// Normalized cross gain from transmitter `j` into receiver `i` on
    /// sub-channel `m`. `alpha(m, i, i)` is meaningless and returns 1.
    pub fn alpha(&self, m: usize, j: usize, i: usize) -> f64 {
        if i == j {
            1.0
        } else {
            self.subchannels[m].alpha[j * self.users + i]
        }
    }

    /// Normalized noise PSD of receiver `i` on sub-channel `m`.
    pub fn noise(&self, m: usize, i: usize) -> f64 {
        self.subchannels[m].noise[i]
    }

    /// Left boundaries of each sub-channel plus the final 1.0, so sub-channel
    /// `m` occupies `[edges[m], edges[m+1]]`.
    pub fn band_edges(&self) -> Vec<f64> {
        let mut edges = Vec::with_capacity(self.subchannels.len() + 1);
        let mut f = 0.0;
        edges.push(0.0);
        for sc in &self.subchannels {
            f += sc.bandwidth;
            edges.push(f);
        }
        let last = edges.len() - 1;
        edges[last] = 1.0;
        edges
    }

    /// Rate densities (nats per unit bandwidth) of all users on sub-channel
    /// `m` when they transmit at the flat PSD vector `psd`.
    pub fn rate_density(&self, m: usize, psd: &[f64]) -> Vec<f64> {
        debug_assert_eq!(psd.len(), self.users);
        let sc = &self.subchannels[m];
        let mut out = Vec::with_capacity(self.users);
        for i in 0..self.users {
            let mut denom = sc.noise[i];
            for j in 0..self.users {
                if j != i {
                    denom += psd[j] * sc.alpha[j * self.users + i];
                }
            }
            out.push(math::ln_1p(psd[i] / denom));
        }
        out
    }

    /// Splits sub-channels at the given in-band frequencies, copying gains
    /// and noise into the children. Cuts exactly on an existing boundary are
    /// ignored. The bandwidth sum is preserved exactly: the last child of
    /// each parent takes the parent's bandwidth minus its siblings'.
    pub fn refine(&self, cuts: &[f64]) -> Result<Self, ChannelError> {
        for &c in cuts {
            if !(c > 0.0 && c < 1.0) {
                return Err(ChannelError::CutOutOfRange { value: c });
            }
        }
        let mut sorted: Vec<f64> = cuts.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let edges = self.band_edges();
        let mut out = Vec::new();
        for (m, sc) in self.subchannels.iter().enumerate() {
            let lo = edges[m];
            let hi = edges[m + 1];
            let inner: Vec<f64> = sorted
                .iter()
                .copied()
                .filter(|&c| c > lo && c < hi && c != lo && c != hi)
                .collect();
            if inner.is_empty() {
                out.push(sc.clone());
                continue;
            }
            let mut used = 0.0;
            let mut prev = lo;
            for &c in &inner {
                let w = c - prev;
                out.push(Subchannel {
                    bandwidth: w,
                    alpha: sc.alpha.clone(),
                    noise: sc.noise.clone(),
                });
                used += w;
                prev = c;
            }
            out.push(Subchannel {
                bandwidth: sc.bandwidth - used,
                alpha: sc.alpha.clone(),
                noise: sc.noise.clone(),
            });
        }
        Self::new(self.users, out, self.weights.clone(), self.budgets.clone())
    }

    /// Integrated per-user rates of a piecewise-flat allocation. Every piece
    /// must lie inside a single sub-channel.
    pub fn total_rates(&self, alloc: &SpectrumAllocation) -> Result<RateVector, AllocationError> {
        if alloc.users() != self.users {
            return Err(AllocationError::UserMismatch {
                expected: self.users,
                got: alloc.users(),
            });
        }
        let edges = self.band_edges();
        let mut rates = alloc.pieces.first().map(|_| Vec::new()).unwrap_or_default();
        rates.resize(self.users, 0.0);
        // Pieces and sub-channels both march left to right, so a single
        // cursor over the sub-channels suffices.
        let mut m = 0usize;
        const EDGE_TOL: f64 = 1e-12;
        for (index, piece) in alloc.pieces.iter().enumerate() {
            while m + 1 < edges.len() - 1 && piece.start >= edges[m + 1] - EDGE_TOL {
                m += 1;
            }
            if piece.end > edges[m + 1] + EDGE_TOL {
                return Err(AllocationError::StraddlesBoundary {
                    index,
                    start: piece.start,
                    end: piece.end,
                    boundary: edges[m + 1],
                });
            }
            let density = self.rate_density(m, &piece.psd);
            let width = piece.end - piece.start;
            for i in 0..self.users {
                rates[i] += width * density[i];
            }
        }
        Ok(RateVector { rates })
    }
}

/// Raw (unnormalized) channel description: squared channel gains `h2` with
/// `h2[j * users + i] = |H_ji|^2` (transmitter `j` into receiver `i`,
/// diagonal included) and per-receiver noise powers `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSubchannel {
    pub bandwidth: f64,
    pub h2: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Raw channel plus weights and budgets; see [`normalize`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawChannelSpec {
    pub users: usize,
    pub subchannels: Vec<RawSubchannel>,
    pub weights: Vec<f64>,
    pub budgets: Vec<f64>,
}

/// Divides out the direct gains: `alpha_ji = |H_ji|^2 / |H_ii|^2` and
/// `noise_i = sigma_i / |H_ii|^2`. Rates computed from the normalized channel
/// equal rates computed from the raw one.
pub fn normalize(raw: &RawChannelSpec) -> Result<ChannelSpec, ChannelError> {
    let users = raw.users;
    if users == 0 {
        return Err(ChannelError::NoUsers);
    }
    let mut subchannels = Vec::with_capacity(raw.subchannels.len());
    for (m, sc) in raw.subchannels.iter().enumerate() {
        if sc.h2.len() != users * users {
            return Err(ChannelError::DimensionMismatch {
                m,
                field: "h2",
                expected: users * users,
                got: sc.h2.len(),
            });
        }
        if sc.sigma.len() != users {
            return Err(ChannelError::DimensionMismatch {
                m,
                field: "sigma",
                expected: users,
                got: sc.sigma.len(),
            });
        }
        for i in 0..users {
            let direct = sc.h2[i * users + i];
            if !(direct > 0.0) || !direct.is_finite() {
                return Err(ChannelError::ZeroDirectGain {
                    m,
                    i,
                    value: direct,
                });
            }
            let sigma = sc.sigma[i];
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(ChannelError::BadSigma { m, i, value: sigma });
            }
        }
        let mut alpha = alloc::vec![0.0; users * users];
        let mut noise = Vec::with_capacity(users);
        for i in 0..users {
            let direct = sc.h2[i * users + i];
            for j in 0..users {
                alpha[j * users + i] = if i == j {
                    1.0
                } else {
                    sc.h2[j * users + i] / direct
                };
            }
            noise.push(sc.sigma[i] / direct);
        }
        subchannels.push(Subchannel {
            bandwidth: sc.bandwidth,
            alpha,
            noise,
        });
    }
    ChannelSpec::new(users, subchannels, raw.weights.clone(), raw.budgets.clone())
}

/// Per-user integrated rates in nats.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct RateVector {
    pub rates: Vec<f64>,
}

impl RateVector {
    /// `sum_i weights[i] * R_i`.
    pub fn weighted_sum(&self, weights: &[f64]) -> f64 {
        self.rates.iter().zip(weights).map(|(r, w)| r * w).sum()
    }
}

/// One flat piece of an allocation: the band `[start, end]` with a constant
/// PSD per user.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub psd: Vec<f64>,
}

impl Piece {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }
}

/// Piecewise-flat transmit PSDs for all users over the unit band.
///
/// Pieces tile `[0, 1]` contiguously, in order, with positive width and
/// nonnegative PSDs; [`SpectrumAllocation::new`] enforces this. Whether the
/// allocation respects a particular channel's budgets is a property of the
/// pair, checked by [`SpectrumAllocation::budget_excess`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SpectrumAllocation {
    pub pieces: Vec<Piece>,
}

impl SpectrumAllocation {
    pub fn new(pieces: Vec<Piece>) -> Result<Self, AllocationError> {
        if pieces.is_empty() {
            return Err(AllocationError::Empty);
        }
        const TOL: f64 = 1e-12;
        let users = pieces[0].psd.len();
        let mut expected = 0.0;
        for (index, piece) in pieces.iter().enumerate() {
            if (piece.start - expected).abs() > TOL {
                return Err(AllocationError::Gap {
                    index,
                    expected,
                    found: piece.start,
                });
            }
            if !(piece.end > piece.start) {
                return Err(AllocationError::EmptyPiece {
                    index,
                    start: piece.start,
                    end: piece.end,
                });
            }
            if piece.psd.len() != users {
                return Err(AllocationError::PsdLength {
                    index,
                    expected: users,
                    got: piece.psd.len(),
                });
            }
            for (user, &value) in piece.psd.iter().enumerate() {
                if !value.is_finite() || value < 0.0 {
                    return Err(AllocationError::NegativePsd { index, user, value });
                }
            }
            expected = piece.end;
        }
        if (expected - 1.0).abs() > TOL {
            return Err(AllocationError::BadCover { found: expected });
        }
        Ok(Self { pieces })
    }

    /// A single flat piece covering the whole band.
    pub fn flat(psd: Vec<f64>) -> Result<Self, AllocationError> {
        Self::new(alloc::vec![Piece {
            start: 0.0,
            end: 1.0,
            psd,
        }])
    }

    pub fn users(&self) -> usize {
        self.pieces.first().map_or(0, |p| p.psd.len())
    }

    /// Total power spent per user: `sum_pieces width * PSD`.
    pub fn consumed_power(&self) -> Vec<f64> {
        let users = self.users();
        let mut power = alloc::vec![0.0; users];
        for piece in &self.pieces {
            let width = piece.width();
            for i in 0..users {
                power[i] += width * piece.psd[i];
            }
        }
        power
    }

    /// Largest per-user overdraw `consumed_i - budget_i` (negative when all
    /// budgets have slack).
    pub fn budget_excess(&self, budgets: &[f64]) -> f64 {
        self.consumed_power()
            .iter()
            .zip(budgets)
            .map(|(used, cap)| used - cap)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Re-expresses the same PSD function with pieces additionally split at
    /// the given in-band frequencies: rates are unchanged, only the piece
    /// list is finer.
    pub fn split_at(&self, cuts: &[f64]) -> Result<Self, AllocationError> {
        let mut sorted: Vec<f64> = cuts
            .iter()
            .copied()
            .filter(|&c| c > 0.0 && c < 1.0)
            .collect();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        let mut pieces = Vec::with_capacity(self.pieces.len() + sorted.len());
        for piece in &self.pieces {
            let mut start = piece.start;
            for &c in sorted.iter().filter(|&&c| c > piece.start && c < piece.end) {
                pieces.push(Piece {
                    start,
                    end: c,
                    psd: piece.psd.clone(),
                });
                start = c;
            }
            pieces.push(Piece {
                start,
                end: piece.end,
                psd: piece.psd.clone(),
            });
        }
        Self::new(pieces)
    }
}
