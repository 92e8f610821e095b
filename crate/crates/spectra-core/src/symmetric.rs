//! Closed-form optimum for two users with symmetric coupling.
//!
//! On a flat band with unit noise, symmetric cross gain `alpha` and sum power
//! `p`, only two pure strategies matter:
//!
//! - **Sharing**: both users spread `p/2` over the whole band, worth
//!   `f*(p) = 2 ln(1 + (p/2) / (1 + alpha p / 2))`. This is the best sharing
//!   strategy (and concave in `p`) up to the crossover power
//!   `p0 = 2 (1/(2 alpha^2) - 1/alpha)`.
//! - **FDMA**: each user takes half the band at PSD `p`, worth
//!   `h*(p) = ln(1 + p)`.
//!
//! The curves cross at `p0` with `f*` arriving flatter than `h*`, so the
//! concave envelope of `max(f*, h*)` replaces the stretch between two tangent
//! powers `p_f < p0 < p_h` by their common tangent line. [`solve_tangency`]
//! locates `p_f` as the root of the tangency equation and recovers
//! `p_h = p_f (alpha (1+alpha) p_f + 4 alpha + 2) / 4` in closed form. The
//! envelope value [`r_star_flat`] is then: `f*` below `p_f`, `h*` above
//! `p_h`, and the chord `(1-lambda) f*(p_f) + lambda h*(p_h)` with
//! `lambda = (p - p_f)/(p_h - p_f)` in between, achieved by time-sharing the
//! band: a fraction `1-lambda` shared at sum PSD `p_f` and a fraction
//! `lambda` split into two FDMA half-slices at PSD `p_h`.
//!
//! For `alpha >= 1/2` sharing never wins and the envelope is `h*` alone.
//!
//! [`solve_symmetric_selective`] extends the flat solve to frequency-
//! selective symmetric channels by normalizing each sub-channel's PSD by its
//! noise and water-filling a common power price across sub-channels.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::channel::{ChannelSpec, Piece, SpectrumAllocation};
use crate::math;
use crate::optimizer::{OptimizationResult, SolverDiagnostics};
use crate::roots::{bisect, scan_sign_changes, Bracket};

/// Cross gains at or above this value make FDMA optimal at every power; the
/// sharing branch and the tangency construction exist only below it.
pub const SHARING_GAIN_LIMIT: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetricError {
    #[error("cross gain alpha = {alpha} must lie in (0, 1/2) for the sharing envelope")]
    GainOutOfSharingRange { alpha: f64 },
    #[error("cross gain alpha = {alpha} must be positive and finite")]
    BadGain { alpha: f64 },
    #[error("power {p} must be nonnegative and finite")]
    BadPower { p: f64 },
    #[error("tangency root not found in (0, {hi}); scanned {panels} panels")]
    TangencyRootNotFound { hi: f64, panels: usize },
    #[error("no tangency candidate passed validation; candidates at {candidates:?}")]
    TangencyValidationFailed { candidates: Vec<f64> },
    #[error("channel is not a two-user channel (has {users} users)")]
    NotTwoUsers { users: usize },
    #[error("sub-channel {m} is not symmetric: {what} differ ({a} vs {b})")]
    NotSymmetric {
        m: usize,
        what: &'static str,
        a: f64,
        b: f64,
    },
    #[error("user weights ({a}, {b}) must be equal for the symmetric solver")]
    UnequalWeights { a: f64, b: f64 },
    #[error(
        "price search failed to meet the budget: residual {residual} after {iterations} iterations"
    )]
    BudgetNotMet { residual: f64, iterations: usize },
}

/// Best symmetric full-band sharing sum rate at sum power `p`:
/// `2 ln(1 + (p/2) / (1 + alpha p / 2))`.
///
/// Requires `alpha` in (0, 1/2). The formula evaluates for any `p >= 0`, but
/// it is the *optimal* sharing value (and concave) only up to the crossover
/// [`fdma::fdma_power_region_threshold`](crate::fdma::fdma_power_region_threshold).
pub fn f_star(alpha: f64, p: f64) -> Result<f64, SymmetricError> {
    check_sharing_gain(alpha)?;
    check_power(p)?;
    // 2 [ln(2 + (1+alpha) p) - ln(2 + alpha p)], stable for large p.
    Ok(2.0 * (math::ln(2.0 + (1.0 + alpha) * p) - math::ln(2.0 + alpha * p)))
}

/// Derivative of [`f_star`] in `p`: `4 / ((2 + (1+alpha) p)(2 + alpha p))`.
pub fn f_star_slope(alpha: f64, p: f64) -> Result<f64, SymmetricError> {
    check_sharing_gain(alpha)?;
    check_power(p)?;
    Ok(4.0 / ((2.0 + (1.0 + alpha) * p) * (2.0 + alpha * p)))
}

/// FDMA half-band sum rate at sum power `p`: `ln(1 + p)`.
pub fn h_star(p: f64) -> Result<f64, SymmetricError> {
    check_power(p)?;
    Ok(math::ln_1p(p))
}

/// Derivative of [`h_star`] in `p`: `1 / (1 + p)`.
pub fn h_star_slope(p: f64) -> Result<f64, SymmetricError> {
    check_power(p)?;
    Ok(1.0 / (1.0 + p))
}

fn check_sharing_gain(alpha: f64) -> Result<(), SymmetricError> {
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= SHARING_GAIN_LIMIT {
        return Err(SymmetricError::GainOutOfSharingRange { alpha });
    }
    Ok(())
}

fn check_power(p: f64) -> Result<(), SymmetricError> {
    if !p.is_finite() || p < 0.0 {
        return Err(SymmetricError::BadPower { p });
    }
    Ok(())
}

/// The two tangent powers joining the sharing and FDMA curves, plus
/// validation artifacts.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct TangencySolution {
    pub alpha: f64,
    /// Tangent power on the sharing curve.
    pub p_f: f64,
    /// Tangent power on the FDMA curve (closed form in `p_f`).
    pub p_h: f64,
    /// Common tangent slope `f*'(p_f) = h*'(p_h)`.
    pub slope: f64,
    /// Crossover power `p0` where `f*` and `h*` meet.
    pub crossover: f64,
    /// Tangency-equation residual at `p_f` (should be ~0).
    pub residual: f64,
    /// Every sign-change root the scan located, including `p_f` itself.
    /// More than one entry means the scan saw extra crossings; the returned
    /// root is the one that passed slope validation.
    pub scanned_roots: Vec<f64>,
}

/// Residual of the tangency condition at sharing tangent power `x`:
/// chord slope minus tangent slope, cleared of denominators:
/// `x (a(1+a)x + 4a - 2) / ((a x + 2)((1+a) x + 2)) - ln((a x + 2)^3 / (4((1+a) x + 2)))`.
fn tangency_residual(alpha: f64, x: f64) -> f64 {
    let lhs = x * (alpha * (1.0 + alpha) * x + 4.0 * alpha - 2.0)
        / ((alpha * x + 2.0) * ((1.0 + alpha) * x + 2.0));
    let rhs = 3.0 * math::ln(alpha * x + 2.0) - math::ln(4.0) - math::ln((1.0 + alpha) * x + 2.0);
    lhs - rhs
}

/// `p_h` as a function of the sharing tangent power, from equating
/// `f*'(p_f) = h*'(p_h) = 1/(1 + p_h)`.
fn tangent_fdma_power(alpha: f64, p_f: f64) -> f64 {
    0.25 * p_f * (alpha * (1.0 + alpha) * p_f + 4.0 * alpha + 2.0)
}

const TANGENCY_SCAN_PANELS: usize = 1024;

/// Solves the tangency equation for `alpha` in (0, 1/2).
///
/// Scans `(0, p0)` (endpoints pulled in by `1e-9 p0`, since both sides of the
/// equation vanish to first order at 0) for sign changes over 1024 panels,
/// bisects each bracket, validates every root (tangent powers must straddle
/// the crossover; chord and tangent slopes must agree to 1e-8 relative), and
/// returns the validated root. The bracket expands upward if the scan comes
/// back empty.
pub fn solve_tangency(alpha: f64) -> Result<TangencySolution, SymmetricError> {
    check_sharing_gain(alpha)?;
    let crossover = (1.0 - 2.0 * alpha) / (alpha * alpha);
    let margin = 1e-9 * crossover;
    let f = |x: f64| tangency_residual(alpha, x);

    let mut hi = crossover - margin;
    let mut brackets: Vec<Bracket> = Vec::new();
    // The root lives below the crossover; the expansion is a safety valve
    // so a near-degenerate scan still terminates with a diagnosis.
    for _ in 0..8 {
        brackets = scan_sign_changes(margin, hi, TANGENCY_SCAN_PANELS, f);
        if !brackets.is_empty() {
            break;
        }
        hi *= 2.0;
    }
    if brackets.is_empty() {
        return Err(SymmetricError::TangencyRootNotFound {
            hi,
            panels: TANGENCY_SCAN_PANELS,
        });
    }

    let scanned_roots: Vec<f64> = brackets.into_iter().map(|b| bisect(b, 0.0, f)).collect();

    let mut solution: Option<TangencySolution> = None;
    for &p_f in &scanned_roots {
        let p_h = tangent_fdma_power(alpha, p_f);
        if !(p_f > 0.0 && p_f < crossover && p_h > crossover) {
            continue;
        }
        let slope = f_star_slope(alpha, p_f).expect("validated inputs");
        let slope_h = h_star_slope(p_h).expect("validated inputs");
        if (slope - slope_h).abs() > 1e-8 * slope {
            continue;
        }
        let chord = (h_star(p_h).expect("validated inputs")
            - f_star(alpha, p_f).expect("validated inputs"))
            / (p_h - p_f);
        if (chord - slope).abs() > 1e-8 * slope {
            continue;
        }
        if solution.is_none() {
            solution = Some(TangencySolution {
                alpha,
                p_f,
                p_h,
                slope,
                crossover,
                residual: f(p_f),
                scanned_roots: scanned_roots.clone(),
            });
        }
    }
    solution.ok_or(SymmetricError::TangencyValidationFailed {
        candidates: scanned_roots,
    })
}

/// Which branch of the envelope a power lands on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum EnvelopeRegime {
    /// Full-band sharing, `p <= p_f`.
    Sharing,
    /// Time-share of sharing at `p_f` and FDMA at `p_h`.
    Mixture,
    /// Pure FDMA, `p >= p_h` (or any power when `alpha >= 1/2`).
    Fdma,
}

/// Envelope value at one power.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct EnvelopeValue {
    pub value: f64,
    pub regime: EnvelopeRegime,
    /// Mixture weight on the FDMA tangent point: 0 in the sharing regime,
    /// 1 in the FDMA regime, interior on the chord.
    pub lambda: f64,
}

/// The sum-rate envelope of one symmetric flat band, with the tangency
/// solved once at construction. `tangency` is `None` iff `alpha >= 1/2`
/// (pure FDMA at every power).
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEnvelope {
    alpha: f64,
    tangency: Option<TangencySolution>,
}

impl SymmetricEnvelope {
    pub fn new(alpha: f64) -> Result<Self, SymmetricError> {
        if !alpha.is_finite() || alpha <= 0.0 {
            return Err(SymmetricError::BadGain { alpha });
        }
        let tangency = if alpha < SHARING_GAIN_LIMIT {
            Some(solve_tangency(alpha)?)
        } else {
            None
        };
        Ok(Self { alpha, tangency })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tangency(&self) -> Option<&TangencySolution> {
        self.tangency.as_ref()
    }

    /// Envelope value at sum power `p` (unit noise normalization).
    pub fn value(&self, p: f64) -> Result<EnvelopeValue, SymmetricError> {
        check_power(p)?;
        let Some(t) = &self.tangency else {
            return Ok(EnvelopeValue {
                value: h_star(p)?,
                regime: EnvelopeRegime::Fdma,
                lambda: 1.0,
            });
        };
        if p <= t.p_f {
            Ok(EnvelopeValue {
                value: f_star(self.alpha, p)?,
                regime: EnvelopeRegime::Sharing,
                lambda: 0.0,
            })
        } else if p >= t.p_h {
            Ok(EnvelopeValue {
                value: h_star(p)?,
                regime: EnvelopeRegime::Fdma,
                lambda: 1.0,
            })
        } else {
            let lambda = (p - t.p_f) / (t.p_h - t.p_f);
            let value = (1.0 - lambda) * f_star(self.alpha, t.p_f)? + lambda * h_star(t.p_h)?;
            Ok(EnvelopeValue {
                value,
                regime: EnvelopeRegime::Mixture,
                lambda,
            })
        }
    }

    /// Marginal value `d r*/dp` at sum power `p` (the chord slope inside the
    /// mixture, the branch derivative elsewhere).
    pub fn slope(&self, p: f64) -> Result<f64, SymmetricError> {
        check_power(p)?;
        let Some(t) = &self.tangency else {
            return h_star_slope(p);
        };
        if p <= t.p_f {
            f_star_slope(self.alpha, p)
        } else if p >= t.p_h {
            h_star_slope(p)
        } else {
            Ok(t.slope)
        }
    }

    /// Pieces realizing the envelope value on the band
    /// `[band_start, band_start + band_width]` when the receiver noise PSD is
    /// `noise` (PSDs are de-normalized by it) and the sum power spent on the
    /// band is `band_width * noise * p`. The final piece ends exactly at
    /// `band_end` to keep piece lists watertight.
    fn band_pieces(
        &self,
        p: f64,
        band_start: f64,
        band_end: f64,
        noise: f64,
    ) -> Result<Vec<Piece>, SymmetricError> {
        let value = self.value(p)?;
        let width = band_end - band_start;
        let pieces = match value.regime {
            EnvelopeRegime::Sharing => vec![Piece {
                start: band_start,
                end: band_end,
                psd: vec![noise * p / 2.0, noise * p / 2.0],
            }],
            EnvelopeRegime::Fdma => {
                let mid = band_start + 0.5 * width;
                vec![
                    Piece {
                        start: band_start,
                        end: mid,
                        psd: vec![noise * p, 0.0],
                    },
                    Piece {
                        start: mid,
                        end: band_end,
                        psd: vec![0.0, noise * p],
                    },
                ]
            }
            EnvelopeRegime::Mixture => {
                let t = self.tangency.as_ref().expect("mixture implies tangency");
                let lambda = value.lambda;
                let share_end = band_start + (1.0 - lambda) * width;
                let fdma_mid = share_end + 0.5 * lambda * width;
                vec![
                    Piece {
                        start: band_start,
                        end: share_end,
                        psd: vec![noise * t.p_f / 2.0, noise * t.p_f / 2.0],
                    },
                    Piece {
                        start: share_end,
                        end: fdma_mid,
                        psd: vec![noise * t.p_h, 0.0],
                    },
                    Piece {
                        start: fdma_mid,
                        end: band_end,
                        psd: vec![0.0, noise * t.p_h],
                    },
                ]
            }
        };
        Ok(pieces)
    }
}

/// Envelope value for a flat symmetric band: unit noise, cross gain `alpha`,
/// sum power `p`. For `alpha >= 1/2` this is `h*(p)` (pure FDMA); for
/// `alpha` in (0, 1/2) it follows the sharing / mixture / FDMA regimes.
pub fn r_star_flat(alpha: f64, p: f64) -> Result<EnvelopeValue, SymmetricError> {
    SymmetricEnvelope::new(alpha)?.value(p)
}

/// An allocation of the unit band achieving [`r_star_flat`] at sum power `p`
/// (unit noise): full-band sharing at `(p/2, p/2)`, FDMA halves at PSD `p`,
/// or the tangent mixture. Spent sum power is exactly `p` in each regime.
pub fn build_allocation_flat(alpha: f64, p: f64) -> Result<SpectrumAllocation, SymmetricError> {
    let envelope = SymmetricEnvelope::new(alpha)?;
    let pieces = envelope.band_pieces(p, 0.0, 1.0, 1.0)?;
    Ok(SpectrumAllocation::new(pieces).expect("band pieces tile the unit band"))
}

const SYMMETRY_TOL: f64 = 1e-12;

fn require_symmetric(spec: &ChannelSpec) -> Result<(), SymmetricError> {
    if spec.users() != 2 {
        return Err(SymmetricError::NotTwoUsers {
            users: spec.users(),
        });
    }
    let close = |a: f64, b: f64| (a - b).abs() <= SYMMETRY_TOL * (1.0 + a.abs().max(b.abs()));
    for m in 0..spec.subchannels().len() {
        let (a, b) = (spec.alpha(m, 0, 1), spec.alpha(m, 1, 0));
        if !close(a, b) {
            return Err(SymmetricError::NotSymmetric {
                m,
                what: "cross gains",
                a,
                b,
            });
        }
        let (na, nb) = (spec.noise(m, 0), spec.noise(m, 1));
        if !close(na, nb) {
            return Err(SymmetricError::NotSymmetric {
                m,
                what: "noise PSDs",
                a: na,
                b: nb,
            });
        }
    }
    let w = spec.weights();
    if !close(w[0], w[1]) {
        return Err(SymmetricError::UnequalWeights { a: w[0], b: w[1] });
    }
    Ok(())
}

/// Per-sub-channel state for the price search.
struct BandEnvelope {
    envelope: SymmetricEnvelope,
    bandwidth: f64,
    noise: f64,
}

impl BandEnvelope {
    /// Normalized sum PSD maximizing `r*(q) - tau q` for price `tau > 0`.
    /// On the chord the maximizer is the whole segment; this returns its
    /// lower end (the sharing tangent power).
    fn best_response(&self, tau: f64) -> f64 {
        if tau >= 1.0 {
            return 0.0;
        }
        let alpha = self.envelope.alpha();
        match self.envelope.tangency() {
            None => 1.0 / tau - 1.0,
            Some(t) => {
                if tau > t.slope {
                    // Invert f*'(q) = tau: a(1+a) q^2 + 2(1+2a) q + 4 - 4/tau = 0.
                    let a = alpha * (1.0 + alpha);
                    let b = 1.0 + 2.0 * alpha;
                    let q = (-b + math::sqrt(b * b + a * (4.0 / tau - 4.0))) / a;
                    q.max(0.0)
                } else if tau == t.slope {
                    t.p_f
                } else {
                    1.0 / tau - 1.0
                }
            }
        }
    }
}

/// Relative tolerance for "this sub-channel's price sits on its chord slope"
/// when distributing leftover budget across flat envelope segments.
const CHORD_PRICE_TOL: f64 = 1e-9;

/// Budget feasibility target: leftover budget below `1e-8 * p` is accepted.
const BUDGET_FILL_TOL: f64 = 1e-8;

/// Globally optimal symmetric solve of a frequency-selective two-user
/// channel under a *sum*-power budget: every sub-channel must be symmetric
/// (equal cross gains, equal noise) and the two user weights equal. The
/// spec's per-user budgets are not consulted — symmetry makes the sum-power
/// and equal-individual-budget problems equivalent, and the constructed
/// allocation gives each user exactly `sum_power / 2`.
///
/// Each sub-channel `m` contributes `b_m * r*_m(q_m)` where `q_m` is its
/// noise-normalized sum PSD and `r*_m` its flat envelope; the budget couples
/// them through `sum_m b_m n_m q_m <= sum_power`. A bisection on the common
/// power price finds the optimum; sub-channels whose price lands exactly on
/// their chord absorb the remaining budget by sliding along the chord (their
/// in-band mixture weight does the interpolation).
pub fn solve_symmetric_selective(
    spec: &ChannelSpec,
    sum_power: f64,
) -> Result<OptimizationResult, SymmetricError> {
    require_symmetric(spec)?;
    if !(sum_power >= 0.0) || !sum_power.is_finite() {
        return Err(SymmetricError::BadPower { p: sum_power });
    }
    let p = sum_power;
    let weight = spec.weights()[0];

    let mut bands = Vec::with_capacity(spec.subchannels().len());
    let mut strong = Vec::new();
    for (m, sc) in spec.subchannels().iter().enumerate() {
        let alpha = spec.alpha(m, 1, 0);
        if alpha >= SHARING_GAIN_LIMIT {
            strong.push(m);
        }
        bands.push(BandEnvelope {
            envelope: SymmetricEnvelope::new(alpha)?,
            bandwidth: sc.bandwidth,
            noise: spec.noise(m, 0),
        });
    }

    let spend = |nu: f64, q_out: &mut Vec<f64>| -> f64 {
        q_out.clear();
        let mut total = 0.0;
        for band in &bands {
            let q = band.best_response(nu * band.noise);
            q_out.push(q);
            total += band.bandwidth * band.noise * q;
        }
        total
    };

    let mut q = Vec::new();
    let mut iterations = 0usize;
    let mut nu = bands
        .iter()
        .map(|b| 1.0 / b.noise)
        .fold(f64::NEG_INFINITY, f64::max);

    if p > 0.0 {
        // Bracket the price: nu_hi zeroes all PSDs, nu_lo overspends.
        let nu_hi = nu;
        let mut nu_lo = nu_hi;
        while spend(nu_lo, &mut q) < p {
            nu_lo *= 0.5;
            iterations += 1;
            if iterations > 4096 {
                return Err(SymmetricError::BudgetNotMet {
                    residual: p - spend(nu_lo, &mut q),
                    iterations,
                });
            }
        }
        let (mut lo, mut hi) = (nu_lo, nu_hi);
        // Price is monotone: spend(lo) >= p >= spend(hi). Bisect to ulps and
        // keep the feasible (underspending) side; if the crossing sits on a
        // chord discontinuity, the fill below slides along the chord.
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            iterations += 1;
            if spend(mid, &mut q) >= p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        nu = hi;
    }

    let mut total = spend(nu, &mut q);

    // Distribute any leftover along chord segments: sub-channels priced on
    // their chord can move from the sharing tangent toward the FDMA tangent
    // without changing optimality.
    let mut missing = p - total;
    if missing > 0.0 {
        let mut chord_bands = 0usize;
        for (idx, band) in bands.iter().enumerate() {
            if missing <= 0.0 {
                break;
            }
            let Some(t) = band.envelope.tangency() else {
                continue;
            };
            let tau = nu * band.noise;
            if (tau - t.slope).abs() > CHORD_PRICE_TOL * t.slope {
                continue;
            }
            chord_bands += 1;
            let headroom = band.bandwidth * band.noise * (t.p_h - q[idx]);
            let take = missing.min(headroom);
            q[idx] += take / (band.bandwidth * band.noise);
            missing -= take;
        }
        let _ = chord_bands;
    }
    total = q
        .iter()
        .zip(&bands)
        .map(|(qi, band)| band.bandwidth * band.noise * qi)
        .sum();
    missing = p - total;
    if missing > BUDGET_FILL_TOL * p.max(1.0) {
        return Err(SymmetricError::BudgetNotMet {
            residual: missing,
            iterations,
        });
    }

    // Assemble the allocation band by band.
    let edges = spec.band_edges();
    let mut pieces = Vec::new();
    let mut value = 0.0;
    for (idx, band) in bands.iter().enumerate() {
        value += band.bandwidth * band.envelope.value(q[idx])?.value;
        pieces.extend(
            band.envelope
                .band_pieces(q[idx], edges[idx], edges[idx + 1], band.noise)?,
        );
    }
    let value = weight * value;
    let allocation = SpectrumAllocation::new(pieces).expect("band pieces tile the unit band");
    let rates = spec
        .total_rates(&allocation)
        .expect("assembled allocation is integrable");
    let consumed = allocation.consumed_power();

    // Dual bound at the reported price: sum_m b_m max_q [r*(q) - nu n q] + nu p.
    let mut dual = nu * p;
    for band in &bands {
        let q_best = band.best_response(nu * band.noise);
        let tilted = band.envelope.value(q_best)?.value - nu * band.noise * q_best;
        dual += band.bandwidth * tilted;
    }
    let dual = weight * dual;

    let primal_residual = (value - rates.weighted_sum(spec.weights())).abs();
    let chord_count = bands
        .iter()
        .filter(|band| {
            band.envelope.tangency().is_some_and(|t| {
                let tau = nu * band.noise;
                (tau - t.slope).abs() <= CHORD_PRICE_TOL * t.slope
            })
        })
        .count();

    Ok(OptimizationResult {
        value,
        rates,
        dual_prices: vec![nu, nu],
        dual_gap_at_prices: dual - value,
        diagnostics: SolverDiagnostics {
            iterations,
            primal_residual,
            feasibility_residual: consumed
                .iter()
                .map(|used| used - 0.5 * p)
                .fold(f64::NEG_INFINITY, f64::max),
            complementary_slackness: nu * (p - total),
            degenerate: chord_count >= 2,
            strong_interference_subchannels: strong,
        },
        consumed_power: consumed,
        allocation,
    })
}
