//! Weighted sum-rate maximization over hull functions (exact LP) and the
//! shared solver result types.
//!
//! The continuous problem — maximize the bandwidth-weighted sum of
//! per-sub-channel envelope values subject to per-user power budgets — is
//! solved exactly on the grid as a linear program over convex-combination
//! weights: one weight per (sub-channel, lattice point) pair, a budget row
//! per user, and a convexity row per sub-channel. Basic feasible solutions
//! automatically place at most K+1 positive weights in any sub-channel, so
//! the reconstructed allocation is piecewise flat with at most K+1 pieces
//! per sub-channel. The LP duals on the budget rows are the power prices;
//! [`dual_value`] evaluates the Lagrangian bound at any price vector,
//! certifying (near-)zero duality gap despite the non-concave rate
//! functions.

use alloc::vec;
use alloc::vec::Vec;
use core::borrow::Borrow;
use thiserror::Error;

use crate::channel::{AllocationError, ChannelSpec, Piece, RateVector, SpectrumAllocation};
use crate::envelope::{
    build_hull, CaratheodoryDecomposition, EnvelopeError, EnvelopePoint, GridConfig, HullFunction,
};
use crate::fdma::STRONG_INTERFERENCE_THRESHOLD;
use crate::simplex::{self, Constraint, ConstraintKind, SimplexError};

/// Outcome of a spectrum optimization: the certified value, an allocation
/// achieving it, and enough dual information to audit optimality.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OptimizationResult {
    /// Optimal weighted sum rate (the solver objective, nats).
    pub value: f64,
    /// Piecewise-flat allocation achieving `value`.
    pub allocation: SpectrumAllocation,
    /// Integrated per-user rates of `allocation`.
    pub rates: RateVector,
    /// Power spent per user by `allocation`.
    pub consumed_power: Vec<f64>,
    /// Shadow price per user budget (nats per unit power).
    pub dual_prices: Vec<f64>,
    /// Dual bound minus primal value evaluated at `dual_prices` (a
    /// certificate: nonnegative up to rounding, and ~0 at an exact optimum).
    pub dual_gap_at_prices: f64,
    pub diagnostics: SolverDiagnostics,
}

/// Numerical audit trail of a solve.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SolverDiagnostics {
    /// Pivot or bisection iterations spent.
    pub iterations: usize,
    /// |objective - weighted rates of the reconstructed allocation|.
    pub primal_residual: f64,
    /// Worst budget overdraw `consumed_i - budget_i` (negative means slack).
    pub feasibility_residual: f64,
    /// `sum_i price_i * (budget_i - consumed_i)`; ~0 when prices and slacks
    /// are complementary.
    pub complementary_slackness: f64,
    /// True when the optimum is non-unique (alternative optimal bases or
    /// several sub-channels parked on a flat envelope segment); the reported
    /// solution is then the solver's deterministic pick.
    pub degenerate: bool,
    /// Sub-channels whose cross gains are all at least 1/2, where the
    /// envelope is the pure-FDMA curve.
    pub strong_interference_subchannels: Vec<usize>,
}

/// Knobs for [`solve`]. The pivot rule is fixed (deterministic); the only
/// tunable is the weight floor below which a convex-combination weight is
/// treated as exactly zero when extracting supports.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct SolverConfig {
    pub weight_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            weight_floor: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizerError {
    #[error("expected one hull per sub-channel ({expected}), got {got}")]
    HullCount { expected: usize, got: usize },
    #[error("hull at position {index} was built for sub-channel {built_for}")]
    HullMismatch { index: usize, built_for: usize },
    #[error("prices must be nonnegative and finite, one per user")]
    BadPrices,
    #[error("power program infeasible (residual {residual:.3e})")]
    LpInfeasible { residual: f64 },
    #[error("power program unbounded")]
    LpUnbounded,
    #[error("power program failed: {0}")]
    LpFailed(&'static str),
    #[error("bad decomposition: {0}")]
    BadDecomposition(&'static str),
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
}

impl From<SimplexError> for OptimizerError {
    fn from(e: SimplexError) -> Self {
        match e {
            SimplexError::Infeasible { residual } => OptimizerError::LpInfeasible { residual },
            SimplexError::Unbounded { .. } => OptimizerError::LpUnbounded,
            SimplexError::BadInput(s) => OptimizerError::LpFailed(s),
            SimplexError::IterationLimit(_) => OptimizerError::LpFailed("iteration limit"),
        }
    }
}

/// Builds one hull per sub-channel; `grids[m]` applies to sub-channel `m`.
pub fn build_hulls(
    spec: &ChannelSpec,
    grids: &[GridConfig],
) -> Result<Vec<HullFunction>, EnvelopeError> {
    if grids.len() != spec.subchannels().len() {
        return Err(EnvelopeError::BadGrid("one grid per sub-channel required"));
    }
    grids
        .iter()
        .enumerate()
        .map(|(m, g)| build_hull(spec, m, g))
        .collect()
}

/// Per-channel hull store: hulls depend only on the channel parameters and
/// the grid, never on the budgets, so re-solving with new budgets reuses
/// them. Exclusive (`&mut`) access makes cache lookups race-free.
#[derive(Debug, Default)]
pub struct HullCache {
    entries: Vec<(usize, GridConfig, HullFunction)>,
}

impl HullCache {
    pub fn new() -> Self {
        HullCache::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The hull of sub-channel `m` on `grid`, building it on first use.
    pub fn get_or_build(
        &mut self,
        spec: &ChannelSpec,
        m: usize,
        grid: &GridConfig,
    ) -> Result<&HullFunction, EnvelopeError> {
        if let Some(pos) = self
            .entries
            .iter()
            .position(|(em, eg, _)| *em == m && eg == grid)
        {
            return Ok(&self.entries[pos].2);
        }
        let hull = build_hull(spec, m, grid)?;
        self.entries.push((m, grid.clone(), hull));
        Ok(&self.entries.last().expect("just pushed").2)
    }

    /// Builds any missing hulls for `grids[m]` on sub-channel `m`.
    pub fn ensure(
        &mut self,
        spec: &ChannelSpec,
        grids: &[GridConfig],
    ) -> Result<(), EnvelopeError> {
        if grids.len() != spec.subchannels().len() {
            return Err(EnvelopeError::BadGrid("one grid per sub-channel required"));
        }
        for (m, grid) in grids.iter().enumerate() {
            self.get_or_build(spec, m, grid)?;
        }
        Ok(())
    }

    /// Cached hulls in sub-channel order, or `None` when any is missing
    /// (call [`HullCache::ensure`] first).
    pub fn hulls_for(&self, grids: &[GridConfig]) -> Option<Vec<&HullFunction>> {
        grids
            .iter()
            .enumerate()
            .map(|(m, grid)| {
                self.entries
                    .iter()
                    .find(|(em, eg, _)| *em == m && eg == grid)
                    .map(|(_, _, h)| h)
            })
            .collect()
    }
}

fn check_hulls<H: Borrow<HullFunction>>(
    spec: &ChannelSpec,
    hulls: &[H],
) -> Result<(), OptimizerError> {
    let m_count = spec.subchannels().len();
    if hulls.len() != m_count {
        return Err(OptimizerError::HullCount {
            expected: m_count,
            got: hulls.len(),
        });
    }
    for (index, hull) in hulls.iter().enumerate() {
        let hull = hull.borrow();
        if hull.subchannel() != index {
            return Err(OptimizerError::HullMismatch {
                index,
                built_for: hull.subchannel(),
            });
        }
        if hull.breakpoints().len() != spec.users() {
            return Err(OptimizerError::LpFailed("hull axis count mismatch"));
        }
    }
    Ok(())
}

/// Sub-channels where every cross-gain pair is at least 1/2.
fn strong_subchannels(spec: &ChannelSpec) -> Vec<usize> {
    let k = spec.users();
    (0..spec.subchannels().len())
        .filter(|&m| {
            k > 1
                && (0..k).all(|j| {
                    (0..k).all(|i| i == j || spec.alpha(m, j, i) >= STRONG_INTERFERENCE_THRESHOLD)
                })
        })
        .collect()
}

/// Globally maximizes the bandwidth-weighted envelope sum under the per-user
/// power budgets and reconstructs a piecewise-flat allocation achieving it.
///
/// The linear program is exact on the grid: its value equals the best
/// grid-restricted spectrum allocation, and the emitted allocation attains
/// it (no relaxation slack). Budgets enter only here — hulls can be reused
/// across solves via [`HullCache`].
pub fn solve<H: Borrow<HullFunction>>(
    spec: &ChannelSpec,
    hulls: &[H],
    config: &SolverConfig,
) -> Result<OptimizationResult, OptimizerError> {
    check_hulls(spec, hulls)?;
    if !(config.weight_floor >= 0.0 && config.weight_floor < 1.0) {
        return Err(OptimizerError::LpFailed("weight floor must be in [0, 1)"));
    }
    let k = spec.users();
    let m_count = spec.subchannels().len();

    let mut offsets = Vec::with_capacity(m_count);
    let mut total_cols = 0usize;
    for hull in hulls {
        offsets.push(total_cols);
        total_cols += hull.borrow().grid_len();
    }

    // Objective: bandwidth-weighted raw rate of each lattice point. Raw (not
    // monotonized) values suffice: the budget rows are inequalities, so any
    // monotone-raised point is dominated by its witness, which costs less
    // power for the same value.
    let mut objective = vec![0.0f64; total_cols];
    for (m, hull) in hulls.iter().enumerate() {
        let hull = hull.borrow();
        let b = spec.subchannels()[m].bandwidth;
        for g in 0..hull.grid_len() {
            objective[offsets[m] + g] = b * hull.grid_raw(g);
        }
    }

    let mut constraints = Vec::with_capacity(k + m_count);
    for i in 0..k {
        let mut coeffs = vec![0.0f64; total_cols];
        for (m, hull) in hulls.iter().enumerate() {
            let hull = hull.borrow();
            let b = spec.subchannels()[m].bandwidth;
            for g in 0..hull.grid_len() {
                coeffs[offsets[m] + g] = b * hull.grid_psd(g)[i];
            }
        }
        constraints.push(Constraint {
            coeffs,
            kind: ConstraintKind::Le,
            rhs: spec.budgets()[i],
        });
    }
    for (m, hull) in hulls.iter().enumerate() {
        let mut coeffs = vec![0.0f64; total_cols];
        for g in 0..hull.borrow().grid_len() {
            coeffs[offsets[m] + g] = 1.0;
        }
        constraints.push(Constraint {
            coeffs,
            kind: ConstraintKind::Eq,
            rhs: 1.0,
        });
    }

    let sol = simplex::maximize(&objective, &constraints)?;

    // Support extraction: positive weights per sub-channel, renormalized to
    // an exact convex combination. A basic solution has at most K + M
    // positive weights total with at least one per convexity row, hence at
    // most K+1 in any single sub-channel.
    let mut decomps = Vec::with_capacity(m_count);
    for (m, hull) in hulls.iter().enumerate() {
        let hull = hull.borrow();
        let mut entries: Vec<(usize, f64)> = (0..hull.grid_len())
            .filter_map(|g| {
                let c = sol.x[offsets[m] + g];
                (c > config.weight_floor).then_some((g, c))
            })
            .collect();
        if entries.is_empty() {
            return Err(OptimizerError::LpFailed("empty sub-channel support"));
        }
        entries.sort_by_key(|e| e.0);
        let total: f64 = entries.iter().map(|e| e.1).sum();
        let weights: Vec<f64> = entries.iter().map(|&(_, c)| c / total).collect();
        let points: Vec<EnvelopePoint> = entries
            .iter()
            .map(|&(g, _)| EnvelopePoint {
                psd: hull.grid_psd(g),
                value: hull.grid_raw(g),
            })
            .collect();
        let grid_psd: Vec<Vec<f64>> = entries.iter().map(|&(g, _)| hull.grid_psd(g)).collect();
        decomps.push(CaratheodoryDecomposition {
            weights,
            points,
            grid_psd,
        });
    }

    let allocation = reconstruct_allocation(spec, &decomps)?;
    let rates = spec.total_rates(&allocation)?;
    let consumed = allocation.consumed_power();
    let value = sol.objective;

    // Budget-row duals are the prices; clamp pivot dust to the nonnegative
    // orthant the theory promises.
    let mut prices: Vec<f64> = sol.duals[..k].to_vec();
    for price in prices.iter_mut() {
        debug_assert!(*price > -1e-6, "budget dual fell below zero: {price}");
        if *price < 0.0 {
            *price = 0.0;
        }
    }

    let dual = dual_value(spec, hulls, &prices)?;
    let primal_residual = (value - rates.weighted_sum(spec.weights())).abs();
    let complementary_slackness = prices
        .iter()
        .zip(consumed.iter().zip(spec.budgets()))
        .map(|(price, (used, cap))| price * (cap - used))
        .sum();

    Ok(OptimizationResult {
        value,
        rates,
        consumed_power: consumed.clone(),
        dual_prices: prices,
        dual_gap_at_prices: dual.value - value,
        diagnostics: SolverDiagnostics {
            iterations: sol.iterations,
            primal_residual,
            feasibility_residual: allocation.budget_excess(spec.budgets()),
            complementary_slackness,
            degenerate: sol.alternate_optima,
            strong_interference_subchannels: strong_subchannels(spec),
        },
        allocation,
    })
}

/// Lagrangian dual bound at a price vector.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct DualReport {
    /// `g(prices) = sum_m b_m max_P [R_m(P) - prices . P] + prices . budgets`.
    pub value: f64,
    /// Per-sub-channel maximizer of the tilted rate (raw lattice point).
    pub supports: Vec<EnvelopePoint>,
    /// Per-sub-channel maximal tilted value `R_m(P*) - prices . P*`.
    pub tilted: Vec<f64>,
}

/// Evaluates the Lagrangian dual `g` at `prices`: the per-sub-channel price
/// decoupling makes the inner maximization pointwise over the grid. The raw
/// and envelope routes provably share these tilted maxima; both are computed
/// and cross-checked.
pub fn dual_value<H: Borrow<HullFunction>>(
    spec: &ChannelSpec,
    hulls: &[H],
    prices: &[f64],
) -> Result<DualReport, OptimizerError> {
    check_hulls(spec, hulls)?;
    if prices.len() != spec.users() || prices.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return Err(OptimizerError::BadPrices);
    }
    let mut value = prices
        .iter()
        .zip(spec.budgets())
        .map(|(l, p)| l * p)
        .sum::<f64>();
    let mut supports = Vec::with_capacity(hulls.len());
    let mut tilted = Vec::with_capacity(hulls.len());
    for (m, hull) in hulls.iter().enumerate() {
        let hull = hull.borrow();
        let (g, best) = hull.price_maximum(prices);

        // Envelope route: same maximization over the monotonized values.
        // Monotone raises move value from cheaper points, so under
        // nonnegative prices neither route can out-tilt the other.
        let mut best_mono = f64::NEG_INFINITY;
        for h in 0..hull.grid_len() {
            let p = hull.grid_psd(h);
            let v = hull.grid_monotone(h) - prices.iter().zip(&p).map(|(l, x)| l * x).sum::<f64>();
            if v > best_mono {
                best_mono = v;
            }
        }
        debug_assert!(
            (best - best_mono).abs() <= 1e-12 * (1.0 + best.abs()),
            "raw and envelope tilted maxima diverged: {best} vs {best_mono}"
        );

        value += spec.subchannels()[m].bandwidth * best;
        supports.push(EnvelopePoint {
            psd: hull.grid_psd(g),
            value: hull.grid_raw(g),
        });
        tilted.push(best);
    }
    Ok(DualReport {
        value,
        supports,
        tilted,
    })
}

/// Lays the per-sub-channel decompositions out as contiguous flat pieces:
/// within sub-channel `m`, each decomposition point becomes a piece of width
/// `b_m * weight`, ordered by descending weight (ties keep the
/// decomposition's point order). The final piece of each sub-channel ends
/// exactly at the sub-channel edge so the band stays watertight.
pub fn reconstruct_allocation(
    spec: &ChannelSpec,
    decompositions: &[CaratheodoryDecomposition],
) -> Result<SpectrumAllocation, OptimizerError> {
    let m_count = spec.subchannels().len();
    if decompositions.len() != m_count {
        return Err(OptimizerError::BadDecomposition(
            "one decomposition per sub-channel required",
        ));
    }
    let edges = spec.band_edges();
    let mut pieces = Vec::new();
    for (m, d) in decompositions.iter().enumerate() {
        if d.weights.is_empty() || d.weights.len() != d.grid_psd.len() {
            return Err(OptimizerError::BadDecomposition(
                "weights and points must be non-empty and aligned",
            ));
        }
        if d.weights.iter().any(|&c| !(c >= 0.0) || !c.is_finite()) {
            return Err(OptimizerError::BadDecomposition("negative weight"));
        }
        let total: f64 = d.weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(OptimizerError::BadDecomposition("weights must sum to 1"));
        }
        if d.grid_psd.iter().any(|p| p.len() != spec.users()) {
            return Err(OptimizerError::BadDecomposition("PSD length mismatch"));
        }
        let mut order: Vec<usize> = (0..d.weights.len()).collect();
        order.sort_by(|&a, &b| {
            d.weights[b]
                .partial_cmp(&d.weights[a])
                .expect("finite weights")
                .then(a.cmp(&b))
        });
        let band = edges[m + 1] - edges[m];
        let mut cursor = edges[m];
        for (pos, &idx) in order.iter().enumerate() {
            let start = cursor;
            let end = if pos + 1 == order.len() {
                edges[m + 1]
            } else {
                cursor + band * (d.weights[idx] / total)
            };
            if end > start {
                pieces.push(Piece {
                    start,
                    end,
                    psd: d.grid_psd[idx].clone(),
                });
            }
            cursor = end;
        }
    }
    Ok(SpectrumAllocation::new(pieces)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Subchannel;
    use crate::symmetric::{solve_tangency, SymmetricEnvelope};

    fn single_user_spec(budget: f64) -> ChannelSpec {
        ChannelSpec::new(
            1,
            vec![Subchannel {
                bandwidth: 1.0,
                alpha: vec![1.0],
                noise: vec![1.0],
            }],
            vec![1.0],
            vec![budget],
        )
        .expect("valid spec")
    }

    fn symmetric_spec(alpha: f64, budget_each: f64) -> ChannelSpec {
        ChannelSpec::new(
            2,
            vec![Subchannel {
                bandwidth: 1.0,
                alpha: vec![1.0, alpha, alpha, 1.0],
                noise: vec![1.0, 1.0],
            }],
            vec![1.0, 1.0],
            vec![budget_each; 2],
        )
        .expect("valid spec")
    }

    fn grid(axes: Vec<Vec<f64>>) -> GridConfig {
        GridConfig::new(axes).expect("valid grid")
    }

    #[test]
    fn single_user_band_fills_the_budget_to_capacity() {
        let p = 6.0;
        let spec = single_user_spec(p);
        let g = grid(vec![vec![0.0, 1.5, 3.0, 6.0, 12.0]]);
        let hulls = build_hulls(&spec, &[g]).expect("hulls");
        let result = solve(&spec, &hulls, &SolverConfig::default()).expect("solves");
        let capacity = (1.0 + p).ln();
        assert!((result.value - capacity).abs() < 1e-9, "{}", result.value);
        assert_eq!(result.allocation.pieces.len(), 1);
        assert!((result.allocation.pieces[0].psd[0] - p).abs() < 1e-9);
        assert!((result.consumed_power[0] - p).abs() < 1e-9);
        assert!(result.dual_prices[0] > 0.0);
        assert!(result.dual_gap_at_prices.abs() < 1e-9);
        assert!(result.diagnostics.feasibility_residual <= 1e-9);
        assert!(result.diagnostics.primal_residual < 1e-9);
    }

    #[test]
    fn symmetric_mixture_instance_matches_the_closed_form() {
        let alpha = 0.1;
        let t = solve_tangency(alpha).expect("weak interference");
        let envelope = SymmetricEnvelope::new(alpha).expect("envelope");
        let p = 80.0;
        let spec = symmetric_spec(alpha, p / 2.0);
        let mut axis = vec![0.0, 10.0, 20.0, t.p_f / 2.0, 40.0, 60.0, 80.0, t.p_h];
        axis.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let g = grid(vec![axis.clone(), axis]);
        let hulls = build_hulls(&spec, &[g]).expect("hulls");
        let result = solve(&spec, &hulls, &SolverConfig::default()).expect("solves");

        let expect = envelope.value(p).expect("valid power").value;
        assert!(
            (result.value - expect).abs() < 1e-6,
            "solver {} vs closed form {}",
            result.value,
            expect
        );
        assert!(result.allocation.pieces.len() <= 3);
        assert!(result.diagnostics.feasibility_residual <= 1e-8 * p);
        // Equal budgets, symmetric channel: rates agree.
        assert!((result.rates.rates[0] - result.rates.rates[1]).abs() < 1e-6);
        // Pieces partition the band exactly.
        let total_width: f64 = result.allocation.pieces.iter().map(|q| q.width()).sum();
        assert!((total_width - 1.0).abs() < 1e-12);
        // Prices are complementary with the binding budgets.
        assert!(result.diagnostics.complementary_slackness.abs() < 1e-6 * (1.0 + p));
        assert!(result.dual_gap_at_prices.abs() < 1e-6 * (1.0 + result.value));
    }

    #[test]
    fn zero_weight_user_receives_no_power() {
        let spec = ChannelSpec::new(
            2,
            vec![Subchannel {
                bandwidth: 1.0,
                alpha: vec![1.0, 0.4, 0.4, 1.0],
                noise: vec![1.0, 1.0],
            }],
            vec![1.0, 0.0],
            vec![8.0, 8.0],
        )
        .expect("valid spec");
        let grids = vec![GridConfig::automatic(&spec, Some(9)).expect("grid")];
        let hulls = build_hulls(&spec, &grids).expect("hulls");
        let result = solve(&spec, &hulls, &SolverConfig::default()).expect("solves");
        assert!(result.consumed_power[1].abs() < 1e-12);
        // User 0 then sees a clean channel; its rate is concave, so flat
        // transmission at the budget PSD is optimal.
        assert!((result.value - (1.0 + 8.0f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn multi_subchannel_solve_respects_budgets_and_sparsity() {
        // Two sub-channels with different coupling; user budgets shared.
        let spec = ChannelSpec::new(
            2,
            vec![
                Subchannel {
                    bandwidth: 0.4,
                    alpha: vec![1.0, 0.1, 0.1, 1.0],
                    noise: vec![1.0, 1.0],
                },
                Subchannel {
                    bandwidth: 0.6,
                    alpha: vec![1.0, 0.9, 0.9, 1.0],
                    noise: vec![0.5, 2.0],
                },
            ],
            vec![1.0, 1.0],
            vec![5.0, 7.0],
        )
        .expect("valid spec");
        let grids: Vec<GridConfig> = (0..2)
            .map(|_| GridConfig::automatic(&spec, Some(9)).expect("grid"))
            .collect();
        let hulls = build_hulls(&spec, &grids).expect("hulls");
        let result = solve(&spec, &hulls, &SolverConfig::default()).expect("solves");

        assert!(result.diagnostics.feasibility_residual <= 1e-8 * 7.0);
        assert!(result.diagnostics.primal_residual < 1e-9);
        assert!(result.dual_prices.iter().all(|&l| l >= 0.0));
        assert!(result.dual_gap_at_prices >= -1e-9);
        assert_eq!(result.diagnostics.strong_interference_subchannels, vec![1]);
        // Sparsity: at most K+1 = 3 pieces inside each sub-channel.
        let edges = spec.band_edges();
        for m in 0..2 {
            let count = result
                .allocation
                .pieces
                .iter()
                .filter(|q| q.start >= edges[m] - 1e-12 && q.end <= edges[m + 1] + 1e-12)
                .count();
            assert!(count <= 3, "sub-channel {m} has {count} pieces");
        }
        // The allocation achieves the LP value.
        let weighted = result.rates.weighted_sum(spec.weights());
        assert!((weighted - result.value).abs() < 1e-9);
    }

    #[test]
    fn dual_value_handles_trivial_price_regimes() {
        let spec = symmetric_spec(0.3, 4.0);
        let g = grid(vec![vec![0.0, 2.0, 4.0, 8.0], vec![0.0, 2.0, 4.0, 8.0]]);
        let hulls = build_hulls(&spec, &[g]).expect("hulls");

        // Free power: the bound is the unconstrained grid maximum.
        let free = dual_value(&spec, &hulls, &[0.0, 0.0]).expect("valid prices");
        let mut best = f64::NEG_INFINITY;
        for h in 0..hulls[0].grid_len() {
            best = best.max(hulls[0].grid_raw(h));
        }
        assert!((free.value - best).abs() < 1e-12);

        // Prohibitive power: the inner maximizer is the origin and only the
        // budget term survives.
        let lambda = 1e6;
        let steep = dual_value(&spec, &hulls, &[lambda, lambda]).expect("valid prices");
        assert!((steep.value - lambda * 8.0).abs() < 1e-9 * lambda * 8.0);
        assert!(steep
            .supports
            .iter()
            .all(|s| s.psd.iter().all(|&x| x == 0.0)));

        assert!(matches!(
            dual_value(&spec, &hulls, &[-0.1, 0.0]),
            Err(OptimizerError::BadPrices)
        ));
        assert!(matches!(
            dual_value(&spec, &hulls, &[0.1]),
            Err(OptimizerError::BadPrices)
        ));
    }

    #[test]
    fn dual_bound_dominates_the_primal_value_at_any_price() {
        let spec = symmetric_spec(0.8, 5.0);
        let g = GridConfig::automatic(&spec, Some(9)).expect("grid");
        let hulls = build_hulls(&spec, &[g]).expect("hulls");
        let result = solve(&spec, &hulls, &SolverConfig::default()).expect("solves");
        for lambda in [
            [0.0, 0.0],
            [0.01, 0.02],
            [0.1, 0.1],
            [1.0, 0.5],
            [10.0, 10.0],
        ] {
            let d = dual_value(&spec, &hulls, &lambda).expect("valid prices");
            assert!(
                d.value >= result.value - 1e-9,
                "g({lambda:?}) = {} below primal {}",
                d.value,
                result.value
            );
        }
        assert!(result.dual_gap_at_prices <= 1e-6 * (1.0 + result.value));
        assert!(result.dual_gap_at_prices >= -1e-9);
    }

    #[test]
    fn reconstruction_orders_pieces_and_partitions_exactly() {
        let spec = ChannelSpec::new(
            1,
            vec![
                Subchannel {
                    bandwidth: 0.5,
                    alpha: vec![1.0],
                    noise: vec![1.0],
                },
                Subchannel {
                    bandwidth: 0.5,
                    alpha: vec![1.0],
                    noise: vec![1.0],
                },
            ],
            vec![1.0],
            vec![4.0],
        )
        .expect("valid spec");
        let d0 = CaratheodoryDecomposition {
            weights: vec![0.25, 0.75],
            points: vec![
                EnvelopePoint {
                    psd: vec![0.0],
                    value: 0.0,
                },
                EnvelopePoint {
                    psd: vec![4.0],
                    value: (5.0f64).ln(),
                },
            ],
            grid_psd: vec![vec![0.0], vec![4.0]],
        };
        let d1 = CaratheodoryDecomposition {
            weights: vec![1.0],
            points: vec![EnvelopePoint {
                psd: vec![4.0],
                value: (5.0f64).ln(),
            }],
            grid_psd: vec![vec![4.0]],
        };
        let alloc = reconstruct_allocation(&spec, &[d0.clone(), d1]).expect("valid");
        // Descending weight inside sub-channel 0: the 0.75-weight piece
        // comes first.
        assert_eq!(alloc.pieces.len(), 3);
        assert!((alloc.pieces[0].psd[0] - 4.0).abs() < 1e-12);
        assert!((alloc.pieces[0].end - 0.375).abs() < 1e-12);
        assert!((alloc.pieces[1].psd[0] - 0.0).abs() < 1e-12);
        assert!((alloc.pieces[1].end - 0.5).abs() < 1e-12);
        assert!((alloc.pieces[2].end - 1.0).abs() < 1e-12);

        // Weights that do not sum to 1 are rejected.
        let bad = CaratheodoryDecomposition {
            weights: vec![0.5, 0.4],
            points: d0.points.clone(),
            grid_psd: d0.grid_psd.clone(),
        };
        assert!(matches!(
            reconstruct_allocation(&spec, &[bad.clone(), bad]),
            Err(OptimizerError::BadDecomposition(_))
        ));
    }

    #[test]
    fn hull_cache_reuses_builds_across_budget_changes() {
        let spec = symmetric_spec(0.2, 5.0);
        let g = GridConfig::automatic(&spec, Some(7)).expect("grid");
        let grids = [g.clone()];
        let mut cache = HullCache::new();
        cache.ensure(&spec, &grids).expect("builds");
        let hulls = cache.hulls_for(&grids).expect("ensured");
        let r1 = solve(&spec, &hulls, &SolverConfig::default()).expect("solves");
        assert!(r1.value > 0.0);
        assert_eq!(cache.len(), 1);

        // Same channel, tighter budgets: the hull is reused (the grid box
        // depends on the original spec, which still covers the new budgets).
        let tighter = ChannelSpec::new(
            2,
            spec.subchannels().to_vec(),
            spec.weights().to_vec(),
            vec![2.0, 2.0],
        )
        .expect("valid spec");
        cache.ensure(&tighter, &grids).expect("cached");
        assert_eq!(cache.len(), 1);
        let hulls = cache.hulls_for(&grids).expect("ensured");
        let r2 = solve(&tighter, &hulls, &SolverConfig::default()).expect("solves");
        assert!(r2.diagnostics.feasibility_residual <= 1e-8 * 2.0);

        // A different grid is a different cache entry.
        let refined = g.refined();
        cache
            .get_or_build(&spec, 0, &refined)
            .expect("builds refined hull");
        assert_eq!(cache.len(), 2);
    }

    #[test]
    fn splitting_a_flat_subchannel_leaves_the_value_unchanged() {
        let spec = symmetric_spec(0.1, 40.0);
        let g = GridConfig::automatic(&spec, Some(9)).expect("grid");
        let hulls = build_hulls(&spec, core::slice::from_ref(&g)).expect("hulls");
        let whole = solve(&spec, &hulls, &SolverConfig::default()).expect("solves");

        let halved = spec.refine(&[0.5]).expect("refines");
        assert_eq!(halved.subchannels().len(), 2);
        // Same channel parameters and the same grid in each half: averaging
        // the halves' mixtures maps any split solution back to a whole-band
        // one, so the optimum must not move.
        let grids = vec![g.clone(), g.clone()];
        let hulls2 = build_hulls(&halved, &grids).expect("hulls");
        let split = solve(&halved, &hulls2, &SolverConfig::default()).expect("solves");
        assert!(
            (whole.value - split.value).abs() <= 1e-9 * (1.0 + whole.value.abs()),
            "whole {} vs split {}",
            whole.value,
            split.value
        );
    }

    #[test]
    fn mismatched_hulls_are_rejected() {
        let spec = symmetric_spec(0.2, 5.0);
        let g = GridConfig::automatic(&spec, Some(7)).expect("grid");
        let hulls = build_hulls(&spec, &[g]).expect("hulls");
        let two_band = spec.refine(&[0.5]).expect("refines");
        assert!(matches!(
            solve(&two_band, &hulls, &SolverConfig::default()),
            Err(OptimizerError::HullCount {
                expected: 2,
                got: 1
            })
        ));
    }
}
