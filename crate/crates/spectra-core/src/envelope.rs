//! Concave envelope of the per-sub-channel weighted sum-rate.
//!
//! At a fixed sub-channel the weighted sum-rate `R(P)` of a flat PSD vector
//! `P` is generally non-concave (interference). Its concave envelope `R*` —
//! the smallest concave function dominating `R` on a power box — is what the
//! spectrum optimizer needs: any envelope value is achievable by splitting
//! the sub-channel into at most K+1 flat slices whose PSDs average to `P`
//! (Carathéodory), so concavifying in power costs nothing physically.
//!
//! The construction is grid-based. [`GridConfig`] lays per-user breakpoints
//! over `[0, U_i]`; [`build_hull`] evaluates `R` on the lattice, enforces
//! componentwise monotonicity by a running max over dominated points (the
//! witness map remembers which cheaper point achieves each raised value),
//! and computes upper convex-hull facets of the lifted data. Evaluation is
//! the minimum over facet hyperplanes; [`HullFunction::decompose`] returns
//! the mixing weights, falling back to a deterministic linear program when
//! the active facet is degenerate.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::channel::{ChannelError, ChannelSpec};
use crate::hull::{self, HullError};
use crate::simplex::{self, Constraint, ConstraintKind};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Hard cap on lattice size; build_hull refuses larger grids.
pub const GRID_POINT_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvelopeError {
    #[error("bad grid: {0}")]
    BadGrid(&'static str),
    #[error("grid has {points} points, exceeding the cap of {cap}")]
    GridTooLarge { points: usize, cap: usize },
    #[error("sub-channel index {m} out of range ({count} sub-channels)")]
    BadSubchannel { m: usize, count: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("PSD {value} on axis {axis} is outside the hull box [0, {upper}]; rebuild with a larger box")]
    OutsideBox { axis: usize, value: f64, upper: f64 },
    #[error("facet list was not built for {users} users (price-based path only)")]
    NoFacets { users: usize },
    #[error("no decomposition found at the queried PSD")]
    DecompositionFailed,
}

impl From<HullError> for EnvelopeError {
    fn from(e: HullError) -> Self {
        EnvelopeError::BadGrid(match e {
            HullError::BadDimension(_) => "unsupported hull dimension",
            HullError::TooFewPoints { .. } => "too few grid points to span the power space",
            HullError::DegenerateAxis { .. } => "grid axis does not vary",
            HullError::NonFinite => "non-finite grid value",
        })
    }
}

/// Per-user PSD breakpoints defining the evaluation lattice.
///
/// Every axis is ascending, starts at 0, and either is the single point
/// `[0]` (a user pinned to zero power) or has at least two breakpoints.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct GridConfig {
    breakpoints: Vec<Vec<f64>>,
}

impl GridConfig {
    pub fn new(breakpoints: Vec<Vec<f64>>) -> Result<Self, EnvelopeError> {
        if breakpoints.is_empty() {
            return Err(EnvelopeError::BadGrid("no axes"));
        }
        for axis in &breakpoints {
            if axis.is_empty() {
                return Err(EnvelopeError::BadGrid("empty axis"));
            }
            if axis[0] != 0.0 {
                return Err(EnvelopeError::BadGrid("axis must start at 0"));
            }
            if axis.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(EnvelopeError::BadGrid("non-finite or negative breakpoint"));
            }
            if axis.windows(2).any(|w| w[0] >= w[1]) {
                return Err(EnvelopeError::BadGrid(
                    "breakpoints must be strictly ascending",
                ));
            }
        }
        Ok(GridConfig { breakpoints })
    }

    /// Default grid for a channel: per D-class sizing, each transmitting
    /// user's axis covers `[0, 2 p_i / min_m b_m]` (a narrow active slice can
    /// run at PSD far above the budget average) with breakpoints mixing
    /// linear and logarithmic spacing. Zero-weight or zero-budget users get
    /// the pinned axis `[0]`: power can only ever hurt the others, so pinning
    /// is optimal and breaks degenerate ties toward zero power.
    pub fn automatic(
        spec: &ChannelSpec,
        points_per_axis: Option<usize>,
    ) -> Result<Self, EnvelopeError> {
        let k = spec.users();
        let n = points_per_axis.unwrap_or(match k {
            1 => 65,
            2 => 33,
            3 => 17,
            _ => 9,
        });
        if n < 2 {
            return Err(EnvelopeError::BadGrid("need at least 2 points per axis"));
        }
        let min_bandwidth = spec
            .subchannels()
            .iter()
            .map(|sc| sc.bandwidth)
            .fold(f64::INFINITY, f64::min);
        let mut axes = Vec::with_capacity(k);
        for i in 0..k {
            let budget = spec.budgets()[i];
            if spec.weights()[i] == 0.0 || budget == 0.0 {
                axes.push(vec![0.0]);
            } else {
                axes.push(axis_levels(2.0 * budget / min_bandwidth, n));
            }
        }
        GridConfig::new(axes)
    }

    /// A strict superset grid: the midpoint of every breakpoint interval is
    /// inserted on each axis. Refining can only raise the hull.
    pub fn refined(&self) -> Self {
        let breakpoints = self
            .breakpoints
            .iter()
            .map(|axis| {
                let mut out = Vec::with_capacity(axis.len() * 2 - 1);
                for w in axis.windows(2) {
                    out.push(w[0]);
                    out.push(0.5 * (w[0] + w[1]));
                }
                out.push(*axis.last().expect("axes are non-empty"));
                out
            })
            .collect();
        GridConfig { breakpoints }
    }

    pub fn breakpoints(&self) -> &[Vec<f64>] {
        &self.breakpoints
    }
}

/// Mixed linear + logarithmic breakpoints on `[0, u]`: the linear half
/// resolves the bulk of the box, the log half resolves the low-power region
/// where the rate curves bend fastest.
fn axis_levels(u: f64, n: usize) -> Vec<f64> {
    let n_log = (n - 1) / 2;
    let n_lin = (n - 1) - n_log;
    let mut v = Vec::with_capacity(n);
    v.push(0.0);
    for k in 1..=n_lin {
        v.push(u * k as f64 / n_lin as f64);
    }
    for j in 1..=n_log {
        // Exponents sweep (-3, 0): from u/1000 up to just under u.
        let t = j as f64 / (n_log as f64 + 1.0);
        v.push(u * crate::math::exp(core::f64::consts::LN_10 * (-3.0 * (1.0 - t))));
    }
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
    v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * u);
    v
}

/// A flat PSD vector with its (recomputable) weighted sum-rate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct EnvelopePoint {
    pub psd: Vec<f64>,
    pub value: f64,
}

/// One supporting hyperplane of the envelope: `R*(P) <= offset + gradient.P`
/// everywhere, with equality on the facet's vertex set (lattice indices).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct Facet {
    pub vertices: Vec<usize>,
    pub gradient: Vec<f64>,
    pub offset: f64,
}

/// Mixing weights expressing an envelope value as a convex combination of
/// at most K+1 flat operating points.
///
/// `grid_psd` recombines to the queried PSD exactly; `points` carries the
/// witness-mapped physical operating points (their values are recomputable
/// from their PSDs), which recombine to *at most* the queried PSD — strictly
/// less only where the envelope is saturated (raising power buys nothing).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CaratheodoryDecomposition {
    pub weights: Vec<f64>,
    pub points: Vec<EnvelopePoint>,
    pub grid_psd: Vec<Vec<f64>>,
}

impl CaratheodoryDecomposition {
    /// The convex combination of the lattice points (equals the query).
    pub fn recombined_grid_psd(&self) -> Vec<f64> {
        combine(&self.weights, &self.grid_psd)
    }

    /// The convex combination of the physical points (at most the query).
    pub fn recombined_psd(&self) -> Vec<f64> {
        let psds: Vec<Vec<f64>> = self.points.iter().map(|pt| pt.psd.clone()).collect();
        combine(&self.weights, &psds)
    }

    /// The convex combination of the point values (equals the envelope).
    pub fn value(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.points)
            .map(|(c, pt)| c * pt.value)
            .sum()
    }
}

fn combine(weights: &[f64], vectors: &[Vec<f64>]) -> Vec<f64> {
    let k = vectors.first().map_or(0, Vec::len);
    let mut out = vec![0.0; k];
    for (c, v) in weights.iter().zip(vectors) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

/// Weighted sum-rate density `sum_i w_i r_i(P)` on sub-channel `m`.
pub fn weighted_sum_rate(spec: &ChannelSpec, m: usize, psd: &[f64]) -> Result<f64, EnvelopeError> {
    validate_query(spec, m, psd)?;
    Ok(raw_weighted_rate(spec, m, psd))
}

fn raw_weighted_rate(spec: &ChannelSpec, m: usize, psd: &[f64]) -> f64 {
    let rates = spec.rate_density(m, psd);
    rates.iter().zip(spec.weights()).map(|(r, w)| r * w).sum()
}

fn validate_query(spec: &ChannelSpec, m: usize, psd: &[f64]) -> Result<(), EnvelopeError> {
    if m >= spec.subchannels().len() {
        return Err(EnvelopeError::BadSubchannel {
            m,
            count: spec.subchannels().len(),
        });
    }
    if psd.len() != spec.users() {
        return Err(EnvelopeError::BadGrid("PSD length must match user count"));
    }
    if psd.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(EnvelopeError::BadGrid("PSD must be nonnegative and finite"));
    }
    Ok(())
}

/// The concave envelope of one sub-channel's weighted sum-rate on a grid.
#[derive(Debug, Clone)]
pub struct HullFunction {
    subchannel: usize,
    breakpoints: Vec<Vec<f64>>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    /// Raw weighted sum-rates at the lattice points.
    raw: Vec<f64>,
    /// Componentwise-monotone extension (running max over dominated points).
    mono: Vec<f64>,
    /// For each lattice point, the dominated lattice point achieving `mono`.
    witness: Vec<usize>,
    /// Upper facets of the lifted monotone data; `None` above 3 users, where
    /// only the price-based grid path is materialized.
    facets: Option<Vec<Facet>>,
}

/// Builds the envelope of sub-channel `m` on the given grid: evaluates the
/// weighted sum-rate on the lattice, monotonizes it with witnesses, and (for
/// up to three users) extracts the upper hull facets of the lifted data.
pub fn build_hull(
    spec: &ChannelSpec,
    m: usize,
    grid: &GridConfig,
) -> Result<HullFunction, EnvelopeError> {
    if m >= spec.subchannels().len() {
        return Err(EnvelopeError::BadSubchannel {
            m,
            count: spec.subchannels().len(),
        });
    }
    let k = spec.users();
    if grid.breakpoints.len() != k {
        return Err(EnvelopeError::BadGrid(
            "one breakpoint axis per user required",
        ));
    }
    for axis in &grid.breakpoints {
        if axis.len() == 1 && axis[0] != 0.0 {
            return Err(EnvelopeError::BadGrid(
                "a single-point axis must be pinned at 0",
            ));
        }
    }
    let dims: Vec<usize> = grid.breakpoints.iter().map(Vec::len).collect();
    let total: usize = dims.iter().product();
    if total > GRID_POINT_CAP {
        return Err(EnvelopeError::GridTooLarge {
            points: total,
            cap: GRID_POINT_CAP,
        });
    }
    // Row-major strides, last axis fastest.
    let mut strides = vec![1usize; k];
    for a in (0..k.saturating_sub(1)).rev() {
        strides[a] = strides[a + 1] * dims[a + 1];
    }

    // Raw values over the lattice.
    let mut psd = vec![0.0f64; k];
    let mut raw = Vec::with_capacity(total);
    for g in 0..total {
        decode(g, &dims, &strides, &grid.breakpoints, &mut psd);
        raw.push(raw_weighted_rate(spec, m, &psd));
    }

    // Monotone extension: one ascending sweep per axis propagates the
    // running max (and its witness) over the full dominated cone.
    let mut mono = raw.clone();
    let mut witness: Vec<usize> = (0..total).collect();
    for a in 0..k {
        if dims[a] < 2 {
            continue;
        }
        for g in 0..total {
            let idx_a = (g / strides[a]) % dims[a];
            if idx_a == 0 {
                continue;
            }
            let pred = g - strides[a];
            if mono[pred] >= mono[g] {
                mono[g] = mono[pred];
                witness[g] = witness[pred];
            }
        }
    }

    // Reduce away pinned axes and lift the rest into the hull.
    let active: Vec<usize> = (0..k).filter(|&a| dims[a] > 1).collect();
    let facets = if active.is_empty() {
        // Single lattice point: the envelope is one constant plane.
        Some(vec![Facet {
            vertices: vec![0],
            gradient: vec![0.0; k],
            offset: mono[0],
        }])
    } else if active.len() <= 3 {
        let mut reduced = Vec::with_capacity(total);
        let mut full = vec![0.0f64; k];
        for g in 0..total {
            decode(g, &dims, &strides, &grid.breakpoints, &mut full);
            reduced.push(active.iter().map(|&a| full[a]).collect::<Vec<f64>>());
        }
        let raw_facets = hull::upper_facets(&reduced, &mono)?;
        let mut out = Vec::with_capacity(raw_facets.len());
        for f in raw_facets {
            let mut gradient = vec![0.0f64; k];
            for (pos, &a) in active.iter().enumerate() {
                gradient[a] = f.gradient[pos];
            }
            out.push(Facet {
                vertices: f.vertices,
                gradient,
                offset: f.offset,
            });
        }
        Some(out)
    } else {
        None
    };

    Ok(HullFunction {
        subchannel: m,
        breakpoints: grid.breakpoints.clone(),
        dims,
        strides,
        raw,
        mono,
        witness,
        facets,
    })
}

fn decode(g: usize, dims: &[usize], strides: &[usize], axes: &[Vec<f64>], out: &mut [f64]) {
    for a in 0..dims.len() {
        out[a] = axes[a][(g / strides[a]) % dims[a]];
    }
}

impl HullFunction {
    pub fn subchannel(&self) -> usize {
        self.subchannel
    }

    pub fn breakpoints(&self) -> &[Vec<f64>] {
        &self.breakpoints
    }

    /// Upper corner of the evaluation box (last breakpoint per axis).
    pub fn box_upper(&self) -> Vec<f64> {
        self.breakpoints
            .iter()
            .map(|axis| *axis.last().expect("axes are non-empty"))
            .collect()
    }

    pub fn facets(&self) -> Option<&[Facet]> {
        self.facets.as_deref()
    }

    /// Number of lattice points.
    pub fn grid_len(&self) -> usize {
        self.raw.len()
    }

    /// PSD vector of lattice point `g`.
    pub fn grid_psd(&self, g: usize) -> Vec<f64> {
        let mut out = vec![0.0f64; self.dims.len()];
        decode(g, &self.dims, &self.strides, &self.breakpoints, &mut out);
        out
    }

    /// Raw weighted sum-rate at lattice point `g`.
    pub fn grid_raw(&self, g: usize) -> f64 {
        self.raw[g]
    }

    /// Monotonized value at lattice point `g` (what the hull interpolates).
    pub fn grid_monotone(&self, g: usize) -> f64 {
        self.mono[g]
    }

    /// The distinct envelope vertices, witness-mapped to physical points.
    pub fn vertices(&self) -> Vec<EnvelopePoint> {
        let mut seen: Vec<usize> = self
            .facets
            .iter()
            .flatten()
            .flat_map(|f| f.vertices.iter().copied())
            .collect();
        seen.sort_unstable();
        seen.dedup();
        seen.into_iter().map(|g| self.witness_point(g)).collect()
    }

    fn witness_point(&self, g: usize) -> EnvelopePoint {
        let w = self.witness[g];
        EnvelopePoint {
            psd: self.grid_psd(w),
            value: self.mono[g],
        }
    }

    fn check_box(&self, psd: &[f64]) -> Result<(), EnvelopeError> {
        if psd.len() != self.dims.len() {
            return Err(EnvelopeError::BadGrid("PSD length must match user count"));
        }
        for (a, (&v, axis)) in psd.iter().zip(&self.breakpoints).enumerate() {
            let upper = *axis.last().expect("axes are non-empty");
            if !v.is_finite() || v < 0.0 || v > upper * (1.0 + 1e-12) + 1e-300 {
                return Err(EnvelopeError::OutsideBox {
                    axis: a,
                    value: v,
                    upper,
                });
            }
        }
        Ok(())
    }

    /// Envelope value at `psd`: the minimum over facet hyperplanes. Errors
    /// outside the box or when facets were not materialized.
    pub fn evaluate(&self, psd: &[f64]) -> Result<f64, EnvelopeError> {
        self.check_box(psd)?;
        let facets = self.facets.as_ref().ok_or(EnvelopeError::NoFacets {
            users: self.dims.len(),
        })?;
        let mut best = f64::INFINITY;
        for f in facets {
            let v = f.offset + dot(&f.gradient, psd);
            if v < best {
                best = v;
            }
        }
        if best.is_finite() {
            Ok(best)
        } else {
            Err(EnvelopeError::DecompositionFailed)
        }
    }

    /// Best lattice point under a linear power price: maximizes
    /// `raw(P) - lambda . P` over the grid. Ties break toward the lowest
    /// lattice index. This is the dual-path evaluation that works at any
    /// user count, facets or not.
    pub fn price_maximum(&self, lambda: &[f64]) -> (usize, f64) {
        let mut psd = vec![0.0f64; self.dims.len()];
        let mut best = (0usize, f64::NEG_INFINITY);
        for g in 0..self.raw.len() {
            decode(g, &self.dims, &self.strides, &self.breakpoints, &mut psd);
            let tilted = self.raw[g] - dot(lambda, &psd);
            if tilted > best.1 {
                best = (g, tilted);
            }
        }
        best
    }

    /// Expresses the envelope value at `psd` as a convex combination of at
    /// most K+1 lattice points: the active facet's barycentric weights, or a
    /// deterministic LP when the facet solve is degenerate (Bland's rule;
    /// the optimal basis is the vertex-minimal representation it reaches).
    pub fn decompose(&self, psd: &[f64]) -> Result<CaratheodoryDecomposition, EnvelopeError> {
        self.check_box(psd)?;
        if let Some(facets) = self.facets.as_ref() {
            // Active facet: minimal plane value; ties by vertex list order
            // (facets are sorted), so the first strict improvement wins.
            let mut active: Option<(&Facet, f64)> = None;
            for f in facets {
                let v = f.offset + dot(&f.gradient, psd);
                match &active {
                    Some((_, best)) if v >= best - 1e-12 => {}
                    _ => active = Some((f, v)),
                }
            }
            let (facet, _) = active.ok_or(EnvelopeError::DecompositionFailed)?;
            if let Some(weights) = self.barycentric(facet, psd) {
                return Ok(self.assemble(&facet.vertices, &weights));
            }
        }
        self.decompose_lp(psd)
    }

    /// Solves for barycentric weights of `psd` within a facet's vertex set,
    /// in the active (non-pinned) axes. Returns None when the system is
    /// singular or produces meaningfully negative weights.
    fn barycentric(&self, facet: &Facet, psd: &[f64]) -> Option<Vec<f64>> {
        let active: Vec<usize> = (0..self.dims.len()).filter(|&a| self.dims[a] > 1).collect();
        let n = facet.vertices.len();
        if n != active.len() + 1 {
            return None;
        }
        // Rows: one per active axis plus the affine row of ones.
        let mut a = vec![vec![0.0f64; n + 1]; n];
        for (col, &g) in facet.vertices.iter().enumerate() {
            let p = self.grid_psd(g);
            for (row, &ax) in active.iter().enumerate() {
                a[row][col] = p[ax];
            }
            a[n - 1][col] = 1.0;
        }
        for (row, &ax) in active.iter().enumerate() {
            a[row][n] = psd[ax];
        }
        a[n - 1][n] = 1.0;
        let x = solve_dense(&mut a)?;
        if x.iter().any(|&c| c < -1e-9) {
            return None;
        }
        Some(x)
    }

    /// LP route: maximize the combined monotone value over all convex
    /// combinations of lattice points recombining to `psd` exactly.
    fn decompose_lp(&self, psd: &[f64]) -> Result<CaratheodoryDecomposition, EnvelopeError> {
        let k = self.dims.len();
        let n = self.raw.len();
        let mut constraints = Vec::with_capacity(k + 1);
        for a in 0..k {
            if self.dims[a] < 2 {
                continue;
            }
            let coeffs: Vec<f64> = (0..n)
                .map(|g| self.breakpoints[a][(g / self.strides[a]) % self.dims[a]])
                .collect();
            constraints.push(Constraint {
                coeffs,
                kind: ConstraintKind::Eq,
                rhs: psd[a],
            });
        }
        constraints.push(Constraint {
            coeffs: vec![1.0; n],
            kind: ConstraintKind::Eq,
            rhs: 1.0,
        });
        let sol = simplex::maximize(&self.mono, &constraints)
            .map_err(|_| EnvelopeError::DecompositionFailed)?;
        let mut chosen: Vec<(usize, f64)> = sol
            .x
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 1e-12)
            .map(|(g, &c)| (g, c))
            .collect();
        if chosen.is_empty() {
            return Err(EnvelopeError::DecompositionFailed);
        }
        chosen.sort_by_key(|e| e.0);
        let vertices: Vec<usize> = chosen.iter().map(|&(g, _)| g).collect();
        let weights: Vec<f64> = chosen.iter().map(|&(_, c)| c).collect();
        Ok(self.assemble(&vertices, &weights))
    }

    fn assemble(&self, vertices: &[usize], weights: &[f64]) -> CaratheodoryDecomposition {
        // Clamp tiny negatives and renormalize so the weights are an exact
        // convex combination.
        let mut w: Vec<f64> = weights.iter().map(|&c| c.max(0.0)).collect();
        let sum: f64 = w.iter().sum();
        for c in w.iter_mut() {
            *c /= sum;
        }
        let mut keep: Vec<(usize, f64)> = vertices
            .iter()
            .zip(&w)
            .filter(|(_, &c)| c > 0.0)
            .map(|(&g, &c)| (g, c))
            .collect();
        keep.sort_by_key(|e| e.0);
        let points = keep
            .iter()
            .map(|&(g, _)| self.witness_point(g))
            .collect::<Vec<_>>();
        let grid_psd = keep.iter().map(|&(g, _)| self.grid_psd(g)).collect();
        let weights = keep.iter().map(|&(_, c)| c).collect();
        CaratheodoryDecomposition {
            weights,
            points,
            grid_psd,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting on an n x (n+1) augmented
/// system; None when the pivot collapses.
fn solve_dense(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite pivots")
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for k in col..=n {
                    let v = a[col][k];
                    a[row][k] -= factor * v;
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}
