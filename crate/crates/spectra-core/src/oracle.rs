//! Independent brute-force and semi-analytic verifiers.
//!
//! Nothing here shares code paths with the solvers it checks. The oracle
//! answers three questions the fast paths must agree with:
//!
//! - [`exhaustive_best`]: the best achievable weighted sum-rate over *all*
//!   budget-feasible allocations at a finite resolution — each sub-channel
//!   is split into equal sub-bands, and every user spends an integer number
//!   of power quanta per sub-band. The search is exact on that lattice via
//!   dynamic programming over remaining-quanta states, so it cannot miss a
//!   lattice allocation the way local methods can.
//! - [`duality_gap`]: a certificate that the Lagrangian dual bound can be
//!   pushed down to the primal value, starting from the solver's own prices
//!   and polishing coordinate-by-coordinate with golden-section search.
//! - [`property_suite`]: seeded randomized checks of the structural facts
//!   the closed-form solvers rely on (reallocation never hurts under strong
//!   coupling, outsiders never lose, boundary identities, tangency
//!   consistency).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::borrow::Borrow;
use thiserror::Error;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelError, ChannelSpec, Piece, SpectrumAllocation, Subchannel};
use crate::envelope::HullFunction;
use crate::fdma::{fdma_power_region_threshold, reallocation_gain};
use crate::math;
use crate::optimizer::{dual_value, OptimizationResult, OptimizerError};
use crate::symmetric::{
    f_star, f_star_slope, h_star, h_star_slope, solve_tangency, SymmetricEnvelope,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("bad oracle config: {0}")]
    BadConfig(&'static str),
    #[error("search needs about {estimated} operations, above the cap of {cap}")]
    SearchTooLarge { estimated: u64, cap: u64 },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
}

/// Resolution of the exhaustive search.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleConfig {
    /// Spend levels per user per sub-band, zero included; each user's budget
    /// is divided into `levels - 1` quanta.
    pub levels: usize,
    /// Equal sub-bands each sub-channel is split into.
    pub splits: usize,
    /// Upper bound on total enumeration work (rate evaluations plus
    /// dynamic-programming transitions).
    pub max_evaluations: u64,
}

impl OracleConfig {
    pub const DEFAULT_EVALUATION_CAP: u64 = 100_000_000;

    /// Defaults scaled to the user count: finer grids where the state space
    /// allows it, two sub-bands to capture two-regime mixtures.
    pub fn for_users(users: usize) -> Self {
        OracleConfig {
            levels: match users {
                0..=2 => 25,
                3 => 9,
                _ => 5,
            },
            splits: 2,
            max_evaluations: Self::DEFAULT_EVALUATION_CAP,
        }
    }
}

/// Result of the exhaustive lattice search.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OracleOutcome {
    /// Best weighted sum-rate over the allocation lattice.
    pub value: f64,
    /// The argmax allocation (deterministic: lowest lexicographic spend
    /// pattern among ties).
    pub allocation: SpectrumAllocation,
    /// Suboptimality certificate: rounding any feasible allocation down to
    /// the lattice loses at most this much (per-instance gradient bound
    /// times the spend spacing, summed over sub-bands).
    pub tolerance: f64,
    /// Work actually spent (rate evaluations plus DP transitions).
    pub evaluations: u64,
}

/// Enumerates every allocation that splits each sub-channel into
/// `config.splits` equal sub-bands and spends integer multiples of
/// `budget_i / (levels - 1)` per user per sub-band, keeping the per-user
/// totals within budget. Exact dynamic programming over remaining-quanta
/// states; the reported maximizer is exact on this lattice.
///
/// The value is monotone nondecreasing along refinement chains (doubling
/// `splits`, or replacing `levels - 1` by a multiple), since those lattices
/// nest.
pub fn exhaustive_best(
    spec: &ChannelSpec,
    config: &OracleConfig,
) -> Result<OracleOutcome, OracleError> {
    let k = spec.users();
    let l = config.levels;
    let s = config.splits;
    if l < 2 {
        return Err(OracleError::BadConfig("levels must be at least 2"));
    }
    if s < 1 {
        return Err(OracleError::BadConfig("splits must be at least 1"));
    }

    let states =
        l.checked_pow(k as u32)
            .filter(|&st| st <= 1 << 26)
            .ok_or(OracleError::SearchTooLarge {
                estimated: u64::MAX,
                cap: config.max_evaluations,
            })?;
    let band_count = spec.subchannels().len() * s;
    // Work estimate: per band, one rate evaluation per spend pattern plus
    // one transition per (state, sub-pattern) pair.
    let per_band_transitions = (0..k).fold(1.0_f64, |acc, _| acc * (l * (l + 1) / 2) as f64);
    let estimated = (band_count as f64) * (states as f64 + per_band_transitions);
    if estimated > config.max_evaluations as f64 {
        return Err(OracleError::SearchTooLarge {
            estimated: if estimated > u64::MAX as f64 {
                u64::MAX
            } else {
                estimated as u64
            },
            cap: config.max_evaluations,
        });
    }

    // Digit weights: user 0 is the most significant digit, so ascending
    // codes enumerate spend patterns in lexicographic order.
    let mut weight = vec![1usize; k];
    for i in (0..k.saturating_sub(1)).rev() {
        weight[i] = weight[i + 1] * l;
    }
    let quantum: Vec<f64> = spec.budgets().iter().map(|p| p / (l - 1) as f64).collect();

    // Band list: sub-channel m contributes `s` bands of width b_m / s.
    let bands: Vec<(usize, f64)> = spec
        .subchannels()
        .iter()
        .enumerate()
        .flat_map(|(m, sc)| (0..s).map(move |_| (m, sc.bandwidth / s as f64)))
        .collect();

    let mut evaluations: u64 = 0;

    // Per-band value of each spend pattern.
    let mut band_values: Vec<Vec<f64>> = Vec::with_capacity(band_count);
    let mut psd = vec![0.0f64; k];
    for &(m, width) in &bands {
        let mut values = Vec::with_capacity(states);
        for code in 0..states {
            for i in 0..k {
                let t = (code / weight[i]) % l;
                psd[i] = t as f64 * quantum[i] / width;
            }
            let rates = spec.rate_density(m, &psd);
            let r: f64 = rates.iter().zip(spec.weights()).map(|(r, w)| r * w).sum();
            values.push(width * r);
            evaluations += 1;
        }
        band_values.push(values);
    }

    // Backward DP: value[b][q] = best total over bands b.. with remaining
    // quanta q (digit-encoded).
    let mut value: Vec<Vec<f64>> = vec![vec![0.0; states]; band_count + 1];
    let mut digits = vec![0usize; k];
    for b in (0..band_count).rev() {
        for q_code in 0..states {
            for (i, d) in digits.iter_mut().enumerate() {
                *d = (q_code / weight[i]) % l;
            }
            let mut best = f64::NEG_INFINITY;
            for_each_sub_pattern(&digits, &weight, |t_code| {
                let cand = band_values[b][t_code] + value[b + 1][q_code - t_code];
                if cand > best {
                    best = cand;
                }
                evaluations += 1;
            });
            value[b][q_code] = best;
        }
    }

    // Forward reconstruction, lexicographically smallest argmax per band.
    let mut q_code = states - 1;
    let edges = spec.band_edges();
    let mut pieces = Vec::with_capacity(band_count);
    let mut cursor = 0.0f64;
    let mut band_in_channel = 0usize;
    let mut current_channel = 0usize;
    for (b, &(m, width)) in bands.iter().enumerate() {
        if m != current_channel {
            current_channel = m;
            band_in_channel = 0;
        }
        for (i, d) in digits.iter_mut().enumerate() {
            *d = (q_code / weight[i]) % l;
        }
        let mut best = f64::NEG_INFINITY;
        let mut chosen = 0usize;
        for_each_sub_pattern(&digits, &weight, |t_code| {
            let cand = band_values[b][t_code] + value[b + 1][q_code - t_code];
            if cand > best {
                best = cand;
                chosen = t_code;
            }
        });
        let piece_psd: Vec<f64> = (0..k)
            .map(|i| ((chosen / weight[i]) % l) as f64 * quantum[i] / width)
            .collect();
        let end = if band_in_channel + 1 == s {
            edges[m + 1]
        } else {
            cursor + width
        };
        pieces.push(Piece {
            start: cursor,
            end,
            psd: piece_psd,
        });
        cursor = end;
        band_in_channel += 1;
        q_code -= chosen;
    }

    // Rounding certificate: shrinking a user's PSD by one quantum of spend
    // costs at most w_i * e_i / n_i(m) per band (gradient of the rate is at
    // most w_i / n_i on the box, and interference reduction only helps the
    // others), summed over all bands.
    let mut tolerance = 0.0;
    for sc in spec.subchannels() {
        for i in 0..k {
            tolerance += s as f64 * spec.weights()[i] * quantum[i] / sc.noise[i];
        }
    }

    let allocation = SpectrumAllocation::new(pieces).expect("oracle bands tile the unit band");
    Ok(OracleOutcome {
        value: value[0][states - 1],
        allocation,
        tolerance,
        evaluations,
    })
}

/// Visits the digit codes of every pattern `t` with `t <= q` componentwise,
/// in lexicographic order (first digit most significant).
fn for_each_sub_pattern(q: &[usize], weight: &[usize], mut visit: impl FnMut(usize)) {
    let k = q.len();
    let mut t = vec![0usize; k];
    let mut code = 0usize;
    loop {
        visit(code);
        let mut d = k;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            if t[d] < q[d] {
                t[d] += 1;
                code += weight[d];
                break;
            }
            code -= t[d] * weight[d];
            t[d] = 0;
        }
    }
}

/// Sweep settings for [`duality_gap`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepConfig {
    /// Full passes over the price coordinates.
    pub rounds: usize,
    /// Golden-section iterations per coordinate.
    pub iterations: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            rounds: 2,
            iterations: 48,
        }
    }
}

/// Outcome of the dual sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GapReport {
    /// Best dual bound found minus the primal value. Weak duality keeps it
    /// above `-1e-9`; near-zero certifies the solve.
    pub gap: f64,
    /// Prices attaining the best bound.
    pub prices: Vec<f64>,
    /// The bound itself.
    pub dual_bound: f64,
    /// Dual evaluations spent.
    pub evaluations: usize,
}

/// Polishes the dual bound around the solver's prices: golden-section search
/// per price coordinate (several rounds), keeping the best bound seen. The
/// result certifies how small the duality gap actually is, independent of
/// the solver's own optimality claims.
pub fn duality_gap<H: Borrow<HullFunction>>(
    spec: &ChannelSpec,
    hulls: &[H],
    result: &OptimizationResult,
    config: &SweepConfig,
) -> Result<GapReport, OracleError> {
    if config.iterations == 0 {
        return Err(OracleError::BadConfig("iterations must be positive"));
    }

    fn probe<H: Borrow<HullFunction>>(
        spec: &ChannelSpec,
        hulls: &[H],
        prices: &mut [f64],
        i: usize,
        x: f64,
        evaluations: &mut usize,
    ) -> Result<f64, OracleError> {
        let keep = prices[i];
        prices[i] = x;
        let outcome = dual_value(spec, hulls, prices);
        prices[i] = keep;
        *evaluations += 1;
        Ok(outcome?.value)
    }

    let mut prices: Vec<f64> = result.dual_prices.iter().map(|l| l.max(0.0)).collect();
    let mut evaluations = 1usize;
    let mut best = dual_value(spec, hulls, &prices)?.value;

    let golden = 0.5 * (math::sqrt(5.0) - 1.0);
    for _ in 0..config.rounds {
        for i in 0..prices.len() {
            let mut lo = 0.0f64;
            let mut hi = 2.0 * prices[i] + 1.0;
            let mut x1 = hi - golden * (hi - lo);
            let mut x2 = lo + golden * (hi - lo);
            let mut f1 = probe(spec, hulls, &mut prices, i, x1, &mut evaluations)?;
            let mut f2 = probe(spec, hulls, &mut prices, i, x2, &mut evaluations)?;
            for _ in 0..config.iterations {
                if f1 <= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - golden * (hi - lo);
                    f1 = probe(spec, hulls, &mut prices, i, x1, &mut evaluations)?;
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + golden * (hi - lo);
                    f2 = probe(spec, hulls, &mut prices, i, x2, &mut evaluations)?;
                }
            }
            let (x_best, f_best) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
            if f_best < best {
                best = f_best;
                prices[i] = x_best;
            }
        }
    }

    Ok(GapReport {
        gap: best - result.value,
        prices,
        dual_bound: best,
        evaluations,
    })
}

/// How many random instances each property draws.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SuiteCounts {
    /// Strong-coupling full reallocation never hurts anyone.
    pub strong_pair: usize,
    /// Orthogonalizing a pair never hurts a bystander, any coupling.
    pub outsider: usize,
    /// Sharing and reallocated FDMA agree at the boundary power and the
    /// comparison flips sign across it.
    pub boundary: usize,
    /// Two-user symmetric sign identity for FDMA-vs-sharing.
    pub identity: usize,
    /// Tangency solutions are internally consistent.
    pub tangency: usize,
    /// The closed-form envelope dominates both of its branches.
    pub envelope: usize,
}

impl Default for SuiteCounts {
    fn default() -> Self {
        SuiteCounts {
            strong_pair: 10_000,
            outsider: 10_000,
            boundary: 50,
            identity: 1_000,
            tangency: 25,
            envelope: 10,
        }
    }
}

/// One property's tally.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PropertyResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Human-readable dump of the first failing instance, if any.
    pub first_counterexample: Option<String>,
}

/// Full suite outcome; reproducible from the seed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PropertyReport {
    pub seed: u64,
    pub properties: Vec<PropertyResult>,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        self.properties.iter().all(|p| p.failures == 0)
    }

    pub fn total_cases(&self) -> usize {
        self.properties.iter().map(|p| p.cases).sum()
    }
}

struct PropertyRun {
    name: &'static str,
    cases: usize,
    failures: usize,
    first_counterexample: Option<String>,
}

impl PropertyRun {
    fn new(name: &'static str) -> Self {
        PropertyRun {
            name,
            cases: 0,
            failures: 0,
            first_counterexample: None,
        }
    }

    fn record(&mut self, ok: bool, dump: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures += 1;
            if self.first_counterexample.is_none() {
                self.first_counterexample = Some(dump());
            }
        }
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name,
            cases: self.cases,
            failures: self.failures,
            first_counterexample: self.first_counterexample,
        }
    }
}

fn flat_spec(alpha: Vec<f64>, noise: Vec<f64>, users: usize) -> ChannelSpec {
    ChannelSpec::new(
        users,
        vec![Subchannel {
            bandwidth: 1.0,
            alpha,
            noise,
        }],
        vec![1.0; users],
        vec![1.0; users],
    )
    .expect("generated channel is valid")
}

fn symmetric_flat_spec(alpha: f64) -> ChannelSpec {
    flat_spec(vec![1.0, alpha, alpha, 1.0], vec![1.0, 1.0], 2)
}

/// Runs every randomized structural check with a fixed seed. The report
/// lists per-property case counts and the first counterexample, if any;
/// identical seeds and counts give identical reports.
pub fn property_suite(seed: u64, counts: &SuiteCounts) -> PropertyReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut properties = Vec::new();

    // Full reallocation under strong coupling never reduces any user's rate.
    let mut run = PropertyRun::new("strong-coupling-reallocation-never-hurts");
    for _ in 0..counts.strong_pair {
        let k = 2 + rng.random_range(0..3usize);
        let mut alpha = vec![1.0f64; k * k];
        for j in 0..k {
            for i in 0..k {
                if i != j {
                    alpha[j * k + i] = rng.random_range(0.5..3.0);
                }
            }
        }
        let noise: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
        let powers: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..10.0)).collect();
        let spec = flat_spec(alpha, noise, k);
        let group: Vec<usize> = (0..k).collect();
        let cmp = reallocation_gain(&spec, 0, &powers, &group).expect("valid instance");
        let ok = cmp
            .shared
            .iter()
            .zip(&cmp.reallocated)
            .all(|(s, r)| *r >= *s - 1e-12 * (1.0 + s.abs()));
        run.record(ok, || {
            format!("k={k} powers={powers:?} spec={spec:?} cmp={cmp:?}")
        });
    }
    properties.push(run.finish());

    // Orthogonalizing any pair never reduces a bystander's rate, whatever
    // the coupling strengths.
    let mut run = PropertyRun::new("bystander-rate-never-drops");
    for _ in 0..counts.outsider {
        let k = 3;
        let mut alpha = vec![1.0f64; k * k];
        for j in 0..k {
            for i in 0..k {
                if i != j {
                    alpha[j * k + i] = rng.random_range(0.0..3.0);
                }
            }
        }
        let noise: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..2.0)).collect();
        let powers: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..10.0)).collect();
        let spec = flat_spec(alpha, noise, k);
        let a = rng.random_range(0..k);
        let b = (a + 1 + rng.random_range(0..k - 1)) % k;
        let outsider = (0..k).find(|&u| u != a && u != b).expect("three users");
        let cmp = reallocation_gain(&spec, 0, &powers, &[a, b]).expect("valid instance");
        let ok = cmp.reallocated[outsider]
            >= cmp.shared[outsider] - 1e-12 * (1.0 + cmp.shared[outsider].abs());
        run.record(ok, || {
            format!(
                "pair=({a},{b}) outsider={outsider} powers={powers:?} spec={spec:?} cmp={cmp:?}"
            )
        });
    }
    properties.push(run.finish());

    // The normalized log-ratio x -> (1/x) ln((c+x)/(c-x)) peaks at x = 1 on
    // (0, 1] for every c > 1: moving a user's whole per-band power in one
    // step is never worse than fractional steps.
    let mut run = PropertyRun::new("normalized-log-ratio-peaks-at-one");
    for &c in &[1.001f64, 2.0, 10.0, 1000.0] {
        let f = |x: f64| math::ln((c + x) / (c - x)) / x;
        let at_one = f(1.0);
        for step in 1..=1000usize {
            let x = step as f64 / 1000.0;
            run.record(at_one >= f(x) - 1e-12, || {
                format!("c={c} x={x} f(x)={} f(1)={at_one}", f(x))
            });
        }
    }
    properties.push(run.finish());

    // At the boundary power the symmetric comparison is a tie, and it flips
    // sign across the boundary.
    let mut run = PropertyRun::new("sharing-fdma-boundary-and-sign-flip");
    for _ in 0..counts.boundary {
        let alpha = rng.random_range(0.05..0.45);
        let p0 = fdma_power_region_threshold(alpha).expect("valid gain");
        let spec = symmetric_flat_spec(alpha);
        let diff = |p: f64| {
            let cmp =
                reallocation_gain(&spec, 0, &[p / 2.0, p / 2.0], &[0, 1]).expect("valid instance");
            let shared: f64 = cmp.shared.iter().sum();
            let realloc: f64 = cmp.reallocated.iter().sum();
            (realloc - shared, shared)
        };
        let (at_boundary, shared) = diff(p0);
        let (below, _) = diff(0.95 * p0);
        let (above, _) = diff(1.05 * p0);
        let ok = at_boundary.abs() <= 1e-9 * (1.0 + shared.abs()) && below < 0.0 && above > 0.0;
        run.record(ok, || {
            format!("alpha={alpha} p0={p0} at={at_boundary} below={below} above={above}")
        });
    }
    properties.push(run.finish());

    // Sign identity: for symmetric gains and unit noise, reallocated FDMA
    // beats sharing exactly when p1 p2 (alpha^2 (p1+p2) + 2 alpha - 1) >= 0.
    let mut run = PropertyRun::new("pairwise-comparison-sign-identity");
    for _ in 0..counts.identity {
        let alpha = rng.random_range(0.01..1.2);
        let p1 = rng.random_range(0.0..20.0);
        let p2 = rng.random_range(0.0..20.0);
        let spec = symmetric_flat_spec(alpha);
        let cmp = reallocation_gain(&spec, 0, &[p1, p2], &[0, 1]).expect("valid instance");
        let shared: f64 = cmp.shared.iter().sum();
        let realloc: f64 = cmp.reallocated.iter().sum();
        let diff = realloc - shared;
        let indicator = p1 * p2 * (alpha * alpha * (p1 + p2) + 2.0 * alpha - 1.0);
        // Near the boundary both sides vanish together; skip the ambiguous
        // shell instead of comparing signs of noise.
        let ok = if indicator.abs() <= 1e-9 || diff.abs() <= 1e-12 * (1.0 + shared.abs()) {
            true
        } else {
            (indicator > 0.0) == (diff > 0.0)
        };
        run.record(ok, || {
            format!("alpha={alpha} p1={p1} p2={p2} diff={diff} indicator={indicator}")
        });
    }
    properties.push(run.finish());

    // Tangency solutions are self-consistent: equal slopes, chord matching,
    // crossover strictly between the tangent powers.
    let mut run = PropertyRun::new("tangency-self-consistency");
    for _ in 0..counts.tangency {
        let alpha = rng.random_range(0.02..0.45);
        match solve_tangency(alpha) {
            Ok(t) => {
                let sf = f_star_slope(alpha, t.p_f).expect("valid");
                let sh = h_star_slope(t.p_h).expect("valid");
                let chord = (h_star(t.p_h).expect("valid") - f_star(alpha, t.p_f).expect("valid"))
                    / (t.p_h - t.p_f);
                let p0 = fdma_power_region_threshold(alpha).expect("valid gain");
                let ok = (sf - t.slope).abs() <= 1e-7 * t.slope
                    && (sh - t.slope).abs() <= 1e-7 * t.slope
                    && (chord - t.slope).abs() <= 1e-7 * t.slope
                    && t.p_f < p0
                    && p0 < t.p_h;
                run.record(ok, || {
                    format!("alpha={alpha} t={t:?} sf={sf} sh={sh} chord={chord} p0={p0}")
                });
            }
            Err(e) => run.record(false, || format!("alpha={alpha} failed: {e}")),
        }
    }
    properties.push(run.finish());

    // The two-user envelope dominates both of its branches everywhere and
    // coincides with the better branch outside the mixture window.
    let mut run = PropertyRun::new("envelope-dominates-branches");
    for _ in 0..counts.envelope {
        let alpha = rng.random_range(0.02..0.45);
        match SymmetricEnvelope::new(alpha) {
            Ok(env) => {
                let t = env
                    .tangency()
                    .expect("weak coupling has a tangency")
                    .clone();
                let mut ok = true;
                let mut detail = String::new();
                for step in 0..=200usize {
                    let p = 2.0 * t.p_h * step as f64 / 200.0;
                    let v = env.value(p).expect("valid power").value;
                    let f = f_star(alpha, p).expect("valid");
                    let h = h_star(p).expect("valid");
                    let floor = f.max(h);
                    if v < floor - 1e-12 * (1.0 + floor) {
                        ok = false;
                        detail = format!("p={p} v={v} floor={floor}");
                        break;
                    }
                    if (p <= t.p_f || p >= t.p_h) && (v - floor).abs() > 1e-12 * (1.0 + floor) {
                        ok = false;
                        detail = format!("p={p} v={v} floor={floor} outside mixture");
                        break;
                    }
                }
                run.record(ok, || format!("alpha={alpha} {detail}"));
            }
            Err(e) => run.record(false, || format!("alpha={alpha} failed: {e}")),
        }
    }
    properties.push(run.finish());

    PropertyReport { seed, properties }
}
