//! The five subcommand implementations.

use anyhow::{bail, Context, Result};
use serde::Serialize;

use spectra_core::channel::{ChannelSpec, SpectrumAllocation, Subchannel};
use spectra_core::envelope::{build_hull, EnvelopeError, GridConfig, HullFunction};
use spectra_core::fdma::{analyze, FdmaDecision};
use spectra_core::optimizer::{solve, OptimizationResult, SolverConfig};
use spectra_core::oracle::{
    duality_gap, exhaustive_best, property_suite, OracleConfig, OracleOutcome, PropertyReport,
    SuiteCounts, SweepConfig,
};
use spectra_core::symmetric::{
    build_allocation_flat, f_star, h_star, solve_symmetric_selective, solve_tangency,
    EnvelopeRegime, SymmetricEnvelope, SHARING_GAIN_LIMIT,
};

use crate::input::load_spec;
use crate::manifest::{print_json, write_csv, RunManifest, SCHEMA_VERSION};
use crate::{FdmaCheckArgs, OptimizeArgs, Outcome, SweepArgs, Sym2Args, VerifyArgs};

/// Worker cap for parallel sections: `SPECTRA_THREADS` when set, otherwise
/// the hardware parallelism.
fn worker_cap() -> Result<usize> {
    match std::env::var("SPECTRA_THREADS") {
        Ok(raw) => {
            let workers: usize = raw.trim().parse().with_context(|| {
                format!("SPECTRA_THREADS must be a positive integer, got {raw:?}")
            })?;
            if workers == 0 {
                bail!("SPECTRA_THREADS must be positive");
            }
            Ok(workers)
        }
        Err(std::env::VarError::NotPresent) => Ok(std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)),
        Err(err) => Err(err).context("reading SPECTRA_THREADS"),
    }
}

/// Builds one envelope per sub-channel, fanning the independent builds over
/// up to `workers` threads. Results are reassembled by sub-channel index, so
/// the output is identical whatever the worker count.
fn build_hulls_parallel(
    spec: &ChannelSpec,
    grids: &[GridConfig],
    workers: usize,
) -> Result<Vec<HullFunction>> {
    let count = grids.len();
    let workers = workers.min(count).max(1);
    if workers == 1 {
        let mut hulls = Vec::with_capacity(count);
        for (m, grid) in grids.iter().enumerate() {
            hulls.push(build_hull(spec, m, grid)?);
        }
        return Ok(hulls);
    }
    let results: Vec<Result<Vec<(usize, HullFunction)>, EnvelopeError>> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|t| {
                    scope.spawn(move || {
                        (t..count)
                            .step_by(workers)
                            .map(|m| build_hull(spec, m, &grids[m]).map(|hull| (m, hull)))
                            .collect()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("hull worker panicked"))
                .collect()
        });
    let mut slots: Vec<Option<HullFunction>> = (0..count).map(|_| None).collect();
    for result in results {
        for (m, hull) in result? {
            slots[m] = Some(hull);
        }
    }
    Ok(slots
        .into_iter()
        .map(|slot| slot.expect("every sub-channel was assigned to a worker"))
        .collect())
}

fn format_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

// ---------------------------------------------------------------------------
// fdma-check

#[derive(Serialize)]
struct FdmaCheckOutput {
    schema: u32,
    manifest: RunManifest,
    decision: FdmaDecision,
}

pub fn fdma_check(args: &FdmaCheckArgs, stamp: bool) -> Result<Outcome> {
    let spec = load_spec(&args.spec)?;
    let manifest = RunManifest::new("fdma-check", Some(&args.spec), stamp)?;
    let decision = analyze(&spec);
    print_json(&FdmaCheckOutput {
        schema: SCHEMA_VERSION,
        manifest,
        decision,
    })?;
    Ok(Outcome::Success)
}

// ---------------------------------------------------------------------------
// sym2

#[derive(Serialize)]
struct BandTangency {
    subchannel: usize,
    alpha: f64,
    p_f: Option<f64>,
    p_h: Option<f64>,
    crossover: Option<f64>,
}

#[derive(Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
enum Sym2Solution {
    Flat {
        alpha: f64,
        power: f64,
        value: f64,
        regime: EnvelopeRegime,
        /// Bandwidth fraction handed to the FDMA side of a mixture.
        lambda: f64,
        p_f: Option<f64>,
        p_h: Option<f64>,
        crossover: Option<f64>,
        rates: Vec<f64>,
        allocation: SpectrumAllocation,
    },
    Selective {
        power: f64,
        value: f64,
        per_subchannel: Vec<BandTangency>,
        result: OptimizationResult,
    },
}

#[derive(Serialize)]
struct Sym2Output {
    schema: u32,
    manifest: RunManifest,
    solution: Sym2Solution,
}

pub fn sym2(args: &Sym2Args, stamp: bool) -> Result<Outcome> {
    if !(args.power.is_finite() && args.power >= 0.0) {
        bail!("--power must be a nonnegative finite number");
    }
    let mut manifest = RunManifest::new("sym2", args.spec.as_deref(), stamp)?;
    if let Some(alpha) = args.alpha {
        manifest.flag("--alpha", alpha);
    }
    manifest.flag("--power", args.power);

    let solution = match (args.alpha, &args.spec) {
        (Some(_), Some(_)) => {
            bail!("--alpha (flat mode) and --spec (selective mode) are mutually exclusive")
        }
        (None, None) => {
            bail!("pass --alpha for a flat band or --spec for a frequency-selective channel")
        }
        (Some(alpha), None) => {
            let envelope = SymmetricEnvelope::new(alpha)?;
            let ev = envelope.value(args.power)?;
            let allocation = build_allocation_flat(alpha, args.power)?;
            // The implied channel behind flat mode: unit band, unit noise,
            // symmetric coupling, the sum power split evenly.
            let implied = ChannelSpec::new(
                2,
                vec![Subchannel {
                    bandwidth: 1.0,
                    alpha: vec![1.0, alpha, alpha, 1.0],
                    noise: vec![1.0, 1.0],
                }],
                vec![1.0, 1.0],
                vec![args.power / 2.0, args.power / 2.0],
            )?;
            let rates = implied.total_rates(&allocation)?.rates;
            if let Some(prefix) = &args.csv {
                write_flat_curves(prefix, &envelope, args.power, args.csv_steps, &mut manifest)?;
            }
            let t = envelope.tangency();
            Sym2Solution::Flat {
                alpha,
                power: args.power,
                value: ev.value,
                regime: ev.regime,
                lambda: ev.lambda,
                p_f: t.map(|t| t.p_f),
                p_h: t.map(|t| t.p_h),
                crossover: t.map(|t| t.crossover),
                rates,
                allocation,
            }
        }
        (None, Some(path)) => {
            let spec = load_spec(path)?;
            let result = solve_symmetric_selective(&spec, args.power)?;
            let per_subchannel = (0..spec.subchannels().len())
                .map(|m| {
                    let alpha = spec.alpha(m, 1, 0);
                    let envelope = SymmetricEnvelope::new(alpha)?;
                    let t = envelope.tangency();
                    Ok(BandTangency {
                        subchannel: m,
                        alpha,
                        p_f: t.map(|t| t.p_f),
                        p_h: t.map(|t| t.p_h),
                        crossover: t.map(|t| t.crossover),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(prefix) = &args.csv {
                write_selective_curves(prefix, &spec, args.power, args.csv_steps, &mut manifest)?;
            }
            Sym2Solution::Selective {
                power: args.power,
                value: result.value,
                per_subchannel,
                result,
            }
        }
    };

    print_json(&Sym2Output {
        schema: SCHEMA_VERSION,
        manifest,
        solution,
    })?;
    Ok(Outcome::Success)
}

/// Plot range for envelope curves: past the FDMA-side tangency and past the
/// requested operating power, whichever is larger.
fn curve_power_max(envelope: &SymmetricEnvelope, power: f64) -> f64 {
    let past_tangency = envelope.tangency().map(|t| 1.25 * t.p_h).unwrap_or(0.0);
    (2.0 * power).max(past_tangency).max(1.0)
}

fn write_flat_curves(
    prefix: &str,
    envelope: &SymmetricEnvelope,
    power: f64,
    steps: usize,
    manifest: &mut RunManifest,
) -> Result<()> {
    if steps < 1 {
        bail!("--csv-steps must be at least 1");
    }
    let alpha = envelope.alpha();
    let p_max = curve_power_max(envelope, power);
    let rows = (0..=steps)
        .map(|i| {
            let p = p_max * i as f64 / steps as f64;
            let f = f_star(alpha, p)?;
            let h = h_star(p)?;
            let r = envelope.value(p)?.value;
            Ok(format!("{p},{f},{h},{r}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let path = format!("{prefix}_curves.csv");
    write_csv(&path, "p,f_star,h_star,r_star", rows.into_iter())?;
    manifest.output(path);
    Ok(())
}

fn write_selective_curves(
    prefix: &str,
    spec: &ChannelSpec,
    power: f64,
    steps: usize,
    manifest: &mut RunManifest,
) -> Result<()> {
    if steps < 1 {
        bail!("--csv-steps must be at least 1");
    }
    let mut rows = Vec::new();
    for (m, sc) in spec.subchannels().iter().enumerate() {
        let alpha = spec.alpha(m, 1, 0);
        let envelope = SymmetricEnvelope::new(alpha)?;
        // Normalized sum-PSD axis; its cap is the PSD this band would run at
        // if the whole budget landed on it.
        let q_cap = power / (sc.bandwidth * spec.noise(m, 0));
        let q_max = curve_power_max(&envelope, q_cap);
        for i in 0..=steps {
            let q = q_max * i as f64 / steps as f64;
            // The sharing branch only exists below the strong-interference
            // threshold; leave its column empty where the band is pure FDMA.
            let f = if alpha < SHARING_GAIN_LIMIT {
                f_star(alpha, q)?.to_string()
            } else {
                String::new()
            };
            let h = h_star(q)?;
            let r = envelope.value(q)?.value;
            rows.push(format!("{m},{q},{f},{h},{r}"));
        }
    }
    let path = format!("{prefix}_curves.csv");
    write_csv(&path, "subchannel,q,f_star,h_star,r_star", rows.into_iter())?;
    manifest.output(path);
    Ok(())
}

// ---------------------------------------------------------------------------
// optimize

#[derive(Serialize)]
struct OptimizeOutput {
    schema: u32,
    manifest: RunManifest,
    /// Lattice points per sub-channel envelope (diagnostic for grid sizing).
    grid_points: Vec<usize>,
    result: OptimizationResult,
}

pub fn optimize(args: &OptimizeArgs, stamp: bool) -> Result<Outcome> {
    let mut spec = load_spec(&args.spec)?;
    let mut manifest = RunManifest::new("optimize", Some(&args.spec), stamp)?;
    if let Some(budgets) = &args.budgets {
        manifest.flag("--budgets", format_list(budgets));
        if budgets.len() != spec.users() {
            bail!(
                "--budgets has {} entries for {} users",
                budgets.len(),
                spec.users()
            );
        }
        spec = ChannelSpec::new(
            spec.users(),
            spec.subchannels().to_vec(),
            spec.weights().to_vec(),
            budgets.clone(),
        )?;
    }
    if let Some(points) = args.grid {
        manifest.flag("--grid", points);
    }

    let grid = GridConfig::automatic(&spec, args.grid)?;
    let grids = vec![grid; spec.subchannels().len()];
    let hulls = build_hulls_parallel(&spec, &grids, worker_cap()?)?;
    let result = solve(&spec, &hulls, &SolverConfig::default())?;

    if let Some(prefix) = &args.csv {
        write_allocation_csv(prefix, &result.allocation, spec.users(), &mut manifest)?;
        write_hull_csvs(prefix, &hulls, spec.users(), &mut manifest)?;
    }

    let grid_points = hulls.iter().map(|h| h.grid_len()).collect();
    print_json(&OptimizeOutput {
        schema: SCHEMA_VERSION,
        manifest,
        grid_points,
        result,
    })?;
    Ok(Outcome::Success)
}

/// Step-plot samples of the piecewise-flat allocation: two rows per piece
/// (entry and exit frequency, same PSD vector).
fn write_allocation_csv(
    prefix: &str,
    allocation: &SpectrumAllocation,
    users: usize,
    manifest: &mut RunManifest,
) -> Result<()> {
    let mut header = String::from("f");
    for i in 1..=users {
        header.push_str(&format!(",P_{i}"));
    }
    let rows = allocation.pieces.iter().flat_map(|piece| {
        let psd = piece
            .psd
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(",");
        [
            format!("{},{psd}", piece.start),
            format!("{},{psd}", piece.end),
        ]
    });
    let path = format!("{prefix}_allocation.csv");
    write_csv(&path, &header, rows)?;
    manifest.output(path);
    Ok(())
}

/// Per-sub-channel envelope sections: every lattice PSD with its raw
/// weighted rate and envelope value.
fn write_hull_csvs(
    prefix: &str,
    hulls: &[HullFunction],
    users: usize,
    manifest: &mut RunManifest,
) -> Result<()> {
    let mut header = String::new();
    for i in 1..=users {
        header.push_str(&format!("P_{i},"));
    }
    header.push_str("R,R_star");
    for hull in hulls {
        let path = format!("{prefix}_hull_{}.csv", hull.subchannel());
        let rows = (0..hull.grid_len()).map(|g| {
            let psd = hull.grid_psd(g);
            let raw = hull.grid_raw(g);
            // Facets exist up to three active users; beyond that the
            // monotonized lattice value is the envelope's exact value at
            // lattice points anyway.
            let star = hull
                .evaluate(&psd)
                .unwrap_or_else(|_| hull.grid_monotone(g));
            let mut row = String::new();
            for v in &psd {
                row.push_str(&v.to_string());
                row.push(',');
            }
            row.push_str(&format!("{raw},{star}"));
            row
        });
        write_csv(&path, &header, rows)?;
        manifest.output(path);
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// verify

#[derive(Serialize)]
struct ConverseCheck {
    /// Brute-force value minus solver value; a large positive number means
    /// the lattice found something the solver missed.
    oracle_minus_solver: f64,
    tolerance: f64,
    pass: bool,
}

#[derive(Serialize)]
struct DualityCheck {
    gap: f64,
    bound: f64,
    evaluations: usize,
    pass: bool,
}

#[derive(Serialize)]
struct VerifyReport {
    solver: OptimizationResult,
    oracle: OracleOutcome,
    converse: ConverseCheck,
    duality: DualityCheck,
    properties: PropertyReport,
    all_passed: bool,
}

#[derive(Serialize)]
struct VerifyOutput {
    schema: u32,
    manifest: RunManifest,
    report: VerifyReport,
}

pub fn verify(args: &VerifyArgs, stamp: bool) -> Result<Outcome> {
    let spec = load_spec(&args.spec)?;
    let mut manifest = RunManifest::new("verify", Some(&args.spec), stamp)?;
    let mut config = OracleConfig::for_users(spec.users());
    if let Some(levels) = args.levels {
        manifest.flag("--levels", levels);
        config.levels = levels;
    }
    if let Some(splits) = args.splits {
        manifest.flag("--splits", splits);
        config.splits = splits;
    }
    manifest.flag("--seed", args.seed);

    let grid = GridConfig::automatic(&spec, None)?;
    let grids = vec![grid; spec.subchannels().len()];
    let hulls = build_hulls_parallel(&spec, &grids, worker_cap()?)?;
    let result = solve(&spec, &hulls, &SolverConfig::default())?;
    let oracle = exhaustive_best(&spec, &config)?;
    let gap = duality_gap(&spec, &hulls, &result, &SweepConfig::default())?;
    let properties = property_suite(args.seed, &SuiteCounts::default());

    let converse = ConverseCheck {
        oracle_minus_solver: oracle.value - result.value,
        tolerance: oracle.tolerance,
        pass: oracle.value - result.value <= oracle.tolerance + 1e-9,
    };
    let duality = DualityCheck {
        gap: gap.gap,
        bound: gap.dual_bound,
        evaluations: gap.evaluations,
        pass: gap.gap >= -1e-9 && gap.gap <= 1e-6 * (1.0 + result.value.abs()),
    };
    let all_passed = converse.pass && duality.pass && properties.all_passed();

    print_json(&VerifyOutput {
        schema: SCHEMA_VERSION,
        manifest,
        report: VerifyReport {
            solver: result,
            oracle,
            converse,
            duality,
            properties,
            all_passed,
        },
    })?;
    if all_passed {
        Ok(Outcome::Success)
    } else {
        Ok(Outcome::ChecksFailed)
    }
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Serialize)]
struct SweepSummary {
    alpha: f64,
    p_f: Option<f64>,
    p_h: Option<f64>,
    crossover: Option<f64>,
    region_rows: usize,
    curve_rows: usize,
}

#[derive(Serialize)]
struct SweepOutput {
    schema: u32,
    manifest: RunManifest,
    summary: SweepSummary,
}

pub fn sweep(args: &SweepArgs, stamp: bool) -> Result<Outcome> {
    if !(args.alpha > 0.0 && args.alpha.is_finite()) {
        bail!("--alpha must be a positive finite number");
    }
    if args.alpha_steps < 2 {
        bail!("--alpha-steps must be at least 2");
    }
    if args.power_steps < 1 {
        bail!("--power-steps must be at least 1");
    }
    let mut manifest = RunManifest::new("sweep", None, stamp)?;
    manifest.flag("--alpha", args.alpha);
    manifest.flag("--alpha-steps", args.alpha_steps);
    manifest.flag("--power-steps", args.power_steps);

    // Regime boundary over the weak-coupling range: tangent powers bracket
    // the crossover, all three curves blow up as the coupling vanishes.
    let (lo, hi) = (0.02, 0.48);
    let region_rows = (0..args.alpha_steps)
        .map(|i| {
            let alpha = lo + (hi - lo) * i as f64 / (args.alpha_steps - 1) as f64;
            let t = solve_tangency(alpha)?;
            Ok(format!("{alpha},{},{},{}", t.p_f, t.crossover, t.p_h))
        })
        .collect::<Result<Vec<_>>>()?;
    let region_path = format!("{}_region.csv", args.csv);
    write_csv(&region_path, "alpha,p_f,p_0,p_h", region_rows.into_iter())?;
    manifest.output(region_path);

    // Envelope section at the requested coupling.
    let envelope = SymmetricEnvelope::new(args.alpha)?;
    let p_max = match args.power_max {
        Some(p) => {
            manifest.flag("--power-max", p);
            if !(p > 0.0 && p.is_finite()) {
                bail!("--power-max must be a positive finite number");
            }
            p
        }
        None => envelope.tangency().map(|t| 1.5 * t.p_h).unwrap_or(100.0),
    };
    let curve_rows = (0..=args.power_steps)
        .map(|i| {
            let p = p_max * i as f64 / args.power_steps as f64;
            let f = f_star(args.alpha, p)?;
            let h = h_star(p)?;
            let r = envelope.value(p)?.value;
            Ok(format!("{p},{f},{h},{r}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let curves_path = format!("{}_curves.csv", args.csv);
    write_csv(
        &curves_path,
        "p,f_star,h_star,r_star",
        curve_rows.into_iter(),
    )?;
    manifest.output(curves_path);

    let t = envelope.tangency();
    print_json(&SweepOutput {
        schema: SCHEMA_VERSION,
        manifest,
        summary: SweepSummary {
            alpha: args.alpha,
            p_f: t.map(|t| t.p_f),
            p_h: t.map(|t| t.p_h),
            crossover: t.map(|t| t.crossover),
            region_rows: args.alpha_steps,
            curve_rows: args.power_steps + 1,
        },
    })?;
    Ok(Outcome::Success)
}
