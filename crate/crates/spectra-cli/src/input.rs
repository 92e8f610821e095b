//! Channel-spec ingestion: a single JSON document in either normalized form
//! (`alpha` + `noise`) or raw form (`H2` + `sigma`, divided out by the
//! direct gains on load).
//!
//! Schema:
//! ```json
//! {
//!   "users": 2,
//!   "subchannels": [
//!     { "bandwidth": 0.5, "alpha": [[1.0, 0.1], [0.1, 1.0]], "noise": [1.0, 1.0] }
//!   ],
//!   "weights": [1.0, 1.0],
//!   "budgets": [40.0, 40.0]
//! }
//! ```
//! `alpha` rows are indexed by transmitter, columns by receiver; the diagonal
//! is ignored. The raw variant replaces `alpha`/`noise` with `H2` (squared
//! gains, diagonal included) and `sigma` (noise powers). Bandwidths must sum
//! to 1 within 1e-9 and are rescaled to an exact partition.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use spectra_core::channel::{normalize, ChannelSpec, RawChannelSpec, RawSubchannel, Subchannel};

const BANDWIDTH_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDocument {
    users: usize,
    subchannels: Vec<SubchannelEntry>,
    weights: Vec<f64>,
    budgets: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubchannelEntry {
    bandwidth: f64,
    #[serde(default)]
    alpha: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    noise: Option<Vec<f64>>,
    #[serde(default, rename = "H2")]
    h2: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    sigma: Option<Vec<f64>>,
}

/// Loads and validates a channel spec from `path`.
pub fn load_spec(path: &Path) -> Result<ChannelSpec> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading channel spec {}", path.display()))?;
    let doc: ChannelDocument = serde_json::from_str(&text)
        .with_context(|| format!("parsing channel spec {}", path.display()))?;
    build_spec(doc).with_context(|| format!("validating channel spec {}", path.display()))
}

fn build_spec(doc: ChannelDocument) -> Result<ChannelSpec> {
    let users = doc.users;
    if users == 0 {
        bail!("\"users\" must be positive");
    }
    if doc.subchannels.is_empty() {
        bail!("\"subchannels\" must not be empty");
    }

    let sum: f64 = doc.subchannels.iter().map(|sc| sc.bandwidth).sum();
    if !((sum - 1.0).abs() <= BANDWIDTH_SUM_TOL) {
        bail!("sub-channel bandwidths sum to {sum}, expected 1 within {BANDWIDTH_SUM_TOL}");
    }

    let normalized_form = doc.subchannels.iter().all(|sc| {
        sc.alpha.is_some() && sc.noise.is_some() && sc.h2.is_none() && sc.sigma.is_none()
    });
    let raw_form = doc.subchannels.iter().all(|sc| {
        sc.h2.is_some() && sc.sigma.is_some() && sc.alpha.is_none() && sc.noise.is_none()
    });

    if normalized_form {
        let mut subchannels = Vec::with_capacity(doc.subchannels.len());
        for (m, sc) in doc.subchannels.into_iter().enumerate() {
            let mut alpha = flatten_matrix(sc.alpha.as_deref().unwrap(), users, "alpha", m)?;
            for i in 0..users {
                // Self-interference is meaningless; the stored diagonal is a
                // fixed convention, whatever the document says.
                alpha[i * users + i] = 1.0;
            }
            subchannels.push(Subchannel {
                bandwidth: sc.bandwidth / sum,
                alpha,
                noise: sc.noise.unwrap(),
            });
        }
        Ok(ChannelSpec::new(
            users,
            subchannels,
            doc.weights,
            doc.budgets,
        )?)
    } else if raw_form {
        let mut subchannels = Vec::with_capacity(doc.subchannels.len());
        for (m, sc) in doc.subchannels.into_iter().enumerate() {
            subchannels.push(RawSubchannel {
                bandwidth: sc.bandwidth / sum,
                h2: flatten_matrix(sc.h2.as_deref().unwrap(), users, "H2", m)?,
                sigma: sc.sigma.unwrap(),
            });
        }
        Ok(normalize(&RawChannelSpec {
            users,
            subchannels,
            weights: doc.weights,
            budgets: doc.budgets,
        })?)
    } else {
        bail!(
            "every sub-channel must use either \"alpha\"+\"noise\" or \"H2\"+\"sigma\", \
             uniformly across the document"
        );
    }
}

/// Row-major flatten of a K x K matrix given as rows indexed by transmitter.
fn flatten_matrix(rows: &[Vec<f64>], users: usize, what: &str, m: usize) -> Result<Vec<f64>> {
    if rows.len() != users {
        bail!(
            "sub-channel {m}: \"{what}\" has {} rows, expected {users}",
            rows.len()
        );
    }
    let mut out = Vec::with_capacity(users * users);
    for (j, row) in rows.iter().enumerate() {
        if row.len() != users {
            bail!(
                "sub-channel {m}: \"{what}\" row {j} has {} entries, expected {users}",
                row.len()
            );
        }
        out.extend_from_slice(row);
    }
    Ok(out)
}
