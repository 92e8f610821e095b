//! Bracketed scalar root finding: sign-change scans over panels plus plain
//! bisection. Deterministic and derivative-free; callers validate roots
//! against problem-specific criteria when a scan produces several.

use alloc::vec::Vec;

/// A bracket `[lo, hi]` with `f(lo)` and `f(hi)` of opposite (or zero) sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

/// Splits `[lo, hi]` into `panels` equal panels and returns every panel whose
/// endpoints straddle zero. An exact zero on a panel edge is attributed to
/// the panel on its left (a zero at `lo` itself is not reported).
pub fn scan_sign_changes<F: FnMut(f64) -> f64>(
    lo: f64,
    hi: f64,
    panels: usize,
    mut f: F,
) -> Vec<Bracket> {
    debug_assert!(panels >= 1 && hi > lo);
    let mut out = Vec::new();
    let step = (hi - lo) / panels as f64;
    let mut x_prev = lo;
    let mut f_prev = f(lo);
    for k in 1..=panels {
        let x = if k == panels {
            hi
        } else {
            lo + step * k as f64
        };
        let fx = f(x);
        let straddles = f_prev != 0.0 && fx != 0.0 && (f_prev < 0.0) != (fx < 0.0);
        if fx == 0.0 || straddles {
            out.push(Bracket { lo: x_prev, hi: x });
        }
        x_prev = x;
        f_prev = fx;
    }
    out
}

/// Bisects a sign-change bracket down to width `xtol` (or an exact zero).
/// Returns the midpoint of the final bracket.
pub fn bisect<F: FnMut(f64) -> f64>(bracket: Bracket, xtol: f64, mut f: F) -> f64 {
    let (mut lo, mut hi) = (bracket.lo, bracket.hi);
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    // 200 iterations cut any double-precision interval to one ulp; xtol just
    // lets callers stop earlier.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= xtol || mid <= lo || mid >= hi {
            return mid;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_simple_root() {
        let brackets = scan_sign_changes(0.0, 4.0, 16, |x| x * x - 2.0);
        assert_eq!(brackets.len(), 1);
        let root = bisect(brackets[0], 1e-14, |x| x * x - 2.0);
        assert!((root - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn finds_all_roots_of_a_cubic() {
        // Roots at 1, 2, 3.
        let f = |x: f64| (x - 1.0) * (x - 2.0) * (x - 3.0);
        let brackets = scan_sign_changes(0.0, 4.0, 64, f);
        assert_eq!(brackets.len(), 3);
        let roots: alloc::vec::Vec<f64> =
            brackets.into_iter().map(|b| bisect(b, 1e-14, f)).collect();
        for (root, expect) in roots.iter().zip([1.0, 2.0, 3.0]) {
            assert!((root - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn no_sign_change_yields_no_brackets() {
        let brackets = scan_sign_changes(0.0, 1.0, 32, |x| x * x + 1.0);
        assert!(brackets.is_empty());
    }
}
