//! Upper convex-hull facets of a lifted point set in up to four dimensions.
//!
//! Input: points `P_k` in K-dimensional power space (K in {1,2,3}) with
//! scalar values `z_k`. The lifted set `(P_k, z_k)` lives in d = K+1
//! dimensions; this module computes the facets of its convex hull whose
//! outward normals point upward (positive value component). Each such facet
//! is an affine majorant `z = offset + gradient . P` that is tight on the
//! facet's vertices, and the concave envelope of the data is the pointwise
//! minimum of these majorants over the box.
//!
//! The algorithm is the classic incremental beneath-beyond construction:
//! grow the hull one point at a time, replace the facets visible from the
//! new point by a cone from the point over the horizon ridges. Determinism
//! comes from fixed insertion order and index-ordered scans; robustness from
//! pre-scaling every axis to the unit box so one absolute epsilon is
//! meaningful everywhere.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub(crate) enum HullError {
    #[error("hull construction supports 1..=3 power dimensions, got {0}")]
    BadDimension(usize),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("points do not span the power space (axis {axis} is constant)")]
    DegenerateAxis { axis: usize },
    #[error("non-finite input coordinate")]
    NonFinite,
}

/// One upper facet, reported in the caller's original coordinates.
#[derive(Debug, Clone)]
pub(crate) struct UpperFacet {
    /// Indices of the facet's vertices in the input point set, ascending.
    pub vertices: Vec<usize>,
    /// Power-space gradient of the facet's affine majorant.
    pub gradient: Vec<f64>,
    /// Constant term: the majorant is `z(P) = offset + gradient . P`.
    pub offset: f64,
}

/// A point strictly further than this (in unit-box scale) from a facet's
/// plane is outside it; anything closer is treated as on the plane. Lattice
/// inputs put many points exactly on shared planes, so the slack matters.
const EPS: f64 = 1e-9;

/// Upper-hull facets of the lifted points `(points[k], values[k])`.
///
/// Points must affinely span the power space (every axis takes at least two
/// distinct values); callers collapse fixed axes before lifting. The output
/// is sorted by vertex list for determinism.
pub(crate) fn upper_facets(
    points: &[Vec<f64>],
    values: &[f64],
) -> Result<Vec<UpperFacet>, HullError> {
    let k = points.first().map_or(0, Vec::len);
    if !(1..=3).contains(&k) {
        return Err(HullError::BadDimension(k));
    }
    let d = k + 1;
    if points.len() < d {
        return Err(HullError::TooFewPoints {
            needed: d,
            got: points.len(),
        });
    }
    if points
        .iter()
        .flat_map(|p| p.iter())
        .chain(values.iter())
        .any(|v| !v.is_finite())
    {
        return Err(HullError::NonFinite);
    }

    // Scale every axis to [0, 1]. A flat value axis is allowed (constant
    // function): its scale collapses to 1 and the hull becomes a slab.
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for (p, &z) in points.iter().zip(values) {
        for a in 0..k {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
        lo[k] = lo[k].min(z);
        hi[k] = hi[k].max(z);
    }
    let mut scale = vec![1.0f64; d];
    for a in 0..d {
        let range = hi[a] - lo[a];
        if range <= 0.0 {
            if a < k {
                return Err(HullError::DegenerateAxis { axis: a });
            }
            scale[a] = 1.0;
        } else {
            scale[a] = range;
        }
    }
    let lifted: Vec<Vec<f64>> = points
        .iter()
        .zip(values)
        .map(|(p, &z)| {
            let mut q = Vec::with_capacity(d);
            for a in 0..k {
                q.push((p[a] - lo[a]) / scale[a]);
            }
            q.push((z - lo[k]) / scale[k]);
            q
        })
        .collect();

    let facets = hull_facets(&lifted, d)?;

    // Keep facets whose outward unit normal points up, and translate each
    // back to an affine majorant in the original coordinates:
    //   n . q = o  with  q_a = (x_a - lo_a)/s_a,  q_k = (z - lo_k)/s_k
    //   =>  z = lo_k + (s_k/n_k) (o - sum_a n_a (x_a - lo_a)/s_a).
    let mut out = Vec::new();
    for f in facets {
        let nz = f.normal[k];
        if nz <= EPS {
            continue;
        }
        let mut gradient = Vec::with_capacity(k);
        let mut offset = lo[k] + scale[k] * f.offset / nz;
        for a in 0..k {
            let g = -scale[k] * f.normal[a] / (nz * scale[a]);
            offset -= g * lo[a];
            gradient.push(g);
        }
        let mut vertices = f.vertices;
        vertices.sort_unstable();
        out.push(UpperFacet {
            vertices,
            gradient,
            offset,
        });
    }
    out.sort_by(|a, b| a.vertices.cmp(&b.vertices));
    Ok(out)
}

struct RawFacet {
    /// d vertex indices; `neighbors[i]` is the facet across the ridge
    /// obtained by dropping `vertices[i]`.
    vertices: Vec<usize>,
    neighbors: Vec<usize>,
    normal: Vec<f64>,
    offset: f64,
    alive: bool,
}

/// Full convex hull of `pts` (unit-box scaled, dimension `d`), as simplicial
/// facets with outward unit normals. Degenerate (flat) inputs yield the two
/// orientations of the common plane, so the caller still sees the majorant.
///
/// Each insertion removes not just the facets the new point strictly sees
/// but also, transitively, their neighbors the point is coplanar with
/// (distance > -EPS). That expansion is what keeps lattice inputs safe: it
/// guarantees every horizon ridge borders a facet the point is strictly
/// below, so every new cone facet has thickness >= EPS and the polytope
/// never goes locally non-convex inside the tolerance band.
fn hull_facets(pts: &[Vec<f64>], d: usize) -> Result<Vec<RawFacet>, HullError> {
    let n = pts.len();

    // Greedy max-volume initial simplex: start from the lexicographically
    // smallest point, then repeatedly add the point with the largest
    // Gram-determinant volume over the affine span so far.
    let mut simplex = vec![lex_min(pts)];
    while simplex.len() < d + 1 {
        let mut best = (0.0f64, usize::MAX);
        for cand in 0..n {
            if simplex.contains(&cand) {
                continue;
            }
            let vol = gram_volume_sq(pts, &simplex, cand);
            if vol > best.0 {
                best = (vol, cand);
            }
        }
        if best.1 == usize::MAX || best.0 <= 1e-24 {
            break;
        }
        simplex.push(best.1);
    }

    if simplex.len() < d + 1 {
        // All points lie (within tolerance) in one hyperplane. If it spans
        // the first d-1 axes the data is an affine function of the power
        // coordinates: report that single plane (both orientations, so the
        // upward one survives the caller's filter).
        if simplex.len() < d {
            return Err(HullError::TooFewPoints {
                needed: d,
                got: simplex.len(),
            });
        }
        let (normal, offset) = plane_through(pts, &simplex, d);
        let mut flipped = normal.clone();
        for v in flipped.iter_mut() {
            *v = -*v;
        }
        return Ok(vec![
            RawFacet {
                vertices: simplex.clone(),
                neighbors: vec![usize::MAX; d],
                normal,
                offset,
                alive: true,
            },
            RawFacet {
                vertices: simplex,
                neighbors: vec![usize::MAX; d],
                normal: flipped,
                offset: -offset,
                alive: true,
            },
        ]);
    }

    // Interior reference point: centroid of the initial simplex.
    let mut interior = vec![0.0f64; d];
    for &v in &simplex {
        for a in 0..d {
            interior[a] += pts[v][a];
        }
    }
    for v in interior.iter_mut() {
        *v /= (d + 1) as f64;
    }

    let oriented_plane = |verts: &[usize]| -> (Vec<f64>, f64) {
        let (mut normal, mut offset) = plane_through(pts, verts, d);
        if dot(&normal, &interior) > offset {
            for v in normal.iter_mut() {
                *v = -*v;
            }
            offset = -offset;
        }
        (normal, offset)
    };

    // The initial simplex's d+1 facets: facet i omits simplex vertex i, and
    // its ridge dropping simplex vertex j is shared with facet j.
    let mut facets: Vec<RawFacet> = Vec::new();
    for omit in 0..=d {
        let verts: Vec<usize> = simplex
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != omit)
            .map(|(_, &v)| v)
            .collect();
        let neighbors: Vec<usize> = (0..=d).filter(|&j| j != omit).collect();
        let (normal, offset) = oriented_plane(&verts);
        facets.push(RawFacet {
            vertices: verts,
            neighbors,
            normal,
            offset,
            alive: true,
        });
    }

    // Insert the remaining points in index order.
    let mut dist_cache: Vec<f64> = Vec::new();
    for p in 0..n {
        if simplex.contains(&p) {
            continue;
        }
        dist_cache.clear();
        dist_cache.extend(facets.iter().map(|f| {
            if f.alive {
                dot(&f.normal, &pts[p]) - f.offset
            } else {
                f64::NEG_INFINITY
            }
        }));
        let mut in_set: Vec<bool> = dist_cache.iter().map(|&dist| dist > EPS).collect();
        if !in_set.iter().any(|&v| v) {
            continue;
        }
        // Expand through coplanar neighbors so the removed region's boundary
        // facets all lie strictly below the point.
        let mut queue: Vec<usize> = (0..facets.len()).filter(|&i| in_set[i]).collect();
        while let Some(fi) = queue.pop() {
            for k in 0..d {
                let g = facets[fi].neighbors[k];
                if !in_set[g] && dist_cache[g] > -EPS {
                    in_set[g] = true;
                    queue.push(g);
                }
            }
        }

        // Horizon: ridges from an in-set facet to an out-of-set neighbor.
        let mut horizon: Vec<(Vec<usize>, usize)> = Vec::new();
        for fi in 0..facets.len() {
            if !in_set[fi] {
                continue;
            }
            for k in 0..d {
                let g = facets[fi].neighbors[k];
                if !in_set[g] {
                    let ridge: Vec<usize> = facets[fi]
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != k)
                        .map(|(_, &v)| v)
                        .collect();
                    horizon.push((ridge, g));
                }
            }
        }
        if horizon.is_empty() {
            continue;
        }
        for (fi, f) in facets.iter_mut().enumerate() {
            if in_set[fi] {
                f.alive = false;
            }
        }

        // Cone from p over the horizon. Pair the internal ridges (those
        // containing p) between cone facets via the shared d-2 base
        // vertices; repoint the surviving outside neighbors.
        let mut pairing: BTreeMap<Vec<usize>, (usize, usize)> = BTreeMap::new();
        for (ridge, outside) in horizon {
            let id = facets.len();
            let mut verts = ridge.clone();
            verts.push(p);
            let (normal, offset) = oriented_plane(&verts);
            let mut neighbors = vec![usize::MAX; d];
            // Slot layout mirrors `verts`: dropping verts[i] for i < d-1
            // leaves a p-containing ridge; dropping p leaves the horizon
            // ridge, whose neighbor is the outside facet.
            neighbors[d - 1] = outside;
            // The outside facet's slot across this ridge is the one whose
            // dropped vertex is not in the ridge; repoint it at the cone.
            for k in 0..d {
                let dropped = facets[outside].vertices[k];
                if !ridge.contains(&dropped) {
                    facets[outside].neighbors[k] = id;
                    break;
                }
            }
            for drop_i in 0..(d - 1) {
                let mut key: Vec<usize> = ridge
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop_i)
                    .map(|(_, &v)| v)
                    .collect();
                key.sort_unstable();
                match pairing.remove(&key) {
                    None => {
                        pairing.insert(key, (id, drop_i));
                    }
                    Some((other_id, other_slot)) => {
                        neighbors[drop_i] = other_id;
                        facets[other_id].neighbors[other_slot] = id;
                    }
                }
            }
            facets.push(RawFacet {
                vertices: verts,
                neighbors,
                normal,
                offset,
                alive: true,
            });
        }
        debug_assert!(pairing.is_empty(), "cone ridges must pair up");
        debug_assert!(facets
            .iter()
            .filter(|f| f.alive)
            .all(|f| f.neighbors.iter().all(|&nb| facets[nb].alive)));
    }

    facets.retain(|f| f.alive);
    Ok(facets)
}

fn lex_min(pts: &[Vec<f64>]) -> usize {
    let mut best = 0usize;
    for i in 1..pts.len() {
        if pts[i]
            .iter()
            .zip(&pts[best])
            .find_map(|(a, b)| {
                if a < b {
                    Some(true)
                } else if a > b {
                    Some(false)
                } else {
                    None
                }
            })
            .unwrap_or(false)
        {
            best = i;
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared (scaled) volume of the simplex spanned by `base` plus `cand`,
/// via the Gram determinant of the edge vectors from the first base point.
fn gram_volume_sq(pts: &[Vec<f64>], base: &[usize], cand: usize) -> f64 {
    let origin = &pts[base[0]];
    let mut edges: Vec<Vec<f64>> = base[1..].iter().map(|&v| sub(&pts[v], origin)).collect();
    edges.push(sub(&pts[cand], origin));
    let m = edges.len();
    let mut gram = vec![vec![0.0f64; m]; m];
    for i in 0..m {
        for j in 0..m {
            gram[i][j] = dot(&edges[i], &edges[j]);
        }
    }
    det(&gram)
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Hyperplane through `d` affinely independent points: unit normal and
/// offset with `normal . x = offset` on the plane. The normal is the
/// generalized cross product of the edge vectors.
fn plane_through(pts: &[Vec<f64>], verts: &[usize], d: usize) -> (Vec<f64>, f64) {
    debug_assert_eq!(verts.len(), d);
    let origin = &pts[verts[0]];
    let edges: Vec<Vec<f64>> = verts[1..].iter().map(|&v| sub(&pts[v], origin)).collect();
    let mut normal = Vec::with_capacity(d);
    let mut sign = 1.0f64;
    for skip in 0..d {
        let minor: Vec<Vec<f64>> = edges
            .iter()
            .map(|e| {
                e.iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, &v)| v)
                    .collect()
            })
            .collect();
        normal.push(sign * det(&minor));
        sign = -sign;
    }
    let len = dot(&normal, &normal).sqrt_or_one();
    for v in normal.iter_mut() {
        *v /= len;
    }
    let offset = dot(&normal, origin);
    (normal, offset)
}

/// Determinant of a small square matrix (sizes 0..=3 suffice here).
fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        4 => {
            let mut total = 0.0;
            let mut sign = 1.0;
            for c in 0..4 {
                let minor: Vec<Vec<f64>> = (1..4)
                    .map(|r| (0..4).filter(|&cc| cc != c).map(|cc| m[r][cc]).collect())
                    .collect();
                total += sign * m[0][c] * det(&minor);
                sign = -sign;
            }
            total
        }
        _ => unreachable!("determinants above 4x4 are never needed"),
    }
}

trait SqrtOrOne {
    fn sqrt_or_one(self) -> f64;
}

impl SqrtOrOne for f64 {
    fn sqrt_or_one(self) -> f64 {
        let r = crate::math::sqrt(self);
        if r > 0.0 && r.is_finite() {
            r
        } else {
            1.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval_min(facets: &[UpperFacet], p: &[f64]) -> f64 {
        facets
            .iter()
            .map(|f| f.offset + dot(&f.gradient, p))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn concave_curve_keeps_every_point() {
        // Strictly concave 1-D data: each consecutive pair forms a facet and
        // the facet minimum reproduces the data at the samples.
        let points: Vec<Vec<f64>> = (0..9).map(|i| vec![i as f64]).collect();
        let values: Vec<f64> = points.iter().map(|p| (1.0 + p[0]).ln()).collect();
        let facets = upper_facets(&points, &values).expect("hull");
        assert_eq!(facets.len(), 8, "consecutive chords only");
        for (p, &z) in points.iter().zip(&values) {
            assert!((eval_min(&facets, p) - z).abs() < 1e-9);
        }
    }

    #[test]
    fn dip_is_bridged_by_a_chord() {
        // A non-concave dip in the middle must be strictly below the hull
        // and absent from every facet's vertex list.
        let points: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64]).collect();
        let values = vec![0.0, 1.0, 0.2, 1.5, 1.6];
        let facets = upper_facets(&points, &values).expect("hull");
        assert!(facets.iter().all(|f| !f.vertices.contains(&2)));
        let at_dip = eval_min(&facets, &[2.0]);
        assert!(at_dip > 0.2 + 0.5, "chord bridges the dip, got {at_dip}");
    }

    #[test]
    fn two_points_make_one_chord() {
        let facets =
            upper_facets(&[vec![0.0], vec![2.0]], &[1.0, 3.0]).expect("degenerate hull works");
        assert_eq!(facets.len(), 1);
        assert!((eval_min(&facets, &[1.0]) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn pyramid_roof_has_four_upper_facets() {
        // Square corners at height 0 plus a centre peak: the upper hull is
        // the four roof triangles; the floor is not reported.
        let points = vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 2.0],
            vec![2.0, 2.0],
            vec![1.0, 1.0],
        ];
        let values = vec![0.0, 0.0, 0.0, 0.0, 1.0];
        let facets = upper_facets(&points, &values).expect("hull");
        assert_eq!(facets.len(), 4);
        assert!(facets.iter().all(|f| f.vertices.contains(&4)));
        assert!((eval_min(&facets, &[1.0, 1.0]) - 1.0).abs() < 1e-9);
        assert!((eval_min(&facets, &[0.5, 0.5]) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn three_dimensional_concave_lattice_is_tight() {
        // z = -(x^2 + y^2 + w^2) on a 4^3 lattice: strictly concave, so the
        // hull must be tight at every lattice point and dominate midpoints.
        let mut points = Vec::new();
        for x in 0..4 {
            for y in 0..4 {
                for w in 0..4 {
                    points.push(vec![x as f64, y as f64, w as f64]);
                }
            }
        }
        let values: Vec<f64> = points
            .iter()
            .map(|p| -(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]))
            .collect();
        let facets = upper_facets(&points, &values).expect("hull");
        assert!(!facets.is_empty());
        for (p, &z) in points.iter().zip(&values) {
            let e = eval_min(&facets, p);
            assert!(e >= z - 1e-8, "dominance failed at {p:?}: {e} < {z}");
        }
        // Strict concavity: every lattice point is on the envelope.
        for (p, &z) in points.iter().zip(&values) {
            assert!(
                (eval_min(&facets, p) - z).abs() < 1e-7,
                "not tight at {p:?}"
            );
        }
        // Between samples the piecewise-linear hull sits below the strictly
        // concave function, by at most the per-cell curvature gap (3/4 here).
        let q = [1.5, 1.5, 1.5];
        let fq = -(3.0 * 1.5 * 1.5);
        let e = eval_min(&facets, &q);
        assert!(e <= fq + 1e-9, "{e} should not exceed {fq}");
        assert!(e >= fq - 0.76, "{e} too far below {fq}");
    }

    #[test]
    fn flat_data_yields_single_plane() {
        // Affine data: hull is one plane (reported once after filtering).
        let points = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        let values = vec![1.0, 2.0, 3.0, 4.0];
        let facets = upper_facets(&points, &values).expect("hull");
        assert!(!facets.is_empty());
        for (p, &z) in points.iter().zip(&values) {
            assert!((eval_min(&facets, p) - z).abs() < 1e-9);
        }
    }

    #[test]
    fn facet_minimum_matches_linear_program_on_nonconcave_data() {
        // Independent route: the concave envelope value at q is also the LP
        //   max sum(c_k z_k)  s.t.  sum(c_k P_k) = q, sum(c_k) = 1, c >= 0.
        // Run both on a wiggly (non-concave) 3-D lattice and compare.
        use crate::simplex::{maximize, Constraint, ConstraintKind};
        let mut points = Vec::new();
        for x in 0..4 {
            for y in 0..4 {
                for w in 0..4 {
                    points.push(vec![x as f64, y as f64, w as f64]);
                }
            }
        }
        let values: Vec<f64> = points
            .iter()
            .map(|p| {
                let s = p[0] + 0.7 * p[1] + 1.3 * p[2];
                (1.0 + s).ln() + 0.4 * (2.1 * p[0]).sin() * (1.7 * p[1]).cos() - 0.1 * p[2] * p[0]
            })
            .collect();
        let facets = upper_facets(&points, &values).expect("hull");
        for q in [
            [0.5, 0.5, 0.5],
            [1.25, 2.5, 0.75],
            [3.0, 0.25, 2.5],
            [2.0, 2.0, 2.0],
            [0.0, 3.0, 1.5],
        ] {
            let geometric = eval_min(&facets, &q);
            let mut constraints: Vec<Constraint> = (0..3)
                .map(|a| Constraint {
                    coeffs: points.iter().map(|p| p[a]).collect(),
                    kind: ConstraintKind::Eq,
                    rhs: q[a],
                })
                .collect();
            constraints.push(Constraint {
                coeffs: vec![1.0; points.len()],
                kind: ConstraintKind::Eq,
                rhs: 1.0,
            });
            let lp = maximize(&values, &constraints).expect("solvable");
            assert!(
                (geometric - lp.objective).abs() < 1e-7,
                "at {q:?}: facets {geometric} vs LP {}",
                lp.objective
            );
        }
    }

    #[test]
    fn rejects_constant_axis() {
        let points = vec![vec![0.0, 1.0], vec![1.0, 1.0], vec![2.0, 1.0]];
        let values = vec![0.0, 1.0, 0.5];
        assert!(matches!(
            upper_facets(&points, &values),
            Err(HullError::DegenerateAxis { axis: 1 })
        ));
    }
}
