//! A uniform-grid spatial index over sphere-point clouds for nearest-neighbor
//! queries in the chordal metric.
//!
//! Finite points of moderate modulus are bucketed by a Euclidean cell grid;
//! points near ∞ (modulus above [`FAR_BOUND`], chordally within ~2e-4 of ∞)
//! live in a separate linear bucket. Queries expand square rings of cells and
//! stop once a chordal lower bound for all remaining rings exceeds the best
//! hit. Cells are visited by explicit coordinate loops — the hash map is
//! never iterated — and ties break by smallest point index, so results do not
//! depend on hash order or thread count.

use std::collections::HashMap;

use crate::sphere::{chordal_distance, SpherePoint};

/// Points with |z| above this modulus are treated as a single near-∞ cluster.
const FAR_BOUND: f64 = 1e4;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Debug)]
pub struct PlaneGrid {
    cell: f64,
    near: HashMap<(i64, i64), Vec<u32>>,
    far: Vec<u32>,
    points: Vec<SpherePoint>,
    /// Occupied cell bounding box (imin, imax, jmin, jmax), if any near cell.
    bbox: Option<(i64, i64, i64, i64)>,
}

fn is_near(p: &SpherePoint) -> Option<num_complex::Complex64> {
    p.as_complex().filter(|z| z.norm() <= FAR_BOUND)
}

impl PlaneGrid {
    /// Builds the index with an automatic cell size: roughly the mean
    /// point spacing over the cloud's bounding box.
    pub fn build_auto(points: Vec<SpherePoint>) -> Self {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut n = 0usize;
        for p in &points {
            if let Some(z) = is_near(p) {
                lo = (lo.0.min(z.re), lo.1.min(z.im));
                hi = (hi.0.max(z.re), hi.1.max(z.im));
                n += 1;
            }
        }
        let cell = if n == 0 {
            1.0
        } else {
            let (w, h) = (hi.0 - lo.0, hi.1 - lo.1);
            let area = (w * h).max(w.max(h).powi(2) * 1e-3);
            (area / n as f64).sqrt().clamp(1e-9, 1.0)
        };
        Self::build(points, cell)
    }

    /// Builds the index with an explicit Euclidean cell size.
    pub fn build(points: Vec<SpherePoint>, cell: f64) -> Self {
        assert!(cell > 0.0 && cell.is_finite(), "cell size must be positive");
        let mut near: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
        let mut far = Vec::new();
        let mut bbox: Option<(i64, i64, i64, i64)> = None;
        for (idx, p) in points.iter().enumerate() {
            match is_near(p) {
                Some(z) => {
                    let i = (z.re / cell).floor() as i64;
                    let j = (z.im / cell).floor() as i64;
                    near.entry((i, j)).or_default().push(idx as u32);
                    bbox = Some(match bbox {
                        None => (i, i, j, j),
                        Some((a, b, c, d)) => (a.min(i), b.max(i), c.min(j), d.max(j)),
                    });
                }
                None => far.push(idx as u32),
            }
        }
        Self {
            cell,
            near,
            far,
            points,
            bbox,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Nearest stored point to `q` in the chordal metric, excluding the
    /// stored index `skip` (for self-queries). Returns `(index, distance)`;
    /// ties go to the smallest index.
    pub fn nearest(&self, q: SpherePoint, skip: Option<u32>) -> Option<(u32, f64)> {
        let mut best: Option<(u32, f64)> = None;
        let consider = |idx: u32, best: &mut Option<(u32, f64)>| {
            if Some(idx) == skip {
                return;
            }
            let d = chordal_distance(q, self.points[idx as usize]);
            let better = match *best {
                None => true,
                Some((bi, bd)) => d < bd || (d == bd && idx < bi),
            };
            if better {
                *best = Some((idx, d));
            }
        };

        for &idx in &self.far {
            consider(idx, &mut best);
        }

        let Some((imin, imax, jmin, jmax)) = self.bbox else {
            return best;
        };
        let Some(zq) = is_near(&q) else {
            // Far query: everything near is chordally ~2/|q| away with little
            // structure a Euclidean grid could exploit; scan linearly.
            for idx in 0..self.points.len() as u32 {
                consider(idx, &mut best);
            }
            return best;
        };

        let i0 = (zq.re / self.cell).floor() as i64;
        let j0 = (zq.im / self.cell).floor() as i64;
        let kmax = [
            (i0 - imin).abs(),
            (imax - i0).abs(),
            (j0 - jmin).abs(),
            (jmax - j0).abs(),
        ]
        .into_iter()
        .max()
        .unwrap_or(0);

        // Rings closer than the bounding box contain no cells; start at the
        // box. A query much farther from the data than the data's own extent
        // would still crawl across empty ring cells, so scan flat instead.
        let dx = (imin - i0).max(i0 - imax).max(0);
        let dy = (jmin - j0).max(j0 - jmax).max(0);
        let k_start = dx.max(dy);
        if k_start > (imax - imin).max(jmax - jmin) + 1 {
            for idx in 0..self.points.len() as u32 {
                consider(idx, &mut best);
            }
            return best;
        }

        let s_q = zq.norm().hypot(1.0);
        let visit = |i: i64, j: i64, best: &mut Option<(u32, f64)>| {
            if i < imin || i > imax || j < jmin || j > jmax {
                return;
            }
            if let Some(bucket) = self.near.get(&(i, j)) {
                for &idx in bucket {
                    consider(idx, best);
                }
            }
        };

        for k in k_start..=kmax {
            // Chordal lower bound for any point in ring ≥ k: Euclidean
            // distance ≥ (k−1)·cell and |w| ≤ |q| + (k+1)·cell·√2, so
            //   d ≥ 2(k−1)c / (s(q)·(|q| + (k+1)c√2 + 1)),
            // which is nondecreasing in k — safe to stop on first failure.
            if k >= 2 {
                let lb = 2.0 * (k - 1) as f64 * self.cell
                    / (s_q * (zq.norm() + (k + 1) as f64 * self.cell * SQRT2 + 1.0));
                if let Some((_, bd)) = best {
                    if lb > bd {
                        break;
                    }
                }
            }
            if k == 0 {
                visit(i0, j0, &mut best);
            } else {
                for i in (i0 - k)..=(i0 + k) {
                    visit(i, j0 - k, &mut best);
                    visit(i, j0 + k, &mut best);
                }
                for j in (j0 - k + 1)..=(j0 + k - 1) {
                    visit(i0 - k, j, &mut best);
                    visit(i0 + k, j, &mut best);
                }
            }
        }
        best
    }

    /// Distance from `q` to the nearest stored point (∞ if the index is
    /// empty).
    pub fn distance_to(&self, q: SpherePoint) -> f64 {
        self.nearest(q, None).map_or(f64::INFINITY, |(_, d)| d)
    }
}
