//! Atomic approximations of the conformal measure, and the audits built on
//! them: Ahlfors-regularity slopes, overlap (separating-condition) sweeps,
//! box-counting dimension, and transfer-operator stationarity.
//!
//! The measure places an atom at every preimage point of a base point over a
//! window of tree depths `p ∈ [p_min, p_max]`, weighted by
//! `‖(f_u)′(y)‖^{−t}` and normalized. At the zero of pressure the per-level
//! totals are Θ(1), so a depth window is balanced without any auxiliary
//! slowly-varying weight function.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::exec::{flat_map_ordered, map_ordered};
use crate::numerics::{fit_line, log_sum_exp, pairwise_sum};
use crate::semigroup::GeneratorSystem;
use crate::spatial::PlaneGrid;
use crate::sphere::{chordal_distance, SpherePoint};
use crate::{Error, Result};

/// Which metric balls and distances use. Chordal is the native sphere
/// metric; the Euclidean mode exists for clouds contained in the plane,
/// where the two are bi-Lipschitz equivalent (points at ∞ are then at
/// distance ∞ from everything finite).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Metric {
    Chordal,
    Euclidean,
}

impl Metric {
    pub fn distance(self, a: SpherePoint, b: SpherePoint) -> f64 {
        match self {
            Metric::Chordal => chordal_distance(a, b),
            Metric::Euclidean => match (a.as_complex(), b.as_complex()) {
                (Some(z), Some(w)) => (z - w).norm(),
                (None, None) => 0.0,
                _ => f64::INFINITY,
            },
        }
    }
}

/// A finitely supported probability measure on the sphere.
#[derive(Clone, Debug)]
pub struct AtomicMeasure {
    /// `(position, weight)` in deterministic tree order; weights sum to 1.
    pub atoms: Vec<(SpherePoint, f64)>,
    /// The conformal exponent the weights were built with.
    pub t: f64,
    /// Base point whose preimages carry the atoms.
    pub base: SpherePoint,
    /// Depth window `[p_min, p_max]` of tree levels included.
    pub depth_range: (usize, usize),
    /// `log` of the unnormalized total mass (the truncated series value).
    pub log_normalizer: f64,
}

impl AtomicMeasure {
    pub fn total_mass(&self) -> f64 {
        pairwise_sum(&self.atoms.iter().map(|&(_, w)| w).collect::<Vec<_>>())
    }

    pub fn support_points(&self) -> Vec<SpherePoint> {
        self.atoms.iter().map(|&(p, _)| p).collect()
    }

    /// Weight-proportional atom draws (deterministic for a fixed seed).
    pub fn sample_atoms(&self, count: usize, seed: u64) -> Vec<usize> {
        let mut cum = Vec::with_capacity(self.atoms.len());
        let mut acc = 0.0;
        for &(_, w) in &self.atoms {
            acc += w;
            cum.push(acc);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let u: f64 = rng.random::<f64>() * acc;
                cum.partition_point(|&c| c <= u).min(self.atoms.len() - 1)
            })
            .collect()
    }
}

/// Builds the atomic conformal-measure approximation at exponent `t` from
/// the depth window `[p_min, p_max]` of the preimage tree of `base`.
pub fn conformal_measure(
    gs: &GeneratorSystem,
    t: f64,
    base: SpherePoint,
    p_min: usize,
    p_max: usize,
) -> Result<AtomicMeasure> {
    if t <= 0.0 {
        return Err(Error::InvalidParameter(
            "conformal exponent must be positive".into(),
        ));
    }
    if p_min > p_max {
        return Err(Error::InvalidParameter(format!(
            "empty depth window [{p_min}, {p_max}]"
        )));
    }
    let levels = gs.point_norm_levels(base, p_max)?;
    let mut points = Vec::new();
    let mut log_w = Vec::new();
    for level in &levels[p_min..=p_max] {
        for &(p, l) in level {
            if !l.is_finite() {
                return Err(Error::CriticalOrbit);
            }
            points.push(p);
            log_w.push(-t * l);
        }
    }
    let log_normalizer = log_sum_exp(&log_w);
    if !log_normalizer.is_finite() {
        return Err(Error::DegenerateSystem(
            "conformal measure normalizer vanished".into(),
        ));
    }
    let atoms = points
        .into_iter()
        .zip(&log_w)
        .map(|(p, &lw)| (p, (lw - log_normalizer).exp()))
        .collect();
    Ok(AtomicMeasure {
        atoms,
        t,
        base,
        depth_range: (p_min, p_max),
        log_normalizer,
    })
}

/// Total weight of atoms within distance `r` of `x` (closed ball).
pub fn ball_mass(mu: &AtomicMeasure, x: SpherePoint, r: f64, metric: Metric) -> f64 {
    let selected: Vec<f64> = mu
        .atoms
        .iter()
        .filter(|&&(p, _)| metric.distance(x, p) <= r)
        .map(|&(_, w)| w)
        .collect();
    pairwise_sum(&selected)
}

/// One `(center, radius)` ball record of a regularity audit.
#[derive(Clone, Debug, Serialize)]
pub struct RegularitySample {
    pub x_re: f64,
    pub x_im: f64,
    pub r: f64,
    pub mass: f64,
    /// `mass / r^δ` — bounded between two constants iff the measure is
    /// Ahlfors regular of exponent δ at the audited scales.
    pub ratio: f64,
}

/// Regularity audit result: per-ball records with a pooled log-log slope.
#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub delta: f64,
    /// Pooled least-squares slope of `log mass` vs `log r` (≈ δ when
    /// regular).
    pub slope: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Records with positive mass only (zero-mass balls carry no log-log
    /// information and are dropped; too many of them is an error).
    pub samples: Vec<RegularitySample>,
}

/// Descending dyadic radii from `r_max` down to `r_min`.
fn dyadic_radii(r_min: f64, r_max: f64) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_min <= r_max) {
        return Err(Error::InvalidParameter(format!(
            "invalid radius range [{r_min}, {r_max}]"
        )));
    }
    let mut rs = Vec::new();
    let mut r = r_max;
    while r >= r_min * (1.0 - 1e-12) {
        rs.push(r);
        r /= 2.0;
    }
    if rs.len() < 2 {
        return Err(Error::InvalidParameter(
            "radius range spans fewer than two dyadic scales".into(),
        ));
    }
    Ok(rs)
}

/// Audits `ν(B(x,r)) ≍ r^δ`: draws `sample_count` centers from the measure
/// (weight-proportional), sweeps dyadic radii, and fits the pooled log-log
/// slope. Centers with all-zero ball masses are useless and trigger an error
/// when fewer than 3 positive records remain.
pub fn regularity_audit(
    mu: &AtomicMeasure,
    delta: f64,
    sample_count: usize,
    r_min: f64,
    r_max: f64,
    seed: u64,
    metric: Metric,
) -> Result<RegularityReport> {
    if mu.atoms.len() < 2 {
        return Err(Error::InvalidParameter(
            "regularity audit needs at least two atoms".into(),
        ));
    }
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample count must be ≥ 1".into()));
    }
    let radii = dyadic_radii(r_min, r_max)?;
    let centers = mu.sample_atoms(sample_count, seed);

    // Per center: one pass over the atoms collects all radii's masses.
    let rows = map_ordered(&centers, |&ci| {
        let x = mu.atoms[ci].0;
        let mut dist_w: Vec<(f64, f64)> = mu
            .atoms
            .iter()
            .map(|&(p, w)| (metric.distance(x, p), w))
            .collect();
        dist_w.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut out = Vec::with_capacity(radii.len());
        for &r in &radii {
            let upto = dist_w.partition_point(|&(d, _)| d <= r);
            let ws: Vec<f64> = dist_w[..upto].iter().map(|&(_, w)| w).collect();
            out.push((x, r, pairwise_sum(&ws)));
        }
        out
    });

    let mut samples = Vec::new();
    for row in rows {
        for (x, r, mass) in row {
            if mass > 0.0 {
                let z = x.as_complex().unwrap_or_default();
                samples.push(RegularitySample {
                    x_re: z.re,
                    x_im: z.im,
                    r,
                    mass,
                    ratio: mass / r.powf(delta),
                });
            }
        }
    }
    if samples.len() < 3 {
        return Err(Error::InvalidParameter(
            "insufficient positive-mass balls in the radius range".into(),
        ));
    }
    let xs: Vec<f64> = samples.iter().map(|s| s.r.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|s| s.mass.ln()).collect();
    let fit = fit_line(&xs, &ys).ok_or_else(|| {
        Error::InvalidParameter("regularity fit degenerate (single radius?)".into())
    })?;
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &samples {
        min_ratio = min_ratio.min(s.ratio);
        max_ratio = max_ratio.max(s.ratio);
    }
    Ok(RegularityReport {
        delta,
        slope: fit.slope,
        min_ratio,
        max_ratio,
        samples,
    })
}

/// Mass within ε of **both** `f_i^{−1}(supp μ)` and `f_j^{−1}(supp μ)`, per
/// ε in the sweep (`i`, `j` are 1-based generator indices). A separating
/// system drives this to ~0 as ε shrinks toward the cloud resolution; an
/// overlapping one keeps it bounded away from 0.
pub fn separating_overlap_sweep(
    gs: &GeneratorSystem,
    mu: &AtomicMeasure,
    i: usize,
    j: usize,
    eps_list: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let m = gs.generators().len();
    if i == j {
        return Err(Error::InvalidParameter(
            "overlap audit needs two distinct generators".into(),
        ));
    }
    if !(1..=m).contains(&i) || !(1..=m).contains(&j) || eps_list.iter().any(|&e| e <= 0.0) {
        return Err(Error::InvalidParameter(
            "generator indices are 1-based and tube widths must be positive".into(),
        ));
    }
    let support = mu.support_points();
    let mapped_cloud = |gen_idx: usize| -> Result<PlaneGrid> {
        let f = &gs.generators()[gen_idx - 1];
        let results = flat_map_ordered(&support, |&z| match f.preimages(z, gs.tolerances()) {
            Ok(pre) => pre
                .into_iter()
                .flat_map(|(y, mult)| (0..mult).map(move |_| Ok(y)))
                .collect(),
            Err(e) => vec![Err(e)],
        });
        let pts: Result<Vec<SpherePoint>> = results.into_iter().collect();
        Ok(PlaneGrid::build_auto(pts?))
    };
    let grid_i = mapped_cloud(i)?;
    let grid_j = mapped_cloud(j)?;
    let dists = map_ordered(&support, |&z| (grid_i.distance_to(z), grid_j.distance_to(z)));
    Ok(eps_list
        .iter()
        .map(|&eps| {
            let ws: Vec<f64> = mu
                .atoms
                .iter()
                .zip(&dists)
                .filter(|&(_, &(di, dj))| di <= eps && dj <= eps)
                .map(|(&(_, w), _)| w)
                .collect();
            (eps, pairwise_sum(&ws))
        })
        .collect())
}

/// Single-ε convenience for [`separating_overlap_sweep`].
pub fn separating_overlap(
    gs: &GeneratorSystem,
    mu: &AtomicMeasure,
    i: usize,
    j: usize,
    eps: f64,
) -> Result<f64> {
    Ok(separating_overlap_sweep(gs, mu, i, j, &[eps])?[0].1)
}

/// One `(r, count)` row of a box-counting scan.
#[derive(Clone, Debug, Serialize)]
pub struct BoxCountRow {
    pub r: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoxCountReport {
    pub rows: Vec<BoxCountRow>,
    /// Least-squares slope of `log N_r` vs `−log r` — the box-dimension
    /// estimate.
    pub slope: f64,
}

/// Grid-based box counting over dyadic `r`: the number of `r × r` plane
/// cells (anchored at `origin`) hit by the cloud, an upper-bound proxy for
/// the minimal spherical cover. Points beyond modulus 1e12 and ∞ share one
/// synthetic cell.
pub fn box_dimension(
    points: &[SpherePoint],
    r_min: f64,
    r_max: f64,
    origin: (f64, f64),
) -> Result<BoxCountReport> {
    if points.len() < 10_000 {
        log::warn!(
            "box-counting a {}-point cloud; ≥ 10000 points recommended",
            points.len()
        );
    }
    let radii = dyadic_radii(r_min, r_max)?;
    let rows: Vec<BoxCountRow> = map_ordered(&radii, |&r| {
        let mut cells = std::collections::HashSet::new();
        let mut far_cell = false;
        for p in points {
            match p.as_complex().filter(|z| z.norm() <= 1e12) {
                Some(z) => {
                    let i = ((z.re - origin.0) / r).floor() as i64;
                    let j = ((z.im - origin.1) / r).floor() as i64;
                    cells.insert((i, j));
                }
                None => far_cell = true,
            }
        }
        BoxCountRow {
            r,
            count: cells.len() + usize::from(far_cell),
        }
    });
    let xs: Vec<f64> = rows.iter().map(|row| -(row.r.ln())).collect();
    let ys: Vec<f64> = rows.iter().map(|row| (row.count as f64).ln()).collect();
    let fit = fit_line(&xs, &ys)
        .ok_or_else(|| Error::InvalidParameter("box-count fit degenerate".into()))?;
    Ok(BoxCountReport {
        rows,
        slope: fit.slope,
    })
}

/// `(|μ(N_t ψ) − μ(ψ)|, osc ψ)` over the measure's atoms — the stationarity
/// defect of the atomic approximation against its own transfer operator.
pub fn stationarity_gap<F>(gs: &GeneratorSystem, mu: &AtomicMeasure, psi: F) -> Result<(f64, f64)>
where
    F: Fn(SpherePoint) -> f64 + Sync,
{
    let points = mu.support_points();
    let n_psi = crate::thermo::transfer_apply(gs, mu.t, &points, &psi)?;
    let direct: Vec<f64> = mu.atoms.iter().map(|&(p, w)| w * psi(p)).collect();
    let pushed: Vec<f64> = mu
        .atoms
        .iter()
        .zip(&n_psi)
        .map(|(&(_, w), &v)| w * v)
        .collect();
    let mu_psi = pairwise_sum(&direct);
    let mu_n_psi = pairwise_sum(&pushed);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in &points {
        let v = psi(p);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    Ok(((mu_n_psi - mu_psi).abs(), hi - lo))
}

/// A smooth chordal bump `exp(−(d(z, center)/width)²)` for stationarity
/// probes.
pub fn bump_function(center: SpherePoint, width: f64) -> impl Fn(SpherePoint) -> f64 + Sync {
    move |z| {
        let d = chordal_distance(z, center) / width;
        (-d * d).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::semigroup::poly_gen;
    use crate::NumericTolerances;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn tol() -> NumericTolerances {
        NumericTolerances::default()
    }

    fn sys_z2() -> GeneratorSystem {
        GeneratorSystem::new(vec![poly_gen(&[0.0, 0.0, 1.0], &tol()).unwrap()], tol()).unwrap()
    }

    fn sys_gasket() -> GeneratorSystem {
        let s = 3.0_f64.sqrt() / 2.0;
        let verts = [(1.0, 0.0), (-0.5, s), (-0.5, -s)];
        let gens = verts
            .iter()
            .map(|&(re, im)| {
                crate::sphere::RationalMap::from_polynomial(
                    vec![Complex64::new(-re, -im), Complex64::new(2.0, 0.0)],
                    &tol(),
                )
                .unwrap()
            })
            .collect();
        GeneratorSystem::new(gens, tol()).unwrap()
    }

    fn base_one() -> SpherePoint {
        SpherePoint::finite(1.0, 0.0)
    }

    const GASKET_DELTA: f64 = 1.584962500721156; // log 3 / log 2

    #[test]
    fn circle_measure_is_arcwise_uniform() {
        let gs = sys_z2();
        let mu = conformal_measure(&gs, 1.0, base_one(), 6, 8).unwrap();
        assert_relative_eq!(mu.total_mass(), 1.0, epsilon = 1e-12);
        // Every 1/16 arc carries 1/16 of the mass.
        for k in 0..16 {
            let (lo, hi) = (
                std::f64::consts::TAU * k as f64 / 16.0,
                std::f64::consts::TAU * (k + 1) as f64 / 16.0,
            );
            let ws: Vec<f64> = mu
                .atoms
                .iter()
                .filter(|&&(p, _)| {
                    let a = p.as_complex().unwrap().arg().rem_euclid(std::f64::consts::TAU);
                    a >= lo && a < hi
                })
                .map(|&(_, w)| w)
                .collect();
            let mass = pairwise_sum(&ws);
            assert!(
                (mass - 1.0 / 16.0).abs() <= 0.02,
                "arc {k} mass {mass}"
            );
        }
    }

    #[test]
    fn single_depth_constant_norms_give_uniform_weights() {
        let gs = sys_z2();
        let mu = conformal_measure(&gs, 1.3, base_one(), 7, 7).unwrap();
        assert_eq!(mu.atoms.len(), 128);
        for &(_, w) in &mu.atoms {
            assert_relative_eq!(w, 1.0 / 128.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gasket_cells_carry_equal_mass() {
        let gs = sys_gasket();
        let mu = conformal_measure(&gs, GASKET_DELTA, base_one(), 8, 11).unwrap();
        assert_eq!(mu.atoms.len(), 6561 + 19683 + 59049 + 177147);
        let s = 3.0_f64.sqrt() / 2.0;
        let verts = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-0.5, s),
            Complex64::new(-0.5, -s),
        ];
        let mut cell_mass = [0.0f64; 3];
        for &(p, w) in &mu.atoms {
            let z = p.as_complex().unwrap();
            let nearest = (0..3)
                .min_by(|&a, &b| {
                    (z - verts[a])
                        .norm()
                        .partial_cmp(&(z - verts[b]).norm())
                        .unwrap()
                })
                .unwrap();
            cell_mass[nearest] += w;
        }
        for (k, &mass) in cell_mass.iter().enumerate() {
            assert!(
                (mass - 1.0 / 3.0).abs() <= 0.02,
                "cell {k} mass {mass}"
            );
        }
    }

    #[test]
    fn ball_mass_reference_values() {
        let gs = sys_z2();
        let mu = conformal_measure(&gs, 1.0, base_one(), 8, 10).unwrap();
        // The whole sphere has diameter 2.
        assert_relative_eq!(
            ball_mass(&mu, SpherePoint::Infinity, 2.0, Metric::Chordal),
            1.0,
            epsilon = 1e-12
        );
        // A radius below the atom spacing isolates one atom's weight (the
        // base point recurs at every level: three coincident atoms).
        let w = ball_mass(&mu, base_one(), 1e-9, Metric::Chordal);
        assert!(w > 0.0 && w < 5.0 * 3.0 / mu.atoms.len() as f64);
        // Arc geometry: for circle points the chordal and chord lengths
        // agree, so mass(B(x, r)) = 2·asin(r/2)/π.
        let mass = ball_mass(&mu, base_one(), 0.1, Metric::Chordal);
        let expect = 2.0 * (0.05_f64).asin() / std::f64::consts::PI;
        assert!((mass - expect).abs() <= 0.02, "mass {mass} vs {expect}");
    }

    #[test]
    fn euclidean_metric_excludes_infinity() {
        assert_eq!(
            Metric::Euclidean.distance(base_one(), SpherePoint::Infinity),
            f64::INFINITY
        );
        assert_eq!(
            Metric::Chordal.distance(SpherePoint::Infinity, SpherePoint::Infinity),
            0.0
        );
    }

    #[test]
    fn regularity_slope_of_circle_is_one() {
        let gs = sys_z2();
        let mu = conformal_measure(&gs, 1.0, base_one(), 8, 10).unwrap();
        let rep =
            regularity_audit(&mu, 1.0, 20, 0.0625, 0.5, 7, Metric::Chordal).unwrap();
        assert!((rep.slope - 1.0).abs() <= 0.05, "slope {}", rep.slope);
        assert!(rep.min_ratio > 0.0 && rep.max_ratio < 3.0);
    }

    #[test]
    fn regularity_slope_of_gasket_matches_dimension() {
        let gs = sys_gasket();
        let mu = conformal_measure(&gs, GASKET_DELTA, base_one(), 8, 11).unwrap();
        let rep =
            regularity_audit(&mu, GASKET_DELTA, 20, 4e-3, 0.128, 42, Metric::Chordal).unwrap();
        assert!(
            (rep.slope - GASKET_DELTA).abs() <= 0.1,
            "slope {}",
            rep.slope
        );
    }

    #[test]
    fn single_atom_audit_refused() {
        let gs = sys_z2();
        let mu = conformal_measure(&gs, 1.0, base_one(), 0, 0).unwrap();
        assert_eq!(mu.atoms.len(), 1);
        assert!(regularity_audit(&mu, 1.0, 5, 0.01, 0.1, 1, Metric::Chordal).is_err());
    }

    #[test]
    fn overlap_audit_rejects_equal_indices_and_confirms_gasket_separation() {
        let gs = sys_gasket();
        let mu = conformal_measure(&gs, GASKET_DELTA, base_one(), 6, 9).unwrap();
        assert!(separating_overlap(&gs, &mu, 2, 2, 0.01).is_err());
        // The gasket cells meet only at three corner points: tube mass at
        // ε = 1e-4 is far below any constant.
        let mass = separating_overlap(&gs, &mu, 1, 2, 1e-4).unwrap();
        assert!(mass < 1e-3, "gasket overlap mass {mass}");
    }

    #[test]
    fn box_dimension_of_circle_and_square() {
        // 4096 unit-circle points.
        let circle: Vec<SpherePoint> = (0..4096)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / 4096.0;
                SpherePoint::finite(a.cos(), a.sin())
            })
            .collect();
        let rep = box_dimension(&circle, 2.0_f64.powi(-7), 2.0_f64.powi(-3), (0.0, 0.0)).unwrap();
        assert!((rep.slope - 1.0).abs() <= 0.05, "circle slope {}", rep.slope);

        // A filled 200×200 grid on [0,1]².
        let square: Vec<SpherePoint> = (0..200 * 200)
            .map(|k| SpherePoint::finite((k % 200) as f64 / 200.0, (k / 200) as f64 / 200.0))
            .collect();
        let rep = box_dimension(&square, 2.0_f64.powi(-5), 2.0_f64.powi(-2), (0.0, 0.0)).unwrap();
        assert!((rep.slope - 2.0).abs() <= 0.05, "square slope {}", rep.slope);

        // A single radius cannot be fitted.
        assert!(box_dimension(&circle, 0.1, 0.1, (0.0, 0.0)).is_err());
    }

    #[test]
    fn stationarity_gap_small_on_circle() {
        let gs = sys_z2();
        let mu = conformal_measure(&gs, 1.0, base_one(), 8, 10).unwrap();
        let centers = mu.sample_atoms(5, 3);
        for &ci in &centers {
            let psi = bump_function(mu.atoms[ci].0, 0.4);
            let (gap, osc) = stationarity_gap(&gs, &mu, psi).unwrap();
            assert!(gap <= 0.05 * osc, "gap {gap} vs osc {osc}");
        }
    }

    #[test]
    fn atom_sampling_is_deterministic_and_weight_respecting() {
        let gs = sys_z2();
        let mu = conformal_measure(&gs, 1.0, base_one(), 6, 8).unwrap();
        assert_eq!(mu.sample_atoms(10, 99), mu.sample_atoms(10, 99));

        // A two-atom toy: the heavy atom should dominate draws.
        let toy = AtomicMeasure {
            atoms: vec![
                (SpherePoint::finite(0.0, 0.0), 0.95),
                (SpherePoint::finite(1.0, 0.0), 0.05),
            ],
            t: 1.0,
            base: SpherePoint::finite(0.0, 0.0),
            depth_range: (0, 0),
            log_normalizer: 0.0,
        };
        let draws = toy.sample_atoms(200, 5);
        let heavy = draws.iter().filter(|&&i| i == 0).count();
        assert!(heavy > 150, "heavy atom drawn {heavy}/200");
    }

    #[test]
    fn rejects_nonpositive_exponent_and_bad_windows() {
        let gs = sys_z2();
        assert!(conformal_measure(&gs, 0.0, base_one(), 1, 3).is_err());
        assert!(conformal_measure(&gs, 1.0, base_one(), 4, 3).is_err());
    }

    #[test]
    fn measure_handles_rational_generator() {
        // A genuinely rational (pole-carrying) generator: f = (z² + 1)/(3z).
        let f = crate::sphere::RationalMap::new(
            Poly::new(vec![
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ]),
            Poly::new(vec![Complex64::new(0.0, 0.0), Complex64::new(3.0, 0.0)]),
            &tol(),
        )
        .unwrap();
        let gs = GeneratorSystem::new(
            vec![f, poly_gen(&[0.0, 0.0, 1.0], &tol()).unwrap()],
            tol(),
        )
        .unwrap();
        let mu = conformal_measure(&gs, 1.2, SpherePoint::finite(2.0, 0.0), 2, 4).unwrap();
        assert_relative_eq!(mu.total_mass(), 1.0, epsilon = 1e-12);
    }
}
