//! Validity checkers: the audits that decide whether a generator system is
//! inside the regime where the dimension machinery is trustworthy.
//!
//! * postcritical / attracting forward clouds and a hyperbolicity margin
//!   (limit-set cloud vs. postcritical cloud distance),
//! * an expansion-rate estimate from per-level minima of backward-chain
//!   derivative norms,
//! * loxodromy classification for degree-one generators,
//! * a sampling checker for the open set condition.
//!
//! Every checker is conservative in the same direction: a `true` verdict is
//! evidence with quantified margins, a `false` verdict pinpoints a concrete
//! violation (a near-zero margin, a drifting residual, a sampled overlap).

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::exec::{flat_map_ordered, map_ordered};
use crate::julia::{fixed_points, FixedPointClass};
use crate::numerics::fit_line;
use crate::semigroup::GeneratorSystem;
use crate::spatial::PlaneGrid;
use crate::sphere::{chordal_distance, RationalMap, SpherePoint};
use crate::{Error, Result};

/// Hard cap on dedup-cloud growth. Postcritically finite systems stay tiny;
/// hitting the cap is itself a diagnostic (the forward orbit is spreading).
const CLOUD_CAP: usize = 20_000;

/// Chordal tolerance for merging forward-orbit points.
const CLOUD_DEDUP_TOL: f64 = 1e-9;

/// Strictness slop for open-set membership tests.
const OSC_SLOP: f64 = 1e-9;

/// Incrementally deduplicated point cloud (chordal metric, linear scan —
/// meant for clouds that stay small).
struct DedupCloud {
    points: Vec<SpherePoint>,
}

impl DedupCloud {
    fn new() -> Self {
        Self { points: Vec::new() }
    }

    /// Inserts `p` unless an existing point is within the merge tolerance.
    /// Returns whether the point was new.
    fn insert(&mut self, p: SpherePoint) -> Result<bool> {
        if self
            .points
            .iter()
            .any(|&q| chordal_distance(p, q) < CLOUD_DEDUP_TOL)
        {
            return Ok(false);
        }
        if self.points.len() >= CLOUD_CAP {
            return Err(Error::InvalidParameter(format!(
                "forward cloud exceeded {CLOUD_CAP} points — the orbit is not settling, \
                 which itself argues against postcritical finiteness"
            )));
        }
        self.points.push(p);
        Ok(true)
    }

    fn into_sorted(self) -> Vec<SpherePoint> {
        let mut pts = self.points;
        pts.sort_by(|a, b| a.order_key().partial_cmp(&b.order_key()).unwrap());
        pts
    }
}

/// Forward-iterates `seeds` under every generator for `depth` rounds,
/// merging chordally coincident points.
fn forward_cloud(
    gs: &GeneratorSystem,
    seeds: Vec<SpherePoint>,
    depth: usize,
) -> Result<Vec<SpherePoint>> {
    let mut cloud = DedupCloud::new();
    let mut frontier = Vec::new();
    for s in seeds {
        if cloud.insert(s)? {
            frontier.push(s);
        }
    }
    for _ in 0..depth {
        if frontier.is_empty() {
            break;
        }
        let mut next = Vec::new();
        for &p in &frontier {
            for f in gs.generators() {
                let q = f.eval(p, gs.tolerances());
                if cloud.insert(q)? {
                    next.push(q);
                }
            }
        }
        frontier = next;
    }
    Ok(cloud.into_sorted())
}

/// The postcritical cloud: forward orbit (to `depth`) of every generator's
/// critical points under the whole system. Generators with numerator degree
/// exceeding denominator degree fix ∞ with derivative-norm zero there, so ∞
/// is seeded explicitly for them (degree-one affine maps otherwise
/// contribute no critical points at all).
pub fn postcritical_cloud(gs: &GeneratorSystem, depth: usize) -> Result<Vec<SpherePoint>> {
    let mut seeds = Vec::new();
    for f in gs.generators() {
        for (c, _) in f.critical_points(gs.tolerances())? {
            seeds.push(c);
        }
        if f.numerator().degree() > f.denominator().degree() {
            seeds.push(SpherePoint::Infinity);
        }
    }
    if seeds.is_empty() {
        return Err(Error::DegenerateSystem(
            "no critical seeds — all generators are non-affine Möbius maps".into(),
        ));
    }
    forward_cloud(gs, seeds, depth)
}

/// Attracting fixed points of all words up to `word_cap`, forward-iterated
/// for `forward_depth` rounds — the attractor side of the hyperbolicity
/// picture.
pub fn attracting_cloud(
    gs: &GeneratorSystem,
    word_cap: usize,
    forward_depth: usize,
) -> Result<Vec<SpherePoint>> {
    if word_cap == 0 || word_cap > 3 {
        return Err(Error::InvalidParameter(
            "word cap must be between 1 and 3 (composite degrees grow fast)".into(),
        ));
    }
    let m = gs.generators().len();
    let mut seeds = Vec::new();
    for len in 1..=word_cap {
        let mut word = vec![0u8; len];
        loop {
            let mut f = gs.generators()[word[len - 1] as usize].clone();
            for &s in word[..len - 1].iter().rev() {
                f = f.compose(&gs.generators()[s as usize], gs.tolerances())?;
            }
            for fp in fixed_points(&f, gs.tolerances())? {
                if fp.class == FixedPointClass::Attracting {
                    seeds.push(fp.point);
                }
            }
            // Lexicographic increment.
            let mut k = len;
            loop {
                if k == 0 {
                    break;
                }
                word[k - 1] += 1;
                if (word[k - 1] as usize) < m {
                    break;
                }
                word[k - 1] = 0;
                k -= 1;
            }
            if k == 0 {
                break;
            }
        }
    }
    forward_cloud(gs, seeds, forward_depth)
}

/// Distance audit between a limit-set cloud and a postcritical cloud.
#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicityReport {
    /// Minimum chordal distance from any postcritical point to the cloud.
    pub min_distance: f64,
    /// Margin the verdict demanded.
    pub margin: f64,
    pub verdict: bool,
}

/// Verdict `min_dist(postcritical, julia) ≥ margin` — the sampled form of
/// "the postcritical set stays away from the limit set".
pub fn hyperbolicity_check(
    julia: &[SpherePoint],
    postcritical: &[SpherePoint],
    margin: f64,
) -> Result<HyperbolicityReport> {
    if julia.is_empty() || postcritical.is_empty() {
        return Err(Error::InvalidParameter(
            "hyperbolicity check needs nonempty clouds on both sides".into(),
        ));
    }
    let grid = PlaneGrid::build_auto(julia.to_vec());
    let dists = map_ordered(postcritical, |&p| grid.distance_to(p));
    let min_distance = dists.into_iter().fold(f64::INFINITY, f64::min);
    Ok(HyperbolicityReport {
        min_distance,
        margin,
        verdict: min_distance >= margin,
    })
}

/// Expansion-rate estimate from per-level minima of backward-chain
/// derivative norms.
#[derive(Clone, Debug, Serialize)]
pub struct ExpansionEstimate {
    /// `minima[n-1]` = min over base points and level-`n` branches of the
    /// chain log-norm.
    pub minima: Vec<f64>,
    /// `exp(slope)` of the linear fit of minima against level (from level
    /// 2, where transients have largely died out).
    pub lambda: f64,
    /// Fitted intercept (`log` of the comparability constant).
    pub log_c: f64,
    /// Largest absolute residual of the fit — expanding systems track the
    /// line tightly; indifferent behaviour shows as systematic bowing.
    pub max_residual: f64,
    /// Slope refit over the deepest half of the levels.
    pub tail_lambda: f64,
    /// `lambda ≥ 1.02` with residuals within 0.1.
    pub verdict: bool,
}

/// Fits `min_{|u|=n} log‖(f_u)′‖ ≈ n·log λ + log c` over backward trees
/// rooted at three spread-out cloud points. Expanding systems give λ > 1
/// with small residuals; parabolic ones either fit λ ≈ 1 or leave large
/// curved residuals.
pub fn expansion_estimate(
    gs: &GeneratorSystem,
    cloud: &[SpherePoint],
    n_max: usize,
) -> Result<ExpansionEstimate> {
    if cloud.is_empty() {
        return Err(Error::InvalidParameter(
            "expansion estimate needs a nonempty base cloud".into(),
        ));
    }
    if n_max < 3 {
        return Err(Error::InvalidParameter(
            "expansion estimate needs depth ≥ 3".into(),
        ));
    }
    let picks: BTreeSet<usize> = [0, cloud.len() / 3, 2 * cloud.len() / 3]
        .into_iter()
        .map(|i| i.min(cloud.len() - 1))
        .collect();
    let mut minima = vec![f64::INFINITY; n_max];
    for &i in &picks {
        let levels = gs.log_norm_levels(cloud[i], n_max)?;
        for n in 1..=n_max {
            let level_min = levels[n].iter().copied().fold(f64::INFINITY, f64::min);
            minima[n - 1] = minima[n - 1].min(level_min);
        }
    }
    let xs: Vec<f64> = (2..=n_max).map(|n| n as f64).collect();
    let ys: Vec<f64> = minima[1..].to_vec();
    let fit = fit_line(&xs, &ys)
        .ok_or_else(|| Error::InvalidParameter("expansion fit degenerate".into()))?;
    let tail_from = (2 + n_max) / 2;
    let txs: Vec<f64> = (tail_from..=n_max).map(|n| n as f64).collect();
    let tys: Vec<f64> = minima[tail_from - 1..].to_vec();
    let tail_lambda = fit_line(&txs, &tys).map_or(fit.slope.exp(), |f| f.slope.exp());
    let lambda = fit.slope.exp();
    Ok(ExpansionEstimate {
        minima,
        lambda,
        log_c: fit.intercept,
        max_residual: fit.max_abs_residual,
        tail_lambda,
        verdict: lambda >= 1.02 && fit.max_abs_residual <= 0.1,
    })
}

/// Classifies a degree-one map: `Some(true)` iff loxodromic (normalized
/// trace-squared off the real interval `[0, 4]`), `None` for degree ≥ 2.
pub fn mobius_loxodromic(f: &RationalMap) -> Option<bool> {
    if f.degree() != 1 {
        return None;
    }
    let coeff = |p: &crate::poly::Poly, k: usize| p.coeffs().get(k).copied().unwrap_or_default();
    let (a, b) = (coeff(f.numerator(), 1), coeff(f.numerator(), 0));
    let (c, d) = (coeff(f.denominator(), 1), coeff(f.denominator(), 0));
    let det = a * d - b * c;
    let tr2 = (a + d) * (a + d) / det;
    let on_segment = tr2.im.abs() <= 1e-9 && (-1e-9..=4.0 + 1e-9).contains(&tr2.re);
    Some(!on_segment)
}

/// Combined expanding-system audit.
#[derive(Clone, Debug, Serialize)]
pub struct ExpandingReport {
    pub hyperbolicity: HyperbolicityReport,
    pub expansion: ExpansionEstimate,
    /// Per-generator loxodromy (`None` when degree ≥ 2, where the question
    /// does not arise).
    pub mobius_loxodromic: Vec<Option<bool>>,
    pub verdict: bool,
}

/// Runs the full battery: postcritical distance, expansion fit, and
/// loxodromy of any degree-one generators. The verdict is the conjunction.
pub fn expanding_verdict(
    gs: &GeneratorSystem,
    julia: &[SpherePoint],
    pc_depth: usize,
    n_max: usize,
    margin: f64,
) -> Result<ExpandingReport> {
    let pc = postcritical_cloud(gs, pc_depth)?;
    let hyperbolicity = hyperbolicity_check(julia, &pc, margin)?;
    let expansion = expansion_estimate(gs, julia, n_max)?;
    let mobius: Vec<Option<bool>> = gs.generators().iter().map(mobius_loxodromic).collect();
    let verdict =
        hyperbolicity.verdict && expansion.verdict && mobius.iter().all(|m| m.unwrap_or(true));
    Ok(ExpandingReport {
        hyperbolicity,
        expansion,
        mobius_loxodromic: mobius,
        verdict,
    })
}

/// A candidate open set for the open set condition, with signed margins.
///
/// `margin(z)` is positive inside, negative outside, and approximates the
/// Euclidean distance to the boundary; `Union`/`Intersection` take the
/// max/min of their parts' margins.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpenSet {
    Disk {
        center: [f64; 2],
        radius: f64,
    },
    /// Complement of a closed disk — contains ∞.
    DiskComplement {
        center: [f64; 2],
        radius: f64,
    },
    /// `{z : ⟨z, normal⟩ < offset}`.
    HalfPlane {
        normal: [f64; 2],
        offset: f64,
    },
    Annulus {
        center: [f64; 2],
        r_inner: f64,
        r_outer: f64,
    },
    /// Simple polygon (even-odd interior), vertices in order.
    Polygon {
        vertices: Vec<[f64; 2]>,
    },
    Union {
        parts: Vec<OpenSet>,
    },
    Intersection {
        parts: Vec<OpenSet>,
    },
}

fn seg_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    (p - (a + ab * t.clamp(0.0, 1.0))).norm()
}

impl OpenSet {
    /// Structural sanity of radii, normals, and vertex lists.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(format!("open set: {msg}")));
        match self {
            OpenSet::Disk { center, radius } | OpenSet::DiskComplement { center, radius } => {
                if !(radius.is_finite() && *radius > 0.0)
                    || !center.iter().all(|c| c.is_finite())
                {
                    return bad("disk needs a finite center and positive radius");
                }
            }
            OpenSet::HalfPlane { normal, offset } => {
                if !offset.is_finite()
                    || !normal.iter().all(|c| c.is_finite())
                    || (normal[0] == 0.0 && normal[1] == 0.0)
                {
                    return bad("half-plane needs a nonzero finite normal");
                }
            }
            OpenSet::Annulus {
                center,
                r_inner,
                r_outer,
            } => {
                if !(r_inner.is_finite() && r_outer.is_finite() && *r_inner >= 0.0)
                    || r_inner >= r_outer
                    || !center.iter().all(|c| c.is_finite())
                {
                    return bad("annulus needs 0 ≤ r_inner < r_outer");
                }
            }
            OpenSet::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return bad("polygon needs at least three vertices");
                }
                if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
                    return bad("polygon vertices must be finite");
                }
                for i in 0..vertices.len() {
                    let j = (i + 1) % vertices.len();
                    if vertices[i] == vertices[j] {
                        return bad("polygon has coincident consecutive vertices");
                    }
                }
            }
            OpenSet::Union { parts } | OpenSet::Intersection { parts } => {
                if parts.is_empty() {
                    return bad("set union/intersection needs at least one part");
                }
                for p in parts {
                    p.validate()?;
                }
            }
        }
        Ok(())
    }

    /// Signed boundary margin: positive inside, negative outside.
    pub fn margin(&self, z: SpherePoint) -> f64 {
        match self {
            OpenSet::Disk { center, radius } => match z.as_complex() {
                Some(w) => radius - (w - Complex64::new(center[0], center[1])).norm(),
                None => f64::NEG_INFINITY,
            },
            OpenSet::DiskComplement { center, radius } => match z.as_complex() {
                Some(w) => (w - Complex64::new(center[0], center[1])).norm() - radius,
                None => f64::INFINITY,
            },
            OpenSet::HalfPlane { normal, offset } => match z.as_complex() {
                Some(w) => {
                    let n = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
                    (offset - (normal[0] * w.re + normal[1] * w.im)) / n
                }
                None => f64::NEG_INFINITY,
            },
            OpenSet::Annulus {
                center,
                r_inner,
                r_outer,
            } => match z.as_complex() {
                Some(w) => {
                    let d = (w - Complex64::new(center[0], center[1])).norm();
                    (d - r_inner).min(r_outer - d)
                }
                None => f64::NEG_INFINITY,
            },
            OpenSet::Polygon { vertices } => match z.as_complex() {
                Some(w) => {
                    let mut inside = false;
                    let mut dist = f64::INFINITY;
                    for i in 0..vertices.len() {
                        let a = vertices[i];
                        let b = vertices[(i + 1) % vertices.len()];
                        if (a[1] > w.im) != (b[1] > w.im) {
                            let x_cross = a[0] + (w.im - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                            if w.re < x_cross {
                                inside = !inside;
                            }
                        }
                        dist = dist.min(seg_distance(
                            w,
                            Complex64::new(a[0], a[1]),
                            Complex64::new(b[0], b[1]),
                        ));
                    }
                    if inside {
                        dist
                    } else {
                        -dist
                    }
                }
                None => f64::NEG_INFINITY,
            },
            OpenSet::Union { parts } => parts
                .iter()
                .map(|p| p.margin(z))
                .fold(f64::NEG_INFINITY, f64::max),
            OpenSet::Intersection { parts } => parts
                .iter()
                .map(|p| p.margin(z))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, z: SpherePoint) -> bool {
        self.margin(z) > 0.0
    }

    /// Draws `count` points of the set under the spherical area measure
    /// (rejection sampling; ∞ is prepended when contained). Errors when the
    /// acceptance rate suggests negligible spherical area.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<SpherePoint>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(count);
        if self.margin(SpherePoint::Infinity) > OSC_SLOP {
            pts.push(SpherePoint::Infinity);
        }
        let mut attempts = 0usize;
        let cap = count.saturating_mul(10_000).max(10_000);
        while pts.len() < count {
            attempts += 1;
            if attempts > cap {
                return Err(Error::InvalidParameter(
                    "open set rejected too many samples — negligible spherical area?".into(),
                ));
            }
            // Uniform on the sphere: |z| = sqrt((1+u)/(1-u)) with u ~ U(-1,1).
            let u: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let r = ((1.0 + u) / (1.0 - u)).sqrt();
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            let z = SpherePoint::finite(r * phi.cos(), r * phi.sin());
            if self.margin(z) > OSC_SLOP {
                pts.push(z);
            }
        }
        Ok(pts)
    }
}

/// Sampled open-set-condition audit.
#[derive(Clone, Debug, Serialize)]
pub struct OscReport {
    /// Points of the set that were tested.
    pub samples: usize,
    /// Preimages of samples that landed outside the (slop-closed) set.
    pub containment_violations: usize,
    /// Most negative preimage margin observed.
    pub worst_containment_margin: f64,
    /// Sampled membership collisions between two generators' preimage sets.
    pub disjointness_violations: usize,
    /// Largest positive overlap margin observed.
    pub worst_disjointness_margin: f64,
    pub verdict: bool,
}

/// Tests the two halves of the open set condition on sampled points of `u`:
/// every generator's preimages of samples must stay inside `u`
/// (containment), and a preimage under one generator must not
/// simultaneously lie in another generator's preimage set (disjointness,
/// tested as `margin(f_k(y)) ≤ 0` for `y ∈ f_j^{-1}(samples)`).
pub fn osc_check(
    gs: &GeneratorSystem,
    u: &OpenSet,
    samples: usize,
    seed: u64,
) -> Result<OscReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter("OSC check needs samples ≥ 1".into()));
    }
    u.validate()?;
    let pts = u.sample_points(samples, seed)?;
    let mut preimages: Vec<Vec<SpherePoint>> = Vec::with_capacity(gs.generators().len());
    for f in gs.generators() {
        let results = flat_map_ordered(&pts, |&x| match f.preimages(x, gs.tolerances()) {
            Ok(pre) => pre.into_iter().map(|(y, _)| Ok(y)).collect(),
            Err(e) => vec![Err(e)],
        });
        preimages.push(results.into_iter().collect::<Result<Vec<_>>>()?);
    }

    let mut containment_violations = 0usize;
    let mut worst_containment_margin = f64::INFINITY;
    for ys in &preimages {
        for &y in ys {
            let m = u.margin(y);
            worst_containment_margin = worst_containment_margin.min(m);
            if m <= -OSC_SLOP {
                containment_violations += 1;
            }
        }
    }

    let mut disjointness_violations = 0usize;
    let mut worst_disjointness_margin = f64::NEG_INFINITY;
    for (j, ys) in preimages.iter().enumerate() {
        for (k, g) in gs.generators().iter().enumerate() {
            if j == k {
                continue;
            }
            for &y in ys {
                let m = u.margin(g.eval(y, gs.tolerances()));
                if m >= OSC_SLOP {
                    disjointness_violations += 1;
                    worst_disjointness_margin = worst_disjointness_margin.max(m);
                }
            }
        }
    }

    Ok(OscReport {
        samples: pts.len(),
        containment_violations,
        worst_containment_margin,
        disjointness_violations,
        worst_disjointness_margin,
        verdict: containment_violations == 0 && disjointness_violations == 0,
    })
}
