//! Julia sets of generator systems: fixed-point classification, point-cloud
//! approximation by backward iteration, and rasterization.
//!
//! The Julia set of a finitely generated system is the closure of the
//! repelling fixed points of all elements and is **backward** invariant:
//! preimages of points on (or near) it stay on (or near) it. Both cloud
//! methods exploit this — the full method takes an entire depth-n preimage
//! tree of a repelling fixed point, the random-walk method follows many
//! independent backward chains picking one inverse branch per step.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exec::map_ordered;
use crate::poly::Poly;
use crate::semigroup::GeneratorSystem;
use crate::sphere::{chordal_distance, RationalMap, SpherePoint};
use crate::{Error, NumericTolerances, Result};

/// Number of independent chains for the random-walk cloud (fixed so results
/// are reproducible across machines and thread counts).
pub const WALK_CHAINS: usize = 64;

/// Linearization class of a fixed point by its spherical multiplier norm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedPointClass {
    Attracting,
    Repelling,
    Indifferent,
}

/// A classified fixed point of a single rational map.
#[derive(Clone, Debug)]
pub struct FixedPoint {
    pub point: SpherePoint,
    pub multiplicity: usize,
    pub class: FixedPointClass,
    /// Spherical norm of the derivative at the point (the absolute value of
    /// the multiplier in a local chart).
    pub multiplier_norm: f64,
}

/// Dead band around multiplier norm 1 inside which a fixed point is called
/// indifferent. Multiple fixed points (multiplier exactly 1) are located by
/// the root solver only to about the square root of its backward error, so
/// the band must sit well above that noise floor.
const CLASS_TOL: f64 = 1e-4;

/// All fixed points of `f` on the sphere, counted with multiplicity
/// (`deg f + 1` in total), classified by `‖f′‖` against 1.
///
/// Finite fixed points solve `num(z) − z·den(z) = 0`; the multiplicity of ∞
/// is the degree drop of that polynomial against `deg f + 1`.
pub fn fixed_points(f: &RationalMap, tol: &NumericTolerances) -> Result<Vec<FixedPoint>> {
    let z = Poly::new(vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
    let r = f.numerator().sub(&z.mul(f.denominator()));
    if r.is_zero() {
        return Err(Error::InvalidMap(
            "identity map: every point is fixed".into(),
        ));
    }
    let total = f.degree() + 1;
    let finite: Vec<SpherePoint> = if r.degree() >= 1 {
        crate::poly::roots(&r, tol)?
            .into_iter()
            .map(|c| SpherePoint::from_complex(c, tol))
            .collect()
    } else {
        Vec::new()
    };
    let mut clustered = crate::sphere::cluster_points(&finite, tol.root_cluster);
    let inf_mult = total - r.degree().min(total);
    if inf_mult > 0 {
        clustered.push((SpherePoint::Infinity, inf_mult));
    }
    Ok(clustered
        .into_iter()
        .map(|(p, m)| {
            let n = f.spherical_deriv_norm(p);
            let class = if n > 1.0 + CLASS_TOL {
                FixedPointClass::Repelling
            } else if n < 1.0 - CLASS_TOL {
                FixedPointClass::Attracting
            } else {
                FixedPointClass::Indifferent
            };
            FixedPoint {
                point: p,
                multiplicity: m,
                class,
                multiplier_norm: n,
            }
        })
        .collect())
}

/// The default backward-iteration seed: the first repelling fixed point
/// found, scanning generators in order and each map's fixed points in their
/// deterministic sort order. Repelling fixed points lie on the Julia set.
pub fn repelling_base(gs: &GeneratorSystem) -> Result<SpherePoint> {
    for f in gs.generators() {
        for fp in fixed_points(f, gs.tolerances())? {
            if fp.class == FixedPointClass::Repelling {
                return Ok(fp.point);
            }
        }
    }
    Err(Error::NoRepellingFixedPoint)
}

/// Checks that a user-supplied base is usable: rejects points within chordal
/// `1e-6` of an attracting fixed point of any generator (backward orbits of
/// such points need not approach the Julia set from all sides).
fn vet_base(gs: &GeneratorSystem, base: SpherePoint) -> Result<()> {
    for f in gs.generators() {
        for fp in fixed_points(f, gs.tolerances())? {
            if fp.class == FixedPointClass::Attracting
                && chordal_distance(base, fp.point) < 1e-6
            {
                return Err(Error::InvalidParameter(format!(
                    "base point {base} is an attracting fixed point of a generator; \
                     pick a point on the Julia set (e.g. a repelling fixed point)"
                )));
            }
        }
    }
    Ok(())
}

/// How to sample the Julia set.
#[derive(Clone, Debug)]
pub enum CloudMethod {
    /// Every node of the depth-`depth` preimage tree of the base
    /// (`total_degree^depth` points — exhaustive but exponential).
    FullTree { depth: usize },
    /// `samples` points from [`WALK_CHAINS`] independent backward random
    /// walks, each discarding `burn_in` initial steps. One inverse branch
    /// (uniform over the `total_degree` branches, multiplicity-weighted) is
    /// chosen per step. Deterministic for a fixed `seed`.
    RandomWalk {
        samples: usize,
        burn_in: usize,
        seed: u64,
    },
}

/// A point-cloud approximation of the Julia set.
#[derive(Clone, Debug)]
pub struct JuliaCloud {
    pub base: SpherePoint,
    pub points: Vec<SpherePoint>,
}

/// Samples the Julia set by backward iteration from a repelling fixed point
/// (or `base_override`, which is vetted against attracting fixed points).
pub fn julia_cloud(
    gs: &GeneratorSystem,
    method: &CloudMethod,
    base_override: Option<SpherePoint>,
) -> Result<JuliaCloud> {
    let base = match base_override {
        Some(b) => {
            vet_base(gs, b)?;
            b
        }
        None => repelling_base(gs)?,
    };
    let points = match *method {
        CloudMethod::FullTree { depth } => {
            let levels = gs.preimage_tree(base, depth)?;
            levels
                .into_iter()
                .next_back()
                .expect("tree has at least the root level")
                .into_iter()
                .map(|node| node.point)
                .collect()
        }
        CloudMethod::RandomWalk {
            samples,
            burn_in,
            seed,
        } => {
            if samples == 0 {
                return Err(Error::InvalidParameter("samples must be positive".into()));
            }
            let per_chain = samples.div_ceil(WALK_CHAINS);
            let chain_ids: Vec<u64> = (0..WALK_CHAINS as u64).collect();
            let chains = map_ordered(&chain_ids, |&chain| {
                walk_chain(gs, base, burn_in, per_chain, seed, chain)
            });
            let mut points = Vec::with_capacity(per_chain * WALK_CHAINS);
            for chain in chains {
                points.extend(chain?);
            }
            points.truncate(samples);
            points
        }
    };
    Ok(JuliaCloud { base, points })
}

/// Chordal nearest-neighbor distance of every cloud point (useful for
/// judging the cloud's resolution, e.g. when choosing audit tolerances).
/// Empty for clouds with fewer than two points.
pub fn nearest_neighbor_spacings(points: &[SpherePoint]) -> Vec<f64> {
    let grid = crate::spatial::PlaneGrid::build_auto(points.to_vec());
    if grid.len() < 2 {
        return Vec::new();
    }
    let idx: Vec<u32> = (0..points.len() as u32).collect();
    crate::exec::map_ordered(&idx, |&i| {
        grid.nearest(points[i as usize], Some(i))
            .map(|(_, d)| d)
            .unwrap_or(f64::INFINITY)
    })
}

/// One backward chain: repeatedly jump to a uniformly chosen inverse branch.
fn walk_chain(
    gs: &GeneratorSystem,
    base: SpherePoint,
    burn_in: usize,
    keep: usize,
    seed: u64,
    chain: u64,
) -> Result<Vec<SpherePoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Distinct, reproducible stream per chain (stream 0 is left unused).
    rng.set_stream(chain + 1);
    let total = gs.total_degree();
    let mut p = base;
    let mut out = Vec::with_capacity(keep);
    for step in 0..burn_in + keep {
        let mut pick = rng.random_range(0..total);
        let mut next = None;
        'outer: for f in gs.generators() {
            for (y, mult) in f.preimages(p, gs.tolerances())? {
                if pick < mult {
                    next = Some(y);
                    break 'outer;
                }
                pick -= mult;
            }
        }
        p = next.ok_or_else(|| {
            Error::DegenerateSystem("inverse branch bookkeeping lost a branch".into())
        })?;
        if step >= burn_in {
            out.push(p);
        }
    }
    Ok(out)
}

/// An axis-aligned plane window and raster resolution.
#[derive(Clone, Copy, Debug)]
pub struct RenderWindow {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl RenderWindow {
    /// A square window centered at the origin with half-width `r`.
    pub fn centered(r: f64, resolution: usize) -> Self {
        Self {
            re_min: -r,
            re_max: r,
            im_min: -r,
            im_max: r,
            nx: resolution,
            ny: resolution,
        }
    }
}

/// A hit-count raster. Row 0 is the **top** row (largest imaginary part), so
/// text output reads like the usual mathematical picture.
#[derive(Clone, Debug)]
pub struct Raster {
    pub window: RenderWindow,
    /// Row-major `ny × nx` hit counts.
    pub counts: Vec<u32>,
}

/// Bins the finite cloud points inside the window into a hit-count raster.
/// Points at ∞ or outside the window are ignored.
pub fn render(points: &[SpherePoint], window: &RenderWindow) -> Raster {
    let mut counts = vec![0u32; window.nx * window.ny];
    let dw = window.re_max - window.re_min;
    let dh = window.im_max - window.im_min;
    for p in points {
        let Some(z) = p.as_complex() else { continue };
        if z.re < window.re_min || z.re > window.re_max || z.im < window.im_min
            || z.im > window.im_max
        {
            continue;
        }
        let col = (((z.re - window.re_min) / dw) * window.nx as f64) as usize;
        let row = (((window.im_max - z.im) / dh) * window.ny as f64) as usize;
        let col = col.min(window.nx - 1);
        let row = row.min(window.ny - 1);
        counts[row * window.nx + col] += 1;
    }
    Raster {
        window: *window,
        counts,
    }
}

impl Raster {
    pub fn nonzero_cells(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Plain PGM (P2) with hit counts scaled to 0..255. `comments` become
    /// `#` header lines.
    pub fn to_pgm(&self, comments: &[String]) -> String {
        let max = self.counts.iter().copied().max().unwrap_or(0);
        let mut s = String::from("P2\n");
        for c in comments {
            s.push_str(&format!("# {c}\n"));
        }
        s.push_str(&format!("{} {}\n255\n", self.window.nx, self.window.ny));
        for row in 0..self.window.ny {
            let line: Vec<String> = (0..self.window.nx)
                .map(|col| {
                    let c = self.counts[row * self.window.nx + col];
                    let v = if max == 0 {
                        0
                    } else {
                        ((255 * c as u64).div_ceil(max as u64)).min(255)
                    };
                    v.to_string()
                })
                .collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    /// CSV of occupied cells: `re,im,count` at cell centers, preceded by
    /// `# key=value` metadata lines.
    pub fn cells_csv(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            s.push_str(&format!("# {c}\n"));
        }
        s.push_str("re,im,count\n");
        let dw = (self.window.re_max - self.window.re_min) / self.window.nx as f64;
        let dh = (self.window.im_max - self.window.im_min) / self.window.ny as f64;
        for row in 0..self.window.ny {
            for col in 0..self.window.nx {
                let c = self.counts[row * self.window.nx + col];
                if c == 0 {
                    continue;
                }
                let re = self.window.re_min + (col as f64 + 0.5) * dw;
                let im = self.window.im_max - (row as f64 + 0.5) * dh;
                s.push_str(&format!("{re:.12e},{im:.12e},{c}\n"));
            }
        }
        s
    }
}
