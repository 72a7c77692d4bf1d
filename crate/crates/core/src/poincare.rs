//! Truncated Poincaré series and the critical exponent.
//!
//! The series at a base point `x` is `Σ_n a_n(t)` with level sums
//! `a_n(t) = Σ_{|w|=n} Σ_{f_w(y)=x} ‖(f_w)′(y)‖^{−t}` — exactly the iterated
//! transfer operator `(N_tⁿ 1)(x)`, so level sums come straight from a
//! [`LevelCache`](crate::thermo::LevelCache) shared with the pressure code.
//! The critical exponent (the convergence/divergence threshold in `t`) is
//! found by bisecting the fitted growth rate of `log a_n` in `n`; at the
//! threshold the level sums are Θ(1).
//!
//! Two words may represent the same map (the semigroup sum then counts it
//! twice); [`detect_word_coincidences`] flags such pairs so reports can note
//! that the word-indexed and element-indexed series differ.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::numerics::{fit_line, LineFit};
use crate::semigroup::{format_word, GeneratorSystem};
use crate::sphere::{chordal_distance, SpherePoint};
use crate::thermo::LevelCache;
use crate::{Error, Result};

/// `log a_n(t)` for `n = 1..=depth` from a prebuilt cache.
pub fn poincare_levels(cache: &LevelCache, t: f64) -> Vec<f64> {
    (1..=cache.depth())
        .map(|n| cache.log_level_sum(n, t))
        .collect()
}

/// One `(t, n, log a_n)` record of a series scan.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesRow {
    pub t: f64,
    pub n: usize,
    pub log_level_sum: f64,
}

/// Level sums over a `t` grid (CSV-ready, one row per `(t, n)`).
#[derive(Clone, Debug, Serialize)]
pub struct SeriesScan {
    pub rows: Vec<SeriesRow>,
}

pub fn series_scan(cache: &LevelCache, ts: &[f64]) -> SeriesScan {
    let mut rows = Vec::with_capacity(ts.len() * cache.depth());
    for &t in ts {
        for (n, log_a) in poincare_levels(cache, t).iter().enumerate() {
            rows.push(SeriesRow {
                t,
                n: n + 1,
                log_level_sum: *log_a,
            });
        }
    }
    SeriesScan { rows }
}

/// The smallest level `n ≥ 1` whose minimum chain norm exceeds 1 — from that
/// level on, every term of `a_n(t)` is strictly decreasing in `t`, so the
/// level sums are exactly monotone. (Expansion guarantees such an `n`
/// exists; early levels may have norms below 1.)
pub fn first_supercritical_level(cache: &LevelCache) -> Option<usize> {
    cache
        .level_minima()
        .iter()
        .enumerate()
        .skip(1)
        .find(|&(_, &m)| m > 0.0)
        .map(|(n, _)| n)
}

/// Least-squares growth rate of `log a_n(t)` — an estimate of the pressure
/// at `t` from the series viewpoint. The fit uses the tail half of the
/// levels, `n ∈ [max(2, (depth+2)/2), depth]` (at least 3 points): early
/// levels carry the base point's O(1) eigenfunction transient, which shows
/// up as a slope bias on short fits. Errors when fewer than 3 levels are
/// usable.
pub fn growth_rate(cache: &LevelCache, t: f64) -> Result<LineFit> {
    if cache.depth() < 4 {
        return Err(Error::InvalidParameter(
            "growth-rate fit needs at least 3 levels beyond n = 1 (depth ≥ 4)".into(),
        ));
    }
    let start = ((cache.depth() + 2) / 2).clamp(2, cache.depth() - 2);
    let ns: Vec<f64> = (start..=cache.depth()).map(|n| n as f64).collect();
    let ys: Vec<f64> = (start..=cache.depth())
        .map(|n| cache.log_level_sum(n, t))
        .collect();
    fit_line(&ns, &ys).ok_or_else(|| {
        Error::InvalidParameter("growth-rate fit is degenerate on this cache".into())
    })
}

/// The critical exponent: the `t` where the fitted growth rate of the level
/// sums crosses zero, located by bisection on `[t_lo, t_hi]`. Requires a
/// sign change over the bracket.
pub fn critical_exponent(cache: &LevelCache, t_lo: f64, t_hi: f64) -> Result<f64> {
    if !(t_lo < t_hi) {
        return Err(Error::InvalidParameter(format!(
            "invalid exponent bracket [{t_lo}, {t_hi}]"
        )));
    }
    let g_lo = growth_rate(cache, t_lo)?.slope;
    let g_hi = growth_rate(cache, t_hi)?.slope;
    if g_lo <= 0.0 || g_hi >= 0.0 {
        return Err(Error::BracketFailure {
            t_hi,
            pressure: g_hi,
        });
    }
    let (mut lo, mut hi) = (t_lo, t_hi);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let g = growth_rate(cache, mid)?.slope;
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A pair of distinct words whose compositions agree as maps (within
/// `1e-9` chordally at 20 fixed sample points).
#[derive(Clone, Debug, Serialize)]
pub struct WordCoincidence {
    /// 1-based dotted words, e.g. "1.2" vs "2.1".
    pub word_a: String,
    pub word_b: String,
    /// Largest chordal disagreement observed over the samples.
    pub max_distance: f64,
}

/// Scans all word pairs up to length `max_len` for coincident compositions
/// by evaluating both at 20 deterministic sphere-uniform sample points.
/// Pairs whose total degrees differ are skipped outright.
pub fn detect_word_coincidences(
    gs: &GeneratorSystem,
    max_len: usize,
) -> Result<Vec<WordCoincidence>> {
    let m = gs.generators().len();
    let mut words: Vec<Vec<u8>> = Vec::new();
    let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::with_capacity(frontier.len() * m);
        for w in &frontier {
            for j in 0..m as u8 {
                let mut v = w.clone();
                v.push(j);
                next.push(v);
            }
        }
        words.extend(next.iter().cloned());
        frontier = next;
        if words.len() > 4096 {
            return Err(Error::InvalidParameter(
                "word coincidence scan cap exceeded; lower the length cap".into(),
            ));
        }
    }

    // 20 fixed sphere-uniform samples (chordal-area uniform via the inverse
    // stereographic radius law r = √((1+u)/(1−u))).
    let mut rng = ChaCha8Rng::seed_from_u64(0x0c01_4c1d);
    let samples: Vec<SpherePoint> = (0..20)
        .map(|_| {
            let u: f64 = rng.random_range(-0.99..0.99);
            let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let r = ((1.0 + u) / (1.0 - u)).sqrt();
            SpherePoint::finite(r * phi.cos(), r * phi.sin())
        })
        .collect();

    let word_degree = |w: &[u8]| -> usize {
        w.iter()
            .map(|&j| gs.generators()[j as usize].degree())
            .product()
    };
    let orbit = |w: &[u8], z: SpherePoint| -> SpherePoint {
        let mut p = z;
        for &j in w {
            p = gs.generators()[j as usize].eval(p, gs.tolerances());
        }
        p
    };

    let mut found = Vec::new();
    for a in 0..words.len() {
        for b in (a + 1)..words.len() {
            let (wa, wb) = (&words[a], &words[b]);
            if word_degree(wa) != word_degree(wb) {
                continue;
            }
            let max_d = samples
                .iter()
                .map(|&z| chordal_distance(orbit(wa, z), orbit(wb, z)))
                .fold(0.0, f64::max);
            if max_d <= 1e-9 {
                found.push(WordCoincidence {
                    word_a: format_word(wa),
                    word_b: format_word(wb),
                    max_distance: max_d,
                });
            }
        }
    }
    Ok(found)
}
