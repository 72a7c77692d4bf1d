//! The Riemann sphere: points, the chordal metric, and rational maps with
//! spherical-derivative norms and fiberwise preimages.
//!
//! Every operation is total on the sphere. Evaluation and derivative norms
//! switch charts at |z| = 1 (conjugating by the isometry `z ↦ 1/z`) so no
//! intermediate quantity exceeds the coefficient scale; preimage solving at ∞
//! and at degree drops is handled by projective root counting: if the solve
//! polynomial for `f(y) = x` loses `k` degrees against `deg f`, then ∞ is a
//! preimage of multiplicity `k`.

use num_complex::Complex64;

use crate::poly::{roots, Poly};
use crate::{Error, NumericTolerances, Result};

/// A point on the Riemann sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    /// Wraps a complex number, collapsing non-finite or overflowing values
    /// (modulus above `NumericTolerances::overflow`) to ∞.
    pub fn from_complex(z: Complex64, tol: &NumericTolerances) -> Self {
        if !z.re.is_finite() || !z.im.is_finite() || z.norm() > tol.overflow {
            SpherePoint::Infinity
        } else {
            SpherePoint::Finite(z)
        }
    }

    pub fn finite(re: f64, im: f64) -> Self {
        SpherePoint::Finite(Complex64::new(re, im))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    /// The underlying complex number; `None` at ∞.
    pub fn as_complex(&self) -> Option<Complex64> {
        match self {
            SpherePoint::Finite(z) => Some(*z),
            SpherePoint::Infinity => None,
        }
    }

    /// Deterministic total order: finite points by (re, im), ∞ last.
    pub fn order_key(&self) -> (u8, f64, f64) {
        match self {
            SpherePoint::Finite(z) => (0, z.re, z.im),
            SpherePoint::Infinity => (1, 0.0, 0.0),
        }
    }
}

impl std::fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SpherePoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im + 0.0),
            SpherePoint::Infinity => write!(f, "inf"),
        }
    }
}

/// Chordal distance `d(z,w) = 2|z−w| / √(1+|z|²)√(1+|w|²)`, with
/// `d(z,∞) = 2/√(1+|z|²)`. The sphere has diameter 2. Factors are rooted
/// separately so the product never overflows for |z| up to ~1e150.
pub fn chordal_distance(a: SpherePoint, b: SpherePoint) -> f64 {
    match (a, b) {
        (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
        (SpherePoint::Finite(z), SpherePoint::Infinity)
        | (SpherePoint::Infinity, SpherePoint::Finite(z)) => 2.0 / z.norm().hypot(1.0),
        (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
            2.0 * (z - w).norm() / (z.norm().hypot(1.0) * w.norm().hypot(1.0))
        }
    }
}

/// Merges points that lie within chordal `tol` of an earlier point, returning
/// representatives with multiplicities. Input order decides representatives;
/// output is sorted by [`SpherePoint::order_key`].
pub fn cluster_points(points: &[SpherePoint], tol: f64) -> Vec<(SpherePoint, usize)> {
    let mut clusters: Vec<(SpherePoint, usize)> = Vec::new();
    for &p in points {
        if let Some(entry) = clusters
            .iter_mut()
            .find(|(q, _)| chordal_distance(p, *q) <= tol)
        {
            entry.1 += 1;
        } else {
            clusters.push((p, 1));
        }
    }
    clusters.sort_by(|a, b| a.0.order_key().partial_cmp(&b.0.order_key()).unwrap());
    clusters
}

/// A rational map `f = num/den` on the sphere, kept in lowest terms with a
/// monic denominator. Degree is `max(deg num, deg den) ≥ 1`.
#[derive(Clone, Debug)]
pub struct RationalMap {
    num: Poly,
    den: Poly,
    deg: usize,
    // Chart companions, precomputed once: coefficients reversed to degree
    // `deg`, i.e. the map written in the w = 1/z input chart.
    num_rev: Poly,
    den_rev: Poly,
    // Wronskians num′·den − num·den′ for both charts (numerator of f′).
    wronskian: Poly,
    wronskian_rev: Poly,
}

impl RationalMap {
    /// Builds and validates a rational map. Rejects: degree 0 (constants),
    /// a zero denominator, and pairs that are not in lowest terms (some root
    /// of `den` is also a root of `num` within relative residual
    /// `tol.gcd_tol`).
    pub fn new(num: Poly, den: Poly, tol: &NumericTolerances) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidMap("denominator is identically zero".into()));
        }
        if num.is_zero() {
            return Err(Error::InvalidMap("numerator is identically zero".into()));
        }
        let deg = num.degree().max(den.degree());
        if deg == 0 {
            return Err(Error::InvalidMap(
                "constant maps are not rational maps of degree ≥ 1".into(),
            ));
        }
        // Normalize: denominator monic.
        let lead = *den.coeffs().last().expect("nonzero");
        let num = num.scale(lead.inv());
        let den = den.scale(lead.inv());

        // Lowest-terms check. Any common root is in particular a root of
        // `den`, so checking den-roots against num suffices.
        if den.degree() >= 1 {
            for r in roots(&den, tol)? {
                let scale = num.eval_abs_scale(r.norm()).max(f64::MIN_POSITIVE);
                if num.eval(r).norm() / scale <= tol.gcd_tol {
                    return Err(Error::InvalidMap(format!(
                        "numerator and denominator share a root near {r} (not in lowest terms)"
                    )));
                }
            }
        }

        let num_rev = num.reversed(deg);
        let den_rev = den.reversed(deg);
        let wronskian = num.derivative().mul(&den).sub(&num.mul(&den.derivative()));
        let wronskian_rev = num_rev
            .derivative()
            .mul(&den_rev)
            .sub(&num_rev.mul(&den_rev.derivative()));
        Ok(Self {
            num,
            den,
            deg,
            num_rev,
            den_rev,
            wronskian,
            wronskian_rev,
        })
    }

    /// Convenience constructor for a polynomial map.
    pub fn from_polynomial(coeffs: Vec<Complex64>, tol: &NumericTolerances) -> Result<Self> {
        Self::new(
            Poly::new(coeffs),
            Poly::constant(Complex64::new(1.0, 0.0)),
            tol,
        )
    }

    pub fn degree(&self) -> usize {
        self.deg
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    /// True for Möbius transformations (degree 1).
    pub fn is_mobius(&self) -> bool {
        self.deg == 1
    }

    /// Picks the evaluation chart: returns `(w, num, den, wronskian)` where
    /// `w` is the input written in a chart with `|w| ≤ 1`.
    fn chart(&self, z: SpherePoint) -> (Complex64, &Poly, &Poly, &Poly) {
        match z {
            SpherePoint::Finite(c) if c.norm() <= 1.0 => (c, &self.num, &self.den, &self.wronskian),
            SpherePoint::Finite(c) => (c.inv(), &self.num_rev, &self.den_rev, &self.wronskian_rev),
            SpherePoint::Infinity => (
                Complex64::new(0.0, 0.0),
                &self.num_rev,
                &self.den_rev,
                &self.wronskian_rev,
            ),
        }
    }

    /// Evaluates `f(z)`. Total: poles and overflowing values map to ∞.
    pub fn eval(&self, z: SpherePoint, tol: &NumericTolerances) -> SpherePoint {
        let (w, num, den, _) = self.chart(z);
        let p = num.eval(w);
        let q = den.eval(w);
        if q.norm() == 0.0 || p.norm() > q.norm() * tol.overflow {
            SpherePoint::Infinity
        } else {
            SpherePoint::from_complex(p / q, tol)
        }
    }

    /// Spherical derivative norm `‖f′(z)‖ = |f′(z)|·(1+|z|²)/(1+|f(z)|²)`,
    /// extended to ∞ and to poles by chart conjugation.
    ///
    /// In the chart with `|w| ≤ 1` and companions `(P, Q, W)` this is the
    /// output-chart-free expression `|W(w)|·(1+|w|²) / (|P(w)|² + |Q(w)|²)`,
    /// which stays bounded by coefficient scales: no overflow, and critical
    /// points return exactly 0.
    pub fn spherical_deriv_norm(&self, z: SpherePoint) -> f64 {
        let (w, num, den, wronskian) = self.chart(z);
        let p = num.eval(w).norm();
        let q = den.eval(w).norm();
        let wr = wronskian.eval(w).norm();
        wr * (1.0 + w.norm_sqr()) / (p * p + q * q)
    }

    /// All preimages of `x` counted with multiplicity (`Σ mult = deg f`).
    ///
    /// For finite `x` with |x| ≤ 1 this solves `num(y) − x·den(y) = 0`; for
    /// |x| > 1 the better-conditioned `den(y) − (1/x)·num(y) = 0`; for x = ∞
    /// the poles `den(y) = 0`. In each case, if the solve polynomial's degree
    /// is `deg f − k`, then ∞ is a preimage of multiplicity `k`. Roots within
    /// chordal `tol.root_cluster` are merged into a single preimage with
    /// multiplicity.
    pub fn preimages(
        &self,
        x: SpherePoint,
        tol: &NumericTolerances,
    ) -> Result<Vec<(SpherePoint, usize)>> {
        let solve = match x {
            SpherePoint::Infinity => self.den.clone(),
            SpherePoint::Finite(c) if c.norm() <= 1.0 => self.num.sub(&self.den.scale(c)),
            SpherePoint::Finite(c) => self.den.sub(&self.num.scale(c.inv())),
        };
        let inf_mult = self.deg - solve.degree().min(self.deg);
        let finite: Vec<SpherePoint> = if solve.degree() >= 1 {
            roots(&solve, tol)?
                .into_iter()
                .map(|r| SpherePoint::from_complex(r, tol))
                .collect()
        } else {
            Vec::new()
        };
        let mut clustered = cluster_points(&finite, tol.root_cluster);
        if inf_mult > 0 {
            if let Some(entry) = clustered
                .iter_mut()
                .find(|(p, _)| matches!(p, SpherePoint::Infinity))
            {
                entry.1 += inf_mult;
            } else {
                clustered.push((SpherePoint::Infinity, inf_mult));
            }
        }
        debug_assert_eq!(clustered.iter().map(|(_, m)| m).sum::<usize>(), self.deg);
        Ok(clustered)
    }

    /// Critical points with multiplicities (2·deg − 2 in total, possibly an
    /// empty list for Möbius maps). Finite critical points are the roots of
    /// the Wronskian `num′·den − num·den′`; the multiplicity at ∞ is the
    /// Wronskian's degree drop against `2·deg − 2`.
    pub fn critical_points(&self, tol: &NumericTolerances) -> Result<Vec<(SpherePoint, usize)>> {
        let total = 2 * self.deg - 2;
        if total == 0 {
            return Ok(Vec::new());
        }
        let wdeg = self.wronskian.degree().min(total);
        let finite: Vec<SpherePoint> = if self.wronskian.degree() >= 1 {
            roots(&self.wronskian, tol)?
                .into_iter()
                .map(|r| SpherePoint::from_complex(r, tol))
                .collect()
        } else {
            Vec::new()
        };
        let mut clustered = cluster_points(&finite, tol.root_cluster);
        let inf_mult = total - wdeg;
        if inf_mult > 0 {
            clustered.push((SpherePoint::Infinity, inf_mult));
        }
        Ok(clustered)
    }

    /// Symbolic composition `self ∘ inner`. Fails if the composed degree
    /// exceeds `tol.compose_degree_cap`.
    pub fn compose(&self, inner: &RationalMap, tol: &NumericTolerances) -> Result<RationalMap> {
        let d_out = self.deg * inner.deg;
        if d_out > tol.compose_degree_cap {
            return Err(Error::InvalidParameter(format!(
                "composed degree {d_out} exceeds cap {}",
                tol.compose_degree_cap
            )));
        }
        // f(r/s) with f = p/q: numerator Σ p_k r^k s^{D−k}, denominator
        // Σ q_k r^k s^{D−k}, where D = deg f (common s^D cleared).
        let dd = self.deg;
        let r = &inner.num;
        let s = &inner.den;
        // Precompute r^k·s^{D−k}.
        let mut r_pows = vec![Poly::constant(Complex64::new(1.0, 0.0))];
        let mut s_pows = vec![Poly::constant(Complex64::new(1.0, 0.0))];
        for k in 1..=dd {
            r_pows.push(r_pows[k - 1].mul(r));
            s_pows.push(s_pows[k - 1].mul(s));
        }
        let convolve = |coeffs: &Poly| -> Poly {
            let mut acc = Poly::zero();
            for (k, &c) in coeffs.coeffs().iter().enumerate() {
                let term = r_pows[k].mul(&s_pows[dd - k]).scale(c);
                acc = acc.add(&term);
            }
            acc
        };
        RationalMap::new(convolve(&self.num), convolve(&self.den), tol)
    }
}

impl std::fmt::Display for RationalMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let fmt_poly = |p: &Poly| -> String {
            p.coeffs()
                .iter()
                .enumerate()
                .filter(|(_, c)| c.norm() > 0.0)
                .map(|(k, c)| format!("({:.6}{:+.6}i)z^{k}", c.re, c.im))
                .collect::<Vec<_>>()
                .join(" + ")
        };
        write!(f, "[{}] / [{}]", fmt_poly(&self.num), fmt_poly(&self.den))
    }
}
