//! Dense complex polynomials and a simultaneous (Weierstrass/Durand–Kerner)
//! root solver.
//!
//! Coefficients are stored in ascending order of degree. The solver uses
//! deterministic initial guesses — equally spaced on a circle whose radius is
//! the Cauchy bound `1 + max|c_k|` of the monic normalization, with a fixed
//! phase offset to break conjugation symmetry — so repeated runs produce
//! bit-identical roots. There are no randomized restarts.

use num_complex::Complex64;

use crate::{Error, NumericTolerances, Result};

/// Relative magnitude below which leading coefficients are trimmed away.
const TRIM_REL: f64 = 1e-14;

/// A polynomial over ℂ with coefficients in ascending order.
/// Invariant: either empty (the zero polynomial) or the leading coefficient
/// is nonzero after relative trimming.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    coeffs: Vec<Complex64>,
}

impl Poly {
    /// Builds a polynomial, trimming leading coefficients that are zero or
    /// relatively negligible (`≤ 1e-14·max|c_k|`). The trim threshold is what
    /// detects degree drops when solving `p(y) − x·q(y) = 0`.
    pub fn new(mut coeffs: Vec<Complex64>) -> Self {
        let maxmag = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = TRIM_REL * maxmag;
        while let Some(c) = coeffs.last() {
            if c.norm() <= cut {
                coeffs.pop();
            } else {
                break;
            }
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![c])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Horner evaluation.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    /// `Σ |c_k|·|z|^k`, the natural scale for backward-error tests.
    pub fn eval_abs_scale(&self, z_abs: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * z_abs + c.norm();
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c * k as f64)
            .collect();
        Poly::new(coeffs)
    }

    pub fn scale(&self, s: Complex64) -> Poly {
        Poly::new(self.coeffs.iter().map(|&c| c * s).collect())
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (k, &c) in self.coeffs.iter().enumerate() {
            out[k] += c;
        }
        for (k, &c) in other.coeffs.iter().enumerate() {
            out[k] += c;
        }
        Poly::new(out)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// `z^d·p(1/z)`: coefficients padded to length `d+1` and reversed.
    /// This is the chart change `z ↦ 1/z` applied to a degree-`d` map.
    pub fn reversed(&self, d: usize) -> Poly {
        let mut padded = self.coeffs.clone();
        padded.resize(d + 1, Complex64::new(0.0, 0.0));
        padded.reverse();
        Poly::new(padded)
    }
}

/// All complex roots of `p`, counted with multiplicity (`degree` entries).
///
/// Strategy: exact zero roots are deflated first (trailing zero
/// coefficients), degree-1 factors are solved in closed form, and the rest
/// goes through Weierstrass simultaneous iteration on the monic
/// normalization. Fails if the final backward error of any root exceeds
/// `tol.root_residual` relative to `Σ|c_k||root|^k`.
pub fn roots(p: &Poly, tol: &NumericTolerances) -> Result<Vec<Complex64>> {
    if p.is_zero() || p.degree() == 0 {
        return Err(Error::InvalidMap(
            "root solve requested for a constant polynomial".into(),
        ));
    }
    let mut coeffs = p.coeffs().to_vec();
    let mut out = Vec::with_capacity(p.degree());

    // Deflate exact roots at the origin.
    let zeros = coeffs
        .iter()
        .take_while(|c| c.norm() == 0.0)
        .count()
        .min(coeffs.len() - 1);
    if zeros > 0 {
        coeffs.drain(..zeros);
        out.extend(std::iter::repeat(Complex64::new(0.0, 0.0)).take(zeros));
    }

    let d = coeffs.len() - 1;
    if d == 0 {
        return Ok(out);
    }
    if d == 1 {
        out.push(-coeffs[0] / coeffs[1]);
        return Ok(out);
    }

    // Monic normalization; the Cauchy bound 1 + max|c_k| then encloses all
    // roots and fixes the deterministic initial circle.
    let lead = coeffs[d];
    let monic: Vec<Complex64> = coeffs.iter().map(|&c| c / lead).collect();
    let radius = 1.0 + monic[..d].iter().map(|c| c.norm()).fold(0.0, f64::max);

    let mut xs: Vec<Complex64> = (0..d)
        .map(|k| {
            // Fixed 0.4-radian phase offset: keeps guesses off the real axis,
            // where conjugate-symmetric root sets would stall the iteration.
            let theta = 2.0 * std::f64::consts::PI * k as f64 / d as f64 + 0.4;
            Complex64::from_polar(radius, theta)
        })
        .collect();

    let horner = |z: Complex64| {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in monic.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };

    let mut steps = vec![Complex64::new(0.0, 0.0); d];
    for _ in 0..tol.max_root_iter {
        let mut max_step = 0.0f64;
        for i in 0..d {
            let xi = xs[i];
            let mut denom = Complex64::new(1.0, 0.0);
            for (j, &xj) in xs.iter().enumerate() {
                if j != i {
                    let mut diff = xi - xj;
                    if diff.norm() == 0.0 {
                        // Collided iterates: nudge apart deterministically.
                        diff = Complex64::new(tol.root_step, tol.root_step);
                    }
                    denom *= diff;
                }
            }
            steps[i] = horner(xi) / denom;
        }
        for i in 0..d {
            xs[i] -= steps[i];
            let rel = steps[i].norm() / (1.0 + xs[i].norm());
            max_step = max_step.max(rel);
        }
        if max_step <= tol.root_step {
            break;
        }
    }

    // Backward-error acceptance on the original (pre-monic) coefficients.
    let p_defl = Poly::new(coeffs);
    for &x in &xs {
        let scale = p_defl.eval_abs_scale(x.norm()).max(f64::MIN_POSITIVE);
        let residual = p_defl.eval(x).norm() / scale;
        if !(residual <= tol.root_residual) {
            return Err(Error::RootSolveFailed {
                degree: p.degree(),
                residual,
            });
        }
    }
    out.extend(xs);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn trims_relatively_tiny_leading_coefficients() {
        // 1e-20·z^3 + z^2 + 1 is numerically quadratic.
        let p = Poly::new(vec![c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(1e-20, 0.0)]);
        assert_eq!(p.degree(), 2);
    }

    #[test]
    fn quadratic_roots_exact() {
        // z^2 - 4 = 0 → ±2
        let p = Poly::new(vec![c(-4.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let rs = sorted(roots(&p, &NumericTolerances::default()).unwrap());
        assert_relative_eq!(rs[0].re, -2.0, max_relative = 1e-12);
        assert_relative_eq!(rs[1].re, 2.0, max_relative = 1e-12);
        assert!(rs[0].im.abs() < 1e-12 && rs[1].im.abs() < 1e-12);
    }

    #[test]
    fn double_root_at_origin_is_deflated_exactly() {
        // z^2 = 0: trailing-zero deflation returns exact zeros, bypassing the
        // slow linear convergence of simultaneous iteration at multiple roots.
        let p = Poly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let rs = roots(&p, &NumericTolerances::default()).unwrap();
        assert_eq!(rs, vec![c(0.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn shifted_double_root_converges_within_cluster_radius() {
        // (z-1)^2 = z^2 - 2z + 1: both roots land within ~1e-7 of 1.
        let p = Poly::new(vec![c(1.0, 0.0), c(-2.0, 0.0), c(1.0, 0.0)]);
        let rs = roots(&p, &NumericTolerances::default()).unwrap();
        for r in rs {
            assert!((r - c(1.0, 0.0)).norm() < 1e-6, "root {r} too far from 1");
        }
    }

    #[test]
    fn roots_of_unity_from_symmetric_start() {
        // z^5 - 1: the fixed phase offset must not stall on symmetry.
        let mut coeffs = vec![c(-1.0, 0.0)];
        coeffs.extend(std::iter::repeat(c(0.0, 0.0)).take(4));
        coeffs.push(c(1.0, 0.0));
        let p = Poly::new(coeffs);
        let rs = roots(&p, &NumericTolerances::default()).unwrap();
        assert_eq!(rs.len(), 5);
        for r in rs {
            assert_relative_eq!(r.norm(), 1.0, max_relative = 1e-10);
            let p5 = r.powu(5);
            assert!((p5 - c(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn determinism_bit_for_bit() {
        let p = Poly::new(vec![c(0.3, -1.0), c(2.0, 0.1), c(-0.5, 0.0), c(1.0, 2.0)]);
        let a = roots(&p, &NumericTolerances::default()).unwrap();
        let b = roots(&p, &NumericTolerances::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
    }

    #[test]
    fn rejects_constant() {
        let p = Poly::new(vec![c(3.0, 0.0)]);
        assert!(roots(&p, &NumericTolerances::default()).is_err());
    }

    #[test]
    fn reversal_is_chart_change() {
        // p = 2z^2 + 3 over degree 2: rev = 3z^2 + 2, i.e. z^2·p(1/z).
        let p = Poly::new(vec![c(3.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)]);
        let r = p.reversed(2);
        let z = c(0.37, -0.81);
        let lhs = z.powu(2) * p.eval(1.0 / z);
        let rhs = r.eval(z);
        assert!((lhs - rhs).norm() < 1e-14);
    }
}
