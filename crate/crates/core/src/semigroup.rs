//! Finitely generated rational semigroups: words, chain derivative norms,
//! and fiberwise preimage trees.
//!
//! A word `u = (u₁, …, u_n)` over generator indices is applied **first index
//! first**: `f_u = f_{u_n} ∘ ⋯ ∘ f_{u_1}`. Under taking preimages the order
//! reverses naturally — a depth-n preimage node with word `u` is a point `y`
//! with `f_{u_n}(⋯ f_{u_1}(y) ⋯) = x` — so children of a node *prepend* their
//! generator index.

use num_complex::Complex64;

use crate::exec::flat_map_ordered;
use crate::sphere::{RationalMap, SpherePoint};
use crate::{Error, NumericTolerances, Result};

/// A finitely generated semigroup with its numeric tolerances.
#[derive(Clone, Debug)]
pub struct GeneratorSystem {
    gens: Vec<RationalMap>,
    tol: NumericTolerances,
}

/// One node of a preimage tree: a depth-n solution `y` of `f_u(y) = x`
/// together with the accumulated log chain norm
/// `log ‖(f_u)′(y)‖ = Σ_k log ‖f_{u_k}′(y_k)‖` along the forward orbit
/// `y = y₁ ↦ y₂ ↦ ⋯ ↦ x`.
#[derive(Clone, Debug)]
pub struct PreimageNode {
    pub point: SpherePoint,
    /// Word in application order (0-based generator indices).
    pub word: Vec<u8>,
    /// `log ‖(f_word)′(point)‖`; `−∞` on critical chains.
    pub log_norm: f64,
}

impl GeneratorSystem {
    /// Builds a system from at least one validated generator.
    pub fn new(gens: Vec<RationalMap>, tol: NumericTolerances) -> Result<Self> {
        if gens.is_empty() {
            return Err(Error::DegenerateSystem(
                "a generator system needs at least one map".into(),
            ));
        }
        if gens.len() > u8::MAX as usize {
            return Err(Error::DegenerateSystem(format!(
                "too many generators ({}); words are indexed by u8",
                gens.len()
            )));
        }
        Ok(Self { gens, tol })
    }

    pub fn generators(&self) -> &[RationalMap] {
        &self.gens
    }

    pub fn tolerances(&self) -> &NumericTolerances {
        &self.tol
    }

    /// Sum of generator degrees: the branching factor of every preimage tree
    /// level, and `e^{P(0)}` for the pressure at t = 0.
    pub fn total_degree(&self) -> usize {
        self.gens.iter().map(|f| f.degree()).sum()
    }

    /// Evaluates `f_u = f_{u_n} ∘ ⋯ ∘ f_{u_1}` at `z` and the chain rule's
    /// `log ‖(f_u)′(z)‖`. Errors with [`Error::CriticalOrbit`] if the orbit
    /// passes through a critical point (chain norm 0).
    pub fn eval_word(&self, word: &[u8], z: SpherePoint) -> Result<(SpherePoint, f64)> {
        let mut p = z;
        let mut log_norm = 0.0;
        for &j in word {
            let f = self
                .gens
                .get(j as usize)
                .ok_or_else(|| Error::InvalidParameter(format!("generator index {j} out of range")))?;
            let n = f.spherical_deriv_norm(p);
            if n == 0.0 {
                return Err(Error::CriticalOrbit);
            }
            log_norm += n.ln();
            p = f.eval(p, &self.tol);
        }
        Ok((p, log_norm))
    }

    /// Expands one tree level: all preimages of `node` under every generator,
    /// in deterministic order (generator index, then root order), with
    /// multiplicities duplicated so each level has exactly
    /// `total_degree()^n` nodes.
    fn expand_node(&self, node: &PreimageNode) -> Result<Vec<PreimageNode>> {
        let mut out = Vec::with_capacity(self.total_degree());
        for (j, f) in self.gens.iter().enumerate() {
            for (y, mult) in f.preimages(node.point, &self.tol)? {
                // log ‖(f_j∘f_u at parent)…‖: the new branch evaluates f_j
                // first, so the chain norm picks up ‖f_j′(y)‖ at the new point.
                let n = f.spherical_deriv_norm(y);
                let log_norm = if n == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    n.ln() + node.log_norm
                };
                let mut word = Vec::with_capacity(node.word.len() + 1);
                word.push(j as u8);
                word.extend_from_slice(&node.word);
                for _ in 0..mult {
                    out.push(PreimageNode {
                        point: y,
                        word: word.clone(),
                        log_norm,
                    });
                }
            }
        }
        Ok(out)
    }

    /// The full depth-`depth` preimage tree of `x`, returned level by level
    /// (`levels[0]` = the root at depth 0, `levels[n]` = all `f_u(y) = x`
    /// with `|u| = n`, counted with multiplicity).
    pub fn preimage_tree(&self, x: SpherePoint, depth: usize) -> Result<Vec<Vec<PreimageNode>>> {
        let root = PreimageNode {
            point: x,
            word: Vec::new(),
            log_norm: 0.0,
        };
        let mut levels = vec![vec![root]];
        let branch = self.total_degree();
        let mut count = 1usize;
        for _ in 0..depth {
            count = count.saturating_mul(branch);
            if count > self.tol.max_tree_nodes {
                return Err(Error::InvalidParameter(format!(
                    "preimage tree level of {count} nodes exceeds cap {}",
                    self.tol.max_tree_nodes
                )));
            }
            let prev = levels.last().expect("nonempty");
            let results = flat_map_ordered(prev, |node| {
                self.expand_node(node)
                    .map(|v| v.into_iter().map(Ok).collect())
                    .unwrap_or_else(|e| vec![Err(e)])
            });
            let next: Result<Vec<PreimageNode>> = results.into_iter().collect();
            levels.push(next?);
        }
        Ok(levels)
    }

    /// Expands a `(point, accumulated log norm)` frontier by one level, in
    /// the same deterministic order as [`GeneratorSystem::preimage_tree`].
    fn expand_frontier(&self, frontier: &[(SpherePoint, f64)]) -> Result<Vec<(SpherePoint, f64)>> {
        let branch = self.total_degree();
        let results = flat_map_ordered(frontier, |&(p, acc)| {
            let mut out = Vec::with_capacity(branch);
            for f in &self.gens {
                match f.preimages(p, &self.tol) {
                    Ok(pre) => {
                        for (y, mult) in pre {
                            let n = f.spherical_deriv_norm(y);
                            let log_norm = if n == 0.0 {
                                f64::NEG_INFINITY
                            } else {
                                n.ln() + acc
                            };
                            for _ in 0..mult {
                                out.push(Ok((y, log_norm)));
                            }
                        }
                    }
                    Err(e) => out.push(Err(e)),
                }
            }
            out
        });
        results.into_iter().collect()
    }

    fn check_level_cap(&self, count: &mut usize) -> Result<()> {
        *count = count.saturating_mul(self.total_degree());
        if *count > self.tol.max_tree_nodes {
            return Err(Error::InvalidParameter(format!(
                "preimage tree level of {count} nodes exceeds cap {}",
                self.tol.max_tree_nodes
            )));
        }
        Ok(())
    }

    /// Per-level `log ‖(f_u)′(y)‖` arrays for depths `0..=depth`, keeping
    /// only the norms (words and points are dropped). `levels[n]` has
    /// `total_degree()^n` entries in the same deterministic order as
    /// [`GeneratorSystem::preimage_tree`]. This is the shared cache behind
    /// pressure, dimension, and orbit-sum estimates.
    pub fn log_norm_levels(&self, x: SpherePoint, depth: usize) -> Result<Vec<Vec<f64>>> {
        let mut levels: Vec<Vec<f64>> = vec![vec![0.0]];
        let mut frontier: Vec<(SpherePoint, f64)> = vec![(x, 0.0)];
        let mut count = 1usize;
        for _ in 0..depth {
            self.check_level_cap(&mut count)?;
            frontier = self.expand_frontier(&frontier)?;
            levels.push(frontier.iter().map(|&(_, l)| l).collect());
        }
        Ok(levels)
    }

    /// Like [`GeneratorSystem::log_norm_levels`] but retains the preimage
    /// points alongside the norms — the raw material for atomic measures.
    pub fn point_norm_levels(
        &self,
        x: SpherePoint,
        depth: usize,
    ) -> Result<Vec<Vec<(SpherePoint, f64)>>> {
        let mut levels = vec![vec![(x, 0.0)]];
        let mut count = 1usize;
        for _ in 0..depth {
            self.check_level_cap(&mut count)?;
            let next = self.expand_frontier(levels.last().expect("nonempty"))?;
            levels.push(next);
        }
        Ok(levels)
    }

    /// All compositions `f_w` over length-`n` words `w` in lexicographic
    /// order: the generator set of the n-step block system. The Julia set is
    /// invariant under blocking, which makes this a cross-check for any
    /// word-length-based estimate.
    pub fn blocked_system(&self, n: usize) -> Result<GeneratorSystem> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "block length must be at least 1".into(),
            ));
        }
        let k = self.gens.len();
        let mut out = Vec::new();
        let mut word = vec![0usize; n];
        loop {
            // f_w = f_{w_n} ∘ ⋯ ∘ f_{w_1}, built right-to-left.
            let mut comp = self.gens[word[0]].clone();
            for &j in &word[1..] {
                comp = self.gens[j].compose(&comp, &self.tol)?;
            }
            out.push(comp);
            // Advance the lex counter.
            let mut i = n;
            loop {
                if i == 0 {
                    return GeneratorSystem::new(out, self.tol.clone());
                }
                i -= 1;
                word[i] += 1;
                if word[i] < k {
                    break;
                }
                word[i] = 0;
            }
        }
    }
}

/// Formats a word for reports: 1-based indices joined by dots ("1.2.1").
pub fn format_word(word: &[u8]) -> String {
    word.iter()
        .map(|j| (j + 1).to_string())
        .collect::<Vec<_>>()
        .join(".")
}

/// Parses `format_word` output back into 0-based indices.
pub fn parse_word(s: &str) -> Result<Vec<u8>> {
    s.split('.')
        .map(|part| {
            part.trim()
                .parse::<u8>()
                .ok()
                .and_then(|v| v.checked_sub(1))
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("bad word component {part:?} (1-based indices)"))
                })
        })
        .collect()
}

/// Convenience: a polynomial generator from real coefficients (ascending).
pub fn poly_gen(coeffs: &[f64], tol: &NumericTolerances) -> Result<RationalMap> {
    RationalMap::from_polynomial(
        coeffs.iter().map(|&c| Complex64::new(c, 0.0)).collect(),
        tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use approx::assert_relative_eq;

    fn tol() -> NumericTolerances {
        NumericTolerances::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sys_z2() -> GeneratorSystem {
        GeneratorSystem::new(vec![poly_gen(&[0.0, 0.0, 1.0], &tol()).unwrap()], tol()).unwrap()
    }

    /// ⟨z², z²/4⟩.
    fn sys_two_quadratics() -> GeneratorSystem {
        let f1 = poly_gen(&[0.0, 0.0, 1.0], &tol()).unwrap();
        let f2 = RationalMap::new(
            Poly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]),
            Poly::constant(c(4.0, 0.0)),
            &tol(),
        )
        .unwrap();
        GeneratorSystem::new(vec![f1, f2], tol()).unwrap()
    }

    #[test]
    fn eval_word_chain_norm_z_squared_twice() {
        // f = z², u = (1,1): f_u(1) = 1, ‖(z⁴)′(1)‖ = 4·(1+1)/(1+1) = 4.
        let gs = sys_z2();
        let (p, log_norm) = gs
            .eval_word(&[0, 0], SpherePoint::finite(1.0, 0.0))
            .unwrap();
        assert_eq!(p, SpherePoint::finite(1.0, 0.0));
        assert_relative_eq!(log_norm, 4.0_f64.ln(), max_relative = 1e-12);
    }

    #[test]
    fn eval_word_mixed_generators() {
        // u = (2) at z = 2 with f₂ = z²/4: f₂(2) = 1,
        // ‖f₂′(2)‖ = |2·2/4|·(1+4)/(1+1) = 5/2… computed via the chart formula.
        let gs = sys_two_quadratics();
        let (p, log_norm) = gs.eval_word(&[1], SpherePoint::finite(2.0, 0.0)).unwrap();
        assert_eq!(p, SpherePoint::finite(1.0, 0.0));
        let expected = 1.0_f64 * (1.0 + 4.0) / (1.0 + 1.0); // |f₂′(2)| = 1
        assert_relative_eq!(log_norm, expected.ln(), max_relative = 1e-12);
    }

    #[test]
    fn eval_word_critical_orbit_errors() {
        let gs = sys_z2();
        assert!(matches!(
            gs.eval_word(&[0], SpherePoint::finite(0.0, 0.0)),
            Err(Error::CriticalOrbit)
        ));
    }

    #[test]
    fn preimage_tree_z_squared_depth_two() {
        // x = 1: level 2 holds the four 4th roots of unity, each with
        // log ‖(z⁴)′‖ = log 4 (the chain norm telescopes on |z| = 1).
        let gs = sys_z2();
        let levels = gs
            .preimage_tree(SpherePoint::finite(1.0, 0.0), 2)
            .unwrap();
        assert_eq!(levels.len(), 3);
        assert_eq!(levels[2].len(), 4);
        for node in &levels[2] {
            assert_relative_eq!(node.log_norm, 4.0_f64.ln(), max_relative = 1e-10);
            assert_eq!(node.word, vec![0, 0]);
            // Forward check: f_u(y) = x.
            let (back, _) = gs.eval_word(&node.word, node.point).unwrap();
            assert!(
                crate::sphere::chordal_distance(back, SpherePoint::finite(1.0, 0.0)) < 1e-9
            );
        }
    }

    #[test]
    fn preimage_tree_level_sizes_follow_total_degree() {
        let gs = sys_two_quadratics();
        assert_eq!(gs.total_degree(), 4);
        let levels = gs
            .preimage_tree(SpherePoint::finite(1.0, 0.0), 3)
            .unwrap();
        for (n, level) in levels.iter().enumerate() {
            assert_eq!(level.len(), 4usize.pow(n as u32));
        }
    }

    #[test]
    fn log_norm_levels_match_full_tree() {
        let gs = sys_two_quadratics();
        let x = SpherePoint::finite(0.7, 0.35);
        let tree = gs.preimage_tree(x, 3).unwrap();
        let lean = gs.log_norm_levels(x, 3).unwrap();
        let with_points = gs.point_norm_levels(x, 3).unwrap();
        assert_eq!(tree.len(), lean.len());
        for ((full, slim), pn) in tree.iter().zip(&lean).zip(&with_points) {
            let from_tree: Vec<f64> = full.iter().map(|n| n.log_norm).collect();
            assert_eq!(&from_tree, slim, "orders must agree bit-for-bit");
            let from_pn: Vec<f64> = pn.iter().map(|&(_, l)| l).collect();
            assert_eq!(&from_tree, &from_pn);
            for (node, &(p, _)) in full.iter().zip(pn) {
                assert_eq!(node.point, p);
            }
        }
    }

    #[test]
    fn tree_words_prepend_and_verify_forward() {
        let gs = sys_two_quadratics();
        let x = SpherePoint::finite(3.0, 1.0);
        let levels = gs.preimage_tree(x, 2).unwrap();
        for node in &levels[2] {
            let (back, log_norm) = gs.eval_word(&node.word, node.point).unwrap();
            assert!(crate::sphere::chordal_distance(back, x) < 1e-8);
            assert_relative_eq!(log_norm, node.log_norm, max_relative = 1e-9);
        }
    }

    #[test]
    fn tree_node_cap_enforced() {
        let gs = sys_two_quadratics();
        let mut t = tol();
        t.max_tree_nodes = 10;
        let gs = GeneratorSystem::new(gs.gens.clone(), t).unwrap();
        assert!(gs.preimage_tree(SpherePoint::finite(1.0, 0.0), 3).is_err());
    }

    #[test]
    fn blocked_system_of_affine_maps() {
        // ⟨2z, 3z⟩ blocked at n = 2 → [4z, 6z, 6z, 9z] in lex word order.
        let gs = GeneratorSystem::new(
            vec![
                poly_gen(&[0.0, 2.0], &tol()).unwrap(),
                poly_gen(&[0.0, 3.0], &tol()).unwrap(),
            ],
            tol(),
        )
        .unwrap();
        let blocked = gs.blocked_system(2).unwrap();
        assert_eq!(blocked.generators().len(), 4);
        let at_one: Vec<f64> = blocked
            .generators()
            .iter()
            .map(|f| {
                f.eval(SpherePoint::finite(1.0, 0.0), &tol())
                    .as_complex()
                    .unwrap()
                    .re
            })
            .collect();
        assert_eq!(at_one, vec![4.0, 6.0, 6.0, 9.0]);
    }

    #[test]
    fn word_formatting_round_trip() {
        let w = vec![0u8, 1, 0, 2];
        let s = format_word(&w);
        assert_eq!(s, "1.2.1.3");
        assert_eq!(parse_word(&s).unwrap(), w);
        assert!(parse_word("0.1").is_err());
    }
}
