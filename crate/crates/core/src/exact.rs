//! Exact small-scale combinatorics and analytic bounds.
//!
//! Plane-tree enumeration (balanced-sequence lexicographic order),
//! fully-parked-tree enumeration by brute force, exact expected flux over
//! all recursive trees of small size, a truncated/closed-form first-moment
//! bound for the expected number of cars reaching the root of the time-`t`
//! tree, and the exponential occupancy bounds along the limit spine.

use crate::car_laws::{CarLaw, GeneralFamily};
use crate::error::{Error, Result};
use crate::stats::KahanSum;

/// Ordered rooted tree in preorder: `parent[0]` is a sentinel and
/// `parent[i] < i` for `i >= 1`; children of a vertex appear in plane
/// (left-to-right) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneTree {
    parent: Vec<usize>,
}

impl PlaneTree {
    pub fn n(&self) -> usize {
        self.parent.len()
    }

    pub fn parent_of(&self, v: usize) -> Option<usize> {
        if v == 0 {
            None
        } else {
            Some(self.parent[v])
        }
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }
}

const MAX_ENUM_VERTICES: usize = 12;

/// Visit every plane tree with `n` vertices exactly once, in lexicographic
/// order of the balanced parenthesis sequence (`(` < `)`).
pub fn for_each_plane_tree<F: FnMut(&PlaneTree)>(n: usize, mut f: F) -> Result<()> {
    if n == 0 || n > MAX_ENUM_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "plane tree enumeration supports 1..={MAX_ENUM_VERTICES} vertices, got {n}"
        )));
    }
    fn rec<F: FnMut(&PlaneTree)>(
        opened: usize,
        closed: usize,
        n: usize,
        parent: &mut Vec<usize>,
        stack: &mut Vec<usize>,
        f: &mut F,
    ) {
        if opened == n - 1 && closed == n - 1 {
            f(&PlaneTree { parent: parent.clone() });
            return;
        }
        if opened < n - 1 {
            let cur = *stack.last().unwrap();
            parent.push(cur);
            stack.push(parent.len() - 1);
            rec(opened + 1, closed, n, parent, stack, f);
            stack.pop();
            parent.pop();
        }
        if closed < opened {
            let popped = stack.pop().unwrap();
            rec(opened, closed + 1, n, parent, stack, f);
            stack.push(popped);
        }
    }
    let mut parent = vec![0usize];
    let mut stack = vec![0usize];
    rec(0, 0, n, &mut parent, &mut stack, &mut f);
    Ok(())
}

/// Collect the enumeration (small `n` only).
pub fn enum_plane_trees(n: usize) -> Result<Vec<PlaneTree>> {
    let mut out = Vec::new();
    for_each_plane_tree(n, |t| out.push(t.clone()))?;
    Ok(out)
}

pub fn plane_tree_count(n: usize) -> Result<u64> {
    let mut c = 0u64;
    for_each_plane_tree(n, |_| c += 1)?;
    Ok(c)
}

/// Cars passing by each vertex of a plane tree under arrivals `cars`
/// (preorder indexing, descending sweep).
pub fn plane_tree_visits(shape: &PlaneTree, cars: &[u32]) -> Vec<u64> {
    let n = shape.n();
    let mut visits: Vec<u64> = cars.iter().map(|&c| c as u64).collect();
    for v in (1..n).rev() {
        let over = visits[v].saturating_sub(1);
        if over > 0 {
            visits[shape.parent[v]] += over;
        }
    }
    visits
}

/// A plane tree together with arrivals whose parking occupies every
/// vertex. Exactly `m - n + 1` cars pass by the root.
#[derive(Debug, Clone)]
pub struct FullyParkedInstance {
    pub shape: PlaneTree,
    pub cars: Vec<u32>,
    pub root_visits: u64,
}

const MAX_FPT_VERTICES: usize = 9;

/// Visit every fully parked instance with `n` vertices, `m` cars, and at
/// most `k_max` cars per vertex.
pub fn for_each_fpt<F: FnMut(&PlaneTree, &[u32], u64)>(
    n: usize,
    m: usize,
    k_max: usize,
    mut f: F,
) -> Result<()> {
    if n == 0 || n > MAX_FPT_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "fully parked enumeration supports 1..={MAX_FPT_VERTICES} vertices, got {n}"
        )));
    }
    if m < n || m > n * k_max {
        return Err(Error::InvalidArgument(format!(
            "need n <= m <= n*k_max, got n={n}, m={m}, k_max={k_max}"
        )));
    }
    for_each_plane_tree(n, |shape| {
        let mut cars = vec![0u32; n];
        assign_rec(shape, &mut cars, 0, m, k_max, &mut f);
    })
}

fn assign_rec<F: FnMut(&PlaneTree, &[u32], u64)>(
    shape: &PlaneTree,
    cars: &mut Vec<u32>,
    pos: usize,
    budget: usize,
    k_max: usize,
    f: &mut F,
) {
    let n = shape.n();
    let slots_left = n - pos;
    if budget > slots_left * k_max {
        return;
    }
    if pos == n {
        let visits = plane_tree_visits(shape, cars);
        if visits.iter().all(|&w| w >= 1) {
            let root_visits = visits[0];
            debug_assert_eq!(
                root_visits,
                cars.iter().map(|&c| c as u64).sum::<u64>() - n as u64 + 1
            );
            f(shape, cars, root_visits);
        }
        return;
    }
    let hi = budget.min(k_max);
    for c in 0..=hi {
        cars[pos] = c as u32;
        assign_rec(shape, cars, pos + 1, budget - c, k_max, f);
    }
    cars[pos] = 0;
}

/// |FPT(n, m)| under the per-vertex cap `k_max`.
pub fn fpt_count(n: usize, m: usize, k_max: usize) -> Result<u64> {
    let mut c = 0u64;
    for_each_fpt(n, m, k_max, |_, _, _| c += 1)?;
    Ok(c)
}

/// Collect the instances (test-scale sizes only).
pub fn enum_fpt(n: usize, m: usize, k_max: usize) -> Result<Vec<FullyParkedInstance>> {
    let mut out = Vec::new();
    for_each_fpt(n, m, k_max, |shape, cars, root_visits| {
        out.push(FullyParkedInstance {
            shape: shape.clone(),
            cars: cars.to_vec(),
            root_visits,
        })
    })?;
    Ok(out)
}

const MAX_EXACT_FLUX_VERTICES: usize = 7;

/// Exact expected flux of a uniform recursive tree of size `n` under
/// i.i.d. arrivals: full enumeration of the `(n-1)!` trees and all
/// configurations with positive probability.
pub fn exact_expected_flux(n: usize, law: &CarLaw) -> Result<f64> {
    if n == 0 || n > MAX_EXACT_FLUX_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "exact expected flux supports 1..={MAX_EXACT_FLUX_VERTICES} vertices, got {n}"
        )));
    }
    let support: Vec<(u32, f64)> = (0..=law.max_cars())
        .map(|k| (k as u32, law.pmf(k)))
        .filter(|&(_, p)| p > 0.0)
        .collect();

    // parent[v] (1-based labels v = 2..=n; parent stored 0-based).
    fn trees<F: FnMut(&[usize])>(v: usize, n: usize, parent: &mut Vec<usize>, f: &mut F) {
        if v > n {
            f(parent);
            return;
        }
        for p in 0..v - 1 {
            parent.push(p);
            trees(v + 1, n, parent, f);
            parent.pop();
        }
    }

    fn configs<F: FnMut(&[u32], f64)>(
        pos: usize,
        n: usize,
        support: &[(u32, f64)],
        cars: &mut Vec<u32>,
        prob: f64,
        f: &mut F,
    ) {
        if pos == n {
            f(cars, prob);
            return;
        }
        for &(c, p) in support {
            cars.push(c);
            configs(pos + 1, n, support, cars, prob * p, f);
            cars.pop();
        }
    }

    let mut total = KahanSum::default();
    let mut tree_count = 0u64;
    let mut parent = vec![0usize]; // root sentinel
    trees(2, n, &mut parent, &mut |par: &[usize]| {
        tree_count += 1;
        let mut per_tree = KahanSum::default();
        let mut cars = Vec::with_capacity(n);
        configs(0, n, &support, &mut cars, 1.0, &mut |cfg, prob| {
            let mut visits: Vec<u64> = cfg.iter().map(|&c| c as u64).collect();
            for v in (1..n).rev() {
                let over = visits[v].saturating_sub(1);
                if over > 0 {
                    visits[par[v]] += over;
                }
            }
            let flux = visits[0].saturating_sub(1);
            per_tree.add(prob * flux as f64);
        });
        total.add(per_tree.value());
    });
    Ok(total.value() / tree_count as f64)
}

/// Constants of the subcritical first-moment regime:
/// `C = 8 (K+1) max_j C_j` and the admissible-horizon constant
/// `c = 1 / (2C)`, so the regime condition reads `alpha^{beta*} t <= c`.
pub fn subcritical_constants(family: &GeneralFamily) -> (f64, f64) {
    let max_c = family
        .coefficients()
        .iter()
        .map(|e| e.c)
        .fold(0.0f64, f64::max);
    let big_c = 8.0 * (family.k_max() as f64 + 1.0) * max_c;
    (big_c, 1.0 / (2.0 * big_c))
}

/// First-moment bound on the expected number of cars reaching the root of
/// the time-`t` tree, decomposed over fully parked root clusters.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub t: f64,
    pub alpha: f64,
    pub n_max: usize,
    pub m_max: usize,
    /// Truncated sum with exact per-instance weights
    /// `(m-n+1) t^{n-1} prod_v pmf(c_v)`.
    pub truncated_exact: f64,
    /// Same truncation with the coarse weight
    /// `(m-n+1) |FPT(n,m)| t^{n-1} (2 max C_j)^n alpha^{beta* m}`.
    pub truncated_coarse: f64,
    /// Geometric-series closed form
    /// `Cst / (t (1 - a)^2 (1 - C t a)^2)` with `a = alpha^{beta*}`;
    /// `None` when the series diverges (`C t a >= 1` or `a >= 1`).
    pub closed_form: Option<f64>,
    /// Exposed plane-tree constant (the bound scales linearly in it).
    pub cst: f64,
    /// `C = 8 (K+1) max_j C_j`.
    pub big_c: f64,
    /// `c = 1/(2C)`.
    pub small_c: f64,
}

impl BoundReport {
    /// Upper bound on everything beyond the truncation: closed form minus
    /// the coarse truncated part, infinite when the series diverges.
    pub fn tail(&self) -> f64 {
        match self.closed_form {
            Some(cf) => (cf - self.truncated_coarse).max(0.0),
            None => f64::INFINITY,
        }
    }

    pub fn diverged(&self) -> bool {
        self.closed_form.is_none()
    }
}

/// Check the small-density hypothesis `pmf(k) <= 2 C_k alpha^{beta_k k}`
/// for every k with positive mass.
pub fn alpha_small_enough(family: &GeneralFamily, alpha: f64) -> Result<bool> {
    let law = family.law(alpha)?;
    for k in 1..=family.k_max() {
        let bound = match family.coefficient(k) {
            Some(e) => 2.0 * e.c * alpha.powf(e.beta * k as f64),
            None => 0.0,
        };
        if law.pmf(k) > bound + 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn first_moment_bound(
    family: &GeneralFamily,
    t: f64,
    alpha: f64,
    n_max: usize,
    m_max: usize,
    cst: f64,
) -> Result<BoundReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("need t > 0, got {t}")));
    }
    if n_max == 0 || n_max > MAX_FPT_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "n_max must lie in 1..={MAX_FPT_VERTICES}"
        )));
    }
    if !alpha_small_enough(family, alpha)? {
        return Err(Error::InvalidArgument(format!(
            "alpha = {alpha} violates the small-density hypothesis \
             pmf(k) <= 2 C_k alpha^(beta_k k); declare matching coefficients"
        )));
    }
    let law = family.law(alpha)?;
    let k_max = family.k_max();
    let (big_c, small_c) = subcritical_constants(family);
    let max_c = family
        .coefficients()
        .iter()
        .map(|e| e.c)
        .fold(0.0f64, f64::max);
    let beta_star = family.beta_star();
    let a = if alpha == 0.0 { 0.0 } else { alpha.powf(beta_star) };

    let mut exact = KahanSum::default();
    let mut coarse = KahanSum::default();
    for n in 1..=n_max {
        let hi = m_max.min(n * k_max);
        for m in n..=hi {
            let t_pow = t.powi(n as i32 - 1);
            let mult = (m - n + 1) as f64;
            let mut count = 0u64;
            for_each_fpt(n, m, k_max, |_, cars, _| {
                count += 1;
                let weight: f64 = cars.iter().map(|&c| law.pmf(c as usize)).product();
                exact.add(mult * t_pow * weight);
            })?;
            let coarse_w = (2.0 * max_c).powi(n as i32) * a.powi(m as i32);
            coarse.add(mult * count as f64 * t_pow * coarse_w);
        }
    }
    let closed_form = if a < 1.0 && big_c * t * a < 1.0 {
        Some(cst / (t * (1.0 - a).powi(2) * (1.0 - big_c * t * a).powi(2)))
    } else {
        None
    };
    Ok(BoundReport {
        t,
        alpha,
        n_max,
        m_max,
        truncated_exact: exact.value(),
        truncated_coarse: coarse.value(),
        closed_form,
        cst,
        big_c,
        small_c,
    })
}

/// Upper bound on the probability that the k-th spine vertex of the limit
/// tree sees no car: `(1 + delta)^{-k}` for collision mass `delta`.
pub fn spine_empty_bound(delta: f64, k: u32) -> f64 {
    debug_assert!((0.0..=1.0).contains(&delta));
    (1.0 + delta).powi(-(k as i32))
}

/// Upper bound on the probability that the root of the time-`t` tree sees
/// no car: `e^{-delta t}`.
pub fn root_empty_bound(delta: f64, t: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&delta) && t >= 0.0);
    (-delta * t).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CATALAN: [u64; 12] = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796, 58786];

    #[test]
    fn plane_tree_counts_are_catalan() {
        for n in 1..=12usize {
            assert_eq!(plane_tree_count(n).unwrap(), CATALAN[n - 1], "n = {n}");
        }
        assert!(plane_tree_count(0).is_err());
        assert!(plane_tree_count(13).is_err());
    }

    #[test]
    fn enumeration_order_is_deterministic() {
        // n = 3: the all-nested word comes first (path), then the cherry.
        let trees = enum_plane_trees(3).unwrap();
        assert_eq!(trees.len(), 2);
        assert_eq!(trees[0].parents(), &[0, 0, 1]); // path 0 - 1 - 2
        assert_eq!(trees[1].parents(), &[0, 0, 0]); // root with two children
        let again = enum_plane_trees(3).unwrap();
        assert_eq!(trees, again);
    }

    #[test]
    fn fpt_fixture_counts() {
        assert_eq!(fpt_count(1, 1, 1).unwrap(), 1);
        assert_eq!(fpt_count(1, 1, 3).unwrap(), 1);
        assert_eq!(fpt_count(2, 2, 2).unwrap(), 2); // (1,1) and (0,2)
        assert_eq!(fpt_count(2, 3, 3).unwrap(), 3); // (1,2), (2,1), (0,3)
        assert!(fpt_count(2, 1, 3).is_err()); // m < n
        assert!(fpt_count(2, 7, 3).is_err()); // m > n k_max
    }

    #[test]
    fn fpt_instances_are_fully_parked_with_root_identity() {
        for (n, m, k) in [(2usize, 2usize, 2usize), (3, 4, 2), (4, 6, 3), (5, 7, 2)] {
            let mut seen = 0;
            for_each_fpt(n, m, k, |shape, cars, root_visits| {
                seen += 1;
                let visits = plane_tree_visits(shape, cars);
                assert!(visits.iter().all(|&w| w >= 1));
                assert_eq!(root_visits, (m - n + 1) as u64);
                assert_eq!(visits[0], (m - n + 1) as u64);
            })
            .unwrap();
            assert!(seen > 0, "no instances at ({n},{m},{k})");
        }
    }

    #[test]
    fn exact_flux_closed_forms() {
        for alpha in [0.2, 0.5, 1.0] {
            let law = CarLaw::binary(alpha).unwrap();
            let p = alpha / 2.0;
            let e1 = exact_expected_flux(1, &law).unwrap();
            assert!((e1 - p).abs() < 1e-12, "n=1 alpha={alpha}");
            let e2 = exact_expected_flux(2, &law).unwrap();
            assert!((e2 - (p + p * p)).abs() < 1e-12, "n=2 alpha={alpha}");
        }
        let zero = CarLaw::point_mass(0);
        for n in 1..=5 {
            assert_eq!(exact_expected_flux(n, &zero).unwrap(), 0.0);
        }
        assert!(exact_expected_flux(8, &CarLaw::binary(0.5).unwrap()).is_err());
    }

    #[test]
    fn exact_flux_monotone_in_alpha() {
        let lo = exact_expected_flux(4, &CarLaw::binary(0.3).unwrap()).unwrap();
        let hi = exact_expected_flux(4, &CarLaw::binary(0.9).unwrap()).unwrap();
        assert!(hi > lo);
    }

    #[test]
    fn subcritical_constants_binary() {
        let (big_c, small_c) = subcritical_constants(&GeneralFamily::binary());
        assert!((big_c - 12.0).abs() < 1e-12);
        assert!((small_c - 1.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn bound_at_zero_density() {
        let fam = GeneralFamily::binary();
        let r = first_moment_bound(&fam, 2.0, 0.0, 4, 6, 1.0).unwrap();
        assert_eq!(r.truncated_exact, 0.0);
        assert_eq!(r.truncated_coarse, 0.0);
        // Only the empty term survives in the closed form.
        assert!((r.closed_form.unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn bound_single_instance_term() {
        // Binary, t = 1, alpha = 0.01, truncation (1, 2): the only
        // contribution is the one-vertex two-car cluster with weight
        // 2 * pmf(2) = alpha.
        let fam = GeneralFamily::binary();
        let r = first_moment_bound(&fam, 1.0, 0.01, 1, 2, 1.0).unwrap();
        assert!((r.truncated_exact - 0.01).abs() < 1e-15);
        // Coarse cells with a = alpha^(1/2) = 0.1:
        // (1,1): 1 * 1 * (2*0.5)^1 * a = 0.1; (1,2): 2 * 1 * 1 * a^2 = 0.02.
        assert!((r.truncated_coarse - 0.12).abs() < 1e-15);
        // C t a = 12 * 0.1 = 1.2 >= 1: the closed form diverges here.
        assert!(r.diverged());
        assert_eq!(r.tail(), f64::INFINITY);
    }

    #[test]
    fn bound_converges_in_subcritical_regime() {
        let fam = GeneralFamily::binary();
        let t = 10.0;
        let (_, small_c) = subcritical_constants(&fam);
        let alpha = (small_c / (2.0 * t)).powi(2);
        let r = first_moment_bound(&fam, t, alpha, 5, 8, 1.0).unwrap();
        let cf = r.closed_form.expect("must converge");
        assert!(cf > 0.0 && cf.is_finite());
        assert!(r.tail() >= 0.0);
        assert!(r.truncated_exact <= cf);
    }

    #[test]
    fn alpha_small_hypothesis_detects_unmatched_mass() {
        // This family puts most mass on one car but declares no C_1.
        let fam = GeneralFamily::new(2, &[(2, 0.25, 1.0)]).unwrap();
        assert!(!alpha_small_enough(&fam, 0.1).unwrap());
        assert!(first_moment_bound(&fam, 1.0, 0.1, 2, 3, 1.0).is_err());
        // Binary satisfies it at every admissible alpha.
        assert!(alpha_small_enough(&GeneralFamily::binary(), 0.3).unwrap());
    }

    #[test]
    fn spine_and_root_bounds() {
        assert_eq!(spine_empty_bound(0.25, 0), 1.0);
        assert!((spine_empty_bound(0.25, 10) - 1.25f64.powi(-10)).abs() < 1e-15);
        assert!((spine_empty_bound(0.25, 10) - 0.10737).abs() < 1e-5);
        assert_eq!(root_empty_bound(0.5, 0.0), 1.0);
        assert!((root_empty_bound(0.5, 4.0) - (-2.0f64).exp()).abs() < 1e-15);
    }
}
