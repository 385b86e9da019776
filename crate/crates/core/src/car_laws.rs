//! Car-arrival distributions.
//!
//! All laws are bounded: a law with maximum car count `K` is a pmf on
//! `{0, ..., K}`. The quantity driving the parking phase transition is the
//! collision mass `delta = 1 - pmf[0] - pmf[1]`, the probability that a
//! vertex receives at least two cars.
//!
//! Two constructions are provided:
//!
//! - the binary family `(1 - a/2) d_0 + (a/2) d_2` with mean `a`;
//! - general families where `pmf[k] = C_k a^{b_k k}` exactly for `k >= 2`
//!   and the mass on one car balances the mean to exactly `a`.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};

const NORMALIZATION_TOL: f64 = 1e-12;

/// Bounded car-arrival distribution with cached cdf for single-uniform
/// inverse sampling (one uniform consumed per draw, which the monotone
/// coupling tests rely on).
#[derive(Debug, Clone, PartialEq)]
pub struct CarLaw {
    pmf: Vec<f64>,
    cdf: Vec<f64>,
    mean: f64,
    delta: f64,
}

impl CarLaw {
    /// Build a law from a pmf on `{0, ..., K}` (K = `pmf.len() - 1`).
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        if pmf.is_empty() {
            return Err(Error::InvalidArgument("pmf must be nonempty".into()));
        }
        let mut total = 0.0;
        for (k, &p) in pmf.iter().enumerate() {
            if !(0.0..=1.0 + NORMALIZATION_TOL).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "pmf[{k}] = {p} out of [0,1]"
                )));
            }
            total += p;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidArgument(format!(
                "pmf sums to {total}, not 1"
            )));
        }
        let mean = pmf.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
        let p0 = pmf[0];
        let p1 = pmf.get(1).copied().unwrap_or(0.0);
        let delta = (1.0 - p0 - p1).max(0.0);
        let mut cdf = Vec::with_capacity(pmf.len());
        let mut acc = 0.0;
        for &p in &pmf {
            acc += p;
            cdf.push(acc);
        }
        *cdf.last_mut().unwrap() = 1.0;
        Ok(CarLaw { pmf, cdf, mean, delta })
    }

    /// The binary family `(1 - a/2) d_0 + (a/2) d_2`; mean `a`,
    /// collision mass `a/2`.
    pub fn binary(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "binary law needs alpha in [0,1], got {alpha}"
            )));
        }
        CarLaw::new(vec![1.0 - alpha / 2.0, 0.0, alpha / 2.0])
    }

    /// Deterministic arrivals: exactly `k` cars on every vertex.
    pub fn point_mass(k: usize) -> Self {
        let mut pmf = vec![0.0; k + 1];
        pmf[k] = 1.0;
        CarLaw::new(pmf).expect("point mass is a valid pmf")
    }

    /// Maximum number of cars per vertex (K).
    pub fn max_cars(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn pmf(&self, k: usize) -> f64 {
        self.pmf.get(k).copied().unwrap_or(0.0)
    }

    /// P(cars <= k).
    pub fn cdf(&self, k: usize) -> f64 {
        if k >= self.cdf.len() {
            1.0
        } else {
            self.cdf[k]
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Collision mass `1 - pmf[0] - pmf[1]`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Inverse-cdf draw from a uniform in [0,1). Monotone in the law under
    /// stochastic dominance when `u` is shared.
    pub fn sample_u(&self, u: f64) -> u32 {
        for (k, &c) in self.cdf.iter().enumerate() {
            if u < c {
                return k as u32;
            }
        }
        (self.cdf.len() - 1) as u32
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> u32 {
        self.sample_u(rng.random::<f64>())
    }
}

/// One family coefficient: `pmf[k] ~ c * alpha^{beta * k}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyCoef {
    pub k: usize,
    pub c: f64,
    pub beta: f64,
}

/// A stochastically increasing family of bounded laws parameterized by the
/// mean `alpha`: `pmf[k] = C_k alpha^{beta_k k}` exactly for `k >= 2`,
/// `pmf[1]` balances the mean to exactly `alpha`, `pmf[0]` is the
/// remainder.
///
/// The admissible range `[0, alpha_max]` is computed eagerly by bisection:
/// it is the largest prefix of `[0,1]` on which all masses are valid *and*
/// the cdf at every threshold is nonincreasing in `alpha` (stochastic
/// monotonicity).
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralFamily {
    k_max: usize,
    coef: Vec<FamilyCoef>,
    alpha_max: f64,
    beta_star: f64,
    k_star: usize,
    gamma: f64,
}

impl GeneralFamily {
    /// `coefs` lists `(k, C_k, beta_k)` for the car counts with positive
    /// coefficient; unspecified counts get `C_k = 0`.
    pub fn new(k_max: usize, coefs: &[(usize, f64, f64)]) -> Result<Self> {
        if k_max < 2 {
            return Err(Error::InvalidArgument(
                "family needs k_max >= 2".into(),
            ));
        }
        let mut coef = Vec::new();
        for &(k, c, beta) in coefs {
            if k == 0 || k > k_max {
                return Err(Error::InvalidArgument(format!(
                    "coefficient index {k} outside 1..={k_max}"
                )));
            }
            if c < 0.0 {
                return Err(Error::InvalidArgument(format!("C_{k} = {c} < 0")));
            }
            if c == 0.0 {
                continue;
            }
            if beta < 1.0 / k as f64 - 1e-12 {
                return Err(Error::InvalidArgument(format!(
                    "beta_{k} = {beta} < 1/{k}"
                )));
            }
            if coef.iter().any(|e: &FamilyCoef| e.k == k) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate coefficient for k = {k}"
                )));
            }
            coef.push(FamilyCoef { k, c, beta });
        }
        coef.sort_by_key(|e| e.k);
        if !coef.iter().any(|e| e.k >= 2) {
            return Err(Error::InvalidArgument(
                "family needs some C_k > 0 with k >= 2".into(),
            ));
        }
        let beta_star = coef
            .iter()
            .map(|e| e.beta)
            .fold(f64::INFINITY, f64::min);
        let k_star = coef
            .iter()
            .find(|e| e.beta <= beta_star + 1e-15)
            .map(|e| e.k)
            .unwrap();
        let gamma = coef
            .iter()
            .filter(|e| e.k >= 2)
            .map(|e| e.beta * e.k as f64)
            .fold(f64::INFINITY, f64::min);
        let mut fam = GeneralFamily {
            k_max,
            coef,
            alpha_max: 0.0,
            beta_star,
            k_star,
            gamma,
        };
        fam.alpha_max = fam.bisect_alpha_max();
        Ok(fam)
    }

    /// Binary family as coefficients: C_2 = 1/2, beta_2 = 1/2.
    pub fn binary() -> Self {
        GeneralFamily::new(2, &[(2, 0.5, 0.5)]).expect("binary family is valid")
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn coefficients(&self) -> &[FamilyCoef] {
        &self.coef
    }

    pub fn coefficient(&self, k: usize) -> Option<FamilyCoef> {
        self.coef.iter().copied().find(|e| e.k == k)
    }

    /// Smallest decay exponent over the positive coefficients.
    pub fn beta_star(&self) -> f64 {
        self.beta_star
    }

    /// Smallest car count achieving `beta_star`.
    pub fn k_star(&self) -> usize {
        self.k_star
    }

    /// Exact decay exponent of the collision mass:
    /// `delta(alpha) = sum_{k>=2} C_k alpha^{beta_k k}`, so
    /// `gamma = min { beta_k k : k >= 2, C_k > 0 }`.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Largest admissible `alpha`.
    pub fn alpha_max(&self) -> f64 {
        self.alpha_max
    }

    fn pmf1(&self, alpha: f64) -> f64 {
        let s: f64 = self
            .coef
            .iter()
            .filter(|e| e.k >= 2)
            .map(|e| e.k as f64 * e.c * alpha.powf(e.beta * e.k as f64))
            .sum();
        alpha - s
    }

    /// d/d alpha of the cdf at 0 stays nonpositive iff this is <= 1.
    fn monotone_load(&self, alpha: f64) -> f64 {
        self.coef
            .iter()
            .filter(|e| e.k >= 2)
            .map(|e| {
                let g = e.beta * e.k as f64;
                (e.k as f64 - 1.0) * e.c * g * alpha.powf(g - 1.0)
            })
            .sum()
    }

    fn admissible(&self, alpha: f64) -> bool {
        self.pmf1(alpha) >= -1e-15 && self.monotone_load(alpha) <= 1.0 + 1e-12
    }

    fn bisect_alpha_max(&self) -> f64 {
        if !self.admissible(1e-12) {
            return 0.0;
        }
        if self.admissible(1.0) {
            return 1.0;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if self.admissible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Materialize the law with mean exactly `alpha`.
    pub fn law(&self, alpha: f64) -> Result<CarLaw> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "alpha = {alpha} outside [0,1]"
            )));
        }
        if alpha > self.alpha_max + 1e-12 {
            return Err(Error::AlphaOutOfRange {
                alpha,
                max_alpha: self.alpha_max,
            });
        }
        let mut pmf = vec![0.0; self.k_max + 1];
        for e in self.coef.iter().filter(|e| e.k >= 2) {
            pmf[e.k] = e.c * alpha.powf(e.beta * e.k as f64);
        }
        let p1 = self.pmf1(alpha).max(0.0);
        pmf[1] = p1;
        let rest: f64 = pmf[1..].iter().sum();
        if rest > 1.0 + 1e-12 {
            return Err(Error::AlphaOutOfRange {
                alpha,
                max_alpha: self.alpha_max,
            });
        }
        pmf[0] = (1.0 - rest).max(0.0);
        CarLaw::new(pmf)
    }

    /// Collision mass of the materialized law, in closed form.
    pub fn delta(&self, alpha: f64) -> f64 {
        self.coef
            .iter()
            .filter(|e| e.k >= 2)
            .map(|e| e.c * alpha.powf(e.beta * e.k as f64))
            .sum()
    }
}

/// Parsed CLI law specification,
/// e.g. `binary:alpha=0.5` or `family:K=4,C2=0.5,b2=0.5,C3=0.1,b3=0.4`.
/// `alpha` may be omitted for experiments that scan densities.
#[derive(Debug, Clone)]
pub enum LawSpec {
    Binary { alpha: Option<f64> },
    Family { family: GeneralFamily, alpha: Option<f64> },
}

impl LawSpec {
    /// The fixed law; errors when the spec carries no density.
    pub fn fixed_law(&self) -> Result<CarLaw> {
        match self {
            LawSpec::Binary { alpha: Some(a) } => CarLaw::binary(*a),
            LawSpec::Family { family, alpha: Some(a) } => family.law(*a),
            _ => Err(Error::InvalidArgument(
                "law spec carries no alpha; add `alpha=...`".into(),
            )),
        }
    }

    /// The law at a prescribed density, ignoring any fixed alpha.
    pub fn law_at(&self, alpha: f64) -> Result<CarLaw> {
        match self {
            LawSpec::Binary { .. } => CarLaw::binary(alpha),
            LawSpec::Family { family, .. } => family.law(alpha),
        }
    }

    pub fn family(&self) -> GeneralFamily {
        match self {
            LawSpec::Binary { .. } => GeneralFamily::binary(),
            LawSpec::Family { family, .. } => family.clone(),
        }
    }

    pub fn alpha(&self) -> Option<f64> {
        match self {
            LawSpec::Binary { alpha } | LawSpec::Family { alpha, .. } => *alpha,
        }
    }
}

impl fmt::Display for LawSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LawSpec::Binary { alpha } => {
                write!(f, "binary")?;
                if let Some(a) = alpha {
                    write!(f, ":alpha={a}")?;
                }
                Ok(())
            }
            LawSpec::Family { family, alpha } => {
                write!(f, "family:K={}", family.k_max())?;
                for e in family.coefficients() {
                    write!(f, ",C{}={},b{}={}", e.k, e.c, e.k, e.beta)?;
                }
                if let Some(a) = alpha {
                    write!(f, ",alpha={a}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for LawSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = match s.split_once(':') {
            Some((k, r)) => (k, r),
            None => (s, ""),
        };
        let mut pairs = Vec::new();
        for item in rest.split(',').filter(|it| !it.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value, got `{item}`")))?;
            let v: f64 = value
                .parse()
                .map_err(|_| Error::Parse(format!("bad number `{value}` for `{key}`")))?;
            pairs.push((key.trim().to_string(), v));
        }
        match kind {
            "binary" => {
                let mut alpha = None;
                for (k, v) in pairs {
                    match k.as_str() {
                        "alpha" => alpha = Some(v),
                        other => {
                            return Err(Error::Parse(format!(
                                "unknown binary key `{other}`"
                            )))
                        }
                    }
                }
                if let Some(a) = alpha {
                    if !(0.0..=1.0).contains(&a) {
                        return Err(Error::Parse(format!("alpha={a} outside [0,1]")));
                    }
                }
                Ok(LawSpec::Binary { alpha })
            }
            "family" => {
                let mut k_max: Option<usize> = None;
                let mut alpha = None;
                let mut cs: Vec<(usize, f64)> = Vec::new();
                let mut bs: Vec<(usize, f64)> = Vec::new();
                for (key, v) in pairs {
                    if key == "K" {
                        k_max = Some(v as usize);
                    } else if key == "alpha" {
                        alpha = Some(v);
                    } else if let Some(idx) = key.strip_prefix('C') {
                        let k: usize = idx.parse().map_err(|_| {
                            Error::Parse(format!("bad coefficient key `{key}`"))
                        })?;
                        cs.push((k, v));
                    } else if let Some(idx) = key.strip_prefix('b') {
                        let k: usize = idx.parse().map_err(|_| {
                            Error::Parse(format!("bad exponent key `{key}`"))
                        })?;
                        bs.push((k, v));
                    } else {
                        return Err(Error::Parse(format!("unknown family key `{key}`")));
                    }
                }
                let k_max = k_max.ok_or_else(|| Error::Parse("family needs K=".into()))?;
                let mut coefs = Vec::new();
                for (k, c) in cs {
                    let beta = bs
                        .iter()
                        .find(|(bk, _)| *bk == k)
                        .map(|(_, b)| *b)
                        .ok_or_else(|| Error::Parse(format!("C{k} given without b{k}")))?;
                    coefs.push((k, c, beta));
                }
                let family = GeneralFamily::new(k_max, &coefs)?;
                Ok(LawSpec::Family { family, alpha })
            }
            other => Err(Error::Parse(format!(
                "unknown law kind `{other}` (expected binary|family)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn binary_law_values() {
        let law = CarLaw::binary(0.0).unwrap();
        assert_eq!(law.pmf(0), 1.0);
        assert_eq!(law.mean(), 0.0);

        let law = CarLaw::binary(1.0).unwrap();
        assert_eq!(law.pmf(0), 0.5);
        assert_eq!(law.pmf(1), 0.0);
        assert_eq!(law.pmf(2), 0.5);
        assert!((law.mean() - 1.0).abs() < 1e-15);

        let law = CarLaw::binary(0.5).unwrap();
        assert!((law.delta() - 0.25).abs() < 1e-15);

        assert!(CarLaw::binary(1.5).is_err());
        assert!(CarLaw::binary(-0.1).is_err());
    }

    #[test]
    fn law_identities_hold_to_tolerance() {
        for alpha in [0.0, 0.1, 0.37, 0.8, 1.0] {
            let law = CarLaw::binary(alpha).unwrap();
            let total: f64 = (0..=law.max_cars()).map(|k| law.pmf(k)).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let mean: f64 = (0..=law.max_cars())
                .map(|k| k as f64 * law.pmf(k))
                .sum();
            assert!((mean - law.mean()).abs() < 1e-12);
            assert!((law.delta() - (1.0 - law.pmf(0) - law.pmf(1))).abs() < 1e-12);
        }
    }

    #[test]
    fn family_reproduces_binary() {
        let fam = GeneralFamily::binary();
        assert_eq!(fam.alpha_max(), 1.0);
        for alpha in [0.0, 0.2, 0.5, 1.0] {
            let law = fam.law(alpha).unwrap();
            let bin = CarLaw::binary(alpha).unwrap();
            for k in 0..=2 {
                assert!((law.pmf(k) - bin.pmf(k)).abs() < 1e-14, "k={k}");
            }
            assert!((law.mean() - alpha).abs() < 1e-12);
        }
    }

    #[test]
    fn family_exponents() {
        let fam = GeneralFamily::binary();
        assert_eq!(fam.beta_star(), 0.5);
        assert_eq!(fam.k_star(), 2);
        assert!((fam.gamma() - 1.0).abs() < 1e-15);

        // beta_1 = 1 and beta_4 = 1/2: the minimum sits at k = 4.
        let fam = GeneralFamily::new(4, &[(1, 1.0, 1.0), (4, 0.3, 0.5)]).unwrap();
        assert_eq!(fam.beta_star(), 0.5);
        assert_eq!(fam.k_star(), 4);
        assert!((fam.gamma() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn family_rejects_bad_exponent() {
        assert!(GeneralFamily::new(3, &[(3, 1.0, 0.2)]).is_err()); // beta < 1/3
        assert!(GeneralFamily::new(3, &[(1, 1.0, 1.0)]).is_err()); // no k >= 2
    }

    #[test]
    fn overloaded_family_has_empty_range() {
        // pmf[3] = alpha at every alpha, so the mean constraint forces
        // pmf[1] = alpha - 3 alpha < 0: no admissible density.
        let fam = GeneralFamily::new(3, &[(3, 1.0, 1.0 / 3.0)]).unwrap();
        assert!(fam.alpha_max() < 1e-6);
        match fam.law(0.1) {
            Err(Error::AlphaOutOfRange { max_alpha, .. }) => {
                assert!(max_alpha < 1e-6);
            }
            other => panic!("expected AlphaOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn family_mean_is_exact_across_range() {
        let fam = GeneralFamily::new(4, &[(2, 0.3, 0.75), (3, 0.2, 0.5), (4, 0.1, 0.3)])
            .unwrap();
        let hi = fam.alpha_max();
        assert!(hi > 0.0);
        for i in 0..=100 {
            let alpha = hi * i as f64 / 100.0;
            let law = fam.law(alpha).unwrap();
            assert!((law.mean() - alpha).abs() < 1e-12, "alpha={alpha}");
        }
    }

    #[test]
    fn family_cdf_monotone_over_grid() {
        let fam = GeneralFamily::new(4, &[(2, 0.3, 0.75), (3, 0.2, 0.5), (4, 0.1, 0.3)])
            .unwrap();
        let hi = fam.alpha_max();
        let laws: Vec<CarLaw> = (0..=100)
            .map(|i| fam.law(hi * i as f64 / 100.0).unwrap())
            .collect();
        for w in laws.windows(2) {
            for k in 0..=fam.k_max() {
                assert!(
                    w[1].cdf(k) <= w[0].cdf(k) + 1e-12,
                    "cdf at {k} increased with alpha"
                );
            }
        }
    }

    #[test]
    fn sampling_matches_pmf() {
        let law = CarLaw::binary(1.0).unwrap();
        let mut rng = rng_from_seed(7);
        let trials = 100_000;
        let twos = (0..trials).filter(|_| law.sample(&mut rng) == 2).count();
        let freq = twos as f64 / trials as f64;
        let sigma = (0.25f64 / trials as f64).sqrt();
        assert!((freq - 0.5).abs() < 3.0 * sigma, "freq={freq}");
    }

    #[test]
    fn point_mass_sampling() {
        let law = CarLaw::point_mass(0);
        let mut rng = rng_from_seed(1);
        assert!((0..100).all(|_| law.sample(&mut rng) == 0));
    }

    #[test]
    fn law_spec_round_trips() {
        let spec: LawSpec = "binary:alpha=0.5".parse().unwrap();
        let law = spec.fixed_law().unwrap();
        assert!((law.mean() - 0.5).abs() < 1e-15);

        let spec: LawSpec = "family:K=4,C2=0.5,b2=0.5,C3=0.1,b3=0.4".parse().unwrap();
        match &spec {
            LawSpec::Family { family, alpha } => {
                assert_eq!(family.k_max(), 4);
                assert_eq!(family.coefficients().len(), 2);
                assert!(alpha.is_none());
            }
            _ => panic!("expected family"),
        }
        assert!(spec.fixed_law().is_err());
        // That family's k >= 2 masses already exhaust the mean
        // (2 * C2 * alpha^(2 b2) = alpha), so no positive density is valid.
        assert!(matches!(
            spec.law_at(0.05),
            Err(Error::AlphaOutOfRange { .. })
        ));

        let ok: LawSpec = "family:K=3,C2=0.2,b2=0.6,C3=0.1,b3=0.5".parse().unwrap();
        assert!(ok.law_at(0.05).is_ok());

        let display = spec.to_string();
        let reparsed: LawSpec = display.parse().unwrap();
        assert_eq!(reparsed.to_string(), display);
    }

    #[test]
    fn law_spec_rejects_garbage() {
        assert!("poisson:alpha=1".parse::<LawSpec>().is_err());
        assert!("binary:alpha=2".parse::<LawSpec>().is_err());
        assert!("family:C2=0.5,b2=0.5".parse::<LawSpec>().is_err()); // missing K
        assert!("family:K=3,C2=0.5".parse::<LawSpec>().is_err()); // missing b2
    }
}
