//! Finite-lattice estimates of λ_d(p) and their bulk extrapolation.
//!
//! A box of volume V at density p uses `k = round-half-down(p·V/2)` dimers and
//! the raw estimate `ln N_k / V`. Hypercubic boxes `L^d` are then fitted with
//!
//! ```text
//! ln N_k(L) = λ·V + β·A + γ,    A = V − ∏ max(L_i − 2, 0)
//! ```
//!
//! where A counts boundary sites. When A is the same for every size (d = 1)
//! the surface term is indistinguishable from γ and is dropped.

use std::collections::HashMap;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{BigCount, Rational};
use crate::expansions::{self, BoundsPair};
use crate::lattice::LatticeSpec;
use crate::matchgen::{self, Guards, MatchingPolynomial};

/// Default tolerated growth of `fit_residual` when the largest size grows.
pub const DEFAULT_RESIDUAL_GROWTH: f64 = 2.0;

/// Dimer number for density `p` on `volume` sites: `⌈p·V/2 − 1/2⌉`.
///
/// Computed on the exact value of `p`, so ties always round down.
pub fn density_to_k(volume: usize, p: f64) -> Result<usize> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "density p must lie in [0, 1], got {p}"
        )));
    }
    let exact = Rational::from_f64(p).expect("finite after range check");
    let half_sites = &exact * &Rational::new(volume as i64, 2);
    let k = (half_sites - Rational::new(1, 2)).ceil();
    Ok(k.to_usize().unwrap_or(0))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteEstimate {
    pub k_used: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatePoint {
    pub spec: LatticeSpec,
    pub k_used: usize,
    pub count: BigCount,
    /// `ln N_k / V`.
    pub raw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateSeries {
    pub d: u32,
    pub p: f64,
    pub points: Vec<EstimatePoint>,
    pub extrapolated: f64,
    /// Largest absolute misfit of `ln N_k` over the fitted points.
    pub fit_residual: f64,
    /// False when the surface term was dropped because A did not vary.
    pub surface_term: bool,
}

impl EstimateSeries {
    /// Whether `self`, fitted with a larger top size than `before`, keeps its
    /// residual within `factor` of the earlier one.
    pub fn residual_growth_within(&self, before: &EstimateSeries, factor: f64) -> bool {
        self.fit_residual <= factor * before.fit_residual + f64::EPSILON
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub estimate: EstimateSeries,
    pub fklm: BoundsPair,
    pub within_fklm: bool,
    /// Present only at p = 1.
    pub minc: Option<BoundsPair>,
    pub within_minc: Option<bool>,
    /// The general-d p-series through p^6.
    pub pseries: f64,
    pub delta_pseries: f64,
    /// The square-lattice p-series through (p/4)^7, only for d = 2.
    pub square_series: Option<f64>,
    pub delta_square_series: Option<f64>,
}

/// Counts lattices on demand and remembers every polynomial it has computed.
#[derive(Debug, Default)]
pub struct Estimator {
    guards: Guards,
    cache: Mutex<HashMap<LatticeSpec, MatchingPolynomial>>,
}

impl Estimator {
    pub fn new(guards: Guards) -> Self {
        Estimator {
            guards,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// `N_k` for `spec`, reusing any cached polynomial that reaches `k`.
    pub fn count(&self, spec: &LatticeSpec, k: usize) -> Result<BigCount> {
        if let Some(poly) = self.cache.lock().unwrap().get(spec) {
            if let Some(c) = poly.count(k) {
                return Ok(c.clone());
            }
            if !poly.truncated() {
                return Ok(BigCount::zero());
            }
        }
        let poly = matchgen::matching_polynomial_with(spec, Some(k), &self.guards)?;
        let c = poly.count(k).cloned().unwrap_or_default();
        let mut cache = self.cache.lock().unwrap();
        let keep = cache
            .get(spec)
            .is_none_or(|old| old.counts().len() < poly.counts().len());
        if keep {
            cache.insert(spec.clone(), poly);
        }
        Ok(c)
    }

    /// Full matching polynomial, cached.
    pub fn polynomial(&self, spec: &LatticeSpec) -> Result<MatchingPolynomial> {
        if let Some(poly) = self.cache.lock().unwrap().get(spec) {
            if !poly.truncated() {
                return Ok(poly.clone());
            }
        }
        let poly = matchgen::matching_polynomial_with(spec, None, &self.guards)?;
        self.cache
            .lock()
            .unwrap()
            .insert(spec.clone(), poly.clone());
        Ok(poly)
    }

    pub fn point(&self, spec: &LatticeSpec, p: f64) -> Result<EstimatePoint> {
        self.guards.check(spec)?;
        let volume = spec.volume();
        let k = density_to_k(volume, p)?;
        let count = self.count(spec, k)?;
        if count.is_zero() {
            return Err(Error::InfeasibleDensity {
                spec: spec.to_string(),
                k,
            });
        }
        Ok(EstimatePoint {
            spec: spec.clone(),
            k_used: k,
            raw: count.ln() / volume as f64,
            count,
        })
    }

    pub fn finite_lambda(&self, spec: &LatticeSpec, p: f64) -> Result<FiniteEstimate> {
        let pt = self.point(spec, p)?;
        Ok(FiniteEstimate {
            k_used: pt.k_used,
            value: pt.raw,
        })
    }

    pub fn extrapolate(&self, d: u32, p: f64, sizes: &[usize]) -> Result<EstimateSeries> {
        if d == 0 {
            return Err(Error::Validation("dimension d must be at least 1".into()));
        }
        if sizes.len() < 3 {
            return Err(Error::Validation(format!(
                "extrapolation needs at least 3 sizes, got {}",
                sizes.len()
            )));
        }
        if sizes.windows(2).any(|w| w[0] >= w[1]) || sizes[0] == 0 {
            return Err(Error::Validation(
                "sizes must be positive and strictly increasing".into(),
            ));
        }
        let specs = sizes
            .iter()
            .map(|&l| LatticeSpec::hypercube(d as usize, l))
            .collect::<Result<Vec<_>>>()?;
        for s in &specs {
            self.guards.check(s)?;
        }
        let points = specs
            .par_iter()
            .map(|s| self.point(s, p))
            .collect::<Result<Vec<_>>>()?;
        let fit = fit_bulk(&points)?;
        Ok(EstimateSeries {
            d,
            p,
            points,
            extrapolated: fit.lambda,
            fit_residual: fit.residual,
            surface_term: fit.surface_term,
        })
    }

    pub fn compare(&self, d: u32, p: f64, sizes: &[usize]) -> Result<Comparison> {
        let estimate = self.extrapolate(d, p, sizes)?;
        let x = estimate.extrapolated;
        let fklm = expansions::fklm_bounds(d, p)?;
        let minc = if p == 1.0 {
            Some(expansions::minc_bounds(d)?)
        } else {
            None
        };
        let pseries = expansions::lambda_dp_pseries(d, p, expansions::MAX_P_POWER)?;
        let square_series = if d == 2 {
            Some(expansions::lambda_2p_series(
                p,
                expansions::MAX_SQUARE_P_POWER,
            )?)
        } else {
            None
        };
        Ok(Comparison {
            within_fklm: fklm.contains(x),
            fklm,
            within_minc: minc.map(|b| b.contains(x)),
            minc,
            delta_pseries: x - pseries,
            pseries,
            delta_square_series: square_series.map(|s| x - s),
            square_series,
            estimate,
        })
    }
}

pub fn finite_lambda(spec: &LatticeSpec, p: f64) -> Result<FiniteEstimate> {
    Estimator::default().finite_lambda(spec, p)
}

pub fn extrapolate_lambda(d: u32, p: f64, sizes: &[usize]) -> Result<EstimateSeries> {
    Estimator::default().extrapolate(d, p, sizes)
}

pub fn compare_report(d: u32, p: f64, sizes: &[usize]) -> Result<Comparison> {
    Estimator::default().compare(d, p, sizes)
}

struct BulkFit {
    lambda: f64,
    residual: f64,
    surface_term: bool,
}

fn fit_bulk(points: &[EstimatePoint]) -> Result<BulkFit> {
    let n = points.len();
    let volumes: Vec<f64> = points.iter().map(|pt| pt.spec.volume() as f64).collect();
    let surfaces: Vec<usize> = points.iter().map(|pt| pt.spec.boundary_sites()).collect();
    let surface_term = surfaces.iter().any(|&a| a != surfaces[0]);
    let cols = if surface_term { 3 } else { 2 };

    let design = DMatrix::from_fn(n, cols, |i, j| match (j, surface_term) {
        (0, _) => volumes[i],
        (1, true) => surfaces[i] as f64,
        _ => 1.0,
    });
    let target =
        DVector::from_iterator(n, points.iter().map(|pt| pt.raw * pt.spec.volume() as f64));

    // Columns have very different scales (V grows like L^d), so judge rank on
    // the column-normalized design.
    let norms: Vec<f64> = design.column_iter().map(|c| c.norm()).collect();
    let mut scaled = design.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col /= norms[j];
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smin <= smax * 1e-10 {
        return Err(Error::Fit(
            "design is collinear; the sizes cannot separate bulk and surface terms".into(),
        ));
    }
    let coef_scaled = svd
        .solve(&target, 0.0)
        .map_err(|e| Error::Fit(e.to_string()))?;
    let coef = DVector::from_iterator(cols, (0..cols).map(|j| coef_scaled[j] / norms[j]));
    let fitted = &design * &coef;
    let residual = (fitted - &target).amax();
    Ok(BulkFit {
        lambda: coef[0],
        residual,
        surface_term,
    })
}
