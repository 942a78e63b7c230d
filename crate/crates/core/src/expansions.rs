//! Closed-form bounds and asymptotic series for the dimer free energy λ_d and
//! the monomer-dimer free energy λ_d(p), plus exact checks of the algebraic
//! identities that tie the published coefficient tables together.
//!
//! Every series is split into the mean-field logarithm part (evaluated in
//! `f64`) and a rational correction computed exactly from the tables. The
//! argument `p` is converted to its exact dyadic value before the rational
//! part is evaluated.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactmath::{collect_d_coefficient, DSeries, PPolynomial, Rational};

/// Highest tabulated order of the 1/d expansions.
pub const MAX_D_ORDER: usize = 3;
/// Highest tabulated power of p in the general-d p-series.
pub const MAX_P_POWER: usize = 6;
/// Highest tabulated power of p in the square-lattice p-series.
pub const MAX_SQUARE_P_POWER: usize = 7;

/// Published coefficients, all exact.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoefficientTable {
    /// `c[j-1]` multiplies `1/d^j` in the dimer expansion, j = 1..=3.
    pub c: Vec<Rational>,
    /// The p-polynomial multiplying `1/d^j` in the monomer-dimer expansion.
    pub monomer_dimer: DSeries,
    /// `a[k]` is a_k(d) written as a polynomial in x = 1/d, k = 2..=6.
    pub a: BTreeMap<u32, PPolynomial>,
    /// Square-lattice series: term k is `2 · n_k / (k(k-1)) · (p/4)^k`.
    pub square_numerators: BTreeMap<u32, u64>,
}

impl CoefficientTable {
    fn build() -> Self {
        let r = Rational::new;
        let c = vec![r(1, 8), r(5, 96), r(5, 64)];

        let mut monomer_dimer = DSeries::new();
        monomer_dimer.add_term(1, 2, &r(1, 8));
        monomer_dimer.add_poly(2, &PPolynomial::from_terms([(3, r(2, 96)), (4, r(3, 96))]));
        monomer_dimer.add_poly(
            3,
            &PPolynomial::from_terms([(4, r(-5, 192)), (5, r(12, 192)), (6, r(8, 192))]),
        );

        let a = BTreeMap::from([
            (2, PPolynomial::from_terms([(1, r(1, 8))])),
            (3, PPolynomial::from_terms([(2, r(1, 48))])),
            (4, PPolynomial::from_terms([(2, r(1, 32)), (3, r(-5, 192))])),
            (
                5,
                PPolynomial::from_terms([(3, r(1, 16)), (4, r(-39, 640))]),
            ),
            (
                6,
                PPolynomial::from_terms([(3, r(1, 24)), (4, r(-1, 32)), (5, r(-19, 1920))]),
            ),
        ]);

        // n_4 = 7 sits on (p/4)^4; a cube there would contradict a_4(2) = 7/1536.
        let square_numerators =
            BTreeMap::from([(2, 1), (3, 1), (4, 7), (5, 41), (6, 181), (7, 757)]);

        CoefficientTable {
            c,
            monomer_dimer,
            a,
            square_numerators,
        }
    }

    /// a_k(d) for a concrete dimension.
    pub fn a_at(&self, k: u32, d: u32) -> Option<Rational> {
        self.a
            .get(&k)
            .map(|poly| poly.eval(&Rational::new(1, d as i64)))
    }

    /// The square-lattice coefficient of p^k: `2 · n_k / (k(k-1)) / 4^k`.
    pub fn square_coefficient(&self, k: u32) -> Option<Rational> {
        let n = *self.square_numerators.get(&k)? as i64;
        let kk = k as i64;
        Some(Rational::new(2 * n, kk * (kk - 1)) * Rational::new(1, 4).pow(k))
    }

    /// The p-series regrouped by powers of 1/d: term j collects every
    /// `x^j` coefficient of every a_k, attached to p^k.
    pub fn p_series_by_inverse_d(&self) -> DSeries {
        let mut series = DSeries::new();
        for (&k, poly) in &self.a {
            for (j, coef) in poly.terms() {
                series.add_term(j, k, coef);
            }
        }
        series
    }
}

pub fn coefficient_table() -> &'static CoefficientTable {
    static TABLE: OnceLock<CoefficientTable> = OnceLock::new();
    TABLE.get_or_init(CoefficientTable::build)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsPair {
    pub lower: f64,
    pub upper: f64,
}

impl BoundsPair {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

fn check_d(d: u32) -> Result<()> {
    if d == 0 {
        return Err(Error::Domain("dimension d must be at least 1".into()));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!(
            "density p must lie in [0, 1], got {p}"
        )));
    }
    Ok(())
}

fn exact_p(p: f64) -> Result<Rational> {
    check_p(p)?;
    Ok(Rational::from_f64(p).expect("finite after range check"))
}

fn check_order(series: &'static str, requested: usize, min: usize, max: usize) -> Result<()> {
    if requested < min || requested > max {
        return Err(Error::UnsupportedOrder {
            series,
            requested,
            min,
            max,
        });
    }
    Ok(())
}

/// `½(p ln 2d − p ln p − 2(1−p) ln(1−p) − p)`, with `0 ln 0 = 0`.
pub fn mean_field(d: u32, p: f64) -> Result<f64> {
    check_d(d)?;
    check_p(p)?;
    if p == 0.0 {
        return Ok(0.0);
    }
    let mut acc = p * (2.0 * d as f64).ln() - p;
    acc -= p * p.ln();
    if p < 1.0 {
        acc -= 2.0 * (1.0 - p) * (-p).ln_1p();
    }
    Ok(0.5 * acc)
}

/// Minc's bounds on λ_d.
pub fn minc_bounds(d: u32) -> Result<BoundsPair> {
    check_d(d)?;
    let df = d as f64;
    let lower = 0.5 * (2.0 * df).ln() - 0.5;
    let upper = lower + (4.0 * PI * df).ln() / (4.0 * df) + 1.0 / (48.0 * df * df);
    Ok(BoundsPair { lower, upper })
}

/// The monomer-dimer bounds on λ_d(p) of Friedland, Kropp, Lundow, Markström and Peled.
pub fn fklm_bounds(d: u32, p: f64) -> Result<BoundsPair> {
    let lower = mean_field(d, p)?;
    let df = d as f64;
    let gap = p * ((4.0 * PI * df).ln() / (4.0 * df) - 1.0 / (48.0 * df * df));
    Ok(BoundsPair {
        lower,
        upper: lower + gap,
    })
}

/// Exact `Σ_{j=1}^{order} c_j / d^j`.
pub fn lambda_d_correction(d: u32, order: usize) -> Result<Rational> {
    check_d(d)?;
    check_order("dimer 1/d expansion", order, 0, MAX_D_ORDER)?;
    let table = coefficient_table();
    let x = Rational::new(1, d as i64);
    let poly = PPolynomial::from_terms(
        table.c[..order]
            .iter()
            .enumerate()
            .map(|(i, c)| (i as u32 + 1, c.clone())),
    );
    Ok(poly.eval(&x))
}

/// λ_d through `order` terms of its 1/d expansion.
pub fn lambda_d_asymptotic(d: u32, order: usize) -> Result<f64> {
    let correction = lambda_d_correction(d, order)?;
    Ok(mean_field(d, 1.0)? + correction.to_f64())
}

/// Exact correction of the monomer-dimer 1/d expansion at an exact p.
pub fn lambda_dp_correction(d: u32, p: &Rational, order: usize) -> Result<Rational> {
    check_d(d)?;
    check_order("monomer-dimer 1/d expansion", order, 0, MAX_D_ORDER)?;
    let table = coefficient_table();
    let x = Rational::new(1, d as i64);
    let mut acc = Rational::zero();
    for j in 1..=order as u32 {
        let poly = collect_d_coefficient(&table.monomer_dimer, j);
        acc += &(poly.eval(p) * x.pow(j));
    }
    Ok(acc)
}

/// λ_d(p) through `order` terms of its 1/d expansion.
pub fn lambda_dp_asymptotic(d: u32, p: f64, order: usize) -> Result<f64> {
    let base = mean_field(d, p)?;
    let correction = lambda_dp_correction(d, &exact_p(p)?, order)?;
    Ok(base + correction.to_f64())
}

/// Exact `Σ_{k=2}^{kmax} a_k(d) p^k`.
pub fn lambda_dp_pseries_correction(d: u32, p: &Rational, kmax: usize) -> Result<Rational> {
    check_d(d)?;
    check_order("general-d p-series", kmax, 2, MAX_P_POWER)?;
    let table = coefficient_table();
    let poly = PPolynomial::from_terms(
        (2..=kmax as u32).map(|k| (k, table.a_at(k, d).expect("tabulated"))),
    );
    Ok(poly.eval(p))
}

/// λ_d(p) from the power series in p truncated at p^kmax.
pub fn lambda_dp_pseries(d: u32, p: f64, kmax: usize) -> Result<f64> {
    let base = mean_field(d, p)?;
    let correction = lambda_dp_pseries_correction(d, &exact_p(p)?, kmax)?;
    Ok(base + correction.to_f64())
}

pub fn lambda_2p_correction(p: &Rational, kmax: usize) -> Result<Rational> {
    check_order("square-lattice p-series", kmax, 2, MAX_SQUARE_P_POWER)?;
    let table = coefficient_table();
    let poly = PPolynomial::from_terms(
        (2..=kmax as u32).map(|k| (k, table.square_coefficient(k).expect("tabulated"))),
    );
    Ok(poly.eval(p))
}

/// λ_2(p) from the square-lattice series truncated at (p/4)^kmax.
pub fn lambda_2p_series(p: f64, kmax: usize) -> Result<f64> {
    let base = mean_field(2, p)?;
    let correction = lambda_2p_correction(&exact_p(p)?, kmax)?;
    Ok(base + correction.to_f64())
}

/// A truncated alternating sum with its remainder bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternatingSum {
    pub value: f64,
    /// Index of the last term included.
    pub last_index: u64,
    /// Magnitude of the first omitted term, which bounds the error.
    pub remainder_bound: f64,
}

/// `(1/π) Σ_{k=0}^{K} (−1)^k / (2k+1)²`, stopping at the first K whose next
/// term is below `tol`.
pub fn lambda2_partial_sum(tol: f64) -> Result<AlternatingSum> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let term = |k: u64| 1.0 / (PI * ((2 * k + 1) as f64).powi(2));
    let mut last = 0u64;
    while term(last + 1) >= tol {
        last += 1;
    }
    // smallest terms first
    let sum: f64 = (0..=last)
        .rev()
        .map(|k| {
            let t = 1.0 / ((2 * k + 1) as f64).powi(2);
            if k % 2 == 0 {
                t
            } else {
                -t
            }
        })
        .sum();
    Ok(AlternatingSum {
        value: sum / PI,
        last_index: last,
        remainder_bound: term(last + 1),
    })
}

pub fn lambda2_exact(tol: f64) -> Result<f64> {
    lambda2_partial_sum(tol).map(|s| s.value)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RearrangementRow {
    pub j: u32,
    pub expected: PPolynomial,
    pub collected: PPolynomial,
    pub equal: bool,
}

/// Regroups the p-series by powers of 1/d and compares each of the first
/// three groups with the monomer-dimer expansion, truncated to p-degree 6.
pub fn rearrangement_check() -> Vec<RearrangementRow> {
    let table = coefficient_table();
    let regrouped = table.p_series_by_inverse_d();
    (1..=MAX_D_ORDER as u32)
        .map(|j| {
            let expected =
                collect_d_coefficient(&table.monomer_dimer, j).truncate(MAX_P_POWER as u32);
            let collected = collect_d_coefficient(&regrouped, j);
            let equal = expected == collected;
            RearrangementRow {
                j,
                expected,
                collected,
                equal,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct D2Row {
    pub k: u32,
    /// a_k(2); absent where only the square-lattice series has a term.
    pub general: Option<Rational>,
    pub square: Rational,
    /// `None` for rows that exist only for d = 2.
    pub equal: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct D2Report {
    pub rows: Vec<D2Row>,
    /// How the duplicated exponent in the printed fourth-order term was read.
    pub exponent_reading: String,
}

impl D2Report {
    pub fn all_equal(&self) -> bool {
        self.rows.iter().all(|r| r.equal != Some(false))
    }
}

/// Compares a_k(2) with the square-lattice series coefficient of p^k.
pub fn d2_consistency_check() -> D2Report {
    let table = coefficient_table();
    let rows = table
        .square_numerators
        .keys()
        .map(|&k| {
            let square = table.square_coefficient(k).expect("tabulated");
            let general = table.a_at(k, 2);
            let equal = general.as_ref().map(|g| *g == square);
            D2Row {
                k,
                general,
                square,
                equal,
            }
        })
        .collect();
    D2Report {
        rows,
        exponent_reading: "7/(4·3) term taken at (p/4)^4".into(),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub j: u32,
    pub dimer: Rational,
    pub monomer_dimer_at_p1: Rational,
    pub equal: bool,
}

/// At p = 1 the monomer-dimer corrections must reproduce c_1, c_2, c_3.
pub fn p1_reduction_check() -> Vec<ReductionRow> {
    let table = coefficient_table();
    table
        .c
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let j = i as u32 + 1;
            let at_p1 = collect_d_coefficient(&table.monomer_dimer, j).eval(&Rational::one());
            ReductionRow {
                j,
                equal: *c == at_p1,
                dimer: c.clone(),
                monomer_dimer_at_p1: at_p1,
            }
        })
        .collect()
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // Reference values below were computed independently at 30 significant
    // digits (mpmath) directly from the closed forms.
    const LN4_MINUS_1_HALF: f64 = 0.193147180559945309417;
    const LAMBDA_2: f64 = 0.291560904030818780138;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mean_field_values() {
        assert!(close(mean_field(2, 1.0).unwrap(), LN4_MINUS_1_HALF, 1e-15));
        assert_eq!(mean_field(5, 0.0).unwrap(), 0.0);
        assert!(close(
            mean_field(2, 0.25).unwrap(),
            0.437335144618808350,
            1e-14
        ));
        assert!(matches!(mean_field(2, 1.5), Err(Error::Domain(_))));
        assert!(matches!(mean_field(2, -0.1), Err(Error::Domain(_))));
        assert!(matches!(mean_field(2, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(mean_field(0, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn minc_values() {
        let b = minc_bounds(2).unwrap();
        assert!(close(b.lower, LN4_MINUS_1_HALF, 1e-15));
        assert!(close(b.upper, 0.601376942334433155550, 1e-14));
        let b = minc_bounds(1).unwrap();
        assert!(close(b.lower, -0.153426409720027345291, 1e-15));
        assert!(close(b.upper, 0.500162985355628686286, 1e-14));
        assert!(minc_bounds(2).unwrap().contains(LAMBDA_2));
    }

    #[test]
    fn fklm_values() {
        assert_eq!(
            fklm_bounds(4, 0.0).unwrap(),
            BoundsPair {
                lower: 0.0,
                upper: 0.0
            }
        );
        let b = fklm_bounds(2, 1.0).unwrap();
        assert!(close(b.lower, LN4_MINUS_1_HALF, 1e-15));
        assert!(close(b.upper, 0.590960275667766488883, 1e-14));
        assert!(close(
            fklm_bounds(3, 1.0).unwrap().lower,
            0.395879734614027500406,
            1e-15
        ));
        assert_eq!(
            fklm_bounds(3, 1.0).unwrap().lower,
            minc_bounds(3).unwrap().lower
        );
    }

    #[test]
    fn dimer_expansion() {
        assert!(close(
            lambda_d_asymptotic(2, 3).unwrap(),
            0.278433638893278642751,
            1e-14
        ));
        assert!(close(
            lambda_d_asymptotic(3, 3).unwrap(),
            0.446226956836249722628,
            1e-14
        ));
        assert_eq!(
            lambda_d_asymptotic(2, 0).unwrap(),
            mean_field(2, 1.0).unwrap()
        );
        assert!(matches!(
            lambda_d_asymptotic(2, 4),
            Err(Error::UnsupportedOrder {
                requested: 4,
                max: 3,
                ..
            })
        ));
        // 1/16 + 5/384 + 5/512
        assert_eq!(lambda_d_correction(2, 3).unwrap(), r(131, 1536));
    }

    #[test]
    fn monomer_dimer_expansion() {
        for d in 1..=6 {
            assert_eq!(
                lambda_dp_correction(d, &Rational::one(), 3).unwrap(),
                lambda_d_correction(d, 3).unwrap()
            );
        }
        assert_eq!(
            lambda_dp_asymptotic(2, 1.0, 3).unwrap(),
            lambda_d_asymptotic(2, 3).unwrap()
        );
        for order in 0..=3 {
            assert_eq!(lambda_dp_asymptotic(7, 0.0, order).unwrap(), 0.0);
        }
        // p = 1/2, d = 2: (1/8)(1/4)/2 + (2/8 + 3/16)/96/4 + (-5/16 + 12/32 + 8/64)/192/8
        let expected = r(1, 64) + r(7, 6144) + r(3, 24576);
        assert_eq!(lambda_dp_correction(2, &r(1, 2), 3).unwrap(), expected);
        let v = lambda_dp_asymptotic(2, 0.5, 3).unwrap();
        assert!(close(
            v,
            mean_field(2, 0.5).unwrap() + expected.to_f64(),
            1e-15
        ));
        assert!(lambda_dp_asymptotic(2, 0.5, 4).is_err());
    }

    #[test]
    fn p_series() {
        // a_2..a_6 at d = 1 sum to 49/320
        assert_eq!(
            lambda_dp_pseries_correction(1, &Rational::one(), 6).unwrap(),
            r(49, 320)
        );
        let v = lambda_dp_pseries(1, 1.0, 6).unwrap();
        assert!(close(v, -3.01409720027345291384e-4, 1e-15));
        let d2 = r(1, 16) + r(1, 192) + r(7, 1536) + r(41, 10240) + r(181, 61440);
        assert_eq!(
            lambda_dp_pseries_correction(2, &Rational::one(), 6).unwrap(),
            d2
        );
        assert_eq!(d2, r(4867, 61440));
        assert_eq!(lambda_dp_pseries(3, 0.0, 6).unwrap(), 0.0);
        assert!(lambda_dp_pseries(2, 0.5, 1).is_err());
        assert!(lambda_dp_pseries(2, 0.5, 7).is_err());
    }

    #[test]
    fn square_series() {
        assert!(close(
            lambda_2p_series(0.25, 7).unwrap(),
            0.441345340329637676373,
            1e-14
        ));
        assert_eq!(lambda_2p_series(0.0, 7).unwrap(), 0.0);
        assert!(lambda_2p_series(0.3, 8).is_err());
        let p = r(3, 7);
        for kmax in 2..=6 {
            assert_eq!(
                lambda_2p_correction(&p, kmax).unwrap(),
                lambda_dp_pseries_correction(2, &p, kmax).unwrap()
            );
        }
    }

    #[test]
    fn alternating_series() {
        let s = lambda2_partial_sum(1e-9).unwrap();
        assert_eq!(s.last_index, 8920);
        assert!(close(s.value, LAMBDA_2, 1e-9));
        assert_eq!((s.value * 1e9).floor(), 291560904.0);
        assert!(close(lambda2_exact(1e-3).unwrap(), LAMBDA_2, 1e-3));
        let one = lambda2_partial_sum(1.0).unwrap();
        assert_eq!(one.last_index, 0);
        assert_eq!(one.value, 1.0 / PI);
        for e in 3..=9 {
            let tol = 10f64.powi(-e);
            let diff = (lambda2_exact(tol).unwrap() - lambda2_exact(tol / 10.0).unwrap()).abs();
            assert!(diff < tol, "tol {tol}: diff {diff}");
        }
        assert!(lambda2_exact(0.0).is_err());
        assert!(lambda2_exact(-1.0).is_err());
    }

    #[test]
    fn regrouping_matches_monomer_dimer_terms() {
        let rows = rearrangement_check();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.equal));
        assert_eq!(rows[0].expected, PPolynomial::monomial(2, r(1, 8)));
        assert_eq!(
            rows[1].collected,
            PPolynomial::from_terms([(3, r(1, 48)), (4, r(1, 32))])
        );
        assert_eq!(
            rows[2].collected,
            PPolynomial::from_terms([(4, r(-5, 192)), (5, r(1, 16)), (6, r(1, 24))])
        );
    }

    #[test]
    fn square_lattice_consistency() {
        let report = d2_consistency_check();
        assert!(report.all_equal());
        let by_k: BTreeMap<u32, &D2Row> = report.rows.iter().map(|r| (r.k, r)).collect();
        assert_eq!(by_k[&2].square, r(1, 16));
        assert_eq!(by_k[&4].square, r(7, 1536));
        assert_eq!(by_k[&4].general, Some(r(7, 1536)));
        assert_eq!(by_k[&6].square, r(181, 61440));
        assert_eq!(by_k[&7].square, r(757, 344064));
        assert_eq!(by_k[&7].equal, None);
        assert_eq!(
            report.rows.iter().filter(|r| r.equal == Some(true)).count(),
            5
        );
    }

    #[test]
    fn literal_exponent_reading_breaks_consistency() {
        // 2 · 7/12 · (1/4)^3 differs from a_4(2)
        let literal = r(14, 12) * r(1, 64);
        assert_ne!(Some(literal), coefficient_table().a_at(4, 2));
    }

    #[test]
    fn p1_reduction() {
        let rows = p1_reduction_check();
        assert!(rows.iter().all(|r| r.equal));
        assert_eq!(rows[2].monomer_dimer_at_p1, r(5, 64));
    }

    #[test]
    fn table_json() {
        let table = coefficient_table();
        let json = serde_json::to_value(table).unwrap();
        assert_eq!(json["c"][1], serde_json::json!({"num": "5", "den": "96"}));
        assert_eq!(
            json["a"]["5"]["4"],
            serde_json::json!({"num": "-39", "den": "640"})
        );
        let back: CoefficientTable = serde_json::from_value(json).unwrap();
        assert_eq!(&back, table);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn bounds_are_ordered(d in 1u32..200, p in 0.0f64..=1.0) {
                let b = fklm_bounds(d, p).unwrap();
                prop_assert!(b.lower <= b.upper);
                let m = minc_bounds(d).unwrap();
                prop_assert!(m.lower <= m.upper);
                prop_assert_eq!(fklm_bounds(d, 1.0).unwrap().lower, m.lower);
            }

            #[test]
            fn p1_reduction_holds_for_every_d(d in 1u32..500) {
                prop_assert_eq!(
                    lambda_dp_correction(d, &Rational::one(), 3).unwrap(),
                    lambda_d_correction(d, 3).unwrap()
                );
            }
        }
    }
}
