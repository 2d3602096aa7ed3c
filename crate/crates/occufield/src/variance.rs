//! Exact finite-horizon variances and their asymptotic regimes.
//!
//! All three observables admit closed variance formulas built from kernel
//! sums:
//!
//! * cumulative occupation of a site set A over horizon N:
//!   `lambda [ N|A| + 2 sum_{t<N} (N-t) sum_{x,y in A} Q_t(y-x) ]`,
//!   growing like `8 lambda |A|^2 / (3 sqrt(2 pi)) N^{3/2}`;
//! * distinct visitors of A: `lambda * hitting_mass(N, A)`, growing like
//!   `2 lambda sqrt(2/pi) N^{1/2}`;
//! * path-sampled polynomial sums:
//!   `sum_q c_q^2 q! lambda^q ( N + 2 sum_{t<N} (N-t) a_t(q) )`,
//!   linear in N under drift, and under symmetric sampling governed by the
//!   chaos rank: `N^{3/2}` at rank 1, `N log N` (natural log) at rank 2,
//!   order N from rank 3 on, where only the diagonal lower bound
//!   `c_r^2 r! lambda^r` is explicit.

use crate::charlier::{charlier_coefficients, PolynomialObservable};
use crate::correlations::CorrelationTable;
use crate::error::Result;
use crate::kernels::{hitting_mass, ssrw_kernel, FiniteSiteSet, StepLaw};
use serde::Serialize;

/// Growth class of a variance curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceRegime {
    /// `const * N^{3/2}`
    ThreeHalves,
    /// `const * N^{1/2}`
    SqrtN,
    /// `const * N`
    Linear,
    /// `const * N ln N`
    NLogN,
    /// order N with no explicit constant; only doubling ratios are pinned
    BoundedRatio,
}

impl VarianceRegime {
    pub fn label(self) -> &'static str {
        match self {
            VarianceRegime::ThreeHalves => "N^{3/2}",
            VarianceRegime::SqrtN => "N^{1/2}",
            VarianceRegime::Linear => "N",
            VarianceRegime::NLogN => "N*logN",
            VarianceRegime::BoundedRatio => "bounded-ratio",
        }
    }

    /// The predicted curve `const * shape(N)`.
    pub fn predicted(self, constant: f64, n: u64) -> f64 {
        let nf = n as f64;
        match self {
            VarianceRegime::ThreeHalves => constant * nf.powf(1.5),
            VarianceRegime::SqrtN => constant * nf.sqrt(),
            VarianceRegime::Linear | VarianceRegime::BoundedRatio => constant * nf,
            VarianceRegime::NLogN => constant * nf * nf.ln(),
        }
    }
}

/// One exact-versus-predicted variance evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct VarianceReport {
    pub observable: char,
    pub n: u64,
    pub exact: f64,
    pub leading_constant: f64,
    pub regime: VarianceRegime,
    /// exact / predicted
    pub ratio: f64,
}

impl VarianceReport {
    pub fn new(
        observable: char,
        n: u64,
        exact: f64,
        constant: f64,
        regime: VarianceRegime,
    ) -> Self {
        Self {
            observable,
            n,
            exact,
            leading_constant: constant,
            regime,
            ratio: exact / regime.predicted(constant, n),
        }
    }
}

/// Exact variance of the cumulative occupation of `sites` over horizon `n`.
pub fn var_wn(n: u64, sites: &FiniteSiteSet, lambda: f64) -> f64 {
    assert!(n >= 1, "var_wn needs n >= 1");
    let displacements = sites.displacement_counts();
    let mut cross = 0.0;
    for t in 1..n {
        let mut row = 0.0;
        for &(d, count) in &displacements {
            let q = ssrw_kernel(t, d);
            if q > 0.0 {
                row += count as f64 * q;
            }
        }
        cross += (n - t) as f64 * row;
    }
    lambda * (n as f64 * sites.len() as f64 + 2.0 * cross)
}

/// Leading constant of the occupation variance: `8 lambda |A|^2 / (3 sqrt(2 pi))`.
pub fn var_wn_leading(sites: &FiniteSiteSet, lambda: f64) -> f64 {
    let a = sites.len() as f64;
    8.0 * lambda * a * a / (3.0 * (2.0 * std::f64::consts::PI).sqrt())
}

/// Exact variance of the distinct-visitor count: `lambda * hitting_mass(n, A)`
/// (the count is Poisson, so mean and variance coincide).
pub fn var_dn(n: u64, sites: &FiniteSiteSet, lambda: f64) -> f64 {
    lambda * hitting_mass(n, sites)
}

/// Leading constant of the distinct-visitor variance: `2 lambda sqrt(2/pi)`.
pub fn var_dn_leading(lambda: f64) -> f64 {
    2.0 * lambda * (2.0 / std::f64::consts::PI).sqrt()
}

/// Exact variance of the path-sampled polynomial sum over horizon `n`,
/// reusing correlation columns from `table`.
pub fn var_y_with(
    table: &mut CorrelationTable,
    n: u64,
    phi: &PolynomialObservable,
    lambda: f64,
) -> Result<f64> {
    assert!(n >= 1, "var_y needs n >= 1");
    let coeffs = charlier_coefficients(phi, lambda)?;
    let mut total = 0.0;
    let mut weight = 1.0; // q! lambda^q
    for (i, &c) in coeffs.c.iter().enumerate() {
        let q = i as u32 + 1;
        weight *= q as f64 * lambda;
        if c != 0.0 {
            let weighted = table.weighted_sum(q, n);
            total += c * c * weight * (n as f64 + 2.0 * weighted);
        }
    }
    Ok(total)
}

/// Exact variance of the path-sampled polynomial sum (fresh correlation
/// table; prefer [`var_y_with`] over doubling grids).
pub fn var_y(n: u64, phi: &PolynomialObservable, lambda: f64, law: StepLaw) -> Result<f64> {
    var_y_with(&mut CorrelationTable::new(law), n, phi, lambda)
}

/// Variance regime of a path-sampled observable under symmetric sampling,
/// classified by chaos rank.
#[derive(Debug, Clone, Serialize)]
pub struct RegimeReport {
    pub rank: u32,
    pub regime: VarianceRegime,
    pub constant: f64,
    /// true from rank three on, where the constant is only the diagonal
    /// lower bound (the sharp constant is not explicit)
    pub constant_is_lower_bound: bool,
}

/// Classify the symmetric-sampling variance regime of `phi`:
/// rank 1 gives `8 c_1^2 lambda / (3 sqrt(pi)) N^{3/2}`, rank 2 gives
/// `8 c_2^2 lambda^2 / (pi sqrt(3)) N ln N`, rank >= 3 grows linearly with
/// the diagonal lower bound `c_r^2 r! lambda^r` as the reported constant.
pub fn symmetric_regime(phi: &PolynomialObservable, lambda: f64) -> Result<RegimeReport> {
    let coeffs = charlier_coefficients(phi, lambda)?;
    let rank = coeffs.rank;
    let c = coeffs.coefficient(rank);
    Ok(match rank {
        1 => RegimeReport {
            rank,
            regime: VarianceRegime::ThreeHalves,
            constant: 8.0 * c * c * lambda / (3.0 * std::f64::consts::PI.sqrt()),
            constant_is_lower_bound: false,
        },
        2 => RegimeReport {
            rank,
            regime: VarianceRegime::NLogN,
            constant: 8.0 * c * c * lambda * lambda / (std::f64::consts::PI * 3.0f64.sqrt()),
            constant_is_lower_bound: false,
        },
        r => {
            let mut weight = 1.0; // r! lambda^r
            for j in 1..=r {
                weight *= j as f64 * lambda;
            }
            RegimeReport {
                rank,
                regime: VarianceRegime::Linear,
                constant: c * c * weight,
                constant_is_lower_bound: true,
            }
        }
    })
}
