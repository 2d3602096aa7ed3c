//! Transition kernels of the nearest-neighbour walks on Z.
//!
//! `ssrw_kernel` evaluates the n-step kernel of the simple symmetric random
//! walk and `biased_kernel` the kernel of a walk with up-probability `p`.
//! Both are parity-restricted binomial masses: the walk can sit at `x` after
//! `n` steps only if `x = n (mod 2)` and `|x| <= n`, in which case the mass
//! is `C(n, (n+x)/2) p^{(n+x)/2} q^{(n-x)/2}`.
//!
//! Accuracy matters here: downstream identities are checked at 1e-12 over
//! rows with up to 10^4 terms, so the naive `exp(lgamma - lgamma - lgamma)`
//! route (which cancels numbers of size ~1e5 to produce a log of size ~10)
//! is not good enough. Instead:
//!
//! * `n <= 64`: exact integer binomials in `u128`, one rounding at the end;
//! * `n > 64`: a cancellation-free entropy form
//!   `ln pmf = -[k ln(k/(np)) + m ln(m/(nq))] + ln(n/(2 pi k m))/2 + corr`
//!   with the `ln` terms evaluated through `ln_1p` and `corr` the Stirling
//!   series correction. Each mass comes out with relative error of a few
//!   ulps, uniformly over the support.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Law of a nearest-neighbour sampling walk: up-probability `p` in (0,1).
///
/// The symmetric tag is exact: `is_symmetric` holds iff `p == 0.5` bit for
/// bit, matching the dichotomy between drifted and symmetric sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct StepLaw {
    p_up: f64,
}

impl StepLaw {
    pub fn new(p_up: f64) -> Result<Self> {
        if !(p_up > 0.0 && p_up < 1.0) || !p_up.is_finite() {
            return Err(Error::InvalidProbability(p_up));
        }
        Ok(Self { p_up })
    }

    pub fn symmetric() -> Self {
        Self { p_up: 0.5 }
    }

    pub fn p_up(self) -> f64 {
        self.p_up
    }

    pub fn p_down(self) -> f64 {
        1.0 - self.p_up
    }

    /// Mean increment `2p - 1`.
    pub fn drift(self) -> f64 {
        2.0 * self.p_up - 1.0
    }

    pub fn is_symmetric(self) -> bool {
        self.p_up == 0.5
    }
}

impl TryFrom<f64> for StepLaw {
    type Error = Error;
    fn try_from(p: f64) -> Result<Self> {
        StepLaw::new(p)
    }
}

impl From<StepLaw> for f64 {
    fn from(law: StepLaw) -> f64 {
        law.p_up
    }
}

/// A finite nonempty set of lattice sites, sorted, duplicates rejected.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct FiniteSiteSet {
    sites: Vec<i64>,
}

impl FiniteSiteSet {
    pub fn new(mut sites: Vec<i64>) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::EmptySites);
        }
        sites.sort_unstable();
        for w in sites.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicateSite(w[0]));
            }
        }
        Ok(Self { sites })
    }

    pub fn singleton(site: i64) -> Self {
        Self { sites: vec![site] }
    }

    pub fn sites(&self) -> &[i64] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> i64 {
        self.sites[0]
    }

    pub fn max(&self) -> i64 {
        *self.sites.last().unwrap()
    }

    pub fn contains(&self, x: i64) -> bool {
        self.sites.binary_search(&x).is_ok()
    }

    /// Multiset of ordered-pair displacements `y - x`, as (displacement, count).
    pub fn displacement_counts(&self) -> Vec<(i64, u64)> {
        let mut counts = std::collections::BTreeMap::new();
        for &x in &self.sites {
            for &y in &self.sites {
                *counts.entry(y - x).or_insert(0u64) += 1;
            }
        }
        counts.into_iter().collect()
    }
}

impl TryFrom<Vec<i64>> for FiniteSiteSet {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        FiniteSiteSet::new(v)
    }
}

impl From<FiniteSiteSet> for Vec<i64> {
    fn from(s: FiniteSiteSet) -> Vec<i64> {
        s.sites
    }
}

/// One kernel row: all nonzero masses of an n-step kernel, sorted by site.
#[derive(Debug, Clone, Serialize)]
pub struct KernelRow {
    pub n: u64,
    pub entries: Vec<(i64, f64)>,
}

impl KernelRow {
    pub fn mass(&self) -> f64 {
        self.entries.iter().map(|&(_, p)| p).sum()
    }
}

// ---------------------------------------------------------------------------
// Binomial pmf machinery
// ---------------------------------------------------------------------------

const EXACT_N_MAX: u64 = 64;
const STIRLING_MIN: u64 = 33;

/// Exact binomial coefficient for n <= 64 (peaks at C(64,32) ~ 1.8e18).
fn binomial_u128(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 1..=k {
        acc = acc * (n - k + j) as u128 / j as u128;
    }
    acc
}

/// ln j! exactly for j <= 33 (33! still fits in u128).
fn ln_factorial_small(j: u64) -> f64 {
    debug_assert!(j <= 33);
    let mut f: u128 = 1;
    for i in 2..=j as u128 {
        f *= i;
    }
    (f as f64).ln()
}

/// Stirling-series correction `ln j! - (j ln j - j + ln(2 pi j)/2)`.
fn stirling_correction(j: u64) -> f64 {
    if j >= STIRLING_MIN {
        let x = j as f64;
        let inv2 = 1.0 / (x * x);
        // truncation error below 1e-16 for j >= 33
        (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0))) / x
    } else {
        let x = j as f64;
        ln_factorial_small(j) - (x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln())
    }
}

/// ln of the binomial pmf `C(n,k) p^k q^{n-k}` for n > 64 and 0 < k < n.
fn ln_binom_pmf_interior(n: u64, k: u64, p: f64, q: f64) -> f64 {
    let nf = n as f64;
    let kf = k as f64;
    let mf = (n - k) as f64;
    let np = nf * p;
    let nq = nf * q;
    // relative-entropy part, stable against cancellation
    let t = kf * ((kf - np) / np).ln_1p() + mf * ((mf - nq) / nq).ln_1p();
    let base = 0.5 * (nf / (2.0 * std::f64::consts::PI * kf * mf)).ln();
    let corr = stirling_correction(n) - stirling_correction(k) - stirling_correction(n - k);
    -t + base + corr
}

/// Binomial pmf `C(n,k) p^k (1-p)^{n-k}`, exact support handling.
///
/// For `p == 0.5` the argument is canonicalized to `min(k, n-k)` so the
/// symmetric kernel is symmetric bit for bit.
pub fn binomial_pmf(n: u64, k: u64, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let q = 1.0 - p;
    let k = if p == 0.5 { k.min(n - k) } else { k };
    if n <= EXACT_N_MAX {
        let c = binomial_u128(n, k) as f64;
        return if p == 0.5 {
            // powers of two are exact in f64
            c * (0.5f64).powi(n as i32)
        } else {
            c * p.powi(k as i32) * q.powi((n - k) as i32)
        };
    }
    if k == 0 {
        return (n as f64 * q.ln()).exp();
    }
    if k == n {
        return (n as f64 * p.ln()).exp();
    }
    ln_binom_pmf_interior(n, k, p, q).exp()
}

// ---------------------------------------------------------------------------
// Kernel evaluation
// ---------------------------------------------------------------------------

/// Is `x` on the n-step support (parity match and within reach)?
#[inline]
fn on_support(n: u64, x: i64) -> bool {
    x.unsigned_abs() <= n && (x.rem_euclid(2) as u64) == n % 2
}

/// n-step mass `Q_n(x)` of the simple symmetric random walk.
///
/// Out-of-support arguments return 0. Exact for `n <= 64`; relative error of
/// a few ulps otherwise.
pub fn ssrw_kernel(n: u64, x: i64) -> f64 {
    if !on_support(n, x) {
        return 0.0;
    }
    let k = (n + x.unsigned_abs()) / 2;
    binomial_pmf(n, k, 0.5)
}

/// n-step mass `P_n(x)` of the biased walk with law `law`.
pub fn biased_kernel(n: u64, x: i64, law: StepLaw) -> f64 {
    if !on_support(n, x) {
        return 0.0;
    }
    // x = (#up) - (#down), n = (#up) + (#down)
    let k = ((n as i64 + x) / 2) as u64;
    binomial_pmf(n, k, law.p_up())
}

/// Largest mass of the n-step symmetric kernel (the value at the mode).
pub fn ssrw_kernel_max(n: u64) -> f64 {
    if n % 2 == 0 {
        ssrw_kernel(n, 0)
    } else {
        ssrw_kernel(n, 1)
    }
}

/// All nonzero entries of an n-step kernel row, sorted by site.
pub fn kernel_row(n: u64, law: Option<StepLaw>) -> KernelRow {
    let mut entries = Vec::with_capacity(n as usize + 1);
    let mut x = -(n as i64);
    while x <= n as i64 {
        let p = match law {
            Some(l) => biased_kernel(n, x, l),
            None => ssrw_kernel(n, x),
        };
        if p > 0.0 {
            entries.push((x, p));
        }
        x += 2;
    }
    KernelRow { n, entries }
}

/// Sup-distance between the rescaled kernel and its parity-corrected Gaussian
/// comparator:
/// `sup_x | (sqrt(n)/2) Q_n(x) - 1{x = n mod 2} exp(-x^2/(2n)) / sqrt(2 pi) |`.
///
/// The supremum is exact over the finite support; off-parity sites contribute
/// zero on both sides.
pub fn lclt_gap(n: u64) -> f64 {
    assert!(n >= 1, "lclt_gap needs n >= 1");
    let half_sqrt_n = 0.5 * (n as f64).sqrt();
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut gap: f64 = 0.0;
    // symmetric in x, so scan x >= 0 on the right parity
    let mut x = (n % 2) as i64;
    while x <= n as i64 {
        let q = ssrw_kernel(n, x);
        let g = norm * (-(x as f64) * (x as f64) / (2.0 * n as f64)).exp();
        gap = gap.max((half_sqrt_n * q - g).abs());
        x += 2;
    }
    gap
}

/// `sum_x Q_n(x)^s` over the exact finite support.
pub fn lp_norm(n: u64, s: u32) -> f64 {
    assert!(n >= 1 && s >= 1, "lp_norm needs n >= 1 and s >= 1");
    // symmetric: center term (even n) plus twice the positive side
    let mut acc = if n % 2 == 0 {
        ssrw_kernel(n, 0).powi(s as i32)
    } else {
        0.0
    };
    let mut x: i64 = if n % 2 == 0 { 2 } else { 1 };
    while x <= n as i64 {
        acc += 2.0 * ssrw_kernel(n, x).powi(s as i32);
        x += 2;
    }
    acc
}

/// Total hitting mass `sum_x P_x(tau_A^+ <= N)` of the symmetric walk, where
/// `tau_A^+` is the first visit to `A` at a time >= 1.
///
/// Forward dynamic programming on the absorbing chain over the window
/// `[min A - N, max A + N]`; starts outside contribute exactly zero because
/// the walk has speed one. Cost O(N^2 + N |A|) up to the window span.
pub fn hitting_mass(n_steps: u64, sites: &FiniteSiteSet) -> f64 {
    if n_steps == 0 {
        return 0.0;
    }
    let lo = sites.min() - n_steps as i64;
    let hi = sites.max() + n_steps as i64;
    let width = (hi - lo + 1) as usize;
    // visit[j]: probability of touching A within the first m steps (m grows
    // with the loop), started at lo + j, counting time 0.
    let mut visit = vec![0.0f64; width + 2]; // one zero pad on each side
    let mut next = visit.clone();
    let idx = |x: i64| (x - lo + 1) as usize;
    for &a in sites.sites() {
        visit[idx(a)] = 1.0;
    }
    for _ in 1..n_steps {
        for j in 1..=width {
            next[j] = 0.5 * (visit[j - 1] + visit[j + 1]);
        }
        for &a in sites.sites() {
            next[idx(a)] = 1.0;
        }
        std::mem::swap(&mut visit, &mut next);
    }
    // one more step without absorbing at time 0: tau^+ starts counting at 1
    let mut mass = 0.0;
    for j in 1..=width {
        mass += 0.5 * (visit[j - 1] + visit[j + 1]);
    }
    mass
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Path-enumeration oracle: walk all 2^n sign sequences.
    fn enumerated_kernel(n: u32, x: i64, p: f64) -> f64 {
        let mut mass = 0.0;
        for bits in 0u64..(1 << n) {
            let ups = bits.count_ones() as i64;
            if 2 * ups - n as i64 == x {
                mass += p.powi(ups as i32) * (1.0 - p).powi(n as i32 - ups as i32);
            }
        }
        mass
    }

    /// Pascal-triangle oracle in u128, independent of the multiplicative path.
    fn pascal_row(n: usize) -> Vec<u128> {
        let mut row = vec![1u128];
        for _ in 0..n {
            let mut next = vec![1u128];
            for w in row.windows(2) {
                next.push(w[0] + w[1]);
            }
            next.push(1);
            row = next;
        }
        row
    }

    #[test]
    fn identity_at_time_zero() {
        assert_eq!(ssrw_kernel(0, 0), 1.0);
        assert_eq!(ssrw_kernel(0, 1), 0.0);
    }

    #[test]
    fn parity_mismatch_is_zero() {
        assert_eq!(ssrw_kernel(3, 0), 0.0);
        assert_eq!(ssrw_kernel(4, 1), 0.0);
        assert_eq!(ssrw_kernel(4, 6), 0.0);
    }

    #[test]
    fn four_step_mass_matches_enumeration() {
        assert_eq!(ssrw_kernel(4, 2), 0.25);
        for n in 1..=14u32 {
            for x in -(n as i64)..=(n as i64) {
                let q = ssrw_kernel(n as u64, x);
                let e = enumerated_kernel(n, x, 0.5);
                assert!((q - e).abs() <= 1e-14, "n={n} x={x}: {q} vs {e}");
            }
        }
    }

    #[test]
    fn biased_examples_and_enumeration() {
        let law = StepLaw::new(0.75).unwrap();
        assert!((biased_kernel(1, 1, law) - 0.75).abs() < 1e-15);
        assert!((biased_kernel(2, 0, law) - 0.375).abs() < 1e-15);
        for n in 1..=12u32 {
            for x in -(n as i64)..=(n as i64) {
                let got = biased_kernel(n as u64, x, law);
                let want = enumerated_kernel(n, x, 0.75);
                assert!((got - want).abs() < 1e-13, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn biased_at_half_reduces_to_symmetric_bitwise() {
        let law = StepLaw::symmetric();
        for n in 0..=32u64 {
            for x in -(n as i64)..=(n as i64) {
                assert_eq!(biased_kernel(n, x, law), ssrw_kernel(n, x), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn symmetry_is_bit_exact() {
        for &n in &[5u64, 64, 65, 1001, 4096] {
            let mut x = (n % 2) as i64;
            while x <= n as i64 {
                assert_eq!(ssrw_kernel(n, x), ssrw_kernel(n, -x), "n={n} x={x}");
                x += 2;
            }
        }
    }

    #[test]
    fn exact_rational_path_matches_for_small_n() {
        // n <= 64: pascal triangle over 2^n as the ground truth
        for n in 1..=64usize {
            let row = pascal_row(n);
            for (k, &c) in row.iter().enumerate() {
                let x = 2 * k as i64 - n as i64;
                let exact = c as f64 * (0.5f64).powi(n as i32);
                let got = ssrw_kernel(n as u64, x);
                let rel = (got - exact).abs() / exact;
                assert!(rel <= 1e-15, "n={n} x={x}: rel={rel}");
            }
        }
    }

    #[test]
    fn rows_sum_to_one_within_1e12() {
        for &n in &[1u64, 2, 63, 64, 65, 100, 1001, 4096, 10_000] {
            let s = kernel_row(n, None).mass();
            assert!((s - 1.0).abs() <= 1e-12, "n={n}: {}", (s - 1.0).abs());
            for &p in &[0.6, 0.75, 0.9] {
                let law = StepLaw::new(p).unwrap();
                let s = kernel_row(n, Some(law)).mass();
                assert!((s - 1.0).abs() <= 1e-12, "n={n} p={p}: {}", (s - 1.0).abs());
            }
        }
    }

    #[test]
    fn chapman_kolmogorov() {
        for &(n, m) in &[(3u64, 5u64), (10, 7), (64, 64)] {
            let total = n + m;
            let mut x = -(total as i64);
            while x <= total as i64 {
                let lhs = ssrw_kernel(total, x);
                let mut rhs = 0.0;
                let mut y = -(n as i64);
                while y <= n as i64 {
                    rhs += ssrw_kernel(n, y) * ssrw_kernel(m, x - y);
                    y += 1;
                }
                assert!((lhs - rhs).abs() <= 1e-12, "n={n} m={m} x={x}");
                x += 1;
            }
        }
    }

    #[test]
    fn mode_obeys_inverse_sqrt_envelope() {
        // Q_n(x) <= Q_n(mode) <= 2 n^{-1/2}
        for n in 1..=10_000u64 {
            assert!(
                ssrw_kernel_max(n) <= 2.0 / (n as f64).sqrt(),
                "envelope fails at n={n}"
            );
        }
    }

    #[test]
    fn lclt_gap_examples() {
        assert!(lclt_gap(100) >= 0.0);
        assert!(lclt_gap(10_000) < lclt_gap(100));
        assert!(lclt_gap(1 << 16) < 1e-3);
    }

    #[test]
    fn lp_norm_examples() {
        for &n in &[1u64, 5, 100] {
            assert!((lp_norm(n, 1) - 1.0).abs() <= 1e-12);
        }
        assert!((lp_norm(2, 2) - 0.375).abs() <= 1e-15);
        assert!((lp_norm(2, 2) - ssrw_kernel(4, 0)).abs() <= 1e-15);
    }

    #[test]
    fn l2_identity_small_range() {
        for t in 1..=200u64 {
            assert!(
                (lp_norm(t, 2) - ssrw_kernel(2 * t, 0)).abs() <= 1e-12,
                "t={t}"
            );
        }
    }

    /// Hitting-mass oracle: enumerate every path of every relevant start.
    fn hitting_mass_enumerated(n: u32, sites: &FiniteSiteSet) -> f64 {
        let mut mass = 0.0;
        for start in (sites.min() - n as i64)..=(sites.max() + n as i64) {
            for bits in 0u64..(1 << n) {
                let mut pos = start;
                let mut hit = false;
                for step in 0..n {
                    pos += if bits >> step & 1 == 1 { 1 } else { -1 };
                    if sites.contains(pos) {
                        hit = true;
                        break;
                    }
                }
                if hit {
                    mass += (0.5f64).powi(n as i32);
                }
            }
        }
        mass
    }

    #[test]
    fn hitting_mass_examples() {
        let origin = FiniteSiteSet::singleton(0);
        assert_eq!(hitting_mass(0, &origin), 0.0);
        assert!((hitting_mass(1, &origin) - 1.0).abs() <= 1e-12);
        assert!((hitting_mass(2, &origin) - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn hitting_mass_matches_enumeration() {
        let sets = [
            FiniteSiteSet::singleton(0),
            FiniteSiteSet::new(vec![0, 1]).unwrap(),
            FiniteSiteSet::new(vec![-2, 3]).unwrap(),
        ];
        for sites in &sets {
            for n in 1..=10u32 {
                let dp = hitting_mass(n as u64, sites);
                let oracle = hitting_mass_enumerated(n, sites);
                assert!(
                    (dp - oracle).abs() <= 1e-12,
                    "n={n} A={:?}: {dp} vs {oracle}",
                    sites.sites()
                );
            }
        }
    }

    #[test]
    fn hitting_mass_monotone_and_bounded() {
        let sites = FiniteSiteSet::new(vec![-1, 0, 2]).unwrap();
        let mut prev = 0.0;
        for n in 0..=200u64 {
            let m = hitting_mass(n, &sites);
            assert!(m + 1e-12 >= prev, "not monotone at n={n}");
            assert!(m <= 2.0 * n as f64 + sites.len() as f64 + 1e-9, "bound at n={n}");
            prev = m;
        }
    }

    #[test]
    fn site_set_rejects_bad_input() {
        assert!(matches!(FiniteSiteSet::new(vec![]), Err(Error::EmptySites)));
        assert!(matches!(
            FiniteSiteSet::new(vec![1, 1]),
            Err(Error::DuplicateSite(1))
        ));
    }

    #[test]
    fn step_law_validation() {
        assert!(StepLaw::new(0.0).is_err());
        assert!(StepLaw::new(1.0).is_err());
        assert!(StepLaw::new(f64::NAN).is_err());
        let law = StepLaw::new(0.75).unwrap();
        assert!((law.drift() - 0.5).abs() < 1e-15);
        assert!(!law.is_symmetric());
        assert!(StepLaw::symmetric().is_symmetric());
    }
}
