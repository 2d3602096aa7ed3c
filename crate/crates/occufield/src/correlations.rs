//! Path-averaged kernel correlations and their certified tail sums.
//!
//! For a sampling walk with law `P` and the particle kernel `Q`, the order-q
//! correlation at lag t is the lattice expectation
//!
//! ```text
//! a_t(q) = E[ Q_t(S_t)^q ] = sum_x P_t(x) Q_t(x)^q .
//! ```
//!
//! Under drift the sequence decays exponentially (the walk escapes the
//! diffusive window at linear speed), so `sum_t a_t` converges and can be
//! truncated with a fully analytic certificate built from a Hoeffding bound.
//! Under symmetric sampling `a_t(q) = sum_x Q_t(x)^{q+1}` decays only like
//! `t^{-q/2}`: divergent for q <= 2, and summable for q >= 3 where the tail
//! is estimated against the `kappa_{q+1} t^{-q/2}` asymptote with an
//! empirical deviation envelope.
//!
//! Large horizons need many symmetric correlation values, so besides the
//! generic lattice sum there are O(1)-per-term paths: the lag-2t return mass
//! for q = 1, and the classical three-term recurrences for the sums of cubed
//! (Franel numbers) and fourth-power binomial coefficients for q = 2, 3.
//! The lattice sum stays as the independent cross-check.

use crate::charlier::{charlier_coefficients, PolynomialObservable};
use crate::error::{Error, Result};
use crate::kernels::{biased_kernel, lp_norm, ssrw_kernel, StepLaw};
use crate::parallel::map_indexed;
use std::collections::BTreeMap;

/// Hard cap on certificate-driven truncation lengths.
const TAIL_TERM_CAP: u64 = 1 << 25;

/// Correlation values of one order under one law, with an optional certified
/// bound on the unsummed remainder.
#[derive(Debug, Clone)]
pub struct CorrelationSequence {
    pub order: u32,
    pub law: StepLaw,
    /// `values[t-1]` is the lag-t correlation, t = 1..=T.
    pub values: Vec<f64>,
    pub tail_bound: Option<f64>,
}

impl CorrelationSequence {
    pub fn compute(order: u32, law: StepLaw, t_max: u64) -> Self {
        Self {
            order,
            law,
            values: correlation_prefix(order, law, t_max),
            tail_bound: None,
        }
    }
}

/// `kappa_s = (2/pi)^{(s-1)/2} / sqrt(s)`, the constant in the lattice-norm
/// asymptotics `sum_x Q_n(x)^s ~ kappa_s n^{-(s-1)/2}`.
pub fn kappa(s: u32) -> f64 {
    let sf = s as f64;
    (2.0 / std::f64::consts::PI).powf((sf - 1.0) / 2.0) / sf.sqrt()
}

/// Exact lag-t correlation of order q: the lattice sum over the 2t+1-point
/// support.
pub fn a_t(q: u32, t: u64, law: StepLaw) -> f64 {
    assert!(q >= 1 && t >= 1, "a_t needs q >= 1 and t >= 1");
    let mut acc = 0.0;
    let mut x = -(t as i64);
    while x <= t as i64 {
        let p = biased_kernel(t, x, law);
        if p > 0.0 {
            let qx = ssrw_kernel(t, x);
            if qx > 0.0 {
                acc += p * qx.powi(q as i32);
            }
        }
        x += 2;
    }
    acc
}

// ---------------------------------------------------------------------------
// Fast symmetric prefixes
// ---------------------------------------------------------------------------

/// `sum_k C(t,k)^3 / 8^t` for t = 1..=t_max, by the Franel three-term
/// recurrence `n^2 f(n) = (7n^2-7n+2) f(n-1) + 8(n-1)^2 f(n-2)` rescaled
/// by `8^n`. Forward iteration tracks the dominant solution, so it is
/// numerically stable; tests pin it against the lattice sums.
fn cubed_binomial_prefix(t_max: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(t_max as usize);
    let mut g_prev = 1.0; // t = 0
    let mut g = 0.25; // t = 1
    if t_max >= 1 {
        out.push(g);
    }
    for n in 2..=t_max {
        let nf = n as f64;
        let next = ((7.0 * nf * nf - 7.0 * nf + 2.0) / 8.0 * g
            + (nf - 1.0) * (nf - 1.0) / 8.0 * g_prev)
            / (nf * nf);
        g_prev = g;
        g = next;
        out.push(g);
    }
    out
}

/// `sum_k C(t,k)^4 / 16^t` for t = 1..=t_max, by the analogous three-term
/// recurrence for fourth powers of binomial coefficients.
fn fourth_binomial_prefix(t_max: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(t_max as usize);
    let mut r_prev = 1.0; // t = 0
    let mut r = 0.125; // t = 1
    if t_max >= 1 {
        out.push(r);
    }
    for n in 2..=t_max {
        let nf = n as f64;
        let c1 = (2.0 * nf - 1.0) * (3.0 * nf * nf - 3.0 * nf + 1.0) / 8.0;
        let c2 = (nf - 1.0) * (4.0 * nf - 3.0) * (4.0 * nf - 5.0) / 64.0;
        let next = (c1 * r + c2 * r_prev) / (nf * nf * nf);
        r_prev = r;
        r = next;
        out.push(r);
    }
    out
}

/// Symmetric correlations `a_t = sum_x Q_t(x)^{q+1}` for t = 1..=t_max.
pub fn symmetric_prefix(q: u32, t_max: u64) -> Vec<f64> {
    match q {
        1 => (1..=t_max).map(|t| ssrw_kernel(2 * t, 0)).collect(),
        2 => cubed_binomial_prefix(t_max),
        3 => fourth_binomial_prefix(t_max),
        _ => map_indexed(t_max, |i| lp_norm(i + 1, q + 1)),
    }
}

/// Correlation prefix under any law.
pub fn correlation_prefix(q: u32, law: StepLaw, t_max: u64) -> Vec<f64> {
    if law.is_symmetric() {
        return symmetric_prefix(q, t_max);
    }
    let c0 = drift_decay_rate(law);
    map_indexed(t_max, move |i| {
        let t = i + 1;
        // skip lattice work once the envelope puts the value below f64 reach
        if 3.0 * (-c0 * t as f64).exp() < 1e-320 {
            0.0
        } else {
            a_t(q, t, law)
        }
    })
}

// ---------------------------------------------------------------------------
// Certified tail sums
// ---------------------------------------------------------------------------

/// Result of a certified truncation: `sum` approximates the infinite series
/// with error at most `certified_tail`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TailSum {
    pub sum: f64,
    pub certified_tail: f64,
    pub terms: u64,
}

/// Hoeffding decay rate for the drifted certificate: with drift v, the event
/// `|S_t| <= |v| t / 2` has probability at most `2 exp(-v^2 t / 8)`, and on
/// its complement the kernel itself is at most `exp(-v^2 t / 8)`. Hence
/// `a_t(q) <= 3 exp(-v^2 t / 8)` for every q >= 1.
fn drift_decay_rate(law: StepLaw) -> f64 {
    let v = law.drift();
    v * v / 8.0
}

/// Remaining-tail bound after lag T under drift: geometric sum of the
/// envelope above.
fn drifted_tail_bound(c0: f64, t: u64) -> f64 {
    3.0 * (-c0 * (t as f64 + 1.0)).exp() / (-(-c0).exp_m1())
}

/// `sum_{t > T} t^{-s}` by Euler-Maclaurin at `a = T+1`; accurate to far
/// below the certificates it feeds (a >= 64, s > 1).
fn tail_power_sum(s: f64, t: u64) -> f64 {
    let a = t as f64 + 1.0;
    a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s) + s * a.powf(-s - 1.0) / 12.0
        - s * (s + 1.0) * (s + 2.0) * a.powf(-s - 3.0) / 720.0
}

/// `sum_{t >= 1} a_t(q)` truncated with a certified remainder below `eps`.
///
/// Drifted laws use the analytic Hoeffding certificate. Symmetric laws are
/// summable only for q >= 3; there the tail beyond T is estimated by
/// `kappa_{q+1} sum_{t>T} t^{-q/2}` and certified by the deviation envelope
/// `|a_t / (kappa_{q+1} t^{-q/2}) - 1|`, observed on the computed prefix and
/// doubled for safety (the deviation decays like 1/t; tests check the
/// envelope empirically).
pub fn tail_sum(q: u32, law: StepLaw, eps: f64) -> Result<TailSum> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidTolerance(eps));
    }
    if law.is_symmetric() {
        if q <= 2 {
            return Err(Error::NonSummable { order: q });
        }
        return symmetric_tail_sum(q, eps);
    }

    let c0 = drift_decay_rate(law);
    let needed = ((3.0 / (eps * (-(-c0).exp_m1()))).ln() / c0).ceil().max(1.0) as u64;
    if needed > TAIL_TERM_CAP {
        return Err(Error::TailBudget {
            needed,
            cap: TAIL_TERM_CAP,
        });
    }
    let mut sum = 0.0;
    let mut comp = 0.0; // Kahan compensation, fixed summation order
    let mut t = 0u64;
    loop {
        t += 1;
        let bound = drifted_tail_bound(c0, t);
        let value = if 3.0 * (-c0 * t as f64).exp() < 1e-320 {
            0.0
        } else {
            a_t(q, t, law)
        };
        let y = value - comp;
        let fresh = sum + y;
        comp = (fresh - sum) - y;
        sum = fresh;
        if bound <= eps || bound < 1e-320 {
            return Ok(TailSum {
                sum,
                certified_tail: bound.min(eps),
                terms: t,
            });
        }
    }
}

fn symmetric_tail_sum(q: u32, eps: f64) -> Result<TailSum> {
    let s = q as f64 / 2.0;
    let k = kappa(q + 1);
    let mut t_max: u64 = 1024;
    loop {
        let prefix = symmetric_prefix(q, t_max);
        let dev = |t: u64| -> f64 {
            let asymptote = k * (t as f64).powf(-s);
            (prefix[(t - 1) as usize] / asymptote - 1.0).abs()
        };
        // envelope over the last computed octave, doubled for safety
        let envelope = 2.0 * dev(t_max).max(dev(t_max / 2));
        let tw = k * tail_power_sum(s, t_max);
        let partial: f64 = prefix.iter().sum();
        let cert = envelope * tw + 1e-15 * partial;
        if cert <= eps {
            let e_last = prefix[(t_max - 1) as usize] / (k * (t_max as f64).powf(-s)) - 1.0;
            return Ok(TailSum {
                sum: partial + tw * (1.0 + 0.5 * e_last),
                certified_tail: cert,
                terms: t_max,
            });
        }
        if t_max >= TAIL_TERM_CAP {
            return Err(Error::TailBudget {
                needed: 2 * t_max,
                cap: TAIL_TERM_CAP,
            });
        }
        t_max *= 2;
    }
}

/// The limiting variance constant per unit horizon of a path-sampled
/// polynomial observable under drifted sampling:
/// `sum_q c_q^2 q! lambda^q (1 + 2 sum_t a_t(q))`.
///
/// Strictly exceeds the top-order term `c_k^2 k! lambda^k`, and errors out
/// for symmetric laws, where no single linear constant exists for low ranks.
pub fn c_phi_constant(phi: &PolynomialObservable, lambda: f64, law: StepLaw) -> Result<f64> {
    if law.is_symmetric() {
        return Err(Error::DriftRequired);
    }
    let coeffs = charlier_coefficients(phi, lambda)?;
    let mut total = 0.0;
    let mut weight = 1.0; // q! lambda^q
    for (i, &c) in coeffs.c.iter().enumerate() {
        let q = i as u32 + 1;
        weight *= q as f64 * lambda;
        if c != 0.0 {
            let tail = tail_sum(q, law, 1e-12)?;
            total += c * c * weight * (1.0 + 2.0 * tail.sum);
        }
    }
    Ok(total)
}

// ---------------------------------------------------------------------------
// Memoized correlation columns
// ---------------------------------------------------------------------------

/// Per-law cache of correlation prefixes, grown on demand. Evaluating the
/// variance of path-sampled observables over doubling horizon grids reuses
/// the same columns.
#[derive(Debug, Clone)]
pub struct CorrelationTable {
    law: StepLaw,
    cols: BTreeMap<u32, Vec<f64>>,
}

impl CorrelationTable {
    pub fn new(law: StepLaw) -> Self {
        Self {
            law,
            cols: BTreeMap::new(),
        }
    }

    pub fn law(&self) -> StepLaw {
        self.law
    }

    /// Correlation values for order q up to lag `t_max` (recomputed from
    /// scratch when the column grows; all paths are deterministic).
    pub fn values(&mut self, q: u32, t_max: u64) -> &[f64] {
        let col = self.cols.entry(q).or_default();
        if (col.len() as u64) < t_max {
            *col = correlation_prefix(q, self.law, t_max);
        }
        &col[..t_max as usize]
    }

    /// `sum_{t=1}^{n-1} (n - t) a_t(q)`, the occupation-weighted correlation
    /// mass entering the exact variance of path-sampled observables.
    pub fn weighted_sum(&mut self, q: u32, n: u64) -> f64 {
        if n <= 1 {
            return 0.0;
        }
        let vals = self.values(q, n - 1);
        let nf = n as f64;
        vals.iter()
            .enumerate()
            .map(|(i, &a)| (nf - (i as f64 + 1.0)) * a)
            .sum()
    }
}
