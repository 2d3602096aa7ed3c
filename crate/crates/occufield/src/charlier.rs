//! Monic Charlier polynomials and the Poisson chaos coefficients of a
//! polynomial observable.
//!
//! The monic Charlier polynomials `C_q(x; lambda)` are the orthogonal
//! polynomials of the Poisson(lambda) law, generated by the three-term
//! recurrence
//!
//! ```text
//! (x - lambda) C_r = C_{r+1} + r C_r + r lambda C_{r-1},   C_0 = 1, C_1 = x - lambda
//! ```
//!
//! with `E[C_r C_s] = 1{r=s} r! lambda^r` under Poisson(lambda). A degree-k
//! polynomial observable phi has a unique expansion
//! `phi - E[phi(Poi(lambda))] = sum_{q=1}^k c_q C_q(.; lambda)`; the vector
//! `(c_1, .., c_k)` and its smallest nonzero index (the chaos rank) drive the
//! variance regimes of path-sampled sums, so they are computed exactly here
//! by monic elimination, with a truncated-projection route kept as an
//! independent cross-check.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Degree cap for observables; far beyond anything exercised here, but keeps
/// coefficient arithmetic comfortably inside f64.
pub const MAX_DEGREE: usize = 16;

/// A polynomial observable stored by monomial coefficients `(b_0, .., b_k)`.
///
/// Trailing zero coefficients are trimmed on construction so the leading
/// coefficient of a non-constant observable is always nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PolynomialObservable {
    coeffs: Vec<f64>,
}

impl PolynomialObservable {
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteCoefficient);
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        if coeffs.len() - 1 > MAX_DEGREE {
            return Err(Error::DegreeTooLarge {
                got: coeffs.len() - 1,
                cap: MAX_DEGREE,
            });
        }
        Ok(Self { coeffs })
    }

    /// The identity observable `phi(x) = x`.
    pub fn identity() -> Self {
        Self {
            coeffs: vec![0.0, 1.0],
        }
    }

    /// The monomial `phi(x) = x^j`.
    pub fn monomial(j: usize) -> Result<Self> {
        let mut coeffs = vec![0.0; j + 1];
        coeffs[j] = 1.0;
        Self::new(coeffs)
    }

    /// The monic Charlier polynomial `C_q(.; lambda)` in the monomial basis.
    pub fn charlier_basis(q: u32, lambda: f64) -> Result<Self> {
        Self::new(charlier_monomial_coeffs(q, lambda))
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Horner evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

impl TryFrom<Vec<f64>> for PolynomialObservable {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        PolynomialObservable::new(v)
    }
}

impl From<PolynomialObservable> for Vec<f64> {
    fn from(p: PolynomialObservable) -> Vec<f64> {
        p.coeffs
    }
}

/// Chaos coefficients `(c_1, .., c_k)` of an observable, with the rank
/// (smallest q with `c_q != 0`).
#[derive(Debug, Clone, Serialize)]
pub struct CharlierCoefficients {
    pub lambda: f64,
    /// `c[q-1]` is the coefficient of chaos order q.
    pub c: Vec<f64>,
    pub rank: u32,
}

impl CharlierCoefficients {
    pub fn coefficient(&self, q: u32) -> f64 {
        self.c[(q - 1) as usize]
    }

    pub fn degree(&self) -> usize {
        self.c.len()
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidIntensity(lambda));
    }
    Ok(())
}

/// Value of the monic Charlier polynomial `C_q(x; lambda)`.
pub fn charlier_eval(q: u32, x: f64, lambda: f64) -> f64 {
    match q {
        0 => 1.0,
        1 => x - lambda,
        _ => {
            let mut prev = 1.0;
            let mut cur = x - lambda;
            for r in 1..q as u64 {
                let rf = r as f64;
                let next = (x - lambda - rf) * cur - rf * lambda * prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Monomial coefficients of `C_q(.; lambda)`, from the same recurrence
/// applied to coefficient vectors.
pub fn charlier_monomial_coeffs(q: u32, lambda: f64) -> Vec<f64> {
    let mut prev = vec![1.0];
    if q == 0 {
        return prev;
    }
    let mut cur = vec![-lambda, 1.0];
    for r in 1..q as u64 {
        let rf = r as f64;
        // next = (x - lambda - r) * cur - r*lambda*prev
        let mut next = vec![0.0; cur.len() + 1];
        for (j, &c) in cur.iter().enumerate() {
            next[j + 1] += c;
            next[j] -= (lambda + rf) * c;
        }
        for (j, &c) in prev.iter().enumerate() {
            next[j] -= rf * lambda * c;
        }
        prev = cur;
        cur = next;
    }
    cur
}

/// The same value through the factorial-measure route:
/// `sum_k (-1)^{q-k} C(q,k) n(n-1)..(n-k+1) lambda^{q-k}`.
///
/// Agrees with `charlier_eval(q, n, lambda)`; tests pin the identity down.
pub fn ito_indicator_value(q: u32, count: u64, lambda: f64) -> f64 {
    let mut total = 0.0;
    let mut binom = 1.0; // C(q, k)
    let mut falling = 1.0; // count (count-1) .. (count-k+1)
    for k in 0..=q {
        let sign = if (q - k) % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * falling * lambda.powi((q - k) as i32);
        binom *= (q - k) as f64 / (k + 1) as f64;
        falling *= count as f64 - k as f64;
    }
    total
}

/// Raw Poisson moments `E[N^j]`, j = 0..=degree, by the moment recursion
/// `E[N^{j+1}] = lambda sum_i C(j,i) E[N^i]`.
pub fn poisson_raw_moments(degree: usize, lambda: f64) -> Vec<f64> {
    let mut moments = vec![1.0];
    for j in 0..degree {
        // binomials of row j, built incrementally
        let mut binom = 1.0;
        let mut next = 0.0;
        for (i, m) in moments.iter().enumerate() {
            next += binom * m;
            binom *= (j - i) as f64 / (i + 1) as f64;
        }
        moments.push(lambda * next);
    }
    moments
}

/// `E[phi(Poi(lambda))]`, exact as a polynomial in lambda.
pub fn expectation_poly(phi: &PolynomialObservable, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let moments = poisson_raw_moments(phi.degree(), lambda);
    Ok(phi
        .coeffs()
        .iter()
        .zip(moments.iter())
        .map(|(b, m)| b * m)
        .sum())
}

/// Variance of `phi(Poi(lambda))`, via the chaos weights `sum_q c_q^2 q! lambda^q`.
pub fn poisson_variance(phi: &PolynomialObservable, lambda: f64) -> Result<f64> {
    let coeffs = charlier_coefficients(phi, lambda)?;
    let mut var = 0.0;
    let mut weight = 1.0; // q! lambda^q
    for (i, &c) in coeffs.c.iter().enumerate() {
        weight *= (i as f64 + 1.0) * lambda;
        var += c * c * weight;
    }
    Ok(var)
}

/// Chaos coefficients by top-down monic elimination: subtract
/// `b_k C_k`, then read the next leading coefficient, and so on.
///
/// The constant left at the end equals `E[phi(Poi(lambda))]`; callers can
/// cross-check it against [`expectation_poly`].
pub fn charlier_coefficients(
    phi: &PolynomialObservable,
    lambda: f64,
) -> Result<CharlierCoefficients> {
    check_lambda(lambda)?;
    if phi.is_constant() {
        return Err(Error::ConstantObservable);
    }
    let k = phi.degree();
    let mut rem = phi.coeffs().to_vec();
    let mut c = vec![0.0; k];
    for q in (1..=k).rev() {
        let cq = rem[q];
        c[q - 1] = cq;
        if cq != 0.0 {
            let basis = charlier_monomial_coeffs(q as u32, lambda);
            for (j, &b) in basis.iter().enumerate() {
                rem[j] -= cq * b;
            }
        }
        rem.truncate(q);
    }
    let rank = charlier_rank_of(&c)?;
    Ok(CharlierCoefficients { lambda, c, rank })
}

/// Independent route to the same coefficients: the orthogonal projection
/// `c_q = E[phi(N) C_q(N; lambda)] / (q! lambda^q)` with the Poisson
/// expectation summed over the integer support until the weighted tail is
/// negligible.
pub fn charlier_coefficients_by_projection(
    phi: &PolynomialObservable,
    lambda: f64,
) -> Result<CharlierCoefficients> {
    check_lambda(lambda)?;
    if phi.is_constant() {
        return Err(Error::ConstantObservable);
    }
    let k = phi.degree();
    // support bound: the Poisson tail past lambda + 40 sqrt(lambda) + margin
    // stays below 1e-14 even against the polynomial growth of the integrand
    let x_max = (lambda + 40.0 * lambda.sqrt() + 20.0 * (k as f64 + 2.0) + 60.0) as u64;
    let mut c = vec![0.0; k];
    let mut pmf = (-lambda).exp();
    let mut sums = vec![0.0f64; k];
    for x in 0..=x_max {
        if x > 0 {
            pmf *= lambda / x as f64;
        }
        let phix = phi.eval(x as f64);
        for (qi, s) in sums.iter_mut().enumerate() {
            *s += pmf * phix * charlier_eval(qi as u32 + 1, x as f64, lambda);
        }
    }
    let mut norm = 1.0; // q! lambda^q
    for (qi, s) in sums.iter().enumerate() {
        norm *= (qi as f64 + 1.0) * lambda;
        c[qi] = s / norm;
    }
    let rank = charlier_rank_of(&c)?;
    Ok(CharlierCoefficients { lambda, c, rank })
}

/// Smallest chaos order with a nonzero coefficient. Zero testing is relative
/// to the largest coefficient magnitude (threshold 1e-12).
pub fn charlier_rank(phi: &PolynomialObservable, lambda: f64) -> Result<u32> {
    Ok(charlier_coefficients(phi, lambda)?.rank)
}

fn charlier_rank_of(c: &[f64]) -> Result<u32> {
    let max = c.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if max == 0.0 {
        return Err(Error::RankUndefined);
    }
    for (i, &x) in c.iter().enumerate() {
        if x.abs() > 1e-12 * max {
            return Ok(i as u32 + 1);
        }
    }
    Err(Error::RankUndefined)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_zero_is_one() {
        for &x in &[0.0, 3.0, 17.5] {
            for &lambda in &[0.5, 1.0, 2.7] {
                assert_eq!(charlier_eval(0, x, lambda), 1.0);
            }
        }
    }

    #[test]
    fn order_one_is_centered_identity() {
        assert_eq!(charlier_eval(1, 5.0, 2.0), 3.0);
    }

    #[test]
    fn order_two_matches_closed_form() {
        // C_2(x; lambda) = x^2 - (2 lambda + 1) x + lambda^2
        for &lambda in &[0.5, 1.0, 2.7] {
            for x in 0..=10 {
                let xf = x as f64;
                let closed = xf * xf - (2.0 * lambda + 1.0) * xf + lambda * lambda;
                assert!((charlier_eval(2, xf, lambda) - closed).abs() <= 1e-10);
            }
        }
        assert_eq!(charlier_eval(2, 3.0, 1.0), 1.0);
    }

    #[test]
    fn factorial_measure_route_examples() {
        assert_eq!(ito_indicator_value(1, 3, 1.0), 2.0);
        assert_eq!(ito_indicator_value(2, 3, 1.0), 1.0);
        assert_eq!(ito_indicator_value(0, 9, 3.3), 1.0);
    }

    #[test]
    fn factorial_measure_route_equals_recurrence() {
        for q in 0..=8u32 {
            for count in 0..=50u64 {
                for &lambda in &[0.5, 1.0, 2.7] {
                    let a = ito_indicator_value(q, count, lambda);
                    let b = charlier_eval(q, count as f64, lambda);
                    let scale = a.abs().max(b.abs()).max(1.0);
                    assert!(
                        (a - b).abs() <= 1e-6 * scale,
                        "q={q} count={count} lambda={lambda}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn poisson_moment_examples() {
        let one = PolynomialObservable::new(vec![1.0]).unwrap();
        assert_eq!(expectation_poly(&one, 3.0).unwrap(), 1.0);
        let x = PolynomialObservable::identity();
        assert!((expectation_poly(&x, 2.5).unwrap() - 2.5).abs() <= 1e-12);
        let x2 = PolynomialObservable::monomial(2).unwrap();
        assert!((expectation_poly(&x2, 1.0).unwrap() - 2.0).abs() <= 1e-12);
    }

    /// Truncated-support oracle for Poisson expectations of polynomials.
    fn expectation_by_summation(phi: &PolynomialObservable, lambda: f64) -> f64 {
        let mut pmf = (-lambda).exp();
        let mut acc = pmf * phi.eval(0.0);
        for x in 1..(lambda as u64 + 40 * (lambda.sqrt() as u64 + 1) + 200) {
            pmf *= lambda / x as f64;
            acc += pmf * phi.eval(x as f64);
        }
        acc
    }

    #[test]
    fn moments_match_direct_summation() {
        for deg in 0..=6 {
            let phi = PolynomialObservable::monomial(deg).unwrap();
            for &lambda in &[0.5, 1.0, 2.7] {
                let rec = expectation_poly(&phi, lambda).unwrap();
                let sum = expectation_by_summation(&phi, lambda);
                assert!(
                    (rec - sum).abs() <= 1e-9 * rec.abs().max(1.0),
                    "deg={deg} lambda={lambda}: {rec} vs {sum}"
                );
            }
        }
    }

    #[test]
    fn coefficients_of_identity() {
        let c = charlier_coefficients(&PolynomialObservable::identity(), 1.3).unwrap();
        assert_eq!(c.c, vec![1.0]);
        assert_eq!(c.rank, 1);
    }

    #[test]
    fn coefficients_of_square() {
        for &lambda in &[0.5, 1.0, 2.7] {
            let phi = PolynomialObservable::monomial(2).unwrap();
            let c = charlier_coefficients(&phi, lambda).unwrap();
            assert!((c.coefficient(1) - (2.0 * lambda + 1.0)).abs() <= 1e-12);
            assert!((c.coefficient(2) - 1.0).abs() <= 1e-12);
            assert_eq!(c.rank, 1);
        }
    }

    #[test]
    fn coefficients_of_basis_element() {
        let lambda = 1.7;
        let phi = PolynomialObservable::charlier_basis(3, lambda).unwrap();
        let c = charlier_coefficients(&phi, lambda).unwrap();
        assert!(c.coefficient(1).abs() <= 1e-12);
        assert!(c.coefficient(2).abs() <= 1e-12);
        assert!((c.coefficient(3) - 1.0).abs() <= 1e-12);
        assert_eq!(c.rank, 3);
    }

    #[test]
    fn leading_coefficient_passes_through() {
        let phi = PolynomialObservable::new(vec![0.3, -2.0, 0.0, 4.5]).unwrap();
        let c = charlier_coefficients(&phi, 0.8).unwrap();
        assert_eq!(c.coefficient(3), 4.5);
    }

    #[test]
    fn reconstruction_is_exact_on_the_degree_grid() {
        let lambda = 2.7;
        let phi = PolynomialObservable::new(vec![1.0, -0.5, 3.0, 0.25, -1.5]).unwrap();
        let coeffs = charlier_coefficients(&phi, lambda).unwrap();
        let mean = expectation_poly(&phi, lambda).unwrap();
        for x in 0..=phi.degree() as u64 {
            let xf = x as f64;
            let rebuilt: f64 = mean
                + coeffs
                    .c
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| c * charlier_eval(i as u32 + 1, xf, lambda))
                    .sum::<f64>();
            let want = phi.eval(xf);
            assert!(
                (rebuilt - want).abs() <= 1e-9 * want.abs().max(1.0),
                "x={x}: {rebuilt} vs {want}"
            );
        }
    }

    #[test]
    fn elimination_remainder_equals_poisson_mean() {
        // eliminating all chaos orders must leave exactly E[phi(Poi(lambda))]
        let lambda = 0.9;
        let phi = PolynomialObservable::new(vec![0.5, 2.0, -1.0, 0.3]).unwrap();
        let coeffs = charlier_coefficients(&phi, lambda).unwrap();
        let mean = expectation_poly(&phi, lambda).unwrap();
        let rebuilt_at_zero: f64 = coeffs
            .c
            .iter()
            .enumerate()
            .map(|(i, &c)| c * charlier_eval(i as u32 + 1, 0.0, lambda))
            .sum();
        assert!((phi.eval(0.0) - rebuilt_at_zero - mean).abs() <= 1e-12);
    }

    #[test]
    fn projection_route_agrees_with_elimination() {
        for &lambda in &[0.5, 1.0, 2.7] {
            let phi = PolynomialObservable::new(vec![0.2, 1.0, -2.0, 0.7]).unwrap();
            let a = charlier_coefficients(&phi, lambda).unwrap();
            let b = charlier_coefficients_by_projection(&phi, lambda).unwrap();
            for q in 1..=3 {
                let (x, y) = (a.coefficient(q), b.coefficient(q));
                assert!(
                    (x - y).abs() <= 1e-9 * x.abs().max(1.0),
                    "q={q} lambda={lambda}: {x} vs {y}"
                );
            }
        }
    }

    #[test]
    fn rank_examples() {
        let lambda = 1.0;
        assert_eq!(
            charlier_rank(&PolynomialObservable::identity(), lambda).unwrap(),
            1
        );
        assert_eq!(
            charlier_rank(
                &PolynomialObservable::charlier_basis(2, lambda).unwrap(),
                lambda
            )
            .unwrap(),
            2
        );
        assert_eq!(
            charlier_rank(&PolynomialObservable::monomial(2).unwrap(), lambda).unwrap(),
            1
        );
    }

    #[test]
    fn constant_observable_is_rejected() {
        let c = PolynomialObservable::new(vec![4.0]).unwrap();
        assert!(matches!(
            charlier_coefficients(&c, 1.0),
            Err(Error::ConstantObservable)
        ));
        // trailing zeros trim down to a constant
        let c2 = PolynomialObservable::new(vec![4.0, 0.0, 0.0]).unwrap();
        assert!(c2.is_constant());
    }

    #[test]
    fn degree_cap_enforced() {
        let mut coeffs = vec![0.0; MAX_DEGREE + 2];
        *coeffs.last_mut().unwrap() = 1.0;
        assert!(matches!(
            PolynomialObservable::new(coeffs),
            Err(Error::DegreeTooLarge { .. })
        ));
    }
}
