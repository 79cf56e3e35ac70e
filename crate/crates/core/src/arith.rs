//! Exact integer utilities: Möbius, totient, divisors, cyclotomic polynomials
//! and continued-fraction recognition of rationals.

use std::fmt;

/// Largest index accepted by [`cyclotomic`].
pub const CYCLOTOMIC_MAX: u64 = 100_000;

pub fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

pub fn lcm(a: u64, b: u64) -> u64 {
    if a == 0 || b == 0 {
        return 0;
    }
    a / gcd(a as i64, b as i64) as u64 * b
}

/// Extended Euclid: returns `(g, x, y)` with `a*x + b*y = g = gcd(a, b) >= 0`.
pub fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Prime factorization by trial division, as `(prime, exponent)` pairs in
/// increasing prime order.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn prime_divisors(n: u64) -> Vec<u64> {
    factorize(n).into_iter().map(|(p, _)| p).collect()
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n).len() == 1 && factorize(n)[0].1 == 1
}

pub fn is_squarefree(n: u64) -> bool {
    n >= 1 && factorize(n).iter().all(|&(_, e)| e == 1)
}

/// All primes `<= n`, by sieve.
pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut composite = vec![false; n + 1];
    let mut out = Vec::new();
    for i in 2..=n {
        if !composite[i] {
            out.push(i as u64);
            let mut j = i * i;
            while j <= n {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Positive divisors in increasing order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut divs = vec![1u64];
    for (p, e) in factorize(n) {
        let len = divs.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                divs.push(divs[i] * pk);
            }
        }
    }
    divs.sort_unstable();
    divs
}

pub fn moebius(n: u64) -> i64 {
    assert!(n >= 1, "moebius requires n >= 1");
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn totient(n: u64) -> u64 {
    assert!(n >= 1, "totient requires n >= 1");
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

/// Index of Γ₀(N) in SL₂(ℤ): `N ∏_{p|N} (1 + 1/p)`.
pub fn gamma0_index(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p + 1))
}

/// Polynomial with exact integer coefficients, ascending degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntPolynomial {
    coefficients: Vec<i128>,
}

impl IntPolynomial {
    pub fn new(mut coefficients: Vec<i128>) -> Self {
        while coefficients.len() > 1 && *coefficients.last().unwrap() == 0 {
            coefficients.pop();
        }
        if coefficients.is_empty() {
            coefficients.push(0);
        }
        IntPolynomial { coefficients }
    }

    pub fn coefficients(&self) -> &[i128] {
        &self.coefficients
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients == [0]
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coefficients
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * x + c as f64)
    }

    pub fn eval_complex(&self, x: num_complex::Complex64) -> num_complex::Complex64 {
        self.coefficients
            .iter()
            .rev()
            .fold(num_complex::Complex64::new(0.0, 0.0), |acc, &c| {
                acc * x + c as f64
            })
    }

    pub fn mul(&self, other: &IntPolynomial) -> IntPolynomial {
        let mut out = vec![0i128; self.coefficients.len() + other.coefficients.len() - 1];
        for (i, &a) in self.coefficients.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coefficients.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPolynomial::new(out)
    }

    /// `P(X^k)`.
    pub fn compose_power(&self, k: usize) -> IntPolynomial {
        let mut out = vec![0i128; self.degree() * k + 1];
        for (i, &c) in self.coefficients.iter().enumerate() {
            out[i * k] = c;
        }
        IntPolynomial::new(out)
    }

    /// Exact division by a polynomial with leading coefficient ±1.
    /// Returns `None` when the division leaves a remainder.
    pub fn div_exact(&self, divisor: &IntPolynomial) -> Option<IntPolynomial> {
        let lead = *divisor.coefficients.last().unwrap();
        assert!(lead == 1 || lead == -1, "divisor must be monic up to sign");
        let dd = divisor.degree();
        if self.degree() < dd {
            return if self.is_zero() { Some(self.clone()) } else { None };
        }
        let mut rem = self.coefficients.clone();
        let mut quot = vec![0i128; self.degree() - dd + 1];
        for k in (0..quot.len()).rev() {
            let q = rem[k + dd] * lead;
            quot[k] = q;
            if q != 0 {
                for (j, &c) in divisor.coefficients.iter().enumerate() {
                    rem[k + j] -= q * c;
                }
            }
        }
        if rem.iter().any(|&c| c != 0) {
            None
        } else {
            Some(IntPolynomial::new(quot))
        }
    }
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.coefficients.iter().enumerate().rev() {
            if c == 0 && !(i == 0 && first) {
                continue;
            }
            let sign = if c < 0 { "-" } else if first { "" } else { "+" };
            let mag = c.abs();
            let body = match (i, mag) {
                (0, m) => format!("{m}"),
                (1, 1) => "X".to_string(),
                (1, m) => format!("{m}X"),
                (k, 1) => format!("X^{k}"),
                (k, m) => format!("{m}X^{k}"),
            };
            write!(f, "{sign}{body}")?;
            first = false;
        }
        Ok(())
    }
}

/// The n-th cyclotomic polynomial Φ_n, with exact coefficients.
///
/// Built from `Φ_{pm}(X) = Φ_m(X^p) / Φ_m(X)` for `p ∤ m` over the radical of
/// n, then `Φ_n(X) = Φ_{rad n}(X^{n / rad n})`. Every step is an exact
/// division of products of the `(1 - X^{n/d})` factors.
pub fn cyclotomic(n: u64) -> IntPolynomial {
    assert!(
        (1..=CYCLOTOMIC_MAX).contains(&n),
        "cyclotomic index must lie in 1..={CYCLOTOMIC_MAX}"
    );
    let primes = prime_divisors(n);
    let mut phi = IntPolynomial::new(vec![-1, 1]);
    let mut m = 1u64;
    for &p in &primes {
        let lifted = phi.compose_power(p as usize);
        phi = lifted
            .div_exact(&phi)
            .expect("cyclotomic recursion must divide exactly");
        m *= p;
    }
    phi.compose_power((n / m) as usize)
}

/// A rational approximation `numerator/denominator` of a real input.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct RationalGuess {
    pub numerator: i64,
    pub denominator: i64,
    pub residual: f64,
}

impl RationalGuess {
    pub fn value(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl fmt::Display for RationalGuess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

/// Outcome of [`recognize_rational`]. Rejection carries the best candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Recognition {
    Accepted(RationalGuess),
    Rejected(RationalGuess),
}

impl Recognition {
    pub fn accepted(&self) -> Option<RationalGuess> {
        match self {
            Recognition::Accepted(g) => Some(*g),
            Recognition::Rejected(_) => None,
        }
    }

    pub fn best(&self) -> RationalGuess {
        match self {
            Recognition::Accepted(g) | Recognition::Rejected(g) => *g,
        }
    }
}

/// Best continued-fraction convergent of `x` with denominator at most
/// `max_denominator`; rejected when its residual exceeds `tol`.
pub fn recognize_rational(x: f64, max_denominator: u64, tol: f64) -> Recognition {
    assert!(x.is_finite(), "recognize_rational requires a finite input");
    assert!(max_denominator >= 1);
    let max_den = max_denominator as i128;
    // Convergent recurrences h_k = a_k h_{k-1} + h_{k-2}, same for k.
    let (mut h_prev, mut h) = (0i128, 1i128);
    let (mut k_prev, mut k) = (1i128, 0i128);
    let mut r = x;
    let mut best: Option<RationalGuess> = None;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e17 {
            break;
        }
        let ai = a as i128;
        let h_next = ai * h + h_prev;
        let k_next = ai * k + k_prev;
        if k_next > max_den || h_next.abs() > i64::MAX as i128 {
            break;
        }
        (h_prev, h) = (h, h_next);
        (k_prev, k) = (k, k_next);
        let residual = (x - h as f64 / k as f64).abs();
        let cand = RationalGuess {
            numerator: h as i64,
            denominator: k as i64,
            residual,
        };
        if best.map_or(true, |b| residual < b.residual) {
            best = Some(cand);
        }
        let frac = r - a;
        if frac.abs() < 1e-15 || residual == 0.0 {
            break;
        }
        r = 1.0 / frac;
    }
    let best = best.expect("the zeroth convergent always has denominator 1");
    if best.residual <= tol {
        Recognition::Accepted(best)
    } else {
        Recognition::Rejected(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn moebius_values() {
        assert_eq!(moebius(1), 1);
        assert_eq!(moebius(6), 1);
        assert_eq!(moebius(12), 0);
        assert_eq!(moebius(30), -1);
    }

    #[test]
    fn totient_values() {
        assert_eq!(totient(1), 1);
        assert_eq!(totient(11), 10);
        assert_eq!(totient(154), 60);
    }

    #[test]
    fn gamma0_index_values() {
        assert_eq!(gamma0_index(1), 1);
        assert_eq!(gamma0_index(11), 12);
        assert_eq!(gamma0_index(154), 288);
    }

    #[test]
    fn moebius_sums_vanish() {
        for n in 2..=10_000u64 {
            let s: i64 = divisors(n).iter().map(|&d| moebius(d)).sum();
            assert_eq!(s, 0, "n = {n}");
        }
    }

    #[test]
    fn moebius_weighted_prime_exponents_cancel() {
        // ∏_{d|N} (N/d)^{μ(d)} = 1 for N with at least two prime factors:
        // every prime's total exponent vanishes.
        for n in 2..=3000u64 {
            if prime_divisors(n).len() < 2 {
                continue;
            }
            for p in prime_divisors(n) {
                let total: i64 = divisors(n)
                    .iter()
                    .map(|&d| {
                        let mut m = n / d;
                        let mut e = 0i64;
                        while m % p == 0 {
                            m /= p;
                            e += 1;
                        }
                        moebius(d) * e
                    })
                    .sum();
                assert_eq!(total, 0, "n = {n}, p = {p}");
            }
        }
    }

    #[test]
    fn cyclotomic_small() {
        assert_eq!(cyclotomic(1).coefficients(), &[-1, 1]);
        assert_eq!(cyclotomic(6).coefficients(), &[1, -1, 1]);
        assert_eq!(cyclotomic(12).coefficients(), &[1, 0, -1, 0, 1]);
        assert_eq!(cyclotomic(12).to_string(), "X^4-X^2+1");
    }

    #[test]
    fn cyclotomic_twelve_from_moebius_product() {
        // Independent route: ∏_{d|12} (1 - X^{12/d})^{μ(d)} by exact
        // multiplication and division of binomials.
        let n = 12u64;
        let binom = |m: u64| {
            let mut c = vec![0i128; m as usize + 1];
            c[0] = 1;
            c[m as usize] = -1;
            IntPolynomial::new(c)
        };
        let mut num = IntPolynomial::new(vec![1]);
        let mut den = IntPolynomial::new(vec![1]);
        for d in divisors(n) {
            match moebius(d) {
                1 => num = num.mul(&binom(n / d)),
                -1 => den = den.mul(&binom(n / d)),
                _ => {}
            }
        }
        assert_eq!(num.div_exact(&den).unwrap(), cyclotomic(12));
    }

    #[test]
    fn cyclotomic_invariants() {
        for n in 1..=200u64 {
            let phi = cyclotomic(n);
            assert_eq!(phi.degree() as u64, totient(n));
            let c0 = phi.coefficients()[0];
            assert!(c0 == 1 || c0 == -1, "Φ_{n}(0) = {c0}");
            // Φ_n(1) is p for prime powers n = p^k, else 1 (n > 1).
            let at_one: i128 = phi.coefficients().iter().sum();
            if n > 1 {
                let ps = prime_divisors(n);
                let expect = if ps.len() == 1 { ps[0] as i128 } else { 1 };
                assert_eq!(at_one, expect, "Φ_{n}(1)");
            }
            // ∏_{d|n} Φ_d = X^n - 1
            let prod = divisors(n)
                .iter()
                .fold(IntPolynomial::new(vec![1]), |acc, &d| acc.mul(&cyclotomic(d)));
            let mut target = vec![0i128; n as usize + 1];
            target[0] = -1;
            target[n as usize] = 1;
            assert_eq!(prod, IntPolynomial::new(target), "n = {n}");
        }
    }

    #[test]
    fn cyclotomic_large_index() {
        let phi = cyclotomic(30030);
        assert_eq!(phi.degree() as u64, totient(30030));
        assert_eq!(phi.coefficients()[0], 1);
    }

    #[test]
    fn recognize_examples() {
        let g = recognize_rational(0.5, 100, 1e-9).accepted().unwrap();
        assert_eq!((g.numerator, g.denominator), (1, 2));
        assert_eq!(g.residual, 0.0);
        let g = recognize_rational(0.3333333333, 100, 1e-8).accepted().unwrap();
        assert_eq!((g.numerator, g.denominator), (1, 3));
        match recognize_rational(3.14159265358979, 10, 1e-9) {
            Recognition::Rejected(best) => {
                assert_eq!((best.numerator, best.denominator), (22, 7));
                assert!((best.residual - 1.26e-3).abs() < 1e-5);
            }
            other => panic!("expected rejection, got {other:?}"),
        }
        let g = recognize_rational(-10.0 / 11.0, 576, 1e-9).accepted().unwrap();
        assert_eq!((g.numerator, g.denominator), (-10, 11));
    }

    #[test]
    fn ext_gcd_identity() {
        for (a, b) in [(240, 46), (-7, 3), (0, 5), (17, 0), (154, 15)] {
            let (g, x, y) = ext_gcd(a, b);
            assert_eq!(a * x + b * y, g);
            assert_eq!(g, gcd(a, b));
        }
    }

    proptest! {
        #[test]
        fn recognize_recovers_perturbed_rationals(
            q in 1i64..300, p in -1000i64..1000, frac in -0.99f64..0.99
        ) {
            let max_den = 300u64;
            let g = gcd(p, q);
            let (p, q) = (p / g, q / g);
            let eps = frac / (2.0 * q as f64 * max_den as f64);
            let r = recognize_rational(p as f64 / q as f64 + eps, max_den, 1.0);
            let best = r.best();
            prop_assert_eq!((best.numerator, best.denominator), (p, q));
        }

        #[test]
        fn recognized_fraction_is_reduced(x in -50.0f64..50.0) {
            let best = recognize_rational(x, 1000, 1.0).best();
            prop_assert!(best.denominator >= 1);
            prop_assert_eq!(gcd(best.numerator, best.denominator), 1);
            prop_assert!((best.residual - (x - best.value()).abs()).abs() < 1e-12);
        }
    }
}
