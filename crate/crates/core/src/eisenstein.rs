//! Real-analytic Eisenstein series of weight 0.
//!
//! `E(z,s) = Σ'_{m,n} y^s / |mz+n|^{2s}` over all nonzero lattice vectors and
//! its completion `E*(z,s) = π^{-s} Γ(s) E(z,s)`. The lattice sum is only used
//! for `s > 1`; `epstein_completed` uses the Fourier–Bessel expansion and is
//! valid for every real `s ∉ {0, 1}`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::arith::{divisors, moebius};
use crate::error::{Error, Result};
use crate::modular::log_abs_eta;
use crate::specialfn::{bessel_k_fast, gamma_unchecked, hurwitz_zeta, xi, zeta_depleted, EvalResult, EULER_GAMMA};

/// A point x + iy of the upper half-plane.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct UHPoint {
    pub x: f64,
    pub y: f64,
}

impl UHPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() {
            return Err(Error::Domain(format!("not in the upper half-plane: {x} + {y}i")));
        }
        Ok(UHPoint { x, y })
    }

    pub fn z(&self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn from_complex(z: Complex64) -> Self {
        debug_assert!(z.im > 0.0);
        UHPoint { x: z.re, y: z.im }
    }

    /// Image under the integer matrix [[a, b], [c, d]] of positive determinant.
    pub fn act(&self, m: [i64; 4]) -> Self {
        let [a, b, c, d] = m.map(|v| v as f64);
        let z = self.z();
        let w = (a * z + b) / (c * z + d);
        // Im(γz) = det·y/|cz+d|² computed without cancellation
        let det = a * d - b * c;
        let den = (c * z + d).norm_sqr();
        UHPoint {
            x: w.re,
            y: det * self.y / den,
        }
    }
}

/// Moves z into the standard fundamental domain F of SL2(ℤ); returns the
/// reduced point and γ with γz equal to it.
pub fn reduce_to_fundamental(z: UHPoint) -> (UHPoint, [i64; 4]) {
    let mut g: [i64; 4] = [1, 0, 0, 1];
    let mut w = z;
    for _ in 0..10_000 {
        let shift = (w.x + 0.5).floor();
        if shift != 0.0 {
            let k = shift as i64;
            w.x -= shift;
            g = [g[0] - k * g[2], g[1] - k * g[3], g[2], g[3]];
        }
        let r2 = w.x * w.x + w.y * w.y;
        if r2 < 1.0 - 1e-15 {
            w = UHPoint {
                x: -w.x / r2,
                y: w.y / r2,
            };
            g = [-g[2], -g[3], g[0], g[1]];
        } else {
            break;
        }
    }
    (w, g)
}

/// Σ_{n∈ℤ} ((n + a)² + t²)^{-s} for s > 1/2, t > 0, without Bessel functions:
/// direct terms for |n + a| < K and binomial series in (t/u)² with Hurwitz
/// zeta tails beyond.
fn shifted_line_sum(a: f64, t: f64, s: f64) -> f64 {
    let k = (2.0 * t).max(4.0).ceil() + 1.0;
    let a = a - a.floor(); // a ∈ [0, 1)
    let mut direct = 0.0;
    // u = n + a with |u| < k
    let n_lo = (-k - a).floor() as i64;
    let n_hi = (k - a).ceil() as i64;
    for n in n_lo..=n_hi {
        let u = n as f64 + a;
        if u.abs() < k {
            direct += (u * u + t * t).powf(-s);
        }
    }
    // tails: u ≥ k on the right and u ≤ −k on the left, by nearest |u|
    let q_r = (k - a).ceil() + a;
    let q_l = (k + a).ceil() - a;
    let t2 = t * t;
    let mut tail = 0.0;
    let mut binom = 1.0; // binom(-s, j)
    let mut t2j = 1.0;
    for j in 0..80 {
        let e = 2.0 * s + 2.0 * j as f64;
        let term = binom * t2j * (hurwitz_zeta(e, q_r) + hurwitz_zeta(e, q_l));
        tail += term;
        if term.abs() < 1e-18 * tail.abs() {
            break;
        }
        binom *= (-s - j as f64) / (j as f64 + 1.0);
        t2j *= t2;
    }
    direct + tail
}

/// Lattice-sum evaluation of E(z,s) for s > 1 with absolute tolerance `tol`.
///
/// Rows |m| ≤ M are summed exactly (in n); the rows |m| > M are replaced by
/// their Poisson main term, whose neglected part is O(e^{-2π(M+1)y}).
pub fn epstein_lattice(z: UHPoint, s: f64, tol: f64) -> Result<EvalResult<f64>> {
    if s <= 1.0 {
        return Err(Error::Domain(format!("epstein_lattice: s = {s} must exceed 1")));
    }
    if s > 30.0 {
        return Err(Error::Domain(format!("epstein_lattice: s = {s} too large")));
    }
    let y = z.y;
    let tol = tol.max(1e-16);
    let rows = (((1.0 / tol).ln() + 10.0) / (2.0 * PI * y)).ceil().max(1.0) as i64;
    let zeta2s = hurwitz_zeta(2.0 * s, 1.0);
    let mut total = 2.0 * zeta2s * y.powf(s);
    for m in 1..=rows {
        let mf = m as f64;
        total += 2.0 * y.powf(s) * shifted_line_sum(mf * z.x, mf * y, s);
    }
    let poisson = PI.sqrt() * gamma_unchecked(s - 0.5) / gamma_unchecked(s);
    let tail = 2.0 * y.powf(1.0 - s) * poisson * hurwitz_zeta(2.0 * s - 1.0, rows as f64 + 1.0);
    total += tail;
    let bound = tol + 1e-14 * total.abs();
    Ok(EvalResult::new(total, bound))
}

/// σ_a(n) = Σ_{d|n} d^a.
fn sigma_real(n: u64, a: f64) -> f64 {
    divisors(n).iter().map(|&d| (d as f64).powf(a)).sum()
}

fn completed_fourier(z: UHPoint, s: f64) -> Result<EvalResult<f64>> {
    let (w, _) = reduce_to_fundamental(z);
    let (x, y) = (w.x, w.y);
    let a = xi(2.0 * s)?;
    let b = xi(2.0 * s - 1.0)?;
    let c0 = 2.0 * a.value * y.powf(s);
    let c1 = 2.0 * b.value * y.powf(1.0 - s);
    let scale = c0.abs() + c1.abs() + 1.0;
    let nu = s - 0.5;
    let mut series = 0.0;
    for n in 1..400u64 {
        let nf = n as f64;
        let arg = 2.0 * PI * nf * y;
        let mag = 8.0 * y.sqrt() * nf.powf(nu) * sigma_real(n, 1.0 - 2.0 * s) * bessel_k_fast(nu, arg);
        series += mag * (2.0 * PI * nf * x).cos();
        if mag.abs() < 1e-18 * scale && arg > nu.abs() + 2.0 {
            break;
        }
    }
    let value = c0 + c1 + series;
    let err = 2.0 * a.abs_error_bound * y.powf(s)
        + 2.0 * b.abs_error_bound * y.powf(1.0 - s)
        + 1e-14 * scale;
    Ok(EvalResult::new(value, err))
}

/// E*(z,s) by the Fourier–Bessel expansion, after reducing z to F.
pub fn epstein_completed(z: UHPoint, s: f64) -> Result<EvalResult<f64>> {
    if s.abs() > 10.0 {
        return Err(Error::Domain(format!("epstein_completed: |s| = {} > 10", s.abs())));
    }
    for pole in [0.0, 1.0] {
        if (s - pole).abs() < 1e-12 {
            return Err(Error::Pole {
                arg: s,
                distance: (s - pole).abs(),
            });
        }
    }
    let h = s - 0.5;
    if h.abs() < 1e-4 {
        // the two constant terms have cancelling poles at s = 1/2; use the
        // evenness of E* in s − 1/2 and extrapolate in h²
        let e1 = completed_fourier(z, 0.5 + 2e-3)?;
        let e2 = completed_fourier(z, 0.5 + 1e-3)?;
        let at_half = (4.0 * e2.value - e1.value) / 3.0;
        let slope = (e1.value - e2.value) / (3e-6);
        let v = at_half + slope * h * h;
        return Ok(EvalResult::new(v, 1e-11 * (1.0 + v.abs()) + e1.abs_error_bound));
    }
    completed_fourier(z, s)
}

/// E(z,s) with the Gamma factor peeled off; valid wherever E* is.
pub fn epstein(z: UHPoint, s: f64) -> Result<EvalResult<f64>> {
    let e = epstein_completed(z, s)?;
    let g = gamma_unchecked(s);
    if !g.is_finite() || g == 0.0 {
        return Err(Error::Pole { arg: s, distance: (s - s.round()).abs() });
    }
    let f = PI.powf(s) / g;
    Ok(EvalResult::new(e.value * f, e.abs_error_bound * f.abs()))
}

/// (s−1)E*(z,s) averaged over s = 1 ± h. By E*(s) = E*(1−s) this equals
/// ½[hE*(1+h) − hE*(h)], which is even in h with limit the residue.
fn residue_ladder(z: UHPoint) -> Result<[f64; 3]> {
    let hs = [0.01, 0.005, 0.0025];
    let mut f = [0.0; 3];
    for (i, &h) in hs.iter().enumerate() {
        let up = h * epstein_completed(z, 1.0 + h)?.value;
        let down = -h * epstein_completed(z, 1.0 - h)?.value;
        f[i] = 0.5 * (up + down);
    }
    Ok(f)
}

/// Residue of E* at s = 1 from the ladder h = 0.01, 0.005, 0.0025 on both
/// sides of the pole, Richardson-extrapolated in h².
pub fn epstein_residue(z: UHPoint) -> Result<EvalResult<f64>> {
    let (o2, o3) = epstein_residue_orders(z)?;
    Ok(EvalResult::new(o3, (o3 - o2).abs() + 1e-12))
}

/// Richardson orders 2 and 3 of the residue ladder (diagnostic).
pub fn epstein_residue_orders(z: UHPoint) -> Result<(f64, f64)> {
    let f = residue_ladder(z)?;
    let r1 = [(4.0 * f[1] - f[0]) / 3.0, (4.0 * f[2] - f[1]) / 3.0];
    Ok((r1[1], (16.0 * r1[1] - r1[0]) / 15.0))
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct KroneckerCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub diff: f64,
}

/// Constant term of E(z,s) at s = 1 against −π log y + 2π(γ − log 2) − 4π log|η(z)|.
pub fn kronecker_limit_check(z: UHPoint) -> Result<KroneckerCheck> {
    let lhs = kronecker_constant(z)?;
    let rhs = -PI * z.y.ln() + 2.0 * PI * (EULER_GAMMA - 2f64.ln()) - 4.0 * PI * log_abs_eta(z);
    Ok(KroneckerCheck {
        lhs,
        rhs,
        diff: (lhs - rhs).abs(),
    })
}

/// lim_{s→1} [E(z,s) − π/(s−1)] from symmetric differences around s = 1,
/// extrapolated in h².
pub fn kronecker_constant(z: UHPoint) -> Result<f64> {
    let sym = |h: f64| -> Result<f64> {
        let up = epstein(z, 1.0 + h)?.value - PI / h;
        let down = epstein(z, 1.0 - h)?.value + PI / h;
        Ok(0.5 * (up + down))
    };
    let hs = [0.02, 0.01, 0.005];
    let g = [sym(hs[0])?, sym(hs[1])?, sym(hs[2])?];
    let r1 = [(4.0 * g[1] - g[0]) / 3.0, (4.0 * g[2] - g[1]) / 3.0];
    Ok((16.0 * r1[1] - r1[0]) / 15.0)
}

/// The exponent convention for the d-weights in the level-N combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum DivisorWeight {
    /// N^{-s} Σ μ(d) d^{-s} E(Nz/d, s)
    NdS,
    /// Σ μ(d) d^{-2s} E(Nz/d, s)
    D2S,
    /// Σ μ(d) d^{-s} E(Nz/d, s)
    DS,
}

impl DivisorWeight {
    pub fn weight(self, n: u64, d: u64, s: f64) -> f64 {
        match self {
            DivisorWeight::NdS => (n as f64 * d as f64).powf(-s),
            DivisorWeight::D2S => (d as f64).powf(-2.0 * s),
            DivisorWeight::DS => (d as f64).powf(-s),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DivisorWeight::NdS => "(Nd)^-s",
            DivisorWeight::D2S => "d^-2s",
            DivisorWeight::DS => "d^-s",
        }
    }
}

/// Σ_{d|N} μ(d)·w(d)·E(Nz/d, s) for the chosen weight convention.
pub fn moebius_combination(z: UHPoint, s: f64, n: u64, w: DivisorWeight) -> Result<EvalResult<f64>> {
    let mut v = 0.0;
    let mut err = 0.0;
    for d in divisors(n) {
        let mu = moebius(d);
        if mu == 0 {
            continue;
        }
        let arg = UHPoint {
            x: n as f64 * z.x / d as f64,
            y: n as f64 * z.y / d as f64,
        };
        let e = epstein(arg, s)?;
        let wt = w.weight(n, d, s);
        v += mu as f64 * wt * e.value;
        err += wt * e.abs_error_bound;
    }
    Ok(EvalResult::new(v, err))
}

/// E^N(z,s) = Σ_{Γ∞\Γ0(N)} Im(γz)^s, assembled as
/// N^{-s} Σ_{d|N} μ(d) d^{-s} E(Nz/d, s) / (2 ζ_N(2s)).
pub fn level_eisenstein(z: UHPoint, s: f64, n: u64) -> Result<EvalResult<f64>> {
    if n == 0 {
        return Err(Error::Domain("level must be positive".into()));
    }
    let comb = moebius_combination(z, s, n, DivisorWeight::NdS)?;
    let zn = zeta_depleted(2.0 * s, n)?;
    let v = comb.value / (2.0 * zn.value);
    Ok(EvalResult::new(
        v,
        comb.abs_error_bound / (2.0 * zn.value.abs()) + v.abs() * zn.abs_error_bound / zn.value.abs(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{gcd, prime_divisors};
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> UHPoint {
        UHPoint::new(x, y).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn reduction_lands_in_f() {
        for &(x, y) in &[(0.3, 0.01), (-7.2, 0.2), (0.49, 0.9), (3.0, 5.0)] {
            let z = pt(x, y);
            let (w, g) = reduce_to_fundamental(z);
            assert!(w.x.abs() <= 0.5 + 1e-12 && w.x * w.x + w.y * w.y >= 1.0 - 1e-12);
            assert_eq!(g[0] * g[3] - g[1] * g[2], 1);
            let image = z.act(g);
            assert!((image.x - w.x).abs() < 1e-9 && (image.y - w.y).abs() < 1e-9);
        }
    }

    #[test]
    fn lattice_at_i_closed_form() {
        // Σ' |m i + n|^{-2s} = 4 ζ(s) β(s); β(2) = Catalan's constant
        let catalan = 0.915_965_594_177_219_0;
        let v = epstein_lattice(pt(0.0, 1.0), 2.0, 1e-14).unwrap().value;
        assert!(rel(v, 4.0 * PI * PI / 6.0 * catalan) < 1e-12, "{v}");
    }

    #[test]
    fn lattice_invariances() {
        let z = pt(0.13, 0.8);
        let a = epstein_lattice(z, 1.7, 1e-14).unwrap().value;
        let b = epstein_lattice(pt(z.x + 1.0, z.y), 1.7, 1e-14).unwrap().value;
        assert!(rel(a, b) < 1e-12);
        let w = pt(0.0, 1.0);
        let v = epstein_lattice(w, 1.5, 1e-14).unwrap().value;
        let inv = UHPoint::from_complex(-1.0 / pt(0.2, 1.1).z());
        let x1 = epstein_lattice(pt(0.2, 1.1), 1.5, 1e-14).unwrap().value;
        let x2 = epstein_lattice(inv, 1.5, 1e-14).unwrap().value;
        assert!(rel(x1, x2) < 1e-10);
        assert!(v > 0.0);
        assert!(epstein_lattice(w, 1.0, 1e-10).is_err());
    }

    #[test]
    fn lattice_matches_fourier_on_grid() {
        let zs = [(0.0, 1.0), (0.3, 1.7), (-0.45, 0.95), (0.1, 3.0), (0.21, 0.6)];
        let ss = [1.2, 1.6, 2.3, 3.0];
        for &(x, y) in &zs {
            for &s in &ss {
                let z = pt(x, y);
                let lat = epstein_lattice(z, s, 1e-14).unwrap().value;
                let four = epstein(z, s).unwrap().value;
                assert!(rel(lat, four) < 1e-9, "z = {x}+{y}i s = {s}: {lat} vs {four}");
            }
        }
    }

    #[test]
    fn completed_functional_equation() {
        for &(x, y) in &[(0.0, 1.0), (0.3, 1.7), (-0.2, 0.7), (0.45, 2.5), (0.05, 0.2)] {
            for &s in &[-0.5, 0.25, 0.4, 0.3] {
                let z = pt(x, y);
                let a = epstein_completed(z, s).unwrap().value;
                let b = epstein_completed(z, 1.0 - s).unwrap().value;
                assert!((a - b).abs() < 1e-9, "{x} {y} {s}: {a} {b}");
            }
        }
        let z = pt(0.3, 1.7);
        let a = epstein_completed(z, -0.5).unwrap().value;
        let b = epstein_completed(pt(1.3, 1.7), -0.5).unwrap().value;
        assert!((a - b).abs() < 1e-10);
        assert!(epstein_completed(z, 1.0).is_err());
        assert!(epstein_completed(z, 0.0).is_err());
        // near the cancelling point s = 1/2
        let c = epstein_completed(z, 0.5).unwrap().value;
        let d = epstein_completed(z, 0.5 + 1e-4).unwrap().value;
        assert!((c - d).abs() < 1e-6);
    }

    #[test]
    fn residue_is_one() {
        let r1 = epstein_residue(pt(0.0, 1.0)).unwrap().value;
        let r2 = epstein_residue(pt(0.5, 3.0)).unwrap().value;
        let r3 = epstein_residue(pt(-0.17, 1.3)).unwrap().value;
        for r in [r1, r2, r3] {
            assert!((r - 1.0).abs() < 1e-6, "{r}");
        }
        assert!((r1 - r2).abs() < 1e-8);
        let (o2, o3) = epstein_residue_orders(pt(0.2, 1.1)).unwrap();
        assert!((o2 - o3).abs() < 1e-6);
    }

    #[test]
    fn kronecker_formula() {
        for &(x, y) in &[(0.0, 1.0), (0.0, 2.0), (0.3, 1.4)] {
            let k = kronecker_limit_check(pt(x, y)).unwrap();
            assert!(k.diff < 1e-6, "{x}+{y}i: {k:?}");
        }
        let a = kronecker_constant(pt(0.3, 1.4)).unwrap();
        let b = kronecker_constant(pt(1.3, 1.4)).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    /// y^s + Σ_{m>0} Σ_{(mN,n)=1} y^s/|mNz+n|^{2s}: disk sum with a density tail.
    fn level_direct(z: UHPoint, s: f64, n: u64, radius: f64) -> f64 {
        let rho = 6.0 / (PI * PI)
            * prime_divisors(n)
                .iter()
                .map(|&p| p as f64 / (p as f64 + 1.0))
                .product::<f64>();
        let nf = n as f64;
        let mut sum = 0.0;
        let m_max = (radius / (nf * z.y)).floor() as i64;
        let mut terms = Vec::new();
        for m in 1..=m_max {
            let c = m as f64 * nf;
            let re0 = c * z.x;
            let im = c * z.y;
            let span = (radius * radius - im * im).max(0.0).sqrt();
            let lo = (-re0 - span).ceil() as i64;
            let hi = (-re0 + span).floor() as i64;
            for k in lo..=hi {
                if gcd(m * n as i64, k) != 1 {
                    continue;
                }
                let re = re0 + k as f64;
                let r2 = re * re + im * im;
                if r2 <= radius * radius {
                    terms.push(z.y.powf(s) * r2.powf(-s));
                }
            }
        }
        terms.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for t in terms {
            sum += t;
        }
        let tail = 0.5 * rho / (nf * z.y) * 2.0 * PI * z.y.powf(s) * radius.powf(2.0 - 2.0 * s)
            / (2.0 * s - 2.0);
        z.y.powf(s) + sum + tail
    }

    #[test]
    fn level_eisenstein_direct_oracle() {
        let z = pt(0.0, 1.0);
        let v = level_eisenstein(z, 2.0, 11).unwrap().value;
        let d = level_direct(z, 2.0, 11, 1500.0);
        assert!(rel(v, d) < 1e-8, "{v} vs {d}");
        let z = pt(0.31, 0.4);
        let v = level_eisenstein(z, 2.5, 14).unwrap().value;
        let d = level_direct(z, 2.5, 14, 800.0);
        assert!(rel(v, d) < 1e-8, "{v} vs {d}");
    }

    #[test]
    fn level_one_is_normalized_epstein() {
        let z = pt(0.2, 1.3);
        let e = epstein(z, 2.2).unwrap().value;
        let l = level_eisenstein(z, 2.2, 1).unwrap().value;
        assert!(rel(l, e / (2.0 * hurwitz_zeta(4.4, 1.0))) < 1e-13);
    }

    #[test]
    fn level_eisenstein_gamma0_invariance() {
        let z = pt(0.17, 0.83);
        let w = z.act([1, 0, 11, 1]);
        let a = level_eisenstein(z, 2.0, 11).unwrap().value;
        let b = level_eisenstein(w, 2.0, 11).unwrap().value;
        assert!(rel(a, b) < 1e-8);
        let w = z.act([3, 1, 14, 5]);
        let a = level_eisenstein(z, 1.4, 14).unwrap().value;
        let b = level_eisenstein(w, 1.4, 14).unwrap().value;
        assert!(rel(a, b) < 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fourier_translation_and_inversion(x in -0.5f64..0.5, y in 0.3f64..3.0, s in -2.0f64..3.0) {
            prop_assume!((s - 1.0).abs() > 0.05 && s.abs() > 0.05);
            let z = pt(x, y);
            let a = epstein_completed(z, s).unwrap().value;
            let b = epstein_completed(pt(x + 2.0, y), s).unwrap().value;
            let c = epstein_completed(UHPoint::from_complex(-1.0 / z.z()), s).unwrap().value;
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
            prop_assert!((a - c).abs() < 1e-9 * (1.0 + a.abs()));
        }
    }
}
