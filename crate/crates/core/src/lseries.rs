//! Rankin–Selberg L-series of two newforms: the direct Dirichlet series, its
//! completion Φ(s) through an approximate functional equation, bad Euler
//! factors, assembled motivic products and numerical pole orders.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::arith::{gamma0_index, gcd, is_squarefree, lcm, moebius, divisors, prime_divisors, recognize_rational, RationalGuess};
use crate::curves::{ApTable, CoefficientTable, CurveModel, ReductionKind, period_lattice};
use crate::domain::{petersson_integral, QuadratureGrid};
use crate::error::{Error, Result};
use crate::modular::CuspFormEval;
use crate::quad::{exp_sinh, GaussLegendre, KahanSum};
use crate::specialfn::{bessel_k_fast, gamma_unchecked, zeta, zeta_depleted, EvalResult};

/// Which evaluator produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pipeline {
    DirectSeries,
    Afe,
    EisensteinQuadrature,
    Regulator,
}

impl Pipeline {
    pub fn as_str(self) -> &'static str {
        match self {
            Pipeline::DirectSeries => "direct-series",
            Pipeline::Afe => "afe",
            Pipeline::EisensteinQuadrature => "eisenstein-quadrature",
            Pipeline::Regulator => "regulator",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct LValueResult {
    pub value: f64,
    pub error: f64,
    pub pipeline: Pipeline,
}

impl LValueResult {
    /// `pipeline,s,value,error`
    pub fn csv_row(&self, s: f64) -> String {
        format!("{},{},{:.17e},{:.3e}", self.pipeline.as_str(), s, self.value, self.error)
    }
}

/// Split parameters used to fit the polar term in the isogenous case.
const RESIDUE_FIT_S: f64 = 2.0;
const RESIDUE_FIT_SPLITS: [f64; 2] = [1.0, 2.0];
/// Range of s accepted by the AFE evaluator.
pub const AFE_RANGE: (f64, f64) = (-1.5, 3.5);
/// Split parameters accepted by the AFE evaluator.
pub const AFE_SPLIT_RANGE: (f64, f64) = (0.25, 4.0);

/// The pair (f, g) with C_k = Σ_{d²m=k, (d,N)=1} a_m b_m / m, so that
/// L_{f,g}(s) = ζ_N(2s)·Σ a_n b_n n^{-s-1} = Σ C_k k^{-s}.
#[derive(Debug)]
pub struct RankinSeries {
    pub af: CoefficientTable,
    pub bg: CoefficientTable,
    pub n1: u64,
    pub n2: u64,
    pub n: u64,
    pub m: u64,
    pub combined: Vec<f64>,
    /// Coefficients of A(s)·Σ C_k k^{-s} (equal to `combined` unless isogenous).
    pub combined_plus: Vec<f64>,
    pub isogenous: bool,
    /// c_p = a_p b_p at primes dividing M.
    pub c_bad: BTreeMap<u64, i64>,
    residue: OnceLock<Result<f64>>,
}

impl RankinSeries {
    pub fn new(af: &CoefficientTable, bg: &CoefficientTable) -> Result<Self> {
        let (n1, n2) = (af.level, bg.level);
        let n = lcm(n1, n2);
        let m = gcd(n1 as i64, n2 as i64) as u64;
        let k_max = af.nmax().min(bg.nmax());
        if k_max < 1 {
            return Err(Error::TableTooShort { required: 1, available: k_max });
        }
        let isogenous = n1 == n2 && af.coefficients[..=k_max] == bg.coefficients[..=k_max];
        let mut combined = vec![0.0; k_max + 1];
        for d in 1..=k_max {
            if d * d > k_max {
                break;
            }
            if gcd(d as i64, n as i64) != 1 {
                continue;
            }
            let step = d * d;
            let mut mm = 1;
            while mm * step <= k_max {
                combined[mm * step] += (af.get(mm) * bg.get(mm)) as f64 / mm as f64;
                mm += 1;
            }
        }
        let mut c_bad = BTreeMap::new();
        for p in prime_divisors(m) {
            if (p as usize) > k_max {
                return Err(Error::TableTooShort { required: p as usize, available: k_max });
            }
            c_bad.insert(p, af.get(p as usize) * bg.get(p as usize));
        }
        let combined_plus = if isogenous {
            // multiply by A(s) = ∏_{p|M} Σ_j c_p^j p^{-js}
            let mut cur = combined.clone();
            for (&p, &c) in &c_bad {
                let mut next = cur.clone();
                let p = p as usize;
                for k in 1..=k_max {
                    let mut pj = p;
                    let mut cj = c as f64;
                    while k * pj <= k_max {
                        next[k * pj] += cj * cur[k];
                        pj *= p;
                        cj *= c as f64;
                    }
                }
                cur = next;
            }
            cur
        } else {
            combined.clone()
        };
        Ok(RankinSeries {
            af: af.clone(),
            bg: bg.clone(),
            n1,
            n2,
            n,
            m,
            combined,
            combined_plus,
            isogenous,
            c_bad,
            residue: OnceLock::new(),
        })
    }

    pub fn k_max(&self) -> usize {
        self.combined.len() - 1
    }

    /// G(s) = (2π/√N)^{-2s} Γ(s) Γ(s+1).
    pub fn gamma_factor(&self, s: f64) -> f64 {
        (4.0 * PI * PI / self.n as f64).powf(-s) * gamma_unchecked(s) * gamma_unchecked(s + 1.0)
    }

    /// A(s) = ∏_{p|M} (1 − c_p p^{-s})^{-1} in the isogenous case, 1 otherwise.
    pub fn a_factor(&self, s: f64) -> f64 {
        if !self.isogenous {
            return 1.0;
        }
        self.c_bad
            .iter()
            .map(|(&p, &c)| 1.0 / (1.0 - c as f64 * (p as f64).powf(-s)))
            .product()
    }

    /// Residue R⁺ of Φ⁺ = A·Φ at s = 1 (isogenous case), fitted from the
    /// dependence of the smoothed sums on the split parameter.
    pub fn polar_residue(&self) -> Result<f64> {
        if !self.isogenous {
            return Ok(0.0);
        }
        self.residue
            .get_or_init(|| {
                let s = RESIDUE_FIT_S;
                let [x1, x2] = RESIDUE_FIT_SPLITS;
                let (s1, _) = afe_smoothed(self, &self.combined_plus, s, x1)?;
                let (s2, _) = afe_smoothed(self, &self.combined_plus, s, x2)?;
                Ok((s1 - s2) / (polar_term(s, x2) - polar_term(s, x1)))
            })
            .clone()
    }
}

/// Number of coefficients the AFE needs at level N over the supported s and
/// split ranges.
pub fn afe_terms_needed(level: u64) -> usize {
    let s_abs = AFE_RANGE.0.abs().max(AFE_RANGE.1.abs()).max((1.0 - AFE_RANGE.0).abs());
    let w = afe_cutoff(s_abs);
    let c2 = 4.0 * PI * PI / (level as f64 * AFE_SPLIT_RANGE.1);
    (w * w / c2).ceil() as usize + 1
}

/// Terms of the direct series needed for the tail bound to fall below tol.
pub fn direct_terms_needed(s: f64, tol: f64) -> Option<usize> {
    if s <= 1.25 {
        return None;
    }
    // 4 M^{1.25−s}/(s − 1.25) ≤ tol
    let m = (tol * (s - 1.25) / 4.0).ln() / (1.25 - s);
    Some(m.exp().ceil() as usize)
}

fn direct_tail_bound(s: f64, m: usize) -> f64 {
    if s <= 1.25 {
        return f64::INFINITY;
    }
    4.0 * (m as f64).powf(1.25 - s) / (s - 1.25)
}

/// L_{f,g}(s) = ζ_N(2s)·Σ_{n ≤ n_max} a_n b_n n^{-s-1} with a tail bound from
/// |a_n b_n| ≲ 4n^{5/4}.
pub fn l_direct(rs: &RankinSeries, s: f64) -> Result<LValueResult> {
    if s < 1.2 {
        return Err(Error::Domain(format!("l_direct: s = {s} < 1.2")));
    }
    let n_max = rs.af.nmax().min(rs.bg.nmax());
    let z = zeta_depleted(2.0 * s, rs.n)?;
    let chunks: Vec<f64> = (0..n_max.div_ceil(4096))
        .into_par_iter()
        .map(|c| {
            let mut k = KahanSum::new();
            let lo = c * 4096 + 1;
            let hi = ((c + 1) * 4096).min(n_max);
            for n in lo..=hi {
                let ab = rs.af.get(n) * rs.bg.get(n);
                if ab != 0 {
                    k.add(ab as f64 * (n as f64).powf(-s - 1.0));
                }
            }
            k.value()
        })
        .collect();
    let mut total = KahanSum::new();
    for c in chunks {
        total.add(c);
    }
    let sum = total.value();
    let tail = direct_tail_bound(s, n_max);
    if !tail.is_finite() {
        return Err(Error::TableTooShort {
            required: usize::MAX,
            available: n_max,
        });
    }
    Ok(LValueResult {
        value: z.value * sum,
        error: z.value.abs() * tail + z.abs_error_bound * sum.abs() + 1e-15 * (z.value * sum).abs(),
        pipeline: Pipeline::DirectSeries,
    })
}

/// As [`l_direct`], failing with the required length if the tail bound exceeds tol.
pub fn l_direct_to(rs: &RankinSeries, s: f64, tol: f64) -> Result<LValueResult> {
    let r = l_direct(rs, s)?;
    if r.error > tol {
        let available = rs.af.nmax().min(rs.bg.nmax());
        return Err(Error::TableTooShort {
            required: direct_terms_needed(s, tol).unwrap_or(usize::MAX),
            available,
        });
    }
    Ok(r)
}

/// G(s)·Σ_{k ≤ k_max} C_k k^{-s}: the repackaged series.
pub fn phi_series(rs: &RankinSeries, s: f64) -> Result<LValueResult> {
    if s < 1.2 {
        return Err(Error::Domain(format!("phi_series: s = {s} < 1.2")));
    }
    let mut k = KahanSum::new();
    for i in (1..=rs.k_max()).rev() {
        k.add(rs.combined[i] * (i as f64).powf(-s));
    }
    let g = rs.gamma_factor(s);
    Ok(LValueResult {
        value: g * k.value(),
        error: g.abs() * direct_tail_bound(s, rs.k_max()),
        pipeline: Pipeline::DirectSeries,
    })
}

/// Φ(s) from the direct series.
pub fn phi_direct(rs: &RankinSeries, s: f64) -> Result<LValueResult> {
    let l = l_direct(rs, s)?;
    let g = rs.gamma_factor(s);
    Ok(LValueResult {
        value: g * l.value,
        error: g.abs() * l.error,
        pipeline: Pipeline::DirectSeries,
    })
}

// ---------- approximate functional equation ----------

/// Smallest w ≥ 1 with e^{-2w} w^{2|s|+2} below 1e-18.
fn afe_cutoff(s_abs: f64) -> f64 {
    let target = (1e-18f64).ln();
    let mut w: f64 = 1.0;
    while -2.0 * w + (2.0 * s_abs + 2.0) * w.ln() + 4f64.ln() > target {
        w += 0.25;
    }
    w
}

fn gl_rules() -> &'static [GaussLegendre; 3] {
    static RULES: OnceLock<[GaussLegendre; 3]> = OnceLock::new();
    RULES.get_or_init(|| [GaussLegendre::new(4), GaussLegendre::new(8), GaussLegendre::new(16)])
}

/// ∫_a^b K₁(2w) w^{2s} dw by Gauss–Legendre, order chosen from the length.
fn k1_piece(a: f64, b: f64, s: f64) -> f64 {
    let rules = gl_rules();
    let len = b - a;
    let rule = if len < 0.05 {
        &rules[0]
    } else if len < 0.3 {
        &rules[1]
    } else {
        &rules[2]
    };
    if len <= 1.0 {
        return rule.integrate(a, b, |w| bessel_k_fast(1.0, 2.0 * w) * w.powf(2.0 * s));
    }
    let pieces = len.ceil() as usize;
    let step = len / pieces as f64;
    (0..pieces)
        .map(|i| {
            let lo = a + i as f64 * step;
            rules[2].integrate(lo, lo + step, |w| bessel_k_fast(1.0, 2.0 * w) * w.powf(2.0 * s))
        })
        .sum()
}

/// Σ_k C_k (N/(4π²k))^s · 4∫_{√a_k}^∞ K₁(2w) w^{2s} dw with a_k = 4π²kX/N,
/// i.e. Σ_k C_k ∫_X^∞ φ(4π²ku/N) u^s du/u for φ(t) = 2√t K₁(2√t).
/// Returns (value, Σ|terms|).
fn afe_side(level: u64, coeffs: &[f64], s: f64, x: f64) -> Result<(f64, f64)> {
    let c = 2.0 * PI * (x / level as f64).sqrt();
    let w_stop = afe_cutoff(s.abs());
    let k_max = ((w_stop / c).powi(2)).ceil() as usize;
    if k_max + 1 > coeffs.len() {
        return Err(Error::TableTooShort {
            required: k_max,
            available: coeffs.len() - 1,
        });
    }
    let w_of = |k: usize| c * (k as f64).sqrt();
    let (tail, _) = exp_sinh(w_of(k_max + 1), |w| bessel_k_fast(1.0, 2.0 * w) * w.powf(2.0 * s), 1e-12);
    // cumulative integrals from the top down, in fixed chunks for parallelism
    let chunk = 512usize;
    let n_chunks = k_max.div_ceil(chunk);
    let pieces: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let lo = ci * chunk + 1;
            let hi = ((ci + 1) * chunk).min(k_max);
            (lo..=hi).map(|k| k1_piece(w_of(k), w_of(k + 1), s)).collect()
        })
        .collect();
    let piece: Vec<f64> = pieces.into_iter().flatten().collect();
    let pref = level as f64 / (4.0 * PI * PI);
    let mut acc = tail;
    let mut total = KahanSum::new();
    let mut mass = 0.0;
    for k in (1..=k_max).rev() {
        acc += piece[k - 1];
        let ck = coeffs[k];
        if ck == 0.0 {
            continue;
        }
        let term = ck * (pref / k as f64).powf(s) * 4.0 * acc;
        total.add(term);
        mass += term.abs();
    }
    Ok((total.value(), mass))
}

fn afe_smoothed(rs: &RankinSeries, coeffs: &[f64], s: f64, x: f64) -> Result<(f64, f64)> {
    let (a, ma) = afe_side(rs.n, coeffs, s, x)?;
    let (b, mb) = afe_side(rs.n, coeffs, 1.0 - s, 1.0 / x)?;
    Ok((a + b, ma + mb))
}

/// X^{s−1}/(s−1) − X^s/s: the polar contribution per unit residue.
fn polar_term(s: f64, x: f64) -> f64 {
    x.powf(s - 1.0) / (s - 1.0) - x.powf(s) / s
}

fn afe_preconditions(rs: &RankinSeries, s: f64, x: f64) -> Result<()> {
    if !(AFE_RANGE.0..=AFE_RANGE.1).contains(&s) {
        return Err(Error::Domain(format!("afe: s = {s} outside [{}, {}]", AFE_RANGE.0, AFE_RANGE.1)));
    }
    if !(AFE_SPLIT_RANGE.0..=AFE_SPLIT_RANGE.1).contains(&x) {
        return Err(Error::Domain(format!("afe: split parameter {x} out of range")));
    }
    if rs.m > 1 && !rs.isogenous {
        return Err(Error::Unsupported(format!(
            "functional equation for M = {} with non-isogenous forms",
            rs.m
        )));
    }
    if rs.isogenous {
        for pole in [0.0, 1.0] {
            if (s - pole).abs() < 1e-9 {
                return Err(Error::Pole {
                    arg: s,
                    distance: (s - pole).abs(),
                });
            }
        }
    }
    Ok(())
}

/// Φ⁺(s) = A(s)Φ(s) (equal to Φ when not isogenous) with split parameter X.
pub fn afe_phi_plus(rs: &RankinSeries, s: f64, x: f64) -> Result<LValueResult> {
    afe_preconditions(rs, s, x)?;
    let (v, mass) = afe_smoothed(rs, &rs.combined_plus, s, x)?;
    let r = rs.polar_residue()?;
    let polar = if rs.isogenous { r * polar_term(s, x) } else { 0.0 };
    let value = v + polar;
    Ok(LValueResult {
        value,
        error: 1e-13 * mass + 1e-12 * polar.abs() + 1e-16,
        pipeline: Pipeline::Afe,
    })
}

/// Φ(s) through the approximate functional equation with split parameter X.
pub fn afe_eval_with(rs: &RankinSeries, s: f64, x: f64) -> Result<LValueResult> {
    let p = afe_phi_plus(rs, s, x)?;
    let a = rs.a_factor(s);
    Ok(LValueResult {
        value: p.value / a,
        error: p.error / a.abs(),
        pipeline: Pipeline::Afe,
    })
}

pub fn afe_eval(rs: &RankinSeries, s: f64) -> Result<LValueResult> {
    afe_eval_with(rs, s, 1.0)
}

/// Φ(s) by the AFE where supported, else the direct series.
pub fn phi(rs: &RankinSeries, s: f64) -> Result<LValueResult> {
    if rs.isogenous && (s - 1.0).abs() < 1e-9 {
        return Err(Error::Pole {
            arg: s,
            distance: (s - 1.0).abs(),
        });
    }
    let afe_ok = (AFE_RANGE.0..=AFE_RANGE.1).contains(&s) && (rs.m == 1 || rs.isogenous);
    if afe_ok {
        afe_eval(rs, s)
    } else {
        phi_direct(rs, s)
    }
}

/// L_{f,g}(s) = Φ(s)/G(s).
pub fn l_value(rs: &RankinSeries, s: f64) -> Result<LValueResult> {
    let g = rs.gamma_factor(s);
    if !g.is_finite() || g == 0.0 {
        return Err(Error::Pole {
            arg: s,
            distance: (s - s.round()).abs(),
        });
    }
    let p = phi(rs, s)?;
    Ok(LValueResult {
        value: p.value / g,
        error: p.error / g.abs(),
        pipeline: p.pipeline,
    })
}

/// L'_{f,g}(0) = Φ(0) for a non-isogenous pair of coprime levels.
pub fn l_derivative_at_0(rs: &RankinSeries) -> Result<LValueResult> {
    if rs.isogenous {
        return Err(Error::HypothesisNotMet("L'(0) = Φ(0) needs a non-isogenous pair".into()));
    }
    if rs.m != 1 {
        return Err(Error::HypothesisNotMet(format!("levels share the factor {}", rs.m)));
    }
    afe_eval(rs, 0.0)
}

/// f'(s) by central differences with h ∈ {1e-3, 5e-4, 2.5e-4} and two
/// Richardson steps.
pub fn central_derivative<F: Fn(f64) -> Result<f64>>(f: F, s: f64) -> Result<EvalResult<f64>> {
    let hs = [1e-3, 5e-4, 2.5e-4];
    let mut d = [0.0; 3];
    for (i, &h) in hs.iter().enumerate() {
        d[i] = (f(s + h)? - f(s - h)?) / (2.0 * h);
    }
    let r1 = [(4.0 * d[1] - d[0]) / 3.0, (4.0 * d[2] - d[1]) / 3.0];
    let r2 = (16.0 * r1[1] - r1[0]) / 15.0;
    Ok(EvalResult::new(r2, (r2 - r1[1]).abs()))
}

/// Res_{s=1} Φ from the symmetric ladder ½h[Φ(1+h) − Φ(1−h)], h ∈ {0.02, 0.01, 0.005},
/// extrapolated in h².
pub fn residue_at_one(rs: &RankinSeries) -> Result<EvalResult<f64>> {
    let hs = [0.02, 0.01, 0.005];
    let mut v = [0.0; 3];
    for (i, &h) in hs.iter().enumerate() {
        v[i] = 0.5 * h * (phi(rs, 1.0 + h)?.value - phi(rs, 1.0 - h)?.value);
    }
    let r1 = [(4.0 * v[1] - v[0]) / 3.0, (4.0 * v[2] - v[1]) / 3.0];
    let r2 = (16.0 * r1[1] - r1[0]) / 15.0;
    Ok(EvalResult::new(r2, (r2 - r1[1]).abs() + 1e-12 * r2.abs()))
}

// ---------- bad factors and assembled products ----------

fn multiplicative_ap(table: &ApTable, p: u64) -> Result<i64> {
    let info = table.get(&p).ok_or(Error::MissingPrime(p))?;
    match info.kind {
        ReductionKind::Split | ReductionKind::NonSplit => Ok(info.ap),
        k => Err(Error::HypothesisNotMet(format!("reduction at {p} is {}, not multiplicative", k.as_str()))),
    }
}

fn good_ap(table: &ApTable, p: u64) -> Result<i64> {
    Ok(table.get(&p).ok_or(Error::MissingPrime(p))?.ap)
}

/// H(s) = ∏_{p|M} 1/((1 − c_p p^{-s})(1 − c_p p^{-s-1}))
///      · ∏_{p exactly dividing one level} 1/(1 − a_p b_p p^{-s-1} + p^{-1-2s}).
pub fn bad_factor_h(rs: &RankinSeries, red_f: &ApTable, red_g: &ApTable, s: f64) -> Result<f64> {
    if !is_squarefree(rs.n1) || !is_squarefree(rs.n2) {
        return Err(Error::HypothesisNotMet("levels must be square-free".into()));
    }
    let mut h = 1.0;
    for p in prime_divisors(rs.n) {
        let pf = p as f64;
        let in1 = rs.n1 % p == 0;
        let in2 = rs.n2 % p == 0;
        if in1 && in2 {
            let c = (multiplicative_ap(red_f, p)? * multiplicative_ap(red_g, p)?) as f64;
            let d1 = 1.0 - c * pf.powf(-s);
            let d2 = 1.0 - c * pf.powf(-s - 1.0);
            if d1.abs() < 1e-12 || d2.abs() < 1e-12 {
                return Err(Error::Pole { arg: s, distance: d1.abs().min(d2.abs()) });
            }
            h /= d1 * d2;
        } else {
            let (a, b) = if in1 {
                (multiplicative_ap(red_f, p)?, good_ap(red_g, p)?)
            } else {
                (good_ap(red_f, p)?, multiplicative_ap(red_g, p)?)
            };
            h /= 1.0 - (a * b) as f64 * pf.powf(-s - 1.0) + pf.powf(-1.0 - 2.0 * s);
        }
    }
    Ok(h)
}

/// ζ(s−1)²·H(s−1)·L_{f,g}(s−1).
pub fn assemble_lh2(rs: &RankinSeries, red_f: &ApTable, red_g: &ApTable, s: f64) -> Result<LValueResult> {
    let z = zeta(s - 1.0)?;
    let h = bad_factor_h(rs, red_f, red_g, s - 1.0)?;
    let l = l_value(rs, s - 1.0)?;
    let k = z.value * z.value * h;
    Ok(LValueResult {
        value: k * l.value,
        error: k.abs() * l.error + 2.0 * (z.abs_error_bound / z.value.abs()) * (k * l.value).abs(),
        pipeline: l.pipeline,
    })
}

/// ζ(s−2)³·L_{f,g}(s−2)·L_{f,h}(s−2)·L_{g,h}(s−2).
pub fn assemble_lh4(pairs: [&RankinSeries; 3], s: f64) -> Result<LValueResult> {
    let z = zeta(s - 2.0)?;
    let mut v = z.value.powi(3);
    let mut rel = 3.0 * z.abs_error_bound / z.value.abs();
    let mut pipeline = Pipeline::Afe;
    for rs in pairs {
        let l = l_value(rs, s - 2.0)?;
        v *= l.value;
        rel += l.error / l.value.abs();
        pipeline = pipeline.max(l.pipeline);
    }
    Ok(LValueResult {
        value: v,
        error: rel * v.abs(),
        pipeline,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct OrderEstimate {
    pub order: i32,
    pub slope: f64,
    /// |slope − order|.
    pub residual: f64,
    pub inconclusive: bool,
}

/// Slope of log|F(s0 + δ)| against log δ over δ = h·2^{-j}, j = 0..5, by
/// least squares. Positive orders are zeros, negative orders poles.
pub fn order_of_vanishing<F: Fn(f64) -> Result<f64>>(f: F, s0: f64, h: f64) -> Result<OrderEstimate> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..6 {
        let d = h * 0.5f64.powi(j);
        let v = f(s0 + d)?;
        if !(v.is_finite() && v != 0.0) {
            return Err(Error::Inconsistent(format!("order_of_vanishing: F({}) = {v}", s0 + d)));
        }
        xs.push(d.ln());
        ys.push(v.abs().ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let order = slope.round() as i32;
    let residual = (slope - order as f64).abs();
    Ok(OrderEstimate {
        order,
        slope,
        residual,
        inconclusive: residual > 0.2,
    })
}

// ---------- symmetric square ----------

pub const SYM2_MAX_DENOMINATOR: u64 = 576;
pub const SYM2_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RecognizedRatio {
    pub value: f64,
    pub numerator: i64,
    pub denominator: i64,
    pub residual: f64,
    pub accepted: bool,
}

impl RecognizedRatio {
    pub fn new(value: f64, max_den: u64, tol: f64) -> Self {
        let r = recognize_rational(value, max_den, tol);
        let g: RationalGuess = r.best();
        RecognizedRatio {
            value,
            numerator: g.numerator,
            denominator: g.denominator,
            residual: g.residual,
            accepted: r.accepted().is_some(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Sym2Report {
    pub label: String,
    pub level: u64,
    pub index: u64,
    /// (f, f) with 1/[Γ:Γ₀(N)] normalization.
    pub petersson: f64,
    pub petersson_error: f64,
    /// Res_{s=1} Φ⁺.
    pub residue_plus: f64,
    /// lim_{s→0} A(s)·L_{f,f}(s) = −Res_{s=1}Φ⁺.
    pub a_l_at_0: f64,
    /// lim_{s→0} H(s)·L_{f,f}(s).
    pub h_l_at_0: f64,
    /// H(0)L(0)/ζ(0).
    pub l_sym2_at_1: f64,
    /// Covolume of the period lattice; (1/2πi)∫ω∧ω̄ = −area/π.
    pub period_area: f64,
    pub omega_wedge: f64,
    /// a_l_at_0 / (2π·(f,f)·[Γ:Γ₀(N)]).
    pub ratio_lff: RecognizedRatio,
    /// l_sym2_at_1 / ((1/2πi)∫ω∧ω̄).
    pub ratio_sym2: RecognizedRatio,
    pub deg_phi: Option<u64>,
    pub manin_c: Option<u64>,
}

/// Symmetric-square bookkeeping for a curve of square-free conductor.
pub fn sym2_report(
    curve: &CurveModel,
    form: &CuspFormEval,
    rs: &RankinSeries,
    grid: &QuadratureGrid,
    deg_phi: Option<u64>,
    manin_c: Option<u64>,
) -> Result<Sym2Report> {
    let n = curve.conductor;
    if !is_squarefree(n) {
        return Err(Error::HypothesisNotMet(format!("conductor {n} is not square-free")));
    }
    if !rs.isogenous || rs.n != n {
        return Err(Error::HypothesisNotMet("sym2_report needs the pair (f, f)".into()));
    }
    let pet = petersson_integral(form, form, grid)?;
    if !(pet.value.re > 0.0) {
        return Err(Error::Inconsistent(format!("(f, f) = {} is not positive", pet.value.re)));
    }
    let index = gamma0_index(n);
    let r_plus = rs.polar_residue()?;
    let a_l = -r_plus;
    // H(s)/A(s) = ∏_{p|N} 1/(1 − c_p p^{-s-1})
    let h_over_a: f64 = rs
        .c_bad
        .iter()
        .map(|(&p, &c)| 1.0 / (1.0 - c as f64 / p as f64))
        .product();
    let h_l = a_l * h_over_a;
    let zeta0 = zeta(0.0)?.value;
    let l_sym2 = h_l / zeta0;
    let lat = period_lattice(curve)?;
    let wedge = lat.omega_wedge_conj();
    let ratio_lff = a_l / (2.0 * PI * pet.value.re * index as f64);
    let ratio_sym2 = l_sym2 / wedge;
    Ok(Sym2Report {
        label: curve.label.clone(),
        level: n,
        index,
        petersson: pet.value.re,
        petersson_error: pet.error_bound(),
        residue_plus: r_plus,
        a_l_at_0: a_l,
        h_l_at_0: h_l,
        l_sym2_at_1: l_sym2,
        period_area: lat.area,
        omega_wedge: wedge,
        ratio_lff: RecognizedRatio::new(ratio_lff, SYM2_MAX_DENOMINATOR, SYM2_TOLERANCE),
        ratio_sym2: RecognizedRatio::new(ratio_sym2, SYM2_MAX_DENOMINATOR, SYM2_TOLERANCE),
        deg_phi,
        manin_c,
    })
}

/// 2π·(Σ_{d|N} μ(d)/d)·[Γ:Γ₀(N)]·(f,f): the predicted residue of Φ at s = 1.
pub fn residue_prediction(level: u64, petersson: f64) -> f64 {
    let s: f64 = divisors(level).iter().map(|&d| moebius(d) as f64 / d as f64).sum();
    2.0 * PI * s * gamma0_index(level) as f64 * petersson
}
