//! Elliptic curves over ℚ: reduction types, traces of Frobenius, Hecke
//! coefficient tables and period lattices.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::{factorize, is_squarefree, primes_up_to};
use crate::error::{Error, Result};

/// Below this bound traces are found by counting; above it by BSGS.
pub const EXHAUSTIVE_LIMIT: u64 = 10_000;

/// Long Weierstrass model y² + a1·xy + a3·y = x³ + a2·x² + a4·x + a6.
#[derive(Clone, Debug, PartialEq, Eq, serde::Serialize)]
pub struct CurveModel {
    pub a1: i64,
    pub a2: i64,
    pub a3: i64,
    pub a4: i64,
    pub a6: i64,
    pub conductor: u64,
    pub label: String,
}

impl CurveModel {
    pub fn new(label: &str, a: [i64; 5], conductor: u64) -> Result<Self> {
        let c = CurveModel {
            a1: a[0],
            a2: a[1],
            a3: a[2],
            a4: a[3],
            a6: a[4],
            conductor,
            label: label.to_string(),
        };
        if c.discriminant() == 0 {
            return Err(Error::InvalidCurve(format!("{label}: singular model")));
        }
        if conductor == 0 {
            return Err(Error::InvalidCurve(format!("{label}: conductor must be positive")));
        }
        Ok(c)
    }

    /// Built-in curves by Cremona label (`11a`, `11a1`, `14a`, `15a`, `37a`).
    pub fn named(label: &str) -> Option<Self> {
        let (a, n) = match label {
            "11a" | "11a1" => ([0, -1, 1, -10, -20], 11),
            "14a" | "14a1" => ([1, 0, 1, 4, -6], 14),
            "15a" | "15a1" => ([1, 1, 1, -10, -10], 15),
            "37a" | "37a1" => ([0, 0, 1, -1, 0], 37),
            _ => return None,
        };
        CurveModel::new(label, a, n).ok()
    }

    pub fn coefficients(&self) -> [i64; 5] {
        [self.a1, self.a2, self.a3, self.a4, self.a6]
    }

    pub fn b_invariants(&self) -> [i128; 4] {
        let [a1, a2, a3, a4, a6] = self.coefficients().map(i128::from);
        let b2 = a1 * a1 + 4 * a2;
        let b4 = 2 * a4 + a1 * a3;
        let b6 = a3 * a3 + 4 * a6;
        let b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4;
        [b2, b4, b6, b8]
    }

    pub fn c4(&self) -> i128 {
        let [b2, b4, _, _] = self.b_invariants();
        b2 * b2 - 24 * b4
    }

    pub fn c6(&self) -> i128 {
        let [b2, b4, b6, _] = self.b_invariants();
        -b2 * b2 * b2 + 36 * b2 * b4 - 216 * b6
    }

    pub fn discriminant(&self) -> i128 {
        let [b2, b4, b6, b8] = self.b_invariants();
        -b2 * b2 * b8 - 8 * b4 * b4 * b4 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    }

    /// Checks that p | conductor exactly when the model is singular mod p, for p ≤ bound.
    pub fn validate_conductor(&self, bound: u64) -> Result<()> {
        let disc = self.discriminant();
        for p in primes_up_to(bound) {
            let bad = disc % p as i128 == 0;
            let divides = self.conductor % p == 0;
            if bad != divides {
                return Err(Error::InvalidCurve(format!(
                    "{}: conductor {} inconsistent with reduction at p = {p}",
                    self.label, self.conductor
                )));
            }
        }
        for (p, _) in factorize(self.conductor) {
            if disc % p as i128 != 0 {
                return Err(Error::InvalidCurve(format!(
                    "{}: conductor prime {p} does not divide the discriminant",
                    self.label
                )));
            }
        }
        Ok(())
    }

    fn reduced(&self, p: u64) -> [u64; 5] {
        self.coefficients().map(|a| a.rem_euclid(p as i64) as u64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub enum ReductionKind {
    Good,
    Split,
    NonSplit,
    Additive,
}

impl ReductionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ReductionKind::Good => "good",
            ReductionKind::Split => "split",
            ReductionKind::NonSplit => "nonsplit",
            ReductionKind::Additive => "additive",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "good" => Some(ReductionKind::Good),
            "split" => Some(ReductionKind::Split),
            "nonsplit" => Some(ReductionKind::NonSplit),
            "additive" => Some(ReductionKind::Additive),
            _ => None,
        }
    }
}

impl fmt::Display for ReductionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct ReductionInfo {
    pub prime: u64,
    pub kind: ReductionKind,
    pub ap: i64,
}

pub type ApTable = BTreeMap<u64, ReductionInfo>;

// ---------- modular arithmetic ----------

#[inline]
fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut r = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(r, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    r
}

fn invmod(a: u64, p: u64) -> u64 {
    powmod(a, p - 2, p)
}

/// Legendre symbol (a/p) for odd prime p.
fn legendre(a: u64, p: u64) -> i64 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if powmod(a, (p - 1) / 2, p) == 1 {
        1
    } else {
        -1
    }
}

/// Square root modulo an odd prime (Tonelli–Shanks); `a` must be a residue.
fn sqrt_mod(a: u64, p: u64) -> u64 {
    let a = a % p;
    if a == 0 {
        return 0;
    }
    if p % 4 == 3 {
        return powmod(a, (p + 1) / 4, p);
    }
    let mut q = p - 1;
    let mut s = 0;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while legendre(z, p) != -1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(a, q, p);
    let mut r = powmod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mulmod(t2, t2, p);
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    r
}

// ---------- point counting ----------

/// Number of affine solutions of the long model over F_p, by brute force.
fn count_affine_bruteforce(a: [u64; 5], p: u64) -> u64 {
    let [a1, a2, a3, a4, a6] = a;
    let mut n = 0;
    for x in 0..p {
        let rhs = (mulmod(mulmod(x, x, p), x, p)
            + mulmod(a2, mulmod(x, x, p), p)
            + mulmod(a4, x, p)
            + a6)
            % p;
        let lin = (mulmod(a1, x, p) + a3) % p;
        for y in 0..p {
            let lhs = (mulmod(y, y, p) + mulmod(lin, y, p)) % p;
            if lhs == rhs {
                n += 1;
            }
        }
    }
    n
}

/// Number of affine solutions for odd p via (2y + a1x + a3)² = D(x).
fn count_affine_legendre(a: [u64; 5], p: u64) -> u64 {
    let [a1, a2, a3, a4, a6] = a;
    let mut is_sq = vec![false; p as usize];
    for y in 0..p {
        is_sq[mulmod(y, y, p) as usize] = true;
    }
    let mut n = 0u64;
    for x in 0..p {
        let x2 = mulmod(x, x, p);
        let cubic = (mulmod(x2, x, p) + mulmod(a2, x2, p) + mulmod(a4, x, p) + a6) % p;
        let lin = (mulmod(a1, x, p) + a3) % p;
        let d = (mulmod(4, cubic, p) + mulmod(lin, lin, p)) % p;
        n += if d == 0 {
            1
        } else if is_sq[d as usize] {
            2
        } else {
            0
        };
    }
    n
}

/// p + 1 − #E(F_p) counting every projective point (including a singular one).
fn trace_by_counting(curve: &CurveModel, p: u64) -> i64 {
    let a = curve.reduced(p);
    let affine = if p <= 3 {
        count_affine_bruteforce(a, p)
    } else {
        count_affine_legendre(a, p)
    };
    p as i64 + 1 - (affine as i64 + 1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pt {
    Inf,
    Aff(u64, u64),
}

/// Short model y² = x³ + A x + B over F_p, p > 3.
struct ShortCurve {
    a: u64,
    b: u64,
    p: u64,
}

impl ShortCurve {
    fn add(&self, u: Pt, v: Pt) -> Pt {
        let p = self.p;
        match (u, v) {
            (Pt::Inf, w) | (w, Pt::Inf) => w,
            (Pt::Aff(x1, y1), Pt::Aff(x2, y2)) => {
                let lambda = if x1 == x2 {
                    if (y1 + y2) % p == 0 {
                        return Pt::Inf;
                    }
                    let num = (mulmod(3, mulmod(x1, x1, p), p) + self.a) % p;
                    mulmod(num, invmod(mulmod(2, y1, p), p), p)
                } else {
                    let num = (y2 + p - y1) % p;
                    mulmod(num, invmod((x2 + p - x1) % p, p), p)
                };
                let x3 = (mulmod(lambda, lambda, p) + 2 * p - x1 - x2) % p;
                let y3 = (mulmod(lambda, (x1 + p - x3) % p, p) + p - y1) % p;
                Pt::Aff(x3, y3)
            }
        }
    }

    fn mul(&self, mut k: u64, u: Pt) -> Pt {
        let mut acc = Pt::Inf;
        let mut base = u;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add(acc, base);
            }
            base = self.add(base, base);
            k >>= 1;
        }
        acc
    }

    fn random_point(&self, rng: &mut ChaCha8Rng) -> Pt {
        let p = self.p;
        loop {
            let x = rng.gen_range(0..p);
            let rhs = (mulmod(mulmod(x, x, p), x, p) + mulmod(self.a, x, p) + self.b) % p;
            if rhs == 0 {
                return Pt::Aff(x, 0);
            }
            if legendre(rhs, p) == 1 {
                return Pt::Aff(x, sqrt_mod(rhs, p));
            }
        }
    }

    /// Some k in [lo, hi] with k·P = O, by baby-step giant-step.
    fn multiple_in(&self, pt: Pt, lo: u64, hi: u64) -> Option<u64> {
        let width = hi - lo + 1;
        let m = ((width as f64).sqrt().ceil() as u64 / 2).max(1);
        let mut baby: std::collections::HashMap<u64, u64> = std::collections::HashMap::new();
        let mut cur = Pt::Inf;
        let mut baby_pts = Vec::with_capacity(m as usize + 1);
        for j in 0..=m {
            if let Pt::Aff(x, _) = cur {
                baby.entry(x).or_insert(j);
            }
            baby_pts.push(cur);
            cur = self.add(cur, pt);
        }
        let stride = self.mul(2 * m + 1, pt);
        let mut q = self.mul(lo + m, pt);
        let mut centre = lo + m;
        while centre <= hi + m {
            match q {
                Pt::Inf => {
                    if (lo..=hi).contains(&centre) {
                        return Some(centre);
                    }
                }
                Pt::Aff(x, _) => {
                    if let Some(&j) = baby.get(&x) {
                        let bp = baby_pts[j as usize];
                        // q = ±j·P  ⇒  (centre ∓ j)·P = O
                        let k = if bp == q { centre - j } else { centre + j };
                        if k >= lo && k <= hi && k > 0 {
                            return Some(k);
                        }
                        let alt = if bp == q { centre + j } else { centre.wrapping_sub(j) };
                        if alt >= lo && alt <= hi && self.mul(alt, pt) == Pt::Inf {
                            return Some(alt);
                        }
                    }
                }
            }
            q = self.add(q, stride);
            centre += 2 * m + 1;
        }
        None
    }

    /// Exact order of P given a multiple k of it.
    fn order_from_multiple(&self, pt: Pt, k: u64) -> u64 {
        let mut ord = k;
        for (q, _) in factorize(k) {
            while ord % q == 0 && self.mul(ord / q, pt) == Pt::Inf {
                ord /= q;
            }
        }
        ord
    }
}

/// Trace at a good prime p > 3 by order finding on E and its quadratic twist.
fn trace_by_bsgs(curve: &CurveModel, p: u64) -> i64 {
    let pm = p as i128;
    let a = (-27 * curve.c4()).rem_euclid(pm) as u64;
    let b = (-54 * curve.c6()).rem_euclid(pm) as u64;
    let e = ShortCurve { a, b, p };
    let mut d = 2;
    while legendre(d, p) != -1 {
        d += 1;
    }
    let d2 = mulmod(d, d, p);
    let twist = ShortCurve {
        a: mulmod(a, d2, p),
        b: mulmod(b, mulmod(d2, d, p), p),
        p,
    };
    let root = 2.0 * (p as f64).sqrt();
    let lo = (p as f64 + 1.0 - root).ceil().max(1.0) as u64;
    let hi = (p as f64 + 1.0 + root).floor() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(p ^ 0x5eed_ca7e);
    let (mut l_e, mut l_t) = (1u64, 1u64);
    for round in 0..64 {
        let (curve_here, twisted) = if round % 2 == 0 { (&e, false) } else { (&twist, true) };
        let pt = curve_here.random_point(&mut rng);
        let (tlo, thi) = if twisted { (2 * p + 2 - hi, 2 * p + 2 - lo) } else { (lo, hi) };
        let Some(k) = curve_here.multiple_in(pt, tlo, thi) else { continue };
        let ord = curve_here.order_from_multiple(pt, k);
        if twisted {
            l_t = crate::arith::lcm(l_t, ord);
        } else {
            l_e = crate::arith::lcm(l_e, ord);
        }
        let mut candidates = (lo..=hi)
            .filter(|n| n % l_e == 0 && (2 * p + 2 - n) % l_t == 0);
        if let (Some(n), None) = (candidates.next(), candidates.next()) {
            return p as i64 + 1 - n as i64;
        }
    }
    trace_by_counting(curve, p)
}

// ---------- singular reduction ----------

fn singular_point(a: [u64; 5], p: u64) -> Option<(u64, u64)> {
    let [a1, a2, a3, a4, a6] = a;
    let f = |x: u64, y: u64| -> bool {
        let x2 = mulmod(x, x, p);
        let lhs = (mulmod(y, y, p) + mulmod(mulmod(a1, x, p), y, p) + mulmod(a3, y, p)) % p;
        let rhs = (mulmod(x2, x, p) + mulmod(a2, x2, p) + mulmod(a4, x, p) + a6) % p;
        let fx = (mulmod(a1, y, p) + 3 * p * p - mulmod(3, x2, p) - mulmod(mulmod(2, a2, p), x, p)
            + p
            - a4)
            % p;
        let fy = (mulmod(2, y, p) + mulmod(a1, x, p) + a3) % p;
        lhs == rhs && fx == 0 && fy == 0
    };
    if p == 2 {
        for x in 0..2 {
            for y in 0..2 {
                if f(x, y) {
                    return Some((x, y));
                }
            }
        }
        return None;
    }
    let inv2 = invmod(2, p);
    for x in 0..p {
        let lin = (mulmod(a1, x, p) + a3) % p;
        let y = mulmod((p - lin) % p, inv2, p);
        if f(x, y) {
            return Some((x, y));
        }
    }
    None
}

fn classify_singular(curve: &CurveModel, p: u64) -> Result<ReductionKind> {
    let a = curve.reduced(p);
    let (x0, _) = singular_point(a, p)
        .ok_or_else(|| Error::Inconsistent(format!("no singular point mod {p}")))?;
    // tangent slopes t at the node: t² + a1·t − (3x0 + a2) = 0
    let c = (3 * x0 + a[1]) % p;
    let kind = if p == 2 {
        let roots = (0..2u64)
            .filter(|&t| (t * t + a[0] * t + p - c) % p == 0)
            .count();
        match roots {
            2 => ReductionKind::Split,
            0 => ReductionKind::NonSplit,
            _ => ReductionKind::Additive,
        }
    } else {
        let disc = (mulmod(a[0], a[0], p) + mulmod(4, c, p)) % p;
        match legendre(disc, p) {
            0 => ReductionKind::Additive,
            1 => ReductionKind::Split,
            _ => ReductionKind::NonSplit,
        }
    };
    Ok(kind)
}

/// Reduction type and trace of Frobenius at p.
pub fn reduce_mod_p(curve: &CurveModel, p: u64) -> Result<ReductionInfo> {
    if p < 2 || !crate::arith::is_prime(p) {
        return Err(Error::Domain(format!("reduce_mod_p: {p} is not prime")));
    }
    if curve.discriminant() % p as i128 != 0 {
        let ap = if p <= EXHAUSTIVE_LIMIT {
            trace_by_counting(curve, p)
        } else {
            trace_by_bsgs(curve, p)
        };
        return Ok(ReductionInfo {
            prime: p,
            kind: ReductionKind::Good,
            ap,
        });
    }
    let kind = classify_singular(curve, p)?;
    let ap = match kind {
        ReductionKind::Split => 1,
        ReductionKind::NonSplit => -1,
        _ => 0,
    };
    Ok(ReductionInfo { prime: p, kind, ap })
}

/// Reduction data for every prime p ≤ p_max, in prime order.
pub fn ap_table(curve: &CurveModel, p_max: u64) -> Result<ApTable> {
    let primes = primes_up_to(p_max);
    let infos: Vec<Result<ReductionInfo>> =
        primes.par_iter().map(|&p| reduce_mod_p(curve, p)).collect();
    infos
        .into_iter()
        .map(|r| r.map(|i| (i.prime, i)))
        .collect()
}

/// Serialize an a_p table as CSV with header `p,kind,ap`.
pub fn ap_table_to_csv(table: &ApTable) -> String {
    let mut out = String::from("p,kind,ap\n");
    for info in table.values() {
        out.push_str(&format!("{},{},{}\n", info.prime, info.kind, info.ap));
    }
    out
}

pub fn ap_table_from_csv(text: &str) -> Result<ApTable> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("p,kind,ap") {
        return Err(Error::Domain("a_p csv: missing header `p,kind,ap`".into()));
    }
    let mut table = ApTable::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Domain(format!("a_p csv: malformed row {}: {line}", i + 2));
        let mut parts = line.split(',');
        let p: u64 = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        let kind = parts.next().and_then(|s| ReductionKind::parse(s.trim())).ok_or_else(bad)?;
        let ap: i64 = parts.next().and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?;
        table.insert(p, ReductionInfo { prime: p, kind, ap });
    }
    Ok(table)
}

// ---------- Hecke coefficients ----------

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    pub level: u64,
    /// `coefficients[n]` is a_n; index 0 holds 0.
    pub coefficients: Vec<i64>,
}

impl CoefficientTable {
    pub fn nmax(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn get(&self, n: usize) -> i64 {
        self.coefficients[n]
    }
}

/// a_n for 1 ≤ n ≤ n_max from the prime traces via the Hecke recursion.
pub fn an_table(level: u64, ap: &ApTable, n_max: usize) -> Result<CoefficientTable> {
    let mut spf = vec![0u32; n_max + 1];
    for i in 2..=n_max {
        if spf[i] == 0 {
            let mut j = i;
            while j <= n_max {
                if spf[j] == 0 {
                    spf[j] = i as u32;
                }
                j += i;
            }
        }
    }
    let mut a = vec![0i64; n_max + 1];
    if n_max >= 1 {
        a[1] = 1;
    }
    for n in 2..=n_max {
        let p = spf[n] as usize;
        let mut pk = p;
        while (n / pk) % p == 0 {
            pk *= p;
        }
        if pk == n {
            let info = ap.get(&(p as u64)).ok_or(Error::MissingPrime(p as u64))?;
            let ap_val = info.ap;
            a[n] = if n == p {
                ap_val
            } else if level % p as u64 == 0 {
                ap_val * a[n / p]
            } else {
                ap_val * a[n / p] - p as i64 * a[n / (p * p)]
            };
        } else {
            a[n] = a[pk] * a[n / pk];
        }
    }
    Ok(CoefficientTable {
        level,
        coefficients: a,
    })
}

/// Convenience: a_n table for a curve, counting primes up to n_max.
pub fn coefficient_table(curve: &CurveModel, n_max: usize) -> Result<CoefficientTable> {
    let ap = ap_table(curve, n_max.max(2) as u64)?;
    an_table(curve.conductor, &ap, n_max)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct OggReport {
    pub label: String,
    pub entries: Vec<(u64, i64)>,
    pub passed: bool,
}

/// |a_p| = 1 at every prime of a square-free conductor.
pub fn check_ogg_pm1(curve: &CurveModel) -> Result<OggReport> {
    if !is_squarefree(curve.conductor) {
        return Err(Error::HypothesisNotMet(format!(
            "conductor {} is not square-free",
            curve.conductor
        )));
    }
    let mut entries = Vec::new();
    for (p, _) in factorize(curve.conductor) {
        entries.push((p, reduce_mod_p(curve, p)?.ap));
    }
    let passed = entries.iter().all(|&(_, a)| a.abs() == 1);
    Ok(OggReport {
        label: curve.label.clone(),
        entries,
        passed,
    })
}

// ---------- periods ----------

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct PeriodLattice {
    pub omega1: f64,
    pub omega2: Complex64,
    /// Covolume Im(conj(ω1)·ω2) of the lattice; (1/2πi)∫ω∧ω̄ = −area/π.
    pub area: f64,
    pub eta1: Complex64,
    pub eta2: Complex64,
}

impl PeriodLattice {
    pub fn tau(&self) -> Complex64 {
        self.omega2 / self.omega1
    }

    pub fn legendre_residual(&self) -> f64 {
        let i2pi = Complex64::new(0.0, 2.0 * PI);
        (self.eta1 * self.omega2 - self.eta2 * self.omega1 - i2pi).norm()
    }

    /// (1/2πi)∫_{E(ℂ)} ω ∧ ω̄ for the Néron differential.
    pub fn omega_wedge_conj(&self) -> f64 {
        -self.area / PI
    }
}

fn agm(mut a: f64, mut b: f64) -> Result<f64> {
    for _ in 0..60 {
        if (a - b).abs() <= 1e-16 * a.abs() {
            return Ok(a);
        }
        let m = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = m;
    }
    if (a - b).abs() <= 1e-14 * a.abs() {
        Ok(a)
    } else {
        Err(Error::Inconsistent("AGM did not converge".into()))
    }
}

/// Real roots of 4x³ + b2x² + 2b4x + b6, polished by Newton, descending.
fn real_roots(b2: f64, b4: f64, b6: f64) -> Vec<f64> {
    let f = |x: f64| ((4.0 * x + b2) * x + 2.0 * b4) * x + b6;
    let df = |x: f64| (12.0 * x + 2.0 * b2) * x + 2.0 * b4;
    // depressed cubic for x = t − b2/12: t³ + pt + q = 0
    let a = b2 / 4.0;
    let b = b4 / 2.0;
    let c = b6 / 4.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = -a / 3.0;
    let disc = -(4.0 * p * p * p + 27.0 * q * q);
    let mut roots = if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let theta = (3.0 * q / (p * m)).acos() / 3.0;
        (0..3)
            .map(|k| m * (theta - 2.0 * PI * k as f64 / 3.0).cos() + shift)
            .collect::<Vec<_>>()
    } else {
        let s = (q * q / 4.0 + p * p * p / 27.0).sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt() + shift]
    };
    for r in roots.iter_mut() {
        for _ in 0..8 {
            let d = df(*r);
            if d == 0.0 {
                break;
            }
            *r -= f(*r) / d;
        }
    }
    roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
    roots
}

/// E2(τ) = 1 − 24 Σ σ(n) qⁿ.
pub(crate) fn eisenstein_e2(tau: Complex64) -> Complex64 {
    eisenstein_series(tau, 1, -24.0)
}

/// 1 + c·Σ σ_k(n) qⁿ, computed as Σ n^k qⁿ/(1 − qⁿ).
pub(crate) fn eisenstein_series(tau: Complex64, k: i32, c: f64) -> Complex64 {
    let q = (Complex64::new(0.0, 2.0 * PI) * tau).exp();
    let mut qn = Complex64::new(1.0, 0.0);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..10_000 {
        qn *= q;
        let term = (n as f64).powi(k) * qn / (Complex64::new(1.0, 0.0) - qn);
        sum += term;
        if term.norm() < 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    Complex64::new(1.0, 0.0) + c * sum
}

/// Periods of the Néron differential by AGM, with quasi-periods from E2.
pub fn period_lattice(curve: &CurveModel) -> Result<PeriodLattice> {
    let [b2, b4, b6, _] = curve.b_invariants().map(|b| b as f64);
    let disc = curve.discriminant();
    let roots = real_roots(b2, b4, b6);
    let (omega1, omega2) = if disc > 0 {
        if roots.len() != 3 {
            return Err(Error::Inconsistent("expected three real roots".into()));
        }
        let (e1, e2, e3) = (roots[0], roots[1], roots[2]);
        let w1 = PI / agm((e1 - e3).sqrt(), (e1 - e2).sqrt())?;
        let w2 = Complex64::new(0.0, PI / agm((e1 - e3).sqrt(), (e2 - e3).sqrt())?);
        (w1, w2)
    } else {
        let e1 = roots[0];
        let a = 3.0 * e1 + b2 / 4.0;
        let b = (3.0 * e1 * e1 + b2 * e1 / 2.0 + b4 / 2.0).sqrt();
        let w1 = 2.0 * PI / agm(2.0 * b.sqrt(), (2.0 * b + a).sqrt())?;
        let w2 = Complex64::new(-w1 / 2.0, PI / agm(2.0 * b.sqrt(), (2.0 * b - a).sqrt())?);
        (w1, w2)
    };
    let tau = omega2 / omega1;
    let g2_scale = PI * PI / 3.0;
    let eta1 = g2_scale * eisenstein_e2(tau) / omega1;
    let tau_s = -1.0 / tau;
    let eta2 = g2_scale * eisenstein_e2(tau_s) / omega2;
    let area = (omega1 * omega2.im).abs();
    let lattice = PeriodLattice {
        omega1,
        omega2,
        area,
        eta1,
        eta2,
    };
    if lattice.legendre_residual() > 1e-9 {
        return Err(Error::Inconsistent(format!(
            "Legendre residual {:e}",
            lattice.legendre_residual()
        )));
    }
    Ok(lattice)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::gcd;
    use proptest::prelude::*;
    use rand::Rng;

    fn curve(l: &str) -> CurveModel {
        CurveModel::named(l).unwrap()
    }

    fn oracle_trace(c: &CurveModel, p: u64) -> i64 {
        p as i64 + 1 - (count_affine_bruteforce(c.reduced(p), p) as i64 + 1)
    }

    #[test]
    fn small_hand_count() {
        // y² = x³ + x over F_3
        let c = CurveModel::new("t", [0, 0, 0, 1, 0], 64).unwrap();
        let info = reduce_mod_p(&c, 3).unwrap();
        assert_eq!(info.kind, ReductionKind::Good);
        assert_eq!(info.ap, 0);
    }

    #[test]
    fn known_traces() {
        let e = curve("11a");
        assert_eq!(reduce_mod_p(&e, 7).unwrap().ap, -2);
        assert_eq!(reduce_mod_p(&e, 2).unwrap().ap, -2);
        assert_eq!(reduce_mod_p(&e, 3).unwrap().ap, -1);
        let bad = reduce_mod_p(&e, 11).unwrap();
        assert_eq!(bad.kind, ReductionKind::Split);
        assert_eq!(bad.ap, 1);
        let f = curve("14a");
        assert_eq!(reduce_mod_p(&f, 2).unwrap().ap, -1);
        assert_eq!(reduce_mod_p(&f, 7).unwrap().ap, 1);
        let g = curve("15a");
        assert_eq!(reduce_mod_p(&g, 3).unwrap().ap, -1);
        assert_eq!(reduce_mod_p(&g, 5).unwrap().ap, 1);
    }

    #[test]
    fn singular_classification_matches_point_count() {
        for l in ["11a", "14a", "15a", "37a"] {
            let c = curve(l);
            for (p, _) in factorize(c.conductor) {
                let info = reduce_mod_p(&c, p).unwrap();
                assert_eq!(info.ap, oracle_trace(&c, p), "{l} at {p}");
            }
        }
        // additive: y² = x³ + p over F_p for p = 5 has a cusp at the origin
        let cusp = CurveModel::new("c", [0, 0, 0, 0, 5], 675).unwrap();
        let info = reduce_mod_p(&cusp, 5).unwrap();
        assert_eq!(info.kind, ReductionKind::Additive);
        assert_eq!(info.ap, oracle_trace(&cusp, 5));
    }

    #[test]
    fn counting_matches_bruteforce() {
        for l in ["11a", "14a", "37a"] {
            let c = curve(l);
            for p in primes_up_to(300) {
                if c.discriminant() % p as i128 != 0 {
                    assert_eq!(trace_by_counting(&c, p), oracle_trace(&c, p), "{l} {p}");
                }
            }
        }
    }

    #[test]
    fn bsgs_matches_counting() {
        for l in ["11a", "14a", "15a"] {
            let c = curve(l);
            for p in [10_007u64, 10_009, 10_037, 20_011, 65_537, 99_991] {
                assert_eq!(trace_by_bsgs(&c, p), trace_by_counting(&c, p), "{l} {p}");
            }
            // BSGS also valid for moderate p
            for p in primes_up_to(2000).into_iter().filter(|&p| p > 300) {
                if c.discriminant() % p as i128 != 0 {
                    assert_eq!(trace_by_bsgs(&c, p), trace_by_counting(&c, p), "{l} {p}");
                }
            }
        }
    }

    #[test]
    fn sqrt_mod_roundtrip() {
        for p in [13u64, 17, 41, 97, 65_537, 1_000_033] {
            for a in 1..200u64 {
                if legendre(a, p) == 1 {
                    let r = sqrt_mod(a, p);
                    assert_eq!(mulmod(r, r, p), a % p);
                }
            }
        }
    }

    #[test]
    fn ap_table_entries() {
        let e = curve("11a");
        let t = ap_table(&e, 10).unwrap();
        assert_eq!(t.keys().copied().collect::<Vec<_>>(), vec![2, 3, 5, 7]);
        assert!(t.values().all(|i| i.kind == ReductionKind::Good));
        let t = ap_table(&e, 11).unwrap();
        assert_eq!(t[&11].kind, ReductionKind::Split);
        assert_eq!(ap_table(&curve("37a"), 2).unwrap().len(), 1);
    }

    #[test]
    fn hasse_and_conductor_consistency() {
        for l in ["11a", "14a", "15a", "37a"] {
            let c = curve(l);
            c.validate_conductor(1000).unwrap();
            let t = ap_table(&c, 20_000).unwrap();
            for info in t.values() {
                let p = info.prime;
                let bad = c.conductor % p == 0;
                assert_eq!(info.kind != ReductionKind::Good, bad, "{l} {p}");
                if !bad {
                    assert!((info.ap * info.ap) as u64 <= 4 * p, "{l} {p}");
                }
            }
        }
        let wrong = CurveModel::new("x", [0, -1, 1, -10, -20], 13).unwrap();
        assert!(wrong.validate_conductor(100).is_err());
    }

    #[test]
    fn an_table_values() {
        let e = curve("11a");
        let t = coefficient_table(&e, 130).unwrap();
        assert_eq!(t.get(1), 1);
        assert_eq!(t.get(2), -2);
        assert_eq!(t.get(4), 2);
        assert_eq!(t.get(6), 2);
        assert_eq!(t.get(11), 1);
        assert_eq!(t.get(121), 1);
        // q ∏(1−qⁿ)²(1−q^{11n})² through q^20
        let mut poly = vec![0i64; 21];
        poly[1] = 1;
        for n in 1..=20 {
            for step in [n, n, 11 * n, 11 * n] {
                if step > 20 {
                    continue;
                }
                for i in (step..=20).rev() {
                    poly[i] -= poly[i - step];
                }
            }
        }
        for n in 1..=20 {
            assert_eq!(t.get(n), poly[n], "a_{n}");
        }
    }

    #[test]
    fn an_table_missing_prime() {
        let e = curve("11a");
        let ap = ap_table(&e, 10).unwrap();
        match an_table(11, &ap, 20) {
            Err(Error::MissingPrime(11)) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn multiplicativity_sampled() {
        let t = coefficient_table(&curve("14a"), 20_000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 500 {
            let m = rng.gen_range(1..150usize);
            let n = rng.gen_range(1..=(20_000 / m));
            if gcd(m as i64, n as i64) != 1 {
                continue;
            }
            assert_eq!(t.get(m * n), t.get(m) * t.get(n));
            checked += 1;
        }
    }

    #[test]
    fn ogg_report() {
        let r = check_ogg_pm1(&curve("11a")).unwrap();
        assert!(r.passed);
        assert_eq!(r.entries, vec![(11, 1)]);
        let r = check_ogg_pm1(&curve("14a")).unwrap();
        assert!(r.passed && r.entries.len() == 2);
        let c98 = CurveModel::new("98", [0, 0, 0, 1, 0], 98).unwrap();
        assert!(matches!(check_ogg_pm1(&c98), Err(Error::HypothesisNotMet(_))));
    }

    #[test]
    fn csv_roundtrip() {
        let t = ap_table(&curve("11a"), 100).unwrap();
        let text = ap_table_to_csv(&t);
        assert!(text.starts_with("p,kind,ap\n2,good,-2\n"));
        assert_eq!(text.lines().count(), 26);
        assert_eq!(ap_table_from_csv(&text).unwrap(), t);
        assert!(ap_table_from_csv("p,ap\n").is_err());
    }

    fn polygon_area(pts: &[Complex64]) -> f64 {
        let mut s = 0.0;
        for i in 0..pts.len() {
            let a = pts[i];
            let b = pts[(i + 1) % pts.len()];
            s += a.re * b.im - b.re * a.im;
        }
        0.5 * s.abs()
    }

    #[test]
    fn periods_match_invariants() {
        for l in ["11a", "14a", "15a", "37a"] {
            let c = curve(l);
            let lat = period_lattice(&c).unwrap();
            assert!(lat.legendre_residual() < 1e-9, "{l}");
            assert!(lat.area > 0.0 && lat.tau().im > 0.0);
            // g2 = c4/12 and g3 = c6/216 from lattice Eisenstein series
            let tau = lat.tau();
            let w = lat.omega1;
            let g2 = 4.0 * PI.powi(4) / (3.0 * w.powi(4)) * eisenstein_series(tau, 3, 240.0);
            let g3 = 8.0 * PI.powi(6) / (27.0 * w.powi(6)) * eisenstein_series(tau, 5, -504.0);
            let c4 = c.c4() as f64;
            let c6 = c.c6() as f64;
            assert!((g2 - c4 / 12.0).norm() < 1e-9 * (1.0 + c4.abs()), "{l} g2 {g2}");
            assert!((g3 - c6 / 216.0).norm() < 1e-9 * (1.0 + c6.abs()), "{l} g3 {g3}");
            let par = [
                Complex64::new(0.0, 0.0),
                Complex64::new(w, 0.0),
                w + lat.omega2,
                lat.omega2,
            ];
            assert!((polygon_area(&par) - lat.area).abs() < 1e-12);
        }
        let lat = period_lattice(&curve("11a")).unwrap();
        assert!((lat.omega1 - 1.269_209_304_279_553_4).abs() < 1e-10);
        assert!((lat.area - 1.851_543_623_456).abs() < 1e-9, "{lat:?}");
        let rect = period_lattice(&curve("37a")).unwrap();
        assert!(rect.omega2.re.abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn bsgs_random_primes(idx in 0usize..500) {
            let primes: Vec<u64> = primes_up_to(40_000).into_iter().filter(|&p| p > 10_000).collect();
            let p = primes[idx * 7 % primes.len()];
            let c = curve("37a");
            prop_assert_eq!(trace_by_bsgs(&c, p), trace_by_counting(&c, p));
        }
    }
}
