//! Right cosets of Γ₀(N) in SL₂(ℤ) and quadrature over X₀(N) as a union of
//! translated copies of the standard fundamental domain.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::arith::{divisors, ext_gcd, gamma0_index, gcd, is_squarefree, moebius};
use crate::curves::CoefficientTable;
use crate::eisenstein::{epstein, DivisorWeight, UHPoint};
use crate::error::{Error, Result};
use crate::lseries::{l_value, Pipeline, RankinSeries};
use crate::modular::{al_boost, atkin_lehner_matrix, eval_form, log_abs_delta_n, qlog_cyclotomic_sum, CuspFormEval};
use crate::quad::{exp_sinh, GaussLegendre, KahanSum};
use crate::specialfn::{gamma, EvalResult};

pub const DEFAULT_Y_CUT: f64 = 12.0;
pub const DEFAULT_ORDER: usize = 12;
/// Cusp forms at a cusp of width w decay like e^{-4πy/w}; per-coset cuts
/// are placed where this exponent reaches CUSP_DECAY_SPAN.
pub const CUSP_DECAY_SPAN: f64 = 48.0;
const FORM_TOL: f64 = 1e-13;
const INVARIANCE_TRIALS: usize = 5;
const INVARIANCE_TOL: f64 = 1e-7;

// ---------- coset representatives ----------

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct CosetRep {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl CosetRep {
    pub const IDENTITY: CosetRep = CosetRep { a: 1, b: 0, c: 0, d: 1 };

    pub fn matrix(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Least h > 0 with γ T^h γ^{-1} ∈ Γ₀(N): the period in x of z ↦ H(γz).
    pub fn cusp_width(&self, level: u64) -> u64 {
        let n = level as i128;
        let c2 = (self.c as i128 * self.c as i128).rem_euclid(n);
        let g = gcd(c2 as i64, level as i64) as u64;
        level / g
    }

    /// Whether g·γ^{-1} lies in Γ₀(N).
    pub fn contains(&self, level: u64, g: [i64; 4]) -> bool {
        let lower = g[2] as i128 * self.d as i128 - g[3] as i128 * self.c as i128;
        lower.rem_euclid(level as i128) == 0
    }
}

fn units_mod(n: i64) -> Vec<i64> {
    (1..n).filter(|&u| gcd(u, n) == 1).collect()
}

fn p1_canonical(c: i64, d: i64, n: i64, units: &[i64]) -> (i64, i64) {
    units
        .iter()
        .map(|&u| ((u * c).rem_euclid(n), (u * d).rem_euclid(n)))
        .min()
        .unwrap_or((c.rem_euclid(n), d.rem_euclid(n)))
}

fn lift_to_sl2(c0: i64, d0: i64, n: i64) -> CosetRep {
    if c0 == 0 {
        return CosetRep::IDENTITY;
    }
    let mut d = d0;
    while gcd(c0, d) != 1 {
        d += n;
    }
    let (g, u, v) = ext_gcd(d, c0);
    let (u, v) = if g < 0 { (-u, -v) } else { (u, v) };
    CosetRep { a: u, b: -v, c: c0, d }
}

/// One representative per right coset Γ₀(N)γ, enumerated through P¹(ℤ/N);
/// the identity comes first.
pub fn coset_reps(n: u64) -> Vec<CosetRep> {
    assert!(n >= 1, "coset_reps: level must be positive");
    if n == 1 {
        return vec![CosetRep::IDENTITY];
    }
    let ni = n as i64;
    let units = units_mod(ni);
    let mut classes = BTreeSet::new();
    for c in 0..ni {
        for d in 0..ni {
            if gcd(gcd(c, d), ni) == 1 {
                classes.insert(p1_canonical(c, d, ni, &units));
            }
        }
    }
    let reps: Vec<CosetRep> = classes.into_iter().map(|(c, d)| lift_to_sl2(c, d, ni)).collect();
    debug_assert_eq!(reps.len() as u64, gamma0_index(n));
    reps
}

/// Indices of the reps whose coset contains g.
pub fn matching_reps(level: u64, reps: &[CosetRep], g: [i64; 4]) -> Vec<usize> {
    reps.iter()
        .enumerate()
        .filter(|(_, r)| r.contains(level, g))
        .map(|(i, _)| i)
        .collect()
}

/// Random element of Γ₀(N) with entries of moderate size.
pub fn random_gamma0<R: Rng>(level: u64, rng: &mut R) -> [i64; 4] {
    let n = level as i64;
    loop {
        let c = n * rng.gen_range(-4..=4);
        let d = rng.gen_range(-30..=30);
        if gcd(c, d) != 1 {
            continue;
        }
        let (g, u, v) = ext_gcd(d, c);
        let (a, b) = if g < 0 { (-u, v) } else { (u, -v) };
        let k = rng.gen_range(-3..=3);
        return [a + k * c, b + k * d, c, d];
    }
}

// ---------- quadrature grid ----------

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Truncation {
    /// Every coset cut at y_cut.
    Uniform,
    /// Coset j cut at max(y_cut, w_j·CUSP_DECAY_SPAN/(4π)), w_j its cusp width.
    CuspWidth,
}

impl Truncation {
    pub fn as_str(self) -> &'static str {
        match self {
            Truncation::Uniform => "uniform",
            Truncation::CuspWidth => "cusp-width",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "uniform" => Some(Truncation::Uniform),
            "cusp-width" => Some(Truncation::CuspWidth),
            _ => None,
        }
    }
}

type Node = (UHPoint, f64);

/// Tensor Gauss–Legendre nodes on F = {|x| ≤ 1/2, |z| ≥ 1, y ≤ y_cut}, with
/// weights including the 1/y² of the hyperbolic measure, plus per-width
/// extensions above y_cut.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid {
    pub level: u64,
    pub reps: Vec<CosetRep>,
    pub nodes: Vec<Node>,
    pub y_cut: f64,
    pub depth: u32,
    pub order: usize,
    pub truncation: Truncation,
    pub widths: Vec<u64>,
    pub extensions: BTreeMap<u64, Vec<Node>>,
}

fn push_rect(out: &mut Vec<Node>, gl: &GaussLegendre, panels: usize, y0: f64, y1: f64) {
    for i in 0..panels {
        let x0 = -0.5 + i as f64 / panels as f64;
        let x1 = -0.5 + (i + 1) as f64 / panels as f64;
        for (x, wx) in gl.on_interval(x0, x1) {
            for (y, wy) in gl.on_interval(y0, y1) {
                out.push((UHPoint { x, y }, wx * wy / (y * y)));
            }
        }
    }
}

fn base_nodes(depth: u32, order: usize, y_cut: f64) -> Vec<Node> {
    let gl = GaussLegendre::new(order);
    let px = 1usize << depth;
    let mut out = Vec::new();
    // between the arc and y = 1: y = a(x) + t(1 - a(x))
    for i in 0..px {
        let x0 = -0.5 + i as f64 / px as f64;
        let x1 = -0.5 + (i + 1) as f64 / px as f64;
        for (x, wx) in gl.on_interval(x0, x1) {
            let a = (1.0 - x * x).sqrt();
            let h = 1.0 - a;
            for (t, wt) in gl.on_interval(0.0, 1.0) {
                let y = a + t * h;
                out.push((UHPoint { x, y }, wx * wt * h / (y * y)));
            }
        }
    }
    let mut lo = 1.0;
    let mut k = 0u32;
    while lo < y_cut {
        let hi = (2.0 * lo).min(y_cut);
        let panels = (px >> k.min(31)).max(1);
        push_rect(&mut out, &gl, panels, lo, hi);
        lo = hi;
        k += 1;
    }
    out
}

fn extension_nodes(order: usize, y_lo: f64, y_hi: f64) -> Vec<Node> {
    let gl = GaussLegendre::new(order);
    let mut out = Vec::new();
    let mut lo = y_lo;
    while lo < y_hi {
        let hi = (2.0 * lo).min(y_hi);
        push_rect(&mut out, &gl, 1, lo, hi);
        lo = hi;
    }
    out
}

pub fn cusp_cut(width: u64, y_cut: f64) -> f64 {
    y_cut.max(width as f64 * CUSP_DECAY_SPAN / (4.0 * PI))
}

impl QuadratureGrid {
    /// Grid with the default order and cusp-width truncation.
    pub fn new(level: u64, depth: u32, y_cut: f64) -> Result<Self> {
        Self::with_options(level, depth, DEFAULT_ORDER, y_cut, Truncation::CuspWidth)
    }

    pub fn with_options(level: u64, depth: u32, order: usize, y_cut: f64, truncation: Truncation) -> Result<Self> {
        if level == 0 {
            return Err(Error::Domain("level must be positive".into()));
        }
        if !(y_cut > 1.0) || !y_cut.is_finite() {
            return Err(Error::Domain(format!("y_cut = {y_cut} must exceed 1")));
        }
        if depth > 8 || !(2..=64).contains(&order) {
            return Err(Error::Domain(format!("unsupported depth {depth} / order {order}")));
        }
        let reps = coset_reps(level);
        let widths: Vec<u64> = reps.iter().map(|r| r.cusp_width(level)).collect();
        let mut extensions = BTreeMap::new();
        if truncation == Truncation::CuspWidth {
            for &w in &widths {
                let cut = cusp_cut(w, y_cut);
                if cut > y_cut && !extensions.contains_key(&w) {
                    extensions.insert(w, extension_nodes(order, y_cut, cut));
                }
            }
        }
        Ok(QuadratureGrid {
            level,
            reps,
            nodes: base_nodes(depth, order, y_cut),
            y_cut,
            depth,
            order,
            truncation,
            widths,
            extensions,
        })
    }

    /// The grid one depth level down (or four orders lower at depth 0),
    /// used for the refinement error estimate.
    pub fn coarser(&self) -> Result<Self> {
        if self.depth > 0 {
            Self::with_options(self.level, self.depth - 1, self.order, self.y_cut, self.truncation)
        } else {
            Self::with_options(self.level, 0, self.order.saturating_sub(4).max(2), self.y_cut, self.truncation)
        }
    }

    /// Truncation height used for rep j.
    pub fn rep_cut(&self, j: usize) -> f64 {
        match self.truncation {
            Truncation::Uniform => self.y_cut,
            Truncation::CuspWidth => cusp_cut(self.widths[j], self.y_cut),
        }
    }

    pub fn nodes_for_rep(&self, j: usize) -> impl Iterator<Item = &Node> {
        let ext: &[Node] = match self.truncation {
            Truncation::Uniform => &[],
            Truncation::CuspWidth => self.extensions.get(&self.widths[j]).map(|v| v.as_slice()).unwrap_or(&[]),
        };
        self.nodes.iter().chain(ext.iter())
    }

    pub fn node_count(&self) -> usize {
        (0..self.reps.len()).map(|j| self.nodes_for_rep(j).count()).sum()
    }

    /// Σ of base weights: the hyperbolic area of F below y_cut.
    pub fn weight_sum(&self) -> f64 {
        let mut k = KahanSum::new();
        for (_, w) in &self.nodes {
            k.add(*w);
        }
        k.value()
    }

    /// Text dump: `#` header lines, then one `x y weight` line per node.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# quadrature grid");
        let _ = writeln!(
            s,
            "# level {} depth {} order {} y_cut {} truncation {}",
            self.level,
            self.depth,
            self.order,
            self.y_cut,
            self.truncation.as_str()
        );
        let _ = writeln!(s, "# base");
        for (z, w) in &self.nodes {
            let _ = writeln!(s, "{} {} {}", z.x, z.y, w);
        }
        for (width, nodes) in &self.extensions {
            let _ = writeln!(s, "# extension {width}");
            for (z, w) in nodes {
                let _ = writeln!(s, "{} {} {}", z.x, z.y, w);
            }
        }
        s
    }

    pub fn restore(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::Domain(format!("grid dump: {m}"));
        let mut header: Option<(u64, u32, usize, f64, Truncation)> = None;
        let mut nodes = Vec::new();
        let mut extensions: BTreeMap<u64, Vec<Node>> = BTreeMap::new();
        let mut section: Option<u64> = None;
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let toks: Vec<&str> = rest.split_whitespace().collect();
                match toks.first().copied() {
                    Some("level") if toks.len() == 10 => {
                        let level = toks[1].parse().map_err(|_| bad("level"))?;
                        let depth = toks[3].parse().map_err(|_| bad("depth"))?;
                        let order = toks[5].parse().map_err(|_| bad("order"))?;
                        let y_cut = toks[7].parse().map_err(|_| bad("y_cut"))?;
                        let tr = Truncation::parse(toks[9]).ok_or_else(|| bad("truncation"))?;
                        header = Some((level, depth, order, y_cut, tr));
                    }
                    Some("base") => section = None,
                    Some("extension") if toks.len() == 2 => {
                        let w: u64 = toks[1].parse().map_err(|_| bad("extension width"))?;
                        extensions.entry(w).or_default();
                        section = Some(w);
                    }
                    _ => {}
                }
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad("node line"))?;
            if vals.len() != 3 {
                return Err(bad("node line needs three fields"));
            }
            let node = (UHPoint::new(vals[0], vals[1])?, vals[2]);
            match section {
                None => nodes.push(node),
                Some(w) => extensions.entry(w).or_default().push(node),
            }
        }
        let (level, depth, order, y_cut, truncation) = header.ok_or_else(|| bad("missing header"))?;
        let reps = coset_reps(level);
        let widths = reps.iter().map(|r| r.cusp_width(level)).collect();
        Ok(QuadratureGrid {
            level,
            reps,
            nodes,
            y_cut,
            depth,
            order,
            truncation,
            widths,
            extensions,
        })
    }
}

// ---------- invariant integration ----------

/// One component of an integral over X₀(N) with its error budget.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Integral {
    pub value: Complex64,
    /// Same integral on the coarser grid.
    pub coarse: Complex64,
    pub quadrature_error: f64,
    /// Estimated cusp tail above the per-coset cut, assuming decay at the cusp rate.
    pub tail_estimate: f64,
    pub rounding_bound: f64,
}

impl Integral {
    pub fn error_bound(&self) -> f64 {
        self.quadrature_error + self.tail_estimate + self.rounding_bound
    }

    pub fn to_eval(&self) -> EvalResult<Complex64> {
        EvalResult::new(self.value, self.error_bound())
    }

    fn scaled(&self, k: f64) -> Integral {
        Integral {
            value: self.value * k,
            coarse: self.coarse * k,
            quadrature_error: self.quadrature_error * k.abs(),
            tail_estimate: self.tail_estimate * k.abs(),
            rounding_bound: self.rounding_bound * k.abs(),
        }
    }
}

struct RawSum {
    values: Vec<Complex64>,
    mass: Vec<f64>,
    tail: Vec<f64>,
}

fn integrate_raw<H>(grid: &QuadratureGrid, h: &H, k: usize) -> Result<RawSum>
where
    H: Fn(UHPoint) -> Result<Vec<Complex64>> + Sync,
{
    let per_rep: Vec<Result<RawSum>> = (0..grid.reps.len())
        .into_par_iter()
        .map(|j| {
            let g = grid.reps[j].matrix();
            let cut = grid.rep_cut(j);
            let mut re = vec![KahanSum::new(); k];
            let mut im = vec![KahanSum::new(); k];
            let mut mass = vec![0.0; k];
            let mut top = vec![0.0f64; k];
            for (z, w) in grid.nodes_for_rep(j) {
                let v = h(z.act(g))?;
                if v.len() != k {
                    return Err(Error::Inconsistent(format!("integrand returned {} components, expected {k}", v.len())));
                }
                for i in 0..k {
                    re[i].add(w * v[i].re);
                    im[i].add(w * v[i].im);
                    mass[i] += (w * v[i].norm()).abs();
                    if z.y > 0.8 * cut {
                        top[i] = top[i].max(v[i].norm());
                    }
                }
            }
            let width = grid.widths[j] as f64;
            let tail_scale = (width / (4.0 * PI)).min(cut) / (cut * cut);
            Ok(RawSum {
                values: (0..k).map(|i| Complex64::new(re[i].value(), im[i].value())).collect(),
                mass,
                tail: top.iter().map(|t| t * tail_scale).collect(),
            })
        })
        .collect();
    let mut re = vec![KahanSum::new(); k];
    let mut im = vec![KahanSum::new(); k];
    let mut mass = vec![0.0; k];
    let mut tail = vec![0.0; k];
    for r in per_rep {
        let r = r?;
        for i in 0..k {
            re[i].add(r.values[i].re);
            im[i].add(r.values[i].im);
            mass[i] += r.mass[i];
            tail[i] += r.tail[i];
        }
    }
    Ok(RawSum {
        values: (0..k).map(|i| Complex64::new(re[i].value(), im[i].value())).collect(),
        mass,
        tail,
    })
}

/// Compares H(γz) with H(z) for a few random γ ∈ Γ₀(N) and points z.
pub fn check_invariance<H>(level: u64, h: &H, trials: usize, tol: f64) -> Result<()>
where
    H: Fn(UHPoint) -> Result<Vec<Complex64>> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2b_3c4d ^ level);
    for _ in 0..trials {
        let g = random_gamma0(level, &mut rng);
        let z = UHPoint {
            x: rng.gen_range(-0.5..0.5),
            y: rng.gen_range(0.4..1.5),
        };
        let a = h(z)?;
        let b = h(z.act(g))?;
        let mut worst = 0.0f64;
        for (u, v) in a.iter().zip(&b) {
            let scale = u.norm().max(v.norm()).max(1e-12);
            worst = worst.max((u - v).norm() / scale);
        }
        if !(worst <= tol) {
            return Err(Error::NotInvariant {
                a: g[0],
                b: g[1],
                c: g[2],
                d: g[3],
                deviation: worst,
            });
        }
    }
    Ok(())
}

/// Σ_j ∫_F H_i(γ_j z) dμ for every component i of a Γ₀(N)-invariant vector
/// integrand. The error estimate compares against the coarser grid.
pub fn integrate_invariant_many<H>(level: u64, h: H, k: usize, grid: &QuadratureGrid) -> Result<Vec<Integral>>
where
    H: Fn(UHPoint) -> Result<Vec<Complex64>> + Sync,
{
    if grid.level != level {
        return Err(Error::Domain(format!("grid is for level {}, not {level}", grid.level)));
    }
    check_invariance(level, &h, INVARIANCE_TRIALS, INVARIANCE_TOL)?;
    let fine = integrate_raw(grid, &h, k)?;
    let coarse = integrate_raw(&grid.coarser()?, &h, k)?;
    Ok((0..k)
        .map(|i| Integral {
            value: fine.values[i],
            coarse: coarse.values[i],
            quadrature_error: (fine.values[i] - coarse.values[i]).norm(),
            tail_estimate: fine.tail[i],
            rounding_bound: 64.0 * f64::EPSILON * fine.mass[i],
        })
        .collect())
}

pub fn integrate_invariant<H>(level: u64, h: H, grid: &QuadratureGrid) -> Result<EvalResult<Complex64>>
where
    H: Fn(UHPoint) -> Result<Complex64> + Sync,
{
    let r = integrate_invariant_many(level, |z| Ok(vec![h(z)?]), 1, grid)?;
    Ok(r[0].to_eval())
}

// ---------- integrands ----------

fn check_levels(f: &CuspFormEval, g: &CuspFormEval, level: u64) -> Result<()> {
    for l in [f.level, g.level] {
        if level % l != 0 {
            return Err(Error::HypothesisNotMet(format!("form level {l} does not divide {level}")));
        }
    }
    Ok(())
}

fn form_value(form: &CuspFormEval, z: UHPoint) -> Result<Complex64> {
    Ok(eval_form(form, z, FORM_TOL)?.value)
}

/// f(z)·conj(g(z))·y², the density of δ(f,g) against dμ.
fn delta_density(f: &CuspFormEval, g: &CuspFormEval, z: UHPoint) -> Result<Complex64> {
    Ok(form_value(f, z)? * form_value(g, z)?.conj() * (z.y * z.y))
}

/// Petersson product normalized by 1/[Γ : Γ₀(N)].
pub fn petersson_integral(f: &CuspFormEval, g: &CuspFormEval, grid: &QuadratureGrid) -> Result<Integral> {
    check_levels(f, g, grid.level)?;
    let r = integrate_invariant_many(grid.level, |z| Ok(vec![delta_density(f, g, z)?]), 1, grid)?;
    Ok(r[0].scaled(1.0 / gamma0_index(grid.level) as f64))
}

pub fn petersson(f: &CuspFormEval, g: &CuspFormEval, grid: &QuadratureGrid) -> Result<EvalResult<Complex64>> {
    Ok(petersson_integral(f, g, grid)?.to_eval())
}

/// Series side against quadrature side of the unfolded Rankin–Selberg integral.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct RsCheck {
    pub s: f64,
    pub lhs: f64,
    pub lhs_error: f64,
    pub lhs_pipeline: Pipeline,
    /// Right-hand sides, one per divisor weighting, in the order of `weights`.
    pub weights: Vec<DivisorWeight>,
    pub rhs: Vec<Integral>,
    pub resolved: DivisorWeight,
    pub diff: f64,
    pub rel_diff: f64,
}

impl RsCheck {
    pub fn rhs_for(&self, w: DivisorWeight) -> Option<&Integral> {
        self.weights.iter().position(|&x| x == w).map(|i| &self.rhs[i])
    }
}

/// lhs = 2(4π)^{-s-1}Γ(s+1)L_{f,g}(s); rhs = Σ_{d|N} μ(d)·w(d)·∫ δ(f,g) E(Nz/d, s)
/// with E the lattice Eisenstein series, for each weighting w. The weighting
/// whose rhs lands closest to lhs is reported as resolved.
pub fn rs_identity_check(
    f: &CuspFormEval,
    g: &CuspFormEval,
    rs: &RankinSeries,
    s: f64,
    grid: &QuadratureGrid,
) -> Result<RsCheck> {
    if !(s > 1.2 && s <= 3.0) {
        return Err(Error::Domain(format!("rs_identity_check: s = {s} outside (1.2, 3]")));
    }
    let level = grid.level;
    check_levels(f, g, level)?;
    if !is_squarefree(level) {
        return Err(Error::HypothesisNotMet(format!("level {level} is not square-free")));
    }
    let l = l_value(rs, s)?;
    let pref = 2.0 * (4.0 * PI).powf(-s - 1.0) * gamma(s + 1.0)?.value;
    let lhs = pref * l.value;
    let weights = vec![DivisorWeight::NdS, DivisorWeight::D2S, DivisorWeight::DS];
    let divs: Vec<(u64, i64)> = divisors(level)
        .into_iter()
        .map(|d| (d, moebius(d)))
        .filter(|&(_, m)| m != 0)
        .collect();
    let coeffs: Vec<Vec<f64>> = weights
        .iter()
        .map(|w| divs.iter().map(|&(d, m)| m as f64 * w.weight(level, d, s)).collect())
        .collect();
    let n = level as f64;
    let h = |z: UHPoint| -> Result<Vec<Complex64>> {
        let dens = delta_density(f, g, z)?;
        let mut e = Vec::with_capacity(divs.len());
        for &(d, _) in &divs {
            let w = UHPoint {
                x: n * z.x / d as f64,
                y: n * z.y / d as f64,
            };
            e.push(epstein(w, s)?.value);
        }
        Ok(coeffs
            .iter()
            .map(|c| dens * c.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>())
            .collect())
    };
    let rhs = integrate_invariant_many(level, h, weights.len(), grid)?;
    let (best, diff) = rhs
        .iter()
        .enumerate()
        .map(|(i, r)| (i, (r.value.re - lhs).abs()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one weighting");
    Ok(RsCheck {
        s,
        lhs,
        lhs_error: pref * l.error,
        lhs_pipeline: l.pipeline,
        resolved: weights[best],
        weights,
        rhs,
        diff,
        rel_diff: diff / lhs.abs(),
    })
}

/// Both sides of ∫_0^∞∫_{|x|≤1/2} y^s f·conj(g) dx dy = (4π)^{-s-1}Γ(s+1)Σ a_n b_n n^{-s-1},
/// truncated at the same n_max.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct UnfoldingCheck {
    pub s: f64,
    pub series: f64,
    pub integral: f64,
    pub integral_error: f64,
    pub rel_diff: f64,
}

pub fn unfolding_check(af: &CoefficientTable, bg: &CoefficientTable, s: f64, n_max: usize) -> Result<UnfoldingCheck> {
    let avail = af.nmax().min(bg.nmax());
    if n_max > avail {
        return Err(Error::TableTooShort {
            required: n_max,
            available: avail,
        });
    }
    if !(s > 0.0) {
        return Err(Error::Domain(format!("unfolding_check: s = {s} must be positive")));
    }
    let c: Vec<f64> = (0..=n_max).map(|n| (af.get(n) * bg.get(n)) as f64).collect();
    let mut series = KahanSum::new();
    for n in (1..=n_max).rev() {
        series.add(c[n] * (n as f64).powf(-s - 1.0));
    }
    let series = (4.0 * PI).powf(-s - 1.0) * gamma(s + 1.0)?.value * series.value();
    let (integral, err) = exp_sinh(
        0.0,
        |y| {
            let q = (-4.0 * PI * y).exp();
            let mut qn = 1.0;
            let mut acc = 0.0;
            for cn in c.iter().skip(1) {
                qn *= q;
                if qn < 1e-300 {
                    break;
                }
                acc += cn * qn;
            }
            y.powf(s) * acc
        },
        1e-14,
    );
    Ok(UnfoldingCheck {
        s,
        series,
        integral,
        integral_error: err,
        rel_diff: (series - integral).abs() / series.abs(),
    })
}

/// −(π/3)·∫_{X₀(N)} log|Δ_N(z)|·f(z)·conj(g(z)) dx dy.
pub fn regulator_integral(f: &CuspFormEval, g: &CuspFormEval, grid: &QuadratureGrid) -> Result<Integral> {
    let level = grid.level;
    check_levels(f, g, level)?;
    if !is_squarefree(level) {
        return Err(Error::HypothesisNotMet(format!("level {level} is not square-free")));
    }
    let h = |z: UHPoint| -> Result<Vec<Complex64>> {
        let ld = log_abs_delta_n(z, level)?.value;
        Ok(vec![delta_density(f, g, z)? * ld])
    };
    let r = integrate_invariant_many(level, h, 1, grid)?;
    Ok(r[0].scaled(-PI / 3.0))
}

/// Σ_{(k,N)=1} qlog(z, e^{2πik/N}) at arbitrary z: the point is boosted by
/// Γ₀(N) and the Atkin–Lehner involutions, and the sum transported back via
/// S(W_Q z) = μ(Q)·S(z) + c_Q, with c_Q measured once per Q.
#[derive(Clone, Debug, PartialEq)]
pub struct CyclotomicQlog {
    pub level: u64,
    pub constants: BTreeMap<u64, f64>,
}

impl CyclotomicQlog {
    pub fn new(level: u64) -> Result<Self> {
        if level <= 1 {
            return Err(Error::Domain("cyclotomic q-log sum needs N > 1".into()));
        }
        if !is_squarefree(level) {
            return Err(Error::HypothesisNotMet(format!("level {level} is not square-free")));
        }
        let mut constants = BTreeMap::new();
        for q in divisors(level).into_iter().filter(|&q| q > 1) {
            let m = atkin_lehner_matrix(level, q, 1, 1)
                .ok_or_else(|| Error::Inconsistent(format!("no Atkin–Lehner matrix for Q = {q}")))?;
            let y0 = (q as f64).sqrt() / level as f64;
            let u = UHPoint {
                x: -(q as f64) / level as f64 + 0.3 * y0,
                y: y0,
            };
            let c = qlog_cyclotomic_sum(u.act(m), level)? - moebius(q) as f64 * qlog_cyclotomic_sum(u, level)?;
            constants.insert(q, c);
        }
        Ok(CyclotomicQlog { level, constants })
    }

    pub fn eval(&self, z: UHPoint) -> Result<f64> {
        let b = al_boost(self.level, z)?;
        let s = qlog_cyclotomic_sum(b.boosted, self.level)?;
        let q = b.transport.q;
        if q == 1 {
            return Ok(s);
        }
        Ok(moebius(q) as f64 * (s - self.constants[&q]))
    }
}

/// Σ_{(k,N)=1} (1/2πi)∫_{X₀(N)} qlog(z, ξ^k)·f·conj(g)·(dq/q)(dq̄/q̄)
/// = −4π·∫ Σ_k qlog(z, ξ^k)·f(z)·conj(g(z)) dx dy.
pub fn cnf_rhs(f: &CuspFormEval, g: &CuspFormEval, grid: &QuadratureGrid) -> Result<Integral> {
    let level = grid.level;
    if level <= 1 {
        return Err(Error::Domain("cnf_rhs: N = 1 has no primitive residues beyond k = 1".into()));
    }
    check_levels(f, g, level)?;
    let ql = CyclotomicQlog::new(level)?;
    let h = |z: UHPoint| -> Result<Vec<Complex64>> { Ok(vec![delta_density(f, g, z)? * ql.eval(z)?]) };
    let r = integrate_invariant_many(level, h, 1, grid)?;
    Ok(r[0].scaled(-4.0 * PI))
}
