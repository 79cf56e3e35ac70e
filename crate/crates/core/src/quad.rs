//! One-dimensional quadrature rules shared by the evaluators.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Rule with `m` points, computed by Newton iteration on P_m.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1);
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        for i in 0..(m + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// ∫_c^∞ f(w) dw for f decaying at least exponentially, by the exp-sinh
/// substitution w = c + exp(π/2 · sinh u). Returns (value, error estimate),
/// the estimate being the change between step h and h/2.
pub fn exp_sinh<F: FnMut(f64) -> f64>(c: f64, mut f: F, tol: f64) -> (f64, f64) {
    let eval = |u: f64, f: &mut F| -> f64 {
        let e = (0.5 * PI * u.sinh()).exp();
        let w = c + e;
        let jac = 0.5 * PI * u.cosh() * e;
        if jac == 0.0 || !w.is_finite() {
            return 0.0;
        }
        let v = f(w);
        if v == 0.0 {
            0.0
        } else {
            v * jac
        }
    };
    let mut h = 0.5;
    let u_max = 4.5;
    let n = (u_max / h) as i64;
    let mut sum = eval(0.0, &mut f);
    for j in 1..=n {
        let u = j as f64 * h;
        sum += eval(u, &mut f) + eval(-u, &mut f);
    }
    let mut prev = sum * h;
    let mut err = f64::INFINITY;
    for _ in 0..7 {
        h *= 0.5;
        let n = (u_max / h) as i64;
        let mut odd = 0.0;
        let mut j = 1;
        while j <= n {
            let u = j as f64 * h;
            odd += eval(u, &mut f) + eval(-u, &mut f);
            j += 2;
        }
        sum += odd;
        let cur = sum * h;
        err = (cur - prev).abs();
        prev = cur;
        if err <= tol * cur.abs().max(1e-300) {
            break;
        }
    }
    (prev, err)
}

/// Kahan–Babuska compensated accumulator; summation order is the caller's.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
