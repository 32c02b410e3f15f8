#![allow(dead_code)]

use ndarray::Array2;
use rand::Rng as _;

use pdsl::rng::Rng;

/// Central difference of `f` at `x` along one coordinate, step `h`.
pub fn central_difference(x: f64, h: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Relative error; magnitudes below `floor` compare against `floor` instead.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Smallest gradient a central difference with step `h` can resolve to
/// `rtol` when the function value is about `value`: the difference of two
/// values carries roundoff near `eps * |value|`, amplified by `1 / h`.
pub fn resolvable_gradient(value: f64, h: f64, rtol: f64) -> f64 {
    f64::EPSILON * value.abs().max(1.0) / h / rtol
}

pub fn uniform(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(lo..hi))
}

pub fn bernoulli(rows: usize, cols: usize, p: f64, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || if rng.random_bool(p) { 1.0 } else { 0.0 })
}

/// Every permutation of `0..k`, by Heap's algorithm.
pub fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn heap(n: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if n <= 1 {
            out.push(a.clone());
            return;
        }
        for i in 0..n - 1 {
            heap(n - 1, a, out);
            if n % 2 == 0 {
                a.swap(i, n - 1);
            } else {
                a.swap(0, n - 1);
            }
        }
        heap(n - 1, a, out);
    }
    let mut a: Vec<usize> = (0..k).collect();
    let mut out = Vec::new();
    heap(k, &mut a, &mut out);
    out
}

/// Exhaustive minimum of `Σ cost[i][perm[i]]`.
pub fn brute_force_assignment(cost: &[Vec<f64>]) -> f64 {
    permutations(cost.len())
        .iter()
        .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// `KL(N(mu, var) ‖ N(0, 1))` by composite Simpson integration of
/// `q(x) (ln q(x) − ln p(x))`.
pub fn kl_by_quadrature(mu: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let lo = (mu - 16.0 * sd).min(-16.0);
    let hi = (mu + 16.0 * sd).max(16.0);
    let steps = 400_000;
    let h = (hi - lo) / steps as f64;
    let integrand = |x: f64| {
        let log_q = -0.5 * (2.0 * std::f64::consts::PI * var).ln() - (x - mu).powi(2) / (2.0 * var);
        let log_p = -0.5 * (2.0 * std::f64::consts::PI).ln() - x * x / 2.0;
        log_q.exp() * (log_q - log_p)
    };
    let mut sum = integrand(lo) + integrand(hi);
    for i in 1..steps {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(lo + i as f64 * h);
    }
    sum * h / 3.0
}
