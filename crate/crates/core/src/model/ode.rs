//! Fixed-step classical Runge–Kutta integration over any state that supports
//! linear combinations: plain numbers, matrices, or tape variables.

use ndarray::Array2;

use crate::autodiff::Var;
use crate::error::Result;

pub trait OdeState: Sized {
    /// `Σ coeff_i * state_i`.
    fn combine(terms: &[(&Self, f64)]) -> Result<Self>;
}

impl OdeState for f64 {
    fn combine(terms: &[(&Self, f64)]) -> Result<Self> {
        Ok(terms.iter().map(|(x, k)| **x * k).sum())
    }
}

impl OdeState for Array2<f64> {
    fn combine(terms: &[(&Self, f64)]) -> Result<Self> {
        let mut out = Array2::zeros(terms[0].0.dim());
        for (x, k) in terms {
            out.scaled_add(*k, *x);
        }
        Ok(out)
    }
}

impl OdeState for Var<'_> {
    fn combine(terms: &[(&Self, f64)]) -> Result<Self> {
        let owned: Vec<_> = terms.iter().map(|(v, k)| (**v, *k)).collect();
        Var::lincomb(&owned)
    }
}

/// One RK4 step of length `dt` for the autonomous system `dh/dt = f(h)`.
pub fn rk4_step<S, F>(h: &S, dt: f64, f: &mut F) -> Result<S>
where
    S: OdeState,
    F: FnMut(&S) -> Result<S>,
{
    let k1 = f(h)?;
    let k2 = f(&S::combine(&[(h, 1.0), (&k1, dt / 2.0)])?)?;
    let k3 = f(&S::combine(&[(h, 1.0), (&k2, dt / 2.0)])?)?;
    let k4 = f(&S::combine(&[(h, 1.0), (&k3, dt)])?)?;
    S::combine(&[
        (h, 1.0),
        (&k1, dt / 6.0),
        (&k2, dt / 3.0),
        (&k3, dt / 3.0),
        (&k4, dt / 6.0),
    ])
}

/// `steps` RK4 steps of length `dt` from `h0`.
pub fn rk4<S, F>(h0: S, dt: f64, steps: usize, mut f: F) -> Result<S>
where
    S: OdeState,
    F: FnMut(&S) -> Result<S>,
{
    let mut h = h0;
    for _ in 0..steps {
        h = rk4_step(&h, dt, &mut f)?;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn unit_step_on_exponential() {
        // stages 1, 1.5, 1.75, 2.75
        let h = rk4(1.0, 1.0, 1, |h: &f64| Ok(*h)).unwrap();
        assert_abs_diff_eq!(h, 2.708_333_333_333_333, epsilon = 1e-12);
    }

    #[test]
    fn fourth_order_convergence() {
        let e = std::f64::consts::E;
        let err = |dt: f64| (e - rk4(1.0, dt, (1.0 / dt).round() as usize, |h: &f64| Ok(*h)).unwrap()).abs();
        for dt in [0.5, 0.25, 0.125] {
            let ratio = err(dt) / err(dt / 2.0);
            assert!((12.0..=20.0).contains(&ratio), "dt={dt}: {ratio}");
        }
    }

    #[test]
    fn zero_field_is_identity() {
        let h0 = ndarray::array![[1.0, -2.0], [0.5, 3.0]];
        let h = rk4(h0.clone(), 1.0, 3, |h: &Array2<f64>| Ok(Array2::zeros(h.dim()))).unwrap();
        assert_eq!(h, h0);
    }
}
