//! Forward ops on [`Var`] and their local derivatives.

use std::sync::Arc;

use ndarray::linalg::general_mat_mul;
use ndarray::{concatenate, s, Array2, ArrayView2, Axis, Zip};

use super::tape::{accumulate, reduce_to, Node, Op, Var};
use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn broadcastable(a: (usize, usize), b: (usize, usize)) -> bool {
    b == a || b == (1, 1) || b == (1, a.1) || b == (a.0, 1)
}

impl<'t> Var<'t> {
    fn unary(
        self,
        name: &'static str,
        op: Op,
        f: impl Fn(&Array2<f64>) -> Array2<f64>,
    ) -> Result<Var<'t>> {
        let (value, rg) = {
            let nodes = self.tape.nodes.borrow();
            let n = &nodes[self.id];
            (f(&n.value), n.requires_grad)
        };
        self.tape.push(name, value, op, rg)
    }

    fn binary_broadcast(
        self,
        other: Var<'t>,
        name: &'static str,
        op: Op,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Var<'t>> {
        let (value, rg) = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id], &nodes[other.id]);
            if !broadcastable(a.value.dim(), b.value.dim()) {
                return Err(Error::shape(
                    name,
                    format!("{:?} vs {:?}", a.value.dim(), b.value.dim()),
                ));
            }
            let bv = b.value.broadcast(a.value.dim()).expect("checked broadcast");
            let mut out = a.value.clone();
            Zip::from(&mut out).and(&bv).for_each(|x, &y| *x = f(*x, y));
            (out, a.requires_grad || b.requires_grad)
        };
        self.tape.push(name, value, op, rg)
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        let (value, rg) = {
            let nodes = self.tape.nodes.borrow();
            let (a, b) = (&nodes[self.id], &nodes[other.id]);
            if a.value.ncols() != b.value.nrows() {
                return Err(Error::shape(
                    "matmul",
                    format!("{:?} x {:?}", a.value.dim(), b.value.dim()),
                ));
            }
            (a.value.dot(&b.value), a.requires_grad || b.requires_grad)
        };
        self.tape
            .push("matmul", value, Op::MatMul(self.id, other.id), rg)
    }

    /// Element-wise sum; `other` may be a row vector, column vector or scalar.
    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary_broadcast(other, "add", Op::Add(self.id, other.id), |a, b| a + b)
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary_broadcast(other, "sub", Op::Sub(self.id, other.id), |a, b| a - b)
    }

    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary_broadcast(other, "elementwise_mul", Op::Mul(self.id, other.id), |a, b| {
            a * b
        })
    }

    pub fn scale(self, k: f64) -> Result<Var<'t>> {
        self.unary("scale", Op::Scale(self.id, k), |a| a * k)
    }

    pub fn add_scalar(self, k: f64) -> Result<Var<'t>> {
        self.unary("add_scalar", Op::AddScalar(self.id), |a| a + k)
    }

    /// `k - self`.
    pub fn rsub_scalar(self, k: f64) -> Result<Var<'t>> {
        self.scale(-1.0)?.add_scalar(k)
    }

    /// `Σ coeff_i * term_i` over same-shape terms, recorded as one node.
    pub fn lincomb(terms: &[(Var<'t>, f64)]) -> Result<Var<'t>> {
        let (first, _) = *terms
            .first()
            .ok_or_else(|| Error::shape("lincomb", "no terms"))?;
        let tape = first.tape;
        let (value, rg) = {
            let nodes = tape.nodes.borrow();
            let shape = nodes[first.id].value.dim();
            let mut out = &nodes[first.id].value * terms[0].1;
            let mut rg = false;
            for (i, (v, k)) in terms.iter().enumerate() {
                let n = &nodes[v.id];
                if n.value.dim() != shape {
                    return Err(Error::shape(
                        "lincomb",
                        format!("{:?} vs {:?}", n.value.dim(), shape),
                    ));
                }
                if i > 0 {
                    out.scaled_add(*k, &n.value);
                }
                rg |= n.requires_grad;
            }
            (out, rg)
        };
        let op = Op::LinComb(terms.iter().map(|(v, k)| (v.id, *k)).collect());
        tape.push("lincomb", value, op, rg)
    }

    pub fn concat_cols(parts: &[Var<'t>]) -> Result<Var<'t>> {
        let first = *parts
            .first()
            .ok_or_else(|| Error::shape("concat_cols", "no inputs"))?;
        let tape = first.tape;
        let (value, rg) = {
            let nodes = tape.nodes.borrow();
            let views: Vec<ArrayView2<f64>> = parts.iter().map(|p| nodes[p.id].value.view()).collect();
            let value = concatenate(Axis(1), &views).map_err(|e| {
                Error::shape("concat_cols", e.to_string())
            })?;
            (value, parts.iter().any(|p| nodes[p.id].requires_grad))
        };
        let op = Op::ConcatCols(parts.iter().map(|p| p.id).collect());
        tape.push("concat_cols", value, op, rg)
    }

    /// Columns `start..end`.
    pub fn slice_cols(self, start: usize, end: usize) -> Result<Var<'t>> {
        let (_, c) = self.shape();
        if start > end || end > c {
            return Err(Error::shape("slice_cols", format!("{start}..{end} of {c} columns")));
        }
        self.unary("slice_cols", Op::SliceCols(self.id, start), |a| {
            a.slice(s![.., start..end]).to_owned()
        })
    }

    pub fn sigmoid(self) -> Result<Var<'t>> {
        self.unary("sigmoid", Op::Sigmoid(self.id), |a| a.mapv(sigmoid))
    }

    pub fn tanh(self) -> Result<Var<'t>> {
        self.unary("tanh", Op::Tanh(self.id), |a| a.mapv(fast_tanh))
    }

    pub fn relu(self) -> Result<Var<'t>> {
        self.unary("relu", Op::Relu(self.id), |a| a.mapv(|x| x.max(0.0)))
    }

    pub fn exp(self) -> Result<Var<'t>> {
        self.unary("exp", Op::Exp(self.id), |a| a.mapv(f64::exp))
    }

    pub fn log(self) -> Result<Var<'t>> {
        self.unary("log", Op::Log(self.id), |a| a.mapv(f64::ln))
    }

    pub fn square(self) -> Result<Var<'t>> {
        self.unary("square", Op::Square(self.id), |a| a.mapv(|x| x * x))
    }

    /// Sum of all entries, 1x1.
    pub fn sum(self) -> Result<Var<'t>> {
        self.unary("sum", Op::Sum(self.id), |a| Array2::from_elem((1, 1), a.sum()))
    }

    pub fn mean(self) -> Result<Var<'t>> {
        self.unary("mean", Op::Mean(self.id), |a| {
            Array2::from_elem((1, 1), a.sum() / a.len() as f64)
        })
    }

    /// `ln Σ exp(x)` over all entries, 1x1.
    pub fn logsumexp(self) -> Result<Var<'t>> {
        self.unary("logsumexp", Op::LogSumExp(self.id), |a| {
            let m = a.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let s: f64 = a.iter().map(|&x| (x - m).exp()).sum();
            Array2::from_elem((1, 1), m + s.ln())
        })
    }

    /// Clip into `[lo, hi]`; the gradient is zero where clipping is active.
    pub fn clamp(self, lo: f64, hi: f64) -> Result<Var<'t>> {
        self.unary("clamp", Op::Clamp(self.id, lo, hi), |a| a.mapv(|x| x.clamp(lo, hi)))
    }

    /// Row-major reshape.
    pub fn reshape(self, rows: usize, cols: usize) -> Result<Var<'t>> {
        let (r, c) = self.shape();
        if r * c != rows * cols {
            return Err(Error::shape(
                "reshape",
                format!("{r}x{c} into {rows}x{cols}"),
            ));
        }
        self.unary("reshape", Op::Reshape(self.id), |a| {
            let flat: Vec<f64> = a.iter().copied().collect();
            Array2::from_shape_vec((rows, cols), flat).unwrap()
        })
    }

    /// Apply the normalized adjacency to every stacked block of `n` rows.
    pub fn propagate(self, adj: &Arc<NormalizedAdjacency>) -> Result<Var<'t>> {
        let n = adj.node_count();
        let (r, _) = self.shape();
        if r % n != 0 {
            return Err(Error::shape(
                "propagate",
                format!("{r} rows is not a multiple of {n} nodes"),
            ));
        }
        self.unary("propagate", Op::Propagate(self.id, Arc::clone(adj)), |a| {
            let mut out = Array2::zeros(a.dim());
            adj.apply_blocks_acc(a.view(), out.view_mut());
            out
        })
    }
}

/// Push the adjoint `g` of node `id` into its inputs, reusing its buffer
/// where the local derivative is element-wise.
pub(crate) fn backprop(
    nodes: &[Node],
    id: usize,
    mut g: Array2<f64>,
    grads: &mut [Option<Array2<f64>>],
) {
    let node = &nodes[id];
    let val = |i: usize| &nodes[i].value;
    let wants = |i: usize| nodes[i].requires_grad;
    let send = |grads: &mut [Option<Array2<f64>>], i: usize, d: Array2<f64>| {
        if nodes[i].requires_grad {
            accumulate(&mut grads[i], d);
        }
    };
    match &node.op {
        Op::Leaf => {}
        Op::MatMul(a, b) => {
            if wants(*a) {
                accumulate_product(&mut grads[*a], g.view(), val(*b).t());
            }
            if wants(*b) {
                accumulate_product(&mut grads[*b], val(*a).t(), g.view());
            }
        }
        Op::Add(a, b) | Op::Sub(a, b) => {
            if wants(*b) {
                let r = reduce_to(&g, val(*b).dim());
                send(grads, *b, if matches!(node.op, Op::Sub(..)) { -r } else { r });
            }
            send(grads, *a, g);
        }
        Op::Mul(a, b) => {
            let (av, bv) = (val(*a), val(*b));
            if wants(*b) {
                send(grads, *b, reduce_to(&(&g * av), bv.dim()));
            }
            if wants(*a) {
                g *= &bv.broadcast(av.dim()).unwrap();
                send(grads, *a, g);
            }
        }
        Op::Scale(a, k) => {
            g *= *k;
            send(grads, *a, g);
        }
        Op::AddScalar(a) => send(grads, *a, g),
        Op::LinComb(terms) => {
            let wanted: Vec<(usize, f64)> = terms.iter().copied().filter(|&(t, _)| wants(t)).collect();
            if let Some((&(last, k_last), rest)) = wanted.split_last() {
                for &(t, k) in rest {
                    match &mut grads[t] {
                        Some(acc) => acc.scaled_add(k, &g),
                        slot => *slot = Some(if k == 1.0 { g.clone() } else { &g * k }),
                    }
                }
                if k_last != 1.0 {
                    g *= k_last;
                }
                send(grads, last, g);
            }
        }
        Op::ConcatCols(parts) => {
            let mut start = 0;
            for &p in parts {
                let w = val(p).ncols();
                if wants(p) {
                    send(grads, p, g.slice(s![.., start..start + w]).to_owned());
                }
                start += w;
            }
        }
        Op::SliceCols(a, start) => {
            let mut full = Array2::zeros(val(*a).dim());
            full.slice_mut(s![.., *start..*start + g.ncols()]).assign(&g);
            send(grads, *a, full);
        }
        Op::Sigmoid(a) => {
            g.zip_mut_with(&node.value, |g, &y| *g *= y * (1.0 - y));
            send(grads, *a, g);
        }
        Op::Tanh(a) => {
            g.zip_mut_with(&node.value, |g, &y| *g *= 1.0 - y * y);
            send(grads, *a, g);
        }
        Op::Relu(a) => {
            g.zip_mut_with(val(*a), |g, &x| {
                if x <= 0.0 {
                    *g = 0.0
                }
            });
            send(grads, *a, g);
        }
        Op::Exp(a) => {
            g *= &node.value;
            send(grads, *a, g);
        }
        Op::Log(a) => {
            g /= val(*a);
            send(grads, *a, g);
        }
        Op::Square(a) => {
            g.zip_mut_with(val(*a), |g, &x| *g *= 2.0 * x);
            send(grads, *a, g);
        }
        Op::Sum(a) => send(grads, *a, Array2::from_elem(val(*a).dim(), g[[0, 0]])),
        Op::Mean(a) => {
            let x = val(*a);
            send(grads, *a, Array2::from_elem(x.dim(), g[[0, 0]] / x.len() as f64));
        }
        Op::LogSumExp(a) => {
            let lse = node.value[[0, 0]];
            let scale = g[[0, 0]];
            send(grads, *a, val(*a).mapv(|x| scale * (x - lse).exp()));
        }
        Op::Clamp(a, lo, hi) => {
            g.zip_mut_with(val(*a), |g, &x| {
                if x < *lo || x > *hi {
                    *g = 0.0
                }
            });
            send(grads, *a, g);
        }
        Op::Reshape(a) => {
            let dim = val(*a).dim();
            let d = if g.is_standard_layout() {
                g.into_shape_with_order(dim).unwrap()
            } else {
                Array2::from_shape_vec(dim, g.iter().copied().collect()).unwrap()
            };
            send(grads, *a, d);
        }
        Op::Propagate(a, adj) => {
            if wants(*a) {
                let slot = grads[*a].get_or_insert_with(|| Array2::zeros(g.dim()));
                adj.apply_transpose_blocks_acc(g.view(), slot.view_mut());
            }
        }
    }
}

/// `slot += lhs · rhs`, writing straight into an existing adjoint.
fn accumulate_product(slot: &mut Option<Array2<f64>>, lhs: ArrayView2<f64>, rhs: ArrayView2<f64>) {
    match slot {
        Some(acc) => general_mat_mul(1.0, &lhs, &rhs, 1.0, acc),
        None => *slot = Some(lhs.dot(&rhs)),
    }
}

// Within a few ulp of libm tanh at less than half the cost.
fn fast_tanh(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.02 {
        let x2 = x * x;
        return x * (1.0 + x2 * (-1.0 / 3.0 + x2 * (2.0 / 15.0 + x2 * (-17.0 / 315.0 + x2 * 62.0 / 2835.0))));
    }
    let e = (-2.0 * a).exp();
    ((1.0 - e) / (1.0 + e)).copysign(x)
}

#[cfg(test)]
mod tests {
    use super::super::Tape;
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use ndarray::array;

    #[test]
    fn forward_anchors() {
        let t = Tape::new();
        assert_eq!(t.scalar(0.0).sigmoid().unwrap().item(), 0.5);
        assert_abs_diff_eq!(
            t.row(&[0.0, 0.0]).logsumexp().unwrap().item(),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        let x = t.constant(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]);
        let eye = t.constant(Array2::eye(3));
        assert_eq!(eye.matmul(x).unwrap().value(), x.value());
    }

    #[test]
    fn quadratic_gradient() {
        let t = Tape::new();
        let x = t.var(array![[1.0, 2.0]]);
        let loss = x.square().unwrap().sum().unwrap();
        let g = t.backward(loss).unwrap();
        assert_eq!(g.get(x).unwrap(), &array![[2.0, 4.0]]);
    }

    #[test]
    fn sigmoid_slope_at_zero() {
        let t = Tape::new();
        let w = t.var(array![[0.0]]);
        let one = t.scalar(1.0);
        let loss = w.mul(one).unwrap().sigmoid().unwrap();
        let g = t.backward(loss).unwrap();
        assert_abs_diff_eq!(g.get(w).unwrap()[[0, 0]], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn errors() {
        let t = Tape::new();
        let a = t.var(Array2::zeros((2, 3)));
        let b = t.var(Array2::zeros((2, 3)));
        assert!(matches!(a.matmul(b), Err(Error::Shape { op: "matmul", .. })));
        assert!(matches!(
            a.add(t.var(Array2::zeros((3, 1)))),
            Err(Error::Shape { op: "add", .. })
        ));
        assert!(matches!(a.log(), Err(Error::NonFinite { op: "log" })));
        assert!(matches!(t.backward(a), Err(Error::NonScalarLoss { rows: 2, cols: 3 })));
        assert!(a.reshape(3, 3).is_err());
    }

    #[test]
    fn constants_get_no_gradient() {
        let t = Tape::new();
        let c = t.constant(array![[2.0]]);
        let x = t.var(array![[3.0]]);
        let loss = c.mul(x).unwrap().sum().unwrap();
        let g = t.backward(loss).unwrap();
        assert!(g.get(c).is_none());
        assert_eq!(g.get(x).unwrap()[[0, 0]], 2.0);
    }

    #[test]
    fn broadcast_reductions() {
        let t = Tape::new();
        let x = t.var(Array2::ones((3, 2)));
        let row = t.var(array![[1.0, 2.0]]);
        let col = t.var(array![[1.0], [2.0], [3.0]]);
        let loss = x.add(row).unwrap().mul(col).unwrap().sum().unwrap();
        let g = t.backward(loss).unwrap();
        assert_eq!(g.get(row).unwrap(), &array![[6.0, 6.0]]);
        // d/dcol = row sums of (x + row) = 2 + 3 = 5
        assert_eq!(g.get(col).unwrap(), &array![[5.0], [5.0], [5.0]]);
    }

    #[test]
    fn fast_tanh_matches_libm() {
        for i in -4000..=4000 {
            let x = i as f64 / 100.0;
            assert_abs_diff_eq!(fast_tanh(x), x.tanh(), epsilon = 1e-15);
            let y = i as f64 * 1e-5;
            assert_relative_eq!(fast_tanh(y), y.tanh(), max_relative = 1e-14);
        }
        assert_eq!(fast_tanh(0.0), 0.0);
        assert_eq!(fast_tanh(1e3), 1.0);
        assert_eq!(fast_tanh(-1e3), -1.0);
        assert!(fast_tanh(f64::NAN).is_nan());
    }
}
