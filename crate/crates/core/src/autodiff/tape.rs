use std::cell::RefCell;
use std::sync::Arc;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};
use crate::graph::NormalizedAdjacency;

#[derive(Clone)]
pub(crate) enum Op {
    Leaf,
    MatMul(usize, usize),
    /// `a + b` with `b` broadcast when it is a row, column or scalar.
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddScalar(usize),
    /// Weighted sum of same-shape inputs.
    LinComb(Vec<(usize, f64)>),
    ConcatCols(Vec<usize>),
    SliceCols(usize, usize),
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    Exp(usize),
    Log(usize),
    Square(usize),
    Sum(usize),
    Mean(usize),
    LogSumExp(usize),
    Clamp(usize, f64, f64),
    Reshape(usize),
    Propagate(usize, Arc<NormalizedAdjacency>),
}

pub(crate) struct Node {
    pub value: Array2<f64>,
    pub op: Op,
    pub requires_grad: bool,
}

/// Records forward computations for a single backward pass.
///
/// Not `Sync`: one tape per thread. Reuse a tape with [`Tape::reset`] once the
/// gradients of the previous loss have been read.
#[derive(Default)]
pub struct Tape {
    pub(crate) nodes: RefCell<Vec<Node>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    pub(crate) tape: &'t Tape,
    pub(crate) id: usize,
}

impl std::fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let (r, c) = self.shape();
        write!(f, "Var#{}({r}x{c})", self.id)
    }
}

/// Adjoints produced by [`Tape::backward`], indexed by variable.
pub struct Gradients {
    grads: Vec<Option<Array2<f64>>>,
}

impl Gradients {
    pub fn get(&self, v: Var<'_>) -> Option<&Array2<f64>> {
        self.grads.get(v.id).and_then(Option::as_ref)
    }

    pub(crate) fn take(&mut self, v: Var<'_>) -> Option<Array2<f64>> {
        self.grads.get_mut(v.id).and_then(Option::take)
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn reset(&mut self) {
        self.nodes.get_mut().clear();
    }

    /// A leaf that receives a gradient.
    pub fn var(&self, value: Array2<f64>) -> Var<'_> {
        self.push_unchecked(value, Op::Leaf, true)
    }

    /// A leaf treated as a constant.
    pub fn constant(&self, value: Array2<f64>) -> Var<'_> {
        self.push_unchecked(value, Op::Leaf, false)
    }

    pub fn row(&self, values: &[f64]) -> Var<'_> {
        self.constant(Array2::from_shape_vec((1, values.len()), values.to_vec()).unwrap())
    }

    pub fn scalar(&self, value: f64) -> Var<'_> {
        self.constant(Array2::from_elem((1, 1), value))
    }

    fn push_unchecked(&self, value: Array2<f64>, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    pub(crate) fn push(
        &self,
        name: &'static str,
        value: Array2<f64>,
        op: Op,
        requires_grad: bool,
    ) -> Result<Var<'_>> {
        if !all_finite(&value) {
            return Err(Error::NonFinite { op: name });
        }
        Ok(self.push_unchecked(value, op, requires_grad))
    }

    /// Reverse sweep from a 1x1 `loss`.
    pub fn backward(&self, loss: Var<'_>) -> Result<Gradients> {
        let nodes = self.nodes.borrow();
        let (rows, cols) = nodes[loss.id].value.dim();
        if (rows, cols) != (1, 1) {
            return Err(Error::NonScalarLoss { rows, cols });
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; loss.id + 1];
        grads[loss.id] = Some(Array2::ones((1, 1)));

        for id in (0..=loss.id).rev() {
            let node = &nodes[id];
            if !node.requires_grad {
                continue;
            }
            if matches!(node.op, Op::Leaf) {
                continue;
            }
            let Some(g) = grads[id].take() else {
                continue;
            };
            super::ops::backprop(&nodes, id, g, &mut grads);
        }
        Ok(Gradients { grads })
    }
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn shape(&self) -> (usize, usize) {
        self.tape.nodes.borrow()[self.id].value.dim()
    }

    pub fn value(&self) -> Array2<f64> {
        self.tape.nodes.borrow()[self.id].value.clone()
    }

    pub fn with_value<R>(&self, f: impl FnOnce(&Array2<f64>) -> R) -> R {
        f(&self.tape.nodes.borrow()[self.id].value)
    }

    /// The single entry of a 1x1 value.
    pub fn item(&self) -> f64 {
        self.with_value(|v| v[[0, 0]])
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.nodes.borrow()[self.id].requires_grad
    }
}

// Branch-free scan so the common all-finite case vectorizes.
fn all_finite(a: &Array2<f64>) -> bool {
    match a.as_slice() {
        Some(s) => !s.iter().fold(false, |bad, v| bad | !v.is_finite()),
        None => a.iter().all(|v| v.is_finite()),
    }
}

/// Add `g` into `slot`, allocating on first touch.
pub(crate) fn accumulate(slot: &mut Option<Array2<f64>>, g: Array2<f64>) {
    match slot {
        Some(acc) => *acc += &g,
        None => *slot = Some(g),
    }
}

/// Sum `g` down to `shape` (undoing row/column/scalar broadcasting).
pub(crate) fn reduce_to(g: &Array2<f64>, shape: (usize, usize)) -> Array2<f64> {
    let (r, c) = g.dim();
    match shape {
        s if s == (r, c) => g.clone(),
        (1, 1) => Array2::from_elem((1, 1), g.sum()),
        (1, cc) if cc == c => g.sum_axis(Axis(0)).insert_axis(Axis(0)),
        (rr, 1) if rr == r => g.sum_axis(Axis(1)).insert_axis(Axis(1)),
        _ => unreachable!("broadcast shapes validated in forward"),
    }
}
