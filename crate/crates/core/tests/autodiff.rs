mod common;

use std::sync::Arc;

use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng as _;

use common::{central_difference, relative_error, resolvable_gradient, uniform};
use pdsl::autodiff::{Tape, Var};
use pdsl::graph::{barabasi_albert, NormalizedAdjacency};
use pdsl::rng::{seeded, Rng};
use pdsl::{Error, Result};

const NODES: usize = 5;
const MARGIN: f64 = 1e-4;

#[derive(Clone, Debug)]
enum Instr {
    Leaf(usize),
    Sigmoid(usize),
    Tanh(usize),
    Relu(usize),
    /// `exp(tanh(x))`, bounded so chains cannot overflow.
    Exp(usize),
    /// `log(sigmoid(x))`, always defined.
    Log(usize),
    Square(usize),
    Scale(usize, f64),
    AddScalar(usize, f64),
    RsubScalar(usize, f64),
    Clamp(usize, f64, f64),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    MatMul(usize, usize),
    LinComb(Vec<(usize, f64)>),
    Concat(usize, usize),
    Slice(usize, usize, usize),
    Reshape(usize, usize, usize),
    Propagate(usize),
}

#[derive(Clone, Copy, Debug)]
enum Reduce {
    Sum,
    Mean,
    LogSumExp,
}

struct Program {
    leaves: Vec<Array2<f64>>,
    instrs: Vec<Instr>,
    readout: Vec<(usize, Reduce, f64)>,
}

/// A random program over the supported ops, all dims at most 8.
fn random_program(rng: &mut Rng) -> Program {
    let mut leaves = Vec::new();
    let mut instrs = Vec::new();
    let mut shapes: Vec<(usize, usize)> = Vec::new();
    let mut leaf = |shape: (usize, usize), rng: &mut Rng, instrs: &mut Vec<Instr>, shapes: &mut Vec<(usize, usize)>| {
        leaves.push(uniform(shape.0, shape.1, -1.0, 1.0, rng));
        instrs.push(Instr::Leaf(leaves.len() - 1));
        shapes.push(shape);
        shapes.len() - 1
    };
    let dim = |rng: &mut Rng| rng.random_range(1..=8usize);
    let first = (NODES, dim(rng));
    leaf(first, rng, &mut instrs, &mut shapes);
    for _ in 0..rng.random_range(3..=10) {
        let a = rng.random_range(0..shapes.len());
        let (r, c) = shapes[a];
        let k = rng.random_range(-2.0..2.0);
        let (instr, shape) = match rng.random_range(0..20) {
            0 => (Instr::Sigmoid(a), (r, c)),
            1 => (Instr::Tanh(a), (r, c)),
            2 => (Instr::Relu(a), (r, c)),
            3 => (Instr::Exp(a), (r, c)),
            4 => (Instr::Log(a), (r, c)),
            5 => (Instr::Square(a), (r, c)),
            6 => (Instr::Scale(a, k), (r, c)),
            7 => (Instr::AddScalar(a, k), (r, c)),
            8 => (Instr::RsubScalar(a, k), (r, c)),
            9 => (Instr::Clamp(a, -0.5, 0.5), (r, c)),
            10 | 11 | 12 => {
                // Same shape, or a broadcast row / column operand.
                let other = match rng.random_range(0..3) {
                    0 => (r, c),
                    1 => (1, c),
                    _ => (r, 1),
                };
                let b = leaf(other, rng, &mut instrs, &mut shapes);
                let op = [Instr::Add(a, b), Instr::Sub(a, b), Instr::Mul(a, b)];
                (op[rng.random_range(0..3)].clone(), (r, c))
            }
            13 | 14 => {
                let cols = dim(rng);
                let b = leaf((c, cols), rng, &mut instrs, &mut shapes);
                (Instr::MatMul(a, b), (r, cols))
            }
            15 => {
                let b = leaf((r, c), rng, &mut instrs, &mut shapes);
                (Instr::LinComb(vec![(a, k), (b, rng.random_range(-2.0..2.0)), (a, 1.0)]), (r, c))
            }
            16 => {
                let b = leaf((r, dim(rng)), rng, &mut instrs, &mut shapes);
                let cols = c + shapes[b].1;
                (Instr::Concat(a, b), (r, cols))
            }
            17 if c > 1 => {
                let start = rng.random_range(0..c - 1);
                let end = rng.random_range(start + 1..=c);
                (Instr::Slice(a, start, end), (r, end - start))
            }
            18 if r % NODES == 0 => (Instr::Propagate(a), (r, c)),
            _ => {
                let len = r * c;
                let rows = (1..=len).filter(|d| len % d == 0).last().filter(|&d| d != r).unwrap_or(len);
                (Instr::Reshape(a, rows, len / rows), (rows, len / rows))
            }
        };
        instrs.push(instr);
        shapes.push(shape);
    }
    let readout = (0..shapes.len())
        .map(|i| {
            let reduce = [Reduce::Sum, Reduce::Mean, Reduce::LogSumExp][rng.random_range(0..3)];
            (i, reduce, rng.random_range(-1.0..1.0))
        })
        .collect();
    Program { leaves, instrs, readout }
}

/// Distance of `v` from the nearest point in `kinks`, over all entries.
fn kink_distance(v: Var<'_>, kinks: &[f64]) -> f64 {
    v.with_value(|a| {
        a.iter()
            .flat_map(|x| kinks.iter().map(move |k| (x - k).abs()))
            .fold(f64::INFINITY, f64::min)
    })
}

/// Run `p` with `leaves`; returns the scalar loss, the leaf vars, and the
/// smallest distance of any relu / clamp input from its kink.
fn forward<'t>(
    tape: &'t Tape,
    p: &Program,
    leaves: &[Array2<f64>],
    adj: &Arc<NormalizedAdjacency>,
) -> Result<(Var<'t>, Vec<Var<'t>>, f64)> {
    let mut vals: Vec<Var<'t>> = Vec::new();
    let mut inputs = Vec::new();
    let mut margin = f64::INFINITY;
    for instr in &p.instrs {
        let v = |i: usize| vals[i];
        let out = match *instr {
            Instr::Leaf(k) => {
                let x = tape.var(leaves[k].clone());
                inputs.push(x);
                x
            }
            Instr::Sigmoid(a) => v(a).sigmoid()?,
            Instr::Tanh(a) => v(a).tanh()?,
            Instr::Relu(a) => {
                margin = margin.min(kink_distance(v(a), &[0.0]));
                v(a).relu()?
            }
            Instr::Exp(a) => v(a).tanh()?.exp()?,
            Instr::Log(a) => v(a).sigmoid()?.log()?,
            Instr::Square(a) => v(a).square()?,
            Instr::Scale(a, k) => v(a).scale(k)?,
            Instr::AddScalar(a, k) => v(a).add_scalar(k)?,
            Instr::RsubScalar(a, k) => v(a).rsub_scalar(k)?,
            Instr::Clamp(a, lo, hi) => {
                margin = margin.min(kink_distance(v(a), &[lo, hi]));
                v(a).clamp(lo, hi)?
            }
            Instr::Add(a, b) => v(a).add(v(b))?,
            Instr::Sub(a, b) => v(a).sub(v(b))?,
            Instr::Mul(a, b) => v(a).mul(v(b))?,
            Instr::MatMul(a, b) => v(a).matmul(v(b))?,
            Instr::LinComb(ref terms) => {
                let terms: Vec<_> = terms.iter().map(|&(i, k)| (v(i), k)).collect();
                Var::lincomb(&terms)?
            }
            Instr::Concat(a, b) => Var::concat_cols(&[v(a), v(b)])?,
            Instr::Slice(a, s, e) => v(a).slice_cols(s, e)?,
            Instr::Reshape(a, r, c) => v(a).reshape(r, c)?,
            Instr::Propagate(a) => v(a).propagate(adj)?,
        };
        vals.push(out);
    }
    let terms = p
        .readout
        .iter()
        .map(|&(i, reduce, w)| {
            let r = match reduce {
                Reduce::Sum => vals[i].sum()?,
                Reduce::Mean => vals[i].mean()?,
                Reduce::LogSumExp => vals[i].logsumexp()?,
            };
            Ok((r, w))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Var::lincomb(&terms)?, inputs, margin))
}

fn adjacency(seed: u64) -> Arc<NormalizedAdjacency> {
    let g = barabasi_albert(NODES, 2, &mut seeded(seed)).unwrap();
    Arc::new(NormalizedAdjacency::build(&g))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_programs_match_finite_differences(seed in any::<u64>()) {
        let p = random_program(&mut seeded(seed));
        let adj = adjacency(seed);
        let tape = Tape::new();
        let (loss, inputs, margin) = forward(&tape, &p, &p.leaves, &adj).unwrap();
        prop_assume!(margin > MARGIN);
        let value = loss.item();
        let grads = tape.backward(loss).unwrap();

        let h = 1e-5;
        let floor = resolvable_gradient(value, h, 1e-4);
        for (k, x) in inputs.iter().enumerate() {
            let analytic = grads.get(*x).unwrap();
            for idx in 0..p.leaves[k].len() {
                let (r, c) = (idx / p.leaves[k].ncols(), idx % p.leaves[k].ncols());
                let numeric = central_difference(p.leaves[k][[r, c]], h, |xv| {
                    let mut leaves = p.leaves.clone();
                    leaves[k][[r, c]] = xv;
                    let t = Tape::new();
                    forward(&t, &p, &leaves, &adj).unwrap().0.item()
                });
                let err = relative_error(analytic[[r, c]], numeric, floor);
                prop_assert!(
                    err < 1e-4,
                    "leaf {k} entry ({r},{c}): analytic {} numeric {numeric} ({:?})",
                    analytic[[r, c]],
                    p.instrs
                );
            }
        }
    }

    #[test]
    fn tape_is_deterministic(seed in any::<u64>()) {
        let p = random_program(&mut seeded(seed));
        let adj = adjacency(seed);
        let run = || {
            let tape = Tape::new();
            let (loss, inputs, _) = forward(&tape, &p, &p.leaves, &adj).unwrap();
            let value = loss.item().to_bits();
            let grads = tape.backward(loss).unwrap();
            let bits: Vec<u64> = inputs
                .iter()
                .flat_map(|x| grads.get(*x).unwrap().iter().map(|g| g.to_bits()).collect::<Vec<_>>())
                .collect();
            (value, bits)
        };
        prop_assert_eq!(run(), run());
    }
}

#[test]
fn non_finite_values_name_the_op() {
    let t = Tape::new();
    let big = t.var(Array2::from_elem((2, 2), 800.0));
    assert!(matches!(big.exp(), Err(Error::NonFinite { op: "exp" })));
    let neg = t.var(Array2::from_elem((1, 3), -1.0));
    assert!(matches!(neg.log(), Err(Error::NonFinite { op: "log" })));
    let huge = t.var(Array2::from_elem((1, 1), f64::MAX));
    assert!(matches!(huge.square(), Err(Error::NonFinite { op: "square" })));
    assert!(matches!(huge.scale(10.0), Err(Error::NonFinite { .. })));
    let inf = Array2::from_elem((1, 1), f64::INFINITY);
    // A non-finite leaf is caught by the first op that reads it.
    assert!(matches!(t.var(inf).add_scalar(1.0), Err(Error::NonFinite { .. })));
}
