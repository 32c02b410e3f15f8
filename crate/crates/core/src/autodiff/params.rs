use std::collections::HashMap;

use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::tape::{Gradients, Tape, Var};
use crate::error::{Error, Result};
use crate::rng::Rng;

const FORMAT: &str = "pdsl-params";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Param {
    pub name: String,
    pub value: Array2<f64>,
    pub grad: Option<Array2<f64>>,
    pub m: Array2<f64>,
    pub v: Array2<f64>,
}

/// Named trainable matrices plus their optimizer state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    pub(crate) params: Vec<Param>,
    index: HashMap<String, usize>,
    pub(crate) step: u64,
}

/// `ParamSet` values recorded on a tape, in insertion order.
pub struct BoundParams<'t> {
    vars: Vec<Var<'t>>,
    index: HashMap<String, usize>,
}

impl<'t> BoundParams<'t> {
    pub fn get(&self, name: &str) -> Var<'t> {
        let i = *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("parameter {name} is not bound"));
        self.vars[i]
    }

    pub fn vars(&self) -> &[Var<'t>] {
        &self.vars
    }
}

/// Uniform draw in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(rows: usize, cols: usize, rng: &mut Rng) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-limit..limit))
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Array2<f64>) -> Result<()> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::DuplicateParam(name));
        }
        self.index.insert(name.clone(), self.params.len());
        let dim = value.dim();
        self.params.push(Param {
            name,
            value,
            grad: None,
            m: Array2::zeros(dim),
            v: Array2::zeros(dim),
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.iter().map(|p| p.name.as_str())
    }

    pub fn get(&self, name: &str) -> Option<&Array2<f64>> {
        self.index.get(name).map(|&i| &self.params[i].value)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Array2<f64>> {
        self.index.get(name).map(|&i| &mut self.params[i].value)
    }

    pub fn grad(&self, name: &str) -> Option<&Array2<f64>> {
        self.index
            .get(name)
            .and_then(|&i| self.params[i].grad.as_ref())
    }

    pub fn values(&self) -> impl Iterator<Item = (&str, &Array2<f64>)> {
        self.params.iter().map(|p| (p.name.as_str(), &p.value))
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Record every parameter on `tape`, as gradient-receiving leaves when
    /// `trainable`, as constants otherwise.
    pub fn bind<'t>(&self, tape: &'t Tape, trainable: bool) -> BoundParams<'t> {
        let vars = self
            .params
            .iter()
            .map(|p| {
                if trainable {
                    tape.var(p.value.clone())
                } else {
                    tape.constant(p.value.clone())
                }
            })
            .collect();
        BoundParams {
            vars,
            index: self.index.clone(),
        }
    }

    /// Copy gradients for bound parameters out of a backward pass.
    pub fn store_grads(&mut self, bound: &BoundParams<'_>, grads: &mut Gradients) {
        for (p, &v) in self.params.iter_mut().zip(&bound.vars) {
            p.grad = grads.take(v);
        }
    }

    pub fn clear_grads(&mut self) {
        for p in &mut self.params {
            p.grad = None;
        }
    }

    /// `Σ ‖W‖²` over every parameter.
    pub fn squared_norm(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.value.iter().map(|x| x * x).sum::<f64>())
            .sum()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ParamFile = serde_json::from_str(text)?;
        Self::from_file(file)
    }

    pub(crate) fn to_file(&self) -> ParamFile {
        ParamFile {
            format: FORMAT.into(),
            version: VERSION,
            params: self
                .params
                .iter()
                .map(|p| ParamRecord {
                    name: p.name.clone(),
                    rows: p.value.nrows(),
                    cols: p.value.ncols(),
                    values: p.value.iter().copied().collect(),
                })
                .collect(),
        }
    }

    pub(crate) fn from_file(file: ParamFile) -> Result<Self> {
        if file.format != FORMAT {
            return Err(Error::Config(format!("not a parameter file ({})", file.format)));
        }
        if file.version != VERSION {
            return Err(Error::Version(file.version));
        }
        let mut set = ParamSet::new();
        for r in file.params {
            let value = Array2::from_shape_vec((r.rows, r.cols), r.values)
                .map_err(|e| Error::shape("load_params", format!("{}: {e}", r.name)))?;
            set.insert(r.name, value)?;
        }
        Ok(set)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamFile {
    pub format: String,
    pub version: u32,
    pub params: Vec<ParamRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use proptest::prelude::*;

    #[test]
    fn glorot_bounds() {
        let w = glorot_uniform(10, 14, &mut seeded(1));
        let limit = (6.0f64 / 24.0).sqrt();
        assert!(w.iter().all(|x| x.abs() <= limit));
        assert!(w.iter().any(|x| x.abs() > limit / 2.0));
    }

    #[test]
    fn names_are_unique() {
        let mut p = ParamSet::new();
        p.insert("w", Array2::zeros((1, 1))).unwrap();
        assert!(matches!(
            p.insert("w", Array2::zeros((1, 1))),
            Err(Error::DuplicateParam(_))
        ));
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(
            values in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 6)
        ) {
            let mut p = ParamSet::new();
            p.insert("a", Array2::from_shape_vec((2, 3), values.clone()).unwrap()).unwrap();
            p.insert("b", Array2::from_shape_vec((3, 2), values).unwrap()).unwrap();
            let back = ParamSet::from_json(&p.to_json().unwrap()).unwrap();
            for ((_, x), (_, y)) in p.values().zip(back.values()) {
                prop_assert_eq!(x.shape(), y.shape());
                for (a, b) in x.iter().zip(y.iter()) {
                    prop_assert_eq!(a.to_bits(), b.to_bits());
                }
            }
        }
    }
}
