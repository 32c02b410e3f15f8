use ndarray::{Array2, ArrayView2, ArrayViewMut2};

use super::Graph;

/// `D^{-1/2} (A + I) D^{-1/2}` over the symmetrized binary adjacency.
///
/// Kept both dense (for inspection and tests) and in CSR form; the
/// propagator only ever touches the CSR rows.
#[derive(Clone, Debug)]
pub struct NormalizedAdjacency {
    dense: Array2<f64>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl NormalizedAdjacency {
    pub fn build(g: &Graph) -> Self {
        let n = g.node_count();
        let neighbors: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                let mut row = g.undirected_neighbors(v);
                row.push(v);
                row.sort_unstable();
                row
            })
            .collect();
        let inv_sqrt: Vec<f64> = neighbors
            .iter()
            .map(|row| 1.0 / (row.len() as f64).sqrt())
            .collect();

        let mut dense = Array2::zeros((n, n));
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, row) in neighbors.iter().enumerate() {
            for &j in row {
                let v = inv_sqrt[i] * inv_sqrt[j];
                dense[[i, j]] = v;
                col_idx.push(j);
                vals.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            dense,
            row_ptr,
            col_idx,
            vals,
        }
    }

    pub fn node_count(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.dense
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// `out_b = Â · x_b` for every stacked block of `n` rows in `x`.
    pub fn apply_blocks(&self, x: ArrayView2<f64>, mut out: ArrayViewMut2<f64>) {
        out.fill(0.0);
        self.apply_impl(x, &mut out, false);
    }

    /// `out_b += Â · x_b`; skips the clearing pass for freshly zeroed outputs.
    pub fn apply_blocks_acc(&self, x: ArrayView2<f64>, mut out: ArrayViewMut2<f64>) {
        self.apply_impl(x, &mut out, false);
    }

    /// `out_b += Âᵀ · x_b` for every stacked block; the gradient of [`Self::apply_blocks`].
    pub fn apply_transpose_blocks_acc(&self, x: ArrayView2<f64>, mut out: ArrayViewMut2<f64>) {
        self.apply_impl(x, &mut out, true);
    }

    fn apply_impl(&self, x: ArrayView2<f64>, out: &mut ArrayViewMut2<f64>, transpose: bool) {
        let n = self.node_count();
        debug_assert_eq!(x.nrows() % n, 0);
        let xs = x.as_standard_layout();
        let src = xs.as_slice().expect("standard layout");
        match out.as_slice_mut() {
            Some(dst) => self.kernel(src, dst, x.ncols(), transpose),
            None => {
                let mut tmp = out.as_standard_layout().into_owned();
                self.kernel(src, tmp.as_slice_mut().expect("standard layout"), x.ncols(), transpose);
                out.assign(&tmp);
            }
        }
    }

    // Rows are `width` long; blocks of n rows are independent.
    fn kernel(&self, src_all: &[f64], dst_all: &mut [f64], width: usize, transpose: bool) {
        let n = self.node_count();
        let blocks = src_all.len() / (n * width).max(1);
        for b in 0..blocks {
            let base = b * n;
            for i in 0..n {
                for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let j = self.col_idx[k];
                    let a = self.vals[k];
                    let (dst, src) = if transpose { (j, i) } else { (i, j) };
                    let s = &src_all[(base + src) * width..(base + src + 1) * width];
                    let d = &mut dst_all[(base + dst) * width..(base + dst + 1) * width];
                    for (o, v) in d.iter_mut().zip(s) {
                        *o += a * v;
                    }
                }
            }
        }
    }
}
