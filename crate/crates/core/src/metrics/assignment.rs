use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    /// `columns[row]` is the column paired with `row`.
    pub columns: Vec<usize>,
    pub cost: f64,
}

/// Minimum-cost perfect matching on a square matrix (Hungarian method, O(K³)).
pub fn assignment_min_cost(cost: &[Vec<f64>]) -> Result<Assignment> {
    let k = cost.len();
    for row in cost {
        if row.len() != k {
            return Err(Error::NonSquare {
                rows: k,
                cols: row.len(),
            });
        }
        if row.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite { op: "assignment" });
        }
    }
    // 1-based potentials formulation; column 0 is a sentinel.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut columns = vec![0; k];
    for j in 1..=k {
        columns[owner[j] - 1] = j - 1;
    }
    let total = columns.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
    Ok(Assignment { columns, cost: total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let eye = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let a = assignment_min_cost(&eye).unwrap();
        assert_eq!((a.columns, a.cost), (vec![0, 1, 2], 0.0));

        let a = assignment_min_cost(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!((a.columns, a.cost), (vec![0, 1], 2.0));

        let a = assignment_min_cost(&[vec![5.0, 1.0], vec![1.0, 5.0]]).unwrap();
        assert_eq!((a.columns, a.cost), (vec![1, 0], 2.0));

        assert_eq!(assignment_min_cost(&[]).unwrap().cost, 0.0);
        assert!(matches!(
            assignment_min_cost(&[vec![1.0, 2.0]]),
            Err(Error::NonSquare { .. })
        ));
    }
}
