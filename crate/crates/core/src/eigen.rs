//! Block preconditioned eigensolver (LOBPCG) for the lowest eigenpairs of a
//! symmetric operator given as a closure on flat vectors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub(crate) struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub(crate) struct LobpcgOptions {
    pub count: usize,
    pub extra: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

fn apply_columns(op: &dyn Fn(&[f64]) -> Vec<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (j, col) in m.column_iter().enumerate() {
        let v: Vec<f64> = col.iter().copied().collect();
        out.set_column(j, &DVector::from_vec(op(&v)));
    }
    out
}

/// Orthonormal basis of the column span by twice-iterated Gram–Schmidt,
/// dropping columns that are numerically dependent on earlier ones.
fn orthonormalize(s: &DMatrix<f64>) -> DMatrix<f64> {
    let mut kept: Vec<DVector<f64>> = Vec::with_capacity(s.ncols());
    for col in s.column_iter() {
        let mut v: DVector<f64> = col.into_owned();
        let original = v.norm();
        if original == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &kept {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-10 * original {
            kept.push(v / norm);
        }
    }
    DMatrix::from_columns(&kept)
}

/// Lowest `count` eigenpairs of `op`, accelerated by the preconditioner
/// `precond`; residual norms are measured in the Euclidean norm of the flat
/// vectors, relative to `max(1, |λ|)`.
pub(crate) fn lobpcg(
    op: &dyn Fn(&[f64]) -> Vec<f64>,
    precond: &dyn Fn(&[f64]) -> Vec<f64>,
    len: usize,
    options: &LobpcgOptions,
) -> Result<EigenPairs> {
    let block = options.count + options.extra;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let init = DMatrix::from_fn(len, block, |_, _| rng.gen_range(-1.0..1.0));
    let mut x = orthonormalize(&init);
    let mut p: Option<DMatrix<f64>> = None;
    let mut worst = f64::INFINITY;
    for _ in 0..options.max_iterations {
        let ax = apply_columns(op, &x);
        let h = x.transpose() * &ax;
        let eig = SymmetricEigen::new((&h + h.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let c = DMatrix::from_fn(x.ncols(), x.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
        let lambda: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        x = &x * &c;
        let ax = &ax * &c;
        let mut r = ax.clone();
        for j in 0..x.ncols() {
            let col = r.column(j) - x.column(j) * lambda[j];
            r.set_column(j, &col);
        }
        worst = (0..options.count.min(x.ncols()))
            .map(|j| r.column(j).norm() / lambda[j].abs().max(1.0))
            .fold(0.0, f64::max);
        if worst <= options.tolerance {
            return Ok(EigenPairs {
                values: lambda[..options.count].to_vec(),
                vectors: (0..options.count)
                    .map(|j| x.column(j).iter().copied().collect())
                    .collect(),
            });
        }
        let w = apply_columns(precond, &r);
        let ncols = x.ncols() + w.ncols() + p.as_ref().map_or(0, |m| m.ncols());
        let mut s = DMatrix::zeros(len, ncols);
        s.columns_mut(0, x.ncols()).copy_from(&x);
        s.columns_mut(x.ncols(), w.ncols()).copy_from(&w);
        if let Some(pm) = &p {
            s.columns_mut(x.ncols() + w.ncols(), pm.ncols())
                .copy_from(pm);
        }
        let q = orthonormalize(&s);
        let aq = apply_columns(op, &q);
        let hq = q.transpose() * &aq;
        let eig = SymmetricEigen::new((&hq + hq.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let take = block.min(order.len());
        let y = DMatrix::from_fn(q.ncols(), take, |i, j| eig.eigenvectors[(i, order[j])]);
        let x_new = &q * y;
        // search direction: the part of the update outside the old block
        let overlap = x.transpose() * &x_new;
        let direction = &x_new - &x * overlap;
        p = Some(orthonormalize(&direction));
        x = orthonormalize(&x_new);
    }
    Err(Error::EigenNotConverged {
        iterations: options.max_iterations,
        residual: worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_operator() {
        let diag: Vec<f64> = (0..200).map(|i| (i as f64 - 3.0) * 0.5).collect();
        let d = diag.clone();
        let op = move |v: &[f64]| v.iter().zip(&d).map(|(a, b)| a * b).collect::<Vec<f64>>();
        let pre = |v: &[f64]| v.to_vec();
        let res = lobpcg(
            &op,
            &pre,
            200,
            &LobpcgOptions {
                count: 3,
                extra: 2,
                tolerance: 1e-9,
                max_iterations: 500,
                seed: 1,
            },
        )
        .unwrap();
        for (k, v) in res.values.iter().enumerate() {
            assert!((v - diag[k]).abs() < 1e-9);
        }
    }
}
