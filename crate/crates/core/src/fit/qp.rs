//! Convex QP `min ½xᵀQx − cᵀx` subject to `Ax ≥ 0` and `1ᵀAx = 1`, with `Q`
//! positive semidefinite and possibly singular.
//!
//! Proximal-point outer loop: each step solves the strictly convex problem
//! with `Q + δI` and linear term `c + δx_k` by a primal active-set method
//! started from `x_k`. The objective of the original problem decreases
//! monotonically along the outer iterates.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

const PROX: f64 = 1e-9;
const MAX_OUTER: usize = 200;
/// Outer steps allowed without a new best KKT residual.
const PATIENCE: usize = 5;

#[derive(Clone, Copy, Debug)]
pub(crate) struct QpOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct QpSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_residual: f64,
    /// `xᵀQx − 2cᵀx + ff` at each outer iterate.
    pub trace: Vec<f64>,
}

struct Constraints {
    /// Inequality rows scaled to unit norm, one per row.
    rows: DMatrix<f64>,
    /// Equality row scaled to unit norm and its right-hand side.
    eq: DVector<f64>,
    eq_rhs: f64,
}

impl Constraints {
    fn new(a: &DMatrix<f64>) -> Self {
        let mut rows = a.clone();
        for mut r in rows.row_iter_mut() {
            let n = r.norm();
            if n > 0.0 {
                r /= n;
            }
        }
        let e: DVector<f64> = a.row_sum().transpose();
        let n = e.norm();
        Self { rows, eq: &e / n, eq_rhs: 1.0 / n }
    }

    /// Working-set matrix with the equality as column 0, then `working`.
    fn working_matrix(&self, working: &[usize]) -> DMatrix<f64> {
        let n = self.eq.len();
        let mut m = DMatrix::zeros(n, working.len() + 1);
        m.set_column(0, &self.eq);
        for (k, &i) in working.iter().enumerate() {
            m.set_column(k + 1, &self.rows.row(i).transpose());
        }
        m
    }
}

fn least_squares(b: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    if b.ncols() == 0 {
        return DVector::zeros(0);
    }
    let svd = b.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(y, smax * 1e-13).expect("SVD factors were computed")
}

/// KKT violation of the unregularized problem at `x` for working set `w`.
fn kkt_residual(q: &DMatrix<f64>, c: &DVector<f64>, cons: &Constraints, x: &DVector<f64>, w: &[usize]) -> f64 {
    let grad = q * x - c;
    let aw = cons.working_matrix(w);
    let lambda = least_squares(&aw, &grad);
    let stationarity = (&grad - &aw * &lambda).amax();
    let dual = lambda.iter().skip(1).map(|&l| (-l).max(0.0)).fold(0.0, f64::max);
    let slack = &cons.rows * x;
    let complementarity = w
        .iter()
        .zip(lambda.iter().skip(1))
        .map(|(&i, &l)| (l * slack[i]).abs())
        .fold(0.0, f64::max);
    let primal = slack
        .iter()
        .map(|&s| (-s).max(0.0))
        .fold((cons.eq.dot(x) - cons.eq_rhs).abs(), f64::max);
    stationarity.max(dual).max(complementarity).max(primal)
}

fn objective(q: &DMatrix<f64>, c: &DVector<f64>, x: &DVector<f64>) -> f64 {
    0.5 * x.dot(&(q * x)) - c.dot(x)
}

/// Feasible starting vertex: the single variable with the lowest objective
/// among those whose column of `A` is nonnegative.
fn initial_point(q: &DMatrix<f64>, c: &DVector<f64>, a: &DMatrix<f64>) -> Option<DVector<f64>> {
    let n = q.nrows();
    let mut best: Option<(f64, usize, f64)> = None;
    for j in 0..n {
        let col = a.column(j);
        let e: f64 = col.sum();
        if !(e > 0.0) || col.iter().any(|&v| v < 0.0) {
            continue;
        }
        let t = 1.0 / e;
        let phi = 0.5 * q[(j, j)] * t * t - c[j] * t;
        if best.is_none_or(|b| phi < b.0) {
            best = Some((phi, j, t));
        }
    }
    best.map(|(_, j, t)| {
        let mut x = DVector::zeros(n);
        x[j] = t;
        x
    })
}

pub(crate) fn solve_qp(
    q: &DMatrix<f64>,
    c: &DVector<f64>,
    ff: f64,
    a: &DMatrix<f64>,
    opts: QpOptions,
) -> Result<QpSolution> {
    let n = q.nrows();
    if n == 0 {
        return Err(Error::Infeasible("no probes to combine".into()));
    }
    let scale = {
        let s = q.diagonal().mean();
        if s > 0.0 { s } else { 1.0 }
    };
    let qn = q / scale;
    let cn = c / scale;
    let cons = Constraints::new(a);
    let mut x = initial_point(&qn, &cn, a)
        .ok_or_else(|| Error::Infeasible("no probe has a valid photon-number distribution".into()))?;

    let mut h = qn.clone();
    for i in 0..n {
        h[(i, i)] += PROX;
    }
    let chol = Cholesky::new(h.clone())
        .ok_or_else(|| Error::Infeasible("regularized Gram matrix is not positive definite".into()))?;
    let l = chol.l();
    // Columns: L⁻¹ (equality, inequality rows...).
    let mut all = DMatrix::zeros(n, cons.rows.nrows() + 1);
    all.set_column(0, &cons.eq);
    all.columns_mut(1, cons.rows.nrows()).copy_from(&cons.rows.transpose());
    let lin = l.solve_lower_triangular(&all).expect("Cholesky factor is nonsingular");

    let report = |phi: f64| (2.0 * phi * scale + ff).max(0.0);
    let mut phi = objective(&qn, &cn, &x);
    let mut trace = vec![report(phi)];
    let mut working: Vec<usize> = Vec::new();
    let mut iterations = 0;
    let mut kkt = kkt_residual(&qn, &cn, &cons, &x, &working);
    // Iterate well past the tolerance: the proximal bias in x shrinks by a
    // factor δ/(λ+δ) per outer step along each eigendirection of Q, and on
    // ill-conditioned libraries a small KKT residual still leaves x off by
    // residual/λ_min.
    let target = opts.tolerance * 1e-7;

    let mut best = (kkt, x.clone(), 0usize);
    let mut since_best = 0;

    'outer: for _ in 0..MAX_OUTER {
        if kkt <= target {
            break;
        }
        let anchor = x.clone();
        let g = -&cn - &anchor * PROX;
        loop {
            if iterations >= opts.max_iterations {
                break 'outer;
            }
            iterations += 1;
            let r = &h * &x + &g;
            let y = l.solve_lower_triangular(&r).expect("Cholesky factor is nonsingular");
            let mut b = DMatrix::zeros(n, working.len() + 1);
            b.set_column(0, &lin.column(0));
            for (k, &i) in working.iter().enumerate() {
                b.set_column(k + 1, &lin.column(i + 1));
            }
            let lambda = least_squares(&b, &y);
            let p = l
                .transpose()
                .solve_upper_triangular(&(&b * &lambda - &y))
                .expect("Cholesky factor is nonsingular");

            let pnorm = p.norm();
            let ap = &cons.rows * &p;
            let ax = &cons.rows * &x;
            let mut block: Option<(f64, usize)> = None;
            for i in 0..ap.len() {
                if ap[i] < -1e-14 * pnorm && !working.contains(&i) {
                    let alpha = ax[i].max(0.0) / -ap[i];
                    if alpha < 1.0 && block.is_none_or(|b| alpha < b.0) {
                        block = Some((alpha, i));
                    }
                }
            }
            if let Some((alpha, i)) = block {
                x += &p * alpha;
                working.push(i);
                continue;
            }
            x += &p;
            let drop = lambda
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(_, &v)| v < -1e-12)
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(k, _)| k - 1);
            match drop {
                Some(k) => {
                    working.remove(k);
                }
                None => break,
            }
        }
        let next = objective(&qn, &cn, &x);
        if next > phi + 1e-14 * (1.0 + phi.abs()) {
            x = anchor;
            break;
        }
        // Changes below the rounding level of φ are not recorded as increases.
        let next = next.min(phi);
        let step = (&x - &anchor).amax();
        phi = next;
        trace.push(report(phi));
        kkt = kkt_residual(&qn, &cn, &cons, &x, &working);
        if kkt < best.0 {
            best = (kkt, x.clone(), trace.len());
            since_best = 0;
        } else {
            since_best += 1;
        }
        // A constraint that entered the working set can leave it only in the
        // next proximal step, so a single bad step is not a stall.
        if step <= 1e-14 * (1.0 + x.amax()) || since_best >= PATIENCE {
            break;
        }
    }
    kkt = kkt_residual(&qn, &cn, &cons, &x, &working);
    if best.0 < kkt {
        // The objective trace is nonincreasing, so the best iterate's prefix is too.
        kkt = best.0;
        x = best.1;
        trace.truncate(best.2.max(1));
    }
    Ok(QpSolution { x, iterations, converged: kkt <= opts.tolerance, kkt_residual: kkt, trace })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> QpOptions {
        QpOptions { tolerance: 1e-8, max_iterations: 10_000 }
    }

    #[test]
    fn simplex_projection() {
        // min ½‖x − t‖² over the probability simplex, A = I.
        let t = DVector::from_vec(vec![0.8, 0.5, -0.4]);
        let q = DMatrix::identity(3, 3);
        let sol = solve_qp(&q, &t, t.dot(&t), &DMatrix::identity(3, 3), opts()).unwrap();
        let expect = [0.65, 0.35, 0.0];
        for (a, b) in sol.x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-10, "{}", sol.x);
        }
        assert!(sol.converged);
        assert!(sol.trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn singular_gram() {
        // Two identical columns: x is not unique, x₀ + x₁ is.
        let f = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.5, 0.5]);
        let q = f.transpose() * &f;
        let target = DVector::from_vec(vec![1.0, 2.0, 0.5]);
        let c = f.transpose() * &target;
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        let sol = solve_qp(&q, &c, target.dot(&target), &a, opts()).unwrap();
        assert!((sol.x.sum() - 1.0).abs() < 1e-10);
        assert!(sol.converged, "kkt {}", sol.kkt_residual);
    }

    #[test]
    fn empty_problem_is_infeasible() {
        let z = DMatrix::zeros(0, 0);
        assert!(solve_qp(&z, &DVector::zeros(0), 0.0, &z, opts()).is_err());
    }
}
