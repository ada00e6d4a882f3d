//! Dense Levenberg–Marquardt with a central-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub rel_cost_tol: f64,
    /// Stop once `‖∇cost‖₂` falls below this.
    pub grad_tol: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            rel_cost_tol: 1e-10,
            grad_tol: 1e-8,
            fd_step: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmReport {
    pub params: DVector<f64>,
    /// `Σ rᵢ²` at `params`.
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn cost_of(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

/// Central differences with step `h · max(|xⱼ|, 1)`.
pub fn numerical_jacobian(
    f: &mut impl FnMut(&DVector<f64>) -> DVector<f64>,
    x: &DVector<f64>,
    m: usize,
    h: f64,
) -> DMatrix<f64> {
    let mut jac = DMatrix::zeros(m, x.len());
    let mut xp = x.clone();
    for j in 0..x.len() {
        let step = h * x[j].abs().max(1.0);
        xp[j] = x[j] + step;
        let fp = f(&xp);
        xp[j] = x[j] - step;
        let fm = f(&xp);
        xp[j] = x[j];
        jac.set_column(j, &((fp - fm) / (2.0 * step)));
    }
    jac
}

/// Minimizes `Σ rᵢ(x)²` starting from `x0`.
pub fn minimize(
    mut residuals: impl FnMut(&DVector<f64>) -> DVector<f64>,
    x0: DVector<f64>,
    opts: &LmOptions,
) -> LmReport {
    let mut x = x0;
    let mut r = residuals(&x);
    let mut cost = cost_of(&r);
    let m = r.len();
    let n = x.len();
    let mut mu: Option<f64> = None;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;

    if !cost.is_finite() {
        return LmReport {
            params: x,
            cost,
            iterations,
            converged,
        };
    }

    while iterations < opts.max_iterations {
        iterations += 1;
        if cost == 0.0 {
            converged = true;
            break;
        }
        let jac = numerical_jacobian(&mut residuals, &x, m, opts.fd_step);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        if 2.0 * g.norm() < opts.grad_tol {
            converged = true;
            break;
        }
        let damping =
            *mu.get_or_insert_with(|| 1e-3 * jtj.diagonal().max().max(f64::MIN_POSITIVE));

        let mut a = jtj.clone();
        for i in 0..n {
            a[(i, i)] += damping * jtj[(i, i)].max(1e-12);
        }
        let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
            mu = Some(damping * nu);
            nu *= 2.0;
            continue;
        };
        let x_new = &x + &step;
        let r_new = residuals(&x_new);
        let cost_new = cost_of(&r_new);
        // Predicted reduction of the local quadratic model.
        let predicted = -(2.0 * step.dot(&g) + step.dot(&(&jtj * &step)));
        let actual = cost - cost_new;
        if cost_new.is_finite() && actual > 0.0 {
            let rho = if predicted > 0.0 { actual / predicted } else { 1.0 };
            let rel = actual / cost;
            x = x_new;
            r = r_new;
            cost = cost_new;
            mu = Some(damping * (1.0f64 / 3.0).max(1.0 - (2.0 * rho - 1.0).powi(3)));
            nu = 2.0;
            if rel < opts.rel_cost_tol {
                converged = true;
                break;
            }
        } else {
            // At a numerical floor no step can lower the cost; accept that as
            // convergence when the model also promises nothing.
            if predicted <= opts.rel_cost_tol * cost {
                converged = true;
                break;
            }
            mu = Some(damping * nu);
            nu *= 2.0;
            if damping > 1e32 {
                break;
            }
        }
    }
    LmReport {
        params: x,
        cost,
        iterations,
        converged,
    }
}
