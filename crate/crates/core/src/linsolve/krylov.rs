//! Jacobi-preconditioned Krylov solvers: CG for symmetric positive
//! (semi)definite systems, BiCGStab with a restarted GMRES fallback for the
//! rest.

use std::time::Instant;

use super::{CsrMatrix, SolveOptions, SolveReport};

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

fn inverse_diagonal(a: &CsrMatrix) -> Vec<f64> {
    a.diag()
        .into_iter()
        .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect()
}

/// `||b - A x|| / ||b||`, computed from scratch.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let rn: f64 = ax.iter().zip(b).map(|(p, q)| (q - p) * (q - p)).sum::<f64>().sqrt();
    let bn = norm2(b);
    if bn == 0.0 {
        rn
    } else {
        rn / bn
    }
}

fn true_residual(a: &CsrMatrix, x: &[f64], b: &[f64], r: &mut [f64]) {
    a.matvec_into(x, r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
}

/// Preconditioned conjugate gradients.
///
/// With `pin_mean` the system is treated as a singular Neumann problem: the
/// right-hand side and every residual are projected onto mean-zero vectors
/// and the returned solution has zero mean.
pub fn solve_spd(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &SolveOptions,
    pin_mean: bool,
) -> (Vec<f64>, SolveReport) {
    let start = Instant::now();
    let n = b.len();
    assert_eq!(a.nrows(), n);
    let maxit = opts.maxit_for(n);
    let mut b = b.to_vec();
    if pin_mean {
        remove_mean(&mut b);
    }
    let bnorm = norm2(&b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return (x, SolveReport::new(0, 0.0, true, start, "cg"));
    }
    let dinv = inverse_diagonal(a);
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut it = 0;
    // outer restarts guard against drift between recursive and true residual
    while it < maxit {
        true_residual(a, &x, &b, &mut r);
        if pin_mean {
            remove_mean(&mut r);
        }
        if norm2(&r) / bnorm <= opts.tol {
            break;
        }
        for k in 0..n {
            z[k] = dinv[k] * r[k];
        }
        if pin_mean {
            remove_mean(&mut z);
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        let mut inner_done = false;
        while it < maxit {
            it += 1;
            a.matvec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 || !pap.is_finite() {
                break;
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            if pin_mean {
                remove_mean(&mut r);
            }
            if norm2(&r) / bnorm <= opts.tol {
                inner_done = true;
                break;
            }
            for k in 0..n {
                z[k] = dinv[k] * r[k];
            }
            if pin_mean {
                remove_mean(&mut z);
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        if !inner_done {
            true_residual(a, &x, &b, &mut r);
            if pin_mean {
                remove_mean(&mut r);
            }
            if norm2(&r) / bnorm > opts.tol && it < maxit {
                // breakdown without convergence: restart from the current iterate
                continue;
            }
            break;
        }
    }
    if pin_mean {
        remove_mean(&mut x);
    }
    true_residual(a, &x, &b, &mut r);
    if pin_mean {
        remove_mean(&mut r);
    }
    let rel = norm2(&r) / bnorm;
    (x, SolveReport::new(it, rel, rel <= opts.tol, start, "cg"))
}

fn bicgstab(a: &CsrMatrix, b: &[f64], x: &mut [f64], dinv: &[f64], tol: f64, maxit: usize) -> usize {
    let n = b.len();
    let bnorm = norm2(b);
    let mut r = vec![0.0; n];
    let mut it = 0;
    while it < maxit {
        true_residual(a, x, b, &mut r);
        if norm2(&r) / bnorm <= tol {
            return it;
        }
        let r_hat = r.clone();
        let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
        let mut v = vec![0.0; n];
        let mut p = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut zz = vec![0.0; n];
        let mut t = vec![0.0; n];
        let mut breakdown = false;
        while it < maxit {
            it += 1;
            let rho_new = dot(&r_hat, &r);
            if rho_new.abs() < 1e-300 || omega == 0.0 {
                breakdown = true;
                break;
            }
            let beta = (rho_new / rho) * (alpha / omega);
            rho = rho_new;
            for k in 0..n {
                p[k] = r[k] + beta * (p[k] - omega * v[k]);
                y[k] = dinv[k] * p[k];
            }
            a.matvec_into(&y, &mut v);
            let rv = dot(&r_hat, &v);
            if rv == 0.0 || !rv.is_finite() {
                breakdown = true;
                break;
            }
            alpha = rho / rv;
            for k in 0..n {
                s[k] = r[k] - alpha * v[k];
            }
            if norm2(&s) / bnorm <= tol {
                for k in 0..n {
                    x[k] += alpha * y[k];
                }
                break;
            }
            for k in 0..n {
                zz[k] = dinv[k] * s[k];
            }
            a.matvec_into(&zz, &mut t);
            let tt = dot(&t, &t);
            omega = if tt > 0.0 { dot(&t, &s) / tt } else { 0.0 };
            for k in 0..n {
                x[k] += alpha * y[k] + omega * zz[k];
                r[k] = s[k] - omega * t[k];
            }
            if !r.iter().all(|v| v.is_finite()) {
                breakdown = true;
                break;
            }
            if norm2(&r) / bnorm <= tol {
                break;
            }
        }
        if breakdown {
            return it;
        }
    }
    it
}

/// Right-preconditioned restarted GMRES.
fn gmres(a: &CsrMatrix, b: &[f64], x: &mut [f64], dinv: &[f64], tol: f64, maxit: usize, restart: usize) -> usize {
    let n = b.len();
    let bnorm = norm2(b);
    let mut r = vec![0.0; n];
    let mut it = 0;
    while it < maxit {
        true_residual(a, x, b, &mut r);
        let beta = norm2(&r);
        if beta / bnorm <= tol {
            break;
        }
        let m = restart.min(maxit - it).max(1);
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        let mut h = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        let mut w = vec![0.0; n];
        let mut zk = vec![0.0; n];
        for k in 0..m {
            it += 1;
            for i in 0..n {
                zk[i] = dinv[i] * basis[k][i];
            }
            a.matvec_into(&zk, &mut w);
            for i in 0..=k {
                let hik = dot(&w, &basis[i]);
                h[i][k] = hik;
                for l in 0..n {
                    w[l] -= hik * basis[i][l];
                }
            }
            let hn = norm2(&w);
            h[k + 1][k] = hn;
            for i in 0..k {
                let tmp = cs[i] * h[i][k] + sn[i] * h[i + 1][k];
                h[i + 1][k] = -sn[i] * h[i][k] + cs[i] * h[i + 1][k];
                h[i][k] = tmp;
            }
            let denom = (h[k][k] * h[k][k] + h[k + 1][k] * h[k + 1][k]).sqrt();
            if denom == 0.0 {
                k_used = k;
                break;
            }
            cs[k] = h[k][k] / denom;
            sn[k] = h[k + 1][k] / denom;
            h[k][k] = denom;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            if g[k + 1].abs() / bnorm <= tol || hn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution for the Krylov coefficients
        let mut yv = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * yv[j];
            }
            yv[i] = s / h[i][i];
        }
        for (j, yj) in yv.iter().enumerate() {
            for i in 0..n {
                x[i] += dinv[i] * basis[j][i] * yj;
            }
        }
        if k_used == 0 {
            break;
        }
    }
    it
}

/// BiCGStab with a GMRES(50) fallback for nonsymmetric systems.
pub fn solve_general(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, opts: &SolveOptions) -> (Vec<f64>, SolveReport) {
    let start = Instant::now();
    let n = b.len();
    assert_eq!(a.nrows(), n);
    let maxit = opts.maxit_for(n);
    let bnorm = norm2(b);
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return (x, SolveReport::new(0, 0.0, true, start, "bicgstab"));
    }
    let dinv = inverse_diagonal(a);
    let mut it = bicgstab(a, b, &mut x, &dinv, opts.tol, maxit);
    let mut rel = relative_residual(a, &x, b);
    let mut method = "bicgstab";
    if !(rel <= opts.tol) {
        if !x.iter().all(|v| v.is_finite()) {
            x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; n]);
        }
        it += gmres(a, b, &mut x, &dinv, opts.tol, maxit, 50);
        rel = relative_residual(a, &x, b);
        method = "bicgstab+gmres";
    }
    (x, SolveReport::new(it, rel, rel <= opts.tol, start, method))
}
