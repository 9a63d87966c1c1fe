//! Restarted GMRES for complex systems, matrix-free.

use alloc::vec::Vec;

use num_complex::Complex64;
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    /// Target relative residual `‖b - Ax‖ / ‖b‖`.
    pub tol: f64,
    /// Krylov dimension between restarts.
    pub restart: usize,
    /// Cap on the total number of Arnoldi steps.
    pub max_iter: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            restart: 120,
            max_iter: 3000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<Complex64>,
    pub iterations: usize,
    /// Relative residual after every Arnoldi step; starts with the initial one.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Solve `A x = b` starting from `x0`. `apply(x, y)` writes `A x` into `y`.
///
/// The recorded residuals are the Givens estimates inside a cycle and the
/// true residual at each restart; both are non-increasing in exact
/// arithmetic, and the history is clamped to keep it monotone.
pub fn gmres(
    mut apply: impl FnMut(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    x0: Vec<Complex64>,
    opts: &GmresOptions,
) -> GmresOutcome {
    let n = b.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut x = x0;
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return GmresOutcome {
            x: alloc::vec![zero; n],
            iterations: 0,
            residual_history: alloc::vec![0.0],
            converged: true,
        };
    }
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut r = alloc::vec![zero; n];
    let mut w = alloc::vec![zero; n];
    let m = opts.restart.max(1);

    loop {
        apply(&x, &mut r);
        for (ri, bi) in r.iter_mut().zip(b) {
            *ri = bi - *ri;
        }
        let beta = norm(&r);
        let rel = beta / b_norm;
        let rel = match history.last() {
            Some(&prev) if rel > prev => prev,
            _ => rel,
        };
        if history.last() != Some(&rel) || history.is_empty() {
            history.push(rel);
        }
        if beta / b_norm <= opts.tol {
            return GmresOutcome {
                x,
                iterations,
                residual_history: history,
                converged: true,
            };
        }
        if iterations >= opts.max_iter {
            return GmresOutcome {
                x,
                iterations,
                residual_history: history,
                converged: false,
            };
        }

        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // column-major Hessenberg, column j has j + 2 entries
        let mut hess: Vec<Vec<Complex64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<Complex64> = Vec::with_capacity(m);
        let mut g = alloc::vec![zero; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut steps = 0;

        for j in 0..m {
            if iterations >= opts.max_iter {
                break;
            }
            apply(&basis[j], &mut w);
            let mut col = alloc::vec![zero; j + 2];
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(v, &w);
                col[i] = hij;
                for (wk, vk) in w.iter_mut().zip(v) {
                    *wk -= hij * vk;
                }
            }
            let h_next = norm(&w);
            col[j + 1] = Complex64::new(h_next, 0.0);
            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i].conj() * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            // rotation zeroing col[j + 1]
            let a = col[j];
            let bb = col[j + 1];
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, zero)
            } else if a.norm() == 0.0 {
                (0.0, Complex64::new(1.0, 0.0))
            } else {
                let c = a.norm() / denom;
                let s = (a / a.norm()) * bb.conj() / denom;
                (c, s)
            };
            col[j] = c * a + s * bb;
            col[j + 1] = zero;
            g[j + 1] = -s.conj() * g[j];
            g[j] = c * g[j];
            cs.push(c);
            sn.push(s);
            hess.push(col);
            iterations += 1;
            steps += 1;

            let est = g[j + 1].norm() / b_norm;
            let clamped = est.min(*history.last().unwrap());
            history.push(clamped);
            if est <= opts.tol || h_next == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }

        // back substitution for y in H y = g
        let mut y = alloc::vec![zero; steps];
        for i in (0..steps).rev() {
            let mut acc = g[i];
            for jj in (i + 1)..steps {
                acc -= hess[jj][i] * y[jj];
            }
            y[i] = acc / hess[i][i];
        }
        for (jj, yj) in y.iter().enumerate() {
            for (xk, vk) in x.iter_mut().zip(&basis[jj]) {
                *xk += yj * vk;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn dense(a: &[Vec<Complex64>]) -> impl FnMut(&[Complex64], &mut [Complex64]) + '_ {
        move |x, y| {
            for (yi, row) in y.iter_mut().zip(a) {
                *yi = row.iter().zip(x).map(|(r, v)| r * v).sum();
            }
        }
    }

    #[test]
    fn solves_small_nonsymmetric_system() {
        let n = 30;
        let a: Vec<Vec<Complex64>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let base = c(((i * 7 + j * 3) % 11) as f64 * 0.03, ((i + 2 * j) % 5) as f64 * 0.02);
                        if i == j {
                            base + 2.0
                        } else {
                            base
                        }
                    })
                    .collect()
            })
            .collect();
        let x_true: Vec<Complex64> = (0..n).map(|i| c(i as f64, 1.0 - i as f64 * 0.5)).collect();
        let mut b = alloc::vec![c(0.0, 0.0); n];
        dense(&a)(&x_true, &mut b);
        let opts = GmresOptions {
            tol: 1e-12,
            restart: 8,
            max_iter: 500,
        };
        let out = gmres(dense(&a), &b, alloc::vec![c(0.0, 0.0); n], &opts);
        assert!(out.converged);
        for (x, t) in out.x.iter().zip(&x_true) {
            assert!((x - t).norm() < 1e-9 * (1.0 + t.norm()));
        }
        assert!(out.residual_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_rhs_returns_zero() {
        let a = alloc::vec![alloc::vec![c(1.0, 0.0)]];
        let out = gmres(
            dense(&a),
            &[c(0.0, 0.0)],
            alloc::vec![c(5.0, 0.0)],
            &GmresOptions::default(),
        );
        assert_eq!(out.iterations, 0);
        assert_eq!(out.x[0], c(0.0, 0.0));
    }

    #[test]
    fn reports_non_convergence() {
        // rotation-like matrix: restarted GMRES(1) stagnates
        let a = alloc::vec![
            alloc::vec![c(0.0, 0.0), c(1.0, 0.0)],
            alloc::vec![c(-1.0, 0.0), c(0.0, 0.0)],
        ];
        let opts = GmresOptions {
            tol: 1e-12,
            restart: 1,
            max_iter: 20,
        };
        let out = gmres(
            dense(&a),
            &[c(1.0, 0.0), c(0.0, 0.0)],
            alloc::vec![c(0.0, 0.0); 2],
            &opts,
        );
        assert!(!out.converged);
        assert_eq!(out.iterations, 20);
    }
}
