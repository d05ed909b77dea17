//! Linear solves with the Liouvillian: steady state and resolvent.
//!
//! Both are done by restarted GMRES on the matrix-free generator, right
//! preconditioned with the Sylvester part KX + XK† of ℒ. That part is
//! inverted exactly by a Bartels–Stewart sweep on the Schur form of K, which
//! is computed once per generator.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use super::liouvillian::Liouvillian;
use crate::error::{Error, Result};

type Mat = DMatrix<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative residual at which GMRES stops.
pub const GMRES_TOL: f64 = 1e-12;
const GMRES_RESTART: usize = 60;
const GMRES_MAX_ITER: usize = 1200;

/// Steady state ρ_ss with solver diagnostics.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub rho: Mat,
    /// ‖ℒρ_ss‖_F.
    pub residual: f64,
    pub iterations: usize,
}

/// Hermiticity, normalisation and positivity of a density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityDiagnostics {
    /// ‖ρ − ρ†‖_F.
    pub hermiticity: f64,
    pub trace: Complex64,
    pub min_eigenvalue: f64,
}

impl DensityDiagnostics {
    pub fn of(rho: &Mat) -> Self {
        let herm = (rho - rho.adjoint()).norm();
        let h = (rho + rho.adjoint()) * Complex64::new(0.5, 0.0);
        let min_eigenvalue = h
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        Self {
            hermiticity: herm,
            trace: rho.trace(),
            min_eigenvalue,
        }
    }

    /// Hermitian to 1e−10, unit trace to 1e−8, eigenvalues ≥ −1e−8.
    pub fn is_valid(&self) -> bool {
        self.hermiticity <= 1e-10
            && (self.trace - ONE).norm() <= 1e-8
            && self.min_eigenvalue >= -1e-8
    }
}

pub struct OracleSolver<'a> {
    liou: &'a Liouvillian,
    u: Mat,
    t: Mat,
    /// Floor for Sylvester denominators, guarding generators with
    /// undamped directions.
    floor: f64,
}

impl<'a> OracleSolver<'a> {
    pub fn new(liou: &'a Liouvillian) -> Result<Self> {
        let k = liou.effective().to_dense();
        let dim = k.nrows();
        let max_iter = 200 * dim.max(10);
        // The Schur form only feeds the preconditioner, so a looser
        // deflation tolerance is an acceptable fallback.
        let schur = [f64::EPSILON, 1e-13, 1e-11]
            .iter()
            .find_map(|eps| Schur::try_new(k.clone(), *eps, max_iter))
            .ok_or(Error::NonConvergence {
                solver: "schur decomposition",
                residual: f64::NAN,
                iterations: max_iter,
            })?;
        let (u, t) = schur.unpack();
        Ok(Self {
            liou,
            u,
            t,
            floor: 1e-10 * liou.max_rate(),
        })
    }

    pub fn liouvillian(&self) -> &Liouvillian {
        self.liou
    }

    /// X with (K − shift)X + XK† = C.
    fn sylvester(&self, c: &Mat, shift: Complex64) -> Mat {
        let n = self.t.nrows();
        let mut y = self.u.adjoint() * c * &self.u;
        // Columns of Y from last to first: (T − shift + conj(T_jj)) y_j
        // = c_j − Σ_{k>j} conj(T_jk) y_k, an upper-triangular solve.
        for j in (0..n).rev() {
            for k in (j + 1)..n {
                let f = -self.t[(j, k)].conj();
                if f != ZERO {
                    let (left, right) = y.columns_range_pair_mut(j, k);
                    let mut left = left;
                    left.axpy(f, &right, ONE);
                }
            }
            let bjj = self.t[(j, j)].conj() - shift;
            let mut col = y.column_mut(j);
            for i in (0..n).rev() {
                let mut d = self.t[(i, i)] + bjj;
                if d.norm() < self.floor {
                    d = Complex64::new(-self.floor, 0.0);
                }
                let yi = col[i] / d;
                col[i] = yi;
                if yi != ZERO {
                    for r in 0..i {
                        col[r] -= self.t[(r, i)] * yi;
                    }
                }
            }
        }
        &self.u * y * self.u.adjoint()
    }

    /// Null vector of ℒ with unit trace, from ℒX + R·Tr X = R with R = 1/d.
    pub fn steady_state(&self) -> Result<SteadyState> {
        let d = self.liou.dim();
        let r = Mat::identity(d, d) * Complex64::new(1.0 / d as f64, 0.0);
        let op = |x: &Mat| {
            let mut y = self.liou.apply(x);
            y += &r * x.trace();
            y
        };
        let pre = |x: &Mat| self.sylvester(x, ZERO);
        let (x, iterations) = gmres(&op, &pre, &r, "steady-state gmres")?;
        let mut rho = (&x + x.adjoint()) * Complex64::new(0.5, 0.0);
        let tr = rho.trace();
        if tr.norm() == 0.0 || !tr.re.is_finite() {
            return Err(Error::NonConvergence {
                solver: "steady-state gmres",
                residual: f64::NAN,
                iterations,
            });
        }
        rho /= tr;
        let residual = self.liou.apply(&rho).norm();
        Ok(SteadyState {
            rho,
            residual,
            iterations,
        })
    }

    /// X = (iω − ℒ)⁻¹Y for traceless Y. The rank-one term ρ_ss·Tr X keeps
    /// the system regular at ω = 0 without changing the solution.
    pub fn resolvent(&self, omega: f64, y: &Mat, rho_ss: &Mat) -> Result<Mat> {
        let iw = Complex64::new(0.0, omega);
        let op = |x: &Mat| {
            let mut out = x * iw - self.liou.apply(x);
            out += rho_ss * x.trace();
            out
        };
        let pre = |x: &Mat| -self.sylvester(x, iw);
        let (x, _) = gmres(&op, &pre, y, "resolvent gmres")?;
        Ok(x)
    }
}

/// Steady state of `liou` with a fresh preconditioner.
pub fn steady_state(liou: &Liouvillian) -> Result<SteadyState> {
    OracleSolver::new(liou)?.steady_state()
}

fn axpy(y: &mut Mat, a: Complex64, x: &Mat) {
    y.zip_apply(x, |yi, xi| *yi += a * xi);
}

/// Restarted, right-preconditioned GMRES with modified Gram–Schmidt.
/// Returns the solution and the number of operator applications.
fn gmres(
    op: &dyn Fn(&Mat) -> Mat,
    pre: &dyn Fn(&Mat) -> Mat,
    b: &Mat,
    solver: &'static str,
) -> Result<(Mat, usize)> {
    let bnorm = b.norm();
    let mut x = Mat::zeros(b.nrows(), b.ncols());
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut total = 0;
    let mut rel;
    loop {
        let r = b - op(&x);
        let beta = r.norm();
        rel = beta / bnorm;
        if rel <= GMRES_TOL {
            return Ok((x, total));
        }
        if total >= GMRES_MAX_ITER || !rel.is_finite() {
            break;
        }
        let m = GMRES_RESTART;
        let mut basis = vec![r / Complex64::new(beta, 0.0)];
        let mut h = vec![vec![ZERO; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![ZERO; m];
        let mut g = vec![ZERO; m + 1];
        g[0] = Complex64::new(beta, 0.0);
        let mut k = 0;
        for j in 0..m {
            let mut w = op(&pre(&basis[j]));
            total += 1;
            for (i, v) in basis.iter().enumerate() {
                let hij = v.dotc(&w);
                h[i][j] = hij;
                axpy(&mut w, -hij, v);
            }
            let wn = w.norm();
            h[j + 1][j] = Complex64::new(wn, 0.0);
            for i in 0..j {
                let (a, bb) = (h[i][j], h[i + 1][j]);
                h[i][j] = a * cs[i] + sn[i] * bb;
                h[i + 1][j] = -sn[i].conj() * a + bb * cs[i];
            }
            let (a, bb) = (h[j][j], h[j + 1][j]);
            let rho = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            if rho == 0.0 {
                cs[j] = 1.0;
                sn[j] = ZERO;
            } else if a.norm() == 0.0 {
                cs[j] = 0.0;
                sn[j] = ONE;
            } else {
                cs[j] = a.norm() / rho;
                sn[j] = a / a.norm() * bb.conj() / rho;
            }
            h[j][j] = cs[j] * a + sn[j] * bb;
            h[j + 1][j] = ZERO;
            g[j + 1] = -sn[j].conj() * g[j];
            g[j] *= cs[j];
            k = j + 1;
            if g[j + 1].norm() / bnorm <= GMRES_TOL || total >= GMRES_MAX_ITER || wn == 0.0 {
                break;
            }
            basis.push(w / Complex64::new(wn, 0.0));
        }
        let mut yv = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for l in (i + 1)..k {
                s -= h[i][l] * yv[l];
            }
            yv[i] = s / h[i][i];
        }
        let mut comb = Mat::zeros(b.nrows(), b.ncols());
        for (v, yi) in basis.iter().zip(&yv) {
            axpy(&mut comb, *yi, v);
        }
        x += pre(&comb);
    }
    Err(Error::NonConvergence {
        solver,
        residual: rel,
        iterations: total,
    })
}
