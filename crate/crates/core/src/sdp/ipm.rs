//! Infeasible-start primal-dual path-following method for a real SDP with
//! one PSD block and one nonnegative-orthant block:
//!
//! ```text
//! min  <C, X> + cₗᵀx   s.t.  <Aₖ, X> + aₖᵀx = bₖ,   X ⪰ 0,  x ≥ 0
//! ```
//!
//! Search directions use Nesterov-Todd scaling with a Mehrotra
//! predictor-corrector. Infeasibility is declared once the iterates carry an
//! approximate Farkas certificate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

#[derive(Debug, Clone)]
pub(crate) struct RealSdp {
    pub c: DMatrix<f64>,
    pub c_lp: DVector<f64>,
    pub a: Vec<DMatrix<f64>>,
    pub a_lp: Vec<DVector<f64>>,
    pub b: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RealStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
}

#[derive(Debug, Clone)]
pub(crate) struct RealSolution {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub status: RealStatus,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmSettings {
    pub max_iter: usize,
    pub tol: f64,
    /// Looser target accepted when progress stalls.
    pub stall_tol: f64,
    pub infeas_tol: f64,
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(sym(m)).eigenvalues.min()
}

/// Largest `α` with `diag(v) + α·d ⪰ 0`, for positive `v`.
fn max_step_scaled(v: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    if v.len() == 0 {
        return f64::INFINITY;
    }
    let inv_sqrt = v.map(|x| 1.0 / x.sqrt());
    let scaled = DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| inv_sqrt[i] * d[(i, j)] * inv_sqrt[j]);
    let lmin = min_eig(&scaled);
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

fn max_step_lp(x: &DVector<f64>, dx: &DVector<f64>) -> f64 {
    x.iter()
        .zip(dx.iter())
        .filter(|(_, &d)| d < 0.0)
        .map(|(&xi, &d)| -xi / d)
        .fold(f64::INFINITY, f64::min)
}

struct Scaling {
    /// `W` with `WZW = X`.
    w: DMatrix<f64>,
    /// `G` with `GGᵀ = W` and `G⁻¹XG⁻ᵀ = GᵀZG = diag(v)`.
    g: DMatrix<f64>,
    v: DVector<f64>,
    w_lp: DVector<f64>,
    v_lp: DVector<f64>,
}

impl Scaling {
    /// With `X = LLᵀ`, `Z = RRᵀ` and `RᵀL = UΣVᵀ`, `G = LVΣ^{-1/2}`.
    fn new(x: &DMatrix<f64>, z: &DMatrix<f64>, x_lp: &DVector<f64>, z_lp: &DVector<f64>) -> Option<Self> {
        let l = x.clone().cholesky()?.l();
        let r = z.clone().cholesky()?.l();
        let svd = (r.transpose() * &l).svd(false, true);
        let v_t = svd.v_t?;
        let sigma = svd.singular_values;
        if sigma.iter().any(|s| !(*s > 0.0)) {
            return None;
        }
        let g = l * v_t.transpose() * DMatrix::from_diagonal(&sigma.map(|s| 1.0 / s.sqrt()));
        let w = sym(&(&g * g.transpose()));
        let w_lp = x_lp.zip_map(z_lp, |a, b| (a / b).sqrt());
        let v_lp = x_lp.zip_map(z_lp, |a, b| (a * b).sqrt());
        Some(Self {
            w,
            g,
            v: sigma,
            w_lp,
            v_lp,
        })
    }
}

struct Direction {
    dx: DMatrix<f64>,
    dx_lp: DVector<f64>,
    dy: DVector<f64>,
    dz: DMatrix<f64>,
    dz_lp: DVector<f64>,
    /// Scaled `ΔX̃ = G⁻¹ΔXG⁻ᵀ` and `ΔZ̃ = GᵀΔZG`.
    dxs: DMatrix<f64>,
    dzs: DMatrix<f64>,
    dxs_lp: DVector<f64>,
    dzs_lp: DVector<f64>,
}

impl RealSdp {
    pub fn m(&self) -> usize {
        self.b.len()
    }

    fn op_a(&self, x: &DMatrix<f64>, x_lp: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.m(), |k, _| dot(&self.a[k], x) + self.a_lp[k].dot(x_lp))
    }

    fn op_at(&self, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
        let mut s = DMatrix::zeros(self.c.nrows(), self.c.ncols());
        let mut s_lp = DVector::zeros(self.c_lp.len());
        for k in 0..self.m() {
            s += &self.a[k] * y[k];
            s_lp += &self.a_lp[k] * y[k];
        }
        (s, s_lp)
    }

    pub fn solve(&self, settings: &IpmSettings) -> RealSolution {
        let n = self.c.nrows();
        let n_lp = self.c_lp.len();
        let m = self.m();
        let nu = (n + n_lp).max(1) as f64;

        let a_norms: Vec<f64> = (0..m)
            .map(|k| (self.a[k].norm_squared() + self.a_lp[k].norm_squared()).sqrt())
            .collect();
        let c_norm = (self.c.norm_squared() + self.c_lp.norm_squared()).sqrt();
        let b_norm = self.b.norm();
        let sqrt_n = (n + n_lp).max(1) as f64;
        let sqrt_n = sqrt_n.sqrt();
        let xi = (0..m)
            .map(|k| (n + n_lp) as f64 * (1.0 + self.b[k].abs()) / (1.0 + a_norms[k]))
            .fold(sqrt_n.max(10.0), f64::max);
        let eta = a_norms.iter().cloned().fold(sqrt_n.max(10.0).max(c_norm), f64::max);

        let mut x = DMatrix::identity(n, n) * xi;
        let mut x_lp = DVector::from_element(n_lp, xi);
        let mut y = DVector::zeros(m);
        let mut z = DMatrix::identity(n, n) * eta;
        let mut z_lp = DVector::from_element(n_lp, eta);

        let mut status = RealStatus::MaxIter;
        let mut iterations = 0;
        let mut last_step = 1.0_f64;
        let mut best_err = f64::INFINITY;
        let mut stall = 0;
        let mut best = None;

        for iter in 0..settings.max_iter {
            iterations = iter;
            let rp = &self.b - self.op_a(&x, &x_lp);
            let (aty, aty_lp) = self.op_at(&y);
            let rd = &self.c - &aty - &z;
            let rd_lp = &self.c_lp - &aty_lp - &z_lp;
            let xz = dot(&x, &z) + x_lp.dot(&z_lp);
            let mu = xz / nu;
            let pobj = dot(&self.c, &x) + self.c_lp.dot(&x_lp);
            let dobj = self.b.dot(&y);

            let pinf = rp.norm() / (1.0 + b_norm);
            let dinf = (rd.norm_squared() + rd_lp.norm_squared()).sqrt() / (1.0 + c_norm);
            let gap = xz.max((pobj - dobj).abs()) / (1.0 + pobj.abs() + dobj.abs());
            let err = pinf.max(dinf).max(gap);
            log::trace!("it {iter} pinf {pinf:.2e} dinf {dinf:.2e} gap {gap:.2e} mu {mu:.2e} pobj {pobj:.6e} dobj {dobj:.6e} step {last_step:.3}");
            if err <= settings.tol {
                status = RealStatus::Optimal;
                break;
            }

            // Farkas certificates.
            if dobj > 0.0 {
                let (cert, cert_lp) = self.op_at(&(&y / dobj));
                let worst = cert.symmetric_eigen().eigenvalues.max().max(
                    cert_lp.iter().cloned().fold(f64::MIN, f64::max),
                );
                let scale = (&y / dobj).norm() * a_norms.iter().cloned().fold(0.0, f64::max);
                if worst <= settings.infeas_tol * scale.max(1e-300) && dinf.max(pinf) > settings.tol {
                    if dobj > 1e3 * (1.0 + pobj.abs()) || pinf > 1e-6 {
                        status = RealStatus::PrimalInfeasible;
                        break;
                    }
                }
            }
            if pobj < 0.0 {
                let scale = -pobj;
                let ax = self.op_a(&x, &x_lp) / scale;
                let xn = (x.norm_squared() + x_lp.norm_squared()).sqrt() / scale;
                if ax.norm() <= settings.infeas_tol * xn.max(1.0) * a_norms.iter().cloned().fold(1.0, f64::max)
                    && -pobj > 1e3 * (1.0 + dobj.abs())
                {
                    status = RealStatus::DualInfeasible;
                    break;
                }
            }

            if !err.is_finite() {
                break;
            }
            if err < best_err {
                stall = if err < 0.9 * best_err { 0 } else { stall + 1 };
                best_err = err;
                best = Some((x.clone(), y.clone()));
            } else {
                stall += 1;
            }
            if stall >= 8 || last_step < 1e-10 {
                break;
            }

            let Some(sc) = Scaling::new(&x, &z, &x_lp, &z_lp) else {
                break;
            };
            let schur = self.schur(&sc);
            let chol = match schur.clone().cholesky() {
                Some(ch) => ch,
                None => {
                    let reg = schur.diagonal().max() * 1e-14 + 1e-300;
                    match (schur + DMatrix::identity(m, m) * reg).cholesky() {
                        Some(ch) => ch,
                        None => break,
                    }
                }
            };

            // Predictor (σ = 0).
            let d_pred = sc.v.map(|v| -v);
            let d_pred = DMatrix::from_diagonal(&d_pred);
            let d_pred_lp = sc.v_lp.map(|v| -v);
            let pred = self.direction(&sc, &chol, &rp, &rd, &rd_lp, &d_pred, &d_pred_lp);
            let ap = max_step_scaled(&sc.v, &pred.dxs).min(max_step_lp(&sc.v_lp, &pred.dxs_lp)).min(1.0);
            let ad = max_step_scaled(&sc.v, &pred.dzs).min(max_step_lp(&sc.v_lp, &pred.dzs_lp)).min(1.0);
            let xz_pred = dot(&(&x + &pred.dx * ap), &(&z + &pred.dz * ad))
                + (&x_lp + &pred.dx_lp * ap).dot(&(&z_lp + &pred.dz_lp * ad));
            let expon = (3.0 * ap.min(ad).powi(2)).max(1.0);
            let sigma = (xz_pred / xz).max(0.0).powf(expon).min(1.0);

            // Corrector: VD + DV = 2σμI − 2V² − (ΔX̃ΔZ̃ + ΔZ̃ΔX̃).
            let cross = &pred.dxs * &pred.dzs;
            let rc = DMatrix::from_fn(n, n, |i, j| {
                let base = if i == j { 2.0 * sigma * mu - 2.0 * sc.v[i] * sc.v[i] } else { 0.0 };
                base - cross[(i, j)] - cross[(j, i)]
            });
            let d_corr = DMatrix::from_fn(n, n, |i, j| rc[(i, j)] / (sc.v[i] + sc.v[j]));
            let d_corr_lp = DVector::from_fn(n_lp, |i, _| {
                let v = sc.v_lp[i];
                (2.0 * sigma * mu - 2.0 * v * v - 2.0 * pred.dxs_lp[i] * pred.dzs_lp[i]) / (2.0 * v)
            });
            let dir = self.direction(&sc, &chol, &rp, &rd, &rd_lp, &d_corr, &d_corr_lp);

            let tau = 0.9 + 0.09 * last_step;
            let ap = (tau * max_step_scaled(&sc.v, &dir.dxs).min(max_step_lp(&sc.v_lp, &dir.dxs_lp))).min(1.0);
            let ad = (tau * max_step_scaled(&sc.v, &dir.dzs).min(max_step_lp(&sc.v_lp, &dir.dzs_lp))).min(1.0);
            last_step = ap.min(ad);

            x = sym(&(&x + &dir.dx * ap));
            x_lp += &dir.dx_lp * ap;
            y += &dir.dy * ad;
            z = sym(&(&z + &dir.dz * ad));
            z_lp += &dir.dz_lp * ad;
            iterations = iter + 1;
        }

        if status == RealStatus::MaxIter {
            if let Some((bx, by)) = best {
                (x, y) = (bx, by);
                if best_err <= settings.stall_tol {
                    status = RealStatus::Optimal;
                }
            }
        }

        RealSolution {
            x,
            y,
            status,
            iterations,
        }
    }

    /// `Mᵢⱼ = <Aᵢ, WAⱼW> + Σₗ aᵢₗaⱼₗwₗ²`.
    fn schur(&self, sc: &Scaling) -> DMatrix<f64> {
        let m = self.m();
        let waw: Vec<DMatrix<f64>> = self.a.iter().map(|a| &sc.w * a * &sc.w).collect();
        let w2 = sc.w_lp.map(|w| w * w);
        let mut out = DMatrix::zeros(m, m);
        for i in 0..m {
            for j in 0..=i {
                let v = dot(&self.a[i], &waw[j]) + self.a_lp[i].component_mul(&self.a_lp[j]).dot(&w2);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        out
    }

    /// Solves `A(ΔX) = rp`, `Aᵀ(Δy) + ΔZ = Rd`, `ΔX + WΔZW = GDGᵀ`.
    #[allow(clippy::too_many_arguments)]
    fn direction(
        &self,
        sc: &Scaling,
        chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>,
        rp: &DVector<f64>,
        rd: &DMatrix<f64>,
        rd_lp: &DVector<f64>,
        d: &DMatrix<f64>,
        d_lp: &DVector<f64>,
    ) -> Direction {
        let gdg = &sc.g * d * sc.g.transpose();
        let gdg_lp = d_lp.component_mul(&sc.w_lp);
        let wrw = &sc.w * rd * &sc.w;
        let wrw_lp = rd_lp.component_mul(&sc.w_lp).component_mul(&sc.w_lp);
        let rhs = rp - self.op_a(&gdg, &gdg_lp) + self.op_a(&wrw, &wrw_lp);
        let dy = chol.solve(&rhs);
        let (aty, aty_lp) = self.op_at(&dy);
        let dz = sym(&(rd - aty));
        let dz_lp = rd_lp - aty_lp;
        let dx = sym(&(gdg - &sc.w * &dz * &sc.w));
        let dx_lp = gdg_lp - dz_lp.component_mul(&sc.w_lp).component_mul(&sc.w_lp);
        let dzs = sym(&(sc.g.transpose() * &dz * &sc.g));
        let dxs = sym(&(d - &dzs));
        let dzs_lp = dz_lp.component_mul(&sc.w_lp);
        let dxs_lp = d_lp - &dzs_lp;
        Direction {
            dx,
            dx_lp,
            dy,
            dz,
            dz_lp,
            dxs,
            dzs,
            dxs_lp,
            dzs_lp,
        }
    }
}
