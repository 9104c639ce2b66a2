//! Six-field mixed membrane kernel.
//!
//! Fields per element: displacement `u` and drilling rotation `theta_z` (nodal, the element
//! DoFs), couple stress `mu` and curvature (nodal interpolation, condensed), strain and stress
//! (polynomial modes, condensed). The coupling matrices
//!
//! ```text
//! H1 = -2 ∫ (J phi_u)^T (J phi_mu)          H2 = ∫ (L phi_u)^T phi_sig
//! H3 =  2 ∫ phi_theta^T J phi_mu - (J phi_theta)^T phi_mu
//! H4 = -2 ∫ phi_kappa^T phi_mu   (kappa form)   or   ∫ phi_k^T phi_mu   (k form)
//! H5 =    ∫ phi_eps^T phi_sig
//! ```
//!
//! are integrated over the element area once. Thickness enters through the moduli
//! integrals and the resistance only; it cancels everywhere else.
//!
//! The resistance comes from the displacement and rotation stationarity rows,
//! `R_u = H2 alpha + H1 s` and `R_theta = H3 s`, with `alpha` and `s` the projections of the
//! material stress and couple stress. Folding `H5^-T H2^T` and `H4^-T [H1^T H3^T]` into the
//! per-point interpolations gives the equivalent strain matrices `g_eps` and `g_kap`, so the
//! element behaves like a displacement element with no element-level iteration.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, Vector2, Vector3};

use crate::basis::{
    self, eval_basis, field_size, mode_count, operator_matrices, strain_stress_basis, Field,
    ModeFrame, QuadratureRule,
};
use crate::error::{Error, Result};
use crate::material::{MaterialPoint, PointLaw};
use crate::model::{ElementKind, Formulation};

/// Largest accepted condition number of H4 and H5.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadPoint {
    /// Quadrature weight times Jacobian determinant.
    pub weight: f64,
    pub x: [f64; 2],
    /// 3 x n_modes.
    pub phi_eps: DMatrix<f64>,
    /// 2 x 2n_mu; curvature and couple stress share this interpolation.
    pub phi_kap: DMatrix<f64>,
    /// Element DoFs to strain.
    pub g_eps: DMatrix<f64>,
    /// Element DoFs to the interpolated curvature variable of the chosen form.
    pub g_kap: DMatrix<f64>,
}

/// Per-point material tangents: `c` for strain, `d` for engineering curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTangent {
    pub c: Matrix3<f64>,
    pub d: Matrix2<f64>,
}

impl From<&MaterialPoint> for PointTangent {
    fn from(p: &MaterialPoint) -> Self {
        PointTangent { c: p.c_t, d: p.d_t }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementArrays {
    pub kind: ElementKind,
    pub form: Formulation,
    pub coords: Vec<[f64; 2]>,
    pub frame: ModeFrame,
    pub h1: DMatrix<f64>,
    pub h2: DMatrix<f64>,
    pub h3: DMatrix<f64>,
    pub h4: DMatrix<f64>,
    pub h5: DMatrix<f64>,
    pub h4_inv: DMatrix<f64>,
    pub h5_inv: DMatrix<f64>,
    pub cond_h4: f64,
    pub cond_h5: f64,
    pub points: Vec<QuadPoint>,
}

fn u_dof(j: usize) -> usize {
    3 * (j / 2) + j % 2
}

fn theta_dof(a: usize) -> usize {
    3 * a + 2
}

fn condition(m: &DMatrix<f64>) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn checked_inverse(m: &DMatrix<f64>, name: &'static str) -> Result<(DMatrix<f64>, f64)> {
    let cond = condition(m);
    if !(cond < MAX_CONDITION) {
        return Err(Error::SingularElementMatrix {
            element: 0,
            matrix: name,
            condition: cond,
        });
    }
    let inv = m.clone().full_piv_lu().try_inverse().ok_or(Error::SingularElementMatrix {
        element: 0,
        matrix: name,
        condition: cond,
    })?;
    Ok((inv, cond))
}

impl ElementArrays {
    pub fn build(kind: ElementKind, coords: &[[f64; 2]], form: Formulation) -> Result<Self> {
        Self::build_with_rule(kind, coords, form, &basis::quadrature(kind))
    }

    pub fn build_with_rule(
        kind: ElementKind,
        coords: &[[f64; 2]],
        form: Formulation,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        assert!(kind.is_membrane(), "{kind} is not a mixed element");
        let n = kind.node_count();
        let nm = field_size(kind, Field::Mu);
        let modes = mode_count(kind);
        let frame = ModeFrame::new(kind, coords)?;

        let mut h1 = DMatrix::zeros(2 * n, 2 * nm);
        let mut h2 = DMatrix::zeros(2 * n, modes);
        let mut h3 = DMatrix::zeros(n, 2 * nm);
        let mut mass = DMatrix::zeros(2 * nm, 2 * nm);
        let mut h5 = DMatrix::zeros(modes, modes);
        let mut raw = Vec::with_capacity(rule.len());

        for (p, w) in rule.iter() {
            let bu = eval_basis(kind, Field::U, p, coords)?;
            let bt = eval_basis(kind, Field::Theta, p, coords)?;
            let bm = eval_basis(kind, Field::Mu, p, coords)?;
            let ops = operator_matrices(&bu, &bt, &bm);
            let weight = w * bu.det_jacobian;
            let x = basis::map_point(kind, p, coords);
            let phi = strain_stress_basis(kind, &frame, x);

            h1 -= ops.b_curl_u.transpose() * &ops.b_curl_mu * (2.0 * weight);
            h2 += ops.b_sym.transpose() * &phi * weight;
            h3 += (ops.phi_theta.transpose() * &ops.b_curl_mu
                - ops.b_curl_theta.transpose() * &ops.phi_mu)
                * (2.0 * weight);
            mass += ops.phi_mu.transpose() * &ops.phi_mu * weight;
            h5 += phi.transpose() * &phi * weight;
            raw.push((weight, x, phi, ops.phi_mu));
        }
        let h4 = match form {
            Formulation::KappaForm => mass * -2.0,
            Formulation::KForm => mass,
        };
        let (h4_inv, cond_h4) = checked_inverse(&h4, "H4")?;
        let (h5_inv, cond_h5) = checked_inverse(&h5, "H5")?;
        log::trace!("{kind}: cond(H4) = {cond_h4:.3e}, cond(H5) = {cond_h5:.3e}");

        // equivalent strain matrices, scattered to element DoF order
        let beta_map = h5_inv.transpose() * h2.transpose(); // modes x 2n
        let mut coupling = DMatrix::zeros(2 * nm, 3 * n); // [H1^T | H3^T] in DoF order
        for j in 0..2 * n {
            coupling.set_column(u_dof(j), &h1.row(j).transpose());
        }
        for a in 0..n {
            coupling.set_column(theta_dof(a), &h3.row(a).transpose());
        }
        let r_map = h4_inv.transpose() * coupling; // 2nm x 3n

        let points = raw
            .into_iter()
            .map(|(weight, x, phi_eps, phi_kap)| {
                let strain = &phi_eps * &beta_map;
                let mut g_eps = DMatrix::zeros(3, 3 * n);
                for j in 0..2 * n {
                    g_eps.set_column(u_dof(j), &strain.column(j));
                }
                let g_kap = &phi_kap * &r_map;
                QuadPoint {
                    weight,
                    x,
                    phi_eps,
                    phi_kap,
                    g_eps,
                    g_kap,
                }
            })
            .collect();

        Ok(ElementArrays {
            kind,
            form,
            coords: coords.to_vec(),
            frame,
            h1,
            h2,
            h3,
            h4,
            h5,
            h4_inv,
            h5_inv,
            cond_h4,
            cond_h5,
            points,
        })
    }

    pub fn n_dof(&self) -> usize {
        3 * self.kind.node_count()
    }

    /// Engineering curvature per unit of the interpolated curvature variable. Also maps
    /// couple stress to the work conjugate of that variable.
    pub fn form_factor(&self) -> f64 {
        match self.form {
            Formulation::KappaForm => -2.0,
            Formulation::KForm => 1.0,
        }
    }

    /// `E1 = ∫ phi_eps^T C phi_eps` and `E2 = ∫ phi_kap^T D phi_kap`, with `D` the tangent
    /// of the curvature variable of the chosen form.
    pub fn moduli_integrals(&self, tangents: &[PointTangent], thickness: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        assert_eq!(tangents.len(), self.points.len());
        let f2 = self.form_factor().powi(2);
        let modes = self.h5.nrows();
        let nk = self.h4.nrows();
        let mut e1 = DMatrix::zeros(modes, modes);
        let mut e2 = DMatrix::zeros(nk, nk);
        for (pt, tg) in self.points.iter().zip(tangents) {
            let c = DMatrix::from_column_slice(3, 3, tg.c.as_slice());
            let d = DMatrix::from_column_slice(2, 2, tg.d.as_slice()) * f2;
            e1 += pt.phi_eps.transpose() * c * &pt.phi_eps * (pt.weight * thickness);
            e2 += pt.phi_kap.transpose() * d * &pt.phi_kap * (pt.weight * thickness);
        }
        (e1, e2)
    }

    fn assemble_blocks(&self, strain_kernel: &DMatrix<f64>, couple_kernel: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.kind.node_count();
        let kuu = &self.h2 * strain_kernel * self.h2.transpose()
            + &self.h1 * couple_kernel * self.h1.transpose();
        let kut = &self.h1 * couple_kernel * self.h3.transpose();
        let ktu = &self.h3 * couple_kernel * self.h1.transpose();
        let ktt = &self.h3 * couple_kernel * self.h3.transpose();
        let mut k = DMatrix::zeros(3 * n, 3 * n);
        for i in 0..2 * n {
            for j in 0..2 * n {
                k[(u_dof(i), u_dof(j))] = kuu[(i, j)];
            }
            for b in 0..n {
                k[(u_dof(i), theta_dof(b))] = kut[(i, b)];
                k[(theta_dof(b), u_dof(i))] = ktu[(b, i)];
            }
        }
        for a in 0..n {
            for b in 0..n {
                k[(theta_dof(a), theta_dof(b))] = ktt[(a, b)];
            }
        }
        k
    }

    /// Stiffness through the inverses of the constant matrices H4 and H5.
    pub fn stiffness_option2(&self, tangents: &[PointTangent], thickness: f64) -> DMatrix<f64> {
        let (e1, e2) = self.moduli_integrals(tangents, thickness);
        let strain = &self.h5_inv * e1 * self.h5_inv.transpose();
        let couple = &self.h4_inv * e2 * self.h4_inv.transpose();
        self.assemble_blocks(&strain, &couple)
    }

    /// Stiffness through the inverses of the moduli integrals E1 and E2.
    pub fn stiffness_option1(&self, tangents: &[PointTangent], thickness: f64) -> Result<DMatrix<f64>> {
        let (e1, e2) = self.moduli_integrals(tangents, thickness);
        let report = stability_counts(self.kind, self.points.len());
        let fail = |what: &str| {
            Error::Stability(format!(
                "{what} is singular; requires n_ip * min(i, j, m, n) >= max(i, j, m, n, n_k - n_f), here {} >= {}",
                report.lhs, report.rhs
            ))
        };
        let e1_inv = invert_or(&e1, || fail("E1"))?;
        let e2_inv = invert_or(&e2, || fail("E2"))?;
        let strain = invert_or(&(self.h5.transpose() * e1_inv * &self.h5), || fail("H5^T E1^-1 H5"))?;
        let couple = invert_or(&(self.h4.transpose() * e2_inv * &self.h4), || fail("H4^T E2^-1 H4"))?;
        Ok(self.assemble_blocks(&strain, &couple))
    }

    /// Stiffness summed point by point through the equivalent strain matrices.
    pub fn equivalent_stiffness(&self, tangents: &[PointTangent], thickness: f64) -> DMatrix<f64> {
        let f2 = self.form_factor().powi(2);
        let nd = self.n_dof();
        let mut k = DMatrix::zeros(nd, nd);
        for (pt, tg) in self.points.iter().zip(tangents) {
            let c = DMatrix::from_column_slice(3, 3, tg.c.as_slice());
            let d = DMatrix::from_column_slice(2, 2, tg.d.as_slice()) * f2;
            let s = pt.weight * thickness;
            k += pt.g_eps.transpose() * c * &pt.g_eps * s;
            k += pt.g_kap.transpose() * d * &pt.g_kap * s;
        }
        k
    }

    /// Strain and engineering curvature at each point for element DoFs `d`.
    pub fn point_kinematics(&self, d: &DVector<f64>) -> Vec<(Vector3<f64>, Vector2<f64>)> {
        let f = self.form_factor();
        self.points
            .iter()
            .map(|pt| {
                let e = &pt.g_eps * d;
                let c = &pt.g_kap * d;
                (Vector3::new(e[0], e[1], e[2]), Vector2::new(f * c[0], f * c[1]))
            })
            .collect()
    }

    /// Updates every material point for element DoFs `d` and returns resistance and tangent.
    pub fn update_and_resist(
        &self,
        d: &DVector<f64>,
        points: &mut [MaterialPoint],
        law: &PointLaw,
        eta: f64,
        thickness: f64,
    ) -> Result<(DVector<f64>, DMatrix<f64>)> {
        assert_eq!(points.len(), self.points.len());
        let f = self.form_factor();
        let nd = self.n_dof();
        let mut r = DVector::zeros(nd);
        let mut k = DMatrix::zeros(nd, nd);
        for (g, ((eps, kc), (qp, mp))) in self
            .point_kinematics(d)
            .into_iter()
            .zip(self.points.iter().zip(points.iter_mut()))
            .enumerate()
        {
            mp.update(law, eps, kc, eta).map_err(|e| match e {
                Error::MaterialFailure { message, .. } => Error::MaterialFailure {
                    element: 0,
                    point: g,
                    message,
                },
                other => other,
            })?;
            let s = qp.weight * thickness;
            let sig = DVector::from_column_slice(mp.sig.as_slice());
            let conj = DVector::from_column_slice((mp.mu_couple * f).as_slice());
            r += qp.g_eps.transpose() * sig * s;
            r += qp.g_kap.transpose() * conj * s;
            let c = DMatrix::from_column_slice(3, 3, mp.c_t.as_slice());
            let dd = DMatrix::from_column_slice(2, 2, mp.d_t.as_slice()) * (f * f);
            k += qp.g_eps.transpose() * c * &qp.g_eps * s;
            k += qp.g_kap.transpose() * dd * &qp.g_kap * s;
        }
        Ok((r, k))
    }

    /// Stress coefficients `alpha` and couple-stress nodal values `s` projected from the
    /// current material response.
    pub fn projections(&self, points: &[MaterialPoint]) -> (DVector<f64>, DVector<f64>) {
        let f = self.form_factor();
        let mut a = DVector::zeros(self.h5.nrows());
        let mut m = DVector::zeros(self.h4.nrows());
        for (qp, mp) in self.points.iter().zip(points) {
            let sig = DVector::from_column_slice(mp.sig.as_slice());
            let conj = DVector::from_column_slice((mp.mu_couple * f).as_slice());
            a += qp.phi_eps.transpose() * sig * qp.weight;
            m += qp.phi_kap.transpose() * conj * qp.weight;
        }
        (&self.h5_inv * a, &self.h4_inv * m)
    }

    /// Resistance assembled literally as `[H2 alpha + H1 s; H3 s]`.
    pub fn stationary_resistance(&self, points: &[MaterialPoint], thickness: f64) -> DVector<f64> {
        let (alpha, s) = self.projections(points);
        let ru = (&self.h2 * alpha + &self.h1 * &s) * thickness;
        let rt = &self.h3 * s * thickness;
        let n = self.kind.node_count();
        let mut r = DVector::zeros(3 * n);
        for j in 0..2 * n {
            r[u_dof(j)] = ru[j];
        }
        for a in 0..n {
            r[theta_dof(a)] = rt[a];
        }
        r
    }

    /// Independent stress and couple-stress fields at the quadrature points and the nodes.
    pub fn recover_fields(&self, points: &[MaterialPoint]) -> FieldRecovery {
        let (alpha, s) = self.projections(points);
        let sigma_at = |x: [f64; 2]| {
            let v = strain_stress_basis(self.kind, &self.frame, x) * &alpha;
            Vector3::new(v[0], v[1], v[2])
        };
        let point_fields = self
            .points
            .iter()
            .zip(points)
            .map(|(qp, mp)| {
                let mu = &qp.phi_kap * &s;
                PointFields {
                    x: qp.x,
                    sigma: sigma_at(qp.x),
                    mu: Vector2::new(mu[0], mu[1]),
                    eps: mp.eps_trial,
                    k: mp.k_trial,
                    peeq: mp.peeq,
                }
            })
            .collect();
        let nm = s.len() / 2;
        let nodal_mu = basis::parent_nodes(self.kind)
            .iter()
            .map(|p| {
                let (v, _) = basis::parent_shape(self.kind, Field::Mu, p[0], p[1]);
                (0..nm).fold(Vector2::zeros(), |acc, a| {
                    acc + Vector2::new(s[2 * a], s[2 * a + 1]) * v[a]
                })
            })
            .collect();
        FieldRecovery {
            points: point_fields,
            nodal_sigma: self.coords.iter().map(|x| sigma_at(*x)).collect(),
            nodal_mu,
            alpha,
            s,
        }
    }
}

fn invert_or(m: &DMatrix<f64>, err: impl Fn() -> Error) -> Result<DMatrix<f64>> {
    if !(condition(m) < MAX_CONDITION) {
        return Err(err());
    }
    m.clone().full_piv_lu().try_inverse().ok_or_else(err)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointFields {
    pub x: [f64; 2],
    pub sigma: Vector3<f64>,
    pub mu: Vector2<f64>,
    pub eps: Vector3<f64>,
    pub k: Vector2<f64>,
    pub peeq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRecovery {
    pub points: Vec<PointFields>,
    pub nodal_sigma: Vec<Vector3<f64>>,
    pub nodal_mu: Vec<Vector2<f64>>,
    pub alpha: DVector<f64>,
    pub s: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub kind: ElementKind,
    pub n_ip: usize,
    /// Rows and columns of the strain interpolation.
    pub i: usize,
    pub j: usize,
    /// Rows and columns of the curvature interpolation.
    pub m: usize,
    pub n: usize,
    pub n_k: usize,
    pub n_f: usize,
    pub lhs: usize,
    pub rhs: usize,
    pub inequality_holds: bool,
    pub zero_modes: usize,
    pub spectral_pass: bool,
    pub cond_h4: f64,
    pub cond_h5: f64,
}

impl StabilityReport {
    pub fn discrepancy(&self) -> bool {
        self.inequality_holds != self.spectral_pass
    }
}

fn stability_counts(kind: ElementKind, n_ip: usize) -> StabilityReport {
    let i = 3;
    let j = mode_count(kind);
    let m = 2;
    let n = 2 * field_size(kind, Field::Mu);
    let n_k = 3 * kind.node_count();
    let n_f = 3;
    let lhs = n_ip * i.min(j).min(m).min(n);
    let rhs = i.max(j).max(m).max(n).max(n_k - n_f);
    StabilityReport {
        kind,
        n_ip,
        i,
        j,
        m,
        n,
        n_k,
        n_f,
        lhs,
        rhs,
        inequality_holds: lhs >= rhs,
        zero_modes: 0,
        spectral_pass: false,
        cond_h4: f64::NAN,
        cond_h5: f64::NAN,
    }
}

/// Eigenvalues below this fraction of the largest count as zero-energy modes.
pub const ZERO_MODE_RATIO: f64 = 1e-8;

pub fn count_zero_modes(k: &DMatrix<f64>) -> usize {
    let sym = (k + k.transpose()) * 0.5;
    let ev = sym.symmetric_eigenvalues();
    let max = ev.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    ev.iter().filter(|v| v.abs() < ZERO_MODE_RATIO * max).count()
}

/// Reference-geometry node coordinates used by the stability check.
pub fn reference_coords(kind: ElementKind) -> Vec<[f64; 2]> {
    basis::parent_nodes(kind)
}

/// Evaluates the counting inequality and the single-element spectral test.
pub fn check_stability(kind: ElementKind) -> Result<StabilityReport> {
    if !kind.is_membrane() {
        return Err(Error::model(format!("{kind} is not a mixed element")));
    }
    let rule = basis::quadrature(kind);
    let mut report = stability_counts(kind, rule.len());
    let arrays = ElementArrays::build(kind, &reference_coords(kind), Formulation::KForm)?;
    let law = crate::material::elastic_tangent(1.0, 0.25, crate::model::Assumption::PlaneStress)?;
    let eta = 1.0 / (2.0 * 1.25);
    let tangent = PointTangent {
        c: law,
        d: Matrix2::identity() * (4.0 * eta),
    };
    let k = arrays.stiffness_option2(&vec![tangent; arrays.points.len()], 1.0);
    report.zero_modes = count_zero_modes(&k);
    report.spectral_pass = report.zero_modes == report.n_f;
    report.cond_h4 = arrays.cond_h4;
    report.cond_h5 = arrays.cond_h5;
    Ok(report)
}
