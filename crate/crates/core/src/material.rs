//! Constitutive point models: isotropic elasticity, the elastic couple-stress law and
//! plane-stress J2 plasticity with linear isotropic hardening or softening.
//!
//! Strains are Voigt vectors `(eps_x, eps_y, gamma_xy)` with engineering shear; curvatures are
//! the engineering curvature pair `k = (k_x, k_y)`.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::model::{Assumption, MaterialDef, MaterialKind};

const MAX_LOCAL_ITERS: usize = 50;

pub fn elastic_tangent(e: f64, nu: f64, assumption: Assumption) -> Result<Matrix3<f64>> {
    match assumption {
        Assumption::PlaneStress => {
            if (1.0 - nu * nu).abs() < f64::EPSILON {
                return Err(Error::SingularMaterial(format!("nu = {nu} under plane stress")));
            }
            let f = e / (1.0 - nu * nu);
            Ok(Matrix3::new(
                f, f * nu, 0.0,
                f * nu, f, 0.0,
                0.0, 0.0, f * (1.0 - nu) / 2.0,
            ))
        }
        Assumption::PlaneStrain => {
            let den = (1.0 + nu) * (1.0 - 2.0 * nu);
            if den.abs() < 1e-12 {
                return Err(Error::SingularMaterial(format!("nu = {nu} under plane strain")));
            }
            let f = e / den;
            Ok(Matrix3::new(
                f * (1.0 - nu), f * nu, 0.0,
                f * nu, f * (1.0 - nu), 0.0,
                0.0, 0.0, f * (1.0 - 2.0 * nu) / 2.0,
            ))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticModuli {
    pub c: Matrix3<f64>,
    pub lambda: f64,
    pub mu_shear: f64,
    /// Couple modulus, `l^2 * mu_shear`.
    pub eta: f64,
}

impl ElasticModuli {
    pub fn new(e: f64, nu: f64, assumption: Assumption, l: f64) -> Result<Self> {
        let mu_shear = e / (2.0 * (1.0 + nu));
        Ok(ElasticModuli {
            c: elastic_tangent(e, nu, assumption)?,
            lambda: e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)),
            mu_shear,
            eta: l * l * mu_shear,
        })
    }
}

/// Elastic couple law `mu = 4 eta k`; the tangent is constant.
pub fn couple_update(k: Vector2<f64>, eta: f64) -> (Vector2<f64>, Matrix2<f64>) {
    (4.0 * eta * k, Matrix2::identity() * (4.0 * eta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct J2Params {
    pub e: f64,
    pub nu: f64,
    pub sigma_y: f64,
    /// Uniaxial post-yield tangent divided by `e`.
    pub b: f64,
    /// The yield stress never drops below `residual * sigma_y`.
    pub residual: f64,
}

impl J2Params {
    pub const DEFAULT_RESIDUAL: f64 = 1e-3;

    pub fn new(e: f64, nu: f64, sigma_y: f64, b: f64) -> Self {
        J2Params {
            e,
            nu,
            sigma_y,
            b,
            residual: Self::DEFAULT_RESIDUAL,
        }
    }

    /// Isotropic modulus `H` such that the uniaxial tangent is `E H / (E + H) = b E`.
    pub fn hardening_modulus(&self) -> f64 {
        self.b * self.e / (1.0 - self.b)
    }

    /// Current yield stress and its slope with respect to the equivalent plastic strain.
    pub fn yield_stress(&self, peeq: f64) -> (f64, f64) {
        let h = self.hardening_modulus();
        let s = self.sigma_y + h * peeq;
        let floor = self.residual * self.sigma_y;
        if s > floor {
            (s, h)
        } else {
            (floor, 0.0)
        }
    }
}

/// Constitutive law attached to a membrane quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PointLaw {
    Elastic(Matrix3<f64>),
    J2(J2Params),
}

impl PointLaw {
    pub fn from_def(def: &MaterialDef) -> Result<Self> {
        match def.kind {
            MaterialKind::Elastic => Ok(PointLaw::Elastic(elastic_tangent(def.e, def.nu, def.assumption)?)),
            MaterialKind::J2 => {
                if def.assumption != Assumption::PlaneStress {
                    return Err(Error::model(format!(
                        "material {}: j2 requires plane_stress",
                        def.id
                    )));
                }
                Ok(PointLaw::J2(J2Params::new(
                    def.e,
                    def.nu,
                    def.sigma_y.unwrap_or(f64::INFINITY),
                    def.b.unwrap_or(0.0),
                )))
            }
        }
    }
}

/// State at one quadrature point. Trial quantities are overwritten on every update and
/// only become committed on [`MaterialPoint::commit`].
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialPoint {
    pub eps_committed: Vector3<f64>,
    pub eps_trial: Vector3<f64>,
    pub sig_committed: Vector3<f64>,
    pub sig: Vector3<f64>,
    pub k_committed: Vector2<f64>,
    pub k_trial: Vector2<f64>,
    pub mu_committed: Vector2<f64>,
    pub mu_couple: Vector2<f64>,
    pub peeq_committed: f64,
    pub peeq: f64,
    pub eps_plastic_committed: Vector3<f64>,
    pub eps_plastic: Vector3<f64>,
    pub c_t: Matrix3<f64>,
    pub d_t: Matrix2<f64>,
}

impl MaterialPoint {
    pub fn new(law: &PointLaw, eta: f64) -> Result<Self> {
        let c = match law {
            PointLaw::Elastic(c) => *c,
            PointLaw::J2(p) => elastic_tangent(p.e, p.nu, Assumption::PlaneStress)?,
        };
        Ok(MaterialPoint {
            eps_committed: Vector3::zeros(),
            eps_trial: Vector3::zeros(),
            sig_committed: Vector3::zeros(),
            sig: Vector3::zeros(),
            k_committed: Vector2::zeros(),
            k_trial: Vector2::zeros(),
            mu_committed: Vector2::zeros(),
            mu_couple: Vector2::zeros(),
            peeq_committed: 0.0,
            peeq: 0.0,
            eps_plastic_committed: Vector3::zeros(),
            eps_plastic: Vector3::zeros(),
            c_t: c,
            d_t: Matrix2::identity() * (4.0 * eta),
        })
    }

    /// Updates the trial state from total strain and engineering curvature.
    pub fn update(&mut self, law: &PointLaw, eps: Vector3<f64>, k: Vector2<f64>, eta: f64) -> Result<()> {
        match law {
            PointLaw::Elastic(c) => {
                self.eps_trial = eps;
                self.sig = c * eps;
                self.c_t = *c;
            }
            PointLaw::J2(p) => {
                j2_update(self, eps, p)?;
            }
        }
        let (mu, d) = couple_update(k, eta);
        self.k_trial = k;
        self.mu_couple = mu;
        self.d_t = d;
        Ok(())
    }

    pub fn commit(&mut self) {
        self.eps_committed = self.eps_trial;
        self.sig_committed = self.sig;
        self.k_committed = self.k_trial;
        self.mu_committed = self.mu_couple;
        self.peeq_committed = self.peeq;
        self.eps_plastic_committed = self.eps_plastic;
    }

    pub fn rollback(&mut self) {
        self.eps_trial = self.eps_committed;
        self.sig = self.sig_committed;
        self.k_trial = self.k_committed;
        self.mu_couple = self.mu_committed;
        self.peeq = self.peeq_committed;
        self.eps_plastic = self.eps_plastic_committed;
    }

    /// Committed fields folded into one number, for change detection.
    pub fn committed_checksum(&self) -> f64 {
        self.eps_committed.iter().sum::<f64>()
            + 3.0 * self.sig_committed.iter().sum::<f64>()
            + 5.0 * self.k_committed.iter().sum::<f64>()
            + 7.0 * self.mu_committed.iter().sum::<f64>()
            + 11.0 * self.peeq_committed
            + 13.0 * self.eps_plastic_committed.iter().sum::<f64>()
    }
}

/// `sigma^T P sigma = 2 J2` for plane stress in Voigt notation.
fn projector() -> Matrix3<f64> {
    Matrix3::new(
        2.0 / 3.0, -1.0 / 3.0, 0.0,
        -1.0 / 3.0, 2.0 / 3.0, 0.0,
        0.0, 0.0, 2.0,
    )
}

/// Plane-stress return mapping with linear isotropic hardening. Starts from the committed
/// plastic state of `point`, writes the trial state and returns stress and algorithmic tangent.
pub fn j2_update(
    point: &mut MaterialPoint,
    eps_trial: Vector3<f64>,
    params: &J2Params,
) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    let c = elastic_tangent(params.e, params.nu, Assumption::PlaneStress)?;
    let p = projector();
    let sig_tr = c * (eps_trial - point.eps_plastic_committed);
    let peeq_n = point.peeq_committed;

    point.eps_trial = eps_trial;
    let (sy_n, _) = params.yield_stress(peeq_n);
    let phi_tr = 0.5 * sig_tr.dot(&(p * sig_tr)) - sy_n * sy_n / 3.0;
    if phi_tr <= 1e-14 * sy_n * sy_n {
        point.sig = sig_tr;
        point.c_t = c;
        point.peeq = peeq_n;
        point.eps_plastic = point.eps_plastic_committed;
        return Ok((sig_tr, c));
    }

    let c_inv = c.try_inverse().expect("plane-stress elasticity is invertible");
    let strain_tr = c_inv * sig_tr;
    let eval = |dg: f64| {
        let xi_m = (c_inv + p * dg).try_inverse().expect("positive definite");
        let sig = xi_m * strain_tr;
        let xi = sig.dot(&(p * sig));
        let r = (2.0 * xi / 3.0).sqrt();
        let peeq = peeq_n + dg * r;
        let (sy, h) = params.yield_stress(peeq);
        let phi = 0.5 * xi - sy * sy / 3.0;
        let a = xi_m * (p * sig);
        let cc = 0.5 - 2.0 * sy * h * dg / (9.0 * r);
        let dphi = -2.0 * cc * sig.dot(&(p * a)) - 2.0 / 3.0 * sy * h * r;
        (phi, dphi, sig, xi_m, a, r, peeq, sy, h, cc)
    };

    // safeguarded Newton on the consistency condition
    let scale = sy_n * sy_n;
    let (mut lo, mut hi) = (0.0, f64::INFINITY);
    let mut dg = 0.0;
    for _ in 0..MAX_LOCAL_ITERS {
        let (phi, dphi, sig, xi_m, a, r, peeq, sy, h, cc) = eval(dg);
        if phi.abs() <= 1e-13 * scale.max(sy * sy) {
            let denom = 2.0 * cc * sig.dot(&(p * a)) + 2.0 / 3.0 * sy * h * r;
            let tangent = xi_m - (a * a.transpose()) * (2.0 * cc / denom);
            point.sig = sig;
            point.c_t = tangent;
            point.peeq = peeq;
            point.eps_plastic = eps_trial - c_inv * sig;
            return Ok((sig, tangent));
        }
        if phi > 0.0 {
            lo = dg;
        } else {
            hi = dg;
        }
        let mut next = if dphi < 0.0 { dg - phi / dphi } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else if dg > 0.0 {
                2.0 * dg
            } else {
                1.0 / params.e
            };
        }
        dg = next;
    }
    Err(Error::MaterialFailure {
        element: 0,
        point: 0,
        message: format!("return mapping did not converge in {MAX_LOCAL_ITERS} iterations"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn plane_stress_entries() {
        let c = elastic_tangent(10.0, 0.25, Assumption::PlaneStress).unwrap();
        assert_relative_eq!(c[(0, 0)], 10.0 / (1.0 - 0.0625), epsilon = 1e-13);
        let c = elastic_tangent(1000.0, 0.2, Assumption::PlaneStress).unwrap();
        assert_relative_eq!(c[(0, 0)], 1000.0 / 0.96, epsilon = 1e-12);
        let c = elastic_tangent(4.0, 0.0, Assumption::PlaneStrain).unwrap();
        assert_eq!(c, Matrix3::from_diagonal(&Vector3::new(4.0, 4.0, 2.0)));
    }

    #[test]
    fn incompressible_plane_strain_is_singular() {
        assert!(matches!(
            elastic_tangent(1.0, 0.5, Assumption::PlaneStrain),
            Err(Error::SingularMaterial(_))
        ));
    }

    #[test]
    fn couple_law() {
        assert_eq!(couple_update(Vector2::zeros(), 1.0).0, Vector2::zeros());
        assert_eq!(couple_update(Vector2::new(0.0, 1.0), 1.0).0, Vector2::new(0.0, 4.0));
        let m = ElasticModuli::new(2.0, 0.0, Assumption::PlaneStress, 0.1).unwrap();
        assert_relative_eq!(m.mu_shear, 1.0);
        let (mu, d) = couple_update(Vector2::new(1.0, 0.0), m.eta);
        assert_relative_eq!(mu[0], 0.04, epsilon = 1e-15);
        assert_relative_eq!(d[(1, 1)], 0.04, epsilon = 1e-15);
    }

    #[test]
    fn hardening_modulus_gives_uniaxial_slope() {
        let p = J2Params::new(1000.0, 0.2, 1.0, -0.02);
        let h = p.hardening_modulus();
        assert_relative_eq!(p.e * h / (p.e + h), -20.0, epsilon = 1e-12);
    }

    #[test]
    fn elastic_below_yield() {
        let p = J2Params::new(1000.0, 0.2, 1.0, -0.02);
        let mut pt = MaterialPoint::new(&PointLaw::J2(p), 0.0).unwrap();
        let eps = Vector3::new(0.0005, -0.0001, 0.0);
        let (s, _) = j2_update(&mut pt, eps, &p).unwrap();
        assert_relative_eq!(s[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(s[1], 0.0, epsilon = 1e-14);
        assert_eq!(pt.peeq, 0.0);
    }

    #[test]
    fn rollback_restores_committed() {
        let p = J2Params::new(1000.0, 0.2, 1.0, 0.1);
        let law = PointLaw::J2(p);
        let mut pt = MaterialPoint::new(&law, 1.0).unwrap();
        pt.update(&law, Vector3::new(0.003, 0.0, 0.001), Vector2::new(0.1, 0.0), 1.0).unwrap();
        pt.commit();
        let before = pt.clone();
        pt.update(&law, Vector3::new(0.01, 0.0, 0.0), Vector2::new(0.5, 0.2), 1.0).unwrap();
        assert!(pt.peeq > before.peeq);
        pt.rollback();
        assert_eq!(pt.committed_checksum(), before.committed_checksum());
        assert_eq!(pt.peeq, before.peeq);
        assert_eq!(pt.sig, before.sig);
    }
}
