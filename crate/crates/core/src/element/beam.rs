use nalgebra::Matrix6;

use crate::error::{Error, Result};

/// Two-node Euler-Bernoulli frame element in the global frame.
/// DoF order: (ux, uy, rz) at node 1, then node 2.
pub fn beam_stiffness(e: f64, area: f64, inertia: f64, coords: [[f64; 2]; 2]) -> Result<Matrix6<f64>> {
    let dx = coords[1][0] - coords[0][0];
    let dy = coords[1][1] - coords[0][1];
    let len = dx.hypot(dy);
    if len <= 0.0 {
        return Err(Error::ZeroLengthBeam(0));
    }
    let (c, s) = (dx / len, dy / len);
    let ea = e * area / len;
    let ei = e * inertia;
    let k1 = 12.0 * ei / len.powi(3);
    let k2 = 6.0 * ei / len.powi(2);
    let k3 = 4.0 * ei / len;
    let k4 = 2.0 * ei / len;
    #[rustfmt::skip]
    let local = Matrix6::new(
        ea,  0.0, 0.0, -ea, 0.0, 0.0,
        0.0, k1,  k2,  0.0, -k1, k2,
        0.0, k2,  k3,  0.0, -k2, k4,
        -ea, 0.0, 0.0, ea,  0.0, 0.0,
        0.0, -k1, -k2, 0.0, k1,  -k2,
        0.0, k2,  k4,  0.0, -k2, k3,
    );
    let mut t = Matrix6::zeros();
    for b in [0, 3] {
        t[(b, b)] = c;
        t[(b, b + 1)] = s;
        t[(b + 1, b)] = -s;
        t[(b + 1, b + 1)] = c;
        t[(b + 2, b + 2)] = 1.0;
    }
    Ok(t.transpose() * local * t)
}
