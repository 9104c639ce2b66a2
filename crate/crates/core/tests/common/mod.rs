#![allow(dead_code)]

use csfem::basis;
use csfem::element::{ElementArrays, PointTangent};
use csfem::material::elastic_tangent;
use csfem::model::{Assumption, ElementKind, Formulation};
use nalgebra::Matrix2;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const GEOMETRIES_PER_KIND: usize = 20;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Parent nodes jiggled, then sheared, scaled, rotated and shifted. Retries until the
/// element builds with a positive Jacobian.
pub fn random_element(kind: ElementKind, form: Formulation, rng: &mut StdRng) -> ElementArrays {
    let jiggle = if kind.is_triangle() { 0.06 } else { 0.15 };
    loop {
        let (s, c) = rng.random_range(0.0..std::f64::consts::TAU).sin_cos();
        let (sx, sy) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let shear = rng.random_range(-0.3..0.3);
        let shift = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
        let coords: Vec<[f64; 2]> = basis::parent_nodes(kind)
            .into_iter()
            .map(|p| {
                let x = p[0] + rng.random_range(-jiggle..jiggle);
                let y = p[1] + rng.random_range(-jiggle..jiggle);
                let (u, v) = (sx * x + shear * y, sy * y);
                [c * u - s * v + shift[0], s * u + c * v + shift[1]]
            })
            .collect();
        if let Ok(a) = ElementArrays::build(kind, &coords, form) {
            return a;
        }
    }
}

pub fn elastic_tangents(a: &ElementArrays, e: f64, nu: f64, eta: f64) -> Vec<PointTangent> {
    let c = elastic_tangent(e, nu, Assumption::PlaneStress).unwrap();
    vec![PointTangent { c, d: Matrix2::identity() * (4.0 * eta) }; a.points.len()]
}
