//! Shape functions, quadrature rules, the isoparametric map and the 2D reductions of the
//! symmetric-gradient and half-curl operators.
//!
//! Node ordering: corners counter-clockwise first, then mid-side nodes. Triangles put
//! mid-side nodes on edges 1-2, 2-3, 3-1. Serendipity quadrilaterals place their mid-side
//! nodes, in order, on the present subset of edges 1-2, 2-3, 3-4, 4-1:
//! CSMQ5 uses edge 1-2, CSMQ6 edges 1-2 and 3-4, CSMQ7 edges 1-2, 2-3 and 3-4, CSMQ8 all four.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::model::ElementKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Geometry,
    U,
    Theta,
    Kappa,
    Mu,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldBasis {
    pub values: Vec<f64>,
    /// Cartesian derivatives (d/dx, d/dy) per shape function.
    pub grads: Vec<[f64; 2]>,
    pub det_jacobian: f64,
}

impl FieldBasis {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = ([f64; 2], f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }

    /// Tensor-product Gauss-Legendre rule on the biunit square.
    pub fn gauss_square(order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let mut points = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for j in 0..order {
            for i in 0..order {
                points.push([x[i], x[j]]);
                weights.push(w[i] * w[j]);
            }
        }
        QuadratureRule { points, weights }
    }

    /// Three-point rule on the unit triangle with interior points, exact for quadratics.
    pub fn triangle_three() -> Self {
        QuadratureRule {
            points: vec![[1.0 / 6.0, 1.0 / 6.0], [2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0]],
            weights: vec![1.0 / 6.0; 3],
        }
    }

    /// Four-point conical product rule on the unit triangle. Exact for cubics with
    /// positive weights; built from two-point Gauss-Legendre and Gauss-Jacobi (weight 1-t).
    pub fn triangle_four() -> Self {
        let g = 1.0 / 3f64.sqrt();
        let s = [(1.0 - g) / 2.0, (1.0 + g) / 2.0];
        let r6 = 6f64.sqrt();
        let t = [(4.0 - r6) / 10.0, (4.0 + r6) / 10.0];
        let wt = [(9.0 + r6) / 36.0, (9.0 - r6) / 36.0];
        let mut points = Vec::with_capacity(4);
        let mut weights = Vec::with_capacity(4);
        for (tj, wj) in t.iter().zip(wt) {
            for si in s {
                points.push([si * (1.0 - tj), *tj]);
                weights.push(0.5 * wj);
            }
        }
        QuadratureRule { points, weights }
    }

    /// Single point at the parent centre.
    pub fn single_point(kind: ElementKind) -> Self {
        if kind.is_triangle() {
            QuadratureRule {
                points: vec![[1.0 / 3.0, 1.0 / 3.0]],
                weights: vec![0.5],
            }
        } else {
            QuadratureRule {
                points: vec![[0.0, 0.0]],
                weights: vec![4.0],
            }
        }
    }
}

fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    match order {
        1 => (vec![0.0], vec![2.0]),
        2 => {
            let a = 1.0 / 3f64.sqrt();
            (vec![-a, a], vec![1.0, 1.0])
        }
        3 => {
            let a = (3.0f64 / 5.0).sqrt();
            (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
        }
        _ => panic!("unsupported Gauss order {order}"),
    }
}

/// Default rule per element kind.
pub fn quadrature(kind: ElementKind) -> QuadratureRule {
    match kind {
        ElementKind::Csmt3 => QuadratureRule::triangle_three(),
        ElementKind::Csmt6 => QuadratureRule::triangle_four(),
        ElementKind::Csmq4 => QuadratureRule::gauss_square(2),
        ElementKind::Csmq5 | ElementKind::Csmq6 | ElementKind::Csmq7 | ElementKind::Csmq8 => {
            QuadratureRule::gauss_square(3)
        }
        ElementKind::Beam2d => QuadratureRule::gauss_square(1),
    }
}

pub fn parent_center(kind: ElementKind) -> [f64; 2] {
    if kind.is_triangle() {
        [1.0 / 3.0, 1.0 / 3.0]
    } else {
        [0.0, 0.0]
    }
}

/// Mid-side edges (by corner pair, zero-based) carried by each quadrilateral kind.
fn quad_edges(kind: ElementKind) -> &'static [usize] {
    // edge e joins corner e and corner (e + 1) % 4
    match kind {
        ElementKind::Csmq4 => &[],
        ElementKind::Csmq5 => &[0],
        ElementKind::Csmq6 => &[0, 2],
        ElementKind::Csmq7 => &[0, 1, 2],
        ElementKind::Csmq8 => &[0, 1, 2, 3],
        _ => unreachable!(),
    }
}

/// Number of shape functions for a field of the given element kind.
pub fn field_size(kind: ElementKind, field: Field) -> usize {
    match (kind, field) {
        (ElementKind::Csmt6, Field::Kappa | Field::Mu) => 4,
        _ => kind.node_count(),
    }
}

/// Shape function values and parent-coordinate derivatives.
pub fn parent_shape(kind: ElementKind, field: Field, xi: f64, eta: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    match kind {
        ElementKind::Csmt3 => linear_triangle(xi, eta),
        ElementKind::Csmt6 => match field {
            Field::Kappa | Field::Mu => linear_triangle_with_bubble(xi, eta),
            _ => quadratic_triangle(xi, eta),
        },
        ElementKind::Beam2d => panic!("BEAM2D has no isoparametric basis"),
        _ => serendipity(quad_edges(kind), xi, eta),
    }
}

fn linear_triangle(xi: f64, eta: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    (
        vec![1.0 - xi - eta, xi, eta],
        vec![[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]],
    )
}

/// Corner functions plus the edge-2-3 product `4 L2 L3`.
fn linear_triangle_with_bubble(xi: f64, eta: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    let (mut n, mut d) = linear_triangle(xi, eta);
    n.push(4.0 * xi * eta);
    d.push([4.0 * eta, 4.0 * xi]);
    (n, d)
}

fn quadratic_triangle(xi: f64, eta: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    let l = [1.0 - xi - eta, xi, eta];
    let dl = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
    let mut n = Vec::with_capacity(6);
    let mut d = Vec::with_capacity(6);
    for i in 0..3 {
        n.push(l[i] * (2.0 * l[i] - 1.0));
        let c = 4.0 * l[i] - 1.0;
        d.push([c * dl[i][0], c * dl[i][1]]);
    }
    for (i, j) in [(0, 1), (1, 2), (2, 0)] {
        n.push(4.0 * l[i] * l[j]);
        d.push([
            4.0 * (dl[i][0] * l[j] + l[i] * dl[j][0]),
            4.0 * (dl[i][1] * l[j] + l[i] * dl[j][1]),
        ]);
    }
    (n, d)
}

const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Variable-node serendipity functions: bilinear corners corrected by half of each
/// adjacent mid-side function.
fn serendipity(edges: &[usize], xi: f64, eta: f64) -> (Vec<f64>, Vec<[f64; 2]>) {
    let mut n: Vec<f64> = Vec::with_capacity(4 + edges.len());
    let mut d: Vec<[f64; 2]> = Vec::with_capacity(4 + edges.len());
    for [a, b] in CORNERS {
        n.push(0.25 * (1.0 + a * xi) * (1.0 + b * eta));
        d.push([0.25 * a * (1.0 + b * eta), 0.25 * b * (1.0 + a * xi)]);
    }
    for &e in edges {
        let (m, dm) = match e {
            0 => (
                0.5 * (1.0 - xi * xi) * (1.0 - eta),
                [-xi * (1.0 - eta), -0.5 * (1.0 - xi * xi)],
            ),
            1 => (
                0.5 * (1.0 + xi) * (1.0 - eta * eta),
                [0.5 * (1.0 - eta * eta), -(1.0 + xi) * eta],
            ),
            2 => (
                0.5 * (1.0 - xi * xi) * (1.0 + eta),
                [-xi * (1.0 + eta), 0.5 * (1.0 - xi * xi)],
            ),
            3 => (
                0.5 * (1.0 - xi) * (1.0 - eta * eta),
                [-0.5 * (1.0 - eta * eta), -(1.0 - xi) * eta],
            ),
            _ => unreachable!(),
        };
        for c in [e, (e + 1) % 4] {
            n[c] -= 0.5 * m;
            d[c][0] -= 0.5 * dm[0];
            d[c][1] -= 0.5 * dm[1];
        }
        n.push(m);
        d.push(dm);
    }
    (n, d)
}

/// Geometry Jacobian (rows: d/dxi, d/deta; columns: x, y).
fn jacobian(kind: ElementKind, point: [f64; 2], coords: &[[f64; 2]]) -> Matrix2<f64> {
    let (_, dn) = parent_shape(kind, Field::Geometry, point[0], point[1]);
    let mut j = Matrix2::zeros();
    for (d, c) in dn.iter().zip(coords) {
        for r in 0..2 {
            j[(r, 0)] += d[r] * c[0];
            j[(r, 1)] += d[r] * c[1];
        }
    }
    j
}

/// Physical coordinates of a parent point.
pub fn map_point(kind: ElementKind, point: [f64; 2], coords: &[[f64; 2]]) -> [f64; 2] {
    let (n, _) = parent_shape(kind, Field::Geometry, point[0], point[1]);
    n.iter().zip(coords).fold([0.0, 0.0], |acc, (w, c)| {
        [acc[0] + w * c[0], acc[1] + w * c[1]]
    })
}

pub fn eval_basis(
    kind: ElementKind,
    field: Field,
    point: [f64; 2],
    coords: &[[f64; 2]],
) -> Result<FieldBasis> {
    debug_assert_eq!(coords.len(), kind.node_count());
    let j = jacobian(kind, point, coords);
    let det = j.determinant();
    // scale-aware threshold so that tiny but valid elements are accepted
    let size = j.norm_squared();
    if !(det > 1e-14 * size) {
        return Err(Error::SingularJacobian {
            det,
            xi: point[0],
            eta: point[1],
        });
    }
    let inv = j.try_inverse().expect("non-zero determinant");
    let (values, dn) = parent_shape(kind, field, point[0], point[1]);
    let grads = dn
        .iter()
        .map(|d| {
            [
                inv[(0, 0)] * d[0] + inv[(0, 1)] * d[1],
                inv[(1, 0)] * d[0] + inv[(1, 1)] * d[1],
            ]
        })
        .collect();
    Ok(FieldBasis {
        values,
        grads,
        det_jacobian: det,
    })
}

/// Origin and length scale for the polynomial strain/stress modes of one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrame {
    pub centroid: [f64; 2],
    pub scale: f64,
}

impl ModeFrame {
    pub fn new(kind: ElementKind, coords: &[[f64; 2]]) -> Result<Self> {
        let centroid = map_point(kind, parent_center(kind), coords);
        let mut area = 0.0;
        for (p, w) in quadrature(kind).iter() {
            area += w * eval_basis(kind, Field::Geometry, p, coords)?.det_jacobian;
        }
        Ok(ModeFrame {
            centroid,
            scale: area.sqrt(),
        })
    }

    fn local(&self, x: [f64; 2]) -> (f64, f64) {
        (
            (x[0] - self.centroid[0]) / self.scale,
            (x[1] - self.centroid[1]) / self.scale,
        )
    }
}

/// Number of strain (and stress) modes.
pub fn mode_count(kind: ElementKind) -> usize {
    match kind {
        ElementKind::Csmt3 => 3,
        ElementKind::Csmq8 => 18,
        _ => 9,
    }
}

/// Strain and stress interpolation at a physical point. Both fields share the same modes,
/// so a single matrix is returned: constant identity for CSMT3, `[I, x I, y I]` in centred,
/// scaled coordinates for most kinds, extended by `[x² I, xy I, y² I]` for CSMQ8.
pub fn strain_stress_basis(kind: ElementKind, frame: &ModeFrame, x: [f64; 2]) -> DMatrix<f64> {
    let m = mode_count(kind);
    let mut phi = DMatrix::zeros(3, m);
    for r in 0..3 {
        phi[(r, r)] = 1.0;
    }
    if m > 3 {
        let (xs, ys) = frame.local(x);
        let monomials = [xs, ys, xs * xs, xs * ys, ys * ys];
        for (k, v) in monomials.iter().take(m / 3 - 1).enumerate() {
            for r in 0..3 {
                phi[(r, 3 * (k + 1) + r)] = *v;
            }
        }
    }
    phi
}

/// Discrete operators at one point. Displacement and couple-stress columns are interleaved
/// per node as (x, y).
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrices {
    /// 3 x 2n_u: nodal u to (eps_x, eps_y, gamma_xy).
    pub b_sym: DMatrix<f64>,
    /// 1 x 2n_u: nodal u to 1/2 (duy/dx - dux/dy).
    pub b_curl_u: DMatrix<f64>,
    /// 2 x n_theta: nodal theta_z to 1/2 (dtheta/dy, -dtheta/dx).
    pub b_curl_theta: DMatrix<f64>,
    /// 1 x 2n_mu: nodal mu to 1/2 (dmu_y/dx - dmu_x/dy).
    pub b_curl_mu: DMatrix<f64>,
    /// 1 x n_theta: theta_z values.
    pub phi_theta: DMatrix<f64>,
    /// 2 x 2n_mu: (mu_x, mu_y) values; also the curvature interpolation.
    pub phi_mu: DMatrix<f64>,
}

pub fn operator_matrices(
    basis_u: &FieldBasis,
    basis_theta: &FieldBasis,
    basis_mu: &FieldBasis,
) -> OperatorMatrices {
    let nu = basis_u.len();
    let nt = basis_theta.len();
    let nm = basis_mu.len();
    let mut b_sym = DMatrix::zeros(3, 2 * nu);
    let mut b_curl_u = DMatrix::zeros(1, 2 * nu);
    for (a, g) in basis_u.grads.iter().enumerate() {
        b_sym[(0, 2 * a)] = g[0];
        b_sym[(1, 2 * a + 1)] = g[1];
        b_sym[(2, 2 * a)] = g[1];
        b_sym[(2, 2 * a + 1)] = g[0];
        b_curl_u[(0, 2 * a)] = -0.5 * g[1];
        b_curl_u[(0, 2 * a + 1)] = 0.5 * g[0];
    }
    let mut b_curl_theta = DMatrix::zeros(2, nt);
    let mut phi_theta = DMatrix::zeros(1, nt);
    for (a, g) in basis_theta.grads.iter().enumerate() {
        b_curl_theta[(0, a)] = 0.5 * g[1];
        b_curl_theta[(1, a)] = -0.5 * g[0];
        phi_theta[(0, a)] = basis_theta.values[a];
    }
    let mut b_curl_mu = DMatrix::zeros(1, 2 * nm);
    let mut phi_mu = DMatrix::zeros(2, 2 * nm);
    for (a, g) in basis_mu.grads.iter().enumerate() {
        b_curl_mu[(0, 2 * a)] = -0.5 * g[1];
        b_curl_mu[(0, 2 * a + 1)] = 0.5 * g[0];
        phi_mu[(0, 2 * a)] = basis_mu.values[a];
        phi_mu[(1, 2 * a + 1)] = basis_mu.values[a];
    }
    OperatorMatrices {
        b_sym,
        b_curl_u,
        b_curl_theta,
        b_curl_mu,
        phi_theta,
        phi_mu,
    }
}

/// Reference node coordinates of each membrane kind in its own parent domain.
pub fn parent_nodes(kind: ElementKind) -> Vec<[f64; 2]> {
    match kind {
        ElementKind::Csmt3 => vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        ElementKind::Csmt6 => vec![
            [0.0, 0.0],
            [1.0, 0.0],
            [0.0, 1.0],
            [0.5, 0.0],
            [0.5, 0.5],
            [0.0, 0.5],
        ],
        ElementKind::Beam2d => vec![[0.0, 0.0], [1.0, 0.0]],
        _ => {
            let mut v = CORNERS.to_vec();
            for &e in quad_edges(kind) {
                let a = CORNERS[e];
                let b = CORNERS[(e + 1) % 4];
                v.push([(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]);
            }
            v
        }
    }
}
