//! Trilinear hexahedral finite elements, sparse matrices and the PCG solver.

mod assemble;
mod sparse;

pub use assemble::{assemble_mass, assemble_stiffness, lumped_mass, sparsity, ElementTensor};
pub use sparse::{pcg, CgStats, CsrMatrix};

use nalgebra::{Matrix3, Vector3};

/// Reference coordinates of the eight hexahedron corners (VTK order).
pub const HEX_CORNERS: [[f64; 3]; 8] = [
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
];

const G: f64 = 0.577_350_269_189_625_8;

/// 2x2x2 Gauss points; all weights are one.
pub const GAUSS_POINTS: [[f64; 3]; 8] = [
    [-G, -G, -G],
    [G, -G, -G],
    [G, G, -G],
    [-G, G, -G],
    [-G, -G, G],
    [G, -G, G],
    [G, G, G],
    [-G, G, G],
];

pub fn shape(xi: &[f64; 3]) -> [f64; 8] {
    let mut n = [0.0; 8];
    for (a, c) in HEX_CORNERS.iter().enumerate() {
        n[a] = 0.125 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]) * (1.0 + c[2] * xi[2]);
    }
    n
}

/// Reference-space shape function gradients.
pub fn shape_grad(xi: &[f64; 3]) -> [[f64; 3]; 8] {
    let mut d = [[0.0; 3]; 8];
    for (a, c) in HEX_CORNERS.iter().enumerate() {
        let (p, q, r) = (1.0 + c[0] * xi[0], 1.0 + c[1] * xi[1], 1.0 + c[2] * xi[2]);
        d[a] = [0.125 * c[0] * q * r, 0.125 * c[1] * p * r, 0.125 * c[2] * p * q];
    }
    d
}

/// Jacobian (dx/dxi, columns are reference directions) and its determinant.
pub fn hex_jacobian(x: &[Vector3<f64>; 8], xi: &[f64; 3]) -> (Matrix3<f64>, f64) {
    let d = shape_grad(xi);
    let mut j = Matrix3::zeros();
    for a in 0..8 {
        for r in 0..3 {
            for c in 0..3 {
                j[(r, c)] += x[a][r] * d[a][c];
            }
        }
    }
    let det = j.determinant();
    (j, det)
}

/// Physical shape gradients and the quadrature weight det J at one point.
pub fn physical_grads(x: &[Vector3<f64>; 8], xi: &[f64; 3]) -> ([Vector3<f64>; 8], f64) {
    let (j, det) = hex_jacobian(x, xi);
    let jinv_t = j.try_inverse().unwrap_or_else(Matrix3::zeros).transpose();
    let d = shape_grad(xi);
    let g = d.map(|da| jinv_t * Vector3::from(da));
    (g, det)
}
