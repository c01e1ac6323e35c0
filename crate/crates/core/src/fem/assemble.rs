use super::{physical_grads, shape, CsrMatrix, GAUSS_POINTS};
use crate::mesh::Mesh;
use nalgebra::{Matrix3, Vector3};

/// Diffusion tensor evaluated at quadrature points.
#[derive(Debug, Clone, Copy)]
pub enum ElementTensor<'a> {
    /// D = s I.
    Scalar(f64),
    /// Per-node tensors interpolated with the trilinear shape functions.
    Nodal(&'a [Matrix3<f64>]),
}

impl ElementTensor<'_> {
    fn at(&self, el: &[usize; 8], n: &[f64; 8]) -> Matrix3<f64> {
        match self {
            ElementTensor::Scalar(s) => Matrix3::identity() * *s,
            ElementTensor::Nodal(d) => {
                let mut m = Matrix3::zeros();
                for a in 0..8 {
                    m += d[el[a]] * n[a];
                }
                m
            }
        }
    }
}

/// Node-to-node sparsity pattern induced by shared elements.
pub fn sparsity(mesh: &Mesh) -> CsrMatrix {
    let n = mesh.num_nodes();
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, row) in rows.iter_mut().enumerate() {
        for &e in mesh.node_elements(i) {
            row.extend_from_slice(&mesh.elements()[e]);
        }
        row.sort_unstable();
        row.dedup();
    }
    CsrMatrix::from_pattern(&rows)
}

fn scatter(m: &mut CsrMatrix, el: &[usize; 8], local: &[[f64; 8]; 8]) {
    for a in 0..8 {
        let lo = m.row_ptr[el[a]];
        let hi = m.row_ptr[el[a] + 1];
        let cols = &m.col_idx[lo..hi];
        for b in 0..8 {
            let k = lo + cols.binary_search(&el[b]).expect("pattern mismatch");
            m.values[k] += local[a][b];
        }
    }
}

/// Stiffness matrix K_ab = ∫ D ∇N_b · ∇N_a.
pub fn assemble_stiffness(mesh: &Mesh, tensor: ElementTensor<'_>) -> CsrMatrix {
    let mut k = sparsity(mesh);
    for (e, el) in mesh.elements().iter().enumerate() {
        let x = mesh.element_coords(e);
        let mut local = [[0.0; 8]; 8];
        for gp in GAUSS_POINTS.iter() {
            let (g, det) = physical_grads(&x, gp);
            let d = tensor.at(el, &shape(gp));
            let dg: [Vector3<f64>; 8] = g.map(|v| d * v);
            for a in 0..8 {
                for b in 0..8 {
                    local[a][b] += g[a].dot(&dg[b]) * det;
                }
            }
        }
        scatter(&mut k, el, &local);
    }
    k
}

/// Consistent mass matrix M_ab = ∫ N_a N_b.
pub fn assemble_mass(mesh: &Mesh) -> CsrMatrix {
    let mut m = sparsity(mesh);
    for (e, el) in mesh.elements().iter().enumerate() {
        let x = mesh.element_coords(e);
        let mut local = [[0.0; 8]; 8];
        for gp in GAUSS_POINTS.iter() {
            let det = super::hex_jacobian(&x, gp).1;
            let n = shape(gp);
            for a in 0..8 {
                for b in 0..8 {
                    local[a][b] += n[a] * n[b] * det;
                }
            }
        }
        scatter(&mut m, el, &local);
    }
    m
}

/// Row-sum lumped mass, i.e. ∫ N_a.
pub fn lumped_mass(mesh: &Mesh) -> Vec<f64> {
    let mut m = vec![0.0; mesh.num_nodes()];
    for (e, el) in mesh.elements().iter().enumerate() {
        let x = mesh.element_coords(e);
        for gp in GAUSS_POINTS.iter() {
            let det = super::hex_jacobian(&x, gp).1;
            let n = shape(gp);
            for a in 0..8 {
                m[el[a]] += n[a] * det;
            }
        }
    }
    m
}
