//! Laplace-Dirichlet solves on tagged meshes and nodal gradient recovery.

use crate::error::{Error, Result};
use crate::fem::{assemble_stiffness, hex_jacobian, pcg, physical_grads, CgStats, CsrMatrix, ElementTensor};
use crate::mesh::{resolve_tags, Mesh};
use nalgebra::Vector3;
use std::collections::BTreeMap;

/// Default relative residual for Laplace solves.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Per-node scalar values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScalarField(pub Vec<f64>);

/// Per-node vectors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorField(pub Vec<Vector3<f64>>);

impl ScalarField {
    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Dirichlet data: `(boundary name, value)` pairs. Boundaries not listed get
/// homogeneous Neumann conditions.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletSpec {
    entries: Vec<(String, f64)>,
}

impl DirichletSpec {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, f64)>) -> Result<Self> {
        let entries: Vec<(String, f64)> = entries.into_iter().map(|(s, v)| (s.into(), v)).collect();
        if entries.is_empty() {
            return Err(Error::Singular("Dirichlet spec has no entries".into()));
        }
        for (i, (name, v)) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::Config(format!("non-finite Dirichlet value on '{name}'")));
            }
            if entries[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::Config(format!("boundary '{name}' listed twice")));
            }
        }
        Ok(DirichletSpec { entries })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    /// Value per constrained node. Nodes on the common edge of two boundaries
    /// with different values receive their mean.
    pub fn node_values(&self, mesh: &Mesh) -> Result<BTreeMap<usize, f64>> {
        let mut claimed: BTreeMap<i32, &str> = BTreeMap::new();
        let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for (name, v) in &self.entries {
            let ids = resolve_tags(mesh, name)?;
            for id in &ids {
                if let Some(prev) = claimed.insert(*id, name) {
                    return Err(Error::Config(format!(
                        "tag '{}' is covered by both '{prev}' and '{name}'",
                        mesh.tags().name_of(*id).unwrap_or("?")
                    )));
                }
            }
            for node in mesh.nodes_with(&ids) {
                let e = acc.entry(node).or_insert((0.0, 0));
                e.0 += v;
                e.1 += 1;
            }
        }
        Ok(acc.into_iter().map(|(k, (s, c))| (k, s / c as f64)).collect())
    }
}

/// Reusable Laplace solver holding the assembled stiffness matrix.
pub struct LaplaceSolver<'m> {
    mesh: &'m Mesh,
    stiffness: CsrMatrix,
}

impl<'m> LaplaceSolver<'m> {
    pub fn new(mesh: &'m Mesh) -> Self {
        LaplaceSolver { mesh, stiffness: assemble_stiffness(mesh, ElementTensor::Scalar(1.0)) }
    }

    pub fn mesh(&self) -> &Mesh {
        self.mesh
    }

    pub fn solve(&self, spec: &DirichletSpec, tol: f64) -> Result<ScalarField> {
        let fixed = spec.node_values(self.mesh)?;
        Ok(self.solve_nodal(&fixed, tol)?.0)
    }

    /// Solves with explicit per-node Dirichlet values.
    pub fn solve_nodal(&self, fixed: &BTreeMap<usize, f64>, tol: f64) -> Result<(ScalarField, CgStats)> {
        if fixed.is_empty() {
            return Err(Error::Singular("no Dirichlet nodes".into()));
        }
        if !(tol > 0.0 && tol <= 1e-4) {
            return Err(Error::Config(format!("tolerance {tol} outside (0, 1e-4]")));
        }
        let n = self.mesh.num_nodes();
        let mut u = vec![0.0; n];
        let mut map = vec![None; n];
        let mut nfree = 0;
        for i in 0..n {
            if let Some(&v) = fixed.get(&i) {
                u[i] = v;
            } else {
                map[i] = Some(nfree);
                nfree += 1;
            }
        }
        if nfree == 0 {
            return Ok((ScalarField(u), CgStats { iterations: 0, residual: 0.0 }));
        }
        let k = &self.stiffness;
        let a = k.restrict(&map);
        let mut b = vec![0.0; nfree];
        for i in 0..n {
            let Some(fi) = map[i] else { continue };
            let mut s = 0.0;
            for p in k.row_ptr[i]..k.row_ptr[i + 1] {
                let j = k.col_idx[p];
                if map[j].is_none() {
                    s += k.values[p] * u[j];
                }
            }
            b[fi] = -s;
        }
        let mean = fixed.values().sum::<f64>() / fixed.len() as f64;
        let mut x = vec![mean; nfree];
        let stats = pcg(&a, &b, &mut x, tol, 20 * nfree + 1000)?;
        for i in 0..n {
            if let Some(fi) = map[i] {
                u[i] = x[fi];
            }
        }
        Ok((ScalarField(u), stats))
    }
}

/// Solves the Laplace problem once; see [`LaplaceSolver`] to reuse assembly.
pub fn solve_laplace(mesh: &Mesh, spec: &DirichletSpec, tol: f64) -> Result<ScalarField> {
    LaplaceSolver::new(mesh).solve(spec, tol)
}

/// Nodal gradients: element-centre gradients averaged over the elements
/// sharing each node, weighted by element volume.
pub fn nodal_gradient(mesh: &Mesh, field: &ScalarField) -> VectorField {
    assert_eq!(field.0.len(), mesh.num_nodes(), "field size does not match mesh");
    let n = mesh.num_nodes();
    let mut g = vec![Vector3::zeros(); n];
    let mut w = vec![0.0; n];
    let centre = [0.0; 3];
    for (e, el) in mesh.elements().iter().enumerate() {
        let x = mesh.element_coords(e);
        let (grads, _) = physical_grads(&x, &centre);
        let vol: f64 = crate::fem::GAUSS_POINTS.iter().map(|gp| hex_jacobian(&x, gp).1).sum();
        let mut ge = Vector3::zeros();
        for a in 0..8 {
            ge += grads[a] * field.0[el[a]];
        }
        for &i in el {
            g[i] += ge * vol;
            w[i] += vol;
        }
    }
    for i in 0..n {
        if w[i] > 0.0 {
            g[i] /= w[i];
        }
    }
    VectorField(g)
}
