//! Hexahedral mesh with tagged boundary facets.

mod generate;
mod tags;
mod vtk;

pub use generate::{
    biventricle_regions, generate_ideal_atrium, generate_ideal_biventricle, generate_slab,
    AtriumParams, AtriumSide, BiventricleParams, SideHole, REGION_LV_FREE, REGION_OTHER,
    REGION_RV_FREE, REGION_SEPTUM,
};
pub use tags::{resolve_tags, Method, TagSchema};
pub use vtk::{
    load_fields, load_mesh, read_tag_map, save_fields, sidecar_path, write_tag_map, Field, FieldSet,
};

use crate::error::{Error, Result};
use crate::fem::{hex_jacobian, GAUSS_POINTS};
use nalgebra::Vector3;
use std::collections::{BTreeMap, HashMap};

pub type Point = [f64; 3];

/// Local faces of a VTK hexahedron, ordered so that the right-hand normal points
/// out of a positively oriented element.
pub const HEX_FACES: [[usize; 4]; 6] = [
    [0, 3, 2, 1],
    [4, 5, 6, 7],
    [0, 1, 5, 4],
    [2, 3, 7, 6],
    [0, 4, 7, 3],
    [1, 2, 6, 5],
];

/// Bijection between tag names and integer ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TagRegistry {
    by_name: BTreeMap<String, i32>,
}

impl TagRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a registry, rejecting duplicate names or ids.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, i32)>,
        S: Into<String>,
    {
        let mut reg = TagRegistry::new();
        for (name, id) in pairs {
            reg.insert(name.into(), id)?;
        }
        Ok(reg)
    }

    pub fn insert(&mut self, name: String, id: i32) -> Result<()> {
        if id < 0 {
            return Err(Error::Schema(format!("tag '{name}' has negative id {id}")));
        }
        if self.by_name.contains_key(&name) {
            return Err(Error::Schema(format!("tag name '{name}' registered twice")));
        }
        if let Some(other) = self.name_of(id) {
            return Err(Error::Schema(format!(
                "tag id {id} used by both '{other}' and '{name}'"
            )));
        }
        self.by_name.insert(name, id);
        Ok(())
    }

    /// Returns the id of `name`, registering it with the next free id if absent.
    pub fn get_or_insert(&mut self, name: &str) -> i32 {
        if let Some(&id) = self.by_name.get(name) {
            return id;
        }
        let id = self.by_name.values().max().map_or(0, |m| m + 1);
        self.by_name.insert(name.to_string(), id);
        id
    }

    pub fn id(&self, name: &str) -> Option<i32> {
        self.by_name.get(name).copied()
    }

    pub fn name_of(&self, id: i32) -> Option<&str> {
        self.by_name
            .iter()
            .find(|(_, &v)| v == id)
            .map(|(k, _)| k.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i32)> {
        self.by_name.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.by_name.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_name.is_empty()
    }
}

/// A quadrilateral boundary facet. Node order is the outward orientation of the
/// owning element's face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Facet {
    pub nodes: [usize; 4],
    pub tag: i32,
    pub element: usize,
}

/// Unstructured trilinear hexahedral mesh, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    nodes: Vec<Point>,
    elements: Vec<[usize; 8]>,
    facets: Vec<Facet>,
    tags: TagRegistry,
    node_elem_ptr: Vec<usize>,
    node_elem_idx: Vec<usize>,
}

impl Mesh {
    /// Validates and builds a mesh. Facets are given as `(nodes, tag)`; their
    /// node order is normalised to the outward orientation.
    pub fn new(
        nodes: Vec<Point>,
        elements: Vec<[usize; 8]>,
        facets: Vec<([usize; 4], i32)>,
        tags: TagRegistry,
    ) -> Result<Self> {
        let n = nodes.len();
        if nodes.iter().any(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::Geometry("non-finite node coordinate".into()));
        }
        for (e, el) in elements.iter().enumerate() {
            if let Some(&bad) = el.iter().find(|&&i| i >= n) {
                return Err(Error::Geometry(format!(
                    "element {e} references node {bad} but the mesh has {n} nodes"
                )));
            }
        }
        for (e, el) in elements.iter().enumerate() {
            let x = gather(&nodes, el);
            for gp in GAUSS_POINTS.iter() {
                let (_, det) = hex_jacobian(&x, gp);
                if det.is_nan() || det <= 0.0 {
                    return Err(Error::Geometry(format!(
                        "element {e} is inverted or degenerate (det J = {det:e})"
                    )));
                }
            }
        }

        // Faces shared by two elements are interior; the rest form the boundary.
        let mut faces: HashMap<[usize; 4], (usize, usize, u8)> = HashMap::new();
        for (e, el) in elements.iter().enumerate() {
            for (f, lf) in HEX_FACES.iter().enumerate() {
                let key = sorted_key(lf.map(|i| el[i]));
                faces
                    .entry(key)
                    .and_modify(|v| v.2 += 1)
                    .or_insert((e, f, 1));
            }
        }
        if let Some((k, _)) = faces.iter().find(|(_, v)| v.2 > 2) {
            return Err(Error::Geometry(format!(
                "face {k:?} is shared by more than two elements"
            )));
        }

        let mut out = Vec::with_capacity(facets.len());
        let mut seen: HashMap<[usize; 4], usize> = HashMap::new();
        for (i, (fnodes, tag)) in facets.iter().enumerate() {
            if tags.name_of(*tag).is_none() {
                return Err(Error::Schema(format!(
                    "facet {i} carries tag id {tag} which is not in the tag map"
                )));
            }
            let key = sorted_key(*fnodes);
            let Some(&(e, f, count)) = faces.get(&key) else {
                return Err(Error::Schema(format!(
                    "facet {i} {fnodes:?} is not a face of any element"
                )));
            };
            if count != 1 {
                return Err(Error::Schema(format!(
                    "facet {i} {fnodes:?} is an interior face"
                )));
            }
            if let Some(j) = seen.insert(key, i) {
                return Err(Error::Schema(format!("facets {j} and {i} coincide")));
            }
            out.push(Facet {
                nodes: HEX_FACES[f].map(|l| elements[e][l]),
                tag: *tag,
                element: e,
            });
        }
        let boundary = faces.values().filter(|v| v.2 == 1).count();
        if boundary != out.len() {
            let missing = faces
                .iter()
                .filter(|(k, v)| v.2 == 1 && !seen.contains_key(*k))
                .map(|(k, _)| *k)
                .min();
            return Err(Error::Schema(format!(
                "{} boundary faces carry no tag (e.g. nodes {:?})",
                boundary - out.len(),
                missing.unwrap_or_default()
            )));
        }

        let mut count = vec![0usize; n + 1];
        for el in &elements {
            for &i in el {
                count[i + 1] += 1;
            }
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut idx = vec![0usize; count[n]];
        for (e, el) in elements.iter().enumerate() {
            for &i in el {
                idx[fill[i]] = e;
                fill[i] += 1;
            }
        }

        Ok(Mesh {
            nodes,
            elements,
            facets: out,
            tags,
            node_elem_ptr: count,
            node_elem_idx: idx,
        })
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn elements(&self) -> &[[usize; 8]] {
        &self.elements
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    pub fn tags(&self) -> &TagRegistry {
        &self.tags
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.nodes[i])
    }

    /// Elements containing node `i`.
    pub fn node_elements(&self, i: usize) -> &[usize] {
        &self.node_elem_idx[self.node_elem_ptr[i]..self.node_elem_ptr[i + 1]]
    }

    /// Corner coordinates of element `e`.
    pub fn element_coords(&self, e: usize) -> [Vector3<f64>; 8] {
        gather(&self.nodes, &self.elements[e])
    }

    /// Indices of facets carrying any of the given tag ids.
    pub fn facets_with(&self, ids: &[i32]) -> Vec<usize> {
        (0..self.facets.len())
            .filter(|&i| ids.contains(&self.facets[i].tag))
            .collect()
    }

    /// Sorted, deduplicated nodes of the facets carrying any of the given ids.
    pub fn nodes_with(&self, ids: &[i32]) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .facets
            .iter()
            .filter(|f| ids.contains(&f.tag))
            .flat_map(|f| f.nodes)
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Sorted nodes of the facets selected by a logical tag name.
    pub fn nodes_tagged(&self, name: &str) -> Result<Vec<usize>> {
        Ok(self.nodes_with(&resolve_tags(self, name)?))
    }

    /// Surface area of facet `i` (2x2 Gauss rule on the bilinear quad).
    pub fn facet_area(&self, i: usize) -> f64 {
        let x = self.facets[i].nodes.map(|j| self.node(j));
        let g = 1.0 / 3f64.sqrt();
        let mut a = 0.0;
        for (s, t) in [(-g, -g), (g, -g), (g, g), (-g, g)] {
            let dxs = (x[1] - x[0]) * (1.0 - t) + (x[2] - x[3]) * (1.0 + t);
            let dxt = (x[3] - x[0]) * (1.0 - s) + (x[2] - x[1]) * (1.0 + s);
            a += dxs.cross(&dxt).norm() / 16.0;
        }
        a
    }

    /// Outward area vector of facet `i`.
    pub fn facet_area_vector(&self, i: usize) -> Vector3<f64> {
        let x = self.facets[i].nodes.map(|j| self.node(j));
        0.5 * (x[2] - x[0]).cross(&(x[3] - x[1]))
    }

    /// Unit outward normals at the nodes of the facets carrying `ids`,
    /// averaged with area weights.
    pub fn vertex_normals(&self, ids: &[i32]) -> BTreeMap<usize, Vector3<f64>> {
        let mut acc: BTreeMap<usize, Vector3<f64>> = BTreeMap::new();
        for f in self.facets_with(ids) {
            let a = self.facet_area_vector(f);
            for &j in &self.facets[f].nodes {
                *acc.entry(j).or_insert_with(Vector3::zeros) += a;
            }
        }
        acc.into_iter()
            .filter_map(|(j, v)| v.try_normalize(1e-300).map(|u| (j, u)))
            .collect()
    }

    pub fn facet_centroid(&self, i: usize) -> Vector3<f64> {
        self.facets[i]
            .nodes
            .iter()
            .map(|&j| self.node(j))
            .sum::<Vector3<f64>>()
            / 4.0
    }

    /// Total boundary area.
    pub fn boundary_area(&self) -> f64 {
        (0..self.facets.len()).map(|i| self.facet_area(i)).sum()
    }

    /// Boundary area per tag id.
    pub fn tag_areas(&self) -> BTreeMap<i32, f64> {
        let mut m = BTreeMap::new();
        for i in 0..self.facets.len() {
            *m.entry(self.facets[i].tag).or_insert(0.0) += self.facet_area(i);
        }
        m
    }

    /// Volume of each element (2x2x2 Gauss rule).
    pub fn element_volumes(&self) -> Vec<f64> {
        (0..self.elements.len())
            .map(|e| {
                let x = self.element_coords(e);
                GAUSS_POINTS.iter().map(|gp| hex_jacobian(&x, gp).1).sum()
            })
            .collect()
    }

    /// Mean edge length over all element edges.
    pub fn mean_edge_length(&self) -> f64 {
        const EDGES: [(usize, usize); 12] = [
            (0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6),
            (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7),
        ];
        let mut s = 0.0;
        for el in &self.elements {
            for (a, b) in EDGES {
                s += (self.node(el[a]) - self.node(el[b])).norm();
            }
        }
        s / (12 * self.elements.len().max(1)) as f64
    }
}

fn gather(nodes: &[Point], el: &[usize; 8]) -> [Vector3<f64>; 8] {
    el.map(|i| Vector3::from(nodes[i]))
}

fn sorted_key(mut k: [usize; 4]) -> [usize; 4] {
    k.sort_unstable();
    k
}
