//! Procedural meshes: benchmark slab, idealized biventricle and idealized atria.

use super::{Mesh, Point, TagRegistry};
use crate::error::{Error, Result};
use crate::fem::{hex_jacobian, HEX_CORNERS};
use nalgebra::Vector3;
use std::collections::VecDeque;
use std::f64::consts::PI;

/// Structured box mesh of `[0,Lx]x[0,Ly]x[0,Lz]` with faces tagged x0..z1.
/// Each axis gets `max(1, round(L/h))` elements.
pub fn generate_slab(lengths: [f64; 3], h: f64) -> Result<Mesh> {
    if !(h > 0.0) || lengths.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::Geometry(format!("invalid slab extents {lengths:?} or h = {h}")));
    }
    let n = lengths.map(|l| ((l / h).round() as usize).max(1));
    let id = |i: usize, j: usize, k: usize| i + (n[0] + 1) * (j + (n[1] + 1) * k);
    let mut nodes = Vec::with_capacity((n[0] + 1) * (n[1] + 1) * (n[2] + 1));
    for k in 0..=n[2] {
        for j in 0..=n[1] {
            for i in 0..=n[0] {
                nodes.push([
                    lengths[0] * i as f64 / n[0] as f64,
                    lengths[1] * j as f64 / n[1] as f64,
                    lengths[2] * k as f64 / n[2] as f64,
                ]);
            }
        }
    }
    let mut elements = Vec::with_capacity(n[0] * n[1] * n[2]);
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                elements.push([
                    id(i, j, k),
                    id(i + 1, j, k),
                    id(i + 1, j + 1, k),
                    id(i, j + 1, k),
                    id(i, j, k + 1),
                    id(i + 1, j, k + 1),
                    id(i + 1, j + 1, k + 1),
                    id(i, j + 1, k + 1),
                ]);
            }
        }
    }
    let tags = TagRegistry::from_pairs([("x0", 0), ("x1", 1), ("y0", 2), ("y1", 3), ("z0", 4), ("z1", 5)])?;
    let mut facets = Vec::new();
    for k in 0..n[2] {
        for j in 0..n[1] {
            facets.push(([id(0, j, k), id(0, j + 1, k), id(0, j + 1, k + 1), id(0, j, k + 1)], 0));
            let e = n[0];
            facets.push(([id(e, j, k), id(e, j + 1, k), id(e, j + 1, k + 1), id(e, j, k + 1)], 1));
        }
    }
    for k in 0..n[2] {
        for i in 0..n[0] {
            facets.push(([id(i, 0, k), id(i + 1, 0, k), id(i + 1, 0, k + 1), id(i, 0, k + 1)], 2));
            let e = n[1];
            facets.push(([id(i, e, k), id(i + 1, e, k), id(i + 1, e, k + 1), id(i, e, k + 1)], 3));
        }
    }
    for j in 0..n[1] {
        for i in 0..n[0] {
            facets.push(([id(i, j, 0), id(i + 1, j, 0), id(i + 1, j + 1, 0), id(i, j + 1, 0)], 4));
            let e = n[2];
            facets.push(([id(i, j, e), id(i + 1, j, e), id(i + 1, j + 1, e), id(i, j + 1, e)], 5));
        }
    }
    Mesh::new(nodes, elements, facets, tags)
}

/// Axis-aligned ellipsoid centred on the x axis.
#[derive(Debug, Clone, Copy)]
struct Ellipsoid {
    cx: f64,
    a: [f64; 3],
}

impl Ellipsoid {
    fn f(&self, p: &Vector3<f64>) -> f64 {
        ((p.x - self.cx) / self.a[0]).powi(2) + (p.y / self.a[1]).powi(2) + (p.z / self.a[2]).powi(2)
    }

    fn inside(&self, p: &Vector3<f64>) -> bool {
        self.f(p) < 1.0
    }

    /// Radial projection from the centre onto the surface; keeps z = 0 fixed.
    fn project(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let c = Vector3::new(self.cx, 0.0, 0.0);
        c + (p - c) / self.f(p).sqrt()
    }
}

/// Two truncated ellipsoidal shells: a left ventricle and a right ventricle
/// wrapping its +x side. The base plane is z = 0 and the myocardium lies in z < 0.
#[derive(Debug, Clone, PartialEq)]
pub struct BiventricleParams {
    /// Semi-axes (cm) of the left cavity, centred at the origin.
    pub lv_endo: [f64; 3],
    /// Semi-axes of the left epicardium.
    pub lv_epi: [f64; 3],
    /// Semi-axes of the right cavity.
    pub rv_endo: [f64; 3],
    /// x coordinate of the right ellipsoids' centre.
    pub rv_offset: f64,
    /// Right free wall thickness.
    pub rv_wall: f64,
    /// Target edge length.
    pub h: f64,
    /// Right endocardial facets closer than this to the left endocardium are
    /// tagged `rs`. `None` uses the septal wall thickness plus 0.3 cm.
    pub septum_threshold: Option<f64>,
    /// Angular sector (degrees from +x, counter-clockwise) of the left annulus
    /// tagged `av`; the rest is `mv`.
    pub av_sector: (f64, f64),
    /// Right annulus facets with y above this fraction of the annulus extent are `pv`.
    pub pv_fraction: f64,
    /// Apex patches cover facets within this multiple of h of the lowest point.
    pub apex_radius_factor: f64,
}

impl Default for BiventricleParams {
    fn default() -> Self {
        BiventricleParams {
            lv_endo: [1.2, 1.2, 3.0],
            lv_epi: [2.0, 2.0, 3.7],
            rv_endo: [2.4, 1.8, 3.2],
            rv_offset: 0.6,
            rv_wall: 0.35,
            h: 0.1,
            septum_threshold: None,
            av_sector: (30.0, 90.0),
            pv_fraction: 0.4,
            apex_radius_factor: 2.0,
        }
    }
}

impl BiventricleParams {
    pub fn septum_threshold(&self) -> f64 {
        self.septum_threshold.unwrap_or(self.lv_epi[0] - self.lv_endo[0] + 0.3)
    }

    fn validate(&self) -> Result<()> {
        let pos = |v: &[f64; 3]| v.iter().all(|x| *x > 0.0 && x.is_finite());
        if !(self.h > 0.0) || !(self.rv_wall > 0.0) || !pos(&self.lv_endo) || !pos(&self.lv_epi) || !pos(&self.rv_endo) {
            return Err(Error::Geometry("semi-axes, wall thickness and h must be positive".into()));
        }
        if (0..3).any(|i| self.lv_endo[i] >= self.lv_epi[i]) {
            return Err(Error::Geometry(format!(
                "left cavity {:?} is not strictly inside the left wall {:?}",
                self.lv_endo, self.lv_epi
            )));
        }
        if self.rv_offset + self.rv_endo[0] <= self.lv_epi[0] {
            return Err(Error::Geometry("right cavity does not extend beyond the left epicardium".into()));
        }
        if self.rv_offset - self.rv_endo[0] >= self.lv_epi[0] {
            return Err(Error::Geometry("right cavity does not touch the left wall".into()));
        }
        if self.rv_endo[1] >= self.lv_epi[1] + self.rv_wall + 1e-12 && self.rv_endo[1] > self.lv_epi[1] {
            // right cavity wider than the left epicardium would wrap the whole heart
            return Err(Error::Geometry("right cavity wraps the left ventricle entirely".into()));
        }
        Ok(())
    }
}

const BV_EPI: i32 = 0;
const BV_LV: i32 = 1;
const BV_RS: i32 = 2;
const BV_RVS: i32 = 3;
const BV_MV: i32 = 4;
const BV_AV: i32 = 5;
const BV_TV: i32 = 6;
const BV_PV: i32 = 7;
const BV_LA: i32 = 8;
const BV_RA: i32 = 9;

/// Builds the idealized biventricle by voxelising the myocardium and snapping
/// the boundary nodes onto the ellipsoids.
pub fn generate_ideal_biventricle(p: &BiventricleParams) -> Result<Mesh> {
    p.validate()?;
    let h = p.h;
    let lv_endo = Ellipsoid { cx: 0.0, a: p.lv_endo };
    let lv_epi = Ellipsoid { cx: 0.0, a: p.lv_epi };
    let rv_endo = Ellipsoid { cx: p.rv_offset, a: p.rv_endo };
    let rv_epi = Ellipsoid { cx: p.rv_offset, a: p.rv_endo.map(|a| a + p.rv_wall) };
    let in_myo = |q: &Vector3<f64>| {
        (lv_epi.inside(q) && !lv_endo.inside(q))
            || (rv_epi.inside(q) && !rv_endo.inside(q) && !lv_epi.inside(q))
    };

    let xmin = (-p.lv_epi[0]).min(rv_epi.cx - rv_epi.a[0]);
    let xmax = p.lv_epi[0].max(rv_epi.cx + rv_epi.a[0]);
    let ymax = p.lv_epi[1].max(rv_epi.a[1]);
    let zdepth = p.lv_epi[2].max(rv_epi.a[2]);
    let nx = ((xmax - xmin) / h).ceil() as usize + 2;
    let ny = (2.0 * ymax / h).ceil() as usize + 2;
    let nz = (zdepth / h).ceil() as usize + 1;
    let x0 = 0.5 * (xmin + xmax) - 0.5 * nx as f64 * h;
    let y0 = -0.5 * ny as f64 * h;
    let z0 = -(nz as f64) * h;
    let corner = |i: usize, j: usize, k: usize| {
        Vector3::new(x0 + i as f64 * h, y0 + j as f64 * h, z0 + k as f64 * h)
    };
    let centre = |i: usize, j: usize, k: usize| corner(i, j, k) + Vector3::repeat(0.5 * h);
    let cell = |i: usize, j: usize, k: usize| i + nx * (j + ny * k);
    let ncell = nx * ny * nz;
    let mut keep = vec![false; ncell];
    for k in 0..nz {
        for j in 0..ny {
            for i in 0..nx {
                keep[cell(i, j, k)] = in_myo(&centre(i, j, k));
            }
        }
    }
    let neighbours = |c: usize| -> [Option<usize>; 6] {
        let (i, j, k) = (c % nx, (c / nx) % ny, c / (nx * ny));
        [
            (i > 0).then(|| c - 1),
            (i + 1 < nx).then(|| c + 1),
            (j > 0).then(|| c - nx),
            (j + 1 < ny).then(|| c + nx),
            (k > 0).then(|| c - nx * ny),
            (k + 1 < nz).then(|| c + nx * ny),
        ]
    };
    // Drop spikes (cells with fewer than two face neighbours) until stable.
    loop {
        let mut changed = false;
        for c in 0..ncell {
            if keep[c] && neighbours(c).iter().flatten().filter(|&&m| keep[m]).count() < 2 {
                keep[c] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // Largest face-connected component.
    let mut comp = vec![usize::MAX; ncell];
    let mut best = (0usize, 0usize);
    let mut ncomp = 0;
    for s in 0..ncell {
        if !keep[s] || comp[s] != usize::MAX {
            continue;
        }
        let mut size = 0;
        let mut q = VecDeque::from([s]);
        comp[s] = ncomp;
        while let Some(c) = q.pop_front() {
            size += 1;
            for m in neighbours(c).into_iter().flatten() {
                if keep[m] && comp[m] == usize::MAX {
                    comp[m] = ncomp;
                    q.push_back(m);
                }
            }
        }
        if size > best.0 {
            best = (size, ncomp);
        }
        ncomp += 1;
    }
    for c in 0..ncell {
        keep[c] = keep[c] && comp[c] == best.1;
    }
    if best.0 == 0 {
        return Err(Error::Geometry("biventricle parameters produce an empty mesh at this h".into()));
    }

    // Compact node numbering in lexicographic grid order.
    let gid = |i: usize, j: usize, k: usize| i + (nx + 1) * (j + (ny + 1) * k);
    let mut used = vec![false; (nx + 1) * (ny + 1) * (nz + 1)];
    let cell_nodes = |i: usize, j: usize, k: usize| {
        [
            gid(i, j, k),
            gid(i + 1, j, k),
            gid(i + 1, j + 1, k),
            gid(i, j + 1, k),
            gid(i, j, k + 1),
            gid(i + 1, j, k + 1),
            gid(i + 1, j + 1, k + 1),
            gid(i, j + 1, k + 1),
        ]
    };
    for c in (0..ncell).filter(|&c| keep[c]) {
        for g in cell_nodes(c % nx, (c / nx) % ny, c / (nx * ny)) {
            used[g] = true;
        }
    }
    let mut remap = vec![usize::MAX; used.len()];
    let mut pos: Vec<Vector3<f64>> = Vec::new();
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let g = gid(i, j, k);
                if used[g] {
                    remap[g] = pos.len();
                    pos.push(corner(i, j, k));
                }
            }
        }
    }
    let mut elements = Vec::new();
    let mut facets: Vec<([usize; 4], i32)> = Vec::new();
    // face index -> (local face of VTK hex, neighbour direction index)
    const FACE_DIR: [(usize, usize); 6] = [(4, 0), (5, 1), (2, 2), (3, 3), (0, 4), (1, 5)];
    for c in (0..ncell).filter(|&c| keep[c]) {
        let (i, j, k) = (c % nx, (c / nx) % ny, c / (nx * ny));
        let el = cell_nodes(i, j, k).map(|g| remap[g]);
        elements.push(el);
        let nb = neighbours(c);
        for &(lf, dir) in FACE_DIR.iter() {
            if nb[dir].map_or(false, |m| keep[m]) {
                continue;
            }
            let fnodes = super::HEX_FACES[lf].map(|l| el[l]);
            let tag = if dir == 5 && k + 1 == nz {
                -1 // base, split below
            } else {
                let off = [(-1, 0, 0), (1, 0, 0), (0, -1, 0), (0, 1, 0), (0, 0, -1), (0, 0, 1)][dir];
                let q = centre(i, j, k) + Vector3::new(off.0 as f64, off.1 as f64, off.2 as f64) * h;
                if lv_endo.inside(&q) {
                    BV_LV
                } else if rv_endo.inside(&q) && !lv_epi.inside(&q) {
                    BV_RVS
                } else {
                    BV_EPI
                }
            };
            facets.push((fnodes, tag));
        }
    }

    snap_biventricle(&mut pos, &elements, &facets, h, &lv_endo, &lv_epi, &rv_endo, &rv_epi);

    let centroid = |f: &[usize; 4]| f.iter().map(|&n| pos[n]).sum::<Vector3<f64>>() / 4.0;
    // Base split into valve annuli.
    let rv_base_ymax = facets
        .iter()
        .filter(|(f, t)| *t == -1 && !lv_epi.inside(&centroid(f)))
        .map(|(f, _)| centroid(f).y)
        .fold(0.0, f64::max);
    for (f, t) in facets.iter_mut() {
        if *t != -1 {
            continue;
        }
        let c = centroid(f);
        *t = if lv_epi.inside(&c) {
            let ang = c.y.atan2(c.x).to_degrees();
            if ang >= p.av_sector.0 && ang <= p.av_sector.1 {
                BV_AV
            } else {
                BV_MV
            }
        } else if c.y > p.pv_fraction * rv_base_ymax {
            BV_PV
        } else {
            BV_TV
        };
    }
    // Septal part of the right endocardium.
    let lv_nodes: Vec<Vector3<f64>> = {
        let mut v: Vec<usize> = facets.iter().filter(|f| f.1 == BV_LV).flat_map(|f| f.0).collect();
        v.sort_unstable();
        v.dedup();
        v.into_iter().map(|n| pos[n]).collect()
    };
    let thr = p.septum_threshold();
    for (f, t) in facets.iter_mut() {
        if *t == BV_RVS {
            let c = centroid(f);
            let d = lv_nodes.iter().map(|q| (q - c).norm()).fold(f64::INFINITY, f64::min);
            if d < thr {
                *t = BV_RS;
            }
        }
    }
    // Apex patches.
    let radius = p.apex_radius_factor * h;
    for (from, to) in [(BV_LV, BV_LA), (BV_RVS, BV_RA)] {
        let low = facets
            .iter()
            .filter(|f| f.1 == from)
            .flat_map(|f| f.0)
            .min_by(|&a, &b| pos[a].z.total_cmp(&pos[b].z).then(a.cmp(&b)))
            .ok_or_else(|| Error::Geometry("empty endocardium".into()))?;
        let apex = pos[low];
        for (f, t) in facets.iter_mut() {
            if *t == from && (centroid(f) - apex).norm() <= radius {
                *t = to;
            }
        }
    }
    let tags = TagRegistry::from_pairs([
        ("epi", BV_EPI),
        ("lv", BV_LV),
        ("rs", BV_RS),
        ("rv-s", BV_RVS),
        ("mv", BV_MV),
        ("av", BV_AV),
        ("tv", BV_TV),
        ("pv", BV_PV),
        ("la-apex", BV_LA),
        ("ra-apex", BV_RA),
    ])?;
    let nodes: Vec<Point> = pos.iter().map(|v| [v.x, v.y, v.z]).collect();
    Mesh::new(nodes, elements, facets, tags)
}

/// Smallest corner Jacobian determinant of an element.
fn min_corner_det(pos: &[Vector3<f64>], el: &[usize; 8]) -> f64 {
    let x = el.map(|i| pos[i]);
    HEX_CORNERS
        .iter()
        .chain(crate::fem::GAUSS_POINTS.iter())
        .map(|c| hex_jacobian(&x, c).1)
        .fold(f64::INFINITY, f64::min)
}

/// Moves each node to `target` as far as element quality allows
/// (full, half or quarter step).
fn relax(
    pos: &mut [Vector3<f64>],
    elements: &[[usize; 8]],
    node_elems: &[Vec<usize>],
    node: usize,
    target: Vector3<f64>,
    qmin: f64,
) {
    let old = pos[node];
    for frac in [1.0, 0.5, 0.25] {
        pos[node] = old + (target - old) * frac;
        if node_elems[node].iter().all(|&e| min_corner_det(pos, &elements[e]) > qmin) {
            return;
        }
    }
    pos[node] = old;
}

#[allow(clippy::too_many_arguments)]
fn snap_biventricle(
    pos: &mut [Vector3<f64>],
    elements: &[[usize; 8]],
    facets: &[([usize; 4], i32)],
    h: f64,
    lv_endo: &Ellipsoid,
    lv_epi: &Ellipsoid,
    rv_endo: &Ellipsoid,
    rv_epi: &Ellipsoid,
) {
    const LV: u8 = 1;
    const RV: u8 = 2;
    const EPI: u8 = 4;
    const BASE: u8 = 8;
    let n = pos.len();
    let mut mask = vec![0u8; n];
    for (f, t) in facets {
        let b = match *t {
            BV_LV => LV,
            BV_RVS => RV,
            BV_EPI => EPI,
            _ => BASE,
        };
        for &i in f {
            mask[i] |= b;
        }
    }
    let mut node_elems = vec![Vec::new(); n];
    let mut nbrs = vec![Vec::new(); n];
    const EDGES: [(usize, usize); 12] =
        [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (5, 6), (6, 7), (7, 4), (0, 4), (1, 5), (2, 6), (3, 7)];
    for (e, el) in elements.iter().enumerate() {
        for &i in el {
            node_elems[i].push(e);
        }
        for (a, b) in EDGES {
            nbrs[el[a]].push(el[b]);
            nbrs[el[b]].push(el[a]);
        }
    }
    for v in nbrs.iter_mut() {
        v.sort_unstable();
        v.dedup();
    }
    let qmin = 0.2 * (0.5 * h).powi(3);
    let pick = |p: &Vector3<f64>, cands: &[(&Ellipsoid, &dyn Fn(&Vector3<f64>) -> bool)]| {
        let mut best: Option<(f64, Vector3<f64>)> = None;
        let mut fallback: Option<(f64, Vector3<f64>)> = None;
        for (e, ok) in cands {
            let q = e.project(p);
            let d = (q - p).norm();
            if fallback.map_or(true, |b| d < b.0) {
                fallback = Some((d, q));
            }
            if ok(&q) && best.map_or(true, |b| d < b.0) {
                best = Some((d, q));
            }
        }
        best.or(fallback).map(|b| b.1).unwrap_or(*p)
    };
    let slack = 1e-9;
    let out_lv_epi = |q: &Vector3<f64>| lv_epi.f(q) >= 1.0 - slack;
    let in_rv_endo = |q: &Vector3<f64>| rv_endo.f(q) <= 1.0 + slack;
    let out_rv_epi = |q: &Vector3<f64>| rv_epi.f(q) >= 1.0 - slack;
    let always = |_: &Vector3<f64>| true;
    for _round in 0..4 {
        for i in 0..n {
            let m = mask[i];
            let surf = m & !BASE;
            if surf == 0 || surf.count_ones() > 1 {
                continue;
            }
            let p = pos[i];
            let mut target = match surf {
                LV => pick(&p, &[(lv_endo, &always)]),
                RV => pick(&p, &[(rv_endo, &out_lv_epi), (lv_epi, &in_rv_endo)]),
                _ => pick(&p, &[(lv_epi, &out_rv_epi), (rv_epi, &out_lv_epi)]),
            };
            if m & BASE != 0 {
                target.z = 0.0;
            }
            relax(pos, elements, &node_elems, i, target, qmin);
        }
        for _ in 0..2 {
            for i in 0..n {
                if mask[i] != 0 {
                    continue;
                }
                let avg = nbrs[i].iter().map(|&j| pos[j]).sum::<Vector3<f64>>() / nbrs[i].len() as f64;
                relax(pos, elements, &node_elems, i, avg, qmin);
            }
        }
    }
}

/// Region codes returned by [`biventricle_regions`].
pub const REGION_OTHER: i32 = 0;
pub const REGION_SEPTUM: i32 = 1;
pub const REGION_LV_FREE: i32 = 2;
pub const REGION_RV_FREE: i32 = 3;

/// Coarse anatomical regions of a mesh built from `p`. A node of the left
/// wall is septal when the point of the left epicardium straight out from
/// the long axis (same z) lies inside the right cavity. Left wall nodes on the
/// -x side away from the septum form the left free wall; nodes outside the
/// left epicardium belong to the right free wall.
pub fn biventricle_regions(mesh: &Mesh, p: &BiventricleParams) -> Vec<i32> {
    let lv_epi = Ellipsoid { cx: 0.0, a: p.lv_epi };
    let rv_endo = Ellipsoid { cx: p.rv_offset, a: p.rv_endo };
    mesh.nodes()
        .iter()
        .map(|q| {
            let q = Vector3::from(*q);
            if lv_epi.f(&q) > 1.0 + 1e-6 {
                return REGION_RV_FREE;
            }
            let r = ((q.x / p.lv_epi[0]).powi(2) + (q.y / p.lv_epi[1]).powi(2)).sqrt();
            let s2 = 1.0 - (q.z / p.lv_epi[2]).powi(2);
            if r > 1e-9 && s2 > 0.0 {
                let out = Vector3::new(q.x, q.y, 0.0) * (s2.sqrt() / r) + Vector3::new(0.0, 0.0, q.z);
                if rv_endo.inside(&out) {
                    return REGION_SEPTUM;
                }
            }
            if q.x < 0.0 {
                REGION_LV_FREE
            } else {
                REGION_OTHER
            }
        })
        .collect()
}

/// Which atrium a shell represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtriumSide {
    Left,
    Right,
}

/// A circular hole cut into the side of the shell.
#[derive(Debug, Clone, PartialEq)]
pub struct SideHole {
    pub tag: String,
    /// Polar angle of the centre (rad, 0 at the north pole).
    pub theta: f64,
    /// Azimuth of the centre (rad).
    pub phi: f64,
    /// Radius measured on the mid surface (cm).
    pub radius: f64,
}

/// Spherical shell with pole openings and circular side holes.
///
/// Left atrium: `lpv` at the north pole, `rpv` at the south pole, side holes
/// `mv` and `appendage`. Right atrium: `scv` north, `icv` south, side holes
/// `tv`, `appendage` and `cs`, and a meridional `top` band joining the caval
/// rims. The `tv` rim is split by the plane through the band ends and the
/// valve centre; the half on the `cs` side is `tv-s`.
#[derive(Debug, Clone, PartialEq)]
pub struct AtriumParams {
    pub side: AtriumSide,
    /// Mid-surface radius (cm).
    pub radius: f64,
    pub thickness: f64,
    pub h: f64,
    /// Arc radius of the north pole opening.
    pub north_radius: f64,
    /// Arc radius of the south pole opening.
    pub south_radius: f64,
    pub holes: Vec<SideHole>,
    /// Azimuth of the top band (right atrium only).
    pub top_band_phi: f64,
    /// Width of the top band (cm, at the equator).
    pub top_band_width: f64,
}

impl AtriumParams {
    pub fn left() -> Self {
        AtriumParams {
            side: AtriumSide::Left,
            radius: 2.0,
            thickness: 0.2,
            h: 0.1,
            north_radius: 0.6,
            south_radius: 0.6,
            holes: vec![
                SideHole { tag: "mv".into(), theta: PI / 2.0, phi: 0.0, radius: 1.0 },
                SideHole { tag: "appendage".into(), theta: PI / 2.0, phi: 0.6 * PI, radius: 0.35 },
            ],
            top_band_phi: 0.0,
            top_band_width: 0.0,
        }
    }

    pub fn right() -> Self {
        AtriumParams {
            side: AtriumSide::Right,
            radius: 2.0,
            thickness: 0.2,
            h: 0.1,
            north_radius: 0.7,
            south_radius: 0.8,
            holes: vec![
                SideHole { tag: "tv".into(), theta: PI / 2.0, phi: 0.0, radius: 1.3 },
                SideHole { tag: "appendage".into(), theta: 0.9, phi: -1.6, radius: 0.35 },
                SideHole { tag: "cs".into(), theta: 2.35, phi: 1.5, radius: 0.2 },
            ],
            top_band_phi: PI,
            top_band_width: 0.2,
        }
    }

    pub fn for_side(side: AtriumSide) -> Self {
        match side {
            AtriumSide::Left => Self::left(),
            AtriumSide::Right => Self::right(),
        }
    }
}

/// Half-width (in cells) of the square cut for a hole of radius `r` on a
/// grid of spacing `d`, keeping r / (m d) within [0.7, 1.42].
fn half_cells(r: f64, d: f64) -> Option<usize> {
    let ok = |m: usize| (0.7..=1.42).contains(&(r / (m as f64 * d)));
    let m = ((r / (1.2 * d)).round() as usize).max(1);
    [m, m + 1, m.saturating_sub(1)].into_iter().find(|&m| m >= 1 && ok(m))
}

struct HoleGrid {
    tag: i32,
    ic: usize,
    jc: usize,
    mu: usize,
    mv: usize,
    su: f64,
    sv: f64,
    sin_c: f64,
    radius: f64,
}

/// Builds an idealized atrium on a structured (theta, phi, r) grid. Side
/// holes are made round by blending a square-to-circle map into the grid.
pub fn generate_ideal_atrium(p: &AtriumParams) -> Result<Mesh> {
    let r0 = p.radius;
    if !(p.h > 0.0 && r0 > 0.0 && p.thickness > 0.0 && p.thickness < r0) {
        return Err(Error::Geometry("invalid atrium radius, thickness or h".into()));
    }
    let th_n = p.north_radius / r0;
    let th_s = PI - p.south_radius / r0;
    if !(th_n > 0.0 && th_s < PI && th_n < th_s) {
        return Err(Error::Geometry("pole openings overlap or are empty".into()));
    }
    let mut nth = (((th_s - th_n) * r0 / p.h).round() as usize).max(4);
    nth += nth % 2;
    let mut nph = ((2.0 * PI * r0 / p.h).round() as usize).max(8);
    nph = nph.div_ceil(4) * 4;
    let dth = (th_s - th_n) / nth as f64;
    let dph = 2.0 * PI / nph as f64;
    let nr = ((p.thickness / p.h).round() as usize).max(2);

    let mut tags = TagRegistry::from_pairs([("epi", 0), ("endo", 1), ("appendage", 2)])?;
    let (north_tag, south_tag) = match p.side {
        AtriumSide::Left => (tags.get_or_insert("lpv"), tags.get_or_insert("rpv")),
        AtriumSide::Right => (tags.get_or_insert("scv"), tags.get_or_insert("icv")),
    };
    let wrap = |d: i64| -> i64 {
        let n = nph as i64;
        let mut d = d.rem_euclid(n);
        if d >= n / 2 {
            d -= n;
        }
        d
    };

    let mut holes: Vec<HoleGrid> = Vec::new();
    for hole in &p.holes {
        let tag = tags.get_or_insert(&hole.tag);
        let ic = ((hole.theta - th_n) / dth).round();
        if ic < 0.0 || ic > nth as f64 {
            return Err(Error::Geometry(format!("hole '{}' lies outside the shell", hole.tag)));
        }
        let ic = ic as usize;
        let jc = ((hole.phi / dph).round() as i64).rem_euclid(nph as i64) as usize;
        let thc = th_n + ic as f64 * dth;
        let sin_c = thc.sin();
        let du = dth * r0;
        let dv = dph * sin_c * r0;
        let (mu, mv) = match (half_cells(hole.radius, du), half_cells(hole.radius, dv)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(Error::Geometry(format!(
                    "hole '{}' (radius {}) cannot be resolved at h = {}",
                    hole.tag, hole.radius, p.h
                )))
            }
        };
        let su = mu as f64 * du;
        let sv = mv as f64 * dv;
        if ic < 2 * mu + 1 || ic + 2 * mu + 1 > nth {
            return Err(Error::Geometry(format!("hole '{}' overlaps a pole opening", hole.tag)));
        }
        if 4 * mv + 2 >= nph {
            return Err(Error::Geometry(format!("hole '{}' wraps around the shell", hole.tag)));
        }
        holes.push(HoleGrid { tag, ic, jc, mu, mv, su, sv, sin_c, radius: hole.radius });
    }
    for a in 0..holes.len() {
        for b in 0..a {
            let (ha, hb) = (&holes[a], &holes[b]);
            let di = (ha.ic as i64 - hb.ic as i64).unsigned_abs() as usize;
            let dj = wrap(ha.jc as i64 - hb.jc as i64).unsigned_abs() as usize;
            if di <= 2 * (ha.mu + hb.mu) && dj <= 2 * (ha.mv + hb.mv) {
                return Err(Error::Geometry(format!(
                    "holes '{}' and '{}' overlap",
                    p.holes[a].tag, p.holes[b].tag
                )));
            }
        }
    }

    // Top band cells (right atrium).
    let band: Vec<bool> = if p.side == AtriumSide::Right {
        let jb = ((p.top_band_phi / dph).round() as i64).rem_euclid(nph as i64);
        let w = ((p.top_band_width / (2.0 * dph * r0)).round() as i64).max(1);
        (0..nph as i64).map(|j| (-w..w).contains(&wrap(j - jb))).collect()
    } else {
        vec![false; nph]
    };
    if p.side == AtriumSide::Right {
        for (hi, hg) in holes.iter().enumerate() {
            if (0..nph).any(|j| band[j] && wrap(j as i64 - hg.jc as i64).unsigned_abs() as usize <= 2 * hg.mv + 1) {
                return Err(Error::Geometry(format!("hole '{}' overlaps the top band", p.holes[hi].tag)));
            }
        }
    }

    // Which hole (if any) removes cell (i, j).
    let removed = |i: usize, j: usize| -> Option<usize> {
        holes.iter().position(|hg| {
            let du = i as f64 + 0.5 - hg.ic as f64;
            let dv = wrap(j as i64 - hg.jc as i64) as f64 + 0.5;
            du.abs() < hg.mu as f64 && dv.abs() < hg.mv as f64
        })
    };
    let mut cell_hole = vec![None; nth * nph];
    for i in 0..nth {
        for j in 0..nph {
            cell_hole[i * nph + j] = removed(i, j);
        }
    }

    // Deformed angular coordinates of each surface node.
    let mut ang = vec![(0.0, 0.0); (nth + 1) * nph];
    for i in 0..=nth {
        for j in 0..nph {
            let mut th = th_n + i as f64 * dth;
            let mut ph = j as f64 * dph;
            for hg in &holes {
                let di = i as i64 - hg.ic as i64;
                let dj = wrap(j as i64 - hg.jc as i64);
                if di.unsigned_abs() as usize > 2 * hg.mu || dj.unsigned_abs() as usize > 2 * hg.mv {
                    continue;
                }
                let u = di as f64 * dth * r0;
                let v = dj as f64 * dph * hg.sin_c * r0;
                let rho = (u.abs() / hg.su).max(v.abs() / hg.sv);
                if rho < 1.0 - 1e-12 {
                    continue;
                }
                let lam = rho - 1.0;
                let norm = (u * u + v * v).sqrt();
                let scale = (1.0 - lam) * hg.radius * rho / norm + lam;
                let thc = th_n + hg.ic as f64 * dth;
                th = thc + u * scale / r0;
                ph = hg.jc as f64 * dph + v * scale / (r0 * hg.sin_c);
            }
            ang[i * nph + j] = (th, ph);
        }
    }

    // Nodes used by at least one kept cell, numbered in (i, j, k) order.
    let mut used = vec![false; (nth + 1) * nph];
    for i in 0..nth {
        for j in 0..nph {
            if cell_hole[i * nph + j].is_none() {
                for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    used[(i + a) * nph + (j + b) % nph] = true;
                }
            }
        }
    }
    let mut remap = vec![usize::MAX; (nth + 1) * nph];
    let mut nodes: Vec<Point> = Vec::new();
    for i in 0..=nth {
        for j in 0..nph {
            if !used[i * nph + j] {
                continue;
            }
            remap[i * nph + j] = nodes.len();
            let (th, ph) = ang[i * nph + j];
            for k in 0..=nr {
                let r = r0 - 0.5 * p.thickness + p.thickness * k as f64 / nr as f64;
                nodes.push([r * th.sin() * ph.cos(), r * th.sin() * ph.sin(), r * th.cos()]);
            }
        }
    }
    let nid = |i: usize, j: usize, k: usize| remap[i * nph + j % nph] + k;

    let epi = 0;
    let endo = 1;
    let (top_epi, top_endo) = if p.side == AtriumSide::Right {
        (tags.get_or_insert("top-epi"), tags.get_or_insert("top-endo"))
    } else {
        (epi, endo)
    };
    let mut elements = Vec::new();
    let mut facets: Vec<([usize; 4], i32)> = Vec::new();
    for i in 0..nth {
        for j in 0..nph {
            if cell_hole[i * nph + j].is_some() {
                continue;
            }
            let jn = j + 1;
            for k in 0..nr {
                let el = [
                    nid(i, j, k),
                    nid(i + 1, j, k),
                    nid(i + 1, jn, k),
                    nid(i, jn, k),
                    nid(i, j, k + 1),
                    nid(i + 1, j, k + 1),
                    nid(i + 1, jn, k + 1),
                    nid(i, jn, k + 1),
                ];
                elements.push(el);
                let face = |lf: usize| super::HEX_FACES[lf].map(|l| el[l]);
                if k == 0 {
                    facets.push((face(0), if band[j] { top_endo } else { endo }));
                }
                if k + 1 == nr {
                    facets.push((face(1), if band[j] { top_epi } else { epi }));
                }
                let side_tag = |ii: Option<usize>, jj: usize| -> Option<i32> {
                    match ii {
                        None => None,
                        Some(ii) => cell_hole[ii * nph + jj % nph].map(|h| holes[h].tag),
                    }
                };
                // theta faces
                if i == 0 {
                    facets.push((face(4), north_tag));
                } else if let Some(t) = side_tag(Some(i - 1), j) {
                    facets.push((face(4), t));
                }
                if i + 1 == nth {
                    facets.push((face(5), south_tag));
                } else if let Some(t) = side_tag(Some(i + 1), j) {
                    facets.push((face(5), t));
                }
                // phi faces
                if let Some(t) = side_tag(Some(i), (j + nph - 1) % nph) {
                    facets.push((face(2), t));
                }
                if let Some(t) = side_tag(Some(i), j + 1) {
                    facets.push((face(3), t));
                }
            }
        }
    }

    if p.side == AtriumSide::Right {
        if let Some(tv) = tags.id("tv") {
            split_tv(p, &nodes, &mut facets, &mut tags, tv, th_n, th_s)?;
        }
    }
    Mesh::new(nodes, elements, facets, tags)
}

/// Splits the `tv` rim into `tv-s` and `tv-f` with the plane through both
/// band ends and the valve centre.
fn split_tv(
    p: &AtriumParams,
    nodes: &[Point],
    facets: &mut [([usize; 4], i32)],
    tags: &mut TagRegistry,
    tv: i32,
    th_n: f64,
    th_s: f64,
) -> Result<()> {
    let sph = |th: f64, ph: f64| Vector3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()) * p.radius;
    let hole = |name: &str| p.holes.iter().find(|h| h.tag == name);
    let tvh = hole("tv").expect("tv hole present");
    let a = sph(th_n, p.top_band_phi);
    let b = sph(th_s, p.top_band_phi);
    let c = sph(tvh.theta, tvh.phi);
    let mut normal = (b - a).cross(&(c - a));
    let septal_ref = hole("cs").map_or(Vector3::y() * p.radius, |h| sph(h.theta, h.phi));
    if (septal_ref - a).dot(&normal) < 0.0 {
        normal = -normal;
    }
    // The old tv id is reused for tv-s so ids stay dense.
    let tv_f = tags.get_or_insert("tv-f");
    let mut by_name: Vec<(String, i32)> = tags.iter().map(|(n, i)| (n.to_string(), i)).collect();
    for e in by_name.iter_mut() {
        if e.0 == "tv" {
            e.0 = "tv-s".into();
        }
    }
    *tags = TagRegistry::from_pairs(by_name)?;
    for (f, t) in facets.iter_mut() {
        if *t == tv {
            let cen = f.iter().map(|&n| Vector3::from(nodes[n])).sum::<Vector3<f64>>() / 4.0;
            if (cen - a).dot(&normal) <= 0.0 {
                *t = tv_f;
            }
        }
    }
    Ok(())
}
