use nalgebra::{Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::points::IdealPointSet;
use crate::error::{Error, Result};
use crate::hyp::{mink, HPoint, IdealPoint};
use crate::optim::nelder_mead;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HullKind {
    /// Three-dimensional ideal polyhedron.
    Solid,
    /// All points on one circle: a single totally geodesic ideal polygon.
    Planar,
    /// Two points: the hull is a geodesic line.
    Geodesic,
}

/// A face of the hull: support plane (unit spacelike, hull on the nonpositive side) and vertex cycle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullFace {
    pub plane: [f64; 4],
    pub vertices: Vec<usize>,
}

impl HullFace {
    pub fn normal(&self) -> Vector4<f64> {
        Vector4::from(self.plane)
    }
}

/// A bending line: the geodesic between two ideal vertices shared by two faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullEdge {
    pub faces: Option<(usize, usize)>,
    pub endpoints: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexHullBoundary {
    pub kind: HullKind,
    pub points: Vec<[f64; 3]>,
    pub faces: Vec<HullFace>,
    pub edges: Vec<HullEdge>,
}

/// Where the horoball at `ξ` first touches the hull.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Contact {
    Face(usize),
    Edge(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct Projection {
    pub point: HPoint,
    /// `-<ℓ_ξ, m>` with `ℓ_ξ = (1, ξ)`, minimal over the hull.
    pub busemann: f64,
    pub contact: Contact,
}

const PLANE_EPS: f64 = 1e-12;

fn klein_plane(n: &Vector3<f64>, h: f64) -> Vector4<f64> {
    Vector4::new(h, n.x, n.y, n.z) / (1.0 - h * h).sqrt()
}

pub fn ideal_hull(set: &IdealPointSet) -> Result<ConvexHullBoundary> {
    let pts: Vec<Vector3<f64>> = set.points().iter().map(|p| *p.dir()).collect();
    let stored: Vec<[f64; 3]> = pts.iter().map(|p| [p.x, p.y, p.z]).collect();
    let n = pts.len();
    if n < 2 {
        return Err(Error::InvalidArgument("hull needs at least 2 points".into()));
    }
    if n == 2 {
        return Ok(ConvexHullBoundary {
            kind: HullKind::Geodesic,
            points: stored,
            faces: Vec::new(),
            edges: vec![HullEdge { faces: None, endpoints: (0, 1) }],
        });
    }
    let i1 = (1..n).max_by(|&a, &b| (pts[a] - pts[0]).norm().total_cmp(&(pts[b] - pts[0]).norm())).unwrap();
    let line = (pts[i1] - pts[0]).normalize();
    let off_line = |k: usize| {
        let d = pts[k] - pts[0];
        (d - line * d.dot(&line)).norm()
    };
    let i2 = (0..n).max_by(|&a, &b| off_line(a).total_cmp(&off_line(b))).unwrap();
    let pn = (pts[i1] - pts[0]).cross(&(pts[i2] - pts[0])).normalize();
    let off_plane = |k: usize| (pts[k] - pts[0]).dot(&pn);
    let i3 = (0..n).max_by(|&a, &b| off_plane(a).abs().total_cmp(&off_plane(b).abs())).unwrap();
    if off_plane(i3).abs() < 1e-9 {
        return Ok(planar_hull(&pts, stored, pn));
    }
    let mut faces: Vec<[usize; 3]> = Vec::new();
    let interior = (pts[0] + pts[i1] + pts[i2] + pts[i3]) / 4.0;
    let orient = |f: [usize; 3]| -> [usize; 3] {
        let nrm = (pts[f[1]] - pts[f[0]]).cross(&(pts[f[2]] - pts[f[0]]));
        if nrm.dot(&(interior - pts[f[0]])) > 0.0 {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    };
    for f in [[0, i1, i2], [0, i1, i3], [0, i2, i3], [i1, i2, i3]] {
        faces.push(orient(f));
    }
    let seed = [0, i1, i2, i3];
    for p in 0..n {
        if seed.contains(&p) {
            continue;
        }
        let visible: Vec<bool> = faces
            .iter()
            .map(|f| {
                let nrm = (pts[f[1]] - pts[f[0]]).cross(&(pts[f[2]] - pts[f[0]])).normalize();
                nrm.dot(&(pts[p] - pts[f[0]])) > PLANE_EPS
            })
            .collect();
        if !visible.iter().any(|&v| v) {
            return Err(Error::Degenerate(format!("point {p} is not extreme at working precision")));
        }
        let mut horizon = Vec::new();
        for (k, f) in faces.iter().enumerate() {
            if !visible[k] {
                continue;
            }
            for e in 0..3 {
                let (u, v) = (f[e], f[(e + 1) % 3]);
                let shared = faces.iter().enumerate().any(|(m, g)| {
                    visible[m] && (0..3).any(|q| g[q] == v && g[(q + 1) % 3] == u)
                });
                if !shared {
                    horizon.push((u, v));
                }
            }
        }
        let mut kept: Vec<[usize; 3]> = faces.iter().zip(&visible).filter(|(_, v)| !**v).map(|(f, _)| *f).collect();
        kept.extend(horizon.into_iter().map(|(u, v)| [u, v, p]));
        faces = kept;
    }
    Ok(merge_coplanar(&pts, stored, &faces))
}

fn planar_hull(pts: &[Vector3<f64>], stored: Vec<[f64; 3]>, pn: Vector3<f64>) -> ConvexHullBoundary {
    let h0 = pn.dot(&pts[0]);
    let (pn, h) = if h0 < 0.0 { (-pn, -h0) } else { (pn, h0) };
    let c = pn * h;
    let e1 = (pts[0] - c).normalize();
    let e2 = pn.cross(&e1);
    let mut order: Vec<usize> = (0..pts.len()).collect();
    let ang = |k: usize| (pts[k] - c).dot(&e2).atan2((pts[k] - c).dot(&e1));
    order.sort_by(|&a, &b| ang(a).total_cmp(&ang(b)));
    let plane = klein_plane(&pn, h);
    let m = order.len();
    let edges = (0..m)
        .map(|k| {
            let (a, b) = (order[k], order[(k + 1) % m]);
            HullEdge { faces: Some((0, 0)), endpoints: (a.min(b), a.max(b)) }
        })
        .collect();
    ConvexHullBoundary {
        kind: HullKind::Planar,
        points: stored,
        faces: vec![HullFace { plane: [plane[0], plane[1], plane[2], plane[3]], vertices: order }],
        edges,
    }
}

fn merge_coplanar(pts: &[Vector3<f64>], stored: Vec<[f64; 3]>, tris: &[[usize; 3]]) -> ConvexHullBoundary {
    let planes: Vec<(Vector3<f64>, f64)> = tris
        .iter()
        .map(|f| {
            let n = (pts[f[1]] - pts[f[0]]).cross(&(pts[f[2]] - pts[f[0]])).normalize();
            (n, n.dot(&pts[f[0]]))
        })
        .collect();
    let same = |a: usize, b: usize| (planes[a].0 - planes[b].0).norm() < 1e-9 && (planes[a].1 - planes[b].1).abs() < 1e-9;
    let neighbor = |t: usize, u: usize, v: usize| -> usize {
        (0..tris.len()).find(|&m| (0..3).any(|q| tris[m][q] == v && tris[m][(q + 1) % 3] == u)).unwrap_or(t)
    };
    let mut group = vec![usize::MAX; tris.len()];
    let mut ngroups = 0;
    for t in 0..tris.len() {
        if group[t] != usize::MAX {
            continue;
        }
        let mut stack = vec![t];
        group[t] = ngroups;
        while let Some(s) = stack.pop() {
            for e in 0..3 {
                let m = neighbor(s, tris[s][e], tris[s][(e + 1) % 3]);
                if group[m] == usize::MAX && same(t, m) {
                    group[m] = ngroups;
                    stack.push(m);
                }
            }
        }
        ngroups += 1;
    }
    let mut faces = Vec::with_capacity(ngroups);
    let mut edges = Vec::new();
    for g in 0..ngroups {
        let members: Vec<usize> = (0..tris.len()).filter(|&t| group[t] == g).collect();
        let mut boundary: Vec<(usize, usize)> = Vec::new();
        for &t in &members {
            for e in 0..3 {
                let (u, v) = (tris[t][e], tris[t][(e + 1) % 3]);
                let m = neighbor(t, u, v);
                if group[m] != g {
                    boundary.push((u, v));
                    if u < v {
                        edges.push((group[m], g, u, v));
                    }
                }
            }
        }
        let mut cycle = vec![boundary[0].0];
        let mut cur = boundary[0].1;
        while cur != cycle[0] {
            cycle.push(cur);
            cur = boundary.iter().find(|e| e.0 == cur).map(|e| e.1).expect("closed boundary");
        }
        // Average the member normals to reduce round-off, then rebuild the offset from the vertices.
        let n = members.iter().map(|&t| planes[t].0).sum::<Vector3<f64>>().normalize();
        let h = cycle.iter().map(|&k| n.dot(&pts[k])).sum::<f64>() / cycle.len() as f64;
        let plane = klein_plane(&n, h);
        faces.push(HullFace { plane: [plane[0], plane[1], plane[2], plane[3]], vertices: cycle });
    }
    let edges = edges
        .into_iter()
        .map(|(f, g, u, v)| HullEdge { faces: Some((f.min(g), f.max(g))), endpoints: (u, v) })
        .collect();
    ConvexHullBoundary { kind: HullKind::Solid, points: stored, faces, edges }
}

impl ConvexHullBoundary {
    pub fn point(&self, k: usize) -> Vector3<f64> {
        Vector3::from(self.points[k])
    }

    pub fn light(&self, k: usize) -> Vector4<f64> {
        let p = self.points[k];
        Vector4::new(1.0, p[0], p[1], p[2])
    }

    /// Interior dihedral angle at an edge, `arccos(-<N_f, N_g>)`.
    pub fn interior_dihedral(&self, edge: usize) -> Option<f64> {
        let (f, g) = self.edges[edge].faces?;
        if f == g {
            return Some(0.0);
        }
        let c = -mink(&self.faces[f].normal(), &self.faces[g].normal());
        Some(c.clamp(-1.0, 1.0).acos())
    }

    /// Largest `<ℓ_p, N_f>` over points and faces; nonpositive for a convex hull.
    pub fn convexity_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for f in &self.faces {
            for k in 0..self.points.len() {
                worst = worst.max(mink(&self.light(k), &f.normal()));
            }
        }
        worst
    }

    /// Largest `|<ℓ_v, N_f>|` over the vertices of each face.
    pub fn planarity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for f in &self.faces {
            for &k in &f.vertices {
                worst = worst.max(mink(&self.light(k), &f.normal()).abs());
            }
        }
        worst
    }

    pub fn vertex_set(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.faces.iter().flat_map(|f| f.vertices.iter().cloned()).collect();
        v.extend(self.edges.iter().flat_map(|e| [e.endpoints.0, e.endpoints.1]));
        v.sort_unstable();
        v.dedup();
        v
    }

    fn in_face(&self, face: &HullFace, k: &Vector3<f64>) -> bool {
        let nrm = Vector3::new(face.plane[1], face.plane[2], face.plane[3]);
        let m = face.vertices.len();
        let mut sign = 0.0;
        for i in 0..m {
            let a = self.point(face.vertices[i]);
            let b = self.point(face.vertices[(i + 1) % m]);
            let s = (b - a).cross(&(k - a)).dot(&nrm);
            if sign == 0.0 && s.abs() > 1e-14 {
                sign = s.signum();
            }
            if s * sign < -1e-12 {
                return false;
            }
        }
        true
    }
}

/// Closest point on the horoball family at `ξ`: the minimizer of `-<ℓ_ξ, m>` over the hull boundary.
pub fn hull_projection(hull: &ConvexHullBoundary, xi: &IdealPoint) -> Result<Projection> {
    let l = xi.light_vector();
    for k in 0..hull.points.len() {
        if (hull.point(k) - xi.dir()).norm() < 1e-9 {
            return Err(Error::IllConditioned(format!("ideal point coincides with hull vertex {k}")));
        }
    }
    let mut best: Option<Projection> = None;
    let mut offer = |m: Vector4<f64>, contact: Contact| {
        let b = -mink(&l, &m);
        if best.as_ref().is_none_or(|p| b < p.busemann) {
            best = Some(Projection { point: HPoint::from_raw(m), busemann: b, contact });
        }
    };
    for (fi, f) in hull.faces.iter().enumerate() {
        let n = f.normal();
        let c = mink(&l, &n);
        if c.abs() < 1e-14 {
            continue;
        }
        let mut m = (l - n * c) / c.abs();
        if m[0] < 0.0 {
            m = -m;
        }
        let k = Vector3::new(m[1], m[2], m[3]) / m[0];
        if hull.in_face(f, &k) {
            offer(m, Contact::Face(fi));
        }
    }
    for (ei, e) in hull.edges.iter().enumerate() {
        let (a, b) = (hull.light(e.endpoints.0), hull.light(e.endpoints.1));
        let alpha = -mink(&l, &a);
        let beta = -mink(&l, &b);
        let gamma = -mink(&a, &b);
        let x = (beta / (2.0 * alpha * gamma)).sqrt();
        let y = (alpha / (2.0 * beta * gamma)).sqrt();
        offer(a * x + b * y, Contact::Edge(ei));
    }
    let mut p = best.ok_or_else(|| Error::Degenerate("hull has no faces or edges".into()))?;
    p.point = HPoint::normalize(*p.point.coords())?;
    Ok(p)
}

/// Base point minimizing the largest Busemann value `log(-<ℓ_p, m>)` over the set.
///
/// For two points this is a point of their geodesic, equidistant from both horofunctions.
pub fn base_point(set: &IdealPointSet) -> HPoint {
    let ls = set.lights();
    let at = |x: &[f64]| {
        let v = Vector3::new(x[0], x[1], x[2]);
        let t = v.norm();
        let dir = if t > 0.0 { v / t } else { Vector3::zeros() };
        Vector4::new(t.cosh(), t.sinh() * dir.x, t.sinh() * dir.y, t.sinh() * dir.z)
    };
    let f = |x: &[f64]| {
        let m = at(x);
        ls.iter().map(|l| (-mink(l, &m)).ln()).fold(f64::NEG_INFINITY, f64::max)
    };
    let mut x = vec![0.0; 3];
    let mut step = 0.5;
    for _ in 0..6 {
        x = nelder_mead(&f, &x, step, 1e-12, 1e-15, 5000).0;
        step *= 0.2;
    }
    HPoint::from_raw(at(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_tetrahedron_dihedrals() {
        let hull = ideal_hull(&IdealPointSet::regular_tetrahedron()).unwrap();
        assert_eq!(hull.kind, HullKind::Solid);
        assert_eq!(hull.faces.len(), 4);
        assert_eq!(hull.edges.len(), 6);
        for e in 0..6 {
            let a = hull.interior_dihedral(e).unwrap();
            assert!((a - std::f64::consts::FRAC_PI_3).abs() < 1e-12, "{a}");
        }
        assert!(hull.convexity_violation() <= 1e-12);
    }

    #[test]
    fn octahedron_has_eight_faces() {
        let vs = [Vector3::x(), -Vector3::x(), Vector3::y(), -Vector3::y(), Vector3::z(), -Vector3::z()];
        let hull = ideal_hull(&IdealPointSet::from_vectors(&vs).unwrap()).unwrap();
        assert_eq!(hull.faces.len(), 8);
        for e in 0..hull.edges.len() {
            assert!((hull.interior_dihedral(e).unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_faces_merge_into_squares() {
        let s = 1.0 / 3f64.sqrt();
        let mut vs = Vec::new();
        for a in [-s, s] {
            for b in [-s, s] {
                for c in [-s, s] {
                    vs.push(Vector3::new(a, b, c));
                }
            }
        }
        let hull = ideal_hull(&IdealPointSet::from_vectors(&vs).unwrap()).unwrap();
        assert_eq!(hull.faces.len(), 6);
        assert!(hull.faces.iter().all(|f| f.vertices.len() == 4));
        assert_eq!(hull.edges.len(), 12);
        assert!(hull.planarity_residual() < 1e-12);
    }

    #[test]
    fn cocircular_points_are_planar() {
        let vs: Vec<Vector3<f64>> =
            (0..5).map(|k| {
                let t = std::f64::consts::TAU * k as f64 / 5.0 + 0.3 * (k % 2) as f64;
                Vector3::new(t.cos(), t.sin(), 0.0)
            }).collect();
        let hull = ideal_hull(&IdealPointSet::from_vectors(&vs).unwrap()).unwrap();
        assert_eq!(hull.kind, HullKind::Planar);
        assert_eq!(hull.faces.len(), 1);
        let pole = IdealPoint::new(Vector3::z()).unwrap();
        let p = hull_projection(&hull, &pole).unwrap();
        assert!((p.point.coords() - Vector4::new(1.0, 0.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn projection_rejects_vertices() {
        let hull = ideal_hull(&IdealPointSet::regular_tetrahedron()).unwrap();
        let v = IdealPoint::new(hull.point(2)).unwrap();
        assert!(hull_projection(&hull, &v).is_err());
    }

    #[test]
    fn two_point_base_point_is_on_geodesic() {
        let set = IdealPointSet::from_vectors(&[Vector3::z(), Vector3::new(1.0, 0.0, 0.0)]).unwrap();
        let m = base_point(&set);
        let l: Vec<f64> = set.lights().iter().map(|l| -mink(l, m.coords())).collect();
        assert!((l[0] - l[1]).abs() < 1e-8);
        let hull = ideal_hull(&set).unwrap();
        assert_eq!(hull.kind, HullKind::Geodesic);
        // On the geodesic the two Busemann values multiply to 1/(2γ) with γ = 1.
        assert!((l[0] * l[1] - 0.5).abs() < 1e-8);
    }
}
