use nalgebra::{Vector3, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::cap::SphericalCap;
use crate::conformal::ConformalDomain;
use crate::error::{Error, Result};
use crate::hyp::{mink, ChartKind, HIsometry, IdealPoint};

/// A finite set of pairwise distinct ideal points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdealPointSet {
    points: Vec<IdealPoint>,
}

impl IdealPointSet {
    pub fn new(points: Vec<IdealPoint>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 ideal points, got {}", points.len())));
        }
        for a in 0..points.len() {
            for b in a + 1..points.len() {
                if points[a].chordal(&points[b]) < 1e-9 {
                    return Err(Error::Degenerate(format!("ideal points {a} and {b} coincide")));
                }
            }
        }
        Ok(IdealPointSet { points })
    }

    pub fn from_vectors(vs: &[Vector3<f64>]) -> Result<Self> {
        IdealPointSet::new(vs.iter().map(|v| IdealPoint::new(*v)).collect::<Result<_>>()?)
    }

    /// Vertices of a regular tetrahedron inscribed in the sphere.
    pub fn regular_tetrahedron() -> Self {
        let s = 1.0 / 3f64.sqrt();
        IdealPointSet::from_vectors(&[
            Vector3::new(s, s, s),
            Vector3::new(s, -s, -s),
            Vector3::new(-s, s, -s),
            Vector3::new(-s, -s, s),
        ])
        .expect("distinct vertices")
    }

    pub fn points(&self) -> &[IdealPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn transform(&self, g: &HIsometry) -> Self {
        IdealPointSet { points: self.points.iter().map(|p| g.apply_ideal(p)).collect() }
    }

    pub(crate) fn lights(&self) -> Vec<Vector4<f64>> {
        self.points.iter().map(|p| p.light_vector()).collect()
    }
}

/// The sphere minus a finite point set, with its Thurston metric.
///
/// Maximal disks of a punctured sphere pass through at least two punctures,
/// so the optimal disk at `ξ` is either the best disk of a two-point pencil or
/// a circumdisk of three punctures. The density at `ξ` of the disk with plane
/// normal `N` is `1 / <ℓ_ξ, N>`, which makes every candidate explicit.
#[derive(Debug, Clone)]
pub struct PointComplement {
    pub set: IdealPointSet,
}

/// The optimal disk at a point and the punctures on its rim.
#[derive(Debug, Clone)]
pub struct PunctureDisk {
    pub plane: Vector4<f64>,
    pub support: f64,
    pub contacts: Vec<usize>,
}

impl PunctureDisk {
    pub fn cap(&self) -> Result<SphericalCap> {
        SphericalCap::from_plane(&self.plane)
    }
}

impl PointComplement {
    pub fn new(set: IdealPointSet) -> Self {
        PointComplement { set }
    }

    fn feasible(&self, ls: &[Vector4<f64>], n: &Vector4<f64>, skip: &[usize]) -> bool {
        ls.iter().enumerate().all(|(k, l)| skip.contains(&k) || mink(l, n) <= 1e-12)
    }

    /// The maximal disk through `ξ` minimizing the hyperbolic density at `ξ`.
    pub fn optimal_disk(&self, xi: &IdealPoint) -> Result<PunctureDisk> {
        let ls = self.set.lights();
        let lx = xi.light_vector();
        for (k, l) in ls.iter().enumerate() {
            if (l - lx).norm() < 1e-9 {
                return Err(Error::IllConditioned(format!("point coincides with puncture {k}")));
            }
        }
        let n = ls.len();
        let mut best: Option<PunctureDisk> = None;
        let mut offer = |plane: Vector4<f64>, contacts: Vec<usize>| {
            let s = mink(&lx, &plane);
            if s > 0.0 && best.as_ref().is_none_or(|b| s > b.support) {
                best = Some(PunctureDisk { plane, support: s, contacts });
            }
        };
        for a in 0..n {
            for b in a + 1..n {
                // Unit normals orthogonal to ℓ_a and ℓ_b form a circle in a spacelike 2-plane.
                let (e1, e2) = pencil_basis(&ls[a], &ls[b]);
                let (p, q) = (mink(&lx, &e1), mink(&lx, &e2));
                let r = p.hypot(q);
                if r > 0.0 {
                    let plane = (e1 * p + e2 * q) / r;
                    if self.feasible(&ls, &plane, &[a, b]) {
                        offer(plane, vec![a, b]);
                    }
                }
                for c in b + 1..n {
                    let m = crate::hyp::mink_cross(&ls[a], &ls[b], &ls[c]);
                    let q = mink(&m, &m);
                    if !(q > 1e-300) {
                        continue;
                    }
                    for sign in [1.0, -1.0] {
                        let plane = m * (sign / q.sqrt());
                        if self.feasible(&ls, &plane, &[a, b, c]) {
                            offer(plane, vec![a, b, c]);
                        }
                    }
                }
            }
        }
        best.ok_or_else(|| Error::Degenerate("no admissible disk through the point".into()))
    }

    pub fn thurston_log_density_at(&self, xi: &IdealPoint) -> Result<f64> {
        Ok(-self.optimal_disk(xi)?.support.ln())
    }
}

/// Orthonormal basis of the spacelike plane Minkowski-orthogonal to two null vectors.
fn pencil_basis(la: &Vector4<f64>, lb: &Vector4<f64>) -> (Vector4<f64>, Vector4<f64>) {
    let mut basis: Vec<Vector4<f64>> = Vec::new();
    let span = [la, lb];
    // <la, lb> < 0 for distinct future null vectors.
    let gab = mink(la, lb);
    for k in 0..4 {
        let mut v = Vector4::zeros();
        v[k] = 1.0;
        // Remove the component along span{la, lb}: v - x la - y lb with <., la> = <., lb> = 0.
        let (va, vb) = (mink(&v, span[0]), mink(&v, span[1]));
        let x = vb / gab;
        let y = va / gab;
        let mut w = v - la * x - lb * y;
        for u in &basis {
            w -= u * mink(&w, u);
        }
        let q = mink(&w, &w);
        if q > 1e-8 {
            basis.push(w / q.sqrt());
            if basis.len() == 2 {
                break;
            }
        }
    }
    (basis[0], basis[1])
}

impl ConformalDomain for PointComplement {
    fn hyperbolic_log_density(&self, _kind: ChartKind, _z: Complex64) -> Result<f64> {
        Err(Error::InvalidArgument("complete hyperbolic metric of a punctured sphere is not available in closed form".into()))
    }

    fn thurston_log_density(&self, kind: ChartKind, z: Complex64) -> Result<f64> {
        self.thurston_log_density_at(&IdealPoint::from_chart(kind, z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pencil_basis_is_orthonormal() {
        let a = Vector4::new(1.0, 0.0, 0.0, 1.0);
        let b = Vector4::new(1.0, 0.6, 0.8, 0.0);
        let (e1, e2) = pencil_basis(&a, &b);
        for e in [e1, e2] {
            assert!((mink(&e, &e) - 1.0).abs() < 1e-12);
            assert!(mink(&e, &a).abs() < 1e-12 && mink(&e, &b).abs() < 1e-12);
        }
        assert!(mink(&e1, &e2).abs() < 1e-12);
    }

    #[test]
    fn two_punctures_at_antipodes() {
        // Maximal disks through ξ avoiding ±z: the optimum is the hemisphere bounded by
        // the great circle through ±z orthogonal to ξ's meridian, density sec 0 = 1 on the equator.
        let set = IdealPointSet::from_vectors(&[Vector3::z(), -Vector3::z()]).unwrap();
        let pc = PointComplement::new(set);
        let xi = IdealPoint::new(Vector3::x()).unwrap();
        assert!(pc.thurston_log_density_at(&xi).unwrap().abs() < 1e-12);
    }

    #[test]
    fn rejects_coincident_points() {
        assert!(IdealPointSet::from_vectors(&[Vector3::z(), Vector3::z() * 2.0]).is_err());
        assert!(IdealPointSet::from_vectors(&[Vector3::z()]).is_err());
    }
}
