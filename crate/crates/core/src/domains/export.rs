//! Hull export as OBJ (Klein-model coordinates) plus a JSON sidecar.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::hull::{ConvexHullBoundary, HullEdge, HullFace, HullKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Sidecar {
    format: String,
    model: String,
    kind: HullKind,
    faces: Vec<SidecarFace>,
    edges: Vec<SidecarEdge>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SidecarFace {
    plane: [f64; 4],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SidecarEdge {
    faces: Option<(usize, usize)>,
    endpoints: (usize, usize),
    interior_dihedral: Option<f64>,
}

const HULL_FORMAT: &str = "ideal-hull/1";

/// Returns `(obj, sidecar_json)`.
pub fn export_hull(hull: &ConvexHullBoundary) -> Result<(String, String)> {
    let mut obj = String::new();
    writeln!(obj, "# ideal convex hull, Klein model").unwrap();
    for p in &hull.points {
        writeln!(obj, "v {} {} {}", p[0], p[1], p[2]).unwrap();
    }
    for f in &hull.faces {
        let idx: Vec<String> = f.vertices.iter().map(|k| (k + 1).to_string()).collect();
        writeln!(obj, "f {}", idx.join(" ")).unwrap();
    }
    for e in &hull.edges {
        if e.faces.is_none() {
            writeln!(obj, "l {} {}", e.endpoints.0 + 1, e.endpoints.1 + 1).unwrap();
        }
    }
    let sidecar = Sidecar {
        format: HULL_FORMAT.into(),
        model: "klein".into(),
        kind: hull.kind,
        faces: hull.faces.iter().map(|f| SidecarFace { plane: f.plane }).collect(),
        edges: hull
            .edges
            .iter()
            .enumerate()
            .map(|(k, e)| SidecarEdge { faces: e.faces, endpoints: e.endpoints, interior_dihedral: hull.interior_dihedral(k) })
            .collect(),
    };
    Ok((obj, serde_json::to_string_pretty(&sidecar)? + "\n"))
}

pub fn import_hull(obj: &str, sidecar: &str) -> Result<ConvexHullBoundary> {
    let meta: Sidecar = serde_json::from_str(sidecar)?;
    if meta.format != HULL_FORMAT {
        return Err(Error::Parse { line: 1, msg: format!("unknown sidecar format '{}'", meta.format) });
    }
    let mut points = Vec::new();
    let mut cycles: Vec<Vec<usize>> = Vec::new();
    for (k, line) in obj.lines().enumerate() {
        let lineno = k + 1;
        let mut it = line.split_whitespace();
        let bad = |msg: &str| Error::Parse { line: lineno, msg: msg.to_string() };
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it.map(|t| t.parse::<f64>().map_err(|_| bad("bad vertex coordinate"))).collect::<Result<_>>()?;
                if c.len() != 3 {
                    return Err(bad("vertex needs 3 coordinates"));
                }
                points.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|t| t.parse::<usize>().ok().filter(|&i| i >= 1 && i <= points.len()).map(|i| i - 1).ok_or_else(|| bad("bad face index")))
                    .collect::<Result<_>>()?;
                if idx.len() < 3 {
                    return Err(bad("face needs at least 3 vertices"));
                }
                cycles.push(idx);
            }
            Some("l") | Some("#") | None => {}
            Some(other) if other.starts_with('#') => {}
            Some(other) => return Err(bad(&format!("unsupported record '{other}'"))),
        }
    }
    if cycles.len() != meta.faces.len() {
        return Err(Error::Parse { line: 0, msg: "face count differs between OBJ and sidecar".into() });
    }
    let faces = cycles.into_iter().zip(meta.faces).map(|(vertices, f)| HullFace { plane: f.plane, vertices }).collect();
    let edges = meta.edges.into_iter().map(|e| HullEdge { faces: e.faces, endpoints: e.endpoints }).collect();
    Ok(ConvexHullBoundary { kind: meta.kind, points, faces, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::{ideal_hull, IdealPointSet};

    #[test]
    fn export_import_is_bit_identical() {
        let hull = ideal_hull(&IdealPointSet::regular_tetrahedron()).unwrap();
        let (obj, side) = export_hull(&hull).unwrap();
        let back = import_hull(&obj, &side).unwrap();
        assert_eq!(back, hull);
        let (obj2, side2) = export_hull(&back).unwrap();
        assert_eq!(obj, obj2);
        assert_eq!(side, side2);
    }

    #[test]
    fn random_hulls_survive_the_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let vs: Vec<nalgebra::Vector3<f64>> = (0..rng.gen_range(4..40))
                .map(|_| nalgebra::Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .filter(|v: &nalgebra::Vector3<f64>| v.norm() > 0.1)
                .collect();
            let Ok(set) = IdealPointSet::from_vectors(&vs) else { continue };
            let hull = ideal_hull(&set).unwrap();
            let (obj, side) = export_hull(&hull).unwrap();
            assert_eq!(import_hull(&obj, &side).unwrap(), hull);
        }
    }
}
