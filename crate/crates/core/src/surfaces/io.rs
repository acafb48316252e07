//! Surface patches as Wavefront OBJ meshes in Poincaré ball coordinates with a JSON sidecar.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use super::forms::FundamentalForms;
use super::patch::SurfacePatch;
use crate::error::{Error, Result};
use crate::hyp::HPoint;

pub const PATCH_FORMAT: &str = "surface-patch/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchMeta {
    pub format: String,
    pub model: String,
    pub orientation: f64,
    pub nu: usize,
    pub nv: usize,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub family: Option<String>,
}

impl PatchMeta {
    pub fn of(patch: &SurfacePatch) -> Self {
        PatchMeta {
            format: PATCH_FORMAT.into(),
            model: "poincare".into(),
            orientation: patch.orientation,
            nu: patch.nu,
            nv: patch.nv,
            u_range: patch.u_range,
            v_range: patch.v_range,
            family: patch.family().map(|f| f.name().to_string()),
        }
    }
}

/// Writes the node grid (`u` fastest) and its triangulation.
pub fn write_obj<W: Write>(patch: &SurfacePatch, mut out: W) -> Result<()> {
    writeln!(out, "# {} nodes {}x{}", PATCH_FORMAT, patch.nu, patch.nv)?;
    for j in 0..patch.nv {
        for i in 0..patch.nu {
            let p = HPoint::normalize(patch.sample_point(i, j))?.to_poincare();
            writeln!(out, "v {:.17e} {:.17e} {:.17e}", p.x, p.y, p.z)?;
        }
    }
    for j in 0..patch.nv - 1 {
        for i in 0..patch.nu - 1 {
            let a = patch.index(i, j) + 1;
            let (b, c, d) = (a + 1, a + patch.nu + 1, a + patch.nu);
            writeln!(out, "f {a} {b} {c}")?;
            writeln!(out, "f {a} {c} {d}")?;
        }
    }
    Ok(())
}

pub fn write_meta<W: Write>(patch: &SurfacePatch, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, &PatchMeta::of(patch))?;
    Ok(())
}

/// Reads an OBJ written by [`write_obj`] as a sampled patch; faces are ignored.
pub fn read_obj<R: Read, M: Read>(obj: R, meta: M) -> Result<SurfacePatch> {
    let meta: PatchMeta = serde_json::from_reader(meta)?;
    if meta.format != PATCH_FORMAT || meta.model != "poincare" {
        return Err(Error::Parse { line: 1, msg: format!("unsupported patch metadata {} / {}", meta.format, meta.model) });
    }
    let mut pts = Vec::with_capacity(meta.nu * meta.nv);
    for (k, line) in BufReader::new(obj).lines().enumerate() {
        let line = line?;
        let mut it = line.split_whitespace();
        if it.next() != Some("v") {
            continue;
        }
        let c: Vec<f64> = it
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse { line: k + 1, msg: format!("bad coordinate {t:?}") }))
            .collect::<Result<_>>()?;
        if c.len() != 3 {
            return Err(Error::Parse { line: k + 1, msg: "vertex needs 3 coordinates".into() });
        }
        pts.push(HPoint::from_poincare(Vector3::new(c[0], c[1], c[2]))?);
    }
    if pts.len() != meta.nu * meta.nv {
        return Err(Error::Parse { line: 0, msg: format!("expected {} vertices, found {}", meta.nu * meta.nv, pts.len()) });
    }
    Ok(SurfacePatch::sampled(pts, meta.u_range, meta.v_range, meta.nu, meta.nv)?.with_orientation(meta.orientation))
}

/// Per-node forms as CSV: `i,j,u,v,E,F,G,L,M,N,k1,k2`; excluded nodes are omitted.
pub fn write_forms_csv<W: Write>(patch: &SurfacePatch, forms: &FundamentalForms, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["i", "j", "u", "v", "E", "F", "G", "L", "M", "N", "k1", "k2"]).map_err(io)?;
    for j in 0..forms.nv {
        for i in 0..forms.nu {
            let Some(s) = forms.get(i, j) else { continue };
            let (u, v) = patch.param(i, j);
            let row = [
                u,
                v,
                s.first[(0, 0)],
                s.first[(0, 1)],
                s.first[(1, 1)],
                s.second[(0, 0)],
                s.second[(0, 1)],
                s.second[(1, 1)],
                s.kappa[0],
                s.kappa[1],
            ];
            let mut rec = vec![i.to_string(), j.to_string()];
            rec.extend(row.iter().map(|x| x.to_string()));
            w.write_record(&rec).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_round_trip_preserves_nodes() {
        let p = SurfacePatch::horosphere(0.5, 7).unwrap();
        let (mut obj, mut meta) = (Vec::new(), Vec::new());
        write_obj(&p, &mut obj).unwrap();
        write_meta(&p, &mut meta).unwrap();
        let q = read_obj(obj.as_slice(), meta.as_slice()).unwrap();
        assert_eq!((q.nu, q.nv, q.orientation), (p.nu, p.nv, p.orientation));
        for j in 0..p.nv {
            for i in 0..p.nu {
                assert!((q.sample_point(i, j) - p.sample_point(i, j)).norm() < 1e-12);
            }
        }
    }
}
