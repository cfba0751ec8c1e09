use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::forms::FunctionSpaces;
use crate::solver::{Diagnostics, State};

pub const CSV_HEADER: &str =
    "t,kinetic,thermal,rot_seminorm2,grad_w_norm2,z_L4,w_L4,Re,Ra,Re_plus_Ra,div_residual,picard_iters";

/// Round-trip formatting with 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_row(d: &Diagnostics<f64>) -> String {
    let cols = [
        d.t,
        d.kinetic,
        d.thermal,
        d.rot_seminorm2,
        d.grad_w_norm2,
        d.z_l4,
        d.w_l4,
        d.re,
        d.ra,
        d.re_plus_ra,
        d.div_residual,
    ];
    let mut s = cols.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",");
    write!(s, ",{}", d.picard_iters).unwrap();
    s
}

/// Legacy ASCII VTK file with quadratic triangles; linear fields are
/// interpolated at the edge midpoints.
pub fn write_vtk(path: &Path, spaces: &FunctionSpaces<f64>, state: &State<f64>) -> Result<()> {
    let nv = spaces.mesh.vertices.len();
    let nodes = &spaces.nodes;
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    writeln!(out, "velocity, temperature and head at t = {}", num(state.t)).unwrap();
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(out, "POINTS {} double", nodes.len()).unwrap();
    for p in nodes {
        writeln!(out, "{} {} 0", num(p[0]), num(p[1])).unwrap();
    }
    let ne = spaces.element_nodes.len();
    writeln!(out, "CELLS {} {}", ne, 7 * ne).unwrap();
    for n in &spaces.element_nodes {
        writeln!(out, "6 {} {} {} {} {} {}", n[0], n[1], n[2], n[3], n[4], n[5]).unwrap();
    }
    writeln!(out, "CELL_TYPES {ne}").unwrap();
    for _ in 0..ne {
        out.push_str("22\n");
    }
    let lifted = |w: &[f64]| -> Vec<f64> {
        let mut v = w.to_vec();
        v.extend(spaces.edges.edges.iter().map(|[a, b]| 0.5 * (w[*a] + w[*b])));
        v
    };
    writeln!(out, "POINT_DATA {}", nodes.len()).unwrap();
    out.push_str("VECTORS velocity double\n");
    for k in 0..nodes.len() {
        writeln!(out, "{} {} 0", num(state.z.values[2 * k]), num(state.z.values[2 * k + 1])).unwrap();
    }
    for (name, field) in [("temperature", &state.w), ("head", &state.p)] {
        writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        let values = lifted(&field.values);
        debug_assert_eq!(values.len(), nv + spaces.edges.edges.len());
        for v in values {
            writeln!(out, "{}", num(v)).unwrap();
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Plain CSV table with an optional leading comment line.
pub fn write_table(path: &Path, comment: Option<&str>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    if let Some(c) = comment {
        writeln!(f, "# {c}")?;
    }
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        writeln!(f, "{}", r.join(","))?;
    }
    f.flush()?;
    Ok(())
}
