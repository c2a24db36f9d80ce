//! Result persistence: iteration-report CSV, legacy ASCII VTK snapshots, and
//! a run manifest. All numbers are printed with 17 significant digits in
//! scientific notation so repeated identical runs produce byte-identical
//! files.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::fixed_stress::{IterationReport, State};
use crate::mesh::Mesh;
use crate::Result;

/// Fixed-width scientific formatting: 17 significant digits.
pub fn sci17(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// CSV of per-iteration records over all time steps. Columns:
/// `k,n,norm_dsigma,norm_adp,norm_dz,norm_eps_du,norm_div_du,ratio,bound,active_set_size`.
pub fn reports_csv(reports: &[IterationReport]) -> String {
    let mut out = String::from(
        "k,n,norm_dsigma,norm_adp,norm_dz,norm_eps_du,norm_div_du,ratio,bound,active_set_size\n",
    );
    for (step, report) in reports.iter().enumerate() {
        for r in &report.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                step + 1,
                r.n,
                sci17(r.norm_dsigma),
                sci17(r.norm_adp),
                sci17(r.norm_dz),
                sci17(r.norm_eps_du),
                sci17(r.norm_div_du),
                r.ratio.map_or("nan".to_string(), sci17),
                r.bound.map_or("nan".to_string(), sci17),
                r.active_set_size,
            );
        }
    }
    out
}

/// Legacy ASCII VTK unstructured grid with point displacements and cell
/// pressure / volumetric mean total stress.
pub fn vtk_snapshot(mesh: &Mesh, state: &State, title: &str) -> String {
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    let _ = writeln!(out, "{title}");
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", mesh.n_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(out, "{} {} 0", sci17(v[0]), sci17(v[1]));
    }
    let nt = mesh.n_triangles();
    let _ = writeln!(out, "CELLS {} {}", nt, 4 * nt);
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {nt}");
    for _ in 0..nt {
        out.push_str("5\n");
    }
    let _ = writeln!(out, "POINT_DATA {}", mesh.n_vertices());
    out.push_str("VECTORS displacement double\n");
    for v in 0..mesh.n_vertices() {
        let _ = writeln!(
            out,
            "{} {} 0",
            sci17(state.u[2 * v]),
            sci17(state.u[2 * v + 1])
        );
    }
    let _ = writeln!(out, "CELL_DATA {nt}");
    out.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for t in 0..nt {
        let _ = writeln!(out, "{}", sci17(state.p[t]));
    }
    out.push_str("SCALARS sigma_v double 1\nLOOKUP_TABLE default\n");
    for t in 0..nt {
        let _ = writeln!(out, "{}", sci17(state.sigma_v[t]));
    }
    out
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| Error::Io {
            path: parent.display().to_string(),
            source: e,
        })?;
    }
    std::fs::write(path, content).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Hex SHA-256 of a text blob.
pub fn sha256_hex(text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Run manifest: configuration hash plus the inventory of emitted files.
pub fn manifest(config_text: &str, files: &[String]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "config_sha256 {}", sha256_hex(config_text));
    let _ = writeln!(out, "files {}", files.len());
    for f in files {
        let _ = writeln!(out, "{f}");
    }
    out
}

/// Writes the full output set of a simulation run into `dir`:
/// `reports.csv`, `state_<k>.vtk` snapshots every `vtk_every` steps (0
/// disables them), and `manifest.txt`. Returns the emitted file names.
pub fn write_outputs(
    dir: &Path,
    mesh: &Mesh,
    states: &[State],
    reports: &[IterationReport],
    config_text: &str,
    vtk_every: usize,
) -> Result<Vec<String>> {
    let mut files = Vec::new();
    let csv = reports_csv(reports);
    write_file(&dir.join("reports.csv"), &csv)?;
    files.push("reports.csv".to_string());
    if vtk_every > 0 {
        for (k, state) in states.iter().enumerate() {
            if k % vtk_every == 0 || k + 1 == states.len() {
                let name = format!("state_{k:04}.vtk");
                let vtk = vtk_snapshot(mesh, state, &format!("time step {k}"));
                write_file(&dir.join(&name), &vtk)?;
                files.push(name);
            }
        }
    }
    write_file(&dir.join("manifest.txt"), &manifest(config_text, &files))?;
    files.push("manifest.txt".to_string());
    Ok(files)
}
