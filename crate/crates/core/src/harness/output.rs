//! File writers: field snapshots (legacy VTK, CSV), diagnostics series and
//! the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::grid::State;

use super::HarnessError;

/// Cell-centered velocity by averaging the two faces of each cell.
fn cell_velocity(state: &State) -> Vec<(f64, f64)> {
    let g = *state.grid();
    let mut v = Vec::with_capacity(g.n_cells());
    for j in 0..g.ny {
        for i in 0..g.nx {
            let ux = 0.5 * (state.u.ux(i, j) + state.u.ux(i + 1, j));
            let uy = 0.5 * (state.u.uy(i, j) + state.u.uy(i, j + 1));
            v.push((ux, uy));
        }
    }
    v
}

/// Legacy ASCII VTK, STRUCTURED_POINTS with cell data `phi`, `p`, `q` and
/// the cell-averaged velocity.
pub fn vtk_string(state: &State) -> String {
    let g = *state.grid();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "acns n={} t={}", state.n, state.t);
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET STRUCTURED_POINTS");
    let _ = writeln!(s, "DIMENSIONS {} {} 1", g.nx + 1, g.ny + 1);
    let _ = writeln!(s, "ORIGIN 0 0 0");
    let _ = writeln!(s, "SPACING {} {} 1", g.hx, g.hy);
    let _ = writeln!(s, "CELL_DATA {}", g.n_cells());
    for (name, f) in [("phi", &state.phi), ("p", &state.p), ("q", &state.q)] {
        let _ = writeln!(s, "SCALARS {name} double 1");
        let _ = writeln!(s, "LOOKUP_TABLE default");
        for v in f.values() {
            let _ = writeln!(s, "{v:.12e}");
        }
    }
    let _ = writeln!(s, "VECTORS u double");
    for (ux, uy) in cell_velocity(state) {
        let _ = writeln!(s, "{ux:.12e} {uy:.12e} 0");
    }
    s
}

/// `x,y,phi,u,v,p` at cell centers.
pub fn field_csv_string(state: &State) -> String {
    let g = *state.grid();
    let vel = cell_velocity(state);
    let mut s = String::from("x,y,phi,u,v,p\n");
    for j in 0..g.ny {
        for i in 0..g.nx {
            let (x, y) = g.cell_center(i, j);
            let k = g.cell(i, j);
            let _ = writeln!(
                s,
                "{x:.12e},{y:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                state.phi.values()[k],
                vel[k].0,
                vel[k].1,
                state.p.values()[k]
            );
        }
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory that records what it writes for the manifest.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: BTreeMap<String, String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, HarnessError> {
        fs::create_dir_all(root).map_err(|e| HarnessError::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: BTreeMap::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, HarnessError> {
        let p = self.root.join(name);
        if let Some(parent) = p.parent() {
            fs::create_dir_all(parent).map_err(|e| HarnessError::io(parent, e))?;
        }
        fs::write(&p, contents).map_err(|e| HarnessError::io(&p, e))?;
        self.files.insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(p)
    }

    pub fn checksums(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    /// Writes `manifest.json` covering every file written so far.
    pub fn write_manifest(&self, config_flat: &str, notes: &[&str]) -> Result<PathBuf, HarnessError> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            config_sha256: String,
            code_version: &'a str,
            config: &'a str,
            notes: &'a [&'a str],
            files: &'a BTreeMap<String, String>,
        }
        let m = Manifest {
            config_sha256: sha256_hex(config_flat.as_bytes()),
            code_version: env!("CARGO_PKG_VERSION"),
            config: config_flat,
            notes,
            files: &self.files,
        };
        let p = self.root.join("manifest.json");
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        fs::write(&p, text).map_err(|e| HarnessError::io(&p, e))?;
        Ok(p)
    }
}
