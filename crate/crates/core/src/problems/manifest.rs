//! Loading a problem from a JSON manifest.
//!
//! A manifest selects a registered formula by name and may override the
//! dimensions (for `SPHERE-LIN`), the start point and the best-known value:
//!
//! ```json
//! { "formula": "SPHERE-LIN", "n": 6, "x0": [1, 0, 0, 0, 0, 0], "f_star": -2.449 }
//! ```

use std::path::Path;

use serde::Deserialize;

use super::{builtin, sphere_lin, ProblemInstance};
use crate::error::Error;

#[derive(Debug, Deserialize)]
struct Manifest {
    formula: String,
    n: Option<usize>,
    m: Option<usize>,
    x0: Option<Vec<f64>>,
    f_star: Option<f64>,
}

/// Parses a manifest from a JSON string.
pub fn from_manifest_str(json: &str) -> Result<ProblemInstance, Error> {
    let man: Manifest =
        serde_json::from_str(json).map_err(|e| Error::Manifest(e.to_string()))?;

    let mut p = if man.formula == "SPHERE-LIN" {
        sphere_lin(man.n.unwrap_or(4))
    } else {
        let p = builtin(&man.formula)?;
        if let Some(n) = man.n {
            if n != p.n() {
                return Err(Error::Manifest(format!(
                    "formula {} has n = {}, manifest says {}",
                    man.formula,
                    p.n(),
                    n
                )));
            }
        }
        p
    };
    if let Some(m) = man.m {
        if m != p.m() {
            return Err(Error::Manifest(format!(
                "formula {} has m = {}, manifest says {}",
                man.formula,
                p.m(),
                m
            )));
        }
    }
    if let Some(x0) = man.x0 {
        p = p
            .with_x0(x0)
            .map_err(|e| Error::Manifest(e.to_string()))?;
    }
    if man.f_star.is_some() {
        p = p.with_f_star(man.f_star);
    }
    Ok(p)
}

/// Reads and parses a manifest file.
pub fn from_manifest_path(path: &Path) -> Result<ProblemInstance, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_manifest_str(&text)
}
