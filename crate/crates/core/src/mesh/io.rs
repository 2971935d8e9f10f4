//! JSON mesh documents: `{"vertices": [[x, y], ...], "cells": [[i0, i1, ...], ...]}`
//! with 0-based indices. Faces are always derived on import.

use serde::{Deserialize, Serialize};

use super::PolyMesh;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDocument {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
}

pub fn import_mesh<T: Real>(text: &str) -> Result<PolyMesh<T>> {
    let doc: MeshDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    for (k, cell) in doc.cells.iter().enumerate() {
        for (i, &v) in cell.iter().enumerate() {
            if v >= doc.vertices.len() {
                return Err(Error::Parse {
                    location: format!("cells[{k}][{i}]"),
                    message: format!(
                        "vertex index {v} out of range (have {})",
                        doc.vertices.len()
                    ),
                });
            }
        }
    }
    for (i, v) in doc.vertices.iter().enumerate() {
        if !v[0].is_finite() || !v[1].is_finite() {
            return Err(Error::Parse {
                location: format!("vertices[{i}]"),
                message: "non-finite coordinate".into(),
            });
        }
    }
    let vertices = doc
        .vertices
        .into_iter()
        .map(|[x, y]| [T::lit(x), T::lit(y)])
        .collect();
    PolyMesh::from_raw(vertices, doc.cells)
}

pub fn export_mesh<T: Real>(mesh: &PolyMesh<T>) -> String {
    let doc = MeshDocument {
        vertices: mesh
            .vertices()
            .iter()
            .map(|p| [p[0].to_f64_lossy(), p[1].to_f64_lossy()])
            .collect(),
        cells: mesh.cells().iter().map(|c| c.vertices.clone()).collect(),
    };
    serde_json::to_string(&doc).expect("mesh document serializes")
}
