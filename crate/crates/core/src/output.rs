//! Result files: CSV tables and legacy ASCII VTK.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::bench::{BenchResult, Profile};
use crate::error::Result;
use crate::model::{ElementKind, Model};
use crate::solver::{Analysis, ElementFields, SolutionHistory};

/// `id,x,y,ux,uy,rz` for every node at the committed state.
pub fn nodal_csv(analysis: &Analysis) -> String {
    let mut out = String::from("id,x,y,ux,uy,rz\n");
    for n in &analysis.model().nodes {
        let [ux, uy, rz] = analysis.node_displacement(n.id).expect("node present");
        writeln!(out, "{},{},{},{:.12e},{:.12e},{:.12e}", n.id, n.x, n.y, ux, uy, rz).unwrap();
    }
    out
}

/// `element,point,sx,sy,txy,mux,muy,peeq` per integration point.
pub fn element_csv(fields: &[ElementFields]) -> String {
    let mut out = String::from("element,point,sx,sy,txy,mux,muy,peeq\n");
    for f in fields {
        for (i, p) in f.points.iter().enumerate() {
            writeln!(
                out,
                "{},{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                f.id,
                i + 1,
                p.sigma[0],
                p.sigma[1],
                p.sigma[2],
                p.mu[0],
                p.mu[1],
                p.peeq
            )
            .unwrap();
        }
    }
    out
}

pub fn history_csv(history: &SolutionHistory) -> String {
    let mut out = String::from("step,lambda,iterations,residual,rx,ry,rz,driven_x,driven_y,driven_z\n");
    for s in &history.steps {
        writeln!(
            out,
            "{},{},{},{:.6e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            s.step,
            s.lambda,
            s.iterations,
            s.residual,
            s.reactions[0],
            s.reactions[1],
            s.reactions[2],
            s.driven[0],
            s.driven[1],
            s.driven[2]
        )
        .unwrap();
    }
    out
}

pub fn profile_csv(profile: &Profile) -> String {
    let mut out = format!("{},{}\n", profile.columns[0], profile.columns[1]);
    for [x, y] in &profile.points {
        writeln!(out, "{x:.12e},{y:.12e}").unwrap();
    }
    out
}

/// VTK cell type and the node positions written for it. The mixed quads with fewer than
/// eight nodes are written as their corner quadrilateral.
fn vtk_cell(kind: ElementKind, n_nodes: usize) -> (u8, usize) {
    match kind {
        ElementKind::Csmt3 => (5, 3),
        ElementKind::Csmt6 => (22, 6),
        ElementKind::Csmq4 | ElementKind::Csmq5 | ElementKind::Csmq6 | ElementKind::Csmq7 => (9, 4),
        ElementKind::Csmq8 => (23, 8),
        ElementKind::Beam2d => (3, n_nodes.min(2)),
    }
}

/// Legacy ASCII unstructured grid with point data `ux`, `uy`, `rz` and the mean
/// integration-point PEEQ as cell data.
pub fn vtk(model: &Model, displacement: &[f64], fields: &[ElementFields], title: &str) -> String {
    let index = model.node_index();
    let mut out = String::new();
    writeln!(out, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID").unwrap();
    writeln!(out, "POINTS {} double", model.nodes.len()).unwrap();
    for n in &model.nodes {
        writeln!(out, "{} {} 0", n.x, n.y).unwrap();
    }

    let cells: Vec<(u8, &[usize])> = model
        .elements
        .iter()
        .map(|e| {
            let (ty, count) = vtk_cell(e.kind, e.nodes.len());
            (ty, &e.nodes[..count])
        })
        .collect();
    let size: usize = cells.iter().map(|(_, n)| n.len() + 1).sum();
    writeln!(out, "CELLS {} {size}", cells.len()).unwrap();
    for (_, nodes) in &cells {
        let ids: Vec<String> = nodes.iter().map(|id| index[id].to_string()).collect();
        writeln!(out, "{} {}", nodes.len(), ids.join(" ")).unwrap();
    }
    writeln!(out, "CELL_TYPES {}", cells.len()).unwrap();
    for (ty, _) in &cells {
        writeln!(out, "{ty}").unwrap();
    }

    writeln!(out, "POINT_DATA {}", model.nodes.len()).unwrap();
    for (c, name) in ["ux", "uy", "rz"].iter().enumerate() {
        writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for i in 0..model.nodes.len() {
            writeln!(out, "{:.12e}", displacement[3 * i + c]).unwrap();
        }
    }

    writeln!(out, "CELL_DATA {}\nSCALARS PEEQ double 1\nLOOKUP_TABLE default", cells.len()).unwrap();
    for e in &model.elements {
        let peeq = fields
            .iter()
            .find(|f| f.id == e.id)
            .filter(|f| !f.points.is_empty())
            .map_or(0.0, |f| f.points.iter().map(|p| p.peeq).sum::<f64>() / f.points.len() as f64);
        writeln!(out, "{peeq:.12e}").unwrap();
    }
    out
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents)?;
    Ok(path)
}

/// Writes the nodal, element and history tables of a finished run into `dir`.
pub fn write_run(dir: &Path, analysis: &Analysis) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    Ok(vec![
        write(dir, "nodes.csv", &nodal_csv(analysis))?,
        write(dir, "elements.csv", &element_csv(&analysis.element_fields()))?,
        write(dir, "history.csv", &history_csv(analysis.history()))?,
    ])
}

/// Writes `step_NNNN.vtk` for the latest converged step.
pub fn write_step_vtk(dir: &Path, analysis: &Analysis) -> Result<Option<PathBuf>> {
    let Some(rec) = analysis.history().last() else {
        return Ok(None);
    };
    fs::create_dir_all(dir)?;
    let title = format!("step {} lambda {}", rec.step, rec.lambda);
    let text = vtk(analysis.model(), &rec.displacement, &analysis.element_fields(), &title);
    write(dir, &format!("step_{:04}.vtk", rec.step), &text).map(Some)
}

/// Writes the metric table, profiles and PEEQ snapshots of a benchmark into `dir`.
pub fn write_bench(dir: &Path, result: &BenchResult) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let label = result.spec.label();
    let mut files = vec![write(dir, &format!("{label}_metrics.csv"), &result.to_csv())?];
    for p in &result.profiles {
        files.push(write(dir, &format!("{label}_{}.csv", p.name), &profile_csv(p))?);
    }
    for s in &result.snapshots {
        files.push(write(dir, &format!("{label}_peeq_{}.csv", s.label), &element_csv(&s.fields))?);
    }
    Ok(files)
}
