//! Element containers and global assembly.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::element::mixed::{ElementArrays, FieldRecovery, PointTangent};
use crate::element::beam_stiffness;
use crate::error::{Error, Result};
use crate::material::{ElasticModuli, MaterialPoint, PointLaw};
use crate::model::{Condensation, DofMap, DofStatus, ElementDef, ElementKind, Formulation, Model};

use super::linear::SparseMatrix;

/// Element tangents whose asymmetry exceeds this fraction switch the solve to LU.
const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
enum Body {
    Mixed {
        arrays: Box<ElementArrays>,
        law: PointLaw,
        eta: f64,
        thickness: f64,
        points: Vec<MaterialPoint>,
        condensation: Condensation,
    },
    Beam {
        k: DMatrix<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct ElementEntry {
    pub id: usize,
    pub kind: ElementKind,
    /// Global DoF indices in element order.
    pub dofs: Vec<usize>,
    body: Body,
}

impl ElementEntry {
    fn build(
        model: &Model,
        def: &ElementDef,
        node_index: &HashMap<usize, usize>,
        dofs: &DofMap,
        form: Formulation,
        condensation: Condensation,
    ) -> Result<Self> {
        let mat = model
            .material_by_id(def.material)
            .ok_or_else(|| Error::model(format!("element {}: dangling material reference", def.id)))?;
        let coords = model.element_coords(def, node_index);
        let body = if def.kind.is_membrane() {
            let l = def.l.unwrap_or(0.0);
            let moduli = ElasticModuli::new(mat.e, mat.nu, mat.assumption, l)?;
            let law = PointLaw::from_def(mat)?;
            let arrays = ElementArrays::build(def.kind, &coords, form)?;
            let points = (0..arrays.points.len())
                .map(|_| MaterialPoint::new(&law, moduli.eta))
                .collect::<Result<_>>()?;
            Body::Mixed {
                arrays: Box::new(arrays),
                law,
                eta: moduli.eta,
                thickness: def.thickness(),
                points,
                condensation,
            }
        } else {
            let k = beam_stiffness(
                mat.e,
                def.area.unwrap_or(0.0),
                def.inertia.unwrap_or(0.0),
                [coords[0], coords[1]],
            )?;
            Body::Beam {
                k: DMatrix::from_column_slice(6, 6, k.as_slice()),
            }
        };
        Ok(ElementEntry {
            id: def.id,
            kind: def.kind,
            dofs: dofs.element_dofs(def),
            body,
        })
    }

    /// Updates trial states for the global displacement `d`; returns resistance and tangent.
    pub fn update(&mut self, d: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        let de = DVector::from_iterator(self.dofs.len(), self.dofs.iter().map(|&g| d[g]));
        match &mut self.body {
            Body::Mixed {
                arrays,
                law,
                eta,
                thickness,
                points,
                condensation,
            } => {
                let (r, k) = arrays.update_and_resist(&de, points, law, *eta, *thickness)?;
                let k = match condensation {
                    Condensation::OptionTwo => k,
                    Condensation::OptionOne => {
                        let tangents: Vec<PointTangent> = points.iter().map(PointTangent::from).collect();
                        arrays.stiffness_option1(&tangents, *thickness)?
                    }
                };
                Ok((r, k))
            }
            Body::Beam { k } => Ok((&*k * de, k.clone())),
        }
    }

    pub fn commit(&mut self) {
        if let Body::Mixed { points, .. } = &mut self.body {
            points.iter_mut().for_each(MaterialPoint::commit);
        }
    }

    pub fn rollback(&mut self) {
        if let Body::Mixed { points, .. } = &mut self.body {
            points.iter_mut().for_each(MaterialPoint::rollback);
        }
    }

    pub fn material_points(&self) -> &[MaterialPoint] {
        match &self.body {
            Body::Mixed { points, .. } => points,
            Body::Beam { .. } => &[],
        }
    }

    pub fn arrays(&self) -> Option<&ElementArrays> {
        match &self.body {
            Body::Mixed { arrays, .. } => Some(arrays),
            Body::Beam { .. } => None,
        }
    }

    /// Independent stress and couple-stress fields; `None` for beams.
    pub fn recover(&self) -> Option<FieldRecovery> {
        match &self.body {
            Body::Mixed { arrays, points, .. } => Some(arrays.recover_fields(points)),
            Body::Beam { .. } => None,
        }
    }
}

/// Assembled free-DoF system at one trial displacement.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub k: SparseMatrix,
    /// External minus internal force on free equations.
    pub residual: DVector<f64>,
    /// Internal force on every global DoF.
    pub internal: DVector<f64>,
    pub symmetric: bool,
}

#[derive(Debug)]
pub struct Structure {
    pub dofs: DofMap,
    pub elements: Vec<ElementEntry>,
    pool: Option<rayon::ThreadPool>,
}

/// Thread pool honouring `CSFEM_THREADS`, if set.
fn thread_pool() -> Option<rayon::ThreadPool> {
    let n: usize = std::env::var("CSFEM_THREADS").ok()?.trim().parse().ok()?;
    rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build().ok()
}

impl Structure {
    pub fn new(model: &Model, dofs: DofMap) -> Result<Self> {
        let index = model.node_index();
        let a = &model.analysis;
        let elements = model
            .elements
            .iter()
            .map(|def| {
                ElementEntry::build(model, def, &index, &dofs, a.formulation, a.condensation)
                    .map_err(|e| e.at_element(def.id))
            })
            .collect::<Result<_>>()?;
        Ok(Structure {
            dofs,
            elements,
            pool: thread_pool(),
        })
    }

    fn update_all(&mut self, d: &DVector<f64>) -> Vec<Result<(DVector<f64>, DMatrix<f64>)>> {
        let run = |elements: &mut Vec<ElementEntry>| {
            elements
                .par_iter_mut()
                .map(|e| e.update(d).map_err(|err| err.at_element(e.id)))
                .collect()
        };
        match &self.pool {
            Some(pool) => pool.install(|| run(&mut self.elements)),
            None => run(&mut self.elements),
        }
    }

    /// Updates all elements at `d` and assembles the free-DoF system. Element
    /// contributions are merged sequentially in element order. When `prescribed` holds an
    /// increment of the constrained values, its linearized effect `K_fc * dc` is moved to
    /// the residual.
    pub fn assemble(
        &mut self,
        d: &DVector<f64>,
        f_ext: &DVector<f64>,
        prescribed: Option<&DVector<f64>>,
    ) -> Result<GlobalSystem> {
        let results = self.update_all(d);
        let n_free = self.dofs.n_free();
        let mut internal = DVector::zeros(self.dofs.total());
        let mut triplets = Vec::new();
        let mut coupling = DVector::<f64>::zeros(n_free);
        let mut symmetric = true;
        for (entry, res) in self.elements.iter().zip(results) {
            let (r, k) = res?;
            let kmax = k.amax();
            if kmax > 0.0 && (&k - k.transpose()).amax() > SYMMETRY_TOL * kmax {
                symmetric = false;
            }
            let eqs: Vec<Option<usize>> = entry.dofs.iter().map(|&g| self.dofs.equation(g)).collect();
            for (a, &g) in entry.dofs.iter().enumerate() {
                internal[g] += r[a];
                let Some(i) = eqs[a] else { continue };
                for (b, eq) in eqs.iter().enumerate() {
                    match (eq, prescribed) {
                        (Some(j), _) => triplets.push((i, *j, k[(a, b)])),
                        (None, Some(dc)) => coupling[i] += k[(a, b)] * dc[entry.dofs[b]],
                        (None, None) => {}
                    }
                }
            }
        }
        let mut residual = DVector::zeros(n_free);
        for (g, s) in self.dofs.statuses().iter().enumerate() {
            if let DofStatus::Free(eq) = s {
                residual[*eq] = f_ext[g] - internal[g] - coupling[*eq];
            }
        }
        Ok(GlobalSystem {
            k: SparseMatrix::from_triplets(n_free, &triplets),
            residual,
            internal,
            symmetric,
        })
    }

    pub fn commit(&mut self) {
        self.elements.iter_mut().for_each(ElementEntry::commit);
    }

    pub fn rollback(&mut self) {
        self.elements.iter_mut().for_each(ElementEntry::rollback);
    }

    /// Copy of every material point, for restoring a state across several commits.
    pub fn material_state(&self) -> Vec<Vec<MaterialPoint>> {
        self.elements.iter().map(|e| e.material_points().to_vec()).collect()
    }

    pub fn restore_material_state(&mut self, state: &[Vec<MaterialPoint>]) {
        for (e, saved) in self.elements.iter_mut().zip(state) {
            if let Body::Mixed { points, .. } = &mut e.body {
                points.clone_from(saved);
            }
        }
    }

    /// Checksum of every committed material field.
    pub fn checksum(&self) -> f64 {
        self.elements
            .iter()
            .flat_map(|e| e.material_points())
            .enumerate()
            .map(|(i, p)| (1.0 + 1e-3 * i as f64) * p.committed_checksum())
            .sum()
    }
}
