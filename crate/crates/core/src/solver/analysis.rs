//! Displacement-controlled incremental Newton-Raphson.

use nalgebra::{DVector, Vector2, Vector3};

use crate::element::mixed::PointFields;
use crate::error::{Error, Result};
use crate::model::{number_dofs, AnalysisConfig, Dof, DofMap, DofStatus, ElementKind, Model};

use super::linear::LinearSolver;
use super::system::{GlobalSystem, Structure};

/// Floor on the reference residual of a step.
pub const RESIDUAL_FLOOR: f64 = 1e-14;

/// Substeps are never shorter than the load step divided by `2^MAX_CUTS`.
pub const MAX_CUTS: u32 = 10;

/// Shortest step length tried by the backtracking line search.
const MIN_STEP_LENGTH: f64 = 1.0 / 16.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    /// Load factor in (0, 1].
    pub lambda: f64,
    /// Number of linear solves performed.
    pub iterations: usize,
    /// Final free-DoF residual norm.
    pub residual: f64,
    /// Reaction sums over all constrained DoFs, per direction (ux, uy, rz).
    pub reactions: [f64; 3],
    /// Reaction sums over DoFs with a nonzero prescribed value, per direction.
    pub driven: [f64; 3],
    /// Converged total displacement, node-major (ux, uy, rz).
    pub displacement: Vec<f64>,
}

/// Converged steps in order. Failed steps are never recorded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolutionHistory {
    pub steps: Vec<StepRecord>,
}

impl SolutionHistory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn last(&self) -> Option<&StepRecord> {
        self.steps.last()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementFields {
    pub id: usize,
    pub kind: ElementKind,
    pub points: Vec<PointFields>,
    pub nodal_sigma: Vec<Vector3<f64>>,
    pub nodal_mu: Vec<Vector2<f64>>,
}

pub struct Analysis {
    model: Model,
    structure: Structure,
    solver: LinearSolver,
    /// Committed total displacement over all global DoFs.
    d: DVector<f64>,
    loads: DVector<f64>,
    history: SolutionHistory,
}

/// Runs every step of the model's analysis.
pub fn run_analysis(model: &Model) -> Result<SolutionHistory> {
    let mut a = Analysis::new(model)?;
    a.run()?;
    Ok(a.history)
}

impl Analysis {
    pub fn new(model: &Model) -> Result<Self> {
        let dofs = number_dofs(model)?;
        let mut loads = DVector::zeros(dofs.total());
        for l in &model.loads {
            let g = dofs.global(l.node, l.dof).expect("load node exists");
            loads[g] += l.value;
        }
        let n = dofs.total();
        let structure = Structure::new(model, dofs)?;
        Ok(Analysis {
            model: model.clone(),
            structure,
            solver: LinearSolver::new(),
            d: DVector::zeros(n),
            loads,
            history: SolutionHistory::default(),
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// Solver controls for the remaining steps. Changing `steps` mid-run rescales the load
    /// factors of the steps not yet taken.
    pub fn config_mut(&mut self) -> &mut AnalysisConfig {
        &mut self.model.analysis
    }

    pub fn dofs(&self) -> &DofMap {
        &self.structure.dofs
    }

    pub fn structure(&self) -> &Structure {
        &self.structure
    }

    pub fn history(&self) -> &SolutionHistory {
        &self.history
    }

    pub fn into_history(self) -> SolutionHistory {
        self.history
    }

    pub fn displacement(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn node_displacement(&self, id: usize) -> Option<[f64; 3]> {
        let g = self.dofs().global(id, Dof::Ux)?;
        Some([self.d[g], self.d[g + 1], self.d[g + 2]])
    }

    pub fn steps_done(&self) -> usize {
        self.history.len()
    }

    pub fn material_checksum(&self) -> f64 {
        self.structure.checksum()
    }

    /// Updates trial states at `d` and assembles against the full external load.
    pub fn assemble_at(&mut self, d: &DVector<f64>) -> Result<GlobalSystem> {
        self.structure.assemble(d, &self.loads, None)
    }

    pub fn run(&mut self) -> Result<()> {
        self.run_with(|_, _| Ok(()))
    }

    /// Runs the remaining steps, calling `observer` after each converged one.
    pub fn run_with(&mut self, mut observer: impl FnMut(&Analysis, &StepRecord) -> Result<()>) -> Result<()> {
        while self.steps_done() < self.model.analysis.steps {
            let rec = self.step()?;
            observer(self, &rec)?;
        }
        Ok(())
    }

    /// Solves the next load step. A failed Newton solve is retried on halved load
    /// increments, committing the intermediate states; only the end of the step is
    /// recorded. If the step cannot be completed the committed state before the step is
    /// restored.
    pub fn step(&mut self) -> Result<StepRecord> {
        let cfg = self.model.analysis.clone();
        let step = self.steps_done() + 1;
        let lambda = step as f64 / cfg.steps as f64;
        let start = (lambda - 1.0 / cfg.steps as f64).max(0.0);
        let unreachable = cfg.residual_tol == 0.0 && cfg.displacement_tol == 0.0;

        let saved_d = self.d.clone();
        let saved = self.structure.material_state();
        let mut at = start;
        let full = lambda - start;
        let mut width = full;
        let mut solves = 0;
        loop {
            let target = if lambda - at <= width * (1.0 + 1e-12) { lambda } else { at + width };
            match self.newton(step, target) {
                Ok((sys, n, norm)) => {
                    solves += n;
                    at = target;
                    if target == lambda {
                        let f_ext = &self.loads * lambda;
                        let rec = self.record(step, lambda, solves, norm, &sys, &f_ext);
                        self.history.steps.push(rec.clone());
                        return Ok(rec);
                    }
                    width = (width * 2.0).min(full);
                }
                Err(e) => {
                    let recoverable = matches!(
                        e,
                        Error::StepFailure { .. } | Error::MaterialFailure { .. } | Error::SingularSystem { .. }
                    );
                    if unreachable || !recoverable || width <= full / f64::from(1 << MAX_CUTS) {
                        self.structure.restore_material_state(&saved);
                        self.d = saved_d;
                        return Err(match e {
                            Error::StepFailure { iterations, residual, note, .. } => Error::StepFailure {
                                step,
                                iterations,
                                residual,
                                note,
                            },
                            other => other,
                        });
                    }
                    log::debug!("step {step}: cutting increment at load factor {at:.6}");
                    width /= 2.0;
                }
            }
        }
    }

    /// Newton iterations from the committed state to load factor `lambda`. On success the
    /// state is committed; on failure trial states are rolled back.
    fn newton(&mut self, step: usize, lambda: f64) -> Result<(GlobalSystem, usize, f64)> {
        let cfg = &self.model.analysis;
        let (rtol, dtol, max_iters) = (cfg.residual_tol, cfg.displacement_tol, cfg.max_newton_iters);
        let f_ext = &self.loads * lambda;

        // linearized predictor about the committed state carries the prescribed increment
        let mut d = self.d.clone();
        let mut increment = DVector::zeros(d.len());
        for (g, s) in self.structure.dofs.statuses().iter().enumerate() {
            if let DofStatus::Constrained(v) = s {
                increment[g] = lambda * v - d[g];
            }
        }
        let predictor = increment.amax() > 0.0;

        let mut r_ref = RESIDUAL_FLOOR;
        let mut small_step = false;
        let mut norm;
        let mut solves = 0;
        // base point, full correction, residual at the base and current step length
        let mut search: Option<(DVector<f64>, DVector<f64>, f64, f64)> = None;
        let mut first = true;
        loop {
            let sys = if first && predictor {
                self.structure.assemble(&d, &f_ext, Some(&increment))
            } else {
                self.structure.assemble(&d, &f_ext, None)
            };
            let sys = match sys {
                Ok(s) => s,
                Err(e) => {
                    self.structure.rollback();
                    return Err(e);
                }
            };
            norm = sys.residual.norm();
            if first {
                r_ref = norm.max(RESIDUAL_FLOOR);
            }
            log::debug!("step {step} solve {solves}: residual {norm:.3e}");
            let settled = !(first && predictor);
            if settled && (norm <= rtol * r_ref || small_step) {
                self.structure.commit();
                self.d = d;
                return Ok((sys, solves, norm));
            }
            // backtrack while the full correction increases the residual
            if let Some((base, delta, base_norm, s)) = &mut search {
                if norm > *base_norm && *s > MIN_STEP_LENGTH {
                    *s *= 0.5;
                    d = &*base + &*delta * *s;
                    small_step = delta.norm() * *s <= dtol * d.norm();
                    continue;
                }
            }
            if solves == max_iters {
                break;
            }
            let delta = match self.solver.solve(&sys.k, &sys.residual, sys.symmetric) {
                Ok(x) => x,
                Err(e) => {
                    self.structure.rollback();
                    return Err(e);
                }
            };
            solves += 1;
            let mut full = DVector::zeros(d.len());
            for (g, s) in self.structure.dofs.statuses().iter().enumerate() {
                match s {
                    DofStatus::Free(eq) => full[g] = delta[*eq],
                    DofStatus::Constrained(_) if first => full[g] = increment[g],
                    DofStatus::Constrained(_) => {}
                }
            }
            let base = d.clone();
            d += &full;
            small_step = delta.norm() <= dtol * d.norm();
            search = (!first || !predictor).then(|| (base, full, norm, 1.0));
            first = false;
        }
        self.structure.rollback();
        let unreachable = rtol == 0.0 && dtol == 0.0;
        Err(Error::StepFailure {
            step,
            iterations: max_iters,
            residual: norm,
            note: if unreachable { " (unreachable tolerance)" } else { "" },
        })
    }

    fn record(
        &self,
        step: usize,
        lambda: f64,
        iterations: usize,
        residual: f64,
        sys: &GlobalSystem,
        f_ext: &DVector<f64>,
    ) -> StepRecord {
        let mut reactions = [0.0; 3];
        let mut driven = [0.0; 3];
        for (g, s) in self.structure.dofs.statuses().iter().enumerate() {
            if let DofStatus::Constrained(v) = s {
                let r = sys.internal[g] - f_ext[g];
                reactions[g % 3] += r;
                if *v != 0.0 {
                    driven[g % 3] += r;
                }
            }
        }
        StepRecord {
            step,
            lambda,
            iterations,
            residual,
            reactions,
            driven,
            displacement: self.d.iter().copied().collect(),
        }
    }

    /// Recovered stress and couple-stress fields of every membrane element.
    pub fn element_fields(&self) -> Vec<ElementFields> {
        self.structure
            .elements
            .iter()
            .filter_map(|e| {
                e.recover().map(|r| ElementFields {
                    id: e.id,
                    kind: e.kind,
                    points: r.points,
                    nodal_sigma: r.nodal_sigma,
                    nodal_mu: r.nodal_mu,
                })
            })
            .collect()
    }
}
