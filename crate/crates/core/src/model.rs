//! Analysis data model, the JSON model-file format and degree-of-freedom numbering.
//!
//! A model file is a single JSON document:
//!
//! ```json
//! {
//!   "nodes": [{"id": 1, "x": 0.0, "y": 0.0}],
//!   "materials": [{"id": 1, "kind": "elastic", "E": 10.0, "nu": 0.25, "assumption": "plane_stress"}],
//!   "elements": [{"id": 1, "kind": "CSMQ4", "nodes": [1, 2, 5, 4], "material": 1, "l": 1.0, "t": 1.0}],
//!   "constraints": [{"node": 1, "dof": "ux", "value": 0.0}],
//!   "loads": [{"node": 3, "dof": "ux", "value": 1.0}],
//!   "analysis": {"steps": 1}
//! }
//! ```
//!
//! Units are not fixed; any consistent set works. Unknown keys are rejected.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::{self, Field};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementKind {
    #[serde(rename = "CSMT3")]
    Csmt3,
    #[serde(rename = "CSMT6")]
    Csmt6,
    #[serde(rename = "CSMQ4")]
    Csmq4,
    #[serde(rename = "CSMQ5")]
    Csmq5,
    #[serde(rename = "CSMQ6")]
    Csmq6,
    #[serde(rename = "CSMQ7")]
    Csmq7,
    #[serde(rename = "CSMQ8")]
    Csmq8,
    #[serde(rename = "BEAM2D")]
    Beam2d,
}

impl ElementKind {
    pub const MEMBRANES: [ElementKind; 7] = [
        ElementKind::Csmt3,
        ElementKind::Csmt6,
        ElementKind::Csmq4,
        ElementKind::Csmq5,
        ElementKind::Csmq6,
        ElementKind::Csmq7,
        ElementKind::Csmq8,
    ];

    pub fn node_count(self) -> usize {
        match self {
            ElementKind::Csmt3 => 3,
            ElementKind::Csmt6 => 6,
            ElementKind::Csmq4 => 4,
            ElementKind::Csmq5 => 5,
            ElementKind::Csmq6 => 6,
            ElementKind::Csmq7 => 7,
            ElementKind::Csmq8 => 8,
            ElementKind::Beam2d => 2,
        }
    }

    pub fn is_membrane(self) -> bool {
        self != ElementKind::Beam2d
    }

    pub fn is_triangle(self) -> bool {
        matches!(self, ElementKind::Csmt3 | ElementKind::Csmt6)
    }

    pub fn name(self) -> &'static str {
        match self {
            ElementKind::Csmt3 => "CSMT3",
            ElementKind::Csmt6 => "CSMT6",
            ElementKind::Csmq4 => "CSMQ4",
            ElementKind::Csmq5 => "CSMQ5",
            ElementKind::Csmq6 => "CSMQ6",
            ElementKind::Csmq7 => "CSMQ7",
            ElementKind::Csmq8 => "CSMQ8",
            ElementKind::Beam2d => "BEAM2D",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ElementKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.to_ascii_uppercase();
        [ElementKind::Beam2d]
            .into_iter()
            .chain(ElementKind::MEMBRANES)
            .find(|k| k.name() == upper)
            .ok_or_else(|| Error::model(format!("unknown element kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialKind {
    Elastic,
    J2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    PlaneStress,
    PlaneStrain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dof {
    Ux,
    Uy,
    Rz,
}

impl Dof {
    pub const ALL: [Dof; 3] = [Dof::Ux, Dof::Uy, Dof::Rz];

    pub fn offset(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub id: usize,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDef {
    pub id: usize,
    pub kind: MaterialKind,
    #[serde(rename = "E")]
    pub e: f64,
    pub nu: f64,
    pub assumption: Assumption,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementDef {
    pub id: usize,
    pub kind: ElementKind,
    pub nodes: Vec<usize>,
    pub material: usize,
    /// Characteristic length, membranes only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<f64>,
    /// Thickness; defaults to 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Beam section area.
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub area: Option<f64>,
    /// Beam second moment of area.
    #[serde(rename = "I", default, skip_serializing_if = "Option::is_none")]
    pub inertia: Option<f64>,
}

impl ElementDef {
    pub fn thickness(&self) -> f64 {
        self.t.unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    pub node: usize,
    pub dof: Dof,
    #[serde(default)]
    pub value: f64,
}

/// Nodal force (or moment for `rz`), applied proportionally over the steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Load {
    pub node: usize,
    pub dof: Dof,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Curvature field interpolated as the mean curvature vector.
    KappaForm,
    /// Curvature field interpolated as the engineering curvature.
    #[default]
    KForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condensation {
    /// Invert the moduli integrals at every update.
    OptionOne,
    /// Invert the constant coupling matrices once.
    #[default]
    OptionTwo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_iters")]
    pub max_newton_iters: usize,
    #[serde(default = "default_rtol")]
    pub residual_tol: f64,
    #[serde(default = "default_dtol")]
    pub displacement_tol: f64,
    #[serde(default)]
    pub formulation: Formulation,
    #[serde(default)]
    pub condensation: Condensation,
}

fn default_steps() -> usize {
    1
}
fn default_iters() -> usize {
    25
}
fn default_rtol() -> f64 {
    1e-8
}
fn default_dtol() -> f64 {
    1e-10
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            steps: default_steps(),
            max_newton_iters: default_iters(),
            residual_tol: default_rtol(),
            displacement_tol: default_dtol(),
            formulation: Formulation::default(),
            condensation: Condensation::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    pub nodes: Vec<Node>,
    pub materials: Vec<MaterialDef>,
    pub elements: Vec<ElementDef>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default)]
    pub analysis: AnalysisConfig,
}

impl Model {
    /// Node index (position in `nodes`) for every node id. Later duplicates win.
    pub fn node_index(&self) -> HashMap<usize, usize> {
        self.nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect()
    }

    pub fn material_index(&self) -> HashMap<usize, usize> {
        self.materials.iter().enumerate().map(|(i, m)| (m.id, i)).collect()
    }

    pub fn node_by_id(&self, id: usize) -> Option<&Node> {
        self.nodes.iter().find(|n| n.id == id)
    }

    pub fn material_by_id(&self, id: usize) -> Option<&MaterialDef> {
        self.materials.iter().find(|m| m.id == id)
    }

    pub fn element_coords(&self, element: &ElementDef, index: &HashMap<usize, usize>) -> Vec<[f64; 2]> {
        element
            .nodes
            .iter()
            .map(|id| {
                let n = &self.nodes[index[id]];
                [n.x, n.y]
            })
            .collect()
    }
}

/// Parses and structurally checks a model document.
pub fn parse_model(text: &str) -> Result<Model> {
    let model: Model = serde_json::from_str(text).map_err(|e| {
        use serde_json::error::Category;
        match e.classify() {
            Category::Syntax | Category::Eof | Category::Io => Error::Syntax {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            },
            Category::Data => Error::model(e.to_string()),
        }
    })?;
    check_structure(&model)?;
    Ok(model)
}

pub fn serialize_model(model: &Model) -> String {
    serde_json::to_string_pretty(model).expect("model serialization is infallible")
}

/// Hard structural checks: anything that makes the model meaningless to look at.
fn check_structure(model: &Model) -> Result<()> {
    if model.nodes.is_empty() {
        return Err(Error::model("no nodes"));
    }
    for n in &model.nodes {
        if !(n.x.is_finite() && n.y.is_finite()) {
            return Err(Error::model(format!("node {} has non-finite coordinates", n.id)));
        }
    }
    for m in &model.materials {
        if !(m.e > 0.0) {
            return Err(Error::model(format!("material {}: E must be positive", m.id)));
        }
        if !(m.nu > -1.0 && m.nu < 0.5) {
            return Err(Error::model(format!("material {}: nu must lie in (-1, 0.5)", m.id)));
        }
        if m.kind == MaterialKind::J2 && !m.sigma_y.is_some_and(|s| s > 0.0) {
            return Err(Error::model(format!("material {}: j2 requires sigma_y > 0", m.id)));
        }
    }
    let nodes: HashSet<usize> = model.nodes.iter().map(|n| n.id).collect();
    let materials: HashSet<usize> = model.materials.iter().map(|m| m.id).collect();
    for e in &model.elements {
        if e.nodes.len() != e.kind.node_count() {
            return Err(Error::model(format!(
                "element {}: node count mismatch ({} expects {}, got {})",
                e.id,
                e.kind,
                e.kind.node_count(),
                e.nodes.len()
            )));
        }
        if let Some(id) = e.nodes.iter().find(|id| !nodes.contains(id)) {
            return Err(Error::model(format!("element {}: dangling node reference {id}", e.id)));
        }
        if !materials.contains(&e.material) {
            return Err(Error::model(format!(
                "element {}: dangling material reference {}",
                e.id, e.material
            )));
        }
        if e.kind.is_membrane() && !e.l.is_some_and(|l| l > 0.0) {
            return Err(Error::model(format!(
                "element {}: membrane elements require l > 0",
                e.id
            )));
        }
        if e.t.is_some_and(|t| !(t > 0.0)) {
            return Err(Error::model(format!("element {}: thickness must be positive", e.id)));
        }
        if e.kind == ElementKind::Beam2d
            && !(e.area.is_some_and(|a| a > 0.0) && e.inertia.is_some_and(|i| i > 0.0))
        {
            return Err(Error::model(format!("element {}: BEAM2D requires A > 0 and I > 0", e.id)));
        }
    }
    for c in &model.constraints {
        if !nodes.contains(&c.node) {
            return Err(Error::model(format!("constraint references unknown node {}", c.node)));
        }
    }
    for l in &model.loads {
        if !nodes.contains(&l.node) {
            return Err(Error::model(format!("load references unknown node {}", l.node)));
        }
    }
    if model.analysis.steps == 0 || model.analysis.max_newton_iters == 0 {
        return Err(Error::model("analysis: steps and max_newton_iters must be positive"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic(pub String);

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Collects every problem that would keep the model from being solved. Never fails.
pub fn validate_model(model: &Model) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut push = |s: String| out.push(Diagnostic(s));

    for (what, ids) in [
        ("node", model.nodes.iter().map(|n| n.id).collect::<Vec<_>>()),
        ("element", model.elements.iter().map(|e| e.id).collect()),
        ("material", model.materials.iter().map(|m| m.id).collect()),
    ] {
        let mut seen = HashSet::new();
        for id in ids {
            if !seen.insert(id) {
                push(format!("duplicate {what} id {id}"));
            }
        }
    }

    let index = model.node_index();
    for e in &model.elements {
        if e.nodes.iter().any(|id| !index.contains_key(id)) || e.nodes.len() != e.kind.node_count() {
            push(format!("element {}: invalid connectivity", e.id));
            continue;
        }
        let coords = model.element_coords(e, &index);
        if e.kind.is_membrane() {
            let rule = basis::quadrature(e.kind);
            for p in &rule.points {
                if let Err(err) = basis::eval_basis(e.kind, Field::Geometry, *p, &coords) {
                    push(format!("element {}: non-positive Jacobian ({err})", e.id));
                    break;
                }
            }
        } else {
            let dx = coords[1][0] - coords[0][0];
            let dy = coords[1][1] - coords[0][1];
            if dx.hypot(dy) <= 0.0 {
                push(format!("element {}: zero-length beam", e.id));
            }
        }
        if let Some(m) = model.material_by_id(e.material) {
            if m.kind == MaterialKind::J2 && m.assumption != Assumption::PlaneStress {
                push(format!("element {}: j2 material requires plane_stress", e.id));
            }
            if m.kind == MaterialKind::J2 && e.kind == ElementKind::Beam2d {
                push(format!("element {}: BEAM2D supports elastic materials only", e.id));
            }
        }
    }

    let mut constrained = HashMap::new();
    for c in &model.constraints {
        if let Some(prev) = constrained.insert((c.node, c.dof), c.value) {
            if prev != c.value {
                push(format!("conflicting constraint on node {} dof {:?}", c.node, c.dof));
            }
        }
    }
    if constrained.len() < 3 {
        push(format!(
            "insufficient constraints: {} rigid-body modes",
            3 - constrained.len()
        ));
    }

    let a = &model.analysis;
    if !(a.residual_tol > 0.0 && a.residual_tol < 1.0) {
        push("analysis: residual_tol must lie in (0, 1)".into());
    }
    if !(a.displacement_tol > 0.0 && a.displacement_tol < 1.0) {
        push("analysis: displacement_tol must lie in (0, 1)".into());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DofStatus {
    /// Free, with its equation number.
    Free(usize),
    /// Constrained to the given total value.
    Constrained(f64),
}

/// Global DoF numbering: node-major, (ux, uy, rz) minor.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    node_index: HashMap<usize, usize>,
    status: Vec<DofStatus>,
    n_free: usize,
}

impl DofMap {
    pub fn total(&self) -> usize {
        self.status.len()
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn n_constrained(&self) -> usize {
        self.total() - self.n_free
    }

    pub fn global(&self, node_id: usize, dof: Dof) -> Option<usize> {
        self.node_index.get(&node_id).map(|i| 3 * i + dof.offset())
    }

    pub fn status(&self, global: usize) -> DofStatus {
        self.status[global]
    }

    pub fn equation(&self, global: usize) -> Option<usize> {
        match self.status[global] {
            DofStatus::Free(eq) => Some(eq),
            DofStatus::Constrained(_) => None,
        }
    }

    pub fn statuses(&self) -> &[DofStatus] {
        &self.status
    }

    /// Global indices of the element's DoFs in element order (node-major).
    pub fn element_dofs(&self, element: &ElementDef) -> Vec<usize> {
        element
            .nodes
            .iter()
            .flat_map(|id| {
                let base = 3 * self.node_index[id];
                [base, base + 1, base + 2]
            })
            .collect()
    }
}

pub fn number_dofs(model: &Model) -> Result<DofMap> {
    let node_index = model.node_index();
    let n = model.nodes.len();
    let mut prescribed: Vec<Option<f64>> = vec![None; 3 * n];
    for c in &model.constraints {
        let g = 3 * node_index[&c.node] + c.dof.offset();
        match prescribed[g] {
            Some(v) if v != c.value => {
                return Err(Error::model(format!(
                    "conflicting constraint on node {} dof {:?}",
                    c.node, c.dof
                )))
            }
            _ => prescribed[g] = Some(c.value),
        }
    }

    let mut attached = vec![false; n];
    for e in &model.elements {
        for id in &e.nodes {
            attached[node_index[id]] = true;
        }
    }
    for (i, node) in model.nodes.iter().enumerate() {
        if !attached[i] {
            log::warn!("node {} is not attached to any element; its DoFs are fixed", node.id);
            for d in 0..3 {
                prescribed[3 * i + d].get_or_insert(0.0);
            }
        }
    }

    let mut n_free = 0;
    let status = prescribed
        .into_iter()
        .map(|p| match p {
            Some(v) => DofStatus::Constrained(v),
            None => {
                n_free += 1;
                DofStatus::Free(n_free - 1)
            }
        })
        .collect();
    Ok(DofMap {
        node_index,
        status,
        n_free,
    })
}
