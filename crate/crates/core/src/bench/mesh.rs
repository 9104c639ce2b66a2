//! Structured mesh generation over mapped parameter blocks.

use std::collections::HashMap;

use crate::model::{ElementDef, ElementKind, Node};

/// Coordinates closer than this are merged into one node.
const MERGE_TOL: f64 = 1e-9;

/// Accumulates nodes and elements; nodes at coincident coordinates are shared.
#[derive(Debug, Default, Clone)]
pub struct MeshBuilder {
    nodes: Vec<Node>,
    lookup: HashMap<(i64, i64), usize>,
    elements: Vec<ElementDef>,
}

/// Element properties applied to every element a builder call creates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub material: usize,
    pub l: f64,
    pub t: f64,
}

impl MeshBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Id of the node at `(x, y)`, creating it if needed.
    pub fn node(&mut self, x: f64, y: f64) -> usize {
        let key = ((x / MERGE_TOL).round() as i64, (y / MERGE_TOL).round() as i64);
        if let Some(&id) = self.lookup.get(&key) {
            return id;
        }
        let id = self.nodes.len() + 1;
        self.nodes.push(Node { id, x, y });
        self.lookup.insert(key, id);
        id
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn elements(&self) -> &[ElementDef] {
        &self.elements
    }

    pub fn add_element(&mut self, kind: ElementKind, nodes: Vec<usize>, section: Section) -> usize {
        let id = self.elements.len() + 1;
        self.elements.push(ElementDef {
            id,
            kind,
            nodes,
            material: section.material,
            l: kind.is_membrane().then_some(section.l),
            t: Some(section.t),
            area: None,
            inertia: None,
        });
        id
    }

    pub fn add_beam(&mut self, nodes: [usize; 2], material: usize, area: f64, inertia: f64) -> usize {
        let id = self.elements.len() + 1;
        self.elements.push(ElementDef {
            id,
            kind: ElementKind::Beam2d,
            nodes: nodes.to_vec(),
            material,
            l: None,
            t: None,
            area: Some(area),
            inertia: Some(inertia),
        });
        id
    }

    /// Meshes the image of the unit square under `map` with `nx` by `ny` cells.
    /// `map` must preserve orientation. Triangular kinds split each cell along its
    /// (0,0)-(1,1) diagonal. Kinds with mid-side nodes on only some edges are rotated
    /// cell by cell so that every interior edge carries a mid-side node on both sides or
    /// on neither.
    pub fn grid(
        &mut self,
        kind: ElementKind,
        nx: usize,
        ny: usize,
        section: Section,
        map: impl Fn(f64, f64) -> [f64; 2],
    ) {
        let mut at = |s: f64, t: f64| {
            let [x, y] = map(s, t);
            self.node(x, y)
        };
        let mut cells = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (s0, s1) = (i as f64 / nx as f64, (i + 1) as f64 / nx as f64);
                let (t0, t1) = (j as f64 / ny as f64, (j + 1) as f64 / ny as f64);
                let corners = [[s0, t0], [s1, t0], [s1, t1], [s0, t1]];
                let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                let cell: Vec<Vec<usize>> = match kind {
                    ElementKind::Csmt3 => [[0, 1, 2], [0, 2, 3]]
                        .iter()
                        .map(|tri| tri.iter().map(|&c| at(corners[c][0], corners[c][1])).collect())
                        .collect(),
                    ElementKind::Csmt6 => [[0, 1, 2], [0, 2, 3]]
                        .iter()
                        .map(|tri| {
                            let p: Vec<[f64; 2]> = tri.iter().map(|&c| corners[c]).collect();
                            let mut pts = p.clone();
                            pts.extend([mid(p[0], p[1]), mid(p[1], p[2]), mid(p[2], p[0])]);
                            pts.iter().map(|q| at(q[0], q[1])).collect()
                        })
                        .collect(),
                    ElementKind::Beam2d => panic!("beams are not meshed on grids"),
                    _ => {
                        let r = quad_rotation(kind, i, j);
                        let corners: Vec<[f64; 2]> = (0..4).map(|k| corners[(k + r) % 4]).collect();
                        let mut pts = corners.clone();
                        for &e in quad_mid_edges(kind) {
                            pts.push(mid(corners[e], corners[(e + 1) % 4]));
                        }
                        vec![pts.iter().map(|q| at(q[0], q[1])).collect()]
                    }
                };
                cells.extend(cell);
            }
        }
        for nodes in cells {
            self.add_element(kind, nodes, section);
        }
    }

    pub fn finish(self) -> (Vec<Node>, Vec<ElementDef>) {
        (self.nodes, self.elements)
    }
}

/// Quarter turns applied to the local numbering of cell `(i, j)`. CSMQ5 cells pair up
/// vertically across their mid-side edge; CSMQ7 cells pair up horizontally across the
/// edge without one.
fn quad_rotation(kind: ElementKind, i: usize, j: usize) -> usize {
    match kind {
        ElementKind::Csmq5 if j % 2 == 0 => 2,
        ElementKind::Csmq7 if i % 2 == 0 => 2,
        _ => 0,
    }
}

/// Edges carrying a mid-side node, as corner index `e` for the edge `e -> e + 1`.
pub fn quad_mid_edges(kind: ElementKind) -> &'static [usize] {
    match kind {
        ElementKind::Csmq5 => &[0],
        ElementKind::Csmq6 => &[0, 2],
        ElementKind::Csmq7 => &[0, 1, 2],
        ElementKind::Csmq8 => &[0, 1, 2, 3],
        _ => &[],
    }
}

/// Boundary edges of an element as node lists `[a, (mid), b]`.
pub fn element_edges(element: &ElementDef) -> Vec<Vec<usize>> {
    let n = &element.nodes;
    match element.kind {
        ElementKind::Csmt3 => vec![vec![n[0], n[1]], vec![n[1], n[2]], vec![n[2], n[0]]],
        ElementKind::Csmt6 => vec![
            vec![n[0], n[3], n[1]],
            vec![n[1], n[4], n[2]],
            vec![n[2], n[5], n[0]],
        ],
        ElementKind::Beam2d => vec![],
        kind => {
            let mids = quad_mid_edges(kind);
            (0..4)
                .map(|e| match mids.iter().position(|&m| m == e) {
                    Some(k) => vec![n[e], n[4 + k], n[(e + 1) % 4]],
                    None => vec![n[e], n[(e + 1) % 4]],
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEC: Section = Section {
        material: 1,
        l: 1.0,
        t: 1.0,
    };

    #[test]
    fn nodes_are_shared() {
        let mut b = MeshBuilder::new();
        b.grid(ElementKind::Csmq4, 2, 2, SEC, |s, t| [s, t]);
        assert_eq!(b.nodes().len(), 9);
        assert_eq!(b.elements().len(), 4);
        let mut b = MeshBuilder::new();
        b.grid(ElementKind::Csmq8, 2, 2, SEC, |s, t| [s, t]);
        assert_eq!(b.nodes().len(), 21);
        let mut b = MeshBuilder::new();
        b.grid(ElementKind::Csmt6, 2, 1, SEC, |s, t| [s, t]);
        assert_eq!(b.elements().len(), 4);
        assert_eq!(b.nodes().len(), 15);
    }

    #[test]
    fn edges_follow_mid_nodes() {
        let mut b = MeshBuilder::new();
        b.grid(ElementKind::Csmq6, 1, 1, SEC, |s, t| [s, t]);
        let edges = element_edges(&b.elements()[0]);
        assert_eq!(edges[0].len(), 3);
        assert_eq!(edges[1].len(), 2);
        assert_eq!(edges[2].len(), 3);
    }

    #[test]
    fn partial_mid_nodes_are_conforming() {
        // every mid-side node must belong to exactly the elements sharing its edge
        for kind in [ElementKind::Csmq5, ElementKind::Csmq6, ElementKind::Csmq7] {
            let mut b = MeshBuilder::new();
            b.grid(kind, 3, 3, SEC, |s, t| [s, t]);
            let mut count = std::collections::HashMap::new();
            for e in b.elements() {
                for edge in element_edges(e) {
                    let mut key = [edge[0], edge[edge.len() - 1]];
                    key.sort();
                    count.entry(key).or_insert_with(Vec::new).push(edge.len());
                }
            }
            for lens in count.values() {
                assert!(lens.iter().all(|&l| l == lens[0]), "{kind}: {lens:?}");
            }
        }
    }
}
