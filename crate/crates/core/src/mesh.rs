//! Structured triangulations of the rectangle (-1, 1) × (0, 1).
//!
//! The bottom side y = 0 is split at the origin into Γ− (x < 0) and Γ+ (x > 0);
//! every other boundary edge belongs to Γ0. The origin is always a node so the
//! impedance never changes behaviour inside an edge.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    GammaMinus,
    GammaPlus,
    Gamma0,
}

impl BoundaryTag {
    /// Tag of a bottom edge from the x-coordinate of its midpoint.
    fn for_bottom_midpoint(xm: f64) -> BoundaryTag {
        if xm < 0.0 {
            BoundaryTag::GammaMinus
        } else {
            BoundaryTag::GammaPlus
        }
    }
}

/// A boundary edge. `nodes` follows the counter-clockwise orientation of the
/// owning triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub level: usize,
    /// For refined meshes, the parent triangle of each triangle.
    parents: Option<Vec<usize>>,
}

/// Uniform grid of `nx × ny` cells, each split along its lower-left to
/// upper-right diagonal.
pub fn build_rect_mesh(nx: usize, ny: usize) -> Result<Mesh> {
    if nx < 2 {
        return Err(Error::invalid("nx must be at least 2"));
    }
    if !nx.is_multiple_of(2) {
        return Err(Error::invalid("nx must be even"));
    }
    if ny < 1 {
        return Err(Error::invalid("ny must be at least 1"));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            // (2i - nx) / nx keeps the middle column exactly at x = 0
            let x = (2.0 * i as f64 - nx as f64) / nx as f64;
            let y = j as f64 / ny as f64;
            nodes.push([x, y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut boundary_edges = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        let xm = 0.5 * (nodes[id(i, 0)][0] + nodes[id(i + 1, 0)][0]);
        boundary_edges.push(BoundaryEdge {
            nodes: [id(i, 0), id(i + 1, 0)],
            tag: BoundaryTag::for_bottom_midpoint(xm),
        });
    }
    for j in 0..ny {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(nx, j), id(nx, j + 1)],
            tag: BoundaryTag::Gamma0,
        });
    }
    for i in (0..nx).rev() {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(i + 1, ny), id(i, ny)],
            tag: BoundaryTag::Gamma0,
        });
    }
    for j in (0..ny).rev() {
        boundary_edges.push(BoundaryEdge {
            nodes: [id(0, j + 1), id(0, j)],
            tag: BoundaryTag::Gamma0,
        });
    }
    Ok(Mesh {
        nodes,
        triangles,
        boundary_edges,
        level: 0,
        parents: None,
    })
}

/// Uniform red refinement: every triangle is split into four through its edge
/// midpoints. Parent nodes keep their indices.
pub fn refine(m: &Mesh) -> Mesh {
    let mut nodes = m.nodes.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let (p, q) = (nodes[key.0], nodes[key.1]);
            nodes.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
            nodes.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * m.triangles.len());
    let mut parents = Vec::with_capacity(4 * m.triangles.len());
    for (t, &[v0, v1, v2]) in m.triangles.iter().enumerate() {
        let m01 = mid(v0, v1, &mut nodes);
        let m12 = mid(v1, v2, &mut nodes);
        let m20 = mid(v2, v0, &mut nodes);
        triangles.extend_from_slice(&[[v0, m01, m20], [m01, v1, m12], [m20, m12, v2], [m01, m12, m20]]);
        parents.extend_from_slice(&[t; 4]);
    }
    let mut boundary_edges = Vec::with_capacity(2 * m.boundary_edges.len());
    for e in &m.boundary_edges {
        let [a, b] = e.nodes;
        let c = mid(a, b, &mut nodes);
        boundary_edges.push(BoundaryEdge {
            nodes: [a, c],
            tag: e.tag,
        });
        boundary_edges.push(BoundaryEdge {
            nodes: [c, b],
            tag: e.tag,
        });
    }
    Mesh {
        nodes,
        triangles,
        boundary_edges,
        level: m.level + 1,
        parents: Some(parents),
    }
}

impl Mesh {
    pub fn rectangle(nx: usize, ny: usize) -> Result<Mesh> {
        build_rect_mesh(nx, ny)
    }

    pub fn refined(&self) -> Mesh {
        refine(self)
    }

    /// The mesh refined `times` times.
    pub fn refined_times(&self, times: usize) -> Mesh {
        let mut m = self.clone();
        for _ in 0..times {
            m = refine(&m);
        }
        m
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn parent(&self, t: usize) -> Option<usize> {
        self.parents.as_ref().map(|p| p[t])
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    /// Longest edge length (the mesh size h).
    pub fn max_edge_length(&self) -> f64 {
        let len = |i: usize, j: usize| {
            let (p, q) = (self.nodes[i], self.nodes[j]);
            (p[0] - q[0]).hypot(p[1] - q[1])
        };
        self.triangles
            .iter()
            .map(|&[a, b, c]| len(a, b).max(len(b, c)).max(len(c, a)))
            .fold(0.0, f64::max)
    }

    /// Index of the node at the origin O = (0, 0).
    pub fn origin_node(&self) -> Option<usize> {
        self.nodes.iter().position(|p| p[0] == 0.0 && p[1] == 0.0)
    }

    pub fn edge_length(&self, e: &BoundaryEdge) -> f64 {
        let (p, q) = (self.nodes[e.nodes[0]], self.nodes[e.nodes[1]]);
        (p[0] - q[0]).hypot(p[1] - q[1])
    }

    /// Checks orientation, conformity and boundary tagging.
    pub fn validate(&self) -> Result<()> {
        for t in 0..self.triangles.len() {
            if self.signed_area(t) <= 0.0 {
                return Err(Error::invalid(format!("triangle {t} is not positively oriented")));
            }
        }
        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in &self.triangles {
            for (p, q) in [(a, b), (b, c), (c, a)] {
                *edge_count.entry((p.min(q), p.max(q))).or_default() += 1;
            }
        }
        if edge_count.values().any(|&c| c > 2) {
            return Err(Error::invalid("edge shared by more than two triangles"));
        }
        let single: usize = edge_count.values().filter(|&&c| c == 1).count();
        if single != self.boundary_edges.len() {
            return Err(Error::invalid(format!(
                "{single} edges with one triangle but {} boundary edges",
                self.boundary_edges.len()
            )));
        }
        for e in &self.boundary_edges {
            let [a, b] = e.nodes;
            if edge_count.get(&(a.min(b), a.max(b))) != Some(&1) {
                return Err(Error::invalid("boundary edge not owned by exactly one triangle"));
            }
            let (p, q) = (self.nodes[a], self.nodes[b]);
            let bottom = p[1] == 0.0 && q[1] == 0.0;
            let xm = 0.5 * (p[0] + q[0]);
            let expected = if bottom {
                BoundaryTag::for_bottom_midpoint(xm)
            } else {
                BoundaryTag::Gamma0
            };
            if e.tag != expected || (bottom && p[0].min(q[0]) < 0.0 && p[0].max(q[0]) > 0.0) {
                return Err(Error::invalid("boundary edge mis-tagged or straddling the origin"));
            }
        }
        if self.origin_node().is_none() {
            return Err(Error::invalid("origin is not a mesh node"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grid_counts() {
        let m = build_rect_mesh(2, 1).unwrap();
        assert_eq!(m.num_nodes(), 6);
        assert_eq!(m.num_triangles(), 4);
        let bottom: Vec<_> = m
            .boundary_edges
            .iter()
            .filter(|e| e.tag != BoundaryTag::Gamma0)
            .map(|e| e.tag)
            .collect();
        assert_eq!(bottom, vec![BoundaryTag::GammaMinus, BoundaryTag::GammaPlus]);
        m.validate().unwrap();

        let m = build_rect_mesh(4, 2).unwrap();
        assert_eq!(m.num_nodes(), 15);
        assert_eq!(m.num_triangles(), 16);
    }

    #[test]
    fn rejects_bad_sizes() {
        let err = build_rect_mesh(3, 1).unwrap_err();
        assert!(err.to_string().contains("nx must be even"));
        assert!(build_rect_mesh(0, 1).is_err());
        assert!(build_rect_mesh(2, 0).is_err());
    }

    #[test]
    fn refinement_quadruples_and_halves() {
        let m0 = build_rect_mesh(2, 1).unwrap();
        let m1 = refine(&m0);
        assert_eq!(m1.num_triangles(), 16);
        assert_eq!(m1.level, 1);
        assert!(m1.origin_node().is_some());
        let m2 = refine(&m1);
        assert_eq!(m2.num_triangles(), 64);
        assert!((m2.max_edge_length() - 0.25 * m0.max_edge_length()).abs() < 1e-15);
        for m in [&m1, &m2] {
            m.validate().unwrap();
            assert!((m.total_area() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn refinement_is_nested() {
        let m0 = build_rect_mesh(4, 2).unwrap();
        let m1 = refine(&m0);
        for (i, p) in m0.nodes.iter().enumerate() {
            assert_eq!(m1.nodes[i], *p);
        }
        for t in 0..m1.num_triangles() {
            let parent = m1.parent(t).unwrap();
            // every child vertex lies in the closed parent triangle
            let [a, b, c] = m0.triangles[parent].map(|i| m0.nodes[i]);
            for v in m1.triangles[t] {
                let p = m1.nodes[v];
                let d = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / d;
                let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / d;
                assert!(l1 >= -1e-14 && l2 >= -1e-14 && l1 + l2 <= 1.0 + 1e-14);
            }
        }
    }

    #[test]
    fn bottom_tags_cover_gamma() {
        let m = build_rect_mesh(8, 4).unwrap().refined_times(2);
        let total: f64 = m
            .boundary_edges
            .iter()
            .filter(|e| e.tag != BoundaryTag::Gamma0)
            .map(|e| m.edge_length(e))
            .sum();
        assert!((total - 2.0).abs() < 1e-14);
    }
}
