use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::TopologyError;

type Edge = (usize, usize);

fn edge(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Closed triangulated surface; triangles are vertex triples (0-based), in
/// any orientation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriangulatedSurface {
    pub vertices: usize,
    pub triangles: Vec<[usize; 3]>,
}

/// A 1-cycle over GF(2), as a set of edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Z2Cycle {
    pub edges: Vec<[usize; 2]>,
}

impl Z2Cycle {
    pub fn empty() -> Self {
        Z2Cycle::default()
    }

    /// The closed edge path through the given vertices.
    pub fn loop_through(vs: &[usize]) -> Self {
        let k = vs.len();
        Z2Cycle {
            edges: (0..k).map(|i| [vs[i], vs[(i + 1) % k]]).collect(),
        }
    }

    fn edge_set(&self) -> BTreeSet<Edge> {
        // GF(2): repeated edges cancel
        let mut s = BTreeSet::new();
        for [a, b] in &self.edges {
            let e = edge(*a, *b);
            if !s.remove(&e) {
                s.insert(e);
            }
        }
        s
    }
}

impl TriangulatedSurface {
    pub fn new(vertices: usize, triangles: Vec<[usize; 3]>) -> Result<Self, TopologyError> {
        let s = TriangulatedSurface { vertices, triangles };
        s.validate()?;
        Ok(s)
    }

    fn edge_map(&self) -> BTreeMap<Edge, Vec<usize>> {
        let mut m: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                m.entry(edge(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        m
    }

    /// Closed-surface checks: vertex range, nondegenerate triangles, every
    /// edge in exactly two triangles, vertex links are single cycles and
    /// the dual graph is connected.
    pub fn validate(&self) -> Result<(), TopologyError> {
        if self.triangles.is_empty() {
            return Err(TopologyError::Surface("no triangles".into()));
        }
        let mut seen = BTreeSet::new();
        for tri in &self.triangles {
            if tri.iter().any(|&v| v >= self.vertices) {
                return Err(TopologyError::Surface(format!("triangle {tri:?} uses a vertex out of range")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(TopologyError::Surface(format!("degenerate triangle {tri:?}")));
            }
            let mut key = *tri;
            key.sort();
            if !seen.insert(key) {
                return Err(TopologyError::Surface(format!("repeated triangle {tri:?}")));
            }
        }
        for (e, ts) in self.edge_map() {
            if ts.len() != 2 {
                return Err(TopologyError::NotClosed { edge: [e.0, e.1], count: ts.len() });
            }
        }
        for v in 0..self.vertices {
            // link edges opposite v must form one cycle
            let link: Vec<Edge> = self
                .triangles
                .iter()
                .filter(|t| t.contains(&v))
                .map(|t| {
                    let o: Vec<usize> = t.iter().copied().filter(|&w| w != v).collect();
                    edge(o[0], o[1])
                })
                .collect();
            if link.is_empty() {
                return Err(TopologyError::Surface(format!("vertex {v} is unused")));
            }
            let mut adj: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (a, b) in &link {
                adj.entry(*a).or_default().push(*b);
                adj.entry(*b).or_default().push(*a);
            }
            let start = link[0].0;
            let mut seen = BTreeSet::from([start]);
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for y in &adj[&x] {
                    if seen.insert(*y) {
                        queue.push_back(*y);
                    }
                }
            }
            if seen.len() != adj.len() || adj.values().any(|n| n.len() != 2) {
                return Err(TopologyError::Surface(format!("vertex {v} is not a manifold point")));
            }
        }
        if self.dual_tree().1.iter().any(|p| p.is_none()) {
            return Err(TopologyError::Surface("surface is disconnected".into()));
        }
        Ok(())
    }

    pub fn edges(&self) -> Vec<[usize; 2]> {
        self.edge_map().keys().map(|&(a, b)| [a, b]).collect()
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices as i64 - self.edge_map().len() as i64 + self.triangles.len() as i64
    }

    /// BFS spanning tree of the dual graph: visiting order and parent
    /// `(triangle, shared edge)` of each triangle.
    fn dual_tree(&self) -> (Vec<usize>, Vec<Option<(usize, Edge)>>) {
        let em = self.edge_map();
        let mut parent: Vec<Option<(usize, Edge)>> = vec![None; self.triangles.len()];
        let mut order = vec![0];
        parent[0] = Some((0, (0, 0)));
        let mut queue = VecDeque::from([0]);
        while let Some(t) = queue.pop_front() {
            let tri = self.triangles[t];
            for k in 0..3 {
                let e = edge(tri[k], tri[(k + 1) % 3]);
                for &u in &em[&e] {
                    if parent[u].is_none() {
                        parent[u] = Some((t, e));
                        order.push(u);
                        queue.push_back(u);
                    }
                }
            }
        }
        (order, parent)
    }

    pub fn is_cycle(&self, z: &Z2Cycle) -> Result<(), TopologyError> {
        let em = self.edge_map();
        let mut deg = vec![0usize; self.vertices];
        for (a, b) in z.edge_set() {
            if !em.contains_key(&(a, b)) {
                return Err(TopologyError::EdgeNotInSurface([a, b]));
            }
            deg[a] += 1;
            deg[b] += 1;
        }
        if let Some(v) = deg.iter().position(|d| d % 2 == 1) {
            return Err(TopologyError::NotCycle { vertex: v });
        }
        Ok(())
    }

    /// Barycentric subdivision: vertices, then edge midpoints, then triangle
    /// centres. Returns the surface and the midpoint index of each edge.
    pub fn barycentric_subdivision(&self) -> (TriangulatedSurface, BTreeMap<Edge, usize>) {
        let edges = self.edge_map();
        let mut mid = BTreeMap::new();
        for (i, e) in edges.keys().enumerate() {
            mid.insert(*e, self.vertices + i);
        }
        let base = self.vertices + edges.len();
        let mut tris = Vec::with_capacity(6 * self.triangles.len());
        for (t, tri) in self.triangles.iter().enumerate() {
            let c = base + t;
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let m = mid[&edge(a, b)];
                tris.push([a, m, c]);
                tris.push([m, b, c]);
            }
        }
        (
            TriangulatedSurface { vertices: base + self.triangles.len(), triangles: tris },
            mid,
        )
    }

    /// Image of a cycle under [`barycentric_subdivision`](Self::barycentric_subdivision).
    pub fn subdivide_cycle(z: &Z2Cycle, mid: &BTreeMap<Edge, usize>) -> Z2Cycle {
        let mut edges = Vec::new();
        for (a, b) in z.edge_set() {
            let m = mid[&(a, b)];
            edges.push([a, m]);
            edges.push([m, b]);
        }
        Z2Cycle { edges }
    }

    /// The 6-vertex real projective plane.
    pub fn rp2() -> Self {
        let t = [
            [1, 2, 3],
            [1, 3, 4],
            [1, 4, 5],
            [1, 5, 6],
            [1, 6, 2],
            [2, 3, 5],
            [3, 4, 6],
            [4, 5, 2],
            [5, 6, 3],
            [6, 2, 4],
        ];
        TriangulatedSurface {
            vertices: 6,
            triangles: t.iter().map(|[a, b, c]| [a - 1, b - 1, c - 1]).collect(),
        }
    }

    /// Boundary of the octahedron; vertices `±x = 0, 1`, `±y = 2, 3`, `±z = 4, 5`.
    pub fn sphere() -> Self {
        let mut t = Vec::new();
        for &a in &[0, 1] {
            for &b in &[2, 3] {
                for &c in &[4, 5] {
                    t.push([a, b, c]);
                }
            }
        }
        TriangulatedSurface { vertices: 6, triangles: t }
    }

    /// The equator `{z = 0}` of [`sphere`](Self::sphere).
    pub fn sphere_equator() -> Z2Cycle {
        Z2Cycle::loop_through(&[0, 2, 1, 3])
    }

    fn grid(n: usize, vertex: impl Fn(usize, usize) -> usize) -> Vec<[usize; 3]> {
        let mut t = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (a, b, c, d) = (vertex(i, j), vertex(i + 1, j), vertex(i, j + 1), vertex(i + 1, j + 1));
                t.push([a, b, d]);
                t.push([a, d, c]);
            }
        }
        t
    }

    /// `n × n` grid torus (`n >= 3`); vertex `(i, j)` is `i·n + j`.
    pub fn torus(n: usize) -> Self {
        let v = move |i: usize, j: usize| (i % n) * n + (j % n);
        TriangulatedSurface { vertices: n * n, triangles: Self::grid(n, v) }
    }

    /// `n × n` grid Klein bottle: crossing the `j` seam maps `i` to `n − i`.
    pub fn klein_bottle(n: usize) -> Self {
        let v = move |i: usize, j: usize| {
            let (i, j) = if j >= n { ((n - i % n) % n, j - n) } else { (i % n, j) };
            i * n + j
        };
        TriangulatedSurface { vertices: n * n, triangles: Self::grid(n, v) }
    }

    /// The circle `j = 0` on a grid torus or Klein bottle.
    pub fn grid_circle_i(n: usize) -> Z2Cycle {
        Z2Cycle::loop_through(&(0..n).map(|i| i * n).collect::<Vec<_>>())
    }

    /// Poincaré dual of `w1` on [`klein_bottle`](Self::klein_bottle): the seam `j = 0`.
    pub fn klein_dual_cycle(n: usize) -> Z2Cycle {
        Self::grid_circle_i(n)
    }

    /// The circle `i = 0` on a grid torus.
    pub fn grid_circle_j(n: usize) -> Z2Cycle {
        Z2Cycle::loop_through(&(0..n).collect::<Vec<_>>())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub euler_characteristic: i64,
    pub orientable: bool,
    /// Number of basis loops from the dual spanning tree.
    pub loops: usize,
    /// First loop (as its closing dual edge) where the two classes disagree.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disagreement: Option<[usize; 2]>,
}

/// Compares `w1` with the Poincaré dual of `[Z]` on every fundamental loop
/// of the dual graph: the loop through a non-tree edge `e` between
/// triangles `A`, `B` reverses orientation iff the tree-propagated
/// orientations of `A`, `B` disagree along `e`, and meets `Z` with parity
/// `p(A) + p(B) + [e ∈ Z]`.
pub fn surface_log_admissibility(s: &TriangulatedSurface, z: &Z2Cycle) -> Result<AdmissibilityReport, TopologyError> {
    s.validate()?;
    s.is_cycle(z)?;
    let zs = z.edge_set();
    let (order, parent) = s.dual_tree();
    let nt = s.triangles.len();
    // oriented triangles and Z-parities along the tree
    let mut oriented = vec![[0usize; 3]; nt];
    let mut parity = vec![false; nt];
    oriented[0] = s.triangles[0];
    for &t in order.iter().skip(1) {
        let (p, e) = parent[t].expect("connected");
        let pt = oriented[p];
        let tri = s.triangles[t];
        // the parent traverses e as (a, b); t must traverse it as (b, a)
        let dir_p = traverses(&pt, e.0, e.1);
        oriented[t] = if traverses(&tri, e.0, e.1) == dir_p { [tri[0], tri[2], tri[1]] } else { tri };
        parity[t] = parity[p] ^ zs.contains(&e);
    }
    let mut tree_edges = BTreeSet::new();
    for (t, p) in parent.iter().enumerate().skip(1) {
        let (u, e) = p.expect("connected");
        tree_edges.insert((e, u.min(t), u.max(t)));
    }
    let mut loops = 0;
    let mut orientable = true;
    let mut disagreement = None;
    for (e, ts) in s.edge_map() {
        let (a, b) = (ts[0], ts[1]);
        if order[0] == a && a == b {
            continue;
        }
        if tree_edges.contains(&(e, a.min(b), a.max(b))) {
            continue;
        }
        loops += 1;
        let w1 = traverses(&oriented[a], e.0, e.1) == traverses(&oriented[b], e.0, e.1);
        orientable &= !w1;
        let meets = parity[a] ^ parity[b] ^ zs.contains(&e);
        if w1 != meets && disagreement.is_none() {
            disagreement = Some([e.0, e.1]);
        }
    }
    Ok(AdmissibilityReport {
        admissible: disagreement.is_none(),
        euler_characteristic: s.euler_characteristic(),
        orientable,
        loops,
        disagreement,
    })
}

fn traverses(tri: &[usize; 3], a: usize, b: usize) -> bool {
    (0..3).any(|k| tri[k] == a && tri[(k + 1) % 3] == b)
}

/// Whether `z` bounds over GF(2): solves `∂₂ x = z` by elimination.
pub fn is_null_homologous(s: &TriangulatedSurface, z: &Z2Cycle) -> Result<bool, TopologyError> {
    s.is_cycle(z)?;
    let edges: Vec<Edge> = s.edge_map().keys().copied().collect();
    let index: BTreeMap<Edge, usize> = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
    let words = (s.triangles.len() + 1).div_ceil(64);
    // rows: edges; columns: triangles, plus the right-hand side
    let mut rows = vec![vec![0u64; words]; edges.len()];
    let rhs_col = s.triangles.len();
    for (t, tri) in s.triangles.iter().enumerate() {
        for k in 0..3 {
            let r = index[&edge(tri[k], tri[(k + 1) % 3])];
            rows[r][t / 64] ^= 1 << (t % 64);
        }
    }
    for e in z.edge_set() {
        let r = index[&e];
        rows[r][rhs_col / 64] ^= 1 << (rhs_col % 64);
    }
    let bit = |row: &Vec<u64>, c: usize| row[c / 64] >> (c % 64) & 1 == 1;
    let mut pivot_row = 0;
    for c in 0..s.triangles.len() {
        let Some(r) = (pivot_row..rows.len()).find(|&r| bit(&rows[r], c)) else { continue };
        rows.swap(pivot_row, r);
        let pivot = rows[pivot_row].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != pivot_row && bit(row, c) {
                row.iter_mut().zip(&pivot).for_each(|(x, y)| *x ^= y);
            }
        }
        pivot_row += 1;
    }
    // inconsistent iff some zero row has rhs 1
    Ok(!rows[pivot_row..].iter().any(|r| bit(r, rhs_col)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_and_trivial_verdicts() {
        let rp2 = TriangulatedSurface::rp2();
        rp2.validate().unwrap();
        assert_eq!(rp2.euler_characteristic(), 1);
        let r = surface_log_admissibility(&rp2, &Z2Cycle::empty()).unwrap();
        assert!(!r.admissible && !r.orientable);
        let t = TriangulatedSurface::torus(4);
        assert_eq!(t.euler_characteristic(), 0);
        assert!(surface_log_admissibility(&t, &Z2Cycle::empty()).unwrap().admissible);
        assert!(!surface_log_admissibility(&t, &TriangulatedSurface::grid_circle_i(4)).unwrap().admissible);
        let s = TriangulatedSurface::sphere();
        assert_eq!(s.euler_characteristic(), 2);
        assert!(surface_log_admissibility(&s, &TriangulatedSurface::sphere_equator()).unwrap().admissible);
    }

    #[test]
    fn klein_bottle() {
        let k = TriangulatedSurface::klein_bottle(4);
        k.validate().unwrap();
        assert_eq!(k.euler_characteristic(), 0);
        let none = surface_log_admissibility(&k, &Z2Cycle::empty()).unwrap();
        assert!(!none.orientable && !none.admissible);
        let hits: Vec<bool> = [TriangulatedSurface::grid_circle_i(4), TriangulatedSurface::grid_circle_j(4)]
            .iter()
            .map(|z| surface_log_admissibility(&k, z).unwrap().admissible)
            .collect();
        assert_eq!(hits, vec![true, false]);
        assert_eq!(TriangulatedSurface::klein_dual_cycle(4), TriangulatedSurface::grid_circle_i(4));
    }

    #[test]
    fn null_homology_oracle() {
        let t = TriangulatedSurface::torus(4);
        assert!(is_null_homologous(&t, &Z2Cycle::empty()).unwrap());
        assert!(!is_null_homologous(&t, &TriangulatedSurface::grid_circle_i(4)).unwrap());
        assert!(is_null_homologous(&t, &Z2Cycle::loop_through(&[0, 1, 5])).unwrap());
    }

    #[test]
    fn errors() {
        let open = TriangulatedSurface { vertices: 3, triangles: vec![[0, 1, 2]] };
        assert!(matches!(open.validate(), Err(TopologyError::NotClosed { .. })));
        let t = TriangulatedSurface::torus(4);
        let path = Z2Cycle { edges: vec![[0, 1]] };
        assert!(matches!(surface_log_admissibility(&t, &path), Err(TopologyError::NotCycle { .. })));
        let bad = Z2Cycle { edges: vec![[0, 10]] };
        assert!(matches!(t.is_cycle(&bad), Err(TopologyError::EdgeNotInSurface(_))));
    }

    #[test]
    fn subdivision_keeps_verdict() {
        let t = TriangulatedSurface::torus(3);
        let z = TriangulatedSurface::grid_circle_i(3);
        let (sub, mid) = t.barycentric_subdivision();
        sub.validate().unwrap();
        let zs = TriangulatedSurface::subdivide_cycle(&z, &mid);
        assert_eq!(
            surface_log_admissibility(&t, &z).unwrap().admissible,
            surface_log_admissibility(&sub, &zs).unwrap().admissible
        );
    }
}
