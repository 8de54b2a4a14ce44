//! The colored graph of a display: an edge `x → y` of weight `w` for each
//! nonzero coefficient of `y` in `F x`, `w` its valuation. Cycle slopes
//! through `u₁` give a second, combinatorial handle on the smallest Newton slope.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fcrystal::{BasisLabel, DieudonneDisplay, NewtonPolygon, Slope};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlopeGraph {
    vertices: Vec<BasisLabel>,
    edges: Vec<Edge>,
    out: Vec<Vec<usize>>,
}

/// A simple cycle, listed from its start vertex (which is not repeated).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleSummary {
    pub vertices: Vec<BasisLabel>,
    pub length: usize,
    pub weight: u64,
    pub slope: Slope,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleJson {
    pub vertices: Vec<String>,
    pub length: usize,
    pub weight: u64,
    pub slope: String,
}

impl CycleSummary {
    pub fn to_json(&self) -> CycleJson {
        CycleJson {
            vertices: self.vertices.iter().map(ToString::to_string).collect(),
            length: self.length,
            weight: self.weight,
            slope: self.slope.to_string(),
        }
    }
}

impl SlopeGraph {
    pub fn new(vertices: Vec<BasisLabel>, edges: Vec<Edge>) -> Result<Self> {
        let n = vertices.len();
        if let Some(e) = edges.iter().find(|e| e.from >= n || e.to >= n) {
            return Err(Error::OutOfRange(format!(
                "edge {} → {} outside {n} vertices",
                e.from, e.to
            )));
        }
        let mut out = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            out[e.from].push(k);
        }
        Ok(SlopeGraph { vertices, edges, out })
    }

    pub fn vertices(&self) -> &[BasisLabel] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn position(&self, v: &BasisLabel) -> Option<usize> {
        self.vertices.iter().position(|x| x == v)
    }

    pub fn out_edges(&self, v: usize) -> impl Iterator<Item = &Edge> {
        self.out[v].iter().map(|&k| &self.edges[k])
    }

    pub fn edge(&self, from: &BasisLabel, to: &BasisLabel) -> Option<&Edge> {
        let (f, t) = (self.position(from)?, self.position(to)?);
        self.out_edges(f).find(|e| e.to == t)
    }

    /// Vertices with no outgoing edge (impossible for an invertible `F`).
    pub fn sinks(&self) -> Vec<BasisLabel> {
        (0..self.vertices.len())
            .filter(|&v| self.out[v].is_empty())
            .map(|v| self.vertices[v])
            .collect()
    }

    /// Edges of positive weight absent from `base` (matched by labels) are dropped.
    pub fn without_extra_black_edges(&self, base: &SlopeGraph) -> SlopeGraph {
        let kept = self
            .edges
            .iter()
            .filter(|e| e.weight == 0 || base.edge(&self.vertices[e.from], &self.vertices[e.to]).is_some())
            .copied()
            .collect();
        SlopeGraph::new(self.vertices.clone(), kept).expect("subset of valid edges")
    }

    /// Vertices reachable from `start`, in depth-first order along edge order.
    fn traversal_order(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.vertices.len()];
        let mut order = Vec::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            order.push(v);
            for e in self.out_edges(v).collect::<Vec<_>>().into_iter().rev() {
                if !seen[e.to] {
                    stack.push(e.to);
                }
            }
        }
        order
    }
}

/// One edge per nonzero entry of the Frobenius matrix, in column-major order.
pub fn build_graph(d: &DieudonneDisplay) -> SlopeGraph {
    let ctx = d.context();
    let a = d.frobenius();
    let mut edges = Vec::new();
    for j in 0..d.rank() {
        for i in 0..d.rank() {
            if let Some(w) = ctx.valuation(a.get(i, j)) {
                edges.push(Edge {
                    from: j,
                    to: i,
                    weight: w,
                });
            }
        }
    }
    SlopeGraph::new(d.basis().to_vec(), edges).expect("edges index the basis")
}

fn summary(g: &SlopeGraph, path: &[usize], weight: u64) -> CycleSummary {
    let length = path.len();
    CycleSummary {
        vertices: path.iter().map(|&v| g.vertices[v]).collect(),
        length,
        weight,
        slope: Slope::new(weight as i64, length as i64),
    }
}

/// Every simple cycle through `v`, by depth-first search in edge order.
/// Branches that cannot return to `v` are pruned.
pub fn cycles_through(g: &SlopeGraph, v: &BasisLabel) -> Result<Vec<CycleSummary>> {
    let start = g
        .position(v)
        .ok_or_else(|| Error::OutOfRange(format!("{v} is not a vertex")))?;
    let n = g.vertices.len();
    // vertices that can reach `start`
    let mut reaches = vec![false; n];
    let mut incoming = vec![Vec::new(); n];
    for e in &g.edges {
        incoming[e.to].push(e.from);
    }
    let mut queue = VecDeque::from([start]);
    reaches[start] = true;
    while let Some(x) = queue.pop_front() {
        for &y in &incoming[x] {
            if !std::mem::replace(&mut reaches[y], true) {
                queue.push_back(y);
            }
        }
    }

    let mut found = Vec::new();
    let mut on_path = vec![false; n];
    let mut path = vec![start];
    on_path[start] = true;
    // explicit stack of (vertex, next out-edge slot, weight so far)
    let mut stack: Vec<(usize, usize, u64)> = vec![(start, 0, 0)];
    while let Some(top) = stack.last_mut() {
        let (x, slot, w) = *top;
        if slot == g.out[x].len() {
            stack.pop();
            path.pop();
            on_path[x] = false;
            continue;
        }
        top.1 += 1;
        let e = g.edges[g.out[x][slot]];
        let w2 = w + e.weight as u64;
        if e.to == start {
            found.push(summary(g, &path, w2));
        } else if !on_path[e.to] && reaches[e.to] {
            on_path[e.to] = true;
            path.push(e.to);
            stack.push((e.to, 0, w2));
        }
    }
    on_path[start] = false;
    Ok(found)
}

/// Smallest slope among the cycles through `v`.
pub fn min_cycle_slope(g: &SlopeGraph, v: &BasisLabel) -> Result<Slope> {
    cycles_through(g, v)?
        .iter()
        .map(|c| c.slope)
        .min()
        .ok_or_else(|| Error::NoCycle(v.to_string()))
}

/// Minimum cycle mean over the whole graph (Karp), `None` if acyclic.
pub fn karp_min_cycle_mean(g: &SlopeGraph) -> Option<Slope> {
    let n = g.vertices.len();
    if n == 0 {
        return None;
    }
    // dist[k][v]: least weight of a k-edge walk ending at v, from any start
    let mut dist: Vec<Vec<Option<i64>>> = vec![vec![Some(0); n]];
    for k in 1..=n {
        let mut row = vec![None; n];
        for e in &g.edges {
            if let Some(dv) = dist[k - 1][e.from] {
                let cand = dv + e.weight as i64;
                if row[e.to].is_none_or(|cur| cand < cur) {
                    row[e.to] = Some(cand);
                }
            }
        }
        dist.push(row);
    }
    (0..n)
        .filter_map(|v| {
            let dn = dist[n][v]?;
            (0..n)
                .filter_map(|k| dist[k][v].map(|dk| Slope::new(dn - dk, (n - k) as i64)))
                .max()
        })
        .min()
}

/// When every vertex has exactly one outgoing and one incoming edge, the graph
/// is a union of disjoint cycles and `F` permutes the basis up to units and
/// powers of `p`; each cycle of length `L` and weight `W` then contributes
/// slope `W/L` with multiplicity `L`.
pub fn cycle_decomposition_polygon(g: &SlopeGraph) -> Result<NewtonPolygon> {
    let n = g.vertices.len();
    let mut indeg = vec![0usize; n];
    for e in &g.edges {
        indeg[e.to] += 1;
    }
    if let Some(v) = (0..n).find(|&v| g.out[v].len() != 1 || indeg[v] != 1) {
        return Err(Error::MalformedDisplay(format!(
            "graph is not a disjoint union of cycles at {} (out {}, in {})",
            g.vertices[v],
            g.out[v].len(),
            indeg[v]
        )));
    }
    let mut seen = vec![false; n];
    let mut parts = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let (mut x, mut len, mut weight) = (s, 0i64, 0i64);
        while !seen[x] {
            seen[x] = true;
            let e = g.edges[g.out[x][0]];
            len += 1;
            weight += e.weight as i64;
            x = e.to;
        }
        parts.push((Slope::new(weight, len), len as usize));
    }
    Ok(NewtonPolygon::from_slopes(parts))
}

/// Graphviz rendering. Vertices are listed in depth-first order from `u₁`
/// (then any others in basis order); weight-0 edges gray, others black and
/// labelled with their weight.
pub fn to_dot(g: &SlopeGraph) -> String {
    let n = g.vertices.len();
    let mut order = g
        .position(&BasisLabel::u(1))
        .map(|s| g.traversal_order(s))
        .unwrap_or_default();
    let listed: HashSet<usize> = order.iter().copied().collect();
    order.extend((0..n).filter(|v| !listed.contains(v)));

    let mut out = String::from("digraph G {\n");
    for &v in &order {
        let _ = writeln!(out, "  \"{}\";", g.vertices[v]);
    }
    for &v in &order {
        for e in g.out_edges(v) {
            let (a, b) = (g.vertices[e.from], g.vertices[e.to]);
            if e.weight == 0 {
                let _ = writeln!(out, "  \"{a}\" -> \"{b}\" [color=gray];");
            } else {
                let _ = writeln!(out, "  \"{a}\" -> \"{b}\" [color=black, label=\"{}\"];", e.weight);
            }
        }
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests;
