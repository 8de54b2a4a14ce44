use std::collections::{BTreeMap, BTreeSet};
use std::hash::RandomState;
use std::sync::Arc;

use petgraph::graph::{DiGraph, NodeIndex};
use proptest::prelude::*;

use super::*;
use crate::displayzoo::{
    deformation_display, expected_module, module_m, module_n, supersingular_module, DeformationForm, DeformationPoint,
};
use crate::fcrystal::newton_slopes;
use crate::wittring::RingContext;

fn ctx(p: u64, d: usize, n: u32) -> Arc<RingContext> {
    Arc::new(RingContext::new(p, d, n).unwrap())
}

fn u1() -> BasisLabel {
    BasisLabel::u(1)
}

fn shape(cycles: &[CycleSummary]) -> Vec<(usize, u64)> {
    cycles.iter().map(|c| (c.length, c.weight)).collect()
}

fn names(vs: &[BasisLabel]) -> Vec<String> {
    vs.iter().map(ToString::to_string).collect()
}

fn deformation(c: &Arc<RingContext>, n: u32, set: &[u32], form: DeformationForm) -> DieudonneDisplay {
    let assignments: Vec<_> = set.iter().map(|&k| (k, c.field().one())).collect();
    let pt = DeformationPoint::from_assignments(c, n, &assignments).unwrap();
    deformation_display(c, &pt, form).unwrap()
}

/// Cycles through `v` via petgraph's simple-path enumeration: one cycle per
/// out-edge `v → w` and simple path `w ⇝ v` avoiding `v`'s other out-edges.
fn oracle_cycles(g: &SlopeGraph, v: usize) -> BTreeSet<(Vec<usize>, u64)> {
    let n = g.vertices().len();
    let mut pg: DiGraph<(), u32> = DiGraph::new();
    let nodes: Vec<NodeIndex> = (0..n).map(|_| pg.add_node(())).collect();
    let weight: BTreeMap<(usize, usize), u64> = g.edges().iter().map(|e| ((e.from, e.to), e.weight as u64)).collect();
    for e in g.edges().iter().filter(|e| e.from != v) {
        pg.add_edge(nodes[e.from], nodes[e.to], e.weight);
    }
    let mut out = BTreeSet::new();
    for e in g.edges().iter().filter(|e| e.from == v) {
        if e.to == v {
            out.insert((vec![v], e.weight as u64));
            continue;
        }
        for path in
            petgraph::algo::all_simple_paths::<Vec<NodeIndex>, _, RandomState>(&pg, nodes[e.to], nodes[v], 0, None)
        {
            let mut cyc = vec![v];
            cyc.extend(path[..path.len() - 1].iter().map(|x| x.index()));
            let w = (0..cyc.len())
                .map(|i| weight[&(cyc[i], cyc[(i + 1) % cyc.len()])])
                .sum();
            out.insert((cyc, w));
        }
    }
    out
}

fn brute_min_mean(g: &SlopeGraph) -> Option<Slope> {
    (0..g.vertices().len())
        .filter_map(|v| min_cycle_slope(g, &g.vertices()[v]).ok())
        .min()
}

#[test]
fn m7_is_one_fourteen_cycle() {
    let c = ctx(3, 1, 40);
    let g = build_graph(&module_m(&c, 7).unwrap());
    assert_eq!(g.vertices().len(), 14);
    assert_eq!(g.edges().len(), 14);
    assert_eq!(g.edges().iter().filter(|e| e.weight == 1).count(), 7);
    assert!(g.sinks().is_empty());
    let cycles = cycles_through(&g, &u1()).unwrap();
    assert_eq!(shape(&cycles), vec![(14, 7)]);
    assert_eq!(cycles[0].slope, Slope::new(1, 2));
    assert_eq!(
        names(&cycles[0].vertices),
        ["u1", "v7", "u6", "v5", "u4", "v3", "u2", "v1", "u7", "v6", "u5", "v4", "u3", "v2"]
    );
    assert_eq!(
        cycle_decomposition_polygon(&g).unwrap(),
        NewtonPolygon::isoclinic(Slope::new(1, 2), 14)
    );
}

#[test]
fn m7_dot_follows_the_cycle() {
    let c = ctx(3, 1, 40);
    let dot = to_dot(&build_graph(&module_m(&c, 7).unwrap()));
    let vertex_lines: Vec<&str> = dot.lines().filter(|l| l.ends_with("\";")).collect();
    let order: Vec<&str> = vertex_lines
        .iter()
        .map(|l| l.trim().trim_end_matches(';').trim_matches('"'))
        .collect();
    assert_eq!(
        order,
        ["u1", "v7", "u6", "v5", "u4", "v3", "u2", "v1", "u7", "v6", "u5", "v4", "u3", "v2"]
    );
    assert_eq!(dot.matches(" -> ").count(), 14);
    assert!(dot.contains("\"u1\" -> \"v7\" [color=gray];"));
    assert!(dot.contains("\"u6\" -> \"v5\" [color=black, label=\"1\"];"));
    assert!(dot.starts_with("digraph G {\n") && dot.ends_with("}\n"));
}

#[test]
fn m2_splits_into_two_two_cycles() {
    let c = ctx(3, 1, 16);
    let g = build_graph(&module_m(&c, 2).unwrap());
    assert_eq!(
        cycle_decomposition_polygon(&g).unwrap(),
        newton_slopes(&module_m(&c, 2).unwrap()).unwrap()
    );
    let through_u1 = cycles_through(&g, &u1()).unwrap();
    assert_eq!(shape(&through_u1), vec![(2, 0)]);
    assert_eq!(shape(&cycles_through(&g, &BasisLabel::v(1)).unwrap()), vec![(2, 2)]);
    assert_eq!(karp_min_cycle_mean(&g), Some(Slope::new(0, 1)));
}

#[test]
fn small_module_cycle_slopes() {
    let c = ctx(3, 1, 24);
    let g3 = build_graph(&module_m(&c, 3).unwrap());
    assert_eq!(shape(&cycles_through(&g3, &u1()).unwrap()), vec![(6, 3)]);
    assert_eq!(min_cycle_slope(&g3, &u1()).unwrap(), Slope::new(1, 2));
    let g4 = build_graph(&module_m(&c, 4).unwrap());
    assert_eq!(min_cycle_slope(&g4, &u1()).unwrap(), Slope::new(1, 4));
    assert_eq!(karp_min_cycle_mean(&g4), Some(Slope::new(1, 4)));
    let gn = build_graph(&module_n(&c));
    assert!(matches!(min_cycle_slope(&gn, &u1()), Err(Error::OutOfRange(_))));
    assert_eq!(min_cycle_slope(&gn, &BasisLabel::u(0)).unwrap(), Slope::new(1, 2));
}

#[test]
fn cycle_decomposition_matches_charpoly_on_zoo() {
    let c = ctx(2, 1, 56);
    for m in 2..=12 {
        let d = module_m(&c, m).unwrap();
        assert_eq!(
            cycle_decomposition_polygon(&build_graph(&d)).unwrap(),
            newton_slopes(&d).unwrap(),
            "M({m})"
        );
    }
    for n in 3..=8 {
        for j in 1..=n / 2 {
            let d = expected_module(&c, n, j).unwrap();
            assert_eq!(
                cycle_decomposition_polygon(&build_graph(&d)).unwrap(),
                newton_slopes(&d).unwrap()
            );
        }
    }
}

#[test]
fn cycle_decomposition_needs_a_permutation_graph() {
    let c = ctx(3, 1, 20);
    let g = build_graph(&deformation(&c, 3, &[2], DeformationForm::Polarized));
    assert!(matches!(
        cycle_decomposition_polygon(&g),
        Err(Error::MalformedDisplay(_))
    ));
}

#[test]
fn n3_s2_adds_gray_edge_to_u1() {
    let c = ctx(3, 1, 20);
    let d = deformation(&c, 3, &[2], DeformationForm::Polarized);
    let g = build_graph(&d);
    assert_eq!(g.edge(&BasisLabel::v(3), &u1()).map(|e| e.weight), Some(0));
    let base = build_graph(&supersingular_module(&c, 3).unwrap());
    // the s₂ term in F u₂ contributes an extra black edge u₂ → v₂
    assert_eq!(g.edge(&BasisLabel::u(2), &BasisLabel::v(2)).map(|e| e.weight), Some(1));
    let all = cycles_through(&g, &u1()).unwrap();
    assert_eq!(shape(&all), vec![(2, 0), (6, 3), (4, 1)]);
    let gamma_s = g.without_extra_black_edges(&base);
    assert_eq!(shape(&cycles_through(&gamma_s, &u1()).unwrap()), vec![(2, 0), (6, 3)]);
    assert_eq!(
        min_cycle_slope(&g, &u1()).unwrap(),
        min_cycle_slope(&gamma_s, &u1()).unwrap()
    );
    assert!(to_dot(&g).contains("\"v3\" -> \"u1\" [color=gray];"));
}

#[test]
fn zero_deformation_dot_equals_supersingular() {
    let c = ctx(2, 1, 30);
    for n in 3..=7 {
        let d = deformation(&c, n, &[], DeformationForm::Polarized);
        assert_eq!(
            to_dot(&build_graph(&d)),
            to_dot(&build_graph(&supersingular_module(&c, n).unwrap()))
        );
    }
}

#[test]
fn short_cycles_for_even_coordinates() {
    // a nonzero s_{2j} (odd n) yields a cycle of length n+1−2j and weight (n−1)/2−j
    let c = ctx(3, 1, 40);
    for n in [3u32, 5, 7] {
        for j in 1..=n / 2 {
            let g = build_graph(&deformation(&c, n, &[2 * j], DeformationForm::Polarized));
            let cycles = cycles_through(&g, &u1()).unwrap();
            let want = ((n + 1 - 2 * j) as usize, ((n - 1) / 2 - j) as u64);
            assert!(shape(&cycles).contains(&want), "n={n} j={j}: {:?}", shape(&cycles));
        }
    }
    let g = build_graph(&deformation(&c, 5, &[4], DeformationForm::Polarized));
    assert_eq!(min_cycle_slope(&g, &u1()).unwrap(), Slope::new(0, 1));
}

#[test]
fn cycle_json_shape() {
    let c = ctx(3, 1, 16);
    let g = build_graph(&module_m(&c, 2).unwrap());
    let j = serde_json::to_value(cycles_through(&g, &u1()).unwrap()[0].to_json()).unwrap();
    assert_eq!(
        j,
        serde_json::json!({"vertices": ["u1", "v2"], "length": 2, "weight": 0, "slope": "0"})
    );
}

#[test]
fn rejects_dangling_edges() {
    assert!(SlopeGraph::new(
        vec![u1()],
        vec![Edge {
            from: 0,
            to: 3,
            weight: 0
        }]
    )
    .is_err());
}

fn arb_graph() -> impl Strategy<Value = SlopeGraph> {
    (2usize..=9).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n, 0u32..3), 0..(3 * n)).prop_map(move |raw| {
            let vertices: Vec<BasisLabel> = (0..n as u32).map(BasisLabel::u).collect();
            let mut seen = BTreeSet::new();
            let edges = raw
                .into_iter()
                .filter(|&(a, b, _)| seen.insert((a, b)))
                .map(|(from, to, weight)| Edge { from, to, weight })
                .collect();
            SlopeGraph::new(vertices, edges).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn dfs_matches_simple_path_oracle(g in arb_graph(), start in 0usize..9) {
        let v = start % g.vertices().len();
        let ours: BTreeSet<(Vec<usize>, u64)> = cycles_through(&g, &g.vertices()[v])
            .unwrap()
            .into_iter()
            .map(|c| (c.vertices.iter().map(|l| g.position(l).unwrap()).collect(), c.weight))
            .collect();
        let count = cycles_through(&g, &g.vertices()[v]).unwrap().len();
        prop_assert_eq!(count, ours.len(), "duplicates");
        prop_assert_eq!(ours, oracle_cycles(&g, v));
    }

    #[test]
    fn karp_matches_cycle_enumeration(g in arb_graph()) {
        prop_assert_eq!(karp_min_cycle_mean(&g), brute_min_mean(&g));
    }

    #[test]
    fn cycles_are_deterministic_and_bounded(g in arb_graph()) {
        let v = g.vertices()[0];
        let a = cycles_through(&g, &v).unwrap();
        prop_assert_eq!(&a, &cycles_through(&g, &v).unwrap());
        for c in &a {
            prop_assert!(c.length >= 1);
            prop_assert!(c.slope >= Slope::new(0, 1) && c.slope <= Slope::new(2, 1));
            prop_assert_eq!(c.vertices[0], v);
        }
    }
}
