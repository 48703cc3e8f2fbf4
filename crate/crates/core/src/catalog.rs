//! A catalog of small latent-variable benchmark graphs. These structures
//! exercise every corner of the toolkit: pure one-factor clusters, chained
//! clusters, spider confounding, measurement cycles, cycles between latent
//! blocks, and the odd-order tensor counterexample. The CLI can emit any of
//! them as graph JSON.

use crate::graph::{DirectedGraph, VertexKind};

fn build(observed: &[&str], latent: &[&str], edges: &[(&str, &str)]) -> DirectedGraph {
    let mut vertices: Vec<(String, VertexKind)> = Vec::new();
    for &o in observed {
        vertices.push((o.to_string(), VertexKind::Observed));
    }
    for &l in latent {
        vertices.push((l.to_string(), VertexKind::Latent));
    }
    let idx = |name: &str| {
        vertices
            .iter()
            .position(|(n, _)| n == name)
            .unwrap_or_else(|| panic!("unknown vertex {name}"))
    };
    let edge_ids: Vec<(usize, usize)> = edges.iter().map(|&(a, b)| (idx(a), idx(b))).collect();
    DirectedGraph::new(vertices, &edge_ids).expect("catalog graph must be valid")
}

fn xs(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("X{i}")).collect()
}

/// One latent with `m` observed children.
pub fn star(m: usize) -> DirectedGraph {
    let obs = xs(m);
    let obs_refs: Vec<&str> = obs.iter().map(|s| s.as_str()).collect();
    let edges: Vec<(&str, &str)> = obs_refs.iter().map(|&x| ("L", x)).collect();
    build(&obs_refs, &["L"], &edges)
}

/// Two latent common causes over six observed children.
pub fn two_factor_six() -> DirectedGraph {
    let obs = xs(6);
    let obs_refs: Vec<&str> = obs.iter().map(|s| s.as_str()).collect();
    let mut edges: Vec<(&str, &str)> = Vec::new();
    for &x in &obs_refs {
        edges.push(("L1", x));
        edges.push(("L2", x));
    }
    build(&obs_refs, &["L1", "L2"], &edges)
}

/// Spider: a hub latent L feeding six children, each child also fed by its
/// own latent which in turn feeds the hub. `({L},{L})` t-separates the
/// children halves even though there is a single hub.
pub fn spider() -> DirectedGraph {
    let obs = xs(6);
    let obs_refs: Vec<&str> = obs.iter().map(|s| s.as_str()).collect();
    let latents = ["L", "L1", "L2", "L3", "L4", "L5", "L6"];
    let mut edges: Vec<(String, String)> = Vec::new();
    for (i, &x) in obs_refs.iter().enumerate() {
        edges.push(("L".into(), x.into()));
        edges.push((format!("L{}", i + 1), x.into()));
        edges.push((format!("L{}", i + 1), "L".into()));
    }
    let edge_refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    build(&obs_refs, &latents, &edge_refs)
}

/// Two one-latent clusters {X1,X2} and {X3,X4} with L1 causing L2.
pub fn two_chained_clusters() -> DirectedGraph {
    build(
        &["X1", "X2", "X3", "X4"],
        &["L1", "L2"],
        &[
            ("L1", "X1"),
            ("L1", "X2"),
            ("L1", "L2"),
            ("L2", "X3"),
            ("L2", "X4"),
        ],
    )
}

/// One hub latent with `m` children and edges in both directions between the
/// hub and every child.
pub fn cyclic_one_factor(m: usize) -> DirectedGraph {
    let obs = xs(m);
    let obs_refs: Vec<&str> = obs.iter().map(|s| s.as_str()).collect();
    let mut edges: Vec<(&str, &str)> = Vec::new();
    for &x in &obs_refs {
        edges.push(("L", x));
        edges.push((x, "L"));
    }
    build(&obs_refs, &["L"], &edges)
}

/// A cyclic cluster {X3,X4,X5} <-> L1 where L1, L2, L3 are jointly confounded
/// by two extra latents L4, L5. The cycle is visible to rank constraints
/// (rank drops below the cluster's apparent latent count) but not to residual
/// independence checks.
pub fn confounded_cyclic_cluster() -> DirectedGraph {
    build(
        &["X1", "X2", "X3", "X4", "X5", "X6", "X7"],
        &["L1", "L2", "L3", "L4", "L5"],
        &[
            ("L4", "L1"),
            ("L4", "L2"),
            ("L4", "L3"),
            ("L5", "L1"),
            ("L5", "L2"),
            ("L5", "L3"),
            ("L2", "X1"),
            ("L2", "X2"),
            ("L3", "X6"),
            ("L3", "X7"),
            ("L1", "X3"),
            ("L1", "X4"),
            ("L1", "X5"),
            ("X3", "L1"),
            ("X4", "L1"),
            ("X5", "L1"),
        ],
    )
}

/// A cyclic cluster {X3,X4,X5} <-> L1 where L1 is a collider between L2 and
/// L3. Residual independence holds for the cluster, so only the rank recheck
/// of the causally latest block exposes the cycle.
pub fn collider_cyclic_cluster() -> DirectedGraph {
    build(
        &["X1", "X2", "X3", "X4", "X5", "X6", "X7"],
        &["L1", "L2", "L3"],
        &[
            ("L2", "L1"),
            ("L3", "L1"),
            ("L2", "X1"),
            ("L2", "X2"),
            ("L3", "X6"),
            ("L3", "X7"),
            ("L1", "X3"),
            ("L1", "X4"),
            ("L1", "X5"),
            ("X3", "L1"),
            ("X4", "L1"),
            ("X5", "L1"),
        ],
    )
}

/// Two two-latent blocks {L1,L2} and {L3,L4} with distinct children and a
/// cycle between the blocks (L2 -> L4, L3 -> L1), all fed by a root latent L5.
pub fn two_block_cycle() -> DirectedGraph {
    let mut edges: Vec<(&str, &str)> = vec![
        ("L5", "L1"),
        ("L5", "L2"),
        ("L5", "L3"),
        ("L5", "L4"),
        ("L5", "X9"),
        ("L5", "X10"),
        ("L2", "L4"),
        ("L3", "L1"),
    ];
    for x in ["X1", "X2", "X3", "X4"] {
        edges.push(("L1", x));
        edges.push(("L2", x));
    }
    for x in ["X5", "X6", "X7", "X8"] {
        edges.push(("L3", x));
        edges.push(("L4", x));
    }
    build(
        &["X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9", "X10"],
        &["L1", "L2", "L3", "L4", "L5"],
        &edges,
    )
}

/// Like [`two_block_cycle`] but the root latent L5 feeds only one latent of
/// the first block, so no singleton root exists once L5 is extracted.
pub fn partial_root_block_cycle() -> DirectedGraph {
    let mut edges: Vec<(&str, &str)> = vec![
        ("L5", "L1"),
        ("L5", "X9"),
        ("L5", "X10"),
        ("L1", "L3"),
        ("L4", "L2"),
    ];
    for x in ["X1", "X2", "X3", "X4"] {
        edges.push(("L1", x));
        edges.push(("L2", x));
    }
    for x in ["X5", "X6", "X7", "X8"] {
        edges.push(("L3", x));
        edges.push(("L4", x));
    }
    build(
        &["X1", "X2", "X3", "X4", "X5", "X6", "X7", "X8", "X9", "X10"],
        &["L1", "L2", "L3", "L4", "L5"],
        &edges,
    )
}

/// Four two-latent blocks with two separate block cycles
/// ({L3,L4} <-> {L5,L6} and {L7,L8} <-> {L9,L10}), a root latent L1 feeding
/// everything, and a sink latent L2 fed by every block.
///
/// Observed children: X1,X2 under L1; X3..X6 under {L3,L4}; X7..X10 under
/// {L5,L6}; X11..X14 under {L7,L8}; X15..X18 under {L9,L10}; X19,X20 under L2.
pub fn double_block_cycle() -> DirectedGraph {
    let obs = xs(20);
    let obs_refs: Vec<&str> = obs.iter().map(|s| s.as_str()).collect();
    let latents = ["L1", "L2", "L3", "L4", "L5", "L6", "L7", "L8", "L9", "L10"];
    let mut edges: Vec<(String, String)> = Vec::new();
    for l in &latents[2..] {
        edges.push(("L1".into(), (*l).into()));
        edges.push(((*l).into(), "L2".into()));
    }
    edges.push(("L1".into(), "X1".into()));
    edges.push(("L1".into(), "X2".into()));
    edges.push(("L2".into(), "X19".into()));
    edges.push(("L2".into(), "X20".into()));
    let blocks: [(&str, &str, [usize; 4]); 4] = [
        ("L3", "L4", [3, 4, 5, 6]),
        ("L5", "L6", [7, 8, 9, 10]),
        ("L7", "L8", [11, 12, 13, 14]),
        ("L9", "L10", [15, 16, 17, 18]),
    ];
    for (a, b, children) in blocks {
        for c in children {
            edges.push((a.into(), format!("X{c}")));
            edges.push((b.into(), format!("X{c}")));
        }
    }
    // the block cycles
    edges.push(("L4".into(), "L6".into()));
    edges.push(("L5".into(), "L3".into()));
    edges.push(("L8".into(), "L10".into()));
    edges.push(("L9".into(), "L7".into()));
    let edge_refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    build(&obs_refs, &latents, &edge_refs)
}

/// Four single-latent clusters in a causal chain L1 -> L2 -> L3 -> L4 (with
/// all forward edges), where the last two clusters have measurement cycles:
/// the children of L3 and L4 also cause their own latent.
pub fn four_cluster_chain_cyclic() -> DirectedGraph {
    let obs = xs(12);
    let obs_refs: Vec<&str> = obs.iter().map(|s| s.as_str()).collect();
    let mut edges: Vec<(String, String)> = vec![
        ("L1".into(), "L2".into()),
        ("L1".into(), "L3".into()),
        ("L1".into(), "L4".into()),
        ("L2".into(), "L3".into()),
        ("L2".into(), "L4".into()),
        ("L3".into(), "L4".into()),
    ];
    for (l, children, cyclic) in [
        ("L1", [1, 2, 3], false),
        ("L2", [4, 5, 6], false),
        ("L3", [7, 8, 9], true),
        ("L4", [10, 11, 12], true),
    ] {
        for c in children {
            edges.push((l.into(), format!("X{c}")));
            if cyclic {
                edges.push((format!("X{c}"), l.into()));
            }
        }
    }
    let edge_refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    build(&obs_refs, &["L1", "L2", "L3", "L4"], &edge_refs)
}

/// A two-latent cluster {X1..X4} under {L1,L2} followed by two cyclic
/// single-latent clusters {X5,X6,X7} <-> L3 and {X8,X9,X10} <-> L4, with
/// L1,L2 -> L3,L4 and L3 -> L4.
pub fn three_cluster_two_factor_cyclic() -> DirectedGraph {
    let obs = xs(10);
    let obs_refs: Vec<&str> = obs.iter().map(|s| s.as_str()).collect();
    let mut edges: Vec<(String, String)> = vec![
        ("L1".into(), "L3".into()),
        ("L1".into(), "L4".into()),
        ("L2".into(), "L3".into()),
        ("L2".into(), "L4".into()),
        ("L3".into(), "L4".into()),
    ];
    for c in 1..=4 {
        edges.push(("L1".into(), format!("X{c}")));
        edges.push(("L2".into(), format!("X{c}")));
    }
    for c in 5..=7 {
        edges.push(("L3".into(), format!("X{c}")));
        edges.push((format!("X{c}"), "L3".into()));
    }
    for c in 8..=10 {
        edges.push(("L4".into(), format!("X{c}")));
        edges.push((format!("X{c}"), "L4".into()));
    }
    let edge_refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    build(&obs_refs, &["L1", "L2", "L3", "L4"], &edge_refs)
}

/// Two exogenous latents each with a pair of observed children, both feeding
/// a third latent with two more children: L1 -> {X1, X3, L3},
/// L2 -> {X2, X4, L3}, L3 -> {X5, X6}.
///
/// On the paired index sets ({X5,X6}, {X3,X4}, {X1,X2}) every 3-trek system
/// has a sided intersection, yet the order-3 cumulant subtensor has a nonzero
/// combinatorial determinant for exactly one rotation of the axis order.
pub fn latent_vee() -> DirectedGraph {
    build(
        &["X1", "X2", "X3", "X4", "X5", "X6"],
        &["L1", "L2", "L3"],
        &[
            ("L1", "X1"),
            ("L1", "X3"),
            ("L1", "L3"),
            ("L2", "X2"),
            ("L2", "X4"),
            ("L2", "L3"),
            ("L3", "X5"),
            ("L3", "X6"),
        ],
    )
}

/// Catalog lookup by kebab-case name, for the CLI.
pub fn by_name(name: &str) -> Option<DirectedGraph> {
    Some(match name {
        "star3" => star(3),
        "star4" => star(4),
        "two-factor-six" => two_factor_six(),
        "spider" => spider(),
        "two-chained-clusters" => two_chained_clusters(),
        "cyclic-one-factor" => cyclic_one_factor(6),
        "confounded-cyclic-cluster" => confounded_cyclic_cluster(),
        "collider-cyclic-cluster" => collider_cyclic_cluster(),
        "two-block-cycle" => two_block_cycle(),
        "partial-root-block-cycle" => partial_root_block_cycle(),
        "double-block-cycle" => double_block_cycle(),
        "four-cluster-chain-cyclic" => four_cluster_chain_cyclic(),
        "three-cluster-two-factor-cyclic" => three_cluster_two_factor_cyclic(),
        "latent-vee" => latent_vee(),
        _ => return None,
    })
}

/// Names accepted by [`by_name`].
pub const CATALOG_NAMES: &[&str] = &[
    "star3",
    "star4",
    "two-factor-six",
    "spider",
    "two-chained-clusters",
    "cyclic-one-factor",
    "confounded-cyclic-cluster",
    "collider-cyclic-cluster",
    "two-block-cycle",
    "partial-root-block-cycle",
    "double-block-cycle",
    "four-cluster-chain-cyclic",
    "three-cluster-two-factor-cyclic",
    "latent-vee",
];
