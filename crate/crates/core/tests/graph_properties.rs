use dtadag_core::{Dag, Node, NodeRole};
use proptest::prelude::*;

/// A DAG over `n` nodes from an edge mask over the pairs (i, j), i < j.
fn dag_from_mask(n: usize, mask: u64) -> Dag {
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let mut edges = Vec::new();
    let mut bit = 0;
    for i in 0..n {
        for j in i + 1..n {
            if mask >> bit & 1 == 1 {
                edges.push((names[i].clone(), names[j].clone()));
            }
            bit += 1;
        }
    }
    let nodes = names
        .iter()
        .map(|s| Node::new(s.clone(), NodeRole::Other, true))
        .collect();
    Dag::new(nodes, &edges).unwrap()
}

fn arb_query() -> impl Strategy<Value = (Dag, String, String, Vec<String>)> {
    (3usize..=7, any::<u64>(), any::<u64>()).prop_map(|(n, edges, picks)| {
        let dag = dag_from_mask(n, edges);
        let x = (picks % n as u64) as usize;
        let mut y = ((picks >> 8) % n as u64) as usize;
        if y == x {
            y = (x + 1) % n;
        }
        let z = (0..n)
            .filter(|&v| v != x && v != y && picks >> (16 + v) & 1 == 1)
            .map(|v| format!("V{v}"))
            .collect();
        (dag, format!("V{x}"), format!("V{y}"), z)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn d_separation_is_symmetric((dag, x, y, z) in arb_query()) {
        let z: Vec<&str> = z.iter().map(String::as_str).collect();
        prop_assert_eq!(dag.d_separated(&[&x], &[&y], &z).unwrap(), dag.d_separated(&[&y], &[&x], &z).unwrap());
    }

    #[test]
    fn d_separation_means_every_path_blocked((dag, x, y, z) in arb_query()) {
        let z: Vec<&str> = z.iter().map(String::as_str).collect();
        let separated = dag.d_separated(&[&x], &[&y], &z).unwrap();
        let paths = dag.paths_given(&x, &y, &z).unwrap();
        prop_assert_eq!(separated, paths.iter().all(|p| !p.is_open()));
        prop_assert_eq!(dag.open_paths(&x, &y, &z).unwrap().len(), paths.iter().filter(|p| p.is_open()).count());
    }

    #[test]
    fn adjacent_nodes_are_never_separated((dag, x, y, z) in arb_query()) {
        let z: Vec<&str> = z.iter().map(String::as_str).collect();
        if dag.has_edge(&x, &y) || dag.has_edge(&y, &x) {
            prop_assert!(!dag.d_separated(&[&x], &[&y], &z).unwrap());
        }
    }

    #[test]
    fn syntax_round_trips(n in 2usize..=7, edges in any::<u64>()) {
        let dag = dag_from_mask(n, edges);
        prop_assert_eq!(Dag::parse(&dag.to_syntax()).unwrap(), dag);
    }

    #[test]
    fn topological_order_respects_edges(n in 2usize..=7, edges in any::<u64>()) {
        let dag = dag_from_mask(n, edges);
        let order = dag.topological_order();
        let pos = |s: &str| order.iter().position(|o| *o == s).unwrap();
        for (a, b) in dag.edges() {
            prop_assert!(pos(a) < pos(b));
        }
    }

    #[test]
    fn adjustment_sets_close_every_backdoor(n in 3usize..=6, edges in any::<u64>()) {
        let dag = dag_from_mask(n, edges);
        let (x, y) = ("V1", &format!("V{}", n - 1));
        if let Ok(sets) = dag.minimal_adjustment_sets(x, y) {
            for set in sets.sets() {
                let z: Vec<&str> = set.iter().map(String::as_str).collect();
                prop_assert!(dag.backdoor_paths(x, y, &z).unwrap().iter().all(|p| !p.is_open()), "{:?}", set);
            }
        }
    }
}
