use std::io::BufReader;

use potential_play::graph::{
    read_schedule, verify_graph_sequence, verify_s_strong_connectivity, write_schedule, Digraph, GraphSchedule,
    PeriodicSchedule, RandomSConnected,
};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn random_schedules_are_s_strongly_connected(n in 1usize..15, s in 1usize..7, density in 0.0f64..0.5, seed in any::<u64>()) {
        let sched = RandomSConnected::new(n, s, density, seed).unwrap();
        let report = verify_s_strong_connectivity(&sched, 20 * s).unwrap();
        prop_assert!(report.passed());
        for t in 0..3 * s {
            let g = sched.graph(t);
            prop_assert!((0..n).all(|i| g.has_edge(i, i)));
        }
    }

    #[test]
    fn text_round_trip(n in 1usize..8, s in 1usize..5, seed in any::<u64>()) {
        let sched = RandomSConnected::new(n, s, 0.3, seed).unwrap();
        let mut buf = Vec::new();
        write_schedule(&sched, 4 * s, &mut buf).unwrap();
        let parsed = read_schedule(BufReader::new(&buf[..])).unwrap();
        prop_assert_eq!(parsed.n_nodes, n);
        prop_assert_eq!(parsed.window, Some(s));
        for (t, g) in parsed.graphs.iter().enumerate() {
            prop_assert_eq!(g, &sched.graph(t));
        }
    }
}

#[test]
fn missing_backbone_is_reported_at_first_bad_window() {
    // 0→1 then 1→0, then two slots with self-loops only
    let forward = Digraph::from_edges(2, [(0, 1)]).unwrap();
    let back = Digraph::from_edges(2, [(1, 0)]).unwrap();
    let idle = Digraph::self_loops(2).unwrap();
    let seq = vec![forward.clone(), back.clone(), idle.clone(), idle, forward, back];
    let report = verify_graph_sequence(&seq, 2).unwrap();
    assert_eq!(report.first_violation, Some(1));
    assert!(verify_graph_sequence(&seq, 4).unwrap().passed());
    let periodic = PeriodicSchedule::new(seq, 4).unwrap();
    assert!(verify_s_strong_connectivity(&periodic, 24).unwrap().passed());
}
