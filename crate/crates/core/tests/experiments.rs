use std::fs;
use std::path::{Path, PathBuf};

use potential_play::experiment::{
    load_config, onset_increases_with_n, parse_config, parse_config_unchecked, read_trace, render_summary,
    run_experiment, run_single, summarize, summarize_traces, Algorithm, ExperimentConfig, GameSpec, InitSpec,
};
use potential_play::Error;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small(name: &str, algorithm: &str, n: usize, horizon: usize) -> ExperimentConfig {
    let mut text = format!(
        "name = \"{name}\"\nalgorithm = \"{algorithm}\"\nhorizon = {horizon}\nseeds = [1, 2]\n\n[game]\nkind = \"flow-control\"\nn = {n}\n"
    );
    text += if algorithm == "comm" {
        "\n[schedules]\ngamma = { coefficient = 40.0, exponent = 0.9 }\n"
    } else {
        "\n[schedules]\ngamma = { coefficient = 16.0, exponent = 0.6 }\nsigma = { coefficient = 0.5, exponent = 0.13 }\n"
    };
    parse_config(&text).unwrap()
}

#[test]
fn shipped_configs_load() {
    let mut seen = 0;
    for dir in [configs_dir(), configs_dir().join("unit-coefficients")] {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "toml") {
                let cfg = load_config(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
                assert_eq!(cfg.horizon, 4000);
                assert_eq!(cfg.seeds.len(), 10);
                seen += 1;
            }
        }
    }
    assert!(seen >= 10);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, alg) in [("c", "comm"), ("p", "payoff-two-point")] {
        let mut cfg = small(name, alg, 4, 300);
        cfg.record_actions = true;
        let (a, b) = (tmp.path().join(format!("{name}-a")), tmp.path().join(format!("{name}-b")));
        run_experiment(&cfg, &a).unwrap();
        run_experiment(&cfg, &b).unwrap();
        for f in ["config.toml", "summary.csv", "traces/seed-1.csv", "traces/seed-2.csv"] {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{name}: {f}");
        }
        assert!(a.join("timing.csv").exists());
    }
}

#[test]
fn snapshot_round_trips_with_resolved_schedules() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = parse_config("name = \"d\"\nalgorithm = \"payoff-one-point\"\nhorizon = 20\nseeds = [3]\n[game]\nkind = \"flow-control\"\nn = 2\n").unwrap();
    run_experiment(&cfg, tmp.path()).unwrap();
    let back = load_config(&tmp.path().join("config.toml")).unwrap();
    assert_eq!(back.gamma(), cfg.gamma());
    assert_eq!(back.schedules.sigma, Some(cfg.sigma()));
    assert_eq!(back, cfg.resolved());
}

#[test]
fn rewards_follow_h_seed() {
    let mut cfg = small("h", "comm", 3, 10);
    let (_, s1) = run_single(&cfg, 1).unwrap();
    let (_, s2) = run_single(&cfg, 2).unwrap();
    assert_eq!((s1.h_seed, s2.h_seed), (Some(1), Some(2)));
    cfg.game = GameSpec::FlowControl { n: 3, h: None, h_seed: Some(99) };
    let (_, s1) = run_single(&cfg, 1).unwrap();
    assert_eq!(s1.h_seed, Some(99));
    cfg.game = GameSpec::FlowControl { n: 3, h: Some(vec![1.0, 0.5, 0.2]), h_seed: None };
    assert_eq!(run_single(&cfg, 1).unwrap().1.h_seed, None);
}

#[test]
fn summary_of_identical_traces_has_zero_spread() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small("same", "comm", 3, 200);
    cfg.seeds = vec![5];
    run_experiment(&cfg, tmp.path()).unwrap();
    let one = tmp.path().join("traces/seed-5.csv");
    let copies: Vec<PathBuf> = (0..4)
        .map(|k| {
            let p = tmp.path().join(format!("copy-{k}.csv"));
            fs::copy(&one, &p).unwrap();
            p
        })
        .collect();
    let g = summarize_traces("same", &copies, Some(200)).unwrap();
    assert_eq!(g.runs, 4);
    assert_eq!(g.final_phi.unwrap().iqr(), 0.0);
    assert_eq!(g.final_grad_norm.unwrap().iqr(), 0.0);
    let t = read_trace(&one).unwrap();
    assert_eq!(g.final_phi.unwrap().median, *t.phi.last().unwrap());
}

#[test]
fn mismatched_headers_are_a_schema_error() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a.csv");
    let b = tmp.path().join("b.csv");
    fs::write(&a, "t,phi,grad_norm_xbar,consensus_err_max,residual_norm\n0,1,1,0,0\n").unwrap();
    fs::write(&b, "t,phi_mu,phi_a,grad_norm_mu,sigma_t,gamma_t\n0,1,1,1,1,1\n").unwrap();
    assert!(matches!(summarize_traces("x", &[a.clone(), b], None), Err(Error::Schema { .. })));
    let c = tmp.path().join("c.csv");
    fs::write(&c, "step,value\n0,1\n").unwrap();
    assert!(matches!(read_trace(&c), Err(Error::Schema { .. })));
    let d = tmp.path().join("d.csv");
    fs::write(&d, "t,phi,grad_norm_xbar\n0,abc,1\n").unwrap();
    assert!(matches!(read_trace(&d), Err(Error::Schema { .. })));
}

#[test]
fn summarize_reads_a_tree_of_experiments() {
    let tmp = tempfile::tempdir().unwrap();
    for n in [2, 4] {
        let cfg = small(&format!("comm-n{n}"), "comm", n, 400);
        run_experiment(&cfg, &tmp.path().join(&cfg.name)).unwrap();
    }
    let groups = summarize(tmp.path()).unwrap();
    assert_eq!(groups.len(), 2);
    assert_eq!(groups[0].n_agents, Some(2));
    assert_eq!(groups[1].algorithm, Some(Algorithm::Comm));
    assert!(onset_increases_with_n(&groups, Algorithm::Comm).is_some());
    assert_eq!(onset_increases_with_n(&groups, Algorithm::PayoffTwoPoint), None);
    let text = render_summary(&groups);
    assert!(text.contains("comm-n2") && text.contains("comm-n4"), "{text}");
    assert_eq!(summarize(&tmp.path().join("comm-n2")).unwrap().len(), 1);
    assert!(summarize(&tmp.path().join("comm-n2/traces")).is_err());
}

#[test]
fn config_errors_carry_context() {
    let bad_h = "name = \"x\"\nalgorithm = \"comm\"\n[game]\nkind = \"flow-control\"\nn = 2\nh = [0.5, 1.5]\n";
    match parse_config(bad_h) {
        Err(Error::Config(m)) => assert!(m.contains("h_2 = 1.5"), "{m}"),
        other => panic!("{other:?}"),
    }
    let typo = "name = \"x\"\nalgorithm = \"comm\"\nhorizn = 5\n[game]\nkind = \"flow-control\"\nn = 2\n";
    assert!(matches!(parse_config(typo), Err(Error::Parse { line: 3, .. })));
    let slow = "name = \"x\"\nalgorithm = \"comm\"\n[game]\nkind = \"flow-control\"\nn = 2\n[schedules]\ngamma = { coefficient = 1.0, exponent = 0.4 }\n";
    assert!(matches!(parse_config(slow), Err(Error::Inadmissible(_))));
    let mut forced = parse_config_unchecked(slow).unwrap();
    forced.force = true;
    forced.validate().unwrap();
    let init = "name = \"x\"\nalgorithm = \"comm\"\n[game]\nkind = \"flow-control\"\nn = 2\n[init]\nkind = \"explicit\"\nvalues = [1.0]\n";
    assert!(matches!(parse_config(init), Err(Error::Config(_))));
    let ok = parse_config(&init.replace("[1.0]", "[1.0, 2.0]")).unwrap();
    assert_eq!(ok.init, InitSpec::Explicit { values: vec![1.0, 2.0] });
}
