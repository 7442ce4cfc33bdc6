use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_potential-play")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn validate_schedule_exit_codes() {
    let ok = cli(&["validate-schedule", "--p", "0.6", "--q", "0.13"]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("admissible"));
    let bad = cli(&["validate-schedule", "--p", "0.6", "--q", "0.2"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(stdout(&bad).contains("inadmissible"));
    assert_eq!(cli(&["validate-schedule", "--p", "0.9", "--mode", "comm"]).status.code(), Some(0));
    assert_eq!(cli(&["validate-schedule", "--p", "0.4", "--mode", "comm"]).status.code(), Some(1));
}

#[test]
fn generated_graphs_verify_and_corruption_is_caught() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("g.txt");
    let f = file.to_str().unwrap();
    let gen = cli(&["gen-graphs", "--n", "6", "--window", "3", "--seed", "4", "--horizon", "30", "--out", f]);
    assert_eq!(gen.status.code(), Some(0));
    assert_eq!(cli(&["verify-graphs", f]).status.code(), Some(0));

    // drop every edge that is not a self-loop from the second half
    let text = fs::read_to_string(&file).unwrap();
    let pruned: String = text
        .lines()
        .filter(|l| {
            let v: Vec<usize> = l.split_whitespace().filter_map(|x| x.parse().ok()).collect();
            l.starts_with('#') || v.len() != 3 || v[0] < 15 || v[1] == v[2]
        })
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&file, pruned).unwrap();
    let out = cli(&["verify-graphs", f]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("not strongly connected"));

    fs::write(&file, "# nodes 2\n0 0 7\n").unwrap();
    let out = cli(&["verify-graphs", f]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let missing = tmp.path().join("nope.txt");
    assert_eq!(cli(&["verify-graphs", missing.to_str().unwrap()]).status.code(), Some(2));
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("tiny.toml");
    fs::write(
        &path,
        "name = \"tiny\"\nalgorithm = \"payoff-two-point\"\nhorizon = 100\nseeds = [1, 2, 3]\n\
         [game]\nkind = \"flow-control\"\nn = 3\n",
    )
    .unwrap();
    path
}

#[test]
fn run_honours_the_output_root_and_summarize_reads_it() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let root = tmp.path().join("out");
    let run = Command::new(env!("CARGO_BIN_EXE_potential-play"))
        .args(["run", cfg.to_str().unwrap()])
        .env("POTENTIAL_PLAY_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(root.join("tiny/summary.csv").exists());
    assert_eq!(fs::read_dir(root.join("tiny/traces")).unwrap().count(), 3);

    let sum = cli(&["summarize", root.to_str().unwrap()]);
    assert_eq!(sum.status.code(), Some(0));
    assert!(stdout(&sum).contains("tiny"));

    let explicit = tmp.path().join("explicit");
    let run = cli(&["run", cfg.to_str().unwrap(), "--output", explicit.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    assert!(explicit.join("config.toml").exists());
}

#[test]
fn inadmissible_config_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("slow.toml");
    fs::write(
        &path,
        "name = \"slow\"\nalgorithm = \"comm\"\nhorizon = 20\nseeds = [1]\n[game]\nkind = \"flow-control\"\nn = 2\n\
         [schedules]\ngamma = { coefficient = 1.0, exponent = 0.4 }\n",
    )
    .unwrap();
    let out = tmp.path().join("o");
    let refused = cli(&["run", path.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(refused.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&refused.stderr).contains("force"));
    let forced = cli(&["run", path.to_str().unwrap(), "--force", "--output", out.to_str().unwrap()]);
    assert_eq!(forced.status.code(), Some(0));
}

#[test]
fn check_game_reports_on_a_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path());
    let out = cli(&["check-game", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
}
