use std::path::Path;
use std::process::{Command, Output};

use craftplan::config::RunConfig;
use craftplan_core::agent::Event;
use craftplan_core::planner::oracle_plan;
use craftplan_core::plan_dsl::render_plan;

fn craftplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_craftplan")).args(args).output().unwrap()
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn write_stone_sword_plan(dir: &Path, drop_item: Option<&str>) -> String {
    let data = craftplan::bench::load_data(&RunConfig::default()).unwrap();
    let task = data.task("CraftStoneSword").unwrap();
    let mut plan = oracle_plan(task, &data.game, &data.game.reset(0, task).unwrap()).unwrap();
    if let Some(item) = drop_item {
        plan.steps.retain(|s| s.primary().0 != item);
    }
    let path = dir.join("plan.txt");
    std::fs::write(&path, render_plan(&plan)).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn plan_render_parse_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_stone_sword_plan(dir.path(), None);
    let out = craftplan(&["plan", "render", &file]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert_eq!(text(&out.stdout), std::fs::read_to_string(&file).unwrap());

    let out = craftplan(&["plan", "parse", &file]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["steps"].as_array().unwrap().len(), 7);

    let out = craftplan(&["plan", "validate", &file, "--task", "CraftStoneSword"]);
    assert!(out.status.success(), "{}", text(&out.stdout));
}

#[test]
fn validate_reports_the_missing_tool() {
    let dir = tempfile::tempdir().unwrap();
    let file = write_stone_sword_plan(dir.path(), Some("wooden_pickaxe"));
    let out = craftplan(&["plan", "validate", &file, "--task", "CraftStoneSword"]);
    assert_eq!(out.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["ok"], false);
    assert!(v["reason"].as_str().unwrap().contains("wooden_pickaxe"));
}

#[test]
fn syntax_errors_carry_a_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "def f(inventory = {}):\n    dig({'log':3}, null);\n    return 'log'\n").unwrap();
    let out = craftplan(&["plan", "parse", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("bad.txt:2:5"), "{}", text(&out.stderr));
}

#[test]
fn suite_run_reads_config_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "tasks = [\"CraftPlanks\", \"CraftStick\"]\nepisodes = 50\nseed_base = 3\noutput_dir = {:?}\n\n[world]\nsuccess_override = 1.0\n",
            out_dir.to_str().unwrap()
        ),
    )
    .unwrap();
    let out = craftplan(&["suite", "run", "--config", cfg.to_str().unwrap(), "--episodes", "4"]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let mut rdr = csv::Reader::from_path(out_dir.join("report.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(&r[2], "4");
        assert_eq!(&r[3], "100.00");
    }
    assert!(out_dir.join("report.md").exists());
    assert_eq!(std::fs::read_to_string(out_dir.join("results.jsonl")).unwrap().lines().count(), 8 + 2);
}

#[test]
fn json_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let cfg = RunConfig {
        episodes: 7,
        tasks: vec!["CraftStick".into()],
        ..RunConfig::default()
    };
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(RunConfig::load(&path).unwrap(), cfg);
    let toml_path = dir.path().join("run.toml");
    std::fs::write(&toml_path, toml::to_string(&cfg).unwrap()).unwrap();
    assert_eq!(RunConfig::load(&toml_path).unwrap(), cfg);
}

#[test]
fn bad_config_aborts_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, format!("episodes = 0\noutput_dir = {:?}\n", out_dir.to_str().unwrap())).unwrap();
    let out = craftplan(&["suite", "run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("episodes"));
    assert!(!out_dir.exists());

    std::fs::write(&cfg, "episodes = 3\nunknown_field = 1\n").unwrap();
    assert_eq!(craftplan(&["suite", "run", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
    let out = craftplan(&["suite", "run", "--only", "NoSuchTask", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_dir.exists());
}

#[test]
fn episode_run_logs_events() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let out = craftplan(&["episode", "run", "--task", "CraftStick", "--seed", "2", "--events", log.to_str().unwrap()]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let events: Vec<Event> = std::fs::read_to_string(&log).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(matches!(events.first(), Some(Event::Plan { round: 0, .. })));
    assert!(matches!(events.last(), Some(Event::Finish { .. })));
    let result: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(result["task_id"], "CraftStick");
}

#[test]
fn hps_ablation_needs_a_model() {
    let out = craftplan(&["ablate", "selector", "--selectors", "hps", "--episodes", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("checkpoint"), "{}", text(&out.stderr));
}

#[test]
fn trained_checkpoint_feeds_the_selector_ablation() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("model.json");
    let traj = dir.path().join("traj.jsonl");
    let out = craftplan(&[
        "selector",
        "train",
        "--parallel-world",
        "--episodes",
        "20",
        "--model-out",
        model.to_str().unwrap(),
        "--trajectories",
        traj.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(craftplan::bench::load_model(&model).unwrap().trained);
    assert!(std::fs::read_to_string(&traj).unwrap().lines().count() >= 20);

    let out_dir = dir.path().join("ab");
    let out = craftplan(&[
        "ablate",
        "selector",
        "--model",
        model.to_str().unwrap(),
        "--episodes",
        "5",
        "--goals",
        "2,3",
        "--budgets",
        "800,4000",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let rows = csv::Reader::from_path(out_dir.join("ablate_selector.csv")).unwrap().records().count();
    assert_eq!(rows, 4 * 2 * 2);
}

#[test]
fn rounds_ablation_writes_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = craftplan(&[
        "ablate",
        "rounds",
        "--only",
        "CraftStick",
        "--episodes",
        "5",
        "--planner",
        "faulty",
        "--fault-p",
        "0.5",
        "--rounds",
        "0,3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", text(&out.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("ablate_rounds.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["meta_group", "episodes", "rounds_0", "rounds_3", "delta"]);
    assert_eq!(rdr.records().count(), 2);
}
