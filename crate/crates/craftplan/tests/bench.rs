use std::sync::Arc;

use craftplan::bench::{self, BenchError, Harness};
use craftplan::config::{PlannerKind, RunConfig};
use craftplan::data::Transcript;
use craftplan::report::{self, aggregate, cells, CSV_HEADER};
use craftplan_core::agent::LoopMode;
use craftplan_core::plan_dsl::{build_goal_graph, extract_plan_text, parse_plan};
use craftplan_core::planner::FaultConfig;
use craftplan_core::selector::{Selector, SelectorKind};

fn fixture() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/golden_diamond.json")
}

#[test]
fn sure_skills_give_a_clean_hundred() {
    let mut cfg = RunConfig {
        tasks: vec!["CraftPlanks".into()],
        ..RunConfig::default()
    };
    cfg.world.success_override = Some(1.0);
    let run = bench::run_suite(&cfg).unwrap();
    let rows = aggregate(&run.tasks, &run.results);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].episodes, 30);
    assert_eq!(rows[0].success_rate, 100.0);
    assert_eq!(rows[0].success_std, 0.0);
}

#[test]
fn success_rate_is_the_plain_mean() {
    let cfg = RunConfig {
        tasks: vec!["CraftStick".into(), "CraftStoneSword".into()],
        episodes: 25,
        planner: PlannerKind::Faulty,
        faults: FaultConfig::uniform(0.4, 1),
        ..RunConfig::default()
    };
    let run = bench::run_suite(&cfg).unwrap();
    for row in aggregate(&run.tasks, &run.results) {
        let mine: Vec<_> = run.results.iter().filter(|r| r.task_id == row.task_id).collect();
        let wins = mine.iter().filter(|r| r.success).count();
        assert_eq!(row.success_rate, 100.0 * wins as f64 / mine.len() as f64);
        assert!((0.0..=100.0).contains(&row.success_rate));
        assert!(row.success_std >= 0.0);
        assert!(row.ci95_low <= row.success_rate && row.success_rate <= row.ci95_high);
    }
}

#[test]
fn csv_and_markdown_cells_agree() {
    let cfg = RunConfig {
        tasks: vec!["CraftStick".into(), "MineDiamond".into()],
        episodes: 6,
        ..RunConfig::default()
    };
    let run = bench::run_suite(&cfg).unwrap();
    let rows = aggregate(&run.tasks, &run.results);
    let dir = tempfile::tempdir().unwrap();
    report::write_suite(dir.path(), &run.tasks, &run.results, &rows).unwrap();

    let mut rdr = csv::Reader::from_path(dir.path().join("report.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER.to_vec());
    let csv_rows: Vec<Vec<String>> = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    let md_rows: Vec<Vec<String>> = md
        .lines()
        .skip(2)
        .map(|l| l.trim_matches('|').split(" | ").map(|c| c.trim().to_string()).collect())
        .collect();
    assert_eq!(csv_rows, md_rows);
    assert_eq!(csv_rows, rows.iter().map(|r| cells(r).to_vec()).collect::<Vec<_>>());

    let jsonl = std::fs::read_to_string(dir.path().join("results.jsonl")).unwrap();
    let kinds: Vec<String> = jsonl
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(kinds.iter().filter(|k| *k == "episode").count(), 12);
    assert_eq!(kinds.iter().filter(|k| *k == "task_summary").count(), 2);
}

#[test]
fn diamond_funnel_never_rises_with_replayed_replies() {
    let mut cfg = RunConfig {
        tasks: vec!["MineDiamond".into()],
        episodes: 40,
        planner: PlannerKind::Llm,
        ..RunConfig::default()
    };
    cfg.llm.transcript = Some(fixture());
    let run = bench::run_suite(&cfg).unwrap();
    let row = &aggregate(&run.tasks, &run.results)[0];
    assert_eq!(row.funnel.len(), 12);
    assert!(row.funnel[0].reached > 0.0);
    // Only dependent items are ordered: the recorded plan mines iron ore
    // before it builds the furnace, so those two may cross.
    let replies = Transcript::load(&fixture()).unwrap().replies;
    let plan = parse_plan(&extract_plan_text(replies.last().unwrap()).unwrap()).unwrap();
    let task = run.tasks[0].clone();
    let graph = build_goal_graph(&plan, &bench::load_data(&cfg).unwrap().game.recipes, &task.alternatives).unwrap();
    let n = graph.len();
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in &graph.edges {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                reach[i][j] |= reach[i][k] && reach[k][j];
            }
        }
    }
    let first = |item: &str| plan.steps.iter().position(|s| s.outputs.keys().any(|k| k == item)).unwrap();
    let mut pairs = 0;
    for a in &row.funnel {
        for b in &row.funnel {
            if reach[first(&a.item)][first(&b.item)] {
                pairs += 1;
                assert!(b.reached <= a.reached, "{} above {}: {:?}", b.item, a.item, row.funnel);
            }
        }
    }
    assert!(pairs >= 11, "{pairs} dependent pairs");
}

#[test]
fn fault_free_rounds_row_is_flat() {
    let cfg = RunConfig {
        tasks: vec!["CraftStoneSword".into(), "CraftFurnace".into()],
        episodes: 15,
        planner: PlannerKind::Faulty,
        faults: FaultConfig::uniform(0.0, 0),
        ..RunConfig::default()
    };
    let ab = bench::ablate_rounds(&cfg, &bench::ROUND_SETTINGS).unwrap();
    for row in &ab.rows {
        assert!(row.success.iter().all(|s| *s == row.success[0]), "{row:?}");
        assert_eq!(row.delta, 0.0);
    }
    assert_eq!(ab.rows.last().unwrap().meta_group, "all");
}

#[test]
fn faulty_rounds_help_every_group() {
    let cfg = RunConfig {
        tasks: vec!["CraftStick".into(), "CraftStoneSword".into()],
        episodes: 60,
        planner: PlannerKind::Faulty,
        faults: FaultConfig::uniform(0.5, 4),
        ..RunConfig::default()
    };
    cfg.validate().unwrap();
    let ab = bench::ablate_rounds(&cfg, &[0, 64]).unwrap();
    for row in &ab.rows {
        assert!(row.delta > 0.0, "{row:?}");
    }
}

#[test]
fn hps_without_a_model_is_refused() {
    let cfg = RunConfig {
        selector: SelectorKind::Hps,
        ..RunConfig::default()
    };
    assert!(matches!(Harness::new(&cfg), Err(BenchError::MissingModel)));
}

#[test]
fn hps_trains_on_the_fly() {
    let cfg = RunConfig {
        tasks: vec!["CraftStoneSword".into()],
        episodes: 4,
        selector: SelectorKind::Hps,
        train_selector: true,
        train_episodes: 24,
        ..RunConfig::default()
    };
    let h = Harness::new(&cfg).unwrap();
    assert_eq!(h.selector.kind(), SelectorKind::Hps);
    assert_eq!(bench::run_suite(&cfg).unwrap().results.len(), 4);
}

#[test]
fn single_goal_makes_selectors_identical() {
    let (model, _) = bench::train_selector_world(30, 99, 0).unwrap();
    let sels = [
        Selector::Fixed,
        Selector::Random,
        Selector::Similarity,
        Selector::Hps {
            model: Arc::new(model),
            mode: Default::default(),
        },
    ];
    let cells = bench::ablate_selector(&sels, &[1], &[1000], 40, 0, 0).unwrap();
    for c in &cells[1..] {
        assert_eq!(c.results, cells[0].results, "{}", c.row.selector);
    }
}

#[test]
fn loose_budgets_let_every_selector_finish() {
    let cells = bench::ablate_selector(&[Selector::Fixed, Selector::Random], &[4], &[10_000], 60, 0, 0).unwrap();
    for c in &cells {
        assert_eq!(c.row.success_rate, 100.0, "{:?}", c.row);
    }
}

#[test]
fn one_shot_never_beats_feedback_on_shared_seeds() {
    let cfg = RunConfig {
        tasks: vec!["CraftWoodenPickaxe".into(), "CraftFurnace".into()],
        episodes: 40,
        planner: PlannerKind::Faulty,
        faults: FaultConfig::uniform(0.5, 9),
        ..RunConfig::default()
    };
    let mut h = Harness::new(&cfg).unwrap();
    let jobs = bench::suite_jobs(2, 40, 0);
    let deps = h.run_jobs(&jobs).unwrap();
    h.agent.mode = LoopMode::OneShot;
    let one = h.run_jobs(&jobs).unwrap();
    for (a, b) in one.iter().zip(&deps) {
        assert!(!a.success || b.success, "seed {}", a.seed);
    }
}

#[test]
fn symbolic_check_names_the_broken_step() {
    let data = bench::load_data(&RunConfig::default()).unwrap();
    let task = data.task("CraftStoneSword").unwrap();
    let state = data.game.reset(0, task).unwrap();
    let mut plan = craftplan_core::planner::oracle_plan(task, &data.game, &state).unwrap();
    assert!(bench::symbolic_check(&plan, task, &data.game).ok);
    let pickaxe = plan.steps.iter().position(|s| s.primary().0 == "wooden_pickaxe").unwrap();
    plan.steps.remove(pickaxe);
    let v = bench::symbolic_check(&plan, task, &data.game);
    assert!(!v.ok);
    assert_eq!(v.failed_step, Some(pickaxe + 1));
    assert!(v.reason.unwrap().contains("wooden_pickaxe"));
}
