mod common;

use craftplan_core::agent::{run_episode, AgentConfig, Event, LoopMode, NullSink, WorldExecutor};
use craftplan_core::counts::ItemCounts;
use craftplan_core::craftworld::{check_preconditions, execute_goal, ExecStatus, Game, TaskSpec, WorldConfig};
use craftplan_core::explainer::FailureKind;
use craftplan_core::plan_dsl::{parse_plan, render_plan, GoalVerb, Plan};
use craftplan_core::planner::{faulty_plan, oracle_plan, FaultConfig, FaultyPlanner, OraclePlanner, PlannerError};
use craftplan_core::selector::Selector;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sure_game() -> Game {
    common::game_with(WorldConfig {
        success_override: Some(1.0),
        despawn_per_step: 0.0,
        ..WorldConfig::default()
    })
}

fn open_task(item: &str, n: u32, biome: &str) -> TaskSpec {
    let mut t = TaskSpec::new("t", item, n, u64::MAX / 4, "MT0");
    t.biome = Some(String::from(biome));
    t
}

/// Runs every step in order and checks each one passes its preconditions
/// and succeeds. Returns the final inventory.
fn execute_in_order(task: &TaskSpec, game: &Game, seed: u64) -> Result<ItemCounts, PlannerError> {
    let mut state = game.reset(seed, task).unwrap();
    let plan = oracle_plan(task, game, &state)?;
    for (i, step) in plan.steps.iter().enumerate() {
        assert_eq!(check_preconditions(&state, step, game), Ok(()), "step {} of\n{}", i + 1, render_plan(&plan));
        let out = execute_goal(&mut state, step, game);
        assert_eq!(out.status, ExecStatus::Success);
    }
    for (item, n) in task.target.iter() {
        assert!(state.inventory.get(item) >= n, "{item} short after\n{}", render_plan(&plan));
    }
    Ok(state.inventory.counts().clone())
}

#[test]
fn stone_sword_plan_has_seven_steps() {
    let game = common::game();
    let task = common::task("CraftStoneSword");
    let state = game.reset(1, &task).unwrap();
    let plan = oracle_plan(&task, &game, &state).unwrap();
    // With empty hands: 2 + 1 stick -> one batch of 4; 4 + 3 + 2 planks -> 3
    // batches of 4 planks from 3 log.
    let want = "def craft_1_stone_sword(inventory = {}):
    mine({'log':3}, null); # action 1: mine 3 log without tool
    craft({'planks':12}, {'log':3}, null); # action 2: craft 12 planks from 3 log
    craft({'stick':4}, {'planks':2}, null); # action 3: craft 4 stick from 2 planks
    craft({'crafting_table':1}, {'planks':4}, null); # action 4: craft 1 crafting_table from 4 planks
    craft({'wooden_pickaxe':1}, {'planks':3, 'stick':2}, 'crafting_table'); # action 5: craft 1 wooden_pickaxe from 3 planks and 2 stick, on crafting_table
    mine({'cobblestone':2}, 'wooden_pickaxe'); # action 6: mine 2 cobblestone with wooden_pickaxe
    craft({'stone_sword':1}, {'cobblestone':2, 'stick':1}, 'crafting_table'); # action 7: craft 1 stone_sword from 2 cobblestone and 1 stick, on crafting_table
    return 'stone_sword'
";
    assert_eq!(render_plan(&plan), want);
    execute_in_order(&task, &sure_game(), 1).unwrap();
}

#[test]
fn diamond_plan_covers_the_twelve_milestones() {
    let game = common::game();
    let task = common::task("MineDiamond");
    let state = game.reset(1, &task).unwrap();
    let plan = oracle_plan(&task, &game, &state).unwrap();
    // Hand totals: sticks 2 + 2 + 2 = 6 -> 8; planks 4 + 3 + 4 = 11 -> 12;
    // cobblestone 3 + 8; iron 3.
    let got: Vec<(String, u32)> = plan.steps.iter().map(|s| (s.primary().0.to_string(), s.primary().1)).collect();
    let want: Vec<(String, u32)> = [
        ("log", 3),
        ("planks", 12),
        ("stick", 8),
        ("crafting_table", 1),
        ("wooden_pickaxe", 1),
        ("cobblestone", 11),
        ("stone_pickaxe", 1),
        ("furnace", 1),
        ("iron_ore", 3),
        ("iron_ingot", 3),
        ("iron_pickaxe", 1),
        ("diamond", 1),
    ]
    .iter()
    .map(|(a, b)| (a.to_string(), *b))
    .collect();
    assert_eq!(got, want);
    assert_eq!(plan.milestones(), task.milestones);
    assert_eq!(plan.steps[9].verb, GoalVerb::Smelt);
    let left = execute_in_order(&task, &sure_game(), 3).unwrap();
    // Nothing consumable is gathered beyond need.
    for item in ["log", "cobblestone", "iron_ore", "iron_ingot"] {
        assert_eq!(left.get(item), 0, "{item} left over: {left:?}");
    }
    // Batch rounding: 12 - 11 planks, 8 - 6 sticks.
    assert_eq!(left.get("planks"), 1);
    assert_eq!(left.get("stick"), 2);
}

#[test]
fn held_items_shrink_the_plan() {
    let game = common::game();
    let mut task = common::task("CraftStoneSword");
    task.initial_inventory = [("stick", 5), ("crafting_table", 1), ("wooden_pickaxe", 1)].into_iter().collect();
    let state = game.reset(1, &task).unwrap();
    let plan = oracle_plan(&task, &game, &state).unwrap();
    let items: Vec<&str> = plan.steps.iter().map(|s| s.primary().0).collect();
    assert_eq!(items, vec!["cobblestone", "stone_sword"]);
}

#[test]
fn forest_only_wood_is_unreachable_on_plains() {
    let game = common::game();
    let task = open_task("birch_wood", 1, "plains");
    let state = game.reset(1, &task).unwrap();
    assert!(matches!(oracle_plan(&task, &game, &state), Err(PlannerError::Unreachable { .. })));
}

fn all_items(game: &Game) -> Vec<String> {
    let mut v: Vec<String> = game.recipes.recipes.iter().flat_map(|r| r.outputs.keys().map(String::from)).collect();
    v.extend(game.recipes.mine_rules.iter().map(|m| m.item.clone()));
    v.sort();
    v.dedup();
    v
}

/// Independent reachability: gatherable here with a skill and an obtainable
/// tool, or craftable from obtainable inputs at an obtainable station.
fn obtainable(game: &Game, item: &str, biome: &str, stack: &mut Vec<String>) -> bool {
    if stack.iter().any(|s| s == item) {
        return false;
    }
    stack.push(item.to_string());
    let ok = game.recipes.mine_rule(item).is_some_and(|rule| {
        let target = rule.mob.clone().or(rule.skill_item.clone()).unwrap_or(item.to_string());
        rule.host_biomes.iter().any(|b| b == biome)
            && game.skills.skills.iter().any(|s| s.target_item.as_deref() == Some(target.as_str()) && s.success_prob > 0.0)
            && rule.required_tool_item().is_none_or(|t| obtainable(game, &t, biome, stack))
    }) || game.recipes.recipes_for(item).any(|r| {
        r.inputs.keys().all(|i| obtainable(game, i, biome, stack))
            && r.station.as_deref().is_none_or(|st| obtainable(game, st, biome, stack))
    });
    stack.pop();
    ok
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    /// Oracle plans execute cleanly for any item, count, biome and seed, and
    /// leave no more consumables than batch rounding forces.
    #[test]
    fn oracle_plans_execute(pick in any::<prop::sample::Index>(), n in 1u32..5, forest in any::<bool>(), seed in any::<u64>(),
                            start in prop::collection::vec((0usize..8, 0u32..6), 0..4)) {
        let game = sure_game();
        let items = all_items(&game);
        let item = pick.get(&items);
        let base = ["log", "planks", "stick", "cobblestone", "crafting_table", "wooden_pickaxe", "iron_ingot", "furnace"];
        let mut task = open_task(item, n, if forest { "forest" } else { "plains" });
        for (k, c) in start {
            if c > 0 {
                task.initial_inventory.set(base[k], c);
            }
        }
        let initial = task.initial_inventory.clone();
        match execute_in_order(&task, &game, seed) {
            Ok(left) => {
                for (k, v) in left.iter() {
                    if game.recipes.is_durable(k) || task.target.contains(k) {
                        continue;
                    }
                    let slack = game.recipes.recipes_for(k).map(|r| r.outputs.get(k) - 1).max().unwrap_or(0);
                    prop_assert!(v <= initial.get(k) + slack, "{} {} left for {}", v, k, item);
                }
            }
            Err(PlannerError::Unreachable { .. }) => {
                prop_assert!(!obtainable(&game, item, task.biome.as_deref().unwrap(), &mut Vec::new()), "{} is obtainable", item);
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn zero_faults_is_the_oracle() {
    let game = common::game();
    for task in common::tasks() {
        for seed in 0..20 {
            let state = game.reset(seed, &task).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = faulty_plan(&task, &game, &state, &FaultConfig::default(), &mut rng).unwrap();
            assert_eq!(f, oracle_plan(&task, &game, &state).unwrap());
        }
    }
}

#[test]
fn faults_do_change_plans() {
    let game = common::game();
    let task = common::task("MineDiamond");
    let state = game.reset(0, &task).unwrap();
    let oracle = oracle_plan(&task, &game, &state).unwrap();
    let changed = (0..50)
        .filter(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(*s);
            faulty_plan(&task, &game, &state, &FaultConfig::uniform(0.5, 0), &mut rng).unwrap() != oracle
        })
        .count();
    assert!(changed >= 45, "{changed}");
}

#[test]
fn explained_repairs_always_converge() {
    let game = sure_game();
    let config = AgentConfig::default();
    for task in common::tasks() {
        let mut task = task;
        task.max_episode_steps = u64::MAX / 4;
        for seed in 0..25 {
            let mut planner = FaultyPlanner::new(FaultConfig::uniform(0.5, 11), seed);
            let res = run_episode(&task, seed, &game, &mut planner, &Selector::Fixed, &config, &mut WorldExecutor, &mut NullSink);
            assert!(res.success, "{} seed {seed}: {:?}", task.id, res.failure_cause);
            assert!(res.rounds_used < 64);
        }
    }
}

#[test]
fn one_shot_successes_are_kept_by_feedback() {
    let game = common::game();
    let task = common::task("CraftStonePickaxe");
    for seed in 0..200 {
        let run = |mode| {
            let mut planner = FaultyPlanner::new(FaultConfig::uniform(0.3, 5), seed);
            let cfg = AgentConfig { mode, ..AgentConfig::default() };
            run_episode(&task, seed, &game, &mut planner, &Selector::Fixed, &cfg, &mut WorldExecutor, &mut NullSink)
        };
        let one = run(LoopMode::OneShot);
        if one.success {
            let fb = run(LoopMode::FeedbackOnly);
            let deps = run(LoopMode::Deps);
            assert!(fb.success && deps.success, "seed {seed}");
            assert_eq!(one.steps_used, deps.steps_used);
        }
    }
}

#[test]
fn under_quantity_leaves_the_stone_pickaxe_short() {
    let game = sure_game();
    let task = common::task("CraftStonePickaxe");
    let mut state = game.reset(0, &task).unwrap();
    let faults = FaultConfig {
        p_under_quantity: 1.0,
        ..FaultConfig::default()
    };
    let plan = faulty_plan(&task, &game, &state, &faults, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
    let mined: u32 = plan.steps.iter().filter(|s| s.verb == GoalVerb::Mine).map(|s| s.outputs.get("cobblestone")).sum();
    assert!(mined < 3, "{}", render_plan(&plan));
    let last = plan.steps.last().unwrap();
    for step in &plan.steps[..plan.len() - 1] {
        execute_goal(&mut state, step, &game);
    }
    let have = state.inventory.get("cobblestone");
    assert_eq!(check_preconditions(&state, last, &game), Err(FailureKind::InsufficientInput { item: "cobblestone".into(), need: 3, have }));
}

#[test]
fn missing_table_is_planned_before_its_first_use() {
    let game = sure_game();
    let task = common::task("CraftWoodenPickaxe");
    let faults = FaultConfig {
        p_omit_station: 1.0,
        ..FaultConfig::default()
    };
    let mut planner = FaultyPlanner::new(faults, 3);
    let mut events: Vec<Event> = Vec::new();
    let res = run_episode(&task, 3, &game, &mut planner, &Selector::Fixed, &AgentConfig::default(), &mut WorldExecutor, &mut events);
    assert!(res.success, "{:?}", res.failure_cause);
    let plans: Vec<Plan> = events
        .iter()
        .filter_map(|e| match e {
            Event::Plan { text, .. } => Some(parse_plan(text).unwrap()),
            _ => None,
        })
        .collect();
    let has_table = |p: &Plan| p.steps.iter().any(|s| s.primary().0 == "crafting_table");
    assert!(!has_table(&plans[0]));
    let explained = events.iter().any(|e| matches!(e, Event::Explain { text, .. } if text.contains("crafting_table")));
    assert!(explained);
    let fixed = plans.iter().find(|p| has_table(p)).unwrap();
    let made = fixed.steps.iter().position(|s| s.primary().0 == "crafting_table").unwrap();
    let used = fixed.steps.iter().position(|s| s.station.as_deref() == Some("crafting_table")).unwrap();
    assert!(made < used, "{}", render_plan(fixed));
}

#[test]
fn held_target_needs_no_steps() {
    let game = common::game();
    let mut task = common::task("CraftStoneSword");
    task.initial_inventory = [("stone_sword", 1)].into_iter().collect();
    let state = game.reset(0, &task).unwrap();
    assert!(oracle_plan(&task, &game, &state).unwrap().steps.is_empty());
}

#[test]
fn flawless_plans_need_no_rounds() {
    let game = sure_game();
    for mode in [LoopMode::OneShot, LoopMode::FeedbackOnly, LoopMode::Deps] {
        let cfg = AgentConfig { mode, ..AgentConfig::default() };
        for mut task in common::tasks() {
            task.max_episode_steps = u64::MAX / 4;
            let res = run_episode(&task, 1, &game, &mut OraclePlanner, &Selector::Fixed, &cfg, &mut WorldExecutor, &mut NullSink);
            assert!(res.success, "{} {mode:?}", task.id);
            assert_eq!(res.rounds_used, 0);
        }
    }
}
