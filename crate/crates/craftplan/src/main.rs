use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use craftplan::bench::{self, Harness, Validation};
use craftplan::config::{PlannerKind, RunConfig};
use craftplan::data::Transcript;
use craftplan::mock::MockServer;
use craftplan::report;
use craftplan_core::agent::{Event, LoopMode};
use craftplan_core::craftworld::TaskSpec;
use craftplan_core::plan_dsl::{parse_plan, render_plan};
use craftplan_core::planner::FaultConfig;
use craftplan_core::selector::{Selector, SelectorKind, TrainConfig};
use serde::de::DeserializeOwned;

#[derive(Parser)]
#[command(name = "craftplan", version, about = "Plan, run and benchmark crafting agents")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Work with plan files.
    #[command(subcommand)]
    Plan(PlanCmd),
    /// Run single episodes.
    #[command(subcommand)]
    Episode(EpisodeCmd),
    /// Run a task suite and write reports.
    #[command(subcommand)]
    Suite(SuiteCmd),
    /// Rounds and selector ablation grids.
    #[command(subcommand)]
    Ablate(AblateCmd),
    /// Train horizon-model checkpoints.
    #[command(subcommand)]
    Selector(SelectorCmd),
    /// Local stand-in for a chat completions endpoint.
    #[command(subcommand)]
    Llm(LlmCmd),
}

#[derive(Subcommand)]
enum PlanCmd {
    /// Print the parsed plan as JSON.
    Parse { file: PathBuf },
    /// Print the plan in canonical form.
    Render { file: PathBuf },
    /// Check the plan runs to its target when every skill succeeds.
    Validate {
        file: PathBuf,
        /// Task to check against; by default the plan's return item, count 1.
        #[arg(long)]
        task: Option<String>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Subcommand)]
enum EpisodeCmd {
    Run {
        #[arg(long)]
        task: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Event log (JSONL); stdout when absent.
        #[arg(long)]
        events: Option<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Subcommand)]
enum SuiteCmd {
    Run {
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Subcommand)]
enum AblateCmd {
    /// Success by meta group under each cap on feedback rounds.
    Rounds {
        #[arg(long, value_delimiter = ',', default_values_t = bench::ROUND_SETTINGS)]
        rounds: Vec<u32>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Selectors on parallel gathering goals over a sweep of step budgets.
    Selector {
        #[arg(long, value_delimiter = ',', default_values_t = bench::SELECTOR_GOALS)]
        goals: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = bench::SELECTOR_BUDGETS)]
        budgets: Vec<u64>,
        #[arg(long, default_value_t = 300)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        /// Horizon model checkpoint for the hps selector.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Fit a horizon model first when no checkpoint is given.
        #[arg(long)]
        train: bool,
        #[arg(long, default_value_t = 400)]
        train_episodes: usize,
        #[arg(long, value_delimiter = ',', default_value = "fixed,random,similarity,hps", value_parser = parse_enum::<SelectorKind>)]
        selectors: Vec<SelectorKind>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum SelectorCmd {
    /// Roll out random-selector episodes, fit a horizon model and save it.
    /// Rollout count comes from --episodes, else `train_episodes` in the config.
    Train {
        #[arg(long, default_value = "model.json")]
        model_out: PathBuf,
        /// Trajectory log; `trajectories.jsonl` under --out when absent.
        #[arg(long)]
        trajectories: Option<PathBuf>,
        /// Train on the parallel-goal world used by `ablate selector`.
        #[arg(long)]
        parallel_world: bool,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Subcommand)]
enum LlmCmd {
    /// Serve recorded replies on an OpenAI-style chat completions route.
    MockServe {
        transcript: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8089")]
        addr: String,
    },
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))).map_err(|_| format!("unknown value '{s}'"))
}

/// Config file plus flag overrides; flags win.
#[derive(Args, Clone, Default)]
struct RunArgs {
    /// TOML or JSON run config.
    #[arg(long, short = 'c', env = "CRAFTPLAN_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long)]
    data_dir: Option<PathBuf>,
    #[arg(long)]
    suite: Option<PathBuf>,
    /// Only these task ids (repeatable).
    #[arg(long = "only")]
    only: Vec<String>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed_base: Option<u64>,
    #[arg(long, value_parser = parse_enum::<LoopMode>)]
    mode: Option<LoopMode>,
    #[arg(long)]
    max_rounds: Option<u32>,
    #[arg(long)]
    max_retries: Option<u32>,
    #[arg(long, value_enum)]
    planner: Option<PlannerKind>,
    #[arg(long, value_parser = parse_enum::<SelectorKind>)]
    selector: Option<SelectorKind>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    train_selector: bool,
    /// The same probability for every defect class.
    #[arg(long)]
    fault_p: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replay replies from this file instead of calling the endpoint.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    success_override: Option<f64>,
    #[arg(long)]
    record_trajectories: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($field:ident, $target:expr) => {
                if let Some(v) = self.$field.clone() {
                    $target = v;
                }
            };
        }
        if self.data_dir.is_some() {
            c.data_dir = self.data_dir.clone();
        }
        if self.suite.is_some() {
            c.suite = self.suite.clone();
        }
        if !self.only.is_empty() {
            c.tasks = self.only.clone();
        }
        set!(episodes, c.episodes);
        set!(seed_base, c.seed_base);
        set!(mode, c.mode);
        set!(max_rounds, c.max_rounds);
        set!(max_retries, c.max_retries);
        set!(planner, c.planner);
        set!(selector, c.selector);
        set!(workers, c.workers);
        set!(out, c.output_dir);
        if self.model.is_some() {
            c.model = self.model.clone();
        }
        if let Some(p) = self.fault_p {
            c.faults = FaultConfig {
                seed: c.faults.seed,
                p_repair_without_explanation: c.faults.p_repair_without_explanation,
                ..FaultConfig::uniform(p, 0)
            };
        }
        if self.transcript.is_some() {
            c.llm.transcript = self.transcript.clone();
        }
        if self.success_override.is_some() {
            c.world.success_override = self.success_override;
        }
        c.train_selector |= self.train_selector;
        c.record_trajectories |= self.record_trajectories;
        c.validate()?;
        Ok(c)
    }
}

fn read_plan(file: &Path) -> Result<craftplan_core::plan_dsl::Plan> {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    parse_plan(&text).map_err(|e| anyhow::anyhow!("{}:{}:{}: {}", file.display(), e.line, e.column, e.message))
}

fn plan_cmd(cmd: PlanCmd) -> Result<ExitCode> {
    match cmd {
        PlanCmd::Parse { file } => {
            println!("{}", serde_json::to_string_pretty(&read_plan(&file)?)?);
        }
        PlanCmd::Render { file } => {
            print!("{}", render_plan(&read_plan(&file)?));
        }
        PlanCmd::Validate { file, task, run } => {
            let plan = read_plan(&file)?;
            let data = bench::load_data(&run.resolve()?)?;
            let task = match task {
                Some(id) => data.task(&id)?.clone(),
                None => TaskSpec::new("plan", &plan.return_item, 1, u64::MAX, "none"),
            };
            let v: Validation = bench::symbolic_check(&plan, &task, &data.game);
            println!("{}", serde_json::to_string(&v)?);
            if !v.ok {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn episode_run(task: &str, seed: u64, events: Option<PathBuf>, run: &RunArgs) -> Result<ExitCode> {
    let cfg = run.resolve()?;
    let h = Harness::new(&cfg)?;
    let task = h.data.task(task)?.clone();
    let mut log: Vec<Event> = Vec::new();
    let result = h.episode(&task, seed, &mut log);
    match events {
        Some(p) => report::write_jsonl(create(&p)?, &log)?,
        None => report::write_jsonl(std::io::stdout().lock(), &log)?,
    }
    println!("{}", serde_json::to_string(&result)?);
    Ok(ExitCode::SUCCESS)
}

fn suite_run(run: &RunArgs) -> Result<ExitCode> {
    let cfg = run.resolve()?;
    let out = bench::run_suite(&cfg)?;
    let rows = report::aggregate(&out.tasks, &out.results);
    report::write_suite(&cfg.output_dir, &out.tasks, &out.results, &rows)?;
    if cfg.record_trajectories {
        let recs = out.results.iter().flat_map(|r| r.trajectories.iter());
        report::write_jsonl(create(&cfg.output_dir.join("trajectories.jsonl"))?, recs)?;
    }
    print!("{}", report::report_markdown(&rows));
    Ok(ExitCode::SUCCESS)
}

fn ablate_rounds(rounds: &[u32], run: &RunArgs) -> Result<ExitCode> {
    let cfg = run.resolve()?;
    let ab = bench::ablate_rounds(&cfg, rounds)?;
    let mut header: Vec<String> = vec!["meta_group".into(), "episodes".into()];
    header.extend(ab.rounds.iter().map(|r| format!("rounds_{r}")));
    header.push("delta".into());
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = ab
        .rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.meta_group.clone(), r.episodes.to_string()];
            cells.extend(r.success.iter().map(|s| report::num(*s)));
            cells.push(report::num(r.delta));
            cells
        })
        .collect();
    std::fs::create_dir_all(&cfg.output_dir)?;
    report::write_csv(create(&cfg.output_dir.join("ablate_rounds.csv"))?, &header, rows.clone())?;
    let md = report::markdown(&header, rows);
    std::fs::write(cfg.output_dir.join("ablate_rounds.md"), &md)?;
    print!("{md}");
    Ok(ExitCode::SUCCESS)
}

#[allow(clippy::too_many_arguments)]
fn ablate_selector(
    goals: &[usize],
    budgets: &[u64],
    episodes: usize,
    seed_base: u64,
    model: Option<PathBuf>,
    train: bool,
    train_episodes: usize,
    kinds: &[SelectorKind],
    workers: usize,
    out: &Path,
) -> Result<ExitCode> {
    let mut selectors = Vec::new();
    for k in kinds {
        selectors.push(match k {
            SelectorKind::Fixed => Selector::Fixed,
            SelectorKind::Random => Selector::Random,
            SelectorKind::Similarity => Selector::Similarity,
            SelectorKind::Hps => {
                let m = match (&model, train) {
                    (Some(p), _) => bench::load_model(p)?,
                    (None, true) => bench::train_selector_world(train_episodes, seed_base.wrapping_add(bench::TRAIN_SEED_OFFSET), workers)?.0,
                    (None, false) => return Err(bench::BenchError::MissingModel.into()),
                };
                Selector::Hps {
                    model: Arc::new(m),
                    mode: Default::default(),
                }
            }
        });
    }
    let cells = bench::ablate_selector(&selectors, goals, budgets, episodes, seed_base, workers)?;
    let header = ["selector", "goals", "budget", "episodes", "success_rate", "ci95_low", "ci95_high", "mean_steps", "steps_std"];
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            let r = &c.row;
            vec![
                r.selector.clone(),
                r.goals.to_string(),
                r.budget.to_string(),
                r.episodes.to_string(),
                report::num(r.success_rate),
                report::num(r.ci95_low),
                report::num(r.ci95_high),
                report::num(r.mean_steps),
                report::num(r.steps_std),
            ]
        })
        .collect();
    std::fs::create_dir_all(out)?;
    report::write_csv(create(&out.join("ablate_selector.csv"))?, &header, rows.clone())?;
    let md = report::markdown(&header, rows);
    std::fs::write(out.join("ablate_selector.md"), &md)?;
    print!("{md}");
    Ok(ExitCode::SUCCESS)
}

fn selector_train(model_out: &Path, trajectories: Option<PathBuf>, parallel_world: bool, run: &RunArgs) -> Result<ExitCode> {
    let cfg = run.resolve()?;
    let episodes = run.episodes.unwrap_or(cfg.train_episodes);
    let seed = cfg.seed_base.wrapping_add(bench::TRAIN_SEED_OFFSET);
    let (model, records) = if parallel_world {
        bench::train_selector_world(episodes, seed, cfg.workers)?
    } else {
        let data = bench::load_data(&cfg)?;
        let planner = |_s: u64| -> Box<dyn craftplan_core::planner::Planner> { Box::new(craftplan_core::planner::OraclePlanner) };
        let records = bench::collect_trajectories(&data.game, &data.tasks, &planner, episodes, seed, cfg.workers)?;
        (bench::train_model(&records, &data.game, &data.tasks, &TrainConfig::default())?, records)
    };
    let traj = trajectories.unwrap_or_else(|| cfg.output_dir.join("trajectories.jsonl"));
    report::write_jsonl(create(&traj)?, &records)?;
    let mut w = create(model_out)?;
    serde_json::to_writer(&mut w, &model)?;
    w.flush()?;
    eprintln!(
        "{} records, loss {:.4} -> {:.4}, saved {}",
        records.len(),
        model.training_meta.initial_loss,
        model.training_meta.loss_curve.last().copied().unwrap_or(f64::NAN),
        model_out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Plan(c) => plan_cmd(c),
        Cmd::Episode(EpisodeCmd::Run { task, seed, events, run }) => episode_run(&task, seed, events, &run),
        Cmd::Suite(SuiteCmd::Run { run }) => suite_run(&run),
        Cmd::Ablate(AblateCmd::Rounds { rounds, run }) => ablate_rounds(&rounds, &run),
        Cmd::Ablate(AblateCmd::Selector {
            goals,
            budgets,
            episodes,
            seed_base,
            model,
            train,
            train_episodes,
            selectors,
            workers,
            out,
        }) => {
            if episodes == 0 {
                bail!("episodes must be at least 1");
            }
            ablate_selector(&goals, &budgets, episodes, seed_base, model, train, train_episodes, &selectors, workers, &out)
        }
        Cmd::Selector(SelectorCmd::Train {
            model_out,
            trajectories,
            parallel_world,
            run,
        }) => selector_train(&model_out, trajectories, parallel_world, &run),
        Cmd::Llm(LlmCmd::MockServe { transcript, addr }) => {
            let t = Transcript::load(&transcript)?;
            let n = t.replies.len();
            let server = MockServer::start(&addr, t.replies)?;
            eprintln!("serving {n} replies at {}", server.base_url());
            server.wait();
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
