use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sumdistill::config::{PipelineConfig, Profile};
use sumdistill::curriculum::{CurriculumPlan, Stage};
use sumdistill::probe::{LlmClient, MockLlm};
use sumdistill::workspace::{AdapterKind, EvalOptions, Pipeline, StageOutcome, Workspace};
use sumdistill::Result;

#[derive(Parser)]
#[command(
    name = "sumdistill",
    version,
    about = "Rationale probing, golden selection, curriculum manifests and ROUGE evaluation"
)]
struct Cli {
    /// Workspace directory holding every artifact.
    #[arg(long, global = true, default_value = "workspace")]
    workspace: PathBuf,
    /// JSON file overriding profile defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dataset profile: cnndm, xsum, clinicaltrial or custom.
    #[arg(long, global = true)]
    profile: Option<Profile>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for probing, selection and evaluation (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Use the deterministic offline client instead of the configured provider.
    #[arg(long, global = true)]
    mock_llm: bool,
    /// Trainer adapter: mock or manifest-only.
    #[arg(long, global = true, default_value = "mock")]
    adapter: AdapterKind,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(clap::Args)]
struct CurriculumArgs {
    /// Comma-separated subset of stages (default: all six).
    #[arg(long, value_delimiter = ',')]
    stages: Vec<Stage>,
    /// Allow a plan that skips prerequisite stages.
    #[arg(long)]
    override_stage_order: bool,
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long, value_enum, default_value = "table")]
    format: Format,
    /// JSON Lines {id, summary} to score instead of adapter decodes.
    #[arg(long)]
    predictions: Option<PathBuf>,
    /// JSON {document_id: {metric: value}} merged into the report.
    #[arg(long)]
    external_scores: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and store a JSON Lines corpus {id, document, summary, split?}.
    Ingest { input: PathBuf },
    /// Sample candidate rationales for every training document.
    Probe,
    /// Train the topic model and pick each document's golden rationale.
    Select,
    /// Build the staged training manifests and drive the trainer adapter.
    Curriculum(CurriculumArgs),
    /// Score summaries with ROUGE-1/2/L.
    Eval(EvalArgs),
    /// Every stage in order, stopping at the first failure.
    RunAll {
        input: PathBuf,
        #[command(flatten)]
        curriculum: CurriculumArgs,
        #[command(flatten)]
        eval: EvalArgs,
    },
}

impl CurriculumArgs {
    fn plan(&self) -> CurriculumPlan {
        if self.stages.is_empty() {
            CurriculumPlan {
                override_stage_order: self.override_stage_order,
                ..CurriculumPlan::full()
            }
        } else {
            let mut stages = self.stages.clone();
            stages.sort_by_key(|s| s.position());
            stages.dedup();
            CurriculumPlan::only(&stages, self.override_stage_order)
        }
    }
}

impl EvalArgs {
    fn options(&self) -> EvalOptions {
        EvalOptions {
            predictions: self.predictions.clone(),
            external_scores: self.external_scores.clone(),
        }
    }
}

fn client(cli: &Cli, cfg: &PipelineConfig) -> Result<Box<dyn LlmClient>> {
    if cli.mock_llm {
        return Ok(Box::new(MockLlm::new(cfg.seed)));
    }
    #[cfg(feature = "http")]
    {
        Ok(Box::new(sumdistill::probe::HttpLlmClient::from_env(
            cfg.provider.clone(),
        )?))
    }
    #[cfg(not(feature = "http"))]
    {
        Err(sumdistill::Error::Config(
            "built without the http feature; pass --mock-llm".into(),
        ))
    }
}

fn print_outcome(o: &StageOutcome) {
    println!("{}", serde_json::to_string(o).expect("outcome serializes"));
}

fn print_eval(ws: &Workspace, format: Format) -> Result<()> {
    let report = ws.eval_report()?;
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&report)?),
        Format::Table => print!("{}", report.to_table()),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = PipelineConfig::load(cli.profile, cli.config.as_deref(), cli.seed)?;
    let client = client(&cli, &cfg)?;
    let ws = Workspace::open(&cli.workspace)?;
    let pipeline = Pipeline::new(&ws, &cfg, client.as_ref(), cli.jobs)?.with_adapter(cli.adapter);
    match &cli.command {
        Command::Ingest { input } => print_outcome(&pipeline.ingest(input)?),
        Command::Probe => print_outcome(&pipeline.probe()?),
        Command::Select => print_outcome(&pipeline.select()?),
        Command::Curriculum(args) => print_outcome(&pipeline.curriculum(&args.plan())?),
        Command::Eval(args) => {
            let outcome = pipeline.eval(&args.options())?;
            eprintln!("{}", serde_json::to_string(&outcome)?);
            print_eval(&ws, args.format)?;
        }
        Command::RunAll {
            input,
            curriculum,
            eval,
        } => {
            for o in pipeline.run_all(input, &curriculum.plan(), &eval.options())? {
                eprintln!("{}", serde_json::to_string(&o)?);
            }
            print_eval(&ws, eval.format)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
