use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use platelet_abc::abc::{
    bayes_estimate, posterior_correlation, posterior_predictive, AbcError, AbcProblem, Population, Sampler,
};
use platelet_abc::io::{self, IoError, Provenance, RunConfig, SamplerKind};
use platelet_abc::model::{ModelError, ModelParams, Simulator};
use platelet_abc::scheduler::{
    dynamic_map, chunked_map, imbalance_report, makespan, schedule, ExecutorTimeline, ImbalanceReport, Strategy,
    WorkerPool,
};
use platelet_abc::summary::{summarize, SummaryError};
use rand::SeedableRng;
use rand_distr::{Distribution, LogNormal, Uniform};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;
use serde_json::json;

use crate::{BenchStrategy, Cli, Clock, Command, DistArg, InferArgs, SamplerArg, SchedArgs, StrategyArg, ThetaArgs};

/// An error reported as one JSON line on stderr.
#[derive(Debug)]
pub struct CliError {
    kind: &'static str,
    message: String,
    code: u8,
}

impl CliError {
    pub fn usage(message: impl Display) -> Self {
        Self {
            kind: "usage",
            message: message.to_string(),
            code: 2,
        }
    }

    fn new(kind: &'static str, message: impl Display) -> Self {
        Self {
            kind,
            message: message.to_string(),
            code: 1,
        }
    }

    pub fn exit_code(&self) -> u8 {
        self.code
    }

    pub fn report(&self) {
        eprintln!("{}", json!({ "error": { "kind": self.kind, "message": self.message } }));
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        Self::new(e.kind(), e)
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        Self::new("model", e)
    }
}

impl From<AbcError> for CliError {
    fn from(e: AbcError) -> Self {
        Self::new("inference", e)
    }
}

impl From<SummaryError> for CliError {
    fn from(e: SummaryError) -> Self {
        Self::new("summary", e)
    }
}

struct Context {
    config: RunConfig,
    seed: u64,
    out_dir: PathBuf,
}

impl Context {
    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let ctx = Context {
        seed: cli.seed.unwrap_or(config.simulation.seed),
        out_dir: cli
            .out_dir
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from(".")),
        config,
    };
    fs::create_dir_all(&ctx.out_dir).map_err(|e| CliError::new("io", format!("{}: {e}", ctx.out_dir.display())))?;
    match cli.command {
        Command::Simulate { theta, grid_pgm } => simulate(&ctx, &theta, grid_pgm),
        Command::Summarize { input } => summarize_cmd(&ctx, &input),
        Command::Infer(args) => infer(&ctx, &args),
        Command::Predict {
            posterior,
            n_draws,
            workers,
            observed,
        } => predict(&ctx, &posterior, n_draws, workers, observed.as_deref()),
        Command::SchedBench(args) => sched_bench(&ctx, &args),
        Command::Synth { theta } => synth(&ctx, &theta),
    }
}

fn parse_theta(args: &ThetaArgs) -> Result<ModelParams, CliError> {
    let theta = if let Some(text) = &args.theta {
        let vals: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::usage(format!("--theta: {e}")))?;
        let arr: [f64; 5] = vals
            .try_into()
            .map_err(|v: Vec<f64>| CliError::usage(format!("--theta needs 5 values, got {}", v.len())))?;
        ModelParams::from_array(arr)
    } else {
        let path = args.params.as_ref().expect("clap enforces one of theta/params");
        io::read_json(path)?
    };
    theta.validate()?;
    Ok(theta)
}

fn simulate(ctx: &Context, theta: &ThetaArgs, grid_pgm: bool) -> Result<(), CliError> {
    let theta = parse_theta(theta)?;
    let sim = Simulator::new(ctx.config.simulation.clone())?;
    let outcome = sim.run_full(&theta, ctx.seed)?;
    let path = ctx.out("series.csv");
    io::write_series(&path, &outcome.series)?;
    announce(&path);
    if grid_pgm {
        let path = ctx.out("substrate.pgm");
        let file = fs::File::create(&path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
        outcome
            .grid
            .write_pgm(std::io::BufWriter::new(file))
            .map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
        announce(&path);
    }
    Ok(())
}

fn summarize_cmd(ctx: &Context, input: &Path) -> Result<(), CliError> {
    let data = io::load_observed(input)?;
    let s = summarize(&data.series)?;
    let path = ctx.out("summary.csv");
    io::write_summary(&path, &s)?;
    announce(&path);
    Ok(())
}

fn strategy(arg: Option<StrategyArg>, default: Strategy) -> Strategy {
    match arg {
        Some(StrategyArg::Chunked) => Strategy::Chunked,
        Some(StrategyArg::Dynamic) => Strategy::Dynamic,
        None => default,
    }
}

#[derive(Serialize)]
struct BatchTiming {
    makespan_s: f64,
    busy_fraction: Vec<f64>,
}

fn timing_json(timelines: &[ExecutorTimeline], wall: f64) -> serde_json::Value {
    let batches: Vec<BatchTiming> = timelines
        .iter()
        .map(|t| {
            let r = imbalance_report(t);
            BatchTiming {
                makespan_s: r.makespan,
                busy_fraction: r.busy_fraction,
            }
        })
        .collect();
    json!({ "wall_s": wall, "batches": batches })
}

fn infer(ctx: &Context, args: &InferArgs) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let observed_path = args
        .observed
        .clone()
        .or_else(|| cfg.observed.clone())
        .ok_or_else(|| CliError::usage("no observed data: pass --observed or set `observed` in the config"))?;
    let observed = io::load_observed(&observed_path)?;
    observed
        .check_times(&cfg.simulation)
        .map_err(|m| CliError::new("invalid", format!("{}: {m}", observed_path.display())))?;

    let mut settings = cfg.sampler.clone();
    if let Some(s) = args.sampler {
        settings.kind = match s {
            SamplerArg::Rejection => SamplerKind::Rejection,
            SamplerArg::Sabc => SamplerKind::Sabc,
        };
    }
    settings.n_particles = args.n_particles.unwrap_or(settings.n_particles);
    settings.n_steps = args.n_steps.unwrap_or(settings.n_steps);
    settings.acc_cutoff = args.cutoff.unwrap_or(settings.acc_cutoff);
    settings.epsilon = args.epsilon.unwrap_or(settings.epsilon);
    let workers = args.workers.unwrap_or(cfg.scheduler.workers);
    if workers == 0 {
        return Err(CliError::usage("--workers must be at least 1"));
    }
    let pool = WorkerPool::new(workers, strategy(args.strategy, cfg.scheduler.strategy));

    let problem = AbcProblem::new(&observed.series, &cfg.prior, &cfg.simulation)?;
    let t0 = Instant::now();
    let pop = match settings.kind {
        SamplerKind::Sabc => settings.sabc().run(&problem, &pool, ctx.seed)?,
        SamplerKind::Rejection => settings.rejection().run(&problem, &pool, ctx.seed)?,
    };
    let wall = t0.elapsed().as_secs_f64();

    let path = ctx.out("posterior.csv");
    io::write_population(&path, &pop)?;
    announce(&path);
    if !pop.is_empty() {
        let path = ctx.out("estimate.json");
        io::write_json(&path, &bayes_estimate(&pop)?)?;
        announce(&path);
    }
    if pop.len() >= 2 {
        let path = ctx.out("correlation.csv");
        io::write_correlation(&path, &posterior_correlation(&pop)?)?;
        announce(&path);
    }
    let path = ctx.out("diagnostics.json");
    io::write_json(&path, &json!({ "sampler": settings.kind, "master_seed": ctx.seed, "history": pop.history }))?;
    announce(&path);
    let path = ctx.out("timing.json");
    io::write_json(&path, &timing_json(&pool.take_timelines(), wall))?;
    announce(&path);
    Ok(())
}

fn predict(
    ctx: &Context,
    posterior: &Path,
    n_draws: Option<usize>,
    workers: Option<usize>,
    observed: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let pop: Population = io::load_population(posterior)?;
    let mut settings = cfg.predictive.clone();
    settings.n_draws = n_draws.unwrap_or(settings.n_draws);
    let pool = WorkerPool::new(workers.unwrap_or(cfg.scheduler.workers), cfg.scheduler.strategy);
    let sim = Simulator::new(cfg.simulation.clone())?;
    let table = posterior_predictive(&pop, &sim, &settings, &pool, ctx.seed)?;
    let path = ctx.out("predictive.csv");
    io::write_predictive(&path, &table)?;
    announce(&path);
    if let Some(obs) = observed {
        let data = io::load_observed(obs)?;
        let c = table.coverage(&data.series);
        let path = ctx.out("coverage.json");
        io::write_json(
            &path,
            &json!({
                "cells": c.cells,
                "inside_min_max": c.inside_range,
                "inside_q25_q75": c.inside_quartiles,
                "quartile_fraction": c.quartile_fraction(),
            }),
        )?;
        announce(&path);
    }
    Ok(())
}

fn durations(ctx: &Context, args: &SchedArgs) -> Result<Vec<f64>, CliError> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(ctx.seed);
    let d: Vec<f64> = match args.dist {
        DistArg::Constant => vec![1.0; args.m],
        DistArg::Uniform => {
            let u = Uniform::new(0.5, 1.5).expect("valid range");
            (0..args.m).map(|_| u.sample(&mut rng)).collect()
        }
        DistArg::Lognormal => {
            let ln = LogNormal::new(0.0, 1.0).expect("valid parameters");
            (0..args.m).map(|_| ln.sample(&mut rng)).collect()
        }
        DistArg::File => {
            let path = args
                .durations
                .as_ref()
                .ok_or_else(|| CliError::usage("--dist file needs --durations"))?;
            let text = fs::read_to_string(path).map_err(|e| CliError::new("io", format!("{}: {e}", path.display())))?;
            text.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .enumerate()
                .map(|(i, s)| {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| *v >= 0.0 && v.is_finite())
                        .ok_or_else(|| CliError::new("parse", format!("{}: entry {}: bad duration '{s}'", path.display(), i + 1)))
                })
                .collect::<Result<_, _>>()?
        }
    };
    Ok(d)
}

fn sched_bench(ctx: &Context, args: &SchedArgs) -> Result<(), CliError> {
    if args.n == 0 {
        return Err(CliError::usage("--n must be at least 1"));
    }
    let d = durations(ctx, args)?;
    let strategies: &[Strategy] = match args.strategy {
        BenchStrategy::Chunked => &[Strategy::Chunked],
        BenchStrategy::Dynamic => &[Strategy::Dynamic],
        BenchStrategy::Both => &[Strategy::Chunked, Strategy::Dynamic],
    };
    let mut summary = serde_json::Map::new();
    for &s in strategies {
        let timeline = match args.clock {
            Clock::Simulated => schedule(s, &d, args.n),
            Clock::Real => {
                let scale = args.time_scale;
                let task = |_: usize, &dur: &f64| -> Result<(), ()> {
                    std::thread::sleep(std::time::Duration::from_secs_f64(dur * scale));
                    Ok(())
                };
                match s {
                    Strategy::Chunked => chunked_map(&d, args.n, task).timeline,
                    Strategy::Dynamic => dynamic_map(&d, args.n, task).timeline,
                }
            }
        };
        let name = match s {
            Strategy::Chunked => "chunked",
            Strategy::Dynamic => "dynamic",
        };
        let path = ctx.out(&format!("timeline_{name}.csv"));
        io::write_timeline(&path, &timeline)?;
        announce(&path);
        let report: ImbalanceReport = imbalance_report(&timeline);
        debug_assert_eq!(report.makespan, makespan(&timeline));
        summary.insert(name.into(), serde_json::to_value(report).expect("serializable"));
    }
    let path = ctx.out("sched_summary.json");
    io::write_json(
        &path,
        &json!({
            "m": d.len(),
            "n": args.n,
            "dist": format!("{:?}", args.dist).to_lowercase(),
            "clock": format!("{:?}", args.clock).to_lowercase(),
            "strategies": summary,
        }),
    )?;
    announce(&path);
    Ok(())
}

fn synth(ctx: &Context, theta: &ThetaArgs) -> Result<(), CliError> {
    let theta = parse_theta(theta)?;
    let data = io::synth_dataset(&theta, &ctx.config.simulation, ctx.seed)?;
    debug_assert_eq!(data.provenance, Provenance::Synthetic);
    let path = ctx.out("observed.csv");
    io::write_observed(&path, &data)?;
    announce(&path);
    Ok(())
}
