//! `tw`: delivery time-window optimization experiments.
//!
//! Exit codes: 0 ok, 1 usage, 2 solver error, 3 data error.

use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use tw_cli::config::{self, ConfigError, ExperimentConfig, DEFAULT_NOTICE_THRESHOLD,
                     DEFAULT_RECOMPUTE_PERIOD};
use tw_cli::gen;
use tw_cli::output;
use tw_core::arrival::{build_arrivals, ArrivalDist};
use tw_core::datafit::{self, StopPair};
use tw_core::dists::TravelTimeDist;
use tw_core::dwos::{self, DwosConfig, DwosRunRecord};
use tw_core::eval;
use tw_core::penalty::Penalty;
use tw_core::uwos;
use tw_core::wos::{self, Schedule};

#[derive(Parser)]
#[command(name = "tw", version, about = "Delivery time-window optimization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed (TW_SEED wins over both).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 0 = auto. Outputs do not depend on this.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the static schedule and print the window table.
    Solve {
        #[command(flatten)]
        common: CommonArgs,
        /// One shared width across all clients.
        #[arg(long)]
        uniform: bool,
    },
    /// Alias for `solve --uniform`.
    SolveUniform {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Evaluate the solved schedule by Monte Carlo and print the cost breakdown.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the dynamic re-solving simulation and print the threshold sweep.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit a mixture of linear regressions to a stop dataset.
    FitData {
        /// Dataset CSV with header distance_km,time_min.
        #[arg(long)]
        data: PathBuf,
        /// Number of mixture components.
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic stop dataset.
    GenData {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        rows: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum CliError {
    Usage(String),
    Solver(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Data(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Solver(m) | CliError::Data(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Io(_) | ConfigError::Parse(_) => CliError::Usage(e.to_string()),
            ConfigError::Validation(_) => CliError::Solver(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(format!("io error: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.cmd {
        Cmd::Solve { common, uniform } => cmd_solve(&common, uniform),
        Cmd::SolveUniform { common } => cmd_solve(&common, true),
        Cmd::Evaluate { common } => cmd_evaluate(&common),
        Cmd::Simulate { common } => cmd_simulate(&common),
        Cmd::FitData { data, k, seed, out } => cmd_fit(&data, k, seed, out.as_deref()),
        Cmd::GenData { seed, rows, out } => cmd_gen(seed, rows, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

struct Loaded {
    cfg: ExperimentConfig,
    legs: Vec<TravelTimeDist>,
    penalty: Penalty,
    seed: u64,
    hash: String,
}

fn load(common: &CommonArgs) -> Result<Loaded, CliError> {
    let cfg = config::load_config(&common.config)?;
    let legs = cfg.route.build()?;
    let penalty = cfg.penalty.build(cfg.omega)?;
    let seed = match std::env::var("TW_SEED") {
        Ok(v) => v.parse().unwrap_or(cfg.seed),
        Err(_) => common.seed.unwrap_or(cfg.seed),
    };
    let hash = output::config_hash(&cfg.canonical_json());
    Ok(Loaded { cfg, legs, penalty, seed, hash })
}

fn resolve_threads(threads: usize) -> usize {
    if threads > 0 {
        threads
    } else {
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
    }
}

/// Runs `f` over a fixed contiguous chunking of `0..total` on a thread pool.
/// The chunking (and therefore the merged result) is independent of the
/// thread count.
fn parallel_chunks<T, F>(total: u64, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    let nchunks = total.min(64).max(1);
    let ranges: Vec<Range<u64>> = (0..nchunks)
        .map(|i| (i * total / nchunks)..((i + 1) * total / nchunks))
        .collect();
    let slots: Vec<Mutex<Option<T>>> = ranges.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..threads.min(ranges.len()).max(1) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= ranges.len() {
                    break;
                }
                let r = f(ranges[i].clone());
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("chunk computed"))
        .collect()
}

fn solve_schedule(
    loaded: &Loaded,
    uniform: bool,
) -> Result<(Schedule, Vec<ArrivalDist>), CliError> {
    let engine = loaded.cfg.engine.build();
    let arrivals =
        build_arrivals(&loaded.legs, &engine).map_err(|e| CliError::Solver(e.to_string()))?;
    let schedule = if uniform || loaded.cfg.uniform {
        uwos::solve_uwos(&arrivals, loaded.cfg.omega, &loaded.penalty, uwos::DEFAULT_TOL)
            .map_err(|e| CliError::Solver(e.to_string()))?
            .schedule()
    } else {
        wos::solve_schedule(&arrivals, loaded.cfg.omega, &loaded.penalty)
            .map_err(|e| CliError::Solver(e.to_string()))?
    };
    Ok((schedule, arrivals))
}

fn cmd_solve(common: &CommonArgs, uniform: bool) -> Result<(), CliError> {
    let loaded = load(common)?;
    let (schedule, arrivals) = solve_schedule(&loaded, uniform)?;
    let mut text = output::meta_lines(&loaded.hash, loaded.seed);
    text.push_str("client,t,delta,t_end,centered_t,centered_end\n");
    for (i, (w, f)) in schedule.windows.iter().zip(&arrivals).enumerate() {
        let mu = f.mean();
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            i + 1,
            output::fmt6(w.start),
            output::fmt6(w.width),
            output::fmt6(w.end()),
            output::fmt6(w.start - mu),
            output::fmt6(w.end() - mu),
        ));
    }
    output::write_text(common.out.as_deref(), &text)?;
    Ok(())
}

fn cmd_evaluate(common: &CommonArgs) -> Result<(), CliError> {
    let loaded = load(common)?;
    let runs = loaded
        .cfg
        .evaluate
        .as_ref()
        .ok_or_else(|| CliError::Usage("config has no evaluate block".into()))?
        .runs;
    let (schedule, _) = solve_schedule(&loaded, false)?;
    let threads = resolve_threads(common.threads);
    let parts = parallel_chunks(runs, threads, |range| {
        eval::mc_accumulate(&schedule, &loaded.legs, loaded.cfg.omega, loaded.seed, range)
    });
    let merged = parts
        .into_iter()
        .reduce(|a, b| a.merge(b))
        .expect("at least one chunk");
    let breakdown = eval::mc_finalize(&merged, &schedule, &loaded.penalty);
    let mut text = output::meta_lines(&loaded.hash, loaded.seed);
    text.push_str(&format!("# total={}\n", output::fmt6(breakdown.total)));
    text.push_str(&format!("# std_error={}\n", output::fmt6(breakdown.std_error)));
    text.push_str("client,late,early,width,total\n");
    for (i, (late, early, width)) in breakdown.per_client.iter().enumerate() {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            i + 1,
            output::fmt6(*late),
            output::fmt6(*early),
            output::fmt6(*width),
            output::fmt6(late + early + width),
        ));
    }
    output::write_text(common.out.as_deref(), &text)?;
    Ok(())
}

fn cmd_simulate(common: &CommonArgs) -> Result<(), CliError> {
    let loaded = load(common)?;
    let dw = loaded
        .cfg
        .dwos
        .as_ref()
        .ok_or_else(|| CliError::Usage("config has no dwos block".into()))?;
    let thresholds = dw
        .notice_thresholds
        .clone()
        .unwrap_or_else(|| vec![DEFAULT_NOTICE_THRESHOLD]);
    let threads = resolve_threads(common.threads);
    let engine = loaded.cfg.engine.build();

    let mut summary = output::meta_lines(&loaded.hash, loaded.seed);
    summary.push_str("T,mean_static_cost,mean_dwos_cost,rel_diff_pct\n");
    let mut records_text = String::new();
    let mut notice_text = String::new();

    for &t in &thresholds {
        let sim = DwosConfig {
            tau: dw.recompute_period.unwrap_or(DEFAULT_RECOMPUTE_PERIOD),
            threshold: t,
            omega: loaded.cfg.omega,
            penalty: loaded.penalty.clone(),
            engine: engine.clone(),
            runs: dw.runs,
            seed: loaded.seed,
        };
        let chunks: Vec<Result<Vec<DwosRunRecord>, String>> =
            parallel_chunks(dw.runs, threads, |range| {
                range
                    .map(|run| dwos::simulate_run(&loaded.legs, &sim, run))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| e.to_string())
            });
        let mut records = Vec::with_capacity(dw.runs as usize);
        for chunk in chunks {
            records.extend(chunk.map_err(CliError::Solver)?);
        }
        let m = records.len() as f64;
        let mean_static = records.iter().map(|r| r.static_costs.total).sum::<f64>() / m;
        let mean_dwos = records.iter().map(|r| r.costs.total).sum::<f64>() / m;
        let rel = dwos::relative_difference(mean_static, mean_dwos)
            .map_err(|e| CliError::Solver(e.to_string()))?;
        summary.push_str(&format!(
            "{},{},{},{}\n",
            output::fmt6(t),
            output::fmt6(mean_static),
            output::fmt6(mean_dwos),
            output::fmt6(rel),
        ));

        if !dw.notice_clients.is_empty() {
            let stats = dwos::advance_notice_stats(&records, &dw.notice_clients, &dw.notice_bands);
            notice_text.push_str(&format!("# notice_table T={}\n", output::fmt6(t)));
            notice_text.push_str("client,updates,mean_notice");
            for band in &dw.notice_bands {
                notice_text.push_str(&format!(",frac_below_{band}"));
            }
            notice_text.push('\n');
            for s in stats {
                notice_text.push_str(&format!(
                    "{},{},{}",
                    s.client + 1,
                    s.updates,
                    s.mean.map_or_else(|| "na".into(), output::fmt6),
                ));
                match &s.frac_below {
                    Some(fracs) => {
                        for f in fracs {
                            notice_text.push_str(&format!(",{}", output::fmt6(*f)));
                        }
                    }
                    None => {
                        for _ in &dw.notice_bands {
                            notice_text.push_str(",na");
                        }
                    }
                }
                notice_text.push('\n');
            }
        }

        if common.out.is_some() {
            for (run, rec) in records.iter().enumerate() {
                let line = serde_json::json!({
                    "threshold": t,
                    "run": run,
                    "record": rec,
                });
                records_text.push_str(&line.to_string());
                records_text.push('\n');
            }
        }
    }

    summary.push_str(&notice_text);
    output::write_text(common.out.as_deref(), &summary)?;
    if let Some(out) = &common.out {
        let mut jsonl = out.as_os_str().to_owned();
        jsonl.push(".jsonl");
        std::fs::write(&jsonl, records_text)?;
    }
    Ok(())
}

fn read_dataset(path: &Path) -> Result<Vec<StopPair>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read dataset: {e}")))?;
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    let header = lines.next().unwrap_or_default();
    if header.trim() != "distance_km,time_min" {
        return Err(CliError::Data(format!(
            "expected header \"distance_km,time_min\", got {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for (num, line) in lines.enumerate() {
        let mut parts = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64, CliError> {
            s.map(str::trim)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| CliError::Data(format!("bad row {}: {line:?}", num + 2)))
        };
        let distance = parse(parts.next())?;
        let time = parse(parts.next())?;
        rows.push(StopPair { distance, time });
    }
    Ok(rows)
}

fn cmd_fit(data: &Path, k: usize, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let seed = match std::env::var("TW_SEED") {
        Ok(v) => v.parse().unwrap_or(seed),
        Err(_) => seed,
    };
    let rows = read_dataset(data)?;
    let (train, _test) =
        datafit::load_and_clean(&rows, seed).map_err(|e| CliError::Data(e.to_string()))?;
    let fit = datafit::fit_mixture_em(&train, k, seed, 500)
        .map_err(|e| CliError::Data(e.to_string()))?;
    let params = format!("{{\"data_rows\":{},\"k\":{k},\"seed\":{seed}}}", rows.len());
    let model = serde_json::json!({
        "config_hash": output::config_hash(&params),
        "seed": seed,
        "K": fit.model.k(),
        "components": fit.model.components,
        "log_likelihood": fit.log_likelihoods.last().copied(),
        "iterations": fit.iterations,
    });
    let mut text = serde_json::to_string_pretty(&model).expect("model serializes");
    text.push('\n');
    output::write_text(out, &text)?;
    eprintln!(
        "fit: k={k} iterations={} log_likelihood={:.6}",
        fit.iterations,
        fit.log_likelihoods.last().copied().unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_gen(seed: u64, rows: usize, out: Option<&Path>) -> Result<(), CliError> {
    let seed = match std::env::var("TW_SEED") {
        Ok(v) => v.parse().unwrap_or(seed),
        Err(_) => seed,
    };
    let params = format!("{{\"rows\":{rows},\"seed\":{seed}}}");
    let mut text = output::meta_lines(&output::config_hash(&params), seed);
    text.push_str(&gen::to_csv(&gen::generate(rows, seed)));
    output::write_text(out, &text)?;
    Ok(())
}
