//! `sisperm` command-line front end.
//!
//! Output goes to stdout as JSON (default) or CSV; progress and errors go to
//! stderr. Exit status is 2 for bad flags and 1 for computational failures.
//! Sample `k` of a run seeded with `S` uses the ChaCha8 stream `(S, k)`, so
//! results do not depend on `--workers`.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sisperm::analysis::{clt_check_with, mcmc_reference, table1, table2};
use sisperm::chain::{coupling_time_test, exact_theta_moments, max_correlation};
use sisperm::counting::{count_matchings, ln_biguint, perron};
use sisperm::optprob::solve_opt_probs;
use sisperm::sampler::{estimate_with, substream, Sampler, SamplerKind, Source};
use sisperm::states::state_graph;
use sisperm::{permanent_ryser, BandSpec, BipartiteGraph, Error};

const TABLE1_PAIRS: [(usize, usize); 7] = [(2, 1), (3, 1), (4, 1), (5, 1), (6, 1), (7, 1), (3, 2)];
const TABLE2_NS: [usize; 6] = [100, 200, 500, 1000, 2000, 5000];

#[derive(Parser, Debug)]
#[command(name = "sisperm", version, about = "Count and sample perfect matchings of band bipartite graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,

    /// Worker threads for sampling (never changes the numbers).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct BandArgs {
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct SampleArgs {
    /// Number of draws.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Kind {
    Uniform,
    Sequence,
    #[value(name = "opt-t1")]
    OptT1,
    Limiting,
}

impl From<Kind> for SamplerKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Uniform => SamplerKind::Uniform,
            Kind::Sequence => SamplerKind::Sequence,
            Kind::OptT1 => SamplerKind::OptT1,
            Kind::Limiting => SamplerKind::Limiting,
        }
    }
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Which {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    Mcmc,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum Diag {
    Corr,
    States,
    Perron,
    Coupling,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact number of perfect matchings.
    Count {
        #[command(flatten)]
        band: BandArgs,
        /// 0/1 matrix file instead of a band.
        #[arg(long, conflicts_with_all = ["s", "t", "n"])]
        graph: Option<PathBuf>,
    },
    /// Importance-sampling estimate of the log count.
    Estimate {
        #[command(flatten)]
        band: BandArgs,
        #[arg(long, conflicts_with_all = ["s", "t", "n"])]
        graph: Option<PathBuf>,
        /// Defaults to `sequence` for bands and `uniform` for graph files.
        #[arg(long, value_enum)]
        sampler: Option<Kind>,
        #[command(flatten)]
        sampling: SampleArgs,
    },
    /// Exact moments of the forced-move count and of log rho.
    Moments {
        #[command(flatten)]
        band: BandArgs,
    },
    /// Optimal up-move probabilities for t = 1 bands.
    Optprobs {
        #[arg(long)]
        t: usize,
        /// Emit every row from 1 to t.
        #[arg(long)]
        table: bool,
    },
    /// Reproduce the growth-constant, sample-size and probability tables.
    Tables {
        #[arg(long, value_enum)]
        which: Which,
        /// Base length for the growth constants (power of two, at least 1024).
        #[arg(long, default_value_t = 2048)]
        n_big: usize,
    },
    /// Normality check of the forced-move count under uniform sampling.
    Clt {
        #[command(flatten)]
        band: BandArgs,
        #[command(flatten)]
        sampling: SampleArgs,
    },
    /// Chain diagnostics.
    Diag {
        #[arg(value_enum)]
        what: Diag,
        #[command(flatten)]
        band: BandArgs,
        /// Trials for the coupling test.
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidSpec(_) | Error::InvalidArgument(_) | Error::WrongT(_) => Failure::Usage(e.to_string()),
            other => Failure::Compute(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Compute(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

impl BandArgs {
    fn spec(&self) -> std::result::Result<BandSpec, Failure> {
        match (self.s, self.t, self.n) {
            (Some(s), Some(t), Some(n)) => Ok(BandSpec::new(s, t, n)?),
            _ => Err(Failure::Usage("--s, --t and --n are required".into())),
        }
    }

    fn pair(&self) -> std::result::Result<(usize, usize), Failure> {
        match (self.s, self.t) {
            (Some(s), Some(t)) if s > 0 && t > 0 => Ok((s, t)),
            _ => Err(Failure::Usage("--s and --t must be positive".into())),
        }
    }
}

fn read_graph(path: &PathBuf) -> std::result::Result<BipartiteGraph, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(BipartiteGraph::parse(&text)?)
}

struct Out {
    format: Format,
}

impl Out {
    fn json<T: Serialize>(&self, value: &T) -> Outcome {
        let mut stdout = io::stdout().lock();
        serde_json::to_writer_pretty(&mut stdout, value).map_err(|e| Failure::Compute(e.to_string()))?;
        writeln!(stdout)?;
        Ok(())
    }

    fn csv(&self, header: &[&str], rows: &[Vec<String>]) -> Outcome {
        let mut w = csv::Writer::from_writer(io::stdout().lock());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn emit<T: Serialize>(&self, value: &T, header: &[&str], rows: impl FnOnce() -> Vec<Vec<String>>) -> Outcome {
        match self.format {
            Format::Json => self.json(value),
            Format::Csv => self.csv(header, &rows()),
        }
    }
}

fn f(x: f64) -> String {
    format!("{x}")
}

#[derive(Serialize)]
struct CountOutput {
    s: Option<usize>,
    t: Option<usize>,
    n: usize,
    count_decimal: String,
    log_count: f64,
}

#[derive(Serialize)]
struct EstimateOutput {
    s: Option<usize>,
    t: Option<usize>,
    n: usize,
    sampler: SamplerKind,
    seed: u64,
    n_samples: usize,
    log_estimate: f64,
    stderr_log: f64,
    ess: f64,
}

#[derive(Serialize)]
struct StateRow {
    index: usize,
    state: sisperm::StateTuple,
    forced: bool,
    successors: Vec<usize>,
}

#[derive(Serialize)]
struct StatesOutput {
    s: usize,
    t: usize,
    initial: usize,
    strongly_connected: bool,
    states: Vec<StateRow>,
}

fn count(out: &Out, band: &BandArgs, graph: &Option<PathBuf>) -> Outcome {
    let (s, t, n, c) = match graph {
        Some(path) => {
            let g = read_graph(path)?;
            let n = g.order()?;
            (None, None, n, permanent_ryser(&g)?)
        }
        None => {
            let sp = band.spec()?;
            (Some(sp.s), Some(sp.t), sp.n, count_matchings(sp)?)
        }
    };
    let o = CountOutput { s, t, n, count_decimal: c.to_string(), log_count: ln_biguint(&c) };
    out.emit(&o, &["s", "t", "n", "count_decimal", "log_count"], || {
        let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
        vec![vec![opt(o.s), opt(o.t), o.n.to_string(), o.count_decimal.clone(), f(o.log_count)]]
    })
}

fn estimate(
    out: &Out,
    workers: Option<usize>,
    band: &BandArgs,
    graph: &Option<PathBuf>,
    kind: Option<Kind>,
    sampling: &SampleArgs,
) -> Outcome {
    let g;
    let (source, s, t) = match graph {
        Some(path) => {
            g = read_graph(path)?;
            (Source::Graph(&g), None, None)
        }
        None => {
            let sp = band.spec()?;
            (Source::Band(sp), Some(sp.s), Some(sp.t))
        }
    };
    let default = if graph.is_some() { Kind::Uniform } else { Kind::Sequence };
    let sampler = Sampler::new(kind.unwrap_or(default).into(), source)?;
    eprintln!("sampling {} matchings ({})", sampling.samples, sampler.kind());
    let e = estimate_with(&sampler, sampling.samples, sampling.seed, workers)?;
    let o = EstimateOutput {
        s,
        t,
        n: sampler.n(),
        sampler: sampler.kind(),
        seed: sampling.seed,
        n_samples: e.n_samples,
        log_estimate: e.log_estimate,
        stderr_log: e.stderr_log,
        ess: e.ess,
    };
    out.emit(
        &o,
        &["s", "t", "n", "sampler", "seed", "n_samples", "log_estimate", "stderr_log", "ess"],
        || {
            let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
            vec![vec![
                opt(o.s),
                opt(o.t),
                o.n.to_string(),
                o.sampler.to_string(),
                o.seed.to_string(),
                o.n_samples.to_string(),
                f(o.log_estimate),
                f(o.stderr_log),
                f(o.ess),
            ]]
        },
    )
}

fn moments(out: &Out, band: &BandArgs) -> Outcome {
    let m = exact_theta_moments(band.spec()?)?;
    out.emit(
        &m,
        &["s", "t", "n", "E_theta", "Var_theta", "E_log_rho", "Var_log_rho", "c", "d", "log_count"],
        || {
            vec![vec![
                m.spec.s.to_string(),
                m.spec.t.to_string(),
                m.spec.n.to_string(),
                f(m.e_theta),
                f(m.var_theta),
                f(m.e_log_rho),
                f(m.var_log_rho),
                f(m.c),
                f(m.d),
                f(m.log_count),
            ]]
        },
    )
}

fn optprobs(out: &Out, t: usize, table: bool) -> Outcome {
    let ts: Vec<usize> = if table { (1..=t).collect() } else { vec![t] };
    let rows = ts.iter().map(|&t| solve_opt_probs(t)).collect::<sisperm::Result<Vec<_>>>()?;
    opt_rows(out, &rows, table)
}

fn opt_rows(out: &Out, rows: &[sisperm::OptProbs64], as_list: bool) -> Outcome {
    let width = rows.iter().map(|r| r.p.len()).max().unwrap_or(0);
    let mut header = vec!["t".to_string()];
    header.extend((1..=width).map(|k| format!("p{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let csv_rows = || {
        rows.iter()
            .map(|r| {
                let mut v = vec![r.t.to_string()];
                v.extend(r.p.iter().map(|p| format!("{p:.5}")));
                v.resize(width + 1, String::new());
                v
            })
            .collect()
    };
    if as_list {
        out.emit(&rows, &header, csv_rows)
    } else {
        out.emit(&rows[0], &header, csv_rows)
    }
}

fn tables(out: &Out, which: Which, n_big: usize) -> Outcome {
    match which {
        Which::One => {
            eprintln!("growth constants at n = {n_big} and {}", 2 * n_big);
            let rows = table1(&TABLE1_PAIRS, n_big)?;
            out.emit(&rows, &["s", "t", "c", "d"], || {
                rows.iter()
                    .map(|r| vec![r.s.to_string(), r.t.to_string(), format!("{:.5}", r.c), format!("{:.5}", r.d)])
                    .collect()
            })
        }
        Which::Two => {
            let tab = table2(&TABLE1_PAIRS, &TABLE2_NS)?;
            out.emit(&tab, &["s", "t", "n", "log_nconv_n", "log_mcmc_reference"], || {
                tab.rows
                    .iter()
                    .map(|r| {
                        vec![
                            r.s.to_string(),
                            r.t.to_string(),
                            r.n.to_string(),
                            f(r.log_nconv_n),
                            f(r.log_mcmc_reference),
                        ]
                    })
                    .collect()
            })
        }
        Which::Three => {
            let rows = (1..=9).map(solve_opt_probs).collect::<sisperm::Result<Vec<_>>>()?;
            opt_rows(out, &rows, true)
        }
        Which::Mcmc => {
            #[derive(Serialize)]
            struct Row {
                n: usize,
                log_mcmc_reference: f64,
            }
            let rows: Vec<Row> =
                TABLE2_NS.iter().map(|&n| Row { n, log_mcmc_reference: mcmc_reference(n) }).collect();
            out.emit(&rows, &["n", "log_mcmc_reference"], || {
                rows.iter().map(|r| vec![r.n.to_string(), f(r.log_mcmc_reference)]).collect()
            })
        }
    }
}

fn clt(out: &Out, workers: Option<usize>, band: &BandArgs, sampling: &SampleArgs) -> Outcome {
    let sp = band.spec()?;
    eprintln!("sampling {} uniform matchings", sampling.samples);
    let r = clt_check_with(sp, sampling.samples, sampling.seed, workers)?;
    out.emit(
        &r,
        &["s", "t", "n", "n_samples", "ks_statistic", "mean_theta", "var_theta", "sample_mean", "sample_var"],
        || {
            vec![vec![
                sp.s.to_string(),
                sp.t.to_string(),
                sp.n.to_string(),
                r.n_samples.to_string(),
                f(r.ks_statistic),
                f(r.mean_theta),
                f(r.var_theta),
                f(r.sample_mean),
                f(r.sample_var),
            ]]
        },
    )
}

fn diag(out: &Out, what: Diag, band: &BandArgs, trials: usize, seed: u64) -> Outcome {
    match what {
        Diag::Corr => {
            let r = max_correlation(band.spec()?)?;
            out.emit(&r, &["step", "rho"], || {
                r.rho.iter().enumerate().map(|(i, p)| vec![i.to_string(), f(*p)]).collect()
            })
        }
        Diag::States => {
            let (s, t) = band.pair()?;
            let g = state_graph(s, t)?;
            let sp = &g.space;
            let o = StatesOutput {
                s,
                t,
                initial: sp.initial(),
                strongly_connected: g.is_strongly_connected(),
                states: (0..sp.len())
                    .map(|i| StateRow {
                        index: i,
                        state: *sp.state(i),
                        forced: sp.is_forced(i),
                        successors: g.successors(i),
                    })
                    .collect(),
            };
            out.emit(&o, &["index", "state", "forced", "successors"], || {
                o.states
                    .iter()
                    .map(|r| {
                        let succ: Vec<String> = r.successors.iter().map(usize::to_string).collect();
                        vec![r.index.to_string(), r.state.to_string(), r.forced.to_string(), succ.join(" ")]
                    })
                    .collect()
            })
        }
        Diag::Perron => {
            let (s, t) = band.pair()?;
            let sd = perron(s, t)?;
            let space = state_graph(s, t)?.space;
            out.emit(&sd, &["index", "state", "v"], || {
                sd.v.iter()
                    .enumerate()
                    .map(|(i, v)| vec![i.to_string(), space.state(i).to_string(), f(*v)])
                    .collect()
            })
        }
        Diag::Coupling => {
            let sp = band.spec()?;
            eprintln!("running {trials} coupling trials");
            let r = coupling_time_test(sp, &mut substream(seed, 0), trials)?;
            out.emit(&r, &["k", "survival"], || {
                r.survival.iter().enumerate().map(|(k, p)| vec![k.to_string(), f(*p)]).collect()
            })
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    if cli.workers == Some(0) {
        return Err(Failure::Usage("--workers must be positive".into()));
    }
    let out = Out { format: cli.format };
    match &cli.command {
        Command::Count { band, graph } => count(&out, band, graph),
        Command::Estimate { band, graph, sampler, sampling } => {
            estimate(&out, cli.workers, band, graph, *sampler, sampling)
        }
        Command::Moments { band } => moments(&out, band),
        Command::Optprobs { t, table } => optprobs(&out, *t, *table),
        Command::Tables { which, n_big } => tables(&out, *which, *n_big),
        Command::Clt { band, sampling } => clt(&out, cli.workers, band, sampling),
        Command::Diag { what, band, trials, seed } => diag(&out, *what, band, *trials, *seed),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
