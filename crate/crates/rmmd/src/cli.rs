//! Command-line surface: run tests on files, run multiclass comparison
//! plans, generate synthetic data and drive benchmark experiments.
//!
//! Exit codes: 0 on success (a rejected H0 is data, not an error), 2 on
//! usage errors, 1 on runtime errors. Results go to --out or stdout; the
//! fully resolved configuration is logged to stderr and echoed in the
//! output (`# key=value` header lines in CSV, a `config` object in JSON).

use crate::bench;
use crate::dataio::{self, LabelColumn};
use crate::multcomp::{self, ComparisonMode, ComparisonPlan};
use crate::synthdata::{self, GeneratorSpec};
use crate::testing::{run_test, Method, NullMode, TestConfig, TestOutcome};
use crate::{Error, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "rmmd",
    version,
    about = "Kernel two-sample hypothesis testing and benchmark harness"
)]
struct Cli {
    /// Master seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, default_value = "json", value_parser = ["csv", "json"])]
    format: String,

    /// Worker threads (0 = automatic).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct TestFlags {
    /// Test statistic: rmmd, mmd, kfda or ks.
    #[arg(long, default_value = "rmmd")]
    method: String,

    /// Kernel spec: gaussian:median, gaussian:<sigma>, pcosh, plog:<theta>,
    /// pprod:<theta>. Ignored by ks.
    #[arg(long, default_value = "gaussian:median")]
    kernel: String,

    /// Sets both regularization constants.
    #[arg(long)]
    kappa: Option<f64>,

    #[arg(long)]
    kappa_p: Option<f64>,

    #[arg(long)]
    kappa_q: Option<f64>,

    /// KFDA regularization.
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,

    #[arg(long, default_value_t = 0.05)]
    alpha: f64,

    /// Null model: normal (rmmd only) or permutation. Defaults to normal
    /// for rmmd, permutation otherwise.
    #[arg(long)]
    null: Option<String>,

    #[arg(long, default_value_t = 1000)]
    permutations: usize,

    /// Fail instead of falling back to the permutation null when the
    /// normal-mode variance degenerates.
    #[arg(long)]
    no_fallback: bool,
}

impl TestFlags {
    fn to_config(&self, seed: u64) -> Result<TestConfig> {
        let method: Method = self.method.parse()?;
        let mut cfg = TestConfig::new(method).with_seed(seed);
        if method != Method::Ks {
            cfg.kernel = Some(self.kernel.parse()?);
        }
        if let Some(k) = self.kappa {
            cfg = cfg.with_kappa(k);
        }
        if let Some(k) = self.kappa_p {
            cfg.kappa_p = k;
        }
        if let Some(k) = self.kappa_q {
            cfg.kappa_q = k;
        }
        cfg.gamma = self.gamma;
        cfg.alpha = self.alpha;
        if let Some(null) = &self.null {
            cfg.null_mode = match null.as_str() {
                "normal" => NullMode::Normal,
                "permutation" => NullMode::Permutation,
                other => {
                    return Err(Error::InvalidConfig(format!("unknown null mode `{other}`")))
                }
            };
        }
        cfg.n_permutations = self.permutations;
        cfg.fallback_on_degenerate = !self.no_fallback;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Two-sample test on point files (CSV, one row per point).
    Test {
        #[command(flatten)]
        flags: TestFlags,
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
    },
    /// Multiple comparisons over the classes of a labeled dataset.
    Multcomp {
        #[command(flatten)]
        flags: TestFlags,
        /// Labeled CSV or LibSVM file (by extension: .libsvm/.svm).
        #[arg(long)]
        data: PathBuf,
        /// Label column name (with --has-header) or 0-based index.
        #[arg(long, default_value = "0")]
        label_column: String,
        #[arg(long)]
        has_header: bool,
        #[arg(long, default_value = "pairwise", value_parser = ["pairwise", "one-vs-all"])]
        mode: String,
        /// Familywise significance level.
        #[arg(long, default_value_t = 0.05)]
        family_alpha: f64,
        /// Subsample every class to this many rows first.
        #[arg(long)]
        per_class: Option<usize>,
        /// Per-feature standardization.
        #[arg(long)]
        standardize: bool,
    },
    /// Draw from a synthetic generator.
    Synth {
        /// Generator spec: uniform1d, puni1d:omega=6, uniform2d,
        /// puni2d:omega=3, gauss:d=25,c=1.5.
        #[arg(long)]
        generator: String,
        #[arg(long)]
        n: usize,
    },
    /// Monte-Carlo power (or type-I error when both generators agree).
    Power {
        #[command(flatten)]
        flags: TestFlags,
        #[arg(long)]
        gen_p: String,
        #[arg(long)]
        gen_q: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
        /// Repeat the whole estimate this many times and report mean +- SD.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Power as a function of the regularization constant.
    KappaSweep {
        #[command(flatten)]
        flags: TestFlags,
        #[arg(long)]
        gen_p: String,
        #[arg(long)]
        gen_q: String,
        #[arg(long)]
        n: usize,
        /// Comma-separated grid, e.g. 0,0.2,0.4,...
        #[arg(long)]
        kappas: String,
        #[arg(long, default_value_t = 1000)]
        reps: usize,
    },
    /// Relative efficiency: ratio of minimal sample sizes of two tests.
    Are {
        #[arg(long)]
        gen_p: String,
        #[arg(long)]
        gen_q: String,
        /// First-named test (T).
        #[arg(long, default_value = "mmd")]
        t_method: String,
        #[arg(long, default_value = "gaussian:median")]
        t_kernel: String,
        #[arg(long, default_value_t = 1.0)]
        t_kappa: f64,
        /// Second-named test (V); the reported ratio is N_V / N_T.
        #[arg(long, default_value = "rmmd")]
        v_method: String,
        #[arg(long, default_value = "gaussian:median")]
        v_kernel: String,
        #[arg(long, default_value_t = 1.0)]
        v_kappa: f64,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 0.95)]
        target_power: f64,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[arg(long, default_value_t = 4000)]
        n_max: usize,
        #[arg(long, default_value_t = 1000)]
        permutations: usize,
    },
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap exits 0 for --help/--version, 2 for usage errors
            e.exit();
        }
    };
    let threads = cli.threads;
    let body = || match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    if threads > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(body),
            Err(e) => {
                eprintln!("error: {e}");
                1
            }
        }
    } else {
        body()
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Test { flags, x, y } => {
            let cfg = flags.to_config(cli.seed)?;
            let xs = dataio::read_points_csv(x)?;
            let ys = dataio::read_points_csv(y)?;
            let outcome = run_test(&xs, &ys, &cfg)?;
            log_config(&config_lines_test(&outcome));
            emit(cli, &outcome, &config_lines_test(&outcome), |o| {
                let mut w = CsvBuf::new(&[
                    "method",
                    "statistic",
                    "p_value",
                    "reject",
                    "null_center",
                    "null_scale",
                    "n_used",
                    "null_mode_used",
                ]);
                w.row(&[
                    o.config.method.to_string(),
                    fmt_f(o.statistic),
                    fmt_f(o.p_value),
                    o.reject.to_string(),
                    fmt_f(o.null_center),
                    fmt_f(o.null_scale),
                    o.n_used.to_string(),
                    format!("{:?}", o.null_mode_used).to_lowercase(),
                ]);
                w.finish()
            })
        }
        Command::Multcomp {
            flags,
            data,
            label_column,
            has_header,
            mode,
            family_alpha,
            per_class,
            standardize,
        } => {
            let cfg = flags.to_config(cli.seed)?;
            let ext = data
                .extension()
                .and_then(|e| e.to_str())
                .unwrap_or_default();
            let mut ds = if matches!(ext, "libsvm" | "svm") {
                dataio::read_libsvm(data)?
            } else {
                let col: LabelColumn = label_column.parse().expect("infallible");
                dataio::read_csv(data, &col, *has_header)?
            };
            if let Some(k) = per_class {
                let sub = dataio::subsample_classes(&ds, *k, cli.seed)?;
                if !sub.short_classes.is_empty() {
                    eprintln!(
                        "note: classes smaller than {k} taken whole: {}",
                        sub.short_classes.join(", ")
                    );
                }
                ds = sub.dataset;
            }
            if *standardize {
                ds = ds.standardized();
            }
            let plan = ComparisonPlan::new(
                mode.parse::<ComparisonMode>()?,
                ds.groups(),
                *family_alpha,
            )?;
            let report = multcomp::run_plan(&plan, &cfg)?;
            let header = vec![
                format!("mode={mode}"),
                format!("alpha_family={family_alpha}"),
                format!("alpha_per_test={}", fmt_f(report.alpha_per_test)),
                format!("comparisons={}", report.comparisons.len()),
                format!("seed={}", cli.seed),
            ];
            log_config(&header);
            emit(cli, &report, &header, |r| {
                let mut w = CsvBuf::new(&[
                    "label_a",
                    "label_b",
                    "statistic",
                    "p_value",
                    "alpha_per_test",
                    "reject",
                ]);
                for c in &r.comparisons {
                    w.row(&[
                        c.label_a.clone(),
                        c.label_b.clone(),
                        fmt_f(c.outcome.statistic),
                        fmt_f(c.outcome.p_value),
                        fmt_f(r.alpha_per_test),
                        (c.outcome.p_value < r.alpha_per_test).to_string(),
                    ]);
                }
                w.finish()
            })
        }
        Command::Synth { generator, n } => {
            let spec: GeneratorSpec = generator.parse()?;
            let s = synthdata::sample(&spec, *n, cli.seed)?;
            let header = vec![
                format!("generator={spec}"),
                format!("n={n}"),
                format!("seed={}", cli.seed),
            ];
            log_config(&header);
            let payload = SynthOutput {
                generator: spec,
                n: *n,
                seed: cli.seed,
                points: s.points().map(|p| p.to_vec()).collect(),
            };
            emit(cli, &payload, &header, |p| {
                let mut buf = String::new();
                for row in &p.points {
                    let cells: Vec<String> = row.iter().map(|v| fmt_f(*v)).collect();
                    buf.push_str(&cells.join(","));
                    buf.push('\n');
                }
                buf
            })
        }
        Command::Power {
            flags,
            gen_p,
            gen_q,
            n,
            reps,
            runs,
        } => {
            let cfg = flags.to_config(cli.seed)?;
            let gp: GeneratorSpec = gen_p.parse()?;
            let gq: GeneratorSpec = gen_q.parse()?;
            let header = vec![
                format!("gen_p={gp}"),
                format!("gen_q={gq}"),
                format!("n={n}"),
                format!("reps={reps}"),
                format!("method={}", cfg.method),
                format!("seed={}", cli.seed),
            ];
            log_config(&header);
            match runs {
                None => {
                    let est = bench::estimate_power(&gp, &gq, *n, &cfg, *reps, cli.seed)?;
                    emit(cli, &est, &header, |e| {
                        let mut w =
                            CsvBuf::new(&["gen_p", "gen_q", "n", "power", "std_err", "reps"]);
                        w.row(&[
                            e.gen_p.to_string(),
                            e.gen_q.to_string(),
                            e.n_per_sample.to_string(),
                            fmt_f(e.power),
                            fmt_f(e.std_err),
                            e.reps.to_string(),
                        ]);
                        w.finish()
                    })
                }
                Some(runs) => {
                    let rep = bench::estimate_power_runs(&gp, &gq, *n, &cfg, *reps, *runs, cli.seed)?;
                    emit(cli, &rep, &header, |r| {
                        let mut w = CsvBuf::new(&["run", "power", "std_err", "mean", "std_dev"]);
                        for (i, e) in r.runs.iter().enumerate() {
                            w.row(&[
                                i.to_string(),
                                fmt_f(e.power),
                                fmt_f(e.std_err),
                                fmt_f(r.mean),
                                fmt_f(r.std_dev),
                            ]);
                        }
                        w.finish()
                    })
                }
            }
        }
        Command::KappaSweep {
            flags,
            gen_p,
            gen_q,
            n,
            kappas,
            reps,
        } => {
            let cfg = flags.to_config(cli.seed)?;
            let gp: GeneratorSpec = gen_p.parse()?;
            let gq: GeneratorSpec = gen_q.parse()?;
            let grid: Vec<f64> = kappas
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidConfig(format!("bad kappa `{s}`")))
                })
                .collect::<Result<_>>()?;
            let header = vec![
                format!("gen_p={gp}"),
                format!("gen_q={gq}"),
                format!("n={n}"),
                format!("reps={reps}"),
                format!("kappas={kappas}"),
                format!("seed={}", cli.seed),
            ];
            log_config(&header);
            let sweep = bench::kappa_sweep(&gp, &gq, *n, &grid, &cfg, *reps, cli.seed)?;
            let payload: Vec<SweepRow> = sweep
                .iter()
                .map(|(kappa, est)| SweepRow {
                    kappa: *kappa,
                    n: est.n_per_sample,
                    power: est.power,
                    std_err: est.std_err,
                    reps: est.reps,
                })
                .collect();
            emit(cli, &payload, &header, |rows| {
                let mut w = CsvBuf::new(&["kappa", "n", "power", "std_err", "reps"]);
                for r in rows {
                    w.row(&[
                        fmt_f(r.kappa),
                        r.n.to_string(),
                        fmt_f(r.power),
                        fmt_f(r.std_err),
                        r.reps.to_string(),
                    ]);
                }
                w.finish()
            })
        }
        Command::Are {
            gen_p,
            gen_q,
            t_method,
            t_kernel,
            t_kappa,
            v_method,
            v_kernel,
            v_kappa,
            gamma,
            alpha,
            target_power,
            reps,
            n_max,
            permutations,
        } => {
            let gp: GeneratorSpec = gen_p.parse()?;
            let gq: GeneratorSpec = gen_q.parse()?;
            let mk_cfg = |method: &str, kernel: &str, kappa: f64| -> Result<TestConfig> {
                let m: Method = method.parse()?;
                let mut cfg = TestConfig::new(m).with_seed(cli.seed).with_kappa(kappa);
                if m != Method::Ks {
                    cfg.kernel = Some(kernel.parse()?);
                }
                cfg.gamma = *gamma;
                cfg.alpha = *alpha;
                cfg.n_permutations = *permutations;
                cfg.validate()?;
                Ok(cfg)
            };
            let cfg_t = mk_cfg(t_method, t_kernel, *t_kappa)?;
            let cfg_v = mk_cfg(v_method, v_kernel, *v_kappa)?;
            let header = vec![
                format!("gen_p={gp}"),
                format!("gen_q={gq}"),
                format!("t={t_method}:{t_kernel}"),
                format!("v={v_method}:{v_kernel}"),
                format!("target_power={target_power}"),
                format!("reps={reps}"),
                format!("n_max={n_max}"),
                format!("seed={}", cli.seed),
            ];
            log_config(&header);
            let result = bench::are(&gp, &gq, &cfg_t, &cfg_v, *target_power, *reps, cli.seed, *n_max)?;
            emit(cli, &result, &header, |r| {
                let mut w = CsvBuf::new(&["role", "n", "power"]);
                for (n, p) in &r.trace_t {
                    w.row(&["T".into(), n.to_string(), fmt_f(*p)]);
                }
                for (n, p) in &r.trace_v {
                    w.row(&["V".into(), n.to_string(), fmt_f(*p)]);
                }
                w.row(&["result".into(), r.n_t.to_string(), fmt_f(r.ratio)]);
                w.finish()
            })
        }
    }
}

#[derive(Serialize)]
struct SynthOutput {
    generator: GeneratorSpec,
    n: usize,
    seed: u64,
    points: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct SweepRow {
    kappa: f64,
    n: usize,
    power: f64,
    std_err: f64,
    reps: usize,
}

fn config_lines_test(o: &TestOutcome) -> Vec<String> {
    let mut lines = vec![
        format!("method={}", o.config.method),
        format!("alpha={}", o.config.alpha),
        format!("null_mode_used={:?}", o.null_mode_used).to_lowercase(),
        format!("n_used={}", o.n_used),
        format!("seed={}", o.config.seed),
    ];
    if let Some(k) = &o.resolved_kernel {
        lines.insert(1, format!("kernel={k}"));
    }
    if o.config.method == Method::Rmmd {
        lines.push(format!("kappa_p={}", o.config.kappa_p));
        lines.push(format!("kappa_q={}", o.config.kappa_q));
    }
    lines
}

fn log_config(lines: &[String]) {
    eprintln!("config: {}", lines.join(" "));
}

/// Shortest round-trip float formatting; CSV and JSON carry identical values.
fn fmt_f(v: f64) -> String {
    format!("{v}")
}

struct CsvBuf {
    buf: String,
}

impl CsvBuf {
    fn new(columns: &[&str]) -> Self {
        CsvBuf {
            buf: format!("{}\n", columns.join(",")),
        }
    }

    fn row(&mut self, cells: &[String]) {
        self.buf.push_str(&cells.join(","));
        self.buf.push('\n');
    }

    fn finish(self) -> String {
        self.buf
    }
}

#[derive(Serialize)]
struct JsonEnvelope<'a, T: Serialize> {
    config: Vec<&'a str>,
    result: &'a T,
}

fn emit<T: Serialize>(
    cli: &Cli,
    payload: &T,
    header: &[String],
    to_csv: impl Fn(&T) -> String,
) -> Result<()> {
    let content = match cli.format.as_str() {
        "json" => {
            let envelope = JsonEnvelope {
                config: header.iter().map(|s| s.as_str()).collect(),
                result: payload,
            };
            let mut s = serde_json::to_string_pretty(&envelope).expect("serializable payload");
            s.push('\n');
            s
        }
        _ => {
            let mut s: String = header.iter().map(|l| format!("# {l}\n")).collect();
            s.push_str(&to_csv(payload));
            s
        }
    };
    match &cli.out {
        Some(path) => {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            f.write_all(content.as_bytes())?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())?;
        }
    }
    Ok(())
}
