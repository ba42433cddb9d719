use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use shadetrack::constructions::{
    build_no_shade, build_rendezvous_speeds, complement_coverage, find_rendezvous_time, verify_no_shade,
};
use shadetrack::document::{idle_report_json, to_canonical_json, witness_json, AnyDocument, ScheduleDocument};
use shadetrack::kronecker::{
    check_independence, eval_position, kronecker_search, verify_witness, IndependenceReason, KroneckerQuery,
    SearchOutcome, DEFAULT_BUDGET, DEFAULT_PRECISION_BITS,
};
use shadetrack::patrol::{idle_time_estimate, idle_time_exact, Fence, IdleReport, PatrolSchedule};
use shadetrack::{Arc, Circle, Error, Rational, Result, Runner, RunnerSchedule};

/// Exact schedules for runners on a circle.
///
/// Exit codes: 0 success, 1 the property fails (or provably no witness),
/// 2 invalid input or infeasible request, 3 search budget exhausted.
#[derive(Parser, Debug)]
#[command(name = "shadetrack", version)]
struct Cli {
    /// Print reports as JSON (keys sorted, rationals as "p/q").
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized options such as `--random-starts`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Working precision in bits for irrational speeds.
    #[arg(long, global = true, default_value_t = DEFAULT_PRECISION_BITS)]
    precision: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a schedule and print it as a JSON document.
    #[command(subcommand)]
    Construct(Construct),
    /// Check that at every time some runner is outside the shade arc.
    Verify(VerifyArgs),
    /// Find a time after T when every runner is inside the arc.
    Search(SearchArgs),
    /// Evaluate the idle time of a schedule or patrol document.
    IdleTime(IdleArgs),
    /// Print runner positions over time as CSV.
    Trace(TraceArgs),
}

#[derive(Subcommand, Debug)]
enum Construct {
    /// Runners 1..k that keep some runner outside the shade at all times.
    NoShade {
        /// Shade length, below the circle length 1.
        #[arg(long)]
        shade_length: Rational,
        /// Start of the shade arc [default: 1 - shade length].
        #[arg(long)]
        shade_start: Option<Rational>,
        /// Runner count [default: the smallest that works].
        #[arg(long)]
        k: Option<u64>,
    },
    /// Speeds for which all k runners meet inside an arc from any starts.
    Rendezvous {
        #[arg(long)]
        k: u64,
        /// Arc length a, with 0 < a < 1.
        #[arg(long)]
        arc_length: Rational,
        #[arg(long, default_value = "0")]
        arc_start: Rational,
        /// Draw starts from a seeded generator instead of zeros.
        #[arg(long)]
        random_starts: bool,
    },
}

#[derive(Args, Debug)]
struct ArcArg {
    /// Arc as START LENGTH.
    #[arg(long, num_args = 2, value_names = ["START", "LENGTH"], required = true)]
    arc: Vec<Rational>,
}

impl ArcArg {
    fn to_arc(&self, circle: &Circle) -> Result<Arc> {
        Arc::new(self.arc[0].clone(), self.arc[1].clone(), circle)
    }
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Schedule document.
    file: PathBuf,
    #[command(flatten)]
    arc: ArcArg,
    /// Write the covering set of the arc's complement as CSV.
    #[arg(long, value_name = "OUT")]
    emit_intervals: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Schedule document.
    file: PathBuf,
    #[command(flatten)]
    arc: ArcArg,
    /// The witness is strictly later than this time.
    #[arg(long, default_value = "0")]
    after: Rational,
    /// Maximum number of probes for irrational speeds.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Args, Debug)]
struct IdleArgs {
    /// Schedule or patrol document.
    file: PathBuf,
    /// Grid spacing; forces certified bounds instead of the exact value.
    #[arg(long)]
    grid: Option<Rational>,
}

#[derive(Args, Debug)]
struct TraceArgs {
    /// Schedule or patrol document.
    file: PathBuf,
    /// End of the sampled time range, starting from 0.
    #[arg(long, default_value = "1")]
    until: Rational,
    /// Number of time steps after t = 0.
    #[arg(long, default_value_t = 100)]
    samples: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}: {}", e.code(), e);
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Construct(c) => construct(cli, c),
        Command::Verify(args) => verify(cli, args),
        Command::Search(args) => search(cli, args),
        Command::IdleTime(args) => idle(cli, args),
        Command::Trace(args) => trace(cli, args),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))
}

fn load_schedule(path: &Path) -> Result<RunnerSchedule> {
    ScheduleDocument::parse(&read(path)?)?.to_schedule()
}

fn print_report(cli: &Cli, report: &Value, text: &str) {
    if cli.json {
        print!("{}", to_canonical_json(report));
    } else {
        println!("{text}");
    }
}

fn construct(cli: &Cli, c: &Construct) -> Result<ExitCode> {
    let circle = Circle::unit();
    let doc = match c {
        Construct::NoShade {
            shade_length,
            shade_start,
            k,
        } => {
            if shade_length >= &Rational::one() || !shade_length.is_positive() {
                return Err(Error::ShadeTooLong(shade_length.to_string()));
            }
            let start = shade_start.clone().unwrap_or_else(|| Rational::one() - shade_length);
            let shade = Arc::new(start, shade_length.clone(), &circle)?;
            ScheduleDocument::from_no_shade(&build_no_shade(&shade, *k)?)
        }
        Construct::Rendezvous {
            k,
            arc_length,
            arc_start,
            random_starts,
        } => {
            let speeds = build_rendezvous_speeds(*k, arc_length)?;
            let arc = Arc::new(arc_start.clone(), arc_length.clone(), &circle)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let runners = speeds
                .into_iter()
                .map(|speed| {
                    let start = if *random_starts {
                        Rational::frac(rng.gen_range(0..1_000_000), 1_000_000)
                    } else {
                        Rational::zero()
                    };
                    Runner::new(speed, start)
                })
                .collect();
            let schedule = RunnerSchedule::new(circle, runners)?;
            ScheduleDocument::from_rendezvous(&schedule, &arc, arc_length)
        }
    };
    print!("{}", doc.to_json());
    Ok(ExitCode::SUCCESS)
}

fn verify(cli: &Cli, args: &VerifyArgs) -> Result<ExitCode> {
    let schedule = load_schedule(&args.file)?;
    let shade = args.arc.to_arc(schedule.circle())?;
    if let Some(out) = &args.emit_intervals {
        let coverage = complement_coverage(&schedule, &shade)?;
        fs::write(out, coverage.to_csv()).map_err(|e| Error::Schema(format!("{}: {e}", out.display())))?;
    }
    let verdict = verify_no_shade(&schedule, &shade)?;
    let report = json!({
        "holds": verdict.holds,
        "witness": verdict.witness.as_ref().map(Rational::to_string),
    });
    match &verdict.witness {
        None => {
            print_report(cli, &report, "holds: some runner is outside the shade at every time");
            Ok(ExitCode::SUCCESS)
        }
        Some(t) => {
            let text = format!("violated: all runners are in the shade at t = {t}");
            print_report(cli, &report, &text);
            Ok(ExitCode::from(1))
        }
    }
}

fn search(cli: &Cli, args: &SearchArgs) -> Result<ExitCode> {
    let schedule = load_schedule(&args.file)?;
    let arc = args.arc.to_arc(schedule.circle())?;
    if schedule.all_rational() {
        return match find_rendezvous_time(&schedule, &arc, &args.after)? {
            Some(t) => {
                let report = json!({ "route": "exact", "t": t.to_string() });
                print_report(cli, &report, &format!("witness t = {t}"));
                Ok(ExitCode::SUCCESS)
            }
            None => {
                let report = json!({ "route": "exact", "t": null, "provably_empty": true });
                print_report(
                    cli,
                    &report,
                    "provably empty: the runners are never all inside the arc together",
                );
                Ok(ExitCode::from(1))
            }
        };
    }

    let speeds: Vec<_> = schedule.runners().iter().map(|r| r.speed.clone()).collect();
    let cert = check_independence(&speeds);
    if let IndependenceReason::SharedRadicand { first, second } = cert.reason {
        eprintln!("warning: runners {first} and {second} have rationally dependent speeds; a witness may not exist");
    }
    let query = KroneckerQuery::new(schedule.runners().to_vec(), arc.clone(), args.after.clone())?
        .with_budget(args.budget)
        .with_precision(cli.precision)?;
    match kronecker_search(&query)? {
        SearchOutcome::Found(w) => {
            let check = verify_witness(schedule.runners(), &arc, &w.t, 2 * w.precision_bits)?;
            if !check.holds {
                return Err(Error::PrecisionExhausted {
                    bits: check.precision_bits,
                });
            }
            let mut report = witness_json(&w);
            report["route"] = json!("kronecker");
            report["verified_bits"] = json!(check.precision_bits);
            let text = format!(
                "witness t = {} (probe {}, certified at {} bits, rechecked at {} bits)",
                w.t, w.probes_used, w.precision_bits, check.precision_bits
            );
            print_report(cli, &report, &text);
            Ok(ExitCode::SUCCESS)
        }
        SearchOutcome::BudgetExhausted { probes, next_after } => {
            let report = json!({
                "route": "kronecker",
                "budget_exhausted": true,
                "probes": probes,
                "next_after": next_after.to_string(),
            });
            let text = format!("budget exhausted after {probes} probes; resume with --after {next_after}");
            print_report(cli, &report, &text);
            Ok(ExitCode::from(3))
        }
    }
}

fn idle(cli: &Cli, args: &IdleArgs) -> Result<ExitCode> {
    let report = match AnyDocument::parse(&read(&args.file)?)? {
        AnyDocument::Schedule(doc) => {
            let schedule = doc.to_schedule()?;
            match &args.grid {
                None => idle_time_exact(&schedule)?,
                Some(grid) => idle_time_estimate(&PatrolSchedule::from_runners(&schedule)?, grid)?,
            }
        }
        AnyDocument::Patrol(doc) => {
            let patrol = doc.to_patrol()?;
            let grid = match &args.grid {
                Some(g) => g.clone(),
                None => patrol.fence().length() / &Rational::integer(256),
            };
            idle_time_estimate(&patrol, &grid)?
        }
    };
    let text = match &report {
        IdleReport::Exact { idle, point, gap } => {
            format!("idle = {idle} at x = {point}, unvisited during ({}, {})", gap.0, gap.1)
        }
        IdleReport::Estimate { lower, upper, grid, .. } => match upper {
            Some(u) => format!("{lower} <= idle <= {u} (grid {grid})"),
            None => format!("idle >= {lower}; no finite upper bound at grid {grid}"),
        },
        IdleReport::Unbounded { point } => format!("idle is unbounded: x = {point} is never visited"),
    };
    print_report(cli, &idle_report_json(&report), &text);
    Ok(ExitCode::SUCCESS)
}

fn trace(cli: &Cli, args: &TraceArgs) -> Result<ExitCode> {
    if !args.until.is_positive() || args.samples == 0 {
        return Err(Error::OutOfRange("trace needs --until > 0 and --samples > 0".into()));
    }
    let step = &args.until / &Rational::integer(args.samples);
    let text = read(&args.file)?;
    let mut out = String::new();
    match AnyDocument::parse(&text)? {
        AnyDocument::Schedule(doc) => {
            let schedule = doc.to_schedule()?;
            let names: Vec<String> = (1..=schedule.len()).map(|i| format!("runner_{i}")).collect();
            out.push_str(&format!("t,{}\n", names.join(",")));
            for j in 0..=args.samples {
                let t = &step * &Rational::integer(j);
                let xs: Vec<String> = schedule
                    .runners()
                    .iter()
                    .map(|r| {
                        let e = eval_position(r, &t, schedule.circle(), cli.precision);
                        format!("{}", ((&e.lo + &e.hi) / Rational::integer(2)).to_f64())
                    })
                    .collect();
                out.push_str(&format!("{},{}\n", t.to_f64(), xs.join(",")));
            }
        }
        AnyDocument::Patrol(doc) => {
            let patrol = doc.to_patrol()?;
            let names: Vec<String> = (1..=patrol.agents().len()).map(|i| format!("agent_{i}")).collect();
            out.push_str(&format!("t,{}\n", names.join(",")));
            for j in 0..=args.samples {
                let t = &step * &Rational::integer(j);
                let xs: Vec<String> = patrol
                    .agents()
                    .iter()
                    .map(|a| {
                        let x = a.trajectory.position_at(&t);
                        let x = match patrol.fence() {
                            Fence::Circle(c) => c.wrap(&x),
                            Fence::Segment(_) => x,
                        };
                        format!("{}", x.to_f64())
                    })
                    .collect();
                out.push_str(&format!("{},{}\n", t.to_f64(), xs.join(",")));
            }
        }
    }
    print!("{out}");
    Ok(ExitCode::SUCCESS)
}
