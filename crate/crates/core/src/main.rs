use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use specdbl::diagnostics::{
    example_counterexample, high_threshold_closure, statistical_doubling, sumset_stats,
};
use specdbl::fourier::{dft, parseval_capacity, spectrum};
use specdbl::group::{random_subset, subgroup_span, FiniteAbelianGroup, GroupElement};
use specdbl::io::{render, Format, Record, SetFile, TraceFile};
use specdbl::refine::{
    audit_trace, final_bound_report, refine, AuditReport, BoundReport, RefineConfig, RefineResult,
    Variant,
};
use specdbl::regularity::ExtractionMode;
use specdbl::Error;

#[derive(Parser)]
#[command(
    name = "specdbl",
    version,
    about = "Fourier spectra and spectral doubling in finite abelian groups"
)]
struct Cli {
    #[arg(long, value_enum, default_value_t = OutFormat::Text, global = true)]
    format: OutFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Random,
    Subgroup,
    TwoPlane,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Faithful,
    Opportunistic,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Linear,
    Quadratic,
}

#[derive(Subcommand)]
enum Command {
    /// Write a set file.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Cyclic orders, e.g. 2,2,2,2.
        #[arg(long, value_delimiter = ',')]
        group: Vec<usize>,
        #[arg(long)]
        size: Option<usize>,
        /// Half-rank of the two-plane set.
        #[arg(long)]
        n: Option<usize>,
        /// Subgroup generators separated by ';', each a digit string or a
        /// comma-separated list.
        #[arg(long)]
        gens: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print Spec_eps of a set.
    Spectrum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// Also write the spectrum as a set file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the refinement loop and write a trace file.
    Refine {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = VariantArg::Linear)]
        variant: VariantArg,
        #[arg(long, value_enum, default_value_t = ModeArg::Opportunistic)]
        mode: ModeArg,
        /// Override the growth gate K.
        #[arg(long)]
        k: Option<f64>,
        #[arg(long, default_value_t = 500)]
        max_iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check inequalities that must hold for every set.
    Verify {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        statistical_doubling: Option<f64>,
        #[arg(long)]
        closure: Option<f64>,
        #[arg(long)]
        parseval: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-audit a trace file and print its bounds.
    Report {
        #[arg(long)]
        trace: PathBuf,
    },
}

/// Usage-level failure (exit 2) or a failed check (exit 1).
enum Failure {
    Usage(String),
    Check(Vec<Record>, String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<Vec<Record>, Failure>;

fn load_set(path: &Path) -> Result<specdbl::group::ElementSet, Failure> {
    let file =
        SetFile::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    file.to_set()
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn parse_generators(spec: &str, rank: usize) -> Result<Vec<GroupElement>, Failure> {
    spec.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|g| {
            let g = g.trim();
            let coords: Option<Vec<usize>> = if g.contains(',') {
                g.split(',').map(|c| c.trim().parse().ok()).collect()
            } else {
                g.chars()
                    .map(|c| c.to_digit(36).map(|d| d as usize))
                    .collect()
            };
            let coords = coords.ok_or_else(|| Failure::Usage(format!("bad generator {g:?}")))?;
            if coords.len() != rank {
                return Err(Failure::Usage(format!(
                    "generator {g:?} has {} coordinates, group has {rank}",
                    coords.len()
                )));
            }
            Ok(GroupElement(coords))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    kind: Kind,
    group: Vec<usize>,
    size: Option<usize>,
    n: Option<usize>,
    gens: Option<String>,
    seed: u64,
    name: Option<String>,
    out: &Path,
) -> Outcome {
    let need_group = || -> Result<FiniteAbelianGroup, Failure> {
        if group.is_empty() {
            return Err(Failure::Usage("--group is required for this kind".into()));
        }
        Ok(FiniteAbelianGroup::new(&group)?)
    };
    let (set, label) = match kind {
        Kind::Random => {
            let g = need_group()?;
            let size =
                size.ok_or_else(|| Failure::Usage("--size is required for random sets".into()))?;
            (random_subset(&g, size, seed)?, "random")
        }
        Kind::Subgroup => {
            let g = need_group()?;
            let gens =
                gens.ok_or_else(|| Failure::Usage("--gens is required for subgroups".into()))?;
            let gens = parse_generators(&gens, g.rank())?;
            (subgroup_span(&g, &gens)?, "subgroup")
        }
        Kind::TwoPlane => {
            let n =
                n.ok_or_else(|| Failure::Usage("--n is required for the two-plane set".into()))?;
            (example_counterexample(n)?.0, "two-plane")
        }
    };
    SetFile::from_set(
        &set,
        Some(name.unwrap_or_else(|| label.to_string())),
        Some(seed),
    )
    .save(out)?;
    Ok(vec![Record::new("set")
        .with("kind", label)
        .with("orders", join(set.group().orders()))
        .with("size", set.len())
        .with("seed", seed)
        .with("out", out.display().to_string())])
}

fn join(v: &[usize]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_spectrum(input: &Path, epsilon: f64, out: Option<&Path>) -> Outcome {
    let a = load_set(input)?;
    let table = dft(&a)?;
    let spec = spectrum(&table, epsilon)?;
    let capacity = parseval_capacity(a.group().size(), a.len(), epsilon);
    let mut records = vec![Record::new("spectrum")
        .with("epsilon", epsilon)
        .with("set_size", a.len())
        .with("size", spec.len())
        .with("parseval_capacity", capacity)];
    for gamma in spec.members().iter() {
        let c = table.coeff(gamma);
        records.push(
            Record::new("member")
                .with("index", gamma)
                .with("coords", join(a.group().decode(gamma)?.coords()))
                .with("magnitude", c.norm())
                .with("ratio", c.norm() / a.len() as f64),
        );
    }
    if let Some(out) = out {
        SetFile::from_set(spec.members(), Some(format!("spectrum at {epsilon}")), None)
            .save(out)?;
    }
    if spec.len() as f64 > capacity {
        return Err(Failure::Check(
            records,
            "spectrum exceeds the Parseval capacity".into(),
        ));
    }
    Ok(records)
}

fn result_records(
    result: &RefineResult,
    audit: &AuditReport,
    bounds: Option<&BoundReport>,
) -> Vec<Record> {
    let mut records: Vec<Record> = result
        .trace
        .iter()
        .map(|s| {
            Record::new("step")
                .with("index", s.index)
                .with(
                    "kind",
                    serde_json::to_value(s.kind)
                        .unwrap()
                        .as_str()
                        .unwrap_or("")
                        .to_string(),
                )
                .with("rho", s.rho)
                .with("lambda", s.lambda)
                .with("set_size", s.set_size)
                .with("spectrum_size", s.spectrum_size)
                .with("gate_size", s.gate_size)
                .with("gate_ok", s.gate_ok)
                .with("upper_bound", s.upper_bound)
                .with("lower_bound", s.lower_bound)
        })
        .collect();
    let m = &result.measured;
    records.push(
        Record::new("result")
            .with(
                "terminated",
                serde_json::to_value(result.terminated)
                    .unwrap()
                    .as_str()
                    .unwrap_or("")
                    .to_string(),
            )
            .with("steps", result.trace.len())
            .with("a_star_size", result.a_star.len())
            .with("rho_star", result.rho_star)
            .with("target_threshold", m.target_threshold)
            .with("target_size", m.target_size)
            .with("sum_size", m.sum_size)
            .with("difference_size", m.difference_size)
            .with("pairing_bound", m.pairing_bound)
            .with("interim_bound", m.interim_bound)
            .with("doubling", m.doubling),
    );
    records.push(
        Record::new("audit")
            .with("passed", audit.passed)
            .with("k1", audit.k1)
            .with("k2", audit.k2)
            .with("violations", audit.violations.join("; ")),
    );
    if let Some(b) = bounds {
        records.push(
            Record::new("bounds")
                .with("passed", b.passed)
                .with("certified", b.certified)
                .with("alpha", b.alpha)
                .with("c_emp", b.c_emp)
                .with("exponent", b.exponent)
                .with("group_power", b.group_power)
                .with("pairing_holds", b.pairing_holds)
                .with("interim_holds", b.interim_holds)
                .with("violations", b.violations.join("; ")),
        );
    }
    records
}

fn check_run(trace: &TraceFile) -> Outcome {
    let records = result_records(&trace.result, &trace.audit, trace.bounds.as_ref());
    let bounds_ok = trace.bounds.as_ref().is_none_or(|b| b.passed);
    if !trace.audit.passed || !bounds_ok {
        return Err(Failure::Check(records, "refinement audit failed".into()));
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn cmd_refine(
    input: &Path,
    epsilon: f64,
    delta: f64,
    variant: VariantArg,
    mode: ModeArg,
    k: Option<f64>,
    max_iterations: usize,
    seed: u64,
    out: &Path,
) -> Outcome {
    let a = load_set(input)?;
    let variant = match variant {
        VariantArg::Linear => Variant::Linear,
        VariantArg::Quadratic => Variant::Quadratic,
    };
    let mut cfg = RefineConfig::new(variant, epsilon, delta);
    cfg.mode = match mode {
        ModeArg::Faithful => ExtractionMode::Faithful,
        ModeArg::Opportunistic => ExtractionMode::Opportunistic,
    };
    cfg.k_gate = k;
    cfg.max_iterations = max_iterations;
    cfg.seed = seed;
    let result = refine(&a, &cfg)?;
    let audit = audit_trace(&result, &cfg)?;
    let bounds = if result.terminated.finished() {
        Some(final_bound_report(&result, &a, &cfg)?)
    } else {
        None
    };
    let trace = TraceFile {
        config: cfg,
        result,
        audit,
        bounds,
    };
    trace.save(out)?;
    check_run(&trace)
}

fn cmd_verify(
    input: &Path,
    doubling: Option<f64>,
    closure: Option<f64>,
    parseval: Option<f64>,
    seed: u64,
) -> Outcome {
    let a = load_set(input)?;
    let stats = sumset_stats(&a)?;
    let mut records = vec![Record::new("set")
        .with("size", stats.size)
        .with("sum_size", stats.sum_size)
        .with("difference_size", stats.difference_size)
        .with("doubling", stats.doubling)];
    let mut failed = Vec::new();
    if let Some(eps) = doubling {
        let r = statistical_doubling(&a, eps, seed)?;
        if r.exact && !r.holds() {
            failed.push("statistical doubling");
        }
        records.push(
            Record::new("statistical_doubling")
                .with("epsilon", eps)
                .with("probability", r.probability)
                .with("lower_bound", r.lower_bound)
                .with("hits", r.hits)
                .with("pairs", r.total_pairs)
                .with("exact", r.exact)
                .with("holds", r.holds()),
        );
    }
    if let Some(eps) = closure {
        let r = high_threshold_closure(&a, eps)?;
        if !r.holds() {
            failed.push("high-threshold closure");
        }
        records.push(
            Record::new("closure")
                .with("epsilon", eps)
                .with("inner_threshold", r.inner_threshold)
                .with("sumset_size", r.sumset_size)
                .with("inner_size", r.inner_size)
                .with("violations", r.violations.len())
                .with("holds", r.holds()),
        );
    }
    if let Some(eps) = parseval {
        let size = spectrum(&dft(&a)?, eps)?.len();
        let capacity = parseval_capacity(a.group().size(), a.len(), eps);
        let holds = size as f64 <= capacity;
        if !holds {
            failed.push("Parseval capacity");
        }
        records.push(
            Record::new("parseval")
                .with("epsilon", eps)
                .with("spectrum_size", size)
                .with("capacity", capacity)
                .with("holds", holds),
        );
    }
    if failed.is_empty() {
        Ok(records)
    } else {
        Err(Failure::Check(
            records,
            format!("violated: {}", failed.join(", ")),
        ))
    }
}

fn cmd_report(path: &Path) -> Outcome {
    let stored =
        TraceFile::load(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let audit = audit_trace(&stored.result, &stored.config)?;
    let bounds = if stored.result.terminated.finished() {
        Some(final_bound_report(
            &stored.result,
            &stored.result.original_set()?,
            &stored.config,
        )?)
    } else {
        None
    };
    let fresh = TraceFile {
        audit,
        bounds,
        ..stored.clone()
    };
    let mut outcome = check_run(&fresh);
    if fresh.audit != stored.audit || fresh.bounds != stored.bounds {
        let records = match outcome {
            Ok(r) | Err(Failure::Check(r, _)) => r,
            Err(e) => return Err(e),
        };
        outcome = Err(Failure::Check(
            records,
            "stored audit does not reproduce".into(),
        ));
    }
    outcome
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = match cli.format {
        OutFormat::Json => Format::Json,
        OutFormat::Csv => Format::Csv,
        OutFormat::Text => Format::Text,
    };
    let outcome = match cli.command {
        Command::Gen {
            kind,
            group,
            size,
            n,
            gens,
            seed,
            name,
            out,
        } => cmd_gen(kind, group, size, n, gens, seed, name, &out),
        Command::Spectrum {
            input,
            epsilon,
            out,
        } => cmd_spectrum(&input, epsilon, out.as_deref()),
        Command::Refine {
            input,
            epsilon,
            delta,
            variant,
            mode,
            k,
            max_iterations,
            seed,
            out,
        } => cmd_refine(
            &input,
            epsilon,
            delta,
            variant,
            mode,
            k,
            max_iterations,
            seed,
            &out,
        ),
        Command::Verify {
            input,
            statistical_doubling,
            closure,
            parseval,
            seed,
        } => cmd_verify(&input, statistical_doubling, closure, parseval, seed),
        Command::Report { trace } => cmd_report(&trace),
    };
    match outcome {
        Ok(records) => {
            print!("{}", render(&records, format));
            ExitCode::SUCCESS
        }
        Err(Failure::Check(records, message)) => {
            print!("{}", render(&records, format));
            eprintln!("specdbl: {message}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(message)) => {
            eprintln!("specdbl: {message}");
            ExitCode::from(2)
        }
    }
}
