//! Subcommands. Each returns the text for standard output and standard
//! error along with an [`Outcome`]; files are written atomically.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::Args;
use gifs::attractor::{
    attractor_iterate, default_seed_set, diameter_decay_profile, truncation_sensitivity,
    AttractorConfig, AttractorRun, ProfileConfig, DEFAULT_PRODUCT_CAP,
};
use gifs::code_space::address_count;
use gifs::diagnostics::{
    check_meir_keeler, check_phi_contraction, classify, count_non_contractive, default_box,
    estimate_lipschitz, ClassifyConfig, SampleBox, DEFAULT_SEED,
};
use gifs::metric_sets::{decimation_bound, diameter};
use gifs::projection::{
    check_combine_identity, functional_equation_residual, image_closure_check,
    operator_contraction_ratio, pi_iterate, project, PiConfig, ProjectConfig,
};
use gifs::{AddressStream, EnumCap, GifsSystem, PointSet};

use crate::render::render_ppm;
use crate::spec::{load_spec, sup_lipschitz, Loaded};
use crate::{parse_point, write_atomic, CliError, Outcome};

/// What a command produced.
#[derive(Debug, Default)]
pub struct Output {
    pub stdout: String,
    pub stderr: String,
    pub outcome: Option<Outcome>,
}

impl Output {
    pub fn outcome(&self) -> Outcome {
        self.outcome.unwrap_or(Outcome::Success)
    }
}

macro_rules! kv {
    ($out:expr, $key:expr, $($val:tt)+) => {
        writeln!($out, "{}={}", $key, format!($($val)+)).expect("writing to a String")
    };
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn seed_set(system: &GifsSystem, seed_point: Option<&str>) -> Result<PointSet, CliError> {
    match seed_point {
        Some(s) => Ok(PointSet::singleton(parse_point(s)?)?),
        None => Ok(default_seed_set(system)),
    }
}

#[derive(Args, Debug, Clone)]
pub struct AttractorArgs {
    /// System spec file, or the name of a bundled spec
    pub spec: PathBuf,
    /// Stop when successive iterates are this close in Hausdorff distance
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    /// Decimation grid spacing
    #[arg(long, default_value_t = 1e-3)]
    pub grid: f64,
    /// Starting point, comma separated (default: fixed point of map 0)
    #[arg(long)]
    pub seed_point: Option<String>,
    /// Argument tuples per map and step before subsampling
    #[arg(long, default_value_t = DEFAULT_PRODUCT_CAP)]
    pub product_cap: usize,
    /// Point CSV destination (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Report destination (default: OUT.report, or standard error)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn cmd_attractor(args: &AttractorArgs) -> Result<Output, CliError> {
    let loaded = load_spec(&args.spec)?;
    let system = &loaded.system;
    let seed = seed_set(system, args.seed_point.as_deref())?;
    let config = AttractorConfig {
        tol: args.tol,
        max_iter: args.max_iter,
        grid_eps: args.grid,
        product_cap: args.product_cap,
        ..AttractorConfig::default()
    };
    let run = attractor_iterate(system, &seed, &config)?;
    let mut report = String::new();
    kv!(report, "converged", "{}", run.converged);
    kv!(report, "steps", "{}", run.steps());
    kv!(report, "points", "{}", run.final_set().len());
    kv!(
        report,
        "final_residual",
        "{}",
        run.residuals.last().copied().unwrap_or(0.0)
    );
    kv!(report, "tol", "{}", args.tol);
    kv!(report, "grid_eps", "{}", args.grid);
    kv!(
        report,
        "decimation_bound",
        "{}",
        decimation_bound(system.dim(), args.grid, system.point_metric())
    );
    match sup_lipschitz(system) {
        Some(l) => kv!(report, "sup_lip_analytic", "{l}"),
        None => kv!(report, "sup_lip_analytic", "unknown"),
    }
    if let Some(t) = system.truncation() {
        kv!(report, "family", "{}", t.family_name);
        kv!(report, "truncated_at", "{}", t.truncated_at);
        match loaded.extended()? {
            Some(ext) if run.converged => {
                let gap = truncation_sensitivity(&run, &ext, &seed, &config)?;
                kv!(report, "tail_indicator", "{gap}");
            }
            _ => kv!(report, "tail_indicator", "n/a"),
        }
    }
    let csv = run.final_set().to_csv();
    let mut out = Output {
        outcome: Some(if run.converged {
            Outcome::Success
        } else {
            Outcome::NonConvergence
        }),
        ..Output::default()
    };
    match &args.out {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            let report_path = args.report.clone().unwrap_or_else(|| {
                let mut p = path.clone().into_os_string();
                p.push(".report");
                p.into()
            });
            write_atomic(&report_path, report.as_bytes())?;
        }
        None => {
            out.stdout = csv;
            match &args.report {
                Some(p) => write_atomic(p, report.as_bytes())?,
                None => out.stderr = report,
            }
        }
    }
    Ok(out)
}

#[derive(Args, Debug, Clone)]
pub struct ProjectArgs {
    pub spec: PathBuf,
    /// Address such as "0/1,0" or a periodic stream such as "(0)"
    #[arg(long)]
    pub address: String,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Bound the error by a measured diameter-decay profile of the attractor
    #[arg(long)]
    pub measured: bool,
    /// Largest number of address symbols to materialise
    #[arg(long, default_value_t = 1 << 24)]
    pub symbol_cap: usize,
}

pub fn cmd_project(args: &ProjectArgs) -> Result<Output, CliError> {
    let Loaded { system, .. } = load_spec(&args.spec)?;
    let stream = AddressStream::parse(&args.address, system.arity())?;
    let profile = if args.measured {
        let run = attractor_iterate(
            &system,
            &default_seed_set(&system),
            &AttractorConfig::default(),
        )?;
        Some(diameter_decay_profile(
            &system,
            run.final_set(),
            12,
            &ProfileConfig::default(),
        )?)
    } else {
        None
    };
    let r = project(
        &system,
        &stream,
        args.tol,
        &ProjectConfig {
            symbol_cap: args.symbol_cap,
            profile,
        },
    )?;
    let mut stdout = String::new();
    kv!(stdout, "point", "{}", join(&r.point));
    kv!(stdout, "error_bound", "{}", r.error_bound);
    kv!(stdout, "depth", "{}", r.depth_used);
    kv!(stdout, "converged", "{}", r.converged);
    Ok(Output {
        stdout,
        stderr: String::new(),
        outcome: Some(if r.converged {
            Outcome::Success
        } else {
            Outcome::NonConvergence
        }),
    })
}

#[derive(Args, Debug, Clone)]
pub struct PiArgs {
    pub spec: PathBuf,
    #[arg(long)]
    pub depth: usize,
    /// Constant starting value (default: fixed point of map 0)
    #[arg(long)]
    pub x0: Option<String>,
    /// Table destination (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_pi(args: &PiArgs) -> Result<Output, CliError> {
    let Loaded { system, .. } = load_spec(&args.spec)?;
    let x0 = match &args.x0 {
        Some(s) => parse_point(s)?,
        None => system.default_seed(),
    };
    let config = PiConfig {
        cap: EnumCap::from_env(),
        lazy_fallback: false,
        ..PiConfig::default()
    };
    let pi = pi_iterate(&system, &x0, args.depth, &config)?;
    let table = pi.function.to_table_text()?;
    let mut out = Output::default();
    kv!(out.stderr, "step_sizes", "{}", join(&pi.step_sizes));
    match &args.out {
        Some(p) => write_atomic(p, table.as_bytes())?,
        None => out.stdout = table,
    }
    Ok(out)
}

#[derive(Args, Debug, Clone)]
pub struct DiagnoseArgs {
    pub spec: PathBuf,
    /// Pairs sampled per check
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Comma separated: auto, lipschitz, meir-keeler, phi, contractive
    #[arg(long, default_value = "auto")]
    pub classes: String,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Sampling box "lo:hi,lo:hi,..." (default: attractor box inflated by 10%)
    #[arg(long = "box")]
    pub sample_box: Option<String>,
    /// Skip the analytic Lipschitz shortcut when classifying
    #[arg(long)]
    pub no_analytic: bool,
    /// Report destination (default: standard output)
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV of the worst Meir-Keeler pair per epsilon
    #[arg(long)]
    pub pairs: Option<PathBuf>,
}

fn parse_box(s: &str) -> Result<SampleBox, CliError> {
    let bounds = s
        .split(',')
        .map(|axis| {
            let (lo, hi) = axis
                .split_once(':')
                .ok_or_else(|| CliError::Usage(format!("box axis {axis:?} must be lo:hi")))?;
            let p = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("bad box bound {t:?}")))
            };
            Ok((p(lo)?, p(hi)?))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(SampleBox::new(bounds)?)
}

pub fn cmd_diagnose(args: &DiagnoseArgs) -> Result<Output, CliError> {
    let loaded = load_spec(&args.spec)?;
    let system = &loaded.system;
    let bx = match &args.sample_box {
        Some(s) => parse_box(s)?,
        None => default_box(system),
    };
    let metric = system.point_metric();
    let mut report = String::new();
    let mut failed = false;
    for class in args.classes.split(',').map(str::trim) {
        match class {
            "auto" => {
                let config = ClassifyConfig {
                    sample_box: Some(bx.clone()),
                    samples: args.samples,
                    seed: args.seed,
                    use_analytic: !args.no_analytic,
                    phi: loaded.spec.comparison_function()?,
                    meir_keeler: loaded.spec.meir_keeler_params()?,
                    ..ClassifyConfig::default()
                };
                report.push_str(&classify(system, &config)?.report());
            }
            "lipschitz" => {
                for (i, f) in system.maps().iter().enumerate() {
                    let est = estimate_lipschitz(
                        f,
                        metric,
                        &bx,
                        args.samples.max(2),
                        args.seed ^ i as u64,
                    )?;
                    kv!(
                        report,
                        format!("lipschitz.map.{i}.measured"),
                        "{}",
                        est.measured
                    );
                    if let Some(a) = est.analytic {
                        kv!(report, format!("lipschitz.map.{i}.analytic"), "{a}");
                    }
                }
            }
            "meir-keeler" => {
                let params = loaded.spec.meir_keeler_params()?.ok_or_else(|| {
                    CliError::Usage("the spec has no meir_keeler constants".into())
                })?;
                let r = check_meir_keeler(system, &params, &bx, args.samples, args.seed)?;
                kv!(report, "meir_keeler.box", "{}", describe_box(&bx));
                report.push_str(&r.report());
                failed |= !r.passed();
                if let Some(p) = &args.pairs {
                    write_atomic(p, r.worst_pairs_csv().as_bytes())?;
                }
            }
            "phi" => {
                let phi = loaded
                    .spec
                    .comparison_function()?
                    .ok_or_else(|| CliError::Usage("the spec has no phi entry".into()))?;
                kv!(report, "phi.function", "{}", phi.describe());
                for (i, f) in system.maps().iter().enumerate() {
                    let r = check_phi_contraction(
                        f,
                        metric,
                        &phi,
                        &bx,
                        args.samples,
                        args.seed ^ i as u64,
                    )?;
                    kv!(
                        report,
                        format!("phi.map.{i}.max_excess"),
                        "{}",
                        r.max_excess
                    );
                    kv!(
                        report,
                        format!("phi.map.{i}.violations"),
                        "{}",
                        r.violations
                    );
                    failed |= !r.passed();
                }
            }
            "contractive" => {
                let n = count_non_contractive(system, &bx, args.samples, args.seed)?;
                kv!(report, "contractive.pairs", "{}", args.samples);
                kv!(report, "contractive.non_contractive_pairs", "{n}");
                kv!(
                    report,
                    "contractive.basis",
                    "no violation in sampled pairs is evidence, not proof"
                );
            }
            other => return Err(CliError::Usage(format!("unknown class {other:?}"))),
        }
    }
    let mut out = Output {
        outcome: Some(if failed {
            Outcome::CheckFailure
        } else {
            Outcome::Success
        }),
        ..Output::default()
    };
    match &args.out {
        Some(p) => write_atomic(p, report.as_bytes())?,
        None => out.stdout = report,
    }
    Ok(out)
}

fn describe_box(bx: &SampleBox) -> String {
    bx.bounds()
        .iter()
        .map(|(lo, hi)| format!("[{lo},{hi}]"))
        .collect::<Vec<_>>()
        .join("x")
}

#[derive(Args, Debug, Clone)]
pub struct CheckArgs {
    pub spec: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    /// Tolerance for the exact identities
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
    /// Grid spacing of the attractor run
    #[arg(long, default_value_t = 1e-3)]
    pub grid: f64,
    /// Random draws for the combine identity
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Perturb one entry of the projection table by 1e-3 before checking
    #[arg(long)]
    pub inject_fault: bool,
}

struct Verdicts {
    text: String,
    all_passed: bool,
}

impl Verdicts {
    fn add(&mut self, name: &str, passed: bool, value: f64, bound: f64) {
        self.all_passed &= passed;
        let v = if passed { "PASS" } else { "FAIL" };
        writeln!(self.text, "{name}={v} value={value} bound={bound}").expect("writing to a String");
    }
}

pub fn cmd_check(args: &CheckArgs) -> Result<Output, CliError> {
    let Loaded { system, .. } = load_spec(&args.spec)?;
    let k = args.depth;
    if k < 2 {
        return Err(CliError::Usage("--depth must be at least 2".into()));
    }
    let cap = EnumCap::from_env();
    let config = PiConfig {
        cap,
        lazy_fallback: true,
        sample_size: cap.0.min(20_000),
        seed: args.seed,
    };
    let x0 = system.default_seed();
    let mut v = Verdicts {
        text: String::new(),
        all_passed: true,
    };

    let mut g = pi_iterate(&system, &x0, k, &config)?;
    let g_prev = pi_iterate(&system, &x0, k - 1, &config)?;
    if g.sampled || g_prev.sampled {
        kv!(v.text, "sampled_addresses", "{}", config.sample_size);
    }
    if args.inject_fault {
        let table = g.function.table_mut().ok_or_else(|| {
            CliError::Usage(format!(
                "fault injection needs a tabulated depth; depth {k} exceeds the cap"
            ))
        })?;
        let i = table.len() / 2;
        table[i] += 1e-3;
    }
    let residual = functional_equation_residual(&system, &g.function, &g_prev.function, &config)?;
    v.add(
        "functional_equation",
        residual <= args.tol,
        residual,
        args.tol,
    );

    let combine = check_combine_identity(&system, &x0, k, args.trials, &config)?;
    v.add("combine_identity", combine <= args.tol, combine, args.tol);

    let attractor_config = AttractorConfig {
        grid_eps: args.grid,
        ..AttractorConfig::default()
    };
    let run = attractor_iterate(&system, &default_seed_set(&system), &attractor_config)?;
    v.add(
        "attractor_converged",
        run.converged,
        run.residuals.last().copied().unwrap_or(0.0),
        attractor_config.tol,
    );
    let n_max = k.max(5);
    let profile =
        diameter_decay_profile(&system, run.final_set(), n_max, &ProfileConfig::default())?;
    kv!(v.text, "profile", "{}", join(&profile));

    let gap = image_closure_check(&system, &x0, k, &run, &config)?;
    let closure_bound = profile[k - 1] + 2.0 * args.grid;
    v.add("image_closure", gap <= closure_bound, gap, closure_bound);

    let worst_rise = profile
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    v.add(
        "diameter_decay_monotone",
        worst_rise <= 1e-12,
        worst_rise,
        1e-12,
    );
    let l = system.sup_lipschitz();
    if l < 1.0 {
        let diam = diameter(run.final_set(), system.point_metric());
        let excess = profile
            .iter()
            .enumerate()
            .map(|(n, d)| d - l.powi(n as i32 + 1) * diam)
            .fold(f64::NEG_INFINITY, f64::max);
        v.add(
            "diameter_decay_rate",
            excess <= 2.0 * args.grid,
            excess,
            2.0 * args.grid,
        );
    }

    let ratio = operator_ratio(&system, &run, cap, args.seed)?;
    v.add("operator_ratio", ratio <= l + 1e-6, ratio, l + 1e-6);

    kv!(
        v.text,
        "overall",
        "{}",
        if v.all_passed { "PASS" } else { "FAIL" }
    );
    Ok(Output {
        stdout: v.text,
        stderr: String::new(),
        outcome: Some(if v.all_passed {
            Outcome::Success
        } else {
            Outcome::CheckFailure
        }),
    })
}

/// Operator ratio on 100 random table pairs over the attractor's box, at the
/// deepest level (at most 2) whose image fits the cap.
fn operator_ratio(
    system: &GifsSystem,
    run: &AttractorRun,
    cap: EnumCap,
    seed: u64,
) -> Result<f64, CliError> {
    let fits = |j: usize| {
        address_count(system.map_count(), system.arity(), j + 1).is_some_and(|c| c <= cap.0 as u128)
    };
    let depth = (1..=2).rev().find(|&j| fits(j)).ok_or_else(|| {
        CliError::Usage("enumeration cap too small for the operator-ratio check".into())
    })?;
    let bounds: Vec<(f64, f64)> = run
        .final_set()
        .bounding_box()
        .into_iter()
        .map(|(lo, hi)| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, hi + 0.5)
            }
        })
        .collect();
    Ok(operator_contraction_ratio(
        system, depth, 100, &bounds, seed, cap,
    )?)
}

#[derive(Args, Debug, Clone)]
pub struct RenderArgs {
    /// Point CSV file
    pub points: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub width: usize,
    /// Default: 64 for 1-dimensional input, the width otherwise
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn cmd_render(args: &RenderArgs) -> Result<Output, CliError> {
    let text = std::fs::read_to_string(&args.points)
        .map_err(|e| CliError::Io(args.points.display().to_string(), e))?;
    let set = PointSet::from_csv(&text)?;
    let height = args
        .height
        .unwrap_or(if set.dim() == 1 { 64 } else { args.width });
    let img = render_ppm(&set, args.width, height)?;
    write_atomic(&args.out, &img)?;
    Ok(Output::default())
}
