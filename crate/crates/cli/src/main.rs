//! Command-line frontend: dimension estimates, pressure curves, Julia-set
//! clouds and rasters, Poincaré-series scans, conformal-measure audits, and
//! validity checks, all driven by a JSON system description.
//!
//! Exit codes: 0 success, 1 configuration/usage errors, 2 a `--strict` check
//! found violations, 3 numeric failures (root solves, bracketing, critical
//! orbits).

mod reports;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use semigroup_dim::checks;
use semigroup_dim::config::{load_system, RawConfig};
use semigroup_dim::julia::{self, CloudMethod, RenderWindow};
use semigroup_dim::measure::{self, Metric};
use semigroup_dim::poincare;
use semigroup_dim::semigroup::GeneratorSystem;
use semigroup_dim::thermo::{self, LevelCache};
use semigroup_dim::{Error, SpherePoint};

use reports::{fmt, write_csv, write_json, Meta};

#[derive(Parser)]
#[command(
    name = "semigroup-dim",
    version,
    about = "Julia sets and dimension estimates for finitely generated rational semigroups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON system description.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Worker threads (default: all cores; output is identical either way).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Write a JSON report here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    /// Entire preimage tree at --cloud-depth.
    Tree,
    /// Random backward walk (--samples points after burn-in).
    Walk,
}

#[derive(Args)]
struct CloudOpts {
    #[arg(long, value_enum, default_value_t = MethodArg::Walk)]
    method: MethodArg,
    /// Preimage-tree depth for --method tree.
    #[arg(long, default_value_t = 8)]
    cloud_depth: usize,
    /// Number of kept walk points for --method walk.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Discarded leading steps of each walk chain.
    #[arg(long, default_value_t = semigroup_dim::DEFAULT_BURN_IN)]
    burn_in: usize,
    /// Walk RNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CloudOpts {
    fn method(&self) -> CloudMethod {
        match self.method {
            MethodArg::Tree => CloudMethod::FullTree {
                depth: self.cloud_depth,
            },
            MethodArg::Walk => CloudMethod::RandomWalk {
                samples: self.samples,
                burn_in: self.burn_in,
                seed: self.seed,
            },
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Dimension estimate: the zero of the pressure function.
    Dim {
        #[command(flatten)]
        common: Common,
        /// Preimage-tree depth.
        #[arg(long, default_value_t = semigroup_dim::DEFAULT_DEPTH)]
        depth: usize,
        /// Accept the zero once |P| falls below this.
        #[arg(long, default_value_t = 1e-9)]
        residual_tol: f64,
        /// Base point "re,im" (default: config base or a repelling fixed point).
        #[arg(long, value_parser = parse_pair)]
        base: Option<(f64, f64)>,
        /// Exit with code 2 when the pre-flight expanding check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Pressure curve over a t-grid.
    Pressure {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = semigroup_dim::DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long)]
        t_min: f64,
        #[arg(long)]
        t_max: f64,
        #[arg(long, default_value_t = 21)]
        steps: usize,
        /// CSV output: t, pressure, depth, extrapolated.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Julia-set point cloud.
    Julia {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cloud: CloudOpts,
        /// CSV output of the finite points: re, im.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        /// Also box-count the cloud; CSV output: r, count.
        #[arg(long, value_name = "FILE")]
        box_csv: Option<PathBuf>,
        #[arg(long, default_value_t = 0.0078125)]
        box_r_min: f64,
        #[arg(long, default_value_t = 0.25)]
        box_r_max: f64,
    },
    /// Hit-count raster of the Julia-set cloud.
    Render {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cloud: CloudOpts,
        /// Square window half-width around the origin.
        #[arg(long, default_value_t = 2.0)]
        radius: f64,
        /// Explicit window "re_min,re_max,im_min,im_max" (overrides --radius).
        #[arg(long, value_parser = parse_window)]
        window: Option<(f64, f64, f64, f64)>,
        #[arg(long, default_value_t = 512)]
        resolution: usize,
        /// Write a plain PGM (P2) image here.
        #[arg(long, value_name = "FILE")]
        pgm: Option<PathBuf>,
        /// Write occupied cells as CSV here: re, im, count.
        #[arg(long, value_name = "FILE")]
        cells: Option<PathBuf>,
    },
    /// Poincaré-series level sums and critical exponent.
    Poincare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = semigroup_dim::DEFAULT_DEPTH)]
        depth: usize,
        /// Comma-separated exponents to scan.
        #[arg(
            long,
            value_parser = parse_list,
            value_delimiter = ',',
            default_value = "0.5,1.0,1.5"
        )]
        ts: Vec<f64>,
        /// Bisect the critical exponent inside "t_lo,t_hi".
        #[arg(long, value_parser = parse_pair)]
        bracket: Option<(f64, f64)>,
        /// CSV output: t, n, log_level_sum.
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
    },
    /// Conformal-measure approximation and its audits.
    Measure {
        #[command(flatten)]
        common: Common,
        /// Conformal exponent, or "auto" to use the dimension estimate.
        #[arg(long, default_value = "auto")]
        exponent: String,
        /// Tree depth for the "auto" dimension estimate.
        #[arg(long, default_value_t = semigroup_dim::DEFAULT_DEPTH)]
        depth: usize,
        /// Depth window of atoms.
        #[arg(long, default_value_t = 6)]
        p_min: usize,
        #[arg(long, default_value_t = 9)]
        p_max: usize,
        /// CSV output of atoms: re, im, weight.
        #[arg(long, value_name = "FILE")]
        atoms_csv: Option<PathBuf>,
        /// Run the Ahlfors-regularity audit.
        #[arg(long)]
        regularity: bool,
        #[arg(long, default_value_t = 20)]
        audit_samples: usize,
        #[arg(long, default_value_t = 0.01)]
        r_min: f64,
        #[arg(long, default_value_t = 0.5)]
        r_max: f64,
        #[arg(long, default_value_t = 7)]
        audit_seed: u64,
        /// Euclidean metric instead of chordal for balls and audits.
        #[arg(long)]
        euclidean: bool,
        /// CSV output of audit balls: x_re, x_im, r, mass, ratio.
        #[arg(long, value_name = "FILE")]
        regularity_csv: Option<PathBuf>,
        /// Overlap sweep between generators "i,j" (1-based) over ε = 2^-3..2^-6.
        #[arg(long, value_parser = parse_index_pair)]
        overlap: Option<(usize, usize)>,
    },
    /// Validity checks: hyperbolicity, expansion, loxodromy, OSC.
    Check {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        cloud: CloudOpts,
        /// Forward-orbit depth of the postcritical cloud.
        #[arg(long, default_value_t = 12)]
        pc_depth: usize,
        /// Tree depth of the expansion fit.
        #[arg(long, default_value_t = 8)]
        expansion_depth: usize,
        /// Required clearance between Julia and postcritical clouds.
        #[arg(long, default_value_t = semigroup_dim::DEFAULT_HYPERBOLICITY_MARGIN)]
        margin: f64,
        /// Word length cap for the attracting cloud.
        #[arg(long, default_value_t = 2)]
        attracting_words: usize,
        /// Sample count for the open-set-condition test.
        #[arg(long, default_value_t = 300)]
        osc_samples: usize,
        #[arg(long, default_value_t = 5)]
        osc_seed: u64,
        /// Word length cap for coincidence detection.
        #[arg(long, default_value_t = 3)]
        word_cap: usize,
        /// Exit with code 2 when any verdict fails.
        #[arg(long)]
        strict: bool,
    },
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"a,b\", got {s:?}"));
    }
    let a = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let b = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn parse_index_pair(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected \"i,j\", got {s:?}"));
    }
    let a = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let b = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

fn parse_list(s: &str) -> Result<f64, String> {
    // clap calls this per comma-delimited item via value_delimiter below;
    // keep a plain float parser and set the delimiter on the arg.
    s.trim().parse().map_err(|e| format!("{e}"))
}

fn parse_window(s: &str) -> Result<(f64, f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected \"re_min,re_max,im_min,im_max\", got {s:?}"));
    }
    let mut v = [0.0; 4];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.trim().parse().map_err(|e| format!("{e}"))?;
    }
    Ok((v[0], v[1], v[2], v[3]))
}

fn main() {
    // Rust ignores SIGPIPE by default, turning `semigroup-dim ... | head`
    // into a write panic; restore the conventional terminate-on-SIGPIPE.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(
        env_logger::Env::default().filter_or("SEMIGROUP_DIM_LOG", "warn"),
    )
    .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                std::process::exit(0);
            }
            eprintln!("{e}");
            std::process::exit(1);
        }
    };
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(classify(&e));
        }
    }
}

/// 1 for configuration problems, 3 for numeric failures.
fn classify(e: &anyhow::Error) -> i32 {
    match e.downcast_ref::<Error>() {
        Some(Error::RootSolveFailed { .. })
        | Some(Error::NoRepellingFixedPoint)
        | Some(Error::BracketFailure { .. })
        | Some(Error::CriticalOrbit) => 3,
        _ => 1,
    }
}

fn init_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    if threads.is_some() {
        log::warn!("built without the `parallel` feature; --threads is ignored");
    }
}

/// Loads the system and standard report metadata.
fn setup(common: &Common) -> anyhow::Result<(RawConfig, GeneratorSystem, Meta)> {
    init_threads(common.threads);
    let (raw, gs) = load_system(&common.config)?;
    let meta = Meta::new(raw.content_hash());
    Ok((raw, gs, meta))
}

/// Explicit flag > config base point > first repelling fixed point.
fn resolve_base(
    flag: Option<(f64, f64)>,
    raw: &RawConfig,
    gs: &GeneratorSystem,
) -> anyhow::Result<SpherePoint> {
    if let Some((re, im)) = flag {
        return Ok(SpherePoint::finite(re, im));
    }
    if let Some(p) = raw.base_point() {
        return Ok(p);
    }
    Ok(julia::repelling_base(gs)?)
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.cmd {
        Cmd::Dim {
            common,
            depth,
            residual_tol,
            base,
            strict,
        } => cmd_dim(common, depth, residual_tol, base, strict),
        Cmd::Pressure {
            common,
            depth,
            t_min,
            t_max,
            steps,
            csv,
        } => cmd_pressure(common, depth, t_min, t_max, steps, csv),
        Cmd::Julia {
            common,
            cloud,
            csv,
            box_csv,
            box_r_min,
            box_r_max,
        } => cmd_julia(common, cloud, csv, box_csv, box_r_min, box_r_max),
        Cmd::Render {
            common,
            cloud,
            radius,
            window,
            resolution,
            pgm,
            cells,
        } => cmd_render(common, cloud, radius, window, resolution, pgm, cells),
        Cmd::Poincare {
            common,
            depth,
            ts,
            bracket,
            csv,
        } => cmd_poincare(common, depth, ts, bracket, csv),
        Cmd::Measure {
            common,
            exponent,
            depth,
            p_min,
            p_max,
            atoms_csv,
            regularity,
            audit_samples,
            r_min,
            r_max,
            audit_seed,
            euclidean,
            regularity_csv,
            overlap,
        } => cmd_measure(
            common,
            exponent,
            depth,
            p_min,
            p_max,
            atoms_csv,
            regularity,
            audit_samples,
            r_min,
            r_max,
            audit_seed,
            euclidean,
            regularity_csv,
            overlap,
        ),
        Cmd::Check {
            common,
            cloud,
            pc_depth,
            expansion_depth,
            margin,
            attracting_words,
            osc_samples,
            osc_seed,
            word_cap,
            strict,
        } => cmd_check(
            common,
            cloud,
            pc_depth,
            expansion_depth,
            margin,
            attracting_words,
            osc_samples,
            osc_seed,
            word_cap,
            strict,
        ),
    }
}

fn cmd_dim(
    common: Common,
    depth: usize,
    residual_tol: f64,
    base: Option<(f64, f64)>,
    strict: bool,
) -> anyhow::Result<i32> {
    let (raw, gs, meta) = setup(&common)?;
    let base = resolve_base(base, &raw, &gs)?;

    // Pre-flight: a cheap expanding verdict on a modest walk cloud. The
    // dimension estimate is meaningless on non-expanding systems, so failures
    // are surfaced loudly (and fatal under --strict).
    let cloud = julia::julia_cloud(
        &gs,
        &CloudMethod::RandomWalk {
            samples: 2_000,
            burn_in: semigroup_dim::DEFAULT_BURN_IN,
            seed: 0,
        },
        Some(base),
    )?;
    let expanding = checks::expanding_verdict(
        &gs,
        &cloud.points,
        8,
        6,
        semigroup_dim::DEFAULT_HYPERBOLICITY_MARGIN,
    )?;
    if !expanding.verdict {
        log::warn!(
            "expanding check failed (hyperbolicity {}, expansion lambda {:.4}, residual {:.4}); \
             the dimension estimate below is unreliable",
            expanding.hyperbolicity.verdict,
            expanding.expansion.lambda,
            expanding.expansion.max_residual
        );
        println!("warning: expanding check FAILED; estimate is unreliable");
        if strict {
            return Ok(2);
        }
    }

    let cache = LevelCache::build(&gs, base, depth)?;
    let dim = thermo::bowen_dimension_from_cache(&gs, &cache, residual_tol)?;
    let entropy = thermo::entropy_lyapunov(&gs, &cache, dim.delta);
    if dim.delta > dim.upper_bound + 0.05 {
        log::warn!(
            "estimate {:.6} exceeds the derivative-growth bound {:.6}",
            dim.delta,
            dim.upper_bound
        );
    }

    println!(
        "delta = {:.9}  (depth {}, bracket [{:.9}, {:.9}], residual {:.3e})",
        dim.delta, dim.depth, dim.bracket.0, dim.bracket.1, dim.p_residual
    );
    println!(
        "expansion = {:.6}, upper bound = {:.6}, extrapolation error = {:.3e}",
        dim.expansion, dim.upper_bound, dim.extrapolation_error
    );
    println!(
        "entropy = {:.6} (bound {:.6}), lyapunov = {:.6}",
        entropy.entropy, entropy.entropy_bound, entropy.lyapunov
    );

    #[derive(Serialize)]
    struct Body {
        base: String,
        dimension: thermo::DimensionResult,
        entropy: thermo::EntropyReport,
    }
    if let Some(path) = &common.out {
        write_json(
            path,
            &meta,
            &Body {
                base: base.to_string(),
                dimension: dim,
                entropy,
            },
        )?;
    }
    Ok(0)
}

fn cmd_pressure(
    common: Common,
    depth: usize,
    t_min: f64,
    t_max: f64,
    steps: usize,
    csv: Option<PathBuf>,
) -> anyhow::Result<i32> {
    if !(t_max > t_min) || steps < 2 {
        return Err(Error::InvalidParameter("need t_max > t_min and steps ≥ 2".into()).into());
    }
    let (raw, gs, meta) = setup(&common)?;
    let base = resolve_base(None, &raw, &gs)?;
    let cache = LevelCache::build(&gs, base, depth)?;
    let ts: Vec<f64> = (0..steps)
        .map(|k| t_min + (t_max - t_min) * k as f64 / (steps - 1) as f64)
        .collect();
    let samples = thermo::pressure_grid(&cache, &ts);
    for s in &samples {
        println!("P({:.6}) = {:+.9}  (extrapolated {:+.9})", s.t, s.pressure, s.extrapolated);
    }
    if let Some(path) = &csv {
        write_csv(
            path,
            &meta.csv_comments(&[("depth", depth.to_string()), ("base", base.to_string())]),
            "t,pressure,depth,extrapolated",
            samples.iter().map(|s| {
                format!(
                    "{},{},{},{}",
                    fmt(s.t),
                    fmt(s.pressure),
                    s.depth,
                    fmt(s.extrapolated)
                )
            }),
        )?;
    }
    if let Some(path) = &common.out {
        #[derive(Serialize)]
        struct Body {
            base: String,
            samples: Vec<thermo::PressureSample>,
        }
        write_json(
            path,
            &meta,
            &Body {
                base: base.to_string(),
                samples,
            },
        )?;
    }
    Ok(0)
}

fn cmd_julia(
    common: Common,
    cloud: CloudOpts,
    csv: Option<PathBuf>,
    box_csv: Option<PathBuf>,
    box_r_min: f64,
    box_r_max: f64,
) -> anyhow::Result<i32> {
    let (raw, gs, meta) = setup(&common)?;
    let jc = julia::julia_cloud(&gs, &cloud.method(), raw.base_point())?;
    let finite: Vec<(f64, f64)> = jc
        .points
        .iter()
        .filter_map(|p| p.as_complex().map(|z| (z.re, z.im)))
        .collect();
    let infinite = jc.points.len() - finite.len();
    println!(
        "cloud: {} points ({} at infinity), base {}",
        jc.points.len(),
        infinite,
        jc.base
    );

    if let Some(path) = &csv {
        write_csv(
            path,
            &meta.csv_comments(&[
                ("base", jc.base.to_string()),
                ("points", jc.points.len().to_string()),
                ("infinite_points", infinite.to_string()),
            ]),
            "re,im",
            finite.iter().map(|&(re, im)| format!("{},{}", fmt(re), fmt(im))),
        )?;
    }

    let boxes = if box_csv.is_some() || common.out.is_some() {
        match measure::box_dimension(&jc.points, box_r_min, box_r_max, (0.0, 0.0)) {
            Ok(rep) => {
                println!("box-count slope = {:.6}", rep.slope);
                Some(rep)
            }
            Err(_) if box_csv.is_none() => None,
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    if let (Some(path), Some(rep)) = (&box_csv, &boxes) {
        write_csv(
            path,
            &meta.csv_comments(&[("slope", fmt(rep.slope))]),
            "r,count",
            rep.rows.iter().map(|row| format!("{},{}", fmt(row.r), row.count)),
        )?;
    }

    if let Some(path) = &common.out {
        #[derive(Serialize)]
        struct Body {
            base: String,
            points: usize,
            infinite_points: usize,
            box_counts: Option<measure::BoxCountReport>,
        }
        write_json(
            path,
            &meta,
            &Body {
                base: jc.base.to_string(),
                points: jc.points.len(),
                infinite_points: infinite,
                box_counts: boxes,
            },
        )?;
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_render(
    common: Common,
    cloud: CloudOpts,
    radius: f64,
    window: Option<(f64, f64, f64, f64)>,
    resolution: usize,
    pgm: Option<PathBuf>,
    cells: Option<PathBuf>,
) -> anyhow::Result<i32> {
    if resolution == 0 {
        return Err(Error::InvalidParameter("resolution must be ≥ 1".into()).into());
    }
    let (raw, gs, meta) = setup(&common)?;
    let jc = julia::julia_cloud(&gs, &cloud.method(), raw.base_point())?;
    let win = match window {
        Some((re_min, re_max, im_min, im_max)) => RenderWindow {
            re_min,
            re_max,
            im_min,
            im_max,
            nx: resolution,
            ny: resolution,
        },
        None => RenderWindow::centered(radius, resolution),
    };
    let raster = julia::render(&jc.points, &win);
    println!(
        "raster {}x{}: {} occupied cells",
        win.nx,
        win.ny,
        raster.nonzero_cells()
    );
    let comments = meta.csv_comments(&[
        ("window", format!(
            "{},{},{},{}",
            fmt(win.re_min),
            fmt(win.re_max),
            fmt(win.im_min),
            fmt(win.im_max)
        )),
        ("resolution", resolution.to_string()),
        ("base", jc.base.to_string()),
    ]);
    if let Some(path) = &pgm {
        std::fs::write(path, raster.to_pgm(&comments))?;
    }
    if let Some(path) = &cells {
        std::fs::write(path, raster.cells_csv(&comments))?;
    }
    if let Some(path) = &common.out {
        #[derive(Serialize)]
        struct Body {
            base: String,
            occupied_cells: usize,
            total_points: usize,
        }
        write_json(
            path,
            &meta,
            &Body {
                base: jc.base.to_string(),
                occupied_cells: raster.nonzero_cells(),
                total_points: jc.points.len(),
            },
        )?;
    }
    Ok(0)
}

fn cmd_poincare(
    common: Common,
    depth: usize,
    ts: Vec<f64>,
    bracket: Option<(f64, f64)>,
    csv: Option<PathBuf>,
) -> anyhow::Result<i32> {
    let (raw, gs, meta) = setup(&common)?;
    let base = resolve_base(None, &raw, &gs)?;
    let cache = LevelCache::build(&gs, base, depth)?;
    let scan = poincare::series_scan(&cache, &ts);
    let exponent = match bracket {
        Some((lo, hi)) => {
            let t = poincare::critical_exponent(&cache, lo, hi)?;
            println!("critical exponent = {t:.9}");
            Some(t)
        }
        None => None,
    };
    if let Some(path) = &csv {
        write_csv(
            path,
            &meta.csv_comments(&[("depth", depth.to_string()), ("base", base.to_string())]),
            "t,n,log_level_sum",
            scan.rows
                .iter()
                .map(|r| format!("{},{},{}", fmt(r.t), r.n, fmt(r.log_level_sum))),
        )?;
    }
    if let Some(path) = &common.out {
        #[derive(Serialize)]
        struct Body {
            base: String,
            scan: poincare::SeriesScan,
            critical_exponent: Option<f64>,
        }
        write_json(
            path,
            &meta,
            &Body {
                base: base.to_string(),
                scan,
                critical_exponent: exponent,
            },
        )?;
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_measure(
    common: Common,
    exponent: String,
    depth: usize,
    p_min: usize,
    p_max: usize,
    atoms_csv: Option<PathBuf>,
    regularity: bool,
    audit_samples: usize,
    r_min: f64,
    r_max: f64,
    audit_seed: u64,
    euclidean: bool,
    regularity_csv: Option<PathBuf>,
    overlap: Option<(usize, usize)>,
) -> anyhow::Result<i32> {
    let (raw, gs, meta) = setup(&common)?;
    let base = resolve_base(None, &raw, &gs)?;
    let t = if exponent == "auto" {
        let dim = thermo::bowen_dimension(&gs, base, depth, 1e-9)?;
        println!("auto exponent: delta = {:.9}", dim.delta);
        dim.delta
    } else {
        exponent
            .parse()
            .map_err(|e| Error::InvalidParameter(format!("--exponent: {e}")))?
    };
    let metric = if euclidean {
        Metric::Euclidean
    } else {
        Metric::Chordal
    };

    let mu = measure::conformal_measure(&gs, t, base, p_min, p_max)?;
    println!(
        "measure: {} atoms at exponent {:.9}, depths [{}, {}]",
        mu.atoms.len(),
        t,
        p_min,
        p_max
    );

    if let Some(path) = &atoms_csv {
        write_csv(
            path,
            &meta.csv_comments(&[
                ("exponent", fmt(t)),
                ("base", base.to_string()),
                ("p_min", p_min.to_string()),
                ("p_max", p_max.to_string()),
            ]),
            "re,im,weight",
            mu.atoms.iter().filter_map(|&(p, w)| {
                p.as_complex()
                    .map(|z| format!("{},{},{}", fmt(z.re), fmt(z.im), fmt(w)))
            }),
        )?;
    }

    let audit = if regularity || regularity_csv.is_some() {
        let rep = measure::regularity_audit(&mu, t, audit_samples, r_min, r_max, audit_seed, metric)?;
        println!(
            "regularity: slope {:.4} (target {:.4}), ratio range [{:.4}, {:.4}]",
            rep.slope, t, rep.min_ratio, rep.max_ratio
        );
        Some(rep)
    } else {
        None
    };
    if let (Some(path), Some(rep)) = (&regularity_csv, &audit) {
        write_csv(
            path,
            &meta.csv_comments(&[("exponent", fmt(t)), ("slope", fmt(rep.slope))]),
            "x_re,x_im,r,mass,ratio",
            rep.samples.iter().map(|s| {
                format!(
                    "{},{},{},{},{}",
                    fmt(s.x_re),
                    fmt(s.x_im),
                    fmt(s.r),
                    fmt(s.mass),
                    fmt(s.ratio)
                )
            }),
        )?;
    }

    #[derive(Serialize)]
    struct OverlapRow {
        eps: f64,
        mass: f64,
    }
    let overlap_rows = match overlap {
        Some((i, j)) => {
            let eps: Vec<f64> = (3..=6).map(|k| 2.0_f64.powi(-k)).collect();
            let rows = measure::separating_overlap_sweep(&gs, &mu, i, j, &eps)?;
            for &(e, m) in &rows {
                println!("overlap({i},{j}) at eps {e:.6}: mass {m:.6}");
            }
            Some(
                rows.into_iter()
                    .map(|(eps, mass)| OverlapRow { eps, mass })
                    .collect::<Vec<_>>(),
            )
        }
        None => None,
    };

    if let Some(path) = &common.out {
        #[derive(Serialize)]
        struct Body {
            base: String,
            exponent: f64,
            depth_range: (usize, usize),
            atom_count: usize,
            log_normalizer: f64,
            total_mass: f64,
            regularity: Option<measure::RegularityReport>,
            overlap: Option<Vec<OverlapRow>>,
        }
        write_json(
            path,
            &meta,
            &Body {
                base: base.to_string(),
                exponent: t,
                depth_range: mu.depth_range,
                atom_count: mu.atoms.len(),
                log_normalizer: mu.log_normalizer,
                total_mass: mu.total_mass(),
                regularity: audit,
                overlap: overlap_rows,
            },
        )?;
    }
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    common: Common,
    cloud: CloudOpts,
    pc_depth: usize,
    expansion_depth: usize,
    margin: f64,
    attracting_words: usize,
    osc_samples: usize,
    osc_seed: u64,
    word_cap: usize,
    strict: bool,
) -> anyhow::Result<i32> {
    let (raw, gs, meta) = setup(&common)?;
    let jc = julia::julia_cloud(&gs, &cloud.method(), raw.base_point())?;
    let expanding = checks::expanding_verdict(&gs, &jc.points, pc_depth, expansion_depth, margin)?;
    let pc = checks::postcritical_cloud(&gs, pc_depth)?;
    let attracting = checks::attracting_cloud(&gs, attracting_words, 4)?;
    let attracting_check = checks::hyperbolicity_check(&jc.points, &attracting, margin)?;
    let coincidences = poincare::detect_word_coincidences(&gs, word_cap)?;
    let osc = match &raw.open_set {
        Some(u) => Some(checks::osc_check(&gs, u, osc_samples, osc_seed)?),
        None => None,
    };

    let verdict = expanding.verdict && osc.as_ref().is_none_or(|o| o.verdict);

    println!(
        "hyperbolicity: min distance {:.6} vs margin {:.6} -> {}",
        expanding.hyperbolicity.min_distance,
        margin,
        verdict_word(expanding.hyperbolicity.verdict)
    );
    println!(
        "expansion: lambda {:.6} (tail {:.6}), max residual {:.4} -> {}",
        expanding.expansion.lambda,
        expanding.expansion.tail_lambda,
        expanding.expansion.max_residual,
        verdict_word(expanding.expansion.verdict)
    );
    for (k, m) in expanding.mobius_loxodromic.iter().enumerate() {
        if let Some(lox) = m {
            println!("generator {}: degree one, loxodromic: {lox}", k + 1);
        }
    }
    println!(
        "attracting cloud: {} points, min distance to Julia cloud {:.6}",
        attracting.len(),
        attracting_check.min_distance
    );
    if !coincidences.is_empty() {
        for c in &coincidences {
            println!(
                "word coincidence: {} and {} agree to {:.3e}",
                c.word_a, c.word_b, c.max_distance
            );
        }
    }
    if let Some(o) = &osc {
        println!(
            "open set condition: {} samples, {} containment / {} disjointness violations -> {}",
            o.samples,
            o.containment_violations,
            o.disjointness_violations,
            verdict_word(o.verdict)
        );
    }
    println!("overall: {}", verdict_word(verdict));

    if let Some(path) = &common.out {
        #[derive(Serialize)]
        struct Body {
            base: String,
            julia_points: usize,
            postcritical_points: usize,
            expanding: checks::ExpandingReport,
            attracting_points: usize,
            attracting_min_distance: f64,
            word_coincidences: Vec<poincare::WordCoincidence>,
            osc: Option<checks::OscReport>,
            verdict: bool,
        }
        write_json(
            path,
            &meta,
            &Body {
                base: jc.base.to_string(),
                julia_points: jc.points.len(),
                postcritical_points: pc.len(),
                expanding,
                attracting_points: attracting.len(),
                attracting_min_distance: attracting_check.min_distance,
                word_coincidences: coincidences,
                osc,
                verdict,
            },
        )?;
    }

    Ok(if !verdict && strict { 2 } else { 0 })
}

fn verdict_word(v: bool) -> &'static str {
    if v {
        "pass"
    } else {
        "FAIL"
    }
}
