//! The `nsk` command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use nsk_core::hom::{discrete_surface, sig_kernel_surface};
use nsk_core::inhom::solve_ode;
use nsk_core::path::{synth_path, PathKind};
use nsk_core::signature::sig_series_oracle;
use nsk_core::vphi::{v_phi, v_phi_quadrature, DEFAULT_QUADRATURE_NODES};
use nsk_core::{Activation, KernelParams, Mode, OdeMethod, Partition, PiecewiseLinearPath, Psd2, SimConfig};

use crate::config::{pick, resolve_seed, FileConfig, Resolved, SEED_ENV};
use crate::ensemble::{par_ensemble, par_gram_hom, par_gram_inhom};
use crate::error::{Error, Result};
use crate::experiments::{self, DepthSweep, Gaussianity, WidthSweep};
use crate::io::{self, fmt, Sink};

#[derive(Debug, Parser)]
#[command(name = "nsk", version, about = "Neural signature kernels and randomly initialised controlled ResNets")]
pub struct Cli {
    /// Seed for all randomness [default: $NSK_SEED, else 0]
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; never changes results [default: all cores]
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Flat TOML file with default values; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// V_φ(Σ) by closed form and by quadrature
    Vphi(VphiArgs),
    /// Kernels of one pair of paths
    #[command(subcommand)]
    Kernel(KernelCommand),
    /// Gram matrix of a set of paths
    Gram(GramArgs),
    /// Create or normalise path files
    #[command(subcommand)]
    Paths(PathsCommand),
    /// Monte Carlo ensemble of a finite network
    Simulate(SimulateArgs),
    /// Mean squared error of (1/N)⟨S(x), S(y)⟩ against the kernel, by width
    ConvergeWidth(WidthArgs),
    /// W₁ distance of readouts to a deep reference, by depth
    ConvergeDepth(DepthArgs),
    /// KS test and QQ data of readouts against the limiting Gaussian
    Gaussianity(GaussArgs),
    /// Recipes for the two experiment figures
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args, Clone, Default)]
struct ParamArgs {
    /// σ_a,σ_A,σ_b [default: depends on the command]
    #[arg(long, value_parser = parse_triple)]
    params: Option<(f64, f64, f64)>,
    /// id | relu | erf
    #[arg(long)]
    activation: Option<String>,
}

#[derive(Debug, Args)]
struct VphiArgs {
    #[arg(long)]
    activation: Option<String>,
    /// v11,v12,v22
    #[arg(long, value_parser = parse_triple)]
    sigma: (f64, f64, f64),
    /// Quadrature nodes [default: 200]
    #[arg(long)]
    quadrature: Option<usize>,
}

#[derive(Debug, Args)]
struct PairArgs {
    /// CSV file of x
    #[arg(long)]
    x: PathBuf,
    /// CSV file of y [default: x]
    #[arg(long)]
    y: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum KernelCommand {
    /// Inhomogeneous kernel trajectory (t, k_xx, k_xy, k_yy)
    Inhom {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Uniform steps before knot refinement [default: 1000]
        #[arg(long)]
        steps: Option<usize>,
        /// euler | rk4 [default: rk4]
        #[arg(long)]
        method: Option<String>,
        /// Output CSV [default: stdout]
        #[arg(long)]
        trajectory: Option<PathBuf>,
    },
    /// Homogeneous kernel surface (s, t, value)
    Hom {
        #[command(flatten)]
        pair: PairArgs,
        #[command(flatten)]
        params: ParamArgs,
        /// Grid steps per axis [default: 512]
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Signature kernel surface (s, t, value)
    Sig {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Truncated signature series at (s, t) [default paths: the unit line]
    Oracle {
        #[arg(long)]
        x: Option<PathBuf>,
        #[arg(long)]
        y: Option<PathBuf>,
        /// Truncation level [default: 15]
        #[arg(long)]
        level: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Family {
    Inhom,
    Hom,
}

#[derive(Debug, Args)]
struct GramArgs {
    /// Comma-separated CSV files
    #[arg(long, value_delimiter = ',', required = true)]
    paths: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Family::Hom)]
    family: Family,
    #[command(flatten)]
    params: ParamArgs,
    /// ODE steps (inhom) [default: 1000]
    #[arg(long)]
    steps: Option<usize>,
    /// euler | rk4 (inhom) [default: rk4]
    #[arg(long)]
    method: Option<String>,
    /// Grid steps (hom) [default: 512]
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum PathsCommand {
    /// line | paper_2d | cos_exp | gp_rbf
    Synth {
        #[arg(long)]
        kind: String,
        /// Dimension of line and gp_rbf [default: 1]
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Observation count [default: 100]
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sort, rescale to [0, 1] and shift to the origin
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// hom | inhom [default: hom]
    #[arg(long)]
    mode: Option<String>,
    /// [default: 100]
    #[arg(long)]
    width: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    depth: Option<usize>,
    /// Comma-separated CSV files
    #[arg(long, value_delimiter = ',', required = true)]
    paths: Vec<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    /// [default: 250]
    #[arg(long)]
    realizations: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct WidthArgs {
    /// [default: two GP-RBF sample paths drawn from the seed]
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long, requires = "x")]
    y: Option<PathBuf>,
    /// [default: 50,100,200,400,800]
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    /// [default: 200]
    #[arg(long)]
    depth: Option<usize>,
    /// [default: 250]
    #[arg(long)]
    realizations: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    /// Output CSV (N, mse, stderr) [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Summary JSON with the fitted slope
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DepthArgs {
    /// [default: a GP-RBF sample path drawn from the seed]
    #[arg(long)]
    x: Option<PathBuf>,
    /// [default: 100]
    #[arg(long)]
    width: Option<usize>,
    /// [default: 32,64,128,256,512,1024]
    #[arg(long, value_delimiter = ',')]
    depths: Option<Vec<usize>>,
    /// [default: 16384]
    #[arg(long)]
    reference_depth: Option<usize>,
    /// [default: 200]
    #[arg(long)]
    realizations: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GaussArgs {
    /// [default: the 2-d benchmark path]
    #[arg(long)]
    x: Option<PathBuf>,
    /// [default: 10,100,500]
    #[arg(long, value_delimiter = ',')]
    widths: Option<Vec<usize>>,
    /// [default: 100]
    #[arg(long)]
    depth: Option<usize>,
    /// [default: 250]
    #[arg(long)]
    realizations: Option<usize>,
    /// Grid of the limiting-variance solver [default: 1000]
    #[arg(long)]
    grid: Option<usize>,
    #[command(flatten)]
    params: ParamArgs,
    /// Directory for qq_N<width>.csv files [default: current directory]
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    FigMse,
    FigQq,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    figure: Figure,
    /// [default: current directory]
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn parse_triple(s: &str) -> std::result::Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let nums: std::result::Result<Vec<f64>, _> = parts.iter().map(|p| p.parse::<f64>()).collect();
    match nums {
        Ok(v) if v.len() == 3 => Ok((v[0], v[1], v[2])),
        _ => Err(format!("expected three comma-separated numbers, got `{s}`")),
    }
}

/// Parses `argv` and runs the command; returns the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let env = std::env::var(SEED_ENV).ok();
    let seed = resolve_seed(cli.seed, &file, env.as_deref())?;
    let ctx = Ctx { file, seed };
    let threads = cli.threads.or(ctx.file.threads);
    match threads {
        Some(0) => Err(Error::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Usage(format!("cannot start thread pool: {e}")))?
            .install(|| ctx.dispatch(cli.command)),
        None => ctx.dispatch(cli.command),
    }
}

struct Ctx {
    file: FileConfig,
    seed: u64,
}

/// Defaults of a kernel parameter set.
const DEFAULT_PARAMS: (f64, f64, f64) = (1.0, 1.0, 0.0);
const FIG_QQ_PARAMS: (f64, f64, f64) = (0.5, 1.0, 1.2);

impl Ctx {
    fn resolved(&self, command: &str) -> Resolved {
        Resolved::new(command, self.seed)
    }

    fn params(&self, args: &ParamArgs, default: (f64, f64, f64), default_act: &str, r: &mut Resolved) -> Result<KernelParams> {
        let (fa, fw, fb) = (self.file.sigma_a, self.file.sigma_w, self.file.sigma_b);
        let (a, w, b) = match args.params {
            Some(t) => t,
            None => (pick(None, fa, default.0), pick(None, fw, default.1), pick(None, fb, default.2)),
        };
        let act_name = pick(args.activation.clone(), self.file.activation.clone(), default_act.to_string());
        let act: Activation = act_name.parse()?;
        r.set("sigma_a", a).set("sigma_w", w).set("sigma_b", b).set("activation", act.name());
        Ok(KernelParams::new(a, w, b, act)?)
    }

    fn method(&self, flag: Option<String>, r: &mut Resolved) -> Result<OdeMethod> {
        let name = pick(flag, self.file.method.clone(), "rk4".to_string());
        let m: OdeMethod = name.parse()?;
        r.set("method", name);
        Ok(m)
    }

    fn dispatch(&self, command: Command) -> Result<()> {
        match command {
            Command::Vphi(a) => self.vphi(a),
            Command::Kernel(k) => self.kernel(k),
            Command::Gram(g) => self.gram(g),
            Command::Paths(p) => self.paths(p),
            Command::Simulate(s) => self.simulate(s),
            Command::ConvergeWidth(w) => self.converge_width(w),
            Command::ConvergeDepth(d) => self.converge_depth(d),
            Command::Gaussianity(g) => self.gaussianity(g),
            Command::Reproduce(r) => self.reproduce(r),
        }
    }

    fn vphi(&self, a: VphiArgs) -> Result<()> {
        let act_name = pick(a.activation, self.file.activation.clone(), "id".to_string());
        let act: Activation = act_name.parse()?;
        let nodes = pick(a.quadrature, self.file.quadrature, DEFAULT_QUADRATURE_NODES);
        let sigma = Psd2::new(a.sigma.0, a.sigma.1, a.sigma.2)?;
        let closed = v_phi(&act, &sigma)?;
        let quad = v_phi_quadrature(&act, &sigma, nodes)?;
        let mut out = Sink::create(None)?;
        out.write_str(&format!("closed_form {}\nquadrature {}\n", fmt(closed), fmt(quad)))?;
        out.flush()
    }

    fn kernel(&self, command: KernelCommand) -> Result<()> {
        match command {
            KernelCommand::Inhom {
                pair,
                params,
                steps,
                method,
                trajectory,
            } => {
                let mut r = self.resolved("kernel inhom");
                let (x, y) = read_pair(&pair, &mut r)?;
                let p = self.params(&params, DEFAULT_PARAMS, "id", &mut r)?;
                let steps = pick(steps, self.file.steps, 1000);
                r.set("steps", steps);
                let method = self.method(method, &mut r)?;
                let traj = solve_ode(&x, &y, &p, steps, method)?;
                io::write_trajectory(&mut Sink::create(trajectory.as_deref())?, &r.header(), &traj)
            }
            KernelCommand::Hom { pair, params, grid, out } => {
                let mut r = self.resolved("kernel hom");
                let (x, y) = read_pair(&pair, &mut r)?;
                let p = self.params(&params, DEFAULT_PARAMS, "id", &mut r)?;
                let part = Partition::uniform(self.grid(grid, &mut r)?);
                let surface = discrete_surface(&x, &y, &part, &part, &p)?;
                io::write_surface(&mut Sink::create(out.as_deref())?, &r.header(), &surface)
            }
            KernelCommand::Sig { pair, grid, out } => {
                let mut r = self.resolved("kernel sig");
                let (x, y) = read_pair(&pair, &mut r)?;
                let part = Partition::uniform(self.grid(grid, &mut r)?);
                let surface = sig_kernel_surface(&x, &y, &part, &part)?;
                io::write_surface(&mut Sink::create(out.as_deref())?, &r.header(), &surface)
            }
            KernelCommand::Oracle { x, y, level, s, t } => {
                let level = pick(level, self.file.level, nsk_core::signature::MAX_LEVEL);
                let unit = || PiecewiseLinearPath::line(&[1.0]).map_err(Error::from);
                let px = x.as_deref().map_or_else(unit, io::read_path)?;
                let py = match y.as_deref().or(x.as_deref()) {
                    Some(p) => io::read_path(p)?,
                    None => unit()?,
                };
                let v = sig_series_oracle(&px, &py, s, t, level)?;
                let mut out = Sink::create(None)?;
                out.write_str(&format!(
                    "value {}\ntail_bound {}\ntruncation_warning {}\n",
                    fmt(v.value),
                    fmt(v.tail_bound),
                    v.truncation_warning
                ))?;
                out.flush()
            }
        }
    }

    fn grid(&self, flag: Option<usize>, r: &mut Resolved) -> Result<usize> {
        let grid = pick(flag, self.file.grid, 512);
        if grid < 2 {
            return Err(Error::Usage("--grid must be at least 2".into()));
        }
        r.set("grid", grid);
        Ok(grid)
    }

    fn gram(&self, g: GramArgs) -> Result<()> {
        let mut r = self.resolved("gram");
        let paths = read_paths(&g.paths, &mut r)?;
        let p = self.params(&g.params, DEFAULT_PARAMS, "id", &mut r)?;
        r.set("family", g.family);
        let gram = match g.family {
            Family::Inhom => {
                let steps = pick(g.steps, self.file.steps, 1000);
                r.set("steps", steps);
                let method = self.method(g.method, &mut r)?;
                par_gram_inhom(&paths, &p, steps, method)?
            }
            Family::Hom => {
                let grid = self.grid(g.grid, &mut r)?;
                par_gram_hom(&paths, &p, grid)?
            }
        };
        let columns: Vec<String> = (0..gram.n()).map(|j| format!("k{j}")).collect();
        let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
        let rows = gram.rows().map(|row| row.iter().map(|&v| fmt(v)).collect::<Vec<_>>());
        Sink::create(g.out.as_deref())?.write_table(&r.header(), &cols, rows)
    }

    fn paths(&self, command: PathsCommand) -> Result<()> {
        match command {
            PathsCommand::Synth { kind, dim, samples, out } => {
                let mut r = self.resolved("paths synth");
                let samples = pick(samples, self.file.samples, 100);
                r.set("kind", &kind).set("dim", dim).set("samples", samples);
                let path = synth_path(&PathKind::parse(&kind, dim)?, samples, self.seed)?;
                io::write_path(&mut Sink::create(out.as_deref())?, &r.header(), &path)
            }
            PathsCommand::Ingest { input, out } => {
                let mut r = self.resolved("paths ingest");
                r.set_path("input", &input);
                let path = io::read_path(&input)?;
                io::write_path(&mut Sink::create(out.as_deref())?, &r.header(), &path)
            }
        }
    }

    fn simulate(&self, s: SimulateArgs) -> Result<()> {
        let mut r = self.resolved("simulate");
        let paths = read_paths(&s.paths, &mut r)?;
        let mode_name = pick(s.mode, self.file.mode.clone(), "hom".to_string());
        let mode: Mode = mode_name.parse()?;
        let width = pick(s.width, self.file.width, 100);
        let depth = pick(s.depth, self.file.depth, 100);
        let count = pick(s.realizations, self.file.realizations, 250);
        r.set("mode", mode.name()).set("width", width).set("depth", depth).set("realizations", count);
        let p = self.params(&s.params, DEFAULT_PARAMS, "id", &mut r)?;
        let cfg = SimConfig::new(width, paths[0].dim(), Partition::uniform(depth.max(1)), mode, p, self.seed)?;
        let refs: Vec<&PiecewiseLinearPath> = paths.iter().collect();
        let ens = par_ensemble(&cfg, &refs, count)?;
        let n = paths.len();
        let rows = ens.realizations.iter().enumerate().flat_map(|(k, real)| {
            (0..n).flat_map(move |i| {
                (i..n).map(move |j| {
                    [
                        k.to_string(),
                        i.to_string(),
                        j.to_string(),
                        fmt(real.inner_products[i * n + j]),
                        fmt(real.readouts[i]),
                    ]
                })
            })
        });
        Sink::create(s.out.as_deref())?.write_table(
            &r.header(),
            &["realization", "path_i", "path_j", "inner_product", "readout_i"],
            rows,
        )
    }

    fn width_spec(&self, w: &WidthArgs, r: &mut Resolved) -> Result<WidthSweep> {
        let (x, y) = match &w.x {
            Some(xp) => {
                let pair = PairArgs {
                    x: xp.clone(),
                    y: w.y.clone(),
                };
                read_pair(&pair, r)?
            }
            None => {
                r.set("paths", "gp_rbf pair");
                experiments::gp_pair(self.seed, 1)?
            }
        };
        let params = self.params(&w.params, DEFAULT_PARAMS, "id", r)?;
        let widths = pick(w.widths.clone(), self.file.widths.clone(), vec![50, 100, 200, 400, 800]);
        let depth = pick(w.depth, self.file.depth, 200);
        let realizations = pick(w.realizations, self.file.realizations, 250);
        r.set("widths", &widths).set("depth", depth).set("realizations", realizations);
        Ok(WidthSweep {
            params,
            widths,
            depth,
            realizations,
            seed: self.seed,
            x,
            y,
        })
    }

    fn converge_width(&self, w: WidthArgs) -> Result<()> {
        let mut r = self.resolved("converge-width");
        let spec = self.width_spec(&w, &mut r)?;
        let report = experiments::width_sweep(&spec).map_err(|e| e.in_stage("converge-width"))?;
        write_width(&report, &r, w.out.as_deref(), w.summary.as_deref())
    }

    fn converge_depth(&self, d: DepthArgs) -> Result<()> {
        let mut r = self.resolved("converge-depth");
        let x = match &d.x {
            Some(p) => {
                r.set_path("x", p);
                io::read_path(p)?
            }
            None => {
                r.set("paths", "gp_rbf");
                experiments::gp_pair(self.seed, 1)?.0
            }
        };
        let params = self.params(&d.params, DEFAULT_PARAMS, "id", &mut r)?;
        let width = pick(d.width, self.file.width, 100);
        let depths = pick(d.depths.clone(), self.file.depths.clone(), vec![32, 64, 128, 256, 512, 1024]);
        let reference_depth = pick(d.reference_depth, self.file.reference_depth, 1 << 14);
        let realizations = pick(d.realizations, self.file.realizations, 200);
        r.set("width", width)
            .set("depths", &depths)
            .set("reference_depth", reference_depth)
            .set("realizations", realizations);
        let spec = DepthSweep {
            params,
            width,
            depths,
            reference_depth,
            realizations,
            seed: self.seed,
            x,
        };
        let report = experiments::depth_sweep(&spec).map_err(|e| e.in_stage("converge-depth"))?;
        let rows = report.rows.iter().map(|row| [row.m.to_string(), fmt(row.w1)]);
        Sink::create(d.out.as_deref())?.write_table(&r.header(), &["M", "w1"], rows)?;
        if let Some(p) = &d.summary {
            write_summary(p, &r, &report)?;
        }
        Ok(())
    }

    fn gauss_spec(&self, g: &GaussArgs, r: &mut Resolved) -> Result<Gaussianity> {
        let x = match &g.x {
            Some(p) => {
                r.set_path("x", p);
                io::read_path(p)?
            }
            None => {
                r.set("paths", "paper_2d");
                experiments::benchmark_path()?
            }
        };
        let params = self.params(&g.params, FIG_QQ_PARAMS, "relu", r)?;
        let widths = pick(g.widths.clone(), self.file.widths.clone(), vec![10, 100, 500]);
        let depth = pick(g.depth, self.file.depth, 100);
        let realizations = pick(g.realizations, self.file.realizations, 250);
        let variance_grid = pick(g.grid, self.file.grid, 1000);
        r.set("widths", &widths)
            .set("depth", depth)
            .set("realizations", realizations)
            .set("grid", variance_grid);
        Ok(Gaussianity {
            params,
            widths,
            depth,
            realizations,
            variance_grid,
            seed: self.seed,
            x,
        })
    }

    fn gaussianity(&self, g: GaussArgs) -> Result<()> {
        let mut r = self.resolved("gaussianity");
        let spec = self.gauss_spec(&g, &mut r)?;
        let report = experiments::gaussianity(&spec).map_err(|e| e.in_stage("gaussianity"))?;
        write_gaussianity(&report, &r, g.out_dir.as_deref(), g.summary.as_deref())
    }

    fn reproduce(&self, a: ReproduceArgs) -> Result<()> {
        let dir = a.out_dir.unwrap_or_else(|| PathBuf::from("."));
        match a.figure {
            Figure::FigMse => {
                let mut r = self.resolved("reproduce fig-mse");
                let spec = experiments::fig_mse(self.seed)?;
                record_width(&spec, &mut r);
                let report = experiments::width_sweep(&spec).map_err(|e| e.in_stage("fig-mse"))?;
                write_width(&report, &r, Some(&dir.join("fig_mse.csv")), Some(&dir.join("fig_mse.json")))
            }
            Figure::FigQq => {
                let mut r = self.resolved("reproduce fig-qq");
                let spec = experiments::fig_qq(self.seed)?;
                record_gauss(&spec, &mut r);
                let report = experiments::gaussianity(&spec).map_err(|e| e.in_stage("fig-qq"))?;
                write_gaussianity(&report, &r, Some(&dir), Some(&dir.join("fig_qq.json")))
            }
        }
    }
}

fn record_params(p: &KernelParams, r: &mut Resolved) {
    r.set("sigma_a", p.sigma_a())
        .set("sigma_w", p.sigma_w())
        .set("sigma_b", p.sigma_b())
        .set("activation", p.activation().name());
}

fn record_width(s: &WidthSweep, r: &mut Resolved) {
    record_params(&s.params, r);
    r.set("paths", "gp_rbf pair")
        .set("widths", &s.widths)
        .set("depth", s.depth)
        .set("realizations", s.realizations);
}

fn record_gauss(s: &Gaussianity, r: &mut Resolved) {
    record_params(&s.params, r);
    r.set("paths", "paper_2d")
        .set("widths", &s.widths)
        .set("depth", s.depth)
        .set("realizations", s.realizations)
        .set("grid", s.variance_grid);
}

fn read_pair(pair: &PairArgs, r: &mut Resolved) -> Result<(PiecewiseLinearPath, PiecewiseLinearPath)> {
    let x = io::read_path(&pair.x)?;
    r.set_path("x", &pair.x);
    let y = match &pair.y {
        Some(p) => {
            r.set_path("y", p);
            io::read_path(p)?
        }
        None => x.clone(),
    };
    Ok((x, y))
}

fn read_paths(files: &[PathBuf], r: &mut Resolved) -> Result<Vec<PiecewiseLinearPath>> {
    if files.is_empty() {
        return Err(Error::Usage("--paths needs at least one file".into()));
    }
    r.set_paths("paths", files);
    files.iter().map(|f| io::read_path(f)).collect()
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    version: &'static str,
    seed: u64,
    config_hash: String,
    config: &'a std::collections::BTreeMap<String, serde_json::Value>,
    result: &'a T,
}

fn write_summary<T: Serialize>(path: &Path, r: &Resolved, result: &T) -> Result<()> {
    let s = Summary {
        version: env!("CARGO_PKG_VERSION"),
        seed: r.seed,
        config_hash: r.hash(),
        config: r.values(),
        result,
    };
    let text = serde_json::to_string_pretty(&s).expect("summaries serialize");
    let mut sink = Sink::create(Some(path))?;
    sink.write_str(&text)?;
    sink.write_str("\n")?;
    sink.flush()
}

#[derive(Serialize)]
struct WidthSummary<'a> {
    report: &'a experiments::WidthReport,
    slope_window: [f64; 2],
    min_r_squared: f64,
    pass: bool,
}

fn write_width(report: &experiments::WidthReport, r: &Resolved, out: Option<&Path>, summary: Option<&Path>) -> Result<()> {
    let rows = report.rows.iter().map(|row| [row.n.to_string(), fmt(row.mse), fmt(row.stderr)]);
    Sink::create(out)?.write_table(&r.header(), &["N", "mse", "stderr"], rows)?;
    if let Some(p) = summary {
        let pass = (-1.3..=-0.7).contains(&report.fit.slope) && report.fit.r_squared.is_some_and(|r2| r2 >= 0.9);
        let s = WidthSummary {
            report,
            slope_window: [-1.3, -0.7],
            min_r_squared: 0.9,
            pass,
        };
        write_summary(p, r, &s)?;
    }
    Ok(())
}

fn write_gaussianity(report: &experiments::GaussianityReport, r: &Resolved, dir: Option<&Path>, summary: Option<&Path>) -> Result<()> {
    let dir = dir.unwrap_or(Path::new("."));
    for row in &report.rows {
        let rows = row.qq.iter().map(|&(t, e)| [fmt(t), fmt(e)]);
        let path = dir.join(format!("qq_N{}.csv", row.n));
        Sink::create(Some(&path))?.write_table(&r.header(), &["theoretical", "empirical"], rows)?;
    }
    match summary {
        Some(p) => write_summary(p, r, report),
        None => {
            let mut out = Sink::create(None)?;
            out.write_str(&r.header().lines())?;
            out.write_str("N,ks_stat,critical_01,pass\n")?;
            for row in &report.rows {
                out.write_str(&format!("{},{},{},{}\n", row.n, fmt(row.ks.stat), fmt(row.ks.critical_01), row.ks.pass))?;
            }
            out.flush()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn triples() {
        assert_eq!(parse_triple("1, 0.5,2").unwrap(), (1.0, 0.5, 2.0));
        assert!(parse_triple("1,2").is_err());
        assert!(parse_triple("a,b,c").is_err());
    }

    #[test]
    fn usage_errors_exit_1_and_help_exits_0() {
        assert_eq!(run(["nsk", "bogus"]), 1);
        assert_eq!(run(["nsk", "vphi", "--sigma", "1,0.5,1", "--nope"]), 1);
        assert_eq!(run(["nsk", "--help"]), 0);
        assert_eq!(run(["nsk", "reproduce", "fig-nothing"]), 1);
    }
}
