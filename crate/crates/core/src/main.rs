use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use radshoot::classifier::{classify, ClassifierOptions, ClassifyError};
use radshoot::config::{OutputFormat, RunConfig};
use radshoot::integrator::{InitialValue, Termination};
use radshoot::nonlinearity::{Case, NonlinearityModel, Profile};
use radshoot::report::{envelope, fmt17, sha256_hex, svg_lines, svg_strip, Series};
use radshoot::search::{GBracket, SearchError, Searcher};
use radshoot::theorems::{compute_ck, k0_condition, nonexistence_condition};
use radshoot::{Landmarks, Shooter, Trajectory};

#[derive(Parser)]
#[command(name = "radshoot", version, about = "Shooting solver for sign-changing radial bound states")]
struct Cli {
    /// Run configuration (INI-style).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report files; overrides [output] dir.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// json or csv; overrides [output] format.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the structural hypotheses on f.
    Check,
    /// Print the landmark constants.
    Landmarks,
    /// Integrate one trajectory and classify it.
    Shoot {
        #[arg(long, allow_hyphen_values = true)]
        alpha: Option<f64>,
        /// Initial value given as gamma_star - gap, kept exact.
        #[arg(long)]
        gap: Option<f64>,
    },
    /// Classify a grid of initial values.
    Scan {
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long)]
        alpha_lo: Option<f64>,
        #[arg(long)]
        alpha_hi: Option<f64>,
    },
    /// Find two bound states with k sign changes, or k0 with --k-max.
    Pairs {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Evaluate the nonexistence and k0 conditions.
    Theorems {
        #[arg(long)]
        k: Option<usize>,
        /// Finite limit of F at infinity, substituted for the A2 energy bound.
        #[arg(long, allow_hyphen_values = true)]
        f_infinity: Option<f64>,
    },
}

enum Failure {
    Hypothesis(String),
    Numeric(String),
    NotFound(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Hypothesis(_) => 1,
            Failure::Numeric(_) => 2,
            Failure::NotFound(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Hypothesis(m) | Failure::Numeric(m) | Failure::NotFound(m) => m,
        }
    }
}

fn numeric(e: impl std::fmt::Display) -> Failure {
    Failure::Numeric(e.to_string())
}

struct Ctx {
    cfg: RunConfig,
    hash: String,
    out: Option<PathBuf>,
    format: OutputFormat,
    svg: bool,
}

impl Ctx {
    fn model(&self) -> Result<NonlinearityModel<f64>, Failure> {
        self.cfg.nonlinearity.build().map_err(numeric)
    }

    fn landmarks(&self, model: &NonlinearityModel<f64>) -> Result<Landmarks, Failure> {
        model.compute_landmarks(self.cfg.n).map_err(|e| Failure::Hypothesis(e.to_string()))
    }

    fn searcher(&self, model: &NonlinearityModel<f64>) -> Result<Searcher<f64>, Failure> {
        let lm = self.landmarks(model)?;
        if lm.case == Case::Neither {
            return Err(Failure::Hypothesis("hypotheses (A1)/(A2) do not hold".into()));
        }
        let mut base = self.cfg.integrator.clone();
        base.alpha = InitialValue::plain(lm.beta_star);
        Searcher::new(model, lm, base, self.cfg.search.clone()).map_err(numeric)
    }

    fn write(&self, name: &str, text: &str) -> Result<(), Failure> {
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir).map_err(numeric)?;
            fs::write(dir.join(name), text).map_err(|e| numeric(format!("{}: {e}", dir.join(name).display())))?;
        }
        Ok(())
    }

    /// Writes `name.json` and returns the text for stdout.
    fn emit<S: Serialize>(&self, command: &str, name: &str, result: &S) -> Result<String, Failure> {
        let text = envelope(command, &self.hash, result).map_err(numeric)?;
        self.write(&format!("{name}.json"), &text)?;
        Ok(text)
    }
}

fn trajectory_csv(model: &NonlinearityModel<f64>, traj: &Trajectory) -> String {
    let n = traj.config.n as f64;
    let mut s = String::from("r,u,uprime,I,E\n");
    for p in &traj.samples {
        let i = 0.5 * p.uprime * p.uprime + model.value(Profile::Primitive, p.u);
        let e = 2.0 * p.r.powf(n) * i + (n - 2.0) * p.r.powf(n - 1.0) * p.uprime * p.u;
        let _ = writeln!(s, "{},{},{},{},{}", fmt17(p.r), fmt17(p.u), fmt17(p.uprime), fmt17(i), fmt17(e));
    }
    s
}

fn curve(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.samples.iter().map(|p| (p.r, p.u)).collect()
}

fn cmd_check(ctx: &Ctx) -> Result<String, Failure> {
    let model = ctx.model()?;
    let report = model.check_hypotheses(ctx.cfg.n);
    let landmarks = model.compute_landmarks(ctx.cfg.n).ok();
    let text = ctx.emit("check", "check", &json!({ "hypotheses": report, "landmarks": landmarks }))?;
    match report.first_failure() {
        Some((name, w)) => {
            print!("{text}");
            Err(Failure::Hypothesis(format!("{name} fails at s = {}: {}", w.s, w.violated)))
        }
        None => Ok(text),
    }
}

fn cmd_landmarks(ctx: &Ctx) -> Result<String, Failure> {
    let model = ctx.model()?;
    let lm = ctx.landmarks(&model)?;
    ctx.emit("landmarks", "landmarks", &lm)
}

fn cmd_shoot(ctx: &Ctx, alpha: Option<f64>, gap: Option<f64>) -> Result<String, Failure> {
    let model = ctx.model()?;
    let iv = match (alpha, gap) {
        (Some(a), None) => InitialValue::plain(a),
        (None, Some(g)) if model.is_finite_case() => InitialValue::below(model.gamma_star(), g),
        (None, Some(_)) => return Err(Failure::Numeric("--gap needs a finite gamma_star".into())),
        _ => return Err(Failure::Numeric("give exactly one of --alpha, --gap".into())),
    };
    let shooter = Shooter::new(&model);
    let traj = shooter.integrate(&ctx.cfg.integrator.with_alpha(iv)).map_err(numeric)?;
    let landmarks = model.compute_landmarks(ctx.cfg.n).ok();
    let classification = match &landmarks {
        Some(lm) => match classify(&traj, lm, &ClassifierOptions::for_landmarks(lm)) {
            Ok(c) => json!({ "classification": c, "ambiguous": false }),
            Err(ClassifyError::AmbiguousClassification { tentative, margin }) => {
                json!({ "classification": tentative, "ambiguous": true, "margin": margin })
            }
            Err(e) => json!({ "error": e.to_string() }),
        },
        None => Value::Null,
    };
    let result = json!({
        "alpha": iv.value(),
        "termination": traj.termination,
        "r_end": traj.r_end,
        "sign_changes": traj.count_sign_changes(),
        "accepted_steps": traj.accepted_steps,
        "rejected_steps": traj.rejected_steps,
        "classification": classification,
    });
    let text = ctx.emit("shoot", "classification", &result)?;
    ctx.emit("shoot", "events", &traj.events)?;
    match ctx.format {
        OutputFormat::Csv => ctx.write("trajectory.csv", &trajectory_csv(&model, &traj))?,
        OutputFormat::Json => {
            ctx.emit("shoot", "trajectory", &traj.samples)?;
        }
    }
    if ctx.svg {
        let pts = curve(&traj);
        let label = format!("alpha = {}", iv.value());
        ctx.write("trajectory.svg", &svg_lines("u(r)", "r", "u", &[Series { label: &label, points: &pts }]))?;
    }
    if let Termination::OscillationFault { sign_changes } = traj.termination {
        print!("{text}");
        return Err(Failure::Numeric(format!("oscillation fault after {sign_changes} sign changes")));
    }
    Ok(text)
}

fn cmd_scan(ctx: &Ctx, grid: Option<usize>, lo: Option<f64>, hi: Option<f64>) -> Result<String, Failure> {
    let model = ctx.model()?;
    let s = ctx.searcher(&model)?;
    let report = match (lo, hi) {
        (None, None) => s.scan_level(grid.unwrap_or(ctx.cfg.search.grid_points)),
        (lo, hi) => s.scan(
            lo.unwrap_or(s.landmarks.beta_star),
            hi.unwrap_or(s.anchor()),
            grid.unwrap_or(ctx.cfg.search.grid_points),
        ),
    }
    .map_err(numeric)?;
    let text = ctx.emit("scan", "scan", &report)?;
    if ctx.format == OutputFormat::Csv {
        let mut csv = String::from("t,offset,alpha,label\n");
        for p in &report.points {
            let _ = writeln!(csv, "{},{},{},{}", fmt17(p.t), fmt17(p.offset), fmt17(p.alpha), p.tag());
        }
        ctx.write("scan.csv", &csv)?;
    }
    if ctx.svg {
        let cells: Vec<(f64, String)> = report.points.iter().map(|p| (p.t, p.tag())).collect();
        ctx.write("scan.svg", &svg_strip("labels against t = log10(span / (anchor - alpha))", &cells))?;
    }
    Ok(text)
}

fn witness_curve(s: &Searcher<f64>, b: &GBracket<f64>) -> Result<Vec<(f64, f64)>, Failure> {
    let cfg = s.refine_config(false).with_alpha(s.initial_value(b.witness.offset));
    Ok(curve(&s.shooter().integrate(&cfg).map_err(numeric)?))
}

fn not_found(e: SearchError) -> Failure {
    match e {
        SearchError::NotFound(_) | SearchError::NotFoundAtResolution { .. } => Failure::NotFound(e.to_string()),
        other => numeric(other),
    }
}

fn cmd_pairs(ctx: &Ctx, k: Option<usize>, k_max: Option<usize>, grid: Option<usize>) -> Result<String, Failure> {
    let model = ctx.model()?;
    let mut s = ctx.searcher(&model)?;
    if let Some(g) = grid {
        s.options.grid_points = g;
        s.options.max_grid_points = s.options.max_grid_points.max(g);
    }
    if let Some(k_max) = k_max {
        let report = s.find_k0(k_max).map_err(not_found)?;
        return ctx.emit("pairs", "k0", &report);
    }
    let k = k.unwrap_or(ctx.cfg.k);
    let pair = s.find_pairs(k).map_err(not_found)?;
    let text = ctx.emit("pairs", "pairs", &pair)?;
    if ctx.svg {
        let a = witness_curve(&s, &pair.alpha_sharp)?;
        let b = witness_curve(&s, &pair.alpha_star)?;
        let (la, lb) = (
            format!("alpha# = {}", pair.alpha_sharp.alpha()),
            format!("alpha* = {}", pair.alpha_star.alpha()),
        );
        let svg = svg_lines(
            &format!("bound states with {k} sign changes"),
            "r",
            "u",
            &[Series { label: &la, points: &a }, Series { label: &lb, points: &b }],
        );
        ctx.write("pairs.svg", &svg)?;
    }
    Ok(text)
}

fn cmd_theorems(ctx: &Ctx, k: Option<usize>, f_infinity: Option<f64>) -> Result<String, Failure> {
    let model = ctx.model()?;
    let lm = ctx.landmarks(&model)?;
    let k = k.unwrap_or(ctx.cfg.k);
    let n = ctx.cfg.n;
    let as_json = |r: Result<Value, String>| r.unwrap_or_else(|e| json!({ "error": e }));
    let alpha_k = if lm.case == Case::A2 {
        let s = ctx.searcher(&model)?;
        s.estimate_alpha_k(k).ok().map(|a| a.alpha)
    } else {
        None
    };
    let nonexistence = as_json(
        nonexistence_condition(&model, &lm, n, k, alpha_k)
            .map(|r| json!(r))
            .map_err(|e| e.to_string()),
    );
    let k0 = as_json(k0_condition(&model, &lm, n, f_infinity).map(|r| json!(r)).map_err(|e| e.to_string()));
    let ck = if lm.case == Case::A2 {
        as_json(compute_ck(&model, &lm, n, k).map(|c| json!(c)).map_err(|e| e.to_string()))
    } else {
        Value::Null
    };
    ctx.emit(
        "theorems",
        "theorems",
        &json!({ "k": k, "case": lm.case, "nonexistence": nonexistence, "k0_condition": k0, "c_k": ck }),
    )
}

fn load(cli: &Cli) -> Result<Ctx, Failure> {
    let path: &Path = cli.config.as_deref().ok_or_else(|| Failure::Numeric("--config is required".into()))?;
    let bytes = fs::read(path).map_err(|e| numeric(format!("{}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone()).map_err(numeric)?;
    let cfg = RunConfig::parse(&text).map_err(numeric)?;
    Ok(Ctx {
        hash: sha256_hex(&bytes),
        out: cli.out.clone().or_else(|| cfg.out_dir.clone()),
        format: cli.format.unwrap_or(cfg.format),
        svg: cli.svg || cfg.svg,
        cfg,
    })
}

fn run(cli: &Cli) -> Result<String, Failure> {
    let ctx = load(cli)?;
    match &cli.cmd {
        Cmd::Check => cmd_check(&ctx),
        Cmd::Landmarks => cmd_landmarks(&ctx),
        Cmd::Shoot { alpha, gap } => cmd_shoot(&ctx, *alpha, *gap),
        Cmd::Scan { grid, alpha_lo, alpha_hi } => cmd_scan(&ctx, *grid, *alpha_lo, *alpha_hi),
        Cmd::Pairs { k, k_max, grid } => cmd_pairs(&ctx, *k, *k_max, *grid),
        Cmd::Theorems { k, f_infinity } => cmd_theorems(&ctx, *k, *f_infinity),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("radshoot: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
