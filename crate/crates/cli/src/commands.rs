use std::fmt::{self, Write as _};
use std::fs::{self, File};
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use onlineid::config::{RunConfig, TuneTarget};
use onlineid::diagnostics::{self,
    audit_propositions, canonical_directions, detect_semiconvergence, estimate_link_constants, AuditInput,
    AuditOptions, LinkSample,
};
use onlineid::estimator::{self, mixed_samples, temporal_refinement, Regime, StepRecord};
use onlineid::gains::tune_heuristic_chunked;
use onlineid::{io, Error};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else if let Error::Io(m) = e {
            CliError::Io(m)
        } else {
            CliError::Config(e.to_string())
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    force: bool,
}

impl Ctx {
    pub fn new(config: Option<&Path>, out: Option<PathBuf>, seed: Option<u64>, force: bool) -> Result<Self, CliError> {
        let mut cfg = match config {
            Some(p) => RunConfig::load(p).map_err(|e| match e {
                Error::Io(m) => CliError::Io(m),
                e => CliError::Config(e.to_string()),
            })?,
            None => RunConfig::default(),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let out = out
            .or_else(|| cfg.output_dir.clone().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok(Self { cfg, out, force })
    }

    /// Refuses to touch any file of `names` that already exists, unless forced.
    fn claim(&self, names: &[&str]) -> Result<(), CliError> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        if self.force {
            return Ok(());
        }
        for n in names {
            let p = self.out.join(n);
            if p.exists() {
                return Err(CliError::Io(format!("{} exists; pass --force to overwrite", p.display())));
            }
        }
        Ok(())
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>, CliError> {
        let p = self.out.join(name);
        File::create(&p).map(BufWriter::new).map_err(|e| io_err(&p, e))
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        let p = self.out.join(name);
        fs::write(&p, text).map_err(|e| io_err(&p, e))
    }
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "undefined".into())
}

pub fn forward(ctx: &Ctx, refine: bool, levels: usize) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let mut names = vec!["snapshots.csv"];
    if refine {
        names.push("refinement.csv");
    }
    ctx.claim(&names)?;
    let setup = cfg.setup()?;
    let truth = &setup.truth;
    let snaps = cfg
        .snapshot_steps()
        .into_iter()
        .map(|n| {
            let t = n as f64 * cfg.h_t;
            truth.u_star(t).map(|u| (t, u))
        })
        .collect::<Result<Vec<_>, _>>()?;
    io::write_truth_snapshots(ctx.create("snapshots.csv")?, &snaps, truth.q_star(), cfg.sample_points)?;
    if refine {
        let rows = temporal_refinement(&setup.grid, truth, cfg.h_t, cfg.horizon, levels.max(2))?;
        io::write_refinement(ctx.create("refinement.csv")?, &rows)?;
        println!("{:>12} {:>14} {:>8} {:>14} {:>8}", "h_t", "max_error", "order", "self_diff", "order");
        for r in &rows {
            let o = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
            let d = r.self_diff.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into());
            println!("{:>12.6} {:>14.6e} {:>8} {:>14} {:>8}", r.h_t, r.max_error, o(r.error_order), d, o(r.self_order));
        }
    }
    println!("wrote {}", ctx.out.display());
    Ok(())
}

/// Audit lines, link constants and run facts as written to `audit.txt`.
fn audit_text(cfg: &RunConfig, input: &AuditInput<'_>, warnings: &[String], failure: Option<&Error>) -> String {
    let rec = input.records;
    let mut s = String::new();
    let _ = writeln!(s, "regime {:?}, {} steps of {}", input.regime, rec.len().saturating_sub(1), input.h_t);
    if let Some(e) = failure {
        let _ = writeln!(s, "run stopped early: {e}");
    }
    let _ = writeln!(s);
    let report = audit_propositions(input, &AuditOptions::default());
    let _ = write!(s, "{report}");

    let tstar = rec.iter().position(|r| r.t > 0.0 && r.cond_d_violated);
    let _ = writeln!(s);
    match tstar {
        Some(k) => {
            let _ = writeln!(s, "tstar = {} (step {k})", rec[k].t);
        }
        None => {
            let _ = writeln!(s, "tstar = inf");
        }
    }
    let lyap: Vec<f64> = rec.iter().map(StepRecord::lyapunov).collect();
    let sc = detect_semiconvergence(&lyap);
    if !rec.is_empty() {
        let _ = writeln!(
            s,
            "semiconvergence: t_min = {}, minimum = {:.6e}, tail mean = {:.6e}, growth = {}",
            rec[sc.index].t, sc.minimum, sc.tail_mean, sc.growth
        );
    }

    let samples: Vec<LinkSample> = rec.iter().map(LinkSample::from).collect();
    let r_max = rec.iter().map(|r| r.norms.r_x).fold(0.0, f64::max);
    let link = estimate_link_constants(&samples, input.h_t, cfg.pe_gamma0, cfg.link_lambda, cfg.link_kappa, 1e-8 * r_max);
    let _ = writeln!(s);
    let _ = writeln!(s, "link constants (gamma0 = {}, {} log pairs)", cfg.pe_gamma0, link.n_pairs);
    let _ = writeln!(s, "  rho = {}, C_rho = {}", fmt_opt(link.rho), fmt_opt(link.c_rho));
    let _ = writeln!(s, "  c_int = {:.6e}, C_int = {:.6e}", link.c_int, link.big_c_int);
    let _ = writeln!(s, "  lambda = {}, C_lambda = {:.6e}", link.lambda, link.c_lambda);
    let _ = writeln!(s, "  kappa = {}, C_kappa = {:.6e}", link.kappa, link.c_kappa);
    if !warnings.is_empty() {
        let _ = writeln!(s);
        for w in warnings {
            let _ = writeln!(s, "warning: {w}");
        }
    }
    s
}

pub fn run(ctx: &Ctx) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    ctx.claim(&["trace.csv", "snapshots.csv", "observed.csv", "states.csv", "audit.txt"])?;
    let setup = cfg.setup()?;
    let trace = estimator::run::run_partial(&setup);
    io::write_trace(ctx.create("trace.csv")?, &trace.records)?;
    io::write_snapshots(ctx.create("snapshots.csv")?, &trace.snapshots, cfg.sample_points)?;
    io::write_observed(ctx.create("observed.csv")?, &trace.records, trace.tstar_step())?;
    io::write_states(ctx.create("states.csv")?, &trace.states)?;
    let input = AuditInput::from_trace(&trace, cfg.sigma);
    ctx.write_text("audit.txt", &audit_text(cfg, &input, &trace.warnings, trace.failure.as_ref()))?;
    if let Some(e) = trace.failure {
        return Err(CliError::from(e));
    }
    if let Some(last) = trace.last() {
        println!(
            "t = {}: |e|_Q = {:.6e}, |r|_X = {:.6e}, tstar = {}",
            last.t,
            last.norms.e_q,
            last.norms.r_x,
            trace.tstar().map_or("inf".to_string(), |t| t.to_string())
        );
    }
    println!("wrote {}", ctx.out.display());
    Ok(())
}

pub fn tune(ctx: &Ctx, chunk: usize, max_points: Option<usize>) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    ctx.claim(&["scores.csv", "tune_status.txt", "best_config.toml"])?;
    let all = cfg.tune_points();
    let points = &all[..max_points.unwrap_or(all.len()).min(all.len())];
    let complete = points.len() == all.len();
    ctx.write_text("tune_status.txt", &format!("incomplete\n0 of {} points scored\n", all.len()))?;
    let params: &[&str] = match cfg.tune_target {
        TuneTarget::C1 => &["c1"],
        TuneTarget::MuNu => &["mu_bar", "nu_bar"],
    };
    let mut scores = io::ScoreWriter::new(ctx.create("scores.csv")?, params)?;
    let mut write_err: Option<Error> = None;
    let mut done = 0usize;
    let result = tune_heuristic_chunked(points, chunk, |p| cfg.with_tune_point(p).tune_score(), |rows| {
        if write_err.is_none() {
            if let Err(e) = scores.write_rows(rows) {
                write_err = Some(e);
            }
        }
        done += rows.len();
    });
    if let Some(e) = write_err {
        return Err(e.into());
    }
    let Some(result) = result else {
        return Err(CliError::Config("empty tuning grid".into()));
    };
    let failed = result.table.iter().filter(|r| !r.score.is_finite()).count();
    let mut status = String::new();
    let _ = writeln!(status, "{}", if complete { "complete" } else { "incomplete" });
    let _ = writeln!(status, "{done} of {} points scored, {failed} failed", all.len());
    if result.best_score.is_finite() {
        let _ = writeln!(status, "best index = {}", result.best_index);
        let _ = writeln!(status, "best point = {:?}", result.best);
        let _ = writeln!(status, "best score = {:.16e}", result.best_score);
    }
    ctx.write_text("tune_status.txt", &status)?;
    if !result.best_score.is_finite() {
        return Err(CliError::Numerical("no grid point completed a run".into()));
    }
    if complete {
        ctx.write_text("best_config.toml", &cfg.with_tune_point(&result.best).to_toml_string())?;
    }
    print!("{status}");
    Ok(())
}

pub fn probe_pe(ctx: &Ctx, states: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    ctx.claim(&["pe.csv", "pe.txt"])?;
    let setup = cfg.setup()?;
    let grid = setup.grid.clone();
    let states = match states {
        Some(p) => io::read_states(open(&p)?, grid.mesh())?,
        None => estimator::run(&setup)?.states,
    };
    let traj: Vec<Vec<f64>> = states.iter().map(|s| mixed_samples(&grid, &s.y, &s.u_hat)).collect();
    let dirs = canonical_directions(&grid, cfg.pe_random_directions, cfg.seed)?;
    let horizon = cfg.h_t * states.len().saturating_sub(1) as f64;
    let mut t_a = vec![0.0];
    if cfg.pe_t0 > 0.0 {
        let mut k = 1.0;
        while k * cfg.pe_t0 + cfg.pe_gamma0 <= horizon + 1e-9 {
            t_a.push(k * cfg.pe_t0);
            k += 1.0;
        }
    }
    let rep = diagnostics::probe_pe(&grid, cfg.h_t, &traj, &dirs, cfg.pe_gamma0, cfg.pe_t0, &t_a)?;
    io::write_pe(ctx.create("pe.csv")?, &rep.rows)?;
    let mut s = String::new();
    let _ = writeln!(s, "gamma0 = {}, t0 = {}, {} directions", rep.gamma0, rep.t0, rep.n_directions);
    let _ = writeln!(s, "eps0 = {:.6e}", rep.eps0);
    for &ta in &t_a {
        let m = rep.rows.iter().filter(|r| r.t_a == ta).map(|r| r.value).fold(f64::INFINITY, f64::min);
        if m.is_finite() {
            let _ = writeln!(s, "t_a = {ta}: min over directions {m:.6e}");
        } else {
            let _ = writeln!(s, "t_a = {ta}: no window fits the run");
        }
    }
    ctx.write_text("pe.txt", &s)?;
    print!("{s}");
    Ok(())
}

pub fn audit(ctx: &Ctx, trace: Option<PathBuf>) -> Result<(), CliError> {
    let cfg = &ctx.cfg;
    let path = trace.unwrap_or_else(|| ctx.out.join("trace.csv"));
    let records = io::read_trace(open(&path)?)?;
    ctx.claim(&["audit.txt"])?;
    let setup = cfg.setup()?;
    let (sup_pu_vhat, q_star_q) = setup.truth_norms()?;
    let input = AuditInput {
        regime: cfg.regime,
        h_t: cfg.h_t,
        sigma: if cfg.regime == Regime::Noisy { cfg.sigma } else { 0.0 },
        constants: setup.gains.constants,
        records: &records,
        sup_pu_vhat,
        q_star_q,
    };
    let text = audit_text(cfg, &input, &[], None);
    ctx.write_text("audit.txt", &text)?;
    print!("{text}");
    Ok(())
}
