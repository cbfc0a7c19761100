//! Subcommand implementations.

use std::path::{Path, PathBuf};

use mrt_core::dynamics::{
    read_snapshot, run, seed_initial_data, write_snapshot, FlowState, Reporter, SeedOptions,
    SnapshotMeta, Termination,
};
use mrt_core::energetics::{
    detect_escape_time, fit_series, monitor_energy_inequality, DecayFit, EnergyReport,
    EnergyVerdict, RateModel, ESCAPE_NAMES,
};
use mrt_core::linstab::{CriticalField, LinearMode, LinearProblem};
use mrt_core::par;

use crate::config::Config;
use crate::error::CliError;
use crate::output::{num, opt, unix_now, write_manifest, Csv, OutDir, RunInfo};

pub struct Ctx {
    pub out: PathBuf,
    pub quiet: bool,
}

impl Ctx {
    fn note(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

const ENERGY_HEADER: [&str; 12] = [
    "t",
    "E_pot",
    "E_total",
    "D_total",
    "frakE",
    "frakD",
    "norm_eta_H3",
    "norm_u_H2",
    "norm_ut_L2",
    "norm_q_H1",
    "J_drift",
    "div_residual",
];

fn energy_row(r: &EnergyReport) -> Vec<String> {
    [
        r.t,
        r.e_pot,
        r.e_total,
        r.d_total,
        r.frak_e,
        r.frak_d,
        r.norms.eta_h3,
        r.norms.u_h2,
        r.norms.ut_l2,
        r.norms.q_h1,
        r.j_drift,
        r.div_residual,
    ]
    .iter()
    .map(|v| num(*v))
    .collect()
}

/// Run `body` in `dir` and always finish with a manifest.
fn with_manifest<T>(
    command: &str,
    cfg: &Config,
    dir: &Path,
    body: impl FnOnce(&mut OutDir) -> Result<T, CliError>,
) -> Result<T, CliError> {
    let start = unix_now();
    let mut out = OutDir::create(dir)?;
    let result = body(&mut out);
    let termination = match &result {
        Ok(_) => "completed".to_string(),
        Err(e) => e.to_string(),
    };
    let config = cfg.to_toml();
    let info = RunInfo {
        command,
        grid: format!(
            "L={} h={} N1={} N2={}",
            cfg.grid.l, cfg.grid.h, cfg.grid.n1, cfg.grid.n2
        ),
        start,
        termination: &termination,
        config: &config,
    };
    write_manifest(&mut out, &info)?;
    result
}

struct Linear {
    problem: LinearProblem,
    critical: CriticalField,
    m: f64,
}

fn linear(cfg: &Config) -> Result<(mrt_core::profiles::DensityProfile, Linear), CliError> {
    let profile = cfg.build_profile()?;
    let problem = cfg.problem(&profile)?;
    let critical = problem
        .critical_field(cfg.grid.l)
        .map_err(CliError::from_core)?;
    let m = cfg.field_strength(&critical)?;
    Ok((
        profile,
        Linear {
            problem,
            critical,
            m,
        },
    ))
}

pub fn cmd_mc(cfg: &Config, ctx: &Ctx) -> Result<(), CliError> {
    with_manifest("mc", cfg, &ctx.out, |out| {
        let (_, lin) = linear(cfg)?;
        let cf = &lin.critical;
        let bound_ok = cf.mc <= cf.bound * (1.0 + 1e-12);
        let mut t = Csv::new(&["mc", "argmax_n", "bound", "stable_for_all_m", "bound_ok"]);
        t.row(&[
            num(cf.mc),
            cf.argmax_n.to_string(),
            num(cf.bound),
            u8::from(cf.stable_for_all_m).to_string(),
            u8::from(bound_ok).to_string(),
        ]);
        out.write("mc.csv", t.text())?;

        let h = cfg.grid.h;
        let mut e = Csv::new(&["y2", "W2"]);
        for i in 0..=128 {
            let y = h * i as f64 / 128.0;
            let w: f64 = cf
                .profile
                .iter()
                .enumerate()
                .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * y / h).sin())
                .sum();
            e.row(&[num(y), num(if cf.stable_for_all_m { 0.0 } else { w })]);
        }
        out.write("eigenfunction.csv", e.text())?;
        ctx.note(&format!(
            "m_C = {} (n = {}), bound {}",
            cf.mc, cf.argmax_n, cf.bound
        ));
        if !bound_ok {
            return Err(CliError::Check(format!(
                "m_C = {} exceeds the bound {}",
                cf.mc, cf.bound
            )));
        }
        Ok(())
    })
}

pub fn cmd_dispersion(cfg: &Config, ctx: &Ctx) -> Result<(), CliError> {
    with_manifest("dispersion", cfg, &ctx.out, |out| {
        let d = cfg
            .dispersion
            .as_ref()
            .ok_or_else(|| CliError::Usage("missing [dispersion] section".into()))?;
        if d.n_max == 0 {
            return Err(CliError::Usage(
                "dispersion.n_max must be at least 1".into(),
            ));
        }
        let (_, lin) = linear(cfg)?;
        let mut ms: Vec<f64> = d.m.clone();
        ms.extend(d.m_over_mc.iter().map(|f| f * lin.critical.mc));
        if ms.is_empty() {
            return Err(CliError::Usage(
                "dispersion needs a nonempty m or m_over_mc list".into(),
            ));
        }
        if let Some(bad) = ms.iter().find(|m| !m.is_finite()) {
            return Err(CliError::Usage(format!(
                "dispersion.m entry {bad} is not finite"
            )));
        }
        let mut all = Csv::new(&["m", "n", "k", "lambda", "stable"]);
        for (i, &m) in ms.iter().enumerate() {
            let curve = lin
                .problem
                .dispersion(m, cfg.grid.l, d.n_max)
                .map_err(CliError::from_core)?;
            let mut t = Csv::new(&["n", "k", "lambda", "stable"]);
            for e in &curve.entries {
                let stable = u8::from(e.lambda.is_none()).to_string();
                t.row(&[e.n.to_string(), num(e.k), opt(e.lambda), stable.clone()]);
                all.row(&[num(m), e.n.to_string(), num(e.k), opt(e.lambda), stable]);
            }
            out.write(&format!("dispersion_{i}.csv"), t.text())?;
        }
        out.write("dispersion.csv", all.text())?;
        ctx.note(&format!("{} dispersion curves", ms.len()));
        Ok(())
    })
}

struct CsvReporter {
    energy: Csv,
    escape: Option<Csv>,
}

impl Reporter for CsvReporter {
    fn on_report(&mut self, _state: &FlowState, r: &EnergyReport) -> mrt_core::Result<()> {
        self.energy.row(&energy_row(r));
        if let Some(e) = &mut self.escape {
            let mut row = vec![num(r.t)];
            row.extend(r.escape.iter().map(|v| num(*v)));
            e.row(&row);
        }
        Ok(())
    }
}

/// Scalars kept from one simulation for study summaries.
#[derive(Clone, Debug)]
pub struct SimSummary {
    pub m: f64,
    pub mc: f64,
    pub lambda_linear: Option<f64>,
    pub lambda_fit: Option<f64>,
    pub growth_factor: Option<f64>,
    pub t_escape: Option<f64>,
    pub verdict: Option<EnergyVerdict>,
    pub u_final: Option<f64>,
}

fn pick_mode(
    cfg: &Config,
    problem: &LinearProblem,
    m: f64,
) -> Result<Option<LinearMode>, CliError> {
    let l = cfg.grid.l;
    match cfg.seed.n {
        Some(n) => problem.mode(n, l, m),
        None => problem.fastest_mode(m, l, cfg.seed.n_max),
    }
    .map_err(CliError::from_core)
}

fn fit_rows(fits: &[DecayFit], t: &mut Csv) {
    for f in fits {
        t.row(&[
            f.quantity.clone(),
            f.model.name().to_string(),
            num(f.window.0),
            num(f.window.1),
            num(f.value),
            num(f.residual),
        ]);
    }
}

fn simulate_into(
    cfg: &Config,
    out: &mut OutDir,
    restart: Option<&Path>,
    ctx: &Ctx,
) -> Result<SimSummary, CliError> {
    let (profile, lin) = linear(cfg)?;
    let m = lin.m;
    let sim = cfg.sim_config(profile, m)?;
    let run_mode = pick_mode(cfg, &lin.problem, m)?;
    let initial = match restart {
        Some(dir) => read_snapshot(dir, &sim).map_err(CliError::from_core)?.0,
        None => {
            let seed_mode = match &run_mode {
                Some(mode) => mode.clone(),
                None => pick_mode(cfg, &lin.problem, 0.0)?.ok_or_else(|| {
                    CliError::Usage(
                        "seed: the profile has no unstable mode to take a seed shape from".into(),
                    )
                })?,
            };
            let opts = SeedOptions {
                delta: cfg.seed.delta,
                phase: cfg.seed.phase,
                shear: cfg.seed.shear,
            };
            seed_initial_data(&seed_mode, opts, &sim)
                .map_err(CliError::from_core)?
                .state
        }
    };
    let mut escape_header = vec!["t"];
    escape_header.extend(ESCAPE_NAMES);
    let mut reporter = CsvReporter {
        energy: Csv::new(&ENERGY_HEADER),
        escape: cfg.escape.as_ref().map(|_| Csv::new(&escape_header)),
    };
    ctx.note(&format!(
        "simulating m = {m} (m_C = {}) to t = {}",
        lin.critical.mc, sim.t_end
    ));
    let result = run(&sim, initial, &mut [&mut reporter]).map_err(CliError::from_core)?;
    out.write("energy.csv", reporter.energy.text())?;
    if let Some(e) = &reporter.escape {
        out.write("escape_quantities.csv", e.text())?;
    }
    if cfg.output.snapshot {
        let dir = out.path().join("snapshot");
        let mut meta = SnapshotMeta::new();
        meta.insert("m".into(), format!("{m:e}"));
        meta.insert("delta".into(), format!("{:e}", cfg.seed.delta));
        let files =
            write_snapshot(&dir, &result.final_state, &meta).map_err(CliError::from_core)?;
        for f in files {
            out.track(&format!("snapshot/{f}"));
        }
    }

    let reports = &result.reports;
    let t_end = reports.last().map_or(0.0, |r| r.t);
    let lambda_linear = run_mode.as_ref().map(|md| md.lambda);
    let mut fits = Vec::new();
    if let Some(lam) = lambda_linear {
        if let Ok(f) = fit_series(
            reports,
            "u_L2",
            (0.1 / lam, (1.5 / lam).min(t_end)),
            RateModel::Exponential,
        ) {
            fits.push(f);
        }
    } else {
        for q in ["u_L2", "decay_weighted"] {
            if let Ok(f) = fit_series(reports, q, (0.5 * t_end, t_end), RateModel::Power) {
                fits.push(f);
            }
        }
    }
    let mut ft = Csv::new(&[
        "quantity",
        "model",
        "window_lo",
        "window_hi",
        "value",
        "residual",
    ]);
    fit_rows(&fits, &mut ft);
    out.write("fits.csv", ft.text())?;

    let t_escape = cfg.escape.as_ref().map(|e| {
        let t = detect_escape_time(reports, e.epsilon, &[]);
        (e.epsilon, t)
    });
    if let Some((eps, t)) = t_escape {
        let mut et = Csv::new(&["epsilon", "t_escape"]);
        et.row(&[num(eps), opt(t)]);
        out.write("escape.csv", et.text())?;
    }

    let stable_regime = lambda_linear.is_none() && m > lin.critical.mc;
    let verdict = if stable_regime && reports.len() >= 10 {
        let v = monitor_energy_inequality(reports, cfg.stability.c_stab)
            .map_err(CliError::from_core)?;
        let mut vt = Csv::new(&[
            "pass",
            "ratio",
            "bounded",
            "envelope_nonincreasing",
            "first_violation",
        ]);
        vt.row(&[
            u8::from(v.pass).to_string(),
            num(v.ratio),
            u8::from(v.bounded).to_string(),
            u8::from(v.envelope_nonincreasing).to_string(),
            opt(v.first_violation),
        ]);
        out.write("verdict.csv", vt.text())?;
        Some(v)
    } else {
        None
    };

    let u0 = reports.first().map(|r| r.norms.u_l2);
    let u1 = reports.last().map(|r| r.norms.u_l2);
    let summary = SimSummary {
        m,
        mc: lin.critical.mc,
        lambda_linear,
        lambda_fit: fits
            .iter()
            .find(|f| f.model == RateModel::Exponential)
            .map(|f| f.value),
        growth_factor: u0.zip(u1).map(|(a, b)| b / a),
        t_escape: t_escape.and_then(|(_, t)| t),
        verdict: verdict.clone(),
        u_final: u1,
    };
    ctx.note(&format!(
        "{} steps, {:.1} s",
        result.counters.steps,
        result.wall_time.as_secs_f64()
    ));
    if let Termination::Aborted { reason, numerical } = &result.termination {
        return Err(if *numerical {
            CliError::Numerical(reason.clone())
        } else {
            CliError::Usage(reason.clone())
        });
    }
    if let Some(v) = &verdict {
        if !v.pass {
            return Err(CliError::Check(format!(
                "energy inequality verdict FAIL (ratio {}, first violation {:?})",
                v.ratio, v.first_violation
            )));
        }
    }
    Ok(summary)
}

pub fn cmd_simulate(cfg: &Config, ctx: &Ctx, restart: Option<&Path>) -> Result<(), CliError> {
    with_manifest("simulate", cfg, &ctx.out, |out| {
        simulate_into(cfg, out, restart, ctx).map(|_| ())
    })
}

fn clean(s: &str) -> String {
    s.replace([',', '\n'], ";")
}

pub fn cmd_study(cfg: &Config, ctx: &Ctx) -> Result<(), CliError> {
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| CliError::Usage("missing [sweep] section".into()))?;
    if sweep.values.is_empty() {
        return Err(CliError::Usage("sweep.values is empty".into()));
    }
    let children = sweep
        .values
        .iter()
        .map(|v| cfg.with_parameter(&sweep.parameter, *v))
        .collect::<Result<Vec<_>, _>>()?;
    with_manifest("study", cfg, &ctx.out, |out| {
        let child_ctx = Ctx {
            out: PathBuf::new(),
            quiet: ctx.quiet,
        };
        let results = par::map_range(children.len(), |i| {
            let dir = ctx.out.join(format!("run_{i:03}"));
            with_manifest("simulate", &children[i], &dir, |o| {
                simulate_into(&children[i], o, None, &child_ctx)
            })
        });
        let mut table = Csv::new(&[
            "parameter",
            "value",
            "status",
            "m",
            "m_over_mc",
            "lambda_linear",
            "lambda_fit",
            "growth_factor",
            "grew",
            "t_escape",
            "escape_gap",
            "ln2_over_lambda",
            "verdict_ratio",
        ]);
        let mut failures = Vec::new();
        let mut prev_escape: Option<f64> = None;
        for (i, (v, r)) in sweep.values.iter().zip(&results).enumerate() {
            let dir = format!("run_{i:03}");
            match r {
                Ok(s) => {
                    let gap = prev_escape.zip(s.t_escape).map(|(a, b)| b - a);
                    prev_escape = s.t_escape;
                    table.row(&[
                        sweep.parameter.clone(),
                        num(*v),
                        "ok".into(),
                        num(s.m),
                        opt((s.mc > 0.0).then(|| s.m / s.mc)),
                        opt(s.lambda_linear),
                        opt(s.lambda_fit),
                        opt(s.growth_factor),
                        s.growth_factor
                            .map(|g| u8::from(g > 1.0).to_string())
                            .unwrap_or_default(),
                        opt(s.t_escape),
                        opt(gap),
                        opt(s.lambda_linear.map(|l| std::f64::consts::LN_2 / l)),
                        opt(s.verdict.as_ref().map(|v| v.ratio)),
                    ]);
                }
                Err(e) => {
                    prev_escape = None;
                    failures.push((dir.clone(), e.exit_code()));
                    let mut row = vec![
                        sweep.parameter.clone(),
                        num(*v),
                        clean(&format!("failed: {e}")),
                    ];
                    row.extend(std::iter::repeat_n(String::new(), 10));
                    table.row(&row);
                }
            }
            out.track(&format!("{dir}/manifest.toml"));
        }
        out.write("study.csv", table.text())?;
        ctx.note(&format!(
            "study: {} runs, {} failed",
            results.len(),
            failures.len()
        ));
        if failures.is_empty() {
            Ok(())
        } else if failures.iter().any(|(_, c)| *c == 3) {
            Err(CliError::Numerical(format!(
                "study FAILED: {}",
                failures
                    .iter()
                    .map(|f| f.0.as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            )))
        } else {
            Err(CliError::Check(format!(
                "study FAILED: {}",
                failures
                    .iter()
                    .map(|f| f.0.as_str())
                    .collect::<Vec<_>>()
                    .join(" ")
            )))
        }
    })
}

pub fn cmd_convergence(cfg: &Config, ctx: &Ctx) -> Result<(), CliError> {
    with_manifest("convergence", cfg, &ctx.out, |out| {
        let mut table = Csv::new(&["quantity", "level", "parameter", "value", "change", "ratio"]);
        let mut problems = Vec::new();

        // Time-step halving.
        let dt0 = cfg.time.dt;
        let mut u_end = Vec::new();
        for level in 0..3 {
            let dt = dt0 / f64::from(1u32 << level);
            let mut c = cfg.with_parameter("dt", dt)?;
            c.output.snapshot = false;
            c.escape = None;
            let dir = ctx.out.join(format!("dt_{level}"));
            let quiet = Ctx {
                out: dir.clone(),
                quiet: ctx.quiet,
            };
            let s = with_manifest("simulate", &c, &dir, |o| simulate_into(&c, o, None, &quiet));
            let s = match s {
                Ok(s) => s,
                Err(CliError::Check(_)) => {
                    return Err(CliError::Check("dt-halving run failed its verdict".into()))
                }
                Err(e) => return Err(e),
            };
            u_end.push(s.u_final.unwrap_or(f64::NAN));
            out.track(&format!("dt_{level}/manifest.toml"));
        }
        let e1 = (u_end[0] - u_end[1]).abs();
        let e2 = (u_end[1] - u_end[2]).abs();
        let ratio = e1 / e2;
        for (level, u) in u_end.iter().enumerate() {
            let change = if level == 0 {
                None
            } else {
                Some((u_end[level - 1] - u).abs())
            };
            table.row(&[
                "u_L2_final".into(),
                level.to_string(),
                num(dt0 / f64::from(1u32 << level)),
                num(*u),
                opt(change),
                if level == 2 {
                    num(ratio)
                } else {
                    String::new()
                },
            ]);
        }
        if !(3.2..=4.8).contains(&ratio) {
            problems.push(format!("dt-halving error ratio {ratio} outside [3.2, 4.8]"));
        }

        // Vertical resolution of the eigenproblem.
        let profile = cfg.build_profile()?;
        let base = cfg.linstab.modes.unwrap_or(cfg.grid.n2);
        let mut prev: Option<(f64, f64)> = None;
        for level in 0..3 {
            let modes = base << level;
            let mut c = cfg.clone();
            c.linstab.modes = Some(modes);
            let problem = c.problem(&profile)?;
            let cf = problem
                .critical_field(cfg.grid.l)
                .map_err(CliError::from_core)?;
            let m = c.field_strength(&cf)?;
            let rate = problem
                .fastest_mode(m, cfg.grid.l, cfg.seed.n_max)
                .map_err(CliError::from_core)?
                .or(problem
                    .fastest_mode(0.0, cfg.grid.l, cfg.seed.n_max)
                    .map_err(CliError::from_core)?)
                .map_or(0.0, |md| md.lambda);
            let rel = |a: f64, b: f64| {
                if a == 0.0 {
                    (a - b).abs()
                } else {
                    ((a - b) / a).abs()
                }
            };
            let dmc = prev.map(|p| rel(p.0, cf.mc));
            let dl = prev.map(|p| rel(p.1, rate));
            table.row(&[
                "mc".into(),
                level.to_string(),
                modes.to_string(),
                num(cf.mc),
                opt(dmc),
                String::new(),
            ]);
            table.row(&[
                "lambda".into(),
                level.to_string(),
                modes.to_string(),
                num(rate),
                opt(dl),
                String::new(),
            ]);
            if modes / 2 >= 128 {
                if let (Some(a), Some(b)) = (dmc, dl) {
                    if a >= 1e-6 || b >= 1e-6 {
                        problems.push(format!(
                            "N2 doubling to {modes} changes m_C by {a:e}, Lambda by {b:e}"
                        ));
                    }
                }
            }
            prev = Some((cf.mc, rate));
        }
        out.write("convergence.csv", table.text())?;
        ctx.note(&format!("dt-halving error ratio {ratio:.3}"));
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Check(problems.join("; ")))
        }
    })
}
