//! Command-line front end: simulation runs, control-field export, figure
//! datasets, the verification suite, and the schedule planner.
//!
//! All numeric output is CSV with 17 significant digits, so files round-trip
//! losslessly and identical configurations produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::evolve::{
    asymptotic_purity, integrate, steady_state_detect, sweep_gamma, EvolveError, IntegratorConfig,
    Trajectory,
};
use crate::qcore::DensityMatrix;
use crate::reservoir::{
    dissipator_exchanged_weights, dissipator_lindblad, free_steady_state, ReservoirSample,
    SqueezeSchedule,
};
use crate::synthesis::{
    closed_form_field, dfs_frame, synthesize_exact, theorem_report, time_grid, ControlLaw,
    SynthesisError,
};

/// Exact column set of every trajectory CSV.
pub const TRAJECTORY_HEADER: &str =
    "t_gamma,r,theta,rho00,rho11,re_rho01,im_rho01,purity,bx,by,bz,re_omega,im_omega,fidelity";

/// Column set of control-field sample CSVs.
pub const FIELD_HEADER: &str = "t_gamma,r,theta,re_omega,im_omega,abs_omega";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(#[from] EvolveError),
    #[error("{0}")]
    Synthesis(#[from] SynthesisError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("verification failed")]
    VerificationFailed,
}

impl CliError {
    /// Process exit code: 1 config/usage, 2 numerical or i/o, 3 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Synthesis(_) => 1,
            CliError::Numerical(_) | CliError::Io { .. } => 2,
            CliError::VerificationFailed => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Render a float with 17 significant digits (lossless f64 round-trip).
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn trajectory_csv(traj: &Trajectory, schedule: &SqueezeSchedule) -> String {
    let mut out = String::with_capacity(traj.samples.len() * 256);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for s in &traj.samples {
        let sample = schedule.sample(s.t).expect("recorded times are valid");
        let row = [
            s.t,
            sample.r,
            sample.theta,
            s.rho.rho00(),
            s.rho.rho11(),
            s.rho.rho01().re,
            s.rho.rho01().im,
            s.purity,
            s.bloch.bx,
            s.bloch.by,
            s.bloch.bz,
            s.omega.re,
            s.omega.im,
            s.fidelity_to_frame,
        ];
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&fmt_f64(v));
            first = false;
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(path))?;
        }
    }
    fs::write(path, contents).map_err(io_err(path))
}

fn run_trajectory(cfg: &RunConfig) -> Result<(Trajectory, SqueezeSchedule), CliError> {
    let schedule = cfg.schedule()?;
    let rho0 = cfg.initial_density(&schedule)?;
    let traj = integrate(&rho0, &schedule, &cfg.control_law(), &cfg.integrator())?;
    Ok((traj, schedule))
}

/// `simulate`: integrate the configured run and write the trajectory CSV.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let (traj, schedule) = run_trajectory(cfg)?;
    let path = cfg.output.clone().unwrap_or_else(|| PathBuf::from("trajectory.csv"));
    write_file(&path, &trajectory_csv(&traj, &schedule))?;
    Ok(path)
}

/// `synthesize`: sample the configured control law and write field CSV.
pub fn cmd_synthesize(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let schedule = cfg.schedule()?;
    let law = cfg.control_law();
    let samples = law.tabulate(&schedule, cfg.t_max, cfg.dt * cfg.record_stride as f64)?;
    let mut out = String::new();
    out.push_str(FIELD_HEADER);
    out.push('\n');
    for (t, w) in samples {
        let s = schedule.sample(t)?;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(t),
            fmt_f64(s.r),
            fmt_f64(s.theta),
            fmt_f64(w.re),
            fmt_f64(w.im),
            fmt_f64(w.norm())
        );
    }
    let path = cfg.output.clone().unwrap_or_else(|| PathBuf::from("field.csv"));
    write_file(&path, &out)?;
    Ok(path)
}

/// `figure`: reproduce the documented parameter sets, one CSV per curve.
pub fn cmd_figure(name: &str, cfg: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = cfg.output.clone().unwrap_or_else(|| PathBuf::from("."));
    let mut written = Vec::new();
    let mut emit = |file: &str, cfg: &RunConfig| -> Result<(), CliError> {
        let (traj, schedule) = run_trajectory(cfg)?;
        let path = dir.join(file);
        write_file(&path, &trajectory_csv(&traj, &schedule))?;
        written.push(path);
        Ok(())
    };

    let base = RunConfig { output: None, ..cfg.clone() };
    match name {
        // populations / purity / Bloch curves: controlled vs uncontrolled
        "fig2" | "fig3" | "fig4" => {
            let controlled = RunConfig { control: crate::config::ControlKind::Exact, ..base };
            emit(&format!("{name}_controlled.csv"), &controlled)?;
            let uncontrolled =
                RunConfig { control: crate::config::ControlKind::None, ..controlled };
            emit(&format!("{name}_uncontrolled.csv"), &uncontrolled)?;
        }
        // regularized control: field strength and purity for three epsilons
        "fig5" => {
            for (tag, eps) in [("1e-3", 1e-3), ("1e-2", 1e-2), ("1e-1", 1e-1)] {
                let run = RunConfig {
                    nu: 0.0,
                    control: crate::config::ControlKind::Regularized,
                    epsilon: eps,
                    t_max: 12.0,
                    ..base.clone()
                };
                emit(&format!("fig5_eps_{tag}.csv"), &run)?;
            }
        }
        // decaying adjustment at epsilon0 = 0.1, Gamma = 1000 gamma
        "fig6" => {
            let run = RunConfig {
                nu: 0.0,
                control: crate::config::ControlKind::Decaying,
                epsilon0: 0.1,
                gamma_big: 1000.0,
                ..base
            };
            emit("fig6.csv", &run)?;
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown figure `{other}` (expected fig2, fig3, fig4, fig5 or fig6)"
            )))
        }
    }
    Ok(written)
}

/// Planner result: schedule parameters reaching the target frame state.
#[derive(Debug, Clone)]
pub struct Plan {
    pub target_p1: f64,
    pub target_phase: f64,
    pub r_star: f64,
    pub duration: f64,
    pub nu: f64,
    pub schedule: SqueezeSchedule,
}

/// Invert the frame parameterization: excited population
/// `P1(r) = (1 - e^{-2r})/2` gives `r* = -ln(1 - 2 P1)/2`, duration
/// `T = (r* - o)/mu` (clamped at 0), and `nu = 2 * phase / T`.
pub fn plan_schedule(
    target_p1: f64,
    target_phase: f64,
    mu: f64,
    o: f64,
) -> Result<Plan, CliError> {
    if !(0.0..0.5).contains(&target_p1) {
        return Err(CliError::Usage(format!(
            "target excited population must lie in [0, 0.5); {target_p1} is outside the \
             asymptotically reachable set"
        )));
    }
    if !target_phase.is_finite() {
        return Err(CliError::Usage("target phase must be finite".into()));
    }
    let r_star = -0.5 * (1.0 - 2.0 * target_p1).ln();
    let duration = ((r_star - o) / mu).max(0.0);
    let nu = if duration > 0.0 {
        // the frame coherence carries phase theta/2, so theta(T) = 2 * phase
        2.0 * target_phase / duration
    } else if target_phase == 0.0 {
        0.0
    } else {
        return Err(CliError::Usage(
            "a nonzero target phase needs a nonzero ramp duration".into(),
        ));
    };
    let schedule = SqueezeSchedule::new(mu, nu, o)
        .map_err(|e| CliError::Usage(format!("planned schedule invalid: {e}")))?;
    Ok(Plan { target_p1, target_phase, r_star, duration, nu, schedule })
}

/// `plan`: print the planned schedule and optionally write sampled field CSV.
pub fn cmd_plan(
    target_p1: f64,
    target_phase: f64,
    cfg: &RunConfig,
    out: &mut dyn Write,
) -> Result<Plan, CliError> {
    let plan = plan_schedule(target_p1, target_phase, cfg.mu, cfg.o)?;
    writeln!(out, "target excited population: {}", plan.target_p1).ok();
    writeln!(out, "target relative phase:     {} rad", plan.target_phase).ok();
    writeln!(out, "squeeze endpoint r*:       {}", plan.r_star).ok();
    writeln!(out, "ramp duration T:           {} / gamma", plan.duration).ok();
    writeln!(out, "phase ramp rate nu:        {} gamma", plan.nu).ok();
    writeln!(out, "schedule: mu = {}, nu = {}, o = {}", cfg.mu, plan.nu, cfg.o).ok();
    if let Some(path) = &cfg.output {
        if plan.duration > 0.0 {
            let field_cfg = RunConfig {
                nu: plan.nu,
                t_max: plan.duration,
                control: crate::config::ControlKind::Exact,
                output: Some(path.clone()),
                ..cfg.clone()
            };
            let written = cmd_synthesize(&field_cfg)?;
            writeln!(out, "control field written to {}", written.display()).ok();
        }
    }
    Ok(plan)
}

struct Check {
    name: &'static str,
    value: f64,
    tol: f64,
    pass: bool,
}

fn gate(name: &'static str, value: f64, tol: f64) -> Check {
    Check { name, value, tol, pass: value <= tol }
}

/// `verify`: run the invariant suites of all modules and print a pass/fail
/// table. Returns `Ok(true)` when every gated check passes.
pub fn cmd_verify(cfg: &RunConfig, out: &mut dyn Write) -> Result<bool, CliError> {
    let schedule = cfg.schedule()?;
    let mut checks: Vec<Check> = Vec::new();
    let mut info: Vec<String> = Vec::new();

    // --- t-DFS theorem conditions under exact control -----------------
    let grid = time_grid(0.0, cfg.t_max.max(1.0), 500);
    let rep = theorem_report(&schedule, &ControlLaw::Exact, &grid)?;
    checks.push(gate("eigen residual", rep.max_eigen, rep.tolerances.eigen));
    checks.push(gate("frame orthonormality", rep.max_orthonormality, rep.tolerances.orthonormality));
    checks.push(gate("connection unitarity", rep.max_unitarity, rep.tolerances.unitarity));
    checks.push(gate("invariance residual (exact)", rep.max_invariance, rep.tolerances.invariance));
    checks.push(Check {
        name: "gauge continuity (Re > 0)",
        value: rep.min_gauge_overlap_re,
        tol: 0.0,
        pass: rep.min_gauge_overlap_re > 0.0,
    });

    // gauge overlap realness on a nu = 0 grid
    let flat = SqueezeSchedule::new(schedule.mu().max(1e-3), 0.0, schedule.offset())
        .expect("valid schedule");
    let rep0 = theorem_report(&flat, &ControlLaw::Exact, &time_grid(0.0, 3.0, 2000))?;
    checks.push(gate("gauge overlap Im (nu = 0)", rep0.max_gauge_overlap_im, 1e-10));

    // closed form vs generic synthesis, nu = 0, mu t up to 10
    let dev = time_grid(0.0, 10.0, 400)
        .into_iter()
        .map(|t| {
            let cf = closed_form_field(&flat, t)?;
            let ex = synthesize_exact(&flat, t)?;
            Ok((cf.norm() - ex.norm()).abs())
        })
        .collect::<Result<Vec<f64>, SynthesisError>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(gate("closed form vs synthesis (nu=0)", dev, 1e-9));

    if schedule.nu() != 0.0 {
        info.push(format!(
            "closed-form |Omega| deviation at nu = {:.4}: {:.3e} (recorded; the printed \
             closed form is exact only for nu = 0)",
            schedule.nu(),
            rep.max_closed_form_dev
        ));
    }

    // --- dissipator algebra -------------------------------------------
    let mut rng = ChaCha8Rng::seed_from_u64(0x7d5f);
    let mut pair_dev: f64 = 0.0;
    let mut trace_dev: f64 = 0.0;
    let mut herm_dev: f64 = 0.0;
    let mut exchanged_dev: f64 = 0.0;
    for _ in 0..1000 {
        use rand::Rng;
        let rho = DensityMatrix::random(&mut rng);
        let r = rng.gen_range(1e-4..3.0);
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let s = ReservoirSample::at_squeeze(r, th).expect("r > 0");
        let dl = dissipator_lindblad(&rho, &s);
        let de = crate::reservoir::dissipator_expanded(&rho, &s);
        pair_dev = pair_dev.max((&de - &dl).max_abs());
        trace_dev = trace_dev.max(dl.trace().norm());
        herm_dev = herm_dev.max((&dl - &dl.dagger()).max_abs());
        exchanged_dev = exchanged_dev.max((&dissipator_exchanged_weights(&rho, &s) - &dl).max_abs());
    }
    checks.push(gate("dissipator expanded vs lindblad", pair_dev, 1e-12));
    checks.push(gate("dissipator tracelessness", trace_dev, 1e-12));
    checks.push(gate("dissipator hermiticity", herm_dev, 1e-12));
    info.push(format!(
        "exchanged-weight dissipator variant deviates by {exchanged_dev:.3e} (recorded; \
         transcription ambiguity, not used by the dynamics)"
    ));

    // purity derivative vanishes on the frame projector
    let mut dfs_purity_rate: f64 = 0.0;
    for t in time_grid(0.0, 5.0, 101) {
        let s = schedule.sample(t)?;
        let frame = dfs_frame(&schedule, t)?;
        let rho = frame.phi.projector();
        let d = dissipator_lindblad(&rho, &s);
        let rate = 2.0 * rho.as_operator().matmul(&d).expect("dim 2").trace().re;
        dfs_purity_rate = dfs_purity_rate.max(rate.abs());
    }
    checks.push(gate("DFS purity derivative", dfs_purity_rate, 1e-10));

    // --- frozen-reservoir steady state --------------------------------
    let mut st_resid: f64 = 0.0;
    for r in [0.3, 1.0, 2.0] {
        let s = ReservoirSample::at_squeeze(r, 0.0).expect("r > 0");
        let rho = free_steady_state(&s)?;
        st_resid = st_resid.max(dissipator_lindblad(&rho, &s).max_abs());
    }
    checks.push(gate("free steady state stationarity", st_resid, 1e-10));

    let frozen = SqueezeSchedule::frozen(1.0).expect("valid schedule");
    let relax_cfg = IntegratorConfig { dt: 0.01, t_max: 300.0, record_stride: 100, ..Default::default() };
    let rho0 = crate::qcore::PureState::ground().projector();
    let traj = integrate(&rho0, &frozen, &ControlLaw::None, &relax_cfg)?;
    let free = free_steady_state(&frozen.sample(0.0)?)?;
    let relax_dev = (&traj.last().rho.as_operator() - &free.as_operator()).max_abs();
    checks.push(gate("relaxation vs null-space solve", relax_dev, 1e-6));

    // --- integrator quality at the configured step --------------------
    let rho0 = dfs_frame(&schedule, 0.0)?.phi.projector();
    let run_cfg = cfg.integrator();
    let traj = integrate(&rho0, &schedule, &ControlLaw::Exact, &run_cfg)?;
    let purity_err = traj
        .samples
        .iter()
        .map(|s| (s.purity - 1.0).abs())
        .fold(0.0, f64::max);
    checks.push(gate("purity preservation (exact)", purity_err, 1e-5));
    let fid_err = traj
        .samples
        .iter()
        .map(|s| 1.0 - s.fidelity_to_frame)
        .fold(0.0, f64::max);
    checks.push(gate("frame fidelity (exact)", fid_err, 1e-5));

    // order-4 step-halving contraction on a smooth window
    let conv = |dt: f64| -> Result<f64, CliError> {
        let c = IntegratorConfig { dt, t_max: 1.5, ..Default::default() };
        let traj = integrate(&rho0, &schedule, &ControlLaw::Exact, &c)?;
        Ok(traj.samples.iter().map(|s| (s.purity - 1.0).abs()).fold(0.0, f64::max))
    };
    let base_dt = cfg.dt.min(0.01);
    let ratio = conv(base_dt)? / conv(base_dt / 2.0)?;
    checks.push(Check {
        name: "order-4 error contraction",
        value: ratio,
        tol: 24.0,
        pass: (10.0..=24.0).contains(&ratio),
    });

    // --- decaying-adjustment monotonicity ------------------------------
    let flat_long = SqueezeSchedule::new(schedule.mu().max(1e-3), 0.0, schedule.offset())
        .expect("valid schedule");
    let sweep_cfg = IntegratorConfig { dt: run_cfg.dt.max(1e-3), t_max: 12.0, record_stride: 50, ..Default::default() };
    let sweep = sweep_gamma(&flat_long, 0.1, &[1.0, 10.0, 100.0, 1000.0], &sweep_cfg)?;
    let monotone = sweep.rows.windows(2).all(|w| w[0].1 <= w[1].1 + 1e-12);
    let above_baseline = sweep
        .rows
        .iter()
        .all(|&(_, p)| p >= sweep.regularized_baseline - 1e-6);
    checks.push(Check {
        name: "sweep purity monotone in Gamma",
        value: sweep.rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        tol: 1.0,
        pass: monotone,
    });
    checks.push(Check {
        name: "sweep above regularized baseline",
        value: sweep.regularized_baseline,
        tol: 1.0,
        pass: above_baseline,
    });
    info.push(format!(
        "measured long-time purity (regularized eps = 0.1): {:.6} vs asymptotic law {:.6} \
         (recorded; the law is exact only as eps -> 0)",
        sweep.regularized_baseline,
        asymptotic_purity(0.1)
    ));

    // --- steady-state detector -----------------------------------------
    let reg_cfg = IntegratorConfig { dt: run_cfg.dt.max(1e-3), t_max: 10.0, record_stride: 10, ..Default::default() };
    let rho0_flat = dfs_frame(&flat_long, 0.0)?.phi.projector();
    let traj = integrate(&rho0_flat, &flat_long, &ControlLaw::Regularized { epsilon: 0.1 }, &reg_cfg)?;
    let (steady, reached) = steady_state_detect(&traj, 1.0, 1e-6);
    checks.push(Check {
        name: "steady state detected",
        value: (steady.rho00() - 0.5).abs(),
        tol: 1e-3,
        pass: reached && (steady.rho00() - 0.5).abs() <= 1e-3,
    });

    // --- report ---------------------------------------------------------
    let mut all_pass = true;
    writeln!(out, "verification suite ({} gated checks)", checks.len()).ok();
    for c in &checks {
        all_pass &= c.pass;
        writeln!(
            out,
            "  {:<34} {:11.3e}  (tol {:9.1e})  {}",
            c.name,
            c.value,
            c.tol,
            if c.pass { "PASS" } else { "FAIL" }
        )
        .ok();
    }
    for line in &info {
        writeln!(out, "  note: {line}").ok();
    }
    writeln!(out, "overall: {}", if all_pass { "PASS" } else { "FAIL" }).ok();
    Ok(all_pass)
}

/// Deterministic seed helper for callers that need reproducible randomness.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
