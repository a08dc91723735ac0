//! `spinsim`: command-line front end for the strongly coupled spin simulator.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use spinsim_core::acceptance::run_all;
use spinsim_core::acquisition::{
    acquire_fid, detect_small_angle, fft, fft_frequencies, fit_scale, reconstruct_density, spectrum_csv, tomo_diagonal,
    tomo_offdiagonal_2d, tomo_scale_calibration, Tomo2DOptions, DEFAULT_BETA_DEG,
};
use spinsim_core::assignment::{reconstruct_levels, ConnectivityMatrix, DEFAULT_SOLUTION_CAP};
use spinsim_core::dynamics::state_fidelity;
use spinsim_core::format::g12;
use spinsim_core::protocols::{
    c2swap_4spin, c3not_4spin, dj_one_qubit, dj_two_qubit_2d, epr_create, gate_library_2spin, ghz_create, pops_pair,
    pseudopure_2spin, Dj2Config, FourSpinConfig, GhzConfig, ProtocolReport,
};
use spinsim_core::{
    compile, eigensystem, equilibrium_deviation, mixing_angle_ab, transition_catalog, DeviationDensityMatrix,
    EigenSystem, PulseProgram, SpinSystem, TransitionCatalog, DEFAULT_THRESHOLD,
};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "spinsim",
    version,
    about = "Quantum-information experiments on strongly coupled spins"
)]
struct Cli {
    #[command(flatten)]
    opts: Options,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct Options {
    /// Output directory for generated files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Relative intensity below which a line counts as unobservable.
    #[arg(long, global = true, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Number of t2 points (power of two); t1 uses a quarter of it.
    #[arg(long, global = true)]
    points: Option<usize>,
    /// Dwell time in seconds.
    #[arg(long, global = true)]
    dwell: Option<f64>,
    /// Readout flip angle in degrees.
    #[arg(long, global = true, default_value_t = DEFAULT_BETA_DEG)]
    beta: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Print eigenstates and the transition catalog.
    Eigen {
        system: PathBuf,
        /// Use the weak-coupling (secular) Hamiltonian.
        #[arg(long)]
        weak: bool,
    },
    /// Run a pulse program and write `.state` and `.spectrum` files.
    Run {
        system: PathBuf,
        program: PathBuf,
        /// Initial state file (default: thermal equilibrium).
        #[arg(long)]
        initial: Option<PathBuf>,
    },
    /// Run a canned protocol and write `.pp`, `.state` and `.report` files.
    ///
    /// Names: pps00 pps01 pps10 pps11 epr ghz dj1-f1..f4 dj2-f1..f8
    /// gate1..gate24 c3not c2swap pops:<label>,<label>
    Protocol { name: String, system: PathBuf },
    /// Reconstruct energy-level diagrams from a connectivity matrix.
    Assign {
        connectivity: PathBuf,
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SOLUTION_CAP)]
        cap: usize,
    },
    /// Simulated tomography of a state file.
    Tomo { system: PathBuf, state: PathBuf },
    /// Run the acceptance suite.
    Accept,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    let o = &cli.opts;
    if !(o.threshold.is_finite() && (0.0..1.0).contains(&o.threshold)) {
        bail!("--threshold must be in [0, 1), got {}", o.threshold);
    }
    if !(o.beta.is_finite() && o.beta > 0.0 && o.beta <= 90.0) {
        bail!("--beta must be in (0, 90], got {}", o.beta);
    }
    if let Some(p) = o.points {
        if p < 4 || !p.is_power_of_two() {
            bail!("--points must be a power of two >= 4, got {p}");
        }
    }
    if let Some(d) = o.dwell {
        if !(d.is_finite() && d > 0.0) {
            bail!("--dwell must be positive, got {d}");
        }
    }
    match &cli.cmd {
        Command::Eigen { system, weak } => cmd_eigen(o, system, *weak),
        Command::Run {
            system,
            program,
            initial,
        } => cmd_run(o, system, program, initial.as_deref()),
        Command::Protocol { name, system } => cmd_protocol(o, name, system),
        Command::Assign { connectivity, n, cap } => cmd_assign(o, connectivity, *n, *cap),
        Command::Tomo { system, state } => cmd_tomo(o, system, state),
        Command::Accept => Ok(cmd_accept()),
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_system(path: &Path) -> Result<SpinSystem> {
    SpinSystem::parse(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn load(path: &Path, o: &Options, weak: bool) -> Result<(SpinSystem, EigenSystem, TransitionCatalog)> {
    let sys = load_system(path)?;
    let es = eigensystem(&sys, weak)?;
    let cat = transition_catalog(&es, o.threshold);
    Ok((sys, es, cat))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into())
}

fn cmd_eigen(o: &Options, system: &Path, weak: bool) -> Result<ExitCode> {
    let (sys, es, cat) = load(system, o, weak)?;
    println!("system {} n {} dim {}", sys.name, sys.n(), es.dim());
    if sys.n() == 2 {
        let theta = mixing_angle_ab(&sys)?;
        println!("theta {theta:.1} deg ({})", g12(theta));
    }
    println!("# level label mz energy_hz");
    for k in 0..es.dim() {
        println!(
            "{} {} {} {}",
            k,
            es.label(k),
            g12(es.mz[k]),
            g12(es.energies[k] / (2.0 * std::f64::consts::PI))
        );
    }
    println!("# transition lower upper freq_hz intensity observable");
    for t in &cat.entries {
        println!(
            "t{} {} {} {} {} {}",
            t.id,
            es.label(t.lower),
            es.label(t.upper),
            g12(t.freq_hz),
            g12(t.intensity),
            if t.observable { "yes" } else { "no" }
        );
    }
    println!("observable {} of {}", cat.observable().count(), cat.len());
    if es.label_conflicts > 0 {
        eprintln!(
            "warning: {} eigenstates share a dominant product state",
            es.label_conflicts
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn spectrum_text(
    es: &EigenSystem,
    cat: &TransitionCatalog,
    rho: &DeviationDensityMatrix,
    acq: Option<(usize, f64)>,
    o: &Options,
) -> Result<String> {
    Ok(match acq {
        Some((points, dwell)) => {
            let fid = acquire_fid(es, rho, points, dwell)?;
            let mag: Vec<f64> = fft(&fid)?.iter().map(|z| z.norm()).collect();
            spectrum_csv(&fft_frequencies(points, dwell), &mag)
        }
        None => {
            if !rho.is_diagonal(1e-12) {
                eprintln!("warning: state has coherences; the stick spectrum shows populations only");
            }
            detect_small_angle(es, cat, rho, o.beta).to_csv()
        }
    })
}

fn cmd_run(o: &Options, system: &Path, program: &Path, initial: Option<&Path>) -> Result<ExitCode> {
    let (_, es, cat) = load(system, o, false)?;
    let prog = PulseProgram::parse(&read(program)?).with_context(|| format!("{}", program.display()))?;
    let compiled = compile(&prog, &es, &cat)?;
    let rho0 = match initial {
        Some(p) => DeviationDensityMatrix::parse(&read(p)?).with_context(|| format!("{}", p.display()))?,
        None => equilibrium_deviation(&es),
    };
    if rho0.dim() != es.dim() {
        bail!("initial state has dimension {}, system has {}", rho0.dim(), es.dim());
    }
    let delays = spinsim_core::Delays::default();
    let rho = compiled.execute_cycled(&es, &rho0, delays)?;
    let name = stem(program);
    let st = write(&o.out, &format!("{name}.state"), &rho.to_text())?;
    let sp = write(
        &o.out,
        &format!("{name}.spectrum"),
        &spectrum_text(&es, &cat, &rho, compiled.acquisition(), o)?,
    )?;
    for (key, _, id) in &compiled.resolved {
        println!("transition {key} = t{id}");
    }
    println!("wrote {}", st.display());
    println!("wrote {}", sp.display());
    Ok(ExitCode::SUCCESS)
}

fn split_fn(name: &str, prefix: &str) -> Option<Result<usize>> {
    name.strip_prefix(prefix).map(|k| {
        k.parse::<usize>()
            .map_err(|_| anyhow!("bad function number in '{name}'"))
    })
}

fn cmd_protocol(o: &Options, name: &str, system: &Path) -> Result<ExitCode> {
    let (_, es, cat) = load(system, o, false)?;
    let mut extra: Option<(String, String)> = None;
    let rep: ProtocolReport = if let Some(t) = name.strip_prefix("pps") {
        pseudopure_2spin(&es, &cat, t)?
    } else if let Some(pair) = name.strip_prefix("pops:") {
        let (a, b) = pair
            .split_once(',')
            .ok_or_else(|| anyhow!("expected pops:<label>,<label>"))?;
        pops_pair(&es, &cat, a, b)?.0
    } else if let Some(f) = split_fn(name, "dj1-f") {
        dj_one_qubit(&es, &cat, f?)?
    } else if let Some(f) = split_fn(name, "dj2-f") {
        let mut cfg = Dj2Config::default();
        if let Some(p) = o.points {
            cfg.t2_points = p;
            cfg.t1_points = p / 4;
        }
        let (rep, data) = dj_two_qubit_2d(&es, &cat, f?, &cfg)?;
        extra = Some((format!("{}.2d", rep.name), data.to_text()));
        rep
    } else if let Some(g) = split_fn(name, "gate") {
        gate_library_2spin(&es, &cat, g?)?
    } else {
        match name {
            "epr" => epr_create(&es, &cat)?,
            "ghz" => ghz_create(&es, &cat, &GhzConfig::default())?,
            "c3not" => c3not_4spin(&es, &cat, &FourSpinConfig::default())?,
            "c2swap" => c2swap_4spin(&es, &cat, &FourSpinConfig::default())?,
            other => bail!("unknown protocol '{other}'"),
        }
    };
    rep.write_to(&o.out)
        .with_context(|| format!("cannot write to {}", o.out.display()))?;
    if let Some((file, text)) = extra {
        write(&o.out, &file, &text)?;
    }
    print!("{}", rep.report_text());
    Ok(ExitCode::SUCCESS)
}

fn cmd_assign(o: &Options, path: &Path, n: usize, cap: usize) -> Result<ExitCode> {
    let cm = ConnectivityMatrix::parse(&read(path)?).with_context(|| format!("{}", path.display()))?;
    let rec = reconstruct_levels(&cm, n, cap)?;
    let mut text = String::new();
    for (k, d) in rec.diagrams.iter().enumerate() {
        text.push_str(&format!("# diagram {}\n{}\n", k + 1, d.to_text()));
    }
    let file = write(&o.out, &format!("{}.levels", stem(path)), &text)?;
    println!("diagrams {}", rec.diagrams.len());
    println!("truncated {}", rec.truncated);
    let amb: Vec<String> = rec.ambiguous.iter().map(|id| id.to_string()).collect();
    println!(
        "ambiguous {}",
        if amb.is_empty() { "none".into() } else { amb.join(",") }
    );
    println!("wrote {}", file.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_tomo(o: &Options, system: &Path, state: &Path) -> Result<ExitCode> {
    let (_, es, cat) = load(system, o, false)?;
    let rho = DeviationDensityMatrix::parse(&read(state)?).with_context(|| format!("{}", state.display()))?;
    if rho.dim() != es.dim() {
        bail!("state has dimension {}, system has {}", rho.dim(), es.dim());
    }
    let mut opts = Tomo2DOptions {
        dwell1: o.dwell,
        dwell2: o.dwell,
        ..Tomo2DOptions::default()
    };
    if let Some(p) = o.points {
        opts.t2_points = p;
        opts.t1_points = p / 4;
    }
    let diag = tomo_diagonal(&es, &cat, &rho, o.beta);
    let t2d = tomo_offdiagonal_2d(&es, &cat, &rho, opts)?;
    let cal = tomo_scale_calibration(&es, &cat, &rho);
    let scale = fit_scale(&es, &cat, &cal, &diag.populations, &t2d.coherences);
    let (rec, symmetrized) = reconstruct_density(&diag.populations, &t2d.coherences, scale);
    if symmetrized {
        eprintln!("warning: reconstructed matrix was not Hermitian and has been symmetrised");
    }
    let name = stem(state);
    let st = write(&o.out, &format!("{name}.tomo.state"), &rec.to_text())?;
    let mut peaks = String::from("f1_hz f2_hz height order\n");
    for p in &t2d.peaks {
        peaks.push_str(&format!("{} {} {} {}\n", g12(p.f1), g12(p.f2), g12(p.height), p.order));
    }
    let pk = write(&o.out, &format!("{name}.peaks"), &peaks)?;
    println!("fidelity {}", g12(state_fidelity(&rec, &rho)));
    println!("calibration_ratio {}", g12(cal.ratio));
    println!("scale {}", g12(scale));
    println!("rank_deficiency {}", diag.rank_deficiency + t2d.rank_deficiency);
    println!("peaks {}", t2d.peaks.len());
    println!("wrote {}", st.display());
    println!("wrote {}", pk.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_accept() -> ExitCode {
    let mut ok = true;
    for r in run_all() {
        println!("{r}");
        ok &= r.passed;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
