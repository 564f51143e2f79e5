use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use opcalc::calculus::{calc_spectral_decomp, finite_dilation, Contraction};
use opcalc::campaign::{replay, run_campaign, CampaignConfig, CheckId, Overrides, ReproBundle};
use opcalc::circlefn::{zoo, CircleFunction};
use opcalc::doi::{birman_solomyak_delta_with, decompose_pair};
use opcalc::linalg::CMat;
use opcalc::shift::{eta_recover, eta_recover_dilation, PLOT_POINTS};
use opcalc::{Error, Result};

#[derive(Parser)]
#[command(name = "opcalc", version, about = "Operator calculus checks for matrix contractions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a verification campaign.
    Verify(VerifyArgs),
    /// Re-evaluate a reproduction bundle.
    Replay {
        bundle: PathBuf,
    },
    /// Recover the truncated spectral shift function of a pair.
    Shift(ShiftArgs),
    /// Build and validate a finite dilation.
    Dilate(DilateArgs),
    /// Apply the divided-difference operator integral to U - V.
    Doi(DoiArgs),
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to a check; repeatable.
    #[arg(long = "check", value_name = "NAME")]
    checks: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; 0 uses all cores.
    #[arg(long, env = "OPCALC_THREADS", default_value_t = 0)]
    threads: usize,
}

#[derive(Args)]
struct ShiftArgs {
    #[arg(long)]
    t0: PathBuf,
    #[arg(long)]
    t1: PathBuf,
    /// Test operator; identity when omitted.
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long, default_value_t = 32)]
    degree: usize,
    /// Take powers through finite dilations.
    #[arg(long)]
    dilation: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DilateArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long)]
    degree: usize,
    /// Write the dilation as matrix JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DoiArgs {
    #[arg(long)]
    u: PathBuf,
    #[arg(long)]
    v: PathBuf,
    /// Zoo function name.
    #[arg(long, conflicts_with = "function_file", required_unless_present = "function_file")]
    function: Option<String>,
    /// CircleFunction JSON file.
    #[arg(long)]
    function_file: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_matrix(path: &Path) -> Result<CMat> {
    CMat::from_json(&fs::read_to_string(path)?)
}

fn verify(a: VerifyArgs) -> Result<ExitCode> {
    let mut cfg = match &a.config {
        Some(p) => CampaignConfig::load(p)?,
        None => CampaignConfig::default(),
    };
    let checks = a.checks.iter().map(|s| s.parse()).collect::<Result<Vec<CheckId>>>()?;
    cfg.apply(&Overrides { master_seed: a.seed, checks, output_dir: a.out, trials: a.trials });
    let out = run_campaign(&cfg, a.threads)?;
    println!("{} rows, {} failures, report in {}", out.rows, out.failures.len(), cfg.output_dir.display());
    if out.ratio_records > 0 {
        println!("ratio records: {}, p = 2 envelope exceedances: {}", out.ratio_records, out.envelope_exceedances);
    }
    for f in &out.failures {
        eprintln!(
            "FAIL {} {} p={} f={} lhs={:e} rhs={:e} bundle={}",
            f.row.instance_id,
            f.row.file,
            f.row.p,
            f.row.f_id,
            f.row.lhs,
            f.row.rhs,
            f.bundle.display()
        );
    }
    Ok(ExitCode::from(out.exit_code as u8))
}

fn replay_cmd(path: &Path) -> Result<ExitCode> {
    let bundle = ReproBundle::from_json(&fs::read_to_string(path)?)?;
    let rows = replay(&bundle)?;
    let mut ok = true;
    for r in &rows {
        let e = &r.expected;
        println!(
            "{} {} p={} f={} lhs={:e} (recorded {:e}) rhs={:e} (recorded {:e}) pass={} {}",
            bundle.instance_id,
            e.file,
            e.p,
            e.f_id,
            r.lhs,
            e.lhs,
            r.rhs,
            e.rhs,
            r.pass,
            if r.reproduced { "reproduced" } else { "MISMATCH" }
        );
        ok &= r.reproduced;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn shift(a: ShiftArgs) -> Result<ExitCode> {
    let (t0, t1) = (Contraction::new(read_matrix(&a.t0)?)?, Contraction::new(read_matrix(&a.t1)?)?);
    let x = match &a.x {
        Some(p) => read_matrix(p)?,
        None => CMat::identity(t0.dim()),
    };
    let eta = if a.dilation {
        eta_recover_dilation(&t0, &t1, &x, a.degree)?
    } else {
        eta_recover(t0.mat(), t1.mat(), &x, a.degree)?
    };
    fs::create_dir_all(&a.out)?;
    let (re, im) = eta.plot_text();
    fs::write(a.out.join("eta.json"), eta.to_json())?;
    fs::write(a.out.join("eta_re.dat"), re)?;
    fs::write(a.out.join("eta_im.dat"), im)?;
    println!("N = {}, grid L1 norm = {:e}", eta.degree(), eta.l1_grid_norm(PLOT_POINTS));
    Ok(ExitCode::SUCCESS)
}

fn dilate(a: DilateArgs) -> Result<ExitCode> {
    let t = Contraction::new(read_matrix(&a.matrix)?)?;
    let u = finite_dilation(&t, a.degree)?;
    println!(
        "dimension {}, unitarity residual {:e}, power residual {:e}",
        u.u().rows(),
        u.unitarity_residual(),
        u.power_residual(&t)
    );
    if let Some(out) = &a.out {
        fs::write(out, u.u().to_json())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn doi(a: DoiArgs) -> Result<ExitCode> {
    let f: CircleFunction = match (&a.function, &a.function_file) {
        (Some(name), _) => zoo::by_name(name).ok_or_else(|| Error::InvalidArgument(format!("unknown function {name}")))?,
        (None, Some(p)) => CircleFunction::from_json(&fs::read_to_string(p)?)?,
        (None, None) => return Err(Error::InvalidArgument("a function is required".into())),
    };
    let (u, v) = (read_matrix(&a.u)?, read_matrix(&a.v)?);
    let (e, fd) = decompose_pair(&u, &v)?;
    let delta = birman_solomyak_delta_with(&f, &e, &fd, &(&u - &v))?;
    let direct = &calc_spectral_decomp(&f, &e) - &calc_spectral_decomp(&f, &fd);
    println!("‖T(U - V) - (f(U) - f(V))‖_2 = {:e}", (&delta - &direct).frobenius());
    match &a.out {
        Some(out) => fs::write(out, delta.to_json())?,
        None => println!("{}", delta.to_json()),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Verify(a) => verify(a),
        Cmd::Replay { bundle } => replay_cmd(&bundle),
        Cmd::Shift(a) => shift(a),
        Cmd::Dilate(a) => dilate(a),
        Cmd::Doi(a) => doi(a),
    };
    res.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
