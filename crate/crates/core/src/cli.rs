//! Command-line front end. `run` returns the process exit code: 0 on
//! success, 1 on a domain or I/O failure (reported as JSON on stderr), 2 on a
//! usage error.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::calibration::{
    compare_calibrators_with, estimate_four_point, estimate_normalized_matrix, evaluate_calibration,
    train_mlp_calibrator, BoardRegion, Calibration, CorrespondenceSet, ImageBounds, TrainingConfig,
};
use crate::error::{Error, Result};
use crate::format::{join_fixed9, json_fixed9};
use crate::geometry::ArmPoint;
use crate::kinematics::{
    forward_kinematics, solve_ik_closed_3dof, solve_ik_iterative, ChainJson, IkConfig, JointVector, KinematicChain,
};
use crate::sketch::{
    evaluate_drawing, extract_edge_points, order_strokes, plan_trajectory, read_commanded_csv, read_points_csv,
    write_commanded_csv, GrayRaster, IkMethod, JointTrajectory, PlanOptions,
};

#[derive(Debug, Parser)]
#[command(
    name = "armsketch",
    version,
    about = "Calibration, kinematics and trajectory planning for a sketch-drawing arm"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one board→arm calibration from a correspondence CSV.
    Calibrate(CalibrateArgs),
    /// Fit all three calibrators and report their errors.
    Compare(CompareArgs),
    /// Forward kinematics: joint angles to arm point.
    Fk(FkArgs),
    /// Inverse kinematics: arm point to joint angles.
    Ik(IkArgs),
    /// Plan a joint trajectory for an image or point file.
    Draw(DrawArgs),
    /// Mean squared error between commanded points and a trajectory.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CalibMethod {
    FourPoint,
    Matrix,
    Mlp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum IkMethodArg {
    Iterative,
    Closed,
}

impl From<IkMethodArg> for IkMethod {
    fn from(m: IkMethodArg) -> Self {
        match m {
            IkMethodArg::Iterative => IkMethod::Iterative,
            IkMethodArg::Closed => IkMethod::Closed,
        }
    }
}

#[derive(Debug, Args)]
struct TrainingArgs {
    /// Random seed for MLP initialization and data split (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// JSON training configuration.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long, value_enum)]
    method: CalibMethod,
    /// Correspondence CSV (`bx,by,bz,ax,ay,az`).
    #[arg(long)]
    pairs: PathBuf,
    #[command(flatten)]
    training: TrainingArgs,
    /// Also write the bare calibration JSON here, at full precision.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    pairs: PathBuf,
    #[command(flatten)]
    training: TrainingArgs,
    /// Include fit wall times (output is then no longer reproducible).
    #[arg(long)]
    timings: bool,
}

#[derive(Debug, Args)]
struct FkArgs {
    /// Chain name (nao-right-3dof, nao-right-5dof) or chain JSON file.
    #[arg(long)]
    chain: String,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    joints: NumList,
}

#[derive(Debug, Args)]
struct IkArgs {
    #[arg(long, value_enum)]
    method: IkMethodArg,
    #[arg(long)]
    chain: String,
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    target: [f64; 3],
    /// Initial joints for the iterative solver (default: zeros).
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    seed_joints: Option<NumList>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).args(["image", "points"])))]
struct DrawArgs {
    /// PGM image; edge pixels become the drawing points.
    #[arg(long)]
    image: Option<PathBuf>,
    /// CSV of `u,v` points.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Board region x_min,x_max,y_min,y_max,z in meters.
    #[arg(long, value_parser = parse_board, allow_hyphen_values = true)]
    board: BoardRegion,
    /// Pixel extents u_min,u_max,v_min,v_max mapped onto the board
    /// (default: the image frame, or the point set's bounding box).
    #[arg(long, value_parser = parse_bounds, allow_hyphen_values = true)]
    image_bounds: Option<ImageBounds>,
    /// Calibration JSON (bare, or the output of `calibrate`).
    #[arg(long)]
    calib: PathBuf,
    #[arg(long)]
    chain: String,
    #[arg(long, value_enum, default_value = "iterative")]
    method: IkMethodArg,
    /// Maximum pixel distance between consecutive points of a stroke.
    #[arg(long, default_value_t = 1.5)]
    gap: f64,
    /// Edge gradient threshold in intensity units.
    #[arg(long, default_value_t = 64.0)]
    threshold: f64,
    #[arg(long, value_parser = parse_list, allow_hyphen_values = true)]
    seed_joints: Option<NumList>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Trajectory CSV destination (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional `stroke,u,v` plan CSV.
    #[arg(long)]
    plan_out: Option<PathBuf>,
    /// Optional `x,y,z` CSV of the commanded arm points, for `eval`.
    #[arg(long)]
    commanded_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    commanded: PathBuf,
    #[arg(long)]
    trajectory: PathBuf,
    #[arg(long)]
    chain: String,
}

/// Comma-separated numbers given as one argument.
#[derive(Debug, Clone)]
struct NumList(Vec<f64>);

fn parse_list(s: &str) -> std::result::Result<NumList, String> {
    split_numbers(s).map(NumList)
}

fn split_numbers(s: &str) -> std::result::Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let v: f64 = t.trim().parse().map_err(|_| format!("not a number: {t:?}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("not finite: {t:?}"))
            }
        })
        .collect()
}

fn parse_n<const N: usize>(s: &str) -> std::result::Result<[f64; N], String> {
    let v = split_numbers(s)?;
    v.try_into()
        .map_err(|v: Vec<f64>| format!("expected {N} comma-separated values, got {}", v.len()))
}

fn parse_triple(s: &str) -> std::result::Result<[f64; 3], String> {
    parse_n::<3>(s)
}

fn parse_board(s: &str) -> std::result::Result<BoardRegion, String> {
    let [x0, x1, y0, y1, z] = parse_n::<5>(s)?;
    BoardRegion::new(x0, x1, y0, y1, z).map_err(|e| e.to_string())
}

fn parse_bounds(s: &str) -> std::result::Result<ImageBounds, String> {
    let [u0, u1, v0, v1] = parse_n::<4>(s)?;
    ImageBounds::new(u0, u1, v0, v1).map_err(|e| e.to_string())
}

fn io_at(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(io_at(path))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(io_at(path))
}

fn load_pairs(path: &Path) -> Result<CorrespondenceSet> {
    let file = fs::File::open(path).map_err(io_at(path))?;
    CorrespondenceSet::read_csv(BufReader::new(file))
}

fn load_chain(spec: &str) -> Result<KinematicChain> {
    if let Some(chain) = KinematicChain::named(spec) {
        return Ok(chain);
    }
    let path = Path::new(spec);
    if !path.exists() {
        return Err(Error::Input(format!(
            "unknown chain {spec:?}: expected nao-right-3dof, nao-right-5dof or a chain JSON file"
        )));
    }
    let json: ChainJson = serde_json::from_str(&read_text(path)?)?;
    let name = path
        .file_stem()
        .map_or_else(|| spec.to_string(), |s| s.to_string_lossy().into_owned());
    KinematicChain::from_json(&name, &json)
}

fn training_config(args: &TrainingArgs) -> Result<TrainingConfig> {
    let mut cfg = match &args.config {
        Some(path) => serde_json::from_str(&read_text(path)?)?,
        None => TrainingConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn calibration_value(cal: &Calibration) -> Result<Value> {
    Ok(serde_json::to_value(cal.to_json())?)
}

fn cmd_calibrate(args: &CalibrateArgs, out: &mut dyn Write) -> Result<()> {
    let cs = load_pairs(&args.pairs)?;
    let mut report = serde_json::Map::new();
    let cal = match args.method {
        CalibMethod::FourPoint => Calibration::Transform(estimate_four_point(&cs)?),
        CalibMethod::Matrix => Calibration::Transform(estimate_normalized_matrix(&cs)?),
        CalibMethod::Mlp => {
            let cfg = training_config(&args.training)?;
            let (net, trace) = train_mlp_calibrator(&cs, &cfg)?;
            let last = trace.epochs.last().expect("trace has the initial epoch");
            report.insert(
                "training".into(),
                json!({
                    "epochs": last.epoch,
                    "train_mse": last.train_mse,
                    "validation_mse": last.validation_mse,
                    "test_mse": last.test_mse,
                    "pearson_r": trace.pearson_r,
                    "stop_reason": trace.stop_reason,
                }),
            );
            Calibration::Mlp(net)
        }
    };
    let stats = evaluate_calibration(&cal, &cs)?;
    let cal_json = calibration_value(&cal)?;
    if let Some(path) = &args.out {
        write_file(path, serde_json::to_string_pretty(&cal_json)?.as_bytes())?;
    }
    report.insert("calibration".into(), cal_json);
    report.insert("stats".into(), serde_json::to_value(stats)?);
    writeln!(out, "{}", json_fixed9(&Value::Object(report)))?;
    Ok(())
}

fn cmd_compare(args: &CompareArgs, out: &mut dyn Write) -> Result<()> {
    let cs = load_pairs(&args.pairs)?;
    let cfg = training_config(&args.training)?;
    let report = compare_calibrators_with(&cs, &cfg, 1)?;
    let mut methods = serde_json::Map::new();
    for m in &report.methods {
        let mut entry = serde_json::Map::new();
        entry.insert("stats".into(), serde_json::to_value(m.stats)?);
        entry.insert("mean_mse".into(), json!(m.stats.mean_mse()));
        if args.timings {
            entry.insert("fit_seconds".into(), json!(m.fit_seconds));
        }
        methods.insert(m.method.into(), Value::Object(entry));
    }
    writeln!(
        out,
        "{}",
        json_fixed9(&json!({ "methods": methods, "pairs": cs.len() }))
    )?;
    Ok(())
}

fn cmd_fk(args: &FkArgs, out: &mut dyn Write) -> Result<()> {
    let chain = load_chain(&args.chain)?;
    let pose = forward_kinematics(&chain, &JointVector(args.joints.0.clone()))?;
    let p = pose.position;
    writeln!(out, "{}", join_fixed9(&[p.x, p.y, p.z]))?;
    Ok(())
}

fn cmd_ik(args: &IkArgs, out: &mut dyn Write) -> Result<()> {
    let chain = load_chain(&args.chain)?;
    let [x, y, z] = args.target;
    let target = ArmPoint::new(x, y, z);
    let joints = match args.method {
        IkMethodArg::Closed => {
            let (l1, l2) = chain.shoulder_elbow_lengths().ok_or_else(|| {
                Error::Input(format!(
                    "closed-form IK needs a shoulder-elbow chain, {} is not one",
                    chain.name()
                ))
            })?;
            let local = crate::geometry::apply_transform(&chain.base_offset().rigid_inverse(), &target.to_vector())?;
            solve_ik_closed_3dof(l1, l2, &ArmPoint::from(local))?
        }
        IkMethodArg::Iterative => {
            let seed = match &args.seed_joints {
                Some(v) => JointVector(v.0.clone()),
                None => JointVector::zeros(chain.dof()),
            };
            let cfg = IkConfig {
                tol: args.tol,
                max_iter: args.max_iter,
                ..IkConfig::default()
            };
            solve_ik_iterative(&chain, &target, &seed, &cfg)?.joints
        }
    };
    writeln!(out, "{}", join_fixed9(&joints))?;
    Ok(())
}

fn cmd_draw(args: &DrawArgs, out: &mut dyn Write) -> Result<()> {
    let (points, frame) = match (&args.image, &args.points) {
        (Some(path), _) => {
            let bytes = fs::read(path).map_err(io_at(path))?;
            let img = GrayRaster::read_pgm(&bytes)?;
            let frame = ImageBounds::new(0.0, (img.width() - 1) as f64, 0.0, (img.height() - 1) as f64).ok();
            (extract_edge_points(&img, args.threshold)?, frame)
        }
        (None, Some(path)) => (read_points_csv(read_text(path)?.as_bytes())?, None),
        (None, None) => unreachable!("clap enforces one input"),
    };
    let mut plan = order_strokes(&points, args.gap)?;
    if let Some(b) = args.image_bounds.or(frame) {
        plan.bounds = Some(b);
    }
    let cal_value: Value = serde_json::from_str(&read_text(&args.calib)?)?;
    let cal_value = match cal_value.get("calibration") {
        Some(inner) => inner.clone(),
        None => cal_value,
    };
    let calibration = Calibration::from_json(&serde_json::from_value(cal_value)?)?;
    let chain = load_chain(&args.chain)?;
    let opts = PlanOptions {
        method: args.method.into(),
        ik: IkConfig {
            tol: args.tol,
            max_iter: args.max_iter,
            ..IkConfig::default()
        },
        seed: args.seed_joints.clone().map(|v| JointVector(v.0)),
    };
    let drawing = plan_trajectory(&plan, &args.board, &calibration, &chain, &opts)?;

    if let Some(path) = &args.plan_out {
        let mut buf = Vec::new();
        plan.write_csv(&mut buf)?;
        write_file(path, &buf)?;
    }
    if let Some(path) = &args.commanded_out {
        let mut buf = Vec::new();
        write_commanded_csv(&drawing.commanded, &mut buf)?;
        write_file(path, &buf)?;
    }
    let mut csv = Vec::new();
    drawing.trajectory.write_csv(&mut csv)?;
    match &args.out {
        Some(path) => {
            write_file(path, &csv)?;
            let max_residual = drawing.trajectory.pen_down().map(|w| w.residual).fold(0.0, f64::max);
            let summary = json!({
                "strokes": drawing.trajectory.strokes.len(),
                "points": drawing.commanded.len(),
                "max_residual_m": max_residual,
            });
            writeln!(out, "{}", json_fixed9(&summary))?;
        }
        None => out.write_all(&csv)?,
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let chain = load_chain(&args.chain)?;
    let commanded = read_commanded_csv(read_text(&args.commanded)?.as_bytes())?;
    let traj = JointTrajectory::read_csv(read_text(&args.trajectory)?.as_bytes(), chain.name())?;
    let mse = evaluate_drawing(&commanded, &traj, &chain)?;
    let summary = json!({
        "points": commanded.len(),
        "mse_m2": mse,
        "rmse_m": mse.sqrt(),
    });
    writeln!(out, "{}", json_fixed9(&summary))?;
    Ok(())
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Calibrate(a) => cmd_calibrate(a, out),
        Command::Compare(a) => cmd_compare(a, out),
        Command::Fk(a) => cmd_fk(a, out),
        Command::Ik(a) => cmd_ik(a, out),
        Command::Draw(a) => cmd_draw(a, out),
        Command::Eval(a) => cmd_eval(a, out),
    }
}

/// Usage line of the subcommand named in `argv`, or of the whole program.
fn usage_for(argv: &[std::ffi::OsString]) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let sub = argv.get(1).and_then(|a| a.to_str()).map(str::to_string);
    match sub.and_then(|name| cmd.find_subcommand_mut(&name).map(|c| c.render_usage().to_string())) {
        Some(u) => u,
        None => cmd.render_usage().to_string(),
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let argv_copy: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv_copy) {
        Ok(cli) => cli,
        Err(e) => {
            let mut text = e.render().to_string();
            if e.use_stderr() {
                if !text.contains("Usage:") {
                    text.push_str(&format!("\n{}\n", usage_for(&argv_copy)));
                }
                let _ = write!(stderr, "{text}");
                return 2;
            }
            let _ = write!(stdout, "{text}");
            return 0;
        }
    };
    let mut buf = Vec::new();
    match dispatch(&cli, &mut buf) {
        Ok(()) => {
            if stdout.write_all(&buf).and_then(|_| stdout.flush()).is_err() {
                return 1;
            }
            0
        }
        Err(e) => {
            let report = json!({ "error": e.kind(), "message": e.to_string() });
            let _ = writeln!(stderr, "{report}");
            1
        }
    }
}
