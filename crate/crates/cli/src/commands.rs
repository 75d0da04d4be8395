use std::f64::consts::{PI, TAU};
use std::fmt;
use std::path::Path;

use serde_json::{json, Value};

use crange_core::catalog::{self, quarter_turn_generator};
use crange_core::geometry::{
    convex_hull, find_star_center, polygon_area, disc_diagnostic_points, star_shaped_test, write_svg,
    OccupancyGrid,
};
use crange_core::linalg::{commutator, expm_skew, read_matrix, I};
use crange_core::local::{
    classify_4x4, conjecture_check, local_torus_coordinates, random_etloc_element, tloc_feasibility,
    CaseLabel, Classification, ConjectureOutcome, SignedPerm,
};
use crange_core::range::{hermitian_interval, radius, sample_range, support_points, write_points_csv};
use crange_core::rng::{complex_normal, derive_seed, rng_from_seed};
use crange_core::symmetry::{blockshift_canonical, detect_weak_symmetry_with, BlockShift};
use crange_core::{ComplexMatrix, Error, GroupSpec, Tolerances, C64};

use crate::{
    ClassifyArgs, Command, Common, ConjectureArgs, ExampleArgs, LocalCommand, RadiusArgs, RangeArgs, SymmetryArgs,
    SymmetryMode,
};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::DimensionMismatch { .. }) => 3,
            _ => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub struct Report {
    pub json: Value,
    /// Selects exit code 0 over 1.
    pub positive: bool,
}

pub fn run(command: &Command) -> Result<Report> {
    match command {
        Command::Range(a) => cmd_range(a),
        Command::Radius(a) => cmd_radius(a),
        Command::Symmetry(a) => cmd_symmetry(a),
        Command::Local(LocalCommand::Classify(a)) => cmd_classify(a),
        Command::Local(LocalCommand::Conjecture(a)) => cmd_conjecture(a),
        Command::Example(a) => cmd_example(a),
    }
}

fn tolerances(common: &Common) -> Result<Tolerances> {
    let mut tol = Tolerances::default();
    if let Some(t) = common.tol_feas {
        if !(t.is_finite() && t > 0.0) {
            return Err(CliError::Usage(format!("--tol-feas must be positive, got {t}")));
        }
        tol.feas = t;
    }
    Ok(tol)
}

fn config(command: &str, common: &Common, tol: &Tolerances, extra: Value) -> Value {
    let mut cfg = json!({
        "command": command,
        "seed": common.seed,
        "tolerances": tol,
    });
    if let (Value::Object(base), Value::Object(more)) = (&mut cfg, extra) {
        base.extend(more);
    }
    cfg
}

fn parse_group(s: &str) -> Result<GroupSpec> {
    Ok(s.parse::<GroupSpec>()?)
}

fn positive_count(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(CliError::Usage(format!("--{name} must be at least 1")));
    }
    Ok(())
}

fn path_str(p: &Option<impl AsRef<Path>>) -> Value {
    p.as_ref().map_or(Value::Null, |p| json!(p.as_ref().display().to_string()))
}

fn write_artifacts(points: &[C64], hull: &[C64], out: &Option<impl AsRef<Path>>, svg: &Option<impl AsRef<Path>>) -> Result<()> {
    if let Some(p) = out {
        write_points_csv(points, p)?;
    }
    if let Some(p) = svg {
        write_svg(p, points, hull)?;
    }
    Ok(())
}

fn cloud_summary(points: &[C64], hull: &[C64], grid: &OccupancyGrid) -> Result<Value> {
    let disc = disc_diagnostic_points(points, grid.resolution)?;
    Ok(json!({
        "count": points.len(),
        "min_modulus": grid.min_modulus,
        "max_modulus": grid.max_modulus,
        "hull_vertices": hull.len(),
        "hull_area": polygon_area(hull),
        "occupied_area": grid.occupied_area(),
        "disc": disc,
    }))
}

fn cmd_range(args: &RangeArgs) -> Result<Report> {
    let tol = tolerances(&args.common)?;
    positive_count("samples", args.samples)?;
    positive_count("grid", args.grid)?;
    let spec = parse_group(&args.group)?;
    let c = read_matrix(&args.c)?;
    let a = read_matrix(&args.a)?;
    let cloud = sample_range(&c, &a, &spec, args.samples, args.common.seed)?;
    let hull = convex_hull(&cloud.points);
    write_artifacts(&cloud.points, &hull, &args.out, &args.svg)?;
    let grid = OccupancyGrid::new(&cloud.points, args.grid)?;
    let cfg = config(
        "range",
        &args.common,
        &tol,
        json!({
            "group": spec.to_string(),
            "samples": args.samples,
            "grid": args.grid,
            "c_hash": cloud.c_hash,
            "a_hash": cloud.a_hash,
            "out": path_str(&args.out),
            "svg": path_str(&args.svg),
        }),
    );
    Ok(Report {
        json: json!({
            "config": cfg,
            "exact": { "cauchy_schwarz_bound": c.frobenius_norm() * a.frobenius_norm() },
            "estimates": cloud_summary(&cloud.points, &hull, &grid)?,
        }),
        positive: true,
    })
}

fn cmd_radius(args: &RadiusArgs) -> Result<Report> {
    let tol = tolerances(&args.common)?;
    positive_count("restarts", args.restarts)?;
    let spec = parse_group(&args.group)?;
    let c = read_matrix(&args.c)?;
    let a = read_matrix(&args.a)?;
    let r = radius(&c, &a, &spec, args.restarts, args.common.seed)?;
    let mut exact = json!({ "cauchy_schwarz_bound": c.frobenius_norm() * a.frobenius_norm() });
    if matches!(spec, GroupSpec::FullUnitary(_)) {
        if let Ok((lo, hi)) = hermitian_interval(&c, &a) {
            exact["hermitian_interval"] = json!([lo, hi]);
            exact["hermitian_radius"] = json!(lo.abs().max(hi.abs()));
        }
    }
    let cfg = config(
        "radius",
        &args.common,
        &tol,
        json!({ "group": spec.to_string(), "restarts": args.restarts }),
    );
    Ok(Report {
        json: json!({ "config": cfg, "exact": exact, "estimates": r }),
        positive: true,
    })
}

fn infer_qubits(dim: usize) -> Result<usize> {
    if dim >= 2 && dim.is_power_of_two() {
        Ok(dim.trailing_zeros() as usize)
    } else {
        Err(CliError::Usage(format!("dimension {dim} is not a power of two; pass --n")))
    }
}

fn blockshift_json(a: &ComplexMatrix) -> Result<Value> {
    Ok(match blockshift_canonical(a)? {
        BlockShift::Found(f) => json!({
            "found": true,
            "partition": f.partition.sizes(),
            "u": f.u,
            "off_shift_mass": f.off_shift_mass,
        }),
        BlockShift::Refuted(cert) => json!({ "found": false, "residual": cert.residual }),
    })
}

fn cmd_symmetry(args: &SymmetryArgs) -> Result<Report> {
    let tol = tolerances(&args.common)?;
    let spec = match (&args.group, args.mode) {
        (Some(g), _) => Some(parse_group(g)?),
        (None, SymmetryMode::Detect) => return Err(CliError::Usage("--group is required for detect".into())),
        (None, _) => None,
    };
    let a = read_matrix(&args.a)?;
    let mode = format!("{:?}", args.mode).to_lowercase();
    let mut cfg = config(
        "symmetry",
        &args.common,
        &tol,
        json!({ "mode": mode, "group": spec.as_ref().map(|s| s.to_string()) }),
    );
    let (body, positive) = match args.mode {
        SymmetryMode::Detect => {
            let spec = spec.expect("checked above");
            let cert = detect_weak_symmetry_with(&a, &spec, &tol)?;
            let verdict = cert.verdict;
            let mut body = json!({
                "decision": { "weakly_symmetric": verdict },
                "estimates": {
                    "residual": cert.residual,
                    "witness_error": cert.witness_error(&a),
                    "phi": cert.phi,
                    "omega": cert.omega,
                },
            });
            if verdict {
                body["blockshift"] = blockshift_json(&a)?;
            }
            (body, verdict)
        }
        SymmetryMode::Tloc => {
            let n = match args.n {
                Some(n) => n,
                None => infer_qubits(a.dim())?,
            };
            cfg["n"] = json!(n);
            let cert = tloc_feasibility(&a, n)?;
            let feasible = cert.feasible();
            let mu = cert.mu.as_ref().filter(|_| feasible);
            let lambdas = mu.and_then(|m| local_torus_coordinates(m, n));
            let strs = |v: &[crange_core::local::rational::Q]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
            let body = json!({
                "decision": { "feasible": feasible },
                "exact": {
                    "mu": mu.map(|m| strs(m)),
                    "lambda": lambdas.as_ref().map(|l| strs(l)),
                    "phi": feasible.then_some("1"),
                },
                "estimates": { "residual": cert.certificate.residual },
            });
            (body, feasible)
        }
        SymmetryMode::Blockshift => {
            let b = blockshift_json(&a)?;
            let found = b["found"] == json!(true);
            (json!({ "decision": { "block_shift": found }, "blockshift": b }), found)
        }
    };
    let mut out = json!({ "config": cfg });
    if let (Value::Object(o), Value::Object(b)) = (&mut out, body) {
        o.extend(b);
    }
    Ok(Report { json: out, positive })
}

fn cmd_classify(args: &ClassifyArgs) -> Result<Report> {
    let tol = tolerances(&args.common)?;
    positive_count("restarts", args.restarts)?;
    let a = read_matrix(&args.a)?;
    let result = classify_4x4(&a, args.restarts, args.common.seed)?;
    let found = matches!(result, Classification::Found(_));
    let cfg = config("local classify", &args.common, &tol, json!({ "restarts": args.restarts }));
    let summary = match &result {
        Classification::Found(r) => json!({ "found": true, "label": r.label.to_string() }),
        Classification::NotFound { best_label, .. } => {
            json!({ "found": false, "best_label": best_label.to_string(), "refutation": "restart budget exhausted" })
        }
    };
    Ok(Report {
        json: json!({ "config": cfg, "decision": summary, "estimates": result }),
        positive: found,
    })
}

fn witness_row(name: Value, outcome: &ConjectureOutcome) -> Result<Value> {
    Ok(match outcome {
        ConjectureOutcome::Witness {
            p,
            partition,
            block_order,
            in_loc,
        } => {
            let sp = SignedPerm::from_matrix(p)?;
            json!({
                "case": name,
                "witness": true,
                "in_loc": in_loc,
                "perm": sp.perm,
                "sign": sp.sign,
                "partition": partition.sizes(),
                "block_order": block_order,
            })
        }
        ConjectureOutcome::Counterexample { support, searched } => json!({
            "case": name,
            "witness": false,
            "support": support,
            "searched": searched,
        }),
    })
}

fn cmd_conjecture(args: &ConjectureArgs) -> Result<Report> {
    let tol = tolerances(&args.common)?;
    let seed = args.common.seed;
    let mut rows = Vec::new();
    match args.n {
        2 => {
            for (k, label) in CaseLabel::all().into_iter().enumerate() {
                let mut rng = rng_from_seed(derive_seed(seed, k as u64));
                let entries: Vec<C64> = (0..4)
                    .map(|_| loop {
                        let z = complex_normal(&mut rng);
                        if z.norm() > 1e-3 {
                            break z;
                        }
                    })
                    .collect();
                let a = label.instantiate(&entries);
                rows.push(witness_row(json!(label.to_string()), &conjecture_check(&a, 2)?)?);
            }
        }
        3 => {
            positive_count("trials", args.trials)?;
            let mut rng = rng_from_seed(seed);
            for t in 0..args.trials {
                let (a, phi) = random_etloc_element(3, &mut rng);
                let mut row = witness_row(json!(t), &conjecture_check(&a, 3)?)?;
                row["phi"] = json!(phi.to_string());
                rows.push(row);
            }
        }
        n => return Err(CliError::Usage(format!("--n {n} is not supported; use 2 or 3"))),
    }
    let found = rows.iter().filter(|r| r["witness"] == json!(true)).count();
    let needs_swap = rows
        .iter()
        .filter(|r| r["witness"] == json!(true) && r["in_loc"] == json!(false))
        .filter_map(|r| r["case"].as_str().map(str::to_owned).or_else(|| r["case"].as_u64().map(|t| t.to_string())))
        .collect::<Vec<_>>();
    if let Some(p) = &args.out {
        std::fs::write(p, serde_json::to_string_pretty(&rows).expect("serializable rows") + "\n")
            .map_err(Error::from)?;
    }
    let cfg = config(
        "local conjecture",
        &args.common,
        &tol,
        json!({ "n": args.n, "trials": if args.n == 3 { json!(args.trials) } else { Value::Null }, "out": path_str(&args.out) }),
    );
    let counterexamples: Vec<&Value> = rows.iter().filter(|r| r["witness"] == json!(false)).collect();
    Ok(Report {
        json: json!({
            "config": cfg,
            "exact": {
                "cases": rows.len(),
                "witnesses": found,
                "summary": format!("{found}/{} witnesses found", rows.len()),
                "witness_needs_factor_swap": needs_swap,
                "counterexamples": counterexamples,
            },
        }),
        positive: found == rows.len(),
    })
}

fn default_samples(index: u8) -> usize {
    match index {
        1 => 10_000,
        2 => 50_000,
        3 => 100_000,
        _ => 20_000,
    }
}

fn cmd_example(args: &ExampleArgs) -> Result<Report> {
    let tol = tolerances(&args.common)?;
    positive_count("grid", args.grid)?;
    positive_count("restarts", args.restarts)?;
    let samples = args.samples.unwrap_or_else(|| default_samples(args.index));
    positive_count("samples", samples)?;
    let ex = catalog::example(args.index)?;
    let seed = args.common.seed;
    let cloud = sample_range(&ex.c, &ex.a, &ex.group, samples, seed)?;
    let pts = &cloud.points;
    let mut hull_input = pts.clone();
    if args.index == 3 {
        // sampling rarely reaches the corners; directional ascent does
        hull_input.extend(support_points(&ex.c, &ex.a, &ex.group, 96, 4, seed)?);
    }
    let hull = convex_hull(&hull_input);
    write_artifacts(pts, &hull, &args.out, &args.svg)?;
    let grid = OccupancyGrid::new(pts, args.grid)?;
    let mut exact = json!({});
    let mut checks = json!({});
    match args.index {
        1 => {
            checks["max_circle_deviation"] = json!(pts.iter().map(|z| (z.norm() - 1.0).abs()).fold(0.0, f64::max));
        }
        2 => {
            let in_butterfly = |z: &C64| z.re >= -1.0 && z.re <= 1.0 && z.im.abs() <= z.re.abs() + 1e-9;
            checks["butterfly_violations"] = json!(pts.iter().filter(|z| !in_butterfly(z)).count());
            checks["butterfly_occupancy"] =
                json!(grid.region_occupancy(|z| z.re.abs() <= 1.0 && z.im.abs() <= z.re.abs()));
            checks["star_shaped_at_origin"] = json!(star_shaped_test(&grid, C64::new(0.0, 0.0))?);
            checks["hull_to_occupied_area"] = json!(polygon_area(&hull) / grid.occupied_area());
        }
        3 => {
            let corner = (0..3)
                .map(|k| {
                    let w = C64::from_polar(1.0, TAU * k as f64 / 3.0);
                    hull.iter().map(|v| (v - w).norm()).fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max);
            checks["corner_distance"] = json!(corner);
            checks["star_center"] = json!(find_star_center(&grid, seed));
            exact["min_modulus_bound"] = json!(0.125);
        }
        4 => {
            let loc = detect_weak_symmetry_with(&ex.a, &ex.group, &tol)?;
            let full = detect_weak_symmetry_with(&ex.a, &"u(4)".parse()?, &tol)?;
            checks["loc2_weakly_symmetric"] = json!(loc.verdict);
            checks["u4_weakly_symmetric"] = json!(full.verdict);
            checks["blockshift"] = blockshift_json(&ex.a)?;
            checks["classification"] = json!(classify_4x4(&ex.a, args.restarts, seed)?);
            exact["tloc_feasible"] = json!(tloc_feasibility(&ex.a, 2)?.feasible());
        }
        5 => {
            let omega0 = quarter_turn_generator();
            let u0 = expm_skew(&omega0, 1.0)?;
            let flip = (u0.conjugate(&ex.a) + &ex.a).frobenius_norm();
            let miss = (commutator(&omega0, &ex.a)? + ex.a.scale(I * PI)).frobenius_norm();
            checks["conjugation_negates"] = json!(flip);
            checks["eigenvector_miss_ratio"] = json!(miss / ex.a.frobenius_norm());
            checks["u2_weakly_symmetric"] = json!(detect_weak_symmetry_with(&ex.a, &ex.group, &tol)?.verdict);
        }
        _ => unreachable!("index range checked by the parser"),
    }
    let cfg = config(
        "example",
        &args.common,
        &tol,
        json!({
            "index": args.index,
            "summary": ex.summary,
            "group": ex.group.to_string(),
            "samples": samples,
            "grid": args.grid,
            "out": path_str(&args.out),
            "svg": path_str(&args.svg),
        }),
    );
    let mut estimates = cloud_summary(pts, &hull, &grid)?;
    if let (Value::Object(e), Value::Object(c)) = (&mut estimates, checks) {
        e.extend(c);
    }
    Ok(Report {
        json: json!({ "config": cfg, "exact": exact, "estimates": estimates }),
        positive: true,
    })
}
