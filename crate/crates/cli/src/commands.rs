use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use log::{debug, info};
use pbrp_core::calculus::{rough_integral, solve_rde, ConvergenceReport};
use pbrp_core::controlled::{compose_fx, compose_fy, lift_integral, ControlledPath};
use pbrp_core::forest::{base_alphabet, enumerate_forests_over};
use pbrp_core::function::{FunctionSpec, MapRef, VectorFieldFamily};
use pbrp_core::hopf::StarTable;
use pbrp_core::io::{read_coproduct, write_controlled, write_coproduct, write_rough_path, write_star};
use pbrp_core::ito::{verify_general_n2, verify_general_n3, verify_simple_n2, verify_simple_n3, ItoOptions, ItoReport, Theorem};
use pbrp_core::rough_path::{bracket_path, cbar_path_with, tilde_path, RoughPath};
use pbrp_core::stats::serialize_float;
use pbrp_core::{Letter, PlanarForest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::failure::Failure;
use crate::selftest;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    HopfSelftest,
    Lift,
    Integrate,
    Rde,
    Ito,
    Dump,
}

impl Command {
    pub fn id(self) -> &'static str {
        match self {
            Command::HopfSelftest => "hopf-selftest",
            Command::Lift => "lift",
            Command::Integrate => "integrate",
            Command::Rde => "rde",
            Command::Ito => "ito",
            Command::Dump => "dump",
        }
    }
}

/// Runs one experiment, writing into `dir`; `Ok(pass)`.
pub fn run(command: Command, cfg: &ExperimentConfig, dir: &Path) -> Result<bool, Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    info!("{}: {}", cfg.name, command.id());
    match command {
        Command::HopfSelftest => hopf_selftest(cfg, dir),
        Command::Lift => lift(cfg, dir),
        Command::Integrate => integrate(cfg, dir),
        Command::Rde => rde(cfg, dir),
        Command::Ito => ito(cfg, dir),
        Command::Dump => dump(cfg, dir),
    }
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, Failure> {
    let p = dir.join(name);
    File::create(&p)
        .map(BufWriter::new)
        .map_err(|e| Failure::Io(format!("{}: {e}", p.display())))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Failure> {
    let mut w = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn build_rough(cfg: &ExperimentConfig) -> Result<Arc<RoughPath<f64>>, Failure> {
    let grid = cfg.grid()?;
    let spec = cfg.driver_spec(&grid)?;
    let x = RoughPath::lift(&spec, cfg.depth, &grid, cfg.grid.substeps)?.with_alpha(cfg.alpha());
    debug!("{}: lifted {} cells, basis {}", cfg.name, x.cells(), x.algebra().dim());
    Ok(Arc::new(x))
}

fn fields(cfg: &ExperimentConfig) -> Result<(VectorFieldFamily<f64>, Vec<f64>), Failure> {
    let (Some(specs), Some(xi)) = (&cfg.fields, &cfg.xi) else {
        return Err(Failure::Config(format!("{}: `fields` and `xi` are required", cfg.name)));
    };
    Ok((VectorFieldFamily::from_specs(specs, xi.len())?, xi.clone()))
}

fn function(cfg: &ExperimentConfig, dim: usize) -> Result<MapRef<f64>, Failure> {
    let spec = cfg
        .function
        .as_ref()
        .ok_or_else(|| Failure::Config(format!("{}: `function` is required", cfg.name)))?;
    Ok(spec.build(dim)?)
}

fn hopf_selftest(cfg: &ExperimentConfig, dir: &Path) -> Result<bool, Failure> {
    let d = cfg.d();
    let (table, source) = match &cfg.coproduct_table {
        Some(p) => {
            let f = File::open(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
            (read_coproduct(f)?, p.display().to_string())
        }
        None => (selftest::builtin_table(d, cfg.depth)?, "built-in".to_string()),
    };
    let summary = selftest::run(&table, d, cfg.depth, &source)?;
    write_json(dir, "hopf_selftest.json", &summary)?;
    if let Some(m) = &summary.first_failure {
        let mut w = csv::Writer::from_writer(create(dir, "hopf_selftest_failure.csv")?);
        w.write_record(selftest::FAILURE_HEADER).map_err(|e| Failure::Io(e.to_string()))?;
        w.write_record([&m.identity, &m.subject, &m.left, &m.right, &m.expected.to_string(), &m.actual.to_string()])
            .map_err(|e| Failure::Io(e.to_string()))?;
        w.flush()?;
    }
    Ok(summary.pass)
}

#[derive(Serialize)]
struct SlopeEntry {
    forest: String,
    #[serde(serialize_with = "serialize_float")]
    slope: f64,
    exponent: f64,
}

#[derive(Serialize)]
struct ExtensionSummary {
    restriction_max: f64,
    bracket_additivity_max: f64,
    tilde_additivity_max: Option<f64>,
    cbar_additivity_max: Option<f64>,
}

#[derive(Serialize)]
struct LiftSummary {
    name: String,
    d: usize,
    depth: usize,
    alpha: f64,
    cells: usize,
    basis: usize,
    probes: usize,
    seed: u64,
    chen_max: f64,
    character_max: f64,
    holder: Vec<SlopeEntry>,
    extension: ExtensionSummary,
    tolerance: f64,
    pass: bool,
}

fn ordered_triple(rng: &mut ChaCha8Rng, cells: usize) -> (usize, usize, usize) {
    let mut v = [rng.random_range(0..=cells), rng.random_range(0..=cells), rng.random_range(0..=cells)];
    v.sort_unstable();
    (v[0], v[1], v[2])
}

fn lift(cfg: &ExperimentConfig, dir: &Path) -> Result<bool, Failure> {
    let x = build_rough(cfg)?;
    let cells = x.cells();
    let depth = cfg.depth;
    let forests: Vec<PlanarForest> = enumerate_forests_over(x.alphabet(), depth)?
        .into_iter()
        .filter(|f| !f.is_empty())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut chen_max = 0.0f64;
    for _ in 0..cfg.probes {
        let (a, u, b) = ordered_triple(&mut rng, cells);
        let f = &forests[rng.random_range(0..forests.len())];
        chen_max = chen_max.max(x.chen_residual(a, u, b, f)?);
    }
    let mut character_max = 0.0f64;
    for _ in 0..cfg.probes {
        let (a, _, b) = ordered_triple(&mut rng, cells);
        let s = &forests[rng.random_range(0..forests.len())];
        let fitting: Vec<&PlanarForest> = forests.iter().filter(|t| t.degree() + s.degree() <= depth).collect();
        if fitting.is_empty() {
            continue;
        }
        let t = fitting[rng.random_range(0..fitting.len())];
        character_max = character_max.max(x.character_residual(a, b, s, t)?);
    }

    let mut holder = Vec::new();
    for f in &forests {
        holder.push(SlopeEntry {
            forest: f.key(),
            slope: x.holder_slope(f, &cfg.scales)?,
            exponent: f.degree() as f64 * cfg.alpha(),
        });
    }

    let xhat = Arc::new(x.bracket_extension()?);
    let base = base_alphabet(cfg.d());
    let labels: Vec<u16> = (1..=cfg.d() as u16).collect();
    let pick = |rng: &mut ChaCha8Rng| labels[rng.random_range(0..labels.len())];
    let mut restriction_max = 0.0f64;
    let base_forests: Vec<PlanarForest> = enumerate_forests_over(&base, depth)?;
    for _ in 0..cfg.probes {
        let (a, _, b) = ordered_triple(&mut rng, cells);
        let gx = x.eval_char(a, b)?;
        let gh = xhat.eval_char(a, b)?;
        for f in &base_forests {
            let i = x.algebra().require(f)?;
            let j = xhat.algebra().require(f)?;
            restriction_max = restriction_max.max((gx[i] - gh[j]).abs());
        }
    }
    let mut bracket_max = 0.0f64;
    let mut tilde_max = (depth >= 3).then_some(0.0f64);
    let mut cbar_max = (depth >= 3).then_some(0.0f64);
    for _ in 0..cfg.probes {
        let (a, u, b) = ordered_triple(&mut rng, cells);
        let (i, j, k) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        bracket_max = bracket_max.max(bracket_path(&xhat, i, j)?.additivity_defect(a, u, b)?);
        if let Some(m) = tilde_max.as_mut() {
            *m = m.max(tilde_path(&xhat, i, j, k)?.additivity_defect(a, u, b)?);
        }
        if let Some(m) = cbar_max.as_mut() {
            *m = m.max(cbar_path_with(&xhat, i, j, k, cfg.cbar)?.additivity_defect(a, u, b)?);
        }
    }

    let tol = cfg.tolerances.axioms;
    let extension = ExtensionSummary {
        restriction_max,
        bracket_additivity_max: bracket_max,
        tilde_additivity_max: tilde_max,
        cbar_additivity_max: cbar_max,
    };
    let ext_ok = [Some(restriction_max), Some(bracket_max), tilde_max, cbar_max]
        .into_iter()
        .flatten()
        .all(|v| v < tol);
    let pass = chen_max < tol && character_max < tol && ext_ok;
    let summary = LiftSummary {
        name: cfg.name.clone(),
        d: cfg.d(),
        depth,
        alpha: cfg.alpha(),
        cells,
        basis: x.algebra().dim(),
        probes: cfg.probes,
        seed: cfg.seed,
        chen_max,
        character_max,
        holder,
        extension,
        tolerance: tol,
        pass,
    };
    write_json(dir, "lift.json", &summary)?;
    if cfg.dump.rough_path {
        let mut w = create(dir, "rough_path.csv")?;
        write_rough_path(&*x, &mut w)?;
        w.flush()?;
    }
    Ok(pass)
}

#[derive(Serialize)]
struct RateEntry {
    path: String,
    forest: String,
    #[serde(serialize_with = "serialize_float")]
    rate: f64,
    required: f64,
    pass: bool,
}

fn remainder_rates(label: &str, y: &ControlledPath<f64>, cfg: &ExperimentConfig, out: &mut Vec<RateEntry>) -> Result<(), Failure> {
    let n = y.depth() as f64;
    for f in y.forests().forests() {
        let rate = y.remainder_rate(f, &cfg.scales)?;
        let required = (n - f.degree() as f64) * cfg.alpha() - cfg.tolerances.rate_slack;
        out.push(RateEntry {
            path: label.into(),
            forest: f.key(),
            rate,
            required,
            pass: rate >= required,
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct IntegralEntry {
    letter: String,
    value: Vec<f64>,
    report: ConvergenceReport,
}

#[derive(Serialize)]
struct IntegrateSummary {
    name: String,
    interval: [f64; 2],
    integrand: String,
    integrals: Vec<IntegralEntry>,
    remainders: Vec<RateEntry>,
    pass: bool,
}

fn letters(cfg: &ExperimentConfig) -> Vec<Letter> {
    match &cfg.letters {
        Some(ls) => ls.iter().map(|&l| Letter::Base(l)).collect(),
        None => base_alphabet(cfg.d()),
    }
}

fn integrate(cfg: &ExperimentConfig, dir: &Path) -> Result<bool, Failure> {
    let x = build_rough(cfg)?;
    let (a, b) = cfg.interval_nodes()?;
    let spec = cfg.function.clone().unwrap_or_else(|| FunctionSpec::builtin("identity", &[]));
    let f = spec.build(cfg.d())?;
    let y = compose_fx(&x, &f)?;
    let mut integrals = Vec::new();
    for l in letters(cfg) {
        let (value, report) = rough_integral(&y, &x, l, a, b, &cfg.strides)?;
        integrals.push(IntegralEntry {
            letter: l.to_string(),
            value,
            report,
        });
    }
    let mut remainders = Vec::new();
    remainder_rates("F(X)", &y, cfg, &mut remainders)?;
    for l in letters(cfg) {
        remainder_rates(&format!("int F(X) dX^{l}"), &lift_integral(&y, l)?, cfg, &mut remainders)?;
    }
    let pass = integrals.iter().all(|i| i.report.pass) && remainders.iter().all(|r| r.pass);
    let grid = x.grid();
    let summary = IntegrateSummary {
        name: cfg.name.clone(),
        interval: [grid.time(a), grid.time(b)],
        integrand: serde_json::to_string(&spec)?,
        integrals,
        remainders,
        pass,
    };
    write_json(dir, "integrate.json", &summary)?;
    Ok(pass)
}

#[derive(Serialize)]
struct RdeSummary {
    name: String,
    cells: usize,
    xi: Vec<f64>,
    terminal: Vec<f64>,
    max_norm: f64,
    remainders: Vec<RateEntry>,
    pass: bool,
}

fn rde(cfg: &ExperimentConfig, dir: &Path) -> Result<bool, Failure> {
    let x = build_rough(cfg)?;
    let (fam, xi) = fields(cfg)?;
    let y = solve_rde(&x, &fam, &xi, cfg.divergence_bound)?;
    let mut remainders = Vec::new();
    remainder_rates("Y", &y, cfg, &mut remainders)?;
    if cfg.function.is_some() {
        let fy = compose_fy(&y, &function(cfg, xi.len())?)?;
        remainder_rates("F(Y)", &fy, cfg, &mut remainders)?;
    }
    for l in letters(cfg) {
        remainder_rates(&format!("int Y dX^{l}"), &lift_integral(&y, l)?, cfg, &mut remainders)?;
    }
    let max_norm = (0..y.nodes())
        .map(|k| y.value(k).iter().map(|c| c * c).sum::<f64>().sqrt())
        .fold(0.0f64, f64::max);
    let pass = remainders.iter().all(|r| r.pass);
    let summary = RdeSummary {
        name: cfg.name.clone(),
        cells: x.cells(),
        xi,
        terminal: y.value(y.nodes() - 1).to_vec(),
        max_norm,
        remainders,
        pass,
    };
    write_json(dir, "rde.json", &summary)?;
    if cfg.dump.controlled {
        let mut w = create(dir, "rde_solution.csv")?;
        write_controlled(&y, &mut w)?;
        w.flush()?;
    }
    Ok(pass)
}

fn options(cfg: &ExperimentConfig) -> ItoOptions {
    let mut o = ItoOptions::new(cfg.depth, cfg.strides.clone());
    o.alpha = cfg.alpha();
    o.tolerance = cfg.tolerances.residual;
    o.slack = cfg.tolerances.slack;
    o.cbar = cfg.cbar;
    o
}

pub const CONVERGENCE_HEADER: [&str; 3] = ["mesh", "residual", "order"];

fn write_table(dir: &Path, name: &str, report: &ItoReport) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(create(dir, name)?);
    let io = |e: csv::Error| Failure::Io(e.to_string());
    w.write_record(CONVERGENCE_HEADER).map_err(io)?;
    for (mesh, residual, order) in report.table() {
        let order = if order.is_finite() {
            order.to_string()
        } else if order.is_nan() {
            String::new()
        } else {
            "+inf".to_string()
        };
        w.write_record([mesh.to_string(), residual.to_string(), order]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ItoSummaryEntry {
    theorem: Theorem,
    finest_residual: f64,
    #[serde(serialize_with = "serialize_float")]
    order: f64,
    threshold: f64,
    verdict: bool,
}

fn ito(cfg: &ExperimentConfig, dir: &Path) -> Result<bool, Failure> {
    let x = build_rough(cfg)?;
    let xhat = Arc::new(x.bracket_extension()?);
    let (a, b) = cfg.interval_nodes()?;
    let opts = options(cfg);
    let mut entries = Vec::new();
    for &t in &cfg.theorems {
        let report = if t.is_general() {
            let (fam, xi) = fields(cfg)?;
            let f = function(cfg, xi.len())?;
            match t {
                Theorem::GeneralN2 => verify_general_n2(&x, &xhat, &fam, &f, &xi, cfg.divergence_bound, a, b, &opts)?,
                _ => verify_general_n3(&x, &xhat, &fam, &f, &xi, cfg.divergence_bound, a, b, &opts)?,
            }
        } else {
            let f = function(cfg, cfg.d())?;
            match t {
                Theorem::SimpleN2 => verify_simple_n2(&x, &xhat, &f, a, b, &opts)?,
                _ => verify_simple_n3(&x, &xhat, &f, a, b, &opts)?,
            }
        };
        info!("{}: {t} residual {:e} order {} verdict {}", cfg.name, report.finest_residual(), report.order, report.verdict);
        write_json(dir, &format!("ito_{t}.json"), &report)?;
        write_table(dir, &format!("ito_{t}.csv"), &report)?;
        entries.push(ItoSummaryEntry {
            theorem: t,
            finest_residual: report.finest_residual(),
            order: report.order,
            threshold: report.threshold,
            verdict: report.verdict,
        });
    }
    let pass = entries.iter().all(|e| e.verdict);
    write_json(dir, "ito.json", &entries)?;
    Ok(pass)
}

#[derive(Serialize)]
struct DumpEntry {
    file: String,
    rows: usize,
}

#[derive(Serialize)]
struct DumpSummary {
    format_version: u32,
    files: Vec<DumpEntry>,
}

fn dump(cfg: &ExperimentConfig, dir: &Path) -> Result<bool, Failure> {
    let base = base_alphabet(cfg.d());
    let mut files = Vec::new();
    if cfg.dump.coproduct {
        let mut w = create(dir, "coproduct.csv")?;
        let rows = write_coproduct(&base, cfg.depth, &mut w)?;
        w.flush()?;
        files.push(DumpEntry {
            file: "coproduct.csv".into(),
            rows,
        });
    }
    if cfg.dump.star {
        let table = StarTable::<i64>::new(&base, cfg.depth)?;
        let mut w = create(dir, "star.csv")?;
        let rows = write_star(&table, &mut w)?;
        w.flush()?;
        files.push(DumpEntry { file: "star.csv".into(), rows });
    }
    if cfg.driver.is_some() && (cfg.dump.rough_path || cfg.dump.controlled) {
        let x = build_rough(cfg)?;
        if cfg.dump.rough_path {
            let mut w = create(dir, "rough_path.csv")?;
            write_rough_path(&*x, &mut w)?;
            w.flush()?;
            files.push(DumpEntry {
                file: "rough_path.csv".into(),
                rows: x.cells() * x.algebra().dim(),
            });
        }
        if cfg.dump.controlled {
            let y = if cfg.fields.is_some() && cfg.xi.is_some() {
                let (fam, xi) = fields(cfg)?;
                Some(solve_rde(&x, &fam, &xi, cfg.divergence_bound)?)
            } else if cfg.function.is_some() {
                Some(compose_fx(&x, &function(cfg, cfg.d())?)?)
            } else {
                None
            };
            if let Some(y) = y {
                let mut w = create(dir, "controlled.csv")?;
                write_controlled(&y, &mut w)?;
                w.flush()?;
                files.push(DumpEntry {
                    file: "controlled.csv".into(),
                    rows: y.nodes() * y.forests().len() * y.dim(),
                });
            }
        }
    }
    let summary = DumpSummary {
        format_version: pbrp_core::io::CSV_FORMAT_VERSION,
        files,
    };
    write_json(dir, "dump.json", &summary)?;
    Ok(true)
}
