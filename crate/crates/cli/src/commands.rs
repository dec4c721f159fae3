use crate::config::{pick, pick_opt, ConfigFile};
use crate::{Cli, Command, GridArgs, WeightArgs};
use carleman_core::factorizer::{
    scaled_gaussians, translated_gaussians, FactorizationKit, FamilyNormOptions, HPolicy, KitOptions,
};
use carleman_core::grid::{Grid, GridFunction};
use carleman_core::multiplier::{EntireMultiplier, TubeGrid};
use carleman_core::regularize::{seeded_pairs, verify_almost_lipschitz, RegularizedWeight};
use carleman_core::weights::{
    check_m2, check_m2star, check_nontriviality, check_nu_doubling, log_grid, ls_slope, WeightSequence,
};
use carleman_core::{Error, Warning};
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;
const DEFAULT_PMAX: usize = 400;
const DEFAULT_SEED: u64 = 0;

pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Calibration(_) => 3,
            Error::Overflow { .. } | Error::Range { .. } | Error::NearOrthogonal(_) => 4,
            _ => 2,
        };
        let message = match &e {
            Error::Overflow { suggested_h: Some(h), .. } => format!("{e}; try --h {h}"),
            _ => e.to_string(),
        };
        Self { code, message }
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Self::input(s)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

type Res<T> = std::result::Result<T, Failure>;

pub fn run(cli: Cli) -> Res<()> {
    let cfg = match &cli.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let seed = pick(cli.seed, &cfg, "seed", DEFAULT_SEED)?;
    match cli.command {
        Command::Nu { weight, tmin, tmax, points, regularized, fit_slope, out, report } => {
            let m = load_weight(&weight, &cfg)?;
            let tmin = pick(tmin, &cfg, "tmin", 1e-2)?;
            let tmax = pick(tmax, &cfg, "tmax", 1e6)?;
            let points = pick(points, &cfg, "points", 200usize)?;
            let out = pick_opt(out, &cfg, "out")?;
            let report = pick_opt(report, &cfg, "report")?;
            cmd_nu(&m, tmin, tmax, points, regularized, fit_slope, out.as_deref(), report.as_deref())
        }
        Command::Check { weight, range, out } => {
            let m = load_weight(&weight, &cfg)?;
            let range = pick(range, &cfg, "range", 200usize)?;
            let out = pick_opt(out, &cfg, "out")?;
            cmd_check(&m, range, out.as_deref())
        }
        Command::Regularize { weight, pairs, out, report } => {
            let m = load_weight(&weight, &cfg)?;
            let pairs = pick(pairs, &cfg, "pairs", 1000usize)?;
            let out = pick_opt(out, &cfg, "out")?;
            let report = pick_opt(report, &cfg, "report")?;
            cmd_regularize(&m, pairs, seed, out.as_deref(), report.as_deref())
        }
        Command::Multiplier { weight, tube, re_max, step, out, report } => {
            let m = load_weight(&weight, &cfg)?;
            let tubes = if tube.is_empty() { cfg.get_list("tube")?.unwrap_or_else(|| vec![0.0, 1.0]) } else { tube };
            let re_max = pick(re_max, &cfg, "re_max", 50.0)?;
            let step = pick(step, &cfg, "step", 0.25)?;
            let out = pick_opt(out, &cfg, "out")?;
            let report = pick_opt(report, &cfg, "report")?;
            cmd_multiplier(&m, &tubes, re_max, step, out.as_deref(), report.as_deref())
        }
        Command::Factorize { weight, grid, h, input, builtin, out, psi_out, report } => {
            let m = load_weight(&weight, &cfg)?;
            let h = parse_h(&pick(h, &cfg, "h", "auto".to_string())?)?;
            let inputs = if input.is_empty() { cfg.get_list::<PathBuf>("input")?.unwrap_or_default() } else { input };
            let builtin = pick_opt(builtin, &cfg, "builtin")?;
            let out = pick_opt(out, &cfg, "out")?;
            let psi_out = pick_opt(psi_out, &cfg, "psi_out")?;
            let report = pick_opt(report, &cfg, "report")?;
            let family = load_family(&inputs, builtin.as_deref(), &grid, &cfg)?;
            cmd_factorize(&m, h, &family, out.as_deref(), psi_out.as_deref(), report.as_deref())
        }
    }
}

fn load_weight(w: &WeightArgs, cfg: &ConfigFile) -> Res<WeightSequence> {
    let pmax = pick(w.pmax, cfg, "pmax", DEFAULT_PMAX)?;
    let table: Option<PathBuf> = pick_opt(w.table.clone(), cfg, "table")?;
    let preset: Option<String> = pick_opt(w.preset.clone(), cfg, "preset")?;
    let m = match (table, preset) {
        (Some(path), _) => WeightSequence::load_table(&path)?,
        (None, Some(p)) => WeightSequence::preset(&p, pmax)?,
        (None, None) => return Err(Failure::input("one of --preset or --table is required")),
    };
    Ok(m)
}

fn parse_h(s: &str) -> Res<HPolicy> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(HPolicy::Auto);
    }
    match s.parse::<f64>() {
        Ok(h) if h > 0.0 && h.is_finite() => Ok(HPolicy::Fixed(h)),
        _ => Err(Failure::input(format!("--h must be 'auto' or a positive number, got {s:?}"))),
    }
}

fn load_family(inputs: &[PathBuf], builtin: Option<&str>, g: &GridArgs, cfg: &ConfigFile) -> Res<Vec<GridFunction>> {
    if !inputs.is_empty() {
        let fs = inputs.iter().map(GridFunction::read_csv).collect::<Result<Vec<_>, _>>()?;
        if fs.iter().any(|f| f.grid() != fs[0].grid()) {
            return Err(Failure::input("all inputs must share one grid"));
        }
        return Ok(fs);
    }
    let grid = Grid::new(
        pick(g.grid_l, cfg, "grid_l", carleman_core::grid::DEFAULT_HALF_WIDTH)?,
        pick(g.grid_n, cfg, "grid_n", carleman_core::grid::DEFAULT_POINTS)?,
    )?;
    match builtin.unwrap_or("gaussian") {
        "gaussian" => Ok(vec![GridFunction::from_real_fn(grid, |x| (-PI * x * x).exp())]),
        "translates" => Ok(translated_gaussians(grid, &[-2.0, -1.0, 0.0, 1.0, 2.0])),
        "scaled" => Ok(scaled_gaussians(grid, &[1.0, 2.0, 4.0])),
        other => Err(Failure::input(format!("unknown builtin {other:?} (gaussian, translates, scaled)"))),
    }
}

fn write_json(path: Option<&Path>, v: &impl Serialize) -> Res<()> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Failure::input(e.to_string()))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => to_stdout(format!("{text}\n").as_bytes())?,
    }
    Ok(())
}

/// A closed pipe on stdout is not an error.
fn to_stdout(bytes: &[u8]) -> std::io::Result<()> {
    match std::io::stdout().lock().write_all(bytes) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => r,
    }
}

fn warn_all(ws: &[Warning]) {
    for w in ws {
        eprintln!("warning: {w}");
    }
}

fn stem_with(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

#[allow(clippy::too_many_arguments)]
fn cmd_nu(
    m: &WeightSequence,
    tmin: f64,
    tmax: f64,
    points: usize,
    regularized: bool,
    fit_slope: bool,
    out: Option<&Path>,
    report: Option<&Path>,
) -> Res<()> {
    if !(tmin > 0.0 && tmax > tmin) || points < 2 {
        return Err(Failure::input("need 0 < tmin < tmax and at least 2 points"));
    }
    let rw = if regularized { Some(RegularizedWeight::build(m)?) } else { None };
    let ts = log_grid(tmin, tmax, points);
    let mut warnings = Vec::new();
    let mut rows = Vec::with_capacity(ts.len());
    for &t in &ts {
        let v = m.nu_full(t);
        if let Some(w) = v.warning(t, m.p_max()) {
            warnings.push(w);
        }
        rows.push((t, v.value));
    }
    let mut buf: Vec<u8> = Vec::new();
    {
        let mut w = std::io::BufWriter::new(&mut buf);
        if rw.is_some() {
            writeln!(w, "t,nu_m,nu,eta")?;
        } else {
            writeln!(w, "t,nu_m")?;
        }
        for &(t, v) in &rows {
            match &rw {
                Some(r) => writeln!(w, "{t:e},{v:e},{:e},{:e}", r.nu(t), r.eta(t))?,
                None => writeln!(w, "{t:e},{v:e}")?,
            }
        }
    }
    match out {
        Some(p) => std::fs::write(p, &buf)?,
        None => to_stdout(&buf)?,
    }
    warnings.dedup_by(|a, b| std::mem::discriminant(a) == std::mem::discriminant(b));
    warn_all(&warnings);
    let slope = if fit_slope {
        let lo = tmin.max(tmax / 1e4);
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            rows.iter().filter(|(t, v)| *t >= lo && *v > 0.0).map(|(t, v)| (t.ln(), v.ln())).unzip();
        if xs.len() < 2 {
            return Err(Failure::input("not enough positive values to fit a slope"));
        }
        let s = ls_slope(&xs, &ys);
        eprintln!("fitted slope {s:.6} over t in [{lo:e}, {tmax:e}]");
        Some(s)
    } else {
        None
    };
    if let Some(p) = report {
        let v = json!({
            "schema_version": SCHEMA_VERSION,
            "tmin": tmin,
            "tmax": tmax,
            "points": points,
            "slope": slope,
            "warnings": warnings,
        });
        write_json(Some(p), &v)?;
    }
    Ok(())
}

fn cmd_check(m: &WeightSequence, range: usize, out: Option<&Path>) -> Res<()> {
    if range < 2 {
        return Err(Failure::input("--range must be at least 2"));
    }
    let grid = log_grid(1e-2, 1e4, 400);
    let v = json!({
        "schema_version": SCHEMA_VERSION,
        "p_max": m.p_max(),
        "range": range,
        "m2": check_m2(m, range),
        "m2star": check_m2star(m, range),
        "nu_doubling": check_nu_doubling(m, &grid),
        "nontriviality": check_nontriviality(m, range),
    });
    write_json(out, &v)
}

fn cmd_regularize(m: &WeightSequence, pairs: usize, seed: u64, out: Option<&Path>, report: Option<&Path>) -> Res<()> {
    let rw = RegularizedWeight::build(m)?;
    if let Some(p) = out {
        rw.write_csv(p)?;
    }
    let lip = verify_almost_lipschitz(&rw, &seeded_pairs(seed, pairs, 100.0));
    warn_all(rw.warnings());
    let v = json!({
        "schema_version": SCHEMA_VERSION,
        "seed": seed,
        "exponent": rw.exponent(),
        "choice": rw.choice(),
        "l_cmp": rw.l_cmp(),
        "monotone": rw.is_monotone(),
        "almost_lipschitz": lip,
        "warnings": rw.warnings(),
    });
    write_json(report, &v)
}

fn cmd_multiplier(
    m: &WeightSequence,
    tubes: &[f64],
    re_max: f64,
    step: f64,
    out: Option<&Path>,
    report: Option<&Path>,
) -> Res<()> {
    if tubes.iter().any(|t| !(*t >= 0.0)) || !(re_max > 0.0 && step > 0.0) {
        return Err(Failure::input("tube half-widths must be >= 0 and re-max, step positive"));
    }
    let rw = RegularizedWeight::build(m)?;
    let mut warnings: Vec<Warning> = rw.warnings().to_vec();
    let mut em = EntireMultiplier::build(rw)?;
    let mut tube_rows = Vec::new();
    for &n in tubes {
        let rep = em.verify_tube_bounds(&TubeGrid::new(n, re_max, step))?;
        if let Some(p) = out {
            let path = if tubes.len() > 1 { stem_with(p, &format!("n{n}")) } else { p.to_path_buf() };
            rep.write_csv(&path)?;
        }
        warnings.extend(rep.warnings.iter().cloned());
        tube_rows.push(json!({ "n": n, "c_n": rep.c_n, "log_c_n": rep.log_c_n, "nodes": rep.nodes.len() }));
    }
    warn_all(&warnings);
    let cal = em.calibration();
    let v: Value = json!({
        "schema_version": SCHEMA_VERSION,
        "exponent": em.weight().exponent(),
        "l": cal.l,
        "k": cal.k,
        "delta": em.delta(),
        "re_max": re_max,
        "step": step,
        "tubes": tube_rows,
        "warnings": warnings,
    });
    write_json(report, &v)
}

fn cmd_factorize(
    m: &WeightSequence,
    h: HPolicy,
    family: &[GridFunction],
    out: Option<&Path>,
    psi_out: Option<&Path>,
    report: Option<&Path>,
) -> Res<()> {
    let grid = *family[0].grid();
    let kit = FactorizationKit::build(m, KitOptions { grid, h })?;
    let (us, fam) = kit.factorize_bounded_family(family, &FamilyNormOptions::default())?;
    if let Some(p) = out {
        for (i, u) in us.iter().enumerate() {
            let path = if us.len() > 1 { stem_with(p, &i.to_string()) } else { p.to_path_buf() };
            u.write_csv(&path)?;
        }
    }
    if let Some(p) = psi_out {
        kit.psi().write_csv(p)?;
    }
    let pc = kit.verify_psi_class(&[0, 1, 2, 3], &[1.0, 0.5, 0.25, 0.125], 8)?;
    let worst = fam
        .members
        .iter()
        .max_by(|a, b| a.roundtrip_l2.total_cmp(&b.roundtrip_l2))
        .cloned()
        .expect("family is non-empty");
    let kr = kit.report(&worst, &pc);
    warn_all(&kr.warnings);
    let mut v = serde_json::to_value(&kr).map_err(|e| Failure::input(e.to_string()))?;
    if family.len() > 1 {
        v["family"] = json!({
            "members": fam.members.len(),
            "roundtrip_l2": fam.members.iter().map(|r| r.roundtrip_l2).collect::<Vec<_>>(),
            "max_roundtrip_l2": fam.max_roundtrip_l2,
            "u_log_q_norms": fam.u_log_q_norms,
            "uniform_log_bound": fam.uniform_log_bound,
            "q": fam.q,
        });
    }
    write_json(report, &v)
}
