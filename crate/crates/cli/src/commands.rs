use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use lcf_core::analysis::{
    certify, certify_seeds, default_settings_for, BuiltSystem, CertifyParams, SystemKind, Verdict,
};
use lcf_core::constructions::{
    exactness_check, naive_extension, slow_manifold, thm1_crn_with, thm2_crn_with, thm3_system,
};
use lcf_core::crn::format::{parse_json, parse_text, to_json, to_text};
use lcf_core::dynamics::{batch_integrate_with, to_csv_string};
use lcf_core::figures::{self, FigureId};
use lcf_core::poly::PolySystemJson;
use lcf_core::{
    default_centers, mass_action_odes, CenterSet, Crn, Execution, IntegrationError, IntegratorSettings, MergePolicy,
    Method, PolyOdeSystem, StiffParams, Trajectory, VectorField,
};

use crate::output::{resolve_output_dir, write_atomic, write_json};
use crate::{Cli, Command, Format, KindArg, MergeArg, MethodArg, SolverArgs, SystemArg, SystemArgs};

pub enum Status {
    Success,
    Failed,
}

pub fn run(cli: &Cli) -> Result<Status> {
    let out = resolve_output_dir(&cli.output_dir);
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match &cli.command {
        Command::Synthesize { theorem, system, merge_policy, strict } => {
            synthesize(&out, cli.format, *theorem, system, *merge_policy, *strict)
        }
        Command::Simulate { system, params, crn, figure, seeds, init_scale, solver } => simulate(
            &out,
            cli.format,
            exec,
            SimulateArgs { system: *system, params, crn: crn.as_deref(), figure: figure.as_deref(), seeds: seeds.as_deref(), init_scale: *init_scale, solver },
        ),
        Command::Verify { kind, params, flux_samples, grid_n, cluster_tol, transient, solver } => {
            let kind = system_kind(*kind);
            let centers = centers(params)?;
            let stiff = StiffParams::new(params.eps, params.delta)?;
            let defaults = CertifyParams::default();
            let cp = CertifyParams {
                eps: stiff.eps,
                delta: stiff.delta,
                centers: Some(centers.clone()),
                flux_samples: *flux_samples,
                grid_n: *grid_n,
                cluster_tol: cluster_tol.unwrap_or(defaults.cluster_tol),
                transient_fraction: transient.unwrap_or(defaults.transient_fraction),
                settings: solver.overrides_any().then(|| solver.apply(default_settings_for(kind))).transpose()?,
                execution: exec,
            };
            verify(&out, cli.format, kind, centers.k(), &cp)
        }
        Command::ReplicateFigure { figure, summary_only } => replicate(&out, cli.format, figure, *summary_only, exec),
    }
}

fn centers(p: &SystemArgs) -> Result<CenterSet> {
    match (&p.centers, p.k) {
        (Some(flat), k) => {
            let c = CenterSet::from_flat(flat)?;
            if let Some(k) = k {
                if k != c.k() {
                    bail!("--K {k} does not match the {} centers given", c.k());
                }
            }
            Ok(c)
        }
        (None, Some(0)) => bail!("--K must be at least 1"),
        (None, Some(k)) => Ok(default_centers(k)),
        (None, None) => bail!("either --K or --centers is required"),
    }
}

fn system_kind(k: KindArg) -> SystemKind {
    match k {
        KindArg::Planar => SystemKind::Planar,
        KindArg::XfactoredPlanar => SystemKind::XfactoredPlanar,
        KindArg::Tikhonov => SystemKind::Tikhonov,
        KindArg::Factored => SystemKind::Factored,
        KindArg::SecondOrder => SystemKind::SecondOrder,
        KindArg::Thm3 => SystemKind::Thm3,
    }
}

impl SolverArgs {
    fn overrides_any(&self) -> bool {
        self.t_end.is_some()
            || self.rel_tol.is_some()
            || self.abs_tol.is_some()
            || self.max_step.is_some()
            || self.stride.is_some()
            || self.method.is_some()
    }

    fn apply(&self, mut s: IntegratorSettings) -> Result<IntegratorSettings> {
        if let Some(v) = self.t_end {
            s.t_end = v;
        }
        if let Some(v) = self.rel_tol {
            s.rel_tol = v;
        }
        if let Some(v) = self.abs_tol {
            s.abs_tol = v;
        }
        if let Some(v) = self.max_step {
            s.max_step = v;
        }
        if let Some(v) = self.stride {
            s.dense_stride = v;
        }
        if let Some(m) = self.method {
            s.method = match m {
                MethodArg::DormandPrince => Method::DormandPrince,
                MethodArg::Rosenbrock => Method::Rosenbrock,
            };
        }
        s.validate()?;
        Ok(s)
    }
}

fn emit(format: Format, text: String, value: serde_json::Value) {
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&value).expect("plain data serializes")),
        Format::Text | Format::Csv => println!("{text}"),
    }
}

fn synthesize(out: &Path, format: Format, theorem: u8, p: &SystemArgs, merge: MergeArg, strict: bool) -> Result<Status> {
    let c = centers(p)?;
    if let Some(loss) = exactness_check(&c) {
        if strict {
            bail!(
                "center {} gives 1 + a^6 + b^6 = {:e} > 2^53; rate constants are not exact in double precision",
                loss.center + 1,
                loss.value
            );
        }
    }
    let k = c.k();
    if theorem == 3 {
        let sys = thm3_system(&c);
        let base = out.join(format!("thm3_K{k}"));
        write_atomic(&base.with_extension("txt"), sys.to_string().as_bytes())?;
        write_json(&base.with_extension("json"), &PolySystemJson::from(&sys))?;
        emit(
            format,
            format!("variables={} degree={} monomials={}", sys.dim(), sys.degree(), sys.monomial_count()),
            json!({"theorem": 3, "K": k, "variables": sys.dim(), "degree": sys.degree(), "monomials": sys.monomial_count()}),
        );
        return Ok(Status::Success);
    }
    let crn = if theorem == 1 {
        let policy = match merge {
            MergeArg::PerTerm => MergePolicy::PerTerm,
            MergeArg::MergeSharedReactants => MergePolicy::MergeSharedReactants,
        };
        thm1_crn_with(&c, p.eps, policy)?
    } else {
        thm2_crn_with(&c, StiffParams::new(p.eps, p.delta)?)?
    };
    let base = out.join(format!("thm{theorem}_K{k}"));
    write_atomic(&base.with_extension("crn"), to_text(&crn).as_bytes())?;
    write_atomic(&base.with_extension("json"), to_json(&crn).as_bytes())?;
    emit(
        format,
        format!("species={} reactions={} max_order={}", crn.num_species(), crn.num_reactions(), crn.max_order()),
        json!({"theorem": theorem, "K": k, "species": crn.num_species(), "reactions": crn.num_reactions(), "max_order": crn.max_order()}),
    );
    Ok(Status::Success)
}

struct SimulateArgs<'a> {
    system: SystemArg,
    params: &'a SystemArgs,
    crn: Option<&'a Path>,
    figure: Option<&'a str>,
    seeds: Option<&'a Path>,
    init_scale: f64,
    solver: &'a SolverArgs,
}

/// A field to integrate plus the map from a seed row to an initial state.
enum SimSystem {
    Built(BuiltSystem),
    Poly(PolyOdeSystem, CenterSet),
    Figure(figures::FigureConfig, figures::FigureField),
    Raw(PolyOdeSystem),
}

impl SimSystem {
    fn field(&self) -> &dyn VectorField {
        match self {
            SimSystem::Built(b) => b.field(),
            SimSystem::Poly(s, _) | SimSystem::Raw(s) => s,
            SimSystem::Figure(_, f) => f.field(),
        }
    }

    fn initial_state(&self, row: &[f64], scale: f64) -> Result<Vec<f64>> {
        let dim = self.field().dim();
        if row.len() == dim {
            return Ok(row.to_vec());
        }
        if row.len() != 2 {
            bail!("seed has {} values; expected 2 or {dim}", row.len());
        }
        let (x, y) = (row[0], row[1]);
        Ok(match self {
            SimSystem::Built(b) => b.lift(x, y, scale),
            SimSystem::Poly(_, c) => {
                let mut s = vec![x, y];
                s.extend(slow_manifold(c, x, y).iter().map(|q| scale * q));
                s
            }
            SimSystem::Figure(cfg, _) => cfg.initial_state([x, y]),
            SimSystem::Raw(_) => bail!("a network loaded with --crn needs full-state seeds"),
        })
    }
}

fn read_seeds(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split([',', ' ', '\t']).filter(|s| !s.is_empty()).map(str::parse).collect();
        rows.push(row.map_err(|e| anyhow!("{}:{}: {e}", path.display(), i + 1))?);
    }
    if rows.is_empty() {
        bail!("{} contains no seeds", path.display());
    }
    Ok(rows)
}

fn load_crn(path: &Path) -> Result<Crn> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let crn = if path.extension().is_some_and(|e| e == "json") { parse_json(&text)? } else { parse_text(&text)? };
    Ok(crn)
}

#[derive(Serialize)]
struct SeedEntry {
    index: usize,
    initial_state: Vec<f64>,
    status: &'static str,
    error: Option<String>,
    file: Option<String>,
    final_state: Option<Vec<f64>>,
    steps_accepted: Option<usize>,
    steps_rejected: Option<usize>,
}

fn simulate(out: &Path, format: Format, exec: Execution, a: SimulateArgs) -> Result<Status> {
    let (system, base_settings, label) = if let Some(id) = a.figure {
        let id: FigureId = id.parse().map_err(|e: String| anyhow!(e))?;
        let cfg = figures::config(id);
        let field = cfg.build().map_err(|e| anyhow!(e))?;
        let settings = cfg.settings;
        (SimSystem::Figure(cfg, field), settings, format!("figure {id}"))
    } else if let Some(path) = a.crn {
        let sys = mass_action_odes(&load_crn(path)?);
        (SimSystem::Raw(sys), IntegratorSettings::default(), path.display().to_string())
    } else {
        let c = centers(a.params)?;
        let stiff = StiffParams::new(a.params.eps, a.params.delta)?;
        let kind = match a.system {
            SystemArg::Planar => Some(SystemKind::Planar),
            SystemArg::XfactoredPlanar => Some(SystemKind::XfactoredPlanar),
            SystemArg::Tikhonov => Some(SystemKind::Tikhonov),
            SystemArg::Factored => Some(SystemKind::Factored),
            SystemArg::SecondOrder => Some(SystemKind::SecondOrder),
            SystemArg::Thm3 => Some(SystemKind::Thm3),
            SystemArg::Naive => None,
        };
        match kind {
            Some(kind) => {
                let built = BuiltSystem::build(kind, &c, stiff).map_err(|e| anyhow!(e))?;
                (SimSystem::Built(built), default_settings_for(kind), kind.name().to_string())
            }
            None => (SimSystem::Poly(naive_extension(&c), c), IntegratorSettings::default(), "naive".to_string()),
        }
    };
    let settings = a.solver.apply(base_settings)?;

    let rows: Vec<Vec<f64>> = match (a.seeds, &system) {
        (Some(p), _) => read_seeds(p)?,
        (None, SimSystem::Figure(cfg, _)) => cfg.seed_points().iter().map(|p| p.to_vec()).collect(),
        (None, SimSystem::Built(_) | SimSystem::Poly(..)) => {
            certify_seeds(&centers(a.params)?).iter().map(|&(x, y)| vec![x, y]).collect()
        }
        (None, SimSystem::Raw(_)) => bail!("--crn requires --seeds"),
    };
    let states: Vec<Vec<f64>> =
        rows.iter().map(|r| system.initial_state(r, a.init_scale)).collect::<Result<_>>()?;
    let field = system.field();
    let names = field.var_names();
    let runs = batch_integrate_with(field, &states, &settings, exec);

    let mut entries = Vec::with_capacity(runs.len());
    for (i, (s0, r)) in states.iter().zip(&runs).enumerate() {
        let traj: Option<&Trajectory> = match r {
            Ok(t) => Some(t),
            Err(IntegrationError::Diverged { partial, .. }) => Some(partial),
            Err(_) => None,
        };
        let file = match traj {
            Some(t) => {
                let (name, body) = match format {
                    Format::Json => (format!("seed_{i:03}.json"), serde_json::to_string(t)?),
                    _ => (format!("seed_{i:03}.csv"), to_csv_string(t, &names)),
                };
                write_atomic(&out.join(&name), body.as_bytes())?;
                Some(name)
            }
            None => None,
        };
        entries.push(SeedEntry {
            index: i,
            initial_state: s0.clone(),
            status: match r {
                Ok(_) => "ok",
                Err(e) => e.kind(),
            },
            error: r.as_ref().err().map(|e| e.to_string()),
            file,
            final_state: traj.map(|t| t.last_state().to_vec()),
            steps_accepted: traj.map(|t| t.meta.steps_accepted),
            steps_rejected: traj.map(|t| t.meta.steps_rejected),
        });
    }
    let ok = entries.iter().filter(|e| e.status == "ok").count();
    write_json(&out.join("index.json"), &json!({"system": label, "variables": names, "settings": settings, "seeds": entries}))?;
    emit(
        format,
        format!("system={label} seeds={} ok={ok} failed={} dir={}", entries.len(), entries.len() - ok, out.display()),
        json!({"system": label, "seeds": entries.len(), "ok": ok, "dir": out}),
    );
    Ok(if ok == 0 { Status::Failed } else { Status::Success })
}

fn verify(out: &Path, format: Format, kind: SystemKind, k: usize, p: &CertifyParams) -> Result<Status> {
    let report = certify(kind, k, p);
    let path = out.join(format!("verify_{}_K{k}.json", kind.name()));
    write_json(&path, &report)?;
    let verdict = match report.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
    };
    let mut text = format!("kind={} K={k} verdict={verdict} cycles={}", kind.name(), report.cycles.len());
    let periods: Vec<String> = report.cycles.iter().map(|c| format!("{:.6}", c.period)).collect();
    if !periods.is_empty() {
        let _ = write!(text, " periods={}", periods.join(","));
    }
    let failed_annuli: Vec<String> =
        report.annuli.iter().filter(|a| !a.pass).map(|a| a.index.to_string()).collect();
    if !failed_annuli.is_empty() {
        let _ = write!(text, " failed_annuli={}", failed_annuli.join(","));
    }
    if !report.errors.is_empty() {
        let _ = write!(text, " errors={}", report.errors.len());
    }
    emit(format, text, serde_json::to_value(&report)?);
    Ok(match report.verdict {
        Verdict::Pass => Status::Success,
        Verdict::Fail => Status::Failed,
    })
}

fn quote(name: &str) -> String {
    if name.contains([',', '"']) {
        format!("\"{}\"", name.replace('"', "\"\""))
    } else {
        name.to_string()
    }
}

fn replicate(out: &Path, format: Format, figure: &str, summary_only: bool, exec: Execution) -> Result<Status> {
    let id: FigureId = figure.parse().map_err(|e: String| anyhow!(e))?;
    let cfg = figures::config(id);
    let run = figures::run(&cfg, exec).map_err(|e| anyhow!(e))?;
    let dir = out.join(format!("figure_{id}"));
    write_json(&dir.join("summary.json"), &run.summary)?;
    if !summary_only {
        for (i, r) in run.trajectories.iter().enumerate() {
            if let Ok(t) = r {
                write_atomic(&dir.join(format!("seed_{i:03}.csv")), to_csv_string(t, &run.names).as_bytes())?;
            }
        }
    }
    let header: Vec<String> = run.names.iter().map(|n| quote(n)).collect();
    for (j, c) in run.cycles.iter().enumerate() {
        let mut body = header.join(",");
        body.push('\n');
        for s in &c.loop_states {
            let row: Vec<String> = s.iter().map(|v| format!("{v:.16e}")).collect();
            body.push_str(&row.join(","));
            body.push('\n');
        }
        write_atomic(&dir.join(format!("cycle_{j:02}.csv")), body.as_bytes())?;
    }
    let s = &run.summary;
    let mut text = format!("figure={id} cycle_count={} fixed_points={}", s.cycle_count, s.fixed_points.len());
    for p in &s.fixed_points {
        let _ = write!(text, " fixed_point=({:.6},{:.6})", p[0], p[1]);
    }
    let _ = write!(text, " outside_seed_cycles={} dir={}", s.outside_seed_cycles, dir.display());
    emit(format, text, serde_json::to_value(s)?);
    Ok(Status::Success)
}
