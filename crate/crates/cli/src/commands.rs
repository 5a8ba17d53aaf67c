use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::Serialize;
use serde_json::json;

use sfs_core::catalog::{self, EntryKind, Resolved, SchemeRef};
use sfs_core::descriptor::ScheduleDescriptor;
use sfs_core::diagnostics::{diagnose_schedule, diagnose_subdivision, DiagnoseOptions};
use sfs_core::function_systems::{
    backward_trajectory, forward_trajectory, ifs_attractor, iterate_fixed, product_diagnostic, AttractorOptions,
    AttractorRun, FunctionSystemDescriptor, TrajectoryOptions,
};
use sfs_core::metric_sets::hausdorff;
use sfs_core::sfs_bridge::project;
use sfs_core::subdivision::{c0_convergence_estimate, subdivide_levels, Mask, MaskSequence};
use sfs_core::{Error as CoreError, FunctionSystem, PointSet};

use crate::output::{svg_scatter, write_atomic, write_cloud, write_json, Format};
use crate::{
    AttractorArgs, CatalogAction, Command, DiagnoseArgs, Direction, Status, SubdivideArgs, TrajectoryArgs,
};

/// Largest input file read (CSV, JSON, mask text).
pub const MAX_INPUT_BYTES: u64 = 64 << 20;

pub fn dispatch(cmd: Command) -> Result<Status> {
    match cmd {
        Command::Attractor(a) => attractor(&a),
        Command::Trajectory(t) => trajectory(&t),
        Command::Subdivide(s) => subdivide(&s),
        Command::Diagnose(d) => diagnose(&d),
        Command::Catalog {
            action: CatalogAction::List { json },
        } => catalog_list(json),
    }
}

fn read_input(path: &Path) -> Result<String> {
    let meta = std::fs::metadata(path).with_context(|| format!("reading {}", path.display()))?;
    if meta.len() > MAX_INPUT_BYTES {
        bail!("{} exceeds {MAX_INPUT_BYTES} bytes", path.display());
    }
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_points(path: &Path) -> Result<PointSet> {
    let text = read_input(path)?;
    PointSet::from_csv_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Inline JSON, the contents of a `.json` file, or None for a catalog
/// reference.
fn json_text(reference: &str) -> Result<Option<String>> {
    let t = reference.trim_start();
    if t.starts_with('{') {
        return Ok(Some(reference.to_string()));
    }
    if reference.ends_with(".json") {
        return Ok(Some(read_input(Path::new(reference))?));
    }
    Ok(None)
}

fn scheme_ref(reference: &str, seed: Option<u64>) -> Result<SchemeRef> {
    let mut r = SchemeRef::parse(reference)?;
    if let Some(seed) = seed {
        r.params.insert("seed".into(), seed.to_string());
    }
    Ok(r)
}

fn entry_kind(name: &str) -> Option<EntryKind> {
    catalog::entries().into_iter().find(|e| e.name == name).map(|e| e.kind)
}

pub fn resolve_schedule(reference: &str, seed: Option<u64>) -> Result<Resolved> {
    match json_text(reference)? {
        Some(text) => {
            if seed.is_some() {
                bail!("--seed applies to catalog references only");
            }
            Ok(ScheduleDescriptor::from_json_str(&text)?.resolve()?)
        }
        None => Ok(catalog::resolve(&scheme_ref(reference, seed)?)?),
    }
}

/// One system with its start set and the number of visible coordinates.
struct Target {
    label: String,
    system: FunctionSystem,
    eventually_contractive: bool,
    initial: PointSet,
    visible_dim: usize,
}

fn attractor_target(reference: &str, seed: Option<u64>) -> Result<Target> {
    if let Some(text) = json_text(reference)? {
        // a bare function system, else a constant schedule descriptor
        let system = match serde_json::from_str::<FunctionSystemDescriptor>(&text) {
            Ok(d) => d.build()?,
            Err(_) => match ScheduleDescriptor::from_json_str(&text)? {
                ScheduleDescriptor::Constant { system } => system.build()?,
                ScheduleDescriptor::Catalog { name, params } => {
                    return attractor_target(&SchemeRef::from_parts(&name, &params)?.to_string(), None)
                }
                ScheduleDescriptor::Periodic { .. } => {
                    bail!("a periodic schedule has no single attractor; use `sfs trajectory`")
                }
            },
        };
        let dim = system.dim();
        return Ok(Target {
            label: system.label().to_string(),
            system,
            eventually_contractive: false,
            initial: PointSet::singleton(&vec![0.0; dim])?,
            visible_dim: dim,
        });
    }
    let r = scheme_ref(reference, seed)?;
    let kind = entry_kind(&r.name).ok_or_else(|| CoreError::UnknownScheme(r.name.clone()))?;
    let resolved = catalog::resolve(&r)?;
    let label = r.to_string();
    match (kind, resolved) {
        (
            _,
            Resolved::System {
                system,
                eventually_contractive,
                initial,
                visible_dim,
            },
        ) => Ok(Target {
            label,
            system,
            eventually_contractive,
            initial,
            visible_dim,
        }),
        (EntryKind::Mask, Resolved::Subdivision { lift, polygon }) => Ok(Target {
            label,
            system: lift.system(1),
            eventually_contractive: true,
            initial: lift.lift_matrix().rows(),
            visible_dim: polygon.dim(),
        }),
        _ => bail!("`{}` is level dependent and has no single attractor; use `sfs trajectory`", r.name),
    }
}

#[derive(Serialize)]
struct AttractorMeta<'a> {
    scheme: &'a str,
    dim: usize,
    output_dim: usize,
    points: usize,
    iterations: usize,
    /// h(B_{k−1}, B_k) at the last iteration.
    final_step: Option<f64>,
    steps: &'a [f64],
    /// L_𝓕, max Lipschitz constant of the maps.
    contraction: f64,
    error_bound: Option<f64>,
    converged: bool,
    eventually_contractive: bool,
    depth: Option<usize>,
    tol: Option<f64>,
    epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn check_epsilon(e: f64) -> Result<()> {
    if !(e >= 0.0) || !e.is_finite() {
        bail!("--epsilon must be finite and >= 0, got {e}");
    }
    Ok(())
}

fn attractor(a: &AttractorArgs) -> Result<Status> {
    check_epsilon(a.epsilon)?;
    if a.depth.is_none() && !(a.tol > 0.0 && a.tol.is_finite()) {
        bail!("--tol must be > 0, got {}", a.tol);
    }
    let target = attractor_target(&a.scheme, a.seed)?;
    let format = a.format.unwrap_or_else(|| Format::from_path(&a.output));
    let result: std::result::Result<AttractorRun, CoreError> = match a.depth {
        Some(depth) => iterate_fixed(&target.system, &target.initial, depth, a.epsilon, Some(a.max_points)),
        None => ifs_attractor(
            &target.system,
            &target.initial,
            &AttractorOptions {
                tol: a.tol,
                max_iter: a.max_iter,
                epsilon: a.epsilon,
                eventually_contractive: target.eventually_contractive,
                max_points: Some(a.max_points),
            },
        ),
    };
    let run = match result {
        Ok(run) => run,
        Err(e @ CoreError::SetTooLarge { .. }) => {
            // nothing to show but the reason
            write_json(
                &crate::output::sidecar(&a.output),
                &json!({"scheme": target.label, "converged": false, "error": e.to_string()}),
            )?;
            return Ok(Status::NotConverged(e.to_string()));
        }
        Err(e) => return Err(e.into()),
    };
    let shown = if a.full_dim || target.visible_dim >= target.system.dim() {
        run.set.clone()
    } else {
        project(&run.set, target.visible_dim)?
    };
    let meta = AttractorMeta {
        scheme: &target.label,
        dim: target.system.dim(),
        output_dim: shown.dim(),
        points: shown.len(),
        iterations: run.iterations,
        final_step: run.final_step(),
        steps: &run.steps,
        contraction: run.contraction,
        error_bound: run.error_bound,
        converged: run.converged,
        eventually_contractive: target.eventually_contractive,
        depth: a.depth,
        tol: a.depth.is_none().then_some(a.tol),
        epsilon: a.epsilon,
        error: None,
    };
    write_cloud(&a.output, format, &shown, &meta)?;
    if let Some(svg) = &a.svg {
        write_atomic(svg, svg_scatter(&shown).as_bytes())?;
    }
    if run.converged {
        Ok(Status::Done)
    } else {
        Ok(Status::NotConverged(format!(
            "step {:?} after {} iterations, tol {}",
            run.final_step(),
            run.iterations,
            a.tol
        )))
    }
}

#[derive(Serialize)]
struct TrajectoryReport {
    schedule: String,
    reference: String,
    direction: Direction,
    epsilon: f64,
    requested_depths: Vec<usize>,
    /// Depths actually computed; shorter than requested after a failure.
    depths: Vec<usize>,
    files: Vec<String>,
    points: Vec<usize>,
    dim: usize,
    output_dim: usize,
    /// h between consecutive computed depths, in the schedule's space.
    steps: Vec<f64>,
    /// The same on the written (projected) sets.
    output_steps: Vec<f64>,
    factor_levels: usize,
    factors: sfs_core::function_systems::ProductDiagnostic,
    factor_values: Vec<f64>,
    completed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn depth_file(dir: &Path, depth: usize, ext: &str) -> PathBuf {
    dir.join(format!("depth-{depth}.{ext}"))
}

fn trajectory(t: &TrajectoryArgs) -> Result<Status> {
    check_epsilon(t.epsilon)?;
    if t.depths.is_empty() || t.depths.windows(2).any(|w| w[0] >= w[1]) {
        bail!("--depths must be nonempty and strictly increasing");
    }
    let resolved = resolve_schedule(&t.schedule, t.seed)?;
    let schedule = resolved.schedule();
    let start = match &t.start {
        Some(p) => read_points(p)?,
        None => resolved.initial_set(),
    };
    if start.dim() != schedule.dim() {
        bail!("start set has dimension {}, schedule needs {}", start.dim(), schedule.dim());
    }
    let visible = if t.full_dim { schedule.dim() } else { resolved.display_dim() };
    let opts = TrajectoryOptions {
        epsilon: t.epsilon,
        max_points: Some(t.max_points),
    };

    let mut sets = Vec::new();
    let mut failure = None;
    let mut current = start.clone();
    let mut level = 0;
    for &depth in &t.depths {
        let step = match t.direction {
            Direction::Backward => backward_trajectory(&schedule, &start, &[depth], opts),
            Direction::Forward => forward_trajectory(&schedule.shifted(level), &current, &[depth - level], opts),
        };
        match step {
            Ok(mut tr) => {
                let set = tr.sets.pop().expect("one depth requested");
                if t.direction == Direction::Forward {
                    current = set.clone();
                    level = depth;
                }
                sets.push(set);
            }
            Err(e @ CoreError::SetTooLarge { .. }) => {
                failure = Some(format!("depth {depth}: {e}"));
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    let depths: Vec<usize> = t.depths[..sets.len()].to_vec();
    let shown = sets
        .iter()
        .map(|s| if visible < s.dim() { project(s, visible) } else { Ok(s.clone()) })
        .collect::<sfs_core::Result<Vec<_>>>()?;
    let full = sfs_core::function_systems::Trajectory::from_sets(depths.clone(), sets)?;
    let output_steps = shown
        .windows(2)
        .map(|w| hausdorff(&w[0], &w[1]))
        .collect::<sfs_core::Result<Vec<_>>>()?;

    let ext = match t.format {
        Format::Csv => "csv",
        Format::Json => "json",
        Format::Svg => "svg",
    };
    let mut files = Vec::new();
    for (&depth, set) in depths.iter().zip(&shown) {
        let path = depth_file(&t.output, depth, ext);
        let body = match t.format {
            Format::Csv => set.to_csv_string(),
            Format::Svg => svg_scatter(set),
            Format::Json => {
                let mut s = serde_json::to_string(&json!({"depth": depth, "dim": set.dim(), "points": set.points().collect::<Vec<_>>()}))?;
                s.push('\n');
                s
            }
        };
        write_atomic(&path, body.as_bytes())?;
        files.push(path.file_name().unwrap().to_string_lossy().into_owned());
        if t.svg && t.format != Format::Svg {
            write_atomic(&depth_file(&t.output, depth, "svg"), svg_scatter(set).as_bytes())?;
        }
    }
    let factor_levels = t.levels.unwrap_or(*t.depths.last().expect("nonempty"));
    let factor_values = schedule.factors(factor_levels);
    let report = TrajectoryReport {
        schedule: schedule.label().to_string(),
        reference: t.schedule.clone(),
        direction: t.direction,
        epsilon: t.epsilon,
        requested_depths: t.depths.clone(),
        depths,
        files,
        points: shown.iter().map(PointSet::len).collect(),
        dim: schedule.dim(),
        output_dim: visible.min(schedule.dim()),
        steps: full.steps,
        output_steps,
        factor_levels,
        factors: product_diagnostic(&factor_values),
        factor_values,
        completed: failure.is_none(),
        error: failure.clone(),
    };
    write_json(&t.output.join("diagnostics.json"), &report)?;
    match failure {
        Some(msg) => Ok(Status::NotConverged(msg)),
        None => Ok(Status::Done),
    }
}

fn subdivide(s: &SubdivideArgs) -> Result<Status> {
    let (masks, default_polygon, label) = match (&s.scheme, &s.mask) {
        (Some(reference), None) => match catalog::resolve(&scheme_ref(reference, s.seed)?)? {
            Resolved::Subdivision { lift, polygon } => (lift.masks().clone(), Some(polygon), reference.clone()),
            _ => bail!("`{reference}` is not a subdivision scheme"),
        },
        (None, Some(text)) => {
            let text = if Path::new(text).is_file() {
                read_input(Path::new(text))?
            } else {
                text.clone()
            };
            let mask = Mask::parse(&text)?;
            (MaskSequence::constant(mask), None, "mask".to_string())
        }
        _ => bail!("give exactly one of --scheme or --mask"),
    };
    let polygon = match (&s.polygon, default_polygon) {
        (Some(p), _) => read_points(p)?,
        (None, Some(p)) => p,
        (None, None) => bail!("--polygon is required with --mask"),
    };
    let refined = subdivide_levels(&masks, &polygon, s.levels)?;
    let estimate = if s.levels >= 2 {
        Some(c0_convergence_estimate(&masks, &polygon, s.levels)?)
    } else {
        None
    };
    write_atomic(&s.output, refined.to_csv_string().as_bytes())?;
    write_json(
        &crate::output::sidecar(&s.output),
        &json!({
            "scheme": label,
            "levels": s.levels,
            "input_points": polygon.len(),
            "points": refined.len(),
            "c0_estimate": estimate,
        }),
    )?;
    Ok(Status::Done)
}

fn diagnose(d: &DiagnoseArgs) -> Result<Status> {
    if d.levels == 0 {
        bail!("--levels must be >= 1");
    }
    let resolved = resolve_schedule(&d.schedule, d.seed)?;
    let report = match &resolved {
        Resolved::Subdivision { lift, polygon } => {
            let opts = DiagnoseOptions {
                levels: d.levels,
                max_ell: d.max_ell,
                ..DiagnoseOptions::default()
            };
            json!({
                "reference": d.schedule,
                "kind": "subdivision",
                "report": diagnose_subdivision(lift, polygon, &opts)?,
            })
        }
        other => json!({
            "reference": d.schedule,
            "kind": "schedule",
            "report": diagnose_schedule(&other.schedule(), d.levels),
        }),
    };
    match &d.output {
        Some(path) => write_json(path, &report)?,
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    Ok(Status::Done)
}

fn catalog_list(as_json: bool) -> Result<Status> {
    let entries = catalog::entries();
    if as_json {
        println!("{}", serde_json::to_string_pretty(&entries)?);
        return Ok(Status::Done);
    }
    for e in &entries {
        let params = e
            .params
            .iter()
            .map(|p| format!("{}={}", p.name, p.default))
            .collect::<Vec<_>>()
            .join(",");
        let kind = serde_json::to_value(e.kind)?
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| anyhow!("entry kind"))?;
        println!("{:<10} {:<15} {:<28} {}", e.name, kind, params, e.help);
    }
    Ok(Status::Done)
}
