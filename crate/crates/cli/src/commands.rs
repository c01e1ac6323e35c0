use crate::config::*;
use crate::manifest::{sha256_file, FileEntry, Manifest};
use crate::CliError;
use ldrbm::atrial::{generate_atrial_fibers, AtrialTaus};
use ldrbm::ep::{
    assemble_conductivity, default_sites, fit_conductivity, measure_cv, run_simulation, ActivationMap,
    Chamber, Conductivity, ConductivitySpec, Courtemanche1998, EpParams, FitSetup, IonicModel, MassKind,
    MitchellSchaeffer, ScheduleConfig, Stimulus, TenTusscher2006,
};
use ldrbm::mesh::{
    biventricle_regions, generate_ideal_atrium, generate_ideal_biventricle, generate_slab, load_fields,
    save_fields, AtriumParams, AtriumSide, BiventricleParams, Field, FieldSet, REGION_LV_FREE, REGION_OTHER,
    REGION_RV_FREE, REGION_SEPTUM,
};
use ldrbm::metrics::{
    activation_diff, display_mask, fiber_diff, histogram, summarize, write_histogram_csv, write_summary_csv,
    Summary, HISTOGRAM_BINS,
};
use ldrbm::ventricular::{
    generate_ventricular_fibers, OtAngles, VentricularAngles, VentricularMethod, VentricularOptions,
};
use ldrbm::{Error, FrameField, Mesh, Result};
use nalgebra::Vector3;
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct Context {
    command: &'static str,
    preset: Option<String>,
    config: Value,
    out: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<String>,
    summary: serde_json::Map<String, Value>,
}

impl Context {
    pub fn new(command: &'static str, preset: Option<String>, cfg: &RunConfig, out: PathBuf) -> Self {
        let mut cfg = cfg.clone();
        cfg.output = None;
        let config = serde_json::to_value(&cfg).unwrap_or(Value::Null);
        Context { command, preset, config, out, inputs: Vec::new(), outputs: Vec::new(), summary: Default::default() }
    }

    /// Registers an output file and returns its path.
    fn output(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out.join(name)
    }

    fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
        let side = ldrbm::mesh::sidecar_path(p);
        if side.exists() {
            self.inputs.push(side);
        }
    }

    fn note(&mut self, key: &str, v: Value) {
        self.summary.insert(key.to_string(), v);
    }

    fn save(&mut self, name: &str, mesh: &Mesh, fields: &FieldSet) -> Result<()> {
        let path = self.output(name);
        save_fields(mesh, fields, &path)?;
        let side = ldrbm::mesh::sidecar_path(Path::new(name));
        self.outputs.push(side.to_string_lossy().into_owned());
        Ok(())
    }

    pub fn finish(self) -> Result<()> {
        let entry = |p: &Path, shown: String| -> Result<FileEntry> { Ok(FileEntry { path: shown, sha256: sha256_file(p)? }) };
        let inputs = self.inputs.iter().map(|p| entry(p, p.display().to_string())).collect::<Result<_>>()?;
        let outputs = self.outputs.iter().map(|n| entry(&self.out.join(n), n.clone())).collect::<Result<_>>()?;
        let m = Manifest {
            tool: "ldrbm",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command.to_string(),
            preset: self.preset,
            threads: rayon::current_num_threads(),
            config: self.config,
            inputs,
            outputs,
            summary: self.summary,
        };
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        std::fs::write(self.out.join("manifest.json"), text + "\n")?;
        Ok(())
    }
}

/// Remediation hint printed under an error.
pub fn hint(e: &Error) -> Option<&'static str> {
    match e {
        Error::Tag(_) | Error::Schema(_) => Some(
            "the mesh tag map (<mesh>.tags) must list every boundary the method needs; \
             meshes from `ldrbm gen-geometry` carry them",
        ),
        Error::Coverage { .. } => Some("raise ep.t_end or check that the stimuli reach excitable tissue"),
        Error::Fit { .. } => Some("try another fit.sigma0, a larger fit.max_iter or a smaller fit.dt"),
        Error::Divergence { .. } | Error::Solver { .. } => Some("reduce ep.dt or tighten ep.tol"),
        _ => None,
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_side(s: &str) -> Result<AtriumSide> {
    match s.to_ascii_lowercase().as_str() {
        "left" | "la" => Ok(AtriumSide::Left),
        "right" | "ra" => Ok(AtriumSide::Right),
        _ => Err(cfg_err(format!("unknown atrial side '{s}'"))),
    }
}

fn side_name(s: AtriumSide) -> &'static str {
    match s {
        AtriumSide::Left => "left",
        AtriumSide::Right => "right",
    }
}

struct Geometry {
    mesh: Mesh,
    labels: Vec<(String, Vec<i32>)>,
    side: Option<AtriumSide>,
    atrial: bool,
}

fn build_geometry(g: &GeometryConfig, ctx: &mut Context) -> Result<Geometry> {
    let h = g.h.unwrap_or(0.1);
    Ok(match g.kind {
        GeometryKind::Slab => {
            let l = g.lengths.ok_or_else(|| cfg_err("geometry.lengths is required for a slab"))?;
            Geometry { mesh: generate_slab(l, h)?, labels: vec![], side: None, atrial: false }
        }
        GeometryKind::Biventricle => biventricle(h)?,
        GeometryKind::Atrium => {
            let side = parse_side(g.side.as_deref().ok_or_else(|| cfg_err("geometry.side is required for an atrium"))?)?;
            atrium(side, h)?
        }
        GeometryKind::File => {
            let path = g.path.as_ref().ok_or_else(|| cfg_err("geometry.path is required for kind = \"file\""))?;
            if !path.exists() {
                return Err(cfg_err(format!("geometry.path {} does not exist", path.display())));
            }
            ctx.input(path);
            let (mesh, fields) = load_fields(path)?;
            let labels = fields
                .fields
                .into_iter()
                .filter_map(|(n, f)| match f {
                    Field::Labels(v) => Some((n, v)),
                    _ => None,
                })
                .collect();
            let side = g.side.as_deref().map(parse_side).transpose()?.or_else(|| tag_side(&mesh));
            let atrial = side.is_some();
            Geometry { mesh, labels, side, atrial }
        }
    })
}

fn biventricle(h: f64) -> Result<Geometry> {
    let p = BiventricleParams { h, ..BiventricleParams::default() };
    let mesh = generate_ideal_biventricle(&p)?;
    let region = biventricle_regions(&mesh, &p);
    Ok(Geometry { mesh, labels: vec![("region".into(), region)], side: None, atrial: false })
}

fn atrium(side: AtriumSide, h: f64) -> Result<Geometry> {
    let p = AtriumParams { h, ..AtriumParams::for_side(side) };
    Ok(Geometry { mesh: generate_ideal_atrium(&p)?, labels: vec![], side: Some(side), atrial: true })
}

fn tag_side(mesh: &Mesh) -> Option<AtriumSide> {
    let has = |n: &str| mesh.tags().id(n).is_some();
    if has("tv-s") || has("icv") {
        Some(AtriumSide::Right)
    } else if has("lpv") {
        Some(AtriumSide::Left)
    } else {
        None
    }
}

fn label_fields(labels: &[(String, Vec<i32>)]) -> FieldSet {
    let mut fs = FieldSet::new();
    for (n, v) in labels {
        fs.push(n.clone(), Field::Labels(v.clone()));
    }
    fs
}

pub fn gen_geometry(cfg: &RunConfig, ctx: &mut Context) -> std::result::Result<(), CliError> {
    let g = cfg.geometry.as_ref().ok_or_else(|| CliError::Usage("config has no [geometry] section".into()))?;
    let geo = build_geometry(g, ctx)?;
    ctx.save("mesh.vtk", &geo.mesh, &label_fields(&geo.labels))?;
    ctx.note("nodes", json!(geo.mesh.num_nodes()));
    ctx.note("elements", json!(geo.mesh.num_elements()));
    ctx.note("tags", json!(geo.mesh.tags().iter().map(|(n, _)| n.to_string()).collect::<Vec<_>>()));
    Ok(())
}

struct Fibers {
    frames: FrameField,
    scalars: Vec<(String, Vec<f64>)>,
    labels: Vec<(String, Vec<i32>)>,
}

fn angles_of(f: &FiberConfig) -> Result<VentricularAngles> {
    let mut a = match &f.angles {
        None => VentricularAngles::histology(),
        Some(Named::Name(n)) => match n.as_str() {
            "histology" => VentricularAngles::histology(),
            "zero" => VentricularAngles::zero(),
            _ => return Err(cfg_err(format!("unknown angle preset '{n}'"))),
        },
        Some(Named::Value(v)) => VentricularAngles {
            alpha_epi_l: v.alpha_epi_l,
            alpha_endo_l: v.alpha_endo_l,
            alpha_epi_r: v.alpha_epi_r,
            alpha_endo_r: v.alpha_endo_r,
            beta_epi_l: v.beta_epi_l,
            beta_endo_l: v.beta_endo_l,
            beta_epi_r: v.beta_epi_r,
            beta_endo_r: v.beta_endo_r,
            ot: None,
        },
    };
    a.ot = match &f.ot_angles {
        None => None,
        Some(Named::Name(n)) if n == "histology" => Some(OtAngles::histology()),
        Some(Named::Name(n)) => return Err(cfg_err(format!("unknown outflow-tract angle preset '{n}'"))),
        Some(Named::Value(v)) => Some(OtAngles {
            alpha_epi: v.alpha_epi,
            alpha_endo: v.alpha_endo,
            beta_epi: v.beta_epi,
            beta_endo: v.beta_endo,
        }),
    };
    a.validate()?;
    Ok(a)
}

fn taus_of(f: &FiberConfig) -> Result<AtrialTaus> {
    let t = match &f.taus {
        None => AtrialTaus::ideal(),
        Some(Named::Name(n)) => AtrialTaus::preset(n)?,
        Some(Named::Value(v)) => AtrialTaus {
            tau_mv: v.tau_mv,
            tau_lpv: v.tau_lpv,
            tau_rpv: v.tau_rpv,
            tau_tv: v.tau_tv,
            tau_icv: v.tau_icv,
            tau_scv: v.tau_scv,
            tau_ct_plus: v.tau_ct_plus,
            tau_ct_minus: v.tau_ct_minus,
            tau_ib: v.tau_ib,
            tau_ras: v.tau_ras,
            tau_raw: v.tau_raw,
        },
    };
    t.validate()?;
    Ok(t)
}

fn build_fibers(geo: &Geometry, f: &FiberConfig, ctx: &mut Context) -> Result<Fibers> {
    let tol = f.tol.unwrap_or(ldrbm::laplace::DEFAULT_TOL);
    let method = match f.method.as_deref() {
        Some(m) => m.to_string(),
        None if geo.atrial => "atrial".into(),
        None => "D".into(),
    };
    if method.eq_ignore_ascii_case("atrial") {
        let side = match &f.side {
            Some(s) => parse_side(s)?,
            None => geo.side.or_else(|| tag_side(&geo.mesh)).ok_or_else(|| {
                Error::Tag("cannot tell the atrial side: the mesh has neither 'lpv' nor 'tv-s'/'icv' tags".into())
            })?,
        };
        let taus = taus_of(f)?;
        let af = generate_atrial_fibers(&geo.mesh, side, &taus, tol)?;
        let counts: serde_json::Map<String, Value> =
            af.label_counts().into_iter().map(|(l, c)| (l.name().to_string(), json!(c))).collect();
        ctx.note("method", json!(format!("atrial-{}", side_name(side))));
        ctx.note("bundle_counts", Value::Object(counts));
        let scalars = af.distances.named().into_iter().map(|(n, s)| (n.to_string(), s.0.clone())).collect();
        return Ok(Fibers { labels: vec![("bundle".into(), af.label_codes())], frames: af.frames, scalars });
    }
    let vm: VentricularMethod = method.parse()?;
    let angles = angles_of(f)?;
    let defaults = VentricularOptions::default();
    let opts = VentricularOptions {
        tol,
        septum_threshold: f.septum_threshold.unwrap_or(defaults.septum_threshold),
        ot_threshold: f.ot_threshold.unwrap_or(defaults.ot_threshold),
    };
    let vf = generate_ventricular_fibers(&geo.mesh, vm, &angles, &opts)?;
    ctx.note("method", json!(vm.schema_method().to_string()));
    ctx.note("max_orthonormality_error", json!(vf.frames.max_orthonormality_error()));
    let scalars = vf.fields.iter().map(|(n, s)| (n.clone(), s.0.clone())).collect();
    let left = vf.left.iter().map(|&b| i32::from(b)).collect();
    Ok(Fibers { frames: vf.frames, scalars, labels: vec![("left".into(), left)] })
}

pub fn gen_fibers(cfg: &RunConfig, ctx: &mut Context) -> std::result::Result<(), CliError> {
    let g = cfg.geometry.as_ref().ok_or_else(|| CliError::Usage("config has no [geometry] section".into()))?;
    let geo = build_geometry(g, ctx)?;
    let f = cfg.fibers.clone().unwrap_or_default();
    let fib = build_fibers(&geo, &f, ctx)?;
    let mut fs = FieldSet::new();
    fs.push("frames", Field::Frames(fib.frames));
    for (n, v) in fib.scalars {
        fs.push(n, Field::Scalar(v));
    }
    for (n, v) in fib.labels.into_iter().chain(geo.labels) {
        fs.push(n, Field::Labels(v));
    }
    ctx.save("fibers.vtk", &geo.mesh, &fs)?;
    ctx.note("nodes", json!(geo.mesh.num_nodes()));
    Ok(())
}

fn ionic_model(name: &str) -> Result<Box<dyn IonicModel>> {
    Ok(match name.to_ascii_lowercase().as_str() {
        "ms-ventricular" | "ms" => Box::new(MitchellSchaeffer::ventricular()),
        "ms-atrial" => Box::new(MitchellSchaeffer::atrial()),
        "ttp" | "tentusscher" => Box::new(TenTusscher2006),
        "crn" | "courtemanche" => Box::new(Courtemanche1998),
        _ => return Err(cfg_err(format!("unknown ionic model '{name}'"))),
    })
}

fn mass_kind(s: Option<&str>) -> Result<MassKind> {
    match s.map(str::to_ascii_lowercase).as_deref() {
        None | Some("lumped") => Ok(MassKind::Lumped),
        Some("consistent") => Ok(MassKind::Consistent),
        Some(o) => Err(cfg_err(format!("unknown mass kind '{o}'"))),
    }
}

fn conductivity_spec(c: &Option<Named<[f64; 3]>>, atrial: bool) -> Result<ConductivitySpec> {
    match c {
        None if atrial => Ok(ConductivitySpec::atrial()),
        None => Ok(ConductivitySpec::ventricular()),
        Some(Named::Name(n)) => match n.as_str() {
            "ventricular" => Ok(ConductivitySpec::ventricular()),
            "atrial" => Ok(ConductivitySpec::atrial()),
            _ => Err(cfg_err(format!("unknown conductivity preset '{n}'"))),
        },
        Some(Named::Value(v)) => ConductivitySpec::new(v[0], v[1], v[2]),
    }
}

fn ep_params(e: &EpConfig) -> Result<EpParams> {
    let d = EpParams::default();
    let p = EpParams {
        cm: e.cm.unwrap_or(d.cm),
        chi: e.chi.unwrap_or(d.chi),
        dt: e.dt.unwrap_or(d.dt),
        bdf_order: e.bdf_order.unwrap_or(d.bdf_order),
        t_end: e.t_end.unwrap_or(d.t_end),
        mass: mass_kind(e.mass.as_deref())?,
        tol: e.tol.unwrap_or(d.tol),
        activation_threshold: e.activation_threshold.unwrap_or(d.activation_threshold),
        snapshot_interval: e.snapshot_interval,
        stop_margin: e.stop_margin,
    };
    p.validate()?;
    Ok(p)
}

struct Domain {
    name: Option<String>,
    geo: Geometry,
    frames: Option<FrameField>,
    stimuli: Vec<Stimulus>,
    ventricular: bool,
}

fn domain_fibers(geo: &Geometry, e: &EpConfig, cfg: &RunConfig, ctx: &mut Context, method: Option<&str>) -> Result<Option<FrameField>> {
    if e.isotropic.is_some() {
        return Ok(None);
    }
    if let Some(path) = &e.fibers_file {
        if !path.exists() {
            return Err(cfg_err(format!("ep.fibers_file {} does not exist", path.display())));
        }
        ctx.input(path);
        let (m, fs) = load_fields(path)?;
        if m.num_nodes() != geo.mesh.num_nodes() {
            return Err(Error::Dimension(format!(
                "fiber file has {} nodes, mesh has {}",
                m.num_nodes(),
                geo.mesh.num_nodes()
            )));
        }
        return fs.frames().map(Some).ok_or_else(|| cfg_err(format!("{} has no fiber arrays", path.display())));
    }
    let mut f = cfg
        .fibers
        .clone()
        .ok_or_else(|| cfg_err("simulate needs [fibers], ep.fibers_file or ep.isotropic"))?;
    if let Some(m) = method {
        f.method = Some(m.to_string());
    }
    Ok(Some(build_fibers(geo, &f, ctx)?.frames))
}

fn user_stimuli(e: &EpConfig) -> Result<Vec<Stimulus>> {
    e.stimuli
        .iter()
        .map(|s| {
            let st = Stimulus {
                center: s.center,
                start: s.start,
                radius: s.radius.unwrap_or(Stimulus::DEFAULT_RADIUS),
                duration: s.duration.unwrap_or(Stimulus::DEFAULT_DURATION),
                amplitude: s.amplitude.unwrap_or(Stimulus::DEFAULT_AMPLITUDE),
            };
            st.validate()?;
            Ok(st)
        })
        .collect()
}

fn build_domains(cfg: &RunConfig, e: &EpConfig, ctx: &mut Context) -> Result<Vec<Domain>> {
    let Some(sch) = &e.schedule else {
        let g = cfg.geometry.as_ref().ok_or_else(|| cfg_err("simulate needs a [geometry] section"))?;
        let geo = build_geometry(g, ctx)?;
        let stimuli = user_stimuli(e)?;
        if stimuli.is_empty() {
            return Err(cfg_err("ep.stimuli is empty and no ep.schedule is given"));
        }
        let frames = domain_fibers(&geo, e, cfg, ctx, None)?;
        let ventricular = !geo.atrial;
        return Ok(vec![Domain { name: None, geo, frames, stimuli, ventricular }]);
    };
    if !e.stimuli.is_empty() {
        return Err(cfg_err("ep.stimuli and ep.schedule are mutually exclusive"));
    }
    let chambers = sch.chambers.iter().map(|c| c.parse()).collect::<Result<Vec<Chamber>>>()?;
    let mut sc = ScheduleConfig::new(default_sites(), chambers.clone());
    sc.radius = sch.radius.unwrap_or(sc.radius);
    sc.duration = sch.duration.unwrap_or(sc.duration);
    sc.amplitude = sch.amplitude.unwrap_or(sc.amplitude);
    let schedule = ldrbm::ep::whole_heart_schedule(&sc)?;
    let h = cfg.geometry.as_ref().and_then(|g| g.h).unwrap_or(0.1);
    let single = chambers.len() == 1;
    let mut out = Vec::new();
    for c in chambers {
        let geo = match (&cfg.geometry, single) {
            (Some(g), true) if g.kind == GeometryKind::File || (g.kind == GeometryKind::Atrium) != (c == Chamber::Ventricles) => {
                build_geometry(g, ctx)?
            }
            _ => match c {
                Chamber::Ra => atrium(AtriumSide::Right, h)?,
                Chamber::La => atrium(AtriumSide::Left, h)?,
                Chamber::Ventricles => biventricle(h)?,
            },
        };
        if !single && e.fibers_file.is_some() {
            return Err(cfg_err("ep.fibers_file needs a single-chamber schedule"));
        }
        let method = match c {
            Chamber::Ventricles => match cfg.fibers.as_ref().and_then(|f| f.method.as_deref()) {
                Some(m) if m.eq_ignore_ascii_case("atrial") => Some("D"),
                Some(m) => Some(m),
                None => Some("D"),
            },
            _ => Some("atrial"),
        };
        let method = if single && c != Chamber::Ventricles { None } else { method };
        let frames = domain_fibers(&geo, e, cfg, ctx, method)?;
        let stimuli = schedule.iter().filter(|s| s.chamber == c).map(|s| s.stimulus).collect();
        out.push(Domain {
            name: (!single).then(|| c.to_string()),
            geo,
            frames,
            stimuli,
            ventricular: c == Chamber::Ventricles,
        });
    }
    Ok(out)
}

pub fn simulate(cfg: &RunConfig, ctx: &mut Context) -> std::result::Result<(), CliError> {
    let e = cfg.ep.as_ref().ok_or_else(|| CliError::Usage("config has no [ep] section".into()))?;
    let params = ep_params(e)?;
    let domains = build_domains(cfg, e, ctx)?;
    let mut report = String::from("domain,nodes,activated,t_min,t_max,out_of_range_steps,cv\n");
    let mut atria_done = f64::NEG_INFINITY;
    let mut ventricles_first = f64::INFINITY;
    for d in &domains {
        let ionic = ionic_model(e.ionic.as_deref().unwrap_or(if d.ventricular { "ttp" } else { "crn" }))?;
        let cond = match (e.isotropic, &d.frames) {
            (Some(s), _) => {
                if !(s >= 0.0 && s.is_finite()) {
                    return Err(cfg_err(format!("ep.isotropic = {s} must be non-negative")).into());
                }
                Conductivity::Isotropic(s)
            }
            (None, Some(fr)) => assemble_conductivity(&d.geo.mesh, fr, &conductivity_spec(&e.conductivity, !d.ventricular)?)?,
            (None, None) => unreachable!("fibers are built unless isotropic"),
        };
        let res = run_simulation(&d.geo.mesh, &cond, ionic.as_ref(), &d.stimuli, &params)?;
        let sfx = d.name.as_ref().map(|n| format!("_{n}")).unwrap_or_default();
        let label = d.name.clone().unwrap_or_else(|| "domain".into());
        let mut fs = label_fields(&d.geo.labels);
        fs.push("activation", Field::Scalar(res.activation.to_vec()));
        ctx.save(&format!("activation{sfx}.vtk"), &d.geo.mesh, &fs)?;
        let log = ctx.output(&format!("log{sfx}.csv"));
        res.write_log_csv(&log)?;
        for (k, (t, u)) in res.snapshots.iter().enumerate() {
            let mut fs = FieldSet::new();
            fs.push("u", Field::Scalar(u.clone()));
            ctx.save(&format!("snapshot{sfx}_{k:04}.vtk"), &d.geo.mesh, &fs)?;
            ctx.note(&format!("snapshot{sfx}_{k:04}_time"), json!(t));
        }
        let cv = match e.cv_axis {
            Some(a) => {
                let a = Vector3::from(a);
                if a.norm() == 0.0 {
                    return Err(cfg_err("ep.cv_axis must be nonzero").into());
                }
                Some(measure_cv(&d.geo.mesh, &res.activation, &a.normalize())?)
            }
            None => None,
        };
        let n = d.geo.mesh.num_nodes();
        let activated = n - res.activation.never().len();
        let (lo, hi) = (res.activation.min(), res.activation.max());
        let f = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        report += &format!("{label},{n},{activated},{},{},{},{}\n", f(lo), f(hi), res.out_of_range_steps, f(cv));
        ctx.note(
            &label,
            json!({ "nodes": n, "activated": activated, "t_min": lo, "t_max": hi, "cv": cv }),
        );
        if d.ventricular {
            ventricles_first = ventricles_first.min(lo.unwrap_or(f64::INFINITY));
        } else {
            atria_done = atria_done.max(if activated == n { hi.unwrap_or(0.0) } else { f64::INFINITY });
        }
    }
    if domains.len() > 1 {
        ctx.note("atria_complete_before_ventricles", json!(atria_done < ventricles_first));
    }
    let path = ctx.output("report.csv");
    std::fs::write(path, report).map_err(Error::from)?;
    Ok(())
}

fn region_name(code: i32) -> Option<&'static str> {
    match code {
        REGION_SEPTUM => Some("septum"),
        REGION_LV_FREE => Some("lv_free"),
        REGION_RV_FREE => Some("rv_free"),
        REGION_OTHER => Some("other"),
        _ => None,
    }
}

fn summary_json(s: &Summary) -> Value {
    json!({ "count": s.count, "min": s.min, "max": s.max, "mean": s.mean,
            "q05": s.q05, "q25": s.q25, "q50": s.q50, "q75": s.q75, "q95": s.q95 })
}

pub fn compare(cfg: &RunConfig, ctx: &mut Context) -> std::result::Result<(), CliError> {
    let c = cfg.compare.as_ref().ok_or_else(|| CliError::Usage("config has no [compare] section".into()))?;
    for p in [&c.a, &c.b] {
        if !p.exists() {
            return Err(cfg_err(format!("compare input {} does not exist", p.display())).into());
        }
        ctx.input(p);
    }
    let (mesh, fa) = load_fields(&c.a)?;
    let (mb, fb) = load_fields(&c.b)?;
    if mesh.num_nodes() != mb.num_nodes() {
        return Err(Error::Dimension(format!("inputs have {} and {} nodes", mesh.num_nodes(), mb.num_nodes())).into());
    }
    let act = c.activation_name.as_deref().unwrap_or("activation");
    let kind = match c.field.as_deref().unwrap_or("auto") {
        "auto" if fa.frames().is_some() && fb.frames().is_some() => "fibers",
        "auto" if fa.scalar(act).is_some() && fb.scalar(act).is_some() => "activation",
        "auto" => return Err(cfg_err("inputs share neither fiber arrays nor an activation array").into()),
        k @ ("fibers" | "activation") => k,
        k => return Err(cfg_err(format!("unknown compare.field '{k}'")).into()),
    };
    ctx.note("kind", json!(kind));
    let mut fs = FieldSet::new();
    let values = if kind == "fibers" {
        let missing = || cfg_err("fiber arrays missing from an input");
        let d = fiber_diff(&fa.frames().ok_or_else(missing)?, &fb.frames().ok_or_else(missing)?)?;
        let thr = c.threshold.unwrap_or(0.25);
        fs.push("fiber_diff", Field::Scalar(d.clone()));
        fs.push("fiber_diff_display", Field::Labels(display_mask(&d, thr)));
        let h = histogram(&d, 0.0, 1.0, HISTOGRAM_BINS);
        write_histogram_csv(&ctx.output("histogram.csv"), &h)?;
        d
    } else {
        let missing = || cfg_err(format!("array '{act}' missing from an input"));
        let a = ActivationMap::from_vec(fa.scalar(act).ok_or_else(missing)?);
        let b = ActivationMap::from_vec(fb.scalar(act).ok_or_else(missing)?);
        let d = activation_diff(&a, &b)?;
        ctx.note("M", json!(d.max));
        ctx.note("M_relative", json!(d.relative));
        fs.push("activation_diff", Field::Scalar(d.delta.clone()));
        let h = histogram(&d.delta, 0.0, d.max, HISTOGRAM_BINS);
        write_histogram_csv(&ctx.output("histogram.csv"), &h)?;
        d.delta
    };
    let mut rows = vec![("all".to_string(), summarize(&values)?)];
    if let Some(region) = fa.labels("region").or_else(|| fb.labels("region")) {
        fs.push("region", Field::Labels(region.to_vec()));
        for code in [REGION_SEPTUM, REGION_LV_FREE, REGION_RV_FREE, REGION_OTHER] {
            let sel: Vec<f64> = values.iter().zip(region).filter(|(_, &r)| r == code).map(|(v, _)| *v).collect();
            if let (Some(name), Ok(s)) = (region_name(code), summarize(&sel)) {
                rows.push((name.to_string(), s));
            }
        }
    }
    for (n, s) in &rows {
        ctx.note(&format!("summary_{n}"), summary_json(s));
    }
    write_summary_csv(&ctx.output("summary.csv"), &rows)?;
    ctx.save("compare.vtk", &mesh, &fs)?;
    Ok(())
}

pub fn fit_cv(cfg: &RunConfig, ctx: &mut Context) -> std::result::Result<(), CliError> {
    let f = cfg.fit.as_ref().ok_or_else(|| CliError::Usage("config has no [fit] section".into()))?;
    if f.targets.is_empty() {
        return Err(cfg_err("fit.targets is empty").into());
    }
    let ionic = ionic_model(&f.ionic)?;
    let mut setup = FitSetup::new(ionic.as_ref(), f.h, f.dt);
    setup.bdf_order = f.bdf_order.unwrap_or(setup.bdf_order);
    setup.mass = mass_kind(f.mass.as_deref())?;
    setup.length = f.length.unwrap_or(setup.length);
    setup.sigma0 = f.sigma0.unwrap_or(setup.sigma0);
    setup.tol = f.tol.unwrap_or(setup.tol);
    setup.max_iter = f.max_iter.unwrap_or(setup.max_iter);
    if !(setup.h > 0.0 && setup.dt > 0.0 && setup.length > setup.h) {
        return Err(cfg_err("fit.h, fit.dt and fit.length must be positive with length > h").into());
    }
    let mut table = String::from("target,sigma,cv,iterations\n");
    let mut trace = String::from("target,iteration,sigma,cv\n");
    let mut rows = Vec::new();
    for &t in &f.targets {
        let r = fit_conductivity(t, &setup)?;
        table += &format!("{t},{},{},{}\n", r.sigma, r.cv, r.iterations);
        for (i, (s, v)) in r.trace.iter().enumerate() {
            trace += &format!("{t},{},{s},{v}\n", i + 1);
        }
        rows.push(json!({ "target": t, "sigma": r.sigma, "cv": r.cv, "iterations": r.iterations }));
        println!("target {t} cm/s: sigma = {:.6} mS/cm, cv = {:.3} cm/s ({} iterations)", r.sigma, r.cv, r.iterations);
    }
    let mut w = std::fs::File::create(ctx.output("fit.csv")).map_err(Error::from)?;
    w.write_all(table.as_bytes()).map_err(Error::from)?;
    std::fs::write(ctx.output("trace.csv"), trace).map_err(Error::from)?;
    ctx.note("fits", Value::Array(rows));
    Ok(())
}
