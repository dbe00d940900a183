//! INI run configurations.
//!
//! A `run` file has `[problem]`, `[initial]` and optionally `[source]`,
//! `[solver]`, `[output]`; a `converge` file has `[converge]` plus the optional
//! `[solver]` and `[output]`. Unknown sections or keys are rejected so typos
//! do not silently fall back to defaults.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ini::{EscapePolicy, Ini, WriteOption};
use sorption_core::analytic::ZkbProfile;
use sorption_core::energy::StateField;
use sorption_core::isotherm::{Freundlich, Isotherm, PorousMedium};
use sorption_core::mesh::{Grid1D, TimePartition};
use sorption_core::minimizer::SolverConfig;
use sorption_core::par::Execution;
use sorption_core::stepper::{ProblemSpec, SourceFn, DEFAULT_SUPPORT_EPS};
use sorption_core::study::ZkbStudy;

use crate::CliError;

pub const DEFAULT_OUTPUT_DIR: &str = "out";
pub const DEFAULT_RUN_STRIDE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsothermSpec {
    /// `b(u) = u + |u|^{p−1}u` with `components` species.
    FreundlichTransport { p: f64, components: usize },
    /// Scalar `b(u) = |u|^{p−1}u`, the porous medium equation with `m = 1/p`.
    PmeScalar { p: f64 },
}

impl IsothermSpec {
    pub fn components(&self) -> usize {
        match *self {
            IsothermSpec::FreundlichTransport { components, .. } => components,
            IsothermSpec::PmeScalar { .. } => 1,
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Isotherm>, CliError> {
        Ok(match *self {
            IsothermSpec::FreundlichTransport { p, components } => Arc::new(Freundlich::new(p, components)?),
            IsothermSpec::PmeScalar { p } => Arc::new(PorousMedium::new(p, 1)?),
        })
    }
}

/// `height·(1 − ((x − center)/width)²)_+`, so `width` is the half-width of the support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub height: f64,
}

impl Bump {
    pub fn eval(&self, x: f64) -> f64 {
        self.height * (1.0 - ((x - self.center) / self.width).powi(2)).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Zero,
    /// Sum of bumps, one list per component.
    Bumps(Vec<Vec<Bump>>),
    Zkb { c: f64, t0: f64, x0: f64 },
    /// Nodal CSV with header `x,u_1,..,u_m`, one row per grid node.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Zero,
    /// Time-independent constant vector on `[lo, hi]`, zero elsewhere.
    Constant { values: Vec<f64>, region: Option<(f64, f64)> },
}

impl SourceSpec {
    pub fn is_nonnegative(&self) -> bool {
        match self {
            SourceSpec::Zero => true,
            SourceSpec::Constant { values, .. } => values.iter().all(|v| *v >= 0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub snapshot_every: usize,
    pub support_eps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub isotherm: IsothermSpec,
    pub a: f64,
    pub b: f64,
    pub final_time: f64,
    pub interior: usize,
    pub steps: usize,
    pub initial: InitialSpec,
    pub source: SourceSpec,
    pub solver: SolverConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeConfig {
    pub study: ZkbStudy,
    pub execution: Execution,
    pub solver: SolverConfig,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Config {
    Run(RunConfig),
    Converge(ConvergeConfig),
}

/// One INI section with the set of keys it may contain.
struct Section<'a> {
    name: &'static str,
    props: BTreeMap<String, String>,
    base: &'a Path,
}

impl<'a> Section<'a> {
    fn new(ini: &Ini, name: &'static str, allowed: &[&str], base: &'a Path) -> Result<Self, CliError> {
        let mut props = BTreeMap::new();
        if let Some(p) = ini.section(Some(name)) {
            for (k, v) in p.iter() {
                if !allowed.contains(&k) {
                    return Err(CliError::Input(format!("unknown key `{k}` in [{name}]")));
                }
                props.insert(k.to_string(), v.trim().to_string());
            }
        }
        Ok(Self { name, props, base })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.props.get(key).map(String::as_str)
    }

    fn err(&self, key: &str, msg: impl std::fmt::Display) -> CliError {
        CliError::Input(format!("[{}] {key}: {msg}", self.name))
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key)
            .map(|s| parse_f64(s).map_err(|e| self.err(key, e)))
            .transpose()
    }

    fn f64_req(&self, key: &str) -> Result<f64, CliError> {
        self.f64_opt(key)?.ok_or_else(|| self.err(key, "missing"))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn usize_opt(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.raw(key)
            .map(|s| s.parse::<usize>().map_err(|e| self.err(key, e)))
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.raw(key)
            .map(|s| {
                s.split(',')
                    .map(|t| parse_f64(t.trim()).map_err(|e| self.err(key, e)))
                    .collect()
            })
            .transpose()
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|s| {
            let p = PathBuf::from(s);
            if p.is_absolute() {
                p
            } else {
                self.base.join(p)
            }
        })
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

const PROBLEM_KEYS: &[&str] = &[
    "isotherm", "p", "m_exponent", "components", "a", "b", "final_time", "dx", "interior", "dt", "steps",
];
const SOURCE_KEYS: &[&str] = &["kind", "values", "region"];
const SOLVER_KEYS: &[&str] = &["grad_tol", "max_iters", "shrink", "sufficient_decrease", "regularization"];
const OUTPUT_KEYS: &[&str] = &["dir", "snapshot_every", "support_eps"];
const CONVERGE_KEYS: &[&str] = &[
    "exponents", "spacings", "dt_ratio", "a", "b", "final_time", "c", "t0", "x0", "execution",
];

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let ini = Ini::load_from_str_noescape(text).map_err(|e| CliError::Input(format!("malformed config: {e}")))?;
        for name in ini.sections() {
            match name {
                None if ini.general_section().is_empty() => {}
                Some("problem" | "initial" | "source" | "solver" | "output" | "converge") => {}
                other => {
                    return Err(CliError::Input(format!(
                        "unknown section {}",
                        other.map_or("(top level)".to_string(), |s| format!("[{s}]"))
                    )))
                }
            }
        }
        let has = |s: &str| ini.section(Some(s)).is_some();
        match (has("problem"), has("converge")) {
            (true, false) => Ok(Config::Run(RunConfig::from_ini(&ini, base)?)),
            (false, true) => Ok(Config::Converge(ConvergeConfig::from_ini(&ini, base)?)),
            (true, true) => Err(CliError::Input("config has both [problem] and [converge]".into())),
            (false, false) => Err(CliError::Input("config needs a [problem] or [converge] section".into())),
        }
    }
}

fn solver_from(ini: &Ini, base: &Path) -> Result<SolverConfig, CliError> {
    let s = Section::new(ini, "solver", SOLVER_KEYS, base)?;
    let d = SolverConfig::default();
    let cfg = SolverConfig {
        grad_tol: s.f64_or("grad_tol", d.grad_tol)?,
        max_iters: s.usize_opt("max_iters")?.unwrap_or(d.max_iters),
        shrink: s.f64_or("shrink", d.shrink)?,
        sufficient_decrease: s.f64_or("sufficient_decrease", d.sufficient_decrease)?,
        regularization: s.f64_or("regularization", d.regularization)?,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn resolve_count(
    s: &Section<'_>,
    spacing_key: &str,
    count_key: &str,
    from_spacing: impl Fn(f64) -> Result<usize, CliError>,
) -> Result<usize, CliError> {
    match (s.f64_opt(spacing_key)?, s.usize_opt(count_key)?) {
        (None, None) => Err(s.err(spacing_key, format!("one of {spacing_key} / {count_key} is required"))),
        (None, Some(n)) => Ok(n),
        (Some(h), None) => from_spacing(h),
        (Some(h), Some(n)) => {
            if from_spacing(h)? == n {
                Ok(n)
            } else {
                Err(s.err(spacing_key, format!("{spacing_key} = {h} is inconsistent with {count_key} = {n}")))
            }
        }
    }
}

impl RunConfig {
    fn from_ini(ini: &Ini, base: &Path) -> Result<Self, CliError> {
        let pr = Section::new(ini, "problem", PROBLEM_KEYS, base)?;
        let isotherm = match pr.raw("isotherm").unwrap_or("freundlich-transport") {
            "freundlich-transport" | "freundlich" => IsothermSpec::FreundlichTransport {
                p: pr.f64_req("p")?,
                components: pr.usize_opt("components")?.unwrap_or(1),
            },
            "pme-scalar" | "pme" => {
                if pr.usize_opt("components")?.is_some_and(|m| m != 1) {
                    return Err(pr.err("components", "pme-scalar has one component"));
                }
                let p = match (pr.f64_opt("p")?, pr.f64_opt("m_exponent")?) {
                    (Some(p), None) => p,
                    (None, Some(m)) if m > 1.0 => 1.0 / m,
                    (None, Some(m)) => return Err(pr.err("m_exponent", format!("{m} must exceed 1"))),
                    (Some(_), Some(_)) => return Err(pr.err("p", "give either p or m_exponent")),
                    (None, None) => return Err(pr.err("p", "missing (or m_exponent)")),
                };
                IsothermSpec::PmeScalar { p }
            }
            other => return Err(pr.err("isotherm", format!("unknown kind `{other}`"))),
        };
        let (a, b) = (pr.f64_req("a")?, pr.f64_req("b")?);
        let final_time = pr.f64_req("final_time")?;
        let interior = resolve_count(&pr, "dx", "interior", |h| Ok(Grid1D::with_spacing(a, b, h)?.interior()))?;
        let steps = resolve_count(&pr, "dt", "steps", |h| Ok(TimePartition::with_step(final_time, h)?.steps()))?;

        let m = isotherm.components();
        let initial = parse_initial(ini, base, m)?;

        let src = Section::new(ini, "source", SOURCE_KEYS, base)?;
        let source = match src.raw("kind").unwrap_or("zero") {
            "zero" => SourceSpec::Zero,
            "constant" => {
                let values = src.list("values")?.ok_or_else(|| src.err("values", "missing"))?;
                if values.len() != m {
                    return Err(src.err("values", format!("expected {m} values")));
                }
                let region = match src.list("region")? {
                    None => None,
                    Some(r) if r.len() == 2 && r[0] < r[1] => Some((r[0], r[1])),
                    Some(_) => return Err(src.err("region", "expected `lo, hi` with lo < hi")),
                };
                SourceSpec::Constant { values, region }
            }
            other => return Err(src.err("kind", format!("unknown kind `{other}`"))),
        };

        let out = Section::new(ini, "output", OUTPUT_KEYS, base)?;
        let output = OutputConfig {
            dir: out.path("dir").unwrap_or_else(|| base.join(DEFAULT_OUTPUT_DIR)),
            snapshot_every: out.usize_opt("snapshot_every")?.unwrap_or(DEFAULT_RUN_STRIDE),
            support_eps: out.f64_or("support_eps", DEFAULT_SUPPORT_EPS)?,
        };

        let cfg = Self {
            isotherm,
            a,
            b,
            final_time,
            interior,
            steps,
            initial,
            source,
            solver: solver_from(ini, base)?,
            output,
        };
        cfg.build_spec()?;
        Ok(cfg)
    }

    pub fn grid(&self) -> Result<Grid1D, CliError> {
        Ok(Grid1D::new(self.a, self.b, self.interior)?)
    }

    pub fn time(&self) -> Result<TimePartition, CliError> {
        Ok(TimePartition::new(self.final_time, self.steps)?)
    }

    /// The exact solution this run starts from, if any.
    pub fn zkb_profile(&self) -> Result<Option<ZkbProfile>, CliError> {
        match (&self.initial, self.isotherm) {
            (InitialSpec::Zkb { c, t0, x0 }, IsothermSpec::PmeScalar { p }) => {
                Ok(Some(ZkbProfile::new(*c, *t0, *x0, 1.0 / p)?))
            }
            (InitialSpec::Zkb { .. }, _) => Err(CliError::Input(
                "zkb initial data needs isotherm = pme-scalar".into(),
            )),
            _ => Ok(None),
        }
    }

    pub fn initial_field(&self) -> Result<StateField, CliError> {
        let grid = self.grid()?;
        let m = self.isotherm.components();
        match &self.initial {
            InitialSpec::Zero => Ok(StateField::zeros(grid, m)),
            InitialSpec::Bumps(lists) => Ok(StateField::sample(grid, m, |x, u| {
                for (k, bumps) in lists.iter().enumerate() {
                    u[k] = bumps.iter().map(|b| b.eval(x)).sum();
                }
            })
            .map_err(bump_boundary)?),
            InitialSpec::Zkb { .. } => {
                let z = self.zkb_profile()?.expect("zkb with pme isotherm");
                z.validate_containment(self.a, self.b, self.final_time)?;
                Ok(StateField::sample(grid, 1, |x, u| u[0] = z.u(0.0, x).unwrap_or(0.0))?)
            }
            InitialSpec::File(path) => read_nodal_csv(path, grid, m),
        }
    }

    pub fn source_fn(&self) -> Option<Arc<SourceFn>> {
        match &self.source {
            SourceSpec::Zero => None,
            SourceSpec::Constant { values, region } => {
                let (values, region) = (values.clone(), *region);
                Some(Arc::new(move |_t, x, f: &mut [f64]| {
                    let inside = region.is_none_or(|(lo, hi)| lo <= x && x <= hi);
                    for (o, v) in f.iter_mut().zip(&values) {
                        *o = if inside { *v } else { 0.0 };
                    }
                }))
            }
        }
    }

    /// Whether the positivity property applies: `u⁰ ≥ 0` and `f ≥ 0`.
    pub fn expects_positivity(&self, initial: &StateField) -> bool {
        initial.min_value() >= 0.0 && self.source.is_nonnegative()
    }

    pub fn build_spec(&self) -> Result<ProblemSpec, CliError> {
        if self.output.snapshot_every == 0 {
            return Err(CliError::Input("[output] snapshot_every must be at least 1".into()));
        }
        let mut spec = ProblemSpec::new(self.isotherm.build()?, self.time()?, self.initial_field()?)?
            .store_every(self.output.snapshot_every)?
            .with_support_eps(self.output.support_eps)?;
        if let Some(f) = self.source_fn() {
            spec = spec.with_source(f);
        }
        Ok(spec)
    }

    /// The configuration with every default resolved, as INI text.
    pub fn to_ini(&self) -> String {
        let mut ini = Ini::new();
        {
            let mut s = ini.with_section(Some("problem"));
            match self.isotherm {
                IsothermSpec::FreundlichTransport { p, components } => {
                    s.set("isotherm", "freundlich-transport").set("p", num(p)).set("components", components.to_string())
                }
                IsothermSpec::PmeScalar { p } => s.set("isotherm", "pme-scalar").set("p", num(p)),
            };
            s.set("a", num(self.a))
                .set("b", num(self.b))
                .set("final_time", num(self.final_time))
                .set("interior", self.interior.to_string())
                .set("steps", self.steps.to_string());
        }
        {
            let mut s = ini.with_section(Some("initial"));
            match &self.initial {
                InitialSpec::Zero => {
                    s.set("kind", "zero");
                }
                InitialSpec::Bumps(lists) => {
                    s.set("kind", "bump");
                    for (k, bumps) in lists.iter().enumerate() {
                        let text: Vec<String> = bumps
                            .iter()
                            .map(|b| format!("{} {} {}", num(b.center), num(b.width), num(b.height)))
                            .collect();
                        s.set(format!("u{}", k + 1), text.join(", "));
                    }
                }
                InitialSpec::Zkb { c, t0, x0 } => {
                    s.set("kind", "zkb").set("c", num(*c)).set("t0", num(*t0)).set("x0", num(*x0));
                }
                InitialSpec::File(p) => {
                    s.set("kind", "file").set("path", p.display().to_string());
                }
            }
        }
        {
            let mut s = ini.with_section(Some("source"));
            match &self.source {
                SourceSpec::Zero => {
                    s.set("kind", "zero");
                }
                SourceSpec::Constant { values, region } => {
                    s.set("kind", "constant").set("values", join(values));
                    if let Some((lo, hi)) = region {
                        s.set("region", join(&[*lo, *hi]));
                    }
                }
            }
        }
        set_solver(&mut ini, &self.solver);
        ini.with_section(Some("output"))
            .set("dir", self.output.dir.display().to_string())
            .set("snapshot_every", self.output.snapshot_every.to_string())
            .set("support_eps", num(self.output.support_eps));
        write_ini(&ini)
    }
}

fn bump_boundary(e: sorption_core::error::Error) -> CliError {
    CliError::Input(format!("bump initial data must vanish on the boundary: {e}"))
}

fn parse_initial(ini: &Ini, base: &Path, m: usize) -> Result<InitialSpec, CliError> {
    let comp_keys: Vec<String> = (1..=m).map(|k| format!("u{k}")).collect();
    let mut allowed: Vec<&str> = vec!["kind", "c", "t0", "x0", "path"];
    allowed.extend(comp_keys.iter().map(String::as_str));
    let s = Section::new(ini, "initial", &allowed, base)?;
    match s.raw("kind").unwrap_or("zero") {
        "zero" => Ok(InitialSpec::Zero),
        "zkb" => Ok(InitialSpec::Zkb {
            c: s.f64_req("c")?,
            t0: s.f64_req("t0")?,
            x0: s.f64_or("x0", 0.0)?,
        }),
        "file" => Ok(InitialSpec::File(s.path("path").ok_or_else(|| s.err("path", "missing"))?)),
        "bump" => {
            let lists = comp_keys
                .iter()
                .map(|key| match s.raw(key) {
                    None | Some("") => Ok(Vec::new()),
                    Some(text) => text
                        .split(',')
                        .map(|triple| {
                            let v: Vec<f64> = triple
                                .split_whitespace()
                                .map(parse_f64)
                                .collect::<Result<_, _>>()
                                .map_err(|e| s.err(key, e))?;
                            match v[..] {
                                [center, width, height] if width > 0.0 => Ok(Bump { center, width, height }),
                                _ => Err(s.err(key, "each bump is `center width height` with width > 0")),
                            }
                        })
                        .collect(),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(InitialSpec::Bumps(lists))
        }
        other => Err(s.err("kind", format!("unknown kind `{other}`"))),
    }
}

fn read_nodal_csv(path: &Path, grid: Grid1D, m: usize) -> Result<StateField, CliError> {
    let fail = |msg: String| CliError::Input(format!("{}: {msg}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(|e| fail(e.to_string()))?;
    let mut values = Vec::with_capacity(grid.nodes() * m);
    let tol = 1e-9 * (grid.b() - grid.a());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| fail(e.to_string()))?;
        if rec.len() != m + 1 {
            return Err(fail(format!("row {} has {} columns, expected {}", i + 1, rec.len(), m + 1)));
        }
        let row: Vec<f64> = rec
            .iter()
            .map(|t| parse_f64(t.trim()))
            .collect::<Result<_, _>>()
            .map_err(|e| fail(format!("row {}: {e}", i + 1)))?;
        if i >= grid.nodes() || (row[0] - grid.x(i)).abs() > tol {
            return Err(fail(format!("row {} at x = {} does not match the grid", i + 1, row[0])));
        }
        values.extend_from_slice(&row[1..]);
    }
    if values.len() != grid.nodes() * m {
        return Err(fail(format!("expected {} rows, got {}", grid.nodes(), values.len() / m.max(1))));
    }
    StateField::from_nodal(grid, m, values).map_err(|e| fail(e.to_string()))
}

impl ConvergeConfig {
    fn from_ini(ini: &Ini, base: &Path) -> Result<Self, CliError> {
        let s = Section::new(ini, "converge", CONVERGE_KEYS, base)?;
        let d = ZkbStudy::default();
        let study = ZkbStudy {
            exponents: s.list("exponents")?.unwrap_or(d.exponents),
            spacings: s.list("spacings")?.unwrap_or(d.spacings),
            dt_ratio: s.f64_or("dt_ratio", d.dt_ratio)?,
            domain: (s.f64_or("a", d.domain.0)?, s.f64_or("b", d.domain.1)?),
            final_time: s.f64_or("final_time", d.final_time)?,
            c: s.f64_or("c", d.c)?,
            t0: s.f64_or("t0", d.t0)?,
            x0: s.f64_or("x0", d.x0)?,
        };
        study.validate()?;
        let execution = match s.raw("execution").unwrap_or("parallel") {
            "parallel" => Execution::Parallel,
            "sequential" => Execution::Sequential,
            other => return Err(s.err("execution", format!("`{other}` is neither parallel nor sequential"))),
        };
        let out = Section::new(ini, "output", &["dir"], base)?;
        Ok(Self {
            study,
            execution,
            solver: solver_from(ini, base)?,
            output_dir: out.path("dir").unwrap_or_else(|| base.join(DEFAULT_OUTPUT_DIR)),
        })
    }

    pub fn to_ini(&self) -> String {
        let mut ini = Ini::new();
        let st = &self.study;
        ini.with_section(Some("converge"))
            .set("exponents", join(&st.exponents))
            .set("spacings", join(&st.spacings))
            .set("dt_ratio", num(st.dt_ratio))
            .set("a", num(st.domain.0))
            .set("b", num(st.domain.1))
            .set("final_time", num(st.final_time))
            .set("c", num(st.c))
            .set("t0", num(st.t0))
            .set("x0", num(st.x0))
            .set(
                "execution",
                if self.execution == Execution::Sequential { "sequential" } else { "parallel" },
            );
        set_solver(&mut ini, &self.solver);
        ini.with_section(Some("output")).set("dir", self.output_dir.display().to_string());
        write_ini(&ini)
    }
}

fn set_solver(ini: &mut Ini, cfg: &SolverConfig) {
    ini.with_section(Some("solver"))
        .set("grad_tol", num(cfg.grad_tol))
        .set("max_iters", cfg.max_iters.to_string())
        .set("shrink", num(cfg.shrink))
        .set("sufficient_decrease", num(cfg.sufficient_decrease))
        .set("regularization", num(cfg.regularization));
}

fn write_ini(ini: &Ini) -> String {
    let mut buf = Vec::new();
    ini.write_to_opt(
        &mut buf,
        WriteOption {
            escape_policy: EscapePolicy::Nothing,
            ..WriteOption::default()
        },
    )
    .expect("writing to memory");
    let mut text = String::from_utf8(buf).expect("ini output is utf-8");
    if !text.ends_with('\n') {
        let _ = writeln!(text);
    }
    text
}

/// Shortest text that parses back to the same `f64`.
fn num(v: f64) -> String {
    format!("{v:?}")
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUMPS: &str = "
[problem]
isotherm = freundlich-transport
p = 0.3333333333333333
components = 2
a = -2
b = 2
final_time = 0.5
dx = 0.01
dt = 0.01

[initial]
kind = bump
u1 = -0.65 0.4 1.0, 0.65 0.4 0.5
u2 = -0.65 0.4 0.5, 0.65 0.4 1.0

[output]
snapshot_every = 5
";

    fn run_cfg(text: &str) -> Result<RunConfig, CliError> {
        match Config::parse(text, Path::new("."))? {
            Config::Run(r) => Ok(r),
            Config::Converge(_) => panic!("expected a run config"),
        }
    }

    #[test]
    fn parses_and_resolves_counts() {
        let c = run_cfg(TWO_BUMPS).unwrap();
        assert_eq!(c.interior, 399);
        assert_eq!(c.steps, 50);
        assert_eq!(c.output.snapshot_every, 5);
        assert_eq!(c.solver, SolverConfig::default());
        match &c.initial {
            InitialSpec::Bumps(l) => assert_eq!(l[1][1].height, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn effective_echo_round_trips() {
        let c = run_cfg(TWO_BUMPS).unwrap();
        let again = run_cfg(&c.to_ini()).unwrap();
        assert_eq!(c, again);
        let conv = "[converge]\nexponents = 2, 3\nspacings = 0.04, 0.02\n";
        let Config::Converge(cc) = Config::parse(conv, Path::new(".")).unwrap() else { panic!() };
        let Config::Converge(back) = Config::parse(&cc.to_ini(), Path::new(".")).unwrap() else { panic!() };
        assert_eq!(cc, back);
    }

    #[test]
    fn rejections() {
        let bad = |t: &str| matches!(Config::parse(t, Path::new(".")), Err(CliError::Input(_)));
        assert!(bad(&TWO_BUMPS.replace("dt = 0.01", "dt = 0.01\nsteps = 49")));
        assert!(bad(&TWO_BUMPS.replace("snapshot_every", "snapshot_evry")));
        assert!(bad(&format!("{TWO_BUMPS}\n[extra]\nx = 1\n")));
        assert!(bad(&TWO_BUMPS.replace("0.4 0.5", "-0.4 0.5")));
        assert!(bad(&TWO_BUMPS.replace("u1 = -0.65 0.4 1.0", "u1 = -1.9 0.4 1.0")));
        assert!(bad("[converge]\nspacings = 0.04\n"));
        // ZKB support reaching the boundary
        let zkb = "[problem]\nisotherm = pme-scalar\nm_exponent = 2\na = -1\nb = 1\nfinal_time = 0.5\ndx = 0.02\ndt = 0.05\n\
                   [initial]\nkind = zkb\nc = 0.1\nt0 = 1\n";
        assert!(bad(zkb));
        let ok = Config::parse(&zkb.replace("a = -1\nb = 1", "a = -2\nb = 2"), Path::new("."));
        assert!(ok.is_ok(), "{ok:?}");
        assert!(!bad(&zkb.replace("a = -1\nb = 1", "a = -2\nb = 2")));
    }

    #[test]
    fn constant_source_on_a_region() {
        let c = run_cfg(&format!("{TWO_BUMPS}\n[source]\nkind = constant\nvalues = 1, 2\nregion = -0.5, 0.5\n")).unwrap();
        let f = c.source_fn().unwrap();
        let mut out = [0.0; 2];
        f(0.1, 0.0, &mut out);
        assert_eq!(out, [1.0, 2.0]);
        f(0.1, 1.0, &mut out);
        assert_eq!(out, [0.0, 0.0]);
        assert!(c.source.is_nonnegative());
    }
}
