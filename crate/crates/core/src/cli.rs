//! Batch driver: flat `key = value` run configurations and the `solve`,
//! `convergence`, `spectrum`, `psi-sweep` and `identities` commands.
//!
//! Every command writes CSV files (floating-point values with 17 significant
//! digits) into the output directory and returns an exit status: 0 success,
//! 1 failed check, 2 configuration error, 3 numerical failure.

use std::fmt;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fespace::local_basis;
use crate::forms::{FormKind, Formulation, RhsMethod};
use crate::mesh::{BoundaryPlan, BoxSpec};
use crate::polycalc::{registry, run_identity_suite, BenchmarkName, Identity, IdentityOutcome};
use crate::postproc::{packed_invariants, ConvergenceReport};
use crate::solve::{SpectrumReport, DEFAULT_DENSE_CAP, DEFAULT_ZERO_TOL};
use crate::study::{operator_spectrum, run_problem, BoundaryData, Outcome, Problem, StudyError};
use crate::tensor::{ElasticMode, Material};

/// Poisson ratio substituted for `ν = 0.5` whenever an exact solution needs
/// the (then singular) stiffness tensor.
pub const QUASI_INCOMPRESSIBLE_NU: f64 = 0.499;

/// Failure of a command, classified by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit status of the failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<StudyError> for CliError {
    fn from(e: StudyError) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

/// The batch commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Convergence,
    Spectrum,
    PsiSweep,
    Identities,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Convergence => "convergence",
            Command::Spectrum => "spectrum",
            Command::PsiSweep => "psi-sweep",
            Command::Identities => "identities",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            Command::Solve,
            Command::Convergence,
            Command::Spectrum,
            Command::PsiSweep,
            Command::Identities,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Formulation tags accepted by the `form` key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormTag {
    Stress3dI,
    Stress3dII,
    Stress3dNonsym,
    PlanarI,
    PlanarII,
    Displacement,
}

impl FormTag {
    pub const ALL: [FormTag; 6] = [
        FormTag::Stress3dI,
        FormTag::Stress3dII,
        FormTag::Stress3dNonsym,
        FormTag::PlanarI,
        FormTag::PlanarII,
        FormTag::Displacement,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FormTag::Stress3dI => "stress3d_I",
            FormTag::Stress3dII => "stress3d_II",
            FormTag::Stress3dNonsym => "stress3d_nonsym",
            FormTag::PlanarI => "planar_I",
            FormTag::PlanarII => "planar_II",
            FormTag::Displacement => "displacement",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Spatial dimension (`None` for the displacement form, which follows the mesh).
    pub fn dim(self) -> Option<usize> {
        match self {
            FormTag::Stress3dI | FormTag::Stress3dII | FormTag::Stress3dNonsym => Some(3),
            FormTag::PlanarI | FormTag::PlanarII => Some(2),
            FormTag::Displacement => None,
        }
    }
}

/// A complete run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Command named in the file (optional; the command line decides).
    pub command: Option<Command>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Elements per axis for single runs.
    pub n: Vec<usize>,
    /// Elements per axis for each refinement level.
    pub levels: Vec<Vec<usize>>,
    pub order: usize,
    pub form: FormTag,
    pub e: f64,
    pub nu: f64,
    /// Absolute `ω`; `None` means `omega_factor · χ`.
    pub omega: Option<f64>,
    /// Absolute `ψ`; `None` means `χ`.
    pub psi: Option<f64>,
    pub mode: ElasticMode,
    pub plan: String,
    pub benchmark: BenchmarkName,
    pub rhs: RhsMethod,
    pub boundary_data: BoundaryData,
    pub out: PathBuf,
    /// Poisson ratios of the spectrum and ψ sweeps.
    pub nu_list: Vec<f64>,
    /// Boundary plans of the spectrum sweep.
    pub plans: Vec<String>,
    /// Multiples of `χ` used for `ω` (stress3d_II) or `ψ` (planar_I) in spectrum sweeps.
    pub factors: Vec<f64>,
    /// Multiples `k` of `χ` used for `ψ` in the ψ sweep.
    pub k_list: Vec<f64>,
    /// Constitutive modes of the ψ sweep.
    pub modes: Vec<ElasticMode>,
    pub zero_tol: f64,
    pub dense_cap: usize,
    /// Random fields per identity.
    pub samples: usize,
    pub seed: u64,
    /// Sample points per axis of the invariant-field output.
    pub grid: usize,
    /// Also run the displacement form in convergence studies.
    pub compare_displacement: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            lo: vec![-1.0; 3],
            hi: vec![1.0; 3],
            n: vec![2],
            levels: vec![vec![2], vec![3], vec![4]],
            order: 3,
            form: FormTag::Stress3dI,
            e: 200.0,
            nu: 0.25,
            omega: None,
            psi: None,
            mode: ElasticMode::Solid3d,
            plan: "all_dirichlet".into(),
            benchmark: BenchmarkName::CubeQuintic,
            rhs: RhsMethod::Direct,
            boundary_data: BoundaryData::Projection,
            out: PathBuf::from("out"),
            nu_list: vec![0.0, 0.125, 0.25, 0.375, 0.5],
            plans: vec!["all_neumann".into(), "three_sided_neumann".into(), "all_dirichlet".into()],
            factors: vec![1.01],
            k_list: vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
            modes: vec![ElasticMode::PlaneStress, ElasticMode::PlaneStrain],
            zero_tol: DEFAULT_ZERO_TOL,
            dense_cap: DEFAULT_DENSE_CAP,
            samples: 100,
            seed: 1,
            grid: 5,
            compare_displacement: false,
        }
    }
}

/// Keys in serialization order.
const KEYS: &[&str] = &[
    "command",
    "lo",
    "hi",
    "n",
    "levels",
    "order",
    "form",
    "E",
    "nu",
    "omega",
    "psi",
    "mode",
    "plan",
    "benchmark",
    "rhs",
    "boundary_data",
    "out",
    "nu_list",
    "plans",
    "factors",
    "k_list",
    "modes",
    "zero_tol",
    "dense_cap",
    "samples",
    "seed",
    "grid",
    "compare_displacement",
];

fn cfg_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v
        .parse()
        .map_err(|_| cfg_err(format!("{key}: '{v}' is not a number")))?;
    if !x.is_finite() {
        return Err(cfg_err(format!("{key}: '{v}' is not finite")));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse()
        .map_err(|_| cfg_err(format!("{key}: '{v}' is not a non-negative integer")))
}

fn parse_list<T>(key: &str, v: &str, f: impl Fn(&str, &str) -> Result<T, CliError>) -> Result<Vec<T>, CliError> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| f(key, s))
        .collect()
}

fn parse_mode(key: &str, v: &str) -> Result<ElasticMode, CliError> {
    ElasticMode::parse(v).ok_or_else(|| cfg_err(format!("{key}: unknown mode '{v}'")))
}

fn join<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses a configuration text and validates it.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let (key, v) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(cfg_err(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
            match key {
                "command" => {
                    cfg.command = if v.is_empty() {
                        None
                    } else {
                        Some(Command::parse(v).ok_or_else(|| cfg_err(format!("unknown command '{v}'")))?)
                    }
                }
                "lo" => cfg.lo = parse_list(key, v, parse_f64)?,
                "hi" => cfg.hi = parse_list(key, v, parse_f64)?,
                "n" => cfg.n = parse_list(key, v, parse_usize)?,
                "levels" => {
                    cfg.levels = v
                        .split(';')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_list(key, s, parse_usize))
                        .collect::<Result<_, _>>()?
                }
                "order" => cfg.order = parse_usize(key, v)?,
                "form" => cfg.form = FormTag::parse(v).ok_or_else(|| cfg_err(format!("unknown form '{v}'")))?,
                "E" => cfg.e = parse_f64(key, v)?,
                "nu" => cfg.nu = parse_f64(key, v)?,
                "omega" => cfg.omega = if v.is_empty() { None } else { Some(parse_f64(key, v)?) },
                "psi" => cfg.psi = if v.is_empty() { None } else { Some(parse_f64(key, v)?) },
                "mode" => {
                    cfg.mode = parse_mode(key, v)?;
                }
                "plan" => cfg.plan = v.to_string(),
                "benchmark" => {
                    cfg.benchmark = BenchmarkName::parse(v).map_err(|e| cfg_err(e.to_string()))?
                }
                "rhs" => {
                    cfg.rhs = RhsMethod::parse(v).ok_or_else(|| cfg_err(format!("unknown rhs method '{v}'")))?
                }
                "boundary_data" => {
                    cfg.boundary_data = BoundaryData::parse(v)
                        .ok_or_else(|| cfg_err(format!("unknown boundary data method '{v}'")))?
                }
                "out" => cfg.out = PathBuf::from(v),
                "nu_list" => cfg.nu_list = parse_list(key, v, parse_f64)?,
                "plans" => cfg.plans = parse_list(key, v, |_, s| Ok(s.to_string()))?,
                "factors" => cfg.factors = parse_list(key, v, parse_f64)?,
                "k_list" => cfg.k_list = parse_list(key, v, parse_f64)?,
                "modes" => cfg.modes = parse_list(key, v, parse_mode)?,
                "zero_tol" => cfg.zero_tol = parse_f64(key, v)?,
                "dense_cap" => cfg.dense_cap = parse_usize(key, v)?,
                "samples" => cfg.samples = parse_usize(key, v)?,
                "seed" => cfg.seed = v.parse().map_err(|_| cfg_err(format!("seed: '{v}' is not an integer")))?,
                "grid" => cfg.grid = parse_usize(key, v)?,
                "compare_displacement" => {
                    cfg.compare_displacement = match v {
                        "true" => true,
                        "false" => false,
                        _ => return Err(cfg_err(format!("compare_displacement: expected true or false, got '{v}'"))),
                    }
                }
                _ => return Err(cfg_err(format!("line {}: unknown key '{key}'", lineno + 1))),
            }
        }
        // Dimension-dependent defaults for keys the file leaves out.
        if cfg.lo.len() == 2 {
            if !seen.contains("mode") {
                cfg.mode = ElasticMode::PlaneStress;
            }
            if !seen.contains("plans") {
                cfg.plans = vec!["all_neumann".into(), "half_split_2d".into(), "all_dirichlet".into()];
            }
            if !seen.contains("benchmark") {
                cfg.benchmark = BenchmarkName::PlanarShear;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads and parses a configuration file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read config '{}': {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text form; parsing it yields an identical configuration.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        for key in KEYS {
            let v = match *key {
                "command" => self.command.map(|c| c.name().to_string()).unwrap_or_default(),
                "lo" => join(&self.lo),
                "hi" => join(&self.hi),
                "n" => join(&self.n),
                "levels" => self.levels.iter().map(|l| join(l)).collect::<Vec<_>>().join(";"),
                "order" => self.order.to_string(),
                "form" => self.form.name().into(),
                "E" => self.e.to_string(),
                "nu" => self.nu.to_string(),
                "omega" => self.omega.map(|x| x.to_string()).unwrap_or_default(),
                "psi" => self.psi.map(|x| x.to_string()).unwrap_or_default(),
                "mode" => self.mode.name().into(),
                "plan" => self.plan.clone(),
                "benchmark" => self.benchmark.name().into(),
                "rhs" => self.rhs.name().into(),
                "boundary_data" => self.boundary_data.name().into(),
                "out" => self.out.display().to_string(),
                "nu_list" => join(&self.nu_list),
                "plans" => self.plans.join(","),
                "factors" => join(&self.factors),
                "k_list" => join(&self.k_list),
                "modes" => self.modes.iter().map(|m| m.name()).collect::<Vec<_>>().join(","),
                "zero_tol" => self.zero_tol.to_string(),
                "dense_cap" => self.dense_cap.to_string(),
                "samples" => self.samples.to_string(),
                "seed" => self.seed.to_string(),
                "grid" => self.grid.to_string(),
                "compare_displacement" => self.compare_displacement.to_string(),
                _ => unreachable!("every key is serialized"),
            };
            let _ = writeln!(s, "{key} = {v}");
        }
        s
    }

    /// Spatial dimension.
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Enforces the compatibility rules between keys.
    pub fn validate(&self) -> Result<(), CliError> {
        let d = self.dim();
        let geometry = |n: &[usize]| -> Result<BoxSpec, CliError> {
            let n = self.expand_n(n)?;
            BoxSpec::new(self.lo.clone(), self.hi.clone(), n).map_err(|e| cfg_err(e.to_string()))
        };
        geometry(&self.n)?;
        for l in &self.levels {
            geometry(l)?;
        }
        if !(1..=3).contains(&self.order) {
            return Err(cfg_err(format!("order must be 1, 2 or 3, got {}", self.order)));
        }
        if let Some(fd) = self.form.dim() {
            if fd != d {
                return Err(cfg_err(format!("form {} needs a {fd}D box, got {d}D", self.form.name())));
            }
        }
        if self.mode.dim() != d {
            return Err(cfg_err(format!("mode {} does not fit a {d}D box", self.mode)));
        }
        Material::new(self.e, self.nu).map_err(|e| cfg_err(e.to_string()))?;
        for &nu in &self.nu_list {
            Material::new(self.e, nu).map_err(|e| cfg_err(format!("nu_list: {e}")))?;
        }
        if let Some(w) = self.omega {
            if w < 0.0 {
                return Err(cfg_err(format!("omega must be non-negative, got {w}")));
            }
        }
        if let Some(psi) = self.psi {
            if psi <= 0.0 {
                return Err(cfg_err(format!("psi must be positive, got {psi}")));
            }
        }
        if self.k_list.iter().any(|&k| k <= 0.0) {
            return Err(cfg_err("k_list entries must be positive (k = 0 gives psi = 0)"));
        }
        if self.factors.iter().any(|&f| f < 0.0) {
            return Err(cfg_err("factors must be non-negative"));
        }
        if self.modes.iter().any(|m| m.dim() != 2) {
            return Err(cfg_err("modes must be planar"));
        }
        for plan in std::iter::once(&self.plan).chain(&self.plans) {
            let p = BoundaryPlan::parse(plan).map_err(|e| cfg_err(e.to_string()))?;
            let ok = match p {
                BoundaryPlan::ThreeSidedNeumann => d == 3,
                BoundaryPlan::HalfSplit2d => d == 2,
                _ => true,
            };
            if !ok {
                return Err(cfg_err(format!("plan {plan} is not defined in {d}D")));
            }
        }
        if self.benchmark.dim() != d {
            return Err(cfg_err(format!(
                "benchmark {} is {}D, box is {d}D",
                self.benchmark.name(),
                self.benchmark.dim()
            )));
        }
        if !(self.zero_tol > 0.0) {
            return Err(cfg_err("zero_tol must be positive"));
        }
        if self.grid < 2 {
            return Err(cfg_err("grid must be at least 2"));
        }
        Ok(())
    }

    fn expand_n(&self, n: &[usize]) -> Result<Vec<usize>, CliError> {
        match n.len() {
            1 => Ok(vec![n[0]; self.dim()]),
            l if l == self.dim() => Ok(n.to_vec()),
            l => Err(cfg_err(format!("n lists must have 1 or {} entries, got {l}", self.dim()))),
        }
    }

    /// Box for a given subdivision.
    pub fn geometry(&self, n: &[usize]) -> Result<BoxSpec, CliError> {
        BoxSpec::new(self.lo.clone(), self.hi.clone(), self.expand_n(n)?).map_err(|e| cfg_err(e.to_string()))
    }

    /// Formulation at Poisson ratio `nu` with the configured parameters; for a
    /// stress3d_II/planar_I spectrum sweep `factor` overrides `ω`/`ψ` as a multiple of `χ`.
    pub fn formulation(&self, tag: FormTag, nu: f64, factor: Option<f64>) -> Result<Formulation, CliError> {
        let mat = Material::new(self.e, nu).map_err(|e| cfg_err(e.to_string()))?;
        let chi = mat.chi(self.mode);
        let kind = match tag {
            FormTag::Stress3dI => FormKind::Stress3dI,
            FormTag::Stress3dII => FormKind::Stress3dII {
                omega: match factor {
                    Some(f) => f * chi,
                    None => self.omega.unwrap_or(1.01 * chi),
                },
            },
            FormTag::Stress3dNonsym => FormKind::Stress3dNonsym,
            FormTag::PlanarI => FormKind::PlanarI {
                psi: match factor {
                    Some(f) => f * chi,
                    None => self.psi.unwrap_or(chi),
                },
                mode: self.mode,
            },
            FormTag::PlanarII => FormKind::PlanarII { mode: self.mode },
            FormTag::Displacement => FormKind::Displacement { mode: self.mode },
        };
        Formulation::new(kind, mat).map_err(|e| cfg_err(e.to_string()))
    }

    fn benchmark_nu(&self, nu: f64, mode: ElasticMode) -> f64 {
        if mode != ElasticMode::PlaneStress && nu >= 0.5 {
            QUASI_INCOMPRESSIBLE_NU
        } else {
            nu
        }
    }

    /// The benchmark problem for subdivision `n` (`ν = 0.5` is replaced by
    /// 0.499 where the exact solution needs the stiffness tensor).
    pub fn problem(&self, tag: FormTag, n: &[usize]) -> Result<Problem, CliError> {
        let nu = self.benchmark_nu(self.nu, self.mode);
        Ok(Problem {
            geometry: self.geometry(n)?,
            plan: BoundaryPlan::parse(&self.plan).map_err(|e| cfg_err(e.to_string()))?,
            order: self.order,
            form: self.formulation(tag, nu, None)?,
            benchmark: self.benchmark,
            rhs: self.rhs,
            boundary: self.boundary_data,
        })
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

/// Summary of a finished command.
#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    /// Human-readable report lines.
    pub lines: Vec<String>,
    /// Files written.
    pub files: Vec<PathBuf>,
}

fn error_row_line(out: &Outcome) -> String {
    let r = out.row();
    format!(
        "{},{},{},{},{},{},{},{}",
        r.dofs,
        r.n,
        fmt_f64(r.err_sigma),
        fmt_f64(r.err_vm),
        fmt_f64(r.err_mean),
        out.free_dofs,
        out.report.path,
        fmt_f64(out.report.relative_residual)
    )
}

/// `solve`: one benchmark solve; writes `solution.csv`, `errors.csv` and
/// `invariants.csv`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let problem = cfg.problem(cfg.form, &cfg.n)?;
    let out = run_problem(&problem)?;
    let space = &out.space;
    let d = space.dim();
    let m = space.components();
    let axes = ["x", "y", "z"];

    let mut sol = String::from("node");
    for a in axes.iter().take(d) {
        let _ = write!(sol, ",{a}");
    }
    for c in 0..m {
        let _ = write!(sol, ",c{c}");
    }
    sol.push('\n');
    for node in 0..space.num_nodes() {
        let _ = write!(sol, "{node}");
        for x in space.node_coords(node) {
            let _ = write!(sol, ",{}", fmt_f64(x));
        }
        for c in 0..m {
            let _ = write!(sol, ",{}", fmt_f64(out.coeffs[node * m + c]));
        }
        sol.push('\n');
    }

    let errors = format!(
        "dofs,n,err_sigma,err_vm,err_mean,free_dofs,solver,residual\n{}\n",
        error_row_line(&out)
    );

    // Invariant fields on a uniform grid of sample points.
    let mut inv = String::new();
    for a in axes.iter().take(d) {
        let _ = write!(inv, "{a},");
    }
    inv.push_str("von_mises,mean\n");
    let mesh = space.mesh();
    let spec = mesh.spec();
    let g = cfg.grid;
    let material = problem.form.material();
    for i in 0..g.pow(d as u32) {
        let mut r = i;
        let x: Vec<f64> = (0..d)
            .map(|k| {
                let t = (r % g) as f64 / (g - 1) as f64;
                r /= g;
                spec.lo[k] + t * (spec.hi[k] - spec.lo[k])
            })
            .collect();
        // Locate the element and reference coordinates of x.
        let mut eidx = vec![0usize; d];
        let mut xi = vec![0.0; d];
        for k in 0..d {
            let s = (x[k] - spec.lo[k]) / mesh.h()[k];
            let e = (s.floor() as usize).min(spec.n[k] - 1);
            eidx[k] = e;
            xi[k] = (s - e as f64).clamp(0.0, 1.0);
        }
        let e = (0..d).rev().fold(0, |acc, k| acc * spec.n[k] + eidx[k]);
        let basis = local_basis(space.order(), &xi).map_err(|e| CliError::Numerical(e.to_string()))?;
        let (val, grad) = space.evaluate_with(&out.coeffs, &space.element_dofs(e), &basis);
        let stress = if problem.form.is_displacement() {
            let (a, b) = material
                .coefficients(problem.form.mode(), crate::tensor::Direction::Stiffness)
                .map_err(|e| cfg_err(e.to_string()))?;
            let tr: f64 = (0..d).map(|q| grad[q][q]).sum();
            crate::tensor::voigt_pairs(d)
                .iter()
                .map(|&(p, q)| a * 0.5 * (grad[p][q] + grad[q][p]) + if p == q { b * tr } else { 0.0 })
                .collect()
        } else {
            val
        };
        let iv = packed_invariants(d, &stress);
        for xk in &x {
            let _ = write!(inv, "{},", fmt_f64(*xk));
        }
        let _ = writeln!(inv, "{},{}", fmt_f64(iv.von_mises), fmt_f64(iv.mean));
    }

    let files = vec![
        write_file(&cfg.out, "solution.csv", &sol)?,
        write_file(&cfg.out, "errors.csv", &errors)?,
        write_file(&cfg.out, "invariants.csv", &inv)?,
    ];
    Ok(CommandOutput {
        lines: vec![format!(
            "{} {} p={} dofs={} rel_err_sigma={:.4e} rel_err_vm={:.4e} rel_err_mean={:.4e} solver={}",
            problem.form.tag(),
            cfg.plan,
            cfg.order,
            out.dofs(),
            out.sigma.relative.unwrap_or(f64::NAN),
            out.von_mises.relative.unwrap_or(f64::NAN),
            out.mean.relative.unwrap_or(f64::NAN),
            out.report.path
        )],
        files,
    })
}

/// Runs every refinement level of a study; failed levels are reported and skipped.
pub fn convergence_rows(cfg: &RunConfig, tag: FormTag) -> Result<(ConvergenceReport, Vec<String>), CliError> {
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for level in &cfg.levels {
        let problem = cfg.problem(tag, level)?;
        match run_problem(&problem) {
            Ok(out) => rows.push(out.row()),
            Err(e) if e.is_numerical() => failures.push(format!("level {level:?}: {e}")),
            Err(e) => return Err(e.into()),
        }
    }
    let report = ConvergenceReport::new(rows).map_err(|e| cfg_err(e.to_string()))?;
    Ok((report, failures))
}

/// `convergence`: one solve per level; writes `convergence.csv` (and
/// `convergence_displacement.csv` when the displacement overlay is enabled).
pub fn cmd_convergence(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    if cfg.levels.len() < 2 {
        return Err(cfg_err("convergence: ≥ 2 levels required in 'levels'"));
    }
    let mut tags = vec![(cfg.form, "convergence.csv")];
    if cfg.compare_displacement && cfg.form != FormTag::Displacement {
        tags.push((FormTag::Displacement, "convergence_displacement.csv"));
    }
    let mut lines = Vec::new();
    let mut files = Vec::new();
    let mut all_failures = Vec::new();
    for (tag, file) in tags {
        let (report, failures) = convergence_rows(cfg, tag)?;
        for r in &report.rows {
            lines.push(format!(
                "{} dofs={} n={} rel_err_sigma={:.4e}",
                tag.name(),
                r.dofs,
                r.n,
                r.err_sigma
            ));
        }
        if let Some(f) = &report.sigma_rates {
            lines.push(format!("{} last-pair slope {:.3}", tag.name(), f.last));
        }
        for f in &failures {
            lines.push(format!("{} FAILED {f}", tag.name()));
        }
        all_failures.extend(failures);
        files.push(write_file(&cfg.out, file, &report.to_csv())?);
    }
    if !all_failures.is_empty() {
        return Err(CliError::Numerical(format!(
            "{} level(s) failed: {}",
            all_failures.len(),
            all_failures.join("; ")
        )));
    }
    Ok(CommandOutput { lines, files })
}

/// `spectrum`: one eigendecomposition per (plan, ν, factor); writes one CSV
/// per spectrum plus `spectrum_summary.csv` and the wide `spectrum_table.csv`.
pub fn cmd_spectrum(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let factors: Vec<Option<f64>> = match cfg.form {
        FormTag::Stress3dII | FormTag::PlanarI => cfg.factors.iter().map(|&f| Some(f)).collect(),
        _ => vec![None],
    };
    let geometry = cfg.geometry(&cfg.n)?;
    let mut reports: Vec<SpectrumReport> = Vec::new();
    let mut files = Vec::new();
    let mut lines = Vec::new();
    for plan_name in &cfg.plans {
        let plan = BoundaryPlan::parse(plan_name).map_err(|e| cfg_err(e.to_string()))?;
        for &nu in &cfg.nu_list {
            for factor in &factors {
                let form = cfg.formulation(cfg.form, nu, *factor)?;
                if !form.is_symmetric() {
                    return Err(cfg_err("spectra require a symmetric formulation"));
                }
                let dofs = geometry.n.iter().map(|&n| cfg.order * n + 1).product::<usize>() * form.components();
                if dofs > cfg.dense_cap {
                    return Err(CliError::Numerical(format!(
                        "{dofs} dofs exceed the dense cap {}; use a smaller mesh",
                        cfg.dense_cap
                    )));
                }
                let r = operator_spectrum(&geometry, &plan, cfg.order, &form, cfg.zero_tol)?;
                let suffix = factor.map(|f| format!("_f{f}")).unwrap_or_default();
                let name = format!("spectrum_{}_{}_nu{}{}.csv", cfg.form.name(), plan_name, nu, suffix);
                files.push(write_file(&cfg.out, &name, &r.to_csv())?);
                lines.push(format!(
                    "{} {} nu={} param={} dim={} negative={} ({:.4}%) zero={}",
                    cfg.form.name(),
                    plan_name,
                    nu,
                    r.meta.parameter.map_or("-".into(), |p| format!("{p:.6}")),
                    r.dim(),
                    r.negative,
                    r.negative_percent(r.meta.dofs),
                    r.zero
                ));
                reports.push(r);
            }
        }
    }
    let mut summary =
        String::from("formulation,plan,nu,parameter,dofs,dim,negative,zero,positive,negative_percent,threshold\n");
    for r in &reports {
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.meta.formulation,
            r.meta.plan,
            fmt_f64(r.meta.nu),
            r.meta.parameter.map(fmt_f64).unwrap_or_default(),
            r.meta.dofs,
            r.dim(),
            r.negative,
            r.zero,
            r.positive,
            fmt_f64(r.negative_percent(r.meta.dofs)),
            fmt_f64(r.threshold)
        );
    }
    files.push(write_file(&cfg.out, "spectrum_summary.csv", &summary)?);
    if factors.len() == 1 {
        let mut table = String::from("nu");
        for p in &cfg.plans {
            let _ = write!(table, ",{p}_negative_percent,{p}_zero");
        }
        table.push('\n');
        for (i, &nu) in cfg.nu_list.iter().enumerate() {
            let _ = write!(table, "{}", fmt_f64(nu));
            for (j, _) in cfg.plans.iter().enumerate() {
                let r = &reports[j * cfg.nu_list.len() + i];
                let _ = write!(table, ",{},{}", fmt_f64(r.negative_percent(r.meta.dofs)), r.zero);
            }
            table.push('\n');
        }
        files.push(write_file(&cfg.out, "spectrum_table.csv", &table)?);
    }
    Ok(CommandOutput { lines, files })
}

/// `psi-sweep`: planar_I relative errors over `k` (ψ = kχ), ν and modes;
/// writes `psi_sweep.csv`.
pub fn cmd_psi_sweep(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    if cfg.form != FormTag::PlanarI {
        return Err(cfg_err("psi-sweep requires form = planar_I"));
    }
    if cfg.benchmark == BenchmarkName::CubeQuintic {
        return Err(cfg_err("psi-sweep requires a planar benchmark"));
    }
    let mut csv = String::from("mode,nu,k,psi,dofs,err_sigma\n");
    let mut lines = Vec::new();
    for &mode in &cfg.modes {
        for &nu in &cfg.nu_list {
            for &k in &cfg.k_list {
                let mut c = cfg.clone();
                c.mode = mode;
                c.nu = nu;
                let mut problem = c.problem(FormTag::PlanarI, &c.n)?;
                let mat = problem.form.material();
                let psi = k * mat.chi(mode);
                problem.form = Formulation::new(FormKind::PlanarI { psi, mode }, mat)
                    .map_err(|e| cfg_err(e.to_string()))?;
                let out = run_problem(&problem)?;
                let err = out.sigma.relative.unwrap_or(f64::NAN);
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{}",
                    mode,
                    fmt_f64(mat.nu),
                    fmt_f64(k),
                    fmt_f64(psi),
                    out.dofs(),
                    fmt_f64(err)
                );
                lines.push(format!("{mode} nu={} k={k} rel_err={err:.4e}", mat.nu));
            }
        }
    }
    let files = vec![write_file(&cfg.out, "psi_sweep.csv", &csv)?];
    Ok(CommandOutput { lines, files })
}

/// Runs an identity list and writes `identities.csv`; fails with a check
/// error if any identity fails.
pub fn cmd_identities_with(
    identities: &[Identity],
    samples: usize,
    seed: u64,
    out: &Path,
) -> Result<CommandOutput, CliError> {
    let outcomes: Vec<IdentityOutcome> = run_identity_suite(identities, samples, seed);
    let mut csv = String::from("name,dim,samples,max_relative,passed\n");
    let mut lines = Vec::new();
    for o in &outcomes {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            o.name,
            o.dim,
            o.samples,
            fmt_f64(o.max_relative),
            o.passed
        );
        lines.push(format!(
            "{:<24} {}D  max rel residual {:.3e}  {}",
            o.name,
            o.dim,
            o.max_relative,
            if o.passed { "PASS" } else { "FAIL" }
        ));
    }
    let files = vec![write_file(out, "identities.csv", &csv)?];
    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.name.as_str()).collect();
    if !failed.is_empty() {
        for l in &lines {
            eprintln!("{l}");
        }
        return Err(CliError::Check(format!("identities failed: {}", failed.join(", "))));
    }
    Ok(CommandOutput { lines, files })
}

/// `identities`: the full registry.
pub fn cmd_identities(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    cmd_identities_with(&registry(), cfg.samples, cfg.seed, &cfg.out)
}

/// Dispatches a command; a `command` key in the file must agree with it.
pub fn run_command(command: Command, cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(cfg_err(format!(
                "config is for command '{c}', but '{command}' was requested"
            )));
        }
    }
    match command {
        Command::Solve => cmd_solve(cfg),
        Command::Convergence => cmd_convergence(cfg),
        Command::Spectrum => cmd_spectrum(cfg),
        Command::PsiSweep => cmd_psi_sweep(cfg),
        Command::Identities => cmd_identities(cfg),
    }
}
