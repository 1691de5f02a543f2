//! Parameter sweeps and the verification driver behind the command line.
//!
//! Every sweep point assembles the system on an `N × N` mesh, starts from a
//! Gaussian disturbance in the top layer and takes one implicit midpoint step,
//! recording the GMRES iteration count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis::{verify_chi_window, verify_infsup_continuity};
use crate::error::{Error, Result};
use crate::fem::BoundaryCondition;
use crate::krylov::{GmresOptions, DEFAULT_MAX_ITER};
use crate::layers::{coupling_inverse, coupling_matrix, ldlt, spectral_bounds, LayerStack};
use crate::mesh::build_unit_square_mesh;
use crate::precond::{
    apply_l_inverse, build_preconditioner, reformed_matrix, weighted_norm_matrix, InnerSolver, Variant,
};
use crate::sparse::DenseMatrix;
use crate::system::{
    assemble_block_system, energy, initial_disturbance, midpoint_step_as, midpoint_step_unchecked, PhysicalParams,
    StepUnknown,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    FrSweep,
    CflSweep,
    LayerSweep,
    Verify,
}

impl FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fr-sweep" => Ok(Self::FrSweep),
            "cfl-sweep" => Ok(Self::CflSweep),
            "layer-sweep" => Ok(Self::LayerSweep),
            "verify" => Ok(Self::Verify),
            _ => Err(Error::Config(format!(
                "unknown experiment '{s}' (expected fr-sweep, cfl-sweep, layer-sweep or verify)"
            ))),
        }
    }
}

pub fn parse_variant(s: &str) -> Result<Variant> {
    match s {
        "ilu" => Ok(Variant::FullIlu0),
        "wtd-norm" => Ok(Variant::WeightedNorm),
        "layer-decoupled" => Ok(Variant::LayerDecoupled),
        "tridiag" => Ok(Variant::TridiagonalReform),
        _ => Err(Error::Config(format!(
            "unknown preconditioner '{s}' (expected ilu, wtd-norm, layer-decoupled or tridiag)"
        ))),
    }
}

pub fn parse_inner(s: &str) -> Result<InnerSolver> {
    match s {
        "exact" => Ok(InnerSolver::ExactDirect),
        "ilu0" => Ok(InnerSolver::Ilu0),
        _ => Err(Error::Config(format!("unknown inner solver '{s}' (expected exact or ilu0)"))),
    }
}

pub fn parse_unknown(s: &str) -> Result<StepUnknown> {
    match s {
        "stage" => Ok(StepUnknown::StageDerivative),
        "midpoint" => Ok(StepUnknown::Midpoint),
        _ => Err(Error::Config(format!("unknown step unknown '{s}' (expected stage or midpoint)"))),
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    let items: Vec<T> = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse '{s}'"))))
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Config(format!("{key}: empty list")));
    }
    Ok(items)
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{value}'")))
}

/// Read `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub pc: Variant,
    pub inner: InnerSolver,
    pub mesh_sizes: Vec<usize>,
    pub layers: Vec<usize>,
    pub density_min: f64,
    pub density_max: f64,
    pub fr: Vec<f64>,
    pub cfl: Vec<f64>,
    pub epsilon: f64,
    /// Bottom-layer damping coefficient.
    pub damping: f64,
    pub rtol: f64,
    pub max_iter: usize,
    pub amplitude: f64,
    pub width: f64,
    pub seed: u64,
    /// Unknown of the per-step solve; the sweeps pose it in the stage
    /// derivative by default.
    pub unknown: StepUnknown,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            pc: Variant::WeightedNorm,
            inner: InnerSolver::ExactDirect,
            mesh_sizes: vec![8, 16, 32, 64],
            layers: vec![5],
            density_min: 1.03,
            density_max: 1.06,
            fr: vec![0.1, 0.5, 1.0, 3.0],
            cfl: vec![1.0],
            epsilon: 1.0,
            damping: 0.0,
            rtol: 1e-5,
            max_iter: DEFAULT_MAX_ITER,
            amplitude: 0.01,
            width: 0.1,
            seed: 0,
            unknown: StepUnknown::StageDerivative,
            out: None,
        };
        match experiment {
            Experiment::FrSweep => {}
            Experiment::CflSweep => {
                c.fr = vec![1.0];
                c.cfl = vec![0.5, 1.0, 2.0, 4.0, 20.0];
            }
            Experiment::LayerSweep => {
                c.mesh_sizes = vec![64];
                c.layers = (2..=10).collect();
                c.fr = vec![1.0];
                c.cfl = vec![2.0];
            }
            Experiment::Verify => {
                c.mesh_sizes = vec![8];
                c.fr = vec![1.0];
            }
        }
        c
    }

    /// Apply one `key = value` setting; keys match the long flag names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = value.parse()?,
            "pc" => self.pc = parse_variant(value)?,
            "inner" => self.inner = parse_inner(value)?,
            "mesh-sizes" => self.mesh_sizes = parse_list(key, value)?,
            "layers" => self.layers = parse_list(key, value)?,
            "density-min" => self.density_min = parse_one(key, value)?,
            "density-max" => self.density_max = parse_one(key, value)?,
            "fr" => self.fr = parse_list(key, value)?,
            "cfl" => self.cfl = parse_list(key, value)?,
            "epsilon" => self.epsilon = parse_one(key, value)?,
            "damping" => self.damping = parse_one(key, value)?,
            "rtol" => self.rtol = parse_one(key, value)?,
            "max-iter" => self.max_iter = parse_one(key, value)?,
            "amplitude" => self.amplitude = parse_one(key, value)?,
            "width" => self.width = parse_one(key, value)?,
            "seed" => self.seed = parse_one(key, value)?,
            "unknown" => self.unknown = parse_unknown(value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.mesh_sizes.is_empty() || self.mesh_sizes.contains(&0) {
            return bad("mesh sizes must be a nonempty list of positive integers");
        }
        if self.layers.is_empty() || self.layers.contains(&0) {
            return bad("layer counts must be a nonempty list of positive integers");
        }
        if self.fr.is_empty() || self.fr.iter().any(|f| !(*f > 0.0)) {
            return bad("Froude numbers must be positive");
        }
        if self.cfl.is_empty() || self.cfl.iter().any(|f| !(*f > 0.0)) {
            return bad("CFL numbers must be positive");
        }
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.damping >= 0.0) {
            return bad("damping must be nonnegative");
        }
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return bad("rtol must lie in (0, 1)");
        }
        if self.max_iter == 0 {
            return bad("max-iter must be positive");
        }
        if matches!(self.experiment, Experiment::FrSweep | Experiment::CflSweep) && self.layers.len() != 1 {
            return bad("Fr and CFL sweeps take a single layer count");
        }
        if self.experiment == Experiment::FrSweep && self.cfl.len() != 1 {
            return bad("the Fr sweep takes a single CFL value");
        }
        if self.experiment == Experiment::CflSweep && self.fr.len() != 1 {
            return bad("the CFL sweep takes a single Froude number");
        }
        for &n in &self.layers {
            self.stack(n)?;
        }
        Ok(())
    }

    pub fn stack(&self, n_layers: usize) -> Result<LayerStack> {
        LayerStack::equidistributed(n_layers, self.density_min, self.density_max)
    }

    fn gmres_options(&self) -> GmresOptions {
        GmresOptions {
            rtol: self.rtol,
            max_iter: self.max_iter,
            check_orthogonality: false,
        }
    }
}

/// Outcome of one implicit midpoint step.
#[derive(Debug, Clone, Copy)]
pub struct StepResult {
    pub iterations: usize,
    pub converged: bool,
    pub relative_residual: f64,
}

/// Point parameters: mesh `N × N`, `n_layers`, Froude number, CFL = Δt/h.
#[allow(clippy::too_many_arguments)]
pub fn run_point(
    config: &ExperimentConfig,
    n: usize,
    n_layers: usize,
    fr: f64,
    cfl: f64,
    variant: Variant,
    inner: InnerSolver,
) -> Result<StepResult> {
    let mesh = build_unit_square_mesh(n, n)?;
    let stack = config.stack(n_layers)?;
    let dt = cfl * mesh.h();
    let params = PhysicalParams::new(fr, 1.0 / config.epsilon, dt / 2.0, n_layers).with_bottom_damping(config.damping);
    let sys = assemble_block_system(&mesh, &stack, &params)?;
    let state = initial_disturbance(&mesh, &stack, BoundaryCondition::NormalTraceZero, config.amplitude, config.width)?;
    let pc = build_preconditioner(&sys, variant, inner)?;
    let (_, report) = midpoint_step_as(&sys, &state, dt, &pc, &config.gmres_options(), None, config.unknown)?;
    Ok(StepResult {
        iterations: report.iterations,
        converged: report.converged,
        relative_residual: report.relative_residual,
    })
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    /// Emitted as `#` comment lines ahead of the header.
    pub metadata: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Raw results: (row key, column label, result).
    pub points: Vec<(usize, String, StepResult)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for m in &self.metadata {
            let _ = writeln!(out, "# {m}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }

    pub fn iterations(&self, row: usize, column: &str) -> Option<usize> {
        self.points
            .iter()
            .find(|(r, c, _)| *r == row && c == column)
            .map(|p| p.2.iterations)
    }
}

const LAYER_SWEEP_SOLVERS: [(&str, Variant, InnerSolver); 5] = [
    ("ilu", Variant::FullIlu0, InnerSolver::Ilu0),
    ("wtd_norm_lu", Variant::WeightedNorm, InnerSolver::ExactDirect),
    ("layer_decoupled_lu", Variant::LayerDecoupled, InnerSolver::ExactDirect),
    ("wtd_norm_ilu", Variant::WeightedNorm, InnerSolver::Ilu0),
    ("layer_decoupled_ilu", Variant::LayerDecoupled, InnerSolver::Ilu0),
];

pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    config.validate()?;
    let mut metadata = vec![
        "CFL := dt/h = dt*max(nx,ny)".to_string(),
        format!(
            "densities equidistributed on [{}, {}], unit rest thicknesses, closed basin",
            config.density_min, config.density_max
        ),
        format!(
            "epsilon = {}, bottom damping = {}, GMRES rtol = {}, cap = {}",
            config.epsilon, config.damping, config.rtol, config.max_iter
        ),
        "unconverged solves are recorded at the cap and flagged in the last column".to_string(),
        format!(
            "one implicit midpoint step from rest plus a top-layer disturbance, solved for the {}",
            match config.unknown {
                StepUnknown::StageDerivative => "stage derivative",
                StepUnknown::Midpoint => "midpoint state",
            }
        ),
    ];
    let mut points = Vec::new();
    let mut rows = Vec::new();
    let header;

    match config.experiment {
        Experiment::FrSweep | Experiment::CflSweep => {
            let by_fr = config.experiment == Experiment::FrSweep;
            let values = if by_fr { &config.fr } else { &config.cfl };
            let layers = config.layers[0];
            metadata.push(format!(
                "{} sweep: {} layers, preconditioner {}, inner {:?}, {}",
                if by_fr { "Fr" } else { "CFL" },
                layers,
                config.pc,
                config.inner,
                if by_fr { format!("CFL = {}", config.cfl[0]) } else { format!("Fr = {}", config.fr[0]) }
            ));
            let mut h = vec!["N".to_string()];
            h.extend(values.iter().map(|v| format!("{v:?}")));
            h.push("all_converged".to_string());
            header = h;
            for &n in &config.mesh_sizes {
                let mut row = vec![n.to_string()];
                let mut ok = true;
                for &v in values {
                    let (fr, cfl) = if by_fr { (v, config.cfl[0]) } else { (config.fr[0], v) };
                    let r = run_point(config, n, layers, fr, cfl, config.pc, config.inner)?;
                    ok &= r.converged;
                    row.push(r.iterations.to_string());
                    points.push((n, format!("{v:?}"), r));
                }
                row.push(u8::from(ok).to_string());
                rows.push(row);
            }
        }
        Experiment::LayerSweep => {
            let n = config.mesh_sizes[0];
            metadata.push(format!(
                "layer sweep on {n}x{n}: Fr = {}, CFL = {} (dt = {}); Fr = epsilon = 1 is an assumption",
                config.fr[0],
                config.cfl[0],
                config.cfl[0] / n as f64
            ));
            let mut h = vec!["Nlayers".to_string()];
            h.extend(LAYER_SWEEP_SOLVERS.iter().map(|s| s.0.to_string()));
            h.push("all_converged".to_string());
            header = h;
            for &layers in &config.layers {
                let mut row = vec![layers.to_string()];
                let mut ok = true;
                for (label, variant, inner) in LAYER_SWEEP_SOLVERS {
                    let r = run_point(config, n, layers, config.fr[0], config.cfl[0], variant, inner)?;
                    ok &= r.converged;
                    row.push(r.iterations.to_string());
                    points.push((layers, label.to_string(), r));
                }
                row.push(u8::from(ok).to_string());
                rows.push(row);
            }
        }
        Experiment::Verify => {
            return Err(Error::Config("use run_verification for the verify experiment".into()));
        }
    }
    Ok(SweepTable {
        metadata,
        header,
        rows,
        points,
    })
}

struct Suite {
    text: String,
    ok: bool,
}

impl Suite {
    fn record(&mut self, name: &str, passed: bool, detail: impl AsRef<str>) {
        self.ok &= passed;
        let _ = writeln!(
            self.text,
            "[{}] {name}: {}",
            if passed { "PASS" } else { "FAIL" },
            detail.as_ref()
        );
    }

    fn error(&mut self, name: &str, e: &Error) {
        self.record(name, false, format!("error: {e}"));
    }
}

fn random_stack(rng: &mut ChaCha8Rng, n: usize) -> Result<LayerStack> {
    let rho1: f64 = rng.gen_range(0.5..2.0);
    let span = rho1 * rng.gen_range(0.05..1.0);
    let w: Vec<f64> = (1..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = w.iter().sum();
    let mut rho = vec![rho1];
    for wi in w {
        rho.push(rho.last().unwrap() + span * wi / total);
    }
    LayerStack::new(rho, vec![1.0; n])
}

/// Run the layer-algebra, energy, reformulation and stability suites.
/// Returns the report and whether every check passed.
pub fn run_verification(config: &ExperimentConfig) -> Result<(String, bool)> {
    config.validate()?;
    let mut s = Suite {
        text: String::new(),
        ok: true,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_mesh = config.mesh_sizes[0];
    let fr = config.fr[0];

    // layer algebra on the configured stacks and on random ones
    let mut stacks: Vec<LayerStack> = config.layers.iter().map(|&n| config.stack(n)).collect::<Result<_>>()?;
    for _ in 0..100 {
        let n = rng.gen_range(1..=50);
        stacks.push(random_stack(&mut rng, n)?);
    }
    let (mut worst_inv, mut worst_ldl, mut bracket_fail) = (0.0f64, 0.0f64, 0usize);
    for st in &stacks {
        let n = st.n_layers();
        let c = coupling_inverse(st);
        let prod = c.to_dense().matmul(&coupling_matrix(st));
        worst_inv = worst_inv.max(prod.max_abs_diff(&DenseMatrix::identity(n)) / n as f64);
        match ldlt(&c) {
            Ok(f) => {
                let scale = c.diag.iter().fold(0.0f64, |m, d| m.max(d.abs()));
                worst_ldl = worst_ldl.max(f.reconstruct().max_abs_diff(&c.to_dense()) / scale);
            }
            Err(e) => s.error("LDLt", &e),
        }
        match spectral_bounds(st) {
            Ok(b) => bracket_fail += usize::from(!b.violations().is_empty()),
            Err(e) => s.error("spectral bounds", &e),
        }
    }
    s.record(
        "C A = I",
        worst_inv < 1e-12,
        format!("max |CA - I| / N = {worst_inv:.3e} over {} stacks", stacks.len()),
    );
    s.record("LDLt reconstruction", worst_ldl < 1e-13, format!("max relative entry error {worst_ldl:.3e}"));
    s.record("spectral brackets", bracket_fail == 0, format!("{bracket_fail} stacks with violations"));

    for &layers in &config.layers {
        let stack = config.stack(layers)?;
        let mesh = build_unit_square_mesh(n_mesh, n_mesh)?;
        let h = mesh.h();
        let k = 0.5 * h;
        let params = PhysicalParams::new(fr, 1.0 / config.epsilon, k, layers);
        let sys = assemble_block_system(&mesh, &stack, &params)?;
        let tag = format!("{layers} layers, {n_mesh}x{n_mesh}");

        // reformulation identity
        let ldl = ldlt(&coupling_inverse(&stack))?;
        let c = weighted_norm_matrix(&sys);
        let ct = reformed_matrix(&sys, &ldl);
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let u: Vec<f64> = (0..sys.n_velocity()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..sys.n_velocity()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let (mut ut, mut vt) = (u.clone(), v.clone());
            apply_l_inverse(&ldl, sys.nv(), &mut ut);
            apply_l_inverse(&ldl, sys.nv(), &mut vt);
            let scale = (c.bilinear(&u, &u) * c.bilinear(&v, &v)).sqrt();
            worst = worst.max((c.bilinear(&u, &v) - ct.bilinear(&ut, &vt)).abs() / scale);
        }
        s.record(&format!("reformulation identity ({tag})"), worst < 1e-12, format!("max relative defect {worst:.3e}"));

        // energy conservation over a few steps
        let dt = 2.0 * k;
        match build_preconditioner(&sys, Variant::WeightedNorm, InnerSolver::ExactDirect) {
            Ok(pc) => {
                let mut state =
                    initial_disturbance(&mesh, &stack, BoundaryCondition::NormalTraceZero, config.amplitude, config.width)?;
                let e0 = energy(&state, &sys);
                let opts = GmresOptions {
                    rtol: 1e-12,
                    max_iter: config.max_iter,
                    check_orthogonality: false,
                };
                let mut drift = 0.0f64;
                let mut converged = true;
                for _ in 0..10 {
                    let (next, rep) = midpoint_step_unchecked(&sys, &state, dt, &pc, &opts, None)?;
                    converged &= rep.converged;
                    state = next;
                    drift = drift.max((energy(&state, &sys) - e0).abs() / e0);
                }
                s.record(
                    &format!("energy conservation ({tag}, 10 steps)"),
                    converged && drift < 1e-9,
                    format!("max relative drift {drift:.3e}"),
                );
            }
            Err(e) => s.error("energy conservation", &e),
        }

        match verify_chi_window(&sys) {
            Ok(r) => {
                for c in &r.checks {
                    s.record(&format!("{} ({tag})", c.name), c.passed, &c.detail);
                }
            }
            Err(e) => s.error(&format!("chi window ({tag})"), &e),
        }

        let r = verify_infsup_continuity(&sys, 100, config.seed);
        for c in &r.checks {
            s.record(&format!("{} ({tag})", c.name), c.passed, &c.detail);
        }
    }
    Ok((s.text, s.ok))
}
