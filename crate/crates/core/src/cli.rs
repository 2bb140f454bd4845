//! Command-line front end. Exit codes: 0 all checks pass, 1 a check failed,
//! 2 usage or input error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conformal::{
    conformal_invariants_suite, lemma_rbar_check, nabla0_conformal_check, shift_curvature_discrepancy,
    ConformalShift,
};
use crate::connection::{
    build_family, is_complex, is_natural, is_symmetric, levi_civita, ConnectionCoeffs, ConnectionParams, Family,
};
use crate::curvature::{curvature, curvature_like_check, kahler_check};
use crate::error::NordenError;
use crate::example::{build_example, perturb_g11, property_suite, verify_on, ExampleParams};
use crate::manifold::FrameManifold;
use crate::manifold_file::load;
use crate::norden::{classify, NordenData};
use crate::report::{CheckRecord, VerificationReport};
use crate::tensor::{format_index, Tensor, Tolerance};

#[derive(Debug, Parser)]
#[command(name = "norden", version, about = "Norden manifold calculus and verification suites")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural invariants of a manifold.
    Validate(Source),
    /// Report class membership (W0, W1, W2, W3, W1^0).
    Classify(Source),
    /// Connection coefficients of a family member.
    Connection(FamilyArgs),
    /// Curvature of a family member.
    Curvature(FamilyArgs),
    /// Conformal change checks.
    Conformal(ConformalArgs),
    /// End-to-end checks on the four-dimensional example.
    VerifyPaper(VerifyArgs),
    /// Randomized operator identities on generated W1^0 data.
    Properties(PropertyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CliFamily {
    LeviCivita,
    Prime,
    Symmetric,
    Natural,
    Zero,
    Canonical,
    Yano,
}

impl From<CliFamily> for Family {
    fn from(f: CliFamily) -> Self {
        match f {
            CliFamily::LeviCivita => Family::LeviCivita,
            CliFamily::Prime => Family::Prime,
            CliFamily::Symmetric => Family::Symmetric,
            CliFamily::Natural => Family::Natural,
            CliFamily::Zero => Family::Zero,
            CliFamily::Canonical => Family::Canonical,
            CliFamily::Yano => Family::Yano,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long, env = "NORDEN_TOL_ABS", default_value_t = 1e-9)]
    pub tol_abs: f64,
    #[arg(long, env = "NORDEN_TOL_REL", default_value_t = 1e-9)]
    pub tol_rel: f64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Print every tensor component, not only those above the tolerance.
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Source {
    /// Manifold description (JSON). Without it the example with --lambda/--mu is used.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub mu: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value_t = CliFamily::LeviCivita)]
    pub family: CliFamily,
    /// Family parameters: prime 8, symmetric 4, natural 2, others none.
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub params: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ConformalArgs {
    #[command(flatten)]
    pub source: Source,
    /// Components of sigma; defaults to the file's conformal block, then to theta*/2n.
    #[arg(long, num_args = 1.., allow_negative_numbers = true)]
    pub sigma: Vec<f64>,
    #[arg(long)]
    pub factor: Option<f64>,
    /// Random connection parameter vectors for the invariance checks.
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Add this amount to g(e1, e1) before running.
    #[arg(long, allow_negative_numbers = true)]
    pub perturb_g11: Option<f64>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct PropertyArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[command(flatten)]
    pub common: Common,
}

impl Common {
    fn tolerance(&self) -> Result<Tolerance, Failure> {
        if !(self.tol_abs >= 0.0 && self.tol_rel >= 0.0) {
            return Err(Failure::Usage("tolerances must be nonnegative".into()));
        }
        Ok(Tolerance::new(self.tol_abs, self.tol_rel))
    }
}

enum Failure {
    Usage(String),
    /// Failed checks, with the report still printed.
    Check(Output),
    Compute(NordenError),
}

impl From<NordenError> for Failure {
    fn from(e: NordenError) -> Self {
        match e {
            NordenError::Schema(_) | NordenError::DimensionMismatch(_) => Failure::Usage(e.to_string()),
            other => Failure::Compute(other),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Component {
    index: Vec<usize>,
    value: f64,
}

#[derive(Debug, Clone, Default, Serialize)]
struct TensorDump {
    name: String,
    components: Vec<Component>,
}

#[derive(Debug, Clone, Serialize)]
struct Output {
    report: VerificationReport,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    tensors: Vec<TensorDump>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    summary: BTreeMap<String, f64>,
}

impl Output {
    fn new(report: VerificationReport) -> Self {
        Self { report, tensors: Vec::new(), summary: BTreeMap::new() }
    }

    fn passed(&self) -> bool {
        self.report.passed()
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => serde_json::to_string_pretty(self).expect("output serialization cannot fail") + "\n",
            Format::Text => {
                let mut s = self.report.to_text();
                for (k, v) in &self.summary {
                    s.push_str(&format!("{k} = {v:.12e}\n"));
                }
                for t in &self.tensors {
                    s.push_str(&format!("{} ({} components)\n", t.name, t.components.len()));
                    for c in &t.components {
                        s.push_str(&format!("  {}{} = {:.12e}\n", t.name, format_index(&c.index), c.value));
                    }
                }
                s
            }
        }
    }
}

fn dump(name: &str, t: &Tensor, full: bool, tol: Tolerance) -> TensorDump {
    let components = t
        .entries()
        .filter(|(_, v)| full || v.abs() > tol.absolute)
        .map(|(ix, value)| Component { index: ix.iter().map(|i| i + 1).collect(), value })
        .collect();
    TensorDump { name: name.into(), components }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let format = match &cli.command {
        Command::Validate(s) | Command::Classify(s) => s.common.format,
        Command::Connection(f) | Command::Curvature(f) => f.source.common.format,
        Command::Conformal(c) => c.source.common.format,
        Command::VerifyPaper(v) => v.common.format,
        Command::Properties(p) => p.common.format,
    };
    match execute(&cli.command) {
        Ok(o) => {
            let _ = write!(out, "{}", o.render(format));
            if o.passed() {
                0
            } else {
                1
            }
        }
        Err(Failure::Check(o)) => {
            let _ = write!(out, "{}", o.render(format));
            1
        }
        Err(Failure::Usage(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
        Err(Failure::Compute(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

struct Loaded {
    m: FrameManifold,
    conformal: Option<ConformalShift>,
    label: String,
}

/// Loads and validates; a failed validation is returned as a check failure.
fn load_source(s: &Source, tol: Tolerance) -> Result<(Loaded, VerificationReport), Failure> {
    let loaded = match &s.input {
        Some(path) => {
            let l = load(path)?;
            Loaded { m: l.manifold, conformal: l.conformal, label: path.display().to_string() }
        }
        None => Loaded {
            m: build_example(&ExampleParams::new(s.lambda, s.mu)),
            conformal: None,
            label: format!("example (lambda = {}, mu = {})", s.lambda, s.mu),
        },
    };
    let val = loaded.m.validate(tol);
    if !val.passed() {
        let mut report = VerificationReport::new(format!("validation of {}", loaded.label), tol);
        report.seed = Some(s.common.seed);
        report.extend(val);
        return Err(Failure::Check(Output::new(report)));
    }
    Ok((loaded, val))
}

fn header(title: String, tol: Tolerance, seed: u64) -> VerificationReport {
    VerificationReport::new(title, tol).with_seed(seed)
}

fn execute(cmd: &Command) -> Result<Output, Failure> {
    match cmd {
        Command::Validate(s) => {
            let tol = s.common.tolerance()?;
            let (l, val) = load_source(s, tol)?;
            let mut r = header(format!("validation of {}", l.label), tol, s.common.seed);
            r.extend(val);
            Ok(Output::new(r))
        }
        Command::Classify(s) => {
            let tol = s.common.tolerance()?;
            let (l, val) = load_source(s, tol)?;
            let lc = levi_civita(&l.m)?;
            let nd = NordenData::compute(&l.m, &lc)?;
            let v = classify(&l.m, &nd, &lc, tol)?;
            let mut r = header(format!("classification of {}", l.label), tol, s.common.seed);
            r.extend(val);
            r.extend(v.to_report(tol));
            if !v.w2_forms_agree() {
                r.warn("the two W2 characterisations disagree on this input");
            }
            let mut o = Output::new(r);
            o.summary = BTreeMap::from([
                ("closedness residual".into(), v.closedness_residual),
                ("theta(Omega)".into(), nd.theta_omega()),
                ("theta(J Omega)".into(), nd.theta_j_omega(&l.m)),
            ]);
            o.tensors.push(dump("theta", &nd.theta, s.common.full, tol));
            o.tensors.push(dump("F", &nd.f, s.common.full, tol));
            Ok(o)
        }
        Command::Connection(f) | Command::Curvature(f) => {
            let is_curv = matches!(cmd, Command::Curvature(_));
            family_command(f, is_curv)
        }
        Command::Conformal(c) => conformal_command(c),
        Command::VerifyPaper(v) => {
            let tol = v.common.tolerance()?;
            let p = ExampleParams::new(v.lambda, v.mu).with_seed(v.common.seed);
            let mut m = build_example(&p);
            if let Some(eps) = v.perturb_g11 {
                m = perturb_g11(&m, eps)?;
            }
            let mut report = verify_on(&m, &p, v.trials, tol);
            if let Some(eps) = v.perturb_g11 {
                report.title.push_str(&format!(" with g11 perturbed by {eps}"));
            }
            Ok(Output::new(report))
        }
        Command::Properties(p) => {
            let tol = p.common.tolerance()?;
            Ok(Output::new(property_suite(p.trials, p.common.seed, tol)?))
        }
    }
}

fn build_member(
    m: &FrameManifold,
    lc: &ConnectionCoeffs,
    nd: &NordenData,
    family: Family,
    params: &[f64],
) -> Result<ConnectionCoeffs, Failure> {
    if params.len() != family.arity() {
        return Err(Failure::Usage(format!(
            "family {family} takes {} parameters, got {}",
            family.arity(),
            params.len()
        )));
    }
    if family == Family::LeviCivita {
        return Ok(lc.clone());
    }
    Ok(build_family(m, lc, nd, family, params)?)
}

/// The defining property of each family, as a record.
fn defining_property(m: &FrameManifold, c: &ConnectionCoeffs, family: Family, tol: Tolerance) -> CheckRecord {
    let scale = c.gamma.max_abs().max(m.structure_constants().max_abs()).max(1.0) * m.metric().max_abs().max(1.0);
    let (claim, residual) = match family {
        Family::LeviCivita => ("torsion-free", is_symmetric(m, c, tol).residual),
        Family::Symmetric | Family::Yano => {
            ("torsion-free and complex", is_symmetric(m, c, tol).residual.max(is_complex(m, c, tol).residual))
        }
        Family::Natural | Family::Zero | Family::Canonical => ("nabla J = nabla g = 0", is_natural(m, c, tol).residual),
        _ => ("nabla J = 0", is_complex(m, c, tol).residual),
    };
    CheckRecord::check(format!("{family} defining property"), claim, residual, tol.threshold(scale))
}

fn family_command(f: &FamilyArgs, with_curvature: bool) -> Result<Output, Failure> {
    let common = &f.source.common;
    let tol = common.tolerance()?;
    let family: Family = f.family.into();
    let (l, _) = load_source(&f.source, tol)?;
    let m = &l.m;
    let lc = levi_civita(m)?;
    let nd = NordenData::compute(m, &lc)?;
    let conn = build_member(m, &lc, &nd, family, &f.params)?;
    let what = if with_curvature { "curvature" } else { "connection" };
    let mut r = header(format!("{what} of the {family} connection on {}", l.label), tol, common.seed);
    let mut rec = defining_property(m, &conn, family, tol);
    for (i, v) in f.params.iter().enumerate() {
        rec = rec.with_param(&format!("p{}", i + 1), *v);
    }
    r.push(rec);
    for w in &conn.warnings {
        r.warn(w.clone());
    }
    let mut o = Output::new(r);
    if with_curvature {
        let cd = curvature(m, &conn)?;
        let cl = curvature_like_check(&cd.r04, tol);
        let k = kahler_check(m, &cd.r04, tol);
        o.summary = BTreeMap::from([
            ("tau".into(), cd.tau),
            ("tau*".into(), cd.tau_star),
            ("curvature-like residual".into(), cl.residual()),
            ("Kaehler residual".into(), k.residual),
        ]);
        o.tensors.push(dump("R", &cd.r04, common.full, tol));
        o.tensors.push(dump("rho", &cd.rho, common.full, tol));
    } else {
        o.tensors.push(dump("Gamma", &conn.gamma, common.full, tol));
        o.tensors.push(dump("T", &crate::connection::torsion(m, &conn).t, common.full, tol));
    }
    Ok(o)
}

fn conformal_command(c: &ConformalArgs) -> Result<Output, Failure> {
    let common = &c.source.common;
    let tol = common.tolerance()?;
    let (l, _) = load_source(&c.source, tol)?;
    let m = &l.m;
    let lc = levi_civita(m)?;
    let nd = NordenData::compute(m, &lc)?;
    let file_factor = l.conformal.as_ref().map(|s| s.factor);
    let factor = c.factor.or(file_factor).unwrap_or(2.0);
    let (shift, canonical) = if !c.sigma.is_empty() {
        (ConformalShift::new(m, c.sigma.clone(), factor)?, false)
    } else if let Some(s) = &l.conformal {
        (ConformalShift::new(m, s.sigma().to_vec(), factor)?, false)
    } else {
        (ConformalShift::canonical(m, &nd, factor)?, true)
    };
    let mut r = header(format!("conformal change of {} (c = {factor})", l.label), tol, common.seed);
    if shift.is_closed(m, tol) {
        r.extend(lemma_rbar_check(m, &lc, &shift, tol)?);
    } else {
        r.push(CheckRecord::skipped("R-bar lemma", "needs a closed sigma"));
    }
    r.extend(nabla0_conformal_check(m, &lc, &nd, &shift, tol)?);
    if canonical {
        let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
        let samples: Vec<ConnectionParams> = (0..c.trials)
            .map(|_| ConnectionParams::new([0; 8].map(|_| rng.gen_range(-1.0..1.0))))
            .chain(std::iter::once(ConnectionParams::zero()))
            .collect();
        r.extend(conformal_invariants_suite(m, &lc, &nd, &samples, factor, tol)?);
    }
    let mut o = Output::new(r);
    let zero = crate::connection::build_zero(m, &lc, &nd);
    o.summary = BTreeMap::from([
        ("d sigma residual".into(), shift.closedness_residual(m)),
        ("d(sigma J) residual".into(), shift.pluriharmonic_residual(m)),
        ("shift curvature discrepancy".into(), shift_curvature_discrepancy(m, &zero, shift.sigma())?),
    ]);
    o.tensors.push(dump("sigma", &shift.sigma, true, tol));
    Ok(o)
}
