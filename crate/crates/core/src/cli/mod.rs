//! Instance files in, result files out. The command functions here are
//! shared by the `opdilate` binary and the C interface.

pub mod json;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::algebra::CStarSignature;
use crate::error::Error;
use crate::kolmogorov::{Kernel, KolmogorovDecomposition};
use crate::ksgns::{naimark, Clause, CpMapTable, Dilation, DilationReport};
use crate::measures::{default_weights, FiniteMeasurableSpace, PositiveMeasure, SesquiMeasure, MAX_SUBSET_ATOMS};
use crate::modules::{HilbertModule, SesquiMap};
use crate::numkernel::{scale, TolerancePolicy};

use json::{
    adjointable_from_json, adjointable_to_json, gram_from_json, gram_to_json, module_map_from_json,
    module_map_to_json, CheckReport, InstanceFile, Output, ResultFile, WeightsFile,
};

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const DEFAULT_TRIALS: usize = 20;
/// Allowed drift between stored and recomputed residuals in `verify`.
pub const REPRODUCTION_TOL: f64 = 1e-12;

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Ok = 0,
    Negative = 1,
    Malformed = 2,
    ResidualExceeded = 3,
}

impl Status {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn of_error(e: &Error) -> Self {
        match e {
            Error::NotHermitian { .. }
            | Error::NotPsd { .. }
            | Error::NotPositiveDefinite { .. }
            | Error::NotCompletelyPositive { .. }
            | Error::NotPositive { .. }
            | Error::NotPositiveEffect { .. }
            | Error::NotDominating { .. } => Status::Negative,
            Error::ResidualExceeded { .. }
            | Error::NoConvergence { .. }
            | Error::NotUnitary { .. }
            | Error::RankMismatch { .. } => Status::ResidualExceeded,
            _ => Status::Malformed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub status: Status,
    pub message: String,
}

impl Failure {
    pub fn malformed(message: impl Into<String>) -> Self {
        Self {
            status: Status::Malformed,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            status: Status::of_error(&e),
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Options {
    /// Overrides `residual_tol`.
    pub tol: Option<f64>,
    pub seed: u64,
    pub trials: usize,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            tol: None,
            seed: 0,
            trials: DEFAULT_TRIALS,
        }
    }
}

#[derive(Debug, Clone)]
pub enum Instance {
    Kernel(Kernel),
    CpMap(CpMapTable),
    Povm { effects: Vec<SesquiMap>, outcomes: Vec<String> },
    Measure(SesquiMeasure),
}

#[derive(Debug, Clone)]
pub struct LoadedInstance {
    pub instance: Instance,
    pub kind: &'static str,
    pub tolerance: TolerancePolicy,
    pub digest: String,
}

impl LoadedInstance {
    pub fn tolerance_with(&self, opts: &Options) -> CliResult<TolerancePolicy> {
        match opts.tol {
            None => Ok(self.tolerance),
            Some(t) => {
                let p = self.tolerance;
                Ok(TolerancePolicy::new(p.hermiticity_tol, p.psd_tol, p.rank_cutoff, t)?)
            }
        }
    }

    fn result(&self, command: &str, opts: &Options, tol: TolerancePolicy) -> ResultFile {
        ResultFile {
            toolkit_version: TOOLKIT_VERSION.to_string(),
            input_digest: self.digest.clone(),
            command: command.to_string(),
            kind: self.kind.to_string(),
            seed: opts.seed,
            trials: opts.trials,
            tolerance: tol,
            ranks: Vec::new(),
            output: Output::Check(CheckReport {
                positive: false,
                certificate: String::new(),
                min_eigenvalue: None,
                block: None,
                atom: None,
                amplification_positive: None,
            }),
            residuals: Vec::new(),
            passed: false,
        }
    }
}

/// Lowercase hex SHA-256.
pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn parse_instance(bytes: &[u8]) -> CliResult<LoadedInstance> {
    let file: InstanceFile =
        serde_json::from_slice(bytes).map_err(|e| Failure::malformed(format!("invalid instance: {e}")))?;
    let tolerance = match file.tolerance() {
        Some(o) => o.apply(TolerancePolicy::default()),
        None => Ok(TolerancePolicy::default()),
    }
    .map_err(|e| Failure::malformed(e.to_string()))?;
    let kind = file.kind();
    let instance = build_instance(file).map_err(|e| Failure::malformed(format!("invalid instance: {e}")))?;
    Ok(LoadedInstance {
        instance,
        kind,
        tolerance,
        digest: digest(bytes),
    })
}

fn check_width(m: usize) -> crate::Result<()> {
    if m == 0 {
        return Err(Error::InvalidInput("m must be at least 1".into()));
    }
    Ok(())
}

fn grams(sig: &CStarSignature, m: usize, list: &[json::JsonGram], what: &str) -> crate::Result<Vec<SesquiMap>> {
    list.iter()
        .enumerate()
        .map(|(i, g)| gram_from_json(sig, m, g, &format!("{what}[{i}]")))
        .collect()
}

fn build_instance(file: InstanceFile) -> crate::Result<Instance> {
    match file {
        InstanceFile::Kernel {
            algebra, m, points, table, ..
        } => {
            check_width(m)?;
            let sig = CStarSignature::new(algebra)?;
            if table.len() != points.len() || table.iter().any(|r| r.len() != points.len()) {
                return Err(Error::ShapeMismatch(format!(
                    "kernel table must be {0}x{0} for {0} points",
                    points.len()
                )));
            }
            let flat: Vec<json::JsonGram> = table.into_iter().flatten().collect();
            let entries = grams(&sig, m, &flat, "table")?;
            Ok(Instance::Kernel(Kernel::new(sig, m, points, entries)?))
        }
        InstanceFile::Cpmap {
            algebra,
            domain,
            m,
            values,
            ..
        } => {
            check_width(m)?;
            let sig = CStarSignature::new(algebra)?;
            let domain = CStarSignature::new(domain)?;
            let values = grams(&sig, m, &values, "values")?;
            Ok(Instance::CpMap(CpMapTable::new(domain, sig, m, values)?))
        }
        InstanceFile::Povm {
            algebra,
            m,
            effects,
            outcomes,
            ..
        } => {
            check_width(m)?;
            let sig = CStarSignature::new(algebra)?;
            let effects = grams(&sig, m, &effects, "effects")?;
            if effects.is_empty() {
                return Err(Error::InvalidInput("a POVM needs at least one effect".into()));
            }
            let outcomes = outcomes.unwrap_or_else(|| (0..effects.len()).map(|i| i.to_string()).collect());
            // validates distinct labels and length
            let space = FiniteMeasurableSpace::new(outcomes)?;
            if space.len() != effects.len() {
                return Err(Error::ShapeMismatch("one outcome label per effect expected".into()));
            }
            Ok(Instance::Povm {
                effects,
                outcomes: space.atoms().to_vec(),
            })
        }
        InstanceFile::Measure {
            algebra, m, atoms, values, ..
        } => {
            check_width(m)?;
            let sig = CStarSignature::new(algebra)?;
            let values = grams(&sig, m, &values, "values")?;
            Ok(Instance::Measure(SesquiMeasure::new(FiniteMeasurableSpace::new(atoms)?, values)?))
        }
    }
}

fn measure_of_povm(effects: &[SesquiMap], outcomes: &[String]) -> crate::Result<SesquiMeasure> {
    SesquiMeasure::new(FiniteMeasurableSpace::new(outcomes.to_vec())?, effects.to_vec())
}

/// Positivity verdict with its eigenvalue witness.
pub fn check(inst: &LoadedInstance, opts: &Options) -> CliResult<ResultFile> {
    let tol = inst.tolerance_with(opts)?;
    let report = match &inst.instance {
        Instance::Kernel(k) => {
            let lo = k.min_eigenvalue(&tol);
            CheckReport {
                positive: k.try_is_positive_definite(&tol)?,
                certificate: "kernel Gram".into(),
                min_eigenvalue: lo.map(|(l, _)| l),
                block: lo.map(|(_, b)| b),
                atom: None,
                amplification_positive: None,
            }
        }
        Instance::CpMap(e) => {
            let lo = e.choi_min_eigenvalue(&tol);
            let n = e.domain().block_dims().iter().copied().max().unwrap_or(1);
            CheckReport {
                positive: e.try_is_completely_positive(&tol)?,
                certificate: "Choi-Gram".into(),
                min_eigenvalue: lo.map(|(l, _)| l),
                block: lo.map(|(_, b)| b),
                atom: None,
                amplification_positive: Some(e.amplification_check(n, opts.trials, &tol, opts.seed)?),
            }
        }
        Instance::Povm { effects, outcomes } => atom_report(&measure_of_povm(effects, outcomes)?, &tol)?,
        Instance::Measure(e) => atom_report(e, &tol)?,
    };
    let mut result = inst.result("check", opts, tol);
    result.passed = report.positive;
    result.output = Output::Check(report);
    Ok(result)
}

fn atom_report(e: &SesquiMeasure, tol: &TolerancePolicy) -> CliResult<CheckReport> {
    let mut lowest: Option<(f64, usize)> = None;
    for v in e.values() {
        if let Some((l, b)) = v.gram().min_eigenvalue(tol) {
            if lowest.is_none_or(|(best, _)| l < best) {
                lowest = Some((l, b));
            }
        }
    }
    let negative = e.negative_atom(tol)?;
    Ok(CheckReport {
        positive: negative.is_none(),
        certificate: "atom values".into(),
        min_eigenvalue: negative.as_ref().map(|(_, l)| *l).or(lowest.map(|(l, _)| l)),
        block: if negative.is_none() { lowest.map(|(_, b)| b) } else { None },
        atom: negative.map(|(a, _)| a),
        amplification_positive: None,
    })
}

fn dilation_output(d: &Dilation, normalized: Option<bool>) -> CliResult<Output> {
    let d_maps = d.generator_decomposition()?;
    Ok(Output::Dilation {
        units: d.domain().units().iter().map(|u| [u.block, u.row, u.col]).collect(),
        pi: d.pi_table().iter().map(adjointable_to_json).collect(),
        j: module_map_to_json(d.j()),
        d: d_maps.maps().iter().map(module_map_to_json).collect(),
        normalized,
    })
}

fn dilation_clauses(report: &DilationReport, tol: &TolerancePolicy) -> Vec<Clause> {
    report.clauses(tol)
}

fn subset_clause(e: &SesquiMeasure, d: &Dilation, tol: &TolerancePolicy) -> CliResult<Option<Clause>> {
    if e.space().len() > MAX_SUBSET_ATOMS {
        return Ok(None);
    }
    let r = e.verify_subsets(d)?;
    Ok(Some(Clause::residual("reconstruction (all subsets)", r, tol.residual_tol)))
}

fn kernel_clauses(d: &KolmogorovDecomposition, k: &Kernel, tol: &TolerancePolicy) -> CliResult<Vec<Clause>> {
    let report = d.verify(k, tol)?;
    Ok(vec![
        Clause::residual("kernel reconstruction", report.reconstruction_residual, tol.residual_tol),
        Clause::minimality("minimality", &report.span_ranks, &report.module_ranks),
    ])
}

/// Minimal decomposition or dilation, with every contract re-checked.
pub fn dilate(inst: &LoadedInstance, opts: &Options) -> CliResult<ResultFile> {
    let tol = inst.tolerance_with(opts)?;
    let mut result = inst.result("dilate", opts, tol);
    match &inst.instance {
        Instance::Kernel(k) => {
            let d = k.decompose(&tol)?;
            result.ranks = d.module().ranks().to_vec();
            result.residuals = kernel_clauses(&d, k, &tol)?;
            result.output = Output::Decomposition {
                points: k.points().to_vec(),
                maps: d.maps().iter().map(module_map_to_json).collect(),
            };
        }
        Instance::CpMap(e) => {
            let d = e.dilate(&tol)?;
            result.ranks = d.ranks().to_vec();
            result.residuals = dilation_clauses(&d.verify(e, opts.trials, opts.seed, &tol)?, &tol);
            result.output = dilation_output(&d, None)?;
        }
        Instance::Povm { effects, outcomes } => {
            let nd = naimark(effects, &tol)?;
            let e = measure_of_povm(effects, outcomes)?;
            result.ranks = nd.dilation.ranks().to_vec();
            let mut clauses = dilation_clauses(&nd.dilation.verify(&nd.table, opts.trials, opts.seed, &tol)?, &tol);
            clauses.extend(subset_clause(&e, &nd.dilation, &tol)?);
            result.residuals = clauses;
            result.output = dilation_output(&nd.dilation, Some(nd.normalized))?;
        }
        Instance::Measure(e) => {
            let nd = e.dilate(&tol)?;
            result.ranks = nd.dilation.ranks().to_vec();
            let mut clauses = dilation_clauses(&nd.dilation.verify(&nd.table, opts.trials, opts.seed, &tol)?, &tol);
            clauses.extend(subset_clause(e, &nd.dilation, &tol)?);
            result.residuals = clauses;
            result.output = dilation_output(&nd.dilation, None)?;
        }
    }
    result.passed = result.residuals.iter().all(|c| c.passed);
    Ok(result)
}

fn density_clause(e: &SesquiMeasure, densities: &[SesquiMap], mu: &PositiveMeasure, tol: &TolerancePolicy) -> CliResult<Clause> {
    let total = e.eval_mask(&vec![true; e.space().len()])?;
    let largest = e.values().iter().map(SesquiMap::frobenius_norm).fold(total.frobenius_norm(), f64::max);
    let r = e.density_residual(densities, mu)? / scale(largest);
    Ok(Clause::residual("density multiply-back", r, tol.residual_tol))
}

/// Dominating measure and densities of a measure instance. `weights` either
/// replaces the default weights or supplies the dominating measure itself.
pub fn density(inst: &LoadedInstance, weights: Option<&WeightsFile>, opts: &Options) -> CliResult<ResultFile> {
    let tol = inst.tolerance_with(opts)?;
    let e = match &inst.instance {
        Instance::Measure(e) => e.clone(),
        Instance::Povm { effects, outcomes } => measure_of_povm(effects, outcomes)?,
        _ => return Err(Failure::malformed("density needs a measure or povm instance")),
    };
    let (mu, user_supplied) = match weights {
        None => (e.dominating_measure(&default_weights(e.width()), &tol)?, false),
        Some(WeightsFile::Weights { weights }) => (e.dominating_measure(weights, &tol)?, false),
        Some(WeightsFile::Dominating { dominating }) => (PositiveMeasure::new(e.space().clone(), dominating.clone())?, true),
    };
    let densities = e.density(&mu, &tol)?;
    let mut result = inst.result("density", opts, tol);
    result.residuals = vec![density_clause(&e, &densities, &mu, &tol)?];
    result.passed = result.residuals.iter().all(|c| c.passed);
    result.output = Output::Density {
        atoms: e.space().atoms().to_vec(),
        dominating: mu.values().to_vec(),
        user_supplied,
        densities: densities.iter().map(gram_to_json).collect(),
    };
    Ok(result)
}

/// Exit status a freshly produced result file stands for.
pub fn status_of(result: &ResultFile) -> Status {
    match (&result.output, result.passed) {
        (_, true) => Status::Ok,
        (Output::Check(_), false) => Status::Negative,
        (_, false) => Status::ResidualExceeded,
    }
}

/// One recomputed clause next to the stored one.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseCheck {
    pub recomputed: Clause,
    pub stored: Option<f64>,
    pub reproduced: bool,
}

impl ClauseCheck {
    pub fn ok(&self) -> bool {
        self.recomputed.passed && self.reproduced
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub clauses: Vec<ClauseCheck>,
}

impl VerifyReport {
    pub fn status(&self) -> Status {
        if self.clauses.iter().all(ClauseCheck::ok) {
            Status::Ok
        } else {
            Status::ResidualExceeded
        }
    }

    pub fn failing(&self) -> Vec<&str> {
        self.clauses
            .iter()
            .filter(|c| !c.ok())
            .map(|c| c.recomputed.name.as_str())
            .collect()
    }
}

fn same_value(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REPRODUCTION_TOL
}

/// Rebuilds the stored output, re-runs every check with the stored seed,
/// trials and tolerances, and compares residuals.
pub fn verify(inst: &LoadedInstance, result: &ResultFile) -> CliResult<VerifyReport> {
    if inst.digest != result.input_digest {
        return Err(Failure::malformed(format!(
            "digest mismatch: instance is {}, result was produced from {}",
            inst.digest, result.input_digest
        )));
    }
    if inst.kind != result.kind {
        return Err(Failure::malformed(format!("result kind {} does not match instance kind {}", result.kind, inst.kind)));
    }
    let tol = result.tolerance;
    tol.validate().map_err(|e| Failure::malformed(e.to_string()))?;
    let opts = Options {
        tol: None,
        seed: result.seed,
        trials: result.trials,
    };
    let recomputed: Vec<Clause> = match (&result.output, &inst.instance) {
        (Output::Check(stored), _) => {
            let mut inst = inst.clone();
            inst.tolerance = tol;
            let fresh = check(&inst, &opts)?;
            let Output::Check(report) = fresh.output else { unreachable!() };
            let lo = report.min_eigenvalue.unwrap_or(f64::NAN);
            let same = report.positive == stored.positive
                && stored.min_eigenvalue.is_some() == report.min_eigenvalue.is_some()
                && stored.min_eigenvalue.is_none_or(|s| same_value(s, lo));
            vec![Clause {
                name: "positivity verdict".into(),
                value: lo,
                threshold: 0.0,
                passed: same,
            }]
        }
        (Output::Decomposition { points, maps }, Instance::Kernel(k)) => {
            if points.as_slice() != k.points() || maps.len() != k.len() {
                return Err(Failure::malformed("decomposition points do not match the kernel"));
            }
            let module = HilbertModule::new(k.signature().clone(), result.ranks.clone())?;
            let maps = maps
                .iter()
                .enumerate()
                .map(|(x, j)| module_map_from_json(&module, k.width(), j, &format!("maps[{x}]")))
                .collect::<crate::Result<_>>()?;
            let d = KolmogorovDecomposition::new(module, maps)?;
            kernel_clauses(&d, k, &tol)?
        }
        (Output::Dilation { units, pi, j, .. }, instance) => {
            let (table, measure) = match instance {
                Instance::CpMap(e) => (e.clone(), None),
                Instance::Povm { effects, outcomes } => {
                    let e = measure_of_povm(effects, outcomes)?;
                    (e.to_cpmap(&tol)?, Some(e))
                }
                Instance::Measure(e) => (e.to_cpmap(&tol)?, Some(e.clone())),
                Instance::Kernel(_) => return Err(Failure::malformed("a kernel result carries a decomposition")),
            };
            let expected: Vec<[usize; 3]> = table.domain().units().iter().map(|u| [u.block, u.row, u.col]).collect();
            if units != &expected || pi.len() != expected.len() {
                return Err(Failure::malformed("stored representation is not indexed by the domain matrix units"));
            }
            let module = HilbertModule::new(table.codomain().clone(), result.ranks.clone())?;
            let pi = pi
                .iter()
                .enumerate()
                .map(|(i, b)| adjointable_from_json(&module, b, &format!("pi[{i}]")))
                .collect::<crate::Result<_>>()?;
            let j = module_map_from_json(&module, table.width(), j, "j")?;
            let d = Dilation::new(table.domain().clone(), module, pi, j)?;
            let mut clauses = dilation_clauses(&d.verify(&table, opts.trials, opts.seed, &tol)?, &tol);
            if let Some(e) = measure {
                clauses.extend(subset_clause(&e, &d, &tol)?);
            }
            clauses
        }
        (Output::Density { dominating, densities, .. }, instance) => {
            let e = match instance {
                Instance::Measure(e) => e.clone(),
                Instance::Povm { effects, outcomes } => measure_of_povm(effects, outcomes)?,
                _ => return Err(Failure::malformed("density results belong to measure instances")),
            };
            let mu = PositiveMeasure::new(e.space().clone(), dominating.clone())?;
            let densities = densities
                .iter()
                .enumerate()
                .map(|(x, g)| gram_from_json(e.signature(), e.width(), g, &format!("densities[{x}]")))
                .collect::<crate::Result<Vec<_>>>()?;
            if densities.len() != e.space().len() {
                return Err(Failure::malformed("one density per atom expected"));
            }
            vec![density_clause(&e, &densities, &mu, &tol)?]
        }
        (Output::Decomposition { .. }, _) => {
            return Err(Failure::malformed("decomposition results belong to kernel instances"))
        }
    };
    let clauses = recomputed
        .into_iter()
        .map(|c| {
            let stored = result.residuals.iter().find(|s| s.name == c.name).map(|s| s.value);
            let reproduced = match (&result.output, stored) {
                (Output::Check(_), _) => true,
                (_, Some(s)) => same_value(s, c.value),
                (_, None) => false,
            };
            ClauseCheck {
                recomputed: c,
                stored,
                reproduced,
            }
        })
        .collect();
    Ok(VerifyReport { clauses })
}

pub fn to_json(result: &ResultFile) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("results serialize");
    s.push('\n');
    s
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::malformed(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Failure::malformed(format!("{}: {e}", path.display())))
}

fn emit(result: &ResultFile, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(p) => write(p, &to_json(result)),
        None => {
            print!("{}", to_json(result));
            Ok(())
        }
    }
}

fn fail(path: &Path, f: &Failure) -> i32 {
    eprintln!("{}: {}", path.display(), f.message);
    f.status.code()
}

fn print_clauses(clauses: &[Clause]) {
    for c in clauses {
        let mark = if c.passed { "ok" } else { "FAIL" };
        println!("  [{mark}] {}: {:.3e} (threshold {:.1e})", c.name, c.value, c.threshold);
    }
}

fn check_summary(path: &Path, result: &ResultFile) -> String {
    let Output::Check(r) = &result.output else { unreachable!() };
    let lo = r.min_eigenvalue.map_or("n/a (not Hermitian)".to_string(), |l| format!("{l:.6e}"));
    let mut line = if r.positive {
        format!("{}: positive ({}, min eigenvalue {lo})", path.display(), r.certificate)
    } else {
        format!("{}: NOT positive ({}, witness eigenvalue {lo}", path.display(), r.certificate)
    };
    if !r.positive {
        if let Some(b) = r.block {
            line += &format!(" in block {b}");
        }
        if let Some(a) = &r.atom {
            line += &format!(" at atom {a:?}");
        }
        line.push(')');
    }
    if let Some(amp) = r.amplification_positive {
        line += &format!("; sampled amplification {}", if amp { "positive" } else { "found a negative image" });
    }
    line
}

fn check_file(path: &Path, opts: &Options) -> CliResult<ResultFile> {
    check(&parse_instance(&read(path)?)?, opts)
}

/// `check PATH`; a directory is checked file by file across threads.
pub fn cmd_check(path: &Path, out: Option<&Path>, opts: &Options) -> i32 {
    if path.is_dir() {
        let mut files: Vec<PathBuf> = match fs::read_dir(path) {
            Ok(rd) => rd
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect(),
            Err(e) => return fail(path, &Failure::malformed(e.to_string())),
        };
        files.sort();
        let outcomes: Vec<CliResult<ResultFile>> = std::thread::scope(|s| {
            let handles: Vec<_> = files.iter().map(|f| s.spawn(move || check_file(f, opts))).collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut code = 0;
        for (f, outcome) in files.iter().zip(outcomes) {
            let c = match outcome {
                Ok(r) => {
                    println!("{}", check_summary(f, &r));
                    if let Some(dir) = out {
                        let name = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                        if let Err(e) = write(&dir.join(format!("{name}.check.json")), &to_json(&r)) {
                            return fail(dir, &e);
                        }
                    }
                    status_of(&r).code()
                }
                Err(e) => fail(f, &e),
            };
            code = code.max(c);
        }
        return code;
    }
    match check_file(path, opts) {
        Ok(r) => {
            println!("{}", check_summary(path, &r));
            if let Some(o) = out {
                if let Err(e) = write(o, &to_json(&r)) {
                    return fail(o, &e);
                }
            }
            status_of(&r).code()
        }
        Err(e) => fail(path, &e),
    }
}

pub fn cmd_dilate(path: &Path, out: Option<&Path>, opts: &Options) -> i32 {
    let run = || -> CliResult<ResultFile> { dilate(&parse_instance(&read(path)?)?, opts) };
    match run() {
        Ok(r) => {
            if out.is_some() {
                println!("{}: ranks {:?}", path.display(), r.ranks);
                print_clauses(&r.residuals);
            }
            if let Output::Dilation { normalized: Some(false), .. } = r.output {
                eprintln!("{}: warning: effects do not sum to the identity", path.display());
            }
            if let Err(e) = emit(&r, out) {
                return fail(path, &e);
            }
            status_of(&r).code()
        }
        Err(e) => fail(path, &e),
    }
}

pub fn cmd_density(path: &Path, weights: Option<&Path>, out: Option<&Path>, opts: &Options) -> i32 {
    let run = || -> CliResult<ResultFile> {
        let inst = parse_instance(&read(path)?)?;
        let w = match weights {
            Some(p) => Some(
                serde_json::from_slice::<WeightsFile>(&read(p)?)
                    .map_err(|e| Failure::malformed(format!("{}: {e}", p.display())))?,
            ),
            None => None,
        };
        density(&inst, w.as_ref(), opts)
    };
    match run() {
        Ok(r) => {
            if out.is_some() {
                if let Output::Density { atoms, dominating, .. } = &r.output {
                    for (a, m) in atoms.iter().zip(dominating) {
                        println!("  {a}: dominating mass {m:.6e}");
                    }
                }
                print_clauses(&r.residuals);
            }
            if let Err(e) = emit(&r, out) {
                return fail(path, &e);
            }
            status_of(&r).code()
        }
        Err(e) => fail(path, &e),
    }
}

pub fn cmd_verify(instance: &Path, result: &Path) -> i32 {
    let run = || -> CliResult<VerifyReport> {
        let inst = parse_instance(&read(instance)?)?;
        let stored: ResultFile = serde_json::from_slice(&read(result)?)
            .map_err(|e| Failure::malformed(format!("invalid result file: {e}")))?;
        verify(&inst, &stored)
    };
    match run() {
        Ok(report) => {
            for c in &report.clauses {
                let mark = if c.ok() { "ok" } else { "FAIL" };
                let note = if c.reproduced { "" } else { " (does not reproduce the stored value)" };
                println!("  [{mark}] {}: {:.3e}{note}", c.recomputed.name, c.recomputed.value);
            }
            let failing = report.failing();
            if !failing.is_empty() {
                eprintln!("{}: failing clauses: {}", result.display(), failing.join(", "));
            }
            report.status().code()
        }
        Err(e) => fail(result, &e),
    }
}
