//! `eqra` — relation-algebra closures, equivalence lattices, and
//! verification certificates over finite base sets.
//!
//! Exit codes: 0 when the command succeeds and every certificate check
//! passes, 1 when a certificate reports failed checks, 2 on usage or
//! input errors.

use std::fmt::Write as _;
use std::fs;
use std::io::Read as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use eqra_core::algebra::{congruences, ppf_eq_certificate, AlgebraError, FinAlgebra};
use eqra_core::closure::{
    ra_closure_with_budget, ClosureError, DEFAULT_ATOM_BUDGET, MAX_ATOM_BUDGET,
};
use eqra_core::constructions::{
    con_zp2_certificate, example_2x2_certificate, lemma1_certificate,
    lemma_composition_certificate, m_names, pp_closure_gap_certificate, represent_mn_config,
    zp2_certificate, zp2_family, ConstructionError,
};
use eqra_core::eqlattice::{build_lattice, extract_equivalences, mn_shape, EqError, EqLattice};
use eqra_core::formulas::{
    evaluate_binary, evaluate_ra_term, fragment_report, parse_formula, parse_ra_term, pp_search,
    pp_search_estimate, ra_term_to_fo3, FormulaError, FragmentReport, ParseError, PpSearchResult,
};
use eqra_core::io::{
    format_relation_matrix, format_relation_pairs, parse_algebra_json, parse_relation_auto,
    parse_structure_json, IoError,
};
use eqra_core::{AtomStructure, BinRel, Certificate, Check, CheckStatus, MnShape, Structure};

// ---------------------------------------------------------------------
// Command line surface.

#[derive(Parser)]
#[command(
    name = "eqra",
    version,
    about = "Relation-algebra closures, equivalence lattices, and verification certificates",
    max_term_width = 100
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,

    /// Print nothing; communicate through the exit code only.
    #[arg(long, global = true)]
    quiet: bool,

    /// Atom budget for closure computations (1..=64). Falls back to the
    /// EQRA_ATOM_BUDGET environment variable, then to the default of 24.
    #[arg(long, global = true, value_name = "N")]
    atom_budget: Option<usize>,

    /// Number of worker threads (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    parallel: Option<usize>,

    /// Record wall-clock time in emitted certificates.
    #[arg(long, global = true)]
    timings: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the relation-algebra closure of generator relations.
    Closure {
        /// Relation files (pair/matrix text or JSON); `-` reads standard input.
        #[arg(required = true, value_name = "FILE")]
        files: Vec<PathBuf>,
    },

    /// Close generators, extract the equivalence relations, and report the lattice shape.
    EqLattice {
        /// Relation files (pair/matrix text or JSON); `-` reads standard input.
        #[arg(required = true, value_name = "FILE")]
        files: Vec<PathBuf>,
    },

    /// List the congruence lattice of a finite algebra.
    Con {
        /// Algebra description (JSON with "n" and "ops").
        #[arg(value_name = "ALGEBRA")]
        algebra: PathBuf,
    },

    /// Certify that the given relations are exactly the congruences of an algebra.
    PpfCert {
        /// Algebra description (JSON with "n" and "ops").
        #[arg(value_name = "ALGEBRA")]
        algebra: PathBuf,

        /// Relation files (pair/matrix text or JSON).
        #[arg(required = true, value_name = "REL")]
        relations: Vec<PathBuf>,
    },

    /// Evaluate a first-order formula over a finite structure.
    EvalFormula {
        /// Structure description (JSON with "n" and "relations").
        #[arg(long, value_name = "FILE")]
        structure: PathBuf,

        /// Formula text, e.g. "x = y | !(E0(x,y) & E1(x,y))".
        #[arg(long, value_name = "TEXT")]
        formula: String,

        /// The two free variables, comma separated.
        #[arg(long, value_name = "X,Y", default_value = "x,y")]
        free: String,
    },

    /// Evaluate a relation-algebra term over a finite structure.
    EvalTerm {
        /// Structure description (JSON with "n" and "relations").
        #[arg(long, value_name = "FILE")]
        structure: PathBuf,

        /// Term text, e.g. "~(id + E0 ; E1^)".
        #[arg(long, value_name = "TEXT")]
        term: String,
    },

    /// Search for a conjunctive (pp) definition of a target relation.
    PpSearch {
        /// Structure description (JSON with "n" and "relations").
        #[arg(long, value_name = "FILE")]
        structure: PathBuf,

        /// Target relation file (pair/matrix text or JSON).
        #[arg(long, value_name = "FILE")]
        target: PathBuf,

        /// Largest number of variables to try (at least 2).
        #[arg(long, value_name = "V")]
        max_vars: usize,

        /// Largest number of constraints to try (at least 1).
        #[arg(long, value_name = "C")]
        max_constraints: usize,
    },

    /// Build the slope-kernel equivalence family on the p x p grid and certify it.
    Zp2 {
        /// A prime up to 11.
        #[arg(long)]
        p: usize,

        /// Write every family member to this directory as a pair-format file.
        #[arg(long, value_name = "DIR")]
        emit_dir: Option<PathBuf>,
    },

    /// Construct a representation whose equivalence lattice is M_m.
    RepresentMn {
        /// Height-two lattice index m (1 through 9).
        m: usize,

        /// Override the base prime (primes 3 through 11, subject to range checks).
        #[arg(long, value_name = "P")]
        prime: Option<usize>,
    },

    /// Verify the composition law of the slope-kernel family at prime p.
    VerifyLemma {
        /// A prime between 5 and 11.
        #[arg(long)]
        p: usize,
    },

    /// Verify that closing the generator family recovers exactly its equivalences.
    VerifyLemma1 {
        /// A prime between 5 and 11.
        #[arg(long)]
        p: usize,

        /// Number of slope kernels among the generators.
        #[arg(long)]
        n: usize,

        /// Allow n outside the safe range 1..p-2; checks become exploratory.
        #[arg(long = "unsafe")]
        allow_unsafe: bool,
    },

    /// Verify the 2x2-grid worked example end to end.
    #[command(name = "example-2x2")]
    Example2x2,

    /// Run the full verification suite.
    VerifyAll {
        /// Additionally run an exploratory recovery check at "P,N" outside the safe range.
        #[arg(long, value_name = "P,N")]
        unsafe_pn: Option<String>,
    },
}

// ---------------------------------------------------------------------
// Errors. Everything here exits with status 2.

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    WriteFile {
        path: String,
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Input { path: String, source: IoError },

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error(transparent)]
    Construction(#[from] ConstructionError),

    #[error(transparent)]
    Closure(#[from] ClosureError),

    #[error(transparent)]
    Eq(#[from] EqError),

    #[error(transparent)]
    Formula(#[from] FormulaError),

    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

fn main() -> ExitCode {
    // Die silently on a closed pipe (`eqra ... | head`) the way other
    // line-oriented tools do, instead of panicking mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }

    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, CliError> {
    if let Some(threads) = cli.global.parallel {
        if threads == 0 {
            return Err(CliError::Usage("--parallel must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("could not size the thread pool: {e}")))?;
    }

    let g = &cli.global;
    let budget = resolve_budget(g.atom_budget)?;
    let started = Instant::now();
    let mut reader = InputReader::default();

    match &cli.command {
        Command::Closure { files } => cmd_closure(files, budget, g, &mut reader),
        Command::EqLattice { files } => cmd_eq_lattice(files, budget, g, &mut reader),
        Command::Con { algebra } => cmd_con(algebra, g, &mut reader),
        Command::PpfCert { algebra, relations } => {
            cmd_ppf_cert(algebra, relations, started, g, &mut reader)
        }
        Command::EvalFormula {
            structure,
            formula,
            free,
        } => cmd_eval_formula(structure, formula, free, g, &mut reader),
        Command::EvalTerm { structure, term } => cmd_eval_term(structure, term, g, &mut reader),
        Command::PpSearch {
            structure,
            target,
            max_vars,
            max_constraints,
        } => cmd_pp_search(structure, target, *max_vars, *max_constraints, g, &mut reader),
        Command::Zp2 { p, emit_dir } => cmd_zp2(*p, emit_dir.as_deref(), started, g),
        Command::RepresentMn { m, prime } => cmd_represent_mn(*m, *prime, budget, started, g),
        Command::VerifyLemma { p } => {
            let cert = lemma_composition_certificate(*p)?;
            Ok(finish_certificate(cert, started, g))
        }
        Command::VerifyLemma1 { p, n, allow_unsafe } => {
            let cert = lemma1_certificate(*p, *n, budget, *allow_unsafe)?;
            Ok(finish_certificate(cert, started, g))
        }
        Command::Example2x2 => {
            let cert = example_2x2_certificate(budget)?;
            Ok(finish_certificate(cert, started, g))
        }
        Command::VerifyAll { unsafe_pn } => {
            cmd_verify_all(unsafe_pn.as_deref(), budget, started, g)
        }
    }
}

// ---------------------------------------------------------------------
// Shared plumbing.

/// Resolves the atom budget: flag, then EQRA_ATOM_BUDGET, then the default.
fn resolve_budget(flag: Option<usize>) -> Result<usize, CliError> {
    let budget = match flag {
        Some(b) => b,
        None => match std::env::var("EQRA_ATOM_BUDGET") {
            Ok(text) => text.trim().parse::<usize>().map_err(|_| {
                CliError::Usage(format!(
                    "EQRA_ATOM_BUDGET must be a positive integer, got {text:?}"
                ))
            })?,
            Err(std::env::VarError::NotPresent) => DEFAULT_ATOM_BUDGET,
            Err(e) => return Err(CliError::Usage(format!("EQRA_ATOM_BUDGET: {e}"))),
        },
    };
    if budget == 0 || budget > MAX_ATOM_BUDGET {
        return Err(CliError::Usage(format!(
            "atom budget must be between 1 and {MAX_ATOM_BUDGET}, got {budget}"
        )));
    }
    Ok(budget)
}

/// Reads command inputs, allowing `-` to name standard input at most once.
#[derive(Default)]
struct InputReader {
    stdin_used: bool,
}

/// A named input: the display label and the raw content.
struct Input {
    label: String,
    content: String,
}

impl InputReader {
    fn read(&mut self, path: &Path) -> Result<Input, CliError> {
        if path.as_os_str() == "-" {
            if self.stdin_used {
                return Err(CliError::Usage(
                    "standard input may stand in for at most one file".into(),
                ));
            }
            self.stdin_used = true;
            let mut content = String::new();
            std::io::stdin()
                .read_to_string(&mut content)
                .map_err(|source| CliError::Read {
                    path: "<stdin>".into(),
                    source,
                })?;
            Ok(Input {
                label: "<stdin>".into(),
                content,
            })
        } else {
            let content = fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.display().to_string(),
                source,
            })?;
            Ok(Input {
                label: path.display().to_string(),
                content,
            })
        }
    }

    fn read_relation(&mut self, path: &Path) -> Result<(Input, BinRel), CliError> {
        let input = self.read(path)?;
        let rel = parse_relation_auto(&input.content).map_err(|source| CliError::Input {
            path: input.label.clone(),
            source,
        })?;
        Ok((input, rel))
    }

    fn read_structure(&mut self, path: &Path) -> Result<(Input, Structure), CliError> {
        let input = self.read(path)?;
        let s = parse_structure_json(&input.content).map_err(|source| CliError::Input {
            path: input.label.clone(),
            source,
        })?;
        Ok((input, s))
    }

    fn read_algebra(&mut self, path: &Path) -> Result<(Input, FinAlgebra), CliError> {
        let input = self.read(path)?;
        let a = parse_algebra_json(&input.content).map_err(|source| CliError::Input {
            path: input.label.clone(),
            source,
        })?;
        Ok((input, a))
    }
}

fn sha256_hex(content: &str) -> String {
    let digest = Sha256::digest(content.as_bytes());
    let mut hex = String::with_capacity(digest.len() * 2);
    for byte in digest.iter() {
        let _ = write!(hex, "{byte:02x}");
    }
    hex
}

fn emit_json<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("reports serialize")
    );
}

/// Prints (unless --quiet), stamps timing (if --timings), and converts the
/// certificate verdict into the exit code.
fn finish_certificate(mut cert: Certificate, started: Instant, g: &GlobalOpts) -> u8 {
    if g.timings {
        cert.elapsed_ms = Some(started.elapsed().as_millis() as u64);
    }
    if !g.quiet {
        if g.json {
            emit_json(&cert);
        } else {
            print_certificate(&cert);
        }
    }
    if cert.all_passed() {
        0
    } else {
        1
    }
}

fn print_certificate(cert: &Certificate) {
    println!("== {} ==", cert.subject);
    for input in &cert.inputs {
        println!("input: {input}");
    }
    for check in &cert.checks {
        let tag = match check.status {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "SKIP",
            CheckStatus::Info => "INFO",
        };
        println!("{tag} {}: {}", check.name, check.detail);
        for witness in &check.witnesses {
            println!("       {witness}");
        }
    }
    let (passed, failed, skipped, info) = cert.counts();
    let overall = if cert.all_passed() { "pass" } else { "fail" };
    print!("overall: {overall} ({passed} passed, {failed} failed, {skipped} skipped, {info} info)");
    match cert.elapsed_ms {
        Some(ms) => println!(" in {ms} ms"),
        None => println!(),
    }
}

/// "{0,3} {1,2}" for an equivalence relation.
fn classes_summary(r: &BinRel) -> String {
    let mut out = String::new();
    for class in r.classes() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push('{');
        for (i, v) in class.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('}');
    }
    out
}

/// "a0+a2" for an atom set, or "0" for the empty set.
fn atom_set_summary(set: eqra_core::AtomSet) -> String {
    if set.is_empty() {
        return "0".to_string();
    }
    let mut out = String::new();
    for i in set.iter() {
        if !out.is_empty() {
            out.push('+');
        }
        let _ = write!(out, "a{i}");
    }
    out
}

// ---------------------------------------------------------------------
// Closure and lattice commands.

#[derive(Serialize)]
struct ClosureReport {
    base_size: usize,
    atom_count: usize,
    atom_sizes: Vec<usize>,
    identity_atoms: Vec<usize>,
    converse_map: Vec<usize>,
    comp_table: Vec<Vec<Vec<usize>>>,
    atoms: Vec<Vec<(usize, usize)>>,
}

impl ClosureReport {
    fn from_structure(s: &AtomStructure) -> ClosureReport {
        ClosureReport {
            base_size: s.base_size(),
            atom_count: s.atom_count(),
            atom_sizes: s.atoms().iter().map(BinRel::pair_count).collect(),
            identity_atoms: s.identity_atoms().to_vec(),
            converse_map: s.converse_map().to_vec(),
            comp_table: s
                .comp_table()
                .iter()
                .map(|row| row.iter().map(|set| set.to_vec()).collect())
                .collect(),
            atoms: s.atoms().iter().map(|r| r.pairs().collect()).collect(),
        }
    }
}

fn print_closure_text(s: &AtomStructure) {
    println!("base size: {}", s.base_size());
    println!("atom count: {}", s.atom_count());
    let sizes: Vec<String> = s
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, r)| format!("a{i}={}", r.pair_count()))
        .collect();
    println!("atom sizes: {}", sizes.join(" "));
    println!(
        "identity atoms: {}",
        atom_set_summary(s.identity_atoms())
    );
    let converse: Vec<String> = s
        .converse_map()
        .iter()
        .enumerate()
        .map(|(i, j)| format!("a{i}->a{j}"))
        .collect();
    println!("converse map: {}", converse.join(" "));
    println!("composition table (entry i,j is the atom set of a_i ; a_j):");
    for i in 0..s.atom_count() {
        let row: Vec<String> = s.comp_table()[i]
            .iter()
            .map(|set| atom_set_summary(*set))
            .collect();
        println!("  a{i}: {}", row.join("  "));
    }
}

fn cmd_closure(
    files: &[PathBuf],
    budget: usize,
    g: &GlobalOpts,
    reader: &mut InputReader,
) -> Result<u8, CliError> {
    let mut generators = Vec::new();
    for file in files {
        let (_, rel) = reader.read_relation(file)?;
        generators.push(rel);
    }
    let closed = ra_closure_with_budget(&generators, budget)?;
    if !g.quiet {
        if g.json {
            emit_json(&ClosureReport::from_structure(&closed));
        } else {
            print_closure_text(&closed);
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct LatticeReport {
    base_size: usize,
    element_count: usize,
    elements: Vec<Vec<(usize, usize)>>,
    hasse: Vec<(usize, usize)>,
    shape: MnShape,
}

impl LatticeReport {
    fn from_lattice(lat: &EqLattice, shape: MnShape) -> LatticeReport {
        LatticeReport {
            base_size: lat.base_size(),
            element_count: lat.len(),
            elements: lat
                .elements()
                .iter()
                .map(|r| r.pairs().collect())
                .collect(),
            hasse: lat.hasse(),
            shape,
        }
    }
}

fn print_lattice_text(lat: &EqLattice, shape: &MnShape, noun: &str) {
    println!("base size: {}", lat.base_size());
    println!("{noun}: {}", lat.len());
    for (i, r) in lat.elements().iter().enumerate() {
        println!("  e{i}: {}", classes_summary(r));
    }
    println!("hasse edges:");
    for (lo, hi) in lat.hasse() {
        println!("  e{lo} < e{hi}");
    }
    println!("shape: {}", shape.label());
}

fn cmd_eq_lattice(
    files: &[PathBuf],
    budget: usize,
    g: &GlobalOpts,
    reader: &mut InputReader,
) -> Result<u8, CliError> {
    let mut generators = Vec::new();
    for file in files {
        let (_, rel) = reader.read_relation(file)?;
        generators.push(rel);
    }
    let closed = ra_closure_with_budget(&generators, budget)?;
    let eqs = extract_equivalences(&closed)?;
    let lat = build_lattice(&eqs)?;
    let shape = mn_shape(&lat);
    if !g.quiet {
        if g.json {
            emit_json(&LatticeReport::from_lattice(&lat, shape));
        } else {
            print_lattice_text(&lat, &shape, "equivalences");
        }
    }
    Ok(0)
}

fn cmd_con(algebra: &Path, g: &GlobalOpts, reader: &mut InputReader) -> Result<u8, CliError> {
    let (_, a) = reader.read_algebra(algebra)?;
    let congs = congruences(&a)?;
    let lat = build_lattice(congs.elements())?;
    let shape = mn_shape(&lat);
    if !g.quiet {
        if g.json {
            emit_json(&LatticeReport::from_lattice(&lat, shape));
        } else {
            let ops: Vec<String> = a
                .operations()
                .iter()
                .map(|op| format!("{}/{}", op.name, op.arity))
                .collect();
            println!("operations: {}", ops.join(" "));
            print_lattice_text(&lat, &shape, "congruences");
        }
    }
    Ok(0)
}

fn cmd_ppf_cert(
    algebra: &Path,
    relations: &[PathBuf],
    started: Instant,
    g: &GlobalOpts,
    reader: &mut InputReader,
) -> Result<u8, CliError> {
    let (algebra_input, a) = reader.read_algebra(algebra)?;
    let mut rels = Vec::new();
    let mut digests = vec![(algebra_input.label, sha256_hex(&algebra_input.content))];
    for file in relations {
        let (input, rel) = reader.read_relation(file)?;
        digests.push((input.label, sha256_hex(&input.content)));
        rels.push(rel);
    }
    let mut cert = ppf_eq_certificate(&rels, &a)?;
    for (label, digest) in &digests {
        cert.add_input_digest(label, digest);
    }
    Ok(finish_certificate(cert, started, g))
}

// ---------------------------------------------------------------------
// Formula commands.

#[derive(Serialize)]
struct EvalFormulaReport {
    formula: String,
    free: [String; 2],
    fragment: FragmentReport,
    base_size: usize,
    pair_count: usize,
    pairs: Vec<(usize, usize)>,
}

fn parse_free(free: &str) -> Result<(String, String), CliError> {
    let parts: Vec<&str> = free.split(',').map(str::trim).collect();
    if parts.len() != 2 || parts[0].is_empty() || parts[1].is_empty() || parts[0] == parts[1] {
        return Err(CliError::Usage(format!(
            "--free expects two distinct comma-separated variables, got {free:?}"
        )));
    }
    Ok((parts[0].to_string(), parts[1].to_string()))
}

fn cmd_eval_formula(
    structure: &Path,
    formula: &str,
    free: &str,
    g: &GlobalOpts,
    reader: &mut InputReader,
) -> Result<u8, CliError> {
    let (_, s) = reader.read_structure(structure)?;
    let f = parse_formula(formula)?;
    let (x, y) = parse_free(free)?;
    let rel = evaluate_binary(&f, &s, &x, &y)?;
    let report = fragment_report(&f);
    if !g.quiet {
        if g.json {
            emit_json(&EvalFormulaReport {
                formula: f.to_string(),
                free: [x, y],
                fragment: report,
                base_size: rel.base_size(),
                pair_count: rel.pair_count(),
                pairs: rel.pairs().collect(),
            });
        } else {
            println!("formula: {f}");
            println!(
                "fragment: variables={} pp={} fo3={}",
                report.variable_count, report.is_pp, report.is_fo3
            );
            println!(
                "result ({x},{y}): {} pairs on base {}",
                rel.pair_count(),
                rel.base_size()
            );
            print!("{}", format_relation_matrix(&rel));
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct EvalTermReport {
    term: String,
    fo3: String,
    base_size: usize,
    pair_count: usize,
    pairs: Vec<(usize, usize)>,
}

fn cmd_eval_term(
    structure: &Path,
    term: &str,
    g: &GlobalOpts,
    reader: &mut InputReader,
) -> Result<u8, CliError> {
    let (_, s) = reader.read_structure(structure)?;
    let t = parse_ra_term(term)?;
    let rel = evaluate_ra_term(&t, &s)?;
    let fo3 = ra_term_to_fo3(&t);
    if !g.quiet {
        if g.json {
            emit_json(&EvalTermReport {
                term: t.to_string(),
                fo3: fo3.to_string(),
                base_size: rel.base_size(),
                pair_count: rel.pair_count(),
                pairs: rel.pairs().collect(),
            });
        } else {
            println!("term: {t}");
            println!("fo3: {fo3}");
            println!(
                "result: {} pairs on base {}",
                rel.pair_count(),
                rel.base_size()
            );
            print!("{}", format_relation_matrix(&rel));
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct PpSearchReport {
    symbol_count: usize,
    max_vars: usize,
    max_constraints: usize,
    candidate_estimate: u64,
    result: PpSearchResult,
}

fn cmd_pp_search(
    structure: &Path,
    target: &Path,
    max_vars: usize,
    max_constraints: usize,
    g: &GlobalOpts,
    reader: &mut InputReader,
) -> Result<u8, CliError> {
    let (_, s) = reader.read_structure(structure)?;
    let (_, target_rel) = reader.read_relation(target)?;
    let estimate = pp_search_estimate(s.symbol_count(), max_vars, max_constraints);
    let result = pp_search(&s, &target_rel, max_vars, max_constraints)?;
    if !g.quiet {
        if g.json {
            emit_json(&PpSearchReport {
                symbol_count: s.symbol_count(),
                max_vars,
                max_constraints,
                candidate_estimate: u64::try_from(estimate).unwrap_or(u64::MAX),
                result,
            });
        } else {
            println!("search space: about {estimate} candidate queries");
            match &result {
                PpSearchResult::Found { query } => {
                    println!("found: {}", query.to_formula());
                }
                PpSearchResult::NotFoundWithinBudget { examined } => {
                    println!(
                        "no conjunctive definition with at most {max_vars} variables and \
                         {max_constraints} constraints (examined {examined} queries)"
                    );
                }
            }
        }
    }
    Ok(0)
}

// ---------------------------------------------------------------------
// Construction commands.

fn cmd_zp2(
    p: usize,
    emit_dir: Option<&Path>,
    started: Instant,
    g: &GlobalOpts,
) -> Result<u8, CliError> {
    let mut cert = zp2_certificate(p)?;
    if let Some(dir) = emit_dir {
        let family = zp2_family(p)?;
        fs::create_dir_all(dir).map_err(|source| CliError::WriteFile {
            path: dir.display().to_string(),
            source,
        })?;
        let names = m_names(p - 1);
        let rels = family.all_relations();
        let mut written = Vec::new();
        for (name, rel) in names.iter().zip(rels.iter()) {
            let path = dir.join(format!("{name}.rel"));
            fs::write(&path, format_relation_pairs(rel)).map_err(|source| {
                CliError::WriteFile {
                    path: path.display().to_string(),
                    source,
                }
            })?;
            written.push(path.display().to_string());
        }
        cert.push(
            Check::info(
                "files-emitted",
                format!("{} relation files in pair format", written.len()),
            )
            .with_witnesses(written),
        );
    }
    Ok(finish_certificate(cert, started, g))
}

fn cmd_represent_mn(
    m: usize,
    prime: Option<usize>,
    budget: usize,
    started: Instant,
    g: &GlobalOpts,
) -> Result<u8, CliError> {
    let rep = represent_mn_config(m, prime, budget)?;
    let code = if rep.passed() { 0 } else { 1 };
    if g.quiet {
        return Ok(code);
    }
    if g.json {
        let mut rep = rep;
        if g.timings {
            rep.certificate.elapsed_ms = Some(started.elapsed().as_millis() as u64);
        }
        emit_json(&rep);
    } else {
        println!(
            "m: {m}  base size: {}  generators: {}  atoms: {}  equivalences: {}  shape: {}",
            rep.base_size,
            rep.generator_names.join(" "),
            rep.atom_count,
            rep.equivalence_count,
            rep.shape.label()
        );
        return Ok(finish_certificate(rep.certificate, started, g));
    }
    Ok(code)
}

fn parse_unsafe_pn(text: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || {
        CliError::Usage(format!(
            "--unsafe-pn expects \"P,N\" with two integers, got {text:?}"
        ))
    };
    if parts.len() != 2 {
        return Err(bad());
    }
    let p = parts[0].parse::<usize>().map_err(|_| bad())?;
    let n = parts[1].parse::<usize>().map_err(|_| bad())?;
    Ok((p, n))
}

/// Absorbs a sub-certificate, turning a construction error into a failed
/// check so the suite never aborts early.
fn absorb_outcome(
    cert: &mut Certificate,
    prefix: &str,
    outcome: Result<Certificate, ConstructionError>,
) {
    match outcome {
        Ok(sub) => cert.absorb(prefix, sub),
        Err(e) => cert.push(Check::fail(format!("{prefix}/error"), e.to_string())),
    }
}

fn cmd_verify_all(
    unsafe_pn: Option<&str>,
    budget: usize,
    started: Instant,
    g: &GlobalOpts,
) -> Result<u8, CliError> {
    let extra = unsafe_pn.map(parse_unsafe_pn).transpose()?;
    let mut cert = Certificate::new("verification-suite");

    for p in [2, 3, 5, 7, 11] {
        absorb_outcome(&mut cert, &format!("family-p{p}"), zp2_certificate(p));
    }
    for p in [5, 7] {
        absorb_outcome(
            &mut cert,
            &format!("composition-p{p}"),
            lemma_composition_certificate(p),
        );
    }
    for (p, n) in [(5, 1), (5, 2), (7, 1), (7, 2), (7, 3), (7, 4)] {
        absorb_outcome(
            &mut cert,
            &format!("recovery-p{p}-n{n}"),
            lemma1_certificate(p, n, budget, false),
        );
    }
    absorb_outcome(&mut cert, "example-2x2", example_2x2_certificate(budget));
    for p in [3, 5, 7] {
        absorb_outcome(
            &mut cert,
            &format!("congruence-lattice-p{p}"),
            con_zp2_certificate(p),
        );
    }
    for p in [5, 7] {
        absorb_outcome(
            &mut cert,
            &format!("definability-gap-p{p}"),
            pp_closure_gap_certificate(p, budget),
        );
    }
    for m in 1..=8 {
        match represent_mn_config(m, None, budget) {
            Ok(rep) => cert.absorb(&format!("represent-m{m}"), rep.certificate),
            Err(e) => cert.push(Check::fail(format!("represent-m{m}/error"), e.to_string())),
        }
    }
    if let Some((p, n)) = extra {
        absorb_outcome(
            &mut cert,
            &format!("exploratory-p{p}-n{n}"),
            lemma1_certificate(p, n, budget, true),
        );
    }

    Ok(finish_certificate(cert, started, g))
}
