//! Command-line entry point: axiom checks, bracket and K-product queries,
//! graded dimensions, realization checks, shift characters, Verma duality
//! runs, and the full selftest gate.
//!
//! Exit codes: 0 all checks pass, 1 a check failed (witnesses printed),
//! 2 unknown algebra / unreadable file / malformed input.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use lcsa_core::algebras::BuiltinId;
use lcsa_core::annihilation::AnnSpace;
use lcsa_core::conformal::Presentation;
use lcsa_core::geo::{builtin_geo_tag, check_realization};
use lcsa_core::repmod::{
    build_verma, distinguished_elements, dual_verma_restriction, eval_character, shift_character,
    verify_duality,
};
use lcsa_core::superpoly::{q_display, IndexSeq};
use lcsa_dsl::report::Report;
use lcsa_dsl::{emit_report, parse_algebra, parse_element, parse_g0_module};

#[derive(Parser)]
#[command(
    name = "lcsa",
    version,
    about = "exact lambda-bracket calculus for conformal superalgebras"
)]
struct Cli {
    /// Emit a JSON report instead of text
    #[arg(long, global = true)]
    json: bool,
    /// Write the report to a file instead of stdout
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Seed for the randomized property suites
    #[arg(long, global = true, default_value_t = 0x5eed)]
    seed: u64,
    /// Cap on worker threads (flag wins over LCSA_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Axioms and structural assumptions of an algebra
    Check { algebra: String },
    /// Lambda bracket of two elements
    Bracket {
        algebra: String,
        x: String,
        y: String,
    },
    /// K-product (a_K b) for a canonical index sequence K (e.g. "1,1")
    Kproduct {
        algebra: String,
        a: String,
        b: String,
        k: String,
    },
    /// Graded dimensions of the annihilation algebra
    AnnDim {
        algebra: String,
        #[arg(long, allow_hyphen_values = true)]
        from: i64,
        #[arg(long, allow_hyphen_values = true)]
        to: i64,
    },
    /// Realization isomorphism check up to a degree bound
    RealizeCheck {
        algebra: String,
        #[arg(long, default_value_t = 2)]
        dmax: i64,
    },
    /// Shift character on the degree-0 component
    ShiftChar { algebra: String },
    /// Dual restriction and duality theorem for a module file
    VermaDual {
        algebra: String,
        module_file: String,
        #[command(flatten)]
        opts: VermaOpts,
    },
    /// The full acceptance suite
    Selftest {
        /// Include the rank-1024 E(5,10) case
        #[arg(long)]
        slow: bool,
    },
}

#[derive(Args)]
struct VermaOpts {
    /// Degree window for the positive-annihilation check
    #[arg(long, default_value_t = 4)]
    window: i64,
}

fn load_algebra(arg: &str) -> Result<Presentation, String> {
    if let Some(id) = BuiltinId::parse(arg) {
        return id.build().map_err(|e| e.to_string());
    }
    if std::path::Path::new(arg).exists() {
        let text = std::fs::read_to_string(arg).map_err(|e| format!("{arg}: {e}"))?;
        return parse_algebra(&text).map_err(|e| format!("{arg}:{e}"));
    }
    Err(format!(
        "unknown algebra `{arg}` (expected RW(r,s), K(1,n), RE36, RE38, RE510 or a .lcsa file)"
    ))
}

struct Output {
    json: bool,
    out: Option<std::path::PathBuf>,
}

impl Output {
    fn emit(&self, report: Report, text: impl FnOnce()) -> Result<(), String> {
        if let Some(path) = &self.out {
            std::fs::write(path, emit_report(&report))
                .map_err(|e| format!("{}: {e}", path.display()))?;
            return Ok(());
        }
        if self.json {
            println!("{}", emit_report(&report));
        } else {
            text();
        }
        Ok(())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("LCSA_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global();
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, String> {
    let output = Output { json: cli.json, out: cli.out.clone() };
    match cli.cmd {
        Cmd::Check { algebra } => {
            let pres = load_algebra(&algebra)?;
            let name = pres.name.clone();
            let rep = pres.check();
            let mut passed = rep.passed();
            let mut witnesses = rep.witnesses();
            if passed {
                let space = AnnSpace::new(pres);
                if let Err(e) = space.check_assumptions(2) {
                    passed = false;
                    witnesses.push(e.to_string());
                }
            }
            let report =
                Report::new(&name, "axioms+assumptions", passed).with_witnesses(witnesses.clone());
            output.emit(report, || {
                if passed {
                    println!("{name}: axioms and assumptions hold");
                } else {
                    println!("{name}: FAILED");
                    for w in witnesses.iter().take(10) {
                        println!("  {w}");
                    }
                }
            })?;
            Ok(passed)
        }
        Cmd::Bracket { algebra, x, y } => {
            let pres = load_algebra(&algebra)?;
            let ex = parse_element(&x, &pres).map_err(|e| e.to_string())?;
            let ey = parse_element(&y, &pres).map_err(|e| e.to_string())?;
            let v = pres.bracket(&ex, &ey);
            let mut report = Report::new(&pres.name, "bracket", true);
            report
                .characters
                .insert("value".into(), format!("{}", v.display(&pres.gens)));
            output.emit(report, || {
                println!("{}", v.display(&pres.gens));
            })?;
            Ok(true)
        }
        Cmd::Kproduct { algebra, a, b, k } => {
            let pres = load_algebra(&algebra)?;
            let ea = parse_element(&a, &pres).map_err(|e| e.to_string())?;
            let eb = parse_element(&b, &pres).map_err(|e| e.to_string())?;
            let entries: Vec<u8> = if k.trim().is_empty() {
                Vec::new()
            } else {
                k.split(',')
                    .map(|s| s.trim().parse::<u8>().map_err(|e| e.to_string()))
                    .collect::<Result<_, _>>()?
            };
            let v = pres
                .k_product(&ea, &eb, &IndexSeq::new(entries))
                .map_err(|e| e.to_string())?;
            let mut report = Report::new(&pres.name, "kproduct", true);
            report
                .characters
                .insert("value".into(), format!("{}", v.display(&pres.gens)));
            output.emit(report, || {
                println!("{}", v.display(&pres.gens));
            })?;
            Ok(true)
        }
        Cmd::AnnDim { algebra, from, to } => {
            let pres = load_algebra(&algebra)?;
            let name = pres.name.clone();
            let space = AnnSpace::new(pres);
            let mut dims = BTreeMap::new();
            let mut lines = Vec::new();
            for d in from..=to {
                let dim = space.graded_basis(d).dim;
                dims.insert(d.to_string(), dim.to_string());
                lines.push(format!("degree {d}: {dim}"));
            }
            let mut report = Report::new(&name, "ann-dim", true);
            report.dims = dims;
            output.emit(report, || {
                for l in lines {
                    println!("{l}");
                }
            })?;
            Ok(true)
        }
        Cmd::RealizeCheck { algebra, dmax } => {
            let pres = load_algebra(&algebra)?;
            let name = pres.name.clone();
            let tag = builtin_geo_tag(&name)
                .ok_or_else(|| format!("{name}: no geometric realization declared"))?;
            let space = AnnSpace::new(pres);
            let outcome = check_realization(&space, tag, dmax);
            let passed = outcome.is_ok();
            let report = Report::new(&name, "realize-check", passed)
                .with_witnesses(outcome.err().map(|e| e.to_string()).into_iter().collect());
            let witnesses = report.witnesses.clone();
            output.emit(report, || {
                if passed {
                    println!("{name}: realization matches up to degree {dmax}");
                } else {
                    println!("{name}: FAILED: {}", witnesses.join("; "));
                }
            })?;
            Ok(passed)
        }
        Cmd::ShiftChar { algebra } => {
            let pres = load_algebra(&algebra)?;
            let name = pres.name.clone();
            let space = AnnSpace::new(pres);
            let ch = shift_character(&space).map_err(|e| e.to_string())?;
            let mut characters = BTreeMap::new();
            let b0 = space.graded_basis(0);
            for (i, c) in ch.chi.iter().enumerate() {
                let (m, g) = b0.symbols[i];
                let mut label = String::new();
                for idx in m.factors(space.spec()) {
                    label.push_str(&format!("y{idx} "));
                }
                label.push_str(&space.pres.gens[g as usize].name);
                characters.insert(label, q_display(c));
            }
            let mut named = Vec::new();
            for (label, el) in distinguished_elements(&space) {
                let v = eval_character(&space, &ch.chi, &el).map_err(|e| e.to_string())?;
                characters.insert(label.clone(), q_display(&v));
                named.push((label, v));
            }
            let mut report = Report::new(&name, "shift-char", true);
            report.characters = characters.clone();
            output.emit(report, || {
                for (label, v) in &named {
                    println!("chi({label}) = {}", q_display(v));
                }
                for (label, v) in &characters {
                    println!("chi on basis {label} = {v}");
                }
            })?;
            Ok(true)
        }
        Cmd::VermaDual {
            algebra,
            module_file,
            opts,
        } => {
            let pres = load_algebra(&algebra)?;
            let name = pres.name.clone();
            let text =
                std::fs::read_to_string(&module_file).map_err(|e| format!("{module_file}: {e}"))?;
            let fmod = parse_g0_module(&text, &pres).map_err(|e| format!("{module_file}:{e}"))?;
            let space = Arc::new(AnnSpace::new(pres));
            fmod.validate(&space).map_err(|e| e.to_string())?;
            let verma = build_verma(space.clone(), &fmod).map_err(|e| e.to_string())?;
            let mut witnesses = Vec::new();
            let axioms = verma.cm.residual_module_axioms(&space);
            if !axioms.is_empty() {
                witnesses.extend(axioms);
            }
            if let Err(e) = dual_verma_restriction(&verma, opts.window) {
                witnesses.push(e.to_string());
            }
            if let Err(e) = verify_duality(&verma) {
                witnesses.push(e.to_string());
            }
            let passed = witnesses.is_empty();
            let mut report =
                Report::new(&name, "verma-dual", passed).with_witnesses(witnesses.clone());
            report.dims.insert("rank".into(), verma.rank().to_string());
            output.emit(report, || {
                if passed {
                    println!(
                        "{name}: duality verified for the rank-{} module",
                        verma.rank()
                    );
                } else {
                    println!("{name}: FAILED");
                    for w in witnesses.iter().take(10) {
                        println!("  {w}");
                    }
                }
            })?;
            Ok(passed)
        }
        Cmd::Selftest { slow } => {
            let mut results = lcsa_core::selftest::run_core_criteria(cli.seed, slow);
            results.push(dsl_criterion());
            let mut all = true;
            for r in &results {
                println!(
                    "criterion {}: {} ({} ms) - {}",
                    r.id,
                    if r.passed { "PASS" } else { "FAIL" },
                    r.millis,
                    r.name
                );
                for d in &r.details {
                    println!("    {d}");
                }
                all &= r.passed;
            }
            if cli.json || output.out.is_some() {
                let mut report = Report::new("all", "selftest", all);
                report.witnesses = results
                    .iter()
                    .filter(|r| !r.passed)
                    .flat_map(|r| r.details.clone())
                    .collect();
                if output.out.is_some() {
                    output.emit(report, || {})?;
                } else {
                    println!("{}", emit_report(&report));
                }
            }
            Ok(all)
        }
    }
}

/// Criterion 9 as a selftest entry: round-trip plus fuzzing.
fn dsl_criterion() -> lcsa_core::selftest::CriterionResult {
    use rand::{Rng, SeedableRng};
    let t = std::time::Instant::now();
    let mut details = Vec::new();
    let mut passed = true;
    let seeds: Vec<(String, String)> = lcsa_core::algebras::acceptance_builtins()
        .iter()
        .map(|p| (p.name.clone(), lcsa_dsl::print_algebra(p)))
        .collect();
    for (pres, (name, text)) in lcsa_core::algebras::acceptance_builtins()
        .into_iter()
        .zip(&seeds)
    {
        match parse_algebra(text) {
            Ok(back) => {
                if !lcsa_dsl::printer::presentations_equal(&pres, &back) {
                    passed = false;
                    details.push(format!("{name}: round trip differs"));
                }
            }
            Err(e) => {
                passed = false;
                details.push(format!("{name}: reparse failed: {e}"));
            }
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let printable: Vec<u8> = (0x20u8..0x7f).collect();
    for case in 0..10_000usize {
        let mut bytes = seeds[case % seeds.len()].1.clone().into_bytes();
        for _ in 0..rng.random_range(1..=8) {
            if bytes.is_empty() {
                break;
            }
            let pos = rng.random_range(0..bytes.len());
            match rng.random_range(0..3) {
                0 => bytes[pos] = printable[rng.random_range(0..printable.len())],
                1 => bytes.insert(pos, printable[rng.random_range(0..printable.len())]),
                _ => {
                    bytes.remove(pos);
                }
            }
        }
        let text = String::from_utf8_lossy(&bytes).into_owned();
        let _ = parse_algebra(&text);
    }
    lcsa_core::selftest::CriterionResult {
        id: "9".into(),
        name: "dsl round-trip and fuzzing".into(),
        passed,
        details,
        millis: t.elapsed().as_millis(),
    }
}
