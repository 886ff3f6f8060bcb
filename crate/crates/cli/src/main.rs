//! Command-line driver for the stratum classifier and its search oracle.
//!
//! Exit codes: 0 success, 1 internal error, 2 validation failure,
//! 3 counterexample found by fuzz or verify-lemmas.

mod config;
mod lemmas;

use clap::{Parser, Subcommand, ValueEnum};
use config::{parse_input, InputKind};
use std::path::PathBuf;
use std::process::ExitCode;
use unitary_strata::classifier::{
    classify_genericity, depth_zero_rule, ClassificationReport, DepthZeroInput, WitnessReport,
};
use unitary_strata::fuzz::{run_fuzz, FuzzConfig};
use unitary_strata::lattice::Catalogued;
use unitary_strata::padic::{format_base, PrimeConfig};
use unitary_strata::xbeta::{
    assemble_system, brute_search, hensel_check, newton_lift, SearchOutcome, SearchParams,
};

#[derive(Parser)]
#[command(name = "unitary-strata", version, about = "Classify skew strata of a three-variable unitary group and cross-check the decisions by rational-point search")]
struct Cli {
    /// Worker threads for search, fuzz and verification (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Decide genericity for the stratum in the input file.
    Classify {
        input: PathBuf,
        /// Also run the point search and attach a certified witness.
        #[arg(long)]
        search: bool,
        /// Search depth (residual digits) when --search is given.
        #[arg(long, default_value_t = 12)]
        depth: usize,
    },
    /// Search the quadric pair of the stratum for a certified point.
    SearchXbeta {
        input: PathBuf,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        /// Node budget for the refinement tree.
        #[arg(long, default_value_t = 20_000_000)]
        budget: u64,
    },
    /// Cross-validate the emptiness criteria against the search oracle.
    Fuzz {
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        depth: usize,
        /// Depth used for the single escalation pass.
        #[arg(long, default_value_t = 16)]
        escalate: usize,
        #[arg(long, default_value_t = 4_000_000)]
        budget: u64,
    },
    /// Print the endomorphism filtration of a catalogued lattice sequence.
    FiltrationTable {
        /// L1, L2 or L3.
        #[arg(long)]
        lattice: String,
        #[arg(long, default_value_t = false)]
        ramified: bool,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        from: i64,
        #[arg(long, default_value_t = 7, allow_hyphen_values = true)]
        to: i64,
        /// Prime (only the ramification convention matters for the table).
        #[arg(long, default_value_t = 5)]
        p: u64,
    },
    /// Run the identity and inequality suites; nonzero exit on any
    /// counterexample.
    VerifyLemmas {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("internal error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn read_input(path: &PathBuf) -> Result<config::ParsedInput, unitary_strata::Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| unitary_strata::Error::Parse(format!("{}: {e}", path.display())))?;
    parse_input(&text)
}

fn run(cli: Cli) -> Result<ExitCode, unitary_strata::Error> {
    match cli.command {
        Command::Classify { input, search, depth } => {
            let parsed = read_input(&input)?;
            match parsed.kind {
                InputKind::DepthZero { lattice, sigma_generic } => {
                    let verdict = depth_zero_rule(&DepthZeroInput {
                        ramified: parsed.cfg.ramified,
                        lattice_kind: lattice,
                        sigma_is_generic_cuspidal: sigma_generic,
                    });
                    match cli.format {
                        Format::Text => {
                            println!("depth-zero stratum ({})", ram_str(&parsed.cfg));
                            println!("  parahoric: {}", lattice.name());
                            println!("  finite-group cuspidal generic: {sigma_generic}");
                            println!("verdict: {verdict:?}");
                        }
                        Format::Json => {
                            println!(
                                "{}",
                                serde_json::json!({
                                    "depth_zero": true,
                                    "lattice": lattice.name(),
                                    "sigma_generic": sigma_generic,
                                    "verdict": verdict,
                                })
                            );
                        }
                    }
                    Ok(ExitCode::SUCCESS)
                }
                InputKind::Stratum(s) => {
                    let violations = s.validate();
                    if !violations.is_empty() {
                        match cli.format {
                            Format::Text => {
                                eprintln!("stratum is invalid:");
                                for v in &violations {
                                    eprintln!("  - {v}");
                                }
                            }
                            Format::Json => {
                                println!("{}", serde_json::json!({ "violations": violations }));
                            }
                        }
                        return Ok(ExitCode::from(2));
                    }
                    let mut report = classify_genericity(&s)?;
                    if search {
                        report.witness = find_witness(&parsed.cfg, &s, depth)?;
                    }
                    print_report(&report, cli.format);
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::SearchXbeta { input, depth, budget } => {
            let parsed = read_input(&input)?;
            let InputKind::Stratum(s) = parsed.kind else {
                return Err(unitary_strata::Error::UnsupportedConfiguration(
                    "search needs a positive-depth stratum".into(),
                ));
            };
            let violations = s.validate();
            if !violations.is_empty() {
                eprintln!("stratum is invalid: {}", violations.join("; "));
                return Ok(ExitCode::from(2));
            }
            let sys = assemble_system(&s)?;
            let out = brute_search(&parsed.cfg, &sys, &SearchParams { depth, node_budget: budget });
            match out {
                SearchOutcome::Found(w) => {
                    let cert = hensel_check(&parsed.cfg, &sys, &w).ok();
                    let lifted = cert
                        .as_ref()
                        .and_then(|c| newton_lift(&parsed.cfg, &sys, &w, c).ok());
                    let rep = WitnessReport {
                        coords: w.point.iter().map(format_base).collect(),
                        residual_level: w.residual_level,
                        pinned: w.pinned,
                        certificate: cert.clone(),
                    };
                    match cli.format {
                        Format::Text => {
                            println!("witness found (residual level {}):", rep.residual_level);
                            for (i, c) in rep.coords.iter().enumerate() {
                                println!("  x{} = {c}", i + 1);
                            }
                            match &rep.certificate {
                                Some(c) => {
                                    println!(
                                        "certificate: minor columns ({}, {}), minor valuation {}, residual level {}",
                                        c.minor_cols.0, c.minor_cols.1, c.minor_valuation, c.residual_level
                                    );
                                    if let Some(l) = lifted {
                                        println!("lifted point (exact to working precision):");
                                        for (i, c) in l.iter().enumerate() {
                                            println!("  x{} = {}", i + 1, format_base(c));
                                        }
                                    }
                                }
                                None => println!("certificate: none (residual level too small for the Jacobian)"),
                            }
                        }
                        Format::Json => println!("{}", serde_json::to_string(&rep).unwrap()),
                    }
                    Ok(ExitCode::SUCCESS)
                }
                SearchOutcome::NotFound { exhausted } => {
                    match cli.format {
                        Format::Text => println!(
                            "no point found to depth {depth} ({}); this is {}",
                            if exhausted { "all branches exhausted" } else { "node budget reached" },
                            if exhausted { "strong evidence of emptiness" } else { "inconclusive" },
                        ),
                        Format::Json => println!(
                            "{}",
                            serde_json::json!({ "found": false, "exhausted": exhausted, "depth": depth })
                        ),
                    }
                    Ok(ExitCode::SUCCESS)
                }
            }
        }
        Command::Fuzz { trials, seed, depth, escalate, budget } => {
            if trials == 0 {
                return Err(unitary_strata::Error::InvalidConfig("trials must be positive".into()));
            }
            if depth < 4 {
                return Err(unitary_strata::Error::InvalidConfig("depth must be at least 4".into()));
            }
            let outcome = run_fuzz(&FuzzConfig {
                trials,
                seed,
                depth,
                escalated_depth: escalate,
                node_budget: budget,
            });
            match cli.format {
                Format::Text => {
                    println!("trials: {}", outcome.trials);
                    println!("agreements: {}", outcome.agreements);
                    println!("soft failures: {}", outcome.soft_failures);
                    println!("hard failures: {}", outcome.hard_failures);
                    println!("unresolved (budget): {}", outcome.unresolved);
                    println!("cases:");
                    for (k, v) in &outcome.histogram {
                        println!("  {k}: {v}");
                    }
                    if let Some(f) = &outcome.first_hard_failure {
                        println!("first hard failure: {f}");
                    }
                }
                Format::Json => println!("{}", serde_json::to_string(&outcome).unwrap()),
            }
            if outcome.hard_failures > 0 {
                Ok(ExitCode::from(3))
            } else {
                Ok(ExitCode::SUCCESS)
            }
        }
        Command::FiltrationTable { lattice, ramified, from, to, p } => {
            let cfg = if ramified {
                PrimeConfig::ramified(p, 24)?
            } else {
                PrimeConfig::unramified(p, 24)?
            };
            let kind = Catalogued::parse(&lattice).ok_or_else(|| {
                unitary_strata::Error::Parse(format!("unknown lattice `{lattice}`"))
            })?;
            let seq = kind.sequence(&cfg)?;
            println!(
                "# {} ({}), period {}",
                kind.name(),
                ram_str(&cfg),
                seq.period
            );
            for n in from..=to {
                let f = seq.hom_filtration(n);
                let u = seq.uder_level(&cfg, n)?;
                let rows: Vec<String> = f
                    .vals
                    .iter()
                    .map(|r| format!("[{:>3} {:>3} {:>3}]", r[0], r[1], r[2]))
                    .collect();
                println!("n = {n:>3}:  {}  u-der level {u}", rows.join(" "));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyLemmas { seed, trials } => {
            if trials == 0 {
                return Err(unitary_strata::Error::InvalidConfig("trials must be positive".into()));
            }
            let failures = lemmas::run_all(seed, trials);
            if failures.is_empty() {
                println!("all suites passed");
                Ok(ExitCode::SUCCESS)
            } else {
                for f in &failures {
                    println!("counterexample: {f}");
                }
                Ok(ExitCode::from(3))
            }
        }
    }
}

fn ram_str(cfg: &PrimeConfig) -> String {
    format!("p = {}, {}", cfg.p, if cfg.ramified { "ramified" } else { "unramified" })
}

fn find_witness(
    cfg: &PrimeConfig,
    s: &unitary_strata::strata::Stratum,
    depth: usize,
) -> Result<Option<WitnessReport>, unitary_strata::Error> {
    let sys = assemble_system(s)?;
    match brute_search(cfg, &sys, &SearchParams { depth, node_budget: 20_000_000 }) {
        SearchOutcome::Found(w) => {
            let cert = hensel_check(cfg, &sys, &w).ok();
            Ok(Some(WitnessReport {
                coords: w.point.iter().map(format_base).collect(),
                residual_level: w.residual_level,
                pinned: w.pinned,
                certificate: cert,
            }))
        }
        SearchOutcome::NotFound { .. } => Ok(None),
    }
}

fn print_report(report: &ClassificationReport, format: Format) {
    match format {
        Format::Json => println!("{}", serde_json::to_string(report).unwrap()),
        Format::Text => {
            println!("stratum type: {}", report.stratum_type);
            println!("flag variety: {:?}", report.xbeta);
            println!("verdict: {:?}", report.verdict);
            println!("case path:");
            for step in &report.case_path {
                println!("  [{}] {} => {}", step.rule, step.inputs, step.outcome);
            }
            if let Some(w) = &report.witness {
                println!("witness (residual level {}):", w.residual_level);
                for (i, c) in w.coords.iter().enumerate() {
                    println!("  x{} = {c}", i + 1);
                }
                if let Some(c) = &w.certificate {
                    println!(
                        "  certificate: minor ({}, {}), valuation {}",
                        c.minor_cols.0, c.minor_cols.1, c.minor_valuation
                    );
                }
            }
        }
    }
}
