use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use safeadapt::assurance::{render_tree, DesignTime};
use safeadapt::controller::NetControllerSpec;
use safeadapt::harness::system::load_case;
use safeadapt::harness::{run_scenario, write_outputs, HarnessError, Scenario, SystemDescription};
use safeadapt::mapek::assess_candidate;
use safeadapt::taxonomy::{verdict_for, TaxonomyVerdict};

#[derive(Parser)]
#[command(name = "safeadapt", version, about = "Safety-critical self-adaptive water heater toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write the trace CSV and the JSON report.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the decision log as JSON lines.
        #[arg(long)]
        decisions: Option<PathBuf>,
    },
    /// Classify every adaptation model and check its obligations at design time.
    Classify {
        #[arg(long)]
        system: PathBuf,
    },
    /// Check a safety case file against the system's obligations.
    CheckCase {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        case: PathBuf,
        /// Print the indented case tree to stderr.
        #[arg(long)]
        tree: bool,
    },
    /// Run the assessment suite on a candidate network.
    Assess {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        candidate: PathBuf,
    },
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn design_verdicts(system: &SystemDescription) -> Result<Vec<TaxonomyVerdict>, HarnessError> {
    let case = system.case()?;
    let obs = DesignTime { guard_enabled: true };
    system
        .models
        .iter()
        .map(|m| verdict_for(m, case, 0.0, &obs).map_err(HarnessError::from))
        .collect()
}

fn code_for(verdicts: &[TaxonomyVerdict]) -> i32 {
    if verdicts.iter().all(TaxonomyVerdict::all_discharged) {
        0
    } else {
        3
    }
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Simulate {
            scenario,
            system,
            out,
            report,
            seed,
            decisions,
        } => {
            let sc = Scenario::from_json(&read(&scenario)?)?;
            let sys = SystemDescription::load(&system)?;
            let output = run_scenario(&sc, &sys, seed)?;
            write_outputs(&output.trace, &output.report, &out, &report, decisions.as_deref())?;
            Ok(output.report.exit_code())
        }
        Command::Classify { system } => {
            let sys = SystemDescription::load(&system)?;
            let verdicts = design_verdicts(&sys)?;
            print_json(&verdicts);
            Ok(code_for(&verdicts))
        }
        Command::CheckCase { system, case, tree } => {
            let mut sys = SystemDescription::load(&system)?;
            sys.safety_case = Some(load_case(&case)?);
            let verdicts = design_verdicts(&sys)?;
            if tree {
                eprint!("{}", render_tree(sys.case()?, None));
            }
            print_json(&verdicts);
            Ok(code_for(&verdicts))
        }
        Command::Assess { system, candidate } => {
            let sys = SystemDescription::load(&system)?;
            let spec: NetControllerSpec = serde_json::from_str(&read(&candidate)?)
                .map_err(|e| HarnessError::validation("candidate", &e.to_string()))?;
            spec.validate()?;
            let suite = sys.suite().ok_or_else(|| {
                HarnessError::validation("system.assessment", "no assessment envelope configured")
            })?;
            let assessment = assess_candidate(&spec, &suite);
            let pass = assessment.verdict == safeadapt::assurance::Verdict::Pass;
            print_json(&assessment);
            Ok(if pass { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
