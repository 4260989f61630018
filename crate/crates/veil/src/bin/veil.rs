use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use veil_core::{retransform, PipelineSpec};
use veil::annotations::Annotations;
use veil::config::Config;
use veil::endpoint::LlmEndpoint;
use veil::error::{Error, Result};
use veil::experiment::{evaluate, ExperimentPlan, RunOptions};
use veil::gateway::{run_cycle, SessionOptions};
use veil::{corpus, session};

/// Reversible obfuscation of sensitive phrases in text sent to an LLM.
#[derive(Parser)]
#[command(name = "veil", version)]
struct Cli {
    /// Main config file (TOML).
    #[arg(long, global = true, env = "VEIL_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Obfuscate a document and write its session file.
    Transform {
        #[arg(long)]
        input: PathBuf,
        /// Stages in order, e.g. `UPT+NER+PoS`.
        #[arg(long, value_parser = parse_spec)]
        spec: PipelineSpec,
        #[arg(long, default_value = ".")]
        session_dir: PathBuf,
        #[arg(long)]
        session_id: Option<String>,
    },
    /// Restore originals in a response using a session file.
    Retransform {
        #[arg(long)]
        response: PathBuf,
        #[arg(long)]
        session: PathBuf,
    },
    /// Run one corpus question through a full cycle and print the result as JSON.
    Cycle {
        #[arg(long)]
        corpus: PathBuf,
        /// Question id within the corpus.
        #[arg(long)]
        id: String,
        #[arg(long, value_parser = parse_spec)]
        spec: PipelineSpec,
        /// Append the out-of-context instruction to the prompt.
        #[arg(long)]
        prompt_engineering: bool,
        #[arg(long)]
        session_dir: Option<PathBuf>,
        #[arg(long)]
        session_id: Option<String>,
    },
    /// Run an experiment plan and write STT/ILM/ILS/IL reports.
    Evaluate {
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Keep every cycle's session file here.
        #[arg(long)]
        session_dir: Option<PathBuf>,
    },
    /// Inspect session files.
    #[command(subcommand)]
    Session(SessionCommand),
}

#[derive(Subcommand)]
enum SessionCommand {
    /// List session files in a directory.
    List { dir: PathBuf },
    /// Print a session's mappings in stage and offset order.
    Show { path: PathBuf },
    /// Check that tokens and per-stage originals are unique.
    Verify { path: PathBuf },
}

fn parse_spec(s: &str) -> Result<PipelineSpec, String> {
    PipelineSpec::parse(s).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p),
        None => Ok(Config::default()),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_stdout(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
    let _ = out.flush();
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config_path = cli.config.as_deref();
    match cli.command {
        Command::Transform {
            input,
            spec,
            session_dir,
            session_id,
        } => {
            let config = load_config(config_path)?;
            let text = read(&input)?;
            let mut table = match session_id {
                Some(id) => session::create_session_with_id(id, spec),
                None => session::create_session(spec),
            };
            let out = config.obfuscator()?.transform(&text, &mut table)?;
            let path = session::persist(&table, &session_dir)?;
            write_stdout(&out.obfuscated);
            eprintln!("session: {}", path.display());
        }
        Command::Retransform { response, session } => {
            let table = session::load(&session)?;
            let back = retransform(&read(&response)?, &table);
            write_stdout(&back.clarified);
            for r in &back.residuals {
                eprintln!("residual: {r}");
            }
        }
        Command::Cycle {
            corpus: corpus_path,
            id,
            spec,
            prompt_engineering,
            session_dir,
            session_id,
        } => {
            let config = load_config(config_path)?;
            let records = corpus::load(&corpus_path)?;
            let q = records
                .iter()
                .find(|r| r.id == id)
                .ok_or_else(|| Error::bad_file(&corpus_path, format!("no question with id {id}")))?;
            let obf = match &q.upt {
                Some(pairs) => config.obfuscator_with(config.upt.build(pairs)?)?,
                None => config.obfuscator()?,
            };
            let endpoint = LlmEndpoint::from(&config.endpoint);
            let spec = spec.with_prompt_engineering(prompt_engineering);
            let opts = SessionOptions {
                dir: session_dir,
                id: session_id,
            };
            let out = run_cycle(&obf, &q.context, &q.question, &spec, &endpoint, &config.template(), &opts)?;
            let mut json = serde_json::to_string_pretty(&out.result).expect("cycle result serializes");
            json.push('\n');
            write_stdout(&json);
            for r in &out.result.residual_tokens {
                eprintln!("residual: {r}");
            }
        }
        Command::Evaluate {
            plan,
            annotations,
            out,
            workers,
            session_dir,
        } => {
            let config = load_config(config_path)?;
            let plan = ExperimentPlan::load(&plan)?;
            let ann = Annotations::load(&annotations)?;
            let endpoint = LlmEndpoint::from(&config.endpoint);
            let opts = RunOptions { workers, session_dir };
            let reports = evaluate(&plan, &config, &endpoint, &ann, &opts)?;
            let mut text = String::new();
            for (i, report) in reports.iter().enumerate() {
                report.write(&out)?;
                if i > 0 {
                    text.push('\n');
                }
                text.push_str(&format!("[{}]\n{}", report.variant.as_str(), report.render_table()));
            }
            write_stdout(&text);
        }
        Command::Session(cmd) => return session_command(cmd),
    }
    Ok(ExitCode::SUCCESS)
}

fn session_command(cmd: SessionCommand) -> Result<ExitCode> {
    match cmd {
        SessionCommand::List { dir } => {
            let mut text = String::new();
            let mut bad = false;
            for path in session::list(&dir)? {
                match session::load(&path) {
                    Ok(t) => text.push_str(&format!(
                        "{}\t{}\t{}\t{} entries\n",
                        t.session_id(),
                        t.created_at(),
                        t.spec(),
                        t.len()
                    )),
                    Err(e) => {
                        bad = true;
                        eprintln!("error: {e}");
                    }
                }
            }
            write_stdout(&text);
            if bad {
                return Ok(ExitCode::from(2));
            }
        }
        SessionCommand::Show { path } => {
            let table = session::load(&path)?;
            let mut entries = table.entries().to_vec();
            entries.sort_by_key(|e| (e.stage_index, e.first_offset));
            let mut text = format!("session {}\nspec {}\n", table.session_id(), table.spec());
            for e in entries {
                text.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    e.stage_index, e.stage_kind, e.first_offset, e.token, e.original
                ));
            }
            write_stdout(&text);
        }
        SessionCommand::Verify { path } => {
            let table = session::load(&path)?;
            let violations = table.verify_bijective();
            if violations.is_empty() {
                write_stdout("OK\n");
            } else {
                let text: String = violations.iter().map(|v| format!("{v}\n")).collect();
                write_stdout(&text);
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
