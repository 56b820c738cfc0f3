use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use evb::dsl::{parse, Element};
use evb::measurement::{evaluate_question, format2, ingest_csv};
use evb::report::{render_lesson, render_quality_model, retrospective_questions};
use evb::repository::{Store, StoreError};

/// Exit codes: 0 success, 1 validation/parse failures, 2 usage error,
/// 3 I/O or store error.
const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(name = "evb", about = "Experience base for software-engineering evidence", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate .evb files.
    Validate {
        /// Files to check.
        paths: Vec<PathBuf>,
    },
    /// Ingest a CSV data-collection sheet into the store.
    Ingest {
        #[arg(long)]
        csv: PathBuf,
        /// Dataset id to store under.
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        overwrite: bool,
    },
    /// Evaluate a quality model's indicator over a stored dataset.
    Indicator {
        #[arg(long)]
        model: String,
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Store the elements of an .evb file.
    Put {
        path: PathBuf,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        overwrite: bool,
    },
    /// Search lessons by topic keywords and/or rank elements by context match.
    Query {
        /// Comma-separated keywords.
        #[arg(long)]
        keywords: Option<String>,
        /// Characterization-vector id to match against.
        #[arg(long)]
        context: Option<String>,
        /// Keep only the N best hits.
        #[arg(long)]
        top: Option<usize>,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Render a stored element as Markdown.
    Report {
        #[arg(long)]
        id: String,
        /// Dataset to evaluate a quality model's indicator over.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Report dangling references in the store.
    Refs {
        #[arg(long)]
        store: Option<PathBuf>,
    },
    /// Print the four retrospective questions.
    Retro,
}

struct Failure {
    code: u8,
    message: Option<String>,
}

impl Failure {
    fn validation() -> Self {
        Failure { code: EXIT_VALIDATION, message: None }
    }

    fn msg(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: Some(message.into()) }
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        let code = match &e {
            StoreError::Io { .. }
            | StoreError::NotFound(_)
            | StoreError::DatasetNotFound(_) => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        Failure::msg(code, e.to_string())
    }
}

fn store_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("EVB_STORE").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("./evb-store"))
}

fn read_file(path: &PathBuf) -> Result<String, Failure> {
    std::fs::read_to_string(path)
        .map_err(|e| Failure::msg(EXIT_IO, format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if let Some(msg) = f.message {
                eprintln!("error: {msg}");
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Validate { paths } => cmd_validate(paths),
        Command::Ingest { csv, dataset, store, overwrite } => {
            cmd_ingest(csv, dataset, store, overwrite)
        }
        Command::Indicator { model, dataset, store } => cmd_indicator(model, dataset, store),
        Command::Put { path, store, overwrite } => cmd_put(path, store, overwrite),
        Command::Query { keywords, context, top, store } => {
            cmd_query(keywords, context, top, store)
        }
        Command::Report { id, dataset, out, store } => cmd_report(id, dataset, out, store),
        Command::Refs { store } => cmd_refs(store),
        Command::Retro => {
            for q in retrospective_questions() {
                println!("{q}");
            }
            Ok(())
        }
    }
}

fn cmd_validate(paths: Vec<PathBuf>) -> Result<(), Failure> {
    let mut failed = false;
    for path in &paths {
        let text = read_file(path)?;
        match parse(&text) {
            Ok(doc) => {
                println!("{}: ok ({} elements)", path.display(), doc.elements.len());
            }
            Err(errors) => {
                failed = true;
                for e in errors {
                    eprintln!("{}:{}:{}: {}", path.display(), e.span.line, e.span.column, e.message);
                }
            }
        }
    }
    if failed {
        Err(Failure::validation())
    } else {
        Ok(())
    }
}

fn cmd_ingest(
    csv: PathBuf,
    dataset: String,
    store: Option<PathBuf>,
    overwrite: bool,
) -> Result<(), Failure> {
    let text = read_file(&csv)?;
    let (ds, errors) = ingest_csv(dataset, &text)
        .map_err(|e| Failure::msg(EXIT_VALIDATION, format!("{}: {e}", csv.display())))?;
    for e in &errors {
        eprintln!("{}:{}", csv.display(), e);
    }
    let store = Store::open(store_root(store))?;
    store.put_dataset(&ds, overwrite)?;
    println!("{}\t{} rows", ds.id, ds.rows.len());
    if errors.is_empty() {
        Ok(())
    } else {
        Err(Failure::validation())
    }
}

fn cmd_indicator(model: String, dataset: String, store: Option<PathBuf>) -> Result<(), Failure> {
    let store = Store::open(store_root(store))?;
    let Some(Element::QualityModel(qm)) = store.get(&model) else {
        return Err(StoreError::NotFound(model).into());
    };
    let ds = store.get_dataset(&dataset)?;
    let (question, result) = evaluate_question(qm, &ds)
        .map_err(|e| Failure::msg(EXIT_VALIDATION, e.to_string()))?;
    println!("# {question}");
    println!("key\tvalue\tpercent\tcumulative");
    for row in &result.rows {
        println!(
            "{}\t{}\t{}\t{}",
            row.key,
            format2(row.value),
            format2(row.percent),
            format2(row.cumulative_percent)
        );
    }
    println!("total\t{}", format2(result.total));
    Ok(())
}

fn cmd_put(path: PathBuf, store: Option<PathBuf>, overwrite: bool) -> Result<(), Failure> {
    let text = read_file(&path)?;
    let doc = parse(&text).map_err(|errors| {
        for e in &errors {
            eprintln!("{}:{}:{}: {}", path.display(), e.span.line, e.span.column, e.message);
        }
        Failure::validation()
    })?;
    let mut store = Store::open(store_root(store))?;
    for el in doc.elements {
        let id = store.put(el, overwrite)?;
        println!("{id}");
    }
    Ok(())
}

fn cmd_query(
    keywords: Option<String>,
    context: Option<String>,
    top: Option<usize>,
    store: Option<PathBuf>,
) -> Result<(), Failure> {
    if keywords.is_none() && context.is_none() {
        return Err(Failure::msg(2, "query needs --keywords and/or --context"));
    }
    let store = Store::open(store_root(store))?;

    let keyword_hits: Option<Vec<(String, usize)>> = keywords.map(|ks| {
        let terms: Vec<String> = ks
            .split(',')
            .map(|k| k.trim().to_string())
            .filter(|k| !k.is_empty())
            .collect();
        store.find_by_keywords(&terms)
    });

    let mut lines: Vec<(String, String)> = match (&keyword_hits, &context) {
        (Some(hits), None) => hits
            .iter()
            .map(|(id, n)| (id.clone(), n.to_string()))
            .collect(),
        (hits, Some(cv_id)) => {
            let Some(Element::Context(query)) = store.get(cv_id) else {
                return Err(StoreError::UnresolvedContext(cv_id.clone()).into());
            };
            // candidates: keyword hits when given, else every element that
            // carries a context
            let candidates: Vec<String> = match hits {
                Some(hits) => hits.iter().map(|(id, _)| id.clone()).collect(),
                None => store
                    .ids()
                    .filter(|id| {
                        store
                            .get(id)
                            .map(|el| el.context_id().is_some())
                            .unwrap_or(false)
                    })
                    .map(String::from)
                    .collect(),
            };
            store
                .match_context(query, &candidates)?
                .into_iter()
                .map(|m| (m.id, format!("{:.4}", m.score)))
                .collect()
        }
        (None, None) => unreachable!(),
    };

    if let Some(n) = top {
        lines.truncate(n);
    }
    for (id, score) in lines {
        println!("{id}\t{score}");
    }
    Ok(())
}

fn cmd_report(
    id: String,
    dataset: Option<String>,
    out: Option<PathBuf>,
    store: Option<PathBuf>,
) -> Result<(), Failure> {
    let store = Store::open(store_root(store))?;
    let report = match store.get(&id) {
        Some(Element::QualityModel(qm)) => {
            let result = match dataset {
                Some(ds_id) => {
                    let ds = store.get_dataset(&ds_id)?;
                    let (_, result) = evaluate_question(qm, &ds)
                        .map_err(|e| Failure::msg(EXIT_VALIDATION, e.to_string()))?;
                    Some(result)
                }
                None => None,
            };
            render_quality_model(qm, result.as_ref())
        }
        Some(Element::Lesson(ll)) => render_lesson(ll),
        Some(el) => {
            return Err(Failure::msg(
                EXIT_VALIDATION,
                format!("no report defined for {} `{id}`", el.kind().keyword()),
            ));
        }
        None => return Err(StoreError::NotFound(id).into()),
    };
    match out {
        Some(path) => std::fs::write(&path, report.body)
            .map_err(|e| Failure::msg(EXIT_IO, format!("{}: {e}", path.display())))?,
        None => print!("{}", report.body),
    }
    Ok(())
}

fn cmd_refs(store: Option<PathBuf>) -> Result<(), Failure> {
    let store = Store::open(store_root(store))?;
    let dangling = store.check_references();
    for (source, missing) in &dangling {
        println!("{source}\t{missing}");
    }
    if dangling.is_empty() {
        Ok(())
    } else {
        Err(Failure::validation())
    }
}
