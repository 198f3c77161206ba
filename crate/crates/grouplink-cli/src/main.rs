use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use grouplink_core::grouping::dump_groups;
use grouplink_core::pipeline::{
    block_cores, block_graphs, cluster_with_cores, evaluate, generate_synthetic, parse_cores,
    run_linkage, LinkageConfig,
};
use grouplink_core::robustcore::dump_cores;
use grouplink_core::schema::{parse_gold, write_assignment, write_dataset};
use grouplink_core::{Error, Result};

/// Group linkage over delimited record files.
#[derive(Parser)]
#[command(name = "grouplink", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (TOML).
    #[arg(short, long)]
    config: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Worker threads; overrides `run.threads`.
    #[arg(long)]
    threads: Option<usize>,
    /// Robustness level; overrides `params.k`.
    #[arg(short, long)]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline; writes `record_id<TAB>group_id`.
    Link(Common),
    /// Writes the v-clique graph of every block.
    Graph(Common),
    /// Writes the k-cores of every block.
    Cores(Common),
    /// Clustering stage alone, from a core dump.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Core dump as written by `cores`.
        #[arg(long)]
        cores: PathBuf,
    },
    /// Scores a group assignment against the gold standard.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Assignment as written by `link`.
        #[arg(long)]
        predicted: PathBuf,
        /// Gold standard; overrides `input.gold`.
        #[arg(long)]
        gold: Option<PathBuf>,
    },
    /// Generates a synthetic dataset and its gold standard.
    Synth {
        /// Config whose `[synth]` table describes the data; defaults otherwise.
        #[arg(short, long)]
        config: Option<PathBuf>,
        /// Dataset output.
        #[arg(long)]
        data: PathBuf,
        /// Gold standard output.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

struct Run {
    config: LinkageConfig,
    threads: usize,
    output: Option<PathBuf>,
}

impl Run {
    fn new(common: &Common) -> Result<Self> {
        let mut config = LinkageConfig::load(&common.config)?;
        if let Some(k) = common.k {
            config.params.k = k;
        }
        let threads = common.threads.unwrap_or(config.run.threads);
        if threads == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        Ok(Run {
            config,
            threads,
            output: common.output.clone(),
        })
    }

    fn write(&self, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
        emit(self.output.as_deref(), body)
    }
}

fn io_error(path: &Path, source: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| io_error(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| io_error(path, e))
}

fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let label = path.unwrap_or(Path::new("<stdout>"));
    let result = match path {
        Some(p) => {
            let mut out = create(p)?;
            body(&mut out).and_then(|_| out.flush())
        }
        None => {
            let mut out = io::stdout().lock();
            body(&mut out).and_then(|_| out.flush())
        }
    };
    result.map_err(|e| io_error(label, e))
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Link(common) => {
            let run = Run::new(&common)?;
            let groups = run_linkage(&run.config.read_dataset()?, &run.config.params, run.threads)?;
            run.write(|out| dump_groups(&groups, out))
        }
        Command::Graph(common) => {
            let run = Run::new(&common)?;
            let graphs =
                block_graphs(&run.config.read_dataset()?, &run.config.params, run.threads)?;
            run.write(|out| graphs.iter().try_for_each(|g| g.dump(&mut *out)))
        }
        Command::Cores(common) => {
            let run = Run::new(&common)?;
            let cores = block_cores(&run.config.read_dataset()?, &run.config.params, run.threads)?;
            run.write(|out| dump_cores(&cores, out))
        }
        Command::Cluster { common, cores } => {
            let run = Run::new(&common)?;
            let dataset = run.config.read_dataset()?;
            let cores = parse_cores(open(&cores)?)?;
            let groups = cluster_with_cores(&dataset, &cores, &run.config.params, run.threads)?;
            run.write(|out| dump_groups(&groups, out))
        }
        Command::Eval {
            common,
            predicted,
            gold,
        } => {
            let run = Run::new(&common)?;
            let gold = match gold {
                Some(path) => parse_gold(open(&path)?)?,
                None => run.config.read_gold()?,
            };
            let predicted = parse_gold(open(&predicted)?)?;
            let metrics = evaluate(&predicted, &gold)?;
            run.write(|out| writeln!(out, "{metrics}"))
        }
        Command::Synth {
            config,
            data,
            gold,
            seed,
        } => {
            let loaded = config.as_deref().map(LinkageConfig::load).transpose()?;
            let mut spec = loaded
                .as_ref()
                .and_then(|c| c.synth.clone())
                .unwrap_or_default();
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let parse = loaded.map(|c| c.input.parse).unwrap_or_default();
            let (dataset, planted) = generate_synthetic(&spec)?;
            write_dataset(create(&data)?, &dataset, &parse)?;
            let mut out = create(&gold)?;
            write_assignment(&mut out, &planted)?;
            out.flush().map_err(|e| io_error(&gold, e))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("grouplink: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
