use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use perceptkit::bench::{self, BenchError, Md5Hasher, PdqHasher};
use perceptkit::harness::{self, synth, HarnessConfig, HarnessError, Transcoder};
use perceptkit::index::{linear_scan, snapshot, IndexError, MihIndex, QueryResult};
use perceptkit::pdq::{self, Hash256, MatchThreshold, PdqError};
use perceptkit::service::{self, ServiceConfig, ServiceError};
use perceptkit::tmk::{self, format as sigfmt, Thresholds, TmkError};

/// Perceptual hashing for images and videos.
///
/// Exit codes: 0 success, 1 other failure, 2 bad arguments, 3 unreadable
/// input file, 4 decode failure, 5 transcoder failure.
#[derive(Parser)]
#[command(name = "perceptkit", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print `<hex> <quality>` for an image file.
    HashImage { path: PathBuf },
    /// Write the temporal signature of a video.
    HashVideo {
        path: PathBuf,
        /// Output signature path [default: <path>.tmk]
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Decode command template for non-raw-frame inputs; `{input}` is
        /// replaced by the path and raw frames are read from stdout.
        #[arg(long)]
        decode: Option<String>,
    },
    /// Print `<distance> MATCH|NO MATCH` for two hex hashes.
    CompareHashes {
        a: String,
        b: String,
        #[arg(long, default_value_t = MatchThreshold::DEFAULT.max_distance())]
        threshold: u32,
    },
    /// Print `<level1> <level2|-> MATCH|NO MATCH` for two signature files.
    CompareVideos {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = tmk::DEFAULT_THRESHOLD, allow_negative_numbers = true)]
        t1: f64,
        #[arg(long, default_value_t = tmk::DEFAULT_THRESHOLD)]
        t2: f64,
        /// Always compute level 2 (same as --t1 -1).
        #[arg(long)]
        force: bool,
    },
    #[command(subcommand)]
    Index(IndexCmd),
    #[command(subcommand)]
    Harness(HarnessCmd),
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Run the HTTP service until Ctrl-C.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured listen address.
        #[arg(long)]
        listen: Option<String>,
    },
}

#[derive(Subcommand)]
enum IndexCmd {
    /// Build a snapshot from a hash list (`<hex> [label]` per line) or by
    /// hashing every image in a directory (label = relative path).
    Build {
        output: PathBuf,
        #[arg(long, conflicts_with = "images", required_unless_present = "images")]
        hashes: Option<PathBuf>,
        #[arg(long)]
        images: Option<PathBuf>,
    },
    /// Append one entry to a snapshot and print its id.
    Insert {
        index: PathBuf,
        hash: String,
        #[arg(default_value = "")]
        label: String,
    },
    /// Print `<id> <distance> <label>` for every entry within the radius.
    Query {
        index: PathBuf,
        hash: String,
        #[arg(long, default_value_t = MatchThreshold::DEFAULT.max_distance())]
        radius: u32,
        /// Answer with a linear scan instead of the multi-index tables.
        #[arg(long)]
        oracle: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Directory of source media.
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum HarnessCmd {
    /// Apply the image battery and write rows/summary/timings CSVs.
    RunImages(RunArgs),
    /// Apply the video battery and write rows/summary CSVs and signatures.
    RunVideos(RunArgs),
    /// Write synthetic PNG stills.
    SynthImages {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 640)]
        width: usize,
        #[arg(long, default_value_t = 480)]
        height: usize,
    },
    /// Write synthetic raw-frame videos.
    SynthVideos {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30.0)]
        duration: f64,
        #[arg(long, default_value_t = 15.0)]
        fps: f64,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 48)]
        height: usize,
    },
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Time the perceptual hash against an MD5 digest per file.
    Time {
        corpus: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Per-file timings CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-bit mean of the hashes of every image in a directory.
    Entropy {
        corpus: PathBuf,
        /// Drop repeated hashes first.
        #[arg(long)]
        dedupe: bool,
        /// Per-bit means CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum CliError {
    BadArgs(String),
    BadInput(String),
    Decode(String),
    Transcoder(String),
    Other(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Other(_) => 1,
            CliError::BadArgs(_) => 2,
            CliError::BadInput(_) => 3,
            CliError::Decode(_) => 4,
            CliError::Transcoder(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::BadArgs(m)
            | CliError::BadInput(m)
            | CliError::Decode(m)
            | CliError::Transcoder(m)
            | CliError::Other(m) => m,
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::BadInput(format!("{}: {e}", path.display()))
}

impl From<PdqError> for CliError {
    fn from(e: PdqError) -> Self {
        match e {
            PdqError::Io { .. } => CliError::BadInput(e.to_string()),
            PdqError::InvalidHex(_) | PdqError::ThresholdOutOfRange(_) => CliError::BadArgs(e.to_string()),
            _ => CliError::Decode(e.to_string()),
        }
    }
}

impl From<TmkError> for CliError {
    fn from(e: TmkError) -> Self {
        match e {
            TmkError::Io(_) => CliError::BadInput(e.to_string()),
            TmkError::Threshold { .. } => CliError::BadArgs(e.to_string()),
            _ => CliError::Decode(e.to_string()),
        }
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::Io(_) => CliError::BadInput(e.to_string()),
            IndexError::Radius(_) => CliError::BadArgs(e.to_string()),
            _ => CliError::Decode(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Image(e) => e.into(),
            HarnessError::Signature(e) => e.into(),
            HarnessError::Io { .. } => CliError::BadInput(e.to_string()),
            HarnessError::RawFrame(_) => CliError::Decode(e.to_string()),
            HarnessError::Transcoder(_) => CliError::Transcoder(e.to_string()),
            HarnessError::Config(_) | HarnessError::InvalidParameter(_) => CliError::BadArgs(e.to_string()),
            _ => CliError::Other(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Hash(e) => e.into(),
            BenchError::Io { .. } => CliError::BadInput(e.to_string()),
            BenchError::Empty => CliError::BadInput("no input files".into()),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        match e {
            ServiceError::Config(_) => CliError::BadArgs(e.to_string()),
            ServiceError::Snapshot { .. } => CliError::Decode(e.to_string()),
            ServiceError::Io(_) => CliError::Other(e.to_string()),
        }
    }
}

fn parse_hash(s: &str) -> Result<Hash256, CliError> {
    Hash256::from_hex(s).map_err(|e| CliError::BadArgs(e.to_string()))
}

fn load_index(path: &Path) -> Result<MihIndex, CliError> {
    let f = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(snapshot::load(BufReader::new(f))?)
}

fn save_index(index: &MihIndex, path: &Path) -> Result<(), CliError> {
    let tmp = path.with_extension("mih.tmp");
    let f = File::create(&tmp).map_err(|e| CliError::Other(format!("{}: {e}", tmp.display())))?;
    let mut w = BufWriter::new(f);
    snapshot::save(index, &mut w)
        .and_then(|_| w.flush())
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

fn read_signature(path: &Path) -> Result<tmk::TmkSignature, CliError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    sigfmt::from_bytes(&bytes).map_err(|e| CliError::Decode(format!("{}: {e}", path.display())))
}

fn harness_config(args: &RunArgs) -> Result<HarnessConfig, CliError> {
    let mut cfg = match &args.config {
        Some(p) => HarnessConfig::load(p)?,
        None => HarnessConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Other(format!("{}: {e}", dir.display())))
}

fn print_results(results: &[QueryResult]) {
    let mut out = std::io::stdout().lock();
    for r in results {
        let _ = writeln!(out, "{} {} {}", r.id, r.distance, String::from_utf8_lossy(&r.label));
    }
}

fn index_cmd(cmd: IndexCmd) -> Result<(), CliError> {
    match cmd {
        IndexCmd::Build { output, hashes, images } => {
            let mut index = MihIndex::new();
            if let Some(p) = hashes {
                let f = File::open(&p).map_err(|e| io_err(&p, e))?;
                for (n, line) in BufReader::new(f).lines().enumerate() {
                    let line = line.map_err(|e| io_err(&p, e))?;
                    let line = line.trim();
                    if line.is_empty() || line.starts_with('#') {
                        continue;
                    }
                    let (hex, label) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
                    let hash = Hash256::from_hex(hex)
                        .map_err(|e| CliError::Decode(format!("{}:{}: {e}", p.display(), n + 1)))?;
                    index.insert(hash, label.trim());
                }
            } else if let Some(dir) = images {
                for (id, path) in harness::suite::collect_files(&dir, &harness::suite::IMAGE_EXTENSIONS)? {
                    index.insert(pdq::hash_file(&path)?.bits, id);
                }
            }
            save_index(&index, &output)?;
            println!("{} entries", index.len());
        }
        IndexCmd::Insert { index, hash, label } => {
            let h = parse_hash(&hash)?;
            let mut idx = load_index(&index)?;
            let id = idx.insert(h, label);
            save_index(&idx, &index)?;
            println!("{id}");
        }
        IndexCmd::Query { index, hash, radius, oracle } => {
            let h = parse_hash(&hash)?;
            let idx = load_index(&index)?;
            let results = if oracle { linear_scan(idx.entries(), &h, radius)? } else { idx.query(&h, radius)? };
            print_results(&results);
        }
    }
    Ok(())
}

fn harness_cmd(cmd: HarnessCmd) -> Result<(), CliError> {
    match cmd {
        HarnessCmd::RunImages(args) => {
            let cfg = harness_config(&args)?;
            let report = harness::run_image_suite(&args.corpus, &cfg)?;
            report.write(&args.out)?;
            eprintln!("{} rows, {} failed", report.rows.len(), report.failures());
        }
        HarnessCmd::RunVideos(args) => {
            let cfg = harness_config(&args)?;
            let transcoder: Box<dyn Transcoder> = cfg.transcoder();
            let report = harness::run_video_suite(&args.corpus, &args.out, &cfg, transcoder.as_ref())?;
            report.write(&args.out)?;
            eprintln!("{} rows, {} failed", report.rows.len(), report.failures());
        }
        HarnessCmd::SynthImages { out, count, seed, width, height } => {
            if width == 0 || height == 0 {
                return Err(CliError::BadArgs("width and height must be positive".into()));
            }
            create_dir(&out)?;
            for i in 0..count {
                let img = synth::synth_image(seed.wrapping_add(i as u64), width, height);
                let bytes = harness::ImageFormatKind::Png.encode(&img)?;
                let p = out.join(format!("synth_{i:05}.png"));
                std::fs::write(&p, bytes).map_err(|e| CliError::Other(format!("{}: {e}", p.display())))?;
            }
        }
        HarnessCmd::SynthVideos { out, count, seed, duration, fps, width, height } => {
            if !(duration > 0.0 && fps > 0.0) || width == 0 || height == 0 {
                return Err(CliError::BadArgs("duration, fps, width and height must be positive".into()));
            }
            create_dir(&out)?;
            for i in 0..count {
                let v = synth::SynthVideo::new(seed.wrapping_add(i as u64), width, height, fps, duration);
                harness::video::write_synth_video(&v, &out.join(format!("synth_{i:03}.rfv")))?;
            }
        }
    }
    Ok(())
}

fn bench_cmd(cmd: BenchCmd) -> Result<(), CliError> {
    match cmd {
        BenchCmd::Time { corpus, seed, out } => {
            let files = harness::suite::collect_files(&corpus, &harness::suite::IMAGE_EXTENSIONS)?;
            let r = bench::time_hashing(&files, &PdqHasher, &Md5Hasher, seed)?;
            for (id, e) in &r.skipped {
                eprintln!("skipped {id}: {e}");
            }
            println!("files {}", r.rows.len());
            for (name, p) in [("pdq", r.perceptual), ("md5", r.baseline)] {
                println!("{name} p50 {:.6} p90 {:.6} p99 {:.6}", p.p50, p.p90, p.p99);
            }
            if let Some(path) = out {
                harness::report::write_csv(&path, &r.rows)?;
            }
        }
        BenchCmd::Entropy { corpus, dedupe, out } => {
            let files = harness::suite::collect_files(&corpus, &harness::suite::IMAGE_EXTENSIONS)?;
            let mut hashes = Vec::with_capacity(files.len());
            for (id, path) in &files {
                match pdq::hash_file(path) {
                    Ok(h) => hashes.push(h.bits),
                    Err(e) => eprintln!("skipped {id}: {e}"),
                }
            }
            let label = corpus.display().to_string();
            let r = bench::bit_bias(&hashes, dedupe, &label)?;
            println!("hashes {} min {:.4} max {:.4}", r.count, r.min(), r.max());
            if let Some(path) = out {
                #[derive(serde::Serialize)]
                struct Row {
                    bit: usize,
                    mean: f64,
                }
                let rows: Vec<Row> = r.means.iter().enumerate().map(|(bit, &mean)| Row { bit, mean }).collect();
                harness::report::write_csv(&path, &rows)?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::HashImage { path } => {
            let h = pdq::hash_file(&path)?;
            println!("{} {}", h.bits, h.quality);
        }
        Cmd::HashVideo { path, output, decode } => {
            if !path.is_file() {
                return Err(CliError::BadInput(format!("{}: not a file", path.display())));
            }
            let sig = match decode {
                Some(t) => harness::CommandTranscoder { command: String::new(), decode: Some(t) }.signature(&path)?,
                None => harness::video::read_raw_signature(&path)?,
            };
            let out = output.unwrap_or_else(|| {
                let mut p = path.clone().into_os_string();
                p.push(".");
                p.push(sigfmt::EXTENSION);
                p.into()
            });
            std::fs::write(&out, sigfmt::to_bytes(&sig)).map_err(|e| CliError::Other(format!("{}: {e}", out.display())))?;
            println!("{}", out.display());
        }
        Cmd::CompareHashes { a, b, threshold } => {
            let t = MatchThreshold::new(threshold)?;
            let d = pdq::hamming(&parse_hash(&a)?, &parse_hash(&b)?);
            println!("{d} {}", if t.matches(d) { "MATCH" } else { "NO MATCH" });
        }
        Cmd::CompareVideos { a, b, t1, t2, force } => {
            let t = Thresholds::new(if force { -1.0 } else { t1 }, t2)?;
            let d = tmk::two_phase_match(&read_signature(&a)?, &read_signature(&b)?, t);
            let l2 = d.level2_score.map_or_else(|| "-".to_string(), |v| v.to_string());
            println!("{} {l2} {}", d.level1_score, if d.matched { "MATCH" } else { "NO MATCH" });
        }
        Cmd::Index(c) => index_cmd(c)?,
        Cmd::Harness(c) => harness_cmd(c)?,
        Cmd::Bench(c) => bench_cmd(c)?,
        Cmd::Serve { config, listen } => {
            let mut cfg = ServiceConfig::load(config.as_deref())?;
            if let Some(l) = listen {
                cfg.listen = l;
            }
            service::run(cfg)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("perceptkit: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
