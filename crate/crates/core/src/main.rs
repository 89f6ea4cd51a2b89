use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ctxseg::config::{PipelineConfig, Topology};
use ctxseg::context::{build_link_matrices, extract_exemplars, LabelSet, LinksDocument};
use ctxseg::crf::{train_unary, unary_potentials, UnaryTable};
use ctxseg::error::{Error, Result, StageContext};
use ctxseg::eval::evaluate;
use ctxseg::io::{
    read_feature_matrix, read_graph, read_json, read_pnm, read_scores, write_class_mask, write_feature_matrix,
    write_graph, write_json, write_label_map, write_scores,
};
use ctxseg::pipeline::{labels_to_masks, propose_from_files, read_class_masks, read_label_maps, run_pipeline, segment_with_unary};
use ctxseg::propagation::{compute_context_scores, Solver};
use ctxseg::proposals::{MotionModel, ProposalPartition};
use ctxseg::simgraph::build_knn_graph;
use ctxseg::superpixel::segment;
use ctxseg::synth::{frame_name, generate, write_fixture, SynthConfig};

/// Semantic video object segmentation with learned pairwise context.
#[derive(Parser)]
#[command(name = "ctxseg", version)]
struct Cli {
    /// TOML configuration; command-line flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment one frame (PGM/PPM) into superpixels.
    Superpixels(SuperpixelsArgs),
    /// Filter and track detections, then split superpixels into labeled and unlabeled sets.
    Propose(ProposeArgs),
    /// Build the k-nearest-neighbor similarity graph of superpixel features.
    Graph(GraphArgs),
    /// Extract context exemplars and write the link matrices.
    Context(ContextArgs),
    /// Learn context scores by two-stage link propagation.
    Propagate(PropagateArgs),
    /// Train the unary classifier and label superpixels by alpha-expansion.
    Segment(SegmentArgs),
    /// Compare predicted class masks with ground truth.
    Evaluate(EvaluateArgs),
    /// Run every stage over an input directory.
    Pipeline(PipelineArgs),
    /// Generate the synthetic test video.
    Synth(SynthArgs),
}

#[derive(Args)]
struct SuperpixelsArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    min_size: Option<usize>,
}

#[derive(Args)]
struct ProposeArgs {
    #[arg(long)]
    dets: PathBuf,
    /// Directory of per-frame superpixel maps.
    #[arg(long)]
    maps: PathBuf,
    #[arg(long)]
    min_conf: Option<f64>,
    #[arg(long)]
    iou: Option<f64>,
    #[arg(long)]
    cover: Option<f64>,
    #[arg(long, value_parser = parse_motion)]
    motion: Option<MotionModel>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ContextArgs {
    #[arg(long)]
    partition: PathBuf,
    /// Also pair labeled superpixels across different frames.
    #[arg(long)]
    cross_frame: bool,
    /// Cap on unordered pairs per class pair.
    #[arg(long)]
    cap: Option<usize>,
    /// Disable the pair cap.
    #[arg(long, conflicts_with = "cap")]
    no_cap: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PropagateArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    links: PathBuf,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_parser = parse_solver)]
    solver: Option<Solver>,
    #[arg(long)]
    prune_eps: Option<f64>,
    /// Keep raw scores instead of scaling each class pair to a maximum of 1.
    #[arg(long)]
    no_normalize: bool,
    /// Write per-pair convergence information as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    partition: PathBuf,
    /// Similarity graph; required unless --dense is given.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Superpixel maps; when given, per-frame class masks are written.
    #[arg(long)]
    maps: Option<PathBuf>,
    /// Use every superpixel pair with a nonzero score.
    #[arg(long)]
    dense: bool,
    #[arg(long)]
    score_floor: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Load unary potentials (.fmx, one column per label) instead of training.
    #[arg(long)]
    unary_in: Option<PathBuf>,
    /// Dump the unary potentials as .fmx.
    #[arg(long)]
    unary_out: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    #[arg(long)]
    inputs: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    frames: Option<usize>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
}

fn parse_motion(s: &str) -> std::result::Result<MotionModel, String> {
    match s {
        "constant" => Ok(MotionModel::Constant),
        "linear" => Ok(MotionModel::Linear),
        _ => Err(format!("unknown motion model `{s}` (expected constant or linear)")),
    }
}

fn parse_solver(s: &str) -> std::result::Result<Solver, String> {
    match s {
        "iterative" => Ok(Solver::Iterative),
        "direct" => Ok(Solver::Direct),
        "auto" => Ok(Solver::Auto),
        _ => Err(format!("unknown solver `{s}` (expected iterative, direct or auto)")),
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("CTX_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::validation(format!("CTX_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::validation(format!("cannot configure {n} threads: {e}")))
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p).stage("config", Some(p.clone()))?,
        None => PipelineConfig::default(),
    };
    match cli.command {
        Command::Superpixels(a) => {
            set(&mut cfg.superpixel.sigma, a.sigma);
            set(&mut cfg.superpixel.k, a.k);
            set(&mut cfg.superpixel.min_size, a.min_size);
            let img = read_pnm(&a.input).stage("superpixels", Some(a.input.clone()))?;
            let map = segment(&img, &cfg.superpixel).stage("superpixels", Some(a.input))?;
            write_label_map(&map, &a.out)?;
            log::info!("{} superpixels", map.num_labels());
        }
        Command::Propose(a) => {
            set(&mut cfg.proposals.min_confidence, a.min_conf);
            set(&mut cfg.proposals.iou_threshold, a.iou);
            set(&mut cfg.proposals.cover_threshold, a.cover);
            set(&mut cfg.proposals.motion, a.motion);
            cfg.validate()?;
            let part = propose_from_files(&cfg, &a.dets, &a.maps)?;
            write_json(&part, &a.out)?;
            log::info!("{} tracks, {} annotated superpixels", part.tracks.len(), part.annotated.len());
        }
        Command::Graph(a) => {
            set(&mut cfg.graph.k, a.k);
            let mut f = read_feature_matrix(&a.features).stage("graph", Some(a.features.clone()))?;
            f.normalize_rows().stage("graph", Some(a.features.clone()))?;
            let g = build_knn_graph(&f, cfg.graph.k).stage("graph", Some(a.features))?;
            write_graph(&g, &a.out)?;
        }
        Command::Context(a) => {
            if a.cross_frame {
                cfg.context.cross_frame = true;
            }
            if a.no_cap {
                cfg.context.cap = None;
            }
            set(&mut cfg.context.cap, a.cap.map(Some));
            set(&mut cfg.context.seed, a.seed);
            cfg.validate()?;
            let part: ProposalPartition = read_json(&a.partition).stage("context", Some(a.partition.clone()))?;
            part.validate().stage("context", Some(a.partition.clone()))?;
            let labels = LabelSet::with_count(part.num_labels())?;
            let ex = extract_exemplars(&part, &labels, &cfg.context).stage("context", Some(a.partition))?;
            let links = build_link_matrices(&ex, part.num_superpixels())?;
            write_json(&LinksDocument::from_links(part.num_superpixels(), labels.len(), &links), &a.out)?;
        }
        Command::Propagate(a) => {
            let p = &mut cfg.propagation;
            set(&mut p.mu, a.mu);
            set(&mut p.tol, a.tol);
            set(&mut p.max_iter, a.max_iter);
            set(&mut p.solver, a.solver);
            set(&mut p.prune_eps, a.prune_eps);
            if a.no_normalize {
                p.normalize = false;
            }
            cfg.validate()?;
            let g = read_graph(&a.graph).stage("propagate", Some(a.graph.clone()))?;
            let doc: LinksDocument = read_json(&a.links).stage("propagate", Some(a.links.clone()))?;
            let links = doc.to_links().stage("propagate", Some(a.links.clone()))?;
            // Every row of an exemplar link matrix is a labeled superpixel.
            let rows: Vec<usize> = (0..g.node_count()).collect();
            let (scores, report) = compute_context_scores(&g, &links, &rows, doc.num_labels, &cfg.propagation)
                .stage("propagate", Some(a.links))?;
            write_scores(&scores, &a.out)?;
            if let Some(r) = &a.report {
                write_json(&report, r)?;
            }
            if !report.converged() {
                return Err(Error::NonConvergence {
                    stage: "link propagation".into(),
                    iterations: cfg.propagation.max_iter,
                });
            }
        }
        Command::Segment(a) => {
            if a.dense {
                cfg.crf.topology = Topology::Dense;
            }
            set(&mut cfg.crf.score_floor, a.score_floor);
            set(&mut cfg.crf.max_sweeps, a.max_sweeps);
            if let Some(s) = a.seed {
                cfg = cfg.with_seed(s);
            }
            cfg.validate()?;
            let scores = read_scores(&a.scores).stage("segment", Some(a.scores.clone()))?;
            let mut f = read_feature_matrix(&a.features).stage("segment", Some(a.features.clone()))?;
            f.normalize_rows().stage("segment", Some(a.features.clone()))?;
            let part: ProposalPartition = read_json(&a.partition).stage("segment", Some(a.partition.clone()))?;
            let graph = match (&a.graph, cfg.crf.topology) {
                (Some(p), _) => read_graph(p).stage("segment", Some(p.clone()))?,
                (None, Topology::Dense) => build_knn_graph(&f, cfg.graph.k).stage("segment", None)?,
                (None, Topology::Sparse) => {
                    return Err(Error::validation("--graph is required unless --dense is given"));
                }
            };
            let unary = match &a.unary_in {
                Some(p) => UnaryTable::from_feature_matrix(&read_feature_matrix(p)?).stage("segment", Some(p.clone()))?,
                None => {
                    let model = train_unary(&f, &part, scores.num_labels(), &cfg.unary).stage("segment", None)?;
                    unary_potentials(&model, &f)?
                }
            };
            if let Some(p) = &a.unary_out {
                write_feature_matrix(&unary.to_feature_matrix()?, p)?;
            }
            let output = segment_with_unary(&cfg, unary, &scores, &graph)?;
            create_dir(&a.out)?;
            write_json(&output, a.out.join("labels.json"))?;
            if let Some(dir) = &a.maps {
                let maps = read_label_maps(dir).stage("segment", Some(dir.clone()))?;
                let masks = labels_to_masks(&maps, &output.result.labeling).stage("segment", Some(dir.clone()))?;
                for (i, m) in masks.iter().enumerate() {
                    write_class_mask(m, a.out.join(frame_name(i, "mask")))?;
                }
            }
            log::info!("energy {} after {} moves", output.result.energy, output.result.moves);
        }
        Command::Evaluate(a) => {
            let pred = read_class_masks(&a.pred).stage("evaluate", Some(a.pred.clone()))?;
            let truth = read_class_masks(&a.truth).stage("evaluate", Some(a.truth.clone()))?;
            let report = evaluate(&pred, &truth).stage("evaluate", Some(a.pred))?;
            match &a.out {
                Some(p) => write_json(&report, p)?,
                None => println!("{}", serde_json::to_string_pretty(&report).expect("report serializes")),
            }
        }
        Command::Pipeline(a) => {
            if let Some(s) = a.seed {
                cfg = cfg.with_seed(s);
            }
            let outcome = run_pipeline(&cfg, &a.inputs, &a.out)?;
            if let Some(r) = outcome.report {
                println!("average IoU {:.4}", r.average_iou);
            }
        }
        Command::Synth(a) => {
            let mut s = SynthConfig { segmentation: cfg.superpixel, seed: cfg.seed, ..SynthConfig::default() };
            set(&mut s.seed, a.seed);
            set(&mut s.frames, a.frames);
            set(&mut s.width, a.width);
            set(&mut s.height, a.height);
            let fixture = generate(&s)?;
            write_fixture(&fixture, &a.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
