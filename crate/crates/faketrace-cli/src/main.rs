//! Command-line pipeline around the `faketrace` library.
//!
//! Every subcommand reads a key=value config file (all keys optional, see
//! `PipelineConfig`), accepts `--set key=value` overrides, and writes a
//! manifest next to its primary output recording the full configuration and
//! the artifacts produced. Exit codes: 0 on success, 1 on a validation
//! error (bad arguments, malformed inputs), 2 on a pipeline failure (e.g.
//! the generation attempt cap ran out on every seed).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use faketrace::attack::{run_scenario, BaselineKind, FakeMethod};
use faketrace::config::{write_manifest, PipelineConfig};
use faketrace::corpus::{
    coarsen_locations, load_corpus, read_classes, read_coordinates, read_pool, save_corpus,
    write_classes, write_coordinates, write_graph, write_pool, write_pool_sidecar,
    write_rejections, Corpus,
};
use faketrace::generator::{generate_pool, trace_likelihood, FakeTrace};
use faketrace::metrics::{
    geographic_similarity, semantic_similarity_order0, semantic_similarity_order1, AnnealOptions,
    Permutation,
};
use faketrace::mobility::{
    aggregate_model, learn_profile, AggregateModel, DistanceFunction, MobilityProfile, PeriodMap,
    Trace,
};
use faketrace::privacy::PrivacyTester;
use faketrace::semantics::{
    build_semantic_graph, cluster_graph, select_cluster_count, QualityRatio, SemanticClasses,
};
use faketrace::stats::{
    aggregate_similarity_report, kl_divergence, qq_correlation, spatial_allocation,
    AllocationDistribution,
};
use faketrace::synth::synth_corpus;
use faketrace::{Error, Scalar};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "faketrace", version, about = "Fake location trace synthesis and evaluation")]
struct Cli {
    /// Config file with key=value lines; unset keys take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a single config entry (repeatable), e.g. --set beta=0.3
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimilarityKindArg {
    /// Geographic similarity (identity alignment).
    Geo,
    /// Zero-order semantic similarity (per-period assignment).
    Sem0,
    /// First-order semantic similarity (local search over relabelings).
    Sem1,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic corpus with planted location roles.
    Synth {
        /// Output corpus CSV (user,slot,location).
        #[arg(long)]
        out: PathBuf,
        /// Optional ground-truth role labels CSV (location,class).
        #[arg(long)]
        roles_out: Option<PathBuf>,
    },
    /// Learn the aggregate mobility model from a corpus.
    Learn {
        #[arg(long)]
        corpus: PathBuf,
        /// Output transition CSV (r,rprime,weight).
        #[arg(long)]
        out: PathBuf,
        /// Output visiting-distribution CSV (location,weight).
        #[arg(long)]
        visits_out: PathBuf,
    },
    /// Score all ordered user pairs under one similarity metric.
    Similarity {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        kind: SimilarityKindArg,
        /// Planar location coordinates CSV (location,x,y); Hamming ground
        /// distance when omitted. Only the geographic metric uses it.
        #[arg(long)]
        coords: Option<PathBuf>,
        /// Output CSV (u,v,score).
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the pairwise semantic graph and cluster locations into classes.
    Cluster {
        #[arg(long)]
        corpus: PathBuf,
        /// Output semantic graph CSV (r,rprime,weight).
        #[arg(long)]
        graph_out: PathBuf,
        /// Output class assignment CSV (location,class).
        #[arg(long)]
        classes_out: PathBuf,
        /// Fixed class count; scans kappa_min..=kappa_max when omitted.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Generate a pool of privacy-tested fake traces.
    Generate {
        #[arg(long)]
        corpus: PathBuf,
        /// Semantic class assignment CSV (location,class).
        #[arg(long)]
        classes: PathBuf,
        /// Output pool CSV (seed_user,fake_id,slot,location).
        #[arg(long)]
        out: PathBuf,
        /// Output per-fake sidecar CSV (fake_id,log_likelihood,verdict).
        #[arg(long)]
        sidecar_out: PathBuf,
        /// Output rejection tally CSV (seed_user,reason,count).
        #[arg(long)]
        rejections_out: PathBuf,
    },
    /// Re-audit a published pool against a corpus.
    Audit {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        pool: PathBuf,
        /// Output verdict CSV (fake_id,seed_user,passed,sim_g,intersection,witnesses).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the localization attack over the pool and the reference baselines.
    Attack {
        #[arg(long)]
        corpus: PathBuf,
        /// Fake pool CSV; only the baselines run when omitted.
        #[arg(long)]
        pool: Option<PathBuf>,
        /// Semantic class assignment CSV (location,class).
        #[arg(long)]
        classes: PathBuf,
        /// Output CSV (method,num_fakes,beta,user,privacy,diversity_overhead,semantic_overhead).
        #[arg(long)]
        out: PathBuf,
    },
    /// Statistical fidelity report comparing a corpus with a fake pool.
    Stats {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        pool: PathBuf,
        /// Output CSV (statistic,value).
        #[arg(long)]
        out: PathBuf,
    },
    /// Merge locations into a coarser grid by agglomerative clustering.
    Coarsen {
        #[arg(long)]
        corpus: PathBuf,
        /// Planar location coordinates CSV (location,x,y).
        #[arg(long)]
        coords: PathBuf,
        /// Number of coarse locations to keep.
        #[arg(long)]
        target_r: usize,
        /// Output relabeled corpus CSV.
        #[arg(long)]
        out: PathBuf,
        /// Output fine-to-coarse mapping CSV (location,class).
        #[arg(long)]
        mapping_out: PathBuf,
        /// Output coarse coordinates CSV (weighted centroids).
        #[arg(long)]
        coords_out: Option<PathBuf>,
    },
    /// Cut a corpus to a slot range, e.g. to split train/test days.
    Split {
        #[arg(long)]
        corpus: PathBuf,
        /// First slot to keep (inclusive).
        #[arg(long)]
        start: usize,
        /// One past the last slot to keep.
        #[arg(long)]
        end: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Failure classified for the process exit code.
enum CliError {
    /// Bad arguments, malformed config, or unreadable/invalid inputs.
    Validation(String),
    /// The pipeline itself failed on valid inputs.
    Pipeline(String),
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let msg = err.to_string();
        match err {
            Error::Reducible | Error::NonConvergence(_) => CliError::Pipeline(msg),
            _ => CliError::Validation(msg),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help/version requests are not errors.
            if err.use_stderr() {
                eprintln!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Pipeline(msg)) => {
            eprintln!("pipeline failure: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> CliResult<PipelineConfig> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    for entry in &cli.overrides {
        let (key, value) = entry
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("--set expects key=value, got '{entry}'")))?;
        config.set(key.trim(), value.trim())?;
    }
    config.validate()?;
    Ok(config)
}

/// Manifest path derived from the primary output: `<out>.manifest`.
fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".manifest");
    PathBuf::from(name)
}

fn finish(
    subcommand: &str,
    config: &PipelineConfig,
    primary_out: &Path,
    artifacts: &[(&str, &Path)],
) -> CliResult<()> {
    let extra: Vec<(String, String)> = artifacts
        .iter()
        .map(|(key, path)| (format!("artifact_{key}"), path.display().to_string()))
        .collect();
    write_manifest(&manifest_path(primary_out), subcommand, config, &extra)?;
    Ok(())
}

fn open_writer(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(Error::from)?))
}

fn open_reader(path: &Path) -> CliResult<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(Error::from)?))
}

fn learn_profiles(corpus: &Corpus, period_map: &PeriodMap) -> CliResult<Vec<MobilityProfile>> {
    Ok(corpus
        .traces
        .iter()
        .map(|t| learn_profile(t, corpus.r, period_map))
        .collect::<faketrace::Result<_>>()?)
}

fn build_model(
    corpus: &Corpus,
    period_map: &PeriodMap,
    config: &PipelineConfig,
) -> CliResult<AggregateModel> {
    let profiles = learn_profiles(corpus, period_map)?;
    Ok(aggregate_model(&profiles, DistanceFunction::Hamming, config.epsilon)?)
}

/// Seed traces are all users except the last `alternates`, which are held
/// out as deniability alternates.
fn split_seeds(corpus: &Corpus, alternates: usize) -> CliResult<(Vec<Trace>, Vec<Trace>)> {
    if alternates >= corpus.traces.len() {
        return Err(CliError::Validation(format!(
            "alternates = {alternates} leaves no seed users (corpus has {})",
            corpus.traces.len()
        )));
    }
    let cut = corpus.traces.len() - alternates;
    Ok((corpus.traces[..cut].to_vec(), corpus.traces[cut..].to_vec()))
}

fn run(cli: Cli) -> CliResult<()> {
    let config = load_config(&cli)?;
    let period_map = PeriodMap::single();
    match &cli.cmd {
        Cmd::Synth { out, roles_out } => {
            let spec = config.synth_spec();
            let synth = synth_corpus(&spec, config.stage_seed("synth"))?;
            save_corpus(&synth.corpus, out)?;
            let mut artifacts: Vec<(&str, &Path)> = vec![("corpus", out.as_path())];
            if let Some(roles_path) = roles_out {
                let roles = SemanticClasses::new(synth.role_of.clone(), spec.roles)?;
                write_classes(&roles, open_writer(roles_path)?)?;
                artifacts.push(("roles", roles_path.as_path()));
            }
            finish("synth", &config, out, &artifacts)
        }
        Cmd::Learn { corpus, out, visits_out } => {
            let corpus = load_corpus(corpus)?;
            let model = build_model(&corpus, &period_map, &config)?;
            let mut writer = csv::Writer::from_writer(open_writer(out)?);
            writer
                .write_record(["r", "rprime", "weight"])
                .map_err(Error::from)?;
            for r in 0..model.r {
                for r2 in 0..model.r {
                    writer
                        .write_record([
                            r.to_string(),
                            r2.to_string(),
                            format!("{:.12}", model.transition(r, 0, 0, r2)),
                        ])
                        .map_err(Error::from)?;
                }
            }
            writer.flush().map_err(Error::from)?;
            let mut writer = csv::Writer::from_writer(open_writer(visits_out)?);
            writer
                .write_record(["location", "weight"])
                .map_err(Error::from)?;
            for r in 0..model.r {
                writer
                    .write_record([r.to_string(), format!("{:.12}", model.visit(0, r))])
                    .map_err(Error::from)?;
            }
            writer.flush().map_err(Error::from)?;
            finish(
                "learn",
                &config,
                out,
                &[("transitions", out.as_path()), ("visits", visits_out.as_path())],
            )
        }
        Cmd::Similarity { corpus, kind, coords, out } => {
            let corpus = load_corpus(corpus)?;
            let distance = match coords {
                Some(path) => DistanceFunction::Euclidean(read_coordinates(
                    open_reader(path)?,
                    corpus.r,
                )?),
                None => DistanceFunction::Hamming,
            };
            let profiles = learn_profiles(&corpus, &period_map)?;
            let mut rng = ChaCha8Rng::seed_from_u64(config.stage_seed("similarity"));
            let mut writer = csv::Writer::from_writer(open_writer(out)?);
            writer.write_record(["u", "v", "score"]).map_err(Error::from)?;
            for (i, u) in profiles.iter().enumerate() {
                for (j, v) in profiles.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let score = match kind {
                        SimilarityKindArg::Geo => geographic_similarity(u, v, &distance)?.score,
                        SimilarityKindArg::Sem0 => semantic_similarity_order0(u, v)?.score,
                        SimilarityKindArg::Sem1 => {
                            let order0 = semantic_similarity_order0(u, v)?;
                            let sigma0 = order0
                                .mapping
                                .unwrap_or_else(|| Permutation::identity(corpus.r));
                            semantic_similarity_order1(
                                u,
                                v,
                                &sigma0,
                                &AnnealOptions::default(),
                                &mut rng,
                            )?
                            .score
                        }
                    };
                    writer
                        .write_record([
                            corpus.traces[i].user.clone(),
                            corpus.traces[j].user.clone(),
                            format!("{score:.12}"),
                        ])
                        .map_err(Error::from)?;
                }
            }
            writer.flush().map_err(Error::from)?;
            finish("similarity", &config, out, &[("similarities", out.as_path())])
        }
        Cmd::Cluster { corpus, graph_out, classes_out, k } => {
            let corpus = load_corpus(corpus)?;
            let profiles = learn_profiles(&corpus, &period_map)?;
            let graph = build_semantic_graph(&profiles)?;
            let seed = config.stage_seed("cluster");
            let k = match k {
                Some(k) => *k,
                None => select_cluster_count(
                    &graph,
                    config.kappa_min,
                    config.kappa_max,
                    seed,
                    QualityRatio::IntraOverInter,
                )?,
            };
            let classes = cluster_graph(&graph, k, seed)?;
            write_graph(&graph, open_writer(graph_out)?)?;
            write_classes(&classes, open_writer(classes_out)?)?;
            finish(
                "cluster",
                &config,
                classes_out,
                &[("graph", graph_out.as_path()), ("classes", classes_out.as_path())],
            )
        }
        Cmd::Generate { corpus, classes, out, sidecar_out, rejections_out } => {
            let corpus = load_corpus(corpus)?;
            let classes = read_classes(open_reader(classes)?, corpus.r)?;
            let model = build_model(&corpus, &period_map, &config)?;
            let (seeds, alternates) = split_seeds(&corpus, config.alternates)?;
            let tester = PrivacyTester::new(
                config.privacy_params(),
                corpus.r,
                period_map.clone(),
                &alternates,
            )?;
            let report = generate_pool(
                &seeds,
                &classes,
                &model,
                &config.generation_params(),
                &tester,
                config.count_per_seed,
                &period_map,
                config.stage_seed("generate"),
            )?;
            write_pool(&report.fakes, open_writer(out)?)?;
            write_pool_sidecar(&report.fakes, open_writer(sidecar_out)?)?;
            write_rejections(&report.rejections, open_writer(rejections_out)?)?;
            finish(
                "generate",
                &config,
                out,
                &[
                    ("pool", out.as_path()),
                    ("sidecar", sidecar_out.as_path()),
                    ("rejections", rejections_out.as_path()),
                ],
            )?;
            if report.exhausted_seeds.len() == seeds.len() {
                return Err(CliError::Pipeline(format!(
                    "attempt cap exhausted on all {} seeds",
                    seeds.len()
                )));
            }
            if !report.exhausted_seeds.is_empty() {
                log::warn!(
                    "attempt cap exhausted on {} of {} seeds: {}",
                    report.exhausted_seeds.len(),
                    seeds.len(),
                    report.exhausted_seeds.join(", ")
                );
            }
            Ok(())
        }
        Cmd::Audit { corpus, pool, out } => {
            let corpus = load_corpus(corpus)?;
            let pool = read_pool(open_reader(pool)?)?;
            let (_, alternates) = split_seeds(&corpus, config.alternates)?;
            let tester = PrivacyTester::new(
                config.privacy_params(),
                corpus.r,
                period_map.clone(),
                &alternates,
            )?;
            let mut writer = csv::Writer::from_writer(open_writer(out)?);
            writer
                .write_record([
                    "fake_id",
                    "seed_user",
                    "passed",
                    "sim_g",
                    "intersection",
                    "witnesses",
                ])
                .map_err(Error::from)?;
            for (fake_id, (seed_user, locations)) in pool.iter().enumerate() {
                let seed = corpus.user(seed_user).ok_or_else(|| {
                    CliError::Validation(format!("pool references unknown user '{seed_user}'"))
                })?;
                let verdict = tester.test(locations, seed)?;
                writer
                    .write_record([
                        fake_id.to_string(),
                        seed_user.clone(),
                        verdict.passed.to_string(),
                        format!("{:.12}", verdict.sim_g),
                        verdict.intersection.to_string(),
                        verdict.deniability_witnesses.to_string(),
                    ])
                    .map_err(Error::from)?;
            }
            writer.flush().map_err(Error::from)?;
            finish("audit", &config, out, &[("audit", out.as_path())])
        }
        Cmd::Attack { corpus, pool, classes, out } => {
            let corpus = load_corpus(corpus)?;
            let classes = read_classes(open_reader(classes)?, corpus.r)?;
            let model = build_model(&corpus, &period_map, &config)?;
            let pool_fakes = match pool {
                Some(path) => Some(hydrate_pool(
                    &read_pool(open_reader(path)?)?,
                    &model,
                    &period_map,
                )?),
                None => None,
            };
            // Attack only users that can field pool fakes; with no pool the
            // baselines cover everyone.
            let truths: Vec<Trace> = match &pool_fakes {
                Some(fakes) => corpus
                    .traces
                    .iter()
                    .filter(|t| fakes.iter().any(|f| f.seed_user == t.user))
                    .cloned()
                    .collect(),
                None => corpus.traces.clone(),
            };
            if truths.is_empty() {
                return Err(CliError::Validation(
                    "no corpus user has fakes in the pool".to_string(),
                ));
            }
            let mut methods: Vec<FakeMethod<'_>> = Vec::new();
            if let Some(fakes) = &pool_fakes {
                methods.push(FakeMethod::Pool(fakes));
            }
            for kind in [
                BaselineKind::UniformIid,
                BaselineKind::AggregateIid,
                BaselineKind::RwAggregate,
                BaselineKind::RwUser,
            ] {
                methods.push(FakeMethod::Baseline(kind));
            }
            let seed = config.stage_seed("attack");
            let mut writer = csv::Writer::from_writer(open_writer(out)?);
            writer
                .write_record([
                    "method",
                    "num_fakes",
                    "beta",
                    "user",
                    "privacy",
                    "diversity_overhead",
                    "semantic_overhead",
                ])
                .map_err(Error::from)?;
            for method in &methods {
                for &num_fakes in &config.num_fakes {
                    let rows = run_scenario(
                        &truths,
                        &model,
                        method,
                        num_fakes,
                        config.beta,
                        config.trials,
                        &classes,
                        &period_map,
                        seed,
                    )?;
                    for row in rows {
                        writer
                            .write_record([
                                method.label().to_string(),
                                num_fakes.to_string(),
                                format!("{}", config.beta),
                                row.user,
                                format!("{:.12}", row.privacy),
                                format!("{:.12}", row.diversity_overhead),
                                format!("{:.12}", row.semantic_overhead),
                            ])
                            .map_err(Error::from)?;
                    }
                }
            }
            writer.flush().map_err(Error::from)?;
            finish("attack", &config, out, &[("scenario", out.as_path())])
        }
        Cmd::Stats { corpus, pool, out } => {
            let corpus = load_corpus(corpus)?;
            let pool = read_pool(open_reader(pool)?)?;
            if pool.is_empty() {
                return Err(CliError::Validation("pool is empty".to_string()));
            }
            let rows = stats_report(&corpus, &pool, &period_map, &config)?;
            let mut writer = csv::Writer::from_writer(open_writer(out)?);
            writer.write_record(["statistic", "value"]).map_err(Error::from)?;
            for (name, value) in rows {
                writer
                    .write_record([name, format!("{value:.12}")])
                    .map_err(Error::from)?;
            }
            writer.flush().map_err(Error::from)?;
            finish("stats", &config, out, &[("stats", out.as_path())])
        }
        Cmd::Coarsen { corpus, coords, target_r, out, mapping_out, coords_out } => {
            let corpus = load_corpus(corpus)?;
            let coordinates = read_coordinates(open_reader(coords)?, corpus.r)?;
            let mut weights = vec![0.0 as Scalar; corpus.r];
            for trace in &corpus.traces {
                for &loc in &trace.locations {
                    weights[loc] += 1.0;
                }
            }
            let mapping = coarsen_locations(&coordinates, &weights, *target_r)?;
            let coarse_traces: Vec<Trace> = corpus
                .traces
                .iter()
                .map(|t| {
                    Trace::new(
                        t.user.clone(),
                        t.locations.iter().map(|&loc| mapping[loc]).collect(),
                    )
                })
                .collect();
            let coarse = Corpus::new(coarse_traces, Some(*target_r))?;
            save_corpus(&coarse, out)?;
            let mapping_classes = SemanticClasses::new(mapping.clone(), *target_r)?;
            write_classes(&mapping_classes, open_writer(mapping_out)?)?;
            let mut artifacts: Vec<(&str, &Path)> =
                vec![("corpus", out.as_path()), ("mapping", mapping_out.as_path())];
            if let Some(coords_path) = coords_out {
                let coarse_coords = coarse_centroids(&coordinates, &weights, &mapping, *target_r);
                write_coordinates(&coarse_coords, open_writer(coords_path)?)?;
                artifacts.push(("coords", coords_path.as_path()));
            }
            finish("coarsen", &config, out, &artifacts)
        }
        Cmd::Split { corpus, start, end, out } => {
            let corpus = load_corpus(corpus)?;
            let cut = corpus.slot_range(*start, *end)?;
            save_corpus(&cut, out)?;
            finish("split", &config, out, &[("corpus", out.as_path())])
        }
    }
}

/// Rebuild in-memory fakes from a published pool. Verdicts are not stored
/// in the pool file; likelihoods are recomputed against the given model so
/// likelihood-weighted sampling in the attack stays meaningful.
fn hydrate_pool(
    pool: &[(String, Vec<usize>)],
    model: &AggregateModel,
    period_map: &PeriodMap,
) -> CliResult<Vec<FakeTrace>> {
    pool.iter()
        .map(|(seed_user, locations)| {
            let log_likelihood = trace_likelihood(locations, model, period_map)?;
            Ok(FakeTrace {
                seed_user: seed_user.clone(),
                locations: locations.clone(),
                log_likelihood,
                verdict: faketrace::privacy::Verdict {
                    passed: true,
                    sim_g: 0.0,
                    intersection: 0,
                    deniability_witnesses: 0,
                    failure_reasons: Vec::new(),
                },
            })
        })
        .collect()
}

/// Weighted centroid of each coarse location's members; coincident
/// zero-weight members fall back to the plain mean.
fn coarse_centroids(
    coordinates: &[(Scalar, Scalar)],
    weights: &[Scalar],
    mapping: &[usize],
    target_r: usize,
) -> Vec<(Scalar, Scalar)> {
    let mut sums = vec![(0.0, 0.0, 0.0); target_r];
    let mut plain = vec![(0.0, 0.0, 0.0); target_r];
    for (loc, &coarse) in mapping.iter().enumerate() {
        let (x, y) = coordinates[loc];
        let w = weights[loc];
        sums[coarse].0 += w * x;
        sums[coarse].1 += w * y;
        sums[coarse].2 += w;
        plain[coarse].0 += x;
        plain[coarse].1 += y;
        plain[coarse].2 += 1.0;
    }
    sums.iter()
        .zip(&plain)
        .map(|(&(wx, wy, w), &(px, py, n))| {
            if w > 0.0 {
                (wx / w, wy / w)
            } else {
                (px / n, py / n)
            }
        })
        .collect()
}

/// All fidelity statistics as (name, value) rows.
fn stats_report(
    corpus: &Corpus,
    pool: &[(String, Vec<usize>)],
    period_map: &PeriodMap,
    config: &PipelineConfig,
) -> CliResult<Vec<(String, Scalar)>> {
    let fake_traces: Vec<Trace> = pool
        .iter()
        .enumerate()
        .map(|(i, (_, locations))| Trace::new(format!("fake{i}"), locations.clone()))
        .collect();
    let mut rows = Vec::new();

    // Spatial allocation: how total visit mass spreads over the most
    // popular locations, compared against degenerate baselines.
    let real_alloc = spatial_allocation(&corpus.traces, corpus.r, Some(config.top_m))?;
    let fake_alloc = spatial_allocation(&fake_traces, corpus.r, Some(config.top_m))?;
    let n = real_alloc.probabilities.len();
    let uniform = AllocationDistribution {
        probabilities: vec![1.0 / n as Scalar; n],
    };
    let mut single_probs = vec![0.0 as Scalar; n];
    single_probs[0] = 1.0;
    let single = AllocationDistribution {
        probabilities: single_probs,
    };
    rows.push((
        "spatial_kl_fakes".to_string(),
        kl_divergence(&real_alloc, &fake_alloc, config.kl_floor)?,
    ));
    rows.push((
        "spatial_kl_uniform".to_string(),
        kl_divergence(&real_alloc, &uniform, config.kl_floor)?,
    ));
    rows.push((
        "spatial_kl_single".to_string(),
        kl_divergence(&real_alloc, &single, config.kl_floor)?,
    ));

    // Time allocation: mean share of each user's rank-i location,
    // normalized over the top ranks. Rank profiles are comparable between
    // datasets of different sizes, unlike the per-user rank distributions.
    let mut stats_rng = ChaCha8Rng::seed_from_u64(config.stage_seed("stats"));
    let real_ranks = rank_profile(&corpus.traces, corpus.r, config.top_k);
    let fake_ranks = rank_profile(&fake_traces, corpus.r, config.top_k);
    let uniform_ranks = uniform_rank_profile(&corpus.traces, corpus.r, config.top_k);
    let random_ranks = random_rank_profile(&corpus.traces, corpus.r, config.top_k, &mut stats_rng);
    for (label, other) in [
        ("fakes", &fake_ranks),
        ("uniform", &uniform_ranks),
        ("random", &random_ranks),
    ] {
        rows.push((
            format!("time_kl_{label}"),
            kl_divergence(&real_ranks, other, config.kl_floor)?,
        ));
    }

    // Aggregate-model similarity: group the pool round-robin into fake
    // corpora (one fake per seed each) and compare their aggregate models
    // with the real one.
    let real_model = {
        let profiles = corpus
            .traces
            .iter()
            .map(|t| learn_profile(t, corpus.r, period_map))
            .collect::<faketrace::Result<Vec<_>>>()?;
        aggregate_model(&profiles, DistanceFunction::Hamming, config.epsilon)?
    };
    let mut by_seed: BTreeMap<&str, Vec<&Vec<usize>>> = BTreeMap::new();
    for (seed_user, locations) in pool {
        by_seed.entry(seed_user).or_default().push(locations);
    }
    let groups = by_seed
        .values()
        .map(|fakes| fakes.len())
        .min()
        .unwrap_or(0)
        .min(10);
    if groups > 0 {
        let fake_models = (0..groups)
            .map(|g| -> faketrace::Result<AggregateModel> {
                let profiles = by_seed
                    .values()
                    .map(|fakes| {
                        learn_profile(
                            &Trace::new("fake", fakes[g].clone()),
                            corpus.r,
                            period_map,
                        )
                    })
                    .collect::<faketrace::Result<Vec<_>>>()?;
                aggregate_model(&profiles, DistanceFunction::Hamming, config.epsilon)
            })
            .collect::<faketrace::Result<Vec<_>>>()?;
        let report = aggregate_similarity_report(&real_model, &fake_models)?;
        rows.push(("agg_transition_mean".to_string(), report.transition.mean));
        rows.push(("agg_transition_median".to_string(), report.transition.median));
        rows.push(("agg_transition_std".to_string(), report.transition.std));
        rows.push(("agg_visiting_mean".to_string(), report.visiting.mean));
        rows.push(("agg_visiting_median".to_string(), report.visiting.median));
        rows.push(("agg_visiting_std".to_string(), report.visiting.std));
    }

    // Q-Q agreement between pairwise semantic similarity within the real
    // corpus and within the fake pool (capped to keep this quadratic step
    // cheap).
    const QQ_SAMPLE_CAP: usize = 40;
    let real_profiles = corpus
        .traces
        .iter()
        .map(|t| learn_profile(t, corpus.r, period_map))
        .collect::<faketrace::Result<Vec<_>>>()?;
    let fake_profiles = fake_traces
        .iter()
        .take(QQ_SAMPLE_CAP)
        .map(|t| learn_profile(t, corpus.r, period_map))
        .collect::<faketrace::Result<Vec<_>>>()?;
    let real_sims = pairwise_sem0(&real_profiles)?;
    let fake_sims = pairwise_sem0(&fake_profiles)?;
    rows.push((
        "qq_correlation".to_string(),
        qq_correlation(&real_sims, &fake_sims)?,
    ));
    Ok(rows)
}

/// Fraction of a trace's slots spent at its rank-`i` most visited location,
/// for `i < top_k` (zero beyond the visited support).
fn sorted_shares(trace: &Trace, r: usize, top_k: usize) -> Vec<Scalar> {
    let mut counts = vec![0.0 as Scalar; r];
    for &loc in &trace.locations {
        counts[loc] += 1.0;
    }
    counts.sort_by(|a, b| b.partial_cmp(a).expect("finite counts"));
    let total = trace.locations.len() as Scalar;
    (0..top_k)
        .map(|i| counts.get(i).copied().unwrap_or(0.0) / total)
        .collect()
}

fn normalize_ranks(mut sums: Vec<Scalar>) -> AllocationDistribution {
    let z: Scalar = sums.iter().sum();
    if z > 0.0 {
        sums.iter_mut().for_each(|x| *x /= z);
    }
    AllocationDistribution { probabilities: sums }
}

/// Mean rank share across the dataset, normalized over ranks.
fn rank_profile(dataset: &[Trace], r: usize, top_k: usize) -> AllocationDistribution {
    let mut sums = vec![0.0 as Scalar; top_k];
    for trace in dataset {
        for (i, s) in sorted_shares(trace, r, top_k).into_iter().enumerate() {
            sums[i] += s;
        }
    }
    normalize_ranks(sums)
}

/// Baseline where each user spreads time evenly over their visited set.
fn uniform_rank_profile(dataset: &[Trace], r: usize, top_k: usize) -> AllocationDistribution {
    let mut sums = vec![0.0 as Scalar; top_k];
    for trace in dataset {
        let visited = sorted_shares(trace, r, r).iter().filter(|&&s| s > 0.0).count();
        let share = 1.0 / visited as Scalar;
        for slot in sums.iter_mut().take(top_k.min(visited)) {
            *slot += share;
        }
    }
    normalize_ranks(sums)
}

/// Baseline where each user's shares over their visited set are uniformly
/// random on the simplex (sorted exponential draws).
fn random_rank_profile(
    dataset: &[Trace],
    r: usize,
    top_k: usize,
    rng: &mut ChaCha8Rng,
) -> AllocationDistribution {
    use rand::Rng as _;
    let mut sums = vec![0.0 as Scalar; top_k];
    for trace in dataset {
        let visited = sorted_shares(trace, r, r).iter().filter(|&&s| s > 0.0).count();
        let mut draws: Vec<Scalar> = (0..visited)
            .map(|_| -(rng.gen_range(0.0..1.0f64).max(f64::MIN_POSITIVE)).ln())
            .collect();
        draws.sort_by(|a, b| b.partial_cmp(a).expect("finite draws"));
        let z: Scalar = draws.iter().sum();
        for (slot, draw) in sums.iter_mut().zip(&draws).take(top_k) {
            *slot += draw / z;
        }
    }
    normalize_ranks(sums)
}

fn pairwise_sem0(profiles: &[MobilityProfile]) -> CliResult<Vec<Scalar>> {
    let mut sims = Vec::new();
    for (i, u) in profiles.iter().enumerate() {
        for (j, v) in profiles.iter().enumerate() {
            if i != j {
                sims.push(semantic_similarity_order0(u, v)?.score);
            }
        }
    }
    Ok(sims)
}
