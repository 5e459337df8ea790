use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use huepath_core::colormap::{check_invariants, profile_colors, HexListDocument};
use huepath_core::colorspace::{delta_e_2000, LabColor};
use huepath_core::corpus::Corpus;
use huepath_core::environment::{quantize_gamut, StateSpace};
use huepath_core::planner::{benchmark_variants, check_criteria, BenchmarkReport, QLearningConfig, Variant};
use huepath_core::preference::{rank_corpus, sample_unit_sphere, PreferenceModel, SamplerConfig, SimulatedOracle, DEFAULT_DELTA};
use huepath_core::reward::RewardConfig;
use huepath_core::session::Workbench;
use huepath_service::ServiceConfig;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::documents::{cosine, read_json, read_text, read_theta, write_json, write_text, ModelDocument, StateSpaceDocument, WeightSource};
use crate::error::{CliError, CliResult};
use crate::EnvArgs;

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json output"));
}

fn load_corpus(env: &EnvArgs) -> CliResult<Corpus> {
    match &env.corpus {
        Some(path) => Ok(Corpus::from_json(&read_text(path)?)?),
        None => Ok(Corpus::starter()),
    }
}

fn parse_seed(hex: &str) -> CliResult<LabColor> {
    Ok(LabColor::from_hex(hex)?)
}

fn workbench(env: &EnvArgs, corpus: &Corpus, seed: LabColor) -> CliResult<Workbench> {
    Ok(Workbench::prepare(corpus, seed, StateSpace::shared(env.space_seed), RewardConfig::default())?)
}

pub fn quantize(seed_rng: u64, out: &Path, json: bool) -> CliResult<()> {
    let space = quantize_gamut(seed_rng);
    let de = space.mean_nearest_neighbor(delta_e_2000);
    let euclid = space.mean_nearest_neighbor(|a, b| a.distance(&b));
    write_json(out, &StateSpaceDocument { seed_rng, states: space.states().to_vec() })?;
    if json {
        print_json(&json!({
            "out": out,
            "states": space.states().len(),
            "mean_nn_delta_e2000": de,
            "mean_nn_euclidean": euclid,
        }));
    } else {
        println!("{} states written to {}", space.states().len(), out.display());
        println!("mean nearest-neighbor distance: {de:.3} ΔE2000, {euclid:.3} Euclidean Lab");
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn train(
    env: &EnvArgs,
    seed_hex: &str,
    oracle: &str,
    n: usize,
    rng_seed: u64,
    noiseless: bool,
    out: &Path,
    json: bool,
) -> CliResult<()> {
    let seed = parse_seed(seed_hex)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let theta = if oracle == "random" { sample_unit_sphere(&mut rng) } else { read_theta(Path::new(oracle))? };
    let corpus = load_corpus(env)?;
    let wb = workbench(env, &corpus, seed)?;
    let prior = PreferenceModel::prior(SamplerConfig::default(), &mut rng);
    let mut source = SimulatedOracle {
        theta,
        delta: DEFAULT_DELTA,
        noiseless,
        rng: ChaCha8Rng::seed_from_u64(rng_seed ^ 0x5EED_0A1C),
    };
    let model = huepath_core::preference::teach_loop(prior, &wb.candidates, &wb.features, n, &mut source, &mut rng)?;
    let cos = cosine(&model.mean(), &theta);
    let responses = model.history.len();
    write_json(out, &ModelDocument { seed_color: seed.to_hex(), oracle_theta: Some(theta), model })?;
    if json {
        print_json(&json!({ "out": out, "responses": responses, "cosine": cos, "candidates": wb.candidates.len() }));
    } else {
        println!("{responses} responses over {} candidates, model written to {}", wb.candidates.len(), out.display());
        println!("cosine(mean weights, oracle) = {cos:.4}");
    }
    Ok(())
}

fn load_model(path: &Path, seed_hex: Option<&str>) -> CliResult<(ModelDocument, LabColor)> {
    let doc: ModelDocument = read_json(path)?;
    let seed = parse_seed(seed_hex.unwrap_or(&doc.seed_color))?;
    Ok((doc, seed))
}

pub fn rank(env: &EnvArgs, model: &Path, seed_hex: Option<&str>, top: usize, json: bool) -> CliResult<()> {
    let (doc, seed) = load_model(model, seed_hex)?;
    let corpus = load_corpus(env)?;
    let wb = workbench(env, &corpus, seed)?;
    let ranked = rank_corpus(&doc.model, &wb.ids(), &wb.features);
    let shown = &ranked[..top.min(ranked.len())];
    if json {
        let rows: Vec<_> = shown
            .iter()
            .enumerate()
            .map(|(i, r)| json!({ "rank": i + 1, "id": r.id, "score": r.score }))
            .collect();
        print_json(&json!({ "candidates": ranked.len(), "ranking": rows }));
    } else {
        println!("{} candidates for {}", ranked.len(), seed.to_hex());
        for (i, r) in shown.iter().enumerate() {
            println!("{:>3}  {:<32} {:+.6}", i + 1, r.id, r.score);
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn search(
    env: &EnvArgs,
    model: &Path,
    seed_hex: Option<&str>,
    episodes: usize,
    rng_seed: u64,
    out: &Path,
    csv: Option<&Path>,
    json: bool,
) -> CliResult<()> {
    let (doc, seed) = load_model(model, seed_hex)?;
    let corpus = load_corpus(env)?;
    let wb = workbench(env, &corpus, seed)?;
    let config = QLearningConfig { episodes, ..QLearningConfig::default() };
    let result = wb.synthesize(&doc.model.mean(), &config, rng_seed)?;
    let (Some(best), Some(reward), Some(cm)) = (&result.best, result.best_reward, &result.colormap) else {
        return Err(CliError::Invariant(format!("no trajectory met the acceptance criteria in {episodes} episodes")));
    };
    let (criteria, _) = check_criteria(&wb.graph, &wb.candidates, &best.ids, seed)?;
    let problems = check_invariants(&cm.colors, Some(seed));
    write_json(out, &cm.hex_document())?;
    if let Some(path) = csv {
        write_text(path, &cm.to_csv())?;
    }
    if json {
        print_json(&json!({
            "out": out,
            "reward": reward,
            "states": best.ids.len(),
            "criteria": criteria,
            "flatness": cm.profile.flatness,
            "violations": problems,
        }));
    } else {
        println!("reward {reward:.6} over {} states, colormap written to {}", best.ids.len(), out.display());
        println!(
            "criteria: valid path {}, novel {}, through seed {}, in gamut {}",
            criteria.valid_path, criteria.novel, criteria.through_seed, criteria.in_gamut
        );
        println!("flatness {:.5}", cm.profile.flatness);
        for p in &problems {
            println!("violation: {p}");
        }
    }
    if !criteria.passed() {
        return Err(CliError::Invariant("synthesized trajectory failed the criteria re-check".into()));
    }
    if !problems.is_empty() {
        return Err(CliError::Invariant(problems.join("; ")));
    }
    Ok(())
}

fn model_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        if path.extension().is_some_and(|x| x == "json") {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::Validation(format!("{}: no .json model files", dir.display())));
    }
    Ok(files)
}

#[allow(clippy::too_many_arguments)]
pub fn benchmark(
    env: &EnvArgs,
    models: &Path,
    reps: usize,
    episodes: usize,
    rng_seed: u64,
    out: &Path,
    traces: Option<&Path>,
    json: bool,
) -> CliResult<()> {
    let corpus = load_corpus(env)?;
    let mut by_seed: BTreeMap<String, Vec<(String, [f64; 9])>> = BTreeMap::new();
    for path in model_files(models)? {
        let source: WeightSource = read_json(&path)?;
        let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let seed = parse_seed(source.seed_color())?.to_hex();
        by_seed.entry(seed).or_default().push((id, source.weights()?));
    }
    let mut runs = Vec::new();
    for (seed_hex, thetas) in &by_seed {
        let wb = workbench(env, &corpus, parse_seed(seed_hex)?)?;
        let report = benchmark_variants(&wb.graph, &wb.candidates, thetas, &wb.context, reps, episodes, rng_seed)?;
        runs.extend(report.runs);
    }
    runs.sort_by(|a, b| (&a.theta_id, a.repetition, a.variant).cmp(&(&b.theta_id, b.repetition, b.variant)));
    let report = BenchmarkReport { runs };
    write_text(out, &report.to_table())?;
    if let Some(dir) = traces {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        for r in &report.runs {
            let body: String =
                r.episode_rewards.iter().enumerate().map(|(i, x)| format!("{i},{x:.6}\n")).collect();
            write_text(&dir.join(format!("{}-{}-{}.csv", r.theta_id, r.variant.name(), r.repetition)), &body)?;
        }
    }
    let mut holds = 0;
    let mut total = 0;
    for thetas in by_seed.values() {
        for (id, _) in thetas {
            for rep in 0..reps {
                let get = |v| report.mean_for(v, id, rep).unwrap_or(f64::NEG_INFINITY);
                total += 1;
                if get(Variant::Optimistic) > get(Variant::Random) && get(Variant::Random) > get(Variant::Traditional) {
                    holds += 1;
                }
            }
        }
    }
    let means: BTreeMap<&str, f64> = Variant::ALL.iter().map(|v| (v.name(), report.mean(*v))).collect();
    if json {
        print_json(&json!({ "out": out, "means": means, "ordering_holds": holds, "cases": total }));
    } else {
        for v in Variant::ALL {
            println!("{:<12} mean best reward - landing {:+.6}", v.name(), report.mean(v));
        }
        println!("optimistic > random > traditional in {holds}/{total} cases");
    }
    Ok(())
}

pub fn profile(cmap: &Path, seed_hex: Option<&str>, json: bool) -> CliResult<()> {
    let doc: HexListDocument = read_json(cmap)?;
    let colors = doc.to_lab()?;
    if let Some(lab) = &doc.lab {
        if lab.len() != doc.colors.len() {
            return Err(CliError::Validation(format!(
                "{}: {} hex colors but {} Lab samples",
                cmap.display(),
                doc.colors.len(),
                lab.len()
            )));
        }
    }
    let seed = seed_hex.map(parse_seed).transpose()?;
    let p = profile_colors(&colors);
    let problems = check_invariants(&colors, seed);
    let monotone = colors.windows(2).all(|w| w[1].l < w[0].l);
    let (min_gap, max_gap) =
        p.gaps.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| (lo.min(*g), hi.max(*g)));
    let mean_gap = p.total_length / p.gaps.len().max(1) as f64;
    if json {
        print_json(&json!({
            "samples": colors.len(),
            "flatness": p.flatness,
            "total_length": p.total_length,
            "gap_min": min_gap,
            "gap_mean": mean_gap,
            "gap_max": max_gap,
            "lightness_monotone": monotone,
            "violations": problems,
        }));
    } else {
        println!("{} samples, total length {:.3} ΔE2000", colors.len(), p.total_length);
        println!("flatness {:.5}", p.flatness);
        println!("gaps min {min_gap:.4} mean {mean_gap:.4} max {max_gap:.4}");
        println!("lightness {}", if monotone { "strictly decreasing" } else { "NOT strictly decreasing" });
        for v in &problems {
            println!("violation: {v}");
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Invariant(problems.join("; ")))
    }
}

pub fn serve(
    env: &EnvArgs,
    addr: SocketAddr,
    rng: u64,
    queries: usize,
    episodes: usize,
    static_dir: Option<PathBuf>,
) -> CliResult<()> {
    let config = ServiceConfig {
        corpus: Arc::new(load_corpus(env)?),
        rng_seed: rng,
        space_seed: env.space_seed,
        default_queries: queries,
        episodes,
        search_budget: Duration::from_secs(30),
        static_dir,
    };
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::io(Path::new("<runtime>"), e))?;
    runtime
        .block_on(huepath_service::serve(config, addr))
        .map_err(|e| CliError::Io { path: addr.to_string(), source: e })
}
