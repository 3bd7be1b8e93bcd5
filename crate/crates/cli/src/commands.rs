//! The four subcommands: `value`, `verify`, `experiment`, `gen`.

use std::path::{Path, PathBuf};

use asymshap_core::oracle::{exact_ads_general, exact_ads_icuws, exact_data_shapley};
use asymshap_core::utility::Utility;
use asymshap_core::{
    addition_curve, allocation_summary, duplication_check, estimate_mc_ads, generate, knn_ads,
    loo_values, make_rng, removal_curve, CentroidUtility, Curve, Dataset, Direction, GeneratorKind,
    KnnConfig, KnnUtility, McConfig, Metric, OrderedPartition, SyntheticSpec, TableUtility,
    TestSet, ValueReport, WeightSystem,
};
use rand::Rng;

use crate::config::Config;
use crate::error::{CliError, CliResult};
use crate::io;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Cap requested workers by the `ASYMSHAP_THREADS` environment variable.
fn effective_workers(requested: usize) -> usize {
    match std::env::var("ASYMSHAP_THREADS") {
        Ok(raw) => match raw.parse::<usize>() {
            Ok(cap) if cap >= 1 => requested.min(cap),
            _ => requested,
        },
        Err(_) => requested,
    }
}

fn out_dir(cfg: &Config) -> CliResult<PathBuf> {
    let dir = PathBuf::from(cfg.get("out").unwrap_or("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn load_test_set(cfg: &Config, train: &Dataset) -> CliResult<TestSet> {
    let path = cfg.require("test_set")?;
    let test = io::load_dataset(Path::new(path))?;
    if test.dim() != train.dim() {
        return Err(CliError::validation(format!(
            "test set dimension {} does not match training dimension {}",
            test.dim(),
            train.dim()
        )));
    }
    Ok(test)
}

fn load_partition_or_default(cfg: &Config, n: usize) -> CliResult<OrderedPartition> {
    match cfg.get("partition") {
        None => Ok(OrderedPartition::single_class(n)),
        Some(path) => {
            let p = io::load_partition(Path::new(path))?;
            if p.num_points() != n {
                return Err(CliError::validation(format!(
                    "partition covers {} ids but the dataset has {n}",
                    p.num_points()
                )));
            }
            Ok(p)
        }
    }
}

fn utility_from_config(
    cfg: &Config,
    train: &Dataset,
    test: &TestSet,
) -> CliResult<Box<dyn Utility>> {
    let kind = cfg.get("utility.kind").unwrap_or("knn");
    let empty_default = 1.0 / train.num_classes() as f64;
    let empty_score: f64 = cfg.get_or("utility.empty_score", empty_default)?;
    match kind {
        "knn" => {
            let k: usize = cfg.get_or("utility.k", 5)?;
            let metric: Metric = cfg.get_or("utility.metric", Metric::Euclidean)?;
            Ok(Box::new(KnnUtility::new(
                train.clone(),
                test.clone(),
                k,
                metric,
                empty_score,
            )?))
        }
        "centroid" => Ok(Box::new(CentroidUtility::new(
            train.clone(),
            test.clone(),
            empty_score,
        )?)),
        other => Err(CliError::validation(format!(
            "utility.kind must be knn or centroid, got `{other}`"
        ))),
    }
}

fn knn_config(cfg: &Config, train: &Dataset) -> CliResult<KnnConfig> {
    let k: usize = cfg.get_or("knn.k", 5)?;
    let metric: Metric = cfg.get_or("knn.metric", Metric::Euclidean)?;
    let empty_default = 1.0 / train.num_classes() as f64;
    let empty_score: f64 = cfg.get_or("utility.empty_score", empty_default)?;
    Ok(KnnConfig::new(k, metric, empty_score)?)
}

fn synthetic_spec(cfg: &Config, fallback_seed: u64) -> CliResult<SyntheticSpec> {
    let kind: GeneratorKind = cfg.get_or("gen.kind", GeneratorKind::TwoGaussians)?;
    let mut spec = SyntheticSpec::new(kind);
    spec.n_per_class = cfg.get_or("gen.n_per_class", spec.n_per_class)?;
    spec.dim = cfg.get_or("gen.dim", spec.dim)?;
    spec.noise = cfg.get_or("gen.noise", spec.noise)?;
    spec.seed = cfg.get_or("gen.seed", fallback_seed)?;
    spec.periods = cfg.get_or("gen.periods", spec.periods)?;
    spec.copies = cfg.get_or("gen.copies", spec.copies)?;
    spec.corrupt_fraction = cfg.get_or("gen.corrupt_fraction", spec.corrupt_fraction)?;
    spec.test_per_class = cfg.get_or("gen.test_per_class", spec.test_per_class)?;
    Ok(spec)
}

/// `value`: compute per-point values with the configured method and write
/// a report.
pub fn run_value(cfg: &Config) -> CliResult<()> {
    let method = cfg.require("method")?.to_string();
    let seed: u64 = cfg.get_or("seed", 0)?;
    let train = io::load_dataset(Path::new(cfg.require("dataset")?))?;
    let partition = load_partition_or_default(cfg, train.len())?;
    let test = load_test_set(cfg, &train)?;

    let mut report: ValueReport = match method.as_str() {
        "oracle" => {
            let utility = utility_from_config(cfg, &train, &test)?;
            if partition.num_classes() == 1 {
                exact_data_shapley(utility.as_ref(), train.len())?
            } else {
                let ws = WeightSystem::intra_class_uniform(partition.clone());
                exact_ads_icuws(&ws, utility.as_ref())?
            }
        }
        "mc" => {
            let utility = utility_from_config(cfg, &train, &test)?;
            let ws = WeightSystem::intra_class_uniform(partition.clone());
            let mc = McConfig {
                budget: cfg.get_or("mc.budget", 5_000)?,
                tol: cfg.get_opt("mc.tol")?,
                window: cfg.get_or("mc.window", 100)?,
                seed: cfg.get_or("mc.seed", seed)?,
                workers: effective_workers(cfg.get_or("mc.workers", 1)?),
            };
            estimate_mc_ads(&ws, utility.as_ref(), &mc)?
        }
        "knn" => {
            let knn = knn_config(cfg, &train)?;
            knn_ads(&train, &partition, &test, &knn)?
        }
        "loo" => {
            let utility = utility_from_config(cfg, &train, &test)?;
            loo_values(utility.as_ref(), train.len())
        }
        other => {
            return Err(CliError::validation(format!(
                "method must be oracle, mc, knn or loo; got `{other}`"
            )))
        }
    };

    if method != "mc" {
        // the estimator already stamps its own seed
        report.meta.seed = seed;
    }
    report.meta.config_hash = Some(cfg.hash());
    report.meta.tool_version = Some(TOOL_VERSION.to_string());

    let out = PathBuf::from(cfg.get("out").unwrap_or("report.json"));
    io::write_report(&out, &report)?;
    println!(
        "wrote {} ({} points, method {})",
        out.display(),
        report.values.len(),
        report.method
    );
    Ok(())
}

/// `verify`: cross-check the exact computation paths against each other on
/// freshly generated small instances and print the max deviations.
pub fn run_verify(cfg: &Config) -> CliResult<()> {
    let seed: u64 = cfg.get_or("seed", 0)?;
    let mut rng = make_rng(seed ^ 0x5EED_BA5E);

    // permutation enumeration vs per-class subset sums
    let mut dev_oracles = 0.0f64;
    for trial in 0..20 {
        let n = rng.random_range(4..=7);
        let split = rng.random_range(1..n);
        let partition = OrderedPartition::new(vec![(0..split).collect(), (split..n).collect()])?;
        let ws = WeightSystem::intra_class_uniform(partition);
        let utility: Box<dyn Utility> = if trial % 2 == 0 {
            Box::new(TableUtility::random(n, &mut rng)?)
        } else {
            let train = random_points(&mut rng, n);
            let test = random_points(&mut rng, 3);
            Box::new(KnnUtility::new(train, test, 3, Metric::Euclidean, 0.0)?)
        };
        let a = exact_ads_general(&ws, utility.as_ref())?;
        let b = exact_ads_icuws(&ws, utility.as_ref())?;
        for (x, y) in a.values.iter().zip(&b.values) {
            dev_oracles = dev_oracles.max((x - y).abs());
        }
    }
    println!("max |ads-general - ads-icuws| = {dev_oracles:.3e}");

    // KNN recursion vs the subset-sum oracle
    let mut dev_knn = 0.0f64;
    for _ in 0..20 {
        let n = rng.random_range(5..=10);
        let split = rng.random_range(1..n);
        let partition = OrderedPartition::new(vec![(0..split).collect(), (split..n).collect()])?;
        let train = random_points(&mut rng, n);
        let test = random_points(&mut rng, 3);
        let k = [1usize, 3][rng.random_range(0..2)];
        let knn = KnnConfig::new(k, Metric::Euclidean, 0.0)?;
        let fast = knn_ads(&train, &partition, &test, &knn)?;
        let util = KnnUtility::new(train, test, k, Metric::Euclidean, 0.0)?;
        let ws = WeightSystem::intra_class_uniform(partition);
        let oracle = exact_ads_icuws(&ws, &util)?;
        for (x, y) in fast.values.iter().zip(&oracle.values) {
            dev_knn = dev_knn.max((x - y).abs());
        }
    }
    println!("max |knn-ads - oracle| = {dev_knn:.3e}");

    // duplicate attribution under the duplication-invariant utility
    let train = random_points(&mut rng, 3);
    let test = random_points(&mut rng, 4);
    let dup = duplication_check(&train, &test, 1, 0.5)?;
    println!(
        "duplication: max pair dev = {:.3e}, block-sum dev = {:.3e}, copy-class sum = {:.3e}",
        dup.max_pair_deviation, dup.sum_shrink_deviation, dup.max_copy_class_sum
    );

    if dev_oracles > 1e-12 || dev_knn > 1e-9 || dup.max_pair_deviation > 1e-9 {
        return Err(CliError::validation(
            "verification deviations exceed tolerances".to_string(),
        ));
    }
    println!("verify: all cross-checks within tolerance");
    Ok(())
}

fn random_points(rng: &mut impl Rng, n: usize) -> Dataset {
    let feats: Vec<Vec<f64>> = (0..n)
        .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
        .collect();
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
    Dataset::from_parts(feats, labels).expect("generated points are valid")
}

/// `gen`: write synthetic train/test/partition CSVs.
pub fn run_gen(cfg: &Config) -> CliResult<()> {
    let seed: u64 = cfg.get_or("seed", 0)?;
    let spec = synthetic_spec(cfg, seed)?;
    let scenario = generate(&spec)?;
    let dir = out_dir(cfg)?;
    io::save_dataset(&dir.join("train.csv"), &scenario.train)?;
    io::save_dataset(&dir.join("test.csv"), &scenario.test)?;
    io::save_partition(&dir.join("partition.csv"), &scenario.partition)?;
    println!(
        "wrote {}/train.csv ({} points), test.csv ({} points), partition.csv ({} classes)",
        dir.display(),
        scenario.train.len(),
        scenario.test.len(),
        scenario.partition.num_classes()
    );
    Ok(())
}

/// `experiment`: run a preset and write curve CSVs / allocation JSON.
pub fn run_experiment(cfg: &Config) -> CliResult<()> {
    match cfg.get("experiment.preset").unwrap_or("augment") {
        "augment" => experiment_augment(cfg),
        "sequential" => experiment_sequential(cfg),
        "allocation" => experiment_allocation(cfg),
        other => Err(CliError::validation(format!(
            "experiment.preset must be augment, sequential or allocation; got `{other}`"
        ))),
    }
}

/// Removal and addition curves over an augmented class with corrupted
/// labels mixed in.
fn experiment_augment(cfg: &Config) -> CliResult<()> {
    let seed: u64 = cfg.get_or("seed", 0)?;
    let steps: usize = cfg.get_or("experiment.steps", 11)?;
    let random_seeds: u64 = cfg.get_or("experiment.random_seeds", 5)?;

    let mut spec = synthetic_spec(cfg, seed)?;
    if cfg.get("gen.kind").is_none() {
        spec.kind = GeneratorKind::JitterAugment;
        if cfg.get("gen.corrupt_fraction").is_none() {
            spec.corrupt_fraction = 0.3;
        }
    }
    if spec.kind != GeneratorKind::JitterAugment {
        return Err(CliError::validation(
            "the augment preset needs gen.kind=jitter-augment".to_string(),
        ));
    }
    let scenario = generate(&spec)?;
    let knn = knn_config(cfg, &scenario.train)?;
    let values = knn_ads(&scenario.train, &scenario.partition, &scenario.test, &knn)?;
    let util = KnnUtility::new(
        scenario.train.clone(),
        scenario.test.clone(),
        knn.k,
        knn.metric,
        knn.empty_score,
    )?;
    let target = cfg.get_or("experiment.target_class", 1usize)?;

    let dir = out_dir(cfg)?;
    let run_removal = |direction: Direction, curve_seed: u64| -> CliResult<Curve> {
        Ok(removal_curve(
            &values,
            target,
            &scenario.train,
            &scenario.partition,
            &util,
            steps,
            direction,
            curve_seed,
        )?)
    };
    io::write_curve_csv(
        &dir.join("remove_low.csv"),
        &run_removal(Direction::RemoveLow, 0)?,
    )?;
    io::write_curve_csv(
        &dir.join("remove_high.csv"),
        &run_removal(Direction::RemoveHigh, 0)?,
    )?;
    let random_curves: Vec<Curve> = (0..random_seeds)
        .map(|s| run_removal(Direction::Random, seed.wrapping_add(s)))
        .collect::<CliResult<_>>()?;
    io::write_mean_curve_csv(&dir.join("remove_random_mean.csv"), &random_curves)?;

    for (name, direction) in [
        ("add_low.csv", Direction::AddLow),
        ("add_high.csv", Direction::AddHigh),
    ] {
        let curve = addition_curve(
            &values,
            &[0],
            target,
            &scenario.train,
            &scenario.partition,
            &util,
            steps,
            direction,
            0,
        )?;
        io::write_curve_csv(&dir.join(name), &curve)?;
    }
    println!(
        "wrote {}/remove_low.csv, remove_high.csv, remove_random_mean.csv, add_low.csv, add_high.csv",
        dir.display()
    );
    Ok(())
}

/// Period-by-period valuation of a drifting stream: value each new period
/// against the retained training set, emit addition curves, then retain
/// the top fraction of the new points.
fn experiment_sequential(cfg: &Config) -> CliResult<()> {
    let seed: u64 = cfg.get_or("seed", 0)?;
    let steps: usize = cfg.get_or("experiment.steps", 11)?;
    let retention: f64 = cfg.get_or("experiment.retention", 0.1)?;
    if !(0.0..=1.0).contains(&retention) {
        return Err(CliError::validation(
            "experiment.retention must lie in [0, 1]".to_string(),
        ));
    }

    let mut spec = synthetic_spec(cfg, seed)?;
    if cfg.get("gen.kind").is_none() {
        spec.kind = GeneratorKind::DriftStream;
    }
    if spec.kind != GeneratorKind::DriftStream {
        return Err(CliError::validation(
            "the sequential preset needs gen.kind=drift-stream".to_string(),
        ));
    }
    let scenario = generate(&spec)?;
    let knn = knn_config(cfg, &scenario.train)?;
    let dir = out_dir(cfg)?;

    let mut retained: Vec<usize> = scenario.partition.class(0)?.to_vec();
    let mut summary = Vec::new();
    for period in 1..scenario.partition.num_classes() {
        let new_ids: Vec<usize> = scenario.partition.class(period)?.to_vec();

        // re-index the working subset: retained points form the base class,
        // the new period forms the pool class
        let mut working_ids = retained.clone();
        working_ids.extend(new_ids.iter().copied());
        let features = working_ids
            .iter()
            .map(|&id| scenario.train.features(id).to_vec())
            .collect();
        let labels = working_ids
            .iter()
            .map(|&id| scenario.train.label(id))
            .collect();
        let working = Dataset::from_parts(features, labels)?;
        let partition = OrderedPartition::new(vec![
            (0..retained.len()).collect(),
            (retained.len()..working.len()).collect(),
        ])?;

        let values = knn_ads(&working, &partition, &scenario.test, &knn)?;
        let util = KnnUtility::new(
            working.clone(),
            scenario.test.clone(),
            knn.k,
            knn.metric,
            knn.empty_score,
        )?;
        for (name, direction) in [
            ("add_high", Direction::AddHigh),
            ("add_low", Direction::AddLow),
        ] {
            let curve = addition_curve(
                &values,
                &[0],
                1,
                &working,
                &partition,
                &util,
                steps,
                direction,
                0,
            )?;
            io::write_curve_csv(&dir.join(format!("{name}_period{period}.csv")), &curve)?;
        }

        // keep the top fraction of the new points by value, ties to
        // smaller id, and fold them into the retained set
        let mut ranked: Vec<usize> = (retained.len()..working.len()).collect();
        ranked.sort_by(|&a, &b| {
            (-values.values[a], a)
                .partial_cmp(&(-values.values[b], b))
                .unwrap()
        });
        let keep = (retention * new_ids.len() as f64).round() as usize;
        let kept_global: Vec<usize> = ranked
            .iter()
            .take(keep)
            .map(|&local| working_ids[local])
            .collect();
        summary.push(serde_json::json!({
            "period": period,
            "new_points": new_ids.len(),
            "retained": keep,
        }));
        retained.extend(kept_global);
        retained.sort_unstable();
    }
    let text =
        serde_json::to_string_pretty(&summary).map_err(|e| CliError::internal(e.to_string()))?;
    std::fs::write(dir.join("retention_summary.json"), text + "\n")?;
    println!(
        "wrote {}/add_high_period*.csv, add_low_period*.csv, retention_summary.json",
        dir.display()
    );
    Ok(())
}

/// Class-wise allocation of replicated data for each copy count up to the
/// configured one.
fn experiment_allocation(cfg: &Config) -> CliResult<()> {
    let seed: u64 = cfg.get_or("seed", 0)?;
    let mut spec = synthetic_spec(cfg, seed)?;
    if cfg.get("gen.kind").is_none() {
        spec.kind = GeneratorKind::Replicate;
    }
    if spec.kind != GeneratorKind::Replicate {
        return Err(CliError::validation(
            "the allocation preset needs gen.kind=replicate".to_string(),
        ));
    }
    let max_copies = spec.copies;
    let dir = out_dir(cfg)?;

    let mut entries = Vec::new();
    for copies in 1..=max_copies {
        let scenario = generate(&SyntheticSpec {
            copies,
            ..spec.clone()
        })?;
        let knn = knn_config(cfg, &scenario.train)?;
        let values = knn_ads(&scenario.train, &scenario.partition, &scenario.test, &knn)?;
        let summary = allocation_summary(&values, &scenario.partition)?;
        entries.push(serde_json::json!({
            "copies": copies,
            "class_sums": summary.class_sums,
            "shares": summary.shares,
            "total": summary.total,
        }));
    }
    let text =
        serde_json::to_string_pretty(&entries).map_err(|e| CliError::internal(e.to_string()))?;
    std::fs::write(dir.join("allocation.json"), text + "\n")?;
    println!("wrote {}/allocation.json", dir.display());
    Ok(())
}
