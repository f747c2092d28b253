use std::fs;
use std::path::Path;
use std::sync::Arc;

use faht::data::rng::shuffle;
use faht::eval::{
    boundary_correlations, compare_report, mcnemar, prequential_run, window_metrics,
    write_snapshots_csv, BoundaryCorrelations, ComparisonReport, McNemarResult, McNemarTable,
    PrequentialResult, WindowMetric,
};
use faht::{
    load, Dataset, DatasetConfig, FahtTree, Group, Instance, LearnerConfig, StreamSchema,
    WindowEnsemble,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::{CommonArgs, CriterionArg, Failure};

type Outcome<T> = Result<T, Failure>;

/// One stream ordering of the dataset.
struct Stream {
    seed: Option<u64>,
    order: Vec<usize>,
}

impl Stream {
    fn tag(&self) -> String {
        self.seed
            .map_or_else(|| "file-order".to_string(), |s| format!("seed{s}"))
    }

    fn instances<'a>(&'a self, data: &'a Dataset) -> impl Iterator<Item = &'a Instance> + 'a {
        self.order.iter().map(move |&i| &data.instances[i])
    }
}

struct Experiment {
    dataset: Dataset,
    schema: Arc<StreamSchema>,
    streams: Vec<Stream>,
}

fn prepare(common: &CommonArgs) -> Outcome<Experiment> {
    let mut config = DatasetConfig::from_file(&common.data)?;
    let config_seed = config.shuffle_seed.take();
    let seeds: Vec<Option<u64>> = match (common.seed, common.seeds.is_empty()) {
        (Some(s), _) => vec![Some(s)],
        (None, false) => common.seeds.iter().copied().map(Some).collect(),
        (None, true) => vec![config_seed],
    };
    let dataset = load(&config)?;
    let streams = seeds
        .into_iter()
        .map(|seed| {
            let mut order: Vec<usize> = (0..dataset.len()).collect();
            if let Some(s) = seed {
                shuffle(&mut order, s);
            }
            Stream { seed, order }
        })
        .collect();
    let schema = Arc::new(dataset.schema.clone());
    fs::create_dir_all(&common.out)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", common.out.display())))?;
    Ok(Experiment {
        dataset,
        schema,
        streams,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Outcome<()> {
    fs::write(path, contents)
        .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Outcome<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Failure::Runtime(e.to_string()))?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_snapshots(path: &Path, result: &PrequentialResult) -> Outcome<()> {
    let mut buf = Vec::new();
    write_snapshots_csv(&mut buf, &result.snapshots)?;
    write_file(path, &buf)
}

fn criterion_name(c: CriterionArg) -> &'static str {
    match c {
        CriterionArg::Ht => "ht",
        CriterionArg::Faht => "faht",
        CriterionArg::Kamiran => "kamiran",
    }
}

#[derive(Serialize)]
struct RunSummary {
    seed: Option<u64>,
    criterion: &'static str,
    instances: usize,
    accuracy: f64,
    discrimination: f64,
    node_count: usize,
    leaf_count: usize,
    depth: usize,
    splits: usize,
}

struct TreeRun {
    result: PrequentialResult,
    tree: FahtTree,
}

fn run_tree(
    exp: &Experiment,
    stream: &Stream,
    config: LearnerConfig,
    every: usize,
) -> faht::Result<TreeRun> {
    let mut tree = FahtTree::new(Arc::clone(&exp.schema), config)?;
    let result = prequential_run(
        &mut tree,
        stream.instances(&exp.dataset),
        &exp.schema,
        every,
    )?;
    Ok(TreeRun { result, tree })
}

fn summarize(stream: &Stream, criterion: CriterionArg, run: &TreeRun) -> RunSummary {
    let landmark = run.result.landmark();
    let stats = run.tree.model_stats();
    RunSummary {
        seed: stream.seed,
        criterion: criterion_name(criterion),
        instances: run.result.records.len(),
        accuracy: landmark.accuracy,
        discrimination: landmark.discrimination,
        node_count: stats.node_count,
        leaf_count: stats.leaf_count,
        depth: stats.depth,
        splits: run.tree.split_history().len(),
    }
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    command: &'static str,
    data: String,
    dataset_discrimination: f64,
    learner: &'a LearnerConfig,
    runs: Vec<RunSummary>,
    mean_accuracy: f64,
    mean_discrimination: f64,
}

pub fn run(common: &CommonArgs, criterion: CriterionArg) -> Outcome<()> {
    let exp = prepare(common)?;
    let config = common.learner.config(criterion);
    config.validate()?;
    let runs: Vec<faht::Result<TreeRun>> = exp
        .streams
        .par_iter()
        .map(|s| run_tree(&exp, s, config.clone(), common.snapshot_every))
        .collect();
    let name = criterion_name(criterion);
    let mut summaries = Vec::new();
    for (stream, run) in exp.streams.iter().zip(runs) {
        let run = run?;
        let tag = stream.tag();
        write_snapshots(
            &common.out.join(format!("{name}-{tag}-snapshots.csv")),
            &run.result,
        )?;
        write_file(
            &common.out.join(format!("{name}-{tag}-tree.json")),
            run.tree.export_json().as_bytes(),
        )?;
        let s = summarize(stream, criterion, &run);
        println!(
            "{name} {tag}: accuracy {:.2}%  discrimination {:.2}%  nodes {}",
            100.0 * s.accuracy,
            100.0 * s.discrimination,
            s.node_count
        );
        summaries.push(s);
    }
    let report = RunReport {
        command: "run",
        data: common.data.display().to_string(),
        dataset_discrimination: exp.dataset.discrimination,
        learner: &config,
        mean_accuracy: mean(summaries.iter().map(|s| s.accuracy)),
        mean_discrimination: mean(summaries.iter().map(|s| s.discrimination)),
        runs: summaries,
    };
    write_json(&common.out.join(format!("{name}-summary.json")), &report)
}

#[derive(Serialize)]
struct NodeComparison {
    n: u64,
    baseline_nodes: usize,
    contender_nodes: usize,
}

#[derive(Serialize)]
struct SeedComparison {
    seed: Option<u64>,
    baseline: RunSummary,
    contender: RunSummary,
    report: ComparisonReport,
    /// Predictions for the deprived group; rows baseline, columns contender.
    deprived_table: McNemarTable,
    mcnemar: Option<McNemarResult>,
    /// `p < 0.001` when the statistic exceeds the df = 1 critical value.
    p_below_001: Option<bool>,
    note: Option<String>,
    baseline_correlations: BoundaryCorrelations,
    contender_correlations: BoundaryCorrelations,
    /// Snapshots at which the contender tree is no larger than the baseline.
    contender_not_larger: usize,
    snapshots: usize,
}

#[derive(Serialize)]
struct CompareReport {
    command: &'static str,
    data: String,
    dataset_discrimination: f64,
    baseline: &'static str,
    contender: &'static str,
    seeds: Vec<SeedComparison>,
    mean_accuracy_change_pct: Option<f64>,
    mean_discrimination_change_pct: Option<f64>,
}

pub fn compare(common: &CommonArgs, criteria: &[CriterionArg]) -> Outcome<()> {
    let [baseline, contender] = criteria else {
        return Err(Failure::Usage(format!(
            "compare needs exactly two --criterion values, got {}",
            criteria.len()
        )));
    };
    let (baseline, contender) = (*baseline, *contender);
    let exp = prepare(common)?;
    let (cfg_a, cfg_b) = (
        common.learner.config(baseline),
        common.learner.config(contender),
    );
    cfg_a.validate()?;
    cfg_b.validate()?;
    let every = common.snapshot_every;
    let runs: Vec<faht::Result<(TreeRun, TreeRun)>> = exp
        .streams
        .par_iter()
        .map(|s| {
            let (a, b) = rayon::join(
                || run_tree(&exp, s, cfg_a.clone(), every),
                || run_tree(&exp, s, cfg_b.clone(), every),
            );
            Ok((a?, b?))
        })
        .collect();
    let (na, nb) = (criterion_name(baseline), criterion_name(contender));
    let mut seeds = Vec::new();
    for (stream, pair) in exp.streams.iter().zip(runs) {
        let (a, b) = pair?;
        let tag = stream.tag();
        write_snapshots(
            &common.out.join(format!("compare-{na}-{tag}-snapshots.csv")),
            &a.result,
        )?;
        write_snapshots(
            &common.out.join(format!("compare-{nb}-{tag}-snapshots.csv")),
            &b.result,
        )?;
        write_file(
            &common.out.join(format!("compare-{na}-{tag}-tree.json")),
            a.tree.export_json().as_bytes(),
        )?;
        write_file(
            &common.out.join(format!("compare-{nb}-{tag}-tree.json")),
            b.tree.export_json().as_bytes(),
        )?;
        let nodes: Vec<NodeComparison> = a
            .result
            .snapshots
            .iter()
            .zip(&b.result.snapshots)
            .map(|(x, y)| NodeComparison {
                n: x.n,
                baseline_nodes: x.node_count,
                contender_nodes: y.node_count,
            })
            .collect();
        let mut csv = String::from("n,baseline_nodes,contender_nodes,contender_not_larger\n");
        for r in &nodes {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                r.n,
                r.baseline_nodes,
                r.contender_nodes,
                r.contender_nodes <= r.baseline_nodes
            ));
        }
        write_file(
            &common.out.join(format!("compare-{tag}-nodes.csv")),
            csv.as_bytes(),
        )?;

        let report = compare_report(&a.result, &b.result)?;
        let table = McNemarTable::from_records(
            &a.result.records,
            &b.result.records,
            Some(Group::Deprived),
            &exp.schema,
        )?;
        let (test, note) = match mcnemar(&table) {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let cmp = SeedComparison {
            seed: stream.seed,
            baseline: summarize(stream, baseline, &a),
            contender: summarize(stream, contender, &b),
            report,
            deprived_table: table,
            p_below_001: test.map(|t| t.significant_at_001()),
            mcnemar: test,
            note,
            baseline_correlations: boundary_correlations(&a.result.records, &exp.schema),
            contender_correlations: boundary_correlations(&b.result.records, &exp.schema),
            contender_not_larger: nodes
                .iter()
                .filter(|r| r.contender_nodes <= r.baseline_nodes)
                .count(),
            snapshots: nodes.len(),
        };
        print_comparison(&tag, na, nb, &cmp);
        seeds.push(cmp);
    }
    let pct = |f: fn(&SeedComparison) -> Option<f64>| -> Option<f64> {
        let v: Option<Vec<f64>> = seeds.iter().map(f).collect();
        v.map(|v| mean(v.into_iter()))
    };
    let report = CompareReport {
        command: "compare",
        data: common.data.display().to_string(),
        dataset_discrimination: exp.dataset.discrimination,
        baseline: na,
        contender: nb,
        mean_accuracy_change_pct: pct(|s| s.report.accuracy_change_pct),
        mean_discrimination_change_pct: pct(|s| s.report.discrimination_change_pct),
        seeds,
    };
    write_json(&common.out.join("compare-summary.json"), &report)
}

fn print_comparison(tag: &str, na: &str, nb: &str, c: &SeedComparison) {
    let r = &c.report;
    let pct = |p: Option<f64>| p.map_or_else(|| "n/a".to_string(), |p| format!("{p:+.2}%"));
    println!("{tag}:");
    println!(
        "  accuracy        {na} {:.2}%  {nb} {:.2}%  change {}",
        100.0 * r.accuracy_a,
        100.0 * r.accuracy_b,
        pct(r.accuracy_change_pct)
    );
    println!(
        "  discrimination  {na} {:.2}%  {nb} {:.2}%  change {}",
        100.0 * r.discrimination_a,
        100.0 * r.discrimination_b,
        pct(r.discrimination_change_pct)
    );
    println!(
        "  nodes           {na} {}  {nb} {}",
        c.baseline.node_count, c.contender.node_count
    );
    match (&c.mcnemar, &c.note) {
        (Some(t), _) => println!(
            "  McNemar (deprived group)  chi2 {:.3}  p {:.3e}{}",
            t.chi_squared,
            t.p_value,
            if t.significant_at_001() {
                "  (p < 0.001)"
            } else {
                ""
            }
        ),
        (None, Some(note)) => println!("  McNemar (deprived group)  undefined: {note}"),
        (None, None) => {}
    }
}

#[derive(Serialize)]
struct EnsembleSummary {
    seed: Option<u64>,
    criterion: &'static str,
    instances: usize,
    accuracy: f64,
    discrimination: f64,
    members: usize,
    windows: Vec<WindowMetric>,
}

#[derive(Serialize)]
struct EnsembleReport {
    command: &'static str,
    data: String,
    window: Option<usize>,
    capacity: usize,
    runs: Vec<EnsembleSummary>,
}

pub fn ensemble(common: &CommonArgs, window: usize, capacity: usize) -> Outcome<()> {
    let exp = prepare(common)?;
    let criteria = [CriterionArg::Ht, CriterionArg::Faht];
    let configs: Vec<LearnerConfig> = criteria.iter().map(|c| common.learner.config(*c)).collect();
    for c in &configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, usize)> = (0..exp.streams.len())
        .flat_map(|s| [(s, 0), (s, 1)])
        .collect();
    let runs: Vec<faht::Result<(PrequentialResult, usize)>> = jobs
        .par_iter()
        .map(|&(s, c)| {
            let mut e = WindowEnsemble::new(
                Arc::clone(&exp.schema),
                configs[c].clone(),
                window,
                capacity,
            )?;
            let r = prequential_run(
                &mut e,
                exp.streams[s].instances(&exp.dataset),
                &exp.schema,
                common.snapshot_every,
            )?;
            Ok((r, e.len()))
        })
        .collect();
    let mut summaries = Vec::new();
    for (&(s, c), run) in jobs.iter().zip(runs) {
        let (result, members) = run?;
        let stream = &exp.streams[s];
        let name = criterion_name(criteria[c]);
        let tag = stream.tag();
        let width = window.min(result.records.len().max(1));
        let windows = window_metrics(&result.records, &exp.schema, width);
        let mut csv = String::from("window,end,n,accuracy,discrimination\n");
        for w in &windows {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                w.window, w.end, w.n, w.accuracy, w.discrimination
            ));
        }
        write_file(
            &common
                .out
                .join(format!("ensemble-{name}-{tag}-windows.csv")),
            csv.as_bytes(),
        )?;
        write_snapshots(
            &common
                .out
                .join(format!("ensemble-{name}-{tag}-snapshots.csv")),
            &result,
        )?;
        let landmark = result.landmark();
        println!(
            "ensemble {name} {tag}: accuracy {:.2}%  discrimination {:.2}%  members {members}  windows {}",
            100.0 * landmark.accuracy,
            100.0 * landmark.discrimination,
            windows.len()
        );
        summaries.push(EnsembleSummary {
            seed: stream.seed,
            criterion: name,
            instances: result.records.len(),
            accuracy: landmark.accuracy,
            discrimination: landmark.discrimination,
            members,
            windows,
        });
    }
    let report = EnsembleReport {
        command: "ensemble",
        data: common.data.display().to_string(),
        window: (window != usize::MAX).then_some(window),
        capacity,
        runs: summaries,
    };
    write_json(&common.out.join("ensemble-summary.json"), &report)
}
