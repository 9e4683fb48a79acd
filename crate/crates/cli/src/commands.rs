//! Subcommand implementations.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use expool_core::acquisition::{extract_shortcuts, split_shortcut};
use expool_core::backends::scripted::{FixtureTable, ScriptedBackend};
use expool_core::backends::{HashEmbedder, Sandbox, SandboxConfig};
use expool_core::checkpoint::{run_id, RunDir};
use expool_core::elimination::{combine, frequency_filter_by, score_shortcuts, ChainScorer};
use expool_core::error::{Error, Result};
use expool_core::pool::{ExperiencePool, RecordKind};
use expool_core::propagation::{load_tasks, partition_tasks, run_with, BatchResult, RunConfig};
use expool_core::report::build_report;

use crate::config::Resolved;

#[derive(Serialize, Deserialize)]
struct ManifestLine {
    task_id: String,
    category: String,
    batch: u32,
}

/// Partitions a corpus and writes the batch manifest.
pub fn cmd_ingest(corpus: &Path, n_batches: u32, seed: u64, out_dir: &Path) -> Result<()> {
    let tasks = load_tasks(corpus)?;
    let partition = partition_tasks(&tasks, n_batches, seed)?;
    for warning in &partition.warnings {
        eprintln!("warning: {warning}");
    }

    fs::create_dir_all(out_dir)?;
    let manifest_path = out_dir.join("manifest.jsonl");
    let mut manifest = String::new();
    for batch in &partition.batches {
        for task in &batch.tasks {
            let line = ManifestLine {
                task_id: task.task_id.clone(),
                category: task.category.clone(),
                batch: batch.ordinal,
            };
            manifest.push_str(&serde_json::to_string(&line).expect("manifest serializes"));
            manifest.push('\n');
        }
    }
    fs::write(&manifest_path, manifest)?;

    println!("ingested {} tasks into {} batches", tasks.len(), n_batches);
    println!("{:>5} {:>6}  per-category", "batch", "tasks");
    for batch in &partition.batches {
        let mut per_category: BTreeMap<&str, usize> = BTreeMap::new();
        for task in &batch.tasks {
            *per_category.entry(task.category.as_str()).or_insert(0) += 1;
        }
        let detail = per_category
            .iter()
            .map(|(c, n)| format!("{c}={n}"))
            .collect::<Vec<_>>()
            .join(" ");
        println!("{:>5} {:>6}  {detail}", batch.ordinal, batch.tasks.len());
    }
    println!("manifest: {}", manifest_path.display());
    Ok(())
}

/// Executes a full pattern run with per-batch checkpoints and a final report.
pub fn cmd_run(resolved: &Resolved, resume: bool) -> Result<()> {
    let corpus_bytes = fs::read(&resolved.corpus)?;
    let tasks = load_tasks(&resolved.corpus)?;
    let partition = partition_tasks(&tasks, resolved.run.n_batches, resolved.run.seed)?;
    for warning in &partition.warnings {
        eprintln!("warning: {warning}");
    }

    let fixtures_bytes = match &resolved.fixtures {
        Some(path) if resolved.backend_mode == "scripted" => fs::read(path)?,
        _ => Vec::new(),
    };
    let id = run_id(&resolved.run, &[&corpus_bytes, &fixtures_bytes]);
    let run_dir = RunDir::open(&resolved.out_dir, &id)?;
    let _lock = run_dir.lock()?;

    let mut config_json = serde_json::to_string_pretty(&resolved.run)
        .expect("run config serializes");
    config_json.push('\n');
    fs::write(run_dir.root().join("run.json"), config_json)?;

    let preloaded = if resume {
        let loaded = run_dir.load_completed(resolved.run.n_batches)?;
        if !loaded.is_empty() {
            eprintln!("resuming after batch {}", loaded.len());
        }
        loaded
    } else {
        Vec::new()
    };

    let backends = resolved.backends()?;
    let mut sink = |result: &BatchResult| {
        run_dir.save_batch(result)?;
        eprintln!(
            "batch {}: {} tasks, {} acquired records",
            result.ordinal,
            result.tasks_total,
            result.acquired.len()
        );
        Ok(())
    };
    let results = run_with(
        &partition.batches,
        &backends,
        &resolved.run,
        preloaded,
        Some(&mut sink),
    )?;

    let report = build_report(&resolved.run, &results);
    run_dir.write_report(&report)?;
    print!("{}", report.to_text_table());
    println!("run directory: {}", run_dir.root().display());
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct FreqLine {
    id: String,
    freq: u64,
}

fn load_freq_snapshot(path: &Path) -> Result<BTreeMap<String, u64>> {
    use std::io::BufRead;
    let file = fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let mut freqs = BTreeMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: FreqLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.display().to_string(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        freqs.insert(parsed.id, parsed.freq);
    }
    Ok(freqs)
}

/// Standalone elimination over a saved pool: gain threshold union frequency
/// fractile, written as a new pool file.
pub fn cmd_eliminate(
    pool_path: &Path,
    epsilon: f64,
    theta: f64,
    freq_snapshot: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let pool = ExperiencePool::load(pool_path)?;
    let before = pool.len();

    let gain_side: Vec<_> = pool
        .records()
        .iter()
        .filter(|r| r.gain >= epsilon)
        .cloned()
        .collect();

    let freq_side = match freq_snapshot {
        Some(path) => {
            let freqs = load_freq_snapshot(path)?;
            let cut = frequency_filter_by(pool.records(), &freqs, theta)?;
            if cut.all_zero {
                eprintln!("warning: frequency snapshot is all-zero; frequency side is empty");
            }
            cut.retained
        }
        None => {
            eprintln!("warning: no frequency snapshot given; gain-only filtering");
            Vec::new()
        }
    };

    let union = combine(&gain_side, &freq_side);
    let mut filtered = ExperiencePool::new(pool.dimension());
    filtered.ingest_preserving_ord(union.iter().map(|r| (**r).clone()).collect())?;
    filtered.save(out)?;

    let after = filtered.len();
    let fraction = if before == 0 {
        0.0
    } else {
        after as f64 / before as f64
    };
    println!("pool: {before} records before elimination, {after} after");
    println!(
        "gain side: {} records (epsilon {epsilon}); frequency side: {} records (theta {theta})",
        gain_side.len(),
        freq_side.len()
    );
    println!("retained {after} / {before} (fraction {fraction:.6})");
    println!("written: {}", out.display());
    Ok(())
}

/// Standalone acquisition: mines a saved chain log into a pool file using
/// the deterministic offline backends. With `score`, information gains are
/// computed against the sh sandbox so the pool is ready for elimination.
pub fn cmd_acquire(
    chains_path: &Path,
    out: &Path,
    batch: u32,
    fixtures: Option<&Path>,
    dimension: usize,
    seed: u64,
    score: bool,
) -> Result<()> {
    let chains = expool_core::chain::load_chains(chains_path)?;
    let table = match fixtures {
        Some(path) => FixtureTable::load(path)?,
        None => FixtureTable::new(),
    };
    let backend = ScriptedBackend::new(table);
    let embedder = HashEmbedder::new(dimension, seed);
    let sandbox = Sandbox::new(SandboxConfig::default());

    let mut pool = ExperiencePool::new(dimension);
    let mut mined = 0usize;
    for chain in &chains {
        let mut shortcuts = extract_shortcuts(chain, &backend, batch)?;
        if score {
            let terminal = chain.terminal().clone();
            let mut scorer = ChainScorer::new(chain.task_text(), &terminal, &embedder, &sandbox);
            score_shortcuts(&mut shortcuts, &mut scorer)?;
        }
        mined += shortcuts.len();
        let mut records = Vec::new();
        for shortcut in &shortcuts {
            let (s2i, i2s) = split_shortcut(shortcut, &embedder)?;
            records.push(s2i);
            records.push(i2s);
        }
        pool.ingest(records)?;
    }
    pool.save(out)?;
    println!(
        "mined {mined} shortcuts from {} chains into {} records{}",
        chains.len(),
        pool.len(),
        if score { " (gains scored)" } else { "" }
    );
    println!("written: {}", out.display());
    Ok(())
}

/// Prints a summary of a saved pool.
pub fn cmd_inspect(pool_path: &Path) -> Result<()> {
    let pool = ExperiencePool::load(pool_path)?;
    let by_kind = |kind: RecordKind| pool.records().iter().filter(|r| r.kind == kind).count();
    let mut by_origin: BTreeMap<u32, usize> = BTreeMap::new();
    for record in pool.records() {
        *by_origin.entry(record.origin_batch).or_insert(0) += 1;
    }
    println!("pool: {} ({} dims)", pool_path.display(), pool.dimension());
    println!(
        "records: {} total, {} S2I, {} I2S",
        pool.len(),
        by_kind(RecordKind::S2I),
        by_kind(RecordKind::I2S)
    );
    let origins = by_origin
        .iter()
        .map(|(batch, count)| format!("{batch}={count}"))
        .collect::<Vec<_>>()
        .join(" ");
    println!("by origin batch: {origins}");
    println!("retrieval events recorded: {}", pool.freq_total());
    match pool.hit_ratio() {
        Ok(ratio) => println!("hit ratio: {ratio:.4}"),
        Err(_) => println!("hit ratio: undefined (empty pool)"),
    }
    let mut hottest: Vec<_> = pool.records().iter().collect();
    hottest.sort_by(|a, b| {
        b.freq()
            .cmp(&a.freq())
            .then(a.created_ord.cmp(&b.created_ord))
            .then(a.id.cmp(&b.id))
    });
    for record in hottest.iter().take(5).filter(|r| r.freq() > 0) {
        println!(
            "  freq {:>4}  gain {:+.3}  batch {}  {}…",
            record.freq(),
            record.gain,
            record.origin_batch,
            &record.id[..12]
        );
    }
    Ok(())
}

/// Rebuilds report files from a run directory's checkpoints.
pub fn cmd_report(run_root: &Path) -> Result<()> {
    let config_raw = fs::read_to_string(run_root.join("run.json")).map_err(|e| {
        Error::InvalidArgument(format!(
            "{} does not look like a run directory (run.json: {e})",
            run_root.display()
        ))
    })?;
    let config: RunConfig = serde_json::from_str(&config_raw)
        .map_err(|e| Error::InvalidArgument(format!("unreadable run.json: {e}")))?;

    let run_dir = RunDir::at(run_root.to_path_buf());
    let mut results = Vec::new();
    for ordinal in run_dir.completed_ordinals(config.n_batches) {
        results.push(run_dir.load_batch(ordinal)?);
    }
    let report = build_report(&config, &results);
    fs::write(run_root.join("report.json"), report.to_json())?;
    fs::write(run_root.join("report.txt"), report.to_text_table())?;
    fs::write(run_root.join("utilization.csv"), report.utilization_csv())?;
    print!("{}", report.to_text_table());
    if !report.missing_batches.is_empty() {
        eprintln!(
            "warning: incomplete run; missing batches {:?}",
            report.missing_batches
        );
    }
    Ok(())
}
