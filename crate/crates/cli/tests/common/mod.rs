//! Shared helpers for CLI-level tests: corpus/fixture builders and
//! directory comparison.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;

use expool_core::backends::scripted::FixtureTable;
use expool_core::backends::PHASE_DONE_MARKER;
use expool_core::chain::Phase;
use expool_core::propagation::Task;
use expool_core::{Artifact, SourceFile};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expool"))
}

pub fn demo_tasks(n: usize) -> Vec<Task> {
    (0..n)
        .map(|i| Task {
            task_id: format!("t{i:02}"),
            category: if i.is_multiple_of(2) { "games" } else { "tools" }.into(),
            task_text: format!("widget number{i:02}"),
        })
        .collect()
}

pub fn write_corpus(path: &Path, tasks: &[Task]) {
    let mut out = String::new();
    for task in tasks {
        out.push_str(&serde_json::to_string(task).unwrap());
        out.push('\n');
    }
    std::fs::write(path, out).unwrap();
}

fn broken(tag: &str) -> Option<Artifact> {
    Some(Artifact::from_files(vec![SourceFile::new(
        "main.sh",
        format!("if then fi (( {tag}\n"),
    )]))
}

fn good(task_tokens: &str) -> Option<Artifact> {
    let repeated = format!("{task_tokens} ").repeat(6);
    Some(Artifact::from_files(vec![SourceFile::new(
        "main.sh",
        format!("echo {repeated}\n"),
    )]))
}

/// Scripted life of a task: broken draft, a few broken reviews, approval,
/// one repairing test round.
pub fn script_task(table: &mut FixtureTable, task: &Task, reviews: u32) {
    table.insert_round(
        &task.task_id,
        Phase::Coding,
        1,
        format!("draft {}", task.task_id),
        broken(&format!("{} v0", task.task_id)),
    );
    for r in 1..=reviews {
        table.insert_round(
            &task.task_id,
            Phase::Review,
            r,
            format!("improve {} step {r}", task.task_id),
            broken(&format!("{} v{r}", task.task_id)),
        );
    }
    table.insert_round(&task.task_id, Phase::Review, reviews + 1, PHASE_DONE_MARKER, None);
    table.insert_round(
        &task.task_id,
        Phase::Test,
        1,
        format!("repair {}", task.task_id),
        good(&task.task_text),
    );
}

pub fn write_fixtures(path: &Path, tasks: &[Task]) {
    let mut table = FixtureTable::new();
    for (i, task) in tasks.iter().enumerate() {
        script_task(&mut table, task, (i % 3) as u32);
    }
    table.save(path).unwrap();
}

/// All files under a directory, keyed by relative path.
pub fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let entry = entry.unwrap();
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                files.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    files
}
