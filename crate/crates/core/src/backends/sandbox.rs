//! Compile-and-execute sandbox.
//!
//! Artifacts are materialized into a fresh temporary directory; a configured
//! compile command and run command execute there with a timeout. Exit code 0
//! within the timeout counts as success. The directory is removed afterward.

use std::fs;
use std::path::{Component, Path};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use crate::artifact::Artifact;
use crate::error::{Error, Result};

/// Command templates and timeout for sandbox execution.
///
/// Template placeholders: `{main}` expands to the entry file (the first file
/// whose name starts with "main", else the first file in path order),
/// `{files}` expands in place to every file path, `{dir}` to the sandbox
/// directory.
#[derive(Debug, Clone)]
pub struct SandboxConfig {
    pub compile_cmd: Vec<String>,
    pub run_cmd: Vec<String>,
    pub timeout: Duration,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        Self {
            compile_cmd: vec!["sh".into(), "-n".into(), "{main}".into()],
            run_cmd: vec!["sh".into(), "{main}".into()],
            timeout: Duration::from_secs(30),
        }
    }
}

/// Outcome of a sandbox evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecReport {
    pub compiled: bool,
    pub executed: bool,
    pub log: String,
}

pub struct Sandbox {
    config: SandboxConfig,
}

impl Sandbox {
    pub fn new(config: SandboxConfig) -> Self {
        Self { config }
    }

    pub fn config(&self) -> &SandboxConfig {
        &self.config
    }

    /// Compiles and, if compilation succeeds, launches the artifact.
    pub fn compile_and_run(&self, artifact: &Artifact) -> Result<ExecReport> {
        self.evaluate(artifact, true)
    }

    /// Compile check only, used for information-gain scoring.
    pub fn check_compile(&self, artifact: &Artifact) -> Result<(bool, String)> {
        let report = self.evaluate(artifact, false)?;
        Ok((report.compiled, report.log))
    }

    fn evaluate(&self, artifact: &Artifact, run_stage: bool) -> Result<ExecReport> {
        if self.config.compile_cmd.is_empty() || self.config.run_cmd.is_empty() {
            return Err(Error::Config(
                "sandbox compile/run command templates must be non-empty".into(),
            ));
        }
        if artifact.is_empty() {
            return Ok(ExecReport {
                compiled: false,
                executed: false,
                log: "empty artifact: nothing to compile".into(),
            });
        }
        let dir = tempfile::tempdir()
            .map_err(|e| Error::Config(format!("sandbox setup failed: {e}")))?;

        for file in artifact.files() {
            if let Err(reason) = validate_rel_path(&file.path) {
                return Ok(ExecReport {
                    compiled: false,
                    executed: false,
                    log: format!("refused to materialize {:?}: {reason}", file.path),
                });
            }
            let target = dir.path().join(&file.path);
            if let Some(parent) = target.parent() {
                fs::create_dir_all(parent)
                    .map_err(|e| Error::Config(format!("sandbox setup failed: {e}")))?;
            }
            fs::write(&target, &file.content)
                .map_err(|e| Error::Config(format!("sandbox setup failed: {e}")))?;
        }

        let main = entry_file(artifact);
        let mut log = String::new();

        let compile = self.run_command(&self.config.compile_cmd, dir.path(), artifact, &main)?;
        log.push_str(&format!("[compile] {}\n", compile.summary));
        if !compile.ok {
            return Ok(ExecReport {
                compiled: false,
                executed: false,
                log,
            });
        }
        if !run_stage {
            return Ok(ExecReport {
                compiled: true,
                executed: false,
                log,
            });
        }

        let run = self.run_command(&self.config.run_cmd, dir.path(), artifact, &main)?;
        log.push_str(&format!("[run] {}\n", run.summary));
        Ok(ExecReport {
            compiled: true,
            executed: run.ok,
            log,
        })
    }

    fn run_command(
        &self,
        template: &[String],
        dir: &Path,
        artifact: &Artifact,
        main: &str,
    ) -> Result<CommandOutcome> {
        let argv = expand_template(template, dir, artifact, main);
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| Error::Config("empty sandbox command after expansion".into()))?;

        let mut child = Command::new(program)
            .args(args)
            .current_dir(dir)
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Config(format!("cannot spawn {program:?}: {e}")))?;

        let deadline = Instant::now() + self.config.timeout;
        loop {
            match child.try_wait()? {
                Some(status) => {
                    let mut summary = format!("{} -> {status}", argv.join(" "));
                    if let Some(mut stderr) = child.stderr.take() {
                        use std::io::Read;
                        let mut buf = String::new();
                        let _ = stderr.read_to_string(&mut buf);
                        if !buf.trim().is_empty() {
                            summary.push_str(&format!("; stderr: {}", buf.trim()));
                        }
                    }
                    return Ok(CommandOutcome {
                        ok: status.success(),
                        summary,
                    });
                }
                None => {
                    if Instant::now() >= deadline {
                        let _ = child.kill();
                        let _ = child.wait();
                        return Ok(CommandOutcome {
                            ok: false,
                            summary: format!(
                                "{} -> timed out after {:?}",
                                argv.join(" "),
                                self.config.timeout
                            ),
                        });
                    }
                    std::thread::sleep(Duration::from_millis(10));
                }
            }
        }
    }
}

struct CommandOutcome {
    ok: bool,
    summary: String,
}

fn validate_rel_path(path: &str) -> std::result::Result<(), &'static str> {
    let p = Path::new(path);
    if p.is_absolute() {
        return Err("absolute path");
    }
    for component in p.components() {
        match component {
            Component::Normal(_) => {}
            Component::CurDir => {}
            _ => return Err("path escapes the sandbox"),
        }
    }
    Ok(())
}

fn entry_file(artifact: &Artifact) -> String {
    artifact
        .files()
        .iter()
        .find(|f| {
            Path::new(&f.path)
                .file_name()
                .map(|n| n.to_string_lossy().starts_with("main"))
                .unwrap_or(false)
        })
        .or_else(|| artifact.files().first())
        .map(|f| f.path.clone())
        .unwrap_or_default()
}

fn expand_template(template: &[String], dir: &Path, artifact: &Artifact, main: &str) -> Vec<String> {
    let mut argv = Vec::new();
    for arg in template {
        if arg == "{files}" {
            argv.extend(artifact.files().iter().map(|f| f.path.clone()));
        } else {
            argv.push(
                arg.replace("{main}", main)
                    .replace("{dir}", &dir.display().to_string()),
            );
        }
    }
    argv
}
