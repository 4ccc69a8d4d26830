use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{EncodeBackend, EncodeRequest, EncodeResult};
use crate::error::{Error, Result};

/// Argument-vector templates for the encode and metric steps.
///
/// Placeholders: `{input}` `{output}` `{stats}` `{qp}` `{k1}` `{k2}` `{clip}`
/// `{metric}` `{settings}`, plus every key of the active settings profile.
/// Commands run without a shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessConfig {
    pub encode: Vec<String>,
    pub metric: Vec<String>,
    #[serde(default = "default_workdir")]
    pub workdir: PathBuf,
    #[serde(default = "default_timeout")]
    pub timeout_seconds: f64,
    #[serde(default = "default_pool")]
    pub pool_size: usize,
    /// Metric id -> key in the stats JSON; defaults to the metric id.
    #[serde(default)]
    pub stats_keys: BTreeMap<String, String>,
    #[serde(default = "default_extension")]
    pub output_extension: String,
}

fn default_workdir() -> PathBuf {
    PathBuf::from("work")
}
fn default_timeout() -> f64 {
    3600.0
}
fn default_pool() -> usize {
    4
}
fn default_extension() -> String {
    "ivf".into()
}

impl ProcessConfig {
    pub fn new(encode: Vec<String>, metric: Vec<String>, workdir: impl Into<PathBuf>) -> Self {
        ProcessConfig {
            encode,
            metric,
            workdir: workdir.into(),
            timeout_seconds: default_timeout(),
            pool_size: default_pool(),
            stats_keys: BTreeMap::new(),
            output_extension: default_extension(),
        }
    }
}

#[derive(Debug)]
pub struct ProcessBackend {
    config: ProcessConfig,
    slots: Mutex<usize>,
    freed: Condvar,
}

struct Slot<'a>(&'a ProcessBackend);

impl Drop for Slot<'_> {
    fn drop(&mut self) {
        *self.0.slots.lock().unwrap() += 1;
        self.0.freed.notify_one();
    }
}

impl ProcessBackend {
    pub fn new(config: ProcessConfig) -> Result<Self> {
        if config.encode.is_empty() || config.metric.is_empty() {
            return Err(Error::invalid(
                "encode and metric templates must be non-empty",
            ));
        }
        if config.pool_size == 0 || config.timeout_seconds.is_nan() || config.timeout_seconds <= 0.0
        {
            return Err(Error::invalid(
                "pool_size and timeout_seconds must be positive",
            ));
        }
        Ok(ProcessBackend {
            slots: Mutex::new(config.pool_size),
            freed: Condvar::new(),
            config,
        })
    }

    pub fn config(&self) -> &ProcessConfig {
        &self.config
    }

    fn acquire(&self) -> Slot<'_> {
        let mut free = self.slots.lock().unwrap();
        while *free == 0 {
            free = self.freed.wait(free).unwrap();
        }
        *free -= 1;
        Slot(self)
    }

    fn stem(&self, req: &EncodeRequest<'_>) -> String {
        let clean = |s: &str| {
            s.chars()
                .map(|c| {
                    if c.is_ascii_alphanumeric() || c == '-' {
                        c
                    } else {
                        '_'
                    }
                })
                .collect::<String>()
        };
        format!(
            "{}_{}_qp{}_k{:.6}_{:.6}",
            clean(&req.clip.id),
            clean(&req.settings.name),
            req.qp,
            req.ks.k1,
            req.ks.k2
        )
    }

    fn run(&self, template: &[String], vars: &BTreeMap<&str, String>, log: &Path) -> Result<()> {
        let argv: Vec<String> = template.iter().map(|a| expand(a, vars)).collect();
        let program = &argv[0];
        let log_file = fs::File::create(log).map_err(|e| Error::io(log, e))?;
        let mut child = Command::new(program)
            .args(&argv[1..])
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(log_file)
            .spawn()
            .map_err(|e| Error::BackendFailure(format!("failed to start `{program}`: {e}")))?;

        let deadline = Instant::now() + Duration::from_secs_f64(self.config.timeout_seconds);
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(Error::BackendFailure(format!(
                        "`{program}` timed out after {} s",
                        self.config.timeout_seconds
                    )));
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(5)),
                Err(e) => {
                    return Err(Error::BackendFailure(format!(
                        "waiting on `{program}`: {e}"
                    )))
                }
            }
        };
        if !status.success() {
            let tail = fs::read_to_string(log).unwrap_or_default();
            let tail: String = tail.lines().rev().take(5).collect::<Vec<_>>().join(" | ");
            return Err(Error::BackendFailure(format!(
                "`{program}` exited with {status}: {tail}"
            )));
        }
        Ok(())
    }
}

fn expand(arg: &str, vars: &BTreeMap<&str, String>) -> String {
    let mut out = arg.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

/// `8 * bytes / seconds / 1000`.
pub fn rate_kbps(bytes: u64, duration_seconds: f64) -> f64 {
    8.0 * bytes as f64 / duration_seconds / 1000.0
}

/// Looks up `key` in a JSON stats object.
pub fn parse_stats(text: &str, key: &str) -> Result<f64> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::BackendFailure(format!("unparseable stats file: {e}")))?;
    value
        .get(key)
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| Error::BackendFailure(format!("stats file has no numeric key `{key}`")))
}

impl EncodeBackend for ProcessBackend {
    fn encode(&self, req: &EncodeRequest<'_>) -> Result<EncodeResult> {
        req.validate()?;
        if req.clip.duration_seconds.is_nan() || req.clip.duration_seconds <= 0.0 {
            return Err(Error::invalid(format!(
                "clip `{}` needs a positive duration",
                req.clip.id
            )));
        }
        let workdir = &self.config.workdir;
        fs::create_dir_all(workdir).map_err(|e| Error::io(workdir, e))?;
        let stem = self.stem(req);
        let output = workdir.join(format!("{stem}.{}", self.config.output_extension));
        let stats = workdir.join(format!("{stem}.{}.json", req.metric_id));
        // Stale files from an earlier run must not masquerade as results.
        let _ = fs::remove_file(&output);
        let _ = fs::remove_file(&stats);

        let mut vars: BTreeMap<&str, String> = req
            .settings
            .params
            .iter()
            .map(|(k, v)| (k.as_str(), v.clone()))
            .collect();
        vars.insert("input", req.clip.path.display().to_string());
        vars.insert("output", output.display().to_string());
        vars.insert("stats", stats.display().to_string());
        vars.insert("qp", req.qp.to_string());
        vars.insert("k1", format!("{:.6}", req.ks.k1));
        vars.insert("k2", format!("{:.6}", req.ks.k2));
        vars.insert("clip", req.clip.id.clone());
        vars.insert("metric", req.metric_id.to_string());
        vars.insert("settings", req.settings.name.clone());

        let _slot = self.acquire();
        self.run(
            &self.config.encode,
            &vars,
            &workdir.join(format!("{stem}.encode.log")),
        )?;
        let size = fs::metadata(&output)
            .map_err(|_| {
                Error::BackendFailure(format!(
                    "encoder produced no output at {}",
                    output.display()
                ))
            })?
            .len();
        self.run(
            &self.config.metric,
            &vars,
            &workdir.join(format!("{stem}.metric.log")),
        )?;
        let text = fs::read_to_string(&stats).map_err(|_| {
            Error::BackendFailure(format!(
                "metric step produced no stats at {}",
                stats.display()
            ))
        })?;
        let key = self
            .config
            .stats_keys
            .get(req.metric_id)
            .map(String::as_str)
            .unwrap_or(req.metric_id);
        let quality = parse_stats(&text, key)?;

        Ok(EncodeResult {
            rate: rate_kbps(size, req.clip.duration_seconds),
            quality,
            artifacts: vec![output, stats],
        })
    }
}
