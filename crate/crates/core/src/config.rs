//! TOML run configuration for the optimisation pipeline.
//!
//! ```toml
//! native_pass = true
//! cache = "cache.json"
//!
//! [optimizer]
//! qps = [27, 39, 49, 59, 63]
//! metric = "ms_ssim"
//!
//! [backend]
//! kind = "synthetic"          # or "process"
//!
//! [settings.native]
//! preset = "2"
//! [settings.proxy]
//! preset = "6"
//! scale = "1920x1080"
//!
//! [[clip]]
//! id = "clip_a"
//! path = "clips/clip_a.y4m"
//! duration_seconds = 5.0
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::backend::{
    Clip, EncodeBackend, EncodeSettings, ProcessBackend, ProcessConfig, SyntheticBackend,
};
use crate::error::{Error, Result};
use crate::optimizer::OptimizationConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackendConfig {
    Synthetic(SyntheticBackend),
    Process(ProcessConfig),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub backend: BackendConfig,
    #[serde(default)]
    pub optimizer: OptimizationConfig,
    #[serde(default)]
    settings: BTreeMap<String, BTreeMap<String, toml::Value>>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    /// Encode baseline and optimised curves with the native settings after
    /// the search.
    #[serde(default)]
    pub native_pass: bool,
    #[serde(default, rename = "clip")]
    pub clips: Vec<Clip>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start].matches('\n').count() as u64 + 1)
                .unwrap_or(0);
            Error::parse(path, line, e.message().to_string())
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(c) = cfg.cache.as_mut() {
            resolve(c);
        }
        if let BackendConfig::Process(p) = &mut cfg.backend {
            resolve(&mut p.workdir);
        }
        for clip in &mut cfg.clips {
            if clip.path.as_os_str().is_empty() {
                clip.path = PathBuf::from(&clip.id);
            }
            resolve(&mut clip.path);
        }
        cfg.optimizer.validate()?;
        Ok(cfg)
    }

    pub fn build_backend(&self) -> Result<Box<dyn EncodeBackend>> {
        Ok(match &self.backend {
            BackendConfig::Synthetic(s) => Box::new(s.clone()),
            BackendConfig::Process(p) => Box::new(ProcessBackend::new(p.clone())?),
        })
    }

    fn profile(&self, name: &str) -> Option<EncodeSettings> {
        self.settings.get(name).map(|params| EncodeSettings {
            name: name.to_string(),
            params: params
                .iter()
                .map(|(k, v)| {
                    let v = match v {
                        toml::Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    (k.clone(), v)
                })
                .collect(),
        })
    }

    pub fn native_settings(&self) -> EncodeSettings {
        self.profile("native")
            .unwrap_or_else(|| EncodeSettings::named("native"))
    }

    pub fn proxy_settings(&self) -> Option<EncodeSettings> {
        self.profile("proxy")
    }

    /// Clips named in `ids`, or all configured clips when `ids` is empty.
    pub fn select_clips(&self, ids: &[String]) -> Result<Vec<Clip>> {
        if ids.is_empty() {
            if self.clips.is_empty() {
                return Err(Error::invalid("no clips configured"));
            }
            return Ok(self.clips.clone());
        }
        ids.iter()
            .map(|id| {
                self.clips
                    .iter()
                    .find(|c| &c.id == id)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("clip `{id}` not in config")))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_synthetic_config() {
        let cfg = RunConfig::from_toml(
            r#"
            native_pass = true
            [optimizer]
            qps = [27, 39, 49, 59, 63]
            [backend]
            kind = "synthetic"
            [backend.clips.b]
            k_star = [1.1, 1.4]
            [settings.proxy]
            preset = 6
            scale = "1920x1080"
            [[clip]]
            id = "a"
            [[clip]]
            id = "b"
            "#,
        )
        .unwrap();
        let BackendConfig::Synthetic(s) = &cfg.backend else {
            panic!("wrong backend")
        };
        assert_eq!(s.model_for("b").k_star, (1.1, 1.4));
        assert_eq!(s.model_for("a").k_star, (1.3, 0.8));
        let proxy = cfg.proxy_settings().unwrap();
        assert_eq!(proxy.params["preset"], "6");
        assert_eq!(cfg.native_settings().name, "native");
        assert_eq!(cfg.select_clips(&[]).unwrap().len(), 2);
        assert!(cfg.select_clips(&["zzz".into()]).is_err());
    }

    #[test]
    fn parses_process_config() {
        let cfg = RunConfig::from_toml(
            r#"
            [backend]
            kind = "process"
            encode = ["aomenc", "--cpu-used={preset}", "-o", "{output}", "{input}"]
            metric = ["vmaf-tool", "{input}", "{output}", "{stats}"]
            pool_size = 2
            "#,
        )
        .unwrap();
        let BackendConfig::Process(p) = &cfg.backend else {
            panic!("wrong backend")
        };
        assert_eq!(p.pool_size, 2);
        assert_eq!(p.encode[0], "aomenc");
    }
}
