use std::fs;
use std::io::Write;
use std::path::Path;

pub const MANIFEST_NAME: &str = "manifest.txt";

/// Flat `key = value` record of a run: config echo, seeds, statuses and
/// the output inventory. Written before any output and replaced atomically
/// once the run ends.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunManifest {
    pub command: String,
    pub code_version: String,
    /// `running`, `complete` or `failed`.
    pub state: String,
    pub config: Vec<(String, String)>,
    pub warnings: Vec<String>,
    /// Per-sample stream fingerprints.
    pub seeds: Vec<u64>,
    /// Per-sample termination statuses.
    pub statuses: Vec<String>,
    /// Output files relative to the run directory.
    pub files: Vec<String>,
    pub summary: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str, config: Vec<(String, String)>, warnings: Vec<String>) -> Self {
        Self {
            command: command.into(),
            code_version: format!("sburgers {}", env!("CARGO_PKG_VERSION")),
            state: "running".into(),
            config,
            warnings,
            ..Self::default()
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: &str| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(v);
            s.push('\n');
        };
        line("manifest.command", &self.command);
        line("manifest.code_version", &self.code_version);
        line("manifest.state", &self.state);
        for (k, v) in &self.config {
            line(&format!("config.{k}"), v);
        }
        for (i, w) in self.warnings.iter().enumerate() {
            line(&format!("warning.{i}"), w);
        }
        for (i, seed) in self.seeds.iter().enumerate() {
            line(&format!("seed.{i}"), &seed.to_string());
        }
        for (i, st) in self.statuses.iter().enumerate() {
            line(&format!("status.{i}"), st);
        }
        for (i, f) in self.files.iter().enumerate() {
            line(&format!("file.{i}"), f);
        }
        for (k, v) in &self.summary {
            line(&format!("summary.{k}"), v);
        }
        s
    }

    /// Parses a rendered manifest back.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut m = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let (k, v) = raw
                .split_once(" = ")
                .ok_or_else(|| format!("line {}: not a key = value line", i + 1))?;
            let v = v.to_string();
            if let Some(rest) = k.strip_prefix("config.") {
                m.config.push((rest.into(), v));
            } else if let Some(rest) = k.strip_prefix("summary.") {
                m.summary.push((rest.into(), v));
            } else if k.starts_with("warning.") {
                m.warnings.push(v);
            } else if k.starts_with("seed.") {
                m.seeds.push(v.parse().map_err(|_| format!("line {}: bad seed", i + 1))?);
            } else if k.starts_with("status.") {
                m.statuses.push(v);
            } else if k.starts_with("file.") {
                m.files.push(v);
            } else {
                match k {
                    "manifest.command" => m.command = v,
                    "manifest.code_version" => m.code_version = v,
                    "manifest.state" => m.state = v,
                    _ => return Err(format!("line {}: unknown key `{k}`", i + 1)),
                }
            }
        }
        Ok(m)
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Writes through a temporary file and a rename, so readers never see
    /// a partial manifest.
    pub fn write_atomic(&self, dir: &Path) -> std::io::Result<()> {
        let tmp = dir.join(format!("{MANIFEST_NAME}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(self.render().as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, dir.join(MANIFEST_NAME))
    }
}
