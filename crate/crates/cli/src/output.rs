//! Output directory, written files and the run manifest.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::Config;
use crate::CliError;

pub const OUT_ENV: &str = "ELASTID_OUT";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `--out` beats `ELASTID_OUT`, which beats `output.dir`; the fallback is `elastid-out`.
pub fn resolve_dir(flag: Option<&Path>, cfg: &Config) -> PathBuf {
    if let Some(p) = flag {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|p| !p.is_empty()) {
        return PathBuf::from(p);
    }
    PathBuf::from(cfg.str_or("output.dir", "elastid-out"))
}

pub struct Output {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Output {
    pub fn create(dir: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Output { dir, files: vec![] })
    }

    pub fn write(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, content).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.files.push((name.to_string(), sha256_hex(content.as_bytes())));
        Ok(())
    }

    /// Writes `config.resolved` and `manifest.txt`. No timestamps, so reruns reproduce it byte for byte.
    pub fn finish(mut self, command: &str, cfg: &Config, derivation: &[(String, String)], exit: i32) -> Result<(), CliError> {
        let echo = cfg.echo();
        self.write("config.resolved", &echo)?;
        let mut m = String::new();
        m.push_str(&format!("command = {command}\n"));
        m.push_str(&format!("elastid-cli = {}\n", env!("CARGO_PKG_VERSION")));
        m.push_str(&format!("elastid = {}\n", elastid::VERSION));
        m.push_str(&format!("exit = {exit}\n"));
        m.push_str("\n[config]\n");
        m.push_str(&echo);
        m.push_str("\n[derivation]\n");
        for (label, log) in derivation {
            m.push_str(&format!("{label} sha256 = {}\n", sha256_hex(log.as_bytes())));
        }
        m.push_str("\n[outputs]\n");
        for (name, hash) in &self.files {
            m.push_str(&format!("{name} sha256 = {hash}\n"));
        }
        let path = self.dir.join("manifest.txt");
        std::fs::write(&path, m).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}
