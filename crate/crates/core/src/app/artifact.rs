use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = concat!("tweezer-sim/", env!("CARGO_PKG_VERSION"));

/// Provenance stamped on every artifact. Deliberately free of timestamps and
/// paths so reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub schema_version: u32,
    pub tool: String,
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &str, config_sha256: String, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: TOOL.into(),
            command: command.into(),
            config_sha256,
            seed,
        }
    }

    fn one_line(&self) -> String {
        format!(
            "schema_version={} tool={} command={} config_sha256={} seed={}",
            self.schema_version, self.tool, self.command, self.config_sha256, self.seed
        )
    }
}

#[derive(Debug, Clone, Serialize)]
struct ManifestEntry {
    name: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    meta: &'a Meta,
    files: &'a [ManifestEntry],
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    meta: &'a Meta,
    data: &'a T,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Shortest round-trip decimal form; NaN and infinities as written by Rust.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Output directory of one run. Binary files carry their metadata through
/// the run manifest, which lists every file with its SHA-256.
pub struct OutputDir {
    root: PathBuf,
    meta: Meta,
    entries: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: &Path, meta: Meta) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            meta,
            entries: Vec::new(),
        })
    }

    pub fn meta(&self) -> &Meta {
        &self.meta
    }

    /// Writes to a temporary sibling and renames, so readers never see a
    /// partial file.
    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> io::Result<PathBuf> {
        let path = self.root.join(name);
        let tmp = self.root.join(format!(".{name}.tmp{}", std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        self.entries.retain(|e| e.name != name);
        self.entries.push(ManifestEntry {
            name: name.into(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, data: &T) -> io::Result<PathBuf> {
        let doc = Document { meta: &self.meta, data };
        let mut text = serde_json::to_string_pretty(&doc).map_err(io::Error::other)?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// CSV with the metadata as a leading `#` comment line.
    pub fn write_csv<I>(&mut self, name: &str, header: &[&str], rows: I) -> io::Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let mut text = format!("# {}\n{}\n", self.meta.one_line(), header.join(","));
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }

    /// `svg` must start at the root element; the metadata goes in a comment
    /// ahead of it.
    pub fn write_svg(&mut self, name: &str, svg: &str) -> io::Result<PathBuf> {
        let text = format!(
            "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<!-- {} -->\n{svg}",
            self.meta.one_line()
        );
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `<command>.manifest.json` and returns every path written,
    /// manifest last. Per-command names let img-sim and img-analyze share a
    /// directory.
    pub fn finish(mut self) -> io::Result<Vec<PathBuf>> {
        let entries = std::mem::take(&mut self.entries);
        let manifest = Manifest {
            meta: &self.meta,
            files: &entries,
        };
        let mut text = serde_json::to_string_pretty(&manifest).map_err(io::Error::other)?;
        text.push('\n');
        let name = format!("{}.manifest.json", self.meta.command);
        let path = self.write_bytes(&name, text.as_bytes())?;
        let mut paths: Vec<PathBuf> = entries.iter().map(|e| self.root.join(&e.name)).collect();
        paths.push(path);
        Ok(paths)
    }
}
