use std::io::Write;
use std::path::PathBuf;

use crate::error::CliError;
use crate::scenario::ScenarioSpec;

/// Directory for output files when `--out` is not given.
pub const OUT_DIR_ENV: &str = "CAPA_OUT_DIR";

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text with `#` comment lines ahead of the column header.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(command: &str, spec: &ScenarioSpec) -> Self {
        let mut csv = Csv {
            text: format!("# capa {command} {}\n", env!("CARGO_PKG_VERSION")),
        };
        for (k, v) in spec.echo() {
            csv.comment(&k, &v);
        }
        csv
    }

    pub fn comment(&mut self, key: &str, value: &str) {
        self.text.push_str(&format!("# {key}={value}\n"));
    }

    pub fn header(&mut self, cols: &[&str]) {
        self.text.push_str(&cols.join(","));
        self.text.push('\n');
    }

    pub fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Where output goes: `--out`, else `$CAPA_OUT_DIR/<default_name>`, else stdout.
pub fn destination(spec: &ScenarioSpec, default_name: &str) -> Option<PathBuf> {
    spec.out.clone().or_else(|| {
        std::env::var_os(OUT_DIR_ENV)
            .filter(|d| !d.is_empty())
            .map(|d| PathBuf::from(d).join(default_name))
    })
}

pub fn emit(spec: &ScenarioSpec, default_name: &str, text: &str) -> Result<(), CliError> {
    match destination(spec, default_name) {
        Some(path) => write_atomic(&path, text),
        None => to_stdout(text),
    }
}

/// A closed pipe (`capa eigen | head`) is not an error.
pub fn to_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Temp file in the target directory, then rename.
pub fn write_atomic(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error))?;
    Ok(())
}
