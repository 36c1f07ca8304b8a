use std::io::Write;
use std::path::Path;

use crate::{Failure, Format};

pub fn resolve_format(format: Option<Format>, output: Option<&Path>) -> Format {
    format.unwrap_or_else(
        || match output.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        },
    )
}

/// Writes `content` to `path` through a temporary sibling file and a rename, so a failed
/// run never leaves a partial file behind. Without a path the content goes to stdout.
pub fn emit(content: &str, path: Option<&Path>) -> Result<(), Failure> {
    let Some(path) = path else {
        print!("{content}");
        return Ok(());
    };
    let io = |e: std::io::Error| Failure::config(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(content.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::config(format!("serialising output: {e}")))?;
    s.push('\n');
    Ok(s)
}
