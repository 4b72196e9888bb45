//! Output files appear whole or not at all.

use std::io::{BufWriter, Write};
use std::path::Path;

use tempfile::NamedTempFile;

use crate::Failure;

/// Writes through `fill` into a temporary file next to `path`, then
/// renames it into place.
pub fn write_atomically<F>(path: &Path, fill: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> Result<(), Failure>,
{
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush().map_err(|e| Failure::Io(e.to_string()))?;
    }
    tmp.persist(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}
