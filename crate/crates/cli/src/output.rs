use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, Result};

/// Writes `path` through a sibling temporary file and a rename, so readers
/// never observe a partially written file.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(CliError::io(format!("creating {}", dir.display())))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let file = fs::File::create(&tmp).map_err(CliError::io(format!("creating {}", tmp.display())))?;
    let mut w = BufWriter::new(file);
    let filled = fill(&mut w).and_then(|()| w.flush().map_err(CliError::io(format!("writing {}", tmp.display()))));
    if let Err(e) = filled {
        let _ = fs::remove_file(&tmp);
        return Err(e);
    }
    drop(w);
    fs::rename(&tmp, path).map_err(CliError::io(format!("renaming to {}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_atomic(path, |w| {
        w.write_all(text.as_bytes())
            .map_err(CliError::io(format!("writing {}", path.display())))
    })
}

pub fn open(path: &Path) -> Result<std::io::BufReader<fs::File>> {
    fs::File::open(path)
        .map(std::io::BufReader::new)
        .map_err(CliError::io(format!("opening {}", path.display())))
}
