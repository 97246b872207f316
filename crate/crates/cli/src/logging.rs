//! Line-oriented `key=value` run log, mirrored to stderr and a file.

use carapace_core::error::Result;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;

pub struct RunLog {
    file: Option<File>,
    quiet: bool,
}

impl RunLog {
    pub fn to_file(path: &Path, quiet: bool) -> Result<RunLog> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(RunLog { file: Some(file), quiet })
    }

    pub fn disabled() -> RunLog {
        RunLog { file: None, quiet: true }
    }

    pub fn event(&mut self, event: &str, fields: &[(&str, String)]) {
        let mut line = format!("event={event}");
        for (k, v) in fields {
            let safe = if v.contains(' ') || v.contains('=') {
                format!("\"{v}\"")
            } else {
                v.clone()
            };
            line.push_str(&format!(" {k}={safe}"));
        }
        if !self.quiet {
            eprintln!("{line}");
        }
        if let Some(f) = &mut self.file {
            let _ = writeln!(f, "{line}");
        }
    }
}
