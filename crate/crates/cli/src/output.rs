use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};

pub fn version() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("CHANLIQ_GIT_DESCRIBE"))
}

pub fn open(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// A CSV table preceded by `# key=value` metadata lines.
pub struct Table {
    out: csv::Writer<Box<dyn Write>>,
}

impl Table {
    pub fn new(path: Option<&Path>, command: &str, meta: &[(&str, String)], columns: &[&str]) -> Result<Self> {
        let mut w = open(path)?;
        writeln!(w, "# chanliq {}", version())?;
        writeln!(w, "# command={command}")?;
        for (k, v) in meta {
            writeln!(w, "# {k}={v}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(columns)?;
        Ok(Table { out })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.out.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}
