//! `convert`: native benchmark layout to the interchange file.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use stagewise::dataset::{load_tabfact, load_wikitq, write_interchange, TabFactSplit, WikiTqSplit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Split {
    /// WikiTQ dev (random-split-1-dev)
    WikitqDev,
    /// WikiTQ pristine test
    WikitqTest,
    /// TabFact small test
    TabfactSmall,
    /// TabFact complex test statements
    TabfactComplex,
}

pub fn cmd_convert(root: &Path, split: Split, out: &Path) -> Result<usize> {
    let samples = match split {
        Split::WikitqDev => load_wikitq(root, WikiTqSplit::DevSplit1)?,
        Split::WikitqTest => load_wikitq(root, WikiTqSplit::Test)?,
        Split::TabfactSmall => load_tabfact(root, TabFactSplit::SmallTest)?,
        Split::TabfactComplex => load_tabfact(root, TabFactSplit::ComplexTest)?,
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(file);
    write_interchange(&mut w, &samples)?;
    w.flush()?;
    Ok(samples.len())
}
