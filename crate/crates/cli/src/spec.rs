//! Classifier specs (`oracle[:<mask>]`, `pmap:<path>`, `model:<file>`) and
//! threshold grids.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum ClassifierSpec {
    /// Ground-truth lookup. The mask path is needed for single-image
    /// commands; dataset commands read each sample's own mask.
    Oracle(Option<PathBuf>),
    /// A PMAP file, or for dataset commands a directory of `<stem>.pmap`.
    Pmap(PathBuf),
    Model(PathBuf),
}

impl FromStr for ClassifierSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, path) = match s.split_once(':') {
            Some((k, p)) => (k, Some(PathBuf::from(p))),
            None => (s, None),
        };
        Ok(match (kind, path) {
            ("oracle", path) => ClassifierSpec::Oracle(path),
            ("pmap", Some(p)) => ClassifierSpec::Pmap(p),
            ("model", Some(p)) => ClassifierSpec::Model(p),
            _ => bail!("classifier must be oracle[:<mask>], pmap:<path> or model:<file>, got {s:?}"),
        })
    }
}

/// `a,b,c` or `start:stop:step` (inclusive).
pub fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [single] => single
            .split(',')
            .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad threshold {v:?}")))
            .collect::<Result<Vec<_>>>()?,
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) = (start.parse()?, stop.parse()?, step.parse()?);
            if !(step > 0.0) || stop < start {
                bail!("grid range needs step > 0 and stop >= start");
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
            // Rounding keeps 0.15 from printing as 0.15000000000000002.
            (0..n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
        }
        _ => bail!("grid must be a comma list or start:stop:step, got {s:?}"),
    };
    if grid.is_empty() {
        bail!("empty threshold grid");
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn specs() {
        assert_eq!("oracle".parse::<ClassifierSpec>().unwrap(), ClassifierSpec::Oracle(None));
        assert_eq!(
            "oracle:gt.pgm".parse::<ClassifierSpec>().unwrap(),
            ClassifierSpec::Oracle(Some("gt.pgm".into()))
        );
        assert_eq!("pmap:a.pmap".parse::<ClassifierSpec>().unwrap(), ClassifierSpec::Pmap("a.pmap".into()));
        assert_eq!("model:m.bin".parse::<ClassifierSpec>().unwrap(), ClassifierSpec::Model("m.bin".into()));
        assert!("pmap".parse::<ClassifierSpec>().is_err());
        assert!("cnn:x".parse::<ClassifierSpec>().is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("0.05:0.95:0.05").unwrap();
        assert_eq!(g.len(), 19);
        assert_eq!(g[2], 0.15);
        assert_eq!(g[18], 0.95);
        assert_eq!(parse_grid("0.3, 0.7").unwrap(), vec![0.3, 0.7]);
        assert_eq!(parse_grid("0.5").unwrap(), vec![0.5]);
        assert!(parse_grid("0.9:0.1:0.1").is_err());
        assert!(parse_grid("a,b").is_err());
    }
}
