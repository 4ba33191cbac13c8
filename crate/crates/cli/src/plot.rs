//! gnuplot-style data files.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};

/// One named curve.
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Whitespace-separated `x y` rows, one block per series, blocks separated
/// by a blank line. Each block starts with a `# name` comment.
pub fn render(series: &[Series]) -> anyhow::Result<String> {
    if series.is_empty() {
        bail!("no plot data");
    }
    let mut out = String::new();
    for (i, s) in series.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        writeln!(out, "# {}", s.name)?;
        for (x, y) in &s.points {
            writeln!(out, "{x} {y}")?;
        }
    }
    Ok(out)
}

pub fn emit_plotdata(series: &[Series], path: &Path) -> anyhow::Result<()> {
    let text = render(series)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_series_two_points() {
        let s = [Series {
            name: "a".into(),
            points: vec![(1.0, 2.0), (3.0, 4.5)],
        }];
        let text = render(&s).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data, vec!["1 2", "3 4.5"]);
    }

    #[test]
    fn blocks_separated_by_blank_line() {
        let s = ["a", "b"].map(|n| Series {
            name: n.into(),
            points: vec![(0.0, 1.0)],
        });
        assert_eq!(render(&s).unwrap(), "# a\n0 1\n\n# b\n0 1\n");
    }

    #[test]
    fn empty_is_error() {
        assert!(render(&[]).is_err());
    }

    #[test]
    fn unwritable_path() {
        let s = [Series {
            name: "a".into(),
            points: vec![(0.0, 0.0)],
        }];
        assert!(emit_plotdata(&s, Path::new("/nonexistent-dir/x.dat")).is_err());
    }
}
