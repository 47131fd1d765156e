//! Artifact emission: CSV tables with provenance columns and minimal
//! static SVG plots. All files are written atomically, a temp file in the
//! target directory followed by a rename, so a crashed run never leaves a
//! half-written table behind. Nothing here embeds a timestamp; identical
//! inputs must produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

pub const VERSION: &str = concat!("v", env!("CARGO_PKG_VERSION"));

/// Identity stamped on every row of every table.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub config_hash: String,
    pub base_seed: u64,
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))
        .context("cannot create temp file")?;
    std::io::Write::write_all(&mut tmp, bytes).context("cannot write temp file")?;
    tmp.persist(path)
        .with_context(|| format!("cannot move into place: {}", path.display()))?;
    Ok(())
}

/// CSV builder: `#` metadata lines, a header row, then data rows that all
/// start with the provenance columns.
pub struct Csv {
    text: String,
    data_columns: usize,
    prefix: String,
}

impl Csv {
    pub fn new(prov: &Provenance, columns: &[&str]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# config_hash={}", prov.config_hash);
        let _ = writeln!(text, "# base_seed={}", prov.base_seed);
        let _ = writeln!(text, "# version={VERSION}");
        let _ = writeln!(
            text,
            "config_hash,base_seed,version,{}",
            columns.join(",")
        );
        Self {
            text,
            data_columns: columns.len(),
            prefix: format!("{},{},{VERSION}", prov.config_hash, prov.base_seed),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        assert_eq!(fields.len(), self.data_columns, "row width mismatch");
        self.text.push_str(&self.prefix);
        for f in fields {
            self.text.push(',');
            self.text.push_str(&quote(f));
        }
        self.text.push('\n');
    }

    pub fn write(self, path: &Path) -> Result<()> {
        write_atomic(path, self.text.as_bytes())
    }
}

/// Quotes a field only when it contains a comma or a quote.
fn quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// Shortest round-trip decimal form; bitwise-equal floats give equal text.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Log-log rate plot: one point per grid entry in already-transformed
/// coordinates, plus the fitted line.
pub fn rate_plot(
    xy: &[(f64, f64)],
    slope: f64,
    intercept: f64,
    x_label: &str,
) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const MARGIN: f64 = 60.0;

    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in xy {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    for v in [intercept + slope * x_lo, intercept + slope * x_hi] {
        y_lo = y_lo.min(v);
        y_hi = y_hi.max(v);
    }
    let x_pad = 0.05 * (x_hi - x_lo).max(1e-12);
    let y_pad = 0.05 * (y_hi - y_lo).max(1e-12);
    x_lo -= x_pad;
    x_hi += x_pad;
    y_lo -= y_pad;
    y_hi += y_pad;

    let sx = |x: f64| MARGIN + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y_lo) / (y_hi - y_lo) * (H - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        t = MARGIN,
        b = H - MARGIN
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" \
         stroke=\"steelblue\" stroke-width=\"1.5\"/>",
        sx(x_lo),
        sy(intercept + slope * x_lo),
        sx(x_hi),
        sy(intercept + slope * x_hi)
    );
    for &(x, y) in xy {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"crimson\"/>",
            sx(x),
            sy(y)
        );
    }
    let _ = writeln!(
        svg,
        "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"13\" \
         text-anchor=\"middle\">{x_label}</text>",
        W / 2.0,
        H - MARGIN / 3.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"13\" \
         transform=\"rotate(-90 {:.0} {:.0})\" text-anchor=\"middle\">ln risk</text>",
        MARGIN / 3.0,
        H / 2.0,
        MARGIN / 3.0,
        H / 2.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"{:.0}\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"13\">\
         slope {slope:.4}</text>",
        MARGIN + 10.0,
        MARGIN + 5.0
    );
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            config_hash: "abcd1234abcd1234".into(),
            base_seed: 7,
        }
    }

    #[test]
    fn csv_layout_has_metadata_then_header_then_rows() {
        let mut csv = Csv::new(&prov(), &["nu", "risk"]);
        csv.row(&["0.01".into(), "0.5".into()]);
        let text = csv.text;
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config_hash=abcd1234abcd1234");
        assert_eq!(lines[1], "# base_seed=7");
        assert!(lines[2].starts_with("# version=v"));
        assert_eq!(
            lines[3],
            "config_hash,base_seed,version,nu,risk"
        );
        assert!(lines[4].starts_with("abcd1234abcd1234,7,v"));
        assert!(lines[4].ends_with(",0.01,0.5"));
    }

    #[test]
    fn fields_with_commas_are_quoted() {
        let mut csv = Csv::new(&prov(), &["notes"]);
        csv.row(&["dims in [1, 4]".into()]);
        assert!(csv.text.contains("\"dims in [1, 4]\""));
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
    }

    #[test]
    fn plot_is_deterministic_and_timestamp_free() {
        let pts = [(0.0, 1.0), (1.0, 2.0), (2.0, 2.5)];
        let a = rate_plot(&pts, 0.75, 1.1, "ln nu");
        let b = rate_plot(&pts, 0.75, 1.1, "ln nu");
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(!a.to_lowercase().contains("date"));
    }
}
