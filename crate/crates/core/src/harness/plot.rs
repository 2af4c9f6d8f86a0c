//! SVG line plot of `results.csv`: estimate against N per (kind, lambda) series, with CI bars.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{HarnessError, RESULTS_HEADER};

const W: f64 = 720.0;
const H: f64 = 440.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

struct Point {
    n: f64,
    est: f64,
    lo: f64,
    hi: f64,
}

fn parse(csv: &str) -> Result<BTreeMap<String, Vec<Point>>, HarnessError> {
    let mut lines = csv.lines();
    if lines.next().map(str::trim) != Some(RESULTS_HEADER) {
        return Err(HarnessError::Config("not a results.csv: header mismatch".into()));
    }
    let mut series: BTreeMap<String, Vec<Point>> = BTreeMap::new();
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(HarnessError::Config(format!("bad row {line:?}")));
        }
        let p = |s: &str| s.parse::<f64>().map_err(|_| HarnessError::Config(format!("bad number {s:?}")));
        let pt = Point { n: p(f[1])?, est: p(f[6])?, lo: p(f[7])?, hi: p(f[8])? };
        if pt.n > 0.0 && pt.est.is_finite() {
            series.entry(format!("{} lambda={}", f[0], f[2])).or_default().push(pt);
        }
    }
    Ok(series)
}

/// Renders the rows of a results table; the x axis is logarithmic in N.
pub fn plot_results(csv: &str) -> Result<String, HarnessError> {
    let series = parse(csv)?;
    if series.is_empty() {
        return Err(HarnessError::Config("no finite rows to plot".into()));
    }
    let all = series.values().flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        x0 = x0.min(p.n.log2());
        x1 = x1.max(p.n.log2());
        y0 = y0.min(if p.lo.is_finite() { p.lo } else { p.est });
        y1 = y1.max(if p.hi.is_finite() { p.hi } else { p.est });
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 - y0 < 1e-12 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let sx = |n: f64| PAD + (n.log2() - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{} L{PAD},{} L{},{}" fill="none" stroke="black"/>"#,
        PAD,
        H - PAD,
        W - PAD,
        H - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">N (log scale)</text>"#, W / 2.0, H - 15.0);
    let _ = writeln!(s, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">estimate</text>"#, H / 2.0, H / 2.0);
    for (label, y) in [(y0, y0), (y1, y1), ((y0 + y1) / 2.0, (y0 + y1) / 2.0)] {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{:.3}</text>"#, PAD - 4.0, sy(y) + 4.0, label);
    }
    let mut ticks: Vec<f64> = series.values().flatten().map(|p| p.n).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    for n in ticks {
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{n}</text>"#, sx(n), H - PAD + 14.0);
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let c = COLORS[i % COLORS.len()];
        let mut pts: Vec<&Point> = pts.iter().collect();
        pts.sort_by(|a, b| a.n.total_cmp(&b.n));
        let path: Vec<String> = pts.iter().map(|p| format!("{:.2},{:.2}", sx(p.n), sy(p.est))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, path.join(" "));
        for p in &pts {
            if p.lo.is_finite() && p.hi.is_finite() {
                let _ = writeln!(s, r#"<line x1="{0:.2}" x2="{0:.2}" y1="{1:.2}" y2="{2:.2}" stroke="{c}"/>"#, sx(p.n), sy(p.lo), sy(p.hi));
            }
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#, sx(p.n), sy(p.est));
        }
        let ly = PAD + 14.0 * i as f64;
        let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{c}">{}</text>"#, W - PAD - 200.0, xml_escape(name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn xml_escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_series() {
        let csv = format!("{RESULTS_HEADER}\ncrossing,16,0.5,0.5,4,10,0.2,0.1,0.4,\ncrossing,32,0.5,0.5,4,10,0.1,0.0,0.3,\nchemdist/two-sided,32,inf,0.5,4,10,31,31,31,\n");
        let svg = plot_results(&csv).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("crossing lambda=0.5"));
        assert!(plot_results("a,b\n1,2\n").is_err());
    }
}
