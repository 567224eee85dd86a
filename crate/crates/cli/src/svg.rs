//! Static SVG line plots and heatmaps.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

pub struct Series {
    pub name: String,
    /// NaN y values break the line.
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            name: name.into(),
            points,
        }
    }
}

pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    /// Plot log10 of y; nonpositive values are skipped.
    pub log_y: bool,
    pub series: Vec<Series>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        LEFT + (W - LEFT - RIGHT) / 2.0,
        escape(title)
    );
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn axes(out: &mut String, (x0, x1): (f64, f64), (y0, y1): (f64, f64), xl: &str, yl: &str) {
    let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"black\"/>"
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let x = LEFT + f * pw;
        let y = TOP + ph - f * ph;
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
            TOP + ph + 16.0,
            tick(x0 + f * (x1 - x0))
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            y + 4.0,
            tick(y0 + f * (y1 - y0))
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>",
        LEFT + pw / 2.0,
        H - 12.0,
        escape(xl)
    );
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>",
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        escape(yl)
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 || (1e-2..1e4).contains(&v.abs()) {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

impl LinePlot {
    pub fn render(&self) -> String {
        let tf = |y: f64| if self.log_y { if y > 0.0 { y.log10() } else { f64::NAN } } else { y };
        let xr = range(self.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
        let yr = range(self.series.iter().flat_map(|s| s.points.iter().map(|p| tf(p.1))));
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let sx = |x: f64| LEFT + (x - xr.0) / (xr.1 - xr.0) * pw;
        let sy = |y: f64| TOP + ph - (y - yr.0) / (yr.1 - yr.0) * ph;
        let mut out = String::new();
        header(&mut out, &self.title);
        let yl = if self.log_y { format!("log10 {}", self.y_label) } else { self.y_label.clone() };
        axes(&mut out, xr, yr, &self.x_label, &yl);
        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let mut segment: Vec<String> = Vec::new();
            let flush = |seg: &mut Vec<String>, out: &mut String| {
                if seg.len() > 1 {
                    let _ = writeln!(
                        out,
                        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>",
                        seg.join(" ")
                    );
                }
                seg.clear();
            };
            for &(x, y) in &s.points {
                let y = tf(y);
                if x.is_finite() && y.is_finite() {
                    segment.push(format!("{:.2},{:.2}", sx(x), sy(y)));
                } else {
                    flush(&mut segment, &mut out);
                }
            }
            flush(&mut segment, &mut out);
            let ly = TOP + 14.0 + 18.0 * k as f64;
            let _ = writeln!(
                out,
                "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
                W - RIGHT + 10.0,
                W - RIGHT + 30.0,
                W - RIGHT + 36.0,
                ly + 4.0,
                escape(&s.name)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Row-major `values[i * ny + j]` at (x_i, y_j), drawn with x to the right
/// and y upwards.
pub struct Heatmap {
    pub title: String,
    pub nx: usize,
    pub ny: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub values: Vec<f64>,
}

// sampled from the viridis map
const RAMP: [(f64, f64, f64); 5] = [
    (68.0, 1.0, 84.0),
    (59.0, 82.0, 139.0),
    (33.0, 145.0, 140.0),
    (94.0, 201.0, 98.0),
    (253.0, 231.0, 37.0),
];

fn color(f: f64) -> String {
    let f = f.clamp(0.0, 1.0) * (RAMP.len() - 1) as f64;
    let k = (f.floor() as usize).min(RAMP.len() - 2);
    let t = f - k as f64;
    let (a, b) = (RAMP[k], RAMP[k + 1]);
    let c = |u: f64, v: f64| (u + t * (v - u)).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

impl Heatmap {
    pub fn render(&self) -> String {
        let (lo, hi) = range(self.values.iter().copied());
        let (pw, ph) = (W - LEFT - RIGHT, H - TOP - BOTTOM);
        let (cw, chh) = (pw / self.nx as f64, ph / self.ny as f64);
        let mut out = String::new();
        header(&mut out, &self.title);
        for i in 0..self.nx {
            for j in 0..self.ny {
                let v = self.values[i * self.ny + j];
                let _ = writeln!(
                    out,
                    "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                    LEFT + i as f64 * cw,
                    TOP + ph - (j + 1) as f64 * chh,
                    cw + 0.05,
                    chh + 0.05,
                    color((v - lo) / (hi - lo))
                );
            }
        }
        axes(&mut out, self.x_range, self.y_range, "x", "y");
        // colour bar
        let bx = W - RIGHT + 20.0;
        for k in 0..50 {
            let f = k as f64 / 49.0;
            let _ = writeln!(
                out,
                "<rect x=\"{bx:.1}\" y=\"{:.2}\" width=\"16\" height=\"{:.2}\" fill=\"{}\"/>",
                TOP + ph - (k + 1) as f64 * ph / 50.0,
                ph / 50.0 + 0.05,
                color(f)
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n<text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            bx + 22.0,
            TOP + 10.0,
            tick(hi),
            bx + 22.0,
            TOP + ph,
            tick(lo)
        );
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_breaks_on_nan() {
        let p = LinePlot {
            title: "a < b".into(),
            x_label: "t".into(),
            y_label: "p".into(),
            log_y: false,
            series: vec![Series::new("s", vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN), (3.0, 1.0), (4.0, 0.5)])],
        };
        let s = p.render();
        assert!(s.starts_with("<svg"));
        assert!(s.contains("a &lt; b"));
        assert_eq!(s.matches("<polyline").count(), 2);
        assert_eq!(s, p.render());
    }

    #[test]
    fn heatmap_has_a_cell_per_value() {
        let h = Heatmap {
            title: "h".into(),
            nx: 3,
            ny: 2,
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            values: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0],
        };
        let s = h.render();
        assert!(s.contains("#440154"));
        assert!(s.contains("#fde725"));
        assert_eq!(s.matches("<rect").count(), 1 + 1 + 6 + 50);
    }

    #[test]
    fn ramp_endpoints() {
        assert_eq!(color(0.0), "#440154");
        assert_eq!(color(1.0), "#fde725");
        assert_eq!(color(7.0), "#fde725");
    }
}
