//! Static SVG views of the figure data files. Every renderer reads only the
//! paired CSV text, so a figure can be regenerated byte for byte.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureKind {
    /// First column is x; one small panel per remaining column.
    Series,
    /// First column labels rows; remaining header cells label columns.
    Heatmap,
    /// `dim,birth,death` rows.
    Persistence,
}

const PALETTE: [&str; 3] = ["#1b6ca8", "#d1495b", "#2e933c"];
const PANEL_W: f64 = 300.0;
const PANEL_H: f64 = 200.0;
const MARGIN: f64 = 40.0;

fn parse_table(csv_text: &str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

fn num(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::Structure(format!("figure data: `{s}` is not a number")))
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, w: f64, h: f64, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\" font-size=\"10\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n<text x=\"{:.2}\" y=\"18\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        w / 2.0,
        escape(title)
    );
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, out: &mut String, label: &str) {
        let _ = writeln!(
            out,
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#444\"/>",
            self.x0, self.y0, self.w, self.h
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{}</text>",
            self.x0 + self.w / 2.0,
            self.y0 - 4.0,
            escape(label)
        );
        for (v, anchor_y) in [(self.yr.0, self.y0 + self.h), (self.yr.1, self.y0 + 8.0)] {
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
                self.x0 - 3.0,
                anchor_y,
                tick(v)
            );
        }
        for (v, anchor) in [(self.xr.0, "start"), (self.xr.1, "end")] {
            let _ = writeln!(
                out,
                "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"{anchor}\">{}</text>",
                self.px(v),
                self.y0 + self.h + 12.0,
                tick(v)
            );
        }
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1000.0 || (v != 0.0 && v.abs() < 0.01) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

fn series(title: &str, csv_text: &str) -> Result<String> {
    let (head, rows) = parse_table(csv_text)?;
    if head.len() < 2 {
        return Err(Error::Structure("series figure needs an x column and at least one y column".into()));
    }
    let xs: Vec<f64> = rows.iter().map(|r| num(&r[0])).collect::<Result<_>>()?;
    let n_panels = head.len() - 1;
    let cols = n_panels.min(3);
    let grid_rows = n_panels.div_ceil(cols);
    let w = cols as f64 * (PANEL_W + MARGIN) + MARGIN;
    let h = grid_rows as f64 * (PANEL_H + MARGIN) + MARGIN + 10.0;
    let mut out = String::new();
    header(&mut out, w, h, title);
    let xr = range(xs.iter().copied());
    for k in 0..n_panels {
        let ys: Vec<f64> = rows.iter().map(|r| num(&r[k + 1])).collect::<Result<_>>()?;
        let frame = Frame {
            x0: MARGIN + (k % cols) as f64 * (PANEL_W + MARGIN),
            y0: MARGIN + 10.0 + (k / cols) as f64 * (PANEL_H + MARGIN),
            w: PANEL_W,
            h: PANEL_H,
            xr,
            yr: range(ys.iter().copied()),
        };
        frame.axes(&mut out, &head[k + 1]);
        let pts: Vec<String> = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| format!("{:.2},{:.2}", frame.px(*x), frame.py(*y)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>",
            PALETTE[0],
            pts.join(" ")
        );
        for p in &pts {
            let (cx, cy) = p.split_once(',').expect("formatted pair");
            let _ = writeln!(out, "<circle cx=\"{cx}\" cy=\"{cy}\" r=\"2\" fill=\"{}\"/>", PALETTE[0]);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn heatmap(title: &str, csv_text: &str) -> Result<String> {
    let (head, rows) = parse_table(csv_text)?;
    let n_cols = head.len().saturating_sub(1);
    let cells: Vec<Vec<Option<f64>>> = rows
        .iter()
        .map(|r| {
            r[1..]
                .iter()
                .map(|s| if s.is_empty() { Ok(None) } else { num(s).map(Some) })
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    let vals = cells.iter().flatten().flatten().copied();
    let (lo, hi) = range(vals);
    let diverging = lo < 0.0;
    let cell = (600.0 / n_cols.max(1) as f64).clamp(4.0, 24.0);
    let left = 110.0;
    let top = 90.0;
    let w = left + n_cols as f64 * cell + 20.0;
    let h = top + rows.len() as f64 * cell + 20.0;
    let mut out = String::new();
    header(&mut out, w.max(240.0), h, title);
    for (j, label) in head[1..].iter().enumerate() {
        let x = left + (j as f64 + 0.5) * cell;
        let _ = writeln!(
            out,
            "<text x=\"{x:.2}\" y=\"{:.2}\" transform=\"rotate(-60 {x:.2} {:.2})\">{}</text>",
            top - 4.0,
            top - 4.0,
            escape(label)
        );
    }
    let scale = if diverging { lo.abs().max(hi.abs()) } else { hi };
    for (i, (row, r)) in cells.iter().zip(&rows).enumerate() {
        let y = top + i as f64 * cell;
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"end\">{}</text>",
            left - 4.0,
            y + cell * 0.75,
            escape(&r[0])
        );
        for (j, v) in row.iter().enumerate() {
            let fill = match v {
                None => "#eeeeee".to_string(),
                Some(v) if diverging => {
                    let t = (v / scale).clamp(-1.0, 1.0);
                    let (r, g, b) = if t >= 0.0 {
                        (255.0 * (1.0 - t) + 209.0 * t, 255.0 * (1.0 - t) + 73.0 * t, 255.0 * (1.0 - t) + 91.0 * t)
                    } else {
                        let t = -t;
                        (255.0 * (1.0 - t) + 27.0 * t, 255.0 * (1.0 - t) + 108.0 * t, 255.0 * (1.0 - t) + 168.0 * t)
                    };
                    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
                }
                Some(v) => {
                    let t = if scale > lo { ((v - lo) / (scale - lo)).clamp(0.0, 1.0) } else { 1.0 };
                    let c = (255.0 * (1.0 - t) + 27.0 * t).round() as u8;
                    let g = (255.0 * (1.0 - t) + 108.0 * t).round() as u8;
                    let b = (255.0 * (1.0 - t) + 168.0 * t).round() as u8;
                    format!("#{c:02x}{g:02x}{b:02x}")
                }
            };
            let _ = writeln!(
                out,
                "<rect x=\"{:.2}\" y=\"{y:.2}\" width=\"{cell:.2}\" height=\"{cell:.2}\" fill=\"{fill}\"/>",
                left + j as f64 * cell
            );
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn persistence(title: &str, csv_text: &str) -> Result<String> {
    let (_, rows) = parse_table(csv_text)?;
    let pts: Vec<(usize, f64, f64)> = rows
        .iter()
        .map(|r| Ok((num(&r[0])? as usize, num(&r[1])?, num(&r[2])?)))
        .collect::<Result<_>>()?;
    let top = pts.iter().map(|p| p.2).fold(0.0, f64::max);
    let top = if top > 0.0 { top * 1.05 } else { 1.0 };
    let side = 320.0;
    let mut out = String::new();
    header(&mut out, side + 2.0 * MARGIN + 60.0, side + 2.0 * MARGIN, title);
    let frame = Frame {
        x0: MARGIN,
        y0: MARGIN,
        w: side,
        h: side,
        xr: (0.0, top),
        yr: (0.0, top),
    };
    frame.axes(&mut out, "birth vs death");
    let _ = writeln!(
        out,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>",
        frame.px(0.0),
        frame.py(0.0),
        frame.px(top),
        frame.py(top)
    );
    for &(d, b, e) in &pts {
        let _ = writeln!(
            out,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\" fill-opacity=\"0.7\"/>",
            frame.px(b),
            frame.py(e),
            PALETTE[d.min(2)]
        );
    }
    for d in 0..3 {
        let y = MARGIN + 12.0 + d as f64 * 14.0;
        let x = MARGIN + side + 10.0;
        let _ = writeln!(
            out,
            "<circle cx=\"{x:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{}\"/><text x=\"{:.2}\" y=\"{y:.2}\">H{d}</text>",
            y - 3.0,
            PALETTE[d],
            x + 6.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn render_figure(kind: FigureKind, title: &str, csv_text: &str) -> Result<String> {
    match kind {
        FigureKind::Series => series(title, csv_text),
        FigureKind::Heatmap => heatmap(title, csv_text),
        FigureKind::Persistence => persistence(title, csv_text),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_each_kind() {
        let s = render_figure(FigureKind::Series, "t", "chapter,a,b\n1,2,3\n2,4,1\n3,5,5\n").unwrap();
        assert_eq!(s.matches("<polyline").count(), 2);
        let h = render_figure(FigureKind::Heatmap, "h", "row,x,y\nr1,0.5,\nr2,-1,1\n").unwrap();
        assert_eq!(h.matches("<rect x=").count(), 4);
        assert!(h.contains("#eeeeee"));
        let p = render_figure(FigureKind::Persistence, "p", "dim,birth,death\n0,0,1\n1,1,2\n").unwrap();
        assert!(p.contains("stroke-dasharray"));
        assert!(render_figure(FigureKind::Series, "x", "a,b\nz,1\n").is_err());
    }
}
