//! SVG rendering of Birth-Death diagrams, surprise sweep curves and MAR-over-time
//! plots, plus the raw data behind each diagram.
//!
//! Output is a pure function of the inputs: no timestamps, random ids or hash
//! ordering leak into the documents, so identical inputs give identical bytes.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ctdg::Timestamp;
use crate::error::{Error, Result};
use crate::metrics::MarSeries;
use crate::partition::{categorize, LifetimeTable, SweepPoint, TemporalCategory};
use crate::sampling::NegativeStrategy;
use crate::scorers::Role;

const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 56.0;
const MARGIN_BOTTOM: f64 = 60.0;
const LEGEND_WIDTH: f64 = 170.0;

/// Fill colors for Historical, Overlap and Inductive keys, in that order.
pub const DEFAULT_CATEGORY_COLORS: [&str; 3] = ["#1f77b4", "#ff7f0e", "#2ca02c"];

#[derive(Clone, Debug)]
pub struct BdOptions {
    /// Size of one panel's plotting area.
    pub panel_width: f64,
    pub panel_height: f64,
    pub point_radius: f64,
    pub opacity: f64,
    /// Above this many keys, points are downsampled (the CSV always has all keys).
    pub max_points: usize,
    pub seed: u64,
    pub colors: [String; 3],
    pub title: Option<String>,
}

impl Default for BdOptions {
    fn default() -> Self {
        BdOptions {
            panel_width: 420.0,
            panel_height: 420.0,
            point_radius: 2.0,
            opacity: 0.5,
            max_points: 100_000,
            seed: 0,
            colors: DEFAULT_CATEGORY_COLORS.map(String::from),
            title: None,
        }
    }
}

/// One facet of a Birth-Death diagram.
#[derive(Clone, Copy, Debug)]
pub struct BdPanel<'a> {
    pub title: &'a str,
    pub table: &'a LifetimeTable,
}

#[derive(Clone, Debug)]
pub struct BdOutput {
    pub svg: String,
    /// `key,birth,death,category`, one row per key.
    pub csv: String,
    /// Points drawn in the SVG (after downsampling).
    pub plotted: usize,
}

/// Scatter of every key at (death, birth) with cutoff guides.
pub fn bd_diagram(table: &LifetimeTable, t_split: Timestamp, opts: &BdOptions) -> Result<BdOutput> {
    let title = table.kind.to_string();
    bd_diagram_facets(&[BdPanel { title: &title, table }], t_split, opts)
}

/// Side-by-side panels sharing time axes, e.g. source and destination roles of
/// a bipartite graph. CSV keys are prefixed with the panel title when there is
/// more than one panel.
pub fn bd_diagram_facets(panels: &[BdPanel<'_>], t_split: Timestamp, opts: &BdOptions) -> Result<BdOutput> {
    if panels.is_empty() || panels.iter().all(|p| p.table.is_empty()) {
        return Err(Error::InvalidArgument("no lifetimes to plot".into()));
    }
    let mut lo = t_split.get();
    let mut hi = t_split.get();
    for p in panels {
        for (_, l) in &p.table.entries {
            lo = lo.min(l.birth.get());
            hi = hi.max(l.death.get());
        }
    }
    let scale = Scale::new(lo, hi);

    let total_width = MARGIN_LEFT + panels.len() as f64 * (opts.panel_width + MARGIN_LEFT) - MARGIN_LEFT
        + MARGIN_RIGHT
        + LEGEND_WIDTH;
    let total_height = MARGIN_TOP + opts.panel_height + MARGIN_BOTTOM;
    let mut svg = Svg::new(total_width, total_height);
    if let Some(title) = &opts.title {
        svg.text(total_width / 2.0, 20.0, "middle", 15.0, title);
    }

    let mut csv = String::from("key,birth,death,category\n");
    let mut plotted = 0;
    let mut counts = [0usize; 3];
    let prefix = panels.len() > 1;

    for (pi, panel) in panels.iter().enumerate() {
        let x0 = MARGIN_LEFT + pi as f64 * (opts.panel_width + MARGIN_LEFT);
        let frame = Frame {
            x0,
            y0: MARGIN_TOP,
            w: opts.panel_width,
            h: opts.panel_height,
        };
        let mut by_cat: [Vec<(f64, f64)>; 3] = Default::default();
        for (key, l) in &panel.table.entries {
            let cat = categorize(l, t_split);
            by_cat[cat.index()].push((l.death.get(), l.birth.get()));
            if prefix {
                let _ = writeln!(csv, "{}:{key},{},{},{cat}", panel.title, l.birth, l.death);
            } else {
                let _ = writeln!(csv, "{key},{},{},{cat}", l.birth, l.death);
            }
        }
        for (c, pts) in by_cat.iter().enumerate() {
            counts[c] += pts.len();
        }
        let keep = downsample_quota(&by_cat, opts.max_points);

        svg.open(&format!(
            "g class=\"panel\" data-title=\"{}\"",
            escape(panel.title)
        ));
        svg.text(
            frame.x0 + frame.w / 2.0,
            MARGIN_TOP - 8.0,
            "middle",
            13.0,
            panel.title,
        );
        frame.axes(&mut svg, &scale, &scale, "Death time", "Birth time");
        // diagonal birth = death
        svg.line(
            frame.x(&scale, scale.lo),
            frame.y(&scale, scale.lo),
            frame.x(&scale, scale.hi),
            frame.y(&scale, scale.hi),
            "diagonal",
            "#999999",
            "4 3",
        );
        let gx = frame.x(&scale, t_split.get());
        let gy = frame.y(&scale, t_split.get());
        svg.line(gx, frame.y0, gx, frame.y0 + frame.h, "split-v", "#555555", "6 4");
        svg.line(frame.x0, gy, frame.x0 + frame.w, gy, "split-h", "#555555", "6 4");

        for cat in TemporalCategory::ALL {
            let pts = &by_cat[cat.index()];
            let chosen = reservoir(
                pts.len(),
                keep[cat.index()],
                opts.seed ^ (cat.index() as u64 + 1) ^ ((pi as u64) << 8),
            );
            svg.open(&format!(
                "g class=\"{}\" fill=\"{}\" fill-opacity=\"{}\"",
                cat.as_str(),
                escape(&opts.colors[cat.index()]),
                num(opts.opacity)
            ));
            for i in chosen {
                let (d, b) = pts[i];
                let _ = writeln!(
                    svg.body,
                    "<circle cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
                    num(frame.x(&scale, d)),
                    num(frame.y(&scale, b)),
                    num(opts.point_radius)
                );
                plotted += 1;
            }
            svg.close("g");
        }
        svg.close("g");
    }

    let lx = total_width - LEGEND_WIDTH + 10.0;
    svg.open("g class=\"legend\"");
    for cat in TemporalCategory::ALL {
        let y = MARGIN_TOP + 20.0 + cat.index() as f64 * 22.0;
        let _ = writeln!(
            svg.body,
            "<circle cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"{}\"/>",
            num(lx),
            num(y - 4.0),
            escape(&opts.colors[cat.index()])
        );
        let label = format!("{} ({})", capitalize(cat.as_str()), counts[cat.index()]);
        svg.text(lx + 12.0, y, "start", 12.0, &label);
    }
    let _ = writeln!(
        svg.body,
        "<text x=\"{}\" y=\"{}\" font-size=\"11\" class=\"split-label\">t_split = {}</text>",
        num(lx),
        num(MARGIN_TOP + 20.0 + 3.0 * 22.0),
        t_split
    );
    svg.close("g");

    Ok(BdOutput {
        svg: svg.finish(),
        csv,
        plotted,
    })
}

/// Per-category point quotas proportional to category sizes (largest remainder).
fn downsample_quota(by_cat: &[Vec<(f64, f64)>; 3], max_points: usize) -> [usize; 3] {
    let sizes = [by_cat[0].len(), by_cat[1].len(), by_cat[2].len()];
    let total: usize = sizes.iter().sum();
    if total <= max_points {
        return sizes;
    }
    let mut quota = [0usize; 3];
    let mut rema = [(0u128, 0usize); 3];
    for c in 0..3 {
        let exact = sizes[c] as u128 * max_points as u128;
        quota[c] = (exact / total as u128) as usize;
        rema[c] = (exact % total as u128, c);
    }
    let mut left = max_points - quota.iter().sum::<usize>();
    rema.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, c) in &rema {
        if left == 0 {
            break;
        }
        if quota[c] < sizes[c] {
            quota[c] += 1;
            left -= 1;
        }
    }
    quota
}

/// Sorted indices of a seeded uniform sample of `k` out of `n` (Algorithm R).
fn reservoir(n: usize, k: usize, seed: u64) -> Vec<usize> {
    if k >= n {
        return (0..n).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<usize> = (0..k).collect();
    for i in k..n {
        let j = rng.gen_range(0..=i);
        if j < k {
            chosen[j] = i;
        }
    }
    chosen.sort_unstable();
    chosen
}

/// One dataset's sweep for [`surprise_curve`].
#[derive(Clone, Debug)]
pub struct SurpriseCurve {
    pub label: String,
    pub points: Vec<SweepPoint>,
}

#[derive(Clone, Debug)]
pub struct CurveOptions {
    pub width: f64,
    pub height: f64,
    /// Sweep point drawn with a `*` marker.
    pub marked_ratio: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        CurveOptions {
            width: 480.0,
            height: 420.0,
            marked_ratio: 0.15,
        }
    }
}

const SERIES_COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Node surprise (x) against edge surprise (y), one path per dataset, vertices
/// in sweep order.
pub fn surprise_curve(curves: &[SurpriseCurve], opts: &CurveOptions) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::InvalidArgument("no sweep to plot".into()));
    }
    let mut paths = Vec::new();
    for c in curves {
        let pts: Vec<(f64, f64, f64)> = c
            .points
            .iter()
            .filter_map(|p| Some((p.node_surprise?, p.edge_surprise?, p.ratio)))
            .collect();
        if pts.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "sweep `{}` needs at least two defined points",
                c.label
            )));
        }
        paths.push(pts);
    }
    let scale = Scale::new(0.0, 1.0);
    let frame = Frame {
        x0: MARGIN_LEFT,
        y0: MARGIN_TOP,
        w: opts.width,
        h: opts.height,
    };
    let total_width = MARGIN_LEFT + opts.width + MARGIN_RIGHT + LEGEND_WIDTH;
    let mut svg = Svg::new(total_width, MARGIN_TOP + opts.height + MARGIN_BOTTOM);
    frame.axes(
        &mut svg,
        &scale,
        &scale,
        "Node surprise index",
        "Edge surprise index",
    );

    for (ci, (curve, pts)) in curves.iter().zip(&paths).enumerate() {
        let color = SERIES_COLORS[ci % SERIES_COLORS.len()];
        svg.open(&format!(
            "g class=\"curve\" data-label=\"{}\" stroke=\"{color}\" fill=\"{color}\"",
            escape(&curve.label)
        ));
        let coords: Vec<String> = pts
            .iter()
            .map(|&(x, y, _)| format!("{},{}", num(frame.x(&scale, x)), num(frame.y(&scale, y))))
            .collect();
        let _ = writeln!(
            svg.body,
            "<polyline points=\"{}\" fill=\"none\" stroke-width=\"1.5\"/>",
            coords.join(" ")
        );
        for &(x, y, ratio) in pts {
            let (px, py) = (frame.x(&scale, x), frame.y(&scale, y));
            let _ = writeln!(
                svg.body,
                "<circle class=\"vertex\" cx=\"{}\" cy=\"{}\" r=\"3\"><title>ratio {ratio}: ({x}, {y})</title></circle>",
                num(px),
                num(py)
            );
            if (ratio - opts.marked_ratio).abs() < 1e-9 {
                let _ = writeln!(
                    svg.body,
                    "<text class=\"marked\" x=\"{}\" y=\"{}\" font-size=\"18\" stroke=\"none\" text-anchor=\"middle\">*</text>",
                    num(px),
                    num(py - 5.0)
                );
            }
        }
        svg.close("g");
        let ly = MARGIN_TOP + 20.0 + ci as f64 * 20.0;
        let lx = MARGIN_LEFT + opts.width + MARGIN_RIGHT + 10.0;
        svg.line(lx, ly - 4.0, lx + 18.0, ly - 4.0, "legend-swatch", color, "");
        svg.text(lx + 24.0, ly, "start", 12.0, &curve.label);
    }
    Ok(svg.finish())
}

#[derive(Clone, Debug)]
pub struct MarPlotOptions {
    pub width: f64,
    pub height: f64,
    pub title: Option<String>,
}

impl Default for MarPlotOptions {
    fn default() -> Self {
        MarPlotOptions {
            width: 640.0,
            height: 320.0,
            title: None,
        }
    }
}

pub fn role_color(role: Role) -> &'static str {
    match role {
        Role::Positive => "#000000",
        Role::Negative(s) => match s {
            NegativeStrategy::HE | NegativeStrategy::HS => "#1f77b4",
            NegativeStrategy::OE | NegativeStrategy::OS => "#ff7f0e",
            NegativeStrategy::IE | NegativeStrategy::IS => "#2ca02c",
            NegativeStrategy::HD => "#9467bd",
            NegativeStrategy::OD => "#8c564b",
            NegativeStrategy::ID => "#d62728",
            NegativeStrategy::RND => "#7f7f7f",
        },
    }
}

/// One line per role over bin centres. Missing bins break the line; nothing is
/// interpolated.
pub fn mar_plot(series: &MarSeries, t_split: Timestamp, opts: &MarPlotOptions) -> Result<String> {
    if series.is_all_missing() {
        return Err(Error::InvalidArgument("MAR series has no data".into()));
    }
    let bins = series.bins();
    let (lo, hi) = (series.edges[0], series.edges[bins]);
    let xscale = Scale::new(lo, hi);
    let ymax = series
        .mar
        .iter()
        .flatten()
        .flatten()
        .fold(2.0f64, |m, &v| m.max(v))
        .ceil();
    let yscale = Scale::new(1.0, ymax);
    let frame = Frame {
        x0: MARGIN_LEFT,
        y0: MARGIN_TOP,
        w: opts.width,
        h: opts.height,
    };
    let total_width = MARGIN_LEFT + opts.width + MARGIN_RIGHT + LEGEND_WIDTH;
    let mut svg = Svg::new(total_width, MARGIN_TOP + opts.height + MARGIN_BOTTOM);
    if let Some(title) = &opts.title {
        svg.text(MARGIN_LEFT + opts.width / 2.0, 20.0, "middle", 15.0, title);
    }
    frame.axes(&mut svg, &xscale, &yscale, "Time", "Mean average rank");
    let t = t_split.get();
    if t >= lo && t <= hi {
        let gx = frame.x(&xscale, t);
        svg.line(gx, frame.y0, gx, frame.y0 + frame.h, "split-v", "#555555", "6 4");
    }

    let center = |b: usize| (series.edges[b] + series.edges[b + 1]) / 2.0;
    for (ri, role) in series.roles.iter().enumerate() {
        let color = role_color(*role);
        svg.open(&format!(
            "g class=\"role\" data-role=\"{role}\" stroke=\"{color}\" fill=\"{color}\""
        ));
        let values = &series.mar[ri];
        let mut b = 0;
        while b < bins {
            if values[b].is_none() {
                b += 1;
                continue;
            }
            let start = b;
            while b < bins && values[b].is_some() {
                b += 1;
            }
            if b - start >= 2 {
                let coords: Vec<String> = (start..b)
                    .map(|i| {
                        format!(
                            "{},{}",
                            num(frame.x(&xscale, center(i))),
                            num(frame.y(&yscale, values[i].unwrap_or_default()))
                        )
                    })
                    .collect();
                let _ = writeln!(
                    svg.body,
                    "<polyline class=\"segment\" points=\"{}\" fill=\"none\" stroke-width=\"1.5\"/>",
                    coords.join(" ")
                );
            }
        }
        for (i, v) in values.iter().enumerate() {
            if let Some(v) = v {
                let _ = writeln!(
                    svg.body,
                    "<circle class=\"marker\" cx=\"{}\" cy=\"{}\" r=\"2.5\"><title>{role}: {v}</title></circle>",
                    num(frame.x(&xscale, center(i))),
                    num(frame.y(&yscale, *v))
                );
            }
        }
        svg.close("g");
        let ly = MARGIN_TOP + 20.0 + ri as f64 * 20.0;
        let lx = MARGIN_LEFT + opts.width + MARGIN_RIGHT + 10.0;
        svg.line(lx, ly - 4.0, lx + 18.0, ly - 4.0, "legend-swatch", color, "");
        let label = match role {
            Role::Positive => "Pos".to_string(),
            Role::Negative(s) => s.to_string(),
        };
        svg.text(lx + 24.0, ly, "start", 12.0, &label);
    }
    Ok(svg.finish())
}

/// Linear map from data range to `[0, 1]`.
struct Scale {
    lo: f64,
    hi: f64,
}

impl Scale {
    fn new(lo: f64, hi: f64) -> Self {
        if hi > lo {
            Scale { lo, hi }
        } else {
            Scale {
                lo: lo - 0.5,
                hi: lo + 0.5,
            }
        }
    }

    fn unit(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    /// Round tick positions (1, 2 or 5 times a power of ten) inside the range.
    fn ticks(&self, target: usize) -> (Vec<f64>, f64) {
        let raw = (self.hi - self.lo) / target as f64;
        let mag = 10f64.powf(raw.log10().floor());
        let step = match raw / mag {
            r if r <= 1.0 => mag,
            r if r <= 2.0 => 2.0 * mag,
            r if r <= 5.0 => 5.0 * mag,
            _ => 10.0 * mag,
        };
        let first = (self.lo / step - 1e-9).ceil() as i64;
        let last = (self.hi / step + 1e-9).floor() as i64;
        ((first..=last).map(|k| k as f64 * step).collect(), step)
    }
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn x(&self, s: &Scale, v: f64) -> f64 {
        self.x0 + s.unit(v) * self.w
    }

    fn y(&self, s: &Scale, v: f64) -> f64 {
        self.y0 + (1.0 - s.unit(v)) * self.h
    }

    fn axes(&self, svg: &mut Svg, xs: &Scale, ys: &Scale, xlabel: &str, ylabel: &str) {
        svg.open("g class=\"axes\" stroke=\"#000000\" font-size=\"10\"");
        let _ = writeln!(
            svg.body,
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\"/>",
            num(self.x0),
            num(self.y0),
            num(self.w),
            num(self.h)
        );
        let bottom = self.y0 + self.h;
        let (xt, xstep) = xs.ticks(8);
        for v in xt {
            let x = self.x(xs, v);
            svg.line(x, bottom, x, bottom + 5.0, "tick", "#000000", "");
            let _ = writeln!(
                svg.body,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" stroke=\"none\">{}</text>",
                num(x),
                num(bottom + 17.0),
                tick_label(v, xstep)
            );
        }
        let (yt, ystep) = ys.ticks(8);
        for v in yt {
            let y = self.y(ys, v);
            svg.line(self.x0 - 5.0, y, self.x0, y, "tick", "#000000", "");
            let _ = writeln!(
                svg.body,
                "<text x=\"{}\" y=\"{}\" text-anchor=\"end\" stroke=\"none\">{}</text>",
                num(self.x0 - 8.0),
                num(y + 3.0),
                tick_label(v, ystep)
            );
        }
        svg.close("g");
        svg.text(self.x0 + self.w / 2.0, bottom + 40.0, "middle", 12.0, xlabel);
        let (cx, cy) = (self.x0 - 50.0, self.y0 + self.h / 2.0);
        let _ = writeln!(
            svg.body,
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">{}</text>",
            num(cx),
            num(cy),
            num(cx),
            num(cy),
            escape(ylabel)
        );
    }
}

struct Svg {
    body: String,
    stack: usize,
}

impl Svg {
    fn new(width: f64, height: f64) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\" font-family=\"sans-serif\">",
            w = num(width),
            h = num(height)
        );
        let _ = writeln!(
            body,
            "<rect x=\"0\" y=\"0\" width=\"{}\" height=\"{}\" fill=\"#ffffff\"/>",
            num(width),
            num(height)
        );
        Svg { body, stack: 0 }
    }

    fn open(&mut self, tag_with_attrs: &str) {
        let _ = writeln!(self.body, "<{tag_with_attrs}>");
        self.stack += 1;
    }

    fn close(&mut self, tag: &str) {
        let _ = writeln!(self.body, "</{tag}>");
        self.stack -= 1;
    }

    #[allow(clippy::too_many_arguments)]
    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, class: &str, stroke: &str, dash: &str) {
        let dash = if dash.is_empty() {
            String::new()
        } else {
            format!(" stroke-dasharray=\"{dash}\"")
        };
        let _ = writeln!(
            self.body,
            "<line class=\"{class}\" x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{stroke}\"{dash}/>",
            num(x1),
            num(y1),
            num(x2),
            num(y2)
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: f64, content: &str) {
        let _ = writeln!(
            self.body,
            "<text x=\"{}\" y=\"{}\" font-size=\"{}\" text-anchor=\"{anchor}\">{}</text>",
            num(x),
            num(y),
            num(size),
            escape(content)
        );
    }

    fn finish(mut self) -> String {
        debug_assert_eq!(self.stack, 0, "unbalanced svg groups");
        self.body.push_str("</svg>\n");
        self.body
    }
}

/// Fixed two-decimal coordinates.
fn num(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Enough digits to tell ticks `step` apart; scientific notation for large values.
fn tick_label(v: f64, step: f64) -> String {
    let step_exp = step.log10().floor() as i32;
    let s = if v.abs() >= 1e5 {
        let prec = (v.abs().log10().floor() as i32 - step_exp).clamp(0, 8) as usize;
        format!("{v:.prec$e}")
    } else {
        let decimals = (-step_exp).max(0) as usize;
        format!("{v:.decimals$}")
    };
    if s.trim_start_matches('-').chars().all(|c| c == '0' || c == '.') {
        "0".to_string()
    } else {
        s
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().collect::<String>() + c.as_str(),
        None => String::new(),
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}
