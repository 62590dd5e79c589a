mod common;

use common::{sliding_history, ts};
use dlp_eval_core::{
    bd_diagram, bd_diagram_facets, lifetimes, mar_plot, surprise_curve, surprise_sweep, BdOptions, BdPanel,
    CurveOptions, GraphKind, History, KeyKind, MarPlotOptions, MarSeries, NegativeStrategy, Role,
    SurpriseCurve,
};
use roxmltree::{Document, Node};

fn by_class<'a>(doc: &'a Document, class: &str) -> Vec<Node<'a, 'a>> {
    doc.descendants()
        .filter(|n| n.attribute("class") == Some(class))
        .collect()
}

fn circles(n: Node) -> usize {
    n.descendants().filter(|c| c.has_tag_name("circle")).count()
}

fn f(n: Node, attr: &str) -> f64 {
    n.attribute(attr).unwrap().parse().unwrap()
}

fn small() -> History {
    // A..D in both halves, E new in test, F gone before the cutoff
    let mut ev = Vec::new();
    for (i, (u, v)) in [(0, 1), (0, 2), (1, 3), (2, 3)].into_iter().enumerate() {
        ev.push((u, v, 1.0 + i as f64));
        ev.push((u, v, 11.0 + i as f64));
    }
    ev.push((5, 0, 2.0));
    ev.push((4, 0, 20.0));
    History::from_events(GraphKind::Directed, false, ev).unwrap()
}

#[test]
fn bd_diagram_places_points_by_category() {
    let h = small();
    let table = lifetimes(&h, KeyKind::Node).unwrap();
    let out = bd_diagram(&table, ts(10.0), &BdOptions::default()).unwrap();
    let doc = Document::parse(&out.svg).unwrap();
    assert_eq!(circles(by_class(&doc, "historical")[0]), 1);
    assert_eq!(circles(by_class(&doc, "overlap")[0]), 4);
    assert_eq!(circles(by_class(&doc, "inductive")[0]), 1);
    assert_eq!(out.plotted, 6);

    let guide_y = f(by_class(&doc, "split-h")[0], "y1");
    let guide_x = f(by_class(&doc, "split-v")[0], "x1");
    let green = by_class(&doc, "inductive")[0].first_element_child().unwrap();
    // born after the cutoff: above the horizontal guide
    assert!(f(green, "cy") < guide_y);
    let blue = by_class(&doc, "historical")[0].first_element_child().unwrap();
    // died before the cutoff: left of the vertical guide
    assert!(f(blue, "cx") < guide_x);

    let legend: Vec<String> = by_class(&doc, "legend")[0]
        .descendants()
        .filter(|n| n.is_text())
        .map(|n| n.text().unwrap().to_string())
        .collect();
    assert!(legend.contains(&"Inductive (1)".to_string()), "{legend:?}");

    let lines: Vec<&str> = out.csv.lines().collect();
    assert_eq!(lines[0], "key,birth,death,category");
    assert_eq!(lines.len(), 7);
}

#[test]
fn bd_csv_keeps_every_key_when_points_are_downsampled() {
    let h = sliding_history(3, 4000, 1200, GraphKind::Directed);
    let table = lifetimes(&h, KeyKind::Edge).unwrap();
    let opts = BdOptions {
        max_points: 500,
        seed: 9,
        ..BdOptions::default()
    };
    let out = bd_diagram(&table, ts(1700.0), &opts).unwrap();
    assert_eq!(out.plotted, 500);
    assert_eq!(out.csv.lines().count(), table.len() + 1);
    let doc = Document::parse(&out.svg).unwrap();
    let drawn: usize = ["historical", "overlap", "inductive"]
        .iter()
        .map(|c| circles(by_class(&doc, c)[0]))
        .sum();
    assert_eq!(drawn, 500);
    assert_eq!(out.svg, bd_diagram(&table, ts(1700.0), &opts).unwrap().svg);
}

#[test]
fn bipartite_roles_get_two_panels() {
    let h = sliding_history(4, 800, 60, GraphKind::Bipartite);
    let src = lifetimes(&h, KeyKind::SourceNode).unwrap();
    let dst = lifetimes(&h, KeyKind::DestinationNode).unwrap();
    let out = bd_diagram_facets(
        &[
            BdPanel {
                title: "source",
                table: &src,
            },
            BdPanel {
                title: "destination",
                table: &dst,
            },
        ],
        ts(300.0),
        &BdOptions::default(),
    )
    .unwrap();
    let doc = Document::parse(&out.svg).unwrap();
    assert_eq!(by_class(&doc, "panel").len(), 2);
    assert_eq!(out.csv.lines().count(), src.len() + dst.len() + 1);
    assert!(out.csv.lines().nth(1).unwrap().starts_with("source:"));
}

#[test]
fn surprise_curve_draws_one_vertex_per_ratio_and_marks_the_default() {
    let h = sliding_history(5, 3000, 200, GraphKind::Directed);
    let ratios = [0.1, 0.15, 0.2, 0.3, 0.4];
    let points = surprise_sweep(&h, &ratios).unwrap();
    let svg = surprise_curve(
        &[SurpriseCurve {
            label: "sliding".into(),
            points,
        }],
        &CurveOptions::default(),
    )
    .unwrap();
    let doc = Document::parse(&svg).unwrap();
    assert_eq!(by_class(&doc, "vertex").len(), 5);
    assert_eq!(by_class(&doc, "marked").len(), 1);

    let one = surprise_sweep(&h, &[0.15]).unwrap();
    assert!(surprise_curve(
        &[SurpriseCurve {
            label: "x".into(),
            points: one
        }],
        &CurveOptions::default()
    )
    .is_err());
}

fn series(values: Vec<Option<f64>>) -> MarSeries {
    let bins = values.len();
    MarSeries {
        edges: (0..=bins).map(|i| i as f64).collect(),
        roles: vec![Role::Positive, Role::Negative(NegativeStrategy::IE)],
        counts: vec![values.iter().map(|v| usize::from(v.is_some())).collect(); 2],
        mar: vec![
            values.clone(),
            values.iter().map(|v| v.map(|x| x + 0.5)).collect(),
        ],
    }
}

#[test]
fn mar_plot_breaks_lines_at_missing_bins() {
    let s = series(vec![
        Some(1.75),
        Some(2.0),
        None,
        Some(2.25),
        Some(1.5),
        Some(1.0),
    ]);
    let svg = mar_plot(&s, ts(3.0), &MarPlotOptions::default()).unwrap();
    let doc = Document::parse(&svg).unwrap();
    let role = doc
        .descendants()
        .find(|n| n.attribute("data-role") == Some("positive"))
        .unwrap();
    let segments: Vec<_> = role
        .descendants()
        .filter(|n| n.attribute("class") == Some("segment"))
        .collect();
    assert_eq!(segments.len(), 2);
    assert_eq!(segments[0].attribute("points").unwrap().split(' ').count(), 2);
    assert_eq!(segments[1].attribute("points").unwrap().split(' ').count(), 3);
    let titles: Vec<&str> = role
        .descendants()
        .filter(|n| n.has_tag_name("title"))
        .filter_map(|n| n.text())
        .collect();
    assert_eq!(titles[0], "positive: 1.75");
    assert_eq!(titles.len(), 5);
    assert_eq!(by_class(&doc, "split-v").len(), 1);
}

#[test]
fn mar_plot_rejects_an_empty_series() {
    let s = series(vec![None, None]);
    assert!(mar_plot(&s, ts(1.0), &MarPlotOptions::default()).is_err());
}
