mod common;

use common::fixture;
use scenematch_core::desc::parse_description;
use scenematch_core::geometry::EvalContext;
use scenematch_core::matcher::{enumerate_hypotheses, Aggregator, ItemKind, RecognizedScene};
use scenematch_core::redundancy::{redundancy_report, AmbiguityScope, RedundancyConfig};
use scenematch_core::scene::Scene;

fn session(name: &str) -> RecognizedScene {
    let scene = Scene::from_json(&fixture("figure5_scene.json")).unwrap();
    let d = parse_description(&fixture(name)).unwrap();
    enumerate_hypotheses(&d, &scene, &EvalContext::default(), Aggregator::Min, 0.05).unwrap()
}

fn summary(rs: &RecognizedScene) -> Vec<(String, f64)> {
    rs.hypotheses
        .iter()
        .map(|h| (h.binding.values().cloned().collect::<Vec<_>>().join(","), h.likelihood.value()))
        .collect()
}

#[test]
fn red_floodgate() {
    let rs = session("n1.txt");
    assert_eq!(
        summary(&rs),
        vec![("Omega13".to_string(), 1.0), ("Omega11".to_string(), 0.68), ("Omega14".to_string(), 0.10)]
    );
}

#[test]
fn horizontal_pipe_on_red_floodgate() {
    let rs = session("n2.txt");
    let s = summary(&rs);
    assert_eq!(s[0], ("Omega05,Omega11".to_string(), 0.68));
    assert!(s.contains(&("Omega02,Omega14".to_string(), 0.10)));
    for h in &rs.hypotheses {
        if h.binding["o1"] == "Omega05" || h.binding["o1"] == "Omega02" && h.binding["o2"] == "Omega14" {
            let on = h.item_scores.iter().find(|i| i.kind == ItemKind::Relation).unwrap();
            assert_eq!(on.score.value(), 1.0);
        }
    }
    // extras the printed data admit
    assert!(s.contains(&("Omega08,Omega11".to_string(), 0.52)));
    assert_eq!(s.len(), 4);
}

#[test]
fn three_object_chain() {
    let rs = session("n3.txt");
    let h = rs
        .hypotheses
        .iter()
        .find(|h| h.binding.values().cloned().collect::<Vec<_>>() == ["Omega07", "Omega02", "Omega14"])
        .unwrap();
    assert_eq!(h.likelihood.value(), 0.10);
    let scores: Vec<f64> = h.item_scores.iter().map(|i| i.score.value()).collect();
    assert_eq!(scores, vec![0.74, 0.88, 0.10, 1.0, 1.0]);
    assert_eq!(rs.hypotheses[0].likelihood.value(), 0.58);
}

#[test]
fn geometric_mean_reinforces_the_chain() {
    let scene = Scene::from_json(&fixture("figure5_scene.json")).unwrap();
    let d = parse_description(&fixture("n3.txt")).unwrap();
    let rs = enumerate_hypotheses(&d, &scene, &EvalContext::default(), Aggregator::GeoMean, 0.5).unwrap();
    let h = rs.hypotheses.iter().find(|h| h.binding["o1"] == "Omega07" && h.hunt == "Omega14").unwrap();
    assert!((h.likelihood.value() - 0.579_086).abs() < 1e-6);
}

#[test]
fn pipe_regions_report() {
    let scene = Scene::from_json(&fixture("pipe_regions.json")).unwrap();
    let d = parse_description(&fixture("pipe_description.txt")).unwrap();
    let ctx = EvalContext::default();
    let out = redundancy_report(&d, &scene, &ctx, &RedundancyConfig::default()).unwrap();
    let r = out.report().unwrap();
    assert_eq!(r.maximal_subd.labels(), vec!["p: pipe", "p: horizontal", "p: long"]);
    assert_eq!((r.maximal_performance.likelihood.value(), r.maximal_performance.non_ambiguity), (0.7, 0.3));
    assert_eq!(r.chosen_kernel.labels(), vec!["p: pipe", "p: horizontal"]);
    assert_eq!((r.hunt.as_str(), r.delta), ("R3", 2));
    assert_eq!((r.performance.likelihood.value(), r.performance.non_ambiguity), (0.9, 0.4));
    assert_eq!((r.classic.likelihood.value(), r.classic.non_ambiguity), (0.5, 0.4));

    let cfg = RedundancyConfig { scope: AmbiguityScope::MaximalSubd, verbose: true, ..Default::default() };
    let out = redundancy_report(&d, &scene, &ctx, &cfg).unwrap();
    let r = out.report().unwrap();
    assert_eq!(r.performance.non_ambiguity, 0.3);
    assert_eq!(r.trace.as_ref().unwrap().len(), 8);
}
