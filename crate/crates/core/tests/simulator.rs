mod common;

use proximal_core::dgp::{DeltaPattern, DgpSpec, GraphId};
use proximal_core::JointTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn shipped_specs() -> Vec<(String, DgpSpec)> {
    let mut specs: Vec<(String, DgpSpec)> = GraphId::ALL.iter().map(|g| (g.name().to_string(), DgpSpec::default_for(*g))).collect();
    for (uv, uy) in [(DeltaPattern::Linear, DeltaPattern::Constant), (DeltaPattern::Leading, DeltaPattern::Constant)] {
        specs.push((format!("high_dim_u {uv:?}/{uy:?}"), DgpSpec::high_dim(uv, uy)));
    }
    specs
}

fn subsets(items: &[String]) -> impl Iterator<Item = Vec<&str>> + '_ {
    (0..1usize << items.len())
        .map(move |mask| items.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, s)| s.as_str()).collect())
}

#[test]
fn d_separation_implies_exact_independence_on_small_graphs() {
    for g in [GraphId::Base, GraphId::Exotic1, GraphId::Exotic2, GraphId::Exotic3, GraphId::Violation] {
        let spec = DgpSpec::default_for(g);
        let graph = spec.graph().unwrap();
        let joint = spec.exact_joint().unwrap();
        let names: Vec<String> = graph.node_names().iter().map(|s| s.to_string()).collect();
        let mut separated = 0;
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                let rest: Vec<String> = names.iter().filter(|n| **n != names[i] && **n != names[j]).cloned().collect();
                for c in subsets(&rest) {
                    let (a, b) = ([names[i].as_str()], [names[j].as_str()]);
                    let gap = joint.independence_gap(&a, &b, &c).unwrap();
                    if graph.d_separated(&a, &b, &c).unwrap() {
                        separated += 1;
                        assert!(gap < 1e-12, "{g}: {a:?} _||_ {b:?} | {c:?} off by {gap}");
                    } else {
                        // the default parameters are generic: every open path shows up
                        assert!(gap > 1e-9, "{g}: {a:?} and {b:?} given {c:?} look independent");
                    }
                }
            }
        }
        assert!(separated > 0, "{g}");
    }
}

#[test]
fn d_separation_implies_exact_independence_in_high_dimensions() {
    let spec = DgpSpec::default_for(GraphId::HighDimU);
    let graph = spec.graph().unwrap();
    let joint = spec.exact_joint().unwrap();
    let names: Vec<String> = graph.node_names().iter().map(|s| s.to_string()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut separated = 0;
    for _ in 0..500 {
        let i = rng.random_range(0..names.len());
        let mut j = rng.random_range(0..names.len() - 1);
        if j >= i {
            j += 1;
        }
        let c: Vec<&str> = names
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != i && k != j && rng.random_bool(0.3))
            .map(|(_, s)| s.as_str())
            .collect();
        let (a, b) = ([names[i].as_str()], [names[j].as_str()]);
        if graph.d_separated(&a, &b, &c).unwrap() {
            separated += 1;
            let gap = joint.independence_gap(&a, &b, &c).unwrap();
            assert!(gap < 1e-12, "{a:?} _||_ {b:?} | {c:?} off by {gap}");
        }
    }
    assert!(separated > 50);
}

/// Largest cellwise deviation in units of the multinomial standard error.
fn max_z(freq: &JointTable, exact: &JointTable, n: usize) -> f64 {
    freq.mass()
        .iter()
        .zip(exact.mass())
        .map(|(f, p)| {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            if se == 0.0 {
                if *f == 0.0 { 0.0 } else { f64::INFINITY }
            } else {
                (f - p).abs() / se
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn sample_frequencies_match_enumeration() {
    let n = 1_000_000;
    for (label, spec) in shipped_specs() {
        let data = spec.sample(n, 99).unwrap();
        let exact = spec.observed_joint().unwrap();
        let vars: Vec<&str> = exact.vars().iter().map(String::as_str).collect();
        let freq = data.frequencies(&vars).unwrap();
        let z = max_z(&freq, &exact, n);
        assert!(z < 5.0, "{label}: {z:.2} standard errors");
    }
}

#[test]
fn interventional_distribution_matches_backdoor_on_u() {
    for g in [GraphId::Base, GraphId::Exotic1] {
        let spec = DgpSpec::default_for(g);
        let joint = spec.exact_joint().unwrap();
        for x in 0..2u8 {
            let mut backdoor = 0.0;
            for u in 0..2u8 {
                let pu = joint.prob(&[("U", u)]).unwrap();
                backdoor += joint.prob(&[("Y", 1), ("X", x), ("U", u)]).unwrap() / joint.prob(&[("X", x), ("U", u)]).unwrap() * pu;
            }
            assert!((backdoor - spec.do_distribution(x).unwrap()).abs() < 1e-12, "{g} x={x}");
        }
    }
}

#[test]
fn intervened_samples_ignore_treatment_parents() {
    let model = DgpSpec::default_for(GraphId::Base).structural_model().unwrap().intervene("X", 1).unwrap();
    let data = model.sample(20_000, 3).unwrap();
    let x = data.column_index("X").unwrap();
    assert!(data.rows().all(|r| r[x] == 1));
}
