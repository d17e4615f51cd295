use proximal_core::dgp::{Column, DgpSpec, Equation, GraphId, Mechanism, StructuralModel};
use proximal_core::estimators::{
    backdoor_g, proximal_g, regression_ate, regression_ate_population, relative_bias, ProbModel, Z_95,
};
use proximal_core::{Dataset, JointTable, RoleLabeling};

const EQUIVALENCE_CLASS: [GraphId; 4] = [GraphId::Base, GraphId::Exotic1, GraphId::Exotic2, GraphId::Exotic3];

fn population(spec: &DgpSpec) -> ProbModel {
    ProbModel::from_joint(&spec.observed_joint().unwrap()).unwrap()
}

#[test]
fn population_identity_wherever_the_graph_conditions_hold() {
    let mut identified = Vec::new();
    for g in GraphId::ALL {
        let spec = DgpSpec::default_for(g);
        let holds = spec
            .graph()
            .unwrap()
            .check_equivalence_class(&RoleLabeling::canonical())
            .map(|r| r.all_hold())
            .unwrap_or(false);
        if !holds {
            continue;
        }
        let r = proximal_g(&population(&spec), 1).unwrap();
        assert!(r.invertible);
        assert!((r.ate - spec.true_ate().unwrap()).abs() < 1e-10, "{g}");
        for x in 0..2 {
            assert!((r.p_do[x] - spec.do_distribution(x as u8).unwrap()).abs() < 1e-10, "{g} arm {x}");
        }
        identified.push(g);
    }
    assert_eq!(identified, EQUIVALENCE_CLASS);
}

#[test]
fn a_w_to_x_edge_biases_the_population_estimate() {
    let spec = DgpSpec::default_for(GraphId::Violation);
    let r = proximal_g(&population(&spec), 1).unwrap();
    assert!((r.ate - spec.true_ate().unwrap()).abs() > 1e-3);
}

#[test]
fn shared_patterns_leave_high_dimensional_confounding_harmless() {
    // When every U -> child vector is proportional to one pattern, all
    // children see U through a single linear index, and with symmetric
    // dimensions the binary proxies still identify the effect.
    let spec = DgpSpec::default_for(GraphId::HighDimU);
    let r = proximal_g(&population(&spec), 1).unwrap();
    assert!((r.ate - spec.true_ate().unwrap()).abs() < 1e-10);
    let regression = regression_ate_population(&spec.observed_joint().unwrap(), &["Z", "W"]).unwrap();
    assert!(relative_bias(regression.ate, 0.1).unwrap() > 0.05);
}

#[test]
fn population_probabilities_stay_in_range() {
    for g in GraphId::ALL {
        let r = proximal_g(&population(&DgpSpec::default_for(g)), 1).unwrap();
        assert!(r.p_do.iter().all(|p| (0.0..=1.0).contains(p)), "{g}: {:?}", r.p_do);
        assert!(r.warnings.is_empty());
    }
}

#[test]
fn consistency_at_one_million_rows() {
    for g in EQUIVALENCE_CLASS {
        let spec = DgpSpec::default_for(g);
        let truth = spec.true_ate().unwrap();
        let err: f64 = (0..20)
            .map(|seed| {
                let m = ProbModel::fit(&spec.sample(1_000_000, seed).unwrap()).unwrap();
                (proximal_g(&m, 1).unwrap().ate - truth).abs()
            })
            .sum::<f64>()
            / 20.0;
        assert!(err < 0.01, "{g}: mean absolute error {err}");
    }
}

#[test]
fn error_shrinks_with_sample_size() {
    let spec = DgpSpec::default_for(GraphId::Base);
    let truth = spec.true_ate().unwrap();
    let mean_abs_bias = |n: usize| -> f64 {
        (0..20)
            .map(|seed| {
                let m = ProbModel::fit(&spec.sample(n, 1000 + seed).unwrap()).unwrap();
                relative_bias(proximal_g(&m, 1).unwrap().ate, truth).unwrap().abs()
            })
            .sum::<f64>()
            / 20.0
    };
    assert!(mean_abs_bias(1_000_000) <= mean_abs_bias(10_000));
}

/// Delta-method standard deviation of the proximal ATE: gradient by central
/// differences over the 16 cells, multinomial covariance `diag(p) - p p^T`.
fn delta_method_sd(joint: &JointTable, n: usize) -> f64 {
    let p = joint.mass().to_vec();
    let ate = |mass: &[f64]| {
        let total: f64 = mass.iter().sum();
        let t = JointTable::new(joint.vars().to_vec(), mass.iter().map(|m| m / total).collect()).unwrap();
        proximal_g(&ProbModel::from_joint(&t).unwrap(), 1).unwrap().ate
    };
    let h = 1e-6;
    let grad: Vec<f64> = (0..p.len())
        .map(|k| {
            let (mut up, mut down) = (p.clone(), p.clone());
            up[k] += h;
            down[k] -= h;
            (ate(&up) - ate(&down)) / (2.0 * h)
        })
        .collect();
    let mean_grad: f64 = grad.iter().zip(&p).map(|(g, p)| g * p).sum();
    let var: f64 = grad.iter().zip(&p).map(|(g, p)| p * (g - mean_grad).powi(2)).sum();
    (var / n as f64).sqrt()
}

#[test]
fn spread_across_runs_matches_the_delta_method() {
    let spec = DgpSpec::default_for(GraphId::Base);
    let truth = spec.true_ate().unwrap();
    let n = 100_000;
    let predicted = delta_method_sd(&spec.observed_joint().unwrap(), n) / truth;
    let biases: Vec<f64> = (0..100)
        .map(|seed| {
            let m = ProbModel::fit(&spec.sample(n, 500 + seed).unwrap()).unwrap();
            relative_bias(proximal_g(&m, 1).unwrap().ate, truth).unwrap()
        })
        .collect();
    let mean = biases.iter().sum::<f64>() / 100.0;
    let sd = (biases.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / 99.0).sqrt();
    assert!(sd < 3.0 * predicted && sd > predicted / 3.0, "observed {sd}, predicted {predicted}");
    // 100 runs pin the sd down to roughly 7%
    assert!((sd / predicted - 1.0).abs() < 0.25, "observed {sd}, predicted {predicted}");
}

/// Z -> X, Z -> Y, X -> Y with Z observed.
fn observed_confounder() -> StructuralModel {
    let eq = |name: &str, mechanism| Equation { name: name.into(), latent: false, mechanism };
    StructuralModel::new(
        0.5,
        vec![
            eq("Z", Mechanism::Root),
            eq("X", Mechanism::Linear(vec![(0, 0.4)])),
            eq("Y", Mechanism::Linear(vec![(0, 0.4), (1, 0.1)])),
        ],
    )
    .unwrap()
}

#[test]
fn backdoor_adjustment_on_an_observed_confounder() {
    let model = observed_confounder();
    let truth = {
        let p = |x| model.intervene("X", x).unwrap().exact_joint().unwrap().prob(&[("Y", 1)]).unwrap();
        p(1) - p(0)
    };
    assert!((truth - 0.1).abs() < 1e-12);
    let exact = model.exact_joint().unwrap();
    assert!((backdoor_g(&exact, "X", "Y", &["Z"], 1).unwrap().ate - truth).abs() < 1e-12);
    assert!((backdoor_g(&exact, "X", "Y", &[], 1).unwrap().ate - truth).abs() > 0.05);

    let data = model.sample(1_000_000, 4).unwrap();
    let freq = data.frequencies(&["X", "Y", "Z"]).unwrap();
    let est = backdoor_g(&freq, "X", "Y", &["Z"], 1).unwrap().ate;
    // two arms of ~5e5 Bernoulli draws each
    assert!((est - truth).abs() < 5.0 * (0.5f64 / 500_000.0).sqrt(), "{est}");
}

#[test]
fn naive_contrast_needs_every_confounding_path_closed() {
    let base = DgpSpec::default_for(GraphId::Base);
    let naive = |spec: &DgpSpec| backdoor_g(&spec.observed_joint().unwrap(), "X", "Y", &[], 1).unwrap().ate;
    // X <- U -> W -> Y stays open without the direct U -> Y edge
    let no_uy = base.clone().with_delta("UY", 0.0).unwrap();
    assert!((naive(&no_uy) - 0.1).abs() > 1e-3);
    let unconfounded = no_uy.with_delta("WY", 0.0).unwrap();
    assert!((naive(&unconfounded) - 0.1).abs() < 1e-12);
}

#[test]
fn observed_confounder_as_its_own_proxy_pair() {
    // with Z = W = U the proximal formula reduces to backdoor adjustment on U
    let spec = DgpSpec::default_for(GraphId::Base);
    let data = spec.sample(400_000, 8).unwrap();
    let (x, y, u) = (data.column_index("X").unwrap(), data.column_index("Y").unwrap(), data.column_index("U").unwrap());
    let cols = ["X", "Y", "Z", "W"].map(|c| Column { name: c.into(), latent: false }).to_vec();
    let rows: Vec<u8> = data.rows().flat_map(|r| [r[x], r[y], r[u], r[u]]).collect();
    let proxied = Dataset::new(cols, rows).unwrap();
    let proximal = proximal_g(&ProbModel::fit(&proxied).unwrap(), 1).unwrap();
    let backdoor = backdoor_g(&data.frequencies(&["X", "Y", "U"]).unwrap(), "X", "Y", &["U"], 1).unwrap();
    assert_eq!(proximal.condition_numbers, Some([1.0, 1.0]));
    assert!((proximal.ate - backdoor.ate).abs() < 1e-12);
    assert!((proximal.ate - 0.1).abs() < 0.01);
}

#[test]
fn regression_benchmark_is_confounded() {
    let spec = DgpSpec::default_for(GraphId::Base);
    let data = spec.sample(1_000_000, 21).unwrap();
    let r = regression_ate(&data, &["Z", "W"]).unwrap();
    assert!(relative_bias(r.ate, 0.1).unwrap() > 0.05);
    let (lo, hi) = r.ci95.unwrap();
    assert!(lo < r.ate && r.ate < hi);
    assert!(((hi - lo) / (2.0 * Z_95)) < 0.002);

    let mut null = spec.clone();
    for k in ["UW", "UZ", "UX", "ZX", "UY", "WY"] {
        null.set_delta(k, 0.0).unwrap();
    }
    let pop = regression_ate_population(&null.observed_joint().unwrap(), &["Z", "W"]).unwrap();
    assert!((pop.ate - 0.1).abs() < 1e-12);
    let r = regression_ate(&null.sample(200_000, 2).unwrap(), &["Z", "W"]).unwrap();
    let (lo, hi) = r.ci95.unwrap();
    assert!(lo < 0.1 && 0.1 < hi, "[{lo}, {hi}]");
}

#[test]
fn fitted_tables_are_normalized() {
    let m = ProbModel::fit(&DgpSpec::default_for(GraphId::Exotic3).sample(1_000_000, 1).unwrap()).unwrap();
    assert!((m.table().total() - 1.0).abs() < 1e-12);
}

#[test]
fn reports_serialize_to_flat_records() {
    let r = proximal_g(&population(&DgpSpec::default_for(GraphId::Base)), 1).unwrap();
    let json = serde_json::to_value(r.record()).unwrap();
    let keys: Vec<&str> = json.as_object().unwrap().keys().map(String::as_str).collect();
    for k in ["method", "p_do_0", "p_do_1", "ate", "cond_x0", "cond_x1", "invertible", "warnings"] {
        assert!(keys.contains(&k), "{k}");
    }
    assert_eq!(json["method"], "proximal");
}
