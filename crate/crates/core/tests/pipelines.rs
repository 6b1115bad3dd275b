use fbarron::experiments::{sample_dataset, ExperimentReport, MetricRow};
use fbarron::net::{Unit, Weights};
use fbarron::pde::{generate_dataset, PoissonProblem, PoissonVariant};
use fbarron::report::{verify_run_dir, Manifest, RunDir};
use fbarron::spectral::{barron_norm, coefficients, hilbert_inner, hilbert_norm, reconstruct};
use fbarron::train::{fit, rmse, TrainConfig};
use fbarron::zoo::{make_bilinear, make_cubic, make_linear, ZooEntry};
use fbarron::{Complex64, CoeffVector, DomainSpec, FourierTable, MultiIndex, NetForm, ShallowNet};
use proptest::prelude::*;

#[test]
fn table_survives_json_and_reconstructs_identically() {
    let f = make_bilinear(&[1.0, -0.5]).unwrap();
    let table = coefficients(&f, 12, 128).unwrap();
    let back: FourierTable = serde_json::from_str(&serde_json::to_string(&table).unwrap()).unwrap();
    assert_eq!(back, table);
    let v = CoeffVector::raw(vec![0.1, -0.2, 0.3]);
    assert_eq!(reconstruct(&back, &v).unwrap(), reconstruct(&table, &v).unwrap());
    // Interior error of the truncated series is small for this smooth-ish target.
    assert!((reconstruct(&table, &v).unwrap() - f.evaluate(&v)).abs() < 0.05);
}

#[test]
fn zoo_entries_build_from_config_json() {
    let e: ZooEntry = serde_json::from_str(r#"{"name": "cubic", "weights": [1.0, 0.5]}"#).unwrap();
    let f = e.build().unwrap();
    assert_eq!(f.max_coord(), 2);
    assert!(serde_json::from_str::<ZooEntry>(r#"{"name": "cubic", "weights": [1.0], "x": 1}"#).is_err());
}

#[test]
fn trained_net_beats_constant_predictor() {
    let f = make_linear(&[1.0, 0.5]).unwrap();
    let train = sample_dataset(&f, &DomainSpec::Bound, 2, 1024, 1).unwrap();
    let test = sample_dataset(&f, &DomainSpec::Bound, 2, 256, 2).unwrap();
    let cfg = TrainConfig {
        epochs: 60,
        ..TrainConfig::default()
    };
    let out = fit(NetForm::Dense, 16, &train, &cfg).unwrap();
    assert_eq!(out.loss_trace.len(), 60);
    let r = rmse(&out.net, &test).unwrap();
    assert!(r < 0.2 * test.label_std(), "rmse {r} vs std {}", test.label_std());
}

#[test]
fn run_directory_records_every_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let problem = PoissonProblem::new(PoissonVariant::DirichletSine, 2.0, 3).unwrap();
    let data = generate_dataset(&problem, &DomainSpec::Bound, &[0.25, 0.5], 5, 3).unwrap();
    let mut dir = RunDir::create(tmp.path(), &["pde", "grid"], &problem).unwrap();
    dir.write_with("dataset.csv", |w| data.write_csv(w)).unwrap();
    let mut report = ExperimentReport::new("pde-grid", "poisson");
    report.rows.push(MetricRow::labeled("y=0.25").with("point", 0.25));
    dir.write_report(&report).unwrap();
    let path = dir.finish(None).unwrap();
    let m = Manifest::load(&path.join("manifest.json")).unwrap();
    let names: Vec<&str> = m.files.iter().map(|e| e.file.as_str()).collect();
    assert_eq!(names, ["config.json", "dataset.csv", "metrics.csv", "report.json"]);
    assert_eq!(m.config["variant"], "dirichlet-sine");
    assert!(verify_run_dir(&path).unwrap().is_empty());
    let csv = std::fs::read_to_string(path.join("dataset.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("b1,b2,b3,u(0.25),u(0.5)"));
}

fn arb_net(n: usize) -> impl Strategy<Value = ShallowNet> {
    prop::collection::vec(
        (-2.0..2.0f64, prop::collection::vec(-1.0..1.0f64, n), -1.0..1.0f64),
        1..8,
    )
    .prop_map(move |units| {
        let units = units
            .into_iter()
            .map(|(gamma, w, t)| Unit {
                gamma,
                weights: Weights::Dense { w },
                t,
            })
            .collect();
        ShallowNet::new(NetForm::Dense, n, 0.3, units).unwrap()
    })
}

fn arb_table() -> impl Strategy<Value = FourierTable> {
    prop::collection::vec(
        (prop::collection::vec(-4i64..=4, 3), -1.0..1.0f64, -1.0..1.0f64),
        1..12,
    )
    .prop_map(|entries| {
        FourierTable::from_coefficients(
            entries
                .into_iter()
                .map(|(k, re, im)| (MultiIndex::from_dense(&k), Complex64::new(re, im))),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    // After |w_j|₁ = 1, dropping inputs beyond N moves each pre-activation by
    // at most δ, so the output moves by at most Σ|γ_j|·δ.
    #[test]
    fn truncation_gap_is_bounded(net in arb_net(6), delta in 0.0..0.5f64, head in prop::collection::vec(-0.5..0.5f64, 3), tail in prop::collection::vec(-1.0..1.0f64, 3)) {
        let mut net = net;
        net.normalize();
        let truncated = net.truncate_inputs(3);
        let b: Vec<f64> = head.iter().copied().chain(tail.iter().map(|t| t * delta)).collect();
        let gap = (truncated.forward(&b).unwrap() - net.forward(&b).unwrap()).abs();
        prop_assert!(gap <= net.gamma_l1() * delta * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn hilbert_inner_cauchy_schwarz(a in arb_table(), b in arb_table()) {
        let ip = hilbert_inner(&a, &b, 1.0).norm();
        prop_assert!(ip <= hilbert_norm(&a, 1.0) * hilbert_norm(&b, 1.0) * (1.0 + 1e-12));
        let self_ip = hilbert_inner(&a, &a, 1.0);
        prop_assert!((self_ip.re - hilbert_norm(&a, 1.0).powi(2)).abs() <= 1e-9 * self_ip.re.max(1.0));
    }

    #[test]
    fn cubic_barron_norm_scales_linearly(c in 0.1..10.0f64) {
        let base = coefficients(&make_cubic(&[1.0, 0.5]).unwrap(), 8, 64).unwrap();
        let scaled = coefficients(&make_cubic(&[c, 0.5 * c]).unwrap(), 8, 64).unwrap();
        let (b0, b1) = (barron_norm(&base, 2.0), barron_norm(&scaled, 2.0));
        prop_assert!((b1 - c * b0).abs() <= 1e-12 * b1);
    }
}
