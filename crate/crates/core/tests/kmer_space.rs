mod common;

use std::path::Path;

use nalgebra::{DMatrix, Schur};
use rand::Rng;

use nnc_core::kmer_space::{
    calibrate_mapping, de_bruijn_linear, fixtures, full_graph, jump_constrained_reduce, parse_kmer_model,
    perron_root, read_kmer_model, strongly_connected_components, CalibrationRecord, ChannelMapping, KmerState,
    StateGraph,
};
use nnc_core::NncError;

fn spectral_radius(g: &StateGraph) -> f64 {
    let n = g.node_count();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for e in g.edges() {
        a[(e.src, e.dst)] += 1.0;
    }
    // Schur iteration can stall on exact 0/1 matrices; an orthogonal
    // similarity leaves the spectrum unchanged and breaks the symmetry.
    let mut rng = common::rng(n as u64);
    let mut m = a.clone();
    for _ in 0..8 {
        if let Some(schur) = Schur::try_new(m.clone(), f64::EPSILON, 10_000) {
            return schur.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
        }
        let q = DMatrix::<f64>::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0)).qr().q();
        m = &q * &a * q.transpose();
    }
    panic!("no Schur decomposition for {n}x{n} adjacency matrix");
}

fn level_of(k: KmerState) -> f64 {
    // deterministic, injective enough for the checks below
    (k.index() as f64 * 0.731).sin() * 2.0 + k.index() as f64 * 1e-3
}

#[test]
fn perron_root_matches_dense_eigenvalues() {
    let mut rng = common::rng(11);
    let mut checked = 0;
    for trial in 0..60 {
        let tau = 1 + trial % 3;
        let mut mapping = ChannelMapping::new(tau).unwrap();
        for k in KmerState::all(tau).unwrap() {
            mapping.insert(k, rng.random_range(-2.0..2.0), None).unwrap();
        }
        let jmin = rng.random_range(0.0..1.5);
        let g = jump_constrained_reduce(&full_graph(&mapping).unwrap(), jmin);
        if g.edge_count() == 0 {
            continue;
        }
        let ours = perron_root(&g).unwrap();
        let dense = spectral_radius(&g);
        assert!((ours - dense).abs() <= 1e-8 * dense.max(1.0), "tau {tau} jmin {jmin}: {ours} vs {dense}");
        for comp in strongly_connected_components(&g) {
            if comp.edge_count() > 0 {
                let r = perron_root(&comp).unwrap();
                assert!((r - spectral_radius(&comp)).abs() <= 1e-8 * r.max(1.0));
            }
        }
        checked += 1;
    }
    assert!(checked > 40);
}

#[test]
fn fixture_root_matches_dense_eigenvalues() {
    let g = fixtures::fig3_graph();
    assert!((perron_root(&g).unwrap() - spectral_radius(&g)).abs() < 1e-9);
}

#[test]
fn de_bruijn_calibration_recovers_levels() {
    for tau in 1..=5 {
        let seq = de_bruijn_linear(tau);
        assert_eq!(seq.len(), (1usize << (2 * tau)) + tau - 1);
        let levels: Vec<f64> =
            seq.windows(tau).map(|w| level_of(KmerState::from_bases(w).unwrap())).collect();
        let (mapping, report) = calibrate_mapping(&[CalibrationRecord { bases: seq, levels }], tau).unwrap();
        assert!(report.is_complete());
        assert_eq!(report.fraction(), 1.0);
        assert!(mapping.is_complete());
        for k in KmerState::all(tau).unwrap() {
            assert_eq!(mapping.level(&k), Some(level_of(k)));
        }
    }
}

#[test]
fn calibration_averages_repeats_and_reports_gaps() {
    let bases = nnc_core::kmer_space::parse_bases("ACGTACG").unwrap();
    let levels = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
    let (mapping, report) = calibrate_mapping(&[CalibrationRecord { bases, levels }], 2).unwrap();
    // AC, CG appear twice: (1+5)/2 and (2+6)/2
    assert_eq!(mapping.level(&"AC".parse().unwrap()), Some(3.0));
    assert_eq!(mapping.level(&"CG".parse().unwrap()), Some(4.0));
    assert_eq!(mapping.level(&"GT".parse().unwrap()), Some(3.0));
    assert_eq!(report.observed, 4);
    assert_eq!(report.total, 16);
    assert_eq!(report.missing.len(), 12);
    assert!(!report.missing.contains(&"TA".parse().unwrap()));
    assert!(matches!(full_graph(&mapping), Err(NncError::MissingLevel(_))));

    let bad = CalibrationRecord { bases: nnc_core::kmer_space::parse_bases("ACG").unwrap(), levels: vec![1.0] };
    assert!(calibrate_mapping(&[bad], 2).is_err());
}

#[test]
fn model_tables_parse() {
    let text = "kmer\tlevel_mean\tlevel_stdv\n# comment\nAA\t1.5\t0.2\nAC\t-0.5\t0.3\n\nCA 0.25 0.1\n";
    let m = parse_kmer_model(text, Path::new("t.tsv")).unwrap();
    assert_eq!(m.tau(), 2);
    assert_eq!(m.len(), 3);
    assert!(m.has_all_sds());
    assert_eq!(m.level(&"CA".parse().unwrap()), Some(0.25));
    assert_eq!(m.sd(&"AC".parse().unwrap()), Some(0.3));
    let g = StateGraph::induced(&m).unwrap();
    // AA->AA, AA->AC, AC->CA, CA->AA, CA->AC
    assert_eq!(g.edge_count(), 5);
    assert!(g.has_self_loops());
}

#[test]
fn model_table_errors_carry_line_numbers() {
    let cases = [
        ("AA\t1.0\nAA\t2.0\n", 2),
        ("AA\t1.0\nAXA\t2.0\n", 2),
        ("AA\tx\n", 1),
        ("AA\t1.0\nACG\t2.0\n", 2),
        ("AA\n", 1),
    ];
    for (text, line) in cases {
        match parse_kmer_model(text, Path::new("m.tsv")) {
            Err(NncError::Parse { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
            other => panic!("{text:?}: expected parse error, got {other:?}"),
        }
    }
    assert!(parse_kmer_model("# nothing\n", Path::new("m.tsv")).is_err());
}

#[test]
fn model_files_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.tsv");
    let mut text = String::from("kmer\tlevel_mean\n");
    for k in KmerState::all(3).unwrap() {
        text.push_str(&format!("{k}\t{}\n", level_of(k)));
    }
    std::fs::write(&path, text).unwrap();
    let m = read_kmer_model(&path).unwrap();
    assert!(m.is_complete());
    let g = full_graph(&m).unwrap();
    assert_eq!(g, StateGraph::induced(&m).unwrap());
    assert!(read_kmer_model(&dir.path().join("missing.tsv")).is_err());
}
