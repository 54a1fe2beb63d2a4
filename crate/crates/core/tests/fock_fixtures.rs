//! Closed-form g1/g2 against tables from an independent numpy Fock-space
//! calculation (`tools/fock_fixtures.py`).

use latticecorr::correlations::oracle::FockOracle;
use latticecorr::correlations::{g1_of_state, g2_of_state, FieldState, ModeBasis};
use latticecorr::lattice::Statistics;
use num_complex::Complex64;

struct Row {
    statistics: Statistics,
    state: usize,
    l: isize,
    g1: Option<Complex64>,
    g2: Option<f64>,
}

fn load(n: usize) -> Vec<Row> {
    let path = format!("{}/tests/fixtures/fock_n{n}.txt", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split_whitespace().collect();
            let statistics = match f[0] {
                "boson" => Statistics::Boson,
                "fermion" => Statistics::Fermion,
                other => panic!("bad statistics {other}"),
            };
            let num = |s: &str| s.parse::<f64>().unwrap();
            let (re, im, g2) = (num(f[3]), num(f[4]), num(f[5]));
            Row {
                statistics,
                state: f[1].parse().unwrap(),
                l: f[2].parse().unwrap(),
                g1: (!re.is_nan()).then(|| Complex64::new(re, im)),
                g2: (!g2.is_nan()).then_some(g2),
            }
        })
        .collect()
}

fn modes_of(n: usize, mask: usize) -> Vec<usize> {
    (0..n).filter(|j| mask & (1 << j) != 0).collect()
}

fn check_closed_forms(n: usize) {
    let rows = load(n);
    assert_eq!(rows.len(), 2 * (1 << n) * 2 * n);
    let basis = ModeBasis::dimensionless(n);
    let mut worst = 0.0f64;
    for row in &rows {
        let s = row.l as f64 * basis.delta_x2;
        let state = FieldState::from_modes(n, &modes_of(n, row.state), row.statistics).unwrap();
        match row.g1 {
            Some(g1) => worst = worst.max((g1_of_state(&state, &basis, s).unwrap() - g1).norm()),
            None => assert!(g1_of_state(&state, &basis, s).is_err()),
        }
        match row.g2 {
            Some(g2) => worst = worst.max((g2_of_state(&state, &basis, s).unwrap() - g2).abs()),
            None => assert!(g2_of_state(&state, &basis, s).is_err()),
        }
    }
    assert!(worst < 1e-10, "N = {n}: max deviation {worst:e}");
}

#[test]
fn closed_forms_match_reference_n4() {
    check_closed_forms(4);
}

#[test]
fn closed_forms_match_reference_n5() {
    check_closed_forms(5);
}

#[test]
fn closed_forms_match_reference_n6() {
    check_closed_forms(6);
}

#[test]
fn rust_oracle_matches_reference_n5() {
    let n = 5;
    let rows = load(n);
    let basis = ModeBasis::dimensionless(n);
    for stats in [Statistics::Boson, Statistics::Fermion] {
        let oracle = FockOracle::new(basis, stats).unwrap();
        for l in -(n as isize)..n as isize {
            let table = oracle.table(l as f64 * basis.delta_x2);
            for row in rows.iter().filter(|r| r.statistics == stats && r.l == l) {
                match (row.g1, table.g1[row.state]) {
                    (Some(a), Some(b)) => assert!((a - b).norm() < 1e-10),
                    (None, None) => {}
                    other => panic!("definedness differs: {other:?}"),
                }
                match (row.g2, table.g2[row.state]) {
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-10),
                    (None, None) => {}
                    other => panic!("definedness differs: {other:?}"),
                }
            }
        }
    }
}
