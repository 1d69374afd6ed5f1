//! Random small LPs against brute-force vertex enumeration.

use std::time::Instant;

use coopmec_core::montecarlo::trial_rng;
use coopmec_core::oracle::lp_vertex_oracle;
use coopmec_core::{solve_lp, LinearProgram, LpStatus};
use rand::Rng;

fn random_lp(rng: &mut impl Rng, case: usize) -> LinearProgram {
    let n = rng.random_range(1..=8);
    let m_ub = rng.random_range(1..=4);
    let m_eq = if n >= 3 { rng.random_range(0..=1) } else { 0 };
    let mut v = |lo: f64, hi: f64| rng.random_range(lo..hi);
    let mut lp = LinearProgram::new((0..n).map(|_| v(-5.0, 5.0)).collect());
    for j in 0..n {
        let lo = if case.is_multiple_of(3) { v(-2.0, 1.0) } else { 0.0 };
        let hi = lo + v(0.5, 5.0);
        lp.set_bounds(j, lo, hi);
    }
    for _ in 0..m_ub {
        let row = (0..n).map(|_| v(-3.0, 3.0)).collect();
        lp.add_le(row, v(-2.0, 6.0));
    }
    for _ in 0..m_eq {
        let row = (0..n).map(|_| v(-3.0, 3.0)).collect();
        lp.add_eq(row, v(-1.0, 2.0));
    }
    lp
}

#[test]
fn random_lps_match_vertex_enumeration() {
    let start = Instant::now();
    let mut rng = trial_rng(2024, 0);
    let (mut optimal, mut infeasible) = (0, 0);
    for case in 0..200 {
        let lp = random_lp(&mut rng, case);
        let sol = solve_lp(&lp).unwrap();
        match lp_vertex_oracle(&lp) {
            Some(best) => {
                assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
                assert!((sol.value - best).abs() <= 1e-8 * (1.0 + best.abs()), "case {case}: {} vs {best}", sol.value);
                assert!(lp.max_violation(&sol.x) <= 1e-8, "case {case}");
                optimal += 1;
            }
            None => {
                assert_eq!(sol.status, LpStatus::Infeasible, "case {case}");
                infeasible += 1;
            }
        }
    }
    println!("{optimal} optimal, {infeasible} infeasible in {:?}", start.elapsed());
    assert!(optimal >= 100);
    assert!(start.elapsed().as_secs() <= 30);
}

#[test]
fn oracle_on_textbook_programs() {
    let mut lp = LinearProgram::new(vec![1.0, 1.0]);
    lp.add_eq(vec![1.0, 1.0], 1.0);
    assert!((lp_vertex_oracle(&lp).unwrap() - 1.0).abs() < 1e-12);

    let mut lp = LinearProgram::new(vec![3.0, 5.0]);
    lp.add_le(vec![1.0, 0.0], 4.0);
    lp.add_le(vec![0.0, 2.0], 12.0);
    lp.add_le(vec![3.0, 2.0], 18.0);
    assert!((lp_vertex_oracle(&lp).unwrap() - 36.0).abs() < 1e-9);

    let mut lp = LinearProgram::new(vec![1.0]);
    lp.add_le(vec![1.0], -1.0);
    assert_eq!(lp_vertex_oracle(&lp), None);
}
