use lambda_soliton::scheme::assemble_step_system;
use lambda_soliton::tridiag::{solve_tridiagonal, TridiagonalSystem};
use lambda_soliton::{build_initial_field, step, SimulationConfig, C64};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

fn dense(sys: &TridiagonalSystem) -> Vec<Vec<C64>> {
    let n = sys.len();
    let mut a = vec![vec![zero(); n]; n];
    for i in 0..n {
        a[i][i] = sys.diag[i];
        if i + 1 < n {
            a[i][i + 1] = sys.sup[i];
            a[i + 1][i] = sys.sub[i];
        }
    }
    a
}

fn gepp(mut a: Vec<Vec<C64>>, mut b: Vec<C64>) -> Vec<C64> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                let v = a[col][k];
                a[row][k] -= f * v;
            }
            let v = b[col];
            b[row] -= f * v;
        }
    }
    let mut x = vec![zero(); n];
    for i in (0..n).rev() {
        let s: C64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

fn max_diff(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_system(rng: &mut ChaCha8Rng, n: usize) -> TridiagonalSystem {
    let mut c = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let sub = (1..n).map(|_| c()).collect();
    let diag = (0..n).map(|_| c() * 2.0).collect();
    let sup = (1..n).map(|_| c()).collect();
    let rhs = (0..n).map(|_| c()).collect();
    TridiagonalSystem::new(sub, diag, sup, rhs).unwrap()
}

#[test]
fn random_eight_by_eight_matches_dense_elimination() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let sys = random_system(&mut rng, 8);
        let x = solve_tridiagonal(&sys).unwrap();
        let oracle = gepp(dense(&sys), sys.rhs.clone());
        assert!(max_diff(&x, &oracle) <= 1e-12);
    }
}

#[test]
fn default_step_matches_dense_solve() {
    let cfg = SimulationConfig::default();
    let u0 = build_initial_field(&cfg.ic, &cfg.grid).unwrap();
    let sys = assemble_step_system(&u0, &cfg);
    let oracle = gepp(dense(&sys), sys.rhs.clone());
    let next = step(&u0, &cfg).unwrap();
    assert!(max_diff(&next.values, &oracle) <= 1e-12);
    assert_eq!(next.time_index, 1);
}

proptest! {
    #[test]
    fn scheme_systems_match_dense_elimination(
        n in 3usize..=12,
        lambda in 0.01f64..2.0,
        rho_re in 0.0f64..0.2,
        rho_im in -4.0f64..4.0,
        seed in any::<u64>(),
    ) {
        let rho = C64::new(rho_re, rho_im);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rhs: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let sys = TridiagonalSystem::new(vec![-rho; n - 1], vec![1.0 + lambda * rho; n], vec![-rho; n - 1], rhs).unwrap();
        let x = solve_tridiagonal(&sys).unwrap();
        let oracle = gepp(dense(&sys), sys.rhs.clone());
        let scale = oracle.iter().map(|v| v.norm()).fold(1.0, f64::max);
        prop_assert!(max_diff(&x, &oracle) <= 1e-12 * scale);
    }
}
