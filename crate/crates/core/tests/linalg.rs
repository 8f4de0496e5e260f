use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use whitney::linalg::{
    cholesky_solve, dense_matvec, generalized_symmetric_eig, generalized_symmetric_eigenvalues,
    norm2, numerical_rank, symmetric_indefinite_solve, DenseMatrix, SparseMatrix,
};

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = rng.random_range(-1.0..1.0);
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    a
}

/// `GᵀG + n·I`, safely definite.
fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let g: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut a = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            a[i][j] = (0..n).map(|k| g[k][i] * g[k][j]).sum::<f64>();
        }
        a[i][i] += n as f64;
    }
    a
}

fn dense(a: &[Vec<f64>]) -> DenseMatrix {
    DenseMatrix::from_fn(a.len(), a[0].len(), |i, j| a[i][j])
}

/// Test-local Cholesky, `B = L Lᵀ`.
fn cholesky(b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let d = b[j][j] - (0..j).map(|k| l[j][k] * l[j][k]).sum::<f64>();
        l[j][j] = d.sqrt();
        for i in j + 1..n {
            l[i][j] = (b[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>()) / l[j][j];
        }
    }
    l
}

fn forward(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let mut x = b.to_vec();
    for i in 0..x.len() {
        for k in 0..i {
            x[i] -= l[i][k] * x[k];
        }
        x[i] /= l[i][i];
    }
    x
}

/// Cyclic Jacobi eigenvalues of a symmetric matrix, ascending.
fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    d.sort_by(f64::total_cmp);
    d
}

/// `L⁻¹ A L⁻ᵀ` through the test-local Cholesky factor.
fn reduced(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let l = cholesky(b);
    let y: Vec<Vec<f64>> = (0..n).map(|j| forward(&l, &(0..n).map(|i| a[i][j]).collect::<Vec<_>>())).collect();
    // y[j] = L⁻¹ A e_j; C = L⁻¹ (L⁻¹ A)ᵀ.
    let cols: Vec<Vec<f64>> = (0..n).map(|i| forward(&l, &(0..n).map(|j| y[j][i]).collect::<Vec<_>>())).collect();
    (0..n).map(|i| (0..n).map(|j| 0.5 * (cols[j][i] + cols[i][j])).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pencil_spectrum_matches_reduced_standard_problem(n in 1usize..=50, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, n);
        let b = random_spd(&mut rng, n);
        let got = generalized_symmetric_eigenvalues(&dense(&a), &dense(&b)).unwrap();
        let want = jacobi_eigenvalues(reduced(&a, &b));
        let scale = want.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-10 * scale, "{g} vs {w}");
        }
    }

    #[test]
    fn eigenpairs_have_small_residuals(n in 1usize..=200, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, n);
        let b = random_spd(&mut rng, n);
        let (ad, bd) = (dense(&a), dense(&b));
        let s = generalized_symmetric_eig(&ad, &bd).unwrap();
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        let (na, nb) = (frobenius(&a), frobenius(&b));
        for k in 0..n {
            let x = s.eigenvector(k);
            let ax = dense_matvec(&ad, &x);
            let bx = dense_matvec(&bd, &x);
            let lam = s.eigenvalues[k];
            let r: Vec<f64> = ax.iter().zip(&bx).map(|(p, q)| p - lam * q).collect();
            prop_assert!(norm2(&r) <= 1e-10 * (na + lam.abs() * nb) * norm2(&x));
            // B-normalization.
            let xbx: f64 = x.iter().zip(&bx).map(|(p, q)| p * q).sum();
            prop_assert!((xbx - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn solvers_invert_random_systems(n in 1usize..=40, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_spd(&mut rng, n);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = dense_matvec(&dense(&a), &x);
        for y in [cholesky_solve(&dense(&a), &b).unwrap(), symmetric_indefinite_solve(&dense(&a), &b).unwrap()] {
            let err: f64 = y.iter().zip(&x).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            prop_assert!(err < 1e-10);
        }
    }

    #[test]
    fn rank_is_invariant_under_invertible_transforms(
        m in 1usize..12, r in 0usize..6, seed in any::<u64>()
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = r.min(m);
        // A = U Vᵀ with U m×r, V 8×r generic has rank r.
        let u: Vec<Vec<f64>> = (0..m).map(|_| (0..r).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let v: Vec<Vec<f64>> = (0..8).map(|_| (0..r).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let a = DenseMatrix::from_fn(m, 8, |i, j| (0..r).map(|k| u[i][k] * v[j][k]).sum());
        prop_assert_eq!(numerical_rank(&a, 1e-10), r);
        let s = dense(&random_spd(&mut rng, m));
        prop_assert_eq!(numerical_rank(&(&s * &a), 1e-10), r);
        prop_assert_eq!(numerical_rank(&a.transpose().to_owned(), 1e-10), r);
    }

    #[test]
    fn sparse_duplicates_sum_in_any_order(
        entries in prop::collection::vec((0usize..5, 0usize..5, -10i32..10), 0..40)
    ) {
        let t: Vec<(usize, usize, f64)> = entries.iter().map(|&(i, j, v)| (i, j, v as f64)).collect();
        let mut rev = t.clone();
        rev.reverse();
        let a = SparseMatrix::from_triplets(5, 5, t.clone());
        let b = SparseMatrix::from_triplets(5, 5, rev);
        prop_assert_eq!(a.triplets(), b.triplets());
        let mut want = [[0.0f64; 5]; 5];
        for (i, j, v) in t {
            want[i][j] += v;
        }
        for (i, row) in want.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                prop_assert_eq!(a.get(i, j), *w);
            }
        }
    }
}

fn frobenius(a: &[Vec<f64>]) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn indefinite_pencil_mass_is_rejected() {
    let a = DenseMatrix::identity(2, 2);
    let b = dense(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
    assert!(generalized_symmetric_eig(&a, &b).is_err());
}
