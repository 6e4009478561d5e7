//! Helpers shared by the integration tests: seeded instances and small dense
//! linear algebra written independently of the library.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tplcov::{build_score_covariance, sample_covariance, DataMatrix, ScoreCov, SymMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` rows of `z A^T` with `A` a random mixing matrix, so columns are correlated.
pub fn mixed_data(p: usize, n: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    let a: Vec<f64> = (0..p * p)
        .map(|i| {
            let (row, col) = (i / p, i % p);
            if row == col {
                1.0
            } else {
                r.random_range(-0.6..0.6)
            }
        })
        .collect();
    let mut values = Vec::with_capacity(n * p);
    for _ in 0..n {
        let z: Vec<f64> = (0..p).map(|_| r.sample(StandardNormal)).collect();
        for row in 0..p {
            values.push((0..p).map(|c| a[row * p + c] * z[c]).sum());
        }
    }
    DataMatrix::new(n, p, values).unwrap()
}

pub struct Instance {
    pub data: DataMatrix,
    pub s: SymMatrix,
    pub jcov: ScoreCov,
}

pub fn instance(p: usize, n: usize, seed: u64) -> Instance {
    let data = mixed_data(p, n, seed);
    let s = sample_covariance(&data, false).unwrap();
    let jcov = build_score_covariance(&data, &s).unwrap();
    Instance { data, s, jcov }
}

/// Gaussian elimination with partial pivoting on a dense row-major system.
pub fn dense_solve(mut a: Vec<f64>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap();
        for c in 0..n {
            a.swap(col * n + c, piv * n + c);
        }
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r * n + col] / a[col * n + col];
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|c| a[r * n + c] * x[c]).sum();
        x[r] = (b[r] - tail) / a[r * n + r];
    }
    x
}

/// Dense criterion `1/2 w'Jw - w'diag(J) + sum_a pen_a |w_a|`.
pub fn dense_objective(j: &[f64], pen: &[f64], w: &[f64]) -> f64 {
    let m = w.len();
    let mut v = 0.0;
    for a in 0..m {
        let jw: f64 = (0..m).map(|b| j[a * m + b] * w[b]).sum();
        v += 0.5 * w[a] * jw - w[a] * j[a * m + a];
        if w[a] != 0.0 {
            v += pen[a] * w[a].abs();
        }
    }
    v
}

/// Per-coordinate penalties `lambda / (n S_jk^2)`, zero on the diagonal.
pub fn dense_penalties(s: &SymMatrix, lambda: f64, n: usize) -> Vec<f64> {
    let p = s.p();
    let mut pen = Vec::new();
    for j in 0..p {
        for k in j..p {
            pen.push(if j == k {
                0.0
            } else {
                lambda / (n as f64 * s.get(j, k).powi(2))
            });
        }
    }
    pen
}

/// Proximal gradient descent on the dense criterion with step `1 / L`,
/// `L` a Gershgorin bound on the largest eigenvalue.
pub fn ista(j: &[f64], pen: &[f64], iters: usize) -> Vec<f64> {
    let m = pen.len();
    let l = (0..m)
        .map(|a| (0..m).map(|b| j[a * m + b].abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let step = 1.0 / l;
    let mut w = vec![0.0; m];
    let mut grad = vec![0.0; m];
    for _ in 0..iters {
        for a in 0..m {
            grad[a] = (0..m).map(|b| j[a * m + b] * w[b]).sum::<f64>() - j[a * m + a];
        }
        for a in 0..m {
            let x = w[a] - step * grad[a];
            let t = step * pen[a];
            w[a] = x.signum() * (x.abs() - t).max(0.0);
        }
    }
    w
}

/// Exact minimizer for small problems: solve the stationarity system for
/// every sign pattern of the penalized coordinates and keep the best
/// sign-consistent candidate.
pub fn enumerate_minimizer(j: &[f64], pen: &[f64]) -> (Vec<f64>, f64) {
    let m = pen.len();
    let penalized: Vec<usize> = (0..m).filter(|&a| pen[a] > 0.0).collect();
    let free: Vec<usize> = (0..m).filter(|&a| pen[a] == 0.0).collect();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for code in 0..3usize.pow(penalized.len() as u32) {
        let mut c = code;
        let mut support = free.clone();
        let mut sign = vec![0.0; m];
        for &a in &penalized {
            match c % 3 {
                1 => {
                    support.push(a);
                    sign[a] = 1.0;
                }
                2 => {
                    support.push(a);
                    sign[a] = -1.0;
                }
                _ => {}
            }
            c /= 3;
        }
        let sub: Vec<f64> = support
            .iter()
            .flat_map(|&a| support.iter().map(move |&b| j[a * m + b]))
            .collect();
        let rhs: Vec<f64> = support.iter().map(|&a| j[a * m + a] - pen[a] * sign[a]).collect();
        let x = dense_solve(sub, rhs);
        let mut w = vec![0.0; m];
        let mut consistent = true;
        for (i, &a) in support.iter().enumerate() {
            w[a] = x[i];
            if sign[a] != 0.0 && x[i] * sign[a] <= 0.0 {
                consistent = false;
            }
        }
        if !consistent {
            continue;
        }
        let v = dense_objective(j, pen, &w);
        if best.as_ref().map_or(true, |(_, bv)| v < *bv) {
            best = Some((w, v));
        }
    }
    best.expect("some sign pattern is consistent")
}

/// Standard normal CDF through a Taylor series of erf for moderate
/// arguments and a continued fraction of erfc in the tails.
pub fn normal_cdf(z: f64) -> f64 {
    let x = z.abs() / std::f64::consts::SQRT_2;
    let erfc = if x < 2.5 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x * x / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
    } else {
        // Lentz evaluation of erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + 1/2/(x + 1/(x + 3/2/(x + ...))))
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for i in 1..200 {
            let a = i as f64 / 2.0;
            d = x + a * d;
            d = 1.0 / d;
            c = x + a / c;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x * x).exp() / std::f64::consts::PI.sqrt() / f
    };
    if z >= 0.0 {
        1.0 - 0.5 * erfc
    } else {
        0.5 * erfc
    }
}

/// Upper tail of chi-square(1): `P(Z^2 > q) = 2 (1 - Phi(sqrt q))`.
pub fn chisq1_upper(q: f64) -> f64 {
    2.0 * normal_cdf(-q.sqrt())
}

/// Invert `chisq1_upper` by bisection.
pub fn chisq1_quantile_oracle(alpha: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chisq1_upper(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Log-density-derived test functions printed as `l_jj` and `l_jk`.
pub fn loglik_marginal(t: f64, x: f64) -> f64 {
    -t.ln() - x * x / t
}

pub fn loglik_pair(tjj: f64, tkk: f64, tjk: f64, xj: f64, xk: f64) -> f64 {
    let det = tjj * tkk - tjk * tjk;
    -det.ln() - (tkk * xj * xj - 2.0 * tjk * xj * xk + tjj * xk * xk) / det
}

/// Five-point central difference of `f` at `x` with step `h`.
pub fn fd5(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Gradient of `l_jk` in `(theta_jj, theta_kk, theta_jk)` by finite differences.
pub fn pair_gradient_fd(tjj: f64, tkk: f64, tjk: f64, xj: f64, xk: f64) -> [f64; 3] {
    let h = 1e-4;
    [
        fd5(|t| loglik_pair(t, tkk, tjk, xj, xk), tjj, h),
        fd5(|t| loglik_pair(tjj, t, tjk, xj, xk), tkk, h),
        fd5(|t| loglik_pair(tjj, tkk, t, xj, xk), tjk, h),
    ]
}
