use num_complex::Complex64;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `int_0^t e^{-i s M} ds = (1 - e^{-itM}) / (iM)`, equal to `t` at `M = 0`.
///
/// Written as `t (sinc(tM) - i (tM/2) sinc(tM/2)^2)` so it stays accurate
/// for small `tM`.
pub fn time_factor(t: f64, m: f64) -> Complex64 {
    let theta = t * m;
    let half = sinc(theta / 2.0);
    Complex64::new(t * sinc(theta), -t * 0.5 * theta * half * half)
}

const MAX_CHAIN: usize = 8;

/// `int_{t >= s_1 >= ... >= s_k >= 0} exp(sum_i lambda_i s_i) ds`.
///
/// This is `t^k` times the divided difference of `exp` at the nodes
/// `z_0 = 0`, `z_j = t (lambda_1 + ... + lambda_j)`. Clustered nodes use a
/// shifted Taylor series, well separated ones the divided-difference
/// recursion, and everything else `[exp(Z)]_{0,k}` for the bidiagonal `Z`
/// with the nodes on the diagonal and ones above it.
pub fn chain_integral(t: f64, lambdas: &[Complex64]) -> Complex64 {
    let k = lambdas.len();
    assert!(k < MAX_CHAIN, "chain too long");
    if k == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let mut z = [Complex64::new(0.0, 0.0); MAX_CHAIN];
    for j in 1..=k {
        z[j] = z[j - 1] + lambdas[j - 1] * t;
    }
    let z = &z[..=k];
    let tk = t.powi(k as i32);
    let centre = z.iter().sum::<Complex64>() / (k + 1) as f64;
    let spread = z.iter().map(|w| (w - centre).norm()).fold(0.0, f64::max);
    if spread <= 1.0 {
        return divided_difference_taylor(z, centre) * tk;
    }
    let min_gap = (0..=k)
        .flat_map(|i| (i + 1..=k).map(move |j| (i, j)))
        .map(|(i, j)| (z[j] - z[i]).norm())
        .fold(f64::INFINITY, f64::min);
    if min_gap >= 1.0 {
        return divided_difference_recursive(z) * tk;
    }
    chain_integral_matrix(z) * tk
}

/// `exp[z_0, ..., z_k]` as `e^c sum_r h_r(z - c) / (k + r)!` with `h_r` the
/// complete homogeneous symmetric polynomials; needs `|z_j - c| <= 1`.
fn divided_difference_taylor(z: &[Complex64], c: Complex64) -> Complex64 {
    const TERMS: usize = 24;
    let k = z.len() - 1;
    let mut h = [Complex64::new(0.0, 0.0); TERMS];
    h[0] = Complex64::new(1.0, 0.0);
    for w in z {
        let w = w - c;
        for r in 1..TERMS {
            let prev = h[r - 1];
            h[r] += w * prev;
        }
    }
    let mut fact = (1..=k).map(|j| j as f64).product::<f64>();
    let mut sum = Complex64::new(0.0, 0.0);
    for (r, hr) in h.iter().enumerate() {
        if r > 0 {
            fact *= (k + r) as f64;
        }
        sum += hr / fact;
    }
    c.exp() * sum
}

/// Newton divided differences; accurate when all nodes are at least 1 apart.
fn divided_difference_recursive(z: &[Complex64]) -> Complex64 {
    let mut f = [Complex64::new(0.0, 0.0); MAX_CHAIN];
    for (fi, zi) in f.iter_mut().zip(z) {
        *fi = zi.exp();
    }
    let n = z.len();
    for level in 1..n {
        for i in 0..n - level {
            f[i] = (f[i + 1] - f[i]) / (z[i + level] - z[i]);
        }
    }
    f[0]
}

fn chain_integral_matrix(nodes: &[Complex64]) -> Complex64 {
    let n = nodes.len();
    let mut z = [[Complex64::new(0.0, 0.0); MAX_CHAIN]; MAX_CHAIN];
    for j in 0..n {
        z[j][j] = nodes[j];
        if j > 0 {
            z[j - 1][j] = Complex64::new(1.0, 0.0);
        }
    }
    expm_upper(&z, n)[0][n - 1]
}

type Mat = [[Complex64; MAX_CHAIN]; MAX_CHAIN];

fn matmul_upper(a: &Mat, b: &Mat, n: usize) -> Mat {
    let mut c = [[Complex64::new(0.0, 0.0); MAX_CHAIN]; MAX_CHAIN];
    for i in 0..n {
        for j in i..n {
            let mut s = Complex64::new(0.0, 0.0);
            for l in i..=j {
                s += a[i][l] * b[l][j];
            }
            c[i][j] = s;
        }
    }
    c
}

/// Scaling-and-squaring Taylor exponential of an upper-triangular matrix.
fn expm_upper(z: &Mat, n: usize) -> Mat {
    let norm = (0..n)
        .map(|i| (i..n).map(|j| z[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let scale = 0.5f64.powi(squarings as i32);
    let mut a = [[Complex64::new(0.0, 0.0); MAX_CHAIN]; MAX_CHAIN];
    for i in 0..n {
        for j in i..n {
            a[i][j] = z[i][j] * scale;
        }
    }
    // Taylor to degree 12 is below double precision for norm <= 1/4
    let mut result = [[Complex64::new(0.0, 0.0); MAX_CHAIN]; MAX_CHAIN];
    for (i, row) in result.iter_mut().enumerate().take(n) {
        row[i] = Complex64::new(1.0, 0.0);
    }
    for deg in (1..=12).rev() {
        let mut r = matmul_upper(&a, &result, n);
        for i in 0..n {
            for j in i..n {
                r[i][j] /= deg as f64;
            }
            r[i][i] += 1.0;
        }
        result = r;
    }
    for _ in 0..squarings {
        result = matmul_upper(&result, &result, n);
    }
    result
}
