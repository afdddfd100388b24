//! Small numerical kernels: Gauss-Legendre rules, the gamma function, and
//! closed-form integrals of sine products.

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; accurate to machine precision
/// for the small orders used here.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-based initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        let (_, d) = legendre_with_derivative(n, 0.0);
        nodes[n / 2] = 0.0;
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gamma function via the Lanczos approximation (g = 7, 9 terms).
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_1,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_312e-7,
    ];
    if x < 0.5 {
        // reflection
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + G + 0.5;
        for (i, c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// sin(z)/z with a series branch near zero.
fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-4 {
        1.0 - z * z / 6.0 + z.powi(4) / 120.0
    } else {
        z.sin() / z
    }
}

/// Integral of cos(w*x - phi) over [p, q], stable for small w.
fn cos_integral(w: f64, phi: f64, p: f64, q: f64) -> f64 {
    let half = 0.5 * (q - p);
    let mid = 0.5 * (p + q);
    (q - p) * (w * mid - phi).cos() * sinc(w * half)
}

/// Closed-form integral over [p, q] of sin(a(x-c)) * sin(b(x-e)) with a, b > 0.
pub fn sine_product_integral(a: f64, c: f64, b: f64, e: f64, p: f64, q: f64) -> f64 {
    // product-to-sum: 1/2 [cos((a-b)x - (ac-be)) - cos((a+b)x - (ac+be))]
    0.5 * (cos_integral(a - b, a * c - b * e, p, q) - cos_integral(a + b, a * c + b * e, p, q))
}

#[cfg(test)]
pub(crate) fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = simpson(f, a, m);
        let right = simpson(f, m, b);
        if depth > 40 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, m, left, tol / 2.0, depth + 1)
                + recurse(f, m, b, right, tol / 2.0, depth + 1)
        }
    }
    // uniform initial split so oscillatory integrands cannot alias through the
    // coarse error estimate
    let splits = 16;
    let h = (b - a) / splits as f64;
    (0..splits)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            recurse(f, x0, x1, simpson(f, x0, x1), tol / splits as f64, 0)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            // exact up to degree 2n-1
            for deg in 0..(2 * n) {
                let num: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 0 {
                    2.0 / (deg as f64 + 1.0)
                } else {
                    0.0
                };
                assert!(
                    (num - exact).abs() < 1e-13,
                    "n={n} deg={deg}: {num} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn gamma_matches_exact_values() {
        // integers and half-integers
        assert_relative_eq!(gamma(1.0), 1.0, max_relative = 1e-12);
        assert_relative_eq!(gamma(4.0), 6.0, max_relative = 1e-12);
        let sqrt_pi = std::f64::consts::PI.sqrt();
        assert_relative_eq!(gamma(0.5), sqrt_pi, max_relative = 1e-12);
        assert_relative_eq!(gamma(1.5), 0.5 * sqrt_pi, max_relative = 1e-12);
        assert_relative_eq!(gamma(2.5), 0.75 * sqrt_pi, max_relative = 1e-12);
    }

    #[test]
    fn sine_product_matches_quadrature() {
        let cases = [
            (3.0, -1.0, 3.0, -1.0, 0.0, 1.0),
            (3.0, -1.0, 5.0, 0.25, -0.5, 1.0),
            (std::f64::consts::PI, 0.0, std::f64::consts::PI, 0.0, 0.0, 1.0),
            (10.47, 0.3, 10.47001, 0.3, 0.1, 0.9), // near-degenerate frequencies
        ];
        for (a, c, b, e, p, q) in cases {
            let exact = sine_product_integral(a, c, b, e, p, q);
            let num = adaptive_simpson(&|x: f64| (a * (x - c)).sin() * (b * (x - e)).sin(), p, q, 1e-13);
            assert!((exact - num).abs() < 1e-10, "case {a} {b}: {exact} vs {num}");
        }
    }
}
