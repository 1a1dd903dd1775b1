//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use harmorph::Rational;
use num_bigint::BigInt;
use num_traits::Zero;
use rand::Rng;

/// Rank of an integer matrix by fraction-free (Bareiss) elimination.
pub fn bareiss_rank(rows: &[Vec<BigInt>]) -> usize {
    let mut m: Vec<Vec<BigInt>> = rows.to_vec();
    let (n_rows, n_cols) = (m.len(), m.first().map_or(0, Vec::len));
    let mut rank = 0;
    let mut prev = BigInt::from(1);
    for col in 0..n_cols {
        let Some(p) = (rank..n_rows).find(|&i| !m[i][col].is_zero()) else { continue };
        m.swap(rank, p);
        for i in rank + 1..n_rows {
            for j in col + 1..n_cols {
                let v = &m[rank][col] * &m[i][j] - &m[i][col] * &m[rank][j];
                m[i][j] = v / &prev;
            }
            m[i][col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    rank
}

pub fn to_rational(rows: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    rows.iter().map(|r| r.iter().map(|&v| Rational::from_integer(v.into())).collect()).collect()
}

pub fn to_bigint(rows: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    rows.iter().map(|r| r.iter().map(|&v| BigInt::from(v)).collect()).collect()
}

pub fn int_mat_mul(a: &[Vec<i64>], b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    (0..n).map(|i| (0..m).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect()).collect()
}

pub fn int_transpose(a: &[Vec<i64>]) -> Vec<Vec<i64>> {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Symmetric `P^T D P` with small random integer `P` and a diagonal `D`
/// holding some zeros, so radicals of every rank occur.
pub fn random_form(rng: &mut impl Rng, n: usize) -> Vec<Vec<i64>> {
    let d: Vec<i64> = (0..n).map(|_| rng.gen_range(-2..=2)).collect();
    let p: Vec<Vec<i64>> = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-2..=2)).collect()).collect();
    let dp: Vec<Vec<i64>> = (0..n).map(|i| p[i].iter().map(|v| v * d[i]).collect()).collect();
    int_mat_mul(&int_transpose(&p), &dp)
}

/// `k` random integer vectors, possibly dependent.
pub fn random_vectors(rng: &mut impl Rng, n: usize, k: usize) -> Vec<Vec<i64>> {
    (0..k).map(|_| (0..n).map(|_| rng.gen_range(-3..=3)).collect()).collect()
}

/// Random expression in `vars` that is defined at every point of the
/// box `[-1.5, 1.5]^n`: partial functions only see arguments squeezed into
/// their domain.
pub fn random_expression(rng: &mut impl Rng, vars: &[&str], depth: u32) -> String {
    if depth == 0 || rng.gen_bool(0.2) {
        return if rng.gen_bool(0.7) {
            vars[rng.gen_range(0..vars.len())].to_string()
        } else {
            ["0.5", "2", "1.25", "3", "0.75"][rng.gen_range(0..5)].to_string()
        };
    }
    let sub = |rng: &mut _| random_expression(rng, vars, depth - 1);
    match rng.gen_range(0..20) {
        0 => format!("({} + {})", sub(rng), sub(rng)),
        1 => format!("({} - {})", sub(rng), sub(rng)),
        2 | 3 => format!("({} * {})", sub(rng), sub(rng)),
        4 => format!("({} / (2 + sin({})))", sub(rng), sub(rng)),
        5 => format!("({})^{}", sub(rng), rng.gen_range(2..=3)),
        6 => format!("(1 + ({})^2)^{}", sub(rng), ["0.5", "1.5", "-0.5"][rng.gen_range(0..3)]),
        7 => format!("sin({})", sub(rng)),
        8 => format!("cos({})", sub(rng)),
        9 => format!("tan(0.5*tanh({}))", sub(rng)),
        10 => format!("exp(tanh({}))", sub(rng)),
        11 => format!("log(1 + ({})^2)", sub(rng)),
        12 => format!("sqrt(1 + ({})^2)", sub(rng)),
        13 => format!("asin(0.5*tanh({}))", sub(rng)),
        14 => format!("acos(0.5*tanh({}))", sub(rng)),
        15 => format!("atan({})", sub(rng)),
        16 => format!("asinh({})", sub(rng)),
        17 => format!("acosh(2 + ({})^2)", sub(rng)),
        18 => format!("atanh(0.5*tanh({}))", sub(rng)),
        _ => format!("-sinh(tanh({})) + cosh(tanh({}))", sub(rng), sub(rng)),
    }
}

pub fn random_point(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.5..1.5)).collect()
}

/// Scaled disagreement `|a - b| / (1 + |b|)`.
pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Textbook Christoffel symbols `Γ^k_ij` of a 2-dimensional chart.
pub type Christoffel2 = fn(&[f64]) -> [[[f64; 2]; 2]; 2];

/// Polar plane `dr^2 + r^2 dθ^2`.
pub fn polar_christoffels(x: &[f64]) -> [[[f64; 2]; 2]; 2] {
    let r = x[0];
    let mut g = [[[0.0; 2]; 2]; 2];
    g[0][1][1] = -r;
    g[1][0][1] = 1.0 / r;
    g[1][1][0] = 1.0 / r;
    g
}

/// Round sphere `dθ^2 + sin^2 θ dφ^2`.
pub fn sphere_christoffels(x: &[f64]) -> [[[f64; 2]; 2]; 2] {
    let t = x[0];
    let mut g = [[[0.0; 2]; 2]; 2];
    g[0][1][1] = -t.sin() * t.cos();
    g[1][0][1] = t.cos() / t.sin();
    g[1][1][0] = t.cos() / t.sin();
    g
}

pub fn flat_christoffels(_: &[f64]) -> [[[f64; 2]; 2]; 2] {
    [[[0.0; 2]; 2]; 2]
}

/// A map between 2-dimensional non-degenerate charts with hand-coded
/// derivatives, used as a classical harmonic-map oracle.
pub struct ClassicalCase {
    pub name: &'static str,
    pub source_metric: fn(&[f64]) -> [[f64; 2]; 2],
    pub source_gamma: Christoffel2,
    pub target_metric: fn(&[f64]) -> [[f64; 2]; 2],
    pub target_gamma: Christoffel2,
    /// Value, Jacobian `d phi^a / dx^i` and Hessians `d^2 phi^a / dx^i dx^j`.
    pub map: fn(&[f64]) -> ([f64; 2], [[f64; 2]; 2], [[[f64; 2]; 2]; 2]),
}

pub fn inverse2(m: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]
}

impl ClassicalCase {
    /// `τ^c = g^{ij} (φ^c_ij - Γ^k_ij φ^c_k + Γ̂^c_ab φ^a_i φ^b_j)`.
    pub fn tension(&self, x: &[f64]) -> [f64; 2] {
        let (y, jac, hess) = (self.map)(x);
        let gi = inverse2((self.source_metric)(x));
        let gs = (self.source_gamma)(x);
        let gt = (self.target_gamma)(&y);
        let mut tau = [0.0; 2];
        for c in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let mut b = hess[c][i][j];
                    for k in 0..2 {
                        b -= gs[k][i][j] * jac[c][k];
                    }
                    for a in 0..2 {
                        for bb in 0..2 {
                            b += gt[c][a][bb] * jac[a][i] * jac[bb][j];
                        }
                    }
                    tau[c] += gi[i][j] * b;
                }
            }
        }
        tau
    }

    /// `J g^{-1} J^T` and the inverse target metric at the image.
    pub fn conformality(&self, x: &[f64]) -> ([[f64; 2]; 2], [[f64; 2]; 2]) {
        let (y, jac, _) = (self.map)(x);
        let gi = inverse2((self.source_metric)(x));
        let hi = inverse2((self.target_metric)(&y));
        let mut t = [[0.0; 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                for i in 0..2 {
                    for j in 0..2 {
                        t[a][b] += jac[a][i] * gi[i][j] * jac[b][j];
                    }
                }
            }
        }
        (t, hi)
    }
}

pub fn euclid(_: &[f64]) -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, 1.0]]
}

pub fn minkowski(_: &[f64]) -> [[f64; 2]; 2] {
    [[-1.0, 0.0], [0.0, 1.0]]
}

pub fn polar(x: &[f64]) -> [[f64; 2]; 2] {
    [[1.0, 0.0], [0.0, x[0] * x[0]]]
}

/// The classical cases, paired with the chart metric strings and component
/// expressions that encode them for the library.
pub fn classical_cases() -> Vec<(ClassicalCase, ChartText, ChartText, [&'static str; 2])> {
    let euclid_text = ChartText { coords: ["x", "y"], diag: ["1", "1"] };
    let polar_text = ChartText { coords: ["r", "t"], diag: ["1", "r^2"] };
    let mink_text = ChartText { coords: ["s", "x"], diag: ["-1", "1"] };
    vec![
        (
            ClassicalCase {
                name: "identity on the polar plane",
                source_metric: polar,
                source_gamma: polar_christoffels,
                target_metric: polar,
                target_gamma: polar_christoffels,
                map: |x| ([x[0], x[1]], [[1.0, 0.0], [0.0, 1.0]], [[[0.0; 2]; 2]; 2]),
            },
            polar_text,
            polar_text,
            ["r", "t"],
        ),
        (
            ClassicalCase {
                name: "z -> z^2 on the flat plane",
                source_metric: euclid,
                source_gamma: flat_christoffels,
                target_metric: euclid,
                target_gamma: flat_christoffels,
                map: |p| {
                    let (x, y) = (p[0], p[1]);
                    (
                        [x * x - y * y, 2.0 * x * y],
                        [[2.0 * x, -2.0 * y], [2.0 * y, 2.0 * x]],
                        [[[2.0, 0.0], [0.0, -2.0]], [[0.0, 2.0], [2.0, 0.0]]],
                    )
                },
            },
            euclid_text,
            euclid_text,
            ["x^2 - y^2", "2*x*y"],
        ),
        (
            ClassicalCase {
                name: "Lorentz boost of Minkowski space",
                source_metric: minkowski,
                source_gamma: flat_christoffels,
                target_metric: minkowski,
                target_gamma: flat_christoffels,
                map: |p| {
                    let (c, s) = (0.6f64.cosh(), 0.6f64.sinh());
                    ([c * p[0] + s * p[1], s * p[0] + c * p[1]], [[c, s], [s, c]], [[[0.0; 2]; 2]; 2])
                },
            },
            mink_text,
            mink_text,
            ["cosh(0.6)*s + sinh(0.6)*x", "sinh(0.6)*s + cosh(0.6)*x"],
        ),
        (
            ClassicalCase {
                name: "non-harmonic map into the polar plane",
                source_metric: euclid,
                source_gamma: flat_christoffels,
                target_metric: polar,
                target_gamma: polar_christoffels,
                map: |p| {
                    let (x, y) = (p[0], p[1]);
                    (
                        [1.0 + x * x + y * y, x * y],
                        [[2.0 * x, 2.0 * y], [y, x]],
                        [[[2.0, 0.0], [0.0, 2.0]], [[0.0, 1.0], [1.0, 0.0]]],
                    )
                },
            },
            euclid_text,
            polar_text,
            ["1 + x^2 + y^2", "x*y"],
        ),
    ]
}

#[derive(Clone, Copy)]
pub struct ChartText {
    pub coords: [&'static str; 2],
    pub diag: [&'static str; 2],
}

impl ChartText {
    /// Non-degenerate chart in the library, optionally padded with `radical`
    /// leading radical coordinates.
    pub fn build(&self, radical: usize) -> harmorph::manifold::ChartPatch {
        let mut coords: Vec<String> = (0..radical).map(|a| format!("w{a}")).collect();
        coords.extend(self.coords.iter().map(|c| c.to_string()));
        let n = coords.len();
        let metric: Vec<Vec<String>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j && i >= radical { self.diag[i - radical].to_string() } else { "0".into() })
                    .collect()
            })
            .collect();
        harmorph::manifold::ChartPatch::new(&coords, radical, &metric, &[] as &[&str]).unwrap()
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

