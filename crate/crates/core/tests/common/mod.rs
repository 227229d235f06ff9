//! Linear Reissner–Mindlin plate on the unit square, discretized with its own
//! finite differences. Unknowns per node are the deflection `w` and the
//! rotations `b₁, b₂` with shear strains `γ_α = ∂_α w + b_α` and curvatures
//! `κ_αβ = sym ∂_α b_β`. Use an even node count per side: odd counts excite an
//! odd–even mode of the collocated central stencils.

use std::collections::HashMap;

pub struct PlateData {
    pub n: usize,
    pub young: f64,
    pub poisson: f64,
    pub thickness: f64,
    pub shear_factor: f64,
    pub pressure: f64,
}

pub struct PlateSolution {
    pub w: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl PlateSolution {
    pub fn max_deflection(&self) -> f64 {
        self.w.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

struct Csr {
    start: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl Csr {
    fn from_entries(n: usize, entries: HashMap<(usize, usize), f64>) -> Csr {
        let mut sorted: Vec<_> = entries.into_iter().collect();
        sorted.sort_unstable_by_key(|(k, _)| *k);
        let mut start = vec![0; n + 1];
        for ((r, _), _) in &sorted {
            start[r + 1] += 1;
        }
        for r in 0..n {
            start[r + 1] += start[r];
        }
        Csr {
            start,
            col: sorted.iter().map(|((_, c), _)| *c).collect(),
            val: sorted.iter().map(|(_, v)| *v).collect(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            *out = (self.start[r]..self.start[r + 1]).map(|k| self.val[k] * x[self.col[k]]).sum();
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        (0..self.start.len() - 1)
            .map(|r| (self.start[r]..self.start[r + 1]).find(|&k| self.col[k] == r).map_or(1.0, |k| self.val[k]))
            .collect()
    }
}

/// `(node, coefficient)` pairs of the second-order derivative along one axis.
fn derivative(n: usize, h: f64, i: usize, j: usize, axis: usize) -> Vec<((usize, usize), f64)> {
    let k = if axis == 0 { i } else { j };
    let at = |m: usize| if axis == 0 { (m, j) } else { (i, m) };
    if k == 0 {
        vec![(at(0), -1.5 / h), (at(1), 2.0 / h), (at(2), -0.5 / h)]
    } else if k == n - 1 {
        vec![(at(n - 1), 1.5 / h), (at(n - 2), -2.0 / h), (at(n - 3), 0.5 / h)]
    } else {
        vec![(at(k - 1), -0.5 / h), (at(k + 1), 0.5 / h)]
    }
}

/// Clamped plate (`w = b = 0` on the boundary) under uniform pressure.
pub fn clamped_plate(p: &PlateData) -> PlateSolution {
    let n = p.n;
    let h = 1.0 / (n - 1) as f64;
    let interior = |i: usize, j: usize| i > 0 && j > 0 && i < n - 1 && j < n - 1;
    // Unknown numbering over interior nodes only.
    let mut index = vec![usize::MAX; n * n];
    let mut count = 0;
    for j in 0..n {
        for i in 0..n {
            if interior(i, j) {
                index[i + n * j] = count;
                count += 1;
            }
        }
    }
    let dof = |(i, j): (usize, usize), c: usize| {
        let k = index[i + n * j];
        (k != usize::MAX).then(|| 3 * k + c)
    };

    let g = p.young / (2.0 * (1.0 + p.poisson));
    let d = p.young * p.thickness.powi(3) / (12.0 * (1.0 - p.poisson * p.poisson));
    let shear = p.shear_factor * g * p.thickness;
    let nu = p.poisson;
    // Rows: κ11, κ22, κ12, γ1, γ2.
    let material = [
        [d, d * nu, 0.0, 0.0, 0.0],
        [d * nu, d, 0.0, 0.0, 0.0],
        [0.0, 0.0, 2.0 * d * (1.0 - nu), 0.0, 0.0],
        [0.0, 0.0, 0.0, shear, 0.0],
        [0.0, 0.0, 0.0, 0.0, shear],
    ];

    let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
    let mut rhs = vec![0.0; 3 * count];
    for j in 0..n {
        for i in 0..n {
            let edge = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            let weight = edge(i) * edge(j) * h * h;
            let d1 = derivative(n, h, i, j, 0);
            let d2 = derivative(n, h, i, j, 1);
            let mut rows: [Vec<(usize, f64)>; 5] = Default::default();
            let mut push = |r: usize, node: (usize, usize), c: usize, v: f64| {
                if let Some(k) = dof(node, c) {
                    rows[r].push((k, v));
                }
            };
            for &(node, v) in &d1 {
                push(0, node, 1, v);
                push(2, node, 2, 0.5 * v);
                push(3, node, 0, v);
            }
            for &(node, v) in &d2 {
                push(1, node, 2, v);
                push(2, node, 1, 0.5 * v);
                push(4, node, 0, v);
            }
            push(3, (i, j), 1, 1.0);
            push(4, (i, j), 2, 1.0);
            for r in 0..5 {
                for s in 0..5 {
                    if material[r][s] == 0.0 {
                        continue;
                    }
                    for &(a, va) in &rows[r] {
                        for &(b, vb) in &rows[s] {
                            *entries.entry((a, b)).or_default() += weight * va * material[r][s] * vb;
                        }
                    }
                }
            }
            if let Some(k) = dof((i, j), 0) {
                rhs[k] += weight * p.pressure;
            }
        }
    }
    let k = Csr::from_entries(3 * count, entries);
    let (x, iterations, residual) = preconditioned_cg(&k, &rhs, 1e-12, 20 * 3 * count);
    let mut w = vec![0.0; n * n];
    for (node, &k) in index.iter().enumerate() {
        if k != usize::MAX {
            w[node] = x[3 * k];
        }
    }
    PlateSolution { w, iterations, residual }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients; returns the solution, the
/// iteration count and the final relative residual.
fn preconditioned_cg(k: &Csr, b: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, usize, f64) {
    let inv_diag: Vec<f64> = k.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; b.len()];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut kp = vec![0.0; b.len()];
    let mut rz = dot(&r, &z);
    let b_norm = dot(b, b).sqrt();
    for it in 0..max_iter {
        let res = dot(&r, &r).sqrt() / b_norm;
        if res <= tol {
            return (x, it, res);
        }
        k.apply(&p, &mut kp);
        let alpha = rz / dot(&p, &kp);
        for i in 0..x.len() {
            x[i] += alpha * p[i];
            r[i] -= alpha * kp[i];
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..p.len() {
            p[i] = z[i] + beta * p[i];
        }
    }
    let res = dot(&r, &r).sqrt() / b_norm;
    (x, max_iter, res)
}
