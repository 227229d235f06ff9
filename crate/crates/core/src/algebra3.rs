//! Fixed-size 3-vector and 3×3 tensor algebra.
//!
//! Tensors are stored row-major: `m[i][j]` is the component `eᵢ · M eⱼ`.
//! The dyadic product `a ⊗ b` is the matrix `a bᵀ`, so `(a ⊗ b) v = a (b · v)`.
//!
//! Rotations live in [`Rotation`], a `Mat3` constrained to SO(3). Every
//! constructor either checks the constraint or restores it by polar projection.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Below this rotation angle the exponential and logarithm switch to series.
pub const SMALL_ANGLE: f64 = 1e-8;

/// Default gate on the symmetric part accepted by [`axl`].
pub const AXL_TOLERANCE: f64 = 1e-10;

/// Orthogonality tolerance for matrices accepted as rotations.
pub const ROTATION_TOLERANCE: f64 = 1e-12;

/// Rotations within this distance of angle π have an ill-conditioned axis.
pub const NEAR_PI_MARGIN: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("matrix is not skew-symmetric: symmetric part has norm {residual:e} (tolerance {tolerance:e})")]
    NotSkew { residual: f64, tolerance: f64 },
    #[error("matrix is not a rotation: ‖RᵀR − 1‖ = {orthogonality:e}, det = {det}")]
    NotRotation { orthogonality: f64, det: f64 },
    #[error("rotation angle {angle} is within {margin:e} of π; logarithm is ill-conditioned")]
    NearPi { angle: f64, margin: f64 },
    #[error("drill axis is not a unit vector: ‖d₃‖ = {norm}")]
    NonUnitAxis { norm: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Vec3 = Vec3([0.0; 3]);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    /// Cartesian basis vector `e_{k+1}`.
    pub fn unit(k: usize) -> Self {
        let mut v = [0.0; 3];
        v[k] = 1.0;
        Vec3(v)
    }

    pub fn dot(&self, o: &Vec3) -> f64 {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }

    pub fn cross(&self, o: &Vec3) -> Vec3 {
        let a = &self.0;
        let b = &o.0;
        Vec3([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    pub fn norm_squared(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn normalized(&self) -> Vec3 {
        *self * (1.0 / self.norm())
    }

    pub fn outer(&self, o: &Vec3) -> Mat3 {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.0[i] * o.0[j];
            }
        }
        Mat3(m)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
}

impl SubAssign for Vec3 {
    fn sub_assign(&mut self, o: Vec3) {
        *self = *self - o;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Mat3 = Mat3([[0.0; 3]; 3]);
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn from_cols(c0: Vec3, c1: Vec3, c2: Vec3) -> Self {
        Mat3([
            [c0[0], c1[0], c2[0]],
            [c0[1], c1[1], c2[1]],
            [c0[2], c1[2], c2[2]],
        ])
    }

    pub fn from_rows(r0: Vec3, r1: Vec3, r2: Vec3) -> Self {
        Mat3([r0.0, r1.0, r2.0])
    }

    pub fn col(&self, j: usize) -> Vec3 {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }

    pub fn row(&self, i: usize) -> Vec3 {
        Vec3(self.0[i])
    }

    pub fn transpose(&self) -> Mat3 {
        let m = &self.0;
        Mat3([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    /// Double contraction `A : B = tr(AᵀB)`.
    pub fn ddot(&self, o: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * o.0[i][j];
            }
        }
        s
    }

    pub fn norm_squared(&self) -> f64 {
        self.ddot(self)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse by cofactors; `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = Mat3([
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ]);
        Some(adj * (1.0 / d))
    }

    pub fn sym(&self) -> Mat3 {
        (*self + self.transpose()) * 0.5
    }

    pub fn skew_part(&self) -> Mat3 {
        (*self - self.transpose()) * 0.5
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Row-major flattening.
    pub fn to_array(&self) -> [f64; 9] {
        let m = &self.0;
        [
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        ]
    }

    pub fn from_array(a: [f64; 9]) -> Mat3 {
        Mat3([[a[0], a[1], a[2]], [a[3], a[4], a[5]], [a[6], a[7], a[8]]])
    }

    /// Apply `v ↦ w × v` to every column: the tensor `skew(w) M`.
    pub fn cross_cols(w: &Vec3, m: &Mat3) -> Mat3 {
        skew(w) * *m
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, o: Mat3) -> Mat3 {
        let mut r = self;
        r += o;
        r
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, o: Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, o: Mat3) -> Mat3 {
        let mut r = self;
        r -= o;
        r
    }
}

impl SubAssign for Mat3 {
    fn sub_assign(&mut self, o: Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[i][j] -= o.0[i][j];
            }
        }
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        self * -1.0
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut r = self;
        for row in r.0.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        r
    }
}

impl Mul<Mat3> for f64 {
    type Output = Mat3;
    fn mul(self, m: Mat3) -> Mat3 {
        m * self
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        let m = &self.0;
        Vec3([
            m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
            m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
            m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
        ])
    }
}

impl Mul<Mat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, o: Mat3) -> Mat3 {
        let mut r = [[0.0; 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j] + self.0[i][2] * o.0[2][j];
            }
        }
        Mat3(r)
    }
}

/// Skew-symmetric matrix `S` with `S w = v × w`.
pub fn skew(v: &Vec3) -> Mat3 {
    Mat3([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])
}

/// Axial vector of a skew-symmetric tensor, gated at [`AXL_TOLERANCE`].
pub fn axl(s: &Mat3) -> Result<Vec3, AlgebraError> {
    axl_with_tolerance(s, AXL_TOLERANCE)
}

/// Axial vector of the skew part of `s`, after checking that the symmetric
/// part is below `tolerance`.
pub fn axl_with_tolerance(s: &Mat3, tolerance: f64) -> Result<Vec3, AlgebraError> {
    let residual = s.sym().norm();
    if residual > tolerance || !residual.is_finite() {
        return Err(AlgebraError::NotSkew { residual, tolerance });
    }
    let k = s.skew_part();
    Ok(Vec3([k.0[2][1], k.0[0][2], k.0[1][0]]))
}

/// Proper orthogonal tensor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat3", into = "Mat3")]
pub struct Rotation(Mat3);

impl TryFrom<Mat3> for Rotation {
    type Error = AlgebraError;
    fn try_from(m: Mat3) -> Result<Self, AlgebraError> {
        Rotation::from_matrix(m)
    }
}

impl From<Rotation> for Mat3 {
    fn from(r: Rotation) -> Mat3 {
        r.0
    }
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::IDENTITY
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation(Mat3::IDENTITY);

    /// Accept `m` if it is orthogonal with positive determinant to [`ROTATION_TOLERANCE`].
    pub fn from_matrix(m: Mat3) -> Result<Rotation, AlgebraError> {
        let orthogonality = orthogonality_residual(&m);
        let det = m.det();
        if orthogonality > ROTATION_TOLERANCE || (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(AlgebraError::NotRotation { orthogonality, det });
        }
        Ok(Rotation(m))
    }

    /// Nearest rotation in the Frobenius sense (orthogonal polar factor).
    ///
    /// Newton iteration `X ← ½(X + X⁻ᵀ)`; converges quadratically from any
    /// nonsingular start with positive determinant.
    pub fn project(m: &Mat3) -> Result<Rotation, AlgebraError> {
        let det = m.det();
        if !(det > 0.0) || !m.is_finite() {
            return Err(AlgebraError::NotRotation { orthogonality: orthogonality_residual(m), det });
        }
        let mut x = *m;
        for _ in 0..64 {
            if orthogonality_residual(&x) < 1e-15 {
                break;
            }
            let inv_t = match x.inverse() {
                Some(inv) => inv.transpose(),
                None => return Err(AlgebraError::NotRotation { orthogonality: f64::INFINITY, det }),
            };
            x = (x + inv_t) * 0.5;
        }
        Rotation::from_matrix(x)
    }

    /// Rotation with the given columns (the director triad `dᵢ = R eᵢ`).
    pub fn from_directors(d1: Vec3, d2: Vec3, d3: Vec3) -> Result<Rotation, AlgebraError> {
        Rotation::from_matrix(Mat3::from_cols(d1, d2, d3))
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn director(&self, k: usize) -> Vec3 {
        self.0.col(k)
    }

    pub fn transpose(&self) -> Rotation {
        Rotation(self.0.transpose())
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        self.0 * *v
    }

    /// Product `self · other`, re-projected onto SO(3).
    pub fn compose(&self, other: &Rotation) -> Rotation {
        let m = self.0 * other.0;
        if orthogonality_residual(&m) < ROTATION_TOLERANCE * 0.1 {
            Rotation(m)
        } else {
            // Products of two rotations stay far inside the basin of the polar iteration.
            Rotation::project(&m).expect("product of rotations is nonsingular")
        }
    }

    /// Left multiplicative update `exp(skew(w)) · self`.
    pub fn perturb_left(&self, w: &Vec3) -> Rotation {
        exp_so3(w).compose(self)
    }

    pub fn angle(&self) -> f64 {
        ((self.0.trace() - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
    }
}

/// `‖RᵀR − 1‖` (Frobenius).
pub fn orthogonality_residual(m: &Mat3) -> f64 {
    (m.transpose() * *m - Mat3::IDENTITY).norm()
}

/// Rodrigues formula for `exp(skew(w))`.
pub fn exp_so3(w: &Vec3) -> Rotation {
    let theta2 = w.norm_squared();
    let theta = theta2.sqrt();
    let k = skew(w);
    let k2 = k * k;
    let (a, b) = if theta < SMALL_ANGLE {
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    Rotation(Mat3::IDENTITY + k * a + k2 * b)
}

/// Rotation vector of `r`; rejects angles within [`NEAR_PI_MARGIN`] of π.
pub fn log_so3(r: &Rotation) -> Result<Vec3, AlgebraError> {
    let angle = r.angle();
    if std::f64::consts::PI - angle < NEAR_PI_MARGIN {
        return Err(AlgebraError::NearPi { angle, margin: NEAR_PI_MARGIN });
    }
    Ok(log_so3_unchecked(r))
}

/// Rotation vector of `r` without the near-π gate. Near π the axis is
/// recovered from the symmetric part, which is accurate but sign-ambiguous.
pub fn log_so3_unchecked(r: &Rotation) -> Vec3 {
    let m = r.matrix();
    let angle = r.angle();
    let v = Vec3([m.0[2][1] - m.0[1][2], m.0[0][2] - m.0[2][0], m.0[1][0] - m.0[0][1]]);
    if angle < SMALL_ANGLE {
        // sin θ / θ ≈ 1 − θ²/6
        return v * (0.5 * (1.0 + angle * angle / 6.0));
    }
    if std::f64::consts::PI - angle < 1e-6 {
        // R ≈ 2 n⊗n − 1: take the largest column of (R + 1)/2.
        let b = (*m + Mat3::IDENTITY) * 0.5;
        let mut best = 0;
        for k in 1..3 {
            if b.0[k][k] > b.0[best][best] {
                best = k;
            }
        }
        let mut n = b.col(best) * (1.0 / b.0[best][best].max(0.0).sqrt());
        if n.dot(&v) < 0.0 {
            n = -n;
        }
        return n.normalized() * angle;
    }
    v * (0.5 * angle / angle.sin())
}

/// Rotation by `theta` about the unit axis `d3`:
/// `R_θ = d₃⊗d₃ + cos θ (1 − d₃⊗d₃) + sin θ (d₃ × 1)`.
pub fn drill_rotation(d3: &Vec3, theta: f64) -> Result<Rotation, AlgebraError> {
    let norm = d3.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(AlgebraError::NonUnitAxis { norm });
    }
    let p = d3.outer(d3);
    let m = p + (Mat3::IDENTITY - p) * theta.cos() + skew(d3) * theta.sin();
    Ok(Rotation(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn rand_vec(rng: &mut ChaCha8Rng, scale: f64) -> Vec3 {
        Vec3::new(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        )
    }

    #[test]
    fn skew_basis_and_cross_product() {
        assert_eq!(skew(&Vec3::ZERO), Mat3::ZERO);
        let s = skew(&Vec3::unit(2));
        assert_eq!(s[(0, 1)], -1.0);
        assert_eq!(s[(1, 0)], 1.0);
        assert_eq!(s.norm_squared(), 2.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let v = rand_vec(&mut rng, 2.0);
        for _ in 0..100 {
            let w = rand_vec(&mut rng, 2.0);
            assert!((skew(&v) * w - v.cross(&w)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn axl_inverts_skew() {
        assert_eq!(axl(&skew(&Vec3::new(1.0, 2.0, 3.0))).unwrap(), Vec3::new(1.0, 2.0, 3.0));
        assert_eq!(axl(&Mat3::ZERO).unwrap(), Vec3::ZERO);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let v = rand_vec(&mut rng, 10.0);
            let s = skew(&v);
            assert!((axl(&s).unwrap() - v).max_abs() < 1e-14);
            assert!((skew(&axl(&s).unwrap()) - s).max_abs() < 1e-14);
        }
    }

    #[test]
    fn axl_rejects_symmetric_input() {
        let s = skew(&Vec3::new(1.0, 0.0, 0.0)) + Mat3::IDENTITY * 1e-6;
        assert!(matches!(axl(&s), Err(AlgebraError::NotSkew { .. })));
        // Round-off below the gate is removed by taking the skew part.
        let s = skew(&Vec3::new(1.0, 2.0, 3.0)) + Mat3::IDENTITY * 1e-12;
        assert_eq!(axl(&s).unwrap(), Vec3::new(1.0, 2.0, 3.0));
    }

    #[test]
    fn exp_quarter_turn_and_identity() {
        assert_eq!(*exp_so3(&Vec3::ZERO).matrix(), Mat3::IDENTITY);
        let r = exp_so3(&Vec3::new(0.0, 0.0, FRAC_PI_2));
        assert!((r.apply(&Vec3::unit(0)) - Vec3::unit(1)).max_abs() < 1e-15);
    }

    #[test]
    fn exp_inverse_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let w = rand_vec(&mut rng, 3.0);
            let r = exp_so3(&w).compose(&exp_so3(&-w));
            assert!((*r.matrix() - Mat3::IDENTITY).max_abs() < 1e-13);
            let v = rand_vec(&mut rng, 1.0);
            assert!((exp_so3(&w).apply(&v).norm() - v.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn exp_small_angle_branch_is_continuous() {
        let w = Vec3::new(3e-9, -2e-9, 1e-9);
        let series = exp_so3(&w);
        let first_order = Mat3::IDENTITY + skew(&w);
        assert!((*series.matrix() - first_order).max_abs() < 1e-17);
    }

    #[test]
    fn log_round_trips() {
        assert_eq!(log_so3(&Rotation::IDENTITY).unwrap(), Vec3::ZERO);
        let w = Vec3::new(0.1, 0.2, 0.3);
        assert!((log_so3(&exp_so3(&w)).unwrap() - w).max_abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let axis = rand_vec(&mut rng, 1.0).normalized();
            let r = exp_so3(&(axis * 3.0));
            let back = exp_so3(&log_so3(&r).unwrap());
            assert!((*back.matrix() - *r.matrix()).max_abs() < 1e-9);
        }
    }

    #[test]
    fn log_flags_near_pi() {
        let r = exp_so3(&Vec3::new(0.0, PI - 1e-4, 0.0));
        assert!(matches!(log_so3(&r), Err(AlgebraError::NearPi { .. })));
        let w = log_so3_unchecked(&r);
        assert!((w.norm() - (PI - 1e-4)).abs() < 1e-8);
    }

    #[test]
    fn drill_rotation_cases() {
        let d3 = Vec3::unit(2);
        assert!((*drill_rotation(&d3, 0.0).unwrap().matrix() - Mat3::IDENTITY).max_abs() < 1e-16);
        let r = drill_rotation(&d3, FRAC_PI_2).unwrap();
        assert!((r.apply(&Vec3::unit(0)) - Vec3::unit(1)).max_abs() < 1e-15);
        assert!((r.apply(&Vec3::unit(1)) + Vec3::unit(0)).max_abs() < 1e-15);
        assert!((r.apply(&d3) - d3).max_abs() < 1e-16);
        assert!(matches!(drill_rotation(&Vec3::new(0.0, 0.0, 2.0), 0.1), Err(AlgebraError::NonUnitAxis { .. })));
    }

    #[test]
    fn drill_rotation_matches_exponential() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let d3 = rand_vec(&mut rng, 1.0).normalized();
            let theta = rng.gen_range(-PI..PI);
            let a = drill_rotation(&d3, theta).unwrap();
            let b = exp_so3(&(d3 * theta));
            assert!((*a.matrix() - *b.matrix()).max_abs() < 1e-13);
        }
    }

    #[test]
    fn polar_projection_restores_orthogonality() {
        let r = exp_so3(&Vec3::new(0.3, -0.2, 0.9));
        let noisy = *r.matrix() + Mat3([[1e-7, 0.0, 2e-7], [0.0, -1e-7, 0.0], [3e-8, 0.0, 0.0]]);
        let p = Rotation::project(&noisy).unwrap();
        assert!(orthogonality_residual(p.matrix()) < 1e-14);
        assert!((*p.matrix() - *r.matrix()).max_abs() < 1e-6);
        assert!(Rotation::from_matrix(noisy).is_err());
    }

    #[test]
    fn inverse_and_det() {
        let m = Mat3([[2.0, 1.0, 0.0], [0.0, 3.0, 1.0], [1.0, 0.0, 1.0]]);
        let inv = m.inverse().unwrap();
        assert!((m * inv - Mat3::IDENTITY).max_abs() < 1e-15);
        assert_eq!(m.det(), 7.0);
        assert!(Mat3::ZERO.inverse().is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn vec3() -> impl Strategy<Value = Vec3> {
            (-4.0..4.0f64, -4.0..4.0f64, -4.0..4.0f64).prop_map(|(a, b, c)| Vec3::new(a, b, c))
        }

        proptest! {
            #[test]
            fn exp_is_on_so3(w in vec3()) {
                let r = exp_so3(&w);
                prop_assert!(orthogonality_residual(r.matrix()) < 1e-12);
                prop_assert!(r.matrix().det() > 0.0);
            }

            #[test]
            fn drill_is_one_parameter_group(d in vec3(), t1 in -3.0..3.0f64, t2 in -3.0..3.0f64) {
                prop_assume!(d.norm() > 1e-3);
                let d3 = d.normalized();
                let a = drill_rotation(&d3, t1).unwrap().compose(&drill_rotation(&d3, t2).unwrap());
                let b = drill_rotation(&d3, t1 + t2).unwrap();
                prop_assert!((*a.matrix() - *b.matrix()).max_abs() < 1e-12);
                prop_assert!((drill_rotation(&d3, t1).unwrap().apply(&d3) - d3).max_abs() < 1e-13);
            }

            #[test]
            fn axl_skew_identity(v in vec3()) {
                prop_assert!((axl(&skew(&v)).unwrap() - v).max_abs() < 1e-14);
            }
        }
    }
}
