//! Seeded band-limited random fields on the grid.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra3::{exp_so3, Vec3};
use crate::kinematics::Configuration;
use crate::surface::ReferenceSurface;

/// Highest wavenumber in each direction.
pub const MAX_WAVENUMBER: u32 = 2;

/// Sum of a few low-frequency Fourier modes in `(x₁, x₂)`.
#[derive(Clone, Debug)]
pub struct SmoothField {
    modes: Vec<Mode>,
}

#[derive(Clone, Debug)]
struct Mode {
    k: [f64; 2],
    phase: f64,
    amplitude: Vec3,
}

impl SmoothField {
    /// `modes` terms with amplitudes uniform in `[−1, 1]`, normalized so the
    /// field is bounded by `amplitude`.
    pub fn random<R: Rng>(rng: &mut R, modes: usize, amplitude: f64) -> SmoothField {
        let n = modes.max(1);
        let modes = (0..n)
            .map(|_| Mode {
                k: [
                    rng.gen_range(0..=MAX_WAVENUMBER) as f64 * std::f64::consts::PI,
                    rng.gen_range(0..=MAX_WAVENUMBER) as f64 * std::f64::consts::PI,
                ],
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
                amplitude: Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                    * (amplitude / (n as f64 * 3f64.sqrt())),
            })
            .collect();
        SmoothField { modes }
    }

    pub fn eval(&self, x: [f64; 2]) -> Vec3 {
        self.modes
            .iter()
            .fold(Vec3::ZERO, |acc, m| acc + m.amplitude * (m.k[0] * x[0] + m.k[1] * x[1] + m.phase).cos())
    }

    pub fn sample(&self, surf: &ReferenceSurface) -> Vec<Vec3> {
        surf.nodes.iter().map(|g| self.eval(g.x)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomConfigSpec {
    pub displacement: f64,
    pub rotation: f64,
    pub modes: usize,
}

impl Default for RandomConfigSpec {
    fn default() -> Self {
        RandomConfigSpec { displacement: 0.2, rotation: 0.5, modes: 5 }
    }
}

/// `y = y⁰ + u`, `R = exp(skew w) Q⁰` with smooth random `u`, `w`.
pub fn random_configuration(surf: &ReferenceSurface, spec: &RandomConfigSpec, seed: u64) -> Configuration {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = SmoothField::random(&mut rng, spec.modes, spec.displacement);
    let w = SmoothField::random(&mut rng, spec.modes, spec.rotation);
    Configuration {
        y: surf.nodes.iter().map(|g| g.y0 + u.eval(g.x)).collect(),
        r: surf.nodes.iter().map(|g| exp_so3(&w.eval(g.x)).compose(&g.q0)).collect(),
    }
}
