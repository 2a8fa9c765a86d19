//! Geometric mmWave channel synthesis: planar-array response vectors,
//! path-parameter sampling, and channel matrix construction.
//!
//! A channel between the base station and one mobile station is a sum of a
//! few discrete propagation paths. Each path carries a complex gain and a
//! departure/arrival direction pair; the channel matrix is the scaled sum of
//! outer products of the matching array response vectors. All angles are
//! radians internally; degrees only appear at the CLI boundary.

use crate::mat::{C64, CMat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

/// Uniform planar array shape; a uniform linear array is `rows x 1`.
/// Element spacing is half the carrier wavelength, baked into the response
/// formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ArrayGeometry {
    rows: usize,
    cols: usize,
}

impl ArrayGeometry {
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "array needs at least one element");
        Self { rows, cols }
    }

    pub fn linear(elements: usize) -> Self {
        Self::new(elements, 1)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }
}

/// One propagation path: complex gain plus azimuth/elevation angles of
/// departure (base station side) and arrival (mobile station side).
#[derive(Debug, Clone, Copy)]
pub struct Path {
    pub gain: C64,
    pub aod_azimuth: f64,
    pub aod_elevation: f64,
    pub aoa_azimuth: f64,
    pub aoa_elevation: f64,
}

/// The ordered, non-empty path list describing one user's channel.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub user: usize,
    pub paths: Vec<Path>,
}

impl PathSet {
    pub fn new(user: usize, paths: Vec<Path>) -> Self {
        assert!(!paths.is_empty(), "a path set must hold at least one path");
        Self { user, paths }
    }
}

/// Synthesized channel matrix, mobile-station rows by base-station columns.
pub type ChannelMatrix = CMat;

/// Unit-norm response vector of an `M x N` planar array for the given
/// azimuth/elevation direction.
///
/// Entry for element `(m, n)` sits at index `m * N + n` (row-major over the
/// array grid; this ordering is part of the determinism contract) and equals
/// `exp(j*pi*(m*sin(phi)*sin(theta) + n*cos(theta))) / sqrt(M*N)`.
pub fn upa_response(phi: f64, theta: f64, geometry: ArrayGeometry) -> Vec<C64> {
    let (m_rows, n_cols) = (geometry.rows, geometry.cols);
    let scale = 1.0 / ((m_rows * n_cols) as f64).sqrt();
    let u = phi.sin() * theta.sin();
    let v = theta.cos();
    let mut out = Vec::with_capacity(m_rows * n_cols);
    for m in 0..m_rows {
        for n in 0..n_cols {
            let phase = PI * (m as f64 * u + n as f64 * v);
            out.push(C64::new(scale * phase.cos(), scale * phase.sin()));
        }
    }
    out
}

/// Builds the channel matrix from a path set:
/// `sqrt(N_bs * N_ms / L) * sum_l gain_l * a_ms a_bs^H`.
pub fn synthesize_channel(
    path_set: &PathSet,
    bs_geom: ArrayGeometry,
    ms_geom: ArrayGeometry,
) -> ChannelMatrix {
    let n_bs = bs_geom.elements();
    let n_ms = ms_geom.elements();
    let l = path_set.paths.len();
    let prefactor = ((n_bs * n_ms) as f64 / l as f64).sqrt();

    let mut h = CMat::zeros(n_ms, n_bs);
    for path in &path_set.paths {
        let a_ms = upa_response(path.aoa_azimuth, path.aoa_elevation, ms_geom);
        let a_bs = upa_response(path.aod_azimuth, path.aod_elevation, bs_geom);
        let weight = path.gain * prefactor;
        for (i, &ams) in a_ms.iter().enumerate() {
            let row_scale = weight * ams;
            for (j, &abs_) in a_bs.iter().enumerate() {
                h[(i, j)] += row_scale * abs_.conj();
            }
        }
    }
    debug_assert!(h.is_finite());
    h
}

/// Draws `count` path sets of `paths_per_user` paths each from the given RNG
/// stream.
///
/// Per user (ascending), per path (ascending), the draw order is fixed:
/// gain real part, gain imaginary part, departure azimuth, departure
/// elevation, arrival azimuth, arrival elevation. Azimuths are uniform on
/// `[0, 2*pi)`, elevations uniform on `[-pi/2, pi/2]`, gains circular complex
/// Gaussian with unit variance (real and imaginary parts N(0, 1/2)).
pub fn sample_scenario_with_rng<R: Rng>(
    rng: &mut R,
    users: usize,
    paths_per_user: usize,
) -> Vec<PathSet> {
    assert!(users >= 1 && paths_per_user >= 1);
    let gain_scale = std::f64::consts::FRAC_1_SQRT_2;
    (0..users)
        .map(|user| {
            let paths = (0..paths_per_user)
                .map(|_| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    let gain = C64::new(re * gain_scale, im * gain_scale);
                    let aod_azimuth = rng.random_range(0.0..TAU);
                    let aod_elevation = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
                    let aoa_azimuth = rng.random_range(0.0..TAU);
                    let aoa_elevation = rng.random_range(-FRAC_PI_2..=FRAC_PI_2);
                    Path { gain, aod_azimuth, aod_elevation, aoa_azimuth, aoa_elevation }
                })
                .collect();
            PathSet::new(user, paths)
        })
        .collect()
}

/// Seeded scenario draw; identical seeds give bit-identical scenarios.
pub fn sample_scenario(seed: u64, users: usize, paths_per_user: usize) -> Vec<PathSet> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_scenario_with_rng(&mut rng, users, paths_per_user)
}

/// RNG stream for one Monte-Carlo run: the master seed picks the key, the run
/// index picks an independent stream, so runs can execute in any order.
pub fn run_rng(master_seed: u64, run_index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng
}
