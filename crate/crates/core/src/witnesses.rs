//! Explicit function families used to probe continuity, compactness and
//! sharpness of the Fourier transform, and the seeded test corpus.
//!
//! Annulus witnesses are products of dilated copies of one smooth bump
//! supported in `(0.8, 0.95)`. The canonical partition is exactly one on the
//! scaled interval `(0.75, 1]`, so a witness at level vector `k`, read as a
//! frequency-side object, meets the single piece `phi_k` and no other.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{Grid, SampledFunction, Side};
use crate::partition::max_admissible_level;
use crate::wavelet::WaveletSystem;

/// Support of the annulus bump.
pub const BUMP_SUPPORT: (f64, f64) = (0.8, 0.95);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessFamily {
    /// `2^{-[k]/p} prod_j psi(2^{-k_j} x_j)` on the space side.
    AnnulusFk,
    /// Same profile placed on the frequency side, normalised by `2^{-[k]/p'}`.
    AnnulusSpectrum,
    /// `e^{imx} (F^{-1} psi)(x)` with `psi` the tensor father wavelet.
    ModulatedFm,
    /// Spectrum `prod_j bump(xi_j - 0.875 * 2^{k_j})`, inside one partition plateau.
    PlateauPacket,
    /// `prod_j exp(-(2^{-k_j} x_j)^2 / 2)`.
    DilatedGaussian,
}

/// `exp(1 - 1/(1 - u^2))` on `(-1, 1)`, zero elsewhere; equals one at `u = 0`.
pub fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

/// The annulus profile `psi(t) = bump((t - 0.875) / 0.075)`.
pub fn annulus_profile(t: f64) -> f64 {
    let (a, b) = BUMP_SUPPORT;
    bump((t - 0.5 * (a + b)) / (0.5 * (b - a)))
}

fn annulus_factors(levels: &[u32], grid: &Grid, side: Side) -> Result<Vec<Vec<Complex64>>> {
    if levels.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!("{} levels for a {}-dimensional grid", levels.len(), grid.dim())));
    }
    // The profile read on the dual side must fit the partition there.
    let dual = match side {
        Side::Space => grid.dual(),
        Side::Frequency => *grid,
    };
    let max = max_admissible_level(&dual);
    let top = *levels.iter().max().unwrap();
    if max.is_none_or(|m| top > m) {
        return Err(Error::LevelTooHigh {
            requested: top as i64,
            max: max.map_or("none".into(), |m| m.to_string()),
        });
    }
    let axis = grid.axis(side);
    Ok(levels
        .iter()
        .map(|&k| {
            let s = (-(k as f64)).exp2();
            axis.iter().map(|&x| Complex64::new(annulus_profile(s * x), 0.0)).collect()
        })
        .collect())
}

/// Space-side annulus witness with `k = (k1, 0, ..., 0)`.
pub fn annulus_witness(k1: u32, p: f64, grid: &Grid) -> Result<SampledFunction> {
    let mut levels = vec![0; grid.dim()];
    levels[0] = k1;
    annulus_witness_at(&levels, p, grid)
}

/// Space-side annulus witness `2^{-[k]/p} prod_j psi(2^{-k_j} x_j)` for a full level vector.
pub fn annulus_witness_at(levels: &[u32], p: f64, grid: &Grid) -> Result<SampledFunction> {
    crate::grid::check_exponent(p)?;
    let factors = annulus_factors(levels, grid, Side::Space)?;
    let bracket: u32 = levels.iter().sum();
    let f = SampledFunction::from_tensor(*grid, Side::Space, &factors)?;
    Ok(f.scale(Complex64::new((-(bracket as f64) / p).exp2(), 0.0)))
}

/// Space function whose spectrum is the annulus profile at `levels`,
/// normalised by `2^{-[k]/p'}` so that its `S^0_p B` norm stays of order one.
pub fn annulus_spectrum_witness(levels: &[u32], p: f64, grid: &Grid) -> Result<SampledFunction> {
    crate::grid::check_exponent(p)?;
    let factors = annulus_factors(levels, grid, Side::Frequency)?;
    let bracket: u32 = levels.iter().sum();
    let pp = crate::grid::conjugate_exponent(p);
    let spec = SampledFunction::from_tensor(*grid, Side::Frequency, &factors)?;
    fourier::inverse(&spec.scale(Complex64::new((-(bracket as f64) / pp).exp2(), 0.0)))
}

/// Tensor father wavelet translated by `m`, sampled on the frequency grid.
pub fn translated_father(m: &[i64], system: &WaveletSystem, grid: &Grid) -> Result<SampledFunction> {
    if m.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!("{} shifts for a {}-dimensional grid", m.len(), grid.dim())));
    }
    let top = grid.max_frequency();
    let len = system.support_length() as f64;
    for &mj in m {
        let (lo, hi) = (mj as f64, mj as f64 + len);
        if lo < -top || hi >= top {
            return Err(Error::SupportEscapes(format!("shift {mj}: [{lo}, {hi}] leaves the frequency window [-{top}, {top})")));
        }
    }
    let axis = grid.axis(Side::Frequency);
    let factors: Vec<Vec<Complex64>> =
        m.iter().map(|&mj| axis.iter().map(|&xi| Complex64::new(system.father(xi - mj as f64), 0.0)).collect()).collect();
    SampledFunction::from_tensor(*grid, Side::Frequency, &factors)
}

/// `f_m = F^{-1} psi(. - m)`.
///
/// When `L` is a multiple of `pi` integer shifts move the frequency samples by
/// whole grid steps, and `f_m` is exactly `e^{imx} f_0` on the grid.
pub fn modulated_witness(m: &[i64], system: &WaveletSystem, grid: &Grid) -> Result<SampledFunction> {
    fourier::inverse(&translated_father(m, system, grid)?)
}

/// Lowest level whose plateau `[0.75, 1] 2^k` holds a packet of half-width one.
pub const PLATEAU_PACKET_MIN_LEVEL: u32 = 3;

/// Space function whose spectrum is a unit half-width bump centred in the plateau of `phi_k`.
///
/// The envelope does not change with `k`, so `|f|` is the same for every level
/// whenever the centres are whole multiples of the frequency step.
pub fn plateau_packet(levels: &[u32], grid: &Grid) -> Result<SampledFunction> {
    if levels.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!("{} levels for a {}-dimensional grid", levels.len(), grid.dim())));
    }
    if let Some(&l) = levels.iter().find(|&&l| l < PLATEAU_PACKET_MIN_LEVEL) {
        return Err(Error::InvalidArgument(format!("plateau packets need levels >= {PLATEAU_PACKET_MIN_LEVEL}, got {l}")));
    }
    let top = *levels.iter().max().unwrap();
    let max = max_admissible_level(grid);
    if max.is_none_or(|m| top > m) {
        return Err(Error::LevelTooHigh { requested: top as i64, max: max.map_or("none".into(), |m| m.to_string()) });
    }
    let axis = grid.axis(Side::Frequency);
    let factors: Vec<Vec<Complex64>> = levels
        .iter()
        .map(|&k| {
            let c = 0.875 * (k as f64).exp2();
            axis.iter().map(|&xi| Complex64::new(bump(xi - c), 0.0)).collect()
        })
        .collect();
    fourier::inverse(&SampledFunction::from_tensor(*grid, Side::Frequency, &factors)?)
}

/// `prod_j exp(-(2^{-k_j} x_j)^2 / 2)`; its image has bands up to about level `k`.
pub fn dilated_gaussian(levels: &[u32], grid: &Grid) -> Result<SampledFunction> {
    if levels.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!("{} levels for a {}-dimensional grid", levels.len(), grid.dim())));
    }
    let top = *levels.iter().max().unwrap();
    let max = max_admissible_level(&grid.dual());
    if max.is_none_or(|m| top > m) {
        return Err(Error::LevelTooHigh { requested: top as i64, max: max.map_or("none".into(), |m| m.to_string()) });
    }
    let axis = grid.axis(Side::Space);
    let factors: Vec<Vec<Complex64>> = levels
        .iter()
        .map(|&k| {
            let s = (-(k as f64)).exp2();
            axis.iter().map(|&x| Complex64::new((-0.5 * (s * x).powi(2)).exp(), 0.0)).collect()
        })
        .collect();
    SampledFunction::from_tensor(*grid, Side::Space, &factors)
}

/// Largest modulus on the boundary faces of the grid, relative to the overall maximum.
pub fn boundary_decay(f: &SampledFunction) -> f64 {
    let grid = f.grid();
    let n = grid.points_per_axis();
    let max = f.max_abs();
    if max == 0.0 {
        return 0.0;
    }
    let mut edge: f64 = 0.0;
    for (flat, z) in f.samples().iter().enumerate() {
        let idx = grid.multi_index(flat);
        if idx[..grid.dim()].iter().any(|&i| i == 0 || i == n - 1) {
            edge = edge.max(z.norm());
        }
    }
    edge / max
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    UnitGaussian,
    TensorGaussian,
    ModulatedBump,
    BandLimited,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusMember {
    pub id: String,
    pub kind: MemberKind,
    pub function: SampledFunction,
}

/// Centres are drawn from `[-CENTER_RANGE, CENTER_RANGE]` per axis.
pub const CENTER_RANGE: f64 = 1.5;
/// Gaussian widths are drawn from this range.
pub const WIDTH_RANGE: (f64, f64) = (0.6, 0.9);
/// Bound on the Euclidean length of any modulation.
pub const MAX_MODULATION: f64 = 8.0;

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if r > 0.1 && r <= 1.0 {
            return v.into_iter().map(|t| t / r).collect();
        }
    }
}

enum Recipe {
    Gaussian { center: Vec<f64>, width: Vec<f64> },
    Modulated { center: Vec<f64>, width: f64, omega: Vec<f64> },
    Band { center: Vec<f64>, width: f64, terms: Vec<(Complex64, Vec<f64>)> },
}

impl Recipe {
    fn draw(kind: MemberKind, rng: &mut ChaCha8Rng, dim: usize) -> Recipe {
        let center = |rng: &mut ChaCha8Rng| (0..dim).map(|_| rng.gen_range(-CENTER_RANGE..=CENTER_RANGE)).collect::<Vec<_>>();
        let (w0, w1) = WIDTH_RANGE;
        match kind {
            MemberKind::UnitGaussian => Recipe::Gaussian { center: vec![0.0; dim], width: vec![1.0; dim] },
            MemberKind::TensorGaussian => {
                let c = center(rng);
                let width = (0..dim).map(|_| rng.gen_range(w0..=w1)).collect();
                Recipe::Gaussian { center: c, width }
            }
            MemberKind::ModulatedBump => {
                let c = center(rng);
                let width = rng.gen_range(w0..=w1);
                let band: i32 = rng.gen_range(1..=3);
                let radius = rng.gen_range((band - 1) as f64..=band as f64).exp2().min(MAX_MODULATION);
                let omega = unit_vector(rng, dim).into_iter().map(|t| t * radius).collect();
                Recipe::Modulated { center: c, width, omega }
            }
            MemberKind::BandLimited => {
                let c = center(rng);
                let width = rng.gen_range(0.7..=w1);
                let terms = (0..4)
                    .map(|j| {
                        let amp = (-(j as f64)).exp2();
                        let a = Complex64::from_polar(amp * rng.gen_range(0.5..=1.0), rng.gen_range(0.0..std::f64::consts::TAU));
                        let radius = rng.gen_range(0.0..=(j as f64).exp2()).min(MAX_MODULATION);
                        let omega = unit_vector(rng, dim).into_iter().map(|t| t * radius).collect();
                        (a, omega)
                    })
                    .collect();
                Recipe::Band { center: c, width, terms }
            }
        }
    }

    fn eval(&self, x: &[f64]) -> Complex64 {
        let gauss = |c: &[f64], w: &dyn Fn(usize) -> f64| {
            (-(0..x.len()).map(|a| (x[a] - c[a]).powi(2) / (2.0 * w(a) * w(a))).sum::<f64>()).exp()
        };
        let dot = |o: &[f64]| x.iter().zip(o).map(|(a, b)| a * b).sum::<f64>();
        match self {
            Recipe::Gaussian { center, width } => Complex64::new(gauss(center, &|a| width[a]), 0.0),
            Recipe::Modulated { center, width, omega } => Complex64::from_polar(gauss(center, &|_| *width), dot(omega)),
            Recipe::Band { center, width, terms } => {
                let env = gauss(center, &|_| *width);
                terms.iter().map(|(a, o)| a * Complex64::from_polar(env, dot(o))).sum()
            }
        }
    }
}

/// Deterministic test family; member `0` is the unit Gaussian `e^{-|x|^2/2}`.
///
/// Members are drawn sequentially, so a shorter corpus is a prefix of a longer
/// one with the same seed. All members have Gaussian envelopes with widths in
/// [`WIDTH_RANGE`] centred within [`CENTER_RANGE`] and modulations of length at
/// most [`MAX_MODULATION`]; on grids with `L >= 12` and covered band `2^K >= 24`
/// their boundary values and spectral tails are below `1e-12`.
pub fn corpus(seed: u64, count: usize, grid: &Grid) -> Result<Vec<CorpusMember>> {
    if count == 0 {
        return Err(Error::InvalidArgument("corpus size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kinds = [MemberKind::TensorGaussian, MemberKind::ModulatedBump, MemberKind::BandLimited];
    (0..count)
        .map(|i| {
            let kind = if i == 0 { MemberKind::UnitGaussian } else { kinds[(i - 1) % kinds.len()] };
            let recipe = Recipe::draw(kind, &mut rng, grid.dim());
            let function = SampledFunction::from_fn(*grid, Side::Space, |x| recipe.eval(x))?;
            let tag = match kind {
                MemberKind::UnitGaussian => "unit-gaussian",
                MemberKind::TensorGaussian => "tensor-gaussian",
                MemberKind::ModulatedBump => "modulated",
                MemberKind::BandLimited => "band",
            };
            Ok(CorpusMember { id: format!("c{i:02}-{tag}"), kind, function })
        })
        .collect()
}
