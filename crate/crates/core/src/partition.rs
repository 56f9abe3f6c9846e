//! Smooth dyadic resolutions of unity in frequency, isotropic and tensor.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{Grid, SampledFunction, Side, MAX_DIM};

fn sigma(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Radial profile: `1` on `|t| <= 1`, `0` on `|t| >= 3/2`, smooth in between.
pub fn profile(t: f64) -> f64 {
    let t = t.abs();
    let a = sigma(3.0 - 2.0 * t);
    let b = sigma(2.0 * t - 2.0);
    if b == 0.0 {
        1.0
    } else {
        a / (a + b)
    }
}

/// One-dimensional dyadic piece `phi_j(t)`.
pub fn piece_1d(level: u32, t: f64) -> f64 {
    if level == 0 {
        profile(t)
    } else {
        let s = 2f64.powi(-(level as i32));
        profile(s * t) - profile(2.0 * s * t)
    }
}

/// Largest level `K` with `2^K <= (2/3) xi_max`, so every piece fits on the grid.
pub fn max_admissible_level(grid: &Grid) -> Option<u32> {
    let bound = 2.0 * grid.max_frequency() / 3.0;
    if bound < 1.0 {
        None
    } else {
        Some(bound.log2().floor() as u32)
    }
}

pub(crate) fn check_level(grid: &Grid, level: u32) -> Result<()> {
    match max_admissible_level(grid) {
        Some(max) if level <= max => Ok(()),
        max => Err(Error::LevelTooHigh {
            requested: level as i64,
            max: max.map_or("none".into(), |m| m.to_string()),
        }),
    }
}

/// Real multiplier tabulated on the frequency samples of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Multiplier {
    grid: Grid,
    values: Vec<f64>,
}

impl Multiplier {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Pointwise product with a frequency-side function.
    pub fn apply(&self, spectrum: &SampledFunction) -> Result<SampledFunction> {
        spectrum.require_side(Side::Frequency)?;
        if spectrum.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let samples = spectrum.samples().iter().zip(&self.values).map(|(z, m)| z * m).collect();
        Ok(SampledFunction::from_parts(self.grid, Side::Frequency, samples))
    }

    fn tensor(grid: Grid, factors: &[&[f64]]) -> Multiplier {
        let mut values = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            let idx = grid.multi_index(flat);
            values.push(factors.iter().enumerate().map(|(a, f)| f[idx[a]]).product());
        }
        Multiplier { grid, values }
    }
}

/// `(phi_j)_{j=0..=J}` with `phi_0(xi) = s(|xi|)`,
/// `phi_j(xi) = s(2^-j |xi|) - s(2^{-j+1} |xi|)`.
#[derive(Debug, Clone)]
pub struct IsotropicPartition {
    grid: Grid,
    levels: u32,
    pieces: Vec<Multiplier>,
}

impl IsotropicPartition {
    pub fn build(grid: &Grid, levels: u32) -> Result<Self> {
        check_level(grid, levels)?;
        let xi = grid.axis(Side::Frequency);
        let radius: Vec<f64> = (0..grid.len())
            .map(|flat| {
                let idx = grid.multi_index(flat);
                (0..grid.dim()).map(|a| xi[idx[a]] * xi[idx[a]]).sum::<f64>().sqrt()
            })
            .collect();
        let pieces = (0..=levels)
            .map(|j| Multiplier { grid: *grid, values: radius.iter().map(|&r| piece_1d(j, r)).collect() })
            .collect();
        Ok(Self { grid: *grid, levels, pieces })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn piece(&self, j: u32) -> &Multiplier {
        &self.pieces[j as usize]
    }

    pub fn pieces(&self) -> &[Multiplier] {
        &self.pieces
    }

    /// `1 - sum_j phi_j`, the part of frequency space left uncovered.
    pub fn residual(&self) -> Multiplier {
        let mut values = vec![1.0; self.grid.len()];
        for p in &self.pieces {
            for (v, m) in values.iter_mut().zip(&p.values) {
                *v -= m;
            }
        }
        Multiplier { grid: self.grid, values }
    }
}

/// Tensor pieces `phi_k(xi) = prod_l phi_{k_l}(xi_l)`, `k in {0..=K}^n`,
/// kept as one-dimensional factors and materialised on demand.
#[derive(Debug, Clone)]
pub struct TensorPartition {
    grid: Grid,
    levels: u32,
    factors: Vec<Vec<f64>>,
}

impl TensorPartition {
    pub fn build(grid: &Grid, levels: u32) -> Result<Self> {
        check_level(grid, levels)?;
        let xi = grid.axis(Side::Frequency);
        let factors = (0..=levels).map(|l| xi.iter().map(|&t| piece_1d(l, t)).collect()).collect();
        Ok(Self { grid: *grid, levels, factors })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    /// Factor `phi_l` sampled on the frequency axis.
    pub fn axis_factor(&self, level: u32) -> &[f64] {
        &self.factors[level as usize]
    }

    /// All level vectors in lexicographic order.
    pub fn indices(&self) -> Vec<Vec<u32>> {
        let dim = self.grid.dim();
        let count = (self.levels as usize + 1).pow(dim as u32);
        (0..count)
            .map(|mut c| {
                let mut k = vec![0u32; dim];
                for a in (0..dim).rev() {
                    k[a] = (c % (self.levels as usize + 1)) as u32;
                    c /= self.levels as usize + 1;
                }
                k
            })
            .collect()
    }

    pub fn piece(&self, k: &[u32]) -> Result<Multiplier> {
        if k.len() != self.grid.dim() || k.iter().any(|&l| l > self.levels) {
            return Err(Error::InvalidArgument(format!("level vector {k:?} outside the partition")));
        }
        let f: Vec<&[f64]> = k.iter().map(|&l| self.axis_factor(l)).collect();
        Ok(Multiplier::tensor(self.grid, &f))
    }

    /// `1 - sum_k phi_k = 1 - prod_l sum_{j<=K} phi_j(xi_l)`.
    pub fn residual(&self) -> Multiplier {
        let axis: Vec<f64> = (0..self.grid.points_per_axis())
            .map(|i| self.factors.iter().map(|f| f[i]).sum())
            .collect();
        let refs: Vec<&[f64]> = (0..self.grid.dim()).map(|_| axis.as_slice()).collect();
        let mut m = Multiplier::tensor(self.grid, &refs[..self.grid.dim().min(MAX_DIM)]);
        for v in &mut m.values {
            *v = 1.0 - *v;
        }
        m
    }
}

/// Band piece `(phi f^)^v` of a function given on either side.
pub fn lp_piece(f: &SampledFunction, multiplier: &Multiplier) -> Result<SampledFunction> {
    let spectrum = match f.side() {
        Side::Space => fourier::forward(f)?,
        Side::Frequency => f.clone(),
    };
    fourier::inverse(&multiplier.apply(&spectrum)?)
}

/// `||m f^||_2 / ||f^||_2` for a spectrum; zero for the zero function.
pub(crate) fn relative_mass(spectrum: &SampledFunction, m: &Multiplier) -> f64 {
    let total: f64 = spectrum.samples().iter().map(Complex64::norm_sqr).sum();
    if total == 0.0 {
        return 0.0;
    }
    let part: f64 = spectrum.samples().iter().zip(&m.values).map(|(z, w)| z.norm_sqr() * w * w).sum();
    (part / total).sqrt()
}
