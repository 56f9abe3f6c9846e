//! Uniform tensor grids on `[-L, L)^n` and functions sampled on them.

use std::io::{Read, Write};

use base64::Engine as _;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 3;
/// Smallest supported points per axis.
pub const MIN_POINTS: usize = 8;

/// Uniform grid `x_i = -L + i h`, `h = 2L/N`, on every axis.
///
/// The same grid describes the frequency samples `xi_j = j pi / L`,
/// `j = -N/2 .. N/2 - 1`, produced by the discrete Fourier transform.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

/// Half widths are compared with a relative tolerance so that `g.dual().dual() == g`.
impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.points_per_axis == other.points_per_axis
            && (self.half_width - other.half_width).abs() <= 1e-12 * self.half_width.max(other.half_width)
    }
}

/// Which variable a sampled function is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Space,
    Frequency,
}

impl Grid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(1..=MAX_DIM).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..={MAX_DIM}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width {half_width} must be positive and finite")));
        }
        if points_per_axis < MIN_POINTS || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {points_per_axis} must be a power of two >= {MIN_POINTS}"
            )));
        }
        let total = (points_per_axis as u128).pow(dim as u32);
        if total > (1u128 << 28) {
            return Err(Error::InvalidGrid(format!("{total} samples is too many")));
        }
        Ok(Self { dim, half_width, points_per_axis })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Total number of samples `N^n`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Space step `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Frequency step `pi / L`.
    pub fn frequency_spacing(&self) -> f64 {
        std::f64::consts::PI / self.half_width
    }

    /// Largest frequency magnitude on the grid, `pi N / (2L)`.
    pub fn max_frequency(&self) -> f64 {
        std::f64::consts::PI * self.points_per_axis as f64 / (2.0 * self.half_width)
    }

    /// Grid whose space samples coincide with the frequency samples of `self`.
    pub fn dual(&self) -> Grid {
        Grid { dim: self.dim, half_width: self.max_frequency(), points_per_axis: self.points_per_axis }
    }

    /// Same domain with twice the points per axis.
    pub fn refined(&self) -> Result<Grid> {
        Grid::new(self.dim, self.half_width, 2 * self.points_per_axis)
    }

    /// Quadrature weight of one cell on the given side.
    pub fn cell_volume(&self, side: Side) -> f64 {
        let step = match side {
            Side::Space => self.spacing(),
            Side::Frequency => self.frequency_spacing(),
        };
        step.powi(self.dim as i32)
    }

    /// Axis sample positions on the given side, in increasing order.
    pub fn axis(&self, side: Side) -> Vec<f64> {
        let n = self.points_per_axis;
        match side {
            Side::Space => {
                let h = self.spacing();
                (0..n).map(|i| -self.half_width + i as f64 * h).collect()
            }
            Side::Frequency => {
                let d = self.frequency_spacing();
                (0..n).map(|j| (j as f64 - (n / 2) as f64) * d).collect()
            }
        }
    }

    /// Multi-index of a flat (row-major) sample index.
    pub fn multi_index(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut idx = [0; MAX_DIM];
        for a in (0..self.dim).rev() {
            idx[a] = flat % self.points_per_axis;
            flat /= self.points_per_axis;
        }
        idx
    }
}

/// Samples of a complex function on a grid, tagged with its variable.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    grid: Grid,
    side: Side,
    samples: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: Grid, side: Side, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::SampleCount { expected: grid.len(), actual: samples.len() });
        }
        if let Some(i) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, side, samples })
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_parts(grid: Grid, side: Side, samples: Vec<Complex64>) -> Self {
        debug_assert_eq!(samples.len(), grid.len());
        Self { grid, side, samples }
    }

    pub fn zeros(grid: Grid, side: Side) -> Self {
        Self { grid, side, samples: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    /// Samples `f` at every grid point of the given side.
    pub fn from_fn<F>(grid: Grid, side: Side, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let axis = grid.axis(side);
        let dim = grid.dim();
        let mut point = [0.0; MAX_DIM];
        let mut samples = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            let idx = grid.multi_index(flat);
            for a in 0..dim {
                point[a] = axis[idx[a]];
            }
            samples.push(f(&point[..dim]));
        }
        Self::new(grid, side, samples)
    }

    /// Tensor product `prod_j g_j(x_j)` from per-axis sample vectors.
    pub fn from_tensor(grid: Grid, side: Side, factors: &[Vec<Complex64>]) -> Result<Self> {
        if factors.len() != grid.dim() || factors.iter().any(|v| v.len() != grid.points_per_axis()) {
            return Err(Error::InvalidArgument("tensor factors do not match the grid".into()));
        }
        let mut samples = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            let idx = grid.multi_index(flat);
            let mut v = Complex64::new(1.0, 0.0);
            for (a, fac) in factors.iter().enumerate() {
                v *= fac[idx[a]];
            }
            samples.push(v);
        }
        Self::new(grid, side, samples)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    /// Reinterprets frequency samples as space samples on the dual grid, or back.
    ///
    /// Frequency samples on `G` sit exactly at the space points of `G.dual()`,
    /// so this only swaps tags and never touches data.
    pub fn dual_view(self) -> SampledFunction {
        let grid = self.grid.dual();
        let side = match self.side {
            Side::Space => Side::Frequency,
            Side::Frequency => Side::Space,
        };
        SampledFunction { grid, side, samples: self.samples }
    }

    pub fn require_side(&self, side: Side) -> Result<()> {
        if self.side != side {
            return Err(Error::WrongSide { expected: side, actual: self.side });
        }
        Ok(())
    }

    fn check_compatible(&self, other: &SampledFunction) -> Result<()> {
        if self.grid != other.grid || self.side != other.side {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn scale(&self, c: Complex64) -> SampledFunction {
        self.map(|z| z * c)
    }

    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> SampledFunction {
        SampledFunction { grid: self.grid, side: self.side, samples: self.samples.iter().map(|&z| f(z)).collect() }
    }

    /// Pointwise combination of two functions on the same grid and side.
    pub fn zip_with<F>(&self, other: &SampledFunction, f: F) -> Result<SampledFunction>
    where
        F: Fn(Complex64, Complex64) -> Complex64,
    {
        self.check_compatible(other)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(&a, &b)| f(a, b)).collect();
        Ok(SampledFunction { grid: self.grid, side: self.side, samples })
    }

    pub fn add(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SampledFunction) -> Result<SampledFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Multiplies by a real function of the sample position.
    pub fn multiply_by<F: Fn(&[f64]) -> f64>(&self, w: F) -> SampledFunction {
        let axis = self.grid.axis(self.side);
        let dim = self.grid.dim();
        let mut point = [0.0; MAX_DIM];
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(flat, &z)| {
                let idx = self.grid.multi_index(flat);
                for a in 0..dim {
                    point[a] = axis[idx[a]];
                }
                z * w(&point[..dim])
            })
            .collect();
        SampledFunction { grid: self.grid, side: self.side, samples }
    }

    /// Largest modulus over all samples.
    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Point reflection `f(-x)` on the grid (index `i -> (N - i) mod N` on each axis).
    pub fn reflected(&self) -> SampledFunction {
        let n = self.grid.points_per_axis();
        let dim = self.grid.dim();
        let mut samples = vec![Complex64::new(0.0, 0.0); self.samples.len()];
        for (flat, &z) in self.samples.iter().enumerate() {
            let idx = self.grid.multi_index(flat);
            let mut target = 0;
            for &i in idx.iter().take(dim) {
                target = target * n + (n - i) % n;
            }
            samples[target] = z;
        }
        SampledFunction { grid: self.grid, side: self.side, samples }
    }
}

/// Validates an integrability exponent in `[1, inf]`.
pub fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// Conjugate exponent, `1/p + 1/p' = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// `(sum |x|^p)^(1/p)` for a plain sequence, `p` in `[1, inf]`.
pub(crate) fn sequence_lp(values: impl Iterator<Item = f64>, p: f64) -> f64 {
    if p.is_infinite() {
        values.fold(0.0, |m, v| m.max(v.abs()))
    } else if p == 1.0 {
        values.map(f64::abs).sum()
    } else if p == 2.0 {
        values.map(|v| v * v).sum::<f64>().sqrt()
    } else {
        // Scale by the maximum to avoid overflow for large p.
        let v: Vec<f64> = values.map(f64::abs).collect();
        let m = v.iter().cloned().fold(0.0, f64::max);
        if m == 0.0 {
            return 0.0;
        }
        m * v.iter().map(|x| (x / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

/// Discrete `L_p` norm with the rectangle rule on the function's side.
pub fn lp_norm(f: &SampledFunction, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let vol = f.grid.cell_volume(f.side);
    let moduli = f.samples.iter().map(|z| z.norm());
    Ok(if p.is_infinite() {
        sequence_lp(moduli, p)
    } else {
        sequence_lp(moduli, p) * vol.powf(1.0 / p)
    })
}

/// Sesquilinear inner product `sum f conj(g) h^n`.
pub fn inner_product(f: &SampledFunction, g: &SampledFunction) -> Result<Complex64> {
    f.check_compatible(g)?;
    let s: Complex64 = f.samples.iter().zip(&g.samples).map(|(a, b)| a * b.conj()).sum();
    Ok(s * f.grid.cell_volume(f.side))
}

/// Bilinear pairing `sum f g h^n`.
pub fn pairing(f: &SampledFunction, g: &SampledFunction) -> Result<Complex64> {
    f.check_compatible(g)?;
    let s: Complex64 = f.samples.iter().zip(&g.samples).map(|(a, b)| a * b).sum();
    Ok(s * f.grid.cell_volume(f.side))
}

const FORMAT_TAG: &str = "mixsmooth.sampled/1";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Envelope {
    format: String,
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
    side: Side,
    /// Free-form description of how the samples were produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<serde_json::Value>,
    /// Little-endian f64 pairs (re, im), base64 encoded.
    payload: String,
}

impl SampledFunction {
    /// Writes the JSON envelope with a base64 payload; round trips bit for bit.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        self.write_tagged(w, None)
    }

    /// As [`write_to`](Self::write_to) with a provenance record in the header.
    pub fn write_with_provenance<W: Write>(&self, w: W, provenance: &serde_json::Value) -> Result<()> {
        self.write_tagged(w, Some(provenance.clone()))
    }

    fn write_tagged<W: Write>(&self, mut w: W, provenance: Option<serde_json::Value>) -> Result<()> {
        let mut bytes = Vec::with_capacity(16 * self.samples.len());
        for z in &self.samples {
            bytes.extend_from_slice(&z.re.to_le_bytes());
            bytes.extend_from_slice(&z.im.to_le_bytes());
        }
        let env = Envelope {
            format: FORMAT_TAG.into(),
            dim: self.grid.dim,
            half_width: self.grid.half_width,
            points_per_axis: self.grid.points_per_axis,
            side: self.side,
            provenance,
            payload: base64::engine::general_purpose::STANDARD.encode(bytes),
        };
        serde_json::to_writer(&mut w, &env)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        Ok(Self::read_with_provenance(r)?.0)
    }

    /// Reads a file and returns its provenance record, if any.
    pub fn read_with_provenance<R: Read>(r: R) -> Result<(Self, Option<serde_json::Value>)> {
        let env: Envelope = serde_json::from_reader(r)?;
        if env.format != FORMAT_TAG {
            return Err(Error::Format(format!("unknown format tag `{}`", env.format)));
        }
        let grid = Grid::new(env.dim, env.half_width, env.points_per_axis)?;
        let bytes = base64::engine::general_purpose::STANDARD
            .decode(env.payload.as_bytes())
            .map_err(|e| Error::Format(format!("payload: {e}")))?;
        if bytes.len() != 16 * grid.len() {
            return Err(Error::SampleCount { expected: grid.len(), actual: bytes.len() / 16 });
        }
        let samples = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok((Self::new(grid, env.side, samples)?, env.provenance))
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian(grid: Grid) -> SampledFunction {
        SampledFunction::from_fn(grid, Side::Space, |x| {
            Complex64::new((-0.5 * x.iter().map(|t| t * t).sum::<f64>()).exp(), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new(0, 1.0, 64).is_err());
        assert!(Grid::new(4, 1.0, 64).is_err());
        assert!(Grid::new(1, 0.0, 64).is_err());
        assert!(Grid::new(1, f64::NAN, 64).is_err());
        assert!(Grid::new(1, 1.0, 100).is_err());
        assert!(Grid::new(1, 1.0, 4).is_err());
    }

    #[test]
    fn axis_layout() {
        let g = Grid::new(1, 4.0, 8).unwrap();
        assert_eq!(g.axis(Side::Space), vec![-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]);
        let xi = g.axis(Side::Frequency);
        assert_relative_eq!(xi[0], -g.max_frequency());
        assert_eq!(xi[4], 0.0);
        assert_eq!(g.dual().axis(Side::Space), xi);
        assert_relative_eq!(g.dual().dual().half_width(), 4.0, max_relative = 1e-15);
    }

    #[test]
    fn gaussian_l2_norm() {
        let f = gaussian(Grid::new(1, 16.0, 512).unwrap());
        let expected = std::f64::consts::PI.powf(0.25);
        assert!((lp_norm(&f, 2.0).unwrap() - expected).abs() < 1e-12);
        assert!((lp_norm(&f, f64::INFINITY).unwrap() - 1.0).abs() < 1e-15);
        let f2 = gaussian(Grid::new(2, 16.0, 256).unwrap());
        assert!((lp_norm(&f2, 2.0).unwrap() - expected * expected).abs() < 1e-12);
    }

    #[test]
    fn zero_has_zero_norm() {
        let f = SampledFunction::zeros(Grid::new(2, 4.0, 16).unwrap(), Side::Space);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(lp_norm(&f, p).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_invalid_exponent_and_samples() {
        let g = Grid::new(1, 4.0, 8).unwrap();
        let f = SampledFunction::zeros(g, Side::Space);
        assert!(matches!(lp_norm(&f, 0.5), Err(Error::InvalidExponent(_))));
        assert!(lp_norm(&f, f64::NAN).is_err());
        let mut s = vec![Complex64::new(0.0, 0.0); 8];
        s[3].re = f64::INFINITY;
        assert!(matches!(SampledFunction::new(g, Side::Space, s), Err(Error::NonFinite(3))));
        assert!(SampledFunction::new(g, Side::Space, vec![]).is_err());
    }

    #[test]
    fn inner_product_and_pairing() {
        let g = Grid::new(1, 16.0, 256).unwrap();
        let f = gaussian(g);
        let ip = inner_product(&f, &f).unwrap();
        assert!((ip.re - lp_norm(&f, 2.0).unwrap().powi(2)).abs() < 1e-13);
        let i = Complex64::new(0.0, 1.0);
        let fi = f.scale(i);
        assert!((pairing(&fi, &fi).unwrap() + ip).norm() < 1e-13);
        assert!((inner_product(&fi, &fi).unwrap() - ip).norm() < 1e-13);
        let other = SampledFunction::zeros(Grid::new(1, 8.0, 256).unwrap(), Side::Space);
        assert!(matches!(inner_product(&f, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn reflection_is_an_involution() {
        let g = Grid::new(2, 3.0, 8).unwrap();
        let f = SampledFunction::from_fn(g, Side::Space, |x| Complex64::new(x[0] + 2.0 * x[1], x[0] * x[1])).unwrap();
        let r = f.reflected();
        assert_eq!(r.reflected(), f);
        // interior points map to their negatives
        let axis = g.axis(Side::Space);
        let idx = 3 * 8 + 5;
        let expected = Complex64::new(-axis[3] - 2.0 * axis[5], axis[3] * axis[5]);
        assert_eq!(r.samples()[idx], expected);
    }

    #[test]
    fn serialization_round_trip() {
        let g = Grid::new(2, 5.5, 16).unwrap();
        let f = SampledFunction::from_fn(g, Side::Frequency, |x| {
            Complex64::new((x[0] * 1.234_567).sin(), (x[1] / 3.0).exp() * 1e-300)
        })
        .unwrap();
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let back = SampledFunction::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, f);
        let bad = String::from_utf8(buf).unwrap().replace("mixsmooth.sampled/1", "other");
        assert!(SampledFunction::read_from(bad.as_bytes()).is_err());
    }

    #[test]
    fn tensor_matches_from_fn() {
        let g = Grid::new(2, 2.0, 8).unwrap();
        let a: Vec<Complex64> = g.axis(Side::Space).iter().map(|&x| Complex64::new(x, 1.0)).collect();
        let b: Vec<Complex64> = g.axis(Side::Space).iter().map(|&x| Complex64::new(x * x, 0.0)).collect();
        let t = SampledFunction::from_tensor(g, Side::Space, &[a, b]).unwrap();
        let f = SampledFunction::from_fn(g, Side::Space, |x| Complex64::new(x[0], 1.0) * x[1] * x[1]).unwrap();
        assert_eq!(t, f);
    }
}
