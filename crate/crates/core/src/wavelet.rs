//! Compactly supported Daubechies wavelets, their tensor products and the
//! sequence spaces of tensor wavelet coefficients.
//!
//! Level `-1` stands for the father wavelet: `psi_{-1,m}(t) = sqrt(2) psi_F(t - m)`,
//! and `psi_{k,m}(t) = psi_M(2^k t - m)` for `k >= 0`. Coefficients are
//! `lambda_{k,m} = 2^{[k]} (f, psi_{k,m})`, so `f = sum lambda_{k,m} psi_{k,m}`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};
use std::io::{BufRead, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier;
use crate::grid::{sequence_lp, Grid, SampledFunction, Side};
use crate::spaces::{Flavor, NormSettings, SpaceSpec};

/// Supported vanishing moment orders.
pub const MIN_ORDER: usize = 2;
pub const MAX_ORDER: usize = 10;
/// Cascade tabulation step is `2^-RESOLUTION_BITS`.
pub const RESOLUTION_BITS: u32 = 10;

// ---------------------------------------------------------------- filters

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Roots of a real polynomial given by ascending coefficients (Durand-Kerner, Newton polish).
fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let d = coeffs.len() - 1;
    if d == 0 {
        return Vec::new();
    }
    let lead = coeffs[d];
    let c: Vec<Complex64> = coeffs.iter().map(|&a| Complex64::new(a / lead, 0.0)).collect();
    let radius = 1.0 + c[..d].iter().map(|z| z.norm()).fold(0.0, f64::max);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..d).map(|k| seed.powu(k as u32 + 1) * radius.min(4.0)).collect();
    for _ in 0..5000 {
        let mut delta: f64 = 0.0;
        for i in 0..d {
            let num = horner(&c, roots[i]);
            let mut den = Complex64::new(1.0, 0.0);
            for j in 0..d {
                if j != i {
                    den *= roots[i] - roots[j];
                }
            }
            let step = num / den;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-16 {
            break;
        }
    }
    let dc: Vec<Complex64> = (1..=d).map(|k| c[k] * k as f64).collect();
    for r in &mut roots {
        for _ in 0..4 {
            let fp = horner(&dc, *r);
            if fp.norm() == 0.0 {
                break;
            }
            *r -= horner(&c, *r) / fp;
        }
    }
    roots
}

/// Extremal phase Daubechies low-pass filter with `u` vanishing moments,
/// length `2u`, normalised to `sum h_k = sqrt 2`.
pub fn daubechies_filter(u: usize) -> Result<Vec<f64>> {
    if !(MIN_ORDER..=MAX_ORDER).contains(&u) {
        return Err(Error::Unsupported(format!("wavelet order u = {u}, supported {MIN_ORDER}..={MAX_ORDER}")));
    }
    // |m0|^2 = cos^{2u}(w/2) P(sin^2(w/2)), P(y) = sum_j C(u-1+j, j) y^j.
    let p: Vec<f64> = (0..u as u64).map(|j| binomial(u as u64 - 1 + j, j)).collect();
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    let mul = |poly: &mut Vec<Complex64>, root: Complex64| {
        let mut next = vec![Complex64::new(0.0, 0.0); poly.len() + 1];
        for (i, &a) in poly.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * root;
        }
        *poly = next;
    };
    for _ in 0..u {
        mul(&mut poly, Complex64::new(-1.0, 0.0));
    }
    for y in poly_roots(&p) {
        // y = (2 - z - 1/z)/4  <=>  z^2 - 2(1 - 2y) z + 1 = 0; keep the root inside the unit circle.
        let b = Complex64::new(1.0, 0.0) - 2.0 * y;
        let s = (b * b - 1.0).sqrt();
        let (z1, z2) = (b + s, b - s);
        mul(&mut poly, if z1.norm() < z2.norm() { z1 } else { z2 });
    }
    let mut h: Vec<f64> = poly.iter().rev().map(|z| z.re).collect();
    let sum: f64 = h.iter().sum();
    for v in &mut h {
        *v *= SQRT_2 / sum;
    }
    Ok(h)
}

fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[row][c] -= f * a[col][c];
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

// ---------------------------------------------------------------- system

/// Father and mother wavelets of order `u`, tabulated on `2^-10` dyadics of `[0, 2u-1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSystem {
    order: usize,
    filter: Vec<f64>,
    father: Vec<f64>,
    mother: Vec<f64>,
}

impl WaveletSystem {
    pub fn new(u: usize) -> Result<Self> {
        let filter = daubechies_filter(u)?;
        let len = filter.len();
        let support = len - 1;
        // Values at the integers: eigenvector of (sqrt2 h_{2i-j}) for eigenvalue 1, summing to 1.
        let mut a = vec![vec![0.0; len]; len];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let k = 2 * i as i64 - j as i64;
                if (0..len as i64).contains(&k) {
                    *v = SQRT_2 * filter[k as usize];
                }
                if i == j {
                    *v -= 1.0;
                }
            }
        }
        let mut b = vec![0.0; len];
        a[len - 1] = vec![1.0; len];
        b[len - 1] = 1.0;
        let mut values = solve_linear(a, b);
        values[0] = 0.0;
        values[support] = 0.0;
        let refine = |coarse: &[f64], level: u32, taps: &[f64]| -> Vec<f64> {
            let stride = 1usize << (level - 1);
            let n = support * (1 << level) + 1;
            (0..n)
                .map(|t| {
                    let mut s = 0.0;
                    for (k, &hk) in taps.iter().enumerate() {
                        let off = k * stride;
                        if t >= off && t - off < coarse.len() {
                            s += hk * coarse[t - off];
                        }
                    }
                    SQRT_2 * s
                })
                .collect()
        };
        let mut prev = values;
        for level in 1..RESOLUTION_BITS {
            prev = refine(&prev, level, &filter);
        }
        let father = refine(&prev, RESOLUTION_BITS, &filter);
        let high: Vec<f64> =
            (0..len).map(|k| if k % 2 == 0 { filter[len - 1 - k] } else { -filter[len - 1 - k] }).collect();
        let mother = refine(&prev, RESOLUTION_BITS, &high);
        Ok(Self { order: u, filter, father, mother })
    }

    /// Builds a system from raw tables without checking any invariant.
    pub fn from_tables(order: usize, filter: Vec<f64>, father: Vec<f64>, mother: Vec<f64>) -> Result<Self> {
        let n = (2 * order - 1) * (1 << RESOLUTION_BITS) + 1;
        if filter.len() != 2 * order || father.len() != n || mother.len() != n {
            return Err(Error::InvalidArgument("wavelet tables have the wrong length".into()));
        }
        Ok(Self { order, filter, father, mother })
    }

    /// Same shape with all tables zeroed.
    pub fn zeroed(&self) -> Self {
        Self {
            order: self.order,
            filter: vec![0.0; self.filter.len()],
            father: vec![0.0; self.father.len()],
            mother: vec![0.0; self.mother.len()],
        }
    }

    /// Number of vanishing moments `u`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Length `2u - 1` of the support `[0, 2u - 1]` of both wavelets.
    pub fn support_length(&self) -> usize {
        2 * self.order - 1
    }

    pub fn filter(&self) -> &[f64] {
        &self.filter
    }

    /// High-pass taps `g_k = (-1)^k h_{2u-1-k}`.
    pub fn high_pass(&self) -> Vec<f64> {
        let len = self.filter.len();
        (0..len).map(|k| if k % 2 == 0 { self.filter[len - 1 - k] } else { -self.filter[len - 1 - k] }).collect()
    }

    pub fn father_table(&self) -> &[f64] {
        &self.father
    }

    pub fn mother_table(&self) -> &[f64] {
        &self.mother
    }

    fn lookup(&self, table: &[f64], t: f64) -> f64 {
        let s = self.support_length() as f64;
        if !(t > 0.0 && t < s) {
            return 0.0;
        }
        let pos = t * (1u64 << RESOLUTION_BITS) as f64;
        let i = pos.floor();
        let frac = pos - i;
        let i = i as usize;
        if frac == 0.0 {
            table[i]
        } else {
            table[i] * (1.0 - frac) + table[i + 1] * frac
        }
    }

    /// `psi_F(t)`; exact on `2^-10` dyadics, linear in between.
    pub fn father(&self, t: f64) -> f64 {
        self.lookup(&self.father, t)
    }

    /// `psi_M(t)`.
    pub fn mother(&self, t: f64) -> f64 {
        self.lookup(&self.mother, t)
    }

    /// One-dimensional member `psi_{k,m}` at `t`.
    pub fn wavelet_1d(&self, k: i32, m: i64, t: f64) -> f64 {
        if k < 0 {
            SQRT_2 * self.father(t - m as f64)
        } else {
            self.mother((k as f64).exp2() * t - m as f64)
        }
    }

    fn low_pass_symbol(&self, w: f64) -> Complex64 {
        self.filter.iter().enumerate().map(|(k, &h)| h * Complex64::from_polar(1.0, -(k as f64) * w)).sum::<Complex64>()
            / SQRT_2
    }

    /// `F psi_F(xi) = (2 pi)^{-1/2} prod_{j >= 1} m_0(xi / 2^j)`.
    pub fn father_hat(&self, xi: f64) -> Complex64 {
        let mut prod = Complex64::new(1.0, 0.0);
        let mut w = xi / 2.0;
        for _ in 0..200 {
            if w.abs() < 1e-17 {
                break;
            }
            prod *= self.low_pass_symbol(w);
            w /= 2.0;
        }
        prod / (2.0 * PI).sqrt()
    }

    /// `F psi_M(xi) = 2^{-1/2} G(xi/2) F psi_F(xi/2)`.
    pub fn mother_hat(&self, xi: f64) -> Complex64 {
        let g: Complex64 = self
            .high_pass()
            .iter()
            .enumerate()
            .map(|(k, &c)| c * Complex64::from_polar(1.0, -(k as f64) * xi / 2.0))
            .sum();
        g * self.father_hat(xi / 2.0) / SQRT_2
    }

    /// `F_1 psi_{k,m}(xi)`.
    pub fn wavelet_1d_hat(&self, k: i32, m: i64, xi: f64) -> Complex64 {
        if k < 0 {
            SQRT_2 * Complex64::from_polar(1.0, -(m as f64) * xi) * self.father_hat(xi)
        } else {
            let s = (-(k as f64)).exp2();
            s * Complex64::from_polar(1.0, -(m as f64) * xi * s) * self.mother_hat(xi * s)
        }
    }

    /// Support interval of `psi_{k,m}`.
    pub fn support_1d(&self, k: i32, m: i64) -> (f64, f64) {
        let s = self.support_length() as f64;
        if k < 0 {
            (m as f64, m as f64 + s)
        } else {
            let c = (-(k as f64)).exp2();
            (m as f64 * c, (m as f64 + s) * c)
        }
    }
}

/// `u > max(r, sigma_p - r)` with `sigma_p = max(1/p, 1) - 1`; a warning when violated.
pub fn admissibility_warning(system: &WaveletSystem, r: f64, p: f64) -> Option<String> {
    let sigma = (1.0 / p).max(1.0) - 1.0;
    let need = r.max(sigma - r);
    if (system.order() as f64) > need {
        None
    } else {
        Some(format!("order u = {} is not above max(r, sigma_p - r) = {need} for r = {r}, p = {p}", system.order()))
    }
}

fn check_index(grid: &Grid, k: &[i32], m: &[i64]) -> Result<()> {
    if k.len() != grid.dim() || m.len() != grid.dim() {
        return Err(Error::InvalidArgument("level and shift vectors must match the grid dimension".into()));
    }
    if k.iter().any(|&l| l < -1) {
        return Err(Error::InvalidArgument(format!("levels {k:?} must be >= -1")));
    }
    Ok(())
}

/// Tensor wavelet `psi_{k,m}(x) = prod_j psi_{k_j, m_j}(x_j)` on the space samples of `grid`.
pub fn tensor_wavelet(system: &WaveletSystem, k: &[i32], m: &[i64], grid: &Grid) -> Result<SampledFunction> {
    check_index(grid, k, m)?;
    let l = grid.half_width();
    let axis = grid.axis(Side::Space);
    let mut factors = Vec::with_capacity(k.len());
    for (&kj, &mj) in k.iter().zip(m) {
        let (lo, hi) = system.support_1d(kj, mj);
        if lo < -l || hi > l {
            return Err(Error::SupportEscapes(format!("psi_({kj},{mj}) lives on [{lo}, {hi}], domain is [-{l}, {l})")));
        }
        factors.push(axis.iter().map(|&t| Complex64::new(system.wavelet_1d(kj, mj, t), 0.0)).collect());
    }
    SampledFunction::from_tensor(*grid, Side::Space, &factors)
}

/// Samples of `xi -> F psi_{k,m}(xi)` taken at the space points of `grid`.
pub fn tensor_wavelet_hat(system: &WaveletSystem, k: &[i32], m: &[i64], grid: &Grid) -> Result<SampledFunction> {
    check_index(grid, k, m)?;
    let axis = grid.axis(Side::Space);
    let factors: Vec<Vec<Complex64>> =
        k.iter().zip(m).map(|(&kj, &mj)| axis.iter().map(|&t| system.wavelet_1d_hat(kj, mj, t)).collect()).collect();
    SampledFunction::from_tensor(*grid, Side::Space, &factors)
}

/// Points per axis of the internal grid used by [`fourier_image_b01_norm`].
pub const B01_GRID_POINTS: usize = 1 << 16;
/// Half width of that grid; its step is `2^-10`.
pub const B01_GRID_HALF_WIDTH: f64 = 32.0;

/// `||F_1 psi_{k,m} | B^0_{1,1}(R)||` for a one-dimensional wavelet.
pub fn fourier_image_b01_norm(system: &WaveletSystem, k: i32, m: i64) -> Result<f64> {
    let grid = Grid::new(1, B01_GRID_HALF_WIDTH, B01_GRID_POINTS)?;
    fourier_image_b01_norm_on(system, k, m, &grid)
}

/// As [`fourier_image_b01_norm`] on a caller supplied one-dimensional grid.
pub fn fourier_image_b01_norm_on(system: &WaveletSystem, k: i32, m: i64, grid: &Grid) -> Result<f64> {
    if grid.dim() != 1 {
        return Err(Error::InvalidArgument("the wavelet image norm is one-dimensional".into()));
    }
    let psi = tensor_wavelet(system, &[k], &[m], grid)?;
    let image = fourier::forward_as_space(&psi)?;
    let spec = SpaceSpec::new(Flavor::Mixed, crate::spaces::Family::B, 0.0, 1.0, 1.0)?;
    Ok(crate::spaces::evaluate(&image, &spec, &NormSettings::default())?.value)
}

// ---------------------------------------------------------------- coefficients

/// Per-axis physical interval; only wavelets supported inside it are used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranslationWindow {
    pub bounds: Vec<(f64, f64)>,
}

impl TranslationWindow {
    pub fn domain(grid: &Grid) -> Self {
        let l = grid.half_width();
        Self { bounds: vec![(-l, l); grid.dim()] }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self { bounds: vec![(lo, hi); dim] }
    }

    fn shifts(&self, axis: usize, level: i32, support: usize) -> (i64, i64) {
        let (a, b) = self.bounds[axis];
        let scale = if level < 0 { 1.0 } else { (level as f64).exp2() };
        ((a * scale).ceil() as i64, (b * scale).floor() as i64 - support as i64)
    }
}

/// Shift ranges `m_lo..=m_hi` per level on one axis, levels `-1..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AxisCatalog {
    ranges: Vec<(i64, i64)>,
    offsets: Vec<usize>,
    len: usize,
}

impl AxisCatalog {
    fn new(ranges: Vec<(i64, i64)>) -> Self {
        let mut offsets = Vec::with_capacity(ranges.len());
        let mut len = 0;
        for &(lo, hi) in &ranges {
            offsets.push(len);
            len += (hi - lo + 1).max(0) as usize;
        }
        Self { ranges, offsets, len }
    }

    fn count(&self, level: i32) -> usize {
        let (lo, hi) = self.ranges[(level + 1) as usize];
        (hi - lo + 1).max(0) as usize
    }

    fn position(&self, level: i32, m: i64) -> Option<usize> {
        let idx = usize::try_from(level + 1).ok()?;
        let &(lo, hi) = self.ranges.get(idx)?;
        (lo..=hi).contains(&m).then(|| self.offsets[idx] + (m - lo) as usize)
    }

    fn entries(&self) -> Vec<(i32, i64)> {
        let mut v = Vec::with_capacity(self.len);
        for (i, &(lo, hi)) in self.ranges.iter().enumerate() {
            for m in lo..=hi {
                v.push((i as i32 - 1, m));
            }
        }
        v
    }
}

/// Tensor wavelet coefficients `lambda_{k,m}` for `k in {-1..=K}^n` over a translation window.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceCoefficients {
    dim: usize,
    max_level: i32,
    axes: Vec<AxisCatalog>,
    values: Vec<Complex64>,
    /// Admissibility or truncation notes collected while producing the coefficients.
    pub warnings: Vec<String>,
}

/// One coefficient record as stored in JSON lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRecord {
    pub k: Vec<i32>,
    pub m: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

impl SequenceCoefficients {
    /// All-zero coefficients for the wavelets of `system` supported in `window`.
    pub fn zeros(system: &WaveletSystem, max_level: i32, window: &TranslationWindow) -> Result<Self> {
        if max_level < -1 {
            return Err(Error::InvalidArgument(format!("max level {max_level} below -1")));
        }
        let dim = window.bounds.len();
        if dim == 0 || dim > crate::grid::MAX_DIM {
            return Err(Error::InvalidArgument("window dimension must be 1..=3".into()));
        }
        let axes: Vec<AxisCatalog> = (0..dim)
            .map(|a| AxisCatalog::new((-1..=max_level).map(|k| window.shifts(a, k, system.support_length())).collect()))
            .collect();
        let len = axes.iter().map(|c| c.len).product();
        Ok(Self { dim, max_level, axes, values: vec![Complex64::new(0.0, 0.0); len], warnings: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_level(&self) -> i32 {
        self.max_level
    }

    /// Number of stored entries.
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn flat(&self, k: &[i32], m: &[i64]) -> Option<usize> {
        if k.len() != self.dim || m.len() != self.dim {
            return None;
        }
        let mut idx = 0;
        for a in 0..self.dim {
            idx = idx * self.axes[a].len + self.axes[a].position(k[a], m[a])?;
        }
        Some(idx)
    }

    /// Coefficient, or `None` outside the stored index set.
    pub fn get(&self, k: &[i32], m: &[i64]) -> Option<Complex64> {
        self.flat(k, m).map(|i| self.values[i])
    }

    pub fn set(&mut self, k: &[i32], m: &[i64], value: Complex64) -> Result<()> {
        let i = self
            .flat(k, m)
            .ok_or_else(|| Error::InvalidArgument(format!("({k:?}, {m:?}) lies outside the translation window")))?;
        self.values[i] = value;
        Ok(())
    }

    fn level_vectors(&self) -> Vec<Vec<i32>> {
        let per = (self.max_level + 2) as usize;
        (0..per.pow(self.dim as u32))
            .map(|mut c| {
                let mut k = vec![0; self.dim];
                for a in (0..self.dim).rev() {
                    k[a] = (c % per) as i32 - 1;
                    c /= per;
                }
                k
            })
            .collect()
    }

    /// Calls `visit(k, m, lambda)` in lexicographic `(k, m)` order.
    pub fn for_each<F: FnMut(&[i32], &[i64], Complex64)>(&self, mut visit: F) {
        for k in self.level_vectors() {
            let counts: Vec<usize> = (0..self.dim).map(|a| self.axes[a].count(k[a])).collect();
            let total: usize = counts.iter().product();
            let mut m = vec![0i64; self.dim];
            for mut c in 0..total {
                for a in (0..self.dim).rev() {
                    m[a] = self.axes[a].ranges[(k[a] + 1) as usize].0 + (c % counts[a]) as i64;
                    c /= counts[a];
                }
                visit(&k, &m, self.values[self.flat(&k, &m).unwrap()]);
            }
        }
    }

    /// Per level vector, the `l_p` sum of `|lambda|` over shifts.
    fn block_norms(&self, p: f64) -> Vec<(Vec<i32>, f64)> {
        let mut out: BTreeMap<Vec<i32>, Vec<f64>> = BTreeMap::new();
        self.for_each(|k, _, v| out.entry(k.to_vec()).or_default().push(v.norm()));
        out.into_iter().map(|(k, v)| (k, sequence_lp(v.into_iter(), p))).collect()
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let mut err = None;
        self.for_each(|k, m, v| {
            if err.is_some() {
                return;
            }
            let rec = CoefficientRecord { k: k.to_vec(), m: m.to_vec(), re: v.re, im: v.im };
            let res = serde_json::to_writer(&mut w, &rec).map_err(Error::from).and_then(|_| Ok(w.write_all(b"\n")?));
            if let Err(e) = res {
                err = Some(e);
            }
        });
        err.map_or(Ok(()), Err)
    }

    /// Reads JSON lines; each level's shift range is the span of the records present.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut records = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CoefficientRecord = serde_json::from_str(&line)?;
            if !(rec.re.is_finite() && rec.im.is_finite()) {
                return Err(Error::Format("non-finite coefficient".into()));
            }
            records.push(rec);
        }
        let first = records.first().ok_or_else(|| Error::Format("no coefficient records".into()))?;
        let dim = first.k.len();
        if dim == 0 || dim > crate::grid::MAX_DIM || records.iter().any(|r| r.k.len() != dim || r.m.len() != dim) {
            return Err(Error::Format("inconsistent record dimensions".into()));
        }
        if records.iter().any(|r| r.k.iter().any(|&l| l < -1)) {
            return Err(Error::Format("level below -1".into()));
        }
        let max_level = records.iter().flat_map(|r| r.k.iter().copied()).max().unwrap();
        let axes: Vec<AxisCatalog> = (0..dim)
            .map(|a| {
                let ranges = (-1..=max_level)
                    .map(|lvl| {
                        let ms = records.iter().filter(|r| r.k[a] == lvl).map(|r| r.m[a]);
                        let lo = ms.clone().min();
                        let hi = ms.max();
                        match (lo, hi) {
                            (Some(lo), Some(hi)) => (lo, hi),
                            _ => (0, -1),
                        }
                    })
                    .collect();
                AxisCatalog::new(ranges)
            })
            .collect();
        let len = axes.iter().map(|c| c.len).product();
        let mut out = Self { dim, max_level, axes, values: vec![Complex64::new(0.0, 0.0); len], warnings: Vec::new() };
        for r in &records {
            out.set(&r.k, &r.m, Complex64::new(r.re, r.im))?;
        }
        Ok(out)
    }
}

/// Per-axis sample rows of every 1D wavelet in a catalog.
struct AxisBasis {
    catalog: AxisCatalog,
    rows: Vec<(usize, Vec<f64>)>,
}

fn axis_basis(
    system: &WaveletSystem,
    grid: &Grid,
    axis: usize,
    max_level: i32,
    window: &TranslationWindow,
    weighted: bool,
) -> Result<AxisBasis> {
    let catalog = AxisCatalog::new((-1..=max_level).map(|k| window.shifts(axis, k, system.support_length())).collect());
    let h = grid.spacing();
    let l = grid.half_width();
    let n = grid.points_per_axis();
    let mut rows = Vec::with_capacity(catalog.len);
    for (k, m) in catalog.entries() {
        let (lo, hi) = system.support_1d(k, m);
        if lo < -l - 1e-12 || hi > l + 1e-12 {
            return Err(Error::SupportEscapes(format!("psi_({k},{m}) on [{lo}, {hi}]")));
        }
        let start = (((lo + l) / h).ceil().max(0.0)) as usize;
        let end = ((((hi + l) / h).floor()) as usize).min(n - 1);
        let c = if weighted { (k as f64).exp2() * h } else { 1.0 };
        let vals = (start..=end).map(|i| c * system.wavelet_1d(k, m, -l + i as f64 * h)).collect();
        rows.push((start, vals));
    }
    Ok(AxisBasis { catalog, rows })
}

/// `out[o, r, i'] = sum_i row_r(i) data[o, i, i']`.
fn contract(data: &[Complex64], shape: &[usize], axis: usize, rows: &[(usize, Vec<f64>)]) -> (Vec<Complex64>, Vec<usize>) {
    let outer: usize = shape[..axis].iter().product();
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * rows.len() * inner];
    for o in 0..outer {
        for (r, (start, vals)) in rows.iter().enumerate() {
            let dst = (o * rows.len() + r) * inner;
            for (t, &w) in vals.iter().enumerate() {
                let src = (o * len + start + t) * inner;
                for j in 0..inner {
                    out[dst + j] += data[src + j] * w;
                }
            }
        }
    }
    let mut s = shape.to_vec();
    s[axis] = rows.len();
    (out, s)
}

/// `out[o, i, i'] = sum_r row_r(i) data[o, r, i']`.
fn expand(data: &[Complex64], shape: &[usize], axis: usize, rows: &[(usize, Vec<f64>)], n: usize) -> (Vec<Complex64>, Vec<usize>) {
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); outer * n * inner];
    for o in 0..outer {
        for (r, (start, vals)) in rows.iter().enumerate() {
            let src = (o * rows.len() + r) * inner;
            for (t, &w) in vals.iter().enumerate() {
                let dst = (o * n + start + t) * inner;
                for j in 0..inner {
                    out[dst + j] += data[src + j] * w;
                }
            }
        }
    }
    let mut s = shape.to_vec();
    s[axis] = n;
    (out, s)
}

fn check_window(grid: &Grid, window: &TranslationWindow) -> Result<()> {
    let l = grid.half_width();
    if window.bounds.len() != grid.dim() || window.bounds.iter().any(|&(a, b)| !(a >= -l && b <= l && a < b)) {
        return Err(Error::InvalidArgument("translation window must be a sub-box of the domain".into()));
    }
    Ok(())
}

/// Largest analysis level for which the rectangle rule integrates wavelets exactly
/// against polynomials on this grid (`2^K h <= 1/2`).
pub fn max_analysis_level(grid: &Grid) -> i32 {
    (-(2.0 * grid.spacing()).log2()).floor() as i32
}

/// `lambda_{k,m} = 2^{[k]} (f, psi_{k,m})` by the rectangle rule, contracted axis by axis.
pub fn analyze(
    f: &SampledFunction,
    system: &WaveletSystem,
    max_level: i32,
    window: &TranslationWindow,
) -> Result<SequenceCoefficients> {
    f.require_side(Side::Space)?;
    let grid = *f.grid();
    check_window(&grid, window)?;
    if max_level > max_analysis_level(&grid) {
        return Err(Error::LevelTooHigh { requested: max_level as i64, max: max_analysis_level(&grid).to_string() });
    }
    let mut out = SequenceCoefficients::zeros(system, max_level, window)?;
    let mut data = f.samples().to_vec();
    let mut shape = vec![grid.points_per_axis(); grid.dim()];
    for axis in (0..grid.dim()).rev() {
        let basis = axis_basis(system, &grid, axis, max_level, window, true)?;
        debug_assert_eq!(basis.catalog, out.axes[axis]);
        let (d, s) = contract(&data, &shape, axis, &basis.rows);
        data = d;
        shape = s;
    }
    out.values = data;
    Ok(out)
}

/// `sum lambda_{k,m} psi_{k,m}` sampled on `grid`.
pub fn synthesize(coeffs: &SequenceCoefficients, system: &WaveletSystem, grid: &Grid) -> Result<SampledFunction> {
    if coeffs.dim != grid.dim() {
        return Err(Error::InvalidArgument("coefficient and grid dimensions differ".into()));
    }
    let mut data = coeffs.values.clone();
    let mut shape: Vec<usize> = coeffs.axes.iter().map(|c| c.len).collect();
    let l = grid.half_width();
    let h = grid.spacing();
    let n = grid.points_per_axis();
    for axis in 0..grid.dim() {
        let cat = &coeffs.axes[axis];
        let mut rows = Vec::with_capacity(cat.len);
        for (k, m) in cat.entries() {
            let (lo, hi) = system.support_1d(k, m);
            if lo < -l - 1e-12 || hi > l + 1e-12 {
                return Err(Error::SupportEscapes(format!("psi_({k},{m}) on [{lo}, {hi}]")));
            }
            let start = (((lo + l) / h).ceil().max(0.0)) as usize;
            let end = ((((hi + l) / h).floor()) as usize).min(n - 1);
            rows.push((start, (start..=end).map(|i| system.wavelet_1d(k, m, -l + i as f64 * h)).collect()));
        }
        let (d, s) = expand(&data, &shape, axis, &rows, n);
        data = d;
        shape = s;
    }
    SampledFunction::new(*grid, Side::Space, data)
}

/// `(sum_k 2^{[k](r - 1/p) q} (sum_m |lambda_{k,m}|^p)^{q/p})^{1/q}`.
pub fn seq_b_norm(coeffs: &SequenceCoefficients, r: f64, p: f64, q: f64) -> Result<f64> {
    crate::grid::check_exponent(p)?;
    crate::grid::check_exponent(q)?;
    let inv_p = if p.is_infinite() { 0.0 } else { 1.0 / p };
    let blocks = coeffs.block_norms(p);
    Ok(sequence_lp(
        blocks.into_iter().map(|(k, v)| {
            let w: i32 = k.iter().sum();
            v * ((r - inv_p) * w as f64).exp2()
        }),
        q,
    ))
}

/// `|| (sum_{k,m} |2^{[k] r} lambda_{k,m} chi_{k,m}|^q)^{1/q} ||_p`, with `chi_{k,m}` the indicator of
/// `R_{k,m} = prod_j (2^{-k_j} m_j, 2^{-k_j}(m_j + 1))`, evaluated exactly on the finest dyadic cells.
pub fn seq_f_norm(coeffs: &SequenceCoefficients, r: f64, p: f64, q: f64) -> Result<f64> {
    crate::grid::check_exponent(p)?;
    crate::grid::check_exponent(q)?;
    if p.is_infinite() {
        return Err(Error::Unsupported("sequence F norm with p = inf".into()));
    }
    let top = coeffs.max_level.max(0);
    let cells_per_unit = (1i64) << top;
    let dim = coeffs.dim;
    // Bounding cells per axis, in units of 2^-top.
    let mut span = Vec::with_capacity(dim);
    for cat in &coeffs.axes {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for (i, &(mlo, mhi)) in cat.ranges.iter().enumerate() {
            if mhi < mlo {
                continue;
            }
            let k = i as i32 - 1;
            let width = if k < 0 { 2 * cells_per_unit } else { cells_per_unit >> k };
            lo = lo.min(mlo * width);
            hi = hi.max((mhi + 1) * width);
        }
        if lo > hi {
            return Ok(0.0);
        }
        span.push((lo, hi));
    }
    let counts: Vec<usize> = span.iter().map(|&(lo, hi)| (hi - lo) as usize).collect();
    let total: usize = counts.iter().product();
    let strides: Vec<usize> = (0..dim).map(|a| coeffs.axes[a + 1..].iter().map(|c| c.len).product()).collect();
    let mut acc = vec![0.0f64; total];
    for k in coeffs.level_vectors() {
        let w = (r * k.iter().sum::<i32>() as f64).exp2();
        let maps: Vec<Vec<Option<usize>>> = (0..dim)
            .map(|a| {
                let width = if k[a] < 0 { 2 * cells_per_unit } else { cells_per_unit >> k[a] };
                (0..counts[a])
                    .map(|c| {
                        let cell = span[a].0 + c as i64;
                        coeffs.axes[a].position(k[a], cell.div_euclid(width))
                    })
                    .collect()
            })
            .collect();
        for (flat, slot) in acc.iter_mut().enumerate() {
            let mut rest = flat;
            let mut idx = 0usize;
            let mut ok = true;
            for a in (0..dim).rev() {
                let c = rest % counts[a];
                rest /= counts[a];
                match maps[a][c] {
                    Some(pos) => idx += pos * strides[a],
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let v = w * coeffs.values[idx].norm();
            if q.is_infinite() {
                *slot = slot.max(v);
            } else {
                *slot += v.powf(q);
            }
        }
    }
    let vol = (cells_per_unit as f64).powi(-(dim as i32));
    let g = acc.into_iter().map(|a| if q.is_infinite() { a } else { a.powf(1.0 / q) });
    Ok(sequence_lp(g, p) * vol.powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const DB2: [f64; 4] = [0.482962913144534, 0.836516303737808, 0.224143868042013, -0.129409522551260];
    const DB4: [f64; 8] = [
        0.230377813308897,
        0.714846570552915,
        0.630880767929859,
        -0.027983769416859,
        -0.187034811719093,
        0.030841381835561,
        0.032883011666885,
        -0.010597401785069,
    ];

    #[test]
    fn filters_match_tables() {
        let h2 = daubechies_filter(2).unwrap();
        for (a, b) in h2.iter().zip(DB2) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        let s3 = 3f64.sqrt();
        let closed = [(1.0 + s3), (3.0 + s3), (3.0 - s3), (1.0 - s3)].map(|v| v / (4.0 * SQRT_2));
        for (a, b) in h2.iter().zip(closed) {
            assert!((a - b).abs() < 1e-15);
        }
        let h4 = daubechies_filter(4).unwrap();
        for (a, b) in h4.iter().zip(DB4) {
            assert!((a - b).abs() < 1e-14, "{a} vs {b}");
        }
        assert!(daubechies_filter(1).is_err());
        assert!(daubechies_filter(11).is_err());
    }

    #[test]
    fn filters_are_orthonormal_with_vanishing_moments() {
        for u in MIN_ORDER..=MAX_ORDER {
            let h = daubechies_filter(u).unwrap();
            assert_eq!(h.len(), 2 * u);
            for shift in 0..u {
                let s: f64 = (0..2 * u - 2 * shift).map(|k| h[k] * h[k + 2 * shift]).sum();
                let expected = if shift == 0 { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-12, "u={u} shift={shift}: {s}");
            }
            for v in 0..u {
                let moment: f64 = h.iter().enumerate().map(|(k, &c)| if k % 2 == 0 { c } else { -c } * (k as f64).powi(v as i32)).sum();
                assert!(moment.abs() < 1e-9 * (2.0 * u as f64).powi(v as i32), "u={u} moment {v}: {moment}");
            }
        }
    }

    #[test]
    fn tabulated_wavelets_have_unit_norm() {
        for u in [2, 3, 4, 6] {
            let w = WaveletSystem::new(u).unwrap();
            let step = (-(RESOLUTION_BITS as f64)).exp2();
            let nf: f64 = w.father_table().iter().map(|v| v * v).sum::<f64>() * step;
            let nm: f64 = w.mother_table().iter().map(|v| v * v).sum::<f64>() * step;
            let ip: f64 = w.father_table().iter().zip(w.mother_table()).map(|(a, b)| a * b).sum::<f64>() * step;
            let int: f64 = w.father_table().iter().sum::<f64>() * step;
            assert!((int - 1.0).abs() < 1e-12, "u={u}: integral {int}");
            // rectangle rule at 2^-10 on the low-regularity tables
            let tol = match u {
                2 => 1e-4,
                3 => 1e-7,
                _ => 1e-8,
            };
            assert!((nf - 1.0).abs() < tol, "u={u}: father {nf}");
            assert!((nm - 1.0).abs() < tol, "u={u}: mother {nm}");
            assert!(ip.abs() < tol, "u={u}: cross {ip}");
        }
    }

    #[test]
    fn partition_of_unity_at_integers() {
        let w = WaveletSystem::new(4).unwrap();
        for x in [0.0, 0.25, 0.5, 0.3125] {
            let s: f64 = (-8..8).map(|m| w.father(x - m as f64)).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fourier_product_matches_tabulation() {
        let w = WaveletSystem::new(4).unwrap();
        let grid = Grid::new(1, 32.0, 1 << 16).unwrap();
        let xi = grid.axis(Side::Frequency);
        for (k, m) in [(-1, 0), (0, -3), (2, 5)] {
            let psi = tensor_wavelet(&w, &[k], &[m], &grid).unwrap();
            let ff = fourier::forward(&psi).unwrap();
            let mut err: f64 = 0.0;
            for (j, z) in ff.samples().iter().enumerate() {
                if xi[j].abs() < 60.0 {
                    err = err.max((z - w.wavelet_1d_hat(k, m, xi[j])).norm());
                }
            }
            assert!(err < 1e-8, "({k},{m}): {err}");
        }
        assert!((w.father_hat(0.0).re - 1.0 / (2.0 * PI).sqrt()).abs() < 1e-15);
        assert!(w.mother_hat(0.0).norm() < 1e-15);
    }

    #[test]
    fn orthonormality_on_a_fine_grid() {
        let w = WaveletSystem::new(4).unwrap();
        let grid = Grid::new(1, 16.0, 1 << 15).unwrap();
        let members: Vec<(i32, i64)> = vec![(-1, 0), (-1, 1), (-1, -5), (0, 0), (0, 2), (1, -3), (1, 0), (2, 4), (2, -7), (2, 5)];
        let funcs: Vec<SampledFunction> = members
            .iter()
            .map(|&(k, m)| tensor_wavelet(&w, &[k], &[m], &grid).unwrap().scale(Complex64::new((k as f64 / 2.0).exp2(), 0.0)))
            .collect();
        for (i, a) in funcs.iter().enumerate() {
            for (j, b) in funcs.iter().enumerate() {
                let ip = crate::grid::inner_product(a, b).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip.re - expected).abs() < 1e-6, "{:?} {:?}: {ip}", members[i], members[j]);
            }
        }
    }

    #[test]
    fn analysis_recovers_single_coefficients() {
        let w = WaveletSystem::new(4).unwrap();
        let grid = Grid::new(2, 4.0, 2048).unwrap();
        let window = TranslationWindow::domain(&grid);
        let f = tensor_wavelet(&w, &[1, 0], &[-2, -3], &grid).unwrap();
        let c = analyze(&f, &w, 1, &window).unwrap();
        assert!((c.get(&[1, 0], &[-2, -3]).unwrap().re - 1.0).abs() < 1e-5);
        let mut off: f64 = 0.0;
        c.for_each(|k, m, v| {
            if !(k == [1, 0] && m == [-2, -3]) {
                off = off.max(v.norm());
            }
        });
        assert!(off < 1e-5, "{off}");
        assert!(analyze(&f, &w, max_analysis_level(&grid) + 1, &window).is_err());
    }

    #[test]
    fn synthesis_inverts_analysis_on_coefficients() {
        let w = WaveletSystem::new(4).unwrap();
        let grid = Grid::new(1, 16.0, 1 << 15).unwrap();
        let window = TranslationWindow::cube(1, -12.0, 12.0);
        let mut c = SequenceCoefficients::zeros(&w, 3, &window).unwrap();
        c.set(&[-1], &[2], Complex64::new(0.7, 0.0)).unwrap();
        c.set(&[0], &[-4], Complex64::new(0.0, -1.2)).unwrap();
        c.set(&[3], &[17], Complex64::new(2.0, 0.5)).unwrap();
        assert!(c.set(&[3], &[1000], Complex64::new(1.0, 0.0)).is_err());
        let f = synthesize(&c, &w, &grid).unwrap();
        let back = analyze(&f, &w, 3, &window).unwrap();
        let mut err: f64 = 0.0;
        c.for_each(|k, m, v| err = err.max((back.get(k, m).unwrap() - v).norm()));
        assert!(err < 1e-5, "{err}");
    }

    #[test]
    fn separable_analysis_matches_full_rectangle_rule() {
        let w = WaveletSystem::new(2).unwrap();
        let grid = Grid::new(2, 6.0, 64).unwrap();
        let f = SampledFunction::from_fn(grid, Side::Space, |x| Complex64::new((-x[0] * x[0] - 0.3 * x[1] * x[1]).exp(), x[1] * (-x[1] * x[1]).exp())).unwrap();
        let window = TranslationWindow::cube(2, -4.0, 4.0);
        let c = analyze(&f, &w, 1, &window).unwrap();
        c.for_each(|k, m, v| {
            let psi = tensor_wavelet(&w, k, m, &grid).unwrap();
            let direct = crate::grid::inner_product(&f, &psi).unwrap() * ((k.iter().sum::<i32>()) as f64).exp2();
            assert!((direct - v).norm() < 1e-13, "{k:?} {m:?}");
        });
    }

    #[test]
    fn sequence_norms_of_a_single_entry() {
        let w = WaveletSystem::new(2).unwrap();
        let mut c = SequenceCoefficients::zeros(&w, 2, &TranslationWindow::cube(2, -4.0, 4.0)).unwrap();
        c.set(&[1, 2], &[0, -3], Complex64::new(3.0, 4.0)).unwrap();
        let b = seq_b_norm(&c, 0.5, 2.0, 2.0).unwrap();
        assert!((b - 5.0 * (3.0f64 * 0.0).exp2()).abs() < 1e-14);
        // |R_{k,m}| = 2^{-3}, so the F norm is 2^{[k] r} 5 * 2^{-3/p}.
        let f = seq_f_norm(&c, 0.5, 2.0, 2.0).unwrap();
        assert!((f - (1.5f64).exp2() * 5.0 * (-1.5f64).exp2()).abs() < 1e-13, "{f}");
        let b_inf = seq_b_norm(&c, -1.0, f64::INFINITY, f64::INFINITY).unwrap();
        assert!((b_inf - 5.0 / 8.0).abs() < 1e-15);
        assert!(seq_f_norm(&c, 0.0, f64::INFINITY, 2.0).is_err());
    }

    #[test]
    fn f_equals_b_when_p_equals_q() {
        let w = WaveletSystem::new(2).unwrap();
        let mut c = SequenceCoefficients::zeros(&w, 2, &TranslationWindow::cube(2, -4.0, 4.0)).unwrap();
        let mut x = 0.37f64;
        let mut entries = Vec::new();
        c.for_each(|k, m, _| entries.push((k.to_vec(), m.to_vec())));
        for (k, m) in entries.iter().step_by(7) {
            x = (x * 3.7 + 0.11).fract();
            c.set(k, m, Complex64::new(x - 0.5, 0.2 * x)).unwrap();
        }
        for p in [1.0, 2.0, 3.0] {
            let b = seq_b_norm(&c, 0.7, p, p).unwrap();
            let f = seq_f_norm(&c, 0.7, p, p).unwrap();
            assert!((b - f).abs() < 1e-12 * b, "p={p}: {b} vs {f}");
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let w = WaveletSystem::new(2).unwrap();
        let mut c = SequenceCoefficients::zeros(&w, 1, &TranslationWindow::cube(2, -6.0, 6.0)).unwrap();
        c.set(&[0, 1], &[-2, 3], Complex64::new(1.0 / 3.0, -2e-300)).unwrap();
        let mut buf = Vec::new();
        c.write_jsonl(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), c.len());
        let back = SequenceCoefficients::read_jsonl(buf.as_slice()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn b01_norm_of_images() {
        let w = WaveletSystem::new(4).unwrap();
        let values: Vec<f64> = (-1..=5).flat_map(|k| [0, 5].map(|m| fourier_image_b01_norm(&w, k, m).unwrap())).collect();
        let max = values.iter().cloned().fold(0.0, f64::max);
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 1.0 && max / min < 20.0, "{values:?}");
        // modulation moves the spectrum against the partition; the effect fades at high levels
        let (a, b) = (values[12], values[13]);
        assert!((a - b).abs() < 1e-3 * a, "{a} vs {b}");
        assert_eq!(fourier_image_b01_norm(&w.zeroed(), 2, 1).unwrap(), 0.0);
        assert!(fourier_image_b01_norm(&w, -1, 40).is_err());
    }

    #[test]
    fn admissibility_rule() {
        let w = WaveletSystem::new(2).unwrap();
        assert!(admissibility_warning(&w, 1.0, 2.0).is_none());
        assert!(admissibility_warning(&w, 2.0, 2.0).is_some());
        assert!(admissibility_warning(&w, -2.5, 1.0).is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn translation_covariance(m in -4i64..4, k in 0i32..3) {
            let w = WaveletSystem::new(3).unwrap();
            let grid = Grid::new(1, 16.0, 1 << 10).unwrap();
            let a = tensor_wavelet(&w, &[k], &[m], &grid).unwrap();
            let b = tensor_wavelet(&w, &[k], &[m + 1], &grid).unwrap();
            // h = 1/32, so a unit shift at level k moves 32 / 2^k samples.
            let shift = 32i64 >> k;
            let n = 1usize << 10;
            for i in 0..n {
                let j = i as i64 - shift;
                let expected = if (0..n as i64).contains(&j) { a.samples()[j as usize] } else { Complex64::new(0.0, 0.0) };
                prop_assert!((b.samples()[i] - expected).norm() < 1e-8);
            }
        }
    }
}
