//! Besov, Triebel-Lizorkin and Sobolev norms, isotropic and of dominating
//! mixed smoothness, evaluated through the dyadic partitions.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::{self, Direction};
use crate::grid::{check_exponent, lp_norm, sequence_lp, Grid, SampledFunction, Side};
use crate::partition::{max_admissible_level, IsotropicPartition, TensorPartition};

/// Default relative spectral mass allowed outside the covered band.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flavor {
    Isotropic,
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Besov.
    B,
    /// Triebel-Lizorkin.
    F,
    /// Sobolev with integer smoothness (mixed flavor only).
    W,
    /// Plain Lebesgue space.
    Lp,
    /// Hoelder-Zygmund, an alias of `B` with `p = q = inf`.
    C,
}

/// A function space, e.g. `S:B:r=0.5:p=2:q=2` or `iso:B:s=1:p=inf:q=inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub flavor: Flavor,
    pub family: Family,
    pub smoothness: f64,
    pub p: f64,
    pub q: f64,
}

impl SpaceSpec {
    pub fn new(flavor: Flavor, family: Family, smoothness: f64, p: f64, q: f64) -> Result<Self> {
        // normalise -0 so that displayed specs stay canonical
        let s = Self { flavor, family, smoothness: smoothness + 0.0, p, q };
        s.validate()?;
        Ok(s)
    }

    pub fn mixed_besov(r: f64, p: f64, q: f64) -> Result<Self> {
        Self::new(Flavor::Mixed, Family::B, r, p, q)
    }

    pub fn iso_besov(s: f64, p: f64, q: f64) -> Result<Self> {
        Self::new(Flavor::Isotropic, Family::B, s, p, q)
    }

    /// `S^r C = S^r_{inf,inf} B`.
    pub fn mixed_holder(r: f64) -> Result<Self> {
        Self::new(Flavor::Mixed, Family::C, r, f64::INFINITY, f64::INFINITY)
    }

    pub fn lebesgue(p: f64) -> Result<Self> {
        Self::new(Flavor::Isotropic, Family::Lp, 0.0, p, p)
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::SpaceSpec { spec: self.to_string(), reason: reason.into() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.smoothness.is_finite() {
            return Err(self.invalid("smoothness must be finite"));
        }
        if self.p.is_nan() || self.p < 1.0 {
            return Err(self.invalid("p must lie in [1, inf]"));
        }
        if self.q.is_nan() || self.q < 1.0 {
            return Err(self.invalid("q must lie in [1, inf]"));
        }
        match self.family {
            Family::W => {
                if self.flavor != Flavor::Mixed {
                    return Err(self.invalid("family W is implemented for the mixed flavor only"));
                }
                if self.smoothness < 0.0 || self.smoothness.fract() != 0.0 {
                    return Err(self.invalid("W needs a non-negative integer smoothness"));
                }
                if !(self.p > 1.0 && self.p.is_finite()) {
                    return Err(self.invalid("W needs 1 < p < inf"));
                }
            }
            Family::F if self.p.is_infinite() => return Err(self.invalid("F needs p < inf")),
            Family::C if !(self.p.is_infinite() && self.q.is_infinite()) => {
                return Err(self.invalid("C fixes p = q = inf"))
            }
            _ => {}
        }
        Ok(())
    }

    /// Maps family `C` to `B` with `p = q = inf`; idempotent.
    pub fn canonical(&self) -> SpaceSpec {
        let mut s = *self;
        if s.family == Family::C {
            s.family = Family::B;
            s.p = f64::INFINITY;
            s.q = f64::INFINITY;
        }
        s
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (flavor, key) = match self.flavor {
            Flavor::Isotropic => ("iso", "s"),
            Flavor::Mixed => ("S", "r"),
        };
        let family = match self.family {
            Family::B => "B",
            Family::F => "F",
            Family::W => "W",
            Family::Lp => "Lp",
            Family::C => "C",
        };
        write!(f, "{flavor}:{family}")?;
        match self.family {
            Family::Lp => write!(f, ":p={}", fmt_num(self.p)),
            Family::C => write!(f, ":{key}={}", fmt_num(self.smoothness)),
            Family::W => write!(f, ":{key}={}:p={}", fmt_num(self.smoothness), fmt_num(self.p)),
            _ => write!(f, ":{key}={}:p={}:q={}", fmt_num(self.smoothness), fmt_num(self.p), fmt_num(self.q)),
        }
    }
}

impl FromStr for SpaceSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = |reason: &str| Error::SpaceSpec { spec: text.to_string(), reason: reason.to_string() };
        let mut parts = text.trim().split(':');
        let flavor = match parts.next() {
            Some("S") => Flavor::Mixed,
            Some("iso") => Flavor::Isotropic,
            _ => return Err(bad("flavor must be `S` or `iso`")),
        };
        let family = match parts.next() {
            Some("B") => Family::B,
            Some("F") => Family::F,
            Some("W") => Family::W,
            Some("Lp") => Family::Lp,
            Some("C") => Family::C,
            _ => return Err(bad("family must be one of B, F, W, Lp, C")),
        };
        let (mut s, mut p, mut q) = (None, None, None);
        for kv in parts {
            let (k, v) = kv.split_once('=').ok_or_else(|| bad("expected key=value"))?;
            let v: f64 = v.parse().map_err(|_| bad("value is not a number"))?;
            let slot = match (k, flavor) {
                ("r", Flavor::Mixed) | ("s", Flavor::Isotropic) => &mut s,
                ("p", _) => &mut p,
                ("q", _) => &mut q,
                _ => return Err(bad("unknown key")),
            };
            if slot.replace(v).is_some() {
                return Err(bad("repeated key"));
            }
        }
        if [p, q].into_iter().flatten().any(|e| e.is_nan() || e < 1.0) {
            return Err(bad("exponents must lie in [1, inf]; p < 1 is unsupported"));
        }
        let spec = match family {
            Family::C => {
                if p.is_some() || q.is_some() {
                    return Err(bad("C takes no p or q"));
                }
                SpaceSpec { flavor, family, smoothness: s.unwrap_or(0.0), p: f64::INFINITY, q: f64::INFINITY }
            }
            Family::Lp => {
                if s.is_some() || q.is_some() {
                    return Err(bad("Lp takes only p"));
                }
                let p = p.ok_or_else(|| bad("missing p"))?;
                SpaceSpec { flavor, family, smoothness: 0.0, p, q: p }
            }
            Family::W => {
                if q.is_some() {
                    return Err(bad("W takes no q"));
                }
                let p = p.ok_or_else(|| bad("missing p"))?;
                SpaceSpec { flavor, family, smoothness: s.ok_or_else(|| bad("missing smoothness"))?, p, q: 2.0 }
            }
            _ => {
                let p = p.ok_or_else(|| bad("missing p"))?;
                SpaceSpec { flavor, family, smoothness: s.ok_or_else(|| bad("missing smoothness"))?, p, q: q.unwrap_or(p) }
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Level cap and truncation policy for norm evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormSettings {
    /// Upper bound on the partition depth; the grid's admissible maximum is used when absent or lower.
    pub max_level: Option<u32>,
    /// Largest relative spectral mass allowed outside the covered band.
    pub tail_tolerance: f64,
}

impl Default for NormSettings {
    fn default() -> Self {
        Self { max_level: None, tail_tolerance: DEFAULT_TAIL_TOLERANCE }
    }
}

impl NormSettings {
    pub fn with_max_level(mut self, k: u32) -> Self {
        self.max_level = Some(k);
        self
    }

    pub fn with_tail_tolerance(mut self, t: f64) -> Self {
        self.tail_tolerance = t;
        self
    }

    fn level(&self, grid: &Grid) -> Result<u32> {
        let max = max_admissible_level(grid)
            .ok_or(Error::LevelTooHigh { requested: 0, max: "none".into() })?;
        Ok(self.max_level.map_or(max, |k| k.min(max)))
    }
}

/// A norm value together with the truncation diagnostics behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    /// Relative spectral mass outside the covered band.
    pub tail: f64,
    pub levels: u32,
}

/// `L_p` norms of all band pieces of one function.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceNorms {
    pub flavor: Flavor,
    pub p: f64,
    pub levels: u32,
    pub tail: f64,
    /// `(level vector, ||piece||_p)`, lexicographic; isotropic entries have one level.
    pub entries: Vec<(Vec<u32>, f64)>,
}

impl PieceNorms {
    /// `(sum_k 2^{s w(k) q} ||piece_k||_p^q)^{1/q}`, `w(k) = [k]` or `j`.
    pub fn besov(&self, smoothness: f64, q: f64) -> f64 {
        sequence_lp(
            self.entries.iter().map(|(k, v)| {
                let w: u32 = k.iter().sum();
                v * (smoothness * w as f64).exp2()
            }),
            q,
        )
    }
}

fn spectrum(f: &SampledFunction) -> Result<SampledFunction> {
    f.require_side(Side::Space)?;
    fourier::forward(f)
}

fn tensor_tail(spec: &SampledFunction, part: &TensorPartition) -> f64 {
    let n = spec.grid().points_per_axis();
    let covered: Vec<f64> = (0..n).map(|i| (0..=part.levels()).map(|l| part.axis_factor(l)[i]).sum()).collect();
    let grid = *spec.grid();
    let mut total = 0.0;
    let mut outside = 0.0;
    for (flat, z) in spec.samples().iter().enumerate() {
        let idx = grid.multi_index(flat);
        let c: f64 = (0..grid.dim()).map(|a| covered[idx[a]]).product();
        let m = z.norm_sqr();
        total += m;
        outside += m * (1.0 - c) * (1.0 - c);
    }
    if total == 0.0 {
        0.0
    } else {
        (outside / total).sqrt()
    }
}

fn check_tail(tail: f64, settings: &NormSettings) -> Result<()> {
    if tail > settings.tail_tolerance {
        return Err(Error::SpectralTail { tail, tolerance: settings.tail_tolerance });
    }
    Ok(())
}

/// `out[o, r, i'] = sum_i mat[r][i] data[o, i, i']` along `axis`.
fn contract_real(data: &[f64], shape: &[usize], axis: usize, mat: &[&[f64]]) -> (Vec<f64>, Vec<usize>) {
    let outer: usize = shape[..axis].iter().product();
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let rows = mat.len();
    let mut out = vec![0.0; outer * rows * inner];
    for o in 0..outer {
        for (r, w) in mat.iter().enumerate() {
            let dst = &mut out[(o * rows + r) * inner..(o * rows + r + 1) * inner];
            for i in 0..len {
                let wi = w[i];
                if wi == 0.0 {
                    continue;
                }
                let src = &data[(o * len + i) * inner..(o * len + i + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += wi * s;
                }
            }
        }
    }
    let mut new_shape = shape.to_vec();
    new_shape[axis] = rows;
    (out, new_shape)
}

fn scale_along_axis(data: &mut [Complex64], grid: &Grid, axis: usize, factor: &[f64]) {
    let n = grid.points_per_axis();
    let inner = n.pow((grid.dim() - 1 - axis) as u32);
    for (b, chunk) in data.chunks_exact_mut(inner).enumerate() {
        let w = factor[b % n];
        for z in chunk {
            *z *= w;
        }
    }
}

/// Calls `visit(k, piece)` for every tensor piece, sharing partial inverse transforms.
fn for_each_tensor_piece<F>(spectrum: &SampledFunction, part: &TensorPartition, mut visit: F)
where
    F: FnMut(&[u32], &[Complex64]),
{
    let grid = *spectrum.grid();
    let dim = grid.dim();
    let mut k = vec![0u32; dim];
    fn recurse<F: FnMut(&[u32], &[Complex64])>(
        data: &[Complex64],
        grid: &Grid,
        part: &TensorPartition,
        axis: usize,
        k: &mut Vec<u32>,
        visit: &mut F,
    ) {
        for l in 0..=part.levels() {
            let mut buf = data.to_vec();
            scale_along_axis(&mut buf, grid, axis, part.axis_factor(l));
            fourier::transform_axis(&mut buf, grid, axis, Direction::Inverse);
            k[axis] = l;
            if axis == 0 {
                visit(k, &buf);
            } else {
                recurse(&buf, grid, part, axis - 1, k, visit);
            }
        }
    }
    recurse(spectrum.samples(), &grid, part, dim - 1, &mut k, &mut visit);
}

fn sample_lp(samples: &[Complex64], vol: f64, p: f64) -> f64 {
    let m = sequence_lp(samples.iter().map(|z| z.norm()), p);
    if p.is_infinite() {
        m
    } else {
        m * vol.powf(1.0 / p)
    }
}

/// `L_p` norms of every band piece, with the truncation tail.
pub fn piece_norms(f: &SampledFunction, flavor: Flavor, p: f64, settings: &NormSettings) -> Result<PieceNorms> {
    check_exponent(p)?;
    let spec = spectrum(f)?;
    piece_norms_of_spectrum(&spec, flavor, p, settings)
}

pub(crate) fn piece_norms_of_spectrum(
    spec: &SampledFunction,
    flavor: Flavor,
    p: f64,
    settings: &NormSettings,
) -> Result<PieceNorms> {
    let grid = *spec.grid();
    let levels = settings.level(&grid)?;
    let freq_vol = grid.cell_volume(Side::Frequency);
    let space_vol = grid.cell_volume(Side::Space);
    match flavor {
        Flavor::Isotropic => {
            let part = IsotropicPartition::build(&grid, levels)?;
            let tail = crate::partition::relative_mass(spec, &part.residual());
            check_tail(tail, settings)?;
            let mut entries = Vec::with_capacity(levels as usize + 1);
            for (j, m) in part.pieces().iter().enumerate() {
                let v = if p == 2.0 {
                    let s: f64 = spec.samples().iter().zip(m.values()).map(|(z, w)| z.norm_sqr() * w * w).sum();
                    (s * freq_vol).sqrt()
                } else {
                    let piece = fourier::inverse(&m.apply(spec)?)?;
                    sample_lp(piece.samples(), space_vol, p)
                };
                entries.push((vec![j as u32], v));
            }
            Ok(PieceNorms { flavor, p, levels, tail, entries })
        }
        Flavor::Mixed => {
            let part = TensorPartition::build(&grid, levels)?;
            let tail = tensor_tail(spec, &part);
            check_tail(tail, settings)?;
            let mut entries = if p == 2.0 {
                // Discrete Plancherel: ||(phi_k f^)^v||_2 = ||phi_k f^||_2 exactly.
                let power: Vec<f64> = spec.samples().iter().map(Complex64::norm_sqr).collect();
                let squares: Vec<Vec<f64>> =
                    (0..=levels).map(|l| part.axis_factor(l).iter().map(|w| w * w).collect()).collect();
                let mat: Vec<&[f64]> = squares.iter().map(Vec::as_slice).collect();
                let mut data = power;
                let mut shape = vec![grid.points_per_axis(); grid.dim()];
                for axis in 0..grid.dim() {
                    let (d, s) = contract_real(&data, &shape, axis, &mat);
                    data = d;
                    shape = s;
                }
                part.indices().into_iter().zip(data).map(|(k, s)| (k, (s * freq_vol).sqrt())).collect()
            } else {
                let mut e = Vec::new();
                for_each_tensor_piece(spec, &part, |k, piece| e.push((k.to_vec(), sample_lp(piece, space_vol, p))));
                e
            };
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Ok(PieceNorms { flavor, p, levels, tail, entries })
        }
    }
}

/// Besov norm `(sum_k 2^{r[k]q} ||(phi_k f^)^v||_p^q)^{1/q}`.
pub fn besov_norm(f: &SampledFunction, spec: &SpaceSpec, settings: &NormSettings) -> Result<NormValue> {
    let spec = spec.canonical();
    if spec.family != Family::B {
        return Err(Error::InvalidArgument(format!("{spec} is not a Besov space")));
    }
    spec.validate()?;
    let pieces = piece_norms(f, spec.flavor, spec.p, settings)?;
    Ok(NormValue { value: pieces.besov(spec.smoothness, spec.q), tail: pieces.tail, levels: pieces.levels })
}

/// Triebel-Lizorkin norm `|| (sum_k 2^{r[k]q} |(phi_k f^)^v|^q)^{1/q} ||_p`, accumulated pointwise.
pub fn tl_norm(f: &SampledFunction, spec: &SpaceSpec, settings: &NormSettings) -> Result<NormValue> {
    if spec.family != Family::F {
        return Err(Error::InvalidArgument(format!("{spec} is not a Triebel-Lizorkin space")));
    }
    spec.validate()?;
    let s = spectrum(f)?;
    let grid = *s.grid();
    let levels = settings.level(&grid)?;
    let q = spec.q;
    let mut acc = vec![0.0f64; grid.len()];
    let mut add = |w: u32, piece: &[Complex64]| {
        let c = (spec.smoothness * w as f64).exp2();
        for (a, z) in acc.iter_mut().zip(piece) {
            let v = c * z.norm();
            if q.is_infinite() {
                *a = a.max(v);
            } else {
                *a += v.powf(q);
            }
        }
    };
    let tail = match spec.flavor {
        Flavor::Isotropic => {
            let part = IsotropicPartition::build(&grid, levels)?;
            let tail = crate::partition::relative_mass(&s, &part.residual());
            check_tail(tail, settings)?;
            for (j, m) in part.pieces().iter().enumerate() {
                let piece = fourier::inverse(&m.apply(&s)?)?;
                add(j as u32, piece.samples());
            }
            tail
        }
        Flavor::Mixed => {
            let part = TensorPartition::build(&grid, levels)?;
            let tail = tensor_tail(&s, &part);
            check_tail(tail, settings)?;
            for_each_tensor_piece(&s, &part, |k, piece| add(k.iter().sum(), piece));
            tail
        }
    };
    if q.is_finite() {
        for a in &mut acc {
            *a = a.powf(1.0 / q);
        }
    }
    let vol = grid.cell_volume(Side::Space);
    let value = sequence_lp(acc.into_iter(), spec.p) * vol.powf(1.0 / spec.p);
    Ok(NormValue { value, tail, levels })
}

/// Relative spectral mass with `max_l |xi_l| > (2/3) xi_max`.
fn top_frequency_mass(spec: &SampledFunction) -> f64 {
    let grid = *spec.grid();
    let xi = grid.axis(Side::Frequency);
    let cut = 2.0 * grid.max_frequency() / 3.0;
    let mut total = 0.0;
    let mut top = 0.0;
    for (flat, z) in spec.samples().iter().enumerate() {
        let idx = grid.multi_index(flat);
        let m = z.norm_sqr();
        total += m;
        if (0..grid.dim()).any(|a| xi[idx[a]].abs() > cut) {
            top += m;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (top / total).sqrt()
    }
}

/// `sum_{0 <= alpha_j <= r} ||D^alpha f||_p` with spectral derivatives.
pub fn sobolev_mixed_norm(f: &SampledFunction, r: u32, p: f64, settings: &NormSettings) -> Result<NormValue> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidExponent(p));
    }
    let s = spectrum(f)?;
    let tail = top_frequency_mass(&s);
    check_tail(tail, settings)?;
    let grid = *s.grid();
    let dim = grid.dim();
    let xi = grid.axis(Side::Frequency);
    let count = (r as usize + 1).pow(dim as u32);
    let mut value = 0.0;
    for c in 0..count {
        let mut alpha = vec![0u32; dim];
        let mut rest = c;
        for a in (0..dim).rev() {
            alpha[a] = (rest % (r as usize + 1)) as u32;
            rest /= r as usize + 1;
        }
        let factors: Vec<Vec<Complex64>> = alpha
            .iter()
            .map(|&k| xi.iter().map(|&t| Complex64::new(0.0, t).powu(k)).collect())
            .collect();
        let mut d = s.samples().to_vec();
        for (flat, z) in d.iter_mut().enumerate() {
            let idx = grid.multi_index(flat);
            for (a, fac) in factors.iter().enumerate() {
                *z *= fac[idx[a]];
            }
        }
        let deriv = fourier::inverse(&SampledFunction::new(grid, Side::Frequency, d)?)?;
        value += lp_norm(&deriv, p)?;
    }
    Ok(NormValue { value, tail, levels: r })
}

/// Norm of `f` in `spec`, dispatched on the family.
pub fn evaluate(f: &SampledFunction, spec: &SpaceSpec, settings: &NormSettings) -> Result<NormValue> {
    spec.validate()?;
    let spec = spec.canonical();
    match spec.family {
        Family::B | Family::C => besov_norm(f, &spec, settings),
        Family::F => tl_norm(f, &spec, settings),
        Family::W => sobolev_mixed_norm(f, spec.smoothness as u32, spec.p, settings),
        Family::Lp => {
            f.require_side(Side::Space)?;
            Ok(NormValue { value: lp_norm(f, spec.p)?, tail: 0.0, levels: 0 })
        }
    }
}

/// Mixed `B_{p,p}` norm of the tensor product of one-dimensional factors.
///
/// Pieces of a tensor product are tensor products of the factor pieces, so with
/// `p = q` the norm is the product of the factor norms. The reported tail is the sum
/// of the factor tails, an upper bound for the tail of the product.
pub fn tensor_product_norm(factors: &[SampledFunction], spec: &SpaceSpec, settings: &NormSettings) -> Result<NormValue> {
    spec.validate()?;
    let spec = spec.canonical();
    if spec.flavor != Flavor::Mixed || spec.family != Family::B || spec.p != spec.q {
        return Err(Error::InvalidArgument(format!("{spec} does not factor over tensor products")));
    }
    if factors.is_empty() || factors.iter().any(|f| f.grid().dim() != 1) {
        return Err(Error::InvalidArgument("tensor factors must be one-dimensional and nonempty".into()));
    }
    let mut out = NormValue { value: 1.0, tail: 0.0, levels: 0 };
    for f in factors {
        let v = besov_norm(f, &spec, settings)?;
        out.value *= v.value;
        out.tail += v.tail;
        out.levels = v.levels;
    }
    check_tail(out.tail, settings)?;
    Ok(out)
}

/// Norm with default settings.
pub fn norm(f: &SampledFunction, spec: &SpaceSpec) -> Result<f64> {
    Ok(evaluate(f, spec, &NormSettings::default())?.value)
}

/// Polynomial weights `w_a(x) = (1+|x|^2)^{a/2}` and `v_s(x) = prod_j (1+x_j^2)^{s/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Weight {
    Isotropic(f64),
    Tensor(f64),
}

impl Weight {
    pub fn exponent(&self) -> f64 {
        match *self {
            Weight::Isotropic(a) | Weight::Tensor(a) => a,
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match *self {
            Weight::Isotropic(a) => (1.0 + x.iter().map(|t| t * t).sum::<f64>()).powf(a / 2.0),
            Weight::Tensor(s) => x.iter().map(|t| (1.0 + t * t).powf(s / 2.0)).product(),
        }
    }
}

/// `w f` for a space-side function.
pub fn apply_weight(f: &SampledFunction, w: Weight) -> Result<SampledFunction> {
    f.require_side(Side::Space)?;
    Ok(f.multiply_by(|x| w.eval(x)))
}

pub fn weighted_norm(f: &SampledFunction, spec: &SpaceSpec, w: Weight, settings: &NormSettings) -> Result<NormValue> {
    evaluate(&apply_weight(f, w)?, spec, settings)
}

/// Lift `(w f^)^v`: `J_s` for [`Weight::Tensor`], `I_a` for [`Weight::Isotropic`].
pub fn lift(f: &SampledFunction, w: Weight, settings: &NormSettings) -> Result<SampledFunction> {
    let s = spectrum(f)?;
    if w.exponent() > 0.0 {
        check_tail(top_frequency_mass(&s), settings)?;
    }
    fourier::inverse(&s.multiply_by(|xi| w.eval(xi)))
}
