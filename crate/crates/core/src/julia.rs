//! Escape-time classification for the model maps, grayscale rendering of the
//! surviving set, and box-counting dimension estimates.
//!
//! The dynamics are those of the model `f_l`, iterated on `Log z`. The entire
//! function `E_l` is within a factor 2 of `f_l` on the tract, so the pictures
//! describe its Julia set only up to that comparison.

use std::path::Path;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, GrayImage, ImageEncoder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lift_overflow_modulus, log_lift_step, LiftStep, ModelParams};
use crate::numeric::{linear_fit, principal_log};
use crate::pressure::{DimEstimate, DimMethod};
use crate::tract::RadiusConfig;
use crate::ComplexValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Classification {
    /// Survived `n_max` steps in `{|w| > r}`.
    InJulia(usize),
    /// Modulus dropped to `≤ r` at `step`. `domain` flags a branch-cut hit.
    Escaped { step: usize, domain: bool },
    /// `log |f^step(z)|` overflowed with `|f^step(z)| > r`; the next step is not computable.
    Undecided(usize),
}

impl Classification {
    pub fn is_julia(&self) -> bool {
        matches!(self, Classification::InJulia(_))
    }

    pub fn is_undecided(&self) -> bool {
        matches!(self, Classification::Undecided(_))
    }

    /// Grayscale shade: black for survivors, a fixed mid-gray for undecided
    /// orbits, light shades darkening with the escape step otherwise.
    pub fn shade(&self) -> u8 {
        match *self {
            Classification::InJulia(_) => 0,
            Classification::Undecided(_) => UNDECIDED_SHADE,
            Classification::Escaped { step, .. } => (255 - 24 * step.min(4)) as u8,
        }
    }
}

pub const UNDECIDED_SHADE: u8 = 96;

pub fn classify(z0: ComplexValue, params: &ModelParams, cfg: &RadiusConfig, n_max: usize) -> Classification {
    let log_r = cfg.log_r();
    if !(z0.norm() > cfg.r) {
        return Classification::Escaped { step: 0, domain: false };
    }
    let mut zeta = match principal_log(z0) {
        Ok(z) => z,
        Err(_) => return Classification::Escaped { step: 0, domain: true },
    };
    for n in 1..=n_max {
        match log_lift_step(zeta, params) {
            Ok(LiftStep::Value(next)) => {
                if next.re <= log_r {
                    return Classification::Escaped { step: n, domain: false };
                }
                zeta = next;
            }
            Ok(LiftStep::Overflow { inner }) => {
                return if lift_overflow_modulus(inner).exceeds(log_r) {
                    Classification::Undecided(n)
                } else {
                    Classification::Escaped { step: n, domain: false }
                };
            }
            Err(_) => return Classification::Escaped { step: n, domain: true },
        }
    }
    Classification::InJulia(n_max)
}

/// Axis-aligned rectangle of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite())
            && re_max > re_min
            && im_max > im_min;
        if !ok {
            return Err(Error::Config(format!(
                "bad window [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Window {
            re_min,
            re_max,
            im_min,
            im_max,
        })
    }

    pub fn centered(center: ComplexValue, width: f64, height: f64) -> Result<Self> {
        Window::new(
            center.re - width / 2.0,
            center.re + width / 2.0,
            center.im - height / 2.0,
            center.im + height / 2.0,
        )
    }

    /// Center of pixel `(i, j)`, row 0 at the top.
    pub fn pixel_center(&self, i: usize, j: usize, width: usize, height: usize) -> ComplexValue {
        self.sub_point(i as f64 + 0.5, j as f64 + 0.5, width, height)
    }

    fn sub_point(&self, x: f64, y: f64, width: usize, height: usize) -> ComplexValue {
        let dx = (self.re_max - self.re_min) / width as f64;
        let dy = (self.im_max - self.im_min) / height as f64;
        ComplexValue::new(self.re_min + x * dx, self.im_max - y * dy)
    }
}

/// Row-major classification of pixel centers.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassGrid {
    pub width: usize,
    pub height: usize,
    pub cells: Vec<Classification>,
}

impl ClassGrid {
    pub fn compute(
        window: &Window,
        width: usize,
        height: usize,
        params: &ModelParams,
        cfg: &RadiusConfig,
        n_max: usize,
    ) -> Self {
        let cells = (0..width * height)
            .into_par_iter()
            .map(|k| classify(window.pixel_center(k % width, k / width, width, height), params, cfg, n_max))
            .collect();
        ClassGrid { width, height, cells }
    }

    pub fn count(&self, pred: impl Fn(&Classification) -> bool) -> usize {
        self.cells.iter().filter(|c| pred(c)).count()
    }

    pub fn mask(&self, pred: impl Fn(&Classification) -> bool) -> Mask {
        Mask {
            width: self.width,
            height: self.height,
            bits: self.cells.iter().map(pred).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub width: usize,
    pub height: usize,
    pub n_max: usize,
    /// Average a 2x2 block of sub-pixel orbits per pixel.
    pub supersample: bool,
}

pub fn render(window: &Window, opts: &RenderOptions, params: &ModelParams, cfg: &RadiusConfig) -> Result<GrayImage> {
    if opts.width == 0 || opts.height == 0 {
        return Err(Error::Config("image dimensions must be positive".into()));
    }
    let (w, h) = (opts.width, opts.height);
    let shades: Vec<u8> = (0..w * h)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % w, k / w);
            if opts.supersample {
                let sum: u32 = [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)]
                    .iter()
                    .map(|&(a, b)| {
                        let z = window.sub_point(i as f64 + a, j as f64 + b, w, h);
                        classify(z, params, cfg, opts.n_max).shade() as u32
                    })
                    .sum();
                ((sum + 2) / 4) as u8
            } else {
                classify(window.pixel_center(i, j, w, h), params, cfg, opts.n_max).shade()
            }
        })
        .collect();
    GrayImage::from_raw(w as u32, h as u32, shades)
        .ok_or_else(|| Error::Degenerate("image buffer size mismatch".into()))
}

/// Writes a binary portable graymap.
pub fn write_pgm(img: &GrayImage, path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    PnmEncoder::new(file)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(img.as_raw(), img.width(), img.height(), ExtendedColorType::L8)
        .map_err(|e| Error::Io(e.to_string()))
}

/// Boolean pixel mask, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn empty(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn set(&mut self, i: usize, j: usize) {
        self.bits[j * self.width + i] = true;
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.width + i]
    }

    pub fn occupied(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// Number of `s x s` pixel boxes containing a set pixel.
    pub fn box_count(&self, s: usize) -> usize {
        let (bw, bh) = (self.width.div_ceil(s), self.height.div_ceil(s));
        let mut hit = vec![false; bw * bh];
        for j in 0..self.height {
            let row = &self.bits[j * self.width..(j + 1) * self.width];
            for (i, _) in row.iter().enumerate().filter(|(_, b)| **b) {
                hit[(j / s) * bw + i / s] = true;
            }
        }
        hit.into_iter().filter(|b| *b).count()
    }

    /// Straight segment between two pixel positions.
    pub fn segment(width: usize, height: usize, from: (f64, f64), to: (f64, f64)) -> Self {
        let mut m = Mask::empty(width, height);
        let steps = (4.0 * (to.0 - from.0).abs().max((to.1 - from.1).abs())).ceil() as usize + 1;
        for k in 0..=steps {
            let s = k as f64 / steps as f64;
            let (x, y) = (from.0 + s * (to.0 - from.0), from.1 + s * (to.1 - from.1));
            if x >= 0.0 && y >= 0.0 && (x as usize) < width && (y as usize) < height {
                m.set(x as usize, y as usize);
            }
        }
        m
    }

    pub fn filled(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![true; width * height],
        }
    }
}

/// Least-squares slope of `log N` against `log(1/δ)`.
pub fn fit_box_dimension(box_pixels: &[usize], counts: &[usize], pixel_size: f64) -> Result<DimEstimate> {
    if counts.iter().any(|&c| c == 0) {
        return Err(Error::Degenerate("no occupied boxes".into()));
    }
    let xs: Vec<f64> = box_pixels.iter().map(|&s| -(s as f64 * pixel_size).ln()).collect();
    let ys: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let (_, slope, rms) = linear_fit(&xs, &ys)?;
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let se = if n > 2.0 { rms * (n / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(DimEstimate {
        value: slope,
        lo: slope - 2.0 * se,
        hi: slope + 2.0 * se,
        method: DimMethod::Boxcount,
        residual: rms,
        spread: 0.0,
    })
}

fn check_scales(box_pixels: &[usize]) -> Result<()> {
    let (lo, hi) = (
        box_pixels.iter().copied().min().unwrap_or(0),
        box_pixels.iter().copied().max().unwrap_or(0),
    );
    if box_pixels.len() < 4 || lo == 0 || hi < 4 * lo {
        return Err(Error::Config(
            "box counting needs at least 4 scales spanning 2 dyadic octaves".into(),
        ));
    }
    Ok(())
}

/// Box-count fit for an arbitrary mask; `pixel_size` is the side of one pixel.
pub fn mask_dimension(mask: &Mask, box_pixels: &[usize], pixel_size: f64) -> Result<(Vec<usize>, DimEstimate)> {
    check_scales(box_pixels)?;
    let counts: Vec<usize> = box_pixels.iter().map(|&s| mask.box_count(s)).collect();
    let fit = fit_box_dimension(box_pixels, &counts, pixel_size)?;
    Ok((counts, fit))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxCountReport {
    pub window: Window,
    pub resolution: usize,
    pub n_max: usize,
    /// Box side lengths in plane units, increasing.
    pub scales: Vec<f64>,
    pub box_pixels: Vec<usize>,
    /// Boxes meeting survivors or undecided orbits.
    pub counts_upper: Vec<usize>,
    /// Boxes meeting survivors only.
    pub counts_lower: Vec<usize>,
    pub upper: DimEstimate,
    /// `None` when no pixel survived all `n_max` steps.
    pub lower: Option<DimEstimate>,
    /// Bracket from both variants; an empty lower set contributes dimension 0.
    pub fitted_dim: DimEstimate,
    pub undecided_fraction: f64,
    pub julia_fraction: f64,
    pub note: String,
}

impl BoxCountReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["scale", "count_upper", "count_lower"])?;
        for k in 0..self.scales.len() {
            w.write_record([
                format!("{:e}", self.scales[k]),
                self.counts_upper[k].to_string(),
                self.counts_lower[k].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Dyadic box sizes `2^lo, …, 2^hi` pixels.
pub fn dyadic_boxes(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

/// Classifies a square `resolution²` sampling of `window` and fits both variants.
pub fn box_dimension(
    window: &Window,
    resolution: usize,
    params: &ModelParams,
    cfg: &RadiusConfig,
    n_max: usize,
    box_pixels: &[usize],
) -> Result<BoxCountReport> {
    check_scales(box_pixels)?;
    let grid = ClassGrid::compute(window, resolution, resolution, params, cfg, n_max);
    box_dimension_from_grid(window, &grid, n_max, box_pixels)
}

pub fn box_dimension_from_grid(
    window: &Window,
    grid: &ClassGrid,
    n_max: usize,
    box_pixels: &[usize],
) -> Result<BoxCountReport> {
    check_scales(box_pixels)?;
    let mut box_pixels = box_pixels.to_vec();
    box_pixels.sort_unstable();
    box_pixels.dedup();
    let pixel = (window.re_max - window.re_min) / grid.width as f64;
    let upper_mask = grid.mask(|c| c.is_julia() || c.is_undecided());
    let lower_mask = grid.mask(|c| c.is_julia());
    if upper_mask.occupied() == 0 {
        return Err(Error::Degenerate(
            "no pixel survived or stayed undecided; move the window onto the tract".into(),
        ));
    }
    let (counts_upper, upper) = mask_dimension(&upper_mask, &box_pixels, pixel)?;
    let counts_lower: Vec<usize> = box_pixels.iter().map(|&s| lower_mask.box_count(s)).collect();
    let lower = if lower_mask.occupied() > 0 {
        fit_box_dimension(&box_pixels, &counts_lower, pixel).ok()
    } else {
        None
    };
    let lo_val = lower.map_or(0.0, |d| d.value);
    let fitted_dim = DimEstimate {
        value: 0.5 * (upper.value + lo_val),
        lo: lo_val.min(upper.value),
        hi: upper.value.max(lo_val),
        method: DimMethod::Boxcount,
        residual: upper.residual.max(lower.map_or(0.0, |d| d.residual)),
        spread: 0.0,
    };
    let total = grid.cells.len() as f64;
    Ok(BoxCountReport {
        window: *window,
        resolution: grid.width,
        n_max,
        scales: box_pixels.iter().map(|&s| s as f64 * pixel).collect(),
        box_pixels,
        counts_upper,
        counts_lower,
        upper,
        lower,
        fitted_dim,
        undecided_fraction: grid.count(Classification::is_undecided) as f64 / total,
        julia_fraction: grid.count(Classification::is_julia) as f64 / total,
        note: "dynamics of the model map f_l; the entire approximation agrees with it on the tract up to a factor 2".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (ModelParams, RadiusConfig) {
        (
            ModelParams::new(1.0, 258.0).unwrap(),
            RadiusConfig { r: 260.0, l_min: 257.0 },
        )
    }

    #[test]
    fn inside_disk_escapes_immediately() {
        let (m, _) = setup();
        let cfg = RadiusConfig { r: 100.0, l_min: 97.0 };
        assert_eq!(
            classify(ComplexValue::new(1.0, 0.0), &m, &cfg, 10),
            Classification::Escaped { step: 0, domain: false }
        );
    }

    #[test]
    fn one_step_escape() {
        let (m, cfg) = setup();
        // l + e: f = e^e < r
        let z = ComplexValue::new(258.0 + std::f64::consts::E, 0.0);
        assert_eq!(z.norm() > cfg.r, true);
        assert_eq!(classify(z, &m, &cfg, 10), Classification::Escaped { step: 1, domain: false });
    }

    #[test]
    fn conjugation_invariant() {
        let (m, cfg) = setup();
        for k in 0..200 {
            let z = ComplexValue::new(262.0 + 0.37 * k as f64, 0.05 * (k % 17) as f64 - 0.3);
            assert_eq!(classify(z, &m, &cfg, 30), classify(z.conj(), &m, &cfg, 30), "{z}");
        }
    }

    #[test]
    fn uniform_image_inside_disk() {
        let (m, cfg) = setup();
        let w = Window::centered(ComplexValue::new(0.0, 0.0), 100.0, 100.0).unwrap();
        let opts = RenderOptions {
            width: 16,
            height: 12,
            n_max: 5,
            supersample: true,
        };
        let img = render(&w, &opts, &m, &cfg).unwrap();
        assert!(img.pixels().all(|p| p.0[0] == 255));
        assert_eq!(img.get_pixel(0, 0), &image::Luma([255]));
    }

    #[test]
    fn synthetic_masks() {
        let n = 512;
        let boxes = dyadic_boxes(1, 6);
        let line = Mask::segment(n, n, (3.0, 10.0), (500.0, 400.0));
        let (_, d1) = mask_dimension(&line, &boxes, 1.0 / n as f64).unwrap();
        assert!((d1.value - 1.0).abs() < 0.05, "{d1:?}");
        let (counts, d2) = mask_dimension(&Mask::filled(n, n), &boxes, 1.0 / n as f64).unwrap();
        assert!((d2.value - 2.0).abs() < 0.05, "{d2:?}");
        assert!(counts.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn scale_requirements() {
        let m = Mask::filled(64, 64);
        assert!(mask_dimension(&m, &[1, 2, 4], 1.0).is_err());
        assert!(mask_dimension(&m, &[4, 5, 6, 7], 1.0).is_err());
        assert!(mask_dimension(&Mask::empty(64, 64), &[1, 2, 4, 8], 1.0).is_err());
    }
}
