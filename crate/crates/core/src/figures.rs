//! Planar pictures of operator classes. Every picture is normalized so that
//! `x - y = (1, 0)`; a class `alpha Id + beta N` then maps the marker to a
//! disk and a composition maps it to a union of disks.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::class_calculus::{compose_general, InParams};
use crate::error::{Error, Result};
use crate::sampling;

pub const DEFAULT_RESOLUTION: usize = 512;
pub const MIN_RESOLUTION: usize = 64;
pub const CANVAS: f64 = 600.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Bounds {
    fn square(cx: f64, half: f64) -> Self {
        Bounds { xmin: cx - half, xmax: cx + half, ymin: -half, ymax: half }
    }
}

/// Boolean pixel grid, row-major, row 0 at `ymin`. A pixel is set when its
/// center belongs to the region.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    pub bounds: Bounds,
    pub resolution: usize,
    pub cells: Vec<bool>,
}

impl Raster {
    fn empty(bounds: Bounds, resolution: usize) -> Self {
        Raster { bounds, resolution, cells: vec![false; resolution * resolution] }
    }

    pub fn pixel_size(&self) -> (f64, f64) {
        let n = self.resolution as f64;
        ((self.bounds.xmax - self.bounds.xmin) / n, (self.bounds.ymax - self.bounds.ymin) / n)
    }

    /// Center of pixel in row `i`, column `j`.
    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        let (w, h) = self.pixel_size();
        (self.bounds.xmin + (j as f64 + 0.5) * w, self.bounds.ymin + (i as f64 + 0.5) * h)
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.resolution + j]
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    pub fn locate(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (w, h) = self.pixel_size();
        let j = ((x - self.bounds.xmin) / w).floor();
        let i = ((y - self.bounds.ymin) / h).floor();
        let n = self.resolution as f64;
        if i >= 0.0 && j >= 0.0 && i < n && j < n {
            Some((i as usize, j as usize))
        } else {
            None
        }
    }

    /// True if a set pixel lies within `radius` pixels (Chebyshev distance)
    /// of the pixel containing `(x, y)`.
    pub fn contains_dilated(&self, x: f64, y: f64, radius: usize) -> bool {
        let (w, h) = self.pixel_size();
        let jf = ((x - self.bounds.xmin) / w).floor();
        let i_f = ((y - self.bounds.ymin) / h).floor();
        let r = radius as f64;
        let n = self.resolution as f64;
        let lo_i = (i_f - r).max(0.0);
        let hi_i = (i_f + r).min(n - 1.0);
        let lo_j = (jf - r).max(0.0);
        let hi_j = (jf + r).min(n - 1.0);
        if lo_i > hi_i || lo_j > hi_j {
            return false;
        }
        for i in lo_i as usize..=hi_i as usize {
            for j in lo_j as usize..=hi_j as usize {
                if self.get(i, j) {
                    return true;
                }
            }
        }
        false
    }

    /// Number of set pixels whose center is farther than `radius + tol` from
    /// `(cx, 0)`.
    pub fn violations_outside_disk(&self, cx: f64, radius: f64, tol: f64) -> usize {
        let n = self.resolution;
        (0..n)
            .into_par_iter()
            .map(|i| {
                (0..n)
                    .filter(|&j| {
                        let (x, y) = self.center(i, j);
                        self.get(i, j) && (x - cx).hypot(y) > radius + tol
                    })
                    .count()
            })
            .sum()
    }

    /// Set pixels of `self` that are not set in `other` (same grid required).
    pub fn pixels_not_in(&self, other: &Raster) -> Result<usize> {
        if self.bounds != other.bounds || self.resolution != other.resolution {
            return Err(Error::Invalid("rasters on different grids".into()));
        }
        Ok(self.cells.iter().zip(&other.cells).filter(|(a, b)| **a && !**b).count())
    }

    /// Largest x among set pixel centers.
    pub fn max_x(&self) -> Option<f64> {
        let n = self.resolution;
        (0..n)
            .rev()
            .find(|&j| (0..n).any(|i| self.get(i, j)))
            .map(|j| self.center(0, j).0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Region2D {
    /// Disk centered at `(center_x, 0)`.
    Disk { center_x: f64, radius: f64 },
    Raster(Raster),
}

impl Region2D {
    fn extent(&self) -> f64 {
        match self {
            Region2D::Disk { center_x, radius } => center_x.abs() + radius,
            Region2D::Raster(r) => {
                let b = r.bounds;
                b.xmin.abs().max(b.xmax.abs()).max(b.ymin.abs()).max(b.ymax.abs())
            }
        }
    }
}

pub fn class_region(p: InParams) -> Result<Region2D> {
    if !(p.beta >= 0.0) || !p.alpha.is_finite() || !p.beta.is_finite() {
        return Err(Error::domain("beta", p.beta, "beta >= 0"));
    }
    Ok(Region2D::Disk { center_x: p.alpha, radius: p.beta })
}

/// Is `z` of the form `a2 q + b2 N2 q` for some `q` in the disk of `p1` and
/// some nonexpansive `N2`? Equivalently, does the disk of `p1` meet
/// `{q : (a2^2 - b2^2)|q|^2 - 2 a2 <z, q> + |z|^2 <= 0}`.
pub fn reachable(p1: InParams, p2: InParams, zx: f64, zy: f64) -> bool {
    let (a1, b1, a2, b2) = (p1.alpha, p1.beta, p2.alpha, p2.beta);
    let zz = zx * zx + zy * zy;
    let zn = zz.sqrt();
    let scale = a2 * a2 + b2 * b2;
    if scale == 0.0 {
        return zz == 0.0;
    }
    let k = a2 * a2 - b2 * b2;
    if k.abs() <= 1e-12 * scale {
        // The quadratic degenerates to a half-plane.
        return 2.0 * a2 * zx * a1 + 2.0 * a2.abs() * b1 * zn >= zz;
    }
    let (cx, cy) = (a2 * zx / k, a2 * zy / k);
    let r = zn * b2 / k.abs();
    let gap = (cx - a1).hypot(cy);
    if k > 0.0 {
        gap <= r + b1
    } else {
        gap + b1 >= r
    }
}

/// Composition bounds: the region lies in the disk of radius
/// `(|a1| + b1)(|a2| + b2)` around the origin.
fn composition_bounds(p1: InParams, p2: InParams, theta: f64) -> Bounds {
    let l = (p1.alpha.abs() + p1.beta) * (p2.alpha.abs() + p2.beta);
    let half = theta * l * 1.05;
    Bounds::square(1.0 - theta, if half > 0.0 { half } else { 1.0 })
}

fn check_resolution(resolution: usize) -> Result<()> {
    if resolution < MIN_RESOLUTION {
        return Err(Error::domain("resolution", resolution as f64, "resolution >= 64"));
    }
    Ok(())
}

/// Exact raster of the reachable set of `R2 R1` at the marker.
pub fn composition_region_exact(p1: InParams, p2: InParams, resolution: usize) -> Result<Region2D> {
    relaxed_composition_region(p1, p2, 1.0, resolution)
}

/// Same as [`composition_region_exact`] for `(1 - theta) Id + theta R2 R1`.
pub fn relaxed_composition_region(p1: InParams, p2: InParams, theta: f64, resolution: usize) -> Result<Region2D> {
    check_resolution(resolution)?;
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::domain("theta", theta, "theta > 0"));
    }
    let mut raster = Raster::empty(composition_bounds(p1, p2, theta), resolution);
    let (w, h) = raster.pixel_size();
    let b = raster.bounds;
    raster.cells.par_chunks_mut(resolution).enumerate().for_each(|(i, row)| {
        let y = b.ymin + (i as f64 + 0.5) * h;
        for (j, cell) in row.iter_mut().enumerate() {
            let x = b.xmin + (j as f64 + 0.5) * w;
            *cell = reachable(p1, p2, (x - (1.0 - theta)) / theta, y / theta);
        }
    });
    Ok(Region2D::Raster(raster))
}

/// Rasterized union of `Disk(a2 q, b2 |q|)` over a polar grid of `q` in the
/// disk of `p1`, on the grid used by [`composition_region_exact`].
pub fn sweep_region(p1: InParams, p2: InParams, resolution: usize, radial: usize, angular: usize) -> Result<Raster> {
    check_resolution(resolution)?;
    let mut raster = Raster::empty(composition_bounds(p1, p2, 1.0), resolution);
    let (w, h) = raster.pixel_size();
    let b = raster.bounds;
    let n = resolution as isize;
    let mut stamp = |qx: f64, qy: f64| {
        let (cx, cy) = (p2.alpha * qx, p2.alpha * qy);
        let r = p2.beta * qx.hypot(qy);
        let j0 = (((cx - r - b.xmin) / w).floor() as isize).max(0);
        let j1 = (((cx + r - b.xmin) / w).ceil() as isize).min(n - 1);
        let i0 = (((cy - r - b.ymin) / h).floor() as isize).max(0);
        let i1 = (((cy + r - b.ymin) / h).ceil() as isize).min(n - 1);
        for i in i0..=i1 {
            for j in j0..=j1 {
                let x = b.xmin + (j as f64 + 0.5) * w;
                let y = b.ymin + (i as f64 + 0.5) * h;
                if (x - cx).hypot(y - cy) <= r {
                    raster.cells[i as usize * resolution + j as usize] = true;
                }
            }
        }
    };
    stamp(p1.alpha, 0.0);
    for k in 1..=radial {
        let rho = p1.beta * k as f64 / radial as f64;
        for m in 0..angular {
            let phi = std::f64::consts::TAU * m as f64 / angular as f64;
            stamp(p1.alpha + rho * phi.cos(), rho * phi.sin());
        }
    }
    Ok(raster)
}

/// Image of the marker under `(1 - theta) Id + theta R2 R1` for random
/// planar rotations or reflections `N1`, `N2`.
pub fn sample_displacements(p1: InParams, p2: InParams, theta: f64, count: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = sampling::rng(seed);
    let mut isometry = |v: (f64, f64)| {
        let phi = sampling::uniform(&mut rng, 0.0, std::f64::consts::TAU);
        let (s, c) = phi.sin_cos();
        let v = if rng.random::<bool>() { (v.0, -v.1) } else { v };
        (c * v.0 - s * v.1, s * v.0 + c * v.1)
    };
    (0..count)
        .map(|_| {
            let n1 = isometry((1.0, 0.0));
            let w = (p1.alpha + p1.beta * n1.0, p1.beta * n1.1);
            let n2 = isometry(w);
            let z = (p2.alpha * w.0 + p2.beta * n2.0, p2.alpha * w.1 + p2.beta * n2.1);
            ((1.0 - theta) + theta * z.0, theta * z.1)
        })
        .collect()
}

/// A two-operator picture: `(1 - theta) Id + theta R2 R1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositionPreset {
    pub p1: InParams,
    pub p2: InParams,
    pub theta: f64,
}

impl CompositionPreset {
    pub fn exact(&self, resolution: usize) -> Result<Raster> {
        match relaxed_composition_region(self.p1, self.p2, self.theta, resolution)? {
            Region2D::Raster(r) => Ok(r),
            Region2D::Disk { .. } => unreachable!(),
        }
    }

    /// Conservative disk from the two-operator composition formula, if its
    /// hypotheses hold.
    pub fn certified(&self) -> Option<InParams> {
        compose_general(self.p1, self.p2).ok().map(|p| p.relaxed(self.theta))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    pub fill: String,
    pub fill_opacity: f64,
    pub stroke: String,
    pub dashed: bool,
}

impl Style {
    pub fn filled(color: &str, opacity: f64) -> Self {
        Style { fill: color.into(), fill_opacity: opacity, stroke: "none".into(), dashed: false }
    }

    pub fn outline(color: &str) -> Self {
        Style { fill: "none".into(), fill_opacity: 0.0, stroke: color.into(), dashed: true }
    }
}

pub type Layer = (Region2D, Style);

const SHADES: [&str; 3] = ["#1f4e9c", "#5b8bd6", "#a9c4ee"];

fn avg(theta: f64) -> InParams {
    InParams { alpha: 1.0 - theta, beta: theta }
}

fn coco(beta: f64) -> InParams {
    InParams { alpha: beta / 2.0, beta: beta / 2.0 }
}

fn scaled_fb(mu: f64) -> CompositionPreset {
    let (gamma, omega) = (2.0, 0.3);
    CompositionPreset {
        p1: InParams { alpha: 1.0 - gamma * (0.5 - mu), beta: gamma / 2.0 },
        p2: coco(1.0 / (1.0 + gamma * omega)),
        theta: 1.0,
    }
}

pub const PRESETS: [&str; 14] = [
    "lipschitz-0.8",
    "cocoercive-1.4-0.7",
    "averaged-0.25-0.5-0.75",
    "conic-1.2-1.5",
    "averaged-averaged-0.5-0.5",
    "averaged-averaged-0.7-0.6",
    "conic-conic-1.7-0.45",
    "conic-conic-1.7-0.7",
    "fb-conic-3.9",
    "fb-relaxed-0.04",
    "scaled-averaged-cocoercive",
    "scaled-averaged-cocoercive-0.2",
    "scaled-averaged-cocoercive-0.4",
    "monotone-shift-0.2",
];

/// Classes drawn as plain disks for the single-operator presets.
pub fn single_preset(name: &str) -> Option<Vec<InParams>> {
    Some(match name {
        "lipschitz-0.8" => vec![InParams { alpha: 0.0, beta: 0.8 }],
        "cocoercive-1.4-0.7" => vec![coco(1.4), coco(0.7)],
        "averaged-0.25-0.5-0.75" => vec![avg(0.25), avg(0.5), avg(0.75)],
        "conic-1.2-1.5" => vec![avg(1.2), avg(1.5)],
        // Resolvent and reflected resolvent of a 0.2-monotone operator.
        "monotone-shift-0.2" => {
            let r = 1.0 / (1.0 + 0.2);
            vec![InParams { alpha: r / 2.0, beta: r / 2.0 }, InParams { alpha: r - 1.0, beta: r }]
        }
        _ => return None,
    })
}

pub fn composition_preset(name: &str) -> Option<CompositionPreset> {
    let plain = |p1, p2| CompositionPreset { p1, p2, theta: 1.0 };
    Some(match name {
        "averaged-averaged-0.5-0.5" => plain(avg(0.5), avg(0.5)),
        "averaged-averaged-0.7-0.6" => plain(avg(0.7), avg(0.6)),
        "conic-conic-1.7-0.45" => plain(avg(1.7), avg(0.45)),
        "conic-conic-1.7-0.7" => plain(avg(1.7), avg(0.7)),
        "fb-conic-3.9" => plain(avg(3.9 / 2.0), avg(0.5)),
        "fb-relaxed-0.04" => CompositionPreset { p1: avg(3.9 / 2.0), p2: avg(0.5), theta: 0.04 },
        "scaled-averaged-cocoercive" => scaled_fb(0.3),
        "scaled-averaged-cocoercive-0.2" => scaled_fb(0.2),
        "scaled-averaged-cocoercive-0.4" => scaled_fb(0.4),
        _ => return None,
    })
}

/// Layers for a named preset: class disks, or the exact composition raster
/// with the certified disk overlaid when one exists.
pub fn preset_layers(name: &str, resolution: usize) -> Result<Vec<Layer>> {
    if let Some(classes) = single_preset(name) {
        return classes
            .into_iter()
            .enumerate()
            .map(|(k, p)| Ok((class_region(p)?, Style::filled(SHADES[k % SHADES.len()], 0.45))))
            .collect();
    }
    let c = composition_preset(name).ok_or_else(|| Error::Invalid(format!("unknown preset {name}")))?;
    let mut layers = vec![(Region2D::Raster(c.exact(resolution)?), Style::filled("#555555", 0.8))];
    if let Some(p) = c.certified() {
        layers.push((class_region(p)?, Style::outline("#c0392b")));
    }
    Ok(layers)
}

fn num(x: f64) -> String {
    let s = format!("{:.3}", x);
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn style_attrs(s: &Style) -> String {
    let mut a = format!("fill=\"{}\"", s.fill);
    if s.fill != "none" {
        a += &format!(" fill-opacity=\"{}\"", num(s.fill_opacity));
    }
    a += &format!(" stroke=\"{}\"", s.stroke);
    if s.stroke != "none" {
        a += " stroke-width=\"1.5\"";
    }
    if s.dashed {
        a += " stroke-dasharray=\"6 4\"";
    }
    a
}

/// SVG document for the layers. The window is centered at the origin and
/// wide enough for every layer and the unit circle.
pub fn render_svg(layers: &[Layer], markers: &[(f64, f64)]) -> String {
    let extent = layers
        .iter()
        .map(|(r, _)| r.extent())
        .chain(markers.iter().map(|m| m.0.abs().max(m.1.abs())))
        .fold(1.0_f64, f64::max);
    let scale = CANVAS / (2.0 * extent * 1.1);
    let mid = CANVAS / 2.0;
    let px = |x: f64| num(mid + x * scale);
    let py = |y: f64| num(mid - y * scale);

    let mut s = String::new();
    s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n";
    s += "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
    s += "<g id=\"guides\" stroke=\"#999999\" stroke-width=\"1\" fill=\"none\">\n";
    let _ = writeln!(s, "<line x1=\"0.000\" y1=\"{}\" x2=\"600.000\" y2=\"{}\"/>", py(0.0), py(0.0));
    let _ = writeln!(s, "<line x1=\"{}\" y1=\"0.000\" x2=\"{}\" y2=\"600.000\"/>", px(0.0), px(0.0));
    let _ = writeln!(
        s,
        "<circle class=\"guide\" cx=\"{}\" cy=\"{}\" r=\"{}\" stroke-dasharray=\"3 3\"/>",
        px(0.0),
        py(0.0),
        num(scale)
    );
    s += "</g>\n<g id=\"regions\">\n";
    for (region, style) in layers {
        match region {
            Region2D::Disk { center_x, radius } => {
                let _ = writeln!(
                    s,
                    "<circle class=\"region\" cx=\"{}\" cy=\"{}\" r=\"{}\" {}/>",
                    px(*center_x),
                    py(0.0),
                    num(radius * scale),
                    style_attrs(style)
                );
            }
            Region2D::Raster(r) => {
                let (w, h) = r.pixel_size();
                let mut d = String::new();
                for i in 0..r.resolution {
                    let mut j = 0;
                    while j < r.resolution {
                        if !r.get(i, j) {
                            j += 1;
                            continue;
                        }
                        let start = j;
                        while j < r.resolution && r.get(i, j) {
                            j += 1;
                        }
                        let x0 = r.bounds.xmin + start as f64 * w;
                        let y1 = r.bounds.ymin + (i + 1) as f64 * h;
                        let _ = write!(
                            d,
                            "M{} {}h{}v{}h-{}z",
                            px(x0),
                            py(y1),
                            num((j - start) as f64 * w * scale),
                            num(h * scale),
                            num((j - start) as f64 * w * scale)
                        );
                    }
                }
                let _ = writeln!(s, "<path class=\"region\" d=\"{}\" {}/>", d, style_attrs(style));
            }
        }
    }
    s += "</g>\n<g id=\"markers\" stroke=\"black\" stroke-width=\"2\">\n";
    let mut all = vec![(1.0, 0.0)];
    all.extend(markers.iter().copied().filter(|m| *m != (1.0, 0.0)));
    for (x, y) in all {
        let (cx, cy) = (mid + x * scale, mid - y * scale);
        let _ = writeln!(
            s,
            "<path d=\"M{} {}L{} {}M{} {}L{} {}\"/>",
            num(cx - 5.0),
            num(cy - 5.0),
            num(cx + 5.0),
            num(cy + 5.0),
            num(cx - 5.0),
            num(cy + 5.0),
            num(cx + 5.0),
            num(cy - 5.0)
        );
    }
    s += "</g>\n</svg>\n";
    s
}

pub fn emit_svg(layers: &[Layer], markers: &[(f64, f64)], path: &Path) -> Result<()> {
    std::fs::write(path, render_svg(layers, markers)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
