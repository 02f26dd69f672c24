//! Painted-sphere pictures of the approximations `K_m` of a mating's Julia set.
//!
//! `K_0` is the closed unit disk painted white and its complement black.
//! `K_m = R_m⁻¹(K_{m−1})`, so a point is black in `K_m` exactly when
//! `R_1 ∘ R_2 ∘ … ∘ R_m` sends it outside the unit disk.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::geometry::SpherePoint;
use crate::medusa::MapParams;
use crate::par::Execution;

/// Largest `m` used when none is requested.
pub const DEFAULT_MAX_M: usize = 14;

pub fn default_m(trace_len: usize) -> usize {
    trace_len.min(DEFAULT_MAX_M)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shade {
    Black,
    White,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pixel {
    Black,
    White,
    /// Black on the far side of the sphere, seen through white.
    GreyBack,
    Background,
}

impl Pixel {
    pub fn rgb(self) -> [u8; 3] {
        match self {
            Pixel::Black => [0, 0, 0],
            Pixel::White => [255, 255, 255],
            Pixel::GreyBack => [128, 128, 128],
            Pixel::Background => [200, 200, 255],
        }
    }

    pub fn from_rgb(rgb: [u8; 3]) -> Option<Self> {
        [
            Pixel::Black,
            Pixel::White,
            Pixel::GreyBack,
            Pixel::Background,
        ]
        .into_iter()
        .find(|p| p.rgb() == rgb)
    }
}

impl From<Shade> for Pixel {
    fn from(s: Shade) -> Self {
        match s {
            Shade::Black => Pixel::Black,
            Shade::White => Pixel::White,
        }
    }
}

/// Colour of `z` in `K_m`.
///
/// # Panics
/// If `m > trace.len()`.
pub fn color_at(z: SpherePoint, trace: &[MapParams], m: usize) -> Shade {
    assert!(
        m <= trace.len(),
        "m = {m} exceeds trace length {}",
        trace.len()
    );
    let w = trace[..m].iter().rev().fold(z, |acc, p| p.eval(acc));
    if w.norm() > 1.0 {
        Shade::Black
    } else {
        Shade::White
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<Pixel>,
}

impl Image {
    /// # Panics
    /// If a dimension is zero.
    pub fn new(width: usize, height: usize, fill: Pixel) -> Self {
        assert!(
            width >= 1 && height >= 1,
            "image dimensions must be positive"
        );
        Image {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    /// Pixel in column `x` of row `y`, rows counted from the top.
    pub fn get(&self, x: usize, y: usize) -> Pixel {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, p: Pixel) {
        self.pixels[y * self.width + x] = p;
    }

    pub fn count(&self, p: Pixel) -> usize {
        self.pixels.iter().filter(|&&q| q == p).count()
    }

    pub fn write_ppm<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self.pixels.iter().flat_map(|p| p.rgb()).collect();
        w.write_all(&bytes)
    }

    pub fn to_ppm(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(15 + 3 * self.pixels.len());
        self.write_ppm(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    /// Reads a P6 file written by [`Image::write_ppm`]. Colours outside the
    /// palette are rejected.
    pub fn read_ppm<R: Read>(r: R) -> Result<Self, ImageError> {
        let mut r = BufReader::new(r);
        let mut header = Vec::new();
        // magic, width, height, maxval: four whitespace-separated tokens
        while header.len() < 4 {
            let mut line = String::new();
            if r.read_line(&mut line)? == 0 {
                return Err(ImageError::Format("truncated header".into()));
            }
            let content = line.split('#').next().unwrap_or("");
            header.extend(content.split_whitespace().map(str::to_owned));
        }
        if header.len() != 4 || header[0] != "P6" || header[3] != "255" {
            return Err(ImageError::Format(format!("unsupported header {header:?}")));
        }
        let dim = |s: &str| {
            s.parse::<usize>()
                .ok()
                .filter(|&d| d >= 1)
                .ok_or_else(|| ImageError::Format(format!("bad dimension {s:?}")))
        };
        let (width, height) = (dim(&header[1])?, dim(&header[2])?);
        let mut bytes = vec![0u8; 3 * width * height];
        r.read_exact(&mut bytes)?;
        let pixels = bytes
            .chunks_exact(3)
            .map(|c| {
                Pixel::from_rgb([c[0], c[1], c[2]])
                    .ok_or_else(|| ImageError::Format(format!("colour {c:?} outside the palette")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    #[cfg(feature = "png")]
    pub fn write_png<W: Write>(&self, w: W) -> Result<(), ImageError> {
        let mut enc = png::Encoder::new(w, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc
            .write_header()
            .map_err(|e| ImageError::Png(e.to_string()))?;
        let bytes: Vec<u8> = self.pixels.iter().flat_map(|p| p.rgb()).collect();
        writer
            .write_image_data(&bytes)
            .map_err(|e| ImageError::Png(e.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ImageError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed image: {0}")]
    Format(String),
    #[error("PNG output: {0}")]
    Png(String),
    #[error("format {0:?} is not available in this build")]
    Unsupported(ImageFormat),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Ppm,
    Png,
}

impl ImageFormat {
    /// Guesses the format from a file extension, defaulting to PPM.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("png") => ImageFormat::Png,
            _ => ImageFormat::Ppm,
        }
    }
}

pub fn write_image(img: &Image, path: &Path, format: ImageFormat) -> Result<(), ImageError> {
    match format {
        ImageFormat::Ppm => {
            let mut w = BufWriter::new(File::create(path)?);
            img.write_ppm(&mut w)?;
            w.flush()?;
            Ok(())
        }
        #[cfg(feature = "png")]
        ImageFormat::Png => img.write_png(BufWriter::new(File::create(path)?)),
        #[cfg(not(feature = "png"))]
        ImageFormat::Png => Err(ImageError::Unsupported(format)),
    }
}

/// Axis-aligned rectangle of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Bounds {
    pub fn square(r: f64) -> Self {
        Bounds {
            x0: -r,
            x1: r,
            y0: -r,
            y1: r,
        }
    }

    /// Centre of pixel `(i, j)`, row 0 at the top. Written around the centre of
    /// the rectangle so that symmetric bounds give exactly negated coordinates
    /// for opposite pixels.
    fn pixel_center(&self, i: usize, j: usize, width: usize, height: usize) -> Complex64 {
        let fx = (2.0 * i as f64 + 1.0 - width as f64) / (2.0 * width as f64);
        let fy = (height as f64 - 2.0 * j as f64 - 1.0) / (2.0 * height as f64);
        let cx = 0.5 * (self.x0 + self.x1);
        let cy = 0.5 * (self.y0 + self.y1);
        Complex64::new(cx + fx * (self.x1 - self.x0), cy + fy * (self.y1 - self.y0))
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds::square(4.0)
    }
}

pub fn render_plane(
    trace: &[MapParams],
    m: usize,
    bounds: &Bounds,
    width: usize,
    height: usize,
    exec: Execution,
) -> Image {
    let mut img = Image::new(width, height, Pixel::White);
    exec.fill_chunks(&mut img.pixels, width, |j, row| {
        for (i, px) in row.iter_mut().enumerate() {
            let z = bounds.pixel_center(i, j, width, height);
            *px = color_at(SpherePoint::Finite(z), trace, m).into();
        }
    });
    img
}

/// Camera orientation for sphere renders, in radians.
///
/// With all angles zero the point 1 faces the viewer, infinity is at the top
/// and `i` is on the right. `yaw` then spins the sphere about its polar axis,
/// a positive `pitch` tilts 0 towards the viewer and `roll` turns the image
/// about the viewing direction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct View {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

type Mat3 = [[f64; 3]; 3];

fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mat_vec(a: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| a[i][0] * v[0] + a[i][1] * v[1] + a[i][2] * v[2])
}

impl View {
    /// Camera coordinates (right, up, towards the viewer) to sphere coordinates.
    fn camera_to_world(&self) -> Mat3 {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let (sr, cr) = self.roll.sin_cos();
        let yaw = [[cy, -sy, 0.0], [sy, cy, 0.0], [0.0, 0.0, 1.0]];
        // columns: right = e_y, up = e_z, front = e_x
        let base = [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]];
        let pitch = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
        let roll = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
        mat_mul(&mat_mul(&yaw, &base), &mat_mul(&pitch, &roll))
    }
}

/// Orthographic picture of the unit sphere. The sphere's outline is the disk
/// of radius `min(width, height) / 2` centred in the image.
pub fn render_sphere(
    trace: &[MapParams],
    m: usize,
    width: usize,
    height: usize,
    view: &View,
    exec: Execution,
) -> Image {
    let mut img = Image::new(width, height, Pixel::Background);
    let rot = view.camera_to_world();
    let radius = 0.5 * width.min(height) as f64;
    exec.fill_chunks(&mut img.pixels, width, |j, row| {
        for (i, px) in row.iter_mut().enumerate() {
            let sx = (i as f64 + 0.5 - 0.5 * width as f64) / radius;
            let sy = (0.5 * height as f64 - j as f64 - 0.5) / radius;
            let r2 = sx * sx + sy * sy;
            if r2 > 1.0 {
                continue;
            }
            let depth = (1.0 - r2).sqrt();
            let front = SpherePoint::from_sphere(mat_vec(&rot, [sx, sy, depth]));
            *px = match color_at(front, trace, m) {
                Shade::Black => Pixel::Black,
                Shade::White => {
                    let back = SpherePoint::from_sphere(mat_vec(&rot, [sx, sy, -depth]));
                    match color_at(back, trace, m) {
                        Shade::Black => Pixel::GreyBack,
                        Shade::White => Pixel::White,
                    }
                }
            };
        }
    });
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn squaring(n: usize) -> Vec<MapParams> {
        vec![MapParams::squaring(); n]
    }

    #[test]
    fn color_examples() {
        let empty: Vec<MapParams> = vec![];
        assert_eq!(
            color_at(SpherePoint::new(2.0, 0.0), &empty, 0),
            Shade::Black
        );
        assert_eq!(color_at(SpherePoint::ZERO, &empty, 0), Shade::White);
        assert_eq!(color_at(SpherePoint::Infinity, &empty, 0), Shade::Black);

        let one = [MapParams::new(c(2.0 / 3.0, 0.0), c(1.0 / 3.0, 0.0)).unwrap()];
        assert_eq!(color_at(SpherePoint::ZERO, &one, 1), Shade::White);
    }

    #[test]
    fn composition_order() {
        // R_1 = z², R_2(z) = (z²/2 + 1/2)/(2z² − 1). At z = 1/2 the two orders
        // differ: R_1(R_2(1/2)) = (−5/4)² > 1 while |R_2(R_1(1/2))| = 17/28 < 1.
        let r1 = MapParams::squaring();
        let r2 = MapParams::new(c(0.5, 0.0), c(2.0, 0.0)).unwrap();
        let z = SpherePoint::new(0.5, 0.0);
        assert!((r1.eval(r2.eval(z)).norm() - 1.5625).abs() < 1e-15);
        assert!((r2.eval(r1.eval(z)).norm() - 17.0 / 28.0).abs() < 1e-15);
        assert_eq!(color_at(z, &[r1, r2], 2), Shade::Black);
        assert_eq!(color_at(z, &[r2, r1], 2), Shade::White);
    }

    #[test]
    fn squaring_is_the_unit_disk_for_every_m() {
        let t = squaring(5);
        for m in 0..=5 {
            for z in [c(0.3, 0.9), c(1.01, 0.0), c(-0.2, -0.99), c(5.0, 5.0)] {
                let expected = if z.norm() > 1.0 {
                    Shade::Black
                } else {
                    Shade::White
                };
                assert_eq!(color_at(SpherePoint::Finite(z), &t, m), expected);
            }
        }
    }

    #[test]
    fn plane_black_fraction_for_squaring() {
        let img = render_plane(
            &squaring(3),
            3,
            &Bounds::square(2.0),
            512,
            512,
            Execution::default(),
        );
        let frac = img.count(Pixel::Black) as f64 / (512.0 * 512.0);
        let expected = (16.0 - std::f64::consts::PI) / 16.0;
        assert!((frac - expected).abs() < 0.01, "{frac}");
    }

    #[test]
    fn plane_m0_is_exact_disk() {
        let b = Bounds::square(2.0);
        let img = render_plane(&[], 0, &b, 40, 30, Execution::Sequential);
        for j in 0..30 {
            for i in 0..40 {
                let z = b.pixel_center(i, j, 40, 30);
                let expected = if z.norm() > 1.0 {
                    Pixel::Black
                } else {
                    Pixel::White
                };
                assert_eq!(img.get(i, j), expected);
            }
        }
    }

    #[test]
    fn plane_is_point_symmetric() {
        let trace = [
            MapParams::new(c(2.0 / 3.0, 0.0), c(1.0 / 3.0, 0.0)).unwrap(),
            MapParams::new(c(0.2, -0.9), c(0.3, 0.7)).unwrap(),
        ];
        for m in 1..=2 {
            let img = render_plane(
                &trace,
                m,
                &Bounds::square(3.0),
                61,
                44,
                Execution::Sequential,
            );
            for j in 0..44 {
                for i in 0..61 {
                    assert_eq!(img.get(i, j), img.get(60 - i, 43 - j));
                }
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let trace = [MapParams::new(c(0.2, -0.9), c(0.3, 0.7)).unwrap()];
        let b = Bounds::default();
        assert_eq!(
            render_plane(&trace, 1, &b, 33, 17, Execution::Sequential),
            render_plane(&trace, 1, &b, 33, 17, Execution::parallel())
        );
        let v = View::default();
        assert_eq!(
            render_sphere(&trace, 1, 33, 17, &v, Execution::Sequential),
            render_sphere(&trace, 1, 33, 17, &v, Execution::with_threads(2))
        );
    }

    #[test]
    fn sphere_of_squaring() {
        let n = 101;
        let img = render_sphere(
            &squaring(2),
            2,
            n,
            n,
            &View::default(),
            Execution::Sequential,
        );
        let radius = n as f64 / 2.0;
        for j in 0..n {
            for i in 0..n {
                let sx = (i as f64 + 0.5 - radius) / radius;
                let sy = (radius - j as f64 - 0.5) / radius;
                let px = img.get(i, j);
                if sx * sx + sy * sy > 1.0 {
                    assert_eq!(px, Pixel::Background);
                } else if sy > 1e-9 {
                    // northern hemisphere: front is black
                    assert_eq!(px, Pixel::Black, "{i} {j}");
                } else if sy < -1e-9 {
                    // the back point has the same height, so it is white too
                    assert_eq!(px, Pixel::White, "{i} {j}");
                }
            }
        }
    }

    #[test]
    fn sphere_front_center_is_one() {
        let rot = View::default().camera_to_world();
        let front = SpherePoint::from_sphere(mat_vec(&rot, [0.0, 0.0, 1.0]));
        assert!(front.chordal(SpherePoint::ONE) < 1e-15);
        let top = SpherePoint::from_sphere(mat_vec(&rot, [0.0, 1.0, 0.0]));
        assert!(top.is_infinite() || top.norm() > 1e15);
        let right = SpherePoint::from_sphere(mat_vec(&rot, [1.0, 0.0, 0.0]));
        assert!(right.chordal(SpherePoint::new(0.0, 1.0)) < 1e-15);
    }

    #[test]
    fn grey_back() {
        // K_0 seen with 0 in front: the front is white, the back black.
        let view = View {
            pitch: std::f64::consts::FRAC_PI_2,
            ..View::default()
        };
        let img = render_sphere(&[], 0, 21, 21, &view, Execution::Sequential);
        assert_eq!(img.get(10, 10), Pixel::GreyBack);
        assert_eq!(img.count(Pixel::Black), 0);
    }

    #[test]
    fn ppm_bytes() {
        let img = Image::new(1, 1, Pixel::Black);
        let bytes = img.to_ppm();
        assert_eq!(bytes.len(), 14);
        assert_eq!(&bytes[..11], b"P6\n1 1\n255\n");
        assert_eq!(&bytes[11..], &[0, 0, 0]);
    }

    #[test]
    fn ppm_round_trip_and_rejects() {
        let mut img = Image::new(3, 2, Pixel::White);
        img.set(0, 0, Pixel::Black);
        img.set(1, 1, Pixel::GreyBack);
        img.set(2, 1, Pixel::Background);
        assert_eq!(Image::read_ppm(&img.to_ppm()[..]).unwrap(), img);
        assert!(Image::read_ppm(&b"P5\n1 1\n255\n\0"[..]).is_err());
        assert!(Image::read_ppm(&b"P6\n1 1\n255\n\x01\x02\x03"[..]).is_err());
        assert!(Image::read_ppm(&b"P6\n2 1\n255\n\0\0\0"[..]).is_err());
    }

    #[test]
    fn golden_squaring_is_deterministic() {
        let render = || {
            render_plane(
                &squaring(4),
                4,
                &Bounds::square(2.0),
                64,
                64,
                Execution::default(),
            )
            .to_ppm()
        };
        let first = render();
        assert_eq!(first, render());
        assert_eq!(first.len(), 13 + 64 * 64 * 3);
        let seq = render_plane(
            &squaring(4),
            4,
            &Bounds::square(2.0),
            64,
            64,
            Execution::Sequential,
        )
        .to_ppm();
        assert_eq!(first, seq);
    }

    proptest! {
        #[test]
        fn point_symmetry(re in -3.0f64..3.0, im in -3.0f64..3.0,
                          ar in -2.0f64..2.0, ai in -2.0f64..2.0, br in -2.0f64..2.0, bi in -2.0f64..2.0,
                          m in 1usize..4) {
            prop_assume!((ar - br).abs() + (ai - bi).abs() > 1e-3);
            let p = MapParams::new(c(ar, ai), c(br, bi)).unwrap();
            let trace = vec![p, MapParams::squaring(), p];
            let z = c(re, im);
            prop_assert_eq!(
                color_at(SpherePoint::Finite(z), &trace, m),
                color_at(SpherePoint::Finite(-z), &trace, m)
            );
        }
    }
}
