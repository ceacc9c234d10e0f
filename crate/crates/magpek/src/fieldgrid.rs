//! Uniform centered 3D box, complex/real scalar fields, inner products and
//! shifts. Everything else in the crate is built on these types.
//!
//! Conventions: isotropic spacing `h`, x-fastest index order
//! (`idx = ix + nx·(iy + ny·iz)`), node coordinate `(i − n/2)·h` per axis.
//! Integrals are plain Riemann sums weighted by the cell volume `h³`.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::{Error, Result};

/// Uniform, origin-centered 3D grid with isotropic spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid3 {
    n: [usize; 3],
    h: f64,
}

impl Grid3 {
    pub fn new(n: [usize; 3], h: f64) -> Result<Self> {
        if n.iter().any(|&nk| nk == 0) {
            return Err(Error::Domain("grid extent must be positive".into()));
        }
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::Domain(format!("grid spacing must be positive, got {h}")));
        }
        Ok(Self { n, h })
    }

    /// Cubic grid: `n` points per axis.
    pub fn cubic(n: usize, h: f64) -> Result<Self> {
        Self::new([n, n, n], h)
    }

    pub fn n(&self) -> [usize; 3] {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cell volume `h³`.
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    /// Box length along axis `k`.
    pub fn box_length(&self, k: usize) -> f64 {
        self.n[k] as f64 * self.h
    }

    /// Coordinate of index `i` along any axis of extent `nk`: `(i − nk/2)·h`.
    pub fn coord_1d(&self, i: usize, k: usize) -> f64 {
        (i as f64 - self.n[k] as f64 / 2.0) * self.h
    }

    /// Node position of the flat-index triple.
    pub fn position(&self, ix: usize, iy: usize, iz: usize) -> [f64; 3] {
        [self.coord_1d(ix, 0), self.coord_1d(iy, 1), self.coord_1d(iz, 2)]
    }

    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.n[0] * (iy + self.n[1] * iz)
    }

    /// Inverse of [`Grid3::index`].
    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let ix = idx % self.n[0];
        let iy = (idx / self.n[0]) % self.n[1];
        let iz = idx / (self.n[0] * self.n[1]);
        [ix, iy, iz]
    }

    /// Iterate node positions in flat-index order.
    pub fn positions(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..self.len()).map(move |idx| {
            let [ix, iy, iz] = self.unindex(idx);
            self.position(ix, iy, iz)
        })
    }
}

/// Boundary handling for shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftMode {
    /// Mass shifted past the wall is dropped (the box is a Dirichlet window
    /// into ℝ³). Default.
    #[default]
    ZeroFill,
    /// Periodic wrap. Testing mode only; the continuum problem is not
    /// periodic.
    Wrap,
}

/// Complex scalar field sampled on a [`Grid3`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField3 {
    grid: Grid3,
    values: Vec<Complex64>,
}

/// Real scalar field sampled on a [`Grid3`] (densities, potentials, cutoffs).
#[derive(Debug, Clone, PartialEq)]
pub struct RealField3 {
    grid: Grid3,
    values: Vec<f64>,
}

fn check_same_grid(a: &Grid3, b: &Grid3) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!(
            "{:?} (h={}) vs {:?} (h={})",
            a.n(),
            a.h(),
            b.n(),
            b.h()
        )));
    }
    Ok(())
}

impl ComplexField3 {
    pub fn zeros(grid: Grid3) -> Self {
        Self { grid, values: vec![Complex64::new(0.0, 0.0); grid.len()] }
    }

    pub fn from_values(grid: Grid3, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::DegenerateInput("non-finite field value".into()));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(x)` at every node.
    pub fn from_fn(grid: Grid3, mut f: impl FnMut([f64; 3]) -> Complex64) -> Self {
        let values = grid.positions().map(|p| f(p)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    /// Pointwise |f|².
    pub fn density(&self) -> RealField3 {
        RealField3 {
            grid: self.grid,
            values: self.values.iter().map(|v| v.norm_sqr()).collect(),
        }
    }

    /// Pointwise modulus, as a complex field (used for diamagnetic checks).
    pub fn modulus(&self) -> ComplexField3 {
        ComplexField3 {
            grid: self.grid,
            values: self.values.iter().map(|v| Complex64::new(v.norm(), 0.0)).collect(),
        }
    }

    /// Squared L² norm, `h³·Σ|f|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().map(|v| v.norm_sqr()).sum::<f64>()
    }

    pub fn scale(&self, c: Complex64) -> ComplexField3 {
        ComplexField3 {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: Complex64, other: &ComplexField3) -> Result<ComplexField3> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(ComplexField3 {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + c * b)
                .collect(),
        })
    }

    /// Pointwise multiplication by a real field.
    pub fn mul_real(&self, w: &RealField3) -> Result<ComplexField3> {
        check_same_grid(&self.grid, &w.grid)?;
        Ok(ComplexField3 {
            grid: self.grid,
            values: self.values.iter().zip(&w.values).map(|(a, b)| a * b).collect(),
        })
    }

    /// Pointwise `conj(self)·other`.
    pub fn conj_mul(&self, other: &ComplexField3) -> Result<ComplexField3> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(ComplexField3 {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.conj() * b)
                .collect(),
        })
    }

    /// Mass-weighted centroid of |f|², in coordinates.
    pub fn density_centroid(&self) -> [f64; 3] {
        let mut num = [0.0; 3];
        let mut den = 0.0;
        for (idx, v) in self.values.iter().enumerate() {
            let [ix, iy, iz] = self.grid.unindex(idx);
            let p = self.grid.position(ix, iy, iz);
            let w = v.norm_sqr();
            den += w;
            for k in 0..3 {
                num[k] += w * p[k];
            }
        }
        if den == 0.0 {
            return [0.0; 3];
        }
        [num[0] / den, num[1] / den, num[2] / den]
    }
}

impl RealField3 {
    pub fn zeros(grid: Grid3) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    pub fn from_values(grid: Grid3, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "value count {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Grid3, mut f: impl FnMut([f64; 3]) -> f64) -> Self {
        let values = grid.positions().map(|p| f(p)).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `h³·Σ f`.
    pub fn integral(&self) -> f64 {
        self.grid.cell_volume() * self.values.iter().sum::<f64>()
    }

    pub fn scale(&self, c: f64) -> RealField3 {
        RealField3 { grid: self.grid, values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn add(&self, other: &RealField3) -> Result<RealField3> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(RealField3 {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }

    /// Promote to a complex field with zero imaginary part.
    pub fn to_complex(&self) -> ComplexField3 {
        ComplexField3 {
            grid: self.grid,
            values: self.values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        }
    }
}

/// L² pairing `h³·Σ conj(f)·g`.
pub fn inner_product(f: &ComplexField3, g: &ComplexField3) -> Result<Complex64> {
    check_same_grid(&f.grid, &g.grid)?;
    let s: Complex64 = f
        .values
        .iter()
        .zip(&g.values)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(s * f.grid.cell_volume())
}

/// Rescale `f` so that its squared norm equals `target`.
pub fn normalize(f: &ComplexField3, target: f64) -> Result<ComplexField3> {
    if !(target > 0.0) {
        return Err(Error::Domain(format!("normalization target must be positive, got {target}")));
    }
    let ns = f.norm_sqr();
    if ns <= 0.0 || !ns.is_finite() {
        return Err(Error::DegenerateInput("cannot normalize a zero field".into()));
    }
    Ok(f.scale(Complex64::new((target / ns).sqrt(), 0.0)))
}

/// Translate by an integer number of cells: `out(x) = f(x − v·h)`.
pub fn shift_field(f: &ComplexField3, v: [i64; 3], mode: ShiftMode) -> ComplexField3 {
    let grid = f.grid;
    let n = [grid.n()[0] as i64, grid.n()[1] as i64, grid.n()[2] as i64];
    let mut out = ComplexField3::zeros(grid);
    for iz in 0..n[2] {
        for iy in 0..n[1] {
            for ix in 0..n[0] {
                // source index x − v
                let src = [ix - v[0], iy - v[1], iz - v[2]];
                let sidx = match mode {
                    ShiftMode::ZeroFill => {
                        if src.iter().zip(&n).any(|(&s, &nk)| s < 0 || s >= nk) {
                            continue;
                        }
                        grid.index(src[0] as usize, src[1] as usize, src[2] as usize)
                    }
                    ShiftMode::Wrap => grid.index(
                        src[0].rem_euclid(n[0]) as usize,
                        src[1].rem_euclid(n[1]) as usize,
                        src[2].rem_euclid(n[2]) as usize,
                    ),
                };
                let didx = grid.index(ix as usize, iy as usize, iz as usize);
                out.values[didx] = f.values[sidx];
            }
        }
    }
    out
}

const DUMP_MAGIC: &[u8; 4] = b"MPK1";

/// Write the binary field dump: 24-byte header (magic "MPK1", u32 n_x, n_y,
/// n_z, f64 h), then little-endian (re, im) f64 pairs in x-fastest order.
pub fn dump_field(f: &ComplexField3, path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(24 + 16 * f.values.len());
    buf.extend_from_slice(DUMP_MAGIC);
    for k in 0..3 {
        buf.extend_from_slice(&(f.grid.n()[k] as u32).to_le_bytes());
    }
    buf.extend_from_slice(&f.grid.h().to_le_bytes());
    for v in &f.values {
        buf.extend_from_slice(&v.re.to_le_bytes());
        buf.extend_from_slice(&v.im.to_le_bytes());
    }
    // atomic: temp + rename
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp)?.write_all(&buf)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Read a binary field dump written by [`dump_field`].
pub fn load_field(path: &Path) -> Result<ComplexField3> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 24 || &bytes[0..4] != DUMP_MAGIC {
        return Err(Error::Domain(format!("{}: not a MPK1 field dump", path.display())));
    }
    let mut n = [0usize; 3];
    for k in 0..3 {
        n[k] = u32::from_le_bytes(bytes[4 + 4 * k..8 + 4 * k].try_into().unwrap()) as usize;
    }
    let h = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let grid = Grid3::new(n, h)?;
    let expected = 24 + 16 * grid.len();
    if bytes.len() != expected {
        return Err(Error::Domain(format!(
            "{}: payload size {} does not match header ({} expected)",
            path.display(),
            bytes.len(),
            expected
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let off = 24 + 16 * i;
        let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
        values.push(Complex64::new(re, im));
    }
    ComplexField3::from_values(grid, values)
}

/// CSV export of the axis slice through the grid center along axis `k`:
/// columns `coord, re, im, abs2`.
pub fn axis_slice_csv(f: &ComplexField3, k: usize) -> String {
    let grid = f.grid;
    let n = grid.n();
    let mid = [n[0] / 2, n[1] / 2, n[2] / 2];
    let mut out = String::from("coord,re,im,abs2\n");
    for i in 0..n[k] {
        let mut ijk = mid;
        ijk[k] = i;
        let v = f.values[grid.index(ijk[0], ijk[1], ijk[2])];
        out.push_str(&format!(
            "{},{},{},{}\n",
            grid.coord_1d(i, k),
            v.re,
            v.im,
            v.norm_sqr()
        ));
    }
    out
}

/// Unit-mass isotropic Gaussian wave function with density variance `s²` per
/// axis, centered at `c`: |φ|² is the normal density N(c, s²·Id).
pub fn gaussian(grid: Grid3, s: f64, c: [f64; 3]) -> ComplexField3 {
    let amp = (2.0 * std::f64::consts::PI * s * s).powf(-0.75);
    ComplexField3::from_fn(grid, |p| {
        let r2: f64 = (0..3).map(|k| (p[k] - c[k]) * (p[k] - c[k])).sum();
        Complex64::new(amp * (-r2 / (4.0 * s * s)).exp(), 0.0)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coordinates_and_volume() {
        let g = Grid3::cubic(8, 0.5).unwrap();
        assert_eq!(g.coord_1d(4, 0), 0.0);
        assert_eq!(g.coord_1d(0, 0), -2.0);
        let vol = g.cell_volume() * g.len() as f64;
        let box_vol = g.box_length(0) * g.box_length(1) * g.box_length(2);
        assert!((vol - box_vol).abs() < 1e-14);
    }

    #[test]
    fn inner_product_constant_field() {
        let g = Grid3::cubic(6, 0.3).unwrap();
        let c = Complex64::new(1.5, -0.5);
        let f = ComplexField3::from_fn(g, |_| c);
        let ip = inner_product(&f, &f).unwrap();
        let expect = c.norm_sqr() * g.cell_volume() * g.len() as f64;
        assert!((ip.re - expect).abs() < 1e-12 * expect);
        assert!(ip.im.abs() < 1e-14);
    }

    #[test]
    fn inner_product_disjoint_support() {
        let g = Grid3::cubic(6, 1.0).unwrap();
        let mut f = ComplexField3::zeros(g);
        let mut h = ComplexField3::zeros(g);
        f.values_mut()[0] = Complex64::new(2.0, 1.0);
        h.values_mut()[5] = Complex64::new(-1.0, 3.0);
        assert_eq!(inner_product(&f, &h).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn inner_product_conjugate_symmetry() {
        let g = Grid3::cubic(5, 0.7).unwrap();
        let f = ComplexField3::from_fn(g, |p| Complex64::new(p[0], p[1] * p[2]));
        let h = ComplexField3::from_fn(g, |p| Complex64::new(p[2], -p[0]));
        let a = inner_product(&f, &h).unwrap();
        let b = inner_product(&h, &f).unwrap();
        assert!((a - b.conj()).norm() < 1e-13);
    }

    #[test]
    fn gaussian_unit_norm() {
        // s = 1, L = 16, n = 64: analytic normalization carries over to the
        // Riemann sum within 1e-8 (Poisson summation + negligible tails).
        let g = Grid3::cubic(64, 0.25).unwrap();
        let f = gaussian(g, 1.0, [0.0; 3]);
        assert!((f.norm_sqr() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn inner_product_grid_mismatch() {
        let f = ComplexField3::zeros(Grid3::cubic(4, 1.0).unwrap());
        let h = ComplexField3::zeros(Grid3::cubic(5, 1.0).unwrap());
        assert!(matches!(inner_product(&f, &h), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn normalize_exact_scaling() {
        let g = Grid3::cubic(4, 1.0).unwrap();
        let f = ComplexField3::from_fn(g, |_| Complex64::new(2.0 / 8.0, 0.0));
        // choose amplitude so ‖f‖² = 4
        let f = f.scale(Complex64::new((4.0 / f.norm_sqr()).sqrt(), 0.0));
        let out = normalize(&f, 1.0).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b / 2.0).norm() < 1e-14);
        }
    }

    #[test]
    fn normalize_idempotent_and_target() {
        let g = Grid3::cubic(5, 0.4).unwrap();
        let f = ComplexField3::from_fn(g, |p| Complex64::new(p[0] + 0.3, p[1]));
        let n1 = normalize(&f, 0.3).unwrap();
        assert!((n1.norm_sqr() - 0.3).abs() < 1e-12 * 0.3);
        let n2 = normalize(&n1, 0.3).unwrap();
        for (a, b) in n1.values().iter().zip(n2.values()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn normalize_zero_field_rejected() {
        let f = ComplexField3::zeros(Grid3::cubic(4, 1.0).unwrap());
        assert!(matches!(normalize(&f, 1.0), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn shift_identity_and_delta() {
        let g = Grid3::cubic(8, 0.5).unwrap();
        let mut f = ComplexField3::zeros(g);
        let mid = g.index(4, 4, 4);
        f.values_mut()[mid] = Complex64::new(1.0, 0.0);
        let same = shift_field(&f, [0, 0, 0], ShiftMode::ZeroFill);
        assert_eq!(same, f);
        let moved = shift_field(&f, [1, 0, 0], ShiftMode::ZeroFill);
        assert_eq!(moved.values()[g.index(5, 4, 4)], Complex64::new(1.0, 0.0));
        assert_eq!(moved.values()[mid], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn shift_gaussian_mass_preserved_within_tail_bound() {
        // Gaussian with s = 1 on L = 16: the density mass beyond |x1| > 7.5
        // is erf-bounded below 1e-10, so a 2-cell zero-fill shift keeps the
        // norm to that accuracy.
        let g = Grid3::cubic(32, 0.5).unwrap();
        let f = gaussian(g, 1.0, [0.0; 3]);
        let moved = shift_field(&f, [2, 0, 0], ShiftMode::ZeroFill);
        assert!((moved.norm_sqr() - f.norm_sqr()).abs() < 1e-10);
    }

    #[test]
    fn shift_wrap_is_isometry_and_invertible() {
        let g = Grid3::cubic(6, 0.8).unwrap();
        let f = ComplexField3::from_fn(g, |p| Complex64::new(p[0] * p[1], p[2] - 0.1));
        let v = [2, -1, 5];
        let w = shift_field(&f, v, ShiftMode::Wrap);
        assert!((w.norm_sqr() - f.norm_sqr()).abs() < 1e-12 * f.norm_sqr());
        let back = shift_field(&w, [-v[0], -v[1], -v[2]], ShiftMode::Wrap);
        assert_eq!(back, f);
    }

    #[test]
    fn parseval_consistency() {
        let g = Grid3::cubic(7, 0.9).unwrap();
        let f = ComplexField3::from_fn(g, |p| Complex64::new(p[0] - p[2], p[1] + 1.0));
        let from_ip = inner_product(&f, &f).unwrap().re;
        assert_eq!(from_ip, f.norm_sqr());
    }

    #[test]
    fn dump_roundtrip() {
        let g = Grid3::new([4, 3, 5], 0.6).unwrap();
        let f = ComplexField3::from_fn(g, |p| Complex64::new(p[0] + 2.0 * p[1], p[2]));
        let dir = std::env::temp_dir().join("magpek_dump_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.mpk");
        dump_field(&f, &path).unwrap();
        let back = load_field(&path).unwrap();
        assert_eq!(back, f);
        let header = std::fs::read(&path).unwrap();
        assert_eq!(&header[0..4], b"MPK1");
        assert_eq!(header.len(), 24 + 16 * g.len());
    }
}
