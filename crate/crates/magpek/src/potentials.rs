//! Vector and scalar potentials, Peierls gauge links, magnetic translations.
//!
//! The vector potential enters the discrete kinetic operator only through
//! unit-modulus link phases on grid edges, `exp(−i·h·A_k(midpoint))`. The
//! midpoint rule is exact for affine integrands, which makes gauge
//! covariance under affine gauge functions and magnetic-translation
//! invariance exact at the discrete level (up to boundary-dropped mass).

use num_complex::Complex64;

use crate::fieldgrid::{shift_field, ComplexField3, Grid3, RealField3, ShiftMode};
use crate::{Error, Result, I};

/// Declarative description of the vector potential A.
#[derive(Debug, Clone)]
pub enum VectorPotentialSpec {
    /// Symmetric gauge `A(x) = (B ∧ x)/2` with constant field `B`.
    LinearSymmetric([f64; 3]),
    /// Landau gauge `A(x) = (−B·x₂, 0, 0)` with field `(0, 0, B)`.
    LinearLandau(f64),
    /// Zero inside the ball |x| < R, Landau-gauge `A_∞` outside.
    CutoffLinear { b: f64, r: f64 },
    /// Arbitrary componentwise samples on the grid.
    Sampled(Box<[RealField3; 3]>),
}

impl VectorPotentialSpec {
    pub fn zero() -> Self {
        VectorPotentialSpec::LinearSymmetric([0.0; 3])
    }

    /// True for the gauges with exact (affine) translation symmetry.
    pub fn is_linear(&self) -> bool {
        matches!(
            self,
            VectorPotentialSpec::LinearSymmetric(_) | VectorPotentialSpec::LinearLandau(_)
        )
    }

    /// Evaluate A at an arbitrary point. `None` for sampled potentials,
    /// which only exist on grid nodes.
    pub fn eval(&self, x: [f64; 3]) -> Option<[f64; 3]> {
        match self {
            VectorPotentialSpec::LinearSymmetric(b) => Some([
                0.5 * (b[1] * x[2] - b[2] * x[1]),
                0.5 * (b[2] * x[0] - b[0] * x[2]),
                0.5 * (b[0] * x[1] - b[1] * x[0]),
            ]),
            VectorPotentialSpec::LinearLandau(b) => Some([-b * x[1], 0.0, 0.0]),
            VectorPotentialSpec::CutoffLinear { b, r } => {
                let norm = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                if norm < *r {
                    Some([0.0; 3])
                } else {
                    Some([-b * x[1], 0.0, 0.0])
                }
            }
            VectorPotentialSpec::Sampled(_) => None,
        }
    }
}

/// Declarative description of the scalar potential V.
#[derive(Debug, Clone)]
pub enum ScalarPotentialSpec {
    Zero,
    /// `V(x) = −Z/√(|x|² + ε²)`; ε softens the on-node Coulomb singularity.
    SoftCoulomb { z: f64, eps: f64 },
    Sampled(RealField3),
}

impl ScalarPotentialSpec {
    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarPotentialSpec::Zero)
    }
}

/// Componentwise node samples of A.
pub fn sample_vector_potential(spec: &VectorPotentialSpec, grid: Grid3) -> [RealField3; 3] {
    match spec {
        VectorPotentialSpec::Sampled(fields) => {
            let f = fields.as_ref();
            [f[0].clone(), f[1].clone(), f[2].clone()]
        }
        _ => {
            let comp = |k: usize| RealField3::from_fn(grid, |p| spec.eval(p).unwrap()[k]);
            [comp(0), comp(1), comp(2)]
        }
    }
}

/// Node samples of V.
pub fn sample_scalar_potential(spec: &ScalarPotentialSpec, grid: Grid3) -> RealField3 {
    match spec {
        ScalarPotentialSpec::Zero => RealField3::zeros(grid),
        ScalarPotentialSpec::SoftCoulomb { z, eps } => RealField3::from_fn(grid, |p| {
            let r2 = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
            -z / (r2 + eps * eps).sqrt()
        }),
        ScalarPotentialSpec::Sampled(v) => v.clone(),
    }
}

/// Unit-modulus Peierls link phases, one array per axis. The link stored at
/// node index `idx` for axis `k` is `exp(−i·h·A_k(x + h/2·e_k))`, the
/// midpoint approximation of `exp(−i∫A·dl)` along the edge `x → x + h·e_k`.
#[derive(Debug, Clone)]
pub struct GaugeLinks {
    grid: Grid3,
    links: [Vec<Complex64>; 3],
}

impl GaugeLinks {
    pub fn grid(&self) -> &Grid3 {
        &self.grid
    }

    pub fn axis(&self, k: usize) -> &[Complex64] {
        &self.links[k]
    }

    /// True when every link equals 1 (zero vector potential).
    pub fn is_unit(&self) -> bool {
        self.links
            .iter()
            .all(|l| l.iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() == 0.0))
    }

    /// Unit links on `grid` (A = 0).
    pub fn unit(grid: Grid3) -> Self {
        let ones = vec![Complex64::new(1.0, 0.0); grid.len()];
        Self { grid, links: [ones.clone(), ones.clone(), ones] }
    }

    /// Product of the four links around the plaquette based at node
    /// `(ix,iy,iz)` in the (k1,k2) plane, traversed counterclockwise.
    /// Boundary edges use the stored (formula-evaluated) phases.
    pub fn plaquette_phase(&self, base: [usize; 3], k1: usize, k2: usize) -> Complex64 {
        let n = self.grid.n();
        let mut p1 = base;
        p1[k1] = (p1[k1] + 1) % n[k1];
        let mut p2 = base;
        p2[k2] = (p2[k2] + 1) % n[k2];
        let i0 = self.grid.index(base[0], base[1], base[2]);
        let i1 = self.grid.index(p1[0], p1[1], p1[2]);
        let i2 = self.grid.index(p2[0], p2[1], p2[2]);
        self.links[k1][i0] * self.links[k2][i1] * self.links[k1][i2].conj()
            * self.links[k2][i0].conj()
    }
}

/// Midpoint-rule gauge links for `spec` on `grid`. For sampled potentials
/// the midpoint value is the average of the two adjacent node samples
/// (clamped at the upper box face).
pub fn build_gauge_links(spec: &VectorPotentialSpec, grid: Grid3) -> GaugeLinks {
    let h = grid.h();
    let sampled = match spec {
        VectorPotentialSpec::Sampled(fields) => Some(fields.as_ref()),
        _ => None,
    };
    let n = grid.n();
    let mut links: [Vec<Complex64>; 3] = [
        Vec::with_capacity(grid.len()),
        Vec::with_capacity(grid.len()),
        Vec::with_capacity(grid.len()),
    ];
    for k in 0..3 {
        for idx in 0..grid.len() {
            let [ix, iy, iz] = grid.unindex(idx);
            let a_mid = if let Some(fields) = sampled {
                let here = fields[k].values()[idx];
                let mut up = [ix, iy, iz];
                let next = if up[k] + 1 < n[k] {
                    up[k] += 1;
                    fields[k].values()[grid.index(up[0], up[1], up[2])]
                } else {
                    here
                };
                0.5 * (here + next)
            } else {
                let mut p = grid.position(ix, iy, iz);
                p[k] += 0.5 * h;
                spec.eval(p).unwrap()[k]
            };
            links[k].push((-I * h * a_mid).exp());
        }
    }
    GaugeLinks { grid, links }
}

/// Magnetic translation of Eq-(5) type: `f_v(x) = e^{−iχ(x)}·f(x − v·h)`
/// with `χ(x) = A(v)·x`. Exact symmetry of the link kinetic form for linear
/// gauges only; other specs are rejected.
pub fn magnetic_translate(
    f: &ComplexField3,
    v_cells: [i64; 3],
    spec: &VectorPotentialSpec,
    mode: ShiftMode,
) -> Result<ComplexField3> {
    if !spec.is_linear() {
        return Err(Error::UnsupportedGauge(
            "magnetic translation requires a linear vector potential".into(),
        ));
    }
    let h = f.grid().h();
    let v = [v_cells[0] as f64 * h, v_cells[1] as f64 * h, v_cells[2] as f64 * h];
    let a_v = spec.eval(v).unwrap();
    let shifted = shift_field(f, v_cells, mode);
    let grid = *f.grid();
    let mut out = shifted;
    for idx in 0..grid.len() {
        let [ix, iy, iz] = grid.unindex(idx);
        let p = grid.position(ix, iy, iz);
        let chi = a_v[0] * p[0] + a_v[1] * p[1] + a_v[2] * p[2];
        out.values_mut()[idx] *= (-I * chi).exp();
    }
    Ok(out)
}
