//! Seeded property suite behind `check-invariants`: the structural facts
//! the whole solver leans on, each run on randomized inputs and reported
//! as an independent pass/fail row. A deliberate kernel-corruption mode
//! exists to prove the suite can actually fail.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fieldgrid::{gaussian, normalize, ComplexField3, Grid3, RealField3, ShiftMode};
use crate::operators::{
    coulomb_potential, hartree_energy, kinetic_energy, random_field, CoulombKernel,
};
use crate::pekar::{minimize, PekarProblem, SolverParams};
use crate::potentials::{
    build_gauge_links, sample_vector_potential, GaugeLinks, ScalarPotentialSpec,
    VectorPotentialSpec,
};
use crate::tomasevich::{pt_energy_bruteforce_6d, pt_energy_rank2, Rank2State};
use crate::Result;

/// One row of the pass/fail table.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Suite knobs.
#[derive(Debug, Clone)]
pub struct InvariantOptions {
    pub seed: u64,
    /// Number of randomized fields per statistical check.
    pub n_fields: usize,
    /// Fault injection: negate the Coulomb kernel before running.
    pub corrupt_kernel: bool,
}

impl Default for InvariantOptions {
    fn default() -> Self {
        Self { seed: 0, n_fields: 20, corrupt_kernel: false }
    }
}

pub fn all_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.passed)
}

/// A smooth random field: a few Gaussians with random centers, widths and
/// phases. Smooth enough that continuum inequalities are meaningful, random
/// enough to probe the corpus.
fn random_smooth_field(grid: Grid3, rng: &mut ChaCha8Rng) -> ComplexField3 {
    let l = grid.box_length(0);
    let mut f = ComplexField3::zeros(grid);
    for _ in 0..3 {
        let c = [
            (rng.gen::<f64>() - 0.5) * l / 3.0,
            (rng.gen::<f64>() - 0.5) * l / 3.0,
            (rng.gen::<f64>() - 0.5) * l / 3.0,
        ];
        let s = 0.8 + 2.0 * rng.gen::<f64>();
        let amp = Complex64::from_polar(0.3 + rng.gen::<f64>(), std::f64::consts::TAU * rng.gen::<f64>());
        f = f.axpy(amp, &gaussian(grid, s, c)).expect("same grid");
    }
    f
}

/// Run the whole suite. Deterministic in `opts.seed`.
pub fn run_suite(opts: &InvariantOptions) -> Result<Vec<CheckResult>> {
    let grid = Grid3::new([16; 3], 0.5)?;
    let a_spec = VectorPotentialSpec::LinearSymmetric([0.0, 0.0, 0.8]);
    let links = build_gauge_links(&a_spec, grid);
    let unit = GaugeLinks::unit(grid);
    let mut kernel = CoulombKernel::new(grid);
    if opts.corrupt_kernel {
        kernel.corrupt_for_fault_injection();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut results = Vec::new();

    // Hartree positivity: D(ρ) > 0 and V_ρ ≥ 0 for nonnegative densities
    {
        let mut worst_d = f64::INFINITY;
        let mut worst_v = f64::INFINITY;
        for _ in 0..opts.n_fields {
            let rho = random_smooth_field(grid, &mut rng).density();
            let d = hartree_energy(&rho, &kernel)?;
            let v = coulomb_potential(&rho, &kernel)?;
            worst_d = worst_d.min(d);
            worst_v = worst_v.min(v.values().iter().cloned().fold(f64::INFINITY, f64::min));
        }
        results.push(CheckResult {
            name: "hartree-positivity",
            passed: worst_d > 0.0 && worst_v >= -1e-12,
            detail: format!("min D = {:.3e}, min V = {:.3e}", worst_d, worst_v),
        });
    }

    // Diamagnetic inequality: dropping to |φ| with unit links never raises
    // the kinetic energy (exact on the lattice, triangle inequality)
    {
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..opts.n_fields {
            let f = random_smooth_field(grid, &mut rng);
            let mag = f.modulus();
            let tk = kinetic_energy(&f, &links, ShiftMode::ZeroFill)?;
            let tm = kinetic_energy(&mag, &unit, ShiftMode::ZeroFill)?;
            worst = worst.max((tm - tk) / tk.max(1e-30));
        }
        results.push(CheckResult {
            name: "diamagnetic",
            passed: worst <= 1e-12,
            detail: format!("max (T_|φ| − T_φ)/T_φ = {:.3e}", worst),
        });
    }

    // Coulomb-vs-kinetic bound: D(ρ_φ) ≤ 2‖φ‖³‖D_Aφ‖, with 5% slack for
    // the discretization
    {
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..opts.n_fields {
            let f = random_smooth_field(grid, &mut rng);
            let d = hartree_energy(&f.density(), &kernel)?;
            let t = kinetic_energy(&f, &links, ShiftMode::ZeroFill)?;
            let bound = 2.0 * f.norm_sqr().powf(1.5) * t.sqrt();
            worst = worst.max(d / bound);
        }
        results.push(CheckResult {
            name: "coulomb-kinetic-bound",
            passed: worst <= 1.05,
            detail: format!("max D/(2‖φ‖³‖D_Aφ‖) = {:.4}", worst),
        });
    }

    // Gauge covariance: shifting A by a constant g and the state by the
    // phase e^{−i g·x} leaves the kinetic energy unchanged
    {
        let g = [0.3, -0.7, 0.5];
        let base = sample_vector_potential(&a_spec, grid);
        let shifted_fields: [RealField3; 3] = std::array::from_fn(|k| {
            RealField3::from_values(
                grid,
                base[k].values().iter().map(|v| v + g[k]).collect(),
            )
            .expect("finite")
        });
        let shifted = build_gauge_links(
            &VectorPotentialSpec::Sampled(Box::new(shifted_fields)),
            grid,
        );
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..opts.n_fields.min(8) {
            let f = random_smooth_field(grid, &mut rng);
            let phased_vals: Vec<Complex64> = {
                let n = grid.n();
                let mut out = Vec::with_capacity(grid.len());
                for iz in 0..n[2] {
                    for iy in 0..n[1] {
                        for ix in 0..n[0] {
                            let x = grid.position(ix, iy, iz);
                            let chi = g[0] * x[0] + g[1] * x[1] + g[2] * x[2];
                            out.push(Complex64::from_polar(1.0, -chi) * f.values()[grid.index(ix, iy, iz)]);
                        }
                    }
                }
                out
            };
            let phased = ComplexField3::from_values(grid, phased_vals)?;
            let t0 = kinetic_energy(&f, &links, ShiftMode::ZeroFill)?;
            let t1 = kinetic_energy(&phased, &shifted, ShiftMode::ZeroFill)?;
            worst = worst.max((t1 - t0).abs() / t0);
        }
        results.push(CheckResult {
            name: "gauge-covariance",
            passed: worst <= 1e-12,
            detail: format!("max relative kinetic change = {:.3e}", worst),
        });
    }

    // Two-particle closed form against the 6-D oracle on a small grid
    {
        let small = PekarProblem::new(
            Grid3::new([8; 3], 0.5)?,
            VectorPotentialSpec::LinearSymmetric([0.0, 0.0, 0.5]),
            ScalarPotentialSpec::Zero,
        );
        let mut worst = f64::NEG_INFINITY;
        for k in 0..4u64 {
            let phi = normalize(&random_field(*small.grid(), opts.seed ^ (k + 1)), 1.0)?;
            let eta = normalize(&random_field(*small.grid(), opts.seed ^ (k + 101)), 1.0)?;
            let st = Rank2State::normalized(1.0, 0.2 + 0.15 * k as f64, phi, eta)?;
            let fast = pt_energy_rank2(&small, &st, 2.0)?;
            let slow = pt_energy_bruteforce_6d(&small, &st, 2.0)?;
            worst = worst.max((fast.total - slow.total).abs() / slow.total.abs().max(1.0));
        }
        results.push(CheckResult {
            name: "rank2-oracle-gate",
            passed: worst <= 1e-8,
            detail: format!("max relative disagreement = {:.3e}", worst),
        });
    }

    // Virial identity 2T = D at a converged free minimizer
    {
        let p = PekarProblem::new(
            Grid3::new([24; 3], 1.0)?,
            VectorPotentialSpec::zero(),
            ScalarPotentialSpec::Zero,
        );
        let params = SolverParams {
            residual_tol: 1e-4,
            seed: opts.seed,
            ..Default::default()
        };
        let report = minimize(&p, &params, None)?;
        let vir = (2.0 * report.kinetic - report.coulomb).abs() / report.coulomb;
        results.push(CheckResult {
            name: "virial-at-minimizer",
            passed: report.converged && vir < 0.05,
            detail: format!("|2T − D|/D = {:.3e}, converged = {}", vir, report.converged),
        });
    }

    Ok(results)
}
