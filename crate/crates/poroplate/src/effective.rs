//! Effective plate coefficients assembled from cell correctors and the
//! plate-scale phase layout, plus structural verification of their
//! properties.
//!
//! Per phase, the cell solutions yield a reduced membrane form (a 3×3 Mandel
//! matrix over symmetric 2×2 strains), a pressure coupling tensor, a storage
//! coefficient and a permeability tensor. Per plane region, the plate
//! stiffness combines the membrane forms of the stacked layers through the
//! closed-form thickness moments `m_k = ∫ x₃ᵏ dx₃`, producing one symmetric
//! 6×6 matrix acting on (membrane strain, bending strain) Mandel pairs.

use crate::cellsolve::CorrectorSet;
use crate::mandel::{sym2_to_vec, vec_to_sym2};
use crate::microcell::PlatePhaseMap;
use nalgebra::{Matrix2, Matrix3, SMatrix, SVector};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EffectiveError {
    #[error("corrector for load pair ({0}, {1}) is missing")]
    MissingCorrector(usize, usize),
    #[error("no corrector set for phase {0}")]
    UnknownPhase(usize),
}

/// Reduced membrane quadratic form of one phase, in the 2D Mandel basis
/// `(m₁₁, m₂₂, √2·m₁₂)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MembraneTensor {
    pub a: SMatrix<f64, 3, 3>,
    /// smallest eigenvalue (coercivity constant of the reduced form)
    pub nu_a: f64,
}

impl MembraneTensor {
    /// Evaluates `a(M):N` for symmetric 2×2 matrices.
    pub fn pair(&self, m: &Matrix2<f64>, n: &Matrix2<f64>) -> f64 {
        sym2_to_vec(n).dot(&(self.a * sym2_to_vec(m)))
    }
}

/// Builds the membrane form from the in-plane elasticity correctors by
/// superposition: the corrector for a strain `M` is the `M`-weighted
/// combination of the unit-pair correctors, so `a(M):N` contracts the
/// averaged solid stress of that combination with the constant strain `N`.
pub fn membrane_tensor(correctors: &CorrectorSet) -> Result<MembraneTensor, EffectiveError> {
    // averaged stresses for the three in-plane unit pairs
    let pairs = [(1usize, 1usize), (2, 2), (1, 2)];
    let mut sigma = Vec::with_capacity(3);
    for &(i, j) in &pairs {
        let c = correctors
            .elastic_for(i, j)
            .ok_or(EffectiveError::MissingCorrector(i, j))?;
        sigma.push(c.avg_stress);
    }
    // 2D Mandel basis matrices and their expansion in unit pairs:
    // basis 0 → σ¹¹, basis 1 → σ²², basis 2 = √2·e¹⊙e² → √2·σ¹²
    let sqrt2 = std::f64::consts::SQRT_2;
    let stresses = [sigma[0], sigma[1], sigma[2] * sqrt2];
    let mut a = SMatrix::<f64, 3, 3>::zeros();
    for (p, s) in stresses.iter().enumerate() {
        a[(p, 0)] = s[(0, 0)];
        a[(p, 1)] = s[(1, 1)];
        a[(p, 2)] = sqrt2 * s[(0, 1)];
    }
    let a = 0.5 * (a + a.transpose());
    let nu_a = a
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    Ok(MembraneTensor { a, nu_a })
}

/// Per-layer effective coefficients of one plate column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LayerCoefficients {
    pub interval: [f64; 2],
    pub phase: usize,
    pub fluid_fraction: f64,
    /// pressure–strain coupling `Θ = |fluid|·I − 𝔹`
    pub theta: Matrix3<f64>,
    /// storage coefficient
    pub m0: f64,
    /// permeability tensor (symmetrized)
    pub permeability: Matrix3<f64>,
    /// solid-stress average of the pressure corrector
    pub b_tensor: Matrix3<f64>,
    /// fluid-trace duals of the elasticity correctors
    pub c_tensor: Matrix3<f64>,
    /// discrete viscous energy pairings matching the permeability entries
    pub viscous_energy: Matrix3<f64>,
}

/// Effective model of one plane region.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegionModel {
    pub rect: [f64; 4],
    /// 6×6 plate stiffness on (membrane, bending) Mandel pairs
    pub ahom: SMatrix<f64, 6, 6>,
    pub layers: Vec<LayerCoefficients>,
    /// thickness-averaged density
    pub kappa_bar: f64,
}

/// Piecewise-constant effective coefficient fields over the plate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EffectiveModel {
    pub regions: Vec<RegionModel>,
}

impl EffectiveModel {
    /// True when some layer of some region carries fluid.
    pub fn has_fluid(&self) -> bool {
        self.regions
            .iter()
            .any(|r| r.layers.iter().any(|l| l.fluid_fraction > 0.0))
    }
}

/// Thickness moments `(m₀, m₁, m₂)` of an interval, in closed form.
pub fn thickness_moments(interval: [f64; 2]) -> (f64, f64, f64) {
    let [lo, hi] = interval;
    (
        hi - lo,
        (hi * hi - lo * lo) / 2.0,
        (hi * hi * hi - lo * lo * lo) / 3.0,
    )
}

/// Assembles the 6×6 plate stiffness of one column from per-phase membrane
/// forms.
pub fn assemble_plate_tensor(
    column: &[crate::microcell::ColumnLayer],
    tensors: &BTreeMap<usize, MembraneTensor>,
) -> Result<SMatrix<f64, 6, 6>, EffectiveError> {
    let mut ahom = SMatrix::<f64, 6, 6>::zeros();
    for layer in column {
        let t = tensors
            .get(&layer.phase)
            .ok_or(EffectiveError::UnknownPhase(layer.phase))?;
        let (m0, m1, m2) = thickness_moments(layer.interval);
        for p in 0..3 {
            for q in 0..3 {
                let a = t.a[(p, q)];
                ahom[(p, q)] += m0 * a;
                ahom[(p, q + 3)] += -m1 * a;
                ahom[(p + 3, q)] += -m1 * a;
                ahom[(p + 3, q + 3)] += m2 * a;
            }
        }
    }
    Ok(ahom)
}

/// Per-phase coupling, storage and duality tensors extracted from a solved
/// corrector set.
pub struct PhaseCoefficients {
    pub fluid_fraction: f64,
    pub theta: Matrix3<f64>,
    pub m0: f64,
    pub b_tensor: Matrix3<f64>,
    pub c_tensor: Matrix3<f64>,
    pub permeability: Matrix3<f64>,
    pub viscous_energy: Matrix3<f64>,
}

pub fn assemble_coupling_storage(
    correctors: &CorrectorSet,
) -> Result<PhaseCoefficients, EffectiveError> {
    let b_raw = correctors.biot.b_tensor;
    let b_tensor = 0.5 * (b_raw + b_raw.transpose());
    let mut c_tensor = Matrix3::zeros();
    for i in 1..=3 {
        for j in i..=3 {
            let c = correctors
                .elastic_for(i, j)
                .ok_or(EffectiveError::MissingCorrector(i, j))?;
            c_tensor[(i - 1, j - 1)] = -c.fluid_trace;
            c_tensor[(j - 1, i - 1)] = -c.fluid_trace;
        }
    }
    let ff = correctors.fluid_fraction;
    let theta = Matrix3::identity() * ff - b_tensor;
    let (permeability, viscous_energy) = match &correctors.stokes {
        Some(s) => (
            0.5 * (s.permeability + s.permeability.transpose()),
            0.5 * (s.energy + s.energy.transpose()),
        ),
        None => (Matrix3::zeros(), Matrix3::zeros()),
    };
    Ok(PhaseCoefficients {
        fluid_fraction: ff,
        theta,
        m0: correctors.biot.m0,
        b_tensor,
        c_tensor,
        permeability,
        viscous_energy,
    })
}

/// Builds the full effective model from per-phase corrector sets and the
/// plate layout.
pub fn build_effective_model(
    correctors: &BTreeMap<usize, CorrectorSet>,
    map: &PlatePhaseMap,
) -> Result<EffectiveModel, EffectiveError> {
    let mut membranes = BTreeMap::new();
    let mut phase_coeffs = BTreeMap::new();
    for (&id, set) in correctors {
        membranes.insert(id, membrane_tensor(set)?);
        phase_coeffs.insert(id, assemble_coupling_storage(set)?);
    }
    let mut regions = Vec::new();
    for region in &map.regions {
        let ahom = assemble_plate_tensor(&region.column, &membranes)?;
        let mut layers = Vec::new();
        let mut kappa_bar = 0.0;
        for layer in &region.column {
            let pc = phase_coeffs
                .get(&layer.phase)
                .ok_or(EffectiveError::UnknownPhase(layer.phase))?;
            let dens = map
                .densities
                .get(&layer.phase)
                .ok_or(EffectiveError::UnknownPhase(layer.phase))?;
            let width = layer.interval[1] - layer.interval[0];
            kappa_bar += width
                * (dens.fluid * pc.fluid_fraction + dens.solid * (1.0 - pc.fluid_fraction));
            layers.push(LayerCoefficients {
                interval: layer.interval,
                phase: layer.phase,
                fluid_fraction: pc.fluid_fraction,
                theta: pc.theta,
                m0: pc.m0,
                permeability: pc.permeability,
                b_tensor: pc.b_tensor,
                c_tensor: pc.c_tensor,
                viscous_energy: pc.viscous_energy,
            });
        }
        regions.push(RegionModel {
            rect: region.rect,
            ahom,
            layers,
            kappa_bar,
        });
    }
    Ok(EffectiveModel { regions })
}

/// One verified property.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub passed: bool,
    pub vacuous: bool,
    pub defect: f64,
    pub tolerance: f64,
    pub note: String,
}

/// Structured verification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorReport {
    pub checks: Vec<PropertyCheck>,
}

impl TensorReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || c.vacuous)
    }
}

const DUALITY_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-12;

/// Verifies the structural properties of an effective model: plate stiffness
/// symmetry and positive definiteness, coupling duality, permeability
/// positive semidefiniteness and its energy identity, storage positivity on
/// fluid-bearing layers, density positivity.
pub fn verify_tensor_properties(model: &EffectiveModel) -> TensorReport {
    let mut checks = Vec::new();
    for (r, region) in model.regions.iter().enumerate() {
        let sym_defect = (region.ahom - region.ahom.transpose()).abs().max();
        checks.push(PropertyCheck {
            name: format!("region{r}.ahom.symmetry"),
            passed: sym_defect <= SYMMETRY_TOL,
            vacuous: false,
            defect: sym_defect,
            tolerance: SYMMETRY_TOL,
            note: String::new(),
        });
        let eigs = region.ahom.symmetric_eigenvalues();
        let eig_min = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
        let eig_max = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        checks.push(PropertyCheck {
            name: format!("region{r}.ahom.positive_definite"),
            passed: eig_min > 0.0,
            vacuous: false,
            defect: (-eig_min).max(0.0),
            tolerance: 0.0,
            note: format!("eigenvalues in [{eig_min:.6e}, {eig_max:.6e}]"),
        });
        checks.push(PropertyCheck {
            name: format!("region{r}.kappa_bar.positive"),
            passed: region.kappa_bar > 0.0,
            vacuous: false,
            defect: (-region.kappa_bar).max(0.0),
            tolerance: 0.0,
            note: format!("kappa_bar = {:.6e}", region.kappa_bar),
        });
        for (l, layer) in region.layers.iter().enumerate() {
            let fluid = layer.fluid_fraction > 0.0;
            let duality = (layer.b_tensor - layer.c_tensor).norm();
            checks.push(PropertyCheck {
                name: format!("region{r}.layer{l}.coupling_duality"),
                passed: duality <= DUALITY_TOL,
                vacuous: false,
                defect: duality,
                tolerance: DUALITY_TOL,
                note: String::new(),
            });
            let k_eigs = layer.permeability.symmetric_eigenvalues();
            let k_min = k_eigs.iter().cloned().fold(f64::INFINITY, f64::min);
            let degenerate: Vec<usize> = (0..3)
                .filter(|&i| layer.permeability[(i, i)].abs() <= DUALITY_TOL)
                .collect();
            checks.push(PropertyCheck {
                name: format!("region{r}.layer{l}.permeability_psd"),
                passed: k_min >= -SYMMETRY_TOL,
                vacuous: !fluid,
                defect: (-k_min).max(0.0),
                tolerance: SYMMETRY_TOL,
                note: if degenerate.is_empty() {
                    format!("eigenvalues >= {k_min:.3e}")
                } else {
                    format!("degenerate axes {degenerate:?} (no through-flow)")
                },
            });
            let energy_defect = (layer.permeability - layer.viscous_energy).norm();
            checks.push(PropertyCheck {
                name: format!("region{r}.layer{l}.permeability_energy_identity"),
                passed: energy_defect <= DUALITY_TOL,
                vacuous: !fluid,
                defect: energy_defect,
                tolerance: DUALITY_TOL,
                note: "includes the pressure stabilization energy".into(),
            });
            checks.push(PropertyCheck {
                name: format!("region{r}.layer{l}.storage_positive"),
                passed: !fluid || layer.m0 > 0.0,
                vacuous: !fluid,
                defect: if fluid { (-layer.m0).max(0.0) } else { 0.0 },
                tolerance: 0.0,
                note: if fluid {
                    format!("M0 = {:.6e}", layer.m0)
                } else {
                    "vacuous (no fluid)".into()
                },
            });
        }
    }
    TensorReport { checks }
}

/// Splits the plate stiffness into its membrane, coupling and bending 3×3
/// blocks.
pub fn ahom_blocks(ahom: &SMatrix<f64, 6, 6>) -> (Matrix3<f64>, Matrix3<f64>, Matrix3<f64>) {
    let mut mem = Matrix3::zeros();
    let mut cpl = Matrix3::zeros();
    let mut bend = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            mem[(i, j)] = ahom[(i, j)];
            cpl[(i, j)] = ahom[(i, j + 3)];
            bend[(i, j)] = ahom[(i + 3, j + 3)];
        }
    }
    (mem, cpl, bend)
}

/// Evaluates the plate stiffness on a Mandel pair (membrane 2×2, bending
/// 2×2), returning the paired (stress, moment) Mandel vectors.
pub fn apply_ahom(
    ahom: &SMatrix<f64, 6, 6>,
    membrane: &Matrix2<f64>,
    bending: &Matrix2<f64>,
) -> (Matrix2<f64>, Matrix2<f64>) {
    let mut v = SVector::<f64, 6>::zeros();
    v.fixed_rows_mut::<3>(0).copy_from(&sym2_to_vec(membrane));
    v.fixed_rows_mut::<3>(3).copy_from(&sym2_to_vec(bending));
    let out = ahom * v;
    (
        vec_to_sym2(&out.fixed_rows::<3>(0).into_owned()),
        vec_to_sym2(&out.fixed_rows::<3>(3).into_owned()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellsolve::{solve_all, SolveOptions};
    use crate::microcell::{
        build_cell, build_phase_map, ColumnLayer, Densities, PhaseSpec, PlaneRegion, Primitive,
    };
    use approx::assert_relative_eq;

    fn solid_correctors(n: usize) -> CorrectorSet {
        let phase = PhaseSpec::isotropic(0, 1.0, 1.0);
        let cell = build_cell(n, &Primitive::FullSolid, &phase).unwrap();
        solve_all(&cell, &SolveOptions::default()).unwrap()
    }

    fn homogeneous_map() -> PlatePhaseMap {
        let mut densities = BTreeMap::new();
        densities.insert(
            0,
            Densities {
                fluid: 1.0,
                solid: 1.0,
            },
        );
        build_phase_map(
            vec![PlaneRegion {
                rect: [0.0, 0.0, 1.0, 1.0],
                column: vec![ColumnLayer {
                    interval: [-0.5, 0.5],
                    phase: 0,
                }],
            }],
            densities,
        )
        .unwrap()
    }

    #[test]
    fn plane_stress_membrane_matrix() {
        // reduced form for λ=μ=1: a(M):N = 2 M:N + trM trN, whose Mandel
        // matrix is [[8/3, 2/3, 0], [2/3, 8/3, 0], [0, 0, 2]]
        let set = solid_correctors(2);
        let m = membrane_tensor(&set).unwrap();
        let expected = SMatrix::<f64, 3, 3>::new(
            8.0 / 3.0,
            2.0 / 3.0,
            0.0,
            2.0 / 3.0,
            8.0 / 3.0,
            0.0,
            0.0,
            0.0,
            2.0,
        );
        assert_relative_eq!((m.a - expected).norm(), 0.0, epsilon = 1e-9);
        assert!(m.nu_a > 0.0);
    }

    #[test]
    fn single_layer_plate_tensor_has_no_coupling() {
        let set = solid_correctors(2);
        let mut tensors = BTreeMap::new();
        tensors.insert(0, membrane_tensor(&set).unwrap());
        let column = vec![ColumnLayer {
            interval: [-0.5, 0.5],
            phase: 0,
        }];
        let ahom = assemble_plate_tensor(&column, &tensors).unwrap();
        let (mem, cpl, bend) = ahom_blocks(&ahom);
        assert_relative_eq!(cpl.norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!((bend - mem / 12.0).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn splitting_a_layer_preserves_the_tensor() {
        let set = solid_correctors(2);
        let mut tensors = BTreeMap::new();
        tensors.insert(0, membrane_tensor(&set).unwrap());
        let one = vec![ColumnLayer {
            interval: [-0.5, 0.5],
            phase: 0,
        }];
        let two = vec![
            ColumnLayer {
                interval: [-0.5, 0.1],
                phase: 0,
            },
            ColumnLayer {
                interval: [0.1, 0.5],
                phase: 0,
            },
        ];
        let a1 = assemble_plate_tensor(&one, &tensors).unwrap();
        let a2 = assemble_plate_tensor(&two, &tensors).unwrap();
        assert_relative_eq!((a1 - a2).abs().max(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn asymmetric_laminate_couples_but_stays_spd() {
        let set = solid_correctors(2);
        let soft = {
            let phase = PhaseSpec::isotropic(1, 0.4, 0.3);
            let cell = build_cell(2, &Primitive::FullSolid, &phase).unwrap();
            solve_all(&cell, &SolveOptions::default()).unwrap()
        };
        let mut tensors = BTreeMap::new();
        tensors.insert(0, membrane_tensor(&set).unwrap());
        tensors.insert(1, membrane_tensor(&soft).unwrap());
        let column = vec![
            ColumnLayer {
                interval: [-0.5, 0.2],
                phase: 0,
            },
            ColumnLayer {
                interval: [0.2, 0.5],
                phase: 1,
            },
        ];
        let ahom = assemble_plate_tensor(&column, &tensors).unwrap();
        let (_, cpl, _) = ahom_blocks(&ahom);
        assert!(cpl.norm() > 1e-3);
        let eig_min = ahom
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!(eig_min > 0.0);
    }

    #[test]
    fn fluid_free_phase_has_zero_coupling() {
        let set = solid_correctors(2);
        let pc = assemble_coupling_storage(&set).unwrap();
        assert_relative_eq!(pc.theta.norm(), 0.0, epsilon = 1e-10);
        assert_relative_eq!(pc.b_tensor.norm(), 0.0, epsilon = 1e-10);
        assert_relative_eq!(pc.c_tensor.norm(), 0.0, epsilon = 1e-10);
        assert_relative_eq!(pc.m0, 0.0, epsilon = 1e-12);
        assert_relative_eq!(pc.permeability.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn homogeneous_model_verifies_with_vacuous_fluid_checks() {
        let set = solid_correctors(2);
        let mut sets = BTreeMap::new();
        sets.insert(0, set);
        let model = build_effective_model(&sets, &homogeneous_map()).unwrap();
        let report = verify_tensor_properties(&model);
        assert!(report.all_passed(), "{report:#?}");
        assert!(report
            .checks
            .iter()
            .any(|c| c.name.contains("storage") && c.vacuous));
    }

    #[test]
    fn corrupted_duality_fails_verification() {
        let set = solid_correctors(2);
        let mut sets = BTreeMap::new();
        sets.insert(0, set);
        let mut model = build_effective_model(&sets, &homogeneous_map()).unwrap();
        model.regions[0].layers[0].b_tensor[(0, 0)] += 1e-3;
        let report = verify_tensor_properties(&model);
        let dual = report
            .checks
            .iter()
            .find(|c| c.name.contains("coupling_duality"))
            .unwrap();
        assert!(!dual.passed);
        assert!(dual.defect > 5e-4);
    }

    #[test]
    fn porous_membrane_is_softer_than_solid() {
        // an isolated pore keeps the solid wrapping every axis, so the
        // reduced form stays coercive while every stiffness drops
        let phase = PhaseSpec::isotropic(0, 1.0, 1.0);
        let cell = build_cell(8, &Primitive::CenteredInclusion { radius: 0.3 }, &phase).unwrap();
        let porous = solve_all(&cell, &SolveOptions::default()).unwrap();
        let porous_m = membrane_tensor(&porous).unwrap();
        let solid_m = membrane_tensor(&solid_correctors(2)).unwrap();
        assert!(porous_m.nu_a > 0.0);
        // every diagonal entry of the porous form sits strictly below the
        // solid one (material was removed)
        for p in 0..3 {
            assert!(porous_m.a[(p, p)] < solid_m.a[(p, p)] - 1e-3);
        }
    }
}
