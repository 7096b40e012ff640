//! On-disk formats: effective-model export/import (JSON metadata plus a
//! little-endian f64 block file), energy-ledger CSV, and field snapshots.
//!
//! All floating-point payloads live in raw little-endian blocks so exports
//! round-trip bit exactly; the JSON sidecars carry only structure (counts,
//! phase ids, offsets, grid shapes).

use crate::effective::{EffectiveModel, LayerCoefficients, RegionModel};
use crate::plate::{EnergyLedger, PlateState, SimMode};
use nalgebra::{Matrix3, SMatrix};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("metadata parse failure: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed file: {0}")]
    Format(String),
}

const MODEL_FORMAT: &str = "poroplate-model-v1";
/// f64 values per layer in the model block: interval(2) + fluid_fraction(1)
/// + m0(1) + four 3×3 tensors + viscous energy (5·9)
const LAYER_STRIDE: usize = 2 + 1 + 1 + 5 * 9;
/// per-region header: rect(4) + kappa_bar(1) + ahom(36)
const REGION_HEADER: usize = 4 + 1 + 36;

#[derive(Debug, Serialize, Deserialize)]
struct ModelMeta {
    format: String,
    block_file: String,
    block_len: usize,
    regions: Vec<RegionMeta>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RegionMeta {
    offset: usize,
    layer_phases: Vec<usize>,
}

fn push_matrix3(block: &mut Vec<f64>, m: &Matrix3<f64>) {
    for i in 0..3 {
        for j in 0..3 {
            block.push(m[(i, j)]);
        }
    }
}

fn pop_matrix3(block: &[f64], at: &mut usize) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = block[*at];
            *at += 1;
        }
    }
    m
}

/// Writes `model.json` and `model.f64` into `dir`.
pub fn write_model(dir: &Path, model: &EffectiveModel) -> Result<(), IoError> {
    std::fs::create_dir_all(dir)?;
    let mut block = Vec::new();
    let mut regions = Vec::new();
    for region in &model.regions {
        regions.push(RegionMeta {
            offset: block.len(),
            layer_phases: region.layers.iter().map(|l| l.phase).collect(),
        });
        block.extend_from_slice(&region.rect);
        block.push(region.kappa_bar);
        for i in 0..6 {
            for j in 0..6 {
                block.push(region.ahom[(i, j)]);
            }
        }
        for layer in &region.layers {
            block.extend_from_slice(&layer.interval);
            block.push(layer.fluid_fraction);
            block.push(layer.m0);
            push_matrix3(&mut block, &layer.theta);
            push_matrix3(&mut block, &layer.permeability);
            push_matrix3(&mut block, &layer.b_tensor);
            push_matrix3(&mut block, &layer.c_tensor);
            push_matrix3(&mut block, &layer.viscous_energy);
        }
    }
    let meta = ModelMeta {
        format: MODEL_FORMAT.into(),
        block_file: "model.f64".into(),
        block_len: block.len(),
        regions,
    };
    let mut f = std::fs::File::create(dir.join("model.json"))?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    write_f64_block(&dir.join("model.f64"), &block)?;
    Ok(())
}

/// Reads a model previously written by [`write_model`].
pub fn read_model(dir: &Path) -> Result<EffectiveModel, IoError> {
    let meta: ModelMeta = serde_json::from_reader(std::fs::File::open(dir.join("model.json"))?)?;
    if meta.format != MODEL_FORMAT {
        return Err(IoError::Format(format!(
            "unsupported model format '{}'",
            meta.format
        )));
    }
    let block = read_f64_block(&dir.join(&meta.block_file))?;
    if block.len() != meta.block_len {
        return Err(IoError::Format(format!(
            "block file holds {} values, metadata promises {}",
            block.len(),
            meta.block_len
        )));
    }
    let mut regions = Vec::new();
    for rm in &meta.regions {
        let need = rm.offset + REGION_HEADER + rm.layer_phases.len() * LAYER_STRIDE;
        if need > block.len() {
            return Err(IoError::Format(format!(
                "region data at offset {} overruns the block",
                rm.offset
            )));
        }
        let mut at = rm.offset;
        let rect = [block[at], block[at + 1], block[at + 2], block[at + 3]];
        at += 4;
        let kappa_bar = block[at];
        at += 1;
        let mut ahom = SMatrix::<f64, 6, 6>::zeros();
        for i in 0..6 {
            for j in 0..6 {
                ahom[(i, j)] = block[at];
                at += 1;
            }
        }
        let mut layers = Vec::new();
        for &phase in &rm.layer_phases {
            let interval = [block[at], block[at + 1]];
            at += 2;
            let fluid_fraction = block[at];
            let m0 = block[at + 1];
            at += 2;
            layers.push(LayerCoefficients {
                interval,
                phase,
                fluid_fraction,
                m0,
                theta: pop_matrix3(&block, &mut at),
                permeability: pop_matrix3(&block, &mut at),
                b_tensor: pop_matrix3(&block, &mut at),
                c_tensor: pop_matrix3(&block, &mut at),
                viscous_energy: pop_matrix3(&block, &mut at),
            });
        }
        regions.push(RegionModel {
            rect,
            ahom,
            layers,
            kappa_bar,
        });
    }
    Ok(EffectiveModel { regions })
}

fn write_f64_block(path: &Path, values: &[f64]) -> Result<(), IoError> {
    let mut f = std::fs::File::create(path)?;
    for v in values {
        f.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_f64_block(path: &Path) -> Result<Vec<f64>, IoError> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() % 8 != 0 {
        return Err(IoError::Format(format!(
            "block length {} is not a multiple of 8",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Writes the energy ledger as CSV. The quasi-static header is
/// `step,time,E_elastic,E_pressure,D_cumulative,W_loads,residual`; the
/// inertial schema adds the `E_kinetic` column after `E_elastic`. Values use
/// the shortest round-trip decimal form, so identical ledgers produce
/// byte-identical files.
pub fn write_ledger_csv(path: &Path, ledger: &EnergyLedger) -> Result<(), IoError> {
    let mut out = String::new();
    let inertial = ledger.mode == SimMode::Inertial;
    if inertial {
        out.push_str("step,time,E_elastic,E_kinetic,E_pressure,D_cumulative,W_loads,residual\n");
    } else {
        out.push_str("step,time,E_elastic,E_pressure,D_cumulative,W_loads,residual\n");
    }
    for r in &ledger.rows {
        out.push_str(&format!("{},{}", r.step, r.time));
        out.push_str(&format!(",{}", r.e_elastic));
        if inertial {
            out.push_str(&format!(",{}", r.e_kinetic));
        }
        out.push_str(&format!(
            ",{},{},{},{}\n",
            r.e_pressure, r.d_cumulative, r.w_loads, r.residual
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Sidecar of one field snapshot.
#[derive(Debug, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub step: usize,
    pub time: f64,
    /// plate grid `(Nx, Ny, Nz)`
    pub grid: [usize; 3],
    /// in-plane displacement coefficients (2 per node, node-major)
    pub n_a: usize,
    /// deflection coefficients (value, ∂x, ∂y, ∂xy per node)
    pub n_b: usize,
    /// live pressure coefficients
    pub n_p: usize,
    /// full-layout indices of the live pressure dofs
    pub p_live: Vec<usize>,
    pub block_file: String,
}

/// Writes `snap_<step>.json` and `snap_<step>.f64` (u then p) into `dir`.
pub fn write_snapshot(
    dir: &Path,
    state: &PlateState,
    step: usize,
    grid: [usize; 3],
    n_a: usize,
    p_live: &[usize],
) -> Result<(), IoError> {
    std::fs::create_dir_all(dir)?;
    let block_file = format!("snap_{step:06}.f64");
    let meta = SnapshotMeta {
        step,
        time: state.t,
        grid,
        n_a,
        n_b: state.u.len() - n_a,
        n_p: state.p.len(),
        p_live: p_live.to_vec(),
        block_file: block_file.clone(),
    };
    let mut f = std::fs::File::create(dir.join(format!("snap_{step:06}.json")))?;
    serde_json::to_writer_pretty(&mut f, &meta)?;
    f.write_all(b"\n")?;
    let mut block: Vec<f64> = state.u.iter().cloned().collect();
    block.extend(state.p.iter());
    write_f64_block(&dir.join(block_file), &block)?;
    Ok(())
}

/// Reads one snapshot back as its sidecar and `(u, p)` vectors.
pub fn read_snapshot(
    dir: &Path,
    step: usize,
) -> Result<(SnapshotMeta, nalgebra::DVector<f64>, nalgebra::DVector<f64>), IoError> {
    let meta: SnapshotMeta =
        serde_json::from_reader(std::fs::File::open(dir.join(format!("snap_{step:06}.json")))?)?;
    let block = read_f64_block(&dir.join(&meta.block_file))?;
    let n_u = meta.n_a + meta.n_b;
    if block.len() != n_u + meta.n_p {
        return Err(IoError::Format(format!(
            "snapshot block holds {} values, expected {}",
            block.len(),
            n_u + meta.n_p
        )));
    }
    let u = nalgebra::DVector::from_column_slice(&block[..n_u]);
    let p = nalgebra::DVector::from_column_slice(&block[n_u..]);
    Ok((meta, u, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plate::{LedgerRow, PlateState};
    use nalgebra::DVector;

    fn sample_model() -> EffectiveModel {
        let mut ahom = SMatrix::<f64, 6, 6>::identity();
        ahom[(0, 3)] = -0.25;
        ahom[(3, 0)] = -0.25;
        EffectiveModel {
            regions: vec![RegionModel {
                rect: [0.0, 0.0, 1.0, 1.0],
                ahom,
                layers: vec![LayerCoefficients {
                    interval: [-0.5, 0.5],
                    phase: 3,
                    fluid_fraction: 0.25,
                    theta: Matrix3::identity() * 0.3,
                    m0: 0.125,
                    permeability: Matrix3::from_diagonal(&nalgebra::Vector3::new(
                        0.0, 0.0, 1e-2,
                    )),
                    b_tensor: Matrix3::identity() * 0.05,
                    c_tensor: Matrix3::identity() * -0.05,
                    viscous_energy: Matrix3::identity() * 1e-2,
                }],
                kappa_bar: 1.5,
            }],
        }
    }

    #[test]
    fn model_round_trips_bit_exactly() {
        let dir = std::env::temp_dir().join("poroplate-io-model-test");
        let model = sample_model();
        write_model(&dir, &model).unwrap();
        let back = read_model(&dir).unwrap();
        assert_eq!(model.regions.len(), back.regions.len());
        let (a, b) = (&model.regions[0], &back.regions[0]);
        assert_eq!(a.rect, b.rect);
        assert_eq!(a.kappa_bar, b.kappa_bar);
        assert_eq!(a.ahom, b.ahom);
        assert_eq!(a.layers[0].m0, b.layers[0].m0);
        assert_eq!(a.layers[0].theta, b.layers[0].theta);
        assert_eq!(a.layers[0].permeability, b.layers[0].permeability);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn ledger_csv_has_the_mode_dependent_header() {
        let row = LedgerRow {
            step: 0,
            time: 0.0,
            e_elastic: 1.0,
            e_kinetic: 2.0,
            e_pressure: 3.0,
            d_cumulative: 0.0,
            w_loads: 4.0,
            residual: 0.0,
        };
        let dir = std::env::temp_dir().join("poroplate-io-ledger-test");
        std::fs::create_dir_all(&dir).unwrap();
        let qs = EnergyLedger {
            mode: SimMode::QuasiStatic,
            rows: vec![row.clone()],
        };
        let path = dir.join("qs.csv");
        write_ledger_csv(&path, &qs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("step,time,E_elastic,E_pressure,D_cumulative,W_loads,residual\n"));
        assert!(!text.contains("E_kinetic"));

        let dyn_ledger = EnergyLedger {
            mode: SimMode::Inertial,
            rows: vec![row],
        };
        let path = dir.join("dyn.csv");
        write_ledger_csv(&path, &dyn_ledger).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text
            .starts_with("step,time,E_elastic,E_kinetic,E_pressure,D_cumulative,W_loads,residual\n"));
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn snapshot_round_trips() {
        let dir = std::env::temp_dir().join("poroplate-io-snap-test");
        let state = PlateState {
            u: DVector::from_column_slice(&[1.0, -2.0, 0.5]),
            p: DVector::from_column_slice(&[0.25]),
            t: 0.125,
        };
        write_snapshot(&dir, &state, 7, [2, 2, 1], 2, &[3]).unwrap();
        let (meta, u, p) = read_snapshot(&dir, 7).unwrap();
        assert_eq!(meta.time, 0.125);
        assert_eq!(meta.p_live, vec![3]);
        assert_eq!(u, state.u);
        assert_eq!(p, state.p);
        std::fs::remove_dir_all(&dir).ok();
    }
}
