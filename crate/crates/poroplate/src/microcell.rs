//! Periodic unit-cell microstructures and the plate-scale phase layout.
//!
//! A microstructure is a voxelization of the unit torus `𝒴 = [0,1)³` into
//! `N³` cubes, each labelled fluid or solid. The plate mid-plane `ω = (0,1)²`
//! (periodic) is tiled by axis-aligned rectangles, each carrying an ordered
//! stack of thickness intervals of `I = (−1/2, 1/2)` that reference a phase.

use crate::mandel::ElasticityTensor;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

/// Geometric half-thickness of the reference plate interval `I`.
pub const HALF_THICKNESS: f64 = 0.5;

/// Absolute tolerance for layout alignment checks.
pub const LAYOUT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MicrocellError {
    #[error("solid voxel set is empty")]
    EmptySolid,
    #[error("solid phase is not connected under periodic 6-neighbor adjacency")]
    DisconnectedSolid,
    #[error("fluid phase is not connected under periodic 6-neighbor adjacency")]
    DisconnectedFluid,
    #[error("bad mask: {0}")]
    BadMask(String),
    #[error("resolution must be at least 2, got {0}")]
    BadResolution(usize),
    #[error("phase {0} referenced by the layout does not exist")]
    UnknownPhase(usize),
    #[error("column intervals overlap near x3 = {0}")]
    OverlappingIntervals(f64),
    #[error("column has a gap or does not span the thickness near x3 = {0}")]
    GapInColumn(f64),
    #[error("plane regions do not tile the periodic mid-plane: {0}")]
    BadRegions(String),
    #[error("density for phase {0} must be positive")]
    BadDensity(usize),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One material phase: an elasticity tensor plus bookkeeping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub id: usize,
    pub elasticity: ElasticityTensor,
    pub fluid_fraction_target: Option<f64>,
    /// Smallest eigenvalue of the elasticity Mandel matrix (coercivity bound).
    pub nu: f64,
}

impl PhaseSpec {
    pub fn new(id: usize, elasticity: ElasticityTensor) -> Self {
        let nu = elasticity.smallest_eigenvalue();
        PhaseSpec {
            id,
            elasticity,
            fluid_fraction_target: None,
            nu,
        }
    }

    pub fn isotropic(id: usize, lambda: f64, mu: f64) -> Self {
        Self::new(id, ElasticityTensor::isotropic(lambda, mu))
    }
}

/// Geometry primitive for cell construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Primitive {
    FullSolid,
    /// Fluid layer of thickness `d` normal to `axis` (1-based), occupying
    /// voxel layers `[0, round(d·N))` along that axis.
    Layer { axis: usize, thickness: f64 },
    /// Fluid ball of given radius centered at the cell midpoint.
    CenteredInclusion { radius: f64 },
    /// Explicit row-major mask, `true` = fluid.
    Mask(Vec<bool>),
}

/// Voxelized periodic unit cell with fluid/solid labels.
#[derive(Debug, Clone)]
pub struct CellMicrostructure {
    resolution: usize,
    fluid_mask: Vec<bool>,
    phase: PhaseSpec,
}

/// Diagnostic report of [`check_geometry`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometryReport {
    pub solid_connected: bool,
    pub fluid_connected: bool,
    pub fluid_fraction: f64,
    /// Whether a periodic fluid path spans each coordinate axis.
    pub fluid_percolation: [bool; 3],
}

/// Connectivity analysis of one voxel phase on the torus.
///
/// `offsets` assigns to every phase voxel an integer cell offset such that
/// `index + N·offset` is a consistent unwrapped position within its connected
/// component along every non-percolating axis. Cellsolve uses this to build
/// single-valued coordinate fields on phases that do not wrap the torus.
#[derive(Debug, Clone)]
pub struct PhaseTopology {
    pub count: usize,
    pub connected: bool,
    pub percolates: [bool; 3],
    pub offsets: Vec<[i64; 3]>,
}

impl CellMicrostructure {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn fluid_mask(&self) -> &[bool] {
        &self.fluid_mask
    }

    pub fn phase(&self) -> &PhaseSpec {
        &self.phase
    }

    /// Voxel edge length `h = 1/N`.
    pub fn voxel_size(&self) -> f64 {
        1.0 / self.resolution as f64
    }

    /// Row-major voxel index.
    pub fn voxel_index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.resolution * (iy + self.resolution * iz)
    }

    pub fn is_fluid(&self, ix: usize, iy: usize, iz: usize) -> bool {
        self.fluid_mask[self.voxel_index(ix, iy, iz)]
    }

    pub fn fluid_fraction(&self) -> f64 {
        let fluid = self.fluid_mask.iter().filter(|&&f| f).count();
        fluid as f64 / self.fluid_mask.len() as f64
    }

    pub fn has_fluid(&self) -> bool {
        self.fluid_mask.iter().any(|&f| f)
    }

    /// Connectivity/percolation analysis of the voxels selected by `fluid`.
    pub fn topology(&self, fluid: bool) -> PhaseTopology {
        analyze_phase(self.resolution, &self.fluid_mask, fluid)
    }
}

/// Builds a validated microstructure from a primitive descriptor.
pub fn build_cell(
    resolution: usize,
    geometry: &Primitive,
    phase: &PhaseSpec,
) -> Result<CellMicrostructure, MicrocellError> {
    if resolution < 2 {
        return Err(MicrocellError::BadResolution(resolution));
    }
    let n = resolution;
    let total = n * n * n;
    let fluid_mask = match geometry {
        Primitive::FullSolid => vec![false; total],
        Primitive::Layer { axis, thickness } => {
            if !(1..=3).contains(axis) {
                return Err(MicrocellError::BadMask(format!(
                    "layer axis must be 1, 2 or 3, got {axis}"
                )));
            }
            if !(0.0..=1.0).contains(thickness) {
                return Err(MicrocellError::BadMask(format!(
                    "layer thickness must lie in [0,1], got {thickness}"
                )));
            }
            let layers = (thickness * n as f64).round() as usize;
            let mut mask = vec![false; total];
            for iz in 0..n {
                for iy in 0..n {
                    for ix in 0..n {
                        let along = [ix, iy, iz][axis - 1];
                        if along < layers {
                            mask[ix + n * (iy + n * iz)] = true;
                        }
                    }
                }
            }
            mask
        }
        Primitive::CenteredInclusion { radius } => {
            let mut mask = vec![false; total];
            let h = 1.0 / n as f64;
            for iz in 0..n {
                for iy in 0..n {
                    for ix in 0..n {
                        let c = [
                            (ix as f64 + 0.5) * h - 0.5,
                            (iy as f64 + 0.5) * h - 0.5,
                            (iz as f64 + 0.5) * h - 0.5,
                        ];
                        let r2 = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
                        if r2 <= radius * radius {
                            mask[ix + n * (iy + n * iz)] = true;
                        }
                    }
                }
            }
            mask
        }
        Primitive::Mask(mask) => {
            if mask.len() != total {
                return Err(MicrocellError::BadMask(format!(
                    "mask has {} entries, expected {}³ = {}",
                    mask.len(),
                    n,
                    total
                )));
            }
            mask.clone()
        }
    };

    let cell = CellMicrostructure {
        resolution,
        fluid_mask,
        phase: phase.clone(),
    };
    let solid = cell.topology(false);
    if solid.count == 0 {
        return Err(MicrocellError::EmptySolid);
    }
    if !solid.connected {
        return Err(MicrocellError::DisconnectedSolid);
    }
    let fluid = cell.topology(true);
    if fluid.count > 0 && !fluid.connected {
        return Err(MicrocellError::DisconnectedFluid);
    }
    Ok(cell)
}

/// Pure diagnostic over a well-formed cell.
pub fn check_geometry(cell: &CellMicrostructure) -> GeometryReport {
    let solid = cell.topology(false);
    let fluid = cell.topology(true);
    GeometryReport {
        solid_connected: solid.connected,
        // An empty fluid set is vacuously connected.
        fluid_connected: fluid.count == 0 || fluid.connected,
        fluid_fraction: cell.fluid_fraction(),
        fluid_percolation: fluid.percolates,
    }
}

/// Breadth-first analysis of the sub-lattice where `mask == value`.
///
/// Percolation along an axis is detected as a nonzero winding number: a BFS
/// edge that closes a loop with inconsistent integer cell offsets.
fn analyze_phase(n: usize, mask: &[bool], value: bool) -> PhaseTopology {
    let total = n * n * n;
    let in_phase = |idx: usize| mask[idx] == value;
    let count = (0..total).filter(|&i| in_phase(i)).count();
    let mut offsets = vec![[0i64; 3]; total];
    let mut visited = vec![false; total];
    let mut percolates = [false; 3];
    let mut components = 0usize;

    let coords = |idx: usize| -> [usize; 3] { [idx % n, (idx / n) % n, idx / (n * n)] };

    for start in 0..total {
        if !in_phase(start) || visited[start] {
            continue;
        }
        components += 1;
        visited[start] = true;
        let mut queue = VecDeque::new();
        queue.push_back(start);
        while let Some(cur) = queue.pop_front() {
            let c = coords(cur);
            for axis in 0..3 {
                for dir in [-1i64, 1i64] {
                    let mut nb = c;
                    let mut wrap = 0i64;
                    let v = c[axis] as i64 + dir;
                    if v < 0 {
                        nb[axis] = n - 1;
                        wrap = -1;
                    } else if v as usize >= n {
                        nb[axis] = 0;
                        wrap = 1;
                    } else {
                        nb[axis] = v as usize;
                    }
                    let nb_idx = nb[0] + n * (nb[1] + n * nb[2]);
                    if !in_phase(nb_idx) {
                        continue;
                    }
                    let mut nb_off = offsets[cur];
                    nb_off[axis] += wrap;
                    if !visited[nb_idx] {
                        visited[nb_idx] = true;
                        offsets[nb_idx] = nb_off;
                        queue.push_back(nb_idx);
                    } else {
                        for k in 0..3 {
                            if offsets[nb_idx][k] != nb_off[k] {
                                percolates[k] = true;
                            }
                        }
                    }
                }
            }
        }
    }

    PhaseTopology {
        count,
        connected: components <= 1,
        percolates,
        offsets,
    }
}

/// Writes a mask in the binary exchange format: an 8-byte little-endian
/// resolution header followed by `N³` bytes (0 = solid, 1 = fluid), row-major.
pub fn write_mask(path: &Path, resolution: usize, mask: &[bool]) -> Result<(), MicrocellError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&(resolution as u64).to_le_bytes())?;
    let bytes: Vec<u8> = mask.iter().map(|&b| b as u8).collect();
    f.write_all(&bytes)?;
    Ok(())
}

/// Reads a mask in the binary exchange format.
pub fn read_mask(path: &Path) -> Result<(usize, Vec<bool>), MicrocellError> {
    let mut f = std::fs::File::open(path)?;
    let mut header = [0u8; 8];
    f.read_exact(&mut header)
        .map_err(|_| MicrocellError::BadMask("file shorter than 8-byte header".into()))?;
    let n = u64::from_le_bytes(header) as usize;
    if !(2..=4096).contains(&n) {
        return Err(MicrocellError::BadMask(format!(
            "implausible resolution {n} in header"
        )));
    }
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes)?;
    if bytes.len() != n * n * n {
        return Err(MicrocellError::BadMask(format!(
            "mask body has {} bytes, expected {}³ = {}",
            bytes.len(),
            n,
            n * n * n
        )));
    }
    if let Some(bad) = bytes.iter().find(|&&b| b > 1) {
        return Err(MicrocellError::BadMask(format!(
            "mask bytes must be 0 or 1, found {bad}"
        )));
    }
    Ok((n, bytes.into_iter().map(|b| b == 1).collect()))
}

/// Densities of the fluid and solid constituents of one phase.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Densities {
    pub fluid: f64,
    pub solid: f64,
}

/// One thickness interval of a column referencing a phase.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnLayer {
    pub interval: [f64; 2],
    pub phase: usize,
}

/// Axis-aligned rectangle `[x0,x1)×[y0,y1)` of the mid-plane with its column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneRegion {
    pub rect: [f64; 4],
    pub column: Vec<ColumnLayer>,
}

/// Piecewise-constant plate-scale phase layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlatePhaseMap {
    pub regions: Vec<PlaneRegion>,
    pub densities: BTreeMap<usize, Densities>,
}

/// Validates a plate layout descriptor.
///
/// Rectangles must tile the periodic mid-plane `(0,1)²` and every column must
/// partition the thickness interval `I = (−1/2, 1/2)` exactly.
pub fn build_phase_map(
    regions: Vec<PlaneRegion>,
    densities: BTreeMap<usize, Densities>,
) -> Result<PlatePhaseMap, MicrocellError> {
    if regions.is_empty() {
        return Err(MicrocellError::BadRegions("no regions given".into()));
    }
    let mut area = 0.0;
    for (i, r) in regions.iter().enumerate() {
        let [x0, y0, x1, y1] = r.rect;
        if !(x1 > x0 && y1 > y0) || x0 < -LAYOUT_TOL || y0 < -LAYOUT_TOL
            || x1 > 1.0 + LAYOUT_TOL || y1 > 1.0 + LAYOUT_TOL
        {
            return Err(MicrocellError::BadRegions(format!(
                "region {i} rectangle {:?} is not a proper sub-rectangle of (0,1)²",
                r.rect
            )));
        }
        area += (x1 - x0) * (y1 - y0);
        for other in regions.iter().skip(i + 1) {
            let [u0, v0, u1, v1] = other.rect;
            let overlap_x = x1.min(u1) - x0.max(u0);
            let overlap_y = y1.min(v1) - y0.max(v0);
            if overlap_x > LAYOUT_TOL && overlap_y > LAYOUT_TOL {
                return Err(MicrocellError::BadRegions(format!(
                    "regions {:?} and {:?} overlap",
                    r.rect, other.rect
                )));
            }
        }
        validate_column(&r.column, &densities)?;
    }
    if (area - 1.0).abs() > 1e-9 {
        return Err(MicrocellError::BadRegions(format!(
            "rectangle areas sum to {area}, expected 1"
        )));
    }
    Ok(PlatePhaseMap { regions, densities })
}

fn validate_column(
    column: &[ColumnLayer],
    densities: &BTreeMap<usize, Densities>,
) -> Result<(), MicrocellError> {
    if column.is_empty() {
        return Err(MicrocellError::GapInColumn(-HALF_THICKNESS));
    }
    let mut layers: Vec<&ColumnLayer> = column.iter().collect();
    layers.sort_by(|a, b| a.interval[0].total_cmp(&b.interval[0]));
    let mut cursor = -HALF_THICKNESS;
    for layer in layers {
        let [lo, hi] = layer.interval;
        if hi <= lo {
            return Err(MicrocellError::GapInColumn(lo));
        }
        if lo < cursor - LAYOUT_TOL {
            return Err(MicrocellError::OverlappingIntervals(lo));
        }
        if lo > cursor + LAYOUT_TOL {
            return Err(MicrocellError::GapInColumn(cursor));
        }
        cursor = hi;
        let dens = densities
            .get(&layer.phase)
            .ok_or(MicrocellError::UnknownPhase(layer.phase))?;
        if dens.fluid <= 0.0 || dens.solid <= 0.0 {
            return Err(MicrocellError::BadDensity(layer.phase));
        }
    }
    if (cursor - HALF_THICKNESS).abs() > LAYOUT_TOL {
        return Err(MicrocellError::GapInColumn(cursor));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phase() -> PhaseSpec {
        PhaseSpec::isotropic(0, 1.0, 1.0)
    }

    #[test]
    fn full_solid_has_no_fluid() {
        let cell = build_cell(2, &Primitive::FullSolid, &phase()).unwrap();
        assert_eq!(cell.fluid_fraction(), 0.0);
        let report = check_geometry(&cell);
        assert!(report.solid_connected);
        assert!(report.fluid_connected);
        assert_eq!(report.fluid_percolation, [false, false, false]);
    }

    #[test]
    fn layer_cell_has_exact_fraction_and_inplane_percolation() {
        let cell = build_cell(
            8,
            &Primitive::Layer {
                axis: 3,
                thickness: 0.5,
            },
            &phase(),
        )
        .unwrap();
        assert_eq!(cell.fluid_fraction(), 0.5);
        let report = check_geometry(&cell);
        assert_eq!(report.fluid_percolation, [true, true, false]);
        assert!(report.solid_connected && report.fluid_connected);
        // The solid complement wraps the two in-plane axes but not the third.
        let solid = cell.topology(false);
        assert_eq!(solid.percolates, [true, true, false]);
    }

    #[test]
    fn isolated_inclusion_does_not_percolate() {
        let cell = build_cell(8, &Primitive::CenteredInclusion { radius: 0.25 }, &phase()).unwrap();
        let report = check_geometry(&cell);
        assert!(report.fluid_fraction > 0.0);
        assert_eq!(report.fluid_percolation, [false, false, false]);
        let solid = cell.topology(false);
        assert_eq!(solid.percolates, [true, true, true]);
    }

    #[test]
    fn all_fluid_mask_is_rejected() {
        let mask = vec![true; 64];
        let err = build_cell(4, &Primitive::Mask(mask), &phase()).unwrap_err();
        assert!(matches!(err, MicrocellError::EmptySolid));
    }

    #[test]
    fn wrong_size_mask_is_rejected() {
        let err = build_cell(4, &Primitive::Mask(vec![false; 63]), &phase()).unwrap_err();
        assert!(matches!(err, MicrocellError::BadMask(_)));
    }

    #[test]
    fn disconnected_fluid_is_rejected() {
        // Two isolated fluid voxels in an 4³ solid block.
        let n = 4;
        let mut mask = vec![false; n * n * n];
        mask[1 + n * (1 + n)] = true;
        mask[3 + n * (3 + n * 3)] = true;
        let err = build_cell(n, &Primitive::Mask(mask), &phase()).unwrap_err();
        assert!(matches!(err, MicrocellError::DisconnectedFluid));
    }

    #[test]
    fn fluid_fraction_counts_exactly() {
        let n = 4;
        let mut mask = vec![false; n * n * n];
        for idx in [0usize, 5, 17, 33, 63] {
            mask[idx] = true;
        }
        // idx 0 is fluid: keep solid connected by construction (it is).
        let cell = build_cell(n, &Primitive::Mask(mask.clone()), &phase());
        if let Ok(cell) = cell {
            let fluid = mask.iter().filter(|&&f| f).count();
            assert_eq!(cell.fluid_fraction(), fluid as f64 / 64.0);
        }
    }

    #[test]
    fn connectivity_invariant_under_translation() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n = 6;
        for _ in 0..20 {
            let mask: Vec<bool> = (0..n * n * n).map(|_| rng.random_bool(0.35)).collect();
            let base = analyze_phase(n, &mask, false);
            let (sx, sy, sz) = (
                rng.random_range(0..n),
                rng.random_range(0..n),
                rng.random_range(0..n),
            );
            let mut shifted = vec![false; n * n * n];
            for iz in 0..n {
                for iy in 0..n {
                    for ix in 0..n {
                        let jx = (ix + sx) % n;
                        let jy = (iy + sy) % n;
                        let jz = (iz + sz) % n;
                        shifted[jx + n * (jy + n * jz)] = mask[ix + n * (iy + n * iz)];
                    }
                }
            }
            let moved = analyze_phase(n, &shifted, false);
            assert_eq!(base.connected, moved.connected);
            assert_eq!(base.percolates, moved.percolates);
            assert_eq!(base.count, moved.count);
        }
    }

    #[test]
    fn mask_roundtrip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cell.mask");
        let cell = build_cell(
            8,
            &Primitive::Layer {
                axis: 1,
                thickness: 0.25,
            },
            &phase(),
        )
        .unwrap();
        write_mask(&path, 8, cell.fluid_mask()).unwrap();
        let (n, mask) = read_mask(&path).unwrap();
        assert_eq!(n, 8);
        assert_eq!(mask, cell.fluid_mask());
    }

    #[test]
    fn truncated_mask_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.mask");
        std::fs::write(&path, 4u64.to_le_bytes()).unwrap();
        assert!(matches!(
            read_mask(&path).unwrap_err(),
            MicrocellError::BadMask(_)
        ));
    }

    fn simple_densities() -> BTreeMap<usize, Densities> {
        let mut d = BTreeMap::new();
        d.insert(
            0,
            Densities {
                fluid: 1.0,
                solid: 1.0,
            },
        );
        d
    }

    #[test]
    fn homogeneous_phase_map_is_valid() {
        let map = build_phase_map(
            vec![PlaneRegion {
                rect: [0.0, 0.0, 1.0, 1.0],
                column: vec![ColumnLayer {
                    interval: [-0.5, 0.5],
                    phase: 0,
                }],
            }],
            simple_densities(),
        )
        .unwrap();
        assert_eq!(map.regions.len(), 1);
    }

    #[test]
    fn three_layer_column_is_valid() {
        build_phase_map(
            vec![PlaneRegion {
                rect: [0.0, 0.0, 1.0, 1.0],
                column: vec![
                    ColumnLayer {
                        interval: [-0.5, 0.0],
                        phase: 0,
                    },
                    ColumnLayer {
                        interval: [0.0, 0.25],
                        phase: 0,
                    },
                    ColumnLayer {
                        interval: [0.25, 0.5],
                        phase: 0,
                    },
                ],
            }],
            simple_densities(),
        )
        .unwrap();
    }

    #[test]
    fn column_gap_is_rejected() {
        let err = build_phase_map(
            vec![PlaneRegion {
                rect: [0.0, 0.0, 1.0, 1.0],
                column: vec![
                    ColumnLayer {
                        interval: [-0.5, 0.0],
                        phase: 0,
                    },
                    ColumnLayer {
                        interval: [0.25, 0.5],
                        phase: 0,
                    },
                ],
            }],
            simple_densities(),
        )
        .unwrap_err();
        assert!(matches!(err, MicrocellError::GapInColumn(_)));
    }

    #[test]
    fn unknown_phase_is_rejected() {
        let err = build_phase_map(
            vec![PlaneRegion {
                rect: [0.0, 0.0, 1.0, 1.0],
                column: vec![ColumnLayer {
                    interval: [-0.5, 0.5],
                    phase: 3,
                }],
            }],
            simple_densities(),
        )
        .unwrap_err();
        assert!(matches!(err, MicrocellError::UnknownPhase(3)));
    }

    #[test]
    fn two_half_plane_regions_tile() {
        let mut d = simple_densities();
        d.insert(
            1,
            Densities {
                fluid: 1.0,
                solid: 2.0,
            },
        );
        let map = build_phase_map(
            vec![
                PlaneRegion {
                    rect: [0.0, 0.0, 0.5, 1.0],
                    column: vec![ColumnLayer {
                        interval: [-0.5, 0.5],
                        phase: 0,
                    }],
                },
                PlaneRegion {
                    rect: [0.5, 0.0, 1.0, 1.0],
                    column: vec![ColumnLayer {
                        interval: [-0.5, 0.5],
                        phase: 1,
                    }],
                },
            ],
            d,
        )
        .unwrap();
        assert_eq!(map.regions.len(), 2);
    }

    #[test]
    fn overlapping_regions_are_rejected() {
        let err = build_phase_map(
            vec![
                PlaneRegion {
                    rect: [0.0, 0.0, 0.75, 1.0],
                    column: vec![ColumnLayer {
                        interval: [-0.5, 0.5],
                        phase: 0,
                    }],
                },
                PlaneRegion {
                    rect: [0.5, 0.0, 1.0, 1.0],
                    column: vec![ColumnLayer {
                        interval: [-0.5, 0.5],
                        phase: 0,
                    }],
                },
            ],
            simple_densities(),
        )
        .unwrap_err();
        assert!(matches!(err, MicrocellError::BadRegions(_)));
    }
}
