//! Chimera hardware topology with simulated qubit defects.
//!
//! Qubits are addressed by a linear id
//! `((row * cols + col) * 2 + side) * shore + k`, so coordinates and
//! adjacency are computed arithmetically. Side 0 qubits are the "vertical"
//! half of a unit cell and couple to the same `(side, k)` qubit in the cell
//! below; side 1 qubits are "horizontal" and couple to the cell to the right.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

pub type QubitId = u32;

pub const DEFAULT_OFFSET_RANGE: (f64, f64) = (-0.2, 0.2);
pub const DEFAULT_OFFSET_STEP: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChimeraSpec {
    pub rows: u32,
    pub cols: u32,
    pub shore: u32,
}

impl ChimeraSpec {
    pub const fn new(rows: u32, cols: u32, shore: u32) -> Self {
        Self { rows, cols, shore }
    }

    /// Square `C_l` with shore 4, the 2000Q-style cell.
    pub const fn square(l: u32) -> Self {
        Self::new(l, l, 4)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 || self.shore == 0 {
            return Err(Error::InvalidSpec(format!(
                "rows, cols and shore must be positive, got {}x{}x{}",
                self.rows, self.cols, self.shore
            )));
        }
        let total = u64::from(self.rows) * u64::from(self.cols) * 2 * u64::from(self.shore);
        if total > u64::from(u32::MAX) {
            return Err(Error::InvalidSpec(format!("{total} qubits do not fit a 32-bit id")));
        }
        Ok(())
    }

    pub const fn num_qubit_slots(&self) -> usize {
        (self.rows * self.cols * 2 * self.shore) as usize
    }

    /// Coupler count of the defect-free graph.
    pub const fn ideal_coupler_count(&self) -> usize {
        let (r, c, s) = (self.rows as usize, self.cols as usize, self.shore as usize);
        r * c * s * s + s * (r * (c - 1) + c * (r - 1))
    }

    pub const fn qubit_id(&self, coord: Coord) -> QubitId {
        ((coord.row * self.cols + coord.col) * 2 + coord.side as u32) * self.shore + coord.k
    }

    pub const fn coord(&self, q: QubitId) -> Coord {
        let k = q % self.shore;
        let rest = q / self.shore;
        let side = (rest % 2) as u8;
        let cell = rest / 2;
        Coord {
            row: cell / self.cols,
            col: cell % self.cols,
            side,
            k,
        }
    }

    /// Neighbors in the ideal graph, in ascending id order.
    fn ideal_neighbors(&self, q: QubitId) -> Vec<QubitId> {
        let c = self.coord(q);
        let mut out = Vec::with_capacity(self.shore as usize + 2);
        for k in 0..self.shore {
            out.push(self.qubit_id(Coord { side: 1 - c.side, k, ..c }));
        }
        if c.side == 0 {
            if c.row > 0 {
                out.push(self.qubit_id(Coord { row: c.row - 1, ..c }));
            }
            if c.row + 1 < self.rows {
                out.push(self.qubit_id(Coord { row: c.row + 1, ..c }));
            }
        } else {
            if c.col > 0 {
                out.push(self.qubit_id(Coord { col: c.col - 1, ..c }));
            }
            if c.col + 1 < self.cols {
                out.push(self.qubit_id(Coord { col: c.col + 1, ..c }));
            }
        }
        out.sort_unstable();
        out
    }
}

/// Position of a qubit: unit cell `(row, col)`, half `side` and index `k`
/// within that half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coord {
    pub row: u32,
    pub col: u32,
    pub side: u8,
    pub k: u32,
}

impl Coord {
    pub const fn new(row: u32, col: u32, side: u8, k: u32) -> Self {
        Self { row, col, side, k }
    }
}

/// Working qubits and couplers of one (possibly defective) Chimera chip,
/// together with its anneal-offset limits. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct HardwareGraph {
    spec: ChimeraSpec,
    working: Vec<bool>,
    adjacency: Vec<Vec<QubitId>>,
    num_couplers: usize,
    offset_ranges: Vec<(f64, f64)>,
    offset_step: f64,
}

pub fn build_chimera(spec: ChimeraSpec) -> Result<HardwareGraph> {
    spec.validate()?;
    let slots = spec.num_qubit_slots();
    let adjacency: Vec<Vec<QubitId>> = (0..slots as QubitId).map(|q| spec.ideal_neighbors(q)).collect();
    let num_couplers = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
    Ok(HardwareGraph {
        spec,
        working: alloc::vec![true; slots],
        adjacency,
        num_couplers,
        offset_ranges: alloc::vec![DEFAULT_OFFSET_RANGE; slots],
        offset_step: DEFAULT_OFFSET_STEP,
    })
}

impl HardwareGraph {
    pub fn spec(&self) -> ChimeraSpec {
        self.spec
    }

    pub fn num_qubits(&self) -> usize {
        self.working.iter().filter(|w| **w).count()
    }

    pub fn num_couplers(&self) -> usize {
        self.num_couplers
    }

    /// Size of the id space, including dead qubits.
    pub fn num_qubit_slots(&self) -> usize {
        self.working.len()
    }

    pub fn is_working(&self, q: QubitId) -> bool {
        self.working.get(q as usize).copied().unwrap_or(false)
    }

    pub fn qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.working
            .iter()
            .enumerate()
            .filter(|(_, w)| **w)
            .map(|(q, _)| q as QubitId)
    }

    pub fn dead_qubits(&self) -> Vec<QubitId> {
        self.working
            .iter()
            .enumerate()
            .filter(|(_, w)| !**w)
            .map(|(q, _)| q as QubitId)
            .collect()
    }

    /// All couplers as `(lo, hi)` pairs in ascending order.
    pub fn couplers(&self) -> impl Iterator<Item = (QubitId, QubitId)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(a, nbrs)| {
            let a = a as QubitId;
            nbrs.iter().filter(move |&&b| b > a).map(move |&b| (a, b))
        })
    }

    pub fn neighbors(&self, q: QubitId) -> Result<&[QubitId]> {
        if !self.is_working(q) {
            return Err(Error::UnknownQubit(q));
        }
        Ok(&self.adjacency[q as usize])
    }

    pub fn has_coupler(&self, a: QubitId, b: QubitId) -> bool {
        self.is_working(a) && self.adjacency[a as usize].binary_search(&b).is_ok()
    }

    pub fn coord(&self, q: QubitId) -> Coord {
        self.spec.coord(q)
    }

    pub fn qubit_id(&self, c: Coord) -> QubitId {
        self.spec.qubit_id(c)
    }

    pub fn offset_range(&self, q: QubitId) -> (f64, f64) {
        self.offset_ranges[q as usize]
    }

    pub fn offset_step(&self) -> f64 {
        self.offset_step
    }

    /// Replace the offset limits of every qubit. The range must contain 0.
    pub fn with_offset_limits(mut self, range: (f64, f64), step: f64) -> Result<Self> {
        if !(step > 0.0) || !(range.0 <= 0.0 && 0.0 <= range.1) {
            return Err(Error::InvalidInput(format!(
                "offset range [{}, {}] must contain 0 and step {step} must be positive",
                range.0, range.1
            )));
        }
        self.offset_ranges.iter_mut().for_each(|r| *r = range);
        self.offset_step = step;
        Ok(self)
    }

    /// Copy of the graph without `dead`; couplers touching them disappear.
    pub fn remove_qubits(&self, dead: &[QubitId]) -> Result<Self> {
        if let Some(&q) = dead.iter().find(|&&q| !self.is_working(q)) {
            return Err(Error::UnknownQubit(q));
        }
        let dead: BTreeSet<QubitId> = dead.iter().copied().collect();
        let mut out = self.clone();
        for &q in &dead {
            out.working[q as usize] = false;
            out.adjacency[q as usize].clear();
        }
        for nbrs in &mut out.adjacency {
            nbrs.retain(|b| !dead.contains(b));
        }
        out.num_couplers = out.adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        Ok(out)
    }

    /// True when no qubit has been removed.
    pub fn is_ideal(&self) -> bool {
        self.working.iter().all(|w| *w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c16_counts() {
        let hw = build_chimera(ChimeraSpec::square(16)).unwrap();
        assert_eq!(hw.num_qubits(), 2048);
        assert_eq!(hw.num_couplers(), 6016);
        assert_eq!(hw.couplers().count(), 6016);
    }

    #[test]
    fn single_cell_is_k44() {
        let hw = build_chimera(ChimeraSpec::square(1)).unwrap();
        assert_eq!(hw.num_qubits(), 8);
        assert_eq!(hw.num_couplers(), 16);
        for q in hw.qubits() {
            let nbrs = hw.neighbors(q).unwrap();
            assert_eq!(nbrs.len(), 4);
            assert!(nbrs.iter().all(|&b| hw.coord(b).side != hw.coord(q).side));
        }
    }

    #[test]
    fn degrees_on_c16() {
        let hw = build_chimera(ChimeraSpec::square(16)).unwrap();
        let interior = hw.qubit_id(Coord::new(5, 7, 0, 2));
        assert_eq!(hw.neighbors(interior).unwrap().len(), 6);
        let corner = hw.qubit_id(Coord::new(0, 0, 0, 1));
        assert_eq!(hw.neighbors(corner).unwrap().len(), 5);
    }

    #[test]
    fn coord_round_trip() {
        let spec = ChimeraSpec::new(3, 5, 2);
        for q in 0..spec.num_qubit_slots() as QubitId {
            assert_eq!(spec.qubit_id(spec.coord(q)), q);
        }
    }

    #[test]
    fn remove_qubits_cases() {
        let hw = build_chimera(ChimeraSpec::square(1)).unwrap();
        assert_eq!(hw.remove_qubits(&[]).unwrap(), hw);

        let one = hw.remove_qubits(&[3]).unwrap();
        assert_eq!(one.num_qubits(), 7);
        assert_eq!(one.num_couplers(), 12);
        assert_eq!(one.neighbors(3), Err(Error::UnknownQubit(3)));
        assert!(one.couplers().all(|(a, b)| a != 3 && b != 3));

        let all: Vec<QubitId> = hw.qubits().collect();
        let empty = hw.remove_qubits(&all).unwrap();
        assert_eq!(empty.num_qubits(), 0);
        assert_eq!(empty.num_couplers(), 0);

        assert_eq!(hw.remove_qubits(&[99]), Err(Error::UnknownQubit(99)));
        assert_eq!(one.remove_qubits(&[3]), Err(Error::UnknownQubit(3)));
    }

    #[test]
    fn invalid_specs() {
        assert!(build_chimera(ChimeraSpec::new(0, 1, 4)).is_err());
        assert!(build_chimera(ChimeraSpec::new(1, 1, 0)).is_err());
        let hw = build_chimera(ChimeraSpec::square(1)).unwrap();
        assert!(hw.clone().with_offset_limits((0.1, 0.2), 0.05).is_err());
        assert!(hw.with_offset_limits((-0.1, 0.1), 0.0).is_err());
    }

    #[test]
    fn default_offset_grid_has_nine_points() {
        let hw = build_chimera(ChimeraSpec::square(2)).unwrap();
        let (lo, hi) = hw.offset_range(0);
        let points = num_traits::Float::round((hi - lo) / hw.offset_step()) as i64 + 1;
        assert_eq!(points, 9);
    }
}
