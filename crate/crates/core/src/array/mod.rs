//! Distributed-array descriptors, block/cyclic index arithmetic, assembly of
//! per-process snapshots into a global view, heat-diagram normalization and
//! the element-to-process mapping view.
//!
//! Arrays are 1D or 2D. Global and local buffers are row-major. Ranks map to
//! process-grid coordinates row-major as well, so on a `2x2` grid rank 1 is
//! row 0, column 1.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ids::{EventRef, ProcessId};
use crate::monitor::Trace;
use crate::monitor::Snapshot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ElementType {
    Int64,
    Float64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Distribution {
    Block,
    /// Cyclic with block size 1.
    Cyclic,
}

/// Describes how one process's buffer fits into a distributed array.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArrayInfo {
    pub collection_id: String,
    pub element_type: ElementType,
    pub global_shape: Vec<usize>,
    pub distribution: Vec<Distribution>,
    pub process_grid: Vec<usize>,
    pub owner_rank: ProcessId,
}

impl ArrayInfo {
    pub fn with_owner(&self, owner: usize) -> ArrayInfo {
        ArrayInfo {
            owner_rank: ProcessId(owner),
            ..self.clone()
        }
    }

    pub fn global_len(&self) -> usize {
        self.global_shape.iter().product()
    }

    pub fn grid_size(&self) -> usize {
        self.process_grid.iter().product()
    }

    fn validate(&self) -> Result<(), ArrayError> {
        let dims = self.global_shape.len();
        if dims == 0 || dims > 2 {
            return Err(ArrayError::InvalidInfo(format!(
                "{dims} dimensions, only 1D and 2D arrays are supported"
            )));
        }
        if self.distribution.len() != dims || self.process_grid.len() != dims {
            return Err(ArrayError::InvalidInfo(
                "distribution and process_grid must have one entry per dimension".into(),
            ));
        }
        if self.global_shape.contains(&0) {
            return Err(ArrayError::InvalidInfo("global extents must be >= 1".into()));
        }
        if self.process_grid.contains(&0) {
            return Err(ArrayError::InvalidInfo("process grid extents must be >= 1".into()));
        }
        if self.owner_rank.0 >= self.grid_size() {
            return Err(ArrayError::InvalidInfo(format!(
                "owner rank {} outside a process grid of {} ranks",
                self.owner_rank,
                self.grid_size()
            )));
        }
        Ok(())
    }

    /// Grid coordinates of `rank`, row-major.
    fn coords(&self, rank: usize) -> Vec<usize> {
        match self.process_grid.as_slice() {
            [_] => vec![rank],
            [_, cols] => vec![rank / cols, rank % cols],
            _ => unreachable!("validated"),
        }
    }

    fn equal_modulo_owner(&self, other: &ArrayInfo) -> bool {
        self.collection_id == other.collection_id
            && self.element_type == other.element_type
            && self.global_shape == other.global_shape
            && self.distribution == other.distribution
            && self.process_grid == other.process_grid
    }
}

/// Element buffer, local or global.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArrayValues {
    Int64(Vec<i64>),
    Float64(Vec<f64>),
}

impl ArrayValues {
    pub fn len(&self) -> usize {
        match self {
            ArrayValues::Int64(v) => v.len(),
            ArrayValues::Float64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn element_type(&self) -> ElementType {
        match self {
            ArrayValues::Int64(_) => ElementType::Int64,
            ArrayValues::Float64(_) => ElementType::Float64,
        }
    }

    pub fn zeros(ty: ElementType, len: usize) -> ArrayValues {
        match ty {
            ElementType::Int64 => ArrayValues::Int64(vec![0; len]),
            ElementType::Float64 => ArrayValues::Float64(vec![0.0; len]),
        }
    }

    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            ArrayValues::Int64(v) => v[i] as f64,
            ArrayValues::Float64(v) => v[i],
        }
    }

    fn same_at(&self, i: usize, other: &ArrayValues, j: usize) -> bool {
        match (self, other) {
            (ArrayValues::Int64(a), ArrayValues::Int64(b)) => a[i] == b[j],
            (ArrayValues::Float64(a), ArrayValues::Float64(b)) => a[i].to_bits() == b[j].to_bits(),
            _ => false,
        }
    }

    fn copy_from(&mut self, i: usize, other: &ArrayValues, j: usize) {
        match (self, other) {
            (ArrayValues::Int64(a), ArrayValues::Int64(b)) => a[i] = b[j],
            (ArrayValues::Float64(a), ArrayValues::Float64(b)) => a[i] = b[j],
            _ => unreachable!("element types checked by caller"),
        }
    }
}

/// Local block of a distributed array captured by an array-trace event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArraySnapshot {
    pub info: ArrayInfo,
    pub local_values: ArrayValues,
    pub at_event: EventRef,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArrayError {
    #[error("invalid array info: {0}")]
    InvalidInfo(String),
    #[error("array info mismatch: {0}")]
    InfoMismatch(String),
    #[error("snapshots disagree at global index {0}")]
    OverlapConflict(usize),
    #[error("no present elements")]
    EmptyView,
    #[error("no snapshots to assemble")]
    NoSnapshots,
}

/// Global indices owned by one rank, per dimension.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LocalExtent {
    pub indices: Vec<Vec<usize>>,
}

impl LocalExtent {
    pub fn sizes(&self) -> Vec<usize> {
        self.indices.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.indices.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major global flat indices in local buffer order.
    pub fn global_flat_indices(&self, global_shape: &[usize]) -> Vec<usize> {
        match self.indices.as_slice() {
            [rows] => rows.clone(),
            [rows, cols] => {
                let ncols = global_shape[1];
                rows.iter()
                    .flat_map(|r| cols.iter().map(move |c| r * ncols + c))
                    .collect()
            }
            _ => Vec::new(),
        }
    }
}

fn dim_indices(n: usize, parts: usize, coord: usize, dist: Distribution) -> Vec<usize> {
    match dist {
        Distribution::Block => {
            let b = n.div_ceil(parts);
            let lo = (coord * b).min(n);
            let hi = ((coord + 1) * b).min(n);
            (lo..hi).collect()
        }
        Distribution::Cyclic => (coord..n).step_by(parts).collect(),
    }
}

/// Indices owned by `info.owner_rank`.
///
/// BLOCK over `p` parts gives rank `r` the range `[r*ceil(n/p), min(n, (r+1)*ceil(n/p)))`;
/// CYCLIC gives it every index congruent to `r` modulo `p`.
pub fn local_extent(info: &ArrayInfo) -> Result<LocalExtent, ArrayError> {
    info.validate()?;
    let coords = info.coords(info.owner_rank.0);
    let indices = (0..info.global_shape.len())
        .map(|d| {
            dim_indices(
                info.global_shape[d],
                info.process_grid[d],
                coords[d],
                info.distribution[d],
            )
        })
        .collect();
    Ok(LocalExtent { indices })
}

/// Splits a global row-major buffer into the local buffer of every rank.
pub fn scatter(info: &ArrayInfo, global: &ArrayValues) -> Result<Vec<ArrayValues>, ArrayError> {
    info.validate()?;
    if global.len() != info.global_len() {
        return Err(ArrayError::InfoMismatch(format!(
            "global buffer has {} elements, shape implies {}",
            global.len(),
            info.global_len()
        )));
    }
    (0..info.grid_size())
        .map(|rank| {
            let ext = local_extent(&info.with_owner(rank))?;
            let flat = ext.global_flat_indices(&info.global_shape);
            Ok(match global {
                ArrayValues::Int64(v) => ArrayValues::Int64(flat.iter().map(|&i| v[i]).collect()),
                ArrayValues::Float64(v) => {
                    ArrayValues::Float64(flat.iter().map(|&i| v[i]).collect())
                }
            })
        })
        .collect()
}

/// Global view reassembled from one or more local snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalArrayView {
    pub collection_id: String,
    pub shape: Vec<usize>,
    pub values: ArrayValues,
    pub present_mask: Vec<bool>,
    pub contributing: BTreeSet<ProcessId>,
}

pub fn assemble(snapshots: &[&ArraySnapshot]) -> Result<GlobalArrayView, ArrayError> {
    let first = snapshots.first().ok_or(ArrayError::NoSnapshots)?;
    let info = &first.info;
    info.validate()?;
    let mut values = ArrayValues::zeros(info.element_type, info.global_len());
    let mut present = vec![false; info.global_len()];
    let mut contributing = BTreeSet::new();
    for snap in snapshots {
        if !snap.info.equal_modulo_owner(info) {
            return Err(ArrayError::InfoMismatch(format!(
                "descriptor of rank {} differs from rank {}",
                snap.info.owner_rank, info.owner_rank
            )));
        }
        if snap.local_values.element_type() != info.element_type {
            return Err(ArrayError::InfoMismatch(format!(
                "rank {} supplied {:?} values for a {:?} array",
                snap.info.owner_rank,
                snap.local_values.element_type(),
                info.element_type
            )));
        }
        let ext = local_extent(&snap.info)?;
        if ext.len() != snap.local_values.len() {
            return Err(ArrayError::InfoMismatch(format!(
                "rank {} supplied {} elements, local extent is {}",
                snap.info.owner_rank,
                snap.local_values.len(),
                ext.len()
            )));
        }
        for (j, g) in ext.global_flat_indices(&info.global_shape).into_iter().enumerate() {
            if present[g] {
                if !values.same_at(g, &snap.local_values, j) {
                    return Err(ArrayError::OverlapConflict(g));
                }
            } else {
                values.copy_from(g, &snap.local_values, j);
                present[g] = true;
            }
        }
        contributing.insert(snap.info.owner_rank);
    }
    Ok(GlobalArrayView {
        collection_id: info.collection_id.clone(),
        shape: info.global_shape.clone(),
        values,
        present_mask: present,
        contributing,
    })
}

/// Min-max normalized grid; absent cells are `None`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatDiagram {
    pub shape: Vec<usize>,
    pub values: Vec<Option<f64>>,
    pub min: f64,
    pub max: f64,
}

/// Normalizes present values to `[0, 1]`; an all-equal array maps to 0.5.
pub fn heat_diagram(view: &GlobalArrayView) -> Result<HeatDiagram, ArrayError> {
    let present: Vec<f64> = (0..view.values.len())
        .filter(|&i| view.present_mask[i])
        .map(|i| view.values.get_f64(i))
        .collect();
    if present.is_empty() {
        return Err(ArrayError::EmptyView);
    }
    let min = present.iter().copied().fold(f64::INFINITY, f64::min);
    let max = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let values = (0..view.values.len())
        .map(|i| {
            view.present_mask[i].then(|| {
                if span == 0.0 {
                    0.5
                } else {
                    (view.values.get_f64(i) - min) / span
                }
            })
        })
        .collect();
    Ok(HeatDiagram {
        shape: view.shape.clone(),
        values,
        min,
        max,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MappingView {
    pub shape: Vec<usize>,
    /// Owner rank of every element, row-major.
    pub owners: Vec<usize>,
}

pub fn mapping_view(info: &ArrayInfo, world_size: usize) -> Result<MappingView, ArrayError> {
    info.validate()?;
    if info.grid_size() != world_size {
        return Err(ArrayError::InvalidInfo(format!(
            "process grid holds {} ranks but world size is {world_size}",
            info.grid_size()
        )));
    }
    let mut owners = vec![usize::MAX; info.global_len()];
    for rank in 0..world_size {
        let ext = local_extent(&info.with_owner(rank))?;
        for g in ext.global_flat_indices(&info.global_shape) {
            owners[g] = rank;
        }
    }
    Ok(MappingView {
        shape: info.global_shape.clone(),
        owners,
    })
}

/// Array snapshots of `collection_id` in a trace, grouped by program point:
/// group `k` holds every process's `k`-th trace of that collection.
pub fn collection_snapshots<'t>(trace: &'t Trace, collection_id: &str) -> Vec<Vec<&'t ArraySnapshot>> {
    let mut groups: Vec<Vec<&ArraySnapshot>> = Vec::new();
    for events in &trace.events {
        let mut k = 0;
        for ev in events {
            let Some(Snapshot::Array(snap)) = ev.payload_ref.as_ref().and_then(|id| trace.snapshots.get(id))
            else {
                continue;
            };
            if snap.info.collection_id != collection_id {
                continue;
            }
            if groups.len() <= k {
                groups.push(Vec::new());
            }
            groups[k].push(snap);
            k += 1;
        }
    }
    groups
}

/// Collection ids traced anywhere in `trace`, sorted.
pub fn collections(trace: &Trace) -> BTreeSet<String> {
    trace
        .snapshots
        .values()
        .filter_map(|s| match s {
            Snapshot::Array(a) => Some(a.info.collection_id.clone()),
            _ => None,
        })
        .collect()
}
