//! Traces a known array: element `k` (row-major) holds `k` as INT64 or
//! `k / 2` as FLOAT64. Inputs: `shape` is `N` or `RxC`, `dist` is `block`
//! or `cyclic` (applied to every dimension), `type` is `int` or `float`.
//! A 2D array over 2 ranks uses a 2x1 process grid, over 4 ranks 2x2.

use crate::array::{local_extent, ArrayInfo, ArrayValues, Distribution, ElementType};
use crate::ids::ProcessId;
use crate::runtime::{Ctx, ProcessError, ProcessFuture};

fn bad(key: &str, reason: impl Into<String>) -> ProcessError {
    ProcessError::BadInput {
        key: key.into(),
        reason: reason.into(),
    }
}

fn parse_shape(raw: &str) -> Result<Vec<usize>, ProcessError> {
    raw.split('x')
        .map(|d| d.trim().parse::<usize>().map_err(|_| bad("shape", format!("cannot parse `{raw}`"))))
        .collect()
}

pub(super) fn main(ctx: Ctx) -> ProcessFuture {
    Box::pin(async move {
        let (rank, p) = (ctx.rank(), ctx.world_size());
        let shape = parse_shape(ctx.input("shape").unwrap_or("8"))?;
        let dist = match ctx.input("dist").unwrap_or("block") {
            "block" => Distribution::Block,
            "cyclic" => Distribution::Cyclic,
            other => return Err(bad("dist", format!("unknown distribution `{other}`"))),
        };
        let element_type = match ctx.input("type").unwrap_or("int") {
            "int" => ElementType::Int64,
            "float" => ElementType::Float64,
            other => return Err(bad("type", format!("unknown element type `{other}`"))),
        };
        let process_grid = match (shape.len(), p) {
            (1, _) => vec![p],
            (2, 1) => vec![1, 1],
            (2, 2) => vec![2, 1],
            (2, 4) => vec![2, 2],
            _ => return Err(bad("shape", "expected a 1D or 2D shape")),
        };
        let info = ArrayInfo {
            collection_id: "demo_array".into(),
            element_type,
            distribution: vec![dist; shape.len()],
            global_shape: shape,
            process_grid,
            owner_rank: ProcessId(rank),
        };
        let extent = local_extent(&info).map_err(|e| ProcessError::InvalidInfo(e.to_string()))?;
        let flat = extent.global_flat_indices(&info.global_shape);
        let values = match element_type {
            ElementType::Int64 => ArrayValues::Int64(flat.iter().map(|&k| k as i64).collect()),
            ElementType::Float64 => ArrayValues::Float64(flat.iter().map(|&k| k as f64 / 2.0).collect()),
        };
        ctx.array_trace(values, info).await?;
        Ok(Vec::new())
    })
}
