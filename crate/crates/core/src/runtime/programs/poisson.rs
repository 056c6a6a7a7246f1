//! Jacobi solver for `-Δu = 1` on the unit square with zero boundary values.
//!
//! The `n x n` interior grid is split into row blocks. Each iteration every
//! rank sends its first row up (tag 1) and its last row down (tag 2) and
//! receives the neighbouring ghost rows from explicit sources. At the end
//! each rank traces its block as `poisson_grid` and rank 0 gathers the full
//! grid (tag 3) and outputs it as little-endian `f64`s, row-major.

use super::{bytes_to_f64s, f64s_to_bytes};
use crate::array::{local_extent, ArrayInfo, ArrayValues, Distribution, ElementType};
use crate::ids::{ProcessId, RecvFilter};
use crate::runtime::{Ctx, ProcessError, ProcessFuture};

const TAG_UP: u32 = 1;
const TAG_DOWN: u32 = 2;
const TAG_GATHER: u32 = 3;

pub(super) fn main(ctx: Ctx) -> ProcessFuture {
    Box::pin(async move {
        let (rank, p) = (ctx.rank(), ctx.world_size());
        let n: usize = ctx.input_or("n", 16)?;
        let iters: usize = ctx.input_or("iters", 50)?;
        let info = ArrayInfo {
            collection_id: "poisson_grid".into(),
            element_type: ElementType::Float64,
            global_shape: vec![n, n],
            distribution: vec![Distribution::Block, Distribution::Block],
            process_grid: vec![p, 1],
            owner_rank: ProcessId(rank),
        };
        let extent = local_extent(&info).map_err(|e| ProcessError::InvalidInfo(e.to_string()))?;
        let rows = extent.indices[0].len();
        if rows == 0 {
            return Err(ProcessError::BadInput {
                key: "n".into(),
                reason: format!("n={n} leaves rank {rank} without rows"),
            });
        }
        let h = 1.0 / (n as f64 + 1.0);
        let rhs = h * h;
        let mut u = vec![0.0f64; rows * n];
        let mut ghost_up = vec![0.0f64; n];
        let mut ghost_down = vec![0.0f64; n];

        for _ in 0..iters {
            if rank > 0 {
                ctx.send(rank - 1, TAG_UP, f64s_to_bytes(&u[..n])).await?;
            }
            if rank + 1 < p {
                ctx.send(rank + 1, TAG_DOWN, f64s_to_bytes(&u[(rows - 1) * n..])).await?;
            }
            if rank > 0 {
                ghost_up = bytes_to_f64s(&ctx.recv(RecvFilter::from_rank(rank - 1, TAG_DOWN)).await.payload);
            }
            if rank + 1 < p {
                ghost_down = bytes_to_f64s(&ctx.recv(RecvFilter::from_rank(rank + 1, TAG_UP)).await.payload);
            }
            let mut next = vec![0.0f64; rows * n];
            for i in 0..rows {
                for j in 0..n {
                    let up = if i == 0 { ghost_up[j] } else { u[(i - 1) * n + j] };
                    let down = if i + 1 == rows { ghost_down[j] } else { u[(i + 1) * n + j] };
                    let left = if j == 0 { 0.0 } else { u[i * n + j - 1] };
                    let right = if j + 1 == n { 0.0 } else { u[i * n + j + 1] };
                    next[i * n + j] = 0.25 * (up + down + left + right + rhs);
                }
            }
            u = next;
        }

        ctx.array_trace(ArrayValues::Float64(u.clone()), info).await?;
        if rank > 0 {
            ctx.send(0, TAG_GATHER, f64s_to_bytes(&u)).await?;
            return Ok(Vec::new());
        }
        ctx.var_trace("iters", iters as i64).await;
        let mut grid = u;
        for src in 1..p {
            let env = ctx.recv(RecvFilter::from_rank(src, TAG_GATHER)).await;
            grid.extend(bytes_to_f64s(&env.payload));
        }
        Ok(f64s_to_bytes(&grid))
    })
}
