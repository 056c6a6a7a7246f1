//! Prefix "sum" under string concatenation, computed by distance doubling.
//!
//! In round `d` rank `i` sends its partial result to `i+d` and receives the
//! partial result of `i-d`. The receive uses `ANY_SOURCE` with one tag for
//! all rounds, so a fast sender's later-round message can be taken in an
//! earlier round. Concatenation is not commutative, so such a mismatch
//! shows up in the output: rank 3 normally ends with "0123".

use crate::ids::RecvFilter;
use crate::runtime::{Ctx, ProcessFuture};

pub(super) fn main(ctx: Ctx) -> ProcessFuture {
    Box::pin(async move {
        let (rank, n) = (ctx.rank(), ctx.world_size());
        let mut acc = vec![b'0' + rank as u8];
        let mut d = 1;
        while d < n {
            if rank + d < n {
                ctx.send(rank + d, 0, acc.clone()).await?;
            }
            if rank >= d {
                let env = ctx.recv(RecvFilter::any_source(0)).await;
                let mut joined = env.payload;
                joined.extend_from_slice(&acc);
                acc = joined;
            }
            d *= 2;
        }
        Ok(acc)
    })
}
