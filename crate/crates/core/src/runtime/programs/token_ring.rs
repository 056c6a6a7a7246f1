use crate::ids::RecvFilter;
use crate::runtime::{Ctx, ProcessFuture};

pub(super) fn main(ctx: Ctx) -> ProcessFuture {
    Box::pin(async move {
        let (rank, n) = (ctx.rank(), ctx.world_size());
        let broken = ctx.input_or("broken", 0u8)? != 0;
        let left = (rank + n - 1) % n;
        let right = (rank + 1) % n;
        if rank == 0 && !broken {
            ctx.send(right, 0, vec![1u8]).await?;
            let env = ctx.recv(RecvFilter::from_rank(left, 0)).await;
            let hops = env.payload.first().copied().unwrap_or(0);
            return Ok(hops.to_string().into_bytes());
        }
        // every rank waits for the token before passing it on
        let env = ctx.recv(RecvFilter::from_rank(left, 0)).await;
        let hops = env.payload.first().copied().unwrap_or(0).wrapping_add(1);
        ctx.send(right, 0, vec![hops]).await?;
        Ok(Vec::new())
    })
}
