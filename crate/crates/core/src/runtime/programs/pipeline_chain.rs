use crate::ids::RecvFilter;
use crate::runtime::{Ctx, ProcessFuture};

fn decode(payload: &[u8]) -> i64 {
    i64::from_le_bytes(payload.try_into().unwrap_or([0; 8]))
}

pub(super) fn main(ctx: Ctx) -> ProcessFuture {
    Box::pin(async move {
        let rank = ctx.rank();
        let last = ctx.world_size() - 1;
        let mut acc: i64 = ctx.input_or("value", 1)?;
        if rank > 0 {
            ctx.queue_inspect().await;
            let env = ctx.recv(RecvFilter::from_rank(rank - 1, 0)).await;
            acc = decode(&env.payload) + rank as i64;
            ctx.var_trace("acc", acc).await;
        }
        if rank < last {
            ctx.send(rank + 1, 0, acc.to_le_bytes().to_vec()).await?;
            Ok(Vec::new())
        } else {
            Ok(acc.to_string().into_bytes())
        }
    })
}
