//! Every rank but 0 sends its rank as text; rank 0 takes one message per
//! sender from any source and outputs the payloads in arrival order.

use crate::ids::RecvFilter;
use crate::runtime::{Ctx, ProcessFuture};

pub(super) fn main(ctx: Ctx) -> ProcessFuture {
    Box::pin(async move {
        if ctx.rank() == 0 {
            let mut out = Vec::new();
            for _ in 1..ctx.world_size() {
                let env = ctx.recv(RecvFilter::any_source(0)).await;
                out.extend_from_slice(&env.payload);
            }
            Ok(out)
        } else {
            ctx.send(0, 0, ctx.rank().to_string()).await?;
            Ok(Vec::new())
        }
    })
}
