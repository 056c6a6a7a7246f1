//! Built-in example programs.

mod array_demo;
mod distance_doubling;
mod pipeline_chain;
mod poisson;
mod senders;
mod token_ring;

use serde::Serialize;

use super::{Ctx, ProcessFuture, RunError};

#[derive(Clone, Copy)]
pub struct ProgramDescriptor {
    pub name: &'static str,
    pub summary: &'static str,
    pub world_sizes: &'static [usize],
    /// Recognised inputs with their defaults.
    pub inputs: &'static [(&'static str, &'static str)],
    pub body: fn(Ctx) -> ProcessFuture,
}

impl std::fmt::Debug for ProgramDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProgramDescriptor")
            .field("name", &self.name)
            .field("world_sizes", &self.world_sizes)
            .finish_non_exhaustive()
    }
}

/// Serializable description for listings.
#[derive(Clone, Debug, Serialize)]
pub struct ProgramInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub world_sizes: Vec<usize>,
    pub inputs: Vec<(&'static str, &'static str)>,
}

impl ProgramDescriptor {
    pub fn check_world_size(&self, world_size: usize) -> Result<(), RunError> {
        if self.world_sizes.contains(&world_size) {
            return Ok(());
        }
        Err(RunError::InvalidWorldSize {
            program: self.name.to_string(),
            world_size,
            allowed: format!("{:?}", self.world_sizes),
        })
    }

    pub fn info(&self) -> ProgramInfo {
        ProgramInfo {
            name: self.name,
            summary: self.summary,
            world_sizes: self.world_sizes.to_vec(),
            inputs: self.inputs.to_vec(),
        }
    }
}

const TWO_TO_EIGHT: &[usize] = &[2, 3, 4, 5, 6, 7, 8];

static PROGRAMS: &[ProgramDescriptor] = &[
    ProgramDescriptor {
        name: "two_senders",
        summary: "ranks 1 and 2 each send their rank to rank 0, which receives twice from any source",
        world_sizes: &[3],
        inputs: &[],
        body: senders::main,
    },
    ProgramDescriptor {
        name: "three_senders",
        summary: "ranks 1..3 each send their rank to rank 0, which receives three times from any source",
        world_sizes: &[4],
        inputs: &[],
        body: senders::main,
    },
    ProgramDescriptor {
        name: "pipeline_chain",
        summary: "a value travels rank by rank, every stage adds its rank",
        world_sizes: TWO_TO_EIGHT,
        inputs: &[("value", "1")],
        body: pipeline_chain::main,
    },
    ProgramDescriptor {
        name: "poisson",
        summary: "Jacobi iteration for the 2D Poisson equation on a row-block decomposed grid",
        world_sizes: &[2, 4],
        inputs: &[("n", "16"), ("iters", "50")],
        body: poisson::main,
    },
    ProgramDescriptor {
        name: "distance_doubling",
        summary: "prefix concatenation by distance doubling with wildcard receives (racy by design)",
        world_sizes: TWO_TO_EIGHT,
        inputs: &[],
        body: distance_doubling::main,
    },
    ProgramDescriptor {
        name: "token_ring",
        summary: "a token circles the ring once; broken=1 makes every rank wait first and deadlock",
        world_sizes: TWO_TO_EIGHT,
        inputs: &[("broken", "0")],
        body: token_ring::main,
    },
    ProgramDescriptor {
        name: "array_demo",
        summary: "every rank traces its block of a known distributed array",
        world_sizes: &[1, 2, 4],
        inputs: &[("shape", "8"), ("dist", "block"), ("type", "int")],
        body: array_demo::main,
    },
];

pub fn register_builtin_programs() -> Vec<ProgramDescriptor> {
    PROGRAMS.to_vec()
}

pub fn find_program(name: &str) -> Option<&'static ProgramDescriptor> {
    PROGRAMS.iter().find(|p| p.name == name)
}

pub(crate) fn f64s_to_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

/// Decodes a little-endian `f64` buffer such as the poisson output.
pub fn bytes_to_f64s(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect()
}
