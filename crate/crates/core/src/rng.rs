//! Named, reproducible random sub-streams derived from one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent streams drawn from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Goals,
    PolicyInit,
    Actions,
    Minibatch,
    EvalGoals,
    Baseline,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Goals => 0x676f_616c,
            Stream::PolicyInit => 0x696e_6974,
            Stream::Actions => 0x6163_746e,
            Stream::Minibatch => 0x6d69_6e69,
            Stream::EvalGoals => 0x6576_616c,
            Stream::Baseline => 0x6261_7365,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for sub-stream `stream`, index `index` (e.g. the env or episode number).
pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ stream.tag()).wrapping_add(index))
}

pub fn stream_rng(master: u64, stream: Stream, index: u64) -> SimRng {
    SimRng::seed_from_u64(derive_seed(master, stream, index))
}
