use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator behind every [`RngStream`].
pub type StreamRng = ChaCha8Rng;

/// Role of a derived stream; mixed into the stream id so that changing one
/// count (m, M, trials) never shifts the draws of another phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Phase {
    Data = 1,
    Replicate = 2,
    Bootstrap = 3,
    PseudoData = 4,
    Redraw = 5,
    Oracle = 6,
    BhepNull = 7,
    Trial = 8,
}

/// A keyed position in the random-number space.
///
/// `master_seed` keys a ChaCha8 generator and `stream_id` selects one of its
/// 2⁶⁴ independent streams, so identical pairs reproduce identical output
/// regardless of thread count or scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        RngStream {
            master_seed,
            stream_id,
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut seed = [0u8; 32];
        let mut state = self.master_seed;
        for chunk in seed.chunks_exact_mut(8) {
            state = state.wrapping_add(GOLDEN_GAMMA);
            chunk.copy_from_slice(&mix64(state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Child stream for the `index`-th task of `phase`.
    pub fn substream(&self, phase: Phase, index: u64) -> RngStream {
        RngStream {
            master_seed: self.master_seed,
            stream_id: derive_stream_id(&[self.stream_id, phase as u64, index]),
        }
    }
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a tuple of indices into a stream id.
pub fn derive_stream_id(parts: &[u64]) -> u64 {
    parts.iter().fold(GOLDEN_GAMMA, |h, &v| {
        mix64(h.wrapping_add(GOLDEN_GAMMA) ^ mix64(v.wrapping_add(GOLDEN_GAMMA)))
    })
}
