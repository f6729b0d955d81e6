//! Counter-based random number streams.
//!
//! Every random quantity in the library is a pure function of
//! `(seed, stream_id, replicate, index)` through the splitmix64 finalizer,
//! so parallel generation is order- and thread-count-independent by
//! construction. There is no mutable generator state to share: a "stream"
//! is just a pair of keys.
//!
//! Layout:
//!
//! * `stream_key(seed, stream_id)` — one key per logical stream,
//! * `replicate_key(stream_key, j)` — one key per Monte Carlo replicate,
//! * `uniform(rep_key, i)` — the i-th innovation uniform of that replicate,
//! * `substream(rep_key, slot)` — a sequential [`rand_core::RngCore`] view
//!   for draws that consume a variable number of words (rejection samplers,
//!   gamma variates). Distinct slots never collide with the indexed
//!   uniforms, which live in a different key domain.

use rand_core::RngCore;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const REP_SALT: u64 = 0xd134_2543_de82_ef95;
const SUB_SALT: u64 = 0x2545_f491_4f6c_dd1d;
const DOMAIN: u64 = 0x6564_6765_6c61_6221;

/// splitmix64 output finalizer.
#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Key of a logical stream.
#[inline]
pub fn stream_key(seed: u64, stream_id: u64) -> u64 {
    mix(mix(seed ^ DOMAIN).wrapping_add(stream_id.wrapping_mul(GOLDEN)))
}

/// Key of replicate `j` within a stream.
#[inline]
pub fn replicate_key(stream_key: u64, replicate: u64) -> u64 {
    mix(stream_key ^ replicate.wrapping_add(1).wrapping_mul(REP_SALT))
}

/// Raw 64-bit word at `index` of a replicate; equivalent to the splitmix64
/// sequence seeded at the replicate key.
#[inline]
pub fn word(rep_key: u64, index: u64) -> u64 {
    mix(rep_key.wrapping_add(index.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Uniform in the open interval (0, 1), 53-bit resolution, never 0 or 1.
#[inline]
pub fn uniform(rep_key: u64, index: u64) -> f64 {
    ((word(rep_key, index) >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Sequential generator over an isolated slot of a replicate, for samplers
/// with data-dependent consumption.
#[derive(Clone, Debug)]
pub struct Substream {
    key: u64,
    counter: u64,
}

impl Substream {
    pub fn new(rep_key: u64, slot: u64) -> Self {
        Substream {
            key: mix(rep_key ^ slot.wrapping_add(1).wrapping_mul(SUB_SALT)),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
    }
}

impl RngCore for Substream {
    #[inline]
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    #[inline]
    fn next_u64(&mut self) -> u64 {
        let v = word(self.key, self.counter);
        self.counter += 1;
        v
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let v = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&v[..chunk.len()]);
        }
    }
}
