use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for; part of the stream key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Purpose {
    Noise,
    InitialCondition,
    Custom(u32),
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Noise => 1,
            Purpose::InitialCondition => 2,
            Purpose::Custom(t) => 0x1000_0000 + t as u64,
        }
    }
}

/// Key of an independent, reproducible random stream.
///
/// The ChaCha key is the concatenation of the master seed, the sample index
/// and the purpose tag, so distinct keys give unrelated streams and the same
/// key always gives the same stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub master_seed: u64,
    pub sample: u64,
    pub purpose: Purpose,
}

impl RngStream {
    pub fn new(master_seed: u64, sample: u64, purpose: Purpose) -> Self {
        Self {
            master_seed,
            sample,
            purpose,
        }
    }

    pub fn noise(master_seed: u64, sample: u64) -> Self {
        Self::new(master_seed, sample, Purpose::Noise)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.master_seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.sample.to_le_bytes());
        key[16..24].copy_from_slice(&self.purpose.tag().to_le_bytes());
        key[24..].copy_from_slice(b"sburgers");
        ChaCha8Rng::from_seed(key)
    }

    /// Compact 64-bit identifier of this stream, for manifests.
    pub fn fingerprint(&self) -> u64 {
        use rand::RngCore;
        self.rng().next_u64()
    }
}
