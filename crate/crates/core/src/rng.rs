// Copyright 2026 The DQNN Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License. You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! Seeded random streams.
//!
//! Every random draw in the crate comes from ChaCha8 seeded with the master
//! seed, with the ChaCha stream id selecting the purpose. Streams with
//! different purposes never overlap, so adding draws to one purpose does not
//! perturb another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tag mapped onto the ChaCha stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Stream {
    Observables,
    Data,
    Init,
    Shuffle,
    Folds,
    Noise,
    Test,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Observables => 1,
            Stream::Data => 2,
            Stream::Init => 3,
            Stream::Shuffle => 4,
            Stream::Folds => 5,
            Stream::Noise => 6,
            Stream::Test => 7,
        }
    }
}

/// Returns the generator for `(seed, purpose)`.
pub fn stream(seed: u64, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose.id());
    rng
}

/// Like [`stream`] but with an extra index, e.g. one generator per epoch.
pub fn substream(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(purpose.id());
    rng
}
