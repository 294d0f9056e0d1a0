//! Synthetic echo-cancellation scenarios: excitation signals, room impulse
//! responses and the noisy microphone signal.

mod delay;
mod microphone;
mod rir;
mod signals;
mod wav;

pub use delay::DelayLine;
pub use microphone::{convolve, simulate_microphone, Microphone};
pub use rir::{read_rir_csv, synth_rir, write_rir_csv, RirSpec};
pub use signals::{gen_speechlike, gen_white_noise, speechlike, SignalStream, SpeechLike};
pub use wav::{read_wav, write_wav};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
