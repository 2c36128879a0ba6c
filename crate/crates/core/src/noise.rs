//! Additive white Gaussian noise on measured data.

use faer::Mat;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::forward::ScatterMatrix;

/// Adds circular complex Gaussian noise with mean power
/// `mean|S|² / 10^(snr_db/10)` per entry, split evenly between the real and
/// imaginary parts. `snr_db = +∞` returns the input unchanged.
pub fn add_noise(scatter: &ScatterMatrix, snr_db: f64, seed: u64) -> Result<ScatterMatrix> {
    if snr_db == f64::INFINITY {
        return Ok(scatter.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::InvalidConfig(format!("SNR {snr_db} dB is not usable")));
    }
    let signal = scatter.mean_power();
    if signal == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let noise_power = signal / 10f64.powf(snr_db / 10.0);
    let normal = Normal::new(0.0, (noise_power / 2.0).sqrt()).expect("finite positive deviation");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Mat::zeros(scatter.n_rx(), scatter.n_tx());
    // Column-major draw order keeps the noise a pure function of the seed.
    for p in 0..scatter.n_tx() {
        for q in 0..scatter.n_rx() {
            let n = Complex64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            values[(q, p)] = scatter.values[(q, p)] + n;
        }
    }
    Ok(ScatterMatrix { values })
}

/// Empirical SNR of `noisy` against the clean data, in dB.
pub fn measured_snr_db(clean: &ScatterMatrix, noisy: &ScatterMatrix) -> f64 {
    let noise = noisy.sub(clean).mean_power();
    10.0 * (clean.mean_power() / noise).log10()
}
