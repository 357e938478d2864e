//! Sampling a clustered realization into MIMO channel matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{ChannelRealization, PulseShape};
use crate::error::{input_err, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Per-ray rank-one contributions `g a_RX(θ) a_TX^*(φ)`, with `g` the ray gain
/// times `sqrt(M_RX M_TX / ρ_pl)`, paired with the ray's absolute delay.
fn ray_outer_products(ch: &ChannelRealization) -> Vec<(f64, CMatrix)> {
    let band = &ch.band;
    let (rx, tx) = (band.ula_rx(), band.ula_tx());
    let scale = ((band.m_rx * band.m_tx) as f64 / ch.pathloss).sqrt();
    ch.clusters
        .iter()
        .zip(&ch.rays)
        .flat_map(|(c, rays)| {
            rays.iter().map(move |r| {
                let a_rx = rx.response(c.aoa + r.aoa_offset);
                let a_tx = tx.response(c.aod + r.aod_offset);
                let outer = (a_rx * a_tx.adjoint()) * (r.gain * scale);
                (c.tau + r.delay, outer)
            })
        })
        .collect()
}

/// Delay-domain taps `H[ℓ] = sqrt(M_RX M_TX/ρ_pl) Σ_c Σ_r α p(ℓT_s − τ_c − τ_r) a_RX a_TX^*`
/// for `ℓ = 0..L`, with `L` the band's tap count.
pub fn render_taps<P: PulseShape + ?Sized>(
    ch: &ChannelRealization,
    pulse: &P,
    ts: f64,
) -> Vec<CMatrix> {
    let band = &ch.band;
    let n_taps = band.n_taps;
    let span = n_taps as f64 * ts;
    let needed = ch.max_delay();
    if span < needed {
        log::warn!(
            "{n_taps} taps span {span:e} s but paths reach {needed:e} s; tail energy is truncated"
        );
    }
    let mut taps = vec![CMatrix::zeros(band.m_rx, band.m_tx); n_taps];
    for (delay, outer) in ray_outer_products(ch) {
        for (l, tap) in taps.iter_mut().enumerate() {
            let p = pulse.eval(l as f64 * ts - delay);
            if p != 0.0 {
                *tap += &outer * Complex64::new(p, 0.0);
            }
        }
    }
    taps
}

/// Subcarrier channels `H[k] = Σ_ℓ H[ℓ] e^{−j2πkℓ/K}` for `k = 0..K`, via one
/// length-`K` FFT per antenna pair.
pub fn render_freq(taps: &[CMatrix], n_subcarriers: usize) -> Result<Vec<CMatrix>> {
    let Some(first) = taps.first() else {
        return input_err("no taps to transform");
    };
    if n_subcarriers < taps.len() {
        return input_err(format!(
            "{n_subcarriers} subcarriers cannot hold {} taps",
            taps.len()
        ));
    }
    let (rows, cols) = first.shape();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_subcarriers);
    let mut out = vec![CMatrix::zeros(rows, cols); n_subcarriers];
    let mut buf = vec![Complex64::new(0.0, 0.0); n_subcarriers];
    for j in 0..cols {
        for i in 0..rows {
            buf.fill(Complex64::new(0.0, 0.0));
            for (b, tap) in buf.iter_mut().zip(taps) {
                *b = tap[(i, j)];
            }
            fft.process(&mut buf);
            for (h, v) in out.iter_mut().zip(&buf) {
                h[(i, j)] = *v;
            }
        }
    }
    Ok(out)
}

/// Narrowband channel `sqrt(M_RX M_TX/ρ_pl) Σ_c Σ_r α p(−τ_c − τ_r) a_RX a_TX^*`.
pub fn render_narrowband_sub6<P: PulseShape + ?Sized>(
    ch: &ChannelRealization,
    pulse: &P,
) -> CMatrix {
    let band = &ch.band;
    let mut h = CMatrix::zeros(band.m_rx, band.m_tx);
    for (delay, outer) in ray_outer_products(ch) {
        h += outer * Complex64::new(pulse.eval(-delay), 0.0);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{BandSpec, ClusterParams, RaisedCosine, Ray};

    fn single_ray(band: BandSpec, tau: f64, gain: Complex64) -> ChannelRealization {
        ChannelRealization::new(
            band,
            vec![ClusterParams { tau, aoa: 0.2, aod: -0.4 }],
            vec![vec![Ray { gain, delay: 0.0, aoa_offset: 0.0, aod_offset: 0.0 }]],
            4.0,
        )
        .unwrap()
    }

    #[test]
    fn on_sample_path_lands_in_one_tap() {
        let mut band = BandSpec::mmwave_default();
        band.m_rx = 4;
        band.m_tx = 8;
        let ts = band.sampling_interval();
        let alpha = Complex64::new(0.3, -0.7);
        let ch = single_ray(band.clone(), 0.0, alpha);
        let taps = render_taps(&ch, &RaisedCosine::new(ts, 1.0), ts);
        assert_eq!(taps.len(), 63);
        let expected = band.ula_rx().response(0.2) * band.ula_tx().response(-0.4).adjoint()
            * (alpha * (32.0f64 / 4.0).sqrt());
        assert!((&taps[0] - expected).norm() < 1e-13);
        for t in &taps[1..] {
            assert!(t.norm() < 1e-13);
        }
    }

    #[test]
    fn delay_zero_channel_is_frequency_flat() {
        let mut band = BandSpec::mmwave_default();
        band.m_rx = 2;
        band.m_tx = 2;
        let ts = band.sampling_interval();
        let ch = single_ray(band, 0.0, Complex64::new(1.0, 0.0));
        let taps = render_taps(&ch, &RaisedCosine::new(ts, 1.0), ts);
        let freq = render_freq(&taps, 256).unwrap();
        assert_eq!(freq.len(), 256);
        for h in &freq {
            assert!((h - &taps[0]).norm() < 1e-12);
        }
    }

    #[test]
    fn render_freq_rejects_short_transform() {
        let taps = vec![CMatrix::zeros(2, 2); 8];
        assert!(render_freq(&taps, 4).is_err());
        assert!(render_freq(&[], 4).is_err());
    }

    #[test]
    fn narrowband_zero_delay_single_ray() {
        let band = BandSpec::sub6_default();
        let alpha = Complex64::new(-0.5, 0.25);
        let ch = single_ray(band.clone(), 0.0, alpha);
        let h = render_narrowband_sub6(&ch, &RaisedCosine::new(band.sampling_interval(), 1.0));
        let expected = band.ula_rx().response(0.2) * band.ula_tx().response(-0.4).adjoint()
            * (alpha * (16.0f64 / 4.0).sqrt());
        assert_eq!(h.shape(), (4, 4));
        assert!((h - expected).norm() < 1e-14);
    }
}
