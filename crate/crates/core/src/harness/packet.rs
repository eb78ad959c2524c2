//! One packet: channel, symbol and noise draws, and the per-symbol loop that
//! drives a receiver over them.

use std::collections::hash_map::DefaultHasher;
use std::hash::Hasher;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::fading::{clarke_generate, DEFAULT_SCATTERERS};
use crate::linalg::{db, CVector};
use crate::metrics::MetricSeries;
use crate::receivers::{detect_dbpsk, Detection, Receiver};
use crate::signal::{
    cooperative_received_vector, cooperative_scene, dbpsk_encode, isi_vector, make_spreading_codes,
    received_vector, single_hop_scene, ChannelMatrix, CooperativeConfig, ReceivedWindow, Scene, Symbol,
    SystemConfig,
};

/// Everything every algorithm sees for one packet.
#[derive(Debug, Clone)]
pub struct Packet {
    pub index: usize,
    pub received: Vec<CVector>,
    /// User-1 transmitted DBPSK symbols `b[i]`.
    pub symbols: Vec<Symbol>,
    /// User-1 information symbols `a[i] = b[i]·b[i−1]`.
    pub data: Vec<Symbol>,
    pub scenes: Vec<Scene>,
    /// User-1 spreading code padded to the window length; the only prior
    /// knowledge receivers start from.
    pub code: CVector,
}

/// Independent stream for packet `index` under `seed`.
pub fn packet_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn fading_track(rng: &mut ChaCha8Rng, fd_ts: f64, len: usize) -> Result<Vec<Complex64>> {
    Ok(clarke_generate(fd_ts, len, DEFAULT_SCATTERERS, rng.random())?.gains)
}

/// Draws packet `index`. Codes, fading tracks, symbols and noise all come
/// from the packet's own stream, so packets are independent of each other
/// and of the order in which they are generated.
pub fn generate_packet(
    system: &SystemConfig,
    cooperative: Option<&CooperativeConfig>,
    fd_ts: f64,
    seed: u64,
    index: usize,
) -> Result<Packet> {
    system.validate()?;
    let mut rng = packet_rng(seed, index);
    let n = system.n_symbols;
    let users = system.users;
    let codes = make_spreading_codes(users, system.chips, rng.random())?;

    // slot 0 of every per-user track is the symbol before the packet
    let reference = Symbol::random(&mut rng);
    let data: Vec<Symbol> = (0..n).map(|_| Symbol::random(&mut rng)).collect();
    let mut user_symbols: Vec<Vec<Symbol>> = Vec::with_capacity(users);
    let mut own = vec![reference];
    own.extend(dbpsk_encode(&data, reference));
    user_symbols.push(own);
    for _ in 1..users {
        user_symbols.push((0..=n).map(|_| Symbol::random(&mut rng)).collect());
    }

    let mut received = Vec::with_capacity(n);
    let mut scenes = Vec::with_capacity(n);
    let noise = system.noise_variance();
    match cooperative {
        None => {
            let tracks: Vec<Vec<Complex64>> = (0..users * system.paths)
                .map(|_| fading_track(&mut rng, fd_ts, n + 1))
                .collect::<Result<_>>()?;
            let channels = |t: usize| -> Result<Vec<ChannelMatrix>> {
                (0..users)
                    .map(|k| {
                        let gains: Vec<Complex64> =
                            (0..system.paths).map(|l| tracks[k * system.paths + l][t]).collect();
                        ChannelMatrix::from_fading(system.chips, &gains)
                    })
                    .collect()
            };
            let mut prev = channels(0)?;
            for t in 1..=n {
                let now = channels(t)?;
                let prev_symbols: Vec<Symbol> = user_symbols.iter().map(|s| s[t - 1]).collect();
                let symbols: Vec<Symbol> = user_symbols.iter().map(|s| s[t]).collect();
                let isi = isi_vector(system, &prev, &codes, &prev_symbols)?;
                received.push(received_vector(system, &now, &codes, &symbols, &isi, noise, &mut rng)?);
                scenes.push(single_hop_scene(system, &now, Some(&prev), &codes)?);
                prev = now;
            }
        }
        Some(coop) => {
            coop.validate(users)?;
            let relays = coop.n_relays;
            let hop1: Vec<Vec<Vec<Complex64>>> = (0..relays)
                .map(|_| (0..users).map(|_| fading_track(&mut rng, fd_ts, n)).collect::<Result<_>>())
                .collect::<Result<_>>()?;
            let hop2: Vec<Vec<Complex64>> =
                (0..relays).map(|_| fading_track(&mut rng, fd_ts, n)).collect::<Result<_>>()?;
            for i in 0..n {
                let h1: Vec<Vec<Complex64>> = hop1.iter().map(|r| r.iter().map(|u| u[i]).collect()).collect();
                let h2: Vec<Complex64> = hop2.iter().map(|r| r[i]).collect();
                let symbols: Vec<Symbol> = user_symbols.iter().map(|s| s[i + 1]).collect();
                received.push(cooperative_received_vector(
                    coop,
                    system,
                    &h1,
                    &h2,
                    &codes,
                    &symbols,
                    (noise, noise),
                    &mut rng,
                )?);
                scenes.push(cooperative_scene(coop, system, &h1, &h2, &codes, (noise, noise))?);
            }
        }
    }

    Ok(Packet {
        index,
        received,
        symbols: user_symbols[0][1..].to_vec(),
        data,
        scenes,
        code: codes[0].padded(system.m()),
    })
}

fn hash_vector(h: &mut DefaultHasher, v: &CVector) {
    for z in v.iter() {
        h.write_u64(z.re.to_bits());
        h.write_u64(z.im.to_bits());
    }
}

/// What one receiver produced over one packet.
#[derive(Debug, Clone)]
pub struct PacketTrace {
    pub series: MetricSeries,
    /// Branch weights in force after each symbol, for three-instant receivers.
    pub rho: Option<Vec<[f64; 3]>>,
    /// Digest of every received vector the receiver consumed.
    pub digest: u64,
}

/// Runs `rx` over the packet. The outputs and metrics of symbol `i` use the
/// filter from symbol `i − 1`; adaptation then uses the true symbols for the
/// first `training_len` symbols and decisions afterwards.
pub fn run_receiver(rx: &mut dyn Receiver, packet: &Packet, training_len: usize) -> Result<PacketTrace> {
    let n = packet.received.len();
    let r = &packet.received;
    let mut series = MetricSeries::with_capacity(n);
    let mut rho = rx.rho().map(|_| Vec::with_capacity(n));
    let mut hasher = DefaultHasher::new();
    let mut used: Vec<Symbol> = Vec::with_capacity(n);
    let mut x_prev: Option<Complex64> = None;
    let mut decided_prev: Option<Symbol> = None;

    for i in 0..n {
        let scene = &packet.scenes[i];
        rx.prepare(scene)?;
        let w = rx.weights();
        let x = w.dotc(&r[i]);
        hash_vector(&mut hasher, &r[i]);

        let (s, intf) = scene.powers(w);
        let sinr_over_snr = db(s / intf) - db(scene.snr_inst());

        let (a_hat, b_hat) = match rx.detection() {
            Detection::Differential => {
                let a = x_prev.map(|xp| detect_dbpsk(x, xp));
                let b = match (a, used.last()) {
                    (Some(a), Some(&bp)) => a * bp,
                    _ => Symbol::from_sign(x.re),
                };
                (a, b)
            }
            Detection::Coherent => {
                let b = Symbol::from_sign(x.re);
                (decided_prev.map(|bp| b * bp), b)
            }
        };
        decided_prev = Some(b_hat);
        series.push(sinr_over_snr, (s, intf), x.norm_sqr(), a_hat.map(|a| (a, packet.data[i])));

        used.push(if i < training_len { packet.symbols[i] } else { b_hat });
        if i >= rx.history() {
            let j1 = i.saturating_sub(1);
            let j2 = i.saturating_sub(2);
            let window = ReceivedWindow {
                r_now: r[i].clone(),
                r_prev1: r[j1].clone(),
                r_prev2: r[j2].clone(),
                b_now: used[i],
                b_prev1: used[j1],
                b_prev2: used[j2],
            };
            rx.adapt(&window)?;
        }
        if let (Some(trace), Some(now)) = (rho.as_mut(), rx.rho()) {
            trace.push(now);
        }
        x_prev = Some(x);
    }
    Ok(PacketTrace {
        series,
        rho,
        digest: hasher.finish(),
    })
}
