//! Diagnostic: AWGN reference BER around the 1e-4 crossing for a given
//! iteration budget.
//!
//! Usage: awgn_probe <iters> [trials]

use isi2d::ldpc::{ldpc_awgn_reference, LdpcCode};
use isi2d::seed::derive_seed;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let iters: usize = args[1].parse().unwrap();
    let trials: u64 = args.get(2).map_or(100, |v| v.parse().unwrap());
    let code = LdpcCode::build_regular(10000, 3, 6, 1).unwrap();
    for k in 0..8 {
        let snr = 1.0 + k as f64 * 0.125;
        let p = ldpc_awgn_reference(&code, snr, trials, iters, derive_seed(0xA3, &[k])).unwrap();
        println!("snr {snr:.3}  ber {:.3e}  errors {}", p.ber, p.bit_errors);
        if p.bit_errors == 0 {
            break;
        }
    }
}
