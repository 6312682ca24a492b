//! Diagnostic: print the density-evolution trajectory at a given spread and
//! SNR so stall/budget behavior near threshold can be inspected.
//!
//! Usage: de_probe <s> <snr_db> <scheme> [page_side] [alternations]

use isi2d::analysis::{de_equalizer_stage, de_ldpc_stage_resumed, j_function, DeOptions};
use isi2d::equalizer::Scheme;
use isi2d::grid::{snr_to_sigma, PsfKernel};
use isi2d::seed::derive_seed;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let s: f64 = args[1].parse().unwrap();
    let snr: f64 = args[2].parse().unwrap();
    let scheme = match args[3].as_str() {
        "exact" => Scheme::Exact,
        "approx1" => Scheme::Approx1,
        "approx2" => Scheme::Approx2,
        other => panic!("unknown scheme {other}"),
    };
    let page: usize = args.get(4).map_or(150, |v| v.parse().unwrap());
    let alts: usize = args.get(5).map_or(120, |v| v.parse().unwrap());

    let psf = PsfKernel::make_psf(s).unwrap();
    let options = DeOptions {
        page_side: page,
        repeats: 2,
        ..DeOptions::default()
    };
    let sigma = snr_to_sigma(snr, &psf, Some(0.5)).unwrap();
    let mut m = 0.0f64;
    let mut m_c = 0.0f64;
    for alt in 0..alts {
        let seed = derive_seed(7, &[alt as u64]);
        let m_eq = de_equalizer_stage(m, scheme, &psf, sigma, &options, seed).unwrap();
        let other = match scheme {
            Scheme::Approx1 => Some(Scheme::Approx2),
            Scheme::Approx2 => Some(Scheme::Approx1),
            Scheme::Exact => None,
        };
        let alt_eq = other
            .map(|o| de_equalizer_stage(m, o, &psf, sigma, &options, seed).unwrap())
            .unwrap_or(f64::NAN);
        let (m_dec, m_c_next) = de_ldpc_stage_resumed(m_eq, 3, 6, 20, m_c);
        m_c = m_c_next;
        println!(
            "alt {alt:3}  i_in {:6.4}  m_eq {m_eq:9.4}  other {alt_eq:9.4}  m_dec {m_dec:10.4}",
            j_function((2.0 * m).sqrt())
        );
        if m_dec > 100.0 {
            println!("converged");
            return;
        }
        m = m_dec;
    }
    println!("budget exhausted");
}
