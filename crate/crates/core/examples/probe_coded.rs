use oamp_core::experiments::{run_coded_ber, CodedRunConfig};
use oamp_core::ldpc::{DegreeDistribution, LdpcCode};
use oamp_core::oamp::OampConfig;
use oamp_core::seeds::{stream_rng, TAG_CODE};

fn main() {
    let n_bits = 10_000;
    let snr_db = 1.7 + 1.5;
    for preset in ["table1-k10-b1", "regular-3-6"] {
        let t0 = std::time::Instant::now();
        let dist = DegreeDistribution::preset(preset).unwrap();
        let code = LdpcCode::build(&dist, n_bits, &mut stream_rng(1, TAG_CODE, 0)).unwrap();
        let cfg = CodedRunConfig {
            n_sym: n_bits / 2,
            m_obs: n_bits / 2,
            kappa: 10.0,
            snr_db,
            codewords: 4,
            seed: 7,
            oamp: OampConfig { max_iters: 150, ..Default::default() },
            resample_matrix: false,
        };
        let out = run_coded_ber(&code, &cfg).unwrap();
        println!(
            "{preset}: ber {:.3e} fer {:.2} bit_errors {} [{:?}]",
            out.ber, out.fer, out.bit_errors, t0.elapsed()
        );
        for (i, cw) in out.per_codeword.iter().enumerate() {
            println!("  cw {i}: errors {:5} iters {:3} converged {}", cw.bit_errors, cw.iterations, cw.converged);
        }
    }
}
