use oamp_core::denoiser::Prior;
use oamp_core::ldpc::{self, CurveConfig, DegreeDistribution, LdpcCode};
use oamp_core::seeds::{stream_rng, TAG_CODE};
use oamp_core::spectrum::{Spectrum, SystemDims};

fn main() {
    let n_bits = 10_000;
    let dims = SystemDims::new(n_bits / 2, n_bits / 2).unwrap();
    let profile = Spectrum::geometric(dims, 10.0, 1.0).unwrap();
    let prior = Prior::qpsk();
    let t0 = std::time::Instant::now();
    let dist = DegreeDistribution::preset("table1-k10-b1").unwrap();
    let code = LdpcCode::build(&dist, n_bits, &mut stream_rng(1, TAG_CODE, 0)).unwrap();
    println!("code built: rate {:.4}, 4-cycles {}, edges {} [{:?}]", code.rate(), code.four_cycle_count(), code.edge_count(), t0.elapsed());
    let t1 = std::time::Instant::now();
    // grid sized for the top of the search bracket
    let hi_spec = profile.with_snr(10f64.powf(0.25)).unwrap();
    let grid = ldpc::default_rho_grid(&hi_spec, 1e-4, 40).unwrap();
    println!("grid: {:.4} .. {:.4}", grid[0], grid[grid.len()-1]);
    let cfg = CurveConfig { trials: 100, max_bp_iters: 200, all_zero_shortcut: true, seed: 2, refine_rounds: 2 };
    let curve = ldpc::trace_decoder_curve(&code, &prior, &grid, &cfg).unwrap();
    println!("curve traced in {:?}", t1.elapsed());
    for p in curve.points.iter().step_by(4) {
        println!("  rho {:.4}: phi_c {:.5} +- {:.5}", p.rho, p.phi_c, p.stderr);
    }
    for db in [1.0f64, 1.5, 1.7, 1.9, 2.2] {
        let spec = profile.with_snr(10f64.powf(db / 10.0)).unwrap();
        match ldpc::check_matching(&curve, &spec, &prior, 1e-4, 2.0) {
            Ok(rep) => println!("snr {db} dB: open={} r_oamp={:.4} bits, first violation {:?}", rep.open, rep.r_oamp_bits, rep.first_violation),
            Err(e) => println!("snr {db} dB: {e}"),
        }
    }
    let t2 = std::time::Instant::now();
    match ldpc::matching_threshold_db(&curve, &profile, &prior, 1e-4, 2.0, 0.8, 2.49) {
        Ok(db) => println!("threshold {:.3} dB (paper 1.7) [{:?}]", db, t2.elapsed()),
        Err(e) => println!("threshold error: {e}"),
    }
}
