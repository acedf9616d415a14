use oamp_core::denoiser::Prior;
use oamp_core::rates::{self, LN_2};
use oamp_core::se;
use oamp_core::spectrum::{Spectrum, SystemDims};

fn main() {
    let cases = [
        (10.0, 500usize, 500usize, 1.0178, 1.55),
        (10.0, 500, 333, 1.0124, 2.85),
        (50.0, 500, 500, 1.0150, 3.15),
        (50.0, 500, 333, 0.9442, 5.03),
    ];
    for (kappa, n, m, rc, want) in cases {
        let dims = SystemDims::new(n, m).unwrap();
        let profile = Spectrum::geometric(dims, kappa, 1.0).unwrap();
        let t0 = std::time::Instant::now();
        match rates::capacity_threshold_db(&profile, &Prior::qpsk(), rc, -2.0, 9.0) {
            Ok(db) => println!(
                "kappa={kappa} n={n} m={m} R_C={rc}: threshold {db:.4} dB (paper {want}), err {:+.3} dB  [{:?}]",
                db - want, t0.elapsed()
            ),
            Err(e) => println!("kappa={kappa} n={n} m={m}: ERROR {e}"),
        }
        // check uniqueness at the paper's capacity point
        let spec = profile.with_snr(10f64.powf(want / 10.0)).unwrap();
        let fp = se::fixed_point(&spec, &Prior::qpsk()).unwrap();
        println!("   at {want} dB: rho*={:.6} v*={:.6} unique={} roots={}", fp.rho_star, fp.v_star, fp.unique, fp.all_roots.len());
        // dual route
        if fp.unique {
            let c1 = rates::capacity_area(&spec, &Prior::qpsk(), &fp).unwrap();
            let c2 = rates::capacity_rtransform(&spec, &Prior::qpsk()).unwrap();
            println!("   area {:.6} bits vs r-route {:.6} bits; drho {:.2e}", c1 / LN_2, c2.capacity_nats / LN_2, (fp.rho_star - c2.rho_star).abs());
        }
    }
}
