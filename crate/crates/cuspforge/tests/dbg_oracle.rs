use cuspforge::analytic::contour::contour_table;
use cuspforge::analytic::hp::Ctx;
use cuspforge::analytic::units::UnitProduct;
use cuspforge::analytic::TruncationParams;
use cuspforge::dessin::Dessin;
use cuspforge::eisenstein::{fermat_cycle_ac, fermat_cycle_bb, CycleMode};
use cuspforge::homology::Side;
use cuspforge::lattice::FermatLabeling;

#[test]
#[ignore]
fn oracle_n3_tables() {
    let ctx = Ctx::new(128);
    let dessin = Dessin::from_fermat(3).unwrap();
    let params = TruncationParams {
        quad_steps: 512,
        ..TruncationParams::default()
    };
    println!("=== side plus: f+(j,k) = (y - zeta^j)/(x - eps zeta^k y), values x 9 ===");
    for j in 0..3u64 {
        for k in 0..3u64 {
            let p = UnitProduct::f_plus(3, j, k).unwrap();
            let tab = contour_table(&ctx, &dessin, &p, Side::Plus, &params).unwrap();
            let vals: Vec<String> = tab
                .iter()
                .map(|v| format!("{:+.4}{}", 9.0 * v.re, if v.im.abs() > 1e-6 { "(!)" } else { "" }))
                .collect();
            println!("f+({},{}): [{}] maxerr {:.1e}", j, k, vals.join(", "),
                tab.iter().map(|v| v.error).fold(0.0, f64::max));
        }
    }
    println!("=== calibrated ac-cycles (combinatorial labels), x 9 ===");
    for j in 0..3u64 {
        for k in 0..3u64 {
            let c = fermat_cycle_ac(&dessin, 3, j, k, CycleMode::Calibrated, FermatLabeling::Combinatorial).unwrap();
            let vals: Vec<String> = c.real_part.coeffs.iter()
                .map(|r| format!("{:+.4}", 9.0 * cuspforge::eisenstein::rat_to_f64_pub(r)))
                .collect();
            println!("cal({},{}): [{}]", j, k, vals.join(", "));
        }
    }
    println!("=== calibrated ac-cycles (geometric labels), x 9 ===");
    for j in 0..3u64 {
        for k in 0..3u64 {
            let c = fermat_cycle_ac(&dessin, 3, j, k, CycleMode::Calibrated, FermatLabeling::Geometric).unwrap();
            let vals: Vec<String> = c.real_part.coeffs.iter()
                .map(|r| format!("{:+.4}", 9.0 * cuspforge::eisenstein::rat_to_f64_pub(r)))
                .collect();
            println!("geo({},{}): [{}]", j, k, vals.join(", "));
        }
    }
    println!("=== side minus: f-(j,k) = (x - zeta^j)/(x - zeta^k), values x 18 ===");
    for (j, k) in [(0u64, 1u64), (0, 2), (1, 2)] {
        let p = UnitProduct::f_minus(3, j, k).unwrap();
        let tab = contour_table(&ctx, &dessin, &p, Side::Minus, &params).unwrap();
        let vals: Vec<String> = tab
            .iter()
            .map(|v| format!("{:+.4}{}", 18.0 * v.re, if v.im.abs() > 1e-6 { "(!)" } else { "" }))
            .collect();
        println!("f-({},{}): [{}] maxerr {:.1e}", j, k, vals.join(", "),
            tab.iter().map(|v| v.error).fold(0.0, f64::max));
    }
    println!("=== calibrated bb-cycles x 18 ===");
    for (j, k) in [(0u64, 1u64), (0, 2), (1, 2)] {
        let c = fermat_cycle_bb(&dessin, 3, j, k, CycleMode::Calibrated, FermatLabeling::Combinatorial).unwrap();
        let vals: Vec<String> = c.real_part.coeffs.iter()
            .map(|r| format!("{:+.4}", 18.0 * cuspforge::eisenstein::rat_to_f64_pub(r)))
            .collect();
        println!("cal({},{}): [{}]", j, k, vals.join(", "));
    }
}
