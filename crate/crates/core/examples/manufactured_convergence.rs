//! Spatial convergence study on a smooth manufactured solution: pressure in
//! L2, displacement in H1 and flux in H(div) all converge at first order, as
//! expected for the P1 / P0 / RT0 triple.
//!
//! Run with: cargo run --release --example manufactured_convergence

use porocontact::validate::{
    manufactured_convergence, paths_agreement, ManufacturedCase, SolvePath,
};

fn main() -> Result<(), porocontact::Error> {
    let case = ManufacturedCase::trig();

    // Sanity: the split and monolithic paths agree before anything is
    // compared to the exact solution.
    let agree = paths_agreement(&case, 8, 0.25, 0.5)?;
    println!("fixed-stress vs monolithic on h=1/8: max relative gap {agree:.2e}\n");

    let study = manufactured_convergence(&case, &[8, 16, 32], 0.25, 0.5, SolvePath::FixedStress)?;
    println!(
        "{:>8} {:>14} {:>14} {:>14}",
        "h", "p L2", "u H1", "z H(div)"
    );
    for r in &study.records {
        println!(
            "{:>8.4} {:>14.5e} {:>14.5e} {:>14.5e}",
            r.h, r.p_l2, r.u_h1, r.z_hdiv
        );
    }
    println!(
        "{:>8} {:>14.3} {:>14.3} {:>14.3}",
        "order", study.order_p.order, study.order_u.order, study.order_z.order
    );
    Ok(())
}
