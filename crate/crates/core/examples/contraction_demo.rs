//! One coupled time step on a contact-active configuration, printing the
//! per-iteration norms next to the theoretical contraction bound.
//!
//! Run with: cargo run --example contraction_demo

use porocontact::assembly::{scalar_const, vec_const, Loads, MaterialParams};
use porocontact::fixed_stress::{beta, contraction_bound, CouplingOptions, Simulator};
use porocontact::mesh::{build_rect_mesh, BoundaryTag, Rect, SideTags};

fn main() -> Result<(), porocontact::Error> {
    // Unit square, clamped left, rigid wall with a 0.01 gap on the right.
    let mesh = build_rect_mesh(
        16,
        16,
        Rect::UNIT,
        SideTags {
            left: BoundaryTag::Gamma1,
            right: BoundaryTag::Gamma3,
            bottom: BoundaryTag::Gamma2,
            top: BoundaryTag::Gamma2,
        },
    )?;

    let mut params = MaterialParams::unit();
    params.m_biot = 10.0; // strongly coupled: the bound is close to 1
    params.stab_l = params.default_stab();

    let mut loads = Loads::zero();
    loads.f0 = vec_const([1.0, 0.0]);
    loads.q_src = scalar_const(0.5);
    loads.gap = scalar_const(0.01);

    let sim = Simulator::new(mesh, params, loads, 0.05, CouplingOptions::default())?;
    let b = beta(&sim.params)?;
    let bound = contraction_bound(&sim.params)?;
    println!("beta = {b:.6}, contraction bound (1/(lambda beta))^2 = {bound:.6}\n");

    let (state, report) = sim.solve_time_step(&sim.zero_state())?;
    println!(
        "{:>3} {:>13} {:>13} {:>13} {:>13} {:>10} {:>8}",
        "n", "|d sigma|", "|a dp|", "|K^-1/2 dz|", "|eps(du)|", "ratio", "active"
    );
    for r in &report.records {
        println!(
            "{:>3} {:>13.4e} {:>13.4e} {:>13.4e} {:>13.4e} {:>10} {:>8}",
            r.n,
            r.norm_dsigma,
            r.norm_adp,
            r.norm_dz,
            r.norm_eps_du,
            r.ratio.map_or("-".to_string(), |v| format!("{v:.4}")),
            r.active_set_size,
        );
    }
    println!(
        "\nconverged in {} iterations; every observed ratio is below the bound {:.4}",
        report.iterations(),
        bound
    );
    println!(
        "final active set has {} of {} contact vertices in contact",
        report.records.last().unwrap().active_set_size,
        sim.contact_constraints().len()
    );
    println!(
        "max pressure {:.4e}, max |u| {:.4e}",
        state.p.amax(),
        state.u.amax()
    );
    Ok(())
}
