//! Marches the fixed-stress split and, at every step, recomputes the same
//! step with the fully implicit (monolithic) solver from the same previous
//! state. The converged split state matches the implicit limit to solver
//! precision, with and without active contact.
//!
//! Run with: cargo run --example oracle_check

use porocontact::assembly::{scalar_const, vec_const, Loads, MaterialParams};
use porocontact::fespace::make_dofmaps;
use porocontact::fixed_stress::{CouplingOptions, Simulator};
use porocontact::mesh::{build_rect_mesh, BoundaryTag, Rect, SideTags};
use porocontact::oracle::{compare_states, MonolithicSolver};

fn main() -> Result<(), porocontact::Error> {
    for (label, gap) in [("active contact", 0.01), ("no contact", 1e6)] {
        let mesh = build_rect_mesh(
            8,
            8,
            Rect::UNIT,
            SideTags {
                left: BoundaryTag::Gamma1,
                right: BoundaryTag::Gamma3,
                bottom: BoundaryTag::Gamma2,
                top: BoundaryTag::Gamma2,
            },
        )?;
        let dofmaps = make_dofmaps(&mesh);
        let params = MaterialParams::unit().with_default_stab();
        let mut loads = Loads::zero();
        loads.f0 = vec_const([1.0, 0.0]);
        loads.q_src = scalar_const(0.5);
        loads.gap = scalar_const(gap);

        let opts = CouplingOptions {
            tol: 1e-12,
            max_iters: 400,
            ..Default::default()
        };
        let sim = Simulator::new(mesh.clone(), params.clone(), loads.clone(), 0.05, opts)?;
        let mono = MonolithicSolver::new(mesh, &dofmaps, params, &loads, 0.05, Default::default())?;

        println!("--- {label} ---");
        println!(
            "{:>4} {:>8} {:>14} {:>14} {:>14}",
            "k", "iters", "p rel L2", "u rel H1", "z rel H(div)"
        );
        let mut state = sim.zero_state();
        for k in 1..=3 {
            let (next, report) = sim.solve_time_step(&state)?;
            let reference = mono.solve_step(&state)?;
            let d = compare_states(&sim.mesh, &next, &reference.state)?;
            println!(
                "{:>4} {:>8} {:>14.3e} {:>14.3e} {:>14.3e}",
                k,
                report.iterations(),
                d.p_l2.rel,
                d.u_h1.rel,
                d.z_hdiv.rel
            );
            state = next;
        }
        println!();
    }
    Ok(())
}
