//! A pure mechanics solve of the Signorini problem: push an elastic block
//! into a rigid wall and inspect the active set, the contact pressures and
//! the KKT residuals.
//!
//! Run with: cargo run --example contact_indentation

use nalgebra::DVector;
use porocontact::assembly::{assemble_elasticity, assemble_loads, vec_const, Loads, MaterialParams};
use porocontact::contact::{build_constraints, check_kkt, solve_contact_vi, ContactOptions};
use porocontact::fespace::make_dofmaps;
use porocontact::linalg::{eliminate_triplets, zero_constrained, SparseMatrix};
use porocontact::mesh::{build_rect_mesh, BoundaryTag, Rect, SideTags};

fn main() -> Result<(), porocontact::Error> {
    let mesh = build_rect_mesh(
        12,
        12,
        Rect::UNIT,
        SideTags {
            left: BoundaryTag::Gamma1,
            right: BoundaryTag::Gamma3,
            bottom: BoundaryTag::Gamma2,
            top: BoundaryTag::Gamma2,
        },
    )?;
    let dofmaps = make_dofmaps(&mesh);
    let params = MaterialParams::unit();

    // Gap grows linearly from 0 at the bottom of the wall, so only the
    // lower part comes into contact.
    let mut loads = Loads::zero();
    loads.f0 = vec_const([0.8, 0.0]);
    loads.gap = std::sync::Arc::new(|_, y| 0.3 * y);

    let a = assemble_elasticity(&mesh, &dofmaps, &params)?;
    let mut trips = Vec::new();
    for i in 0..a.nrows() {
        for (j, v) in a.row(i) {
            trips.push((i, j, v));
        }
    }
    let con = &dofmaps.displacement.constrained;
    let a_elim =
        SparseMatrix::from_triplets(a.nrows(), a.ncols(), &eliminate_triplets(&trips, con, con));

    let constraints = build_constraints(&mesh, &dofmaps, &loads)?;
    let lv = assemble_loads(&mesh, &dofmaps, &loads, &params)?;
    let mut rhs: DVector<f64> = lv.f;
    zero_constrained(&mut rhs, con);

    let sol = solve_contact_vi(&a_elim, &rhs, &constraints, con, &ContactOptions::default())?;
    println!(
        "{} contact vertices, {} active after {} active-set iterations\n",
        constraints.len(),
        sol.active.len(),
        sol.iterations
    );
    println!("{:>8} {:>10} {:>12} {:>12}", "vertex", "y", "u_n - gap", "multiplier");
    let nu = constraints.apply(&sol.u);
    for (i, row) in constraints.rows.iter().enumerate() {
        let y = mesh.vertices[row.vertex][1];
        let marker = if sol.active.contains(&i) { "  <- active" } else { "" };
        println!(
            "{:>8} {:>10.3} {:>12.3e} {:>12.3e}{marker}",
            row.vertex,
            y,
            nu[i] - row.gap,
            sol.multipliers[i]
        );
    }

    let kkt = check_kkt(&a_elim, &rhs, &constraints, &sol);
    println!(
        "\nKKT residuals (scaled): feasibility {:.2e}, sign {:.2e}, \
         complementarity {:.2e}, stationarity {:.2e}",
        kkt.feasibility, kkt.sign, kkt.complementarity, kkt.stationarity
    );
    Ok(())
}
