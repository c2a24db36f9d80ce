//! The plain-text mesh format: build a structured mesh, serialize it, read
//! it back, and show the invariants the reader enforces.
//!
//! Run with: cargo run --example mesh_io

use porocontact::mesh::{build_rect_mesh, read_mesh, write_mesh, BoundaryTag, Rect, SideTags};

fn main() -> Result<(), porocontact::Error> {
    let mesh = build_rect_mesh(
        2,
        1,
        Rect::UNIT,
        SideTags {
            left: BoundaryTag::Gamma1,
            right: BoundaryTag::Gamma3,
            bottom: BoundaryTag::Gamma2,
            top: BoundaryTag::Gamma2,
        },
    )?;
    let text = write_mesh(&mesh);
    println!("--- poromesh file ---\n{text}---------------------\n");

    let back = read_mesh(&text)?;
    assert_eq!(write_mesh(&back.mesh), text);
    println!(
        "round trip ok: {} vertices, {} triangles, {} edges ({} on the boundary)",
        back.mesh.n_vertices(),
        back.mesh.n_triangles(),
        back.mesh.n_edges(),
        back.mesh.boundary_edges.len()
    );

    // A clockwise triangle is repaired and reported.
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let first_tri = lines
        .iter()
        .position(|l| l.starts_with("triangles"))
        .unwrap()
        + 1;
    lines[first_tri] = {
        let mut ix: Vec<&str> = lines[first_tri].split_whitespace().collect();
        ix.swap(1, 2);
        ix.join(" ")
    };
    let repaired = read_mesh(&lines.join("\n"))?;
    for w in &repaired.warnings {
        println!("reader warning: {w}");
    }

    // A boundary edge without a tag is rejected.
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    lines.pop();
    let broken = lines.join("\n").replace("boundary 6", "boundary 5");
    match read_mesh(&broken) {
        Err(e) => println!("reader rejects incomplete tagging: {e}"),
        Ok(_) => println!("unexpected acceptance"),
    }
    Ok(())
}
