#![no_main]

use cutmix::mesh::{parse_mesh, write_mesh};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(tri) = parse_mesh(text) else { return };
    // Accepted meshes round-trip through the writer.
    let again = parse_mesh(&write_mesh(&tri)).expect("written mesh parses");
    assert_eq!(again.num_cells(), tri.num_cells());
    assert_eq!(again.num_edges(), tri.num_edges());
    assert!(tri.cell_area.iter().all(|a| *a > 0.0 && a.is_finite()));
});
