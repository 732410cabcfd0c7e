use std::ffi::{CStr, CString};
use std::ptr;

use curvedsurf_ffi::*;

fn c_path(p: &std::path::Path) -> CString {
    CString::new(p.to_str().unwrap()).unwrap()
}

fn last_error() -> String {
    let m = cs_last_error_message();
    assert!(!m.is_null());
    unsafe { CStr::from_ptr(m) }.to_string_lossy().into_owned()
}

fn info(mesh: *const CsMesh) -> CsMeshInfo {
    let mut info = CsMeshInfo::default();
    assert_eq!(unsafe { cs_mesh_info(mesh, &mut info) }, CsStatus::Ok);
    info
}

#[test]
fn sphere_write_read_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { cs_mesh_sphere(1.0, 1, 2, &mut mesh) }, CsStatus::Ok);
    let i = info(mesh);
    assert_eq!((i.order, i.num_vertices, i.num_elements, i.nodes_per_element), (2, 42, 80, 6));

    let mut area = 0.0;
    assert_eq!(unsafe { cs_mesh_area(mesh, 8, &mut area) }, CsStatus::Ok);
    // one refinement of the quadratic icosahedral sphere misses 4 pi by 1.8e-2
    let deficit = 4.0 * std::f64::consts::PI - area;
    assert!(deficit > 1.5e-2 && deficit < 2.0e-2, "{deficit}");

    for binary in [false, true] {
        let path = c_path(&dir.path().join(format!("sphere_{binary}.vtu")));
        assert_eq!(unsafe { cs_mesh_write_vtu(mesh, path.as_ptr(), binary) }, CsStatus::Ok);
        let mut back = ptr::null_mut();
        assert_eq!(unsafe { cs_mesh_read(path.as_ptr(), &mut back) }, CsStatus::Ok);
        assert_eq!(info(back), i);
        let (mut a, mut b) = ([0.0; 18], [0.0; 18]);
        for e in [0, 79] {
            assert_eq!(unsafe { cs_mesh_element_nodes(mesh, e, a.as_mut_ptr(), a.len()) }, CsStatus::Ok);
            assert_eq!(unsafe { cs_mesh_element_nodes(back, e, b.as_mut_ptr(), b.len()) }, CsStatus::Ok);
            assert_eq!(a, b);
            for p in a.chunks(3) {
                assert!(((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() - 1.0).abs() < 1e-14);
            }
        }
        unsafe { cs_mesh_free(back) };
    }
    unsafe { cs_mesh_free(mesh) };
}

#[test]
fn reads_msh_fixture() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/fixtures/sphere_patch_p2.msh");
    let path = CString::new(path).unwrap();
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { cs_mesh_read(path.as_ptr(), &mut mesh) }, CsStatus::Ok);
    let i = info(mesh);
    assert_eq!((i.order, i.num_elements, i.num_point_fields), (2, 2, 0));
    unsafe { cs_mesh_free(mesh) };
}

#[test]
fn errors_set_status_and_message() {
    let mut mesh = ptr::null_mut();
    assert_eq!(unsafe { cs_mesh_read(ptr::null(), &mut mesh) }, CsStatus::NullArgument);
    assert!(mesh.is_null());

    let missing = CString::new("/nonexistent/mesh.msh").unwrap();
    assert_eq!(unsafe { cs_mesh_read(missing.as_ptr(), &mut mesh) }, CsStatus::Io);
    assert!(last_error().starts_with("/nonexistent/mesh.msh: "));

    let unknown = CString::new("mesh.stl").unwrap();
    assert_eq!(unsafe { cs_mesh_read(unknown.as_ptr(), &mut mesh) }, CsStatus::InvalidArgument);
    assert!(last_error().contains("mesh.stl"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.msh");
    std::fs::write(&bad, "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n").unwrap();
    assert_eq!(unsafe { cs_mesh_read(c_path(&bad).as_ptr(), &mut mesh) }, CsStatus::Parse);
    assert!(last_error().contains("line 2"));

    let invalid = [0xffu8, 0x00];
    assert_eq!(unsafe { cs_mesh_read(invalid.as_ptr().cast(), &mut mesh) }, CsStatus::InvalidString);

    assert_eq!(unsafe { cs_mesh_sphere(-1.0, 0, 1, &mut mesh) }, CsStatus::InvalidArgument);
    assert_eq!(unsafe { cs_mesh_sphere(1.0, 0, 9, &mut mesh) }, CsStatus::InvalidArgument);
    assert!(mesh.is_null());

    assert_eq!(unsafe { cs_mesh_sphere(1.0, 0, 1, &mut mesh) }, CsStatus::Ok);
    let mut small = [0.0; 8];
    assert_eq!(unsafe { cs_mesh_element_nodes(mesh, 0, small.as_mut_ptr(), small.len()) }, CsStatus::InvalidArgument);
    assert_eq!(unsafe { cs_mesh_element_nodes(mesh, 20, small.as_mut_ptr(), small.len()) }, CsStatus::InvalidArgument);
    assert!(last_error().contains("element 20"));
    let mut info = CsMeshInfo::default();
    assert_eq!(unsafe { cs_mesh_info(ptr::null(), &mut info) }, CsStatus::NullArgument);
    assert_eq!(unsafe { cs_mesh_info(mesh, ptr::null_mut()) }, CsStatus::NullArgument);
    unsafe { cs_mesh_free(mesh) };
    unsafe { cs_mesh_free(ptr::null_mut()) };
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/curvedsurf.h")).unwrap();
    for name in [
        "typedef struct CsMesh CsMesh;",
        "CS_STATUS_OK = 0",
        "CS_STATUS_PANIC",
        "cs_last_error_message(void)",
        "CsStatus cs_mesh_read(const char *path, CsMesh **out);",
        "cs_mesh_element_nodes",
        "void cs_mesh_free(CsMesh *mesh);",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
