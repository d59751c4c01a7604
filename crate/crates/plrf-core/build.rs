fn main() {
    // LAPACK routines come from the system OpenBLAS (which bundles LAPACK);
    // ndarray-linalg is used backend-less, so the link line is supplied here and
    // propagates to every crate in the workspace that depends on plrf-core.
    println!("cargo:rustc-link-lib=dylib=openblas");
}
