fn main() {
    // Dense symmetric/Hermitian eigensolves and level-3 BLAS go through the
    // system OpenBLAS (which bundles LAPACK on this distribution).
    println!("cargo:rustc-link-lib=dylib=openblas");
}
