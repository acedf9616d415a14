fn main() {
    // BLAS/LAPACK come from the system OpenBLAS build (libblas/liblapack
    // alternatives also point at it on Debian-family images).
    println!("cargo:rustc-link-search=native=/usr/lib/x86_64-linux-gnu/openblas-pthread");
    println!("cargo:rustc-link-search=native=/usr/lib/x86_64-linux-gnu");
    println!("cargo:rustc-link-lib=dylib=openblas");
}
