fn main() {
    use specmc::matrix::SymMatrix;
    use specmc::rng::RngStream;
    // correctness check: LAPACK (whatever kernels got selected) vs Jacobi
    let mut rng = RngStream::new(5, 0);
    let a = SymMatrix::from_fn_symmetric(300, |_, _| rng.uniform_in(-1.0, 1.0));
    let w1 = specmc::eigen::eig_sym(&a).unwrap();
    let w2 = specmc::eigen::jacobi_eigvals(&a).unwrap();
    let md = w1.iter().zip(&w2).map(|(x, y)| (x - y).abs()).fold(0.0f64, f64::max);
    println!("coretype env now: {:?}", std::env::var("OPENBLAS_CORETYPE"));
    println!("lapack-vs-jacobi maxdiff at n=300: {md:.3e}");
    let mut rng = RngStream::new(6, 0);
    let big = SymMatrix::from_fn_symmetric(4096, |_, _| rng.uniform_in(-1.0, 1.0));
    let t0 = std::time::Instant::now();
    let w = specmc::eigen::eig_sym(&big).unwrap();
    println!("eig 4096: {:?} top={:.4}", t0.elapsed(), w[0]);
}
