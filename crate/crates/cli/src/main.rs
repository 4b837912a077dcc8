fn main() {
    println!("{}", rilt_core::scalar::probe());
}
