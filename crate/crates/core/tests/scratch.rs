use rilt_core::scalar::{Backend, Scalar};

#[test]
fn dbg_roundtrip() {
    let b = Backend::float_default();
    let third = Scalar::parse("1/3", &b).unwrap();
    let shown = third.to_string();
    println!("digits shown: {} -> {}", shown.len(), shown);
    let back = Scalar::parse(&shown, &b).unwrap();
    println!("equal: {}", back == third);
    println!("diff: {:e}", back.sub(&third).abs().to_f64());
}
