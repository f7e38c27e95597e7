mod common;

#[test]
fn zealots_fixed_and_beliefs_bounded_over_a_million_events() {
    let detail = common::check_zealots_and_bounds(1_000_000, 5).unwrap();
    println!("{detail}");
}
