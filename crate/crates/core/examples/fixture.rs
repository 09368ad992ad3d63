fn main() {
    let m = siegelab_core::random_sp(2, 8, 42);
    println!("{}", m.to_text());
    let nu = siegelab_core::gsp_multiplier(&m, 2).unwrap();
    println!("multiplier: {:?}", nu.map(|x| x.to_string()));
}
