fn main() {
    println!("sivsim");
}
