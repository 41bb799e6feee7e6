fn main() {
    // Placeholder while the core library is under construction.
}
