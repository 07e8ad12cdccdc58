//! Writes the reference shared-Sbox tables to stdout.

use led_ti::ti::SboxDecomposition;

fn main() {
    print!("{}", SboxDecomposition::reference().to_text());
}
