//! Binary field files with a JSON sidecar, round-tripped bit for bit.

use hklab::solver::{read_field, write_field, TorusField, TorusGrid};

fn main() -> hklab::Result<()> {
    let dir = std::env::temp_dir().join("hklab-field-io");
    std::fs::create_dir_all(&dir)?;
    let grid = TorusGrid::new(2, 8)?;
    let u = TorusField::from_fn(grid, |x| (6.0 * x[0]).sin() * (2.0 * x[3]).cos())?;
    let path = dir.join("u.hkf");
    write_field(&path, &u)?;
    let back = read_field(&path)?;
    println!("wrote {} ({} bytes)", path.display(), std::fs::metadata(&path)?.len());
    println!("{}", std::fs::read_to_string(path.with_extension("json"))?);
    println!("bit-identical: {}", back.values().iter().zip(u.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
    Ok(())
}
