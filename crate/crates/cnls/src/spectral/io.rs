//! Line-oriented snapshot files: a small header, then per-component
//! rows of `x re im` (fields) or `xi re im` (profiles).  Floats are
//! written in shortest round-trip scientific form, so read-back is
//! bit exact.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use super::{Field, Grid, Profile, ProfileComponent};
use crate::error::{Error, Result};
use crate::C64;

const FIELD_MAGIC: &str = "cnls-field v1";
const PROFILE_MAGIC: &str = "cnls-profile v1";

pub fn write_field_snapshot(field: &Field, path: &Path) -> Result<()> {
    field.check_shape()?;
    let grid = &field.grid;
    let mut text = String::new();
    let _ = writeln!(text, "{FIELD_MAGIC}");
    let _ = writeln!(text, "t {:e}", field.time);
    let _ = writeln!(text, "L {:e}", grid.half_length());
    let _ = writeln!(text, "n {}", grid.n_points());
    let _ = writeln!(text, "N {}", field.n_components());
    for (j, comp) in field.values.iter().enumerate() {
        let _ = writeln!(text, "component {}", j + 1);
        for (k, z) in comp.iter().enumerate() {
            let _ = writeln!(text, "{:e} {:e} {:e}", grid.x()[k], z.re, z.im);
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_field_snapshot(path: &Path) -> Result<Field> {
    let mut lines = open_lines(path)?;
    let bad = |reason: &str| Error::MalformedFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    expect_line(&mut lines, FIELD_MAGIC).map_err(|r| bad(&r))?;
    let time: f64 = parse_keyed(&mut lines, "t").map_err(|r| bad(&r))?;
    let half_length: f64 = parse_keyed(&mut lines, "L").map_err(|r| bad(&r))?;
    let n: usize = parse_keyed(&mut lines, "n").map_err(|r| bad(&r))?;
    let n_components: usize = parse_keyed(&mut lines, "N").map_err(|r| bad(&r))?;
    let grid = Grid::new(half_length, n)?;
    let mut values = Vec::with_capacity(n_components);
    for j in 0..n_components {
        expect_line(&mut lines, &format!("component {}", j + 1)).map_err(|r| bad(&r))?;
        values.push(read_rows(&mut lines, n).map_err(|r| bad(&r))?);
    }
    let field = Field {
        time,
        grid,
        values,
    };
    if !field.is_finite() {
        return Err(bad("non-finite values"));
    }
    Ok(field)
}

pub fn write_profile_snapshot(profile: &Profile, path: &Path) -> Result<()> {
    let grid = &profile.grid;
    let mut text = String::new();
    let _ = writeln!(text, "{PROFILE_MAGIC}");
    let _ = writeln!(text, "t {:e}", profile.time);
    let _ = writeln!(text, "L {:e}", grid.half_length());
    let _ = writeln!(text, "n {}", grid.n_points());
    let _ = writeln!(text, "N {}", profile.n_components());
    let masses: Vec<String> = profile
        .components
        .iter()
        .map(|c| format!("{:e}", c.mass))
        .collect();
    let _ = writeln!(text, "masses {}", masses.join(" "));
    for (j, comp) in profile.components.iter().enumerate() {
        let _ = writeln!(text, "component {}", j + 1);
        for (xi, z) in comp.xi.iter().zip(&comp.values) {
            let _ = writeln!(text, "{:e} {:e} {:e}", xi, z.re, z.im);
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_profile_snapshot(path: &Path) -> Result<Profile> {
    let mut lines = open_lines(path)?;
    let bad = |reason: &str| Error::MalformedFile {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    expect_line(&mut lines, PROFILE_MAGIC).map_err(|r| bad(&r))?;
    let time: f64 = parse_keyed(&mut lines, "t").map_err(|r| bad(&r))?;
    let half_length: f64 = parse_keyed(&mut lines, "L").map_err(|r| bad(&r))?;
    let n: usize = parse_keyed(&mut lines, "n").map_err(|r| bad(&r))?;
    let n_components: usize = parse_keyed(&mut lines, "N").map_err(|r| bad(&r))?;
    let masses_line = next_line(&mut lines).map_err(|r| bad(&r))?;
    let mut parts = masses_line.split_whitespace();
    if parts.next() != Some("masses") {
        return Err(bad("expected masses line"));
    }
    let masses: Vec<f64> = parts
        .map(|s| s.parse::<f64>().map_err(|e| e.to_string()))
        .collect::<std::result::Result<_, _>>()
        .map_err(|r| bad(&r))?;
    if masses.len() != n_components {
        return Err(bad("masses count does not match N"));
    }
    let grid = Grid::new(half_length, n)?;
    let mut components = Vec::with_capacity(n_components);
    for j in 0..n_components {
        expect_line(&mut lines, &format!("component {}", j + 1)).map_err(|r| bad(&r))?;
        let mut xi = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            let line = next_line(&mut lines).map_err(|r| bad(&r))?;
            let cols = parse_three(&line).map_err(|r| bad(&r))?;
            xi.push(cols[0]);
            values.push(C64::new(cols[1], cols[2]));
        }
        components.push(ProfileComponent {
            mass: masses[j],
            xi,
            values,
        });
    }
    Ok(Profile {
        time,
        grid: Arc::clone(&grid),
        components,
    })
}

type Lines = std::io::Lines<BufReader<std::fs::File>>;

fn open_lines(path: &Path) -> Result<Lines> {
    Ok(BufReader::new(std::fs::File::open(path)?).lines())
}

fn read_rows(lines: &mut Lines, count: usize) -> std::result::Result<Vec<C64>, String> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let line = next_line(lines)?;
        let cols = parse_three(&line)?;
        out.push(C64::new(cols[1], cols[2]));
    }
    Ok(out)
}

fn next_line(lines: &mut Lines) -> std::result::Result<String, String> {
    match lines.next() {
        Some(Ok(line)) => Ok(line),
        Some(Err(e)) => Err(e.to_string()),
        None => Err("unexpected end of file".into()),
    }
}

fn expect_line(lines: &mut Lines, expected: &str) -> std::result::Result<(), String> {
    let line = next_line(lines)?;
    if line.trim() == expected {
        Ok(())
    } else {
        Err(format!("expected {expected:?}, got {line:?}"))
    }
}

fn parse_keyed<T: std::str::FromStr>(
    lines: &mut Lines,
    key: &str,
) -> std::result::Result<T, String> {
    let line = next_line(lines)?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next()) {
        (Some(k), Some(v)) if k == key => v
            .parse::<T>()
            .map_err(|_| format!("cannot parse {key} value {v:?}")),
        _ => Err(format!("expected `{key} <value>`, got {line:?}")),
    }
}

fn parse_three(line: &str) -> std::result::Result<[f64; 3], String> {
    let mut out = [0.0; 3];
    let mut parts = line.split_whitespace();
    for slot in &mut out {
        let token = parts.next().ok_or_else(|| format!("short row {line:?}"))?;
        *slot = token
            .parse::<f64>()
            .map_err(|_| format!("bad number {token:?}"))?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::MassVector;
    use crate::spectral::compute_profile;

    #[test]
    fn field_snapshot_round_trip_is_exact() {
        let grid = Grid::new(12.5, 64).unwrap();
        let values: Vec<Vec<C64>> = (0..2)
            .map(|j| {
                grid.x()
                    .iter()
                    .map(|x| C64::new((x * 0.3 + j as f64).sin(), (x * 0.7).cos() / 3.0))
                    .collect()
            })
            .collect();
        let field = Field {
            time: 2.25,
            grid,
            values,
        };
        let dir = std::env::temp_dir().join("cnls-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.dat");
        write_field_snapshot(&field, &path).unwrap();
        let back = read_field_snapshot(&path).unwrap();
        assert_eq!(back.time, field.time);
        assert_eq!(back.values, field.values);
        assert_eq!(*back.grid, *field.grid);
    }

    #[test]
    fn profile_snapshot_round_trip_is_exact() {
        let grid = Grid::new(20.0, 128).unwrap();
        let values = vec![grid
            .x()
            .iter()
            .map(|x| C64::new((-x * x / 2.0).exp(), 0.1 * x))
            .collect()];
        let field = Field {
            time: 3.0,
            grid,
            values,
        };
        let masses = MassVector::new(vec![2.0]).unwrap();
        let profile = compute_profile(&field, &masses).unwrap();
        let dir = std::env::temp_dir().join("cnls-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("profile.dat");
        write_profile_snapshot(&profile, &path).unwrap();
        let back = read_profile_snapshot(&path).unwrap();
        assert_eq!(back.time, profile.time);
        assert_eq!(back.components[0].mass, 2.0);
        assert_eq!(back.components[0].xi, profile.components[0].xi);
        assert_eq!(back.components[0].values, profile.components[0].values);
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = std::env::temp_dir().join("cnls-io-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.dat");
        std::fs::write(&path, "not a snapshot\n").unwrap();
        assert!(read_field_snapshot(&path).is_err());
        std::fs::write(&path, "cnls-field v1\nt 0e0\nL 1e1\nn 64\nN 1\ncomponent 1\n1 2\n").unwrap();
        assert!(read_field_snapshot(&path).is_err());
    }
}
