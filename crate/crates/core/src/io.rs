//! Point-cloud CSV format: one point per row, `d` comma-separated numbers,
//! optional header or comment rows starting with `#`.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! cloud read back from its own CSV is bit-identical.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

pub fn read_cloud<R: Read>(reader: R) -> Result<PointCloud> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut points = Vec::new();
    let mut dim = None;
    for record in rdr.records() {
        let record =
            record.map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let coords = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| Error::Parse { line, message: format!("not a number: {field:?}") })
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(coords.len()),
            Some(d) if d != coords.len() => {
                return Err(Error::Parse { line, message: format!("expected {d} columns, found {}", coords.len()) })
            }
            _ => {}
        }
        let point = Point::new(coords).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        points.push(point);
    }
    if points.is_empty() {
        return Err(Error::Parse { line: 1, message: "no points found (empty input)".into() });
    }
    PointCloud::new(points)
}

pub fn read_cloud_file(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(read_cloud(file)?.with_label(label))
}

pub fn write_cloud<W: Write>(cloud: &PointCloud, mut writer: W) -> Result<()> {
    let header: Vec<String> = (0..cloud.dim()).map(|j| format!("x{j}")).collect();
    writeln!(writer, "# {}", header.join(","))?;
    for p in cloud {
        let row: Vec<String> = p.coords().iter().map(|x| format!("{x:?}")).collect();
        writeln!(writer, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn cloud_to_csv(cloud: &PointCloud) -> String {
    let mut buf = Vec::new();
    write_cloud(cloud, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_header_and_rows() {
        let cloud = read_cloud("# x,y\n0,0\n1.5, -2\n\n3e2,4\n".as_bytes()).unwrap();
        assert_eq!(cloud.len(), 3);
        assert_eq!(cloud.dim(), 2);
        assert_eq!(cloud[2].coords(), &[300.0, 4.0]);
    }

    #[test]
    fn reports_line_numbers() {
        let err = read_cloud("# h\n1,2\n3,x\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let err = read_cloud("1,2\n3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(read_cloud("".as_bytes()), Err(Error::Parse { .. })));
        assert!(matches!(read_cloud("# only a header\n".as_bytes()), Err(Error::Parse { .. })));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(rows in prop::collection::vec(prop::collection::vec(-1e300f64..1e300, 3), 1..20)) {
            let cloud = PointCloud::from_rows(rows).unwrap();
            let back = read_cloud(cloud_to_csv(&cloud).as_bytes()).unwrap();
            prop_assert_eq!(back, cloud);
        }
    }
}
