use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// True cost data for one generation company. Quantities are in units of
/// 100 MVAr and costs in $ per unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GencoParams {
    pub id: u32,
    /// Operation cost, $/unit.
    pub c1: f64,
    /// Lost opportunity cost, $/unit².
    pub c2: f64,
    /// Base generation, units.
    pub bg: f64,
    /// Maximum incremental generation above base, units.
    pub q_max: f64,
}

/// Default incremental capacity per producer (50 MVAr).
pub const DEFAULT_Q_MAX: f64 = 0.5;

impl GencoParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.c1 > 0.0
            && self.c2 > 0.0
            && self.bg >= 0.0
            && self.q_max > 0.0
            && [self.c1, self.c2, self.bg, self.q_max].iter().all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::config(
                format!("genco {}", self.id),
                "need c1 > 0, c2 > 0, bg >= 0, q_max > 0",
            ))
        }
    }
}

/// Six producers of the IEEE 30-bus reactive market: cost coefficients and
/// base MVAr generation (converted to units of 100 MVAr).
pub fn ieee30_gencos() -> Vec<GencoParams> {
    const TABLE: [(f64, f64, f64); 6] = [
        (0.73, 0.30, 7.5),
        (0.68, 0.39, 3.0),
        (0.75, 0.43, 3.125),
        (0.60, 0.50, 2.435),
        (0.75, 0.90, 2.0),
        (0.73, 0.38, 2.235),
    ];
    TABLE
        .iter()
        .enumerate()
        .map(|(k, &(c1, c2, base_mvar))| GencoParams {
            id: k as u32 + 1,
            c1,
            c2,
            bg: base_mvar / 100.0,
            q_max: DEFAULT_Q_MAX,
        })
        .collect()
}

/// Read a GENCO table with header `id,c1,c2,bg,q_max`.
pub fn load_gencos_csv(path: &Path) -> Result<Vec<GencoParams>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_gencos_csv(file)
}

pub fn read_gencos_csv<R: std::io::Read>(reader: R) -> Result<Vec<GencoParams>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let gencos = rdr
        .deserialize::<GencoParams>()
        .collect::<std::result::Result<Vec<_>, _>>()?;
    validate_table(&gencos)?;
    Ok(gencos)
}

pub fn write_gencos_csv<W: std::io::Write>(gencos: &[GencoParams], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for g in gencos {
        w.serialize(g)?;
    }
    w.flush().map_err(|e| Error::io("genco table", e))?;
    Ok(())
}

pub fn validate_table(gencos: &[GencoParams]) -> Result<()> {
    if gencos.is_empty() {
        return Err(Error::config("gencos", "table is empty"));
    }
    for g in gencos {
        g.validate()?;
    }
    let mut ids: Vec<u32> = gencos.iter().map(|g| g.id).collect();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() != gencos.len() {
        return Err(Error::config("gencos", "duplicate genco id"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_table() {
        let g = ieee30_gencos();
        assert_eq!(g.len(), 6);
        assert_eq!((g[0].c1, g[0].c2), (0.73, 0.30));
        assert_eq!((g[4].c1, g[4].c2), (0.75, 0.9));
        assert!((g[3].bg - 0.02435).abs() < 1e-15);
        validate_table(&g).unwrap();
    }

    #[test]
    fn csv_round_trip() {
        let g = ieee30_gencos();
        let mut buf = Vec::new();
        write_gencos_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("id,c1,c2,bg,q_max\n"));
        assert_eq!(read_gencos_csv(&buf[..]).unwrap(), g);
    }

    #[test]
    fn bad_rows_rejected() {
        let text = "id,c1,c2,bg,q_max\n1,0.7,0.0,0.01,0.5\n";
        assert!(read_gencos_csv(text.as_bytes()).is_err());
        let text = "id,c1,c2,bg,q_max\n1,0.7,0.3,0.01,0.5\n1,0.7,0.3,0.01,0.5\n";
        assert!(read_gencos_csv(text.as_bytes()).is_err());
    }
}
