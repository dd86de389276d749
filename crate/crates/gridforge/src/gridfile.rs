//! The JSON grid container: a tensor-product grid with node coordinates,
//! inverse-map Jacobian entries and generation provenance.
//!
//! Numeric payloads round-trip bit-identically (shortest-representation
//! decimal serialization, exact reparse).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::elliptic::ChiSpec;
use crate::elliptic_grid::EllipticGrid;
use crate::error::{GridError, Result};
use crate::flux::AnalyticField;
use crate::ode::ThetaFrame;
use crate::ortho::{FluxAlignedGrid, WeightMode};
use crate::quality::GridView;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    FluxAligned,
    Elliptic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Constants {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u1: Option<f64>,
    pub psi0: f64,
    pub psi1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Arrays {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub d1x: Vec<f64>,
    pub d1y: Vec<f64>,
    pub d2x: Vec<f64>,
    pub d2y: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub solver_tol: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub flux: AnalyticField,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<ChiSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightMode>,
    pub tolerances: Tolerances,
    pub theta_frame: [f64; 2],
}

/// On-disk grid document, arrays row-major with the second coordinate
/// fastest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridFile {
    pub schema_version: u32,
    pub kind: GridKind,
    pub n1: usize,
    pub n2: usize,
    pub coord1_nodes: Vec<f64>,
    pub coord2_nodes: Vec<f64>,
    pub constants: Constants,
    pub arrays: Arrays,
    pub provenance: Provenance,
}

impl GridFile {
    pub fn from_flux_aligned(
        grid: &FluxAlignedGrid,
        flux: AnalyticField,
        tolerances: Tolerances,
    ) -> Self {
        GridFile {
            schema_version: SCHEMA_VERSION,
            kind: GridKind::FluxAligned,
            n1: grid.n_zeta,
            n2: grid.n_eta,
            coord1_nodes: grid.zeta_nodes.clone(),
            coord2_nodes: grid.eta_nodes.clone(),
            constants: Constants {
                f0: Some(grid.f0),
                c0: None,
                zeta1: Some(grid.zeta1),
                u1: None,
                psi0: grid.psi0,
                psi1: grid.psi1,
            },
            arrays: Arrays {
                x: grid.x.clone(),
                y: grid.y.clone(),
                d1x: grid.zeta_x.clone(),
                d1y: grid.zeta_y.clone(),
                d2x: grid.eta_x.clone(),
                d2y: grid.eta_y.clone(),
                h: Some(grid.h.clone()),
            },
            provenance: Provenance {
                flux,
                chi: None,
                weight: Some(grid.weight),
                tolerances,
                theta_frame: [grid.frame.x0, grid.frame.y0],
            },
        }
    }

    pub fn from_elliptic(
        grid: &EllipticGrid,
        flux: AnalyticField,
        chi: ChiSpec,
        tolerances: Tolerances,
    ) -> Self {
        GridFile {
            schema_version: SCHEMA_VERSION,
            kind: GridKind::Elliptic,
            n1: grid.n_u,
            n2: grid.n_v,
            coord1_nodes: grid.u_nodes.clone(),
            coord2_nodes: grid.v_nodes.clone(),
            constants: Constants {
                f0: None,
                c0: Some(grid.c0),
                zeta1: None,
                u1: Some(grid.u1),
                psi0: grid.psi0,
                psi1: grid.psi1,
            },
            arrays: Arrays {
                x: grid.x.clone(),
                y: grid.y.clone(),
                d1x: grid.u_x.clone(),
                d1y: grid.u_y.clone(),
                d2x: grid.v_x.clone(),
                d2y: grid.v_y.clone(),
                h: None,
            },
            provenance: Provenance {
                flux,
                chi: Some(chi),
                weight: None,
                tolerances,
                theta_frame: [grid.frame.x0, grid.frame.y0],
            },
        }
    }

    /// Structural checks done on every load.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(GridError::Schema(format!(
                "unsupported schema_version {}",
                self.schema_version
            )));
        }
        let n = self.n1 * self.n2;
        if n == 0 {
            return Err(GridError::Schema("grid has no nodes".into()));
        }
        let lens = [
            ("x", self.arrays.x.len()),
            ("y", self.arrays.y.len()),
            ("d1x", self.arrays.d1x.len()),
            ("d1y", self.arrays.d1y.len()),
            ("d2x", self.arrays.d2x.len()),
            ("d2y", self.arrays.d2y.len()),
        ];
        for (name, len) in lens {
            if len != n {
                return Err(GridError::Schema(format!(
                    "array '{name}' has {len} entries, expected {n}"
                )));
            }
        }
        if let Some(h) = &self.arrays.h {
            if h.len() != n {
                return Err(GridError::Schema(format!(
                    "array 'h' has {} entries, expected {n}",
                    h.len()
                )));
            }
        }
        if self.coord1_nodes.len() != self.n1 || self.coord2_nodes.len() != self.n2 {
            return Err(GridError::Schema("coordinate node lists do not match n1/n2".into()));
        }
        match self.kind {
            GridKind::FluxAligned => {
                if self.constants.f0.is_none() || self.constants.zeta1.is_none() {
                    return Err(GridError::Schema(
                        "flux_aligned grid must carry f0 and zeta1".into(),
                    ));
                }
            }
            GridKind::Elliptic => {
                if self.constants.c0.is_none() || self.constants.u1.is_none() {
                    return Err(GridError::Schema("elliptic grid must carry c0 and u1".into()));
                }
            }
        }
        Ok(())
    }

    /// Uniform spacing of the first/second computational coordinate.
    pub fn spacings(&self) -> (f64, f64) {
        let extent1 = match self.kind {
            GridKind::FluxAligned => self.constants.zeta1.unwrap_or(1.0),
            GridKind::Elliptic => self.constants.u1.unwrap_or(1.0),
        };
        (extent1 / self.n1 as f64, std::f64::consts::TAU / self.n2 as f64)
    }

    pub fn view(&self) -> GridView<'_> {
        let (h1, h2) = self.spacings();
        GridView {
            n1: self.n1,
            n2: self.n2,
            h1,
            h2,
            x: &self.arrays.x,
            y: &self.arrays.y,
            d1x: &self.arrays.d1x,
            d1y: &self.arrays.d1y,
            d2x: &self.arrays.d2x,
            d2y: &self.arrays.d2y,
            psi0: self.constants.psi0,
            psi1: self.constants.psi1,
            row_lo: None,
            row_hi: None,
        }
    }

    pub fn theta_frame(&self) -> ThetaFrame {
        ThetaFrame::new(self.provenance.theta_frame[0], self.provenance.theta_frame[1])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        serde_json::to_writer_pretty(&mut w, self)?;
        use std::io::Write;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<GridFile> {
        let file = std::fs::File::open(path)?;
        let r = std::io::BufReader::new(file);
        let grid: GridFile = serde_json::from_reader(r)?;
        grid.validate()?;
        Ok(grid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ode::IntegratorConfig;
    use crate::ortho::{generate_orthogonal, FirstLine};

    fn sample_file() -> GridFile {
        let f = AnalyticField::annulus();
        let g = generate_orthogonal(
            &f,
            0.5,
            2.0,
            4,
            8,
            WeightMode::Unity,
            FirstLine::Inner,
            &IntegratorConfig::default(),
        )
        .unwrap();
        GridFile::from_flux_aligned(
            &g,
            f,
            Tolerances { rtol: 1e-11, atol: 1e-13, solver_tol: 1e-11 },
        )
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let gf = sample_file();
        let dir = std::env::temp_dir().join("gridforge_test_roundtrip");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("g.json");
        gf.save(&path).unwrap();
        let back = GridFile::load(&path).unwrap();
        assert_eq!(gf.arrays.x, back.arrays.x);
        assert_eq!(gf.arrays.d2y, back.arrays.d2y);
        assert_eq!(gf.constants.f0, back.constants.f0);
        // a second save must produce identical bytes
        let path2 = dir.join("g2.json");
        back.save(&path2).unwrap();
        let b1 = std::fs::read(&path).unwrap();
        let b2 = std::fs::read(&path2).unwrap();
        assert_eq!(b1, b2, "serialized documents must be byte-identical");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn corrupted_length_is_schema_error() {
        let mut gf = sample_file();
        gf.arrays.y.pop();
        assert!(matches!(gf.validate(), Err(GridError::Schema(_))));
        let mut gf2 = sample_file();
        gf2.constants.f0 = None;
        assert!(matches!(gf2.validate(), Err(GridError::Schema(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = GridFile::load(Path::new("/nonexistent/gridforge.json")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
