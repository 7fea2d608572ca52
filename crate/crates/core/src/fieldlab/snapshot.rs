use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::fields::{Jet, WaveField};
use super::grid::Grid;
use super::{FieldError, COVERAGE_WIDTHS, MAX_TENSOR_DIMS};
use crate::model::Variant;
use crate::parallel::ordered_map;
use crate::scalar::{lit, Real};

/// Fields and analytic derivatives on every grid point, row-major with the
/// last axis fastest. Derivative arrays are indexed `[axis][point]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot<T> {
    pub t: T,
    pub coords: Vec<Vec<T>>,
    pub density: Vec<T>,
    pub phase: Vec<T>,
    pub dr: Vec<Vec<T>>,
    pub d2r: Vec<Vec<T>>,
    pub ds: Vec<Vec<T>>,
    pub d2s: Vec<Vec<T>>,
    pub dt_density: Vec<T>,
    pub dt_phase: Vec<T>,
    pub potential: Vec<T>,
}

impl<T: Real> FieldSnapshot<T> {
    pub fn len(&self) -> usize {
        self.density.len()
    }

    pub fn is_empty(&self) -> bool {
        self.density.is_empty()
    }

    /// Trapezoid integral of the density.
    pub fn norm(&self, grid: &Grid<T>) -> T {
        let mut idx = vec![0; grid.dims()];
        (0..self.len())
            .map(|k| {
                grid.unflatten(k, &mut idx);
                grid.cell_weight(&idx) * self.density[k]
            })
            .sum()
    }

    /// Flat index of the density maximum.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &d) in self.density.iter().enumerate() {
            if d > self.density[best] {
                best = k;
            }
        }
        best
    }

    /// Writes `x0,…,density,phase` rows with a header line.
    pub fn write_csv<W: Write>(&self, grid: &Grid<T>, mut out: W) -> io::Result<()> {
        let dims = grid.dims();
        let mut header: Vec<String> = (0..dims).map(|d| format!("x{d}")).collect();
        header.push("density".into());
        header.push("phase".into());
        writeln!(out, "{}", header.join(","))?;
        let mut idx = vec![0; dims];
        for k in 0..self.len() {
            grid.unflatten(k, &mut idx);
            for (d, &i) in idx.iter().enumerate() {
                write!(out, "{},", self.coords[d][i])?;
            }
            writeln!(out, "{},{}", self.density[k], self.phase[k])?;
        }
        Ok(())
    }
}

/// Evaluates the field and its analytic derivatives on a tensor grid.
pub fn sample<T: Real, F: WaveField<T> + ?Sized>(
    field: &F,
    grid: &Grid<T>,
    t: T,
) -> Result<FieldSnapshot<T>, FieldError> {
    let dims = field.dims();
    if dims > MAX_TENSOR_DIMS {
        return Err(FieldError::TooManyDimensions {
            dims,
            max: MAX_TENSOR_DIMS,
        });
    }
    grid.check_coverage(field, lit(COVERAGE_WIDTHS), &[t])?;
    let groups = field.groups_for(Variant::CrossCoupled);
    let jets: Vec<Jet<T>> = ordered_map(grid.len(), |k| {
        let mut idx = vec![0; dims];
        let mut x = vec![T::zero(); dims];
        grid.point(k, &mut idx, &mut x);
        let mut jet = Jet::new(dims, groups.len());
        field.jet_into(&x, t, &groups, &mut jet);
        jet
    });
    let per_axis = |f: &dyn Fn(&Jet<T>, usize) -> T| -> Vec<Vec<T>> {
        (0..dims)
            .map(|d| jets.iter().map(|j| f(j, d)).collect())
            .collect()
    };
    Ok(FieldSnapshot {
        t,
        coords: grid.axes.iter().map(|a| a.coords()).collect(),
        density: jets.iter().map(|j| j.density()).collect(),
        phase: jets.iter().map(|j| j.s).collect(),
        dr: per_axis(&|j, d| j.dr[d]),
        d2r: per_axis(&|j, d| j.d2r[d]),
        ds: per_axis(&|j, d| j.ds[d]),
        d2s: per_axis(&|j, d| j.d2s[d]),
        dt_density: jets.iter().map(|j| j.dt_r2).collect(),
        dt_phase: jets.iter().map(|j| j.dt_s).collect(),
        potential: jets.iter().map(|j| j.v).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::build_free_soliton;
    use crate::model::{validate, ParticleSpec, UniverseConfig};

    #[test]
    fn csv_has_header_and_rows() {
        let u = validate(UniverseConfig::new(
            1.0,
            0.125,
            vec![ParticleSpec::free(1.0, 0.0)],
        ))
        .unwrap();
        let s = build_free_soliton(1.0, 0.0, &u).unwrap();
        let grid = Grid::cube(1, 8.0, 16, &[]).unwrap();
        let snap = sample(&s, &grid, 0.0).unwrap();
        let mut buf = Vec::new();
        snap.write_csv(&grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("x0,density,phase\n-8,"));
    }
}
