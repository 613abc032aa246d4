//! Rectangular sampling grids with axis metadata, plus the CSV exchange
//! format used by the scan and fit tools.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// One axis of a rectangular grid: bin centers start + k * step.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub step: f64,
    pub count: usize,
    pub unit: String,
}

impl Axis {
    pub fn new(name: &str, start: f64, step: f64, count: usize, unit: &str) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) || count < 2 {
            return Err(Error::InvalidParameter(format!(
                "axis {name}: need step > 0 and count >= 2 (step {step}, count {count})"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            start,
            step,
            count,
            unit: unit.to_string(),
        })
    }

    /// Symmetric axis spanning [-half_span, +half_span] with `count` centers.
    pub fn centered(name: &str, center: f64, half_span: f64, count: usize, unit: &str) -> Result<Self> {
        let step = 2.0 * half_span / ((count - 1) as f64);
        Axis::new(name, center - half_span, step, count, unit)
    }

    pub fn value(&self, index: usize) -> f64 {
        self.start + self.step * index as f64
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|k| self.value(k))
    }
}

/// Sampled intensity (or counts) on a rectangular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    pub axis_x: Axis,
    pub axis_y: Axis,
    values: Vec<f64>,
}

impl Histogram2D {
    pub fn zeros(axis_x: Axis, axis_y: Axis) -> Self {
        let values = vec![0.0; axis_x.count * axis_y.count];
        Self { axis_x, axis_y, values }
    }

    /// Fills the grid from a function of the axis values.
    pub fn from_fn(axis_x: Axis, axis_y: Axis, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut h = Self::zeros(axis_x, axis_y);
        for ix in 0..h.axis_x.count {
            let x = h.axis_x.value(ix);
            for iy in 0..h.axis_y.count {
                let y = h.axis_y.value(iy);
                let v = f(x, y);
                h.set(ix, iy, v);
            }
        }
        h
    }

    #[inline]
    fn idx(&self, ix: usize, iy: usize) -> usize {
        ix * self.axis_y.count + iy
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.idx(ix, iy)]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        let i = self.idx(ix, iy);
        self.values[i] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Riemann integral over the plane: sum * step_x * step_y.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.axis_x.step * self.axis_y.step
    }

    /// Marginal along x (integrated over y, per unit x).
    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.axis_x.count)
            .map(|ix| (0..self.axis_y.count).map(|iy| self.get(ix, iy)).sum::<f64>() * self.axis_y.step)
            .collect()
    }

    /// Marginal along y (integrated over x, per unit y).
    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.axis_y.count)
            .map(|iy| (0..self.axis_x.count).map(|ix| self.get(ix, iy)).sum::<f64>() * self.axis_x.step)
            .collect()
    }

    /// Weighted first and second moments: (mean_x, mean_y, sd_x, sd_y, rho).
    pub fn moments(&self) -> Result<(f64, f64, f64, f64, f64)> {
        let total: f64 = self.values.iter().sum();
        if !(total > 0.0) {
            return Err(Error::DegenerateData("histogram has no positive mass".into()));
        }
        let (mut mx, mut my) = (0.0, 0.0);
        for ix in 0..self.axis_x.count {
            for iy in 0..self.axis_y.count {
                let w = self.get(ix, iy);
                mx += w * self.axis_x.value(ix);
                my += w * self.axis_y.value(iy);
            }
        }
        mx /= total;
        my /= total;
        let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
        for ix in 0..self.axis_x.count {
            for iy in 0..self.axis_y.count {
                let w = self.get(ix, iy);
                let dx = self.axis_x.value(ix) - mx;
                let dy = self.axis_y.value(iy) - my;
                vx += w * dx * dx;
                vy += w * dy * dy;
                cxy += w * dx * dy;
            }
        }
        vx /= total;
        vy /= total;
        cxy /= total;
        Ok((mx, my, vx.sqrt(), vy.sqrt(), cxy / (vx.sqrt() * vy.sqrt())))
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(
            out,
            "# axis_x: {},{},{},{},{}",
            self.axis_x.name, self.axis_x.start, self.axis_x.step, self.axis_x.count, self.axis_x.unit
        )?;
        writeln!(
            out,
            "# axis_y: {},{},{},{},{}",
            self.axis_y.name, self.axis_y.start, self.axis_y.step, self.axis_y.count, self.axis_y.unit
        )?;
        for ix in 0..self.axis_x.count {
            for iy in 0..self.axis_y.count {
                writeln!(out, "{},{},{}", ix, iy, self.get(ix, iy))?;
            }
        }
        Ok(())
    }

    pub fn read_csv(reader: impl BufRead) -> Result<Self> {
        let mut axis_x = None;
        let mut axis_y = None;
        let mut cells: Vec<(usize, usize, f64)> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let row = lineno + 1;
            let line = line.map_err(|e| Error::CsvParse { row, message: e.to_string() })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# axis_x:") {
                axis_x = Some(parse_axis(rest.trim(), row)?);
            } else if let Some(rest) = line.strip_prefix("# axis_y:") {
                axis_y = Some(parse_axis(rest.trim(), row)?);
            } else if line.starts_with('#') {
                continue;
            } else {
                let parts: Vec<&str> = line.split(',').collect();
                if parts.len() != 3 {
                    return Err(Error::CsvParse {
                        row,
                        message: format!("expected ix,iy,value; got {line:?}"),
                    });
                }
                let ix = parts[0].trim().parse::<usize>().map_err(|e| Error::CsvParse {
                    row,
                    message: format!("bad ix: {e}"),
                })?;
                let iy = parts[1].trim().parse::<usize>().map_err(|e| Error::CsvParse {
                    row,
                    message: format!("bad iy: {e}"),
                })?;
                let v = parts[2].trim().parse::<f64>().map_err(|e| Error::CsvParse {
                    row,
                    message: format!("bad value: {e}"),
                })?;
                cells.push((ix, iy, v));
            }
        }
        let axis_x = axis_x.ok_or(Error::CsvParse { row: 0, message: "missing # axis_x header".into() })?;
        let axis_y = axis_y.ok_or(Error::CsvParse { row: 0, message: "missing # axis_y header".into() })?;
        let mut h = Histogram2D::zeros(axis_x, axis_y);
        for (ix, iy, v) in cells {
            if ix >= h.axis_x.count || iy >= h.axis_y.count {
                return Err(Error::CsvParse {
                    row: 0,
                    message: format!("cell index ({ix},{iy}) outside grid"),
                });
            }
            h.set(ix, iy, v);
        }
        Ok(h)
    }
}

fn parse_axis(s: &str, row: usize) -> Result<Axis> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 5 {
        return Err(Error::CsvParse {
            row,
            message: format!("axis header needs name,start,step,count,unit; got {s:?}"),
        });
    }
    let start = parts[1].trim().parse::<f64>().map_err(|e| Error::CsvParse {
        row,
        message: format!("bad axis start: {e}"),
    })?;
    let step = parts[2].trim().parse::<f64>().map_err(|e| Error::CsvParse {
        row,
        message: format!("bad axis step: {e}"),
    })?;
    let count = parts[3].trim().parse::<usize>().map_err(|e| Error::CsvParse {
        row,
        message: format!("bad axis count: {e}"),
    })?;
    Axis::new(parts[0].trim(), start, step, count, parts[4].trim())
}
