//! Uniform 2D grids and masked scalar fields: node classification, CSV
//! serialization, bilinear lookup, and evaluator sampling with seam flags.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Evaluator;
use crate::geom::Point;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    pub fn new(x0: f64, y0: f64, h: f64, nx: usize, ny: usize) -> Result<Grid> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be finite and positive, got {h}"
            )));
        }
        if nx < 1 || ny < 1 {
            return Err(Error::InvalidParameter("grid needs at least one node per axis".into()));
        }
        Ok(Grid { x0, y0, h, nx, ny })
    }

    /// Square grid with n nodes per axis covering [-half, half]^2.
    /// Odd n puts a node row exactly on each axis.
    pub fn centered_square(half: f64, n: usize) -> Result<Grid> {
        if n < 2 {
            return Err(Error::InvalidParameter("need at least 2 nodes per axis".into()));
        }
        Grid::new(-half, -half, 2.0 * half / (n - 1) as f64, n, n)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h
    }

    pub fn pos(&self, i: usize, j: usize) -> Point {
        Point::c1(self.x(i), self.y(j))
    }

    /// Grid node closest to (x, y), clamped to the grid.
    pub fn nearest(&self, x: f64, y: f64) -> (usize, usize) {
        let i = ((x - self.x0) / self.h).round().clamp(0.0, (self.nx - 1) as f64);
        let j = ((y - self.y0) / self.h).round().clamp(0.0, (self.ny - 1) as f64);
        (i as usize, j as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    Outside,
    Free,
    Fixed,
}

#[derive(Clone, Debug)]
pub struct GridMask {
    pub grid: Grid,
    pub class: Vec<NodeClass>,
}

impl GridMask {
    pub fn new(grid: Grid, class: Vec<NodeClass>) -> Result<GridMask> {
        if class.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "mask length {} does not match grid size {}",
                class.len(),
                grid.len()
            )));
        }
        Ok(GridMask { grid, class })
    }

    /// Free where the predicate holds; non-member nodes 4-adjacent to a free
    /// node become Fixed (a data ring); everything else Outside.
    pub fn with_fixed_ring(grid: Grid, free: impl Fn(&Point) -> bool) -> GridMask {
        let mut class = vec![NodeClass::Outside; grid.len()];
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if free(&grid.pos(i, j)) {
                    class[grid.idx(i, j)] = NodeClass::Free;
                }
            }
        }
        let snapshot = class.clone();
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if snapshot[grid.idx(i, j)] != NodeClass::Outside {
                    continue;
                }
                let mut adjacent_free = false;
                if i > 0 && snapshot[grid.idx(i - 1, j)] == NodeClass::Free {
                    adjacent_free = true;
                }
                if i + 1 < grid.nx && snapshot[grid.idx(i + 1, j)] == NodeClass::Free {
                    adjacent_free = true;
                }
                if j > 0 && snapshot[grid.idx(i, j - 1)] == NodeClass::Free {
                    adjacent_free = true;
                }
                if j + 1 < grid.ny && snapshot[grid.idx(i, j + 1)] == NodeClass::Free {
                    adjacent_free = true;
                }
                if adjacent_free {
                    class[grid.idx(i, j)] = NodeClass::Fixed;
                }
            }
        }
        GridMask { grid, class }
    }

    pub fn class_at(&self, i: usize, j: usize) -> NodeClass {
        self.class[self.grid.idx(i, j)]
    }

    pub fn set_class(&mut self, i: usize, j: usize, c: NodeClass) {
        let idx = self.grid.idx(i, j);
        self.class[idx] = c;
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        let mut free = 0;
        let mut fixed = 0;
        let mut outside = 0;
        for c in &self.class {
            match c {
                NodeClass::Free => free += 1,
                NodeClass::Fixed => fixed += 1,
                NodeClass::Outside => outside += 1,
            }
        }
        (free, fixed, outside)
    }
}

/// Scalar field on a grid; None marks nodes with no value. Seam flags mark
/// nodes where a max or glue branch switches relative to a 4-neighbor.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    pub grid: Grid,
    pub values: Vec<Option<f64>>,
    pub seams: Option<Vec<bool>>,
}

impl GridField {
    pub fn new(grid: Grid, values: Vec<Option<f64>>) -> Result<GridField> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "field length {} does not match grid size {}",
                values.len(),
                grid.len()
            )));
        }
        Ok(GridField { grid, values, seams: None })
    }

    pub fn constant(grid: Grid, v: f64) -> GridField {
        GridField { grid, values: vec![Some(v); grid.len()], seams: None }
    }

    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        self.values[self.grid.idx(i, j)]
    }

    pub fn defined_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn is_seam(&self, i: usize, j: usize) -> bool {
        self.seams
            .as_ref()
            .map(|s| s[self.grid.idx(i, j)])
            .unwrap_or(false)
    }

    /// Value at the node nearest to p (first complex coordinate plane).
    pub fn value_near(&self, p: &Point) -> Option<f64> {
        let (i, j) = self.grid.nearest(p.re(0), p.im(0));
        self.value(i, j)
    }

    /// Bilinear interpolation; None outside the grid or next to undefined
    /// nodes.
    pub fn bilinear(&self, x: f64, y: f64) -> Option<f64> {
        let g = &self.grid;
        let fx = (x - g.x0) / g.h;
        let fy = (y - g.y0) / g.h;
        if fx < 0.0 || fy < 0.0 || fx > (g.nx - 1) as f64 || fy > (g.ny - 1) as f64 {
            return None;
        }
        let i = (fx.floor() as usize).min(g.nx.saturating_sub(2));
        let j = (fy.floor() as usize).min(g.ny.saturating_sub(2));
        let tx = fx - i as f64;
        let ty = fy - j as f64;
        let v00 = self.value(i, j)?;
        let v10 = self.value(i + 1, j)?;
        let v01 = self.value(i, j + 1)?;
        let v11 = self.value(i + 1, j + 1)?;
        Some(
            v00 * (1.0 - tx) * (1.0 - ty)
                + v10 * tx * (1.0 - ty)
                + v01 * (1.0 - tx) * ty
                + v11 * tx * ty,
        )
    }

    pub fn to_csv(&self) -> String {
        let g = &self.grid;
        let mut out = String::new();
        out.push_str(&format!(
            "# gridfield x0={} y0={} h={} nx={} ny={}\n",
            g.x0, g.y0, g.h, g.nx, g.ny
        ));
        for j in 0..g.ny {
            for i in 0..g.nx {
                match self.value(i, j) {
                    Some(v) => out.push_str(&format!("{},{},{}\n", g.x(i), g.y(j), v)),
                    None => out.push_str(&format!("{},{},undef\n", g.x(i), g.y(j))),
                }
            }
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<GridField> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::GridParse("empty input".into()))?;
        let rest = header
            .strip_prefix("# gridfield ")
            .ok_or_else(|| Error::GridParse("missing '# gridfield' header".into()))?;
        let mut x0 = None;
        let mut y0 = None;
        let mut h = None;
        let mut nx = None;
        let mut ny = None;
        for kv in rest.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::GridParse(format!("bad header token '{kv}'")))?;
            match k {
                "x0" => x0 = Some(parse_f64(v)?),
                "y0" => y0 = Some(parse_f64(v)?),
                "h" => h = Some(parse_f64(v)?),
                "nx" => nx = Some(parse_usize(v)?),
                "ny" => ny = Some(parse_usize(v)?),
                other => return Err(Error::GridParse(format!("unknown header key '{other}'"))),
            }
        }
        let (x0, y0, h, nx, ny) = match (x0, y0, h, nx, ny) {
            (Some(a), Some(b), Some(c), Some(d), Some(e)) => (a, b, c, d, e),
            _ => return Err(Error::GridParse("incomplete header".into())),
        };
        let grid = Grid::new(x0, y0, h, nx, ny)
            .map_err(|e| Error::GridParse(format!("bad grid header: {e}")))?;
        let mut values = Vec::with_capacity(grid.len());
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.splitn(3, ',');
            let x = parts
                .next()
                .ok_or_else(|| Error::GridParse(format!("line {}: missing x", lineno + 2)))?;
            let y = parts
                .next()
                .ok_or_else(|| Error::GridParse(format!("line {}: missing y", lineno + 2)))?;
            let v = parts
                .next()
                .ok_or_else(|| Error::GridParse(format!("line {}: missing value", lineno + 2)))?;
            let idx = values.len();
            if idx >= grid.len() {
                return Err(Error::GridParse("more rows than grid nodes".into()));
            }
            let (i, j) = (idx % grid.nx, idx / grid.nx);
            let xref = grid.x(i);
            let yref = grid.y(j);
            if (parse_f64(x)? - xref).abs() > grid.h * 1e-6
                || (parse_f64(y)? - yref).abs() > grid.h * 1e-6
            {
                return Err(Error::GridParse(format!(
                    "line {}: coordinates ({x}, {y}) do not match node ({xref}, {yref})",
                    lineno + 2
                )));
            }
            if v == "undef" {
                values.push(None);
            } else {
                values.push(Some(parse_f64(v)?));
            }
        }
        if values.len() != grid.len() {
            return Err(Error::GridParse(format!(
                "expected {} rows, got {}",
                grid.len(),
                values.len()
            )));
        }
        GridField::new(grid, values)
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::GridParse(format!("bad number '{s}'")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|_| Error::GridParse(format!("bad count '{s}'")))
}

/// Sample an evaluator on every node where `member` holds (everywhere when
/// None), recording branch seams: a node is flagged when an adjacent defined
/// node resolved a different set of max/glue branches.
pub fn sample_evaluator(
    f: &Evaluator,
    grid: Grid,
    member: Option<&dyn Fn(&Point) -> bool>,
) -> GridField {
    let mut values = vec![None; grid.len()];
    let mut sigs: Vec<Option<u64>> = vec![None; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let p = grid.pos(i, j);
            if member.map_or(true, |m| m(&p)) {
                let (v, s) = f.eval_with_signature(&p);
                values[grid.idx(i, j)] = Some(v);
                sigs[grid.idx(i, j)] = Some(s);
            }
        }
    }
    let mut seams = vec![false; grid.len()];
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let here = match sigs[grid.idx(i, j)] {
                Some(s) => s,
                None => continue,
            };
            if i + 1 < grid.nx {
                if let Some(s) = sigs[grid.idx(i + 1, j)] {
                    if s != here {
                        seams[grid.idx(i, j)] = true;
                        seams[grid.idx(i + 1, j)] = true;
                    }
                }
            }
            if j + 1 < grid.ny {
                if let Some(s) = sigs[grid.idx(i, j + 1)] {
                    if s != here {
                        seams[grid.idx(i, j)] = true;
                        seams[grid.idx(i, j + 1)] = true;
                    }
                }
            }
        }
    }
    GridField { grid, values, seams: Some(seams) }
}
