//! Classification of the scaled `(xi, b)` plane into liquid, ice and
//! phase-separation regimes, plus machine-readable rasters and a simple
//! vector figure.

use std::io::{self, Write};

use crate::curves::{
    b1_plus, b2_plus, sample_curves, thresholds_minus, tilde_curves_with, CriticalCurves,
    MinusThresholds,
};
use crate::error::{Error, Result};
use crate::minimize::minimize_q;
use crate::params::{BoundaryCondition, ModelParams, ThermoPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Liquid,
    Ice,
    PhaseSeparation,
    BoundaryUpper,
    BoundaryLower,
    TriplePoint,
}

impl Regime {
    pub fn token(self) -> &'static str {
        match self {
            Regime::Liquid => "liquid",
            Regime::Ice => "ice",
            Regime::PhaseSeparation => "phase_separation",
            Regime::BoundaryUpper => "boundary_upper",
            Regime::BoundaryLower => "boundary_lower",
            Regime::TriplePoint => "triple_point",
        }
    }
}

/// Regime plus the minority-phase volume fraction by the lever rule:
/// `(m_star - m)/(2 m_star)` under plus boundary conditions and
/// `(m + m_star)/(2 m_star)` under minus ones, so the fraction vanishes
/// exactly at the endpoint the boundary favors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeLabel {
    pub regime: Regime,
    pub droplet_fraction: f64,
}

/// Reusable classifier; computing the minus-bc thresholds once makes
/// large rasters cheap.
pub struct Classifier {
    p: ModelParams,
    bc: BoundaryCondition,
    minus: Option<MinusThresholds>,
}

impl Classifier {
    pub fn new(p: &ModelParams, bc: BoundaryCondition) -> Result<Self> {
        let minus = match bc {
            BoundaryCondition::Plus => None,
            BoundaryCondition::Minus => Some(thresholds_minus(p)?),
        };
        Ok(Classifier { p: *p, bc, minus })
    }

    fn fraction_of(&self, m: f64) -> f64 {
        let ms = self.p.m_star();
        match self.bc {
            BoundaryCondition::Plus => (ms - m) / (2.0 * ms),
            BoundaryCondition::Minus => (m + ms) / (2.0 * ms),
        }
    }

    fn bounds(&self, xi: f64) -> Result<(f64, f64)> {
        match self.bc {
            BoundaryCondition::Plus => Ok((b1_plus(&self.p, xi)?, b2_plus(&self.p, xi))),
            BoundaryCondition::Minus => {
                let t = tilde_curves_with(&self.p, self.minus.as_ref().unwrap(), xi)?;
                Ok((t.b1, t.b2))
            }
        }
    }

    /// Labels one point. `b_tol` widens the boundary curves into bands,
    /// `xi_tol` does the same for the triple point along the `xi` axis.
    pub fn classify(&self, pt: ThermoPoint, b_tol: f64, xi_tol: f64) -> Result<RegimeLabel> {
        let (upper, lower) = self.bounds(pt.xi())?;
        // triple point: only in the minus-bc two-transition regime, where
        // the curves pinch at xi_t
        if let Some(th) = &self.minus {
            if let Some(m0) = th.m0 {
                if (pt.xi() - th.xi_t).abs() <= xi_tol {
                    let pinch = tilde_curves_with(&self.p, th, th.xi_t)?.b1;
                    if (pt.b() - pinch).abs() <= b_tol {
                        return Ok(RegimeLabel {
                            regime: Regime::TriplePoint,
                            droplet_fraction: self.fraction_of(m0),
                        });
                    }
                }
            }
        }
        if (pt.b() - upper).abs() <= b_tol {
            let set = minimize_q(&self.p, self.bc, pt)?;
            return Ok(RegimeLabel {
                regime: Regime::BoundaryUpper,
                droplet_fraction: self.fraction_of(set.largest()),
            });
        }
        if (pt.b() - lower).abs() <= b_tol {
            let set = minimize_q(&self.p, self.bc, pt)?;
            return Ok(RegimeLabel {
                regime: Regime::BoundaryLower,
                droplet_fraction: self.fraction_of(set.smallest()),
            });
        }
        let ms = self.p.m_star();
        if pt.b() > upper {
            return Ok(RegimeLabel {
                regime: Regime::Liquid,
                droplet_fraction: self.fraction_of(ms),
            });
        }
        if pt.b() < lower {
            return Ok(RegimeLabel {
                regime: Regime::Ice,
                droplet_fraction: self.fraction_of(-ms),
            });
        }
        let set = minimize_q(&self.p, self.bc, pt)?;
        // off the tolerance bands the minimizer is unique; fall back to the
        // best one if the point grazes a curve anyway
        Ok(RegimeLabel {
            regime: Regime::PhaseSeparation,
            droplet_fraction: self.fraction_of(set.smallest()),
        })
    }
}

/// One-shot classification with symmetric point tolerances.
pub fn classify(
    p: &ModelParams,
    bc: BoundaryCondition,
    pt: ThermoPoint,
    b_tol: f64,
) -> Result<RegimeLabel> {
    Classifier::new(p, bc)?.classify(pt, b_tol, b_tol)
}

/// Rectangular cell grid over the `(xi, b)` plane; cells are sampled at
/// their centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub xi_min: f64,
    pub xi_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub nx: usize,
    pub nb: usize,
}

impl GridSpec {
    pub fn new(xi_min: f64, xi_max: f64, b_min: f64, b_max: f64, nx: usize, nb: usize) -> Result<Self> {
        if !(xi_min >= 0.0 && xi_max > xi_min && b_max > b_min) || nx == 0 || nb == 0 {
            return Err(Error::domain(format!(
                "bad grid: xi [{xi_min}, {xi_max}] x b [{b_min}, {b_max}], {nx} x {nb} cells"
            )));
        }
        Ok(GridSpec { xi_min, xi_max, b_min, b_max, nx, nb })
    }

    pub fn xi_at(&self, ix: usize) -> f64 {
        self.xi_min + (self.xi_max - self.xi_min) * (ix as f64 + 0.5) / self.nx as f64
    }

    pub fn b_at(&self, ib: usize) -> f64 {
        self.b_min + (self.b_max - self.b_min) * (ib as f64 + 0.5) / self.nb as f64
    }

    pub fn cell_height(&self) -> f64 {
        (self.b_max - self.b_min) / self.nb as f64
    }

    pub fn cell_width(&self) -> f64 {
        (self.xi_max - self.xi_min) / self.nx as f64
    }
}

/// Classified raster with the sampled curves it was checked against.
/// Cells are stored `xi`-major: `cells[ix * nb + ib]`.
pub struct DiagramRaster {
    pub bc: BoundaryCondition,
    pub grid: GridSpec,
    pub cells: Vec<RegimeLabel>,
    pub curves: CriticalCurves,
}

/// Rasterizes the phase diagram; the boundary tolerance is half a cell.
pub fn raster(p: &ModelParams, bc: BoundaryCondition, grid: GridSpec) -> Result<DiagramRaster> {
    let classifier = Classifier::new(p, bc)?;
    let b_tol = 0.5 * grid.cell_height();
    let xi_tol = 0.5 * grid.cell_width();
    let mut cells = Vec::with_capacity(grid.nx * grid.nb);
    for ix in 0..grid.nx {
        let xi = grid.xi_at(ix);
        for ib in 0..grid.nb {
            let pt = ThermoPoint::new(grid.b_at(ib), xi)?;
            cells.push(classifier.classify(pt, b_tol, xi_tol)?);
        }
    }
    let curves = sample_curves(p, bc, 512)?;
    Ok(DiagramRaster { bc, grid, cells, curves })
}

impl DiagramRaster {
    pub fn cell(&self, ix: usize, ib: usize) -> &RegimeLabel {
        &self.cells[ix * self.grid.nb + ib]
    }

    /// CSV rows `xi,b,regime,droplet_fraction`; `header` lines are emitted
    /// first, each prefixed with `# `.
    pub fn write_csv<W: Write>(&self, mut w: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "xi,b,regime,droplet_fraction")?;
        for ix in 0..self.grid.nx {
            let xi = self.grid.xi_at(ix);
            for ib in 0..self.grid.nb {
                let cell = self.cell(ix, ib);
                writeln!(
                    w,
                    "{:.8},{:.8},{},{:.8}",
                    xi,
                    self.grid.b_at(ib),
                    cell.regime.token(),
                    cell.droplet_fraction
                )?;
            }
        }
        Ok(())
    }

    /// Simple standalone figure: regime cells as colored rectangles and
    /// the boundary curves as polylines, drawn thick where the droplet
    /// fraction jumps and thin where it moves continuously.
    pub fn write_svg<W: Write>(&self, mut w: W, header: &[String]) -> io::Result<()> {
        const W_PX: f64 = 880.0;
        const H_PX: f64 = 660.0;
        const ML: f64 = 70.0;
        const MR: f64 = 25.0;
        const MT: f64 = 25.0;
        const MB: f64 = 55.0;
        let g = &self.grid;
        let x_of = |xi: f64| ML + (xi - g.xi_min) / (g.xi_max - g.xi_min) * (W_PX - ML - MR);
        let y_of = |b: f64| H_PX - MB - (b - g.b_min) / (g.b_max - g.b_min) * (H_PX - MT - MB);

        writeln!(
            w,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W_PX}" height="{H_PX}" viewBox="0 0 {W_PX} {H_PX}">"#
        )?;
        for line in header {
            writeln!(w, "<!-- {line} -->")?;
        }
        writeln!(
            w,
            r##"<rect x="0" y="0" width="{W_PX}" height="{H_PX}" fill="#ffffff"/>"##
        )?;

        // regime cells
        let cw = (W_PX - ML - MR) / g.nx as f64;
        let ch = (H_PX - MT - MB) / g.nb as f64;
        for ix in 0..g.nx {
            for ib in 0..g.nb {
                let color = match self.cell(ix, ib).regime {
                    Regime::Liquid => "#d6eaff",
                    Regime::Ice => "#f0f0f0",
                    Regime::PhaseSeparation => "#8fb8e8",
                    Regime::BoundaryUpper | Regime::BoundaryLower => "#7a9cc4",
                    Regime::TriplePoint => "#444444",
                };
                let x = ML + ix as f64 * cw;
                let y = H_PX - MB - (ib as f64 + 1.0) * ch;
                writeln!(
                    w,
                    r#"<rect x="{x:.2}" y="{y:.2}" width="{cw:.2}" height="{ch:.2}" fill="{color}"/>"#
                )?;
            }
        }

        // curve branches: (points, thick?)
        let cc = &self.curves;
        let mut branches: Vec<(Vec<(f64, f64)>, bool)> = Vec::new();
        let common: Vec<(f64, f64)> = cc
            .samples
            .iter()
            .filter(|s| s.xi <= cc.xi_t)
            .map(|s| (s.xi, s.b_upper))
            .collect();
        branches.push((common, true));
        match self.bc {
            BoundaryCondition::Plus => {
                let upper: Vec<_> = cc
                    .samples
                    .iter()
                    .filter(|s| s.xi > cc.xi_t)
                    .map(|s| (s.xi, s.b_upper))
                    .collect();
                let lower: Vec<_> = cc
                    .samples
                    .iter()
                    .filter(|s| s.xi > cc.xi_t)
                    .map(|s| (s.xi, s.b_lower))
                    .collect();
                branches.push((upper, true)); // droplet appears with a jump
                branches.push((lower, false)); // droplet fills up continuously
            }
            BoundaryCondition::Minus => {
                let lower: Vec<_> = cc
                    .samples
                    .iter()
                    .filter(|s| s.xi > cc.xi_t)
                    .map(|s| (s.xi, s.b_lower))
                    .collect();
                branches.push((lower, true));
                let upper_window: Vec<_> = cc
                    .samples
                    .iter()
                    .filter(|s| s.xi > cc.xi_t && s.xi < cc.xi_u)
                    .map(|s| (s.xi, s.b_upper))
                    .collect();
                let upper_tail: Vec<_> = cc
                    .samples
                    .iter()
                    .filter(|s| s.xi >= cc.xi_u)
                    .map(|s| (s.xi, s.b_upper))
                    .collect();
                branches.push((upper_window, true));
                branches.push((upper_tail, false));
            }
        }
        for (pts, thick) in branches {
            if pts.len() < 2 {
                continue;
            }
            let style = if thick {
                r##"stroke="#000000" stroke-width="3""##
            } else {
                r##"stroke="#ffffff" stroke-width="1.5""##
            };
            let coords: Vec<String> = pts
                .iter()
                .map(|(xi, b)| format!("{:.2},{:.2}", x_of(*xi), y_of(*b)))
                .collect();
            writeln!(
                w,
                r#"<polyline fill="none" {style} points="{}"/>"#,
                coords.join(" ")
            )?;
        }

        // frame and axis labels
        writeln!(
            w,
            r##"<rect x="{ML}" y="{MT}" width="{:.2}" height="{:.2}" fill="none" stroke="#000000" stroke-width="1"/>"##,
            W_PX - ML - MR,
            H_PX - MT - MB
        )?;
        writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" font-size="16" text-anchor="middle">xi</text>"#,
            0.5 * (ML + W_PX - MR),
            H_PX - 14.0
        )?;
        writeln!(
            w,
            r#"<text x="18" y="{:.1}" font-size="16" text-anchor="middle" transform="rotate(-90 18 {:.1})">b</text>"#,
            0.5 * (MT + H_PX - MB),
            0.5 * (MT + H_PX - MB)
        )?;
        for (v, x) in [(g.xi_min, ML), (g.xi_max, W_PX - MR)] {
            writeln!(
                w,
                r#"<text x="{x:.1}" y="{:.1}" font-size="12" text-anchor="middle">{v:.3}</text>"#,
                H_PX - MB + 18.0
            )?;
        }
        for (v, y) in [(g.b_min, H_PX - MB), (g.b_max, MT)] {
            writeln!(
                w,
                r#"<text x="{:.1}" y="{y:.1}" font-size="12" text-anchor="end">{v:.3}</text>"#,
                ML - 6.0
            )?;
        }
        writeln!(w, "</svg>")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves;
    use crate::params::BoundaryCondition::{Minus, Plus};

    fn canonical() -> ModelParams {
        ModelParams::new(2, 0.8, 1.0, 1.0).unwrap()
    }

    fn steep() -> ModelParams {
        ModelParams::new(2, 0.98, 1.0, 4.0).unwrap()
    }

    fn pt(b: f64, xi: f64) -> ThermoPoint {
        ThermoPoint::new(b, xi).unwrap()
    }

    #[test]
    fn liquid_above_the_upper_curve() {
        let p = canonical();
        let b1 = curves::b1_plus(&p, 2.0).unwrap();
        let label = classify(&p, Plus, pt(b1 + 0.2, 2.0), 1e-9).unwrap();
        assert_eq!(label.regime, Regime::Liquid);
        assert_eq!(label.droplet_fraction, 0.0);
        let label = classify(&p, Plus, pt(-3.0, 2.0), 1e-9).unwrap();
        assert_eq!(label.regime, Regime::Ice);
        assert_eq!(label.droplet_fraction, 1.0);
    }

    #[test]
    fn no_phase_separation_below_threshold() {
        let p = canonical();
        let xt = curves::xi_t_plus(&p);
        for i in 0..12 {
            let xi = xt * (i as f64 + 0.3) / 12.0;
            for j in 0..12 {
                let b = -3.0 + 6.0 * j as f64 / 11.0;
                let label = classify(&p, Plus, pt(b, xi), 1e-9).unwrap();
                assert_ne!(label.regime, Regime::PhaseSeparation, "xi={xi} b={b}");
            }
        }
    }

    #[test]
    fn fraction_jumps_across_the_lower_minus_curve() {
        let p = steep();
        let th = curves::thresholds_minus(&p).unwrap();
        let xi = 0.5 * (th.xi_t + th.xi_u);
        let t = curves::tilde_curves_with(&p, &th, xi).unwrap();
        let eps = 1e-5;
        let below = classify(&p, Minus, pt(t.b2 - eps, xi), 1e-9).unwrap();
        assert_eq!(below.regime, Regime::Ice);
        assert_eq!(below.droplet_fraction, 0.0);
        let above = classify(&p, Minus, pt(t.b2 + eps, xi), 1e-9).unwrap();
        assert_eq!(above.regime, Regime::PhaseSeparation);
        // the fraction lands at a strictly positive value, not at 0+
        assert!(above.droplet_fraction > 0.05, "{}", above.droplet_fraction);
        let lever = (t.m2.unwrap() + 0.98) / 1.96;
        assert!((above.droplet_fraction - lever).abs() < 1e-4);
    }

    #[test]
    fn tiny_raster_deep_in_liquid() {
        let p = canonical();
        let grid = GridSpec::new(0.1, 0.2, 2.0, 3.0, 2, 2).unwrap();
        let r = raster(&p, Plus, grid).unwrap();
        assert!(r.cells.iter().all(|c| c.regime == Regime::Liquid));
    }

    #[test]
    fn bands_ordered_ice_separation_liquid() {
        let p = canonical();
        let grid = GridSpec::new(0.05, 6.0, -4.0, 1.0, 32, 48).unwrap();
        let r = raster(&p, Plus, grid).unwrap();
        // at a column beyond the threshold the regimes must appear in order
        let xt = curves::xi_t_plus(&p);
        for ix in 0..grid.nx {
            let xi = grid.xi_at(ix);
            if xi <= xt * 1.1 {
                continue;
            }
            let width = curves::b1_plus(&p, xi).unwrap() - curves::b2_plus(&p, xi);
            let mut phase = 0; // 0 ice, 1 separation, 2 liquid
            let mut seen_sep = false;
            for ib in 0..grid.nb {
                let next = match r.cell(ix, ib).regime {
                    Regime::Ice => 0,
                    Regime::PhaseSeparation => {
                        seen_sep = true;
                        1
                    }
                    Regime::Liquid => 2,
                    _ => continue,
                };
                assert!(next >= phase, "column {ix} not ordered");
                phase = next;
            }
            // a cell center is guaranteed inside only once the band is
            // a few cells wide
            if width > 2.5 * grid.cell_height() {
                assert!(seen_sep, "column {ix} skipped the separation band");
            }
        }
    }

    #[test]
    fn fraction_monotone_and_consistent_with_curves() {
        let p = canonical();
        let grid = GridSpec::new(0.05, 6.0, -4.0, 1.0, 24, 40).unwrap();
        let r = raster(&p, Plus, grid).unwrap();
        for ix in 0..grid.nx {
            let xi = grid.xi_at(ix);
            let (up, lo) = (
                curves::b1_plus(&p, xi).unwrap(),
                curves::b2_plus(&p, xi),
            );
            let mut prev = f64::INFINITY;
            for ib in 0..grid.nb {
                let cell = r.cell(ix, ib);
                let b = grid.b_at(ib);
                if cell.regime == Regime::PhaseSeparation {
                    // fraction shrinks as b grows
                    assert!(cell.droplet_fraction <= prev + 1e-12);
                    prev = cell.droplet_fraction;
                    // no separation cell strays more than one cell outside the band
                    assert!(
                        b > lo - grid.cell_height() && b < up + grid.cell_height(),
                        "stray separation cell at xi={xi} b={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn fraction_jump_towers_over_in_band_variation_plus() {
        // single-column raster across the window at fixed xi: the gap at
        // the upper curve dwarfs the cell-to-cell variation inside the band
        let p = canonical();
        let xi = 2.0 * curves::xi_t_plus(&p);
        let b1 = curves::b1_plus(&p, xi).unwrap();
        let b2 = curves::b2_plus(&p, xi);
        let grid = GridSpec::new(xi - 0.01, xi + 0.01, b2 - 0.2, b1 + 0.2, 1, 60).unwrap();
        let r = raster(&p, Plus, grid).unwrap();
        let fractions: Vec<f64> = (0..grid.nb)
            .map(|ib| r.cell(0, ib).droplet_fraction)
            .collect();
        let mut gaps: Vec<f64> = fractions.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let largest = gaps.iter().cloned().fold(0.0, f64::max);
        gaps.sort_by(f64::total_cmp);
        let median = gaps[gaps.len() / 2];
        assert!(
            largest > 10.0 * median,
            "largest gap {largest} vs median {median}"
        );
        // the tower sits where the upper curve crosses the column
        let at = fractions
            .windows(2)
            .position(|w| (w[1] - w[0]).abs() == largest)
            .unwrap();
        assert!((grid.b_at(at) - b1).abs() < 2.0 * grid.cell_height());
    }

    #[test]
    fn fraction_jumps_at_both_curves_inside_the_minus_window() {
        let p = steep();
        let th = curves::thresholds_minus(&p).unwrap();
        let xi = 0.5 * (th.xi_t + th.xi_u);
        let t = curves::tilde_curves_with(&p, &th, xi).unwrap();
        let pad = 0.3 * (t.b1 - t.b2).max(0.01);
        let grid =
            GridSpec::new(xi - 1e-4, xi + 1e-4, t.b2 - pad, t.b1 + pad, 1, 80).unwrap();
        let r = raster(&p, Minus, grid).unwrap();
        let fractions: Vec<f64> = (0..grid.nb)
            .map(|ib| r.cell(0, ib).droplet_fraction)
            .collect();
        let gaps: Vec<f64> = fractions.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        let mut sorted = gaps.clone();
        sorted.sort_by(f64::total_cmp);
        let median = sorted[sorted.len() / 2];
        // two separate towers: one near each curve
        let towers: Vec<usize> = gaps
            .iter()
            .enumerate()
            .filter(|(_, g)| **g > 10.0 * median.max(1e-6))
            .map(|(i, _)| i)
            .collect();
        assert!(towers.len() >= 2, "towers at {towers:?}, median {median}");
        let near_lower = towers
            .iter()
            .any(|&i| (grid.b_at(i) - t.b2).abs() < 2.0 * grid.cell_height());
        let near_upper = towers
            .iter()
            .any(|&i| (grid.b_at(i) - t.b1).abs() < 2.0 * grid.cell_height());
        assert!(near_lower && near_upper);
    }

    #[test]
    fn csv_deterministic_and_well_formed() {
        let p = canonical();
        let grid = GridSpec::new(0.05, 4.0, -3.0, 1.0, 8, 8).unwrap();
        let mut a = Vec::new();
        raster(&p, Plus, grid)
            .unwrap()
            .write_csv(&mut a, &["params".to_string()])
            .unwrap();
        let mut b = Vec::new();
        raster(&p, Plus, grid)
            .unwrap()
            .write_csv(&mut b, &["params".to_string()])
            .unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("# params\nxi,b,regime,droplet_fraction\n"));
        assert_eq!(text.lines().count(), 2 + 64);
    }

    #[test]
    fn svg_has_thick_and_thin_branches() {
        let p = canonical();
        let grid = GridSpec::new(0.05, 6.0, -4.0, 1.0, 16, 16).unwrap();
        let mut buf = Vec::new();
        raster(&p, Plus, grid)
            .unwrap()
            .write_svg(&mut buf, &[])
            .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("<polyline"));
        assert!(text.contains(r##"stroke="#000000" stroke-width="3""##));
        assert!(text.contains(r##"stroke="#ffffff" stroke-width="1.5""##));
        assert!(text.ends_with("</svg>\n"));
    }

    #[test]
    fn triple_point_labeled_in_the_window_regime() {
        let p = steep();
        let th = curves::thresholds_minus(&p).unwrap();
        let pinch = curves::tilde_curves_with(&p, &th, th.xi_t).unwrap().b1;
        let label = classify(&p, Minus, pt(pinch, th.xi_t), 1e-6).unwrap();
        assert_eq!(label.regime, Regime::TriplePoint);
    }
}
