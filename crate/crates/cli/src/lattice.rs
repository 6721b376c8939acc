//! Parameter sets of the published figures.

/// Barrier height used throughout, eV.
pub const V0_EV: f64 = 10.0;

/// Which duration a figure plots against depth.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Plotted {
    Penetration,
    Return,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Curve {
    pub a_angstrom: f64,
    pub ebar_ev: f64,
    pub dk_inv_angstrom: f64,
}

const fn curve(a_angstrom: f64, ebar_ev: f64, dk_inv_angstrom: f64) -> Curve {
    Curve {
        a_angstrom,
        ebar_ev,
        dk_inv_angstrom,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Figure {
    pub number: usize,
    pub plotted: Plotted,
    pub curves: Vec<Curve>,
}

/// Figures 1 to 5 in order. Figure 5 follows the curve list of the body
/// text: curves 4-6 use Δk = 0.04 Å⁻¹ and curves 7-8 a 10 Å barrier.
pub fn figures() -> Vec<Figure> {
    use Plotted::*;
    vec![
        Figure {
            number: 1,
            plotted: Penetration,
            curves: vec![curve(5.0, 5.0, 0.02), curve(5.0, 5.0, 0.01)],
        },
        Figure {
            number: 2,
            plotted: Penetration,
            curves: vec![curve(10.0, 5.0, 0.01)],
        },
        Figure {
            number: 3,
            plotted: Penetration,
            curves: vec![
                curve(5.0, 2.5, 0.02),
                curve(5.0, 5.0, 0.02),
                curve(5.0, 7.5, 0.02),
                curve(5.0, 5.0, 0.04),
            ],
        },
        Figure {
            number: 4,
            plotted: Penetration,
            curves: vec![
                curve(5.0, 5.0, 0.02),
                curve(5.0, 5.0, 0.04),
                curve(10.0, 5.0, 0.02),
                curve(10.0, 5.0, 0.04),
            ],
        },
        Figure {
            number: 5,
            plotted: Return,
            curves: vec![
                curve(5.0, 2.5, 0.02),
                curve(5.0, 5.0, 0.02),
                curve(5.0, 7.5, 0.02),
                curve(5.0, 2.5, 0.04),
                curve(5.0, 5.0, 0.04),
                curve(5.0, 7.5, 0.04),
                curve(10.0, 5.0, 0.02),
                curve(10.0, 5.0, 0.04),
            ],
        },
    ]
}

/// Distinct parameter sets across all figures, in first-appearance order.
pub fn distinct_curves() -> Vec<Curve> {
    let mut out: Vec<Curve> = Vec::new();
    for c in figures().into_iter().flat_map(|f| f.curves) {
        if !out.contains(&c) {
            out.push(c);
        }
    }
    out
}
