//! Writes the linearized model in CPLEX LP text format.
//!
//! Pairs are enumerated once with `i <= j`: an off-diagonal pair carries
//! objective weight 1 (its two symmetric halves merged) and a diagonal pair
//! weight 1/2. Affinities are declared only for `r <= s`, which keeps the
//! model symmetric without extra equality rows.

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundSet, PairTerm, TangentCut};
use crate::error::Result;
use crate::instance::Instance;
use crate::io::write_atomic;
use crate::likelihood::constant_term;
use crate::scalar::Real;

#[derive(Debug, Clone)]
pub struct MilpOptions<T> {
    pub breakpoints: Vec<T>,
    pub epsilon: T,
    pub symmetry_breaking: bool,
}

/// The model text and the cut-recipe sidecar.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MilpExport {
    pub model: String,
    pub sidecar: String,
}

/// Path of the sidecar written next to `model_path`.
pub fn sidecar_path(model_path: &Path) -> std::path::PathBuf {
    let mut s = model_path.as_os_str().to_owned();
    s.push(".cuts");
    s.into()
}

pub fn export_milp<T: Real>(
    inst: &Instance,
    bounds: &BoundSet<T>,
    opts: &MilpOptions<T>,
    path: &Path,
) -> Result<()> {
    let out = milp_to_strings(inst, bounds, opts)?;
    write_atomic(path, out.model.as_bytes())?;
    write_atomic(&sidecar_path(path), out.sidecar.as_bytes())
}

fn num(x: f64) -> String {
    // -0 prints as "-0"
    let x = x + 0.0;
    let s = format!("{x}");
    if s.len() > 20 {
        format!("{x:e}")
    } else {
        s
    }
}

/// Linear expression with terms merged per variable, in insertion order.
#[derive(Default)]
struct Expr(Vec<(String, f64)>);

impl Expr {
    fn add(mut self, coef: f64, var: impl Into<String>) -> Self {
        let var = var.into();
        match self.0.iter_mut().find(|(v, _)| *v == var) {
            Some((_, c)) => *c += coef,
            None => self.0.push((var, coef)),
        }
        self
    }

    fn render(&self) -> String {
        let mut s = String::new();
        let terms: Vec<&(String, f64)> = self.0.iter().filter(|t| t.1 != 0.0).collect();
        for (idx, (var, c)) in terms.into_iter().enumerate() {
            let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
            if idx == 0 {
                if sign == "-" {
                    s.push_str("- ");
                }
            } else {
                write!(s, " {sign} ").unwrap();
            }
            if mag != 1.0 {
                write!(s, "{} ", num(mag)).unwrap();
            }
            s.push_str(var);
            // keep lines short for strict readers
            if idx % 8 == 7 && idx + 1 < self.0.iter().filter(|t| t.1 != 0.0).count() {
                s.push_str("\n   ");
            }
        }
        s
    }
}

fn z(i: usize, r: usize) -> String {
    format!("z_{}_{}", i + 1, r + 1)
}

fn y(i: usize, j: usize, r: usize, s: usize) -> String {
    format!("y_{}_{}_{}_{}", i + 1, j + 1, r + 1, s + 1)
}

fn x(i: usize, j: usize, r: usize, s: usize) -> String {
    format!("x_{}_{}_{}_{}", i + 1, j + 1, r + 1, s + 1)
}

fn w(r: usize, s: usize) -> String {
    let (a, b) = if r <= s { (r, s) } else { (s, r) };
    format!("w_{}_{}", a + 1, b + 1)
}

pub fn milp_to_strings<T: Real>(
    inst: &Instance,
    bounds: &BoundSet<T>,
    opts: &MilpOptions<T>,
) -> Result<MilpExport> {
    let g = &inst.graph;
    let (n, k) = (g.n(), inst.k);
    let constant: f64 = constant_term::<T>(g)?.as_f64();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let cells: Vec<(usize, usize)> = (0..k).flat_map(|r| (0..k).map(move |s| (r, s))).collect();
    let mup = |i, j| bounds.mup(i, j).as_f64();
    let mlow = |i, j| bounds.mlow(i, j).as_f64();

    let mut m = String::new();
    writeln!(m, "\\ DCSBM maximum-likelihood MILP").unwrap();
    writeln!(m, "\\ n = {n}, K = {k}, m = {}", g.m()).unwrap();
    writeln!(
        m,
        "\\ negative log-likelihood = objective - ({})",
        num(constant)
    )
    .unwrap();
    writeln!(m, "Minimize").unwrap();
    let mut obj = Expr::default();
    for &(i, j) in &pairs {
        let weight = if i == j { 0.5 } else { 1.0 };
        for &(r, s) in &cells {
            obj = obj.add(weight, x(i, j, r, s));
        }
    }
    writeln!(m, " obj: {}", obj.render()).unwrap();

    writeln!(m, "Subject To").unwrap();
    if opts.symmetry_breaking {
        writeln!(m, " sbc_first: z_1_1 = 1").unwrap();
        // sum_{i=2}^{j-1} sum_{l<r} z_il - sum_{l<=r} z_jl <= j - 3
        for r in 2..k {
            for j in r..=n {
                let mut e = Expr::default();
                for i in 2..j {
                    for l in 1..r {
                        e = e.add(1.0, z(i - 1, l - 1));
                    }
                }
                for l in 1..=r {
                    e = e.add(-1.0, z(j - 1, l - 1));
                }
                writeln!(m, " sbc_{r}_{j}: {} <= {}", e.render(), j as i64 - 3).unwrap();
            }
        }
    }
    for i in 0..n {
        let e = (0..k).fold(Expr::default(), |e, r| e.add(1.0, z(i, r)));
        writeln!(m, " assign_{}: {} = 1", i + 1, e.render()).unwrap();
    }
    for &(i, j) in &pairs {
        for &(r, s) in &cells {
            let tag = format!("{}_{}_{}_{}", i + 1, j + 1, r + 1, s + 1);
            let (yv, xv) = (y(i, j, r, s), x(i, j, r, s));
            let e = Expr::default().add(1.0, z(i, r)).add(-1.0, yv.clone());
            writeln!(m, " lin_a_{tag}: {} >= 0", e.render()).unwrap();
            let e = Expr::default().add(1.0, z(j, s)).add(-1.0, yv.clone());
            writeln!(m, " lin_b_{tag}: {} >= 0", e.render()).unwrap();
            let e = Expr::default()
                .add(1.0, z(i, r))
                .add(1.0, z(j, s))
                .add(-1.0, yv.clone());
            writeln!(m, " lin_c_{tag}: {} <= 1", e.render()).unwrap();
            let e = Expr::default().add(1.0, xv.clone()).add(-mup(i, j), yv.clone());
            writeln!(m, " mup_{tag}: {} <= 0", e.render()).unwrap();
            let e = Expr::default().add(1.0, xv.clone()).add(-mlow(i, j), yv.clone());
            writeln!(m, " mlow_{tag}: {} >= 0", e.render()).unwrap();
            let term = PairTerm::<T>::of(g, i, j);
            for (p, &b) in opts.breakpoints.iter().enumerate() {
                let cut = TangentCut::from_term(i, j, &term, b);
                let e = Expr::default()
                    .add(1.0, xv.clone())
                    .add(-cut.slope.as_f64(), w(r, s))
                    .add(-mup(i, j), yv.clone());
                writeln!(
                    m,
                    " tan_{tag}_{}: {} >= {}",
                    p + 1,
                    e.render(),
                    num(cut.intercept.as_f64() - mup(i, j))
                )
                .unwrap();
            }
        }
    }

    writeln!(m, "Bounds").unwrap();
    for r in 0..k {
        for s in r..k {
            writeln!(
                m,
                " {} <= {} <= {}",
                num(bounds.omega_lower.as_f64()),
                w(r, s),
                num(bounds.omega_upper.as_f64())
            )
            .unwrap();
        }
    }
    for &(i, j) in &pairs {
        for &(r, s) in &cells {
            writeln!(m, " {} free", x(i, j, r, s)).unwrap();
        }
    }

    writeln!(m, "Binaries").unwrap();
    for i in 0..n {
        for r in 0..k {
            writeln!(m, " {}", z(i, r)).unwrap();
        }
    }
    for &(i, j) in &pairs {
        for &(r, s) in &cells {
            writeln!(m, " {}", y(i, j, r, s)).unwrap();
        }
    }
    writeln!(m, "End").unwrap();

    let mut c = String::new();
    writeln!(c, "# dcsbm cut recipe v1").unwrap();
    writeln!(c, "# epsilon {}", num(opts.epsilon.as_f64())).unwrap();
    writeln!(c, "# omega_lower {}", num(bounds.omega_lower.as_f64())).unwrap();
    writeln!(c, "# omega_upper {}", num(bounds.omega_upper.as_f64())).unwrap();
    let bp: Vec<String> = opts.breakpoints.iter().map(|b| num(b.as_f64())).collect();
    writeln!(c, "# breakpoints {}", bp.join(" ")).unwrap();
    writeln!(c, "# objective_constant {}", num(constant)).unwrap();
    writeln!(
        c,
        "# cut at w~: x_i_j_r_s - a w_r_s - Mup y_i_j_r_s >= b - Mup, a = -A/w~ + kikj_over_2m, b = A (1 - ln w~)"
    )
    .unwrap();
    writeln!(c, "# i j A_ij kikj_over_2m Mlow Mup").unwrap();
    for &(i, j) in &pairs {
        let t = PairTerm::<T>::of(g, i, j);
        writeln!(
            c,
            "{} {} {} {} {} {}",
            i + 1,
            j + 1,
            g.adj(i, j),
            num(t.rate.as_f64()),
            num(mlow(i, j)),
            num(mup(i, j))
        )
        .unwrap();
    }
    Ok(MilpExport { model: m, sidecar: c })
}
