//! Configuration-driven suite runner behind `btlab run`.
//!
//! Sampling uses ChaCha8 seeded with `seed_from_u64(seed)`; all check logic
//! is independent of the wall clock.

use std::io::Write as _;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coeff::{system_window, CoeffSystem, SystemKind};
use crate::error::{BtError, Result};
use crate::hecke::{
    coset_decompose, convolve, hecke_act, kernel_window_check, packet_invariants, DoubleCoset, HeckeElement,
    HeckeOperatorSpec, Induction,
};
use crate::linalg::Lambda;
use crate::localfield::{is_prime, LocalField, LocalFieldSpec};
use crate::locaut::{check_presentation, conjugate_index, is_p_power, AutCtx};
use crate::phigamma::{build_pair, check_etale, generator_bound, halftree_window, iwasawa_vs_group, qp_fact_check, IwasawaTruncSpec};
use crate::report::{emit_report, CheckRecord, Format, Report, Status};
use crate::tree::{tree_for_depth, Center, Edge, Tree, Vertex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SuiteName {
    Tree,
    Locaut,
    Homology,
    Hecke,
    Etale,
    Iwasawa,
    All,
}

impl SuiteName {
    fn as_str(&self) -> &'static str {
        match self {
            SuiteName::Tree => "tree",
            SuiteName::Locaut => "locaut",
            SuiteName::Homology => "homology",
            SuiteName::Hecke => "hecke",
            SuiteName::Etale => "etale",
            SuiteName::Iwasawa => "iwasawa",
            SuiteName::All => "all",
        }
    }
}

fn d_p() -> u32 {
    2
}
fn d_one() -> u32 {
    1
}
fn d_depth() -> u32 {
    4
}
fn d_margin() -> u32 {
    2
}
fn d_lambda() -> Vec<u64> {
    vec![0, 1]
}
fn d_systems() -> Vec<SystemKind> {
    vec![SystemKind::Constant, SystemKind::Steinberg]
}
fn d_m() -> Vec<u32> {
    vec![1, 2]
}
fn d_degree() -> u32 {
    4
}
fn d_cap() -> usize {
    2_000_000
}
fn d_samples() -> usize {
    16
}
fn d_r() -> u32 {
    2
}

/// Suite parameters; every field has a default so an empty file is valid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default)]
    pub suite: Option<SuiteName>,
    #[serde(default = "d_p")]
    pub p: u32,
    /// Residue degree; q = p^f.
    #[serde(default = "d_one")]
    pub f: u32,
    /// Use F_q((t)) instead of a p-adic field.
    #[serde(default)]
    pub equal_char: bool,
    #[serde(default = "d_one")]
    pub e: u32,
    #[serde(default = "d_depth")]
    pub depth: u32,
    /// Depth lost at the window boundary in invariant computations.
    #[serde(default = "d_margin")]
    pub margin: u32,
    /// Coefficients in Z/p^r.
    #[serde(default = "d_one")]
    pub r: u32,
    #[serde(default = "d_lambda")]
    pub lambda: Vec<u64>,
    #[serde(default = "d_systems")]
    pub systems: Vec<SystemKind>,
    #[serde(default = "d_m")]
    pub m: Vec<u32>,
    /// Top level K of the Iwasawa truncation.
    #[serde(default = "d_one", rename = "K")]
    pub top: u32,
    /// Coefficient exponent for the Iwasawa and Hecke module checks.
    #[serde(default = "d_r")]
    pub iwasawa_r: u32,
    #[serde(default = "d_degree")]
    pub degree: u32,
    #[serde(default = "d_cap")]
    pub cap: usize,
    #[serde(default = "d_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

impl SuiteConfig {
    pub fn q(&self) -> u32 {
        self.p.pow(self.f)
    }

    /// Feasibility table: q <= 9, depth <= 6, e <= 3, r <= 3.
    pub fn validate(&self) -> Result<()> {
        if !is_prime(self.p) {
            return Err(BtError::Config(format!("p = {} is not prime", self.p)));
        }
        if self.f == 0 || self.q() > 9 {
            return Err(BtError::Config("need 1 <= q = p^f <= 9".into()));
        }
        if self.f > 1 && !self.equal_char {
            return Err(BtError::Config("f > 1 needs equal_char = true".into()));
        }
        if self.e == 0 || self.e > 3 {
            return Err(BtError::Config("e must be in 1..=3".into()));
        }
        if self.depth < 3 || self.depth > 6 {
            return Err(BtError::Config("depth must be in 3..=6".into()));
        }
        if self.margin >= self.depth {
            return Err(BtError::Config("margin must be below depth".into()));
        }
        if self.r == 0 || self.r > 3 || self.iwasawa_r == 0 || self.iwasawa_r > 3 {
            return Err(BtError::Config("r must be in 1..=3".into()));
        }
        if let Some(l) = self.lambda.iter().find(|&&l| l >= self.p as u64) {
            return Err(BtError::Config(format!("lambda = {l} is not a residue mod p")));
        }
        if self.m.iter().any(|&m| m > 3) {
            return Err(BtError::Config("m must be at most 3".into()));
        }
        Ok(())
    }

    pub fn field(&self) -> Result<Arc<LocalField>> {
        let n = 3 * self.depth + 20;
        let spec = if self.equal_char { LocalFieldSpec::fq(self.p, self.f, n) } else { LocalFieldSpec::qp(self.p, n) };
        Ok(Arc::new(LocalField::new(spec)?))
    }
}

#[derive(Parser, Debug)]
#[command(name = "btlab", version, about = "Exact verification suites on the Bruhat-Tits tree")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a verification suite and print its report.
    Run {
        #[arg(long, value_enum)]
        suite: SuiteName,
        /// TOML file with suite parameters.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Record wall-clock runtimes (reports are then not byte-stable).
        #[arg(long)]
        timings: bool,
    },
}

struct Runner<'a> {
    report: Report,
    timings: bool,
    cfg: &'a SuiteConfig,
}

impl Runner<'_> {
    fn check(&mut self, name: &str, anchor: &str, f: impl FnOnce() -> Result<(bool, Option<String>)>) {
        self.push(name, anchor, false, f)
    }

    fn explore(&mut self, name: &str, anchor: &str, f: impl FnOnce() -> Result<(bool, Option<String>)>) {
        self.push(name, anchor, true, f)
    }

    fn push(&mut self, name: &str, anchor: &str, exploratory: bool, f: impl FnOnce() -> Result<(bool, Option<String>)>) {
        let st = Instant::now();
        let out = f();
        let runtime_ms = if self.timings { st.elapsed().as_millis() as u64 } else { 0 };
        let (status, witness) = match out {
            Ok((_, w)) if exploratory => (Status::Exploratory, w),
            Ok((true, w)) => (Status::Pass, w),
            Ok((false, w)) => (Status::Fail, w),
            Err(BtError::CapExceeded { cap }) => (Status::Capped, Some(format!("cap {cap}"))),
            Err(e) if exploratory => (Status::Exploratory, Some(e.to_string())),
            Err(e) => (Status::Fail, Some(e.to_string())),
        };
        self.report.checks.push(CheckRecord { name: name.into(), anchor: anchor.into(), status, witness, runtime_ms });
    }
}

pub fn run_suite(cfg: &SuiteConfig, suite: SuiteName, seed: u64, timings: bool) -> Result<Report> {
    cfg.validate()?;
    let params = serde_json::to_value(cfg).map_err(|e| BtError::Config(e.to_string()))?;
    let mut run = Runner { report: Report::new(suite.as_str(), params, seed), timings, cfg };
    let k = cfg.field()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = suite == SuiteName::All;
    if all || suite == SuiteName::Tree {
        tree_suite(&mut run, &k, &mut rng)?;
    }
    if all || suite == SuiteName::Locaut {
        locaut_suite(&mut run, &k)?;
    }
    if all || suite == SuiteName::Homology {
        homology_suite(&mut run, &k)?;
    }
    if all || suite == SuiteName::Hecke {
        hecke_suite(&mut run, &k, &mut rng)?;
    }
    if all || suite == SuiteName::Etale {
        etale_suite(&mut run, &k)?;
    }
    if all || suite == SuiteName::Iwasawa {
        iwasawa_suite(&mut run)?;
    }
    run.report.finish();
    Ok(run.report)
}

fn tree_suite(run: &mut Runner, k: &Arc<LocalField>, rng: &mut ChaCha8Rng) -> Result<()> {
    let cfg = run.cfg;
    let tree = tree_for_depth(k.clone(), cfg.depth)?;
    run.check("tree.metric", "tree metric", || {
        let w = tree.sigma_ball(cfg.depth)?;
        for i in 0..w.len() {
            let b = w.bfs(i);
            for j in 0..w.len() {
                if b[j] != tree.distance(&w.verts[i], &w.verts[j]) {
                    return Ok((false, Some(format!("{} {}", w.verts[i], w.verts[j]))));
                }
            }
        }
        Ok((true, Some(format!("{} vertices", w.len()))))
    });
    run.check("tree.neighbors", "(q+1)-regular tree", || {
        let w = tree.sigma_ball(cfg.depth - 1)?;
        for v in &w.verts {
            let mut nb = tree.neighbors(v)?;
            nb.sort();
            nb.dedup();
            if nb.len() != tree.q() as usize + 1 || !nb.contains(&v.parent()) {
                return Ok((false, Some(format!("{v}"))));
            }
        }
        Ok((true, None))
    });
    let samples: Vec<(usize, usize, u8, u32)> = (0..cfg.samples)
        .map(|_| (rng.gen::<usize>(), rng.gen::<usize>(), rng.gen::<u8>(), rng.gen_range(0..4)))
        .collect();
    run.check("tree.isometry", "action by isometries", || {
        let w = tree.sigma_ball(cfg.depth - 2)?;
        for &(a, b, c, which) in &samples {
            let x = &w.verts[a % w.len()];
            let y = &w.verts[b % w.len()];
            let digit = c % tree.q() as u8;
            let g = match which {
                0 => tree.n_mat(tree.k.fe_digit(digit, 0, tree.n)),
                1 => tree.w_mat(),
                2 => tree.nlow_mat(tree.k.fe_digit(digit, 1, tree.n)),
                _ => tree.s_mat(),
            };
            if tree.distance(&tree.act(&g, x)?, &tree.act(&g, y)?) != tree.distance(x, y) {
                return Ok((false, Some(format!("{x} {y}"))));
            }
        }
        Ok((true, Some(format!("{} samples", samples.len()))))
    });
    Ok(())
}

fn locaut_suite(run: &mut Runner, k: &Arc<LocalField>) -> Result<()> {
    let cfg = run.cfg;
    let q = cfg.q() as u64;
    for &m in &cfg.m {
        let name = format!("locaut.pro_p.m{m}");
        run.check(&name, "pro-p closure image", || {
            let d = m + cfg.e + 1;
            let tree = Arc::new(tree_for_depth(k.clone(), d)?);
            let ctx = AutCtx::new(tree, cfg.e, d)?;
            let gens = ctx.standard_gens()?;
            let order = ctx.closure_image_order(&gens, m, cfg.cap)?;
            Ok((is_p_power(order as usize, cfg.p as usize), Some(format!("order {order}"))))
        });
        let name = format!("locaut.index.m{m}");
        run.check(&name, "conjugate subgroup index", || {
            let tree = tree_for_depth(k.clone(), m + cfg.e + 2)?;
            let idx = conjugate_index(k, &tree, cfg.e, m, cfg.cap)?;
            let formula: u64 = (0..m).map(|j| q.pow(cfg.e + j)).product();
            Ok((idx == formula, Some(format!("index {idx}, formula {formula}"))))
        });
    }
    run.check("locaut.presentation", "hat group presentation", || {
        let r = check_presentation(k.clone(), cfg.e, 1, cfg.cap)?;
        Ok((r.ok, Some(format!("order {} image {} kernel {}", r.order, r.image, r.kernel))))
    });
    run.check("locaut.branch", "branch automorphisms", || {
        let d = cfg.e + 3;
        let tree = Arc::new(tree_for_depth(k.clone(), d)?);
        let ctx = AutCtx::new(tree, cfg.e, d)?;
        let br = ctx.branch_auts(&Center::Edge(Edge::sigma()), 2)?;
        let mut ok = 0;
        for b in &br {
            if ctx.in_hat_u(b, cfg.cap)? && ctx.is_locally_algebraic(b)?.0 {
                ok += 1;
            }
        }
        Ok((ok == br.len(), Some(format!("{ok}/{}", br.len()))))
    });
    Ok(())
}

fn lambda(cfg: &SuiteConfig, r: u32) -> Result<Lambda> {
    Lambda::new(cfg.p as u64, r)
}

fn homology_suite(run: &mut Runner, k: &Arc<LocalField>) -> Result<()> {
    let cfg = run.cfg;
    let l = lambda(cfg, cfg.r)?;
    let inner = cfg.depth - cfg.margin;
    let ctx_depth = cfg.depth.max(inner + cfg.e + 1);
    let tree = Arc::new(tree_for_depth(k.clone(), ctx_depth.max(cfg.e + 2))?);
    for &kind in &cfg.systems {
        let sys = format!("{kind:?}").to_lowercase();
        if kind != SystemKind::Constant && cfg.e != 1 {
            run.explore(&format!("homology.{sys}.level"), "coefficient system axioms", || {
                Ok((false, Some("representation systems are built at level 1 only".into())))
            });
            continue;
        }
        let build = |c: Center, r: u32| -> Result<CoeffSystem> {
            CoeffSystem::build(tree.clone(), kind, None, cfg.e, system_window(&tree, c, r)?, l)
        };
        run.check(&format!("homology.{sys}.axioms"), "coefficient system axioms", || {
            let f = build(Center::Edge(Edge::sigma()), cfg.depth)?;
            let a = f.check_c_axioms(cfg.e)?;
            Ok((a.pass, Some(format!("{} simplices", a.checks.len()))))
        });
        run.check(&format!("homology.{sys}.hypotheses"), "coefficient system hypotheses", || {
            let f = build(Center::Edge(Edge::sigma()), cfg.depth)?;
            let h = f.check_hyp123()?;
            Ok((h.pass, (!h.witnesses.is_empty()).then(|| h.witnesses.join("; "))))
        });
        run.check(&format!("homology.{sys}.hat_invariants"), "hat invariants of homology", || {
            let ctx = AutCtx::new(tree.clone(), cfg.e, cfg.depth)?;
            let f = build(Center::Edge(Edge::sigma()), inner)?;
            let h = f.homology();
            let r = f.hat_invariants(&ctx, &h, &Center::Edge(Edge::sigma()))?;
            Ok((r.bijective, Some(format!("F(sigma) {} invariants {}", r.f_len, r.inv_len))))
        });
        run.check(&format!("homology.{sys}.roundtrip"), "homology roundtrip", || {
            let ctx = AutCtx::new_at(tree.clone(), cfg.e, ctx_depth, Center::Vertex(Vertex::x_plus()))?;
            let f = build(Center::Vertex(Vertex::x_plus()), inner)?;
            let r = f.roundtrip(&ctx)?;
            Ok((r.pass, Some(format!("H0 length {}", r.h0_len))))
        });
    }
    run.check("homology.doubled_vertex_rejected", "doubled vertex counterexample", || {
        let f = CoeffSystem::build(tree.clone(), SystemKind::Constant, None, cfg.e, tree.sigma_ball(cfg.e + 2)?, l)?;
        let a = f.with_doubled_vertex(0).check_c_axioms(cfg.e)?;
        Ok((!a.checks.is_empty() && !a.pass, Some(format!("{} simplices", a.checks.len()))))
    });
    Ok(())
}

fn hecke_suite(run: &mut Runner, k: &Arc<LocalField>, rng: &mut ChaCha8Rng) -> Result<()> {
    let cfg = run.cfg;
    if cfg.e != 1 {
        run.explore("hecke.level", "double coset decomposition", || {
            Ok((false, Some("Hecke checks run at level 1 only".into())))
        });
        return Ok(());
    }
    let l = lambda(cfg, 1)?;
    let tree = Arc::new(tree_for_depth(k.clone(), cfg.depth.max(4) + 2)?);
    let res = Arc::new(tree.k.res.clone());
    run.check("hecke.cosets.t", "double coset decomposition", || {
        let n = coset_decompose(&tree, &tree.t_pow(1), cfg.e, cfg.cap)?.len();
        let expect = cfg.q() as usize;
        Ok((n == expect, Some(format!("{n} cosets"))))
    });
    run.check("hecke.module_law", "hecke module law", || module_law(cfg, &tree));
    for &lam in &cfg.lambda {
        run.check(&format!("hecke.kernel.lambda{lam}"), "kernel of T minus lambda", || {
            let ind = Induction::new(tree.clone(), tree.sigma_ball(cfg.depth)?, HeckeOperatorSpec::trivial(res.clone(), l))?;
            let w2 = tree.sigma_ball(2)?;
            let mut n = 0;
            for &(h, _) in &w2.edges {
                let eta = Edge { head: w2.verts[h].clone() };
                if !kernel_window_check(&ind, lam, &eta)? {
                    return Ok((false, Some(format!("{eta}"))));
                }
                n += 1;
            }
            Ok((true, Some(format!("{n} edges"))))
        });
        run.check(&format!("hecke.packet.lambda{lam}"), "supersingular packet invariants", || {
            let mut dims = Vec::new();
            let mut ok = true;
            for d in [cfg.depth.max(4) - 1, cfg.depth.max(4)] {
                let ctx = AutCtx::new(tree.clone(), 1, d + 2)?;
                let ind = Induction::new(tree.clone(), tree.sigma_ball(d)?, HeckeOperatorSpec::trivial(res.clone(), l))?;
                let (r, _) = packet_invariants(&ind, &ctx, lam)?;
                ok &= r.pass;
                dims.push(r.invariant_len);
            }
            ok &= dims.windows(2).all(|w| w[0] == w[1]);
            Ok((ok, Some(format!("dimensions {dims:?}"))))
        });
    }
    let pick: Vec<usize> = (0..cfg.samples).map(|_| rng.gen()).collect();
    run.check("hecke.t_equivariance", "T equivariance", || {
        let d = cfg.depth - 1;
        let ctx = AutCtx::new(tree.clone(), 1, d + 2)?;
        let ind = Induction::new(tree.clone(), tree.sigma_ball(d)?, HeckeOperatorSpec::trivial(res.clone(), l))?;
        let gens = ctx.standard_gens()?;
        let t = ind.t_minus_lambda(0, d - 1)?;
        let n_in = t.cols;
        for &s in &pick {
            let a = &gens[s % gens.len()];
            let m = ind.hat_action(&ctx, a)?;
            let lhs = m.mul(&l, &t);
            let rhs = t.mul(&l, &m.select_rows(&(0..n_in).collect::<Vec<_>>()).select_cols(&(0..n_in).collect::<Vec<_>>()));
            if lhs != rhs {
                return Ok((false, Some(format!("generator {}", s % gens.len()))));
            }
        }
        Ok((true, Some(format!("{} samples", pick.len()))))
    });
    Ok(())
}

/// (v.A).B = v.(A*B) for A, B in {UtU, Ut^-1U} on the constant and
/// Steinberg systems.
fn module_law(cfg: &SuiteConfig, tree: &Arc<Tree>) -> Result<(bool, Option<String>)> {
    let l = lambda(cfg, cfg.iwasawa_r)?;
    let cosets = [DoubleCoset::new(tree, tree.t_pow(1), 1)?, DoubleCoset::new(tree, tree.t_pow(-1), 1)?];
    let mut n = 0;
    for kind in [SystemKind::Constant, SystemKind::Steinberg] {
        let f = CoeffSystem::build(tree.clone(), kind, None, 1, tree.sigma_ball(3)?, l)?;
        let h = f.homology();
        let i = f.sigma_edge()?;
        let xp = f.win.idx(&Vertex::x_plus()).unwrap();
        let vo = f.voffsets();
        let r = f.transition(i, xp);
        for c in 0..r.cols {
            let mut chain = vec![0u64; h.bd.rows];
            for a in 0..r.rows {
                chain[vo[xp] + a] = r.get(a, c);
            }
            let v = h.h0.project(&l, &chain);
            for a in &cosets {
                for b in &cosets {
                    let va = hecke_act(&f, &h, &v, a)?;
                    let lhs = hecke_act(&f, &h, &va, b)?;
                    let ab = convolve(tree, &l, &HeckeElement::single(a.clone()), &HeckeElement::single(b.clone()))?;
                    let mut rhs = vec![0u64; h.h0.dim()];
                    for (cc, coef) in &ab.terms {
                        let w = hecke_act(&f, &h, &v, cc)?;
                        for (x, y) in rhs.iter_mut().zip(&w) {
                            *x = l.add(*x, l.mul(*coef, *y));
                        }
                    }
                    let rhs = h.h0.project(&l, &h.h0.lift(&l, &rhs));
                    if lhs != rhs {
                        return Ok((false, Some(format!("{kind:?}"))));
                    }
                    n += 1;
                }
            }
        }
    }
    Ok((true, Some(format!("{n} instances"))))
}

fn etale_suite(run: &mut Runner, k: &Arc<LocalField>) -> Result<()> {
    let cfg = run.cfg;
    let l = lambda(cfg, cfg.r)?;
    let maxm = cfg.m.iter().copied().max().unwrap_or(1);
    let tree = Arc::new(tree_for_depth(k.clone(), maxm + 4)?);
    for &kind in &cfg.systems {
        let sys = format!("{kind:?}").to_lowercase();
        for &m in &cfg.m {
            run.check(&format!("etale.{sys}.m{m}"), "etale pair", || {
                let f = CoeffSystem::build(tree.clone(), kind, None, 1, halftree_window(&tree, m + 3)?, l)?;
                let pair = build_pair(&f)?;
                let r = check_etale(&pair, m)?;
                let s = pair.summary();
                Ok((r.pass && s.exact, Some(format!("|D| {} |D'| {} coker {}", s.d_len, s.dprime_len, s.coker_len))))
            });
        }
        run.check(&format!("etale.{sys}.generators"), "generator bound", || {
            let f = CoeffSystem::build(tree.clone(), kind, None, 1, halftree_window(&tree, 3)?, l)?;
            let pair = build_pair(&f)?;
            let ctx = AutCtx::new(tree.clone(), 1, 5)?;
            let g = generator_bound(&pair, &ctx)?;
            Ok((g.pass, Some(format!("n {} generated {}/{}", g.n, g.generated_len, g.d_len))))
        });
        let f = CoeffSystem::build(tree.clone(), kind, None, 1, halftree_window(&tree, 3)?, l)?;
        let qp = |f: &CoeffSystem| -> Result<(bool, Option<String>)> {
            let r = qp_fact_check(&build_pair(f)?)?;
            Ok((r.equal, Some(format!("F(sigma) {} invariants {}", r.fsig_len, r.invariant_len))))
        };
        if f.tree.k.mixed() && f.tree.q() == f.tree.k.p() {
            run.check(&format!("etale.{sys}.qp_fact"), "invariants of the Q_p factor", || qp(&f));
        } else {
            run.explore(&format!("etale.{sys}.qp_fact"), "invariants of the Q_p factor", || qp(&f));
        }
    }
    Ok(())
}

fn iwasawa_suite(run: &mut Runner) -> Result<()> {
    let cfg = run.cfg;
    let spec = IwasawaTruncSpec { p: cfg.p as u64, top: cfg.top, r: cfg.iwasawa_r, degree: cfg.degree, e: cfg.e };
    let rep = match iwasawa_vs_group(&spec) {
        Ok(r) => r,
        Err(e) => {
            run.check("iwasawa.relations", "iwasawa commutation relation", || Err(e));
            return Ok(());
        }
    };
    for (i, rel) in rep.relations.iter().enumerate() {
        let anchor = if rel.kind == "quotient" { "iwasawa quotient relation" } else { "iwasawa commutation relation" };
        run.check(&format!("iwasawa.{}.{i:03}", rel.kind), anchor, || Ok((rel.pass, Some(rel.name.clone()))));
    }
    run.check("iwasawa.normal_forms", "iwasawa normal form", || {
        Ok((rep.normal_form_pass, Some(format!("{} words", rep.normal_forms_checked))))
    });
    run.explore("iwasawa.literal_u_form", "iwasawa literal U-form", || {
        Ok((rep.literal_u_failures == 0, Some(format!("{}/{} relations fail in U-form", rep.literal_u_failures, rep.literal_u_total))))
    });
    Ok(())
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    match cli.command {
        Command::Run { suite, config, seed, format, timings } => {
            let cfg = match config {
                Some(path) => match std::fs::read_to_string(&path)
                    .map_err(|e| BtError::Config(format!("{}: {e}", path.display())))
                    .and_then(|s| toml::from_str::<SuiteConfig>(&s).map_err(|e| BtError::Config(e.to_string())))
                {
                    Ok(c) => c,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return 2;
                    }
                },
                None => SuiteConfig::default(),
            };
            let seed = seed.or(cfg.seed).unwrap_or(0);
            match run_suite(&cfg, suite, seed, timings).and_then(|r| Ok((emit_report(&r, format)?, r.all_pass()))) {
                Ok((out, ok)) => {
                    let nl = if format == Format::Json { "\n" } else { "" };
                    // a closed pipe is not an error for a report printer
                    let _ = std::io::stdout().write_all(format!("{out}{nl}").as_bytes());
                    i32::from(!ok)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    2
                }
            }
        }
    }
}
