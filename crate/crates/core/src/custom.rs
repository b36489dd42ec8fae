//! Offline analysis of a problem family and allocation-free online solves.
//!
//! A *family* fixes the dimensions, the cone and the sparsity patterns of
//! `Q`, `A` and `G`. [`analyze_family`] computes the fill-reducing ordering,
//! the symbolic factorization and the maps from data entries to KKT value
//! slots once; the resulting [`CustomizationPlan`] can be stored with
//! [`serialize_plan`] and turned into a [`SolverInstance`] that solves any
//! member of the family without further allocation.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::time::Duration;

use crate::cones::ConeSpec;
use crate::error::{Error, Result};
use crate::ipm::{Engine, MatrixId, ProblemData, Settings, SolveResult, Status};
use crate::kkt::{DataSlots, KktSystem};
use crate::sparse::{amd_order, symbolic_ldl, SparseCcs, SymbolicFactor};

const PLAN_MAGIC: &[u8; 4] = b"CFPL";
pub const PLAN_VERSION: u32 = 1;

fn pattern_of(m: &SparseCcs) -> SparseCcs {
    SparseCcs::new(
        m.nrows(),
        m.ncols(),
        m.col_offsets().to_vec(),
        m.row_indices().to_vec(),
        vec![0.0; m.nnz()],
    )
    .expect("a valid matrix has a valid pattern")
}

/// Dimensions, cone and sparsity patterns shared by a class of problems,
/// plus optional text labels for individual data entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFamily {
    n: usize,
    cone: ConeSpec,
    quad: SparseCcs,
    a: SparseCcs,
    g: SparseCcs,
    labels: BTreeMap<(MatrixId, usize), String>,
}

impl ProblemFamily {
    /// Patterns are taken structurally; their values are ignored.
    pub fn new(n: usize, cone: ConeSpec, quad: &SparseCcs, a: &SparseCcs, g: &SparseCcs) -> Result<Self> {
        if quad.nrows() != n || quad.ncols() != n {
            return Err(Error::Dimension(format!("Q pattern must be {n}x{n}")));
        }
        if a.ncols() != n || g.ncols() != n {
            return Err(Error::Dimension(format!("A and G patterns must have {n} columns")));
        }
        if g.nrows() != cone.dim() {
            return Err(Error::Dimension(format!(
                "G pattern has {} rows but the cone has dimension {}",
                g.nrows(),
                cone.dim()
            )));
        }
        if !quad.is_upper_triangular() {
            return Err(Error::InvalidProblem("Q pattern must be upper triangular".into()));
        }
        Ok(ProblemFamily {
            n,
            cone,
            quad: pattern_of(quad),
            a: pattern_of(a),
            g: pattern_of(g),
            labels: BTreeMap::new(),
        })
    }

    /// The family a concrete problem belongs to.
    pub fn from_problem(problem: &ProblemData) -> Self {
        ProblemFamily {
            n: problem.n(),
            cone: problem.cone().clone(),
            quad: pattern_of(problem.quad()),
            a: pattern_of(problem.a()),
            g: pattern_of(problem.g()),
            labels: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.a.nrows()
    }

    pub fn m(&self) -> usize {
        self.cone.dim()
    }

    pub fn cone(&self) -> &ConeSpec {
        &self.cone
    }

    pub fn pattern(&self, id: MatrixId) -> &SparseCcs {
        match id {
            MatrixId::Q => &self.quad,
            MatrixId::A => &self.a,
            MatrixId::G => &self.g,
        }
    }

    /// Attach a label to the structural entry `(row, col)` of a matrix.
    pub fn set_label(&mut self, id: MatrixId, row: usize, col: usize, label: impl Into<String>) -> Result<()> {
        let k = self
            .pattern(id)
            .find(row, col)
            .ok_or_else(|| Error::IndexOutOfRange(format!("{id}[{row},{col}] is not a structural entry")))?;
        self.labels.insert((id, k), label.into());
        Ok(())
    }

    pub fn label(&self, id: MatrixId, ccs_index: usize) -> Option<&str> {
        self.labels.get(&(id, ccs_index)).map(String::as_str)
    }

    /// Structural equality ignoring labels.
    pub fn same_structure(&self, other: &ProblemFamily) -> bool {
        self.n == other.n
            && self.cone == other.cone
            && self.quad.same_pattern(&other.quad)
            && self.a.same_pattern(&other.a)
            && self.g.same_pattern(&other.g)
    }

    /// Check that `problem` is an instance of this family.
    pub fn check_member(&self, problem: &ProblemData) -> Result<()> {
        if problem.n() != self.n || problem.p() != self.p() || problem.cone() != &self.cone {
            return Err(Error::FamilyMismatch("dimensions or cone differ".into()));
        }
        for id in [MatrixId::Q, MatrixId::A, MatrixId::G] {
            if !self.pattern(id).same_pattern(problem.matrix(id)) {
                return Err(Error::FamilyMismatch(format!("sparsity pattern of {id} differs")));
            }
        }
        Ok(())
    }

    fn kkt(&self, delta_s: f64) -> Result<KktSystem> {
        KktSystem::from_patterns(self.n, &self.cone, &self.quad, &self.a, &self.g, delta_s)
    }
}

/// Everything computed offline for a family.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomizationPlan {
    family: ProblemFamily,
    kkt_dim: usize,
    kkt_nnz: usize,
    sym: SymbolicFactor,
    data_slots: DataSlots,
    scaling_slots: Vec<usize>,
}

/// Order and symbolically factor the expanded KKT pattern of a family.
pub fn analyze_family(family: &ProblemFamily) -> Result<CustomizationPlan> {
    let kkt = family.kkt(Settings::default().delta_s)?;
    let perm = amd_order(kkt.matrix())?;
    let sym = symbolic_ldl(kkt.matrix(), &perm)?;
    let mut family = family.clone();
    family.labels.clear();
    Ok(CustomizationPlan {
        kkt_dim: kkt.dim(),
        kkt_nnz: kkt.matrix().nnz(),
        data_slots: kkt.data_slots().clone(),
        scaling_slots: kkt.scaling_slots().to_vec(),
        sym,
        family,
    })
}

impl CustomizationPlan {
    pub fn family(&self) -> &ProblemFamily {
        &self.family
    }

    pub fn kkt_dim(&self) -> usize {
        self.kkt_dim
    }

    /// Stored entries of the KKT upper triangle.
    pub fn kkt_nnz(&self) -> usize {
        self.kkt_nnz
    }

    /// Strictly-lower entries of the factor `L`.
    pub fn l_nnz(&self) -> usize {
        self.sym.l_nnz()
    }

    pub fn fill_in(&self) -> usize {
        self.sym.fill_in()
    }

    pub fn permutation(&self) -> &[usize] {
        self.sym.perm()
    }

    pub fn symbolic(&self) -> &SymbolicFactor {
        &self.sym
    }

    pub fn data_slots(&self) -> &DataSlots {
        &self.data_slots
    }

    pub fn scaling_slots(&self) -> &[usize] {
        &self.scaling_slots
    }
}

/// Assemble the KKT system of `problem` laid out as recorded in `plan`.
pub fn build_kkt(problem: &ProblemData, plan: &CustomizationPlan) -> Result<KktSystem> {
    plan.family.check_member(problem)?;
    let kkt = KktSystem::assemble(problem, Settings::default().delta_s)?;
    if kkt.dim() != plan.kkt_dim || kkt.data_slots() != &plan.data_slots || kkt.scaling_slots() != plan.scaling_slots {
        return Err(Error::FamilyMismatch("KKT layout differs from the plan".into()));
    }
    Ok(kkt)
}

// ---------------------------------------------------------------------------
// Binary plan format

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("plan sizes fit in u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn raw_u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn array(&mut self, a: &[usize]) {
        a.iter().for_each(|&v| self.u32(v));
    }

    fn counted(&mut self, a: &[usize]) {
        self.u32(a.len());
        self.array(a);
    }

    fn pattern(&mut self, m: &SparseCcs) {
        self.u32(m.nrows());
        self.u32(m.nnz());
        self.array(m.col_offsets());
        self.array(m.row_indices());
    }
}

pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub(crate) fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::Malformed(format!("truncated input at byte {} (needed {n} more)", self.pos))
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().unwrap()))
    }

    pub(crate) fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(8)?.try_into().unwrap()))
    }

    pub(crate) fn array(&mut self, n: usize) -> Result<Vec<usize>> {
        // Guard against absurd lengths before allocating.
        if n > self.buf.len() / 4 + 1 {
            return Err(Error::Malformed(format!("array length {n} exceeds input size")));
        }
        (0..n).map(|_| self.usize()).collect()
    }

    fn counted(&mut self) -> Result<Vec<usize>> {
        let n = self.usize()?;
        self.array(n)
    }

    fn pattern(&mut self, ncols: usize) -> Result<SparseCcs> {
        let nrows = self.usize()?;
        let nnz = self.usize()?;
        let offs = self.array(ncols + 1)?;
        let rows = self.array(nnz)?;
        SparseCcs::new(nrows, ncols, offs, rows, vec![0.0; nnz]).map_err(|e| Error::Malformed(e.to_string()))
    }

    pub(crate) fn finished(&self) -> bool {
        self.pos == self.buf.len()
    }
}

/// Split off and verify the trailing CRC32.
pub(crate) fn verify_crc(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < 4 {
        return Err(Error::Malformed("input shorter than its checksum".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    let computed = crc32fast::hash(body);
    if stored != computed {
        return Err(Error::Checksum { stored, computed });
    }
    Ok(body)
}

/// Versioned little-endian encoding with a CRC32 trailer.
pub fn serialize_plan(plan: &CustomizationPlan) -> Vec<u8> {
    let f = &plan.family;
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(PLAN_MAGIC);
    w.raw_u32(PLAN_VERSION);
    w.u32(plan.kkt_dim);
    w.u32(f.n);
    w.u32(f.p());
    w.u32(f.m());
    w.u32(f.cone.nn_count());
    w.u32(f.cone.soc_count());
    w.array(f.cone.soc_dims());
    w.array(plan.sym.perm());
    w.array(plan.sym.l_col_offsets());
    w.array(plan.sym.l_row_indices());
    let etree: Vec<usize> = plan.sym.etree().iter().map(|p| p.map_or(u32::MAX as usize, |v| v)).collect();
    w.array(&etree);
    w.counted(&plan.data_slots.q);
    w.counted(&plan.data_slots.a);
    w.counted(&plan.data_slots.g);
    w.counted(&plan.scaling_slots);
    w.pattern(&f.quad);
    w.pattern(&f.a);
    w.pattern(&f.g);
    let crc = crc32fast::hash(&w.0);
    w.raw_u32(crc);
    w.0
}

/// Decode and validate a plan. The symbolic analysis is recomputed from the
/// embedded family and must agree with the stored arrays.
pub fn deserialize_plan(bytes: &[u8]) -> Result<CustomizationPlan> {
    if bytes.len() < 8 || &bytes[..4] != PLAN_MAGIC {
        return Err(Error::Malformed("missing plan magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != PLAN_VERSION {
        return Err(Error::VersionMismatch { found: version, expected: PLAN_VERSION });
    }
    let body = verify_crc(bytes)?;
    let mut r = Reader::new(&body[8..]);
    let kkt_dim = r.usize()?;
    let n = r.usize()?;
    let p = r.usize()?;
    let m = r.usize()?;
    let l = r.usize()?;
    let n_soc = r.usize()?;
    let soc_dims = r.array(n_soc)?;
    let cone = ConeSpec::new(l, soc_dims).map_err(|e| Error::Malformed(e.to_string()))?;
    if cone.dim() != m {
        return Err(Error::Malformed("cone dimension disagrees with m".into()));
    }
    let perm = r.array(kkt_dim)?;
    let l_offsets = r.array(kkt_dim + 1)?;
    let l_rows = r.array(*l_offsets.last().unwrap_or(&0))?;
    let etree = r.array(kkt_dim)?;
    let slots = DataSlots { q: r.counted()?, a: r.counted()?, g: r.counted()? };
    let scaling_slots = r.counted()?;
    let quad = r.pattern(n)?;
    let a = r.pattern(n)?;
    let g = r.pattern(n)?;
    if !r.finished() {
        return Err(Error::Malformed("trailing bytes after plan body".into()));
    }
    if a.nrows() != p {
        return Err(Error::Malformed("A pattern disagrees with p".into()));
    }
    let family = ProblemFamily::new(n, cone, &quad, &a, &g).map_err(|e| Error::Malformed(e.to_string()))?;
    let kkt = family.kkt(Settings::default().delta_s)?;
    let sym = symbolic_ldl(kkt.matrix(), &perm).map_err(|e| Error::Malformed(e.to_string()))?;
    let stored_etree: Vec<Option<usize>> =
        etree.iter().map(|&v| (v != u32::MAX as usize).then_some(v)).collect();
    if kkt.dim() != kkt_dim
        || sym.l_col_offsets() != l_offsets
        || sym.l_row_indices() != l_rows
        || sym.etree() != stored_etree
        || kkt.data_slots() != &slots
        || kkt.scaling_slots() != scaling_slots
    {
        return Err(Error::Malformed("stored analysis does not match the embedded family".into()));
    }
    Ok(CustomizationPlan {
        kkt_nnz: kkt.matrix().nnz(),
        kkt_dim,
        sym,
        data_slots: slots,
        scaling_slots,
        family,
    })
}

// ---------------------------------------------------------------------------
// Parsing information

/// Location of one labelled data entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsingEntry {
    pub label: String,
    pub matrix: MatrixId,
    pub row: usize,
    pub col: usize,
    /// Index into the matrix's CCS value array.
    pub ccs_index: usize,
    /// Index into the KKT value array.
    pub kkt_slot: usize,
}

/// Bijection between labels and the structural entries of `Q`, `A` and `G`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsingInfo {
    entries: Vec<ParsingEntry>,
}

impl ParsingInfo {
    pub fn entries(&self) -> &[ParsingEntry] {
        &self.entries
    }

    pub fn get(&self, label: &str) -> Option<&ParsingEntry> {
        self.entries.iter().find(|e| e.label == label)
    }

    /// One tab-separated line per entry:
    /// `label, matrix, row, col, ccs_index, kkt_slot`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(s, "{}\t{}\t{}\t{}\t{}\t{}", e.label, e.matrix, e.row, e.col, e.ccs_index, e.kkt_slot);
        }
        s
    }
}

/// Parsing information for `family` under `plan`. Unlabelled entries get
/// labels of the form `Q[i,j]`.
pub fn emit_parsing_info(family: &ProblemFamily, plan: &CustomizationPlan) -> Result<ParsingInfo> {
    if !family.same_structure(&plan.family) {
        return Err(Error::FamilyMismatch("family differs from the plan".into()));
    }
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (id, slots) in [
        (MatrixId::Q, &plan.data_slots.q),
        (MatrixId::A, &plan.data_slots.a),
        (MatrixId::G, &plan.data_slots.g),
    ] {
        for (row, col, k) in family.pattern(id).entries() {
            let label = family.label(id, k).map_or_else(|| format!("{id}[{row},{col}]"), str::to_owned);
            if !seen.insert(label.clone()) {
                return Err(Error::DuplicateLabel(label));
            }
            entries.push(ParsingEntry { label, matrix: id, row, col, ccs_index: k, kkt_slot: slots[k] });
        }
    }
    Ok(ParsingInfo { entries })
}

// ---------------------------------------------------------------------------
// Online solver

/// A solver for one family with every workspace sized at construction.
#[derive(Debug, Clone)]
pub struct SolverInstance {
    family: ProblemFamily,
    problem: ProblemData,
    engine: Engine,
}

/// Build a [`SolverInstance`] from a plan.
pub fn instantiate(plan: &CustomizationPlan, settings: &Settings) -> Result<SolverInstance> {
    let f = &plan.family;
    let kkt = f.kkt(settings.delta_s)?;
    let engine = Engine::new(kkt, plan.sym.clone(), *settings)?;
    let problem = ProblemData::new(
        f.quad.clone(),
        vec![0.0; f.n],
        f.a.clone(),
        vec![0.0; f.p()],
        f.g.clone(),
        vec![0.0; f.m()],
        f.cone.clone(),
    )?;
    Ok(SolverInstance { family: f.clone(), problem, engine })
}

impl SolverInstance {
    /// Copy the data of a family member into the instance.
    pub fn load_instance(&mut self, problem: &ProblemData) -> Result<()> {
        self.family.check_member(problem)?;
        self.problem.copy_values_from(problem);
        Ok(())
    }

    /// The currently loaded data.
    pub fn problem(&self) -> &ProblemData {
        &self.problem
    }

    /// Update one matrix entry by CCS index (see [`ParsingInfo`]).
    pub fn set_matrix_value(&mut self, id: MatrixId, ccs_index: usize, value: f64) -> Result<()> {
        self.problem.set_matrix_value(id, ccs_index, value)
    }

    pub fn q_mut(&mut self) -> &mut [f64] {
        self.problem.q_mut()
    }

    pub fn b_mut(&mut self) -> &mut [f64] {
        self.problem.b_mut()
    }

    pub fn h_mut(&mut self) -> &mut [f64] {
        self.problem.h_mut()
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn engine_mut(&mut self) -> &mut Engine {
        &mut self.engine
    }

    /// Solve the loaded instance and return only the status. Allocation-free.
    pub fn solve_status(&mut self) -> Status {
        self.engine.load(&self.problem);
        self.engine.run_status(&self.problem)
    }

    /// Solve the loaded instance.
    pub fn solve(&mut self) -> SolveResult {
        let start = std::time::Instant::now();
        let status = self.solve_status();
        let elapsed: Duration = start.elapsed();
        self.engine.result(&self.problem, status, elapsed)
    }

    /// Total workspace capacity in elements; constant after construction.
    pub fn workspace_capacity(&self) -> usize {
        self.engine.workspace_capacity()
    }
}
