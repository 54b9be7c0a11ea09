//! Wavelength- and space-division scheduling of matrix products.
//!
//! Data rows ride on wavelengths, weight rows on spatial channels (one weight
//! modulator each). All wavelengths in a spatial channel pass through the
//! same weight modulator and are separated by a demultiplexer before
//! detection.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::engine::{detect_frame, optical_frame, weighted_sum_keyed, PhotonicEngine};
use crate::error::{Error, Result};
use crate::signal::Waveform;

/// One `(data row, weight row)` product placed on a channel and time slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Assignment {
    pub data_row: usize,
    pub weight_row: usize,
    pub wavelength: usize,
    pub spatial: usize,
    pub slot: usize,
}

/// Tiling of an `M x N` by `L x N` product over channels and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelPlan {
    pub n_data_rows: usize,
    pub n_inputs: usize,
    pub n_weight_rows: usize,
    pub n_wavelengths: usize,
    pub n_spatial: usize,
    pub assignments: Vec<Assignment>,
    /// Demultiplexer leakage in dB; `-inf` (JSON `null`) is an ideal demux.
    #[serde(serialize_with = "ser_db", deserialize_with = "de_db")]
    pub crosstalk_db: f64,
}

fn ser_db<S: Serializer>(db: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if db.is_finite() {
        s.serialize_f64(*db)
    } else {
        s.serialize_none()
    }
}

fn de_db<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
}

impl ChannelPlan {
    pub fn n_slots(&self) -> usize {
        self.n_data_rows.div_ceil(self.n_wavelengths) * self.n_weight_rows.div_ceil(self.n_spatial)
    }

    /// Largest number of assignments sharing a time slot.
    pub fn parallel_channels(&self) -> usize {
        let mut per_slot = vec![0usize; self.n_slots()];
        for a in &self.assignments {
            if let Some(c) = per_slot.get_mut(a.slot) {
                *c += 1;
            }
        }
        per_slot.into_iter().max().unwrap_or(0)
    }

    /// Intensity leakage coefficient between co-propagating wavelengths.
    pub fn leakage(&self) -> f64 {
        10f64.powf(self.crosstalk_db / 10.0)
    }

    pub fn with_crosstalk(mut self, crosstalk_db: f64) -> Result<Self> {
        if crosstalk_db.is_nan() || crosstalk_db > 0.0 {
            return Err(Error::Config(format!(
                "crosstalk_db must be non-positive or -inf, got {crosstalk_db}"
            )));
        }
        self.crosstalk_db = crosstalk_db;
        Ok(self)
    }
}

/// Row-major greedy tiling: data row `m` goes to wavelength `m % w`, weight
/// row `l` to spatial channel `l % s`, and the pair of blocks `(m / w, l / s)`
/// picks the time slot.
pub fn plan_matmul(
    m: usize,
    n: usize,
    l: usize,
    n_wavelengths: usize,
    n_spatial: usize,
) -> Result<ChannelPlan> {
    if m == 0 || n == 0 || l == 0 || n_wavelengths == 0 || n_spatial == 0 {
        return Err(Error::Config(format!(
            "plan sizes must be positive: M={m} N={n} L={l} wavelengths={n_wavelengths} spatial={n_spatial}"
        )));
    }
    let l_blocks = l.div_ceil(n_spatial);
    let assignments = (0..m)
        .flat_map(|i| (0..l).map(move |j| (i, j)))
        .map(|(i, j)| Assignment {
            data_row: i,
            weight_row: j,
            wavelength: i % n_wavelengths,
            spatial: j % n_spatial,
            slot: (i / n_wavelengths) * l_blocks + j / n_spatial,
        })
        .collect();
    Ok(ChannelPlan {
        n_data_rows: m,
        n_inputs: n,
        n_weight_rows: l,
        n_wavelengths,
        n_spatial,
        assignments,
        crosstalk_db: f64::NEG_INFINITY,
    })
}

/// Checks completeness, channel exclusivity and the slot count.
pub fn validate_plan(plan: &ChannelPlan) -> Result<()> {
    let (m, l) = (plan.n_data_rows, plan.n_weight_rows);
    if m == 0 || l == 0 || plan.n_inputs == 0 || plan.n_wavelengths == 0 || plan.n_spatial == 0 {
        return Err(Error::Config("plan sizes must be positive".into()));
    }
    if plan.crosstalk_db.is_nan() || plan.crosstalk_db > 0.0 {
        return Err(Error::Config(format!(
            "crosstalk_db {} is positive",
            plan.crosstalk_db
        )));
    }
    let slots = plan.n_slots();
    let mut seen_pair = vec![false; m * l];
    let mut seen_channel = vec![false; slots * plan.n_wavelengths * plan.n_spatial];
    let mut max_slot = 0;
    for a in &plan.assignments {
        if a.data_row >= m || a.weight_row >= l {
            return Err(Error::dim(format!("assignment {a:?} outside {m}x{l}")));
        }
        if a.wavelength >= plan.n_wavelengths || a.spatial >= plan.n_spatial || a.slot >= slots {
            return Err(Error::Config(format!(
                "assignment {a:?} outside the channel grid"
            )));
        }
        let pair = a.data_row * l + a.weight_row;
        if std::mem::replace(&mut seen_pair[pair], true) {
            return Err(Error::Config(format!(
                "pair ({}, {}) assigned twice",
                a.data_row, a.weight_row
            )));
        }
        let ch = (a.slot * plan.n_wavelengths + a.wavelength) * plan.n_spatial + a.spatial;
        if std::mem::replace(&mut seen_channel[ch], true) {
            return Err(Error::Config(format!(
                "wavelength {} / spatial {} used twice in slot {}",
                a.wavelength, a.spatial, a.slot
            )));
        }
        max_slot = max_slot.max(a.slot);
    }
    if let Some(missing) = seen_pair.iter().position(|&s| !s) {
        return Err(Error::Config(format!(
            "pair ({}, {}) never assigned",
            missing / l,
            missing % l
        )));
    }
    if max_slot + 1 != slots {
        return Err(Error::Config(format!(
            "plan uses {} slots, expected {slots}",
            max_slot + 1
        )));
    }
    Ok(())
}

fn add_leak(target: &Waveform, others: &[&Waveform], k: f64) -> Result<Waveform> {
    let mut s = target.samples().to_vec();
    for o in others {
        for (a, b) in s.iter_mut().zip(o.samples()) {
            *a += k * b;
        }
    }
    Waveform::new(s, target.sample_rate(), target.kind())
}

/// Executes every assignment of `plan`. Frame `(m, l)` draws from substream
/// `m * L + l`, the same key the single-channel batch uses, so an ideal demux
/// reproduces [`PhotonicEngine::batched`] exactly. With finite crosstalk each
/// wavelength picks up `10^(dB/10)` of the intensity of every other
/// wavelength sharing its spatial channel and slot, in both detector arms.
pub fn execute_plan(
    data: ArrayView2<f64>,
    weights: ArrayView2<f64>,
    plan: &ChannelPlan,
    engine: &PhotonicEngine,
) -> Result<Array2<f64>> {
    validate_plan(plan)?;
    let (m, n) = data.dim();
    let (l, n_w) = weights.dim();
    if (m, n, l, n_w)
        != (
            plan.n_data_rows,
            plan.n_inputs,
            plan.n_weight_rows,
            plan.n_inputs,
        )
    {
        return Err(Error::dim(format!(
            "plan is for {}x{} by {}x{}, got {m}x{n} by {l}x{n_w}",
            plan.n_data_rows, plan.n_inputs, plan.n_weight_rows, plan.n_inputs
        )));
    }
    let data_rows: Vec<Vec<f64>> = data.rows().into_iter().map(|r| r.to_vec()).collect();
    let weight_rows: Vec<Vec<f64>> = weights.rows().into_iter().map(|r| r.to_vec()).collect();
    let (cfg, cal) = (&engine.cfg, &engine.cal);
    let key = |a: &Assignment| (a.data_row * l + a.weight_row) as u64;

    let mut out = Array2::zeros((m, l));
    if plan.crosstalk_db == f64::NEG_INFINITY {
        let vals: Result<Vec<(Assignment, f64)>> = plan
            .assignments
            .par_iter()
            .map(|a| {
                let v = weighted_sum_keyed(
                    &data_rows[a.data_row],
                    &weight_rows[a.weight_row],
                    cfg,
                    cal,
                    key(a),
                )?;
                Ok((*a, v))
            })
            .collect();
        for (a, v) in vals? {
            out[[a.data_row, a.weight_row]] = v;
        }
        return Ok(out);
    }

    // co-propagating groups: same slot and spatial channel
    let mut groups: Vec<Vec<Assignment>> = Vec::new();
    let mut sorted = plan.assignments.clone();
    sorted.sort_by_key(|a| (a.slot, a.spatial, a.wavelength));
    for a in sorted {
        match groups.last_mut() {
            Some(g) if g[0].slot == a.slot && g[0].spatial == a.spatial => g.push(a),
            _ => groups.push(vec![a]),
        }
    }
    let k = plan.leakage();
    let vals: Result<Vec<Vec<(Assignment, f64)>>> = groups
        .par_iter()
        .map(|g| {
            let frames: Vec<_> = g
                .iter()
                .map(|a| {
                    optical_frame(
                        cfg,
                        &data_rows[a.data_row],
                        &weight_rows[a.weight_row],
                        key(a),
                        cal.found_sync_offset,
                    )
                })
                .collect::<Result<_>>()?;
            g.iter()
                .enumerate()
                .map(|(i, a)| {
                    let others_up: Vec<&Waveform> = frames
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, f)| &f.upper)
                        .collect();
                    let others_lo: Vec<&Waveform> = frames
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, f)| &f.lower)
                        .collect();
                    let upper = add_leak(&frames[i].upper, &others_up, k)?;
                    let lower = add_leak(&frames[i].lower, &others_lo, k)?;
                    let (_, v) = detect_frame(cfg, &upper, &lower, frames[i].n_symbols, key(a))?;
                    Ok((*a, cal.apply(v)))
                })
                .collect()
        })
        .collect();
    for (a, v) in vals?.into_iter().flatten() {
        out[[a.data_row, a.weight_row]] = v;
    }
    Ok(out)
}

/// Operations per second: a multiply and an add per symbol on every
/// concurrently active channel, derated by the guard interval.
pub fn throughput_estimate(
    plan: &ChannelPlan,
    symbol_rate: f64,
    guard_symbols: usize,
) -> Result<f64> {
    if !(symbol_rate > 0.0 && symbol_rate.is_finite()) {
        return Err(Error::Config(format!(
            "symbol rate must be positive, got {symbol_rate}"
        )));
    }
    let n = plan.n_inputs as f64;
    let duty = n / (n + guard_symbols as f64);
    Ok(2.0 * symbol_rate * plan.parallel_channels() as f64 * duty)
}

/// Human-readable rate such as `100 GOPS` or `10 TOPS`.
pub fn format_ops(ops_per_second: f64) -> String {
    let (value, unit) = [
        (1e15, "POPS"),
        (1e12, "TOPS"),
        (1e9, "GOPS"),
        (1e6, "MOPS"),
        (1e3, "kOPS"),
    ]
    .into_iter()
    .find(|(scale, _)| ops_per_second >= *scale)
    .map(|(scale, unit)| (ops_per_second / scale, unit))
    .unwrap_or((ops_per_second, "OPS"));
    let text = format!("{value:.3}");
    let text = text.trim_end_matches('0').trim_end_matches('.');
    format!("{text} {unit}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64) -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| rng.gen_range(lo..=1.0))
    }

    #[test]
    fn plan_examples() {
        let p = plan_matmul(1, 4, 1, 1, 1).unwrap();
        assert_eq!((p.assignments.len(), p.n_slots()), (1, 1));
        let p = plan_matmul(2, 784, 1, 2, 1).unwrap();
        assert_eq!((p.assignments.len(), p.n_slots()), (2, 1));
        assert_eq!(p.parallel_channels(), 2);
        let p = plan_matmul(3, 8, 2, 2, 2).unwrap();
        assert_eq!((p.assignments.len(), p.n_slots()), (6, 2));
        assert!(p.parallel_channels() <= 4);
        validate_plan(&p).unwrap();
        assert!(plan_matmul(0, 1, 1, 1, 1).is_err());
    }

    #[test]
    fn validator_rejects_broken_plans() {
        let good = plan_matmul(3, 4, 3, 2, 2).unwrap();
        let mut dup = good.clone();
        dup.assignments[1] = dup.assignments[0];
        assert!(validate_plan(&dup).is_err());
        let mut clash = good.clone();
        clash.assignments[1].spatial = clash.assignments[0].spatial;
        assert!(validate_plan(&clash).is_err());
        let mut short = good.clone();
        short.assignments.pop();
        assert!(validate_plan(&short).is_err());
        assert!(good.clone().with_crosstalk(3.0).is_err());
    }

    #[test]
    fn plan_json_round_trip() {
        let p = plan_matmul(2, 3, 2, 2, 1).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"crosstalk_db\":null"));
        assert_eq!(serde_json::from_str::<ChannelPlan>(&text).unwrap(), p);
        let q = p.with_crosstalk(-30.0).unwrap();
        let back: ChannelPlan = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        assert_eq!(back.crosstalk_db, -30.0);
    }

    #[test]
    fn throughput_examples() {
        let one = plan_matmul(1, 784, 1, 1, 1).unwrap();
        assert_eq!(throughput_estimate(&one, 50e9, 0).unwrap(), 1.0e11);
        assert_eq!(format_ops(1.0e11), "100 GOPS");
        let hundred = plan_matmul(100, 784, 1, 100, 1).unwrap();
        assert_eq!(throughput_estimate(&hundred, 50e9, 0).unwrap(), 1.0e13);
        assert_eq!(format_ops(1.0e13), "10 TOPS");
        assert_eq!(throughput_estimate(&one, 1.0, 0).unwrap(), 2.0);
        let guarded = throughput_estimate(&one, 1.0, 784).unwrap();
        assert_eq!(guarded, 1.0);
        assert!(throughput_estimate(&one, 0.0, 0).is_err());
        assert_eq!(format_ops(2.0), "2 OPS");
        assert_eq!(format_ops(1.25e10), "12.5 GOPS");
    }

    #[test]
    fn ideal_demux_equals_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = random(&mut rng, 2, 16, 0.0);
        let w = random(&mut rng, 3, 16, -1.0);
        let engine = PhotonicEngine::noiseless();
        let plan = plan_matmul(2, 16, 3, 2, 2).unwrap();
        let par = execute_plan(d.view(), w.view(), &plan, &engine).unwrap();
        let seq = engine.batched(d.view(), w.view()).unwrap();
        for (a, b) in par.iter().zip(&seq) {
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3));
        }
        assert!(execute_plan(w.view(), d.view(), &plan, &engine).is_err());
    }

    #[test]
    fn noisy_ideal_demux_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = random(&mut rng, 3, 20, 0.0);
        let w = random(&mut rng, 2, 20, -1.0);
        let engine = PhotonicEngine::calibrated(EngineConfig::default()).unwrap();
        let plan = plan_matmul(3, 20, 2, 2, 1).unwrap();
        let par = execute_plan(d.view(), w.view(), &plan, &engine).unwrap();
        assert_eq!(par, engine.batched(d.view(), w.view()).unwrap());
    }

    #[test]
    fn crosstalk_error_grows_toward_zero_db() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = random(&mut rng, 4, 24, 0.0);
        let w = random(&mut rng, 2, 24, -1.0);
        let engine = PhotonicEngine::noiseless();
        let ideal_plan = plan_matmul(4, 24, 2, 4, 1).unwrap();
        let ideal = execute_plan(d.view(), w.view(), &ideal_plan, &engine).unwrap();
        let mut last = 0.0;
        for db in [-60.0, -40.0, -30.0, -20.0, -10.0, -3.0, 0.0] {
            let plan = ideal_plan.clone().with_crosstalk(db).unwrap();
            let got = execute_plan(d.view(), w.view(), &plan, &engine).unwrap();
            let err = got
                .iter()
                .zip(&ideal)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err >= last, "{db} dB: {err} < {last}");
            last = err;
        }
        assert!(last > 0.1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn plans_satisfy_invariants(m in 1usize..=16, l in 1usize..=16, w in 1usize..=8, s in 1usize..=8) {
            let p = plan_matmul(m, 3, l, w, s).unwrap();
            prop_assert!(validate_plan(&p).is_ok());
            prop_assert_eq!(p.assignments.len(), m * l);
            prop_assert!(p.parallel_channels() <= w * s);
        }

        #[test]
        fn parallel_matches_sequential(m in 1usize..=4, l in 1usize..=4, n in 1usize..=12, w in 1usize..=3, s in 1usize..=3, seed: u64) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = random(&mut rng, m, n, 0.0);
            let wt = random(&mut rng, l, n, -1.0);
            let engine = PhotonicEngine::noiseless();
            let plan = plan_matmul(m, n, l, w, s).unwrap();
            let par = execute_plan(d.view(), wt.view(), &plan, &engine).unwrap();
            let seq = engine.batched(d.view(), wt.view()).unwrap();
            for (a, b) in par.iter().zip(&seq) {
                prop_assert!((a - b).abs() <= 1e-9 * b.abs().max(1e-3));
            }
        }
    }
}
