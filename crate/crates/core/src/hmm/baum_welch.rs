use crate::error::{Error, Result};
use crate::hmm::model::{HmmParams, ObservationSequence};
use crate::prob::SimplexVector;

/// Baum-Welch EM for maximum-likelihood HMM parameters.
///
/// Runs scaled forward-backward E-steps and exact M-step ratio updates from
/// the given initialization. Returns the final parameters together with the
/// per-iteration log-likelihood trace (the likelihood of the parameters
/// entering each iteration), which EM guarantees to be non-decreasing.
/// Stops after `max_iters` updates or as soon as an iteration improves the
/// log-likelihood by less than `tol`.
pub fn baum_welch(
    w: &ObservationSequence,
    n_states: usize,
    n_symbols: usize,
    init: &HmmParams,
    max_iters: usize,
    tol: f64,
) -> Result<(HmmParams, Vec<f64>)> {
    if max_iters == 0 {
        return Err(Error::invalid("baum_welch needs max_iters >= 1"));
    }
    if init.n_states() != n_states || init.n_symbols() != n_symbols {
        return Err(Error::invalid(format!(
            "init has dimensions ({}, {}), expected ({n_states}, {n_symbols})",
            init.n_states(),
            init.n_symbols()
        )));
    }
    if w.n_symbols() != n_symbols {
        return Err(Error::invalid("observation alphabet does not match"));
    }

    let mut params = init.clone();
    let mut trace = Vec::new();
    for iter in 0..max_iters {
        let (ll, updated) = em_step(&params, w)?;
        trace.push(ll);
        if iter > 0 && ll - trace[iter - 1] < tol {
            break;
        }
        params = updated;
    }
    Ok((params, trace))
}

/// One scaled forward-backward pass plus the M-step. Returns the
/// log-likelihood of the incoming parameters and the updated parameters.
fn em_step(params: &HmmParams, w: &ObservationSequence) -> Result<(f64, HmmParams)> {
    let s = params.n_states();
    let v = params.n_symbols();
    let n = w.len();
    let obs = w.symbols();

    // Scaled forward pass. alpha[t][i] = P(state i | w_0..t) after
    // normalization; scales[t] holds the per-step normalizers whose logs
    // sum to the log-likelihood.
    let mut alpha = vec![vec![0.0; s]; n];
    let mut scales = vec![0.0; n];
    for i in 0..s {
        alpha[0][i] = params.initial()[i] * params.emission(i)[obs[0] as usize];
    }
    scales[0] = normalize_step(&mut alpha[0], 0)?;
    for t in 1..n {
        let (done, rest) = alpha.split_at_mut(t);
        let prev = &done[t - 1];
        let cur = &mut rest[0];
        for j in 0..s {
            let mut acc = 0.0;
            for i in 0..s {
                acc += prev[i] * params.transition(i)[j];
            }
            cur[j] = acc * params.emission(j)[obs[t] as usize];
        }
        scales[t] = normalize_step(cur, t)?;
    }
    let log_likelihood: f64 = scales.iter().map(|&c| libm::log(c)).sum();

    // Scaled backward pass, divided by the forward scales so that
    // gamma[t][i] = alpha[t][i] * beta[t][i] without further normalization.
    let mut beta = vec![vec![0.0; s]; n];
    for i in 0..s {
        beta[n - 1][i] = 1.0;
    }
    for t in (0..n - 1).rev() {
        for i in 0..s {
            let mut acc = 0.0;
            for j in 0..s {
                acc += params.transition(i)[j]
                    * params.emission(j)[obs[t + 1] as usize]
                    * beta[t + 1][j];
            }
            beta[t][i] = acc / scales[t + 1];
        }
    }

    // Accumulate the expected counts.
    let mut gamma_sum_all = vec![0.0; s]; // sum over all t of gamma_t
    let mut gamma_sum_trans = vec![0.0; s]; // sum over t < n-1
    let mut xi_sum = vec![0.0; s * s];
    let mut emit_sum = vec![0.0; s * v];
    let mut gamma0 = vec![0.0; s];
    for t in 0..n {
        for i in 0..s {
            let g = alpha[t][i] * beta[t][i];
            if t == 0 {
                gamma0[i] = g;
            }
            gamma_sum_all[i] += g;
            if t + 1 < n {
                gamma_sum_trans[i] += g;
            }
            emit_sum[i * v + obs[t] as usize] += g;
        }
        if t + 1 < n {
            for i in 0..s {
                for j in 0..s {
                    xi_sum[i * s + j] += alpha[t][i]
                        * params.transition(i)[j]
                        * params.emission(j)[obs[t + 1] as usize]
                        * beta[t + 1][j]
                        / scales[t + 1];
                }
            }
        }
    }

    let initial = SimplexVector::from_unnormalized(gamma0)?;
    let mut transitions = Vec::with_capacity(s);
    let mut emissions = Vec::with_capacity(s);
    for i in 0..s {
        transitions.push(if gamma_sum_trans[i] > 0.0 {
            SimplexVector::from_unnormalized(xi_sum[i * s..(i + 1) * s].to_vec())?
        } else {
            // State never occupied before the last step: no evidence, keep
            // the row uniform.
            SimplexVector::uniform(s)
        });
        emissions.push(if gamma_sum_all[i] > 0.0 {
            SimplexVector::from_unnormalized(emit_sum[i * v..(i + 1) * v].to_vec())?
        } else {
            SimplexVector::uniform(v)
        });
    }
    Ok((log_likelihood, HmmParams::new(initial, transitions, emissions)?))
}

fn normalize_step(row: &mut [f64], t: usize) -> Result<f64> {
    let c: f64 = row.iter().sum();
    if !(c > 0.0) {
        return Err(Error::invalid(format!(
            "observation at position {t} has zero probability under the initialization"
        )));
    }
    for x in row.iter_mut() {
        *x /= c;
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hmm::model::{forward_log_likelihood, path_log_likelihood};
    use crate::prob::{Phase, RngStream, StreamId};

    fn simplex(v: &[f64]) -> SimplexVector {
        SimplexVector::new(v.to_vec()).unwrap()
    }

    fn random_params(s: usize, w: usize, rng: &mut RngStream) -> HmmParams {
        let conc_s = vec![1.0; s];
        let conc_w = vec![1.0; w];
        HmmParams::new(
            crate::prob::sample_dirichlet(&conc_s, rng).unwrap(),
            (0..s)
                .map(|_| crate::prob::sample_dirichlet(&conc_s, rng).unwrap())
                .collect(),
            (0..s)
                .map(|_| crate::prob::sample_dirichlet(&conc_w, rng).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn trace_is_monotone_on_random_instances() {
        let mut rng = RngStream::new(11, StreamId::new(0, 0, Phase::Generate));
        for round in 0..5 {
            let s = 2 + round % 2;
            let w = 3;
            let truth = random_params(s, w, &mut rng);
            let (_, obs) = crate::hmm::model::hmm_generate(&truth, 120, &mut rng).unwrap();
            let init = random_params(s, w, &mut rng);
            let (_, trace) = baum_welch(&obs, s, w, &init, 30, 0.0).unwrap();
            for pair in trace.windows(2) {
                assert!(
                    pair[1] >= pair[0] - 1e-8,
                    "trace decreased: {} -> {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }

    #[test]
    fn single_state_is_a_fixed_point() {
        let params = HmmParams::new(
            simplex(&[1.0]),
            vec![simplex(&[1.0])],
            vec![simplex(&[0.5, 0.5])],
        )
        .unwrap();
        let obs = ObservationSequence::new(vec![0, 1, 0, 1], 2).unwrap();
        let (updated, _) = baum_welch(&obs, 1, 2, &params, 1, 0.0).unwrap();
        for v in 0..2 {
            assert!((updated.emission(0)[v] - params.emission(0)[v]).abs() < 1e-12);
        }
        assert!((updated.initial()[0] - 1.0).abs() < 1e-12);
        assert!((updated.transition(0)[0] - 1.0).abs() < 1e-12);
    }

    /// One EM update on an S=2, N=2 instance against posteriors obtained by
    /// enumerating all four paths directly.
    #[test]
    fn single_update_matches_enumerated_posteriors() {
        let params = HmmParams::new(
            simplex(&[0.7, 0.3]),
            vec![simplex(&[0.6, 0.4]), simplex(&[0.25, 0.75])],
            vec![simplex(&[0.8, 0.2]), simplex(&[0.35, 0.65])],
        )
        .unwrap();
        let obs = ObservationSequence::new(vec![1, 0], 2).unwrap();

        // Path posteriors proportional to P(w, path | params).
        let mut post = std::collections::HashMap::new();
        let mut total = 0.0;
        for a in 0..2u32 {
            for b in 0..2u32 {
                let p = path_log_likelihood(&params, &[a, b], &obs).unwrap().exp();
                post.insert((a, b), p);
                total += p;
            }
        }
        for p in post.values_mut() {
            *p /= total;
        }
        let gamma0: Vec<f64> = (0..2u32)
            .map(|i| post[&(i, 0)] + post[&(i, 1)])
            .collect();
        let gamma1: Vec<f64> = (0..2u32)
            .map(|j| post[&(0, j)] + post[&(1, j)])
            .collect();
        // M-step by hand: initial = gamma0; transitions from xi / gamma;
        // emissions from gamma at matching symbols.
        let mut want_trans = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                want_trans[i][j] = post[&(i as u32, j as u32)] / gamma0[i];
            }
        }
        // w = (1, 0): symbol 1 at t=0, symbol 0 at t=1.
        let mut want_emit = [[0.0; 2]; 2];
        for i in 0..2 {
            let occ = gamma0[i] + gamma1[i];
            want_emit[i][0] = gamma1[i] / occ;
            want_emit[i][1] = gamma0[i] / occ;
        }

        let (updated, trace) = baum_welch(&obs, 2, 2, &params, 1, 0.0).unwrap();
        assert_eq!(trace.len(), 1);
        let ll = forward_log_likelihood(&params, &obs).unwrap();
        assert!((trace[0] - ll).abs() < 1e-10);
        for i in 0..2 {
            assert!((updated.initial()[i] - gamma0[i]).abs() < 1e-10);
            for j in 0..2 {
                assert!(
                    (updated.transition(i)[j] - want_trans[i][j]).abs() < 1e-10,
                    "transition {i}->{j}"
                );
            }
            for v in 0..2 {
                assert!(
                    (updated.emission(i)[v] - want_emit[i][v]).abs() < 1e-10,
                    "emission {i}:{v}"
                );
            }
        }
    }

    #[test]
    fn impossible_observation_is_an_error() {
        let params = HmmParams::new(
            simplex(&[1.0]),
            vec![simplex(&[1.0])],
            vec![simplex(&[1.0, 0.0])],
        )
        .unwrap();
        let obs = ObservationSequence::new(vec![1], 2).unwrap();
        assert!(baum_welch(&obs, 1, 2, &params, 5, 0.0).is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let params = HmmParams::new(
            simplex(&[1.0]),
            vec![simplex(&[1.0])],
            vec![simplex(&[0.5, 0.5])],
        )
        .unwrap();
        let obs = ObservationSequence::new(vec![0], 2).unwrap();
        assert!(baum_welch(&obs, 2, 2, &params, 5, 0.0).is_err());
        assert!(baum_welch(&obs, 1, 3, &params, 5, 0.0).is_err());
        assert!(baum_welch(&obs, 1, 2, &params, 0, 0.0).is_err());
    }
}
