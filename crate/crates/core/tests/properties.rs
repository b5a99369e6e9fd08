//! Property tests for the cross-module invariants: unitarity, energy
//! conservation, grid monotonicity, waveform determinism, and scheduler
//! validity under random demand sets.

use csqfc_core::fock::{apply_qfc, QfcSetting, TwoModeFockState};
use csqfc_core::pump::{render_waveform, EdfaTransient, PumpChannelConfig, SwitchSchedule};
use csqfc_core::scheduler::{schedule, validate_schedule, PartyLinkRequest, RateConstraint};
use csqfc_core::spectral::{
    conversion_efficiency, converted_frequency, selectable_channel_count, ChannelPlan,
    EfficiencyLaw, Frequency, GridDirection,
};
use num_complex::Complex64;
use proptest::prelude::*;

fn arb_state(cutoff: usize) -> impl Strategy<Value = TwoModeFockState> {
    let dim = (cutoff + 1) * (cutoff + 1);
    proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim).prop_filter_map(
        "zero-norm state",
        move |parts| {
            let mut amps: Vec<Complex64> = parts
                .into_iter()
                .map(|(re, im)| Complex64::new(re, im))
                .collect();
            for n_s in 0..=cutoff {
                for n_c in 0..=cutoff {
                    if n_s + n_c > cutoff {
                        amps[n_s * (cutoff + 1) + n_c] = Complex64::ZERO;
                    }
                }
            }
            TwoModeFockState::from_unnormalized(cutoff, amps).ok()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn qfc_preserves_norm_and_inverts(
        state in arb_state(4),
        theta in 0.0..std::f64::consts::PI,
        phi in 0.0..std::f64::consts::TAU,
    ) {
        let setting = QfcSetting::new(theta, phi, 1, 1).unwrap();
        let out = apply_qfc(&state, &setting);
        prop_assert!((out.norm_sq() - 1.0).abs() < 1e-12);

        // total photon number distribution is untouched
        let before = state.total_photon_distribution();
        let after = out.total_photon_distribution();
        for (b, a) in before.iter().zip(&after) {
            prop_assert!((b - a).abs() < 1e-12);
        }

        let back = apply_qfc(&out, &setting.inverse());
        for n_s in 0..=4 {
            for n_c in 0..=(4 - n_s) {
                let diff = (back.amplitude(n_s, n_c) - state.amplitude(n_s, n_c)).norm();
                prop_assert!(diff < 1e-10, "diff {diff} at ({n_s}, {n_c})");
            }
        }
    }

    #[test]
    fn efficiency_law_peaks_at_the_optimal_power(
        a in 0.05f64..1.0,
        b in 0.005f64..0.05,
        fraction in 0.0f64..2.0,
    ) {
        let law = EfficiencyLaw::new(a, b).unwrap();
        let p_star = law.optimal_power_mw();
        let eta = law.efficiency(fraction * p_star).unwrap();
        let peak = law.efficiency(p_star).unwrap();
        prop_assert!(eta <= peak + 1e-12);
        prop_assert!((peak - a).abs() < 1e-12);
        prop_assert!(eta >= 0.0 && eta / a <= 1.0 + 1e-12);
    }

    #[test]
    fn conversion_probability_tracks_the_unit_peak_law(
        b in 0.005f64..0.05,
        fraction in 0.0f64..2.0,
    ) {
        let p = fraction * (std::f64::consts::FRAC_PI_2.powi(2) / b);
        let theta = csqfc_core::theta_from_power(b, p).unwrap();
        let direct = conversion_efficiency(1.0, b, p).unwrap();
        prop_assert!((csqfc_core::conversion_probability(theta) - direct).abs() < 1e-12);
    }

    #[test]
    fn energy_conservation_on_paired_plans(
        base in 150_000i64..250_000,
        count in 1u32..32,
        spacing in 1i64..100,
        index in 1u32..32,
    ) {
        prop_assume!(index <= count);
        let signal = Frequency::from_ghz(2 * base + 40_000).unwrap();
        let pumps = ChannelPlan::new(
            Frequency::from_ghz(base).unwrap(),
            spacing,
            count,
            GridDirection::Ascending,
        ).unwrap();
        let outputs = ChannelPlan::new(
            converted_frequency(signal, pumps.frequency(1).unwrap()).unwrap(),
            spacing,
            count,
            GridDirection::Descending,
        ).unwrap();
        // channel i of each plan sums to the signal exactly
        let pump = pumps.frequency(index).unwrap();
        let output = outputs.frequency(index).unwrap();
        prop_assert_eq!(pump.ghz() + output.ghz(), signal.ghz());
        prop_assert_eq!(
            outputs.channel_of(converted_frequency(signal, pump).unwrap()),
            Some(index)
        );
    }

    #[test]
    fn channel_count_monotonicity(
        low in 150_000i64..200_000,
        width in 0i64..10_000,
        extra in 0i64..5_000,
        spacing in 1i64..200,
        coarser in 0i64..100,
    ) {
        let lo = Frequency::from_ghz(low).unwrap();
        let hi = Frequency::from_ghz(low + width).unwrap();
        let hi_wider = Frequency::from_ghz(low + width + extra).unwrap();
        let n = selectable_channel_count(lo, hi, spacing).unwrap();
        let n_wider = selectable_channel_count(lo, hi_wider, spacing).unwrap();
        prop_assert!(n_wider >= n);
        let n_coarser = selectable_channel_count(lo, hi, spacing + coarser).unwrap();
        prop_assert!(n_coarser <= n);
    }

    #[test]
    fn rendered_waveforms_are_deterministic_and_single_active(
        interval in 2.0f64..20.0,
        rise_fall in 0.2f64..1.0,
        steady in 50.0f64..500.0,
    ) {
        let configs = vec![
            PumpChannelConfig {
                channel_index: 1,
                frequency: Frequency::from_ghz(189_731).unwrap(),
                steady_power_mw: steady,
                shutter_rise_fall_us: rise_fall,
            },
            PumpChannelConfig {
                channel_index: 2,
                frequency: Frequency::from_ghz(189_756).unwrap(),
                steady_power_mw: steady,
                shutter_rise_fall_us: rise_fall,
            },
        ];
        let schedule = SwitchSchedule::alternating(&[1, 2], interval, 4.0 * interval).unwrap();
        let dt = rise_fall / 50.0;
        let first = render_waveform(&configs, &schedule, dt, &EdfaTransient::default()).unwrap();
        let second = render_waveform(&configs, &schedule, dt, &EdfaTransient::default()).unwrap();
        prop_assert_eq!(&first, &second);

        // outside transition windows at most one channel is above 10%
        let edge = rise_fall / csqfc_core::pump::smoothstep_10_90_fraction();
        prop_assume!(interval > edge + 2.0 * dt);
        for i in 0..first.n_samples() {
            let t = i as f64 * dt;
            if t % interval <= edge + dt {
                continue;
            }
            let active = first.active_channels_at(t, 0.1).unwrap();
            prop_assert!(active.len() <= 1, "channels {:?} at t = {t}", active);
        }
    }

    #[test]
    fn greedy_schedules_validate_and_grow_monotonically(
        demands in proptest::collection::vec((0u32..6, 0u32..6, 1u32..4), 1..8),
        channel_count in 1u32..5,
    ) {
        let parties = ["p0", "p1", "p2", "p3", "p4", "p5"];
        let mut requests = Vec::new();
        for (a, b, demand) in demands {
            if a != b {
                requests.push(PartyLinkRequest::new(parties[a as usize], parties[b as usize], demand).unwrap());
            }
        }
        prop_assume!(!requests.is_empty());
        let plan = ChannelPlan::new(
            Frequency::from_ghz(189_383).unwrap(),
            25,
            channel_count,
            GridDirection::Ascending,
        ).unwrap();
        let constraint = RateConstraint {
            tau_s_us: 0.5,
            tau_c_us: 0.1,
            round_period_us: 10.0,
        };
        let rounds = schedule(&requests, &plan, &constraint).unwrap();
        validate_schedule(
            &rounds,
            &requests,
            &plan,
            Frequency::from_ghz(384_233).unwrap(),
        ).unwrap();

        // monotonicity: dropping the last request never takes more rounds
        let mut fewer = requests.clone();
        fewer.pop();
        let fewer_rounds = schedule(&fewer, &plan, &constraint).unwrap();
        prop_assert!(fewer_rounds.len() <= rounds.len());
    }
}
