use super::VaeConfig;

/// Linear KL warm-up: `beta_max · min(1, epoch / warmup_epochs)`, constant
/// `beta_max` when `warmup_epochs` is 0. `epoch` counts from 0.
pub fn beta_schedule(epoch: usize, config: &VaeConfig) -> f64 {
    if config.warmup_epochs == 0 {
        return config.beta_max;
    }
    let ramp = (epoch as f64 / config.warmup_epochs as f64).min(1.0);
    config.beta_max * ramp
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(beta_max: f64, warmup_epochs: usize) -> VaeConfig {
        VaeConfig {
            beta_max,
            warmup_epochs,
            ..VaeConfig::default()
        }
    }

    #[test]
    fn ramp_points() {
        assert_eq!(beta_schedule(0, &cfg(1.0, 10)), 0.0);
        assert_eq!(beta_schedule(5, &cfg(1.0, 10)), 0.5);
        assert_eq!(beta_schedule(25, &cfg(0.5, 10)), 0.5);
        assert_eq!(beta_schedule(0, &cfg(0.7, 0)), 0.7);
    }

    #[test]
    fn non_decreasing_and_bounded() {
        for warmup in [0, 1, 3, 20] {
            let c = cfg(0.8, warmup);
            let betas: Vec<f64> = (0..60).map(|e| beta_schedule(e, &c)).collect();
            assert!(betas.windows(2).all(|w| w[0] <= w[1]));
            assert!(betas.iter().all(|&b| (0.0..=0.8).contains(&b)));
        }
    }
}
