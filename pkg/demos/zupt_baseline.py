"""ZUPT stride lengths on clean and noisy walks of each gait."""
import numpy as np

from gaitlab import synth, zupt
from gaitlab.types import GaitType

noise = synth.SensorNoiseConfig.default()
for gait in GaitType:
    profile = synth.sample_profile(gait, subject_seed=7)
    trial, anns = synth.generate_trial(profile, 12, seed=4)
    truth = np.array([a.stride_length_m for a in anns])

    clean = zupt.zupt_estimates(trial, anns, zupt.ZuptConfig.ideal())
    noisy_trial = synth.apply_sensor_model(trial, noise, seed=4)
    noisy = zupt.zupt_estimates(noisy_trial, anns)
    found = len(zupt.zupt_segment(zupt.detect_stationary(noisy_trial)))

    print(f"{gait.value:8s} clean max err {np.max(np.abs(clean - truth)):.1e} m | "
          f"noisy rmse {np.sqrt(np.mean((noisy - truth) ** 2)):.3f} m, "
          f"{found} strides found for {len(anns)}")
