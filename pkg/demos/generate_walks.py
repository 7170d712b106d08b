"""Draw one subject per gait, synthesise a walk and look at its strides."""
import numpy as np

from gaitlab import metrics, synth
from gaitlab.types import Foot, GaitType

for gait in GaitType:
    profile = synth.sample_profile(gait, subject_seed=3)
    left, left_anns = synth.generate_trial(profile, 8, seed=1, foot=Foot.LEFT)
    _, right_anns = synth.generate_trial(profile, 8, seed=1, foot=Foot.RIGHT)
    lengths = np.array([a.stride_length_m for a in left_anns])
    params = metrics.gait_parameters(left_anns, right_anns, left.sample_rate_hz)
    print(f"{gait.value:8s} {len(left)} samples, stride {lengths.mean():.3f} +/- {lengths.std():.3f} m, "
          f"symmetry index {params.symmetry_index:.2f}")

# sensor errors on top of the ideal signal
profile = synth.sample_profile(GaitType.SHUFFLE, 3)
ideal, anns = synth.generate_trial(profile, 10, seed=2)
noisy = synth.apply_sensor_model(ideal, synth.SensorNoiseConfig.default(), seed=2)
print("accel error rms (m/s^2):", np.sqrt(np.mean((noisy.accel - ideal.accel) ** 2)).round(3))

# yaw augmentation keeps every label
rotated, same = synth.augment(ideal, anns, seed=5)
print("labels kept:", [a.stride_length_m for a in same] == [a.stride_length_m for a in anns])
