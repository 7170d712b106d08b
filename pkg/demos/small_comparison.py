"""A pocket-sized CNN versus ZUPT run: 4 subjects, 2 epochs, subject 4 held out.

The full experiment (10 subjects, 25 epochs) takes about 17 minutes; use
``gaitlab compare`` or the acceptance suite for that.
"""
from dataclasses import replace

from gaitlab import experiments as exp, reports
from gaitlab.config import DatasetConfig, ExperimentConfig

cfg = ExperimentConfig(dataset=DatasetConfig(n_subjects=4, trials_per_pattern=1), held_out=(4,))
cfg = replace(cfg, train=replace(cfg.train, epochs=2))

result = exp.run_compare(cfg)
print(reports.comparison_table(result.report))
