"""Mental-workload classification from physiological signals with spiking networks.

Subpackages and modules:

* :mod:`.signal` filtering and spectra; :mod:`.features` windowing and features
* :mod:`.snn` LIF encoding and the two spiking classifiers
* :mod:`.baseline` stratified splits and logistic regression
* :mod:`.metrics`, :mod:`.stats`, :mod:`.compare` evaluation and model comparison
* :mod:`.synth`, :mod:`.pipeline`, :mod:`.cli` data generation and orchestration
"""

__version__ = "0.1.0"
