"""Known-good states for the single-ancilla circuit attack, frozen as data.

The sixteen conditional attacker states (registers C, E) for each pair of
Alice/Bob outcomes, the detection-decoder outputs for the x,x case, and the
information-decoder outputs for the x,x case. Amplitude order |00>, |01>,
|10>, |11>.
"""

import math

import numpy as np

from hbbqss.attack import Case

_R = 1.0 / math.sqrt(2.0)
_I = 1.0j


def _half(*amps):
    return 0.5 * np.array(amps, dtype=complex)


def _bell(*amps):
    return _R * np.array(amps, dtype=complex)


# (case, alice sign, bob sign) -> conditional state of C, E
CASE_CONDITIONALS = {
    (Case.XX, "+", "+"): _half(1, 1, 1, -1),
    (Case.XX, "+", "-"): _half(1, -1, 1, 1),
    (Case.XX, "-", "+"): _half(1, 1, -1, 1),
    (Case.XX, "-", "-"): _half(1, -1, -1, -1),
    (Case.XY, "+", "+"): _half(1, -_I, 1, _I),
    (Case.XY, "+", "-"): _half(1, _I, 1, -_I),
    (Case.XY, "-", "+"): _half(1, -_I, -1, -_I),
    (Case.XY, "-", "-"): _half(1, _I, -1, _I),
    (Case.YX, "+", "+"): _half(1, 1, -_I, _I),
    (Case.YX, "+", "-"): _half(1, -1, -_I, -_I),
    (Case.YX, "-", "+"): _half(1, 1, _I, -_I),
    (Case.YX, "-", "-"): _half(1, -1, _I, _I),
    (Case.YY, "+", "+"): _half(1, -_I, -_I, 1),
    (Case.YY, "+", "-"): _half(1, _I, -_I, -1),
    (Case.YY, "-", "+"): _half(1, -_I, _I, -1),
    (Case.YY, "-", "-"): _half(1, _I, _I, 1),
}

# Detection circuit output for the x,x case (CNOT from C onto E, then the
# basis transform on C): Bell-type forms whose computational readout decides
# the announcement.
DETECTION_TARGETS_XX = {
    ("+", "+"): _bell(0, 1, 1, 0),
    ("+", "-"): _bell(1, 0, 0, -1),
    ("-", "+"): _bell(1, 0, 0, 1),
    ("-", "-"): _bell(0, -1, 1, 0),
}

# Information circuit output for the x,x case (basis transform on C only).
INFO_TARGETS_XX = {
    ("+", "+"): _bell(1, 0, 0, 1),
    ("+", "-"): _bell(1, 0, 0, -1),
    ("-", "+"): _bell(0, 1, 1, 0),
    ("-", "-"): _bell(0, -1, 1, 0),
}

# The four-qubit state (A, B, C, E) after the entangling circuit.
POST_INTERACTION = np.zeros(16, dtype=complex)
POST_INTERACTION[0b0000] = POST_INTERACTION[0b0101] = POST_INTERACTION[0b1010] = 0.5
POST_INTERACTION[0b1111] = -0.5
