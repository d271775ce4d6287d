import math

import numpy as np

SR = 16000


def white(n, power_db, rng):
    return rng.standard_normal(n) * math.sqrt(10 ** (power_db / 10))
