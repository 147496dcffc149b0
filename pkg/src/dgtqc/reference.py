"""Reference values reported for the university-website UI labeling dataset.

Class counts per trusted labeler, their verification results, the
trusted-set-size sweep and the per-worker predictor table. These are fixtures
for the synthetic generator and for arithmetic checks; nothing in the
computation path reads them.
"""

from dgtqc.corpus import TRUSTED_VOCABULARY

# Counts of pre-defined classes per trusted labeler (custom classes excluded).
# Order follows TRUSTED_VOCABULARY.
TRUSTED_COUNTS = {
    "AA": (571, 218, 34, 15, 15, 164, 65, 1073, 87, 3, 1, 44, 51, 14, 661, 253, 237, 10, 5, 1030),
    "GD": (458, 36, 15, 42, 1, 280, 9, 321, 5, 0, 3, 80, 36, 0, 55, 368, 25, 0, 0, 1564),
    "KK": (204, 78, 27, 39, 0, 148, 13, 931, 302, 0, 116, 96, 38, 0, 253, 152, 22, 0, 0, 1211),
    "MA": (293, 34, 221, 37, 2, 312, 42, 619, 659, 0, 0, 83, 27, 9, 286, 632, 36, 3, 12, 2042),
    "NE": (323, 30, 99, 26, 0, 98, 6, 708, 97, 1, 52, 236, 36, 14, 177, 948, 0, 0, 0, 1680),
    "PV": (579, 48, 19, 10, 3, 409, 37, 945, 0, 2, 0, 76, 41, 7, 225, 181, 39, 1, 1, 1670),
    "PE": (326, 23, 11, 12, 0, 258, 48, 623, 96, 0, 0, 80, 28, 0, 151, 211, 25, 3, 0, 608),
    "SV": (368, 71, 22, 18, 2, 128, 239, 375, 5, 4, 20, 63, 43, 1, 280, 226, 20, 19, 19, 1322),
    "SMr": (71, 50, 1, 0, 0, 11, 3, 612, 82, 0, 4, 0, 40, 1, 204, 181, 3, 0, 14, 405),
    "SMl": (344, 62, 0, 106, 1, 23, 260, 720, 462, 0, 1, 47, 33, 1, 198, 8, 10, 0, 0, 990),
    "VY": (509, 23, 124, 0, 0, 133, 6, 1022, 8, 0, 2, 58, 2, 22, 81, 128, 10, 23, 41, 1263),
}

TRUSTED_UIS = {"AA": 56, "GD": 44, "KK": 44, "MA": 44, "NE": 44, "PV": 44, "PE": 43,
               "SV": 44, "SMr": 45, "SMl": 43, "VY": 44}
TRUSTED_ELEMENTS = {"AA": 4896, "GD": 3520, "KK": 3927, "MA": 5349, "NE": 4994, "PV": 4659,
                    "PE": 2649, "SV": 3929, "SMr": 1781, "SMl": 3266, "VY": 3746}
TRUSTED_EUI = {"AA": 87.4, "GD": 80.0, "KK": 89.3, "MA": 121.6, "NE": 113.5, "PV": 105.9,
               "PE": 61.6, "SV": 89.3, "SMr": 39.6, "SMl": 76.0, "VY": 85.1}
CLASS_TOTALS = (4046, 673, 573, 305, 24, 1964, 728, 7949, 1803, 10, 199, 863, 375, 69,
                2571, 3288, 427, 59, 92, 13785)

# (verified UIs, precision mean, precision sd, SC mean, SC sd, Q), in trusted-set order.
VERIFICATION = {
    "VY": (43, 0.928, 0.150, 95.5, 7.0, 0.886),
    "SV": (44, 0.974, 0.056, 80.4, 12.9, 0.783),
    "KK": (44, 0.944, 0.105, 82.5, 11.5, 0.779),
    "GD": (44, 0.899, 0.078, 84.3, 8.1, 0.758),
    "PV": (44, 0.916, 0.180, 81.7, 17.1, 0.748),
    "SMl": (43, 0.895, 0.078, 77.5, 11.6, 0.694),
    "NE": (44, 0.851, 0.197, 78.3, 24.2, 0.666),
    "AA": (55, 0.890, 0.151, 73.0, 15.1, 0.649),
    "PE": (43, 0.779, 0.147, 72.0, 17.2, 0.561),
    "MA": (44, 0.720, 0.136, 75.1, 12.2, 0.541),
    "SMr": (45, 0.959, 0.082, 56.0, 29.0, 0.537),
}
TRUSTED_ORDER = tuple(VERIFICATION)

# Testing subsets per trusted-set size:
# (UIs removed, % removed, workers, accepted HITs, rejected HITs, precision mean, sd)
SUBSETS = {
    0: (None, None, 20, 272, 205, 0.566, 0.453),
    1: (43, 8.79, 19, 253, 175, 0.595, 0.439),
    2: (87, 17.72, 18, 223, 159, 0.584, 0.454),
    3: (131, 26.68, 17, 201, 127, 0.621, 0.438),
    4: (175, 35.64, 14, 167, 108, 0.611, 0.436),
    5: (219, 44.60, 12, 145, 72, 0.709, 0.355),
    6: (262, 53.25, 9, 92, 61, 0.612, 0.408),
    7: (306, 62.20, 5, 71, 8, 0.900, 0.120),
    8: (360, 74.53, 4, 42, 7, 0.855, 0.145),
    9: (403, 81.91, 2, 22, 0, 1.000, 0.000),
}

# Model per trusted-set size: (R^2, df numerator, df denominator, F, p); None when absent.
SWEEP_MODELS = {
    1: (0.658, 1, 17, 32.7, None),
    2: (0.855, 1, 16, 94.5, None),
    3: (0.789, 1, 15, 56.0, None),
    4: (0.716, 1, 12, 30.3, None),
    5: (0.539, 1, 10, 11.7, 0.007),
    6: (0.789, 1, 7, 26.1, 0.001),
    7: (0.107, 1, 3, 0.4, 0.591),
    8: (0.501, 1, 2, 2.0, 0.292),
    9: None,
}

# Per-worker predictors at trusted-set size 2 (trusted labelers VY, SV):
# (precision, p vs VY, p vs SV, avg p, attempted HITs, ToT s, EUI, GOF_PL)
BASELINE_ROWS = (
    (0.974, 0.856, 0.837, 0.847, 39, 191, 56.31, 0.492),
    (0.0, 0.091, 0.158, 0.124, 34, 50, 4.62, 0.617),
    (1.0, 0.276, 0.937, 0.606, 32, 558, 70.13, 0.706),
    (0.813, 0.686, 0.987, 0.837, 32, 325, 37.16, 0.640),
    (0.731, 0.974, 0.704, 0.839, 26, 102, 24.00, 0.589),
    (0.0, 0.002, 0.002, 0.002, 25, 63, 5.24, 0.115),
    (0.0, 0.066, 0.012, 0.039, 23, 126, 4.39, 0.354),
    (0.0, 0.458, 0.158, 0.308, 19, 77, 9.21, 0.562),
    (0.0, 0.019, 0.023, 0.021, 19, 94, 6.11, 0.406),
    (1.0, 0.482, 0.517, 0.499, 18, 619, 57.72, 0.640),
    (1.0, 0.686, 0.704, 0.695, 18, 232, 39.06, 0.600),
    (1.0, 0.608, 0.875, 0.741, 16, 1370, 60.81, 0.592),
    (1.0, 0.987, 0.837, 0.912, 16, 568, 65.19, 0.529),
    (1.0, 0.913, 0.751, 0.832, 14, 427, 71.43, 0.627),
    (1.0, 0.738, 0.837, 0.788, 14, 1326, 68.43, 0.639),
    (0.0, 0.259, 0.032, 0.146, 14, 57, 7.21, 0.296),
    (1.0, 0.913, 0.751, 0.832, 12, 837, 76.83, 0.659),
    (0.0, 0.003, 0.010, 0.006, 11, 355, 9.27, 0.431),
)
# R^2 of precision on each column of BASELINE_ROWS, and the two-factor model.
BASELINE_R2 = {"p_VY": 0.658, "p_SV": 0.895, "avg_p": 0.855, "attempted": 0.01,
               "tot_amt": 0.401, "eui_amt": 0.875, "gof_pl": 0.480}
TWO_FACTOR = {"r_squared": 0.941, "beta_avg_p": 0.472, "beta_eui_amt": 0.539,
              "f": 118.8, "df": (2, 15)}

# Aggregated worker class counts in the 20-worker testing set, most frequent first.
TESTING_SET_COUNTS = {
    "link": 8604, "button": 3134, "image": 3036, "navigation": 885, "panel": 362,
    "dropdown": 359, "input": 330, "backgroundimage": 244, "table": 86, "check": 27,
}


def trusted_proportions(labeler_id: str) -> dict[str, float]:
    counts = TRUSTED_COUNTS[labeler_id]
    total = sum(counts)
    return {c: n / total for c, n in zip(TRUSTED_VOCABULARY, counts)}
