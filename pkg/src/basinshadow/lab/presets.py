"""The seven shipped scenarios, one per claim of the dichotomy."""

PRESETS: dict[str, str] = {}

PRESETS["THM31_SUPER"] = """\
schema_version: 1
name: THM31_SUPER
description: (z^2, w^2) on the bidisc; polydisc certificates at probes (1-d, d) against preimages of (eps, eps)
map: {family: PRODUCT, P: [0, 0, 1], Q: [0, 0, 1]}
target: {eps: 0.01}
depth: {K: 6, Kmax: 60}
probes:
  delta_ladder: {base: 2, start: 3, stop: 40}
  count: 0
thresholds: [3, 5, 8]
grid: {box: [-1.05, 1.05, -1.05, 1.05], resolution: 512}
seed: 0
"""

PRESETS["THM32_GEOM"] = """\
schema_version: 1
name: THM32_GEOM
description: (z^2 + 0.3z, w^2 + 0.3w); stratified probes against the backward orbit of (0, 0)
map: {family: PRODUCT, P: [0, 0.3, 1], Q: [0, 0.3, 1]}
target: {eps: 0.0}
depth: {K: 10, Kmax: 60}
probes: {count: 200}
thresholds: [3, 5, 8]
grid: {box: [-1.2, 1.0, -1.1, 1.1], resolution: 512}
seed: 0
"""

PRESETS["THM33_MIXED_SUPER_GEOM"] = """\
schema_version: 1
name: THM33_MIXED_SUPER_GEOM
description: (z^2, w^2 + 0.3w); projection certificate on the disk factor against the backward orbit of (0, 0)
map: {family: PRODUCT, P: [0, 0, 1], Q: [0, 0.3, 1]}
target: {eps: 0.0}
depth: {K: 6, Kmax: 60}
probes:
  delta_ladder: {base: 2, start: 3, stop: 40}
  count: 0
thresholds: [3, 5, 8]
grid: {box: [-1.2, 1.0, -1.1, 1.1], resolution: 512}
seed: 0
"""

PRESETS["THM33_PARABOLIC"] = """\
schema_version: 1
name: THM33_PARABOLIC
description: (z^2, w + w^2); parabolic second factor, heuristic membership
map: {family: PRODUCT, P: [0, 0, 1], Q: [0, 1, 1]}
target: {eps: 0.0}
depth: {K: 6, Kmax: 60}
probes:
  delta_ladder: {base: 2, start: 3, stop: 40}
  count: 0
thresholds: [3, 5, 8]
grid: {box: [-1.5, 0.5, -1.2, 1.2], resolution: 256}
seed: 0
options: {parabolic_seed: -0.5}
"""

PRESETS["THM41_SKEW_SQUARE"] = """\
schema_version: 1
name: THM41_SKEW_SQUARE
description: (z^2, w^2 + 0.1z); limit leaf through (0, 1), probes (0, 1-d) against preimages of (eps, 0)
map: {family: SKEW_W2_PLUS_AZ, a: 0.1}
target: {eps: 0.01}
depth: {K: 6, Kmax: 60}
probes:
  delta_ladder: [1.0e-3, 1.0e-9, 1.0e-20, 1.0e-38]
  count: 0
thresholds: [1, 2, 3]
grid: {box: [-1.1, 1.1, -1.1, 1.1], resolution: 256}
seed: 0
options: {R: 2.25, generations: 25}
"""

PRESETS["THM41_GENERAL_A"] = """\
schema_version: 1
name: THM41_GENERAL_A
description: (z^2, w^2 + 0.5z); product over the 2^n limit sheets on |z| < eta^(1/2^n)
map: {family: SKEW_W2_PLUS_AZ, a: 0.5}
target: {eps: 0.01}
depth: {K: 5, Kmax: 60}
probes:
  delta_ladder: [1.0e-3, 1.0e-9, 1.0e-20, 1.0e-38]
  count: 0
thresholds: [1, 2, 3]
grid: {box: [-1.3, 1.3, -1.3, 1.3], resolution: 256}
seed: 0
options: {sheets: 4, eta: 0.2}
"""

PRESETS["THM42_SKEW_QUADRATIC"] = """\
schema_version: 1
name: THM42_SKEW_QUADRATIC
description: (0.1z + z^2, w^2 + 0.01w + 0.001z); PLUS limit leaf, probes (0, f(0)-d) against the backward orbit of (0, 0)
map: {family: SKEW_W2_CW_BZ, a: 0.1, b: 0.001, c: 0.01}
target: {eps: 0.0}
depth: {K: 6, Kmax: 60}
probes:
  delta_ladder: [1.0e-3, 1.0e-9, 1.0e-20, 1.0e-38]
  count: 0
thresholds: [1, 2, 3]
grid: {box: [-1.3, 1.3, -1.3, 1.3], resolution: 256}
seed: 0
options: {R: 2.1, generations: 15, theta_count: 32}
"""
